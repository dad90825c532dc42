use rand::seq::SliceRandom;
use rand::Rng;

use super::Diagram;
use crate::error::{Error, Result};

/// Diagram made of closed loops: each loop excites a nearest-neighbour bond
/// at one time and de-excites it at a later one, so `S₀ = S_n = ∅` unless
/// loops share sites.
pub fn random_loop_diagram<R: Rng + ?Sized>(rng: &mut R, beta: f64, sites: &[i64], loops: usize) -> Result<Diagram> {
    if sites.len() < 2 {
        return Err(Error::Domain("loops need at least two sites".into()));
    }
    if 2 * loops > super::MAX_ORDER {
        return Err(Error::Capability(format!("{loops} loops exceed order {}", super::MAX_ORDER)));
    }
    let mut times: Vec<f64> = Vec::with_capacity(2 * loops);
    while times.len() < 2 * loops {
        let t = rng.gen_range(0.0..beta);
        if t > 0.0 && times.iter().all(|&s| (s - t).abs() > 1e-9 * beta) {
            times.push(t);
        }
    }
    times.sort_by(f64::total_cmp);
    let mut owners: Vec<usize> = (0..2 * loops).map(|k| k / 2).collect();
    owners.shuffle(rng);
    let bonds: Vec<Vec<i64>> = (0..loops)
        .map(|_| {
            let i = rng.gen_range(0..sites.len() - 1);
            vec![sites[i], sites[i + 1]]
        })
        .collect();
    let b: Vec<Vec<i64>> = owners.iter().map(|&o| bonds[o].clone()).collect();
    let mut s = vec![Vec::new()];
    for bk in &b {
        let mut next: Vec<i64> = s.last().unwrap().clone();
        for i in bk {
            match next.iter().position(|x| x == i) {
                Some(p) => {
                    next.remove(p);
                }
                None => next.push(*i),
            }
        }
        s.push(next);
    }
    Diagram::new(beta, times, s, b)
}
