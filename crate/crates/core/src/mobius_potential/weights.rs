use std::collections::BTreeMap;

use rayon::prelude::*;

use super::{mobius_in_place, subset_sites, MAX_SITES};
use crate::error::{Error, Result};
use crate::gibbs_engine::{classical_restriction, gibbs_state};
use crate::spin_algebra::{build_hamiltonian, Interaction, Lattice, ObservableSpectrum};

/// Measurement outcomes `x_W` to condition the normalized trace on,
/// as (site, eigenvalue index) pairs.
#[derive(Clone, Debug)]
pub struct Conditioning {
    pub spec: ObservableSpectrum,
    pub config: Vec<(i64, usize)>,
}

impl Conditioning {
    pub fn new(spec: ObservableSpectrum, config: Vec<(i64, usize)>) -> Result<Self> {
        for (i, &(s, k)) in config.iter().enumerate() {
            if k >= spec.len() {
                return Err(Error::Domain(format!("eigenvalue index {k} out of range at site {s}")));
            }
            if config[..i].iter().any(|c| c.0 == s) {
                return Err(Error::Domain(format!("site {s} conditioned twice")));
            }
        }
        Ok(Conditioning { spec, config })
    }

    /// The part of the configuration on `sites`, in the order of `sites`.
    pub fn restrict(&self, sites: &[i64]) -> Vec<(i64, usize)> {
        sites
            .iter()
            .filter_map(|s| self.config.iter().find(|c| c.0 == *s).copied())
            .collect()
    }
}

/// `log tr^{x_W}(e^{−βH_B})` with `tr^{x_W}(O) = Tr(Q_W(x_W) O) / Tr(Q_W(x_W))`.
///
/// Only the conditioned sites inside `sites` matter; the rest cancel.
pub fn log_normalized_trace(phi: &Interaction, beta: f64, sites: &[i64], cond: Option<&Conditioning>) -> Result<f64> {
    let m = phi.local_dim();
    if sites.is_empty() {
        return Ok(0.0);
    }
    let lat = Lattice::new(sites.to_vec(), m)?;
    let h = build_hamiltonian(phi, &lat)?;
    let st = gibbs_state(&h, &lat, beta)?;
    let log_z = st.log_partition().unwrap();
    let inside = cond.map(|c| c.restrict(sites)).unwrap_or_default();
    if inside.is_empty() {
        return Ok(log_z - sites.len() as f64 * (m as f64).ln());
    }
    let spec = &cond.unwrap().spec;
    if spec.local_dim() != m {
        return Err(Error::Domain("observable and interaction local dimensions differ".into()));
    }
    let window: Vec<i64> = inside.iter().map(|c| c.0).collect();
    let cfg: Vec<usize> = inside.iter().map(|c| c.1).collect();
    let rank: usize = cfg.iter().map(|&k| spec.rank(k)).product();
    if rank == 0 {
        return Err(Error::SingularConditioning(format!("Tr Q_W vanishes for {inside:?}")));
    }
    let mu = classical_restriction(&st, spec, &window)?;
    let p = mu.prob(&cfg);
    if p <= 0.0 {
        return Err(Error::Numerical(format!("conditioned trace underflows for {inside:?}")));
    }
    let free = (sites.len() - window.len()) as f64;
    Ok(log_z + p.ln() - (rank as f64).ln() - free * (m as f64).ln())
}

/// Inclusion-exclusion weights `w(A)` and, when conditioned, `w^{x_W}(A)`
/// for every nonempty `A ⊆ Λ`.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightTable {
    pub beta: f64,
    sites: Vec<i64>,
    weights: BTreeMap<Vec<i64>, f64>,
    conditioned: BTreeMap<(Vec<i64>, Vec<(i64, usize)>), f64>,
}

impl WeightTable {
    pub fn sites(&self) -> &[i64] {
        &self.sites
    }

    /// Unconditioned `w(A)`; `A` in ascending order.
    pub fn weight(&self, a: &[i64]) -> Option<f64> {
        self.weights.get(a).copied()
    }

    /// `w^{x_W}(A)`, looked up through `x_{W∩A}`.
    pub fn conditioned(&self, a: &[i64], cond: &Conditioning) -> Option<f64> {
        let local = cond.restrict(a);
        if local.is_empty() {
            return self.weight(a);
        }
        self.conditioned.get(&(a.to_vec(), local)).copied()
    }

    /// Every stored entry: (A, x_{W∩A}, value), with an empty
    /// configuration for unconditioned weights.
    pub fn entries(&self) -> impl Iterator<Item = (&Vec<i64>, &[(i64, usize)], f64)> {
        self.weights
            .iter()
            .map(|(a, &w)| (a, &[][..], w))
            .chain(self.conditioned.iter().map(|((a, x), &w)| (a, x.as_slice(), w)))
    }

    /// `Σ_{A⊆sub} w(A)`.
    pub fn sum_over(&self, sub: &[i64]) -> f64 {
        self.weights
            .iter()
            .filter(|(a, _)| a.iter().all(|s| sub.contains(s)))
            .map(|(_, w)| w)
            .sum()
    }
}

fn weights_for(phi: &Interaction, beta: f64, sites: &[i64], cond: Option<&Conditioning>) -> Result<Vec<f64>> {
    let n = sites.len();
    let mut f: Vec<f64> = (0..(1usize << n))
        .into_par_iter()
        .map(|mask| log_normalized_trace(phi, beta, &subset_sites(sites, mask), cond))
        .collect::<Result<_>>()?;
    mobius_in_place(&mut f, n);
    Ok(f)
}

/// `w(A) = Σ_{B⊆A} (−1)^{|A∖B|} log tr(e^{−βH_B})` for all nonempty `A ⊆ Λ`,
/// plus the conditioned weights when `cond` is given.
pub fn mobius_weights(phi: &Interaction, beta: f64, sites: &[i64], cond: Option<&Conditioning>) -> Result<WeightTable> {
    if sites.len() > MAX_SITES {
        return Err(Error::Capability(format!("{} sites exceed the weight cap of {MAX_SITES}", sites.len())));
    }
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(Error::Domain(format!("β must be finite and non-negative, got {beta}")));
    }
    let mut sorted = sites.to_vec();
    sorted.sort_unstable();
    Lattice::new(sorted.clone(), phi.local_dim())?;

    let plain = weights_for(phi, beta, &sorted, None)?;
    let mut weights = BTreeMap::new();
    for (mask, w) in plain.iter().enumerate().skip(1) {
        weights.insert(subset_sites(&sorted, mask), *w);
    }
    let mut conditioned = BTreeMap::new();
    if let Some(c) = cond {
        if c.spec.local_dim() != phi.local_dim() {
            return Err(Error::Domain("observable and interaction local dimensions differ".into()));
        }
        let cw = weights_for(phi, beta, &sorted, Some(c))?;
        for (mask, w) in cw.iter().enumerate().skip(1) {
            let a = subset_sites(&sorted, mask);
            let local = c.restrict(&a);
            if !local.is_empty() {
                conditioned.insert((a, local), *w);
            }
        }
    }
    Ok(WeightTable { beta, sites: sorted, weights, conditioned })
}
