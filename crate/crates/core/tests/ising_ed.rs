//! Free-fermion formulas against exact diagonalization of open chains.

use spinrestrict::gibbs_engine::{ground_state, GroundMethod};
use spinrestrict::ising_exact::{mean_magnetization, toeplitz_generating, IsingParams, QuadratureRule};
use spinrestrict::spin_algebra::{build_hamiltonian, Interaction, Lattice};
use spinrestrict::C64;

fn ground(n_sites: usize, g: f64) -> Vec<C64> {
    let lat = Lattice::chain(n_sites, 2).unwrap();
    let h = build_hamiltonian(&Interaction::transverse_ising(1.0, g), &lat).unwrap();
    let gs = ground_state(&h, &lat, GroundMethod::Iterative, 3).unwrap();
    gs.vector().unwrap().to_vec()
}

/// `⟨e^{t Σ_{i∈block} σ^z_i}⟩` for a centred block in the ground state of an
/// open chain with `J = 1`, `h = g`.
fn ed_generating(psi: &[C64], n_sites: usize, block: usize, ts: &[f64]) -> Vec<f64> {
    let start = (n_sites - block) / 2;
    ts.iter()
        .map(|&t| {
            psi.iter()
                .enumerate()
                .map(|(b, a)| {
                    let m: f64 = (start..start + block).map(|i| if (b >> (n_sites - 1 - i)) & 1 == 0 { 1.0 } else { -1.0 }).sum();
                    a.norm_sqr() * (t * m).exp()
                })
                .sum()
        })
        .collect()
}

#[test]
fn toeplitz_matches_bulk_of_fourteen_sites() {
    let p = IsingParams::new(2.0, 1.0).unwrap();
    let quad = QuadratureRule::trapezoid(4096).unwrap();
    let psi = ground(14, 2.0);
    for n in 1..=4 {
        let ed = ed_generating(&psi, 14, n, &[-0.5, 0.5]);
        for (&t, e) in [-0.5, 0.5].iter().zip(&ed) {
            let det = toeplitz_generating(n, t, &p, &quad).unwrap();
            assert!((det - e).abs() <= 1e-3, "n={n} t={t}: {det} vs {e}");
        }
    }
}

#[test]
fn magnetization_matches_bulk() {
    let p = IsingParams::new(3.0, 1.0).unwrap();
    let quad = QuadratureRule::trapezoid(4096).unwrap();
    // d/dt at t = 0 by central differences of the one-site generating function
    let ed = ed_generating(&ground(12, 3.0), 12, 1, &[-1e-5, 1e-5]);
    let slope = (ed[1] - ed[0]) / 2e-5;
    assert!((slope - mean_magnetization(&p, &quad)).abs() < 1e-4);
}
