//! One PASS/FAIL line per acceptance criterion.

use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spinrestrict::dyson_polymer::{
    factorization_residual, kp_certificate, random_loop_diagram, truncated_dyson, DysonModel, KPParams,
};
use spinrestrict::fcs_entanglement::{
    basis_projector, best_conditioned_correlation, fcs_expectation, fcs_restriction, gell_mann, Conditioning, FcsModel,
};
use spinrestrict::gibbs_engine::{classical_restriction, gibbs_state, ground_state, GroundMethod, QuantumState};
use spinrestrict::ising_exact::{mean_magnetization, rate_function, szego_f, toeplitz_generating, toeplitz_log_generating, IsingParams, QuadratureRule};
use spinrestrict::locality_probe::{nonlocality_scan, ProbeSpec};
use spinrestrict::mobius_potential::{beta_max, classical_potential, gibbs_measure_from_potential, ground_classical_potential, mobius_weights};
use spinrestrict::spin_algebra::{build_hamiltonian, hermitian_eigh, pauli, CMatrix, Interaction, Lattice, ObservableSpectrum};
use spinrestrict::C64;

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(id: usize, name: &str, limit: Option<Duration>, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let out = std::panic::catch_unwind(std::panic::AssertUnwindSafe(f)).unwrap_or_else(|e| Outcome {
        pass: false,
        detail: format!("panicked: {}", e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default()),
    });
    let elapsed = start.elapsed();
    let in_time = limit.is_none_or(|l| elapsed < l);
    let pass = out.pass && in_time;
    let budget = limit.map(|l| format!(", limit {} s", l.as_secs())).unwrap_or_default();
    println!(
        "{} {id:>2} {name}: {} ({:.2} s{budget})",
        if pass { "PASS" } else { "FAIL" },
        out.detail,
        elapsed.as_secs_f64()
    );
    pass
}

fn sites(n: usize) -> Vec<i64> {
    (0..n as i64).collect()
}

fn ising(j: f64, h: f64) -> Interaction {
    Interaction::transverse_ising(j, h)
}

/// `log Tr e^{−βH} − |Λ| log 2` from the dense spectrum.
fn log_normalized_partition(phi: &Interaction, beta: f64, s: &[i64]) -> f64 {
    if s.is_empty() {
        return 0.0;
    }
    let lat = Lattice::new(s.to_vec(), 2).unwrap();
    let h = build_hamiltonian(phi, &lat).unwrap().to_dense().unwrap();
    let (vals, _) = hermitian_eigh(&h);
    let e0 = vals[0];
    let z: f64 = vals.iter().map(|e| (-beta * (e - e0)).exp()).sum();
    -beta * e0 + z.ln() - s.len() as f64 * 2f64.ln()
}

fn subsets(s: &[i64]) -> impl Iterator<Item = Vec<i64>> + '_ {
    (0..1usize << s.len()).map(move |mask| s.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &x)| x).collect())
}

fn mobius_consistency() -> Outcome {
    let phi = ising(1.0, 1.0);
    let lam = sites(6);
    let mut worst = 0.0f64;
    for beta in [0.1, 0.5, 2.0] {
        let w = mobius_weights(&phi, beta, &lam, None).unwrap();
        for sub in subsets(&lam) {
            worst = worst.max((w.sum_over(&sub) - log_normalized_partition(&phi, beta, &sub)).abs());
        }
    }
    Outcome { pass: worst <= 1e-10, detail: format!("max |Σw − log tr| = {worst:.2e} over 64 subvolumes × 3 β (tol 1e-10)") }
}

fn chain_state(phi: &Interaction, n: usize, beta: Option<f64>) -> QuantumState {
    let lat = Lattice::chain(n, 2).unwrap();
    let h = build_hamiltonian(phi, &lat).unwrap();
    match beta {
        Some(b) => gibbs_state(&h, &lat, b).unwrap(),
        None => ground_state(&h, &lat, GroundMethod::Dense, 0).unwrap(),
    }
}

fn gibbs_reconstruction() -> Outcome {
    let phi = ising(1.0, 1.0);
    let mut worst = 0.0f64;
    let mut cases = 0;
    for n in 1..=6 {
        let s = sites(n);
        for x in [pauli::x(), pauli::z()] {
            let spec = ObservableSpectrum::new(&x).unwrap();
            for beta in [Some(0.1), Some(0.5), Some(2.0), None] {
                let st = chain_state(&phi, n, beta);
                let psi = match beta {
                    Some(b) => classical_potential(&phi, &spec, b, &s).unwrap(),
                    None => ground_classical_potential(&st, &spec, &s).unwrap(),
                };
                let (rebuilt, _) = gibbs_measure_from_potential(&psi, &s).unwrap();
                let ed = classical_restriction(&st, &spec, &s).unwrap();
                for (a, b) in rebuilt.probs().iter().zip(ed.probs()) {
                    worst = worst.max((a - b).abs());
                }
                cases += 1;
            }
        }
    }
    Outcome { pass: worst <= 1e-10, detail: format!("max |μ_Ψ − μ_ED| = {worst:.2e} over {cases} cases (tol 1e-10)") }
}

fn high_temperature() -> Outcome {
    let b = beta_max(&ising(1.0, 1.0), 1.0).unwrap();
    let e = 1f64.exp();
    let closed = (1.0 + 1.0 / (e + 2.0 * e * e)).ln();
    let err = (b.beta - closed).abs();
    Outcome { pass: err <= 1e-9 && !b.unbounded, detail: format!("beta_max = {:.12}, closed form {closed:.12}, |Δ| = {err:.2e} (tol 1e-9)", b.beta) }
}

fn parity_nullity() -> Outcome {
    let spec = ObservableSpectrum::new(&pauli::z()).unwrap();
    // σ^z spectrum is ordered (−1, +1); index 0 is a flipped spin
    let mut odd = 0.0f64;
    for n in [4usize, 6] {
        let st = chain_state(&ising(0.2, 1.0), n, None);
        let mu = classical_restriction(&st, &spec, &sites(n)).unwrap();
        for (idx, &p) in mu.probs().iter().enumerate() {
            if mu.config(idx).iter().filter(|&&c| c == 0).count() % 2 == 1 {
                odd = odd.max(p);
            }
        }
    }
    let st = chain_state(&ising(1.0, 1.0), 2, None);
    let mu = classical_restriction(&st, &spec, &sites(2)).unwrap();
    let s2 = (5f64.sqrt() - 2.0).powi(2);
    let up = mu.prob_of_values(&[1.0, 1.0]).unwrap();
    let down = mu.prob_of_values(&[-1.0, -1.0]).unwrap();
    let err = (up - 1.0 / (1.0 + s2)).abs().max((down - s2 / (1.0 + s2)).abs());
    Outcome {
        pass: odd <= 1e-12 && err <= 1e-10,
        detail: format!("max odd-flip μ = {odd:.2e} (tol 1e-12); N=2 exact values off by {err:.2e} (tol 1e-10)"),
    }
}

fn toeplitz_vs_ed() -> Outcome {
    let n_sites = 14;
    let lat = Lattice::chain(n_sites, 2).unwrap();
    let h = build_hamiltonian(&ising(1.0, 2.0), &lat).unwrap();
    let gs = ground_state(&h, &lat, GroundMethod::Iterative, 1).unwrap();
    let psi = gs.vector().unwrap();
    let p = IsingParams::new(2.0, 1.0).unwrap();
    let quad = QuadratureRule::trapezoid(4096).unwrap();
    let mut worst = 0.0f64;
    for n in 1..=4 {
        let start = (n_sites - n) / 2;
        for t in [-0.5, 0.5] {
            let ed: f64 = psi
                .iter()
                .enumerate()
                .map(|(b, a)| {
                    let m: f64 = (start..start + n).map(|i| if b >> (n_sites - 1 - i) & 1 == 0 { 1.0 } else { -1.0 }).sum();
                    a.norm_sqr() * (t * m).exp()
                })
                .sum();
            worst = worst.max((toeplitz_generating(n, t, &p, &quad).unwrap() - ed).abs());
        }
    }
    Outcome { pass: worst <= 1e-3, detail: format!("max |det M_n − ED| = {worst:.2e} for n ≤ 4, t = ±0.5 (tol 1e-3)") }
}

fn szego() -> Outcome {
    let p = IsingParams::new(2.0, 1.0).unwrap();
    let quad = QuadratureRule::trapezoid(4096).unwrap();
    let f = szego_f(0.5, &p, &quad).unwrap();
    let ns = [1usize, 2, 4, 8, 16, 32, 64];
    let gaps: Vec<f64> = ns.iter().map(|&n| (toeplitz_log_generating(n, 0.5, &p, &quad).unwrap() / n as f64 - f).abs()).collect();
    let decreasing = gaps.windows(2).all(|w| w[1] < w[0]);
    let at64 = *gaps.last().unwrap();
    let f0 = szego_f(0.0, &p, &quad).unwrap();
    let big = IsingParams::new(100.0, 1.0).unwrap();
    let f100 = (szego_f(0.5, &big, &quad).unwrap() - 0.5).abs();
    let grid: Vec<f64> = (0..=40).map(|i| -2.0 + 0.1 * i as f64).collect();
    let fs: Vec<f64> = grid.iter().map(|&t| szego_f(t, &p, &quad).unwrap()).collect();
    let min_d2 = fs.windows(3).map(|w| w[0] - 2.0 * w[1] + w[2]).fold(f64::INFINITY, f64::min);
    Outcome {
        pass: decreasing && at64 <= 1e-4 && f0 == 0.0 && f100 <= 1e-3 && min_d2 >= -1e-9,
        detail: format!(
            "gap decreasing {decreasing}, gap(n=64) = {at64:.4e} (tol 1e-4); F(0) = {f0:e}; |F(0.5) − 0.5| at g=100 = {f100:.2e} (tol 1e-3); min Δ²F = {min_d2:.2e} (tol −1e-9)"
        ),
    }
}

fn rate() -> Outcome {
    let p = IsingParams::new(2.0, 1.0).unwrap();
    let quad = QuadratureRule::trapezoid(4096).unwrap();
    let m0 = mean_magnetization(&p, &quad);
    let at_mean = rate_function(m0, &p, &quad).unwrap().value;
    let grid: Vec<f64> = (0..=20).map(|i| -1.0 + 0.1 * i as f64).collect();
    let vals: Vec<f64> = grid.iter().map(|&m| rate_function(m, &p, &quad).unwrap().value).collect();
    let min_i = vals.iter().copied().fold(f64::INFINITY, f64::min);
    let min_d2 = vals.windows(3).map(|w| w[0] - 2.0 * w[1] + w[2]).fold(f64::INFINITY, f64::min);
    Outcome {
        pass: at_mean <= 1e-8 && min_i >= 0.0 && min_d2 >= -1e-8,
        detail: format!("I(F′(0)) = {at_mean:.2e} (tol 1e-8); min I = {min_i:.2e}; min Δ²I = {min_d2:.2e} (tol −1e-8) on m ∈ [−1, 1] step 0.1"),
    }
}

fn locality() -> Outcome {
    let probes: Vec<ProbeSpec> = [1, 2].iter().map(|&l| ProbeSpec::new(0.2, l, 3).unwrap()).collect();
    let r: Vec<_> = nonlocality_scan(&probes, 0).into_iter().map(|r| r.unwrap()).collect();
    let (a, b) = (&r[0], &r[1]);
    let pass = b.p_zero < a.p_zero && b.p_one > a.p_one && b.gap > a.gap && a.gap > 0.0;
    Outcome {
        pass,
        detail: format!(
            "L=1 (N={}): p_zero {:.3e}, p_one {:.4}, gap {:.4}; L=2 (N={}): p_zero {:.3e}, p_one {:.4}, gap {:.4}",
            a.n, a.p_zero, a.p_one, a.gap, b.n, b.p_zero, b.p_one, b.gap
        ),
    }
}

fn dyson_parts(n: usize, eps: f64) -> (DysonModel, CMatrix, CMatrix) {
    let model = DysonModel::ising(1.0, eps, ObservableSpectrum::new(&pauli::x()).unwrap()).unwrap();
    let lat = Lattice::chain(n, 2).unwrap();
    let h0 = build_hamiltonian(&model.phi0, &lat).unwrap().to_dense().unwrap();
    let v = build_hamiltonian(&model.upsilon, &lat).unwrap().to_dense().unwrap();
    (model, h0, v)
}

fn dyson_truncation() -> Outcome {
    let beta = 0.5;
    let (_, h0, v) = dyson_parts(3, 0.2);
    let (vals, vecs) = hermitian_eigh(&(&h0 + &v));
    let exact = CMatrix::from_fn(8, 8, |r, c| vecs[(r, c)] * (-beta * vals[c]).exp()) * vecs.adjoint();
    let mut errs = Vec::new();
    let mut within = true;
    for order in 0..=3 {
        let tr = truncated_dyson(&h0, &v, beta, order).unwrap();
        let diff = &tr.matrix - &exact;
        let err = diff.clone().svd(false, false).singular_values.max();
        within &= err <= tr.bound;
        errs.push((err, tr.bound));
    }
    let decreasing = errs.windows(2).all(|w| w[1].0 < w[0].0);
    let list = errs.iter().map(|(e, b)| format!("{e:.2e}≤{b:.2e}")).collect::<Vec<_>>().join(", ");
    Outcome { pass: within && decreasing, detail: format!("‖error‖ vs bound for N = 0..3: {list}; decreasing {decreasing}") }
}

fn factorization() -> Outcome {
    let (model, _, _) = dyson_parts(6, 0.2);
    let s = sites(6);
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut res, mut vol, mut root) = (0.0f64, 0.0f64, 0.0f64);
    let mut accepted = 0;
    let mut drawn = 0;
    while accepted < 20 && drawn < 10_000 {
        drawn += 1;
        let d = random_loop_diagram(&mut rng, 2.0, &s, 2).unwrap();
        let x: Vec<usize> = s.iter().map(|_| rng.gen_range(0..2)).collect();
        let r = factorization_residual(&d, &model, &s, &x).unwrap();
        if r.polymers < 2 {
            continue;
        }
        accepted += 1;
        res = res.max(r.residual);
        vol = vol.max(r.volume_delta);
        root = root.max(r.root_delta);
    }
    Outcome {
        pass: accepted == 20 && res <= 1e-10 && vol <= 1e-12 && root <= 1e-12,
        detail: format!("{accepted} multi-polymer diagrams (order 4, |Λ| = 6): residual {res:.2e} (tol 1e-10), volume Δ {vol:.2e}, root Δ {root:.2e} (tol 1e-12)"),
    }
}

fn kp_at(kappa: f64, beta: f64) -> spinrestrict::dyson_polymer::KpCertificate {
    let model = DysonModel::ising(1.0, (-2.0 * kappa).exp(), ObservableSpectrum::new(&pauli::x()).unwrap()).unwrap();
    let p = KPParams::new(0.5, 0.5, 0.5, 0.5, 2.0, beta, &model).unwrap();
    kp_certificate(&p, &model.upsilon, &sites(12)).unwrap()
}

fn kotecky_preiss() -> Outcome {
    let good = kp_at(6.0, 20.0);
    let bad = kp_at(0.0, 20.0);
    let lhs = |c: &spinrestrict::dyson_polymer::KpCertificate| c.entries.iter().map(|e| e.lhs).collect::<Vec<f64>>();
    let monotone = |sweep: Vec<Vec<f64>>| sweep.windows(2).all(|w| w[0].iter().zip(&w[1]).all(|(a, b)| b <= a));
    let kappa_sweep = monotone([3.0, 4.0, 5.0, 6.0].iter().map(|&k| lhs(&kp_at(k, 20.0))).collect());
    let beta_sweep = monotone([5.0, 10.0, 15.0, 20.0].iter().map(|&b| lhs(&kp_at(6.0, b))).collect());
    Outcome {
        pass: good.passes && !bad.passes && kappa_sweep && beta_sweep,
        detail: format!(
            "κ=6: passes {} (worst ratio {:.2e}); κ=0: passes {} (worst ratio {:.2e}); LHS monotone in κ {kappa_sweep}, in β {beta_sweep}",
            good.passes,
            good.worst_ratio(),
            bad.passes,
            bad.worst_ratio()
        ),
    }
}

fn fcs() -> Outcome {
    let aklt = FcsModel::aklt();
    let marg = (0..3).map(|a| (fcs_expectation(&aklt, &[basis_projector(3, a)]).unwrap() - 1.0 / 3.0).norm()).fold(0.0, f64::max);
    let r = fcs_restriction(&aklt, 3).unwrap();
    let uni = r.distribution.probs().iter().map(|p| (p - 1.0 / 27.0).abs()).fold(0.0, f64::max);
    let cond = Conditioning::new(5, vec![0, 1, 2, 0, 1, 2, 0, 1]).unwrap();
    let corr = best_conditioned_correlation(&aklt, &cond, &gell_mann(3), 5).unwrap().value;
    let u = CMatrix::from_row_slice(2, 2, &[C64::new(0.0, 1.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, -1.0)]);
    let c = [0.6, 0.8];
    let degenerate = FcsModel::new(c.iter().map(|&x| &u * C64::from(x)).collect()).unwrap();
    let cond2 = Conditioning::new(5, vec![0, 1, 1, 0, 0, 1, 1, 0]).unwrap();
    let deg = best_conditioned_correlation(&degenerate, &cond2, &gell_mann(2), 5).unwrap().value;
    Outcome {
        pass: marg <= 1e-12 && uni <= 1e-12 && corr > 0.01 && deg <= 1e-12,
        detail: format!("marginal error {marg:.2e}, 3-site uniformity error {uni:.2e} (tol 1e-12); conditioned correlation at n=5 {corr:.4} (> 0.01); degenerate model {deg:.2e} (tol 1e-12)"),
    }
}

fn determinism() -> Outcome {
    let runs = [
        vec!["locality", "--epsilon", "0.2", "--L", "1,2", "--buffer", "1", "--seed", "9"],
        vec!["dyson-check", "--beta", "0.5", "--epsilon", "0.2", "--N", "4", "--samples", "8", "--seed", "9"],
        vec!["fcs", "--n", "4,5", "--samples", "6", "--seed", "9", "--format", "csv"],
    ];
    let mut same = true;
    for args in &runs {
        let out = || Command::new(env!("CARGO_BIN_EXE_spinrestrict")).args(args).output().unwrap();
        let (a, b) = (out(), out());
        same &= a.status.success() && b.status.success() && a.stdout == b.stdout && !a.stdout.is_empty();
    }
    Outcome { pass: same, detail: format!("{} commands run twice with equal seeds, byte-identical {same}", runs.len()) }
}

fn main() {
    let secs = Duration::from_secs;
    let results = [
        check(1, "Möbius consistency", Some(secs(10)), mobius_consistency),
        check(2, "Gibbs reconstruction", Some(secs(30)), gibbs_reconstruction),
        check(3, "high-temperature bound", None, high_temperature),
        check(4, "parity nullity", None, parity_nullity),
        check(5, "Toeplitz vs ED", Some(secs(120)), toeplitz_vs_ed),
        check(6, "Szegő convergence", None, szego),
        check(7, "rate function", None, rate),
        check(8, "non-quasi-locality trend", Some(secs(300)), locality),
        check(9, "Dyson truncation", None, dyson_truncation),
        check(10, "factorization lemma", None, factorization),
        check(11, "KP certificate", None, kotecky_preiss),
        check(12, "finitely correlated states", None, fcs),
        check(13, "determinism", None, determinism),
    ];
    let passed = results.iter().filter(|&&p| p).count();
    println!("acceptance: {passed}/{} PASS", results.len());
}
