//! Conditional probabilities of the `σ^z` restriction of the transverse
//! Ising ground state, used as finite-volume evidence that the restriction
//! is not quasi-local.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gibbs_engine::{classical_restriction, ground_from_vector, QuantumState, NULL_PROBABILITY};
use crate::lanczos;
use crate::spin_algebra::{Lattice, ObservableSpectrum};
use crate::C64;

/// Largest chain handled without `allow_large`.
pub const DEFAULT_MAX_SITES: usize = 15;
/// Hard cap on the chain length.
pub const MAX_SITES: usize = 25;


/// Which `σ^z` value the unperturbed ground state carries.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldSign {
    /// `H = −Σσ^z − ε Σσ^xσ^x`; ground spins are `+1`.
    GroundIsUp,
    /// `H = Σ(σ^z + 1) − ε Σσ^xσ^x`; ground spins are `−1`.
    GroundIsDown,
}

impl FieldSign {
    /// `σ^z` value of an unflipped spin.
    pub fn ground_value(self) -> f64 {
        match self {
            FieldSign::GroundIsUp => 1.0,
            FieldSign::GroundIsDown => -1.0,
        }
    }
}

/// One conditioning experiment: `Γ_L = {−L², …, L²}` padded by `buffer`
/// sites on each side.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProbeSpec {
    pub epsilon: f64,
    pub l: usize,
    pub buffer: usize,
    pub field_sign: FieldSign,
    /// Permit chains above [`DEFAULT_MAX_SITES`].
    pub allow_large: bool,
}

impl ProbeSpec {
    pub fn new(epsilon: f64, l: usize, buffer: usize) -> Result<Self> {
        let p = ProbeSpec { epsilon, l, buffer, field_sign: FieldSign::GroundIsUp, allow_large: false };
        p.validate()?;
        Ok(p)
    }

    pub fn num_sites(&self) -> usize {
        2 * self.l * self.l + 1 + 2 * self.buffer
    }

    /// Sites `−(L² + b) ..= L² + b`.
    pub fn sites(&self) -> Vec<i64> {
        let r = (self.l * self.l + self.buffer) as i64;
        (-r..=r).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.epsilon) {
            return Err(Error::Domain(format!("ε must lie in [0, 1), got {}", self.epsilon)));
        }
        if self.l == 0 {
            return Err(Error::Domain("L must be positive".into()));
        }
        let n = self.num_sites();
        let cap = if self.allow_large { MAX_SITES } else { DEFAULT_MAX_SITES };
        if n > cap {
            return Err(Error::Capability(format!("{n} sites exceed the cap of {cap}")));
        }
        Ok(())
    }
}

/// Outcome of one probe.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConditionalReport {
    pub l: usize,
    pub n: usize,
    pub epsilon: f64,
    /// `μ(x_0 flipped | x_{Γ∖{0}} ≡ ground)`.
    pub p_zero: f64,
    /// `μ(x_0 flipped | x_L flipped, x_{Γ∖{0,L}} ≡ ground)`.
    pub p_one: f64,
    pub gap: f64,
}

/// `μ(x_target | x_cond)` as a ratio of restriction probabilities.
pub fn conditional_probability(
    state: &QuantumState,
    spec: &ObservableSpectrum,
    target: (i64, f64),
    conditioning: &[(i64, f64)],
) -> Result<f64> {
    if conditioning.iter().any(|c| c.0 == target.0) {
        return Err(Error::Domain(format!("target site {} is also conditioned", target.0)));
    }
    let mut window: Vec<i64> = conditioning.iter().map(|c| c.0).collect();
    window.push(target.0);
    let mut cfg = conditioning
        .iter()
        .map(|&(_, x)| spec.index_of(x))
        .collect::<Result<Vec<usize>>>()?;
    let t = spec.index_of(target.1)?;
    let mu = classical_restriction(state, spec, &window)?;
    let mut marginal = 0.0;
    let mut joint = 0.0;
    for k in 0..spec.len() {
        cfg.push(k);
        let p = mu.prob(&cfg);
        marginal += p;
        if k == t {
            joint = p;
        }
        cfg.pop();
    }
    if marginal <= NULL_PROBABILITY {
        return Err(Error::SingularEvent(format!("conditioning event {conditioning:?} has probability {marginal:e}")));
    }
    Ok(joint / marginal)
}

struct IsingChain {
    n: usize,
    epsilon: f64,
    sign: FieldSign,
}

impl IsingChain {
    fn dim(&self) -> usize {
        1 << self.n
    }

    /// Diagonal entry; bit value 0 is `σ^z = +1`, first site most significant.
    fn diagonal(&self, b: usize) -> f64 {
        let down = b.count_ones() as f64;
        let up = self.n as f64 - down;
        match self.sign {
            FieldSign::GroundIsUp => down - up,
            FieldSign::GroundIsDown => 2.0 * up,
        }
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.n;
        let masks: Vec<usize> = (0..n.saturating_sub(1)).map(|i| 0b11 << (n - 2 - i)).collect();
        y.par_iter_mut().enumerate().with_min_len(1024).for_each(|(b, yb)| {
            let mut v = self.diagonal(b) * x[b];
            for &m in &masks {
                v -= self.epsilon * x[b ^ m];
            }
            *yb = v;
        });
    }

    fn norm_bound(&self) -> f64 {
        2.0 * self.n as f64 + self.epsilon * (self.n as f64 - 1.0)
    }
}

/// Ground state of the probe Hamiltonian by matrix-free real Lanczos.
pub fn probe_ground_state(n: usize, epsilon: f64, sign: FieldSign, seed: u64) -> Result<QuantumState> {
    if n == 0 || n > MAX_SITES {
        return Err(Error::Capability(format!("chain length {n} outside 1..={MAX_SITES}")));
    }
    let lat = Lattice::chain(n, 2)?;
    let chain = IsingChain { n, epsilon, sign };
    let mut opts = lanczos::Options::new(seed, chain.norm_bound());
    if n > DEFAULT_MAX_SITES {
        opts.krylov_dim = 12;
    }
    let e0 = lanczos::lowest::<f64, _>(chain.dim(), |x, y| chain.apply(x, y), &[], &opts)?;
    let vector: Vec<C64> = e0.vector.iter().map(|&a| C64::new(a, 0.0)).collect();
    Ok(ground_from_vector(&lat, vector, e0.value, None, e0.residual, chain.norm_bound()))
}

fn sigma_z() -> ObservableSpectrum {
    ObservableSpectrum::new(&crate::spin_algebra::pauli::z()).expect("σ^z is Hermitian")
}

/// Runs one probe; sites of `state` are relabelled to `probe.sites()`.
fn run_probe(probe: &ProbeSpec, seed: u64) -> Result<ConditionalReport> {
    probe.validate()?;
    let sites = probe.sites();
    let n = sites.len();
    let st = probe_ground_state(n, probe.epsilon, probe.field_sign, seed)?;
    let offset = sites[0];
    let g = probe.field_sign.ground_value();
    let l2 = (probe.l * probe.l) as i64;
    let l = probe.l as i64;
    let spec = sigma_z();
    let at = |s: i64| s - offset;
    let rest: Vec<(i64, f64)> = (-l2..=l2).filter(|&i| i != 0).map(|i| (at(i), g)).collect();
    let p_zero = conditional_probability(&st, &spec, (at(0), -g), &rest)?;
    let flipped: Vec<(i64, f64)> = rest.iter().map(|&(s, x)| if s == at(l) { (s, -g) } else { (s, x) }).collect();
    let p_one = conditional_probability(&st, &spec, (at(0), -g), &flipped)?;
    Ok(ConditionalReport { l: probe.l, n, epsilon: probe.epsilon, p_zero, p_one, gap: (p_one - p_zero).abs() })
}

/// Runs every probe independently; failures are reported per entry.
pub fn nonlocality_scan(probes: &[ProbeSpec], seed: u64) -> Vec<Result<ConditionalReport>> {
    probes.par_iter().map(|p| run_probe(p, seed)).collect()
}

/// CSV with columns `L,N,epsilon,p_zero,p_one,gap`; failed probes are skipped.
pub fn scan_csv(reports: &[Result<ConditionalReport>]) -> String {
    use crate::cli::report::format_float;
    let mut s = String::from("L,N,epsilon,p_zero,p_one,gap\n");
    for r in reports.iter().flatten() {
        s.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.l,
            r.n,
            format_float(r.epsilon),
            format_float(r.p_zero),
            format_float(r.p_one),
            format_float(r.gap)
        ));
    }
    s
}

/// Largest `μ^z(x)` over configurations of an even chain with an odd number
/// of spins flipped away from `+1`.
pub fn parity_support(n: usize, epsilon: f64, seed: u64) -> Result<f64> {
    if n == 0 || !n.is_multiple_of(2) || n > 14 {
        return Err(Error::Domain(format!("parity check needs an even chain of at most 14 sites, got {n}")));
    }
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::Domain(format!("ε must lie in [0, 1], got {epsilon}")));
    }
    let st = probe_ground_state(n, epsilon, FieldSign::GroundIsUp, seed)?;
    let v = st.vector().unwrap();
    Ok(v.iter()
        .enumerate()
        .filter(|(b, _)| b.count_ones() % 2 == 1)
        .map(|(_, a)| a.norm_sqr())
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gibbs_engine::{gibbs_state, ground_state, GroundMethod};
    use crate::spin_algebra::{build_hamiltonian, joint_projection, pauli, CMatrix, Interaction};

    fn ed_ground(n: usize, j: f64, h: f64) -> QuantumState {
        let lat = Lattice::chain(n, 2).unwrap();
        let hm = build_hamiltonian(&Interaction::transverse_ising(j, h), &lat).unwrap();
        ground_state(&hm, &lat, GroundMethod::Dense, 0).unwrap()
    }

    #[test]
    fn infinite_temperature_is_a_product() {
        let lat = Lattice::chain(3, 2).unwrap();
        let hm = build_hamiltonian(&Interaction::transverse_ising(1.0, 1.0), &lat).unwrap();
        let st = gibbs_state(&hm, &lat, 0.0).unwrap();
        for x in [pauli::x(), pauli::z()] {
            let spec = ObservableSpectrum::new(&x).unwrap();
            let p = conditional_probability(&st, &spec, (1, 1.0), &[(0, -1.0), (2, 1.0)]).unwrap();
            assert!((p - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn product_ground_state() {
        let st = ed_ground(3, 0.0, 1.0);
        let p = conditional_probability(&st, &sigma_z(), (0, -1.0), &[(1, 1.0), (2, 1.0)]).unwrap();
        assert_eq!(p, 0.0);
        assert!(matches!(
            conditional_probability(&st, &sigma_z(), (0, 1.0), &[(1, -1.0)]),
            Err(Error::SingularEvent(_))
        ));
    }

    #[test]
    fn matches_explicit_projectors() {
        let st = ed_ground(4, 0.2, 1.0);
        let lat = st.lattice().clone();
        let rho = st.density().unwrap();
        let spec = sigma_z();
        let cond = [(0, 1.0), (2, 1.0), (3, 1.0)];
        let mut joint_cfg = cond.to_vec();
        joint_cfg.push((1, 1.0));
        let tr = |cfg: &[(i64, f64)]| (&rho * joint_projection(&spec, cfg, &lat).unwrap().dense().unwrap()).trace().re;
        let want = tr(&joint_cfg) / tr(&cond);
        let got = conditional_probability(&st, &spec, (1, 1.0), &cond).unwrap();
        assert!((got - want).abs() < 1e-12);
        let other = conditional_probability(&st, &spec, (1, -1.0), &cond).unwrap();
        assert!((got + other - 1.0).abs() < 1e-12);
    }

    #[test]
    fn matrix_free_chain_matches_sparse_hamiltonian() {
        for (sign, h_of) in [
            (FieldSign::GroundIsUp, Interaction::transverse_ising(0.3, 1.0)),
            (
                FieldSign::GroundIsDown,
                Interaction::transverse_ising(0.3, -1.0).with_term(&[0], CMatrix::identity(2, 2)).unwrap(),
            ),
        ] {
            let n = 6;
            let lat = Lattice::chain(n, 2).unwrap();
            let hm = build_hamiltonian(&h_of, &lat).unwrap();
            let dense = ground_state(&hm, &lat, GroundMethod::Dense, 0).unwrap();
            let free = probe_ground_state(n, 0.3, sign, 5).unwrap();
            assert!((dense.energy().unwrap() - free.energy().unwrap()).abs() < 1e-9);
            let ov: crate::C64 = dense.vector().unwrap().iter().zip(free.vector().unwrap()).map(|(a, b)| a.conj() * b).sum();
            assert!((ov.norm() - 1.0).abs() < 1e-7);
        }
    }

    #[test]
    fn spec_validation() {
        assert_eq!(ProbeSpec::new(0.2, 2, 3).unwrap().num_sites(), 15);
        assert!(matches!(ProbeSpec::new(0.2, 3, 3), Err(Error::Capability(_))));
        assert!(ProbeSpec::new(1.0, 1, 1).is_err());
        let mut big = ProbeSpec::new(0.2, 1, 1).unwrap();
        big.l = 3;
        big.buffer = 3;
        big.allow_large = true;
        assert_eq!(big.num_sites(), 25);
        assert!(big.validate().is_ok());
    }

    #[test]
    fn decoupled_chain_has_no_flips() {
        let r = nonlocality_scan(&[ProbeSpec::new(0.0, 1, 1).unwrap()], 0);
        // p_one conditions on a flipped spin, which the product state never shows
        assert!(matches!(r[0], Err(Error::SingularEvent(_))));
        let st = probe_ground_state(5, 0.0, FieldSign::GroundIsUp, 0).unwrap();
        let rest: Vec<(i64, f64)> = [0, 1, 3, 4].iter().map(|&s| (s, 1.0)).collect();
        assert!(conditional_probability(&st, &sigma_z(), (2, -1.0), &rest).unwrap() < 1e-28);
    }

    #[test]
    fn single_probe_shows_a_gap() {
        let r = nonlocality_scan(&[ProbeSpec::new(0.2, 1, 2).unwrap()], 0);
        let r = r[0].as_ref().unwrap();
        assert_eq!(r.n, 7);
        assert!(r.gap > 0.0);
        assert!((0.0..=1.0).contains(&r.p_zero) && (0.0..=1.0).contains(&r.p_one));
    }

    #[test]
    fn both_conventions_agree() {
        let mut up = ProbeSpec::new(0.2, 1, 1).unwrap();
        let mut down = up;
        down.field_sign = FieldSign::GroundIsDown;
        up.field_sign = FieldSign::GroundIsUp;
        let r = nonlocality_scan(&[up, down], 3);
        let (a, b) = (r[0].as_ref().unwrap(), r[1].as_ref().unwrap());
        // the two Hamiltonians differ by a spin flip and a constant
        assert!((a.p_zero - b.p_zero).abs() < 1e-9);
        assert!((a.p_one - b.p_one).abs() < 1e-9);
    }

    #[test]
    fn parity_sector_zeros() {
        assert!(parity_support(2, 1.0, 0).unwrap() < 1e-12);
        assert!(parity_support(4, 0.2, 0).unwrap() < 1e-12);
        assert!(parity_support(6, 0.0, 0).unwrap() < 1e-28);
        assert!(parity_support(3, 0.2, 0).is_err());
    }

    #[test]
    fn even_sector_is_charged() {
        for n in [2usize, 4, 6, 8, 10] {
            let st = probe_ground_state(n, 0.2, FieldSign::GroundIsUp, 1).unwrap();
            let v = st.vector().unwrap();
            for (b, a) in v.iter().enumerate() {
                if b.count_ones() % 2 == 0 {
                    assert!(a.norm_sqr() > 0.0, "n = {n}, config {b:b}");
                }
            }
        }
    }

    #[test]
    fn scan_csv_layout() {
        let r = vec![Ok(ConditionalReport { l: 1, n: 5, epsilon: 0.2, p_zero: 0.0, p_one: 0.5, gap: 0.5 })];
        let csv = scan_csv(&r);
        assert!(csv.starts_with("L,N,epsilon,p_zero,p_one,gap\n1,5,"));
    }
}
