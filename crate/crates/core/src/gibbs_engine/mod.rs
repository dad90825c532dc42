//! Finite-volume Gibbs and ground states and their classical restrictions.

mod restriction;

pub use restriction::{classical_restriction, magnetization_distribution, ClassicalDistribution, NULL_PROBABILITY};

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::lanczos;
use crate::spin_algebra::{hermitian_eigh, CMatrix, CsrMatrix, Lattice, OperatorMatrix, DENSE_LIMIT};
use crate::C64;

/// How a ground state is computed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GroundMethod {
    Dense,
    Iterative,
    /// Dense up to [`DENSE_LIMIT`], iterative above.
    Auto,
}

#[derive(Clone, Debug)]
pub(crate) enum Repr {
    Thermal {
        beta: f64,
        energies: Vec<f64>,
        vectors: CMatrix,
        weights: Vec<f64>,
        log_partition: f64,
    },
    Ground {
        vector: Vec<C64>,
        energy: f64,
        gap: Option<f64>,
        degenerate: bool,
        residual: f64,
    },
}

/// A normalized state on a finite lattice: thermal (kept as an
/// eigendecomposition with Boltzmann weights) or a ground-state vector.
#[derive(Clone, Debug)]
pub struct QuantumState {
    lattice: Lattice,
    pub(crate) repr: Repr,
}

impl QuantumState {
    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    /// `Some(β)` for thermal states.
    pub fn beta(&self) -> Option<f64> {
        match &self.repr {
            Repr::Thermal { beta, .. } => Some(*beta),
            Repr::Ground { .. } => None,
        }
    }

    pub fn is_ground(&self) -> bool {
        matches!(self.repr, Repr::Ground { .. })
    }

    /// `log Tr e^{−βH}` for thermal states.
    pub fn log_partition(&self) -> Option<f64> {
        match &self.repr {
            Repr::Thermal { log_partition, .. } => Some(*log_partition),
            Repr::Ground { .. } => None,
        }
    }

    /// Ground-state energy, or the mean energy `Tr(ρH)` of a thermal state.
    pub fn energy(&self) -> Option<f64> {
        match &self.repr {
            Repr::Ground { energy, .. } => Some(*energy),
            Repr::Thermal { energies, weights, .. } => Some(energies.iter().zip(weights).map(|(e, w)| e * w).sum()),
        }
    }

    /// Whether the ground space looked degenerate (gap below `1e-8·‖H‖`).
    pub fn degenerate(&self) -> bool {
        matches!(self.repr, Repr::Ground { degenerate: true, .. })
    }

    /// Estimated spectral gap above the ground state.
    pub fn gap(&self) -> Option<f64> {
        match &self.repr {
            Repr::Ground { gap, .. } => *gap,
            Repr::Thermal { .. } => None,
        }
    }

    /// `‖Hv − Ev‖` of the ground vector.
    pub fn residual(&self) -> Option<f64> {
        match &self.repr {
            Repr::Ground { residual, .. } => Some(*residual),
            Repr::Thermal { .. } => None,
        }
    }

    pub fn vector(&self) -> Option<&[C64]> {
        match &self.repr {
            Repr::Ground { vector, .. } => Some(vector),
            Repr::Thermal { .. } => None,
        }
    }

    /// Density matrix (dense regime only).
    pub fn density(&self) -> Result<CMatrix> {
        let dim = self.lattice.dim();
        if dim > DENSE_LIMIT {
            return Err(Error::Capability(format!("density of dimension {dim} exceeds {DENSE_LIMIT}")));
        }
        Ok(match &self.repr {
            Repr::Thermal { vectors, weights, .. } => {
                let w = DVector::from_iterator(dim, weights.iter().map(|&p| C64::from(p)));
                let scaled = CMatrix::from_fn(dim, dim, |r, c| vectors[(r, c)] * w[c]);
                scaled * vectors.adjoint()
            }
            Repr::Ground { vector, .. } => {
                let v = DVector::from_column_slice(vector);
                &v * v.adjoint()
            }
        })
    }
}

/// `e^{−βH} / Tr e^{−βH}` by full eigendecomposition.
pub fn gibbs_state(h: &OperatorMatrix, lat: &Lattice, beta: f64) -> Result<QuantumState> {
    check_operator(h, lat)?;
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(Error::Domain(format!("β must be finite and non-negative, got {beta}")));
    }
    let dense = h.dense().ok_or_else(|| {
        Error::Capability(format!(
            "Gibbs states need the dense path (dim ≤ {DENSE_LIMIT}); dimension {} requires ground_state",
            h.dim()
        ))
    })?;
    let (energies, vectors) = hermitian_eigh(dense);
    let emin = energies[0];
    let boltz: Vec<f64> = energies.iter().map(|e| (-beta * (e - emin)).exp()).collect();
    let z: f64 = boltz.iter().sum();
    let weights = boltz.iter().map(|b| b / z).collect();
    let log_partition = -beta * emin + z.ln();
    Ok(QuantumState {
        lattice: lat.clone(),
        repr: Repr::Thermal { beta, energies, vectors, weights, log_partition },
    })
}

/// Lowest eigenvector of `h`, with the phase fixed so that the largest
/// amplitude is real and positive.
pub fn ground_state(h: &OperatorMatrix, lat: &Lattice, method: GroundMethod, seed: u64) -> Result<QuantumState> {
    check_operator(h, lat)?;
    let dim = h.dim();
    let dense = match method {
        GroundMethod::Dense => true,
        GroundMethod::Iterative => false,
        GroundMethod::Auto => dim <= DENSE_LIMIT,
    };
    let (mut vector, energy, gap, norm) = if dense {
        let m = h.dense().ok_or_else(|| Error::Capability(format!("dense ground state of dimension {dim} exceeds {DENSE_LIMIT}")))?;
        let (vals, vecs) = hermitian_eigh(m);
        let norm = vals.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let gap = vals.get(1).map(|e1| e1 - vals[0]);
        (vecs.column(0).iter().copied().collect::<Vec<C64>>(), vals[0], gap, norm)
    } else {
        let norm = h.row_sum_norm();
        let opts = lanczos::Options::new(seed, norm);
        // iterate on a sparse copy; dense products cost dim² per step
        let sparse = h.is_dense().then(|| CsrMatrix::from_triplets(dim, h.triplets()));
        let apply = |x: &[C64], y: &mut [C64]| match &sparse {
            Some(s) => s.apply(x, y),
            None => h.apply(x, y),
        };
        let e0 = lanczos::lowest(dim, apply, &[], &opts)?;
        let gap = if dim > 1 {
            let mut o1 = opts.clone();
            o1.seed = seed.wrapping_add(1);
            o1.tol = 1e-9;
            o1.residual_rtol = 1e-7;
            let e1 = lanczos::lowest(dim, apply, std::slice::from_ref(&e0.vector), &o1)?;
            Some(e1.value - e0.value)
        } else {
            None
        };
        (e0.vector, e0.value, gap, norm)
    };
    fix_phase(&mut vector);
    let mut hv = vec![C64::new(0.0, 0.0); dim];
    h.apply(&vector, &mut hv);
    let residual = hv.iter().zip(&vector).map(|(a, b)| (a - b * energy).norm_sqr()).sum::<f64>().sqrt();
    let degenerate = gap.is_some_and(|g| g < 1e-8 * norm.max(f64::MIN_POSITIVE));
    Ok(QuantumState {
        lattice: lat.clone(),
        repr: Repr::Ground { vector, energy, gap, degenerate, residual },
    })
}

pub(crate) fn ground_from_vector(lat: &Lattice, mut vector: Vec<C64>, energy: f64, gap: Option<f64>, residual: f64, norm: f64) -> QuantumState {
    fix_phase(&mut vector);
    let degenerate = gap.is_some_and(|g| g < 1e-8 * norm.max(f64::MIN_POSITIVE));
    QuantumState { lattice: lat.clone(), repr: Repr::Ground { vector, energy, gap, degenerate, residual } }
}

fn fix_phase(v: &mut [C64]) {
    let mut best = 0;
    let mut best_norm = -1.0;
    for (i, a) in v.iter().enumerate() {
        if a.norm() > best_norm * (1.0 + 1e-12) {
            best = i;
            best_norm = a.norm();
        }
    }
    if best_norm > 0.0 {
        let phase = v[best].conj() / best_norm;
        for a in v.iter_mut() {
            *a *= phase;
        }
        v[best] = C64::new(v[best].re, 0.0);
    }
}

fn check_operator(h: &OperatorMatrix, lat: &Lattice) -> Result<()> {
    if h.dim() != lat.dim() {
        return Err(Error::Domain(format!("operator dimension {} does not match lattice dimension {}", h.dim(), lat.dim())));
    }
    if !h.is_hermitian() {
        return Err(Error::Domain("Hamiltonian is not Hermitian".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin_algebra::{build_hamiltonian, pauli, Interaction};

    fn ising(n: usize, j: f64, h: f64) -> (Lattice, OperatorMatrix) {
        let lat = Lattice::chain(n, 2).unwrap();
        let op = build_hamiltonian(&Interaction::transverse_ising(j, h), &lat).unwrap();
        (lat, op)
    }

    fn max_abs(m: &CMatrix) -> f64 {
        m.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn infinite_temperature_is_maximally_mixed() {
        let (lat, h) = ising(3, 0.8, 1.1);
        let rho = gibbs_state(&h, &lat, 0.0).unwrap().density().unwrap();
        assert!(max_abs(&(rho - CMatrix::identity(8, 8) * C64::from(0.125))) < 1e-14);
    }

    #[test]
    fn single_spin_gibbs_closed_form() {
        let lat = Lattice::chain(1, 2).unwrap();
        let h = OperatorMatrix::from_dense(-pauli::z()).unwrap();
        let beta: f64 = 0.7;
        let rho = gibbs_state(&h, &lat, beta).unwrap().density().unwrap();
        let z = 2.0 * beta.cosh();
        assert!((rho[(0, 0)].re - beta.exp() / z).abs() < 1e-14);
        assert!((rho[(1, 1)].re - (-beta).exp() / z).abs() < 1e-14);
    }

    #[test]
    fn ising_pair_partition_function() {
        let (lat, h) = ising(2, 1.0, 1.0);
        let st = gibbs_state(&h, &lat, 0.5).unwrap();
        let expect = 2.0 * (5f64.sqrt() / 2.0).cosh() + 2.0 * 0.5f64.cosh();
        assert!((st.log_partition().unwrap().exp() - expect).abs() < 1e-12);
        assert!((expect - 5.6410).abs() < 1e-4);
        let rho = st.density().unwrap();
        assert!((rho.trace().re - 1.0).abs() < 1e-12);
        let (vals, _) = hermitian_eigh(&rho);
        assert!(vals[0] >= -1e-12);
    }

    #[test]
    fn free_field_ground_state() {
        let (lat, h) = ising(3, 0.0, 1.0);
        let g = ground_state(&h, &lat, GroundMethod::Dense, 0).unwrap();
        assert!((g.energy().unwrap() + 3.0).abs() < 1e-12);
        assert!((g.vector().unwrap()[0].re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ising_pair_ground_state() {
        let (lat, h) = ising(2, 1.0, 1.0);
        let g = ground_state(&h, &lat, GroundMethod::Dense, 0).unwrap();
        assert!((g.energy().unwrap() + 5f64.sqrt()).abs() < 1e-12);
        let r = 5f64.sqrt() - 2.0;
        let nrm = (1.0 + r * r).sqrt();
        let v = g.vector().unwrap();
        for (a, b) in v.iter().zip([1.0 / nrm, 0.0, 0.0, r / nrm]) {
            assert!((a - C64::from(b)).norm() < 1e-12);
        }
        assert!(!g.degenerate());
        assert!(g.residual().unwrap() <= 1e-8 * 5f64.sqrt());
    }

    #[test]
    fn identity_ground_state_is_flagged() {
        let lat = Lattice::chain(2, 2).unwrap();
        let h = OperatorMatrix::identity(4);
        for method in [GroundMethod::Dense, GroundMethod::Iterative] {
            let g = ground_state(&h, &lat, method, 5).unwrap();
            assert!((g.energy().unwrap() - 1.0).abs() < 1e-12);
            assert!(g.degenerate());
            let n: f64 = g.vector().unwrap().iter().map(|a| a.norm_sqr()).sum();
            assert!((n - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn iterative_matches_dense() {
        for n in [4usize, 7, 10] {
            let (lat, h) = ising(n, 0.6, 1.0);
            let d = ground_state(&h, &lat, GroundMethod::Dense, 0).unwrap();
            let i = ground_state(&h, &lat, GroundMethod::Iterative, 11).unwrap();
            assert!((d.energy().unwrap() - i.energy().unwrap()).abs() < 1e-9);
            let ov: C64 = d.vector().unwrap().iter().zip(i.vector().unwrap()).map(|(a, b)| a.conj() * b).sum();
            assert!((ov.norm() - 1.0).abs() < 1e-7, "n={n} overlap {}", ov.norm());
            let norm = h.row_sum_norm();
            assert!(i.residual().unwrap() <= 1e-8 * norm);
        }
    }

    #[test]
    fn iterative_is_seed_deterministic() {
        let (lat, h) = ising(13, 0.3, 1.0);
        let a = ground_state(&h, &lat, GroundMethod::Auto, 4).unwrap();
        let b = ground_state(&h, &lat, GroundMethod::Auto, 4).unwrap();
        assert_eq!(a.vector(), b.vector());
        assert!(!a.degenerate());
    }

    #[test]
    fn rejects_bad_input() {
        let (lat, h) = ising(2, 1.0, 1.0);
        assert!(gibbs_state(&h, &lat, -1.0).is_err());
        let other = Lattice::chain(3, 2).unwrap();
        assert!(gibbs_state(&h, &other, 1.0).is_err());
        let (big, hb) = ising(13, 1.0, 1.0);
        assert!(matches!(gibbs_state(&hb, &big, 1.0), Err(Error::Capability(_))));
    }
}
