use crate::error::{Error, Result};
use crate::spin_algebra::{hermitian_eigh, CMatrix};
use crate::C64;

const NODES: usize = 24;

/// Gauss–Legendre nodes and weights on `[−1, 1]` by Newton iteration on `P_n`.
pub(crate) fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                let (mut p0, mut p1) = (1.0, z);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                let dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
                w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
                break;
            }
        }
        x[i] = z;
    }
    (x, w)
}

/// Largest singular value of a Hermitian matrix.
pub fn spectral_norm(m: &CMatrix) -> f64 {
    let (vals, _) = hermitian_eigh(m);
    vals.iter().fold(0.0f64, |a, v| a.max(v.abs()))
}

/// `(β‖V‖)^{N+1}/(N+1)! · e^{β(‖H₀‖+‖V‖)}`.
pub fn dyson_remainder_bound(h0_norm: f64, v_norm: f64, beta: f64, order: usize) -> f64 {
    let mut term = 1.0;
    for k in 1..=order + 1 {
        term *= beta * v_norm / k as f64;
    }
    term * (beta * (h0_norm + v_norm)).exp()
}

/// Truncated series and its a-priori error bound.
#[derive(Clone, Debug)]
pub struct DysonTruncation {
    pub matrix: CMatrix,
    pub bound: f64,
}

struct Propagator {
    vals: Vec<f64>,
    vecs: CMatrix,
}

impl Propagator {
    fn at(&self, t: f64) -> CMatrix {
        let v = &self.vecs;
        CMatrix::from_fn(v.nrows(), v.ncols(), |r, c| v[(r, c)] * (-t * self.vals[c]).exp()) * v.adjoint()
    }
}

/// `K_n(s) = −∫₀^s e^{−(s−u)H₀} V K_{n−1}(u) du`, `K₀(s) = e^{−sH₀}`.
fn term(n: usize, s: f64, prop: &Propagator, v: &CMatrix, gl: &(Vec<f64>, Vec<f64>)) -> CMatrix {
    if n == 0 {
        return prop.at(s);
    }
    let dim = v.nrows();
    let mut acc = CMatrix::zeros(dim, dim);
    for (x, w) in gl.0.iter().zip(&gl.1) {
        let u = 0.5 * s * (1.0 + x);
        acc += prop.at(s - u) * v * term(n - 1, u, prop, v, gl) * C64::from(0.5 * s * w);
    }
    -acc
}

/// `e^{−βH₀} + Σ_{n=1}^N (−1)^n ∫_{simplex} e^{−(β−t_n)H₀} V ⋯ V e^{−t₁H₀}`,
/// each simplex integral by iterated 24-point Gauss–Legendre.
pub fn truncated_dyson(h0: &CMatrix, v: &CMatrix, beta: f64, order: usize) -> Result<DysonTruncation> {
    if h0.shape() != v.shape() || h0.nrows() != h0.ncols() {
        return Err(Error::Domain("H₀ and V must be square of equal size".into()));
    }
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(Error::Domain(format!("β must be finite and non-negative, got {beta}")));
    }
    if order > 5 {
        return Err(Error::Capability(format!("order {order} exceeds 5")));
    }
    let (vals, vecs) = hermitian_eigh(h0);
    let prop = Propagator { vals, vecs };
    let gl = gauss_legendre(NODES);
    let mut matrix = prop.at(beta);
    for n in 1..=order {
        matrix += term(n, beta, &prop, v, &gl);
    }
    let bound = dyson_remainder_bound(spectral_norm(h0), spectral_norm(v), beta, order);
    Ok(DysonTruncation { matrix, bound })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin_algebra::{build_hamiltonian, Lattice};
    use crate::dyson_polymer::DysonModel;
    use crate::spin_algebra::{pauli, ObservableSpectrum};

    fn expm_h(h: &CMatrix, beta: f64) -> CMatrix {
        let (vals, vecs) = hermitian_eigh(h);
        CMatrix::from_fn(vecs.nrows(), vecs.ncols(), |r, c| vecs[(r, c)] * (-beta * vals[c]).exp()) * vecs.adjoint()
    }

    fn ising_parts(eps: f64) -> (CMatrix, CMatrix) {
        let m = DysonModel::ising(1.0, eps, ObservableSpectrum::new(&pauli::x()).unwrap()).unwrap();
        let lat = Lattice::chain(3, 2).unwrap();
        (
            build_hamiltonian(&m.phi0, &lat).unwrap().to_dense().unwrap(),
            build_hamiltonian(&m.upsilon, &lat).unwrap().to_dense().unwrap(),
        )
    }

    #[test]
    fn legendre_rule() {
        let (x, w) = gauss_legendre(NODES);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        // exact through degree 47
        let i: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(46)).sum();
        assert!((i - 2.0 / 47.0).abs() < 1e-14);
    }

    #[test]
    fn zeroth_order_and_zero_perturbation() {
        let (h0, v) = ising_parts(0.2);
        let e = expm_h(&h0, 0.5);
        assert!((truncated_dyson(&h0, &v, 0.5, 0).unwrap().matrix - &e).norm() < 1e-14);
        let zero = CMatrix::zeros(8, 8);
        assert!((truncated_dyson(&h0, &zero, 0.5, 3).unwrap().matrix - &e).norm() < 1e-14);
    }

    #[test]
    fn third_order_within_bound() {
        let (h0, v) = ising_parts(0.2);
        let exact = expm_h(&(&h0 + &v), 0.5);
        let t = truncated_dyson(&h0, &v, 0.5, 3).unwrap();
        let err = spectral_norm_general(&(t.matrix - &exact));
        assert!(err <= t.bound, "{err} > {}", t.bound);
    }

    #[test]
    fn error_decreases_with_order() {
        let (h0, v) = ising_parts(0.2);
        let exact = expm_h(&(&h0 + &v), 0.5);
        let errs: Vec<f64> = (0..=4)
            .map(|n| spectral_norm_general(&(truncated_dyson(&h0, &v, 0.5, n).unwrap().matrix - &exact)))
            .collect();
        for w in errs.windows(2) {
            assert!(w[1] < w[0]);
        }
    }

    fn spectral_norm_general(m: &CMatrix) -> f64 {
        m.clone().svd(false, false).singular_values.max()
    }
}
