//! Explicitly restarted Lanczos with full reorthogonalization.

use std::ops::{Add, Mul, Sub};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::C64;

pub(crate) trait Scalar:
    Copy + Send + Sync + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + 'static
{
    fn zero() -> Self;
    fn from_re(x: f64) -> Self;
    fn conj(self) -> Self;
    fn norm_sqr(self) -> f64;
    fn re(self) -> f64;
    fn random(rng: &mut ChaCha8Rng) -> Self;
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn from_re(x: f64) -> Self {
        x
    }
    fn conj(self) -> Self {
        self
    }
    fn norm_sqr(self) -> f64 {
        self * self
    }
    fn re(self) -> f64 {
        self
    }
    fn random(rng: &mut ChaCha8Rng) -> Self {
        rng.gen_range(-1.0..1.0)
    }
}

impl Scalar for C64 {
    fn zero() -> Self {
        C64::new(0.0, 0.0)
    }
    fn from_re(x: f64) -> Self {
        C64::new(x, 0.0)
    }
    fn conj(self) -> Self {
        C64::conj(&self)
    }
    fn norm_sqr(self) -> f64 {
        C64::norm_sqr(&self)
    }
    fn re(self) -> f64 {
        self.re
    }
    fn random(rng: &mut ChaCha8Rng) -> Self {
        C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    }
}

#[derive(Clone, Debug)]
pub(crate) struct Options {
    pub krylov_dim: usize,
    /// Absolute eigenvalue shift between restarts.
    pub tol: f64,
    /// Residual bound relative to `norm`.
    pub residual_rtol: f64,
    pub max_restarts: usize,
    pub seed: u64,
    /// Upper bound on the operator norm.
    pub norm: f64,
}

impl Options {
    pub fn new(seed: u64, norm: f64) -> Self {
        Options { krylov_dim: 40, tol: 1e-10, residual_rtol: 1e-9, max_restarts: 2000, seed, norm }
    }
}

pub(crate) struct Eigenpair<S> {
    pub value: f64,
    pub vector: Vec<S>,
    pub residual: f64,
}

fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    a.iter().zip(b).fold(S::zero(), |acc, (x, y)| acc + x.conj() * *y)
}

fn norm<S: Scalar>(a: &[S]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn axpy<S: Scalar>(alpha: S, x: &[S], y: &mut [S]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi = *yi + alpha * *xi;
    }
}

fn scale<S: Scalar>(a: &mut [S], s: f64) {
    let s = S::from_re(s);
    for x in a {
        *x = *x * s;
    }
}

fn project_out<S: Scalar>(v: &mut [S], against: &[Vec<S>]) {
    for _ in 0..2 {
        for u in against {
            let c = dot(u, v);
            axpy(S::zero() - c, u, v);
        }
    }
}

/// Lowest eigenpair of a Hermitian operator given by `apply(x, y): y = A x`,
/// restricted to the orthogonal complement of `deflate` (orthonormal vectors).
pub(crate) fn lowest<S, F>(dim: usize, apply: F, deflate: &[Vec<S>], opts: &Options) -> Result<Eigenpair<S>>
where
    S: Scalar,
    F: Fn(&[S], &mut [S]),
{
    if dim == 0 {
        return Err(Error::Domain("empty operator".into()));
    }
    let free = dim - deflate.len();
    if free == 0 {
        return Err(Error::Domain("deflation removes the whole space".into()));
    }
    let op = |x: &[S], y: &mut [S]| {
        apply(x, y);
        if !deflate.is_empty() {
            project_out(y, deflate);
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut v: Vec<S> = (0..dim).map(|_| S::random(&mut rng)).collect();
    project_out(&mut v, deflate);
    let nv = norm(&v);
    if nv == 0.0 {
        return Err(Error::Numerical("degenerate Lanczos start vector".into()));
    }
    scale(&mut v, 1.0 / nv);

    let k = opts.krylov_dim.clamp(1, free);
    let scale_norm = opts.norm.max(1e-300);
    let mut prev = f64::INFINITY;
    let mut w = vec![S::zero(); dim];
    for _ in 0..opts.max_restarts {
        let mut basis: Vec<Vec<S>> = vec![v.clone()];
        let mut alpha: Vec<f64> = Vec::with_capacity(k);
        let mut beta: Vec<f64> = Vec::with_capacity(k);
        let mut breakdown = false;
        loop {
            let j = basis.len() - 1;
            op(&basis[j], &mut w);
            alpha.push(dot(&basis[j], &w).re());
            project_out(&mut w, &basis);
            project_out(&mut w, deflate);
            let b = norm(&w);
            if basis.len() == k {
                break;
            }
            if b <= 1e-13 * scale_norm {
                breakdown = true;
                break;
            }
            beta.push(b);
            let mut next = w.clone();
            scale(&mut next, 1.0 / b);
            basis.push(next);
        }
        let m = alpha.len();
        let t = faer::Mat::<f64>::from_fn(m, m, |r, c| match r.abs_diff(c) {
            0 => alpha[r],
            1 => beta[r.min(c)],
            _ => 0.0,
        });
        let eig = t
            .self_adjoint_eigen(faer::Side::Lower)
            .map_err(|e| Error::Numerical(format!("tridiagonal eigensolver failed: {e:?}")))?;
        let vals = eig.S().column_vector();
        let imin = (0..m).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap();
        let u = eig.U();
        let mut y = vec![S::zero(); dim];
        for (i, bv) in basis.iter().enumerate() {
            axpy(S::from_re(u[(i, imin)]), bv, &mut y);
        }
        project_out(&mut y, deflate);
        let ny = norm(&y);
        scale(&mut y, 1.0 / ny);
        op(&y, &mut w);
        let rq = dot(&y, &w).re();
        axpy(S::from_re(-rq), &y, &mut w);
        let residual = norm(&w);
        let shift = (rq - prev).abs();
        prev = rq;
        if residual <= opts.residual_rtol * scale_norm && (shift < opts.tol || breakdown || m == free) {
            return Ok(Eigenpair { value: rq, vector: y, residual });
        }
        v = y;
    }
    Err(Error::Numerical(format!("Lanczos did not converge in {} restarts", opts.max_restarts)))
}
