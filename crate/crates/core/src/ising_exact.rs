//! Free-fermion formulas for the transverse-field Ising ground state in the
//! disordered phase `|g| > 1`, `g = h/J`.
//!
//! With `H = −J Σ σ^x_i σ^x_{i+1} − h Σ σ^z_i`, the generating function
//! `G^n(t) = ⟨exp(t Σ_{j≤n} σ^z_j)⟩` of a block of `n` spins is the Toeplitz
//! determinant of the symbol `φ_t(k) = cosh t − sinh t e^{−iθ_k}`, and
//! `F(t) = lim (1/n) log G^n(t)` is the mean of `log φ_t` over the circle.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::C64;

/// Parameters of the chain; `g` is `h/J`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IsingParams {
    pub g: f64,
    pub j: f64,
}

impl IsingParams {
    pub fn new(g: f64, j: f64) -> Result<Self> {
        if !(j > 0.0 && j.is_finite()) {
            return Err(Error::Domain(format!("J must be positive, got {j}")));
        }
        if !g.is_finite() {
            return Err(Error::Domain(format!("g must be finite, got {g}")));
        }
        if g.abs() == 1.0 {
            return Err(Error::SingularParameter("|g| = 1 is the critical point".into()));
        }
        if g.abs() < 1.0 {
            return Err(Error::Domain(format!("ordered phase |g| < 1 is not supported (g = {g})")));
        }
        Ok(IsingParams { g, j })
    }

    /// From coupling and field.
    pub fn from_couplings(j: f64, h: f64) -> Result<Self> {
        if !(j > 0.0) {
            return Err(Error::Domain(format!("J must be positive, got {j}")));
        }
        Self::new(h / j, j)
    }

    pub fn h(&self) -> f64 {
        self.g * self.j
    }

    /// `(g + e^{ik}) / |g + e^{ik}|`, which equals `−e^{−iθ_k}`.
    fn unit(&self, k: f64) -> C64 {
        // sin(±PI) is 1.2e-16 in floating point, enough to spoil φ_t at large |t|
        let s = if k.abs() == PI { 0.0 } else { k.sin() };
        let z = C64::new(self.g + k.cos(), s);
        z / z.norm()
    }
}

/// Uniform trapezoid rule for `(1/2π) ∫_{−π}^{π} f(k) dk`.
///
/// Exact for trigonometric polynomials of degree below `count`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    pub const DEFAULT_COUNT: usize = 4096;

    /// Nodes `k_j = −π + 2π(j+1)/count`, all in `(−π, π]`.
    pub fn trapezoid(count: usize) -> Result<Self> {
        if count == 0 {
            return Err(Error::Domain("quadrature needs at least one node".into()));
        }
        let nodes = (0..count).map(|j| -PI + 2.0 * PI * (j + 1) as f64 / count as f64).collect();
        Ok(QuadratureRule { nodes, weights: vec![1.0 / count as f64; count] })
    }

    pub fn count(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn integrate(&self, f: impl Fn(f64) -> C64) -> C64 {
        self.nodes.iter().zip(&self.weights).map(|(&k, &w)| f(k) * w).sum()
    }
}

impl Default for QuadratureRule {
    fn default() -> Self {
        Self::trapezoid(Self::DEFAULT_COUNT).unwrap()
    }
}

/// `θ_k ∈ (−π, π]` with `e^{iθ_k} = −(g + e^{−ik}) / |g + e^{−ik}|`.
pub fn bogoliubov_angle(k: f64, p: &IsingParams) -> f64 {
    let z = -C64::new(p.g + k.cos(), -k.sin());
    let th = z.im.atan2(z.re);
    if th <= -PI {
        th + 2.0 * PI
    } else {
        th
    }
}

/// `φ_t(k) = cosh t − sinh t e^{−iθ_k}`, evaluated as
/// `e^t (1+u)/2 + e^{−t} (1−u)/2` with `u = −e^{−iθ_k}`.
pub fn symbol_phi(t: f64, k: f64, p: &IsingParams) -> C64 {
    let u = p.unit(k);
    let one = C64::new(1.0, 0.0);
    (one + u) * (0.5 * t.exp()) + (one - u) * (0.5 * (-t).exp())
}

/// Fourier coefficient `φ̂_t(d) = (1/2π) ∫ φ_t(k) e^{−ikd} dk`.
pub fn pair_correlation(d: i64, t: f64, p: &IsingParams, quad: &QuadratureRule) -> C64 {
    quad.integrate(|k| symbol_phi(t, k, p) * C64::from_polar(1.0, -k * d as f64))
}

fn check_size(n: usize, quad: &QuadratureRule) -> Result<()> {
    if n == 0 {
        return Err(Error::Domain("block size must be positive".into()));
    }
    if n > 512 {
        return Err(Error::Capability(format!("Toeplitz size {n} exceeds 512")));
    }
    if quad.count() < 8 * n {
        return Err(Error::Domain(format!("quadrature with {} nodes is too coarse for n = {n}", quad.count())));
    }
    Ok(())
}

/// `log G^n(t) = log det [φ̂_t(j − j′)]`.
pub fn toeplitz_log_generating(n: usize, t: f64, p: &IsingParams, quad: &QuadratureRule) -> Result<f64> {
    check_size(n, quad)?;
    let coeffs: Vec<C64> = (-(n as i64 - 1)..n as i64).map(|d| pair_correlation(d, t, p, quad)).collect();
    let off = n as i64 - 1;
    let m = DMatrix::<C64>::from_fn(n, n, |r, c| coeffs[(r as i64 - c as i64 + off) as usize]);
    let lu = m.lu();
    let u = lu.u();
    let mut log_abs = 0.0;
    let mut phase = C64::new(1.0, 0.0);
    for i in 0..n {
        let d = u[(i, i)];
        let a = d.norm();
        if a == 0.0 {
            return Err(Error::Numerical(format!("singular Toeplitz matrix at n = {n}, t = {t}")));
        }
        log_abs += a.ln();
        phase *= d / a;
    }
    if lu.p().determinant::<f64>() < 0.0 {
        phase = -phase;
    }
    // |Im det| ≤ 1e-10·max(1, |Re det|) and Re det > 0
    let im_ok = if log_abs > 0.0 {
        phase.im.abs() <= 1e-10 * phase.re
    } else {
        phase.im.abs() * log_abs.exp() <= 1e-10
    };
    if phase.re <= 0.0 || !im_ok {
        return Err(Error::Numerical(format!(
            "Toeplitz determinant is not real positive (phase {phase}) at n = {n}, t = {t}"
        )));
    }
    Ok(log_abs + phase.re.ln())
}

/// `G^n(t) = det [φ̂_t(j − j′)]_{j,j′=1..n}`.
pub fn toeplitz_generating(n: usize, t: f64, p: &IsingParams, quad: &QuadratureRule) -> Result<f64> {
    toeplitz_log_generating(n, t, p, quad).map(f64::exp)
}

/// `F(t) = (1/2π) ∫ log φ_t(k) dk` on the principal branch.
pub fn szego_f(t: f64, p: &IsingParams, quad: &QuadratureRule) -> Result<f64> {
    let mut acc = C64::new(0.0, 0.0);
    for (&k, &w) in quad.nodes().iter().zip(quad.weights()) {
        let phi = symbol_phi(t, k, p);
        if phi.re <= 0.0 {
            return Err(Error::Numerical(format!("Re φ_t ≤ 0 at k = {k}, t = {t}")));
        }
        acc += phi.ln() * w;
    }
    if acc.im.abs() > 1e-9 * acc.re.abs().max(1.0) {
        return Err(Error::Numerical(format!("F({t}) has imaginary part {}", acc.im)));
    }
    Ok(acc.re)
}

/// `F′(0) = ⟨σ^z⟩ = (1/2π) ∫ (g + cos k)/√(g² + 2g cos k + 1) dk`.
pub fn mean_magnetization(p: &IsingParams, quad: &QuadratureRule) -> f64 {
    quad.integrate(|k| C64::from(p.unit(k).re)).re
}

/// Value of the Legendre transform at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateValue {
    pub m: f64,
    pub value: f64,
    /// Maximizing tilt.
    pub t: f64,
    /// Set when the maximizer sits on the edge of `[−40, 40]`.
    pub boundary: bool,
}

const T_BRACKET: f64 = 40.0;

/// `I(m) = sup_t (t m − F(t))` by golden-section search on `[−40, 40]`.
pub fn rate_function(m: f64, p: &IsingParams, quad: &QuadratureRule) -> Result<RateValue> {
    if !(-1.0..=1.0).contains(&m) {
        return Err(Error::Domain(format!("m must lie in [−1, 1], got {m}")));
    }
    let obj = |t: f64| -> Result<f64> { Ok(t * m - szego_f(t, p, quad)?) };
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (-T_BRACKET, T_BRACKET);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = obj(c)?;
    let mut fd = obj(d)?;
    while b - a > 1e-10 {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = obj(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = obj(d)?;
        }
    }
    let t = 0.5 * (a + b);
    let value = obj(t)?.max(fc).max(fd);
    // at the spectrum edges the supremum is only approached as |t| → ∞
    let edge = if m >= 0.0 { T_BRACKET } else { -T_BRACKET };
    let at_edge = obj(edge)?;
    if T_BRACKET - t.abs() < 1e-6 || at_edge >= value - 1e-12 * value.abs().max(1.0) {
        return Ok(RateValue { m, value: value.max(at_edge), t: edge, boundary: true });
    }
    Ok(RateValue { m, value, t, boundary: false })
}

/// One row of the generating-function table.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LdpRow {
    pub n: usize,
    pub t: f64,
    pub g_n: f64,
    pub log_g_over_n: f64,
    pub f: f64,
}

/// `G^n(t)`, `(1/n) log G^n(t)` and `F(t)` over a grid, in row-major order.
pub fn ldp_table(ns: &[usize], ts: &[f64], p: &IsingParams, quad: &QuadratureRule) -> Result<Vec<LdpRow>> {
    let grid: Vec<(usize, f64)> = ns.iter().flat_map(|&n| ts.iter().map(move |&t| (n, t))).collect();
    grid.into_par_iter()
        .map(|(n, t)| {
            let lg = toeplitz_log_generating(n, t, p, quad)?;
            Ok(LdpRow { n, t, g_n: lg.exp(), log_g_over_n: lg / n as f64, f: szego_f(t, p, quad)? })
        })
        .collect()
}
