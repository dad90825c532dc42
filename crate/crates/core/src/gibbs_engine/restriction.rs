use rayon::prelude::*;

use super::{QuantumState, Repr};
use crate::cli::report::format_float;
use crate::error::{Error, Result};
use crate::spin_algebra::{configurations, Lattice, ObservableSpectrum};
use crate::C64;

const CLAMP: f64 = -1e-10;
const MAX_CONFIGS: usize = 1 << 20;

/// Probabilities at or below this are treated as exact zeros; squared
/// rounding errors of a normalized state vector sit far below it.
pub const NULL_PROBABILITY: f64 = 1e-20;

/// Probability table over `sp(X)^W`.
///
/// Configurations are stored as eigenvalue indices (ascending eigenvalue
/// order per site), lexicographic with the first window site most significant.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassicalDistribution {
    window: Vec<i64>,
    spectrum: Vec<f64>,
    probs: Vec<f64>,
}

impl ClassicalDistribution {
    /// Validates shape and normalization; entries in `[−1e-10, 0)` are clamped to 0.
    pub fn from_probs(window: Vec<i64>, spectrum: Vec<f64>, mut probs: Vec<f64>) -> Result<Self> {
        let k = spectrum.len();
        let want = k
            .checked_pow(window.len() as u32)
            .ok_or_else(|| Error::Capability("configuration space too large".into()))?;
        if probs.len() != want {
            return Err(Error::Domain(format!("expected {want} probabilities, got {}", probs.len())));
        }
        for p in &mut probs {
            if !p.is_finite() || *p < CLAMP {
                return Err(Error::Numerical(format!("invalid probability {p}")));
            }
            if *p < 0.0 {
                *p = 0.0;
            }
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::Numerical(format!("probabilities sum to {total}")));
        }
        Ok(ClassicalDistribution { window, spectrum, probs })
    }

    pub fn window(&self) -> &[i64] {
        &self.window
    }

    pub fn spectrum(&self) -> &[f64] {
        &self.spectrum
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn index(&self, cfg: &[usize]) -> usize {
        let k = self.spectrum.len();
        cfg.iter().fold(0, |acc, &c| acc * k + c)
    }

    pub fn config(&self, mut idx: usize) -> Vec<usize> {
        let k = self.spectrum.len();
        let mut c = vec![0; self.window.len()];
        for j in (0..c.len()).rev() {
            c[j] = idx % k;
            idx /= k;
        }
        c
    }

    pub fn prob(&self, cfg: &[usize]) -> f64 {
        self.probs[self.index(cfg)]
    }

    /// Probability of a configuration given by eigenvalues.
    pub fn prob_of_values(&self, values: &[f64]) -> Result<f64> {
        if values.len() != self.window.len() {
            return Err(Error::Domain(format!("expected {} values, got {}", self.window.len(), values.len())));
        }
        let cfg = values.iter().map(|&v| self.value_index(v)).collect::<Result<Vec<_>>>()?;
        Ok(self.prob(&cfg))
    }

    pub fn value_index(&self, v: f64) -> Result<usize> {
        let scale = self.spectrum.iter().fold(1.0f64, |a, x| a.max(x.abs()));
        self.spectrum
            .iter()
            .position(|&x| (x - v).abs() <= 1e-9 * scale)
            .ok_or_else(|| Error::Domain(format!("{v} is not in the spectrum {:?}", self.spectrum)))
    }

    /// Marginal on a sub-window (in the given order).
    pub fn marginal(&self, sites: &[i64]) -> Result<ClassicalDistribution> {
        let pos = sites
            .iter()
            .map(|s| self.window.iter().position(|w| w == s).ok_or_else(|| Error::Domain(format!("site {s} not in window"))))
            .collect::<Result<Vec<_>>>()?;
        let k = self.spectrum.len();
        let mut out = vec![0.0; k.pow(sites.len() as u32)];
        for (idx, &p) in self.probs.iter().enumerate() {
            let cfg = self.config(idx);
            let j = pos.iter().fold(0, |acc, &q| acc * k + cfg[q]);
            out[j] += p;
        }
        Ok(ClassicalDistribution { window: sites.to_vec(), spectrum: self.spectrum.clone(), probs: out })
    }

    /// CSV with one column per window site (eigenvalues) and a `prob` column.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        let mut header: Vec<String> = self.window.iter().map(|w| format!("x{w}")).collect();
        header.push("prob".into());
        s.push_str(&header.join(","));
        s.push('\n');
        for (idx, &p) in self.probs.iter().enumerate() {
            let mut row: Vec<String> = self.config(idx).iter().map(|&c| format_float(self.spectrum[c])).collect();
            row.push(format_float(p));
            s.push_str(&row.join(","));
            s.push('\n');
        }
        s
    }
}

/// Apply `U†` of the observable eigenbasis at lattice position `pos`.
fn rotate_site(v: &mut [C64], lat: &Lattice, pos: usize, spec: &ObservableSpectrum) {
    let m = lat.local_dim();
    let stride = lat.stride(pos);
    let ud = spec.basis().adjoint();
    let mut buf = vec![C64::new(0.0, 0.0); m];
    for b in 0..lat.dim() {
        if lat.digit(b, pos) != 0 {
            continue;
        }
        for (d, slot) in buf.iter_mut().enumerate() {
            *slot = (0..m).map(|e| ud[(d, e)] * v[b + e * stride]).sum();
        }
        for (d, val) in buf.iter().enumerate() {
            v[b + d * stride] = *val;
        }
    }
}

fn accumulate(v: &[C64], weight: f64, lat: &Lattice, pos: &[usize], spec: &ObservableSpectrum, acc: &mut [f64]) {
    let k = spec.len();
    let rotated;
    let amps: &[C64] = if spec.is_diagonal() {
        v
    } else {
        let mut r = v.to_vec();
        for &p in pos {
            rotate_site(&mut r, lat, p, spec);
        }
        rotated = r;
        &rotated
    };
    for (b, a) in amps.iter().enumerate() {
        let p = a.norm_sqr();
        if p == 0.0 {
            continue;
        }
        let idx = pos.iter().fold(0, |acc, &q| acc * k + spec.cluster(lat.digit(b, q)));
        acc[idx] += weight * p;
    }
}

/// `μ(x_W) = Tr(ρ Q_W(x_W))`, read off diagonal probabilities in the
/// eigenbasis of `X` at the window sites.
pub fn classical_restriction(state: &QuantumState, spec: &ObservableSpectrum, window: &[i64]) -> Result<ClassicalDistribution> {
    let lat = state.lattice();
    if spec.local_dim() != lat.local_dim() {
        return Err(Error::Domain("observable and lattice local dimensions differ".into()));
    }
    if window.len() > lat.len() {
        return Err(Error::Domain(format!("window of {} sites exceeds the lattice of {}", window.len(), lat.len())));
    }
    let pos = lat.positions(window)?;
    let k = spec.len();
    let n = k
        .checked_pow(window.len() as u32)
        .filter(|&n| n <= MAX_CONFIGS)
        .ok_or_else(|| Error::Capability(format!("{} configurations exceed {MAX_CONFIGS}", window.len())))?;
    let probs = match &state.repr {
        Repr::Ground { vector, .. } => {
            let mut acc = vec![0.0; n];
            accumulate(vector, 1.0, lat, &pos, spec, &mut acc);
            acc
        }
        Repr::Thermal { vectors, weights, .. } => {
            const CHUNK: usize = 32;
            let dim = lat.dim();
            let partials: Vec<Vec<f64>> = (0..dim.div_ceil(CHUNK))
                .into_par_iter()
                .map(|c| {
                    let mut acc = vec![0.0; n];
                    for j in c * CHUNK..((c + 1) * CHUNK).min(dim) {
                        if weights[j] > 0.0 {
                            let col: Vec<C64> = vectors.column(j).iter().copied().collect();
                            accumulate(&col, weights[j], lat, &pos, spec, &mut acc);
                        }
                    }
                    acc
                })
                .collect();
            let mut acc = vec![0.0; n];
            for p in partials {
                for (a, b) in acc.iter_mut().zip(p) {
                    *a += b;
                }
            }
            acc
        }
    };
    ClassicalDistribution::from_probs(window.to_vec(), spec.eigenvalues().to_vec(), probs)
}

/// Distribution of `(1/|W|) Σ_i F(x_i)` under the classical restriction,
/// as ascending (value, probability) pairs.
pub fn magnetization_distribution(
    state: &QuantumState,
    f: impl Fn(f64) -> f64,
    spec: &ObservableSpectrum,
    window: &[i64],
) -> Result<Vec<(f64, f64)>> {
    if window.is_empty() {
        return Err(Error::Domain("empty window".into()));
    }
    let mu = classical_restriction(state, spec, window)?;
    let fx: Vec<f64> = spec.eigenvalues().iter().map(|&x| f(x)).collect();
    let nw = window.len() as f64;
    let mut pts: Vec<(f64, f64)> = configurations(spec.len(), window.len())
        .zip(mu.probs())
        .map(|(cfg, &p)| (cfg.iter().map(|&c| fx[c]).sum::<f64>() / nw, p))
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (v, p) in pts {
        match out.last_mut() {
            Some(last) if (v - last.0).abs() <= 1e-12 * last.0.abs().max(1.0) => last.1 += p,
            _ => out.push((v, p)),
        }
    }
    Ok(out)
}
