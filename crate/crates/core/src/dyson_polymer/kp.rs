use super::series::spectral_norm;
use super::DysonModel;
use crate::error::{Error, Result};
use crate::spin_algebra::{Interaction, Lattice};

/// Constants of the constituent model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KPParams {
    pub alpha1: f64,
    pub alpha2: f64,
    pub delta1: f64,
    pub delta2: f64,
    /// Single-site gap `g` of `Φ₀`.
    pub gap: f64,
    pub beta: f64,
    pub gamma: f64,
    /// Interaction range `r`.
    pub range: usize,
}

impl KPParams {
    /// Takes `γ` and `r` from the model.
    pub fn new(alpha1: f64, alpha2: f64, delta1: f64, delta2: f64, gap: f64, beta: f64, model: &DysonModel) -> Result<Self> {
        let p = KPParams { alpha1, alpha2, delta1, delta2, gap, beta, gamma: model.gamma(), range: model.range() };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha1 > 0.0 && self.alpha2 > 0.0) {
            return Err(Error::Domain("α₁ and α₂ must be positive".into()));
        }
        if self.alpha1 >= self.gap {
            return Err(Error::Domain(format!("α₁ = {} must lie below the gap {}", self.alpha1, self.gap)));
        }
        for d in [self.delta1, self.delta2] {
            if !(d > 0.0 && d < 1.0) {
                return Err(Error::Domain(format!("δ = {d} must lie in (0, 1)")));
            }
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::Domain(format!("β must be positive, got {}", self.beta)));
        }
        if !(self.gamma >= 0.0) || !self.gamma.is_finite() {
            return Err(Error::Domain(format!("γ must be finite and non-negative, got {}", self.gamma)));
        }
        if self.range == 0 {
            return Err(Error::Domain("range must be positive".into()));
        }
        Ok(())
    }

    fn decay(&self) -> f64 {
        self.gap - self.alpha1
    }
}

/// Left side and bound for one reference constituent `𝔵₀`.
#[derive(Clone, Debug, PartialEq)]
pub struct KpEntry {
    /// `[i]` for a horizontal constituent, `B` for a vertical one at `t = β/2`.
    pub sites: Vec<i64>,
    pub vertical: bool,
    pub lhs: f64,
    pub d: f64,
}

impl KpEntry {
    pub fn holds(&self) -> bool {
        self.lhs <= self.d
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct KpCertificate {
    pub entries: Vec<KpEntry>,
    pub passes: bool,
}

impl KpCertificate {
    /// `max lhs/d` over the reference constituents.
    pub fn worst_ratio(&self) -> f64 {
        self.entries.iter().map(|e| e.lhs / e.d).fold(0.0, f64::max)
    }
}

fn distance(a: &[i64], b: &[i64]) -> i64 {
    a.iter().flat_map(|x| b.iter().map(move |y| (x - y).abs())).min().unwrap_or(i64::MAX)
}

/// Evaluates `∫ dw(𝔵₁) ξ_{α₁}(𝔵₀, 𝔵₁) e^{d(𝔵₁)} ≤ d(𝔵₀)` for every
/// horizontal constituent `i ∈ Λ` and every vertical constituent `(B, β/2)`
/// with `Υ(B) ≠ 0`, `B ⊆ Λ`.
///
/// Vertical weights are `w(B) = 4^{|B|} e^{(α₂+γ)|B|} ‖Υ(B)‖` per unit time,
/// horizontal ones `e^{−(g−α₁)β+γ}`; the time integrals are done in closed form.
pub fn kp_certificate(p: &KPParams, upsilon: &Interaction, sites: &[i64]) -> Result<KpCertificate> {
    p.validate()?;
    let lat = Lattice::new(sites.to_vec(), upsilon.local_dim())?;
    let c = p.decay();
    let r = p.range as i64;
    let touch = 2 * r - 2;

    let mut verticals: Vec<(Vec<i64>, f64)> = Vec::new();
    for (_, b, op) in upsilon.placements(&lat) {
        let norm = spectral_norm(op);
        if norm > 0.0 {
            let len = b.len() as f64;
            let w = 4f64.powi(b.len() as i32) * ((p.alpha2 + p.gamma) * len).exp() * norm;
            verticals.push((b, w * (p.delta2 * len).exp()));
        }
    }
    let horizontal = (-c * p.beta + p.gamma + p.delta1 * c * p.beta).exp();

    let mut entries = Vec::new();
    for &i in sites {
        let me = [i];
        let h_count = sites.iter().filter(|&&j| (i - j).abs() <= touch).count() as f64;
        let v_sum: f64 = verticals.iter().filter(|(b, _)| distance(b, &me) <= touch).map(|(_, w)| w * p.beta).sum();
        entries.push(KpEntry { sites: vec![i], vertical: false, lhs: h_count * horizontal + v_sum, d: p.delta1 * c * p.beta });
    }
    let t0 = 0.5 * p.beta;
    let time_integral = (2.0 - (-c * t0).exp() - (-c * (p.beta - t0)).exp()) / c;
    for (b0, _) in &verticals {
        let v_sum: f64 = verticals.iter().filter(|(b, _)| distance(b, b0) < 2 * r).map(|(_, w)| w * time_integral).sum();
        let h_count = sites.iter().filter(|&&j| distance(&[j], b0) <= touch).count() as f64;
        entries.push(KpEntry { sites: b0.clone(), vertical: true, lhs: v_sum + h_count * horizontal, d: p.delta2 * b0.len() as f64 });
    }
    let passes = entries.iter().all(KpEntry::holds);
    Ok(KpCertificate { entries, passes })
}
