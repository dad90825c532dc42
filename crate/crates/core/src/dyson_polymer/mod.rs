//! Dyson expansion of `e^{−β(H₀+V)}` around a product ground state,
//! diagram densities, their polymer factorization and a single-step
//! Kotecký–Preis certificate for the constituent model.
//!
//! A diagram `(t, S, B)` records interaction times `t₁ < … < t_n`, the sets
//! `S_k` of excited sites on `(t_k, t_{k+1})` and the interaction supports
//! `B_k`. With `𝒫(S) = ⊗_{i∈S}(1 − 𝒫_i) ⊗_{i∉S} 𝒫_i` its density is
//!
//! `ρ = (−1)^n Tr(𝒫(S₀) Q(x) 𝒫(S_n) e^{−(β−t_n)H₀} Υ(B_n) ⋯ 𝒫(S₁) e^{−(t₂−t₁)H₀} Υ(B₁) e^{−t₁H₀} 𝒫(S₀)) / Tr(𝒫(∅) Q(x))`,
//!
//! so that `Tr(Q(x) e^{−βH}) = Tr(𝒫(∅)Q(x)) (1 + Σ_n ∫ ρ_n)`.

mod kp;
mod polymer;
mod random;
mod series;

pub use kp::{kp_certificate, KPParams, KpCertificate, KpEntry};
pub use polymer::{polymer_decompose, Polymer};
pub use random::random_loop_diagram;
pub use series::{dyson_remainder_bound, spectral_norm, truncated_dyson, DysonTruncation};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spin_algebra::{build_hamiltonian, embed_on, hermitian_eigh, kron_all, pauli, CMatrix, Interaction, Lattice, ObservableSpectrum};
use crate::C64;

pub(crate) const MAX_SITES: usize = 8;
pub(crate) const MAX_ORDER: usize = 4;

/// A diagram of `n` interactions on `Λ × [0, β]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagram {
    pub beta: f64,
    pub times: Vec<f64>,
    /// `S₀, …, S_n`.
    #[serde(rename = "S")]
    pub s: Vec<Vec<i64>>,
    /// `B₁, …, B_n`.
    #[serde(rename = "B")]
    pub b: Vec<Vec<i64>>,
}

impl Diagram {
    pub fn new(beta: f64, times: Vec<f64>, s: Vec<Vec<i64>>, b: Vec<Vec<i64>>) -> Result<Self> {
        let mut d = Diagram { beta, times, s, b };
        d.normalize();
        d.validate()?;
        Ok(d)
    }

    /// A diagram without interactions, excited on `s0` for all times.
    pub fn empty(beta: f64, s0: Vec<i64>) -> Result<Self> {
        Self::new(beta, vec![], vec![s0], vec![])
    }

    /// Parses a JSON array of diagrams.
    pub fn parse_list(json: &str) -> Result<Vec<Diagram>> {
        let mut list: Vec<Diagram> = serde_json::from_str(json).map_err(|e| Error::Config(format!("diagram list: {e}")))?;
        for d in &mut list {
            d.normalize();
            d.validate()?;
        }
        Ok(list)
    }

    fn normalize(&mut self) {
        for s in self.s.iter_mut().chain(self.b.iter_mut()) {
            s.sort_unstable();
            s.dedup();
        }
    }

    pub fn order(&self) -> usize {
        self.times.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.times.len();
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::Domain(format!("β must be positive, got {}", self.beta)));
        }
        if self.s.len() != n + 1 || self.b.len() != n {
            return Err(Error::Domain(format!(
                "{n} times need {} sets S and {n} sets B, got {} and {}",
                n + 1,
                self.s.len(),
                self.b.len()
            )));
        }
        let mut last = 0.0;
        for &t in &self.times {
            if !(t > last && t < self.beta) {
                return Err(Error::Domain(format!("times must increase strictly inside (0, β): {:?}", self.times)));
            }
            last = t;
        }
        for b in &self.b {
            if b.is_empty() || b.windows(2).any(|w| w[1] != w[0] + 1) {
                return Err(Error::Domain(format!("interaction set {b:?} is not connected")));
            }
        }
        Ok(())
    }

    /// `S_k ∖ B_k = S_{k−1} ∖ B_k` for every `k`.
    pub fn is_member(&self) -> bool {
        (0..self.order()).all(|k| {
            let b = &self.b[k];
            let before: Vec<i64> = self.s[k].iter().filter(|i| !b.contains(i)).copied().collect();
            let after: Vec<i64> = self.s[k + 1].iter().filter(|i| !b.contains(i)).copied().collect();
            before == after
        })
    }

    /// Root set `S₀ ∪ S_n`.
    pub fn roots(&self) -> Vec<i64> {
        let mut r: Vec<i64> = self.s[0].iter().chain(self.s.last().unwrap()).copied().collect();
        r.sort_unstable();
        r.dedup();
        r
    }

    /// Every site touched by the diagram.
    pub fn support(&self) -> Vec<i64> {
        let mut r: Vec<i64> = self.s.iter().chain(&self.b).flatten().copied().collect();
        r.sort_unstable();
        r.dedup();
        r
    }

    /// `L_h = Σ_k |S_k| (t_{k+1} − t_k)`.
    pub fn horizontal_length(&self) -> f64 {
        let mut edges = vec![0.0];
        edges.extend(&self.times);
        edges.push(self.beta);
        self.s.iter().enumerate().map(|(k, s)| s.len() as f64 * (edges[k + 1] - edges[k])).sum()
    }

    /// `L_v = Σ_k |B_k|`.
    pub fn vertical_length(&self) -> usize {
        self.b.iter().map(|b| b.len()).sum()
    }
}

/// Unperturbed interaction `Φ₀`, perturbation `Υ`, the single-site ground
/// vector `b` of `Φ₀` (with `𝒫 = |b⟩⟨b|`) and the measured observable.
///
/// `H₀` must annihilate the product state `⊗ b`, so that `𝒫(∅)` carries
/// energy zero.
#[derive(Clone, Debug)]
pub struct DysonModel {
    pub phi0: Interaction,
    pub upsilon: Interaction,
    ground: Vec<C64>,
    pub spec: ObservableSpectrum,
}

impl DysonModel {
    pub fn new(phi0: Interaction, upsilon: Interaction, ground: Vec<C64>, spec: ObservableSpectrum) -> Result<Self> {
        let m = phi0.local_dim();
        if upsilon.local_dim() != m || spec.local_dim() != m || ground.len() != m {
            return Err(Error::Domain("Φ₀, Υ, ground vector and observable must share the local dimension".into()));
        }
        let norm = ground.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::Domain(format!("ground vector has norm {norm}")));
        }
        Ok(DysonModel { phi0, upsilon, ground, spec })
    }

    /// `Φ₀({0}) = h(1 − σ^z)`, `Υ({0,1}) = −ε σ^xσ^x`, ground `|↑⟩`.
    pub fn ising(h: f64, epsilon: f64, spec: ObservableSpectrum) -> Result<Self> {
        if !(h > 0.0) {
            return Err(Error::Domain(format!("field must be positive, got {h}")));
        }
        let id = CMatrix::identity(2, 2);
        let phi0 = Interaction::new(2).with_term(&[0], (id - pauli::z()) * C64::from(h))?;
        let upsilon = if epsilon == 0.0 {
            Interaction::new(2)
        } else {
            Interaction::new(2).with_term(&[0, 1], pauli::x().kronecker(&pauli::x()) * C64::from(-epsilon))?
        };
        Self::new(phi0, upsilon, vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)], spec)
    }

    pub fn local_dim(&self) -> usize {
        self.ground.len()
    }

    /// Interaction range `r = diam Φ₀ + 1`.
    pub fn range(&self) -> usize {
        self.phi0.range() + 1
    }

    pub fn projector(&self) -> CMatrix {
        let b = nalgebra::DVector::from_column_slice(&self.ground);
        &b * b.adjoint()
    }

    /// `Tr(Q(x)𝒫)` for eigenvalue index `k`.
    pub fn overlap(&self, k: usize) -> f64 {
        (self.spec.projection(k) * self.projector()).trace().re
    }

    /// `γ = max_x log(m / Tr(Q(x)𝒫))`.
    pub fn gamma(&self) -> f64 {
        let m = self.local_dim() as f64;
        (0..self.spec.len()).map(|k| (m / self.overlap(k)).ln()).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Eigenvalue index with the largest overlap with `𝒫`.
    fn typical_value(&self) -> usize {
        (0..self.spec.len()).max_by(|&a, &b| self.overlap(a).total_cmp(&self.overlap(b))).unwrap()
    }
}

struct Workspace {
    lat: Lattice,
    sites: Vec<i64>,
    h0: (Vec<f64>, CMatrix),
}

impl Workspace {
    fn new(model: &DysonModel, sites: &[i64]) -> Result<Self> {
        if sites.len() > MAX_SITES {
            return Err(Error::Capability(format!("{} sites exceed the diagram cap of {MAX_SITES}", sites.len())));
        }
        let lat = Lattice::new(sites.to_vec(), model.local_dim())?;
        let h = build_hamiltonian(&model.phi0, &lat)?;
        let h0 = hermitian_eigh(&h.to_dense()?);
        Ok(Workspace { lat, sites: sites.to_vec(), h0 })
    }

    fn propagator(&self, t: f64) -> CMatrix {
        let (vals, vecs) = &self.h0;
        let scaled = CMatrix::from_fn(vecs.nrows(), vecs.ncols(), |r, c| vecs[(r, c)] * (-t * vals[c]).exp());
        scaled * vecs.adjoint()
    }

    fn excitation(&self, model: &DysonModel, s: &[i64]) -> CMatrix {
        let p = model.projector();
        let q = CMatrix::identity(p.nrows(), p.ncols()) - &p;
        let factors: Vec<CMatrix> = self.sites.iter().map(|i| if s.contains(i) { q.clone() } else { p.clone() }).collect();
        kron_all(&factors)
    }
}

fn check_sets(d: &Diagram, sites: &[i64]) -> Result<()> {
    for s in d.s.iter().chain(&d.b) {
        if let Some(i) = s.iter().find(|i| !sites.contains(i)) {
            return Err(Error::Domain(format!("site {i} of the diagram lies outside the volume")));
        }
    }
    if d.order() > MAX_ORDER {
        return Err(Error::Capability(format!("order {} exceeds {MAX_ORDER}", d.order())));
    }
    Ok(())
}

/// Density `ρ_n` of a diagram on the volume `sites`, for the measurement
/// outcome `x` (eigenvalue indices, one per site in `sites` order).
///
/// Returns 0 for tuples outside the diagram set and for the empty diagram.
pub fn diagram_density(d: &Diagram, model: &DysonModel, sites: &[i64], x: &[usize]) -> Result<C64> {
    d.validate()?;
    check_sets(d, sites)?;
    let ws = Workspace::new(model, sites)?;
    density_in(d, model, &ws, x)
}

fn density_in(d: &Diagram, model: &DysonModel, ws: &Workspace, x: &[usize]) -> Result<C64> {
    if x.len() != ws.sites.len() {
        return Err(Error::Domain(format!("configuration has {} entries for {} sites", x.len(), ws.sites.len())));
    }
    let mut denom = 1.0;
    for (i, &k) in x.iter().enumerate() {
        if k >= model.spec.len() {
            return Err(Error::Domain(format!("eigenvalue index {k} out of range")));
        }
        let o = model.overlap(k);
        if o <= 1e-14 {
            return Err(Error::SingularConditioning(format!("Tr(Q(x)𝒫) = {o:e} at site {}", ws.sites[i])));
        }
        denom *= o;
    }
    let n = d.order();
    if n == 0 && d.s[0].is_empty() {
        return Ok(C64::new(0.0, 0.0));
    }
    if !d.is_member() {
        return Ok(C64::new(0.0, 0.0));
    }
    let mut ups = Vec::with_capacity(n);
    for b in &d.b {
        match model.upsilon.term_on(b) {
            Some(op) => ups.push(embed_on(op, b, &ws.lat)?.to_dense()?),
            None => return Ok(C64::new(0.0, 0.0)),
        }
    }
    let q = kron_all(&x.iter().map(|&k| model.spec.projection(k).clone()).collect::<Vec<_>>());
    let p0 = ws.excitation(model, &d.s[0]);
    let mut chain = ws.propagator(d.times.first().copied().unwrap_or(d.beta)) * &p0;
    for k in 0..n {
        let next = d.times.get(k + 1).copied().unwrap_or(d.beta);
        chain = ws.excitation(model, &d.s[k + 1]) * ws.propagator(next - d.times[k]) * &ups[k] * chain;
    }
    let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
    Ok((p0 * q * chain).trace() * (sign / denom))
}

/// Outcome of [`factorization_residual`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FactorizationReport {
    pub density: C64,
    /// `|ρ − Π_α ρ(𝔭_α)|`.
    pub residual: f64,
    /// Change of `ρ` when one buffer site is added on each side.
    pub volume_delta: f64,
    /// Change of `ρ` when every conditioning value off the root set is changed.
    pub root_delta: f64,
    pub polymers: usize,
}

/// Checks the polymer factorization, volume independence and root
/// locality of one diagram density.
///
/// The factorization holds exactly when `(1 − 𝒫) Q(x_i) (1 − 𝒫)` is
/// proportional to `1 − 𝒫` at the root sites, e.g. for `m = 2`.
pub fn factorization_residual(d: &Diagram, model: &DysonModel, sites: &[i64], x: &[usize]) -> Result<FactorizationReport> {
    d.validate()?;
    check_sets(d, sites)?;
    let ws = Workspace::new(model, sites)?;
    let rho = density_in(d, model, &ws, x)?;

    let polys = polymer_decompose(d, model.range());
    let mut prod = C64::new(1.0, 0.0);
    for p in &polys {
        prod *= density_in(&p.diagram, model, &ws, x)?;
    }

    let lo = *sites.iter().min().unwrap();
    let hi = *sites.iter().max().unwrap();
    let mut wide = sites.to_vec();
    wide.insert(0, lo - 1);
    wide.push(hi + 1);
    let mut wide_x = x.to_vec();
    let t = model.typical_value();
    wide_x.insert(0, t);
    wide_x.push(t);
    let volume_delta = if wide.len() <= MAX_SITES {
        let w = Workspace::new(model, &wide)?;
        (density_in(d, model, &w, &wide_x)? - rho).norm()
    } else {
        f64::NAN
    };

    let roots = d.roots();
    let mut flipped = x.to_vec();
    for (i, s) in sites.iter().enumerate() {
        if !roots.contains(s) {
            flipped[i] = next_admissible(model, x[i]);
        }
    }
    let root_delta = (density_in(d, model, &ws, &flipped)? - rho).norm();

    Ok(FactorizationReport { density: rho, residual: (rho - prod).norm(), volume_delta, root_delta, polymers: polys.len() })
}

fn next_admissible(model: &DysonModel, k: usize) -> usize {
    let len = model.spec.len();
    (1..len).map(|j| (k + j) % len).find(|&j| model.overlap(j) > 1e-14).unwrap_or(k)
}
