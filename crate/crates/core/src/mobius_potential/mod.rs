//! Inclusion-exclusion weights, classical potentials and their checks.
//!
//! For a finite-volume state the weights
//! `w(A) = Σ_{B⊆A} (−1)^{|A∖B|} log tr e^{−βH_B}` (normalized trace) are the
//! unique decomposition of log-partition functions consistent across volumes.
//! Conditioning on measurement outcomes turns them into a classical potential
//! `Ψ` with `μ_Λ(x) = exp(Σ_{A⊆Λ} Ψ_A(x_A)) / Z_Λ`.

mod weights;

pub use weights::{log_normalized_trace, mobius_weights, Conditioning, WeightTable};

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::cli::report::format_float;
use crate::error::{Error, Result};
use crate::gibbs_engine::{classical_restriction, gibbs_state, ClassicalDistribution, QuantumState, NULL_PROBABILITY};
use crate::spin_algebra::{build_hamiltonian, configurations, hermitian_eigh, Interaction, Lattice, ObservableSpectrum};

/// Largest volume for potentials.
pub const MAX_SITES: usize = 8;

/// Classical potential on a finite volume.
///
/// Each term maps the configurations of its site set (eigenvalue indices,
/// lexicographic) to a real value; `−∞` marks a hard-core exclusion.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassicalPotential {
    spectrum: Vec<f64>,
    terms: BTreeMap<Vec<i64>, Vec<f64>>,
    pub kappa: f64,
}

impl ClassicalPotential {
    pub fn new(spectrum: Vec<f64>) -> Self {
        ClassicalPotential { spectrum, terms: BTreeMap::new(), kappa: 0.0 }
    }

    /// Sets `Ψ_A`; `values` must cover `sp(X)^A`.
    pub fn insert(&mut self, sites: Vec<i64>, values: Vec<f64>) -> Result<()> {
        if sites.is_empty() {
            return Err(Error::Domain("Ψ_∅ is not part of a potential".into()));
        }
        let want = self.spectrum.len().pow(sites.len() as u32);
        if values.len() != want {
            return Err(Error::Domain(format!("term on {sites:?} needs {want} values, got {}", values.len())));
        }
        self.terms.insert(sites, values);
        Ok(())
    }

    pub fn spectrum(&self) -> &[f64] {
        &self.spectrum
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<i64>, &Vec<f64>)> {
        self.terms.iter()
    }

    pub fn term(&self, sites: &[i64]) -> Option<&[f64]> {
        self.terms.get(sites).map(|v| v.as_slice())
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Value of `Ψ_A` at a configuration of `A` given as eigenvalue indices.
    pub fn value(&self, sites: &[i64], cfg: &[usize]) -> Option<f64> {
        let k = self.spectrum.len();
        self.terms.get(sites).map(|v| v[cfg.iter().fold(0, |a, &c| a * k + c)])
    }

    /// Dump with columns `sites`, `config`, `value` (semicolon-joined lists).
    pub fn to_csv(&self) -> String {
        let mut s = String::from("sites,config,value\n");
        for (sites, vals) in &self.terms {
            let label = sites.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";");
            for (cfg, v) in configurations(self.spectrum.len(), sites.len()).zip(vals) {
                let c = cfg.iter().map(|&i| format_float(self.spectrum[i])).collect::<Vec<_>>().join(";");
                s.push_str(&format!("{label},{c},{}\n", format_float(*v)));
            }
        }
        s
    }
}

/// Möbius transform over the subsets of an `n`-element set, in place:
/// `f[A] ← Σ_{B⊆A} (−1)^{|A∖B|} f[B]`, with `−∞` treated as a hard zero.
pub(crate) fn mobius_in_place(f: &mut [f64], n: usize) {
    for bit in 0..n {
        for mask in 0..f.len() {
            if mask & (1 << bit) != 0 {
                f[mask] -= f[mask ^ (1 << bit)];
            }
        }
    }
}

fn subset_sites(sites: &[i64], mask: usize) -> Vec<i64> {
    sites.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, &s)| s).collect()
}

/// Assembles `Ψ` from `L_B(x_B) = log tr^{x_B}(…)` tables by Möbius inversion.
///
/// `tables[mask]` is indexed by configurations of the sites in `mask`.
/// When `L_A(x_A) = −∞` the term is set to `−∞`; otherwise every subset value
/// is finite and the alternating sum is taken directly.
fn assemble(sites: &[i64], k: usize, tables: &[Vec<f64>], single_site: impl Fn(usize) -> f64) -> Result<BTreeMap<Vec<i64>, Vec<f64>>> {
    let n = sites.len();
    let mut terms = BTreeMap::new();
    for mask in 1usize..(1 << n) {
        let members: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        let mut vals = Vec::with_capacity(k.pow(members.len() as u32));
        for cfg in configurations(k, members.len()) {
            let own = tables[mask][cfg.iter().fold(0, |a, &c| a * k + c)];
            let v = if own == f64::NEG_INFINITY {
                f64::NEG_INFINITY
            } else {
                let mut acc = 0.0;
                for sub in 0..(1usize << members.len()) {
                    let mut bmask = 0;
                    let mut idx = 0;
                    for (j, &i) in members.iter().enumerate() {
                        if sub & (1 << j) != 0 {
                            bmask |= 1 << i;
                            idx = idx * k + cfg[j];
                        }
                    }
                    let lb = if bmask == 0 { 0.0 } else { tables[bmask][idx] };
                    let sign = if (members.len() - sub.count_ones() as usize).is_multiple_of(2) { 1.0 } else { -1.0 };
                    acc += sign * lb;
                }
                if members.len() == 1 {
                    acc += single_site(cfg[0]);
                }
                acc
            };
            if v.is_nan() {
                return Err(Error::Numerical(format!("undefined potential value on {:?}", subset_sites(sites, mask))));
            }
            vals.push(v);
        }
        terms.insert(subset_sites(sites, mask), vals);
    }
    Ok(terms)
}

/// Thermal classical potential: `Ψ_A(x_A) = w^{x_A}(A)` for `|A| > 1` and
/// `Ψ_{i}(x_i) = w^{x_i}({i}) + log tr_i Q_i(x_i)`.
pub fn classical_potential(phi: &Interaction, spec: &ObservableSpectrum, beta: f64, sites: &[i64]) -> Result<ClassicalPotential> {
    check_volume(phi, spec, sites)?;
    let n = sites.len();
    let k = spec.len();
    let m = spec.local_dim();
    let tables: Vec<Vec<f64>> = (0..(1usize << n))
        .into_par_iter()
        .map(|mask| {
            if mask == 0 {
                return Ok(vec![0.0]);
            }
            let b = subset_sites(sites, mask);
            let lat = Lattice::new(b.clone(), m)?;
            let h = build_hamiltonian(phi, &lat)?;
            let st = gibbs_state(&h, &lat, beta)?;
            let mu = classical_restriction(&st, spec, &b)?;
            let log_z = st.log_partition().unwrap();
            Ok(configurations(k, b.len())
                .zip(mu.probs())
                .map(|(cfg, &p)| {
                    let log_rank: f64 = cfg.iter().map(|&c| (spec.rank(c) as f64).ln()).sum();
                    if p > 0.0 {
                        log_z + p.ln() - log_rank
                    } else {
                        f64::NEG_INFINITY
                    }
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    let terms = assemble(sites, k, &tables, |c| (spec.rank(c) as f64 / m as f64).ln())?;
    Ok(ClassicalPotential { spectrum: spec.eigenvalues().to_vec(), terms, kappa: 0.0 })
}

/// Potential of the ground-state restriction on `sites`: Möbius inversion of
/// the log-marginals `log μ_Λ(x_B)`, with `−∞` where a marginal vanishes.
pub fn ground_classical_potential(state: &QuantumState, spec: &ObservableSpectrum, sites: &[i64]) -> Result<ClassicalPotential> {
    if !state.is_ground() {
        return Err(Error::Domain("ground_classical_potential needs a ground state".into()));
    }
    if sites.len() > MAX_SITES {
        return Err(Error::Capability(format!("{} sites exceed the potential cap of {MAX_SITES}", sites.len())));
    }
    let mu = classical_restriction(state, spec, sites)?;
    potential_from_distribution(&mu)
}

/// Möbius inversion of the log-marginals of an arbitrary distribution.
pub fn potential_from_distribution(mu: &ClassicalDistribution) -> Result<ClassicalPotential> {
    let sites = mu.window().to_vec();
    let n = sites.len();
    if n > MAX_SITES {
        return Err(Error::Capability(format!("{n} sites exceed the potential cap of {MAX_SITES}")));
    }
    let k = mu.spectrum().len();
    let tables: Vec<Vec<f64>> = (0..(1usize << n))
        .map(|mask| {
            if mask == 0 {
                return Ok(vec![0.0]);
            }
            let marg = mu.marginal(&subset_sites(&sites, mask))?;
            Ok(marg.probs().iter().map(|&p| if p > NULL_PROBABILITY { p.ln() } else { f64::NEG_INFINITY }).collect())
        })
        .collect::<Result<_>>()?;
    let terms = assemble(&sites, k, &tables, |_| 0.0)?;
    Ok(ClassicalPotential { spectrum: mu.spectrum().to_vec(), terms, kappa: 0.0 })
}

fn check_volume(phi: &Interaction, spec: &ObservableSpectrum, sites: &[i64]) -> Result<()> {
    if sites.len() > MAX_SITES {
        return Err(Error::Capability(format!("{} sites exceed the potential cap of {MAX_SITES}", sites.len())));
    }
    if phi.local_dim() != spec.local_dim() {
        return Err(Error::Domain("observable and interaction local dimensions differ".into()));
    }
    Lattice::new(sites.to_vec(), spec.local_dim()).map(|_| ())
}

/// `Σ_A Ψ_A(x_A)` over the terms contained in `sites`, for a configuration of `sites`.
fn energy(psi: &ClassicalPotential, sites: &[i64], cfg: &[usize], filter: impl Fn(&[i64]) -> bool) -> Result<f64> {
    let mut e = 0.0;
    for (a, vals) in psi.terms() {
        if !filter(a) {
            continue;
        }
        let mut sub = Vec::with_capacity(a.len());
        for s in a {
            match sites.iter().position(|x| x == s) {
                Some(p) => sub.push(cfg[p]),
                None => return Err(Error::Domain(format!("potential term {a:?} leaves the volume"))),
            }
        }
        let k = psi.spectrum().len();
        e += vals[sub.iter().fold(0, |acc, &c| acc * k + c)];
    }
    Ok(e)
}

/// `μ(x) = exp(Σ_{A⊆Λ} Ψ_A(x_A)) / Z`; also returns `log Z`.
pub fn gibbs_measure_from_potential(psi: &ClassicalPotential, sites: &[i64]) -> Result<(ClassicalDistribution, f64)> {
    let k = psi.spectrum().len();
    let inside = |a: &[i64]| a.iter().all(|s| sites.contains(s));
    let energies = configurations(k, sites.len())
        .map(|cfg| energy(psi, sites, &cfg, inside))
        .collect::<Result<Vec<f64>>>()?;
    let emax = energies.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if emax == f64::NEG_INFINITY {
        return Err(Error::Numerical("potential excludes every configuration".into()));
    }
    let w: Vec<f64> = energies.iter().map(|e| (e - emax).exp()).collect();
    let z: f64 = w.iter().sum();
    let probs = w.iter().map(|x| x / z).collect();
    let dist = ClassicalDistribution::from_probs(sites.to_vec(), psi.spectrum().to_vec(), probs)?;
    Ok((dist, emax + z.ln()))
}

/// `Σ_{A∋0} e^{κ|A|} sup_x |Ψ_A(x)|`, or the maximum of that sum over all
/// anchor sites when `origin_anchored` is false.
pub fn potential_norm(psi: &ClassicalPotential, kappa: f64, origin_anchored: bool) -> f64 {
    let anchored = |site: i64| -> f64 {
        psi.terms()
            .filter(|(a, _)| a.contains(&site))
            .map(|(a, v)| (kappa * a.len() as f64).exp() * v.iter().fold(0.0f64, |m, x| m.max(x.abs())))
            .sum()
    };
    if origin_anchored {
        anchored(0)
    } else {
        let mut sites: Vec<i64> = psi.terms().flat_map(|(a, _)| a.iter().copied()).collect();
        sites.sort_unstable();
        sites.dedup();
        sites.into_iter().map(anchored).fold(0.0, f64::max)
    }
}

/// Outcome of [`beta_max`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BetaMax {
    pub beta: f64,
    /// Set when the condition holds for every β up to `2^20`.
    pub unbounded: bool,
}

/// Largest `β₀` with `Σ_{A∋0} e^{a|A|}(e^{β₀‖Φ(A)‖} − 1) ≤ a`.
pub fn beta_max(phi: &Interaction, a: f64) -> Result<BetaMax> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::Domain(format!("a must be positive, got {a}")));
    }
    // each offset set of size |A| has |A| translates containing the origin
    let terms: Vec<(f64, f64)> = phi
        .terms()
        .map(|(k, op)| {
            let (vals, _) = hermitian_eigh(op);
            let norm = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            (k.len() as f64 * (a * k.len() as f64).exp(), norm)
        })
        .filter(|t| t.1 > 0.0)
        .collect();
    let f = |b: f64| terms.iter().map(|(c, n)| c * (b * n).exp_m1()).sum::<f64>();
    const CAP: f64 = (1u64 << 20) as f64;
    if terms.is_empty() {
        return Ok(BetaMax { beta: f64::INFINITY, unbounded: true });
    }
    let (mut lo, mut hi) = (0.0, 10.0);
    while f(hi) <= a {
        lo = hi;
        hi *= 2.0;
        if hi > CAP {
            return Ok(BetaMax { beta: f64::INFINITY, unbounded: true });
        }
    }
    while hi - lo > 1e-12 * hi {
        let mid = 0.5 * (lo + hi);
        if f(mid) <= a {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(BetaMax { beta: lo, unbounded: false })
}

/// Result of [`dlr_check`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DlrReport {
    pub max_residual: f64,
    /// Boundary conditions skipped because they have probability zero.
    pub skipped: usize,
}

/// Compares `μ(x_inner | x_boundary)` with the normalized Gibbs factor
/// `exp(Σ_{A∩inner≠∅, A⊆Λ} Ψ_A(x_A))` over all boundary conditions.
pub fn dlr_check(mu: &ClassicalDistribution, psi: &ClassicalPotential, inner: &[i64]) -> Result<DlrReport> {
    let sites = mu.window();
    if inner.is_empty() || inner.iter().any(|s| !sites.contains(s)) {
        return Err(Error::Domain("inner set must be a nonempty subset of the window".into()));
    }
    if psi.spectrum().len() != mu.spectrum().len() {
        return Err(Error::Domain("potential and distribution spectra differ".into()));
    }
    let k = mu.spectrum().len();
    let inner_pos: Vec<usize> = inner.iter().map(|s| sites.iter().position(|x| x == s).unwrap()).collect();
    let outer_pos: Vec<usize> = (0..sites.len()).filter(|p| !inner_pos.contains(p)).collect();
    let touches = |a: &[i64]| a.iter().any(|s| inner.contains(s)) && a.iter().all(|s| sites.contains(s));
    let mut report = DlrReport { max_residual: 0.0, skipped: 0 };
    let mut cfg = vec![0usize; sites.len()];
    for outer in configurations(k, outer_pos.len()) {
        for (&p, &c) in outer_pos.iter().zip(&outer) {
            cfg[p] = c;
        }
        let mut probs = Vec::new();
        let mut energies = Vec::new();
        for inn in configurations(k, inner_pos.len()) {
            for (&p, &c) in inner_pos.iter().zip(&inn) {
                cfg[p] = c;
            }
            probs.push(mu.prob(&cfg));
            energies.push(energy(psi, sites, &cfg, touches)?);
        }
        let marginal: f64 = probs.iter().sum();
        let emax = energies.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if marginal <= 1e-300 || emax == f64::NEG_INFINITY {
            report.skipped += 1;
            continue;
        }
        let w: Vec<f64> = energies.iter().map(|e| (e - emax).exp()).collect();
        let z: f64 = w.iter().sum();
        for (p, wi) in probs.iter().zip(&w) {
            report.max_residual = report.max_residual.max((p / marginal - wi / z).abs());
        }
    }
    Ok(report)
}
