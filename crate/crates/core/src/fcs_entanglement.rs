//! Translation-invariant finitely correlated states on a chain with a
//! two-dimensional ancilla.
//!
//! `ω(O₁ ⋯ O_ℓ) = ½ Tr[E_{O_ℓ} ∘ ⋯ ∘ E_{O₁}(1)]` with
//! `E_O(D) = Σ_{αβ} ⟨α|O|β⟩ A_α D A_β†`.

use rayon::prelude::*;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::gibbs_engine::{ClassicalDistribution, NULL_PROBABILITY};
use crate::spin_algebra::{configurations, hermitian_eigh, CMatrix};
use crate::C64;

const TOL: f64 = 1e-12;
const RANK_TOL: f64 = 1e-10;

/// Longest window for [`fcs_restriction`].
pub const MAX_WINDOW: usize = 10;

/// Which of the three structural conditions a model satisfies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FcsConditions {
    /// Each `A_α` is a multiple of a unitary.
    pub proportional_unitary: bool,
    /// `Σ A_α†A_α = 1`.
    pub normalized: bool,
    /// The `A_α A_β†` span all 2×2 matrices.
    pub full_algebra: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FcsModel {
    a: Vec<CMatrix>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    m: usize,
    #[serde(rename = "A")]
    a: Vec<Vec<[f64; 2]>>,
}

fn is_scalar(m: &CMatrix, tol: f64) -> bool {
    let c = m.trace() / C64::from(m.nrows() as f64);
    (m - CMatrix::identity(m.nrows(), m.ncols()) * c).norm() <= tol
}

impl FcsModel {
    /// Requires 2×2 matrices with `Σ A†A = 1` and `Σ AA† = 1`; the other
    /// conditions are reported by [`FcsModel::conditions`].
    pub fn new(a: Vec<CMatrix>) -> Result<Self> {
        if a.is_empty() {
            return Err(Error::Domain("an FCS needs at least one matrix".into()));
        }
        if a.iter().any(|x| x.shape() != (2, 2)) {
            return Err(Error::Domain("FCS matrices must be 2×2".into()));
        }
        let id = CMatrix::identity(2, 2);
        let left: CMatrix = a.iter().map(|x| x.adjoint() * x).sum();
        if (left - &id).norm() > TOL {
            return Err(Error::Domain("Σ A†A differs from the identity".into()));
        }
        let right: CMatrix = a.iter().map(|x| x * x.adjoint()).sum();
        if (right - &id).norm() > TOL {
            return Err(Error::Domain("Σ AA† differs from the identity; ω would not be normalized".into()));
        }
        Ok(FcsModel { a })
    }

    /// `A_α = σ^α/√3`, α = x, y, z.
    pub fn aklt() -> Self {
        use crate::spin_algebra::pauli;
        let s = C64::from(1.0 / 3f64.sqrt());
        FcsModel::new(vec![pauli::x() * s, pauli::y() * s, pauli::z() * s]).expect("AKLT matrices are valid")
    }

    /// `{m, A: [[[re, im] × 4] × m]}`, each matrix row-major.
    pub fn from_json(text: &str) -> Result<Self> {
        let f: ModelFile = serde_json::from_str(text).map_err(|e| Error::Config(format!("FCS model: {e}")))?;
        if f.a.len() != f.m {
            return Err(Error::Config(format!("FCS model: m = {} but {} matrices given", f.m, f.a.len())));
        }
        let mats = f
            .a
            .iter()
            .enumerate()
            .map(|(i, entries)| {
                if entries.len() != 4 {
                    return Err(Error::Config(format!("FCS model: matrix {i} has {} entries, expected 4", entries.len())));
                }
                Ok(CMatrix::from_row_iterator(2, 2, entries.iter().map(|&[re, im]| C64::new(re, im))))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(mats)
    }

    /// Local dimension `m`.
    pub fn local_dim(&self) -> usize {
        self.a.len()
    }

    pub fn matrices(&self) -> &[CMatrix] {
        &self.a
    }

    pub fn conditions(&self) -> FcsConditions {
        let proportional_unitary = self.a.iter().all(|x| is_scalar(&(x.adjoint() * x), TOL));
        let products: Vec<CMatrix> =
            self.a.iter().flat_map(|x| self.a.iter().map(move |y| x * y.adjoint())).collect();
        let stacked = CMatrix::from_fn(4, products.len(), |r, c| products[c][(r / 2, r % 2)]);
        let sv = stacked.svd(false, false).singular_values;
        let top = sv.max();
        let rank = sv.iter().filter(|&&s| s > RANK_TOL * top.max(1.0)).count();
        FcsConditions { proportional_unitary, normalized: true, full_algebra: rank == 4 }
    }

    /// `E_O` for an operator on `k` consecutive sites (`O` of size `m^k`).
    fn transfer(&self, o: &CMatrix, d: &CMatrix) -> Result<CMatrix> {
        let m = self.local_dim();
        let k = block_sites(o.nrows(), m)?;
        if o.ncols() != o.nrows() {
            return Err(Error::Domain("local operators must be square".into()));
        }
        // A_{α_k} ⋯ A_{α_1} for every multi-index, first site most significant
        let words: Vec<CMatrix> = configurations(m, k)
            .map(|idx| idx.iter().fold(CMatrix::identity(2, 2), |acc, &a| &self.a[a] * acc))
            .collect();
        let mut out = CMatrix::zeros(2, 2);
        for (r, wr) in words.iter().enumerate() {
            let left = wr * d;
            for (c, wc) in words.iter().enumerate() {
                let coef = o[(r, c)];
                if coef != C64::new(0.0, 0.0) {
                    out += &left * wc.adjoint() * coef;
                }
            }
        }
        Ok(out)
    }

    /// `½ Tr[E_{B_n} ∘ ⋯ ∘ E_{B₁}(1)]` for blocks on consecutive sites.
    fn expect_blocks(&self, blocks: &[&CMatrix]) -> Result<C64> {
        let mut d = CMatrix::identity(2, 2);
        for b in blocks {
            d = self.transfer(b, &d)?;
        }
        Ok(d.trace() * 0.5)
    }

    /// Eigenvalues of `E_1` acting on 2×2 matrices, by decreasing modulus.
    pub fn transfer_spectrum(&self) -> Vec<C64> {
        let e = faer::Mat::<C64>::from_fn(4, 4, |r, c| {
            let mut unit = CMatrix::zeros(2, 2);
            unit[(c / 2, c % 2)] = C64::new(1.0, 0.0);
            let img: CMatrix = self.a.iter().map(|x| x * &unit * x.adjoint()).sum();
            img[(r / 2, r % 2)]
        });
        let mut ev: Vec<C64> = e.eigenvalues().expect("4×4 eigensolver converges");
        ev.sort_by(|a, b| b.norm().total_cmp(&a.norm()));
        ev
    }
}

fn block_sites(dim: usize, m: usize) -> Result<usize> {
    let mut k = 0;
    let mut d = 1;
    while d < dim {
        d *= m;
        k += 1;
    }
    if d != dim || k == 0 || k > 2 {
        return Err(Error::Domain(format!("operator of size {dim} does not act on one or two sites of dimension {m}")));
    }
    Ok(k)
}

/// `ω(O₁ ⋯ O_ℓ)` for single-site operators on consecutive sites.
pub fn fcs_expectation(model: &FcsModel, word: &[CMatrix]) -> Result<C64> {
    let m = model.local_dim();
    if let Some(o) = word.iter().find(|o| o.shape() != (m, m)) {
        return Err(Error::Domain(format!("word entry of shape {:?}, expected {m}×{m}", o.shape())));
    }
    model.expect_blocks(&word.iter().collect::<Vec<_>>())
}

/// `|α⟩⟨α|` on one site.
pub fn basis_projector(m: usize, alpha: usize) -> CMatrix {
    let mut p = CMatrix::zeros(m, m);
    p[(alpha, alpha)] = C64::new(1.0, 0.0);
    p
}

/// Restriction to `X = Σ α|α⟩⟨α|` on `ℓ` consecutive sites, with the
/// deviation from the product of its one-site marginals.
#[derive(Clone, Debug)]
pub struct FcsRestriction {
    pub distribution: ClassicalDistribution,
    /// `max_x |μ(x) − Π μ₁(x_i)|`.
    pub product_deviation: f64,
}

pub fn fcs_restriction(model: &FcsModel, sites: usize) -> Result<FcsRestriction> {
    if sites == 0 || sites > MAX_WINDOW {
        return Err(Error::Capability(format!("window of {sites} sites outside 1..={MAX_WINDOW}")));
    }
    let m = model.local_dim();
    let projectors: Vec<CMatrix> = (0..m).map(|a| basis_projector(m, a)).collect();
    let first: Vec<CMatrix> = projectors.iter().map(|p| model.transfer(p, &CMatrix::identity(2, 2))).collect::<Result<_>>()?;
    // depth-first over prefixes, parallel over the first site
    let probs: Vec<Vec<f64>> = first
        .par_iter()
        .map(|d0| {
            let mut out = Vec::with_capacity(m.pow(sites as u32 - 1));
            let mut stack = vec![(d0.clone(), 1usize)];
            while let Some((d, depth)) = stack.pop() {
                if depth == sites {
                    out.push(d.trace().re * 0.5);
                    continue;
                }
                for p in projectors.iter().rev() {
                    stack.push((model.transfer(p, &d)?, depth + 1));
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let probs: Vec<f64> = probs.into_iter().flatten().collect();
    let labels: Vec<f64> = (1..=m).map(|a| a as f64).collect();
    let distribution = ClassicalDistribution::from_probs((0..sites as i64).collect(), labels, probs)?;
    let single: Vec<f64> = (0..m)
        .map(|a| fcs_expectation(model, &[projectors[a].clone()]).map(|v| v.re))
        .collect::<Result<_>>()?;
    let product_deviation = configurations(m, sites)
        .zip(distribution.probs())
        .map(|(cfg, &p)| (p - cfg.iter().map(|&a| single[a]).product::<f64>()).abs())
        .fold(0.0, f64::max);
    Ok(FcsRestriction { distribution, product_deviation })
}

/// Where the probes sit relative to the punctured ball `V_n = {0 < |i| < n}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Conditioning {
    pub n: usize,
    /// Basis labels (0-based) on `−(n−1), …, −1, 1, …, n−1`.
    pub x_v: Vec<usize>,
}

impl Conditioning {
    pub fn new(n: usize, x_v: Vec<usize>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("ball radius must be positive".into()));
        }
        if x_v.len() != 2 * (n - 1) {
            return Err(Error::Domain(format!("x_V needs {} values for n = {n}, got {}", 2 * (n - 1), x_v.len())));
        }
        Ok(Conditioning { n, x_v })
    }

    pub fn sites(&self) -> Vec<i64> {
        let r = self.n as i64 - 1;
        (-r..=r).filter(|&i| i != 0).collect()
    }

    /// 1-based labels joined by `;`.
    pub fn label(&self) -> String {
        self.x_v.iter().map(|a| (a + 1).to_string()).collect::<Vec<_>>().join(";")
    }
}

/// `ω(Q(x_V) A₀ B_{i}) / ω(Q(x_V))` style evaluation; blocks are laid out on
/// the smallest interval containing `V`, site 0 and the probe.
fn conditioned_values(model: &FcsModel, cond: &Conditioning, a: &CMatrix, b: &CMatrix, probe: i64) -> Result<[C64; 4]> {
    let m = model.local_dim();
    if cond.x_v.iter().any(|&x| x >= m) {
        return Err(Error::Domain(format!("x_V labels must lie below m = {m}")));
    }
    let ka = block_sites(a.nrows(), m)?;
    let kb = block_sites(b.nrows(), m)?;
    if ka != 1 {
        return Err(Error::Domain("A acts on site 0 only".into()));
    }
    let n = cond.n as i64;
    let b_sites: Vec<i64> = (probe..probe + kb as i64).collect();
    if b_sites.iter().any(|&s| s.abs() < n) {
        return Err(Error::Domain(format!("probe sites {b_sites:?} must lie outside V_{n} and away from 0")));
    }
    let lo = (-(n - 1)).min(probe);
    let hi = (n - 1).max(probe + kb as i64 - 1);
    let id = CMatrix::identity(m, m);
    let vs = cond.sites();
    let eval = |with_a: bool, with_b: bool| -> Result<C64> {
        let mut blocks: Vec<CMatrix> = Vec::new();
        let mut s = lo;
        while s <= hi {
            if s == probe {
                blocks.push(if with_b { b.clone() } else { CMatrix::identity(b.nrows(), b.nrows()) });
                s += kb as i64;
                continue;
            }
            if s == 0 {
                blocks.push(if with_a { a.clone() } else { id.clone() });
            } else if let Some(p) = vs.iter().position(|&v| v == s) {
                blocks.push(basis_projector(m, cond.x_v[p]));
            } else {
                blocks.push(id.clone());
            }
            s += 1;
        }
        model.expect_blocks(&blocks.iter().collect::<Vec<_>>())
    };
    Ok([eval(false, false)?, eval(true, false)?, eval(false, true)?, eval(true, true)?])
}

/// `|ω^{x_V}(A₀B_i) − ω^{x_V}(A₀) ω^{x_V}(B_i)|` with `ω^{x_V}(·) = ω(Q · Q)/ω(Q)`.
///
/// `B` may act on the two sites `probe, probe + 1`.
pub fn conditioned_correlation(model: &FcsModel, cond: &Conditioning, a: &CMatrix, b: &CMatrix, probe: i64) -> Result<f64> {
    let [z, ea, eb, eab] = conditioned_values(model, cond, a, b, probe)?;
    if z.re <= NULL_PROBABILITY {
        return Err(Error::SingularEvent(format!("ω(Q(x_V)) = {} for x_V = {}", z.re, cond.label())));
    }
    Ok((eab / z - (ea / z) * (eb / z)).norm())
}

/// `ω^{x_V}(1)`, which is 1 whenever the conditioning is defined.
pub fn conditioned_normalization(model: &FcsModel, cond: &Conditioning) -> Result<f64> {
    let m = model.local_dim();
    let id = CMatrix::identity(m, m);
    let [z, ..] = conditioned_values(model, cond, &id, &id, cond.n as i64)?;
    if z.re <= NULL_PROBABILITY {
        return Err(Error::SingularEvent(format!("ω(Q(x_V)) vanishes for x_V = {}", cond.label())));
    }
    let vs = cond.sites();
    let lo = vs.first().copied().unwrap_or(0).min(0);
    let hi = vs.last().copied().unwrap_or(0).max(cond.n as i64);
    let mut blocks = Vec::new();
    for s in lo..=hi {
        match vs.iter().position(|&v| v == s) {
            Some(p) => {
                let q = basis_projector(m, cond.x_v[p]);
                blocks.push(q.clone() * &id * q);
            }
            None => blocks.push(id.clone()),
        }
    }
    let qq = model.expect_blocks(&blocks.iter().collect::<Vec<_>>())?;
    Ok((qq / z).re)
}

/// Orthonormal Hermitian basis of traceless `m×m` matrices
/// (generalized Gell-Mann matrices).
pub fn gell_mann(m: usize) -> Vec<CMatrix> {
    let mut out = Vec::new();
    for i in 0..m {
        for j in i + 1..m {
            let mut s = CMatrix::zeros(m, m);
            s[(i, j)] = C64::new(1.0, 0.0);
            s[(j, i)] = C64::new(1.0, 0.0);
            out.push(s);
            let mut a = CMatrix::zeros(m, m);
            a[(i, j)] = C64::new(0.0, -1.0);
            a[(j, i)] = C64::new(0.0, 1.0);
            out.push(a);
        }
    }
    for l in 1..m {
        let c = (2.0 / (l * (l + 1)) as f64).sqrt();
        out.push(CMatrix::from_fn(m, m, |r, k| {
            if r != k {
                C64::new(0.0, 0.0)
            } else if r < l {
                C64::from(c)
            } else if r == l {
                C64::from(-(l as f64) * c)
            } else {
                C64::new(0.0, 0.0)
            }
        }));
    }
    out
}

/// Largest conditioned correlation over pairs from a family of observables.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationWitness {
    pub value: f64,
    pub a_index: usize,
    pub b_index: usize,
}

pub fn best_conditioned_correlation(
    model: &FcsModel,
    cond: &Conditioning,
    family: &[CMatrix],
    probe: i64,
) -> Result<CorrelationWitness> {
    if family.is_empty() {
        return Err(Error::Domain("empty observable family".into()));
    }
    let pairs: Vec<(usize, usize)> = (0..family.len()).flat_map(|i| (0..family.len()).map(move |j| (i, j))).collect();
    let values = pairs
        .par_iter()
        .map(|&(i, j)| conditioned_correlation(model, cond, &family[i], &family[j], probe))
        .collect::<Result<Vec<f64>>>()?;
    let (k, &value) = values.iter().enumerate().fold((0, &f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best });
    Ok(CorrelationWitness { value, a_index: pairs[k].0, b_index: pairs[k].1 })
}

/// Connected two-point function `ω(A₀B_d) − ω(A)ω(B)` of the unconditioned state.
pub fn connected_two_point(model: &FcsModel, a: &CMatrix, b: &CMatrix, d: usize) -> Result<C64> {
    if d == 0 {
        return Err(Error::Domain("separation must be positive".into()));
    }
    let m = model.local_dim();
    let id = CMatrix::identity(m, m);
    let mut word = vec![a.clone()];
    word.extend(std::iter::repeat_n(id, d - 1));
    word.push(b.clone());
    let ab = fcs_expectation(model, &word)?;
    Ok(ab - fcs_expectation(model, std::slice::from_ref(a))? * fcs_expectation(model, std::slice::from_ref(b))?)
}

/// Spin-1 operators `(S^a)_{bc} = −i ε_{abc}` in the cartesian basis.
pub fn spin_one_cartesian() -> [CMatrix; 3] {
    let eps = |a: usize, b: usize, c: usize| -> f64 {
        match (a, b, c) {
            (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
            (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
            _ => 0.0,
        }
    };
    [0, 1, 2].map(|a| CMatrix::from_fn(3, 3, |b, c| C64::new(0.0, -eps(a, b, c))))
}

/// Is `o` Hermitian (used to sanity-check user observables).
pub fn is_observable(o: &CMatrix) -> bool {
    o.is_square() && (o - o.adjoint()).norm() <= 1e-12 * o.norm().max(1.0) && hermitian_eigh(o).0.iter().all(|v| v.is_finite())
}
