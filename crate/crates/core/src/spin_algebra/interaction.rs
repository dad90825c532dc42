use std::collections::BTreeMap;

use super::operator::{dense_is_hermitian, CMatrix};
use super::{pauli, Lattice};
use crate::error::{Error, Result};
use crate::C64;

/// Translation-invariant 1-D quantum interaction.
///
/// Terms are keyed by canonical offset sets: sorted, starting at 0 and
/// consecutive. The tensor factors of a term follow the offset order.
#[derive(Clone, Debug, PartialEq)]
pub struct Interaction {
    m: usize,
    terms: BTreeMap<Vec<i64>, CMatrix>,
}

impl Interaction {
    pub fn new(m: usize) -> Self {
        Interaction { m, terms: BTreeMap::new() }
    }

    /// `H = −J Σ σ^x_i σ^x_{i+1} − h Σ σ^z_i`.
    pub fn transverse_ising(j: f64, h: f64) -> Self {
        let mut phi = Interaction::new(2);
        if h != 0.0 {
            phi.insert(&[0], pauli::z() * C64::from(-h)).unwrap();
        }
        if j != 0.0 {
            phi.insert(&[0, 1], pauli::x().kronecker(&pauli::x()) * C64::from(-j)).unwrap();
        }
        phi
    }

    /// Adds `op` to the term on `offsets` (translated so its minimum is 0).
    pub fn insert(&mut self, offsets: &[i64], op: CMatrix) -> Result<()> {
        let key = canonical_offsets(offsets)?;
        let want = self.m.pow(key.len() as u32);
        if op.nrows() != want || op.ncols() != want {
            return Err(Error::Domain(format!(
                "term on {} sites must be {want}x{want}, got {}x{}",
                key.len(),
                op.nrows(),
                op.ncols()
            )));
        }
        if !dense_is_hermitian(&op) {
            return Err(Error::Domain(format!("term on offsets {key:?} is not Hermitian")));
        }
        match self.terms.get_mut(&key) {
            Some(t) => *t += op,
            None => {
                self.terms.insert(key, op);
            }
        }
        Ok(())
    }

    pub fn with_term(mut self, offsets: &[i64], op: CMatrix) -> Result<Self> {
        self.insert(offsets, op)?;
        Ok(self)
    }

    pub fn local_dim(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<i64>, &CMatrix)> {
        self.terms.iter()
    }

    /// Largest term diameter (0 for on-site terms only).
    pub fn range(&self) -> usize {
        self.terms.keys().map(|k| *k.last().unwrap() as usize).max().unwrap_or(0)
    }

    pub fn add(&self, other: &Interaction) -> Result<Interaction> {
        if self.m != other.m {
            return Err(Error::Domain(format!("local dimension mismatch {} vs {}", self.m, other.m)));
        }
        let mut out = self.clone();
        for (k, v) in &other.terms {
            out.insert(k, v.clone())?;
        }
        Ok(out)
    }

    /// The term `Φ(B)` acting on the explicit site set `sites`, if any.
    pub fn term_on(&self, sites: &[i64]) -> Option<&CMatrix> {
        let mut s = sites.to_vec();
        s.sort_unstable();
        let min = *s.first()?;
        let key: Vec<i64> = s.iter().map(|x| x - min).collect();
        self.terms.get(&key)
    }

    /// Every translate of every term that fits inside `lat`, as
    /// (positions in offset order, sites, matrix).
    pub fn placements<'a>(&'a self, lat: &Lattice) -> Vec<(Vec<usize>, Vec<i64>, &'a CMatrix)> {
        let mut out = Vec::new();
        for (key, op) in &self.terms {
            for &s in lat.sites() {
                let sites: Vec<i64> = key.iter().map(|o| s + o).collect();
                if let Some(pos) = sites.iter().map(|&x| lat.position(x)).collect::<Option<Vec<_>>>() {
                    out.push((pos, sites, op));
                }
            }
        }
        out
    }
}

fn canonical_offsets(offsets: &[i64]) -> Result<Vec<i64>> {
    if offsets.is_empty() {
        return Err(Error::Domain("the empty set carries no interaction term".into()));
    }
    let mut k = offsets.to_vec();
    k.sort_unstable();
    let len = k.len();
    k.dedup();
    if k.len() != len {
        return Err(Error::Domain(format!("repeated offset in {offsets:?}")));
    }
    let min = k[0];
    for x in &mut k {
        *x -= min;
    }
    if k.windows(2).any(|w| w[1] != w[0] + 1) {
        return Err(Error::Domain(format!("offset set {offsets:?} is not connected")));
    }
    Ok(k)
}
