use std::collections::HashMap;

use crate::error::{Error, Result};

/// Ordered list of integer sites carrying an `m`-level system each.
///
/// Basis states are indexed lexicographically with the first site most
/// significant; local index 0 is `|↑⟩`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lattice {
    sites: Vec<i64>,
    m: usize,
    index: HashMap<i64, usize>,
    strides: Vec<usize>,
    dim: usize,
}

impl Lattice {
    pub fn new(sites: Vec<i64>, m: usize) -> Result<Self> {
        if m < 2 {
            return Err(Error::Domain(format!("local dimension must be at least 2, got {m}")));
        }
        let mut index = HashMap::with_capacity(sites.len());
        for (p, &s) in sites.iter().enumerate() {
            if index.insert(s, p).is_some() {
                return Err(Error::Domain(format!("site {s} listed twice")));
            }
        }
        let mut dim = 1usize;
        let mut strides = vec![0; sites.len()];
        for p in (0..sites.len()).rev() {
            strides[p] = dim;
            dim = dim
                .checked_mul(m)
                .ok_or_else(|| Error::Capability(format!("Hilbert space of {} sites overflows", sites.len())))?;
        }
        Ok(Lattice { sites, m, index, strides, dim })
    }

    /// Sites `0..n`.
    pub fn chain(n: usize, m: usize) -> Result<Self> {
        Self::new((0..n as i64).collect(), m)
    }

    pub fn sites(&self) -> &[i64] {
        &self.sites
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn local_dim(&self) -> usize {
        self.m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn position(&self, site: i64) -> Option<usize> {
        self.index.get(&site).copied()
    }

    pub fn positions(&self, sites: &[i64]) -> Result<Vec<usize>> {
        let mut seen = std::collections::HashSet::new();
        sites
            .iter()
            .map(|&s| {
                if !seen.insert(s) {
                    return Err(Error::Domain(format!("site {s} listed twice")));
                }
                self.position(s).ok_or_else(|| Error::Domain(format!("site {s} is not in the lattice")))
            })
            .collect()
    }

    pub fn stride(&self, pos: usize) -> usize {
        self.strides[pos]
    }

    /// Local basis index of site position `pos` inside basis state `index`.
    pub fn digit(&self, index: usize, pos: usize) -> usize {
        (index / self.strides[pos]) % self.m
    }

    pub fn contains(&self, site: i64) -> bool {
        self.index.contains_key(&site)
    }
}
