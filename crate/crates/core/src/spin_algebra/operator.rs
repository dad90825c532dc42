use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::C64;

pub type CMatrix = DMatrix<C64>;

/// Largest dimension stored densely.
pub const DENSE_LIMIT: usize = 4096;

const HERMITIAN_RTOL: f64 = 1e-12;

/// Compressed sparse row matrix with complex entries.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
}

impl CsrMatrix {
    /// Builds from unordered triplets; duplicates are summed, exact zeros dropped.
    pub fn from_triplets(dim: usize, mut trip: Vec<(usize, usize, C64)>) -> Self {
        trip.sort_by_key(|a| (a.0, a.1));
        let mut row_ptr = vec![0usize; dim + 1];
        let mut cols = Vec::with_capacity(trip.len());
        let mut vals: Vec<C64> = Vec::with_capacity(trip.len());
        let mut rows = Vec::with_capacity(trip.len());
        for (r, c, v) in trip {
            if let (Some(&lr), Some(&lc)) = (rows.last(), cols.last()) {
                if lr == r && lc == c {
                    *vals.last_mut().unwrap() += v;
                    continue;
                }
            }
            rows.push(r);
            cols.push(c);
            vals.push(v);
        }
        let mut keep_cols = Vec::with_capacity(cols.len());
        let mut keep_vals = Vec::with_capacity(vals.len());
        for ((r, c), v) in rows.into_iter().zip(cols).zip(vals) {
            if v != C64::new(0.0, 0.0) {
                row_ptr[r + 1] += 1;
                keep_cols.push(c);
                keep_vals.push(v);
            }
        }
        for i in 0..dim {
            row_ptr[i + 1] += row_ptr[i];
        }
        CsrMatrix { dim, row_ptr, cols: keep_cols, vals: keep_vals }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn apply(&self, x: &[C64], y: &mut [C64]) {
        for (r, out) in y.iter_mut().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            *out = acc;
        }
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        let row = &self.cols[self.row_ptr[r]..self.row_ptr[r + 1]];
        match row.binary_search(&c) {
            Ok(k) => self.vals[self.row_ptr[r] + k],
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.dim).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (r, self.cols[k], self.vals[k]))
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Storage {
    Dense(CMatrix),
    Sparse(CsrMatrix),
}

/// Square complex matrix on a many-body Hilbert space.
///
/// Dimensions up to [`DENSE_LIMIT`] are stored densely; larger operators are
/// kept in CSR form and only support matrix-vector products.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorMatrix {
    storage: Storage,
    hermitian: bool,
}

/// JSON dump layout `{dim, triplets: [[row, col, re, im], ...]}`.
#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct OperatorDump {
    pub dim: usize,
    pub triplets: Vec<(usize, usize, f64, f64)>,
}

impl OperatorMatrix {
    pub fn from_dense(m: CMatrix) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::Domain(format!("operator must be square, got {}x{}", m.nrows(), m.ncols())));
        }
        let hermitian = dense_is_hermitian(&m);
        Ok(OperatorMatrix { storage: Storage::Dense(m), hermitian })
    }

    /// Dense below [`DENSE_LIMIT`], sparse above.
    pub fn from_triplets(dim: usize, trip: Vec<(usize, usize, C64)>) -> Self {
        if dim <= DENSE_LIMIT {
            let mut m = CMatrix::zeros(dim, dim);
            for (r, c, v) in trip {
                m[(r, c)] += v;
            }
            let hermitian = dense_is_hermitian(&m);
            OperatorMatrix { storage: Storage::Dense(m), hermitian }
        } else {
            let csr = CsrMatrix::from_triplets(dim, trip);
            let hermitian = sparse_is_hermitian(&csr);
            OperatorMatrix { storage: Storage::Sparse(csr), hermitian }
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_triplets(dim, (0..dim).map(|i| (i, i, C64::new(1.0, 0.0))).collect())
    }

    pub fn zeros(dim: usize) -> Self {
        Self::from_triplets(dim, Vec::new())
    }

    pub fn dim(&self) -> usize {
        match &self.storage {
            Storage::Dense(m) => m.nrows(),
            Storage::Sparse(s) => s.dim(),
        }
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.storage, Storage::Dense(_))
    }

    pub fn storage(&self) -> &Storage {
        &self.storage
    }

    pub fn dense(&self) -> Option<&CMatrix> {
        match &self.storage {
            Storage::Dense(m) => Some(m),
            Storage::Sparse(_) => None,
        }
    }

    /// Dense copy; refuses operators beyond [`DENSE_LIMIT`].
    pub fn to_dense(&self) -> Result<CMatrix> {
        match &self.storage {
            Storage::Dense(m) => Ok(m.clone()),
            Storage::Sparse(s) => Err(Error::Capability(format!(
                "dimension {} exceeds the dense limit {DENSE_LIMIT}",
                s.dim()
            ))),
        }
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        match &self.storage {
            Storage::Dense(m) => m[(r, c)],
            Storage::Sparse(s) => s.get(r, c),
        }
    }

    /// `y = A x`.
    pub fn apply(&self, x: &[C64], y: &mut [C64]) {
        match &self.storage {
            Storage::Dense(m) => {
                let n = m.nrows();
                for (r, out) in y.iter_mut().enumerate().take(n) {
                    let mut acc = C64::new(0.0, 0.0);
                    for (c, xc) in x.iter().enumerate() {
                        acc += m[(r, c)] * xc;
                    }
                    *out = acc;
                }
            }
            Storage::Sparse(s) => s.apply(x, y),
        }
    }

    /// Nonzero entries in row-major order.
    pub fn triplets(&self) -> Vec<(usize, usize, C64)> {
        match &self.storage {
            Storage::Dense(m) => {
                let n = m.nrows();
                let mut out = Vec::new();
                for r in 0..n {
                    for c in 0..n {
                        let v = m[(r, c)];
                        if v != C64::new(0.0, 0.0) {
                            out.push((r, c, v));
                        }
                    }
                }
                out
            }
            Storage::Sparse(s) => s.triplets().collect(),
        }
    }

    /// Largest absolute row sum, an upper bound on the spectral norm.
    pub fn row_sum_norm(&self) -> f64 {
        match &self.storage {
            Storage::Dense(m) => (0..m.nrows())
                .map(|r| m.row(r).iter().map(|v| v.norm()).sum::<f64>())
                .fold(0.0, f64::max),
            Storage::Sparse(s) => (0..s.dim)
                .map(|r| (s.row_ptr[r]..s.row_ptr[r + 1]).map(|k| s.vals[k].norm()).sum::<f64>())
                .fold(0.0, f64::max),
        }
    }

    pub fn add(&self, other: &OperatorMatrix) -> Result<OperatorMatrix> {
        if self.dim() != other.dim() {
            return Err(Error::Domain(format!("dimension mismatch {} vs {}", self.dim(), other.dim())));
        }
        match (&self.storage, &other.storage) {
            (Storage::Dense(a), Storage::Dense(b)) => OperatorMatrix::from_dense(a + b),
            _ => {
                let mut t = self.triplets();
                t.extend(other.triplets());
                Ok(OperatorMatrix::from_triplets(self.dim(), t))
            }
        }
    }

    pub fn dump(&self) -> OperatorDump {
        OperatorDump {
            dim: self.dim(),
            triplets: self.triplets().into_iter().map(|(r, c, v)| (r, c, v.re, v.im)).collect(),
        }
    }

    pub fn from_dump(d: &OperatorDump) -> Result<Self> {
        for &(r, c, _, _) in &d.triplets {
            if r >= d.dim || c >= d.dim {
                return Err(Error::Domain(format!("triplet ({r}, {c}) outside dimension {}", d.dim)));
            }
        }
        Ok(Self::from_triplets(d.dim, d.triplets.iter().map(|&(r, c, re, im)| (r, c, C64::new(re, im))).collect()))
    }
}

pub(crate) fn dense_is_hermitian(m: &CMatrix) -> bool {
    let scale = m.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let n = m.nrows();
    for r in 0..n {
        for c in r..n {
            if (m[(r, c)] - m[(c, r)].conj()).norm() > HERMITIAN_RTOL * scale {
                return false;
            }
        }
    }
    true
}

fn sparse_is_hermitian(s: &CsrMatrix) -> bool {
    let scale = s.vals.iter().map(|v| v.norm()).fold(0.0, f64::max);
    s.triplets().all(|(r, c, v)| (v - s.get(c, r).conj()).norm() <= HERMITIAN_RTOL * scale)
}
