
use super::operator::{dense_is_hermitian, CMatrix};
use crate::error::{Error, Result};
use crate::C64;

/// Spectral decomposition `X = Σ_x x Q(x)` of a single-site observable.
///
/// Eigenvalues are distinct and ascending. `basis` holds an orthonormal
/// eigenbasis whose column `j` belongs to eigenvalue `cluster(j)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservableSpectrum {
    eigenvalues: Vec<f64>,
    projections: Vec<CMatrix>,
    basis: CMatrix,
    cluster: Vec<usize>,
    diagonal: bool,
    tol: f64,
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
pub fn hermitian_eigh(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), CMatrix::zeros(0, 0));
    }
    let a = faer::Mat::<C64>::from_fn(n, n, |r, c| m[(r, c)]);
    let eig = a.self_adjoint_eigen(faer::Side::Lower).expect("Hermitian eigensolver converges");
    let s = eig.S().column_vector();
    let u = eig.U();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| s[x].re.total_cmp(&s[y].re));
    let vals = order.iter().map(|&k| s[k].re).collect();
    let vecs = CMatrix::from_fn(n, n, |r, c| u[(r, order[c])]);
    (vals, vecs)
}

impl ObservableSpectrum {
    /// Decomposes a Hermitian `X`; eigenvalues closer than `1e-9·‖X‖` are merged.
    pub fn new(x: &CMatrix) -> Result<Self> {
        if x.nrows() != x.ncols() || x.nrows() < 2 {
            return Err(Error::Domain(format!("observable must be square with side ≥ 2, got {}x{}", x.nrows(), x.ncols())));
        }
        if !dense_is_hermitian(x) {
            return Err(Error::Domain("observable is not Hermitian".into()));
        }
        let m = x.nrows();
        let diagonal = (0..m).all(|r| (0..m).all(|c| r == c || x[(r, c)] == C64::new(0.0, 0.0)));
        let (vals, basis) = if diagonal {
            (
                (0..m).map(|i| x[(i, i)].re).collect::<Vec<f64>>(),
                CMatrix::identity(m, m),
            )
        } else {
            hermitian_eigh(x)
        };
        let norm = vals.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let tol = 1e-9 * norm.max(f64::MIN_POSITIVE);

        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        let mut groups: Vec<Vec<usize>> = Vec::new();
        let mut last = f64::NEG_INFINITY;
        for &j in &order {
            if groups.is_empty() || vals[j] - last > tol {
                groups.push(Vec::new());
            }
            groups.last_mut().unwrap().push(j);
            last = vals[j];
        }
        let mut cluster = vec![0; m];
        let mut eigenvalues = Vec::with_capacity(groups.len());
        let mut projections = Vec::with_capacity(groups.len());
        for (k, g) in groups.iter().enumerate() {
            let mut q = CMatrix::zeros(m, m);
            for &j in g {
                cluster[j] = k;
                let v = basis.column(j);
                q += v * v.adjoint();
            }
            eigenvalues.push(g.iter().map(|&j| vals[j]).sum::<f64>() / g.len() as f64);
            projections.push(q);
        }
        Ok(ObservableSpectrum { eigenvalues, projections, basis, cluster, diagonal, tol: 1e-9 * norm.max(1.0) })
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn projections(&self) -> &[CMatrix] {
        &self.projections
    }

    pub fn projection(&self, k: usize) -> &CMatrix {
        &self.projections[k]
    }

    /// Number of distinct eigenvalues.
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn local_dim(&self) -> usize {
        self.basis.nrows()
    }

    /// Rank of `Q(x_k)`.
    pub fn rank(&self, k: usize) -> usize {
        self.cluster.iter().filter(|&&c| c == k).count()
    }

    /// Whether `X` is diagonal in the computational basis.
    pub fn is_diagonal(&self) -> bool {
        self.diagonal
    }

    pub fn basis(&self) -> &CMatrix {
        &self.basis
    }

    /// Eigenvalue index of basis column `j`.
    pub fn cluster(&self, j: usize) -> usize {
        self.cluster[j]
    }

    /// Index of the eigenvalue equal to `value` (within the clustering tolerance).
    pub fn index_of(&self, value: f64) -> Result<usize> {
        self.eigenvalues
            .iter()
            .position(|&x| (x - value).abs() <= self.tol)
            .ok_or_else(|| Error::Domain(format!("{value} is not in the spectrum {:?}", self.eigenvalues)))
    }

    /// `Σ_x x Q(x)`.
    pub fn reconstruct(&self) -> CMatrix {
        let m = self.local_dim();
        self.eigenvalues
            .iter()
            .zip(&self.projections)
            .fold(CMatrix::zeros(m, m), |acc, (&x, q)| acc + q * C64::from(x))
    }
}
