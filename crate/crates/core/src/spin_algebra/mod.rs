//! Many-body operators on `(C^m)^{⊗Λ}`.
//!
//! Basis convention: sites in lattice order, local `|↑⟩` (σ^z = +1) before
//! `|↓⟩`, lexicographic tensor indexing with the first site most significant.

mod interaction;
mod lattice;
mod operator;
mod spectrum;

pub use interaction::Interaction;
pub use lattice::Lattice;
pub use operator::{CMatrix, CsrMatrix, OperatorDump, OperatorMatrix, Storage, DENSE_LIMIT};
pub use spectrum::{hermitian_eigh, ObservableSpectrum};

use crate::error::{Error, Result};
use crate::C64;

/// Single-site spin-1/2 matrices.
pub mod pauli {
    use super::CMatrix;
    use crate::C64;

    fn m2(a: [C64; 4]) -> CMatrix {
        CMatrix::from_row_slice(2, 2, &a)
    }

    pub fn x() -> CMatrix {
        let (o, l) = (C64::new(0.0, 0.0), C64::new(1.0, 0.0));
        m2([o, l, l, o])
    }

    pub fn y() -> CMatrix {
        let (o, i) = (C64::new(0.0, 0.0), C64::new(0.0, 1.0));
        m2([o, -i, i, o])
    }

    pub fn z() -> CMatrix {
        let (o, l) = (C64::new(0.0, 0.0), C64::new(1.0, 0.0));
        m2([l, o, o, -l])
    }

    /// `|↑⟩⟨↑|`.
    pub fn up() -> CMatrix {
        let (o, l) = (C64::new(0.0, 0.0), C64::new(1.0, 0.0));
        m2([l, o, o, o])
    }

    /// `|↓⟩⟨↓|`.
    pub fn down() -> CMatrix {
        let (o, l) = (C64::new(0.0, 0.0), C64::new(1.0, 0.0));
        m2([o, o, o, l])
    }
}

/// Triplets of `op` acting on the lattice positions `pos` (tensor factors in
/// that order) and identity elsewhere.
pub(crate) fn embed_triplets(lat: &Lattice, pos: &[usize], op: &CMatrix, out: &mut Vec<(usize, usize, C64)>) {
    let m = lat.local_dim();
    let k = pos.len();
    let local = m.pow(k as u32);
    // offset of local index ℓ inside a global index
    let offsets: Vec<usize> = (0..local)
        .map(|l| {
            let mut rem = l;
            let mut off = 0;
            for j in (0..k).rev() {
                off += (rem % m) * lat.stride(pos[j]);
                rem /= m;
            }
            off
        })
        .collect();
    for b in 0..lat.dim() {
        let mut c = 0;
        for &p in pos {
            c = c * m + lat.digit(b, p);
        }
        let base = b - offsets[c];
        for (r, off) in offsets.iter().enumerate() {
            let v = op[(r, c)];
            if v != C64::new(0.0, 0.0) {
                out.push((base + off, b, v));
            }
        }
    }
}

/// `op ⊗ 1` with `op` on `site`.
pub fn embed_local(op: &CMatrix, site: i64, lat: &Lattice) -> Result<OperatorMatrix> {
    embed_on(op, &[site], lat)
}

/// `op` acting on the listed sites (tensor factors in list order), identity elsewhere.
pub fn embed_on(op: &CMatrix, sites: &[i64], lat: &Lattice) -> Result<OperatorMatrix> {
    let want = lat.local_dim().pow(sites.len() as u32);
    if op.nrows() != want || op.ncols() != want {
        return Err(Error::Domain(format!("operator is {}x{}, expected {want}x{want}", op.nrows(), op.ncols())));
    }
    let pos = lat.positions(sites)?;
    let mut trip = Vec::new();
    embed_triplets(lat, &pos, op, &mut trip);
    Ok(OperatorMatrix::from_triplets(lat.dim(), trip))
}

/// `H_Λ = Σ_{A⊆Λ} Φ(A)` with open boundaries.
pub fn build_hamiltonian(phi: &Interaction, lat: &Lattice) -> Result<OperatorMatrix> {
    build_hamiltonian_within(phi, lat, lat.sites())
}

/// Hamiltonian of the terms supported inside `region`, embedded in `lat`.
pub fn build_hamiltonian_within(phi: &Interaction, lat: &Lattice, region: &[i64]) -> Result<OperatorMatrix> {
    if phi.local_dim() != lat.local_dim() {
        return Err(Error::Domain(format!(
            "interaction has local dimension {}, lattice has {}",
            phi.local_dim(),
            lat.local_dim()
        )));
    }
    let inside: std::collections::HashSet<i64> = region.iter().copied().collect();
    let mut trip = Vec::new();
    for (pos, sites, op) in phi.placements(lat) {
        if sites.iter().all(|s| inside.contains(s)) {
            embed_triplets(lat, &pos, op, &mut trip);
        }
    }
    Ok(OperatorMatrix::from_triplets(lat.dim(), trip))
}

/// Kronecker product of a list of matrices (empty list gives `[1]`).
pub fn kron_all(factors: &[CMatrix]) -> CMatrix {
    factors.iter().fold(CMatrix::identity(1, 1), |acc, f| acc.kronecker(f))
}

/// `Q_W(x_W) = ⊗_{i∈W} Q(x_i) ⊗ 1` for a configuration given as (site, eigenvalue) pairs.
pub fn joint_projection(spec: &ObservableSpectrum, config: &[(i64, f64)], lat: &Lattice) -> Result<OperatorMatrix> {
    let idx = config
        .iter()
        .map(|&(s, x)| Ok((s, spec.index_of(x)?)))
        .collect::<Result<Vec<_>>>()?;
    joint_projection_indices(spec, &idx, lat)
}

/// As [`joint_projection`] with eigenvalue indices instead of values.
pub fn joint_projection_indices(spec: &ObservableSpectrum, config: &[(i64, usize)], lat: &Lattice) -> Result<OperatorMatrix> {
    if spec.local_dim() != lat.local_dim() {
        return Err(Error::Domain("observable and lattice local dimensions differ".into()));
    }
    if lat.dim() > DENSE_LIMIT {
        return Err(Error::Capability(format!("joint projections are dense; dimension {} too large", lat.dim())));
    }
    let sites: Vec<i64> = config.iter().map(|c| c.0).collect();
    let pos = lat.positions(&sites)?;
    let m = lat.local_dim();
    let mut factors = vec![CMatrix::identity(m, m); lat.len()];
    for (&p, &(_, k)) in pos.iter().zip(config) {
        if k >= spec.len() {
            return Err(Error::Domain(format!("eigenvalue index {k} out of range")));
        }
        factors[p] = spec.projection(k).clone();
    }
    OperatorMatrix::from_dense(kron_all(&factors))
}

/// All configurations of `k` sites with `n` values each, lexicographic.
pub(crate) fn configurations(n: usize, k: usize) -> impl Iterator<Item = Vec<usize>> {
    let total = n.pow(k as u32);
    (0..total).map(move |mut idx| {
        let mut c = vec![0; k];
        for j in (0..k).rev() {
            c[j] = idx % n;
            idx /= n;
        }
        c
    })
}
