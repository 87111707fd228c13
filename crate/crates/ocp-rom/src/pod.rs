//! Proper orthogonal decomposition by the method of snapshots.
//!
//! Snapshots are whole space-time trajectories (all time steps of one
//! variable, flattened step-major) compared in the time-summed inner
//! product `(a, b) = sum_k dt a_k' X b_k`. The correlation matrix is
//! snapshot-count sized, so compression cost is independent of the mesh.
//! Basis vectors are space-time fields; reducing the all-at-once
//! optimality system onto them yields a reduced dimension independent of
//! the number of time steps.

use crate::error::{Error, Result};
use crate::sparse::SparseOperator;
use nalgebra::{DMatrix, SymmetricEigen};

/// Time-summed inner product with a spatial gram matrix.
#[derive(Debug, Clone)]
pub struct InnerProduct {
    pub gram: SparseOperator,
    pub dt: f64,
}

impl InnerProduct {
    pub fn new(gram: SparseOperator, dt: f64) -> Result<Self> {
        if gram.rows() != gram.cols() {
            return Err(Error::ShapeMismatch("gram matrix must be square".into()));
        }
        if !gram.is_symmetric(1e-10) {
            return Err(Error::NonSpdMetric);
        }
        if dt <= 0.0 {
            return Err(Error::Numerical("nonpositive time weight".into()));
        }
        Ok(Self { gram, dt })
    }

    pub fn n_space(&self) -> usize {
        self.gram.rows()
    }

    /// `sum_k dt a_k' X b_k` over step-major flattened trajectories.
    pub fn dot(&self, a: &[f64], b: &[f64]) -> f64 {
        let n = self.n_space();
        debug_assert_eq!(a.len(), b.len());
        debug_assert_eq!(a.len() % n, 0);
        let mut acc = 0.0;
        for (ak, bk) in a.chunks_exact(n).zip(b.chunks_exact(n)) {
            acc += self.gram.bilinear(ak, bk);
        }
        self.dt * acc
    }

    pub fn norm(&self, a: &[f64]) -> f64 {
        self.dot(a, a).max(0.0).sqrt()
    }
}

/// Training trajectories of one variable, one per parameter.
#[derive(Debug, Clone)]
pub struct SnapshotSet {
    pub n_space: usize,
    pub n_steps: usize,
    pub parameters: Vec<Vec<f64>>,
    pub data: Vec<Vec<f64>>,
}

impl SnapshotSet {
    pub fn new(n_space: usize, n_steps: usize) -> Self {
        Self { n_space, n_steps, parameters: Vec::new(), data: Vec::new() }
    }

    pub fn push(&mut self, mu: &[f64], trajectory: Vec<f64>) -> Result<()> {
        if trajectory.len() != self.n_space * self.n_steps {
            return Err(Error::ShapeMismatch(format!(
                "snapshot length {} does not match {}x{}",
                trajectory.len(),
                self.n_steps,
                self.n_space
            )));
        }
        self.parameters.push(mu.to_vec());
        self.data.push(trajectory);
        Ok(())
    }

    /// Flatten per-step vectors into one snapshot.
    pub fn push_steps(&mut self, mu: &[f64], steps: &[Vec<f64>]) -> Result<()> {
        let flat: Vec<f64> = steps.iter().flatten().copied().collect();
        self.push(mu, flat)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}

/// `C_ml = (1/N) (s_m, s_l)`; symmetric positive semidefinite.
pub fn correlation_matrix(set: &SnapshotSet, ip: &InnerProduct) -> Result<DMatrix<f64>> {
    if set.is_empty() {
        return Err(Error::EmptyBasis("no snapshots or surviving columns".into()));
    }
    if ip.n_space() != set.n_space {
        return Err(Error::ShapeMismatch("inner product does not match snapshot space".into()));
    }
    let n = set.len();
    let mut c = DMatrix::zeros(n, n);
    for m in 0..n {
        for l in m..n {
            let v = ip.dot(&set.data[m], &set.data[l]) / n as f64;
            c[(m, l)] = v;
            c[(l, m)] = v;
        }
    }
    Ok(c)
}

/// Orthonormal compressed basis with its correlation eigenvalues.
#[derive(Debug, Clone)]
pub struct PodBasis {
    pub n_space: usize,
    pub n_steps: usize,
    /// Space-time basis vectors, orthonormal in the compression product.
    pub columns: Vec<Vec<f64>>,
    /// All retained-rank eigenvalues, descending.
    pub eigenvalues: Vec<f64>,
}

/// Deterministic sign: first entry above the noise floor is positive.
fn fix_sign(v: &mut [f64]) {
    let scale = v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    if let Some(x) = v.iter().find(|x| x.abs() > 1e-12 * scale) {
        if *x < 0.0 {
            for y in v.iter_mut() {
                *y = -*y;
            }
        }
    }
}

/// First `n` POD modes: `xi_j = (1/sqrt(N lambda_j)) S v_j`.
pub fn compute_pod_basis(set: &SnapshotSet, ip: &InnerProduct, n: usize) -> Result<PodBasis> {
    let c = correlation_matrix(set, ip)?;
    let nsnap = set.len();
    let eig = SymmetricEigen::new(c);
    let mut order: Vec<usize> = (0..nsnap).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let lambda_max = eig.eigenvalues[order[0]].max(0.0);
    let kept: Vec<usize> = order
        .into_iter()
        .filter(|&i| eig.eigenvalues[i] > 1e-12 * lambda_max && eig.eigenvalues[i] > 0.0)
        .collect();
    if n > kept.len() {
        return Err(Error::BasisTooLarge { requested: n, available: kept.len() });
    }
    let mut columns = Vec::with_capacity(n);
    for &i in kept.iter().take(n) {
        let lambda = eig.eigenvalues[i];
        let scale = 1.0 / (nsnap as f64 * lambda).sqrt();
        let mut col = vec![0.0; set.n_space * set.n_steps];
        for (m, snap) in set.data.iter().enumerate() {
            let w = scale * eig.eigenvectors[(m, i)];
            for (c, s) in col.iter_mut().zip(snap) {
                *c += w * s;
            }
        }
        fix_sign(&mut col);
        columns.push(col);
    }
    Ok(PodBasis {
        n_space: set.n_space,
        n_steps: set.n_steps,
        columns,
        eigenvalues: kept.iter().map(|&i| eig.eigenvalues[i]).collect(),
    })
}

/// Coefficients of the orthogonal projection onto an orthonormal basis.
pub fn project(columns: &[Vec<f64>], ip: &InnerProduct, field: &[f64]) -> Vec<f64> {
    columns.iter().map(|c| ip.dot(c, field)).collect()
}

/// Linear combination of basis vectors.
pub fn lift(columns: &[Vec<f64>], coeffs: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; columns.first().map_or(0, |c| c.len())];
    for (col, &a) in columns.iter().zip(coeffs) {
        for (o, v) in out.iter_mut().zip(col) {
            *o += a * v;
        }
    }
    out
}

/// Modified Gram-Schmidt in the given product, dropping columns whose
/// residual norm falls below `drop_tol` times their original norm.
pub fn orthonormalize(
    columns: &[Vec<f64>],
    ip: &InnerProduct,
    drop_tol: f64,
) -> Result<Vec<Vec<f64>>> {
    let mut out: Vec<Vec<f64>> = Vec::new();
    for col in columns {
        let scale = ip.norm(col);
        if scale == 0.0 {
            continue;
        }
        let mut v = col.clone();
        // two MGS passes for stability
        for _ in 0..2 {
            for q in &out {
                let a = ip.dot(q, &v);
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi -= a * qi;
                }
            }
        }
        let norm = ip.norm(&v);
        if norm > drop_tol * scale {
            for vi in v.iter_mut() {
                *vi /= norm;
            }
            out.push(v);
        }
    }
    if out.is_empty() {
        return Err(Error::EmptyBasis("no snapshots or surviving columns".into()));
    }
    Ok(out)
}
