//! Compressed sparse row matrices used by the assembly and solver layers.
//!
//! Operators are accumulated as (row, col, value) triplets and finalized into
//! CSR with duplicate entries summed. Finalized operators are immutable.

use crate::error::{Error, Result};

/// A finalized CSR matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    rows: usize,
    cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseOperator {
    /// Build from triplets, summing duplicates.
    pub fn from_triplets(rows: usize, cols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut counts = vec![0usize; rows + 1];
        for &(r, _, _) in triplets {
            assert!(r < rows, "row index {r} out of bounds {rows}");
            counts[r + 1] += 1;
        }
        for i in 0..rows {
            counts[i + 1] += counts[i];
        }
        let mut tmp_idx = vec![0usize; triplets.len()];
        let mut tmp_val = vec![0f64; triplets.len()];
        let mut fill = counts.clone();
        for &(r, c, v) in triplets {
            assert!(c < cols, "col index {c} out of bounds {cols}");
            tmp_idx[fill[r]] = c;
            tmp_val[fill[r]] = v;
            fill[r] += 1;
        }
        // sort each row and merge duplicates
        let mut indptr = vec![0usize; rows + 1];
        let mut indices = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        let mut order: Vec<usize> = Vec::new();
        for r in 0..rows {
            let lo = counts[r];
            let hi = counts[r + 1];
            order.clear();
            order.extend(lo..hi);
            order.sort_by_key(|&k| tmp_idx[k]);
            let mut last_col = usize::MAX;
            for &k in &order {
                if tmp_idx[k] == last_col {
                    *values.last_mut().unwrap() += tmp_val[k];
                } else {
                    last_col = tmp_idx[k];
                    indices.push(last_col);
                    values.push(tmp_val[k]);
                }
            }
            indptr[r + 1] = indices.len();
        }
        Self { rows, cols, indptr, indices, values }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, indptr: vec![0; rows + 1], indices: Vec::new(), values: Vec::new() }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            rows: n,
            cols: n,
            indptr: (0..=n).collect(),
            indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    /// Iterate over stored entries as (row, col, value).
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.rows).flat_map(move |r| {
            (self.indptr[r]..self.indptr[r + 1]).map(move |k| (r, self.indices[k], self.values[k]))
        })
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols, "matvec dimension mismatch");
        let mut y = vec![0.0; self.rows];
        for r in 0..self.rows {
            let mut acc = 0.0;
            for k in self.indptr[r]..self.indptr[r + 1] {
                acc += self.values[k] * x[self.indices[k]];
            }
            y[r] = acc;
        }
        y
    }

    /// y += a * (self * x)
    pub fn matvec_acc(&self, x: &[f64], a: f64, y: &mut [f64]) {
        assert_eq!(x.len(), self.cols);
        assert_eq!(y.len(), self.rows);
        for r in 0..self.rows {
            let mut acc = 0.0;
            for k in self.indptr[r]..self.indptr[r + 1] {
                acc += self.values[k] * x[self.indices[k]];
            }
            y[r] += a * acc;
        }
    }

    pub fn matvec_transpose(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.rows, "matvec_transpose dimension mismatch");
        let mut y = vec![0.0; self.cols];
        for r in 0..self.rows {
            for k in self.indptr[r]..self.indptr[r + 1] {
                y[self.indices[k]] += self.values[k] * x[r];
            }
        }
        y
    }

    pub fn transpose(&self) -> Self {
        let trips: Vec<_> = self.iter().map(|(r, c, v)| (c, r, v)).collect();
        Self::from_triplets(self.cols, self.rows, &trips)
    }

    /// Linear combination with pattern union.
    pub fn linear_combination(terms: &[(f64, &SparseOperator)]) -> Result<Self> {
        let (rows, cols) = terms
            .first()
            .map(|(_, op)| op.shape())
            .ok_or_else(|| Error::ShapeMismatch("empty linear combination".into()))?;
        let mut trips = Vec::new();
        for &(coeff, op) in terms {
            if op.shape() != (rows, cols) {
                return Err(Error::ShapeMismatch(format!(
                    "linear combination: {:?} vs {:?}",
                    op.shape(),
                    (rows, cols)
                )));
            }
            trips.extend(op.iter().map(|(r, c, v)| (r, c, coeff * v)));
        }
        Ok(Self::from_triplets(rows, cols, &trips))
    }

    pub fn scale(&self, a: f64) -> Self {
        let mut out = self.clone();
        for v in &mut out.values {
            *v *= a;
        }
        out
    }

    pub fn norm_max(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// max |A - A^T| entrywise.
    pub fn asymmetry(&self) -> f64 {
        let t = self.transpose();
        let diff = Self::linear_combination(&[(1.0, self), (-1.0, &t)]).unwrap();
        diff.norm_max()
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.rows == self.cols && self.asymmetry() < tol
    }

    /// Extract the submatrix with the given row and column index sets.
    pub fn restrict(&self, row_idx: &[usize], col_idx: &[usize]) -> Self {
        let mut row_map = vec![usize::MAX; self.rows];
        for (new, &old) in row_idx.iter().enumerate() {
            row_map[old] = new;
        }
        let mut col_map = vec![usize::MAX; self.cols];
        for (new, &old) in col_idx.iter().enumerate() {
            col_map[old] = new;
        }
        let trips: Vec<_> = self
            .iter()
            .filter_map(|(r, c, v)| {
                let (nr, nc) = (row_map[r], col_map[c]);
                (nr != usize::MAX && nc != usize::MAX).then_some((nr, nc, v))
            })
            .collect();
        Self::from_triplets(row_idx.len(), col_idx.len(), &trips)
    }

    /// x^T A y
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        let ay = self.matvec(y);
        x.iter().zip(&ay).map(|(a, b)| a * b).sum()
    }

    /// Sparse times dense, column by column.
    pub fn matmat(&self, x: &nalgebra::DMatrix<f64>) -> nalgebra::DMatrix<f64> {
        assert_eq!(self.cols, x.nrows());
        let mut out = nalgebra::DMatrix::zeros(self.rows, x.ncols());
        for j in 0..x.ncols() {
            for r in 0..self.rows {
                let mut acc = 0.0;
                for idx in self.indptr[r]..self.indptr[r + 1] {
                    acc += self.values[idx] * x[(self.indices[idx], j)];
                }
                out[(r, j)] = acc;
            }
        }
        out
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.rows, self.cols);
        for (r, c, v) in self.iter() {
            m[(r, c)] += v;
        }
        m
    }

    /// Export in coordinate text format, one `row col value` record per line.
    pub fn write_coo<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "% {} {} {}", self.rows, self.cols, self.nnz())?;
        for (r, c, v) in self.iter() {
            writeln!(w, "{} {} {:.17e}", r, c, v)?;
        }
        Ok(())
    }
}

/// Triplet accumulator for block-structured systems.
#[derive(Debug, Default)]
pub struct TripletBuilder {
    triplets: Vec<(usize, usize, f64)>,
}

impl TripletBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, r: usize, c: usize, v: f64) {
        if v != 0.0 {
            self.triplets.push((r, c, v));
        }
    }

    /// Insert `a * op` with the given row/column offsets.
    pub fn add_block(&mut self, row_off: usize, col_off: usize, a: f64, op: &SparseOperator) {
        for (r, c, v) in op.iter() {
            self.push(row_off + r, col_off + c, a * v);
        }
    }

    pub fn finish(self, rows: usize, cols: usize) -> SparseOperator {
        SparseOperator::from_triplets(rows, cols, &self.triplets)
    }

    pub fn triplets(&self) -> &[(usize, usize, f64)] {
        &self.triplets
    }
}

/// Sparse LU factorization of a square operator (direct solve).
pub struct SparseLu {
    n: usize,
    lu: faer::sparse::linalg::solvers::Lu<usize, f64>,
}

impl SparseLu {
    pub fn factor(op: &SparseOperator) -> Result<Self> {
        if op.rows != op.cols {
            return Err(Error::ShapeMismatch(format!("LU of non-square {:?}", op.shape())));
        }
        let trips: Vec<faer::sparse::Triplet<usize, usize, f64>> =
            op.iter().map(|(r, c, v)| faer::sparse::Triplet::new(r, c, v)).collect();
        let mat = faer::sparse::SparseColMat::try_new_from_triplets(op.rows, op.cols, &trips)
            .map_err(|e| Error::Numerical(format!("sparse matrix creation failed: {e:?}")))?;
        let symbolic = faer::sparse::linalg::solvers::SymbolicLu::try_new(mat.symbolic())
            .map_err(|e| Error::SingularFactorization(format!("symbolic analysis failed: {e:?}")))?;
        let lu = faer::sparse::linalg::solvers::Lu::try_new_with_symbolic(symbolic, mat.as_ref())
            .map_err(|e| {
                Error::SingularFactorization(format!(
                    "numeric factorization failed ({e:?}); check for missing Dirichlet constraints"
                ))
            })?;
        Ok(Self { n: op.rows, lu })
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        use faer::prelude::Solve;
        assert_eq!(rhs.len(), self.n);
        let mut m = faer::Mat::from_fn(self.n, 1, |i, _| rhs[i]);
        self.lu.solve_in_place(m.as_mut());
        (0..self.n).map(|i| m[(i, 0)]).collect()
    }
}
