//! Sparse symmetric matrices and a direct SPD solver.
//!
//! Factorization is delegated to `nalgebra_sparse::factorization::CscCholesky`, which does no
//! fill-reducing ordering of its own; a reverse Cuthill–McKee permutation is applied first so
//! the factor stays banded for arbitrary node numberings.

use std::collections::VecDeque;

use nalgebra::DMatrix;
use nalgebra_sparse::factorization::CscCholesky;
use nalgebra_sparse::{CooMatrix, CscMatrix, CsrMatrix};

use crate::error::{Error, Result};

/// Triplet accumulator; duplicate entries are summed on build.
#[derive(Debug, Clone)]
pub struct TripletBuilder {
    n: usize,
    coo: CooMatrix<f64>,
}

impl TripletBuilder {
    pub fn new(n: usize) -> Self {
        TripletBuilder { n, coo: CooMatrix::new(n, n) }
    }

    pub fn push(&mut self, i: usize, j: usize, v: f64) {
        self.coo.push(i, j, v);
    }

    pub fn build(self) -> SparseMatrix {
        SparseMatrix { csr: CsrMatrix::from(&self.coo), n: self.n }
    }
}

/// Square sparse matrix in CSR form.
#[derive(Debug, Clone)]
pub struct SparseMatrix {
    csr: CsrMatrix<f64>,
    n: usize,
}

impl SparseMatrix {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn csr(&self) -> &CsrMatrix<f64> {
        &self.csr
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        let (offsets, cols, vals) = self.csr.csr_data();
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in offsets[i]..offsets[i + 1] {
                acc += vals[k] * x[cols[k]];
            }
            *yi = acc;
        }
    }

    /// `xᵀ A x`.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        let (offsets, cols, vals) = self.csr.csr_data();
        let mut acc = 0.0;
        for i in 0..self.n {
            let mut row = 0.0;
            for k in offsets[i]..offsets[i + 1] {
                row += vals[k] * x[cols[k]];
            }
            acc += x[i] * row;
        }
        acc
    }

    pub fn row_sums(&self) -> Vec<f64> {
        let (offsets, _, vals) = self.csr.csr_data();
        (0..self.n).map(|i| vals[offsets[i]..offsets[i + 1]].iter().sum()).collect()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.csr
            .get_entry(i, j)
            .map(|e| e.into_value())
            .unwrap_or(0.0)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.n, self.n);
        for (i, j, v) in self.csr.triplet_iter() {
            d[(i, j)] += *v;
        }
        d
    }

    /// Largest `|A_ij − A_ji|`.
    pub fn asymmetry(&self) -> f64 {
        self.csr
            .triplet_iter()
            .map(|(i, j, v)| (v - self.get(j, i)).abs())
            .fold(0.0, f64::max)
    }

    /// Principal submatrix on `keep` (indices into the original numbering, in order).
    pub fn principal_submatrix(&self, keep: &[usize]) -> SparseMatrix {
        let mut map = vec![usize::MAX; self.n];
        for (k, &i) in keep.iter().enumerate() {
            map[i] = k;
        }
        let mut b = TripletBuilder::new(keep.len());
        for (i, j, v) in self.csr.triplet_iter() {
            if map[i] != usize::MAX && map[j] != usize::MAX {
                b.push(map[i], map[j], *v);
            }
        }
        b.build()
    }

    /// Adds `diag[i]` to each diagonal entry.
    pub fn plus_diagonal(&self, diag: &[f64]) -> SparseMatrix {
        let mut b = TripletBuilder::new(self.n);
        for (i, j, v) in self.csr.triplet_iter() {
            b.push(i, j, *v);
        }
        for (i, d) in diag.iter().enumerate() {
            b.push(i, i, *d);
        }
        b.build()
    }
}

/// Reverse Cuthill–McKee ordering of the symmetric pattern of `a`.
/// Returns `order` with `order[new] = old`.
pub fn reverse_cuthill_mckee(a: &SparseMatrix) -> Vec<usize> {
    let n = a.dim();
    let (offsets, cols, _) = a.csr().csr_data();
    let degree: Vec<usize> = (0..n).map(|i| offsets[i + 1] - offsets[i]).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&i| (degree[i], i));
    let mut queue = VecDeque::new();
    let mut nbrs = Vec::new();
    for &start in &by_degree {
        if visited[start] {
            continue;
        }
        visited[start] = true;
        queue.push_back(start);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            nbrs.clear();
            nbrs.extend(
                cols[offsets[v]..offsets[v + 1]]
                    .iter()
                    .copied()
                    .filter(|&w| !visited[w]),
            );
            nbrs.sort_by_key(|&w| (degree[w], w));
            nbrs.dedup();
            for &w in &nbrs {
                visited[w] = true;
                queue.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

/// Cholesky factorization `P A Pᵀ = L Lᵀ` of a sparse SPD matrix.
pub struct SparseCholesky {
    order: Vec<usize>,
    factor: CscCholesky<f64>,
}

impl SparseCholesky {
    pub fn factor(a: &SparseMatrix) -> Result<Self> {
        let n = a.dim();
        let order = reverse_cuthill_mckee(a);
        let mut inv = vec![0usize; n];
        for (new, &old) in order.iter().enumerate() {
            inv[old] = new;
        }
        let mut coo = CooMatrix::new(n, n);
        for (i, j, v) in a.csr().triplet_iter() {
            coo.push(inv[i], inv[j], *v);
        }
        let csc = CscMatrix::from(&coo);
        let factor = CscCholesky::factor(&csc)
            .map_err(|e| Error::Linear(format!("sparse Cholesky failed: {e:?}")))?;
        Ok(SparseCholesky { order, factor })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.order.len();
        let mut rhs = DMatrix::zeros(n, 1);
        for (new, &old) in self.order.iter().enumerate() {
            rhs[(new, 0)] = b[old];
        }
        self.factor.solve_mut(&mut rhs);
        let mut x = vec![0.0; n];
        for (new, &old) in self.order.iter().enumerate() {
            x[old] = rhs[(new, 0)];
        }
        x
    }
}

/// One-shot SPD solve.
pub fn solve_spd(a: &SparseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    if a.dim() == 0 {
        return Ok(Vec::new());
    }
    Ok(SparseCholesky::factor(a)?.solve(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian_1d(n: usize) -> SparseMatrix {
        let mut b = TripletBuilder::new(n);
        for i in 0..n {
            b.push(i, i, 2.0 + 0.1);
            if i + 1 < n {
                b.push(i, i + 1, -1.0);
                b.push(i + 1, i, -1.0);
            }
        }
        b.build()
    }

    #[test]
    fn cholesky_solves() {
        let a = laplacian_1d(30);
        let x: Vec<f64> = (0..30).map(|i| (i as f64).sin()).collect();
        let b = a.mul_vec(&x);
        let y = solve_spd(&a, &b).unwrap();
        for (xi, yi) in x.iter().zip(&y) {
            assert!((xi - yi).abs() < 1e-12);
        }
    }

    #[test]
    fn rcm_is_permutation() {
        let a = laplacian_1d(17);
        let mut o = reverse_cuthill_mckee(&a);
        o.sort_unstable();
        assert_eq!(o, (0..17).collect::<Vec<_>>());
    }

    #[test]
    fn indefinite_is_rejected() {
        let mut b = TripletBuilder::new(2);
        b.push(0, 0, 1.0);
        b.push(1, 1, -1.0);
        assert!(solve_spd(&b.build(), &[1.0, 1.0]).is_err());
    }

    #[test]
    fn duplicates_are_summed() {
        let mut b = TripletBuilder::new(2);
        b.push(0, 0, 1.0);
        b.push(0, 0, 2.0);
        b.push(1, 1, 1.0);
        let a = b.build();
        assert_eq!(a.get(0, 0), 3.0);
        assert_eq!(a.quad_form(&[1.0, 1.0]), 4.0);
    }
}
