//! Row-compressed storage and the two solver backends: sparse LU (via
//! `faer`) and right-preconditioned BiCGSTAB with an ILU(0) preconditioner.

use std::sync::Once;

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::Col;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds the pattern from per-row column lists (sorted and deduplicated here).
    pub fn from_pattern(mut rows: Vec<Vec<usize>>) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for r in rows.iter_mut() {
            r.sort_unstable();
            r.dedup();
            col_idx.extend_from_slice(r);
            row_ptr.push(col_idx.len());
        }
        let nnz = col_idx.len();
        CsrMatrix { n, row_ptr, col_idx, values: vec![0.0; nnz] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    fn position(&self, row: usize, col: usize) -> Option<usize> {
        let cols = &self.col_idx[self.row_ptr[row]..self.row_ptr[row + 1]];
        cols.binary_search(&col).ok().map(|k| self.row_ptr[row] + k)
    }

    /// Adds to an existing pattern entry; panics if the entry is absent.
    pub fn add(&mut self, row: usize, col: usize, v: f64) {
        let k = self.position(row, col).expect("entry outside the assembled pattern");
        self.values[k] += v;
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.position(row, col).map_or(0.0, |k| self.values[k])
    }

    pub fn row(&self, row: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.row_ptr[row]..self.row_ptr[row + 1]).map(move |k| (self.col_idx[k], self.values[k]))
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).map(|(j, v)| v * x[j]).sum()).collect()
    }

    pub fn pattern_is_symmetric(&self) -> bool {
        (0..self.n).all(|i| self.row(i).all(|(j, _)| self.position(j, i).is_some()))
    }

    pub fn values_are_symmetric(&self, tol: f64) -> bool {
        (0..self.n).all(|i| self.row(i).all(|(j, v)| (v - self.get(j, i)).abs() <= tol))
    }

    fn to_faer(&self) -> Result<SparseColMat<usize, f64>> {
        let triplets: Vec<Triplet<usize, usize, f64>> =
            (0..self.n).flat_map(|i| self.row(i).map(move |(j, v)| Triplet::new(i, j, v))).collect();
        SparseColMat::try_new_from_triplets(self.n, self.n, &triplets)
            .map_err(|e| Error::InvalidInput(format!("sparse matrix creation failed: {e:?}")))
    }
}

pub fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn relative_residual(a: &CsrMatrix, x: &[f64], b: &[f64]) -> f64 {
    let ax = a.mul_vec(x);
    let r: Vec<f64> = ax.iter().zip(b).map(|(p, q)| p - q).collect();
    let nb = norm2(b);
    if nb == 0.0 {
        norm2(&r)
    } else {
        norm2(&r) / nb
    }
}

static SEQUENTIAL: Once = Once::new();

pub(crate) struct LuFactor {
    lu: faer::sparse::linalg::solvers::Lu<usize, f64>,
}

impl LuFactor {
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        // single-threaded factorization keeps results bit-reproducible
        SEQUENTIAL.call_once(|| faer::set_global_parallelism(faer::Par::Seq));
        let m = a.to_faer()?;
        let lu = m.sp_lu().map_err(|e| {
            tracing::warn!(error = ?e, "sparse LU failed");
            Error::SolverBreakdown { iterations: 0, residual: f64::NAN }
        })?;
        Ok(LuFactor { lu })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let rhs = Col::<f64>::from_fn(b.len(), |i| b[i]);
        let x = self.lu.solve(&rhs);
        (0..b.len()).map(|i| x[i]).collect()
    }
}

/// Incomplete LU with the sparsity pattern of `A` (unit lower factor implicit).
pub(crate) struct Ilu0 {
    factor: CsrMatrix,
    diag: Vec<usize>,
}

impl Ilu0 {
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        let mut f = a.clone();
        let n = f.n;
        let mut diag = vec![0; n];
        for i in 0..n {
            diag[i] = f.position(i, i).ok_or_else(|| Error::InvalidInput(format!("row {i} has no diagonal")))?;
        }
        for i in 1..n {
            for kk in f.row_ptr[i]..f.row_ptr[i + 1] {
                let k = f.col_idx[kk];
                if k >= i {
                    break;
                }
                let pivot = f.values[diag[k]];
                if pivot == 0.0 {
                    return Err(Error::SolverBreakdown { iterations: 0, residual: f64::NAN });
                }
                f.values[kk] /= pivot;
                let lik = f.values[kk];
                for jj in (kk + 1)..f.row_ptr[i + 1] {
                    let j = f.col_idx[jj];
                    if let Some(kj) = f.position(k, j) {
                        f.values[jj] -= lik * f.values[kj];
                    }
                }
            }
        }
        Ok(Ilu0 { factor: f, diag })
    }

    pub fn apply(&self, r: &[f64]) -> Vec<f64> {
        let f = &self.factor;
        let n = f.n;
        let mut y = r.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for kk in f.row_ptr[i]..self.diag[i] {
                s -= f.values[kk] * y[f.col_idx[kk]];
            }
            y[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for kk in (self.diag[i] + 1)..f.row_ptr[i + 1] {
                s -= f.values[kk] * y[f.col_idx[kk]];
            }
            y[i] = s / f.values[self.diag[i]];
        }
        y
    }
}

/// Right-preconditioned BiCGSTAB. Returns the iterate, iterations and the
/// true relative residual.
pub(crate) fn bicgstab(
    a: &CsrMatrix,
    pre: &Ilu0,
    b: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, usize, f64)> {
    let n = b.len();
    let nb = norm2(b);
    let mut x = vec![0.0; n];
    if nb == 0.0 {
        return Ok((x, 0, 0.0));
    }
    let mut r = b.to_vec();
    let r_hat = r.clone();
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    for it in 1..=max_iter {
        let rho_new = dot(&r_hat, &r);
        if rho_new == 0.0 || omega == 0.0 {
            let res = relative_residual(a, &x, b);
            return Err(Error::SolverBreakdown { iterations: it, residual: res });
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        let p_hat = pre.apply(&p);
        v = a.mul_vec(&p_hat);
        alpha = rho / dot(&r_hat, &v);
        let s: Vec<f64> = r.iter().zip(&v).map(|(ri, vi)| ri - alpha * vi).collect();
        for i in 0..n {
            x[i] += alpha * p_hat[i];
        }
        if norm2(&s) / nb < tol {
            let res = relative_residual(a, &x, b);
            if res < tol {
                return Ok((x, it, res));
            }
        }
        let s_hat = pre.apply(&s);
        let t = a.mul_vec(&s_hat);
        let tt = dot(&t, &t);
        omega = if tt == 0.0 { 0.0 } else { dot(&t, &s) / tt };
        for i in 0..n {
            x[i] += omega * s_hat[i];
            r[i] = s[i] - omega * t[i];
        }
        if norm2(&r) / nb < tol {
            let res = relative_residual(a, &x, b);
            if res < tol {
                return Ok((x, it, res));
            }
        }
    }
    let res = relative_residual(a, &x, b);
    Err(Error::SolverBreakdown { iterations: max_iter, residual: res })
}
