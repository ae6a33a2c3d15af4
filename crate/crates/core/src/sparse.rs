//! Compressed sparse row matrices with the few operations the solver pipeline needs.

use std::io::Write;
use std::ops::{Add, Mul};
use std::path::Path;

use faer::sparse::{SparseColMat, Triplet};

use crate::{c64, Error, Result};

/// Scalar types stored in a [`Csr`].
pub trait Scalar: Copy + Default + PartialEq + Add<Output = Self> + Mul<c64, Output = c64> + Send + Sync {
    fn to_c64(self) -> c64;
    fn abs(self) -> f64;
}

impl Scalar for f64 {
    fn to_c64(self) -> c64 {
        c64::new(self, 0.0)
    }
    fn abs(self) -> f64 {
        f64::abs(self)
    }
}

impl Scalar for c64 {
    fn to_c64(self) -> c64 {
        self
    }
    fn abs(self) -> f64 {
        self.norm()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Csr<T> {
    pub nrows: usize,
    pub ncols: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<T>,
}

impl<T: Scalar> Csr<T> {
    /// Builds a matrix from `(row, col, value)` triplets. Duplicates are summed in input order,
    /// so the result is deterministic for a given triplet sequence.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, T)]) -> Self {
        let mut order: Vec<usize> = (0..triplets.len()).collect();
        order.sort_by_key(|&k| (triplets[k].0, triplets[k].1));
        let mut row_ptr = vec![0usize; nrows + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<T> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for k in order {
            let (r, c, v) = triplets[k];
            assert!(r < nrows && c < ncols, "triplet ({r}, {c}) out of bounds");
            if last == Some((r, c)) {
                let slot = values.last_mut().expect("previous entry");
                *slot = *slot + v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..nrows {
            row_ptr[r + 1] += row_ptr[r];
        }
        Self { nrows, ncols, row_ptr, col_idx, values }
    }

    pub fn identity(n: usize) -> Self
    where
        T: From<f64>,
    {
        Self {
            nrows: n,
            ncols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![T::from(1.0); n],
        }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col_idx[span.clone()].iter().copied().zip(self.values[span].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> T {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.col_idx[span.clone()].binary_search(&c) {
            Ok(k) => self.values[span.start + k],
            Err(_) => T::default(),
        }
    }

    pub fn mul_vec(&self, x: &[c64]) -> Vec<c64> {
        let mut y = vec![c64::new(0.0, 0.0); self.nrows];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &[c64], y: &mut [c64]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        for (r, out) in y.iter_mut().enumerate() {
            let mut acc = c64::new(0.0, 0.0);
            for (c, v) in self.row(r) {
                acc += v * x[c];
            }
            *out = acc;
        }
    }

    /// Sesquilinear form `y^H A x`.
    pub fn form(&self, y: &[c64], x: &[c64]) -> c64 {
        let ax = self.mul_vec(x);
        y.iter().zip(&ax).map(|(a, b)| a.conj() * b).sum()
    }

    /// Submatrix `A[rows, cols]`; `rows` and `cols` are index lists into `A`.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Csr<T> {
        let mut col_map = vec![usize::MAX; self.ncols];
        for (k, &c) in cols.iter().enumerate() {
            col_map[c] = k;
        }
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        row_ptr.push(0);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        let mut scratch: Vec<(usize, T)> = Vec::new();
        for &r in rows {
            scratch.clear();
            scratch.extend(self.row(r).filter_map(|(c, v)| {
                let k = col_map[c];
                (k != usize::MAX).then_some((k, v))
            }));
            scratch.sort_by_key(|&(k, _)| k);
            for &(k, v) in &scratch {
                col_idx.push(k);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        Csr { nrows: rows.len(), ncols: cols.len(), row_ptr, col_idx, values }
    }

    pub fn to_complex(&self) -> Csr<c64> {
        Csr {
            nrows: self.nrows,
            ncols: self.ncols,
            row_ptr: self.row_ptr.clone(),
            col_idx: self.col_idx.clone(),
            values: self.values.iter().map(|v| v.to_c64()).collect(),
        }
    }

    pub fn to_dense(&self) -> faer::Mat<c64> {
        let mut m = faer::Mat::<c64>::zeros(self.nrows, self.ncols);
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                m[(r, c)] += v.to_c64();
            }
        }
        m
    }

    pub fn to_faer(&self) -> Result<SparseColMat<usize, c64>> {
        let triplets: Vec<Triplet<usize, usize, c64>> = (0..self.nrows)
            .flat_map(|r| self.row(r).map(move |(c, v)| Triplet::new(r, c, v.to_c64())))
            .collect();
        SparseColMat::try_new_from_triplets(self.nrows, self.ncols, &triplets)
            .map_err(|e| Error::InvalidInput(format!("sparse matrix conversion: {e:?}")))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    /// Coordinate text export: `row col re im` per line, with a size header.
    pub fn write_coo(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        let mut emit = || -> std::io::Result<()> {
            writeln!(w, "% {} {} {}", self.nrows, self.ncols, self.nnz())?;
            for r in 0..self.nrows {
                for (c, v) in self.row(r) {
                    let z = v.to_c64();
                    writeln!(w, "{r} {c} {:e} {:e}", z.re, z.im)?;
                }
            }
            w.flush()
        };
        emit().map_err(|e| Error::io(path, e))
    }
}

/// Linear combination `sum_k coeff_k * A_k` of real matrices sharing one sparsity pattern.
pub fn combine_same_pattern(mats: &[(&Csr<f64>, c64)]) -> Csr<c64> {
    let first = mats[0].0;
    for (m, _) in mats {
        debug_assert_eq!(m.row_ptr, first.row_ptr);
        debug_assert_eq!(m.col_idx, first.col_idx);
    }
    let values = (0..first.nnz())
        .map(|k| mats.iter().map(|(m, a)| m.values[k] * *a).sum())
        .collect();
    Csr {
        nrows: first.nrows,
        ncols: first.ncols,
        row_ptr: first.row_ptr.clone(),
        col_idx: first.col_idx.clone(),
        values,
    }
}

pub fn norm2(x: &[c64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

pub fn norm_inf(x: &[c64]) -> f64 {
    x.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_sum_duplicates_and_sort() {
        let a = Csr::<f64>::from_triplets(2, 3, &[(1, 2, 1.0), (0, 1, 2.0), (1, 2, 3.0), (1, 0, 5.0)]);
        assert_eq!(a.row_ptr, vec![0, 1, 3]);
        assert_eq!(a.col_idx, vec![1, 0, 2]);
        assert_eq!(a.values, vec![2.0, 5.0, 4.0]);
        assert_eq!(a.get(1, 2), 4.0);
        assert_eq!(a.get(0, 0), 0.0);
    }

    #[test]
    fn submatrix_and_matvec() {
        let a = Csr::<f64>::from_triplets(3, 3, &[(0, 0, 1.0), (0, 2, 2.0), (2, 0, 3.0), (2, 2, 4.0), (1, 1, 9.0)]);
        let s = a.submatrix(&[2, 0], &[2, 0]);
        assert_eq!(s.to_dense()[(0, 0)], c64::new(4.0, 0.0));
        assert_eq!(s.to_dense()[(0, 1)], c64::new(3.0, 0.0));
        let y = a.mul_vec(&[c64::new(1.0, 0.0), c64::new(0.0, 1.0), c64::new(1.0, 1.0)]);
        assert_eq!(y[0], c64::new(3.0, 2.0));
        assert_eq!(y[1], c64::new(0.0, 9.0));
    }
}
