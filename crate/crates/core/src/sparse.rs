//! Compressed sparse row matrices with complex entries.

use std::io::Write;

use crate::error::{Error, Result};
use crate::linalg::{LinearOperator, C64, ZERO};
use crate::par;

/// Entries with modulus below this are dropped during assembly.
pub const DROP_BELOW: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq)]
pub struct Csr {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<C64>,
}

impl Csr {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Csr {
            rows,
            cols,
            row_ptr: vec![0; rows + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![1.0; n])
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let n = values.len();
        Self::from_triplets(
            n,
            n,
            values.iter().enumerate().map(|(i, v)| (i, i, C64::new(*v, 0.0))),
        )
    }

    /// Builds from `(row, col, value)` triplets; duplicates are summed in
    /// input order.
    pub fn from_triplets(
        rows: usize,
        cols: usize,
        triplets: impl IntoIterator<Item = (usize, usize, C64)>,
    ) -> Self {
        let mut per_row: Vec<Vec<(usize, C64)>> = vec![Vec::new(); rows];
        for (r, c, v) in triplets {
            assert!(r < rows && c < cols, "triplet ({r},{c}) out of bounds");
            per_row[r].push((c, v));
        }
        let mut row_ptr = Vec::with_capacity(rows + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for mut entries in per_row {
            entries.sort_by_key(|e| e.0);
            let mut i = 0;
            while i < entries.len() {
                let c = entries[i].0;
                let mut v = ZERO;
                while i < entries.len() && entries[i].0 == c {
                    v += entries[i].1;
                    i += 1;
                }
                if v.norm() >= DROP_BELOW {
                    col_idx.push(c);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Csr {
            rows,
            cols,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col_idx[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.rows).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.row(r).find(|e| e.0 == c).map(|e| e.1).unwrap_or(ZERO)
    }

    /// `y = A x`.
    pub fn mul_vec(&self, x: &[C64], y: &mut [C64]) {
        assert_eq!(x.len(), self.cols);
        assert_eq!(y.len(), self.rows);
        let chunk = 256;
        par::for_each_chunk(y, chunk, |b, yc| {
            for (i, yi) in yc.iter_mut().enumerate() {
                let r = b * chunk + i;
                let mut acc = ZERO;
                for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                    acc += self.values[k] * x[self.col_idx[k]];
                }
                *yi = acc;
            }
        });
    }

    pub fn adjoint(&self) -> Csr {
        Csr::from_triplets(
            self.cols,
            self.rows,
            self.triplets().map(|(r, c, v)| (c, r, v.conj())),
        )
    }

    pub fn scale(&self, alpha: C64) -> Csr {
        Csr::from_triplets(
            self.rows,
            self.cols,
            self.triplets().map(|(r, c, v)| (r, c, v * alpha)),
        )
    }

    /// `alpha A + beta B`.
    pub fn add(&self, alpha: C64, other: &Csr, beta: C64) -> Result<Csr> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch {
                expected: self.rows,
                found: other.rows,
            });
        }
        Ok(Csr::from_triplets(
            self.rows,
            self.cols,
            self.triplets()
                .map(|(r, c, v)| (r, c, v * alpha))
                .chain(other.triplets().map(|(r, c, v)| (r, c, v * beta))),
        ))
    }

    /// `A B`.
    pub fn matmul(&self, other: &Csr) -> Result<Csr> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                found: other.rows,
            });
        }
        let mut trips = Vec::new();
        for r in 0..self.rows {
            for (k, a) in self.row(r) {
                for (c, b) in other.row(k) {
                    trips.push((r, c, a * b));
                }
            }
        }
        Ok(Csr::from_triplets(self.rows, other.cols, trips))
    }

    /// `[A, B] = AB − BA`.
    pub fn commutator(&self, other: &Csr) -> Result<Csr> {
        let ab = self.matmul(other)?;
        let ba = other.matmul(self)?;
        ab.add(C64::new(1.0, 0.0), &ba, C64::new(-1.0, 0.0))
    }

    /// `D_l A D_r` for 0/1 (or general real) diagonals.
    pub fn sandwich(&self, left: &[f64], right: &[f64]) -> Csr {
        Csr::from_triplets(
            self.rows,
            self.cols,
            self.triplets()
                .map(|(r, c, v)| (r, c, v * left[r] * right[c])),
        )
    }

    pub fn frobenius(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<C64> {
        let mut m = nalgebra::DMatrix::from_element(self.rows, self.cols, ZERO);
        for (r, c, v) in self.triplets() {
            m[(r, c)] += v;
        }
        m
    }

    /// Writes one `row col re im` line per stored entry.
    pub fn write_triplets(&self, mut w: impl Write) -> std::io::Result<()> {
        for (r, c, v) in self.triplets() {
            writeln!(w, "{r} {c} {:.17e} {:.17e}", v.re, v.im)?;
        }
        Ok(())
    }
}

/// A square CSR matrix with its stored adjoint, usable as a matrix-free
/// operator.
#[derive(Debug, Clone)]
pub struct SquareCsr {
    pub matrix: Csr,
    pub adjoint: Csr,
}

impl SquareCsr {
    pub fn new(matrix: Csr) -> Self {
        assert_eq!(matrix.rows(), matrix.cols());
        let adjoint = matrix.adjoint();
        SquareCsr { matrix, adjoint }
    }
}

impl LinearOperator for SquareCsr {
    fn dim(&self) -> usize {
        self.matrix.rows()
    }
    fn apply(&self, x: &[C64], y: &mut [C64]) {
        self.matrix.mul_vec(x, y)
    }
    fn apply_adjoint(&self, x: &[C64], y: &mut [C64]) {
        self.adjoint.mul_vec(x, y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn triplets_sum_duplicates_and_drop_zeros() {
        let m = Csr::from_triplets(
            2,
            2,
            vec![(0, 1, c(1.0, 0.0)), (0, 1, c(2.0, 1.0)), (1, 0, c(1e-310, 0.0))],
        );
        assert_eq!(m.nnz(), 1);
        assert_eq!(m.get(0, 1), c(3.0, 1.0));
    }

    #[test]
    fn matmul_matches_dense() {
        let a = Csr::from_triplets(3, 3, vec![(0, 1, c(1.0, 2.0)), (2, 0, c(-1.0, 0.5)), (1, 1, c(3.0, 0.0))]);
        let b = Csr::from_triplets(3, 3, vec![(1, 2, c(0.0, 1.0)), (0, 0, c(2.0, 0.0)), (1, 0, c(1.0, 1.0))]);
        let dense = a.to_dense() * b.to_dense();
        let sparse = a.matmul(&b).unwrap().to_dense();
        assert!((dense - sparse).norm() < 1e-15);
        let comm = a.commutator(&b).unwrap().to_dense();
        let expected = a.to_dense() * b.to_dense() - b.to_dense() * a.to_dense();
        assert!((comm - expected).norm() < 1e-15);
    }

    #[test]
    fn adjoint_is_conjugate_transpose() {
        let a = Csr::from_triplets(2, 3, vec![(0, 2, c(1.0, 2.0)), (1, 0, c(0.0, -1.0))]);
        assert_eq!(a.adjoint().to_dense(), a.to_dense().adjoint());
    }

    #[test]
    fn triplet_export_format() {
        let a = Csr::from_triplets(2, 2, vec![(1, 0, c(0.5, -0.25))]);
        let mut buf = Vec::new();
        a.write_triplets(&mut buf).unwrap();
        let line = String::from_utf8(buf).unwrap();
        let parts: Vec<&str> = line.split_whitespace().collect();
        assert_eq!(parts[0], "1");
        assert_eq!(parts[1], "0");
        assert_eq!(parts[2].parse::<f64>().unwrap(), 0.5);
        assert_eq!(parts[3].parse::<f64>().unwrap(), -0.25);
    }
}
