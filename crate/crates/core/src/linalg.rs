//! Minimal column-major complex matrix used by the oracle SVD and the
//! cost/gradient kernels. Column `j` is the contiguous slice
//! `data[j * rows..(j + 1) * rows]`, so a gate can be applied to every column
//! with the state-vector kernel.

use num_complex::Complex64;

use crate::statevec::{apply_to_slice, Gate};

#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![Complex64::new(0.0, 0.0); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for j in 0..cols {
            for i in 0..rows {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn col(&self, j: usize) -> &[Complex64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn col_mut(&mut self, j: usize) -> &mut [Complex64] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn matmul(&self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.cols, rhs.rows, "matmul shape mismatch");
        let mut out = CMatrix::zeros(self.rows, rhs.cols);
        for j in 0..rhs.cols {
            let dst = &mut out.data[j * self.rows..(j + 1) * self.rows];
            for (k, &r) in rhs.col(j).iter().enumerate() {
                if r == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for (d, &l) in dst.iter_mut().zip(self.col(k)) {
                    *d += l * r;
                }
            }
        }
        out
    }

    /// Applies `gate` to the row index of every column (left-multiplication
    /// by the gate's unitary). Rows must be `2^k` with gate qubits `< k`.
    pub fn apply_gate_rows(&mut self, gate: &Gate) {
        for col in self.data.chunks_mut(self.rows) {
            apply_to_slice(col, gate);
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }
}

impl std::ops::Index<(usize, usize)> for CMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[j * self.rows + i]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[j * self.rows + i]
    }
}

pub fn vdot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn vnorm(a: &[Complex64]) -> f64 {
    a.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}
