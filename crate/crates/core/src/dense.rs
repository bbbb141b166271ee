//! Small row-major dense matrices used by the per-mode vertical operators.

use nalgebra::DMatrix;
use rustfft::num_complex::Complex64;
use std::ops::{Add, Mul};

#[derive(Debug, Clone, PartialEq)]
pub struct Dense<T> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<T>,
}

pub type RMat = Dense<f64>;
pub type CMat = Dense<Complex64>;

impl<T: Copy + Default> Dense<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::default(); rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }
}

impl<T> Dense<T>
where
    T: Copy + Default + Add<Output = T> + Mul<Output = T>,
{
    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows);
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                let orow = other.row(k);
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, &b) in dst.iter_mut().zip(orow) {
                    *d = *d + a * b;
                }
            }
        }
        out
    }
}

impl RMat {
    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    /// `y = A x` for a real vector.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.cols);
        for (i, yi) in y.iter_mut().enumerate().take(self.rows) {
            *yi = self.row(i).iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }

    /// `y = A x` for a complex vector.
    pub fn apply_c(&self, x: &[Complex64], y: &mut [Complex64]) {
        debug_assert_eq!(x.len(), self.cols);
        for (i, yi) in y.iter_mut().enumerate().take(self.rows) {
            let mut acc = Complex64::new(0.0, 0.0);
            for (a, b) in self.row(i).iter().zip(x) {
                acc += b * *a;
            }
            *yi = acc;
        }
    }

    pub fn to_complex(&self) -> CMat {
        Dense {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        }
    }

    pub fn inverse(&self) -> Option<Self> {
        let m = DMatrix::from_row_slice(self.rows, self.cols, &self.data);
        let inv = m.try_inverse()?;
        Some(Self::from_fn(self.rows, self.cols, |i, j| inv[(i, j)]))
    }
}

impl CMat {
    /// `y = A x` for a complex vector.
    pub fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        debug_assert_eq!(x.len(), self.cols);
        for (i, yi) in y.iter_mut().enumerate().take(self.rows) {
            let mut acc = Complex64::new(0.0, 0.0);
            for (a, b) in self.row(i).iter().zip(x) {
                acc += a * b;
            }
            *yi = acc;
        }
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i).conj())
    }

    /// Dense inverse through an LU factorisation.
    pub fn inverse(&self) -> Option<Self> {
        let m = DMatrix::from_row_slice(self.rows, self.cols, &self.data);
        let inv = m.lu().try_inverse()?;
        Some(Self::from_fn(self.rows, self.cols, |i, j| inv[(i, j)]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_roundtrip() {
        let a = RMat::from_fn(4, 4, |i, j| 1.0 / (1.0 + i as f64 + j as f64) + if i == j { 2.0 } else { 0.0 });
        let p = a.matmul(&a.inverse().unwrap());
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((p.get(i, j) - want).abs() < 1e-13);
            }
        }
        let c = a.to_complex();
        let pc = c.matmul(&c.inverse().unwrap());
        assert!((pc.get(2, 2).re - 1.0).abs() < 1e-13);
    }
}
