//! Small dense vector and matrix helpers. Problem sizes here are a few
//! hundred variables at most, so plain `Vec` storage is enough.

use crate::error::{Error, Result};
use crate::scalar::Real;

#[inline]
pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

#[inline]
pub fn norm2<T: Real>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

#[inline]
pub fn norm_inf<T: Real>(a: &[T]) -> T {
    a.iter().fold(T::zero(), |m, &x| m.max(x.abs()))
}

/// `‖a − b‖₂`
pub fn dist2<T: Real>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(&x, &y)| (x - y) * (x - y))
        .sum::<T>()
        .sqrt()
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> DenseMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::dim("matrix data", rows * cols, data.len()));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// `out += A x`
    pub fn mul_vec_add(&self, x: &[T], out: &mut [T]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for (i, o) in out.iter_mut().enumerate() {
            *o += dot(self.row(i), x);
        }
    }

    /// `out += Aᵀ y`
    pub fn mul_t_vec_add(&self, y: &[T], out: &mut [T]) {
        debug_assert_eq!(y.len(), self.rows);
        debug_assert_eq!(out.len(), self.cols);
        for (i, &yi) in y.iter().enumerate() {
            if yi == T::zero() {
                continue;
            }
            for (o, &a) in out.iter_mut().zip(self.row(i)) {
                *o += a * yi;
            }
        }
    }

    /// Largest singular value by power iteration on `AᵀA`.
    pub fn spectral_norm(&self, tol: T, max_iter: usize) -> T {
        if self.rows == 0 || self.cols == 0 || self.data.iter().all(|&a| a == T::zero()) {
            return T::zero();
        }
        // Deterministic start vector with no special alignment to the axes.
        let mut v: Vec<T> = (0..self.cols)
            .map(|j| T::one() + T::lit(0.1) * T::from_usize_lossy(j % 7))
            .collect();
        let n0 = norm2(&v);
        v.iter_mut().for_each(|x| *x /= n0);
        let mut av = vec![T::zero(); self.rows];
        let mut atav = vec![T::zero(); self.cols];
        let mut sigma = T::zero();
        for _ in 0..max_iter {
            av.iter_mut().for_each(|x| *x = T::zero());
            self.mul_vec_add(&v, &mut av);
            atav.iter_mut().for_each(|x| *x = T::zero());
            self.mul_t_vec_add(&av, &mut atav);
            let n = norm2(&atav);
            if n == T::zero() {
                return T::zero();
            }
            let next = norm2(&av);
            for (vi, &a) in v.iter_mut().zip(&atav) {
                *vi = a / n;
            }
            if (next - sigma).abs() <= tol * next.max(T::one()) {
                sigma = next;
                break;
            }
            sigma = next;
        }
        // Rayleigh quotient at the final vector.
        av.iter_mut().for_each(|x| *x = T::zero());
        self.mul_vec_add(&v, &mut av);
        sigma.max(norm2(&av))
    }
}

impl<T> std::ops::Index<(usize, usize)> for DenseMatrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for DenseMatrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

/// In-place Cholesky factorization of a symmetric matrix (lower triangle).
/// Returns `false` if the matrix is not numerically positive definite.
pub fn cholesky_in_place<T: Real>(a: &mut DenseMatrix<T>) -> bool {
    let n = a.rows;
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= a[(j, k)] * a[(j, k)];
        }
        if !(d > T::zero()) || !d.is_finite() {
            return false;
        }
        let d = d.sqrt();
        a[(j, j)] = d;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= a[(i, k)] * a[(j, k)];
            }
            a[(i, j)] = s / d;
        }
    }
    true
}

/// Solves `L Lᵀ x = b` given the factor produced by [`cholesky_in_place`].
pub fn cholesky_solve<T: Real>(l: &DenseMatrix<T>, b: &mut [T]) {
    let n = l.rows;
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[(i, k)] * b[k];
        }
        b[i] = s / l[(i, i)];
    }
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in (i + 1)..n {
            s -= l[(k, i)] * b[k];
        }
        b[i] = s / l[(i, i)];
    }
}

/// Solves `(H + λI) x = b` for symmetric `H`, increasing the shift `λ` until
/// the factorization succeeds. Returns the solution and the shift used.
pub fn solve_shifted_spd<T: Real>(h: &DenseMatrix<T>, b: &[T]) -> Option<(Vec<T>, T)> {
    let n = h.rows;
    let scale = (0..n).fold(T::zero(), |m, i| m.max(h[(i, i)].abs())).max(T::one());
    let mut shift = T::zero();
    for _ in 0..60 {
        let mut f = h.clone();
        for i in 0..n {
            f[(i, i)] += shift;
        }
        if cholesky_in_place(&mut f) {
            let mut x = b.to_vec();
            cholesky_solve(&f, &mut x);
            if x.iter().all(|v| v.is_finite()) {
                return Some((x, shift));
            }
        }
        shift = if shift == T::zero() {
            scale * T::lit(1e-10)
        } else {
            shift * T::lit(10.0)
        };
    }
    None
}
