use std::ops::{Index, IndexMut};

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Dense complex matrix stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<Complex<T>>,
}

/// Dense complex column vector.
pub type ComplexVector<T> = Vec<Complex<T>>;

impl<T: Scalar> ComplexMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex::new(T::zero(), T::zero()); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex::new(T::one(), T::zero());
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex<T>) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<Complex<T>>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                context: "ComplexMatrix::from_row_major",
                expected: format!("{} entries", rows * cols),
                found: format!("{} entries", data.len()),
            });
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds from real entries given row by row.
    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        Self::from_fn(r, c, |i, j| Complex::new(T::of(rows[i][j]), T::zero()))
    }

    pub fn diag(v: &[Complex<T>]) -> Self {
        let mut m = Self::zeros(v.len(), v.len());
        for (i, &x) in v.iter().enumerate() {
            m[(i, i)] = x;
        }
        m
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

    pub fn as_slice(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex<T>] {
        &mut self.data
    }

    pub fn row(&self, i: usize) -> &[Complex<T>] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> ComplexVector<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn map(&self, f: impl Fn(Complex<T>) -> Complex<T>) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| f(z)).collect(),
        }
    }

    pub fn scale(&self, alpha: Complex<T>) -> Self {
        self.map(|z| z * alpha)
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> Self {
        self.map(|z| z.conj())
    }

    /// Conjugate (Hermitian) transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_shape("ComplexMatrix::add", other)?;
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.same_shape("ComplexMatrix::sub", other)?;
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        })
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                context: "ComplexMatrix::matmul",
                expected: format!("{} rows on the right", self.cols),
                found: format!("{}", other.rows),
            });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a.re == T::zero() && a.im == T::zero() {
                    continue;
                }
                let b_row = &other.data[k * other.cols..(k + 1) * other.cols];
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o = *o + a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, x: &[Complex<T>]) -> Result<ComplexVector<T>> {
        if self.cols != x.len() {
            return Err(Error::DimensionMismatch {
                context: "ComplexMatrix::matvec",
                expected: format!("vector of length {}", self.cols),
                found: format!("{}", x.len()),
            });
        }
        Ok(self.matvec_unchecked(x))
    }

    pub(crate) fn matvec_unchecked(&self, x: &[Complex<T>]) -> ComplexVector<T> {
        self.data
            .chunks_exact(self.cols.max(1))
            .take(self.rows)
            .map(|row| {
                row.iter()
                    .zip(x)
                    .fold(Complex::new(T::zero(), T::zero()), |acc, (&a, &b)| acc + a * b)
            })
            .collect()
    }

    /// `selfᴴ · x` without materializing the adjoint.
    pub fn adjoint_matvec(&self, x: &[Complex<T>]) -> Result<ComplexVector<T>> {
        if self.rows != x.len() {
            return Err(Error::DimensionMismatch {
                context: "ComplexMatrix::adjoint_matvec",
                expected: format!("vector of length {}", self.rows),
                found: format!("{}", x.len()),
            });
        }
        Ok(self.adjoint_matvec_unchecked(x))
    }

    pub(crate) fn adjoint_matvec_unchecked(&self, x: &[Complex<T>]) -> ComplexVector<T> {
        let mut out = vec![Complex::new(T::zero(), T::zero()); self.cols];
        for (i, &xi) in x.iter().enumerate().take(self.rows) {
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            for (o, &a) in out.iter_mut().zip(row) {
                *o = *o + a.conj() * xi;
            }
        }
        out
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<T> {
        self.same_shape("ComplexMatrix::max_abs_diff", other)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(T::zero(), T::max))
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt()
    }

    /// Spectral norm estimated by power iteration on `AᴴA`.
    pub fn operator_norm(&self, iterations: usize) -> T {
        if self.data.is_empty() {
            return T::zero();
        }
        let mut v: ComplexVector<T> = (0..self.cols)
            .map(|k| Complex::new(T::one(), T::of(0.1 * k as f64)))
            .collect();
        let mut sigma = T::zero();
        for _ in 0..iterations {
            let norm = vec_norm(&v);
            if norm == T::zero() {
                return T::zero();
            }
            v.iter_mut().for_each(|z| *z = *z / norm);
            let av = self.matvec_unchecked(&v);
            sigma = vec_norm(&av);
            v = self.adjoint_matvec_unchecked(&av);
        }
        sigma
    }

    fn same_shape(&self, context: &'static str, other: &Self) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::DimensionMismatch {
                context,
                expected: format!("{:?}", self.shape()),
                found: format!("{:?}", other.shape()),
            });
        }
        Ok(())
    }
}

impl<T> Index<(usize, usize)> for ComplexMatrix<T> {
    type Output = Complex<T>;

    fn index(&self, (i, j): (usize, usize)) -> &Complex<T> {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for ComplexMatrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex<T> {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

pub fn vec_norm<T: Scalar>(v: &[Complex<T>]) -> T {
    v.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt()
}

pub fn vec_max_abs_diff<T: Scalar>(a: &[Complex<T>], b: &[Complex<T>]) -> T {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm())
        .fold(T::zero(), T::max)
}

/// Kronecker product: block `(i, j)` of the result is `a[i, j] · b`.
pub fn kron<T: Scalar>(a: &ComplexMatrix<T>, b: &ComplexMatrix<T>) -> ComplexMatrix<T> {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    ComplexMatrix::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

/// Column-major stacking.
pub fn vec<T: Scalar>(x: &ComplexMatrix<T>) -> ComplexVector<T> {
    let mut out = Vec::with_capacity(x.rows() * x.cols());
    for j in 0..x.cols() {
        for i in 0..x.rows() {
            out.push(x[(i, j)]);
        }
    }
    out
}

/// The `n²×n` 0/1 matrix `D` with `vec(diag(x)) = D·x`.
pub fn selection_matrix<T: Scalar>(n: usize) -> Result<ComplexMatrix<T>> {
    if n == 0 {
        return Err(Error::InvalidArgument("selection matrix needs n >= 1".into()));
    }
    let mut d = ComplexMatrix::zeros(n * n, n);
    for k in 0..n {
        d[(k * (n + 1), k)] = Complex::new(T::one(), T::zero());
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn kron_of_identities_is_identity() {
        let i2 = ComplexMatrix::<f64>::identity(2);
        assert_eq!(kron(&i2, &i2), ComplexMatrix::identity(4));
    }

    #[test]
    fn kron_with_scalar_scales() {
        let a = ComplexMatrix::from_real_rows(&[&[2.0]]);
        let b = ComplexMatrix::from_fn(2, 3, |i, j| c(i as f64, j as f64 - 1.0));
        assert_eq!(kron(&a, &b), b.scale(c(2.0, 0.0)));
    }

    #[test]
    fn vec_stacks_columns() {
        let x = ComplexMatrix::<f64>::from_real_rows(&[&[1.0, 2.0], &[3.0, 4.0]]);
        assert_eq!(vec(&x), vec![c(1.0, 0.0), c(3.0, 0.0), c(2.0, 0.0), c(4.0, 0.0)]);
        let one = ComplexMatrix::from_fn(1, 1, |_, _| c(0.5, -2.0));
        assert_eq!(vec(&one), vec![c(0.5, -2.0)]);
    }

    #[test]
    fn selection_matrix_small_cases() {
        let d1 = selection_matrix::<f64>(1).unwrap();
        assert_eq!(d1, ComplexMatrix::identity(1));
        let d2 = selection_matrix::<f64>(2).unwrap();
        for i in 0..4 {
            for j in 0..2 {
                let want = if (i, j) == (0, 0) || (i, j) == (3, 1) { 1.0 } else { 0.0 };
                assert_eq!(d2[(i, j)], c(want, 0.0));
            }
        }
        assert!(selection_matrix::<f64>(0).is_err());
    }

    #[test]
    fn selection_matrix_has_orthonormal_columns() {
        for n in 1..=8 {
            let d = selection_matrix::<f64>(n).unwrap();
            let dtd = d.transpose().matmul(&d).unwrap();
            assert_eq!(dtd, ComplexMatrix::identity(n));
            for i in 0..d.rows() {
                assert!(d.row(i).iter().filter(|z| z.norm() > 0.0).count() <= 1);
            }
        }
    }

    #[test]
    fn matmul_rejects_bad_shapes() {
        let a = ComplexMatrix::<f64>::zeros(2, 3);
        assert!(a.matmul(&a).is_err());
        assert!(a.matvec(&[c(1.0, 0.0)]).is_err());
    }

    #[test]
    fn adjoint_matvec_matches_explicit_adjoint() {
        let a = ComplexMatrix::from_fn(3, 2, |i, j| c(i as f64 + 0.5, j as f64 - 0.25 * i as f64));
        let x = vec![c(1.0, 2.0), c(-0.5, 0.0), c(0.0, 1.0)];
        let fast = a.adjoint_matvec(&x).unwrap();
        let slow = a.adjoint().matvec(&x).unwrap();
        assert!(vec_max_abs_diff(&fast, &slow) < 1e-14);
    }

    #[test]
    fn operator_norm_of_diagonal() {
        let d = ComplexMatrix::diag(&[c(3.0, 0.0), c(0.0, -5.0), c(1.0, 1.0)]);
        assert!((d.operator_norm(200) - 5.0).abs() < 1e-9);
    }
}
