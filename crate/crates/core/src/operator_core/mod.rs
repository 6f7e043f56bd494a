//! Dense complex matrices, resolvents, test operators with a known spectrum,
//! and resolvent-bound fitting.

mod bound;
mod factory;
mod io;

pub use bound::{fit_resolvent_bound, gershgorin_real_range, BoundGrid, BoundSample, ResolventBoundFit};
pub use factory::{make_test_operator, Conditioner, TestOperator};
pub use io::{read_matrix, write_matrix};

use crate::error::{Error, Result};
use nalgebra::DMatrix;
use num_complex::Complex64;
use std::ops::{Add, Mul, Sub};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Square complex matrix with finite entries.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    inner: DMatrix<Complex64>,
}

impl ComplexMatrix {
    /// Build from row-major entries.
    pub fn from_row_major(d: usize, entries: &[Complex64]) -> Result<Self> {
        if d == 0 {
            return Err(Error::EmptyMatrix);
        }
        if entries.len() != d * d {
            return Err(Error::DimensionMismatch(format!(
                "expected {} entries for dimension {d}, got {}",
                d * d,
                entries.len()
            )));
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFiniteEntry);
        }
        Ok(Self {
            inner: DMatrix::from_row_slice(d, d, entries),
        })
    }

    pub fn from_fn(d: usize, f: impl FnMut(usize, usize) -> Complex64) -> Self {
        assert!(d > 0, "dimension must be positive");
        Self {
            inner: DMatrix::from_fn(d, d, f),
        }
    }

    pub(crate) fn from_nalgebra(inner: DMatrix<Complex64>) -> Self {
        assert!(inner.is_square() && inner.nrows() > 0);
        Self { inner }
    }

    pub(crate) fn as_nalgebra(&self) -> &DMatrix<Complex64> {
        &self.inner
    }

    pub fn zeros(d: usize) -> Self {
        Self::from_fn(d, |_, _| ZERO)
    }

    pub fn identity(d: usize) -> Self {
        Self {
            inner: DMatrix::identity(d, d),
        }
    }

    pub fn from_diag(diag: &[Complex64]) -> Self {
        Self::from_fn(diag.len(), |i, j| if i == j { diag[i] } else { ZERO })
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        Self::from_fn(diag.len(), |i, j| if i == j { Complex64::new(diag[i], 0.0) } else { ZERO })
    }

    pub fn dim(&self) -> usize {
        self.inner.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.inner[(i, j)]
    }

    pub fn row_major(&self) -> Vec<Complex64> {
        self.inner.transpose().as_slice().to_vec()
    }

    pub fn diag(&self) -> Vec<Complex64> {
        self.inner.diagonal().iter().copied().collect()
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        self.inner.column(j).iter().copied().collect()
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self {
            inner: &self.inner * c,
        }
    }

    /// `self += c * other`.
    pub fn add_scaled(&mut self, c: Complex64, other: &ComplexMatrix) {
        self.inner.zip_apply(&other.inner, |a, b| *a += c * b);
    }

    pub fn adjoint(&self) -> Self {
        Self {
            inner: self.inner.adjoint(),
        }
    }

    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        let v = nalgebra::DVector::from_column_slice(v);
        (&self.inner * v).iter().copied().collect()
    }

    pub fn frobenius(&self) -> f64 {
        self.inner.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Frobenius norm of the part off the diagonal.
    pub fn offdiag_frobenius(&self) -> f64 {
        let d = self.dim();
        let mut s = 0.0;
        for i in 0..d {
            for j in 0..d {
                if i != j {
                    s += self.get(i, j).norm_sqr();
                }
            }
        }
        s.sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.inner.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// `zI - self`.
    pub fn shifted(&self, z: Complex64) -> Self {
        let mut m = -&self.inner;
        for i in 0..self.dim() {
            m[(i, i)] += z;
        }
        Self { inner: m }
    }

    /// Spectral norm by power iteration on `M*M`.
    pub fn norm2_estimate(&self) -> NormEstimate {
        let gram = self.inner.adjoint() * &self.inner;
        let d = self.dim();
        // deterministic start with no special alignment to the standard basis
        let mut v = nalgebra::DVector::from_fn(d, |i, _| Complex64::new(1.0 + 0.1 * i as f64, 0.05 * i as f64));
        v /= Complex64::new(v.norm(), 0.0);
        let mut lambda = 0.0;
        for _ in 0..POWER_STEPS {
            let w = &gram * &v;
            let next = w.norm();
            if next == 0.0 {
                return NormEstimate { value: 0.0, converged: true };
            }
            v = w / Complex64::new(next, 0.0);
            if (next - lambda).abs() <= POWER_TOL * next {
                return NormEstimate { value: next.sqrt(), converged: true };
            }
            lambda = next;
        }
        NormEstimate {
            value: lambda.sqrt(),
            converged: false,
        }
    }

    /// Spectral norm: power iteration, with a singular value decomposition
    /// when it stalls on nearly equal leading singular values.
    pub fn norm2(&self) -> f64 {
        let est = self.norm2_estimate();
        if est.converged {
            est.value
        } else {
            self.inner.singular_values().max()
        }
    }

    /// LU factorization with partial pivoting. Fails if a pivot is below
    /// `1e-14 * max |entry|`.
    pub fn lu(&self) -> Option<Lu> {
        let scale = self.inner.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let lu = self.inner.clone().lu();
        let min_pivot = lu.u().diagonal().iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min);
        if !(min_pivot > PIVOT_THRESHOLD * scale) {
            return None;
        }
        Some(Lu {
            matrix: self.inner.clone(),
            lu,
        })
    }

    /// Inverse through LU with one step of iterative refinement.
    pub fn inverse(&self) -> Option<ComplexMatrix> {
        self.lu().map(|lu| lu.inverse())
    }
}

const POWER_STEPS: usize = 50;
const POWER_TOL: f64 = 1e-8;
const PIVOT_THRESHOLD: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormEstimate {
    pub value: f64,
    pub converged: bool,
}

pub struct Lu {
    matrix: DMatrix<Complex64>,
    lu: nalgebra::LU<Complex64, nalgebra::Dyn, nalgebra::Dyn>,
}

impl Lu {
    pub fn inverse(&self) -> ComplexMatrix {
        let d = self.matrix.nrows();
        let eye = DMatrix::<Complex64>::identity(d, d);
        let mut x = self.lu.solve(&eye).expect("factorization is nonsingular");
        let residual = &eye - &self.matrix * &x;
        x += self.lu.solve(&residual).expect("factorization is nonsingular");
        ComplexMatrix { inner: x }
    }

    pub fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        let b = nalgebra::DVector::from_column_slice(b);
        let mut x = self.lu.solve(&b).expect("factorization is nonsingular");
        let residual = &b - &self.matrix * &x;
        x += self.lu.solve(&residual).expect("factorization is nonsingular");
        x.iter().copied().collect()
    }
}

/// `(zI - H)^{-1}`.
pub fn resolvent(h: &ComplexMatrix, z: Complex64) -> Result<ComplexMatrix> {
    resolvent_with_enclosure(h, z, None)
}

/// `(zI - H)^{-1}`, rejecting real shifts inside a declared spectral enclosure.
pub fn resolvent_with_enclosure(h: &ComplexMatrix, z: Complex64, enclosure: Option<(f64, f64)>) -> Result<ComplexMatrix> {
    if z.im == 0.0 {
        if let Some((lo, hi)) = enclosure {
            if z.re >= lo && z.re <= hi {
                return Err(Error::RealShiftInsideSpectrum(z.re));
            }
        }
    }
    h.shifted(z).inverse().ok_or(Error::SingularShift(z))
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix {
            inner: &self.inner + &rhs.inner,
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix {
            inner: &self.inner - &rhs.inner,
        }
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix {
            inner: &self.inner * &rhs.inner,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn scalar_resolvent() {
        let h = ComplexMatrix::from_real_diag(&[0.0]);
        let r = resolvent(&h, Complex64::i()).unwrap();
        assert!((r.get(0, 0) - c(0.0, -1.0)).norm() < 1e-16);
    }

    #[test]
    fn diagonal_real_shift() {
        let h = ComplexMatrix::from_real_diag(&[1.0, 2.0]);
        let r = resolvent(&h, c(3.0, 0.0)).unwrap();
        assert!((&r - &ComplexMatrix::from_real_diag(&[0.5, 1.0])).frobenius() < 1e-15);
        assert_eq!(resolvent(&h, c(2.0, 0.0)), Err(Error::SingularShift(c(2.0, 0.0))));
        assert_eq!(
            resolvent_with_enclosure(&h, c(1.5, 0.0), Some((1.0, 2.0))),
            Err(Error::RealShiftInsideSpectrum(1.5))
        );
    }

    #[test]
    fn random_operator_residual() {
        let t = make_test_operator(&[-1.0, 0.0, 1.0, 2.0], Conditioner::JordanLike { delta: 0.1, seed: 3 }).unwrap();
        let z = c(1.0, 2.0);
        let r = resolvent(t.h(), z).unwrap();
        let res = (&(t.h().shifted(z)) * &r).sub(&ComplexMatrix::identity(4)).frobenius();
        assert!(res < 1e-10, "{res}");
    }

    #[test]
    fn constructor_validation() {
        assert_eq!(ComplexMatrix::from_row_major(0, &[]), Err(Error::EmptyMatrix));
        assert!(matches!(
            ComplexMatrix::from_row_major(2, &[c(1.0, 0.0)]),
            Err(Error::DimensionMismatch(_))
        ));
        assert_eq!(
            ComplexMatrix::from_row_major(1, &[c(f64::NAN, 0.0)]),
            Err(Error::NonFiniteEntry)
        );
        let m = ComplexMatrix::from_row_major(2, &[c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0), c(4.0, 0.0)]).unwrap();
        assert_eq!(m.get(0, 1), c(2.0, 0.0));
        assert_eq!(m.row_major()[2], c(3.0, 0.0));
    }

    #[test]
    fn power_iteration_matches_known_norm() {
        let m = ComplexMatrix::from_real_diag(&[1.0, -3.0, 2.0]);
        assert!((m.norm2() - 3.0).abs() < 1e-6);
        // rank-one matrix u v^*: norm |u||v|
        let m = ComplexMatrix::from_fn(3, |i, j| c((i + 1) as f64, 0.0) * c(1.0, j as f64));
        let expect = 14f64.sqrt() * 8f64.sqrt();
        assert!((m.norm2() - expect).abs() < 1e-8 * expect);
    }

    proptest! {
        #[test]
        fn first_resolvent_identity(seed in 0u64..1000, x1 in -3.0f64..3.0, y1 in 0.1f64..3.0, x2 in -3.0f64..3.0, y2 in -3.0f64..-0.1) {
            let t = make_test_operator(&[-1.0, 0.5, 2.0], Conditioner::JordanLike { delta: 0.3, seed }).unwrap();
            let (z1, z2) = (c(x1, y1), c(x2, y2));
            let r1 = resolvent(t.h(), z1).unwrap();
            let r2 = resolvent(t.h(), z2).unwrap();
            let lhs = &r1 - &r2;
            let rhs = (&r1 * &r2).scale(z2 - z1);
            prop_assert!((&lhs - &rhs).frobenius() <= 1e-8 * lhs.frobenius());
        }

        #[test]
        fn spectral_norm_below_frobenius(entries in proptest::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 16)) {
            let e: Vec<Complex64> = entries.iter().map(|(a, b)| c(*a, *b)).collect();
            let m = ComplexMatrix::from_row_major(4, &e).unwrap();
            prop_assert!(m.norm2_estimate().value <= m.frobenius() * (1.0 + 1e-12));
        }
    }
}
