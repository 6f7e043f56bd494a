//! Seeley's extension of smooth functions on `[0, ∞)` to the whole line:
//! `F(x) = Σ_k a_k φ(b_k x) f(b_k x)` for `x < 0`, with `b_k = -2^k` and
//! `Σ_k a_k b_k^n = 1` for `n = 0..=K`.

use crate::error::{Error, Result};
use crate::function_algebra::{japanese_bracket, CkFunction, Decay, HalfLineFunction};
use crate::jet::Jet;
use crate::quad1d::{integrate, AdaptiveOptions};
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub const MAX_K: usize = 24;

#[derive(Clone, Debug, PartialEq)]
pub struct SeeleyCoefficients {
    a: Vec<BigRational>,
    b: Vec<BigInt>,
}

impl SeeleyCoefficients {
    pub fn k(&self) -> usize {
        self.a.len() - 1
    }

    pub fn a(&self) -> &[BigRational] {
        &self.a
    }

    pub fn b(&self) -> &[BigInt] {
        &self.b
    }

    pub fn a_f64(&self) -> Vec<f64> {
        self.a.iter().map(|q| q.to_f64().expect("finite rational")).collect()
    }

    pub fn b_f64(&self) -> Vec<f64> {
        self.b.iter().map(|q| q.to_f64().expect("finite integer")).collect()
    }

    /// `Σ_k a_k b_k^n - 1` for `n = 0..=max_n`, in exact arithmetic.
    pub fn moment_residuals(&self, max_n: usize) -> Vec<BigRational> {
        (0..=max_n)
            .map(|n| {
                let s = self
                    .a
                    .iter()
                    .zip(&self.b)
                    .fold(BigRational::zero(), |acc, (a, b)| acc + a * BigRational::from_integer(num_traits::pow(b.clone(), n)));
                s - BigRational::one()
            })
            .collect()
    }

    /// `Σ_k |a_k| |b_k|^n`.
    pub fn abs_moment(&self, n: usize) -> f64 {
        self.a_f64()
            .iter()
            .zip(self.b_f64())
            .map(|(a, b)| a.abs() * b.abs().powi(n as i32))
            .sum()
    }
}

/// Solve the Vandermonde system `Σ_k a_k b_k^n = 1`, `n = 0..=K`, exactly.
pub fn seeley_coefficients(k: usize) -> Result<SeeleyCoefficients> {
    if k > MAX_K {
        return Err(Error::KTooLarge(k));
    }
    let size = k + 1;
    let b: Vec<BigInt> = (0..size).map(|j| -(BigInt::one() << j)).collect();
    // augmented rows [b_0^n .. b_K^n | 1]
    let mut m: Vec<Vec<BigRational>> = (0..size)
        .map(|n| {
            let mut row: Vec<BigRational> = b
                .iter()
                .map(|bj| BigRational::from_integer(num_traits::pow(bj.clone(), n)))
                .collect();
            row.push(BigRational::one());
            row
        })
        .collect();
    for col in 0..size {
        let pivot = (col..size)
            .find(|&r| !m[r][col].is_zero())
            .expect("Vandermonde matrix with distinct nodes is nonsingular");
        m.swap(col, pivot);
        let p = m[col][col].clone();
        for v in m[col].iter_mut() {
            *v = &*v / &p;
        }
        for r in 0..size {
            if r != col && !m[r][col].is_zero() {
                let factor = m[r][col].clone();
                for c in col..=size {
                    let delta = &factor * &m[col][c];
                    m[r][c] -= delta;
                }
            }
        }
    }
    let a = m.into_iter().map(|row| row[size].clone()).collect();
    Ok(SeeleyCoefficients { a, b })
}

/// Require `φ = 1` on `[0, 1]` and `φ = 0` outside `[-1, 2]`.
fn check_cutoff(phi: &CkFunction) -> Result<()> {
    match phi.support() {
        Some((lo, hi)) if lo >= -1.0 && hi <= 2.0 => {}
        other => {
            return Err(Error::CutoffShapeInvalid(format!(
                "support must lie in [-1, 2], got {other:?}"
            )))
        }
    }
    for i in 0..=100 {
        let x = i as f64 / 100.0;
        if (phi.value(x) - Complex64::new(1.0, 0.0)).norm() > 1e-12 {
            return Err(Error::CutoffShapeInvalid(format!("φ({x}) != 1")));
        }
    }
    Ok(())
}

/// The Seeley extension of `f` with cut-off `φ`.
pub fn seeley_extend(f: &HalfLineFunction, coeffs: &SeeleyCoefficients, phi: &CkFunction) -> Result<CkFunction> {
    check_cutoff(phi)?;
    let a = coeffs.a_f64();
    let b = coeffs.b_f64();
    let (f, phi_c) = (f.clone(), phi.clone());
    let hi = f.support().map_or(f64::INFINITY, |s| s.1);
    let decay = match f.decay() {
        Decay::Compact => Decay::Power(-1.0),
        d => d,
    };
    Ok(CkFunction::new(
        format!("E[{}; K={}]", f.label(), coeffs.k()),
        f.max_order().min(phi.max_order()),
        decay,
        Some((-2.0, hi)),
        move |x, order| {
            if x >= 0.0 {
                return f.jet_raw(x, order);
            }
            let mut acc = Jet::zero(order);
            for (ak, bk) in a.iter().zip(&b) {
                let s = bk * x;
                if s >= 2.0 {
                    continue;
                }
                let term = &phi_c.jet_raw(s, order) * &f.jet_raw(s, order);
                acc = &acc + &term.chain_linear(*bk).scale(Complex64::new(*ak, 0.0));
            }
            acc
        },
    )
    // φ(b_k x) switches off on [-2^{1-k}, -2^{-k}]
    .with_breakpoints((0..=coeffs.k() + 1).map(|k| -(2.0f64).powi(1 - k as i32)).chain([0.0]).collect()))
}

/// `(T_a f)(x) = f(a x)` for `a > 0`.
pub fn scale_op(a: f64, f: &HalfLineFunction) -> HalfLineFunction {
    assert!(a > 0.0, "scaling on the half-line needs a > 0");
    HalfLineFunction::restrict(&f.as_line_function().compose_affine(a, 0.0))
}

/// `(S_φ f)(x) = φ(x) f(x)`.
pub fn multiply_op(phi: &CkFunction, f: &HalfLineFunction) -> HalfLineFunction {
    HalfLineFunction::restrict(&phi.mul(f.as_line_function()))
}

/// `‖f‖_{A_n^+} = Σ_{r=0}^{n} ∫_0^∞ |f^(r)(x)| <x>^{r-1} dx`.
pub fn aplus_norm(f: &HalfLineFunction, n: usize, tol: f64) -> Result<f64> {
    if n > f.max_order() {
        return Err(Error::OrderExceeded {
            requested: n,
            available: f.max_order(),
        });
    }
    let hi = f.support().map_or(f64::INFINITY, |s| s.1.max(0.0));
    let opts = AdaptiveOptions {
        abs_tol: tol,
        rel_tol: tol,
        max_subdivisions: 20_000,
    };
    let mut total = 0.0;
    for r in 0..=n {
        let integrand = |x: f64| {
            let d = f.jet_raw(x, r).derivative(r).norm();
            if d == 0.0 {
                0.0
            } else {
                d * japanese_bracket(x).powi(r as i32 - 1)
            }
        };
        total += integrate(integrand, 0.0, hi, opts)?.value;
    }
    Ok(total)
}

/// Default cut-off: `χ_{[0,1],1}`, equal to 1 on `[0, 1]` and supported in `[-1, 2]`.
pub fn default_cutoff() -> CkFunction {
    crate::function_algebra::approx_char(0.0, 1.0, 1.0).expect("valid parameters")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function_algebra::{approx_char, polynomial};
    use proptest::prelude::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    /// Lagrange weights at 1 for the nodes b_k: an independent closed form.
    fn lagrange_oracle(k: usize) -> Vec<BigRational> {
        let b: Vec<BigRational> = (0..=k).map(|j| BigRational::from_integer(-(BigInt::one() << j))).collect();
        (0..=k)
            .map(|i| {
                let mut p = BigRational::one();
                for j in 0..=k {
                    if j != i {
                        p *= (BigRational::one() - &b[j]) / (&b[i] - &b[j]);
                    }
                }
                p
            })
            .collect()
    }

    #[test]
    fn small_cases() {
        let c = seeley_coefficients(1).unwrap();
        assert_eq!(c.a(), &[q(3, 1), q(-2, 1)]);
        assert_eq!(c.b_f64(), vec![-1.0, -2.0]);
        assert_eq!(seeley_coefficients(0).unwrap().a(), &[q(1, 1)]);
        assert_eq!(seeley_coefficients(25), Err(Error::KTooLarge(25)));
    }

    #[test]
    fn exact_moments_and_closed_form() {
        for k in 0..=12 {
            let c = seeley_coefficients(k).unwrap();
            assert!(c.moment_residuals(k).iter().all(|r| r.is_zero()));
            assert_eq!(c.a(), lagrange_oracle(k).as_slice());
            assert!(c.b().windows(2).all(|w| w[1] < w[0]));
            assert!(c.b().iter().all(|b| b.is_negative()));
        }
    }

    #[test]
    fn extension_of_constant_and_identity() {
        let c = seeley_coefficients(1).unwrap();
        let one = HalfLineFunction::restrict(&polynomial(&[Complex64::new(1.0, 0.0)]));
        let e = seeley_extend(&one, &c, &default_cutoff()).unwrap();
        assert!((e.value(-0.3) - Complex64::new(1.0, 0.0)).norm() < 1e-14);
        let id = HalfLineFunction::restrict(&polynomial(&[Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]));
        let e = seeley_extend(&id, &c, &default_cutoff()).unwrap();
        assert!((e.value(-0.3) - Complex64::new(-0.3, 0.0)).norm() < 1e-14);
        assert_eq!(e.value(-2.5), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn derivative_matching_at_zero() {
        let k = 5;
        let c = seeley_coefficients(k).unwrap();
        let f = HalfLineFunction::exp_decay(1.0, 1);
        let e = seeley_extend(&f, &c, &default_cutoff()).unwrap();
        let left = e.jet(-1e-300, k).unwrap();
        let right = f.jet(0.0, k).unwrap();
        for r in 0..=k {
            let (l, rr) = (left.derivative(r), right.derivative(r));
            assert!((l - rr).norm() <= 1e-9 * (1.0 + rr.norm()), "r = {r}: {l} vs {rr}");
        }
    }

    #[test]
    fn bad_cutoff() {
        let c = seeley_coefficients(2).unwrap();
        let f = HalfLineFunction::exp_decay(1.0, 1);
        assert!(matches!(
            seeley_extend(&f, &c, &approx_char(0.0, 0.5, 0.5).unwrap()),
            Err(Error::CutoffShapeInvalid(_))
        ));
        assert!(matches!(
            seeley_extend(&f, &c, &approx_char(0.0, 1.0, 2.0).unwrap()),
            Err(Error::CutoffShapeInvalid(_))
        ));
    }

    #[test]
    fn scaling_and_multiplication() {
        let f = HalfLineFunction::exp_decay(1.0, 1);
        assert_eq!(scale_op(1.0, &f).value(0.7).unwrap(), f.value(0.7).unwrap());
        assert!((scale_op(2.0, &f).value(1.0).unwrap().re - (-2.0f64).exp()).abs() < 1e-15);
        let n1 = aplus_norm(&f, 2, 1e-10).unwrap();
        let n2 = aplus_norm(&scale_op(2.0, &f), 2, 1e-10).unwrap();
        assert!(n2 <= 4.0 * n1);

        let id = HalfLineFunction::restrict(&polynomial(&[Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]));
        let chi = approx_char(0.0, 1.0, 0.1).unwrap();
        assert_eq!(multiply_op(&chi, &id).value(3.0).unwrap(), Complex64::new(0.0, 0.0));
        let one = polynomial(&[Complex64::new(1.0, 0.0)]);
        assert_eq!(multiply_op(&one, &f).value(0.4).unwrap(), f.value(0.4).unwrap());
    }

    #[test]
    fn aplus_norm_examples() {
        assert_eq!(aplus_norm(&HalfLineFunction::zero(), 2, 1e-10).unwrap(), 0.0);
        let f = HalfLineFunction::exp_decay(1.0, 1);
        // independent oracle: composite Simpson on [0, 40]
        let m = 200_000;
        let h = 40.0 / m as f64;
        let g = |s: f64| (-s).exp() / (1.0 + s * s).sqrt();
        let simpson: f64 = (0..=m)
            .map(|i| {
                let w = if i == 0 || i == m { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
                w * g(i as f64 * h)
            })
            .sum::<f64>()
            * h
            / 3.0;
        let n0 = aplus_norm(&f, 0, 1e-12).unwrap();
        assert!((n0 - simpson).abs() < 1e-9, "{n0} vs {simpson}");
        assert!(aplus_norm(&f, 1, 1e-10).unwrap() >= n0);
    }

    proptest! {
        #[test]
        fn extension_is_linear(alpha in -3.0f64..3.0, x in -2.5f64..1.0) {
            let c = seeley_coefficients(4).unwrap();
            let phi = default_cutoff();
            let f = HalfLineFunction::exp_decay(1.0, 1);
            let g = HalfLineFunction::inverse_linear();
            let combo = f.scale(Complex64::new(alpha, 0.0)).add(&g);
            let lhs = seeley_extend(&combo, &c, &phi).unwrap().value(x);
            let rhs = seeley_extend(&f, &c, &phi).unwrap().value(x) * alpha + seeley_extend(&g, &c, &phi).unwrap().value(x);
            prop_assert!((lhs - rhs).norm() <= 1e-13 * (1.0 + rhs.norm()));
        }
    }

    /// Central-difference estimates of `F^(r)(0)` from values of `F` on both sides.
    fn central(f: &CkFunction, r: usize, h: f64) -> f64 {
        let v = |x: f64| f.value(x).re;
        match r {
            0 => v(0.0),
            1 => (v(h) - v(-h)) / (2.0 * h),
            2 => (v(h) - 2.0 * v(0.0) + v(-h)) / (h * h),
            3 => (v(2.0 * h) - 2.0 * v(h) + 2.0 * v(-h) - v(-2.0 * h)) / (2.0 * h * h * h),
            _ => unreachable!(),
        }
    }

    #[test]
    fn finite_difference_smoothness_at_zero() {
        let c = seeley_coefficients(6).unwrap();
        let f = HalfLineFunction::exp_decay(1.0, 1);
        let e = seeley_extend(&f, &c, &default_cutoff()).unwrap();
        for r in 0..=3 {
            let exact = f.deriv(r, 0.0).unwrap().re;
            let fd = central(&e, r, 1e-3);
            assert!((fd - exact).abs() <= 1e-6, "r = {r}: {fd} vs {exact}");
        }
    }
}
