use super::CkFunction;
use crate::error::{Error, Result};
use crate::quad1d::{integrate, AdaptiveOptions};
use num_complex::Complex64;

/// `<x> = (1 + x^2)^{1/2}`.
pub fn japanese_bracket(x: f64) -> f64 {
    x.hypot(1.0)
}

/// `<z> = (1 + |z|^2)^{1/2}`.
pub fn japanese_bracket_c(z: Complex64) -> f64 {
    z.norm().hypot(1.0)
}

#[derive(Clone, Copy, Debug)]
pub struct NormOptions {
    pub tol: f64,
    pub max_subdivisions: usize,
}

impl Default for NormOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_subdivisions: 20_000,
        }
    }
}

/// The individual terms `∫ |f^(r)| <x>^{r-1} dx` for `r = 0..=n`.
pub fn an_norm_terms(f: &CkFunction, n: usize, opts: NormOptions) -> Result<Vec<f64>> {
    if n > f.max_order() {
        return Err(Error::OrderExceeded {
            requested: n,
            available: f.max_order(),
        });
    }
    let (lo, hi) = f.support().unwrap_or((f64::NEG_INFINITY, f64::INFINITY));
    if lo >= hi {
        return Ok(vec![0.0; n + 1]);
    }
    let adaptive = AdaptiveOptions {
        abs_tol: opts.tol,
        rel_tol: opts.tol,
        max_subdivisions: opts.max_subdivisions,
    };
    (0..=n)
        .map(|r| {
            let integrand = |x: f64| {
                let d = f.jet_raw(x, r).derivative(r).norm();
                if d == 0.0 {
                    0.0
                } else {
                    d * japanese_bracket(x).powi(r as i32 - 1)
                }
            };
            let out = integrate(integrand, lo, hi, adaptive)?;
            if !out.value.is_finite() {
                return Err(Error::NormNotConverged {
                    estimate: f64::INFINITY,
                    tol: opts.tol,
                });
            }
            Ok(out.value)
        })
        .collect()
}

/// `‖f‖_n = Σ_{r=0}^{n} ∫ |f^(r)(x)| <x>^{r-1} dx`.
pub fn an_norm(f: &CkFunction, n: usize, opts: NormOptions) -> Result<f64> {
    Ok(an_norm_terms(f, n, opts)?.iter().sum())
}

#[cfg(test)]
mod tests {
    use super::super::{bracket_power, CkFunction};
    use super::*;

    #[test]
    fn bracket_values() {
        assert_eq!(japanese_bracket(0.0), 1.0);
        assert!((japanese_bracket(3f64.sqrt()) - 2.0).abs() < 1e-15);
        assert!((japanese_bracket_c(Complex64::new(3.0, 4.0)) - 26f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn zero_function_has_zero_norm() {
        assert_eq!(an_norm(&CkFunction::zero(), 3, NormOptions::default()).unwrap(), 0.0);
    }

    #[test]
    fn lorentzian_order_zero() {
        let f = bracket_power(-2.0);
        let v = an_norm(&f, 0, NormOptions::default()).unwrap();
        assert!((v - 2.0).abs() < 1e-8);
    }

    #[test]
    fn monotone_in_order() {
        let f = bracket_power(-1.0);
        let terms = an_norm_terms(&f, 4, NormOptions::default()).unwrap();
        assert!(terms.iter().all(|t| *t >= 0.0));
        let mut prev = 0.0;
        for n in 0..=4 {
            let v = an_norm(&f, n, NormOptions::default()).unwrap();
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn order_exceeded() {
        let f = bracket_power(-1.0);
        assert!(an_norm(&f, 100, NormOptions::default()).is_err());
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(24))]
        #[test]
        fn seminorm_axioms(b1 in -3.0f64..-1.0, b2 in -3.0f64..-1.0, re in -2.0f64..2.0, im in -2.0f64..2.0, n in 0usize..3) {
            let (f, g) = (bracket_power(b1), bracket_power(b2));
            let o = NormOptions::default();
            let lam = Complex64::new(re, im);
            let nf = an_norm(&f, n, o).unwrap();
            let ng = an_norm(&g, n, o).unwrap();
            let nsum = an_norm(&f.add(&g), n, o).unwrap();
            proptest::prop_assert!(nsum <= (nf + ng) * (1.0 + 1e-9));
            let scaled = an_norm(&f.scale(lam), n, o).unwrap();
            proptest::prop_assert!((scaled - lam.norm() * nf).abs() <= 1e-9 * (1.0 + nf));
        }
    }
}
