use super::CkFunction;
use crate::error::{Error, Result};
use num_complex::Complex64;

/// An element `(z, f)` of the unitized algebra, acting pointwise as `z + f(x)`.
#[derive(Clone, Debug)]
pub struct ExtendedElement {
    pub scalar: Complex64,
    pub function: CkFunction,
}

impl ExtendedElement {
    pub fn new(scalar: Complex64, function: CkFunction) -> Self {
        Self { scalar, function }
    }

    pub fn scalar(value: Complex64) -> Self {
        Self::new(value, CkFunction::zero())
    }

    pub fn from_function(function: CkFunction) -> Self {
        Self::new(Complex64::new(0.0, 0.0), function)
    }

    pub fn eval(&self, x: f64) -> Complex64 {
        self.scalar + self.function.value(x)
    }

    pub fn add(&self, other: &ExtendedElement) -> Self {
        Self::new(self.scalar + other.scalar, self.function.add(&other.function))
    }

    /// `(ω, f)(z, g) = (ωz, ωg + zf + fg)`.
    pub fn mul(&self, other: &ExtendedElement) -> Self {
        let (w, f) = (self.scalar, &self.function);
        let (z, g) = (other.scalar, &other.function);
        let function = g.scale(w).add(&f.scale(z)).add(&f.mul(g));
        Self::new(w * z, function)
    }

    pub fn shift(&self, lambda: Complex64) -> Self {
        Self::new(self.scalar - lambda, self.function.clone())
    }
}

const RANGE_SCAN: usize = 20_000;

/// Whether `z + f(x)` stays away from zero on the whole line, certified from
/// samples on `x = L tan(πu/2)` together with a slope bound in `u`.
fn range_avoids_zero(z: Complex64, f: &CkFunction) -> bool {
    let (lo, hi) = match f.support() {
        Some((lo, hi)) if lo.is_finite() && hi.is_finite() => (lo, hi),
        _ => (f64::NEG_INFINITY, f64::INFINITY),
    };
    let samples: Vec<(f64, f64)> = if lo.is_finite() {
        let step = (hi - lo) / RANGE_SCAN as f64;
        (0..=RANGE_SCAN)
            .map(|i| {
                let jet = f.jet_raw(lo + step * i as f64, 1);
                ((jet.value() + z).norm(), jet.derivative(1).norm() * step)
            })
            .collect()
    } else {
        let step = 2.0 / RANGE_SCAN as f64;
        (1..RANGE_SCAN)
            .map(|i| {
                let u = -1.0 + step * i as f64;
                let t = std::f64::consts::FRAC_PI_2 * u;
                let x = t.tan();
                let dxdu = std::f64::consts::FRAC_PI_2 / (t.cos() * t.cos());
                let jet = f.jet_raw(x, 1);
                ((jet.value() + z).norm(), jet.derivative(1).norm() * dxdu * step)
            })
            .collect()
    };
    let travel = samples.iter().map(|s| s.1).fold(0.0, f64::max);
    samples.iter().all(|s| s.0 > travel) && z.norm() > 0.0
}

/// Inverse of `φ - λ` in the unitized algebra:
/// `((π_C - λ)^{-1}, μ(φ - λ))` with `μ(z, f) = -f / (z (z + f))`.
pub fn extended_inverse(phi: &ExtendedElement, lambda: Complex64) -> Result<ExtendedElement> {
    let z = phi.scalar - lambda;
    if z.norm() <= 1e-14 * (1.0 + lambda.norm()) {
        return Err(Error::ScalarEqualsLambda(lambda));
    }
    if !range_avoids_zero(z, &phi.function) {
        return Err(Error::ValueAttained(lambda));
    }
    let f = phi.function.clone();
    let mu = CkFunction::new(
        format!("mu[{}]", f.label()),
        f.max_order(),
        f.decay(),
        f.support(),
        move |x, order| {
            let fj = f.jet_raw(x, order);
            let den = fj.add_scalar(z).scale(z);
            (-&fj).div(&den)
        },
    );
    Ok(ExtendedElement::new(z.inv(), mu))
}

#[cfg(test)]
mod tests {
    use super::super::{bracket_power, bump};
    use super::*;

    fn re(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn identity_inverts_to_identity() {
        let inv = extended_inverse(&ExtendedElement::scalar(re(1.0)), re(0.0)).unwrap();
        assert_eq!(inv.scalar, re(1.0));
        assert_eq!(inv.function.value(0.3), re(0.0));
    }

    #[test]
    fn scalar_shift() {
        let inv = extended_inverse(&ExtendedElement::scalar(re(2.0)), re(1.0)).unwrap();
        assert_eq!(inv.scalar, re(1.0));
    }

    #[test]
    fn one_plus_lorentzian_inverse_pointwise() {
        let phi = ExtendedElement::new(re(1.0), bracket_power(-2.0));
        let inv = extended_inverse(&phi, re(0.0)).unwrap();
        assert!((inv.eval(0.0) - re(0.5)).norm() < 1e-15);
        for i in -50..=50 {
            let x = i as f64 * 0.37;
            assert!((inv.eval(x) * phi.eval(x) - re(1.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn product_rule_pointwise() {
        let a = ExtendedElement::new(re(2.0), bracket_power(-1.0));
        let b = ExtendedElement::new(Complex64::i(), bump(-1.0, 2.0).unwrap());
        let p = a.mul(&b);
        for i in -20..=20 {
            let x = i as f64 * 0.19;
            assert!((p.eval(x) - a.eval(x) * b.eval(x)).norm() < 1e-14);
        }
    }

    #[test]
    fn attained_value_is_rejected() {
        // 1 - <x>^{-2} vanishes at x = 0
        let phi = ExtendedElement::new(re(1.0), bracket_power(-2.0).scale(re(-1.0)));
        assert!(matches!(extended_inverse(&phi, re(0.0)), Err(Error::ValueAttained(_))));
        assert!(matches!(
            extended_inverse(&ExtendedElement::scalar(re(1.0)), re(1.0)),
            Err(Error::ScalarEqualsLambda(_))
        ));
    }
}
