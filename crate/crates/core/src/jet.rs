//! Truncated Taylor series arithmetic.
//!
//! A [`Jet`] of order `K` at a point `x` stores the normalized Taylor
//! coefficients `c_r = f^(r)(x) / r!` for `r = 0..=K`. Arithmetic on jets
//! follows the usual power-series recurrences, so any function built from
//! `+`, `*`, `/`, `exp`, `ln` and real powers gets all of its derivatives
//! up to order `K` to working precision without finite differencing.

use num_complex::Complex64;
use std::ops::{Add, Mul, Neg, Sub};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Clone, Debug, PartialEq)]
pub struct Jet {
    coeffs: Vec<Complex64>,
}

impl Jet {
    pub fn zero(order: usize) -> Self {
        Self {
            coeffs: vec![ZERO; order + 1],
        }
    }

    pub fn constant(value: Complex64, order: usize) -> Self {
        let mut jet = Self::zero(order);
        jet.coeffs[0] = value;
        jet
    }

    /// The identity function seeded at `x`.
    pub fn variable(x: f64, order: usize) -> Self {
        let mut jet = Self::constant(Complex64::new(x, 0.0), order);
        if order >= 1 {
            jet.coeffs[1] = Complex64::new(1.0, 0.0);
        }
        jet
    }

    pub fn from_coeffs(coeffs: Vec<Complex64>) -> Self {
        assert!(!coeffs.is_empty(), "a jet needs at least one coefficient");
        Self { coeffs }
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn value(&self) -> Complex64 {
        self.coeffs[0]
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeff(&self, r: usize) -> Complex64 {
        self.coeffs.get(r).copied().unwrap_or(ZERO)
    }

    /// `f^(r)(x)`, i.e. `r! * c_r`.
    pub fn derivative(&self, r: usize) -> Complex64 {
        self.coeff(r) * factorial(r)
    }

    /// All derivatives `f^(0..=order)(x)`.
    pub fn derivatives(&self) -> Vec<Complex64> {
        (0..=self.order()).map(|r| self.derivative(r)).collect()
    }

    pub fn truncate(mut self, order: usize) -> Self {
        self.coeffs.resize(order + 1, ZERO);
        self
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
        }
    }

    /// Jet of `x -> f(a x)` given the jet of `f` at `a x`.
    pub fn chain_linear(&self, a: f64) -> Self {
        let mut power = 1.0;
        let coeffs = self
            .coeffs
            .iter()
            .map(|c| {
                let out = c * power;
                power *= a;
                out
            })
            .collect();
        Self { coeffs }
    }

    pub fn add_scalar(&self, value: Complex64) -> Self {
        let mut out = self.clone();
        out.coeffs[0] += value;
        out
    }

    pub fn recip(&self) -> Self {
        Jet::constant(Complex64::new(1.0, 0.0), self.order()).div(self)
    }

    pub fn div(&self, other: &Jet) -> Self {
        let order = self.order().min(other.order());
        let b0 = other.coeffs[0];
        let mut q = vec![ZERO; order + 1];
        for k in 0..=order {
            let mut acc = self.coeffs[k];
            for j in 1..=k {
                acc -= other.coeffs[j] * q[k - j];
            }
            q[k] = acc / b0;
        }
        Self { coeffs: q }
    }

    pub fn exp(&self) -> Self {
        let order = self.order();
        let mut e = vec![ZERO; order + 1];
        e[0] = self.coeffs[0].exp();
        for k in 1..=order {
            let mut acc = ZERO;
            for j in 1..=k {
                acc += self.coeffs[j] * e[k - j] * j as f64;
            }
            e[k] = acc / k as f64;
        }
        Self { coeffs: e }
    }

    pub fn ln(&self) -> Self {
        let order = self.order();
        let a0 = self.coeffs[0];
        let mut l = vec![ZERO; order + 1];
        l[0] = a0.ln();
        for k in 1..=order {
            let mut acc = self.coeffs[k] * k as f64;
            for j in 1..k {
                acc -= l[j] * self.coeffs[k - j] * j as f64;
            }
            l[k] = acc / (a0 * k as f64);
        }
        Self { coeffs: l }
    }

    /// Principal branch power `f^beta`; requires `f(x) != 0`.
    pub fn powf(&self, beta: f64) -> Self {
        let order = self.order();
        let a0 = self.coeffs[0];
        let mut p = vec![ZERO; order + 1];
        p[0] = a0.powf(beta);
        for k in 1..=order {
            let mut acc = ZERO;
            for j in 1..=k {
                acc += self.coeffs[j] * p[k - j] * (beta * j as f64 - (k - j) as f64);
            }
            p[k] = acc / (a0 * k as f64);
        }
        Self { coeffs: p }
    }

    pub fn sqrt(&self) -> Self {
        self.powf(0.5)
    }

    pub fn powi(&self, n: u32) -> Self {
        let mut out = Jet::constant(Complex64::new(1.0, 0.0), self.order());
        for _ in 0..n {
            out = &out * self;
        }
        out
    }

    /// Evaluate the truncated series at offset `h` from the base point.
    pub fn eval_offset(&self, h: f64) -> Complex64 {
        self.coeffs.iter().rev().fold(ZERO, |acc, c| acc * h + c)
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }
}

pub fn factorial(r: usize) -> f64 {
    (1..=r).fold(1.0, |acc, k| acc * k as f64)
}

impl Add for &Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        let order = self.order().min(rhs.order());
        Jet {
            coeffs: (0..=order).map(|k| self.coeffs[k] + rhs.coeffs[k]).collect(),
        }
    }
}

impl Sub for &Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        let order = self.order().min(rhs.order());
        Jet {
            coeffs: (0..=order).map(|k| self.coeffs[k] - rhs.coeffs[k]).collect(),
        }
    }
}

impl Mul for &Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        let order = self.order().min(rhs.order());
        let mut out = vec![ZERO; order + 1];
        for (i, a) in self.coeffs.iter().take(order + 1).enumerate() {
            if *a == ZERO {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().take(order + 1 - i).enumerate() {
                out[i + j] += a * b;
            }
        }
        Jet { coeffs: out }
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        Jet {
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
        }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $method:ident) => {
        impl $tr for Jet {
            type Output = Jet;
            fn $method(self, rhs: Jet) -> Jet {
                (&self).$method(&rhs)
            }
        }
        impl $tr<&Jet> for Jet {
            type Output = Jet;
            fn $method(self, rhs: &Jet) -> Jet {
                (&self).$method(rhs)
            }
        }
    };
}

forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        -&self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn polynomial_derivatives() {
        // x^3 at x = 2: 8, 12, 12, 6
        let x = Jet::variable(2.0, 4);
        let cube = x.powi(3);
        let d = cube.derivatives();
        assert_eq!(d[0], c(8.0));
        assert_eq!(d[1], c(12.0));
        assert_eq!(d[2], c(12.0));
        assert_eq!(d[3], c(6.0));
        assert_eq!(d[4], c(0.0));
    }

    #[test]
    fn exp_of_linear() {
        let x = Jet::variable(0.5, 5);
        let e = x.scale(c(-2.0)).exp();
        for r in 0..=5 {
            let expected = (-2.0f64).powi(r as i32) * (-1.0f64).exp();
            assert!((e.derivative(r).re - expected).abs() < 1e-13 * expected.abs().max(1.0));
        }
    }

    #[test]
    fn reciprocal_matches_closed_form() {
        // 1/(i - x) at x = 0.3: r-th derivative is r!/(i - x)^{r+1}
        let x = Jet::variable(0.3, 6);
        let f = (-&x).add_scalar(Complex64::i()).recip();
        let base = Complex64::i() - 0.3;
        for r in 0..=6 {
            let expected = factorial(r) / base.powu(r as u32 + 1);
            assert!((f.derivative(r) - expected).norm() < 1e-12 * expected.norm());
        }
    }

    #[test]
    fn powf_and_ln_are_consistent() {
        let x = Jet::variable(0.7, 6);
        let base = (&x * &x).add_scalar(c(1.0));
        let direct = base.powf(-1.5);
        let via_log = base.ln().scale(c(-1.5)).exp();
        for r in 0..=6 {
            let a = direct.derivative(r);
            let b = via_log.derivative(r);
            assert!((a - b).norm() < 1e-11 * (1.0 + a.norm()));
        }
    }

    #[test]
    fn chain_linear_scales_derivatives() {
        let x = Jet::variable(1.0, 3);
        let f = x.powi(2);
        let g = f.chain_linear(3.0);
        assert_eq!(g.derivative(1), f.derivative(1) * 3.0);
        assert_eq!(g.derivative(2), f.derivative(2) * 9.0);
    }
}
