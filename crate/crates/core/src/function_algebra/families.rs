//! Built-in function families with analytic derivatives.

use super::{CkFunction, Decay, MAX_ORDER};
use crate::error::{Error, Result};
use crate::jet::Jet;
use num_complex::Complex64;

const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Smooth transition kernels `s: [0,1] -> [0,1]` with `s(0) = 0`, `s(1) = 1`,
/// all derivatives vanishing at both ends, and `s(1/2) = 1/2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GlueKernel {
    /// `e^{-1/t} / (e^{-1/t} + e^{-1/(1-t)})`
    #[default]
    Exp,
    /// `e^{-1/t^2} / (e^{-1/t^2} + e^{-1/(1-t)^2})`
    ExpSquared,
}

impl GlueKernel {
    /// `e^{-1/u}` (or `e^{-1/u^2}`) as a jet; exactly zero once it underflows.
    fn flat_exp(self, u: &Jet) -> Jet {
        let order = u.order();
        let base = u.value().re;
        let arg = match self {
            GlueKernel::Exp => {
                if base <= 1.0 / 700.0 {
                    return Jet::zero(order);
                }
                u.recip()
            }
            GlueKernel::ExpSquared => {
                if base <= (1.0f64 / 700.0).sqrt() {
                    return Jet::zero(order);
                }
                (u * u).recip()
            }
        };
        (-arg).exp()
    }
}

/// Evaluate the glue kernel on a jet whose value lies in `[0, 1]`.
pub fn glue(kernel: GlueKernel, t: &Jet) -> Jet {
    let order = t.order();
    let v = t.value().re;
    if v <= 0.0 {
        return Jet::zero(order);
    }
    if v >= 1.0 {
        return Jet::constant(ONE, order);
    }
    let left = kernel.flat_exp(t);
    let right = kernel.flat_exp(&(-t).add_scalar(ONE));
    left.div(&(&left + &right))
}

pub fn smooth_step(a: f64, eps: f64) -> Result<CkFunction> {
    smooth_step_with(GlueKernel::Exp, a, eps)
}

/// `ψ_{a,ε}`: 0 on `(-∞, a-ε]`, 1 on `[a, ∞)`, glued smoothly in between.
pub fn smooth_step_with(kernel: GlueKernel, a: f64, eps: f64) -> Result<CkFunction> {
    if !(eps > 0.0) {
        return Err(Error::NonPositiveEpsilon(eps));
    }
    Ok(CkFunction::new(
        format!("step({a},{eps})"),
        MAX_ORDER,
        Decay::Power(0.0),
        None,
        move |x, order| step_jet(kernel, a, eps, x, order),
    ))
}

fn step_jet(kernel: GlueKernel, a: f64, eps: f64, x: f64, order: usize) -> Jet {
    if x <= a - eps {
        return Jet::zero(order);
    }
    if x >= a {
        return Jet::constant(ONE, order);
    }
    let t = (x - (a - eps)) / eps;
    glue(kernel, &Jet::variable(t, order)).chain_linear(1.0 / eps)
}

/// Approximate characteristic function of `[a, b]`: equal to 1 there, with
/// support `[a-ε, b+ε]`.
pub fn approx_char(a: f64, b: f64, eps: f64) -> Result<CkFunction> {
    if a > b {
        return Err(Error::IntervalInverted { a, b });
    }
    if !(eps > 0.0) {
        return Err(Error::NonPositiveEpsilon(eps));
    }
    Ok(CkFunction::new(
        format!("chi[{a},{b};{eps}]"),
        MAX_ORDER,
        Decay::Compact,
        Some((a - eps, b + eps)),
        move |x, order| {
            &step_jet(GlueKernel::Exp, a, eps, x, order) - &step_jet(GlueKernel::Exp, b + eps, eps, x, order)
        },
    )
    .with_breakpoints(vec![a, b]))
}

/// Standard bump `exp(1 - 1/(1 - u^2))` on `[a, b]`, peak value 1 at the midpoint.
pub fn bump(a: f64, b: f64) -> Result<CkFunction> {
    if !(a < b) {
        return Err(Error::IntervalInverted { a, b });
    }
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    Ok(CkFunction::new(
        format!("bump[{a},{b}]"),
        MAX_ORDER,
        Decay::Compact,
        Some((a, b)),
        move |x, order| {
            let u = (x - mid) / half;
            if u.abs() >= 1.0 {
                return Jet::zero(order);
            }
            let uj = Jet::variable(u, order);
            let gap = (-(&uj * &uj)).add_scalar(ONE);
            if gap.value().re <= 1.0 / 700.0 {
                return Jet::zero(order);
            }
            (-gap.recip()).add_scalar(ONE).exp().chain_linear(1.0 / half)
        },
    ))
}

/// `<x>^β = (1 + x^2)^{β/2}`.
pub fn bracket_power(beta: f64) -> CkFunction {
    CkFunction::new(
        format!("<x>^{beta}"),
        MAX_ORDER,
        Decay::Power(beta),
        None,
        move |x, order| {
            let xj = Jet::variable(x, order);
            (&xj * &xj).add_scalar(ONE).powf(0.5 * beta)
        },
    )
}

/// `g_z(x) = (z - x)^{-1}` for non-real `z`.
pub fn resolvent_kernel(z: Complex64) -> Result<CkFunction> {
    rational(&[z], &[ONE]).map(|f| f.with_label(format!("g[{z}]")))
}

/// `Σ_k w_k / (z_k - x)` with non-real poles.
pub fn rational(poles: &[Complex64], weights: &[Complex64]) -> Result<CkFunction> {
    if poles.len() != weights.len() || poles.is_empty() {
        return Err(Error::Config("rational needs matching, non-empty poles and weights".into()));
    }
    if let Some(p) = poles.iter().find(|p| p.im == 0.0 || !p.re.is_finite() || !p.im.is_finite()) {
        return Err(Error::Config(format!("pole {p} must be finite and off the real axis")));
    }
    let terms: Vec<(Complex64, Complex64)> = poles.iter().copied().zip(weights.iter().copied()).collect();
    let label = terms
        .iter()
        .map(|(z, w)| format!("{w}/({z}-x)"))
        .collect::<Vec<_>>()
        .join(" + ");
    Ok(CkFunction::new(label, MAX_ORDER, Decay::Power(-1.0), None, move |x, order| {
        let xj = Jet::variable(x, order);
        terms.iter().fold(Jet::zero(order), |acc, (z, w)| {
            &acc + &(-&xj).add_scalar(*z).recip().scale(*w)
        })
    }))
}

/// `Σ_k c_k x^k`.
pub fn polynomial(coeffs: &[Complex64]) -> CkFunction {
    let coeffs = coeffs.to_vec();
    let degree = coeffs.iter().rposition(|c| *c != Complex64::new(0.0, 0.0)).unwrap_or(0);
    CkFunction::new(
        format!("poly{coeffs:?}"),
        MAX_ORDER,
        Decay::Power(degree as f64),
        None,
        move |x, order| {
            let xj = Jet::variable(x, order);
            coeffs
                .iter()
                .rev()
                .fold(Jet::zero(order), |acc, c| (&acc * &xj).add_scalar(*c))
        },
    )
}

/// Smooth plateau interpolant of tabulated values `values[k]` at `x0 + k h`.
///
/// Each node carries a plateau of width `h/2` joined to its neighbours by
/// smooth steps, so the function equals the table at every node and has
/// compact support `[x0 - 3h/4, x_last + 3h/4]`.
pub fn custom_table(x0: f64, h: f64, values: &[Complex64]) -> Result<CkFunction> {
    if !(h > 0.0) {
        return Err(Error::NonPositiveEpsilon(h));
    }
    if values.is_empty() {
        return Err(Error::Config("custom table needs at least one value".into()));
    }
    let values = values.to_vec();
    let n = values.len();
    let lo = x0 - 0.75 * h;
    let hi = x0 + (n - 1) as f64 * h + 0.75 * h;
    Ok(CkFunction::new(
        format!("table[{n}]"),
        MAX_ORDER,
        Decay::Compact,
        Some((lo, hi)),
        move |x, order| {
            let k = ((x - x0) / h).round();
            let mut acc = Jet::zero(order);
            for idx in [k - 1.0, k, k + 1.0] {
                if idx < 0.0 || idx >= n as f64 {
                    continue;
                }
                let xk = x0 + idx * h;
                let plateau = &step_jet(GlueKernel::Exp, xk - 0.25 * h, 0.5 * h, x, order)
                    - &step_jet(GlueKernel::Exp, xk + 0.75 * h, 0.5 * h, x, order);
                acc = &acc + &plateau.scale(values[idx as usize]);
            }
            acc
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn re(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn smooth_step_plateaus_and_midpoint() {
        let psi = smooth_step(0.0, 1.0).unwrap();
        assert_eq!(psi.value(0.5), re(1.0));
        assert_eq!(psi.value(-2.0), re(0.0));
        assert!((psi.value(-0.5) - re(0.5)).norm() < 1e-15);
        // all derivatives supported in [a - ε, a]
        for r in 1..6 {
            assert_eq!(psi.deriv(r, 0.2).unwrap(), re(0.0));
            assert_eq!(psi.deriv(r, -1.3).unwrap(), re(0.0));
        }
    }

    #[test]
    fn smooth_step_is_monotone_between_zero_and_one() {
        let psi = smooth_step(1.0, 0.5).unwrap();
        let mut prev = 0.0;
        for i in 0..=400 {
            let x = 0.4 + i as f64 * 0.7 / 400.0;
            let v = psi.value(x).re;
            assert!((0.0..=1.0).contains(&v));
            assert!(v >= prev - 1e-15);
            prev = v;
        }
    }

    #[test]
    fn smooth_step_rejects_bad_width() {
        assert!(matches!(smooth_step(0.0, 0.0), Err(Error::NonPositiveEpsilon(_))));
        assert!(matches!(smooth_step(0.0, -1.0), Err(Error::NonPositiveEpsilon(_))));
    }

    #[test]
    fn approx_char_values() {
        let chi = approx_char(0.0, 1.0, 0.1).unwrap();
        assert_eq!(chi.value(0.5), re(1.0));
        assert_eq!(chi.value(2.0), re(0.0));
        let inner = smooth_step(0.0, 0.1).unwrap().value(-0.05);
        assert!((chi.value(-0.05) - inner).norm() < 1e-15);
        assert!(inner.re > 0.0 && inner.re < 1.0);
        assert_eq!(chi.support(), Some((-0.1, 1.1)));
        assert!(matches!(approx_char(1.0, 0.0, 0.1), Err(Error::IntervalInverted { .. })));
    }

    #[test]
    fn glue_derivatives_match_finite_differences() {
        for kernel in [GlueKernel::Exp, GlueKernel::ExpSquared] {
            for &t in &[0.2, 0.5, 0.77] {
                let jet = glue(kernel, &Jet::variable(t, 3));
                let h = 1e-5;
                let f = |s: f64| glue(kernel, &Jet::variable(s, 0)).value().re;
                let fd = (f(t + h) - f(t - h)) / (2.0 * h);
                assert!((jet.derivative(1).re - fd).abs() < 1e-7, "{kernel:?} at {t}");
            }
        }
    }

    #[test]
    fn bump_peak_and_symmetry() {
        let b = bump(-1.0, 3.0).unwrap();
        assert!((b.value(1.0) - re(1.0)).norm() < 1e-15);
        assert!((b.value(0.0) - b.value(2.0)).norm() < 1e-15);
        assert_eq!(b.value(3.5), re(0.0));
    }

    #[test]
    fn bracket_power_derivative_bound() {
        // |d^r <x>^{-1}| <= c_r <x>^{-1-r} on a wide grid, r <= 4
        let f = bracket_power(-1.0);
        for r in 0..=4 {
            let mut c_r: f64 = 0.0;
            for i in 0..=2000 {
                let x = 1e4 * (i as f64 / 1000.0 - 1.0).powi(3);
                let scaled = f.deriv(r, x).unwrap().norm() * (1.0 + x * x).powf(0.5 * (1.0 + r as f64));
                c_r = c_r.max(scaled);
            }
            assert!(c_r.is_finite() && c_r < 100.0, "r = {r}, c_r = {c_r}");
        }
    }

    #[test]
    fn rational_rejects_real_poles() {
        assert!(resolvent_kernel(re(1.0)).is_err());
        let g = resolvent_kernel(Complex64::i()).unwrap();
        assert!((g.value(0.0) - Complex64::new(0.0, -1.0)).norm() < 1e-15);
    }

    #[test]
    fn custom_table_interpolates_nodes() {
        let vals = [re(0.5), re(-1.0), re(2.0)];
        let f = custom_table(0.0, 1.0, &vals).unwrap();
        for (k, v) in vals.iter().enumerate() {
            assert!((f.value(k as f64) - v).norm() < 1e-15);
        }
        assert_eq!(f.value(-0.8), re(0.0));
        assert_eq!(f.value(2.8), re(0.0));
    }
}
