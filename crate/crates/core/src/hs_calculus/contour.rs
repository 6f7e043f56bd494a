use super::{check_order, hs_apply, refine, CalculusResult, QuadratureSpec};
use crate::almost_analytic::AlmostAnalytic;
use crate::error::{Error, Result};
use crate::function_algebra::{approx_char, CkFunction};
use crate::operator_core::{resolvent, ComplexMatrix};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

fn check_enclosure(enclosure: Option<(f64, f64)>) -> Result<(f64, f64)> {
    let (l, u) = enclosure.ok_or(Error::EnclosureMissing)?;
    if !(l <= u) {
        return Err(Error::IntervalInverted { a: l, b: u });
    }
    Ok((l, u))
}

/// One level of the disc decomposition: the boundary integral
/// `(1/2πi) ∮ f̃(z) (z-B)^{-1} dz` by the trapezoidal rule on the circle and the
/// interior term `-(1/π) ∫∫_D ∂̄f̃ (z-B)^{-1}` by polar midpoint cells.
fn contour_level(
    aa: &AlmostAnalytic,
    b: &ComplexMatrix,
    center: f64,
    radius: f64,
    quad: &QuadratureSpec,
    level: usize,
) -> Result<ComplexMatrix> {
    let d = b.dim();
    let m = 4 * (quad.nx << level);
    let nr = quad.ny << level;
    let dtheta = 2.0 * PI / m as f64;
    let dr = radius / nr as f64;
    let parts: Vec<ComplexMatrix> = (0..m)
        .into_par_iter()
        .map(|k| {
            // half-step offset keeps every node off the real axis
            let theta = (k as f64 + 0.5) * dtheta;
            let e = Complex64::from_polar(1.0, theta);
            let mut acc = ComplexMatrix::zeros(d);

            let z = center + radius * e;
            let fz = aa.eval(z.re, z.im);
            if fz != Complex64::new(0.0, 0.0) {
                // (1/2πi) f̃(z) R(z) i ρ e^{iθ} dθ
                let r = resolvent(b, z)?;
                acc.add_scaled(fz * radius * e * dtheta / (2.0 * PI), &r);
            }
            for i in 0..nr {
                let rho = (i as f64 + 0.5) * dr;
                let z = center + rho * e;
                let g = aa.dbar(z.re, z.im);
                if g == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let r = resolvent(b, z)?;
                acc.add_scaled(-g * rho * dr * dtheta / PI, &r);
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    let mut total = ComplexMatrix::zeros(d);
    for p in &parts {
        total.add_scaled(Complex64::new(1.0, 0.0), p);
    }
    Ok(total)
}

/// `f(B)` for a bounded `B` with spectrum in `[l, u]`, via the disc
/// `|z - (l+u)/2| < (u-l)/2 + ε`.
pub fn hs_contour_apply(
    f: &CkFunction,
    b: &ComplexMatrix,
    enclosure: Option<(f64, f64)>,
    eps: f64,
    n: usize,
    quad: &QuadratureSpec,
) -> Result<CalculusResult> {
    if !(eps > 0.0) {
        return Err(Error::EpsilonNonPositive(eps));
    }
    let (l, u) = check_enclosure(enclosure)?;
    check_order(f, n)?;
    let aa = AlmostAnalytic::with_kernel(f.clone(), n, quad.kernel)?;
    let center = 0.5 * (l + u);
    let radius = 0.5 * (u - l) + eps;
    let cells_at = |level: usize| 4 * (quad.nx << level) * ((quad.ny << level) + 1);
    refine(quad, n, cells_at, |level| contour_level(&aa, b, center, radius, quad, level))
}

#[derive(Clone, Debug, Serialize)]
pub struct CharOneReport {
    /// `‖χ(B) - I‖_F` with `χ(B)` from the area formula.
    pub area_deviation: f64,
    pub area_estimate: f64,
    /// `‖(1/2πi)∮(z-B)^{-1}dz - I‖_F` around the rectangle.
    pub contour_deviation: f64,
    pub contour_nodes: usize,
}

impl CharOneReport {
    pub fn deviation(&self) -> f64 {
        self.area_deviation.max(self.contour_deviation)
    }
}

/// Trapezoidal rule on the segment `[a, b]` with `m` panels.
fn segment_trapezoid(bm: &ComplexMatrix, a: Complex64, b: Complex64, m: usize) -> Result<ComplexMatrix> {
    let d = bm.dim();
    let h = (b - a) / m as f64;
    let mut acc = ComplexMatrix::zeros(d);
    for k in 0..=m {
        let w = if k == 0 || k == m { 0.5 } else { 1.0 };
        let r = resolvent(bm, a + h * k as f64)?;
        acc.add_scaled(h * w, &r);
    }
    Ok(acc)
}

fn rectangle_contour(b: &ComplexMatrix, lo: f64, hi: f64, delta: f64, m: usize) -> Result<ComplexMatrix> {
    let corners = [
        Complex64::new(lo, -delta),
        Complex64::new(hi, -delta),
        Complex64::new(hi, delta),
        Complex64::new(lo, delta),
    ];
    let mut total = ComplexMatrix::zeros(b.dim());
    for k in 0..4 {
        let side = segment_trapezoid(b, corners[k], corners[(k + 1) % 4], m)?;
        total.add_scaled(Complex64::new(1.0, 0.0), &side);
    }
    Ok(total.scale(Complex64::new(0.0, -0.5 / PI)))
}

/// Check `χ_{[l',u'],ε}(B) = I` for `[l', u']` strictly enclosing the spectrum,
/// both from the area formula and from the rectangle contour of half-height `delta`.
pub fn char_one_check(
    b: &ComplexMatrix,
    spectrum: (f64, f64),
    l_prime: f64,
    u_prime: f64,
    eps: f64,
    delta: f64,
    quad: &QuadratureSpec,
) -> Result<CharOneReport> {
    if !(l_prime < spectrum.0 && u_prime > spectrum.1) {
        return Err(Error::IntervalDoesNotEncloseSpectrum {
            lo: l_prime,
            hi: u_prime,
        });
    }
    let d = b.dim();
    let eye = ComplexMatrix::identity(d);
    let chi = approx_char(l_prime, u_prime, eps)?;
    let area = hs_apply(&chi, b, 2, quad)?;
    let area_deviation = (&area.value - &eye).frobenius();

    let mut m = 16;
    let mut prev = rectangle_contour(b, l_prime, u_prime, delta, m)?;
    for _ in 0..14 {
        m *= 2;
        let next = rectangle_contour(b, l_prime, u_prime, delta, m)?;
        let change = (&next - &prev).frobenius();
        prev = next;
        if change <= 0.1 * quad.tol {
            break;
        }
    }
    Ok(CharOneReport {
        area_deviation,
        area_estimate: area.error_estimate,
        contour_deviation: (&prev - &eye).frobenius(),
        contour_nodes: 4 * (m + 1),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function_algebra::{bracket_power, bump};
    use crate::operator_core::{make_test_operator, Conditioner};

    #[test]
    fn contour_lorentzian_on_diagonal() {
        let b = ComplexMatrix::from_real_diag(&[1.0, 2.0]);
        let r = hs_contour_apply(&bracket_power(-2.0), &b, Some((1.0, 2.0)), 0.5, 2, &QuadratureSpec::default()).unwrap();
        let expect = ComplexMatrix::from_real_diag(&[0.5, 0.2]);
        assert!((&r.value - &expect).frobenius() < 1e-4, "{} {:?}", r.summary_line(), r.value);
    }

    #[test]
    fn contour_argument_errors() {
        let b = ComplexMatrix::from_real_diag(&[0.0]);
        let f = bump(-1.0, 1.0).unwrap();
        let q = QuadratureSpec::default();
        assert!(matches!(hs_contour_apply(&f, &b, Some((0.0, 0.0)), 0.0, 2, &q), Err(Error::EpsilonNonPositive(_))));
        assert!(matches!(hs_contour_apply(&f, &b, None, 0.5, 2, &q), Err(Error::EnclosureMissing)));
    }

    #[test]
    fn char_one_scalar() {
        let b = ComplexMatrix::from_real_diag(&[0.0]);
        let rep = char_one_check(&b, (0.0, 0.0), -1.0, 1.0, 0.25, 0.5, &QuadratureSpec::default()).unwrap();
        assert!(rep.deviation() <= 1e-4, "{rep:?}");
    }

    #[test]
    fn char_one_non_normal() {
        let t = make_test_operator(&[1.0, 2.0], Conditioner::JordanLike { delta: 0.3, seed: 5 }).unwrap();
        let rep = char_one_check(t.h(), (1.0, 2.0), 0.0, 3.0, 0.25, 0.5, &QuadratureSpec::default()).unwrap();
        assert!(rep.deviation() <= 1e-4, "{rep:?}");
        assert!(matches!(
            char_one_check(t.h(), (1.0, 2.0), 1.5, 3.0, 0.25, 0.5, &QuadratureSpec::default()),
            Err(Error::IntervalDoesNotEncloseSpectrum { .. })
        ));
    }
}
