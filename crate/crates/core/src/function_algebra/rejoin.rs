use super::{approx_char, CkFunction};
use crate::error::{Error, Result};
use crate::jet::Jet;
use num_complex::Complex64;

/// `Γ(z, ω, α) = ((1-α)|z| + α|ω|) e^{i(1-α)Arg z + iα Arg ω}`.
///
/// Joins `z` (at `α = 0`) to `ω` (at `α = 1`) without passing through the origin.
pub fn gamma_join(z: Complex64, w: Complex64, alpha: f64) -> Result<Complex64> {
    if z == Complex64::new(0.0, 0.0) || w == Complex64::new(0.0, 0.0) {
        return Err(Error::ZeroEndpoint);
    }
    let modulus = (1.0 - alpha) * z.norm() + alpha * w.norm();
    let phase = (1.0 - alpha) * z.arg() + alpha * w.arg();
    Ok(Complex64::from_polar(modulus, phase))
}

#[derive(Clone, Debug)]
pub struct RejoinReport {
    pub function: CkFunction,
    /// Blend width used, or `None` if `f` already avoided `λ`.
    pub eps: Option<f64>,
    /// Smallest `|h - λ|` seen on the verification grid over `[a, b]`.
    pub min_distance: f64,
}

const SCAN_POINTS: usize = 1000;

/// Certify `g(x) != λ` on `[lo, hi]` from samples: every sample must sit
/// further from `λ` than the slope bound allows the function to travel in one
/// grid step.
fn avoids(g: &CkFunction, lo: f64, hi: f64, lambda: Complex64) -> (bool, f64) {
    let step = (hi - lo) / SCAN_POINTS as f64;
    let samples: Vec<(f64, f64)> = (0..=SCAN_POINTS)
        .map(|i| {
            let x = lo + step * i as f64;
            let jet = g.jet_raw(x, 1);
            ((jet.value() - lambda).norm(), jet.derivative(1).norm())
        })
        .collect();
    let slope = samples.iter().map(|s| s.1).fold(0.0, f64::max);
    let min_dist = samples.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
    (min_dist > step * slope && min_dist > 0.0, min_dist)
}

/// Modify `f` inside `[a, b]` so that it never takes the value `λ` there,
/// leaving it untouched outside and matching it to all orders at `a` and `b`.
///
/// The modification blends `f` into the `Γ`-curve joining `f(a)` to `f(b)`
/// around `λ`, using an approximate characteristic function of `[a+ε, b-ε]`.
pub fn rejoin_avoiding(f: &CkFunction, interval: (f64, f64), lambda: Complex64) -> Result<RejoinReport> {
    let (a, b) = interval;
    if !(a < b) {
        return Err(Error::IntervalInverted { a, b });
    }
    let fa = f.value(a) - lambda;
    let fb = f.value(b) - lambda;
    let scale = 1e-14 * (1.0 + lambda.norm());
    if fa.norm() <= scale || fb.norm() <= scale {
        return Err(Error::EndpointHitsLambda(lambda));
    }
    let (clear, min_distance) = avoids(f, a, b, lambda);
    if clear {
        return Ok(RejoinReport {
            function: f.clone(),
            eps: None,
            min_distance,
        });
    }

    let mut eps = 0.25 * (b - a);
    while !(avoids(f, a, a + 2.0 * eps, lambda).0 && avoids(f, b - 2.0 * eps, b, lambda).0) {
        eps *= 0.5;
        if eps < 1e-9 * (b - a) {
            return Err(Error::RejoinFailed(lambda));
        }
    }

    // Blending two nonzero values can still cancel if f turns quickly near an
    // endpoint; narrow the blend until the result verifies.
    for _ in 0..40 {
        let h = blend(f, a, b, eps, fa, fb, lambda)?;
        let (ok, min_distance) = avoids(&h, a, b, lambda);
        if ok {
            return Ok(RejoinReport {
                function: h,
                eps: Some(eps),
                min_distance,
            });
        }
        eps *= 0.5;
    }
    Err(Error::RejoinFailed(lambda))
}

fn blend(
    f: &CkFunction,
    a: f64,
    b: f64,
    eps: f64,
    fa: Complex64,
    fb: Complex64,
    lambda: Complex64,
) -> Result<CkFunction> {
    let chi = approx_char(a + eps, b - eps, eps)?;
    let (ma, mb) = (fa.norm(), fb.norm());
    let (pa, pb) = (fa.arg(), fb.arg());
    let width = b - a;
    let base = f.clone();
    Ok(CkFunction::new(
        format!("rejoin[{}; {a},{b}]", f.label()),
        f.max_order(),
        f.decay(),
        f.support(),
        move |x, order| {
            let fx = base.jet_raw(x, order);
            if x <= a || x >= b {
                return fx;
            }
            let alpha = Jet::variable((x - a) / width, order).chain_linear(1.0 / width);
            let modulus = alpha.scale(Complex64::new(mb - ma, 0.0)).add_scalar(Complex64::new(ma, 0.0));
            let phase = alpha.scale(Complex64::new(0.0, pb - pa)).add_scalar(Complex64::new(0.0, pa));
            let curve = (&modulus * &phase.exp()).add_scalar(lambda);
            let weight = chi.jet_raw(x, order);
            &fx + &(&weight * &(&curve - &fx))
        },
    )
    .with_breakpoints(f.breakpoints().iter().copied().chain([a, a + eps, b - eps, b]).collect()))
}

#[cfg(test)]
mod tests {
    use super::super::{bracket_power, polynomial};
    use super::*;
    use std::f64::consts::FRAC_PI_4;

    fn re(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn gamma_endpoints_and_midpoint() {
        let i = Complex64::i();
        assert!((gamma_join(re(1.0), i, 0.0).unwrap() - re(1.0)).norm() < 1e-15);
        assert!((gamma_join(re(1.0), i, 1.0).unwrap() - i).norm() < 1e-15);
        let mid = gamma_join(re(1.0), i, 0.5).unwrap();
        assert!((mid - Complex64::from_polar(1.0, FRAC_PI_4)).norm() < 1e-15);
        assert_eq!(gamma_join(re(0.0), i, 0.5), Err(Error::ZeroEndpoint));
    }

    #[test]
    fn untouched_when_value_is_never_hit() {
        let f = bracket_power(-2.0);
        let rep = rejoin_avoiding(&f, (-1.0, 1.0), re(-1.0)).unwrap();
        assert!(rep.eps.is_none());
        assert_eq!(rep.function.value(0.3), f.value(0.3));
    }

    #[test]
    fn identity_is_rerouted_around_zero() {
        let f = polynomial(&[re(0.0), re(1.0)]);
        let rep = rejoin_avoiding(&f, (-1.0, 1.0), re(0.0)).unwrap();
        let h = &rep.function;
        assert!(rep.eps.is_some());
        assert!((h.value(-1.0) - re(-1.0)).norm() < 1e-15);
        assert!((h.value(1.0) - re(1.0)).norm() < 1e-15);
        let min = (0..=20_000)
            .map(|i| h.value(-1.0 + 2.0 * i as f64 / 20_000.0).norm())
            .fold(f64::INFINITY, f64::min);
        assert!(min > 0.1, "min |h| = {min}");
        // outside the interval h = f, and derivatives match at the ends
        assert_eq!(h.value(1.5), f.value(1.5));
        for r in 1..4 {
            let dh = h.deriv(r, -1.0 + 1e-9).unwrap();
            let df = f.deriv(r, -1.0 + 1e-9).unwrap();
            assert!((dh - df).norm() < 1e-6, "r = {r}");
        }
    }

    #[test]
    fn endpoint_hit_is_an_error() {
        let f = polynomial(&[re(0.0), re(1.0)]);
        assert!(matches!(
            rejoin_avoiding(&f, (0.0, 1.0), re(0.0)),
            Err(Error::EndpointHitsLambda(_))
        ));
    }

    proptest::proptest! {
        #[test]
        fn gamma_never_vanishes(r1 in 1e-3f64..10.0, a1 in -3.1f64..3.1, r2 in 1e-3f64..10.0, a2 in -3.1f64..3.1, alpha in 0.0f64..=1.0) {
            let z = Complex64::from_polar(r1, a1);
            let w = Complex64::from_polar(r2, a2);
            let g = gamma_join(z, w, alpha).unwrap();
            proptest::prop_assert!(g.norm() >= r1.min(r2) * (1.0 - 1e-12));
        }
    }
}
