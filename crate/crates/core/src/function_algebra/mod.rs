//! Smooth functions on the line and half-line, represented by derivative
//! evaluators, together with the algebra operations and explicit
//! constructions (smooth steps, plateau functions, difference quotients,
//! rejoined curves) used by the functional calculus.

mod extended;
mod families;
mod norm;
mod rejoin;

pub use extended::{extended_inverse, ExtendedElement};
pub use families::{
    approx_char, bracket_power, bump, custom_table, glue, polynomial, rational, resolvent_kernel,
    smooth_step, smooth_step_with, GlueKernel,
};
pub use norm::{an_norm, an_norm_terms, japanese_bracket, japanese_bracket_c, NormOptions};
pub use rejoin::{gamma_join, rejoin_avoiding, RejoinReport};

use crate::error::{Error, Result};
use crate::jet::Jet;
use num_complex::Complex64;
use std::fmt;
use std::sync::Arc;

/// Highest derivative order the built-in analytic families provide.
pub const MAX_ORDER: usize = 24;

pub(crate) type JetFn = dyn Fn(f64, usize) -> Jet + Send + Sync;

/// Decay class of a function on the line.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Decay {
    /// Compact support (see the support hint for where).
    Compact,
    /// `|f^(r)(x)| <= c_r <x>^(beta - r)`. `beta < 0` puts the function in the
    /// decaying algebra, `beta = 0` is bounded, `beta > 0` grows.
    Power(f64),
}

impl Decay {
    fn exponent(self) -> f64 {
        match self {
            Decay::Compact => f64::NEG_INFINITY,
            Decay::Power(b) => b,
        }
    }

    fn sum(self, other: Decay) -> Decay {
        match (self, other) {
            (Decay::Compact, Decay::Compact) => Decay::Compact,
            _ => Decay::Power(self.exponent().max(other.exponent())),
        }
    }

    fn product(self, other: Decay) -> Decay {
        match (self, other) {
            (Decay::Compact, _) | (_, Decay::Compact) => Decay::Compact,
            (Decay::Power(a), Decay::Power(b)) => Decay::Power(a + b),
        }
    }
}

/// Support hint `[lo, hi]`; either end may be infinite.
pub type Support = Option<(f64, f64)>;

fn support_hull(a: Support, b: Support) -> Support {
    match (a, b) {
        (Some((a0, a1)), Some((b0, b1))) => Some((a0.min(b0), a1.max(b1))),
        _ => None,
    }
}

fn support_intersection(a: Support, b: Support) -> Support {
    match (a, b) {
        (Some((a0, a1)), Some((b0, b1))) => Some((a0.max(b0), a1.min(b1))),
        (Some(s), None) | (None, Some(s)) => Some(s),
        (None, None) => None,
    }
}

/// A smooth complex-valued function on the real line, given by a closure
/// producing its Taylor jet up to a requested order.
#[derive(Clone)]
pub struct CkFunction {
    jet_fn: Arc<JetFn>,
    max_order: usize,
    decay: Decay,
    support: Support,
    label: String,
    /// Points where the function changes scale; quadrature panels split here.
    breakpoints: Arc<[f64]>,
}

impl fmt::Debug for CkFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CkFunction")
            .field("label", &self.label)
            .field("max_order", &self.max_order)
            .field("decay", &self.decay)
            .field("support", &self.support)
            .finish()
    }
}

impl CkFunction {
    pub fn new<F>(label: impl Into<String>, max_order: usize, decay: Decay, support: Support, jet_fn: F) -> Self
    where
        F: Fn(f64, usize) -> Jet + Send + Sync + 'static,
    {
        let support = match (decay, support) {
            (Decay::Compact, None) => panic!("compactly supported function needs a support hint"),
            (_, s) => s,
        };
        Self {
            jet_fn: Arc::new(jet_fn),
            max_order,
            decay,
            support,
            label: label.into(),
            breakpoints: Arc::from(Vec::new()),
        }
    }

    /// Wrap a plain closure, taking derivatives by central differences.
    ///
    /// Accuracy degrades quickly with the order; prefer the analytic families.
    pub fn from_fn_finite_difference<F>(label: impl Into<String>, max_order: usize, decay: Decay, f: F) -> Self
    where
        F: Fn(f64) -> Complex64 + Send + Sync + 'static,
    {
        let label = label.into();
        log::warn!("function '{label}' uses finite-difference derivatives; expect reduced accuracy");
        let f = Arc::new(f);
        let support = match decay {
            Decay::Compact => panic!("finite-difference functions cannot declare compact support"),
            _ => None,
        };
        Self::new(label, max_order, decay, support, move |x, order| {
            let h = 1e-2 * x.abs().max(1.0);
            let coeffs = (0..=order)
                .map(|r| central_difference(&*f, x, r, h) / crate::jet::factorial(r))
                .collect();
            Jet::from_coeffs(coeffs)
        })
    }

    pub fn zero() -> Self {
        Self::new("0", MAX_ORDER, Decay::Compact, Some((0.0, 0.0)), |_, order| Jet::zero(order))
    }

    pub fn constant(value: Complex64) -> Self {
        Self::new(format!("{value}"), MAX_ORDER, Decay::Power(0.0), None, move |_, order| {
            Jet::constant(value, order)
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn with_breakpoints(mut self, mut points: Vec<f64>) -> Self {
        points.retain(|p| p.is_finite());
        points.sort_by(f64::total_cmp);
        points.dedup();
        self.breakpoints = Arc::from(points);
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    pub fn decay(&self) -> Decay {
        self.decay
    }

    pub fn support(&self) -> Support {
        self.support
    }

    /// Whether the function lies in the decaying algebra (compact support or
    /// power decay with negative exponent).
    pub fn in_algebra(&self) -> bool {
        match self.decay {
            Decay::Compact => true,
            Decay::Power(b) => b < 0.0,
        }
    }

    fn outside_support(&self, x: f64) -> bool {
        match self.support {
            Some((lo, hi)) => x < lo || x > hi,
            None => false,
        }
    }

    pub(crate) fn jet_raw(&self, x: f64, order: usize) -> Jet {
        if self.outside_support(x) {
            Jet::zero(order)
        } else {
            (self.jet_fn)(x, order)
        }
    }

    pub fn jet(&self, x: f64, order: usize) -> Result<Jet> {
        if order > self.max_order {
            return Err(Error::OrderExceeded {
                requested: order,
                available: self.max_order,
            });
        }
        Ok(self.jet_raw(x, order))
    }

    pub fn value(&self, x: f64) -> Complex64 {
        self.jet_raw(x, 0).value()
    }

    pub fn deriv(&self, r: usize, x: f64) -> Result<Complex64> {
        Ok(self.jet(x, r)?.derivative(r))
    }

    /// `f^(0..=order)(x)`.
    pub fn derivatives(&self, x: f64, order: usize) -> Result<Vec<Complex64>> {
        Ok(self.jet(x, order)?.derivatives())
    }

    pub fn add(&self, other: &CkFunction) -> CkFunction {
        let (f, g) = (self.clone(), other.clone());
        CkFunction::new(
            format!("({} + {})", self.label, other.label),
            self.max_order.min(other.max_order),
            self.decay.sum(other.decay),
            support_hull(self.support, other.support),
            move |x, order| &f.jet_raw(x, order) + &g.jet_raw(x, order),
        )
    }

    pub fn sub(&self, other: &CkFunction) -> CkFunction {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
            .with_label(format!("({} - {})", self.label, other.label))
    }

    pub fn mul(&self, other: &CkFunction) -> CkFunction {
        let support = support_intersection(self.support, other.support);
        if let Some((lo, hi)) = support {
            if lo > hi {
                return CkFunction::zero();
            }
        }
        let (f, g) = (self.clone(), other.clone());
        CkFunction::new(
            format!("({} * {})", self.label, other.label),
            self.max_order.min(other.max_order),
            self.decay.product(other.decay),
            support,
            move |x, order| &f.jet_raw(x, order) * &g.jet_raw(x, order),
        )
    }

    pub fn scale(&self, factor: Complex64) -> CkFunction {
        let f = self.clone();
        CkFunction::new(
            format!("{factor}*{}", self.label),
            self.max_order,
            self.decay,
            self.support,
            move |x, order| f.jet_raw(x, order).scale(factor),
        )
    }

    /// `x -> f(a x + b)` for `a != 0`.
    pub fn compose_affine(&self, a: f64, b: f64) -> CkFunction {
        assert!(a != 0.0, "affine composition needs a nonzero slope");
        let f = self.clone();
        let support = self.support.map(|(lo, hi)| {
            let (p, q) = ((lo - b) / a, (hi - b) / a);
            (p.min(q), p.max(q))
        });
        CkFunction::new(
            format!("{}({a}x + {b})", self.label),
            self.max_order,
            self.decay,
            support,
            move |x, order| f.jet_raw(a * x + b, order).chain_linear(a),
        )
    }
}

/// The `r`-th central difference with step `h`, accurate to `O(h^2)`.
fn central_difference(f: &dyn Fn(f64) -> Complex64, x: f64, r: usize, h: f64) -> Complex64 {
    if r == 0 {
        return f(x);
    }
    let mut acc = Complex64::new(0.0, 0.0);
    let mut binom = 1.0;
    for j in 0..=r {
        let offset = (r as f64 / 2.0 - j as f64) * h;
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        acc += f(x + offset) * (sign * binom);
        binom = binom * (r - j) as f64 / (j + 1) as f64;
    }
    acc / h.powi(r as i32)
}

/// The difference quotient `g_s(x) = (f(x) - f(s)) / (x - s)`, filled by
/// `f'(s)` at `x = s`.
///
/// Near `s` the quotient is evaluated through `g_s(x) = ∫_0^1 f'(s + θ(x - s)) dθ`
/// with Gauss-Legendre nodes, which keeps every derivative free of the
/// cancellation in the direct quotient.
pub fn difference_quotient(f: &CkFunction, s: f64) -> Result<CkFunction> {
    if f.max_order < 2 {
        return Err(Error::OrderExceeded {
            requested: 2,
            available: f.max_order,
        });
    }
    let fs = f.value(s);
    let (nodes, weights) = crate::quad1d::gauss_legendre_unit(24);
    let base = f.clone();
    let window = 0.25;
    let decay = match f.decay {
        Decay::Compact => Decay::Power(-1.0),
        Decay::Power(b) => Decay::Power(b.max(0.0) - 1.0),
    };
    Ok(CkFunction::new(
        format!("dq[{}]@{s}", f.label),
        f.max_order - 1,
        decay,
        None,
        move |x, order| {
            let dx = x - s;
            if dx.abs() > window {
                let num = base.jet_raw(x, order).add_scalar(-fs);
                let den = Jet::variable(dx, order);
                num.div(&den)
            } else {
                let mut coeffs = vec![Complex64::new(0.0, 0.0); order + 1];
                for (theta, w) in nodes.iter().zip(&weights) {
                    let jet = base.jet_raw(s + theta * dx, order + 1);
                    let mut power = 1.0;
                    for (k, c) in coeffs.iter_mut().enumerate() {
                        // jet of f' at p, scaled by θ^k through the chain rule
                        *c += jet.coeff(k + 1) * ((k + 1) as f64 * power * w);
                        power *= theta;
                    }
                }
                Jet::from_coeffs(coeffs)
            }
        },
    ))
}

/// A smooth function on `[0, ∞)` with one-sided derivatives at `0`.
#[derive(Clone, Debug)]
pub struct HalfLineFunction {
    inner: CkFunction,
}

impl HalfLineFunction {
    pub fn new<F>(label: impl Into<String>, max_order: usize, decay: Decay, jet_fn: F) -> Self
    where
        F: Fn(f64, usize) -> Jet + Send + Sync + 'static,
    {
        let support = match decay {
            Decay::Compact => panic!("use restrict() for compactly supported half-line functions"),
            _ => None,
        };
        Self {
            inner: CkFunction::new(label, max_order, decay, support, jet_fn),
        }
    }

    /// The restriction of a function on the line to `[0, ∞)`.
    pub fn restrict(f: &CkFunction) -> Self {
        Self { inner: f.clone() }
    }

    pub fn zero() -> Self {
        Self::restrict(&CkFunction::zero())
    }

    /// `s -> exp(-rate * s^power)`.
    pub fn exp_decay(rate: f64, power: u32) -> Self {
        Self::new(
            format!("exp(-{rate} s^{power})"),
            MAX_ORDER,
            Decay::Power(-1.0),
            move |x, order| Jet::variable(x, order).powi(power).scale(Complex64::new(-rate, 0.0)).exp(),
        )
    }

    /// `s -> (1 + s)^{-1}`.
    pub fn inverse_linear() -> Self {
        Self::new("1/(1+s)", MAX_ORDER, Decay::Power(-1.0), |x, order| {
            Jet::variable(x, order).add_scalar(Complex64::new(1.0, 0.0)).recip()
        })
    }

    pub fn label(&self) -> &str {
        self.inner.label()
    }

    pub fn max_order(&self) -> usize {
        self.inner.max_order()
    }

    pub fn decay(&self) -> Decay {
        self.inner.decay()
    }

    pub fn support(&self) -> Support {
        self.inner.support()
    }

    pub(crate) fn jet_raw(&self, x: f64, order: usize) -> Jet {
        self.inner.jet_raw(x, order)
    }

    pub(crate) fn as_line_function(&self) -> &CkFunction {
        &self.inner
    }

    pub fn jet(&self, x: f64, order: usize) -> Result<Jet> {
        if x < 0.0 {
            return Err(Error::OutsideDomain(x));
        }
        self.inner.jet(x, order)
    }

    pub fn value(&self, x: f64) -> Result<Complex64> {
        Ok(self.jet(x, 0)?.value())
    }

    pub fn deriv(&self, r: usize, x: f64) -> Result<Complex64> {
        Ok(self.jet(x, r)?.derivative(r))
    }

    pub fn add(&self, other: &HalfLineFunction) -> Self {
        Self {
            inner: self.inner.add(&other.inner),
        }
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self {
            inner: self.inner.scale(factor),
        }
    }
}
