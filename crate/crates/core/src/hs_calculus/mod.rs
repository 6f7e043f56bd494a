//! `f(H) = -(1/π) ∫∫ ∂̄f̃(z) (z - H)^{-1} dx dy` by refined midpoint quadrature,
//! plus the contour form for bounded operators and the semi-bounded calculus.

mod contour;
mod semibounded;

pub use contour::{char_one_check, hs_contour_apply, CharOneReport};
pub use semibounded::{heat_semigroup, semibounded_apply, SemiboundedResult};

use crate::almost_analytic::AlmostAnalytic;
use crate::error::{Error, Result};
use crate::function_algebra::{an_norm, japanese_bracket, CkFunction, ExtendedElement, GlueKernel, NormOptions};
use crate::operator_core::{fit_resolvent_bound, gershgorin_real_range, resolvent, BoundGrid, ComplexMatrix};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Discretization of the area integral.
///
/// Cells are midpoint cells in `(u, t)`, where `x = X(u)` maps `u ∈ (0, 1)`
/// onto the support of `f` (a linear map on a compact support, a tangent map
/// on an infinite one) and `y = <x> t` with `t ∈ (0, 2)` on both sides of the
/// axis, which is exactly the support of the cut-off. The support is split into
/// panels at the breakpoints of `f`, each with its own map. Level `ℓ` uses
/// `nx 2^ℓ` columns per panel and `2 ny 2^ℓ` rows.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuadratureSpec {
    pub nx: usize,
    pub ny: usize,
    /// Maximum number of levels (the coarsest is level 0).
    pub levels: usize,
    /// Target for the two-level Richardson estimate (Frobenius norm).
    pub tol: f64,
    /// Restrict the `x` integration to this window instead of the support.
    pub x_window: Option<(f64, f64)>,
    pub kernel: GlueKernel,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            nx: 32,
            ny: 16,
            levels: 6,
            tol: 1e-4,
            x_window: None,
            kernel: GlueKernel::Exp,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.nx < 4 || self.ny < 4 {
            return Err(Error::InvalidQuadrature(format!(
                "nx and ny must be at least 4 (got {} and {})",
                self.nx, self.ny
            )));
        }
        if self.levels < 2 {
            return Err(Error::InvalidQuadrature("at least two levels are needed for an error estimate".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidQuadrature(format!("tolerance must be positive, got {}", self.tol)));
        }
        if let Some((a, b)) = self.x_window {
            if !(a < b) || !a.is_finite() || !b.is_finite() {
                return Err(Error::InvalidQuadrature(format!("bad x window [{a}, {b}]")));
            }
        }
        Ok(())
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_levels(mut self, levels: usize) -> Self {
        self.levels = levels;
        self
    }

    pub fn with_kernel(mut self, kernel: GlueKernel) -> Self {
        self.kernel = kernel;
        self
    }
}

#[derive(Clone, Debug)]
pub struct CalculusResult {
    pub value: ComplexMatrix,
    /// Frobenius norm of the difference between the last two levels.
    pub error_estimate: f64,
    pub levels_used: usize,
    pub n_used: usize,
    pub converged: bool,
    /// Quadrature nodes at the finest level used.
    pub cells: usize,
}

impl CalculusResult {
    pub fn summary_line(&self) -> String {
        format!(
            "levels={} est={:.3e} n={} cells={}",
            self.levels_used, self.error_estimate, self.n_used, self.cells
        )
    }

    fn exact(value: ComplexMatrix, n_used: usize) -> Self {
        Self {
            value,
            error_estimate: 0.0,
            levels_used: 0,
            n_used,
            converged: true,
            cells: 0,
        }
    }
}

/// Map from `u ∈ (0, 1)` to the `x` integration range, with its Jacobian.
#[derive(Clone, Copy, Debug)]
enum XMap {
    Linear { lo: f64, hi: f64 },
    Upper { lo: f64, scale: f64 },
    Lower { hi: f64, scale: f64 },
    Full { center: f64, scale: f64 },
}

impl XMap {
    /// Panels covering the integration range, split at the function's breakpoints.
    fn panels(f: &CkFunction, h: &ComplexMatrix, window: Option<(f64, f64)>) -> Option<Vec<XMap>> {
        let (lo, hi) = match (window, f.support()) {
            (Some(w), _) => w,
            (None, Some((lo, hi))) if lo >= hi => return None,
            (None, Some(s)) => s,
            (None, None) => (f64::NEG_INFINITY, f64::INFINITY),
        };
        let mut edges = vec![lo];
        edges.extend(f.breakpoints().iter().copied().filter(|&p| p > lo && p < hi));
        edges.push(hi);
        let (glo, ghi) = gershgorin_real_range(h);
        let panels = edges
            .windows(2)
            .map(|e| match (e[0].is_finite(), e[1].is_finite()) {
                (true, true) => XMap::Linear { lo: e[0], hi: e[1] },
                (true, false) => XMap::Upper {
                    lo: e[0],
                    scale: (ghi - e[0]).max(1.0),
                },
                (false, true) => XMap::Lower {
                    hi: e[1],
                    scale: (e[1] - glo).max(1.0),
                },
                (false, false) => XMap::Full {
                    center: 0.5 * (glo + ghi),
                    scale: (0.5 * (ghi - glo)).max(1.0),
                },
            })
            .collect();
        Some(panels)
    }

    fn point(&self, u: f64) -> (f64, f64) {
        match *self {
            XMap::Linear { lo, hi } => (lo + (hi - lo) * u, hi - lo),
            XMap::Upper { lo, scale } => {
                let a = 0.5 * PI * u;
                (lo + scale * a.tan(), 0.5 * PI * scale / (a.cos() * a.cos()))
            }
            XMap::Lower { hi, scale } => {
                let a = 0.5 * PI * (1.0 - u);
                (hi - scale * a.tan(), 0.5 * PI * scale / (a.cos() * a.cos()))
            }
            XMap::Full { center, scale } => {
                let a = PI * (u - 0.5);
                (center + scale * a.tan(), PI * scale / (a.cos() * a.cos()))
            }
        }
    }
}

fn check_order(f: &CkFunction, n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InsufficientOrder {
            n,
            reason: "the Taylor order must exceed the resolvent growth exponent, which is at least 0".into(),
        });
    }
    if n + 1 > f.max_order() {
        return Err(Error::InsufficientOrder {
            n,
            reason: format!("needs {} derivatives, function provides {}", n + 1, f.max_order()),
        });
    }
    if !f.in_algebra() {
        return Err(Error::NotInAlgebra(f.label().to_string()));
    }
    Ok(())
}

/// Taylor order from the fitted resolvent bound: `ceil(α) + 2`.
pub fn auto_order(h: &ComplexMatrix) -> Result<usize> {
    let (lo, hi) = gershgorin_real_range(h);
    Ok(fit_resolvent_bound(h, &BoundGrid::around(lo, hi))?.recommended_order())
}

/// Area integral at one refinement level.
pub fn hs_apply_level(f: &CkFunction, h: &ComplexMatrix, n: usize, quad: &QuadratureSpec, level: usize) -> Result<ComplexMatrix> {
    check_order(f, n)?;
    let d = h.dim();
    let Some(panels) = XMap::panels(f, h, quad.x_window) else {
        return Ok(ComplexMatrix::zeros(d));
    };
    let aa = AlmostAnalytic::with_kernel(f.clone(), n, quad.kernel)?;
    let nx = quad.nx << level;
    let ny = quad.ny << level;
    let du = 1.0 / nx as f64;
    let dt = 2.0 / ny as f64;
    let columns: Vec<Option<ComplexMatrix>> = (0..nx * panels.len())
        .into_par_iter()
        .map(|i| {
            let (x, jac) = panels[i / nx].point(((i % nx) as f64 + 0.5) * du);
            let col = aa.column(x);
            if col.is_zero() {
                return Ok(None);
            }
            let bx = japanese_bracket(x);
            // -(1/π) dx dy = -(1/π) X'(u) <x> du dt
            let w = -jac * bx * du * dt / PI;
            let mut acc = ComplexMatrix::zeros(d);
            let mut any = false;
            for j in 0..ny {
                let t = (j as f64 + 0.5) * dt;
                for y in [bx * t, -bx * t] {
                    let g = col.dbar(y);
                    if g == Complex64::new(0.0, 0.0) {
                        continue;
                    }
                    let r = resolvent(h, Complex64::new(x, y))?;
                    acc.add_scaled(g * w, &r);
                    any = true;
                }
            }
            Ok(any.then_some(acc))
        })
        .collect::<Result<_>>()?;
    let mut total = ComplexMatrix::zeros(d);
    for c in columns.iter().flatten() {
        total.add_scaled(Complex64::new(1.0, 0.0), c);
    }
    Ok(total)
}

/// Refine level by level until two successive levels agree to `quad.tol`.
/// `cells_at` gives the node count of a level.
pub(crate) fn refine(
    quad: &QuadratureSpec,
    n_used: usize,
    cells_at: impl Fn(usize) -> usize,
    mut level_value: impl FnMut(usize) -> Result<ComplexMatrix>,
) -> Result<CalculusResult> {
    quad.validate()?;
    let mut prev = level_value(0)?;
    let mut estimate = f64::INFINITY;
    let mut level = 0;
    for l in 1..quad.levels {
        let next = level_value(l)?;
        estimate = (&next - &prev).frobenius();
        prev = next;
        level = l;
        if estimate <= quad.tol {
            break;
        }
    }
    let converged = estimate <= quad.tol;
    if !converged {
        log::warn!("quadrature estimate {estimate:.3e} above tolerance {:.3e} after {} levels", quad.tol, level + 1);
    }
    Ok(CalculusResult {
        value: prev,
        error_estimate: estimate,
        levels_used: level + 1,
        n_used,
        converged,
        cells: cells_at(level),
    })
}

/// `f(H)` from the area formula with Taylor order `n`.
pub fn hs_apply(f: &CkFunction, h: &ComplexMatrix, n: usize, quad: &QuadratureSpec) -> Result<CalculusResult> {
    check_order(f, n)?;
    quad.validate()?;
    let Some(panels) = XMap::panels(f, h, quad.x_window) else {
        return Ok(CalculusResult::exact(ComplexMatrix::zeros(h.dim()), n));
    };
    let cells_at = |level: usize| panels.len() * (quad.nx << level) * 2 * (quad.ny << level);
    refine(quad, n, cells_at, |level| hs_apply_level(f, h, n, quad, level))
}

/// `φ(H) = π_A(H) + π_C I`.
pub fn hs_apply_extended(phi: &ExtendedElement, h: &ComplexMatrix, n: usize, quad: &QuadratureSpec) -> Result<CalculusResult> {
    let mut result = hs_apply(&phi.function, h, n, quad)?;
    result.value.add_scaled(phi.scalar, &ComplexMatrix::identity(h.dim()));
    Ok(result)
}

/// Constant `c` with `‖f(H)‖₂ ≤ c ‖f‖_{n+1}` over a family of functions.
#[derive(Clone, Debug, Serialize)]
pub struct NormBoundFit {
    pub c: f64,
    /// `(label, ‖f(H)‖₂, ‖f‖_{n+1})` per function.
    pub rows: Vec<(String, f64, f64)>,
}

pub fn fit_norm_bound(family: &[CkFunction], h: &ComplexMatrix, n: usize, quad: &QuadratureSpec) -> Result<NormBoundFit> {
    let mut rows = Vec::with_capacity(family.len());
    for f in family {
        let fh = hs_apply(f, h, n, quad)?.value.norm2();
        let norm = an_norm(f, n + 1, NormOptions::default())?;
        rows.push((f.label().to_string(), fh, norm));
    }
    let c = rows
        .iter()
        .filter(|r| r.2 > 0.0)
        .map(|r| r.1 / r.2)
        .fold(0.0, f64::max);
    Ok(NormBoundFit { c, rows })
}
