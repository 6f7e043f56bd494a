use super::{resolvent, ComplexMatrix};
use crate::error::{Error, Result};
use crate::function_algebra::japanese_bracket_c;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

/// Sample points for the resolvent bound: `Re z` uniform on `[re_lo, re_hi]`,
/// `|Im z|` log-spaced on `[im_min, im_max]`, both half-planes.
#[derive(Clone, Copy, Debug)]
pub struct BoundGrid {
    pub re_lo: f64,
    pub re_hi: f64,
    pub n_re: usize,
    pub im_min: f64,
    pub im_max: f64,
    pub n_im: usize,
}

impl BoundGrid {
    /// Default grid for a spectrum inside `[lo, hi]`.
    pub fn around(lo: f64, hi: f64) -> Self {
        Self {
            re_lo: lo - 10.0,
            re_hi: hi + 10.0,
            n_re: 41,
            im_min: 1e-3,
            im_max: 1e2,
            n_im: 21,
        }
    }

    pub fn points(&self) -> Result<Vec<Complex64>> {
        if !(self.im_min > 0.0) || !(self.im_max >= self.im_min) || self.n_re == 0 || self.n_im == 0 {
            return Err(Error::GridTouchesAxis);
        }
        let mut pts = Vec::with_capacity(2 * self.n_re * self.n_im);
        let (l0, l1) = (self.im_min.ln(), self.im_max.ln());
        for i in 0..self.n_re {
            let x = if self.n_re == 1 {
                0.5 * (self.re_lo + self.re_hi)
            } else {
                self.re_lo + (self.re_hi - self.re_lo) * i as f64 / (self.n_re - 1) as f64
            };
            for j in 0..self.n_im {
                let y = if self.n_im == 1 {
                    self.im_min
                } else {
                    (l0 + (l1 - l0) * j as f64 / (self.n_im - 1) as f64).exp()
                };
                pts.push(Complex64::new(x, y));
                pts.push(Complex64::new(x, -y));
            }
        }
        Ok(pts)
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct BoundSample {
    pub re: f64,
    pub im: f64,
    pub norm: f64,
    pub bound: f64,
}

/// Fitted constants of `‖(z-H)^{-1}‖ ≤ c |Im z|^{-1} (<z>/|Im z|)^α`.
#[derive(Clone, Debug, Serialize)]
pub struct ResolventBoundFit {
    pub c: f64,
    pub alpha: f64,
    pub samples: Vec<BoundSample>,
}

impl ResolventBoundFit {
    /// Worst ratio of observed norm to bound over the grid.
    pub fn max_ratio(&self) -> f64 {
        self.samples.iter().map(|s| s.norm / s.bound).fold(0.0, f64::max)
    }

    /// Taylor order recommended for this operator: `ceil(α) + 2`, reading
    /// slopes within 0.05 of an integer as that integer.
    pub fn recommended_order(&self) -> usize {
        (self.alpha - 0.05).max(0.0).ceil() as usize + 2
    }
}

/// Real interval containing every Gershgorin disc's real projection.
pub fn gershgorin_real_range(h: &ComplexMatrix) -> (f64, f64) {
    let d = h.dim();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..d {
        let center = h.get(i, i).re;
        let radius: f64 = (0..d).filter(|&j| j != i).map(|j| h.get(i, j).norm()).sum();
        lo = lo.min(center - radius);
        hi = hi.max(center + radius);
    }
    (lo, hi)
}

/// Number of samples nearest the axis used for each tail slope.
const TAIL: usize = 5;

fn ls_slope(pts: &[(f64, f64)]) -> f64 {
    let m = pts.len() as f64;
    let (mu, mv) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0 / m, a.1 + p.1 / m));
    let suu: f64 = pts.iter().map(|p| (p.0 - mu) * (p.0 - mu)).sum();
    let suv: f64 = pts.iter().map(|p| (p.0 - mu) * (p.1 - mv)).sum();
    if suu > 0.0 {
        suv / suu
    } else {
        0.0
    }
}

/// Fit the resolvent bound on a grid.
///
/// With `u = log(<z>/|Im z|)` and `v = log(‖R‖ |Im z|)`, `α` is the largest
/// least-squares slope of `v` against `u` over the samples nearest the axis
/// in each column `Re z = const` (one per half-plane), clipped at 0. `c` is
/// then the smallest constant making the bound hold at every sample.
pub fn fit_resolvent_bound(h: &ComplexMatrix, grid: &BoundGrid) -> Result<ResolventBoundFit> {
    let points = grid.points()?;
    let norms: Vec<(Complex64, f64)> = points
        .par_iter()
        .map(|&z| {
            let r = resolvent(h, z)?;
            Ok((z, r.norm2()))
        })
        .collect::<Result<_>>()?;

    let uv: Vec<(f64, f64)> = norms
        .iter()
        .map(|&(z, norm)| {
            let im = z.im.abs();
            ((japanese_bracket_c(z) / im).ln(), (norm * im).ln())
        })
        .collect();
    // points() emits each column as (+y, -y) pairs with |y| increasing
    let tail = TAIL.min(grid.n_im);
    let mut alpha = 0.0f64;
    for col in uv.chunks(2 * grid.n_im) {
        for sign in 0..2 {
            let pts: Vec<(f64, f64)> = col.iter().skip(sign).step_by(2).take(tail).copied().collect();
            alpha = alpha.max(ls_slope(&pts));
        }
    }
    let log_c = uv.iter().map(|(u, v)| v - alpha * u).fold(f64::NEG_INFINITY, f64::max);
    let c = log_c.exp();

    let samples = norms
        .iter()
        .map(|&(z, norm)| {
            let im = z.im.abs();
            BoundSample {
                re: z.re,
                im: z.im,
                norm,
                bound: c / im * (japanese_bracket_c(z) / im).powf(alpha),
            }
        })
        .collect();
    Ok(ResolventBoundFit { c, alpha, samples })
}
