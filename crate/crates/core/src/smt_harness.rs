//! Spectral mapping checks against operators with a known eigenbasis, the
//! approximate-eigenvector identity, the bounded-operator exclusion
//! construction and refinement studies.

use crate::error::{Error, Result};
use crate::function_algebra::{
    approx_char, bracket_power, bump, difference_quotient, rejoin_avoiding, resolvent_kernel, CkFunction, Decay,
    ExtendedElement,
};
use crate::hs_calculus::{hs_apply, hs_apply_extended, hs_apply_level, QuadratureSpec};
use crate::jet::Jet;
use crate::operator_core::{make_test_operator, ComplexMatrix, Conditioner, TestOperator};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use std::io::Write;
use std::time::Instant;

const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SmtReport {
    pub operator_id: String,
    pub function_id: String,
    /// Certified distance of `σ(φ(H))` from `φ(σ(H)) ∪ {π_C}`: the largest
    /// Gershgorin disc of `Δ = P⁻¹ φ(H) P` measured from that set.
    pub forward_defect: f64,
    /// `max_i |Δ_ii - φ(λ_i)|`.
    pub reverse_defect: f64,
    /// `‖Δ - diag(Δ)‖_F`.
    pub offdiag_norm: f64,
    pub quad_estimate: f64,
    pub kappa: f64,
}

impl SmtReport {
    /// Both defects within `factor · tol · κ(P)`.
    pub fn within(&self, factor: f64, tol: f64) -> bool {
        let bound = factor * tol * self.kappa;
        self.offdiag_norm <= bound && self.reverse_defect <= bound
    }
}

fn dist_to_set(z: Complex64, set: &[Complex64]) -> f64 {
    set.iter().map(|w| (z - w).norm()).fold(f64::INFINITY, f64::min)
}

/// Compute `φ(H)` by the area formula and compare it with `φ` on the spectrum
/// in the eigenbasis of `T`.
pub fn verify_spectral_mapping(phi: &ExtendedElement, t: &TestOperator, n: usize, quad: &QuadratureSpec) -> Result<SmtReport> {
    let m = hs_apply_extended(phi, t.h(), n, quad)?;
    let delta = t.to_eigenbasis(&m.value);
    let d = t.dim();
    let images: Vec<Complex64> = t.eigs().iter().map(|&x| phi.eval(x)).collect();
    let mut targets = images.clone();
    targets.push(phi.scalar);

    let mut offdiag = 0.0;
    let mut reverse = 0.0f64;
    let mut forward = 0.0f64;
    for i in 0..d {
        let mut radius = 0.0;
        for j in 0..d {
            if i != j {
                let e = delta.get(i, j).norm();
                offdiag += e * e;
                radius += e;
            }
        }
        let dii = delta.get(i, i);
        reverse = reverse.max((dii - images[i]).norm());
        forward = forward.max(dist_to_set(dii, &targets) + radius);
    }
    Ok(SmtReport {
        operator_id: format!("d={d}"),
        function_id: format!("({}, {})", phi.scalar, phi.function.label()),
        forward_defect: forward,
        reverse_defect: reverse,
        offdiag_norm: offdiag.sqrt(),
        quad_estimate: m.error_estimate,
        kappa: t.kappa(),
    })
}

/// One `(φ, T)` pair of a batch.
#[derive(Clone, Debug)]
pub struct SmtCase {
    pub operator_id: String,
    pub function_id: String,
    pub phi: ExtendedElement,
    pub operator: TestOperator,
}

#[derive(Clone, Debug, Serialize)]
pub struct BatchSummary {
    pub cases: usize,
    pub failures: usize,
    /// Largest `max(offdiag, reverse) / (tol κ)` over the batch.
    pub worst_scaled_defect: f64,
}

/// Run every case in parallel. Reports come back in input order, so the
/// summary does not depend on scheduling.
pub fn run_batch(cases: &[SmtCase], n: usize, quad: &QuadratureSpec, factor: f64) -> Result<(Vec<SmtReport>, BatchSummary)> {
    let reports: Vec<SmtReport> = cases
        .par_iter()
        .map(|c| {
            let mut r = verify_spectral_mapping(&c.phi, &c.operator, n, quad)?;
            r.operator_id = c.operator_id.clone();
            r.function_id = c.function_id.clone();
            Ok(r)
        })
        .collect::<Result<_>>()?;
    let failures = reports.iter().filter(|r| !r.within(factor, quad.tol)).count();
    let worst_scaled_defect = reports
        .iter()
        .map(|r| r.offdiag_norm.max(r.reverse_defect) / (quad.tol * r.kappa))
        .fold(0.0, f64::max);
    let summary = BatchSummary {
        cases: reports.len(),
        failures,
        worst_scaled_defect,
    };
    Ok((reports, summary))
}

/// Test operators used by the default suite: normal and non-normal, sizes 1 to 8.
pub fn standard_operators() -> Result<Vec<(String, TestOperator)>> {
    let specs: [(&str, Vec<f64>, Conditioner); 6] = [
        ("scalar0", vec![0.0], Conditioner::Unitary { seed: 1 }),
        ("diag12", vec![1.0, 2.0], Conditioner::Unitary { seed: 2 }),
        ("unitary3", vec![0.0, 1.0, 3.0], Conditioner::Unitary { seed: 3 }),
        ("jordan4", vec![0.0, 0.5, 1.5, 2.5], Conditioner::JordanLike { delta: 0.2, seed: 4 }),
        ("jordan3", vec![-0.5, 0.5, 1.0], Conditioner::JordanLike { delta: 0.1, seed: 5 }),
        (
            "unitary8",
            vec![-1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 2.0, 2.5],
            Conditioner::Unitary { seed: 6 },
        ),
    ];
    specs
        .into_iter()
        .map(|(id, eigs, cond)| Ok((id.to_string(), make_test_operator(&eigs, cond)?)))
        .collect()
}

/// Functions of the default suite, including one element with a nonzero scalar part.
pub fn standard_functions() -> Result<Vec<(String, ExtendedElement)>> {
    let f = |id: &str, g: CkFunction| (id.to_string(), ExtendedElement::from_function(g));
    Ok(vec![
        f("resolvent_i", resolvent_kernel(I)?),
        f("lorentzian", bracket_power(-2.0)),
        f("bracket_-1", bracket_power(-1.0)),
        f("bump", bump(-1.0, 3.0)?),
        f("char", approx_char(-1.0, 3.0, 0.25)?),
        (
            "one_minus_lorentzian".to_string(),
            ExtendedElement::new(ONE, bracket_power(-2.0).scale(-ONE)),
        ),
    ])
}

/// Every (function, operator) pair of the default suite.
pub fn standard_cases() -> Result<Vec<SmtCase>> {
    let ops = standard_operators()?;
    let fns = standard_functions()?;
    Ok(fns
        .iter()
        .flat_map(|(fid, phi)| {
            ops.iter().map(move |(oid, t)| SmtCase {
                operator_id: oid.clone(),
                function_id: fid.clone(),
                phi: phi.clone(),
                operator: t.clone(),
            })
        })
        .collect())
}

#[derive(Clone, Debug, Serialize)]
pub struct EigvecResidual {
    /// `‖f(H)v - f(s)v‖`.
    pub direct: f64,
    /// `‖g_s(H) k_s(H) (H+i) v‖`.
    pub factorized: f64,
    /// `‖(f(H) - f(s))v - g_s(H) k_s(H) (H+i) v‖`.
    pub agreement: f64,
    /// Quadrature estimates propagated through both paths.
    pub estimate: f64,
    pub kappa: f64,
}

fn vec_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Residual of `f(H)` on the unit eigenvector for `s`, computed directly and
/// through `(f(H) - f(s))(H+i)^{-1} = g_s(H) k_s(H)` with `g_s` the difference
/// quotient and `k_s = (1, -(s+i)/(x+i))`.
pub fn approx_eigvec_residual(
    f: &CkFunction,
    t: &TestOperator,
    s: f64,
    n: usize,
    quad: &QuadratureSpec,
) -> Result<EigvecResidual> {
    let idx = t
        .eigs()
        .iter()
        .position(|&x| (x - s).abs() <= 1e-12 * (1.0 + s.abs()))
        .ok_or(Error::NotAnEigenvalue(s))?;
    let v = t.eigvec(idx);
    let h = t.h();
    let fs = f.value(s);

    let fh = hs_apply(f, h, n, quad)?;
    let direct_vec: Vec<Complex64> = fh.value.mul_vec(&v).iter().zip(&v).map(|(a, b)| a - fs * b).collect();

    let gs = hs_apply(&difference_quotient(f, s)?, h, n, quad)?;
    // -(s+i)/(x+i) = (s+i) g_{-i}(x)
    let k = ExtendedElement::new(ONE, resolvent_kernel(-I)?.scale(Complex64::new(s, 1.0)));
    let ks = hs_apply_extended(&k, h, n, quad)?;
    let mut shifted = h.clone();
    shifted.add_scaled(I, &ComplexMatrix::identity(t.dim()));
    let hv = shifted.mul_vec(&v);
    let fact_vec = gs.value.mul_vec(&ks.value.mul_vec(&hv));

    let diff: Vec<Complex64> = direct_vec.iter().zip(&fact_vec).map(|(a, b)| a - b).collect();
    let hv_norm = vec_norm(&hv);
    let estimate =
        fh.error_estimate + (gs.error_estimate * ks.value.norm2() + gs.value.norm2() * ks.error_estimate) * hv_norm;
    Ok(EigvecResidual {
        direct: vec_norm(&direct_vec),
        factorized: vec_norm(&fact_vec),
        agreement: vec_norm(&diff),
        estimate,
        kappa: t.kappa(),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceRow {
    pub level: usize,
    pub nx: usize,
    pub ny: usize,
    /// `‖V_ℓ - oracle‖_F`.
    pub error: f64,
    /// `‖V_ℓ - V_{ℓ-1}‖_F`, absent at the coarsest level.
    pub estimate: Option<f64>,
    pub wall_time_s: f64,
}

/// Error against the exact oracle at each refinement level.
pub fn convergence_table(
    f: &CkFunction,
    t: &TestOperator,
    n: usize,
    quad: &QuadratureSpec,
    levels: usize,
) -> Result<Vec<ConvergenceRow>> {
    if levels < 3 {
        return Err(Error::InvalidQuadrature(format!("a convergence study needs at least 3 levels, got {levels}")));
    }
    quad.validate()?;
    let oracle = t.oracle_apply(f);
    let mut rows = Vec::with_capacity(levels);
    let mut prev: Option<ComplexMatrix> = None;
    for level in 0..levels {
        let start = Instant::now();
        let v = hs_apply_level(f, t.h(), n, quad, level)?;
        let wall_time_s = start.elapsed().as_secs_f64();
        rows.push(ConvergenceRow {
            level,
            nx: quad.nx << level,
            ny: quad.ny << level,
            error: (&v - &oracle).frobenius(),
            estimate: prev.as_ref().map(|p| (&v - p).frobenius()),
            wall_time_s,
        });
        prev = Some(v);
    }
    Ok(rows)
}

/// `error_{ℓ-1} / error_ℓ` for consecutive rows.
pub fn error_ratios(rows: &[ConvergenceRow]) -> Vec<f64> {
    rows.windows(2).map(|w| w[0].error / w[1].error).collect()
}

pub fn write_csv<T: Serialize>(rows: &[T], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(|e| Error::Io(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Debug, Serialize)]
pub struct ExclusionReport {
    /// Margin around the spectrum: `[l', u'] = [l - ε/2, u + ε/2]`.
    pub eps: f64,
    /// Intervals in `[l', u']` on which `π_A φ` was rejoined away from 0.
    pub intervals: Vec<(f64, f64)>,
    /// `‖(φ(H) - π_C) g(H) - I‖_F`.
    pub residual: f64,
    /// `‖(π_C - φ(H)) g(H) - I‖_F`, the identity with the opposite sign.
    pub opposite_sign_residual: f64,
    pub estimate: f64,
    pub kappa: f64,
}

const EXCLUSION_SCAN: usize = 4000;

/// Build `g` with `π_A(H) g(H) = I` when `φ ≠ π_C` on the spectrum of a bounded
/// `T`: rejoin `π_A` away from 0 around its zeros in `[l', u']`, take
/// `g = χ_{[l',u'],ε/2} / f` and check the product.
pub fn bounded_exclusion_check(
    phi: &ExtendedElement,
    t: &TestOperator,
    n: usize,
    quad: &QuadratureSpec,
) -> Result<ExclusionReport> {
    let pa = &phi.function;
    let (l, u) = t.spectral_range();
    let floor = t.eigs().iter().map(|&x| pa.value(x).norm()).fold(f64::INFINITY, f64::min);
    if !(floor > 0.0) {
        return Err(Error::ValueAttained(phi.scalar));
    }
    let thr = 0.5 * floor;
    let clear = |a: f64, b: f64| (0..=64).all(|k| pa.value(a + (b - a) * k as f64 / 64.0).norm() >= thr);

    let mut eps = 1.0;
    while !(clear(l - eps, l) && clear(u, u + eps)) {
        eps *= 0.5;
        if eps < 1e-6 {
            return Err(Error::RejoinFailed(phi.scalar));
        }
    }
    let (lp, up) = (l - 0.5 * eps, u + 0.5 * eps);

    // zero set of π_A in [l', u'], padded to the neighbouring clear samples
    let step = (up - lp) / EXCLUSION_SCAN as f64;
    let small: Vec<bool> = (0..=EXCLUSION_SCAN)
        .map(|k| pa.value(lp + step * k as f64).norm() < thr)
        .collect();
    let mut intervals = Vec::new();
    let mut k = 0;
    while k <= EXCLUSION_SCAN {
        if small[k] {
            let start = k;
            while k <= EXCLUSION_SCAN && small[k] {
                k += 1;
            }
            let (a, b) = (lp + step * (start - 1) as f64, lp + step * k as f64);
            if t.eigs().iter().any(|&x| x >= a && x <= b) {
                return Err(Error::RejoinFailed(phi.scalar));
            }
            // widen to most of the gap between the neighbouring obstacles so
            // the blend stays gentle
            let left = t.eigs().iter().copied().filter(|&x| x < a).fold(lp, f64::max);
            let right = t.eigs().iter().copied().filter(|&x| x > b).fold(up, f64::min);
            let wa = a.min(left + 0.2 * (right - left));
            let wb = b.max(right - 0.2 * (right - left));
            let (a, b) = if clear(wa, a) && clear(b, wb) { (wa, wb) } else { (a, b) };
            intervals.push((a, b));
        }
        k += 1;
    }

    let mut f = pa.clone();
    for &iv in &intervals {
        f = rejoin_avoiding(&f, iv, Complex64::new(0.0, 0.0))?.function;
    }
    let chi = approx_char(lp, up, 0.5 * eps)?;
    let (lo, hi) = (lp - 0.5 * eps, up + 0.5 * eps);
    let fc = f.clone();
    let g = CkFunction::new(
        "chi/f",
        f.max_order().min(chi.max_order()),
        Decay::Compact,
        Some((lo, hi)),
        move |x, order| {
            if x <= lo || x >= hi {
                return Jet::zero(order);
            }
            &chi.jet_raw(x, order) * &fc.jet_raw(x, order).recip()
        },
    )
    .with_breakpoints(f.breakpoints().iter().copied().chain([lp, up]).collect());

    let a = hs_apply(pa, t.h(), n, quad)?;
    let gh = hs_apply(&g, t.h(), n, quad)?;
    let eye = ComplexMatrix::identity(t.dim());
    let prod = &a.value * &gh.value;
    let residual = (&prod - &eye).frobenius();
    let opposite_sign_residual = (&prod.scale(-ONE) - &eye).frobenius();
    let estimate = a.error_estimate * gh.value.norm2() + a.value.norm2() * gh.error_estimate;
    Ok(ExclusionReport {
        eps,
        intervals,
        residual,
        opposite_sign_residual,
        estimate,
        kappa: t.kappa(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function_algebra::polynomial;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn diag01() -> TestOperator {
        make_test_operator(&[0.0, 1.0], Conditioner::Unitary { seed: 0 }).unwrap()
    }

    #[test]
    fn resolvent_kernel_maps_spectrum() {
        let phi = ExtendedElement::from_function(resolvent_kernel(I).unwrap());
        let q = QuadratureSpec::default();
        let r = verify_spectral_mapping(&phi, &diag01(), 2, &q).unwrap();
        assert!(r.within(1.0, q.tol), "{r:?}");
        assert!(r.forward_defect <= 10.0 * q.tol * r.kappa);
    }

    #[test]
    fn constant_element_is_exact() {
        let t = make_test_operator(&[0.0, 1.0, 2.5], Conditioner::JordanLike { delta: 0.2, seed: 3 }).unwrap();
        let r = verify_spectral_mapping(&ExtendedElement::scalar(ONE), &t, 2, &QuadratureSpec::default()).unwrap();
        assert!(r.offdiag_norm < 1e-12 && r.reverse_defect < 1e-12 && r.forward_defect < 1e-12, "{r:?}");
    }

    #[test]
    fn disjoint_bump_maps_to_zero() {
        let phi = ExtendedElement::from_function(bump(3.0, 4.0).unwrap());
        let q = QuadratureSpec::default();
        let r = verify_spectral_mapping(&phi, &diag01(), 2, &q).unwrap();
        assert!(r.within(1.0, q.tol), "{r:?}");
    }

    #[test]
    fn batch_is_order_independent() {
        let q = QuadratureSpec::default().with_levels(4).with_tol(1e-3);
        let mk = |id: &str, f: CkFunction| SmtCase {
            operator_id: "u".into(),
            function_id: id.into(),
            phi: ExtendedElement::from_function(f),
            operator: diag01(),
        };
        let cases = vec![mk("a", bracket_power(-2.0)), mk("b", bracket_power(-1.0))];
        let (r1, s1) = run_batch(&cases, 2, &q, 10.0).unwrap();
        let rev: Vec<SmtCase> = cases.iter().rev().cloned().collect();
        let (r2, s2) = run_batch(&rev, 2, &q, 10.0).unwrap();
        assert_eq!(r1[0].function_id, "a");
        assert_eq!(r1[0], r2[1]);
        assert_eq!(s1.failures, s2.failures);
        assert_eq!(s1.worst_scaled_defect, s2.worst_scaled_defect);
    }

    #[test]
    fn eigvec_paths_agree() {
        let t = make_test_operator(&[0.0, 1.0], Conditioner::JordanLike { delta: 0.5, seed: 2 }).unwrap();
        let q = QuadratureSpec::default();
        let r = approx_eigvec_residual(&bracket_power(-2.0), &t, 1.0, 2, &q).unwrap();
        assert!(r.direct <= q.tol * r.kappa, "{r:?}");
        assert!(r.agreement <= 3.0 * r.estimate.max(q.tol), "{r:?}");
        assert!(matches!(
            approx_eigvec_residual(&bracket_power(-2.0), &t, 0.5, 2, &q),
            Err(Error::NotAnEigenvalue(_))
        ));
    }

    #[test]
    fn convergence_rows() {
        let t = diag01();
        let q = QuadratureSpec::default();
        let rows = convergence_table(&CkFunction::zero(), &t, 2, &q, 3).unwrap();
        assert!(rows.iter().all(|r| r.error == 0.0));
        assert!(rows[0].estimate.is_none() && rows[1].estimate.is_some());
        assert!(matches!(convergence_table(&CkFunction::zero(), &t, 2, &q, 2), Err(Error::InvalidQuadrature(_))));
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("level,nx,ny,error,estimate,wall_time_s\n"), "{text}");
        assert_eq!(text.lines().count(), 4);
    }

    #[test]
    fn exclusion_across_a_zero() {
        // π_A(x) = (x - 1.5)/(1 + x²) vanishes between the eigenvalues 1 and 2
        let f = polynomial(&[c(-1.5, 0.0), ONE]).mul(&bracket_power(-2.0));
        let phi = ExtendedElement::new(c(2.0, 0.0), f);
        let t = make_test_operator(&[1.0, 2.0], Conditioner::Unitary { seed: 4 }).unwrap();
        let q = QuadratureSpec::default();
        let r = bounded_exclusion_check(&phi, &t, 2, &q).unwrap();
        assert_eq!(r.intervals.len(), 1);
        assert!(r.intervals[0].0 < 1.5 && r.intervals[0].1 > 1.5);
        assert!(r.residual <= 10.0 * q.tol * r.kappa, "{r:?}");
        assert!((r.opposite_sign_residual - 2.0 * 2f64.sqrt()).abs() < 1e-2, "{r:?}");
    }

    #[test]
    fn exclusion_rejects_attained_value() {
        let f = polynomial(&[c(-1.0, 0.0), ONE]).mul(&bracket_power(-2.0));
        let t = make_test_operator(&[1.0, 2.0], Conditioner::Unitary { seed: 4 }).unwrap();
        let r = bounded_exclusion_check(&ExtendedElement::from_function(f), &t, 2, &QuadratureSpec::default());
        assert!(matches!(r, Err(Error::ValueAttained(_))));
    }
}
