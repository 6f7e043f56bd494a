use super::{hs_apply, CalculusResult, QuadratureSpec};
use crate::error::{Error, Result};
use crate::function_algebra::HalfLineFunction;
use crate::operator_core::ComplexMatrix;
use crate::seeley::{default_cutoff, seeley_coefficients, seeley_extend, SeeleyCoefficients};

#[derive(Clone, Debug)]
pub struct SemiboundedResult {
    /// `f(H)` for the extension with the given coefficients.
    pub result: CalculusResult,
    /// The same with truncation order `K + 2`, a different extension of `f⁺`.
    pub alternate: CalculusResult,
    /// `‖result - alternate‖_F`.
    pub extension_gap: f64,
}

/// `γ_H(f⁺) = F(H)` for the Seeley extension `F` of `f⁺`, for `H` with
/// spectrum in `enclosure ⊆ [0, ∞)`.
pub fn semibounded_apply(
    f: &HalfLineFunction,
    h: &ComplexMatrix,
    enclosure: (f64, f64),
    coeffs: &SeeleyCoefficients,
    n: usize,
    quad: &QuadratureSpec,
) -> Result<SemiboundedResult> {
    if !(enclosure.0 >= 0.0) {
        return Err(Error::SpectrumNotSemibounded);
    }
    if coeffs.k() < n + 1 {
        return Err(Error::InsufficientOrder {
            n,
            reason: format!("extension is only C^{} across 0", coeffs.k()),
        });
    }
    let phi = default_cutoff();
    let alt_coeffs = seeley_coefficients(coeffs.k() + 2)?;
    let result = hs_apply(&seeley_extend(f, coeffs, &phi)?, h, n, quad)?;
    let alternate = hs_apply(&seeley_extend(f, &alt_coeffs, &phi)?, h, n, quad)?;
    let extension_gap = (&result.value - &alternate.value).frobenius();
    Ok(SemiboundedResult {
        result,
        alternate,
        extension_gap,
    })
}

/// `γ_H(e^{-t s^p})` for `0 < t ≤ 1`, with Seeley order `n + 3`.
pub fn heat_semigroup(
    h: &ComplexMatrix,
    enclosure: (f64, f64),
    power: u32,
    t: f64,
    n: usize,
    quad: &QuadratureSpec,
) -> Result<SemiboundedResult> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::TimeOutOfRange(t));
    }
    let f = HalfLineFunction::exp_decay(t, power.max(1));
    semibounded_apply(&f, h, enclosure, &seeley_coefficients(n + 3)?, n, quad)
}
