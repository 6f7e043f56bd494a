use super::ComplexMatrix;
use crate::error::{Error, Result};
use crate::function_algebra::{CkFunction, ExtendedElement};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// How the eigenbasis of a test operator is chosen.
#[derive(Clone, Debug)]
pub enum Conditioner {
    /// Haar-like random unitary; the operator is normal.
    Unitary { seed: u64 },
    /// `U diag(σ) V` with random unitaries and singular values spaced
    /// geometrically from 1 down to `delta`, so `κ(P) = 1/delta`.
    JordanLike { delta: f64, seed: u64 },
    Given(ComplexMatrix),
}

/// `H = P diag(λ) P^{-1}` with the spectrum known by construction.
#[derive(Clone, Debug)]
pub struct TestOperator {
    p: ComplexMatrix,
    p_inv: ComplexMatrix,
    eigs: Vec<f64>,
    h: ComplexMatrix,
}

fn random_unitary(d: usize, rng: &mut ChaCha8Rng) -> DMatrix<Complex64> {
    let g = DMatrix::from_fn(d, d, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex64::new(re, im)
    });
    let qr = g.qr();
    let (q, r) = (qr.q(), qr.r());
    // fix the column phases so the distribution does not depend on the QR convention
    let phases = DMatrix::from_fn(d, d, |i, j| {
        if i == j {
            let rii = r[(i, i)];
            if rii.norm() > 0.0 {
                rii / rii.norm()
            } else {
                Complex64::new(1.0, 0.0)
            }
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    q * phases
}

pub fn make_test_operator(eigs: &[f64], conditioner: Conditioner) -> Result<TestOperator> {
    if eigs.is_empty() || eigs.iter().any(|e| !e.is_finite()) {
        return Err(Error::InvalidSpectrum);
    }
    let d = eigs.len();
    let (p, p_inv) = match conditioner {
        Conditioner::Unitary { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let u = random_unitary(d, &mut rng);
            let u_inv = u.adjoint();
            (u, u_inv)
        }
        Conditioner::JordanLike { delta, seed } => {
            if !(delta > 0.0 && delta <= 1.0) {
                return Err(Error::SingularConditioner);
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let u = random_unitary(d, &mut rng);
            let v = random_unitary(d, &mut rng);
            let sigma: Vec<f64> = (0..d)
                .map(|k| if d == 1 { 1.0 } else { delta.powf(k as f64 / (d - 1) as f64) })
                .collect();
            let s = DMatrix::from_fn(d, d, |i, j| if i == j { Complex64::new(sigma[i], 0.0) } else { Complex64::new(0.0, 0.0) });
            let s_inv =
                DMatrix::from_fn(d, d, |i, j| if i == j { Complex64::new(1.0 / sigma[i], 0.0) } else { Complex64::new(0.0, 0.0) });
            (&u * s * &v, v.adjoint() * s_inv * u.adjoint())
        }
        Conditioner::Given(p) => {
            if p.dim() != d {
                return Err(Error::DimensionMismatch(format!(
                    "conditioner has dimension {}, spectrum has {d} entries",
                    p.dim()
                )));
            }
            let p_inv = p.inverse().ok_or(Error::SingularConditioner)?;
            (p.as_nalgebra().clone(), p_inv.as_nalgebra().clone())
        }
    };
    let p = ComplexMatrix::from_nalgebra(p);
    let p_inv = ComplexMatrix::from_nalgebra(p_inv);
    let defect = (&(&p * &p_inv) - &ComplexMatrix::identity(d)).frobenius();
    if !(defect <= 1e-12 * d as f64) {
        return Err(Error::SingularConditioner);
    }
    let h = &(&p * &ComplexMatrix::from_real_diag(eigs)) * &p_inv;
    Ok(TestOperator {
        p,
        p_inv,
        eigs: eigs.to_vec(),
        h,
    })
}

impl TestOperator {
    pub fn h(&self) -> &ComplexMatrix {
        &self.h
    }

    pub fn p(&self) -> &ComplexMatrix {
        &self.p
    }

    pub fn p_inv(&self) -> &ComplexMatrix {
        &self.p_inv
    }

    pub fn eigs(&self) -> &[f64] {
        &self.eigs
    }

    pub fn dim(&self) -> usize {
        self.eigs.len()
    }

    /// Smallest interval containing the spectrum.
    pub fn spectral_range(&self) -> (f64, f64) {
        let lo = self.eigs.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.eigs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    }

    /// `κ(P) = ‖P‖₂ ‖P^{-1}‖₂`.
    pub fn kappa(&self) -> f64 {
        self.p.norm2() * self.p_inv.norm2()
    }

    /// `P diag(f(λ)) P^{-1}`.
    pub fn oracle_apply(&self, f: &CkFunction) -> ComplexMatrix {
        self.oracle_apply_with(|x| f.value(x))
    }

    pub fn oracle_apply_extended(&self, phi: &ExtendedElement) -> ComplexMatrix {
        self.oracle_apply_with(|x| phi.eval(x))
    }

    pub fn oracle_apply_with(&self, f: impl Fn(f64) -> Complex64) -> ComplexMatrix {
        let values: Vec<Complex64> = self.eigs.iter().map(|&x| f(x)).collect();
        &(&self.p * &ComplexMatrix::from_diag(&values)) * &self.p_inv
    }

    /// Unit eigenvector for the `i`-th eigenvalue (a column of `P`).
    pub fn eigvec(&self, i: usize) -> Vec<Complex64> {
        let col = self.p.column(i);
        let norm = col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        col.iter().map(|z| z / norm).collect()
    }

    /// `P^{-1} M P`: diagonal exactly when `M` is a function of `H`.
    pub fn to_eigenbasis(&self, m: &ComplexMatrix) -> ComplexMatrix {
        &(&self.p_inv * m) * &self.p
    }
}
