//! Almost-analytic extensions `f̃(x, y) = (Σ_{r≤n} f^(r)(x)(iy)^r / r!) τ(x, y)`
//! and their `∂̄` derivatives.

use crate::error::{Error, Result};
use crate::function_algebra::{glue, japanese_bracket, CkFunction, GlueKernel};
use crate::jet::Jet;
use num_complex::Complex64;

/// Plateau profile `θ(t)`: 1 on `[0, 1]`, 0 on `[2, ∞)`. Returns `(θ, θ')`.
fn theta(kernel: GlueKernel, t: f64) -> (f64, f64) {
    if t <= 1.0 {
        return (1.0, 0.0);
    }
    if t >= 2.0 {
        return (0.0, 0.0);
    }
    let g = glue(kernel, &Jet::variable(t - 1.0, 1));
    (1.0 - g.value().re, -g.derivative(1).re)
}

/// `τ(x, y) = θ(|y| / <x>)` with the default glue kernel.
pub fn cutoff_tau(x: f64, y: f64) -> f64 {
    cutoff_tau_with(GlueKernel::Exp, x, y)
}

pub fn cutoff_tau_with(kernel: GlueKernel, x: f64, y: f64) -> f64 {
    theta(kernel, y.abs() / japanese_bracket(x)).0
}

/// `∂̄τ = ½ θ'(t) (-t x/<x>² + i sgn(y)/<x>)` with `t = |y|/<x>`.
fn dbar_tau(kernel: GlueKernel, x: f64, y: f64) -> (f64, Complex64) {
    let bx = japanese_bracket(x);
    let t = y.abs() / bx;
    let (th, dth) = theta(kernel, t);
    if dth == 0.0 {
        return (th, Complex64::new(0.0, 0.0));
    }
    let d = Complex64::new(-t * x / (bx * bx), y.signum() / bx);
    (th, 0.5 * dth * d)
}

#[derive(Clone, Debug)]
pub struct AlmostAnalytic {
    base: CkFunction,
    n: usize,
    kernel: GlueKernel,
}

impl AlmostAnalytic {
    /// Needs `n + 1` derivatives of the base function.
    pub fn new(base: CkFunction, n: usize) -> Result<Self> {
        Self::with_kernel(base, n, GlueKernel::Exp)
    }

    pub fn with_kernel(base: CkFunction, n: usize, kernel: GlueKernel) -> Result<Self> {
        if n + 1 > base.max_order() {
            return Err(Error::OrderExceeded {
                requested: n + 1,
                available: base.max_order(),
            });
        }
        Ok(Self { base, n, kernel })
    }

    pub fn base(&self) -> &CkFunction {
        &self.base
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn kernel(&self) -> GlueKernel {
        self.kernel
    }

    /// Derivative data at a fixed `x`, reusable across many `y`.
    pub fn column(&self, x: f64) -> Column {
        Column {
            x,
            coeffs: self.base.jet_raw(x, self.n + 1).coeffs().to_vec(),
            n: self.n,
            kernel: self.kernel,
        }
    }

    pub fn eval(&self, x: f64, y: f64) -> Complex64 {
        self.column(x).eval(y)
    }

    pub fn dbar(&self, x: f64, y: f64) -> Complex64 {
        self.column(x).dbar(y)
    }
}

/// Taylor data of the base function at one abscissa.
#[derive(Clone, Debug)]
pub struct Column {
    x: f64,
    /// `f^(r)(x) / r!` for `r = 0..=n+1`.
    coeffs: Vec<Complex64>,
    n: usize,
    kernel: GlueKernel,
}

impl Column {
    pub fn x(&self) -> f64 {
        self.x
    }

    /// Whether the base function and all derivatives used vanish here.
    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == Complex64::new(0.0, 0.0))
    }

    fn taylor(&self, y: f64) -> Complex64 {
        let iy = Complex64::new(0.0, y);
        self.coeffs[..=self.n].iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * iy + c)
    }

    pub fn eval(&self, y: f64) -> Complex64 {
        let tau = cutoff_tau_with(self.kernel, self.x, y);
        if tau == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        self.taylor(y) * tau
    }

    pub fn dbar(&self, y: f64) -> Complex64 {
        let (tau, dtau) = dbar_tau(self.kernel, self.x, y);
        if tau == 0.0 && dtau.norm() == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let n = self.n;
        // f^(n+1)/n! = (n+1) * coeffs[n+1]
        let top = 0.5 * (n + 1) as f64 * self.coeffs[n + 1] * Complex64::new(0.0, y).powu(n as u32);
        let mut out = top * tau;
        if dtau.norm() != 0.0 {
            out += self.taylor(y) * dtau;
        }
        out
    }
}

pub fn aa_eval(f: &AlmostAnalytic, x: f64, y: f64) -> Complex64 {
    f.eval(x, y)
}

pub fn aa_dbar(f: &AlmostAnalytic, x: f64, y: f64) -> Complex64 {
    f.dbar(x, y)
}
