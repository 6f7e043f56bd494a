//! Run configuration files (TOML) with `[function]`, `[operator]`, `[quad]`
//! and `[half_line]` sections.
//!
//! ```toml
//! n = "auto"
//!
//! [function]
//! kind = "bracket_power"
//! beta = -2.0
//! scalar = [1.0, 0.0]
//!
//! [operator]
//! kind = "factory"
//! eigs = [0.0, 1.0, 2.0]
//! conditioner = "jordan_like"
//! delta = 0.2
//! seed = 7
//!
//! [quad]
//! nx = 32
//! tol = 1e-4
//! ```

use crate::error::{Error, Result};
use crate::function_algebra::{
    approx_char, bracket_power, bump, custom_table, rational, resolvent_kernel, CkFunction, ExtendedElement,
    HalfLineFunction,
};
use crate::hs_calculus::{auto_order, QuadratureSpec};
use crate::operator_core::{gershgorin_real_range, make_test_operator, read_matrix, ComplexMatrix, Conditioner, TestOperator};
use num_complex::Complex64;
use serde::Deserialize;
use std::path::{Path, PathBuf};
use std::str::FromStr;

fn cx(v: [f64; 2]) -> Complex64 {
    Complex64::new(v[0], v[1])
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionKind {
    /// `Σ w_k / (z_k - x)`.
    Rational { poles: Vec<[f64; 2]>, weights: Vec<[f64; 2]> },
    /// `(z - x)^{-1}`.
    Resolvent { z: [f64; 2] },
    Bump { a: f64, b: f64 },
    Char { a: f64, b: f64, eps: f64 },
    BracketPower { beta: f64 },
    /// Smooth plateau interpolant of `values` at `x0 + k h`.
    CustomTable { x0: f64, h: f64, values: Vec<[f64; 2]> },
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
pub struct FunctionSpec {
    #[serde(flatten)]
    pub kind: FunctionKind,
    /// Scalar part of an element of the extended algebra.
    #[serde(default)]
    pub scalar: Option<[f64; 2]>,
}

impl FunctionSpec {
    pub fn build(&self) -> Result<CkFunction> {
        match &self.kind {
            FunctionKind::Rational { poles, weights } => {
                let p: Vec<Complex64> = poles.iter().copied().map(cx).collect();
                let w: Vec<Complex64> = weights.iter().copied().map(cx).collect();
                rational(&p, &w)
            }
            FunctionKind::Resolvent { z } => resolvent_kernel(cx(*z)),
            FunctionKind::Bump { a, b } => bump(*a, *b),
            FunctionKind::Char { a, b, eps } => approx_char(*a, *b, *eps),
            FunctionKind::BracketPower { beta } => Ok(bracket_power(*beta)),
            FunctionKind::CustomTable { x0, h, values } => {
                let v: Vec<Complex64> = values.iter().copied().map(cx).collect();
                custom_table(*x0, *h, &v)
            }
        }
    }

    pub fn build_extended(&self) -> Result<ExtendedElement> {
        let scalar = self.scalar.map_or(Complex64::new(0.0, 0.0), cx);
        Ok(ExtendedElement::new(scalar, self.build()?))
    }
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq, Default)]
#[serde(rename_all = "snake_case")]
pub enum ConditionerKind {
    #[default]
    Unitary,
    JordanLike,
    /// Eigenbasis read from `basis_file`.
    Given,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OperatorSpec {
    /// `P diag(eigs) P^{-1}` with a known eigenbasis.
    Factory {
        eigs: Vec<f64>,
        #[serde(default)]
        conditioner: ConditionerKind,
        #[serde(default = "default_delta")]
        delta: f64,
        #[serde(default)]
        seed: u64,
        #[serde(default)]
        basis_file: Option<PathBuf>,
    },
    /// A matrix in the text format, with an optional declared spectral enclosure.
    File {
        path: PathBuf,
        #[serde(default)]
        spectrum: Option<(f64, f64)>,
    },
    /// Row-major entries as `[re, im]` pairs.
    Inline {
        rows: Vec<Vec<[f64; 2]>>,
        #[serde(default)]
        spectrum: Option<(f64, f64)>,
    },
}

fn default_delta() -> f64 {
    0.1
}

/// An operator ready for use: always a matrix, plus the eigen-decomposition
/// when it is known by construction.
#[derive(Clone, Debug)]
pub struct BuiltOperator {
    pub h: ComplexMatrix,
    pub test: Option<TestOperator>,
    pub spectrum: Option<(f64, f64)>,
}

impl BuiltOperator {
    pub fn require_test(&self) -> Result<&TestOperator> {
        self.test
            .as_ref()
            .ok_or_else(|| Error::Config("this command needs a factory operator with a known spectrum".into()))
    }

    /// Declared enclosure, falling back to the Gershgorin interval.
    pub fn enclosure(&self) -> (f64, f64) {
        self.spectrum.unwrap_or_else(|| gershgorin_real_range(&self.h))
    }
}

impl OperatorSpec {
    /// Relative paths resolve against `base`.
    pub fn build(&self, base: &Path) -> Result<BuiltOperator> {
        match self {
            OperatorSpec::Factory {
                eigs,
                conditioner,
                delta,
                seed,
                basis_file,
            } => {
                let cond = match conditioner {
                    ConditionerKind::Unitary => Conditioner::Unitary { seed: *seed },
                    ConditionerKind::JordanLike => Conditioner::JordanLike {
                        delta: *delta,
                        seed: *seed,
                    },
                    ConditionerKind::Given => {
                        let path = basis_file
                            .as_ref()
                            .ok_or_else(|| Error::Config("conditioner 'given' needs basis_file".into()))?;
                        Conditioner::Given(read_matrix(&std::fs::read_to_string(base.join(path))?)?)
                    }
                };
                let t = make_test_operator(eigs, cond)?;
                Ok(BuiltOperator {
                    h: t.h().clone(),
                    spectrum: Some(t.spectral_range()),
                    test: Some(t),
                })
            }
            OperatorSpec::File { path, spectrum } => Ok(BuiltOperator {
                h: read_matrix(&std::fs::read_to_string(base.join(path))?)?,
                test: None,
                spectrum: *spectrum,
            }),
            OperatorSpec::Inline { rows, spectrum } => {
                let d = rows.len();
                if rows.iter().any(|r| r.len() != d) {
                    return Err(Error::DimensionMismatch(format!("inline matrix with {d} rows is not square")));
                }
                let entries: Vec<Complex64> = rows.iter().flatten().copied().map(cx).collect();
                Ok(BuiltOperator {
                    h: ComplexMatrix::from_row_major(d, &entries)?,
                    test: None,
                    spectrum: *spectrum,
                })
            }
        }
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum HalfLineSpec {
    /// `e^{-rate s^power}`.
    ExpDecay { rate: f64, power: u32 },
    /// `(1 + s)^{-1}`.
    InverseLinear,
}

impl HalfLineSpec {
    pub fn build(&self) -> HalfLineFunction {
        match self {
            HalfLineSpec::ExpDecay { rate, power } => HalfLineFunction::exp_decay(*rate, *power),
            HalfLineSpec::InverseLinear => HalfLineFunction::inverse_linear(),
        }
    }
}

/// Taylor order: fixed, or `ceil(α) + 2` from the fitted resolvent bound.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum OrderSpec {
    #[default]
    Auto,
    Fixed(usize),
}

impl OrderSpec {
    pub fn resolve(self, h: &ComplexMatrix) -> Result<usize> {
        match self {
            OrderSpec::Auto => auto_order(h),
            OrderSpec::Fixed(n) => Ok(n),
        }
    }
}

impl FromStr for OrderSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(OrderSpec::Auto);
        }
        s.parse()
            .map(OrderSpec::Fixed)
            .map_err(|_| Error::Config(format!("order must be 'auto' or a non-negative integer, got '{s}'")))
    }
}

impl<'de> Deserialize<'de> for OrderSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(usize),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Int(n) => Ok(OrderSpec::Fixed(n)),
            Raw::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub n: OrderSpec,
    pub function: Option<FunctionSpec>,
    pub operator: Option<OperatorSpec>,
    #[serde(default)]
    pub quad: QuadratureSpec,
    pub half_line: Option<HalfLineSpec>,
    /// Directory that relative paths resolve against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.quad.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut cfg = Self::parse(&std::fs::read_to_string(path)?)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn function(&self) -> Result<&FunctionSpec> {
        self.function.as_ref().ok_or_else(|| Error::Config("missing [function] section".into()))
    }

    pub fn operator(&self) -> Result<BuiltOperator> {
        self.operator
            .as_ref()
            .ok_or_else(|| Error::Config("missing [operator] section".into()))?
            .build(&self.base_dir)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FULL: &str = r#"
n = 3

[function]
kind = "rational"
poles = [[0.0, 1.0], [0.0, -1.0]]
weights = [[0.5, 0.0], [0.5, 0.0]]
scalar = [1.0, 0.0]

[operator]
kind = "factory"
eigs = [0.0, 1.0]
conditioner = "jordan_like"
delta = 0.25
seed = 3

[quad]
nx = 16
levels = 4
"#;

    #[test]
    fn parses_full_config() {
        let cfg = RunConfig::parse(FULL).unwrap();
        assert_eq!(cfg.n, OrderSpec::Fixed(3));
        assert_eq!(cfg.quad.nx, 16);
        assert_eq!(cfg.quad.ny, QuadratureSpec::default().ny);
        let phi = cfg.function().unwrap().build_extended().unwrap();
        assert_eq!(phi.scalar, Complex64::new(1.0, 0.0));
        // 1/2 (1/(i-x) + 1/(-i-x)) = -x/(1+x²)
        assert!((phi.function.value(1.0) - Complex64::new(-0.5, 0.0)).norm() < 1e-15);
        let op = cfg.operator().unwrap();
        assert!((op.require_test().unwrap().kappa() - 4.0).abs() < 1e-8);
    }

    #[test]
    fn order_spec_forms() {
        assert_eq!("auto".parse::<OrderSpec>().unwrap(), OrderSpec::Auto);
        assert_eq!("2".parse::<OrderSpec>().unwrap(), OrderSpec::Fixed(2));
        assert!("two".parse::<OrderSpec>().is_err());
        let cfg = RunConfig::parse("n = \"auto\"").unwrap();
        assert_eq!(cfg.n, OrderSpec::Auto);
    }

    #[test]
    fn every_function_kind_builds() {
        let kinds = [
            r#"kind = "resolvent"
z = [0.0, 2.0]"#,
            "kind = \"bump\"\na = -1.0\nb = 3.0",
            "kind = \"char\"\na = -1.0\nb = 3.0\neps = 0.25",
            "kind = \"bracket_power\"\nbeta = -1.0",
            "kind = \"custom_table\"\nx0 = 0.0\nh = 0.5\nvalues = [[1.0, 0.0], [2.0, 0.0]]",
        ];
        for k in kinds {
            let cfg = RunConfig::parse(&format!("[function]\n{k}")).unwrap();
            cfg.function().unwrap().build().unwrap();
        }
    }

    #[test]
    fn inline_operator_and_errors() {
        let cfg = RunConfig::parse(
            "[operator]\nkind = \"inline\"\nrows = [[[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [2.0, 0.0]]]\nspectrum = [1.0, 2.0]",
        )
        .unwrap();
        let op = cfg.operator().unwrap();
        assert_eq!(op.h.dim(), 2);
        assert_eq!(op.enclosure(), (1.0, 2.0));
        assert!(op.require_test().is_err());
        assert!(matches!(RunConfig::parse("[function]\nkind = \"nope\""), Err(Error::Config(_))));
        assert!(matches!(RunConfig::parse("[quad]\nnx = 2"), Err(Error::InvalidQuadrature(_))));
        assert!(RunConfig::default().function().is_err());
    }
}
