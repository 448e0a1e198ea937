//! Functionals K applied to the linear process, with closed-form Fourier transforms
//! `K̂(u) = ∫ K(x) e^{-iux} dx`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Shape of the functional.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelShape {
    /// `e^{-x²/2}`
    GaussBump,
    /// `x e^{-x²}`
    OddBump,
    /// `1_{[a, b]}`
    Indicator { a: f64, b: f64 },
}

/// `coef · shape(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "KernelSpec", into = "KernelSpec")]
pub struct FunctionalK {
    shape: KernelShape,
    coef: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct KernelSpec {
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    b: Option<f64>,
    #[serde(default = "one")]
    coef: f64,
}

fn one() -> f64 {
    1.0
}

impl TryFrom<KernelSpec> for FunctionalK {
    type Error = LabError;

    fn try_from(s: KernelSpec) -> Result<Self> {
        let shape = match s.kind.as_str() {
            "gauss_bump" => KernelShape::GaussBump,
            "odd_bump" => KernelShape::OddBump,
            "indicator" => match (s.a, s.b) {
                (Some(a), Some(b)) => KernelShape::Indicator { a, b },
                _ => return Err(LabError::config("indicator kernel needs both a and b")),
            },
            other => return Err(LabError::config(format!("unknown kernel kind '{other}'"))),
        };
        if s.kind != "indicator" && (s.a.is_some() || s.b.is_some()) {
            return Err(LabError::config(format!("kernel '{}' takes no a/b", s.kind)));
        }
        FunctionalK::new(shape)?.scaled(s.coef)
    }
}

impl From<FunctionalK> for KernelSpec {
    fn from(k: FunctionalK) -> Self {
        let (kind, a, b) = match k.shape {
            KernelShape::GaussBump => ("gauss_bump", None, None),
            KernelShape::OddBump => ("odd_bump", None, None),
            KernelShape::Indicator { a, b } => ("indicator", Some(a), Some(b)),
        };
        KernelSpec { kind: kind.into(), a, b, coef: k.coef }
    }
}

impl FunctionalK {
    pub fn new(shape: KernelShape) -> Result<Self> {
        if let KernelShape::Indicator { a, b } = shape {
            if !(a.is_finite() && b.is_finite() && a < b) {
                return Err(LabError::domain(format!("indicator needs finite a < b, got [{a}, {b}]")));
            }
        }
        Ok(FunctionalK { shape, coef: 1.0 })
    }

    pub fn gauss_bump() -> Self {
        FunctionalK { shape: KernelShape::GaussBump, coef: 1.0 }
    }

    pub fn odd_bump() -> Self {
        FunctionalK { shape: KernelShape::OddBump, coef: 1.0 }
    }

    pub fn indicator(a: f64, b: f64) -> Result<Self> {
        FunctionalK::new(KernelShape::Indicator { a, b })
    }

    /// The same shape multiplied by `c`.
    pub fn scaled(self, c: f64) -> Result<Self> {
        if !c.is_finite() {
            return Err(LabError::domain("kernel multiplier must be finite"));
        }
        Ok(FunctionalK { shape: self.shape, coef: self.coef * c })
    }

    pub fn shape(&self) -> KernelShape {
        self.shape
    }

    pub fn coef(&self) -> f64 {
        self.coef
    }

    pub fn eval(&self, x: f64) -> f64 {
        let v = match self.shape {
            KernelShape::GaussBump => (-0.5 * x * x).exp(),
            KernelShape::OddBump => x * (-x * x).exp(),
            KernelShape::Indicator { a, b } => {
                if x >= a && x <= b {
                    1.0
                } else {
                    0.0
                }
            }
        };
        self.coef * v
    }

    /// `K̂(u) = ∫ K(x) e^{-iux} dx`.
    pub fn hat(&self, u: f64) -> Complex64 {
        let v = match self.shape {
            KernelShape::GaussBump => Complex64::new((2.0 * PI).sqrt() * (-0.5 * u * u).exp(), 0.0),
            KernelShape::OddBump => Complex64::new(0.0, -0.5 * PI.sqrt() * u * (-0.25 * u * u).exp()),
            KernelShape::Indicator { a, b } => {
                if u.abs() < 1e-8 {
                    Complex64::new(b - a, -0.5 * u * (b * b - a * a))
                } else {
                    let ea = Complex64::new(0.0, -u * a).exp();
                    let eb = Complex64::new(0.0, -u * b).exp();
                    (ea - eb) / Complex64::new(0.0, u)
                }
            }
        };
        v * self.coef
    }

    /// `∫ |K|`.
    pub fn l1_norm(&self) -> f64 {
        let v = match self.shape {
            KernelShape::GaussBump => (2.0 * PI).sqrt(),
            KernelShape::OddBump => 1.0,
            KernelShape::Indicator { a, b } => b - a,
        };
        self.coef.abs() * v
    }

    /// `∫ K`.
    pub fn integral(&self) -> f64 {
        self.hat(0.0).re
    }

    pub fn is_even(&self) -> bool {
        match self.shape {
            KernelShape::GaussBump => true,
            KernelShape::OddBump => false,
            KernelShape::Indicator { a, b } => a == -b,
        }
    }

    pub fn is_odd(&self) -> bool {
        matches!(self.shape, KernelShape::OddBump)
    }

    /// Frequency beyond which `|K̂|` is below `tol · |K̂(0)|`-scale, or `None` when
    /// `K̂` only decays algebraically.
    pub fn hat_cutoff(&self, tol: f64) -> Option<f64> {
        let l = (1.0 / tol).ln();
        match self.shape {
            KernelShape::GaussBump => Some((2.0 * l).sqrt()),
            KernelShape::OddBump => Some((4.0 * (l + 4.0)).sqrt()),
            KernelShape::Indicator { .. } => None,
        }
    }

    pub fn label(&self) -> String {
        let base = match self.shape {
            KernelShape::GaussBump => "gauss_bump".to_string(),
            KernelShape::OddBump => "odd_bump".to_string(),
            KernelShape::Indicator { a, b } => format!("indicator[{a},{b}]"),
        };
        if self.coef == 1.0 {
            base
        } else {
            format!("{}*{base}", self.coef)
        }
    }
}
