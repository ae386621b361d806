//! Diffusion coefficients `g` with `g(0) = 0`, and the bounded ratio
//! `f(v) = g(v)/v` (with `f(0) = g'(0)`) that drives the splitting step.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Below this magnitude `f(v)` returns `g'(0)` instead of `g(v)/v`.
pub const NEAR_ZERO: f64 = 1e-12;

/// `g(0)` must vanish to this tolerance.
pub const ORIGIN_TOLERANCE: f64 = 1e-14;

/// Offset of the point `-1 + LOG1P_DOMAIN_EPS` below which `ln(1+v)` is
/// continued by its tangent line.
pub const LOG1P_DOMAIN_EPS: f64 = 1e-6;

const LOG1P_KNOT: f64 = -1.0 + LOG1P_DOMAIN_EPS;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NonlinearityKind {
    /// `lambda v`
    Linear,
    /// `lambda v / (1 + v^2)`
    Rational,
    /// `lambda (sin v + v)`
    SinePlus,
    /// `lambda ln(1 + v)`, tangent-extended below `-1 + 1e-6`
    Log1p,
    Zero,
    Custom,
}

impl NonlinearityKind {
    /// The four coefficients of the positivity census.
    pub const CATALOGUE: [NonlinearityKind; 4] = [
        NonlinearityKind::Linear,
        NonlinearityKind::Rational,
        NonlinearityKind::SinePlus,
        NonlinearityKind::Log1p,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            NonlinearityKind::Linear => "linear",
            NonlinearityKind::Rational => "rational",
            NonlinearityKind::SinePlus => "sineplus",
            NonlinearityKind::Log1p => "log1p",
            NonlinearityKind::Zero => "zero",
            NonlinearityKind::Custom => "custom",
        }
    }
}

impl fmt::Display for NonlinearityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for NonlinearityKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "linear" => Ok(NonlinearityKind::Linear),
            "rational" => Ok(NonlinearityKind::Rational),
            "sineplus" => Ok(NonlinearityKind::SinePlus),
            "log1p" => Ok(NonlinearityKind::Log1p),
            "zero" => Ok(NonlinearityKind::Zero),
            other => Err(Error::InvalidNonlinearity(format!(
                "unknown tag `{other}` (expected linear, rational, sineplus, log1p or zero)"
            ))),
        }
    }
}

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct Nonlinearity {
    kind: NonlinearityKind,
    lambda: f64,
    custom: Option<CustomCoefficient>,
}

#[derive(Clone)]
struct CustomCoefficient {
    g: ScalarFn,
    derivative_at_zero: f64,
    lipschitz: f64,
}

impl Nonlinearity {
    /// A catalogue coefficient with intensity `lambda`.
    pub fn new(kind: NonlinearityKind, lambda: f64) -> Result<Self> {
        if kind == NonlinearityKind::Custom {
            return Err(Error::InvalidNonlinearity(
                "use Nonlinearity::custom for user-supplied coefficients".into(),
            ));
        }
        if !lambda.is_finite() {
            return Err(Error::InvalidNonlinearity(format!(
                "intensity must be finite, got {lambda}"
            )));
        }
        Ok(Self {
            kind,
            lambda,
            custom: None,
        })
    }

    pub fn zero() -> Self {
        Self {
            kind: NonlinearityKind::Zero,
            lambda: 0.0,
            custom: None,
        }
    }

    /// A user-supplied `g`. The caller provides `g'(0)` and a Lipschitz bound;
    /// `g(0) = 0` is checked here.
    pub fn custom(
        g: impl Fn(f64) -> f64 + Send + Sync + 'static,
        derivative_at_zero: f64,
        lipschitz: f64,
    ) -> Result<Self> {
        let at_zero = g(0.0);
        if at_zero.is_nan() || at_zero.abs() > ORIGIN_TOLERANCE {
            return Err(Error::InvalidNonlinearity(format!(
                "g(0) must vanish, got {at_zero}"
            )));
        }
        Ok(Self {
            kind: NonlinearityKind::Custom,
            lambda: 1.0,
            custom: Some(CustomCoefficient {
                g: Arc::new(g),
                derivative_at_zero,
                lipschitz,
            }),
        })
    }

    pub fn kind(&self) -> NonlinearityKind {
        self.kind
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn derivative_at_zero(&self) -> f64 {
        let l = self.lambda;
        match self.kind {
            NonlinearityKind::Linear | NonlinearityKind::Rational | NonlinearityKind::Log1p => l,
            NonlinearityKind::SinePlus => 2.0 * l,
            NonlinearityKind::Zero => 0.0,
            NonlinearityKind::Custom => self.custom_ref().derivative_at_zero,
        }
    }

    /// Global Lipschitz constant of `g`. For `log1p` this is the slope of
    /// the tangent continuation, `lambda / 1e-6`.
    pub fn lipschitz(&self) -> f64 {
        let l = self.lambda.abs();
        match self.kind {
            NonlinearityKind::Linear | NonlinearityKind::Rational => l,
            NonlinearityKind::SinePlus => 2.0 * l,
            NonlinearityKind::Log1p => l / LOG1P_DOMAIN_EPS,
            NonlinearityKind::Zero => 0.0,
            NonlinearityKind::Custom => self.custom_ref().lipschitz,
        }
    }

    fn custom_ref(&self) -> &CustomCoefficient {
        self.custom
            .as_ref()
            .expect("custom nonlinearity carries its evaluator")
    }

    pub fn eval_g(&self, v: f64) -> f64 {
        let l = self.lambda;
        match self.kind {
            NonlinearityKind::Linear => l * v,
            NonlinearityKind::Rational => l * v / (1.0 + v * v),
            NonlinearityKind::SinePlus => l * (v.sin() + v),
            NonlinearityKind::Log1p => l * log1p_extended(v),
            NonlinearityKind::Zero => 0.0,
            NonlinearityKind::Custom => (self.custom_ref().g)(v),
        }
    }

    pub fn eval_f(&self, v: f64) -> f64 {
        if v.abs() < NEAR_ZERO {
            return self.derivative_at_zero();
        }
        let l = self.lambda;
        match self.kind {
            NonlinearityKind::Linear => l,
            NonlinearityKind::Rational => l / (1.0 + v * v),
            NonlinearityKind::SinePlus => l * (v.sin() / v + 1.0),
            NonlinearityKind::Log1p => l * (log1p_extended(v) / v),
            NonlinearityKind::Zero => 0.0,
            NonlinearityKind::Custom => (self.custom_ref().g)(v) / v,
        }
    }

    /// Human-readable formula, e.g. `2.5v/(1+v^2)`.
    pub fn label(&self) -> String {
        let l = self.lambda;
        match self.kind {
            NonlinearityKind::Linear => format!("{l}v"),
            NonlinearityKind::Rational => format!("{l}v/(1+v^2)"),
            NonlinearityKind::SinePlus => format!("{l}(sin(v)+v)"),
            NonlinearityKind::Log1p => format!("{l}ln(1+v)"),
            NonlinearityKind::Zero => "0".to_string(),
            NonlinearityKind::Custom => "custom".to_string(),
        }
    }
}

/// `ln(1+v)` for `v > -1 + eps`, continued by its tangent line below.
fn log1p_extended(v: f64) -> f64 {
    if v > LOG1P_KNOT {
        v.ln_1p()
    } else {
        LOG1P_KNOT.ln_1p() + (v - LOG1P_KNOT) / (1.0 + LOG1P_KNOT)
    }
}

impl fmt::Debug for Nonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Nonlinearity")
            .field("kind", &self.kind)
            .field("lambda", &self.lambda)
            .finish()
    }
}
