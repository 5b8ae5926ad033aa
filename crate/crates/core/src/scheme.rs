//! Interface shared by the two time-stepping schemes.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::model::{ModelParams, TimeState};
use crate::newton::{NewtonError, NewtonReport};
use crate::transform::source_coefficient;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeKind {
    Gfem,
    Fdm,
}

impl SchemeKind {
    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::Gfem => "gfem",
            SchemeKind::Fdm => "fdm",
        }
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchemeKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "gfem" => Ok(SchemeKind::Gfem),
            "fdm" => Ok(SchemeKind::Fdm),
            other => Err(format!("unknown scheme `{other}` (expected gfem or fdm)")),
        }
    }
}

/// Time level at which the decaying source coefficient `(1+t)^(-μ(p-1)/2)` is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceTime {
    /// `t_n`, the level of the lagged nonlinearity.
    #[default]
    Current,
    /// `t_{n+1}`
    Next,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOptions {
    /// When false the power nonlinearity is dropped (linear wave equation).
    pub nonlinear: bool,
    pub source_time: SourceTime,
}

impl Default for StepOptions {
    fn default() -> Self {
        Self {
            nonlinear: true,
            source_time: SourceTime::Current,
        }
    }
}

impl StepOptions {
    /// Coefficient of `|uⁿ|^p` for a step leaving level `t_n`, or zero when disabled.
    pub fn coefficient(&self, params: &ModelParams, t_n: f64, dt: f64) -> f64 {
        if !self.nonlinear {
            return 0.0;
        }
        let t = match self.source_time {
            SourceTime::Current => t_n,
            SourceTime::Next => t_n + dt,
        };
        source_coefficient(params, t)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub u: Vec<f64>,
    pub report: NewtonReport,
}

/// A three-level scheme advancing interior nodal values.
///
/// `extra` is an additional right-hand-side load already scaled into the
/// scheme's equation (see [`Stepper::forcing_load`]).
pub trait Stepper: Send {
    fn kind(&self) -> SchemeKind;

    fn dim(&self) -> usize;

    fn dt(&self) -> f64;

    /// Level 1 from level 0 with zero initial velocity.
    fn first_step(&mut self, u0: &[f64], extra: Option<&[f64]>)
        -> Result<StepOutcome, NewtonError>;

    /// Level `n+1` from levels `n` and `n-1`.
    fn step(
        &mut self,
        state: &TimeState,
        extra: Option<&[f64]>,
    ) -> Result<StepOutcome, NewtonError>;

    /// Convert nodal forcing values `g(x_i, t_n)` into this scheme's load vector.
    fn forcing_load(&self, g: &[f64]) -> Vec<f64>;
}

/// `|u_i|^p` entrywise.
pub(crate) fn power_abs(u: &[f64], p: f64) -> Vec<f64> {
    u.iter().map(|v| v.abs().powf(p)).collect()
}

pub(crate) fn add_extra(rhs: &mut [f64], extra: Option<&[f64]>) {
    if let Some(extra) = extra {
        assert_eq!(extra.len(), rhs.len(), "extra load has wrong length");
        for (r, e) in rhs.iter_mut().zip(extra) {
            *r += e;
        }
    }
}
