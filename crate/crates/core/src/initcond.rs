//! Compactly supported bump initial data and superpositions of bumps.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Grid1D;

/// Exponents below this underflow `exp` to zero.
const EXP_UNDERFLOW: f64 = -745.2;

/// `amplitude · B(x; center, radius)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BumpSpec {
    pub amplitude: f64,
    pub center: f64,
    pub radius: f64,
}

impl BumpSpec {
    pub fn new(amplitude: f64, center: f64, radius: f64) -> Result<Self> {
        let spec = Self {
            amplitude,
            center,
            radius,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.amplitude.is_finite() {
            return Err(Error::InvalidParam(format!(
                "bump amplitude must be finite, got {}",
                self.amplitude
            )));
        }
        if !(self.radius > 0.0 && self.radius < 1.0) {
            return Err(Error::InvalidParam(format!(
                "bump radius must lie in (0, 1), got {}",
                self.radius
            )));
        }
        if !(self.center > 0.0 && self.center < 1.0) {
            return Err(Error::InvalidParam(format!(
                "bump center must lie in (0, 1), got {}",
                self.center
            )));
        }
        Ok(())
    }

    /// True when the closed support `[C-R, C+R]` reaches the boundary of `[0, 1]`.
    pub fn touches_boundary(&self) -> bool {
        self.center - self.radius <= 0.0 || self.center + self.radius >= 1.0
    }
}

/// `amplitude · exp(1/R² - 1/(R² - |x-C|²))` inside the support, exactly 0 outside.
pub fn bump_eval(spec: &BumpSpec, x: f64) -> f64 {
    let d = (x - spec.center).abs();
    if d >= spec.radius {
        return 0.0;
    }
    let r2 = spec.radius * spec.radius;
    let gap = r2 - d * d;
    if gap <= 0.0 {
        return 0.0;
    }
    let exponent = 1.0 / r2 - 1.0 / gap;
    if exponent < EXP_UNDERFLOW {
        return 0.0;
    }
    spec.amplitude * exponent.exp()
}

/// Initial displacement as a sum of bumps; the initial velocity is zero.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct InitialData {
    pub bumps: Vec<BumpSpec>,
}

impl InitialData {
    pub fn new(bumps: Vec<BumpSpec>) -> Self {
        Self { bumps }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.bumps.iter().map(|b| bump_eval(b, x)).sum()
    }
}

/// Sample the initial displacement at the interior nodes.
pub fn sample_initial(data: &InitialData, grid: &Grid1D) -> Vec<f64> {
    grid.interior_nodes()
        .iter()
        .map(|&x| data.eval(x))
        .collect()
}
