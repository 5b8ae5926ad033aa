//! Shared domain types: model constants, the uniform mesh on `[0, 1]`, and
//! the three-level time history consumed by the steppers.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Weight of the spatial operator between levels `n+1` and `n-1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Theta {
    /// `θ = 1/2`
    CrankNicolson,
    /// `θ = 1`
    Implicit,
}

impl Theta {
    pub fn value(self) -> f64 {
        match self {
            Theta::CrankNicolson => 0.5,
            Theta::Implicit => 1.0,
        }
    }
}

impl TryFrom<f64> for Theta {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        if value == 0.5 {
            Ok(Theta::CrankNicolson)
        } else if value == 1.0 {
            Ok(Theta::Implicit)
        } else {
            Err(Error::InvalidParam(format!(
                "theta must be 1/2 or 1, got {value}"
            )))
        }
    }
}

impl fmt::Display for Theta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value())
    }
}

/// Physical and scheme constants of the damped problem.
///
/// Only `ν²` enters the equation, so the sign of `ν` is never stored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    mu: f64,
    nu_squared: f64,
    p: f64,
    theta: Theta,
    delta: f64,
}

impl ModelParams {
    /// Parameters under the coupling `δ = (μ-1)² - 4ν² = 1`.
    ///
    /// Requires `μ ≥ 2` so that `ν² = ((μ-1)² - 1)/4` is nonnegative.
    pub fn delta_one(mu: f64, p: f64, theta: f64) -> Result<Self> {
        check_mu_p(mu, p)?;
        let theta = Theta::try_from(theta)?;
        let nu_squared = ((mu - 1.0).powi(2) - 1.0) / 4.0;
        if nu_squared < 0.0 {
            return Err(Error::InvalidParam(format!(
                "mu = {mu} gives negative nu^2 = {nu_squared} under delta = 1 (need mu >= 2)"
            )));
        }
        Ok(Self {
            mu,
            nu_squared,
            p,
            theta,
            delta: 1.0,
        })
    }

    /// Parameters with an explicit mass coefficient `ν²`; `δ` is derived.
    pub fn with_nu_squared(mu: f64, nu_squared: f64, p: f64, theta: f64) -> Result<Self> {
        check_mu_p(mu, p)?;
        let theta = Theta::try_from(theta)?;
        if !(nu_squared >= 0.0 && nu_squared.is_finite()) {
            return Err(Error::InvalidParam(format!(
                "nu^2 must be finite and nonnegative, got {nu_squared}"
            )));
        }
        Ok(Self {
            mu,
            nu_squared,
            p,
            theta,
            delta: (mu - 1.0).powi(2) - 4.0 * nu_squared,
        })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn nu_squared(&self) -> f64 {
        self.nu_squared
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn theta(&self) -> Theta {
        self.theta
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }
}

fn check_mu_p(mu: f64, p: f64) -> Result<()> {
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::InvalidParam(format!(
            "mu must be positive, got {mu}"
        )));
    }
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::InvalidParam(format!("p must exceed 1, got {p}")));
    }
    Ok(())
}

/// Uniform mesh `x_l = l/s`, `l = 0..=s`, on `[0, 1]`.
///
/// Homogeneous Dirichlet data removes both endpoints, leaving `s - 1`
/// unknowns at the interior nodes `x_1 .. x_{s-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid1D {
    n_cells: usize,
    dx: f64,
    nodes: Vec<f64>,
}

impl Grid1D {
    pub fn new(n_cells: usize) -> Result<Self> {
        if n_cells < 2 {
            return Err(Error::InvalidParam(format!(
                "grid needs at least 2 cells (one interior node), got {n_cells}"
            )));
        }
        let s = n_cells as f64;
        let nodes = (0..=n_cells).map(|l| l as f64 / s).collect();
        Ok(Self {
            n_cells,
            dx: 1.0 / s,
            nodes,
        })
    }

    /// Build from a requested spacing; `1/dx` must be an integer to 1e-9.
    pub fn from_spacing(dx: f64) -> Result<Self> {
        if !(dx > 0.0 && dx.is_finite()) {
            return Err(Error::InvalidParam(format!(
                "dx must be positive, got {dx}"
            )));
        }
        let cells = 1.0 / dx;
        let rounded = cells.round();
        if (cells - rounded).abs() > 1e-9 * rounded.max(1.0) {
            return Err(Error::InvalidParam(format!(
                "1/dx = {cells} is not an integer cell count"
            )));
        }
        Self::new(rounded as usize)
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    /// All `s + 1` nodes including the two boundary points.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn interior_nodes(&self) -> &[f64] {
        &self.nodes[1..self.n_cells]
    }

    pub fn interior_count(&self) -> usize {
        self.n_cells - 1
    }
}

/// Solution history `(uⁿ⁻¹, uⁿ)` at step `n` over the interior nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeState {
    pub u_prev: Vec<f64>,
    pub u_curr: Vec<f64>,
    pub step_index: usize,
    pub dt: f64,
}

impl TimeState {
    pub fn new(u_prev: Vec<f64>, u_curr: Vec<f64>, step_index: usize, dt: f64) -> Result<Self> {
        if u_prev.len() != u_curr.len() {
            return Err(Error::InvalidParam(format!(
                "history levels differ in length ({} vs {})",
                u_prev.len(),
                u_curr.len()
            )));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidParam(format!(
                "dt must be positive, got {dt}"
            )));
        }
        Ok(Self {
            u_prev,
            u_curr,
            step_index,
            dt,
        })
    }

    pub fn time(&self) -> f64 {
        self.step_index as f64 * self.dt
    }

    /// Shift the history by one level, making `next` the current level.
    pub fn advance(&mut self, next: Vec<f64>) {
        debug_assert_eq!(next.len(), self.u_curr.len());
        self.u_prev = std::mem::replace(&mut self.u_curr, next);
        self.step_index += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delta_one_reference_values() {
        let params = ModelParams::delta_one(10.0, 3.0, 0.5).unwrap();
        assert_eq!(params.nu_squared(), 20.0);
        assert_eq!(params.delta(), 1.0);
        assert_eq!(params.theta(), Theta::CrankNicolson);

        let params = ModelParams::delta_one(2.0, 3.0, 1.0).unwrap();
        assert_eq!(params.nu_squared(), 0.0);
        assert_eq!(params.delta(), 1.0);
    }

    #[test]
    fn delta_one_rejects_bad_input() {
        assert!(ModelParams::delta_one(1.5, 3.0, 1.0).is_err());
        assert!(ModelParams::delta_one(10.0, 1.0, 1.0).is_err());
        assert!(ModelParams::delta_one(10.0, 3.0, 0.3).is_err());
        assert!(ModelParams::delta_one(-1.0, 3.0, 1.0).is_err());
    }

    #[test]
    fn explicit_nu_squared_derives_delta() {
        let params = ModelParams::with_nu_squared(3.0, 0.25, 2.0, 1.0).unwrap();
        assert_eq!(params.delta(), 3.0);
        assert!(ModelParams::with_nu_squared(3.0, -1.0, 2.0, 1.0).is_err());
    }

    #[test]
    fn grid_endpoints_and_interior() {
        for s in [2, 3, 7, 10, 500, 999] {
            let grid = Grid1D::new(s).unwrap();
            assert_eq!(grid.nodes()[0], 0.0);
            assert_eq!(grid.nodes()[s], 1.0);
            assert_eq!(grid.interior_count(), s - 1);
            assert_eq!(grid.interior_nodes().len(), s - 1);
            for w in grid.nodes().windows(2) {
                assert!((w[1] - w[0] - grid.dx()).abs() <= 4.0 * f64::EPSILON);
            }
        }
        assert!(Grid1D::new(1).is_err());
    }

    #[test]
    fn grid_from_spacing() {
        let grid = Grid1D::from_spacing(2e-3).unwrap();
        assert_eq!(grid.n_cells(), 500);
        assert_eq!(grid.nodes()[250], 0.5);
        assert!(Grid1D::from_spacing(0.3).is_err());
        assert!(Grid1D::from_spacing(0.0).is_err());
    }

    #[test]
    fn time_state_advance() {
        let mut state = TimeState::new(vec![0.0; 2], vec![1.0; 2], 0, 0.1).unwrap();
        state.advance(vec![2.0; 2]);
        assert_eq!(state.u_prev, vec![1.0; 2]);
        assert_eq!(state.u_curr, vec![2.0; 2]);
        assert_eq!(state.step_index, 1);
        assert!((state.time() - 0.1).abs() < 1e-15);
        assert!(TimeState::new(vec![0.0; 2], vec![0.0; 3], 0, 0.1).is_err());
    }
}
