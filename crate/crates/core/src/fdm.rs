//! Pure finite-difference θ-scheme on the interior nodes.
//!
//! Multiplying the nodal scheme by `Δt²` gives the matrix form
//!
//! ```text
//! (I + cθA) Uⁿ⁺¹ + (I + c(1-θ)A) Uⁿ⁻¹ - 2Uⁿ - Δt² (1+t_n)^(-μ(p-1)/2) |Uⁿ|^p = 0
//! ```
//!
//! with mesh ratio `c = Δt²/Δx²` and `A = tridiag(-1, 2, -1)`. The first
//! step uses the ghost level `U⁻¹ = U¹`, i.e. `(2I + cA) U¹ = 2U⁰ + source`.

use crate::error::Result;
use crate::gfem::invalid_newton;
use crate::linalg::{second_difference_matrix, shift_scale, BandedMatrix};
use crate::model::{Grid1D, ModelParams, Theta, TimeState};
use crate::newton::{NewtonConfig, NewtonError, NewtonSolver};
use crate::scheme::{add_extra, power_abs, SchemeKind, StepOptions, StepOutcome, Stepper};

#[derive(Debug, Clone, PartialEq)]
pub struct FdmOperators {
    pub a: BandedMatrix,
    /// `I + cθA`
    pub lhs: BandedMatrix,
    /// `I + c(1-θ)A`
    pub rhs_hist: BandedMatrix,
    /// `2I + cA`
    pub first: BandedMatrix,
    pub c: f64,
    pub dt: f64,
    pub theta: Theta,
}

impl FdmOperators {
    pub fn dim(&self) -> usize {
        self.a.dim()
    }
}

pub fn fdm_assemble(grid: &Grid1D, dt: f64, theta: Theta) -> Result<FdmOperators> {
    let a = second_difference_matrix(grid.interior_count())?;
    let dx = grid.dx();
    let c = (dt * dt) / (dx * dx);
    let th = theta.value();
    Ok(FdmOperators {
        lhs: shift_scale(&a, 1.0, c * th),
        rhs_hist: shift_scale(&a, 1.0, c * (1.0 - th)),
        first: shift_scale(&a, 2.0, c),
        a,
        c,
        dt,
        theta,
    })
}

/// `Δt² · coefficient · |u_i|^p` pointwise.
pub fn fdm_source_with_coefficient(
    u: &[f64],
    coefficient: f64,
    params: &ModelParams,
    dt: f64,
) -> Vec<f64> {
    if coefficient == 0.0 {
        return vec![0.0; u.len()];
    }
    let scale = dt * dt * coefficient;
    power_abs(u, params.p())
        .into_iter()
        .map(|v| scale * v)
        .collect()
}

/// `Δt² (1+t_n)^(-μ(p-1)/2) |u_i|^p` pointwise.
pub fn fdm_source(u: &[f64], t_n: f64, params: &ModelParams, dt: f64) -> Vec<f64> {
    let coefficient = StepOptions::default().coefficient(params, t_n, dt);
    fdm_source_with_coefficient(u, coefficient, params, dt)
}

/// Matrix-form residual of a general step evaluated at a trial `x = Uⁿ⁺¹`.
///
/// `source` is the already-evaluated nonlinear (plus any forcing) term.
pub fn step_residual(ops: &FdmOperators, x: &[f64], state: &TimeState, source: &[f64]) -> Vec<f64> {
    let lx = ops.lhs.apply(x);
    let hu = ops.rhs_hist.apply(&state.u_prev);
    (0..x.len())
        .map(|i| lx[i] + hu[i] - 2.0 * state.u_curr[i] - source[i])
        .collect()
}

#[derive(Debug, Clone)]
pub struct FdmScheme {
    ops: FdmOperators,
    params: ModelParams,
    options: StepOptions,
    first_solver: NewtonSolver,
    step_solver: NewtonSolver,
}

impl FdmScheme {
    pub fn new(
        grid: &Grid1D,
        dt: f64,
        params: ModelParams,
        newton: NewtonConfig,
        options: StepOptions,
    ) -> Result<Self> {
        let ops = fdm_assemble(grid, dt, params.theta())?;
        Ok(Self {
            ops,
            params,
            options,
            first_solver: NewtonSolver::new(newton).map_err(invalid_newton)?,
            step_solver: NewtonSolver::new(newton).map_err(invalid_newton)?,
        })
    }

    pub fn operators(&self) -> &FdmOperators {
        &self.ops
    }

    fn source(&self, u: &[f64], t_n: f64) -> Vec<f64> {
        let coefficient = self.options.coefficient(&self.params, t_n, self.ops.dt);
        fdm_source_with_coefficient(u, coefficient, &self.params, self.ops.dt)
    }

    /// `2U⁰ + source(U⁰)` for the first-step system `(2I + cA) U¹ = rhs`.
    pub fn first_step_rhs(&self, u0: &[f64], extra: Option<&[f64]>) -> Vec<f64> {
        let mut rhs: Vec<f64> = self
            .source(u0, 0.0)
            .iter()
            .zip(u0)
            .map(|(s, u)| 2.0 * u + s)
            .collect();
        add_extra(&mut rhs, extra);
        rhs
    }

    /// Nonlinear source for a general step, including any forcing load.
    pub fn step_source(&self, state: &TimeState, extra: Option<&[f64]>) -> Vec<f64> {
        let mut src = self.source(&state.u_curr, state.time());
        add_extra(&mut src, extra);
        src
    }
}

impl Stepper for FdmScheme {
    fn kind(&self) -> SchemeKind {
        SchemeKind::Fdm
    }

    fn dim(&self) -> usize {
        self.ops.dim()
    }

    fn dt(&self) -> f64 {
        self.ops.dt
    }

    fn first_step(
        &mut self,
        u0: &[f64],
        extra: Option<&[f64]>,
    ) -> Result<StepOutcome, NewtonError> {
        let rhs = self.first_step_rhs(u0, extra);
        let first = &self.ops.first;
        let residual = |x: &[f64], out: &mut [f64]| {
            first.apply_into(x, out);
            for (o, r) in out.iter_mut().zip(&rhs) {
                *o -= r;
            }
        };
        let (u, report) = self.first_solver.solve(residual, u0)?;
        Ok(StepOutcome { u, report })
    }

    fn step(
        &mut self,
        state: &TimeState,
        extra: Option<&[f64]>,
    ) -> Result<StepOutcome, NewtonError> {
        let source = self.step_source(state, extra);
        // everything except the (I + cθA)X term is fixed during the solve
        let hist = self.ops.rhs_hist.apply(&state.u_prev);
        let constant: Vec<f64> = (0..source.len())
            .map(|i| hist[i] - 2.0 * state.u_curr[i] - source[i])
            .collect();
        let lhs = &self.ops.lhs;
        let residual = |x: &[f64], out: &mut [f64]| {
            lhs.apply_into(x, out);
            for (o, k) in out.iter_mut().zip(&constant) {
                *o += k;
            }
        };
        let (u, report) = self.step_solver.solve(residual, &state.u_curr)?;
        Ok(StepOutcome { u, report })
    }

    fn forcing_load(&self, g: &[f64]) -> Vec<f64> {
        let dt2 = self.ops.dt * self.ops.dt;
        g.iter().map(|v| dt2 * v).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::initcond::{sample_initial, BumpSpec, InitialData};
    use crate::linalg::{banded_factor_solve, inf_norm, inf_norm_diff};
    use rand::{rngs::StdRng, Rng, SeedableRng};

    fn params(theta: f64) -> ModelParams {
        ModelParams::delta_one(10.0, 3.0, theta).unwrap()
    }

    fn linear() -> StepOptions {
        StepOptions {
            nonlinear: false,
            ..StepOptions::default()
        }
    }

    #[test]
    fn mesh_ratio_at_reference_steps() {
        let grid = Grid1D::new(500).unwrap();
        let ops = fdm_assemble(&grid, 1e-3, Theta::CrankNicolson).unwrap();
        assert!((ops.c - 0.25).abs() <= 1e-15);
        assert_eq!(ops.lhs, ops.rhs_hist);
    }

    #[test]
    fn implicit_lhs_entries() {
        // dx = 1/4 and dt = 1/8 give c = 0.25 with three interior nodes
        let grid = Grid1D::new(4).unwrap();
        let ops = fdm_assemble(&grid, 0.125, Theta::Implicit).unwrap();
        assert_eq!(ops.c, 0.25);
        assert_eq!(ops.lhs.diag(), &[1.5, 1.5, 1.5]);
        assert_eq!(ops.lhs.offdiag(), &[-0.25, -0.25]);
        assert_eq!(ops.rhs_hist, BandedMatrix::identity(3).unwrap());
    }

    #[test]
    fn source_examples() {
        let pr = params(1.0);
        assert!(fdm_source(&[0.0; 4], 0.0, &pr, 1e-3)
            .iter()
            .all(|&v| v == 0.0));
        let s = fdm_source(&[0.0, 2.0, 0.0], 0.0, &pr, 1e-3);
        assert!((s[1] - 8e-6).abs() <= 1e-20);
        assert_eq!(s[0], 0.0);
        let s = fdm_source(&[1.0], 1.0, &pr, 1e-3);
        assert!((s[0] - 1e-6 * 2f64.powi(-10)).abs() <= 1e-22);
    }

    #[test]
    fn first_step_single_node() {
        // one interior node with c = 0.25: dx = 1/2, dt = 1/4
        let grid = Grid1D::new(2).unwrap();
        let mut scheme =
            FdmScheme::new(&grid, 0.25, params(1.0), NewtonConfig::default(), linear()).unwrap();
        assert_eq!(scheme.operators().c, 0.25);
        let out = scheme.first_step(&[1.0], None).unwrap();
        assert!((out.u[0] - 0.8).abs() <= 1e-14);
    }

    #[test]
    fn zero_is_fixed() {
        let grid = Grid1D::new(12).unwrap();
        let mut scheme = FdmScheme::new(
            &grid,
            0.02,
            params(0.5),
            NewtonConfig::default(),
            StepOptions::default(),
        )
        .unwrap();
        assert!(scheme
            .first_step(&[0.0; 11], None)
            .unwrap()
            .u
            .iter()
            .all(|&v| v == 0.0));
        let state = TimeState::new(vec![0.0; 11], vec![0.0; 11], 5, 0.02).unwrap();
        assert!(scheme
            .step(&state, None)
            .unwrap()
            .u
            .iter()
            .all(|&v| v == 0.0));
    }

    #[test]
    fn linear_steps_match_banded_solve() {
        let mut rng = StdRng::seed_from_u64(5);
        for theta in [0.5, 1.0] {
            let grid = Grid1D::new(20).unwrap();
            let mut scheme = FdmScheme::new(
                &grid,
                0.03,
                params(theta),
                NewtonConfig::default(),
                linear(),
            )
            .unwrap();
            let u0: Vec<f64> = (0..19).map(|_| rng.gen_range(-0.1..0.1)).collect();
            let u1 = scheme.first_step(&u0, None).unwrap();
            let two_u0: Vec<f64> = u0.iter().map(|v| 2.0 * v).collect();
            let direct = banded_factor_solve(&scheme.operators().first, &two_u0).unwrap();
            assert!(inf_norm_diff(&u1.u, &direct) <= 1e-10);

            let state = TimeState::new(u0.clone(), u1.u.clone(), 1, 0.03).unwrap();
            let u2 = scheme.step(&state, None).unwrap();
            let ops = scheme.operators();
            let hist = ops.rhs_hist.apply(&u0);
            let rhs: Vec<f64> = (0..19).map(|i| 2.0 * u1.u[i] - hist[i]).collect();
            let direct = banded_factor_solve(&ops.lhs, &rhs).unwrap();
            assert!(inf_norm_diff(&u2.u, &direct) <= 1e-10);
        }
    }

    #[test]
    fn step_preserves_reflection_symmetry() {
        let grid = Grid1D::new(20).unwrap();
        let u_curr: Vec<f64> = grid
            .interior_nodes()
            .iter()
            .map(|x| (x * (1.0 - x)).powi(2))
            .collect();
        let u_prev: Vec<f64> = u_curr.iter().map(|v| 1.1 * v).collect();
        let mut scheme = FdmScheme::new(
            &grid,
            0.01,
            params(1.0),
            NewtonConfig::default(),
            StepOptions::default(),
        )
        .unwrap();
        let state = TimeState::new(u_prev, u_curr, 2, 0.01).unwrap();
        let out = scheme.step(&state, None).unwrap();
        let rev: Vec<f64> = out.u.iter().rev().cloned().collect();
        assert!(inf_norm_diff(&out.u, &rev) <= 1e-12);
    }

    #[test]
    fn linear_stability_at_reference_ratio() {
        let grid = Grid1D::new(200).unwrap();
        let dt = 0.5 * grid.dx();
        let data = InitialData::new(vec![BumpSpec::new(0.05, 0.5, 0.25).unwrap()]);
        let u0 = sample_initial(&data, &grid);
        let start = inf_norm(&u0);
        for theta in [0.5, 1.0] {
            let mut scheme =
                FdmScheme::new(&grid, dt, params(theta), NewtonConfig::default(), linear())
                    .unwrap();
            assert!((scheme.operators().c - 0.25).abs() < 1e-14);
            let u1 = scheme.first_step(&u0, None).unwrap().u;
            let mut state = TimeState::new(u0.clone(), u1, 1, dt).unwrap();
            let mut peak = start;
            for _ in 1..1000 {
                let next = scheme.step(&state, None).unwrap().u;
                peak = peak.max(inf_norm(&next));
                state.advance(next);
            }
            assert!(
                peak <= 1.05 * start,
                "theta = {theta}: peak {peak} vs {start}"
            );
        }
    }
}
