//! Galerkin scheme with linear hat functions in space and a θ-weighted
//! central difference in time.
//!
//! The general step solves
//!
//! ```text
//! K uⁿ⁺¹ = C uⁿ - H uⁿ⁻¹ + Δt² (1+t_n)^(-μ(p-1)/2) M |uⁿ|^p
//! ```
//!
//! with `K = M + θΔt² A`, `H = M + (1-θ)Δt² A`, `C = 2M`, where `M` and `A`
//! are the mass and stiffness matrices. The nonlinear term interpolates
//! `|u|^p` in the hat basis, so its load is `M` applied to the nodal powers.
//! The first step eliminates the ghost level through `u⁻¹ = u¹`, which gives
//! `S u¹ = C u⁰ + load` with `S = K + H`.

use crate::error::Result;
use crate::linalg::BandedMatrix;
use crate::model::{Grid1D, ModelParams, Theta, TimeState};
use crate::newton::{NewtonConfig, NewtonError, NewtonSolver};
use crate::scheme::{add_extra, power_abs, SchemeKind, StepOptions, StepOutcome, Stepper};

#[derive(Debug, Clone, PartialEq)]
pub struct GfemOperators {
    pub mass: BandedMatrix,
    pub stiffness: BandedMatrix,
    pub k: BandedMatrix,
    pub c: BandedMatrix,
    pub h: BandedMatrix,
    pub s: BandedMatrix,
    pub dt: f64,
    pub theta: Theta,
}

impl GfemOperators {
    pub fn dim(&self) -> usize {
        self.mass.dim()
    }
}

/// Assemble element by element over the uniform mesh, eliminating the two
/// Dirichlet nodes. All hat-function integrals are exact.
pub fn assemble(grid: &Grid1D, dt: f64, theta: Theta) -> Result<GfemOperators> {
    let h = grid.dx();
    let n = grid.interior_count();
    // local matrices on [x_e, x_{e+1}]
    let m_diag = h / 3.0;
    let m_off = h / 6.0;
    let a_diag = 1.0 / h;
    let a_off = -1.0 / h;

    let mut mass_d = vec![0.0; n];
    let mut mass_o = vec![0.0; n.saturating_sub(1)];
    let mut stiff_d = vec![0.0; n];
    let mut stiff_o = vec![0.0; n.saturating_sub(1)];
    for e in 0..grid.n_cells() {
        // element e couples global nodes e and e+1; interior index = node - 1
        let left = e.checked_sub(1).filter(|&i| i < n);
        let right = (e < n).then_some(e);
        for idx in [left, right].into_iter().flatten() {
            mass_d[idx] += m_diag;
            stiff_d[idx] += a_diag;
        }
        if let (Some(l), Some(_)) = (left, right) {
            mass_o[l] += m_off;
            stiff_o[l] += a_off;
        }
    }

    let mass = BandedMatrix::new(mass_d, mass_o)?;
    let stiffness = BandedMatrix::new(stiff_d, stiff_o)?;
    let th = theta.value();
    let dt2 = dt * dt;
    let k = mass.add(&stiffness.scaled(th * dt2))?;
    let hmat = mass.add(&stiffness.scaled((1.0 - th) * dt2))?;
    let c = mass.scaled(2.0);
    let s = k.add(&hmat)?;
    Ok(GfemOperators {
        mass,
        stiffness,
        k,
        c,
        h: hmat,
        s,
        dt,
        theta,
    })
}

/// `Δt² (1+t)^(-μ(p-1)/2) M |u|^p` with the coefficient already evaluated.
pub fn nonlinear_load_with_coefficient(
    u: &[f64],
    coefficient: f64,
    params: &ModelParams,
    ops: &GfemOperators,
) -> Vec<f64> {
    if coefficient == 0.0 {
        return vec![0.0; u.len()];
    }
    let scale = ops.dt * ops.dt * coefficient;
    let w: Vec<f64> = power_abs(u, params.p()).iter().map(|v| scale * v).collect();
    ops.mass.apply(&w)
}

/// Nonlinear load for a step leaving level `t_n`.
pub fn nonlinear_load(u: &[f64], t_n: f64, params: &ModelParams, ops: &GfemOperators) -> Vec<f64> {
    let coefficient = StepOptions::default().coefficient(params, t_n, ops.dt);
    nonlinear_load_with_coefficient(u, coefficient, params, ops)
}

#[derive(Debug, Clone)]
pub struct GfemScheme {
    ops: GfemOperators,
    params: ModelParams,
    options: StepOptions,
    first_solver: NewtonSolver,
    step_solver: NewtonSolver,
}

impl GfemScheme {
    pub fn new(
        grid: &Grid1D,
        dt: f64,
        params: ModelParams,
        newton: NewtonConfig,
        options: StepOptions,
    ) -> Result<Self> {
        let ops = assemble(grid, dt, params.theta())?;
        Ok(Self {
            ops,
            params,
            options,
            first_solver: NewtonSolver::new(newton).map_err(invalid_newton)?,
            step_solver: NewtonSolver::new(newton).map_err(invalid_newton)?,
        })
    }

    pub fn operators(&self) -> &GfemOperators {
        &self.ops
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    fn load(&self, u: &[f64], t_n: f64) -> Vec<f64> {
        let coefficient = self.options.coefficient(&self.params, t_n, self.ops.dt);
        nonlinear_load_with_coefficient(u, coefficient, &self.params, &self.ops)
    }

    /// Right-hand side `C u⁰ + load(u⁰)` of the first-step system `S u¹ = rhs`.
    pub fn first_step_rhs(&self, u0: &[f64], extra: Option<&[f64]>) -> Vec<f64> {
        let mut rhs = self.ops.c.apply(u0);
        for (r, g) in rhs.iter_mut().zip(self.load(u0, 0.0)) {
            *r += g;
        }
        add_extra(&mut rhs, extra);
        rhs
    }

    /// Right-hand side `C uⁿ - H uⁿ⁻¹ + load(uⁿ)` of the system `K uⁿ⁺¹ = rhs`.
    pub fn step_rhs(&self, state: &TimeState, extra: Option<&[f64]>) -> Vec<f64> {
        let cu = self.ops.c.apply(&state.u_curr);
        let hu = self.ops.h.apply(&state.u_prev);
        let load = self.load(&state.u_curr, state.time());
        let mut rhs: Vec<f64> = (0..cu.len()).map(|i| cu[i] - hu[i] + load[i]).collect();
        add_extra(&mut rhs, extra);
        rhs
    }
}

/// Residual `F(X) = lhs·X - rhs` handed to the Newton solver.
fn affine_residual<'a>(
    lhs: &'a BandedMatrix,
    rhs: &'a [f64],
) -> impl FnMut(&[f64], &mut [f64]) + 'a {
    move |x, out| {
        lhs.apply_into(x, out);
        for (o, r) in out.iter_mut().zip(rhs) {
            *o -= r;
        }
    }
}

impl Stepper for GfemScheme {
    fn kind(&self) -> SchemeKind {
        SchemeKind::Gfem
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
        let (u, report) = self
            .first_solver
            .solve(affine_residual(&self.ops.s, &rhs), u0)?;
        Ok(StepOutcome { u, report })
    }

    fn step(
        &mut self,
        state: &TimeState,
        extra: Option<&[f64]>,
    ) -> Result<StepOutcome, NewtonError> {
        let rhs = self.step_rhs(state, extra);
        let (u, report) = self
            .step_solver
            .solve(affine_residual(&self.ops.k, &rhs), &state.u_curr)?;
        Ok(StepOutcome { u, report })
    }

    fn forcing_load(&self, g: &[f64]) -> Vec<f64> {
        let dt2 = self.ops.dt * self.ops.dt;
        let scaled: Vec<f64> = g.iter().map(|v| dt2 * v).collect();
        self.ops.mass.apply(&scaled)
    }
}

pub(crate) fn invalid_newton(e: NewtonError) -> crate::error::Error {
    crate::error::Error::InvalidParam(e.to_string())
}
