//! Whole-simulation orchestration: initialization, the time loop, snapshot
//! capture in both `u` and `φ`, cross-scheme comparison and manufactured
//! solution convergence studies.

use std::collections::BTreeMap;
use std::thread;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fdm::FdmScheme;
use crate::gfem::GfemScheme;
use crate::initcond::{sample_initial, InitialData};
use crate::linalg::{inf_norm, inf_norm_diff};
use crate::model::{Grid1D, ModelParams, Theta, TimeState};
use crate::newton::{NewtonConfig, NewtonError};
use crate::scheme::{SchemeKind, StepOptions, StepOutcome, Stepper};
use crate::transform::{decay_factor, source_coefficient};

pub const DEFAULT_BLOWUP_GUARD: f64 = 1e15;

/// Floor for the denominator of relative differences.
const REL_FLOOR: f64 = 1e-30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeSelection {
    Gfem,
    Fdm,
    Both,
}

impl SchemeSelection {
    pub fn kinds(self) -> Vec<SchemeKind> {
        match self {
            SchemeSelection::Gfem => vec![SchemeKind::Gfem],
            SchemeSelection::Fdm => vec![SchemeKind::Fdm],
            SchemeSelection::Both => vec![SchemeKind::Gfem, SchemeKind::Fdm],
        }
    }
}

/// Mesh and time step used by one scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct Discretization {
    pub grid: Grid1D,
    pub dt: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scheme: SchemeSelection,
    pub params: ModelParams,
    pub grid: Grid1D,
    pub dt: f64,
    pub t_final: f64,
    pub initial: InitialData,
    pub snapshot_times: Vec<f64>,
    pub newton: NewtonConfig,
    pub emit_physical: bool,
    pub options: StepOptions,
    pub blowup_guard: f64,
    /// Only sample the initial data; no time stepping.
    pub initial_only: bool,
    /// Per-scheme mesh/time-step replacements.
    pub overrides: BTreeMap<SchemeKind, Discretization>,
}

impl RunConfig {
    /// Reference defaults on a given mesh: `μ = 10`, `p = 3`, `δ = 1`.
    pub fn new(params: ModelParams, grid: Grid1D, dt: f64, t_final: f64) -> Self {
        let fd_step = grid.dx();
        Self {
            scheme: SchemeSelection::Both,
            params,
            grid,
            dt,
            t_final,
            initial: InitialData::default(),
            snapshot_times: vec![t_final],
            newton: NewtonConfig {
                fd_step,
                ..NewtonConfig::default()
            },
            emit_physical: true,
            options: StepOptions::default(),
            blowup_guard: DEFAULT_BLOWUP_GUARD,
            initial_only: false,
            overrides: BTreeMap::new(),
        }
    }

    pub fn discretization(&self, kind: SchemeKind) -> Discretization {
        self.overrides
            .get(&kind)
            .cloned()
            .unwrap_or_else(|| Discretization {
                grid: self.grid.clone(),
                dt: self.dt,
            })
    }

    /// Check every invariant; returns non-fatal warnings.
    pub fn validate(&self) -> Result<Vec<String>> {
        let mut warnings = Vec::new();
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return Err(Error::Config(format!(
                "t_final must be positive, got {}",
                self.t_final
            )));
        }
        for kind in self.scheme.kinds() {
            let disc = self.discretization(kind);
            step_count(disc.dt, self.t_final)?;
        }
        if self.snapshot_times.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Config(
                "snapshot times must be sorted ascending".into(),
            ));
        }
        if let Some(&t) = self
            .snapshot_times
            .iter()
            .find(|&&t| !(0.0..=self.t_final).contains(&t))
        {
            return Err(Error::Config(format!(
                "snapshot time {t} lies outside [0, {}]",
                self.t_final
            )));
        }
        self.newton
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        if !(self.blowup_guard > 0.0) {
            return Err(Error::Config(format!(
                "blow-up guard must be positive, got {}",
                self.blowup_guard
            )));
        }
        for (i, bump) in self.initial.bumps.iter().enumerate() {
            bump.validate()
                .map_err(|e| Error::Config(format!("bump {i}: {e}")))?;
            if bump.touches_boundary() {
                warnings.push(format!(
                    "bump {i} (center {}, radius {}) has support touching the boundary",
                    bump.center, bump.radius
                ));
            }
        }
        Ok(warnings)
    }

    pub fn step_count(&self) -> Result<usize> {
        step_count(self.dt, self.t_final)
    }
}

/// `t_final / dt` rounded, provided it is integral to 1e-9 relative.
pub fn step_count(dt: f64, t_final: f64) -> Result<usize> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Config(format!("dt must be positive, got {dt}")));
    }
    let ratio = t_final / dt;
    let n = ratio.round();
    if n < 1.0 || (ratio - n).abs() > 1e-9 * n {
        return Err(Error::Config(format!(
            "t_final = {t_final} is not an integer multiple of dt = {dt}"
        )));
    }
    Ok(n as usize)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub scheme: SchemeKind,
    /// Time of the captured level, `step_index · dt`.
    pub t: f64,
    pub requested_t: f64,
    pub step_index: usize,
    pub u: Vec<f64>,
    pub phi: Option<Vec<f64>>,
}

impl Snapshot {
    /// Difference between the requested and captured times.
    pub fn time_mismatch(&self) -> f64 {
        self.requested_t - self.t
    }
}

/// Newton iteration counts over one run, indexed by step (first step at 0).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct IterationLog {
    pub per_step: Vec<usize>,
}

impl IterationLog {
    pub fn max(&self) -> usize {
        self.per_step.iter().copied().max().unwrap_or(0)
    }

    pub fn mean(&self) -> f64 {
        if self.per_step.is_empty() {
            return 0.0;
        }
        self.per_step.iter().sum::<usize>() as f64 / self.per_step.len() as f64
    }

    /// Largest count among steps `1..=step`.
    pub fn max_through(&self, step: usize) -> usize {
        self.per_step.iter().take(step).copied().max().unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeRun {
    pub scheme: SchemeKind,
    pub grid: Grid1D,
    pub dt: f64,
    pub snapshots: Vec<Snapshot>,
    pub iterations: IterationLog,
    /// Interior values at `t_final`.
    pub final_u: Vec<f64>,
}

/// Nodal forcing `g(x, t)` added to the right-hand side through the scheme's load hook.
pub type Forcing<'a> = &'a (dyn Fn(f64, f64) -> f64 + Sync);

/// Requested snapshot times grouped by the step that captures them.
fn snapshot_plan(times: &[f64], dt: f64) -> BTreeMap<usize, Vec<f64>> {
    let mut plan: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for &t in times {
        plan.entry((t / dt).round() as usize).or_default().push(t);
    }
    plan
}

fn make_stepper(
    kind: SchemeKind,
    disc: &Discretization,
    config: &RunConfig,
) -> Result<Box<dyn Stepper>> {
    Ok(match kind {
        SchemeKind::Gfem => Box::new(GfemScheme::new(
            &disc.grid,
            disc.dt,
            config.params,
            config.newton,
            config.options,
        )?),
        SchemeKind::Fdm => Box::new(FdmScheme::new(
            &disc.grid,
            disc.dt,
            config.params,
            config.newton,
            config.options,
        )?),
    })
}

fn capture(
    kind: SchemeKind,
    config: &RunConfig,
    step: usize,
    dt: f64,
    requested: &[f64],
    u: &[f64],
    out: &mut Vec<Snapshot>,
) {
    let t = step as f64 * dt;
    for &requested_t in requested {
        let phi = config.emit_physical.then(|| {
            let factor = decay_factor(&config.params, t);
            u.iter().map(|v| v * factor).collect()
        });
        out.push(Snapshot {
            scheme: kind,
            t,
            requested_t,
            step_index: step,
            u: u.to_vec(),
            phi,
        });
    }
}

fn check_guard(u: &[f64], guard: f64, step: usize, time: f64) -> Result<()> {
    let peak = u.iter().fold(
        0.0f64,
        |m, v| if v.is_nan() { f64::NAN } else { m.max(v.abs()) },
    );
    if !(peak <= guard) {
        return Err(Error::BlowUp {
            step,
            time,
            value: peak,
            guard,
        });
    }
    Ok(())
}

fn step_failure(e: NewtonError, step: usize, time: f64, guard: f64) -> Error {
    match e {
        NewtonError::NonFinite { .. } => Error::BlowUp {
            step,
            time,
            value: f64::INFINITY,
            guard,
        },
        other => Error::Newton {
            step,
            time,
            source: other,
        },
    }
}

fn accept(outcome: StepOutcome, config: &RunConfig, step: usize, time: f64) -> Result<StepOutcome> {
    if !outcome.report.converged {
        // Stagnation at the rounding level of the iterate, with a tolerance
        // that unit-scale data could meet, means the solution has grown huge.
        let peak = inf_norm(&outcome.u);
        let floor = 64.0 * f64::EPSILON;
        let stagnated = outcome.report.final_update_norm <= floor * peak;
        if !peak.is_finite() || (stagnated && config.newton.epsilon >= floor) {
            return Err(Error::BlowUp {
                step,
                time,
                value: peak,
                guard: config.blowup_guard,
            });
        }
        return Err(Error::NonConvergence {
            step,
            time,
            iterations: outcome.report.iterations,
            update_norm: outcome.report.final_update_norm,
        });
    }
    check_guard(&outcome.u, config.blowup_guard, step, time)?;
    Ok(outcome)
}

/// Run one scheme from the interior vector `u0` to `t_final`.
pub fn run_scheme(
    kind: SchemeKind,
    config: &RunConfig,
    u0: Vec<f64>,
    forcing: Option<Forcing<'_>>,
) -> Result<SchemeRun> {
    let disc = config.discretization(kind);
    let n_steps = step_count(disc.dt, config.t_final)?;
    let mut stepper = make_stepper(kind, &disc, config)?;
    if u0.len() != stepper.dim() {
        return Err(Error::Config(format!(
            "initial vector has {} entries, grid has {} unknowns",
            u0.len(),
            stepper.dim()
        )));
    }
    let plan = snapshot_plan(&config.snapshot_times, disc.dt);
    let nodes = disc.grid.interior_nodes();
    let forcing_load = |stepper: &dyn Stepper, t: f64| {
        forcing.map(|g| {
            let values: Vec<f64> = nodes.iter().map(|&x| g(x, t)).collect();
            stepper.forcing_load(&values)
        })
    };

    let mut snapshots = Vec::new();
    let mut iterations = IterationLog::default();
    if let Some(req) = plan.get(&0) {
        capture(kind, config, 0, disc.dt, req, &u0, &mut snapshots);
    }

    let extra = forcing_load(stepper.as_ref(), 0.0);
    let first = stepper
        .first_step(&u0, extra.as_deref())
        .map_err(|e| step_failure(e, 1, disc.dt, config.blowup_guard))?;
    let first = accept(first, config, 1, disc.dt)?;
    iterations.per_step.push(first.report.iterations);
    if let Some(req) = plan.get(&1) {
        capture(kind, config, 1, disc.dt, req, &first.u, &mut snapshots);
    }

    let mut state = TimeState::new(u0, first.u, 1, disc.dt)?;
    for step in 2..=n_steps {
        let t_n = state.time();
        let extra = forcing_load(stepper.as_ref(), t_n);
        let time = step as f64 * disc.dt;
        let outcome = stepper
            .step(&state, extra.as_deref())
            .map_err(|e| step_failure(e, step, time, config.blowup_guard))?;
        let outcome = accept(outcome, config, step, time)?;
        iterations.per_step.push(outcome.report.iterations);
        state.advance(outcome.u);
        if let Some(req) = plan.get(&step) {
            capture(
                kind,
                config,
                step,
                disc.dt,
                req,
                &state.u_curr,
                &mut snapshots,
            );
        }
    }

    Ok(SchemeRun {
        scheme: kind,
        grid: disc.grid,
        dt: disc.dt,
        snapshots,
        iterations,
        final_u: state.u_curr,
    })
}

/// Snapshots of the sampled initial data only.
pub fn initial_snapshot(config: &RunConfig) -> Snapshot {
    let u = sample_initial(&config.initial, &config.grid);
    Snapshot {
        scheme: SchemeKind::Gfem,
        t: 0.0,
        requested_t: 0.0,
        step_index: 0,
        phi: config.emit_physical.then(|| u.clone()),
        u,
    }
}

/// Run every selected scheme, concurrently when there are two.
pub fn run_detailed(config: &RunConfig) -> Result<Vec<SchemeRun>> {
    config.validate()?;
    let kinds = config.scheme.kinds();
    thread::scope(|scope| {
        let handles: Vec<_> = kinds
            .iter()
            .map(|&kind| {
                scope.spawn(move || {
                    let disc = config.discretization(kind);
                    let u0 = sample_initial(&config.initial, &disc.grid);
                    run_scheme(kind, config, u0, None)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("scheme thread panicked"))
            .collect()
    })
}

/// All snapshots of all selected schemes, scheme by scheme in time order.
pub fn run(config: &RunConfig) -> Result<Vec<Snapshot>> {
    Ok(run_detailed(config)?
        .into_iter()
        .flat_map(|r| r.snapshots)
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationStats {
    pub max: usize,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub times: Vec<f64>,
    pub abs_diff_inf: Vec<f64>,
    pub rel_diff_inf: Vec<f64>,
    /// Largest Newton count of each scheme up to each snapshot time.
    pub gfem_iters_max: Vec<usize>,
    pub fdm_iters_max: Vec<usize>,
    pub gfem_iters: IterationStats,
    pub fdm_iters: IterationStats,
}

/// Run both schemes from one shared initial vector and compare them.
pub fn compare_schemes(config: &RunConfig) -> Result<ComparisonReport> {
    if config.scheme != SchemeSelection::Both {
        return Err(Error::Config("comparison requires scheme = both".into()));
    }
    let gfem = config.discretization(SchemeKind::Gfem);
    let fdm = config.discretization(SchemeKind::Fdm);
    if gfem != fdm {
        return Err(Error::Config(
            "comparison demands identical grid and dt for both schemes".into(),
        ));
    }
    config.validate()?;
    let u0 = sample_initial(&config.initial, &gfem.grid);
    let (g_run, f_run) = thread::scope(|scope| {
        let g = scope.spawn(|| run_scheme(SchemeKind::Gfem, config, u0.clone(), None));
        let f = scope.spawn(|| run_scheme(SchemeKind::Fdm, config, u0.clone(), None));
        (
            g.join().expect("gfem thread panicked"),
            f.join().expect("fdm thread panicked"),
        )
    });
    let (g_run, f_run) = (g_run?, f_run?);
    Ok(comparison_from_runs(&g_run, &f_run))
}

pub fn comparison_from_runs(gfem: &SchemeRun, fdm: &SchemeRun) -> ComparisonReport {
    let mut report = ComparisonReport {
        times: Vec::new(),
        abs_diff_inf: Vec::new(),
        rel_diff_inf: Vec::new(),
        gfem_iters_max: Vec::new(),
        fdm_iters_max: Vec::new(),
        gfem_iters: IterationStats {
            max: gfem.iterations.max(),
            mean: gfem.iterations.mean(),
        },
        fdm_iters: IterationStats {
            max: fdm.iterations.max(),
            mean: fdm.iterations.mean(),
        },
    };
    for (g, f) in gfem.snapshots.iter().zip(&fdm.snapshots) {
        let abs = inf_norm_diff(&g.u, &f.u);
        report.times.push(g.requested_t);
        report.abs_diff_inf.push(abs);
        report
            .rel_diff_inf
            .push(abs / inf_norm(&g.u).max(REL_FLOOR));
        report
            .gfem_iters_max
            .push(gfem.iterations.max_through(g.step_index));
        report
            .fdm_iters_max
            .push(fdm.iterations.max_through(f.step_index));
    }
    report
}

/// A closed-form solution of the transformed equation with its forcing.
pub trait ManufacturedSolution: Sync {
    fn name(&self) -> &'static str;

    fn exact(&self, x: f64, t: f64) -> f64;

    /// `g = u*_tt - u*_xx - (1+t)^(-μ(p-1)/2) |u*|^p`, the last term only when nonlinear.
    fn forcing(&self, x: f64, t: f64, params: &ModelParams, nonlinear: bool) -> f64;
}

/// `u*(x, t) = sin(πx) cos(πt)`; zero on the boundary, zero initial velocity.
#[derive(Debug, Clone, Copy, Default)]
pub struct StandingWave;

impl ManufacturedSolution for StandingWave {
    fn name(&self) -> &'static str {
        "standing-wave"
    }

    fn exact(&self, x: f64, t: f64) -> f64 {
        use std::f64::consts::PI;
        (PI * x).sin() * (PI * t).cos()
    }

    fn forcing(&self, x: f64, t: f64, params: &ModelParams, nonlinear: bool) -> f64 {
        use std::f64::consts::PI;
        let u = self.exact(x, t);
        let u_tt = -PI * PI * u;
        let u_xx = -PI * PI * u;
        let source = if nonlinear {
            source_coefficient(params, t) * u.abs().powf(params.p())
        } else {
            0.0
        };
        u_tt - u_xx - source
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroSolution;

impl ManufacturedSolution for ZeroSolution {
    fn name(&self) -> &'static str {
        "zero"
    }

    fn exact(&self, _x: f64, _t: f64) -> f64 {
        0.0
    }

    fn forcing(&self, _x: f64, _t: f64, _params: &ModelParams, _nonlinear: bool) -> f64 {
        0.0
    }
}

pub fn manufactured_by_name(name: &str) -> Option<Box<dyn ManufacturedSolution>> {
    match name {
        "standing-wave" => Some(Box::new(StandingWave)),
        "zero" => Some(Box::new(ZeroSolution)),
        _ => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Refinement {
    /// Halve `h` and `dt` together (fixed mesh ratio).
    Joint,
    /// Halve `dt` only.
    Time,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MmsLevel {
    pub h: f64,
    pub dt: f64,
    pub error_inf: f64,
    /// `log₂(e_{k-1}/e_k)`; absent on the coarsest level.
    pub observed_order: Option<f64>,
}

/// Accepted range for the finest observed order.
pub fn order_threshold(theta: Theta, refinement: Refinement) -> (f64, Option<f64>) {
    match (theta, refinement) {
        (Theta::CrankNicolson, _) => (1.8, None),
        (Theta::Implicit, Refinement::Time) => (0.8, Some(1.3)),
        (Theta::Implicit, Refinement::Joint) => (0.8, None),
    }
}

/// Convergence study against a manufactured solution for one scheme.
///
/// Level `k` uses `dt₀/2ᵏ` and, under joint refinement, `s₀·2ᵏ` cells.
/// Levels run concurrently.
pub fn mms_study(
    base: &RunConfig,
    kind: SchemeKind,
    solution: &dyn ManufacturedSolution,
    levels: usize,
    refinement: Refinement,
) -> Result<Vec<MmsLevel>> {
    if levels < 3 {
        return Err(Error::Config(format!(
            "a convergence study needs at least 3 levels, got {levels}"
        )));
    }
    let base_disc = base.discretization(kind);
    let configs: Vec<RunConfig> = (0..levels)
        .map(|k| {
            let factor = 1usize << k;
            let cells = match refinement {
                Refinement::Joint => base_disc.grid.n_cells() * factor,
                Refinement::Time => base_disc.grid.n_cells(),
            };
            let mut cfg = base.clone();
            cfg.grid = Grid1D::new(cells)?;
            cfg.dt = base_disc.dt / factor as f64;
            cfg.overrides.clear();
            cfg.snapshot_times = vec![];
            cfg.scheme = match kind {
                SchemeKind::Gfem => SchemeSelection::Gfem,
                SchemeKind::Fdm => SchemeSelection::Fdm,
            };
            cfg.validate()?;
            Ok(cfg)
        })
        .collect::<Result<_>>()?;

    let nonlinear = base.options.nonlinear;
    let params = base.params;
    let forcing = move |x: f64, t: f64| solution.forcing(x, t, &params, nonlinear);
    let errors: Vec<Result<(f64, f64, f64)>> = thread::scope(|scope| {
        let handles: Vec<_> = configs
            .iter()
            .map(|cfg| {
                let forcing = &forcing;
                scope.spawn(move || {
                    let u0: Vec<f64> = cfg
                        .grid
                        .interior_nodes()
                        .iter()
                        .map(|&x| solution.exact(x, 0.0))
                        .collect();
                    let run = run_scheme(kind, cfg, u0, Some(forcing))?;
                    let t_end = cfg.step_count()? as f64 * cfg.dt;
                    let err = cfg
                        .grid
                        .interior_nodes()
                        .iter()
                        .zip(&run.final_u)
                        .fold(0.0f64, |m, (&x, &u)| {
                            m.max((u - solution.exact(x, t_end)).abs())
                        });
                    Ok((cfg.grid.dx(), cfg.dt, err))
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("mms level thread panicked"))
            .collect()
    });

    let mut rows: Vec<MmsLevel> = Vec::with_capacity(levels);
    for result in errors {
        let (h, dt, error_inf) = result?;
        let observed_order = rows.last().map(|prev| (prev.error_inf / error_inf).log2());
        rows.push(MmsLevel {
            h,
            dt,
            error_inf,
            observed_order,
        });
    }
    Ok(rows)
}
