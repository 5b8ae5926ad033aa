//! Run configuration files, `key=value` overrides and built-in presets.
//!
//! Configurations are TOML documents with the sections `[model]`, `[grid]`,
//! `[time]`, repeated `[[initial]]` bump blocks, `[newton]`, `[output]`,
//! and optionally `[mms]`, `[gfem]` and `[fdm]`. Unknown keys are rejected.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::driver::{Discretization, Refinement, RunConfig, SchemeSelection, DEFAULT_BLOWUP_GUARD};
use crate::error::{Error, Result};
use crate::initcond::{BumpSpec, InitialData};
use crate::model::{Grid1D, ModelParams};
use crate::newton::NewtonConfig;
use crate::scheme::{SchemeKind, SourceTime, StepOptions};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub time: TimeSection,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub initial: Vec<BumpSpecSection>,
    #[serde(default)]
    pub newton: NewtonSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mms: Option<MmsSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gfem: Option<SchemeOverride>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fdm: Option<SchemeOverride>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    pub scheme: SchemeSelection,
    pub mu: f64,
    pub p: f64,
    pub theta: f64,
    /// When absent, `ν²` follows from `δ = 1`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nu_squared: Option<f64>,
    pub nonlinear: bool,
    pub source_time: SourceTime,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            scheme: SchemeSelection::Both,
            mu: 10.0,
            p: 3.0,
            theta: 0.5,
            nu_squared: None,
            nonlinear: true,
            source_time: SourceTime::Current,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_cells: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dx: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimeSection {
    pub dt: f64,
    pub t_final: f64,
}

impl Default for TimeSection {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            t_final: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BumpSpecSection {
    pub amplitude: f64,
    pub center: f64,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NewtonSection {
    pub epsilon: f64,
    /// Defaults to the grid spacing.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fd_step: Option<f64>,
    pub max_iters: usize,
    pub reuse_jacobian: bool,
}

impl Default for NewtonSection {
    fn default() -> Self {
        let d = NewtonConfig::default();
        Self {
            epsilon: d.epsilon,
            fd_step: None,
            max_iters: d.max_iters,
            reuse_jacobian: d.reuse_jacobian,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    /// Defaults to `[t_final]`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snapshots: Option<Vec<f64>>,
    pub emit_physical: bool,
    pub initial_only: bool,
    pub blowup_guard: f64,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            snapshots: None,
            emit_physical: true,
            initial_only: false,
            blowup_guard: DEFAULT_BLOWUP_GUARD,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MmsSection {
    pub solution: String,
    pub refine: Refinement,
    pub levels: usize,
}

impl Default for MmsSection {
    fn default() -> Self {
        Self {
            solution: "standing-wave".into(),
            refine: Refinement::Joint,
            levels: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeOverride {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_cells: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dx: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
}

fn config_err(e: impl std::fmt::Display) -> Error {
    Error::Config(e.to_string())
}

fn resolve_grid(n_cells: Option<usize>, dx: Option<f64>) -> Result<Grid1D> {
    let grid = match (n_cells, dx) {
        (Some(n), None) => Grid1D::new(n),
        (None, Some(dx)) => Grid1D::from_spacing(dx),
        (Some(n), Some(dx)) => {
            let grid = Grid1D::new(n).map_err(config_err)?;
            if (grid.dx() - dx).abs() > 1e-9 * dx {
                return Err(Error::Config(format!(
                    "grid.n_cells = {n} and grid.dx = {dx} disagree"
                )));
            }
            Ok(grid)
        }
        (None, None) => Grid1D::from_spacing(2e-3),
    };
    grid.map_err(config_err)
}

impl ConfigFile {
    /// Parse a document; errors name the offending line.
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(config_err)
    }

    /// Parse a document and apply `section.key=value` overrides on top.
    pub fn parse_with_overrides(text: &str, overrides: &[String]) -> Result<Self> {
        let parsed = Self::parse(text)?;
        if overrides.is_empty() {
            return Ok(parsed);
        }
        let mut table: toml::Table = text.parse().map_err(config_err)?;
        for item in overrides {
            apply_override(&mut table, item)?;
        }
        toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(format!("after overrides: {e}")))
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse_with_overrides(&text, overrides).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }

    pub fn mms(&self) -> MmsSection {
        self.mms.clone().unwrap_or_default()
    }

    /// Resolve into a validated [`RunConfig`]; returns it with any warnings.
    pub fn to_run_config(&self) -> Result<(RunConfig, Vec<String>)> {
        let m = &self.model;
        let params = match m.nu_squared {
            Some(nu2) => ModelParams::with_nu_squared(m.mu, nu2, m.p, m.theta),
            None => ModelParams::delta_one(m.mu, m.p, m.theta),
        }
        .map_err(config_err)?;
        let grid = resolve_grid(self.grid.n_cells, self.grid.dx)?;

        let bumps = self
            .initial
            .iter()
            .enumerate()
            .map(|(i, b)| {
                BumpSpec::new(b.amplitude, b.center, b.radius)
                    .map_err(|e| Error::Config(format!("initial[{i}]: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;

        let mut overrides = BTreeMap::new();
        for (kind, section) in [(SchemeKind::Gfem, &self.gfem), (SchemeKind::Fdm, &self.fdm)] {
            if let Some(o) = section {
                let grid = if o.n_cells.is_some() || o.dx.is_some() {
                    resolve_grid(o.n_cells, o.dx)?
                } else {
                    grid.clone()
                };
                overrides.insert(
                    kind,
                    Discretization {
                        grid,
                        dt: o.dt.unwrap_or(self.time.dt),
                    },
                );
            }
        }

        let config = RunConfig {
            scheme: m.scheme,
            params,
            dt: self.time.dt,
            t_final: self.time.t_final,
            initial: InitialData::new(bumps),
            snapshot_times: self
                .output
                .snapshots
                .clone()
                .unwrap_or_else(|| vec![self.time.t_final]),
            newton: NewtonConfig {
                epsilon: self.newton.epsilon,
                fd_step: self.newton.fd_step.unwrap_or(grid.dx()),
                max_iters: self.newton.max_iters,
                reuse_jacobian: self.newton.reuse_jacobian,
            },
            emit_physical: self.output.emit_physical,
            options: StepOptions {
                nonlinear: m.nonlinear,
                source_time: m.source_time,
            },
            blowup_guard: self.output.blowup_guard,
            initial_only: self.output.initial_only,
            overrides,
            grid,
        };
        let warnings = config.validate()?;
        Ok((config, warnings))
    }

    /// Fully resolved document describing `config`, suitable as a manifest.
    pub fn from_run_config(config: &RunConfig, mms: Option<MmsSection>) -> Self {
        let over = |kind| {
            config
                .overrides
                .get(&kind)
                .map(|d: &Discretization| SchemeOverride {
                    n_cells: Some(d.grid.n_cells()),
                    dx: None,
                    dt: Some(d.dt),
                })
        };
        Self {
            model: ModelSection {
                scheme: config.scheme,
                mu: config.params.mu(),
                p: config.params.p(),
                theta: config.params.theta().value(),
                nu_squared: Some(config.params.nu_squared()),
                nonlinear: config.options.nonlinear,
                source_time: config.options.source_time,
            },
            grid: GridSection {
                n_cells: Some(config.grid.n_cells()),
                dx: None,
            },
            time: TimeSection {
                dt: config.dt,
                t_final: config.t_final,
            },
            initial: config
                .initial
                .bumps
                .iter()
                .map(|b| BumpSpecSection {
                    amplitude: b.amplitude,
                    center: b.center,
                    radius: b.radius,
                })
                .collect(),
            newton: NewtonSection {
                epsilon: config.newton.epsilon,
                fd_step: Some(config.newton.fd_step),
                max_iters: config.newton.max_iters,
                reuse_jacobian: config.newton.reuse_jacobian,
            },
            output: OutputSection {
                snapshots: Some(config.snapshot_times.clone()),
                emit_physical: config.emit_physical,
                initial_only: config.initial_only,
                blowup_guard: config.blowup_guard,
            },
            mms,
            gfem: over(SchemeKind::Gfem),
            fdm: over(SchemeKind::Fdm),
        }
    }
}

/// Apply one `a.b.c=value` override. Numeric path segments index arrays;
/// an index equal to the array length appends a new table.
pub fn apply_override(table: &mut toml::Table, item: &str) -> Result<()> {
    let (path, raw) = item
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{item}` is not key=value")))?;
    let path: Vec<&str> = path.trim().split('.').collect();
    if path.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!(
            "override `{item}` has an empty key segment"
        )));
    }
    let mut root = toml::Value::Table(std::mem::take(table));
    let outcome = set_path(&mut root, &path, parse_value(raw.trim()))
        .map_err(|msg| Error::Config(format!("override `{item}`: {msg}")));
    if let toml::Value::Table(t) = root {
        *table = t;
    }
    outcome
}

fn set_path(
    node: &mut toml::Value,
    path: &[&str],
    value: toml::Value,
) -> std::result::Result<(), String> {
    let (segment, rest) = path.split_first().expect("non-empty path");
    let slot = match node {
        toml::Value::Table(t) => {
            let next_is_index = rest.first().is_some_and(|s| s.parse::<usize>().is_ok());
            t.entry(segment.to_string()).or_insert_with(|| {
                if next_is_index {
                    toml::Value::Array(Vec::new())
                } else {
                    toml::Value::Table(toml::Table::new())
                }
            })
        }
        toml::Value::Array(a) => {
            let idx: usize = segment
                .parse()
                .map_err(|_| format!("`{segment}` is not an array index"))?;
            if idx == a.len() {
                a.push(toml::Value::Table(toml::Table::new()));
            }
            a.get_mut(idx)
                .ok_or_else(|| format!("index {idx} out of range"))?
        }
        _ => return Err(format!("`{segment}` is not inside a table")),
    };
    if rest.is_empty() {
        *slot = value;
        Ok(())
    } else {
        set_path(slot, rest, value)
    }
}

/// TOML literal when it parses as one, otherwise a bare string.
fn parse_value(raw: &str) -> toml::Value {
    format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

/// A named built-in configuration.
#[derive(Debug, Clone)]
pub struct Preset {
    pub name: String,
    pub summary: String,
    pub toml: String,
}

impl Preset {
    pub fn config(&self) -> Result<ConfigFile> {
        ConfigFile::parse(&self.toml)
    }
}

const SINGLE_BUMP: &str = "
[[initial]]
amplitude = 0.05
center = 0.5
radius = 0.5
";

const TWO_BUMPS: &str = "
[[initial]]
amplitude = 0.05
center = 0.4
radius = 0.2

[[initial]]
amplitude = 0.05
center = 0.2
radius = 0.2
";

fn figure_toml(theta: f64, t: f64, initial_only: bool, bumps: &str) -> String {
    let snapshot = if initial_only { 0.0 } else { t };
    format!(
        "[model]
scheme = \"both\"
mu = 10.0
p = 3.0
theta = {theta:?}

[grid]
dx = 0.002

[time]
dt = 0.001
t_final = {t:?}

[output]
snapshots = [{snapshot:?}]
initial_only = {initial_only}
{bumps}"
    )
}

fn mms_toml(theta: f64, n_cells: usize, dt: f64, refine: &str) -> String {
    format!(
        "[model]
scheme = \"both\"
mu = 10.0
p = 3.0
theta = {theta:?}

[grid]
n_cells = {n_cells}

[time]
dt = {dt:?}
t_final = 1.0

[mms]
solution = \"standing-wave\"
refine = \"{refine}\"
levels = 4
"
    )
}

/// Every built-in preset, in listing order.
pub fn presets() -> Vec<Preset> {
    let mut out = Vec::new();
    let mut push = |name: String, summary: String, toml: String| {
        out.push(Preset {
            name,
            summary,
            toml,
        })
    };
    push(
        "paper-fig1".into(),
        "initial data 0.05 B(x; 0.5, 0.5)".into(),
        figure_toml(0.5, 1.0, true, SINGLE_BUMP),
    );
    for (fig, t) in [(2, 0.3), (3, 0.8), (4, 1.0)] {
        push(
            format!("paper-fig{fig}"),
            format!("single bump, Crank-Nicolson, t = {t}"),
            figure_toml(0.5, t, false, SINGLE_BUMP),
        );
        push(
            format!("paper-fig{fig}-implicit"),
            format!("single bump, implicit, t = {t}"),
            figure_toml(1.0, t, false, SINGLE_BUMP),
        );
    }
    push(
        "paper-fig5".into(),
        "initial data 0.05 B(x; 0.4, 0.2) + 0.05 B(x; 0.2, 0.2)".into(),
        figure_toml(0.5, 1.0, true, TWO_BUMPS),
    );
    for (fig, t) in [(6, 0.3), (7, 0.8), (8, 1.0), (9, 5.0)] {
        push(
            format!("paper-fig{fig}"),
            format!("two bumps, Crank-Nicolson, t = {t}"),
            figure_toml(0.5, t, false, TWO_BUMPS),
        );
    }
    push(
        "mms-crank-nicolson".into(),
        "standing-wave convergence study, theta = 1/2, joint refinement".into(),
        mms_toml(0.5, 10, 0.05, "joint"),
    );
    push(
        "mms-implicit-time".into(),
        "standing-wave convergence study, theta = 1, time-only refinement".into(),
        mms_toml(1.0, 200, 0.05, "time"),
    );
    out
}

pub fn preset(name: &str) -> Option<Preset> {
    presets().into_iter().find(|p| p.name == name)
}
