//! Command-line front end: `run`, `compare`, `mms` and `presets`.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::{presets, ConfigFile};
use crate::driver::{
    compare_schemes, initial_snapshot, manufactured_by_name, mms_study, order_threshold, run,
    ComparisonReport, MmsLevel, RunConfig, Snapshot,
};
use crate::error::{Error, Result};
use crate::model::Grid1D;

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NEWTON: i32 = 3;
pub const EXIT_BLOWUP: i32 = 4;
pub const EXIT_MMS: i32 = 5;

#[derive(Debug, Parser)]
#[command(
    name = "semiwave",
    version,
    about = "Damped semilinear wave equation solver (GFEM and FDM)"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate and write one CSV per snapshot plus a manifest.
    Run(OutputArgs),
    /// Run both schemes and report their discrepancy.
    Compare(OutputArgs),
    /// Convergence study against a manufactured solution.
    Mms(MmsArgs),
    /// List the built-in presets.
    Presets,
}

#[derive(Debug, Args)]
struct SourceArgs {
    /// TOML configuration file.
    #[arg(long, value_name = "PATH", conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in configuration (see `presets`).
    #[arg(long, value_name = "NAME")]
    preset: Option<String>,
    /// Override a value, e.g. `--set model.theta=1` or `--set initial.0.amplitude=0.1`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Debug, Args)]
struct OutputArgs {
    #[command(flatten)]
    source: SourceArgs,
    /// Output directory (created if missing).
    #[arg(long, value_name = "DIR", default_value = ".")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct MmsArgs {
    #[command(flatten)]
    source: SourceArgs,
    /// Number of refinement levels (at least 3).
    #[arg(long, value_name = "N")]
    levels: Option<usize>,
    /// Also write `mms_<scheme>.csv` into this directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

/// Parse `args` (including the program name) and execute; returns the exit status.
pub fn main_with_args<I: IntoIterator<Item = OsString>>(args: I) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let outcome = match cli.command {
        Command::Run(args) => cmd_run(&args),
        Command::Compare(args) => cmd_compare(&args),
        Command::Mms(args) => cmd_mms(&args),
        Command::Presets => {
            print!("{}", presets_listing());
            Ok(EXIT_OK)
        }
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidParam(_) | Error::Config(_) => EXIT_CONFIG,
        Error::Linalg(_) | Error::Newton { .. } | Error::NonConvergence { .. } => EXIT_NEWTON,
        Error::BlowUp { .. } => EXIT_BLOWUP,
        Error::Io(_) => EXIT_IO,
    }
}

fn presets_listing() -> String {
    let all = presets();
    let width = all.iter().map(|p| p.name.len()).max().unwrap_or(0);
    all.iter().fold(String::new(), |mut s, p| {
        let _ = writeln!(s, "{:width$}  {}", p.name, p.summary);
        s
    })
}

fn load(source: &SourceArgs) -> Result<ConfigFile> {
    match (&source.config, &source.preset) {
        (Some(path), _) => ConfigFile::load(path, &source.overrides),
        (None, Some(name)) => {
            let preset = crate::config::preset(name)
                .ok_or_else(|| Error::Config(format!("unknown preset `{name}`")))?;
            ConfigFile::parse_with_overrides(&preset.toml, &source.overrides)
        }
        (None, None) => ConfigFile::parse_with_overrides("", &source.overrides),
    }
}

fn resolve(source: &SourceArgs) -> Result<(ConfigFile, RunConfig)> {
    let file = load(source)?;
    let (config, warnings) = file.to_run_config()?;
    for w in warnings {
        eprintln!("warning: {w}");
    }
    Ok((file, config))
}

fn write_manifest(dir: &Path, file: &ConfigFile, config: &RunConfig) -> Result<()> {
    let manifest = ConfigFile::from_run_config(config, file.mms.clone()).to_toml();
    fs::write(dir.join("manifest.toml"), manifest)?;
    Ok(())
}

fn cmd_run(args: &OutputArgs) -> Result<i32> {
    let (file, config) = resolve(&args.source)?;
    fs::create_dir_all(&args.out)?;
    write_manifest(&args.out, &file, &config)?;

    if config.initial_only {
        let snap = initial_snapshot(&config);
        let path = args.out.join("u_initial.csv");
        write_snapshot_csv(&path, &config.grid, &snap)?;
        println!("wrote {}", path.display());
        return Ok(EXIT_OK);
    }

    for snap in run(&config)? {
        let grid = config.discretization(snap.scheme).grid;
        let path = args.out.join(snapshot_file_name(&snap));
        write_snapshot_csv(&path, &grid, &snap)?;
        if snap.time_mismatch() != 0.0 {
            eprintln!(
                "warning: {} snapshot requested at t = {} captured at t = {} (step {})",
                snap.scheme, snap.requested_t, snap.t, snap.step_index
            );
        }
        println!("wrote {}", path.display());
    }
    Ok(EXIT_OK)
}

fn cmd_compare(args: &OutputArgs) -> Result<i32> {
    let (file, config) = resolve(&args.source)?;
    let report = compare_schemes(&config)?;
    fs::create_dir_all(&args.out)?;
    write_manifest(&args.out, &file, &config)?;
    let table = comparison_table(&report);
    fs::write(args.out.join("comparison.txt"), &table)?;
    fs::write(args.out.join("comparison.csv"), comparison_csv(&report))?;
    print!("{table}");
    Ok(EXIT_OK)
}

fn cmd_mms(args: &MmsArgs) -> Result<i32> {
    let (file, config) = resolve(&args.source)?;
    let section = file.mms();
    let levels = args.levels.unwrap_or(section.levels);
    let solution = manufactured_by_name(&section.solution).ok_or_else(|| {
        Error::Config(format!(
            "unknown manufactured solution `{}`",
            section.solution
        ))
    })?;
    let (lo, hi) = order_threshold(config.params.theta(), section.refine);

    let mut all_pass = true;
    for kind in config.scheme.kinds() {
        let rows = mms_study(&config, kind, solution.as_ref(), levels, section.refine)?;
        let finest = rows
            .last()
            .and_then(|r| r.observed_order)
            .unwrap_or(f64::NAN);
        let pass = finest >= lo && hi.is_none_or(|hi| finest <= hi);
        all_pass &= pass;
        let range = match hi {
            Some(hi) => format!("[{lo}, {hi}]"),
            None => format!(">= {lo}"),
        };
        println!(
            "{kind}: {} theta = {}, {:?} refinement",
            solution.name(),
            config.params.theta(),
            section.refine
        );
        print!("{}", mms_table(&rows));
        println!(
            "finest order {finest:.4}, required {range}: {}\n",
            if pass { "PASS" } else { "FAIL" }
        );
        if let Some(dir) = &args.out {
            fs::create_dir_all(dir)?;
            fs::write(dir.join(format!("mms_{kind}.csv")), mms_csv(&rows))?;
        }
    }
    std::io::stdout().flush()?;
    Ok(if all_pass { EXIT_OK } else { EXIT_MMS })
}

pub fn snapshot_file_name(snap: &Snapshot) -> String {
    format!("u_{}_t{:.3}.csv", snap.scheme, snap.requested_t)
}

/// Shortest-exact representation is not required; 17 significant digits
/// always round-trip an `f64`.
fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// `x,u[,phi]` rows for every node including the two zero boundary rows.
pub fn snapshot_csv(grid: &Grid1D, snap: &Snapshot) -> String {
    let nodes = grid.nodes();
    let n = nodes.len();
    assert_eq!(snap.u.len() + 2, n, "snapshot does not match grid");
    let value = |v: &[f64], i: usize| if i == 0 || i == n - 1 { 0.0 } else { v[i - 1] };
    let mut out = String::with_capacity(n * 72);
    out.push_str(if snap.phi.is_some() {
        "x,u,phi\n"
    } else {
        "x,u\n"
    });
    for (i, &x) in nodes.iter().enumerate() {
        let _ = write!(out, "{},{}", num(x), num(value(&snap.u, i)));
        if let Some(phi) = &snap.phi {
            let _ = write!(out, ",{}", num(value(phi, i)));
        }
        out.push('\n');
    }
    out
}

pub fn write_snapshot_csv(path: &Path, grid: &Grid1D, snap: &Snapshot) -> Result<()> {
    fs::write(path, snapshot_csv(grid, snap))?;
    Ok(())
}

pub fn comparison_table(report: &ComparisonReport) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:>10}  {:>24}  {:>24}  {:>10}  {:>10}",
        "time", "abs_diff_inf", "rel_diff_inf", "gfem_iters", "fdm_iters"
    );
    for i in 0..report.times.len() {
        let _ = writeln!(
            s,
            "{:>10.4}  {:>24}  {:>24}  {:>10}  {:>10}",
            report.times[i],
            num(report.abs_diff_inf[i]),
            num(report.rel_diff_inf[i]),
            report.gfem_iters_max[i],
            report.fdm_iters_max[i]
        );
    }
    let _ = writeln!(
        s,
        "newton iterations per step: gfem max {} mean {:.3}, fdm max {} mean {:.3}",
        report.gfem_iters.max, report.gfem_iters.mean, report.fdm_iters.max, report.fdm_iters.mean
    );
    s
}

pub fn comparison_csv(report: &ComparisonReport) -> String {
    let mut s = String::from("time,abs_diff,rel_diff,gfem_iters_max,fdm_iters_max\n");
    for i in 0..report.times.len() {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            num(report.times[i]),
            num(report.abs_diff_inf[i]),
            num(report.rel_diff_inf[i]),
            report.gfem_iters_max[i],
            report.fdm_iters_max[i]
        );
    }
    s
}

pub fn mms_table(rows: &[MmsLevel]) -> String {
    let mut s = format!(
        "{:>12}  {:>12}  {:>24}  {:>8}\n",
        "h", "dt", "error_inf", "order"
    );
    for r in rows {
        let order = r
            .observed_order
            .map_or("-".to_string(), |o| format!("{o:.4}"));
        let _ = writeln!(
            s,
            "{:>12.6e}  {:>12.6e}  {:>24}  {:>8}",
            r.h,
            r.dt,
            num(r.error_inf),
            order
        );
    }
    s
}

fn mms_csv(rows: &[MmsLevel]) -> String {
    let mut s = String::from("h,dt,error_inf,order\n");
    for r in rows {
        let order = r.observed_order.map_or(String::new(), num);
        let _ = writeln!(
            s,
            "{},{},{},{}",
            num(r.h),
            num(r.dt),
            num(r.error_inf),
            order
        );
    }
    s
}
