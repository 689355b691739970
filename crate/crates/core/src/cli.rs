//! Command-line front end.
//!
//! Settings resolve as flags, then the `key = value` config file, then the
//! built-in defaults. Every run writes its tables and a JSON summary into the
//! output directory; a failed run still writes what it has, flagged `failed`.

use std::fmt::Display;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::driver::{builtin_target, HistoryRow, Mcal, McalConfig, RunReport, RunStatus};
use crate::error::{Error, Result};
use crate::fem1d::Mesh1D;
use crate::moments::MomentFamily;
use crate::pair_space::{Kernel, PairSystem};
use crate::sdp::{self, SdpOptions};
use crate::selftest::{self, Suite};

pub const SUMMARY_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Parser)]
#[command(
    name = "mcal",
    version,
    about = "Moment-constrained Lieb functional for two fermions in 1D"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
#[allow(clippy::large_enum_variant)]
pub enum Command {
    /// Run the column-generation benchmark and write its artifacts.
    Run(RunArgs),
    /// Run one module's oracle checks and print a pass/fail table.
    Selftest {
        #[arg(value_enum)]
        kind: SuiteArg,
    },
    /// Write the built-in target density and its hat moments.
    Density(DensityArgs),
    /// Solve an SDP stored in the plain-text debug format.
    Sdp(SdpArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SuiteArg {
    Sdp,
    Eigen,
    Sparsify,
    Fem,
}

impl From<SuiteArg> for Suite {
    fn from(s: SuiteArg) -> Self {
        match s {
            SuiteArg::Sdp => Suite::Sdp,
            SuiteArg::Eigen => Suite::Eigen,
            SuiteArg::Sparsify => Suite::Sparsify,
            SuiteArg::Fem => Suite::Fem,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelArg {
    Softcore,
    Exact,
}

#[derive(Debug, Default, Args)]
pub struct RunArgs {
    /// Half width of the domain (-L, L).
    #[arg(long = "L")]
    pub l: Option<f64>,
    /// Number of mesh intervals.
    #[arg(long = "D", value_parser = clap::value_parser!(u64).range(3..))]
    pub d: Option<u64>,
    /// Number of hat moment functions, at least 2.
    #[arg(long = "M", value_parser = clap::value_parser!(u64).range(2..))]
    pub m: Option<u64>,
    /// Eigenpairs added to the pool per iteration.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub qvec: Option<u64>,
    #[arg(long, value_enum)]
    pub kernel: Option<KernelArg>,
    /// Softening length of the softcore kernel.
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub tol_sdp: Option<f64>,
    #[arg(long)]
    pub tol_stop: Option<f64>,
    #[arg(long)]
    pub drop_tol: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "mcal_out")]
    pub out: PathBuf,
    /// Plain `key = value` file; keys are the flag names without dashes.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Cap on worker threads.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Nodal target density, one value per mesh node.
    #[arg(long)]
    pub density_file: Option<PathBuf>,
    /// Continue from a checkpoint written by an earlier run.
    #[arg(long)]
    pub resume: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DensityArgs {
    #[arg(long = "L", default_value_t = 10.0)]
    pub l: f64,
    #[arg(long = "D", default_value_t = 100, value_parser = clap::value_parser!(u64).range(3..))]
    pub d: u64,
    #[arg(long = "M", default_value_t = 20, value_parser = clap::value_parser!(u64).range(2..))]
    pub m: u64,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SdpArgs {
    pub file: PathBuf,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[arg(long, default_value_t = 200)]
    pub max_iter: usize,
}

/// Resolved settings as echoed into `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    #[serde(rename = "L")]
    pub l: f64,
    #[serde(rename = "D")]
    pub d: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub qvec: usize,
    pub kernel: KernelArg,
    pub eps: Option<f64>,
    pub tol_sdp: f64,
    pub tol_stop: f64,
    pub drop_tol: f64,
    pub max_iters: usize,
    pub seed: u64,
    pub threads: Option<usize>,
    pub density_file: Option<PathBuf>,
    pub config_file: Option<PathBuf>,
    pub resume: Option<PathBuf>,
}

impl ConfigEcho {
    pub fn to_config(&self) -> McalConfig {
        McalConfig {
            half_width: self.l,
            intervals: self.d,
            moments: self.m,
            q_vec: self.qvec,
            kernel: match self.kernel {
                KernelArg::Softcore => Kernel::SoftCoulomb {
                    eps: self.eps.unwrap_or(1.0),
                },
                KernelArg::Exact => Kernel::Coulomb,
            },
            tol_sdp: self.tol_sdp,
            tol_stop: self.tol_stop,
            drop_tol: self.drop_tol,
            max_iters: self.max_iters,
            seed: self.seed,
            density_file: self.density_file.clone(),
            ..McalConfig::default()
        }
    }
}

/// Contents of `summary.json`. Unknown fields are ignored on read, so newer
/// writers stay readable.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Summary {
    pub schema_version: u32,
    pub config: ConfigEcho,
    pub status: String,
    pub error: Option<String>,
    pub iterations: usize,
    /// Last primal value `F̃`, the certified upper bound.
    pub upper_bound: Option<f64>,
    /// Last dual value `F^n`.
    pub dual_value: Option<f64>,
    pub lower_bound: Option<f64>,
    pub bracket_width: Option<f64>,
    pub final_defect: Option<f64>,
    pub pool_size: usize,
    pub max_moment_residual: Option<f64>,
    pub wall_time: f64,
    pub seed: u64,
}

pub fn read_summary(path: &Path) -> Result<Summary> {
    Ok(serde_json::from_reader(File::open(path)?)?)
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

/// Entry point for the binary; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match cli.command {
        Command::Run(args) => cmd_run(&args),
        Command::Selftest { kind } => cmd_selftest(kind.into()),
        Command::Density(args) => report(cmd_density(&args)),
        Command::Sdp(args) => report(cmd_sdp(&args)),
    }
}

fn report(r: Result<()>) -> i32 {
    match r {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("cannot parse `{value}` for `{key}`")))
}

/// Fills every flag left unset from the config file.
pub fn apply_config_file(args: &mut RunArgs, text: &str) -> Result<()> {
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key = value", lineno + 1)))?;
        let key = key.trim().replace('-', "_");
        let value = value.trim();
        fn set<T>(slot: &mut Option<T>, v: Result<T>) -> Result<()> {
            if slot.is_none() {
                *slot = Some(v?);
            }
            Ok(())
        }
        match key.as_str() {
            "L" => set(&mut args.l, parse_value(&key, value))?,
            "D" => set(&mut args.d, parse_value(&key, value))?,
            "M" => set(&mut args.m, parse_value(&key, value))?,
            "qvec" => set(&mut args.qvec, parse_value(&key, value))?,
            "kernel" => set(
                &mut args.kernel,
                KernelArg::from_str(value, true).map_err(|_| Error::Config(format!("unknown kernel `{value}`"))),
            )?,
            "eps" => set(&mut args.eps, parse_value(&key, value))?,
            "tol_sdp" => set(&mut args.tol_sdp, parse_value(&key, value))?,
            "tol_stop" => set(&mut args.tol_stop, parse_value(&key, value))?,
            "drop_tol" => set(&mut args.drop_tol, parse_value(&key, value))?,
            "max_iters" => set(&mut args.max_iters, parse_value(&key, value))?,
            "seed" => set(&mut args.seed, parse_value(&key, value))?,
            "threads" => set(&mut args.threads, parse_value(&key, value))?,
            "density_file" => set(&mut args.density_file, Ok(PathBuf::from(value)))?,
            other => return Err(Error::Config(format!("unknown key `{other}`"))),
        }
    }
    Ok(())
}

/// Flags over config file over defaults.
pub fn resolve(args: &RunArgs) -> Result<ConfigEcho> {
    let mut merged = RunArgs {
        l: args.l,
        d: args.d,
        m: args.m,
        qvec: args.qvec,
        kernel: args.kernel,
        eps: args.eps,
        tol_sdp: args.tol_sdp,
        tol_stop: args.tol_stop,
        drop_tol: args.drop_tol,
        max_iters: args.max_iters,
        seed: args.seed,
        threads: args.threads,
        density_file: args.density_file.clone(),
        ..RunArgs::default()
    };
    if let Some(path) = &args.config {
        apply_config_file(&mut merged, &std::fs::read_to_string(path)?)?;
    }
    let d = McalConfig::default();
    let kernel = merged.kernel.unwrap_or(KernelArg::Softcore);
    let default_eps = match d.kernel {
        Kernel::SoftCoulomb { eps } => eps,
        _ => 1.0,
    };
    let echo = ConfigEcho {
        l: merged.l.unwrap_or(d.half_width),
        d: merged.d.map_or(d.intervals, |v| v as usize),
        m: merged.m.map_or(d.moments, |v| v as usize),
        qvec: merged.qvec.map_or(d.q_vec, |v| v as usize),
        kernel,
        eps: match kernel {
            KernelArg::Softcore => Some(merged.eps.unwrap_or(default_eps)),
            KernelArg::Exact => None,
        },
        tol_sdp: merged.tol_sdp.unwrap_or(d.tol_sdp),
        tol_stop: merged.tol_stop.unwrap_or(d.tol_stop),
        drop_tol: merged.drop_tol.unwrap_or(d.drop_tol),
        max_iters: merged.max_iters.map_or(d.max_iters, |v| v as usize),
        seed: merged.seed.unwrap_or(d.seed),
        threads: merged.threads,
        density_file: merged.density_file,
        config_file: args.config.clone(),
        resume: args.resume.clone(),
    };
    echo.to_config().validate()?;
    Ok(echo)
}

fn cmd_run(args: &RunArgs) -> i32 {
    let echo = match resolve(args) {
        Ok(echo) => echo,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    if let Some(n) = echo.threads {
        // fails only if a pool already exists, which is harmless
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    if let Err(e) = std::fs::create_dir_all(&args.out) {
        eprintln!("error: cannot create {}: {e}", args.out.display());
        return 1;
    }
    let start = Instant::now();
    match execute(&echo, &args.out) {
        Ok((mcal, report)) => {
            let written = write_artifacts(&args.out, &echo, &mcal, &report, start.elapsed().as_secs_f64());
            if let Err(e) = written {
                eprintln!("error: writing artifacts: {e}");
                return 1;
            }
            print_report(&report);
            if report.status == RunStatus::Failed {
                1
            } else {
                0
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            let summary = Summary {
                schema_version: SUMMARY_SCHEMA_VERSION,
                config: echo.clone(),
                status: RunStatus::Failed.as_str().into(),
                error: Some(e.to_string()),
                iterations: 0,
                upper_bound: None,
                dual_value: None,
                lower_bound: None,
                bracket_width: None,
                final_defect: None,
                pool_size: 0,
                max_moment_residual: None,
                wall_time: start.elapsed().as_secs_f64(),
                seed: echo.seed,
            };
            let _ = write_summary(&args.out.join("summary.json"), &summary);
            1
        }
    }
}

fn execute(echo: &ConfigEcho, out: &Path) -> Result<(Mcal, RunReport)> {
    let mut config = echo.to_config();
    config.checkpoint = Some(out.join("checkpoint.bin"));
    let mcal = Mcal::new(config)?;
    let state = match &echo.resume {
        Some(path) => mcal.resume(path)?,
        None => mcal.initialize()?,
    };
    let report = mcal.run_from(state)?;
    Ok((mcal, report))
}

fn print_report(report: &RunReport) {
    let last = report.state.history.last().expect("history is never empty");
    println!(
        "status {} after {} iterations: upper {} lower {} width {:e}",
        report.status.as_str(),
        last.n,
        report.upper,
        report.lower,
        report.bracket_width
    );
    if let Some(e) = &report.error {
        println!("error: {e}");
    }
}

/// Seventeen significant digits, enough to round-trip any `f64`.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    Ok(csv::Writer::from_writer(BufWriter::new(File::create(path)?)))
}

fn write_rows<const N: usize>(path: &Path, header: [&str; N], rows: impl Iterator<Item = [String; N]>) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub const ITERATION_COLUMNS: [&str; 7] = ["n", "F_n", "Ftilde_n", "E_vn", "K_n", "sdp_gap", "lower_bound"];

fn history_record(r: &HistoryRow) -> [String; 7] {
    [
        r.n.to_string(),
        fmt_float(r.dual_value),
        fmt_float(r.primal_value),
        fmt_float(r.defect),
        r.pool_size.to_string(),
        fmt_float(r.sdp_gap),
        fmt_float(r.lower_bound),
    ]
}

fn write_summary(path: &Path, summary: &Summary) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, summary)?;
    std::io::Write::write_all(&mut w, b"\n")?;
    Ok(())
}

pub fn write_artifacts(out: &Path, echo: &ConfigEcho, mcal: &Mcal, report: &RunReport, wall_time: f64) -> Result<()> {
    let history = &report.state.history;
    write_rows(
        &out.join("iterations.csv"),
        ITERATION_COLUMNS,
        history.iter().map(history_record),
    )?;

    let y: Vec<f64> = report.state.potential.iter().copied().collect();
    write_rows(
        &out.join("potential_final.csv"),
        ["x", "v"],
        mcal.family
            .nodes()
            .into_iter()
            .map(|x| [fmt_float(x), fmt_float(mcal.family.combine(&y, x))]),
    )?;

    let nodes = mcal.system.mesh.nodes().to_vec();
    write_rows(
        &out.join("density.csv"),
        ["x", "rho_target", "rho_gamma"],
        nodes.iter().map(|&x| {
            [
                fmt_float(x),
                fmt_float(mcal.target.rho.eval(x)),
                fmt_float(report.density.eval(x)),
            ]
        }),
    )?;

    let last = history.last().expect("history is never empty");
    let iterated = last.n > 0;
    let summary = Summary {
        schema_version: SUMMARY_SCHEMA_VERSION,
        config: echo.clone(),
        status: report.status.as_str().into(),
        error: report.error.clone(),
        iterations: last.n,
        upper_bound: finite(report.upper),
        dual_value: if iterated { finite(last.dual_value) } else { None },
        lower_bound: finite(report.lower),
        bracket_width: finite(report.bracket_width),
        final_defect: if iterated { finite(last.defect) } else { None },
        pool_size: report.state.pool.len(),
        max_moment_residual: finite(report.moment_residuals.iter().fold(0.0, |a, r| a.max(r.abs()))),
        wall_time,
        seed: echo.seed,
    };
    write_summary(&out.join("summary.json"), &summary)
}

fn cmd_selftest(suite: Suite) -> i32 {
    let checks = selftest::run(suite);
    println!("selftest {}", suite.name());
    for c in &checks {
        println!(
            "  {}  {:<60} {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        );
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    println!("{} passed, {failed} failed", checks.len() - failed);
    i32::from(failed > 0)
}

fn cmd_density(args: &DensityArgs) -> Result<()> {
    let mesh = Mesh1D::new(args.l, args.d as usize)?;
    let system = PairSystem::new(mesh, None)?;
    let target = builtin_target(&system)?;
    let family = MomentFamily::new(args.l, args.m as usize)?;
    let b = family.moments_of(&target.rho);
    std::fs::create_dir_all(&args.out)?;
    write_rows(
        &args.out.join("target_density.csv"),
        ["x", "rho"],
        system
            .mesh
            .nodes()
            .iter()
            .map(|&x| [fmt_float(x), fmt_float(target.rho.eval(x))]),
    )?;
    write_rows(
        &args.out.join("target_moments.csv"),
        ["m", "x_m", "b_m"],
        b.iter()
            .enumerate()
            .map(|(m, &v)| [m.to_string(), fmt_float(family.node(m)), fmt_float(v)]),
    )?;
    println!("integral {}", target.rho.integral());
    println!("moment sum {}", b.sum());
    Ok(())
}

fn show(label: &str, v: impl Display) {
    println!("{label:<22}{v}");
}

fn cmd_sdp(args: &SdpArgs) -> Result<()> {
    let problem = sdp::parse_problem(&std::fs::read_to_string(&args.file)?)?;
    let sol = sdp::solve(
        &problem,
        &SdpOptions {
            tol: args.tol,
            max_iter: args.max_iter,
            ..SdpOptions::default()
        },
    )?;
    show("status", format!("{:?}", sol.status));
    show("iterations", sol.iterations);
    show("primal value", sol.primal_value);
    show("dual value", sol.dual_value);
    show("gap", sol.gap);
    show("primal infeasibility", sol.primal_infeasibility);
    show("min eig X", sol.min_eig_x);
    show("min eig S", sol.min_eig_s);
    let y: Vec<String> = sol.y.iter().map(|v| fmt_float(*v)).collect();
    show("y", y.join(" "));
    Ok(())
}
