mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use slither_core::bounds::{
    bounded_motion_bound, crude_bound_delayed, growth_envelope_certificate, r_infinity_closed_form, r_infinity_mc,
    r_rho_mc, BoundReport,
};
use slither_core::config::{ModelKind, Rho, ScenarioConfig};
use slither_core::diffusion::DiffusionSpec;
use slither_core::engine::RunOptions;
use slither_core::harness::{run_suite, run_sweep, simulate, RunSummary, SweepPlan};
use slither_core::percolation::{crossing_probability, CrossingBisection};
use slither_core::sausage::SausageMc;

use output::{sink, write_json, write_rows, Format};

#[derive(Debug, Parser)]
#[command(name = "slither", version, about = "Spatial SIR epidemics of diffusing particles")]
struct Cli {
    /// Worker threads (0: one per core).
    #[arg(long, global = true, env = "SLITHER_THREADS", default_value_t = 0)]
    threads: usize,
    /// Master seed; overrides the seed in a config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file (default: stdout).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run replicates of one scenario and summarize each run.
    Simulate(SimulateArgs),
    /// Survival-proxy frequencies over a (lambda, alpha) grid, with alpha_c bisection.
    Sweep(SweepArgs),
    /// Reproduction-number bounds and extinction certificates.
    Bounds(BoundsArgs),
    /// Mean sausage volume as a function of time.
    Sausage(SausageArgs),
    /// Crossing probabilities of the instantaneous disk-graph model.
    Percolation(PercolationArgs),
    /// Run a validation suite and report every check.
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
struct Overrides {
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    /// A number or `inf`.
    #[arg(long)]
    rho: Option<Rho>,
    #[arg(long)]
    model: Option<ModelKind>,
}

impl Overrides {
    fn apply(&self, cfg: &mut ScenarioConfig) {
        if let Some(v) = self.lambda {
            cfg.lambda = v;
        }
        if let Some(v) = self.alpha {
            cfg.alpha = v;
        }
        if let Some(v) = self.rho {
            cfg.rho = v;
        }
        if let Some(v) = self.model {
            cfg.model = v;
        }
    }
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Scenario file (TOML or JSON).
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value_t = 1)]
    replicates: u64,
    /// Write every run's event log here as JSON lines.
    #[arg(long)]
    events: Option<PathBuf>,
    /// Stop each run once its survival-proxy verdict is decided.
    #[arg(long)]
    stop_early: bool,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// Sweep plan file (TOML or JSON).
    #[arg(long)]
    config: PathBuf,
    /// Where to write the alpha_c rows (default: next to --out).
    #[arg(long)]
    alpha_c_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    ClosedForm,
    Crude,
    Mc,
    RhoMc,
    BoundedMotion,
    Envelope,
}

#[derive(Debug, Args)]
struct BoundsArgs {
    /// Methods to evaluate; repeat or separate with commas.
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [Method::ClosedForm, Method::Mc])]
    method: Vec<Method>,
    /// Scenario file supplying model, dimension, kernel and motion.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 2)]
    dim: usize,
    #[arg(long)]
    model: Option<ModelKind>,
    #[arg(long)]
    lambda: f64,
    /// One or more values, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    alpha: Vec<f64>,
    #[arg(long)]
    rho: Option<f64>,
    /// Motion radius for the bounded-motion bound.
    #[arg(long, default_value_t = 1.0)]
    cap: f64,
    #[command(flatten)]
    mc: McArgs,
    /// Times at which the growth envelope is fitted.
    #[arg(long, value_delimiter = ',', default_values_t = [0.5, 1.0, 2.0, 4.0])]
    fit_times: Vec<f64>,
}

#[derive(Debug, Args)]
struct McArgs {
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,
    #[arg(long, default_value_t = 1000)]
    replicates: usize,
    /// Uniform points per path for volume estimates.
    #[arg(long, default_value_t = 256)]
    points: usize,
    /// Plain sample coverage instead of the bridge-corrected estimator.
    #[arg(long)]
    no_bridge: bool,
}

#[derive(Debug, Args)]
struct SausageArgs {
    #[arg(long, default_value_t = 2)]
    dim: usize,
    /// Scenario file whose motion and dimension are used.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', required = true)]
    t: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    radius: f64,
    /// Sausage of the difference of two independent motions.
    #[arg(long)]
    difference: bool,
    #[command(flatten)]
    mc: McArgs,
}

#[derive(Debug, Args)]
struct PercolationArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    lambda: Vec<f64>,
    /// Box half-widths.
    #[arg(long = "half-width", value_delimiter = ',', default_values_t = [10.0])]
    half_width: Vec<f64>,
    #[arg(long, default_value_t = 2)]
    dim: usize,
    #[arg(long, default_value_t = 1.0)]
    radius: f64,
    #[arg(long, default_value_t = 400)]
    replicates: usize,
    /// Also bisect for the intensity with crossing probability 1/2; printed to stderr.
    #[arg(long)]
    bisect: bool,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    /// coupling, bounds, sausage, percolation or all.
    suite: String,
    #[arg(long, default_value_t = 1000)]
    replicates: usize,
}

fn load_scenario(path: &Path, seed: Option<u64>) -> Result<ScenarioConfig> {
    let mut cfg = ScenarioConfig::load(path).with_context(|| format!("reading {}", path.display()))?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn cmd_simulate(cli: &Cli, a: &SimulateArgs) -> Result<()> {
    let mut cfg = load_scenario(&a.config, cli.seed)?;
    a.overrides.apply(&mut cfg);
    let opts = RunOptions {
        stop_early: a.stop_early,
        record_events: a.events.is_some(),
    };
    let start = Instant::now();
    let outcomes = simulate(&cfg, a.replicates, opts)?;
    eprintln!("{} replicate(s) in {:.3} s", outcomes.len(), start.elapsed().as_secs_f64());
    if let Some(p) = &a.events {
        let mut w = sink(Some(p))?;
        for o in &outcomes {
            o.write_events(&mut w)?;
        }
        w.flush()?;
    }
    let rows: Vec<RunSummary> = outcomes.iter().map(|o| RunSummary::new(&cfg, o)).collect();
    write_rows(&rows, cli.format, cli.out.as_deref())
}

fn cmd_sweep(cli: &Cli, a: &SweepArgs) -> Result<()> {
    let mut plan = SweepPlan::load(&a.config).with_context(|| format!("reading {}", a.config.display()))?;
    if let Some(s) = cli.seed {
        plan.seed = s;
    }
    let result = run_sweep(&plan)?;
    match cli.format {
        Format::Json => write_json(&result, cli.out.as_deref()),
        Format::Csv => {
            write_rows(&result.rows, Format::Csv, cli.out.as_deref())?;
            let side = a.alpha_c_out.clone().or_else(|| {
                cli.out
                    .as_ref()
                    .map(|o| o.with_file_name(format!("{}.alpha_c.csv", o.file_stem().unwrap_or_default().to_string_lossy())))
            });
            match side {
                Some(p) => write_rows(&result.alpha_c, Format::Csv, Some(&p)),
                None => Ok(()),
            }
        }
    }
}

fn sausage_mc(dim: usize, diffusion: DiffusionSpec, seed: u64, a: &McArgs) -> SausageMc {
    SausageMc::new(dim, diffusion)
        .dt(a.dt)
        .replicates(a.replicates)
        .points(a.points)
        .seed(seed)
        .bridge(!a.no_bridge)
}

#[derive(Serialize)]
struct BoundRow {
    model: ModelKind,
    method: String,
    lambda: f64,
    alpha: f64,
    value: f64,
    stderr: f64,
    certified: bool,
}

#[derive(Serialize)]
struct BoundJson<'a> {
    #[serde(flatten)]
    report: &'a BoundReport,
    certified: bool,
}

fn cmd_bounds(cli: &Cli, a: &BoundsArgs) -> Result<()> {
    let cfg = match &a.config {
        Some(p) => Some(load_scenario(p, cli.seed)?),
        None => None,
    };
    let model = a.model.or(cfg.as_ref().map(|c| c.model)).unwrap_or(ModelKind::Delayed);
    let dim = cfg.as_ref().map_or(a.dim, |c| c.dimension);
    let kernel = cfg.as_ref().map_or(slither_core::kernel::KernelSpec::UnitBallIndicator, |c| c.kernel.clone());
    let diffusion = cfg.as_ref().map_or(DiffusionSpec::StandardBrownian, |c| c.diffusion.clone());
    let seed = cli.seed.or(cfg.as_ref().map(|c| c.seed)).unwrap_or(0);
    let rho = a.rho.or(cfg.as_ref().and_then(|c| c.rho.finite()));
    let mc = sausage_mc(dim, diffusion.clone(), seed, &a.mc).radius(kernel.support_radius());
    let fit = if a.method.contains(&Method::Envelope) {
        Some(mc.fit_growth_envelope(&a.fit_times, model == ModelKind::Diffusion)?)
    } else {
        None
    };
    let mut reports = Vec::new();
    for &alpha in &a.alpha {
        for &m in &a.method {
            let need_rho = || rho.context("this method needs a finite --rho");
            let r = match m {
                Method::ClosedForm => r_infinity_closed_form(model, &diffusion, &kernel, dim, a.lambda, alpha)?,
                Method::Crude => crude_bound_delayed(a.lambda, need_rho()?, &kernel, dim, alpha)?,
                Method::Mc => r_infinity_mc(model, &mc, a.lambda, alpha)?,
                Method::RhoMc => r_rho_mc(model, &mc, &kernel, a.lambda, need_rho()?, alpha)?,
                Method::BoundedMotion => bounded_motion_bound(model, dim, a.lambda, a.cap, kernel.support_radius())?,
                Method::Envelope => growth_envelope_certificate(model, a.lambda, alpha, fit.as_ref().expect("fitted above"))?,
            };
            reports.push((alpha, r));
        }
    }
    match cli.format {
        Format::Json => {
            let v: Vec<BoundJson> = reports
                .iter()
                .map(|(_, r)| BoundJson {
                    report: r,
                    certified: r.certified(),
                })
                .collect();
            write_json(&v, cli.out.as_deref())
        }
        Format::Csv => {
            let rows: Vec<BoundRow> = reports
                .iter()
                .map(|(alpha, r)| BoundRow {
                    model: r.model,
                    method: serde_json::to_value(r.method).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default(),
                    lambda: a.lambda,
                    alpha: *alpha,
                    value: r.value,
                    stderr: r.stderr,
                    certified: r.certified(),
                })
                .collect();
            write_rows(&rows, Format::Csv, cli.out.as_deref())
        }
    }
}

#[derive(Serialize)]
struct SausageRow {
    t: f64,
    estimate: f64,
    stderr: f64,
    replicates: usize,
    diffusion: String,
    d: usize,
}

fn cmd_sausage(cli: &Cli, a: &SausageArgs) -> Result<()> {
    let (dim, diffusion, seed) = match &a.config {
        Some(p) => {
            let c = load_scenario(p, cli.seed)?;
            (c.dimension, c.diffusion, c.seed)
        }
        None => (a.dim, DiffusionSpec::StandardBrownian, cli.seed.unwrap_or(0)),
    };
    if a.t.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
        bail!("times must be finite and non-negative");
    }
    let mc = sausage_mc(dim, diffusion, seed, &a.mc).radius(a.radius);
    let est = mc.volume_profile(&a.t, a.difference)?;
    let label = if a.difference {
        format!("difference({})", mc.diffusion.label())
    } else {
        mc.diffusion.label()
    };
    let rows: Vec<SausageRow> = a
        .t
        .iter()
        .zip(est)
        .map(|(&t, e)| SausageRow {
            t,
            estimate: e.mean,
            stderr: e.stderr,
            replicates: mc.replicates,
            diffusion: label.clone(),
            d: dim,
        })
        .collect();
    write_rows(&rows, cli.format, cli.out.as_deref())
}

#[derive(Serialize)]
struct CrossingRow {
    lambda: f64,
    #[serde(rename = "L")]
    half_width: f64,
    crossing: f64,
    stderr: f64,
}

fn cmd_percolation(cli: &Cli, a: &PercolationArgs) -> Result<()> {
    let seed = cli.seed.unwrap_or(0);
    let mut rows = Vec::new();
    for &l in &a.half_width {
        for &lambda in &a.lambda {
            let e = crossing_probability(lambda, a.dim, l, a.radius, a.replicates, seed);
            rows.push(CrossingRow {
                lambda,
                half_width: l,
                crossing: e.mean,
                stderr: e.stderr,
            });
        }
        if a.bisect {
            let mut b = CrossingBisection::new(a.dim, l);
            b.radius = a.radius;
            b.replicates = a.replicates;
            b.seed = seed;
            eprintln!("L = {l}: crossing probability 1/2 near lambda = {:.4}", b.run());
        }
    }
    write_rows(&rows, cli.format, cli.out.as_deref())
}

fn cmd_validate(cli: &Cli, a: &ValidateArgs) -> Result<bool> {
    let report = run_suite(&a.suite, a.replicates, cli.seed.unwrap_or(2024))?;
    for c in report.checks.iter().filter(|c| !c.passed) {
        eprintln!(
            "FAIL {}: observed {} expected {} tolerance {}",
            c.name, c.observed, c.expected, c.tolerance
        );
    }
    write_json(&report, cli.out.as_deref())?;
    Ok(report.passed)
}

fn run(cli: &Cli) -> Result<bool> {
    let work = || -> Result<bool> {
        match &cli.command {
            Command::Simulate(a) => cmd_simulate(cli, a).map(|_| true),
            Command::Sweep(a) => cmd_sweep(cli, a).map(|_| true),
            Command::Bounds(a) => cmd_bounds(cli, a).map(|_| true),
            Command::Sausage(a) => cmd_sausage(cli, a).map(|_| true),
            Command::Percolation(a) => cmd_percolation(cli, a).map(|_| true),
            Command::Validate(a) => cmd_validate(cli, a),
        }
    };
    rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build()?.install(work)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
