//! Command-line driver: config loading, command dispatch and run output.

pub mod config;
pub mod manifest;

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use crate::actions::{check_a3_a4, typel_fit, Actions, Boundary};
use crate::error::{Error, Result};
use crate::front::length_series;
use crate::verify::{
    check_assumptions, ergodic_convergence, statphase_decay_rate, verify_masked, verify_periodic_pole, verify_theorem,
    Setup,
};
pub use config::{LoadedConfig, RunConfig};
use manifest::{RunDir, RunManifest};

pub const ENV_OUT: &str = "FRONTWAVE_OUT";

#[derive(Parser, Debug, Clone)]
#[command(name = "frontwave", version, about = "Wave-front length growth under integrable flows on surfaces")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (default: $FRONTWAVE_OUT/<config stem>/<command>).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Override verify.horizon.
    #[arg(long, global = true)]
    pub horizon: Option<f64>,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Front length series |S_t| at log-spaced times.
    Simulate,
    /// The predicted slope lambda(A) with its per-chart breakdown.
    Lambda,
    /// Front slope against lambda(A), or pole periodicity on spheres.
    Verify,
    /// Equidistribution table of the ergodic block.
    Ergodic,
    /// Stationary-phase remainder decay of the statphase block.
    Statphase,
    /// Singular leaves, charts, exceptional directions and type-(L) fits.
    SingularSet,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Lambda => "lambda",
            Command::Verify => "verify",
            Command::Ergodic => "ergodic",
            Command::Statphase => "statphase",
            Command::SingularSet => "singular-set",
        }
    }
}

/// Result of one command: where it wrote and its verdict (if it has one).
#[derive(Clone, Debug)]
pub struct Outcome {
    pub dir: PathBuf,
    pub pass: Option<bool>,
    pub manifest: RunManifest,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        match self.pass {
            Some(false) => 2,
            _ => 0,
        }
    }
}

/// Output directory: `--out`, else `output.dir` from the config, else
/// `$FRONTWAVE_OUT` (or `runs`) joined with the config stem; the command
/// name is appended in the last two cases.
pub fn output_dir(cli_out: Option<&Path>, loaded: &LoadedConfig, cmd: Command) -> PathBuf {
    if let Some(p) = cli_out {
        return p.to_path_buf();
    }
    if let Some(d) = &loaded.config.output.dir {
        return d.join(cmd.name());
    }
    let root = std::env::var_os(ENV_OUT).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("runs"));
    let stem = loaded.path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "run".into());
    root.join(stem).join(cmd.name())
}

fn f(v: f64) -> String {
    format!("{v:e}")
}

fn to_json<T: Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).unwrap_or(serde_json::Value::Null)
}

/// Parse the command line, run, and return the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 64 } else { 0 };
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return 64;
        }
        // A second call fails only when a pool already exists; keep it.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match run(&cli) {
        Ok(o) => {
            let verdict = match o.pass {
                Some(true) => "PASS",
                Some(false) => "FAIL",
                None => "done",
            };
            println!("{} {verdict}: {}", cli.command.name(), o.dir.display());
            o.exit_code()
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

pub fn run(cli: &Cli) -> Result<Outcome> {
    let path = cli.config.as_ref().ok_or_else(|| Error::Config("--config PATH is required".into()))?;
    let loaded = RunConfig::load(path)?;
    if let Some(h) = cli.horizon {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::Config(format!("--horizon {h} must be positive")));
        }
    }
    let dir = output_dir(cli.out.as_deref(), &loaded, cli.command);
    run_command(cli.command, &loaded, &dir, cli.horizon, cli.threads)
}

/// Run one command with an explicit output directory.
pub fn run_command(
    cmd: Command,
    loaded: &LoadedConfig,
    dir: &Path,
    horizon: Option<f64>,
    threads: Option<usize>,
) -> Result<Outcome> {
    let cfg = &loaded.config;
    let mut out = RunDir::create(dir)?;
    let (pass, assumptions) = match cmd {
        Command::Simulate => (None, simulate(cfg, horizon, &mut out)?),
        Command::Lambda => (None, lambda(cfg, &mut out)?),
        Command::Verify => {
            let (p, a) = verify(cfg, horizon, &mut out)?;
            (Some(p), a)
        }
        Command::Ergodic => (Some(ergodic(cfg, &mut out)?), None),
        Command::Statphase => (Some(statphase(cfg, &mut out)?), None),
        Command::SingularSet => (None, singular_set(cfg, &mut out)?),
    };
    let manifest = RunManifest {
        artifact: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: cmd.name().into(),
        config_path: loaded.path.display().to_string(),
        config_digest: manifest::sha256_hex(loaded.raw.as_bytes()),
        config: to_json(cfg),
        horizon_override: horizon,
        threads: threads.unwrap_or_else(rayon::current_num_threads),
        status: match pass {
            Some(true) => "pass",
            Some(false) => "fail",
            None => "done",
        }
        .into(),
        assumptions,
        outputs: Vec::new(),
        timings: Default::default(),
    };
    let dir = out.path().to_path_buf();
    let manifest = out.finish(manifest)?;
    Ok(Outcome { dir, pass, manifest })
}

fn simulate(cfg: &RunConfig, horizon: Option<f64>, out: &mut RunDir) -> Result<Option<serde_json::Value>> {
    let setup = cfg.setup(horizon)?;
    let times = setup.times(setup.horizon);
    let series = out.timed("front", || {
        length_series(&setup.ham, &setup.surface, setup.a, &times, setup.front, setup.integ, &[])
    })?;
    out.write_bytes("series.csv", series.to_csv()?.as_bytes())?;
    let last = series.times.len() - 1;
    out.write_json(
        "summary.json",
        &json!({
            "horizon": setup.horizon,
            "final_length": series.lengths[last],
            "final_ratio": series.lengths[last] / series.times[last],
            "refined_count": series.refined_counts[last],
            "warnings": series.warnings,
        }),
    )?;
    Ok(None)
}

fn lambda(cfg: &RunConfig, out: &mut RunDir) -> Result<Option<serde_json::Value>> {
    let setup = cfg.setup(None)?;
    let actions = Actions::new(&setup.surface, &setup.ham, setup.tol)?;
    let report = out.timed("lambda", || actions.lambda(setup.a))?;
    out.write_json("lambda.json", &report)?;
    let rows: Vec<Vec<String>> = report
        .charts
        .iter()
        .map(|c| {
            vec![
                c.chart_id.to_string(),
                to_json(&c.regime).as_str().unwrap_or("").to_string(),
                f(c.value),
                f(c.tail),
            ]
        })
        .collect();
    out.write_csv("charts.csv", &["chart_id", "regime", "value", "tail"], &rows)?;
    let rows = out.timed("leaf_table", || leaf_table(&actions, &setup, 16))?;
    out.write_csv("leaves.csv", &["chart_id", "sigma", "p1", "p2", "nu1", "nu2", "density", "N_A"], &rows)?;
    Ok(None)
}

/// Per-chart samples at the midpoints of `n` equal pieces.
fn leaf_table(actions: &Actions, setup: &Setup, n: usize) -> Result<Vec<Vec<String>>> {
    let mut rows = Vec::new();
    for chart in actions.charts() {
        let (lo, hi) = actions.sigma_range(chart);
        for i in 0..n {
            let sigma = lo + (hi - lo) * (i as f64 + 0.5) / n as f64;
            let d = actions.action_data(chart, sigma)?;
            let dens = actions.density_dsigma(chart, sigma)?;
            let na = match actions.count_na(chart, sigma, setup.a) {
                Ok(k) => k.to_string(),
                Err(Error::BoundaryAmbiguity { .. }) => String::new(),
                Err(e) => return Err(e),
            };
            rows.push(vec![chart.id.to_string(), f(sigma), f(d.p1), f(d.p2), f(d.nu[0]), f(d.nu[1]), f(dens), na]);
        }
    }
    Ok(rows)
}

fn verify(cfg: &RunConfig, horizon: Option<f64>, out: &mut RunDir) -> Result<(bool, Option<serde_json::Value>)> {
    let setup = cfg.setup(horizon)?;
    if setup.surface.is_sphere() && setup.surface.near_pole(setup.a.s) {
        let r = out.timed("periodic", || verify_periodic_pole(&setup, cfg.verify.periodic_n))?;
        let rows: Vec<Vec<String>> =
            (0..r.window.len()).map(|i| vec![f(r.window[i]), f(r.lengths[i]), f(r.shifted[i])]).collect();
        out.write_csv("periodic.csv", &["t", "length", "length_shifted"], &rows)?;
        out.write_json("verify.json", &json!({ "mode": "periodic_pole", "report": r }))?;
        return Ok((r.pass, None));
    }
    let report = match out.timed("theorem", || verify_theorem(&setup)) {
        Ok(r) => r,
        Err(Error::AssumptionFailure { assumption, detail }) => {
            let failure = json!({ "assumption": assumption, "detail": detail });
            out.write_json("verify.json", &json!({ "mode": "theorem", "pass": false, "failure": failure }))?;
            return Ok((false, Some(failure)));
        }
        Err(e) => return Err(e),
    };
    out.write_bytes("series.csv", report.series.to_csv()?.as_bytes())?;
    let assumptions = to_json(&report.assumptions);
    let mut pass = report.pass;
    let mut doc = json!({ "mode": "theorem", "pass": report.pass, "report": report });
    if let Some(rect) = cfg.verify.mask {
        let m = out.timed("masked", || verify_masked(&setup, rect))?;
        pass &= m.pass;
        doc["masked"] = to_json(&m);
    }
    doc["pass"] = json!(pass);
    out.write_json("verify.json", &doc)?;
    Ok((pass, Some(assumptions)))
}

fn ergodic(cfg: &RunConfig, out: &mut RunDir) -> Result<bool> {
    let b = cfg.ergodic.as_ref().ok_or_else(|| Error::Config("missing block [ergodic]".into()))?;
    let r = out.timed("ergodic", || ergodic_convergence(&b.problem, &b.t_grid))?;
    let rows: Vec<Vec<String>> = (0..r.t.len()).map(|i| vec![f(r.t[i]), f(r.lhs[i]), f(r.rhs), f(r.error[i])]).collect();
    out.write_csv("ergodic.csv", &["t", "lhs", "rhs", "error"], &rows)?;
    out.write_json("ergodic.json", &r)?;
    Ok(r.pass)
}

fn statphase(cfg: &RunConfig, out: &mut RunDir) -> Result<bool> {
    let b = cfg.statphase.as_ref().ok_or_else(|| Error::Config("missing block [statphase]".into()))?;
    let r = out.timed("statphase", || statphase_decay_rate(&b.problem, &b.t_grid))?;
    let rows: Vec<Vec<String>> = (0..r.t.len())
        .map(|i| {
            let (lr, li) = r.leading[i].map_or((String::new(), String::new()), |l| (f(l[0]), f(l[1])));
            vec![f(r.t[i]), f(r.direct[i][0]), f(r.direct[i][1]), lr, li, f(r.gap[i])]
        })
        .collect();
    out.write_csv("statphase.csv", &["t", "direct_re", "direct_im", "leading_re", "leading_im", "gap"], &rows)?;
    out.write_json("statphase.json", &r)?;
    Ok(r.pass)
}

fn singular_set(cfg: &RunConfig, out: &mut RunDir) -> Result<Option<serde_json::Value>> {
    cfg.validate_blocks()?;
    let surface = cfg.surface_model()?;
    let ham = cfg.hamiltonian_model(&surface)?;
    let actions = Actions::new(&surface, &ham, cfg.actions)?;
    let mut fits = Vec::new();
    let mut rows = Vec::new();
    for chart in actions.charts() {
        let hyperbolic = matches!(chart.lo, Boundary::Hyperbolic { .. }) || matches!(chart.hi, Boundary::Hyperbolic { .. });
        if !hyperbolic {
            continue;
        }
        let fit = out.timed(&format!("typel_{}", chart.id), || typel_fit(&actions, chart, 24))?;
        rows.push(vec![chart.id.to_string(), f(fit.phi1), f(fit.c2), f(fit.psi0), f(fit.residual), f(fit.range)]);
        fits.push(json!({ "chart_id": chart.id, "fit": fit }));
    }
    out.write_csv("typel.csv", &["chart_id", "phi1", "c2", "psi0", "residual", "range"], &rows)?;
    let mut doc = json!({
        "singular_leaves": actions.singular_set(),
        "charts": actions.charts(),
        "typel": fits,
    });
    let mut assumptions = None;
    if let Some(a) = cfg.point {
        let a34 = check_a3_a4(&actions, a)?;
        doc["a3_a4"] = to_json(&a34);
        let full = match check_assumptions(&actions, a) {
            Ok(r) => to_json(&r),
            Err(Error::AssumptionFailure { assumption, detail }) => json!({ "failure": assumption, "detail": detail }),
            Err(e) => return Err(e),
        };
        doc["assumptions"] = full.clone();
        assumptions = Some(full);
    }
    out.write_json("singular_set.json", &doc)?;
    Ok(assumptions)
}
