//! `desitter` command-line driver.
//!
//! Exit codes: 0 success, 2 a verification check failed, 3 error budget
//! exceeded, 64 bad configuration or input, 1 I/O failure.

mod commands;
mod config;
mod output;
mod report;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use desitter_core::geometry::ModelParams;
use desitter_core::quadrature::GridSpec;
use desitter_core::wightman::FieldTag;

use config::{Basis, Command, Options, RunConfig};
use output::Outcome;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] desitter_core::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use desitter_core::Error as E;
        match self {
            CliError::Core(E::Budget(_)) => 3,
            CliError::Core(E::ResidualExceeded { .. } | E::Contract(_)) => 2,
            CliError::Io(_) | CliError::Csv(_) => 1,
            _ => 64,
        }
    }
}

#[derive(Parser)]
#[command(name = "desitter", version, about = "Numerical checks for an interacting field on de Sitter space")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone, Debug)]
struct Common {
    /// Space-time dimension (taken from the fixture when omitted).
    #[arg(long)]
    d: Option<usize>,
    /// Dimensionless mass m r.
    #[arg(long, conflicts_with = "frak_m2")]
    frak_m: Option<f64>,
    /// Squared dimensionless mass (default 2).
    #[arg(long)]
    frak_m2: Option<f64>,
    /// de Sitter radius.
    #[arg(long, default_value_t = 1.0)]
    r: f64,
    /// Field-strength constant (default m).
    #[arg(long)]
    b: Option<f64>,
    #[arg(long)]
    tau_panels: Option<usize>,
    #[arg(long)]
    tau_order: Option<usize>,
    #[arg(long)]
    sphere_points: Option<usize>,
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Inner edge of the mode domain, pi/2 - |tau|.
    #[arg(long)]
    domain_eps: Option<f64>,
    /// Fixture reference: a builtin name (tri-bump) or name=path.
    #[arg(long)]
    fixture: Option<String>,
    #[arg(long, short = 'o', default_value = "desitter-out")]
    output_dir: PathBuf,
}

#[derive(Subcommand)]
enum Cmd {
    /// ODE residual and Wronskian table for s <= s-max.
    ModesValidate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 30)]
        s_max: usize,
    },
    /// Damped mode sum D+(x1, x2).
    KernelEval {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 30)]
        s_max: usize,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        tau1: f64,
        #[arg(long, default_value_t = 0.3, allow_hyphen_values = true)]
        tau2: f64,
        /// Sphere angle between the two points.
        #[arg(long, default_value_t = 1.0)]
        angle: f64,
        #[arg(long, default_value_t = 0.1)]
        eta: f64,
    },
    /// Truncated n-point function with a term breakdown.
    Npoint {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 3)]
        n: usize,
        /// Comma-separated field tags (in, loc, out, current, retarded_current).
        #[arg(long)]
        tags: Option<String>,
    },
    /// S-matrix element with the first k functions incoming.
    Smatrix {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 3)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        k: usize,
    },
    /// Out n-point function and its cross-path check.
    OutNpoint {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 3)]
        n: usize,
    },
    /// Gram matrix, eigenvalues and signature.
    GnsGram {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "in")]
        basis: Basis,
    },
    /// Boundary-strip convergence scan of the in n-point integral.
    DispersionScan {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 3)]
        n: usize,
    },
    /// Spectral support and out/in equivalence certificates.
    StationaryCheck {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 3)]
        n: usize,
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
    },
    /// Stationary versus de Sitter out n-point comparison.
    Contrast {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
    },
    /// Collate run directories into a markdown and CSV bundle.
    Report {
        runs: Vec<PathBuf>,
        #[arg(long, short = 'o', default_value = "desitter-report")]
        output_dir: PathBuf,
    },
    /// Re-execute a stored RunConfig.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, short = 'o')]
        output_dir: Option<PathBuf>,
    },
}

fn fixture_ref(s: &str) -> (String, String) {
    match s.split_once('=') {
        Some((n, p)) => (n.to_string(), p.to_string()),
        None => (s.to_string(), "builtin".to_string()),
    }
}

fn build_config(command: Command, c: Common, options: Options) -> Result<RunConfig, CliError> {
    let fixtures: BTreeMap<String, String> = c.fixture.as_deref().map(fixture_ref).into_iter().collect();
    let fixture_params = fixtures.iter().next().map(|(n, s)| commands::fixture_params(n, s)).transpose()?;
    let params = match (&fixture_params, c.d) {
        (Some(p), d) => {
            if d.is_some_and(|d| d != p.d) {
                return Err(CliError::Config(format!("fixture is for d = {}, --d {} given", p.d, d.unwrap_or(0))));
            }
            p.clone()
        }
        (None, d) => {
            let fm = c.frak_m.or(c.frak_m2.map(f64::sqrt)).unwrap_or(2f64.sqrt());
            let m = fm / c.r;
            ModelParams::new(d.unwrap_or(4), c.r, m, c.b.unwrap_or(m))?
        }
    };
    let def = GridSpec::default();
    let grid = GridSpec {
        tau_panels: c.tau_panels.unwrap_or(def.tau_panels),
        tau_order: c.tau_order.unwrap_or(def.tau_order),
        sphere_points: c.sphere_points.unwrap_or(def.sphere_points),
        sphere_replicates: c.replicates.unwrap_or(def.sphere_replicates),
        ..def
    };
    grid.validate()?;
    Ok(RunConfig {
        command,
        params,
        seed: c.seed.unwrap_or(grid.seed),
        grid,
        fixtures,
        output_dir: c.output_dir,
        options: Options { domain_eps: c.domain_eps, ..options },
    })
}

fn parse_tags(s: &str) -> Result<Vec<FieldTag>, CliError> {
    s.split(',')
        .map(|t| serde_json::from_value(serde_json::Value::String(t.trim().to_string())).map_err(|_| CliError::Config(format!("unknown tag '{t}'"))))
        .collect()
}

fn write_outcome(dir: &Path, o: &Outcome, cfg: Option<&RunConfig>) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)?;
    if let Some(cfg) = cfg {
        std::fs::write(dir.join("config.json"), serde_json::to_string_pretty(cfg)?)?;
    }
    std::fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&o.summary)?)?;
    for t in &o.tables {
        std::fs::write(dir.join(format!("{}.csv", t.name)), t.to_csv()?)?;
    }
    Ok(())
}

fn execute(cfg: RunConfig) -> Result<Outcome, CliError> {
    let o = commands::run(&cfg)?;
    write_outcome(&cfg.output_dir, &o, Some(&cfg))?;
    Ok(o)
}

fn dispatch(cmd: Cmd) -> Result<Outcome, CliError> {
    let opts = Options::default;
    let cfg = match cmd {
        Cmd::ModesValidate { common, s_max } => build_config(Command::ModesValidate, common, Options { s_max, ..opts() })?,
        Cmd::KernelEval { common, s_max, tau1, tau2, angle, eta } => {
            build_config(Command::KernelEval, common, Options { s_max, tau1, tau2, angle, eta, ..opts() })?
        }
        Cmd::Npoint { common, n, tags } => {
            let tags = tags.as_deref().map(parse_tags).transpose()?;
            build_config(Command::Npoint, common, Options { n, tags, ..opts() })?
        }
        Cmd::Smatrix { common, n, k } => build_config(Command::Smatrix, common, Options { n, k, ..opts() })?,
        Cmd::OutNpoint { common, n } => build_config(Command::OutNpoint, common, Options { n, ..opts() })?,
        Cmd::GnsGram { common, basis } => build_config(Command::GnsGram, common, Options { basis, ..opts() })?,
        Cmd::DispersionScan { common, n } => build_config(Command::DispersionScan, common, Options { n, ..opts() })?,
        Cmd::StationaryCheck { common, n, epsilon } => {
            build_config(Command::StationaryCheck, common, Options { n, epsilon, ..opts() })?
        }
        Cmd::Contrast { common, epsilon } => build_config(Command::Contrast, common, Options { epsilon, ..opts() })?,
        Cmd::Report { runs, output_dir } => {
            let (o, md) = report::bundle(&runs)?;
            write_outcome(&output_dir, &o, None)?;
            std::fs::write(output_dir.join("bundle.md"), md)?;
            return Ok(o);
        }
        Cmd::Run { config, output_dir } => {
            let mut cfg = RunConfig::load(&config)?;
            if let Some(d) = output_dir {
                cfg.output_dir = d;
            }
            cfg
        }
    };
    execute(cfg)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 64 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli.cmd) {
        Ok(o) => {
            println!("{}", serde_json::to_string_pretty(&o.summary).expect("summary serializes"));
            for c in o.checks.iter().filter(|c| !c.passed) {
                eprintln!("check failed: {}: {}", c.name, c.detail);
            }
            ExitCode::from(if o.passed() { 0 } else { 2 })
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
