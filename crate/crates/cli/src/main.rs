use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use branchlab_core::asymptotics::AsymptoticReport;
use branchlab_core::cumulative::{expansion_oracles, lln_clt_constants, moment_asymptotics};
use branchlab_core::montecarlo::{run_gw_ensemble, run_q_ensemble, mean_estimate, Estimate, Regime, SimulationConfig};
use branchlab_core::qprocess::{mu_critical, pi_distribution, upsilon_measure, QKernel, DEFAULT_STATE_CAP};
use branchlab_core::verify::{self, subcritical_law, VerifyConfig, DEFAULT_REPLICAS, DEFAULT_SEED};
use branchlab_core::{Error, OffspringLaw};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser)]
#[command(name = "branchlab", version, about = "Galton-Watson and Q-process computations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Offspring law as JSON: {"p": [p0, p1, ...]}
    #[arg(short = 'm', long = "model")]
    model: Option<PathBuf>,
    /// Horizon(s), comma separated
    #[arg(short = 'n', long = "horizon", value_delimiter = ',')]
    horizon: Vec<usize>,
    /// Truncation order (series) or state cap (Q kernel)
    #[arg(short = 'N', long = "order")]
    order: Option<usize>,
    #[arg(short = 'o', long = "out")]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Model constants, Basic-Lemma constants and convergence tables
    Analyze {
        #[command(flatten)]
        common: Common,
    },
    /// Stationary law π (β < 1), invariant measure μ (β = 1) or ratio limit υ
    Qprocess {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        pi: bool,
        #[arg(long)]
        mu: bool,
        #[arg(long)]
        upsilon: bool,
    },
    /// Moments, LLN/CLT constants and expansion checks for (W_n, S_n)
    Joint {
        #[command(flatten)]
        common: Common,
    },
    /// Monte Carlo ensemble of the GW process or the Q-process
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = RegimeArg::Q)]
        regime: RegimeArg,
        #[arg(short = 'r', long = "replicas", default_value_t = 10_000)]
        replicas: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
    /// Run acceptance suites and print a pass/fail matrix
    Verify {
        #[command(flatten)]
        common: Common,
        /// Suite name, repeatable or comma separated; "all" by default
        #[arg(long, value_delimiter = ',')]
        suite: Vec<String>,
        #[arg(short = 'r', long = "replicas", default_value_t = DEFAULT_REPLICAS)]
        replicas: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long)]
        tol: Option<f64>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum RegimeArg {
    Gw,
    Q,
}

#[derive(Serialize)]
struct Report<'a, T: Serialize> {
    tool_version: &'a str,
    command: &'a str,
    model: Option<&'a [f64]>,
    model_hash: Option<String>,
    seed: Option<u64>,
    order: Option<usize>,
    horizons: &'a [usize],
    result: T,
}

enum Failure {
    Input(String),
    Check,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Input(e.to_string())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Input(format!("csv: {e}"))
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check) => ExitCode::from(1),
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cmd: Command) -> Outcome {
    match cmd {
        Command::Analyze { common } => analyze(&common),
        Command::Qprocess { common, pi, mu, upsilon } => qprocess(&common, pi, mu, upsilon),
        Command::Joint { common } => joint(&common),
        Command::Simulate { common, regime, replicas, seed } => simulate(&common, regime, replicas, seed),
        Command::Verify { common, suite, replicas, seed, tol } => run_verify(&common, &suite, replicas, seed, tol),
    }
}

fn require_model(common: &Common) -> Result<OffspringLaw, Failure> {
    match &common.model {
        Some(p) => load(p),
        None => Err(Failure::Input("this command needs -m/--model".into())),
    }
}

fn load(path: &Path) -> Result<OffspringLaw, Failure> {
    OffspringLaw::load(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn horizons(common: &Common, default: &[usize]) -> Vec<usize> {
    if common.horizon.is_empty() {
        default.to_vec()
    } else {
        common.horizon.clone()
    }
}

fn out_dir(common: &Common) -> Result<Option<&Path>, Failure> {
    match &common.out {
        Some(d) => {
            fs::create_dir_all(d).map_err(|e| Failure::Input(format!("{}: {e}", d.display())))?;
            Ok(Some(d.as_path()))
        }
        None => Ok(None),
    }
}

/// Prints the JSON report and, with -o, also writes it as `<command>.json`.
fn emit<T: Serialize>(dir: Option<&Path>, report: &Report<'_, T>) -> Outcome {
    let mut text = serde_json::to_string_pretty(report).map_err(|e| Failure::Input(e.to_string()))?;
    text.push('\n');
    if let Some(d) = dir {
        fs::write(d.join(format!("{}.json", report.command)), &text)?;
    }
    print!("{text}");
    Ok(())
}

fn write_csv<R: Serialize>(dir: Option<&Path>, name: &str, rows: impl IntoIterator<Item = R>) -> Outcome {
    let Some(d) = dir else { return Ok(()) };
    let mut w = csv::Writer::from_path(d.join(name))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn analyze(common: &Common) -> Outcome {
    let law = require_model(common)?;
    let ns = horizons(common, &[10, 50, 100, 200, 300, 400]);
    let dir = out_dir(common)?;
    let report = AsymptoticReport::build(&law, &ns)?;
    write_csv(dir, "convergence.csv", report.convergence_table())?;
    if let Some(rows) = &report.critical_decay {
        write_csv(dir, "critical_decay.csv", rows)?;
    }
    if let Some(bl) = &report.basic_lemma {
        write_csv(dir, "basic_lemma.csv", &bl.points)?;
    }
    emit(
        dir,
        &Report {
            tool_version: VERSION,
            command: "analyze",
            model: Some(law.probs()),
            model_hash: Some(law.hash()),
            seed: None,
            order: None,
            horizons: &ns,
            result: &report,
        },
    )
}

#[derive(Serialize)]
struct PiRow {
    j: usize,
    pi: f64,
    stationary: f64,
}

#[derive(Serialize)]
struct IndexedRow {
    j: usize,
    value: f64,
}

fn qprocess(common: &Common, pi: bool, mu: bool, upsilon: bool) -> Outcome {
    let law = require_model(common)?;
    let c = law.model_constants(1e-14);
    let dir = out_dir(common)?;
    let (pi, mu) = if !(pi || mu || upsilon) { (!c.is_critical(), c.is_critical()) } else { (pi, mu) };
    let cap = common.order.unwrap_or(if mu && !pi { 16 } else { DEFAULT_STATE_CAP });
    let kernel = QKernel::new(&law, cap)?;
    let mut result = serde_json::Map::new();
    let ns;
    if pi {
        ns = horizons(common, &[60]);
        let p = pi_distribution(&kernel, &[0.2, 0.5, 0.8], ns[0])?;
        write_csv(
            dir,
            "pi.csv",
            p.pi.iter().zip(&p.stationary).enumerate().map(|(j, (&a, &b))| PiRow { j, pi: a, stationary: b }),
        )?;
        result.insert("pi".into(), json(&p)?);
    } else {
        ns = horizons(common, &(200..=400).step_by(50).collect::<Vec<_>>());
    }
    let n_max = ns.iter().copied().max().unwrap_or(400);
    let series_order = 64;
    if mu {
        let m = mu_critical(&kernel, &[0.25, 0.5, 0.75, 0.9], &ns, n_max, series_order)?;
        write_csv(dir, "mu.csv", m.mu.iter().enumerate().map(|(j, &value)| IndexedRow { j, value }))?;
        result.insert("mu".into(), json(&m)?);
    }
    if upsilon {
        let u = upsilon_measure(&kernel, n_max, 20, series_order.max(2 * 20))?;
        write_csv(dir, "upsilon.csv", u.upsilon.iter().enumerate().map(|(j, &value)| IndexedRow { j, value }))?;
        result.insert("upsilon".into(), json(&u)?);
    }
    emit(
        dir,
        &Report {
            tool_version: VERSION,
            command: "qprocess",
            model: Some(law.probs()),
            model_hash: Some(law.hash()),
            seed: None,
            order: Some(cap),
            horizons: &ns,
            result,
        },
    )
}

fn json<T: Serialize>(v: &T) -> Result<serde_json::Value, Failure> {
    serde_json::to_value(v).map_err(|e| Failure::Input(e.to_string()))
}

fn joint(common: &Common) -> Outcome {
    let law = require_model(common)?;
    let c = law.model_constants(1e-14);
    let ns = horizons(common, &[10, 100, 1000]);
    let dir = out_dir(common)?;
    let moments = moment_asymptotics(&law, &ns);
    write_csv(dir, "moments.csv", &moments.rows)?;
    let mut result = serde_json::Map::new();
    result.insert("moments".into(), json(&moments)?);
    let n_max = ns.iter().copied().max().unwrap_or(1000);
    if c.gamma.is_some() {
        result.insert("lln_clt".into(), json(&lln_clt_constants(&law, n_max, 1.0)?)?);
    }
    let ex = expansion_oracles(&law, &[0.04, 0.02, 0.01, 0.005], n_max)?;
    result.insert("expansions".into(), json(&ex)?);
    emit(
        dir,
        &Report {
            tool_version: VERSION,
            command: "joint",
            model: Some(law.probs()),
            model_hash: Some(law.hash()),
            seed: None,
            order: None,
            horizons: &ns,
            result,
        },
    )
}

#[derive(Serialize)]
struct GwRow {
    n: usize,
    mean_z: Estimate,
    extinct_by: Estimate,
}

#[derive(Serialize)]
struct GwSample {
    replica: usize,
    n: usize,
    z: u64,
}

#[derive(Serialize)]
struct QSample {
    replica: u64,
    n: usize,
    w: u64,
    s: u64,
    overflow: bool,
}

fn simulate(common: &Common, regime: RegimeArg, replicas: usize, seed: u64) -> Outcome {
    let law = match &common.model {
        Some(p) => load(p)?,
        None => subcritical_law(),
    };
    let mut ns = horizons(common, &[100]);
    ns.sort_unstable();
    ns.dedup();
    let horizon = *ns.last().expect("non-empty");
    let dir = out_dir(common)?;
    let regime = match regime {
        RegimeArg::Gw => Regime::Gw,
        RegimeArg::Q => Regime::Q,
    };
    let cfg = SimulationConfig::new(law.clone(), regime, horizon, replicas, seed).record_at(ns.clone());
    cfg.validate()?;
    for w in cfg.warnings() {
        eprintln!("warning: {w}");
    }
    let mut result = serde_json::Map::new();
    match regime {
        Regime::Gw => {
            let ens = run_gw_ensemble(&cfg)?;
            let rows: Vec<GwRow> = ns
                .iter()
                .map(|&n| GwRow { n, mean_z: mean_estimate(&ens.column(n)), extinct_by: ens.extinct_by(n) })
                .collect();
            write_csv(
                dir,
                "samples.csv",
                ens.trajectories
                    .iter()
                    .enumerate()
                    .flat_map(|(replica, t)| ns.iter().map(move |&n| GwSample { replica, n, z: t.z[n] })),
            )?;
            result.insert("truncated".into(), ens.truncated().into());
            result.insert("rows".into(), json(&rows)?);
        }
        Regime::Q => {
            let ens = run_q_ensemble(&cfg)?;
            let stats = ns
                .iter()
                .map(|&n| ens.stats(n, &[]))
                .collect::<branchlab_core::Result<Vec<_>>>()?;
            write_csv(
                dir,
                "samples.csv",
                ens.records.iter().flat_map(|r| {
                    ens.record_at.iter().enumerate().map(move |(k, &n)| QSample {
                        replica: r.replica,
                        n,
                        w: r.w[k],
                        s: r.s[k],
                        overflow: r.overflow,
                    })
                }),
            )?;
            result.insert("overflowed".into(), ens.overflowed().into());
            result.insert("stats".into(), json(&stats)?);
        }
    }
    result.insert("replicas".into(), replicas.into());
    emit(
        dir,
        &Report {
            tool_version: VERSION,
            command: "simulate",
            model: Some(law.probs()),
            model_hash: Some(law.hash()),
            seed: Some(seed),
            order: None,
            horizons: &ns,
            result,
        },
    )
}

fn run_verify(common: &Common, suites: &[String], replicas: usize, seed: u64, tol: Option<f64>) -> Outcome {
    let law = common.model.as_deref().map(load).transpose()?;
    let dir = out_dir(common)?;
    let names: Vec<&str> = if suites.is_empty() { vec!["all"] } else { suites.iter().map(String::as_str).collect() };
    let config = VerifyConfig { law, seed, replicas, tol };
    let report = verify::run(&config, &names)?;
    for c in &report.checks {
        eprintln!("{} {:<14} {}", if c.pass { "PASS" } else { "FAIL" }, c.suite, c.summary);
    }
    let json = report.to_json();
    if let Some(d) = dir {
        fs::write(d.join("verify.json"), &json)?;
        write_csv(
            Some(d),
            "verify.csv",
            report.checks.iter().map(|c| (c.criterion, c.suite.as_str(), c.pass, c.tolerance, c.summary.as_str())),
        )?;
    }
    print!("{json}");
    if report.all_pass {
        Ok(())
    } else {
        Err(Failure::Check)
    }
}
