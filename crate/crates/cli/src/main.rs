//! `iffm` — simulate incoherent feedforward motifs, sweep dose responses,
//! certify cumulative-response monotonicity, and reproduce the bundled
//! experiment.
//!
//! Exit codes: 0 ok, 1 configuration error, 2 domain violation,
//! 3 verification failure. Errors additionally print one machine-readable
//! JSON object to stderr.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use iffm_core::classify::{analyze_motif, MotifAnalysis};
use iffm_core::config::{ExperimentConfig, Experiment, GridConfig};
use iffm_core::error::Error;
use iffm_core::integrator::{kernel, simulate};
use iffm_core::motifs::{MotifKind, ALL_KINDS};
use iffm_core::oracle::run_verification;
use iffm_core::report::{
    emit_table3, sweep_csv, trajectory_csv, ExperimentBundle, MotifRun, Provenance,
};

#[derive(Parser)]
#[command(
    name = "iffm",
    version,
    about = "Dose-response sweeps and cumulative-response monotonicity certificates \
             for incoherent feedforward motifs"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Print the motif catalog (or details for one name).
    List {
        /// Motif name (`scalar-3`, `vec-5`, `iffm-1`, ...).
        name: Option<String>,
    },
    /// Integrate one (motif, input) pair and write the trajectory CSV.
    Simulate {
        #[command(flatten)]
        src: ConfigSource,
        /// Motif name; must appear in the configuration.
        #[arg(long)]
        motif: String,
        /// Constant input `u > 0`.
        #[arg(long, allow_negative_numbers = true)]
        u: f64,
        /// 1-based index into the configured initial states.
        #[arg(long, default_value_t = 1)]
        init: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Sweep the input grid for every configured motif and initial state.
    Sweep {
        #[command(flatten)]
        src: ConfigSource,
        #[command(flatten)]
        common: Common,
    },
    /// Sweep, certify, and emit verdict tables.
    Classify {
        #[command(flatten)]
        src: ConfigSource,
        #[command(flatten)]
        common: Common,
    },
    /// Run the oracle suite against the built-in catalog; nonzero exit on
    /// any failed report.
    Verify {
        #[command(flatten)]
        common: Common,
    },
    /// Run the full built-in experiment and write the result bundle.
    Reproduce {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct ConfigSource {
    /// Path to an experiment configuration (JSON).
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in preset name (`paper-sec5`).
    #[arg(long)]
    preset: Option<String>,
}

#[derive(Args)]
struct Common {
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads for per-input parallelism (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
    /// Override the integrator's relative tolerance.
    #[arg(long)]
    rtol: Option<f64>,
    /// Override the integrator's absolute tolerance.
    #[arg(long)]
    atol: Option<f64>,
    /// Override the input grid as `min:max:points:log` (or `...:lin`).
    #[arg(long)]
    grid: Option<String>,
}

/// CLI-level failures: wrapped engine errors plus the verification-specific
/// outcome, which owns exit code 3.
enum CliError {
    Core(Error),
    VerificationFailed { failed: usize, total: usize },
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Core(Error::Json(e))
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(Error::DomainViolation { .. }) => 2,
            CliError::VerificationFailed { .. } => 3,
            CliError::Core(_) => 1,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Core(Error::DomainViolation { .. }) => "domain-violation",
            CliError::Core(Error::InvalidConfig { .. }) => "config",
            CliError::Core(Error::UnknownMotif { .. }) => "unknown-motif",
            CliError::Core(Error::Inconclusive { .. }) => "inconclusive",
            CliError::Core(Error::MissingVerdict { .. }) => "missing-verdict",
            CliError::Core(_) => "error",
            CliError::VerificationFailed { .. } => "verification-failed",
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Core(e) => e.to_string(),
            CliError::VerificationFailed { failed, total } => {
                format!("verification failed: {failed} of {total} oracle reports did not pass")
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let payload = serde_json::json!({
                "error": { "kind": err.kind(), "message": err.message() }
            });
            eprintln!("{payload}");
            ExitCode::from(err.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.cmd {
        Cmd::List { name } => cmd_list(name),
        Cmd::Simulate { src, motif, u, init, common } => cmd_simulate(src, motif, u, init, common),
        Cmd::Sweep { src, common } => cmd_sweep(src, common),
        Cmd::Classify { src, common } => cmd_classify(src, common),
        Cmd::Verify { common } => cmd_verify(common),
        Cmd::Reproduce { common } => cmd_reproduce(common),
    }
}

// ---------------------------------------------------------------------------
// Shared plumbing
// ---------------------------------------------------------------------------

fn init_jobs(jobs: Option<usize>) {
    #[cfg(feature = "parallel")]
    if let Some(n) = jobs {
        // Ignore failure: the global pool can only be set once (tests call
        // the binary repeatedly in-process never, but keep this tolerant).
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    #[cfg(not(feature = "parallel"))]
    if jobs.is_some() {
        eprintln!("note: built without the `parallel` feature; --jobs is ignored");
    }
}

fn parse_grid(text: &str) -> Result<GridConfig, Error> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 4 {
        return Err(Error::InvalidConfig {
            path: "--grid".into(),
            message: format!("expected min:max:points:log, got {text:?}"),
        });
    }
    let bad = |field: &str, detail: String| Error::InvalidConfig {
        path: format!("--grid.{field}"),
        message: detail,
    };
    let min: f64 = parts[0].parse().map_err(|e| bad("min", format!("{e}")))?;
    let max: f64 = parts[1].parse().map_err(|e| bad("max", format!("{e}")))?;
    let points: usize = parts[2].parse().map_err(|e| bad("points", format!("{e}")))?;
    let log = match parts[3] {
        "log" => true,
        "lin" | "linear" => false,
        other => return Err(bad("scale", format!("expected log or lin, got {other:?}"))),
    };
    Ok(GridConfig { min, max, points, log })
}

fn load_config(src: &ConfigSource, common: &Common) -> Result<ExperimentConfig, Error> {
    let mut cfg = match (&src.config, &src.preset) {
        (Some(path), None) => ExperimentConfig::from_path(path)?,
        (None, Some(name)) if name == "paper-sec5" => ExperimentConfig::paper_sec5(),
        (None, Some(name)) => {
            return Err(Error::InvalidConfig {
                path: "--preset".into(),
                message: format!("unknown preset {name:?}; available: paper-sec5"),
            })
        }
        (None, None) => {
            return Err(Error::InvalidConfig {
                path: "--config".into(),
                message: "either --config <path> or --preset paper-sec5 is required".into(),
            })
        }
        (Some(_), Some(_)) => unreachable!("clap enforces the conflict"),
    };
    if let Some(rtol) = common.rtol {
        cfg.integrator.rtol = rtol;
    }
    if let Some(atol) = common.atol {
        cfg.integrator.atol = atol;
    }
    if let Some(grid) = &common.grid {
        cfg.u_grid = parse_grid(grid)?;
    }
    Ok(cfg)
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, Error> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    std::fs::write(&path, contents)?;
    Ok(path)
}

fn provenance(exp: &Experiment) -> Provenance {
    Provenance {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        rtol: exp.sim.rtol,
        atol: exp.sim.atol,
        n_samples: exp.sim.n_samples,
        horizon: exp.sim.t_horizon,
        grid_points: exp.u_grid.len(),
    }
}

fn analyze_all(exp: &Experiment) -> Result<Vec<MotifAnalysis>, Error> {
    exp.motifs
        .iter()
        .map(|(motif, inits)| analyze_motif(&exp.sys, motif, inits, &exp.sim, &exp.u_grid))
        .collect()
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

fn cmd_list(name: Option<String>) -> Result<(), CliError> {
    match name {
        Some(n) => {
            let kind = MotifKind::parse(&n)?;
            println!("{}", describe(kind));
        }
        None => {
            println!("{:<10} {:<10} dynamics", "name", "alias");
            for kind in ALL_KINDS {
                let alias = match kind.iffm_index() {
                    Some(_) => format!("vec-{}", kind.table_row()),
                    None => String::new(),
                };
                println!("{:<10} {:<10} {}", kind.name(), alias, kind.formula());
            }
            println!();
            println!("cross-walk: iffm-1 = vec-5, iffm-2 = vec-3, iffm-3 = vec-2, iffm-4 = vec-4");
        }
    }
    Ok(())
}

fn describe(kind: MotifKind) -> String {
    let mut s = format!("{}: {}", kind.name(), kind.formula());
    if let Some(i) = kind.iffm_index() {
        s.push_str(&format!("\nalias of vec-{} (canonical motif IFFM{i})", kind.table_row()));
    } else if !kind.is_scalar() {
        s.push_str(&format!("\nvector form of scalar-{}", kind.table_row()));
    } else {
        s.push_str(&format!("\nscalar form; vector generalization: vec-{}", kind.table_row()));
    }
    s
}

fn cmd_simulate(
    src: ConfigSource,
    motif_name: String,
    u: f64,
    init_index: usize,
    common: Common,
) -> Result<(), CliError> {
    init_jobs(common.jobs);
    let exp = load_config(&src, &common)?.build()?;
    let kind = MotifKind::parse(&motif_name)?;
    let (motif, inits) = exp
        .motifs
        .iter()
        .find(|(m, _)| m.kind() == kind)
        .ok_or_else(|| Error::InvalidConfig {
            path: "--motif".into(),
            message: format!("motif {} is not in the configuration", kind.name()),
        })?;
    let init = init_index
        .checked_sub(1)
        .and_then(|i| inits.get(i))
        .ok_or_else(|| Error::InvalidConfig {
            path: "--init".into(),
            message: format!("init index {init_index} out of range 1..={}", inits.len()),
        })?;

    let traj = simulate(&exp.sys, motif, u, init, &exp.sim)?;
    let ker = kernel(&traj);
    let path = write_file(
        &common.out,
        &format!("{}_trajectory.csv", kind.name()),
        &trajectory_csv(&traj, &ker),
    )?;
    println!("wrote {} ({} samples)", path.display(), traj.len());
    Ok(())
}

fn cmd_sweep(src: ConfigSource, common: Common) -> Result<(), CliError> {
    init_jobs(common.jobs);
    let exp = load_config(&src, &common)?.build()?;
    for (motif, inits) in &exp.motifs {
        for (k, init) in inits.iter().enumerate() {
            let res = iffm_core::response::sweep(&exp.sys, motif, init, &exp.sim, &exp.u_grid)?;
            for w in &res.warnings {
                eprintln!("warning: {w}");
            }
            let stem = format!("{}_init{}", motif.kind().name(), k + 1);
            let csv_path = write_file(&common.out, &format!("{stem}_sweep.csv"), &sweep_csv(&res))?;
            write_file(
                &common.out,
                &format!("{stem}_sweep.json"),
                &serde_json::to_string_pretty(&res)?,
            )?;
            println!("wrote {}", csv_path.display());
        }
    }
    Ok(())
}

fn cmd_classify(src: ConfigSource, common: Common) -> Result<(), CliError> {
    init_jobs(common.jobs);
    let exp = load_config(&src, &common)?.build()?;
    let analyses = analyze_all(&exp)?;
    let verdicts: Vec<_> = analyses.iter().map(|a| a.verdict.clone()).collect();

    write_file(&common.out, "verdicts.json", &serde_json::to_string_pretty(&verdicts)?)?;
    for v in &verdicts {
        println!(
            "{:<10} DR: {:<26} cDR: {:<26} certificate: {}",
            v.motif.name(),
            v.dr.label(),
            v.cdr.label(),
            v.certificate
                .map(|c| format!("{:?} ({:?})", c.kind, c.direction))
                .unwrap_or_else(|| "none".into()),
        );
    }
    if verdicts.iter().filter_map(|v| v.motif.iffm_index()).count() == 4 {
        let (text, json) = emit_table3(&verdicts)?;
        write_file(&common.out, "table3.txt", &text)?;
        write_file(&common.out, "table3.json", &serde_json::to_string_pretty(&json)?)?;
        println!("\n{text}");
    }
    Ok(())
}

fn cmd_verify(common: Common) -> Result<(), CliError> {
    init_jobs(common.jobs);
    let mut sim = iffm_core::integrator::SimConfig::default();
    if let Some(rtol) = common.rtol {
        sim.rtol = rtol;
    }
    if let Some(atol) = common.atol {
        sim.atol = atol;
    }
    sim.validate()?;
    let reports = run_verification(&sim)?;
    let failed = reports.iter().filter(|r| !r.pass).count();
    write_file(&common.out, "verify_report.json", &serde_json::to_string_pretty(&reports)?)?;
    for r in &reports {
        println!(
            "{} {:<64} engine={:.10e} oracle={:.10e} rel_gap={:.2e}",
            if r.pass { "PASS" } else { "FAIL" },
            r.quantity,
            r.engine,
            r.oracle,
            r.rel_gap
        );
    }
    println!("{} of {} oracle reports passed", reports.len() - failed, reports.len());
    if failed > 0 {
        return Err(CliError::VerificationFailed { failed, total: reports.len() });
    }
    Ok(())
}

fn cmd_reproduce(common: Common) -> Result<(), CliError> {
    init_jobs(common.jobs);
    let config = ExperimentConfig::paper_sec5();
    let exp = config.build()?;
    let analyses = analyze_all(&exp)?;
    let oracle_reports = run_verification(&exp.sim)?;

    let runs: Vec<MotifRun> = analyses
        .into_iter()
        .map(|a| MotifRun { motif: a.verdict.motif, verdict: a.verdict, sweeps: a.sweeps })
        .collect();
    let bundle = ExperimentBundle {
        config: exp.echo.clone(),
        provenance: provenance(&exp),
        runs,
        oracle_reports,
    };
    let written = bundle.write_files(&common.out)?;

    let verdicts: Vec<_> = bundle.runs.iter().map(|r| r.verdict.clone()).collect();
    let (text, _) = emit_table3(&verdicts)?;
    println!("{text}");
    let failed = bundle.oracle_reports.iter().filter(|r| !r.pass).count();
    println!(
        "oracle reports: {} of {} passed",
        bundle.oracle_reports.len() - failed,
        bundle.oracle_reports.len()
    );
    println!("wrote {} files under {}", written.len(), common.out.display());
    if failed > 0 {
        return Err(CliError::VerificationFailed { failed, total: bundle.oracle_reports.len() });
    }
    Ok(())
}
