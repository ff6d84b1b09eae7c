//! `relichoice` command-line front end.
//!
//! Commands write to caller-supplied streams and return an [`ExitCode`], so
//! they can be driven in-process by tests.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::analysis::{
    self, analyze, mtbf, mttf, survival, AnalysisError, AnalysisOptions, AnalysisReport,
    FormulaMode, RteRequest,
};
use crate::dsl::{self, LoadError};
use crate::model::SystemSpec;
use crate::montecarlo::{self, SimulationConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitCode {
    Success = 0,
    /// Parse or validation failure, or a failed statistical comparison.
    Invalid = 1,
    /// Bad flags or a value outside an analysis domain.
    Domain = 2,
    Io = 3,
}

impl From<ExitCode> for std::process::ExitCode {
    fn from(code: ExitCode) -> Self {
        std::process::ExitCode::from(code as u8)
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "relichoice",
    version,
    about = "Degradation analysis of probabilistic-choice systems"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Paper,
    Numeric,
}

impl From<ModeArg> for FormulaMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Paper => FormulaMode::Paper,
            ModeArg::Numeric => FormulaMode::Numeric,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Quantity {
    Survival,
    Pdf,
    Sfr,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a system file and print any violations.
    Validate { input: PathBuf },
    /// Compute MTTF, MTBF, MTTR, failure rate, density and reliability time.
    Analyze {
        input: PathBuf,
        #[arg(long, value_enum, default_value = "numeric")]
        mode: ModeArg,
        /// Minimum acceptable survival probability for the reliability time.
        #[arg(long, default_value_t = 0.9, allow_negative_numbers = true)]
        rho: f64,
        /// Times at which to report the failure rate and density.
        #[arg(long = "sfr-at", value_delimiter = ',', allow_negative_numbers = true)]
        sfr_at: Vec<f64>,
        #[arg(long, value_enum, default_value = "json")]
        format: OutputFormat,
    },
    /// Print a `T,value` CSV curve.
    Curve {
        input: PathBuf,
        #[arg(long, allow_negative_numbers = true)]
        from: f64,
        #[arg(long, allow_negative_numbers = true)]
        to: f64,
        #[arg(long, allow_negative_numbers = true)]
        steps: i64,
        #[arg(long, value_enum, default_value = "survival")]
        quantity: Quantity,
    },
    /// Monte Carlo estimates of mean lifetime and survival.
    Simulate {
        input: PathBuf,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_delimiter = ',')]
        at: Vec<f64>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Check analytic values against Monte Carlo estimates.
    Compare {
        input: PathBuf,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long = "tolerance-sigmas", default_value_t = 4.0)]
        tolerance_sigmas: f64,
        #[arg(long, value_enum, default_value = "numeric")]
        mode: ModeArg,
        /// Worker threads for the simulation; output does not depend on it.
        #[arg(long)]
        threads: Option<usize>,
    },
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => execute(cli.command, out, err),
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{}", e.render());
                ExitCode::Success
            } else {
                let _ = write!(err, "{}", e.render());
                ExitCode::Domain
            }
        }
    }
}

pub fn execute(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> ExitCode {
    let result = match command {
        Command::Validate { input } => cmd_validate(&input, out),
        Command::Analyze {
            input,
            mode,
            rho,
            sfr_at,
            format,
        } => cmd_analyze(&input, mode.into(), rho, sfr_at, format, out, err),
        Command::Curve {
            input,
            from,
            to,
            steps,
            quantity,
        } => cmd_curve(&input, from, to, steps, quantity, out),
        Command::Simulate {
            input,
            trials,
            seed,
            at,
            threads,
        } => cmd_simulate(&input, trials, seed, &at, threads, out),
        Command::Compare {
            input,
            trials,
            seed,
            tolerance_sigmas,
            mode,
            threads,
        } => cmd_compare(
            &input,
            trials,
            seed,
            tolerance_sigmas,
            mode.into(),
            threads,
            out,
        ),
    };
    match result {
        Ok(code) => code,
        Err(failure) => {
            for line in &failure.lines {
                let _ = writeln!(err, "{line}");
            }
            failure.code
        }
    }
}

/// A command that could not complete: exit code plus diagnostics for stderr.
struct Failure {
    code: ExitCode,
    lines: Vec<String>,
}

impl Failure {
    fn new(code: ExitCode, line: impl Into<String>) -> Self {
        Self {
            code,
            lines: vec![line.into()],
        }
    }
}

impl From<AnalysisError> for Failure {
    fn from(e: AnalysisError) -> Self {
        Failure::new(ExitCode::Domain, format!("error: {e}"))
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::new(ExitCode::Io, format!("error: {e}"))
    }
}

type CmdResult = Result<ExitCode, Failure>;

/// Simulated failure times, on a dedicated pool of `threads` workers if given.
fn simulate_lifetimes(
    spec: &SystemSpec,
    cfg: &SimulationConfig,
    threads: Option<usize>,
) -> Result<Vec<f64>, Failure> {
    match threads {
        None => Ok(montecarlo::failure_times(spec, cfg)),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Failure::new(ExitCode::Domain, format!("error: thread pool: {e}")))?;
            Ok(pool.install(|| montecarlo::failure_times(spec, cfg)))
        }
    }
}

/// Loads a system file: `.json` as the structured document, anything else as text.
fn load(path: &Path) -> Result<SystemSpec, Failure> {
    let is_json = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"));
    if is_json {
        dsl::load_structured(path).map_err(|e| match e {
            LoadError::Io { .. } => Failure::new(ExitCode::Io, format!("error: {e}")),
            LoadError::Schema(violations) => Failure {
                code: ExitCode::Invalid,
                lines: violations
                    .iter()
                    .map(|v| {
                        if v.path.is_empty() {
                            format!("{}: {}", path.display(), v.message)
                        } else {
                            format!("{}: {}: {}", path.display(), v.path, v.message)
                        }
                    })
                    .collect(),
            },
        })
    } else {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Failure::new(
                ExitCode::Io,
                format!("error: cannot read {}: {e}", path.display()),
            )
        })?;
        dsl::parse(&text)
            .map_err(|e| Failure::new(ExitCode::Invalid, format!("{}:{e}", path.display())))
    }
}

fn cmd_validate(input: &Path, out: &mut dyn Write) -> CmdResult {
    match load(input) {
        Ok(_) => Ok(ExitCode::Success),
        Err(f) if f.code == ExitCode::Invalid => {
            for line in &f.lines {
                writeln!(out, "{line}")?;
            }
            Ok(ExitCode::Invalid)
        }
        Err(f) => Err(f),
    }
}

fn cmd_analyze(
    input: &Path,
    mode: FormulaMode,
    rho: f64,
    at: Vec<f64>,
    format: OutputFormat,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> CmdResult {
    let spec = load(input)?;
    let report = analyze(&spec, &AnalysisOptions { mode, rho, at })?;
    for note in &report.notes {
        writeln!(err, "note: {note}")?;
    }
    match format {
        OutputFormat::Json => writeln!(out, "{}", report_json(&report))?,
        OutputFormat::Text => write_report_text(&spec, &report, out)?,
    }
    Ok(ExitCode::Success)
}

/// Report JSON as emitted by `analyze --format json`.
pub fn report_json(report: &AnalysisReport) -> String {
    serde_json::to_string_pretty(report).expect("report serialization is infallible")
}

fn write_report_text(
    spec: &SystemSpec,
    r: &AnalysisReport,
    out: &mut dyn Write,
) -> std::io::Result<()> {
    if let Some(name) = &spec.metadata.name {
        writeln!(out, "system       {name}")?;
    }
    writeln!(out, "shape        {}", r.shape)?;
    writeln!(out, "mode         {}", r.mode)?;
    writeln!(out, "MTTF         {}", r.mttf)?;
    writeln!(out, "MTBF         {}", r.mtbf)?;
    writeln!(out, "MTTR         {}", r.mttr)?;
    writeln!(
        out,
        "RTE          {} (rho = {}, {})",
        r.rte.reliable_until, r.rte.rho, r.rte.method
    )?;
    if let Some(q) = &r.rte.quadratic {
        writeln!(
            out,
            "  quadratic  Q = {}, t1 = {}, t2 = {}",
            q.q, q.t1, q.t2
        )?;
    }
    writeln!(out)?;
    writeln!(out, "{:>14}  {:>24}  {:>24}", "T", "lambda_eq", "f(T)")?;
    for (s, p) in r.sfr.iter().zip(&r.pdf) {
        writeln!(out, "{:>14}  {:>24}  {:>24}", s.t, s.lambda_eq, p.f)?;
    }
    Ok(())
}

fn cmd_curve(
    input: &Path,
    from: f64,
    to: f64,
    steps: i64,
    quantity: Quantity,
    out: &mut dyn Write,
) -> CmdResult {
    const USAGE: &str =
        "usage: relichoice curve <INPUT> --from T --to T --steps N [--quantity survival|pdf|sfr]";
    if steps < 2 {
        return Err(Failure {
            code: ExitCode::Domain,
            lines: vec![
                format!("error: --steps must be at least 2, got {steps}"),
                USAGE.into(),
            ],
        });
    }
    if !(from.is_finite() && to.is_finite() && from < to && from >= 0.0) {
        return Err(Failure {
            code: ExitCode::Domain,
            lines: vec![
                format!("error: need 0 <= --from < --to, got {from} and {to}"),
                USAGE.into(),
            ],
        });
    }
    let spec = load(input)?;
    if quantity == Quantity::Sfr && from < spec.max_t0() {
        return Err(Failure::new(
            ExitCode::Domain,
            format!(
                "error: failure rate needs --from >= last installation time {}",
                spec.max_t0()
            ),
        ));
    }
    let n = steps as usize;
    let mut body = String::from("T,value\n");
    for k in 0..n {
        let t = if k + 1 == n {
            to
        } else {
            from + (to - from) * k as f64 / (n - 1) as f64
        };
        let v = match quantity {
            Quantity::Survival => survival(&spec, t),
            Quantity::Pdf => analysis::pdf(&spec, t),
            Quantity::Sfr => analysis::sfr(&spec, t)?,
        };
        body.push_str(&format!("{t},{v}\n"));
    }
    out.write_all(body.as_bytes())?;
    Ok(ExitCode::Success)
}

#[derive(Serialize)]
struct SurvivalRow {
    t: f64,
    value: f64,
    std_error: f64,
}

#[derive(Serialize)]
struct SimulationOutput {
    trials: u64,
    seed: u64,
    mean_failure_time: montecarlo::SimulationEstimate,
    survival: Vec<SurvivalRow>,
}

fn cmd_simulate(
    input: &Path,
    trials: u64,
    seed: u64,
    at: &[f64],
    threads: Option<usize>,
    out: &mut dyn Write,
) -> CmdResult {
    let spec = load(input)?;
    let cfg = SimulationConfig::new(trials, seed)
        .map_err(|e| Failure::new(ExitCode::Domain, format!("error: {e}")))?;
    let lifetimes = simulate_lifetimes(&spec, &cfg, threads)?;
    let mean = montecarlo::mean_estimate(&lifetimes, &cfg);
    let survival = at
        .iter()
        .map(|&t| {
            let hits = lifetimes.iter().filter(|&&x| x > t).count() as f64;
            let p = hits / trials as f64;
            SurvivalRow {
                t,
                value: p,
                std_error: (p * (1.0 - p) / trials as f64).sqrt(),
            }
        })
        .collect();
    let doc = SimulationOutput {
        trials,
        seed,
        mean_failure_time: mean,
        survival,
    };
    writeln!(
        out,
        "{}",
        serde_json::to_string_pretty(&doc).expect("serializable")
    )?;
    Ok(ExitCode::Success)
}

/// Survival levels at which `compare` checks the curve.
const COMPARE_LEVELS: [f64; 5] = [0.9, 0.7, 0.5, 0.3, 0.1];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum RowStatus {
    Ok,
    Fail,
    DocumentedDivergence,
}

fn cmd_compare(
    input: &Path,
    trials: u64,
    seed: u64,
    sigmas: f64,
    mode: FormulaMode,
    threads: Option<usize>,
    out: &mut dyn Write,
) -> CmdResult {
    if trials < 1000 {
        return Err(Failure::new(
            ExitCode::Domain,
            format!("error: --trials must be at least 1000, got {trials}"),
        ));
    }
    if !(sigmas.is_finite() && sigmas > 0.0) {
        return Err(Failure::new(
            ExitCode::Domain,
            format!("error: --tolerance-sigmas must be positive, got {sigmas}"),
        ));
    }
    let spec = load(input)?;
    let cfg = SimulationConfig::new(trials, seed).expect("trials checked above");

    let times = COMPARE_LEVELS
        .iter()
        .map(|&rho| Ok(analysis::rte(&spec, rho, RteRequest::Numeric)?.reliable_until))
        .collect::<Result<Vec<f64>, AnalysisError>>()?;
    let lifetimes = simulate_lifetimes(&spec, &cfg, threads)?;

    let mut rows: Vec<(String, f64, f64, f64, RowStatus)> = Vec::new();
    let mut push = |label: String, analytic: f64, estimate: f64, se: f64, divergent: bool| {
        let status = if divergent {
            RowStatus::DocumentedDivergence
        } else if (estimate - analytic).abs() <= sigmas * se {
            RowStatus::Ok
        } else {
            RowStatus::Fail
        };
        rows.push((label, analytic, estimate, se, status));
    };

    for &t in &times {
        let hits = lifetimes.iter().filter(|&&x| x > t).count() as f64;
        let p = hits / trials as f64;
        let se = (p * (1.0 - p) / trials as f64).sqrt();
        push(
            format!("survival(T={t:.6})"),
            survival(&spec, t),
            p,
            se,
            false,
        );
    }

    let mean = montecarlo::mean_estimate(&lifetimes, &cfg);
    let effective_mode = match (mttf(&spec, mode), mtbf(&spec, mode)) {
        (Ok(_), Ok(_)) => mode,
        _ => FormulaMode::Numeric,
    };
    // Paper-mode MTTF measures each component from its own installation time;
    // simulated lifetimes start at 0, so the two differ whenever some t0 > 0.
    let divergent = effective_mode == FormulaMode::Paper && spec.max_t0() > 0.0;
    push(
        "mttf".into(),
        mttf(&spec, effective_mode)?,
        mean.value,
        mean.std_error,
        divergent,
    );
    push(
        "mtbf".into(),
        mtbf(&spec, effective_mode)?,
        mean.value,
        mean.std_error,
        false,
    );

    writeln!(
        out,
        "# trials={trials} seed={seed} tolerance={sigmas} sigma mode={effective_mode}"
    )?;
    writeln!(
        out,
        "{:<24} {:>22} {:>22} {:>22} {:>10}  status",
        "quantity", "analytic", "estimate", "std_error", "sigmas"
    )?;
    let (mut failed, mut divergent_rows) = (0, 0);
    for (label, analytic, estimate, se, status) in &rows {
        let dev = if *se > 0.0 {
            format!("{:.3}", (estimate - analytic).abs() / se)
        } else if estimate == analytic {
            "0.000".into()
        } else {
            "inf".into()
        };
        let status = match status {
            RowStatus::Ok => "ok",
            RowStatus::Fail => {
                failed += 1;
                "FAIL"
            }
            RowStatus::DocumentedDivergence => {
                divergent_rows += 1;
                "documented-divergence"
            }
        };
        writeln!(
            out,
            "{label:<24} {analytic:>22.12} {estimate:>22.12} {se:>22.12} {dev:>10}  {status}"
        )?;
    }
    let verdict = if failed == 0 { "pass" } else { "fail" };
    writeln!(
        out,
        "result: {verdict} ({} rows, {failed} failed, {divergent_rows} documented-divergence)",
        rows.len()
    )?;
    Ok(if failed == 0 {
        ExitCode::Success
    } else {
        ExitCode::Invalid
    })
}
