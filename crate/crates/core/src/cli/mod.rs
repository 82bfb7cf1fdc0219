//! Command-line driver: instance files in, reports out.
//!
//! Exit codes: 0 on success (and an all-forced descent), 1 when a checked property fails
//! or a hypothesis is refuted, 2 on usage, parse and configuration errors.

pub mod demos;
pub mod instance;
pub mod report;

use std::ffi::OsString;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::congruence::{defect_nonnegative, psi_length, wiles_defect, CongruenceError};
use crate::cotangent::{report_a, report_b, CotangentError};
use crate::dvr::{BackendSpec, Dvr};
use crate::freeness::{
    evaluate_tree, run_descent_with, DescentError, DescentOptions, DEFAULT_WITNESS_ORD_A,
};
use crate::fuzz::{run_fuzz, FuzzConfig};
use crate::par::Execution;
use crate::ringfam::{SigmaSet, Stratum};

pub use instance::{InstanceFile, PointDecl};
pub use report::{Named, OutputFormat, PsiEntry, ReportDocument, Status};

/// Environment variable naming the default backend.
pub const BACKEND_ENV: &str = "WILES_DEFECT_BACKEND";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}", fmt_parse(*.line, field, message))]
    Parse {
        line: Option<usize>,
        field: String,
        message: String,
    },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("point `{point}`: {message}")]
    Precondition { point: String, message: String },
    #[error("{0}")]
    Io(String),
}

fn fmt_parse(line: Option<usize>, field: &str, message: &str) -> String {
    match line {
        Some(l) => format!("parse error at line {l}, field `{field}`: {message}"),
        None => format!("parse error in field `{field}`: {message}"),
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        2
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "wiles-defect",
    version,
    about = "Cotangent and congruence lengths over a DVR, Wiles defects and the freeness descent"
)]
pub struct Cli {
    /// Base ring: rational:p (Z localized at p) or poly:q (F_q[t] localized at t).
    #[arg(long, global = true)]
    pub backend: Option<String>,
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Json)]
    pub out: OutputFormat,
    /// Number of fuzz trials.
    #[arg(long, global = true)]
    pub trials: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Cotangent module of A_Σ at each point: SNF oracle, closed form, regularity.
    Cotangent(PointArgs),
    /// Cotangent module of B = A_Σ/(∏ x_i) at points of Z°_Σ∖{s}.
    CotangentB(BArgs),
    /// Congruence-module length of the declared family.
    Psi(PointArgs),
    /// Wiles defect ledger of the declared family.
    Defect(PointArgs),
    /// Run the descent and emit a certificate.
    Descent(DescentArgs),
    /// Seeded randomized cross-checks on both backends.
    Fuzz(FuzzArgs),
    /// Run or print a shipped demo instance.
    Demo(DemoArgs),
}

#[derive(Debug, Args)]
pub struct PointArgs {
    /// Instance file, or demo:NAME for a shipped demo.
    pub file: String,
    /// Subset Σ as a sorted index list, e.g. "1,2" or "[]"; defaults to the file's sigma, then T.
    #[arg(long)]
    pub sigma: Option<String>,
    /// Restrict to one named point.
    #[arg(long)]
    pub point: Option<String>,
}

#[derive(Debug, Args)]
pub struct BArgs {
    #[command(flatten)]
    pub points: PointArgs,
    /// Index s ∈ Σ removed by B; defaults to the file's s.
    #[arg(long)]
    pub s: Option<usize>,
}

#[derive(Debug, Args)]
pub struct DescentArgs {
    pub file: String,
    /// Order in which indices leave T, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub order: Option<Vec<usize>>,
    /// Order of every a_i of the witness points.
    #[arg(long, default_value_t = DEFAULT_WITNESS_ORD_A)]
    pub witness_ord_a: u32,
}

#[derive(Debug, Args)]
pub struct FuzzArgs {
    #[arg(long, default_value_t = 3)]
    pub n_max: usize,
    #[arg(long, default_value_t = 2)]
    pub g_max: usize,
    #[arg(long, default_value_t = 6)]
    pub ord_max: u32,
    /// Run trials on one thread.
    #[arg(long)]
    pub sequential: bool,
    /// Harness self-test: inflate every oracle length by one.
    #[arg(long, hide = true)]
    pub corrupt_oracle: bool,
}

#[derive(Debug, Args)]
pub struct DemoArgs {
    /// Demo name; omit to list them.
    pub name: Option<String>,
    /// Print the instance file instead of running it.
    #[arg(long)]
    pub show: bool,
}

/// Result of one invocation, ready to be written out.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Parses and runs a command line, reading the default backend from the environment.
pub fn run_args<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with_env(args, std::env::var(BACKEND_ENV).ok())
}

/// As [`run_args`] with the environment default passed explicitly.
pub fn run_with_env<I, T>(args: I, env_backend: Option<String>) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            let code = e.exit_code();
            return if code == 0 {
                Outcome {
                    code,
                    stdout: text,
                    stderr: String::new(),
                }
            } else {
                Outcome {
                    code: 2,
                    stdout: String::new(),
                    stderr: text,
                }
            };
        }
    };
    let format = cli.out;
    match execute(&cli, env_backend.as_deref()) {
        Ok(Output::Report(doc)) => match doc.render(format) {
            Ok(stdout) => {
                let stderr = doc.diagnostics.iter().map(|d| format!("{d}\n")).collect();
                Outcome {
                    code: doc.exit_code(),
                    stdout,
                    stderr,
                }
            }
            Err(e) => error_outcome(&e),
        },
        Ok(Output::Text(stdout)) => Outcome {
            code: 0,
            stdout,
            stderr: String::new(),
        },
        Err(e) => error_outcome(&e),
    }
}

fn error_outcome(e: &CliError) -> Outcome {
    Outcome {
        code: e.exit_code(),
        stdout: String::new(),
        stderr: format!("error: {e}\n"),
    }
}

enum Output {
    Report(Box<ReportDocument>),
    Text(String),
}

/// Loads an instance file from disk, or from the shipped demos for `demo:NAME`.
pub fn load_instance(path: &str) -> Result<InstanceFile, CliError> {
    let text = match path.strip_prefix("demo:") {
        Some(name) => demos::get(name)
            .ok_or_else(|| {
                CliError::Config(format!(
                    "unknown demo `{name}` (known: {})",
                    demos::names().join(", ")
                ))
            })?
            .text
            .to_string(),
        None => std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read {path}: {e}")))?,
    };
    InstanceFile::parse(&text)
}

/// Backend precedence: command-line flag, then instance file, then environment, then
/// `rational:5`.
pub fn resolve_backend(
    flag: Option<&str>,
    file: Option<BackendSpec>,
    env: Option<&str>,
) -> Result<BackendSpec, CliError> {
    let parse = |s: &str, field: &str| {
        s.parse::<BackendSpec>().map_err(|m| CliError::Parse {
            line: None,
            field: field.to_string(),
            message: m,
        })
    };
    if let Some(f) = flag {
        return parse(f, "--backend");
    }
    if let Some(b) = file {
        return Ok(b);
    }
    match env {
        Some(e) if !e.trim().is_empty() => parse(e, BACKEND_ENV),
        _ => Ok(BackendSpec::default()),
    }
}

fn execute(cli: &Cli, env: Option<&str>) -> Result<Output, CliError> {
    let flag = cli.backend.as_deref();
    match &cli.command {
        Command::Cotangent(a) => {
            let file = load_instance(&a.file)?;
            let backend = resolve_backend(flag, file.backend, env)?;
            cmd_cotangent(&file, backend, a.sigma.as_deref(), a.point.as_deref(), None)
                .map(|d| Output::Report(Box::new(d)))
        }
        Command::CotangentB(a) => {
            let file = load_instance(&a.points.file)?;
            let backend = resolve_backend(flag, file.backend, env)?;
            let s = a.s.or(file.s).ok_or_else(|| {
                CliError::Config("cotangent-b needs an index s (flag --s or key `s`)".into())
            })?;
            cmd_cotangent(
                &file,
                backend,
                a.points.sigma.as_deref(),
                a.points.point.as_deref(),
                Some(s),
            )
            .map(|d| Output::Report(Box::new(d)))
        }
        Command::Psi(a) => {
            let file = load_instance(&a.file)?;
            let backend = resolve_backend(flag, file.backend, env)?;
            cmd_psi(&file, backend, a.sigma.as_deref(), a.point.as_deref())
                .map(|d| Output::Report(Box::new(d)))
        }
        Command::Defect(a) => {
            let file = load_instance(&a.file)?;
            let backend = resolve_backend(flag, file.backend, env)?;
            cmd_defect(&file, backend, a.sigma.as_deref(), a.point.as_deref())
                .map(|d| Output::Report(Box::new(d)))
        }
        Command::Descent(a) => {
            let file = load_instance(&a.file)?;
            let backend = resolve_backend(flag, file.backend, env)?;
            let opts = DescentOptions {
                removal_order: a.order.clone(),
                witness_ord_a: a.witness_ord_a,
            };
            cmd_descent(&file, backend, cli.seed, &opts).map(|d| Output::Report(Box::new(d)))
        }
        Command::Fuzz(a) => {
            let backend = resolve_backend(flag, None, env)?;
            let cfg = FuzzConfig {
                n_max: a.n_max,
                g_max: a.g_max,
                ord_max: a.ord_max,
                trials: cli.trials.unwrap_or(200),
                seed: cli.seed,
                backend,
                execution: if a.sequential {
                    Execution::Sequential
                } else {
                    Execution::Parallel
                },
                corrupt_oracle: a.corrupt_oracle,
            };
            cmd_fuzz(&cfg).map(|d| Output::Report(Box::new(d)))
        }
        Command::Demo(a) => {
            let Some(name) = &a.name else {
                let mut out = String::new();
                for d in demos::ALL {
                    out.push_str(&format!("{:<16} {}\n", d.name, d.summary));
                }
                return Ok(Output::Text(out));
            };
            let demo = demos::get(name).ok_or_else(|| {
                CliError::Config(format!(
                    "unknown demo `{name}` (known: {})",
                    demos::names().join(", ")
                ))
            })?;
            if a.show {
                return Ok(Output::Text(demo.text.to_string()));
            }
            let file = InstanceFile::parse(demo.text)?;
            let backend = resolve_backend(flag, file.backend, env)?;
            let mut doc = match demo.command {
                demos::DemoCommand::Cotangent => cmd_cotangent(&file, backend, None, None, None)?,
                demos::DemoCommand::CotangentB => {
                    cmd_cotangent(&file, backend, None, None, file.s)?
                }
                demos::DemoCommand::Descent => {
                    cmd_descent(&file, backend, cli.seed, &DescentOptions::default())?
                }
            };
            doc.command = format!("demo {name}");
            Ok(Output::Report(Box::new(doc)))
        }
    }
}

fn resolve_sigma(file: &InstanceFile, flag: Option<&str>) -> Result<SigmaSet, CliError> {
    match flag {
        Some(text) => instance::parse_subset(text, file.n, "--sigma", None),
        None => Ok(file.sigma.unwrap_or_else(|| SigmaSet::full(file.n))),
    }
}

fn selected_points<'a>(
    file: &'a InstanceFile,
    name: Option<&str>,
) -> Result<Vec<&'a PointDecl>, CliError> {
    match name {
        Some(n) => Ok(vec![file.point(n)?]),
        None if file.points.is_empty() => {
            Err(CliError::Config("instance file declares no points".into()))
        }
        None => Ok(file.points.iter().collect()),
    }
}

fn precondition(point: &PointDecl, message: impl ToString) -> CliError {
    CliError::Precondition {
        point: point.name.clone(),
        message: message.to_string(),
    }
}

fn new_doc(command: &str, file: &InstanceFile, backend: BackendSpec) -> ReportDocument {
    let mut doc = ReportDocument::new(command, backend.to_string());
    doc.instance = Some(file.clone());
    doc
}

/// Cotangent reports of `A_Σ` (or of `B` when `s` is given) at the selected points.
pub fn cmd_cotangent(
    file: &InstanceFile,
    backend: BackendSpec,
    sigma: Option<&str>,
    point: Option<&str>,
    s: Option<usize>,
) -> Result<ReportDocument, CliError> {
    let command = if s.is_some() {
        "cotangent-b"
    } else {
        "cotangent"
    };
    let mut doc = new_doc(command, file, backend);
    let sigma = resolve_sigma(file, sigma)?;
    let points = selected_points(file, point)?;
    crate::with_backend!(backend, |dvr| cotangent_points(
        &dvr, file, sigma, &points, s, &mut doc
    ))?;
    Ok(doc)
}

fn cotangent_points<D: Dvr>(
    dvr: &D,
    file: &InstanceFile,
    sigma: SigmaSet,
    points: &[&PointDecl],
    s: Option<usize>,
    doc: &mut ReportDocument,
) -> Result<(), CliError> {
    let inst = file.instance();
    for decl in points {
        let v = file.realize(dvr, decl)?;
        let report = match s {
            None => report_a(dvr, &inst, sigma, &v),
            Some(s) => report_b(dvr, &inst, sigma, s, &v),
        };
        match report {
            Ok(body) => doc.cotangent.push(Named {
                point: decl.name.clone(),
                body,
            }),
            Err(e @ CotangentError::Mismatch { .. }) => {
                doc.fail(format!("point `{}`: {e}", decl.name))
            }
            Err(e) => return Err(precondition(decl, e)),
        }
    }
    Ok(())
}

pub fn cmd_psi(
    file: &InstanceFile,
    backend: BackendSpec,
    sigma: Option<&str>,
    point: Option<&str>,
) -> Result<ReportDocument, CliError> {
    let mut doc = new_doc("psi", file, backend);
    let fam = file.family()?;
    let sigma = resolve_sigma(file, sigma)?;
    for decl in selected_points(file, point)? {
        let entry = crate::with_backend!(backend, |dvr| {
            let v = file.realize(&dvr, decl)?;
            let len = psi_length(&dvr, fam, sigma, &v).map_err(|e| precondition(decl, e))?;
            let stratum = match v.profile(&dvr).stratum() {
                Stratum::Interior(sp) => sp,
                Stratum::Singular(_) => unreachable!("psi_length rejects singular points"),
            };
            Ok::<_, CliError>(PsiEntry {
                sigma,
                stratum,
                psi_length: len,
            })
        })?;
        doc.psi.push(Named {
            point: decl.name.clone(),
            body: entry,
        });
    }
    Ok(doc)
}

pub fn cmd_defect(
    file: &InstanceFile,
    backend: BackendSpec,
    sigma: Option<&str>,
    point: Option<&str>,
) -> Result<ReportDocument, CliError> {
    let mut doc = new_doc("defect", file, backend);
    let fam = file.family()?;
    let sigma = resolve_sigma(file, sigma)?;
    for decl in selected_points(file, point)? {
        let ledger = crate::with_backend!(backend, |dvr| {
            let v = file.realize(&dvr, decl)?;
            wiles_defect(&dvr, fam, sigma, &v).map_err(|e| match e {
                CongruenceError::Cotangent(CotangentError::Mismatch { .. }) => {
                    CliError::Io(e.to_string())
                }
                e => precondition(decl, e),
            })
        })?;
        if let Err(violation) = defect_nonnegative(&ledger) {
            doc.fail(format!("point `{}`: {violation}", decl.name));
        }
        doc.defects.push(Named {
            point: decl.name.clone(),
            body: ledger,
        });
    }
    Ok(doc)
}

/// Runs the descent. A refuted hypothesis or an inconclusive step is report content
/// (status failed, with the evaluable steps attached), not an error.
pub fn cmd_descent(
    file: &InstanceFile,
    backend: BackendSpec,
    seed: u64,
    opts: &DescentOptions,
) -> Result<ReportDocument, CliError> {
    let mut doc = new_doc("descent", file, backend);
    doc.seed = Some(seed);
    let fam = file.family()?;
    match run_descent_with(fam, seed, opts) {
        Ok(cert) => {
            if let Err(e) = cert.verify() {
                doc.fail(format!("certificate does not verify: {e}"));
            } else if !cert.all_forced {
                doc.fail("not every step forced μ_Σ = μ_∅");
            }
            doc.descent = Some(cert);
        }
        Err(
            e @ (DescentError::HypothesisViolated { .. }
            | DescentError::BelowMinimal { .. }
            | DescentError::Inconclusive { .. }),
        ) => {
            doc.fail(e.to_string());
            doc.diagnostic_steps = evaluate_tree(fam, seed, opts).unwrap_or_default();
        }
        Err(e) => return Err(CliError::Config(e.to_string())),
    }
    Ok(doc)
}

pub fn cmd_fuzz(cfg: &FuzzConfig) -> Result<ReportDocument, CliError> {
    if cfg.n_max == 0 || cfg.ord_max == 0 || cfg.trials == 0 {
        return Err(CliError::Config(
            "fuzz bounds n_max, ord_max and trials must be positive".into(),
        ));
    }
    if cfg.n_max > crate::ringfam::MAX_N {
        return Err(CliError::Config(format!(
            "n_max must be at most {}",
            crate::ringfam::MAX_N
        )));
    }
    let report = run_fuzz(cfg);
    let mut doc = ReportDocument::new("fuzz", report.backends.join(","));
    doc.seed = Some(cfg.seed);
    if !report.passed() {
        doc.fail(format!("{} property failures", report.total_failures));
    }
    doc.fuzz = Some(report);
    Ok(doc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn backend_precedence() {
        let file = Some(BackendSpec::Poly { q: 7 });
        assert_eq!(
            resolve_backend(Some("rational:3"), file, Some("poly:5")).unwrap(),
            BackendSpec::Rational { p: 3 }
        );
        assert_eq!(
            resolve_backend(None, file, Some("poly:5")).unwrap(),
            BackendSpec::Poly { q: 7 }
        );
        assert_eq!(
            resolve_backend(None, None, Some("poly:5")).unwrap(),
            BackendSpec::Poly { q: 5 }
        );
        assert_eq!(
            resolve_backend(None, None, None).unwrap(),
            BackendSpec::Rational { p: 5 }
        );
        assert!(resolve_backend(None, None, Some("rational:4")).is_err());
    }

    #[test]
    fn usage_errors_exit_two() {
        let out = run_with_env(["wiles-defect", "bogus"], None);
        assert_eq!(out.code, 2);
        let out = run_with_env(["wiles-defect", "cotangent", "demo:nope"], None);
        assert_eq!(out.code, 2);
        assert!(out.stderr.contains("unknown demo"));
    }

    #[test]
    fn help_exits_zero() {
        let out = run_with_env(["wiles-defect", "--help"], None);
        assert_eq!(out.code, 0);
        assert!(out.stdout.contains("descent"));
    }
}
