//! Command-line front end.
//!
//! Input files are two-column CSV with a header row. Column one holds the
//! group-1 value and column two the group-2 value of the same subject; an
//! empty cell or `NA` marks a missing value.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::method::{Method, SeMode};
use crate::sample::{summarize, Ingested, PartiallyPairedSample, SummaryStats};
use crate::sim::{
    parse_scenarios_file, render_records, render_table, run_scenario, SimulationReport,
};
use crate::wmd::{SeMethod, TestResult, DEFAULT_BOOTSTRAP_REPLICATES};

#[derive(Debug, Parser)]
#[command(
    name = "wmd",
    version,
    about = "Weighted mean-difference tests for partially paired data"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Test equality of the two group means in a CSV file.
    Test(TestArgs),
    /// Run every scenario of a scenario file.
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SeChoice {
    Plugin,
    Bootstrap,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Json,
}

#[derive(Debug, Args)]
pub struct TestArgs {
    /// Two-column CSV (group 1, group 2) with a header row.
    pub input: PathBuf,
    /// wmd-optimal, wmd-simple, wmd-complete, wmd-fixed(w1,w2), bhoj, bhoj(l), t-cp, t-im, w-cp or w-im.
    #[arg(long, default_value = "wmd-optimal")]
    pub method: String,
    #[arg(long, value_enum, default_value_t = SeChoice::Bootstrap)]
    pub se: SeChoice,
    /// Bootstrap replicates.
    #[arg(long = "bootstrap", value_name = "B", default_value_t = DEFAULT_BOOTSTRAP_REPLICATES)]
    pub bootstrap: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    pub format: Format,
    /// Write the parsed sample back out as CSV.
    #[arg(long, value_name = "PATH")]
    pub export: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    pub scenarios: PathBuf,
    /// Directory receiving one JSON report per scenario plus `records.jsonl`.
    #[arg(long, default_value = "reports")]
    pub out_dir: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    pub format: Format,
}

/// Reads a two-column CSV file.
pub fn parse_csv(path: &Path) -> Result<Ingested> {
    let mut text = String::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_csv_str(&text)
}

pub fn parse_csv_str(text: &str) -> Result<Ingested> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader.headers().map_err(csv_error)?.clone();
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Err(Error::EmptyFile);
    }
    if headers.len() != 2 {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected 2 columns, header has {}", headers.len()),
        });
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        if record.len() != 2 {
            return Err(Error::Parse {
                line,
                message: format!("expected 2 fields, found {}", record.len()),
            });
        }
        rows.push((cell(&record[0], line)?, cell(&record[1], line)?));
    }
    if rows.is_empty() {
        return Err(Error::EmptyFile);
    }
    PartiallyPairedSample::from_rows(rows)
}

fn cell(s: &str, line: usize) -> Result<Option<f64>> {
    if s.is_empty() || s == "NA" {
        return Ok(None);
    }
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(Some(v)),
        _ => Err(Error::Parse {
            line,
            message: format!("'{s}' is not a finite number"),
        }),
    }
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    Error::Parse {
        line,
        message: e.to_string(),
    }
}

/// CSV text that [`parse_csv_str`] reads back to the same sample.
pub fn write_csv(sample: &PartiallyPairedSample) -> String {
    let fmt = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), |x| x.to_string());
    let mut out = String::from("group1,group2\n");
    for (a, b) in sample.rows() {
        out.push_str(&format!("{},{}\n", fmt(a), fmt(b)));
    }
    out
}

#[derive(Debug, Serialize)]
struct TestOutput<'a> {
    input: String,
    method: Method,
    alpha: f64,
    regime: &'static str,
    reject: bool,
    dropped_rows: usize,
    result: &'a TestResult,
    summary: Option<SummaryStats>,
}

#[derive(Debug, Serialize)]
struct ErrorOutput<'a> {
    error: &'a str,
    message: String,
}

/// Parses `args` and runs the command, returning the exit status.
pub fn main_with_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{e}");
                return 2;
            }
            let _ = write!(out, "{e}");
            return 0;
        }
    };
    run(&cli, out, err)
}

pub fn run(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let (result, format) = match &cli.command {
        Command::Test(a) => (run_test(a, out), a.format),
        Command::Simulate(a) => (run_simulate(a, out, err), a.format),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            report_error(&e, format, err);
            e.class().exit_code()
        }
    }
}

fn report_error(e: &Error, format: Format, err: &mut dyn Write) {
    let _ = match format {
        Format::Table => writeln!(err, "error[{}]: {e}", e.code()),
        Format::Json => writeln!(
            err,
            "{}",
            serde_json::to_string(&ErrorOutput {
                error: e.code(),
                message: e.to_string(),
            })
            .unwrap_or_default()
        ),
    };
}

fn run_test(a: &TestArgs, out: &mut dyn Write) -> Result<()> {
    let method: Method = a.method.parse()?;
    if !(a.alpha > 0.0 && a.alpha < 1.0) {
        return Err(Error::InvalidParams(format!(
            "alpha must lie in (0, 1), got {}",
            a.alpha
        )));
    }
    let se = match a.se {
        SeChoice::Plugin => SeMode::PlugIn,
        SeChoice::Bootstrap if a.bootstrap < 2 => {
            return Err(Error::InvalidParams(
                "--bootstrap must be at least 2".into(),
            ))
        }
        SeChoice::Bootstrap => SeMode::Bootstrap {
            replicates: a.bootstrap,
        },
    };
    let ingested = parse_csv(&a.input)?;
    if let Some(path) = &a.export {
        fs::write(path, write_csv(&ingested.sample))?;
    }
    let sample = &ingested.sample;
    let result = method.run(sample, se, a.seed)?;
    let output = TestOutput {
        input: a.input.display().to_string(),
        method,
        alpha: a.alpha,
        regime: sample.pattern().as_str(),
        reject: result.rejects(a.alpha),
        dropped_rows: ingested.dropped_both_missing,
        result: &result,
        summary: summarize(sample).ok(),
    };
    match a.format {
        Format::Json => writeln!(out, "{}", serde_json::to_string(&output).map_err(internal)?)?,
        Format::Table => out.write_all(test_table(&output).as_bytes())?,
    }
    Ok(())
}

fn internal(e: impl std::fmt::Display) -> Error {
    Error::Internal(e.to_string())
}

fn test_table(o: &TestOutput<'_>) -> String {
    let r = o.result;
    let se = match r.se_method {
        SeMethod::PlugIn => "plug-in".to_string(),
        SeMethod::Bootstrap { replicates, seed } => {
            format!("bootstrap, B={replicates}, seed={seed}")
        }
        SeMethod::Classical => "classical".to_string(),
    };
    let weights = r.weights.map_or_else(
        || "-".to_string(),
        |w| format!("w1={:.6}  w2={:.6}", w.w1, w.w2),
    );
    let mut lines = vec![
        ("input", o.input.clone()),
        ("method", o.method.to_string()),
        ("regime", o.regime.to_string()),
        ("n0 / n1 / n2", format!("{} / {} / {}", r.n0, r.n1, r.n2)),
    ];
    if o.dropped_rows > 0 {
        lines.push(("dropped rows", o.dropped_rows.to_string()));
    }
    lines.extend([
        ("weights", weights),
        ("estimate", format!("{:.6}", r.estimate)),
        ("std error", format!("{:.6} ({se})", r.std_error)),
        ("statistic", format!("{:.6}", r.statistic)),
        ("p-value", format!("{:.6}", r.p_value)),
        (
            "decision",
            format!(
                "{} at alpha = {}",
                if o.reject { "reject" } else { "retain" },
                o.alpha
            ),
        ),
    ]);
    lines
        .into_iter()
        .map(|(k, v)| format!("{k:<14}{v}\n"))
        .collect()
}

fn file_stem(report: &SimulationReport) -> String {
    let name: String = report
        .scenario
        .name
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect();
    format!("{name}_n{}", report.scenario.n)
}

fn run_simulate(a: &SimulateArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let specs = parse_scenarios_file(&a.scenarios)?;
    fs::create_dir_all(&a.out_dir)?;
    let mut reports = Vec::new();
    let mut first_error = None;
    for spec in &specs {
        match run_scenario(spec) {
            Ok(report) => {
                let json = serde_json::to_string_pretty(&report).map_err(internal)?;
                fs::write(
                    a.out_dir.join(format!("{}.json", file_stem(&report))),
                    json + "\n",
                )?;
                reports.push(report);
            }
            Err(e) => {
                let _ = writeln!(err, "scenario '{}' (n = {}) failed: {e}", spec.name, spec.n);
                first_error.get_or_insert(e);
            }
        }
    }
    let records = render_records(&reports);
    fs::write(a.out_dir.join("records.jsonl"), &records)?;
    let table = render_table(&reports);
    fs::write(a.out_dir.join("summary.txt"), &table)?;
    match a.format {
        Format::Table => out.write_all(table.as_bytes())?,
        Format::Json => out.write_all(records.as_bytes())?,
    }
    first_error.map_or(Ok(()), Err)
}
