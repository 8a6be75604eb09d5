//! `gsgrid`: check, analyze, evaluate, render, and format grid files.
//!
//! Exit codes: 0 success, 1 validation or parse problems in the input,
//! 2 usage or IO errors. Diagnostics go to stderr, data to stdout.

use std::io::{IsTerminal, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use gsgrid_core::eval::{evaluate_grid, EvaluationResult, GroupBinding, Outcome};
use gsgrid_core::export::{to_dot, to_json, to_markdown_report, RenderOptions};
use gsgrid_core::lang::{
    parse_asset_inventory, parse_grid, parse_measurement_data, serialize_grid, ParseDiagnostic,
    ParseOutput, Severity, SourceSpan,
};
use gsgrid_core::model::MetricKind;
use gsgrid_core::validate::{gap_analysis, validate_entities, ValidationFinding};
use gsgrid_core::Grid;

#[derive(Parser)]
#[command(name = "gsgrid", version, about = "GQM+Strategies grid toolchain")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a grid file
    Check {
        file: PathBuf,
        /// Treat warnings as failures
        #[arg(long)]
        strict: bool,
    },
    /// Compare a grid against an asset inventory
    Gap {
        file: PathBuf,
        /// Asset inventory CSV
        #[arg(long)]
        assets: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// List the data that has to be collected
    Plan {
        file: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Evaluate goal statuses against measurement data
    Eval {
        file: PathBuf,
        /// Measurement data CSV
        #[arg(long)]
        data: PathBuf,
        /// Fix a dimension, as key=value; repeatable
        #[arg(long)]
        group: Vec<String>,
        #[arg(long)]
        json: bool,
    },
    /// Render the grid as dot, json, or md
    Render {
        file: PathBuf,
        #[arg(long, value_enum)]
        format: Format,
        /// Evaluate this dataset and include statuses
        #[arg(long)]
        with_data: Option<PathBuf>,
        /// Write to a file instead of stdout
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Rewrite a grid file in canonical form
    Fmt {
        file: PathBuf,
        /// Rewrite the file in place
        #[arg(long)]
        write: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Dot,
    Json,
    Md,
}

fn color_enabled() -> bool {
    match std::env::var("GSGRID_COLOR").as_deref() {
        Ok("always") => true,
        Ok("never") => false,
        _ => std::io::stderr().is_terminal(),
    }
}

fn severity_tag(severity: Severity, code: &str) -> String {
    let word = severity.to_string();
    if color_enabled() {
        let tint = match severity {
            Severity::Error => "31",
            Severity::Warning => "33",
        };
        format!("\x1b[{tint}m{word}\x1b[0m[{code}]")
    } else {
        format!("{word}[{code}]")
    }
}

fn print_diagnostic(d: &ParseDiagnostic) {
    eprintln!(
        "{}: {} {}",
        d.span,
        severity_tag(d.severity, &d.code),
        d.message
    );
}

fn print_finding(f: &ValidationFinding, spans: &[(gsgrid_core::lang::EntityKind, String, SourceSpan)], file: &str) {
    let location = spans
        .iter()
        .find(|(_, id, _)| *id == f.subject)
        .map(|(_, _, s)| s.to_string())
        .unwrap_or_else(|| format!("{file}:1:1"));
    eprintln!(
        "{location}: {} {}",
        severity_tag(f.severity, f.rule),
        f.message
    );
}

enum CliError {
    /// Problems in the input; already reported on stderr.
    Invalid,
    /// Usage or IO failure.
    Usage(String),
}

type CliResult<T> = Result<T, CliError>;

fn read_file(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))
}

fn parse_file(path: &Path) -> CliResult<ParseOutput> {
    let text = read_file(path)?;
    let out = parse_grid(&text, &path.display().to_string());
    for d in &out.diagnostics {
        print_diagnostic(d);
    }
    if out.has_errors() {
        return Err(CliError::Invalid);
    }
    Ok(out)
}

/// Parse plus full semantic validation. Findings print to stderr; errors
/// (and warnings, under strict) fail the run.
fn load_checked(path: &Path, strict: bool) -> CliResult<Grid> {
    let out = parse_file(path)?;
    let file = path.display().to_string();
    let spans = out.spans;
    let (grid, findings) = match validate_entities(out.units, out.elements, out.graphs) {
        Ok(pair) => pair,
        Err(findings) => {
            for f in &findings {
                print_finding(f, &spans, &file);
            }
            return Err(CliError::Invalid);
        }
    };
    for f in &findings {
        print_finding(f, &spans, &file);
    }
    let failing = findings
        .iter()
        .any(|f| f.severity == Severity::Error || strict);
    if failing {
        return Err(CliError::Invalid);
    }
    Ok(grid)
}

fn load_dataset(path: &Path) -> CliResult<gsgrid_core::lang::MeasurementDataset> {
    let text = read_file(path)?;
    let (ds, diags) = parse_measurement_data(&text, &path.display().to_string())
        .map_err(|e| CliError::Usage(e.to_string()))?;
    for d in &diags {
        print_diagnostic(d);
    }
    Ok(ds)
}

fn parse_groups(pairs: &[String]) -> CliResult<GroupBinding> {
    let mut binding = GroupBinding::new();
    for pair in pairs {
        let Some((k, v)) = pair.split_once('=') else {
            return Err(CliError::Usage(format!(
                "--group takes key=value, got `{pair}`"
            )));
        };
        binding.insert(k.trim().to_owned(), v.trim().to_owned());
    }
    Ok(binding)
}

fn outcome_word(o: Outcome) -> &'static str {
    match o {
        Outcome::Achieved => "achieved",
        Outcome::NotAchieved => "not_achieved",
        Outcome::Unknown => "unknown",
    }
}

fn kind_word(k: MetricKind) -> &'static str {
    match k {
        MetricKind::Base => "base",
        MetricKind::Derived => "derived",
        MetricKind::Baseline => "baseline",
    }
}

fn emit(out: Option<&Path>, content: &str) -> CliResult<()> {
    match out {
        Some(path) => std::fs::write(path, content)
            .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{content}");
            std::io::stdout().flush().ok();
            Ok(())
        }
    }
}

fn evaluate(grid: &Grid, data_path: &Path, binding: &GroupBinding) -> CliResult<EvaluationResult> {
    let data = load_dataset(data_path)?;
    Ok(evaluate_grid(grid, &data, binding))
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Check { file, strict } => {
            load_checked(&file, strict)?;
            Ok(())
        }
        Command::Gap { file, assets, json } => {
            let grid = load_checked(&file, false)?;
            let text = read_file(&assets)?;
            let (inventory, diags) =
                parse_asset_inventory(&text, &assets.display().to_string())
                    .map_err(|e| CliError::Usage(e.to_string()))?;
            for d in &diags {
                print_diagnostic(d);
            }
            let report = gap_analysis(&grid, &inventory).map_err(|e| {
                eprintln!("{e}");
                CliError::Invalid
            })?;
            if json {
                println!("{}", serde_json::to_string_pretty(&report).unwrap());
            } else {
                println!("reused:");
                for m in &report.reused {
                    println!("  {} -> {}", m.asset_name, m.entity);
                }
                println!("missing measures:");
                for m in &report.missing_measures {
                    println!("  {m}");
                }
                println!("unused assets:");
                for a in &report.unused_assets {
                    println!("  {a}");
                }
                println!("orphan goals:");
                for g in &report.orphan_goals {
                    println!("  {g}");
                }
            }
            Ok(())
        }
        Command::Plan { file, json } => {
            let grid = load_checked(&file, false)?;
            let plan = gsgrid_core::plan::measurement_plan(&grid);
            if json {
                println!("{}", serde_json::to_string_pretty(&plan).unwrap());
            } else {
                for group in &plan.groups {
                    println!("{}.{}:", group.unit, group.level);
                    for e in &group.entries {
                        let dims = if e.dimensions.is_empty() {
                            String::new()
                        } else {
                            format!(" by {}", e.dimensions.join(", "))
                        };
                        println!("  {} ({}){dims}", e.metric, kind_word(e.kind));
                    }
                }
            }
            Ok(())
        }
        Command::Eval {
            file,
            data,
            group,
            json,
        } => {
            let grid = load_checked(&file, false)?;
            let binding = parse_groups(&group)?;
            let result = evaluate(&grid, &data, &binding)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&result).unwrap());
            } else {
                for g in &result.goals {
                    println!("{}: {}", g.id, outcome_word(g.status));
                }
                println!(
                    "achieved {} / not achieved {} / unknown {}",
                    result.summary.achieved,
                    result.summary.not_achieved,
                    result.summary.unknown
                );
            }
            Ok(())
        }
        Command::Render {
            file,
            format,
            with_data,
            out,
        } => {
            let grid = load_checked(&file, false)?;
            let result = match &with_data {
                Some(path) => Some(evaluate(&grid, path, &GroupBinding::new())?),
                None => None,
            };
            let opts = RenderOptions {
                include_status: result.is_some(),
                include_gqm: true,
                ..RenderOptions::default()
            };
            let content = match format {
                Format::Dot => to_dot(&grid, result.as_ref(), &opts),
                Format::Json => to_json(&grid, result.as_ref()),
                Format::Md => to_markdown_report(&grid, result.as_ref(), None),
            };
            emit(out.as_deref(), &content)
        }
        Command::Fmt { file, write } => {
            // formatting needs a buildable grid, not a semantically valid one
            let out = parse_file(&file)?;
            let grid = Grid::build(out.units, out.elements, out.graphs).map_err(|e| {
                eprintln!("{e}");
                CliError::Invalid
            })?;
            let text = serialize_grid(&grid);
            if write {
                emit(Some(&file), &text)
            } else {
                emit(None, &text)
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Invalid) => ExitCode::from(1),
        Err(CliError::Usage(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(2)
        }
    }
}
