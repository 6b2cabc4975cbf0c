//! `opalg`: run operator-algebra and channel checks described by JSON scenario files.
//!
//! Exit codes: 0 when every check passes, 1 for a negative mathematical
//! verdict, 2 for parse, validation or precondition failures, 3 for internal
//! errors.

mod commands;
mod output;
mod scenario;

use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use opalg::Tolerance;
use serde_json::{json, Value};

use commands::Options;
use scenario::{Diagnostic, Scenario};

#[derive(Parser)]
#[command(
    name = "opalg",
    version,
    about = "Operator-algebra and quantum channel checks from scenario files"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one scenario, or several with --batch.
    Run(RunArgs),
    /// Check scenarios against the schema without running them.
    Validate {
        #[arg(required = true)]
        scenarios: Vec<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
}

#[derive(clap::Args)]
struct RunArgs {
    #[arg(required = true)]
    scenarios: Vec<PathBuf>,
    /// Override the scenario's absolute tolerance.
    #[arg(long)]
    tol_abs: Option<f64>,
    /// Override the scenario's relative tolerance.
    #[arg(long)]
    tol_rel: Option<f64>,
    /// Override the scenario's seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print wall-clock time per scenario to stderr.
    #[arg(long)]
    timing: bool,
    /// Run all scenarios in parallel; reports keep input order.
    #[arg(long)]
    batch: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

const EXIT_PASS: u8 = 0;
const EXIT_VERDICT: u8 = 1;
const EXIT_INVALID: u8 = 2;
const EXIT_INTERNAL: u8 = 3;

struct Outcome {
    code: u8,
    report: Option<Value>,
    diagnostics: Vec<String>,
}

impl Outcome {
    fn invalid(path: &Path, diags: impl IntoIterator<Item = impl ToString>) -> Self {
        Outcome {
            code: EXIT_INVALID,
            report: None,
            diagnostics: diags
                .into_iter()
                .map(|d| format!("{}: {}", path.display(), d.to_string()))
                .collect(),
        }
    }
}

fn options() -> Options {
    Options {
        cache: std::env::var("OPALG_CACHE_DISABLE").map_or(true, |v| v != "1"),
    }
}

fn load(path: &Path) -> Result<Scenario, Vec<Diagnostic>> {
    let text = fs::read_to_string(path).map_err(|e| {
        vec![Diagnostic {
            path: String::new(),
            message: format!("cannot read scenario: {e}"),
        }]
    })?;
    scenario::parse(&text)
}

fn apply_overrides(s: &mut Scenario, args: &RunArgs) -> Result<(), String> {
    if args.tol_abs.is_some() || args.tol_rel.is_some() {
        let abs = args.tol_abs.unwrap_or(s.tol.abs);
        let rel = args.tol_rel.unwrap_or(s.tol.rel);
        s.tol = Tolerance::new(abs, rel).map_err(|e| e.to_string())?;
    }
    if let Some(seed) = args.seed {
        s.seed = seed;
    }
    Ok(())
}

fn report(s: &Scenario, verdict: bool, body: (&str, Value)) -> Value {
    let mut r = json!({
        "command": s.command.name(),
        "version": s.version,
        "seed": s.seed,
        "tol": {"abs": s.tol.abs, "rel": s.tol.rel},
        "verdict": if verdict { "pass" } else { "fail" },
    });
    r[body.0] = body.1;
    r
}

fn classify(path: &Path, s: &Scenario, e: opalg::Error) -> Outcome {
    if e.is_verdict() {
        Outcome {
            code: EXIT_VERDICT,
            report: Some(report(s, false, ("error", json!(e.to_string())))),
            diagnostics: vec![],
        }
    } else if e.is_internal() {
        Outcome {
            code: EXIT_INTERNAL,
            report: None,
            diagnostics: vec![format!("{}: {e}", path.display())],
        }
    } else {
        Outcome::invalid(path, [e])
    }
}

fn run_one(path: &Path, args: &RunArgs, opts: Options) -> Outcome {
    let mut s = match load(path) {
        Ok(s) => s,
        Err(d) => return Outcome::invalid(path, d),
    };
    if let Err(e) = apply_overrides(&mut s, args) {
        return Outcome::invalid(path, [e]);
    }
    let started = Instant::now();
    let result = panic::catch_unwind(AssertUnwindSafe(|| {
        commands::prepare(&s, opts).and_then(|p| commands::execute(&s, p))
    }));
    if args.timing {
        eprintln!(
            "timing: {} {:.3}s",
            path.display(),
            started.elapsed().as_secs_f64()
        );
    }
    match result {
        Ok(Ok(o)) => Outcome {
            code: if o.pass { EXIT_PASS } else { EXIT_VERDICT },
            report: Some(report(&s, o.pass, ("results", o.results))),
            diagnostics: vec![],
        },
        Ok(Err(e)) => classify(path, &s, e),
        Err(_) => Outcome {
            code: EXIT_INTERNAL,
            report: None,
            diagnostics: vec![format!(
                "{}: internal error: panic while running the scenario",
                path.display()
            )],
        },
    }
}

fn render(v: &Value, format: Format) -> String {
    match format {
        Format::Json => output::to_json(v),
        Format::Text => output::to_text(v),
    }
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), String> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| format!("cannot write {}: {e}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(args: RunArgs) -> u8 {
    if args.scenarios.len() > 1 && !args.batch {
        eprintln!("several scenarios given; pass --batch to run them together");
        return EXIT_INVALID;
    }
    let opts = options();
    let outcomes: Vec<Outcome> = if args.batch {
        std::thread::scope(|scope| {
            let handles: Vec<_> = args
                .scenarios
                .iter()
                .map(|p| scope.spawn(|| run_one(p, &args, opts)))
                .collect();
            handles
                .into_iter()
                .map(|h| {
                    h.join().unwrap_or_else(|_| Outcome {
                        code: EXIT_INTERNAL,
                        report: None,
                        diagnostics: vec!["internal error: worker thread panicked".into()],
                    })
                })
                .collect()
        })
    } else {
        vec![run_one(&args.scenarios[0], &args, opts)]
    };

    for o in &outcomes {
        for d in &o.diagnostics {
            eprintln!("{d}");
        }
    }
    let text = if args.batch {
        match args.format {
            Format::Json => {
                let all: Vec<Value> = outcomes
                    .iter()
                    .map(|o| o.report.clone().unwrap_or(Value::Null))
                    .collect();
                output::to_json(&Value::Array(all))
            }
            Format::Text => outcomes
                .iter()
                .zip(&args.scenarios)
                .map(|(o, p)| {
                    let body = o
                        .report
                        .as_ref()
                        .map_or_else(|| "no report\n".to_string(), output::to_text);
                    format!("== {}\n{body}", p.display())
                })
                .collect(),
        }
    } else {
        outcomes[0]
            .report
            .as_ref()
            .map(|r| render(r, args.format))
            .unwrap_or_default()
    };
    if !text.is_empty() {
        if let Err(e) = emit(&text, args.out.as_deref()) {
            eprintln!("{e}");
            return EXIT_INTERNAL;
        }
    }
    outcomes.iter().map(|o| o.code).max().unwrap_or(EXIT_PASS)
}

fn validate(paths: &[PathBuf], format: Format) -> u8 {
    let opts = options();
    let mut all = Vec::new();
    for path in paths {
        let diags: Vec<Diagnostic> = match load(path) {
            Err(d) => d,
            Ok(s) => match commands::prepare(&s, opts) {
                Ok(_) => vec![],
                Err(e) => vec![Diagnostic {
                    path: "payload".into(),
                    message: e.to_string(),
                }],
            },
        };
        for d in diags {
            all.push(
                json!({"file": path.display().to_string(), "path": d.path, "message": d.message}),
            );
        }
    }
    let code = if all.is_empty() {
        EXIT_PASS
    } else {
        EXIT_INVALID
    };
    print!("{}", render(&json!({ "diagnostics": all }), format));
    code
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() {
                EXIT_INVALID
            } else {
                EXIT_PASS
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let code = match cli.command {
        Cmd::Run(args) => run(args),
        Cmd::Validate { scenarios, format } => validate(&scenarios, format),
    };
    ExitCode::from(code)
}
