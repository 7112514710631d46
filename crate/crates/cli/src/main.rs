//! Command-line front door over the JSON interchange formats: validate,
//! convert, enumerate, take minors, audit conversion round trips, and
//! reproduce built-in counterexamples.
//!
//! Exit codes: 0 = verdict true / operation succeeded; 1 = verdict false,
//! with the violation report as JSON on stdout; 2 = usage or input error,
//! reported on stderr. All indices on the wire are 1-based.

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};
use std::io::Read as _;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use tropom::bigraph::BiGraph;
use tropom::cryptomorphism::handle_to_fms;
use tropom::fms::ValidationMode;
use tropom::json::{handle_from_str, handle_to_string, handle_to_value};
use tropom::matchfield::{EnsembleLevel, LinkageVariant};
use tropom::{
    enumerate, extraction, Error, EnumerationKind, EnumerationTask, GenericTom, ObjectHandle,
    TopeArrangement, ValidationReport,
};
use tropom::ArrangementLevel;

/// Overrides the built-in desk-scale cap on n + d for `enumerate`.
const SIZE_LIMIT_VAR: &str = "TROPOM_SIZE_LIMIT";

#[derive(Parser)]
#[command(
    name = "tropom",
    version,
    about = "Validate, convert, enumerate, and dissect the combinatorial objects \
             around generic tropical oriented matroids"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check an object against its axioms and print the validation report.
    Validate {
        /// Expected object kind; rejected if the input declares another.
        #[arg(long)]
        kind: Option<String>,
        /// Subdivision axiom set: full, linkage_only, or compat_only.
        #[arg(long)]
        mode: Option<String>,
        /// Arrangement axiom level: tope_arrangement, pre_trianguloid, or
        /// trianguloid (the default).
        #[arg(long)]
        level: Option<String>,
        /// Matching-field linkage formulation: strong, weak, three_element,
        /// exchange, elimination, or all (the default).
        #[arg(long)]
        variant: Option<String>,
        #[command(flatten)]
        io: IoArgs,
    },
    /// Convert an object to another kind and print it.
    Convert {
        /// Target kind: fms, tom, matching_stack, matching_field, or
        /// tope_arrangement.
        #[arg(long)]
        to: String,
        #[command(flatten)]
        io: IoArgs,
    },
    /// Enumerate every object of a kind at size (n, d) as JSON lines,
    /// followed by a one-line summary.
    Enumerate {
        /// Object kind: fms, pre_trianguloid, trianguloid, tope_arrangement,
        /// matching_field, or linkage_matching_field.
        #[arg(long)]
        kind: String,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
        /// Print only the summary line.
        #[arg(long)]
        count_only: bool,
        /// Search-node budget; a truncated run is flagged in the summary.
        #[arg(long)]
        limit: Option<u64>,
        /// Emit one representative per relabeling orbit (quotient counts).
        #[arg(long)]
        up_to_symmetry: bool,
        #[command(flatten)]
        io: IoArgs,
    },
    /// Delete left vertices and/or contract right vertices (1-based).
    Minor {
        /// Comma-separated left vertices to delete, e.g. 1,3.
        #[arg(long, value_delimiter = ',')]
        delete_left: Vec<usize>,
        /// Comma-separated right vertices to contract.
        #[arg(long, value_delimiter = ',')]
        contract_right: Vec<usize>,
        #[command(flatten)]
        io: IoArgs,
    },
    /// Audit the full conversion cycle starting from the input object.
    Roundtrip {
        #[command(flatten)]
        io: IoArgs,
    },
    /// Reproduce a built-in counterexample by name.
    Counterexample {
        /// One of: ensembles-lemma-3.16, pretri-not-trianguloid.
        name: String,
        #[command(flatten)]
        io: IoArgs,
    },
}

#[derive(Args)]
struct IoArgs {
    /// Input path; stdin when omitted.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Output path; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Pretty-print JSON output (single-object commands only; enumeration
    /// streams stay one object per line).
    #[arg(long)]
    pretty: bool,
}

/// A usage or input error: message on stderr, exit 2.
struct Usage(String);

impl<E: std::fmt::Display> From<E> for Usage {
    fn from(e: E) -> Self {
        Usage(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(Usage(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> Result<ExitCode, Usage> {
    match command {
        Command::Validate {
            kind,
            mode,
            level,
            variant,
            io,
        } => cmd_validate(kind, mode, level, variant, &io),
        Command::Convert { to, io } => cmd_convert(&to, &io),
        Command::Enumerate {
            kind,
            n,
            d,
            count_only,
            limit,
            up_to_symmetry,
            io,
        } => cmd_enumerate(&kind, n, d, count_only, limit, up_to_symmetry, &io),
        Command::Minor {
            delete_left,
            contract_right,
            io,
        } => cmd_minor(&delete_left, &contract_right, &io),
        Command::Roundtrip { io } => cmd_roundtrip(&io),
        Command::Counterexample { name, io } => cmd_counterexample(&name, &io),
    }
}

fn read_input(io: &IoArgs) -> Result<String, Usage> {
    let mut text = String::new();
    match &io.input {
        Some(path) => {
            text = std::fs::read_to_string(path)
                .map_err(|e| Usage(format!("cannot read {}: {e}", path.display())))?;
        }
        None => {
            std::io::stdin()
                .read_to_string(&mut text)
                .map_err(|e| Usage(format!("cannot read stdin: {e}")))?;
        }
    }
    Ok(text)
}

fn emit(io: &IoArgs, text: &str) -> Result<(), Usage> {
    match &io.output {
        Some(path) => {
            std::fs::write(path, format!("{text}\n"))
                .map_err(|e| Usage(format!("cannot write {}: {e}", path.display())))?;
        }
        None => {
            let mut out = std::io::stdout().lock();
            if let Err(e) = writeln!(out, "{text}") {
                if e.kind() == std::io::ErrorKind::BrokenPipe {
                    // The consumer closed the pipe (e.g. `| head`); die quietly.
                    std::process::exit(0);
                }
                return Err(Usage(format!("cannot write stdout: {e}")));
            }
        }
    }
    Ok(())
}

fn emit_value(io: &IoArgs, value: &Value) -> Result<(), Usage> {
    let text = if io.pretty {
        serde_json::to_string_pretty(value).expect("JSON value serialization cannot fail")
    } else {
        value.to_string()
    };
    emit(io, &text)
}

fn normalize(name: &str) -> String {
    name.trim().to_ascii_lowercase().replace('-', "_")
}

/// Folds the accepted aliases down to the canonical wire kind.
fn canonical_kind(name: &str) -> Result<&'static str, Usage> {
    match normalize(name).as_str() {
        "fms" | "subdivision" | "fine_mixed_subdivision" => Ok("fms"),
        "tom" | "matroid" => Ok("tom"),
        "stack" | "matching_stack" | "ensemble" => Ok("matching_stack"),
        "field" | "matching_field" => Ok("matching_field"),
        "arrangement" | "tope_arrangement" => Ok("tope_arrangement"),
        other => Err(Usage(format!("unknown object kind `{other}`"))),
    }
}

/// Parses an object document. Syntactic failures (bad JSON, unknown kind,
/// out-of-range indices) are usage errors; everything else means the document
/// described an object its own constructor rejects, which the caller may
/// treat as a validation verdict.
fn parse_object(text: &str) -> Result<Result<ObjectHandle, Error>, Usage> {
    match handle_from_str(text) {
        Ok(handle) => Ok(Ok(handle)),
        Err(Error::Parse(message)) => Err(Usage(message)),
        Err(other) => Ok(Err(other)),
    }
}

fn report_exit(io: &IoArgs, report: &ValidationReport) -> Result<ExitCode, Usage> {
    emit_value(io, &report.to_json())?;
    Ok(if report.verdict {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn cmd_validate(
    kind: Option<String>,
    mode: Option<String>,
    level: Option<String>,
    variant: Option<String>,
    io: &IoArgs,
) -> Result<ExitCode, Usage> {
    let text = read_input(io)?;
    let handle = match parse_object(&text)? {
        Ok(handle) => handle,
        Err(constructor_error) => {
            // The document parses but describes no lawful object; that is a
            // verdict, not a usage error.
            let mut report = ValidationReport::new();
            report.fail("input.construct", constructor_error.to_string(), Value::Null);
            return report_exit(io, &report);
        }
    };
    if let Some(expected) = &kind {
        let expected = canonical_kind(expected)?;
        if expected != handle.kind() {
            return Err(Usage(format!(
                "input is a {}, but --kind {expected} was requested",
                handle.kind()
            )));
        }
    }
    for (flag, value, applies) in [
        ("--mode", &mode, handle.kind() == "fms"),
        ("--level", &level, handle.kind() == "tope_arrangement"),
        ("--variant", &variant, handle.kind() == "matching_field"),
    ] {
        if value.is_some() && !applies {
            return Err(Usage(format!("{flag} does not apply to a {}", handle.kind())));
        }
    }
    let report = match &handle {
        ObjectHandle::Fms(f) => {
            let mode = match mode.as_deref().map(normalize).as_deref() {
                None | Some("full") => ValidationMode::Full,
                Some("linkage_only") => ValidationMode::LinkageOnly,
                Some("compat_only") => ValidationMode::CompatOnly,
                Some(other) => return Err(Usage(format!("unknown validation mode `{other}`"))),
            };
            f.validate(mode)
        }
        ObjectHandle::Tom(t) => match t.validate() {
            Ok(report) => report,
            Err(e) => {
                let mut report = ValidationReport::new();
                report.fail("tom.validate", e.to_string(), Value::Null);
                report
            }
        },
        ObjectHandle::Stack(s) => s.validate_ensemble(EnsembleLevel::Full),
        ObjectHandle::Field(f) => match variant.as_deref().map(normalize).as_deref() {
            None | Some("all") => {
                let mut report = ValidationReport::new();
                for v in LinkageVariant::ALL {
                    report.absorb(f.check_linkage(v));
                }
                report
            }
            Some(s) => f.check_linkage(s.parse::<LinkageVariant>()?),
        },
        ObjectHandle::Arrangement(a) => {
            let level = match level.as_deref() {
                None => ArrangementLevel::Trianguloid,
                Some(s) => normalize(s).parse::<ArrangementLevel>()?,
            };
            a.validate(level)
        }
    };
    report_exit(io, &report)
}

fn cmd_convert(to: &str, io: &IoArgs) -> Result<ExitCode, Usage> {
    let target = canonical_kind(to)?;
    let text = read_input(io)?;
    let handle = parse_object(&text)?.map_err(|e| Usage(e.to_string()))?;
    let converted: Result<ObjectHandle, Error> = (|| {
        if target == handle.kind() {
            return Ok(handle.clone());
        }
        let fms = handle_to_fms(&handle)?;
        Ok(match target {
            "fms" => ObjectHandle::Fms(fms),
            "tom" => ObjectHandle::Tom(GenericTom::from_tree_types(
                fms.n(),
                fms.d(),
                fms.cells().to_vec(),
            )?),
            "matching_stack" => {
                let tom = GenericTom::from_tree_types(fms.n(), fms.d(), fms.cells().to_vec())?;
                ObjectHandle::Stack(extraction(&tom)?)
            }
            "matching_field" => {
                let tom = GenericTom::from_tree_types(fms.n(), fms.d(), fms.cells().to_vec())?;
                ObjectHandle::Field(extraction(&tom)?.complete()?)
            }
            "tope_arrangement" => ObjectHandle::Arrangement(TopeArrangement::from_fms(&fms)?),
            _ => unreachable!("canonical_kind covers every target"),
        })
    })();
    match converted {
        Ok(out) => {
            emit(io, &handle_to_string(&out, io.pretty))?;
            Ok(ExitCode::SUCCESS)
        }
        Err(e) => {
            let mut report = ValidationReport::new();
            report.fail(
                "convert.failed",
                e.to_string(),
                json!({"from": handle.kind(), "to": target}),
            );
            emit_value(io, &report.to_json())?;
            Ok(ExitCode::from(1))
        }
    }
}

fn cmd_enumerate(
    kind: &str,
    n: usize,
    d: usize,
    count_only: bool,
    limit: Option<u64>,
    up_to_symmetry: bool,
    io: &IoArgs,
) -> Result<ExitCode, Usage> {
    let kind: EnumerationKind = normalize(kind).parse()?;
    if let Ok(cap) = std::env::var(SIZE_LIMIT_VAR) {
        let cap: usize = cap
            .parse()
            .map_err(|_| Usage(format!("{SIZE_LIMIT_VAR} must be an integer, got `{cap}`")))?;
        if n + d > cap {
            return Err(Usage(format!(
                "n + d = {} exceeds the {SIZE_LIMIT_VAR} cap of {cap}",
                n + d
            )));
        }
    }
    let mut task = EnumerationTask::new(kind, n, d);
    if let Some(budget) = limit {
        task = task.with_budget(budget);
    }
    if up_to_symmetry {
        task = task.quotient_by_symmetry();
    }
    let started = Instant::now();
    let outcome = enumerate(&task)?;
    let mut lines = Vec::with_capacity(outcome.objects.len() + 1);
    if !count_only {
        for object in &outcome.objects {
            lines.push(handle_to_string(object, false));
        }
    }
    let mut summary = json!({
        "kind": kind.as_str(),
        "n": n,
        "d": d,
        "count": outcome.objects.len(),
        "elapsed_ms": started.elapsed().as_millis() as u64,
    });
    if !outcome.complete {
        summary["complete"] = Value::Bool(false);
    }
    if up_to_symmetry {
        summary["up_to_symmetry"] = Value::Bool(true);
    }
    lines.push(summary.to_string());
    emit(io, &lines.join("\n"))?;
    Ok(ExitCode::SUCCESS)
}

fn one_based(indices: &[usize], flag: &str) -> Result<Vec<usize>, Usage> {
    indices
        .iter()
        .map(|&x| {
            x.checked_sub(1)
                .ok_or_else(|| Usage(format!("{flag} indices are 1-based; got 0")))
        })
        .collect()
}

fn cmd_minor(delete_left: &[usize], contract_right: &[usize], io: &IoArgs) -> Result<ExitCode, Usage> {
    let delete_left = one_based(delete_left, "--delete-left")?;
    let contract_right = one_based(contract_right, "--contract-right")?;
    let text = read_input(io)?;
    let handle = parse_object(&text)?.map_err(|e| Usage(e.to_string()))?;
    let minored = handle
        .minor(&delete_left, &contract_right)
        .map_err(|e| Usage(e.to_string()))?;
    emit(io, &handle_to_string(&minored, io.pretty))?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_roundtrip(io: &IoArgs) -> Result<ExitCode, Usage> {
    let text = read_input(io)?;
    let handle = parse_object(&text)?.map_err(|e| Usage(e.to_string()))?;
    let report = tropom::roundtrip_audit(&handle);
    report_exit(io, &report)
}

/// The four tree-types of the staircase subdivision of 2Δ³, the running
/// example behind both built-in counterexamples.
fn staircase_tom() -> GenericTom {
    let cells = [
        [0b1111u64, 0b0001],
        [0b1110, 0b0011],
        [0b1100, 0b0111],
        [0b1000, 0b1111],
    ]
    .into_iter()
    .map(|rows| BiGraph::from_rows(2, 4, rows.to_vec()).expect("constant cell"))
    .collect();
    GenericTom::from_tree_types(2, 4, cells).expect("constant matroid")
}

fn cmd_counterexample(name: &str, io: &IoArgs) -> Result<ExitCode, Usage> {
    match name {
        // Two types of a matroid whose union fails to be a type: the union
        // axiom familiar from ensembles of matching fields does not lift to
        // arbitrary type pairs.
        "ensembles-lemma-3.16" => {
            let first = BiGraph::from_rows(2, 4, vec![0b1010, 0b0001]).expect("constant type");
            let second = BiGraph::from_rows(2, 4, vec![0b1000, 0b0101]).expect("constant type");
            let union = first.union(&second).expect("same ambient");
            let tom = staircase_tom();
            let types = tom.types();
            if !types.contains(&first) || !types.contains(&second) {
                return Err(Usage(
                    "internal: the chosen graphs are not types of the staircase matroid".into(),
                ));
            }
            let verdict = if types.contains(&union) {
                "union unexpectedly a type"
            } else {
                "union not a type"
            };
            let value = json!({
                "name": name,
                "n": 2,
                "d": 4,
                "first": first,
                "second": second,
                "union": union,
                "verdict": verdict,
                "context": handle_to_value(&ObjectHandle::Tom(tom)),
            });
            emit_value(io, &value)?;
            Ok(if verdict == "union not a type" {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
        // The first enumerated (2,3) pre-trianguloid that fails the hexagon
        // axiom, witnessing that pre-trianguloids strictly contain
        // trianguloids.
        "pretri-not-trianguloid" => {
            let outcome = enumerate(&EnumerationTask::new(
                EnumerationKind::PreTrianguloid,
                2,
                3,
            ))
            .map_err(|e| Usage(e.to_string()))?;
            let violator = outcome.objects.iter().find_map(|object| {
                let ObjectHandle::Arrangement(a) = object else {
                    return None;
                };
                let report = a.validate(ArrangementLevel::Trianguloid);
                (!report.verdict).then_some((object, report))
            });
            let (object, report) = violator.ok_or_else(|| {
                Usage("internal: every (2,3) pre-trianguloid passed the trianguloid axioms".into())
            })?;
            let value = json!({
                "name": name,
                "object": handle_to_value(object),
                "report": report.to_json(),
            });
            emit_value(io, &value)?;
            Ok(ExitCode::SUCCESS)
        }
        other => Err(Usage(format!(
            "unknown counterexample `{other}`; available: ensembles-lemma-3.16, pretri-not-trianguloid"
        ))),
    }
}
