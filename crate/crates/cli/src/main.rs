use std::path::Path;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use liesym::determine::{self, AnsatzSpec, SymmetryBasis};
use liesym::frontend::parse_system;
use liesym::frontend::registry::{self, LoadedCase, REDUCTION_WINDOW};
use liesym::frontend::report::{self, GeneratorJson, SCHEMA};
use liesym::frontend::runner::{
    self, numeric_checks, render_text, slot_names, AlgebraSection, NumericCheck, ReductionSection,
    RunOptions,
};
use liesym::liealgebra::structure_constants;
use liesym::symcore::rational::format_rational;
use liesym::vectorfield::{OdeSystem, VectorField};
use liesym::verifynum::MappingSetup;
use rayon::prelude::*;
use serde::Serialize;

#[derive(Parser)]
#[command(
    name = "liesym",
    version,
    about = "Lie point symmetries of second-order ODE systems"
)]
struct Cli {
    /// Output format.
    #[arg(long, global = true, env = "LIESYM_FORMAT", default_value = "text")]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the determining equations inside an ansatz window.
    Symmetries(Input),
    /// Symmetries plus structure constants and classification.
    Algebra(Input),
    /// Reduction of order and the nonlocal scaling constant.
    Reduce {
        #[command(flatten)]
        input: Input,
        /// Coordinate promoted to the independent variable.
        #[arg(long, default_value_t = 3)]
        pivot: usize,
        /// Ansatz window of the reduced system.
        #[arg(long, default_value = REDUCTION_WINDOW)]
        reduced_window: String,
    },
    /// Check numerically that each generator maps solutions to solutions.
    Verify {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        /// Initial position, comma separated (required for files).
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        x0: Option<Vec<f64>>,
        /// Initial velocity, comma separated (required for files).
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        v0: Option<Vec<f64>>,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        t0: f64,
        #[arg(long, default_value_t = 1.0)]
        span: f64,
    },
    /// Built-in cases.
    Cases {
        #[command(subcommand)]
        action: CasesAction,
    },
}

#[derive(Subcommand)]
enum CasesAction {
    List,
    Run {
        name: Option<String>,
        #[arg(long, conflicts_with = "name")]
        all: bool,
        /// Skip the numerical checks.
        #[arg(long)]
        no_numeric: bool,
    },
}

#[derive(Args)]
struct Input {
    /// Equation file or built-in case name.
    source: String,
    /// Ansatz window, e.g. `t:0..2,x:-1..2,total:2`.
    #[arg(long)]
    window: Option<String>,
    /// Add monomials multiplied by r to the ansatz.
    #[arg(long)]
    radical: bool,
    /// Equation mode for files without a `mode` line.
    #[arg(long)]
    mode: Option<String>,
}

struct Failure {
    code: u8,
    message: String,
}

fn usage(message: impl ToString) -> Failure {
    Failure {
        code: 2,
        message: message.to_string(),
    }
}

struct Loaded {
    system: OdeSystem,
    spec: AnsatzSpec,
    case: Option<LoadedCase>,
}

fn load(input: &Input) -> Result<Loaded, Failure> {
    let (system, default_spec, case) = if Path::new(&input.source).is_file() {
        let text = std::fs::read_to_string(&input.source).map_err(usage)?;
        let text = match &input.mode {
            Some(m) => format!("mode {m}\n{text}"),
            None => text,
        };
        let system = parse_system(&text).map_err(|e| usage(format!("{}: {e}", input.source)))?;
        if let Some(m) = &input.mode {
            if system.mode().as_str() != m {
                return Err(usage(format!(
                    "{}: the file declares mode {}",
                    input.source,
                    system.mode().as_str()
                )));
            }
        }
        let spec = AnsatzSpec::default_for(system.n());
        (system, spec, None)
    } else {
        if input.mode.is_some() {
            return Err(usage("--mode applies to equation files only"));
        }
        let case = registry::lookup(&input.source)
            .and_then(|c| c.load())
            .map_err(usage)?;
        (case.system.clone(), case.spec.clone(), Some(case))
    };
    let mut spec = match &input.window {
        Some(w) => AnsatzSpec::parse(w, system.ring()).map_err(usage)?,
        None => default_spec,
    };
    spec.allow_radical |= input.radical;
    Ok(Loaded { system, spec, case })
}

#[derive(Serialize)]
struct SymmetryReport {
    schema: &'static str,
    source: String,
    window: String,
    dim: usize,
    rank: usize,
    rows: usize,
    generators: Vec<GeneratorJson>,
    superposition_family: bool,
    comparison: Option<String>,
    #[serde(
        skip_serializing_if = "Option::is_none",
        serialize_with = "some_algebra"
    )]
    algebra: Option<Result<AlgebraSection, String>>,
    pass: bool,
}

fn some_algebra<S: serde::Serializer>(
    value: &Option<Result<AlgebraSection, String>>,
    s: S,
) -> Result<S::Ok, S::Error> {
    match value {
        Some(a) => runner::algebra_or_error(a, s),
        None => s.serialize_none(),
    }
}

fn symmetry_report(input: &Input, l: &Loaded) -> Result<(SymmetryReport, SymmetryBasis), Failure> {
    let basis = determine::find_symmetries(&l.system, &l.spec).map_err(usage)?;
    let mut pass = true;
    let comparison = l.case.as_ref().map(|c| {
        let (text, ok) = match determine::span_compare(&basis, &c.expected) {
            Ok(cmp) => {
                let ok = match cmp {
                    determine::SpanComparison::Equal => true,
                    determine::SpanComparison::Contains { .. } => {
                        c.entry.compare == registry::CompareMode::Contains
                    }
                    determine::SpanComparison::Differs { .. } => false,
                };
                (cmp.to_string(), ok)
            }
            Err(e) => (format!("window too small: {e}"), false),
        };
        let dim_ok = c.entry.expected_dim.is_none_or(|d| d == basis.dim());
        pass &= ok && dim_ok;
        text
    });
    Ok((
        SymmetryReport {
            schema: SCHEMA,
            source: input.source.clone(),
            window: l.spec.describe(l.system.ring()),
            dim: basis.dim(),
            rank: basis.rank,
            rows: basis.rows,
            generators: report::generators(&basis.fields),
            superposition_family: basis.superposition_family,
            comparison,
            algebra: None,
            pass,
        },
        basis,
    ))
}

fn render_symmetries(r: &SymmetryReport, sys: &OdeSystem) -> String {
    let names = slot_names(sys);
    let mut out = format!(
        "{}\nwindow {}\ndimension {} (rank {}, {} equations)\n",
        r.source, r.window, r.dim, r.rank, r.rows
    );
    for (i, g) in r.generators.iter().enumerate() {
        out.push_str(&format!(
            "  X{} = {}\n",
            i + 1,
            runner::field_line(g, &names)
        ));
    }
    if r.superposition_family {
        out.push_str("linear equation: infinite-dimensional superposition family exists\n");
    }
    if let Some(c) = &r.comparison {
        out.push_str(&format!("comparison: {c}\n"));
    }
    match &r.algebra {
        Some(Ok(a)) => {
            out.push_str(&format!("algebra: {}\n", a.report.recognized));
            out.push_str(&format!(
                "derived series {:?}, center {}, Killing signature (+{}, -{}, 0:{})\n",
                a.report.derived_series,
                a.report.center_dim,
                a.report.killing_signature.positive,
                a.report.killing_signature.negative,
                a.report.killing_signature.zero
            ));
            out.push_str(&report::bracket_grid(&a.table));
        }
        Some(Err(e)) => out.push_str(&format!("algebra: {e}\n")),
        None => {}
    }
    out
}

fn emit<T: Serialize>(format: Format, value: &T, text: impl FnOnce() -> String) {
    match format {
        Format::Json => println!(
            "{}",
            serde_json::to_string_pretty(value).expect("serializable report")
        ),
        Format::Text => print!("{}", text()),
    }
}

fn status(pass: bool) -> u8 {
    if pass {
        0
    } else {
        1
    }
}

#[derive(Serialize)]
struct ReduceReport {
    schema: &'static str,
    source: String,
    #[serde(flatten)]
    reduction: ReductionSection,
    expected_xi: Option<String>,
    pass: bool,
}

#[derive(Serialize)]
struct VerifyReport {
    schema: &'static str,
    source: String,
    epsilon: f64,
    tol: f64,
    generators: Vec<NumericCheck>,
    controls: Vec<NumericCheck>,
    pass: bool,
}

fn run(cli: Cli) -> Result<u8, Failure> {
    let format = cli.format;
    match cli.command {
        Command::Symmetries(input) => {
            let l = load(&input)?;
            let (r, _) = symmetry_report(&input, &l)?;
            emit(format, &r, || render_symmetries(&r, &l.system));
            Ok(status(r.pass))
        }
        Command::Algebra(input) => {
            let l = load(&input)?;
            let (mut r, basis) = symmetry_report(&input, &l)?;
            let algebra = structure_constants(&basis.fields)
                .map(AlgebraSection::new)
                .map_err(|e| e.to_string());
            r.pass &= algebra.is_ok();
            r.algebra = Some(algebra);
            emit(format, &r, || render_symmetries(&r, &l.system));
            Ok(status(r.pass))
        }
        Command::Reduce {
            input,
            pivot,
            reduced_window,
        } => {
            let l = load(&input)?;
            let section = runner::reduction_section(&l.system, pivot, &reduced_window);
            let expected_xi = l
                .case
                .as_ref()
                .and_then(|c| c.entry.xi.as_ref())
                .map(format_rational);
            let pass = section.error.is_none()
                && expected_xi
                    .as_ref()
                    .is_none_or(|x| section.xi.as_ref() == Some(x));
            let r = ReduceReport {
                schema: SCHEMA,
                source: input.source.clone(),
                reduction: section,
                expected_xi,
                pass,
            };
            emit(format, &r, || {
                let red = &r.reduction;
                let mut out = format!("{} reduced with pivot x{}\n", r.source, red.pivot);
                for (name, w) in ["u1''", "u2''", "u6'"].iter().zip(&red.omega) {
                    out.push_str(&format!("  {name} = {w}\n"));
                }
                out.push_str(&format!(
                    "reduced symmetries: {} in {}\n",
                    red.dim, red.window
                ));
                if let Some(c) = &red.candidate {
                    out.push_str(&format!("scaling: {c}\n"));
                }
                if let Some(y) = &red.nonlocal {
                    out.push_str(&format!("nonlocal: {y}\n"));
                }
                if let Some(x) = &red.xi {
                    out.push_str(&format!("xi = {x}\n"));
                }
                if let Some(e) = &red.error {
                    out.push_str(&format!("error: {e}\n"));
                }
                if let Some(x) = &r.expected_xi {
                    out.push_str(&format!("expected xi = {x}\n"));
                }
                out
            });
            Ok(status(r.pass))
        }
        Command::Verify {
            input,
            eps,
            tol,
            x0,
            v0,
            t0,
            span,
        } => {
            let l = load(&input)?;
            let fixture = l.case.as_ref().and_then(|c| c.entry.numeric.clone());
            let (t0, x0, v0, span, default_eps) = match (x0, v0, &fixture) {
                (Some(x), Some(v), _) => (t0, x, v, span, 0.1),
                (None, None, Some(f)) => (f.t0, f.x0.clone(), f.v0.clone(), f.span, f.epsilon),
                _ => {
                    return Err(usage(
                        "verify needs --x0 and --v0 (or a case with a numeric fixture)",
                    ))
                }
            };
            if x0.len() != l.system.n() || v0.len() != l.system.n() {
                return Err(usage(format!(
                    "initial data must have {} components",
                    l.system.n()
                )));
            }
            let mut setup = MappingSetup::new(t0, &x0, &v0, span, eps.unwrap_or(default_eps));
            setup.tol = tol;
            let basis = determine::find_symmetries(&l.system, &l.spec).map_err(usage)?;
            let controls: Vec<VectorField> = l
                .case
                .as_ref()
                .map(|c| c.controls.clone())
                .unwrap_or_default();
            let generators = numeric_checks(&l.system, &basis.fields, &setup, false);
            let controls = numeric_checks(&l.system, &controls, &setup, true);
            let pass = generators.iter().chain(&controls).all(|c| c.pass);
            let r = VerifyReport {
                schema: SCHEMA,
                source: input.source.clone(),
                epsilon: setup.epsilon,
                tol: setup.tol,
                generators,
                controls,
                pass,
            };
            emit(format, &r, || {
                let mut out = format!("{} (eps {}, tol {:e})\n", r.source, r.epsilon, r.tol);
                for (label, list) in [("generator", &r.generators), ("control", &r.controls)] {
                    for c in list.iter() {
                        let dev = c.max_deviation.map_or_else(
                            || c.error.clone().unwrap_or_default(),
                            |d| format!("{d:.2e}"),
                        );
                        out.push_str(&format!(
                            "{} {label} {}: {dev}\n",
                            if c.pass { "ok  " } else { "FAIL" },
                            c.field
                        ));
                    }
                }
                out
            });
            Ok(status(r.pass))
        }
        Command::Cases { action } => match action {
            CasesAction::List => {
                let list: Vec<_> = registry::cases()
                    .into_iter()
                    .map(|c| serde_json::json!({"name": c.name, "title": c.title}))
                    .collect();
                emit(format, &list, || {
                    registry::cases()
                        .iter()
                        .map(|c| format!("{:<26} {}\n", c.name, c.title))
                        .collect()
                });
                Ok(0)
            }
            CasesAction::Run {
                name,
                all,
                no_numeric,
            } => {
                let names: Vec<String> = match (name, all) {
                    (Some(n), false) => vec![n],
                    (None, true) => registry::names().into_iter().map(String::from).collect(),
                    _ => return Err(usage("give a case name or --all")),
                };
                let opts = RunOptions {
                    numeric: !no_numeric,
                    reduce: true,
                };
                let results: Vec<_> = names
                    .par_iter()
                    .map(|n| {
                        let loaded = registry::lookup(n).and_then(|c| c.load()).map_err(usage)?;
                        let report = runner::run_loaded(&loaded, opts).map_err(usage)?;
                        let text = render_text(&report, &slot_names(&loaded.system));
                        Ok((report, text))
                    })
                    .collect::<Result<_, Failure>>()?;
                let pass = results.iter().all(|(r, _)| r.pass);
                match format {
                    Format::Json if results.len() == 1 => emit(format, &results[0].0, String::new),
                    Format::Json => {
                        let reports: Vec<_> = results.iter().map(|(r, _)| r).collect();
                        emit(format, &reports, String::new)
                    }
                    Format::Text => {
                        for (_, text) in &results {
                            println!("{text}");
                        }
                        if results.len() > 1 {
                            let failed: Vec<_> = results
                                .iter()
                                .filter(|(r, _)| !r.pass)
                                .map(|(r, _)| r.case.as_str())
                                .collect();
                            println!(
                                "{} of {} cases pass{}",
                                results.len() - failed.len(),
                                results.len(),
                                if failed.is_empty() {
                                    String::new()
                                } else {
                                    format!("; failing: {}", failed.join(", "))
                                }
                            );
                        }
                    }
                }
                Ok(status(pass))
            }
        },
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
