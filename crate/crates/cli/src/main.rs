use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use monodelta_core::analysis::{classify, project, remove_empty_deltas};
use monodelta_core::formula::Product;
use monodelta_core::generation::{check_unambiguity, enumerate_products, fmt_product, generate_variant};
use monodelta_core::model::ProductLine;
use monodelta_core::oracle::check_equivalence;
use monodelta_core::random::{generate_random_spl, RandomSplSpec};
use monodelta_core::refactor::{refactor, Direction};
use monodelta_core::syntax::{parse_formula, parse_spl, print_program, print_spl};
use rayon::prelude::*;
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "monodelta", version, about = "Analyse and refactor delta-oriented product lines")]
struct Cli {
    /// Shorthand for `--format json`.
    #[arg(long, global = true)]
    json: bool,

    #[arg(long, global = true, env = "MONODELTA_FORMAT", value_enum, default_value = "text")]
    format: Format,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum FuzzDirection {
    Inc,
    Dec,
    Both,
}

#[derive(Subcommand)]
enum Command {
    /// Parse, validate and check unambiguity.
    Check { file: PathBuf },
    /// List the valid products.
    Products { file: PathBuf },
    /// Print the variant of one product.
    Generate {
        file: PathBuf,
        /// Comma-separated selected features.
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        product: Vec<String>,
    },
    /// Report which monotonicity classes hold.
    Classify { file: PathBuf },
    /// Rewrite into increasing or decreasing form.
    Refactor {
        file: PathBuf,
        #[arg(long, short)]
        direction: Direction,
        /// Drop empty delta modules afterwards.
        #[arg(long)]
        cleanup: bool,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Restrict to the products satisfying a formula.
    Project {
        file: PathBuf,
        #[arg(long)]
        keep: String,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Compare two product lines product by product.
    Equiv { first: PathBuf, second: PathBuf },
    /// Refactor random product lines and check equivalence.
    Fuzz {
        #[arg(long, default_value_t = 100)]
        count: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "both")]
        direction: FuzzDirection,
        #[arg(long, default_value_t = 6)]
        max_features: usize,
        #[arg(long, default_value_t = 12)]
        max_deltas: usize,
        #[arg(long, default_value_t = 6)]
        classes: usize,
    },
}

/// Exit status: 0 clean, 1 findings, 2 bad input.
enum Failure {
    Findings,
    Input(String),
}

type Outcome = Result<(), Failure>;

struct Out {
    json: bool,
}

impl Out {
    fn emit(&self, text: impl FnOnce() -> String, value: impl FnOnce() -> Value) {
        let mut t = if self.json {
            serde_json::to_string_pretty(&value()).expect("json values serialise")
        } else {
            text()
        };
        if !t.is_empty() && !t.ends_with('\n') {
            t.push('\n');
        }
        // a closed pipe (e.g. `| head`) is not an error worth reporting
        let _ = io::stdout().lock().write_all(t.as_bytes());
    }
}

fn load(path: &Path) -> Result<ProductLine, Failure> {
    let src = fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    parse_spl(&src).map_err(|e| Failure::Input(format!("{}:{e}", path.display())))
}

fn save(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn product_names(p: &Product) -> Vec<&str> {
    p.iter().map(String::as_str).collect()
}

fn write_or_print(out: &Out, pl: &ProductLine, output: Option<&Path>, extra: Value) -> Outcome {
    let text = print_spl(pl);
    let mut value = extra;
    value["deltas"] = json!(pl.deltas.len());
    match output {
        Some(path) => {
            save(path, &text)?;
            value["written"] = json!(path.display().to_string());
            out.emit(String::new, || value);
        }
        None => {
            value["spl"] = json!(text);
            out.emit(|| text.clone(), || value);
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Outcome {
    let out = Out { json: cli.json || cli.format == Format::Json };
    match cli.command {
        Command::Check { file } => {
            let pl = load(&file)?;
            let conflicts = check_unambiguity(&pl).err().map(|r| r.conflicts).unwrap_or_default();
            let products = enumerate_products(&pl).len();
            out.emit(
                || {
                    let mut s = format!(
                        "{} features, {} delta modules, {} partitions, {products} products\n",
                        pl.features.len(),
                        pl.deltas.len(),
                        pl.order.partitions.len()
                    );
                    if conflicts.is_empty() {
                        s.push_str("unambiguous\n");
                    }
                    for c in &conflicts {
                        s.push_str(&format!("ambiguous: {c}\n"));
                    }
                    s
                },
                || {
                    json!({
                        "features": pl.features.len(),
                        "deltas": pl.deltas.len(),
                        "partitions": pl.order.partitions.len(),
                        "products": products,
                        "unambiguous": conflicts.is_empty(),
                        "conflicts": conflicts,
                    })
                },
            );
            if conflicts.is_empty() {
                Ok(())
            } else {
                Err(Failure::Findings)
            }
        }
        Command::Products { file } => {
            let pl = load(&file)?;
            let products = enumerate_products(&pl);
            out.emit(
                || products.iter().map(|p| fmt_product(p) + "\n").collect(),
                || json!(products.iter().map(product_names).collect::<Vec<_>>()),
            );
            Ok(())
        }
        Command::Generate { file, product } => {
            let pl = load(&file)?;
            let unknown: Vec<&String> = product.iter().filter(|f| !pl.features.contains(f)).collect();
            if !unknown.is_empty() {
                return Err(Failure::Input(format!("unknown features: {unknown:?}")));
            }
            let p: Product = product.into_iter().collect();
            match generate_variant(&pl, &p) {
                Ok(v) => {
                    let text = print_program(&v.program);
                    out.emit(|| text.clone(), || json!({ "product": product_names(&p), "program": text }));
                    Ok(())
                }
                Err(e) => {
                    out.emit(|| format!("error: {e}\n"), || json!({ "product": product_names(&p), "error": e.to_string() }));
                    Err(Failure::Findings)
                }
            }
        }
        Command::Classify { file } => {
            let pl = load(&file)?;
            let report = classify(&pl);
            out.emit(
                || {
                    let mut s = String::new();
                    for v in &report.classes {
                        let verdict = if v.holds { "yes" } else { "no" };
                        s.push_str(&format!("{:<26} {verdict}", v.class.to_string()));
                        if let Some(w) = v.evidence.first() {
                            s.push_str(&format!("  ({} in {} on {})", w.kind, w.delta, w.reference));
                        }
                        s.push('\n');
                    }
                    s
                },
                || json!(report),
            );
            Ok(())
        }
        Command::Refactor { file, direction, cleanup, output } => {
            let pl = load(&file)?;
            let mut result = match refactor(&pl, direction) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("{}: {e}", file.display());
                    if let monodelta_core::refactor::RefactorError::Ambiguous(report) = &e {
                        for c in &report.conflicts {
                            eprintln!("  {c}");
                        }
                    }
                    return Err(Failure::Findings);
                }
            };
            if cleanup {
                result = remove_empty_deltas(&result);
            }
            write_or_print(&out, &result, output.as_deref(), json!({ "direction": direction }))
        }
        Command::Project { file, keep, output } => {
            let pl = load(&file)?;
            let formula =
                parse_formula(&keep, Some(&pl.features)).map_err(|e| Failure::Input(format!("--keep:{e}")))?;
            let projected = project(&pl, &formula).map_err(|e| Failure::Input(e.to_string()))?;
            write_or_print(&out, &projected, output.as_deref(), json!({ "keep": formula.to_string() }))
        }
        Command::Equiv { first, second } => {
            let a = load(&first)?;
            let b = load(&second)?;
            let verdict = check_equivalence(&a, &b);
            out.emit(
                || {
                    if verdict.equivalent {
                        format!("equivalent ({} products)\n", verdict.table.len())
                    } else {
                        let mut s = String::from("not equivalent\n");
                        for w in &verdict.witnesses {
                            s.push_str(&format!("  {{{}}}: {}\n", w.product.join(", "), w.difference));
                        }
                        s
                    }
                },
                || json!(verdict),
            );
            if verdict.equivalent {
                Ok(())
            } else {
                Err(Failure::Findings)
            }
        }
        Command::Fuzz { count, seed, direction, max_features, max_deltas, classes } => {
            let directions = match direction {
                FuzzDirection::Inc => vec![Direction::Increasing],
                FuzzDirection::Dec => vec![Direction::Decreasing],
                FuzzDirection::Both => vec![Direction::Increasing, Direction::Decreasing],
            };
            let base = RandomSplSpec { max_features, max_deltas, classes, ..RandomSplSpec::default() };
            let results: Vec<Result<(), Value>> = (seed..seed.saturating_add(count))
                .into_par_iter()
                .flat_map_iter(|s| {
                    let spec = RandomSplSpec { seed: s, ..base.clone() };
                    let pl = generate_random_spl(&spec);
                    directions.iter().map(move |&d| {
                        let fail = |reason: String| json!({ "seed": s, "direction": d, "reason": reason });
                        let pl = pl.as_ref().map_err(|e| fail(e.to_string()))?;
                        let r = refactor(pl, d).map_err(|e| fail(e.to_string()))?;
                        let v = check_equivalence(pl, &r);
                        match v.witnesses.first() {
                            None if v.equivalent => Ok(()),
                            None => Err(fail("product sets differ".into())),
                            Some(w) => Err(fail(format!("{{{}}}: {}", w.product.join(", "), w.difference))),
                        }
                    })
                })
                .collect();
            let failures: Vec<Value> = results.iter().filter_map(|r| r.clone().err()).collect();
            let checked = results.len();
            out.emit(
                || {
                    let mut s = format!("{} of {checked} refactorings equivalent\n", checked - failures.len());
                    for f in &failures {
                        s.push_str(&format!("seed {} ({}): {}\n", f["seed"], f["direction"].as_str().unwrap_or(""), f["reason"].as_str().unwrap_or("")));
                    }
                    s
                },
                || json!({ "checked": checked, "failures": failures }),
            );
            if failures.is_empty() {
                Ok(())
            } else {
                Err(Failure::Findings)
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Findings) => ExitCode::from(1),
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
