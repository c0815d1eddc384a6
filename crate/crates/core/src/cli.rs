//! Command-line front end.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand, ValueEnum};
use num_rational::BigRational;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Limits, DEFAULT_VECTOR_CAP, DEFAULT_WORK_CAP};
use crate::error::Error;
use crate::harmonic::{
    compare_classes, compare_spectra, energy_spectrum, milnor_demo, milnor_source, parse_rational, source_from_gram,
    spectrum_of_classes, ClassDifference, SourceTorus, SpectrumReport, TranscendentalScalar,
};
use crate::notation::parse_lattice;
use crate::theta::{coefficient_table, compare_tables};

pub const SCHEMA_VERSION: u32 = 1;

pub const EXIT_OK: u8 = 0;
pub const EXIT_DIFFERENT: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_CAP: u8 = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Table,
}

#[derive(Debug, Parser)]
#[command(name = "flat-tori", version, about = "Theta series of lattices and energy spectra of harmonic maps between flat tori")]
pub struct Cli {
    /// Maximum number of lattice vectors to enumerate.
    #[arg(long, global = true, env = "FLAT_TORI_CAP", default_value_t = DEFAULT_VECTOR_CAP, value_parser = clap::value_parser!(u64).range(1..))]
    pub cap: u64,

    /// Maximum estimated search work for tuple counting.
    #[arg(long, global = true, env = "FLAT_TORI_WORK_CAP", default_value_t = DEFAULT_WORK_CAP, value_parser = clap::value_parser!(u64).range(1..))]
    pub work_cap: u64,

    /// Worker threads (default: available parallelism).
    #[arg(long, global = true, env = "FLAT_TORI_THREADS", value_parser = clap::value_parser!(u64).range(1..))]
    pub threads: Option<u64>,

    #[arg(long, global = true, env = "FLAT_TORI_FORMAT", value_enum, default_value_t = Format::Json)]
    pub format: Format,

    /// Write output here instead of stdout (replaced atomically).
    #[arg(long, global = true, env = "FLAT_TORI_OUT")]
    pub out: Option<PathBuf>,

    /// Omit the `generated_at` field so output is byte-reproducible.
    #[arg(long, global = true, env = "FLAT_TORI_NO_TIMESTAMP")]
    pub no_timestamp: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Dimension, discriminant, integrality, evenness and Gram matrix of a lattice.
    LatticeInfo {
        /// Lattice such as `E8`, `GAMMA16`, `D:4`, `Z:3` or `E8+E8`.
        spec: String,
    },
    /// Table of representation numbers r(T) for all T with diagonal ≤ bound.
    Theta {
        spec: String,
        #[arg(long, short)]
        degree: usize,
        #[arg(long, short)]
        bound: u64,
    },
    /// Coefficients where two theta series differ (exit 1 if any).
    ThetaCompare {
        spec1: String,
        spec2: String,
        #[arg(long, short)]
        degree: usize,
        #[arg(long, short)]
        bound: u64,
    },
    /// Energy spectrum of harmonic maps from a source torus into R^n/L.
    Spectrum {
        /// `milnor` or `gram:<matrix>` with rows `;`-separated and entries `p/q`.
        source: String,
        target: String,
        #[arg(long, short)]
        bound: u64,
        /// Compute only the class with this exact value of Tr(S·W), e.g. `8` or `8 + 2*pi^-1`.
        #[arg(long = "trace-part")]
        trace_parts: Vec<String>,
    },
    /// Energy classes whose multiplicities differ between two targets (exit 1 if any).
    SpectrumCompare {
        source: String,
        target1: String,
        target2: String,
        #[arg(long, short)]
        bound: u64,
        #[arg(long = "trace-part")]
        trace_parts: Vec<String>,
    },
    /// The 4-torus whose energy spectra separate R^16/(E8+E8) from R^16/GAMMA16.
    MilnorDemo,
}

struct Outcome {
    json: Value,
    table: String,
    code: u8,
}

pub fn parse_source(spec: &str) -> crate::error::Result<SourceTorus> {
    let spec = spec.trim();
    if spec.eq_ignore_ascii_case("milnor") {
        return Ok(milnor_source());
    }
    let Some(body) = spec.strip_prefix("gram:") else {
        return Err(Error::Parse {
            position: 0,
            token: spec.chars().take(12).collect(),
            message: "expected `milnor` or `gram:<matrix>`".into(),
        });
    };
    let offset = "gram:".len();
    let mut rows: Vec<Vec<BigRational>> = Vec::new();
    let mut pos = offset;
    for row in body.split(';') {
        let mut parsed = Vec::new();
        let mut p = pos;
        for entry in row.split(',') {
            let value = parse_rational(entry).ok_or_else(|| Error::Parse {
                position: p,
                token: entry.trim().to_string(),
                message: "expected a rational entry p or p/q".into(),
            })?;
            parsed.push(value);
            p += entry.len() + 1;
        }
        rows.push(parsed);
        pos += row.len() + 1;
    }
    let d = rows.len();
    if let Some(bad) = rows.iter().position(|r| r.len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: rows[bad].len(),
        });
    }
    source_from_gram(&rows)
}

fn parse_trace_parts(texts: &[String]) -> crate::error::Result<Vec<TranscendentalScalar>> {
    texts.iter().map(|t| t.parse()).collect()
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

fn spectrum_table(report: &SpectrumReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "target {}  bound {}  volume {:.12}", report.target, report.bound, report.source.volume);
    let _ = writeln!(out, "{}", report.coverage);
    if report.energies_approximate {
        let _ = writeln!(out, "energies approximate");
    }
    let _ = writeln!(out, "{:>20}  {:>14}  Tr(S·W)", "energy", "multiplicity");
    for c in &report.classes {
        let _ = writeln!(out, "{:>20.12}  {:>14}  {}", c.energy_float, c.multiplicity, c.trace_part_text);
    }
    out
}

fn differences_table(diffs: &[ClassDifference]) -> String {
    let mut out = String::new();
    if diffs.is_empty() {
        out.push_str("spectra agree on the covered range\n");
    }
    for d in diffs {
        let _ = writeln!(
            out,
            "E = {:.12}  Tr(S·W) = {}  multiplicities {} vs {}",
            d.energy_float, d.trace_part_text, d.multiplicity1, d.multiplicity2
        );
    }
    out
}

fn run_command(cli: &Cli) -> crate::error::Result<Outcome> {
    let limits = Limits::default().with_vector_cap(cli.cap).with_work_cap(cli.work_cap);
    match &cli.command {
        Command::LatticeInfo { spec } => {
            let l = parse_lattice(spec)?;
            let gram = l.gram()?;
            let disc = l.discriminant()?;
            let json = json!({
                "command": "lattice-info",
                "lattice": l.label(),
                "dim": l.ambient_dim(),
                "discriminant": disc,
                "is_integral": l.is_integral(),
                "is_even": l.is_even(),
                "gram": gram.to_string(),
            });
            let mut table = format!(
                "lattice {}\ndim {}\ndiscriminant {}\nintegral {}\neven {}\ngram\n",
                l.label(),
                l.ambient_dim(),
                disc,
                l.is_integral(),
                l.is_even()
            );
            for i in 0..gram.dim() {
                let row: Vec<String> = (0..gram.dim()).map(|j| format!("{:>3}", gram.get(i, j))).collect();
                let _ = writeln!(table, "{}", row.join(""));
            }
            Ok(Outcome { json, table, code: EXIT_OK })
        }
        Command::Theta { spec, degree, bound } => {
            check_degree(*degree)?;
            let l = parse_lattice(spec)?;
            let t = coefficient_table(&l, *degree, *bound, &limits)?;
            let mut table = format!("{}  degree {}  diag bound {}\n", t.lattice, t.degree, t.diag_bound);
            for (k, v) in &t.entries {
                let _ = writeln!(table, "{k:<24} {v}");
            }
            let mut json = to_value(&t);
            json["command"] = json!("theta");
            Ok(Outcome { json, table, code: EXIT_OK })
        }
        Command::ThetaCompare { spec1, spec2, degree, bound } => {
            check_degree(*degree)?;
            let l1 = parse_lattice(spec1)?;
            let l2 = parse_lattice(spec2)?;
            let a = coefficient_table(&l1, *degree, *bound, &limits)?;
            let b = coefficient_table(&l2, *degree, *bound, &limits)?;
            let diffs = compare_tables(&a, &b);
            let mut table = format!(
                "{} vs {}  degree {}  diag bound {}  ({} and {} coefficients)\n",
                l1.label(),
                l2.label(),
                degree,
                bound,
                a.entries.len(),
                b.entries.len()
            );
            if diffs.is_empty() {
                table.push_str("coefficients agree on the covered range\n");
            }
            for d in &diffs {
                let _ = writeln!(table, "{:<24} {} vs {}", d.t.to_string(), d.count1, d.count2);
            }
            let json = json!({
                "command": "theta-compare",
                "lattice1": l1.label(),
                "lattice2": l2.label(),
                "degree": degree,
                "diag_bound": bound,
                "equal": diffs.is_empty(),
                "differences": to_value(&diffs),
            });
            let code = if diffs.is_empty() { EXIT_OK } else { EXIT_DIFFERENT };
            Ok(Outcome { json, table, code })
        }
        Command::Spectrum {
            source,
            target,
            bound,
            trace_parts,
        } => {
            let src = parse_source(source)?;
            let t = parse_lattice(target)?;
            let report = if trace_parts.is_empty() {
                energy_spectrum(&src, &t, *bound, &limits)?
            } else {
                spectrum_of_classes(&src, &t, &parse_trace_parts(trace_parts)?, *bound, &limits)?
            };
            let mut json = to_value(&report);
            json["command"] = json!("spectrum");
            Ok(Outcome {
                table: spectrum_table(&report),
                json,
                code: EXIT_OK,
            })
        }
        Command::SpectrumCompare {
            source,
            target1,
            target2,
            bound,
            trace_parts,
        } => {
            let src = parse_source(source)?;
            let t1 = parse_lattice(target1)?;
            let t2 = parse_lattice(target2)?;
            let diffs = if trace_parts.is_empty() {
                compare_spectra(&src, &t1, &t2, *bound, &limits)?
            } else {
                compare_classes(&src, &t1, &t2, &parse_trace_parts(trace_parts)?, *bound, &limits)?
            };
            let json = json!({
                "command": "spectrum-compare",
                "target1": t1.label(),
                "target2": t2.label(),
                "bound": bound,
                "equal": diffs.is_empty(),
                "differences": to_value(&diffs),
            });
            let code = if diffs.is_empty() { EXIT_OK } else { EXIT_DIFFERENT };
            Ok(Outcome {
                table: differences_table(&diffs),
                json,
                code,
            })
        }
        Command::MilnorDemo => {
            let report = milnor_demo(&limits)?;
            let mut json = to_value(&report);
            json["command"] = json!("milnor-demo");
            let code = if report.success { EXIT_OK } else { EXIT_DIFFERENT };
            Ok(Outcome {
                table: report.summary(),
                json,
                code,
            })
        }
    }
}

fn check_degree(degree: usize) -> crate::error::Result<()> {
    if degree == 0 {
        return Err(Error::InvalidDimension("degree must be at least 1".into()));
    }
    Ok(())
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::CapExceeded { .. } => EXIT_CAP,
        _ => EXIT_USAGE,
    }
}

fn render(cli: &Cli, outcome: &Outcome) -> String {
    match cli.format {
        Format::Table => outcome.table.clone(),
        Format::Json => {
            let mut doc = serde_json::Map::new();
            doc.insert("schema".into(), json!(SCHEMA_VERSION));
            if !cli.no_timestamp {
                let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
                doc.insert("generated_at".into(), json!(secs));
            }
            if let Value::Object(body) = &outcome.json {
                for (k, v) in body {
                    doc.insert(k.clone(), v.clone());
                }
            }
            let mut text = serde_json::to_string_pretty(&Value::Object(doc)).expect("json value");
            text.push('\n');
            text
        }
    }
}

/// Writes via a sibling temporary file and a rename.
pub fn write_atomic(path: &Path, contents: &str) -> std::io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path).inspect_err(|_| {
        let _ = std::fs::remove_file(&tmp);
    })
}

pub fn run(cli: Cli) -> ExitCode {
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n as usize).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    }
    let outcome = match run_command(&cli) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code_for(&e));
        }
    };
    let text = render(&cli, &outcome);
    let written = match &cli.out {
        Some(path) => write_atomic(path, &text),
        None => std::io::stdout().lock().write_all(text.as_bytes()),
    };
    if let Err(e) = written {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_USAGE);
    }
    ExitCode::from(outcome.code)
}

pub fn main() -> ExitCode {
    run(Cli::parse())
}
