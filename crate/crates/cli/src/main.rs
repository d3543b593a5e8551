//! `filtrex`: batch front end for bases, verdicts and the property suite.
//!
//! Exit codes: 0 success, 1 domain error or negative validation,
//! 2 schema error, 3 property violation.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use filtrex::basis::validate;
use filtrex::enlargement::{check_condition_support, check_positivity, drift_operator, solve_factors};
use filtrex::event_kernels::{
    accessible_jump_value, inaccessible_jump_value, k_prime, k_triple_prime, series_diagnostics, series_identity,
    SeriesInput, Thresholds,
};
use filtrex::io::{
    enlarged_to_json, format_rationals, parse_instance, parse_kernel, process_to_json, report_to_json,
    scalar_to_json, KernelData,
};
use filtrex::linalg::Matrix;
use filtrex::models::{four_point_failing, gen_random_instance, worked_six_point, EnlargementKind, GeneratorConfig};
use filtrex::oracle::{lp_deflator_oracle, OracleVerdict};
use filtrex::process::StoppingTime;
use filtrex::rational::format;
use filtrex::representation::{build_representation, multiplicity};
use filtrex::suite::{run_suite, SuiteConfig};
use filtrex::viability::{deflator_from_connector, find_structure_connector, full_viability_verdict, ConnectorSearch};
use filtrex::Error;

#[derive(Parser, Debug)]
#[command(name = "filtrex", version, about = "Exact viability checks for enlarged filtrations on finite bases")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check an instance file and summarise it.
    Validate {
        #[arg(long)]
        input: PathBuf,
    },
    /// Drift operator of the instance asset (default: the representation process).
    Drift {
        #[arg(long)]
        input: PathBuf,
    },
    /// Drift factors `N = W″` and minimum-norm `φ`.
    Factors {
        #[arg(long)]
        input: PathBuf,
    },
    /// Full-viability verdict with its certificate.
    CheckViability {
        #[arg(long)]
        input: PathBuf,
    },
    /// Structure connector and deflator of the asset in the base filtration.
    Deflator {
        #[arg(long)]
        input: PathBuf,
    },
    /// Run the seeded property suite.
    VerifyTheorems {
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        instances: u64,
        #[arg(long, default_value_t = 0)]
        workers: usize,
    },
    /// Emit an instance in the exchange format.
    Generate {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of ticks.
        #[arg(long)]
        horizon: Option<usize>,
        #[arg(long, default_value_t = false)]
        force_failure: bool,
        #[arg(long, value_enum, default_value_t = Kind::Random)]
        kind: Kind,
        /// A fixed worked instance instead of a random one.
        #[arg(long, value_enum)]
        model: Option<Model>,
    },
    /// Evaluate a per-event kernel.
    KernelEval {
        #[arg(long)]
        input: PathBuf,
    },
    /// Refinement diagnostics for the integrability condition.
    DiagnoseSeries {
        #[arg(long)]
        input: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Kind {
    Random,
    Initial,
    Progressive,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Model {
    SixPoint,
    FourPoint,
}

enum Failure {
    Error(Error),
    /// Report plus a reproducer for stderr.
    Violation(Value, Value),
    Negative(Value),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

fn read(path: &PathBuf) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Error(Error::Schema(format!("{}: {e}", path.display()))))
}

fn run(cli: &Cli) -> Result<Value, Failure> {
    match &cli.command {
        Command::Validate { input } => {
            let inst = parse_instance(&read(input)?)?;
            validate(&inst.space, &inst.f)?;
            let mut out = json!({
                "valid": true,
                "outcomes": inst.space.len(),
                "ticks": inst.f.horizon(),
                "multiplicity": multiplicity(&inst.f),
                "enlarged": inst.g.is_some(),
            });
            if inst.g.is_some() {
                match inst.enlarged_basis() {
                    Ok(eb) => out["condition_support"] = json!(check_condition_support(&eb).holds),
                    Err(e) => return Err(Failure::Negative(json!({"valid": false, "error": e.to_string()}))),
                }
            }
            Ok(out)
        }
        Command::Drift { input } => {
            let inst = parse_instance(&read(input)?)?;
            let eb = inst.enlarged_basis()?;
            let x = match &inst.asset {
                Some(a) => a.clone(),
                None => build_representation(&eb.space, &eb.f).w().clone(),
            };
            Ok(json!({"gamma": process_to_json(&drift_operator(&eb, &x)?)}))
        }
        Command::Factors { input } => {
            let eb = parse_instance(&read(input)?)?.enlarged_basis()?;
            let rep = build_representation(&eb.space, &eb.f);
            let factors = solve_factors(&eb, &rep)?;
            let pos = check_positivity(&eb, &factors)?;
            Ok(json!({
                "n": process_to_json(&factors.n),
                "phi": process_to_json(&factors.phi),
                "positivity": pos.holds,
            }))
        }
        Command::CheckViability { input } => {
            let eb = parse_instance(&read(input)?)?.enlarged_basis()?;
            let report = full_viability_verdict(&eb)?;
            Ok(report_to_json(&eb, &report))
        }
        Command::Deflator { input } => {
            let inst = parse_instance(&read(input)?)?;
            let s = inst
                .asset
                .clone()
                .ok_or_else(|| Error::Schema("deflator needs an \"asset\"".into()))?;
            let horizon = inst.horizon.clone().unwrap_or_else(|| StoppingTime::infinite(inst.space.len()));
            let search = find_structure_connector(&inst.space, &inst.f, &s, &horizon)?;
            let oracle = lp_deflator_oracle(&inst.space, &inst.f, &s, &horizon);
            Ok(match search {
                ConnectorSearch::Found(c) => {
                    let z = deflator_from_connector(&inst.space, &inst.f, &c.d)?;
                    json!({
                        "viable": true,
                        "oracle_viable": oracle.is_viable(),
                        "connector": scalar_to_json(&c.d),
                        "deflator": scalar_to_json(&z),
                    })
                }
                ConnectorSearch::Infeasible { tick, atom } => {
                    let certificate = match &oracle {
                        OracleVerdict::Arbitrage { certificate } => Some(format_rationals(&certificate.y)),
                        OracleVerdict::Viable { .. } => None,
                    };
                    json!({
                        "viable": false,
                        "oracle_viable": oracle.is_viable(),
                        "infeasible": {
                            "tick": tick,
                            "atom": atom.iter().map(|&w| inst.space.label(w)).collect::<Vec<_>>(),
                        },
                        "certificate": certificate,
                    })
                }
            })
        }
        Command::VerifyTheorems { seed, instances, workers } => {
            let workers = if *workers == 0 {
                std::thread::available_parallelism().map_or(1, |n| n.get())
            } else {
                *workers
            };
            let run = run_suite(&SuiteConfig {
                seed: *seed,
                instances: *instances,
                workers,
            })?;
            let report = run.report();
            if !report["violation"].is_null() {
                let repro = report["violation"].clone();
                return Err(Failure::Violation(report, repro));
            }
            Ok(report)
        }
        Command::Generate {
            seed,
            horizon,
            force_failure,
            kind,
            model,
        } => {
            let eb = match model {
                Some(Model::SixPoint) => worked_six_point(),
                Some(Model::FourPoint) => four_point_failing(),
                None => {
                    let mut cfg = GeneratorConfig::new(*seed);
                    cfg.force_condition_failure = *force_failure;
                    cfg.enlargement_kind = match kind {
                        Kind::Random => EnlargementKind::Random,
                        Kind::Initial => EnlargementKind::Initial,
                        Kind::Progressive => EnlargementKind::Progressive,
                    };
                    if let Some(k) = horizon {
                        cfg.ticks = *k..=*k;
                    }
                    gen_random_instance(&cfg)?
                }
            };
            serde_json::to_value(enlarged_to_json(&eb)).map_err(|e| Error::Internal(e.to_string()).into())
        }
        Command::KernelEval { input } => match parse_kernel(&read(input)?)? {
            KernelData::Accessible(d) => {
                let values = (0..d.branches())
                    .map(|h| accessible_jump_value(&d, h).map(|v| format(&v)))
                    .collect::<Result<Vec<_>, _>>()?;
                let si = series_identity(&d)?;
                Ok(json!({
                    "kind": "accessible",
                    "jump_values": values,
                    "series": {"k_side": format(&si.k_side), "closed_form": format(&si.closed_form), "holds": si.holds()},
                }))
            }
            KernelData::Inaccessible(d) => {
                let k = (0..d.branches())
                    .map(|h| k_triple_prime(&d, h).map(|v| format(&v)))
                    .collect::<Result<Vec<_>, _>>()?;
                let jumps: Vec<String> = (0..d.branches()).map(|h| format(&inaccessible_jump_value(&d, h))).collect();
                Ok(json!({"kind": "inaccessible", "k": k, "jump_values": jumps}))
            }
            KernelData::Continuous { j1, zeta1, phi } => {
                let k = k_prime(&j1, &Matrix::from_rows(zeta1), &phi)?;
                Ok(json!({"kind": "continuous", "k": format_rationals(&k)}))
            }
        },
        Command::DiagnoseSeries { input } => {
            let si: SeriesInput =
                serde_json::from_str(&read(input)?).map_err(|e| Failure::Error(Error::Schema(e.to_string())))?;
            let report = series_diagnostics(&si, &Thresholds::default())?;
            for (name, s) in [("integral", &report.integral), ("jumps", &report.jumps)] {
                if let Some(s) = s {
                    eprintln!("{name}: {:?}", s.verdict);
                    for (i, v) in s.values.iter().enumerate() {
                        eprintln!("  level {i:>2}  {v:.9e}");
                    }
                }
            }
            serde_json::to_value(report).map_err(|e| Error::Internal(e.to_string()).into())
        }
    }
}

fn emit(cli: &Cli, v: &Value) -> Result<(), String> {
    let text = serde_json::to_string_pretty(v).map_err(|e| e.to_string())? + "\n";
    match &cli.output {
        Some(p) => fs::write(p, text).map_err(|e| format!("{}: {e}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (value, code) = match run(&cli) {
        Ok(v) => (v, 0),
        Err(Failure::Negative(v)) => (v, 1),
        Err(Failure::Violation(report, repro)) => {
            eprintln!("property violation; reproducer:");
            eprintln!("{}", serde_json::to_string_pretty(&repro).unwrap_or_default());
            (report, 3)
        }
        Err(Failure::Error(e)) => {
            eprintln!("error: {e}");
            let code = if matches!(e, Error::Schema(_)) { 2 } else { 1 };
            return ExitCode::from(code);
        }
    };
    if let Err(e) = emit(&cli, &value) {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    ExitCode::from(code)
}
