//! `flowtrap` command-line tool.
//!
//! Exit codes: 0 on success, 1 when a contract or oracle violation is detected (the
//! message names the witness), 2 on usage errors.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use flowtrap::bench::{run_solver, sweep, SolverId};
use flowtrap::families::{build_family, FamilyId};
use flowtrap::hardfn::{follow_path, verify_no_spurious, AdversarialIter, HardFunction, IterInstance};
use flowtrap::plsred::{build_localopt, reduce, step_bound, ReductionOutcome};

#[derive(Parser, Debug)]
#[command(name = "flowtrap", version, about = "Zero-order stationary point solver, benchmarks and hard instances")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Mode {
    Unconstrained,
    Constrained,
    Gd,
}

impl From<Mode> for SolverId {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Unconstrained => SolverId::GfptUnconstrained,
            Mode::Constrained => SolverId::GfptConstrained,
            Mode::Gd => SolverId::GradientDescent,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum TextFormat {
    Text,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum TableFormat {
    Csv,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one solver on a test family.
    Solve {
        #[arg(long, value_enum, default_value = "unconstrained")]
        mode: Mode,
        #[arg(long, value_parser = parse_family)]
        family: FamilyId,
        #[arg(long, default_value_t = 2)]
        d: usize,
        #[arg(long, value_parser = parse_positive)]
        eps: f64,
        /// Smoothness constant; defaults to the family's own.
        #[arg(long = "L", value_parser = parse_positive)]
        smoothness: Option<f64>,
        /// Start point as comma-separated decimals; defaults to the family's own.
        #[arg(long, value_parser = parse_point)]
        x0: Option<PointArg>,
        #[arg(long, value_enum, default_value = "text")]
        format: TextFormat,
    },
    /// Sweep eps and fit the query-count slope.
    Sweep {
        #[arg(long, value_parser = parse_solver)]
        solver: SolverId,
        #[arg(long, value_parser = parse_family)]
        family: FamilyId,
        #[arg(long, default_value_t = 2)]
        d: usize,
        /// Comma-separated eps values (>= 4, spanning >= 2 decades).
        #[arg(long, value_parser = parse_point)]
        eps: PointArg,
        #[arg(long, value_enum, default_value = "csv")]
        format: TableFormat,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Export the hard function of an ITER instance as a CSV landscape.
    Hardgen {
        #[arg(long)]
        iter: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_parser = parse_positive, default_value_t = 0.25)]
        step: f64,
        /// Export unnormalized values (divided by M otherwise).
        #[arg(long)]
        raw: bool,
    },
    /// Check that the hard function has no spurious near-stationary points.
    VerifyHard {
        #[arg(long)]
        iter: PathBuf,
        #[arg(long, value_parser = parse_positive, default_value_t = 0.05)]
        step: f64,
        /// Remove the connector of this node (negative control).
        #[arg(long)]
        omit_connector: Option<u32>,
        #[arg(long, value_enum, default_value = "text")]
        format: TextFormat,
    },
    /// Run the LocalOpt reduction from the origin and map the solution back.
    Reduce {
        #[arg(long, value_parser = parse_family)]
        family: FamilyId,
        #[arg(long, default_value_t = 2)]
        d: usize,
        #[arg(long, value_parser = parse_positive)]
        eps: f64,
        #[arg(long = "L", value_parser = parse_positive)]
        smoothness: Option<f64>,
        /// Bound on |f|; defaults to the family's own when it has one.
        #[arg(long = "B", value_parser = parse_positive)]
        bound: Option<f64>,
        #[arg(long)]
        max_steps: Option<u64>,
        #[arg(long, value_enum, default_value = "text")]
        format: TextFormat,
    },
    /// Let the path-following solver play against the adaptive ITER adversary.
    AdversaryDemo {
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..=24))]
        n: u32,
        #[arg(long, value_enum, default_value = "text")]
        format: TextFormat,
    },
}

fn parse_family(s: &str) -> std::result::Result<FamilyId, String> {
    s.parse().map_err(|e: flowtrap::Error| e.to_string())
}

fn parse_solver(s: &str) -> std::result::Result<SolverId, String> {
    s.parse().map_err(|e: flowtrap::Error| e.to_string())
}

fn parse_positive(s: &str) -> std::result::Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        _ => Err(format!("expected a positive number, got '{s}'")),
    }
}

/// A comma-separated list of decimals.
#[derive(Clone, Debug)]
struct PointArg(Vec<f64>);

fn parse_point(s: &str) -> std::result::Result<PointArg, String> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| format!("invalid decimal '{t}' in '{s}'")))
        .collect::<std::result::Result<_, _>>()
        .map(PointArg)
}

fn fmt_point(p: &[f64]) -> String {
    p.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

fn read_instance(path: &Path) -> Result<IterInstance> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(IterInstance::parse(&text)?)
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn configure_threads() -> Result<()> {
    let threads = match std::env::var("FLOWTRAP_THREADS") {
        Ok(v) => v.trim().parse::<usize>().with_context(|| format!("FLOWTRAP_THREADS must be an integer, got '{v}'"))?,
        Err(_) => 0,
    };
    if threads > 0 {
        rayon::ThreadPoolBuilder::new().num_threads(threads).build_global()?;
    }
    Ok(())
}

/// Outcome of a command: success, or a detected violation (exit code 1).
enum Status {
    Ok,
    Violation(String),
}

fn run(cli: Cli) -> Result<Status> {
    match cli.command {
        Command::Solve { mode, family, d, eps, smoothness, x0, format } => {
            let mut fam = build_family(family, d, eps)?;
            if let Some(l) = smoothness {
                fam.oracle = fam.oracle.with_smoothness(l);
            }
            let x0 = x0.map_or(fam.x0, |p| p.0);
            let out = run_solver(mode.into(), &fam.oracle, &x0, eps)?;
            let r = &out.result;
            match format {
                TextFormat::Text => {
                    println!("point: {}", fmt_point(&r.point));
                    println!("grad_norm: {}", out.grad_norm);
                    println!("value_queries: {}", r.stats.value_queries);
                    println!("gradient_queries: {}", r.stats.gradient_queries);
                    println!("iterations: {}", r.iterations);
                }
                TextFormat::Json => println!(
                    "{}",
                    serde_json::json!({
                        "point": r.point,
                        "grad_norm": out.grad_norm,
                        "value_queries": r.stats.value_queries,
                        "gradient_queries": r.stats.gradient_queries,
                        "iterations": r.iterations,
                    })
                ),
            }
            if out.grad_norm > eps {
                return Ok(Status::Violation(format!(
                    "output point {} has gradient norm {} > eps {eps}",
                    fmt_point(&r.point),
                    out.grad_norm
                )));
            }
            Ok(Status::Ok)
        }
        Command::Sweep { solver, family, d, eps, format, out } => {
            let res = sweep(solver, family, d, &eps.0)?;
            let mut w = output(out.as_deref())?;
            match format {
                TableFormat::Csv => res.write_csv(&mut w)?,
                TableFormat::Json => writeln!(w, "{}", res.to_json()?)?,
            }
            w.flush()?;
            eprintln!("slope {:.4} +- {:.4}", res.slope, res.slope_ci);
            Ok(Status::Ok)
        }
        Command::Hardgen { iter, out, step, raw } => {
            let hf = HardFunction::new(read_instance(&iter)?, !raw);
            let rows = hf.export_csv(output(Some(&out))?, step)?;
            eprintln!("wrote {rows} rows to {}", out.display());
            Ok(Status::Ok)
        }
        Command::VerifyHard { iter, step, omit_connector, format } => {
            let mut hf = HardFunction::new(read_instance(&iter)?, false);
            if let Some(u) = omit_connector {
                hf = hf.omitting_connector(u);
            }
            let rep = verify_no_spurious(&hf, step)?;
            match format {
                TextFormat::Text => {
                    println!("n: {}  M: {}  grid_step: {}", rep.n, rep.m, rep.grid_step);
                    println!("samples: {}  low samples: {}", rep.samples, rep.low_sample_count);
                    println!("cells: {}  certified: {}  uncertified: {}", rep.cells, rep.certified_cells, rep.uncertified_cells);
                    println!("min |grad| outside solution boxes: {}", rep.min_grad_outside);
                    println!("refined near-stationary points: {}", rep.refined.len());
                    println!("solution boxes hit: A {:?}  B {:?}", rep.hits_box_a, rep.hits_box_b);
                    println!("decoded solutions: {:?}  expected: {:?}", rep.decoded_solutions, rep.expected_solutions);
                    println!("offenders: {}", rep.offenders.len());
                    for o in rep.offenders.iter().take(20) {
                        println!("  ({:.4}, {:.4}) |grad| = {:.3e}", o.x, o.y, o.grad_norm);
                    }
                }
                TextFormat::Json => println!("{}", serde_json::to_string_pretty(&rep)?),
            }
            if rep.passed() {
                Ok(Status::Ok)
            } else {
                let first = rep.offenders.first().map(|o| format!(" first at ({}, {})", o.x, o.y)).unwrap_or_default();
                Ok(Status::Violation(format!("{} offenders found;{first}", rep.offenders.len())))
            }
        }
        Command::Reduce { family, d, eps, smoothness, bound, max_steps, format } => {
            let mut fam = build_family(family, d, eps)?;
            if let Some(l) = smoothness {
                fam.oracle = fam.oracle.with_smoothness(l);
            }
            if let Some(b) = bound {
                fam.oracle = fam.oracle.with_bound(b);
            }
            let inst = build_localopt(&fam.oracle, eps)?;
            let (run, outcome) = reduce(&inst, max_steps.unwrap_or_else(|| step_bound(&inst)))?;
            match format {
                TextFormat::Text => {
                    println!("gamma: {}  m: {}", inst.gamma(), inst.m());
                    println!("steps: {}  value_queries: {}", run.steps, inst.queries().value_queries);
                    println!("outcome: {}", serde_json::to_string(&outcome)?);
                }
                TextFormat::Json => println!(
                    "{}",
                    serde_json::json!({
                        "gamma": inst.gamma(),
                        "m": inst.m(),
                        "steps": run.steps,
                        "min_drop": run.min_drop,
                        "min_steep_drop": run.min_steep_drop,
                        "steep_steps": run.steep_steps,
                        "value_queries": inst.queries().value_queries,
                        "outcome": outcome,
                    })
                ),
            }
            Ok(match outcome {
                ReductionOutcome::StationaryPoint { .. } => Status::Ok,
                ReductionOutcome::ViolationBoundedness { point, value } => {
                    Status::Violation(format!("boundedness violated at {}: f = {value}", fmt_point(&point)))
                }
                ReductionOutcome::ViolationTaylor { x, y, gap, allowed } => Status::Violation(format!(
                    "Taylor inequality violated between {} and {}: gap {gap} > {allowed}",
                    fmt_point(&x),
                    fmt_point(&y)
                )),
            })
        }
        Command::AdversaryDemo { n, format } => {
            let mut adv = AdversarialIter::new(n)?;
            let (sol, queries) = follow_path(&mut adv);
            let inst = adv.extend_to_instance()?;
            let consistent = adv.transcript().iter().all(|&(v, c)| inst.succ(v) == c);
            match format {
                TextFormat::Text => {
                    println!("n: {n}  nodes: {}", 1u64 << n);
                    println!("queries: {queries}");
                    println!("solution: {} ({:?})", sol.v, sol.kind);
                    println!("transcript extends to a valid instance: {consistent}");
                }
                TextFormat::Json => println!(
                    "{}",
                    serde_json::json!({
                        "n": n,
                        "queries": queries,
                        "solution": sol,
                        "consistent_extension": consistent,
                    })
                ),
            }
            if consistent {
                Ok(Status::Ok)
            } else {
                Ok(Status::Violation("transcript extension disagrees with the answers".into()))
            }
        }
    }
}

fn exit_code_for(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<flowtrap::Error>() {
        Some(flowtrap::Error::Precondition(_)) | Some(flowtrap::Error::Parse { .. }) | Some(flowtrap::Error::InvalidIter(_)) => 2,
        Some(_) => 1,
        None if err.downcast_ref::<io::Error>().is_some() => 2,
        None => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e:#}");
        return ExitCode::from(2);
    }
    match run(cli) {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::Violation(msg)) => {
            eprintln!("violation: {msg}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
