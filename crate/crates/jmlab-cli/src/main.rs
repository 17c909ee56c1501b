//! `jmlab`: command-line front end for the joint-measurement laboratory.
//!
//! Reports go to stdout as JSON (or CSV with `--format csv`), diagnostics
//! to stderr, so output pipes cleanly. Exit codes: 0 success, 1 domain
//! failure (invariant violations, failed verification), 2 usage or parse
//! failure.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand, ValueEnum};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

use jmlab::gallery;
use jmlab::operators::fixtures;
use jmlab::operators::StateVector;
use jmlab::process::{naimark_dilate, povm_from_process};
use jmlab::relations::full_report;
use jmlab::scenario::{ModelPayload, Scenario};
use jmlab::search::{minimize, run_sweep, SearchConfig, SweepConfig};
use jmlab::Tolerances;

#[derive(Parser)]
#[command(name = "jmlab", version, about = "Joint-measurement laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// RNG seed; falls back to the JMLAB_SEED environment variable, then 0
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for sweeps and search restarts (default: all cores)
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Report format on stdout
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,

    /// Directory for generated files
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,

    /// Validation tolerance base (default 1e-9; other tolerances scale)
    #[arg(long, global = true)]
    tol: Option<f64>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Check every invariant of a scenario file and its model
    Validate { path: PathBuf },
    /// Evaluate all noise metrics and uncertainty relations of a model
    Analyze { path: PathBuf },
    /// Dilate a POVM model into a measuring process
    Dilate {
        path: PathBuf,
        /// Re-induce the POVM from the dilation and check the round trip
        #[arg(long)]
        verify: bool,
    },
    /// Write a named example scenario to the output directory
    Gallery {
        /// guess | epr | independent | unbiased-pair | truncated-ccr
        name: String,
        /// Hilbert-space dimension (guess, epr)
        #[arg(long, default_value_t = 2)]
        dim: usize,
        /// Guess outcome value (guess)
        #[arg(long, default_value_t = 0.0)]
        y0: f64,
        /// Reference preparation: sharp | uniform (epr)
        #[arg(long, default_value = "uniform")]
        xi: String,
        /// Oscillator cutoff (truncated-ccr)
        #[arg(long, default_value_t = 16)]
        cutoff: usize,
    },
    /// Minimize a noise objective over parametrized joint measurements
    Search {
        /// JSON job file: { "scenario": {...}, "config": {...} }
        #[arg(long)]
        config: PathBuf,
    },
    /// Run a scenario-family sweep and aggregate to CSV
    Sweep {
        /// JSON sweep configuration
        #[arg(long)]
        config: PathBuf,
    },
}

enum Failure {
    /// Exit 2: unreadable/unparsable input or bad arguments.
    Usage(anyhow::Error),
    /// Exit 1: well-formed input that fails invariants or verification.
    Domain(anyhow::Error),
}

type CmdResult = Result<(), Failure>;

fn usage<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure::Usage(e.into())
}

fn domain<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure::Domain(e.into())
}

fn main() {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        // ignore the error when a pool already exists (tests, repeat calls)
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build_global();
    }
    let code = match run(&cli) {
        Ok(()) => 0,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            2
        }
        Err(Failure::Domain(e)) => {
            eprintln!("error: {e:#}");
            1
        }
    };
    std::process::exit(code);
}

fn run(cli: &Cli) -> CmdResult {
    let tol = match cli.tol {
        Some(base) if base.is_finite() && base > 0.0 => Tolerances::with_base(base),
        Some(base) => {
            return Err(usage(anyhow!(
                "--tol must be positive and finite, got {base}"
            )))
        }
        None => Tolerances::default(),
    };
    let seed = cli
        .seed
        .or_else(|| {
            std::env::var("JMLAB_SEED")
                .ok()
                .and_then(|s| s.parse().ok())
        })
        .unwrap_or(0);
    let seed_given = cli.seed.is_some() || std::env::var("JMLAB_SEED").is_ok();

    match &cli.command {
        Command::Validate { path } => cmd_validate(path, &tol),
        Command::Analyze { path } => cmd_analyze(path, cli.format, &tol),
        Command::Dilate { path, verify } => cmd_dilate(path, *verify, seed, &tol),
        Command::Gallery {
            name,
            dim,
            y0,
            xi,
            cutoff,
        } => cmd_gallery(name, *dim, *y0, xi, *cutoff, seed, &cli.out, &tol),
        Command::Search { config } => cmd_search(config, seed, seed_given, &cli.out, &tol),
        Command::Sweep { config } => cmd_sweep(config, seed, seed_given, &cli.out, &tol),
    }
}

// ---------------------------------------------------------------------------
// JSON with 17 significant digits, so every f64 round-trips exactly.
// ---------------------------------------------------------------------------

struct SigDigits;

impl serde_json::ser::Formatter for SigDigits {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        write!(writer, "{value:.16e}")
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> anyhow::Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SigDigits);
    value.serialize(&mut ser)?;
    Ok(String::from_utf8(buf)?)
}

fn read_scenario(path: &Path) -> Result<Scenario, Failure> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(usage)?;
    serde_json::from_str(&text)
        .with_context(|| format!("parsing {}", path.display()))
        .map_err(usage)
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, Failure> {
    fs::create_dir_all(dir)
        .with_context(|| format!("creating {}", dir.display()))
        .map_err(usage)?;
    let path = dir.join(name);
    fs::write(&path, contents)
        .with_context(|| format!("writing {}", path.display()))
        .map_err(usage)?;
    eprintln!("wrote {}", path.display());
    Ok(path)
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

fn cmd_validate(path: &Path, tol: &Tolerances) -> CmdResult {
    let scenario = read_scenario(path)?;
    let report = scenario.validate(tol);
    println!("{}", to_json(&report).map_err(domain)?);
    if report.passes {
        Ok(())
    } else {
        Err(domain(anyhow!(
            "{} invariant defect(s) found",
            report.defects.len()
        )))
    }
}

fn cmd_analyze(path: &Path, format: Format, tol: &Tolerances) -> CmdResult {
    let scenario = read_scenario(path)?;
    let validity = scenario.validate(tol);
    if !validity.passes {
        return Err(domain(anyhow!(
            "scenario fails validation: {}",
            validity.defects.join("; ")
        )));
    }
    let model = scenario.require_model().map_err(usage)?;
    let report =
        full_report(&model, &scenario.a, &scenario.b, &scenario.psi, tol).map_err(domain)?;
    match format {
        Format::Json => println!("{}", to_json(&report).map_err(domain)?),
        Format::Csv => {
            println!("relation,lhs,rhs,slack,holds");
            for row in report.csv_rows() {
                println!("{row}");
            }
        }
    }
    Ok(())
}

fn cmd_dilate(path: &Path, verify: bool, seed: u64, tol: &Tolerances) -> CmdResult {
    let scenario = read_scenario(path)?;
    let povm = match &scenario.model {
        Some(ModelPayload::Povm(p)) => p.clone(),
        Some(other) => {
            return Err(usage(anyhow!(
                "dilate expects a POVM model, found `{}`",
                other.kind()
            )))
        }
        None => return Err(usage(anyhow!("scenario has no model to dilate"))),
    };
    let validity = povm.validate(tol);
    if !validity.passes {
        return Err(domain(anyhow!(
            "POVM fails validation (completeness defect {:.3e})",
            validity.completeness_defect
        )));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let process = naimark_dilate(&povm, tol, &mut rng).map_err(domain)?;
    println!("{}", to_json(&process).map_err(domain)?);
    if verify {
        let back = povm_from_process(&process, tol).map_err(domain)?;
        let defect = povm
            .max_element_distance(&back, tol.round_trip)
            .map_err(domain)?;
        eprintln!("round-trip defect: {defect:.3e}");
        if defect > tol.round_trip {
            return Err(domain(anyhow!(
                "round-trip defect {defect:.3e} exceeds {:.3e}",
                tol.round_trip
            )));
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_gallery(
    name: &str,
    dim: usize,
    y0: f64,
    xi: &str,
    cutoff: usize,
    seed: u64,
    out: &Path,
    tol: &Tolerances,
) -> CmdResult {
    match name {
        "guess" => {
            let (a, b) = if dim == 2 {
                (fixtures::sigma_x(), fixtures::sigma_y())
            } else {
                let pair = gallery::DiscretePair::new(dim).map_err(usage)?;
                (pair.clock().clone(), pair.shift().clone())
            };
            let povm = gallery::guess_model(&a, y0, tol).map_err(domain)?;
            let psi = StateVector::basis_state(dim, 0);
            let scenario = Scenario::new(a, b, psi)
                .map_err(domain)?
                .with_model(ModelPayload::Povm(povm));
            let json = to_json(&scenario).map_err(domain)?;
            write_file(out, &format!("guess_d{dim}.json"), &json)?;
        }
        "epr" => {
            let reference = match xi {
                "sharp" => StateVector::basis_state(dim, 0),
                "uniform" => uniform_state(dim).map_err(domain)?,
                other => {
                    return Err(usage(anyhow!(
                        "unknown reference preparation `{other}` (use sharp or uniform)"
                    )))
                }
            };
            let model = gallery::epr_difference_sum_model(dim, &reference, tol).map_err(domain)?;
            // a complex two-level superposition, so the commutator bound is
            // nonzero and the relations are exercised nontrivially
            let mut amps = nalgebra::DVector::zeros(dim);
            amps[0] = num_complex::Complex64::new(1.0, 0.0);
            amps[1] = num_complex::Complex64::new(0.0, 1.0);
            let psi = StateVector::normalized(amps).map_err(domain)?;
            let scenario = Scenario::new(model.clock, model.shift, psi)
                .map_err(domain)?
                .with_model(ModelPayload::Ancilla(model.ancilla));
            let json = to_json(&scenario).map_err(domain)?;
            write_file(out, &format!("epr_d{dim}_{xi}.json"), &json)?;
        }
        "independent" => {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            let a = jmlab::operators::Operator::diagonal(&[0.0, 1.0]);
            let b = jmlab::operators::Operator::diagonal(&[3.0, 5.0]);
            let g1 = jmlab::sample::random_hermitian(2, &mut rng);
            let g2 = jmlab::sample::random_hermitian(2, &mut rng);
            let reference = jmlab::sample::random_state(4, &mut rng);
            let ancilla = gallery::independent_noise_model(&a, &b, &g1, &g2, &reference, tol)
                .map_err(domain)?;
            let scenario = Scenario::new(a, b, fixtures::plus_state())
                .map_err(domain)?
                .with_model(ModelPayload::Ancilla(ancilla));
            let json = to_json(&scenario).map_err(domain)?;
            write_file(out, "independent.json", &json)?;
        }
        "unbiased-pair" => {
            let (povm, a, b) = gallery::unbiased_pauli_pair_model(tol).map_err(domain)?;
            let scenario = Scenario::new(a, b, StateVector::basis_state(2, 0))
                .map_err(domain)?
                .with_model(ModelPayload::Povm(povm));
            let json = to_json(&scenario).map_err(domain)?;
            write_file(out, "unbiased_pair.json", &json)?;
        }
        "truncated-ccr" => {
            let osc = gallery::TruncatedOscillator::new(cutoff, 1.0).map_err(usage)?;
            let ground = StateVector::basis_state(cutoff, 0);
            let states = vec![
                (ground.clone(), ground.clone()),
                (osc.coherent_like(1.0), ground.clone()),
                (osc.squeezed_like(0.5), ground),
            ];
            let report = gallery::truncated_ccr_demo(cutoff, &states, 1.0, tol).map_err(domain)?;
            let json = to_json(&report).map_err(domain)?;
            write_file(out, &format!("truncated_ccr_n{cutoff}.json"), &json)?;
        }
        other => {
            return Err(usage(anyhow!(
                "unknown gallery model `{other}` (guess, epr, independent, unbiased-pair, truncated-ccr)"
            )))
        }
    }
    Ok(())
}

fn uniform_state(dim: usize) -> jmlab::Result<StateVector> {
    let amp = num_complex::Complex64::new(1.0 / (dim as f64).sqrt(), 0.0);
    StateVector::new(
        nalgebra::DVector::from_element(dim, amp),
        &Tolerances::default(),
    )
}

#[derive(serde::Deserialize)]
struct SearchJob {
    scenario: Scenario,
    config: SearchConfig,
}

#[derive(serde::Serialize)]
struct SearchResult<'a> {
    best_objective: f64,
    /// `½|⟨[A,B]⟩|` in the scenario state.
    bound: f64,
    evals: usize,
    best_povm: &'a jmlab::JointPovm,
}

fn cmd_search(
    config: &Path,
    seed: u64,
    seed_given: bool,
    out: &Path,
    tol: &Tolerances,
) -> CmdResult {
    let text = fs::read_to_string(config)
        .with_context(|| format!("reading {}", config.display()))
        .map_err(usage)?;
    let mut job: SearchJob = serde_json::from_str(&text)
        .with_context(|| format!("parsing {}", config.display()))
        .map_err(usage)?;
    if seed_given {
        job.config.seed = seed;
    }
    let validity = job.scenario.validate(tol);
    if !validity.passes {
        return Err(domain(anyhow!(
            "scenario fails validation: {}",
            validity.defects.join("; ")
        )));
    }
    let outcome = minimize(
        &job.scenario.a,
        &job.scenario.b,
        &job.scenario.psi,
        &job.config,
        tol,
    )
    .map_err(domain)?;
    let bound = 0.5
        * job
            .scenario
            .a
            .commutator(&job.scenario.b)
            .map_err(domain)?
            .expectation(&job.scenario.psi)
            .map_err(domain)?
            .norm();
    let result = SearchResult {
        best_objective: outcome.best_objective,
        bound,
        evals: outcome.evals,
        best_povm: &outcome.best_povm,
    };
    println!("{}", to_json(&result).map_err(domain)?);

    let mut trace = String::from("eval,objective,universal_slack,generalized_slack\n");
    for row in &outcome.trace {
        trace.push_str(&format!(
            "{},{:.17e},{:.17e},{:.17e}\n",
            row.eval, row.objective, row.universal_slack, row.generalized_slack
        ));
    }
    write_file(out, "search_trace.csv", &trace)?;
    Ok(())
}

fn cmd_sweep(
    config: &Path,
    seed: u64,
    seed_given: bool,
    out: &Path,
    tol: &Tolerances,
) -> CmdResult {
    let text = fs::read_to_string(config)
        .with_context(|| format!("reading {}", config.display()))
        .map_err(usage)?;
    let mut cfg: SweepConfig = serde_json::from_str(&text)
        .with_context(|| format!("parsing {}", config.display()))
        .map_err(usage)?;
    if seed_given {
        cfg.seed = seed;
    }
    let output = run_sweep(&cfg, tol).map_err(domain)?;

    let mut csv = output.csv_header.clone();
    csv.push('\n');
    for row in &output.csv_rows {
        csv.push_str(row);
        csv.push('\n');
    }
    write_file(out, "sweep.csv", &csv)?;

    #[derive(serde::Serialize)]
    struct Summary<'a> {
        mode: &'a jmlab::search::SweepMode,
        instances: usize,
        rows: usize,
        violations: usize,
        worst_slack: f64,
    }
    let summary = Summary {
        mode: &output.mode,
        instances: output.instances,
        rows: output.csv_rows.len(),
        violations: output.violations,
        worst_slack: output.worst_slack,
    };
    println!("{}", to_json(&summary).map_err(domain)?);
    if output.violations > 0 {
        return Err(domain(anyhow!(
            "{} relation violation(s) observed",
            output.violations
        )));
    }
    Ok(())
}
