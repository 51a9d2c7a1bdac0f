//! Command-line front end for the detector-network engine.
//!
//! Exit codes: 0 on success, 1 on validation or oracle failure, 2 on
//! usage or parse errors.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qdn::experiments;
use qdn::netdef::{self, NetDefDocument, ResultsFormat};
use qdn::oracle;
use qdn::register::Labstate;
use qdn::stage::{NetworkProgram, StageMap};
use qdn::QdnError;

mod params;

use params::{parse_complex, parse_complex_list, parse_indices};

#[derive(Parser)]
#[command(name = "qdn", version, about = "Quantized detector network simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
#[allow(clippy::large_enum_variant)]
enum Command {
    /// Validate a network definition document and run it
    Run(RunArgs),
    /// Check semi-unitarity of a document's stages on the reachable support
    Validate(ValidateArgs),
    /// Cross-check runs against independent oracles
    Oracle(OracleArgs),
    /// Build a preset experiment, then run it or emit its document
    Preset(PresetArgs),
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl From<Format> for ResultsFormat {
    fn from(format: Format) -> ResultsFormat {
        match format {
            Format::Csv => ResultsFormat::Csv,
            Format::Json => ResultsFormat::Json,
        }
    }
}

#[derive(Args)]
struct RunArgs {
    /// Path to a .qdn.json document
    input: PathBuf,
    /// Output format for the probability table
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Write results to a file instead of standard output
    #[arg(long)]
    out: Option<PathBuf>,
    /// Cross-check every reported amplitude against an independent oracle
    #[arg(long)]
    oracle: bool,
    /// Semi-unitarity validation tolerance
    #[arg(long, default_value_t = 1e-9)]
    tolerance: f64,
}

#[derive(Args)]
struct ValidateArgs {
    input: PathBuf,
    #[arg(long, default_value_t = 1e-9)]
    tolerance: f64,
}

#[derive(Args)]
struct OracleArgs {
    /// Document to cross-check (omit when using --random)
    input: Option<PathBuf>,
    /// Self-check seeded random semi-unitary programs instead of a document
    #[arg(long)]
    random: bool,
    /// Number of random programs to generate
    #[arg(long, default_value_t = 20)]
    count: u32,
    /// Maximum number of stages per random program
    #[arg(long, default_value_t = 4)]
    stages: u32,
    /// Maximum register rank per random program
    #[arg(long, default_value_t = 4)]
    max_rank: u32,
    /// Seed for the random program generator (bit-reproducible)
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Largest accepted engine-vs-oracle amplitude deviation
    #[arg(long, default_value_t = 1e-12)]
    tolerance: f64,
}

#[derive(Args)]
struct PresetArgs {
    /// One of: sg, pvm, slit, double-slit, epr, hsz, product
    name: String,
    /// Emit the .qdn.json document instead of running it
    #[arg(long)]
    emit: bool,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    oracle: bool,
    #[arg(long, default_value_t = 1e-9)]
    tolerance: f64,
    /// Complex pair "re,im"
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    beta: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    gamma: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    delta: Option<String>,
    /// Semicolon-separated complex pairs "re,im;re,im;..."
    #[arg(long, allow_hyphen_values = true)]
    psi: Option<String>,
    /// Cyclic site count M
    #[arg(long)]
    sites: Option<u32>,
    /// Comma-separated slit indices
    #[arg(long)]
    slits: Option<String>,
    /// Slit kernel: fresnel | dft-row
    #[arg(long, default_value = "fresnel")]
    kernel: String,
    /// Split amplitudes over the open slits (defaults to an even split)
    #[arg(long, allow_hyphen_values = true)]
    split: Option<String>,
    /// Angle in radians
    #[arg(long, allow_hyphen_values = true)]
    theta: Option<f64>,
    /// Azimuthal angle in radians
    #[arg(long, allow_hyphen_values = true)]
    phi: Option<f64>,
    /// Append the balanced beamsplitter stage (hsz only)
    #[arg(long)]
    beamsplitter: bool,
}

const PRESET_USAGE: &str = "\
presets and their parameters:
  sg           --alpha re,im --beta re,im
  pvm          --psi re,im;re,im;...
  slit         --sites M --slits a,b,... [--kernel fresnel|dft-row] [--split re,im;...]
  double-slit  --sites M --slits s,ms [--kernel fresnel|dft-row] [--split re,im;re,im]
  epr          --theta rad [--phi rad]
  hsz          --theta rad [--beamsplitter]
  product      --alpha re,im --beta re,im --gamma re,im --delta re,im";

/// A command failure carrying the process exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage<T: Into<String>>(message: T) -> Failure {
        Failure {
            code: 2,
            message: message.into(),
        }
    }

    fn validation<T: Into<String>>(message: T) -> Failure {
        Failure {
            code: 1,
            message: message.into(),
        }
    }
}

fn engine_failure(error: QdnError) -> Failure {
    // engine errors surface once a document parsed: validation class
    Failure::validation(error.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Validate(args) => cmd_validate(args),
        Command::Oracle(args) => cmd_oracle(args),
        Command::Preset(args) => cmd_preset(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}

fn load_program(path: &Path) -> Result<(NetDefDocument, NetworkProgram), Failure> {
    let bytes = fs::read(path)
        .map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))?;
    let document = netdef::parse_netdef(&bytes).map_err(|e| Failure::usage(e.to_string()))?;
    let program = netdef::compile(&document).map_err(|e| Failure::usage(e.to_string()))?;
    Ok((document, program))
}

fn write_output(bytes: &[u8], out: Option<&Path>) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, bytes)
            .map_err(|e| Failure::usage(format!("cannot write {}: {e}", path.display()))),
        None => {
            std::io::stdout()
                .write_all(bytes)
                .map_err(|e| Failure::usage(format!("cannot write to standard output: {e}")))
        }
    }
}

fn cmd_run(args: RunArgs) -> Result<(), Failure> {
    let (document, program) = load_program(&args.input)?;
    run_and_emit(
        &program,
        document.queries.as_ref(),
        args.format,
        args.out.as_deref(),
        args.oracle,
        args.tolerance,
    )
}

fn run_and_emit(
    program: &NetworkProgram,
    queries: Option<&netdef::Queries>,
    format: Format,
    out: Option<&Path>,
    oracle: bool,
    tolerance: f64,
) -> Result<(), Failure> {
    let output = program.run_with_tolerance(tolerance).map_err(engine_failure)?;
    if oracle {
        let deviation = oracle_deviation(program, &output.final_state).map_err(engine_failure)?;
        eprintln!("oracle max deviation: {deviation:.3e}");
        if deviation > qdn::stage::PROBABILITY_TOLERANCE {
            return Err(Failure::validation(format!(
                "oracle deviation {deviation:.3e} exceeds {:.1e}",
                qdn::stage::PROBABILITY_TOLERANCE
            )));
        }
    }
    let table =
        netdef::apply_queries(&output.table, queries).map_err(|e| Failure::usage(e.to_string()))?;
    write_output(&netdef::emit_results(&table, format.into()), out)
}

/// Max engine-vs-oracle amplitude deviation: the dense reference always,
/// plus brute-force path enumeration when the program is a total rank-1
/// chain prepared on a single generator.
fn oracle_deviation(program: &NetworkProgram, final_state: &Labstate) -> Result<f64, QdnError> {
    let dense = oracle::dense_final_state(program)?;
    let mut deviation = oracle::max_deviation(final_state, &dense);
    if program.initial().degree() == 1 {
        let source = program.initial().indices()[0];
        let enumerable = (0..program.final_rank())
            .all(|target| program.path_amplitude_enumerate(source, target).is_ok());
        if enumerable {
            for target in 0..program.final_rank() {
                let expected = program.path_amplitude_enumerate(source, target)?;
                let monomial = qdn::SignalMonomial::generator(target)?;
                let got = final_state.amplitude(&monomial)?;
                deviation = deviation.max((got - expected).norm());
            }
        }
    }
    Ok(deviation)
}

fn cmd_validate(args: ValidateArgs) -> Result<(), Failure> {
    let (_, program) = load_program(&args.input)?;
    let report = program.validate(args.tolerance).map_err(engine_failure)?;
    if report.passed {
        println!(
            "passed: max Gram deviation {:.3e} over {} monomials (tolerance {:.1e})",
            report.max_gram_deviation,
            report.checked_domain.len(),
            report.tolerance
        );
        Ok(())
    } else {
        Err(Failure::validation(format!(
            "stage {}: max Gram deviation {:.3e} exceeds tolerance {:.1e}",
            report.failing_stage.unwrap_or(0),
            report.max_gram_deviation,
            report.tolerance
        )))
    }
}

fn cmd_oracle(args: OracleArgs) -> Result<(), Failure> {
    if args.random {
        return oracle_random(&args);
    }
    let input = args
        .input
        .as_deref()
        .ok_or_else(|| Failure::usage("oracle needs a document path or --random"))?;
    let (_, program) = load_program(input)?;
    let output = program
        .run_with_tolerance(qdn::stage::VALIDATION_TOLERANCE)
        .map_err(engine_failure)?;
    let deviation = oracle_deviation(&program, &output.final_state).map_err(engine_failure)?;
    println!("oracle max deviation: {deviation:.3e}");
    if deviation > args.tolerance {
        return Err(Failure::validation(format!(
            "oracle deviation {deviation:.3e} exceeds tolerance {:.1e}",
            args.tolerance
        )));
    }
    Ok(())
}

/// Seeded self-check: random semi-unitary chains, cross-checked three ways
/// (vector-matrix propagation, explicit path enumeration, dense evolution).
fn oracle_random(args: &OracleArgs) -> Result<(), Failure> {
    if args.max_rank == 0 || args.max_rank > 16 {
        return Err(Failure::usage("--max-rank must lie in 1..=16"));
    }
    if args.stages == 0 {
        return Err(Failure::usage("--stages must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let mut worst = 0.0f64;
    for index in 0..args.count {
        let stage_count = 1 + rng.random::<u32>() % args.stages;
        let mut ranks = vec![1 + rng.random::<u32>() % args.max_rank];
        for _ in 0..stage_count {
            let last = *ranks.last().expect("nonempty");
            let headroom = args.max_rank - last;
            let next = last
                + if headroom == 0 {
                    0
                } else {
                    rng.random::<u32>() % (headroom + 1)
                };
            ranks.push(next);
        }
        let stages: Vec<StageMap> = ranks
            .windows(2)
            .map(|w| StageMap::random_semi_unitary(w[0], w[1], rng.random::<u64>()))
            .collect::<Result<_, _>>()
            .map_err(engine_failure)?;
        let source = rng.random::<u32>() % ranks[0];
        let initial = qdn::SignalMonomial::generator(source).map_err(engine_failure)?;
        let program =
            NetworkProgram::new(initial, ranks[0], stages).map_err(engine_failure)?;
        let output = program
            .run_with_tolerance(qdn::stage::VALIDATION_TOLERANCE)
            .map_err(engine_failure)?;
        let mut deviation = oracle_deviation(&program, &output.final_state)
            .map_err(engine_failure)?;
        for i0 in 0..program.initial_rank() {
            for i_n in 0..program.final_rank() {
                let fast = program.path_amplitude(i0, i_n).map_err(engine_failure)?;
                let slow = program
                    .path_amplitude_enumerate(i0, i_n)
                    .map_err(engine_failure)?;
                deviation = deviation.max((fast - slow).norm());
            }
        }
        println!(
            "program {index}: stages {} ranks {:?} source {source} deviation {deviation:.3e}",
            stage_count, ranks
        );
        worst = worst.max(deviation);
    }
    println!(
        "oracle max deviation over {} random programs: {worst:.3e}",
        args.count
    );
    if worst > args.tolerance {
        return Err(Failure::validation(format!(
            "oracle deviation {worst:.3e} exceeds tolerance {:.1e}",
            args.tolerance
        )));
    }
    Ok(())
}

fn cmd_preset(args: PresetArgs) -> Result<(), Failure> {
    let program = build_preset(&args)?;
    if args.emit {
        let document = netdef::document_from_program(&program, None);
        return write_output(&netdef::serialize_netdef(&document), args.out.as_deref());
    }
    run_and_emit(
        &program,
        None,
        args.format,
        args.out.as_deref(),
        args.oracle,
        args.tolerance,
    )
}

fn preset_failure<T: std::fmt::Display>(message: T) -> Failure {
    Failure::usage(format!("{message}\n{PRESET_USAGE}"))
}

fn required<'a, T>(value: &'a Option<T>, flag: &str, preset: &str) -> Result<&'a T, Failure> {
    value
        .as_ref()
        .ok_or_else(|| preset_failure(format!("preset {preset} requires {flag}")))
}

fn complex_arg(value: &Option<String>, flag: &str, preset: &str) -> Result<Complex64, Failure> {
    parse_complex(required(value, flag, preset)?).map_err(preset_failure)
}

fn build_preset(args: &PresetArgs) -> Result<NetworkProgram, Failure> {
    match args.name.as_str() {
        "sg" => {
            let alpha = complex_arg(&args.alpha, "--alpha", "sg")?;
            let beta = complex_arg(&args.beta, "--beta", "sg")?;
            experiments::stern_gerlach(alpha, beta).map_err(preset_failure)
        }
        "pvm" => {
            let psi = parse_complex_list(required(&args.psi, "--psi", "pvm")?)
                .map_err(preset_failure)?;
            experiments::pvm_network(&psi).map_err(preset_failure)
        }
        "slit" | "double-slit" => build_slit_preset(args),
        "epr" => {
            let theta = *required(&args.theta, "--theta", "epr")?;
            let phi = args.phi.unwrap_or(0.0);
            let settings = experiments::EprSettings::new(theta, phi).map_err(preset_failure)?;
            experiments::epr_network(settings).map_err(preset_failure)
        }
        "hsz" => {
            let theta = *required(&args.theta, "--theta", "hsz")?;
            let downstream = if args.beamsplitter {
                vec![experiments::hsz_beamsplitter()]
            } else {
                Vec::new()
            };
            experiments::hsz_network(theta, &downstream).map_err(preset_failure)
        }
        "product" => {
            let alpha = complex_arg(&args.alpha, "--alpha", "product")?;
            let beta = complex_arg(&args.beta, "--beta", "product")?;
            let gamma = complex_arg(&args.gamma, "--gamma", "product")?;
            let delta = complex_arg(&args.delta, "--delta", "product")?;
            let a = experiments::stern_gerlach(alpha, beta).map_err(preset_failure)?;
            let b = experiments::stern_gerlach(gamma, delta).map_err(preset_failure)?;
            experiments::product_network(&a, &b).map_err(preset_failure)
        }
        other => Err(preset_failure(format!("unknown preset \"{other}\""))),
    }
}

fn build_slit_preset(args: &PresetArgs) -> Result<NetworkProgram, Failure> {
    let preset = args.name.as_str();
    let sites = *required(&args.sites, "--sites", preset)?;
    let slits = parse_indices(required(&args.slits, "--slits", preset)?)
        .map_err(preset_failure)?;
    if preset == "double-slit" {
        if slits.len() != 2 {
            return Err(preset_failure("double-slit takes exactly two slit indices"));
        }
        if sites > 0 && (slits[0] + slits[1]) % sites != 0 {
            return Err(preset_failure(format!(
                "double-slit slits must mirror each other: expected s,(M-s) mod M, got {},{}",
                slits[0], slits[1]
            )));
        }
    }
    let kernel = match args.kernel.as_str() {
        "fresnel" => experiments::fresnel_kernel(sites),
        "dft-row" => experiments::dft_row_kernel(sites),
        other => {
            return Err(preset_failure(format!(
                "unknown kernel \"{other}\" (expected fresnel or dft-row)"
            )))
        }
    };
    let geometry =
        experiments::SlitGeometry::new(sites, &slits, kernel).map_err(preset_failure)?;
    let split = match &args.split {
        Some(text) => parse_complex_list(text).map_err(preset_failure)?,
        None => {
            let even = 1.0 / (geometry.open_slits().len() as f64).sqrt();
            vec![Complex64::new(even, 0.0); geometry.open_slits().len()]
        }
    };
    experiments::slit_network(&geometry, &split).map_err(preset_failure)
}
