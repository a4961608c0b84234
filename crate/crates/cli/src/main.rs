use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;

use qpair::classify::{classify_state, entropy_sweep, DEFAULT_TOL};
use qpair::coupling::{
    coupled_mixture, coupled_pure, paraqubit_family, paraqutrit_d_family, product_manifold_state, CoupledWeights,
    HalfInt, ManifoldPoint,
};
use qpair::io;
use qpair::measurement::{conditional_and_marginals, joint_distribution, sample_joint_counts, Analyzer};
use qpair::states::{classical_correlated_mix, epr_state, qubit_mixed, qubit_pure, BlochParams};
use qpair::tomography::{reconstruct_detailed, simulate_series, SeriesMode};
use qpair::{BipartiteDims, DensityMatrix, Error};

#[derive(Parser)]
#[command(name = "qpair", version, about = "Two-particle quantum state toolkit")]
struct Cli {
    /// Worker threads for sampling and sweeps.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a named state and write it as JSON.
    State(StateArgs),
    /// Classify a bipartite state file; prints JSON to stdout.
    Classify {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
    },
    /// Simulate the measurement series of a state and reconstruct it.
    Tomography(TomographyArgs),
    /// Entropy sweep of the qubit-qutrit d-family as CSV.
    Sweep {
        #[arg(long, value_enum, default_value_t = SweepFamily::ParaqutritD)]
        family: SweepFamily,
        #[arg(long)]
        steps: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Joint, conditional and marginal detection tables in the product basis.
    Correlations(CorrelationArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    QubitPure,
    QubitMixed,
    Epr,
    ClassicalMix,
    CoupledPure,
    CoupledMix,
    Paraqubit,
    ParaqutritD,
    ProductManifold,
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepFamily {
    ParaqutritD,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Exact,
    Sampled,
}

#[derive(Args)]
struct StateArgs {
    #[arg(long, value_enum)]
    family: Family,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    phi: Option<f64>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    ps: Option<f64>,
    #[arg(long)]
    p00: Option<f64>,
    #[arg(long)]
    p11: Option<f64>,
    #[arg(long)]
    p0: Option<f64>,
    #[arg(long)]
    d: Option<f64>,
    /// Subsystem sizes as `AxB`, e.g. `2x3`.
    #[arg(long, value_parser = parse_dims)]
    dims: Option<BipartiteDims>,
    /// Coupled block label, e.g. `3/2` or `1`.
    #[arg(long, value_parser = parse_half_int, allow_hyphen_values = true)]
    j: Option<HalfInt>,
    #[arg(long, value_parser = parse_half_int, allow_hyphen_values = true)]
    m: Option<HalfInt>,
    /// Comma-separated `j:m:weight` triples.
    #[arg(long, allow_hyphen_values = true)]
    weights: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    k_re: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    k_im: Option<f64>,
    /// Use the point at infinity of the product manifold.
    #[arg(long)]
    k_inf: bool,
}

#[derive(Args)]
struct TomographyArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = Mode::Exact)]
    mode: Mode,
    #[arg(long, default_value_t = 100_000)]
    shots: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Where to write the series JSON.
    #[arg(long)]
    series_out: PathBuf,
    /// Where to write the reconstructed state JSON.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CorrelationArgs {
    #[arg(long)]
    input: PathBuf,
    /// Directory receiving joint.csv, a_given_b.csv, b_given_a.csv and marginals.csv.
    #[arg(long)]
    out_dir: PathBuf,
    /// Also sample this many joint detections into counts.csv.
    #[arg(long)]
    shots: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn parse_dims(s: &str) -> Result<BipartiteDims, String> {
    let (a, b) = s.split_once(['x', 'X']).ok_or("expected AxB")?;
    let a = a.trim().parse().map_err(|e| format!("{e}"))?;
    let b = b.trim().parse().map_err(|e| format!("{e}"))?;
    BipartiteDims::new(a, b).map_err(|e| e.to_string())
}

fn parse_half_int(s: &str) -> Result<HalfInt, String> {
    let s = s.trim();
    match s.split_once('/') {
        Some((num, "2")) => num
            .trim()
            .parse::<i32>()
            .map(HalfInt::from_twice)
            .map_err(|e| e.to_string()),
        Some(_) => Err(format!("{s}: only halves are allowed")),
        None => s
            .parse::<f64>()
            .map_err(|e| e.to_string())
            .and_then(|x| HalfInt::from_f64(x).map_err(|e| e.to_string())),
    }
}

fn parse_weights(s: &str) -> Result<CoupledWeights, CliError> {
    let mut entries = Vec::new();
    for item in s.split(',').filter(|t| !t.trim().is_empty()) {
        let parts: Vec<&str> = item.split(':').collect();
        let [j, m, p] = parts.as_slice() else {
            return Err(CliError::usage(format!("weight entry '{item}' is not j:m:weight")));
        };
        let p: f64 = p
            .trim()
            .parse()
            .map_err(|e| CliError::usage(format!("weight '{p}': {e}")))?;
        entries.push((
            parse_half_int(j).map_err(CliError::usage)?,
            parse_half_int(m).map_err(CliError::usage)?,
            p,
        ));
    }
    Ok(CoupledWeights::new(entries)?)
}

/// Error carrying the process exit code.
struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Io(_) => 3,
            Error::Csv(inner) if inner.is_io_error() => 3,
            Error::IllConditioned(_)
            | Error::NoConvergence
            | Error::NegativeProbability { .. }
            | Error::AmbiguousAnalyzer { .. }
            | Error::IncompleteAnalyzer(_) => 4,
            _ => 2,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

fn require<T>(value: Option<T>, flag: &str, family: &str) -> Result<T, CliError> {
    value.ok_or_else(|| CliError::usage(format!("--{flag} is required for family {family}")))
}

fn bloch(args: &StateArgs, family: &str) -> Result<BlochParams, CliError> {
    Ok(BlochParams::new(
        require(args.theta, "theta", family)?,
        require(args.phi, "phi", family)?,
    )?)
}

fn build_state(args: &StateArgs) -> Result<DensityMatrix, CliError> {
    let rho = match args.family {
        Family::QubitPure => qubit_pure(bloch(args, "qubit-pure")?),
        Family::QubitMixed => qubit_mixed(require(args.p, "p", "qubit-mixed")?, bloch(args, "qubit-mixed")?)?,
        Family::Epr => epr_state(require(args.phi, "phi", "epr")?).to_density(),
        Family::ClassicalMix => classical_correlated_mix(require(args.p, "p", "classical-mix")?)?,
        Family::CoupledPure => coupled_pure(
            require(args.dims, "dims", "coupled-pure")?,
            require(args.j, "j", "coupled-pure")?,
            require(args.m, "m", "coupled-pure")?,
        )?,
        Family::CoupledMix => {
            let weights = parse_weights(require(args.weights.as_deref(), "weights", "coupled-mix")?)?;
            coupled_mixture(require(args.dims, "dims", "coupled-mix")?, &weights)?
        }
        Family::Paraqubit => paraqubit_family(
            require(args.ps, "ps", "paraqubit")?,
            require(args.p00, "p00", "paraqubit")?,
            require(args.p11, "p11", "paraqubit")?,
            require(args.p0, "p0", "paraqubit")?,
        )?,
        Family::ParaqutritD => paraqutrit_d_family(require(args.d, "d", "paraqutrit-d")?)?,
        Family::ProductManifold => {
            let dims = require(args.dims, "dims", "product-manifold")?;
            let point = if args.k_inf {
                ManifoldPoint::Infinity
            } else {
                ManifoldPoint::Finite(Complex64::new(
                    require(args.k_re, "k-re", "product-manifold")?,
                    args.k_im.unwrap_or(0.0),
                ))
            };
            product_manifold_state(dims, point)?.to_density()
        }
    };
    Ok(rho)
}

fn read_state(path: &Path) -> Result<DensityMatrix, CliError> {
    io::read_density(path).map_err(|e| {
        let mut err = CliError::from(e);
        err.message = format!("{}: {}", path.display(), err.message);
        err
    })
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(|e| CliError {
        code: 3,
        message: format!("{}: {e}", path.display()),
    })
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::State(args) => {
            let rho = build_state(&args)?;
            io::write_density(&args.out, &rho)?;
        }
        Command::Classify { input, tol } => {
            let rho = read_state(&input)?;
            let report = classify_state(&rho, tol)?;
            print!("{}", io::to_json_string(&report)?);
        }
        Command::Tomography(args) => {
            let rho = read_state(&args.input)?;
            let mode = match args.mode {
                Mode::Exact => SeriesMode::Exact,
                Mode::Sampled => SeriesMode::Sampled {
                    shots: args.shots,
                    seed: args.seed,
                },
            };
            let series = simulate_series(&rho, mode)?;
            io::write_json(&args.series_out, &series)?;
            let rec = reconstruct_detailed(&series)?;
            io::write_density(&args.out, &rec.state)?;
            println!(
                "frobenius_error={:e}",
                rec.state.matrix().frobenius_distance(rho.matrix())
            );
            println!("design_rank={}", rec.rank);
            println!("residual={:e}", rec.residual);
        }
        Command::Sweep { family, steps, out } => {
            let rows = match family {
                SweepFamily::ParaqutritD => entropy_sweep(steps)?,
            };
            io::write_sweep_csv(create(&out)?, &rows)?;
        }
        Command::Correlations(args) => {
            let rho = read_state(&args.input)?;
            let dims = rho.bipartite_dims()?;
            let (aa, ab) = (Analyzer::standard(dims.a), Analyzer::standard(dims.b));
            let joint = joint_distribution(&rho, &aa, &ab)?;
            let corr = conditional_and_marginals(&joint);
            std::fs::create_dir_all(&args.out_dir).map_err(|e| CliError {
                code: 3,
                message: format!("{}: {e}", args.out_dir.display()),
            })?;
            let dir = &args.out_dir;
            io::write_joint_csv(create(&dir.join("joint.csv"))?, &joint)?;
            io::write_conditional_csv(create(&dir.join("a_given_b.csv"))?, &corr.a_given_b)?;
            io::write_conditional_csv(create(&dir.join("b_given_a.csv"))?, &corr.b_given_a)?;
            io::write_marginals_csv(create(&dir.join("marginals.csv"))?, &corr)?;
            if let Some(shots) = args.shots {
                let counts = sample_joint_counts(&rho, &aa, &ab, shots, args.seed)?;
                io::write_table_csv(create(&dir.join("counts.csv"))?, &counts)?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads.max(1))
        .build_global()
    {
        eprintln!("error: thread pool: {e}");
        return ExitCode::from(4);
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
