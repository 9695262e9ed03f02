use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use jm_core::export::{
    write_comparison_csv, write_comparison_json, write_curve_csv, write_curve_json, CountsReport,
};
use jm_core::measurement::{haar_unitary, simulated_distribution};
use jm_core::region::compare_bounds;
use jm_core::stats::chi_square_gof_pooled;
use jm_core::{
    export_curve, is_jointly_measurable, simulate_measurement, ComplexUnitVector, Dimension, Error,
    NoiseParams, OperatorMatrix, Outcome, QuantumState, Threshold,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

mod verify;

const EXIT_USAGE: u8 = 1;
const EXIT_IO: u8 = 2;
const EXIT_OUTSIDE: u8 = 3;
const EXIT_VERIFY: u8 = 4;

#[derive(Parser)]
#[command(
    name = "jm",
    version,
    about = "Joint measurability of noisy, lossy basis measurements"
)]
struct Cli {
    /// Worker threads for Monte-Carlo and simulation (default: all cores).
    #[arg(long, global = true, env = "JM_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum StateKind {
    MaximallyMixed,
    Basis0,
    Random,
}

#[derive(Clone, Copy, ValueEnum)]
enum BasisKind {
    Identity,
    Random,
}

#[derive(Clone, Copy, ValueEnum)]
enum Report {
    Table,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Export the boundary curve (t, eta, p).
    Boundary {
        #[arg(long)]
        dim: usize,
        /// Uniform grid size in t; breakpoints 1/k are always added.
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
        /// Output file (stdout if omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Decide whether (eta, p) is jointly measurable for every basis pair.
    Membership {
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        eta: f64,
        #[arg(long)]
        p: f64,
    },
    /// Run verification suites against independent estimates.
    Verify {
        #[arg(long)]
        dim: usize,
        #[arg(long, default_value_t = 200_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "all")]
        suite: verify::Suite,
    },
    /// Compare the basis-measurement boundary with the general POVM bound.
    Compare {
        #[arg(long)]
        dim: usize,
        /// Rows at p = k/steps.
        #[arg(long, default_value_t = 100)]
        steps: usize,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate the noisy basis measurement from the classical parent model.
    Simulate {
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        t: f64,
        #[arg(long, default_value_t = 100_000)]
        shots: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "maximally-mixed")]
        state: StateKind,
        #[arg(long, value_enum, default_value = "identity")]
        basis: BasisKind,
        /// Stdout layout.
        #[arg(long, value_enum, default_value = "table")]
        report: Report,
        /// Also write the counts JSON here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum Failure {
    Usage(String),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Io(msg) => Failure::Io(msg),
            other => Failure::Usage(other.to_string()),
        }
    }
}

type Exit = std::result::Result<u8, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    }
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_IO)
        }
    }
}

fn run(command: Command) -> Exit {
    match command {
        Command::Boundary {
            dim,
            samples,
            format,
            out,
        } => {
            let d = Dimension::new(dim)?;
            let curve = export_curve(d, samples)?;
            emit(out.as_deref(), |w| match format {
                Format::Csv => write_curve_csv(&curve, w),
                Format::Json => write_curve_json(&curve, w),
            })?;
            Ok(0)
        }
        Command::Membership { dim, eta, p } => {
            let d = Dimension::new(dim)?;
            let verdict = is_jointly_measurable(d, NoiseParams::new(eta, p)?)?;
            let word = if verdict.inside { "inside" } else { "outside" };
            println!(
                "{word} eta_max={} margin={}",
                verdict.eta_max, verdict.margin
            );
            Ok(if verdict.inside { 0 } else { EXIT_OUTSIDE })
        }
        Command::Verify {
            dim,
            samples,
            seed,
            suite,
        } => {
            let cfg = verify::Config {
                d: Dimension::new(dim)?,
                samples,
                seed,
            };
            let checks = verify::run(suite, &cfg)?;
            for c in &checks {
                println!("{c}");
            }
            let failed = checks.iter().filter(|c| !c.passed).count();
            println!("{} checks, {failed} failed", checks.len());
            Ok(if failed == 0 { 0 } else { EXIT_VERIFY })
        }
        Command::Compare {
            dim,
            steps,
            format,
            out,
        } => {
            let d = Dimension::new(dim)?;
            let rows = compare_bounds(d, steps)?;
            emit(out.as_deref(), |w| match format {
                Format::Csv => write_comparison_csv(&rows, w),
                Format::Json => write_comparison_json(d, &rows, w),
            })?;
            Ok(0)
        }
        Command::Simulate {
            dim,
            t,
            shots,
            seed,
            state,
            basis,
            report,
            out,
        } => simulate(dim, t, shots, seed, state, basis, report, out.as_deref()),
    }
}

#[allow(clippy::too_many_arguments)]
fn simulate(
    dim: usize,
    t: f64,
    shots: usize,
    seed: u64,
    state: StateKind,
    basis: BasisKind,
    report: Report,
    out: Option<&Path>,
) -> Exit {
    let d = Dimension::new(dim)?;
    let t = Threshold::new(t)?;
    if t.get() >= 1.0 {
        return Err(Failure::Usage("--t must be below 1".into()));
    }
    if shots == 0 {
        return Err(Failure::Usage("--shots must be positive".into()));
    }
    // State and basis draw from their own stream so that the shot stream is shared.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(u64::MAX - 1);
    let state = match state {
        StateKind::MaximallyMixed => QuantumState::maximally_mixed(d),
        StateKind::Basis0 => QuantumState::pure(&ComplexUnitVector::basis(d, 0)?),
        StateKind::Random => QuantumState::random(d, &mut rng),
    };
    let basis = match basis {
        BasisKind::Identity => OperatorMatrix::identity(dim),
        BasisKind::Random => haar_unitary(d, &mut rng),
    };
    let counts = simulate_measurement(&state, &basis, t, shots, seed)?;
    let expected = simulated_distribution(&state, &basis, t)?;
    let test = chi_square_gof_pooled(&counts.counts, &expected).ok();
    let doc = CountsReport::new(d, t, &counts, &expected, test)?;
    if let Some(path) = out {
        emit(Some(path), |w| doc.write_json(w))?;
    }
    match report {
        Report::Json => emit(None, |w| doc.write_json(w))?,
        Report::Table => {
            let mut w = io::stdout().lock();
            let table = (|| -> io::Result<()> {
                writeln!(
                    w,
                    "{:>7} {:>10} {:>12} {:>12}",
                    "outcome", "count", "frequency", "expected"
                )?;
                for (slot, (&c, &e)) in counts.counts.iter().zip(&expected).enumerate() {
                    let label = Outcome::from_slot(slot, dim)
                        .map(Outcome::label)
                        .unwrap_or_default();
                    let freq = c as f64 / shots as f64;
                    writeln!(w, "{label:>7} {c:>10} {freq:>12.6} {e:>12.6}")?;
                }
                match test {
                    Some(x) => writeln!(
                        w,
                        "chi2 = {:.4} (dof {}), p-value = {:.4}",
                        x.statistic, x.dof, x.p_value
                    ),
                    None => writeln!(w, "chi2 unavailable: too few shots"),
                }
            })();
            table.map_err(|e| Failure::Io(e.to_string()))?;
        }
    }
    Ok(0)
}

/// Writes to `path`, or stdout when `None`; I/O errors map to exit code 2.
fn emit(
    path: Option<&Path>,
    write: impl FnOnce(&mut dyn Write) -> jm_core::Result<()>,
) -> std::result::Result<(), Failure> {
    match path {
        Some(path) => {
            let file =
                File::create(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
            let mut w = BufWriter::new(file);
            write(&mut w).map_err(Failure::from)?;
            w.flush()
                .map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
        }
        None => {
            let mut w = io::stdout().lock();
            write(&mut w).map_err(Failure::from)
        }
    }
}
