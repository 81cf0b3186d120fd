use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use kemeny::dnc::{DncConfig, SplitStrategy, ThetaSolver};
use kemeny::hutch::HutchConfig;
use kemeny::io::{init_threads_from_env, run, InputKind, MethodChoice, Normalization, OutputFormat, RunConfig};
use kemeny::KemenyError;

#[derive(Clone, Copy, Debug, clap::ValueEnum)]
enum Split {
    Half,
    Nd,
}

#[derive(Clone, Copy, Debug, clap::ValueEnum)]
enum Solver {
    Lu,
    Gmres,
    Bicgstab,
}

/// Kemeny's constant of the Markov chain stored in a Matrix Market file.
///
/// Set KEMENY_THREADS to cap the worker threads (0 = one per core).
#[derive(Debug, Parser)]
#[command(name = "kemeny", version)]
struct Cli {
    input: PathBuf,

    #[arg(long, value_enum, default_value = "adjacency")]
    kind: InputKind,

    #[arg(long, value_enum, default_value = "row")]
    normalize: Normalization,

    #[arg(long, value_enum, default_value = "auto")]
    method: MethodChoice,

    /// Leaf size below which divide-and-conquer solves densely.
    #[arg(long, default_value_t = 512)]
    n0: usize,

    #[arg(long, value_enum, default_value = "half")]
    split: Split,

    #[arg(long, value_enum, default_value = "lu")]
    solver: Solver,

    /// Krylov tolerance for the coupling solve.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,

    /// Hutch++ failure probability.
    #[arg(long, default_value_t = 0.25)]
    delta: f64,

    /// Hutch++ relative accuracy.
    #[arg(long = "eps", default_value_t = 0.1)]
    epsilon: f64,

    /// Hutch++ query count; overrides --delta/--eps.
    #[arg(long)]
    samples: Option<usize>,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Hutch++ inner CG tolerance.
    #[arg(long, default_value_t = 1e-3)]
    inner_tol: f64,

    /// Work on the largest strongly connected component of a reducible input.
    #[arg(long)]
    largest_scc: bool,

    /// Keep adjacency weights instead of using the 0/1 pattern.
    #[arg(long)]
    keep_weights: bool,

    /// Allow auto to use the randomized estimate on large symmetric inputs.
    #[arg(long)]
    coarse: bool,

    /// Largest n handled densely.
    #[arg(long, default_value_t = kemeny::direct::N_DENSE)]
    n_dense: usize,

    #[arg(long, conflicts_with = "csv")]
    json: bool,

    #[arg(long)]
    csv: bool,

    /// Keep wall-clock times in JSON/CSV output.
    #[arg(long)]
    timing: bool,
}

impl Cli {
    fn config(self) -> RunConfig {
        let format = match (self.json, self.csv) {
            (true, _) => OutputFormat::Json,
            (_, true) => OutputFormat::Csv,
            _ => OutputFormat::Human,
        };
        RunConfig {
            input: self.input,
            kind: self.kind,
            normalize: self.normalize,
            method: self.method,
            dnc: DncConfig {
                n0: self.n0,
                split: match self.split {
                    Split::Half => SplitStrategy::Halving,
                    Split::Nd => SplitStrategy::NestedDissection,
                },
                solver: match self.solver {
                    Solver::Lu => ThetaSolver::SparseLu,
                    Solver::Gmres => ThetaSolver::Gmres,
                    Solver::Bicgstab => ThetaSolver::Bicgstab,
                },
                tol: self.tol,
                ..Default::default()
            },
            hutch: HutchConfig {
                delta: self.delta,
                epsilon: self.epsilon,
                samples: self.samples,
                seed: self.seed,
                inner_tol: self.inner_tol,
            },
            format,
            largest_scc: self.largest_scc,
            keep_weights: self.keep_weights,
            coarse: self.coarse,
            n_dense: self.n_dense,
            timing: self.timing,
        }
    }
}

fn main() -> ExitCode {
    let cfg = Cli::parse().config();
    if let Err(e) = init_threads_from_env() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    let start = Instant::now();
    match run(&cfg) {
        Ok(report) => {
            print!("{}", report.render(start.elapsed().as_secs_f64()));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            if matches!(e, KemenyError::Reducible { .. }) {
                eprintln!("hint: pass --largest-scc to use the largest strongly connected component");
            }
            ExitCode::from(1)
        }
    }
}
