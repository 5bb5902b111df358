use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;
use transmission::cli::{error_exit_code, run, Overrides, RunConfig, Suite};

#[derive(Parser)]
#[command(name = "ptc", version, about = "Half-space factorization and boundary identity checks")]
struct Cli {
    /// TOML run configuration; flags override its keys
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,
    #[command(flatten)]
    keys: Keys,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Args)]
struct Keys {
    /// catalog symbol, e.g. "frac_laplacian(0.5)", "L1(0,1)", "ex66(1.5)"
    #[arg(long, global = true)]
    symbol: Option<String>,
    /// space dimension
    #[arg(short = 'n', long = "dim", global = true)]
    n: Option<usize>,
    /// grid points per axis (power of two)
    #[arg(short = 'N', long = "points", global = true)]
    points: Option<usize>,
    /// box half-length
    #[arg(short = 'L', long = "half-length", global = true)]
    half_length: Option<f64>,
    /// expected order / 2, checked against the symbol
    #[arg(short = 'a', long, global = true)]
    a: Option<f64>,
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// write zero runtimes so reruns are byte-identical
    #[arg(long, global = true)]
    no_timing: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run the suites listed in the config
    Run,
    /// Factorization index, s0 and principal condition
    Index,
    /// Wiener-Hopf factorization of reduced symbol slices
    Factorize,
    /// Homogeneous Dirichlet problem with Gaussian data
    Solve,
    /// Boundary identities
    Verify {
        #[arg(value_enum)]
        identity: Identity,
    },
    /// Integration-by-parts error under grid refinement
    Convergence,
}

#[derive(Clone, Copy, ValueEnum)]
enum Identity {
    Ibp,
    Green,
    Ex66,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let suite = match cli.command {
        None | Some(Command::Run) => None,
        Some(Command::Index) => Some(Suite::Index),
        Some(Command::Factorize) => Some(Suite::Factorize),
        Some(Command::Solve) => Some(Suite::Solve),
        Some(Command::Convergence) => Some(Suite::Convergence),
        Some(Command::Verify { identity: Identity::Ibp }) => Some(Suite::Ibp),
        Some(Command::Verify { identity: Identity::Green }) => Some(Suite::Green),
        Some(Command::Verify { identity: Identity::Ex66 }) => Some(Suite::Ex66),
    };
    let k = cli.keys;
    let overrides = Overrides {
        symbol: k.symbol,
        n: k.n,
        points: k.points,
        box_half_length: k.half_length,
        a: k.a,
        suite: suite.map(|s| vec![s]),
        output_dir: k.output_dir.clone(),
        seed: k.seed,
        timing: k.no_timing.then_some(false),
    };
    let config = match &cli.config {
        Some(path) => RunConfig::load(path).map(|mut c| {
            c.apply_env();
            c.apply(&overrides);
            c
        }),
        None => RunConfig::from_overrides(&overrides).map(|mut c| {
            c.apply_env();
            if let Some(dir) = k.output_dir {
                c.output_dir = dir;
            }
            c
        }),
    };
    let result = config.and_then(|c| run(&c));
    match result {
        Ok(report) => {
            for c in &report.criteria {
                println!("{c}");
            }
            ExitCode::from(report.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(error_exit_code(&e) as u8)
        }
    }
}
