use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod bench;
mod commands;
mod report;

/// Steiner tree, forest and directed Steiner tree solvers parameterized by
/// the number of Steiner vertices.
#[derive(Parser, Debug)]
#[command(name = "steiner", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Instance file.
    pub instance: PathBuf,
    /// Where to write the solution file (stdout when absent).
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Append a JSON-lines run record to this file (stderr when absent).
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct SolveArgs {
    #[command(flatten)]
    pub common: Common,
    /// Approximation parameter; decimal or fraction.
    #[arg(long, default_value = "1")]
    pub epsilon: String,
    /// Bound on the number of Steiner vertices of the solution compared against.
    #[arg(long, default_value_t = 2)]
    pub p: usize,
    /// Run the exact FPT solver instead of the approximation scheme.
    #[arg(long)]
    pub exact: bool,
    /// Also run the brute-force oracle and report the ratio.
    #[arg(long)]
    pub with_oracle: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Undirected Steiner tree.
    SolveSt(SolveArgs),
    /// Steiner forest.
    SolveSf {
        #[command(flatten)]
        solve: SolveArgs,
        /// Component bound (defaults to the number of pair classes).
        #[arg(long)]
        c: Option<usize>,
    },
    /// Unweighted directed Steiner tree.
    SolveDst(SolveArgs),
    /// Emit the reduced instance and the trace needed by `lift`.
    Reduce {
        instance: PathBuf,
        #[arg(long, default_value = "1")]
        epsilon: String,
        #[arg(long, default_value_t = 2)]
        p: usize,
        #[arg(long)]
        c: Option<usize>,
        /// Reduced instance file.
        #[arg(long)]
        out: PathBuf,
        /// Trace file (JSON).
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Build the subset-union kernel of an undirected instance.
    Kernelize {
        instance: PathBuf,
        #[arg(long)]
        subset_size: usize,
        #[arg(long, default_value = "1")]
        epsilon: String,
        /// `none`, `auto` or an explicit grid step.
        #[arg(long, default_value = "none")]
        rounding: String,
        #[arg(long, default_value_t = 100_000)]
        max_subsets: u64,
        /// Kernel instance file.
        #[arg(long)]
        out: PathBuf,
        /// Provenance sidecar (JSON), usable as a `lift` trace.
        #[arg(long)]
        provenance: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Map a solution of a reduced or kernel instance back to the input.
    Lift {
        /// The original instance.
        instance: PathBuf,
        #[arg(long)]
        trace: PathBuf,
        /// Solution file of the reduced instance.
        #[arg(long)]
        solution: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Exhaustive optimum over edge subsets (at most 22 edges).
    Oracle {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        max_steiner: Option<usize>,
        #[arg(long)]
        max_components: Option<usize>,
    },
    /// Instance generators; each writes the instance and a `.meta.json` sidecar.
    #[command(subcommand)]
    Gen(GenCommand),
    /// Run every applicable solver on a set of instances and print a ratio table.
    Bench(bench::BenchArgs),
}

#[derive(Subcommand, Debug)]
pub enum GenCommand {
    /// Random instance with an optional planted cheap solution.
    Random {
        #[arg(long, default_value_t = 8)]
        n: usize,
        #[arg(long, default_value_t = 4)]
        terminals: usize,
        #[arg(long)]
        extra_edges: Option<usize>,
        #[arg(long, default_value_t = 1)]
        min_weight: i64,
        #[arg(long, default_value_t = 10)]
        max_weight: i64,
        #[arg(long)]
        directed: bool,
        /// Emit a Steiner tree instance rather than a forest.
        #[arg(long)]
        tree: bool,
        #[arg(long)]
        planted_p: Option<usize>,
        #[arg(long, default_value_t = 1)]
        planted_c: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Directed instance encoding dominating set on a random graph.
    DominatingSet {
        #[arg(long, default_value_t = 5)]
        n: usize,
        #[arg(long, default_value_t = 6)]
        m: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Composition of set cover instances into one directed instance.
    Gap {
        #[arg(long, default_value_t = 3)]
        n: usize,
        #[arg(long, default_value_t = 3)]
        m: usize,
        #[arg(long, default_value_t = 1)]
        b: usize,
        #[arg(long, default_value_t = 3)]
        gamma: usize,
        /// Number of composed instances.
        #[arg(long, default_value_t = 2)]
        t: usize,
        /// Use singleton families, whose minimum cover has size n.
        #[arg(long)]
        singletons: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = commands::configure_workers() {
        eprintln!("error: {e}");
        return ExitCode::from(4);
    }
    let result = match cli.command {
        Command::SolveSt(a) => commands::solve_st(&a),
        Command::SolveSf { solve, c } => commands::solve_sf(&solve, c),
        Command::SolveDst(a) => commands::solve_dst(&a),
        Command::Reduce { instance, epsilon, p, c, out, trace, report } => {
            commands::reduce(&instance, &epsilon, p, c, &out, &trace, report.as_deref())
        }
        Command::Kernelize { instance, subset_size, epsilon, rounding, max_subsets, out, provenance, report } => {
            commands::kernelize(&commands::KernelizeArgs {
                instance,
                subset_size,
                epsilon,
                rounding,
                max_subsets,
                out,
                provenance,
                report,
            })
        }
        Command::Lift { instance, trace, solution, output } => commands::lift(&instance, &trace, &solution, output.as_deref()),
        Command::Oracle { common, max_steiner, max_components } => commands::oracle(&common, max_steiner, max_components),
        Command::Gen(g) => commands::generate(g),
        Command::Bench(b) => bench::run(&b),
    };
    match result {
        Ok(status) => ExitCode::from(status.code()),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
