//! `hamsim`: experiment harness for the sparse simulation laboratory.

mod commands;
mod config;
mod output;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "hamsim", version, about = "Sparse Hamiltonian simulation experiments")]
pub struct Cli {
    /// Directory for results documents and CSV tables.
    #[arg(long, global = true, env = "HAMSIM_OUT_DIR", default_value = "hamsim-out")]
    pub out_dir: PathBuf,

    /// Settings file (TOML); flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Master seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Suppress the summary on stdout.
    #[arg(long, short, global = true)]
    pub quiet: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a random sparse instance file and its metadata.
    Gen {
        #[command(flatten)]
        inst: InstanceArgs,
        /// Instance file to write (default: <out-dir>/instance.txt).
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Norms of an instance and the slack of every link in the norm chain.
    Norms {
        #[command(flatten)]
        inst: InstanceArgs,
    },
    /// Build and verify the block-encoding, optionally amplitude-multiplied.
    Encode {
        #[command(flatten)]
        inst: InstanceArgs,
        /// Entry bound used by the encoding (default: largest entry).
        #[arg(long)]
        lambda_max: Option<f64>,
        /// Amplitude multiplication factor C.
        #[arg(long)]
        factor: Option<f64>,
        /// Per-column relative error injected by the multiplication.
        #[arg(long)]
        delta: Option<f64>,
    },
    /// Run the fixed-point-to-amplitude gadget over a format.
    Gadget {
        /// Format as p,m,n.
        #[arg(long)]
        fmt: Option<String>,
        #[arg(long)]
        lambda_max: Option<f64>,
        /// Values sampled when the format is too wide for an exhaustive run.
        #[arg(long)]
        samples: Option<usize>,
    },
    /// One truncated Dyson slice on a random interaction frame.
    Dyson {
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long)]
        tau: Option<f64>,
        #[arg(long)]
        eps: Option<f64>,
        /// Norm of the perturbation B.
        #[arg(long)]
        b_norm: Option<f64>,
        #[arg(long)]
        c_m: Option<f64>,
    },
    /// End-to-end sparse simulation with measured error and query ledger.
    Simulate {
        #[command(flatten)]
        inst: InstanceArgs,
        #[arg(long)]
        t: Option<f64>,
        #[arg(long)]
        eps: Option<f64>,
        /// Number of thresholded terms (default: chosen from d).
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        c_am: Option<f64>,
        /// Keep the schedule's one-norm bounds instead of measured ones.
        #[arg(long)]
        no_tighten: bool,
    },
    /// Simulation sweep over d, t or eps on two-scale instances.
    Sweep {
        #[arg(long, value_enum)]
        param: Option<SweepParam>,
        /// Comma-separated parameter values.
        #[arg(long)]
        values: Option<String>,
        #[arg(long)]
        d: Option<usize>,
        #[arg(long)]
        t: Option<f64>,
        #[arg(long)]
        eps: Option<f64>,
        /// Also write sweep.svg.
        #[arg(long)]
        svg: bool,
    },
    /// Transfer dynamics of the PARITY of ORs construction.
    Lowerbound {
        /// Number of OR blocks.
        #[arg(long)]
        n: Option<usize>,
        /// Bits per OR block.
        #[arg(long)]
        m: Option<usize>,
        /// Width of the complete-graph register.
        #[arg(long)]
        s: Option<usize>,
        /// Input as comma-separated bit strings, one per block (default: random promise input).
        #[arg(long)]
        x: Option<String>,
        /// Also write the Hamiltonian as an instance file.
        #[arg(long)]
        export: Option<PathBuf>,
    },
    /// Dilate a random unitary into a Hermitian with H^2 = I.
    Dilate {
        #[arg(long)]
        dim: Option<usize>,
    },
    /// Evaluate the query-cost formulas.
    Cost {
        #[arg(long)]
        t: Option<f64>,
        #[arg(long)]
        d: Option<f64>,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        lambda12: Option<f64>,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        kappa: Option<f64>,
        /// Sweep one parameter at the optimal m.
        #[arg(long, value_enum)]
        sweep: Option<SweepParam>,
        #[arg(long)]
        values: Option<String>,
        #[command(flatten)]
        constants: ConstantArgs,
    },
    /// Run a seeded regression suite (or `all`).
    Regress {
        suite: String,
        /// Reduced instance counts.
        #[arg(long)]
        quick: bool,
    },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum SweepParam {
    D,
    T,
    Eps,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Profile {
    Constant,
    Uniform,
    LogUniform,
    TwoScale,
}

#[derive(Args, Debug, Default)]
pub struct InstanceArgs {
    /// Read the instance from a file instead of generating one.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Dimension N (power of two).
    #[arg(long)]
    pub dim: Option<usize>,
    /// Sparsity d.
    #[arg(long)]
    pub d: Option<usize>,
    /// Largest generated entry magnitude.
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long, value_enum)]
    pub profile: Option<Profile>,
    /// Decades spanned by the log-uniform profile.
    #[arg(long)]
    pub decades: Option<f64>,
    /// Small magnitude of the two-scale profile.
    #[arg(long)]
    pub small: Option<f64>,
    /// Fixed-point format as p,m,n.
    #[arg(long)]
    pub fmt: Option<String>,
}

#[derive(Args, Debug, Default)]
pub struct ConstantArgs {
    #[arg(long)]
    pub c_single: Option<f64>,
    #[arg(long)]
    pub c_interaction: Option<f64>,
    #[arg(long)]
    pub c_recursion: Option<f64>,
    #[arg(long)]
    pub c_sparse: Option<f64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    commands::run(cli)
}
