use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "formsys", version, about = "Experiments with systems of integral homogeneous forms")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Count integer zeros in the scaled box.
    Count {
        #[command(flatten)]
        common: Common,
        /// Scale factor `p/q`; repeat for a series.
        #[arg(long = "P", required = true)]
        p: Vec<String>,
    },
    /// Evaluate the exponential sum at a phase vector.
    Expsum {
        #[command(flatten)]
        common: Common,
        /// Comma separated phases: `a/q` or `sqrt(m)`, `-sqrt(m)`.
        #[arg(long)]
        alpha: String,
        #[arg(long = "P", required = true)]
        p: Vec<String>,
        /// Use the f64 phase path instead of exact residues.
        #[arg(long)]
        float: bool,
    },
    /// Rational approximation or pencil certificate; with `--k`, the full dichotomy.
    Weyl {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        alpha: String,
        /// In `(0, 1]`.
        #[arg(long, default_value = "1")]
        theta: String,
        #[arg(long = "P")]
        p: String,
        #[arg(long)]
        k: Option<String>,
        #[arg(long, default_value_t = formsys::weyl::DEFAULT_COLUMN_CAP)]
        column_cap: usize,
    },
    /// Pencil invariants and the hypothesis inequalities.
    Invariants {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        inv: InvariantArgs,
    },
    /// Compare counts with the truncated asymptotic.
    Predict {
        #[command(flatten)]
        common: Common,
        #[arg(long = "P", required = true)]
        p: Vec<String>,
        #[arg(long, default_value_t = 50)]
        qmax: u64,
        #[arg(long, default_value = "8")]
        tmax: String,
        #[arg(long, default_value_t = 16)]
        grid: usize,
        /// Skip the `n - u` check.
        #[arg(long)]
        no_hypothesis: bool,
        #[command(flatten)]
        inv: InvariantArgs,
    },
    /// Run the bundled fixtures.
    Corpus {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// System file: header `n=<int> d=<int> r=<int>`, then one form per line.
    #[arg(long)]
    pub system: Option<PathBuf>,
    /// Box as `lo:hi` for every axis or a comma list of `lo:hi`; default `-1:1`.
    #[arg(long = "box")]
    pub region: Option<String>,
    /// Worker threads; default is the rayon default.
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long, default_value_t = 0x5eed)]
    pub seed: u64,
    /// Bits kept for irrational phases.
    #[arg(long, default_value_t = 128)]
    pub precision_bits: u32,
    /// Write the series data here as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Add wall-clock time to the report (breaks byte-identical output).
    #[arg(long)]
    pub timing: bool,
}

#[derive(Args, Debug, Clone)]
pub struct InvariantArgs {
    #[arg(long, default_value_t = 5)]
    pub b_bound: i64,
    /// Comma separated primes.
    #[arg(long, default_value = "5,7,11,101")]
    pub primes: String,
    /// Samples per prime when enumeration is too large.
    #[arg(long, default_value_t = 20_000_000)]
    pub trials: u64,
    /// Enumerate exactly when `p^n` is at most this.
    #[arg(long, default_value_t = 10_000_000)]
    pub exact_threshold: u64,
    /// Extra random pencil directions for `r > 1`.
    #[arg(long, default_value_t = 4)]
    pub random_pencils: usize,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Count { .. } => "count",
            Command::Expsum { .. } => "expsum",
            Command::Weyl { .. } => "weyl",
            Command::Invariants { .. } => "invariants",
            Command::Predict { .. } => "predict",
            Command::Corpus { .. } => "corpus",
        }
    }

    pub fn common(&self) -> &Common {
        match self {
            Command::Count { common, .. }
            | Command::Expsum { common, .. }
            | Command::Weyl { common, .. }
            | Command::Invariants { common, .. }
            | Command::Predict { common, .. }
            | Command::Corpus { common } => common,
        }
    }
}
