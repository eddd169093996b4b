use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use std::path::PathBuf;
use std::sync::LazyLock;

/// `--version` text: front-end, library and file-schema versions.
pub static VERSION_TEXT: LazyLock<String> = LazyLock::new(|| {
    format!(
        "{} (library {}, schema {})",
        env!("CARGO_PKG_VERSION"),
        symdesk_core::VERSION,
        crate::SCHEMA_VERSION
    )
});

#[derive(Debug, Parser)]
#[command(name = "symdesk", version = VERSION_TEXT.as_str(), about = "Numerical checks for Lie path groups, pendulum monodromy, Duistermaat-Heckman densities and flat-torus spectra")]
pub struct Cli {
    /// Output directory.
    #[arg(long, global = true, env = "SYMDESK_OUT", default_value = "symdesk-out")]
    pub out: PathBuf,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Group laws of the path-group model on random paths.
    Lie3(Lie3Args),
    /// Spherical pendulum: periods, monodromy, joint spectrum, quantum cells.
    Pendulum {
        #[command(subcommand)]
        cmd: PendulumCmd,
    },
    /// Duistermaat-Heckman localization.
    Dh {
        #[command(subcommand)]
        cmd: DhCmd,
    },
    /// Flat-torus spectra and wave traces.
    Spectra {
        #[command(subcommand)]
        cmd: SpectraCmd,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyKind {
    /// `s · sin(2πt) e₁`, inside the identity class.
    ZeroMean,
    /// Constant paths `s e₁`, leaving the identity class.
    Drift,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Lie3Args {
    /// Standard algebra: so3, sl2, heisenberg3, affine1 or abelian(n).
    #[arg(long)]
    pub algebra: Option<String>,
    /// Structure-constant JSON file instead of a standard algebra.
    #[arg(long)]
    pub constants: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    pub steps: usize,
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
    #[arg(long)]
    pub seed: u64,
    /// Also measure the inverse-law defect at half the steps.
    #[arg(long)]
    pub convergence: bool,
    /// Write the first random pair and its product as path CSVs.
    #[arg(long)]
    pub export_paths: bool,
    /// Evaluate the homotopy functional of a family directory.
    #[arg(long)]
    pub family: Option<PathBuf>,
    /// Write a demonstration family to `family/` in the output directory.
    #[arg(long, value_enum)]
    pub emit_family: Option<FamilyKind>,
    #[arg(long, default_value_t = 16)]
    pub family_s: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub family_tol: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct QuadArgs {
    /// Gauss-Legendre nodes per panel.
    #[arg(long, default_value_t = 200)]
    pub nodes: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct LoopArgs {
    #[arg(long, default_value_t = 0.5)]
    pub radius: f64,
    #[arg(long, default_value_t = 256)]
    pub loop_steps: usize,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub center_h: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub center_l: f64,
    #[arg(long, default_value_t = 1)]
    pub turns: usize,
    /// Traverse clockwise.
    #[arg(long)]
    pub reverse: bool,
}

#[derive(Debug, Clone, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PendulumCmd {
    /// Periods on a grid of values, optionally against direct integration.
    Periods {
        #[arg(long, value_delimiter = ',', default_values_t = [0.2, 2.0], allow_hyphen_values = true)]
        h_range: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_values_t = [0.1, 0.5], allow_hyphen_values = true)]
        l_range: Vec<f64>,
        #[arg(long, default_value_t = 5)]
        grid: usize,
        /// Integrate the flow for every grid value.
        #[arg(long)]
        flow: bool,
        #[arg(long, default_value_t = 1e-4)]
        flow_dt: f64,
        #[command(flatten)]
        quad: QuadArgs,
    },
    /// Monodromy of the period lattice along a circle of values.
    Monodromy {
        #[command(flatten)]
        lp: LoopArgs,
        #[command(flatten)]
        quad: QuadArgs,
    },
    /// Bohr-Sommerfeld joint spectrum in a window.
    Spectrum {
        #[arg(long, default_value_t = 0.05)]
        hbar: f64,
        #[arg(long, value_delimiter = ',', default_values_t = [0.2, 1.8], allow_hyphen_values = true)]
        h_range: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_values_t = [-0.8, 0.8], allow_hyphen_values = true)]
        l_range: Vec<f64>,
        #[command(flatten)]
        quad: QuadArgs,
    },
    /// Transport of a joint-spectrum cell along a loop.
    Cells {
        #[arg(long, default_value_t = 0.05)]
        hbar: f64,
        #[command(flatten)]
        lp: LoopArgs,
        #[command(flatten)]
        quad: QuadArgs,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum OracleKind {
    None,
    /// Monte Carlo histogram on the round sphere.
    Mc,
    /// Exact slices of a Delzant polytope.
    Toric,
}

#[derive(Debug, Clone, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DhCmd {
    /// Fixed-point sum against the density transform (and an oracle).
    Check {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, value_delimiter = ',', default_values_t = [0.1, 0.5, 1.0, 2.0, 5.0])]
        t: Vec<f64>,
        #[arg(long, value_enum, default_value_t = OracleKind::None)]
        oracle: OracleKind,
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 40)]
        bins: usize,
        /// Use only the height of each sample rather than all six axis images.
        #[arg(long)]
        plain_estimator: bool,
        /// Polytope JSON for the toric oracle.
        #[arg(long)]
        polytope: Option<PathBuf>,
        /// Circle direction inside the torus, e.g. `1,2`.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        xi: Vec<i64>,
        /// Points of the density/oracle comparison grid.
        #[arg(long, default_value_t = 1000)]
        grid: usize,
    },
    /// Sample the density on a grid.
    Density {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = 1000)]
        points: usize,
        /// Sampling range; defaults to the image padded by 10%.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        range: Vec<f64>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TorusPreset {
    /// `R² / 2πZ²`.
    Square,
    /// `R² / (2πZ × 4πZ)`.
    Rectangular,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TorusArgs {
    /// Torus JSON file; overrides --preset.
    #[arg(long)]
    pub torus: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = TorusPreset::Square)]
    pub preset: TorusPreset,
    /// Spectral cutoff.
    #[arg(long, default_value_t = 200.0)]
    pub cutoff: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TraceArgs {
    #[arg(long, default_value_t = 0.0)]
    pub t_start: f64,
    #[arg(long, default_value_t = 18.5)]
    pub t_stop: f64,
    #[arg(long, default_value_t = 0.0025)]
    pub dt: f64,
    #[arg(long, default_value_t = 0.05)]
    pub epsilon: f64,
}

#[derive(Debug, Clone, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpectraCmd {
    /// Eigenvalues with multiplicities up to the cutoff.
    Enumerate {
        #[command(flatten)]
        torus: TorusArgs,
    },
    /// Counting function against the leading Weyl term.
    Weyl {
        #[command(flatten)]
        torus: TorusArgs,
        #[arg(long, value_delimiter = ',', default_values_t = [200.0])]
        lambda: Vec<f64>,
        #[arg(long, default_value_t = 1e-3)]
        tol: f64,
    },
    /// Gaussian-smoothed spectral sums against the leading term.
    Smooth {
        #[command(flatten)]
        torus: TorusArgs,
        #[arg(long, value_delimiter = ',', default_values_t = [100.0, 150.0])]
        lambda: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_values_t = [0.5, 1.0, 2.0])]
        sigma: Vec<f64>,
        #[arg(long, default_value_t = 0.02)]
        tol: f64,
    },
    /// Regularized wave trace on a grid.
    Trace {
        #[command(flatten)]
        torus: TorusArgs,
        #[command(flatten)]
        trace: TraceArgs,
    },
    /// Largest wave-trace peaks matched to lattice lengths.
    Peaks {
        #[command(flatten)]
        torus: TorusArgs,
        #[command(flatten)]
        trace: TraceArgs,
        #[arg(long, default_value_t = 5)]
        k: usize,
        #[arg(long, default_value_t = 1.0)]
        peak_t_min: f64,
        #[arg(long, default_value_t = 0.02)]
        match_tol: f64,
        /// Largest allowed local maximum before the first length, relative
        /// to the smallest detected peak.
        #[arg(long, default_value_t = 0.2)]
        spurious_ratio: f64,
    },
}
