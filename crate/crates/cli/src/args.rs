use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "fraclab", version, about = "Fractional Poisson problems and their transition to the Laplacian")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Global {
    /// Relative quadrature tolerance.
    #[arg(long, global = true)]
    pub rel_tol: Option<f64>,
    /// Absolute quadrature tolerance.
    #[arg(long, global = true)]
    pub abs_tol: Option<f64>,
    /// Sample count for Monte Carlo integration.
    #[arg(long, global = true)]
    pub mc_samples: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Use seeded Monte Carlo where a volume integral supports it.
    #[arg(long, global = true)]
    pub monte_carlo: bool,
    /// Output format; the default depends on the subcommand.
    #[arg(long, global = true, value_enum)]
    pub emit: Option<Format>,
    /// Write to this file instead of stdout.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Normalization constants for a dimension and order.
    Constants {
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long)]
        order: f64,
    },
    /// Pointwise operators at a list of points.
    Eval(EvalArgs),
    /// Green, Poisson and complementary Poisson kernels on a ball.
    Kernels(KernelArgs),
    /// Closed-form torsion function and its s-derivative.
    Torsion {
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, default_value = "ball:1")]
        domain: String,
        /// `a:step:b` or a comma list.
        #[arg(long)]
        orders: String,
        /// Evaluation point, comma separated (default: the centre).
        #[arg(long, allow_hyphen_values = true)]
        at: Option<String>,
    },
    /// The s-derivative of the torsion solution on a radial grid.
    Derivative(DerivativeArgs),
    /// First-order expansion residual near s = 1.
    Transition {
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, default_value = "ball:1")]
        domain: String,
        #[arg(long, default_value = "0.9,0.95,0.99")]
        orders: String,
        #[arg(long, default_value_t = 20)]
        grid: usize,
        /// Also write the per-point table (u_1, v_1) as CSV here.
        #[arg(long)]
        table: Option<PathBuf>,
    },
    /// Operator-norm bounds for the Green operator.
    Bounds {
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, default_value = "ball:1")]
        domain: String,
        #[arg(long)]
        orders: String,
        /// Trapezoid steps for the integral of m_τ.
        #[arg(long, default_value_t = 16)]
        steps: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Op {
    Fraclap,
    Loglap,
    Homega,
    Ws,
    Interchange,
}

/// Input field for `eval`: the torsion function of the requested order,
/// or the indicator of the domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldKind {
    Torsion,
    Indicator,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EvalArgs {
    #[arg(long, value_enum)]
    pub op: Op,
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    #[arg(long, default_value = "ball:1")]
    pub domain: String,
    #[arg(long, default_value_t = 0.5)]
    pub order: f64,
    #[arg(long, value_enum, default_value_t = FieldKind::Torsion)]
    pub field: FieldKind,
    /// CSV file with one point per row, or `-` for stdin.
    #[arg(long)]
    pub points: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Which {
    Green,
    Poisson,
    Comp,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct KernelArgs {
    #[arg(long, value_enum)]
    pub which: Which,
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    #[arg(long, default_value = "ball:1")]
    pub domain: String,
    #[arg(long)]
    pub order: f64,
    /// First argument (interior point).
    #[arg(long, allow_hyphen_values = true)]
    pub x: String,
    /// Second argument; repeat for several rows.
    #[arg(long, required = true, allow_hyphen_values = true)]
    pub z: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Compare {
    Closedform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Theorem,
    Proposition,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DerivativeArgs {
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    #[arg(long, default_value = "ball:1")]
    pub domain: String,
    #[arg(long)]
    pub order: f64,
    /// Add a finite-difference column with this step in s.
    #[arg(long)]
    pub fd: Option<f64>,
    #[arg(long, value_enum)]
    pub compare: Option<Compare>,
    #[arg(long, default_value_t = 20)]
    pub grid: usize,
    /// Sign convention of the source term.
    #[arg(long, value_enum, default_value_t = Sign::Theorem)]
    pub convention: Sign,
    /// Also write the per-point table as CSV here.
    #[arg(long)]
    pub table: Option<PathBuf>,
}
