use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Parser, Debug)]
#[command(name = "rqsvt", version, about = "Randomized QSVT estimators and resource models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// One run. Serialized into every report as the config echo.
#[derive(Subcommand, Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "subcommand", rename_all = "kebab-case")]
pub enum Command {
    /// Estimate an observable after a polynomial or time evolution of H.
    Estimate(EstimateArgs),
    /// Ground-state observable from a guess state via a filtered GQSP circuit.
    Groundstate(GroundstateArgs),
    /// Spectral gap by exact diagonalization over a range of sizes.
    Gap(GapArgs),
    /// Nested-commutator prefactor of the hybrid chain.
    Prefactor(PrefactorArgs),
    /// Depth-model sweep over n, written as CSV.
    Depthbench(DepthbenchArgs),
    /// Richardson plan for (m, t, s) and extrapolation of a value table.
    ExtrapolateDemo(ExtrapolateArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Estimate(_) => "estimate",
            Command::Groundstate(_) => "groundstate",
            Command::Gap(_) => "gap",
            Command::Prefactor(_) => "prefactor",
            Command::Depthbench(_) => "depthbench",
            Command::ExtrapolateDemo(_) => "extrapolate-demo",
        }
    }

    pub fn out(&self) -> Option<&PathBuf> {
        match self {
            Command::Estimate(a) => a.out.as_ref(),
            Command::Groundstate(a) => a.out.as_ref(),
            Command::Gap(a) => a.out.as_ref(),
            Command::Prefactor(a) => a.out.as_ref(),
            Command::Depthbench(a) => a.out.as_ref(),
            Command::ExtrapolateDemo(a) => a.out.as_ref(),
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    TfimLong,
    TfimHybrid,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryArg {
    Open,
    Periodic,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelArgs {
    /// Hamiltonian file: a `qubits <n>` header, then `<coeff> <word>` lines
    #[arg(long, conflicts_with = "model")]
    pub hamiltonian: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub model: Option<ModelKind>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, default_value_t = 3.0)]
    pub h: f64,
    #[arg(long = "J", default_value_t = 1.0)]
    #[serde(rename = "J")]
    pub j: f64,
    #[arg(long, default_value_t = 0.1)]
    pub g: f64,
    #[arg(long, default_value_t = 3.0)]
    pub alpha: f64,
    /// Only used by tfim-long
    #[arg(long, value_enum, default_value_t = BoundaryArg::Open)]
    pub boundary: BoundaryArg,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimateMode {
    /// Algorithm 2 on a dense polynomial (`--poly`)
    Alg2,
    /// Interleaved qDRIFT with Richardson extrapolation on e^{-iHt}
    Alg3,
    /// As alg3, with exact channel averages instead of samples
    Alg3Exact,
    /// GQSP on a Laurent polynomial of e^{iH} (`--laurent`)
    Gqsp,
    GqspExact,
}

impl EstimateMode {
    pub fn stochastic(self) -> bool {
        matches!(self, EstimateMode::Alg2 | EstimateMode::Alg3 | EstimateMode::Gqsp)
    }
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_enum)]
    pub mode: EstimateMode,
    #[arg(long, default_value_t = 0.05)]
    pub eps: f64,
    #[arg(long, default_value_t = 0.05)]
    pub delta: f64,
    #[arg(long)]
    pub seed: Option<u64>,
    /// `zero`, `plus`, or a bitstring with one character per qubit
    #[arg(long, default_value = "zero")]
    pub state: String,
    /// Pauli word; defaults to Z on the first qubit
    #[arg(long)]
    pub observable: Option<String>,
    /// Dense polynomial file, `<power> <re> <im>` per line
    #[arg(long)]
    pub poly: Option<PathBuf>,
    /// Laurent polynomial file, `<power> <re> <im>` per line
    #[arg(long)]
    pub laurent: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    pub time: f64,
    #[arg(long, default_value_t = 2)]
    pub segments: usize,
    #[arg(long, default_value_t = 50_000_000)]
    pub max_shots: u64,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormMode {
    Amplified,
    Ratio,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroundstateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 0.05)]
    pub eps: f64,
    /// Squared overlap of the guess with the ground state; the rest sits on the first excited state
    #[arg(long, default_value_t = 1.0)]
    pub overlap: f64,
    /// Overlap lower bound; defaults to sqrt(overlap)
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Defaults to the midpoint of the two lowest eigenvalues
    #[arg(long)]
    pub mu: Option<f64>,
    /// Defaults to the measured gap
    #[arg(long = "Delta")]
    #[serde(rename = "Delta")]
    pub delta: Option<f64>,
    #[arg(long)]
    pub observable: Option<String>,
    #[arg(long, value_enum, default_value_t = NormMode::Amplified)]
    pub mode: NormMode,
    /// Exact channel averages instead of samples
    #[arg(long)]
    pub exact: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Depth budget for amplified mode
    #[arg(long, default_value_t = 10_000_000)]
    pub max_gates: u64,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GapArgs {
    #[arg(long, value_enum)]
    pub model: ModelKind,
    /// Defaults to the smallest size the model allows
    #[arg(long)]
    pub n_min: Option<usize>,
    #[arg(long)]
    pub n_max: usize,
    #[arg(long, default_value_t = 3.0)]
    pub h: f64,
    #[arg(long = "J", default_value_t = 1.0)]
    #[serde(rename = "J")]
    pub j: f64,
    #[arg(long, default_value_t = 0.1)]
    pub g: f64,
    #[arg(long, default_value_t = 3.0)]
    pub alpha: f64,
    /// Only used by tfim-long
    #[arg(long, value_enum, default_value_t = BoundaryArg::Periodic)]
    pub boundary: BoundaryArg,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PrefactorSearch {
    Auto,
    Exhaustive,
    Pruned,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrefactorArgs {
    #[arg(long, default_value_t = 4)]
    pub n_min: usize,
    #[arg(long, default_value_t = 8)]
    pub n_max: usize,
    #[arg(long, default_value_t = 3.0)]
    pub h: f64,
    #[arg(long = "J", default_value_t = 1.0)]
    #[serde(rename = "J")]
    pub j: f64,
    #[arg(long, default_value_t = 0.1)]
    pub g: f64,
    #[arg(long, default_value_t = 3.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    #[arg(long, value_enum, default_value_t = PrefactorSearch::Auto)]
    pub search: PrefactorSearch,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DepthbenchArgs {
    /// Method tags, comma separated; all methods when omitted
    #[arg(long, value_delimiter = ',')]
    pub method: Vec<String>,
    /// Sweep runs over powers of two in [n-min, n-max]
    #[arg(long, default_value_t = 64)]
    pub n_min: usize,
    #[arg(long, default_value_t = 4096)]
    pub n_max: usize,
    #[arg(long, default_value_t = 3.0)]
    pub h: f64,
    #[arg(long = "J", default_value_t = 1.0)]
    #[serde(rename = "J")]
    pub j: f64,
    #[arg(long, default_value_t = 0.1)]
    pub g: f64,
    #[arg(long, default_value_t = 3.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.1)]
    pub gamma: f64,
    #[arg(long, default_value_t = 0.01)]
    pub eps: f64,
    #[arg(long, default_value_t = 1)]
    pub k: u32,
    /// Commutator prefactor per site; measured at n = 16 when omitted
    #[arg(long)]
    pub alpha_per_site: Option<f64>,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtrapolateArgs {
    #[arg(long)]
    pub m: usize,
    #[arg(long, default_value_t = 1.0)]
    pub t: f64,
    #[arg(long)]
    pub s: f64,
    /// CSV with header `s,value`, one row per plan node
    #[arg(long, conflicts_with = "coeffs")]
    pub table: Option<PathBuf>,
    /// Coefficients a_0,a_1,... of f(s) = sum a_k s^k, evaluated at the nodes
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub coeffs: Vec<f64>,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}
