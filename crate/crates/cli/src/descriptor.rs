use std::path::{Path, PathBuf};

use heavytail::data_io::{load_losses, Column, LoadOptions};
use heavytail::dependence::CopulaSpec;
use heavytail::dominance::{ConcentratedArm, CountLaw, WeightLaw};
use heavytail::equilibrium::{ExternalMarketSpec, InternalMarketSpec};
use heavytail::portfolio::PositionProblem;
use heavytail::LossDistribution;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[clap(rename_all = "snake_case")]
pub enum Kind {
    Dominance,
    Truncated,
    Collective,
    Portfolio,
    Superadd,
    EquilibriumInternal,
    EquilibriumExternal,
    EquilibriumEs,
    Hill,
    EmpiricalCompare,
}

impl Kind {
    #[cfg(test)]
    pub const ALL: [Kind; 10] = [
        Kind::Dominance,
        Kind::Truncated,
        Kind::Collective,
        Kind::Portfolio,
        Kind::Superadd,
        Kind::EquilibriumInternal,
        Kind::EquilibriumExternal,
        Kind::EquilibriumEs,
        Kind::Hill,
        Kind::EmpiricalCompare,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Kind::Dominance => "dominance",
            Kind::Truncated => "truncated",
            Kind::Collective => "collective",
            Kind::Portfolio => "portfolio",
            Kind::Superadd => "superadd",
            Kind::EquilibriumInternal => "equilibrium_internal",
            Kind::EquilibriumExternal => "equilibrium_external",
            Kind::EquilibriumEs => "equilibrium_es",
            Kind::Hill => "hill",
            Kind::EmpiricalCompare => "empirical_compare",
        }
    }

    /// The subcommand that runs this kind.
    pub fn subcommand(self) -> &'static str {
        match self {
            Kind::EquilibriumInternal | Kind::EquilibriumExternal | Kind::EquilibriumEs => "equilibrium",
            Kind::EmpiricalCompare => "empirical",
            k => k.as_str(),
        }
    }
}

pub const DEFAULT_N_MC: usize = 1_000_000;

/// One experiment: what to run, its parameters, and where to write.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Descriptor {
    pub kind: Kind,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_mc: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<String>,
    pub parameters: Value,
}

impl Descriptor {
    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let doc: Value = serde_json::from_str(text).map_err(|e| CliError::Validation(format!("descriptor: {e}")))?;
        crate::examples::validate(&doc)?;
        serde_json::from_value(doc).map_err(|e| CliError::Validation(format!("descriptor: {e}")))
    }

    pub fn params<T: for<'de> Deserialize<'de>>(&self) -> Result<T, CliError> {
        serde_json::from_value(self.parameters.clone())
            .map_err(|e| CliError::Validation(format!("{} parameters: {e}", self.kind.as_str())))
    }
}

/// Loss data given inline or read from a CSV file. Relative paths are
/// resolved against the descriptor's directory.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum DataSource {
    Inline {
        values: Vec<f64>,
    },
    File {
        path: PathBuf,
        column: Column,
        #[serde(default)]
        options: LoadOptions,
    },
}

impl DataSource {
    pub fn load(&self, base: &Path) -> Result<Vec<f64>, CliError> {
        match self {
            DataSource::Inline { values } => Ok(values.clone()),
            DataSource::File { path, column, options } => {
                let full = if path.is_absolute() { path.clone() } else { base.join(path) };
                Ok(load_losses(full, column, options)?.values)
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DominanceParams {
    pub marginal: LossDistribution,
    /// Use the sum of this many iid copies of `marginal` as the marginal.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub convolve: Option<usize>,
    pub copula: CopulaSpec,
    pub theta: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<f64>>,
    #[serde(default)]
    pub arm: ConcentratedArm,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruncatedParams {
    pub marginal: LossDistribution,
    pub copula: CopulaSpec,
    pub theta: Vec<f64>,
    pub caps: Vec<f64>,
    pub grid: Vec<f64>,
    #[serde(default)]
    pub var_levels: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CollectiveParams {
    pub marginal: LossDistribution,
    pub weight_law: WeightLaw,
    pub count_law: CountLaw,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PortfolioParams {
    pub problem: PositionProblem,
    /// Also evaluate this exposure vector.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evaluate: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuperaddParams {
    pub losses: Vec<LossDistribution>,
    /// Defaults to uniform weights.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<Vec<f64>>,
    pub p_grid: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InternalParams {
    pub market: InternalMarketSpec,
    /// Candidate to validate; defaults to the lowest admissible price with
    /// the identity allocation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prices: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub allocation: Option<Vec<Vec<f64>>>,
}

fn default_best_response_points() -> usize {
    2001
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExternalParams {
    pub market: ExternalMarketSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default = "default_best_response_points")]
    pub best_response_points: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EsParams {
    pub exposures: Vec<f64>,
    pub marginal: LossDistribution,
    pub q: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HillParams {
    pub data: DataSource,
    /// A single `k`; defaults to the top 5% when no range is given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_min: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_max: Option<usize>,
}

fn default_n_out() -> usize {
    10_000
}

fn default_n_boot() -> usize {
    heavytail::dominance::DEFAULT_BOOTSTRAP
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmpiricalParams {
    pub first: DataSource,
    pub second: DataSource,
    #[serde(default = "default_n_out")]
    pub n_out: usize,
    #[serde(default = "default_n_boot")]
    pub n_boot: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<f64>>,
}
