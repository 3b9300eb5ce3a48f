//! Risk-sharing market equilibria.

mod cost;
mod external;
mod finite_mean;
mod internal;

use serde::{Deserialize, Serialize};

pub use cost::{CostFunction, CONVEXITY_GRID};
pub use external::{
    best_response_check, external_equilibrium, multiplicity_condition_holds, BestResponseReport, ExternalMarketSpec,
    DEFAULT_TOL_SCALE,
};
pub use finite_mean::{es_finite_mean_equilibrium, normal_rvar_two_agent_check, rvar_excess, EsEquilibrium, RvarCheck};
pub use internal::{
    identity_allocation, internal_equilibrium, internal_equilibrium_price_interval, validate_internal_equilibrium,
    InternalDiagnostics, InternalMarketSpec, InternalOutcome, PriceInterval,
};

use crate::dist::LossDistribution;
use crate::error::{Error, Result};
use crate::ext_real::Finite;
use crate::risk::RiskMeasureSpec;

/// `ρ(X)` given directly or computed from a measure and a loss law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RiskValue {
    Value(f64),
    Measure { rho: RiskMeasureSpec, loss: LossDistribution },
}

impl RiskValue {
    pub fn resolve(&self) -> Result<f64> {
        match self {
            RiskValue::Value(v) if v.is_finite() => Ok(*v),
            RiskValue::Value(_) => Err(Error::param("risk_value", "must be finite")),
            RiskValue::Measure { rho, loss } => match rho.evaluate(loss)? {
                Finite(v) => Ok(v),
                _ => Err(Error::param("risk_value", "the risk measure is infinite for this loss")),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MarketCase {
    /// Internal agents pass every loss to the external agents.
    TransferAll,
    /// Each loss is shared between internal and external agents.
    PartialShare,
    /// No transfer takes place.
    NoTrade,
    /// Internal agents keep or swap whole positions.
    InternalExchange,
}

impl MarketCase {
    pub fn as_str(self) -> &'static str {
        match self {
            MarketCase::TransferAll => "transfer_all",
            MarketCase::PartialShare => "partial_share",
            MarketCase::NoTrade => "no_trade",
            MarketCase::InternalExchange => "internal_exchange",
        }
    }
}

/// `amount` units of loss `X_loss` (zero-based index).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Holding {
    pub loss: usize,
    pub amount: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumResult {
    pub case: MarketCase,
    /// The common price per unit of loss.
    pub price: f64,
    pub prices: Vec<f64>,
    /// All equilibrium prices when there is more than one.
    pub price_interval: Option<PriceInterval>,
    /// One concentrated holding per internal agent.
    pub internal: Vec<Holding>,
    /// One concentrated holding per external agent.
    pub external: Vec<Holding>,
    /// Largest per-loss `|Σ holdings − initial exposure|`.
    pub clearance_residual: f64,
    /// `|L_E(u*) − L_I(−k·u*)|` when a root was solved for.
    pub root_residual: Option<f64>,
    pub notes: Vec<String>,
}
