use serde::{Deserialize, Serialize};

use super::{CostFunction, EquilibriumResult, Holding, MarketCase, RiskValue};
use crate::error::{Error, Result};

/// `n` agents, agent `i` starting with `a_i` units of loss `X_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InternalMarketSpec {
    pub exposures: Vec<f64>,
    pub risk_values: Vec<RiskValue>,
    pub costs: Vec<CostFunction>,
}

impl InternalMarketSpec {
    pub fn n(&self) -> usize {
        self.exposures.len()
    }

    /// Checks the spec and resolves every `ρ_i(X)`.
    pub fn resolve(&self) -> Result<Vec<f64>> {
        let n = self.n();
        if n == 0 {
            return Err(Error::param("exposures", "need at least one agent"));
        }
        if self.risk_values.len() != n || self.costs.len() != n {
            return Err(Error::param("market", "exposures, risk_values and costs differ in length"));
        }
        if self.exposures.iter().any(|a| !(*a > 0.0 && a.is_finite())) {
            return Err(Error::param("exposures", "must be positive"));
        }
        for c in &self.costs {
            c.validate()?;
        }
        self.risk_values.iter().map(RiskValue::resolve).collect()
    }
}

/// A closed price interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriceInterval {
    pub lo: f64,
    pub hi: f64,
}

impl PriceInterval {
    pub fn contains(&self, p: f64) -> bool {
        self.lo <= p && p <= self.hi
    }

    pub fn is_single_point(&self) -> bool {
        self.lo == self.hi
    }
}

/// Prices `p ≥ 0` with `c'_{i−}(0) ≤ p − ρ_i(X) ≤ c'_{i+}(0)` for every agent.
/// Any such `p` makes keeping the initial exposures an equilibrium for
/// distortion risk measures. `None` when the interval is empty.
pub fn internal_equilibrium_price_interval(spec: &InternalMarketSpec) -> Result<Option<PriceInterval>> {
    let rho = spec.resolve()?;
    let mut lo: f64 = 0.0;
    let mut hi = f64::INFINITY;
    for (r, c) in rho.iter().zip(&spec.costs) {
        lo = lo.max(r + c.left_derivative(0.0));
        hi = hi.min(r + c.right_derivative(0.0));
    }
    Ok((lo <= hi).then_some(PriceInterval { lo, hi }))
}

/// Outcome of the sufficient condition: an equilibrium, or "unknown" when
/// the interval is empty (other equilibria are not ruled out).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InternalOutcome {
    pub status: String,
    pub interval: Option<PriceInterval>,
    pub equilibrium: Option<EquilibriumResult>,
}

/// The equilibrium at the lowest admissible price with every agent keeping
/// its own loss. Any permutation of the exposures is equally valid.
pub fn internal_equilibrium(spec: &InternalMarketSpec) -> Result<InternalOutcome> {
    let interval = internal_equilibrium_price_interval(spec)?;
    let Some(iv) = interval else {
        return Ok(InternalOutcome {
            status: "unknown".into(),
            interval: None,
            equilibrium: None,
        });
    };
    let n = spec.n();
    let internal = spec
        .exposures
        .iter()
        .enumerate()
        .map(|(i, &a)| Holding { loss: i, amount: a })
        .collect();
    Ok(InternalOutcome {
        status: "equilibrium".into(),
        interval,
        equilibrium: Some(EquilibriumResult {
            case: MarketCase::InternalExchange,
            price: iv.lo,
            prices: vec![iv.lo; n],
            price_interval: Some(iv),
            internal,
            external: vec![],
            clearance_residual: 0.0,
            root_residual: None,
            notes: vec!["identity allocation returned; every permutation of the initial exposures is also an equilibrium allocation".into()],
        }),
    })
}

/// Pass or fail of each necessary condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InternalDiagnostics {
    pub constant_price: bool,
    pub permutation: bool,
    /// Per agent: `min_j c'_{i−}(a_j−a_i) ≤ p − ρ_i(X) ≤ max_j c'_{i+}(a_j−a_i)`.
    pub price_condition: Vec<bool>,
    pub clearance: bool,
    pub clearance_residual: f64,
}

impl InternalDiagnostics {
    pub fn all_pass(&self) -> bool {
        self.constant_price && self.permutation && self.clearance && self.price_condition.iter().all(|&b| b)
    }
}

const REL_TOL: f64 = 1e-12;

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= REL_TOL * (1.0 + a.abs().max(b.abs()))
}

/// Checks a candidate price vector and allocation (`allocation[i]` is agent
/// `i`'s exposure vector) against the necessary conditions.
pub fn validate_internal_equilibrium(
    spec: &InternalMarketSpec,
    prices: &[f64],
    allocation: &[Vec<f64>],
) -> Result<InternalDiagnostics> {
    let rho = spec.resolve()?;
    let n = spec.n();
    if prices.len() != n || allocation.len() != n || allocation.iter().any(|w| w.len() != n) {
        return Err(Error::param("allocation", format!("need {n} prices and {n} vectors of length {n}")));
    }
    let a = &spec.exposures;
    let constant_price = prices.iter().all(|&p| close(p, prices[0]));

    // each allocation vector must equal a_j e_j for a distinct j
    let mut used = vec![false; n];
    let permutation = allocation.iter().all(|w| {
        let support: Vec<usize> = (0..n).filter(|&s| w[s] != 0.0).collect();
        match support.as_slice() {
            [j] if !used[*j] && close(w[*j], a[*j]) => {
                used[*j] = true;
                true
            }
            _ => false,
        }
    });

    let price_condition = (0..n)
        .map(|i| {
            let gap = prices[i] - rho[i];
            let c = &spec.costs[i];
            let hi = (0..n).map(|j| c.right_derivative(a[j] - a[i])).fold(f64::NEG_INFINITY, f64::max);
            let lo = (0..n).map(|j| c.left_derivative(a[j] - a[i])).fold(f64::INFINITY, f64::min);
            let tol = REL_TOL * (1.0 + prices[i].abs() + rho[i].abs());
            gap <= hi + tol && gap >= lo - tol
        })
        .collect();

    let clearance_residual = (0..n)
        .map(|s| (allocation.iter().map(|w| w[s]).sum::<f64>() - a[s]).abs())
        .fold(0.0, f64::max);
    Ok(InternalDiagnostics {
        constant_price,
        permutation,
        price_condition,
        clearance: clearance_residual <= REL_TOL * (1.0 + a.iter().fold(0.0, |m: f64, x| m.max(*x))),
        clearance_residual,
    })
}

/// Agent `i` holds `a_i e_i`.
pub fn identity_allocation(exposures: &[f64]) -> Vec<Vec<f64>> {
    let n = exposures.len();
    (0..n)
        .map(|i| {
            let mut w = vec![0.0; n];
            w[i] = exposures[i];
            w
        })
        .collect()
}
