use serde::{Deserialize, Serialize};

use super::{CostFunction, EquilibriumResult, Holding, MarketCase, PriceInterval, RiskValue};
use crate::error::{Error, Result};

/// `n` internal agents each holding `a` units of its own loss, and `k·n`
/// external agents holding nothing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExternalMarketSpec {
    pub n: usize,
    pub k: usize,
    pub a: f64,
    pub rho_internal: RiskValue,
    pub rho_external: RiskValue,
    pub cost_internal: CostFunction,
    pub cost_external: CostFunction,
}

/// Default root tolerance is this times `1 + |p|`.
pub const DEFAULT_TOL_SCALE: f64 = 1e-10;

const MAX_BISECTIONS: usize = 2000;

/// The resolved marginal curves `L_E`, `L_I`.
#[derive(Debug, Clone)]
pub(crate) struct Curves {
    pub rho_i: f64,
    pub rho_e: f64,
    pub cost_i: CostFunction,
    pub cost_e: CostFunction,
}

impl Curves {
    /// `c_E'(b) + ρ_E(X)` for `b ≥ 0`, the right derivative at zero.
    pub fn l_e(&self, b: f64) -> f64 {
        self.cost_e.right_derivative(b) + self.rho_e
    }

    /// `c_I'(b) + ρ_I(X)` for `b < 0`.
    pub fn l_i(&self, b: f64) -> f64 {
        self.cost_i.left_derivative(b) + self.rho_i
    }

    pub fn l_i_minus(&self) -> f64 {
        self.cost_i.left_derivative(0.0) + self.rho_i
    }

    pub fn l_i_plus(&self) -> f64 {
        self.cost_i.right_derivative(0.0) + self.rho_i
    }
}

impl ExternalMarketSpec {
    pub(crate) fn curves(&self) -> Result<Curves> {
        if self.n == 0 || self.k == 0 {
            return Err(Error::param("market", "n and k must be positive"));
        }
        if !(self.a > 0.0 && self.a.is_finite()) {
            return Err(Error::param("a", "must be positive"));
        }
        for (name, c) in [("cost_internal", &self.cost_internal), ("cost_external", &self.cost_external)] {
            c.validate()?;
            if !c.is_strictly_convex_on(self.a) {
                return Err(Error::param(name, "cost must be strictly convex"));
            }
        }
        Ok(Curves {
            rho_i: self.rho_internal.resolve()?,
            rho_e: self.rho_external.resolve()?,
            cost_i: self.cost_internal.clone(),
            cost_e: self.cost_external.clone(),
        })
    }
}

/// Solves the market with external agents.
///
/// Exactly one of three cases applies:
/// - `L_E(a/k) < L_I(−a)`: every loss goes to the external agents at `p = L_E(a/k)`;
/// - `L_E(0) ≥ L_I⁻(0)`: no trade, at any price in `[L_I⁻(0), L_E(0) ∧ L_I⁺(0)]`
///   (the lower end is returned as `price`);
/// - otherwise `u*` solves `L_E(u) = L_I(−k·u)` on `(0, a/k]` by bisection and
///   each loss is split between one internal and `k` external agents.
///
/// `tol_scale` defaults to `1e−10`; the root residual must be at most
/// `tol_scale·(1 + |p|)`.
pub fn external_equilibrium(spec: &ExternalMarketSpec, tol_scale: Option<f64>) -> Result<EquilibriumResult> {
    let c = spec.curves()?;
    let tol_scale = tol_scale.unwrap_or(DEFAULT_TOL_SCALE);
    if !(tol_scale > 0.0) {
        return Err(Error::param("tol", "must be positive"));
    }
    let (n, k, a) = (spec.n, spec.k, spec.a);
    let kf = k as f64;
    let cap = a / kf;

    let transfer_all = c.l_e(cap) < c.l_i(-a);
    let no_trade = c.l_e(0.0) >= c.l_i_minus();
    let partial = !transfer_all && !no_trade;
    assert_eq!(
        usize::from(transfer_all) + usize::from(no_trade) + usize::from(partial),
        1,
        "case predicates overlap"
    );

    let (case, price, u, w, interval, root_residual) = if transfer_all {
        (MarketCase::TransferAll, c.l_e(cap), cap, 0.0, None, None)
    } else if no_trade {
        let iv = PriceInterval {
            lo: c.l_i_minus(),
            hi: c.l_e(0.0).min(c.l_i_plus()),
        };
        (MarketCase::NoTrade, iv.lo, 0.0, a, Some(iv), None)
    } else {
        let g = |u: f64| c.l_e(u) - c.l_i(-kf * u);
        let (mut lo, mut hi) = (0.0_f64, cap);
        for _ in 0..MAX_BISECTIONS {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if g(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let u = if lo > 0.0 && g(lo).abs() < g(hi).abs() { lo } else { hi };
        let p = c.l_e(u);
        let residual = g(u).abs();
        if residual > tol_scale * (1.0 + p.abs()) {
            return Err(Error::Numerical(format!(
                "no root of L_E(u) = L_I(-k u) on (0, a/k]: residual {residual:e} at u = {u}"
            )));
        }
        (MarketCase::PartialShare, p, u, a - kf * u, None, Some(residual))
    };

    let internal: Vec<Holding> = (0..n).map(|i| Holding { loss: i, amount: w }).collect();
    let external: Vec<Holding> = (0..n * k).map(|j| Holding { loss: j / k, amount: u }).collect();
    let clearance_residual = (0..n)
        .map(|s| {
            let held: f64 = internal
                .iter()
                .chain(&external)
                .filter(|h| h.loss == s)
                .map(|h| h.amount)
                .sum();
            (held - a).abs()
        })
        .fold(0.0, f64::max);

    let mut notes = Vec::new();
    match case {
        MarketCase::PartialShare if u < a / (2.0 * kf) => notes.push(
            "u* < a/(2k): each loss is shared by one internal and k external agents, unique up to permutation".into(),
        ),
        MarketCase::PartialShare => notes.push(
            "u* >= a/(2k): other assignments meeting the per-loss multiplicity condition are also equilibria".into(),
        ),
        MarketCase::NoTrade => notes.push("any price in the interval supports the no-trade equilibrium".into()),
        _ => {}
    }
    Ok(EquilibriumResult {
        case,
        price,
        prices: vec![price; n],
        price_interval: interval,
        internal,
        external,
        clearance_residual,
        root_residual,
        notes,
    })
}

/// Checks a proposed assignment: external agent `j` holds `u` of loss
/// `ext_loss[j]`, internal agent `i` holds `a − k·u` of loss `int_loss[i]`,
/// and every loss must be fully held.
pub fn multiplicity_condition_holds(
    n: usize,
    k: usize,
    a: f64,
    u: f64,
    ext_loss: &[usize],
    int_loss: &[usize],
) -> bool {
    if ext_loss.len() != n * k || int_loss.len() != n || ext_loss.iter().chain(int_loss).any(|&s| s >= n) {
        return false;
    }
    let w = a - k as f64 * u;
    (0..n).all(|s| {
        let e = ext_loss.iter().filter(|&&x| x == s).count() as f64;
        let i = int_loss.iter().filter(|&&x| x == s).count() as f64;
        (u * e + w * i - a).abs() <= 1e-10 * (1.0 + a)
    })
}

/// Largest improvement any single agent finds on a grid of exposures at
/// the returned price.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BestResponseReport {
    pub external_gain: f64,
    pub internal_gain: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Grid oracle: evaluates `u(ρ_E − p) + c_E(u)` and `w(ρ_I − p) + a·p +
/// c_I(w − a)` at `points` exposures in `[0, 2a]` and compares the best grid
/// value with the value at the returned position.
pub fn best_response_check(
    spec: &ExternalMarketSpec,
    result: &EquilibriumResult,
    points: usize,
) -> Result<BestResponseReport> {
    let c = spec.curves()?;
    let a = spec.a;
    let p = result.price;
    let phi_e = |u: f64| u * (c.rho_e - p) + c.cost_e.eval(u);
    let phi_i = |w: f64| w * (c.rho_i - p) + a * p + c.cost_i.eval(w - a);
    let u = result.external.first().map_or(0.0, |h| h.amount);
    let w = result.internal.first().map_or(a, |h| h.amount);
    let grid = |i: usize| 2.0 * a * i as f64 / (points.max(2) - 1) as f64;
    let best = |f: &dyn Fn(f64) -> f64| (0..points.max(2)).map(|i| f(grid(i))).fold(f64::INFINITY, f64::min);
    let (ve, vi) = (phi_e(u), phi_i(w));
    let external_gain = (ve - best(&phi_e)).max(0.0);
    let internal_gain = (vi - best(&phi_i)).max(0.0);
    let tolerance = 1e-9 * (1.0 + ve.abs().max(vi.abs()) + a * p.abs());
    Ok(BestResponseReport {
        external_gain,
        internal_gain,
        tolerance,
        passed: external_gain <= tolerance && internal_gain <= tolerance,
    })
}
