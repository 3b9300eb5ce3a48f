use serde::{Deserialize, Serialize};

use crate::dependence::{sample_joint, Copula};
use crate::dist::LossDistribution;
use crate::error::{check_probability, Error, Result};
use crate::normal;
use crate::rng::RngStream;

/// The proportional-sharing equilibrium of ES agents facing iid finite-mean
/// losses, estimated by Monte Carlo.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EsEquilibrium {
    pub q: f64,
    /// Sample `VaR_q(Σa_iX_i)`.
    pub var_aggregate: f64,
    /// Rows in the tail event `A = {Σa_iX_i ≥ VaR_q}`.
    pub tail_count: usize,
    /// `p*_i = E[X_i | A]`.
    pub prices: Vec<f64>,
    pub price_se: Vec<f64>,
    /// Standard error of `p*_i − p*_1`.
    pub price_diff_se: Vec<f64>,
    /// `w^i = (a_i / Σa_j)·(a_1, …, a_n)`.
    pub allocation: Vec<Vec<f64>>,
    /// `ES_q(Σa_iX_i)` from an independent set of draws.
    pub es_aggregate: f64,
    pub es_se: f64,
    /// `Σa_i p*_i − ES_q(Σa_iX_i)` and its standard error.
    pub euler_residual: f64,
    pub euler_se: f64,
}

/// Estimates the equilibrium prices `E[X_i | A]` and the proportional
/// allocation, with an Euler-identity check against an independent ES
/// estimate. Infinite-mean marginals are rejected: ES is infinite there and
/// the agents keep whole positions instead of sharing.
pub fn es_finite_mean_equilibrium(
    exposures: &[f64],
    marginal: &LossDistribution,
    q: f64,
    n_mc: usize,
    stream: RngStream,
) -> Result<EsEquilibrium> {
    check_probability("q", q)?;
    let n = exposures.len();
    if n == 0 || exposures.iter().any(|a| !(*a > 0.0 && a.is_finite())) {
        return Err(Error::param("exposures", "need positive exposures"));
    }
    if marginal.has_infinite_mean() {
        return Err(Error::param(
            "marginal",
            "the loss has infinite mean, so ES is infinite; with infinite-mean losses agents keep whole positions rather than share",
        ));
    }
    if (n_mc as f64) * (1.0 - q) < 10.0 {
        return Err(Error::param("n_mc", "too few draws for ten tail observations"));
    }
    let copula = Copula::independence(n);
    let total: f64 = exposures.iter().sum();

    let rows = sample_joint(marginal, &copula, n_mc, stream.substream(0));
    let sums: Vec<f64> = rows
        .rows()
        .into_iter()
        .map(|r| r.iter().zip(exposures).map(|(x, a)| a * x).sum())
        .collect();
    let var = left_quantile(&sums, q);
    let tail: Vec<usize> = (0..n_mc).filter(|&r| sums[r] >= var).collect();
    let m = tail.len() as f64;
    let (tail, rows) = (&tail, &rows);
    let col = |i: usize| tail.iter().map(move |&r| rows[[r, i]]);
    let mean_sd = |it: &mut dyn Iterator<Item = f64>| {
        let v: Vec<f64> = it.collect();
        let mean = v.iter().sum::<f64>() / m;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0);
        (mean, var.sqrt())
    };
    let mut prices = Vec::with_capacity(n);
    let mut price_se = Vec::with_capacity(n);
    let mut price_diff_se = Vec::with_capacity(n);
    for i in 0..n {
        let (mean, sd) = mean_sd(&mut col(i));
        prices.push(mean);
        price_se.push(sd / m.sqrt());
        let (_, dsd) = mean_sd(&mut col(i).zip(col(0)).map(|(x, y)| x - y));
        price_diff_se.push(dsd / m.sqrt());
    }
    let euler_lhs: f64 = exposures.iter().zip(&prices).map(|(a, p)| a * p).sum();
    let (_, lhs_se) = es_estimate(&sums, q);

    let fresh = sample_joint(marginal, &copula, n_mc, stream.substream(1));
    let fresh_sums: Vec<f64> = fresh
        .rows()
        .into_iter()
        .map(|r| r.iter().zip(exposures).map(|(x, a)| a * x).sum())
        .collect();
    let (es_aggregate, es_se) = es_estimate(&fresh_sums, q);

    let allocation = exposures
        .iter()
        .map(|ai| exposures.iter().map(|aj| ai / total * aj).collect())
        .collect();
    Ok(EsEquilibrium {
        q,
        var_aggregate: var,
        tail_count: tail.len(),
        prices,
        price_se,
        price_diff_se,
        allocation,
        es_aggregate,
        es_se,
        euler_residual: euler_lhs - es_aggregate,
        euler_se: (lhs_se * lhs_se + es_se * es_se).sqrt(),
    })
}

fn left_quantile(values: &[f64], q: f64) -> f64 {
    let mut s = values.to_vec();
    s.sort_by(f64::total_cmp);
    let rank = ((q * s.len() as f64).ceil() as usize).clamp(1, s.len());
    s[rank - 1]
}

/// Sample ES with the asymptotic standard error
/// `√((Var(S | S ≥ VaR) + q(ES − VaR)²) / (n(1 − q)))`.
fn es_estimate(values: &[f64], q: f64) -> (f64, f64) {
    let mut s = values.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    let e = crate::dist::EmpiricalDistribution::new(s).expect("finite sample");
    let var = e.quantile(q);
    let es = e.quantile_integral(q, 1.0) / (1.0 - q);
    let tail: Vec<f64> = e.sorted().iter().copied().filter(|&x| x >= var).collect();
    let m = tail.len() as f64;
    let mean = tail.iter().sum::<f64>() / m;
    let tv = tail.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0).max(1.0);
    let se = ((tv + q * (es - var).powi(2)) / (n as f64 * (1.0 - q))).sqrt();
    (es, se)
}

/// Two agents with independent standard normal losses and `RVaR_{p,q}`
/// preferences, checked on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RvarCheck {
    /// `C_{p,q} = (φ(Φ⁻¹(p)) − φ(Φ⁻¹(q)))/(q − p)`.
    pub c_pq: f64,
    /// `p* = C_{p,q}/√2`.
    pub price: f64,
    /// Minimizer of `r` on the grid points with `x + y = 1`.
    pub argmin: [f64; 2],
    pub value_at_half: f64,
    /// `r(1, 0) = p*(√2 − 1)`.
    pub corner_value: f64,
    /// Smallest `r` over the whole grid on `[0, 1]²`.
    pub grid_min: f64,
    /// Largest amount by which a constrained grid point beats `(0.5, 0.5)`.
    pub max_violation: f64,
    pub passed: bool,
}

/// `r(x, y) = p*√(2x² + 2y²) − p*(x + y)`, the part of each agent's objective
/// that depends on the split of a unit exposure.
pub fn rvar_excess(price: f64, x: f64, y: f64) -> f64 {
    price * (2.0 * x * x + 2.0 * y * y).sqrt() - price * (x + y)
}

/// Evaluates `r` on the grid `{0, step, …, 1}²` and checks that `(0.5, 0.5)`
/// minimizes it among points with `x + y = 1`. `1/step` must be an even
/// integer so that `0.5` is a grid point.
pub fn normal_rvar_two_agent_check(p: f64, q: f64, grid_step: f64) -> Result<RvarCheck> {
    if !(0.0..1.0).contains(&p) || !(p < q && q < 1.0) {
        return Err(Error::param("p, q", "need 0 ≤ p < q < 1"));
    }
    let steps = (1.0 / grid_step).round();
    if !(grid_step > 0.0) || (steps * grid_step - 1.0).abs() > 1e-9 || !(steps as u64).is_multiple_of(2) {
        return Err(Error::param("grid_step", "1/grid_step must be an even integer"));
    }
    let steps = steps as usize;
    let c_pq = (normal::density_at_quantile(p) - normal::density_at_quantile(q)) / (q - p);
    let price = c_pq / std::f64::consts::SQRT_2;
    let pt = |i: usize| i as f64 / steps as f64;

    let mut grid_min = f64::INFINITY;
    for i in 0..=steps {
        for j in 0..=steps {
            grid_min = grid_min.min(rvar_excess(price, pt(i), pt(j)));
        }
    }
    let value_at_half = rvar_excess(price, 0.5, 0.5);
    let mut argmin = [0.0, 1.0];
    let mut best = f64::INFINITY;
    let mut max_violation: f64 = 0.0;
    for i in 0..=steps {
        let (x, y) = (pt(i), pt(steps - i));
        let v = rvar_excess(price, x, y);
        if v < best {
            best = v;
            argmin = [x, y];
        }
        max_violation = max_violation.max(value_at_half - v);
    }
    Ok(RvarCheck {
        c_pq,
        price,
        argmin,
        value_at_half,
        corner_value: rvar_excess(price, 1.0, 0.0),
        grid_min,
        max_violation,
        passed: argmin == [0.5, 0.5] && max_violation <= 0.0,
    })
}
