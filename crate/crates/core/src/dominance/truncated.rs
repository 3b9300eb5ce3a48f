use serde::{Deserialize, Serialize};

use super::penalty::{validate_grid, validate_simplex};
use super::report::{DominanceReport, Estimate, ExceedCounter, Z_99};
use crate::dependence::Copula;
use crate::dist::LossDistribution;
use crate::error::{Error, Result};
use crate::rng::{map_blocks, RngStream};

/// A sample quantile with a distribution-free order-statistic interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantileEstimate {
    pub value: f64,
    pub lo: f64,
    pub hi: f64,
}

/// Left `p`-quantile of a sorted sample with a 99% interval from the binomial
/// law of the number of observations below the true quantile.
pub fn sample_quantile(sorted: &[f64], p: f64) -> QuantileEstimate {
    let n = sorted.len();
    let nf = n as f64;
    let rank = ((p * nf).ceil() as usize).clamp(1, n);
    let spread = Z_99 * (nf * p * (1.0 - p)).sqrt();
    let lo_rank = ((nf * p - spread).floor() as isize).clamp(1, n as isize) as usize;
    let hi_rank = ((nf * p + spread).ceil() as isize + 1).clamp(1, n as isize) as usize;
    QuantileEstimate {
        value: sorted[rank - 1],
        lo: sorted[lo_rank - 1],
        hi: sorted[hi_rank - 1],
    }
}

/// `VaR_p(Σθ_iY_i)` against `Σθ_i VaR_p(Y_i)` at one level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarComparison {
    pub p: f64,
    /// Whether `p < P(X ≤ c)`, where the strict inequality is guaranteed.
    pub in_region: bool,
    pub diversified: QuantileEstimate,
    pub weighted_sum: f64,
    /// The interval of the diversified VaR lies strictly above the weighted sum.
    pub separated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncatedReport {
    /// `c = min θ_i c_i` over the positive weights.
    pub c: f64,
    /// `P(X ≤ c)`.
    pub region_bound: f64,
    pub exceedance: DominanceReport,
    /// Rows (summed over the grid) where `1{Σθ_i(X_i∧c_i) > t}` and
    /// `1{Σθ_iX_i > t}` differ.
    pub indicator_mismatches: u64,
    pub indicator_checks: u64,
    pub var: Vec<VarComparison>,
}

impl TruncatedReport {
    pub fn identity_holds(&self) -> bool {
        self.indicator_mismatches == 0
    }
}

/// Diversification with truncated losses `Y_i = X_i ∧ c_i`.
///
/// On the shared samples, counts disagreements between the truncated and
/// untruncated exceedance indicators at each `t` of `grid` (which must lie in
/// `(z_X, c]`), compares `P(Σθ_iY_i > t)` with `P(Y_1 > t)`, and reports
/// `VaR_p(Σθ_iY_i)` against `Σθ_i VaR_p(Y_i)` for each level in `var_levels`.
#[allow(clippy::too_many_arguments)]
pub fn truncated_penalty_experiment(
    marginal: &LossDistribution,
    copula: &Copula,
    theta: &[f64],
    caps: &[f64],
    grid: &[f64],
    var_levels: &[f64],
    n_mc: usize,
    stream: RngStream,
) -> Result<TruncatedReport> {
    let d = copula.dim();
    validate_simplex(theta, d)?;
    validate_grid(grid)?;
    if caps.len() != d {
        return Err(Error::param("caps", format!("expected {d} caps, got {}", caps.len())));
    }
    let z = marginal.lower_endpoint();
    let truncated: Vec<LossDistribution> = caps
        .iter()
        .map(|&c| marginal.truncate(c))
        .collect::<Result<_>>()?;
    let c = theta
        .iter()
        .zip(caps)
        .filter(|(w, _)| **w > 0.0)
        .map(|(w, c)| w * c)
        .fold(f64::INFINITY, f64::min);
    if let Some(&t) = grid.iter().find(|&&t| t <= z || t > c) {
        return Err(Error::param(
            "grid",
            format!("threshold {t} is outside ({z}, {c}]"),
        ));
    }
    for &p in var_levels {
        crate::error::check_probability("p", p)?;
    }
    if n_mc == 0 {
        return Err(Error::param("n_mc", "must be positive"));
    }

    let width = copula.row_width(1) as u64;
    let (counter, rhs, mismatches, mut sums) = map_blocks(
        n_mc,
        |rows| {
            let mut g = stream.row(rows.start as u64, width);
            let mut scratch = Vec::new();
            let mut x = vec![0.0; d];
            let mut lhs = ExceedCounter::new(grid.len());
            let mut rhs = ExceedCounter::new(grid.len());
            let mut mismatches = 0u64;
            let mut sums = Vec::with_capacity(rows.len());
            for _ in rows {
                copula.draw_row(marginal, &mut g, &mut scratch, &mut x);
                let sx: f64 = theta.iter().zip(&x).map(|(w, v)| w * v).sum();
                let sy: f64 = theta
                    .iter()
                    .zip(&x)
                    .zip(caps)
                    .map(|((w, v), cap)| w * v.min(*cap))
                    .sum();
                for &t in grid {
                    if (sy > t) != (sx > t) {
                        mismatches += 1;
                    }
                }
                lhs.add(grid, sy);
                rhs.add(grid, x[0].min(caps[0]));
                sums.push(sy);
            }
            (lhs, rhs, mismatches, sums)
        },
        |a, mut b| {
            let mut s = a.3;
            s.append(&mut b.3);
            (a.0.merge(b.0), a.1.merge(b.1), a.2 + b.2, s)
        },
    )
    .expect("n_mc > 0");

    let n = n_mc as u64;
    let rhs_est: Vec<Estimate> = rhs.counts().into_iter().map(|k| Estimate::from_counts(k, n)).collect();
    let exceedance = DominanceReport::from_counts(
        "P(sum theta_i Y_i > t) vs P(Y_1 > t)",
        grid,
        &counter.counts(),
        n,
        &rhs_est,
        n,
        false,
    );

    sums.sort_by(f64::total_cmp);
    let region_bound = marginal.cdf(c);
    let var = var_levels
        .iter()
        .map(|&p| {
            let diversified = sample_quantile(&sums, p);
            let weighted_sum: f64 = theta
                .iter()
                .zip(&truncated)
                .map(|(w, y)| w * y.left_quantile(p))
                .sum();
            VarComparison {
                p,
                in_region: p < region_bound,
                diversified,
                weighted_sum,
                separated: diversified.lo > weighted_sum,
            }
        })
        .collect();

    Ok(TruncatedReport {
        c,
        region_bound,
        exceedance,
        indicator_mismatches: mismatches,
        indicator_checks: n * grid.len() as u64,
        var,
    })
}
