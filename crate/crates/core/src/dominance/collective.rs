use serde::{Deserialize, Serialize};

use super::penalty::validate_grid;
use super::report::{DominanceReport, Estimate, ExceedCounter};
use crate::dist::{LossDistribution, Marginal};
use crate::error::{Error, Result};
use crate::rng::{map_blocks, RngStream, UniformSource};

/// Law of the claim count `N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum CountLaw {
    Fixed { n: u32 },
    /// Uniform on `{lo, …, hi}`.
    UniformRange { lo: u32, hi: u32 },
    Poisson { lambda: f64 },
    /// `P(N = j) = probs[j]`.
    Pmf { probs: Vec<f64> },
}

/// Largest Poisson mean accepted (keeps `e^{−λ}` well above underflow).
pub const MAX_POISSON_MEAN: f64 = 500.0;

impl CountLaw {
    pub fn validate(&self) -> Result<()> {
        match self {
            CountLaw::Fixed { .. } => Ok(()),
            CountLaw::UniformRange { lo, hi } => {
                if lo > hi {
                    return Err(Error::param("count_law", "need lo ≤ hi"));
                }
                Ok(())
            }
            CountLaw::Poisson { lambda } => {
                if !(*lambda > 0.0 && *lambda <= MAX_POISSON_MEAN) {
                    return Err(Error::param(
                        "count_law",
                        format!("Poisson mean must lie in (0, {MAX_POISSON_MEAN}]"),
                    ));
                }
                Ok(())
            }
            CountLaw::Pmf { probs } => {
                if probs.is_empty() || probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
                    return Err(Error::param("count_law", "probabilities must be nonnegative"));
                }
                let total: f64 = probs.iter().sum();
                if (total - 1.0).abs() > 1e-12 {
                    return Err(Error::param("count_law", format!("probabilities sum to {total}, not 1")));
                }
                Ok(())
            }
        }
    }

    /// `P(N ≥ 2)`.
    pub fn prob_at_least_two(&self) -> f64 {
        match self {
            CountLaw::Fixed { n } => f64::from(u8::from(*n >= 2)),
            CountLaw::UniformRange { lo, hi } => {
                let total = f64::from(hi - lo + 1);
                let below = (0..=1).filter(|j| (*lo..=*hi).contains(j)).count() as f64;
                1.0 - below / total
            }
            CountLaw::Poisson { lambda } => 1.0 - (-lambda).exp() * (1.0 + lambda),
            CountLaw::Pmf { probs } => probs.iter().skip(2).sum(),
        }
    }

    /// Inverse-transform draw from one uniform.
    pub fn draw(&self, u: f64) -> u32 {
        match self {
            CountLaw::Fixed { n } => *n,
            CountLaw::UniformRange { lo, hi } => {
                let span = f64::from(hi - lo + 1);
                lo + ((u * span) as u32).min(hi - lo)
            }
            CountLaw::Poisson { lambda } => {
                let mut j = 0u32;
                let mut pj = (-lambda).exp();
                let mut cum = pj;
                while u > cum && pj > 0.0 {
                    j += 1;
                    pj *= lambda / f64::from(j);
                    cum += pj;
                }
                j
            }
            CountLaw::Pmf { probs } => {
                let mut cum = 0.0;
                let last = probs.iter().rposition(|&p| p > 0.0).unwrap_or(0);
                for (j, p) in probs.iter().enumerate() {
                    cum += p;
                    if u <= cum && *p > 0.0 {
                        return j as u32;
                    }
                }
                last as u32
            }
        }
    }
}

/// Law of the positive claim weights `W_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum WeightLaw {
    Constant { w: f64 },
    Distribution { dist: LossDistribution },
}

impl WeightLaw {
    pub fn validate(&self) -> Result<()> {
        match self {
            WeightLaw::Constant { w } if !(*w > 0.0 && w.is_finite()) => {
                Err(Error::param("weight_law", "weight must be positive"))
            }
            WeightLaw::Distribution { dist } if !(dist.lower_endpoint() > 0.0) => Err(Error::param(
                "weight_law",
                "weight distribution must be supported on (0, ∞)",
            )),
            _ => Ok(()),
        }
    }

    fn draw(&self, u: f64) -> f64 {
        match self {
            WeightLaw::Constant { w } => *w,
            WeightLaw::Distribution { dist } => dist.left_quantile(u),
        }
    }
}

/// Uniforms reserved per row; a row holds the count uniform and, for each
/// claim, one weight uniform and the claim's own uniforms.
pub const ROW_WINDOW: u64 = 1 << 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollectiveReport {
    /// `P(ΣW_iX_i / ΣW_i > t)` against `P(X·1{N≥1} > t)`.
    pub average_loss: DominanceReport,
    /// `P(ΣW_iX_i > t)` against `P(ΣW_i·X > t)`.
    pub weighted_sum: DominanceReport,
    pub prob_at_least_two: f64,
}

/// Randomly counted, randomly weighted claims `X_1, …, X_N`, with the single
/// loss `X` of the concentrated arm taken to be `X_1` of the same row.
pub fn collective_risk_experiment<M: Marginal + ?Sized>(
    marginal: &M,
    weight_law: &WeightLaw,
    count_law: &CountLaw,
    grid: &[f64],
    n_mc: usize,
    stream: RngStream,
) -> Result<CollectiveReport> {
    weight_law.validate()?;
    count_law.validate()?;
    validate_grid(grid)?;
    if n_mc == 0 {
        return Err(Error::param("n_mc", "must be positive"));
    }
    let k = marginal.draws();
    let per_claim = 1 + k as u64;
    let max_claims = (ROW_WINDOW - 1) / per_claim;

    struct Acc {
        avg_lhs: ExceedCounter,
        avg_rhs: ExceedCounter,
        sum_lhs: ExceedCounter,
        sum_rhs: ExceedCounter,
        avg_same: bool,
        sum_same: bool,
        overflow: bool,
    }

    let acc = map_blocks(
        n_mc,
        |rows| {
            let g_len = grid.len();
            let mut acc = Acc {
                avg_lhs: ExceedCounter::new(g_len),
                avg_rhs: ExceedCounter::new(g_len),
                sum_lhs: ExceedCounter::new(g_len),
                sum_rhs: ExceedCounter::new(g_len),
                avg_same: true,
                sum_same: true,
                overflow: false,
            };
            let mut g: UniformSource = stream.row(rows.start as u64, ROW_WINDOW);
            let mut buf = vec![0.0; k];
            for r in rows {
                g.seek(r as u64 * ROW_WINDOW);
                let n = count_law.draw(g.uniform());
                if u64::from(n) > max_claims {
                    acc.overflow = true;
                    continue;
                }
                let (mut wx, mut w_total, mut x1) = (0.0, 0.0, 0.0);
                for i in 0..n {
                    let w = weight_law.draw(g.uniform());
                    let x = marginal.draw(&mut g, &mut buf);
                    if i == 0 {
                        x1 = x;
                    }
                    wx += w * x;
                    w_total += w;
                }
                let (avg, single, scaled) = if n == 0 {
                    (0.0, 0.0, 0.0)
                } else {
                    (wx / w_total, x1, w_total * x1)
                };
                acc.avg_same &= avg == single;
                acc.sum_same &= wx == scaled;
                acc.avg_lhs.add(grid, avg);
                acc.avg_rhs.add(grid, single);
                acc.sum_lhs.add(grid, wx);
                acc.sum_rhs.add(grid, scaled);
            }
            acc
        },
        |a, b| Acc {
            avg_lhs: a.avg_lhs.merge(b.avg_lhs),
            avg_rhs: a.avg_rhs.merge(b.avg_rhs),
            sum_lhs: a.sum_lhs.merge(b.sum_lhs),
            sum_rhs: a.sum_rhs.merge(b.sum_rhs),
            avg_same: a.avg_same && b.avg_same,
            sum_same: a.sum_same && b.sum_same,
            overflow: a.overflow || b.overflow,
        },
    )
    .expect("n_mc > 0");
    if acc.overflow {
        return Err(Error::Unsupported(format!(
            "a claim count exceeded the per-row limit of {max_claims}"
        )));
    }
    let n = n_mc as u64;
    let est = |c: &ExceedCounter| -> Vec<Estimate> {
        c.counts().into_iter().map(|k| Estimate::from_counts(k, n)).collect()
    };
    Ok(CollectiveReport {
        average_loss: DominanceReport::from_counts(
            "P(sum W_i X_i / sum W_i > t) vs P(X 1{N>=1} > t)",
            grid,
            &acc.avg_lhs.counts(),
            n,
            &est(&acc.avg_rhs),
            n,
            acc.avg_same,
        ),
        weighted_sum: DominanceReport::from_counts(
            "P(sum W_i X_i > t) vs P(sum W_i X > t)",
            grid,
            &acc.sum_lhs.counts(),
            n,
            &est(&acc.sum_rhs),
            n,
            acc.sum_same,
        ),
        prob_at_least_two: count_law.prob_at_least_two(),
    })
}
