use serde::{Deserialize, Serialize};

use crate::dist::{LossDistribution, Marginal};
use crate::error::{Error, Result};
use crate::rng::{fill_rows, RngStream};

/// Nondecreasing disutility `v(y) = −u(−y)` of a loss `y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MonotoneFn {
    /// `v(y) = slope · y + intercept`.
    Linear { slope: f64, intercept: f64 },
    Constant { value: f64 },
    /// Risk-averse agent with limited liability: `v(y) = (e^{γ min(y, cap)} − 1)/γ`,
    /// convex below the cap and flat above it.
    LimitedLiability { cap: f64, gamma: f64 },
    /// Prospect-theory shape around a reference loss `r`:
    /// `v(y) = λ (y − r)^b` above `r` and `−(r − y)^a` below.
    /// With `a, b < 1` this is convex below `r` and concave above it.
    Prospect {
        reference: f64,
        gain_exponent: f64,
        loss_exponent: f64,
        loss_aversion: f64,
    },
}

impl MonotoneFn {
    pub fn identity() -> Self {
        MonotoneFn::Linear {
            slope: 1.0,
            intercept: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fin = |name: &'static str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::param(name, "must be finite"))
            }
        };
        let pos = |name: &'static str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::param(name, "must be positive"))
            }
        };
        match *self {
            MonotoneFn::Linear { slope, intercept } => {
                fin("intercept", intercept)?;
                if !(slope >= 0.0 && slope.is_finite()) {
                    return Err(Error::param("slope", "must be nonnegative"));
                }
                Ok(())
            }
            MonotoneFn::Constant { value } => fin("value", value),
            MonotoneFn::LimitedLiability { cap, gamma } => {
                fin("cap", cap)?;
                pos("gamma", gamma)
            }
            MonotoneFn::Prospect {
                reference,
                gain_exponent,
                loss_exponent,
                loss_aversion,
            } => {
                fin("reference", reference)?;
                pos("gain_exponent", gain_exponent)?;
                pos("loss_exponent", loss_exponent)?;
                pos("loss_aversion", loss_aversion)
            }
        }
    }

    pub fn eval(&self, y: f64) -> f64 {
        match *self {
            MonotoneFn::Linear { slope, intercept } => slope * y + intercept,
            MonotoneFn::Constant { value } => value,
            MonotoneFn::LimitedLiability { cap, gamma } => (gamma * y.min(cap)).exp_m1() / gamma,
            MonotoneFn::Prospect {
                reference,
                gain_exponent,
                loss_exponent,
                loss_aversion,
            } => {
                if y >= reference {
                    loss_aversion * (y - reference).powf(loss_exponent)
                } else {
                    -(reference - y).powf(gain_exponent)
                }
            }
        }
    }

    /// `r` with `v(y) ≍ y^r` as `y → ∞`; `None` when `v` is bounded above.
    pub fn growth_exponent(&self) -> Option<f64> {
        match *self {
            MonotoneFn::Linear { slope, .. } if slope > 0.0 => Some(1.0),
            MonotoneFn::Prospect { loss_exponent, .. } => Some(loss_exponent),
            _ => None,
        }
    }
}

/// Monte Carlo estimate of `E[v(X)]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisutilityEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n: usize,
    /// Running means at `n/4`, `n/2`, `n` drift by more than 5%.
    pub divergent: bool,
}

/// Relative drift that marks a running mean as unstable.
pub const DRIFT_TOLERANCE: f64 = 0.05;

/// `E[v(X)]` by Monte Carlo with a standard error and a stability check.
///
/// Infinite-mean integrands have no standard error guarantee, so the running
/// means at `n/4`, `n/2` and `n` are compared and a relative drift above 5%
/// flags the estimate as divergent.
pub fn expected_disutility<M: Marginal + ?Sized>(
    loss: &M,
    v: &MonotoneFn,
    n_mc: usize,
    stream: RngStream,
) -> Result<DisutilityEstimate> {
    v.validate()?;
    if n_mc < 4 {
        return Err(Error::param("n_mc", "need at least 4 samples"));
    }
    if let MonotoneFn::Constant { value } = *v {
        return Ok(DisutilityEstimate {
            mean: value,
            std_error: 0.0,
            n: n_mc,
            divergent: false,
        });
    }
    let k = loss.draws() as u64;
    let values = fill_rows(n_mc, |rows, out| {
        let mut g = stream.row(rows.start as u64, k);
        let mut buf = vec![0.0; k as usize];
        for o in out {
            *o = v.eval(loss.draw(&mut g, &mut buf));
        }
    });
    Ok(summarize(&values))
}

/// Exact `E[v(X)]` over an empirical law.
pub fn empirical_disutility(sample: &LossDistribution, v: &MonotoneFn) -> Option<f64> {
    let e = sample.as_empirical()?;
    let shift = v.eval(e.sorted()[0]);
    Some(shift + e.sorted().iter().map(|&y| v.eval(y) - shift).sum::<f64>() / e.len() as f64)
}

fn summarize(values: &[f64]) -> DisutilityEstimate {
    // sums are taken relative to the first value, so a constant sample
    // reproduces its value exactly
    let n = values.len();
    let shift = values[0];
    let mut sum = 0.0;
    let mut checkpoints = [0.0; 2];
    for (i, &x) in values.iter().enumerate() {
        sum += x - shift;
        if i + 1 == n / 4 {
            checkpoints[0] = shift + sum / (n / 4) as f64;
        }
        if i + 1 == n / 2 {
            checkpoints[1] = shift + sum / (n / 2) as f64;
        }
    }
    let mean = shift + sum / n as f64;
    let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let drift = |a: f64, b: f64| (a - b).abs() / b.abs().max(a.abs()).max(f64::MIN_POSITIVE);
    let divergent = !mean.is_finite()
        || drift(checkpoints[0], checkpoints[1]) > DRIFT_TOLERANCE
        || drift(checkpoints[1], mean) > DRIFT_TOLERANCE;
    DisutilityEstimate {
        mean,
        std_error: (var / n as f64).sqrt(),
        n,
        divergent,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn truncated_pareto_mean() {
        let x = LossDistribution::pareto(1.0).unwrap().truncate(10.0).unwrap();
        let est = expected_disutility(&x, &MonotoneFn::identity(), 200_000, RngStream::new(3, 1)).unwrap();
        let truth = 1.0 + 10f64.ln();
        assert!((est.mean - truth).abs() < 3.0 * est.std_error, "{est:?}");
        assert!(!est.divergent);
    }

    #[test]
    fn constant_is_exact() {
        let x = LossDistribution::pareto(0.5).unwrap();
        let est = expected_disutility(&x, &MonotoneFn::Constant { value: 0.1 }, 1000, RngStream::new(0, 0)).unwrap();
        assert_eq!(est.mean, 0.1);
    }

    #[test]
    fn limited_liability_above_support() {
        // cap at or below the essential infimum: v is constant on the support
        let x = LossDistribution::pareto(0.7).unwrap();
        let v = MonotoneFn::LimitedLiability { cap: 1.0, gamma: 0.5 };
        let est = expected_disutility(&x, &v, 10_000, RngStream::new(0, 4)).unwrap();
        assert_eq!(est.mean, v.eval(1.0));
    }

    #[test]
    fn infinite_mean_flags_divergence() {
        let x = LossDistribution::pareto(0.5).unwrap();
        let est = expected_disutility(&x, &MonotoneFn::identity(), 100_000, RngStream::new(8, 0)).unwrap();
        assert!(est.divergent, "{est:?}");
    }
}
