use serde::{Deserialize, Serialize};

use super::report::{DominanceReport, Estimate, ExceedCounter};
use crate::dependence::Copula;
use crate::dist::{LossDistribution, Marginal};
use crate::error::{Error, Result};
use crate::rng::{map_blocks, RngStream};

/// How the concentrated arm `P(X > t)` is obtained.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConcentratedArm {
    /// The coordinate with the largest weight (lowest index on ties) of the
    /// same row: both arms share their uniforms.
    #[default]
    Coupled,
    /// An independent draw from a separate substream.
    Independent,
    /// The closed-form survival function.
    Analytic,
}

pub const DEFAULT_N_MC: usize = 1_000_000;
pub const DEFAULT_GRID_POINTS: usize = 41;

const WEIGHT_TOL: f64 = 1e-12;

/// Checks that `theta` lies on the standard simplex of dimension `d`.
pub fn validate_simplex(theta: &[f64], d: usize) -> Result<()> {
    if theta.len() != d {
        return Err(Error::param(
            "theta",
            format!("expected {d} weights, got {}", theta.len()),
        ));
    }
    if theta.iter().any(|&t| !t.is_finite() || t < 0.0) {
        return Err(Error::param("theta", "weights must be nonnegative"));
    }
    let total: f64 = theta.iter().sum();
    if (total - 1.0).abs() > WEIGHT_TOL {
        return Err(Error::param("theta", format!("weights sum to {total}, not 1")));
    }
    Ok(())
}

pub(crate) fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.iter().any(|t| !t.is_finite()) || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::param("grid", "must be finite and strictly increasing"));
    }
    Ok(())
}

/// 41 log-spaced thresholds between the 0.5 and 0.999 quantiles.
pub fn default_grid(marginal: &LossDistribution) -> Vec<f64> {
    super::spaced_grid(
        marginal.left_quantile(0.5),
        marginal.left_quantile(0.999),
        DEFAULT_GRID_POINTS,
    )
}

/// Compares `P(Σ θ_i X_i > t)` with `P(X > t)` on `grid`.
///
/// Rows of `(X_1, …, X_d)` come from `copula`; the concentrated arm is
/// chosen by `arm`. With [`ConcentratedArm::Coupled`] a single nonzero
/// weight reproduces the concentrated arm path by path.
pub fn penalty_experiment<M: Marginal + ?Sized>(
    marginal: &M,
    copula: &Copula,
    theta: &[f64],
    grid: &[f64],
    n_mc: usize,
    stream: RngStream,
    arm: ConcentratedArm,
) -> Result<DominanceReport> {
    let d = copula.dim();
    validate_simplex(theta, d)?;
    validate_grid(grid)?;
    if n_mc == 0 {
        return Err(Error::param("n_mc", "must be positive"));
    }
    let analytic: Option<Vec<f64>> = match arm {
        ConcentratedArm::Analytic => Some(
            grid.iter()
                .map(|&t| marginal.survival(t))
                .collect::<Option<_>>()
                .ok_or_else(|| Error::Unsupported("marginal has no closed-form survival function".into()))?,
        ),
        _ => None,
    };

    let lead = theta
        .iter()
        .enumerate()
        .fold(0, |best, (i, &w)| if w > theta[best] { i } else { best });
    let k = marginal.draws();
    let width = copula.row_width(k) as u64;
    let joint = stream.substream(0);
    let single = stream.substream(1);

    let (lhs, rhs, identical) = map_blocks(
        n_mc,
        |rows| {
            let mut g = joint.row(rows.start as u64, width);
            let mut g_single = single.row(rows.start as u64, k as u64);
            let mut scratch = Vec::new();
            let mut buf = vec![0.0; k];
            let mut x = vec![0.0; d];
            let mut lhs = ExceedCounter::new(grid.len());
            let mut rhs = ExceedCounter::new(grid.len());
            let mut identical = true;
            for _ in rows {
                copula.draw_row(marginal, &mut g, &mut scratch, &mut x);
                let s: f64 = theta.iter().zip(&x).map(|(w, v)| w * v).sum();
                lhs.add(grid, s);
                let c = match arm {
                    ConcentratedArm::Coupled => x[lead],
                    ConcentratedArm::Independent => marginal.draw(&mut g_single, &mut buf),
                    ConcentratedArm::Analytic => continue,
                };
                identical &= c == s;
                rhs.add(grid, c);
            }
            (lhs, rhs, identical)
        },
        |a, b| (a.0.merge(b.0), a.1.merge(b.1), a.2 && b.2),
    )
    .expect("n_mc > 0");

    let n = n_mc as u64;
    let (rhs_est, n_rhs): (Vec<Estimate>, u64) = match analytic {
        Some(s) => (s.into_iter().map(Estimate::exact).collect(), 0),
        None => (
            rhs.counts().into_iter().map(|c| Estimate::from_counts(c, n)).collect(),
            n,
        ),
    };
    Ok(DominanceReport::from_counts(
        "P(sum theta_i X_i > t) vs P(X > t)",
        grid,
        &lhs.counts(),
        n,
        &rhs_est,
        n_rhs,
        identical && arm == ConcentratedArm::Coupled,
    ))
}
