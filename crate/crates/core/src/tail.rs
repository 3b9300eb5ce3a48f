//! Hill tail-index estimation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// z_{0.975}
pub const Z_975: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HillResult {
    pub k: usize,
    /// The (n−k)-th order statistic `X_(n−k)`.
    pub threshold: f64,
    pub alpha_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl HillResult {
    fn new(k: usize, threshold: f64, mean_excess: f64) -> Self {
        let alpha_hat = 1.0 / mean_excess;
        let half = Z_975 / (k as f64).sqrt();
        HillResult {
            k,
            threshold,
            alpha_hat,
            ci_low: alpha_hat * (1.0 - half),
            ci_high: alpha_hat * (1.0 + half),
        }
    }
}

fn sorted_copy(sample: &[f64]) -> Result<Vec<f64>> {
    if let Some(bad) = sample.iter().find(|v| !v.is_finite()) {
        return Err(Error::param("sample", format!("nonfinite value {bad}")));
    }
    let mut s = sample.to_vec();
    s.sort_by(f64::total_cmp);
    Ok(s)
}

fn check_k(k: usize, n: usize) -> Result<()> {
    if k < 2 || k >= n {
        return Err(Error::param("k", format!("need 2 ≤ k < n, got k = {k}, n = {n}")));
    }
    Ok(())
}

/// Hill estimate from the top `k` order statistics with threshold `X_(n−k)`:
/// `α̂ = [ (1/k) Σ_{i=1..k} (ln X_(n−i+1) − ln X_(n−k)) ]⁻¹`, and the
/// asymptotic 95% interval `α̂ (1 ± z_{0.975}/√k)`.
pub fn hill_estimator(sample: &[f64], k: usize) -> Result<HillResult> {
    let s = sorted_copy(sample)?;
    let n = s.len();
    check_k(k, n)?;
    let threshold = s[n - k - 1];
    if threshold <= 0.0 {
        return Err(Error::param(
            "sample",
            "the top k+1 order statistics must be strictly positive",
        ));
    }
    let lt = threshold.ln();
    let excess: f64 = s[n - k..].iter().map(|x| x.ln() - lt).sum();
    Ok(HillResult::new(k, threshold, excess / k as f64))
}

/// One [`HillResult`] for each `k` in `k_min..=k_max`.
pub fn hill_plot(sample: &[f64], k_min: usize, k_max: usize) -> Result<Vec<HillResult>> {
    let s = sorted_copy(sample)?;
    let n = s.len();
    check_k(k_min, n)?;
    check_k(k_max, n)?;
    if k_min > k_max {
        return Err(Error::param("k_min", "must not exceed k_max"));
    }
    if s[n - k_max - 1] <= 0.0 {
        return Err(Error::param(
            "sample",
            "the top k_max+1 order statistics must be strictly positive",
        ));
    }
    // running sum of the top-k logs, descending
    let mut top_logs = 0.0;
    let mut out = Vec::with_capacity(k_max - k_min + 1);
    for k in 1..=k_max {
        top_logs += s[n - k].ln();
        if k >= k_min {
            let threshold = s[n - k - 1];
            let excess = top_logs - k as f64 * threshold.ln();
            out.push(HillResult::new(k, threshold, excess / k as f64));
        }
    }
    Ok(out)
}

/// `k = ⌈0.05 n⌉`, the top 5% of the sample. Requires `n ≥ 40` so that `k ≥ 2`.
pub fn default_threshold_k(n: usize) -> Result<usize> {
    if n < 40 {
        return Err(Error::param("n", format!("need at least 40 observations, got {n}")));
    }
    Ok((5 * n).div_ceil(100))
}

pub const HILL_CSV_HEADER: [&str; 5] = ["k", "threshold", "alpha_hat", "ci_low", "ci_high"];

/// One CSV row per `k`; an empty series gives the header alone.
pub fn write_hill_csv<W: std::io::Write>(series: &[HillResult], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HILL_CSV_HEADER)?;
    for r in series {
        w.write_record([
            r.k.to_string(),
            r.threshold.to_string(),
            r.alpha_hat.to_string(),
            r.ci_low.to_string(),
            r.ci_high.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
