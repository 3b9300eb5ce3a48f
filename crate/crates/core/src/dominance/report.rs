use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// z for two-sided 99% intervals.
pub const Z_99: f64 = 2.575_829_303_548_9;

/// Wilson score interval for `k` successes in `n` trials.
pub fn wilson_interval(k: u64, n: u64, z: f64) -> (f64, f64) {
    let nf = n as f64;
    let p = k as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = z / denom * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt();
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Outcome of comparing `lhs = P(diversified > t)` against `rhs = P(concentrated > t)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// Point estimates satisfy `lhs ≥ rhs` and the intervals do not separate
    /// in the wrong direction.
    Holds,
    /// The lower end of the `lhs` interval exceeds the upper end of `rhs`.
    HoldsStrictly,
    /// `lhs < rhs` in the point estimates, but the intervals overlap.
    Inconclusive,
    /// The upper end of `lhs` is below the lower end of `rhs`.
    Violated,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Holds => "holds",
            Verdict::HoldsStrictly => "holds_strictly",
            Verdict::Inconclusive => "inconclusive",
            Verdict::Violated => "violated",
        }
    }

    /// `holds` or `holds_strictly`.
    pub fn supports_dominance(self) -> bool {
        matches!(self, Verdict::Holds | Verdict::HoldsStrictly)
    }
}

/// An exceedance probability with its interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub lo: f64,
    pub hi: f64,
}

impl Estimate {
    pub fn from_counts(k: u64, n: u64) -> Self {
        let (lo, hi) = wilson_interval(k, n, Z_99);
        Estimate {
            value: k as f64 / n as f64,
            lo,
            hi,
        }
    }

    pub fn exact(value: f64) -> Self {
        Estimate {
            value,
            lo: value,
            hi: value,
        }
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.hi - self.lo)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DominanceRow {
    pub t: f64,
    pub lhs: Estimate,
    pub rhs: Estimate,
    pub verdict: Verdict,
}

impl DominanceRow {
    pub fn new(t: f64, lhs: Estimate, rhs: Estimate) -> Self {
        let verdict = if lhs.lo > rhs.hi {
            Verdict::HoldsStrictly
        } else if lhs.hi < rhs.lo {
            Verdict::Violated
        } else if lhs.value >= rhs.value {
            Verdict::Holds
        } else {
            Verdict::Inconclusive
        };
        DominanceRow { t, lhs, rhs, verdict }
    }

    pub fn gap(&self) -> f64 {
        self.lhs.value - self.rhs.value
    }
}

/// Counts of each verdict over the grid.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub holds: usize,
    pub holds_strictly: usize,
    pub inconclusive: usize,
    pub violated: usize,
}

impl Summary {
    /// The weakest verdict seen: any violation wins, then inconclusive, then
    /// plain holds.
    pub fn overall(&self) -> Verdict {
        if self.violated > 0 {
            Verdict::Violated
        } else if self.inconclusive > 0 {
            Verdict::Inconclusive
        } else if self.holds > 0 {
            Verdict::Holds
        } else {
            Verdict::HoldsStrictly
        }
    }
}

/// Per-threshold comparison of two exceedance curves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominanceReport {
    pub label: String,
    pub n_lhs: u64,
    /// Zero when the right-hand side is computed analytically.
    pub n_rhs: u64,
    pub rows: Vec<DominanceRow>,
    /// Every sampled path had `lhs` and `rhs` values exactly equal.
    pub pathwise_identical: bool,
}

pub const REPORT_CSV_HEADER: [&str; 9] =
    ["t", "lhs", "lhs_lo", "lhs_hi", "rhs", "rhs_lo", "rhs_hi", "gap", "verdict"];

impl DominanceReport {
    pub fn from_counts(
        label: impl Into<String>,
        grid: &[f64],
        lhs_counts: &[u64],
        n_lhs: u64,
        rhs: &[Estimate],
        n_rhs: u64,
        pathwise_identical: bool,
    ) -> Self {
        let rows = grid
            .iter()
            .zip(lhs_counts)
            .zip(rhs)
            .map(|((&t, &k), &r)| DominanceRow::new(t, Estimate::from_counts(k, n_lhs), r))
            .collect();
        DominanceReport {
            label: label.into(),
            n_lhs,
            n_rhs,
            rows,
            pathwise_identical,
        }
    }

    pub fn summary(&self) -> Summary {
        let mut s = Summary::default();
        for r in &self.rows {
            match r.verdict {
                Verdict::Holds => s.holds += 1,
                Verdict::HoldsStrictly => s.holds_strictly += 1,
                Verdict::Inconclusive => s.inconclusive += 1,
                Verdict::Violated => s.violated += 1,
            }
        }
        s
    }

    pub fn max_abs_gap(&self) -> f64 {
        self.rows.iter().map(|r| r.gap().abs()).fold(0.0, f64::max)
    }

    /// One CSV row per threshold.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(REPORT_CSV_HEADER)?;
        for r in &self.rows {
            w.write_record([
                r.t.to_string(),
                r.lhs.value.to_string(),
                r.lhs.lo.to_string(),
                r.lhs.hi.to_string(),
                r.rhs.value.to_string(),
                r.rhs.lo.to_string(),
                r.rhs.hi.to_string(),
                r.gap().to_string(),
                r.verdict.as_str().to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Counts of `#{value > grid[j]}` for a sorted grid, accumulated through a
/// histogram of grid positions.
#[derive(Debug, Clone)]
pub(crate) struct ExceedCounter {
    hist: Vec<u64>,
}

impl ExceedCounter {
    pub fn new(grid_len: usize) -> Self {
        ExceedCounter {
            hist: vec![0; grid_len + 1],
        }
    }

    #[inline]
    pub fn add(&mut self, grid: &[f64], value: f64) {
        // number of grid points strictly below the value
        self.hist[grid.partition_point(|&t| t < value)] += 1;
    }

    pub fn merge(mut self, other: Self) -> Self {
        for (a, b) in self.hist.iter_mut().zip(other.hist) {
            *a += b;
        }
        self
    }

    /// `counts[j] = #{value > grid[j]}`.
    pub fn counts(&self) -> Vec<u64> {
        let g = self.hist.len() - 1;
        let mut out = vec![0; g];
        let mut acc = 0;
        for j in (0..g).rev() {
            acc += self.hist[j + 1];
            out[j] = acc;
        }
        out
    }
}

/// `n` points between `lo` and `hi`, log-spaced when `lo > 0`.
pub fn spaced_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n)
        .map(|i| {
            let s = i as f64 / (n - 1) as f64;
            if lo > 0.0 {
                (lo.ln() + s * (hi.ln() - lo.ln())).exp()
            } else {
                lo + s * (hi - lo)
            }
        })
        .collect()
}
