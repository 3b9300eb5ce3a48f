use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::report::{DominanceReport, DominanceRow, Estimate};
use crate::dist::EmpiricalDistribution;
use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Two-sample comparison of empirical CDFs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalFsd {
    /// `lhs = P̂(B > t)`, `rhs = P̂(A > t)`; the gap is `F_a(t) − F_b(t)`.
    pub report: DominanceReport,
    /// `F_a ≥ F_b` at every grid point.
    pub dominance_holds: bool,
    /// Smallest grid point with `F_a < F_b`.
    pub first_violation: Option<f64>,
    /// Largest grid point with `F_a < F_b`.
    pub last_violation: Option<f64>,
    /// `max_t (F_b − F_a)₊` and where it is attained.
    pub max_violation: f64,
    pub max_violation_at: Option<f64>,
}

/// Does `A ≤_st B` hold empirically? Evaluates both empirical CDFs on `grid`,
/// by default the pooled sample points.
pub fn empirical_fsd(
    a: &EmpiricalDistribution,
    b: &EmpiricalDistribution,
    grid: Option<&[f64]>,
) -> EmpiricalFsd {
    let pooled;
    let grid = match grid {
        Some(g) => g,
        None => {
            let mut v: Vec<f64> = a.sorted().iter().chain(b.sorted()).copied().collect();
            v.sort_by(f64::total_cmp);
            v.dedup();
            pooled = v;
            &pooled
        }
    };
    let (na, nb) = (a.len() as u64, b.len() as u64);
    let mut rows = Vec::with_capacity(grid.len());
    let mut first = None;
    let mut last = None;
    let mut worst = 0.0;
    let mut worst_at = None;
    for &t in grid {
        let ka = na - a.sorted().partition_point(|&v| v <= t) as u64;
        let kb = nb - b.sorted().partition_point(|&v| v <= t) as u64;
        let row = DominanceRow::new(t, Estimate::from_counts(kb, nb), Estimate::from_counts(ka, na));
        let gap = row.gap();
        if gap < 0.0 {
            first.get_or_insert(t);
            last = Some(t);
            if -gap > worst {
                worst = -gap;
                worst_at = Some(t);
            }
        }
        rows.push(row);
    }
    EmpiricalFsd {
        report: DominanceReport {
            label: "P(B > t) vs P(A > t)".into(),
            n_lhs: nb,
            n_rhs: na,
            rows,
            pathwise_identical: false,
        },
        dominance_holds: first.is_none(),
        first_violation: first,
        last_violation: last,
        max_violation: worst,
        max_violation_at: worst_at,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DominanceTest {
    /// `√(nm/(n+m)) · sup_t (F_b(t) − F_a(t))₊`.
    pub statistic: f64,
    pub p_value: f64,
    pub n_boot: usize,
}

pub const MIN_BOOTSTRAP: usize = 100;
pub const DEFAULT_BOOTSTRAP: usize = 999;

/// One-sided test of `H0: A ≤_st B` (that is, `F_a ≥ F_b` everywhere).
///
/// The null law of the statistic is approximated by drawing both samples
/// with replacement from the pooled data, which enforces `F_a = F_b`.
/// The p-value is `(1 + #{T* ≥ T}) / (1 + n_boot)`.
pub fn one_sided_dominance_test(
    a: &[f64],
    b: &[f64],
    n_boot: usize,
    stream: RngStream,
) -> Result<DominanceTest> {
    if n_boot < MIN_BOOTSTRAP {
        return Err(Error::param("n_boot", format!("need at least {MIN_BOOTSTRAP} resamples")));
    }
    if a.is_empty() || b.is_empty() {
        return Err(Error::param("sample", "both samples must be nonempty"));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::param("sample", "values must be finite"));
    }
    let (n, m) = (a.len(), b.len());

    // rank every pooled value among the distinct pooled values
    let mut pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    pooled.sort_by(f64::total_cmp);
    let mut distinct = pooled.clone();
    distinct.dedup();
    let code = |v: f64| distinct.partition_point(|&d| d < v) as u32;
    let pooled_codes: Vec<u32> = pooled.iter().map(|&v| code(v)).collect();
    let a_codes: Vec<u32> = a.iter().map(|&v| code(v)).collect();
    let b_codes: Vec<u32> = b.iter().map(|&v| code(v)).collect();
    let levels = distinct.len();
    let scale = ((n * m) as f64 / (n + m) as f64).sqrt();

    let statistic = scale * sup_gap(&a_codes, &b_codes, levels, n, m);

    let exceed: usize = (0..n_boot)
        .into_par_iter()
        .map_init(
            || (vec![0u32; levels], vec![0u32; levels]),
            |(ha, hb), rep| {
                ha.fill(0);
                hb.fill(0);
                let mut g = stream.substream(rep as u64).at(0);
                for _ in 0..n {
                    ha[pooled_codes[g.index(n + m)] as usize] += 1;
                }
                for _ in 0..m {
                    hb[pooled_codes[g.index(n + m)] as usize] += 1;
                }
                let t = scale * sup_from_hist(ha, hb, n, m);
                usize::from(t >= statistic)
            },
        )
        .sum();
    Ok(DominanceTest {
        statistic,
        p_value: (1 + exceed) as f64 / (1 + n_boot) as f64,
        n_boot,
    })
}

fn sup_gap(a: &[u32], b: &[u32], levels: usize, n: usize, m: usize) -> f64 {
    let mut ha = vec![0u32; levels];
    let mut hb = vec![0u32; levels];
    for &c in a {
        ha[c as usize] += 1;
    }
    for &c in b {
        hb[c as usize] += 1;
    }
    sup_from_hist(&ha, &hb, n, m)
}

/// `sup (F_b − F_a)₊` from per-level counts.
fn sup_from_hist(ha: &[u32], hb: &[u32], n: usize, m: usize) -> f64 {
    let (nf, mf) = (n as f64, m as f64);
    let (mut ca, mut cb) = (0u64, 0u64);
    let mut best = 0.0_f64;
    for (x, y) in ha.iter().zip(hb) {
        ca += u64::from(*x);
        cb += u64::from(*y);
        best = best.max(cb as f64 / mf - ca as f64 / nf);
    }
    best
}
