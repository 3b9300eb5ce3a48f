use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A distortion function `h : [0,1] → [0,1]`, nondecreasing with `h(0) = 0`
/// and `h(1) = 1`, applied to survival probabilities.
///
/// Every supported form is piecewise linear with finitely many jumps, which
/// lets the induced risk measure be evaluated exactly from quantile integrals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DistortionFn {
    /// `h(t) = t`: the mean.
    Identity,
    /// `h(t) = 1{t > 1−p}`: VaR at level `p`.
    VarStep { p: f64 },
    /// `h(t) = min(t/(1−p), 1)`: ES at level `p`.
    EsRamp { p: f64 },
    /// `h(t) = min(max((t − (1−q))/(q−p), 0), 1)`: RVaR on `(p, q)`.
    RvarRamp { p: f64, q: f64 },
    /// `h(t) = 1{t = 1}`: the essential infimum.
    Essinf,
    /// `h(t) = 1{t > 0}`: the essential supremum.
    Esssup,
    /// Convex combination of distortions.
    Mixture { terms: Vec<WeightedDistortion> },
    /// Linear interpolation through `(t, h)` points. The first point is
    /// `(0, 0)` and the last `(1, 1)`. A `t` listed twice marks a jump: the
    /// first value is the left limit and the second the value at `t` and to
    /// its right.
    Table { points: Vec<(f64, f64)> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedDistortion {
    pub weight: f64,
    pub h: DistortionFn,
}

/// `h` split into linear pieces and jumps.
#[derive(Debug, Clone, Default)]
pub(crate) struct Canonical {
    /// `(a, b, slope)`: `h` gains `slope · (t − a)` on `[a, b]`.
    pub pieces: Vec<(f64, f64, f64)>,
    /// `(s, at, after)`: `h(s) − h(s−) = at` and `h(s+) − h(s) = after`.
    pub jumps: Vec<(f64, f64, f64)>,
}

impl Canonical {
    fn scaled(mut self, w: f64) -> Self {
        for p in &mut self.pieces {
            p.2 *= w;
        }
        for j in &mut self.jumps {
            j.1 *= w;
            j.2 *= w;
        }
        self
    }

    pub fn eval(&self, t: f64) -> f64 {
        let mut h = 0.0;
        for &(a, b, s) in &self.pieces {
            h += s * (t.clamp(a, b) - a);
        }
        for &(s0, at, after) in &self.jumps {
            if t >= s0 {
                h += at;
            }
            if t > s0 {
                h += after;
            }
        }
        h.clamp(0.0, 1.0)
    }

    /// Points where `h` is not linear.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self
            .pieces
            .iter()
            .flat_map(|&(a, b, _)| [a, b])
            .chain(self.jumps.iter().map(|j| j.0))
            .collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }
}

fn level(name: &'static str, p: f64) -> Result<()> {
    crate::error::check_probability(name, p)
}

impl DistortionFn {
    pub fn validate(&self) -> Result<()> {
        match self {
            DistortionFn::Identity | DistortionFn::Essinf | DistortionFn::Esssup => Ok(()),
            DistortionFn::VarStep { p } | DistortionFn::EsRamp { p } => level("p", *p),
            DistortionFn::RvarRamp { p, q } => {
                if !(*p >= 0.0 && p < q && *q < 1.0) {
                    return Err(Error::param("q", format!("need 0 ≤ p < q < 1, got p = {p}, q = {q}")));
                }
                Ok(())
            }
            DistortionFn::Mixture { terms } => {
                if terms.is_empty() {
                    return Err(Error::param("terms", "mixture must be nonempty"));
                }
                if terms.iter().any(|t| !(t.weight >= 0.0) || !t.weight.is_finite()) {
                    return Err(Error::param("terms", "weights must be nonnegative"));
                }
                let total: f64 = terms.iter().map(|t| t.weight).sum();
                if (total - 1.0).abs() > 1e-12 {
                    return Err(Error::param("terms", format!("weights sum to {total}, not 1")));
                }
                terms.iter().try_for_each(|t| t.h.validate())
            }
            DistortionFn::Table { points } => validate_table(points),
        }
    }

    pub(crate) fn canonical(&self) -> Canonical {
        let ramp = |a: f64, b: f64| Canonical {
            pieces: vec![(a, b, 1.0 / (b - a))],
            jumps: vec![],
        };
        match self {
            DistortionFn::Identity => ramp(0.0, 1.0),
            DistortionFn::VarStep { p } => Canonical {
                pieces: vec![],
                jumps: vec![(1.0 - p, 0.0, 1.0)],
            },
            DistortionFn::EsRamp { p } => ramp(0.0, 1.0 - p),
            DistortionFn::RvarRamp { p, q } => ramp(1.0 - q, 1.0 - p),
            DistortionFn::Essinf => Canonical {
                pieces: vec![],
                jumps: vec![(1.0, 1.0, 0.0)],
            },
            DistortionFn::Esssup => Canonical {
                pieces: vec![],
                jumps: vec![(0.0, 0.0, 1.0)],
            },
            DistortionFn::Mixture { terms } => {
                let mut c = Canonical::default();
                for t in terms {
                    let part = t.h.canonical().scaled(t.weight);
                    c.pieces.extend(part.pieces);
                    c.jumps.extend(part.jumps);
                }
                c
            }
            DistortionFn::Table { points } => {
                let mut c = Canonical::default();
                for w in points.windows(2) {
                    let ((t0, h0), (t1, h1)) = (w[0], w[1]);
                    if t1 > t0 {
                        if h1 > h0 {
                            c.pieces.push((t0, t1, (h1 - h0) / (t1 - t0)));
                        }
                    } else if h1 > h0 {
                        // a jump at 0 can only happen to the right of 0
                        if t0 == 0.0 {
                            c.jumps.push((t0, 0.0, h1 - h0));
                        } else {
                            c.jumps.push((t0, h1 - h0, 0.0));
                        }
                    }
                }
                c
            }
        }
    }

    /// `h(t)` for `t ∈ [0, 1]`; exact at the endpoints.
    pub fn eval(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        if t >= 1.0 {
            return 1.0;
        }
        self.canonical().eval(t)
    }
}

fn validate_table(points: &[(f64, f64)]) -> Result<()> {
    let bad = |r: &str| Err(Error::param("points", r.to_string()));
    if points.len() < 2 {
        return bad("need at least two points");
    }
    if points.iter().any(|&(t, h)| !t.is_finite() || !h.is_finite()) {
        return bad("points must be finite");
    }
    if points[0] != (0.0, 0.0) {
        return bad("the first point must be (0, 0)");
    }
    if *points.last().unwrap() != (1.0, 1.0) {
        return bad("the last point must be (1, 1)");
    }
    for w in points.windows(2) {
        if w[1].0 < w[0].0 || w[1].1 < w[0].1 {
            return bad("t and h must be nondecreasing");
        }
    }
    for w in points.windows(3) {
        if w[0].0 == w[1].0 && w[1].0 == w[2].0 {
            return bad("a t value may appear at most twice");
        }
    }
    Ok(())
}

/// Grid resolution of the degeneracy classifier.
pub const DEGENERACY_GRID: usize = 4096;

/// True iff `h` is constant on the open interval (0, 1), i.e. the induced
/// risk measure is a mixture of the essential infimum and supremum and is not
/// mildly monotone.
///
/// Checks 4096 interior grid points plus every declared breakpoint and a
/// point on each side of it.
pub fn is_degenerate_distortion(h: &DistortionFn) -> bool {
    let c = h.canonical();
    let mut ts: Vec<f64> = (1..=DEGENERACY_GRID)
        .map(|i| i as f64 / (DEGENERACY_GRID + 1) as f64)
        .collect();
    for b in c.breakpoints() {
        for t in [b * (1.0 - 1e-9), b, b + (1.0 - b) * 1e-9] {
            if t > 0.0 && t < 1.0 {
                ts.push(t);
            }
        }
    }
    let h0 = c.eval(ts[0]);
    ts.iter().all(|&t| (c.eval(t) - h0).abs() <= 1e-14)
}
