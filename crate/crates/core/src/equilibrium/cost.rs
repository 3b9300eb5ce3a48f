use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A nonnegative convex cost `c` with `c(0) = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CostFunction {
    Zero,
    /// `λ|x|`.
    Linear { lambda: f64 },
    /// `λx²`.
    Quadratic { lambda: f64 },
    /// `λx₊`.
    ExcessOnly { lambda: f64 },
    /// `c(x) = ∫₀ˣ c'`, with `c'` interpolated linearly through the
    /// `(x, c'(x))` nodes and extended linearly past the end nodes. A node
    /// repeated at `x = 0` gives the left and then the right derivative there.
    PiecewiseConvex { derivative: Vec<(f64, f64)> },
}

/// Grid size of the strict-convexity check.
pub const CONVEXITY_GRID: usize = 128;

impl CostFunction {
    pub fn validate(&self) -> Result<()> {
        match self {
            CostFunction::Zero => Ok(()),
            CostFunction::Linear { lambda }
            | CostFunction::Quadratic { lambda }
            | CostFunction::ExcessOnly { lambda } => {
                if *lambda > 0.0 && lambda.is_finite() {
                    Ok(())
                } else {
                    Err(Error::param("cost", "lambda must be positive"))
                }
            }
            CostFunction::PiecewiseConvex { derivative: d } => {
                if d.len() < 2 {
                    return Err(Error::param("cost", "need at least two derivative nodes"));
                }
                if d.iter().any(|(x, s)| !x.is_finite() || !s.is_finite()) {
                    return Err(Error::param("cost", "nodes must be finite"));
                }
                for w in d.windows(2) {
                    let ((x0, s0), (x1, s1)) = (w[0], w[1]);
                    if x1 < x0 || (x1 == x0 && x0 != 0.0) {
                        return Err(Error::param(
                            "cost",
                            "node positions must increase; only x = 0 may repeat",
                        ));
                    }
                    if s1 < s0 {
                        return Err(Error::param("cost", "derivative must be nondecreasing"));
                    }
                }
                if d.iter().filter(|(x, _)| *x == 0.0).count() > 2 {
                    return Err(Error::param("cost", "x = 0 may appear at most twice"));
                }
                if d[0].0 == d[1].0 || d[d.len() - 1].0 == d[d.len() - 2].0 {
                    return Err(Error::param("cost", "end segments must have positive length"));
                }
                let (l, r) = (self.left_derivative(0.0), self.right_derivative(0.0));
                if !(l <= 0.0 && r >= 0.0) {
                    return Err(Error::param(
                        "cost",
                        "need c'(0−) ≤ 0 ≤ c'(0+) so that the cost is nonnegative",
                    ));
                }
                Ok(())
            }
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            CostFunction::Zero => 0.0,
            CostFunction::Linear { lambda } => lambda * x.abs(),
            CostFunction::Quadratic { lambda } => lambda * x * x,
            CostFunction::ExcessOnly { lambda } => lambda * x.max(0.0),
            CostFunction::PiecewiseConvex { derivative } => integrate(derivative, x),
        }
    }

    pub fn left_derivative(&self, x: f64) -> f64 {
        self.derivative(x, false)
    }

    pub fn right_derivative(&self, x: f64) -> f64 {
        self.derivative(x, true)
    }

    fn derivative(&self, x: f64, right: bool) -> f64 {
        let side = |lo: f64, hi: f64| {
            if x > 0.0 || (x == 0.0 && right) {
                hi
            } else {
                lo
            }
        };
        match self {
            CostFunction::Zero => 0.0,
            CostFunction::Linear { lambda } => side(-lambda, *lambda),
            CostFunction::Quadratic { lambda } => 2.0 * lambda * x,
            CostFunction::ExcessOnly { lambda } => side(0.0, *lambda),
            CostFunction::PiecewiseConvex { derivative } => node_derivative(derivative, x, right),
        }
    }

    /// Whether `c'` is strictly increasing on a 128-point grid over `[−2a, 2a]`.
    pub fn is_strictly_convex_on(&self, a: f64) -> bool {
        let n = CONVEXITY_GRID;
        let d: Vec<f64> = (0..n)
            .map(|j| self.right_derivative(-2.0 * a + 4.0 * a * j as f64 / (n - 1) as f64))
            .collect();
        d.windows(2).all(|w| w[1] > w[0])
    }
}

/// Linear interpolation of the derivative nodes. Between two nodes at the
/// same position (a kink at zero) `right` picks the second value.
fn node_derivative(nodes: &[(f64, f64)], x: f64, right: bool) -> f64 {
    let n = nodes.len();
    let seg = |i: usize| {
        let ((x0, s0), (x1, s1)) = (nodes[i], nodes[i + 1]);
        s0 + (s1 - s0) * (x - x0) / (x1 - x0)
    };
    if x < nodes[0].0 {
        return seg(0);
    }
    if x > nodes[n - 1].0 {
        return seg(n - 2);
    }
    // nodes with position ≤ x (or < x when looking left)
    let idx = if right {
        nodes.partition_point(|&(p, _)| p <= x)
    } else {
        nodes.partition_point(|&(p, _)| p < x)
    };
    if right {
        // last node at or below x
        let i = idx - 1;
        if nodes[i].0 == x {
            return nodes[i].1;
        }
        seg(i)
    } else {
        // first node at or above x
        let i = idx.min(n - 1);
        if nodes[i].0 == x {
            return nodes[i].1;
        }
        seg(i - 1)
    }
}

/// `∫₀ˣ c'` by the trapezoid rule between nodes, exact for a piecewise
/// linear derivative.
fn integrate(nodes: &[(f64, f64)], x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let (lo, hi, sign) = if x > 0.0 { (0.0, x, 1.0) } else { (x, 0.0, -1.0) };
    let mut pts = vec![lo];
    pts.extend(nodes.iter().map(|&(p, _)| p).filter(|&p| p > lo && p < hi));
    pts.push(hi);
    pts.dedup();
    let mut total = 0.0;
    for w in pts.windows(2) {
        let a = node_derivative(nodes, w[0], true);
        let b = node_derivative(nodes, w[1], false);
        total += 0.5 * (a + b) * (w[1] - w[0]);
    }
    sign * total
}
