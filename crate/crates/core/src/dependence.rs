//! Joint samplers for identically distributed losses.
//!
//! Every row consumes a fixed block of uniforms: one mixture selector
//! followed by one group of `k` uniforms per coordinate, where `k` is the
//! number of uniforms the marginal needs per draw. The row layout never
//! depends on the copula branch taken, so rows can be regenerated by seeking.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::dist::Marginal;
use crate::error::{Error, Result};
use crate::normal;
use crate::rng::{map_blocks, RngStream, UniformSource};

/// JSON form of a dependence structure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum CopulaSpec {
    Independence,
    Comonotone,
    Mixture {
        weights: Vec<f64>,
        components: Vec<CopulaSpec>,
    },
    /// Gaussian copula with nonpositive correlations; `corr` is row-major `d × d`.
    GaussianNsd { corr: Vec<f64> },
}

const WEIGHT_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
enum Node {
    Independence,
    Comonotone,
    Mixture { cumulative: Vec<f64>, components: Vec<Node> },
    // lower-triangular-in-pivot-order factor F with corr = F Fᵀ, row-major d × d
    Gaussian { factor: Vec<f64> },
}

/// A validated copula for a fixed dimension.
#[derive(Debug, Clone)]
pub struct Copula {
    spec: CopulaSpec,
    dim: usize,
    root: Node,
}

impl Copula {
    pub fn new(spec: CopulaSpec, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::param("d", "dimension must be at least 1"));
        }
        let root = compile(&spec, dim)?;
        Ok(Copula { spec, dim, root })
    }

    pub fn independence(dim: usize) -> Self {
        Self::new(CopulaSpec::Independence, dim).expect("valid")
    }

    pub fn comonotone(dim: usize) -> Self {
        Self::new(CopulaSpec::Comonotone, dim).expect("valid")
    }

    pub fn spec(&self) -> &CopulaSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Uniforms consumed per row when each coordinate needs `k`.
    pub fn row_width(&self, k: usize) -> usize {
        1 + self.dim * k
    }

    /// Draws one row into `out` (length `dim`). `scratch` is resized as needed.
    pub fn draw_row<M: Marginal + ?Sized>(
        &self,
        marginal: &M,
        g: &mut UniformSource,
        scratch: &mut Vec<f64>,
        out: &mut [f64],
    ) {
        let k = marginal.draws();
        scratch.resize(self.row_width(k), 0.0);
        g.fill(scratch);
        let (sel, groups) = scratch.split_first_mut().unwrap();
        apply(&self.root, *sel, groups, k, marginal, out);
    }
}

fn compile(spec: &CopulaSpec, dim: usize) -> Result<Node> {
    Ok(match spec {
        CopulaSpec::Independence => Node::Independence,
        CopulaSpec::Comonotone => Node::Comonotone,
        CopulaSpec::Mixture { weights, components } => {
            if weights.is_empty() || weights.len() != components.len() {
                return Err(Error::param(
                    "weights",
                    "mixture needs one weight per component and at least one component",
                ));
            }
            if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
                return Err(Error::param("weights", "weights must be nonnegative"));
            }
            let total: f64 = weights.iter().sum();
            if (total - 1.0).abs() > WEIGHT_TOL {
                return Err(Error::param(
                    "weights",
                    format!("mixture weights sum to {total}, not 1"),
                ));
            }
            let mut acc = 0.0;
            let cumulative = weights
                .iter()
                .map(|w| {
                    acc += w;
                    acc
                })
                .collect();
            let components = components
                .iter()
                .map(|c| compile(c, dim))
                .collect::<Result<_>>()?;
            Node::Mixture {
                cumulative,
                components,
            }
        }
        CopulaSpec::GaussianNsd { corr } => Node::Gaussian {
            factor: factor_nsd(corr, dim)?,
        },
    })
}

fn apply<M: Marginal + ?Sized>(
    node: &Node,
    sel: f64,
    groups: &mut [f64],
    k: usize,
    marginal: &M,
    out: &mut [f64],
) {
    match node {
        Node::Independence => {
            for (i, o) in out.iter_mut().enumerate() {
                *o = marginal.from_uniforms(&groups[i * k..(i + 1) * k]);
            }
        }
        Node::Comonotone => {
            let v = marginal.from_uniforms(&groups[..k]);
            out.fill(v);
        }
        Node::Mixture {
            cumulative,
            components,
        } => {
            // zero-weight components are skipped because their cumulative
            // weight equals the previous one
            let last = cumulative.len() - 1;
            let j = cumulative.partition_point(|&c| c <= sel).min(last);
            let lo = if j == 0 { 0.0 } else { cumulative[j - 1] };
            let w = cumulative[j] - lo;
            let inner = if w > 0.0 {
                ((sel - lo) / w).clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
            } else {
                0.5
            };
            apply(&components[j], inner, groups, k, marginal, out);
        }
        Node::Gaussian { factor } => {
            let d = out.len();
            let z: Vec<f64> = (0..d).map(|i| normal::quantile(groups[i * k])).collect();
            for i in 0..d {
                let y: f64 = (0..d).map(|j| factor[i * d + j] * z[j]).sum();
                groups[i * k] = normal::cdf(y).clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0);
            }
            apply(&Node::Independence, sel, groups, k, marginal, out);
        }
    }
}

/// Validates a nonpositive-correlation matrix and returns `F` with `C = F Fᵀ`.
///
/// Pivoted Cholesky: at each step the largest remaining diagonal entry is
/// eliminated first. Once it falls below `1e-12` the remainder must vanish;
/// otherwise the matrix is not positive semidefinite. The factor is finally
/// checked by reconstruction.
fn factor_nsd(corr: &[f64], dim: usize) -> Result<Vec<f64>> {
    let bad = |r: String| Err(Error::param("corr", r));
    if corr.len() != dim * dim {
        return bad(format!(
            "expected {} entries for a {dim}×{dim} matrix, got {}",
            dim * dim,
            corr.len()
        ));
    }
    if corr.iter().any(|v| !v.is_finite()) {
        return bad("entries must be finite".into());
    }
    for i in 0..dim {
        if (corr[i * dim + i] - 1.0).abs() > 1e-12 {
            return bad(format!("diagonal entry {i} is not 1"));
        }
        for j in 0..dim {
            if i != j {
                let v = corr[i * dim + j];
                if v > 0.0 {
                    return bad(format!("entry ({i},{j}) = {v} is positive"));
                }
                if (v - corr[j * dim + i]).abs() > 1e-12 {
                    return bad("matrix is not symmetric".into());
                }
            }
        }
    }

    let mut a = corr.to_vec();
    let mut perm: Vec<usize> = (0..dim).collect();
    // l is in pivoted order, row-major
    let mut l = vec![0.0; dim * dim];
    let tol = 1e-12;
    let mut rank = dim;
    for k in 0..dim {
        let (p, &dmax) = (k..dim)
            .map(|i| (i, &a[perm[i] * dim + perm[i]]))
            .max_by(|x, y| x.1.total_cmp(y.1))
            .unwrap();
        if dmax <= tol {
            rank = k;
            break;
        }
        perm.swap(k, p);
        l.swap_rows(dim, k, p);
        let pk = perm[k];
        let piv = dmax.sqrt();
        l[k * dim + k] = piv;
        for i in k + 1..dim {
            let pi = perm[i];
            l[i * dim + k] = a[pi * dim + pk] / piv;
        }
        for i in k + 1..dim {
            for j in k + 1..dim {
                let (pi, pj) = (perm[i], perm[j]);
                a[pi * dim + pj] -= l[i * dim + k] * l[j * dim + k];
            }
        }
    }
    for i in rank..dim {
        for j in rank..dim {
            let v = a[perm[i] * dim + perm[j]];
            if v.abs() > 1e-9 {
                return bad("matrix is not positive semidefinite".into());
            }
        }
    }

    // undo the pivoting: F[perm[i], :] = L[i, :]
    let mut f = vec![0.0; dim * dim];
    for i in 0..dim {
        f[perm[i] * dim..perm[i] * dim + dim].copy_from_slice(&l[i * dim..i * dim + dim]);
    }
    for i in 0..dim {
        for j in 0..dim {
            let v: f64 = (0..dim).map(|c| f[i * dim + c] * f[j * dim + c]).sum();
            if (v - corr[i * dim + j]).abs() > 1e-9 {
                return bad("matrix is not positive semidefinite".into());
            }
        }
    }
    Ok(f)
}

trait SwapRows {
    fn swap_rows(&mut self, width: usize, a: usize, b: usize);
}

impl SwapRows for Vec<f64> {
    fn swap_rows(&mut self, width: usize, a: usize, b: usize) {
        if a != b {
            for c in 0..width {
                self.swap(a * width + c, b * width + c);
            }
        }
    }
}

/// `n` rows of `d` coordinates, each marginally distributed as `marginal`.
pub fn sample_joint<M: Marginal + ?Sized>(
    marginal: &M,
    copula: &Copula,
    n: usize,
    stream: RngStream,
) -> Array2<f64> {
    let d = copula.dim();
    let width = copula.row_width(marginal.draws()) as u64;
    let blocks = map_blocks(
        n,
        |rows| {
            let mut g = stream.row(rows.start as u64, width);
            let mut scratch = Vec::new();
            let mut out = vec![0.0; rows.len() * d];
            for chunk in out.chunks_mut(d) {
                copula.draw_row(marginal, &mut g, &mut scratch, chunk);
            }
            out
        },
        |mut a, b| {
            a.extend(b);
            a
        },
    )
    .unwrap_or_default();
    Array2::from_shape_vec((n, d), blocks).expect("shape")
}
