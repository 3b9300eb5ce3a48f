//! VaR, ES, RVaR, distortion risk measures, and expected disutility.
//!
//! Everything quantile-based is evaluated from exact quantile integrals, so
//! infinite values come out as [`PosInfinity`] rather than as overflow.

mod distortion;
mod utility;

use serde::{Deserialize, Serialize};

pub use distortion::{is_degenerate_distortion, DistortionFn, WeightedDistortion, DEGENERACY_GRID};
pub use utility::{empirical_disutility, expected_disutility, DisutilityEstimate, MonotoneFn, DRIFT_TOLERANCE};

use crate::dist::LossDistribution;
use crate::error::{check_probability, Error, Result};
use crate::ext_real::{ExtendedReal, Finite, PosInfinity};
use crate::quadrature::{tanh_sinh, tanh_sinh_half_line};
use crate::tail;

/// A law-invariant risk functional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "measure", rename_all = "snake_case")]
pub enum RiskMeasureSpec {
    Var { p: f64 },
    Es { p: f64 },
    Rvar { p: f64, q: f64 },
    Distortion { h: DistortionFn },
    ExpectedDisutility { v: MonotoneFn },
}

/// Tail-index estimate at or below which a sample ES is flagged.
pub const ES_TAIL_WARNING: f64 = 1.2;

/// A risk value with any warnings raised while computing it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub value: ExtendedReal,
    pub warnings: Vec<String>,
}

impl RiskMeasureSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            RiskMeasureSpec::Var { p } | RiskMeasureSpec::Es { p } => check_probability("p", *p),
            RiskMeasureSpec::Rvar { p, q } => DistortionFn::RvarRamp { p: *p, q: *q }.validate(),
            RiskMeasureSpec::Distortion { h } => h.validate(),
            RiskMeasureSpec::ExpectedDisutility { v } => v.validate(),
        }
    }

    /// The distortion function when the measure has one.
    pub fn distortion_fn(&self) -> Option<DistortionFn> {
        match self {
            RiskMeasureSpec::Var { p } => Some(DistortionFn::VarStep { p: *p }),
            RiskMeasureSpec::Es { p } => Some(DistortionFn::EsRamp { p: *p }),
            RiskMeasureSpec::Rvar { p, q } => Some(DistortionFn::RvarRamp { p: *p, q: *q }),
            RiskMeasureSpec::Distortion { h } => Some(h.clone()),
            RiskMeasureSpec::ExpectedDisutility { .. } => None,
        }
    }

    /// Whether the measure is mildly monotone: weakly monotone and strictly
    /// larger on almost surely larger losses. ES counts as mildly monotone
    /// here; on infinite-mean losses it is `+∞` and compares nothing.
    pub fn is_mildly_monotone(&self) -> bool {
        match self {
            RiskMeasureSpec::ExpectedDisutility { v } => match *v {
                MonotoneFn::Linear { slope, .. } => slope > 0.0,
                MonotoneFn::Prospect { .. } => true,
                MonotoneFn::Constant { .. } | MonotoneFn::LimitedLiability { .. } => false,
            },
            _ => !is_degenerate_distortion(&self.distortion_fn().unwrap()),
        }
    }

    /// True for measures with `ρ(X + c) = ρ(X) + c`.
    pub fn is_translation_invariant(&self) -> bool {
        !matches!(self, RiskMeasureSpec::ExpectedDisutility { .. })
    }

    pub fn evaluate(&self, loss: &LossDistribution) -> Result<ExtendedReal> {
        Ok(self.evaluate_with_warnings(loss)?.value)
    }

    pub fn evaluate_with_warnings(&self, loss: &LossDistribution) -> Result<Evaluation> {
        self.validate()?;
        let plain = |value| Evaluation {
            value,
            warnings: vec![],
        };
        Ok(match self {
            RiskMeasureSpec::Var { p } => plain(Finite(var(loss, *p)?)),
            RiskMeasureSpec::Es { p } => es_with_warnings(loss, *p)?,
            RiskMeasureSpec::Rvar { p, q } => plain(Finite(rvar(loss, *p, *q)?)),
            RiskMeasureSpec::Distortion { h } => plain(distortion(loss, h)?),
            RiskMeasureSpec::ExpectedDisutility { v } => plain(disutility_exact(loss, v)?),
        })
    }
}

/// Left `p`-quantile.
pub fn var(loss: &LossDistribution, p: f64) -> Result<f64> {
    loss.quantile(p)
}

/// `(1/(1−p)) ∫_p^1 VaR_u du`, `+∞` for infinite-mean losses.
pub fn es(loss: &LossDistribution, p: f64) -> Result<ExtendedReal> {
    check_probability("p", p)?;
    Ok(loss.quantile_integral(p, 1.0).scale(1.0 / (1.0 - p)))
}

/// ES with a tail-index prescreen on empirical samples: a Hill estimate at or
/// below 1.2 (top 5% of the sample) raises a warning, because the sample ES
/// of such data does not settle.
pub fn es_with_warnings(loss: &LossDistribution, p: f64) -> Result<Evaluation> {
    let value = es(loss, p)?;
    let mut warnings = vec![];
    if let Some(e) = loss.as_empirical() {
        if let Ok(k) = tail::default_threshold_k(e.len()) {
            if let Ok(h) = tail::hill_estimator(e.sorted(), k) {
                if h.alpha_hat <= ES_TAIL_WARNING {
                    let msg = format!(
                        "sample ES is unreliable: Hill tail index estimate {:.3} ≤ {ES_TAIL_WARNING}",
                        h.alpha_hat
                    );
                    log::warn!("{msg}");
                    warnings.push(msg);
                }
            }
        }
    }
    Ok(Evaluation { value, warnings })
}

/// `(1/(q−p)) ∫_p^q VaR_u du` for `0 ≤ p < q < 1`.
pub fn rvar(loss: &LossDistribution, p: f64, q: f64) -> Result<f64> {
    DistortionFn::RvarRamp { p, q }.validate()?;
    Ok(loss.quantile_integral(p, q).to_f64() / (q - p))
}

/// Distortion risk measure from the quantile representation
/// `ρ(X) = ∫ VaR_{1−s}(X) dh(s)`, with each jump of `h` picking up the left
/// or right quantile as its side dictates.
pub fn distortion(loss: &LossDistribution, h: &DistortionFn) -> Result<ExtendedReal> {
    h.validate()?;
    let c = h.canonical();
    let mut total = Finite(0.0);
    for &(a, b, slope) in &c.pieces {
        if slope > 0.0 && b > a {
            total = total + loss.quantile_integral(1.0 - b, 1.0 - a).scale(slope);
        }
    }
    for &(s, at, after) in &c.jumps {
        for (w, q) in [
            (at, loss.right_quantile(1.0 - s)),
            (after, loss.left_quantile(1.0 - s)),
        ] {
            if w > 0.0 {
                if q == f64::NEG_INFINITY {
                    return Err(Error::Unsupported(
                        "risk value is −∞ (essential infimum of an unbounded-below loss)".into(),
                    ));
                }
                total = total + ExtendedReal::from_f64(q).unwrap().scale(w);
            }
        }
    }
    Ok(total)
}

/// Distortion risk measure from the survival-integral form
/// `∫_{−∞}^0 (h(P(X>x)) − 1) dx + ∫_0^∞ h(P(X>x)) dx`, by quadrature split at
/// the quantiles where `h ∘ S` has kinks. Meant for continuous laws; serves
/// as an independent route to [`distortion`].
pub fn distortion_survival_form(loss: &LossDistribution, h: &DistortionFn) -> Result<ExtendedReal> {
    h.validate()?;
    let c = h.canonical();
    let weight_near_zero = c.pieces.iter().any(|&(a, _, s)| a == 0.0 && s > 0.0)
        || c.jumps.iter().any(|&(s, _, after)| s == 0.0 && after > 0.0);
    let upper = loss.upper_endpoint();
    if weight_near_zero && loss.has_infinite_mean() {
        return Ok(PosInfinity);
    }
    if upper == f64::INFINITY && c.jumps.iter().any(|&(s, _, after)| s == 0.0 && after > 0.0) {
        return Ok(PosInfinity);
    }
    let lower = loss.lower_endpoint();

    let mut pts = vec![0.0];
    for b in c.breakpoints() {
        pts.push(loss.left_quantile(1.0 - b));
        pts.push(loss.right_quantile(1.0 - b));
    }
    pts.push(lower);
    pts.push(upper);
    pts.retain(|x| x.is_finite());
    pts.sort_by(f64::total_cmp);
    pts.dedup();

    let g = |x: f64| {
        let v = c.eval(loss.survival(x));
        if x < 0.0 {
            v - 1.0
        } else {
            v
        }
    };
    let tol = 1e-13;
    let mut total = 0.0;
    for w in pts.windows(2) {
        total += tanh_sinh(g, w[0], w[1], tol).0;
    }
    if lower == f64::NEG_INFINITY {
        let a = pts[0];
        total += tanh_sinh_half_line(|y| g(-y), -a, tol).0;
    }
    if upper == f64::INFINITY {
        let b = *pts.last().unwrap();
        total += tanh_sinh_half_line(g, b, tol).0;
    }
    ExtendedReal::from_f64(total).ok_or_else(|| Error::Numerical("survival integral is not a number".into()))
}

fn disutility_exact(loss: &LossDistribution, v: &MonotoneFn) -> Result<ExtendedReal> {
    if let Some(m) = empirical_disutility(loss, v) {
        return Ok(Finite(m));
    }
    if let MonotoneFn::Constant { value } = *v {
        return Ok(Finite(value));
    }
    if let (Some(r), Some(alpha)) = (v.growth_exponent(), loss.tail_index()) {
        if r >= alpha {
            return Ok(PosInfinity);
        }
    }
    // equal panels confine the damage of any kink in v ∘ Q to one panel
    let f = |u: f64| v.eval(loss.left_quantile(u));
    let panels = 64;
    let total: f64 = (0..panels)
        .map(|i| {
            let a = i as f64 / panels as f64;
            let b = (i + 1) as f64 / panels as f64;
            tanh_sinh(f, a, b, 1e-13).0
        })
        .sum();
    ExtendedReal::from_f64(total).ok_or_else(|| Error::Numerical("expected disutility is not a number".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::normal;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn reference_values() {
        let p2 = LossDistribution::pareto(2.0).unwrap();
        assert!(close(es(&p2, 0.75).unwrap().to_f64(), 4.0, 1e-14));
        assert_eq!(es(&LossDistribution::pareto(1.0).unwrap(), 0.3).unwrap(), PosInfinity);
        assert!(close(var(&LossDistribution::pareto(0.5).unwrap(), 0.75).unwrap(), 16.0, 1e-14));
        let n = LossDistribution::normal(0.0, 1.0).unwrap();
        assert!(close(rvar(&n, 0.0, 0.5).unwrap(), -normal::pdf(0.0) / 0.5, 1e-14));
        let g = LossDistribution::gpd(0.5, 1.0).unwrap();
        assert!(close(distortion(&g, &DistortionFn::Identity).unwrap().to_f64(), 2.0, 1e-14));
    }

    #[test]
    fn constant_loss_every_measure() {
        let c = LossDistribution::constant(3.5).unwrap();
        for h in [
            DistortionFn::Identity,
            DistortionFn::VarStep { p: 0.3 },
            DistortionFn::EsRamp { p: 0.9 },
            DistortionFn::Essinf,
            DistortionFn::Esssup,
        ] {
            assert!(close(distortion(&c, &h).unwrap().to_f64(), 3.5, 1e-15), "{h:?}");
        }
        assert!(close(es(&c, 0.2).unwrap().to_f64(), 3.5, 1e-15));
        assert_eq!(rvar(&c, 0.0, 0.7).unwrap(), 3.5);
    }

    #[test]
    fn named_distortions_match_direct_measures() {
        let x = LossDistribution::gpd(0.3, 2.0).unwrap();
        let v = distortion(&x, &DistortionFn::VarStep { p: 0.8 }).unwrap().to_f64();
        assert_eq!(v, var(&x, 0.8).unwrap());
        let e = distortion(&x, &DistortionFn::EsRamp { p: 0.8 }).unwrap().to_f64();
        assert!(close(e, es(&x, 0.8).unwrap().to_f64(), 1e-14));
        let r = distortion(&x, &DistortionFn::RvarRamp { p: 0.2, q: 0.9 }).unwrap().to_f64();
        assert!(close(r, rvar(&x, 0.2, 0.9).unwrap(), 1e-14));
    }

    #[test]
    fn survival_form_agrees() {
        let p2 = LossDistribution::pareto(2.0).unwrap();
        for p in [0.5, 0.75, 0.95] {
            let h = DistortionFn::EsRamp { p };
            let a = distortion(&p2, &h).unwrap().to_f64();
            let b = distortion_survival_form(&p2, &h).unwrap().to_f64();
            assert!((a - b).abs() < 1e-8, "p={p}: {a} vs {b}");
        }
        let n = LossDistribution::normal(1.0, 2.0).unwrap();
        let h = DistortionFn::RvarRamp { p: 0.1, q: 0.8 };
        let a = distortion(&n, &h).unwrap().to_f64();
        let b = distortion_survival_form(&n, &h).unwrap().to_f64();
        assert!((a - b).abs() < 1e-8, "{a} vs {b}");
    }

    #[test]
    fn essinf_of_normal_is_rejected() {
        let n = LossDistribution::normal(0.0, 1.0).unwrap();
        assert!(distortion(&n, &DistortionFn::Essinf).is_err());
        assert_eq!(distortion(&n, &DistortionFn::Esssup).unwrap(), PosInfinity);
    }

    #[test]
    fn sample_es_warning() {
        let x = LossDistribution::pareto(0.8).unwrap();
        let s = x.sample(5000, crate::rng::RngStream::new(1, 1));
        let e = LossDistribution::empirical(s).unwrap();
        let ev = es_with_warnings(&e, 0.9).unwrap();
        assert!(ev.value.is_finite());
        assert_eq!(ev.warnings.len(), 1);
        let thin = LossDistribution::normal(0.0, 1.0).unwrap().sample(5000, crate::rng::RngStream::new(1, 2));
        let ev = es_with_warnings(&LossDistribution::empirical(thin).unwrap(), 0.9).unwrap();
        assert!(ev.warnings.is_empty());
    }

    #[test]
    fn disutility_closed_cases() {
        let x = LossDistribution::pareto(1.0).unwrap().truncate(10.0).unwrap();
        let spec = RiskMeasureSpec::ExpectedDisutility { v: MonotoneFn::identity() };
        let m = spec.evaluate(&x).unwrap().to_f64();
        assert!(close(m, 1.0 + 10f64.ln(), 1e-9), "{m}");
        let heavy = LossDistribution::pareto(0.9).unwrap();
        assert_eq!(spec.evaluate(&heavy).unwrap(), PosInfinity);
    }
}
