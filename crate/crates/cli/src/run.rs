use std::path::Path;

use heavytail::data_io::{comonotonic_sum, independent_sum};
use heavytail::dependence::Copula;
use heavytail::dist::{convolve_iid, EmpiricalDistribution, Marginal};
use heavytail::dominance::{
    collective_risk_experiment, default_grid, empirical_fsd, one_sided_dominance_test, penalty_experiment,
    truncated_penalty_experiment, DominanceReport, REPORT_CSV_HEADER,
};
use heavytail::equilibrium::{
    best_response_check, es_finite_mean_equilibrium, external_equilibrium, identity_allocation,
    internal_equilibrium, validate_internal_equilibrium,
};
use heavytail::portfolio::{evaluate_position, optimize_position, var_superadditivity_report};
use heavytail::tail::{default_threshold_k, hill_estimator, hill_plot, write_hill_csv};
use heavytail::{LossDistribution, RngStream};
use serde_json::{json, Value};

use crate::descriptor::*;
use crate::CliError;

/// What an experiment produced.
pub struct Artifact {
    pub summary: String,
    pub json: Value,
    pub csv: Option<Vec<u8>>,
}

fn to_json<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable")
}

fn report_csv(report: &DominanceReport) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    report.write_csv(&mut buf)?;
    Ok(buf)
}

fn summarize(report: &DominanceReport) -> String {
    let s = report.summary();
    format!(
        "{} thresholds: {} holds_strictly, {} holds, {} inconclusive, {} violated; max |gap| {:.6}",
        report.rows.len(),
        s.holds_strictly,
        s.holds,
        s.inconclusive,
        s.violated,
        report.max_abs_gap()
    )
}

pub fn run(d: &Descriptor, base: &Path) -> Result<Artifact, CliError> {
    let n_mc = d.n_mc.unwrap_or(DEFAULT_N_MC);
    let stream = RngStream::new(d.seed, 0);
    match d.kind {
        Kind::Dominance => {
            let p: DominanceParams = d.params()?;
            let copula = Copula::new(p.copula.clone(), p.theta.len())?;
            let grid = p.grid.clone().unwrap_or_else(|| default_grid(&p.marginal));
            let report = match p.convolve {
                None | Some(1) => penalty_experiment(&p.marginal, &copula, &p.theta, &grid, n_mc, stream, p.arm)?,
                Some(m) => {
                    let s = convolve_iid(&p.marginal, m)?;
                    penalty_experiment(&s as &dyn Marginal, &copula, &p.theta, &grid, n_mc, stream, p.arm)?
                }
            };
            Ok(Artifact {
                summary: format!("dominance: {}", summarize(&report)),
                csv: Some(report_csv(&report)?),
                json: json!({ "summary": report.summary(), "report": report }),
            })
        }
        Kind::Truncated => {
            let p: TruncatedParams = d.params()?;
            let copula = Copula::new(p.copula.clone(), p.theta.len())?;
            let r = truncated_penalty_experiment(
                &p.marginal, &copula, &p.theta, &p.caps, &p.grid, &p.var_levels, n_mc, stream,
            )?;
            let separated = r.var.iter().filter(|v| v.separated).count();
            Ok(Artifact {
                summary: format!(
                    "truncated: c = {}, indicator mismatches {}/{}, VaR separated at {}/{} levels",
                    r.c,
                    r.indicator_mismatches,
                    r.indicator_checks,
                    separated,
                    r.var.len()
                ),
                csv: Some(report_csv(&r.exceedance)?),
                json: to_json(&r),
            })
        }
        Kind::Collective => {
            let p: CollectiveParams = d.params()?;
            let grid = p.grid.clone().unwrap_or_else(|| default_grid(&p.marginal));
            let r = collective_risk_experiment(&p.marginal, &p.weight_law, &p.count_law, &grid, n_mc, stream)?;
            let mut buf = Vec::new();
            {
                let mut w = csv::Writer::from_writer(&mut buf);
                let mut header = vec!["form"];
                header.extend(REPORT_CSV_HEADER);
                w.write_record(&header).map_err(heavytail::Error::from)?;
                for (form, rep) in [("average", &r.average_loss), ("weighted_sum", &r.weighted_sum)] {
                    for row in &rep.rows {
                        w.write_record([
                            form.to_string(),
                            row.t.to_string(),
                            row.lhs.value.to_string(),
                            row.lhs.lo.to_string(),
                            row.lhs.hi.to_string(),
                            row.rhs.value.to_string(),
                            row.rhs.lo.to_string(),
                            row.rhs.hi.to_string(),
                            row.gap().to_string(),
                            row.verdict.as_str().to_string(),
                        ])
                        .map_err(heavytail::Error::from)?;
                    }
                }
                w.flush()?;
            }
            Ok(Artifact {
                summary: format!(
                    "collective: P(N>=2) = {}; average form {}; weighted-sum form {}",
                    r.prob_at_least_two,
                    summarize(&r.average_loss),
                    summarize(&r.weighted_sum)
                ),
                csv: Some(buf),
                json: to_json(&r),
            })
        }
        Kind::Portfolio => {
            let p: PortfolioParams = d.params()?;
            let opt = optimize_position(&p.problem, n_mc, stream.substream(0))?;
            let eval = match &p.evaluate {
                Some(w) => Some(evaluate_position(&p.problem, w, n_mc, stream.substream(1))?),
                None => None,
            };
            Ok(Artifact {
                summary: format!("portfolio: optimum w = {:?}, value {}", opt.w, opt.value.to_f64()),
                csv: None,
                json: json!({ "optimum": opt, "evaluation": eval }),
            })
        }
        Kind::Superadd => {
            let p: SuperaddParams = d.params()?;
            let n = p.losses.len();
            let theta = p.theta.clone().unwrap_or_else(|| vec![1.0 / n.max(1) as f64; n]);
            let r = var_superadditivity_report(&p.losses, &theta, &p.p_grid, n_mc, stream)?;
            let mut buf = Vec::new();
            r.write_csv(&mut buf)?;
            Ok(Artifact {
                summary: format!(
                    "superadd ({}): {} levels, separated {}, gap increasing {}",
                    r.label,
                    r.rows.len(),
                    r.separated,
                    r.gap_increasing
                ),
                csv: Some(buf),
                json: to_json(&r),
            })
        }
        Kind::EquilibriumInternal => {
            let p: InternalParams = d.params()?;
            let outcome = internal_equilibrium(&p.market)?;
            let n = p.market.exposures.len();
            let prices = p
                .prices
                .clone()
                .or_else(|| outcome.equilibrium.as_ref().map(|e| e.prices.clone()));
            let diagnostics = match prices {
                Some(prices) => {
                    let alloc = p.allocation.clone().unwrap_or_else(|| identity_allocation(&p.market.exposures));
                    Some(validate_internal_equilibrium(&p.market, &prices, &alloc)?)
                }
                None => None,
            };
            let passed = diagnostics.as_ref().map(|d| d.all_pass());
            Ok(Artifact {
                summary: format!(
                    "equilibrium_internal: {} agents, status {}, interval {:?}, validation {:?}",
                    n,
                    outcome.status,
                    outcome.interval.map(|i| (i.lo, i.hi)),
                    passed
                ),
                csv: None,
                json: json!({ "outcome": outcome, "diagnostics": diagnostics }),
            })
        }
        Kind::EquilibriumExternal => {
            let p: ExternalParams = d.params()?;
            let r = external_equilibrium(&p.market, p.tol)?;
            let br = best_response_check(&p.market, &r, p.best_response_points)?;
            Ok(Artifact {
                summary: format!(
                    "equilibrium_external: case {}, p = {}, u* = {}, w* = {}",
                    r.case.as_str(),
                    r.price,
                    r.external.first().map_or(0.0, |h| h.amount),
                    r.internal.first().map_or(0.0, |h| h.amount)
                ),
                csv: None,
                json: json!({ "p": r.price, "result": r, "best_response": br }),
            })
        }
        Kind::EquilibriumEs => {
            let p: EsParams = d.params()?;
            let r = es_finite_mean_equilibrium(&p.exposures, &p.marginal, p.q, n_mc, stream)?;
            Ok(Artifact {
                summary: format!(
                    "equilibrium_es: prices {:?}, Euler residual {:.3e} (se {:.3e})",
                    r.prices, r.euler_residual, r.euler_se
                ),
                csv: None,
                json: to_json(&r),
            })
        }
        Kind::Hill => {
            let p: HillParams = d.params()?;
            let sample = p.data.load(base)?;
            let series = match (p.k, p.k_min, p.k_max) {
                (Some(k), None, None) => vec![hill_estimator(&sample, k)?],
                (None, Some(lo), Some(hi)) => hill_plot(&sample, lo, hi)?,
                (None, None, None) => vec![hill_estimator(&sample, default_threshold_k(sample.len())?)?],
                _ => {
                    return Err(CliError::Validation(
                        "hill parameters: give either k, or both k_min and k_max".into(),
                    ))
                }
            };
            let mut buf = Vec::new();
            write_hill_csv(&series, &mut buf)?;
            let head = series
                .first()
                .map(|r| format!("k = {}: alpha_hat {:.4} ({:.4}, {:.4})", r.k, r.alpha_hat, r.ci_low, r.ci_high))
                .unwrap_or_default();
            Ok(Artifact {
                summary: format!("hill: n = {}, {} estimates; {}", sample.len(), series.len(), head),
                csv: Some(buf),
                json: to_json(&series),
            })
        }
        Kind::EmpiricalCompare => {
            let p: EmpiricalParams = d.params()?;
            let f1 = EmpiricalDistribution::new(p.first.load(base)?)?;
            let f2 = EmpiricalDistribution::new(p.second.load(base)?)?;
            if p.n_out == 0 {
                return Err(CliError::Validation("n_out must be positive".into()));
            }
            let como: LossDistribution = comonotonic_sum(&f1, &f2)?;
            let como_sample = como.sample(p.n_out, stream.substream(0));
            let indep_sample = independent_sum(&f1, &f2, p.n_out, stream.substream(1));
            let a = EmpiricalDistribution::new(como_sample.clone())?;
            let b = EmpiricalDistribution::new(indep_sample.clone())?;
            let fsd = empirical_fsd(&a, &b, p.grid.as_deref());
            let test = one_sided_dominance_test(&como_sample, &indep_sample, p.n_boot, stream.substream(2))?;
            Ok(Artifact {
                summary: format!(
                    "empirical_compare: comonotone <=_st independent {} on the grid; first violation {:?}; p-value {}",
                    if fsd.dominance_holds { "holds" } else { "fails" },
                    fsd.first_violation,
                    test.p_value
                ),
                csv: Some(report_csv(&fsd.report)?),
                json: json!({ "comparison": fsd, "test": test }),
            })
        }
    }
}
