//! Acceptance checks. Each test prints one `PASS`/`FAIL` line; run with
//! `cargo test -p heavytail --test acceptance -- --nocapture`.

use std::time::{Duration, Instant};

use heavytail::dependence::Copula;
use heavytail::dominance::{
    one_sided_dominance_test, penalty_experiment, truncated_penalty_experiment, wilson_interval, ConcentratedArm,
    Verdict,
};
use heavytail::equilibrium::{
    best_response_check, es_finite_mean_equilibrium, external_equilibrium, identity_allocation,
    internal_equilibrium, normal_rvar_two_agent_check, validate_internal_equilibrium, CostFunction,
    ExternalMarketSpec, InternalMarketSpec, MarketCase, RiskValue,
};
use heavytail::portfolio::var_superadditivity_report;
use heavytail::risk::{is_degenerate_distortion, DistortionFn, RiskMeasureSpec, WeightedDistortion};
use heavytail::tail::hill_estimator;
use heavytail::{LossDistribution, RngStream};
use proptest::strategy::{Strategy, ValueTree};

fn verdict(criterion: u32, ok: bool, detail: String) {
    println!("{} criterion {criterion}: {detail}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "criterion {criterion}: {detail}");
}

fn pareto(alpha: f64) -> LossDistribution {
    LossDistribution::pareto(alpha).unwrap()
}

fn pareto1_pair_survival(s: f64) -> f64 {
    2.0 / s + 2.0 / (s * s) * (s - 1.0).ln()
}

#[test]
fn c01_convolution_oracle() {
    let start = Instant::now();
    let n = 1_000_000;
    let grid = [1.25, 2.0, 5.0];
    let r = penalty_experiment(
        &pareto(1.0),
        &Copula::independence(2),
        &[0.5, 0.5],
        &grid,
        n,
        RngStream::new(1, 0),
        ConcentratedArm::Analytic,
    )
    .unwrap();
    let elapsed = start.elapsed();
    let mut ok = elapsed < Duration::from_secs(30);
    let mut parts = Vec::new();
    for row in &r.rows {
        let exact = pareto1_pair_survival(2.0 * row.t);
        let k = (row.lhs.value * n as f64).round() as u64;
        let (lo, hi) = wilson_interval(k, n as u64, 3.0);
        let inside = lo <= exact && exact <= hi;
        let strict = row.verdict == Verdict::HoldsStrictly && row.rhs.value == 1.0 / row.t;
        ok &= inside && strict;
        parts.push(format!("t={} mc={:.6} exact={exact:.6} 1/t={:.4}", row.t, row.lhs.value, 1.0 / row.t));
    }
    verdict(1, ok, format!("{}; {:.2?}", parts.join(", "), elapsed));
}

#[test]
fn c02_truncation_identity() {
    let r = truncated_penalty_experiment(
        &pareto(1.0),
        &Copula::independence(2),
        &[0.5, 0.5],
        &[10.0, 10.0],
        &[1.25, 2.0, 3.0, 4.0, 4.9],
        &[0.75, 0.9],
        1_000_000,
        RngStream::new(2, 0),
    )
    .unwrap();
    let in_region = r.var.iter().find(|v| v.p == 0.75).unwrap();
    let at_90 = r.var.iter().find(|v| v.p == 0.9).unwrap();
    println!(
        "     criterion 2 (info): P(X <= c) = {}; VaR_0.75 diversified [{:.4}, {:.4}] vs {:.4}",
        r.region_bound, in_region.diversified.lo, in_region.diversified.hi, in_region.weighted_sum
    );
    let ok = r.identity_holds() && r.indicator_checks == 5_000_000 && in_region.separated && at_90.separated;
    verdict(
        2,
        ok,
        format!(
            "indicator mismatches {}/{}; VaR_0.9 diversified [{:.4}, {:.4}] vs weighted sum {:.4} (in region: {})",
            r.indicator_mismatches, r.indicator_checks, at_90.diversified.lo, at_90.diversified.hi,
            at_90.weighted_sum, at_90.in_region
        ),
    );
}

fn quadratic(k: usize) -> ExternalMarketSpec {
    ExternalMarketSpec {
        n: 1,
        k,
        a: 2.0,
        rho_internal: RiskValue::Value(4.0),
        rho_external: RiskValue::Value(2.0),
        cost_internal: CostFunction::Quadratic { lambda: 1.0 },
        cost_external: CostFunction::Quadratic { lambda: 1.0 },
    }
}

#[test]
fn c03_external_closed_form() {
    let start = Instant::now();
    let r = external_equilibrium(&quadratic(1), None).unwrap();
    let (u, w) = (r.external[0].amount, r.internal[0].amount);
    let mut ok = r.case == MarketCase::PartialShare
        && (r.price - 3.0).abs() <= 1e-8
        && (u - 0.5).abs() <= 1e-8
        && (w - 1.5).abs() <= 1e-8;
    let mut last: Option<(f64, f64, f64)> = None;
    for k in 1..=64 {
        let r = external_equilibrium(&quadratic(k), None).unwrap();
        let kf = k as f64;
        // λ_I = λ_E = 1: p = (2k + 4)/(k + 1), u* = 1/(k + 1)
        let u = r.external[0].amount;
        ok &= (r.price - (2.0 * kf + 4.0) / (kf + 1.0)).abs() <= 1e-8 && (u - 1.0 / (kf + 1.0)).abs() <= 1e-8;
        if let Some((p0, u0, ku0)) = last {
            ok &= r.price < p0 && u < u0 && kf * u > ku0;
        }
        last = Some((r.price, u, kf * u));
    }
    let elapsed = start.elapsed();
    ok &= elapsed < Duration::from_secs(1);
    verdict(
        3,
        ok,
        format!("{} p={} u*={u} w*={w}; k sweep 1..64 monotone; {elapsed:.2?}", r.case.as_str(), r.price),
    );
}

fn expected_cases(spec: &ExternalMarketSpec) -> Vec<MarketCase> {
    let rho_i = spec.rho_internal.resolve().unwrap();
    let rho_e = spec.rho_external.resolve().unwrap();
    let l_e = |b: f64| spec.cost_external.right_derivative(b) + rho_e;
    let l_i = |b: f64| spec.cost_internal.left_derivative(b) + rho_i;
    let cap = spec.a / spec.k as f64;
    let mut cases = Vec::new();
    if l_e(cap) < l_i(-spec.a) {
        cases.push(MarketCase::TransferAll);
    }
    if l_e(0.0) >= l_i(0.0) {
        cases.push(MarketCase::NoTrade);
    }
    if l_e(0.0) < l_i(0.0) && l_e(cap) >= l_i(-spec.a) {
        cases.push(MarketCase::PartialShare);
    }
    cases
}

#[test]
fn c04_case_partition() {
    let mut runner = proptest::test_runner::TestRunner::deterministic();
    let slopes = || (0.0f64..1.0, 0.1f64..3.0, 0.1f64..3.0);
    let strat = (
        (1usize..16, 1usize..5),
        (0.5f64..10.0, 0.5f64..10.0, 0.5f64..5.0),
        (proptest::bool::ANY, 0.1f64..5.0, 0.1f64..5.0),
        (slopes(), slopes()),
    );
    let mut counts = [0usize; 3];
    let mut failures = 0;
    for _ in 0..1000 {
        let ((k, n), (rho_i, rho_e, a), (quad, li, le), (s, t)) =
            ValueTree::current(&strat.new_tree(&mut runner).unwrap());
        let piecewise = |(s0, s1, s2): (f64, f64, f64)| CostFunction::PiecewiseConvex {
            derivative: vec![
                (-a, -s0 - s1 - s2),
                (-0.3 * a, -s0 - s1),
                (0.0, -s0),
                (0.0, s0 * 0.5),
                (0.4 * a, s0 + s1),
                (a, s0 + s1 + s2),
            ],
        };
        let (cost_internal, cost_external) = if quad {
            (CostFunction::Quadratic { lambda: li }, CostFunction::Quadratic { lambda: le })
        } else {
            (piecewise(s), piecewise(t))
        };
        let spec = ExternalMarketSpec {
            n,
            k,
            a,
            rho_internal: RiskValue::Value(rho_i),
            rho_external: RiskValue::Value(rho_e),
            cost_internal,
            cost_external,
        };
        let r = external_equilibrium(&spec, None).unwrap();
        let cases = expected_cases(&spec);
        let best = best_response_check(&spec, &r, 801).unwrap();
        if cases != vec![r.case] || !best.passed {
            failures += 1;
        }
        counts[match r.case {
            MarketCase::TransferAll => 0,
            MarketCase::PartialShare => 1,
            _ => 2,
        }] += 1;
    }
    verdict(
        4,
        failures == 0,
        format!(
            "1000 markets: transfer_all {}, partial_share {}, no_trade {}; {failures} failures",
            counts[0], counts[1], counts[2]
        ),
    );
}

#[test]
fn c05_internal_market() {
    let rv = RiskValue::Measure {
        rho: RiskMeasureSpec::Var { p: 0.95 },
        loss: pareto(0.8),
    };
    let spec = InternalMarketSpec {
        exposures: vec![1.0; 3],
        risk_values: vec![rv; 3],
        costs: vec![CostFunction::Zero; 3],
    };
    let expected = 0.05f64.powf(-1.25);
    let out = internal_equilibrium(&spec).unwrap();
    let iv = out.interval.unwrap();
    let price = out.equilibrium.unwrap().price;
    let alloc = identity_allocation(&spec.exposures);
    let passes = |p: f64| validate_internal_equilibrium(&spec, &[p; 3], &alloc).unwrap().all_pass();
    let ok = iv.is_single_point()
        && (price - expected).abs() <= 1e-12 * expected
        && passes(price)
        && !passes(1.01 * price)
        && !passes(0.99 * price);
    verdict(5, ok, format!("price {price} (expected {expected}); ±1% rejected"));
}

#[test]
fn c06_finite_mean_contrast() {
    let eq =
        es_finite_mean_equilibrium(&[1.0, 1.0], &LossDistribution::normal(0.0, 1.0).unwrap(), 0.9, 1_000_000, RngStream::new(6, 0))
            .unwrap();
    let diff = eq.prices[1] - eq.prices[0];
    let grid = normal_rvar_two_agent_check(0.9, 0.99, 0.01).unwrap();
    let ok = diff.abs() <= 3.0 * eq.price_diff_se[1]
        && eq.euler_residual.abs() <= 3.0 * eq.euler_se
        && grid.argmin == [0.5, 0.5]
        && grid.passed;
    verdict(
        6,
        ok,
        format!(
            "p* = ({:.5}, {:.5}), diff se {:.5}; Euler residual {:.5} (se {:.5}); RVaR grid argmin {:?}",
            eq.prices[0], eq.prices[1], eq.price_diff_se[1], eq.euler_residual, eq.euler_se, grid.argmin
        ),
    );
}

#[test]
fn c07_hill_estimator() {
    let alpha = 0.85;
    let n = 10_000;
    let k = n / 20;
    let law = pareto(alpha);
    let covered = (0..100u64)
        .filter(|&i| {
            let h = hill_estimator(&law.sample(n, RngStream::new(7, i)), k).unwrap();
            h.ci_low <= alpha && alpha <= h.ci_high
        })
        .count();
    let e = std::f64::consts::E;
    let hand = hill_estimator(&[1.0, e, e * e, e * e * e], 3).unwrap().alpha_hat;
    verdict(7, covered >= 90 && hand == 0.5, format!("{covered}/100 intervals cover {alpha}; hand sample {hand}"));
}

#[test]
fn c08_gpd_superadditivity() {
    let start = Instant::now();
    let params = [(1.19, 774.0), (1.17, 254.0), (1.01, 233.0), (1.39, 412.0), (1.23, 107.0), (1.22, 243.0)];
    let losses: Vec<LossDistribution> =
        params.iter().map(|&(xi, beta)| LossDistribution::gpd(xi, beta).unwrap()).collect();
    let r = var_superadditivity_report(
        &losses,
        &[1.0 / 6.0; 6],
        &[0.95, 0.96, 0.97, 0.98, 0.99],
        1_000_000,
        RngStream::new(8, 0),
    )
    .unwrap();
    let elapsed = start.elapsed();
    let gaps: Vec<String> = r.rows.iter().map(|row| format!("{:.0}", row.gap)).collect();
    verdict(
        8,
        r.separated && r.gap_increasing && elapsed < Duration::from_secs(60),
        format!("gaps [{}]; {elapsed:.2?}", gaps.join(", ")),
    );
}

#[test]
fn c09_dominance_test_calibration() {
    let law = pareto(1.0);
    let n = 10_000;
    let reps = 200u64;
    let mut null_rejections = 0;
    let mut shifted_rejections = 0;
    for i in 0..reps {
        let a = law.sample(n, RngStream::new(9, 2 * i));
        let b = law.sample(n, RngStream::new(9, 2 * i + 1));
        if one_sided_dominance_test(&a, &b, 499, RngStream::new(90, i)).unwrap().p_value <= 0.05 {
            null_rejections += 1;
        }
        let shifted: Vec<f64> = a.iter().map(|x| x + 1.0).collect();
        if one_sided_dominance_test(&shifted, &b, 499, RngStream::new(91, i)).unwrap().p_value <= 0.05 {
            shifted_rejections += 1;
        }
    }
    let size = null_rejections as f64 / reps as f64;
    let power = shifted_rejections as f64 / reps as f64;
    verdict(
        9,
        (0.025..=0.075).contains(&size) && power >= 0.99,
        format!("size {size:.3} over {reps} replications; power {power:.3}"),
    );
}

#[test]
fn c10_degenerate_distortions() {
    let suite = [
        DistortionFn::Identity,
        DistortionFn::VarStep { p: 0.5 },
        DistortionFn::EsRamp { p: 0.9 },
        DistortionFn::Essinf,
        DistortionFn::Esssup,
        DistortionFn::Mixture {
            terms: vec![
                WeightedDistortion { weight: 0.3, h: DistortionFn::Essinf },
                WeightedDistortion { weight: 0.7, h: DistortionFn::Esssup },
            ],
        },
    ];
    let got: Vec<bool> = suite.iter().map(is_degenerate_distortion).collect();
    verdict(10, got == [false, false, false, true, true, true], format!("{got:?}"));
}
