//! Closed-form, quadrature, and enumeration oracles for the library.

use heavytail::data_io::{comonotonic_sum, independent_sum};
use heavytail::dependence::{sample_joint, Copula, CopulaSpec};
use heavytail::dist::{convolve_iid, EmpiricalDistribution, Marginal};
use heavytail::dominance::{
    collective_risk_experiment, penalty_experiment, truncated_penalty_experiment, ConcentratedArm, CountLaw,
    Verdict, WeightLaw,
};
use heavytail::equilibrium::{
    external_equilibrium, internal_equilibrium, internal_equilibrium_price_interval, CostFunction,
    ExternalMarketSpec, InternalMarketSpec, MarketCase, RiskValue,
};
use heavytail::portfolio::{evaluate_position, var_superadditivity_report, Compensation, Constraint, PositionProblem};
use heavytail::risk::{self, DistortionFn, MonotoneFn, RiskMeasureSpec};
use heavytail::tail::{default_threshold_k, hill_estimator, hill_plot};
use heavytail::{LossDistribution, RngStream};

fn pareto(alpha: f64) -> LossDistribution {
    LossDistribution::pareto(alpha).unwrap()
}

/// Composite Simpson rule on `[a, b]` with `n` (even) panels.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// `P(X₁ + X₂ > s)` for iid Pareto(1), by conditioning on `X₁`.
fn pareto1_pair_survival_quadrature(s: f64) -> f64 {
    if s <= 2.0 {
        return 1.0;
    }
    // X₁ > s − 1 forces the sum above s; otherwise integrate P(X₂ > s − x)·x⁻².
    1.0 / (s - 1.0) + simpson(|x| 1.0 / ((s - x) * x * x), 1.0, s - 1.0, 20_000)
}

fn pareto1_pair_survival(s: f64) -> f64 {
    2.0 / s + 2.0 / (s * s) * (s - 1.0).ln()
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (f(mid) > 0.0) == (flo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn binomial_se(p: f64, n: usize) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

#[test]
fn convolution_closed_form_agrees_with_quadrature() {
    for s in [2.5, 4.0, 10.0, 50.0, 1000.0] {
        let q = pareto1_pair_survival_quadrature(s);
        assert!((q - pareto1_pair_survival(s)).abs() < 1e-7, "s = {s}: {q}");
    }
    assert!((pareto1_pair_survival(4.0) - (0.5 + 0.125 * 3f64.ln())).abs() < 1e-15);
    assert!((pareto1_pair_survival(4.0) - 0.63733).abs() < 1e-5);
}

#[test]
fn convolved_marginal_matches_oracle() {
    let s = convolve_iid(&pareto(1.0), 2).unwrap();
    let n = 200_000;
    let report = penalty_experiment(
        &s as &dyn Marginal,
        &Copula::independence(1),
        &[1.0],
        &[2.0, 4.0, 10.0],
        n,
        RngStream::new(11, 0),
        ConcentratedArm::Coupled,
    )
    .unwrap();
    assert_eq!(report.rows[0].lhs.value, 1.0);
    for row in &report.rows[1..] {
        let p = pareto1_pair_survival(row.t);
        assert!((row.lhs.value - p).abs() < 4.0 * binomial_se(p, n), "t = {}", row.t);
    }
    let one = convolve_iid(&pareto(1.0), 1).unwrap();
    assert_eq!(one.survival(3.0), Some(1.0 / 3.0));
}

#[test]
fn diversified_pareto_pair_exceeds_single() {
    let n = 200_000;
    let report = penalty_experiment(
        &pareto(1.0),
        &Copula::independence(2),
        &[0.5, 0.5],
        &[2.0],
        n,
        RngStream::new(5, 0),
        ConcentratedArm::Coupled,
    )
    .unwrap();
    let row = &report.rows[0];
    let p = pareto1_pair_survival(4.0);
    assert!((row.lhs.value - p).abs() < 4.0 * binomial_se(p, n));
    assert!((row.rhs.value - 0.5).abs() < 4.0 * binomial_se(0.5, n));
    assert_eq!(row.verdict, Verdict::HoldsStrictly);
}

#[test]
fn comonotone_rows_collapse() {
    let report = penalty_experiment(
        &pareto(0.7),
        &Copula::comonotone(3),
        &[0.2, 0.3, 0.5],
        &[1.5, 3.0, 30.0],
        20_000,
        RngStream::new(1, 0),
        ConcentratedArm::Coupled,
    )
    .unwrap();
    for row in &report.rows {
        assert!((row.gap()).abs() < 1e-12);
        assert!(matches!(row.verdict, Verdict::Holds));
    }
    let rows = sample_joint(&pareto(1.0), &Copula::comonotone(3), 1000, RngStream::new(2, 0));
    for r in rows.rows() {
        assert!(r.iter().all(|&x| x == r[0]));
    }
    let degenerate = Copula::new(
        CopulaSpec::Mixture {
            weights: vec![1.0, 0.0],
            components: vec![CopulaSpec::Comonotone, CopulaSpec::Independence],
        },
        3,
    )
    .unwrap();
    let rows = sample_joint(&pareto(1.0), &degenerate, 1000, RngStream::new(2, 0));
    for r in rows.rows() {
        assert!(r.iter().all(|&x| x == r[0]));
    }
}

#[test]
fn truncated_exceedance_equals_untruncated_value() {
    let n = 200_000;
    let r = truncated_penalty_experiment(
        &pareto(1.0),
        &Copula::independence(2),
        &[0.5, 0.5],
        &[10.0, 10.0],
        &[4.0],
        &[],
        n,
        RngStream::new(9, 0),
    )
    .unwrap();
    assert_eq!(r.c, 5.0);
    assert_eq!(r.indicator_mismatches, 0);
    let p = pareto1_pair_survival(8.0);
    assert!((r.exceedance.rows[0].lhs.value - p).abs() < 4.0 * binomial_se(p, n));
}

#[test]
fn collective_uniform_count_oracle() {
    let n = 400_000;
    let r = collective_risk_experiment(
        &pareto(1.0),
        &WeightLaw::Constant { w: 1.0 },
        &CountLaw::UniformRange { lo: 1, hi: 2 },
        &[4.0],
        n,
        RngStream::new(21, 0),
    )
    .unwrap();
    let row = &r.average_loss.rows[0];
    let lhs = 0.5 * 0.25 + 0.5 * pareto1_pair_survival(8.0);
    assert!((row.lhs.value - lhs).abs() < 4.0 * binomial_se(lhs, n), "{}", row.lhs.value);
    assert!((row.rhs.value - 0.25).abs() < 4.0 * binomial_se(0.25, n));
    assert_eq!(row.verdict, Verdict::HoldsStrictly);
    assert_eq!(r.prob_at_least_two, 0.5);
}

#[test]
fn collective_degenerate_counts() {
    let one = collective_risk_experiment(
        &pareto(1.0),
        &WeightLaw::Constant { w: 2.0 },
        &CountLaw::Fixed { n: 1 },
        &[1.5, 4.0, 40.0],
        20_000,
        RngStream::new(3, 0),
    )
    .unwrap();
    for rep in [&one.average_loss, &one.weighted_sum] {
        assert!(rep.rows.iter().all(|r| r.gap().abs() < 1e-12));
    }
    let none = collective_risk_experiment(
        &pareto(1.0),
        &WeightLaw::Constant { w: 1.0 },
        &CountLaw::Pmf { probs: vec![1.0] },
        &[0.5, 4.0],
        20_000,
        RngStream::new(3, 0),
    )
    .unwrap();
    for rep in [&none.average_loss, &none.weighted_sum] {
        assert!(rep.rows.iter().all(|r| r.lhs.value == 0.0 && r.rhs.value == 0.0));
    }
}

#[test]
fn mixture_copula_is_linear_in_exceedance() {
    let n = 200_000;
    let grid = [1.5, 3.0, 10.0];
    let run = |spec: CopulaSpec| {
        penalty_experiment(
            &pareto(1.0),
            &Copula::new(spec, 2).unwrap(),
            &[0.5, 0.5],
            &grid,
            n,
            RngStream::new(17, 0),
            ConcentratedArm::Analytic,
        )
        .unwrap()
    };
    let lambda = 0.3;
    let mix = run(CopulaSpec::Mixture {
        weights: vec![lambda, 1.0 - lambda],
        components: vec![CopulaSpec::Comonotone, CopulaSpec::Independence],
    });
    let como = run(CopulaSpec::Comonotone);
    let ind = run(CopulaSpec::Independence);
    for i in 0..grid.len() {
        let expect = lambda * como.rows[i].lhs.value + (1.0 - lambda) * ind.rows[i].lhs.value;
        let se = binomial_se(expect, n) * 2f64.sqrt();
        assert!((mix.rows[i].lhs.value - expect).abs() < 4.0 * se, "t = {}", grid[i]);
    }
}

#[test]
fn var_of_pareto_average_at_median() {
    let root = bisect(|s| pareto1_pair_survival(s) - 0.5, 2.0 + 1e-12, 100.0);
    let half = root / 2.0;
    assert!((half - 2.553_244_472_793_626).abs() < 1e-9);

    let problem = PositionProblem {
        marginal: pareto(1.0),
        copula: CopulaSpec::Independence,
        n_assets: 2,
        rho: RiskMeasureSpec::Var { p: 0.5 },
        compensation: Compensation::Zero,
        constraint: Constraint::FixedTotal { w: 1.0 },
    };
    let n = 400_000;
    let split = evaluate_position(&problem, &[0.5, 0.5], n, RngStream::new(4, 0)).unwrap().to_f64();
    assert!((split - half).abs() < 0.02, "{split}");
    let single = evaluate_position(&problem, &[1.0, 0.0], n, RngStream::new(4, 0)).unwrap().to_f64();
    assert!((single - 2.0).abs() < 0.02, "{single}");
    let zero = evaluate_position(&problem, &[0.0, 0.0], n, RngStream::new(4, 0)).unwrap().to_f64();
    assert_eq!(zero, 0.0);

    let report =
        var_superadditivity_report(&[pareto(1.0), pareto(1.0)], &[0.5, 0.5], &[0.5], n, RngStream::new(4, 1)).unwrap();
    let row = &report.rows[0];
    assert_eq!(row.sum_var, 2.0);
    assert!((row.var_sum.value - half).abs() < 0.02);
    assert!(row.var_sum.lo <= half + 1e-3 && half - 1e-3 <= row.var_sum.hi);
    assert_eq!(report.label, "empirical only");
}

#[test]
fn single_loss_superadd_columns_coincide() {
    let r = var_superadditivity_report(&[pareto(1.0)], &[1.0], &[0.9, 0.99], 100_000, RngStream::new(8, 0)).unwrap();
    for row in &r.rows {
        let rel = (row.var_sum.value - row.sum_var).abs() / row.sum_var;
        assert!(rel < 0.05, "{row:?}");
        assert!(row.var_sum.lo <= row.sum_var && row.sum_var <= row.var_sum.hi);
    }
}

#[test]
fn distribution_examples() {
    assert_eq!(pareto(1.0).cdf(2.0), 0.5);
    assert_eq!(pareto(2.5).cdf(1.0), 0.0);
    assert!((LossDistribution::gpd(1.0, 1.0).unwrap().cdf(1.0) - 0.5).abs() < 1e-15);
    assert_eq!(pareto(1.0).quantile(0.5).unwrap(), 2.0);
    for (alpha, q) in [(0.8, 0.95), (0.5, 0.75), (1.3, 0.3)] {
        let expect: f64 = (1.0 - q as f64).powf(-1.0 / alpha);
        assert!((pareto(alpha).quantile(q).unwrap() - expect).abs() <= 1e-12 * expect);
    }
    let e = LossDistribution::empirical(vec![3.0, 1.0, 2.0]).unwrap();
    assert_eq!(e.quantile(0.5).unwrap(), 2.0);
    assert!(e.quantile(0.0).is_err() && e.quantile(1.0).is_err());
    let t = pareto(1.0).truncate(10.0).unwrap();
    assert!((t.cdf(5.0) - 0.8).abs() < 1e-15);
    assert_eq!(t.cdf(10.0), 1.0);
    assert_eq!(t.quantile(0.95).unwrap(), 10.0);
    assert!(pareto(1.0).truncate(0.5).is_err());
    let sample = t.sample(10_000, RngStream::new(1, 0));
    assert!(sample.iter().all(|&x| (1.0..=10.0).contains(&x)));
}

#[test]
fn pareto_sample_ks_distance() {
    let n = 1_000_000;
    let mut s = pareto(1.0).sample(n, RngStream::new(123, 0));
    s.sort_by(f64::total_cmp);
    let mut d: f64 = 0.0;
    for (i, &x) in s.iter().enumerate() {
        let f = 1.0 - 1.0 / x;
        d = d.max((f - i as f64 / n as f64).abs()).max(((i + 1) as f64 / n as f64 - f).abs());
    }
    // 1.63/√n is the 1% critical value.
    assert!(d < 0.005 && d < 1.63 / (n as f64).sqrt(), "{d}");
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    for (rank, i) in idx.into_iter().enumerate() {
        r[i] = rank as f64;
    }
    r
}

#[test]
fn independence_has_no_rank_correlation() {
    let n = 1_000_000;
    let rows = sample_joint(&pareto(1.0), &Copula::independence(2), n, RngStream::new(77, 0));
    let a = ranks(&rows.column(0).to_vec());
    let b = ranks(&rows.column(1).to_vec());
    let m = (n as f64 - 1.0) / 2.0;
    let (mut sab, mut saa) = (0.0, 0.0);
    for i in 0..n {
        sab += (a[i] - m) * (b[i] - m);
        saa += (a[i] - m) * (a[i] - m);
    }
    let rho = sab / saa;
    assert!(rho.abs() < 0.005, "{rho}");
}

#[test]
fn risk_measure_examples() {
    assert_eq!(risk::var(&pareto(0.5), 0.75).unwrap(), 16.0);
    assert_eq!(risk::var(&LossDistribution::constant(3.5).unwrap(), 0.2).unwrap(), 3.5);
    assert!(!risk::es(&pareto(1.0), 0.9).unwrap().is_finite());
    assert!(!risk::es(&pareto(0.6), 0.1).unwrap().is_finite());

    // ES of Pareto(2) at 0.75: (1/0.25)∫(1−u)^{−1/2}du, with u = 1 − v² removing the singularity.
    let quad = simpson(|v: f64| 2.0 * v * (v * v).powf(-0.5), 1e-12, 0.5, 1000) / 0.25;
    let es = risk::es(&pareto(2.0), 0.75).unwrap().to_f64();
    assert!((quad - 4.0).abs() < 1e-9, "{quad}");
    assert!((es - quad).abs() < 1e-8, "{es}");
    let ramp = risk::distortion(&pareto(2.0), &DistortionFn::EsRamp { p: 0.75 }).unwrap().to_f64();
    assert!((ramp - es).abs() < 1e-8);

    let std_normal = LossDistribution::normal(0.0, 1.0).unwrap();
    let r = risk::rvar(&std_normal, 0.0, 0.5).unwrap();
    let phi0 = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
    assert!((r + phi0 / 0.5).abs() < 1e-8, "{r}");
    assert!((r + 0.79788).abs() < 1e-5);
    let shifted = LossDistribution::normal(1.5, 2.0).unwrap();
    let c = (heavytail::normal::density_at_quantile(0.9) - heavytail::normal::density_at_quantile(0.99)) / 0.09;
    assert!((risk::rvar(&shifted, 0.9, 0.99).unwrap() - (1.5 + 2.0 * c)).abs() < 1e-8);

    let gpd = LossDistribution::gpd(0.5, 1.0).unwrap();
    let mean = risk::distortion(&gpd, &DistortionFn::Identity).unwrap().to_f64();
    assert!((mean - 2.0).abs() < 1e-8, "{mean}");
    let c = LossDistribution::constant(-2.0).unwrap();
    for h in [DistortionFn::Identity, DistortionFn::VarStep { p: 0.3 }, DistortionFn::Esssup] {
        assert_eq!(risk::distortion(&c, &h).unwrap().to_f64(), -2.0);
    }
}

#[test]
fn expected_disutility_of_truncated_pareto() {
    let t = pareto(1.0).truncate(10.0).unwrap();
    let est = risk::expected_disutility(&t, &MonotoneFn::identity(), 400_000, RngStream::new(6, 0)).unwrap();
    let exact = 1.0 + 10f64.ln();
    assert!((est.mean - exact).abs() < 3.0 * est.std_error, "{est:?}");
    assert!(!est.divergent);
    let k = risk::expected_disutility(&pareto(1.0), &MonotoneFn::Constant { value: 4.0 }, 1000, RngStream::new(6, 0))
        .unwrap();
    assert_eq!(k.mean, 4.0);
    let flat = MonotoneFn::LimitedLiability { cap: 20.0, gamma: 0.3 };
    let v = risk::expected_disutility(&t, &flat, 1000, RngStream::new(6, 0)).unwrap();
    assert!(v.mean < flat.eval(20.0));
}

#[test]
fn internal_market_examples() {
    let market = |rho: Vec<f64>, costs: Vec<CostFunction>| InternalMarketSpec {
        exposures: vec![1.0; rho.len()],
        risk_values: rho.into_iter().map(RiskValue::Value).collect(),
        costs,
    };
    let same = market(vec![2.5; 3], vec![CostFunction::Zero; 3]);
    let iv = internal_equilibrium_price_interval(&same).unwrap().unwrap();
    assert_eq!((iv.lo, iv.hi), (2.5, 2.5));
    let linear = market(vec![0.5; 2], vec![CostFunction::Linear { lambda: 1.0 }; 2]);
    let iv = internal_equilibrium_price_interval(&linear).unwrap().unwrap();
    assert_eq!((iv.lo, iv.hi), (0.0, 1.5));
    let linear = market(vec![3.0; 2], vec![CostFunction::Linear { lambda: 1.0 }; 2]);
    let iv = internal_equilibrium_price_interval(&linear).unwrap().unwrap();
    assert_eq!((iv.lo, iv.hi), (2.0, 4.0));
    let disagree = market(vec![1.0, 2.0], vec![CostFunction::Zero; 2]);
    assert!(internal_equilibrium_price_interval(&disagree).unwrap().is_none());
    let out = internal_equilibrium(&disagree).unwrap();
    assert_eq!(out.status, "unknown");
    assert!(out.equilibrium.is_none());
}

#[test]
fn external_market_cases() {
    let spec = |rho_i: f64, rho_e: f64| ExternalMarketSpec {
        n: 2,
        k: 1,
        a: 2.0,
        rho_internal: RiskValue::Value(rho_i),
        rho_external: RiskValue::Value(rho_e),
        cost_internal: CostFunction::Quadratic { lambda: 1.0 },
        cost_external: CostFunction::Quadratic { lambda: 1.0 },
    };
    let r = external_equilibrium(&spec(4.0, 5.0), None).unwrap();
    assert_eq!(r.case, MarketCase::NoTrade);
    let iv = r.price_interval.unwrap();
    assert_eq!((iv.lo, iv.hi), (4.0, 4.0));
    assert_eq!(r.price, 4.0);
    assert!(r.external.iter().all(|h| h.amount == 0.0));

    let r = external_equilibrium(&spec(4.0, 2.0), None).unwrap();
    assert_eq!(r.case, MarketCase::PartialShare);
    assert!((r.price - 3.0).abs() < 1e-8);
    assert!(r.clearance_residual.abs() <= 1e-10);

    // Costs too weak to stop a full transfer: L_E(a/k) < L_I(−a).
    let mut s = spec(100.0, 0.0);
    s.cost_internal = CostFunction::Quadratic { lambda: 0.01 };
    s.cost_external = CostFunction::Quadratic { lambda: 0.01 };
    let r = external_equilibrium(&s, None).unwrap();
    assert_eq!(r.case, MarketCase::TransferAll);
    assert!(r.internal.iter().all(|h| h.amount == 0.0));
}

#[test]
fn hill_examples() {
    let e = std::f64::consts::E;
    let r = hill_estimator(&[1.0, e, e * e, e * e * e], 3).unwrap();
    assert!((r.alpha_hat - 0.5).abs() < 1e-15);
    assert_eq!(r.threshold, 1.0);

    // Deterministic exp(i/n), i = 1..n, n = 10: the top k logs are (n−k+1..n)/n over (n−k)/n.
    let n = 10;
    let sample: Vec<f64> = (1..=n).map(|i| (i as f64 / n as f64).exp()).collect();
    let series = hill_plot(&sample, 2, n - 1).unwrap();
    for r in &series {
        let k = r.k as f64;
        let mean_excess = (k + 1.0) / (2.0 * n as f64);
        assert!((r.alpha_hat - 1.0 / mean_excess).abs() < 1e-10, "k = {}", r.k);
    }
    assert_eq!(hill_plot(&sample, 4, 4).unwrap().len(), 1);

    // k = n − 1 with minimum 1: the reciprocal mean of the logs.
    let data = pareto(1.5).sample(500, RngStream::new(2, 0));
    let mut with_one = data.clone();
    with_one.push(1.0);
    let logs: f64 = data.iter().map(|x| x.ln()).sum::<f64>() / data.len() as f64;
    let r = hill_estimator(&with_one, data.len()).unwrap();
    assert!((r.alpha_hat - 1.0 / logs).abs() < 1e-10);

    assert_eq!(default_threshold_k(1274).unwrap(), 64);
    assert_eq!(default_threshold_k(10915).unwrap(), 546);
    assert_eq!(default_threshold_k(40).unwrap(), 2);
}

#[test]
fn comonotonic_sum_adds_quantiles() {
    let f1 = EmpiricalDistribution::new(pareto(1.0).sample(200, RngStream::new(1, 0))).unwrap();
    let f2 = EmpiricalDistribution::new(pareto(0.7).sample(300, RngStream::new(2, 0))).unwrap();
    let s = comonotonic_sum(&f1, &f2).unwrap();
    for i in 1..1000 {
        let p = i as f64 / 1000.0;
        assert_eq!(s.quantile(p).unwrap(), f1.quantile(p) + f2.quantile(p), "p = {p}");
    }
    let zero = EmpiricalDistribution::new(vec![0.0]).unwrap();
    let same = comonotonic_sum(&f1, &zero).unwrap();
    for i in 1..100 {
        let p = i as f64 / 100.0;
        assert_eq!(same.quantile(p).unwrap(), f1.quantile(p));
    }
}

#[test]
fn independent_sum_matches_double_enumeration() {
    let n = 1000;
    let a = pareto(1.0).sample(n, RngStream::new(31, 0));
    let f = EmpiricalDistribution::new(a).unwrap();
    let sorted = f.sorted();
    // #{(i, j) : a_i + a_j > 4} by two pointers over the sorted sample.
    let mut count = 0usize;
    let mut j = n;
    for &x in sorted {
        while j > 0 && x + sorted[j - 1] > 4.0 {
            j -= 1;
        }
        count += n - j;
    }
    let brute = sorted
        .iter()
        .map(|&x| sorted.iter().filter(|&&y| x + y > 4.0).count())
        .sum::<usize>();
    assert_eq!(count, brute);
    let oracle = count as f64 / (n * n) as f64;

    let n_out = 1_000_000;
    let s = independent_sum(&f, &f, n_out, RngStream::new(32, 0));
    let est = s.iter().filter(|&&x| x > 4.0).count() as f64 / n_out as f64;
    assert!((est - oracle).abs() < 3.0 * binomial_se(oracle, n_out), "{est} vs {oracle}");
}
