use std::time::Instant;

use num_complex::Complex64;
use rand::Rng;

use super::config::{ExperimentConfig, Scenario};
use super::report::{cell, RunReport, Table, Tier};
use crate::bounds::{
    bound_bernoulli_tail, bound_invariance_shape, bound_l1_tail, bound_t1, bound_t2_shape, bound_t3_shape,
    calibrate_shift_constant, exact_bernoulli_tail, mc_bernoulli_tail, truncated_benchmark_shape, BernoulliForm,
    PairStats, TruncatedPairStats,
};
use crate::coeffs::CoefficientCollection;
use crate::fourier::{cf_bound_check, decay_fit, empirical_cf, fitted_c1, CfCurve};
use crate::metrics::{dk_lower, noise_floor, tv_distance, tv_gaussian_shift, TestFunctionDictionary, TvOptions};
use crate::numeric::{fit_line, geomspace, linspace, wilson_interval, Combinations};
use crate::polyeval::{
    conditional_variance, evaluate_gaussian_chaos, multilinear_conditional_variance, LatentState, MomentTable,
    PolynomialEvaluator,
};
use crate::randvec::{
    sample, sample_map, sample_split, GaussianCounterpart, SampleMatrix, ScalarLaw, SplitFamily, SplitLaw, VectorFamily,
};
use crate::rng::{derive_seed, stream, Purpose};
use crate::{Error, Result};

const Z95: f64 = 1.959_963_984_540_054;

fn histogram_opts(cfg: &ExperimentConfig, tag: u64) -> TvOptions {
    TvOptions {
        bootstrap: cfg.bootstrap,
        ..TvOptions::default()
    }
    .with_seed(derive_seed(cfg.seed, tag))
}

fn scan_opts(cfg: &ExperimentConfig, intervals: usize, tag: u64) -> TvOptions {
    TvOptions {
        bootstrap: cfg.bootstrap,
        ..TvOptions::interval_scan(intervals)
    }
    .with_seed(derive_seed(cfg.seed, tag))
}

/// Slope of `log y` against `log x` over the positive pairs.
fn log_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    let (lx, ly): (Vec<f64>, Vec<f64>) = x
        .iter()
        .zip(y)
        .filter(|(a, b)| **a > 0.0 && **b > 0.0)
        .map(|(a, b)| (a.ln(), b.ln()))
        .unzip();
    fit_line(&lx, &ly).map(|f| f.slope)
}

/// `Q(a, X)` for every draw of a block.
fn polynomial_values(eval: &PolynomialEvaluator, m: &SampleMatrix) -> Vec<f64> {
    m.rows().map(|r| eval.eval_row(r)).collect()
}

/// Values of several polynomials on the same draws (common random numbers).
fn shared_draw_values(
    family: &VectorFamily,
    n: u32,
    count: usize,
    seed: u64,
    evals: &[PolynomialEvaluator],
) -> Vec<Vec<f64>> {
    let w = evals.len();
    let flat = sample_map(family, n, count, seed, |m| {
        let mut out = Vec::with_capacity(m.count() * w);
        for r in m.rows() {
            out.extend(evals.iter().map(|e| e.eval_row(r)));
        }
        out
    });
    (0..w)
        .map(|i| flat.iter().skip(i).step_by(w).copied().collect())
        .collect()
}

/// Keep only the top layer.
fn top_layer(a: &CoefficientCollection) -> Result<CoefficientCollection> {
    let d = a.degree();
    let mut out = CoefficientCollection::new(d, a.k_star(), a.dim(), a.n_max())?;
    for (m, c) in a.layer(d) {
        out.insert(m.clone(), c)?;
    }
    Ok(out)
}

/// Random direction with unit total norm, same shape as `a`.
fn unit_direction(a: &CoefficientCollection, seed: u64, top_only: bool) -> Result<CoefficientCollection> {
    let mut e = CoefficientCollection::sparse_random(a.n_max(), a.degree(), a.k_star(), a.dim(), 1.0, seed)?;
    e.set_constant(0.0);
    if top_only {
        e = top_layer(&e)?;
    }
    let norm = e.total_norm();
    if norm == 0.0 {
        return Err(Error::Empty("perturbation direction"));
    }
    Ok(e.scaled(1.0 / norm))
}

pub(super) fn run_scenario(cfg: &ExperimentConfig, report: &mut RunReport) -> Result<()> {
    match cfg.scenario {
        Scenario::EstimatorCalibration => estimator_calibration(cfg, report),
        Scenario::BernoulliTail => bernoulli_tail(cfg, report),
        Scenario::ShiftRegularity => shift_regularity(cfg, report),
        Scenario::L1Variance => l1_variance(cfg, report),
        Scenario::T1Verify => t1_verify(cfg, report),
        Scenario::T2Scaling => t2_scaling(cfg, report),
        Scenario::T3Scaling => t3_scaling(cfg, report),
        Scenario::Invariance => invariance(cfg, report),
        Scenario::CfDecay => cf_decay(cfg, report),
    }
}

fn gaussian_column(count: usize, seed: u64, shift: f64) -> Vec<f64> {
    let g = VectorFamily::iid(1, ScalarLaw::Gaussian { mean: shift, sd: 1.0 });
    sample(&g, 1, count, seed).values().to_vec()
}

fn estimator_calibration(cfg: &ExperimentConfig, report: &mut RunReport) -> Result<()> {
    let s = &cfg.estimator_calibration;
    report.tier(
        "TV estimate against 2Φ(h/2) − 1 for unit gaussian shifts",
        Tier::Asserted,
    );
    report.tier("identical-distribution noise floor", Tier::Asserted);
    let start = Instant::now();
    let mut table = Table::new("calibration", &["h", "truth", "estimate", "stderr", "error"]);
    for (i, h) in linspace(0.0, s.h_max, s.cases).into_iter().enumerate() {
        let x = gaussian_column(cfg.samples, derive_seed(cfg.seed, 2 * i as u64), 0.0);
        let y = gaussian_column(cfg.samples, derive_seed(cfg.seed, 2 * i as u64 + 1), h);
        let est = tv_distance(&x, &y, &histogram_opts(cfg, 1000 + i as u64))?;
        let truth = tv_gaussian_shift(h);
        let err = est.value - truth;
        table.push(vec![cell(h), cell(truth), cell(est.value), cell(est.stderr), cell(err)]);
        let id = report.distance(&format!("shift-{i}"), est);
        report.check(
            &format!("calibration-{i}"),
            &format!("gaussian shift h={h:.4}"),
            Tier::Asserted,
            err.abs(),
            s.tolerance,
            &[id],
            "absolute error against the closed form",
        );
    }
    report.table(table);
    report.phase("shift cases", start);
    let start = Instant::now();
    let floor = noise_floor(cfg.samples, &histogram_opts(cfg, 999))?;
    let value = floor.value;
    let id = report.distance("noise-floor", floor);
    report.check(
        "noise-floor",
        "identical-distribution floor",
        Tier::Asserted,
        value,
        s.floor_max,
        &[id],
        "",
    );
    report.phase("noise floor", start);
    Ok(())
}

fn random_form(index: usize, cfg: &ExperimentConfig) -> Result<(BernoulliForm, f64)> {
    let s = &cfg.bernoulli;
    let mut rng = stream(cfg.seed, Purpose::Scenario, 1, index as u64, 0);
    let d = 1 + (index as u32 % s.max_degree);
    let n = rng.random_range(d.max(2)..=s.n_max);
    let p = s.p_values[index % s.p_values.len()];
    let mut entries = Vec::new();
    for subset in Combinations::new(n, d) {
        if rng.random::<f64>() < s.density {
            entries.push((subset.iter().map(|j| j - 1).collect(), rng.random_range(0.2..2.0)));
        }
    }
    if entries.is_empty() {
        entries.push(((0..d).collect(), 1.0));
    }
    Ok((BernoulliForm::new(n, d, entries)?, p))
}

fn bernoulli_tail(cfg: &ExperimentConfig, report: &mut RunReport) -> Result<()> {
    let s = &cfg.bernoulli;
    report.tier(
        "small-ball bound for Bernoulli forms against exact enumeration",
        Tier::Asserted,
    );
    report.tier(
        "Monte-Carlo small-ball frequency against exact enumeration",
        Tier::Informational,
    );
    let start = Instant::now();
    let mut instances = Vec::new();
    if s.fixture {
        instances.push((BernoulliForm::complete(4, 2, 1.0)?, 0.5));
    }
    for i in 0..s.instances {
        instances.push(random_form(i, cfg)?);
    }
    let mut table = Table::new(
        "bernoulli",
        &["instance", "n", "d", "p", "theta", "exact", "bound", "margin"],
    );
    let mut violations = 0usize;
    let mut pairs = 0usize;
    for (i, (form, p)) in instances.iter().enumerate() {
        let upper = (p / 2.0).powi(form.degree() as i32) * form.norm_sq();
        let mut worst = f64::NEG_INFINITY;
        let mut thetas: Vec<f64> = (1..=s.thetas)
            .map(|t| upper * t as f64 / (s.thetas + 1) as f64)
            .collect();
        if s.fixture && i == 0 {
            thetas.insert(0, 0.3);
        }
        for theta in thetas {
            let exact = exact_bernoulli_tail(form, *p, theta)?;
            let bound = bound_bernoulli_tail(form, *p, theta)?;
            pairs += 1;
            if exact > bound {
                violations += 1;
            }
            worst = worst.max(exact - bound);
            table.push(vec![
                cell(i),
                cell(form.n()),
                cell(form.degree()),
                cell(p),
                cell(theta),
                cell(exact),
                cell(bound),
                cell(bound - exact),
            ]);
        }
        report.check(
            &format!("instance-{i}"),
            &format!("dominance n={} d={} p={p}", form.n(), form.degree()),
            Tier::Asserted,
            worst,
            0.0,
            &[],
            "max over θ of exact − bound",
        );
    }
    report.check(
        "violations",
        &format!("violations over {pairs} (instance θ) pairs"),
        Tier::Asserted,
        violations as f64,
        0.0,
        &[],
        "",
    );
    report.table(table);
    report.phase("enumeration", start);
    if s.fixture {
        let start = Instant::now();
        let (form, p) = &instances[0];
        let exact = exact_bernoulli_tail(form, *p, 0.3)?;
        let bound = bound_bernoulli_tail(form, *p, 0.3)?;
        report.check(
            "fixture",
            "complete pairs on 4 indices at θ=0.3",
            Tier::Asserted,
            exact,
            bound,
            &[],
            "",
        );
        let mc = mc_bernoulli_tail(form, *p, 0.3, s.mc_draws, derive_seed(cfg.seed, 9))?;
        report.check(
            "fixture-mc",
            "Monte-Carlo distance to exact within the Wilson half-width",
            Tier::Informational,
            (mc.estimate - exact).abs(),
            (mc.ci_high - mc.ci_low) / 2.0,
            &[],
            &format!("estimate {} from {} draws", mc.estimate, mc.draws),
        );
        report.phase("monte carlo", start);
    }
    Ok(())
}

fn shift_regularity(cfg: &ExperimentConfig, report: &mut RunReport) -> Result<()> {
    let s = &cfg.shift;
    report.tier("shift modulus of V^d decays like s^{1/d}", Tier::Asserted);
    report.tier("shift-regularity constant C(d)", Tier::Calibration);
    let grid = geomspace(s.s_min, s.s_max, s.points);
    let mut table = Table::new("shift", &["d", "s", "modulus", "ratio"]);
    for &d in &s.degrees {
        let start = Instant::now();
        let cal = calibrate_shift_constant(d, cfg.samples, derive_seed(cfg.seed, d as u64), &grid)?;
        for &(sv, dv, r) in &cal.points {
            table.push(vec![cell(d), cell(sv), cell(dv), cell(r)]);
        }
        let slope = cal
            .fit
            .map(|f| f.slope)
            .ok_or_else(|| Error::NoiseDominated(format!("shift modulus of V^{d} vanished on the grid")))?;
        let target = 1.0 / d as f64;
        report.check(
            &format!("slope-d{d}"),
            &format!("log D(s) slope for V^{d} near {target:.4}"),
            Tier::Asserted,
            (slope - target).abs(),
            s.tolerance,
            &[],
            &format!("fitted slope {slope}"),
        );
        let configured = cfg.constants.get("C_d");
        report.check(
            &format!("constant-d{d}"),
            &format!("calibrated C({d}) against the configured value"),
            Tier::Calibration,
            cal.value,
            configured.value,
            &[],
            "smallest constant consistent with every grid point",
        );
        report.phase(&format!("degree {d}"), start);
    }
    report.table(table);
    Ok(())
}

fn split_law(p: f64, alpha: f64, residual: &ScalarLaw) -> SplitLaw {
    SplitLaw {
        p,
        alpha,
        x0: 0.0,
        v_law: ScalarLaw::standard_uniform(),
        u_law: residual.clone(),
    }
}

fn l1_variance(cfg: &ExperimentConfig, report: &mut RunReport) -> Result<()> {
    let s = &cfg.l1;
    report.tier("conditional-variance small-ball tail", Tier::Asserted);
    report.tier("exact against Monte-Carlo conditional variance", Tier::Informational);
    let law = split_law(s.p, s.alpha, &s.residual);
    let family = SplitFamily::iid(1, law)?;
    // per-factor variance of αV with V uniform on [−1, 1]
    let alpha_t = s.alpha * s.alpha / 3.0;
    let mut table = Table::new(
        "l1",
        &[
            "n",
            "threshold",
            "tail",
            "frequency",
            "wilson_low",
            "wilson_high",
            "median_variance",
        ],
    );
    for &n in &s.n_values {
        let start = Instant::now();
        let a = s.coefficients.load(n, s.degree, 1, 1)?;
        let moments = MomentTable::from_family(&family.source_family(), n, 1)?;
        let lt = bound_l1_tail(&a, s.p, alpha_t)?;
        let latent = sample_split(&family, n, s.draws, derive_seed(cfg.seed, n as u64));
        let mut values = Vec::with_capacity(s.draws);
        for draw in 0..s.draws {
            let st = LatentState::from_split_sample(&latent, draw);
            values.push(multilinear_conditional_variance(&a, &family, &st, &moments)?);
        }
        let hits = values.iter().filter(|v| **v < lt.threshold).count() as u64;
        let freq = hits as f64 / s.draws as f64;
        let (lo, hi) = wilson_interval(hits, s.draws as u64, Z95);
        let mut sorted = values.clone();
        sorted.sort_by(f64::total_cmp);
        table.push(vec![
            cell(n),
            cell(lt.threshold),
            cell(lt.tail),
            cell(freq),
            cell(lo),
            cell(hi),
            cell(sorted[sorted.len() / 2]),
        ]);
        report.check(
            &format!("tail-n{n}"),
            &format!("P(conditional variance < threshold) at n={n}"),
            Tier::Asserted,
            freq,
            lt.tail + (hi - lo) / 2.0,
            &[],
            &format!(
                "threshold {} tail {} (informative: {})",
                lt.threshold,
                lt.tail,
                lt.tail < 1.0
            ),
        );
        for draw in 0..s.crosscheck_draws.min(s.draws) {
            let st = LatentState::from_split_sample(&latent, draw);
            let seed = derive_seed(cfg.seed, 500 + draw as u64);
            let mc = conditional_variance(&a, &family, &st, &moments, s.crosscheck_budget, seed)?;
            report.check(
                &format!("crosscheck-n{n}-{draw}"),
                &format!("exact vs Monte-Carlo conditional variance n={n} draw {draw}"),
                Tier::Informational,
                (values[draw] - mc.value).abs(),
                4.0 * mc.stderr,
                &[],
                "",
            );
        }
        report.phase(&format!("n={n}"), start);
    }
    report.table(table);
    Ok(())
}

fn t1_verify(cfg: &ExperimentConfig, report: &mut RunReport) -> Result<()> {
    let s = &cfg.t1;
    report.tier(
        "multilinear TV bound with calibrated C(d) (upper d_k bracket)",
        Tier::Asserted,
    );
    report.tier(
        "multilinear TV bound with the dictionary lower d_k",
        Tier::Informational,
    );
    report.tier("perturbation-ladder exponent", Tier::Asserted);
    report.tier("shift-regularity constant C(d)", Tier::Calibration);
    let d = s.degree;
    let fx = VectorFamily::iid(1, split_law(s.p, s.alpha, &s.x_residual).source());
    let fy = VectorFamily::iid(1, split_law(s.p, s.alpha, &s.y_residual).source());
    fx.split()?;
    fy.split()?;
    let a = s.coefficients.load(s.n, d, 1, 1)?;
    if a.constant() != 0.0 || (1..d).any(|m| a.layer_len(m) > 0) {
        return Err(Error::Config(
            "t1-verify needs a homogeneous multilinear collection".into(),
        ));
    }
    let stats = a.stats();

    let start = Instant::now();
    let mut constants = cfg.constants.clone();
    let user_set = constants.c_d.is_some() && !constants.calibrated.iter().any(|c| c == "C_d");
    if !user_set {
        let grid = geomspace(1e-3, 1e-1, 12);
        let cal = calibrate_shift_constant(d, s.calibration_samples, derive_seed(cfg.seed, 31), &grid)?;
        report.check(
            "calibrated-c-d",
            &format!("C({d}) from the shift modulus of V^{d}"),
            Tier::Calibration,
            cal.value,
            cal.value,
            &[],
            &format!("fitted slope {:?}", cal.fit.map(|f| f.slope)),
        );
        constants = constants.with_calibrated_c_d(cal.value);
    }
    report.phase("calibration", start);

    let start = Instant::now();
    let mx = MomentTable::from_family(&fx, s.n, 1)?;
    let my = MomentTable::from_family(&fy, s.n, 1)?;
    let ex = PolynomialEvaluator::new(&a, &mx)?;
    let ey = PolynomialEvaluator::new(&a, &my)?;
    let qx = sample_map(&fx, s.n, cfg.samples, derive_seed(cfg.seed, 32), |m| {
        polynomial_values(&ex, m)
    });
    let qy = sample_map(&fy, s.n, cfg.samples, derive_seed(cfg.seed, 33), |m| {
        polynomial_values(&ey, m)
    });
    let opts = histogram_opts(cfg, 34);
    let lhs = tv_distance(&qx, &qy, &opts)?;
    let floor = noise_floor(cfg.samples, &opts)?;
    let (lhs_value, upper, floor_value) = (lhs.value, lhs.ci_high, floor.value);
    let lhs_id = report.distance("tv-x-y", lhs);
    let floor_id = report.distance("noise-floor", floor);
    let max_k = *s.k_values.iter().max().unwrap_or(&1);
    let dict = TestFunctionDictionary::for_samples(&qx, &qy, max_k)?;
    let kappa = stats.top_norm();
    for &k in &s.k_values {
        let pair = PairStats { a: &stats, b: &stats };
        let rhs = bound_t1(k, d, s.alpha, s.p, kappa, pair, upper, &constants)?;
        let total = rhs.total;
        let bid = report.bound(&format!("t1-upper-k{k}"), rhs);
        report.check(
            &format!("t1-k{k}"),
            &format!("TV ≤ bound with d_{k} ≤ TV upper"),
            Tier::Asserted,
            lhs_value,
            total + floor_value,
            &[lhs_id.clone(), floor_id.clone(), bid],
            "rhs includes the identical-distribution noise floor",
        );
        let low = dk_lower(&qx, &qy, k, &dict)?;
        let rhs_low = bound_t1(k, d, s.alpha, s.p, kappa, pair, low.value, &constants)?;
        let total_low = rhs_low.total;
        let did = report.distance(&format!("dk-lower-k{k}"), low);
        let bid = report.bound(&format!("t1-lower-k{k}"), rhs_low);
        report.check(
            &format!("t1-lower-k{k}"),
            &format!("TV against the bound at the lower d_{k}"),
            Tier::Informational,
            lhs_value,
            total_low,
            &[lhs_id.clone(), did, bid],
            "",
        );
    }
    report.phase("two-family comparison", start);

    let start = Instant::now();
    let e = unit_direction(&a, derive_seed(cfg.seed, 35), true)?;
    let mut evals = vec![PolynomialEvaluator::new(&a, &mx)?];
    for &z in &s.zeta {
        evals.push(PolynomialEvaluator::new(&a.add_scaled(&e, z)?, &mx)?);
    }
    let vals = shared_draw_values(&fx, s.n, cfg.samples, derive_seed(cfg.seed, 36), &evals);
    let scan = scan_opts(cfg, 3, 37);
    let mut header = vec!["zeta".to_string(), "tv".to_string()];
    header.extend(s.k_values.iter().map(|k| format!("dk_lower_{k}")));
    let mut table = Table {
        name: "t1_ladder".into(),
        header,
        rows: Vec::new(),
    };
    let mut tvs = Vec::new();
    let mut dks: Vec<Vec<f64>> = vec![Vec::new(); s.k_values.len()];
    for (i, &z) in s.zeta.iter().enumerate() {
        let qb = &vals[i + 1];
        let tv = tv_distance(&vals[0], qb, &scan)?;
        let dict = TestFunctionDictionary::for_samples(&vals[0], qb, max_k)?;
        let mut row = vec![cell(z), cell(tv.value)];
        for (ki, &k) in s.k_values.iter().enumerate() {
            let v = dk_lower(&vals[0], qb, k, &dict)?.value;
            dks[ki].push(v);
            row.push(cell(v));
        }
        tvs.push(tv.value);
        table.rows.push(row);
        report.distance(&format!("ladder-tv-{i}"), tv);
    }
    report.table(table);
    for (ki, &k) in s.k_values.iter().enumerate() {
        let slope = log_slope(&dks[ki], &tvs).unwrap_or(f64::NAN);
        let target = 1.0 / (1.0 + (k * d) as f64);
        report.check(
            &format!("ladder-k{k}"),
            &format!("log TV vs log d_{k} slope ≥ 1/(1+kd) − tol"),
            Tier::Asserted,
            target - s.slope_tolerance,
            slope,
            &[],
            &format!("fitted slope {slope}"),
        );
    }
    report.phase("perturbation ladder", start);
    Ok(())
}

fn t2_scaling(cfg: &ExperimentConfig, report: &mut RunReport) -> Result<()> {
    let s = &cfg.t2;
    report.tier("general-degree TV bound (free constants)", Tier::Informational);
    report.tier("perturbation-ladder exponent", Tier::Informational);
    report.tier("earlier truncated bound, exponent comparison", Tier::Informational);
    let start = Instant::now();
    let family = VectorFamily::iid(1, s.law.clone());
    let mut a = s.coefficients.load(s.n, s.degree, s.k_star, 1)?;
    a.set_constant(0.0);
    if a.layer_len(s.degree) == 0 {
        return Err(Error::Config("t2-scaling needs a nonempty top layer".into()));
    }
    let moments = MomentTable::from_family(&family, s.n, s.k_star)?;
    let e = unit_direction(&a, derive_seed(cfg.seed, 40), false)?;
    let mut evals = vec![PolynomialEvaluator::new(&a, &moments)?];
    let mut collections = Vec::new();
    for &z in &s.zeta {
        let b = a.add_scaled(&e, z)?;
        evals.push(PolynomialEvaluator::new(&b, &moments)?);
        collections.push(b);
    }
    let vals = shared_draw_values(&family, s.n, cfg.samples, derive_seed(cfg.seed, 41), &evals);
    let scan = scan_opts(cfg, 3, 42);
    let sa = a.stats();
    let mut table = Table::new("t2_ladder", &["zeta", "tv", "dk_lower", "bound"]);
    let (mut tvs, mut dks) = (Vec::new(), Vec::new());
    for (i, &z) in s.zeta.iter().enumerate() {
        let tv = tv_distance(&vals[0], &vals[i + 1], &scan)?;
        let dict = TestFunctionDictionary::for_samples(&vals[0], &vals[i + 1], s.k)?;
        let dk = dk_lower(&vals[0], &vals[i + 1], s.k, &dict)?.value;
        let sb = collections[i].stats();
        let bound = bound_t2_shape(s.k, s.k_star, PairStats { a: &sa, b: &sb }, tv.ci_high, &cfg.constants)?;
        table.push(vec![cell(z), cell(tv.value), cell(dk), cell(bound.total)]);
        let total = bound.total;
        let tid = report.distance(&format!("ladder-tv-{i}"), tv.clone());
        let bid = report.bound(&format!("t2-{i}"), bound);
        report.check(
            &format!("t2-{i}"),
            &format!("TV ≤ bound at ζ={z}"),
            Tier::Informational,
            tv.value,
            total,
            &[tid, bid],
            "constants at their defaults",
        );
        tvs.push(tv.value);
        dks.push(dk);
    }
    report.table(table);
    let slope = log_slope(&dks, &tvs).unwrap_or(f64::NAN);
    let exponent = 1.0 / (1.0 + (s.degree * s.k * s.k_star) as f64);
    report.check(
        "ladder",
        "log TV vs log d_k slope against the bound exponent",
        Tier::Informational,
        exponent,
        slope,
        &[],
        &format!("fitted slope {slope}"),
    );
    let mut ex = Table::new("exponents", &["name", "value"]);
    ex.push(vec!["general-degree".into(), cell(exponent)]);
    if s.degree >= 2 {
        let l = s.degree - 1;
        let pair = TruncatedPairStats {
            a: &sa,
            b: &sa,
            l,
            l_prime: l,
        };
        let bench = truncated_benchmark_shape(s.k, s.k_star, s.benchmark_theta, pair, tvs[0], &cfg.constants)?;
        ex.push(vec![
            "earlier-truncated".into(),
            cell(bench.exponent_value("d_k").unwrap_or(f64::NAN)),
        ]);
        report.bound("benchmark", bench);
    }
    report.table(ex);
    report.phase("ladder", start);
    Ok(())
}

fn t3_scaling(cfg: &ExperimentConfig, report: &mut RunReport) -> Result<()> {
    let s = &cfg.t3;
    report.tier("truncated-polynomial TV bound (free constants)", Tier::Informational);
    report.tier("TV against the norm of the dropped layers", Tier::Informational);
    let start = Instant::now();
    let family = VectorFamily::iid(1, s.law.clone());
    let mut a = s.coefficients.load(s.n, s.degree, s.k_star, 1)?;
    a.set_constant(0.0);
    if a.layer_len(s.l) == 0 || (s.l + 1..=s.degree).all(|m| a.layer_len(m) == 0) {
        return Err(Error::Config(
            "t3-scaling needs nonempty layers at l and above l".into(),
        ));
    }
    let moments = MomentTable::from_family(&family, s.n, s.k_star)?;
    let low = a.truncated(s.l);
    let mut evals = vec![PolynomialEvaluator::new(&low, &moments)?];
    let mut rungs = Vec::new();
    for &z in &s.zeta {
        let full = a.scale_layers_above(s.l, z);
        evals.push(PolynomialEvaluator::new(&full, &moments)?);
        rungs.push(full);
    }
    let vals = shared_draw_values(&family, s.n, cfg.samples, derive_seed(cfg.seed, 50), &evals);
    let scan = scan_opts(cfg, 3, 51);
    let m2k = s.law.raw_moment(2 * s.k_star)?.max(1.0);
    let mut table = Table::new("t3_ladder", &["zeta", "dropped_norm", "tv", "bound"]);
    let (mut tvs, mut norms) = (Vec::new(), Vec::new());
    for (i, &z) in s.zeta.iter().enumerate() {
        let tv = tv_distance(&vals[0], &vals[i + 1], &scan)?;
        let st = rungs[i].stats();
        let dropped = st.norm_range(s.l + 1, s.degree);
        let pair = TruncatedPairStats {
            a: &st,
            b: &st,
            l: s.l,
            l_prime: s.l,
        };
        let bound = bound_t3_shape(s.k, s.k_star, pair, tv.ci_high, m2k, &cfg.constants)?;
        table.push(vec![cell(z), cell(dropped), cell(tv.value), cell(bound.total)]);
        let total = bound.total;
        let tid = report.distance(&format!("ladder-tv-{i}"), tv.clone());
        let bid = report.bound(&format!("t3-{i}"), bound);
        report.check(
            &format!("t3-{i}"),
            &format!("TV ≤ bound at ζ={z}"),
            Tier::Informational,
            tv.value,
            total,
            &[tid, bid],
            "constants at their defaults",
        );
        tvs.push(tv.value);
        norms.push(dropped);
    }
    report.table(table);
    let slope = log_slope(&norms, &tvs).unwrap_or(f64::NAN);
    let exponent = 1.0 / (s.l * s.k_star) as f64;
    report.check(
        "truncation-slope",
        "log TV vs log dropped norm against the truncation exponent",
        Tier::Informational,
        exponent,
        slope,
        &[],
        &format!("fitted slope {slope}"),
    );
    report.phase("ladder", start);
    Ok(())
}

fn invariance(cfg: &ExperimentConfig, report: &mut RunReport) -> Result<()> {
    let s = &cfg.invariance;
    report.tier(
        "TV to the gaussian counterpart decreases along the ladder",
        Tier::Asserted,
    );
    report.tier("log TV vs log δ(a) slope", Tier::Asserted);
    report.tier("invariance bound (free constants)", Tier::Informational);
    let family = VectorFamily::iid(1, s.law.clone());
    let opts = scan_opts(cfg, s.intervals, 60);
    let start = Instant::now();
    let floor = noise_floor(s.draws, &opts)?;
    let floor_value = floor.value;
    let floor_id = report.distance("noise-floor", floor);
    report.phase("noise floor", start);
    let mut table = Table::new("invariance", &["n", "delta", "tv", "stderr", "bound"]);
    let (mut tvs, mut deltas) = (Vec::new(), Vec::new());
    let mut ids = Vec::new();
    for &n in &s.n_values {
        let start = Instant::now();
        let a = CoefficientCollection::uniform_spread(n, s.degree, s.k_star, 1, 1.0)?;
        let moments = MomentTable::from_family(&family, n, s.k_star)?;
        let eval = PolynomialEvaluator::new(&a, &moments)?;
        let qx = sample_map(&family, n, s.draws, derive_seed(cfg.seed, 61 + n as u64), |m| {
            polynomial_values(&eval, m)
        });
        let counterpart = GaussianCounterpart::new(&family, n, s.k_star)?;
        let seed_g = derive_seed(cfg.seed, 10_061 + n as u64);
        let qg = counterpart.sample_map(s.draws, seed_g, |g| {
            evaluate_gaussian_chaos(&a, g).expect("counterpart layout matches the collection")
        });
        let tv = tv_distance(&qx, &qg, &opts)?;
        let delta = a.influence_total();
        let bound = bound_invariance_shape(s.k_star, &a.stats(), &cfg.constants)?;
        table.push(vec![
            cell(n),
            cell(delta),
            cell(tv.value),
            cell(tv.stderr),
            cell(bound.total),
        ]);
        let total = bound.total;
        let tvv = tv.value;
        let tid = report.distance(&format!("tv-n{n}"), tv);
        let bid = report.bound(&format!("invariance-n{n}"), bound);
        report.check(
            &format!("bound-n{n}"),
            &format!("TV ≤ invariance bound at n={n}"),
            Tier::Informational,
            tvv,
            total,
            &[tid.clone(), bid],
            "constants at their defaults",
        );
        tvs.push(tvv);
        deltas.push(delta);
        ids.push(tid);
        report.phase(&format!("n={n}"), start);
    }
    report.table(table);
    for i in 1..tvs.len() {
        report.check(
            &format!("decrease-{i}"),
            &format!("TV at n={} ≤ TV at n={} + floor", s.n_values[i], s.n_values[i - 1]),
            Tier::Asserted,
            tvs[i],
            tvs[i - 1] + floor_value,
            &[ids[i].clone(), ids[i - 1].clone(), floor_id.clone()],
            "",
        );
    }
    let slope = log_slope(&deltas, &tvs).unwrap_or(f64::NAN);
    let exponent = 1.0 / (2.0 + 6.0 * (s.degree * s.k_star) as f64);
    report.check(
        "slope",
        "log TV vs log δ(a) slope ≥ 1/(2+6dk*) − tol",
        Tier::Asserted,
        exponent - s.slope_tolerance,
        slope,
        &ids,
        &format!("fitted slope {slope}"),
    );
    Ok(())
}

fn curve_table(name: &str, curve: &CfCurve) -> Table {
    let mut t = Table::new(name, &["t", "re", "im", "abs", "stderr"]);
    for i in 0..curve.len() {
        let v = curve.values[i];
        t.push(vec![
            cell(curve.t[i]),
            cell(v.re),
            cell(v.im),
            cell(v.norm()),
            cell(curve.stderr[i]),
        ]);
    }
    t
}

fn cf_decay(cfg: &ExperimentConfig, report: &mut RunReport) -> Result<()> {
    let s = &cfg.cf;
    report.tier("empirical CF of V against sin(t)/t", Tier::Asserted);
    report.tier("decay exponent of the CF envelope of V", Tier::Asserted);
    report.tier("CF decay bound with fitted C1", Tier::Asserted);
    report.tier("decay exponent of a degree-d polynomial", Tier::Informational);
    let start = Instant::now();
    let family = VectorFamily::iid(1, ScalarLaw::standard_uniform());
    let v = sample(&family, 1, s.samples, derive_seed(cfg.seed, 70))
        .values()
        .to_vec();
    let points: Vec<f64> = (1..=s.check_points).map(|t| t as f64).collect();
    let coarse = empirical_cf(&v, &points)?;
    for i in 0..coarse.len() {
        let t = coarse.t[i];
        let truth = Complex64::new(t.sin() / t, 0.0);
        report.check(
            &format!("sinc-{i}"),
            &format!("|CF − sin t/t| at t={t}"),
            Tier::Asserted,
            (coarse.values[i] - truth).norm(),
            3.0 * coarse.stderr[i],
            &[],
            "",
        );
    }
    let n_points = ((s.t_max - s.t_min) / s.t_step).round() as usize + 1;
    let grid = linspace(s.t_min, s.t_max, n_points);
    let curve = empirical_cf(&v, &grid)?;
    let fit = decay_fit(&curve, s.t_min, s.t_max)?;
    report.check(
        "beta-linear",
        "envelope exponent of V ≥ 1 − tol",
        Tier::Asserted,
        1.0 - s.beta_tolerance,
        fit.beta,
        &[],
        &format!("K={} residual_rms={} peaks={}", fit.k, fit.residual_rms, fit.peaks),
    );
    let a = crate::coeffs::CoefficientStats::top_only(1, 1, 1.0, 1.0);
    let c1 = fitted_c1(&curve, 1, &a, s.t_min, s.t_max)?;
    let mut consts = cfg.constants.clone();
    consts.c1_cf = Some(c1);
    consts.calibrated.push("C1_cf".into());
    let check = cf_bound_check(&curve, 1, &a, &consts)?;
    report.check(
        "cf-margin",
        "min over the window of bound − |CF| with fitted C1",
        Tier::Asserted,
        0.0,
        check.min_margin,
        &[],
        &format!("C1={c1} informative points={}", check.informative_points),
    );
    let decay_only = curve
        .t
        .iter()
        .zip(&curve.values)
        .map(|(t, v)| 2.0 / t - v.norm())
        .fold(f64::INFINITY, f64::min);
    report.check(
        "cf-unit-constant",
        "min over the window of 2/t − |CF| (C1 = 1 and no tail)",
        Tier::Informational,
        0.0,
        decay_only,
        &[],
        "",
    );
    report.table(curve_table("cf_linear", &curve));
    report.phase("uniform", start);

    if s.extra_degree > 0 {
        let start = Instant::now();
        let d = s.extra_degree;
        let a = CoefficientCollection::uniform_spread(s.extra_n, d, 1, 1, 1.0)?;
        let moments = MomentTable::from_family(&family, s.extra_n, 1)?;
        let eval = PolynomialEvaluator::new(&a, &moments)?;
        let q = sample_map(&family, s.extra_n, s.samples, derive_seed(cfg.seed, 71), |m| {
            polynomial_values(&eval, m)
        });
        let grid = geomspace(1.0, s.t_max, 160);
        let curve = empirical_cf(&q, &grid)?;
        match decay_fit(&curve, 1.0, s.t_max) {
            Ok(fit) => {
                report.check(
                    "beta-extra",
                    &format!("envelope exponent of a degree-{d} polynomial against 1/d"),
                    Tier::Informational,
                    1.0 / d as f64 - 0.15,
                    fit.beta,
                    &[],
                    &format!("K={} residual_rms={}", fit.k, fit.residual_rms),
                );
            }
            Err(e) => report.warnings.push(format!("degree-{d} envelope fit: {e}")),
        }
        report.table(curve_table("cf_extra", &curve));
        report.phase("polynomial", start);
    }
    Ok(())
}
