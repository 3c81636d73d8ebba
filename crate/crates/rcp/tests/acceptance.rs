//! Acceptance suite: one test per criterion, each printing a PASS/FAIL
//! line (run with `cargo test --test acceptance -- --nocapture` to see
//! them). Expected values come from independent oracles — brute-force
//! scans, Monte Carlo, finite differences — never from the implementation
//! path under test.

use std::sync::OnceLock;

use rand::Rng;

use rcp::clearing::{
    batch_clearing_loss, empirical_clearing_price, oracle_clearing_price, smoothed_oracle_reserve,
    BidBatch, BidProfile,
};
use rcp::distributions::{MarketProfile, NoiseDistribution, ValueDistribution};
use rcp::experiments::{
    render_sweep_csv, run_sweep_with_jobs, ExperimentGrid, SweepMeta, SweepResult,
};
use rcp::mechanisms::{MechanismConfig, MechanismKind};
use rcp::metrics::{
    clearing_price_sensitivity, estimate_gamma_lipschitz, estimate_order_stat_lipschitz,
    expected_revenue_closed, expected_revenue_mc, ic_metric_dp_closed, ic_metric_mc,
    ic_metric_srcp_closed, srcp_revenue_bound_with_constants, validate_dp_revenue_bound,
};
use rcp::numeric::rng_stream;

fn uniform01() -> ValueDistribution {
    ValueDistribution::uniform(0.0, 1.0).unwrap()
}

fn tln() -> ValueDistribution {
    ValueDistribution::truncated_lognormal(0.0, 0.5, 0.0, 2.5).unwrap()
}

fn report(id: &str, pass: bool, detail: &str) {
    println!(
        "ACCEPTANCE {id}: {} — {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {id} failed: {detail}");
}

/// Criterion 1: the sort-based solver matches a 1e-5-step brute-force scan
/// of the empirical clearing loss within one grid step on 100 random
/// instances with n <= 3, K <= 20.
#[test]
fn acceptance_1_exact_solver_equivalence() {
    const STEP: f64 = 1e-5;
    let mut rng = rng_stream(0xACC0, &[1]);
    let mut worst_dist: f64 = 0.0;
    let mut worst_excess: f64 = 0.0;
    for _ in 0..100 {
        let n = rng.gen_range(1..=3usize);
        let k = rng.gen_range(1..=20usize);
        let profiles: Vec<BidProfile> = (0..k)
            .map(|_| BidProfile::new((0..n).map(|_| rng.gen::<f64>()).collect()))
            .collect();
        let batch = BidBatch::new(profiles).unwrap();
        let lambda = rng.gen::<f64>() * n as f64;
        let exact = empirical_clearing_price(&batch, lambda).unwrap();

        let hi = batch.pooled_bids().iter().copied().fold(0.0f64, f64::max);
        let mut best = (f64::INFINITY, 0.0f64);
        let mut p = 0.0;
        while p <= hi + STEP {
            let loss = batch_clearing_loss(p, &batch, lambda);
            if loss < best.0 {
                best = (loss, p);
            }
            p += STEP;
        }
        worst_dist = worst_dist.max((exact - best.1).abs());
        worst_excess =
            worst_excess.max(batch_clearing_loss(exact, &batch, lambda) - best.0);
    }
    report(
        "1 (exact solver vs brute force)",
        worst_dist <= STEP + 1e-12 && worst_excess <= 1e-12,
        &format!("max |argmin gap| {worst_dist:.2e} (step {STEP:.0e}), max loss excess {worst_excess:.2e}"),
    );
}

/// Criterion 2: closed-form clearing anchors — single uniform bidder
/// price 1 - lambda, n i.i.d. uniforms 1 - lambda/n (1e-8), and the
/// symmetric smoothed reserve 1/2 (1e-6).
#[test]
fn acceptance_2_oracle_anchors() {
    let mut worst_single: f64 = 0.0;
    let one = MarketProfile::iid(uniform01(), 1).unwrap();
    for lambda in [0.1, 0.3, 0.5, 0.7, 0.9] {
        worst_single =
            worst_single.max((oracle_clearing_price(&one, lambda) - (1.0 - lambda)).abs());
    }
    let mut worst_iid: f64 = 0.0;
    for n in [2usize, 3, 5] {
        let p = MarketProfile::iid(uniform01(), n).unwrap();
        for frac in [0.2, 0.5, 0.8] {
            let lambda = frac * n as f64;
            worst_iid = worst_iid
                .max((oracle_clearing_price(&p, lambda) - (1.0 - lambda / n as f64)).abs());
        }
    }
    let mut worst_sym: f64 = 0.0;
    for eps in [0.5, 2.0, 8.0] {
        let noise = NoiseDistribution::laplace(eps).unwrap();
        worst_sym = worst_sym.max((smoothed_oracle_reserve(&one, &noise, 0.5) - 0.5).abs());
    }
    report(
        "2 (closed-form oracle anchors)",
        worst_single < 1e-8 && worst_iid < 1e-8 && worst_sym < 1e-6,
        &format!(
            "single-bidder err {worst_single:.2e}, iid err {worst_iid:.2e}, symmetric smoothed err {worst_sym:.2e}"
        ),
    );
}

/// Criterion 3: clearing-price sensitivity special cases
/// (quantile(1 - lambda) for one bidder, quantile(1 - lambda/n)/n for n
/// i.i.d. bidders, both to 1e-8) and agreement with a finite difference of
/// the shaded oracle price to 1e-3 relative.
#[test]
fn acceptance_3_sensitivity_special_cases() {
    use rcp::distributions::BiddingStrategy;
    let mut worst_anchor: f64 = 0.0;
    let one = MarketProfile::iid(uniform01(), 1).unwrap();
    for lambda in [0.2, 0.5, 0.8] {
        let eta = clearing_price_sensitivity(&one, lambda, 0).unwrap();
        worst_anchor = worst_anchor.max((eta - (1.0 - lambda)).abs());
    }
    for n in [2usize, 3] {
        for dist in [uniform01(), tln()] {
            let p = MarketProfile::iid(dist, n).unwrap();
            let lambda = 0.4 * n as f64;
            let eta = clearing_price_sensitivity(&p, lambda, 0).unwrap();
            let want = dist.quantile(1.0 - lambda / n as f64).unwrap() / n as f64;
            worst_anchor = worst_anchor.max((eta - want).abs());
        }
    }

    let mut worst_fd_rel: f64 = 0.0;
    let profiles = [
        MarketProfile::iid(uniform01(), 1).unwrap(),
        MarketProfile::iid(uniform01(), 2).unwrap(),
        MarketProfile::iid(tln(), 1).unwrap(),
        MarketProfile::iid(tln(), 2).unwrap(),
        MarketProfile::iid(tln(), 3).unwrap(),
    ];
    for profile in &profiles {
        let lambda = 0.4 * profile.n() as f64;
        let eta = clearing_price_sensitivity(profile, lambda, 0).unwrap();
        let h = 1e-4;
        let up = profile.with_strategy(0, BiddingStrategy::linear_shading(1.0 + h).unwrap());
        let dn = profile.with_strategy(0, BiddingStrategy::linear_shading(1.0 - h).unwrap());
        let fd =
            (oracle_clearing_price(&up, lambda) - oracle_clearing_price(&dn, lambda)) / (2.0 * h);
        worst_fd_rel = worst_fd_rel.max((fd - eta).abs() / eta.abs().max(1e-12));
    }
    report(
        "3 (sensitivity special cases + finite difference)",
        worst_anchor < 1e-8 && worst_fd_rel < 1e-3,
        &format!("max anchor err {worst_anchor:.2e}, max fd rel err {worst_fd_rel:.2e}"),
    );
}

/// Criterion 4: closed-form revenue vs 1e6-sample Monte Carlo within 3 CI
/// half-widths across >= 15 (profile, reserve) cases; the two-bidder
/// zero-reserve value is 1/3 within 0.002.
#[test]
fn acceptance_4_revenue_consistency() {
    let profiles = [
        MarketProfile::iid(uniform01(), 1).unwrap(),
        MarketProfile::iid(uniform01(), 2).unwrap(),
        MarketProfile::iid(uniform01(), 3).unwrap(),
        MarketProfile::iid(tln(), 1).unwrap(),
        MarketProfile::iid(tln(), 2).unwrap(),
    ];
    let mut cases = 0usize;
    let mut worst_sigmas: f64 = 0.0;
    for (pi, profile) in profiles.iter().enumerate() {
        let (_, hi) = profile.support();
        for (ri, frac) in [0.0, 0.25, 0.5, 0.8].iter().enumerate() {
            let reserve = frac * hi;
            let seed = 0xACC4 + (pi * 10 + ri) as u64;
            let mut rng = rng_stream(seed, &[2]);
            let est = expected_revenue_mc(profile, |_| reserve, 1_000_000, &mut rng, seed).unwrap();
            let closed = expected_revenue_closed(profile, reserve);
            let dev = (est.mean - closed).abs();
            if est.ci_half_width > 0.0 {
                worst_sigmas = worst_sigmas.max(dev / est.ci_half_width);
            } else {
                assert!(dev == 0.0, "zero-variance case deviates: {dev}");
            }
            cases += 1;
        }
    }
    let two = MarketProfile::iid(uniform01(), 2).unwrap();
    let anchor_err = (expected_revenue_closed(&two, 0.0) - 1.0 / 3.0).abs();
    let mut rng = rng_stream(0xACC4, &[3]);
    let mc = expected_revenue_mc(&two, |_| 0.0, 1_000_000, &mut rng, 0xACC4).unwrap();
    let mc_err = (mc.mean - 1.0 / 3.0).abs();
    report(
        "4 (revenue closed form vs Monte Carlo)",
        cases >= 15 && worst_sigmas <= 3.0 && anchor_err < 1e-9 && mc_err < 0.002,
        &format!(
            "{cases} cases, worst deviation {worst_sigmas:.2} CI half-widths; two-bidder zero-reserve errs {anchor_err:.1e} (closed), {mc_err:.1e} (mc)"
        ),
    );
}

/// Criterion 5: the closed-form incentive metrics match the
/// common-random-number Monte Carlo at alpha = 0.01 with 1e7 samples,
/// within max(3 CI half-widths, 0.01), across n in {1, 2} and both
/// mechanisms.
#[test]
fn acceptance_5_ic_metric_cross_validation() {
    let noise = NoiseDistribution::laplace(2.0).unwrap();
    let one = MarketProfile::iid(uniform01(), 1).unwrap();
    let two = MarketProfile::iid(uniform01(), 2).unwrap();
    let configs: [(&MarketProfile, MechanismKind, f64, u64); 4] = [
        (&one, MechanismKind::DpRcp, 0.5, 0xACC5),
        (&one, MechanismKind::Srcp, 0.5, 0xACC6),
        (&two, MechanismKind::DpRcp, 1.0, 0xACC7),
        (&two, MechanismKind::Srcp, 1.0, 0xACC8),
    ];
    let mut detail = String::new();
    let mut ok = true;
    for (profile, kind, lambda, seed) in configs {
        let config = MechanismConfig::new(kind, lambda, noise);
        let est = ic_metric_mc(&config, profile, 0, 0.01, 10_000_000, seed).unwrap();
        let closed = match kind {
            MechanismKind::Srcp => ic_metric_srcp_closed(profile, lambda, &noise, 0).unwrap(),
            _ => ic_metric_dp_closed(profile, lambda, &noise, 0).unwrap(),
        };
        let tol = (3.0 * est.ci_half_width).max(0.01);
        let err = (est.mean - closed).abs();
        ok &= err <= tol;
        detail.push_str(&format!(
            " [n={} {kind}: mc {:.4} vs closed {closed:.4}, err {err:.4} <= tol {tol:.4}]",
            profile.n(),
            est.mean,
        ));
    }
    report("5 (incentive metric closed vs MC)", ok, &detail);
}

/// Criterion 6: empirical validity of the noisy-reserve revenue guarantee
/// on the unit uniform single-bidder profile — the violation rate over 1e5
/// draws stays within delta plus three binomial standard errors.
#[test]
fn acceptance_6_dp_revenue_bound_validity() {
    let one = MarketProfile::iid(uniform01(), 1).unwrap();
    let n_trials = 100_000usize;
    let mut ok = true;
    let mut detail = String::new();
    for eps in [2.0, 10.0] {
        for delta in [0.05, 0.2] {
            let rate = validate_dp_revenue_bound(&one, 0.5, eps, delta, n_trials, 0xACC9).unwrap();
            let limit = delta + 3.0 * (delta * (1.0 - delta) / n_trials as f64).sqrt();
            ok &= rate <= limit;
            detail.push_str(&format!(" [eps={eps} delta={delta}: rate {rate:.4} <= {limit:.4}]"));
        }
    }
    report("6 (noisy-reserve revenue guarantee)", ok, &detail);
}

/// Criterion 7: deterministic validity of the smoothing revenue guarantee
/// on a 4x9 (lambda, epsilon) grid for one- and two-bidder uniform and
/// truncated-lognormal profiles, with Lipschitz constants from the grid
/// estimators.
#[test]
fn acceptance_7_srcp_revenue_bound_validity() {
    let profiles = [
        MarketProfile::iid(uniform01(), 1).unwrap(),
        MarketProfile::iid(uniform01(), 2).unwrap(),
        MarketProfile::iid(tln(), 1).unwrap(),
        MarketProfile::iid(tln(), 2).unwrap(),
    ];
    let mut points = 0usize;
    let mut ok = true;
    let mut worst_margin = f64::INFINITY;
    for profile in &profiles {
        let n = profile.n() as f64;
        let l = estimate_order_stat_lipschitz(profile);
        let mu = estimate_gamma_lipschitz(profile).unwrap();
        for frac in [0.2, 0.4, 0.6, 0.8] {
            for eps in [0.1, 0.2, 0.4, 0.8, 1.6, 3.2, 6.4, 12.8, f64::INFINITY] {
                let check =
                    srcp_revenue_bound_with_constants(profile, frac * n, eps, l, mu).unwrap();
                ok &= check.holds();
                worst_margin =
                    worst_margin.min(check.rev_smoothed - (check.rev_clearing - check.bound));
                points += 1;
            }
        }
    }
    report(
        "7 (smoothing revenue guarantee grid)",
        ok && points == 144,
        &format!("{points} grid points, worst margin {worst_margin:.3e}"),
    );
}

// ---------------------------------------------------------------------
// Criterion 8/9 share one standard-protocol sweep on the two-bidder
// truncated-lognormal profile (and its single-jobs rerun for determinism).

fn two_bidder_grid() -> ExperimentGrid {
    ExperimentGrid::standard(
        MarketProfile::iid(tln(), 2).unwrap(),
        vec![0.4, 0.8, 1.2, 1.6],
        12345,
    )
}

fn shared_sweep() -> &'static [SweepResult] {
    static SWEEP: OnceLock<Vec<SweepResult>> = OnceLock::new();
    SWEEP.get_or_init(|| run_sweep_with_jobs(&two_bidder_grid(), Some(4)).unwrap())
}

fn cell(results: &[SweepResult], mech: MechanismKind, lambda: f64, eps: f64) -> &SweepResult {
    results
        .iter()
        .find(|r| r.mechanism == mech && r.lambda == lambda && r.epsilon.total_cmp(&eps).is_eq())
        .expect("cell present")
}

/// Criterion 8a: with the standard protocol (truncated lognormal values,
/// 5,000 auctions per stage, alpha = 0.1, 10 repetitions), the noisy
/// mechanism's lambda = 1.6 curve is Pareto-undominated among
/// {0.4, 0.8, 1.2, 1.6} under CI-aware dominance.
#[test]
fn acceptance_8a_lambda_16_undominated() {
    let results = shared_sweep();
    let report_data = rcp::experiments::pareto_summary(results).unwrap();
    let undominated = report_data.undominated_lambdas(MechanismKind::DpRcp);
    report(
        "8a (two-bidder dp_rcp lambda=1.6 undominated)",
        undominated.contains(&1.6),
        &format!("undominated lambdas {undominated:?}"),
    );
}

/// Criterion 8b: some noise level of the lambda = 1.6 noisy-mechanism
/// curve attains an incentive metric of at least 0.95 while its revenue
/// stays within 3 combined CI half-widths of the curve's no-noise revenue.
///
/// The measured frontier narrowly misses this target and the check is
/// expected to fail: with the metric's defining normalizer
/// `E[v_i G_i(v_i)]`, the no-noise metric sits at 0.922 (closed form and
/// Monte Carlo agree), every cell with near-no-noise revenue reads at most
/// 0.928, and the closest cell to both conditions (eps = 1.6) reads 0.949
/// at 86% of the no-noise revenue. The assertion is kept as the original
/// target rather than loosened; the printed per-cell table documents the
/// frontier.
#[test]
fn acceptance_8b_high_ic_near_optimal_revenue() {
    let results = shared_sweep();
    let grid = two_bidder_grid();
    let reference = cell(results, MechanismKind::DpRcp, 1.6, f64::INFINITY);
    let mut best_near: Option<(f64, f64)> = None; // (dic, eps) among near-revenue cells
    let mut satisfied = false;
    for &eps in &grid.epsilons {
        let c = cell(results, MechanismKind::DpRcp, 1.6, eps);
        let dic = c.dic[0].1.mean;
        let rev_gap = (c.revenue.mean - reference.revenue.mean).abs();
        let band = 3.0 * (c.revenue.ci_half_width + reference.revenue.ci_half_width);
        let near = rev_gap <= band;
        println!(
            "  8b cell eps={eps}: dic={dic:.4}, revenue={:.4} (gap {rev_gap:.4}, 3-CI band {band:.4}, near={near})",
            c.revenue.mean
        );
        if dic >= 0.95 && near {
            satisfied = true;
        }
        if near && best_near.is_none_or(|(d, _)| dic > d) {
            best_near = Some((dic, eps));
        }
    }
    report(
        "8b (lambda=1.6: DIC >= 0.95 at near-no-noise revenue)",
        satisfied,
        &format!("best (dic, eps) among near-revenue cells: {best_near:?}"),
    );
}

/// Criterion 8c: the no-noise cells of the two mechanisms coincide within
/// combined CI half-widths (they are in fact bit-identical by the shared
/// random-number design).
#[test]
fn acceptance_8c_no_noise_cells_coincide() {
    let results = shared_sweep();
    let mut ok = true;
    let mut detail = String::new();
    for &lambda in &[0.4, 0.8, 1.2, 1.6] {
        let dp = cell(results, MechanismKind::DpRcp, lambda, f64::INFINITY);
        let sm = cell(results, MechanismKind::Srcp, lambda, f64::INFINITY);
        let rev_gap = (dp.revenue.mean - sm.revenue.mean).abs();
        let rev_band = dp.revenue.ci_half_width + sm.revenue.ci_half_width;
        let dic_gap = (dp.dic[0].1.mean - sm.dic[0].1.mean).abs();
        let dic_band = dp.dic[0].1.ci_half_width + sm.dic[0].1.ci_half_width;
        ok &= rev_gap <= rev_band && dic_gap <= dic_band;
        detail.push_str(&format!(
            " [lambda={lambda}: rev gap {rev_gap:.2e}, dic gap {dic_gap:.2e}]"
        ));
    }
    report("8c (no-noise cells coincide across mechanisms)", ok, &detail);
}

/// Criterion 9: the same master seed renders byte-identical sweep CSVs
/// whatever the worker-thread count.
#[test]
fn acceptance_9_jobs_invariant_determinism() {
    let grid = two_bidder_grid();
    let meta = SweepMeta {
        tool_version: "test".into(),
        config_hash: "acceptance".into(),
        master_seed: grid.master_seed,
    };
    let csv_parallel = render_sweep_csv(shared_sweep(), &meta);
    let serial = run_sweep_with_jobs(&grid, Some(1)).unwrap();
    let csv_serial = render_sweep_csv(&serial, &meta);
    let data_rows = csv_parallel
        .lines()
        .filter(|l| !l.starts_with('#'))
        .count()
        - 1;
    report(
        "9 (worker-count determinism)",
        csv_parallel == csv_serial && data_rows == 72,
        &format!(
            "{data_rows} rows, {} bytes, serial and 4-thread renders {}",
            csv_parallel.len(),
            if csv_parallel == csv_serial { "identical" } else { "DIFFER" }
        ),
    );
}
