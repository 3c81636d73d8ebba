//! Clearing prices: the exact empirical solver and the population oracles.
//!
//! The clearing loss for one bid profile `b` at price `p` is
//!
//! ```text
//! loss(p, b; lambda) = sum_i max(b_i - p, 0) + lambda * p
//! ```
//!
//! Averaged over a batch it is convex piecewise-linear in `p`, so its exact
//! minimizer is an order statistic of the pooled bids; no iterative
//! optimization is needed. `lambda` in `[0, n]` trades match rate against
//! revenue: `lambda = 0` clears at the highest pooled bid, `lambda = n`
//! clears at zero.
//!
//! The population counterparts solve the first-order conditions directly:
//! [`oracle_clearing_price`] inverts the aggregate bid CDF, and
//! [`smoothed_oracle_reserve`] does the same after convolving each bid with
//! the noise law.

use std::fmt::Write as _;
use std::path::Path;

use crate::distributions::{MarketProfile, NoiseDistribution};
use crate::error::{Error, Result};
use crate::numeric::{bisect_nondecreasing, integrate_with_breaks};

/// One auction's bids, in bidder order. Bids may be negative after
/// smoothing noise has been added.
#[derive(Debug, Clone, PartialEq)]
pub struct BidProfile {
    pub bids: Vec<f64>,
}

impl BidProfile {
    pub fn new(bids: Vec<f64>) -> Self {
        BidProfile { bids }
    }

    pub fn n(&self) -> usize {
        self.bids.len()
    }
}

/// A batch of `K` historical bid profiles sharing the same bidder count.
#[derive(Debug, Clone, PartialEq)]
pub struct BidBatch {
    profiles: Vec<BidProfile>,
    n: usize,
}

impl BidBatch {
    pub fn new(profiles: Vec<BidProfile>) -> Result<Self> {
        let n = profiles.first().map(|p| p.n()).ok_or(Error::EmptyBatch)?;
        if n == 0 {
            return Err(Error::EmptyBatch);
        }
        for (index, p) in profiles.iter().enumerate() {
            if p.n() != n {
                return Err(Error::RaggedBatch {
                    expected: n,
                    index,
                    got: p.n(),
                });
            }
        }
        Ok(BidBatch { profiles, n })
    }

    /// Bidders per profile.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of profiles `K`.
    pub fn len(&self) -> usize {
        self.profiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profiles.is_empty()
    }

    pub fn profiles(&self) -> &[BidProfile] {
        &self.profiles
    }

    /// All `n * K` bids in one vector.
    pub fn pooled_bids(&self) -> Vec<f64> {
        self.profiles
            .iter()
            .flat_map(|p| p.bids.iter().copied())
            .collect()
    }

    /// Parses the `bid_1,...,bid_n` CSV format. Errors carry 1-based
    /// row/column coordinates (row 1 is the header).
    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or(Error::EmptyBatch)?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        let n = cols.len();
        for (c, name) in cols.iter().enumerate() {
            let expected = format!("bid_{}", c + 1);
            if *name != expected {
                return Err(Error::BatchCsv {
                    row: 1,
                    column: c + 1,
                    message: format!("expected header '{expected}', found '{name}'"),
                });
            }
        }
        let mut profiles = Vec::new();
        for (idx, line) in lines {
            let row = idx + 1;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != n {
                return Err(Error::BatchCsv {
                    row,
                    column: fields.len().max(1),
                    message: format!("expected {n} bids, found {}", fields.len()),
                });
            }
            let mut bids = Vec::with_capacity(n);
            for (c, field) in fields.iter().enumerate() {
                let bid: f64 = field.parse().map_err(|_| Error::BatchCsv {
                    row,
                    column: c + 1,
                    message: format!("invalid bid '{field}'"),
                })?;
                bids.push(bid);
            }
            profiles.push(BidProfile::new(bids));
        }
        BidBatch::new(profiles)
    }

    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv_str(&text)
    }

    /// Renders the batch back into the `bid_1,...,bid_n` CSV format.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        let header: Vec<String> = (1..=self.n).map(|i| format!("bid_{i}")).collect();
        let _ = writeln!(out, "{}", header.join(","));
        for p in &self.profiles {
            let row: Vec<String> = p.bids.iter().map(|b| format!("{b}")).collect();
            let _ = writeln!(out, "{}", row.join(","));
        }
        out
    }
}

fn check_lambda(lambda: f64, n: usize) -> Result<()> {
    if !lambda.is_finite() || lambda < 0.0 {
        return Err(Error::InvalidLambda(lambda));
    }
    if lambda > n as f64 {
        return Err(Error::LambdaExceedsBidders { lambda, n });
    }
    Ok(())
}

/// Clearing loss of one bid profile at price `p`.
pub fn clearing_loss(price: f64, bids: &[f64], lambda: f64) -> f64 {
    bids.iter().map(|b| (b - price).max(0.0)).sum::<f64>() + lambda * price
}

/// Mean clearing loss over a batch at price `p`.
pub fn batch_clearing_loss(price: f64, batch: &BidBatch, lambda: f64) -> f64 {
    batch
        .profiles()
        .iter()
        .map(|p| clearing_loss(price, &p.bids, lambda))
        .sum::<f64>()
        / batch.len() as f64
}

/// Exact minimizer of the mean clearing loss over the batch, clamped at 0.
///
/// The mean loss is convex piecewise-linear with subgradient
/// `lambda - #{pooled bids > p}/K` between bid values, so the minimizer set
/// is bracketed by order statistics of the pooled bids: sorting all `n*K`
/// bids descending as `s_1 >= s_2 >= ...`, the left endpoint of the
/// minimizer set is `s_{floor(lambda*K) + 1}` (one past the end reads as
/// `-inf`, which the final clamp maps to 0). When the minimizer is a flat
/// interval this picks its left endpoint. `lambda*K` is snapped to the
/// nearest integer at relative tolerance 1e-9 so that nominal integer
/// thresholds are not shifted by float rounding.
pub fn empirical_clearing_price(batch: &BidBatch, lambda: f64) -> Result<f64> {
    check_lambda(lambda, batch.n())?;
    let mut pooled = batch.pooled_bids();
    pooled.sort_by(|a, b| b.partial_cmp(a).expect("bids must not be NaN"));

    let t_raw = lambda * batch.len() as f64;
    let snapped = t_raw.round();
    let t = if (t_raw - snapped).abs() <= 1e-9 * t_raw.abs().max(1.0) {
        snapped
    } else {
        t_raw
    };
    let idx = t.floor() as usize;
    let price = if idx >= pooled.len() {
        f64::NEG_INFINITY
    } else {
        pooled[idx]
    };
    Ok(price.max(0.0))
}

/// Aggregate stage-1 bid CDF `H(p) = sum_i D_i(strategy_i^{-1}(p))` minus
/// the target level `n - lambda`; the clearing-price first-order condition
/// is `H(p) = n - lambda`.
fn clearing_condition(profile: &MarketProfile, lambda: f64) -> impl Fn(f64) -> f64 + '_ {
    let target = profile.n() as f64 - lambda;
    move |p: f64| {
        profile
            .bidders()
            .iter()
            .map(|b| b.value.cdf(b.strategy.inverse(p)))
            .sum::<f64>()
            - target
    }
}

/// Population clearing price: the smallest `p >= 0` with
/// `sum_i D_i(strategy_i^{-1}(p)) >= n - lambda`, found by bisection to an
/// interval of width 1e-10.
///
/// # Panics
/// Panics when `lambda` is outside `[0, n]`.
pub fn oracle_clearing_price(profile: &MarketProfile, lambda: f64) -> f64 {
    assert!(
        lambda >= 0.0 && lambda <= profile.n() as f64,
        "lambda must lie in [0, n]"
    );
    let h = clearing_condition(profile, lambda);
    let hi = profile.max_strategy_bid().max(0.0);
    bisect_nondecreasing(h, 0.0, hi, 1e-10)
}

/// Expected noise-smoothed bid CDF at price `p`:
/// `sum_i E_v[F(p - strategy_i(v_i))]`, each expectation by adaptive
/// quadrature with a forced split at the kernel kink.
fn smoothed_condition_sum(profile: &MarketProfile, noise: &NoiseDistribution, p: f64) -> f64 {
    profile
        .bidders()
        .iter()
        .map(|b| {
            let (lo, hi) = b.value.support();
            // F(p - bid(v)) kinks where the bid crosses p.
            let kink = b.strategy.inverse(p);
            integrate_with_breaks(
                |v| noise.cdf(p - b.strategy.apply(v)) * b.value.pdf(v),
                lo,
                hi,
                &[kink],
                1e-9,
            )
        })
        .sum()
}

/// Population reserve of the bid-smoothing mechanism.
///
/// Returns 0 when `sum_i E[F(-strategy_i(v_i))] >= n - lambda`; otherwise
/// the unique root of `sum_i E[F(p - strategy_i(v_i))] = n - lambda`,
/// bisected to a width of 1e-10. Inner integrals use adaptive quadrature at
/// 1e-9 absolute tolerance. With degenerate (zero) noise this reduces to
/// [`oracle_clearing_price`].
///
/// # Panics
/// Panics when `lambda` is outside `[0, n]`, or when `lambda == 0` with
/// unbounded noise (the root diverges: the smoothed bid CDF never reaches
/// `n` at any finite price).
pub fn smoothed_oracle_reserve(
    profile: &MarketProfile,
    noise: &NoiseDistribution,
    lambda: f64,
) -> f64 {
    let n = profile.n() as f64;
    assert!(lambda >= 0.0 && lambda <= n, "lambda must lie in [0, n]");
    if noise.is_degenerate() {
        return oracle_clearing_price(profile, lambda);
    }
    assert!(
        lambda > 0.0,
        "no finite smoothed clearing price at lambda = 0 with unbounded noise"
    );
    let target = n - lambda;
    if smoothed_condition_sum(profile, noise, 0.0) >= target {
        return 0.0;
    }
    let b = noise.scale();
    let mut hi = profile.max_strategy_bid().max(0.0) + b * (10.0 + (1.0 + n / lambda).ln());
    // The nominal bracket leaves < 5e-5 kernel mass unaccounted; grow it in
    // the rare case that is not enough.
    let mut grow = 0;
    while smoothed_condition_sum(profile, noise, hi) < target && grow < 64 {
        hi += 10.0 * b;
        grow += 1;
    }
    bisect_nondecreasing(
        |p| smoothed_condition_sum(profile, noise, p) - target,
        0.0,
        hi,
        1e-10,
    )
}

/// The same reserve computed through the equivalent convolution form
/// `sum_i E_z[D_i(strategy_i^{-1}(p - z))] = n - lambda` (generalized
/// inverse mapping nonpositive arguments to 0). Cross-check for
/// [`smoothed_oracle_reserve`]; the two roots agree within 1e-6.
pub fn smoothed_oracle_reserve_by_convolution(
    profile: &MarketProfile,
    noise: &NoiseDistribution,
    lambda: f64,
) -> f64 {
    let n = profile.n() as f64;
    assert!(lambda >= 0.0 && lambda <= n, "lambda must lie in [0, n]");
    if noise.is_degenerate() {
        return oracle_clearing_price(profile, lambda);
    }
    assert!(
        lambda > 0.0,
        "no finite smoothed clearing price at lambda = 0 with unbounded noise"
    );
    let b = noise.scale();
    let tail = b * (10.0 + (1.0 + n / lambda).ln());
    let condition = |p: f64| -> f64 {
        profile
            .bidders()
            .iter()
            .map(|bd| {
                let bid_hi = bd.strategy.apply(bd.value.hi());
                // Below z = p - bid_hi the integrand is exactly 1.
                let lo_z = p - bid_hi;
                let hi_z = p + tail;
                noise.cdf(lo_z)
                    + integrate_with_breaks(
                        |z| bd.value.cdf(bd.strategy.inverse(p - z)) * noise.pdf(z),
                        lo_z,
                        hi_z,
                        &[0.0, p],
                        1e-9,
                    )
            })
            .sum::<f64>()
            - (n - lambda)
    };
    if condition(0.0) >= 0.0 {
        return 0.0;
    }
    let mut hi = profile.max_strategy_bid().max(0.0) + tail;
    let mut grow = 0;
    while condition(hi) < 0.0 && grow < 64 {
        hi += 10.0 * b;
        grow += 1;
    }
    bisect_nondecreasing(condition, 0.0, hi, 1e-10)
}

/// Analytic bound on the gap between the smoothed reserve and the plain
/// clearing price:
///
/// ```text
/// |r_smoothed - p_clearing| <= ln(1/delta)/epsilon
///                              + mu * delta * max(n - lambda, lambda) / (1 - delta)
/// ```
///
/// for any `delta` in `(0, 1)`, where `mu` is a Lipschitz constant of the
/// inverse aggregate bid CDF (see
/// [`estimate_gamma_lipschitz`](crate::metrics::estimate_gamma_lipschitz)).
pub fn reserve_gap_bound(
    profile: &MarketProfile,
    noise: &NoiseDistribution,
    lambda: f64,
    delta: f64,
    mu: f64,
) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::DeltaOutOfRange(delta));
    }
    check_lambda(lambda, profile.n())?;
    let n = profile.n() as f64;
    let eps = noise.epsilon();
    Ok((1.0 / delta).ln() / eps + mu * delta * (n - lambda).max(lambda) / (1.0 - delta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{Bidder, BiddingStrategy, ValueDistribution};
    use crate::numeric::rng_stream;
    use proptest::prelude::*;
    use rand::Rng;

    fn batch(rows: &[&[f64]]) -> BidBatch {
        BidBatch::new(rows.iter().map(|r| BidProfile::new(r.to_vec())).collect()).unwrap()
    }

    fn uniform01() -> ValueDistribution {
        ValueDistribution::uniform(0.0, 1.0).unwrap()
    }

    /// Brute-force scan of the batch loss; the independent oracle for the
    /// exact solver.
    fn scan_minimizer(b: &BidBatch, lambda: f64, step: f64) -> f64 {
        let pooled = b.pooled_bids();
        let lo = pooled.iter().copied().fold(f64::INFINITY, f64::min).min(0.0);
        let hi = pooled.iter().copied().fold(0.0f64, f64::max);
        let mut best = (f64::INFINITY, 0.0);
        let mut p = lo.max(0.0);
        while p <= hi + step {
            let loss = batch_clearing_loss(p, b, lambda);
            if loss < best.0 {
                best = (loss, p);
            }
            p += step;
        }
        best.1
    }

    #[test]
    fn clearing_loss_examples() {
        assert_eq!(clearing_loss(0.0, &[0.2, 0.5, 0.8], 1.0), 1.5);
        assert!((clearing_loss(0.5, &[0.2, 0.5, 0.8], 1.0) - 0.8).abs() < 1e-15);
        // At or above the max bid only the linear term survives.
        for p in [0.8, 1.0, 3.7] {
            assert!((clearing_loss(p, &[0.2, 0.5, 0.8], 0.6) - 0.6 * p).abs() < 1e-15);
        }
    }

    #[test]
    fn empirical_price_worked_example() {
        let b = batch(&[&[0.2], &[0.5], &[0.8]]);
        assert_eq!(empirical_clearing_price(&b, 0.5).unwrap(), 0.5);
        // Brute force confirms the subgradient flips at 0.5.
        assert!((scan_minimizer(&b, 0.5, 1e-4) - 0.5).abs() <= 1e-4);
    }

    #[test]
    fn empirical_price_lambda_extremes() {
        let b = batch(&[&[0.2, 0.4], &[0.5, 0.3], &[0.8, 0.1]]);
        assert_eq!(empirical_clearing_price(&b, 2.0).unwrap(), 0.0);
        assert_eq!(empirical_clearing_price(&b, 0.0).unwrap(), 0.8);
    }

    #[test]
    fn empirical_price_rejects_bad_lambda() {
        let b = batch(&[&[0.2], &[0.5]]);
        assert!(matches!(
            empirical_clearing_price(&b, 1.5),
            Err(Error::LambdaExceedsBidders { .. })
        ));
        assert!(matches!(
            empirical_clearing_price(&b, -0.1),
            Err(Error::InvalidLambda(_))
        ));
    }

    #[test]
    fn empirical_matches_brute_force_on_random_instances() {
        let mut rng = rng_stream(101, &[1]);
        for case in 0..100 {
            let n = rng.gen_range(1..=3usize);
            let k = rng.gen_range(1..=20usize);
            let profiles: Vec<BidProfile> = (0..k)
                .map(|_| BidProfile::new((0..n).map(|_| rng.gen::<f64>()).collect()))
                .collect();
            let b = BidBatch::new(profiles).unwrap();
            let lambda = rng.gen::<f64>() * n as f64;
            let exact = empirical_clearing_price(&b, lambda).unwrap();
            let scanned = scan_minimizer(&b, lambda, 1e-4);
            let exact_loss = batch_clearing_loss(exact, &b, lambda);
            let scan_loss = batch_clearing_loss(scanned, &b, lambda);
            assert!(
                exact_loss <= scan_loss + 1e-12,
                "case {case}: scan found smaller loss ({scan_loss} < {exact_loss})"
            );
        }
    }

    proptest! {
        #[test]
        fn price_nonincreasing_in_lambda(
            bids in proptest::collection::vec(0.0f64..1.0, 1..30),
            l1 in 0.0f64..1.0,
            l2 in 0.0f64..1.0,
        ) {
            let b = BidBatch::new(bids.iter().map(|&x| BidProfile::new(vec![x])).collect()).unwrap();
            let (lo, hi) = if l1 <= l2 { (l1, l2) } else { (l2, l1) };
            let p_lo = empirical_clearing_price(&b, lo).unwrap();
            let p_hi = empirical_clearing_price(&b, hi).unwrap();
            prop_assert!(p_hi <= p_lo);
        }

        #[test]
        fn price_scales_with_bids(
            bids in proptest::collection::vec(0.0f64..1.0, 2..24),
            lambda in 0.0f64..2.0,
            c in 0.01f64..100.0,
        ) {
            let rows: Vec<BidProfile> = bids.chunks_exact(2).map(|r| BidProfile::new(r.to_vec())).collect();
            let b = BidBatch::new(rows.clone()).unwrap();
            let lambda = lambda.min(b.n() as f64);
            let scaled = BidBatch::new(
                rows.iter().map(|p| BidProfile::new(p.bids.iter().map(|x| c * x).collect())).collect()
            ).unwrap();
            let p = empirical_clearing_price(&b, lambda).unwrap();
            let ps = empirical_clearing_price(&scaled, lambda).unwrap();
            prop_assert_eq!(ps, c * p);
        }

        #[test]
        fn price_shifts_with_bids(
            bids in proptest::collection::vec(0.0f64..1.0, 1..24),
            lambda in 0.0f64..1.0,
            c in 0.0f64..3.0,
        ) {
            let b = BidBatch::new(bids.iter().map(|&x| BidProfile::new(vec![x])).collect()).unwrap();
            let shifted = BidBatch::new(bids.iter().map(|&x| BidProfile::new(vec![x + c])).collect()).unwrap();
            let p = empirical_clearing_price(&b, lambda).unwrap();
            let ps = empirical_clearing_price(&shifted, lambda).unwrap();
            prop_assert!(ps >= p);
            // With an interior unique minimizer the shift is exact.
            let t = lambda * b.len() as f64;
            if (t - t.round()).abs() > 1e-6 && p > 0.0 {
                prop_assert!((ps - (p + c)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn oracle_price_uniform_anchors() {
        let single = MarketProfile::iid(uniform01(), 1).unwrap();
        assert!((oracle_clearing_price(&single, 0.3) - 0.7).abs() < 1e-8);
        for n in [2usize, 3, 5] {
            let p = MarketProfile::iid(uniform01(), n).unwrap();
            for lambda in [0.25, 1.0, 1.5] {
                let want = 1.0 - lambda / n as f64;
                assert!((oracle_clearing_price(&p, lambda) - want).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn oracle_price_matches_pooled_quantile() {
        let d = ValueDistribution::truncated_lognormal(0.0, 0.5, 0.0, 2.5).unwrap();
        for n in [1usize, 2, 3] {
            let p = MarketProfile::iid(d, n).unwrap();
            for lambda in [0.2 * n as f64, 0.6 * n as f64] {
                let got = oracle_clearing_price(&p, lambda);
                let want = d.quantile(1.0 - lambda / n as f64).unwrap();
                assert!((got - want).abs() < 1e-8, "n={n} lambda={lambda}");
            }
        }
    }

    #[test]
    fn oracle_price_under_shading_matches_monte_carlo() {
        // Single uniform bidder shading at 0.5, lambda = 0.3: analytic root
        // is 0.35; confirm by Monte Carlo minimization of the expected loss.
        let profile = MarketProfile::new(vec![Bidder {
            value: uniform01(),
            strategy: BiddingStrategy::linear_shading(0.5).unwrap(),
        }])
        .unwrap();
        let got = oracle_clearing_price(&profile, 0.3);
        assert!((got - 0.35).abs() < 1e-8);

        let mut rng = rng_stream(5, &[2]);
        let n = 1_000_000;
        let bids: Vec<f64> = (0..n).map(|_| 0.5 * rng.gen::<f64>()).collect();
        let mut best = (f64::INFINITY, 0.0);
        for k in 0..=100 {
            let p = 0.5 * k as f64 / 100.0;
            let loss =
                bids.iter().map(|b| (b - p).max(0.0)).sum::<f64>() / n as f64 + 0.3 * p;
            if loss < best.0 {
                best = (loss, p);
            }
        }
        assert!((best.1 - got).abs() < 0.005 + 1e-9, "mc argmin {}", best.1);
    }

    #[test]
    fn empirical_converges_to_oracle() {
        let d = ValueDistribution::truncated_lognormal(0.0, 0.5, 0.0, 2.5).unwrap();
        for (tag, (n, lambda)) in [(1usize, 0.4f64), (2, 0.9), (3, 2.0)].iter().enumerate() {
            let profile = MarketProfile::iid(d, *n).unwrap();
            let mut rng = rng_stream(13, &[tag as u64]);
            let k = 100_000;
            let profiles: Vec<BidProfile> = (0..k)
                .map(|_| BidProfile::new(profile.draw_values(&mut rng)))
                .collect();
            let b = BidBatch::new(profiles).unwrap();
            let emp = empirical_clearing_price(&b, *lambda).unwrap();
            let orc = oracle_clearing_price(&profile, *lambda);
            assert!((emp - orc).abs() < 0.01, "n={n} lambda={lambda}: {emp} vs {orc}");
        }
    }

    #[test]
    fn smoothed_reserve_zero_branch() {
        // lambda close to n makes the zero-mass condition hold.
        let profile = MarketProfile::iid(uniform01(), 1).unwrap();
        let noise = NoiseDistribution::laplace(0.2).unwrap();
        // kappa = E[F(-v)] with b = 5: large; n - lambda small.
        let r = smoothed_oracle_reserve(&profile, &noise, 0.95);
        assert_eq!(r, 0.0);
    }

    #[test]
    fn smoothed_reserve_symmetric_case() {
        // Uniform values on [0,1], symmetric noise, lambda = 1/2: the
        // condition integrand averages to 1/2 exactly at p = 1/2.
        let profile = MarketProfile::iid(uniform01(), 1).unwrap();
        for eps in [0.5, 2.0, 8.0] {
            let noise = NoiseDistribution::laplace(eps).unwrap();
            let r = smoothed_oracle_reserve(&profile, &noise, 0.5);
            assert!((r - 0.5).abs() < 1e-6, "eps={eps}: {r}");
        }
    }

    #[test]
    fn smoothed_reserve_vanishing_noise_limit() {
        let profile = MarketProfile::iid(uniform01(), 1).unwrap();
        let clearing = oracle_clearing_price(&profile, 0.3);
        let mut last_gap = f64::INFINITY;
        for eps in [10.0, 100.0, 1000.0] {
            let noise = NoiseDistribution::laplace(eps).unwrap();
            let gap = (smoothed_oracle_reserve(&profile, &noise, 0.3) - clearing).abs();
            assert!(gap < last_gap + 1e-12, "gap not shrinking at eps={eps}");
            last_gap = gap;
        }
        assert!(last_gap < 0.02);
        let noise = NoiseDistribution::laplace(100.0).unwrap();
        assert!((smoothed_oracle_reserve(&profile, &noise, 0.3) - 0.7).abs() < 0.02);
    }

    #[test]
    fn smoothed_reserve_nonincreasing_in_lambda() {
        let profile = MarketProfile::iid(uniform01(), 2).unwrap();
        let noise = NoiseDistribution::laplace(3.0).unwrap();
        let mut prev = f64::INFINITY;
        for lambda in [0.2, 0.6, 1.0, 1.4, 1.8] {
            let r = smoothed_oracle_reserve(&profile, &noise, lambda);
            assert!(r <= prev + 1e-12);
            prev = r;
        }
    }

    #[test]
    fn smoothed_reserve_agrees_with_convolution_form() {
        let d = ValueDistribution::truncated_lognormal(0.0, 0.5, 0.0, 2.5).unwrap();
        let cases: Vec<(MarketProfile, f64)> = vec![
            (MarketProfile::iid(uniform01(), 1).unwrap(), 0.3),
            (MarketProfile::iid(uniform01(), 2).unwrap(), 1.2),
            (MarketProfile::iid(d, 2).unwrap(), 0.8),
        ];
        for (profile, lambda) in cases {
            for eps in [0.5, 2.0, 8.0] {
                let noise = NoiseDistribution::laplace(eps).unwrap();
                let a = smoothed_oracle_reserve(&profile, &noise, lambda);
                let b = smoothed_oracle_reserve_by_convolution(&profile, &noise, lambda);
                assert!((a - b).abs() < 1e-6, "eps={eps} lambda={lambda}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn smoothed_reserve_matches_empirical_training() {
        // Population reserve vs the exact solver on a large smoothed batch.
        let profile = MarketProfile::iid(uniform01(), 1).unwrap();
        let noise = NoiseDistribution::laplace(5.0).unwrap();
        let oracle = smoothed_oracle_reserve(&profile, &noise, 0.5);
        let mut rng = rng_stream(77, &[3]);
        let k = 100_000;
        let profiles: Vec<BidProfile> = (0..k)
            .map(|_| BidProfile::new(vec![rng.gen::<f64>() + noise.sample(&mut rng)]))
            .collect();
        let emp = empirical_clearing_price(&BidBatch::new(profiles).unwrap(), 0.5).unwrap();
        assert!((emp - oracle).abs() < 0.02, "{emp} vs {oracle}");
    }

    #[test]
    fn gap_bound_arithmetic_and_companion_check() {
        let profile = MarketProfile::iid(uniform01(), 1).unwrap();
        let noise = NoiseDistribution::laplace(50.0).unwrap();
        // mu = 1 for a single uniform bidder with identity strategy.
        let bound = reserve_gap_bound(&profile, &noise, 0.3, 0.1, 1.0).unwrap();
        let gap = (smoothed_oracle_reserve(&profile, &noise, 0.3)
            - oracle_clearing_price(&profile, 0.3))
        .abs();
        assert!(gap <= bound, "gap {gap} exceeds bound {bound}");
        assert!(reserve_gap_bound(&profile, &noise, 0.3, 1.0, 1.0).is_err());
        assert!(reserve_gap_bound(&profile, &noise, 0.3, 0.0, 1.0).is_err());
        // delta -> 1 diverges; eps -> inf leaves only the mu term.
        let nearly_one = reserve_gap_bound(&profile, &noise, 0.3, 1.0 - 1e-12, 1.0).unwrap();
        assert!(nearly_one > 1e9);
        let no_noise = NoiseDistribution::DegenerateZero;
        let tail_only = reserve_gap_bound(&profile, &no_noise, 0.3, 0.1, 2.0).unwrap();
        assert!((tail_only - 2.0 * 0.1 * 0.7 / 0.9).abs() < 1e-12);
    }

    #[test]
    fn csv_roundtrip_and_diagnostics() {
        let b = batch(&[&[0.2, 0.4], &[0.5, 0.3]]);
        let text = b.to_csv_string();
        assert!(text.starts_with("bid_1,bid_2\n"));
        assert_eq!(BidBatch::from_csv_str(&text).unwrap(), b);

        let err = BidBatch::from_csv_str("bid_1,bid_2\n0.2,oops\n").unwrap_err();
        match err {
            Error::BatchCsv { row, column, .. } => {
                assert_eq!((row, column), (2, 2));
            }
            other => panic!("unexpected error {other:?}"),
        }
        assert!(BidBatch::from_csv_str("").is_err());
        assert!(BidBatch::from_csv_str("bid_1\n").is_err());
    }
}
