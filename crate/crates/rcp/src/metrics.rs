//! Expected revenue, the dynamic incentive metric, local sensitivities, and
//! numerical validation of the mechanisms' revenue guarantees.
//!
//! # Revenue
//!
//! Stage-2 expected revenue under truthful bidding at a fixed reserve `r` is
//!
//! ```text
//! Rev(r) = E[ max(v2, r) * 1{v1 >= r} ]
//! ```
//!
//! where `v1`, `v2` are the highest and second-highest values. In closed
//! form, writing `D1`, `D2` for their CDFs on a support ending at `hi`:
//!
//! ```text
//! Rev(r) = hi - int_r^hi D2(x) dx - r * D1(r)        (0 <= r <= hi)
//! ```
//!
//! which [`expected_revenue_closed`] evaluates by quadrature and
//! [`expected_revenue_mc`] cross-checks by Monte Carlo. The single-bidder
//! case reduces to `r (1 - D(r))`.
//!
//! # Incentive metric
//!
//! The dynamic-IC metric of bidder `i` measures the marginal stage-2 gain
//! from uniform stage-1 bid shading, normalized so that 1 means no shading
//! incentive and values below 1 mean shading pays:
//!
//! ```text
//! DIC_i = 1 + [E u2(1+a) - E u2(1-a)] / (2a * E[v_i x_i])
//! ```
//!
//! [`ic_metric_mc`] estimates it by common-random-number Monte Carlo at a
//! finite perturbation `a`; [`ic_metric_dp_closed`] and
//! [`ic_metric_srcp_closed`] evaluate the exact small-`a` characterizations
//! driven by the local reserve sensitivities [`clearing_price_sensitivity`]
//! and [`smoothed_reserve_sensitivity`].

use rand::Rng;

use crate::clearing::{oracle_clearing_price, smoothed_oracle_reserve};
use crate::distributions::{BiddingStrategy, MarketProfile, NoiseDistribution};
use crate::error::{Error, Result};
use crate::mechanisms::{MechanismConfig, MechanismKind};
use crate::numeric::{integrate, integrate_with_breaks, mean_and_ci, rng_stream};

/// A Monte Carlo estimate: mean, 95% half-width, sample count, and the seed
/// that produced it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricEstimate {
    pub mean: f64,
    pub ci_half_width: f64,
    pub n_samples: usize,
    pub seed: u64,
}

impl MetricEstimate {
    pub fn from_samples(samples: &[f64], seed: u64) -> Self {
        let (mean, ci_half_width) = mean_and_ci(samples);
        MetricEstimate {
            mean,
            ci_half_width,
            n_samples: samples.len(),
            seed,
        }
    }
}

/// Expected highest value `E[v1]` (the welfare normalizer).
pub fn expected_highest_value(profile: &MarketProfile) -> f64 {
    let (lo, hi) = profile.support();
    let lo = lo.max(0.0);
    lo + integrate(|x| 1.0 - profile.highest_cdf(x), lo, hi, 1e-9)
}

/// Expected second-highest value `E[v2]`; 0 for a single bidder.
pub fn expected_second_value(profile: &MarketProfile) -> f64 {
    if profile.n() == 1 {
        return 0.0;
    }
    let (lo, hi) = profile.support();
    let lo = lo.max(0.0);
    lo + integrate(|x| 1.0 - profile.second_highest_cdf(x), lo, hi, 1e-9)
}

/// Closed-form stage-2 expected revenue at a fixed reserve, under truthful
/// bidding. Strategies in the profile are ignored; only the value laws
/// matter. Quadrature at 1e-9 absolute tolerance.
pub fn expected_revenue_closed(profile: &MarketProfile, reserve: f64) -> f64 {
    let (_, hi) = profile.support();
    if reserve > hi {
        return 0.0;
    }
    let r = reserve.max(0.0); // a nonpositive reserve never binds
    if profile.n() == 1 {
        let d = profile.value_dist(0);
        return r * (1.0 - d.cdf(r));
    }
    let tail = integrate(|x| profile.second_highest_cdf(x), r, hi, 1e-9);
    hi - tail - r * profile.highest_cdf(r)
}

/// Monte Carlo stage-2 expected revenue with a (possibly random) reserve
/// per auction: values are drawn truthfully, `reserve_sampler` supplies the
/// reserve, and each sample is `max(v2, r) 1{v1 >= r}`.
pub fn expected_revenue_mc<R, F>(
    profile: &MarketProfile,
    mut reserve_sampler: F,
    n_samples: usize,
    rng: &mut R,
    seed: u64,
) -> Result<MetricEstimate>
where
    R: Rng + ?Sized,
    F: FnMut(&mut R) -> f64,
{
    if n_samples < 2 {
        return Err(Error::TooFewSamples(n_samples));
    }
    let mut samples = Vec::with_capacity(n_samples);
    let mut values = vec![0.0f64; profile.n()];
    for _ in 0..n_samples {
        for (slot, b) in values.iter_mut().zip(profile.bidders()) {
            *slot = b.value.sample(rng);
        }
        let reserve = reserve_sampler(rng);
        let (v1, v2) = top_two(&values);
        samples.push(if v1 >= reserve { v2.max(reserve) } else { 0.0 });
    }
    Ok(MetricEstimate::from_samples(&samples, seed))
}

fn top_two(values: &[f64]) -> (f64, f64) {
    let mut v1 = f64::NEG_INFINITY;
    let mut v2 = 0.0; // second-highest of a single value is 0
    for &v in values {
        if v > v1 {
            v2 = if v1.is_finite() { v1 } else { 0.0 };
            v1 = v;
        } else if v > v2 && values.len() > 1 {
            v2 = v;
        }
    }
    (v1, v2)
}

/// Expected stage-2 revenue of the noisy-reserve mechanism at the
/// population clearing price: the noise-averaged closed-form revenue
///
/// ```text
/// E_z[ Rev(max(p + z, 0)) ]
///   = Rev(0) F(-p) + int_0^hi Rev(r) f(r - p) dr
/// ```
///
/// with the clamp handled exactly through the `F(-p)` atom.
pub fn dp_expected_revenue(
    profile: &MarketProfile,
    lambda: f64,
    noise: &NoiseDistribution,
) -> f64 {
    let p = oracle_clearing_price(profile, lambda);
    if noise.is_degenerate() {
        return expected_revenue_closed(profile, p);
    }
    let (_, hi) = profile.support();
    let atom = expected_revenue_closed(profile, 0.0) * noise.cdf(-p);
    let body = integrate_with_breaks(
        |r| expected_revenue_closed(profile, r) * noise.pdf(r - p),
        0.0,
        hi,
        &[p],
        1e-9,
    );
    atom + body
}

/// Noise-averaged stage-2 utility of a bidder with value `v` facing
/// competitor max `m` and a reserve `max(price + z, 0)`, `z` drawn from
/// `noise`:
///
/// ```text
/// E_z[(v - max(m, price + z, 0)) 1{v >= max(m, price + z, 0)}]
///   = (v - m) F(m - p) + (v - p)(F(v - p) - F(m - p)) - (M(v-p) - M(m-p))
/// ```
///
/// where `M` is the lower partial moment. Exact for the Laplace law and for
/// the zero point mass (where it degenerates to the fixed-reserve utility);
/// the clamp at zero never matters because `m >= 0`.
pub fn noise_averaged_stage2_utility(
    v: f64,
    m: f64,
    price: f64,
    noise: &NoiseDistribution,
) -> f64 {
    if v < m {
        return 0.0;
    }
    let fm = noise.cdf(m - price);
    let fv = noise.cdf(v - price);
    (v - m) * fm + (v - price) * (fv - fm)
        - (noise.lower_partial_moment(v - price) - noise.lower_partial_moment(m - price))
}

/// Precomputed state for Monte Carlo incentive-metric estimation: the
/// reserves induced by bidder `i` shading up/down by `alpha` (population
/// oracles), and the normalizer `E[v_i G_i(v_i)]`.
///
/// The baseline is truthful bidding: the profile's stored strategies are
/// replaced by the identity before shading is applied.
#[derive(Debug, Clone)]
pub struct IcMeasurement {
    profile: MarketProfile,
    bidder: usize,
    alpha: f64,
    kind: MechanismKind,
    noise: NoiseDistribution,
    price_up: f64,
    price_down: f64,
    denominator: f64,
}

impl IcMeasurement {
    pub fn new(
        config: &MechanismConfig,
        profile: &MarketProfile,
        bidder: usize,
        alpha: f64,
    ) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::AlphaOutOfRange(alpha));
        }
        assert!(bidder < profile.n(), "bidder index out of range");
        let truthful = profile.truthful();
        let up = truthful.with_strategy(bidder, BiddingStrategy::linear_shading(1.0 + alpha)?);
        let down = truthful.with_strategy(bidder, BiddingStrategy::linear_shading(1.0 - alpha)?);
        let noise = config.effective_noise();
        let (price_up, price_down) = match config.kind {
            MechanismKind::DpRcp | MechanismKind::NoNoise => (
                oracle_clearing_price(&up, config.lambda),
                oracle_clearing_price(&down, config.lambda),
            ),
            MechanismKind::Srcp => (
                smoothed_oracle_reserve(&up, &noise, config.lambda),
                smoothed_oracle_reserve(&down, &noise, config.lambda),
            ),
        };
        let denominator = stage1_value_normalizer(&truthful, bidder);
        Ok(IcMeasurement {
            profile: truthful,
            bidder,
            alpha,
            kind: config.kind,
            noise,
            price_up,
            price_down,
            denominator,
        })
    }

    /// Reserve used when bidder `i` shades up / down.
    pub fn reserves(&self) -> (f64, f64) {
        (self.price_up, self.price_down)
    }

    /// One Monte Carlo estimate of the incentive metric. Each sample draws
    /// `(v_i, m_i)` once and evaluates both shading branches on it (common
    /// random numbers); for the noisy-reserve mechanism the expectation
    /// over the per-auction noise is taken in closed form.
    pub fn measure<R: Rng + ?Sized>(
        &self,
        n_samples: usize,
        rng: &mut R,
        seed: u64,
    ) -> Result<MetricEstimate> {
        if n_samples < 2 {
            return Err(Error::TooFewSamples(n_samples));
        }
        let mut diffs = Vec::with_capacity(n_samples);
        for _ in 0..n_samples {
            let (v, m) = self.draw_value_and_competitor_max(rng);
            let d = match self.kind {
                MechanismKind::DpRcp | MechanismKind::NoNoise => {
                    noise_averaged_stage2_utility(v, m, self.price_up, &self.noise)
                        - noise_averaged_stage2_utility(v, m, self.price_down, &self.noise)
                }
                MechanismKind::Srcp => {
                    fixed_reserve_utility(v, m, self.price_up)
                        - fixed_reserve_utility(v, m, self.price_down)
                }
            };
            diffs.push(d);
        }
        let scale = 2.0 * self.alpha * self.denominator;
        let (mean, ci) = mean_and_ci(&diffs);
        Ok(MetricEstimate {
            mean: 1.0 + mean / scale,
            ci_half_width: ci / scale,
            n_samples,
            seed,
        })
    }

    fn draw_value_and_competitor_max<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64) {
        let v = self.profile.value_dist(self.bidder).sample(rng);
        let mut m = 0.0f64;
        for (j, b) in self.profile.bidders().iter().enumerate() {
            if j != self.bidder {
                m = m.max(b.value.sample(rng));
            }
        }
        (v, m)
    }
}

fn fixed_reserve_utility(v: f64, m: f64, reserve: f64) -> f64 {
    let price = m.max(reserve);
    if v >= price {
        v - price
    } else {
        0.0
    }
}

/// Stage-1 normalizer `E[v_i x_i] = E[v_i G_i(v_i)]` (the bidder wins stage
/// 1, which has no reserve, exactly when it has the highest value).
fn stage1_value_normalizer(profile: &MarketProfile, bidder: usize) -> f64 {
    let d = profile.value_dist(bidder);
    let (lo, hi) = d.support();
    integrate(
        |v| v * profile.competitor_max_cdf(bidder, v) * d.pdf(v),
        lo,
        hi,
        1e-10,
    )
}

/// Monte Carlo estimate of the incentive metric at perturbation `alpha`,
/// with its own derived generator stream so the estimate is a pure function
/// of `(inputs, seed)`.
pub fn ic_metric_mc(
    config: &MechanismConfig,
    profile: &MarketProfile,
    bidder: usize,
    alpha: f64,
    n_samples: usize,
    seed: u64,
) -> Result<MetricEstimate> {
    let setup = IcMeasurement::new(config, profile, bidder, alpha)?;
    let mut rng = rng_stream(seed, &[0x1C_u64]);
    setup.measure(n_samples, &mut rng, seed)
}

/// Local sensitivity of the population clearing price to bidder `i`'s
/// uniform shading, at the truthful baseline:
///
/// ```text
/// eta_i = p* f_i(p*) / sum_j f_j(p*)
/// ```
///
/// where `p*` is the truthful clearing price. The denominator runs over
/// **all** bidders including `i` (this is the form consistent with the
/// single-bidder limit `eta = quantile(1 - lambda)` and the i.i.d. limit
/// `eta = p*/n`). When the clearing price is pinned at 0 the sensitivity is
/// 0 by convention; a vanishing density sum at an interior price is an
/// error.
pub fn clearing_price_sensitivity(
    profile: &MarketProfile,
    lambda: f64,
    bidder: usize,
) -> Result<f64> {
    assert!(bidder < profile.n(), "bidder index out of range");
    let truthful = profile.truthful();
    let p_star = oracle_clearing_price(&truthful, lambda);
    if p_star <= 1e-12 {
        return Ok(0.0);
    }
    let own = truthful.value_dist(bidder).pdf(p_star);
    let total: f64 = truthful.bidders().iter().map(|b| b.value.pdf(p_star)).sum();
    if total <= f64::MIN_POSITIVE {
        return Err(Error::ZeroDensityAtPrice);
    }
    Ok(p_star * own / total)
}

/// Exact incentive metric of the noisy-reserve mechanism:
///
/// ```text
/// DIC_i = 1 - eta * E_v[ int_0^v G_i(m) f(m - p*) dm ] / E[v_i G_i(v_i)]
/// ```
///
/// by nested quadrature (inner over the competitor max, forced split at the
/// kernel kink; both levels at 1e-8 absolute tolerance or better). With
/// degenerate noise the kernel is a point mass and the inner integral
/// collapses to `G_i(p*) 1{v >= p*}`.
pub fn ic_metric_dp_closed(
    profile: &MarketProfile,
    lambda: f64,
    noise: &NoiseDistribution,
    bidder: usize,
) -> Result<f64> {
    let truthful = profile.truthful();
    let eta = clearing_price_sensitivity(&truthful, lambda, bidder)?;
    if eta == 0.0 {
        return Ok(1.0);
    }
    let p_star = oracle_clearing_price(&truthful, lambda);
    let d = truthful.value_dist(bidder);
    let (lo, hi) = d.support();
    let numerator = if noise.is_degenerate() {
        let g = truthful.competitor_max_cdf(bidder, p_star);
        g * (1.0 - d.cdf(p_star))
    } else {
        integrate_with_breaks(
            |v| {
                let inner = integrate_with_breaks(
                    |m| truthful.competitor_max_cdf(bidder, m) * noise.pdf(m - p_star),
                    0.0,
                    v,
                    &[p_star],
                    1e-10,
                );
                inner * d.pdf(v)
            },
            lo,
            hi,
            &[p_star],
            1e-8,
        )
    };
    let denominator = stage1_value_normalizer(&truthful, bidder);
    Ok(1.0 - eta * numerator / denominator)
}

/// The smoothing mechanism's zero-reserve threshold
/// `kappa = sum_i E[F(-v_i)]` under truthful bidding. The smoothed reserve
/// sits at 0 exactly when `kappa >= n - lambda`.
pub fn zero_reserve_threshold(profile: &MarketProfile, noise: &NoiseDistribution) -> f64 {
    profile
        .bidders()
        .iter()
        .map(|b| {
            let (lo, hi) = b.value.support();
            integrate(|v| noise.cdf(-v) * b.value.pdf(v), lo, hi, 1e-10)
        })
        .sum()
}

/// Local sensitivity of the smoothed reserve to bidder `i`'s uniform
/// shading at the truthful baseline. Branches on `kappa` vs `n - lambda`
/// (equality at 1e-12):
///
/// * `kappa > n - lambda`: the reserve is pinned at 0 locally, so 0;
/// * `kappa < n - lambda`: the implicit-function derivative
///   `E[v f(r* - v_i)] / sum_j E[f(r* - v_j)]` — only bidder `i` deviates,
///   so only its term appears in the numerator (this is what a finite
///   difference of the shaded reserve measures; for i.i.d. bidders it is
///   `1/n` of the all-bidders-deviate derivative);
/// * equality: half the interior value (the left derivative vanishes).
///
/// Requires noise with a density.
pub fn smoothed_reserve_sensitivity(
    profile: &MarketProfile,
    lambda: f64,
    noise: &NoiseDistribution,
    bidder: usize,
) -> Result<f64> {
    assert!(bidder < profile.n(), "bidder index out of range");
    if !noise.has_density() {
        return Err(Error::NoiseWithoutDensity);
    }
    let truthful = profile.truthful();
    let n = truthful.n() as f64;
    let target = n - lambda;
    let kappa = zero_reserve_threshold(&truthful, noise);
    if kappa > target + 1e-12 {
        return Ok(0.0);
    }
    let r_star = smoothed_oracle_reserve(&truthful, noise, lambda);
    let kernel_mass = |i: usize, weighted: bool| -> f64 {
        let d = truthful.value_dist(i);
        let (lo, hi) = d.support();
        integrate_with_breaks(
            |v| {
                let w = if weighted { v } else { 1.0 };
                w * noise.pdf(r_star - v) * d.pdf(v)
            },
            lo,
            hi,
            &[r_star],
            1e-10,
        )
    };
    let num = kernel_mass(bidder, true);
    let den: f64 = (0..truthful.n()).map(|j| kernel_mass(j, false)).sum();
    if den <= f64::MIN_POSITIVE {
        return Err(Error::ZeroKernelMass);
    }
    let full = num / den;
    Ok(if (kappa - target).abs() <= 1e-12 {
        0.5 * full
    } else {
        full
    })
}

/// Exact incentive metric of the smoothing mechanism:
///
/// ```text
/// DIC_i = 1 - zeta * G_i(r*) (1 - D_i(r*)) / E[v_i G_i(v_i)]
/// ```
///
/// with `r*` the truthful smoothed reserve and `zeta` from
/// [`smoothed_reserve_sensitivity`]. Exactly 1 whenever `zeta = 0`.
pub fn ic_metric_srcp_closed(
    profile: &MarketProfile,
    lambda: f64,
    noise: &NoiseDistribution,
    bidder: usize,
) -> Result<f64> {
    assert!(bidder < profile.n(), "bidder index out of range");
    let truthful = profile.truthful();
    let zeta = smoothed_reserve_sensitivity(&truthful, lambda, noise, bidder)?;
    if zeta == 0.0 {
        return Ok(1.0);
    }
    let r_star = smoothed_oracle_reserve(&truthful, noise, lambda);
    let d = truthful.value_dist(bidder);
    let g = truthful.competitor_max_cdf(bidder, r_star);
    let denominator = stage1_value_normalizer(&truthful, bidder);
    Ok(1.0 - zeta * g * (1.0 - d.cdf(r_star)) / denominator)
}

/// Max-slope Lipschitz estimate for the highest/second-highest value CDFs
/// over a 10,000-point support grid (the larger of the two).
pub fn estimate_order_stat_lipschitz(profile: &MarketProfile) -> f64 {
    let (lo, hi) = profile.support();
    let n = 10_000usize;
    let step = (hi - lo) / n as f64;
    let mut max_slope: f64 = 0.0;
    let mut prev1 = profile.highest_cdf(lo);
    let mut prev2 = profile.second_highest_cdf(lo);
    for k in 1..=n {
        let x = lo + step * k as f64;
        let c1 = profile.highest_cdf(x);
        let c2 = profile.second_highest_cdf(x);
        max_slope = max_slope
            .max((c1 - prev1).abs() / step)
            .max((c2 - prev2).abs() / step);
        prev1 = c1;
        prev2 = c2;
    }
    max_slope
}

/// Max-slope Lipschitz estimate for `gamma`, the inverse of the aggregate
/// bid CDF `H(p) = sum_i D_i(strategy_i^{-1}(p))`, tabulated on a
/// 10,000-point grid of target levels.
///
/// The grid spans the central band `[n q0, n (1 - q0)]` with `q0 = 1e-3`:
/// for laws whose density vanishes at a support endpoint (the truncated
/// lognormal), `gamma` has unbounded slope at the extreme levels, so a
/// global constant does not exist; the central band covers every target
/// level `n - lambda` the bound checks touch while keeping the estimate
/// convergent under grid refinement. `points` selects the grid resolution
/// (pass 10_000 for the standard estimate).
pub fn estimate_gamma_lipschitz_on_grid(profile: &MarketProfile, points: usize) -> Result<f64> {
    assert!(points >= 2);
    let n = profile.n() as f64;
    let q0 = 1e-3;
    let y_lo = n * q0;
    let y_hi = n * (1.0 - q0);
    let p_max = profile.max_strategy_bid().max(0.0);
    let h = |p: f64| -> f64 {
        profile
            .bidders()
            .iter()
            .map(|b| b.value.cdf(b.strategy.inverse(p)))
            .sum()
    };
    if h(p_max) < y_hi {
        return Err(Error::NonInvertibleMap);
    }
    let width = 1e-12 * p_max.max(1.0);
    let mut max_slope: f64 = 0.0;
    let mut prev_p = 0.0;
    let mut lo_bracket = 0.0;
    for k in 0..points {
        let y = y_lo + (y_hi - y_lo) * k as f64 / (points - 1) as f64;
        let p = crate::numeric::bisect_nondecreasing(|p| h(p) - y, lo_bracket, p_max, width);
        if k > 0 {
            let dy = (y_hi - y_lo) / (points - 1) as f64;
            max_slope = max_slope.max((p - prev_p) / dy);
        }
        prev_p = p;
        lo_bracket = (p - width).max(0.0);
    }
    if !max_slope.is_finite() || max_slope > 1e12 {
        return Err(Error::NonInvertibleMap);
    }
    Ok(max_slope)
}

/// [`estimate_gamma_lipschitz_on_grid`] at the standard 10,000-point
/// resolution.
pub fn estimate_gamma_lipschitz(profile: &MarketProfile) -> Result<f64> {
    estimate_gamma_lipschitz_on_grid(profile, 10_000)
}

/// Everything needed to check the smoothing mechanism's deterministic
/// revenue guarantee at one `(lambda, epsilon)` point.
#[derive(Debug, Clone, Copy)]
pub struct SrcpRevenueBound {
    /// Revenue at the plain population clearing price.
    pub rev_clearing: f64,
    /// Revenue at the smoothed population reserve.
    pub rev_smoothed: f64,
    /// The guarantee `(6L + 8) sqrt(mu max(n - lambda, lambda) / epsilon)`.
    pub bound: f64,
    /// Whether the smoothed reserve sits in the zero-reserve regime.
    pub zero_reserve_regime: bool,
}

impl SrcpRevenueBound {
    /// `Rev(r_smoothed) >= Rev(p_clearing) - bound`, with a small absolute
    /// slack for quadrature error.
    pub fn holds(&self) -> bool {
        self.rev_smoothed >= self.rev_clearing - self.bound - 1e-9
    }
}

/// Evaluates the smoothing mechanism's revenue guarantee at
/// `(lambda, epsilon)` on the truthful profile, with the Lipschitz
/// constants taken from the grid estimators.
pub fn srcp_revenue_bound(profile: &MarketProfile, lambda: f64, epsilon: f64) -> Result<SrcpRevenueBound> {
    let truthful = profile.truthful();
    let l = estimate_order_stat_lipschitz(&truthful);
    let mu = estimate_gamma_lipschitz(&truthful)?;
    srcp_revenue_bound_with_constants(&truthful, lambda, epsilon, l, mu)
}

/// [`srcp_revenue_bound`] with externally supplied Lipschitz constants (the
/// estimators only depend on the profile, so grid sweeps compute them
/// once).
pub fn srcp_revenue_bound_with_constants(
    profile: &MarketProfile,
    lambda: f64,
    epsilon: f64,
    l: f64,
    mu: f64,
) -> Result<SrcpRevenueBound> {
    let truthful = profile.truthful();
    let noise = NoiseDistribution::laplace(epsilon).map_err(|_| {
        Error::InvalidDistribution(format!("epsilon must be positive, got {epsilon}"))
    })?;
    let n = truthful.n() as f64;
    let p_clearing = oracle_clearing_price(&truthful, lambda);
    let r_smoothed = smoothed_oracle_reserve(&truthful, &noise, lambda);
    let bound = if epsilon.is_infinite() {
        0.0
    } else {
        (6.0 * l + 8.0) * (mu * (n - lambda).max(lambda) / epsilon).sqrt()
    };
    let kappa = zero_reserve_threshold(&truthful, &noise);
    Ok(SrcpRevenueBound {
        rev_clearing: expected_revenue_closed(&truthful, p_clearing),
        rev_smoothed: expected_revenue_closed(&truthful, r_smoothed),
        bound,
        zero_reserve_regime: kappa >= n - lambda,
    })
}

/// Empirically validates the noisy-reserve revenue guarantee: draws
/// `n_trials` noise values, evaluates the closed-form revenue at each
/// clamped noisy reserve, and returns the fraction of draws violating
///
/// ```text
/// Rev(max(p + z, 0)) >= Rev(p) - (3L + 4) ln(1/delta) / epsilon
/// ```
///
/// The guarantee promises a violation rate of at most `delta`.
pub fn validate_dp_revenue_bound(
    profile: &MarketProfile,
    lambda: f64,
    epsilon: f64,
    delta: f64,
    n_trials: usize,
    seed: u64,
) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::DeltaOutOfRange(delta));
    }
    if n_trials == 0 {
        return Err(Error::TooFewSamples(0));
    }
    let truthful = profile.truthful();
    let p = oracle_clearing_price(&truthful, lambda);
    let rev_p = expected_revenue_closed(&truthful, p);
    let l = estimate_order_stat_lipschitz(&truthful);
    let allowed_gap = if epsilon.is_infinite() {
        0.0
    } else {
        (3.0 * l + 4.0) * (1.0 / delta).ln() / epsilon
    };
    let noise = NoiseDistribution::laplace(epsilon)?;
    let mut rng = rng_stream(seed, &[0xD9]);
    let mut violations = 0usize;
    for _ in 0..n_trials {
        let r = (p + noise.sample(&mut rng)).max(0.0);
        if expected_revenue_closed(&truthful, r) < rev_p - allowed_gap - 1e-12 {
            violations += 1;
        }
    }
    Ok(violations as f64 / n_trials as f64)
}
