//! Value and noise distribution primitives.
//!
//! Everything the rest of the crate needs about randomness lives here: the
//! bidder value laws (uniform, truncated lognormal) with exact CDF, density
//! and quantile; the reserve-perturbation noise laws (Laplace and a
//! degenerate point mass at zero); weakly increasing bidding strategies with
//! their generalized inverses; and market profiles exposing the
//! order-statistic CDFs of the highest and second-highest value and the
//! competitor-max law of each bidder.
//!
//! All types are immutable after construction and safe to share across
//! threads. Sampling is inverse-transform through an explicit generator, so
//! a fixed seed pins the entire draw stream.

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::erf;

use crate::error::{Error, Result};

const SQRT_2: f64 = std::f64::consts::SQRT_2;

/// Standard normal CDF via the complementary error function (tail-accurate).
fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erf::erfc(-z / SQRT_2)
}

/// Standard normal quantile.
fn std_normal_quantile(p: f64) -> f64 {
    -SQRT_2 * erf::erfc_inv(2.0 * p)
}

fn std_normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// A bidder's value law on a closed interval `[lo, hi]` of nonnegative reals.
///
/// The truncated lognormal renormalizes the parent CDF on `[lo, hi]` rather
/// than clipping mass to the endpoints, so the CDF stays continuous and
/// strictly increasing on the support (the root-finding oracles rely on
/// this).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ValueDistribution {
    Uniform {
        lo: f64,
        hi: f64,
    },
    /// Lognormal with log-scale location `mu` and spread `sigma`, truncated
    /// and renormalized to `[lo, hi]`.
    TruncatedLognormal {
        mu: f64,
        sigma: f64,
        lo: f64,
        hi: f64,
    },
}

impl ValueDistribution {
    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        let d = ValueDistribution::Uniform { lo, hi };
        d.validate()?;
        Ok(d)
    }

    pub fn truncated_lognormal(mu: f64, sigma: f64, lo: f64, hi: f64) -> Result<Self> {
        let d = ValueDistribution::TruncatedLognormal { mu, sigma, lo, hi };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.support();
        if !lo.is_finite() || !hi.is_finite() || lo < 0.0 || hi <= lo {
            return Err(Error::InvalidDistribution(format!(
                "support [{lo}, {hi}] must satisfy 0 <= lo < hi"
            )));
        }
        if let ValueDistribution::TruncatedLognormal { mu, sigma, .. } = self {
            if !mu.is_finite() || !sigma.is_finite() || *sigma <= 0.0 {
                return Err(Error::InvalidDistribution(format!(
                    "lognormal needs finite mu and sigma > 0, got mu = {mu}, sigma = {sigma}"
                )));
            }
        }
        Ok(())
    }

    pub fn support(&self) -> (f64, f64) {
        match *self {
            ValueDistribution::Uniform { lo, hi } => (lo, hi),
            ValueDistribution::TruncatedLognormal { lo, hi, .. } => (lo, hi),
        }
    }

    pub fn lo(&self) -> f64 {
        self.support().0
    }

    pub fn hi(&self) -> f64 {
        self.support().1
    }

    /// Parent lognormal CDF evaluated at the truncation bounds.
    fn lognormal_bounds(mu: f64, sigma: f64, lo: f64, hi: f64) -> (f64, f64) {
        let phi_lo = if lo <= 0.0 {
            0.0
        } else {
            std_normal_cdf((lo.ln() - mu) / sigma)
        };
        let phi_hi = std_normal_cdf((hi.ln() - mu) / sigma);
        (phi_lo, phi_hi)
    }

    /// Exact CDF; arguments outside the support clamp to 0 or 1.
    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            ValueDistribution::Uniform { lo, hi } => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
            ValueDistribution::TruncatedLognormal { mu, sigma, lo, hi } => {
                if x <= lo {
                    return 0.0;
                }
                if x >= hi {
                    return 1.0;
                }
                let (phi_lo, phi_hi) = Self::lognormal_bounds(mu, sigma, lo, hi);
                let phi = std_normal_cdf((x.ln() - mu) / sigma);
                ((phi - phi_lo) / (phi_hi - phi_lo)).clamp(0.0, 1.0)
            }
        }
    }

    /// Density; zero outside the support.
    pub fn pdf(&self, x: f64) -> f64 {
        match *self {
            ValueDistribution::Uniform { lo, hi } => {
                if x < lo || x > hi {
                    0.0
                } else {
                    1.0 / (hi - lo)
                }
            }
            ValueDistribution::TruncatedLognormal { mu, sigma, lo, hi } => {
                if x <= lo.max(0.0) || x > hi {
                    return 0.0;
                }
                let (phi_lo, phi_hi) = Self::lognormal_bounds(mu, sigma, lo, hi);
                let z = (x.ln() - mu) / sigma;
                std_normal_pdf(z) / (x * sigma * (phi_hi - phi_lo))
            }
        }
    }

    /// Smallest `x` with `cdf(x) >= q`, computed analytically.
    pub fn quantile(&self, q: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::QuantileOutOfRange(q));
        }
        let (lo, hi) = self.support();
        if q == 0.0 {
            return Ok(lo);
        }
        if q == 1.0 {
            return Ok(hi);
        }
        Ok(match *self {
            ValueDistribution::Uniform { lo, hi } => lo + q * (hi - lo),
            ValueDistribution::TruncatedLognormal { mu, sigma, lo, hi } => {
                let (phi_lo, phi_hi) = Self::lognormal_bounds(mu, sigma, lo, hi);
                let p = phi_lo + q * (phi_hi - phi_lo);
                (mu + sigma * std_normal_quantile(p)).exp().clamp(lo, hi)
            }
        })
    }

    /// Inverse-transform sample: the quantile of one uniform draw, so an
    /// identical seed yields an identical stream.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.gen();
        self.quantile(u).expect("uniform draw lies in [0, 1)")
    }
}

/// The robustness noise law added to reserves (per auction) or to training
/// bids (once).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseDistribution {
    /// Mean-zero Laplace with scale `1/epsilon`; larger `epsilon` means
    /// less noise.
    Laplace { epsilon: f64 },
    /// Point mass at zero. Sampling returns exactly `0.0` and consumes no
    /// generator state, so a noise-free mechanism replays the same stream
    /// as one that never draws.
    DegenerateZero,
}

impl NoiseDistribution {
    pub fn laplace(epsilon: f64) -> Result<Self> {
        if epsilon.is_nan() || epsilon <= 0.0 {
            return Err(Error::InvalidDistribution(format!(
                "laplace noise needs epsilon > 0, got {epsilon}"
            )));
        }
        Ok(if epsilon.is_infinite() {
            NoiseDistribution::DegenerateZero
        } else {
            NoiseDistribution::Laplace { epsilon }
        })
    }

    /// Inverse scale; `inf` for the point mass.
    pub fn epsilon(&self) -> f64 {
        match *self {
            NoiseDistribution::Laplace { epsilon } => epsilon,
            NoiseDistribution::DegenerateZero => f64::INFINITY,
        }
    }

    /// Laplace scale `b = 1/epsilon`; zero for the point mass.
    pub fn scale(&self) -> f64 {
        match *self {
            NoiseDistribution::Laplace { epsilon } => 1.0 / epsilon,
            NoiseDistribution::DegenerateZero => 0.0,
        }
    }

    pub fn is_degenerate(&self) -> bool {
        matches!(self, NoiseDistribution::DegenerateZero)
    }

    /// Whether the law has a density (the point mass does not).
    pub fn has_density(&self) -> bool {
        !self.is_degenerate()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            NoiseDistribution::Laplace { epsilon } => {
                let b = 1.0 / epsilon;
                if x < 0.0 {
                    0.5 * (x / b).exp()
                } else {
                    1.0 - 0.5 * (-x / b).exp()
                }
            }
            NoiseDistribution::DegenerateZero => {
                if x < 0.0 {
                    0.0
                } else {
                    1.0
                }
            }
        }
    }

    /// Density; identically zero for the point mass (which has none).
    pub fn pdf(&self, x: f64) -> f64 {
        match *self {
            NoiseDistribution::Laplace { epsilon } => 0.5 * epsilon * (-x.abs() * epsilon).exp(),
            NoiseDistribution::DegenerateZero => 0.0,
        }
    }

    /// Lower partial moment `M(t) = E[z 1{z <= t}]`.
    ///
    /// Used to evaluate noise-averaged stage-2 utilities in closed form:
    /// `E[z 1{a < z <= c}] = M(c) - M(a)`.
    pub fn lower_partial_moment(&self, t: f64) -> f64 {
        match *self {
            NoiseDistribution::Laplace { epsilon } => {
                let b = 1.0 / epsilon;
                if t <= 0.0 {
                    0.5 * (t / b).exp() * (t - b)
                } else {
                    -0.5 * (t + b) * (-t / b).exp()
                }
            }
            NoiseDistribution::DegenerateZero => 0.0,
        }
    }

    /// Inverse-transform draw; the degenerate law returns `0.0` without
    /// touching the generator.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            NoiseDistribution::Laplace { epsilon } => {
                let b = 1.0 / epsilon;
                // Clamp away from 0 and 1 so the transform stays finite.
                let u: f64 = rng.gen::<f64>().clamp(1e-300, 1.0 - 1e-16);
                if u < 0.5 {
                    b * (2.0 * u).ln()
                } else {
                    -b * (2.0 * (1.0 - u)).ln()
                }
            }
            NoiseDistribution::DegenerateZero => 0.0,
        }
    }
}

/// A weakly increasing map from value to submitted bid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BiddingStrategy {
    /// Truthful reporting.
    Identity,
    /// Uniform shading `bid = alpha * value`; `alpha < 1` underbids,
    /// `alpha > 1` overbids.
    LinearShading { alpha: f64 },
}

impl BiddingStrategy {
    pub fn linear_shading(alpha: f64) -> Result<Self> {
        if !alpha.is_finite() || alpha <= 0.0 {
            return Err(Error::InvalidDistribution(format!(
                "linear shading needs a positive finite factor, got {alpha}"
            )));
        }
        Ok(BiddingStrategy::LinearShading { alpha })
    }

    pub fn apply(&self, value: f64) -> f64 {
        match *self {
            BiddingStrategy::Identity => value,
            BiddingStrategy::LinearShading { alpha } => alpha * value,
        }
    }

    /// Generalized inverse `inf { v : bid(v) >= p }`, with the convention
    /// that nonpositive prices map to 0.
    pub fn inverse(&self, price: f64) -> f64 {
        if price <= 0.0 {
            return 0.0;
        }
        match *self {
            BiddingStrategy::Identity => price,
            BiddingStrategy::LinearShading { alpha } => price / alpha,
        }
    }
}

/// One bidder: a value law plus the stage-1 bidding strategy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bidder {
    pub value: ValueDistribution,
    #[serde(default = "identity_strategy")]
    pub strategy: BiddingStrategy,
}

fn identity_strategy() -> BiddingStrategy {
    BiddingStrategy::Identity
}

impl Bidder {
    pub fn truthful(value: ValueDistribution) -> Self {
        Bidder {
            value,
            strategy: BiddingStrategy::Identity,
        }
    }
}

/// An ordered set of bidders.
///
/// Single-bidder conventions used throughout: the competitor max is 0, its
/// CDF is identically 1 on `x >= 0`, and the second-highest value is 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketProfile {
    bidders: Vec<Bidder>,
}

impl MarketProfile {
    pub fn new(bidders: Vec<Bidder>) -> Result<Self> {
        let p = MarketProfile { bidders };
        p.validate()?;
        Ok(p)
    }

    /// Re-checks the construction invariants (deserialized profiles bypass
    /// [`MarketProfile::new`]).
    pub fn validate(&self) -> Result<()> {
        if self.bidders.is_empty() {
            return Err(Error::EmptyProfile);
        }
        for b in &self.bidders {
            b.value.validate()?;
        }
        Ok(())
    }

    /// `n` truthful bidders drawing i.i.d. from `value`.
    pub fn iid(value: ValueDistribution, n: usize) -> Result<Self> {
        MarketProfile::new(vec![Bidder::truthful(value); n])
    }

    pub fn n(&self) -> usize {
        self.bidders.len()
    }

    pub fn bidders(&self) -> &[Bidder] {
        &self.bidders
    }

    pub fn value_dist(&self, i: usize) -> &ValueDistribution {
        &self.bidders[i].value
    }

    pub fn strategy(&self, i: usize) -> &BiddingStrategy {
        &self.bidders[i].strategy
    }

    /// Copy of the profile with bidder `i`'s strategy replaced.
    pub fn with_strategy(&self, i: usize, strategy: BiddingStrategy) -> Self {
        let mut p = self.clone();
        p.bidders[i].strategy = strategy;
        p
    }

    /// Copy with every strategy reset to truthful reporting.
    pub fn truthful(&self) -> Self {
        let mut p = self.clone();
        for b in &mut p.bidders {
            b.strategy = BiddingStrategy::Identity;
        }
        p
    }

    /// Union of the bidder supports.
    pub fn support(&self) -> (f64, f64) {
        let lo = self
            .bidders
            .iter()
            .map(|b| b.value.lo())
            .fold(f64::INFINITY, f64::min);
        let hi = self
            .bidders
            .iter()
            .map(|b| b.value.hi())
            .fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    }

    /// Largest bid any bidder can submit under its strategy.
    pub fn max_strategy_bid(&self) -> f64 {
        self.bidders
            .iter()
            .map(|b| b.strategy.apply(b.value.hi()))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// CDF of the highest value under truthful reporting:
    /// the product of the bidder CDFs.
    pub fn highest_cdf(&self, x: f64) -> f64 {
        self.bidders.iter().map(|b| b.value.cdf(x)).product()
    }

    /// CDF of the second-highest value under truthful reporting:
    /// the probability that at most one bidder exceeds `x`. With a single
    /// bidder the second-highest value is 0, so the CDF is 1 on `x >= 0`.
    pub fn second_highest_cdf(&self, x: f64) -> f64 {
        if self.n() == 1 {
            return if x >= 0.0 { 1.0 } else { 0.0 };
        }
        let cdfs: Vec<f64> = self.bidders.iter().map(|b| b.value.cdf(x)).collect();
        let all: f64 = cdfs.iter().product();
        let mut exactly_one = 0.0;
        for (i, ci) in cdfs.iter().enumerate() {
            if *ci < 1.0 {
                let others: f64 = cdfs
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != i)
                    .map(|(_, c)| c)
                    .product();
                exactly_one += (1.0 - ci) * others;
            }
        }
        (all + exactly_one).clamp(0.0, 1.0)
    }

    /// CDF of `max_{j != i} v_j` (competitor max). A max over an empty set
    /// is 0, so with one bidder this is 1 on `x >= 0`.
    ///
    /// # Panics
    /// Panics when `i` is out of range.
    pub fn competitor_max_cdf(&self, i: usize, x: f64) -> f64 {
        assert!(i < self.n(), "bidder index {i} out of range for {}", self.n());
        if self.n() == 1 {
            return if x >= 0.0 { 1.0 } else { 0.0 };
        }
        self.bidders
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, b)| b.value.cdf(x))
            .product()
    }

    /// Density of the competitor max, by the product rule:
    /// `sum_{j != i} f_j(x) prod_{k != i,j} D_k(x)`. Identically 0 with one
    /// bidder (point mass at 0).
    ///
    /// # Panics
    /// Panics when `i` is out of range.
    pub fn competitor_max_pdf(&self, i: usize, x: f64) -> f64 {
        assert!(i < self.n(), "bidder index {i} out of range for {}", self.n());
        if self.n() == 1 {
            return 0.0;
        }
        let mut total = 0.0;
        for (j, bj) in self.bidders.iter().enumerate() {
            if j == i {
                continue;
            }
            let mut term = bj.value.pdf(x);
            if term == 0.0 {
                continue;
            }
            for (k, bk) in self.bidders.iter().enumerate() {
                if k != i && k != j {
                    term *= bk.value.cdf(x);
                }
            }
            total += term;
        }
        total
    }

    /// One value per bidder (bidder order), drawn from the value laws.
    pub fn draw_values<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.bidders.iter().map(|b| b.value.sample(rng)).collect()
    }
}
