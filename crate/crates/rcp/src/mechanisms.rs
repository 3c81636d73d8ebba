//! The two robust reserve mechanisms and the second-price auction engine.
//!
//! Both mechanisms fit a clearing price to a batch of stage-1 bids and use
//! it as the anonymous reserve for stage 2; they differ in where the
//! robustness noise enters:
//!
//! * **`dp_rcp`** trains on the raw bids and adds a fresh noise draw to the
//!   reserve for every stage-2 auction (the reserve is a random variable
//!   per auction).
//! * **`srcp`** perturbs every training bid once, then uses the resulting
//!   clearing price as a fixed, deterministic reserve.
//! * **`no_noise`** is `dp_rcp` with the degenerate zero noise: the plain
//!   clearing price.
//!
//! Stage 2 always runs a second-price auction with the anonymous reserve;
//! bidders there are truthful (a fixed-reserve second-price auction is
//! truthful, so strategic behavior only enters through stage-1 bids).

use rand::{Rng, RngCore};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::clearing::{empirical_clearing_price, BidBatch, BidProfile};
use crate::distributions::{MarketProfile, NoiseDistribution};
use crate::error::Result;
use crate::numeric::fmt_sig;

/// Which reserve policy a configuration trains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MechanismKind {
    DpRcp,
    Srcp,
    NoNoise,
}

impl MechanismKind {
    pub fn name(&self) -> &'static str {
        match self {
            MechanismKind::DpRcp => "dp_rcp",
            MechanismKind::Srcp => "srcp",
            MechanismKind::NoNoise => "no_noise",
        }
    }
}

impl std::fmt::Display for MechanismKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A reserve policy specification: mechanism kind, match/revenue trade-off
/// `lambda`, and the noise law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MechanismConfig {
    pub kind: MechanismKind,
    pub lambda: f64,
    pub noise: NoiseDistribution,
}

impl MechanismConfig {
    pub fn new(kind: MechanismKind, lambda: f64, noise: NoiseDistribution) -> Self {
        MechanismConfig { kind, lambda, noise }
    }

    /// `no_noise` behaves exactly like `dp_rcp` with the zero point mass,
    /// whatever noise the config carries.
    pub fn effective_noise(&self) -> NoiseDistribution {
        match self.kind {
            MechanismKind::NoNoise => NoiseDistribution::DegenerateZero,
            _ => self.noise,
        }
    }
}

/// A trained reserve policy.
///
/// For `srcp` and `no_noise` the reserve is deterministic and equals
/// `base_price`; for `dp_rcp` each [`TrainedPolicy::draw_reserve`] call
/// perturbs `base_price` with a fresh noise draw. Immutable once trained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainedPolicy {
    kind: MechanismKind,
    lambda: f64,
    noise: NoiseDistribution,
    base_price: f64,
}

impl TrainedPolicy {
    pub fn kind(&self) -> MechanismKind {
        self.kind
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn noise(&self) -> NoiseDistribution {
        self.noise
    }

    pub fn base_price(&self) -> f64 {
        self.base_price
    }

    /// One reserve price. `dp_rcp` consumes a fresh noise draw per call and
    /// clamps at zero; the other kinds return `base_price` without touching
    /// the generator.
    pub fn draw_reserve<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.kind {
            MechanismKind::DpRcp => (self.base_price + self.noise.sample(rng)).max(0.0),
            MechanismKind::Srcp | MechanismKind::NoNoise => self.base_price,
        }
    }

    /// Flat text record `kind,lambda,epsilon,base_price` with the price at
    /// 12 significant digits; `epsilon` prints `inf` for the no-noise case.
    pub fn record(&self) -> String {
        format!(
            "{},{},{},{}",
            self.kind.name(),
            self.lambda,
            fmt_sig(self.noise.epsilon(), 12),
            fmt_sig(self.base_price, 12)
        )
    }
}

/// Trains a reserve policy on a batch of stage-1 bids.
///
/// `dp_rcp`/`no_noise` fit the clearing price to the raw batch. `srcp`
/// draws one i.i.d. noise value per bid (profile by profile, bidder by
/// bidder) and fits the clearing price to the smoothed batch. Deterministic
/// given the batch and the generator state.
pub fn train<R: Rng + ?Sized>(
    config: &MechanismConfig,
    batch: &BidBatch,
    rng: &mut R,
) -> Result<TrainedPolicy> {
    let noise = config.effective_noise();
    let base_price = match config.kind {
        MechanismKind::DpRcp | MechanismKind::NoNoise => {
            empirical_clearing_price(batch, config.lambda)?
        }
        MechanismKind::Srcp => {
            let smoothed: Vec<BidProfile> = batch
                .profiles()
                .iter()
                .map(|p| BidProfile::new(p.bids.iter().map(|b| b + noise.sample(rng)).collect()))
                .collect();
            empirical_clearing_price(&BidBatch::new(smoothed)?, config.lambda)?
        }
    };
    Ok(TrainedPolicy {
        kind: config.kind,
        lambda: config.lambda,
        noise,
        base_price,
    })
}

/// Outcome of one second-price auction with an anonymous reserve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuctionOutcome {
    /// Winning bidder, if the item sold.
    pub winner: Option<usize>,
    /// Price charged to the winner; 0 when unsold.
    pub payment: f64,
}

impl AuctionOutcome {
    pub fn sold(&self) -> bool {
        self.winner.is_some()
    }
}

/// Runs one second-price auction with anonymous reserve.
///
/// The item sells iff the highest bid clears the reserve; the winner (ties
/// broken by lowest index) pays the larger of the second-highest bid and
/// the reserve. With a single bidder the second-highest bid is 0.
///
/// # Panics
/// Panics on an empty bid vector.
pub fn run_auction(bids: &[f64], reserve: f64) -> AuctionOutcome {
    assert!(!bids.is_empty(), "auction needs at least one bid");
    let mut winner = 0;
    for (i, b) in bids.iter().enumerate().skip(1) {
        if *b > bids[winner] {
            winner = i;
        }
    }
    if bids[winner] < reserve {
        return AuctionOutcome {
            winner: None,
            payment: 0.0,
        };
    }
    let second = bids
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != winner)
        .map(|(_, b)| *b)
        .fold(0.0f64, f64::max);
    AuctionOutcome {
        winner: Some(winner),
        payment: second.max(reserve),
    }
}

/// Result of a two-stage simulation: the policy trained on stage-1 bids and
/// the stage-2 auction outcomes.
#[derive(Debug, Clone)]
pub struct TwoStageRun {
    pub policy: TrainedPolicy,
    pub stage2: Vec<AuctionOutcome>,
}

/// Simulates the two-stage model.
///
/// Stage 1 runs `auctions_per_stage` auctions at reserve 0 with every
/// bidder bidding through its profile strategy; the policy is trained on
/// that bid batch. Stage 2 draws fresh values, bids them truthfully, and
/// runs each auction at a reserve drawn from the policy (fresh noise per
/// auction for `dp_rcp`, fixed otherwise).
///
/// Internally the run splits the supplied generator into four purpose
/// streams (stage-1 values, training noise, stage-2 values, reserve draws),
/// so mechanisms that consume different amounts of noise still see
/// identical value draws.
pub fn simulate_two_stage<R: RngCore + ?Sized>(
    config: &MechanismConfig,
    profile: &MarketProfile,
    auctions_per_stage: usize,
    rng: &mut R,
) -> Result<TwoStageRun> {
    let mut streams = [0u64; 4];
    for s in &mut streams {
        *s = rng.next_u64();
    }
    let mut stage1_rng = ChaCha8Rng::seed_from_u64(streams[0]);
    let mut train_rng = ChaCha8Rng::seed_from_u64(streams[1]);
    let mut stage2_rng = ChaCha8Rng::seed_from_u64(streams[2]);
    let mut reserve_rng = ChaCha8Rng::seed_from_u64(streams[3]);

    let profiles: Vec<BidProfile> = (0..auctions_per_stage)
        .map(|_| {
            let bids = profile
                .bidders()
                .iter()
                .map(|b| b.strategy.apply(b.value.sample(&mut stage1_rng)))
                .collect();
            BidProfile::new(bids)
        })
        .collect();
    let batch = BidBatch::new(profiles)?;
    let policy = train(config, &batch, &mut train_rng)?;

    let stage2 = (0..auctions_per_stage)
        .map(|_| {
            let values = profile.draw_values(&mut stage2_rng);
            let reserve = policy.draw_reserve(&mut reserve_rng);
            run_auction(&values, reserve)
        })
        .collect();
    Ok(TwoStageRun { policy, stage2 })
}
