//! The experiment harness: seeded two-stage simulations over
//! `(mechanism, lambda, epsilon)` grids, normalized revenue and
//! incentive-metric estimates with 95% confidence intervals, CSV output,
//! and Pareto dominance summaries of the revenue/incentive trade-off.
//!
//! Every cell is an independent job whose generator streams derive from
//! `(master_seed, lambda, epsilon, repetition)` — deliberately *not* from
//! the mechanism — so the two mechanisms face common random numbers and the
//! no-noise cells of both mechanisms replay bit-identical simulations.
//! Results are therefore invariant to the number of worker threads.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{MarketProfile, NoiseDistribution};
use crate::error::{Error, Result};
use crate::mechanisms::{simulate_two_stage, MechanismConfig, MechanismKind};
use crate::metrics::{
    expected_highest_value, expected_second_value, IcMeasurement, MetricEstimate,
};
use crate::numeric::{fmt_sig, mean_and_ci, mix_tags, rng_stream};

/// What reported revenue is divided by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Normalizer {
    /// Expected highest value `E[v1]` (welfare); defined for any bidder
    /// count.
    #[default]
    Welfare,
    /// Expected second-highest value `E[v2]`; needs at least two bidders.
    SecondValue,
}

impl Normalizer {
    pub fn name(&self) -> &'static str {
        match self {
            Normalizer::Welfare => "welfare",
            Normalizer::SecondValue => "second_value",
        }
    }

    pub fn value(&self, profile: &MarketProfile) -> Result<f64> {
        match self {
            Normalizer::Welfare => Ok(expected_highest_value(profile)),
            Normalizer::SecondValue => {
                if profile.n() < 2 {
                    return Err(Error::NormalizerNeedsTwoBidders);
                }
                Ok(expected_second_value(profile))
            }
        }
    }
}

/// A full sweep specification.
#[derive(Debug, Clone)]
pub struct ExperimentGrid {
    pub profile: MarketProfile,
    pub mechanisms: Vec<MechanismKind>,
    pub lambdas: Vec<f64>,
    /// Noise levels; `f64::INFINITY` is the no-noise cell.
    pub epsilons: Vec<f64>,
    pub auctions_per_stage: usize,
    /// Finite shading perturbation for the incentive metric.
    pub alpha: f64,
    pub repetitions: usize,
    pub master_seed: u64,
    pub normalizer: Normalizer,
}

/// The standard noise ladder: eps doubling from 0.1 to 12.8, plus no noise.
pub fn default_epsilons() -> Vec<f64> {
    vec![0.1, 0.2, 0.4, 0.8, 1.6, 3.2, 6.4, 12.8, f64::INFINITY]
}

impl ExperimentGrid {
    /// Standard protocol: both mechanisms, the default noise ladder, 5,000
    /// auctions per stage, shading perturbation 0.1, 10 repetitions,
    /// welfare normalizer.
    pub fn standard(profile: MarketProfile, lambdas: Vec<f64>, master_seed: u64) -> Self {
        ExperimentGrid {
            profile,
            mechanisms: vec![MechanismKind::DpRcp, MechanismKind::Srcp],
            lambdas,
            epsilons: default_epsilons(),
            auctions_per_stage: 5_000,
            alpha: 0.1,
            repetitions: 10,
            master_seed,
            normalizer: Normalizer::Welfare,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.mechanisms.is_empty() {
            return Err(Error::InvalidGrid("no mechanisms selected".into()));
        }
        if self.lambdas.is_empty() {
            return Err(Error::InvalidGrid("empty lambda list".into()));
        }
        if self.epsilons.is_empty() {
            return Err(Error::InvalidGrid("empty epsilon list".into()));
        }
        let n = self.profile.n() as f64;
        for &l in &self.lambdas {
            if !(0.0..=n).contains(&l) {
                return Err(Error::InvalidGrid(format!(
                    "lambda {l} outside [0, {n}]"
                )));
            }
        }
        for &e in &self.epsilons {
            if e.is_nan() || e <= 0.0 {
                return Err(Error::InvalidGrid(format!("epsilon {e} must be > 0")));
            }
        }
        // The smoothing mechanism's population reserve has no finite root
        // at lambda = 0 under unbounded noise.
        if self.mechanisms.contains(&MechanismKind::Srcp)
            && self.lambdas.iter().any(|&l| l == 0.0)
            && self.epsilons.iter().any(|e| e.is_finite())
        {
            return Err(Error::InvalidGrid(
                "lambda = 0 with finite noise has no finite smoothed clearing price".into(),
            ));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::AlphaOutOfRange(self.alpha));
        }
        if self.auctions_per_stage == 0 || self.repetitions == 0 {
            return Err(Error::InvalidGrid(
                "auctions_per_stage and repetitions must be positive".into(),
            ));
        }
        self.normalizer.value(&self.profile).map(|_| ())
    }
}

/// One grid cell's aggregated estimates (over repetitions).
#[derive(Debug, Clone)]
pub struct SweepResult {
    pub mechanism: MechanismKind,
    pub lambda: f64,
    pub epsilon: f64,
    pub n_bidders: usize,
    pub repetitions: usize,
    /// Normalized stage-2 revenue, CI over repetition means.
    pub revenue: MetricEstimate,
    /// Incentive metric per measured bidder (bidder 0 for the standard
    /// i.i.d. setups).
    pub dic: Vec<(usize, MetricEstimate)>,
}

const STREAM_SIM: u64 = 1;
const STREAM_IC: u64 = 2;

fn epsilon_tag(epsilon: f64) -> u64 {
    if epsilon.is_infinite() {
        u64::MAX
    } else {
        epsilon.to_bits()
    }
}

/// Runs one `(mechanism, lambda, epsilon)` cell: `repetitions` independent
/// two-stage simulations measuring normalized stage-2 revenue, plus one
/// incentive-metric Monte Carlo per repetition at the grid's `alpha`.
/// Estimates aggregate repetition means with 95% CIs across repetitions.
pub fn run_cell(
    grid: &ExperimentGrid,
    mechanism: MechanismKind,
    lambda: f64,
    epsilon: f64,
) -> Result<SweepResult> {
    let noise = if epsilon.is_infinite() {
        NoiseDistribution::DegenerateZero
    } else {
        NoiseDistribution::laplace(epsilon)?
    };
    let config = MechanismConfig::new(mechanism, lambda, noise);
    let scale = grid.normalizer.value(&grid.profile)?;
    let k = grid.auctions_per_stage;

    // Population oracles for the shaded reserves are repetition-invariant;
    // compute them once per cell.
    let ic = IcMeasurement::new(&config, &grid.profile, 0, grid.alpha)?;

    let mut revenue_means = Vec::with_capacity(grid.repetitions);
    let mut dic_means = Vec::with_capacity(grid.repetitions);
    for rep in 0..grid.repetitions {
        let rep_tag = rep as u64;
        let mut sim_rng = rng_stream(
            grid.master_seed,
            &[STREAM_SIM, lambda.to_bits(), epsilon_tag(epsilon), rep_tag],
        );
        let run = simulate_two_stage(&config, &grid.profile, k, &mut sim_rng)?;
        let mean_payment = run.stage2.iter().map(|o| o.payment).sum::<f64>() / k as f64;
        revenue_means.push(mean_payment / scale);

        let mut ic_rng = rng_stream(
            grid.master_seed,
            &[STREAM_IC, lambda.to_bits(), epsilon_tag(epsilon), rep_tag],
        );
        let est = ic.measure(k, &mut ic_rng, grid.master_seed)?;
        dic_means.push(est.mean);
    }

    let seed = mix_tags(&[grid.master_seed, lambda.to_bits(), epsilon_tag(epsilon)]);
    let aggregate = |means: &[f64]| -> MetricEstimate {
        let (mean, ci) = mean_and_ci(means);
        MetricEstimate {
            mean,
            ci_half_width: ci,
            n_samples: means.len(),
            seed,
        }
    };
    Ok(SweepResult {
        mechanism,
        lambda,
        epsilon,
        n_bidders: grid.profile.n(),
        repetitions: grid.repetitions,
        revenue: aggregate(&revenue_means),
        dic: vec![(0, aggregate(&dic_means))],
    })
}

/// Runs every cell of the grid (cells in parallel), returning results
/// sorted by `(mechanism, lambda, epsilon)`. Deterministic for a fixed
/// master seed regardless of the worker count.
pub fn run_sweep(grid: &ExperimentGrid) -> Result<Vec<SweepResult>> {
    grid.validate()?;
    let cells: Vec<(MechanismKind, f64, f64)> = grid
        .mechanisms
        .iter()
        .flat_map(|&m| {
            grid.lambdas.iter().flat_map(move |&l| {
                grid.epsilons.iter().map(move |&e| (m, l, e))
            })
        })
        .collect();
    let mut results = cells
        .par_iter()
        .map(|&(m, l, e)| run_cell(grid, m, l, e))
        .collect::<Result<Vec<_>>>()?;
    results.sort_by(|a, b| {
        a.mechanism
            .cmp(&b.mechanism)
            .then(a.lambda.total_cmp(&b.lambda))
            .then(a.epsilon.total_cmp(&b.epsilon))
    });
    Ok(results)
}

/// [`run_sweep`] on a dedicated thread pool with `jobs` workers (`None`
/// uses the global pool). The result is identical either way.
pub fn run_sweep_with_jobs(grid: &ExperimentGrid, jobs: Option<usize>) -> Result<Vec<SweepResult>> {
    match jobs {
        None => run_sweep(grid),
        Some(j) => rayon::ThreadPoolBuilder::new()
            .num_threads(j.max(1))
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(|| run_sweep(grid)),
    }
}

/// Provenance stamped into every output file.
#[derive(Debug, Clone)]
pub struct SweepMeta {
    pub tool_version: String,
    pub config_hash: String,
    pub master_seed: u64,
}

/// Renders sweep results in the fixed CSV schema
/// `mechanism,lambda,epsilon,n_bidders,rev_mean,rev_ci,dic_bidder,dic_mean,dic_ci,repetitions,seed`
/// (floats at 9 significant digits, `epsilon` printed as `inf` for the
/// no-noise cell), preceded by `#` metadata lines carrying the tool
/// version, the resolved config hash and the master seed.
pub fn render_sweep_csv(results: &[SweepResult], meta: &SweepMeta) -> String {
    let mut out = String::new();
    out.push_str(&format!("# tool_version={}\n", meta.tool_version));
    out.push_str(&format!("# config_sha256={}\n", meta.config_hash));
    out.push_str(&format!("# master_seed={}\n", meta.master_seed));
    out.push_str(
        "mechanism,lambda,epsilon,n_bidders,rev_mean,rev_ci,dic_bidder,dic_mean,dic_ci,repetitions,seed\n",
    );
    for r in results {
        for (bidder, dic) in &r.dic {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{}\n",
                r.mechanism.name(),
                fmt_sig(r.lambda, 9),
                fmt_sig(r.epsilon, 9),
                r.n_bidders,
                fmt_sig(r.revenue.mean, 9),
                fmt_sig(r.revenue.ci_half_width, 9),
                bidder,
                fmt_sig(dic.mean, 9),
                fmt_sig(dic.ci_half_width, 9),
                r.repetitions,
                meta.master_seed,
            ));
        }
    }
    out
}

/// One point on a mechanism's trade-off curve.
#[derive(Debug, Clone, Copy)]
pub struct TradeoffPoint {
    pub lambda: f64,
    pub epsilon: f64,
    pub revenue: f64,
    pub revenue_ci: f64,
    pub dic: f64,
    pub dic_ci: f64,
}

/// CI-aware dominance: `a` dominates `b` when it is strictly better beyond
/// one combined CI half-width in at least one coordinate and not worse
/// beyond the combined half-width in the other.
pub fn dominates(a: &TradeoffPoint, b: &TradeoffPoint) -> bool {
    let rev_band = a.revenue_ci + b.revenue_ci;
    let dic_band = a.dic_ci + b.dic_ci;
    let better_rev = a.revenue - b.revenue > rev_band;
    let better_dic = a.dic - b.dic > dic_band;
    let not_worse_rev = a.revenue - b.revenue >= -rev_band;
    let not_worse_dic = a.dic - b.dic >= -dic_band;
    (better_rev || better_dic) && not_worse_rev && not_worse_dic
}

/// Per-lambda dominance verdict within one mechanism.
#[derive(Debug, Clone)]
pub struct LambdaCurve {
    pub lambda: f64,
    pub points: Vec<TradeoffPoint>,
    /// True when at least one of the curve's points is not dominated by any
    /// point of a different lambda curve of the same mechanism.
    pub undominated: bool,
}

/// Pareto summary of one sweep: per mechanism, which lambda curves are
/// undominated, plus logged (not asserted) notes about incentive-metric
/// reversals along the noise axis.
#[derive(Debug, Clone)]
pub struct ParetoReport {
    pub n_bidders: usize,
    pub mechanisms: Vec<(MechanismKind, Vec<LambdaCurve>)>,
    /// Observations such as non-monotone DIC in epsilon; informational.
    pub notes: Vec<String>,
}

impl ParetoReport {
    pub fn undominated_lambdas(&self, mechanism: MechanismKind) -> Vec<f64> {
        self.mechanisms
            .iter()
            .find(|(m, _)| *m == mechanism)
            .map(|(_, curves)| {
                curves
                    .iter()
                    .filter(|c| c.undominated)
                    .map(|c| c.lambda)
                    .collect()
            })
            .unwrap_or_default()
    }
}

impl fmt::Display for ParetoReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "pareto summary ({} bidders)", self.n_bidders)?;
        for (mech, curves) in &self.mechanisms {
            writeln!(f, "  mechanism {mech}")?;
            for c in curves {
                writeln!(
                    f,
                    "    lambda={}: {}",
                    fmt_sig(c.lambda, 3),
                    if c.undominated { "undominated" } else { "dominated" }
                )?;
            }
        }
        for note in &self.notes {
            writeln!(f, "  note: {note}")?;
        }
        Ok(())
    }
}

/// Builds the Pareto dominance report for one sweep's results. All results
/// must share a bidder count.
pub fn pareto_summary(results: &[SweepResult]) -> Result<ParetoReport> {
    let n_bidders = results
        .first()
        .map(|r| r.n_bidders)
        .ok_or_else(|| Error::InvalidGrid("no results to summarize".into()))?;
    if results.iter().any(|r| r.n_bidders != n_bidders) {
        return Err(Error::InvalidGrid(
            "pareto summary needs results from a single bidder count".into(),
        ));
    }

    let mut mechanisms: Vec<MechanismKind> = results.iter().map(|r| r.mechanism).collect();
    mechanisms.sort();
    mechanisms.dedup();

    let point_of = |r: &SweepResult| -> TradeoffPoint {
        let dic = &r.dic[0].1;
        TradeoffPoint {
            lambda: r.lambda,
            epsilon: r.epsilon,
            revenue: r.revenue.mean,
            revenue_ci: r.revenue.ci_half_width,
            dic: dic.mean,
            dic_ci: dic.ci_half_width,
        }
    };

    let mut report = ParetoReport {
        n_bidders,
        mechanisms: Vec::new(),
        notes: Vec::new(),
    };
    for mech in mechanisms {
        let mut lambdas: Vec<f64> = results
            .iter()
            .filter(|r| r.mechanism == mech)
            .map(|r| r.lambda)
            .collect();
        lambdas.sort_by(f64::total_cmp);
        lambdas.dedup();

        let curves: Vec<Vec<TradeoffPoint>> = lambdas
            .iter()
            .map(|&l| {
                let mut pts: Vec<TradeoffPoint> = results
                    .iter()
                    .filter(|r| r.mechanism == mech && r.lambda == l)
                    .map(&point_of)
                    .collect();
                pts.sort_by(|a, b| a.epsilon.total_cmp(&b.epsilon));
                pts
            })
            .collect();

        // A lambda curve stays on the frontier when some point of it is not
        // dominated by any point belonging to a different lambda.
        let mut out = Vec::new();
        for (i, pts) in curves.iter().enumerate() {
            let undominated = pts.iter().any(|p| {
                !curves
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != i)
                    .flat_map(|(_, other)| other.iter())
                    .any(|q| dominates(q, p))
            });
            out.push(LambdaCurve {
                lambda: lambdas[i],
                points: pts.clone(),
                undominated,
            });
        }

        // Log (never assert) incentive-metric reversals along the noise
        // axis: the metric normally falls as epsilon grows, but small noise
        // on an aggressive clearing price can push it the other way.
        if mech == MechanismKind::DpRcp {
            for c in &out {
                for w in c.points.windows(2) {
                    let band = w[0].dic_ci + w[1].dic_ci;
                    if w[1].dic - w[0].dic > band {
                        report.notes.push(format!(
                            "dp_rcp lambda={}: DIC rises from eps={} to eps={} ({} -> {})",
                            fmt_sig(c.lambda, 3),
                            fmt_sig(w[0].epsilon, 3),
                            fmt_sig(w[1].epsilon, 3),
                            fmt_sig(w[0].dic, 4),
                            fmt_sig(w[1].dic, 4),
                        ));
                    }
                }
            }
        }
        report.mechanisms.push((mech, out));
    }
    Ok(report)
}
