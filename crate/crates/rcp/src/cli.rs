//! Config ingestion and the command implementations behind the `rcp`
//! binary.
//!
//! A run is described by one JSON config file; every field except the
//! bidder profile has a default matching the standard experiment protocol
//! (truncated lognormal values, 5,000 auctions per stage, shading
//! perturbation 0.1, 10 repetitions, the doubling noise ladder with a
//! no-noise cell). The resolved config is hashed and stamped into every
//! output so a result file pins the exact inputs that produced it.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::clearing::{
    empirical_clearing_price, oracle_clearing_price, reserve_gap_bound, smoothed_oracle_reserve,
    smoothed_oracle_reserve_by_convolution, BidBatch, BidProfile,
};
use crate::distributions::{BiddingStrategy, MarketProfile, NoiseDistribution, ValueDistribution};
use crate::error::{Error, Result};
use crate::experiments::{
    default_epsilons, pareto_summary, render_sweep_csv, run_sweep_with_jobs, ExperimentGrid,
    Normalizer, SweepMeta,
};
use crate::mechanisms::{simulate_two_stage, MechanismConfig, MechanismKind};
use crate::metrics::{
    clearing_price_sensitivity, estimate_gamma_lipschitz, estimate_order_stat_lipschitz,
    expected_highest_value, expected_revenue_closed, expected_revenue_mc, expected_second_value,
    ic_metric_dp_closed, ic_metric_mc, ic_metric_srcp_closed, smoothed_reserve_sensitivity,
    srcp_revenue_bound_with_constants, validate_dp_revenue_bound, zero_reserve_threshold,
};
use crate::numeric::{fmt_sig, rng_stream};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// On-disk run configuration. Unknown top-level fields are rejected;
/// every field except `profile` is optional.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub profile: MarketProfile,
    #[serde(default = "default_mechanisms")]
    pub mechanisms: Vec<MechanismKind>,
    /// Defaults to `n * {0.2, 0.4, 0.6, 0.8}` for `n` bidders.
    #[serde(default)]
    pub lambdas: Option<Vec<f64>>,
    /// Accepts numbers and the string `"inf"` for the no-noise cell.
    #[serde(default = "default_epsilons", with = "epsilon_list")]
    pub epsilons: Vec<f64>,
    #[serde(default = "default_auctions")]
    pub auctions_per_stage: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    #[serde(default = "default_seed")]
    pub master_seed: u64,
    #[serde(default)]
    pub normalizer: Normalizer,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

fn default_mechanisms() -> Vec<MechanismKind> {
    vec![MechanismKind::DpRcp, MechanismKind::Srcp]
}

fn default_auctions() -> usize {
    5_000
}

fn default_alpha() -> f64 {
    0.1
}

fn default_repetitions() -> usize {
    10
}

fn default_seed() -> u64 {
    12345
}

/// Serde adapter encoding infinite noise levels as the literal `"inf"`.
mod epsilon_list {
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(eps: &[f64], s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeSeq;
        let mut seq = s.serialize_seq(Some(eps.len()))?;
        for &e in eps {
            if e.is_infinite() {
                seq.serialize_element("inf")?;
            } else {
                seq.serialize_element(&e)?;
            }
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<f64>, D::Error> {
        let raw: Vec<serde_json::Value> = Vec::deserialize(d)?;
        raw.into_iter()
            .map(|v| match v {
                serde_json::Value::Number(n) => n
                    .as_f64()
                    .ok_or_else(|| D::Error::custom("epsilons: non-finite number")),
                serde_json::Value::String(s) if s == "inf" => Ok(f64::INFINITY),
                other => Err(D::Error::custom(format!(
                    "epsilons: expected a number or \"inf\", found {other}"
                ))),
            })
            .collect()
    }
}

/// Command-line overrides applied on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub normalizer: Option<Normalizer>,
}

/// A config with defaults filled in, ready to run.
#[derive(Debug, Clone)]
pub struct ResolvedConfig {
    pub grid: ExperimentGrid,
    pub out: PathBuf,
    /// SHA-256 of the canonical serialized config (after defaults and
    /// overrides).
    pub config_hash: String,
}

impl RunConfig {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn resolve(mut self, overrides: &Overrides) -> Result<ResolvedConfig> {
        self.profile.validate()?;
        if let Some(seed) = overrides.seed {
            self.master_seed = seed;
        }
        if let Some(norm) = overrides.normalizer {
            self.normalizer = norm;
        }
        if let Some(out) = &overrides.out {
            self.out = Some(out.clone());
        }
        let n = self.profile.n() as f64;
        let lambdas = self
            .lambdas
            .clone()
            .unwrap_or_else(|| [0.2, 0.4, 0.6, 0.8].iter().map(|l| l * n).collect());
        self.lambdas = Some(lambdas.clone());
        let out = self.out.take().unwrap_or_else(|| PathBuf::from("sweep.csv"));

        // The hash identifies the experiment, not its destination: the
        // output path is excluded (self.out was taken above), so the same
        // run written elsewhere keeps the same config_sha256.
        let canonical = serde_json::to_string(&self)?;
        let mut hasher = Sha256::new();
        hasher.update(canonical.as_bytes());
        let config_hash = hasher
            .finalize()
            .iter()
            .fold(String::new(), |mut acc, b| {
                let _ = write!(acc, "{b:02x}");
                acc
            });

        let grid = ExperimentGrid {
            profile: self.profile,
            mechanisms: self.mechanisms,
            lambdas,
            epsilons: self.epsilons,
            auctions_per_stage: self.auctions_per_stage,
            alpha: self.alpha,
            repetitions: self.repetitions,
            master_seed: self.master_seed,
            normalizer: self.normalizer,
        };
        grid.validate()?;
        Ok(ResolvedConfig {
            grid,
            out,
            config_hash,
        })
    }
}

impl ResolvedConfig {
    pub fn meta(&self) -> SweepMeta {
        SweepMeta {
            tool_version: TOOL_VERSION.to_string(),
            config_hash: self.config_hash.clone(),
            master_seed: self.grid.master_seed,
        }
    }

    fn meta_header(&self) -> String {
        format!(
            "# tool_version={}\n# config_sha256={}\n# master_seed={}\n",
            TOOL_VERSION, self.config_hash, self.grid.master_seed
        )
    }
}

/// `price`: exact clearing price of a bid batch CSV, 12 significant digits.
pub fn cmd_price(batch_path: &Path, lambda: f64) -> Result<String> {
    let batch = BidBatch::from_csv_path(batch_path)?;
    let price = empirical_clearing_price(&batch, lambda)?;
    Ok(fmt_sig(price, 12))
}

fn noise_for(epsilon: f64) -> Result<NoiseDistribution> {
    if epsilon.is_infinite() {
        Ok(NoiseDistribution::DegenerateZero)
    } else {
        NoiseDistribution::laplace(epsilon)
    }
}

/// `oracle`: closed-form population quantities for every `(lambda,
/// epsilon)` pair of the grid, one labeled line per quantity.
pub fn cmd_oracle(cfg: &ResolvedConfig) -> Result<String> {
    let profile = cfg.grid.profile.truthful();
    let mut out = cfg.meta_header();
    let _ = writeln!(out, "expected_highest_value = {}", fmt_sig(expected_highest_value(&profile), 12));
    let _ = writeln!(out, "expected_second_value  = {}", fmt_sig(expected_second_value(&profile), 12));
    for &lambda in &cfg.grid.lambdas {
        for &epsilon in &cfg.grid.epsilons {
            let noise = noise_for(epsilon)?;
            let _ = writeln!(out, "[lambda={} epsilon={}]", fmt_sig(lambda, 9), fmt_sig(epsilon, 9));
            let p_c = oracle_clearing_price(&profile, lambda);
            // No finite smoothed reserve exists at lambda = 0 under
            // unbounded noise.
            let r_s = (lambda > 0.0 || noise.is_degenerate())
                .then(|| smoothed_oracle_reserve(&profile, &noise, lambda));
            let eta = clearing_price_sensitivity(&profile, lambda, 0)?;
            let kappa = zero_reserve_threshold(&profile, &noise);
            let opt = |x: Option<f64>| match x {
                Some(v) => fmt_sig(v, 12),
                None => "n/a (diverges at lambda = 0)".to_string(),
            };
            let _ = writeln!(out, "clearing_price   = {}", fmt_sig(p_c, 12));
            let _ = writeln!(out, "smoothed_reserve = {}", opt(r_s));
            let _ = writeln!(out, "eta              = {}", fmt_sig(eta, 12));
            let _ = writeln!(out, "kappa            = {}", fmt_sig(kappa, 12));
            if !noise.has_density() {
                let _ = writeln!(out, "zeta             = n/a (noise has no density)");
                let _ = writeln!(out, "dic_srcp_closed  = n/a (noise has no density)");
            } else if r_s.is_some() {
                let zeta = smoothed_reserve_sensitivity(&profile, lambda, &noise, 0)?;
                let dic_srcp = ic_metric_srcp_closed(&profile, lambda, &noise, 0)?;
                let _ = writeln!(out, "zeta             = {}", fmt_sig(zeta, 12));
                let _ = writeln!(out, "dic_srcp_closed  = {}", fmt_sig(dic_srcp, 12));
            } else {
                let _ = writeln!(out, "zeta             = {}", opt(None));
                let _ = writeln!(out, "dic_srcp_closed  = {}", opt(None));
            }
            let dic_dp = ic_metric_dp_closed(&profile, lambda, &noise, 0)?;
            let _ = writeln!(out, "dic_dp_closed    = {}", fmt_sig(dic_dp, 12));
            let _ = writeln!(out, "rev_at_clearing  = {}", fmt_sig(expected_revenue_closed(&profile, p_c), 12));
            let _ = writeln!(
                out,
                "rev_at_smoothed  = {}",
                opt(r_s.map(|r| expected_revenue_closed(&profile, r)))
            );
        }
    }
    Ok(out)
}

/// `sweep`: runs the full grid and returns `(csv, human summary)`.
pub fn cmd_sweep(cfg: &ResolvedConfig, jobs: Option<usize>) -> Result<(String, String)> {
    let results = run_sweep_with_jobs(&cfg.grid, jobs)?;
    let csv = render_sweep_csv(&results, &cfg.meta());
    let report = pareto_summary(&results)?;
    Ok((csv, report.to_string()))
}

/// Writes `text` to `path`, creating parent directories as needed.
pub fn write_output(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// `simulate`: one two-stage run for the first grid cell; dumps the policy
/// record and stage-2 outcome statistics.
pub fn cmd_simulate(cfg: &ResolvedConfig) -> Result<String> {
    let grid = &cfg.grid;
    let mechanism = grid.mechanisms[0];
    let lambda = grid.lambdas[0];
    let epsilon = grid.epsilons[0];
    let config = MechanismConfig::new(mechanism, lambda, noise_for(epsilon)?);
    let mut rng = rng_stream(grid.master_seed, &[0x51u64]);
    let run = simulate_two_stage(&config, &grid.profile, grid.auctions_per_stage, &mut rng)?;
    let k = run.stage2.len();
    let sold = run.stage2.iter().filter(|o| o.sold()).count();
    let mean_payment = run.stage2.iter().map(|o| o.payment).sum::<f64>() / k as f64;
    let scale = grid.normalizer.value(&grid.profile)?;

    let mut out = cfg.meta_header();
    let _ = writeln!(out, "policy = {}", run.policy.record());
    let _ = writeln!(out, "auctions = {k}");
    let _ = writeln!(out, "sold = {sold}");
    let _ = writeln!(out, "match_rate = {}", fmt_sig(sold as f64 / k as f64, 9));
    let _ = writeln!(out, "mean_payment = {}", fmt_sig(mean_payment, 9));
    let _ = writeln!(
        out,
        "normalized_revenue ({}) = {}",
        grid.normalizer.name(),
        fmt_sig(mean_payment / scale, 9)
    );
    Ok(out)
}

struct CheckTable {
    rows: Vec<(String, bool, String)>,
}

impl CheckTable {
    fn new() -> Self {
        CheckTable { rows: Vec::new() }
    }

    fn push(&mut self, name: &str, pass: bool, detail: String) {
        self.rows.push((name.to_string(), pass, detail));
    }

    fn all_pass(&self) -> bool {
        self.rows.iter().all(|(_, p, _)| *p)
    }

    fn render(&self) -> String {
        let mut out = String::new();
        for (name, pass, detail) in &self.rows {
            let _ = writeln!(out, "{} {name}: {detail}", if *pass { "PASS" } else { "FAIL" });
        }
        let _ = writeln!(
            out,
            "{}/{} checks passed",
            self.rows.iter().filter(|(_, p, _)| *p).count(),
            self.rows.len()
        );
        out
    }
}

/// `validate`: runs the bound and cross-check suite on fixed uniform and
/// truncated-lognormal profiles. Returns the rendered table and whether
/// every check passed.
pub fn cmd_validate() -> Result<(String, bool)> {
    let mut table = CheckTable::new();
    let uniform = ValueDistribution::uniform(0.0, 1.0)?;
    let lognormal = ValueDistribution::truncated_lognormal(0.0, 0.5, 0.0, 2.5)?;

    // Closed-form clearing anchors.
    {
        let one = MarketProfile::iid(uniform, 1)?;
        let three = MarketProfile::iid(uniform, 3)?;
        let e1 = (oracle_clearing_price(&one, 0.3) - 0.7).abs();
        let e2 = (oracle_clearing_price(&three, 0.9) - 0.7).abs();
        let noise = NoiseDistribution::laplace(2.0)?;
        let e3 = (smoothed_oracle_reserve(&one, &noise, 0.5) - 0.5).abs();
        table.push(
            "clearing anchors (uniform quantiles, symmetric smoothed reserve)",
            e1 < 1e-8 && e2 < 1e-8 && e3 < 1e-6,
            format!("errors {:.2e} {:.2e} {:.2e}", e1, e2, e3),
        );
    }

    // Exact solver vs a brute-force loss scan.
    {
        use crate::clearing::batch_clearing_loss;
        let mut rng = rng_stream(2024, &[1]);
        let mut worst: f64 = 0.0;
        for _ in 0..20 {
            use rand::Rng;
            let n = rng.gen_range(1..=3usize);
            let k = rng.gen_range(1..=20usize);
            let profiles: Vec<BidProfile> = (0..k)
                .map(|_| BidProfile::new((0..n).map(|_| rng.gen::<f64>()).collect()))
                .collect();
            let b = BidBatch::new(profiles)?;
            let lambda = rng.gen::<f64>() * n as f64;
            let exact = empirical_clearing_price(&b, lambda)?;
            let exact_loss = batch_clearing_loss(exact, &b, lambda);
            let mut p = 0.0;
            while p <= 1.0 {
                worst = worst.max(exact_loss - batch_clearing_loss(p, &b, lambda));
                p += 1e-4;
            }
        }
        table.push(
            "exact clearing solver never beaten by grid scan",
            worst <= 1e-12,
            format!("max loss excess {worst:.2e}"),
        );
    }

    // The two smoothed-reserve solver routes agree.
    {
        let mut worst: f64 = 0.0;
        for (profile, lambda) in [
            (MarketProfile::iid(uniform, 1)?, 0.3),
            (MarketProfile::iid(uniform, 2)?, 1.2),
            (MarketProfile::iid(lognormal, 2)?, 0.8),
        ] {
            for eps in [0.5, 2.0, 8.0] {
                let noise = NoiseDistribution::laplace(eps)?;
                let a = smoothed_oracle_reserve(&profile, &noise, lambda);
                let b = smoothed_oracle_reserve_by_convolution(&profile, &noise, lambda);
                worst = worst.max((a - b).abs());
            }
        }
        table.push(
            "smoothed reserve: direct and convolution routes agree",
            worst < 1e-6,
            format!("max difference {worst:.2e}"),
        );
    }

    // Smoothed-vs-clearing gap bound.
    {
        let mut ok = true;
        let mut detail = String::new();
        for (profile, lambda) in [
            (MarketProfile::iid(uniform, 1)?, 0.3),
            (MarketProfile::iid(lognormal, 2)?, 1.2),
        ] {
            let mu = estimate_gamma_lipschitz(&profile)?;
            for eps in [2.0, 10.0, 50.0] {
                let noise = NoiseDistribution::laplace(eps)?;
                let gap = (smoothed_oracle_reserve(&profile, &noise, lambda)
                    - oracle_clearing_price(&profile, lambda))
                .abs();
                let bound = reserve_gap_bound(&profile, &noise, lambda, 0.1, mu)?;
                if gap > bound {
                    ok = false;
                    let _ = write!(detail, " violated at eps={eps} ({gap:.3} > {bound:.3})");
                }
            }
        }
        table.push(
            "reserve gap bound |r_s - p_c| <= ln(1/delta)/eps + mu delta max(n-lambda,lambda)/(1-delta)",
            ok,
            if detail.is_empty() { "holds on all cases".into() } else { detail },
        );
    }

    // Clearing-price sensitivity: anchors and finite differences.
    {
        let one = MarketProfile::iid(uniform, 1)?;
        let eta1 = clearing_price_sensitivity(&one, 0.3, 0)?;
        let anchor1 = (eta1 - 0.7).abs();
        let two = MarketProfile::iid(lognormal, 2)?;
        let eta2 = clearing_price_sensitivity(&two, 0.8, 0)?;
        let anchor2 = (eta2 - lognormal.quantile(1.0 - 0.4)? / 2.0).abs();
        let mut fd_rel: f64 = 0.0;
        for (profile, lambda) in [(one.clone(), 0.3), (two.clone(), 0.8)] {
            let eta = clearing_price_sensitivity(&profile, lambda, 0)?;
            let h = 1e-4;
            let up = profile.with_strategy(0, BiddingStrategy::linear_shading(1.0 + h)?);
            let dn = profile.with_strategy(0, BiddingStrategy::linear_shading(1.0 - h)?);
            let fd = (oracle_clearing_price(&up, lambda) - oracle_clearing_price(&dn, lambda))
                / (2.0 * h);
            fd_rel = fd_rel.max((fd - eta).abs() / eta.abs().max(1e-12));
        }
        table.push(
            "clearing-price sensitivity anchors and finite difference",
            anchor1 < 1e-8 && anchor2 < 1e-7 && fd_rel < 1e-3,
            format!("anchor errors {anchor1:.2e} {anchor2:.2e}, max fd rel err {fd_rel:.2e}"),
        );
    }

    // Smoothed-reserve sensitivity finite difference.
    {
        let noise = NoiseDistribution::laplace(5.0)?;
        let mut worst: f64 = 0.0;
        for (profile, lambda) in [
            (MarketProfile::iid(uniform, 1)?, 0.3),
            (MarketProfile::iid(uniform, 2)?, 0.7),
            (MarketProfile::iid(lognormal, 2)?, 1.2),
        ] {
            let zeta = smoothed_reserve_sensitivity(&profile, lambda, &noise, 0)?;
            let h = 1e-4;
            let up = profile.with_strategy(0, BiddingStrategy::linear_shading(1.0 + h)?);
            let dn = profile.with_strategy(0, BiddingStrategy::linear_shading(1.0 - h)?);
            let fd = (smoothed_oracle_reserve(&up, &noise, lambda)
                - smoothed_oracle_reserve(&dn, &noise, lambda))
                / (2.0 * h);
            worst = worst.max((fd - zeta).abs());
        }
        table.push(
            "smoothed-reserve sensitivity finite difference",
            worst < 1e-3,
            format!("max |fd - zeta| = {worst:.2e}"),
        );
    }

    // Noisy-reserve revenue guarantee, empirical violation rates.
    {
        let one = MarketProfile::iid(uniform, 1)?;
        let n_trials = 100_000;
        let mut ok = true;
        let mut detail = String::new();
        for eps in [2.0, 10.0] {
            for delta in [0.05, 0.2] {
                let rate = validate_dp_revenue_bound(&one, 0.5, eps, delta, n_trials, 31)?;
                let slack = delta + 3.0 * (delta * (1.0 - delta) / n_trials as f64).sqrt();
                if rate > slack {
                    ok = false;
                }
                let _ = write!(detail, " (eps={eps},delta={delta}: {rate:.4})");
            }
        }
        let zero_rate = validate_dp_revenue_bound(&one, 0.5, f64::INFINITY, 0.05, 1_000, 31)?;
        ok = ok && zero_rate == 0.0;
        table.push(
            "noisy-reserve revenue guarantee violation rates",
            ok,
            format!("rates{detail}, no-noise rate {zero_rate}"),
        );
    }

    // Smoothed-reserve revenue guarantee, deterministic grid.
    {
        let mut ok = true;
        let mut zero_regime = 0usize;
        let mut total = 0usize;
        let mut worst_margin = f64::INFINITY;
        for profile in [
            MarketProfile::iid(uniform, 1)?,
            MarketProfile::iid(uniform, 2)?,
            MarketProfile::iid(lognormal, 1)?,
            MarketProfile::iid(lognormal, 2)?,
        ] {
            let n = profile.n() as f64;
            let l = estimate_order_stat_lipschitz(&profile);
            let mu = estimate_gamma_lipschitz(&profile)?;
            for frac in [0.2, 0.4, 0.6, 0.8] {
                let lambda = frac * n;
                for eps in [0.1, 0.2, 0.4, 0.8, 1.6, 3.2, 6.4, 12.8, f64::INFINITY] {
                    let check = srcp_revenue_bound_with_constants(&profile, lambda, eps, l, mu)?;
                    total += 1;
                    if check.zero_reserve_regime {
                        zero_regime += 1;
                    }
                    ok &= check.holds();
                    worst_margin = worst_margin
                        .min(check.rev_smoothed - (check.rev_clearing - check.bound));
                }
            }
        }
        table.push(
            "smoothing revenue guarantee on the (lambda, eps) grid",
            ok,
            format!(
                "{total} points ({zero_regime} in the zero-reserve regime), worst margin {worst_margin:.3e}"
            ),
        );
    }

    // Closed-form revenue vs Monte Carlo.
    {
        let mut ok = true;
        let mut worst_sigma = 0.0f64;
        let cases = [
            (MarketProfile::iid(uniform, 1)?, 0.5),
            (MarketProfile::iid(uniform, 2)?, 0.5),
            (MarketProfile::iid(lognormal, 2)?, 1.0),
        ];
        for (i, (profile, reserve)) in cases.iter().enumerate() {
            let mut rng = rng_stream(97, &[i as u64]);
            let est = expected_revenue_mc(profile, |_| *reserve, 400_000, &mut rng, 97)?;
            let closed = expected_revenue_closed(profile, *reserve);
            let sigmas = (est.mean - closed).abs() / est.ci_half_width.max(1e-12);
            worst_sigma = worst_sigma.max(sigmas);
            ok &= sigmas <= 3.0;
        }
        table.push(
            "closed-form revenue vs Monte Carlo",
            ok,
            format!("worst deviation {worst_sigma:.2} CI half-widths"),
        );
    }

    // Closed-form incentive metrics vs Monte Carlo.
    {
        let one = MarketProfile::iid(uniform, 1)?;
        let noise = NoiseDistribution::laplace(2.0)?;
        let dp = MechanismConfig::new(MechanismKind::DpRcp, 0.5, noise);
        let est = ic_metric_mc(&dp, &one, 0, 0.01, 1_000_000, 53)?;
        let closed = ic_metric_dp_closed(&one, 0.5, &noise, 0)?;
        let e1 = (est.mean - closed).abs();
        let t1 = (3.0 * est.ci_half_width).max(0.01);

        let sm = MechanismConfig::new(MechanismKind::Srcp, 0.5, noise);
        let est = ic_metric_mc(&sm, &one, 0, 0.01, 1_000_000, 54)?;
        let closed = ic_metric_srcp_closed(&one, 0.5, &noise, 0)?;
        let e2 = (est.mean - closed).abs();
        let t2 = (3.0 * est.ci_half_width).max(0.01);
        table.push(
            "closed-form incentive metrics vs Monte Carlo",
            e1 <= t1 && e2 <= t2,
            format!("errors {e1:.4} (tol {t1:.4}), {e2:.4} (tol {t2:.4})"),
        );
    }

    Ok((table.render(), table.all_pass()))
}
