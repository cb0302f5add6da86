//! Empirical verification machinery for the drift and hitting-time claims:
//! one-step drift estimation, stopped hitting-time measurement with
//! censoring, overshoot statistics, and an exact birth-death-chain oracle
//! that the Monte Carlo paths are checked against.

use rand::Rng;
use thiserror::Error;

use crate::dynamics::step_multinomial;
use crate::opinion::Configuration;
use crate::rng::{seed_for, SimRng};

/// Seed-mixing domain for per-trial RNG derivation inside this module.
const HITTING_DOMAIN: u64 = 0x6472_6966_745f_6c61;

#[derive(Debug, Error, PartialEq)]
pub enum DriftError {
    #[error("invalid parameter: {0}")]
    BadParameter(String),
    #[error("no samples reached the target; overshoot is undefined")]
    NoTargetHits,
}

/// A stochastic process exposing the tracked integer potential `Y_t`.
pub trait PotentialProcess {
    fn potential(&self) -> i64;
    fn step(&mut self, rng: &mut SimRng);
    /// Membership in the allowed region `A`; leaving it stops the clock.
    fn in_allowed_region(&self) -> bool {
        true
    }
}

/// Target and hypothesis constants for a hitting-time measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HittingSpec {
    /// Target value `m`.
    pub target: i64,
    /// Overshoot constant `alpha > 1`.
    pub alpha: f64,
    /// Claimed one-step drift; enables the `2 alpha m / lambda` bound check.
    pub lambda_claimed: Option<f64>,
}

impl HittingSpec {
    pub fn new(target: i64, alpha: f64) -> Result<Self, DriftError> {
        if target < 1 {
            return Err(DriftError::BadParameter(format!(
                "target must be at least 1, got {target}"
            )));
        }
        if !alpha.is_finite() || alpha <= 1.0 {
            return Err(DriftError::BadParameter(format!(
                "alpha must exceed 1, got {alpha}"
            )));
        }
        Ok(HittingSpec {
            target,
            alpha,
            lambda_claimed: None,
        })
    }

    pub fn with_lambda(mut self, lambda: f64) -> Result<Self, DriftError> {
        if !lambda.is_finite() || lambda <= 0.0 {
            return Err(DriftError::BadParameter(format!(
                "lambda must be positive, got {lambda}"
            )));
        }
        self.lambda_claimed = Some(lambda);
        Ok(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitReason {
    /// The potential reached or exceeded the target.
    TargetHit,
    /// The process left the allowed region first.
    ExitedRegion,
    /// Cut off at the round budget; never silently dropped.
    Censored,
}

impl ExitReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExitReason::TargetHit => "target-hit",
            ExitReason::ExitedRegion => "exited-region",
            ExitReason::Censored => "censored",
        }
    }
}

/// One trial's stopped observation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TauSample {
    pub trial: u64,
    pub tau: u64,
    pub y_at_tau: i64,
    pub exit: ExitReason,
}

/// Aggregate over the trials of one measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct HittingSummary {
    pub trials: u64,
    pub target_hits: u64,
    pub exited_region: u64,
    pub censored: u64,
    /// Mean and standard error of tau over non-censored trials.
    pub mean_tau: Option<f64>,
    pub std_error: Option<f64>,
    /// 95% normal-approximation interval for the mean.
    pub ci95: Option<(f64, f64)>,
    /// `2 alpha m / lambda` with the pass verdict, when lambda was claimed.
    pub bound: Option<BoundCheck>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundCheck {
    pub bound: f64,
    pub mean_tau: f64,
    pub satisfied: bool,
}

/// Runs `trials` independent stopped trajectories of the process produced by
/// `make`, each with an RNG derived from `(master_seed, trial)`. A trial
/// stops when the potential reaches `spec.target`, the process leaves its
/// allowed region, or `max_rounds` elapses (reported as censored).
pub fn measure_hitting_time<P, F>(
    make: F,
    spec: &HittingSpec,
    trials: u64,
    max_rounds: u64,
    master_seed: u64,
) -> (Vec<TauSample>, HittingSummary)
where
    P: PotentialProcess,
    F: Fn(u64) -> P,
{
    let mut samples = Vec::with_capacity(trials as usize);
    for trial in 0..trials {
        let mut rng = seed_for(master_seed, HITTING_DOMAIN, trial);
        let mut process = make(trial);
        let mut tau = 0u64;
        let exit = loop {
            if process.potential() >= spec.target {
                break ExitReason::TargetHit;
            }
            if !process.in_allowed_region() {
                break ExitReason::ExitedRegion;
            }
            if tau >= max_rounds {
                break ExitReason::Censored;
            }
            process.step(&mut rng);
            tau += 1;
        };
        samples.push(TauSample {
            trial,
            tau,
            y_at_tau: process.potential(),
            exit,
        });
    }
    let summary = summarize(&samples, spec);
    (samples, summary)
}

fn summarize(samples: &[TauSample], spec: &HittingSpec) -> HittingSummary {
    let target_hits = samples
        .iter()
        .filter(|s| s.exit == ExitReason::TargetHit)
        .count() as u64;
    let exited_region = samples
        .iter()
        .filter(|s| s.exit == ExitReason::ExitedRegion)
        .count() as u64;
    let censored = samples
        .iter()
        .filter(|s| s.exit == ExitReason::Censored)
        .count() as u64;

    let completed: Vec<f64> = samples
        .iter()
        .filter(|s| s.exit != ExitReason::Censored)
        .map(|s| s.tau as f64)
        .collect();
    let (mean_tau, std_error, ci95) = if completed.is_empty() {
        (None, None, None)
    } else {
        let n = completed.len() as f64;
        let mean = completed.iter().sum::<f64>() / n;
        let se = if completed.len() > 1 {
            let var = completed.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (n - 1.0);
            (var / n).sqrt()
        } else {
            0.0
        };
        (
            Some(mean),
            Some(se),
            Some((mean - 1.96 * se, mean + 1.96 * se)),
        )
    };

    let bound = match (spec.lambda_claimed, mean_tau) {
        (Some(lambda), Some(mean)) => {
            let bound = 2.0 * spec.alpha * spec.target as f64 / lambda;
            Some(BoundCheck {
                bound,
                mean_tau: mean,
                satisfied: mean <= bound,
            })
        }
        _ => None,
    };

    HittingSummary {
        trials: samples.len() as u64,
        target_hits,
        exited_region,
        censored,
        mean_tau,
        std_error,
        ci95,
        bound,
    }
}

/// Empirical overshoot statistic with a Wilson 95% interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OvershootEstimate {
    pub target_hits: u64,
    pub over_threshold: u64,
    pub probability: f64,
    pub ci95: (f64, f64),
}

/// Fraction of target-hitting trials whose stopped value exceeded
/// `threshold`. Errors when no trial hit the target.
pub fn overshoot_probability(
    samples: &[TauSample],
    threshold: f64,
) -> Result<OvershootEstimate, DriftError> {
    let hits: Vec<&TauSample> = samples
        .iter()
        .filter(|s| s.exit == ExitReason::TargetHit)
        .collect();
    if hits.is_empty() {
        return Err(DriftError::NoTargetHits);
    }
    let over = hits.iter().filter(|s| s.y_at_tau as f64 > threshold).count() as u64;
    let n = hits.len() as u64;
    Ok(OvershootEstimate {
        target_hits: n,
        over_threshold: over,
        probability: over as f64 / n as f64,
        ci95: wilson_ci(over, n, 1.96),
    })
}

fn wilson_ci(successes: u64, n: u64, z: f64) -> (f64, f64) {
    let nf = n as f64;
    let p = successes as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = z * ((p * (1.0 - p) + z2 / (4.0 * nf)) / nf).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Monte Carlo estimate of a one-step drift.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftEstimate {
    pub mean_delta: f64,
    pub std_error: f64,
    pub samples: u64,
}

/// Estimates `E[f(C') - f(c)]` for one multinomial round from `c`.
pub fn estimate_one_step_drift<F>(
    c: &Configuration,
    f: F,
    trials: u64,
    rng: &mut SimRng,
) -> Result<DriftEstimate, DriftError>
where
    F: Fn(&Configuration) -> f64,
{
    if trials < 2 {
        return Err(DriftError::BadParameter(format!(
            "need at least 2 trials, got {trials}"
        )));
    }
    let base = f(c);
    let mut deltas = Vec::with_capacity(trials as usize);
    for _ in 0..trials {
        let next = step_multinomial(c, rng);
        deltas.push(f(&next) - base);
    }
    let n = trials as f64;
    let mean = deltas.iter().sum::<f64>() / n;
    let var = deltas.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(DriftEstimate {
        mean_delta: mean,
        std_error: (var / n).sqrt(),
        samples: trials,
    })
}

/// The gap potential `floor(n/j) - min_active_support` with `j` frozen at
/// construction, stepped by the multinomial engine.
#[derive(Debug, Clone)]
pub struct MinSupportGap {
    cfg: Configuration,
    j: u32,
}

impl MinSupportGap {
    pub fn new(cfg: Configuration) -> Self {
        let j = cfg.active_count() as u32;
        MinSupportGap { cfg, j }
    }

    pub fn configuration(&self) -> &Configuration {
        &self.cfg
    }

    pub fn j(&self) -> u32 {
        self.j
    }

    /// The potential as a pure function of a configuration, for drift
    /// estimation against the same `j`.
    pub fn potential_of(&self, cfg: &Configuration) -> f64 {
        let min = cfg.min_support().1;
        (cfg.population() / u64::from(self.j)) as f64 - min as f64
    }
}

impl PotentialProcess for MinSupportGap {
    fn potential(&self) -> i64 {
        let min = self.cfg.min_support().1;
        (self.cfg.population() / u64::from(self.j)) as i64 - min as i64
    }

    fn step(&mut self, rng: &mut SimRng) {
        self.cfg = step_multinomial(&self.cfg, rng);
    }
}

/// Biased lazy random walk on `{0, 1, ...}`: up with probability `p_up`,
/// down with `p_down` (staying put at zero), otherwise holding. The exact
/// oracle [`birth_death_exact_hitting`] computes its first-passage times.
#[derive(Debug, Clone, Copy)]
pub struct BiasedWalk {
    pub position: i64,
    pub p_up: f64,
    pub p_down: f64,
}

impl BiasedWalk {
    pub fn new(start: i64, p_up: f64, p_down: f64) -> Result<Self, DriftError> {
        validate_walk_params(p_up, p_down)?;
        if start < 0 {
            return Err(DriftError::BadParameter(format!(
                "start must be non-negative, got {start}"
            )));
        }
        Ok(BiasedWalk {
            position: start,
            p_up,
            p_down,
        })
    }
}

impl PotentialProcess for BiasedWalk {
    fn potential(&self) -> i64 {
        self.position
    }

    fn step(&mut self, rng: &mut SimRng) {
        let u: f64 = rng.random();
        if u < self.p_up {
            self.position += 1;
        } else if u < self.p_up + self.p_down {
            self.position = (self.position - 1).max(0);
        }
    }
}

fn validate_walk_params(p_up: f64, p_down: f64) -> Result<(), DriftError> {
    if !(p_up > 0.0 && p_up <= 1.0) {
        return Err(DriftError::BadParameter(format!(
            "p_up must be in (0, 1], got {p_up}"
        )));
    }
    if !(0.0..=1.0).contains(&p_down) || p_up + p_down > 1.0 {
        return Err(DriftError::BadParameter(format!(
            "p_down must satisfy 0 <= p_down and p_up + p_down <= 1, got {p_down}"
        )));
    }
    Ok(())
}

/// Exact expected first-passage time of the lazy walk from `start` to
/// `target`, reflecting at 0, by back-substitution of the one-step
/// recurrence: `d(0) = 1/p_up`, `d(i) = (1 + p_down d(i-1)) / p_up`,
/// `E[tau] = sum_{i=start}^{target-1} d(i)`.
pub fn birth_death_exact_hitting(
    p_up: f64,
    p_down: f64,
    start: i64,
    target: i64,
) -> Result<f64, DriftError> {
    validate_walk_params(p_up, p_down)?;
    if start < 0 || target < start {
        return Err(DriftError::BadParameter(format!(
            "need 0 <= start <= target, got start {start}, target {target}"
        )));
    }
    let mut expected = 0.0f64;
    let mut d = 1.0 / p_up;
    for i in 0..target {
        if i >= start {
            expected += d;
        }
        d = (1.0 + p_down * d) / p_up;
    }
    Ok(expected)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::opinion::OpinionId;
    use crate::rng::seed_for;

    #[test]
    fn exact_hitting_deterministic_climb() {
        assert_eq!(birth_death_exact_hitting(1.0, 0.0, 0, 50).unwrap(), 50.0);
        assert_eq!(birth_death_exact_hitting(0.6, 0.4, 50, 50).unwrap(), 0.0);
    }

    #[test]
    fn exact_hitting_biased_walk_value() {
        // Closed form for p = 0.6, q = 0.4, start 0, target 50:
        // d(i) = 5 - (10/3) (2/3)^i, so E = 250 - 10 (1 - (2/3)^50).
        let v = birth_death_exact_hitting(0.6, 0.4, 0, 50).unwrap();
        let closed = 250.0 - 10.0 * (1.0 - (2.0f64 / 3.0).powi(50));
        assert!((v - closed).abs() < 1e-9, "{v} vs {closed}");
        assert!((v - 240.0).abs() < 1e-6);
    }

    #[test]
    fn exact_hitting_rejects_bad_parameters() {
        assert!(birth_death_exact_hitting(0.0, 0.5, 0, 10).is_err());
        assert!(birth_death_exact_hitting(0.7, 0.5, 0, 10).is_err());
        assert!(birth_death_exact_hitting(0.6, 0.4, 11, 10).is_err());
        assert!(birth_death_exact_hitting(0.6, -0.1, 0, 10).is_err());
    }

    #[test]
    fn degenerate_process_already_at_target() {
        let spec = HittingSpec::new(50, 2.0).unwrap();
        let (samples, summary) =
            measure_hitting_time(|_| BiasedWalk::new(50, 0.6, 0.4).unwrap(), &spec, 20, 100, 7);
        assert!(samples.iter().all(|s| s.tau == 0));
        assert_eq!(summary.target_hits, 20);
        assert_eq!(summary.mean_tau, Some(0.0));
    }

    #[test]
    fn monte_carlo_matches_exact_oracle() {
        let spec = HittingSpec::new(50, 2.0).unwrap().with_lambda(0.2).unwrap();
        let exact = birth_death_exact_hitting(0.6, 0.4, 0, 50).unwrap();
        let (_, summary) = measure_hitting_time(
            |_| BiasedWalk::new(0, 0.6, 0.4).unwrap(),
            &spec,
            4000,
            100_000,
            11,
        );
        let mean = summary.mean_tau.unwrap();
        let se = summary.std_error.unwrap();
        assert!(
            (mean - exact).abs() <= 3.0 * se,
            "mean {mean}, exact {exact}, se {se}"
        );
        let bound = summary.bound.unwrap();
        assert!((bound.bound - 1000.0).abs() < 1e-9);
        assert!(bound.satisfied);
    }

    #[test]
    fn censored_trials_are_reported_not_dropped() {
        let spec = HittingSpec::new(1_000_000, 2.0).unwrap();
        let (samples, summary) =
            measure_hitting_time(|_| BiasedWalk::new(0, 0.6, 0.4).unwrap(), &spec, 10, 50, 3);
        assert_eq!(summary.censored, 10);
        assert_eq!(summary.mean_tau, None);
        assert!(samples.iter().all(|s| s.exit == ExitReason::Censored));
    }

    #[test]
    fn unit_increments_cannot_overshoot() {
        let spec = HittingSpec::new(40, 2.0).unwrap();
        let (samples, _) = measure_hitting_time(
            |_| BiasedWalk::new(0, 0.7, 0.2).unwrap(),
            &spec,
            500,
            100_000,
            13,
        );
        let est = overshoot_probability(&samples, 40.0).unwrap();
        assert_eq!(est.over_threshold, 0);
        assert_eq!(est.probability, 0.0);
    }

    #[test]
    fn overshoot_requires_target_hits() {
        let samples = vec![TauSample {
            trial: 0,
            tau: 5,
            y_at_tau: 3,
            exit: ExitReason::Censored,
        }];
        assert_eq!(
            overshoot_probability(&samples, 10.0),
            Err(DriftError::NoTargetHits)
        );
    }

    #[test]
    fn conserved_quantity_has_exactly_zero_drift() {
        let mut rng = seed_for(17, 0, 0);
        let c = Configuration::uniform(3000, 3).unwrap();
        let est =
            estimate_one_step_drift(&c, |cfg| cfg.population() as f64, 200, &mut rng).unwrap();
        assert_eq!(est.mean_delta, 0.0);
        assert_eq!(est.std_error, 0.0);
    }

    #[test]
    fn consensus_gap_has_zero_drift() {
        let mut rng = seed_for(19, 0, 0);
        let c = Configuration::consensus(5000, OpinionId(2)).unwrap();
        let gap = MinSupportGap::new(c.clone());
        let est =
            estimate_one_step_drift(&c, |cfg| gap.potential_of(cfg), 200, &mut rng).unwrap();
        assert_eq!(est.mean_delta, 0.0);
        assert_eq!(est.std_error, 0.0);
    }

    #[test]
    fn min_gap_process_tracks_uniform_start() {
        let c = Configuration::uniform(999, 3).unwrap();
        let gap = MinSupportGap::new(c);
        assert_eq!(gap.j(), 3);
        assert_eq!(gap.potential(), 0);
    }

    #[test]
    fn uniform_gap_drift_clears_half_the_reference_scale() {
        // At the uniform three-opinion configuration the gap potential has
        // strong positive drift; the reference scale is sqrt(n) / j^{3/2}.
        let n = 1_000_000u64;
        let c = Configuration::uniform(n, 3).unwrap();
        let gap = MinSupportGap::new(c.clone());
        let mut rng = seed_for(23, 0, 0);
        let est = estimate_one_step_drift(&c, |cfg| gap.potential_of(cfg), 500, &mut rng).unwrap();
        let reference = (n as f64).sqrt() / 3f64.powf(1.5);
        assert!(
            est.mean_delta >= 0.5 * reference,
            "drift {} below half the reference {reference}",
            est.mean_delta
        );
        let epsilon_hat = est.mean_delta / reference;
        assert!(epsilon_hat > 0.0);
    }
}
