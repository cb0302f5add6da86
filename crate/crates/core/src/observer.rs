//! Analytical quantities tracked over a trajectory: valid/small/big sets,
//! thresholds, minimum-big support, phase structure, stopping statistics,
//! and the consensus/validity verdict.
//!
//! All functions are pure and recomputable from any trace line, so every
//! value an experiment reports can be audited after the fact.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::opinion::{Configuration, OpinionId};

#[derive(Debug, Error, PartialEq)]
pub enum ObserverError {
    #[error("big set is empty")]
    EmptyBigSet,
    #[error("invalid thresholds: {0}")]
    BadThresholds(String),
}

/// Constants for the derived cutoffs. The small-opinion denominator is
/// `k^small_k_exponent * log(n)^small_log_exponent` with the logarithm taken
/// in `log_base`; the defaults give `gamma * sqrt(n) / (k^{3/2} ln n)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    /// Small-opinion constant.
    pub gamma: f64,
    /// Bias constant in the adversarial expectation bound.
    pub alpha_bias: f64,
    /// Almost-consensus slack: residual at most `c_stop * sqrt(n)`.
    pub c_stop: f64,
    /// Base of the logarithm in the small-opinion denominator.
    pub log_base: f64,
    /// Exponent of `k` in the small-opinion denominator.
    pub small_k_exponent: f64,
    /// Exponent of `log n` in the small-opinion denominator.
    pub small_log_exponent: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            gamma: 1.0,
            alpha_bias: 1.0,
            c_stop: 3.0,
            log_base: std::f64::consts::E,
            small_k_exponent: 1.5,
            small_log_exponent: 1.0,
        }
    }
}

impl Thresholds {
    pub fn validate(&self) -> Result<(), ObserverError> {
        let positive = [
            ("gamma", self.gamma),
            ("alpha_bias", self.alpha_bias),
            ("c_stop", self.c_stop),
            ("small_k_exponent", self.small_k_exponent),
            ("small_log_exponent", self.small_log_exponent),
        ];
        for (name, v) in positive {
            if !v.is_finite() || v <= 0.0 {
                return Err(ObserverError::BadThresholds(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if !self.log_base.is_finite() || self.log_base <= 1.0 {
            return Err(ObserverError::BadThresholds(format!(
                "log_base must exceed 1, got {}",
                self.log_base
            )));
        }
        Ok(())
    }

    /// The small-opinion set only stays closed under the dynamics when
    /// `gamma` exceeds the adversary's drift constant `beta`.
    pub fn gamma_beta_warning(&self, beta: f64) -> Option<String> {
        (self.gamma <= beta).then(|| {
            format!(
                "gamma = {} does not exceed adversary beta = {}; \
                 small-opinion monotonicity is not guaranteed",
                self.gamma, beta
            )
        })
    }

    fn log(&self, x: f64) -> f64 {
        x.ln() / self.log_base.ln()
    }
}

/// Opinions supported by at least one node in the round-0 configuration,
/// before any adversary action. Immutable for the whole run.
pub fn valid_set(initial: &Configuration) -> BTreeSet<OpinionId> {
    initial.active_ids().collect()
}

/// `n/j - sqrt(j * n * ln n)`: the support level whose first crossing ends
/// the symmetry-breaking stage. May be non-positive, in which case callers
/// must treat the regime as too small for the phase analysis.
pub fn symmetry_break_threshold(n: u64, j: u32) -> f64 {
    let nf = n as f64;
    let jf = f64::from(j);
    nf / jf - (jf * nf * nf.ln()).sqrt()
}

/// Small-opinion cutoff `gamma * sqrt(n) / (k^{3/2} log n)` (defaults),
/// where `k` is the valid-opinion count.
pub fn small_threshold(n: u64, k: u32, th: &Thresholds) -> f64 {
    let nf = n as f64;
    let denom =
        f64::from(k).powf(th.small_k_exponent) * th.log(nf).powf(th.small_log_exponent);
    th.gamma * nf.sqrt() / denom
}

/// Splits the active opinions into small (support at or below the cutoff)
/// and big (the rest). Exhaustive and exclusive by construction.
pub fn partition_small_big(
    c: &Configuration,
    valid: &BTreeSet<OpinionId>,
    th: &Thresholds,
) -> (BTreeSet<OpinionId>, BTreeSet<OpinionId>) {
    let cutoff = small_threshold(c.population(), valid.len() as u32, th);
    let mut small = BTreeSet::new();
    let mut big = BTreeSet::new();
    for (id, count) in c.iter() {
        if (count as f64) <= cutoff {
            small.insert(id);
        } else {
            big.insert(id);
        }
    }
    (small, big)
}

/// Minimum-support opinion among `big`; ties broken by lowest id.
pub fn min_big_support(
    c: &Configuration,
    big: &BTreeSet<OpinionId>,
) -> Result<(OpinionId, u64), ObserverError> {
    big.iter()
        .map(|&id| (id, c.support(id)))
        .min_by(|a, b| a.1.cmp(&b.1).then(a.0.cmp(&b.0)))
        .ok_or(ObserverError::EmptyBigSet)
}

/// The tracked potential `floor(n/j) - min_big_support`.
pub fn y_value(
    c: &Configuration,
    big: &BTreeSet<OpinionId>,
    j: u32,
) -> Result<i64, ObserverError> {
    let (_, min_support) = min_big_support(c, big)?;
    Ok((c.population() / u64::from(j)) as i64 - min_support as i64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TerminalKind {
    StrictConsensus,
    AlmostConsensus,
    MaxRoundsExceeded,
}

impl fmt::Display for TerminalKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TerminalKind::StrictConsensus => "strict-consensus",
            TerminalKind::AlmostConsensus => "almost-consensus",
            TerminalKind::MaxRoundsExceeded => "max-rounds-exceeded",
        };
        f.write_str(s)
    }
}

/// Verdict fragment produced when a configuration qualifies as terminal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TerminalClassification {
    pub kind: TerminalKind,
    pub winner: OpinionId,
    pub winner_valid: bool,
    /// Nodes not holding the winner opinion.
    pub residual: u64,
}

/// Strict consensus when one opinion remains; almost-consensus when the
/// leader covers all but `c_stop * sqrt(n)` nodes. Winner ties break to the
/// lowest id. Returns `None` while the run should continue.
pub fn classify_terminal(
    c: &Configuration,
    valid: &BTreeSet<OpinionId>,
    th: &Thresholds,
) -> Option<TerminalClassification> {
    let (winner, support) = c.max_support();
    let residual = c.population() - support;
    let kind = if c.is_consensus() {
        TerminalKind::StrictConsensus
    } else if residual as f64 <= th.c_stop * (c.population() as f64).sqrt() {
        TerminalKind::AlmostConsensus
    } else {
        return None;
    };
    Some(TerminalClassification {
        kind,
        winner,
        winner_valid: valid.contains(&winner),
        residual,
    })
}

/// A violation of the small-opinion closure hypothesis.
#[derive(Debug, Clone, PartialEq)]
pub enum HypHViolation {
    /// A valid opinion that had been small (or extinct) re-entered the big set.
    SmallValidBecameBig {
        round: u64,
        opinion: OpinionId,
        support: u64,
        threshold: f64,
    },
    /// Total support of non-valid opinions exceeded the small cutoff.
    NonValidMassExceeded {
        round: u64,
        mass: u64,
        threshold: f64,
    },
}

impl HypHViolation {
    pub fn round(&self) -> u64 {
        match self {
            HypHViolation::SmallValidBecameBig { round, .. }
            | HypHViolation::NonValidMassExceeded { round, .. } => *round,
        }
    }
}

impl fmt::Display for HypHViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HypHViolation::SmallValidBecameBig {
                round,
                opinion,
                support,
                threshold,
            } => write!(
                f,
                "round {round}: small valid opinion {opinion} became big \
                 (support {support} > {threshold:.3})"
            ),
            HypHViolation::NonValidMassExceeded {
                round,
                mass,
                threshold,
            } => write!(
                f,
                "round {round}: non-valid mass {mass} exceeded small cutoff {threshold:.3}"
            ),
        }
    }
}

/// Scans a trajectory of post-adversary configurations and reports every
/// round where (a) a valid opinion that was ever small (or extinct) shows up
/// big, or (b) the total non-valid support exceeds the small cutoff.
pub fn monitor_hyp_h(
    trajectory: &[Configuration],
    valid: &BTreeSet<OpinionId>,
    th: &Thresholds,
) -> Vec<HypHViolation> {
    let mut events = Vec::new();
    let Some(first) = trajectory.first() else {
        return events;
    };
    let cutoff = small_threshold(first.population(), valid.len() as u32, th);
    let mut ever_small: BTreeSet<OpinionId> = BTreeSet::new();

    for (t, cfg) in trajectory.iter().enumerate() {
        let round = t as u64;
        let (small, big) = partition_small_big(cfg, valid, th);

        for &id in valid {
            if ever_small.contains(&id) && big.contains(&id) {
                events.push(HypHViolation::SmallValidBecameBig {
                    round,
                    opinion: id,
                    support: cfg.support(id),
                    threshold: cutoff,
                });
            }
        }

        let nonvalid_mass: u64 = cfg
            .iter()
            .filter(|(id, _)| !valid.contains(id))
            .map(|(_, count)| count)
            .sum();
        if nonvalid_mass as f64 > cutoff {
            events.push(HypHViolation::NonValidMassExceeded {
                round,
                mass: nonvalid_mass,
                threshold: cutoff,
            });
        }

        // Valid opinions currently small or extinct join the closed set.
        for &id in valid {
            if small.contains(&id) || !cfg.is_active(id) {
                ever_small.insert(id);
            }
        }
    }
    events
}

/// How the phase index `j` is computed: over all active opinions (the
/// adversary-free analysis) or over the big set only (the adversarial one).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseJMode {
    ActiveSet,
    BigSet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseStage {
    SymmetryBreaking,
    Dropping,
}

/// One phase of the process: an interval of rounds with a constant number
/// of tracked opinions `j`. All round indices are absolute.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseRecord {
    pub j: u32,
    pub entered_at: u64,
    pub ended_at: Option<u64>,
    /// Set when `symmetry_break_threshold(n, j) <= 0`; such phases carry no
    /// meaningful break statistics.
    pub regime_too_small: bool,
    /// First round the minimum tracked support reached the break threshold.
    pub tau_break: Option<u64>,
    /// The opinion that crossed at `tau_break`.
    pub dropping_opinion: Option<OpinionId>,
    /// First round the dropping opinion fell to `j^2 ln n`.
    pub tau_intermediate: Option<u64>,
    /// First round the dropping opinion fell to `n / (2j)`.
    pub tau_half: Option<u64>,
    /// First round the dropping opinion left the tracked set (big mode) or
    /// reached support zero (active mode).
    pub tau_drop: Option<u64>,
}

impl PhaseRecord {
    fn new(j: u32, entered_at: u64, n: u64) -> Self {
        PhaseRecord {
            j,
            entered_at,
            ended_at: None,
            regime_too_small: symmetry_break_threshold(n, j) <= 0.0,
            tau_break: None,
            dropping_opinion: None,
            tau_intermediate: None,
            tau_half: None,
            tau_drop: None,
        }
    }

    pub fn stage(&self) -> PhaseStage {
        if self.tau_break.is_some() {
            PhaseStage::Dropping
        } else {
            PhaseStage::SymmetryBreaking
        }
    }
}

/// Segments a trajectory into phases (one per distinct `j >= 2`, reopened
/// whenever `j` changes) and records the symmetry-break and dropping
/// timestamps inside each.
pub fn track_phases(
    trajectory: &[Configuration],
    valid: &BTreeSet<OpinionId>,
    th: &Thresholds,
    mode: PhaseJMode,
) -> Vec<PhaseRecord> {
    let mut phases: Vec<PhaseRecord> = Vec::new();
    let mut current: Option<PhaseRecord> = None;

    for (t, cfg) in trajectory.iter().enumerate() {
        let round = t as u64;
        let n = cfg.population();
        let tracked: BTreeSet<OpinionId> = match mode {
            PhaseJMode::ActiveSet => cfg.active_ids().collect(),
            PhaseJMode::BigSet => partition_small_big(cfg, valid, th).1,
        };
        let j = tracked.len() as u32;

        // Update the open phase against this round before deciding whether
        // it closes, so drop timestamps land in the phase that owns them.
        if let Some(phase) = current.as_mut() {
            if let Some(op) = phase.dropping_opinion {
                let support = cfg.support(op);
                let jf = f64::from(phase.j);
                let nf = n as f64;
                if phase.tau_intermediate.is_none()
                    && (support as f64) <= jf * jf * nf.ln()
                {
                    phase.tau_intermediate = Some(round);
                }
                if phase.tau_half.is_none() && (support as f64) <= nf / (2.0 * jf) {
                    phase.tau_half = Some(round);
                }
                let dropped = match mode {
                    PhaseJMode::ActiveSet => support == 0,
                    PhaseJMode::BigSet => !tracked.contains(&op),
                };
                if phase.tau_drop.is_none() && dropped {
                    phase.tau_drop = Some(round);
                }
            }
        }

        let j_changed = current.as_ref().is_some_and(|p| p.j != j);
        if j_changed || (current.is_none() && j >= 2) {
            if let Some(mut done) = current.take() {
                done.ended_at = Some(round);
                phases.push(done);
            }
            if j >= 2 {
                current = Some(PhaseRecord::new(j, round, n));
            }
        } else if j < 2 {
            if let Some(mut done) = current.take() {
                done.ended_at = Some(round);
                phases.push(done);
            }
        }

        if let Some(phase) = current.as_mut() {
            if phase.tau_break.is_none() && !phase.regime_too_small {
                if let Ok((op, support)) = min_big_support(cfg, &tracked) {
                    if (support as f64) <= symmetry_break_threshold(n, phase.j) {
                        phase.tau_break = Some(round);
                        phase.dropping_opinion = Some(op);
                    }
                }
            }
        }
    }

    if let Some(done) = current.take() {
        phases.push(done);
    }
    phases
}

/// Full verdict of one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    /// Rounds elapsed when the run stopped (0 when the initial configuration
    /// is already terminal).
    pub rounds: u64,
    pub terminal: TerminalKind,
    /// Absent when the run was cut off at the round budget.
    pub winner: Option<OpinionId>,
    pub winner_valid: bool,
    /// Nodes not holding the leading opinion at the final round.
    pub residual: u64,
    pub violations: Vec<HypHViolation>,
    pub phases: Vec<PhaseRecord>,
    /// First round the adversary's target opinion had zero support after
    /// having been active, when a non-valid target was in play.
    pub adversary_target_extinction: Option<u64>,
}

/// Adversarial expectation bound
/// `c_i * (1 - 1/j + (c_i + alpha_bias * sqrt(n/k)) / n)` for a big opinion
/// `i` in a configuration whose non-valid mass is within the small cutoff.
pub fn adv_expected_upper_bound(
    c: &Configuration,
    i: OpinionId,
    j: u32,
    k: u32,
    th: &Thresholds,
) -> Result<f64, ObserverError> {
    if c.support(i) == 0 {
        return Err(ObserverError::EmptyBigSet);
    }
    let n = c.population() as f64;
    let ci = c.support(i) as f64;
    let bias = th.alpha_bias * (n / f64::from(k)).sqrt();
    Ok(ci * (1.0 - 1.0 / f64::from(j) + (ci + bias) / n))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(parts: &[(u32, u64)]) -> Configuration {
        Configuration::from_supports(parts.iter().map(|&(id, c)| (OpinionId(id), c))).unwrap()
    }

    fn ids(list: &[u32]) -> BTreeSet<OpinionId> {
        list.iter().map(|&i| OpinionId(i)).collect()
    }

    #[test]
    fn valid_set_is_the_initial_active_set() {
        assert_eq!(valid_set(&cfg(&[(0, 5), (1, 5)])), ids(&[0, 1]));
        assert_eq!(valid_set(&cfg(&[(0, 10)])), ids(&[0]));
    }

    #[test]
    fn symmetry_break_threshold_values() {
        assert!((symmetry_break_threshold(10_000, 2) - 4570.8068).abs() < 1e-3);
        assert!((symmetry_break_threshold(10_000, 3) - 2807.6811).abs() < 1e-3);
        assert!(symmetry_break_threshold(100, 10) < 0.0);
    }

    #[test]
    fn small_threshold_values() {
        let th = Thresholds::default();
        assert!((small_threshold(1_000_000, 3, &th) - 13.9300).abs() < 1e-3);
        assert!((small_threshold(1_000_000, 1, &th) - 72.3824).abs() < 1e-3);
    }

    #[test]
    fn thresholds_validation_rejects_nonpositive_constants() {
        let th = Thresholds {
            gamma: 0.0,
            ..Thresholds::default()
        };
        assert!(th.validate().is_err());
        let th = Thresholds {
            log_base: 1.0,
            ..Thresholds::default()
        };
        assert!(th.validate().is_err());
        assert!(Thresholds::default().validate().is_ok());
    }

    #[test]
    fn gamma_beta_warning_fires_only_when_needed() {
        let th = Thresholds::default();
        assert!(th.gamma_beta_warning(2.0).is_some());
        assert!(th.gamma_beta_warning(0.5).is_none());
    }

    #[test]
    fn partition_keeps_barely_big_opinions_big() {
        let th = Thresholds::default();
        let c = cfg(&[(0, 999_000), (1, 986), (2, 14)]);
        let (small, big) = partition_small_big(&c, &ids(&[0, 1, 2]), &th);
        assert!(small.is_empty());
        assert_eq!(big, ids(&[0, 1, 2]));
    }

    #[test]
    fn partition_is_exhaustive_and_exclusive() {
        let th = Thresholds::default();
        let c = cfg(&[(0, 999_000), (1, 987), (2, 13)]);
        let valid = ids(&[0, 1, 2]);
        let (small, big) = partition_small_big(&c, &valid, &th);
        assert!(small.is_disjoint(&big));
        let union: BTreeSet<_> = small.union(&big).copied().collect();
        assert_eq!(union, c.active_ids().collect());
        assert_eq!(small, ids(&[2]));
    }

    #[test]
    fn min_big_support_breaks_ties_by_lowest_id() {
        let c = cfg(&[(0, 3), (1, 3), (2, 4)]);
        let all = ids(&[0, 1, 2]);
        assert_eq!(min_big_support(&c, &all).unwrap(), (OpinionId(0), 3));
        assert_eq!(
            min_big_support(&c, &BTreeSet::new()),
            Err(ObserverError::EmptyBigSet)
        );
        assert_eq!(
            min_big_support(&c, &ids(&[2])).unwrap(),
            (OpinionId(2), 4)
        );
    }

    #[test]
    fn y_value_examples() {
        let c = cfg(&[(0, 5), (1, 3), (2, 2)]);
        assert_eq!(y_value(&c, &ids(&[0, 1, 2]), 3).unwrap(), 1);
        let consensus = cfg(&[(0, 10)]);
        assert_eq!(y_value(&consensus, &ids(&[0]), 1).unwrap(), 0);
    }

    #[test]
    fn classify_terminal_examples() {
        let th = Thresholds::default();
        let valid = ids(&[0, 1]);

        let strict = classify_terminal(&cfg(&[(0, 10)]), &valid, &th).unwrap();
        assert_eq!(strict.kind, TerminalKind::StrictConsensus);
        assert_eq!(strict.winner, OpinionId(0));
        assert_eq!(strict.residual, 0);
        assert!(strict.winner_valid);

        let almost =
            classify_terminal(&cfg(&[(0, 999_990), (7, 10)]), &valid, &th).unwrap();
        assert_eq!(almost.kind, TerminalKind::AlmostConsensus);
        assert_eq!(almost.winner, OpinionId(0));
        assert_eq!(almost.residual, 10);

        assert!(classify_terminal(&cfg(&[(0, 500_000), (1, 500_000)]), &valid, &th).is_none());
    }

    #[test]
    fn classify_terminal_is_monotone_in_c_stop() {
        let valid = ids(&[0, 1]);
        let c = cfg(&[(0, 9_800), (1, 200)]);
        let tight = Thresholds {
            c_stop: 1.0,
            ..Thresholds::default()
        };
        let loose = Thresholds {
            c_stop: 3.0,
            ..Thresholds::default()
        };
        assert!(classify_terminal(&c, &valid, &tight).is_none());
        let loose_verdict = classify_terminal(&c, &valid, &loose).unwrap();
        assert_eq!(loose_verdict.kind, TerminalKind::AlmostConsensus);
    }

    #[test]
    fn monitor_hyp_h_flags_small_to_big_transition() {
        let th = Thresholds::default();
        let valid = ids(&[0, 1]);
        // Cutoff for n = 1e6, k = 2: gamma sqrt(n) / (2^1.5 ln n) = 25.59.
        let trajectory = vec![
            cfg(&[(0, 999_980), (1, 20)]),
            cfg(&[(0, 999_800), (1, 200)]),
        ];
        let events = monitor_hyp_h(&trajectory, &valid, &th);
        assert_eq!(events.len(), 1);
        match &events[0] {
            HypHViolation::SmallValidBecameBig { round, opinion, .. } => {
                assert_eq!(*round, 1);
                assert_eq!(*opinion, OpinionId(1));
            }
            other => panic!("unexpected event {other:?}"),
        }
    }

    #[test]
    fn monitor_hyp_h_flags_nonvalid_mass() {
        let th = Thresholds::default();
        let valid = ids(&[0]);
        let trajectory = vec![cfg(&[(0, 999_000), (9, 1000)])];
        let events = monitor_hyp_h(&trajectory, &valid, &th);
        assert_eq!(events.len(), 1);
        assert!(matches!(
            events[0],
            HypHViolation::NonValidMassExceeded { round: 0, mass: 1000, .. }
        ));
    }

    #[test]
    fn monitor_hyp_h_empty_trajectory() {
        let th = Thresholds::default();
        assert!(monitor_hyp_h(&[], &ids(&[0]), &th).is_empty());
    }

    #[test]
    fn track_phases_consensus_start_is_empty() {
        let th = Thresholds::default();
        let trajectory = vec![cfg(&[(0, 100)]), cfg(&[(0, 100)])];
        let phases = track_phases(&trajectory, &ids(&[0]), &th, PhaseJMode::ActiveSet);
        assert!(phases.is_empty());
    }

    #[test]
    fn track_phases_records_break_round() {
        let th = Thresholds::default();
        let valid = ids(&[0, 1, 2]);
        let n = 10_000u64;
        // j = 3 threshold is 2807.68; inject a crossing at round 7.
        let mut trajectory: Vec<Configuration> = (0..7)
            .map(|_| cfg(&[(0, 3334), (1, 3333), (2, 3333)]))
            .collect();
        trajectory.push(cfg(&[(0, 3700), (1, 3500), (2, 2800)]));
        let phases = track_phases(&trajectory, &valid, &th, PhaseJMode::ActiveSet);
        assert_eq!(phases.len(), 1);
        assert_eq!(phases[0].j, 3);
        assert_eq!(phases[0].entered_at, 0);
        assert_eq!(phases[0].tau_break, Some(7));
        assert_eq!(phases[0].dropping_opinion, Some(OpinionId(2)));
        assert!(!phases[0].regime_too_small);
        assert_eq!(phases[0].stage(), PhaseStage::Dropping);
        let _ = n;
    }

    #[test]
    fn track_phases_two_opinion_run_has_one_phase() {
        let th = Thresholds::default();
        let valid = ids(&[0, 1]);
        let trajectory = vec![
            cfg(&[(0, 5000), (1, 5000)]),
            cfg(&[(0, 5600), (1, 4400)]),
            cfg(&[(0, 9990), (1, 10)]),
            cfg(&[(0, 10_000)]),
        ];
        let phases = track_phases(&trajectory, &valid, &th, PhaseJMode::ActiveSet);
        assert_eq!(phases.len(), 1);
        assert_eq!(phases[0].j, 2);
        assert_eq!(phases[0].tau_break, Some(1));
        assert_eq!(phases[0].dropping_opinion, Some(OpinionId(1)));
        assert_eq!(phases[0].tau_drop, Some(3));
        assert_eq!(phases[0].ended_at, Some(3));
    }

    #[test]
    fn regime_too_small_is_labelled() {
        let th = Thresholds::default();
        let valid = ids(&[0, 1, 2, 3, 4, 5, 6, 7, 8, 9]);
        let trajectory = vec![Configuration::uniform(100, 10).unwrap()];
        let phases = track_phases(&trajectory, &valid, &th, PhaseJMode::ActiveSet);
        assert_eq!(phases.len(), 1);
        assert!(phases[0].regime_too_small);
        assert_eq!(phases[0].tau_break, None);
    }

    #[test]
    fn adv_upper_bound_dominates_expectation_in_regime() {
        use crate::dynamics::expected_next;
        let th = Thresholds::default();
        // Three big valid opinions plus a small non-valid one.
        let c = cfg(&[(0, 333_330), (1, 333_330), (2, 333_330), (9, 10)]);
        let exact = expected_next(&c);
        for id in [0u32, 1, 2] {
            let bound = adv_expected_upper_bound(&c, OpinionId(id), 3, 3, &th).unwrap();
            assert!(
                bound >= exact[&OpinionId(id)],
                "bound {bound} < exact {}",
                exact[&OpinionId(id)]
            );
        }
    }
}
