//! Experiment orchestration: declarative sweep specs, deterministic per-trial
//! seeding, parallel execution, and CSV/JSON result emission.
//!
//! A sweep is a pure function of its spec file: per-trial RNGs are derived
//! from `(master seed, cell index, trial index)`, aggregation is
//! order-independent, and reruns yield byte-identical outputs (modulo the
//! timestamp comment at the top of the CSV).

mod config;
mod output;

pub use config::{
    load_spec_file, parse_adversary_kind, parse_engine, parse_spec_toml, parse_stop,
    parse_tie_break, AdversaryConfig, BudgetSpec, Engine, ExperimentSpec, InitialSpec,
    OutputSpec, StopRule,
};
pub use output::{
    aggregate_mean, fit_scaling, read_rows_csv, write_rows_csv, write_summary_json, FitResult,
};

use rayon::prelude::*;
use thiserror::Error;

use crate::adversary::{
    apply, propose, AdversaryError, AdversaryKind, AdversarySpec, History,
};
use crate::dynamics::{step_multinomial, step_node_level};
use crate::observer::{
    classify_terminal, monitor_hyp_h, track_phases, valid_set, ObserverError, PhaseJMode,
    RunOutcome, TerminalClassification, TerminalKind, Thresholds,
};
use crate::opinion::{ConfigError, Configuration, NodeAssignment, OpinionId};
use crate::rng::seed_for;
use crate::trace::RoundRecord;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid experiment spec: {0}")]
    Spec(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Adversary(#[from] AdversaryError),
    #[error(transparent)]
    Observer(#[from] ObserverError),
    #[error("need at least {needed} distinct x values, got {got}")]
    InsufficientPoints { needed: usize, got: usize },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

/// Node-level engine guard: beyond this population the O(n) engine is
/// rejected up front.
pub const NODE_LEVEL_MAX_POPULATION: u64 = 1_000_000;

/// One grid point of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Cell {
    pub index: u64,
    pub n: u64,
    pub k: u32,
}

impl ExperimentSpec {
    /// Row-major cartesian product of the `n` and `k` grids.
    pub fn cells(&self) -> Vec<Cell> {
        let mut cells = Vec::with_capacity(self.grid_n.len() * self.grid_k.len());
        let mut index = 0;
        for &n in &self.grid_n {
            for &k in &self.grid_k {
                cells.push(Cell { index, n, k });
                index += 1;
            }
        }
        cells
    }

    /// Default round budget: 50x the theoretical convergence-bound shape
    /// `(k^2 sqrt(ln n) + k ln n)(k + ln n)`, so censoring signals a real
    /// anomaly rather than an optimistic cap.
    pub fn default_max_rounds(n: u64, k: u32) -> u64 {
        let ln_n = (n as f64).ln().max(1.0);
        let kf = f64::from(k);
        let shape = (kf * kf * ln_n.sqrt() + kf * ln_n) * (kf + ln_n);
        (50.0 * shape).ceil() as u64
    }

    pub fn max_rounds_for(&self, cell: &Cell) -> u64 {
        if self.max_rounds > 0 {
            self.max_rounds
        } else {
            Self::default_max_rounds(cell.n, cell.k)
        }
    }

    /// Initial configuration of a cell.
    pub fn initial_for(&self, cell: &Cell) -> Result<Configuration, HarnessError> {
        match &self.initial {
            InitialSpec::Uniform => Ok(Configuration::uniform(cell.n, cell.k)?),
            InitialSpec::Explicit(text) => {
                let cfg: Configuration = text
                    .parse()
                    .map_err(|e: ConfigError| HarnessError::Spec(e.to_string()))?;
                if cfg.population() != cell.n {
                    return Err(HarnessError::Spec(format!(
                        "explicit initial has n = {}, cell expects {}",
                        cfg.population(),
                        cell.n
                    )));
                }
                if cfg.active_count() as u32 != cell.k {
                    return Err(HarnessError::Spec(format!(
                        "explicit initial has {} opinions, cell expects {}",
                        cfg.active_count(),
                        cell.k
                    )));
                }
                Ok(cfg)
            }
            InitialSpec::Biased { gap } => biased_initial(cell.n, cell.k, *gap),
        }
    }

    /// Concrete adversary for a cell, with formula budgets resolved.
    pub fn adversary_for(&self, cell: &Cell) -> Result<AdversarySpec, HarnessError> {
        let budget = match self.adversary.budget {
            BudgetSpec::Explicit(f) => f,
            BudgetSpec::StaticFormula => crate::adversary::f_static_bound(cell.n, cell.k)?,
            BudgetSpec::DynamicFormula { beta } => {
                crate::adversary::f_dynamic_bound(cell.n, cell.k, beta)
            }
        };
        Ok(AdversarySpec {
            kind: self.adversary.kind,
            budget,
            target: self.adversary.target.map(OpinionId),
            sustain_level: self.adversary.sustain_level,
            thresholds: self.thresholds,
        })
    }

    /// Effective stopping rule: strict consensus for the Null adversary,
    /// almost-consensus otherwise, unless overridden.
    pub fn stop_rule(&self) -> StopRule {
        match self.stop {
            StopRule::Auto => {
                if self.adversary.kind == AdversaryKind::Null {
                    StopRule::Strict
                } else {
                    StopRule::Almost
                }
            }
            other => other,
        }
    }

    /// Structural validation plus advisory warnings (returned, not fatal).
    pub fn validate(&self) -> Result<Vec<String>, HarnessError> {
        if self.trials < 1 {
            return Err(HarnessError::Spec("trials must be at least 1".into()));
        }
        if self.grid_n.is_empty() || self.grid_k.is_empty() {
            return Err(HarnessError::Spec("grid must be non-empty".into()));
        }
        self.thresholds.validate()?;
        let mut warnings = Vec::new();
        for cell in self.cells() {
            if self.engine == Engine::NodeLevel && cell.n > NODE_LEVEL_MAX_POPULATION {
                return Err(HarnessError::Spec(format!(
                    "node-level engine rejected for n = {} > {}",
                    cell.n, NODE_LEVEL_MAX_POPULATION
                )));
            }
            if u64::from(cell.k) > cell.n {
                return Err(HarnessError::Spec(format!(
                    "cell n = {} cannot host k = {} opinions",
                    cell.n, cell.k
                )));
            }
            self.initial_for(&cell)?;
            let adv = self.adversary_for(&cell)?;
            if adv.kind != AdversaryKind::Null {
                if let Some(w) = self.thresholds.gamma_beta_warning(beta_of(&self.adversary)) {
                    warnings.push(format!("cell {}: {w}", cell.index));
                }
            }
        }
        Ok(warnings)
    }
}

fn beta_of(adv: &AdversaryConfig) -> f64 {
    match adv.budget {
        BudgetSpec::DynamicFormula { beta } => beta,
        _ => 0.0,
    }
}

/// Uniform apportionment with `gap` extra nodes moved onto opinion 0, drawn
/// evenly from the other opinions.
fn biased_initial(n: u64, k: u32, gap: u64) -> Result<Configuration, HarnessError> {
    let uniform = Configuration::uniform(n, k)?;
    if k < 2 || gap == 0 {
        return Ok(uniform);
    }
    let per_other = gap / u64::from(k - 1);
    let mut extra = gap % u64::from(k - 1);
    let mut supports = Vec::with_capacity(k as usize);
    for (id, count) in uniform.iter() {
        if id == OpinionId(0) {
            supports.push((id, count + gap));
        } else {
            let take = per_other + u64::from(extra > 0);
            extra = extra.saturating_sub(1);
            if take >= count {
                return Err(HarnessError::Spec(format!(
                    "bias gap {gap} exhausts opinion {id} (support {count})"
                )));
            }
            supports.push((id, count - take));
        }
    }
    Ok(Configuration::from_supports(supports)?)
}

/// Result of one trial: the verdict plus an optional full trace.
#[derive(Debug, Clone)]
pub struct TrialResult {
    pub outcome: RunOutcome,
    pub trace: Option<Vec<RoundRecord>>,
}

/// Runs a single trial of `cell`, deterministically in
/// `(spec.seed, cell.index, trial_index)`.
///
/// Round loop order: dynamics update (all nodes simultaneously), adversary
/// displacement, observers, terminal check. Round 0 is the fixed initial
/// configuration followed by the adversary's first action.
pub fn run_trial(
    spec: &ExperimentSpec,
    cell: &Cell,
    trial_index: u64,
    with_trace: bool,
) -> Result<TrialResult, HarnessError> {
    let initial = spec.initial_for(cell)?;
    let adversary = spec.adversary_for(cell)?;
    let max_rounds = spec.max_rounds_for(cell);
    let stop_rule = spec.stop_rule();
    let th = &spec.thresholds;

    let mut rng = seed_for(spec.seed, cell.index, trial_index);
    let valid = valid_set(&initial);
    let mut history = History::new();

    // Round 0: the initial configuration is fixed, then the adversary acts.
    let d0 = propose(&adversary, &history, &initial, &mut rng);
    let post0 = apply(&initial, &d0, adversary.budget)?;
    let mut assignment = (spec.engine == Engine::NodeLevel)
        .then(|| NodeAssignment::from_configuration(&post0));
    history.push(initial.clone(), post0.clone());

    let mut rounds = 0u64;
    let mut terminal = stop_classification(&post0, &valid, th, stop_rule);
    let mut current = post0;

    while terminal.is_none() && rounds < max_rounds {
        let pre = match assignment.as_mut() {
            None => step_multinomial(&current, &mut rng),
            Some(nodes) => {
                *nodes = step_node_level(nodes, spec.tie_break, &mut rng);
                nodes.to_configuration()
            }
        };
        let d = propose(&adversary, &history, &pre, &mut rng);
        let post = apply(&pre, &d, adversary.budget)?;
        if let Some(nodes) = assignment.as_mut() {
            apply_to_nodes(nodes, &d);
        }
        history.push(pre, post.clone());
        rounds += 1;
        terminal = stop_classification(&post, &valid, th, stop_rule);
        current = post;
    }

    let posts: Vec<Configuration> = history.iter().map(|(_, post)| post.clone()).collect();
    let violations = monitor_hyp_h(&posts, &valid, th);
    let j_mode = if adversary.kind == AdversaryKind::Null {
        PhaseJMode::ActiveSet
    } else {
        PhaseJMode::BigSet
    };
    let phases = track_phases(&posts, &valid, th, j_mode);

    let adversary_target_extinction = adversary
        .target
        .filter(|t| !valid.contains(t))
        .and_then(|t| {
            let mut seen_active = false;
            for (round, cfg) in posts.iter().enumerate() {
                if cfg.is_active(t) {
                    seen_active = true;
                } else if seen_active {
                    return Some(round as u64);
                }
            }
            None
        });

    let (final_kind, winner, winner_valid, residual) = match terminal {
        Some(tc) => (tc.kind, Some(tc.winner), tc.winner_valid, tc.residual),
        None => {
            let (leader, support) = current.max_support();
            let _ = leader;
            (
                TerminalKind::MaxRoundsExceeded,
                None,
                false,
                current.population() - support,
            )
        }
    };

    let outcome = RunOutcome {
        rounds,
        terminal: final_kind,
        winner,
        winner_valid,
        residual,
        violations,
        phases,
        adversary_target_extinction,
    };

    let trace = with_trace.then(|| build_trace(&history, &outcome));
    Ok(TrialResult { outcome, trace })
}

fn stop_classification(
    c: &Configuration,
    valid: &std::collections::BTreeSet<OpinionId>,
    th: &Thresholds,
    rule: StopRule,
) -> Option<TerminalClassification> {
    let tc = classify_terminal(c, valid, th)?;
    match rule {
        StopRule::Strict if tc.kind != TerminalKind::StrictConsensus => None,
        _ => Some(tc),
    }
}

/// Mirrors a displacement onto node-level state: for each drained opinion,
/// nodes are reassigned in scan order, deterministically.
fn apply_to_nodes(nodes: &mut NodeAssignment, d: &crate::adversary::Displacement) {
    if d.is_zero() {
        return;
    }
    let mut additions: std::collections::VecDeque<(OpinionId, u64)> = d
        .iter()
        .filter(|&(_, delta)| delta > 0)
        .map(|(id, delta)| (id, delta as u64))
        .collect();
    let removals: Vec<(OpinionId, u64)> = d
        .iter()
        .filter(|&(_, delta)| delta < 0)
        .map(|(id, delta)| (id, delta.unsigned_abs()))
        .collect();
    let slots = nodes.opinions_mut();
    for (source, mut count) in removals {
        for slot in slots.iter_mut() {
            if count == 0 {
                break;
            }
            if *slot == source {
                let Some(front) = additions.front_mut() else {
                    return;
                };
                *slot = front.0;
                front.1 -= 1;
                if front.1 == 0 {
                    additions.pop_front();
                }
                count -= 1;
            }
        }
    }
}

fn build_trace(history: &History, outcome: &RunOutcome) -> Vec<RoundRecord> {
    let mut records: Vec<RoundRecord> = history
        .iter()
        .enumerate()
        .map(|(round, (pre, post))| {
            let mut record = RoundRecord::new(round as u64, pre, post);
            if pre != post {
                record.events.push("adversary-displacement".to_string());
            }
            record
        })
        .collect();
    for violation in &outcome.violations {
        let round = violation.round() as usize;
        if let Some(record) = records.get_mut(round) {
            record.events.push(violation.to_string());
        }
    }
    for phase in &outcome.phases {
        if let Some(record) = records.get_mut(phase.entered_at as usize) {
            record.events.push(format!("phase-entered j={}", phase.j));
        }
        if let Some(tb) = phase.tau_break {
            if let Some(record) = records.get_mut(tb as usize) {
                record
                    .events
                    .push(format!("symmetry-break j={}", phase.j));
            }
        }
    }
    if let Some(last) = records.last_mut() {
        last.events.push(format!("terminal {}", outcome.terminal));
    }
    records
}

/// One CSV row of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRow {
    pub cell_id: u64,
    pub n: u64,
    pub k: u32,
    pub adversary: String,
    pub budget: u64,
    pub trial: u64,
    pub rounds: u64,
    pub terminal: String,
    pub winner: Option<u32>,
    pub winner_valid: bool,
    pub residual: u64,
    /// `j<j>:<round>` pairs joined by `;` for every phase that broke.
    pub tau_breaks: String,
    pub violations: u64,
}

/// Per-cell aggregate statistics, recomputable from the rows.
#[derive(Debug, Clone, PartialEq)]
pub struct CellAggregate {
    pub cell_id: u64,
    pub n: u64,
    pub k: u32,
    pub trials: u64,
    pub mean_rounds: Option<f64>,
    pub median_rounds: Option<f64>,
    pub consensus_rate: f64,
    pub strict_rate: f64,
    pub validity_rate: f64,
    pub mean_residual: f64,
    pub censored: u64,
    pub failed: u64,
    pub violation_total: u64,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub rows: Vec<TrialRow>,
    pub cells: Vec<CellAggregate>,
    pub warnings: Vec<String>,
    pub errors: Vec<String>,
}

impl SweepResult {
    /// Re-derives every aggregate from the rows and compares.
    pub fn verify_self_consistency(&self) -> Result<(), String> {
        let recomputed = aggregate_rows(&self.rows);
        if recomputed == self.cells {
            Ok(())
        } else {
            Err("aggregates do not match recomputation from rows".to_string())
        }
    }
}

fn outcome_to_row(spec: &ExperimentSpec, cell: &Cell, trial: u64, outcome: &RunOutcome) -> TrialRow {
    let budget = spec
        .adversary_for(cell)
        .map(|a| a.budget)
        .unwrap_or_default();
    let tau_breaks = outcome
        .phases
        .iter()
        .filter_map(|p| p.tau_break.map(|t| format!("j{}:{}", p.j, t)))
        .collect::<Vec<_>>()
        .join(";");
    TrialRow {
        cell_id: cell.index,
        n: cell.n,
        k: cell.k,
        adversary: spec.adversary.kind.as_str().to_string(),
        budget,
        trial,
        rounds: outcome.rounds,
        terminal: outcome.terminal.to_string(),
        winner: outcome.winner.map(|w| w.0),
        winner_valid: outcome.winner_valid,
        residual: outcome.residual,
        tau_breaks,
        violations: outcome.violations.len() as u64,
    }
}

fn failed_row(spec: &ExperimentSpec, cell: &Cell, trial: u64) -> TrialRow {
    TrialRow {
        cell_id: cell.index,
        n: cell.n,
        k: cell.k,
        adversary: spec.adversary.kind.as_str().to_string(),
        budget: 0,
        trial,
        rounds: 0,
        terminal: "trial-failed".to_string(),
        winner: None,
        winner_valid: false,
        residual: 0,
        tau_breaks: String::new(),
        violations: 0,
    }
}

fn aggregate_rows(rows: &[TrialRow]) -> Vec<CellAggregate> {
    let mut cells: Vec<CellAggregate> = Vec::new();
    let mut ids: Vec<u64> = rows.iter().map(|r| r.cell_id).collect();
    ids.sort_unstable();
    ids.dedup();
    for cell_id in ids {
        let group: Vec<&TrialRow> = rows.iter().filter(|r| r.cell_id == cell_id).collect();
        let trials = group.len() as u64;
        let mut completed: Vec<f64> = group
            .iter()
            .filter(|r| r.terminal == "strict-consensus" || r.terminal == "almost-consensus")
            .map(|r| r.rounds as f64)
            .collect();
        completed.sort_by(f64::total_cmp);
        let mean_rounds = (!completed.is_empty())
            .then(|| completed.iter().sum::<f64>() / completed.len() as f64);
        let median_rounds = (!completed.is_empty()).then(|| {
            let mid = completed.len() / 2;
            if completed.len() % 2 == 1 {
                completed[mid]
            } else {
                (completed[mid - 1] + completed[mid]) / 2.0
            }
        });
        let consensus = completed.len() as u64;
        let strict = group
            .iter()
            .filter(|r| r.terminal == "strict-consensus")
            .count() as u64;
        let valid = group.iter().filter(|r| r.winner_valid).count() as u64;
        let censored = group
            .iter()
            .filter(|r| r.terminal == "max-rounds-exceeded")
            .count() as u64;
        let failed = group
            .iter()
            .filter(|r| r.terminal == "trial-failed")
            .count() as u64;
        let first = group.first().expect("group is non-empty");
        cells.push(CellAggregate {
            cell_id,
            n: first.n,
            k: first.k,
            trials,
            mean_rounds,
            median_rounds,
            consensus_rate: consensus as f64 / trials as f64,
            strict_rate: strict as f64 / trials as f64,
            validity_rate: valid as f64 / trials as f64,
            mean_residual: group.iter().map(|r| r.residual as f64).sum::<f64>()
                / trials as f64,
            censored,
            failed,
            violation_total: group.iter().map(|r| r.violations).sum(),
        });
    }
    cells
}

/// Executes every cell x trial of the spec, optionally on a bounded rayon
/// pool, and writes the configured outputs. Execution order never affects
/// the result: rows are keyed by (cell, trial) and collected in order.
pub fn run_sweep(spec: &ExperimentSpec) -> Result<SweepResult, HarnessError> {
    let warnings = spec.validate()?;
    let cells = spec.cells();
    let jobs: Vec<(Cell, u64)> = cells
        .iter()
        .flat_map(|&cell| (0..spec.trials).map(move |t| (cell, t)))
        .collect();

    let execute = || {
        jobs.par_iter()
            .map(|&(cell, trial)| match run_trial(spec, &cell, trial, false) {
                Ok(result) => (outcome_to_row(spec, &cell, trial, &result.outcome), None),
                Err(err) => (
                    failed_row(spec, &cell, trial),
                    Some(format!(
                        "cell {} trial {trial}: {err}",
                        cell.index
                    )),
                ),
            })
            .collect::<Vec<_>>()
    };

    let outcomes = if spec.workers > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(spec.workers)
            .build()
            .map_err(|e| HarnessError::Spec(e.to_string()))?;
        pool.install(execute)
    } else {
        execute()
    };

    let mut rows = Vec::with_capacity(outcomes.len());
    let mut errors = Vec::new();
    for (row, err) in outcomes {
        rows.push(row);
        if let Some(e) = err {
            errors.push(e);
        }
    }

    let result = SweepResult {
        cells: aggregate_rows(&rows),
        rows,
        warnings,
        errors,
    };

    if let Some(path) = &spec.outputs.csv {
        write_rows_csv(path, &result.rows)?;
    }
    if let Some(path) = &spec.outputs.summary {
        write_summary_json(path, spec, &result)?;
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::TieBreakRule;

    fn base_spec() -> ExperimentSpec {
        ExperimentSpec {
            seed: 42,
            trials: 2,
            max_rounds: 0,
            engine: Engine::Multinomial,
            tie_break: TieBreakRule::FirstSample,
            stop: StopRule::Auto,
            workers: 0,
            grid_n: vec![1000],
            grid_k: vec![2],
            initial: InitialSpec::Uniform,
            adversary: AdversaryConfig::null(),
            thresholds: Thresholds::default(),
            outputs: OutputSpec::default(),
        }
    }

    #[test]
    fn initial_consensus_terminates_at_round_zero() {
        let mut spec = base_spec();
        spec.grid_k = vec![1];
        let cell = spec.cells()[0];
        let result = run_trial(&spec, &cell, 0, false).unwrap();
        assert_eq!(result.outcome.rounds, 0);
        assert_eq!(result.outcome.terminal, TerminalKind::StrictConsensus);
        assert_eq!(result.outcome.winner, Some(OpinionId(0)));
        assert_eq!(result.outcome.residual, 0);
    }

    #[test]
    fn two_opinion_null_run_reaches_strict_consensus() {
        let spec = base_spec();
        let cell = spec.cells()[0];
        for trial in 0..3 {
            let result = run_trial(&spec, &cell, trial, false).unwrap();
            assert_eq!(result.outcome.terminal, TerminalKind::StrictConsensus);
            assert!(result.outcome.rounds > 0);
            assert_eq!(result.outcome.residual, 0);
            assert!(result.outcome.winner_valid);
        }
    }

    #[test]
    fn same_seed_same_trial_is_bit_identical() {
        let spec = base_spec();
        let cell = spec.cells()[0];
        let a = run_trial(&spec, &cell, 1, true).unwrap();
        let b = run_trial(&spec, &cell, 1, true).unwrap();
        assert_eq!(a.outcome, b.outcome);
        assert_eq!(a.trace, b.trace);
    }

    #[test]
    fn null_adversary_leaves_trace_pre_equal_post() {
        let spec = base_spec();
        let cell = spec.cells()[0];
        let result = run_trial(&spec, &cell, 0, true).unwrap();
        for record in result.trace.unwrap() {
            assert_eq!(record.pre_adv, record.post_adv);
        }
    }

    #[test]
    fn engines_agree_on_the_trivial_consensus_cell() {
        let mut spec = base_spec();
        spec.grid_k = vec![1];
        spec.engine = Engine::NodeLevel;
        let cell = spec.cells()[0];
        let result = run_trial(&spec, &cell, 0, false).unwrap();
        assert_eq!(result.outcome.terminal, TerminalKind::StrictConsensus);
    }

    #[test]
    fn node_level_guard_rejects_large_populations() {
        let mut spec = base_spec();
        spec.engine = Engine::NodeLevel;
        spec.grid_n = vec![NODE_LEVEL_MAX_POPULATION + 1];
        assert!(spec.validate().is_err());
    }

    #[test]
    fn sweep_collects_all_rows_and_aggregates() {
        let mut spec = base_spec();
        spec.grid_n = vec![500, 1000];
        spec.grid_k = vec![2, 3];
        spec.trials = 5;
        let result = run_sweep(&spec).unwrap();
        assert_eq!(result.rows.len(), 20);
        assert_eq!(result.cells.len(), 4);
        for cell in &result.cells {
            assert_eq!(cell.trials, 5);
        }
        result.verify_self_consistency().unwrap();
    }

    #[test]
    fn parallel_and_serial_sweeps_match() {
        let mut serial = base_spec();
        serial.trials = 4;
        serial.workers = 1;
        let mut parallel = serial.clone();
        parallel.workers = 4;
        let a = run_sweep(&serial).unwrap();
        let b = run_sweep(&parallel).unwrap();
        assert_eq!(a.rows, b.rows);
        assert_eq!(a.cells, b.cells);
    }

    #[test]
    fn static_plant_run_records_extinction() {
        let mut spec = base_spec();
        spec.grid_n = vec![10_000];
        spec.grid_k = vec![2];
        spec.adversary = AdversaryConfig {
            kind: AdversaryKind::StaticPlant,
            budget: BudgetSpec::Explicit(50),
            target: Some(99),
            sustain_level: None,
        };
        let cell = spec.cells()[0];
        let result = run_trial(&spec, &cell, 0, false).unwrap();
        // A 50-node plant at n = 10^4 dies fast; its extinction round is recorded.
        assert!(result.outcome.adversary_target_extinction.is_some());
        assert!(result.outcome.winner_valid);
    }

    #[test]
    fn biased_initial_has_requested_gap() {
        let spec = ExperimentSpec {
            initial: InitialSpec::Biased { gap: 90 },
            grid_n: vec![900],
            grid_k: vec![3],
            ..base_spec()
        };
        let cell = spec.cells()[0];
        let cfg = spec.initial_for(&cell).unwrap();
        assert_eq!(cfg.support(OpinionId(0)), 390);
        assert_eq!(cfg.support(OpinionId(1)), 255);
        assert_eq!(cfg.support(OpinionId(2)), 255);
    }
}
