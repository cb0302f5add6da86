//! Budgeted opinion-corruption strategies.
//!
//! After each round's update an adversary may replace the opinions of up to
//! `F` nodes. A replacement moves one node between opinions, so it counts
//! once against the `F` node budget and twice in the total displacement
//! `sum_i |delta_i| <= 2F`; both ledgers are enforced on application.
//!
//! The theory quantifies over arbitrary adaptive adversaries; a simulator
//! needs concrete ones. The catalog here spans the behaviors the analysis
//! has to tolerate: planting a (possibly non-valid) opinion once, keeping
//! one alive forever, feeding or re-balancing the weakest big opinion, and
//! random legal noise.

use std::collections::BTreeMap;

use rand::Rng;
use thiserror::Error;

use crate::observer::{min_big_support, partition_small_big, Thresholds};
use crate::opinion::{Configuration, OpinionId};
use crate::rng::SimRng;

#[derive(Debug, Error, PartialEq)]
pub enum AdversaryError {
    #[error("displacement moves {spent} node(s), exceeding budget F = {budget}")]
    BudgetExceeded { spent: u64, budget: u64 },
    #[error("displacement drives opinion {0} below zero support")]
    NegativeSupport(OpinionId),
    #[error("displacement deltas sum to {net}, not zero")]
    NonConserving { net: i64 },
    #[error("static-adversary regime too small: n/k must exceed sqrt(k n ln n)")]
    RegimeTooSmall,
}

/// Per-opinion signed node deltas for one adversary action. Zero entries are
/// never stored.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Displacement {
    deltas: BTreeMap<OpinionId, i64>,
}

impl Displacement {
    pub fn zero() -> Self {
        Displacement::default()
    }

    pub fn from_deltas<I>(deltas: I) -> Self
    where
        I: IntoIterator<Item = (OpinionId, i64)>,
    {
        let mut map = BTreeMap::new();
        for (id, d) in deltas {
            if d != 0 {
                let entry = map.entry(id).or_insert(0);
                *entry += d;
                if *entry == 0 {
                    map.remove(&id);
                }
            }
        }
        Displacement { deltas: map }
    }

    pub fn is_zero(&self) -> bool {
        self.deltas.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (OpinionId, i64)> + '_ {
        self.deltas.iter().map(|(&id, &d)| (id, d))
    }

    pub fn get(&self, id: OpinionId) -> i64 {
        self.deltas.get(&id).copied().unwrap_or(0)
    }

    /// Net node creation; must be zero for a legal displacement.
    pub fn net(&self) -> i64 {
        self.deltas.values().sum()
    }

    /// Total absolute displacement `sum_i |delta_i|`.
    pub fn total_abs(&self) -> u64 {
        self.deltas.values().map(|d| d.unsigned_abs()).sum()
    }

    /// Number of nodes whose opinion is replaced: half the total absolute
    /// displacement once conservation holds.
    pub fn moved_nodes(&self) -> u64 {
        self.deltas
            .values()
            .filter(|&&d| d > 0)
            .map(|&d| d as u64)
            .sum()
    }
}

/// Applies a displacement, enforcing conservation, the `2F` displacement
/// budget, and non-negativity of every support.
pub fn apply(
    c: &Configuration,
    d: &Displacement,
    budget: u64,
) -> Result<Configuration, AdversaryError> {
    let net = d.net();
    if net != 0 {
        return Err(AdversaryError::NonConserving { net });
    }
    if d.total_abs() > 2 * budget {
        return Err(AdversaryError::BudgetExceeded {
            spent: d.moved_nodes(),
            budget,
        });
    }
    let mut supports: BTreeMap<OpinionId, u64> = c.iter().collect();
    for (id, delta) in d.iter() {
        let current = supports.get(&id).copied().unwrap_or(0);
        let next = current as i64 + delta;
        if next < 0 {
            return Err(AdversaryError::NegativeSupport(id));
        }
        if next == 0 {
            supports.remove(&id);
        } else {
            supports.insert(id, next as u64);
        }
    }
    Configuration::with_population(c.population(), supports)
        .map_err(|_| AdversaryError::NonConserving { net })
}

/// Strategy selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdversaryKind {
    /// No action; the system reduces bit-exactly to the plain process.
    Null,
    /// Moves `F` nodes onto the target opinion once, at round 0, drawing
    /// them proportionally from the other active opinions.
    StaticPlant,
    /// Every round, tops the target opinion back up to its sustain level
    /// (at most `F` nodes), taking nodes from the largest other opinion.
    DynamicSustain,
    /// Every round, moves up to `F` nodes from the largest big opinion to
    /// the smallest, halving their gap at most.
    DynamicBalanceBig,
    /// Every round, moves `F` nodes from the largest big opinion onto the
    /// smallest big opinion.
    DynamicFeedMinBig,
    /// Every round, applies a uniformly random legal displacement of at
    /// most `F` nodes.
    DynamicRandom,
}

impl AdversaryKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            AdversaryKind::Null => "null",
            AdversaryKind::StaticPlant => "static-plant",
            AdversaryKind::DynamicSustain => "dynamic-sustain",
            AdversaryKind::DynamicBalanceBig => "dynamic-balance-big",
            AdversaryKind::DynamicFeedMinBig => "dynamic-feed-min-big",
            AdversaryKind::DynamicRandom => "dynamic-random",
        }
    }
}

/// A concrete adversary: strategy, node budget, optional target opinion
/// (which may lie outside the valid set), and strategy constants.
#[derive(Debug, Clone, PartialEq)]
pub struct AdversarySpec {
    pub kind: AdversaryKind,
    /// Node budget `F`.
    pub budget: u64,
    /// Target opinion for plant/sustain strategies and an extra candidate
    /// for the random one. Defaults to a fresh id when needed.
    pub target: Option<OpinionId>,
    /// Support level `DynamicSustain` maintains; defaults to the budget.
    pub sustain_level: Option<u64>,
    /// Cutoff constants for the strategies that need the big set.
    pub thresholds: Thresholds,
}

impl AdversarySpec {
    pub fn null() -> Self {
        AdversarySpec {
            kind: AdversaryKind::Null,
            budget: 0,
            target: None,
            sustain_level: None,
            thresholds: Thresholds::default(),
        }
    }

    pub fn new(kind: AdversaryKind, budget: u64) -> Self {
        AdversarySpec {
            kind,
            budget,
            target: None,
            sustain_level: None,
            thresholds: Thresholds::default(),
        }
    }

    pub fn with_target(mut self, target: OpinionId) -> Self {
        self.target = Some(target);
        self
    }

    fn target_or_fresh(&self, c: &Configuration) -> OpinionId {
        self.target.unwrap_or_else(|| {
            let max_id = c.active_ids().max().map_or(0, |id| id.0);
            OpinionId(max_id + 1)
        })
    }
}

/// Full run history as (pre-adversary, post-adversary) configuration pairs;
/// adaptive strategies may consult all of it.
#[derive(Debug, Clone, Default)]
pub struct History {
    rounds: Vec<(Configuration, Configuration)>,
}

impl History {
    pub fn new() -> Self {
        History::default()
    }

    pub fn push(&mut self, pre: Configuration, post: Configuration) {
        self.rounds.push((pre, post));
    }

    pub fn len(&self) -> usize {
        self.rounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rounds.is_empty()
    }

    /// Round-0 pre-adversary configuration: the source of the valid set.
    pub fn initial(&self) -> Option<&Configuration> {
        self.rounds.first().map(|(pre, _)| pre)
    }

    pub fn last_post(&self) -> Option<&Configuration> {
        self.rounds.last().map(|(_, post)| post)
    }

    pub fn iter(&self) -> impl Iterator<Item = &(Configuration, Configuration)> {
        self.rounds.iter()
    }
}

/// Largest-remainder apportionment of `total` over the weighted ids; ties on
/// the remainder break toward the lowest id. Each share never exceeds its
/// weight when `total <= sum(weights)`.
fn apportion(total: u64, weights: &[(OpinionId, u64)]) -> Vec<(OpinionId, u64)> {
    let weight_sum: u128 = weights.iter().map(|&(_, w)| u128::from(w)).sum();
    if total == 0 || weight_sum == 0 {
        return Vec::new();
    }
    let mut shares: Vec<(OpinionId, u64, u128)> = weights
        .iter()
        .map(|&(id, w)| {
            let exact = u128::from(total) * u128::from(w);
            ((exact / weight_sum) as u64, exact % weight_sum, id)
        })
        .map(|(q, r, id)| (id, q, r))
        .collect();
    let assigned: u64 = shares.iter().map(|&(_, q, _)| q).sum();
    let mut leftover = total - assigned;
    shares.sort_by(|a, b| b.2.cmp(&a.2).then(a.0.cmp(&b.0)));
    for share in shares.iter_mut() {
        if leftover == 0 {
            break;
        }
        share.1 += 1;
        leftover -= 1;
    }
    shares
        .into_iter()
        .filter(|&(_, q, _)| q > 0)
        .map(|(id, q, _)| (id, q))
        .collect()
}

/// Computes the strategy's displacement for the current round. Strategies
/// are total: they clamp to the budget and to availability, so the result
/// always passes [`apply`] under `spec.budget`.
pub fn propose(
    spec: &AdversarySpec,
    history: &History,
    c: &Configuration,
    rng: &mut SimRng,
) -> Displacement {
    let d = match spec.kind {
        AdversaryKind::Null => Displacement::zero(),
        AdversaryKind::StaticPlant => propose_static_plant(spec, history, c),
        AdversaryKind::DynamicSustain => propose_sustain(spec, c),
        AdversaryKind::DynamicBalanceBig => propose_big_transfer(spec, history, c, true),
        AdversaryKind::DynamicFeedMinBig => propose_big_transfer(spec, history, c, false),
        AdversaryKind::DynamicRandom => propose_random(spec, c, rng),
    };
    debug_assert_eq!(d.net(), 0);
    debug_assert!(d.total_abs() <= 2 * spec.budget);
    d
}

fn propose_static_plant(
    spec: &AdversarySpec,
    history: &History,
    c: &Configuration,
) -> Displacement {
    if !history.is_empty() {
        return Displacement::zero();
    }
    let target = spec.target_or_fresh(c);
    let sources: Vec<(OpinionId, u64)> = c.iter().filter(|&(id, _)| id != target).collect();
    let available: u64 = sources.iter().map(|&(_, w)| w).sum();
    let amount = spec.budget.min(available);
    let parts = apportion(amount, &sources);
    let planted: i64 = parts.iter().map(|&(_, q)| q as i64).sum();
    let mut deltas: Vec<(OpinionId, i64)> =
        parts.into_iter().map(|(id, q)| (id, -(q as i64))).collect();
    deltas.push((target, planted));
    Displacement::from_deltas(deltas)
}

fn propose_sustain(spec: &AdversarySpec, c: &Configuration) -> Displacement {
    let target = spec.target_or_fresh(c);
    let level = spec.sustain_level.unwrap_or(spec.budget);
    let deficit = level.saturating_sub(c.support(target));
    let source = c
        .iter()
        .filter(|&(id, _)| id != target)
        .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)));
    let Some((source_id, source_support)) = source else {
        return Displacement::zero();
    };
    let amount = spec.budget.min(deficit).min(source_support);
    Displacement::from_deltas([(source_id, -(amount as i64)), (target, amount as i64)])
}

fn propose_big_transfer(
    spec: &AdversarySpec,
    history: &History,
    c: &Configuration,
    balance_only: bool,
) -> Displacement {
    let valid = history
        .initial()
        .map_or_else(|| c.active_ids().collect(), crate::observer::valid_set);
    let (_, big) = partition_small_big(c, &valid, &spec.thresholds);
    if big.len() < 2 {
        return Displacement::zero();
    }
    let (min_id, min_support) = min_big_support(c, &big).expect("big set checked non-empty");
    let (max_id, max_support) = big
        .iter()
        .map(|&id| (id, c.support(id)))
        .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))
        .expect("big set checked non-empty");
    if min_id == max_id {
        return Displacement::zero();
    }
    let amount = if balance_only {
        spec.budget.min((max_support - min_support) / 2)
    } else {
        spec.budget.min(max_support)
    };
    Displacement::from_deltas([(max_id, -(amount as i64)), (min_id, amount as i64)])
}

fn propose_random(spec: &AdversarySpec, c: &Configuration, rng: &mut SimRng) -> Displacement {
    let moves = rng.random_range(0..=spec.budget);
    let mut working: BTreeMap<OpinionId, u64> = c.iter().collect();
    let mut candidates: Vec<OpinionId> = c.active_ids().collect();
    if let Some(extra) = spec.target {
        if !candidates.contains(&extra) {
            candidates.push(extra);
        }
    }
    let mut deltas: BTreeMap<OpinionId, i64> = BTreeMap::new();
    for _ in 0..moves {
        let total: u64 = working.values().sum();
        let mut pick = rng.random_range(0..total);
        let mut source = *working.keys().next().expect("population is never empty");
        for (&id, &count) in &working {
            if pick < count {
                source = id;
                break;
            }
            pick -= count;
        }
        let dest = candidates[rng.random_range(0..candidates.len())];
        if dest == source {
            continue;
        }
        *working.get_mut(&source).unwrap() -= 1;
        if working[&source] == 0 {
            working.remove(&source);
        }
        *working.entry(dest).or_insert(0) += 1;
        *deltas.entry(source).or_insert(0) -= 1;
        *deltas.entry(dest).or_insert(0) += 1;
    }
    Displacement::from_deltas(deltas)
}

/// Dynamic-adversary budget `floor(beta * sqrt(n) / (k^{5/2} ln n))`.
pub fn f_dynamic_bound(n: u64, k: u32, beta: f64) -> u64 {
    assert!(n >= 2, "population must be at least 2");
    assert!(k >= 1, "valid-opinion count must be at least 1");
    let nf = n as f64;
    let kf = f64::from(k);
    let f = beta * nf.sqrt() / (kf.powf(2.5) * nf.ln());
    if f <= 0.0 {
        0
    } else {
        f.floor() as u64
    }
}

/// Static-adversary budget `floor(n/k - sqrt(k n ln n))`; errors when the
/// regime is too small for the bound to be positive.
pub fn f_static_bound(n: u64, k: u32) -> Result<u64, AdversaryError> {
    assert!(n >= 2, "population must be at least 2");
    assert!(k >= 1, "valid-opinion count must be at least 1");
    let nf = n as f64;
    let kf = f64::from(k);
    let root = (kf * nf * nf.ln()).sqrt();
    let head = nf / kf;
    if head <= root {
        return Err(AdversaryError::RegimeTooSmall);
    }
    Ok((head - root).floor() as u64)
}
