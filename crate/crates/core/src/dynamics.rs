//! One synchronous round of 3-majority on the complete graph.
//!
//! Every node samples three nodes uniformly at random (including itself,
//! with repetitions) and adopts the majority opinion of the sample; with
//! three distinct opinions it keeps the first one drawn. Because nodes are
//! anonymous and the graph is complete, a single round is fully described
//! by the per-node adoption distribution
//!
//! ```text
//! p_i = (c_i / n) * (1 + c_i / n - sum_l (c_l / n)^2)
//! ```
//!
//! which this module computes in closed form, samples with two engines
//! (an O(k) multinomial engine and an O(n) node-level engine), and
//! cross-checks against a brute-force enumeration oracle.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use thiserror::Error;

use crate::opinion::{Configuration, NodeAssignment, OpinionId};
use crate::rng::SimRng;

/// Active-opinion limit for the k^3 enumeration oracle.
pub const BRUTE_FORCE_MAX_OPINIONS: usize = 64;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DynamicsError {
    #[error("opinion {0} is not active in the configuration")]
    InactiveOpinion(OpinionId),
    #[error("{active} active opinions exceed the enumeration guard of {limit}")]
    TooManyOpinions { active: usize, limit: usize },
}

/// How a node resolves a sample of three pairwise-distinct opinions.
///
/// Both variants induce the same single-node adoption distribution; the
/// brute-force oracle test enforces that equivalence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TieBreakRule {
    /// Keep the first opinion drawn.
    #[default]
    FirstSample,
    /// Pick one of the three uniformly at random.
    UniformAmongSample,
}

/// Per-node adoption probabilities aligned with a source configuration:
/// entries are in ascending id order and cover exactly the active set.
#[derive(Debug, Clone, PartialEq)]
pub struct AdoptionDistribution {
    probs: Vec<(OpinionId, f64)>,
}

impl AdoptionDistribution {
    pub fn probs(&self) -> &[(OpinionId, f64)] {
        &self.probs
    }

    pub fn get(&self, id: OpinionId) -> Option<f64> {
        self.probs
            .binary_search_by_key(&id, |&(i, _)| i)
            .ok()
            .map(|idx| self.probs[idx].1)
    }

    pub fn sum(&self) -> f64 {
        self.probs.iter().map(|&(_, p)| p).sum()
    }
}

/// Closed-form adoption distribution for one node given configuration `c`.
pub fn adoption_distribution(c: &Configuration) -> AdoptionDistribution {
    let n = c.population() as f64;
    let sum_sq: f64 = c.iter().map(|(_, count)| (count as f64 / n).powi(2)).sum();
    let probs = c
        .iter()
        .map(|(id, count)| {
            let q = count as f64 / n;
            (id, q * (1.0 + q - sum_sq))
        })
        .collect();
    AdoptionDistribution { probs }
}

/// Expected support of every active opinion after one round:
/// `n * adoption_distribution(c)`.
pub fn expected_next(c: &Configuration) -> BTreeMap<OpinionId, f64> {
    let n = c.population() as f64;
    adoption_distribution(c)
        .probs()
        .iter()
        .map(|&(id, p)| (id, n * p))
        .collect()
}

/// Upper bound `c_i * (1 + c_i/n - 1/|W|)` on the expected next support of
/// active opinion `i`, where `W` is the active set. Always dominates
/// [`expected_next`] because `sum c_l^2` is minimized at the uniform split.
pub fn expected_upper_bound(c: &Configuration, i: OpinionId) -> Result<f64, DynamicsError> {
    let count = c.support(i);
    if count == 0 {
        return Err(DynamicsError::InactiveOpinion(i));
    }
    let n = c.population() as f64;
    let ci = count as f64;
    Ok(ci * (1.0 + ci / n - 1.0 / c.active_count() as f64))
}

/// Resolves one sampled triple: a repeated opinion wins outright, otherwise
/// the tie-break rule decides.
pub fn single_node_outcome(
    sample: [OpinionId; 3],
    rule: TieBreakRule,
    rng: &mut SimRng,
) -> OpinionId {
    if sample[0] == sample[1] || sample[0] == sample[2] {
        sample[0]
    } else if sample[1] == sample[2] {
        sample[1]
    } else {
        match rule {
            TieBreakRule::FirstSample => sample[0],
            TieBreakRule::UniformAmongSample => sample[rng.random_range(0..3)],
        }
    }
}

/// Configuration-level engine: one round as a multinomial sample of size `n`
/// over the adoption distribution, drawn as a chain of conditional binomials.
/// Cost is O(k), independent of `n`, so populations up to 10^9 are cheap.
pub fn step_multinomial(c: &Configuration, rng: &mut SimRng) -> Configuration {
    let dist = adoption_distribution(c);
    let probs = dist.probs();
    let k = probs.len();

    // Suffix sums keep each conditional ratio well-scaled instead of
    // accumulating subtraction error across iterations.
    let mut suffix = vec![0.0f64; k + 1];
    for i in (0..k).rev() {
        suffix[i] = suffix[i + 1] + probs[i].1;
    }

    let mut remaining = c.population();
    let mut supports = Vec::with_capacity(k);
    for (i, &(id, p)) in probs.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if i == k - 1 {
            supports.push((id, remaining));
            break;
        }
        let ratio = if suffix[i] > 0.0 {
            (p / suffix[i]).clamp(0.0, 1.0)
        } else {
            1.0
        };
        let draw = Binomial::new(remaining, ratio)
            .expect("ratio clamped to [0, 1]")
            .sample(rng);
        supports.push((id, draw));
        remaining -= draw;
    }
    Configuration::from_supports(supports).expect("multinomial draw conserves n >= 1")
}

/// Node-level engine: every node independently samples three node indices
/// uniformly with replacement and applies [`single_node_outcome`].
/// Exists for cross-validation of the multinomial engine at small `n`.
pub fn step_node_level(a: &NodeAssignment, rule: TieBreakRule, rng: &mut SimRng) -> NodeAssignment {
    let n = a.len();
    let old = a.opinions();
    let mut next = Vec::with_capacity(n);
    for _ in 0..n {
        let sample = [
            old[rng.random_range(0..n)],
            old[rng.random_range(0..n)],
            old[rng.random_range(0..n)],
        ];
        next.push(single_node_outcome(sample, rule, rng));
    }
    NodeAssignment::from_opinions(next).expect("population preserved")
}

/// Independent oracle for the closed form: enumerates all k^3 ordered opinion
/// triples, weighting each by the product of support fractions. For
/// [`TieBreakRule::UniformAmongSample`] the all-distinct mass is split
/// equally among the three observed opinions, so the result is deterministic.
pub fn brute_force_adoption_distribution(
    c: &Configuration,
    rule: TieBreakRule,
) -> Result<AdoptionDistribution, DynamicsError> {
    let k = c.active_count();
    if k > BRUTE_FORCE_MAX_OPINIONS {
        return Err(DynamicsError::TooManyOpinions {
            active: k,
            limit: BRUTE_FORCE_MAX_OPINIONS,
        });
    }
    let n = c.population() as f64;
    let fractions: Vec<(OpinionId, f64)> =
        c.iter().map(|(id, count)| (id, count as f64 / n)).collect();

    let mut mass: BTreeMap<OpinionId, f64> = c.iter().map(|(id, _)| (id, 0.0)).collect();
    for &(id_a, pa) in &fractions {
        for &(id_b, pb) in &fractions {
            for &(id_c, pc) in &fractions {
                let w = pa * pb * pc;
                if id_a == id_b || id_a == id_c {
                    *mass.get_mut(&id_a).unwrap() += w;
                } else if id_b == id_c {
                    *mass.get_mut(&id_b).unwrap() += w;
                } else {
                    match rule {
                        TieBreakRule::FirstSample => *mass.get_mut(&id_a).unwrap() += w,
                        TieBreakRule::UniformAmongSample => {
                            *mass.get_mut(&id_a).unwrap() += w / 3.0;
                            *mass.get_mut(&id_b).unwrap() += w / 3.0;
                            *mass.get_mut(&id_c).unwrap() += w / 3.0;
                        }
                    }
                }
            }
        }
    }
    Ok(AdoptionDistribution {
        probs: mass.into_iter().collect(),
    })
}
