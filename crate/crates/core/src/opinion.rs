//! Opinions and configurations: the sufficient statistics of the process.
//!
//! On a complete anonymous graph the system state is fully described by the
//! support count of each opinion. [`Configuration`] stores those counts as an
//! ordered sparse map; zero-support opinions are pruned from the map (ids stay
//! meaningful for the whole run and are never reused).

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Index of an opinion. Ids are stable for the lifetime of a run; adversaries
/// may introduce new ids but never recycle old ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OpinionId(pub u32);

impl fmt::Display for OpinionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<u32> for OpinionId {
    fn from(id: u32) -> Self {
        OpinionId(id)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("population must be at least 1")]
    EmptyPopulation,
    #[error("supports sum to {actual}, expected n = {expected}")]
    SumMismatch { expected: u64, actual: u64 },
    #[error("invalid configuration string: {0}")]
    Parse(String),
}

/// Support counts per opinion plus the population size `n`.
///
/// Invariants: every stored support is positive, the supports sum to `n`,
/// and `n >= 1`. Constructors enforce all three.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Configuration {
    supports: BTreeMap<OpinionId, u64>,
    n: u64,
}

impl Configuration {
    /// Builds a configuration from `(id, count)` pairs; zero counts are
    /// pruned, duplicates are summed, and `n` is the total.
    pub fn from_supports<I>(supports: I) -> Result<Self, ConfigError>
    where
        I: IntoIterator<Item = (OpinionId, u64)>,
    {
        let mut map = BTreeMap::new();
        for (id, count) in supports {
            if count > 0 {
                *map.entry(id).or_insert(0) += count;
            }
        }
        let n: u64 = map.values().sum();
        if n == 0 {
            return Err(ConfigError::EmptyPopulation);
        }
        Ok(Configuration { supports: map, n })
    }

    /// Like [`from_supports`](Self::from_supports) but checks the total
    /// against an expected population size.
    pub fn with_population<I>(n: u64, supports: I) -> Result<Self, ConfigError>
    where
        I: IntoIterator<Item = (OpinionId, u64)>,
    {
        let cfg = Self::from_supports(supports)?;
        if cfg.n != n {
            return Err(ConfigError::SumMismatch {
                expected: n,
                actual: cfg.n,
            });
        }
        Ok(cfg)
    }

    /// Uniform split of `n` nodes over opinions `0..k`; when `k` does not
    /// divide `n` the remainder goes to the lowest ids, one node each.
    pub fn uniform(n: u64, k: u32) -> Result<Self, ConfigError> {
        if n == 0 || k == 0 || u64::from(k) > n {
            return Err(ConfigError::EmptyPopulation);
        }
        let base = n / u64::from(k);
        let rem = n % u64::from(k);
        Self::from_supports((0..k).map(|i| {
            let extra = u64::from(u64::from(i) < rem);
            (OpinionId(i), base + extra)
        }))
    }

    /// All `n` nodes on a single opinion.
    pub fn consensus(n: u64, id: OpinionId) -> Result<Self, ConfigError> {
        Self::from_supports([(id, n)])
    }

    pub fn population(&self) -> u64 {
        self.n
    }

    /// Support of `id`, zero if inactive.
    pub fn support(&self, id: OpinionId) -> u64 {
        self.supports.get(&id).copied().unwrap_or(0)
    }

    pub fn is_active(&self, id: OpinionId) -> bool {
        self.supports.contains_key(&id)
    }

    /// Active `(id, count)` pairs in ascending id order.
    pub fn iter(&self) -> impl Iterator<Item = (OpinionId, u64)> + '_ {
        self.supports.iter().map(|(&id, &c)| (id, c))
    }

    pub fn active_ids(&self) -> impl Iterator<Item = OpinionId> + '_ {
        self.supports.keys().copied()
    }

    pub fn active_count(&self) -> usize {
        self.supports.len()
    }

    pub fn is_consensus(&self) -> bool {
        self.supports.len() == 1
    }

    /// Largest opinion; ties broken by lowest id.
    pub fn max_support(&self) -> (OpinionId, u64) {
        self.iter()
            .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))
            .expect("configuration is never empty")
    }

    /// Smallest active opinion; ties broken by lowest id.
    pub fn min_support(&self) -> (OpinionId, u64) {
        self.iter()
            .min_by(|a, b| a.1.cmp(&b.1).then(a.0.cmp(&b.0)))
            .expect("configuration is never empty")
    }

    /// Canonical text form `n=<int>;<id>:<count>,...` with ids ascending.
    /// Used in traces and golden tests; [`FromStr`] parses it back.
    pub fn canonical_string(&self) -> String {
        let body: Vec<String> = self.iter().map(|(id, c)| format!("{id}:{c}")).collect();
        format!("n={};{}", self.n, body.join(","))
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical_string())
    }
}

impl FromStr for Configuration {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = |msg: &str| ConfigError::Parse(format!("{msg} in {s:?}"));
        let rest = s.strip_prefix("n=").ok_or_else(|| err("missing n="))?;
        let (n_str, body) = rest.split_once(';').ok_or_else(|| err("missing ';'"))?;
        let n: u64 = n_str.parse().map_err(|_| err("bad population"))?;
        let mut supports = Vec::new();
        let mut last_id: Option<u32> = None;
        for part in body.split(',') {
            let (id_str, c_str) = part.split_once(':').ok_or_else(|| err("missing ':'"))?;
            let id: u32 = id_str.parse().map_err(|_| err("bad opinion id"))?;
            let count: u64 = c_str.parse().map_err(|_| err("bad count"))?;
            if count == 0 {
                return Err(err("zero support"));
            }
            if last_id.is_some_and(|prev| prev >= id) {
                return Err(err("ids not strictly ascending"));
            }
            last_id = Some(id);
            supports.push((OpinionId(id), count));
        }
        Self::with_population(n, supports)
    }
}

/// Node-level state: one opinion per node. Only used by the node-level
/// engine for cross-validation; the multinomial engine works on
/// [`Configuration`] directly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeAssignment {
    opinions: Vec<OpinionId>,
}

impl NodeAssignment {
    /// Lays the configuration out as contiguous blocks in ascending id order.
    pub fn from_configuration(cfg: &Configuration) -> Self {
        let mut opinions = Vec::with_capacity(cfg.population() as usize);
        for (id, count) in cfg.iter() {
            opinions.extend(std::iter::repeat_n(id, count as usize));
        }
        NodeAssignment { opinions }
    }

    pub fn from_opinions(opinions: Vec<OpinionId>) -> Result<Self, ConfigError> {
        if opinions.is_empty() {
            return Err(ConfigError::EmptyPopulation);
        }
        Ok(NodeAssignment { opinions })
    }

    pub fn len(&self) -> usize {
        self.opinions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.opinions.is_empty()
    }

    pub fn opinions(&self) -> &[OpinionId] {
        &self.opinions
    }

    pub fn opinions_mut(&mut self) -> &mut [OpinionId] {
        &mut self.opinions
    }

    /// The induced histogram; always a valid configuration with the same `n`.
    pub fn to_configuration(&self) -> Configuration {
        Configuration::from_supports(self.opinions.iter().map(|&id| (id, 1)))
            .expect("non-empty assignment")
    }
}
