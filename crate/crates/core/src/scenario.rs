//! Constrained tuple label spaces.
//!
//! A weak-supervision scenario is a non-empty strict subset of the full
//! label space `{-1,+1}^N`. Four named subsets are built in:
//!
//! * `Comp` — the N+1 threshold vectors `(+1^k, -1^{N-k})`, i.e. label
//!   assignments compatible with a descending confidence ordering,
//! * `Sim` — all-positive or all-negative (2 vectors),
//! * `Mix` — at least one positive and one negative (2^N - 2 vectors),
//! * `NotAllNeg` — at least one positive (2^N - 1 vectors),
//!
//! plus `Custom` subsets given explicitly. Enumeration uses a canonical
//! lexicographic order with `+1` sorting before `-1` at every coordinate,
//! so iteration order (and everything seeded by it) is reproducible.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hard cap on materializing 2^N vectors.
pub const ENUMERATION_CAP: usize = 20;

/// Tuple sizes above this overflow u64 cardinality bookkeeping.
pub const MAX_TUPLE_SIZE: usize = 63;

/// One joint label assignment for an N-tuple; entries are -1 or +1.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LabelVector(Vec<i8>);

impl LabelVector {
    pub fn new(entries: Vec<i8>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::EmptySubset);
        }
        if let Some(&bad) = entries.iter().find(|&&e| e != 1 && e != -1) {
            return Err(Error::invalid(format!(
                "label entries must be -1 or +1, got {bad}"
            )));
        }
        Ok(LabelVector(entries))
    }

    pub fn entries(&self) -> &[i8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn positives(&self) -> usize {
        self.0.iter().filter(|&&e| e == 1).count()
    }

    /// Canonical sort key: +1 maps to bit 0, -1 to bit 1, first coordinate
    /// most significant. Ascending key = lexicographic with +1 < -1.
    fn canonical_key(&self) -> u64 {
        let n = self.0.len();
        self.0
            .iter()
            .enumerate()
            .map(|(p, &e)| if e == -1 { 1u64 << (n - 1 - p) } else { 0 })
            .sum()
    }

    fn from_key(key: u64, n: usize) -> Self {
        let entries = (0..n)
            .map(|p| if key >> (n - 1 - p) & 1 == 1 { -1 } else { 1 })
            .collect();
        LabelVector(entries)
    }
}

impl fmt::Display for LabelVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<&str> = self
            .0
            .iter()
            .map(|&e| if e == 1 { "+1" } else { "-1" })
            .collect();
        write!(f, "({})", parts.join(","))
    }
}

/// The four named subset families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    /// Threshold vectors consistent with a descending confidence ranking.
    Comp,
    /// All tuple members share one latent class.
    Sim,
    /// Both classes occur within the tuple.
    Mix,
    /// At least one member is positive.
    NotAllNeg,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 4] = [
        ScenarioKind::Comp,
        ScenarioKind::Sim,
        ScenarioKind::Mix,
        ScenarioKind::NotAllNeg,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ScenarioKind::Comp => "comp",
            ScenarioKind::Sim => "sim",
            ScenarioKind::Mix => "mix",
            ScenarioKind::NotAllNeg => "not_all_neg",
        }
    }

    fn accepts(&self, v: &LabelVector) -> bool {
        let m = v.positives();
        let n = v.len();
        match self {
            // +1s, if any, must form a prefix.
            ScenarioKind::Comp => v.entries()[..m].iter().all(|&e| e == 1),
            ScenarioKind::Sim => m == 0 || m == n,
            ScenarioKind::Mix => m != 0 && m != n,
            ScenarioKind::NotAllNeg => m != 0,
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A validated constrained label space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ScenarioSpec {
    Named { kind: ScenarioKind, n: usize },
    Custom { n: usize, vectors: Vec<LabelVector> },
}

impl ScenarioSpec {
    pub fn named(kind: ScenarioKind, n: usize) -> Result<Self> {
        validate_tuple_size(n)?;
        Ok(ScenarioSpec::Named { kind, n })
    }

    /// Builds a custom subset: vectors are deduplicated and stored in
    /// canonical order; the result must be a non-empty strict subset.
    pub fn custom(n: usize, vectors: Vec<LabelVector>) -> Result<Self> {
        validate_tuple_size(n)?;
        for v in &vectors {
            if v.len() != n {
                return Err(Error::LengthMismatch {
                    expected: n,
                    got: v.len(),
                });
            }
        }
        let mut keys: Vec<u64> = vectors.iter().map(LabelVector::canonical_key).collect();
        keys.sort_unstable();
        keys.dedup();
        if keys.is_empty() {
            return Err(Error::EmptySubset);
        }
        if keys.len() as u64 == full_space_size(n) {
            return Err(Error::FullSubset { n });
        }
        let vectors = keys
            .into_iter()
            .map(|k| LabelVector::from_key(k, n))
            .collect();
        Ok(ScenarioSpec::Custom { n, vectors })
    }

    /// Loads a custom subset from a text file: a `N=<int>` header line,
    /// then one vector per line as comma-separated entries in {-1,+1}.
    pub fn custom_from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let parse_err = |line: usize, message: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        let mut lines = text.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| parse_err(1, "missing N=<int> header".into()))?;
        let n: usize = header
            .trim()
            .strip_prefix("N=")
            .ok_or_else(|| parse_err(1, format!("expected N=<int> header, got {header:?}")))?
            .trim()
            .parse()
            .map_err(|e| parse_err(1, format!("invalid tuple size: {e}")))?;
        let mut vectors = Vec::new();
        for (idx, line) in lines {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let entries: Vec<i8> = line
                .split(',')
                .map(|tok| {
                    tok.trim()
                        .parse::<i8>()
                        .map_err(|e| parse_err(idx + 1, format!("invalid entry {tok:?}: {e}")))
                })
                .collect::<Result<_>>()?;
            let v = LabelVector::new(entries)
                .map_err(|e| parse_err(idx + 1, e.to_string()))?;
            if v.len() != n {
                return Err(parse_err(
                    idx + 1,
                    format!("vector has {} entries, header says N={n}", v.len()),
                ));
            }
            vectors.push(v);
        }
        ScenarioSpec::custom(n, vectors)
    }

    pub fn n(&self) -> usize {
        match self {
            ScenarioSpec::Named { n, .. } | ScenarioSpec::Custom { n, .. } => *n,
        }
    }

    pub fn kind(&self) -> Option<ScenarioKind> {
        match self {
            ScenarioSpec::Named { kind, .. } => Some(*kind),
            ScenarioSpec::Custom { .. } => None,
        }
    }

    pub fn describe(&self) -> String {
        match self {
            ScenarioSpec::Named { kind, n } => format!("{kind}(n={n})"),
            ScenarioSpec::Custom { n, vectors } => {
                format!("custom(n={n}, |Y|={})", vectors.len())
            }
        }
    }

    /// Number of label vectors in the subset, without enumerating.
    pub fn cardinality(&self) -> u64 {
        match self {
            ScenarioSpec::Named { kind, n } => {
                let full = full_space_size(*n);
                match kind {
                    ScenarioKind::Comp => *n as u64 + 1,
                    ScenarioKind::Sim => 2,
                    ScenarioKind::Mix => full - 2,
                    ScenarioKind::NotAllNeg => full - 1,
                }
            }
            ScenarioSpec::Custom { vectors, .. } => vectors.len() as u64,
        }
    }

    /// Materializes the subset in canonical order.
    pub fn enumerate_labels(&self) -> Result<Vec<LabelVector>> {
        let n = self.n();
        match self {
            ScenarioSpec::Custom { vectors, .. } => Ok(vectors.clone()),
            ScenarioSpec::Named { kind, .. } => {
                if n > ENUMERATION_CAP {
                    return Err(Error::EnumerationTooLarge {
                        n,
                        cap: ENUMERATION_CAP,
                    });
                }
                let mut out = Vec::with_capacity(self.cardinality() as usize);
                for key in 0..full_space_size(n) {
                    let v = LabelVector::from_key(key, n);
                    if kind.accepts(&v) {
                        out.push(v);
                    }
                }
                Ok(out)
            }
        }
    }

    /// Membership test; O(N) for named kinds, binary search for custom.
    pub fn contains(&self, v: &LabelVector) -> Result<bool> {
        if v.len() != self.n() {
            return Err(Error::LengthMismatch {
                expected: self.n(),
                got: v.len(),
            });
        }
        Ok(match self {
            ScenarioSpec::Named { kind, .. } => kind.accepts(v),
            ScenarioSpec::Custom { vectors, .. } => {
                let key = v.canonical_key();
                vectors
                    .binary_search_by_key(&key, LabelVector::canonical_key)
                    .is_ok()
            }
        })
    }

    /// Counts vectors per number of positive entries.
    pub fn census_by_positives(&self) -> BTreeMap<usize, u64> {
        let n = self.n();
        let mut census = BTreeMap::new();
        match self {
            ScenarioSpec::Custom { vectors, .. } => {
                for v in vectors {
                    *census.entry(v.positives()).or_insert(0) += 1;
                }
            }
            ScenarioSpec::Named { kind, .. } => match kind {
                ScenarioKind::Comp => {
                    for m in 0..=n {
                        census.insert(m, 1);
                    }
                }
                ScenarioKind::Sim => {
                    census.insert(0, 1);
                    census.insert(n, 1);
                }
                ScenarioKind::Mix => {
                    for m in 1..n {
                        census.insert(m, binomial(n, m));
                    }
                }
                ScenarioKind::NotAllNeg => {
                    for m in 1..=n {
                        census.insert(m, binomial(n, m));
                    }
                }
            },
        }
        census
    }
}

fn validate_tuple_size(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidTupleSize {
            n,
            reason: "tuple size must be at least 2",
        });
    }
    if n > MAX_TUPLE_SIZE {
        return Err(Error::InvalidTupleSize {
            n,
            reason: "tuple size exceeds the supported maximum of 63",
        });
    }
    Ok(())
}

fn full_space_size(n: usize) -> u64 {
    1u64 << n
}

/// Binomial coefficient, exact in u64 for n <= 63.
pub(crate) fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as u64
}
