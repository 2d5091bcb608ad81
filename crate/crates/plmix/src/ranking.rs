//! Rankings over a fixed item universe, with the two structural transforms the
//! estimators are built on: sequential choice breaking and the pairwise binary
//! embedding.
//!
//! Items are dense ids `0..n`. A ranking lists items from most to least
//! preferred and may be partial (a prefix order over a subset); unranked items
//! carry no information. Datasets attach a positive real multiplicity to each
//! ranking so that duplicated observations and fractional weights from tie
//! expansion share one representation.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};

/// A strict preference order, most preferred first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ranking {
    items: Vec<usize>,
}

impl Ranking {
    /// Builds a ranking from distinct item ids. At least two items are
    /// required; a single item expresses no preference.
    pub fn new(items: Vec<usize>) -> Result<Self> {
        if items.len() < 2 {
            return Err(Error::InvalidRanking(format!(
                "need at least 2 items, got {}",
                items.len()
            )));
        }
        let mut seen = items.clone();
        seen.sort_unstable();
        if seen.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidRanking("duplicate item".into()));
        }
        Ok(Ranking { items })
    }

    pub fn items(&self) -> &[usize] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Position of `item` in the order, if ranked.
    pub fn rank_of(&self, item: usize) -> Option<usize> {
        self.items.iter().position(|&x| x == item)
    }
}

/// A collection of rankings over items `0..n` with per-ranking multiplicities.
#[derive(Debug, Clone, PartialEq)]
pub struct RankingDataset {
    n: usize,
    rankings: Vec<Ranking>,
    multiplicities: Vec<f64>,
}

impl RankingDataset {
    /// Dataset with unit multiplicities.
    pub fn new(n: usize, rankings: Vec<Ranking>) -> Result<Self> {
        let mult = vec![1.0; rankings.len()];
        Self::with_multiplicities(n, rankings, mult)
    }

    /// Dataset with explicit positive multiplicities, one per ranking.
    pub fn with_multiplicities(
        n: usize,
        rankings: Vec<Ranking>,
        multiplicities: Vec<f64>,
    ) -> Result<Self> {
        if n < 2 {
            return Err(Error::param("n", format!("need at least 2 items, got {n}")));
        }
        if rankings.is_empty() {
            return Err(Error::param("rankings", "dataset holds no rankings"));
        }
        if multiplicities.len() != rankings.len() {
            return Err(Error::DimensionMismatch {
                expected: rankings.len(),
                found: multiplicities.len(),
            });
        }
        for (l, r) in rankings.iter().enumerate() {
            if r.len() > n {
                return Err(Error::InvalidRanking(format!(
                    "ranking {l} has {} items but n = {n}",
                    r.len()
                )));
            }
            if let Some(&bad) = r.items().iter().find(|&&x| x >= n) {
                return Err(Error::InvalidRanking(format!(
                    "ranking {l} contains item {bad} outside 0..{n}"
                )));
            }
        }
        for (l, &w) in multiplicities.iter().enumerate() {
            if !w.is_finite() || w <= 0.0 {
                return Err(Error::param(
                    "multiplicities",
                    format!("entry {l} is {w}; multiplicities must be positive and finite"),
                ));
            }
        }
        Ok(RankingDataset {
            n,
            rankings,
            multiplicities,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of stored rankings (multiplicities not counted).
    pub fn len(&self) -> usize {
        self.rankings.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Effective observation count: the sum of multiplicities.
    pub fn total_weight(&self) -> f64 {
        self.multiplicities.iter().sum()
    }

    pub fn rankings(&self) -> &[Ranking] {
        &self.rankings
    }

    pub fn ranking(&self, l: usize) -> &Ranking {
        &self.rankings[l]
    }

    pub fn multiplicities(&self) -> &[f64] {
        &self.multiplicities
    }

    /// True when every ranking orders all `n` items.
    pub fn is_full(&self) -> bool {
        self.rankings.iter().all(|r| r.len() == self.n)
    }

    /// Dataset restricted to the given ranking indices, multiplicities kept.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::param("indices", "empty subset"));
        }
        let mut rankings = Vec::with_capacity(indices.len());
        let mut mult = Vec::with_capacity(indices.len());
        for &l in indices {
            if l >= self.rankings.len() {
                return Err(Error::param("indices", format!("index {l} out of range")));
            }
            rankings.push(self.rankings[l].clone());
            mult.push(self.multiplicities[l]);
        }
        Self::with_multiplicities(self.n, rankings, mult)
    }
}

/// One sequential-choice event: `winner` was picked first out of `choice_set`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChoiceEnumeration {
    pub winner: usize,
    pub choice_set: Vec<usize>,
    /// Index of the ranking this event was broken out of.
    pub source: usize,
}

/// The full sequential decomposition of a dataset. A ranking of length `s`
/// contributes `s - 1` events, one per suffix of its item sequence; the final
/// item wins nothing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChoiceBreaking {
    enumerations: Vec<ChoiceEnumeration>,
    n: usize,
    num_rankings: usize,
}

impl ChoiceBreaking {
    pub fn enumerations(&self) -> &[ChoiceEnumeration] {
        &self.enumerations
    }

    pub fn len(&self) -> usize {
        self.enumerations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.enumerations.is_empty()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_rankings(&self) -> usize {
        self.num_rankings
    }
}

/// Breaks every ranking into its sequence of first-choice events. The choice
/// sets are the nested suffixes of each ranking, so a full ranking over `n`
/// items yields `n - 1` events.
pub fn choice_breaking(dataset: &RankingDataset) -> ChoiceBreaking {
    let mut enumerations = Vec::new();
    for (l, ranking) in dataset.rankings().iter().enumerate() {
        let items = ranking.items();
        for i in 0..items.len() - 1 {
            enumerations.push(ChoiceEnumeration {
                winner: items[i],
                choice_set: items[i..].to_vec(),
                source: l,
            });
        }
    }
    ChoiceBreaking {
        enumerations,
        n: dataset.n(),
        num_rankings: dataset.len(),
    }
}

/// Number of unordered item pairs for `n` items.
pub fn num_pairs(n: usize) -> usize {
    n * (n - 1) / 2
}

/// Column index of pair `(a, b)`, `a < b`, in row-major pair order
/// `(0,1), (0,2), ..., (n-2, n-1)`.
pub fn pair_index(n: usize, a: usize, b: usize) -> usize {
    debug_assert!(a < b && b < n);
    a * n - a * (a + 1) / 2 + (b - a - 1)
}

/// Embeds full rankings as binary pairwise-comparison rows: entry `(a, b)` is
/// 1 when `a` is preferred to `b`. Multiplicities must be (near-)integral and
/// expand to repeated rows, since clustering treats each observation as a
/// point.
pub fn embed_pairwise(dataset: &RankingDataset) -> Result<DMatrix<f64>> {
    let n = dataset.n();
    let mut repeats = Vec::with_capacity(dataset.len());
    let mut rows = 0usize;
    for (l, &w) in dataset.multiplicities().iter().enumerate() {
        let r = w.round();
        if (w - r).abs() > 1e-9 || r < 1.0 {
            return Err(Error::param(
                "multiplicities",
                format!("ranking {l} has multiplicity {w}; embedding needs whole observations"),
            ));
        }
        repeats.push(r as usize);
        rows += r as usize;
    }
    for (l, ranking) in dataset.rankings().iter().enumerate() {
        if ranking.len() != n {
            return Err(Error::PartialRanking {
                index: l,
                len: ranking.len(),
                n,
            });
        }
    }

    let d = num_pairs(n);
    let mut x = DMatrix::<f64>::zeros(rows, d);
    let mut pos = vec![0usize; n];
    let mut row = 0usize;
    for (l, ranking) in dataset.rankings().iter().enumerate() {
        for (p, &item) in ranking.items().iter().enumerate() {
            pos[item] = p;
        }
        for a in 0..n {
            for b in a + 1..n {
                if pos[a] < pos[b] {
                    x[(row, pair_index(n, a, b))] = 1.0;
                }
            }
        }
        for r in 1..repeats[l] {
            for c in 0..d {
                x[(row + r, c)] = x[(row, c)];
            }
        }
        row += repeats[l];
    }
    Ok(x)
}

/// A preference order with tied groups: items inside a group are unordered,
/// groups are ordered among themselves.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawRankingWithTies {
    groups: Vec<Vec<usize>>,
}

impl RawRankingWithTies {
    pub fn new(groups: Vec<Vec<usize>>) -> Result<Self> {
        if groups.iter().any(|g| g.is_empty()) {
            return Err(Error::InvalidRanking("empty tie group".into()));
        }
        let mut all: Vec<usize> = groups.iter().flatten().copied().collect();
        if all.len() < 2 {
            return Err(Error::InvalidRanking(format!(
                "need at least 2 items, got {}",
                all.len()
            )));
        }
        all.sort_unstable();
        if all.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidRanking("duplicate item".into()));
        }
        Ok(RawRankingWithTies { groups })
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn num_items(&self) -> usize {
        self.groups.iter().map(|g| g.len()).sum()
    }

    /// Number of linear extensions: the product of group factorials.
    pub fn extension_count(&self) -> f64 {
        self.groups
            .iter()
            .map(|g| (1..=g.len()).map(|i| i as f64).product::<f64>())
            .product()
    }
}

/// Expands a tied ranking into weighted strict rankings. When the number of
/// linear extensions is at most `max_expand` all of them are enumerated with
/// weight 1/count; otherwise `max_expand` extensions are sampled uniformly
/// with weight 1/max_expand, so the weights always sum to 1.
pub fn break_ties<R: Rng + ?Sized>(
    raw: &RawRankingWithTies,
    max_expand: usize,
    rng: &mut R,
) -> Result<Vec<(Ranking, f64)>> {
    if max_expand == 0 {
        return Err(Error::param("max_expand", "must be at least 1"));
    }
    let count = raw.extension_count();
    let mut out = Vec::new();
    if count <= max_expand as f64 {
        let weight = 1.0 / count;
        let mut items = Vec::with_capacity(raw.num_items());
        enumerate_extensions(raw.groups(), 0, &mut items, weight, &mut out)?;
    } else {
        let weight = 1.0 / max_expand as f64;
        for _ in 0..max_expand {
            let mut items = Vec::with_capacity(raw.num_items());
            for g in raw.groups() {
                let mut g = g.clone();
                g.shuffle(rng);
                items.extend_from_slice(&g);
            }
            out.push((Ranking::new(items)?, weight));
        }
    }
    Ok(out)
}

fn enumerate_extensions(
    groups: &[Vec<usize>],
    depth: usize,
    prefix: &mut Vec<usize>,
    weight: f64,
    out: &mut Vec<(Ranking, f64)>,
) -> Result<()> {
    if depth == groups.len() {
        out.push((Ranking::new(prefix.clone())?, weight));
        return Ok(());
    }
    use itertools::Itertools;
    let g = &groups[depth];
    for perm in g.iter().copied().permutations(g.len()) {
        let keep = prefix.len();
        prefix.extend_from_slice(&perm);
        enumerate_extensions(groups, depth + 1, prefix, weight, out)?;
        prefix.truncate(keep);
    }
    Ok(())
}
