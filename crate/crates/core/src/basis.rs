//! Finite filtered probability spaces.
//!
//! σ-algebras are stored as their atom partitions. Each tick `k >= 1` carries
//! a left-limit partition `F_{k-}` and the partition `F_k`; tick 0 carries a
//! single partition `F_0` which doubles as `F_{0-}`.

use std::collections::{BTreeMap, HashSet};

use num::{Signed, Zero};

use crate::error::{Error, Result};
use crate::process::StoppingTime;
use crate::rational::{one, Q};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SampleSpace {
    labels: Vec<String>,
    prob: Vec<Q>,
}

impl SampleSpace {
    /// Builds a space, rejecting duplicate labels, non-positive masses and
    /// masses that do not sum to one.
    pub fn new(labels: Vec<String>, prob: Vec<Q>) -> Result<Self> {
        let s = Self::new_unchecked(labels, prob);
        s.check()?;
        Ok(s)
    }

    pub fn new_unchecked(labels: Vec<String>, prob: Vec<Q>) -> Self {
        SampleSpace { labels, prob }
    }

    pub fn uniform(n: usize) -> Self {
        let labels = (1..=n).map(|i| format!("w{i}")).collect();
        let p = Q::new(1.into(), (n as i64).into());
        SampleSpace {
            labels,
            prob: vec![p; n],
        }
    }

    /// Space with labels `w1..wn` and the given weights normalised to one.
    pub fn from_weights(weights: &[u64]) -> Result<Self> {
        let total: u64 = weights.iter().sum();
        if total == 0 {
            return Err(Error::BadProbability("zero total weight".into()));
        }
        let labels = (1..=weights.len()).map(|i| format!("w{i}")).collect();
        let prob = weights
            .iter()
            .map(|&w| Q::new((w as i64).into(), (total as i64).into()))
            .collect();
        Self::new(labels, prob)
    }

    fn check(&self) -> Result<()> {
        if self.labels.is_empty() {
            return Err(Error::BadProbability("empty sample space".into()));
        }
        if self.labels.len() != self.prob.len() {
            return Err(Error::BadProbability(format!(
                "{} labels but {} probabilities",
                self.labels.len(),
                self.prob.len()
            )));
        }
        let mut seen = HashSet::new();
        for l in &self.labels {
            if !seen.insert(l) {
                return Err(Error::BadProbability(format!("duplicate outcome label {l:?}")));
            }
        }
        if let Some(i) = self.prob.iter().position(|p| !p.is_positive()) {
            return Err(Error::BadProbability(format!(
                "outcome {:?} has non-positive mass {}",
                self.labels[i], self.prob[i]
            )));
        }
        let total: Q = self.prob.iter().sum();
        if total != one() {
            return Err(Error::BadProbability(format!("masses sum to {total}")));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn prob(&self, w: usize) -> &Q {
        &self.prob[w]
    }

    pub fn probs(&self) -> &[Q] {
        &self.prob
    }

    pub fn label(&self, w: usize) -> &str {
        &self.labels[w]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn mass(&self, set: &[usize]) -> Q {
        set.iter().map(|&w| &self.prob[w]).sum()
    }

    pub fn expectation(&self, xi: &[Q]) -> Q {
        xi.iter().zip(&self.prob).map(|(x, p)| x * p).sum()
    }
}

/// A partition of the outcome indices `0..n` into nonempty blocks.
///
/// Blocks are kept sorted internally and ordered by their smallest outcome,
/// so two equal partitions always compare equal.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Partition {
    blocks: Vec<Vec<usize>>,
    block_of: Vec<usize>,
}

impl Partition {
    pub fn new(n: usize, blocks: Vec<Vec<usize>>) -> Result<Self> {
        let mut block_of = vec![usize::MAX; n];
        let mut blocks: Vec<Vec<usize>> = blocks
            .into_iter()
            .map(|mut b| {
                b.sort_unstable();
                b
            })
            .collect();
        if blocks.iter().any(Vec::is_empty) {
            return Err(Error::BadPartition("empty block".into()));
        }
        blocks.sort_by_key(|b| b[0]);
        for (i, b) in blocks.iter().enumerate() {
            for &w in b {
                if w >= n {
                    return Err(Error::BadPartition(format!("outcome {w} out of range")));
                }
                if block_of[w] != usize::MAX {
                    return Err(Error::BadPartition(format!("outcome {w} in two blocks")));
                }
                block_of[w] = i;
            }
        }
        if let Some(w) = block_of.iter().position(|&b| b == usize::MAX) {
            return Err(Error::BadPartition(format!("outcome {w} not covered")));
        }
        Ok(Partition { blocks, block_of })
    }

    pub fn trivial(n: usize) -> Self {
        Partition {
            blocks: vec![(0..n).collect()],
            block_of: vec![0; n],
        }
    }

    pub fn discrete(n: usize) -> Self {
        Partition {
            blocks: (0..n).map(|w| vec![w]).collect(),
            block_of: (0..n).collect(),
        }
    }

    /// Partition into the level sets of `key`.
    pub fn from_key<K: Ord>(n: usize, key: impl Fn(usize) -> K) -> Self {
        let mut groups: BTreeMap<K, Vec<usize>> = BTreeMap::new();
        for w in 0..n {
            groups.entry(key(w)).or_default().push(w);
        }
        Partition::new(n, groups.into_values().collect()).expect("level sets form a partition")
    }

    pub fn len_outcomes(&self) -> usize {
        self.block_of.len()
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn block(&self, i: usize) -> &[usize] {
        &self.blocks[i]
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn block_of(&self, w: usize) -> usize {
        self.block_of[w]
    }

    /// True when every block of `self` sits inside one block of `coarser`.
    pub fn refines(&self, coarser: &Partition) -> bool {
        self.len_outcomes() == coarser.len_outcomes()
            && self.blocks.iter().all(|b| {
                let target = coarser.block_of[b[0]];
                b.iter().all(|&w| coarser.block_of[w] == target)
            })
    }

    /// Coarsest common refinement (the join of the two σ-algebras).
    pub fn meet(&self, other: &Partition) -> Partition {
        assert_eq!(self.len_outcomes(), other.len_outcomes());
        Partition::from_key(self.len_outcomes(), |w| (self.block_of[w], other.block_of[w]))
    }

    /// Blocks of `finer` contained in block `i` of `self`, ordered by their
    /// smallest outcome.
    pub fn children(&self, i: usize, finer: &Partition) -> Vec<usize> {
        let mut kids: Vec<usize> = self.blocks[i].iter().map(|&w| finer.block_of[w]).collect();
        kids.sort_unstable_by_key(|&b| finer.blocks[b][0]);
        kids.dedup();
        kids
    }

    /// True when `xi` is constant on every block.
    pub fn is_measurable(&self, xi: &[Q]) -> bool {
        self.blocks
            .iter()
            .all(|b| b.iter().all(|&w| xi[w] == xi[b[0]]))
    }

    /// True when `set` is a union of blocks.
    pub fn contains_set(&self, set: &[bool]) -> bool {
        self.blocks
            .iter()
            .all(|b| b.iter().all(|&w| set[w] == set[b[0]]))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TickPartitions {
    pub pre: Partition,
    pub at: Partition,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Filtration {
    initial: Partition,
    ticks: Vec<TickPartitions>,
}

impl Filtration {
    /// Builds a filtration and checks the refinement chain
    /// `F_0 ⪯ F_{1-} ⪯ F_1 ⪯ … ⪯ F_K`.
    pub fn new(initial: Partition, ticks: Vec<TickPartitions>) -> Result<Self> {
        let f = Self::new_unchecked(initial, ticks);
        f.check_chain()?;
        Ok(f)
    }

    pub fn new_unchecked(initial: Partition, ticks: Vec<TickPartitions>) -> Self {
        Filtration { initial, ticks }
    }

    /// The filtration generated by a chain of `F_k` partitions with
    /// `F_{k-} = F_{k-1}` (no information arrives strictly between ticks).
    pub fn from_levels(initial: Partition, levels: Vec<Partition>) -> Result<Self> {
        let mut prev = initial.clone();
        let mut ticks = Vec::with_capacity(levels.len());
        for at in levels {
            ticks.push(TickPartitions {
                pre: prev.clone(),
                at: at.clone(),
            });
            prev = at;
        }
        Self::new(initial, ticks)
    }

    fn check_chain(&self) -> Result<()> {
        let n = self.initial.len_outcomes();
        let mut prev = &self.initial;
        for (i, t) in self.ticks.iter().enumerate() {
            let k = i + 1;
            if t.pre.len_outcomes() != n || t.at.len_outcomes() != n {
                return Err(Error::RefinementBroken { tick: k });
            }
            if !t.pre.refines(prev) || !t.at.refines(&t.pre) {
                return Err(Error::RefinementBroken { tick: k });
            }
            prev = &t.at;
        }
        Ok(())
    }

    /// Number of ticks `K`.
    pub fn horizon(&self) -> usize {
        self.ticks.len()
    }

    pub fn num_outcomes(&self) -> usize {
        self.initial.len_outcomes()
    }

    pub fn initial(&self) -> &Partition {
        &self.initial
    }

    pub fn ticks(&self) -> &[TickPartitions] {
        &self.ticks
    }

    /// `F_k`; `F_0` for `k = 0`.
    pub fn at(&self, k: usize) -> &Partition {
        if k == 0 {
            &self.initial
        } else {
            &self.ticks[k - 1].at
        }
    }

    /// `F_{k-}`; `F_0` for `k = 0`.
    pub fn pre(&self, k: usize) -> &Partition {
        if k == 0 {
            &self.initial
        } else {
            &self.ticks[k - 1].pre
        }
    }

    /// True when `self` is finer than `coarser` at every level, both at the
    /// ticks and at their left limits.
    pub fn contains(&self, coarser: &Filtration) -> bool {
        self.horizon() == coarser.horizon()
            && (0..=self.horizon()).all(|k| {
                self.at(k).refines(coarser.at(k)) && self.pre(k).refines(coarser.pre(k))
            })
    }
}

/// Checks every invariant of a basis: masses, partition sizes and the
/// refinement chain. Reports the first broken refinement pair.
pub fn validate(space: &SampleSpace, filt: &Filtration) -> Result<()> {
    space.check()?;
    if filt.num_outcomes() != space.len() {
        return Err(Error::BadPartition(format!(
            "filtration over {} outcomes, space has {}",
            filt.num_outcomes(),
            space.len()
        )));
    }
    filt.check_chain()
}

/// Probability-weighted block average of `xi`, as a function on outcomes.
pub fn cond_expect(space: &SampleSpace, partition: &Partition, xi: &[Q]) -> Vec<Q> {
    let mut out = vec![Q::zero(); xi.len()];
    for block in partition.blocks() {
        let v = block_average(space, block, xi);
        for &w in block {
            out[w] = v.clone();
        }
    }
    out
}

/// `E[xi | block]`.
pub fn block_average(space: &SampleSpace, block: &[usize], xi: &[Q]) -> Q {
    let mass = space.mass(block);
    let weighted: Q = block.iter().map(|&w| &xi[w] * space.prob(w)).sum();
    weighted / mass
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StoppingTimeClass {
    Predictable,
    /// On a finite tick grid every stopping time is accessible: its graph is
    /// covered by the deterministic (hence predictable) ticks.
    AccessibleNotPredictable,
}

/// Predictable iff `{S = k}` is an `F_{k-}` event for every tick.
pub fn classify_stopping_time(filt: &Filtration, s: &StoppingTime) -> Result<StoppingTimeClass> {
    s.check_stopping_time(filt)?;
    let predictable = (0..=filt.horizon()).all(|k| {
        let set: Vec<bool> = (0..filt.num_outcomes()).map(|w| s.value(w) == Some(k)).collect();
        filt.pre(k).contains_set(&set)
    });
    Ok(if predictable {
        StoppingTimeClass::Predictable
    } else {
        StoppingTimeClass::AccessibleNotPredictable
    })
}
