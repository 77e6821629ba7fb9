//! Triple storage: vocabularies, splits, reverse augmentation, and the
//! filter/count indexes used at evaluation time.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Suffix appended to a relation name to form its reverse relation.
pub const REVERSE_SUFFIX: &str = "_Reverse";

/// A `(head, relation, tail)` triple of names as read from a file.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RawTriple {
    pub head: String,
    pub relation: String,
    pub tail: String,
}

impl RawTriple {
    pub fn new(head: &str, relation: &str, tail: &str) -> Self {
        RawTriple {
            head: head.to_string(),
            relation: relation.to_string(),
            tail: tail.to_string(),
        }
    }
}

/// A triple of dense ids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Triple {
    pub head: u32,
    pub relation: u32,
    pub tail: u32,
}

impl Triple {
    pub const fn new(head: u32, relation: u32, tail: u32) -> Self {
        Triple {
            head,
            relation,
            tail,
        }
    }

    #[inline]
    pub fn h(&self) -> usize {
        self.head as usize
    }

    #[inline]
    pub fn r(&self) -> usize {
        self.relation as usize
    }

    #[inline]
    pub fn t(&self) -> usize {
        self.tail as usize
    }
}

/// Parses tab-separated `head\trelation\ttail` lines. Blank lines are skipped;
/// line numbers in errors are 1-based.
pub fn parse_triples(text: &str) -> Result<Vec<RawTriple>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.strip_suffix('\r').unwrap_or(line);
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 || fields.iter().any(|f| f.is_empty()) {
            return Err(Error::MalformedLine {
                line: i + 1,
                found: fields.len(),
            });
        }
        out.push(RawTriple::new(fields[0], fields[1], fields[2]));
    }
    if out.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(out)
}

/// Ordered name vocabulary with dense ids assigned by first insertion.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocab {
    names: Vec<String>,
    index: BTreeMap<String, u32>,
}

impl Vocab {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the id of `name`, inserting it if unseen.
    pub fn intern(&mut self, name: &str) -> u32 {
        if let Some(&id) = self.index.get(name) {
            return id;
        }
        let id = self.names.len() as u32;
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), id);
        id
    }

    pub fn get(&self, name: &str) -> Option<u32> {
        self.index.get(name).copied()
    }

    pub fn name(&self, id: u32) -> Option<&str> {
        self.names.get(id as usize).map(String::as_str)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// Rebuilds a vocabulary from an ordered name list; duplicates are rejected.
    pub fn from_names(names: Vec<String>) -> Result<Self> {
        let mut vocab = Vocab::new();
        for name in &names {
            if vocab.get(name).is_some() {
                return Err(Error::InvalidConfig(alloc::format!(
                    "duplicate vocabulary entry {name:?}"
                )));
            }
            vocab.intern(name);
        }
        Ok(vocab)
    }
}

/// Which split a triple list belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Valid,
    Test,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TripleStore {
    pub entities: Vocab,
    pub relations: Vocab,
    pub train: Vec<Triple>,
    pub valid: Vec<Triple>,
    pub test: Vec<Triple>,
    augmented: bool,
    raw_relation_count: usize,
}

impl TripleStore {
    /// Builds vocabularies over train, valid and test (in that order, first
    /// occurrence wins) and converts every split to ids. Repeated triples
    /// inside one split are dropped with a warning.
    pub fn build(train: &[RawTriple], valid: &[RawTriple], test: &[RawTriple]) -> Self {
        let mut entities = Vocab::new();
        let mut relations = Vocab::new();
        let mut convert = |split: &[RawTriple], name: &str| -> Vec<Triple> {
            let mut seen = BTreeSet::new();
            let mut out = Vec::with_capacity(split.len());
            let mut dropped = 0usize;
            for raw in split {
                let head = entities.intern(&raw.head);
                let relation = relations.intern(&raw.relation);
                let tail = entities.intern(&raw.tail);
                let triple = Triple::new(head, relation, tail);
                if seen.insert(triple) {
                    out.push(triple);
                } else {
                    dropped += 1;
                }
            }
            if dropped > 0 {
                log::warn!("dropped {dropped} duplicate triples from {name} split");
            }
            out
        };
        let train = convert(train, "train");
        let valid = convert(valid, "valid");
        let test = convert(test, "test");
        let raw_relation_count = relations.len();
        TripleStore {
            entities,
            relations,
            train,
            valid,
            test,
            augmented: false,
            raw_relation_count,
        }
    }

    /// Reassembles a store from already-assigned vocabularies and id triples.
    pub fn from_parts(
        entities: Vocab,
        relations: Vocab,
        splits: [Vec<Triple>; 3],
        augmented: bool,
    ) -> Result<Self> {
        let raw_relation_count = if augmented {
            if relations.len() % 2 != 0 {
                return Err(Error::InvalidConfig(
                    "augmented store must have an even relation count".into(),
                ));
            }
            relations.len() / 2
        } else {
            relations.len()
        };
        let [train, valid, test] = splits;
        let store = TripleStore {
            entities,
            relations,
            train,
            valid,
            test,
            augmented,
            raw_relation_count,
        };
        for t in store.all_triples() {
            store.check_triple(t)?;
        }
        Ok(store)
    }

    pub fn num_entities(&self) -> usize {
        self.entities.len()
    }

    pub fn num_relations(&self) -> usize {
        self.relations.len()
    }

    pub fn raw_relation_count(&self) -> usize {
        self.raw_relation_count
    }

    pub fn is_augmented(&self) -> bool {
        self.augmented
    }

    pub fn split(&self, split: Split) -> &[Triple] {
        match split {
            Split::Train => &self.train,
            Split::Valid => &self.valid,
            Split::Test => &self.test,
        }
    }

    pub fn all_triples(&self) -> impl Iterator<Item = &Triple> {
        self.train.iter().chain(&self.valid).chain(&self.test)
    }

    pub fn check_triple(&self, t: &Triple) -> Result<()> {
        let ne = self.num_entities();
        let nr = self.num_relations();
        if t.h() >= ne {
            return Err(Error::entity(t.h(), ne));
        }
        if t.t() >= ne {
            return Err(Error::entity(t.t(), ne));
        }
        if t.r() >= nr {
            return Err(Error::relation(t.r(), nr));
        }
        Ok(())
    }

    /// The reverse of relation `r` in an augmented store.
    pub fn reverse_of(&self, r: u32) -> u32 {
        let raw = self.raw_relation_count as u32;
        if r < raw {
            r + raw
        } else {
            r - raw
        }
    }

    /// Appends `r⁻¹` (named `r` + [`REVERSE_SUFFIX`]) for every relation and
    /// `(t, r⁻¹, h)` for every triple of each split.
    pub fn augment_reverse(&mut self) -> Result<()> {
        if self.augmented {
            return Err(Error::AlreadyAugmented);
        }
        let raw = self.relations.len();
        let reversed: Vec<String> = self
            .relations
            .names()
            .iter()
            .map(|n| alloc::format!("{n}{REVERSE_SUFFIX}"))
            .collect();
        for name in &reversed {
            if self.relations.get(name).is_some() {
                return Err(Error::ReverseNameCollision(name.clone()));
            }
        }
        for name in &reversed {
            self.relations.intern(name);
        }
        for split in [&mut self.train, &mut self.valid, &mut self.test] {
            let extra: Vec<Triple> = split
                .iter()
                .map(|t| Triple::new(t.tail, t.relation + raw as u32, t.head))
                .collect();
            split.extend(extra);
        }
        self.raw_relation_count = raw;
        self.augmented = true;
        Ok(())
    }

    /// Convenience: build, then augment.
    pub fn build_augmented(
        train: &[RawTriple],
        valid: &[RawTriple],
        test: &[RawTriple],
    ) -> Result<Self> {
        let mut store = Self::build(train, valid, test);
        store.augment_reverse()?;
        Ok(store)
    }

    pub fn filter_index(&self) -> FilterIndex {
        FilterIndex::build(self)
    }

    pub fn count_index(&self) -> CountIndex {
        CountIndex::build(&self.train)
    }
}

/// Known true tails for every `(head, relation)` over all splits.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FilterIndex {
    tails: BTreeMap<(u32, u32), Vec<u32>>,
}

impl FilterIndex {
    pub fn build(store: &TripleStore) -> Self {
        let mut sets: BTreeMap<(u32, u32), BTreeSet<u32>> = BTreeMap::new();
        for t in store.all_triples() {
            sets.entry((t.head, t.relation)).or_default().insert(t.tail);
        }
        FilterIndex {
            tails: sets
                .into_iter()
                .map(|(k, v)| (k, v.into_iter().collect()))
                .collect(),
        }
    }

    /// Sorted true tails for `(head, relation)`; empty when unknown.
    pub fn tails(&self, head: u32, relation: u32) -> &[u32] {
        self.tails
            .get(&(head, relation))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn contains(&self, head: u32, relation: u32, tail: u32) -> bool {
        self.tails(head, relation).binary_search(&tail).is_ok()
    }
}

/// Training-set co-occurrence counts feeding the adaptive weights.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CountIndex {
    rt: BTreeMap<(u32, u32), u32>,
    ht: BTreeMap<(u32, u32), u32>,
    t: BTreeMap<u32, u32>,
}

impl CountIndex {
    pub fn build(train: &[Triple]) -> Self {
        let mut idx = CountIndex::default();
        for tr in train {
            *idx.rt.entry((tr.relation, tr.tail)).or_default() += 1;
            *idx.ht.entry((tr.head, tr.tail)).or_default() += 1;
            *idx.t.entry(tr.tail).or_default() += 1;
        }
        idx
    }

    /// `|{(h_i, r, t) ∈ train}|`
    pub fn rt_count(&self, relation: u32, tail: u32) -> u32 {
        self.rt.get(&(relation, tail)).copied().unwrap_or(0)
    }

    /// `|{(h, r_i, t) ∈ train}|`
    pub fn ht_count(&self, head: u32, tail: u32) -> u32 {
        self.ht.get(&(head, tail)).copied().unwrap_or(0)
    }

    /// `|{(h_i, r_i, t) ∈ train}|`
    pub fn t_count(&self, tail: u32) -> u32 {
        self.t.get(&tail).copied().unwrap_or(0)
    }

    pub fn totals(&self) -> (u64, u64, u64) {
        let sum = |it: &mut dyn Iterator<Item = &u32>| it.map(|&c| c as u64).sum::<u64>();
        (sum(&mut self.rt.values()), sum(&mut self.ht.values()), sum(&mut self.t.values()))
    }
}
