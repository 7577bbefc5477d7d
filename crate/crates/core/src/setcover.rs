//! Set cover as a refinement-worklist problem.
//!
//! A set cover instance (S, U) becomes a colored graph with one class X
//! holding the elements of S plus `dummy_count` dummy elements, and one
//! singleton class per subset U, joined to every vertex of X outside U.
//! Separating the elements of S from the dummies needs a cover's worth of
//! subsets as splitters, and each of them pays about `dummy_count`.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap, HashMap};

use crate::graph::{ColoredGraph, Vertex};
use crate::partition::{naive_stable, ClassId, Partition};
use crate::refine::{split_class, RefineError, RefinementReport, SplitStep};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SetCoverError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("the universe is empty")]
    EmptyUniverse,
    #[error("subset {0} is empty")]
    EmptySubset(usize),
    #[error("subset {index} uses element `{element}` outside the universe")]
    UnknownElement { index: usize, element: String },
    #[error("the subsets do not cover element `{0}`")]
    Uncovered(String),
    #[error("dummy count must be at least 1")]
    NoDummies,
    #[error("step {step}: the {role} set is not a union of current classes")]
    NotAUnion { step: usize, role: &'static str },
    #[error("sequence ends before the stable partition (cost so far {cost})")]
    Incomplete { cost: u64 },
    #[error("brute force limited to {limit} subsets, got {count}")]
    TooManySubsets { count: usize, limit: usize },
    #[error("search exceeded {0} states")]
    SearchBudget(usize),
    #[error(transparent)]
    Refine(#[from] RefineError),
}

/// A universe and subsets covering it. Elements are arbitrary tokens.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SetCoverInstance {
    pub universe: Vec<String>,
    pub subsets: Vec<Vec<String>>,
}

impl SetCoverInstance {
    pub fn new(universe: Vec<String>, subsets: Vec<Vec<String>>) -> Result<Self, SetCoverError> {
        let instance = SetCoverInstance { universe, subsets };
        instance.validate()?;
        Ok(instance)
    }

    /// Convenience constructor from string slices.
    pub fn from_strs(universe: &[&str], subsets: &[&[&str]]) -> Result<Self, SetCoverError> {
        let own = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect::<Vec<_>>();
        Self::new(own(universe), subsets.iter().map(|s| own(s)).collect())
    }

    fn validate(&self) -> Result<(), SetCoverError> {
        if self.universe.is_empty() {
            return Err(SetCoverError::EmptyUniverse);
        }
        let universe: BTreeSet<&String> = self.universe.iter().collect();
        let mut covered = BTreeSet::new();
        for (i, s) in self.subsets.iter().enumerate() {
            if s.is_empty() {
                return Err(SetCoverError::EmptySubset(i));
            }
            for e in s {
                if !universe.contains(e) {
                    return Err(SetCoverError::UnknownElement { index: i, element: e.clone() });
                }
                covered.insert(e);
            }
        }
        match self.universe.iter().find(|e| !covered.contains(e)) {
            Some(e) => Err(SetCoverError::Uncovered(e.clone())),
            None => Ok(()),
        }
    }

    /// Parses `u <e...>` and `s <e...>` lines; `#` starts a comment line.
    pub fn parse(text: &str) -> Result<Self, SetCoverError> {
        let mut universe = None;
        let mut subsets = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut tokens = line.split_whitespace();
            let tag = tokens.next().unwrap_or_default();
            let items: Vec<String> = tokens.map(str::to_string).collect();
            match tag {
                "u" if universe.is_none() => universe = Some(items),
                "u" => {
                    return Err(SetCoverError::Parse { line: i + 1, message: "second universe line".into() });
                }
                "s" => subsets.push(items),
                other => {
                    return Err(SetCoverError::Parse { line: i + 1, message: format!("unknown tag `{other}`") });
                }
            }
        }
        let universe = universe.ok_or(SetCoverError::EmptyUniverse)?;
        Self::new(universe, subsets)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("u {}\n", self.universe.join(" "));
        for s in &self.subsets {
            out.push_str(&format!("s {}\n", s.join(" ")));
        }
        out
    }

    /// |S| plus the total size of the subsets.
    pub fn size(&self) -> usize {
        self.universe.len() + self.subsets.iter().map(Vec::len).sum::<usize>()
    }

    /// The default dummy count, size².
    pub fn default_dummies(&self) -> usize {
        self.size() * self.size()
    }

    /// Subsets as bitmasks over universe positions.
    fn masks(&self) -> Vec<u64> {
        let index: HashMap<&String, usize> = self.universe.iter().enumerate().map(|(i, e)| (e, i)).collect();
        self.subsets
            .iter()
            .map(|s| s.iter().fold(0u64, |m, e| m | 1 << index[e]))
            .collect()
    }
}

/// The reduction graph and where everything lives in it.
#[derive(Debug, Clone)]
pub struct Reduction {
    pub graph: ColoredGraph,
    /// Vertex of each universe element, in universe order.
    pub elements: Vec<Vertex>,
    pub dummies: Vec<Vertex>,
    /// Vertex of each subset, in instance order.
    pub subsets: Vec<Vertex>,
}

impl Reduction {
    /// All of X: elements, then dummies.
    pub fn x(&self) -> Vec<Vertex> {
        self.elements.iter().chain(&self.dummies).copied().collect()
    }
}

/// Builds the reduction graph. Layout: elements, dummies, then subsets. X
/// has color 0 and subset i has color i + 1.
pub fn reduce_setcover(instance: &SetCoverInstance, dummy_count: usize) -> Result<Reduction, SetCoverError> {
    instance.validate()?;
    if dummy_count == 0 {
        return Err(SetCoverError::NoDummies);
    }
    let s = instance.universe.len() as Vertex;
    let d = dummy_count as Vertex;
    let elements: Vec<Vertex> = (0..s).collect();
    let dummies: Vec<Vertex> = (s..s + d).collect();
    let subsets: Vec<Vertex> = (s + d..s + d + instance.subsets.len() as Vertex).collect();
    let mut edges = Vec::new();
    for (&u, mask) in subsets.iter().zip(instance.masks()) {
        for x in 0..s + d {
            if x >= s || mask >> x & 1 == 0 {
                edges.push((u, x));
            }
        }
    }
    let n = (s + d) as usize + subsets.len();
    let mut colors = vec![0u32; n];
    for (i, &u) in subsets.iter().enumerate() {
        colors[u as usize] = i as u32 + 1;
    }
    let graph = ColoredGraph::new(n, &edges, &colors).expect("reduction graph is simple");
    Ok(Reduction { graph, elements, dummies, subsets })
}

/// One refinement of `target` with respect to `splitter`, both vertex sets
/// that must be unions of classes when the step is applied.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SequencePair {
    pub splitter: Vec<Vertex>,
    pub target: Vec<Vertex>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct WorklistSequence {
    pub pairs: Vec<SequencePair>,
    pub cost: u64,
}

/// Class ids whose union is exactly `set`, or `None`.
fn as_union(partition: &Partition, set: &[Vertex]) -> Option<Vec<ClassId>> {
    let members: BTreeSet<Vertex> = set.iter().copied().collect();
    let classes: BTreeSet<ClassId> = members.iter().map(|&v| partition.class_of(v)).collect();
    let covered: usize = classes.iter().map(|&c| partition.class_size(c)).sum();
    (covered == members.len() && !members.is_empty()).then(|| classes.into_iter().collect())
}

/// Applies the sequence with union semantics and checks that it ends in the
/// stable partition of `initial`.
pub fn eval_sequence(
    graph: &ColoredGraph,
    initial: &Partition,
    sequence: &[SequencePair],
) -> Result<RefinementReport, SetCoverError> {
    let mut partition = initial.clone();
    let mut steps = Vec::with_capacity(sequence.len());
    let mut total = 0;
    for (i, pair) in sequence.iter().enumerate() {
        let splitter = as_union(&partition, &pair.splitter)
            .ok_or(SetCoverError::NotAUnion { step: i, role: "splitter" })?;
        let target =
            as_union(&partition, &pair.target).ok_or(SetCoverError::NotAUnion { step: i, role: "target" })?;
        let (fragments, cost) = split_class(graph, &mut partition, &target, &splitter)?;
        total += cost;
        steps.push(SplitStep { splitter, target, fragments, edge_cost: cost, round: 0, pairwise: false });
    }
    if !partition.same_classes(&naive_stable(graph, initial)) {
        return Err(SetCoverError::Incomplete { cost: total });
    }
    Ok(RefinementReport {
        strategy: "sequence".to_string(),
        n: graph.vertex_count(),
        m: graph.edge_count(),
        step_count: steps.len(),
        steps,
        total_cost: total,
        final_partition: partition,
        extractions: Vec::new(),
    })
}

/// Upper bound on explored partitions in [`brute_force_optimal_sequence`].
pub const SEARCH_STATE_LIMIT: usize = 200_000;

/// Minimum-cost complete sequence by uniform-cost search over partitions.
/// Splitters and targets range over single classes and the union of all
/// classes; sequences longer than `depth_bound` are not considered.
pub fn brute_force_optimal_sequence(
    graph: &ColoredGraph,
    initial: &Partition,
    depth_bound: usize,
) -> Result<WorklistSequence, SetCoverError> {
    let goal = naive_stable(graph, initial).canonical_labels();
    let all: Vec<Vertex> = (0..graph.vertex_count() as Vertex).collect();
    let mut states: Vec<(Partition, usize)> = vec![(initial.clone(), 0)];
    let mut parent: Vec<Option<(usize, SequencePair)>> = vec![None];
    let mut best: Vec<u64> = vec![0];
    let mut index: HashMap<Vec<u32>, usize> = HashMap::from([(initial.canonical_labels(), 0)]);
    let mut heap = BinaryHeap::from([Reverse((0u64, 0usize))]);
    while let Some(Reverse((cost, id))) = heap.pop() {
        if cost > best[id] {
            continue;
        }
        let (partition, depth) = states[id].clone();
        if partition.canonical_labels() == goal {
            let mut pairs = Vec::new();
            let mut at = id;
            while let Some((prev, pair)) = parent[at].clone() {
                pairs.push(pair);
                at = prev;
            }
            pairs.reverse();
            return Ok(WorklistSequence { pairs, cost });
        }
        if depth >= depth_bound {
            continue;
        }
        let mut choices: Vec<Vec<Vertex>> = partition.classes();
        if choices.len() > 1 {
            choices.push(all.clone());
        }
        for splitter in &choices {
            for target in &choices {
                let mut next = partition.clone();
                let s = as_union(&next, splitter).expect("class union");
                let t = as_union(&next, target).expect("class union");
                let (_, step_cost) = split_class(graph, &mut next, &t, &s)?;
                if next.class_count() == partition.class_count() {
                    continue;
                }
                let total = cost + step_cost;
                let key = next.canonical_labels();
                let pair = SequencePair { splitter: splitter.clone(), target: target.clone() };
                match index.get(&key) {
                    Some(&j) if best[j] <= total => {}
                    Some(&j) => {
                        best[j] = total;
                        parent[j] = Some((id, pair));
                        states[j].1 = depth + 1;
                        heap.push(Reverse((total, j)));
                    }
                    None => {
                        if states.len() >= SEARCH_STATE_LIMIT {
                            return Err(SetCoverError::SearchBudget(SEARCH_STATE_LIMIT));
                        }
                        let j = states.len();
                        index.insert(key, j);
                        states.push((next, depth + 1));
                        parent.push(Some((id, pair)));
                        best.push(total);
                        heap.push(Reverse((total, j)));
                    }
                }
            }
        }
    }
    Err(SetCoverError::Incomplete { cost: 0 })
}

/// Largest subset count accepted by [`brute_force_setcover`].
pub const BRUTE_FORCE_SUBSET_LIMIT: usize = 20;

/// Exact minimum cover size.
pub fn brute_force_setcover(instance: &SetCoverInstance) -> Result<usize, SetCoverError> {
    let count = instance.subsets.len();
    if count > BRUTE_FORCE_SUBSET_LIMIT {
        return Err(SetCoverError::TooManySubsets { count, limit: BRUTE_FORCE_SUBSET_LIMIT });
    }
    instance.validate()?;
    let masks = instance.masks();
    let full = (1u64 << instance.universe.len()) - 1;
    (1u32..1 << count)
        .filter(|choice| {
            let union = (0..count).filter(|i| choice >> i & 1 == 1).fold(0, |m, i| m | masks[i]);
            union == full
        })
        .map(|choice| choice.count_ones() as usize)
        .min()
        .ok_or(SetCoverError::Uncovered(String::new()))
}

/// Greedy cover: repeatedly the subset covering most uncovered elements,
/// lowest index on ties. Returns subset indices in pick order.
pub fn greedy_setcover(instance: &SetCoverInstance) -> Vec<usize> {
    let masks = instance.masks();
    let full = (1u64 << instance.universe.len()) - 1;
    let mut covered = 0u64;
    let mut picks = Vec::new();
    while covered != full {
        let (best, gain) = masks
            .iter()
            .enumerate()
            .map(|(i, m)| (i, (m & !covered).count_ones()))
            .fold((0, 0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if gain == 0 {
            break;
        }
        covered |= masks[best];
        picks.push(best);
    }
    picks
}

/// Outcome of comparing the optimal sequence cost against the cover size.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BracketCheck {
    pub n_star: usize,
    pub greedy_size: usize,
    pub dummies: usize,
    pub optimal: WorklistSequence,
    /// ⌊optimal cost / dummies⌋.
    pub quotient: u64,
    /// Whether the quotient lies in [N*, N* + 3].
    pub within: bool,
}

/// Allowed excess of ⌊cost / dummies⌋ over the optimal cover size.
pub const BRACKET_SLACK: u64 = 3;

pub fn check_bracket(instance: &SetCoverInstance, dummies: usize) -> Result<BracketCheck, SetCoverError> {
    let reduction = reduce_setcover(instance, dummies)?;
    let g = &reduction.graph;
    let initial = g.initial_partition();
    let depth_bound = naive_stable(g, &initial).class_count() + instance.subsets.len() + 1;
    let optimal = brute_force_optimal_sequence(g, &initial, depth_bound)?;
    let n_star = brute_force_setcover(instance)?;
    let quotient = optimal.cost / dummies as u64;
    Ok(BracketCheck {
        n_star,
        greedy_size: greedy_setcover(instance).len(),
        dummies,
        within: (n_star as u64..=n_star as u64 + BRACKET_SLACK).contains(&quotient),
        quotient,
        optimal,
    })
}

/// All instances with universe {0..s} and up to `max_subsets` distinct
/// nonempty subsets whose union is the universe.
pub fn enumerate_instances(s: usize, max_subsets: usize) -> Vec<SetCoverInstance> {
    let universe: Vec<String> = (0..s).map(|e| e.to_string()).collect();
    let full = (1u32 << s) - 1;
    let masks: Vec<u32> = (1..=full).collect();
    let mut out = Vec::new();
    let mut chosen = Vec::new();
    fn rec(masks: &[u32], start: usize, max: usize, full: u32, chosen: &mut Vec<u32>, found: &mut Vec<Vec<u32>>) {
        if !chosen.is_empty() && chosen.iter().fold(0, |a, m| a | m) == full {
            found.push(chosen.clone());
        }
        if chosen.len() == max {
            return;
        }
        for i in start..masks.len() {
            chosen.push(masks[i]);
            rec(masks, i + 1, max, full, chosen, found);
            chosen.pop();
        }
    }
    let mut found = Vec::new();
    rec(&masks, 0, max_subsets, full, &mut chosen, &mut found);
    for choice in found {
        let subsets = choice
            .iter()
            .map(|m| (0..s).filter(|e| m >> e & 1 == 1).map(|e| e.to_string()).collect())
            .collect();
        out.push(SetCoverInstance::new(universe.clone(), subsets).expect("enumerated instances cover"));
    }
    out
}
