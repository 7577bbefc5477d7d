//! Refinement drivers with exact split-cost accounting.
//!
//! [`refine_worklist`] is the cell-extraction driver: every extracted cell C
//! splits each cell containing a neighbor of C, withholds one largest
//! fragment, and queues the rest. [`refine_strategy`] lets a [`Strategy`]
//! pick arbitrary (splitter union, target union) pairs until the partition is
//! equitable.
//!
//! The cost of refining X with respect to C is the number of distinct edges
//! with one endpoint in X and the other in C, charged whether or not X splits.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::graph::{ColoredGraph, Vertex};
use crate::partition::{ClassId, Partition};
use crate::worklist::{PolicyKind, Worklist};

/// One refinement of a target union with respect to a splitter union.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitStep {
    /// Classes whose union formed the splitter at the time of the step.
    pub splitter: Vec<ClassId>,
    /// Target classes, ascending. Worklist runs always have exactly one.
    pub target: Vec<ClassId>,
    /// Resulting classes. Each target contributes a group that starts with
    /// its own id, followed by its new fragments in key order.
    pub fragments: Vec<ClassId>,
    pub edge_cost: u64,
    /// Depth of the worklist entry that triggered the step (0 for strategy
    /// runs).
    pub round: u32,
    /// Every target class was split against every splitter class at once
    /// (a full 1-WL round) instead of against their union.
    pub pairwise: bool,
}

impl SplitStep {
    /// Fragment ids grouped by target class.
    pub fn fragment_groups(&self) -> Vec<&[ClassId]> {
        let mut groups = Vec::with_capacity(self.target.len());
        let mut rest = &self.fragments[..];
        for (i, _) in self.target.iter().enumerate() {
            let next = self.target.get(i + 1);
            let end = match next {
                Some(t) => rest.iter().position(|f| f == t).unwrap_or(rest.len()),
                None => rest.len(),
            };
            groups.push(&rest[..end]);
            rest = &rest[end..];
        }
        groups
    }

    /// True when at least one target split.
    pub fn is_productive(&self) -> bool {
        self.fragments.len() > self.target.len()
    }
}

/// A worklist extraction: the extracted class and its entry depth.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Extraction {
    pub class: ClassId,
    pub depth: u32,
    /// Number of split steps recorded before this extraction.
    pub first_step: usize,
}

/// Result of a refinement run.
#[derive(Debug, Clone)]
pub struct RefinementReport {
    /// Policy or strategy name.
    pub strategy: String,
    pub n: usize,
    pub m: usize,
    /// Recorded steps (empty when step recording is disabled).
    pub steps: Vec<SplitStep>,
    pub step_count: usize,
    pub total_cost: u64,
    pub final_partition: Partition,
    /// Worklist extractions in order (empty for strategy runs).
    pub extractions: Vec<Extraction>,
}

impl RefinementReport {
    /// Round index of every recorded step.
    pub fn rounds(&self) -> Vec<u32> {
        self.steps.iter().map(|s| s.round).collect()
    }

    pub fn cost_per_edge(&self) -> f64 {
        if self.m == 0 {
            0.0
        } else {
            self.total_cost as f64 / self.m as f64
        }
    }

    /// Structured text form with a fixed field order:
    ///
    /// ```text
    /// strategy <name>
    /// n <n>
    /// m <m>
    /// total_cost <cost>
    /// steps <count>
    /// step splitter=<ids> target=<ids> fragment_sizes=<sizes> edge_cost=<c> round=<r>
    /// ```
    ///
    /// Id and size lists are comma separated. Fragment sizes are recovered by
    /// replaying the trace from `initial`.
    pub fn to_text(&self, graph: &ColoredGraph, initial: &Partition) -> String {
        let mut out = String::new();
        writeln!(out, "strategy {}", self.strategy).unwrap();
        writeln!(out, "n {}", self.n).unwrap();
        writeln!(out, "m {}", self.m).unwrap();
        writeln!(out, "total_cost {}", self.total_cost).unwrap();
        writeln!(out, "steps {}", self.steps.len()).unwrap();
        let join = |xs: &mut dyn Iterator<Item = String>| xs.collect::<Vec<_>>().join(",");
        let mut replay = Replay::new(graph, initial.clone());
        for step in &self.steps {
            let (_, sizes) = replay.apply(step).expect("trace replays");
            writeln!(
                out,
                "step splitter={} target={} fragment_sizes={} edge_cost={} round={}",
                join(&mut step.splitter.iter().map(u32::to_string)),
                join(&mut step.target.iter().map(u32::to_string)),
                join(&mut sizes.iter().map(usize::to_string)),
                step.edge_cost,
                step.round
            )
            .unwrap();
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RefineError {
    #[error("class {0} does not exist")]
    DeadClass(ClassId),
    #[error("empty {0} union")]
    EmptyUnion(&'static str),
    #[error("step budget of {budget} exceeded by `{policy}`")]
    BudgetExceeded { policy: String, budget: usize },
    #[error("invalid strategy `{strategy}`: {reason}")]
    InvalidStrategy { strategy: String, reason: String },
    #[error(transparent)]
    Policy(#[from] crate::worklist::PolicyError),
}

/// A failed strategy run together with everything recorded before failure.
#[derive(Debug, Clone, thiserror::Error)]
#[error("{error}")]
pub struct StrategyFailure {
    pub error: RefineError,
    pub partial: RefinementReport,
}

/// Run configuration shared by both drivers.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Maximum number of split steps; `None` uses [`default_budget`].
    pub step_budget: Option<usize>,
    /// Skip storing steps (costs and extractions are still tracked).
    pub skip_steps: bool,
    /// Initial depth per initial class, for round diagnostics.
    pub initial_depths: Option<Vec<u32>>,
}

/// 10·(n+m)·(⌈log2 n⌉+2).
pub fn default_budget(n: usize, m: usize) -> usize {
    let log = if n <= 1 { 0 } else { (usize::BITS - (n - 1).leading_zeros()) as usize };
    10 * (n + m) * (log + 2)
}

/// Callbacks fired during a run.
pub trait RunObserver {
    /// After every split step.
    fn on_step(&mut self, _partition: &Partition, _step: &SplitStep) {}
    /// After each worklist extraction has been fully handled, or after each
    /// strategy step.
    fn on_checkpoint(&mut self, _partition: &Partition, _depth: u32) {}
}

/// Observer that ignores everything.
pub struct NoObserver;
impl RunObserver for NoObserver {}

/// Reusable counting scratch for splitting.
pub(crate) struct Splitter {
    count: Vec<u32>,
    touched: Vec<Vertex>,
    in_splitter: Vec<bool>,
    in_target: Vec<bool>,
}

impl Splitter {
    pub(crate) fn new(n: usize) -> Self {
        Splitter {
            count: vec![0; n],
            touched: Vec::new(),
            in_splitter: Vec::new(),
            in_target: Vec::new(),
        }
    }

    /// Refines every class of `targets` with respect to the union of
    /// `splitter`. Returns the fragment list (grouped per target) and cost.
    pub(crate) fn split_union(
        &mut self,
        graph: &ColoredGraph,
        partition: &mut Partition,
        targets: &[ClassId],
        splitter: &[ClassId],
    ) -> Result<(Vec<ClassId>, u64), RefineError> {
        if splitter.is_empty() {
            return Err(RefineError::EmptyUnion("splitter"));
        }
        if targets.is_empty() {
            return Err(RefineError::EmptyUnion("target"));
        }
        for &c in splitter.iter().chain(targets) {
            if !partition.is_live(c) {
                return Err(RefineError::DeadClass(c));
            }
        }
        let mut splitter: Vec<ClassId> = splitter.to_vec();
        splitter.sort_unstable();
        splitter.dedup();
        let classes = partition.class_count();
        self.in_splitter.clear();
        self.in_splitter.resize(classes, false);
        self.in_target.clear();
        self.in_target.resize(classes, false);
        for &c in &splitter {
            self.in_splitter[c as usize] = true;
        }
        for &c in targets {
            self.in_target[c as usize] = true;
        }
        let mut cost = 0u64;
        for &c in &splitter {
            let w_in_target = self.in_target[c as usize];
            for &w in partition.class(c) {
                for &u in graph.neighbors(w) {
                    let x = partition.class_of(u) as usize;
                    if !self.in_target[x] {
                        continue;
                    }
                    if self.count[u as usize] == 0 {
                        self.touched.push(u);
                    }
                    self.count[u as usize] += 1;
                    // An edge inside (target ∩ splitter) is seen from both ends.
                    if !(w_in_target && self.in_splitter[x]) || w < u {
                        cost += 1;
                    }
                }
            }
        }
        let mut ordered: Vec<ClassId> = targets.to_vec();
        ordered.sort_unstable();
        ordered.dedup();
        let fragments = self.split_touched(partition, &ordered);
        Ok((fragments, cost))
    }

    /// Splits every class against every class simultaneously. Members are
    /// keyed by their multiset of neighbor classes; fragments are ordered by
    /// that key. Costs every edge once.
    pub(crate) fn split_all_pairs(
        &mut self,
        graph: &ColoredGraph,
        partition: &mut Partition,
    ) -> (Vec<ClassId>, u64) {
        let n = graph.vertex_count();
        let signatures: Vec<Vec<ClassId>> = (0..n as Vertex)
            .map(|v| {
                let mut sig: Vec<ClassId> =
                    graph.neighbors(v).iter().map(|&u| partition.class_of(u)).collect();
                sig.sort_unstable();
                sig
            })
            .collect();
        let mut fragments = Vec::new();
        for t in 0..partition.class_count() as ClassId {
            let mut members = partition.class(t).to_vec();
            members.sort_unstable_by(|&a, &b| signatures[a as usize].cmp(&signatures[b as usize]));
            let mut rank = 1;
            for i in 0..members.len() {
                if i > 0 && signatures[members[i] as usize] != signatures[members[i - 1] as usize] {
                    rank += 1;
                }
                self.count[members[i] as usize] = rank;
            }
            fragments.extend(partition.split_by_key(t, &mut members, &self.count));
            for &v in &members {
                self.count[v as usize] = 0;
            }
        }
        (fragments, graph.edge_count() as u64)
    }

    /// Splits each class in `ordered` (ascending) by the current counts, then
    /// clears the scratch.
    fn split_touched(&mut self, partition: &mut Partition, ordered: &[ClassId]) -> Vec<ClassId> {
        let mut touched = std::mem::take(&mut self.touched);
        touched.sort_unstable_by_key(|&u| (partition.class_of(u), u));
        let mut fragments = Vec::new();
        let mut i = 0;
        for &t in ordered {
            let begin = i;
            while i < touched.len() && partition.class_of(touched[i]) == t {
                i += 1;
            }
            if begin == i {
                fragments.push(t);
            } else {
                fragments.extend(partition.split_by_key(t, &mut touched[begin..i], &self.count));
            }
        }
        for &u in &touched {
            self.count[u as usize] = 0;
        }
        touched.clear();
        self.touched = touched;
        fragments
    }
}

/// Refines the target union with respect to the splitter union (one step of
/// the strategy driver). Returns the fragments, grouped per target class in
/// ascending id order, and the edge cost.
pub fn split_class(
    graph: &ColoredGraph,
    partition: &mut Partition,
    target: &[ClassId],
    splitter: &[ClassId],
) -> Result<(Vec<ClassId>, u64), RefineError> {
    Splitter::new(graph.vertex_count()).split_union(graph, partition, target, splitter)
}

/// Re-applies recorded steps to a fresh partition and rechecks their costs.
pub struct Replay<'g> {
    graph: &'g ColoredGraph,
    partition: Partition,
    splitter: Splitter,
}

impl<'g> Replay<'g> {
    pub fn new(graph: &'g ColoredGraph, initial: Partition) -> Self {
        Replay {
            graph,
            partition: initial,
            splitter: Splitter::new(graph.vertex_count()),
        }
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    /// Applies one step; returns the recomputed cost and the fragment sizes.
    pub fn apply(&mut self, step: &SplitStep) -> Result<(u64, Vec<usize>), RefineError> {
        let (fragments, cost) = if step.pairwise {
            self.splitter.split_all_pairs(self.graph, &mut self.partition)
        } else {
            self.splitter
                .split_union(self.graph, &mut self.partition, &step.target, &step.splitter)?
        };
        let sizes = fragments.iter().map(|&f| self.partition.class_size(f)).collect();
        Ok((cost, sizes))
    }
}

/// Algorithm-1 refinement under a worklist policy.
pub fn refine_worklist(
    graph: &ColoredGraph,
    initial: &Partition,
    policy: PolicyKind,
) -> Result<RefinementReport, RefineError> {
    refine_worklist_with(graph, initial, policy, &RunOptions::default(), &mut NoObserver)
}

/// [`refine_worklist`] with options and an observer.
pub fn refine_worklist_with(
    graph: &ColoredGraph,
    initial: &Partition,
    policy: PolicyKind,
    options: &RunOptions,
    observer: &mut dyn RunObserver,
) -> Result<RefinementReport, RefineError> {
    let n = graph.vertex_count();
    let m = graph.edge_count();
    let budget = options.step_budget.unwrap_or_else(|| default_budget(n, m));
    let mut partition = initial.clone();
    let mut worklist = Worklist::new(policy)?;
    for c in 0..partition.class_count() as ClassId {
        let depth = options
            .initial_depths
            .as_ref()
            .and_then(|d| d.get(c as usize).copied())
            .unwrap_or(0);
        worklist.push(c, partition.class_size(c), depth);
    }
    let mut report = RefinementReport {
        strategy: policy.to_string(),
        n,
        m,
        steps: Vec::new(),
        step_count: 0,
        total_cost: 0,
        final_partition: Partition::unit(0),
        extractions: Vec::new(),
    };
    let mut scratch = Splitter::new(n);
    let mut deferred: Vec<(ClassId, usize)> = Vec::new();
    while let Some(entry) = worklist.pop(|c| partition.class_size(c)) {
        let c = entry.class;
        report.extractions.push(Extraction {
            class: c,
            depth: entry.depth,
            first_step: report.step_count,
        });
        // Count neighbors in the snapshot of C.
        for &w in partition.class(c) {
            for &u in graph.neighbors(w) {
                if scratch.count[u as usize] == 0 {
                    scratch.touched.push(u);
                }
                scratch.count[u as usize] += 1;
            }
        }
        let mut touched = std::mem::take(&mut scratch.touched);
        touched.sort_unstable_by_key(|&u| (partition.class_of(u), u));
        let mut splitter_ids = vec![c];
        let mut i = 0;
        while i < touched.len() {
            let x = partition.class_of(touched[i]);
            let begin = i;
            let mut cost = 0u64;
            while i < touched.len() && partition.class_of(touched[i]) == x {
                cost += u64::from(scratch.count[touched[i] as usize]);
                i += 1;
            }
            if x == c {
                cost /= 2;
            }
            if report.step_count >= budget {
                return Err(RefineError::BudgetExceeded {
                    policy: policy.to_string(),
                    budget,
                });
            }
            let fragments = partition.split_by_key(x, &mut touched[begin..i], &scratch.count);
            let step = SplitStep {
                splitter: splitter_ids.clone(),
                target: vec![x],
                fragments,
                edge_cost: cost,
                round: entry.depth,
                pairwise: false,
            };
            report.total_cost += cost;
            report.step_count += 1;
            if step.fragments.len() > 1 {
                schedule(&mut worklist, &partition, &step.fragments, x, entry.depth, &mut deferred);
                if x == c {
                    splitter_ids = step.fragments.clone();
                }
            }
            observer.on_step(&partition, &step);
            if !options.skip_steps {
                report.steps.push(step);
            }
        }
        for &u in &touched {
            scratch.count[u as usize] = 0;
        }
        touched.clear();
        scratch.touched = touched;
        if !deferred.is_empty() {
            worklist.insert_fragments(&deferred, entry.depth + 1);
            deferred.clear();
        }
        observer.on_checkpoint(&partition, entry.depth);
    }
    report.final_partition = partition;
    Ok(report)
}

/// Applies the insertion rule after `x` split into `fragments`.
fn schedule(
    worklist: &mut Worklist,
    partition: &Partition,
    fragments: &[ClassId],
    x: ClassId,
    depth: u32,
    deferred: &mut Vec<(ClassId, usize)>,
) {
    // Largest fragment; ties go to the one holding the smallest vertex.
    let max = fragments.iter().map(|&f| partition.class_size(f)).max().unwrap();
    let tied: Vec<ClassId> =
        fragments.iter().copied().filter(|&f| partition.class_size(f) == max).collect();
    let largest = if tied.len() == 1 {
        tied[0]
    } else {
        *tied
            .iter()
            .min_by_key(|&&f| partition.class(f).iter().min().copied())
            .unwrap()
    };
    // If X is queued its entry now stands for the largest fragment, so in
    // both cases every other fragment is inserted.
    if worklist.contains(x) {
        worklist.retarget(x, largest, max);
    }
    let inserted: Vec<(ClassId, usize)> = fragments
        .iter()
        .filter(|&&f| f != largest)
        .map(|&f| (f, partition.class_size(f)))
        .collect();
    if worklist.kind() == PolicyKind::SmallestNewStack {
        deferred.extend(inserted);
    } else {
        worklist.insert_fragments(&inserted, depth + 1);
    }
}

/// A strategy's decision.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Choice {
    /// Refine the target union with respect to the splitter union.
    Refine { splitter: Vec<ClassId>, target: Vec<ClassId> },
    /// Refine every class with respect to every class in one step.
    RefineAllPairs,
    Terminate,
}

/// A step chooser for [`refine_strategy`]. It sees the graph, the current
/// partition and the full split history.
pub trait Strategy {
    fn name(&self) -> String;
    fn choose(&mut self, graph: &ColoredGraph, partition: &Partition, history: &[SplitStep]) -> Choice;
}

/// Always refines all classes with respect to all classes. Each step costs
/// m.
#[derive(Debug, Clone, Default)]
pub struct FullRefinement;

impl Strategy for FullRefinement {
    fn name(&self) -> String {
        "full".to_string()
    }

    fn choose(&mut self, _: &ColoredGraph, _: &Partition, _: &[SplitStep]) -> Choice {
        Choice::RefineAllPairs
    }
}

/// Classes that contain a neighbor of some vertex of class `c`, ascending.
pub fn neighbor_classes(graph: &ColoredGraph, partition: &Partition, c: ClassId) -> Vec<ClassId> {
    let mut out: BTreeSet<ClassId> = BTreeSet::new();
    for &w in partition.class(c) {
        for &u in graph.neighbors(w) {
            out.insert(partition.class_of(u));
        }
    }
    out.into_iter().collect()
}

/// Incremental equitability test. A class is "verified" once every class has
/// been checked to be uniform with respect to it; splitting a class never
/// breaks uniformity with respect to a verified class, so only fresh
/// fragments need to be re-verified. A found violation is cached until one
/// of the two classes involved is split.
pub(crate) struct EquitableTracker {
    pending: BTreeSet<(u64, ClassId)>,
    degsum: Vec<u64>,
    witness: Option<(ClassId, ClassId)>,
    count: Vec<u32>,
    touched: Vec<Vertex>,
    seen: Vec<u32>,
    first: Vec<u32>,
}

impl EquitableTracker {
    pub(crate) fn new(graph: &ColoredGraph, partition: &Partition) -> Self {
        let mut t = EquitableTracker {
            pending: BTreeSet::new(),
            degsum: Vec::new(),
            witness: None,
            count: vec![0; graph.vertex_count()],
            touched: Vec::new(),
            seen: Vec::new(),
            first: Vec::new(),
        };
        for c in 0..partition.class_count() as ClassId {
            let d = partition.class(c).iter().map(|&v| graph.degree(v) as u64).sum();
            t.degsum.push(d);
            t.pending.insert((d, c));
        }
        t
    }

    pub(crate) fn record(&mut self, graph: &ColoredGraph, partition: &Partition, step: &SplitStep) {
        for (t, group) in step.target.iter().zip(step.fragment_groups()) {
            if group.len() < 2 {
                continue;
            }
            if let Some((a, b)) = self.witness {
                if a == *t || b == *t {
                    self.witness = None;
                }
            }
            let old = self.degsum[*t as usize];
            self.pending.remove(&(old, *t));
            let mut rest = 0;
            for &f in &group[1..] {
                let d: u64 = partition.class(f).iter().map(|&v| graph.degree(v) as u64).sum();
                if self.degsum.len() <= f as usize {
                    self.degsum.resize(f as usize + 1, 0);
                }
                self.degsum[f as usize] = d;
                self.pending.insert((d, f));
                rest += d;
            }
            self.degsum[*t as usize] = old - rest;
            self.pending.insert((old - rest, *t));
        }
    }

    pub(crate) fn is_equitable(&mut self, graph: &ColoredGraph, partition: &Partition) -> bool {
        if self.witness.is_some() {
            return false;
        }
        let classes = partition.class_count();
        self.seen.resize(classes, 0);
        self.first.resize(classes, 0);
        while let Some(&(d, c)) = self.pending.first() {
            if let Some(bad) = self.violation(graph, partition, c) {
                self.witness = Some((c, bad));
                return false;
            }
            self.pending.remove(&(d, c));
        }
        true
    }

    /// A class that is not uniform with respect to `c`, if any.
    fn violation(&mut self, graph: &ColoredGraph, partition: &Partition, c: ClassId) -> Option<ClassId> {
        for &w in partition.class(c) {
            for &u in graph.neighbors(w) {
                if self.count[u as usize] == 0 {
                    self.touched.push(u);
                }
                self.count[u as usize] += 1;
            }
        }
        let mut bad = None;
        let mut classes = Vec::new();
        for &u in &self.touched {
            let x = partition.class_of(u) as usize;
            if self.seen[x] == 0 {
                self.first[x] = self.count[u as usize];
                classes.push(x);
            } else if self.first[x] != self.count[u as usize] {
                bad = Some(x as ClassId);
            }
            self.seen[x] += 1;
        }
        for &x in &classes {
            if self.seen[x] as usize != partition.class_size(x as ClassId) {
                bad = bad.or(Some(x as ClassId));
            }
            self.seen[x] = 0;
        }
        for &u in &self.touched {
            self.count[u as usize] = 0;
        }
        self.touched.clear();
        bad
    }
}

/// Algorithm-2 refinement driven by a strategy.
pub fn refine_strategy(
    graph: &ColoredGraph,
    initial: &Partition,
    strategy: &mut dyn Strategy,
) -> Result<RefinementReport, StrategyFailure> {
    refine_strategy_with(graph, initial, strategy, &RunOptions::default(), &mut NoObserver)
}

/// [`refine_strategy`] with options and an observer.
pub fn refine_strategy_with(
    graph: &ColoredGraph,
    initial: &Partition,
    strategy: &mut dyn Strategy,
    options: &RunOptions,
    observer: &mut dyn RunObserver,
) -> Result<RefinementReport, StrategyFailure> {
    let n = graph.vertex_count();
    let m = graph.edge_count();
    let budget = options.step_budget.unwrap_or_else(|| default_budget(n, m));
    let mut partition = initial.clone();
    let mut report = RefinementReport {
        strategy: strategy.name(),
        n,
        m,
        steps: Vec::new(),
        step_count: 0,
        total_cost: 0,
        final_partition: Partition::unit(0),
        extractions: Vec::new(),
    };
    let mut tracker = EquitableTracker::new(graph, &partition);
    let mut scratch = Splitter::new(n);
    let fail = |error: RefineError, mut report: RefinementReport, partition: Partition| {
        report.final_partition = partition;
        StrategyFailure { error, partial: report }
    };
    // History is always kept for the strategy, even when the caller skips it.
    let mut history: Vec<SplitStep> = Vec::new();
    while !tracker.is_equitable(graph, &partition) {
        if report.step_count >= budget {
            let error = RefineError::BudgetExceeded {
                policy: strategy.name(),
                budget,
            };
            report.steps = history;
            return Err(fail(error, report, partition));
        }
        let choice = strategy.choose(graph, &partition, &history);
        if choice == Choice::RefineAllPairs {
            let all: Vec<ClassId> = (0..partition.class_count() as ClassId).collect();
            let (fragments, cost) = scratch.split_all_pairs(graph, &mut partition);
            let step = SplitStep {
                splitter: all.clone(),
                target: all,
                fragments,
                edge_cost: cost,
                round: 0,
                pairwise: true,
            };
            report.total_cost += cost;
            report.step_count += 1;
            tracker.record(graph, &partition, &step);
            observer.on_step(&partition, &step);
            observer.on_checkpoint(&partition, 0);
            history.push(step);
            continue;
        }
        let (splitter, target) = match choice {
            Choice::Terminate => {
                let error = RefineError::InvalidStrategy {
                    strategy: strategy.name(),
                    reason: "terminated before the partition was equitable".to_string(),
                };
                report.steps = history;
                return Err(fail(error, report, partition));
            }
            Choice::Refine { splitter, target } => (splitter, target),
            Choice::RefineAllPairs => unreachable!(),
        };
        let mut target_sorted = target;
        target_sorted.sort_unstable();
        target_sorted.dedup();
        let mut splitter_sorted = splitter;
        splitter_sorted.sort_unstable();
        splitter_sorted.dedup();
        match scratch.split_union(graph, &mut partition, &target_sorted, &splitter_sorted) {
            Ok((fragments, cost)) => {
                let step = SplitStep {
                    splitter: splitter_sorted,
                    target: target_sorted,
                    fragments,
                    edge_cost: cost,
                    round: 0,
                    pairwise: false,
                };
                report.total_cost += cost;
                report.step_count += 1;
                tracker.record(graph, &partition, &step);
                observer.on_step(&partition, &step);
                observer.on_checkpoint(&partition, 0);
                history.push(step);
            }
            Err(e) => {
                let error = RefineError::InvalidStrategy {
                    strategy: strategy.name(),
                    reason: e.to_string(),
                };
                report.steps = history;
                return Err(fail(error, report, partition));
            }
        }
    }
    if !options.skip_steps {
        report.steps = history;
    }
    report.final_partition = partition;
    Ok(report)
}

/// Groups the extractions of a queue run by depth. Round `i` lists the
/// classes extracted at depth `i`, in extraction order.
pub fn queue_rounds(report: &RefinementReport) -> Result<Vec<Vec<ClassId>>, RefineError> {
    if report.strategy != PolicyKind::Queue.to_string() {
        return Err(RefineError::InvalidStrategy {
            strategy: report.strategy.clone(),
            reason: "round grouping requires a queue run".to_string(),
        });
    }
    let mut rounds: Vec<Vec<ClassId>> = Vec::new();
    for e in &report.extractions {
        let d = e.depth as usize;
        if rounds.len() <= d {
            rounds.resize(d + 1, Vec::new());
        }
        rounds[d].push(e.class);
    }
    Ok(rounds)
}
