//! The online model: partial quotient graphs, concurring concealer gadgets,
//! a fast strategy that knows where the correct pairs are, and an adversary
//! that hides them from any deterministic subject.

use std::collections::{HashMap, VecDeque};

use crate::families::{build_concealer_graph, FamilyDescriptor, FamilyError, FamilyKind, Layer};
use crate::gadgets::{Gadget, GadgetKind};
use crate::graph::{ColoredGraph, Vertex};
use crate::partition::{ClassId, Partition};
use crate::refine::{
    neighbor_classes, refine_strategy_with, refine_worklist_with, Choice, RefineError, RefinementReport,
    RunObserver, RunOptions, SplitStep, Strategy,
};
use crate::worklist::{PolicyKind, Worklist};

/// Largest class count for which [`partial_quotient`] is computed.
pub const PARTIAL_QUOTIENT_CAP: usize = 14;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OnlineError {
    #[error("partial quotient graph needs at most {cap} classes, got {count}")]
    TooManyClasses { count: usize, cap: usize },
    #[error("gadgets are not concealers of the same level")]
    LevelMismatch,
    #[error("gadget and partition sizes differ")]
    SizeMismatch,
    #[error("descriptor is not a {0} instance")]
    WrongFamily(FamilyKind),
    #[error(transparent)]
    Family(#[from] FamilyError),
    #[error(transparent)]
    Refine(#[from] RefineError),
    #[error("adversary did not settle within {budget} iterations")]
    AdversaryBudget { budget: usize },
    #[error("dichotomy violated: {0}")]
    Dichotomy(String),
}

/// The partial quotient graph of a colored graph.
///
/// Nodes are the subsets of the current classes, written as bitmasks over
/// class ids. The full object has 4^c potential edges, so edges are derived
/// on demand from a table of per-class degrees: `degree[a][mask]` is the
/// common number of neighbors that every vertex of class `a` has in the
/// union `mask`, or `None` if the vertices of `a` disagree. Two partial
/// quotient graphs are equal iff their size vectors and tables are equal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartialQuotientGraph {
    sizes: Vec<usize>,
    degree: Vec<Vec<Option<u32>>>,
}

impl PartialQuotientGraph {
    pub fn class_count(&self) -> usize {
        self.sizes.len()
    }

    pub fn node_count(&self) -> usize {
        1 << self.sizes.len()
    }

    /// l_V: the number of vertices in the union.
    pub fn node_label(&self, mask: u32) -> usize {
        bits(mask).map(|a| self.sizes[a]).sum()
    }

    /// l_E of the edge (c1, c2), or `None` when c2 splits c1. The empty
    /// union is vacuously regular towards everything, with label 0.
    pub fn edge_label(&self, c1: u32, c2: u32) -> Option<u32> {
        let mut label = None;
        for a in bits(c1) {
            let d = self.degree[a][c2 as usize]?;
            match label {
                None => label = Some(d),
                Some(l) if l != d => return None,
                _ => {}
            }
        }
        Some(label.unwrap_or(0))
    }

    /// All edges with labels, for small class counts.
    pub fn edges(&self) -> Vec<(u32, u32, u32)> {
        let nodes = self.node_count() as u32;
        let mut out = Vec::new();
        for c1 in 0..nodes {
            for c2 in 0..nodes {
                if let Some(l) = self.edge_label(c1, c2) {
                    out.push((c1, c2, l));
                }
            }
        }
        out
    }
}

fn bits(mask: u32) -> impl Iterator<Item = usize> {
    (0..32).filter(move |i| mask >> i & 1 == 1)
}

/// Per-vertex neighbor counts into every class.
fn count_rows(graph: &ColoredGraph, partition: &Partition) -> Vec<Vec<u32>> {
    let c = partition.class_count();
    (0..graph.vertex_count() as Vertex)
        .map(|v| {
            let mut row = vec![0u32; c];
            for &u in graph.neighbors(v) {
                row[partition.class_of(u) as usize] += 1;
            }
            row
        })
        .collect()
}

pub fn partial_quotient(graph: &ColoredGraph, partition: &Partition) -> Result<PartialQuotientGraph, OnlineError> {
    let c = partition.class_count();
    if c > PARTIAL_QUOTIENT_CAP {
        return Err(OnlineError::TooManyClasses { count: c, cap: PARTIAL_QUOTIENT_CAP });
    }
    if graph.vertex_count() != partition.vertex_count() {
        return Err(OnlineError::SizeMismatch);
    }
    let rows = count_rows(graph, partition);
    let nodes = 1usize << c;
    let mut degree = Vec::with_capacity(c);
    for a in 0..c as ClassId {
        let mut distinct: Vec<&Vec<u32>> = partition.class(a).iter().map(|&v| &rows[v as usize]).collect();
        distinct.sort();
        distinct.dedup();
        let mut table: Vec<Option<u32>> = vec![None; nodes];
        let mut sums = vec![0u32; nodes];
        for (r, row) in distinct.iter().enumerate() {
            for mask in 1..nodes {
                let low = mask.trailing_zeros() as usize;
                sums[mask] = sums[mask & (mask - 1)] + row[low];
            }
            for mask in 0..nodes {
                if r == 0 {
                    table[mask] = Some(sums[mask]);
                } else if table[mask] != Some(sums[mask]) {
                    table[mask] = None;
                }
            }
        }
        degree.push(table);
    }
    Ok(PartialQuotientGraph {
        sizes: (0..c as ClassId).map(|a| partition.class_size(a)).collect(),
        degree,
    })
}

/// Equality of the partial quotient graphs of two colored graphs on the same
/// vertex set with pointwise equal colorings. Above the class cap this falls
/// back to comparing every vertex's neighbor counts into every class, which
/// implies equality of the partial quotient graphs.
pub fn same_partial_quotient(
    graph_a: &ColoredGraph,
    partition_a: &Partition,
    graph_b: &ColoredGraph,
    partition_b: &Partition,
) -> Result<bool, OnlineError> {
    if partition_a.class_count() <= PARTIAL_QUOTIENT_CAP && partition_b.class_count() <= PARTIAL_QUOTIENT_CAP {
        return Ok(partial_quotient(graph_a, partition_a)? == partial_quotient(graph_b, partition_b)?);
    }
    Ok(partition_a.labels() == partition_b.labels()
        && count_rows(graph_a, partition_a) == count_rows(graph_b, partition_b))
}

/// Whether two colored concealer gadgets concur: colorings agree pointwise,
/// neither correct pair is split, and the neighborhood union of each correct
/// pair is monochromatic.
pub fn concur(a: &Gadget, pa: &Partition, b: &Gadget, pb: &Partition) -> Result<bool, OnlineError> {
    let (la, ca, lb, cb) = match (a.kind, b.kind) {
        (GadgetKind::Concealer { level: la, correct: ca }, GadgetKind::Concealer { level: lb, correct: cb }) => {
            (la, ca, lb, cb)
        }
        _ => return Err(OnlineError::LevelMismatch),
    };
    if la != lb || a.vertex_count != b.vertex_count {
        return Err(OnlineError::LevelMismatch);
    }
    if pa.vertex_count() != a.vertex_count || pb.vertex_count() != b.vertex_count {
        return Err(OnlineError::SizeMismatch);
    }
    if pa.labels() != pb.labels() {
        return Ok(false);
    }
    Ok(correct_pair_hidden(a, ca, pa) && correct_pair_hidden(b, cb, pb))
}

fn correct_pair_hidden(g: &Gadget, correct: u32, p: &Partition) -> bool {
    let (s, t) = g.in_pairs[correct as usize];
    if p.class_of(s) != p.class_of(t) {
        return false;
    }
    let mut colors = g
        .edges
        .iter()
        .filter_map(|&(u, v)| match (u == s || u == t, v == s || v == t) {
            (true, false) => Some(v),
            (false, true) => Some(u),
            _ => None,
        })
        .map(|w| p.class_of(w));
    match colors.next() {
        Some(first) => colors.all(|c| c == first),
        None => true,
    }
}

/// What a fast-oracle step is for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepKind {
    Degree,
    Start,
    /// Propagating the correct block through X, XX, YY, Y, in that order.
    XBlock,
    XFanBlock,
    YFanBlock,
    YBlock,
    Activation,
    Finish,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepTag {
    /// Gadget level, 0 outside the per-level schedule.
    pub level: u32,
    pub kind: StepKind,
}

#[derive(Debug, Clone)]
enum Planned {
    AllPairs,
    /// Refine every neighbor class of the class containing the vertex.
    Handle(Vertex),
    /// Classes meeting the splitter set against classes meeting the target.
    Refine { splitter: Vec<Vertex>, target: Vec<Vertex> },
}

/// The depth-first schedule for a concealer graph with known correct pairs:
/// a degree round, the start split of X, then per level only the block of
/// the correct pair is pushed through X, XX, YY and Y into the level gadget,
/// whose activation splits X one level deeper. A smallest-first sweep over
/// all classes finishes the refinement.
#[derive(Debug, Clone)]
pub struct FastOracle {
    plan: VecDeque<(Planned, StepTag)>,
    sweep: Option<Worklist>,
    seen_steps: usize,
    issued: Vec<StepTag>,
}

pub fn fast_oracle_strategy(descriptor: &FamilyDescriptor) -> Result<FastOracle, OnlineError> {
    if descriptor.kind != FamilyKind::Concealer {
        return Err(OnlineError::WrongFamily(FamilyKind::Concealer));
    }
    let d = descriptor;
    let mut plan = VecDeque::new();
    let tag = |level, kind| StepTag { level, kind };
    plan.push_back((Planned::AllPairs, tag(0, StepKind::Degree)));
    let v2 = d.roles["start"][1];
    plan.push_back((Planned::Handle(v2), tag(0, StepKind::Start)));
    for l in 1..d.k {
        let gadget = &d.gadgets[(l - 1) as usize];
        let c = d.correct_indices[(l - 1) as usize];
        let q = 2 * c;
        let x_block = d.block(Layer::X, l, q)?;
        let xf_block = d.fan_block(false, l, q);
        let yf_block = d.fan_block(true, l, q);
        let y_block = d.block(Layer::Y, l, q)?;
        let b = gadget.in_vertices[q as usize];
        let chain = [
            (x_block, xf_block.clone(), StepKind::XBlock),
            (xf_block, yf_block.clone(), StepKind::XFanBlock),
            (yf_block, y_block.clone(), StepKind::YFanBlock),
            (y_block, vec![b], StepKind::YBlock),
        ];
        for (splitter, target, kind) in chain {
            plan.push_back((Planned::Refine { splitter, target }, tag(l, kind)));
        }
        let sub = &gadget.subs[if l == 1 { 0 } else { c as usize }];
        let mut cascade = vec![b, sub.and_in[0], sub.middle[2], sub.out_pair.1];
        if gadget.out_pair.1 != sub.out_pair.1 {
            cascade.push(gadget.out_pair.1);
        }
        for v in cascade {
            plan.push_back((Planned::Handle(v), tag(l, StepKind::Activation)));
        }
    }
    // X is now discrete. One pass over the level-k blocks carries every index
    // through XX, YY and Y before the sweep.
    let finish = tag(d.k, StepKind::Finish);
    let indices = 0..d.index_count();
    for i in indices.clone() {
        let splitter = d.block(Layer::X, d.k, i)?;
        plan.push_back((Planned::Refine { splitter, target: d.fan_block(false, d.k, i) }, finish));
    }
    for i in indices.clone() {
        let (splitter, target) = (d.fan_block(false, d.k, i), d.fan_block(true, d.k, i));
        plan.push_back((Planned::Refine { splitter, target }, finish));
    }
    for i in indices.clone() {
        let splitter = d.fan_block(true, d.k, i);
        plan.push_back((Planned::Refine { splitter, target: d.block(Layer::Y, d.k, i)? }, finish));
    }
    for i in indices {
        plan.push_back((Planned::Handle(d.y[i as usize]), finish));
    }
    Ok(FastOracle { plan, sweep: None, seen_steps: 0, issued: Vec::new() })
}

impl FastOracle {
    /// Tag of every step issued so far, aligned with the run's steps.
    pub fn tags(&self) -> &[StepTag] {
        &self.issued
    }

    /// Cost per level of the block propagation through X, XX, YY and Y.
    pub fn propagation_costs(&self, report: &RefinementReport, k: u32) -> Vec<u64> {
        let mut costs = vec![0u64; k as usize];
        for (tag, step) in self.issued.iter().zip(&report.steps) {
            if matches!(
                tag.kind,
                StepKind::XBlock | StepKind::XFanBlock | StepKind::YFanBlock | StepKind::YBlock
            ) {
                costs[tag.level as usize] += step.edge_cost;
            }
        }
        costs
    }

    fn sweep_choice(&mut self, graph: &ColoredGraph, partition: &Partition, history: &[SplitStep]) -> Choice {
        let worklist = self.sweep.get_or_insert_with(|| {
            let mut w = Worklist::new(PolicyKind::Stack).expect("stack needs no window");
            let mut classes: Vec<ClassId> = (0..partition.class_count() as ClassId).collect();
            classes.sort_by_key(|&c| std::cmp::Reverse(partition.class_size(c)));
            for c in classes {
                w.push(c, partition.class_size(c), 0);
            }
            w
        });
        for step in &history[self.seen_steps..] {
            for (&t, group) in step.target.iter().zip(step.fragment_groups()) {
                if group.len() < 2 {
                    continue;
                }
                let largest = *group
                    .iter()
                    .max_by_key(|&&f| (partition.class_size(f), std::cmp::Reverse(f)))
                    .unwrap();
                let keep_all = worklist.contains(t);
                let mut add: Vec<ClassId> = group
                    .iter()
                    .copied()
                    .filter(|&f| f != t || !keep_all)
                    .filter(|&f| keep_all || f != largest)
                    .collect();
                add.sort_by_key(|&f| std::cmp::Reverse(partition.class_size(f)));
                for f in add {
                    if !worklist.contains(f) {
                        worklist.push(f, partition.class_size(f), 0);
                    }
                }
            }
        }
        self.seen_steps = history.len();
        match worklist.pop(|c| partition.class_size(c)) {
            Some(entry) => Choice::Refine {
                splitter: vec![entry.class],
                target: neighbor_classes(graph, partition, entry.class),
            },
            None => Choice::RefineAllPairs,
        }
    }
}

fn classes_meeting(partition: &Partition, vertices: &[Vertex]) -> Vec<ClassId> {
    let mut out: Vec<ClassId> = vertices.iter().map(|&v| partition.class_of(v)).collect();
    out.sort_unstable();
    out.dedup();
    out
}

impl Strategy for FastOracle {
    fn name(&self) -> String {
        "fast-oracle".to_string()
    }

    fn choose(&mut self, graph: &ColoredGraph, partition: &Partition, history: &[SplitStep]) -> Choice {
        if let Some((planned, tag)) = self.plan.pop_front() {
            self.issued.push(tag);
            self.seen_steps = history.len() + 1;
            return match planned {
                Planned::AllPairs => Choice::RefineAllPairs,
                Planned::Handle(v) => {
                    let c = partition.class_of(v);
                    Choice::Refine { splitter: vec![c], target: neighbor_classes(graph, partition, c) }
                }
                Planned::Refine { splitter, target } => Choice::Refine {
                    splitter: classes_meeting(partition, &splitter),
                    target: classes_meeting(partition, &target),
                },
            };
        }
        self.issued.push(StepTag { level: 0, kind: StepKind::Finish });
        self.sweep_choice(graph, partition, history)
    }
}

/// A deterministic refinement procedure the adversary can replay.
pub trait Subject {
    fn name(&self) -> String;
    fn run(
        &self,
        graph: &ColoredGraph,
        descriptor: &FamilyDescriptor,
        options: &RunOptions,
        observer: &mut dyn RunObserver,
    ) -> Result<RefinementReport, OnlineError>;
}

impl Subject for PolicyKind {
    fn name(&self) -> String {
        self.to_string()
    }

    fn run(
        &self,
        graph: &ColoredGraph,
        _: &FamilyDescriptor,
        options: &RunOptions,
        observer: &mut dyn RunObserver,
    ) -> Result<RefinementReport, OnlineError> {
        Ok(refine_worklist_with(graph, &graph.initial_partition(), *self, options, observer)?)
    }
}

/// The fast oracle as a subject; it reads the correct pairs off the
/// descriptor of each instance it runs on.
#[derive(Debug, Clone, Copy, Default)]
pub struct OracleSubject;

impl Subject for OracleSubject {
    fn name(&self) -> String {
        "fast-oracle".to_string()
    }

    fn run(
        &self,
        graph: &ColoredGraph,
        descriptor: &FamilyDescriptor,
        options: &RunOptions,
        observer: &mut dyn RunObserver,
    ) -> Result<RefinementReport, OnlineError> {
        let mut oracle = fast_oracle_strategy(descriptor)?;
        refine_strategy_with(graph, &graph.initial_partition(), &mut oracle, options, observer)
            .map_err(|f| OnlineError::Refine(f.error))
    }
}

/// Records the step at which each gadget in-pair first becomes separated.
pub struct PairTracker {
    pairs: Vec<(Vertex, Vertex)>,
    /// (level, pair index) of every tracked pair.
    owners: Vec<(u32, u32)>,
    waiting: HashMap<ClassId, Vec<usize>>,
    separated: Vec<Option<usize>>,
    steps: usize,
}

impl PairTracker {
    pub fn new(descriptor: &FamilyDescriptor, initial: &Partition) -> Self {
        let mut pairs = Vec::new();
        let mut owners = Vec::new();
        for g in &descriptor.gadgets {
            for (j, pair) in g.in_pairs().into_iter().enumerate() {
                pairs.push(pair);
                owners.push((g.level, j as u32));
            }
        }
        let mut tracker = PairTracker {
            separated: vec![None; pairs.len()],
            pairs,
            owners,
            waiting: HashMap::new(),
            steps: 0,
        };
        for (i, &(u, v)) in tracker.pairs.iter().enumerate() {
            if initial.class_of(u) != initial.class_of(v) {
                tracker.separated[i] = Some(0);
            } else {
                tracker.waiting.entry(initial.class_of(u)).or_default().push(i);
            }
        }
        tracker
    }

    /// Separation step per in-pair of the level-l gadget (`None` if never
    /// separated). Steps are numbered from 1; 0 means separated initially.
    pub fn level(&self, l: u32) -> Vec<Option<usize>> {
        self.owners
            .iter()
            .zip(&self.separated)
            .filter(|((level, _), _)| *level == l)
            .map(|(_, &s)| s)
            .collect()
    }
}

impl RunObserver for PairTracker {
    fn on_step(&mut self, partition: &Partition, step: &SplitStep) {
        self.steps += 1;
        for t in &step.target {
            let Some(list) = self.waiting.remove(t) else { continue };
            for i in list {
                let (u, v) = self.pairs[i];
                let cu = partition.class_of(u);
                if cu != partition.class_of(v) {
                    self.separated[i] = Some(self.steps);
                } else {
                    self.waiting.entry(cu).or_default().push(i);
                }
            }
        }
    }
}

/// Pairs separated last at one level; never-separated pairs count as last.
fn last_separated(times: &[Option<usize>]) -> Vec<u32> {
    let key = |t: &Option<usize>| t.map_or(usize::MAX, |s| s);
    let latest = times.iter().map(key).max().unwrap_or(0);
    (0..times.len() as u32).filter(|&j| key(&times[j as usize]) == latest).collect()
}

/// Whether the correct pair is among the last separated pairs at every level.
pub fn correct_pairs_last(descriptor: &FamilyDescriptor, tracker: &PairTracker) -> Vec<bool> {
    (1..descriptor.k)
        .map(|l| last_separated(&tracker.level(l)).contains(&descriptor.correct_indices[(l - 1) as usize]))
        .collect()
}

/// Result of [`adversary_build`].
#[derive(Debug, Clone)]
pub struct AdversaryOutcome {
    pub graph: ColoredGraph,
    pub descriptor: FamilyDescriptor,
    /// Subject runs performed, including the final confirming run.
    pub runs: usize,
    /// The subject's report on the final instance.
    pub report: RefinementReport,
}

/// Builds a concealer graph on which `subject` separates, in every gadget,
/// the correct pair after all dead-end pairs. Starting from all-zero correct
/// indices, the subject is replayed and the lowest level whose correct pair
/// is separated too early gets its correct pair moved to the pair the
/// subject separated last there.
pub fn adversary_build(subject: &dyn Subject, k: u32) -> Result<AdversaryOutcome, OnlineError> {
    let budget = (k as usize) << k;
    let mut correct = vec![0u32; k.saturating_sub(1) as usize];
    let options = RunOptions { skip_steps: true, ..RunOptions::default() };
    for run in 1..=budget {
        let (graph, descriptor) = build_concealer_graph(k, &correct)?;
        let mut tracker = PairTracker::new(&descriptor, &graph.initial_partition());
        let report = subject.run(&graph, &descriptor, &options, &mut tracker)?;
        let violating = (1..k).find(|&l| {
            !last_separated(&tracker.level(l)).contains(&correct[(l - 1) as usize])
        });
        match violating {
            None => {
                return Ok(AdversaryOutcome { graph, descriptor, runs: run, report });
            }
            Some(l) => {
                let last = last_separated(&tracker.level(l));
                correct[(l - 1) as usize] = last[last.len() - 1];
            }
        }
    }
    Err(OnlineError::AdversaryBudget { budget })
}

/// Output of [`level_progress`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LevelProgress {
    /// Largest j such that the out pairs of all levels up to j are split.
    pub n_a: u32,
    /// The block level of X: either `n_a` or `n_a + 1`.
    pub x_level: u32,
}

/// Computes n_A and verifies the dichotomy: out pairs are split exactly up
/// to level n_A, X is partitioned into the blocks of level n_A or n_A + 1,
/// and the partitions of XX, YY and Y are coarser than that of X.
pub fn level_progress(descriptor: &FamilyDescriptor, partition: &Partition) -> Result<LevelProgress, OnlineError> {
    let split: Vec<bool> = descriptor
        .level_outs
        .iter()
        .map(|&(a, b)| partition.class_of(a) != partition.class_of(b))
        .collect();
    let n_a = split.iter().take_while(|&&s| s).count() as u32;
    if let Some(j) = split.iter().skip(n_a as usize).position(|&s| s) {
        return Err(OnlineError::Dichotomy(format!(
            "out pair of level {} split while level {} is not",
            n_a as usize + j + 1,
            n_a + 1
        )));
    }
    let x_level = descriptor
        .x_block_level(partition)
        .ok_or_else(|| OnlineError::Dichotomy("X is not partitioned into blocks".to_string()))?;
    if x_level != n_a && x_level != n_a + 1 {
        return Err(OnlineError::Dichotomy(format!("X has block level {x_level} but n_A = {n_a}")));
    }
    let [x, xf, yf, y] = descriptor
        .layer_index_labels(partition)
        .ok_or_else(|| OnlineError::Dichotomy("a layer splits the copies of one index".to_string()))?;
    for (name, labels) in [("XX", &xf), ("YY", &yf), ("Y", &y)] {
        if !crate::families::labels_refine(&x, labels) {
            return Err(OnlineError::Dichotomy(format!("{name} is finer than X")));
        }
    }
    Ok(LevelProgress { n_a, x_level })
}

/// Observer that runs [`level_progress`] at every checkpoint and keeps the
/// first violation.
pub struct ProgressChecker<'d> {
    descriptor: &'d FamilyDescriptor,
    pub checkpoints: usize,
    pub violation: Option<OnlineError>,
    pub last: Option<LevelProgress>,
}

impl<'d> ProgressChecker<'d> {
    pub fn new(descriptor: &'d FamilyDescriptor) -> Self {
        ProgressChecker { descriptor, checkpoints: 0, violation: None, last: None }
    }
}

impl RunObserver for ProgressChecker<'_> {
    fn on_checkpoint(&mut self, partition: &Partition, _depth: u32) {
        self.checkpoints += 1;
        if self.violation.is_some() {
            return;
        }
        match level_progress(self.descriptor, partition) {
            Ok(p) => self.last = Some(p),
            Err(e) => self.violation = Some(e),
        }
    }
}
