//! Generators for the adversarial graph families.
//!
//! Every family shares a core of four layers over the index set 0..2^k:
//! `X`, the fan `XX` (k vertices x_i^j per index), the fan `YY`, and `Y`,
//! with edges x_i – x_i^j, y_i – y_i^j and the complete bipartite graph
//! between x_i^* and y_i^*. Families differ in how `Y` feeds back into `X`.
//!
//! Vertex ids are laid out in a fixed order: `X`, `XX` (index-major), `YY`,
//! `Y`, then gadgets or connection vertices, then paths, then start vertices.
//! The layout never depends on the correct-pair choice, so instances that
//! differ only in correct indices are directly comparable.
//!
//! The binary block of level l with index q is the index range
//! q·2^{k-l} .. (q+1)·2^{k-l}.

use std::collections::BTreeMap;
use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use crate::gadgets::{build_and, build_concealer, build_unidirectional, Gadget, GadgetError};
use crate::graph::{ColoredGraph, Vertex};
use crate::partition::{ClassId, Partition};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FamilyKind {
    /// Concealer graphs: one concealer gadget per level.
    Concealer,
    /// Stack-advantage graphs: a plain connection layer per level.
    StackAdv,
    /// Queue-advantage graphs: AND gadgets, X-paths and a start gadget.
    QueueAdv,
    /// Stack-advantage graphs with every X vertex duplicated.
    PqMaxAdv,
    /// Stack-advantage graphs with doubled YY fans.
    PqMinAdv,
}

impl FamilyKind {
    pub fn all() -> [FamilyKind; 5] {
        [
            FamilyKind::Concealer,
            FamilyKind::StackAdv,
            FamilyKind::QueueAdv,
            FamilyKind::PqMaxAdv,
            FamilyKind::PqMinAdv,
        ]
    }
}

impl fmt::Display for FamilyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FamilyKind::Concealer => "concealer",
            FamilyKind::StackAdv => "stack-adv",
            FamilyKind::QueueAdv => "queue-adv",
            FamilyKind::PqMaxAdv => "pq-max-adv",
            FamilyKind::PqMinAdv => "pq-min-adv",
        })
    }
}

impl FromStr for FamilyKind {
    type Err = FamilyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FamilyKind::all()
            .into_iter()
            .find(|k| k.to_string() == s)
            .ok_or_else(|| FamilyError::UnknownFamily(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FamilyError {
    #[error("k must be at least 2, got {0}")]
    SmallK(u32),
    #[error("expected {expected} correct indices, got {got}")]
    IndexCount { expected: usize, got: usize },
    #[error(transparent)]
    Gadget(#[from] GadgetError),
    #[error("unknown family `{0}`")]
    UnknownFamily(String),
    #[error("block level {level} index {index} out of range for k = {k}")]
    BlockRange { k: u32, level: u32, index: u32 },
    #[error("layer copy {0} out of range")]
    LayerRange(u32),
    #[error("descriptor is not a {0} instance")]
    WrongFamily(&'static str),
}

/// A layer of the shared core.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layer {
    X,
    /// The j-th copy x_i^j across all indices i.
    XFan(u32),
    /// The j-th copy y_i^j across all indices i.
    YFan(u32),
    Y,
}

/// Structure of a sub-gadget of a concealer, in global ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubGadget {
    pub in_pair: (Vertex, Vertex),
    pub and_in: [Vertex; 4],
    pub middle: [Vertex; 4],
    pub out_pair: (Vertex, Vertex),
}

/// A per-level gadget embedded in a family graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelGadget {
    pub level: u32,
    /// Global ids of all gadget vertices.
    pub vertices: Vec<Vertex>,
    /// In-vertices in block order (in-vertex q is fed by Y block q).
    pub in_vertices: Vec<Vertex>,
    pub out_pair: (Vertex, Vertex),
    pub correct: Option<u32>,
    pub subs: Vec<SubGadget>,
    /// The local gadget, for structural comparisons.
    pub local: Option<Gadget>,
    pub offset: Vertex,
}

impl LevelGadget {
    pub fn in_pairs(&self) -> Vec<(Vertex, Vertex)> {
        self.in_vertices.chunks(2).map(|c| (c[0], c[1])).collect()
    }
}

/// Everything needed to interpret a family graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FamilyDescriptor {
    pub kind: FamilyKind,
    pub k: u32,
    /// Correct pair per concealer level 1..k-1 (index l-1). Empty for other
    /// families.
    pub correct_indices: Vec<u32>,
    /// X vertices, index-major; `x_copies` consecutive ids per index.
    pub x: Vec<Vertex>,
    pub x_copies: u32,
    /// x_i^j at position i·k + j.
    pub x_fan: Vec<Vertex>,
    /// y_i^j at position i·y_fan_width + j.
    pub y_fan: Vec<Vertex>,
    pub y_fan_width: u32,
    pub y: Vec<Vertex>,
    /// Gadgets per level 1..k-1 (concealer and queue families).
    pub gadgets: Vec<LevelGadget>,
    /// The pair that splits X into level-(l+1) blocks, per level 1..k-1.
    pub level_outs: Vec<(Vertex, Vertex)>,
    /// Vertices colored apart in the initial coloring.
    pub pre_individualized: Vec<Vertex>,
    /// Named disjoint role sets covering the vertex set.
    pub roles: BTreeMap<String, Vec<Vertex>>,
}

impl FamilyDescriptor {
    pub fn index_count(&self) -> u32 {
        1 << self.k
    }

    /// Vertex ids of block (l, q) within a layer.
    pub fn block(&self, layer: Layer, l: u32, q: u32) -> Result<Vec<Vertex>, FamilyError> {
        if l > self.k || q >= (1u32 << l) {
            return Err(FamilyError::BlockRange { k: self.k, level: l, index: q });
        }
        let width = 1u32 << (self.k - l);
        let indices = q * width..(q + 1) * width;
        Ok(match layer {
            Layer::X => {
                let c = self.x_copies;
                indices
                    .flat_map(|i| (0..c).map(move |t| (i * c + t) as usize))
                    .map(|p| self.x[p])
                    .collect()
            }
            Layer::XFan(j) => {
                if j >= self.k {
                    return Err(FamilyError::LayerRange(j));
                }
                indices.map(|i| self.x_fan[(i * self.k + j) as usize]).collect()
            }
            Layer::YFan(j) => {
                if j >= self.y_fan_width {
                    return Err(FamilyError::LayerRange(j));
                }
                indices.map(|i| self.y_fan[(i * self.y_fan_width + j) as usize]).collect()
            }
            Layer::Y => indices.map(|i| self.y[i as usize]).collect(),
        })
    }

    /// All fan vertices (x_i^*, or y_i^*) of the indices in block (l, q).
    pub fn fan_block(&self, y_side: bool, l: u32, q: u32) -> Vec<Vertex> {
        let width = 1u32 << (self.k - l);
        let (fan, w) = if y_side {
            (&self.y_fan, self.y_fan_width)
        } else {
            (&self.x_fan, self.k)
        };
        let lo = (q * width * w) as usize;
        let hi = ((q + 1) * width * w) as usize;
        fan[lo..hi].to_vec()
    }

    /// Initial depth per class of the graph's initial partition: classes of
    /// pre-individualized vertices start one round later.
    pub fn initial_depths(&self, initial: &Partition) -> Vec<u32> {
        let mut depths = vec![0u32; initial.class_count()];
        for &v in &self.pre_individualized {
            depths[initial.class_of(v) as usize] = 1;
        }
        depths
    }

    /// Role-map sidecar text: one `role <name> <id...>` line per role.
    pub fn roles_text(&self) -> String {
        let mut out = String::new();
        for (name, ids) in &self.roles {
            write!(out, "role {name}").unwrap();
            for id in ids {
                write!(out, " {id}").unwrap();
            }
            out.push('\n');
        }
        out
    }

    /// The partition induced on X, as blocks: the largest level l such
    /// that every class of π restricted to X is a union of level-l blocks and
    /// vice versa. Returns `None` when π[X] is not a block partition.
    pub fn x_block_level(&self, partition: &Partition) -> Option<u32> {
        let labels = self.index_labels(partition, |i| {
            (0..self.x_copies).map(move |t| (i * self.x_copies + t) as usize).collect()
        }, &self.x)?;
        (0..=self.k).find(|&l| is_block_partition(&labels, self.k, l))
    }

    /// Per-index class of a layer, or `None` if the copies of one index are
    /// split apart.
    fn index_labels(
        &self,
        partition: &Partition,
        positions: impl Fn(u32) -> Vec<usize>,
        layer: &[Vertex],
    ) -> Option<Vec<ClassId>> {
        (0..self.index_count())
            .map(|i| {
                let ps = positions(i);
                let c = partition.class_of(layer[ps[0]]);
                ps.iter().all(|&p| partition.class_of(layer[p]) == c).then_some(c)
            })
            .collect()
    }

    /// Per-index classes of X, XX, YY and Y (using fan copy 0 for the fans).
    pub fn layer_index_labels(&self, partition: &Partition) -> Option<[Vec<ClassId>; 4]> {
        let c = self.x_copies;
        let x = self.index_labels(partition, |i| (0..c).map(|t| (i * c + t) as usize).collect(), &self.x)?;
        let k = self.k;
        let xf = self.index_labels(partition, |i| (0..k).map(|j| (i * k + j) as usize).collect(), &self.x_fan)?;
        let w = self.y_fan_width;
        let yf = self.index_labels(partition, |i| (0..w).map(|j| (i * w + j) as usize).collect(), &self.y_fan)?;
        let y = self.index_labels(partition, |i| vec![i as usize], &self.y)?;
        Some([x, xf, yf, y])
    }

    fn push_role(&mut self, name: impl Into<String>, ids: Vec<Vertex>) {
        self.roles.insert(name.into(), ids);
    }
}

/// True when the labels, per index, form exactly the level-l blocks.
fn is_block_partition(labels: &[ClassId], k: u32, l: u32) -> bool {
    let width = 1usize << (k - l);
    let mut seen = std::collections::HashSet::new();
    for block in labels.chunks(width) {
        if block.iter().any(|&c| c != block[0]) || !seen.insert(block[0]) {
            return false;
        }
    }
    true
}

/// Coarsening check: every class of `fine` maps into one class of `coarse`.
pub fn labels_refine(fine: &[ClassId], coarse: &[ClassId]) -> bool {
    let mut map = std::collections::HashMap::new();
    fine.iter().zip(coarse).all(|(f, c)| *map.entry(*f).or_insert(*c) == *c)
}

/// Incremental builder shared by all families.
struct Builder {
    n: u32,
    edges: Vec<(Vertex, Vertex)>,
}

impl Builder {
    fn alloc(&mut self, count: u32) -> Vec<Vertex> {
        let ids = (self.n..self.n + count).collect();
        self.n += count;
        ids
    }

    fn edge(&mut self, u: Vertex, v: Vertex) {
        self.edges.push((u, v));
    }

    fn embed(&mut self, g: &Gadget) -> (Vertex, crate::gadgets::Ports, Vec<Vertex>) {
        let offset = self.n;
        let ids = self.alloc(g.vertex_count as u32);
        let ports = g.embed(offset, &mut self.edges);
        (offset, ports, ids)
    }
}

/// Indices of the even (`parity` 0) or odd blocks of level l.
fn parity_indices(k: u32, l: u32, parity: u32) -> impl Iterator<Item = u32> {
    let width = 1u32 << (k - l);
    (0..1u32 << k).filter(move |i| (i / width) % 2 == parity)
}

/// Core layers plus descriptor skeleton.
fn core(kind: FamilyKind, k: u32, x_copies: u32, y_fan_width: u32) -> (Builder, FamilyDescriptor) {
    let big_n = 1u32 << k;
    let mut b = Builder { n: 0, edges: Vec::new() };
    let x = b.alloc(big_n * x_copies);
    let x_fan = b.alloc(big_n * k);
    let y_fan = b.alloc(big_n * y_fan_width);
    let y = b.alloc(big_n);
    for i in 0..big_n {
        for t in 0..x_copies {
            for j in 0..k {
                b.edge(x[(i * x_copies + t) as usize], x_fan[(i * k + j) as usize]);
            }
        }
        for j in 0..y_fan_width {
            b.edge(y[i as usize], y_fan[(i * y_fan_width + j) as usize]);
        }
        for j in 0..k {
            for jj in 0..y_fan_width {
                b.edge(x_fan[(i * k + j) as usize], y_fan[(i * y_fan_width + jj) as usize]);
            }
        }
    }
    let mut d = FamilyDescriptor {
        kind,
        k,
        correct_indices: Vec::new(),
        x: x.clone(),
        x_copies,
        x_fan: x_fan.clone(),
        y_fan: y_fan.clone(),
        y_fan_width,
        y: y.clone(),
        gadgets: Vec::new(),
        level_outs: Vec::new(),
        pre_individualized: Vec::new(),
        roles: BTreeMap::new(),
    };
    d.push_role("X", x);
    d.push_role("XX", x_fan);
    d.push_role("YY", y_fan);
    d.push_role("Y", y);
    (b, d)
}

/// X vertices of the indices in `indices`, all copies.
fn x_of(d: &FamilyDescriptor, indices: impl Iterator<Item = u32>) -> Vec<Vertex> {
    let c = d.x_copies;
    indices
        .flat_map(|i| (0..c).map(move |t| d.x[(i * c + t) as usize]))
        .collect()
}

/// v1 – v2, v2 to the first half of X, v3 to the second half.
fn start_triple(b: &mut Builder, d: &mut FamilyDescriptor) {
    let v = b.alloc(3);
    b.edge(v[0], v[1]);
    let k = d.k;
    for x in x_of(d, parity_indices(k, 1, 0)) {
        b.edge(v[1], x);
    }
    for x in x_of(d, parity_indices(k, 1, 1)) {
        b.edge(v[2], x);
    }
    d.push_role("start", v);
}

fn finish(b: Builder, d: FamilyDescriptor) -> (ColoredGraph, FamilyDescriptor) {
    let mut colors = vec![0u32; b.n as usize];
    for (i, &v) in d.pre_individualized.iter().enumerate() {
        colors[v as usize] = i as u32 + 1;
    }
    let g = ColoredGraph::new(b.n as usize, &b.edges, &colors).expect("generator emits a simple graph");
    debug_assert_eq!(d.roles.values().map(Vec::len).sum::<usize>(), b.n as usize);
    (g, d)
}

/// Concealer graph with correct pair `correct_indices[l-1]` at level l.
pub fn build_concealer_graph(
    k: u32,
    correct_indices: &[u32],
) -> Result<(ColoredGraph, FamilyDescriptor), FamilyError> {
    if k < 2 {
        return Err(FamilyError::SmallK(k));
    }
    if correct_indices.len() != (k - 1) as usize {
        return Err(FamilyError::IndexCount {
            expected: (k - 1) as usize,
            got: correct_indices.len(),
        });
    }
    let (mut b, mut d) = core(FamilyKind::Concealer, k, 1, k);
    d.correct_indices = correct_indices.to_vec();
    for l in 1..k {
        let g = build_concealer(l, correct_indices[(l - 1) as usize])?;
        let (offset, ports, ids) = b.embed(&g);
        let in_vertices: Vec<Vertex> = ports.in_pairs.iter().flat_map(|&(a, c)| [a, c]).collect();
        for (q, &inv) in in_vertices.iter().enumerate() {
            for y in d.block(Layer::Y, l, q as u32)? {
                b.edge(y, inv);
            }
        }
        for (parity, out) in [(0, ports.out_pair.0), (1, ports.out_pair.1)] {
            for x in x_of(&d, parity_indices(k, l + 1, parity)) {
                b.edge(out, x);
            }
        }
        let subs = if l == 1 {
            vec![SubGadget {
                in_pair: ports.in_pairs[0],
                and_in: [offset, offset + 1, offset + 2, offset + 3],
                middle: [offset + 4, offset + 5, offset + 6, offset + 7],
                out_pair: ports.out_pair,
            }]
        } else {
            (0..1u32 << (l - 1))
                .map(|j| {
                    let s = offset + 12 * j;
                    SubGadget {
                        in_pair: (s + 10, s + 11),
                        and_in: [s, s + 1, s + 2, s + 3],
                        middle: [s + 4, s + 5, s + 6, s + 7],
                        out_pair: (s + 8, s + 9),
                    }
                })
                .collect()
        };
        d.push_role(format!("gadget.{l:02}"), ids.clone());
        d.level_outs.push(ports.out_pair);
        d.gadgets.push(LevelGadget {
            level: l,
            vertices: ids,
            in_vertices,
            out_pair: ports.out_pair,
            correct: Some(correct_indices[(l - 1) as usize]),
            subs,
            local: Some(g),
            offset,
        });
    }
    start_triple(&mut b, &mut d);
    Ok(finish(b, d))
}

/// Stack-advantage graph, optionally in one of the priority-queue variants.
fn stack_adv(kind: FamilyKind, k: u32) -> Result<(ColoredGraph, FamilyDescriptor), FamilyError> {
    if k < 2 {
        return Err(FamilyError::SmallK(k));
    }
    let (x_copies, y_width) = match kind {
        FamilyKind::PqMaxAdv => (2, k),
        FamilyKind::PqMinAdv => (1, 2 * k),
        _ => (1, k),
    };
    let (mut b, mut d) = core(kind, k, x_copies, y_width);
    let mut a_ids = Vec::new();
    for l in 1..k {
        let a = b.alloc(2);
        for parity in 0..2 {
            for i in parity_indices(k, l, parity) {
                b.edge(a[parity as usize], d.y[i as usize]);
            }
            for x in x_of(&d, parity_indices(k, l + 1, parity)) {
                b.edge(a[parity as usize], x);
            }
        }
        d.level_outs.push((a[0], a[1]));
        a_ids.extend(a);
    }
    d.push_role("A", a_ids);
    start_triple(&mut b, &mut d);
    Ok(finish(b, d))
}

pub fn build_stack_adv_graph(k: u32) -> Result<(ColoredGraph, FamilyDescriptor), FamilyError> {
    stack_adv(FamilyKind::StackAdv, k)
}

/// Which priority-queue variant to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PqKind {
    Max,
    Min,
}

pub fn build_pq_adv_graph(k: u32, kind: PqKind) -> Result<(ColoredGraph, FamilyDescriptor), FamilyError> {
    stack_adv(
        match kind {
            PqKind::Max => FamilyKind::PqMaxAdv,
            PqKind::Min => FamilyKind::PqMinAdv,
        },
        k,
    )
}

/// Queue-advantage graph. The start vertices s1..s4 get initial colors 1..4;
/// everything else has color 0.
pub fn build_queue_adv_graph(k: u32) -> Result<(ColoredGraph, FamilyDescriptor), FamilyError> {
    if k < 2 {
        return Err(FamilyError::SmallK(k));
    }
    let (mut b, mut d) = core(FamilyKind::QueueAdv, k, 1, k);
    let big_n = 1u32 << k;
    // AND_l per level; AND_1 is a plain wire pair serving as ins and outs.
    for l in 1..k {
        let (ids, in_vertices, out_pair) = if l == 1 {
            let w = b.alloc(2);
            (w.clone(), w.clone(), (w[0], w[1]))
        } else {
            let g = build_and(l)?;
            let (_, ports, ids) = b.embed(&g);
            let ins = ports.in_pairs.iter().flat_map(|&(a, c)| [a, c]).collect();
            (ids, ins, ports.out_pair)
        };
        for (q, &inv) in in_vertices.iter().enumerate() {
            for y in d.block(Layer::Y, l, q as u32)? {
                b.edge(y, inv);
            }
        }
        for (parity, out) in [(0, out_pair.0), (1, out_pair.1)] {
            for x in x_of(&d, parity_indices(k, l + 1, parity)) {
                b.edge(out, x);
            }
        }
        d.push_role(format!("and.{l:02}"), ids.clone());
        d.level_outs.push(out_pair);
        d.gadgets.push(LevelGadget {
            level: l,
            offset: ids[0],
            vertices: ids,
            in_vertices,
            out_pair,
            correct: None,
            subs: Vec::new(),
            local: None,
        });
    }
    // X-paths: layer l (1..k) vertex of index i; layer k touches x_i.
    let mut layers = Vec::new();
    for l in 1..=k {
        let ids = b.alloc(big_n);
        d.push_role(format!("xpath.{l:02}"), ids.clone());
        layers.push(ids);
    }
    for l in 0..k as usize {
        for i in 0..big_n as usize {
            let next = if l + 1 < k as usize { layers[l + 1][i] } else { d.x[i] };
            b.edge(layers[l][i], next);
        }
    }
    // Start gadget.
    let s = b.alloc(4);
    let and2 = build_and(2)?;
    let (_, start, start_ids) = b.embed(&and2);
    let b_start = [start.in_pairs[0].0, start.in_pairs[0].1, start.in_pairs[1].0, start.in_pairs[1].1];
    for i in 0..4 {
        b.edge(s[i], b_start[i]);
    }
    d.pre_individualized = s.clone();
    d.push_role("start.s", s);
    d.push_role("start.and", start_ids);
    // Stack paths p1, p2 with k+2 pairs each, attached to b_start pairs.
    let uni = build_unidirectional();
    let p_end = b.alloc(2);
    let mut path_ids = Vec::new();
    let mut end_ids = Vec::new();
    for (j, attach) in [(0usize, [b_start[0], b_start[1]]), (1, [b_start[2], b_start[3]])] {
        let pairs: Vec<Vec<Vertex>> = (0..k + 2).map(|_| b.alloc(2)).collect();
        for t in 0..2 {
            b.edge(attach[t], pairs[0][t]);
            for i in 0..(k + 1) as usize {
                b.edge(pairs[i][t], pairs[i + 1][t]);
            }
        }
        let (_, ports, ids) = embed_unidirectional(&mut b, &uni, (pairs[(k + 1) as usize][0], pairs[(k + 1) as usize][1]));
        b.edge(ports.out_pair.0, p_end[0]);
        b.edge(ports.out_pair.1, p_end[1]);
        path_ids.push(pairs.concat());
        end_ids.push(ids);
        let _ = j;
    }
    for x in x_of(&d, parity_indices(k, 1, 0)) {
        b.edge(p_end[0], x);
    }
    for x in x_of(&d, parity_indices(k, 1, 1)) {
        b.edge(p_end[1], x);
    }
    d.push_role("path.p1", path_ids[0].clone());
    d.push_role("path.p2", path_ids[1].clone());
    d.push_role("uend.1", end_ids[0].clone());
    d.push_role("uend.2", end_ids[1].clone());
    d.push_role("pend", p_end);
    // Queue path: pair l (1..k) feeds the X-path layer l through U_Q^l.
    let pq: Vec<Vec<Vertex>> = (0..k).map(|_| b.alloc(2)).collect();
    for t in 0..2 {
        b.edge([start.out_pair.0, start.out_pair.1][t], pq[0][t]);
        for i in 0..(k - 1) as usize {
            b.edge(pq[i][t], pq[i + 1][t]);
        }
    }
    let mut uq_ids = Vec::new();
    for l in 1..=k {
        let pair = &pq[(l - 1) as usize];
        let (_, ports, ids) = embed_unidirectional(&mut b, &uni, (pair[0], pair[1]));
        for (parity, out) in [(0, ports.out_pair.0), (1, ports.out_pair.1)] {
            for i in parity_indices(k, l, parity) {
                b.edge(out, layers[(l - 1) as usize][i as usize]);
            }
        }
        uq_ids.extend(ids);
    }
    d.push_role("path.pq", pq.concat());
    d.push_role("uq", uq_ids);
    Ok(finish(b, d))
}

/// Embeds the AND_2 part of a unidirectional gadget whose in-pair is the
/// existing pair `ins`.
fn embed_unidirectional(
    b: &mut Builder,
    uni: &Gadget,
    ins: (Vertex, Vertex),
) -> (Vertex, crate::gadgets::Ports, Vec<Vertex>) {
    let offset = b.n;
    let ids = b.alloc(10);
    let map = |v: Vertex| match v {
        10 => ins.0,
        11 => ins.1,
        v => v + offset,
    };
    for &(u, v) in &uni.edges {
        b.edges.push((map(u), map(v)));
    }
    let ports = crate::gadgets::Ports {
        in_pairs: vec![ins],
        out_pair: (map(uni.out_pair.0), map(uni.out_pair.1)),
    };
    (offset, ports, ids)
}

/// Builds any family with default parameters (correct indices all 0 for
/// the concealer family).
pub fn build_family(kind: FamilyKind, k: u32) -> Result<(ColoredGraph, FamilyDescriptor), FamilyError> {
    match kind {
        FamilyKind::Concealer => build_concealer_graph(k, &vec![0; k.saturating_sub(1) as usize]),
        FamilyKind::StackAdv => build_stack_adv_graph(k),
        FamilyKind::QueueAdv => build_queue_adv_graph(k),
        FamilyKind::PqMaxAdv => build_pq_adv_graph(k, PqKind::Max),
        FamilyKind::PqMinAdv => build_pq_adv_graph(k, PqKind::Min),
    }
}

/// Closed-form vertex and edge counts assembled from the family definitions.
pub fn closed_form_size(kind: FamilyKind, k: u32) -> (usize, usize) {
    let n = 1usize << k;
    let k = k as usize;
    match kind {
        FamilyKind::StackAdv | FamilyKind::PqMaxAdv | FamilyKind::PqMinAdv => {
            let (xc, yw) = match kind {
                FamilyKind::PqMaxAdv => (2, k),
                FamilyKind::PqMinAdv => (1, 2 * k),
                _ => (1, k),
            };
            let v = n * xc + n * k + n * yw + n + 2 * (k - 1) + 3;
            let e = 1 + n * xc + n * xc * k + n * yw + n * k * yw + (k - 1) * n + (k - 1) * n * xc;
            (v, e)
        }
        FamilyKind::Concealer => {
            let mut v = 2 * n + 2 * n * k + 3;
            let mut e = 1 + n + 2 * n * k + n * k * k + 2 * (k - 1) * n;
            for l in 1..k {
                if l == 1 {
                    v += 12;
                    e += 16;
                } else {
                    v += 12 * (1 << (l - 1)) + 2;
                    e += 18 * (1 << (l - 1));
                }
            }
            (v, e)
        }
        FamilyKind::QueueAdv => {
            let mut v = 2 * n + 2 * n * k;
            let mut e = n * k * 2 + n * k * k + 2 * (k - 1) * n;
            for l in 1..k {
                if l == 1 {
                    v += 2;
                } else {
                    v += 10 * ((1 << (l - 1)) - 1);
                    e += 14 * (1 << (l - 1)) - 16;
                }
            }
            // X-paths.
            v += n * k;
            e += n * k;
            // a_Q fans into the path layers.
            e += n * k;
            // Start: s, AND_2, attachments of s and of the two paths.
            v += 4 + 10;
            e += 4 + 12 + 4;
            // p1, p2 paths and their end gadgets, p_end.
            v += 2 * 2 * (k + 2) + 20 + 2;
            e += 2 * 2 * (k + 1) + 2 * 16 + 4 + n;
            // Queue path and its gadgets.
            v += 2 * k + 10 * k;
            e += 2 + 2 * (k - 1) + 16 * k;
            (v, e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::naive_stable;

    fn covers(g: &ColoredGraph, d: &FamilyDescriptor) {
        let mut seen = vec![false; g.vertex_count()];
        for ids in d.roles.values() {
            for &v in ids {
                assert!(!seen[v as usize], "vertex {v} in two roles");
                seen[v as usize] = true;
            }
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn stack_adv_k3_size() {
        let (g, d) = build_stack_adv_graph(3).unwrap();
        assert_eq!(g.vertex_count(), 71);
        assert_eq!(g.edge_count(), 161);
        covers(&g, &d);
    }

    #[test]
    fn closed_forms_match_generators() {
        for k in 2..=8 {
            for kind in FamilyKind::all() {
                let (g, d) = build_family(kind, k).unwrap();
                assert_eq!((g.vertex_count(), g.edge_count()), closed_form_size(kind, k), "{kind} k={k}");
                covers(&g, &d);
            }
        }
    }

    #[test]
    fn blocks() {
        let (_, d) = build_concealer_graph(4, &[0, 0, 0]).unwrap();
        assert_eq!(d.block(Layer::X, 0, 0).unwrap().len(), 16);
        assert_eq!(d.block(Layer::X, 1, 0).unwrap(), (0..8).collect::<Vec<_>>());
        assert_eq!(d.block(Layer::X, 2, 3).unwrap(), vec![12, 13, 14, 15]);
        assert!(d.block(Layer::X, 2, 4).is_err());
        assert!(d.block(Layer::X, 5, 0).is_err());
        assert_eq!(d.x_fan.len(), 64);
    }

    #[test]
    fn concealer_graph_validates_indices() {
        assert!(build_concealer_graph(4, &[0, 0]).is_err());
        assert!(build_concealer_graph(4, &[0, 2, 0]).is_err());
        assert!(build_concealer_graph(1, &[]).is_err());
        let (_, d) = build_concealer_graph(2, &[0]).unwrap();
        assert_eq!(d.gadgets.len(), 1);
    }

    #[test]
    fn concealer_k8_size_is_near_closed_form() {
        let (g, _) = build_concealer_graph(8, &[0; 7]).unwrap();
        let reference = 256 * 64;
        assert!(g.edge_count() >= reference / 2 && g.edge_count() <= reference * 2);
    }

    #[test]
    fn stable_partition_makes_x_blocks_of_level_k() {
        for kind in FamilyKind::all() {
            for k in 2..=5 {
                let (g, d) = build_family(kind, k).unwrap();
                let s = naive_stable(&g, &g.initial_partition());
                assert_eq!(d.x_block_level(&s), Some(k), "{kind} k={k}");
            }
        }
    }

    #[test]
    fn pq_variants() {
        let (_, d) = build_pq_adv_graph(3, PqKind::Max).unwrap();
        assert_eq!(d.x.len(), 16);
        let (_, d) = build_pq_adv_graph(3, PqKind::Min).unwrap();
        for l in 0..=3 {
            for q in 0..1 << l {
                assert!(d.fan_block(true, l, q).len() > d.fan_block(false, l, q).len());
            }
        }
    }

    #[test]
    fn roles_text_lines() {
        let (_, d) = build_stack_adv_graph(2).unwrap();
        let text = d.roles_text();
        assert!(text.lines().all(|l| l.starts_with("role ")));
        assert!(text.contains("role start 26 27 28"));
    }

    #[test]
    fn family_names_round_trip() {
        for k in FamilyKind::all() {
            assert_eq!(k.to_string().parse::<FamilyKind>().unwrap(), k);
        }
        assert!("nope".parse::<FamilyKind>().is_err());
    }
}
