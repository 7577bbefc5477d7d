//! CFI-style gadgets with named ports.
//!
//! Local vertex layout of `AND_2`:
//!
//! | ids   | role                |
//! |-------|---------------------|
//! | 0..4  | in-vertices b0..b3  |
//! | 4..8  | middle c0..c3       |
//! | 8, 9  | out-vertices a0, a1 |
//!
//! In-pairs are (b0, b1) and (b2, b3). `AND_i` places the two `AND_{i-1}`
//! children first and the top `AND_2` last; the first child's outs feed the
//! top's first in-pair and the second child's outs feed its second in-pair.
//!
//! The unidirectional gadget is `AND_2` plus new in-vertices 10 and 11. A
//! concealer `C_i` (i ≥ 2) holds 2^{i-1} unidirectional sub-gadgets, sub-gadget
//! j at ids 12j..12j+11, followed by the global out pair.

use std::fmt::Write as _;

use crate::graph::{ColoredGraph, GraphError, Vertex};

/// AND_2 edge list.
const AND2_EDGES: [(Vertex, Vertex); 12] = [
    (0, 4),
    (0, 6),
    (1, 5),
    (1, 7),
    (2, 5),
    (2, 6),
    (3, 4),
    (3, 7),
    (4, 8),
    (5, 8),
    (6, 9),
    (7, 9),
];

/// Which gadget a fragment is.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GadgetKind {
    And(u32),
    Unidirectional,
    /// Unidirectional sub-gadget rewired so its in-pair cannot reach the out
    /// pair.
    DeadEnd,
    Concealer { level: u32, correct: u32 },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GadgetError {
    #[error("AND_i needs i >= 2, got {0}")]
    AndLevel(u32),
    #[error("concealer level must be >= 1")]
    ConcealerLevel,
    #[error("correct pair {index} out of range for {pairs} pairs")]
    CorrectOutOfRange { index: u32, pairs: u32 },
}

/// A graph fragment with local ids `0..vertex_count` and named ports.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Gadget {
    pub kind: GadgetKind,
    pub vertex_count: usize,
    pub edges: Vec<(Vertex, Vertex)>,
    pub in_pairs: Vec<(Vertex, Vertex)>,
    pub out_pair: (Vertex, Vertex),
}

impl Gadget {
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// In-vertices in pair order: b_0, b_1, b_2, ...
    pub fn in_vertices(&self) -> Vec<Vertex> {
        self.in_pairs.iter().flat_map(|&(a, b)| [a, b]).collect()
    }

    /// Index of the correct pair of a concealer.
    pub fn correct_pair(&self) -> Option<u32> {
        match self.kind {
            GadgetKind::Concealer { correct, .. } => Some(correct),
            _ => None,
        }
    }

    /// Builds the standalone graph with the given colors.
    pub fn graph(&self, colors: &[u32]) -> Result<ColoredGraph, GraphError> {
        ColoredGraph::new(self.vertex_count, &self.edges, colors)
    }

    /// Coloring that separates in-vertices, middle vertices, and the out
    /// pair, with every vertex of `individualized` given a fresh color.
    pub fn role_coloring(&self, individualized: &[Vertex]) -> Vec<u32> {
        let mut colors = vec![1u32; self.vertex_count];
        for v in self.in_vertices() {
            colors[v as usize] = 0;
        }
        colors[self.out_pair.0 as usize] = 2;
        colors[self.out_pair.1 as usize] = 2;
        for (i, &v) in individualized.iter().enumerate() {
            colors[v as usize] = 3 + i as u32;
        }
        colors
    }

    /// Text format with port annotations.
    pub fn to_text(&self, colors: &[u32]) -> Result<String, GraphError> {
        let mut out = self.graph(colors)?.to_text();
        for (j, (u, v)) in self.in_pairs.iter().enumerate() {
            writeln!(out, "# in {j} {u} {v}").unwrap();
        }
        writeln!(out, "# out {} {}", self.out_pair.0, self.out_pair.1).unwrap();
        Ok(out)
    }

    /// Copies this gadget's edges into `edges` shifted by `offset`; returns
    /// the shifted ports.
    pub fn embed(&self, offset: Vertex, edges: &mut Vec<(Vertex, Vertex)>) -> Ports {
        edges.extend(self.edges.iter().map(|&(u, v)| (u + offset, v + offset)));
        Ports {
            in_pairs: self.in_pairs.iter().map(|&(a, b)| (a + offset, b + offset)).collect(),
            out_pair: (self.out_pair.0 + offset, self.out_pair.1 + offset),
        }
    }
}

/// Ports of an embedded gadget in global ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ports {
    pub in_pairs: Vec<(Vertex, Vertex)>,
    pub out_pair: (Vertex, Vertex),
}

pub fn build_and(i: u32) -> Result<Gadget, GadgetError> {
    match i {
        0 | 1 => Err(GadgetError::AndLevel(i)),
        2 => Ok(Gadget {
            kind: GadgetKind::And(2),
            vertex_count: 10,
            edges: AND2_EDGES.to_vec(),
            in_pairs: vec![(0, 1), (2, 3)],
            out_pair: (8, 9),
        }),
        _ => {
            let child = build_and(i - 1)?;
            let size = child.vertex_count as Vertex;
            let mut edges = Vec::new();
            let first = child.embed(0, &mut edges);
            let second = child.embed(size, &mut edges);
            let top = build_and(2)?.embed(2 * size, &mut edges);
            for (out, inp) in [(first.out_pair, top.in_pairs[0]), (second.out_pair, top.in_pairs[1])] {
                edges.push((out.0, inp.0));
                edges.push((out.1, inp.1));
            }
            let mut in_pairs = first.in_pairs;
            in_pairs.extend(second.in_pairs);
            Ok(Gadget {
                kind: GadgetKind::And(i),
                vertex_count: 2 * child.vertex_count + 10,
                edges,
                in_pairs,
                out_pair: top.out_pair,
            })
        }
    }
}

pub fn build_unidirectional() -> Gadget {
    unidirectional(false)
}

/// Unidirectional gadget. New in-vertex 10 joins b0 and b2, 11 joins b1 and
/// b3, so either singleton of the new pair splits both AND in-pairs. The
/// dead-end variant joins 10 to b0, b1 and 11 to b2, b3 instead, which never
/// separates an AND in-pair.
fn unidirectional(dead_end: bool) -> Gadget {
    let mut edges = AND2_EDGES.to_vec();
    if dead_end {
        edges.extend([(0, 10), (1, 10), (2, 11), (3, 11)]);
    } else {
        edges.extend([(0, 10), (2, 10), (1, 11), (3, 11)]);
    }
    Gadget {
        kind: if dead_end { GadgetKind::DeadEnd } else { GadgetKind::Unidirectional },
        vertex_count: 12,
        edges,
        in_pairs: vec![(10, 11)],
        out_pair: (8, 9),
    }
}

pub fn build_dead_end() -> Gadget {
    unidirectional(true)
}

pub fn build_concealer(i: u32, correct: u32) -> Result<Gadget, GadgetError> {
    if i == 0 {
        return Err(GadgetError::ConcealerLevel);
    }
    let pairs = 1u32 << (i - 1);
    if correct >= pairs {
        return Err(GadgetError::CorrectOutOfRange { index: correct, pairs });
    }
    if i == 1 {
        let mut g = build_unidirectional();
        g.kind = GadgetKind::Concealer { level: 1, correct: 0 };
        return Ok(g);
    }
    let mut edges = Vec::new();
    let mut in_pairs = Vec::new();
    let a0 = 12 * pairs;
    let a1 = a0 + 1;
    for j in 0..pairs {
        let sub = if j == correct { build_unidirectional() } else { build_dead_end() };
        let ports = sub.embed(12 * j, &mut edges);
        edges.push((ports.out_pair.0, a0));
        edges.push((ports.out_pair.1, a1));
        in_pairs.extend(ports.in_pairs);
    }
    Ok(Gadget {
        kind: GadgetKind::Concealer { level: i, correct },
        vertex_count: 12 * pairs as usize + 2,
        edges,
        in_pairs,
        out_pair: (a0, a1),
    })
}
