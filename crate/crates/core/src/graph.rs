//! Immutable colored graphs and their text format.
//!
//! The text format is line based:
//!
//! ```text
//! p cr <n> <m>
//! c <v> <color>      (optional, default color 0)
//! e <u> <v>          (exactly m lines, 0-indexed)
//! ```
//!
//! Lines starting with `#` are comments and are ignored by the parser.
//! The writer emits `c` lines only for vertices with a nonzero color and
//! emits edges as `u < v` in lexicographic order, so output is bit-exact for
//! a given graph.

use std::fmt::Write as _;

use crate::partition::Partition;

/// Dense vertex id.
pub type Vertex = u32;

/// Errors raised while constructing or parsing a graph.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GraphError {
    #[error("self-loop at vertex {0}")]
    SelfLoop(Vertex),
    #[error("duplicate edge {0}-{1}")]
    DuplicateEdge(Vertex, Vertex),
    #[error("endpoint {vertex} out of range for {n} vertices")]
    VertexOutOfRange { vertex: Vertex, n: usize },
    #[error("expected {expected} colors, got {got}")]
    ColorCountMismatch { expected: usize, got: usize },
    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// A simple undirected graph with an initial vertex coloring.
///
/// Adjacency is stored in compressed form with each neighbor list sorted.
/// Colors are normalized to the contiguous range `0..color_count`, keeping
/// the relative order of the original color values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColoredGraph {
    offsets: Vec<usize>,
    adjacency: Vec<Vertex>,
    colors: Vec<u32>,
    color_count: u32,
    edge_count: usize,
}

impl ColoredGraph {
    /// Builds a graph from an edge list and per-vertex colors.
    pub fn new(
        vertex_count: usize,
        edges: &[(Vertex, Vertex)],
        colors: &[u32],
    ) -> Result<Self, GraphError> {
        if colors.len() != vertex_count {
            return Err(GraphError::ColorCountMismatch {
                expected: vertex_count,
                got: colors.len(),
            });
        }
        let mut degree = vec![0usize; vertex_count];
        for &(u, v) in edges {
            for w in [u, v] {
                if w as usize >= vertex_count {
                    return Err(GraphError::VertexOutOfRange {
                        vertex: w,
                        n: vertex_count,
                    });
                }
            }
            if u == v {
                return Err(GraphError::SelfLoop(u));
            }
            degree[u as usize] += 1;
            degree[v as usize] += 1;
        }
        let mut offsets = Vec::with_capacity(vertex_count + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut fill = offsets[..vertex_count].to_vec();
        let mut adjacency = vec![0; 2 * edges.len()];
        for &(u, v) in edges {
            adjacency[fill[u as usize]] = v;
            fill[u as usize] += 1;
            adjacency[fill[v as usize]] = u;
            fill[v as usize] += 1;
        }
        for v in 0..vertex_count {
            let list = &mut adjacency[offsets[v]..offsets[v + 1]];
            list.sort_unstable();
            if let Some(w) = list.windows(2).find(|w| w[0] == w[1]) {
                let (a, b) = (v as Vertex, w[0]);
                return Err(GraphError::DuplicateEdge(a.min(b), a.max(b)));
            }
        }
        let (colors, color_count) = normalize_colors(colors);
        Ok(ColoredGraph {
            offsets,
            adjacency,
            colors,
            color_count,
            edge_count: edges.len(),
        })
    }

    /// Same structure, different initial coloring.
    pub fn with_colors(&self, colors: &[u32]) -> Result<Self, GraphError> {
        if colors.len() != self.vertex_count() {
            return Err(GraphError::ColorCountMismatch {
                expected: self.vertex_count(),
                got: colors.len(),
            });
        }
        let (colors, color_count) = normalize_colors(colors);
        Ok(ColoredGraph {
            colors,
            color_count,
            ..self.clone()
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.colors.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn neighbors(&self, v: Vertex) -> &[Vertex] {
        &self.adjacency[self.offsets[v as usize]..self.offsets[v as usize + 1]]
    }

    pub fn degree(&self, v: Vertex) -> usize {
        self.offsets[v as usize + 1] - self.offsets[v as usize]
    }

    pub fn has_edge(&self, u: Vertex, v: Vertex) -> bool {
        self.neighbors(u).binary_search(&v).is_ok()
    }

    /// Normalized initial colors.
    pub fn colors(&self) -> &[u32] {
        &self.colors
    }

    pub fn color_count(&self) -> u32 {
        self.color_count
    }

    /// Edges with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (Vertex, Vertex)> + '_ {
        (0..self.vertex_count() as Vertex).flat_map(move |u| {
            self.neighbors(u)
                .iter()
                .filter(move |&&v| u < v)
                .map(move |&v| (u, v))
        })
    }

    /// The partition given by the initial coloring; class id = color.
    pub fn initial_partition(&self) -> Partition {
        Partition::from_colors(&self.colors)
    }

    /// Serializes to the text format.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "p cr {} {}", self.vertex_count(), self.edge_count).unwrap();
        for (v, &c) in self.colors.iter().enumerate() {
            if c != 0 {
                writeln!(out, "c {v} {c}").unwrap();
            }
        }
        for (u, v) in self.edges() {
            writeln!(out, "e {u} {v}").unwrap();
        }
        out
    }

    /// Parses the text format.
    pub fn from_text(text: &str) -> Result<Self, GraphError> {
        let err = |line: usize, message: &str| GraphError::Parse {
            line,
            message: message.to_string(),
        };
        let mut header: Option<(usize, usize)> = None;
        let mut colors = Vec::new();
        let mut edges = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut fields = line.split_whitespace();
            let tag = fields.next().unwrap();
            let nums: Vec<usize> = if tag == "p" {
                Vec::new()
            } else {
                fields
                    .map(str::parse::<usize>)
                    .collect::<Result<_, _>>()
                    .map_err(|_| err(line_no, "expected nonnegative integers"))?
            };
            match (tag, header) {
                ("p", None) => {
                    let parts: Vec<&str> = line.split_whitespace().collect();
                    if parts.len() != 4 || parts[1] != "cr" {
                        return Err(err(line_no, "header must be `p cr <n> <m>`"));
                    }
                    let n = parts[2].parse().map_err(|_| err(line_no, "bad n"))?;
                    let m = parts[3].parse().map_err(|_| err(line_no, "bad m"))?;
                    header = Some((n, m));
                    colors = vec![0u32; n];
                }
                ("p", Some(_)) => return Err(err(line_no, "duplicate header")),
                (_, None) => return Err(err(line_no, "missing header")),
                ("c", Some((n, _))) => {
                    if nums.len() != 2 {
                        return Err(err(line_no, "expected `c <v> <color>`"));
                    }
                    if nums[0] >= n {
                        return Err(err(line_no, "vertex out of range"));
                    }
                    colors[nums[0]] = u32::try_from(nums[1])
                        .map_err(|_| err(line_no, "color too large"))?;
                }
                ("e", Some((n, _))) => {
                    if nums.len() != 2 {
                        return Err(err(line_no, "expected `e <u> <v>`"));
                    }
                    if nums[0] >= n || nums[1] >= n {
                        return Err(err(line_no, "vertex out of range"));
                    }
                    edges.push((nums[0] as Vertex, nums[1] as Vertex));
                }
                _ => return Err(err(line_no, "unknown line tag")),
            }
        }
        let (n, m) = header.ok_or_else(|| err(0, "missing header"))?;
        if edges.len() != m {
            return Err(err(0, &format!("header declares {m} edges, found {}", edges.len())));
        }
        ColoredGraph::new(n, &edges, &colors)
    }
}

/// Order-preserving renumbering of color values onto `0..c`.
fn normalize_colors(colors: &[u32]) -> (Vec<u32>, u32) {
    let mut distinct: Vec<u32> = colors.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    let normalized = colors
        .iter()
        .map(|c| distinct.binary_search(c).unwrap() as u32)
        .collect();
    (normalized, distinct.len() as u32)
}
