//! Ordered partitions of a vertex set, plus the equitability test and the
//! naive stable-coloring oracle.
//!
//! Classes are stored as contiguous segments of one permutation array. A
//! split keeps the original class id on the first fragment and hands out
//! fresh ids, in order, to the remaining fragments. Class ids therefore never
//! disappear, and `class_count` only grows.

use std::collections::HashMap;

use crate::graph::{ColoredGraph, Vertex};

/// Dense class id.
pub type ClassId = u32;

#[derive(Debug, Clone)]
pub struct Partition {
    elems: Vec<Vertex>,
    pos: Vec<u32>,
    class_of: Vec<ClassId>,
    start: Vec<u32>,
    len: Vec<u32>,
}

impl PartialEq for Partition {
    /// Two partitions are equal when they have the same classes under the
    /// same ids. Order of vertices inside a class is irrelevant.
    fn eq(&self, other: &Self) -> bool {
        self.class_of == other.class_of
    }
}

impl Eq for Partition {}

impl Partition {
    /// Partition where class `c` holds the vertices with color `c`.
    /// Colors must be contiguous `0..c`.
    pub fn from_colors(colors: &[u32]) -> Self {
        let class_count = colors.iter().map(|&c| c as usize + 1).max().unwrap_or(0);
        let mut len = vec![0u32; class_count];
        for &c in colors {
            len[c as usize] += 1;
        }
        assert!(len.iter().all(|&l| l > 0), "colors must be contiguous");
        let mut start = Vec::with_capacity(class_count);
        let mut acc = 0;
        for &l in &len {
            start.push(acc);
            acc += l;
        }
        let mut fill = start.clone();
        let mut elems = vec![0; colors.len()];
        let mut pos = vec![0; colors.len()];
        for (v, &c) in colors.iter().enumerate() {
            let p = fill[c as usize];
            elems[p as usize] = v as Vertex;
            pos[v] = p;
            fill[c as usize] += 1;
        }
        Partition {
            elems,
            pos,
            class_of: colors.to_vec(),
            start,
            len,
        }
    }

    /// Partition from arbitrary labels, numbering classes by their smallest
    /// vertex.
    pub fn from_labels(labels: &[u32]) -> Self {
        Partition::from_colors(&canonical(labels))
    }

    /// Partition with one class per listed vertex set, in list order.
    pub fn from_classes(vertex_count: usize, classes: &[Vec<Vertex>]) -> Option<Self> {
        let mut colors = vec![u32::MAX; vertex_count];
        for (c, class) in classes.iter().enumerate() {
            if class.is_empty() {
                return None;
            }
            for &v in class {
                if colors.get(v as usize) != Some(&u32::MAX) {
                    return None;
                }
                colors[v as usize] = c as u32;
            }
        }
        colors.iter().all(|&c| c != u32::MAX).then(|| Partition::from_colors(&colors))
    }

    pub fn unit(vertex_count: usize) -> Self {
        Partition::from_colors(&vec![0; vertex_count])
    }

    pub fn vertex_count(&self) -> usize {
        self.class_of.len()
    }

    pub fn class_count(&self) -> usize {
        self.start.len()
    }

    pub fn class_of(&self, v: Vertex) -> ClassId {
        self.class_of[v as usize]
    }

    /// Per-vertex class ids.
    pub fn labels(&self) -> &[ClassId] {
        &self.class_of
    }

    /// Members of class `c`, in internal order.
    pub fn class(&self, c: ClassId) -> &[Vertex] {
        let s = self.start[c as usize] as usize;
        &self.elems[s..s + self.len[c as usize] as usize]
    }

    pub fn class_size(&self, c: ClassId) -> usize {
        self.len[c as usize] as usize
    }

    pub fn is_live(&self, c: ClassId) -> bool {
        (c as usize) < self.class_count()
    }

    pub fn is_discrete(&self) -> bool {
        self.class_count() == self.vertex_count()
    }

    /// Sorted member lists indexed by class id.
    pub fn classes(&self) -> Vec<Vec<Vertex>> {
        (0..self.class_count() as ClassId)
            .map(|c| {
                let mut members = self.class(c).to_vec();
                members.sort_unstable();
                members
            })
            .collect()
    }

    /// Labels renumbered by smallest contained vertex.
    pub fn canonical_labels(&self) -> Vec<u32> {
        canonical(&self.class_of)
    }

    /// Same set of classes, ignoring class numbering.
    pub fn same_classes(&self, other: &Partition) -> bool {
        self.vertex_count() == other.vertex_count()
            && self.canonical_labels() == other.canonical_labels()
    }

    /// True when every class of `self` lies inside a class of `coarser`.
    pub fn refines(&self, coarser: &Partition) -> bool {
        let mut map: Vec<Option<ClassId>> = vec![None; self.class_count()];
        for v in 0..self.vertex_count() {
            let c = self.class_of[v] as usize;
            let d = coarser.class_of[v];
            match map[c] {
                None => map[c] = Some(d),
                Some(e) if e != d => return false,
                _ => {}
            }
        }
        true
    }

    /// Splits class `target` by the per-vertex `key`, where `touched` lists
    /// every member with a nonzero key (no duplicates). Untouched members
    /// implicitly have key 0. Fragments are ordered by key ascending; the
    /// first keeps id `target`. Returns the fragment ids in that order.
    pub(crate) fn split_by_key(
        &mut self,
        target: ClassId,
        touched: &mut [Vertex],
        key: &[u32],
    ) -> Vec<ClassId> {
        let t = target as usize;
        let seg_start = self.start[t] as usize;
        let seg_end = seg_start + self.len[t] as usize;
        debug_assert!(touched.len() <= seg_end - seg_start);
        touched.sort_unstable_by_key(|&v| (key[v as usize], v));
        let untouched = (seg_end - seg_start) - touched.len();
        let first_key = key[touched[0] as usize];
        let last_key = key[touched[touched.len() - 1] as usize];
        if untouched == 0 && first_key == last_key {
            return vec![target];
        }
        // Move touched members to the tail of the segment, in sorted order.
        let tail = seg_end - touched.len();
        let mut boundary = seg_end;
        for &v in touched.iter() {
            boundary -= 1;
            let p = self.pos[v as usize] as usize;
            let other = self.elems[boundary];
            self.elems.swap(p, boundary);
            self.pos[other as usize] = p as u32;
            self.pos[v as usize] = boundary as u32;
        }
        // The loop placed touched vertices in reverse; restore sorted order.
        self.elems[tail..seg_end].reverse();
        for p in tail..seg_end {
            self.pos[self.elems[p] as usize] = p as u32;
        }
        let mut fragments = vec![target];
        let mut group_start = tail;
        if untouched == 0 {
            // The smallest-key touched group keeps the id.
            let mut p = tail;
            while p < seg_end && key[self.elems[p] as usize] == first_key {
                p += 1;
            }
            self.len[t] = (p - seg_start) as u32;
            group_start = p;
        } else {
            self.len[t] = untouched as u32;
        }
        while group_start < seg_end {
            let k = key[self.elems[group_start] as usize];
            let mut p = group_start;
            while p < seg_end && key[self.elems[p] as usize] == k {
                p += 1;
            }
            let id = self.start.len() as ClassId;
            self.start.push(group_start as u32);
            self.len.push((p - group_start) as u32);
            for q in group_start..p {
                self.class_of[self.elems[q] as usize] = id;
            }
            fragments.push(id);
            group_start = p;
        }
        fragments
    }
}

fn canonical(labels: &[u32]) -> Vec<u32> {
    let mut map = HashMap::new();
    labels
        .iter()
        .map(|&l| {
            let next = map.len() as u32;
            *map.entry(l).or_insert(next)
        })
        .collect()
}

/// True iff for every ordered pair of classes (C1, C2), all vertices of C1
/// have the same number of neighbors in C2.
pub fn is_equitable(graph: &ColoredGraph, partition: &Partition) -> bool {
    let n = graph.vertex_count();
    let classes = partition.class_count();
    let mut count = vec![0u32; n];
    let mut touched = Vec::new();
    // Per class: touched members seen, and the first count observed.
    let mut seen = vec![0u32; classes];
    let mut first = vec![0u32; classes];
    let mut dirty_classes = Vec::new();
    for c in 0..classes as ClassId {
        for &w in partition.class(c) {
            for &u in graph.neighbors(w) {
                if count[u as usize] == 0 {
                    touched.push(u);
                }
                count[u as usize] += 1;
            }
        }
        let mut ok = true;
        for &u in &touched {
            let x = partition.class_of(u) as usize;
            if seen[x] == 0 {
                first[x] = count[u as usize];
                dirty_classes.push(x);
            } else if first[x] != count[u as usize] {
                ok = false;
            }
            seen[x] += 1;
        }
        for &x in &dirty_classes {
            if seen[x] as usize != partition.class_size(x as ClassId) {
                ok = false;
            }
            seen[x] = 0;
        }
        for &u in &touched {
            count[u as usize] = 0;
        }
        touched.clear();
        dirty_classes.clear();
        if !ok {
            return false;
        }
    }
    true
}

/// Coarsest equitable partition refining `partition`, by repeated full
/// passes that split every class against every class at once. Classes of the
/// result are numbered by their smallest vertex.
pub fn naive_stable(graph: &ColoredGraph, partition: &Partition) -> Partition {
    let n = graph.vertex_count();
    let mut labels = canonical(partition.labels());
    let mut class_count = labels.iter().map(|&l| l as usize + 1).max().unwrap_or(0);
    loop {
        let mut signature_ids: HashMap<(u32, Vec<(u32, u32)>), u32> = HashMap::new();
        let mut next = Vec::with_capacity(n);
        for v in 0..n as Vertex {
            let mut sig: Vec<(u32, u32)> = Vec::new();
            let mut nbr: Vec<u32> = graph.neighbors(v).iter().map(|&u| labels[u as usize]).collect();
            nbr.sort_unstable();
            for l in nbr {
                match sig.last_mut() {
                    Some((last, cnt)) if *last == l => *cnt += 1,
                    _ => sig.push((l, 1)),
                }
            }
            let fresh = signature_ids.len() as u32;
            next.push(*signature_ids.entry((labels[v as usize], sig)).or_insert(fresh));
        }
        let next = canonical(&next);
        let next_count = signature_ids.len();
        labels = next;
        if next_count == class_count {
            break;
        }
        class_count = next_count;
    }
    Partition::from_colors(&labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p3() -> ColoredGraph {
        ColoredGraph::new(3, &[(0, 1), (1, 2)], &[0, 0, 0]).unwrap()
    }

    #[test]
    fn from_colors_groups_vertices() {
        let p = Partition::from_colors(&[1, 0, 1]);
        assert_eq!(p.class_count(), 2);
        assert_eq!(p.class(0), &[1]);
        assert_eq!(p.class(1), &[0, 2]);
    }

    #[test]
    fn split_by_key_orders_fragments_and_keeps_first_id() {
        let mut p = Partition::unit(6);
        let mut key = vec![0u32; 6];
        key[1] = 2;
        key[4] = 1;
        key[5] = 2;
        let mut touched = vec![5, 1, 4];
        let frags = p.split_by_key(0, &mut touched, &key);
        assert_eq!(frags, vec![0, 1, 2]);
        assert_eq!(p.classes(), vec![vec![0, 2, 3], vec![4], vec![1, 5]]);
        // All touched, one key: no split.
        let mut touched = vec![1, 5];
        assert_eq!(p.split_by_key(2, &mut touched, &key), vec![2]);
        // All touched, two keys: the smallest key keeps the id.
        key[1] = 7;
        let mut touched = vec![1, 5];
        assert_eq!(p.split_by_key(2, &mut touched, &key), vec![2, 3]);
        assert_eq!(p.class(2), &[5]);
        assert_eq!(p.class(3), &[1]);
    }

    #[test]
    fn equitable_examples() {
        let g = p3();
        assert!(is_equitable(&g, &Partition::from_colors(&[0, 1, 0])));
        assert!(!is_equitable(&g, &Partition::unit(3)));
    }

    #[test]
    fn naive_stable_examples() {
        let g = p3();
        let s = naive_stable(&g, &Partition::unit(3));
        assert_eq!(s.classes(), vec![vec![0, 2], vec![1]]);
        let empty = ColoredGraph::new(5, &[], &[0; 5]).unwrap();
        assert_eq!(naive_stable(&empty, &Partition::unit(5)).class_count(), 1);
    }

    #[test]
    fn refines_and_same_classes() {
        let a = Partition::from_colors(&[0, 1, 0, 2]);
        let b = Partition::from_colors(&[1, 0, 1, 0]);
        assert!(a.refines(&b));
        assert!(!b.refines(&a));
        let c = Partition::from_colors(&[2, 0, 2, 1]);
        assert!(a.same_classes(&c));
        assert!(a != c);
    }
}
