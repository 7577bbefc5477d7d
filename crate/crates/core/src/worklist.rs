//! Worklist policies for the cell-extraction refinement driver.
//!
//! Entries are class ids. A class id stays valid for the lifetime of a run
//! (see [`crate::partition`]), so an entry can be retargeted in place when its
//! class is split: the entry keeps its stack position, queue position, or
//! priority-queue insertion sequence and only the referenced class changes.
//! Priority keys are live class sizes; the driver reports every size change
//! of a queued class through [`Worklist::resize`].

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use crate::partition::ClassId;

/// The scheduling disciplines under study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PolicyKind {
    Stack,
    Queue,
    PqMin,
    PqMax,
    SmallestNewStack,
    Hybrid(u32),
}

pub const DEFAULT_HYBRID_WINDOW: u32 = 4;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PolicyError {
    #[error("unknown worklist policy `{0}`")]
    UnknownKind(String),
    #[error("hybrid window must be at least 1")]
    EmptyWindow,
}

impl PolicyKind {
    /// Every registered policy, with the default hybrid window.
    pub fn all() -> [PolicyKind; 6] {
        [
            PolicyKind::Stack,
            PolicyKind::Queue,
            PolicyKind::PqMin,
            PolicyKind::PqMax,
            PolicyKind::SmallestNewStack,
            PolicyKind::Hybrid(DEFAULT_HYBRID_WINDOW),
        ]
    }

    fn validate(self) -> Result<Self, PolicyError> {
        match self {
            PolicyKind::Hybrid(0) => Err(PolicyError::EmptyWindow),
            k => Ok(k),
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolicyKind::Stack => write!(f, "stack"),
            PolicyKind::Queue => write!(f, "queue"),
            PolicyKind::PqMin => write!(f, "pq-min"),
            PolicyKind::PqMax => write!(f, "pq-max"),
            PolicyKind::SmallestNewStack => write!(f, "smallest-stack"),
            PolicyKind::Hybrid(w) => write!(f, "hybrid:{w}"),
        }
    }
}

impl FromStr for PolicyKind {
    type Err = PolicyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let kind = match s {
            "stack" => PolicyKind::Stack,
            "queue" => PolicyKind::Queue,
            "pq-min" => PolicyKind::PqMin,
            "pq-max" => PolicyKind::PqMax,
            "smallest-stack" => PolicyKind::SmallestNewStack,
            "hybrid" => PolicyKind::Hybrid(DEFAULT_HYBRID_WINDOW),
            _ => {
                let w = s
                    .strip_prefix("hybrid:")
                    .and_then(|w| w.parse::<u32>().ok())
                    .ok_or_else(|| PolicyError::UnknownKind(s.to_string()))?;
                PolicyKind::Hybrid(w)
            }
        };
        kind.validate()
    }
}

/// An extracted worklist entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Entry {
    pub class: ClassId,
    pub depth: u32,
}

const NOWHERE: u32 = u32::MAX;

#[derive(Debug, Clone, Copy)]
struct Slot {
    class: ClassId,
    depth: u32,
    seq: u64,
}

/// Worklist state for one refinement run.
#[derive(Debug, Clone)]
pub struct Worklist {
    kind: PolicyKind,
    /// Stack/queue storage. For queues `head` marks the first live slot.
    slots: Vec<Slot>,
    head: usize,
    /// Slot index per class for stacks/queues; unused for priority queues.
    slot_of: Vec<u32>,
    /// Priority queue ordered by (key, seq); key is size or its complement.
    heap: BTreeSet<(u64, u64, ClassId)>,
    heap_key: Vec<Option<(u64, u64, u32)>>,
    next_seq: u64,
}

impl Worklist {
    pub fn new(kind: PolicyKind) -> Result<Self, PolicyError> {
        Ok(Worklist {
            kind: kind.validate()?,
            slots: Vec::new(),
            head: 0,
            slot_of: Vec::new(),
            heap: BTreeSet::new(),
            heap_key: Vec::new(),
            next_seq: 0,
        })
    }

    pub fn kind(&self) -> PolicyKind {
        self.kind
    }

    fn is_pq(&self) -> bool {
        matches!(self.kind, PolicyKind::PqMin | PolicyKind::PqMax)
    }

    fn key(&self, size: usize) -> u64 {
        match self.kind {
            PolicyKind::PqMax => u64::MAX - size as u64,
            _ => size as u64,
        }
    }

    fn grow(&mut self, class: ClassId) {
        let need = class as usize + 1;
        if self.slot_of.len() < need {
            self.slot_of.resize(need, NOWHERE);
            self.heap_key.resize(need, None);
        }
    }

    pub fn len(&self) -> usize {
        if self.is_pq() {
            self.heap.len()
        } else {
            self.slots.len() - self.head
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, class: ClassId) -> bool {
        let c = class as usize;
        if self.is_pq() {
            self.heap_key.get(c).is_some_and(Option::is_some)
        } else {
            self.slot_of.get(c).is_some_and(|&s| s != NOWHERE)
        }
    }

    /// Inserts one class.
    pub fn push(&mut self, class: ClassId, size: usize, depth: u32) {
        debug_assert!(!self.contains(class));
        self.grow(class);
        let seq = self.next_seq;
        self.next_seq += 1;
        if self.is_pq() {
            let key = self.key(size);
            self.heap.insert((key, seq, class));
            self.heap_key[class as usize] = Some((key, seq, depth));
        } else {
            self.slot_of[class as usize] = self.slots.len() as u32;
            self.slots.push(Slot { class, depth, seq });
        }
    }

    /// Inserts the fragments of one split (or of one extraction, for the
    /// smallest-new-class stack) using the policy's ordering rule. Stacks push
    /// by size descending so a smallest fragment ends on top; queues and
    /// priority queues insert in the given order.
    pub fn insert_fragments(&mut self, fragments: &[(ClassId, usize)], depth: u32) {
        match self.kind {
            PolicyKind::Stack | PolicyKind::SmallestNewStack | PolicyKind::Hybrid(_) => {
                let mut order: Vec<(ClassId, usize)> = fragments.to_vec();
                order.sort_by(|a, b| b.1.cmp(&a.1));
                for (c, s) in order {
                    self.push(c, s, depth);
                }
            }
            _ => {
                for &(c, s) in fragments {
                    self.push(c, s, depth);
                }
            }
        }
    }

    /// Points the entry of `old` at `new` without moving it.
    pub fn retarget(&mut self, old: ClassId, new: ClassId, new_size: usize) {
        if old == new {
            self.resize(old, new_size);
            return;
        }
        self.grow(old.max(new));
        if self.is_pq() {
            let (key, seq, depth) = self.heap_key[old as usize].take().expect("queued");
            self.heap.remove(&(key, seq, old));
            let key = self.key(new_size);
            self.heap.insert((key, seq, new));
            self.heap_key[new as usize] = Some((key, seq, depth));
        } else {
            let s = self.slot_of[old as usize];
            self.slot_of[old as usize] = NOWHERE;
            self.slot_of[new as usize] = s;
            self.slots[s as usize].class = new;
        }
    }

    /// Records a size change of a queued class.
    pub fn resize(&mut self, class: ClassId, new_size: usize) {
        if !self.is_pq() {
            return;
        }
        if let Some((key, seq, depth)) = self.heap_key[class as usize] {
            self.heap.remove(&(key, seq, class));
            let key = self.key(new_size);
            self.heap.insert((key, seq, class));
            self.heap_key[class as usize] = Some((key, seq, depth));
        }
    }

    /// Extracts the next entry. `size` reports live class sizes.
    pub fn pop(&mut self, size: impl Fn(ClassId) -> usize) -> Option<Entry> {
        match self.kind {
            PolicyKind::PqMin | PolicyKind::PqMax => {
                let (_, _, class) = self.heap.pop_first()?;
                let (_, _, depth) = self.heap_key[class as usize].take().unwrap();
                Some(Entry { class, depth })
            }
            PolicyKind::Queue => {
                if self.head == self.slots.len() {
                    return None;
                }
                let slot = self.slots[self.head];
                self.head += 1;
                self.slot_of[slot.class as usize] = NOWHERE;
                if self.head == self.slots.len() {
                    self.slots.clear();
                    self.head = 0;
                }
                Some(Entry { class: slot.class, depth: slot.depth })
            }
            PolicyKind::Stack | PolicyKind::SmallestNewStack => {
                let slot = self.slots.pop()?;
                self.slot_of[slot.class as usize] = NOWHERE;
                Some(Entry { class: slot.class, depth: slot.depth })
            }
            PolicyKind::Hybrid(w) => {
                if self.slots.is_empty() {
                    return None;
                }
                let top = self.slots.len() - 1;
                let lowest = self.slots.len().saturating_sub(w as usize);
                // Scan from the top so ties resolve to the higher stack position.
                let mut best = top;
                for i in (lowest..top).rev() {
                    if size(self.slots[i].class) < size(self.slots[best].class) {
                        best = i;
                    }
                }
                let slot = self.slots.remove(best);
                self.slot_of[slot.class as usize] = NOWHERE;
                for i in best..self.slots.len() {
                    self.slot_of[self.slots[i].class as usize] = i as u32;
                }
                Some(Entry { class: slot.class, depth: slot.depth })
            }
        }
    }

    /// Insertion sequence numbers of queued entries, for diagnostics.
    pub fn entries(&self) -> Vec<(ClassId, u64)> {
        if self.is_pq() {
            self.heap.iter().map(|&(_, seq, c)| (c, seq)).collect()
        } else {
            self.slots[self.head..].iter().map(|s| (s.class, s.seq)).collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn drain(w: &mut Worklist, sizes: &[usize]) -> Vec<ClassId> {
        std::iter::from_fn(|| w.pop(|c| sizes[c as usize]).map(|e| e.class)).collect()
    }

    #[test]
    fn parses_cli_tokens() {
        for k in PolicyKind::all() {
            assert_eq!(k.to_string().parse::<PolicyKind>().unwrap(), k);
        }
        assert_eq!("hybrid:7".parse::<PolicyKind>().unwrap(), PolicyKind::Hybrid(7));
        assert_eq!("hybrid:0".parse::<PolicyKind>(), Err(PolicyError::EmptyWindow));
        assert!(matches!("lifo".parse::<PolicyKind>(), Err(PolicyError::UnknownKind(_))));
        assert!(Worklist::new(PolicyKind::Hybrid(0)).is_err());
    }

    #[test]
    fn stack_and_queue_orders() {
        let sizes = [1, 1, 1];
        let mut s = Worklist::new(PolicyKind::Stack).unwrap();
        let mut q = Worklist::new(PolicyKind::Queue).unwrap();
        for c in 0..3 {
            s.push(c, 1, 0);
            q.push(c, 1, 0);
        }
        assert_eq!(drain(&mut s, &sizes), vec![2, 1, 0]);
        assert_eq!(drain(&mut q, &sizes), vec![0, 1, 2]);
    }

    #[test]
    fn pq_min_extracts_smallest() {
        let sizes = [4, 1, 2];
        let mut w = Worklist::new(PolicyKind::PqMin).unwrap();
        for c in 0..3 {
            w.push(c, sizes[c as usize], 0);
        }
        assert_eq!(drain(&mut w, &sizes), vec![1, 2, 0]);
    }

    #[test]
    fn pq_max_order_after_insert() {
        let sizes = [3, 5, 4];
        let mut w = Worklist::new(PolicyKind::PqMax).unwrap();
        w.push(0, 3, 0);
        w.push(1, 5, 0);
        w.insert_fragments(&[(2, 4)], 1);
        assert_eq!(drain(&mut w, &sizes), vec![1, 2, 0]);
    }

    #[test]
    fn pq_ties_follow_insertion_order() {
        let sizes = [2, 2, 2];
        let mut w = Worklist::new(PolicyKind::PqMin).unwrap();
        for c in [2, 0, 1] {
            w.push(c, 2, 0);
        }
        assert_eq!(drain(&mut w, &sizes), vec![2, 0, 1]);
    }

    #[test]
    fn smallest_new_stack_puts_smallest_on_top() {
        let sizes = [4, 2, 2];
        let mut w = Worklist::new(PolicyKind::SmallestNewStack).unwrap();
        w.insert_fragments(&[(0, 4), (1, 2), (2, 2)], 0);
        let first = w.pop(|c| sizes[c as usize]).unwrap();
        assert_eq!(sizes[first.class as usize], 2);
    }

    #[test]
    fn queue_fragments_follow_existing_entries() {
        let sizes = [1, 1, 1];
        let mut w = Worklist::new(PolicyKind::Queue).unwrap();
        w.push(0, 1, 0);
        w.insert_fragments(&[(1, 1), (2, 1)], 1);
        assert_eq!(drain(&mut w, &sizes), vec![0, 1, 2]);
    }

    #[test]
    fn retarget_keeps_position() {
        let sizes = [1, 1, 1, 1];
        let mut w = Worklist::new(PolicyKind::Queue).unwrap();
        w.push(0, 1, 0);
        w.push(1, 1, 0);
        w.retarget(0, 3, 1);
        assert!(!w.contains(0));
        assert!(w.contains(3));
        assert_eq!(drain(&mut w, &sizes), vec![3, 1]);

        let sizes = [5, 3, 1];
        let mut p = Worklist::new(PolicyKind::PqMin).unwrap();
        p.push(0, 5, 0);
        p.push(1, 3, 0);
        p.retarget(0, 2, 1);
        assert_eq!(drain(&mut p, &sizes), vec![2, 1]);
    }

    #[test]
    fn pq_uses_live_sizes() {
        let mut w = Worklist::new(PolicyKind::PqMin).unwrap();
        w.push(0, 5, 0);
        w.push(1, 3, 0);
        w.resize(0, 1);
        assert_eq!(drain(&mut w, &[1, 3]), vec![0, 1]);
    }

    #[test]
    fn hybrid_picks_smallest_in_window() {
        let sizes = [1, 9, 3, 9, 9];
        let mut w = Worklist::new(PolicyKind::Hybrid(3)).unwrap();
        for c in 0..5 {
            w.push(c, sizes[c as usize], 0);
        }
        // Window holds 4, 3, 2; class 0 (size 1) is outside it.
        assert_eq!(w.pop(|c| sizes[c as usize]).unwrap().class, 2);
        // Window now 4, 3, 1; ties resolve to the top.
        assert_eq!(w.pop(|c| sizes[c as usize]).unwrap().class, 4);
        assert_eq!(drain(&mut w, &sizes), vec![0, 3, 1]);
    }
}
