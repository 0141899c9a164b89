//! Power-law condensing history store.
//!
//! Nodes live in an index-linked list inside a slot arena, oldest first.
//! Weights are powers of two and never increase toward the newest node, so
//! every weight class is a contiguous run. When a class grows past `eta`
//! members, its oldest node doubles its weight and absorbs the second
//! oldest, which is unlinked and dropped. Only the class above can overflow
//! as a result, so condensation walks upward until every class fits.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

const NIL: usize = usize::MAX;

/// One retained history entry.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedNode<T> {
    pub time_index: usize,
    pub weight: u64,
    pub field: T,
}

impl<T> WeightedNode<T> {
    /// A freshly recorded time point always enters with weight one.
    pub fn fresh(time_index: usize, field: T) -> Self {
        Self {
            time_index,
            weight: 1,
            field,
        }
    }
}

#[derive(Debug, Clone)]
struct Slot<T> {
    node: Option<WeightedNode<T>>,
    prev: usize,
    next: usize,
}

#[derive(Debug, Clone, Copy)]
struct WeightClass {
    count: usize,
    first: usize,
}

#[derive(Debug, Clone)]
pub struct PowerLawStore<T> {
    eta: usize,
    slots: Vec<Slot<T>>,
    free: Vec<usize>,
    head: usize,
    tail: usize,
    len: usize,
    // indexed by log2(weight)
    classes: Vec<WeightClass>,
    recorded: u64,
}

impl<T> PowerLawStore<T> {
    pub fn new(eta: usize) -> Result<Self> {
        if eta == 0 {
            return Err(Error::Invalid("reset interval eta must be at least 1".into()));
        }
        Ok(Self {
            eta,
            slots: Vec::new(),
            free: Vec::new(),
            head: NIL,
            tail: NIL,
            len: 0,
            classes: Vec::new(),
            recorded: 0,
        })
    }

    pub fn eta(&self) -> usize {
        self.eta
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Number of time points inserted so far.
    pub fn recorded(&self) -> u64 {
        self.recorded
    }

    pub fn last_time_index(&self) -> Option<usize> {
        self.node(self.tail).map(|n| n.time_index)
    }

    /// Appends a weight-one node and condenses.
    pub fn insert(&mut self, node: WeightedNode<T>) -> Result<()> {
        if node.weight != 1 {
            return Err(Error::Contract(format!(
                "new history nodes carry weight 1, got {}",
                node.weight
            )));
        }
        if let Some(last) = self.last_time_index() {
            if node.time_index <= last {
                return Err(Error::Contract(format!(
                    "out-of-order insertion: time index {} after {last}",
                    node.time_index
                )));
            }
        }
        let idx = self.alloc(node);
        self.slots[idx].prev = self.tail;
        if self.tail != NIL {
            self.slots[self.tail].next = idx;
        } else {
            self.head = idx;
        }
        self.tail = idx;
        self.len += 1;
        self.recorded += 1;
        self.join_class(0, idx);
        self.condense(0);
        Ok(())
    }

    pub fn push(&mut self, time_index: usize, field: T) -> Result<()> {
        self.insert(WeightedNode::fresh(time_index, field))
    }

    fn condense(&mut self, mut class: usize) {
        while class < self.classes.len() && self.classes[class].count > self.eta {
            let keep = self.classes[class].first;
            let drop = self.slots[keep].next;
            let after = self.slots[drop].next;
            debug_assert_eq!(
                self.node(keep).map(|n| n.weight),
                self.node(drop).map(|n| n.weight)
            );
            self.unlink(drop);
            let c = &mut self.classes[class];
            c.count -= 2;
            c.first = if c.count > 0 { after } else { NIL };
            if let Some(node) = self.slots[keep].node.as_mut() {
                node.weight *= 2;
            }
            self.join_class(class + 1, keep);
            class += 1;
        }
    }

    fn join_class(&mut self, class: usize, idx: usize) {
        if self.classes.len() <= class {
            self.classes.resize(class + 1, WeightClass { count: 0, first: NIL });
        }
        let c = &mut self.classes[class];
        if c.count == 0 {
            c.first = idx;
        }
        c.count += 1;
    }

    fn alloc(&mut self, node: WeightedNode<T>) -> usize {
        let slot = Slot {
            node: Some(node),
            prev: NIL,
            next: NIL,
        };
        match self.free.pop() {
            Some(idx) => {
                self.slots[idx] = slot;
                idx
            }
            None => {
                self.slots.push(slot);
                self.slots.len() - 1
            }
        }
    }

    fn unlink(&mut self, idx: usize) {
        let Slot { prev, next, .. } = self.slots[idx];
        if prev != NIL {
            self.slots[prev].next = next;
        } else {
            self.head = next;
        }
        if next != NIL {
            self.slots[next].prev = prev;
        } else {
            self.tail = prev;
        }
        // release the payload now rather than when the slot is reused
        self.slots[idx].node = None;
        self.slots[idx].prev = NIL;
        self.slots[idx].next = NIL;
        self.free.push(idx);
        self.len -= 1;
    }

    fn node(&self, idx: usize) -> Option<&WeightedNode<T>> {
        self.slots.get(idx).and_then(|s| s.node.as_ref())
    }

    /// Oldest to newest.
    pub fn iter(&self) -> Iter<'_, T> {
        Iter {
            store: self,
            cursor: self.head,
            forward: true,
        }
    }

    /// Newest to oldest, i.e. by increasing lag.
    pub fn iter_newest_first(&self) -> Iter<'_, T> {
        Iter {
            store: self,
            cursor: self.tail,
            forward: false,
        }
    }

    pub fn total_weight(&self) -> u64 {
        self.iter().map(|n| n.weight).sum()
    }

    /// Number of nodes per weight.
    pub fn weight_histogram(&self) -> BTreeMap<u64, usize> {
        self.classes
            .iter()
            .enumerate()
            .filter(|(_, c)| c.count > 0)
            .map(|(i, c)| (1u64 << i, c.count))
            .collect()
    }
}

pub struct Iter<'a, T> {
    store: &'a PowerLawStore<T>,
    cursor: usize,
    forward: bool,
}

impl<'a, T> Iterator for Iter<'a, T> {
    type Item = &'a WeightedNode<T>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.cursor == NIL {
            return None;
        }
        let slot = &self.store.slots[self.cursor];
        self.cursor = if self.forward { slot.next } else { slot.prev };
        slot.node.as_ref()
    }
}

/// Inserts the next time point into `store`. Thin wrapper kept for callers
/// that think of the store as a value.
pub fn powerlaw_insert<T>(store: &mut PowerLawStore<T>, node: WeightedNode<T>) -> Result<()> {
    store.insert(node)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn layout(store: &PowerLawStore<()>) -> Vec<(usize, u64)> {
        store.iter().map(|n| (n.time_index, n.weight)).collect()
    }

    fn filled(eta: usize, steps: usize) -> PowerLawStore<()> {
        let mut s = PowerLawStore::new(eta).unwrap();
        for k in 0..steps {
            s.push(k, ()).unwrap();
        }
        s
    }

    #[test]
    fn eta3_traces() {
        let mut s = filled(3, 4);
        assert_eq!(layout(&s), vec![(0, 2), (2, 1), (3, 1)]);
        s.push(4, ()).unwrap();
        s.push(5, ()).unwrap();
        assert_eq!(layout(&s), vec![(0, 2), (2, 2), (4, 1), (5, 1)]);
    }

    #[test]
    fn eta1_condenses_the_new_node() {
        let s = filled(1, 2);
        assert_eq!(layout(&s), vec![(0, 2)]);
        let s = filled(1, 3);
        assert_eq!(layout(&s), vec![(0, 2), (2, 1)]);
        // 0..=3: class 1 would reach {0, 2} and cascades to a single weight-4 node
        let s = filled(1, 4);
        assert_eq!(layout(&s), vec![(0, 4)]);
    }

    #[test]
    fn eta3_seventeen_steps() {
        let s = filled(3, 17);
        assert_eq!(s.total_weight(), 17);
        assert_eq!(
            layout(&s),
            vec![(0, 4), (4, 4), (8, 2), (10, 2), (12, 2), (14, 1), (15, 1), (16, 1)]
        );
    }

    #[test]
    fn rejects_bad_insertions() {
        let mut s = filled(3, 3);
        assert!(matches!(s.push(2, ()), Err(Error::Contract(_))));
        let heavy = WeightedNode {
            time_index: 10,
            weight: 2,
            field: (),
        };
        assert!(matches!(s.insert(heavy), Err(Error::Contract(_))));
        assert!(PowerLawStore::<()>::new(0).is_err());
    }

    #[test]
    fn reverse_iteration() {
        let s = filled(2, 9);
        let fwd: Vec<_> = s.iter().map(|n| n.time_index).collect();
        let mut back: Vec<_> = s.iter_newest_first().map(|n| n.time_index).collect();
        back.reverse();
        assert_eq!(fwd, back);
    }

    #[test]
    fn payloads_follow_their_nodes() {
        let mut s = PowerLawStore::new(2).unwrap();
        for k in 0..40usize {
            s.push(k, k * 10).unwrap();
        }
        assert!(s.iter().all(|n| n.field == n.time_index * 10));
        // the arena never holds more live payloads than nodes
        assert_eq!(s.slots.iter().filter(|x| x.node.is_some()).count(), s.len());
    }

    /// Literal reading of the condensation rule on a plain vector: pick the
    /// smallest overflowing weight, double its oldest node, drop the next.
    fn naive(eta: usize, steps: usize) -> Vec<(usize, u64)> {
        let mut list: Vec<(usize, u64)> = Vec::new();
        for k in 0..steps {
            list.push((k, 1));
            loop {
                let mut counts = BTreeMap::new();
                for &(_, w) in &list {
                    *counts.entry(w).or_insert(0usize) += 1;
                }
                let Some((&w, _)) = counts.iter().find(|(_, &c)| c > eta) else {
                    break;
                };
                let members: Vec<usize> = (0..list.len()).filter(|&i| list[i].1 == w).collect();
                list[members[0]].1 *= 2;
                list.remove(members[1]);
            }
        }
        list
    }

    #[test]
    fn matches_naive_condensation() {
        for eta in [1usize, 2, 3, 4, 7] {
            let mut s = PowerLawStore::new(eta).unwrap();
            for k in 0..600usize {
                s.push(k, ()).unwrap();
                if k % 37 == 0 || k < 40 {
                    assert_eq!(layout(&s), naive(eta, k + 1), "eta={eta} k={k}");
                }
            }
        }
    }

    #[test]
    fn invariants_over_long_runs() {
        for eta in [1usize, 2, 3, 5, 8] {
            let mut s = PowerLawStore::new(eta).unwrap();
            for k in 0..10_000usize {
                s.push(k, ()).unwrap();
                assert_eq!(s.total_weight(), k as u64 + 1);
                let nodes: Vec<_> = s.iter().collect();
                assert!(nodes.windows(2).all(|w| w[0].time_index < w[1].time_index));
                assert!(nodes.windows(2).all(|w| w[0].weight >= w[1].weight));
                let hist = s.weight_histogram();
                assert!(hist.values().all(|&c| c <= eta), "eta={eta} k={k}");
                assert_eq!(hist.values().sum::<usize>(), s.len());
            }
        }
    }
}
