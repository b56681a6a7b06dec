// Copyright 2026 The uss Authors. Licensed under Apache-2.0.

//! Stream-summary index: bins bucketed into groups of equal count, the
//! groups kept in a doubly linked list ordered by count.
//!
//! A unit increment moves a bin to the neighbouring group, so updates cost
//! O(1) apart from the hash lookup. Larger increments walk forward over the
//! groups they skip.

use std::hash::Hash;

use rustc_hash::FxHashMap;

use crate::sketch::Count;

const NIL: u32 = u32::MAX;

#[derive(Debug, Clone)]
struct Group<C> {
    count: C,
    members: Vec<u32>,
    prev: u32,
    next: u32,
}

#[derive(Debug, Clone)]
struct Slot<K> {
    label: K,
    group: u32,
    pos: u32,
}

#[derive(Debug, Clone)]
pub(crate) struct StreamSummary<K, C> {
    slots: Vec<Slot<K>>,
    groups: Vec<Group<C>>,
    free: Vec<u32>,
    head: u32,
    tail: u32,
    index: FxHashMap<K, u32>,
}

impl<K: Hash + Eq + Clone, C: Count> StreamSummary<K, C> {
    pub(crate) fn with_capacity(capacity: usize) -> Self {
        let mut index = FxHashMap::default();
        index.reserve(capacity);
        StreamSummary {
            slots: Vec::with_capacity(capacity),
            groups: Vec::new(),
            free: Vec::new(),
            head: NIL,
            tail: NIL,
            index,
        }
    }

    #[inline]
    pub(crate) fn len(&self) -> usize {
        self.slots.len()
    }

    #[inline]
    pub(crate) fn find(&self, label: &K) -> Option<u32> {
        self.index.get(label).copied()
    }

    #[inline]
    pub(crate) fn count(&self, slot: u32) -> C {
        self.groups[self.slots[slot as usize].group as usize].count
    }

    #[cfg(test)]
    #[inline]
    pub(crate) fn label(&self, slot: u32) -> &K {
        &self.slots[slot as usize].label
    }

    /// Count of the smallest group, `None` when empty.
    #[inline]
    pub(crate) fn min_count(&self) -> Option<C> {
        (self.head != NIL).then(|| self.groups[self.head as usize].count)
    }

    /// Members of the smallest group.
    #[inline]
    pub(crate) fn min_members(&self) -> &[u32] {
        if self.head == NIL {
            &[]
        } else {
            &self.groups[self.head as usize].members
        }
    }

    /// Adds a new bin. The label must not be present.
    pub(crate) fn push(&mut self, label: K, count: C) -> u32 {
        debug_assert!(!self.index.contains_key(&label));
        let slot = self.slots.len() as u32;
        self.index.insert(label.clone(), slot);
        self.slots.push(Slot { label, group: NIL, pos: 0 });
        self.attach(slot, NIL, count);
        slot
    }

    /// Increases the count of `slot` by `delta >= 0`.
    #[inline]
    pub(crate) fn increment(&mut self, slot: u32, delta: C) {
        let g = self.slots[slot as usize].group;
        let group = &self.groups[g as usize];
        let target = group.count + delta;
        let next = group.next;
        if group.members.len() == 1 && (next == NIL || self.groups[next as usize].count > target) {
            // Sole member and no group overtaken: re-key in place.
            self.groups[g as usize].count = target;
            return;
        }
        let anchor = if self.groups[g as usize].members.len() == 1 { self.groups[g as usize].prev } else { g };
        self.detach(slot);
        self.attach(slot, anchor, target);
    }

    /// Moves `slot` to an arbitrary count.
    pub(crate) fn set_count(&mut self, slot: u32, count: C) {
        self.detach(slot);
        self.attach(slot, NIL, count);
    }

    /// Replaces the label of `slot`, returning the old one.
    pub(crate) fn relabel(&mut self, slot: u32, label: K) -> K {
        let old = std::mem::replace(&mut self.slots[slot as usize].label, label.clone());
        self.index.remove(&old);
        self.index.insert(label, slot);
        old
    }

    /// Raises the count of every bin in the smallest group to `count`.
    pub(crate) fn rekey_min_group(&mut self, count: C) {
        let g = self.head;
        debug_assert!(g != NIL);
        debug_assert!(count >= self.groups[g as usize].count);
        let next = self.groups[g as usize].next;
        self.groups[g as usize].count = count;
        if next == NIL || self.groups[next as usize].count > count {
            return;
        }
        self.unlink(g);
        let mut prev = next;
        let mut cur = self.groups[next as usize].next;
        while cur != NIL && self.groups[cur as usize].count <= count {
            prev = cur;
            cur = self.groups[cur as usize].next;
        }
        if self.groups[prev as usize].count == count {
            // Fold the smaller member list into the larger one.
            let (keep, gone) = if self.groups[g as usize].members.len() > self.groups[prev as usize].members.len() {
                self.link_after(g, prev);
                self.unlink(prev);
                (g, prev)
            } else {
                (prev, g)
            };
            let moved = std::mem::take(&mut self.groups[gone as usize].members);
            for slot in &moved {
                let pos = self.groups[keep as usize].members.len() as u32;
                self.groups[keep as usize].members.push(*slot);
                let s = &mut self.slots[*slot as usize];
                s.group = keep;
                s.pos = pos;
            }
            self.release(gone, moved);
        } else {
            self.link_after(g, prev);
        }
    }

    /// Bins in ascending count order; groups in list order, members in
    /// insertion order. Rebuilding by pushing in this order reproduces the
    /// exact internal layout.
    pub(crate) fn iter_ascending(&self) -> impl Iterator<Item = (&K, C)> + '_ {
        let mut g = self.head;
        std::iter::from_fn(move || {
            if g == NIL {
                return None;
            }
            let group = &self.groups[g as usize];
            g = group.next;
            Some(group.members.iter().map(move |s| (&self.slots[*s as usize].label, group.count)))
        })
        .flatten()
    }

    #[cfg(test)]
    pub(crate) fn check_invariants(&self) {
        assert_eq!(self.index.len(), self.slots.len());
        for (i, slot) in self.slots.iter().enumerate() {
            assert_eq!(self.index[&slot.label], i as u32);
            let group = &self.groups[slot.group as usize];
            assert_eq!(group.members[slot.pos as usize], i as u32);
        }
        let mut seen = 0;
        let mut g = self.head;
        let mut prev = NIL;
        while g != NIL {
            let group = &self.groups[g as usize];
            assert!(!group.members.is_empty());
            assert_eq!(group.prev, prev);
            if prev != NIL {
                assert!(self.groups[prev as usize].count < group.count);
            }
            seen += group.members.len();
            prev = g;
            g = group.next;
        }
        assert_eq!(self.tail, prev);
        assert_eq!(seen, self.slots.len());
    }

    /// Places a detached slot into the group holding `count`, searching
    /// forward from `anchor` (`NIL` means before the head). The anchor's count
    /// must not exceed `count`.
    fn attach(&mut self, slot: u32, anchor: u32, count: C) {
        let mut g = anchor;
        let mut next = if g == NIL { self.head } else { self.groups[g as usize].next };
        while next != NIL && self.groups[next as usize].count <= count {
            g = next;
            next = self.groups[next as usize].next;
        }
        let target = if g != NIL && self.groups[g as usize].count == count {
            g
        } else {
            let fresh = self.alloc(count);
            if g == NIL {
                self.link_front(fresh);
            } else {
                self.link_after(fresh, g);
            }
            fresh
        };
        let members = &mut self.groups[target as usize].members;
        let s = &mut self.slots[slot as usize];
        s.group = target;
        s.pos = members.len() as u32;
        members.push(slot);
    }

    fn detach(&mut self, slot: u32) {
        let Slot { group: g, pos, .. } = self.slots[slot as usize];
        let members = &mut self.groups[g as usize].members;
        members.swap_remove(pos as usize);
        if let Some(&moved) = members.get(pos as usize) {
            self.slots[moved as usize].pos = pos;
        }
        if members.is_empty() {
            self.unlink(g);
            let members = std::mem::take(&mut self.groups[g as usize].members);
            self.release(g, members);
        }
    }

    fn alloc(&mut self, count: C) -> u32 {
        match self.free.pop() {
            Some(g) => {
                let group = &mut self.groups[g as usize];
                group.count = count;
                group.prev = NIL;
                group.next = NIL;
                g
            }
            None => {
                self.groups.push(Group { count, members: Vec::new(), prev: NIL, next: NIL });
                (self.groups.len() - 1) as u32
            }
        }
    }

    fn release(&mut self, g: u32, mut members: Vec<u32>) {
        members.clear();
        self.groups[g as usize].members = members;
        self.free.push(g);
    }

    fn unlink(&mut self, g: u32) {
        let Group { prev, next, .. } = self.groups[g as usize];
        if prev == NIL {
            self.head = next;
        } else {
            self.groups[prev as usize].next = next;
        }
        if next == NIL {
            self.tail = prev;
        } else {
            self.groups[next as usize].prev = prev;
        }
    }

    fn link_front(&mut self, g: u32) {
        let old = self.head;
        self.groups[g as usize].prev = NIL;
        self.groups[g as usize].next = old;
        if old == NIL {
            self.tail = g;
        } else {
            self.groups[old as usize].prev = g;
        }
        self.head = g;
    }

    fn link_after(&mut self, g: u32, after: u32) {
        let next = self.groups[after as usize].next;
        self.groups[g as usize].prev = after;
        self.groups[g as usize].next = next;
        self.groups[after as usize].next = g;
        if next == NIL {
            self.tail = g;
        } else {
            self.groups[next as usize].prev = g;
        }
    }
}
