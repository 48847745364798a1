//! Node store and structural primitives for multiway heap-ordered trees.
//!
//! Trees are stored in leftmost-child / right-sibling form inside an arena.
//! Every node also records its parent so that a subtree can be cut without a
//! search from the root. Handles index the arena directly; a deleted node is
//! tombstoned and its slot is never handed out again, so a stale handle can
//! always be detected.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::variants::{LinkEvent, Round};

/// Stable identifier of a node within one heap's store.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Handle(u32);

impl Handle {
    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub(crate) fn from_index(index: usize) -> Self {
        Handle(u32::try_from(index).expect("node store exceeds u32 handles"))
    }
}

impl fmt::Display for Handle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HeapError {
    #[error("heap is empty")]
    EmptyHeap,
    #[error("key {0} is already present")]
    DuplicateKey(i64),
    #[error("key {0} is not present")]
    UnknownKey(i64),
    #[error("handle {0} does not refer to a live node")]
    InvalidHandle(Handle),
    #[error("node {0} is not a root (it has a parent)")]
    NotARoot(Handle),
    #[error("cannot link node {0} with itself")]
    SelfLink(Handle),
    #[error("new key {new} is not smaller than current key {current}")]
    KeyNotDecreased { current: i64, new: i64 },
    #[error("invalid policy: {0}")]
    InvalidPolicy(String),
    #[error("malformed tree view: {0}")]
    MalformedView(String),
}

/// A structural defect found by [`Heap::validate_heap_order`].
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Violation {
    #[error(
        "heap order violated on edge {parent} (key {parent_key}) -> {child} (key {child_key})"
    )]
    HeapOrder {
        parent: Handle,
        child: Handle,
        parent_key: i64,
        child_key: i64,
    },
    #[error("node {node} lists parent {recorded:?} but hangs below {actual:?}")]
    ParentMismatch {
        node: Handle,
        recorded: Option<Handle>,
        actual: Option<Handle>,
    },
    #[error("node {0} reached twice (cycle or shared subtree)")]
    Revisited(Handle),
    #[error("node {0} is tombstoned but still reachable")]
    DeadNode(Handle),
    #[error("root {0} has a right sibling")]
    RootHasSibling(Handle),
    #[error("{reachable} nodes reachable but count is {count}")]
    CountMismatch { reachable: usize, count: usize },
}

#[derive(Clone, Debug)]
struct Node {
    key: i64,
    child: Option<Handle>,
    sibling: Option<Handle>,
    parent: Option<Handle>,
    live: bool,
}

/// A single heap-ordered multiway tree plus its node store.
#[derive(Clone, Debug, Default)]
pub struct Heap {
    nodes: Vec<Node>,
    root: Option<Handle>,
    len: usize,
    keys: HashMap<i64, Handle>,
    comparisons: u64,
    meter: Option<Vec<LinkEvent>>,
}

impl Heap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn root(&self) -> Option<Handle> {
        self.root
    }

    pub fn find_min(&self) -> Option<i64> {
        self.root.map(|r| self.nodes[r.index()].key)
    }

    /// Total number of key comparisons performed by links so far.
    pub fn comparisons(&self) -> u64 {
        self.comparisons
    }

    /// Number of arena slots ever allocated (live or tombstoned).
    pub fn store_len(&self) -> usize {
        self.nodes.len()
    }

    pub fn handle_of(&self, key: i64) -> Option<Handle> {
        self.keys.get(&key).copied()
    }

    pub fn contains_key(&self, key: i64) -> bool {
        self.keys.contains_key(&key)
    }

    /// Keys of every node registered in the store (attached or not).
    pub fn keys(&self) -> impl Iterator<Item = i64> + '_ {
        self.keys.keys().copied()
    }

    fn node(&self, h: Handle) -> Result<&Node, HeapError> {
        match self.nodes.get(h.index()) {
            Some(n) if n.live => Ok(n),
            _ => Err(HeapError::InvalidHandle(h)),
        }
    }

    pub fn is_live(&self, h: Handle) -> bool {
        self.node(h).is_ok()
    }

    pub fn key(&self, h: Handle) -> Result<i64, HeapError> {
        self.node(h).map(|n| n.key)
    }

    pub fn parent(&self, h: Handle) -> Result<Option<Handle>, HeapError> {
        self.node(h).map(|n| n.parent)
    }

    pub fn leftmost_child(&self, h: Handle) -> Result<Option<Handle>, HeapError> {
        self.node(h).map(|n| n.child)
    }

    pub fn right_sibling(&self, h: Handle) -> Result<Option<Handle>, HeapError> {
        self.node(h).map(|n| n.sibling)
    }

    /// Registers a detached node. The heap's count is unchanged until the
    /// node is attached through an insert or link path.
    pub fn make_node(&mut self, key: i64) -> Result<Handle, HeapError> {
        if self.keys.contains_key(&key) {
            return Err(HeapError::DuplicateKey(key));
        }
        let h = Handle::from_index(self.nodes.len());
        self.nodes.push(Node {
            key,
            child: None,
            sibling: None,
            parent: None,
            live: true,
        });
        self.keys.insert(key, h);
        Ok(h)
    }

    /// Links two parentless nodes: the larger key becomes the leftmost child
    /// of the smaller. Returns the winner. Root bookkeeping is untouched.
    pub fn link(&mut self, a: Handle, b: Handle) -> Result<Handle, HeapError> {
        if a == b {
            return Err(HeapError::SelfLink(a));
        }
        for h in [a, b] {
            let n = self.node(h)?;
            if n.parent.is_some() {
                return Err(HeapError::NotARoot(h));
            }
        }
        Ok(self.link_raw(a, b, Round::Direct, 0, false).winner)
    }

    /// One comparison, O(1) pointer updates. `a_is_running_min` marks `a`
    /// as the running minimum of an accumulation round.
    pub(crate) fn link_raw(
        &mut self,
        a: Handle,
        b: Handle,
        round: Round,
        position: u32,
        a_is_running_min: bool,
    ) -> LinkEvent {
        self.comparisons += 1;
        let (winner, loser) = if self.nodes[a.index()].key < self.nodes[b.index()].key {
            (a, b)
        } else {
            (b, a)
        };
        let old_first = self.nodes[winner.index()].child;
        {
            let l = &mut self.nodes[loser.index()];
            l.sibling = old_first;
            l.parent = Some(winner);
        }
        self.nodes[winner.index()].child = Some(loser);
        let event = LinkEvent {
            winner,
            loser,
            round,
            position,
            winner_was_ltr_minimum: a_is_running_min && winner == a,
        };
        if let Some(m) = self.meter.as_mut() {
            m.push(event);
        }
        event
    }

    /// Children of `x` in left-to-right order.
    pub fn children(&self, x: Handle) -> Result<Vec<Handle>, HeapError> {
        let mut out = Vec::new();
        let mut cur = self.node(x)?.child;
        while let Some(c) = cur {
            out.push(c);
            cur = self.nodes[c.index()].sibling;
        }
        Ok(out)
    }

    pub fn child_keys(&self, x: Handle) -> Result<Vec<i64>, HeapError> {
        Ok(self
            .children(x)?
            .into_iter()
            .map(|c| self.nodes[c.index()].key)
            .collect())
    }

    /// All nodes reachable from the root, in preorder.
    pub fn reachable(&self) -> Vec<Handle> {
        let mut out = Vec::with_capacity(self.len);
        let mut stack: Vec<Handle> = self.root.into_iter().collect();
        while let Some(h) = stack.pop() {
            out.push(h);
            let n = &self.nodes[h.index()];
            if let Some(s) = n.sibling {
                if Some(h) != self.root {
                    stack.push(s);
                }
            }
            if let Some(c) = n.child {
                stack.push(c);
            }
        }
        out
    }

    /// Starts recording every link into an internal buffer.
    pub fn start_metering(&mut self) {
        self.meter.get_or_insert_with(Vec::new);
    }

    /// Stops recording and returns what was recorded since the last drain.
    pub fn stop_metering(&mut self) -> Vec<LinkEvent> {
        self.meter.take().unwrap_or_default()
    }

    pub fn drain_link_events(&mut self) -> Vec<LinkEvent> {
        self.meter.as_mut().map(std::mem::take).unwrap_or_default()
    }

    pub(crate) fn set_root(&mut self, root: Option<Handle>) {
        self.root = root;
    }

    pub(crate) fn set_len(&mut self, len: usize) {
        self.len = len;
    }

    /// Detaches every child of `x` and returns them left to right.
    pub(crate) fn take_children(&mut self, x: Handle) -> Vec<Handle> {
        let mut out = Vec::new();
        let mut cur = self.nodes[x.index()].child.take();
        while let Some(c) = cur {
            let n = &mut self.nodes[c.index()];
            cur = n.sibling.take();
            n.parent = None;
            out.push(c);
        }
        out
    }

    /// Removes a childless, parentless node from the store permanently.
    pub(crate) fn tombstone(&mut self, x: Handle) -> i64 {
        let n = &mut self.nodes[x.index()];
        debug_assert!(n.child.is_none() && n.parent.is_none());
        n.live = false;
        n.sibling = None;
        let key = n.key;
        self.keys.remove(&key);
        key
    }

    /// Splices `x` (with its subtree) out of its parent's child list.
    pub(crate) fn cut(&mut self, x: Handle) {
        let Some(p) = self.nodes[x.index()].parent else {
            return;
        };
        let next = self.nodes[x.index()].sibling.take();
        if self.nodes[p.index()].child == Some(x) {
            self.nodes[p.index()].child = next;
        } else {
            let mut cur = self.nodes[p.index()].child;
            while let Some(c) = cur {
                if self.nodes[c.index()].sibling == Some(x) {
                    self.nodes[c.index()].sibling = next;
                    break;
                }
                cur = self.nodes[c.index()].sibling;
            }
        }
        self.nodes[x.index()].parent = None;
    }

    pub(crate) fn rekey(&mut self, x: Handle, new_key: i64) {
        let old = self.nodes[x.index()].key;
        self.keys.remove(&old);
        self.keys.insert(new_key, x);
        self.nodes[x.index()].key = new_key;
    }

    /// Moves every node of `other` into this store. Returns the offset added
    /// to the other heap's handle indices.
    pub(crate) fn absorb_store(&mut self, other: Heap) -> usize {
        let offset = self.nodes.len();
        let shift = |h: Option<Handle>| h.map(|h| Handle::from_index(h.index() + offset));
        for n in other.nodes {
            self.nodes.push(Node {
                key: n.key,
                child: shift(n.child),
                sibling: shift(n.sibling),
                parent: shift(n.parent),
                live: n.live,
            });
        }
        for (k, h) in other.keys {
            self.keys.insert(k, Handle::from_index(h.index() + offset));
        }
        self.comparisons += other.comparisons;
        offset
    }

    /// Checks heap order, parent consistency, acyclicity and the node count.
    pub fn validate_heap_order(&self) -> Result<(), Violation> {
        let Some(root) = self.root else {
            return if self.len == 0 {
                Ok(())
            } else {
                Err(Violation::CountMismatch {
                    reachable: 0,
                    count: self.len,
                })
            };
        };
        let rn = &self.nodes[root.index()];
        if !rn.live {
            return Err(Violation::DeadNode(root));
        }
        if rn.parent.is_some() {
            return Err(Violation::ParentMismatch {
                node: root,
                recorded: rn.parent,
                actual: None,
            });
        }
        if rn.sibling.is_some() {
            return Err(Violation::RootHasSibling(root));
        }
        let mut seen = vec![false; self.nodes.len()];
        seen[root.index()] = true;
        let mut reachable = 1usize;
        let mut stack = vec![root];
        while let Some(p) = stack.pop() {
            let pk = self.nodes[p.index()].key;
            let mut cur = self.nodes[p.index()].child;
            while let Some(c) = cur {
                if seen[c.index()] {
                    return Err(Violation::Revisited(c));
                }
                seen[c.index()] = true;
                reachable += 1;
                let cn = &self.nodes[c.index()];
                if !cn.live {
                    return Err(Violation::DeadNode(c));
                }
                if cn.parent != Some(p) {
                    return Err(Violation::ParentMismatch {
                        node: c,
                        recorded: cn.parent,
                        actual: Some(p),
                    });
                }
                if cn.key <= pk {
                    return Err(Violation::HeapOrder {
                        parent: p,
                        child: c,
                        parent_key: pk,
                        child_key: cn.key,
                    });
                }
                stack.push(c);
                cur = cn.sibling;
            }
        }
        if reachable != self.len {
            return Err(Violation::CountMismatch {
                reachable,
                count: self.len,
            });
        }
        Ok(())
    }

    /// Test hook: exchanges the keys stored at two nodes without any checks.
    #[doc(hidden)]
    pub fn debug_swap_keys(&mut self, a: Handle, b: Handle) {
        let ka = self.nodes[a.index()].key;
        let kb = self.nodes[b.index()].key;
        self.nodes[a.index()].key = kb;
        self.nodes[b.index()].key = ka;
        self.keys.insert(ka, b);
        self.keys.insert(kb, a);
    }

    /// Renames leftmost-child / right-sibling as left / right.
    pub fn to_binary_view(&self) -> BinaryView {
        let mut view = BinaryView::default();
        let Some(root) = self.root else {
            return view;
        };
        // (node, slot in view to patch with this node's index)
        let mut stack: Vec<(Handle, Option<(usize, bool)>)> = vec![(root, None)];
        while let Some((h, patch)) = stack.pop() {
            let idx = view.nodes.len();
            let n = &self.nodes[h.index()];
            view.nodes.push(BinaryNode {
                key: n.key,
                left: None,
                right: None,
            });
            match patch {
                None => view.root = Some(idx),
                Some((p, true)) => view.nodes[p].left = Some(idx),
                Some((p, false)) => view.nodes[p].right = Some(idx),
            }
            if h != root {
                if let Some(s) = n.sibling {
                    stack.push((s, Some((idx, false))));
                }
            }
            if let Some(c) = n.child {
                stack.push((c, Some((idx, true))));
            }
        }
        view
    }

    /// Builds a heap with exactly the structure described by `view`.
    pub fn from_view(view: &BinaryView) -> Result<Heap, HeapError> {
        let mut heap = Heap::new();
        let Some(root) = view.root else {
            return Ok(heap);
        };
        if view.nodes[root].right.is_some() {
            return Err(HeapError::MalformedView("root has a right sibling".into()));
        }
        let handles = view
            .nodes
            .iter()
            .map(|n| heap.make_node(n.key))
            .collect::<Result<Vec<_>, _>>()?;
        for (i, n) in view.nodes.iter().enumerate() {
            let h = handles[i];
            heap.nodes[h.index()].child = n.left.map(|l| handles[l]);
            heap.nodes[h.index()].sibling = n.right.map(|r| handles[r]);
            let mut cur = n.left;
            while let Some(c) = cur {
                heap.nodes[handles[c].index()].parent = Some(h);
                cur = view.nodes[c].right;
            }
        }
        heap.root = Some(handles[root]);
        heap.len = view.nodes.len();
        heap.validate_heap_order()
            .map_err(|v| HeapError::MalformedView(v.to_string()))?;
        Ok(heap)
    }
}

/// One node of a [`BinaryView`]; `left` is the leftmost child and `right`
/// the right sibling in the multiway reading.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinaryNode {
    pub key: i64,
    pub left: Option<usize>,
    pub right: Option<usize>,
}

/// Binary-tree encoding of a heap. Nodes are numbered in preorder, so two
/// views compare equal exactly when their structures and keys coincide.
///
/// The text form nests each node's children inside its parentheses:
/// `(1 (2) (3 (4)))` is node 1 with children 2 and 3, and 3 has child 4.
/// In binary terms 2 is the left child of 1, 3 the right child of 2, and 4
/// the left child of 3. The empty tree prints as `()`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BinaryView {
    nodes: Vec<BinaryNode>,
    root: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("view parse error at byte {position}: {message}")]
pub struct ViewParseError {
    pub position: usize,
    pub message: String,
}

impl BinaryView {
    pub fn root(&self) -> Option<usize> {
        self.root
    }

    pub fn nodes(&self) -> &[BinaryNode] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Multiway children of node `i`: its left child and that child's right chain.
    pub fn children_of(&self, i: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut cur = self.nodes[i].left;
        while let Some(c) = cur {
            out.push(c);
            cur = self.nodes[c].right;
        }
        out
    }

    pub fn find(&self, key: i64) -> Option<usize> {
        self.nodes.iter().position(|n| n.key == key)
    }

    pub fn parse(text: &str) -> Result<BinaryView, ViewParseError> {
        let bytes = text.as_bytes();
        let mut view = BinaryView::default();
        // (node index, last child index)
        let mut stack: Vec<(usize, Option<usize>)> = Vec::new();
        let mut last_top: Option<usize> = None;
        let mut saw_empty = false;
        let mut i = 0;
        let err = |position: usize, message: &str| ViewParseError {
            position,
            message: message.to_string(),
        };
        while i < bytes.len() {
            let c = bytes[i];
            if c.is_ascii_whitespace() {
                i += 1;
                continue;
            }
            match c {
                b'(' => {
                    let open = i;
                    i += 1;
                    while i < bytes.len() && bytes[i].is_ascii_whitespace() {
                        i += 1;
                    }
                    if i < bytes.len() && bytes[i] == b')' {
                        if !stack.is_empty() || !view.nodes.is_empty() || saw_empty {
                            return Err(err(open, "empty group is only valid as the whole tree"));
                        }
                        saw_empty = true;
                        i += 1;
                        continue;
                    }
                    let start = i;
                    if i < bytes.len() && (bytes[i] == b'-' || bytes[i] == b'+') {
                        i += 1;
                    }
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                    let key: i64 = text[start..i]
                        .parse()
                        .map_err(|_| err(start, "expected an integer key"))?;
                    if saw_empty {
                        return Err(err(open, "content after empty tree"));
                    }
                    let idx = view.nodes.len();
                    view.nodes.push(BinaryNode {
                        key,
                        left: None,
                        right: None,
                    });
                    match stack.last_mut() {
                        Some((parent, last)) => {
                            match *last {
                                None => view.nodes[*parent].left = Some(idx),
                                Some(prev) => view.nodes[prev].right = Some(idx),
                            }
                            *last = Some(idx);
                        }
                        None => {
                            match last_top {
                                None => view.root = Some(idx),
                                Some(prev) => view.nodes[prev].right = Some(idx),
                            }
                            last_top = Some(idx);
                        }
                    }
                    stack.push((idx, None));
                }
                b')' => {
                    if stack.pop().is_none() {
                        return Err(err(i, "unbalanced ')'"));
                    }
                    i += 1;
                }
                _ => return Err(err(i, "unexpected character")),
            }
        }
        if !stack.is_empty() {
            return Err(err(bytes.len(), "unclosed '('"));
        }
        if view.nodes.is_empty() && !saw_empty {
            return Err(err(0, "no tree"));
        }
        Ok(view)
    }
}

impl fmt::Display for BinaryView {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let Some(root) = self.root else {
            return f.write_str("()");
        };
        enum Step {
            Open(usize),
            Close,
        }
        let mut stack = Vec::new();
        let mut top = Some(root);
        let mut tops = Vec::new();
        while let Some(t) = top {
            tops.push(t);
            top = self.nodes[t].right;
        }
        for &t in tops.iter().rev() {
            stack.push(Step::Open(t));
        }
        let mut first = true;
        while let Some(step) = stack.pop() {
            match step {
                Step::Open(i) => {
                    if !first {
                        f.write_str(" ")?;
                    }
                    first = false;
                    write!(f, "({}", self.nodes[i].key)?;
                    stack.push(Step::Close);
                    for c in self.children_of(i).into_iter().rev() {
                        stack.push(Step::Open(c));
                    }
                }
                Step::Close => f.write_str(")")?,
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn leaf_heap(keys: &[i64]) -> (Heap, Vec<Handle>) {
        let mut h = Heap::new();
        let hs = keys.iter().map(|&k| h.make_node(k).unwrap()).collect();
        (h, hs)
    }

    #[test]
    fn empty_heap() {
        let h = Heap::new();
        assert_eq!(h.root(), None);
        assert_eq!(h.len(), 0);
        assert!(h.validate_heap_order().is_ok());
        assert_eq!(h.to_binary_view().to_string(), "()");
    }

    #[test]
    fn make_node_rejects_duplicates_and_accepts_negative() {
        let mut h = Heap::new();
        let a = h.make_node(7).unwrap();
        assert_eq!(h.children(a).unwrap(), vec![]);
        assert_eq!(h.make_node(7), Err(HeapError::DuplicateKey(7)));
        let n = h.make_node(-3).unwrap();
        assert_eq!(h.key(n).unwrap(), -3);
        assert_eq!(h.len(), 0);
    }

    #[test]
    fn link_smaller_wins_and_loser_goes_leftmost() {
        let (mut h, hs) = leaf_heap(&[3, 5, 9]);
        let before = h.comparisons();
        // 3 with children [9], then link 5.
        assert_eq!(h.link(hs[0], hs[2]).unwrap(), hs[0]);
        assert_eq!(h.link(hs[1], hs[0]).unwrap(), hs[0]);
        assert_eq!(h.child_keys(hs[0]).unwrap(), vec![5, 9]);
        assert_eq!(h.comparisons() - before, 2);
        assert_eq!(h.parent(hs[1]).unwrap(), Some(hs[0]));
    }

    #[test]
    fn children_after_two_splices() {
        let (mut h, hs) = leaf_heap(&[3, 5, 4]);
        let w = h.link(hs[0], hs[1]).unwrap();
        let w = h.link(w, hs[2]).unwrap();
        assert_eq!(h.child_keys(w).unwrap(), vec![4, 5]);
    }

    #[test]
    fn link_errors() {
        let (mut h, hs) = leaf_heap(&[1, 2, 3]);
        assert_eq!(h.link(hs[0], hs[0]), Err(HeapError::SelfLink(hs[0])));
        h.link(hs[0], hs[1]).unwrap();
        assert_eq!(h.link(hs[1], hs[2]), Err(HeapError::NotARoot(hs[1])));
        assert_eq!(
            h.children(Handle(99)),
            Err(HeapError::InvalidHandle(Handle(99)))
        );
    }

    #[test]
    fn corrupted_keys_are_reported() {
        let view = BinaryView::parse("(1 (2) (3 (4)))").unwrap();
        let mut h = Heap::from_view(&view).unwrap();
        assert!(h.validate_heap_order().is_ok());
        let one = h.handle_of(1).unwrap();
        let four = h.handle_of(4).unwrap();
        h.debug_swap_keys(one, four);
        match h.validate_heap_order() {
            Err(Violation::HeapOrder {
                parent_key,
                child_key,
                ..
            }) => assert!(parent_key > child_key),
            other => panic!("expected heap-order violation, got {other:?}"),
        }
    }

    #[test]
    fn binary_view_renames_pointers() {
        let view = BinaryView::parse("(1 (2) (3))").unwrap();
        let root = view.root().unwrap();
        let two = view.nodes()[root].left.unwrap();
        assert_eq!(view.nodes()[two].key, 2);
        let three = view.nodes()[two].right.unwrap();
        assert_eq!(view.nodes()[three].key, 3);
        assert_eq!(view.nodes()[root].right, None);
    }

    #[test]
    fn view_text_is_whitespace_insensitive() {
        let a = BinaryView::parse("(1 (2) (3 (4)))").unwrap();
        let b = BinaryView::parse("  ( 1(2)\n(3 ( 4 ) ) )").unwrap();
        assert_eq!(a, b);
        assert_eq!(b.to_string(), "(1 (2) (3 (4)))");
        assert_eq!(BinaryView::parse("()").unwrap(), BinaryView::default());
    }

    #[test]
    fn view_parse_errors() {
        assert!(BinaryView::parse("(1 (2)").is_err());
        assert!(BinaryView::parse("(1))").is_err());
        assert!(BinaryView::parse("(x)").is_err());
        assert!(BinaryView::parse("").is_err());
        assert!(BinaryView::parse("(1 ())").is_err());
    }

    #[test]
    fn from_view_rejects_disorder_and_duplicates() {
        let bad = BinaryView::parse("(5 (2))").unwrap();
        assert!(matches!(
            Heap::from_view(&bad),
            Err(HeapError::MalformedView(_))
        ));
        let dup = BinaryView::parse("(1 (2) (2))").unwrap();
        assert_eq!(
            Heap::from_view(&dup).unwrap_err(),
            HeapError::DuplicateKey(2)
        );
        let forest = BinaryView::parse("(1) (2)").unwrap();
        assert!(Heap::from_view(&forest).is_err());
    }

    #[test]
    fn deep_path_view_does_not_recurse() {
        let mut h = Heap::new();
        let mut prev: Option<Handle> = None;
        for k in (0..200_000).rev() {
            let x = h.make_node(k).unwrap();
            if let Some(p) = prev {
                h.link(x, p).unwrap();
            }
            prev = Some(x);
        }
        h.set_root(prev);
        h.set_len(200_000);
        assert!(h.validate_heap_order().is_ok());
        let text = h.to_binary_view().to_string();
        let back = BinaryView::parse(&text).unwrap();
        assert_eq!(back, h.to_binary_view());
    }
}
