//! Slow, list-based reference implementations.
//!
//! Nothing here touches the arena heap: trees are plain nested vectors and
//! every delete-min procedure is a direct transcription of its textbook
//! description, so results can be compared against the production code.

use std::collections::BTreeSet;

use crate::variants::Variant;
use crate::workloads::{Op, Trace};

/// Keys a correct min-heap emits for the delete-mins of `tr`.
pub fn reference_extract(tr: &Trace) -> Vec<i64> {
    let mut set = BTreeSet::new();
    let mut out = Vec::new();
    for op in &tr.ops {
        match *op {
            Op::Insert(k) => {
                set.insert(k);
            }
            Op::DeleteMin => {
                if let Some(k) = set.pop_first() {
                    out.push(k);
                }
            }
            Op::DecreaseKey { key, new_key } => {
                if set.remove(&key) {
                    set.insert(new_key);
                }
            }
        }
    }
    out
}

/// Literal count of keys in `universe` smaller than `x`.
pub fn brute_rank(universe: &[i64], x: i64) -> u64 {
    universe.iter().filter(|&&k| k < x).count() as u64
}

/// Multiway tree with children in left-to-right order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tree {
    pub key: i64,
    pub children: Vec<Tree>,
}

impl Tree {
    pub fn leaf(key: i64) -> Self {
        Tree {
            key,
            children: Vec::new(),
        }
    }

    pub fn node(key: i64, children: Vec<Tree>) -> Self {
        Tree { key, children }
    }

    /// Nested text: `(key child child ...)`.
    pub fn to_text(&self) -> String {
        let mut s = format!("({}", self.key);
        for c in &self.children {
            s.push(' ');
            s.push_str(&c.to_text());
        }
        s.push(')');
        s
    }

    pub fn size(&self) -> usize {
        1 + self.children.iter().map(Tree::size).sum::<usize>()
    }
}

fn link(a: Tree, b: Tree) -> Tree {
    let (mut winner, loser) = if a.key < b.key { (a, b) } else { (b, a) };
    winner.children.insert(0, loser);
    winner
}

fn pairing_pass(mut roots: Vec<Tree>) -> Vec<Tree> {
    let mut out = Vec::new();
    roots.reverse();
    while let Some(first) = roots.pop() {
        match roots.pop() {
            Some(second) => out.push(link(first, second)),
            None => out.push(first),
        }
    }
    out
}

/// The tree left after deleting a root whose children are `children`.
pub fn simulate_step(children: Vec<Tree>, variant: Variant) -> Option<Tree> {
    match variant {
        Variant::Forward => {
            // p_1 = y_1; link(p_i, y_{i+1}) for i = 1..t-1.
            let mut ys = pairing_pass(children).into_iter();
            let mut p = ys.next()?;
            for y in ys {
                p = link(p, y);
            }
            Some(p)
        }
        Variant::Standard => {
            // p_t = y_t; link(p_i, y_{i-1}) for i = t..2.
            let mut ys = pairing_pass(children);
            let mut p = ys.pop()?;
            while let Some(y) = ys.pop() {
                p = link(p, y);
            }
            Some(p)
        }
        Variant::Multipass => {
            let mut roots = children;
            while roots.len() > 1 {
                roots = pairing_pass(roots);
            }
            roots.pop()
        }
    }
}

/// Every permutation of `items` in lexicographic index order.
pub fn permutations(items: &[i64]) -> Vec<Vec<i64>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(items.len());
    let mut used = vec![false; items.len()];
    fn rec(items: &[i64], used: &mut [bool], cur: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
        if cur.len() == items.len() {
            out.push(cur.clone());
            return;
        }
        for i in 0..items.len() {
            if !used[i] {
                used[i] = true;
                cur.push(items[i]);
                rec(items, used, cur, out);
                cur.pop();
                used[i] = false;
            }
        }
    }
    rec(items, &mut used, &mut cur, &mut out);
    out
}
