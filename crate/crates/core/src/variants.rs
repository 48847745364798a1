//! Heap operations and the delete-min consolidation strategies.
//!
//! Every delete-min works on the children `x_1..x_k` of the old root and
//! reports each link it performs. The two-round strategies (forward and
//! standard) share the left-to-right pairing round and differ only in the
//! direction of the accumulation round. Multipass repeats pairing rounds
//! instead. The arbitrary strategy lets the caller reorder the children and
//! then choose any sequence of links among the pairing-round winners.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::heap::{Handle, Heap, HeapError};

/// Which phase of an operation produced a link.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Round {
    Pairing,
    Accumulation,
    /// Pass index of a multipass delete-min, starting at 0.
    Multipass(u32),
    ArbitrarySchedule,
    /// Link with the root made by insert, meld or decrease-key.
    Root,
    /// A link requested directly through [`Heap::link`].
    Direct,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LinkEvent {
    pub winner: Handle,
    pub loser: Handle,
    pub round: Round,
    /// Index of the link within its round, from 0.
    pub position: u32,
    /// Accumulation rounds only: the running minimum kept its role. When
    /// false on an accumulation link, the loser was the running minimum.
    pub winner_was_ltr_minimum: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OpKind {
    Insert,
    DeleteMin,
    DecreaseKey,
    Meld,
}

/// Record of one delete-min.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OpStats {
    pub kind: OpKind,
    pub deleted_key: Option<i64>,
    /// Number of children of the deleted root.
    pub k: usize,
    /// The root's children in the order the first pairing round saw them.
    pub children: Vec<Handle>,
    pub events: Vec<LinkEvent>,
}

impl OpStats {
    pub fn links(&self) -> usize {
        self.events.len()
    }

    pub fn links_in(&self, round: Round) -> usize {
        self.events.iter().filter(|e| e.round == round).count()
    }

    /// Number of multipass passes performed.
    pub fn passes(&self) -> u32 {
        self.events
            .iter()
            .filter_map(|e| match e.round {
                Round::Multipass(p) => Some(p + 1),
                _ => None,
            })
            .max()
            .unwrap_or(0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Variant {
    Forward,
    Standard,
    Multipass,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Forward, Variant::Standard, Variant::Multipass];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Forward => "forward",
            Variant::Standard => "standard",
            Variant::Multipass => "multipass",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "forward" => Ok(Variant::Forward),
            "standard" => Ok(Variant::Standard),
            "multipass" => Ok(Variant::Multipass),
            other => Err(format!("unknown variant `{other}`")),
        }
    }
}

/// Reordering plus linking schedule for the arbitrary strategy.
///
/// `permutation[i]` is the index of the original child placed at position
/// `i` before pairing. After the pairing round the winners form a list of
/// live roots; each schedule entry `(i, j)` links the roots at positions `i`
/// and `j`, the winner takes position `min(i, j)` and the list closes up.
/// All indices are 0-based.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ArbitraryPolicy {
    pub permutation: Vec<usize>,
    pub schedule: Vec<(usize, usize)>,
}

fn pairing_survivors(k: usize) -> usize {
    k.div_ceil(2)
}

impl ArbitraryPolicy {
    /// Identity order, left-to-right accumulation with the running minimum.
    pub fn forward(k: usize) -> Self {
        let m = pairing_survivors(k);
        ArbitraryPolicy {
            permutation: (0..k).collect(),
            schedule: vec![(0, 1); m.saturating_sub(1)],
        }
    }

    /// Identity order, right-to-left accumulation with the running minimum.
    pub fn standard(k: usize) -> Self {
        let m = pairing_survivors(k);
        ArbitraryPolicy {
            permutation: (0..k).collect(),
            schedule: (2..=m).rev().map(|len| (len - 2, len - 1)).collect(),
        }
    }

    /// Uniform random permutation and uniformly chosen root pairs.
    pub fn random<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Self {
        let mut permutation: Vec<usize> = (0..k).collect();
        permutation.shuffle(rng);
        let mut schedule = Vec::new();
        let mut len = pairing_survivors(k);
        while len > 1 {
            let i = rng.gen_range(0..len);
            let mut j = rng.gen_range(0..len - 1);
            if j >= i {
                j += 1;
            }
            schedule.push((i, j));
            len -= 1;
        }
        ArbitraryPolicy {
            permutation,
            schedule,
        }
    }

    pub fn validate(&self, k: usize) -> Result<(), HeapError> {
        if self.permutation.len() != k {
            return Err(HeapError::InvalidPolicy(format!(
                "permutation has {} entries for {k} children",
                self.permutation.len()
            )));
        }
        let mut seen = vec![false; k];
        for &p in &self.permutation {
            if p >= k || std::mem::replace(&mut seen[p], true) {
                return Err(HeapError::InvalidPolicy(format!(
                    "permutation is not a bijection on 0..{k}"
                )));
            }
        }
        let mut len = pairing_survivors(k);
        for (step, &(i, j)) in self.schedule.iter().enumerate() {
            if i == j || i >= len || j >= len {
                return Err(HeapError::InvalidPolicy(format!(
                    "schedule step {step} links ({i}, {j}) with {len} live roots"
                )));
            }
            len -= 1;
        }
        if len > 1 {
            return Err(HeapError::InvalidPolicy(format!(
                "schedule leaves {len} roots"
            )));
        }
        Ok(())
    }
}

impl Heap {
    /// Creates a node and links it with the root.
    pub fn insert(&mut self, key: i64) -> Result<Handle, HeapError> {
        let x = self.make_node(key)?;
        let root = match self.root() {
            None => x,
            Some(r) => self.link_raw(r, x, Round::Root, 0, false).winner,
        };
        self.set_root(Some(root));
        self.set_len(self.len() + 1);
        Ok(x)
    }

    /// Cuts `x` with its subtree and links it with the root. A decreased
    /// root keeps its place.
    pub fn decrease_key(&mut self, x: Handle, new_key: i64) -> Result<(), HeapError> {
        let current = self.key(x)?;
        if new_key >= current {
            return Err(HeapError::KeyNotDecreased {
                current,
                new: new_key,
            });
        }
        if self.contains_key(new_key) {
            return Err(HeapError::DuplicateKey(new_key));
        }
        let root = self.root().ok_or(HeapError::EmptyHeap)?;
        if x != root && self.parent(x)?.is_none() {
            return Err(HeapError::InvalidHandle(x));
        }
        self.rekey(x, new_key);
        if x != root {
            self.cut(x);
            let w = self.link_raw(root, x, Round::Root, 0, false).winner;
            self.set_root(Some(w));
        }
        Ok(())
    }

    pub fn decrease_key_by_key(&mut self, key: i64, new_key: i64) -> Result<(), HeapError> {
        let x = self.handle_of(key).ok_or(HeapError::UnknownKey(key))?;
        self.decrease_key(x, new_key)
    }

    /// Pops the minimum using one of the three named strategies.
    pub fn delete_min(&mut self, variant: Variant) -> Result<(i64, OpStats), HeapError> {
        match variant {
            Variant::Forward => self.delete_min_forward(),
            Variant::Standard => self.delete_min_standard(),
            Variant::Multipass => self.delete_min_multipass(),
        }
    }

    pub fn delete_min_forward(&mut self) -> Result<(i64, OpStats), HeapError> {
        let (root, xs) = self.open_delete()?;
        let mut events = Vec::with_capacity(xs.len());
        let ys = self.pairing_round(&xs, &mut events);
        let mut survivor = ys.first().copied();
        for (j, &y) in ys.iter().enumerate().skip(1) {
            let p = survivor.expect("running minimum");
            let e = self.link_raw(p, y, Round::Accumulation, (j - 1) as u32, true);
            survivor = Some(e.winner);
            events.push(e);
        }
        Ok(self.close_delete(root, survivor, xs, events))
    }

    pub fn delete_min_standard(&mut self) -> Result<(i64, OpStats), HeapError> {
        let (root, xs) = self.open_delete()?;
        let mut events = Vec::with_capacity(xs.len());
        let ys = self.pairing_round(&xs, &mut events);
        let mut survivor = ys.last().copied();
        if let Some((_, rest)) = ys.split_last() {
            for (pos, &y) in rest.iter().rev().enumerate() {
                let p = survivor.expect("running minimum");
                let e = self.link_raw(p, y, Round::Accumulation, pos as u32, true);
                survivor = Some(e.winner);
                events.push(e);
            }
        }
        Ok(self.close_delete(root, survivor, xs, events))
    }

    /// Left-to-right pairing passes until one root remains; an odd trailing
    /// root is carried into the next pass unchanged.
    pub fn delete_min_multipass(&mut self) -> Result<(i64, OpStats), HeapError> {
        let (root, xs) = self.open_delete()?;
        let mut events = Vec::with_capacity(xs.len());
        let mut roots = xs.clone();
        let mut pass = 0u32;
        while roots.len() > 1 {
            let mut next = Vec::with_capacity(roots.len().div_ceil(2));
            for (pos, pair) in roots.chunks(2).enumerate() {
                match *pair {
                    [a, b] => {
                        let e = self.link_raw(a, b, Round::Multipass(pass), pos as u32, false);
                        next.push(e.winner);
                        events.push(e);
                    }
                    [a] => next.push(a),
                    _ => unreachable!(),
                }
            }
            roots = next;
            pass += 1;
        }
        let survivor = roots.first().copied();
        Ok(self.close_delete(root, survivor, xs, events))
    }

    pub fn delete_min_arbitrary(
        &mut self,
        policy: &ArbitraryPolicy,
    ) -> Result<(i64, OpStats), HeapError> {
        let root = self.root().ok_or(HeapError::EmptyHeap)?;
        let k = self.children(root)?.len();
        policy.validate(k)?;
        let (root, original) = self.open_delete()?;
        let xs: Vec<Handle> = policy.permutation.iter().map(|&i| original[i]).collect();
        let mut events = Vec::with_capacity(k);
        let mut live = self.pairing_round(&xs, &mut events);
        for (pos, &(i, j)) in policy.schedule.iter().enumerate() {
            let e = self.link_raw(
                live[i],
                live[j],
                Round::ArbitrarySchedule,
                pos as u32,
                false,
            );
            let (keep, drop) = if i < j { (i, j) } else { (j, i) };
            live[keep] = e.winner;
            live.remove(drop);
            events.push(e);
        }
        let survivor = live.first().copied();
        Ok(self.close_delete(root, survivor, xs, events))
    }

    fn open_delete(&mut self) -> Result<(Handle, Vec<Handle>), HeapError> {
        let root = self.root().ok_or(HeapError::EmptyHeap)?;
        let xs = self.take_children(root);
        Ok((root, xs))
    }

    fn pairing_round(&mut self, xs: &[Handle], events: &mut Vec<LinkEvent>) -> Vec<Handle> {
        let mut ys = Vec::with_capacity(xs.len().div_ceil(2));
        for (pos, pair) in xs.chunks(2).enumerate() {
            match *pair {
                [a, b] => {
                    let e = self.link_raw(a, b, Round::Pairing, pos as u32, false);
                    ys.push(e.winner);
                    events.push(e);
                }
                [a] => ys.push(a),
                _ => unreachable!(),
            }
        }
        ys
    }

    fn close_delete(
        &mut self,
        root: Handle,
        survivor: Option<Handle>,
        children: Vec<Handle>,
        events: Vec<LinkEvent>,
    ) -> (i64, OpStats) {
        let key = self.tombstone(root);
        self.set_root(survivor);
        self.set_len(self.len() - 1);
        let stats = OpStats {
            kind: OpKind::DeleteMin,
            deleted_key: Some(key),
            k: children.len(),
            children,
            events,
        };
        (key, stats)
    }
}

/// Links the roots of two heaps with disjoint key sets. Key disjointness
/// is verified in debug builds only.
pub fn meld(mut a: Heap, b: Heap) -> Result<Heap, HeapError> {
    if cfg!(debug_assertions) {
        if let Some(k) = b.keys().find(|&k| a.contains_key(k)) {
            return Err(HeapError::DuplicateKey(k));
        }
    }
    let b_root = b.root();
    let b_len = b.len();
    let offset = a.absorb_store(b);
    let b_root = b_root.map(|h| Handle::from_index(h.index() + offset));
    let root = match (a.root(), b_root) {
        (Some(x), Some(y)) => Some(a.link_raw(x, y, Round::Root, 0, false).winner),
        (x, y) => x.or(y),
    };
    a.set_root(root);
    a.set_len(a.len() + b_len);
    Ok(a)
}
