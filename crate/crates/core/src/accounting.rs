//! Replay instrument for the rank-difference potential with boxes and epochs.
//!
//! An [`Analyzer`] owns a heap and mirrors every operation with the
//! bookkeeping of the amortized argument: node potential, box lifecycle,
//! good-link classification and epoch rollover. All potentials are kept as
//! exact scaled integers; the ledger exports them as reduced fractions.
//!
//! Ranks are offline: the analyzer is built from the whole trace, so each
//! epoch's universe already contains the keys inserted later in the epoch.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use thiserror::Error;

use crate::heap::{Handle, Heap, HeapError};
use crate::potential::{AnalysisParams, PotentialError, RankTable, Rational};
use crate::variants::{meld, OpStats, Round, Variant};
use crate::workloads::{Op, Trace};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CheckLevel {
    /// Ledger only.
    Off,
    /// Per-operation inequalities, epoch bookkeeping, and box validation
    /// after every delete-min.
    Fast,
    /// Everything in `Fast`, plus a from-scratch recomputation of both
    /// potentials, heap order and box validation after every operation.
    Strict,
}

impl CheckLevel {
    pub fn name(self) -> &'static str {
        match self {
            CheckLevel::Off => "off",
            CheckLevel::Fast => "fast",
            CheckLevel::Strict => "strict",
        }
    }
}

impl FromStr for CheckLevel {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "off" => Ok(CheckLevel::Off),
            "fast" => Ok(CheckLevel::Fast),
            "strict" => Ok(CheckLevel::Strict),
            other => Err(format!("unknown check level `{other}`")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EpochMode {
    /// One epoch over a fixed universe; no rollover.
    Frozen,
    /// Epochs end on the size and distinct-key conditions.
    Rolling,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LinkClass {
    Good1,
    Good2,
    Plain,
}

/// Good1 when both nodes share a category before the link; Good2 when an
/// accumulation link dethrones the running minimum; Plain otherwise.
pub fn classify_link(
    params: &AnalysisParams,
    rd_winner: u64,
    rd_loser: u64,
    round: Round,
    loser_was_min: bool,
) -> LinkClass {
    if rd_winner >= 1 && rd_loser >= 1 && params.category(rd_winner) == params.category(rd_loser) {
        LinkClass::Good1
    } else if round == Round::Accumulation && loser_was_min {
        LinkClass::Good2
    } else {
        LinkClass::Plain
    }
}

/// Contiguous siblings tracked by the analysis, left to right.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NodeBox {
    pub members: Vec<Handle>,
    pub b: u32,
}

impl NodeBox {
    /// Contribution `(b - t - 1) / t`, times `t`.
    fn potential_units(&self, t: u32) -> i64 {
        self.b as i64 - t as i64 - 1
    }
}

#[derive(Clone, Debug)]
pub struct EpochState {
    pub epoch_id: u32,
    pub params: AnalysisParams,
    pub rank_table: RankTable,
    pub boxes: BTreeMap<u64, NodeBox>,
    pub distinct_keys_seen: u64,
    /// `n` was raised to the minimum of 4 rather than set to twice the size.
    pub clamped: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpochSummary {
    pub epoch_id: u32,
    pub n: u64,
    pub t: u32,
    pub q: u64,
    pub clamped: bool,
    pub first_op: usize,
    pub ops: usize,
    pub start_size: usize,
    pub min_size: usize,
    pub max_size: usize,
    /// Total potential change caused by the reset that ended the epoch.
    pub jump: Option<Rational>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum OpType {
    Insert,
    DeleteMin,
    Meld,
}

impl OpType {
    pub fn code(self) -> &'static str {
        match self {
            OpType::Insert => "I",
            OpType::DeleteMin => "D",
            OpType::Meld => "M",
        }
    }
}

/// One ledger row. Potentials are the values after the operation and
/// before any rollover it triggers.
#[derive(Clone, Debug, PartialEq)]
pub struct OpRecord {
    pub op_index: usize,
    pub op_type: OpType,
    pub key: Option<i64>,
    pub k: usize,
    pub links: usize,
    pub good1: usize,
    pub good2: usize,
    pub phi_n_before: Rational,
    pub phi_n: Rational,
    pub phi_b_before: Rational,
    pub phi_b: Rational,
    pub delta_phi: Rational,
    pub epoch_id: u32,
    pub n: u64,
    pub t: u32,
    pub q: u64,
    pub box_count: usize,
    pub boxes_created: usize,
    pub boxes_shrunk: usize,
    pub boxes_deleted: usize,
    pub rollover: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Invariant {
    BoxSize,
    BoxDisjoint,
    BoxContiguous,
    BoxCategory,
    PotentialMismatch,
    HeapOrder,
    DeleteMinDecrease,
    Good1Decrease,
    Good2Bound,
    RootDetach,
    InsertIncrease,
    InsertBoxChange,
    MeldRdChange,
    MeldIncrease,
    EpochSize,
    EpochLength,
    RolloverJump,
    AmortizedInsert,
    AmortizedDeleteMin,
    SortingTotal,
}

impl fmt::Display for Invariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Invariant::BoxSize => "(A) box size",
            Invariant::BoxDisjoint => "(B) boxes disjoint",
            Invariant::BoxContiguous => "(B') box contiguity",
            Invariant::BoxCategory => "(C) box category",
            Invariant::PotentialMismatch => "incremental potential equals recomputation",
            Invariant::HeapOrder => "heap order",
            Invariant::DeleteMinDecrease => "delete-min potential decrease",
            Invariant::Good1Decrease => "good link of type 1 decreases node potential by 1",
            Invariant::Good2Bound => "at most t-1 good links of type 2",
            Invariant::RootDetach => "root detachment is potential-neutral",
            Invariant::InsertIncrease => "insert increases node potential by at most t*q",
            Invariant::InsertBoxChange => "insert leaves box potential unchanged",
            Invariant::MeldRdChange => "meld changes exactly one rank-difference",
            Invariant::MeldIncrease => "meld increases node potential by at most t*q",
            Invariant::EpochSize => "heap size within [n/4, n]",
            Invariant::EpochLength => "finished epoch has at least n/4 operations",
            Invariant::RolloverJump => "rollover jump at most n*t*q + n",
            Invariant::AmortizedInsert => "amortized insert increase at most 5tq + 4",
            Invariant::AmortizedDeleteMin => "amortized delete-min increase bound",
            Invariant::SortingTotal => "sorting-mode total cost bound",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error)]
pub enum AccountingError {
    #[error("op {op_index}: invariant {invariant} violated: {detail}")]
    Invariant {
        op_index: usize,
        invariant: Invariant,
        detail: String,
    },
    #[error("op {op_index}: decrease-key cannot be replayed under instrumentation")]
    DecreaseKeyUnsupported { op_index: usize },
    #[error("variant {0} cannot be instrumented")]
    UnsupportedVariant(Variant),
    #[error("op {op_index}: delete-min on an empty heap")]
    EmptyDelete { op_index: usize },
    #[error("op {op_index}: key {key} is outside the epoch universe")]
    KeyOutsideUniverse { op_index: usize, key: i64 },
    #[error("op {op_index}: link events are not in pairing-then-accumulation order")]
    NotAnalysisOrder { op_index: usize },
    #[error("meld needs a frozen epoch")]
    MeldNeedsFrozenEpoch,
    #[error(transparent)]
    Heap(#[from] HeapError),
    #[error(transparent)]
    Potential(#[from] PotentialError),
}

type Result<T> = std::result::Result<T, AccountingError>;

/// Outcome of a finished replay.
#[derive(Clone, Debug)]
pub struct Analysis {
    pub mode: EpochMode,
    pub records: Vec<OpRecord>,
    pub epochs: Vec<EpochSummary>,
    pub total_k: u128,
    pub delete_mins: usize,
}

impl Analysis {
    pub fn rollovers(&self) -> usize {
        self.records.iter().filter(|r| r.rollover).count()
    }

    pub fn write_ledger<W: Write>(&self, sink: &mut W) -> io::Result<()> {
        write_ledger_csv(&self.records, sink)
    }
}

pub const LEDGER_HEADER: &str = "op_index,op_type,key,k,links,good1,good2,phi_N_num,phi_N_den,\
phi_B_num,phi_B_den,delta_phi,epoch_id,n_epoch,t,q,box_count,rollover";

pub fn write_ledger_csv<W: Write>(records: &[OpRecord], sink: &mut W) -> io::Result<()> {
    writeln!(sink, "{LEDGER_HEADER}")?;
    for r in records {
        let key = r.key.map(|k| k.to_string()).unwrap_or_default();
        writeln!(
            sink,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.op_index,
            r.op_type.code(),
            key,
            r.k,
            r.links,
            r.good1,
            r.good2,
            r.phi_n.numer(),
            r.phi_n.denom(),
            r.phi_b.numer(),
            r.phi_b.denom(),
            r.delta_phi,
            r.epoch_id,
            r.n,
            r.t,
            r.q,
            r.box_count,
            u8::from(r.rollover)
        )?;
    }
    Ok(())
}

#[derive(Default)]
struct Touched {
    good: bool,
    winners: Vec<Handle>,
    seen: usize,
}

#[derive(Default)]
struct BoxCounts {
    created: usize,
    shrunk: usize,
    deleted: usize,
}

pub struct Analyzer {
    heap: Heap,
    variant: Variant,
    check: CheckLevel,
    mode: EpochMode,
    /// Ranks come from a complete sorting trace, so the successor of a
    /// deleted minimum always has rank-difference 1.
    sorting_ranks: bool,
    epoch: EpochState,
    rank_of: Vec<u64>,
    box_of: Vec<Option<u64>>,
    next_box_id: u64,
    /// Node potential times `q^(t-2) (q-1)`.
    phi_n: i128,
    /// Box potential times `t`.
    phi_b: i64,
    future: Vec<i64>,
    future_pos: usize,
    records: Vec<OpRecord>,
    epochs: Vec<EpochSummary>,
    current: EpochSummary,
    epoch_ops: Vec<(OpType, i128, usize)>,
    total_k: u128,
    delete_mins: usize,
}

impl Analyzer {
    /// Analyzer for replaying `tr`. Sorting-shaped traces (no insert after
    /// a delete-min) get a single frozen epoch over all their keys; other
    /// traces use rolling epochs starting at `n = 4`.
    pub fn for_trace(tr: &Trace, variant: Variant, check: CheckLevel) -> Result<Self> {
        if let Some(i) = tr
            .ops
            .iter()
            .position(|op| matches!(op, Op::DecreaseKey { .. }))
        {
            return Err(AccountingError::DecreaseKeyUnsupported { op_index: i });
        }
        let future: Vec<i64> = tr.inserted_keys().collect();
        if tr.is_sorting_shaped() {
            let mut a = Self::frozen(future.iter().copied(), variant, check)?;
            a.sorting_ranks = true;
            a.future = future;
            Ok(a)
        } else {
            let mut a = Self::frozen(std::iter::empty(), variant, check)?;
            a.mode = EpochMode::Rolling;
            a.future = future;
            a.begin_epoch(0, 0)?;
            Ok(a)
        }
    }

    /// Empty heap with one frozen epoch over `universe`, `n = max(4, |universe|)`.
    pub fn frozen(
        universe: impl IntoIterator<Item = i64>,
        variant: Variant,
        check: CheckLevel,
    ) -> Result<Self> {
        let rank_table = RankTable::build(universe)?;
        let n = (rank_table.len() as u64).max(4);
        let params = AnalysisParams::derive(n)?;
        Self::with_params(Heap::new(), rank_table, params, variant, check)
    }

    /// Prebuilt heap with one frozen epoch using explicit parameters.
    pub fn with_params(
        heap: Heap,
        rank_table: RankTable,
        params: AnalysisParams,
        variant: Variant,
        check: CheckLevel,
    ) -> Result<Self> {
        if !matches!(variant, Variant::Forward | Variant::Standard) {
            return Err(AccountingError::UnsupportedVariant(variant));
        }
        if rank_table.len() as u64 > params.n {
            return Err(PotentialError::CapacityTooSmall(params.n).into());
        }
        let size = heap.len();
        let epoch = EpochState {
            epoch_id: 0,
            params,
            rank_table,
            boxes: BTreeMap::new(),
            distinct_keys_seen: size as u64,
            clamped: false,
        };
        let mut a = Analyzer {
            heap,
            variant,
            check,
            mode: EpochMode::Frozen,
            sorting_ranks: false,
            current: summary_for(&epoch, 0, size),
            epoch,
            rank_of: Vec::new(),
            box_of: Vec::new(),
            next_box_id: 0,
            phi_n: 0,
            phi_b: 0,
            future: Vec::new(),
            future_pos: 0,
            records: Vec::new(),
            epochs: Vec::new(),
            epoch_ops: Vec::new(),
            total_k: 0,
            delete_mins: 0,
        };
        a.phi_n = a.rerank(0)?;
        Ok(a)
    }

    pub fn heap(&self) -> &Heap {
        &self.heap
    }

    pub fn params(&self) -> AnalysisParams {
        self.epoch.params
    }

    pub fn epoch(&self) -> &EpochState {
        &self.epoch
    }

    pub fn mode(&self) -> EpochMode {
        self.mode
    }

    pub fn records(&self) -> &[OpRecord] {
        &self.records
    }

    pub fn box_count(&self) -> usize {
        self.epoch.boxes.len()
    }

    pub fn boxes(&self) -> impl Iterator<Item = &NodeBox> {
        self.epoch.boxes.values()
    }

    pub fn phi_node_total(&self) -> Rational {
        Rational::new(self.phi_n, self.epoch.params.phi_denominator())
    }

    /// Sum over boxes of `(b - t - 1) / t`.
    pub fn box_potential(&self) -> Rational {
        Rational::new(self.phi_b, self.epoch.params.t)
    }

    pub fn total_potential(&self) -> Rational {
        Rational::new(self.total_units(), self.unit())
    }

    /// Replays every operation of `tr` and closes the analysis.
    pub fn run(mut self, tr: &Trace) -> Result<Analysis> {
        for op in &tr.ops {
            self.apply(op)?;
        }
        self.finish()
    }

    pub fn apply(&mut self, op: &Op) -> Result<&OpRecord> {
        match *op {
            Op::Insert(key) => self.insert(key),
            Op::DeleteMin => self.delete_min(),
            Op::DecreaseKey { .. } => Err(AccountingError::DecreaseKeyUnsupported {
                op_index: self.records.len(),
            }),
        }
    }

    fn d_prime(&self) -> i128 {
        self.epoch.params.phi_denominator()
    }

    /// Common denominator of node and box potential.
    fn unit(&self) -> i128 {
        self.d_prime() * self.epoch.params.t as i128
    }

    fn total_units(&self) -> i128 {
        self.phi_n * self.epoch.params.t as i128 + self.phi_b as i128 * self.d_prime()
    }

    fn phi(&self, rd: u64) -> i128 {
        self.epoch.params.phi_scaled(rd)
    }

    fn rank(&self, h: Handle) -> u64 {
        self.rank_of[h.index()]
    }

    fn set_rank(&mut self, h: Handle, r: u64) {
        if self.rank_of.len() <= h.index() {
            self.rank_of.resize(h.index() + 1, 0);
        }
        self.rank_of[h.index()] = r;
    }

    fn box_id(&self, h: Handle) -> Option<u64> {
        self.box_of.get(h.index()).copied().flatten()
    }

    fn set_box(&mut self, h: Handle, id: Option<u64>) {
        if self.box_of.len() <= h.index() {
            self.box_of.resize(h.index() + 1, None);
        }
        self.box_of[h.index()] = id;
    }

    fn checking(&self) -> bool {
        self.check >= CheckLevel::Fast
    }

    fn violation(&self, op_index: usize, invariant: Invariant, detail: String) -> AccountingError {
        AccountingError::Invariant {
            op_index,
            invariant,
            detail,
        }
    }

    /// Recomputes every cached rank from the rank table and returns the
    /// scaled node potential.
    fn rerank(&mut self, op_index: usize) -> Result<i128> {
        let mut total = 0;
        for h in self.heap.reachable() {
            let key = self.heap.key(h)?;
            let r = self
                .epoch
                .rank_table
                .rank(key)
                .ok_or(AccountingError::KeyOutsideUniverse { op_index, key })?;
            self.set_rank(h, r);
        }
        for h in self.heap.reachable() {
            if let Some(p) = self.heap.parent(h)? {
                total += self.phi(self.rank(h) - self.rank(p));
            }
        }
        Ok(total)
    }

    fn remove_box(&mut self, id: u64) -> Option<NodeBox> {
        let bx = self.epoch.boxes.remove(&id)?;
        for &m in &bx.members {
            self.set_box(m, None);
        }
        self.phi_b -= bx.potential_units(self.epoch.params.t);
        Some(bx)
    }

    fn add_box(&mut self, members: Vec<Handle>, b: u32) -> u64 {
        let id = self.next_box_id;
        self.next_box_id += 1;
        for &m in &members {
            self.set_box(m, Some(id));
        }
        let bx = NodeBox { members, b };
        self.phi_b += bx.potential_units(self.epoch.params.t);
        self.epoch.boxes.insert(id, bx);
        id
    }

    /// Registers a box around the nodes holding `keys`, bypassing the
    /// lifecycle rules. For tests that need a prepared box state.
    #[doc(hidden)]
    pub fn debug_force_box(&mut self, keys: &[i64], b: u32) -> Result<u64> {
        let mut members = Vec::with_capacity(keys.len());
        for &k in keys {
            members.push(self.heap.handle_of(k).ok_or(HeapError::UnknownKey(k))?);
        }
        Ok(self.add_box(members, b))
    }

    /// Checks box invariants (A), (B), contiguity (B') and (C) against the
    /// current heap.
    pub fn validate_boxes(&self) -> std::result::Result<(), (Invariant, String)> {
        let t = self.epoch.params.t;
        let mut owner: HashMap<Handle, u64> = HashMap::new();
        let mut by_parent: HashMap<Handle, Vec<u64>> = HashMap::new();
        for (&id, bx) in &self.epoch.boxes {
            let expected = (1usize << bx.b) - 1;
            if bx.b < 2 || bx.b > t || bx.members.len() != expected {
                return Err((
                    Invariant::BoxSize,
                    format!(
                        "box {id} has {} members with b = {}",
                        bx.members.len(),
                        bx.b
                    ),
                ));
            }
            let mut parent = None;
            for &m in &bx.members {
                if !self.heap.is_live(m) {
                    return Err((Invariant::BoxContiguous, format!("box {id} holds dead {m}")));
                }
                if let Some(other) = owner.insert(m, id) {
                    return Err((
                        Invariant::BoxDisjoint,
                        format!("{m} lies in boxes {other} and {id}"),
                    ));
                }
                if self.box_id(m) != Some(id) {
                    return Err((
                        Invariant::BoxDisjoint,
                        format!("{m} of box {id} is indexed under {:?}", self.box_id(m)),
                    ));
                }
                let p = self.heap.parent(m).ok().flatten();
                if p.is_none() || (parent.is_some() && parent != p) {
                    return Err((
                        Invariant::BoxContiguous,
                        format!("box {id} members do not share one parent"),
                    ));
                }
                parent = p;
            }
            let p = parent.expect("nonempty box");
            for &m in &bx.members {
                let rd = self.rank(m) - self.rank(p);
                let c = self.epoch.params.category(rd);
                if c + 2 > bx.b {
                    return Err((
                        Invariant::BoxCategory,
                        format!("{m} of box {id} has category {c} but b = {}", bx.b),
                    ));
                }
            }
            by_parent.entry(p).or_default().push(id);
        }
        for (p, ids) in by_parent {
            let mut pos: HashMap<Handle, usize> = HashMap::new();
            let mut cur = self.heap.leftmost_child(p).ok().flatten();
            let mut i = 0;
            while let Some(c) = cur {
                if owner.contains_key(&c) {
                    pos.insert(c, i);
                }
                i += 1;
                cur = self.heap.right_sibling(c).ok().flatten();
            }
            for id in ids {
                let bx = &self.epoch.boxes[&id];
                let first = pos[&bx.members[0]];
                for (j, m) in bx.members.iter().enumerate() {
                    if pos[m] != first + j {
                        return Err((
                            Invariant::BoxContiguous,
                            format!("box {id} is not a left-to-right run of siblings"),
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    fn strict_checks(&mut self, op_index: usize) -> Result<()> {
        if self.check < CheckLevel::Strict {
            return Ok(());
        }
        let reachable = self.heap.reachable();
        let cached: Vec<u64> = reachable.iter().map(|&h| self.rank(h)).collect();
        let phi_n = self.rerank(op_index)?;
        if reachable
            .iter()
            .zip(&cached)
            .any(|(&h, &r)| self.rank(h) != r)
        {
            return Err(self.violation(
                op_index,
                Invariant::PotentialMismatch,
                "cached ranks drifted from the rank table".into(),
            ));
        }
        let t = self.epoch.params.t;
        let phi_b: i64 = self
            .epoch
            .boxes
            .values()
            .map(|b| b.potential_units(t))
            .sum();
        if phi_n != self.phi_n || phi_b != self.phi_b {
            return Err(self.violation(
                op_index,
                Invariant::PotentialMismatch,
                format!(
                    "node {} vs {}, box {} vs {} (scaled)",
                    self.phi_n, phi_n, self.phi_b, phi_b
                ),
            ));
        }
        if let Err(v) = self.heap.validate_heap_order() {
            return Err(self.violation(op_index, Invariant::HeapOrder, format!("{v:?}")));
        }
        if let Err((inv, detail)) = self.validate_boxes() {
            return Err(self.violation(op_index, inv, detail));
        }
        Ok(())
    }

    fn key_rank(&self, op_index: usize, key: i64) -> Result<u64> {
        self.epoch
            .rank_table
            .rank(key)
            .ok_or(AccountingError::KeyOutsideUniverse { op_index, key })
    }

    pub fn insert(&mut self, key: i64) -> Result<&OpRecord> {
        let op_index = self.records.len();
        let (n_before, b_before) = (self.phi_n, self.phi_b);
        let r = self.key_rank(op_index, key)?;
        let old_root = self.heap.root();
        let h = self.heap.insert(key)?;
        self.set_rank(h, r);
        self.set_box(h, None);
        if self.future.get(self.future_pos) == Some(&key) {
            self.future_pos += 1;
        }
        let dn = match old_root {
            None => 0,
            Some(o) if self.heap.root() == Some(h) => self.phi(self.rank(o) - r),
            Some(o) => self.phi(r - self.rank(o)),
        };
        self.phi_n += dn;
        if self.checking() {
            let p = self.epoch.params;
            let cap = p.t as i128 * p.q as i128 * self.d_prime();
            if dn > cap {
                return Err(self.violation(
                    op_index,
                    Invariant::InsertIncrease,
                    format!("scaled increase {dn} exceeds {cap}"),
                ));
            }
            if self.phi_b != b_before {
                return Err(self.violation(
                    op_index,
                    Invariant::InsertBoxChange,
                    "box potential moved".into(),
                ));
            }
        }
        self.epoch.distinct_keys_seen += 1;
        let links = usize::from(old_root.is_some());
        self.finish_op(
            op_index,
            OpType::Insert,
            Some(key),
            0,
            links,
            (0, 0),
            (n_before, b_before),
            BoxCounts::default(),
        )
    }

    pub fn delete_min(&mut self) -> Result<&OpRecord> {
        let op_index = self.records.len();
        let root = self
            .heap
            .root()
            .ok_or(AccountingError::EmptyDelete { op_index })?;
        let (n_before, b_before) = (self.phi_n, self.phi_b);
        let r_root = self.rank(root);
        let (key, stats) = self.heap.delete_min(self.variant)?;
        let (good, counts) = self.account_delete_min(op_index, r_root, &stats)?;
        self.delete_mins += 1;
        self.total_k += stats.k as u128;
        if self.checking() {
            let p = self.epoch.params;
            let t = p.t as i128;
            let m = 4 * t * (1i128 << p.t);
            let drop = (n_before * t + b_before as i128 * self.d_prime()) - self.total_units();
            let rhs =
                stats.k as i128 * self.unit() - 2 * self.d_prime() * m - (t - 1) * self.unit() * m;
            if drop * m < rhs {
                return Err(self.violation(
                    op_index,
                    Invariant::DeleteMinDecrease,
                    format!(
                        "k = {}, decrease {} below k/(4t2^t) - 2/t - (t-1)",
                        stats.k,
                        Rational::new(drop, self.unit())
                    ),
                ));
            }
            if let Err((inv, detail)) = self.validate_boxes() {
                return Err(self.violation(op_index, inv, detail));
            }
        }
        self.finish_op(
            op_index,
            OpType::DeleteMin,
            Some(key),
            stats.k,
            stats.links(),
            good,
            (n_before, b_before),
            counts,
        )
    }

    /// Node and box potential updates for one delete-min, read from its
    /// link events as if the root were detached after both rounds.
    fn account_delete_min(
        &mut self,
        op_index: usize,
        r_root: u64,
        stats: &OpStats,
    ) -> Result<((usize, usize), BoxCounts)> {
        let params = self.epoch.params;
        let t = params.t;
        let xs = &stats.children;
        let k = xs.len();
        let npairs = k / 2;
        let disorder = || AccountingError::NotAnalysisOrder { op_index };
        if stats.events.len() != k.saturating_sub(1) {
            return Err(disorder());
        }
        let (pair_ev, acc_ev) = stats.events.split_at(npairs);
        for (p, ev) in pair_ev.iter().enumerate() {
            let pair = [xs[2 * p], xs[2 * p + 1]];
            if ev.round != Round::Pairing
                || ev.position as usize != p
                || !pair.contains(&ev.winner)
                || !pair.contains(&ev.loser)
            {
                return Err(disorder());
            }
        }
        if acc_ev.iter().any(|e| e.round != Round::Accumulation) {
            return Err(disorder());
        }

        let mut classes = Vec::with_capacity(stats.events.len());
        let (mut good1, mut good2) = (0, 0);
        let mut dn = 0i128;
        for ev in &stats.events {
            let rw = self.rank(ev.winner) - r_root;
            let rl = self.rank(ev.loser) - r_root;
            let loser_was_min = ev.round == Round::Accumulation && !ev.winner_was_ltr_minimum;
            let class = classify_link(&params, rw, rl, ev.round, loser_was_min);
            let delta = self.phi(rl - rw) - self.phi(rl);
            dn += delta;
            match class {
                LinkClass::Good1 => {
                    good1 += 1;
                    if self.checking() && delta > -self.d_prime() {
                        return Err(self.violation(
                            op_index,
                            Invariant::Good1Decrease,
                            format!(
                                "link {} over {} lowered phi by {}",
                                ev.winner,
                                ev.loser,
                                Rational::new(-delta, self.d_prime())
                            ),
                        ));
                    }
                }
                LinkClass::Good2 => good2 += 1,
                LinkClass::Plain => {}
            }
            classes.push(class);
        }
        if self.checking() && good2 + 1 > t as usize {
            return Err(self.violation(
                op_index,
                Invariant::Good2Bound,
                format!("{good2} good links of type 2 with t = {t}"),
            ));
        }
        if let Some(s) = self.heap.root() {
            let detach = self.phi(self.rank(s) - r_root);
            dn -= detach;
            if self.checking() && self.sorting_ranks && detach != 0 {
                return Err(self.violation(
                    op_index,
                    Invariant::RootDetach,
                    format!("successor {s} keeps scaled potential {detach}"),
                ));
            }
        }
        self.phi_n += dn;

        // Pairing round.
        let mut counts = BoxCounts::default();
        let cap = (1usize << t) - 1;
        let mut run: Vec<Handle> = Vec::new();
        let mut touched: Vec<(u64, Touched)> = Vec::new();
        let touch = |touched: &mut Vec<(u64, Touched)>, id: u64| -> usize {
            match touched.iter().position(|(i, _)| *i == id) {
                Some(i) => i,
                None => {
                    touched.push((id, Touched::default()));
                    touched.len() - 1
                }
            }
        };
        for (p, ev) in pair_ev.iter().enumerate() {
            let (a, b) = (xs[2 * p], xs[2 * p + 1]);
            let (ba, bb) = (self.box_id(a), self.box_id(b));
            let class = classes[p];
            if ba.is_some() || bb.is_some() {
                run.clear();
                for id in [ba, bb].into_iter().flatten() {
                    let i = touch(&mut touched, id);
                    touched[i].1.good |= class == LinkClass::Good1;
                    touched[i].1.seen += 1;
                }
                if ba == bb {
                    let i = touch(&mut touched, ba.expect("shared box"));
                    touched[i].1.winners.push(ev.winner);
                }
            } else if class == LinkClass::Plain {
                run.push(ev.winner);
                if run.len() == cap {
                    let members = std::mem::take(&mut run);
                    let id = self.add_box(members, t);
                    touched.push((
                        id,
                        Touched {
                            good: false,
                            winners: Vec::new(),
                            seen: usize::MAX,
                        },
                    ));
                    counts.created += 1;
                }
            } else {
                run.clear();
            }
        }
        if k % 2 == 1 {
            if let Some(id) = self.box_id(xs[k - 1]) {
                let i = touch(&mut touched, id);
                touched[i].1.seen += 1;
            }
        }
        let mut survivors = Vec::new();
        for (id, info) in touched {
            if info.seen == usize::MAX {
                survivors.push(id);
                continue;
            }
            let bx = &self.epoch.boxes[&id];
            if info.seen != bx.members.len() {
                return Err(self.violation(
                    op_index,
                    Invariant::BoxContiguous,
                    format!("box {id} only partly among the deleted root's children"),
                ));
            }
            let b = bx.b;
            let shrinks = !info.good && b > 2 && info.winners.len() == (1usize << (b - 1)) - 1;
            self.remove_box(id);
            if shrinks {
                survivors.push(self.add_box(info.winners, b - 1));
                counts.shrunk += 1;
            } else {
                counts.deleted += 1;
            }
        }

        // Accumulation round: a box holding a running minimum is split by
        // the round, so it is deleted.
        let ys: Vec<Handle> = pair_ev
            .iter()
            .map(|e| e.winner)
            .chain((k % 2 == 1).then(|| xs[k - 1]))
            .collect();
        let first_min = match self.variant {
            Variant::Forward => ys.first(),
            _ => ys.last(),
        };
        let minima = first_min.copied().into_iter().chain(
            acc_ev
                .iter()
                .filter(|e| !e.winner_was_ltr_minimum)
                .map(|e| e.winner),
        );
        for m in minima.collect::<Vec<_>>() {
            if let Some(id) = self.box_id(m) {
                self.remove_box(id);
                counts.deleted += 1;
            }
        }
        if self.variant == Variant::Forward {
            for id in survivors {
                if let Some(bx) = self.epoch.boxes.get_mut(&id) {
                    bx.members.reverse();
                }
            }
        }
        Ok(((good1, good2), counts))
    }

    /// Links the root of `other` with this heap's root. Both heaps' keys
    /// must lie in the frozen universe.
    pub fn meld(&mut self, other: Heap) -> Result<&OpRecord> {
        let op_index = self.records.len();
        if self.mode != EpochMode::Frozen {
            return Err(AccountingError::MeldNeedsFrozenEpoch);
        }
        let (n_before_self, b_before) = (self.phi_n, self.phi_b);
        let mut before: HashMap<i64, u64> = self.rd_by_key(&self.heap, op_index)?;
        let theirs = self.rd_by_key(&other, op_index)?;
        let other_phi: i128 = theirs.values().map(|&rd| self.phi(rd)).sum();
        before.extend(theirs);
        let n_before = n_before_self + other_phi;
        let both_nonempty = !self.heap.is_empty() && !other.is_empty();
        let mine = std::mem::take(&mut self.heap);
        self.heap = meld(mine, other)?;
        let after = self.rd_by_key(&self.heap, op_index)?;
        for h in self.heap.reachable() {
            let r = self.key_rank(op_index, self.heap.key(h)?)?;
            self.set_rank(h, r);
            if h.index() >= self.box_of.len() {
                self.set_box(h, None);
            }
        }
        let changed: Vec<i64> = after
            .iter()
            .filter(|(k, rd)| before.get(k) != Some(rd))
            .map(|(k, _)| *k)
            .collect();
        self.phi_n = after.values().map(|&rd| self.phi(rd)).sum();
        if self.checking() {
            let want = usize::from(both_nonempty);
            if changed.len() != want {
                return Err(self.violation(
                    op_index,
                    Invariant::MeldRdChange,
                    format!("rank-differences changed for keys {changed:?}"),
                ));
            }
            let p = self.epoch.params;
            let cap = p.t as i128 * p.q as i128 * self.d_prime();
            if self.phi_n - n_before > cap {
                return Err(self.violation(
                    op_index,
                    Invariant::MeldIncrease,
                    format!("scaled increase {}", self.phi_n - n_before),
                ));
            }
        }
        let links = usize::from(both_nonempty);
        self.finish_op(
            op_index,
            OpType::Meld,
            None,
            0,
            links,
            (0, 0),
            (n_before, b_before),
            BoxCounts::default(),
        )
    }

    fn rd_by_key(&self, heap: &Heap, op_index: usize) -> Result<HashMap<i64, u64>> {
        let mut out = HashMap::with_capacity(heap.len());
        for h in heap.reachable() {
            let key = heap.key(h)?;
            let rd = match heap.parent(h)? {
                Some(p) => self.key_rank(op_index, key)? - self.key_rank(op_index, heap.key(p)?)?,
                None => 0,
            };
            out.insert(key, rd);
        }
        Ok(out)
    }

    #[allow(clippy::too_many_arguments)]
    fn finish_op(
        &mut self,
        op_index: usize,
        op_type: OpType,
        key: Option<i64>,
        k: usize,
        links: usize,
        (good1, good2): (usize, usize),
        (n_before, b_before): (i128, i64),
        counts: BoxCounts,
    ) -> Result<&OpRecord> {
        self.strict_checks(op_index)?;
        let p = self.epoch.params;
        let size = self.heap.len();
        if self.checking()
            && self.mode == EpochMode::Rolling
            && !self.epoch.clamped
            && ((size as u64) < p.n / 4 || size as u64 > p.n)
        {
            return Err(self.violation(
                op_index,
                Invariant::EpochSize,
                format!("size {size} outside [{}, {}]", p.n / 4, p.n),
            ));
        }
        let before_units = n_before * p.t as i128 + b_before as i128 * self.d_prime();
        let delta_units = self.total_units() - before_units;
        let record = OpRecord {
            op_index,
            op_type,
            key,
            k,
            links,
            good1,
            good2,
            phi_n_before: Rational::new(n_before, self.d_prime()),
            phi_n: self.phi_node_total(),
            phi_b_before: Rational::new(b_before, p.t),
            phi_b: self.box_potential(),
            delta_phi: Rational::new(delta_units, self.unit()),
            epoch_id: self.epoch.epoch_id,
            n: p.n,
            t: p.t,
            q: p.q,
            box_count: self.epoch.boxes.len(),
            boxes_created: counts.created,
            boxes_shrunk: counts.shrunk,
            boxes_deleted: counts.deleted,
            rollover: false,
        };
        self.records.push(record);
        self.epoch_ops.push((op_type, delta_units, k));
        self.current.ops += 1;
        self.current.min_size = self.current.min_size.min(size);
        self.current.max_size = self.current.max_size.max(size);
        if self.mode == EpochMode::Rolling {
            let n = p.n;
            let ends = match op_type {
                OpType::Insert => size as u64 >= n || self.epoch.distinct_keys_seen >= n,
                OpType::DeleteMin => size as u64 <= n / 4,
                OpType::Meld => false,
            };
            if ends {
                self.rollover(op_index)?;
                self.records.last_mut().expect("row just pushed").rollover = true;
            }
        }
        Ok(self.records.last().expect("row just pushed"))
    }

    /// Starts a fresh epoch sized to the current heap.
    fn begin_epoch(&mut self, epoch_id: u32, first_op: usize) -> Result<()> {
        let size = self.heap.len();
        let n = (2 * size as u64).max(4);
        let params = AnalysisParams::derive(n)?;
        let mut universe: Vec<i64> = self.heap.keys().collect();
        let room = (n as usize).saturating_sub(universe.len());
        universe.extend(self.future[self.future_pos..].iter().take(room));
        self.epoch = EpochState {
            epoch_id,
            params,
            rank_table: RankTable::build(universe)?,
            boxes: BTreeMap::new(),
            distinct_keys_seen: size as u64,
            clamped: 2 * size < 4,
        };
        self.box_of.clear();
        self.phi_b = 0;
        self.phi_n = self.rerank(first_op)?;
        self.current = summary_for(&self.epoch, first_op, size);
        self.epoch_ops.clear();
        Ok(())
    }

    fn rollover(&mut self, op_index: usize) -> Result<()> {
        let old_total = self.total_potential();
        let old = self.epoch.params;
        let finished = self.current.clone();
        if self.checking() {
            let need = old.n.div_ceil(4) as usize;
            if finished.ops < need {
                return Err(self.violation(
                    op_index,
                    Invariant::EpochLength,
                    format!(
                        "epoch {} had {} ops, n = {}",
                        finished.epoch_id, finished.ops, old.n
                    ),
                ));
            }
        }
        let ops = std::mem::take(&mut self.epoch_ops);
        self.begin_epoch(self.epoch.epoch_id + 1, op_index + 1)?;
        let jump = self.total_potential() - old_total;
        if self.checking() {
            let cap = Rational::from_integer(
                old.n as i128 * old.t as i128 * old.q as i128 + old.n as i128,
            );
            if jump > cap {
                return Err(self.violation(
                    op_index,
                    Invariant::RolloverJump,
                    format!("jump {jump} exceeds {cap}"),
                ));
            }
            check_amortized(&old, &ops, &jump, op_index)?;
        }
        let mut finished = finished;
        finished.jump = Some(jump);
        self.epochs.push(finished);
        Ok(())
    }

    /// Closes the open epoch and runs the whole-run checks.
    pub fn finish(mut self) -> Result<Analysis> {
        let last = self.records.len().saturating_sub(1);
        if self.checking() {
            let p = self.epoch.params;
            check_amortized(&p, &self.epoch_ops, &Rational::zero(), last)?;
            if self.sorting_ranks {
                let (n, t, q) = (p.n as u128, p.t as u128, p.q as u128);
                let cap = (n * t * q + n * t) * (4 * t * (1u128 << t));
                if self.total_k > cap {
                    return Err(self.violation(
                        last,
                        Invariant::SortingTotal,
                        format!("total cost {} exceeds {cap}", self.total_k),
                    ));
                }
            }
        }
        let current = self.current.clone();
        if current.ops > 0 || self.epochs.is_empty() {
            self.epochs.push(current);
        }
        Ok(Analysis {
            mode: self.mode,
            records: self.records,
            epochs: self.epochs,
            total_k: self.total_k,
            delete_mins: self.delete_mins,
        })
    }
}

fn summary_for(epoch: &EpochState, first_op: usize, size: usize) -> EpochSummary {
    EpochSummary {
        epoch_id: epoch.epoch_id,
        n: epoch.params.n,
        t: epoch.params.t,
        q: epoch.params.q,
        clamped: epoch.clamped,
        first_op,
        ops: 0,
        start_size: size,
        min_size: size,
        max_size: size,
        jump: None,
    }
}

/// Spreads a non-negative rollover jump evenly over the epoch's operations
/// and bounds each operation's resulting increase.
fn check_amortized(
    p: &AnalysisParams,
    ops: &[(OpType, i128, usize)],
    jump: &Rational,
    op_index: usize,
) -> Result<()> {
    if ops.is_empty() {
        return Ok(());
    }
    let unit = p.phi_denominator() * p.t as i128;
    let share = if jump.is_negative() {
        Rational::zero()
    } else {
        jump / &Rational::from_integer(ops.len() as i128)
    };
    let tq = p.t as i128 * p.q as i128;
    let scale = 4 * p.t as i128 * (1i128 << p.t);
    for &(op, delta, k) in ops {
        let amortized = Rational::new(delta, unit) + share.clone();
        let (cap, invariant) = match op {
            OpType::Insert | OpType::Meld => (
                Rational::from_integer(5 * tq + 4),
                Invariant::AmortizedInsert,
            ),
            OpType::DeleteMin => (
                Rational::from_integer(p.t as i128 + 4 * tq + 4) - Rational::new(k as i128, scale),
                Invariant::AmortizedDeleteMin,
            ),
        };
        if amortized > cap {
            return Err(AccountingError::Invariant {
                op_index,
                invariant,
                detail: format!("increase {amortized} exceeds {cap}"),
            });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::phi_n;
    use crate::workloads::{gen_mixed, gen_sorting, KeyOrder};

    /// Heap with root `root` and the given children, left to right.
    fn star(root: i64, children: &[i64]) -> Heap {
        let mut h = Heap::new();
        h.insert(root).unwrap();
        for &c in children.iter().rev() {
            h.insert(c).unwrap();
        }
        h
    }

    fn analyzer(h: Heap, n: u64, q: u64, variant: Variant) -> Analyzer {
        let rt = RankTable::build(0..n as i64).unwrap();
        let p = AnalysisParams::with_scaling(n, q).unwrap();
        Analyzer::with_params(h, rt, p, variant, CheckLevel::Strict).unwrap()
    }

    fn keys_of(a: &Analyzer, bx: &NodeBox) -> Vec<i64> {
        bx.members
            .iter()
            .map(|&m| a.heap().key(m).unwrap())
            .collect()
    }

    #[test]
    fn classification_examples() {
        let p = AnalysisParams::with_scaling(512, 8).unwrap();
        assert_eq!(
            classify_link(&p, 9, 60, Round::Pairing, false),
            LinkClass::Good1
        );
        assert_eq!(
            classify_link(&p, 1, 300, Round::Pairing, false),
            LinkClass::Plain
        );
        assert_eq!(
            classify_link(&p, 1, 300, Round::Accumulation, true),
            LinkClass::Good2
        );
        assert_eq!(
            classify_link(&p, 9, 60, Round::Accumulation, true),
            LinkClass::Good1
        );
    }

    #[test]
    fn box_potential_examples() {
        let mut a = analyzer(star(0, &[1, 2, 3, 4, 5, 6, 7]), 16, 2, Variant::Forward);
        assert_eq!(a.params().t, 4);
        assert_eq!(a.box_potential(), Rational::zero());
        a.debug_force_box(&[1, 2, 3], 2).unwrap();
        assert_eq!(a.box_potential(), Rational::new(-3, 4));
        let mut a = analyzer(star(0, &[1, 2, 3, 4, 5, 6, 7]), 64, 10, Variant::Forward);
        assert_eq!(a.params().t, 2);
        a.debug_force_box(&[1, 2, 3], 2).unwrap();
        assert_eq!(a.box_potential(), Rational::new(-1, 2));
    }

    #[test]
    fn size_three_box_removed_by_good_link() {
        // q = 8, t = 3: categories 0 for rd 1..7, 1 for 8..63, 2 above.
        let h = star(0, &[1, 100, 2, 3, 4, 50]);
        let mut a = analyzer(h, 512, 8, Variant::Forward);
        a.debug_force_box(&[2, 3, 4], 2).unwrap();
        a.validate_boxes().unwrap();
        let before = a.phi_node_total();
        let r = a.delete_min().unwrap().clone();
        assert_eq!(r.boxes_deleted, 1);
        assert_eq!(a.box_count(), 0);
        assert!(r.good1 >= 1);
        // Link 2-3 alone lowers the node potential by at least one.
        assert!(before - a.phi_node_total() >= Rational::from_integer(1));
    }

    #[test]
    fn size_seven_box_shrinks_to_three() {
        let h = star(0, &[1, 100, 2, 10, 3, 11, 4, 12, 5, 13]);
        let mut a = analyzer(h, 512, 8, Variant::Forward);
        a.debug_force_box(&[2, 10, 3, 11, 4, 12, 5], 3).unwrap();
        a.validate_boxes().unwrap();
        let phi_b = a.box_potential();
        let r = a.delete_min().unwrap().clone();
        // Pairing links are all plain; the four accumulation links join
        // category-0 nodes.
        assert_eq!((r.boxes_shrunk, r.boxes_deleted, r.good1), (1, 0, 4));
        let boxes: Vec<_> = a.boxes().cloned().collect();
        assert_eq!(boxes.len(), 1);
        assert_eq!(boxes[0].b, 2);
        // Forward accumulation reverses the surviving winners under key 1.
        assert_eq!(keys_of(&a, &boxes[0]), vec![4, 3, 2]);
        assert_eq!(phi_b - a.box_potential(), Rational::new(1, 3));
        a.validate_boxes().unwrap();
    }

    #[test]
    fn full_box_created_with_t_two() {
        // q = 10, t = 2, T = 3: a good link, then three plain links.
        let h = star(0, &[1, 6, 2, 20, 3, 21, 4, 22, 5]);
        let mut a = analyzer(h, 64, 10, Variant::Forward);
        let r = a.delete_min().unwrap().clone();
        assert_eq!(r.boxes_created, 1);
        // Pair 1-6 plus the four accumulation links, all within category 0.
        assert_eq!(r.good1, 5);
        let boxes: Vec<_> = a.boxes().cloned().collect();
        assert_eq!(keys_of(&a, &boxes[0]), vec![4, 3, 2]);
        assert_eq!(a.box_potential(), Rational::new(-1, 2));
    }

    #[test]
    fn box_with_first_minimum_is_deleted() {
        let h = star(0, &[1, 20, 2, 21, 3, 22]);
        let mut a = analyzer(h, 64, 10, Variant::Forward);
        let r = a.delete_min().unwrap().clone();
        assert_eq!((r.boxes_created, r.boxes_deleted), (1, 1));
        assert_eq!(a.box_potential(), Rational::zero());
    }

    #[test]
    fn injected_category_violation() {
        let h = star(0, &[1, 2, 40]);
        let mut a = analyzer(h, 512, 8, Variant::Forward);
        a.debug_force_box(&[1, 2, 40], 2).unwrap();
        assert_eq!(a.validate_boxes().unwrap_err().0, Invariant::BoxCategory);
        let mut a = analyzer(star(0, &[1, 2, 3, 4]), 512, 8, Variant::Forward);
        a.debug_force_box(&[1, 3, 4], 2).unwrap();
        assert_eq!(a.validate_boxes().unwrap_err().0, Invariant::BoxContiguous);
        let mut a = analyzer(star(0, &[1, 2, 3, 4]), 512, 8, Variant::Forward);
        a.debug_force_box(&[1, 2], 2).unwrap();
        assert_eq!(a.validate_boxes().unwrap_err().0, Invariant::BoxSize);
    }

    #[test]
    fn insert_examples() {
        let mut a = Analyzer::frozen(1..=8, Variant::Forward, CheckLevel::Strict).unwrap();
        for k in (1..=8).rev() {
            let r = a.insert(k).unwrap();
            assert_eq!(r.delta_phi, Rational::zero(), "key {k}");
        }
        let mut a = Analyzer::frozen(1..=8, Variant::Forward, CheckLevel::Strict).unwrap();
        a.insert(1).unwrap();
        assert_eq!(a.insert(2).unwrap().delta_phi, Rational::zero());
        let r = a.insert(8).unwrap().clone();
        assert_eq!(r.delta_phi, phi_node_of(&a, 7));
    }

    fn phi_node_of(a: &Analyzer, rd: u64) -> Rational {
        crate::potential::phi_node(rd, &a.params())
    }

    #[test]
    fn meld_examples() {
        let mut a = Analyzer::frozen(0..40, Variant::Forward, CheckLevel::Strict).unwrap();
        a.insert(3).unwrap();
        assert_eq!(a.meld(Heap::new()).unwrap().delta_phi, Rational::zero());
        let mut other = Heap::new();
        other.insert(30).unwrap();
        let r = a.meld(other).unwrap().clone();
        assert_eq!(r.delta_phi, phi_node_of(&a, 27));
        let mut other = Heap::new();
        for k in [10, 1, 25] {
            other.insert(k).unwrap();
        }
        a.meld(other).unwrap();
        let rt = a.epoch().rank_table.clone();
        assert_eq!(
            phi_n(a.heap(), &rt, &a.params()).unwrap(),
            a.phi_node_total()
        );
    }

    #[test]
    fn sorting_trace_strict() {
        for order in [KeyOrder::Random, KeyOrder::Sorted, KeyOrder::Reverse] {
            let tr = gen_sorting(300, 5, order);
            for v in [Variant::Forward, Variant::Standard] {
                let a = Analyzer::for_trace(&tr, v, CheckLevel::Strict).unwrap();
                assert_eq!(a.mode(), EpochMode::Frozen);
                let out = a.run(&tr).unwrap();
                assert_eq!(out.epochs.len(), 1);
                assert_eq!(out.delete_mins, 300);
            }
        }
    }

    #[test]
    fn mixed_trace_rolls_over() {
        let tr = gen_mixed(10_000, 0.5, 3);
        let a = Analyzer::for_trace(&tr, Variant::Forward, CheckLevel::Strict).unwrap();
        assert_eq!(a.mode(), EpochMode::Rolling);
        let out = a.run(&tr).unwrap();
        assert!(out.rollovers() >= 1);
        assert_eq!(out.records.len(), 10_000);
    }

    #[test]
    fn rollover_rules() {
        // Four inserts fill n = 4.
        let tr = crate::workloads::parse_trace("I 1\nI 2\nI 3\nI 4\nD\nI 5\nD\nD\nD\n").unwrap();
        let a = Analyzer::for_trace(&tr, Variant::Forward, CheckLevel::Strict).unwrap();
        let out = a.run(&tr).unwrap();
        assert!(out.records[3].rollover);
        assert_eq!(out.records[4].n, 8);
        // 4 -> 3 -> 4 -> 3 -> 2: floor(8/4) = 2 ends the epoch.
        assert!(out.records[7].rollover);
        assert_eq!(out.records[8].n, 4);
    }

    #[test]
    fn ledger_csv_shape() {
        let tr = gen_sorting(20, 1, KeyOrder::Random);
        let out = Analyzer::for_trace(&tr, Variant::Forward, CheckLevel::Fast)
            .unwrap()
            .run(&tr)
            .unwrap();
        let mut buf = Vec::new();
        out.write_ledger(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 41);
        assert_eq!(lines[0], LEDGER_HEADER);
        assert!(lines[1..].iter().all(|l| l.split(',').count() == 18));
    }

    #[test]
    fn decrease_key_rejected() {
        let tr = crate::workloads::parse_trace("I 5\nK 5 1\nD\n").unwrap();
        assert!(matches!(
            Analyzer::for_trace(&tr, Variant::Forward, CheckLevel::Off),
            Err(AccountingError::DecreaseKeyUnsupported { op_index: 1 })
        ));
        assert!(matches!(
            Analyzer::for_trace(&tr, Variant::Multipass, CheckLevel::Off),
            Err(AccountingError::DecreaseKeyUnsupported { .. })
        ));
        let tr = gen_sorting(4, 1, KeyOrder::Sorted);
        assert!(matches!(
            Analyzer::for_trace(&tr, Variant::Multipass, CheckLevel::Off),
            Err(AccountingError::UnsupportedVariant(Variant::Multipass))
        ));
    }
}
