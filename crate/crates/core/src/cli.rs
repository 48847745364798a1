//! Command-line front end. The binary only forwards `std::env::args` here,
//! so every command is testable in-process.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand_chacha::ChaCha8Rng;

use crate::accounting::{AccountingError, Analyzer, CheckLevel};
use crate::heap::{Heap, HeapError};
use crate::oracle::reference_extract;
use crate::variants::{ArbitraryPolicy, Variant};
use crate::workloads::{
    gen_mixed, gen_sorting, parse_trace_with_lines, rng_from_seed, KeyOrder, Op, Trace,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_MISMATCH: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INVARIANT: i32 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "pairing-lab",
    version,
    about = "Pairing-heap variants and potential accounting"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Replay a workload uninstrumented and write per-operation costs.
    Run(RunArgs),
    /// Instrumented replay of a trace file; writes the potential ledger.
    Analyze(AnalyzeArgs),
    /// Total link counts of forward, standard and multipass on shared traces.
    Compare(CompareArgs),
    /// Replay a trace file and check extraction order against a reference.
    Replay(ReplayArgs),
    /// Write a generated trace.
    Gen(GenArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    Forward,
    Standard,
    Multipass,
    Arbitrary,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PolicyArg {
    Forward,
    Standard,
    Random,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum WorkloadArg {
    Sorting,
    Mixed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OrderArg {
    Random,
    Sorted,
    Reverse,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum CheckArg {
    Off,
    Fast,
    Strict,
}

#[derive(Args, Debug, Clone)]
pub struct WorkloadArgs {
    #[arg(long, value_enum, default_value = "sorting")]
    pub workload: WorkloadArg,
    /// Key order of a sorting workload.
    #[arg(long, value_enum, default_value = "random")]
    pub order: OrderArg,
    /// Number of keys of a sorting workload.
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    /// Number of operations of a mixed workload.
    #[arg(long, default_value_t = 10_000)]
    pub ops: usize,
    /// Insert probability of a mixed workload.
    #[arg(long, default_value_t = 0.5)]
    pub ratio: f64,
}

#[derive(Args, Debug)]
pub struct RunArgs {
    #[arg(long, value_enum)]
    pub variant: VariantArg,
    #[arg(long, value_enum, default_value = "random")]
    pub policy: PolicyArg,
    #[command(flatten)]
    pub workload: WorkloadArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Replay this trace file instead of generating one.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Per-operation cost CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct AnalyzeArgs {
    #[arg(long, value_enum)]
    pub variant: VariantArg,
    #[arg(long)]
    pub trace: PathBuf,
    /// Ledger CSV; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "fast")]
    pub check: CheckArg,
}

#[derive(Args, Debug)]
pub struct CompareArgs {
    #[command(flatten)]
    pub workload: WorkloadArgs,
    #[arg(long, value_delimiter = ',', default_value = "0")]
    pub seeds: Vec<u64>,
    /// Markdown report; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ReplayArgs {
    #[arg(long, value_enum)]
    pub variant: VariantArg,
    #[arg(long, value_enum, default_value = "random")]
    pub policy: PolicyArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub trace: PathBuf,
}

#[derive(Args, Debug)]
pub struct GenArgs {
    #[command(flatten)]
    pub workload: WorkloadArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Delete-min strategy of an uninstrumented replay.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Strategy {
    Named(Variant),
    Arbitrary(PolicyArg),
}

impl Strategy {
    pub fn from_arg(v: VariantArg, policy: PolicyArg) -> Self {
        match v {
            VariantArg::Forward => Strategy::Named(Variant::Forward),
            VariantArg::Standard => Strategy::Named(Variant::Standard),
            VariantArg::Multipass => Strategy::Named(Variant::Multipass),
            VariantArg::Arbitrary => Strategy::Arbitrary(policy),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CostRow {
    pub op_index: usize,
    pub op_type: &'static str,
    pub k: usize,
    pub links: usize,
}

#[derive(Clone, Debug, Default)]
pub struct ReplayOutcome {
    pub rows: Vec<CostRow>,
    pub extracted: Vec<i64>,
}

impl ReplayOutcome {
    pub fn total_links(&self) -> u64 {
        self.rows.iter().map(|r| r.links as u64).sum()
    }

    pub fn max_k(&self) -> usize {
        self.rows.iter().map(|r| r.k).max().unwrap_or(0)
    }

    pub fn mean_links(&self) -> f64 {
        if self.rows.is_empty() {
            0.0
        } else {
            self.total_links() as f64 / self.rows.len() as f64
        }
    }
}

#[derive(Debug, thiserror::Error)]
#[error("op {op_index}: {source}")]
pub struct ReplayError {
    pub op_index: usize,
    #[source]
    pub source: HeapError,
}

/// Plays `tr` on a fresh heap. `seed` drives random arbitrary policies.
pub fn replay_trace(
    tr: &Trace,
    strategy: Strategy,
    seed: u64,
) -> Result<ReplayOutcome, ReplayError> {
    let mut heap = Heap::new();
    let mut rng: ChaCha8Rng = rng_from_seed(seed);
    let mut out = ReplayOutcome {
        rows: Vec::with_capacity(tr.ops.len()),
        extracted: Vec::new(),
    };
    for (op_index, op) in tr.ops.iter().enumerate() {
        let wrap = |source| ReplayError { op_index, source };
        let (k, links) = match *op {
            Op::Insert(key) => {
                let links = usize::from(!heap.is_empty());
                heap.insert(key).map_err(wrap)?;
                (0, links)
            }
            Op::DeleteMin => {
                let (key, stats) = match strategy {
                    Strategy::Named(v) => heap.delete_min(v),
                    Strategy::Arbitrary(p) => {
                        let root = heap.root().ok_or(HeapError::EmptyHeap).map_err(wrap)?;
                        let k = heap.children(root).map_err(wrap)?.len();
                        let policy = match p {
                            PolicyArg::Forward => ArbitraryPolicy::forward(k),
                            PolicyArg::Standard => ArbitraryPolicy::standard(k),
                            PolicyArg::Random => ArbitraryPolicy::random(k, &mut rng),
                        };
                        heap.delete_min_arbitrary(&policy)
                    }
                }
                .map_err(wrap)?;
                out.extracted.push(key);
                (stats.k, stats.links())
            }
            Op::DecreaseKey { key, new_key } => {
                let root_before = heap.handle_of(key) == heap.root();
                heap.decrease_key_by_key(key, new_key).map_err(wrap)?;
                (0, usize::from(!root_before))
            }
        };
        out.rows.push(CostRow {
            op_index,
            op_type: op.code(),
            k,
            links,
        });
    }
    Ok(out)
}

pub fn build_workload(w: &WorkloadArgs, seed: u64) -> Result<Trace, String> {
    match w.workload {
        WorkloadArg::Sorting => {
            if w.n == 0 {
                return Err("--n must be at least 1".into());
            }
            let order = match w.order {
                OrderArg::Random => KeyOrder::Random,
                OrderArg::Sorted => KeyOrder::Sorted,
                OrderArg::Reverse => KeyOrder::Reverse,
            };
            Ok(gen_sorting(w.n, seed, order))
        }
        WorkloadArg::Mixed => {
            if !(w.ratio > 0.0 && w.ratio < 1.0) {
                return Err("--ratio must lie strictly between 0 and 1".into());
            }
            Ok(gen_mixed(w.ops, w.ratio, seed))
        }
    }
}

pub fn cost_csv(outcome: &ReplayOutcome) -> String {
    let mut s = String::with_capacity(outcome.rows.len() * 16 + 32);
    s.push_str("op_index,op_type,k,links\n");
    for r in &outcome.rows {
        let _ = writeln!(s, "{},{},{},{}", r.op_index, r.op_type, r.k, r.links);
    }
    s
}

struct Io<'a> {
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
}

impl Io<'_> {
    fn fail(&mut self, code: i32, msg: impl std::fmt::Display) -> i32 {
        let _ = writeln!(self.err, "error: {msg}");
        code
    }
}

fn write_file_or(io: &mut Io<'_>, path: Option<&Path>, body: &str) -> io::Result<()> {
    match path {
        Some(p) => fs::write(p, body),
        None => io.out.write_all(body.as_bytes()),
    }
}

fn read_trace(path: &Path) -> Result<(Trace, Vec<usize>), String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    parse_trace_with_lines(&text).map_err(|e| format!("{}: {e}", path.display()))
}

/// Parses `args` (program name first) and runs the command.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let mut io = Io { out, err };
    let args: Vec<std::ffi::OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(io.err, "{text}");
                if !text.contains("Usage:") {
                    let _ = writeln!(io.err, "\n{}", usage_for(&args));
                }
                EXIT_USAGE
            } else {
                let _ = write!(io.out, "{text}");
                EXIT_OK
            };
        }
    };
    match cli.command {
        Command::Run(a) => cmd_run(&mut io, a),
        Command::Analyze(a) => cmd_analyze(&mut io, a),
        Command::Compare(a) => cmd_compare(&mut io, a),
        Command::Replay(a) => cmd_replay(&mut io, a),
        Command::Gen(a) => cmd_gen(&mut io, a),
    }
}

fn usage_for(args: &[std::ffi::OsString]) -> String {
    use clap::CommandFactory;
    let mut root = Cli::command();
    let sub = args.get(1).and_then(|a| a.to_str()).map(str::to_owned);
    match sub.and_then(|name| root.find_subcommand_mut(&name).cloned()) {
        Some(c) => {
            let name = format!("pairing-lab {}", c.get_name());
            c.bin_name(name).render_usage().to_string()
        }
        None => root.render_usage().to_string(),
    }
}

fn cmd_run(io: &mut Io<'_>, a: RunArgs) -> i32 {
    let (tr, lines) = match &a.trace {
        Some(p) => match read_trace(p) {
            Ok(t) => t,
            Err(e) => return io.fail(EXIT_USAGE, e),
        },
        None => match build_workload(&a.workload, a.seed) {
            Ok(t) => (t, Vec::new()),
            Err(e) => return io.fail(EXIT_USAGE, e),
        },
    };
    let outcome = match replay_trace(&tr, Strategy::from_arg(a.variant, a.policy), a.seed) {
        Ok(o) => o,
        Err(e) => return io.fail(EXIT_USAGE, line_message(&e, &lines)),
    };
    if let Some(p) = &a.out {
        if let Err(e) = fs::write(p, cost_csv(&outcome)) {
            return io.fail(EXIT_USAGE, format!("{}: {e}", p.display()));
        }
    }
    let _ = writeln!(io.out, "total links: {}", outcome.total_links());
    let _ = writeln!(io.out, "max k: {}", outcome.max_k());
    let _ = writeln!(io.out, "mean links/op: {:.4}", outcome.mean_links());
    EXIT_OK
}

fn line_message(e: &ReplayError, lines: &[usize]) -> String {
    match lines.get(e.op_index) {
        Some(l) => format!("line {l}: {}", e.source),
        None => e.to_string(),
    }
}

fn cmd_analyze(io: &mut Io<'_>, a: AnalyzeArgs) -> i32 {
    let variant = match a.variant {
        VariantArg::Forward => Variant::Forward,
        VariantArg::Standard => Variant::Standard,
        other => {
            return io.fail(
                EXIT_USAGE,
                format!("analyze supports forward and standard, not {other:?}"),
            )
        }
    };
    let (tr, lines) = match read_trace(&a.trace) {
        Ok(t) => t,
        Err(e) => return io.fail(EXIT_USAGE, e),
    };
    let at_line = |i: usize| {
        lines
            .get(i)
            .map(|l| format!("line {l}: "))
            .unwrap_or_default()
    };
    if let Err(e) = crate::workloads::validate_trace(&tr) {
        let i = match e {
            crate::workloads::TraceError::EmptyDelete { op_index }
            | crate::workloads::TraceError::DuplicateInsert { op_index, .. }
            | crate::workloads::TraceError::AbsentKey { op_index, .. }
            | crate::workloads::TraceError::BadDecrease { op_index, .. } => op_index,
        };
        if !matches!(tr.ops[i], Op::DecreaseKey { .. }) {
            return io.fail(EXIT_USAGE, format!("{}{e}", at_line(i)));
        }
    }
    let check = match a.check {
        CheckArg::Off => CheckLevel::Off,
        CheckArg::Fast => CheckLevel::Fast,
        CheckArg::Strict => CheckLevel::Strict,
    };
    let result = Analyzer::for_trace(&tr, variant, check).and_then(|an| an.run(&tr));
    let analysis = match result {
        Ok(x) => x,
        Err(AccountingError::Invariant {
            op_index,
            invariant,
            detail,
        }) => {
            return io.fail(
                EXIT_INVARIANT,
                format!(
                    "{}invariant violated at op_index {op_index}: {invariant}: {detail}",
                    at_line(op_index)
                ),
            )
        }
        Err(e @ AccountingError::DecreaseKeyUnsupported { op_index }) => {
            return io.fail(EXIT_USAGE, format!("{}{e}", at_line(op_index)))
        }
        Err(e) => return io.fail(EXIT_USAGE, e),
    };
    let mut buf = Vec::new();
    let _ = analysis.write_ledger(&mut buf);
    let body = String::from_utf8(buf).expect("ledger is ASCII");
    if let Err(e) = write_file_or(io, a.out.as_deref(), &body) {
        return io.fail(EXIT_USAGE, e);
    }
    if a.out.is_some() {
        let boxes = analysis.records.last().map(|r| r.box_count).unwrap_or(0);
        let _ = writeln!(
            io.out,
            "ops: {}, epochs: {}, rollovers: {}, delete-min cost: {}, boxes at end: {boxes}, check: {}",
            analysis.records.len(),
            analysis.epochs.len(),
            analysis.rollovers(),
            analysis.total_k,
            check.name()
        );
    }
    EXIT_OK
}

/// Per-seed link totals of the three named variants.
#[derive(Clone, Debug, PartialEq)]
pub struct CompareRow {
    pub seed: u64,
    pub ops: usize,
    pub totals: [u64; 3],
}

impl CompareRow {
    pub fn ratio(&self) -> f64 {
        self.totals[0] as f64 / self.totals[1] as f64
    }
}

pub fn compare_rows(w: &WorkloadArgs, seeds: &[u64]) -> Result<Vec<CompareRow>, String> {
    let mut rows = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        let tr = build_workload(w, seed)?;
        let totals = std::thread::scope(|s| {
            let handles: Vec<_> = Variant::ALL
                .iter()
                .map(|&v| {
                    let tr = &tr;
                    s.spawn(move || replay_trace(tr, Strategy::Named(v), seed))
                })
                .collect();
            let mut totals = [0u64; 3];
            for (slot, h) in totals.iter_mut().zip(handles) {
                let outcome = h
                    .join()
                    .expect("replay thread")
                    .map_err(|e| e.to_string())?;
                *slot = outcome.total_links();
            }
            Ok::<_, String>(totals)
        })?;
        rows.push(CompareRow {
            seed,
            ops: tr.ops.len(),
            totals,
        });
    }
    Ok(rows)
}

pub fn compare_markdown(w: &WorkloadArgs, rows: &[CompareRow]) -> String {
    let mut s = String::new();
    let shape = match w.workload {
        WorkloadArg::Sorting => format!("sorting, n = {}, order {:?}", w.n, w.order).to_lowercase(),
        WorkloadArg::Mixed => format!("mixed, {} ops, insert ratio {}", w.ops, w.ratio),
    };
    let _ = writeln!(s, "# Link counts ({shape})\n");
    let _ = writeln!(
        s,
        "| seed | ops | forward | standard | multipass | forward/op | standard/op | multipass/op | forward/standard |"
    );
    let _ = writeln!(s, "|---:|---:|---:|---:|---:|---:|---:|---:|---:|");
    let mut sum = [0u64; 3];
    let mut ops = 0usize;
    for r in rows {
        let per = |x: u64| x as f64 / r.ops.max(1) as f64;
        let _ = writeln!(
            s,
            "| {} | {} | {} | {} | {} | {:.4} | {:.4} | {:.4} | {:.4} |",
            r.seed,
            r.ops,
            r.totals[0],
            r.totals[1],
            r.totals[2],
            per(r.totals[0]),
            per(r.totals[1]),
            per(r.totals[2]),
            r.ratio()
        );
        for (acc, x) in sum.iter_mut().zip(r.totals) {
            *acc += x;
        }
        ops += r.ops;
    }
    if !rows.is_empty() {
        let per = |x: u64| x as f64 / ops.max(1) as f64;
        let _ = writeln!(
            s,
            "| all | {ops} | {} | {} | {} | {:.4} | {:.4} | {:.4} | {:.4} |",
            sum[0],
            sum[1],
            sum[2],
            per(sum[0]),
            per(sum[1]),
            per(sum[2]),
            sum[0] as f64 / sum[1] as f64
        );
    }
    s
}

fn cmd_compare(io: &mut Io<'_>, a: CompareArgs) -> i32 {
    let rows = match compare_rows(&a.workload, &a.seeds) {
        Ok(r) => r,
        Err(e) => return io.fail(EXIT_USAGE, e),
    };
    let report = compare_markdown(&a.workload, &rows);
    if let Err(e) = write_file_or(io, a.out.as_deref(), &report) {
        return io.fail(EXIT_USAGE, e);
    }
    EXIT_OK
}

fn cmd_replay(io: &mut Io<'_>, a: ReplayArgs) -> i32 {
    let (tr, lines) = match read_trace(&a.trace) {
        Ok(t) => t,
        Err(e) => return io.fail(EXIT_USAGE, e),
    };
    let outcome = match replay_trace(&tr, Strategy::from_arg(a.variant, a.policy), a.seed) {
        Ok(o) => o,
        Err(e) => return io.fail(EXIT_USAGE, line_message(&e, &lines)),
    };
    let expected = reference_extract(&tr);
    match outcome
        .extracted
        .iter()
        .zip(&expected)
        .position(|(x, y)| x != y)
    {
        None if outcome.extracted.len() == expected.len() => {
            let _ = writeln!(io.out, "pass: {} delete-mins match", expected.len());
            EXIT_OK
        }
        None => io.fail(
            EXIT_MISMATCH,
            format!(
                "FAIL: {} keys extracted, {} expected",
                outcome.extracted.len(),
                expected.len()
            ),
        ),
        Some(i) => io.fail(
            EXIT_MISMATCH,
            format!(
                "FAIL: delete-min #{i} returned {}, expected {}",
                outcome.extracted[i], expected[i]
            ),
        ),
    }
}

fn cmd_gen(io: &mut Io<'_>, a: GenArgs) -> i32 {
    let tr = match build_workload(&a.workload, a.seed) {
        Ok(t) => t,
        Err(e) => return io.fail(EXIT_USAGE, e),
    };
    if let Err(e) = write_file_or(io, a.out.as_deref(), &tr.to_text()) {
        return io.fail(EXIT_USAGE, e);
    }
    EXIT_OK
}
