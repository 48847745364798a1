//! Seeded operation-trace generators and the line-oriented trace format.
//!
//! ```text
//! # generator=sorting
//! # n=3
//! I 2
//! I 1
//! D
//! K 7 4
//! ```
//!
//! Header lines start with `#` and carry one `key=value` pair. Each remaining
//! line is `I <key>`, `D` or `K <key> <new_key>`.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Op {
    Insert(i64),
    DeleteMin,
    DecreaseKey { key: i64, new_key: i64 },
}

impl Op {
    pub fn code(&self) -> &'static str {
        match self {
            Op::Insert(_) => "I",
            Op::DeleteMin => "D",
            Op::DecreaseKey { .. } => "K",
        }
    }
}

impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Op::Insert(k) => write!(f, "I {k}"),
            Op::DeleteMin => f.write_str("D"),
            Op::DecreaseKey { key, new_key } => write!(f, "K {key} {new_key}"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Trace {
    pub header: Vec<(String, String)>,
    pub ops: Vec<Op>,
}

impl Trace {
    pub fn header_value(&self, key: &str) -> Option<&str> {
        self.header
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn has_decrease_key(&self) -> bool {
        self.ops
            .iter()
            .any(|op| matches!(op, Op::DecreaseKey { .. }))
    }

    /// Keys of all inserts, in trace order.
    pub fn inserted_keys(&self) -> impl Iterator<Item = i64> + '_ {
        self.ops.iter().filter_map(|op| match op {
            Op::Insert(k) => Some(*k),
            _ => None,
        })
    }

    /// True when no insert follows a delete-min.
    pub fn is_sorting_shaped(&self) -> bool {
        let first_delete = self.ops.iter().position(|op| *op == Op::DeleteMin);
        match first_delete {
            None => true,
            Some(i) => self.ops[i..].iter().all(|op| *op == Op::DeleteMin),
        }
    }

    pub fn to_text(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Trace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in &self.header {
            writeln!(f, "# {k}={v}")?;
        }
        for op in &self.ops {
            writeln!(f, "{op}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("line {line}: {message}")]
pub struct TraceParseError {
    pub line: usize,
    pub message: String,
}

/// Parses a trace and returns, for each op, the 1-based line it came from.
pub fn parse_trace_with_lines(text: &str) -> Result<(Trace, Vec<usize>), TraceParseError> {
    let mut trace = Trace::default();
    let mut lines = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let err = |message: String| TraceParseError { line, message };
        let body = raw.trim();
        if body.is_empty() {
            continue;
        }
        if let Some(rest) = body.strip_prefix('#') {
            if !trace.ops.is_empty() {
                return Err(err("header line after the first operation".into()));
            }
            let (k, v) = rest
                .split_once('=')
                .ok_or_else(|| err(format!("header `{body}` is not key=value")))?;
            trace
                .header
                .push((k.trim().to_string(), v.trim().to_string()));
            continue;
        }
        let mut parts = body.split_whitespace();
        let code = parts.next().unwrap_or_default();
        let mut int = |what: &str| -> Result<i64, TraceParseError> {
            let tok = parts
                .next()
                .ok_or_else(|| err(format!("missing {what} in `{body}`")))?;
            tok.parse()
                .map_err(|_| err(format!("bad {what} `{tok}` in `{body}`")))
        };
        let op = match code {
            "I" => Op::Insert(int("key")?),
            "D" => Op::DeleteMin,
            "K" => {
                let key = int("key")?;
                let new_key = int("new key")?;
                Op::DecreaseKey { key, new_key }
            }
            _ => return Err(err(format!("unknown operation `{body}`"))),
        };
        if parts.next().is_some() {
            return Err(err(format!("trailing tokens in `{body}`")));
        }
        trace.ops.push(op);
        lines.push(line);
    }
    Ok((trace, lines))
}

pub fn parse_trace(text: &str) -> Result<Trace, TraceParseError> {
    parse_trace_with_lines(text).map(|(t, _)| t)
}

pub fn write_trace<W: std::io::Write>(tr: &Trace, sink: &mut W) -> std::io::Result<()> {
    sink.write_all(tr.to_text().as_bytes())
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TraceError {
    #[error("op {op_index}: delete-min on an empty heap")]
    EmptyDelete { op_index: usize },
    #[error("op {op_index}: key {key} inserted twice")]
    DuplicateInsert { op_index: usize, key: i64 },
    #[error("op {op_index}: decrease-key targets absent key {key}")]
    AbsentKey { op_index: usize, key: i64 },
    #[error("op {op_index}: decrease-key {key} -> {new_key} is not a decrease to a fresh key")]
    BadDecrease {
        op_index: usize,
        key: i64,
        new_key: i64,
    },
}

/// Checks a trace for replayability without building a heap.
pub fn validate_trace(tr: &Trace) -> Result<(), TraceError> {
    let mut live = std::collections::BTreeSet::new();
    let mut seen = HashSet::new();
    for (op_index, op) in tr.ops.iter().enumerate() {
        match *op {
            Op::Insert(key) => {
                if !seen.insert(key) || !live.insert(key) {
                    return Err(TraceError::DuplicateInsert { op_index, key });
                }
            }
            Op::DeleteMin => {
                if live.pop_first().is_none() {
                    return Err(TraceError::EmptyDelete { op_index });
                }
            }
            Op::DecreaseKey { key, new_key } => {
                if !live.contains(&key) {
                    return Err(TraceError::AbsentKey { op_index, key });
                }
                if new_key >= key || !seen.insert(new_key) {
                    return Err(TraceError::BadDecrease {
                        op_index,
                        key,
                        new_key,
                    });
                }
                live.remove(&key);
                live.insert(new_key);
            }
        }
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KeyOrder {
    Random,
    Sorted,
    Reverse,
}

impl KeyOrder {
    pub fn name(self) -> &'static str {
        match self {
            KeyOrder::Random => "random",
            KeyOrder::Sorted => "sorted",
            KeyOrder::Reverse => "reverse",
        }
    }
}

impl FromStr for KeyOrder {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "random" => Ok(KeyOrder::Random),
            "sorted" => Ok(KeyOrder::Sorted),
            "reverse" => Ok(KeyOrder::Reverse),
            other => Err(format!("unknown key order `{other}`")),
        }
    }
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `n` inserts of the keys `1..=n` in the given order, then `n` delete-mins.
pub fn gen_sorting(n: usize, seed: u64, order: KeyOrder) -> Trace {
    assert!(n >= 1, "sorting workload needs n >= 1");
    let mut keys: Vec<i64> = (1..=n as i64).collect();
    match order {
        KeyOrder::Sorted => {}
        KeyOrder::Reverse => keys.reverse(),
        KeyOrder::Random => keys.shuffle(&mut rng_from_seed(seed)),
    }
    let mut ops: Vec<Op> = keys.into_iter().map(Op::Insert).collect();
    ops.extend(std::iter::repeat_n(Op::DeleteMin, n));
    Trace {
        header: vec![
            ("generator".into(), "sorting".into()),
            ("n".into(), n.to_string()),
            ("order".into(), order.name().into()),
            ("seed".into(), seed.to_string()),
        ],
        ops,
    }
}

/// `m` operations, each an insert with probability `insert_ratio` and a
/// delete-min otherwise; an empty heap always gets an insert. Keys come from
/// a seeded shuffle of `1..=m`.
pub fn gen_mixed(m: usize, insert_ratio: f64, seed: u64) -> Trace {
    assert!(
        insert_ratio > 0.0 && insert_ratio < 1.0,
        "insert ratio must lie strictly between 0 and 1"
    );
    let mut rng = rng_from_seed(seed);
    let mut pool: Vec<i64> = (1..=m as i64).collect();
    pool.shuffle(&mut rng);
    let mut pool = pool.into_iter();
    let mut size = 0usize;
    let mut ops = Vec::with_capacity(m);
    for _ in 0..m {
        let insert = size == 0 || rng.gen_bool(insert_ratio);
        if insert {
            ops.push(Op::Insert(pool.next().expect("at most m inserts")));
            size += 1;
        } else {
            ops.push(Op::DeleteMin);
            size -= 1;
        }
    }
    Trace {
        header: vec![
            ("generator".into(), "mixed".into()),
            ("m".into(), m.to_string()),
            ("ratio".into(), insert_ratio.to_string()),
            ("seed".into(), seed.to_string()),
        ],
        ops,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sorted_and_reverse_shapes() {
        let t = gen_sorting(3, 0, KeyOrder::Sorted);
        let body: Vec<String> = t.ops.iter().map(|o| o.to_string()).collect();
        assert_eq!(body, ["I 1", "I 2", "I 3", "D", "D", "D"]);
        let t = gen_sorting(3, 0, KeyOrder::Reverse);
        let body: Vec<String> = t.ops.iter().map(|o| o.to_string()).collect();
        assert_eq!(body, ["I 3", "I 2", "I 1", "D", "D", "D"]);
        assert!(t.is_sorting_shaped());
    }

    #[test]
    fn generators_are_deterministic() {
        let a = gen_sorting(500, 42, KeyOrder::Random).to_text();
        let b = gen_sorting(500, 42, KeyOrder::Random).to_text();
        assert_eq!(a, b);
        assert_ne!(a, gen_sorting(500, 43, KeyOrder::Random).to_text());
        assert_eq!(gen_mixed(1000, 0.5, 9), gen_mixed(1000, 0.5, 9));
    }

    #[test]
    fn mixed_traces_are_valid() {
        let t = gen_mixed(100, 0.99, 1);
        assert_eq!(t.ops.len(), 100);
        validate_trace(&t).unwrap();
        for seed in 0..50 {
            validate_trace(&gen_mixed(2000, 0.3, seed)).unwrap();
        }
    }

    #[test]
    fn parse_errors_cite_lines() {
        let e = parse_trace("# a=b\nI 3\nX 3\n").unwrap_err();
        assert_eq!(e.line, 3);
        assert!(parse_trace("I\n").is_err());
        assert!(parse_trace("D 4\n").is_err());
        assert!(parse_trace("I 1\n# late=1\n").is_err());
        assert!(parse_trace("# nokey\n").is_err());
    }

    #[test]
    fn header_and_lines_preserved() {
        let text = "# generator=hand\n# note=two words\nI 5\n\nD\nK 9 2\n";
        let (t, lines) = parse_trace_with_lines(text).unwrap();
        assert_eq!(t.header_value("note"), Some("two words"));
        assert_eq!(lines, vec![3, 5, 6]);
        assert_eq!(t.ops[2], Op::DecreaseKey { key: 9, new_key: 2 });
        assert_eq!(
            t.to_text(),
            "# generator=hand\n# note=two words\nI 5\nD\nK 9 2\n"
        );
    }

    #[test]
    fn validation_catches_bad_traces() {
        let t = parse_trace("I 1\nD\nD\n").unwrap();
        assert_eq!(
            validate_trace(&t),
            Err(TraceError::EmptyDelete { op_index: 2 })
        );
        let t = parse_trace("I 1\nI 1\n").unwrap();
        assert!(matches!(
            validate_trace(&t),
            Err(TraceError::DuplicateInsert { .. })
        ));
        let t = parse_trace("I 4\nK 4 5\n").unwrap();
        assert!(matches!(
            validate_trace(&t),
            Err(TraceError::BadDecrease { .. })
        ));
    }
}
