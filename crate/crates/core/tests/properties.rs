use std::collections::BTreeSet;

use pairing_lab::accounting::{Analyzer, CheckLevel};
use pairing_lab::oracle::{brute_rank, reference_extract};
use pairing_lab::potential::{phi_n, phi_node, AnalysisParams, RankTable, Rational};
use pairing_lab::workloads::{parse_trace, Op, Trace};
use pairing_lab::{meld, ArbitraryPolicy, BinaryView, Heap, Variant};
use proptest::prelude::*;
use rand::SeedableRng;

#[derive(Clone, Debug)]
enum Step {
    Insert(i64),
    Delete,
    Decrease(usize, i64),
}

fn steps() -> impl Strategy<Value = Vec<Step>> {
    prop::collection::vec(
        prop_oneof![
            4 => (0i64..10_000).prop_map(Step::Insert),
            3 => Just(Step::Delete),
            1 => (any::<usize>(), 1i64..500).prop_map(|(i, d)| Step::Decrease(i, d)),
        ],
        0..300,
    )
}

/// Turns raw steps into a valid trace: duplicate inserts and empty deletes
/// are dropped, decrease-keys pick a live key and a fresh smaller key.
fn to_trace(raw: &[Step]) -> Trace {
    let mut live = BTreeSet::new();
    let mut seen = BTreeSet::new();
    let mut ops = Vec::new();
    for s in raw {
        match *s {
            Step::Insert(k) => {
                if seen.insert(k) {
                    live.insert(k);
                    ops.push(Op::Insert(k));
                }
            }
            Step::Delete => {
                if live.pop_first().is_some() {
                    ops.push(Op::DeleteMin);
                }
            }
            Step::Decrease(i, d) => {
                if live.is_empty() {
                    continue;
                }
                let key = *live.iter().nth(i % live.len()).unwrap();
                let new_key = key - d;
                if seen.insert(new_key) {
                    live.remove(&key);
                    live.insert(new_key);
                    ops.push(Op::DecreaseKey { key, new_key });
                }
            }
        }
    }
    Trace {
        header: vec![("generator".into(), "proptest".into())],
        ops,
    }
}

fn play(tr: &Trace, mut delete: impl FnMut(&mut Heap) -> i64) -> Vec<i64> {
    let mut h = Heap::new();
    let mut out = Vec::new();
    for op in &tr.ops {
        match *op {
            Op::Insert(k) => {
                h.insert(k).unwrap();
            }
            Op::DeleteMin => out.push(delete(&mut h)),
            Op::DecreaseKey { key, new_key } => h.decrease_key_by_key(key, new_key).unwrap(),
        }
        h.validate_heap_order().unwrap();
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn named_variants_extract_in_order(raw in steps()) {
        let tr = to_trace(&raw);
        let expected = reference_extract(&tr);
        for v in Variant::ALL {
            let got = play(&tr, |h| h.delete_min(v).unwrap().0);
            prop_assert_eq!(&got, &expected, "{}", v);
        }
    }

    #[test]
    fn random_arbitrary_policy_extracts_in_order(raw in steps(), seed in any::<u64>()) {
        let tr = to_trace(&raw);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let got = play(&tr, |h| {
            let k = h.children(h.root().unwrap()).unwrap().len();
            let p = ArbitraryPolicy::random(k, &mut rng);
            h.delete_min_arbitrary(&p).unwrap().0
        });
        prop_assert_eq!(got, reference_extract(&tr));
    }

    #[test]
    fn trace_text_round_trips(raw in steps()) {
        let tr = to_trace(&raw);
        let text = tr.to_text();
        let back = parse_trace(&text).unwrap();
        prop_assert_eq!(&back, &tr);
        prop_assert_eq!(back.to_text(), text);
    }

    #[test]
    fn binary_view_round_trips(keys in prop::collection::btree_set(-1000i64..1000, 1..60), dels in 0usize..20) {
        let mut h = Heap::new();
        for &k in &keys {
            h.insert(k).unwrap();
        }
        for _ in 0..dels.min(keys.len() - 1) {
            h.delete_min(Variant::Forward).unwrap();
        }
        let view = h.to_binary_view();
        let text = view.to_string();
        let parsed = BinaryView::parse(&text).unwrap();
        prop_assert_eq!(&parsed, &view);
        let rebuilt = Heap::from_view(&parsed).unwrap();
        prop_assert_eq!(rebuilt.to_binary_view().to_string(), text);
    }

    #[test]
    fn meld_keeps_every_key(a in prop::collection::btree_set(0i64..500, 0..40),
                            b in prop::collection::btree_set(500i64..1000, 0..40)) {
        let mut ha = Heap::new();
        let mut hb = Heap::new();
        for &k in &a { ha.insert(k).unwrap(); }
        for &k in &b { hb.insert(k).unwrap(); }
        let mut m = meld(ha, hb).unwrap();
        m.validate_heap_order().unwrap();
        let mut out = Vec::new();
        while !m.is_empty() {
            out.push(m.delete_min(Variant::Standard).unwrap().0);
        }
        let want: Vec<i64> = a.iter().chain(b.iter()).copied().collect();
        prop_assert_eq!(out, want);
    }

    #[test]
    fn rank_table_matches_brute_force(keys in prop::collection::btree_set(-10_000i64..10_000, 1..200)) {
        let universe: Vec<i64> = keys.iter().copied().collect();
        let rt = RankTable::build(universe.iter().rev().copied()).unwrap();
        for &x in &universe {
            prop_assert_eq!(rt.rank(x), Some(brute_rank(&universe, x)));
        }
    }

    #[test]
    fn scaled_potential_matches_rational(n in 4u64..100_000, frac in 0.0f64..1.0) {
        let p = AnalysisParams::derive(n).unwrap();
        let rd = 1 + ((n - 2) as f64 * frac) as u64;
        let scaled = Rational::new(p.phi_scaled(rd), p.phi_denominator());
        prop_assert_eq!(scaled, phi_node(rd, &p));
    }

    #[test]
    fn strict_replay_of_insert_delete_traces(raw in steps(), standard in any::<bool>()) {
        let mut tr = to_trace(&raw);
        tr.ops.retain(|op| !matches!(op, Op::DecreaseKey { .. }));
        // Dropping decrease-keys can orphan a later delete; rebuild validity.
        let mut size = 0usize;
        tr.ops.retain(|op| match op {
            Op::Insert(_) => { size += 1; true }
            _ if size > 0 => { size -= 1; true }
            _ => false,
        });
        let v = if standard { Variant::Standard } else { Variant::Forward };
        let analysis = Analyzer::for_trace(&tr, v, CheckLevel::Strict).unwrap().run(&tr).unwrap();
        prop_assert_eq!(analysis.records.len(), tr.ops.len());
    }

    #[test]
    fn meld_ledger_matches_recomputation(a in prop::collection::btree_set(0i64..300, 0..30),
                                         b in prop::collection::btree_set(300i64..600, 0..30),
                                         dels in 0usize..10) {
        let mut an = Analyzer::frozen(0..600, Variant::Forward, CheckLevel::Strict).unwrap();
        for &k in &a { an.insert(k).unwrap(); }
        for _ in 0..dels.min(a.len()) { an.delete_min().unwrap(); }
        let mut other = Heap::new();
        for &k in &b { other.insert(k).unwrap(); }
        an.meld(other).unwrap();
        let rt = an.epoch().rank_table.clone();
        prop_assert_eq!(phi_n(an.heap(), &rt, &an.params()).unwrap(), an.phi_node_total());
    }
}
