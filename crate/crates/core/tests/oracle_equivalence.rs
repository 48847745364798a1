use pairing_lab::oracle::{permutations, simulate_step, Tree};
use pairing_lab::{ArbitraryPolicy, BinaryView, Heap, Variant};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Production heap whose root (key 0) has `children` as its subtrees.
fn heap_of(children: &[Tree]) -> Heap {
    let text = Tree::node(0, children.to_vec()).to_text();
    Heap::from_view(&BinaryView::parse(&text).unwrap()).unwrap()
}

fn production_after(children: &[Tree], v: Variant) -> String {
    let mut h = heap_of(children);
    h.delete_min(v).unwrap();
    h.to_binary_view().to_string()
}

fn oracle_after(children: &[Tree], v: Variant) -> String {
    simulate_step(children.to_vec(), v)
        .map(|t| t.to_text())
        .unwrap_or_else(|| "()".into())
}

/// Random forest over distinct keys drawn from `next`, heap-ordered.
fn random_subtree(rng: &mut ChaCha8Rng, next: &mut i64, depth: u32) -> Tree {
    *next += 1 + rng.gen_range(0..3);
    let key = *next;
    let kids = if depth == 0 { 0 } else { rng.gen_range(0..3) };
    let children = (0..kids)
        .map(|_| random_subtree(rng, next, depth - 1))
        .collect();
    Tree::node(key, children)
}

#[test]
fn small_permutations_match_oracle() {
    for k in 0..=6 {
        let keys: Vec<i64> = (1..=k).collect();
        for perm in permutations(&keys) {
            let kids: Vec<Tree> = perm.iter().map(|&x| Tree::leaf(x)).collect();
            for v in Variant::ALL {
                assert_eq!(
                    production_after(&kids, v),
                    oracle_after(&kids, v),
                    "{v} on {perm:?}"
                );
            }
        }
    }
}

#[test]
fn children_with_subtrees_match_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..2000 {
        let k = rng.gen_range(1..=12);
        let mut next = 0;
        let mut kids: Vec<Tree> = (0..k)
            .map(|_| random_subtree(&mut rng, &mut next, 2))
            .collect();
        // Shuffle root order while keeping each subtree heap-ordered.
        for i in (1..kids.len()).rev() {
            kids.swap(i, rng.gen_range(0..=i));
        }
        for v in Variant::ALL {
            assert_eq!(production_after(&kids, v), oracle_after(&kids, v), "{v}");
        }
    }
}

#[test]
fn arbitrary_policies_reproduce_named_variants() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..500 {
        let k = rng.gen_range(1..=12usize);
        let mut keys: Vec<i64> = (1..=k as i64).collect();
        for i in (1..keys.len()).rev() {
            keys.swap(i, rng.gen_range(0..=i));
        }
        let kids: Vec<Tree> = keys.iter().map(|&x| Tree::leaf(x)).collect();
        for (policy, v) in [
            (ArbitraryPolicy::forward(k), Variant::Forward),
            (ArbitraryPolicy::standard(k), Variant::Standard),
        ] {
            let mut h = heap_of(&kids);
            h.delete_min_arbitrary(&policy).unwrap();
            assert_eq!(h.to_binary_view().to_string(), oracle_after(&kids, v));
        }
    }
}
