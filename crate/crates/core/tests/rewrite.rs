//! Normalisation checked against a term rewriter that only applies the
//! equational laws, never the set operations on linkages.

use std::collections::BTreeSet;

use linkdyn_core::dla::term::normalize_text;
use linkdyn_core::{AtomicLink, DataLinkage, DlaTerm, LinkKey, Universe};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

/// Basic terms as the list of their links, in rewrite order.
type Basic = Vec<AtomicLink>;

fn same_key(l: &AtomicLink, r: &AtomicLink) -> bool {
    let k = |x: &AtomicLink| match *x {
        AtomicLink::Spot(s, _) => LinkKey::Spot(s),
        AtomicLink::PartialField(a, f) | AtomicLink::Field(a, f, _) => LinkKey::Field(a, f),
        AtomicLink::Value(a, _) => LinkKey::Value(a),
    };
    k(l) == k(r)
}

/// `X (>) r` for basic `X`: peel links off the right of `X` using
/// `(X (+) l) (>) r = X (>) r` (same key) or `= (X (>) r) (+) l`, and end
/// with `empty (>) r = r`.
fn override_link(x: &[AtomicLink], r: AtomicLink) -> Basic {
    match x.split_last() {
        None => vec![r],
        Some((l, rest)) => {
            let mut out = override_link(rest, r);
            if !same_key(l, &r) {
                out.push(*l);
            }
            out
        }
    }
}

fn rewrite(t: &DlaTerm) -> Basic {
    match t {
        DlaTerm::Empty => vec![],
        DlaTerm::Link(l) => vec![*l],
        DlaTerm::Combine(l, r) => {
            let mut out = rewrite(l);
            out.extend(rewrite(r));
            out
        }
        DlaTerm::Override(l, r) => {
            let x = rewrite(l);
            let y = rewrite(r);
            if y.is_empty() {
                // X (>) empty = X
                return x;
            }
            // X (>) (Y (+) Z) = (X (>) Y) (+) (X (>) Z), down to single links
            y.iter().flat_map(|&r| override_link(&x, r)).collect()
        }
    }
}

/// Combine is associative, commutative and idempotent, so a basic term
/// denotes the set of its links.
fn denote(b: Basic) -> BTreeSet<AtomicLink> {
    b.into_iter().collect()
}

fn universe() -> Universe {
    Universe::new(["s", "t", "r"], ["f", "g"], ["a", "b", "c"], ["n", "m"]).unwrap()
}

fn random_term(u: &Universe, depth: usize, rng: &mut StdRng) -> DlaTerm {
    if depth == 0 || rng.gen_bool(0.25) {
        return if rng.gen_bool(0.15) {
            DlaTerm::Empty
        } else {
            DlaTerm::Link(linkdyn_core::dla::laws::random_link(u, rng))
        };
    }
    let l = random_term(u, depth - 1, rng);
    let r = random_term(u, depth - 1, rng);
    if rng.gen_bool(0.5) {
        DlaTerm::combine(l, r)
    } else {
        DlaTerm::override_(l, r)
    }
}

#[test]
fn rewriting_agrees_with_normalisation() {
    let u = universe();
    let mut rng = StdRng::seed_from_u64(11);
    for _ in 0..5000 {
        let t = random_term(&u, 6, &mut rng);
        let want = denote(rewrite(&t));
        let got: BTreeSet<AtomicLink> = t.normalize().iter().copied().collect();
        assert_eq!(got, want, "term {}", t.display(&u));
    }
}

#[test]
fn documented_examples() {
    let u = universe();
    let cases = [
        (
            "(s = a) (>) ((s = b) (+) (t = c))",
            "s = a (+) s = b (+) t = c",
        ),
        ("((s = a) (+) (a.f = b)) (>) (a.f)", "s = a (+) a.f"),
        ("((s=a) (+) (s=b)) (>) (s=c)", "s = c"),
        ("empty (>) (a : n)", "a : n"),
        ("(a.f = b (+) a.g) (>) (a.f = c)", "a.f = c (+) a.g"),
    ];
    for (text, expected) in cases {
        let t = DlaTerm::parse(text, &u).unwrap();
        let want = denote(rewrite(&DlaTerm::parse(expected, &u).unwrap()));
        assert_eq!(denote(rewrite(&t)), want, "{text}");
        let got: DataLinkage = normalize_text(text, &u).unwrap();
        assert_eq!(got.iter().copied().collect::<BTreeSet<_>>(), want, "{text}");
    }
}
