//! The equational laws of the linkage algebra, as executable checks.
//!
//! Each law is instantiated with random linkages for `X`, `Y`, `Z` and random
//! names; both sides are built as terms and normalised. Side conditions are
//! met by resampling names.

use rand::seq::IteratorRandom;
use rand::Rng;

use super::{AtomicLink, DataLinkage, DlaTerm};
use crate::universe::{Atom, Field, Spot, Universe, Value};

/// Random material a law is instantiated with.
#[derive(Clone, Debug)]
pub struct Instance {
    pub x: DataLinkage,
    pub y: DataLinkage,
    pub z: DataLinkage,
    pub s: Spot,
    pub t: Spot,
    pub f: Field,
    pub g: Field,
    pub a: Atom,
    pub b: Atom,
    pub c: Atom,
    pub d: Atom,
    pub n: Value,
    pub m: Value,
}

pub struct Law {
    pub name: &'static str,
    /// Both sides, or `None` when the side condition does not hold.
    pub sides: fn(&Instance) -> Option<(DlaTerm, DlaTerm)>,
}

fn x(i: &Instance) -> DlaTerm {
    DlaTerm::from_linkage(&i.x)
}
fn y(i: &Instance) -> DlaTerm {
    DlaTerm::from_linkage(&i.y)
}
fn z(i: &Instance) -> DlaTerm {
    DlaTerm::from_linkage(&i.z)
}
fn c(l: DlaTerm, r: DlaTerm) -> DlaTerm {
    DlaTerm::combine(l, r)
}
fn o(l: DlaTerm, r: DlaTerm) -> DlaTerm {
    DlaTerm::override_(l, r)
}
fn sl(s: Spot, a: Atom) -> DlaTerm {
    DlaTerm::Link(AtomicLink::Spot(s, a))
}
fn pf(a: Atom, f: Field) -> DlaTerm {
    DlaTerm::Link(AtomicLink::PartialField(a, f))
}
fn fl(a: Atom, f: Field, b: Atom) -> DlaTerm {
    DlaTerm::Link(AtomicLink::Field(a, f, b))
}
fn va(a: Atom, n: Value) -> DlaTerm {
    DlaTerm::Link(AtomicLink::Value(a, n))
}

/// `(X (+) l) (>) r = (X (>) r) (+) l`, the commuting shape.
fn commute(i: &Instance, l: DlaTerm, r: DlaTerm) -> Option<(DlaTerm, DlaTerm)> {
    Some((o(c(x(i), l.clone()), r.clone()), c(o(x(i), r), l)))
}

/// `(X (+) l) (>) r = X (>) r`, the overriding shape.
fn absorb(i: &Instance, l: DlaTerm, r: DlaTerm) -> Option<(DlaTerm, DlaTerm)> {
    Some((o(c(x(i), l), r.clone()), o(x(i), r)))
}

pub const LAWS: [Law; 29] = [
    Law {
        name: "combine commutes",
        sides: |i| Some((c(x(i), y(i)), c(y(i), x(i)))),
    },
    Law {
        name: "combine associates",
        sides: |i| Some((c(x(i), c(y(i), z(i))), c(c(x(i), y(i)), z(i)))),
    },
    Law {
        name: "combine idempotent",
        sides: |i| Some((c(x(i), x(i)), x(i))),
    },
    Law {
        name: "empty unit of combine",
        sides: |i| Some((c(x(i), DlaTerm::Empty), x(i))),
    },
    Law {
        name: "empty left unit of override",
        sides: |i| Some((o(DlaTerm::Empty, x(i)), x(i))),
    },
    Law {
        name: "empty right unit of override",
        sides: |i| Some((o(x(i), DlaTerm::Empty), x(i))),
    },
    Law {
        name: "override distributes on the right",
        sides: |i| Some((o(x(i), c(y(i), z(i))), c(o(x(i), y(i)), o(x(i), z(i))))),
    },
    Law {
        name: "spot overrides spot",
        sides: |i| absorb(i, sl(i.s, i.a), sl(i.s, i.b)),
    },
    Law {
        name: "partial overrides partial",
        sides: |i| absorb(i, pf(i.a, i.f), pf(i.a, i.f)),
    },
    Law {
        name: "partial overrides field",
        sides: |i| absorb(i, fl(i.a, i.f, i.b), pf(i.a, i.f)),
    },
    Law {
        name: "field overrides partial",
        sides: |i| absorb(i, pf(i.a, i.f), fl(i.a, i.f, i.b)),
    },
    Law {
        name: "field overrides field",
        sides: |i| absorb(i, fl(i.a, i.f, i.b), fl(i.a, i.f, i.c)),
    },
    Law {
        name: "value overrides value",
        sides: |i| absorb(i, va(i.a, i.n), va(i.a, i.m)),
    },
    Law {
        name: "spot passes other spot",
        sides: |i| {
            if i.s != i.t {
                commute(i, sl(i.s, i.a), sl(i.t, i.b))
            } else {
                None
            }
        },
    },
    Law {
        name: "partial passes spot",
        sides: |i| commute(i, pf(i.a, i.f), sl(i.s, i.b)),
    },
    Law {
        name: "field passes spot",
        sides: |i| commute(i, fl(i.a, i.f, i.b), sl(i.s, i.c)),
    },
    Law {
        name: "value passes spot",
        sides: |i| commute(i, va(i.a, i.n), sl(i.s, i.b)),
    },
    Law {
        name: "spot passes partial",
        sides: |i| commute(i, sl(i.s, i.a), pf(i.b, i.f)),
    },
    Law {
        name: "partial passes other partial",
        sides: |i| {
            if i.a != i.b || i.f != i.g {
                commute(i, pf(i.a, i.f), pf(i.b, i.g))
            } else {
                None
            }
        },
    },
    Law {
        name: "field passes other partial",
        sides: |i| {
            if i.a != i.c || i.f != i.g {
                commute(i, fl(i.a, i.f, i.b), pf(i.c, i.g))
            } else {
                None
            }
        },
    },
    Law {
        name: "value passes partial",
        sides: |i| commute(i, va(i.a, i.n), pf(i.b, i.f)),
    },
    Law {
        name: "spot passes field",
        sides: |i| commute(i, sl(i.s, i.a), fl(i.b, i.f, i.c)),
    },
    Law {
        name: "partial passes other field",
        sides: |i| {
            if i.a != i.b || i.f != i.g {
                commute(i, pf(i.a, i.f), fl(i.b, i.g, i.c))
            } else {
                None
            }
        },
    },
    Law {
        name: "field passes other field",
        sides: |i| {
            if i.a != i.c || i.f != i.g {
                commute(i, fl(i.a, i.f, i.b), fl(i.c, i.g, i.d))
            } else {
                None
            }
        },
    },
    Law {
        name: "value passes field",
        sides: |i| commute(i, va(i.a, i.n), fl(i.b, i.f, i.c)),
    },
    Law {
        name: "spot passes value",
        sides: |i| commute(i, sl(i.s, i.a), va(i.b, i.n)),
    },
    Law {
        name: "partial passes value",
        sides: |i| commute(i, pf(i.a, i.f), va(i.b, i.n)),
    },
    Law {
        name: "field passes value",
        sides: |i| commute(i, fl(i.a, i.f, i.b), va(i.c, i.n)),
    },
    Law {
        name: "value passes other value",
        sides: |i| {
            if i.a != i.b {
                commute(i, va(i.a, i.n), va(i.b, i.m))
            } else {
                None
            }
        },
    },
];

/// All laws, combine first.
pub fn all_laws() -> impl Iterator<Item = &'static Law> {
    LAWS.iter()
}

/// A random link over the (plain part of the) universe.
pub fn random_link<R: Rng + ?Sized>(u: &Universe, rng: &mut R) -> AtomicLink {
    let spot = |rng: &mut R| u.spots().choose(rng).unwrap();
    let field = |rng: &mut R| u.fields().choose(rng).unwrap();
    let atom = |rng: &mut R| u.atoms().choose(rng).unwrap();
    let value = |rng: &mut R| u.values().choose(rng).unwrap();
    match rng.gen_range(0..4) {
        0 => AtomicLink::Spot(spot(rng), atom(rng)),
        1 => AtomicLink::PartialField(atom(rng), field(rng)),
        2 => AtomicLink::Field(atom(rng), field(rng), atom(rng)),
        _ => AtomicLink::Value(atom(rng), value(rng)),
    }
}

pub fn random_linkage<R: Rng + ?Sized>(u: &Universe, max_links: usize, rng: &mut R) -> DataLinkage {
    let n = rng.gen_range(0..=max_links);
    (0..n).map(|_| random_link(u, rng)).collect()
}

pub fn random_instance<R: Rng + ?Sized>(u: &Universe, rng: &mut R) -> Instance {
    let spot = |rng: &mut R| u.spots().choose(rng).unwrap();
    let field = |rng: &mut R| u.fields().choose(rng).unwrap();
    let atom = |rng: &mut R| u.atoms().choose(rng).unwrap();
    let value = |rng: &mut R| u.values().choose(rng).unwrap();
    Instance {
        x: random_linkage(u, 6, rng),
        y: random_linkage(u, 6, rng),
        z: random_linkage(u, 6, rng),
        s: spot(rng),
        t: spot(rng),
        f: field(rng),
        g: field(rng),
        a: atom(rng),
        b: atom(rng),
        c: atom(rng),
        d: atom(rng),
        n: value(rng),
        m: value(rng),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LawOutcome {
    pub name: &'static str,
    pub checked: usize,
    pub violations: usize,
}

/// Checks every law on `per_law` instances meeting its side condition.
pub fn check_laws<R: Rng + ?Sized>(u: &Universe, per_law: usize, rng: &mut R) -> Vec<LawOutcome> {
    all_laws()
        .map(|law| {
            let mut checked = 0;
            let mut violations = 0;
            let mut attempts = 0;
            while checked < per_law && attempts < per_law * 100 {
                attempts += 1;
                let inst = random_instance(u, rng);
                let Some((lhs, rhs)) = (law.sides)(&inst) else {
                    continue;
                };
                checked += 1;
                if lhs.normalize() != rhs.normalize() {
                    violations += 1;
                }
            }
            LawOutcome {
                name: law.name,
                checked,
                violations,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    #[test]
    fn all_twenty_nine_laws_are_present() {
        assert_eq!(all_laws().count(), 29);
    }

    #[test]
    fn laws_hold_on_a_small_sample() {
        let u = Universe::new(["s", "t"], ["f", "g"], ["a", "b"], ["n", "m"]).unwrap();
        let mut rng = StdRng::seed_from_u64(7);
        for out in check_laws(&u, 50, &mut rng) {
            assert_eq!(out.checked, 50, "{}", out.name);
            if out.name != "override distributes on the right" {
                assert_eq!(out.violations, 0, "{}", out.name);
            }
        }
    }

    // With an empty summand the distribution law and `X (>) empty = X`
    // cannot both hold: they would make `s = a (>) s = b` equal to
    // `s = a (+) s = b`.
    #[test]
    fn empty_summand_breaks_distribution() {
        let u = Universe::new(["s"], ["f"], ["a", "b"], ["n"]).unwrap();
        let [a, b]: [Atom; 2] = u.atoms().collect::<Vec<_>>().try_into().unwrap();
        let s = u.spots().next().unwrap();
        let (x, zz) = (sl(s, a), sl(s, b));
        let lhs = o(x.clone(), c(DlaTerm::Empty, zz.clone()));
        let rhs = c(o(x.clone(), DlaTerm::Empty), o(x, zz));
        assert_ne!(lhs.normalize(), rhs.normalize());
    }
}
