//! A second, deliberately naive implementation of the shedding criterion,
//! kept apart from the main engine so the two can be compared.
//!
//! It shares nothing with the engine beyond the input types: states are
//! stored per spot and per field group, effects are recomputed here, and
//! threads are identified through a greatest-fixpoint bisimulation relation
//! rather than refined classes. The search looks for a counterexample: a
//! path on which a mimicked primary shedding error comes first.

use std::collections::{BTreeMap, BTreeSet};

use crate::dla::{AtomicLink, DataLinkage};
use crate::dld::DldAction;
use crate::error::{Error, Result};
use crate::thread::{Node, NodeId, ThreadAction, ThreadGraph, DLD_FOCUS};
use crate::universe::{Atom, Universe};

// atom codes: the two special atoms first, then the ordinary ones in order
const PSO: u16 = 0;
const SSO: u16 = 1;

fn code(a: Atom) -> u16 {
    match a {
        Atom::Pso => PSO,
        Atom::Sso => SSO,
        Atom::Obj(i) => i + 2,
    }
}

fn ordinary(c: u16) -> bool {
    c > SSO
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct World {
    /// Targets per spot, sorted.
    spots: Vec<Vec<u16>>,
    /// Field groups keyed by (carrier, field); `None` is a partial field.
    groups: BTreeMap<(u16, u16), BTreeSet<Option<u16>>>,
    values: BTreeSet<(u16, u16)>,
}

enum Content {
    Nothing,
    One(u16),
    Many,
}

impl World {
    fn from_linkage(l: &DataLinkage, spot_count: usize) -> World {
        let mut w = World {
            spots: vec![Vec::new(); spot_count],
            groups: BTreeMap::new(),
            values: BTreeSet::new(),
        };
        for link in l.iter() {
            match *link {
                AtomicLink::Spot(s, a) => w.spots[s.0 as usize].push(code(a)),
                AtomicLink::PartialField(a, f) => {
                    w.groups.entry((code(a), f.0)).or_default().insert(None);
                }
                AtomicLink::Field(a, f, b) => {
                    w.groups
                        .entry((code(a), f.0))
                        .or_default()
                        .insert(Some(code(b)));
                }
                AtomicLink::Value(a, n) => {
                    w.values.insert((code(a), n.0));
                }
            }
        }
        for targets in &mut w.spots {
            targets.sort_unstable();
            targets.dedup();
        }
        w
    }

    fn spot(&self, s: u16) -> Content {
        match self.spots[s as usize].as_slice() {
            [] => Content::Nothing,
            [a] => Content::One(*a),
            _ => Content::Many,
        }
    }

    fn group(&self, a: u16, f: u16) -> Option<&BTreeSet<Option<u16>>> {
        self.groups.get(&(a, f)).filter(|g| !g.is_empty())
    }

    fn occurs(&self, c: u16) -> bool {
        self.spots.iter().any(|t| t.contains(&c))
            || self
                .groups
                .iter()
                .any(|(&(a, _), g)| !g.is_empty() && (a == c || g.contains(&Some(c))))
            || self.values.iter().any(|&(a, _)| a == c)
    }

    fn has_ordinary(&self, s: u16) -> bool {
        self.spots[s as usize].iter().any(|&a| ordinary(a))
    }

    fn has(&self, s: u16, c: u16) -> bool {
        self.spots[s as usize].contains(&c)
    }
}

/// Performs `a` with every content change replaced by a write of `write`
/// when it is given. Returns the reply.
fn perform(w: &mut World, a: &DldAction, write: Option<u16>, atoms: u16) -> bool {
    use DldAction::*;
    let field_write = |w: &mut World, obj: u16, f: u16, target: Option<Option<u16>>| -> bool {
        // target: None means the source spot holds several atoms
        let Content::One(c) = w.spot(obj) else {
            return false;
        };
        let Some(g) = w.group(c, f) else { return false };
        if g.len() > 1 {
            return false;
        }
        let Some(t) = target else { return false };
        w.groups.insert((c, f), [t].into_iter().collect());
        true
    };
    let source = |w: &World, s: u16| match w.spot(s) {
        Content::Nothing => Some(None),
        Content::One(b) => Some(Some(b)),
        Content::Many => None,
    };
    match (*a, write) {
        (GetFresh(s) | SetSpot { dst: s, .. } | GetField { dst: s, .. }, Some(c)) => {
            w.spots[s.0 as usize] = vec![c];
            true
        }
        (SetField { obj, field, .. }, Some(c)) => field_write(w, obj.0, field.0, Some(Some(c))),
        (GetFresh(s), _) => match (2..2 + atoms).find(|&c| !w.occurs(c)) {
            Some(c) => {
                w.spots[s.0 as usize] = vec![c];
                true
            }
            None => false,
        },
        (SetSpot { dst, src }, _) => match w.spot(src.0) {
            Content::Many => false,
            Content::Nothing => {
                w.spots[dst.0 as usize].clear();
                true
            }
            Content::One(c) => {
                w.spots[dst.0 as usize] = vec![c];
                true
            }
        },
        (ClrSpot(s), _) => {
            w.spots[s.0 as usize].clear();
            true
        }
        (EqualTst(s, t), _) => {
            matches!((w.spot(s.0), w.spot(t.0)), (Content::One(x), Content::One(y)) if x == y)
        }
        (UndefTst(s), _) => w.spots[s.0 as usize].is_empty(),
        (AddField(s, f), _) => match w.spot(s.0) {
            Content::One(c) if w.group(c, f.0).is_none() => {
                w.groups.insert((c, f.0), [None].into_iter().collect());
                true
            }
            _ => false,
        },
        (RmvField(s, f), _) => match w.spot(s.0) {
            Content::One(c) if w.group(c, f.0).is_some() => {
                w.groups.remove(&(c, f.0));
                true
            }
            _ => false,
        },
        (HasField(s, f), _) => matches!(w.spot(s.0), Content::One(c) if w.group(c, f.0).is_some()),
        (SetField { obj, field, src }, _) => {
            let t = source(w, src.0);
            field_write(w, obj.0, field.0, t)
        }
        (ClrField(s, f), _) => match w.spot(s.0) {
            Content::One(c) if w.group(c, f.0).is_some() => {
                w.groups.insert((c, f.0), [None].into_iter().collect());
                true
            }
            _ => false,
        },
        (GetField { dst, src, field }, _) => {
            let Content::One(c) = w.spot(src.0) else {
                return false;
            };
            let Some(g) = w.group(c, field.0) else {
                return false;
            };
            match g.iter().collect::<Vec<_>>().as_slice() {
                [None] => {
                    w.spots[dst.0 as usize].clear();
                    true
                }
                [Some(b)] => {
                    w.spots[dst.0 as usize] = vec![*b];
                    true
                }
                _ => false,
            }
        }
        (Fgc, _) => {
            let mut live: BTreeSet<u16> = w.spots.iter().flatten().copied().collect();
            live.insert(PSO);
            live.insert(SSO);
            loop {
                let more: Vec<u16> = w
                    .groups
                    .iter()
                    .filter(|(&(a, _), _)| live.contains(&a))
                    .flat_map(|(_, g)| g.iter().flatten().copied())
                    .filter(|b| !live.contains(b))
                    .collect();
                if more.is_empty() {
                    break;
                }
                live.extend(more);
            }
            w.groups.retain(|&(a, _), _| live.contains(&a));
            w.values.retain(|&(a, _)| live.contains(&a));
            true
        }
        (SetSpotPso(s), _) | (SetSpotSso(s), _) => {
            let c = if matches!(a, SetSpotPso(_)) { PSO } else { SSO };
            w.spots[s.0 as usize] = vec![c];
            true
        }
        (SetFieldPso(s, f), _) => field_write(w, s.0, f.0, Some(Some(PSO))),
        (SetFieldSso(s, f), _) => field_write(w, s.0, f.0, Some(Some(SSO))),
    }
}

/// Reading something whose content may have been shed, without first
/// reading something written in secondary mode.
fn primary_error(w: &World, a: &DldAction) -> bool {
    use DldAction::*;
    let ok = |s: u16| w.has_ordinary(s);
    let fine = match *a {
        GetFresh(_) | ClrSpot(_) => true,
        SetSpot { src, .. } => ok(src.0),
        UndefTst(s) | AddField(s, _) | RmvField(s, _) | HasField(s, _) => ok(s.0),
        EqualTst(s, t) => ok(s.0) && ok(t.0),
        SetField { obj, src, .. } => ok(obj.0) && ok(src.0),
        GetField { src, field, .. } => w.spots[src.0 as usize].iter().any(|&c| {
            ordinary(c)
                && w.groups
                    .get(&(c, field.0))
                    .is_some_and(|g| g.iter().flatten().any(|&b| ordinary(b)))
        }),
        ClrField(..) | Fgc | SetSpotPso(_) | SetSpotSso(_) | SetFieldPso(..) | SetFieldSso(..) => {
            false
        }
    };
    !fine
}

fn secondary_error(w: &World, a: &DldAction) -> bool {
    use DldAction::*;
    let sso = |s: u16| w.has(s, SSO);
    match *a {
        SetSpot { src, .. } => sso(src.0),
        EqualTst(s, t) => sso(s.0) || sso(t.0),
        UndefTst(s) | AddField(s, _) | RmvField(s, _) | HasField(s, _) => sso(s.0),
        SetField { obj, src, .. } => sso(obj.0) || sso(src.0),
        GetField { src, field, .. } => {
            sso(src.0)
                || w.spots[src.0 as usize].iter().any(|&c| {
                    w.groups
                        .get(&(c, field.0))
                        .is_some_and(|g| g.contains(&Some(SSO)))
                })
        }
        _ => false,
    }
}

/// `same[i][j]` iff nodes `i` and `j` behave alike.
fn bisimilarity(g: &ThreadGraph) -> Vec<Vec<bool>> {
    let nodes: Vec<&Node> = g.nodes().map(|(_, n)| n).collect();
    let k = nodes.len();
    let shape_eq = |x: &Node, y: &Node| match (x, y) {
        (Node::Stop, Node::Stop) | (Node::DeadEnd, Node::DeadEnd) => true,
        (Node::Post { action: a, .. }, Node::Post { action: b, .. }) => a == b,
        _ => false,
    };
    let mut same: Vec<Vec<bool>> = (0..k)
        .map(|i| (0..k).map(|j| shape_eq(nodes[i], nodes[j])).collect())
        .collect();
    let mut changed = true;
    while changed {
        changed = false;
        for i in 0..k {
            for j in 0..k {
                if !same[i][j] {
                    continue;
                }
                if let (
                    Node::Post {
                        left: l1,
                        right: r1,
                        ..
                    },
                    Node::Post {
                        left: l2,
                        right: r2,
                        ..
                    },
                ) = (nodes[i], nodes[j])
                {
                    let keep =
                        same[l1.0 as usize][l2.0 as usize] && same[r1.0 as usize][r2.0 as usize];
                    if !keep {
                        same[i][j] = false;
                        changed = true;
                    }
                }
            }
        }
    }
    same
}

struct Oracle<'a> {
    g: &'a ThreadGraph,
    rep: Vec<usize>,
    atoms: u16,
    budget: usize,
    used: usize,
}

impl Oracle<'_> {
    /// Whether some path from here meets a primary error first.
    fn refutable(
        &mut self,
        mode: u8,
        n: NodeId,
        w: &World,
        seen: &mut Vec<(usize, World)>,
    ) -> Result<bool> {
        self.used += 1;
        if self.used > self.budget {
            return Err(Error::BoundExceeded(self.budget));
        }
        let me = (self.rep[n.0 as usize], w.clone());
        if seen.contains(&me) {
            return Ok(false);
        }
        let next: Vec<(NodeId, World)> = match self.g.node(n) {
            Node::Stop | Node::DeadEnd => return Ok(false),
            Node::Post {
                left,
                action: ThreadAction::Tau,
                ..
            } => vec![(*left, w.clone())],
            Node::Post {
                left,
                action: ThreadAction::Call { focus, method },
                right,
            } => {
                if focus != DLD_FOCUS {
                    vec![(*left, w.clone()), (*right, w.clone())]
                } else {
                    let Some(a) = method.as_dld() else {
                        return Ok(true);
                    };
                    if a.is_mimic_only() {
                        return Ok(true);
                    }
                    if secondary_error(w, a) {
                        return Ok(false);
                    }
                    if primary_error(w, a) {
                        return Ok(true);
                    }
                    let write = match mode {
                        1 if a.changes_content() => Some(PSO),
                        2 if a.changes_content() => Some(SSO),
                        _ => None,
                    };
                    let mut after = w.clone();
                    let reply = perform(&mut after, a, write, self.atoms);
                    vec![(if reply { *left } else { *right }, after)]
                }
            }
        };
        seen.push(me);
        let mut found = Ok(false);
        'outer: for (m, after) in &next {
            for sub in [0u8, 2] {
                found = self.refutable(sub, *m, after, seen);
                if !matches!(found, Ok(false)) {
                    break 'outer;
                }
            }
        }
        seen.pop();
        found
    }
}

/// Decides the shedding criterion for the request at `n` in plain state `l`
/// by exhaustive search. Refuses with [`Error::BoundExceeded`] once more than
/// `bound` search nodes have been visited.
pub fn brute_force_criterion(
    g: &ThreadGraph,
    n: NodeId,
    l: &DataLinkage,
    u: &Universe,
    bound: usize,
) -> Result<bool> {
    let same = bisimilarity(g);
    let rep = same
        .iter()
        .map(|row| {
            row.iter()
                .position(|&b| b)
                .expect("every node is like itself")
        })
        .collect();
    let mut oracle = Oracle {
        g,
        rep,
        atoms: u.atom_count() as u16,
        budget: bound,
        used: 0,
    };
    let w = World::from_linkage(l, u.spot_count());
    Ok(!oracle.refutable(1, n, &w, &mut Vec::new())?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::thread::ThreadSpec;

    fn u() -> Universe {
        Universe::new(["s", "t", "u"], ["f"], ["a"], ["n"]).unwrap()
    }

    fn check(text: &str) -> bool {
        let u = u();
        let g = ThreadGraph::build(&ThreadSpec::parse(text, &u).unwrap()).unwrap();
        brute_force_criterion(&g, g.root(), &DataLinkage::empty(), &u, 10_000).unwrap()
    }

    #[test]
    fn both_worked_examples() {
        assert!(check(
            "P := <Q> dld(s = fresh) <Q>\nQ := <stop> dld(t = fresh) <dead>\nstart P"
        ));
        assert!(!check(
            "P := <Q> dld(s = fresh) <Q>\nQ := <R> dld(t = fresh) <stop>\nR := <stop> dld(u = s) <stop>\nstart P"
        ));
        assert!(check("X := dead"));
    }

    #[test]
    fn refuses_beyond_bound() {
        let u = u();
        let g = ThreadGraph::build(&ThreadSpec::parse("X := <X> dld(s = fresh) <X>", &u).unwrap())
            .unwrap();
        assert!(matches!(
            brute_force_criterion(&g, g.root(), &DataLinkage::empty(), &u, 1),
            Err(Error::BoundExceeded(1))
        ));
    }

    #[test]
    fn bisimilar_nodes_share_a_representative() {
        let u = u();
        let g = ThreadGraph::build(
            &ThreadSpec::parse("X := <Y> io(m) <stop>\nY := <Y> io(m) <stop>", &u).unwrap(),
        )
        .unwrap();
        let same = bisimilarity(&g);
        let Node::Post { left, .. } = g.node(g.root()) else {
            panic!()
        };
        assert!(same[g.root().0 as usize][left.0 as usize]);
    }
}
