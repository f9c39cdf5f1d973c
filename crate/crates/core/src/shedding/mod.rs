//! Shedding: deciding whether the spot or field that a request would change
//! may be cleared instead, because no continuation of the thread can ever
//! observe the new content.
//!
//! The check mimics shedding. The content that would be written is replaced
//! by the special atom `!pso`, and every later content change is explored
//! both as is and as a write of `!sso`. Reaching a use of `!pso` before any
//! use of `!sso` on some path means shedding would be observable.

pub mod oracle;

use std::collections::HashSet;
use std::fmt;

use crate::dla::{AtomicLink, DataLinkage};
use crate::dld::{self, DldAction};
use crate::error::{Error, Result};
use crate::thread::{Method, Node, NodeId, ThreadAction, ThreadClass, ThreadGraph, DLD_FOCUS};
use crate::universe::{Atom, Field, Spot, Universe};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Mode {
    /// Content changes are performed as requested.
    Keep = 0,
    /// Content changes write `!pso`.
    Primary = 1,
    /// Content changes write `!sso`.
    Secondary = 2,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", *self as u8)
    }
}

/// The action that clears what `a` would change.
pub fn shv(a: &DldAction) -> Result<DldAction> {
    use DldAction::*;
    if a.is_mimic_only() {
        return Err(Error::MimicOnly(format!("{a:?} has no shedding variant")));
    }
    Ok(match *a {
        GetFresh(s) | SetSpot { dst: s, .. } | GetField { dst: s, .. } => ClrSpot(s),
        SetField { obj, field, .. } => ClrField(obj, field),
        other => other,
    })
}

/// The action that mimics `a` in `mode`.
pub fn mshv(mode: Mode, a: &DldAction) -> DldAction {
    use DldAction::*;
    let spot = |s| {
        if mode == Mode::Primary {
            SetSpotPso(s)
        } else {
            SetSpotSso(s)
        }
    };
    match (mode, *a) {
        (Mode::Keep, a) => a,
        (_, GetFresh(s) | SetSpot { dst: s, .. } | GetField { dst: s, .. }) => spot(s),
        (Mode::Primary, SetField { obj, field, .. }) => SetFieldPso(obj, field),
        (Mode::Secondary, SetField { obj, field, .. }) => SetFieldSso(obj, field),
        (_, a) => a,
    }
}

fn real_spot(l: &DataLinkage, s: Spot) -> bool {
    l.spot_links(s).any(Atom::is_real)
}

fn field_targets(l: &DataLinkage, a: Atom, f: Field) -> impl Iterator<Item = Atom> + '_ {
    l.iter().filter_map(move |link| match *link {
        AtomicLink::Field(c, g, b) if c == a && g == f => Some(b),
        _ => None,
    })
}

/// Whether using `a` in `l` does not amount to a mimicked shedding error.
pub fn in_nosherr(a: &DldAction, l: &DataLinkage) -> bool {
    use DldAction::*;
    match *a {
        GetFresh(_) | ClrSpot(_) => true,
        SetSpot { src: s, .. } | UndefTst(s) | AddField(s, _) | RmvField(s, _) | HasField(s, _) => {
            real_spot(l, s)
        }
        EqualTst(s, t) | SetField { obj: s, src: t, .. } => real_spot(l, s) && real_spot(l, t),
        GetField {
            src: s, field: f, ..
        } => l
            .spot_links(s)
            .filter(|a| a.is_real())
            .any(|a| field_targets(l, a, f).any(Atom::is_real)),
        _ => false,
    }
}

/// Whether using `a` in `l` amounts to a mimicked secondary shedding error.
pub fn in_secsherr(a: &DldAction, l: &DataLinkage) -> bool {
    use DldAction::*;
    let sso = |s: Spot| l.spot_links(s).any(|a| a == Atom::Sso);
    match *a {
        SetSpot { src: s, .. } | UndefTst(s) | AddField(s, _) | RmvField(s, _) | HasField(s, _) => {
            sso(s)
        }
        EqualTst(s, t) | SetField { obj: s, src: t, .. } => sso(s) || sso(t),
        GetField {
            src: s, field: f, ..
        } => {
            sso(s)
                || l.spot_links(s)
                    .any(|a| field_targets(l, a, f).any(|b| b == Atom::Sso))
        }
        _ => false,
    }
}

/// Thread/state pairs met earlier on the current search path.
#[derive(Clone, Debug, Default)]
pub struct AncestorSet {
    pairs: HashSet<(ThreadClass, DataLinkage)>,
}

impl AncestorSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, g: &ThreadGraph, n: NodeId, l: DataLinkage) -> bool {
        self.pairs.insert((g.class(n), l))
    }

    pub fn contains(&self, g: &ThreadGraph, n: NodeId, l: &DataLinkage) -> bool {
        self.pairs.contains(&(g.class(n), l.clone()))
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// The way a search node is continued.
enum Expansion {
    Holds,
    Fails,
    /// Every (mode, node, state) must hold.
    All(Vec<(Mode, NodeId, DataLinkage)>),
}

struct Search<'a> {
    g: &'a ThreadGraph,
    u: &'a Universe,
    bound: usize,
    explored: usize,
    ancestors: AncestorSet,
}

impl Search<'_> {
    fn expand(&self, mode: Mode, n: NodeId, l: &DataLinkage) -> Expansion {
        let both = |next: NodeId, l: DataLinkage| {
            Expansion::All(vec![
                (Mode::Keep, next, l.clone()),
                (Mode::Secondary, next, l),
            ])
        };
        match self.g.node(n) {
            Node::Stop | Node::DeadEnd => Expansion::Holds,
            _ if self.ancestors.contains(self.g, n, l) => Expansion::Holds,
            Node::Post {
                left,
                action: ThreadAction::Tau,
                ..
            } => both(*left, l.clone()),
            Node::Post {
                left,
                action: ThreadAction::Call { focus, .. },
                right,
            } if focus != DLD_FOCUS => Expansion::All(vec![
                (Mode::Keep, *left, l.clone()),
                (Mode::Secondary, *left, l.clone()),
                (Mode::Keep, *right, l.clone()),
                (Mode::Secondary, *right, l.clone()),
            ]),
            Node::Post {
                left,
                action: ThreadAction::Call { method, .. },
                right,
            } => {
                let Some(a) = method.as_dld().filter(|a| !a.is_mimic_only()) else {
                    return Expansion::Fails;
                };
                if in_secsherr(a, l) {
                    Expansion::Holds
                } else if in_nosherr(a, l) {
                    let out = dld::apply(&mshv(mode, a), l, self.u);
                    both(if out.reply { *left } else { *right }, out.next)
                } else {
                    Expansion::Fails
                }
            }
        }
    }

    fn holds(&mut self, mode: Mode, n: NodeId, l: &DataLinkage) -> Result<bool> {
        self.explored += 1;
        if self.explored > self.bound {
            return Err(Error::BoundExceeded(self.bound));
        }
        match self.expand(mode, n, l) {
            Expansion::Holds => Ok(true),
            Expansion::Fails => Ok(false),
            Expansion::All(children) => {
                self.ancestors.insert(self.g, n, l.clone());
                let mut result = Ok(true);
                for (m, c, cl) in &children {
                    result = self.holds(*m, *c, cl);
                    if !matches!(result, Ok(true)) {
                        break;
                    }
                }
                self.ancestors.pairs.remove(&(self.g.class(n), l.clone()));
                result
            }
        }
    }
}

/// `shok'(mode, C)` membership of the thread at `n` with mimic state `l`.
/// Returns the verdict and the number of search nodes visited.
pub fn shok_prime(
    g: &ThreadGraph,
    n: NodeId,
    mode: Mode,
    ancestors: &AncestorSet,
    l: &DataLinkage,
    u: &Universe,
    bound: usize,
) -> Result<(bool, usize)> {
    let mu = u.mimic();
    let mut search = Search {
        g,
        u: &mu,
        bound,
        explored: 0,
        ancestors: ancestors.clone(),
    };
    let ok = search.holds(mode, n, l)?;
    Ok((ok, search.explored))
}

/// One step of a path that ends in a mimicked primary shedding error.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WitnessStep {
    pub mode: Mode,
    pub node: NodeId,
    pub state: DataLinkage,
    pub kind: WitnessKind,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum WitnessKind {
    Performed {
        action: DldAction,
        mimicked: DldAction,
        reply: bool,
    },
    Foreign {
        focus: String,
        method: Method,
        reply: bool,
    },
    Tau,
    /// The request that would observe the shed content.
    Error {
        method: Method,
    },
}

impl WitnessStep {
    pub fn display<'a>(&'a self, u: &'a Universe) -> impl fmt::Display + 'a {
        WitnessDisplay { w: self, u }
    }
}

struct WitnessDisplay<'a> {
    w: &'a WitnessStep,
    u: &'a Universe,
}

impl fmt::Display for WitnessDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let u = self.u;
        write!(f, "[mode {}] ", self.w.mode)?;
        match &self.w.kind {
            WitnessKind::Performed {
                action,
                mimicked,
                reply,
            } if action == mimicked => write!(f, "{} -> {reply}", action.display(u))?,
            WitnessKind::Performed {
                action,
                mimicked,
                reply,
            } => write!(
                f,
                "{} as {} -> {reply}",
                action.display(u),
                mimicked.display(u)
            )?,
            WitnessKind::Foreign {
                focus,
                method,
                reply,
            } => write!(f, "{focus}({}) -> {reply}", method.display(u))?,
            WitnessKind::Tau => f.write_str("tau")?,
            WitnessKind::Error { method } => write!(f, "{}: shedding error", method.display(u))?,
        }
        write!(f, " | {}", self.w.state.display(u))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShedVerdict {
    pub member: bool,
    pub explored: usize,
    /// A shortest failing path, when `member` is false.
    pub evidence: Option<Vec<WitnessStep>>,
}

/// Whether the spot or field changed by the request at `n` may be shed in
/// plain state `l`.
pub fn shok_member(
    g: &ThreadGraph,
    n: NodeId,
    l: &DataLinkage,
    u: &Universe,
    bound: usize,
) -> Result<ShedVerdict> {
    let (member, explored) = shok_prime(g, n, Mode::Primary, &AncestorSet::new(), l, u, bound)?;
    Ok(ShedVerdict {
        member,
        explored,
        evidence: None,
    })
}

/// Like [`shok_member`], also searching for a shortest witness path when the
/// verdict is negative.
pub fn shok_member_with_witness(
    g: &ThreadGraph,
    n: NodeId,
    l: &DataLinkage,
    u: &Universe,
    bound: usize,
) -> Result<ShedVerdict> {
    let mut v = shok_member(g, n, l, u, bound)?;
    if !v.member {
        let mu = u.mimic();
        let mut search = Search {
            g,
            u: &mu,
            bound,
            explored: 0,
            ancestors: AncestorSet::new(),
        };
        for depth in 0.. {
            search.explored = 0;
            let mut path = Vec::new();
            if search.witness(Mode::Primary, n, l, depth, &mut path)? {
                v.evidence = Some(path);
                break;
            }
        }
    }
    Ok(v)
}

impl Search<'_> {
    /// Depth-limited search for a failing path of at most `depth` steps
    /// before the error.
    fn witness(
        &mut self,
        mode: Mode,
        n: NodeId,
        l: &DataLinkage,
        depth: usize,
        path: &mut Vec<WitnessStep>,
    ) -> Result<bool> {
        self.explored += 1;
        if self.explored > self.bound {
            return Err(Error::BoundExceeded(self.bound));
        }
        let step = |kind| WitnessStep {
            mode,
            node: n,
            state: l.clone(),
            kind,
        };
        let children = match self.expand(mode, n, l) {
            Expansion::Holds => return Ok(false),
            Expansion::Fails => {
                let Node::Post {
                    action: ThreadAction::Call { method, .. },
                    ..
                } = self.g.node(n)
                else {
                    unreachable!("only requests fail")
                };
                path.push(step(WitnessKind::Error {
                    method: method.clone(),
                }));
                return Ok(true);
            }
            Expansion::All(_) if depth == 0 => return Ok(false),
            Expansion::All(children) => children,
        };
        let Node::Post { left, action, .. } = self.g.node(n) else {
            unreachable!()
        };
        self.ancestors.insert(self.g, n, l.clone());
        let mut result = Ok(false);
        for (m, c, cl) in &children {
            let kind = match action {
                ThreadAction::Tau => WitnessKind::Tau,
                ThreadAction::Call { focus, method } if focus != DLD_FOCUS => {
                    WitnessKind::Foreign {
                        focus: focus.clone(),
                        method: method.clone(),
                        reply: c == left,
                    }
                }
                ThreadAction::Call { method, .. } => {
                    let a = *method
                        .as_dld()
                        .expect("expanded requests are basic actions");
                    let mimicked = mshv(mode, &a);
                    WitnessKind::Performed {
                        action: a,
                        mimicked,
                        reply: dld::apply(&mimicked, l, self.u).reply,
                    }
                }
            };
            path.push(step(kind));
            result = self.witness(*m, *c, cl, depth - 1, path);
            if !matches!(result, Ok(false)) {
                break;
            }
            path.pop();
        }
        self.ancestors.pairs.remove(&(self.g.class(n), l.clone()));
        result
    }
}
