//! Forecasting services and the use operator.
//!
//! A service answers a request with a reply and a derived service; both may
//! depend on the whole residual thread that makes the request. Every
//! service has an absorbing blocked state: once a request is rejected, all
//! later requests are rejected too.

use std::fmt;
use std::sync::Arc;

use rand::seq::{IteratorRandom, SliceRandom};
use rand::Rng;

use crate::dla::laws::random_link;
use crate::dla::{AtomicLink, DataLinkage};
use crate::dld::{self, DldAction};
use crate::error::{Error, Result};
use crate::shedding;
use crate::thread::{Method, Node, NodeId, ThreadAction, ThreadGraph};
use crate::universe::{Atom, Universe};

/// Exploration bound used by the shedding service unless overridden.
pub const DEFAULT_SHED_BOUND: usize = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Reply {
    True,
    False,
    Blocked,
}

impl From<bool> for Reply {
    fn from(b: bool) -> Self {
        if b {
            Reply::True
        } else {
            Reply::False
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ServiceState {
    Live(DataLinkage),
    Blocked,
}

impl ServiceState {
    pub fn linkage(&self) -> Option<&DataLinkage> {
        match self {
            ServiceState::Live(l) => Some(l),
            ServiceState::Blocked => None,
        }
    }

    pub fn display<'a>(&'a self, u: &'a Universe) -> impl fmt::Display + 'a {
        StateDisplay { s: self, u }
    }
}

struct StateDisplay<'a> {
    s: &'a ServiceState,
    u: &'a Universe,
}

impl fmt::Display for StateDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.s {
            ServiceState::Live(l) => write!(f, "{}", l.display(self.u)),
            ServiceState::Blocked => f.write_str("blocked"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ServiceKind {
    /// Plain data linkage dynamics.
    Plain,
    /// Plain dynamics plus the actions that write the special atoms.
    Mimic,
    /// Plain dynamics that clears a spot or field instead of changing it
    /// whenever the new content can never be used.
    Shedding,
}

/// A data linkage dynamics service. Values are immutable; responding to a
/// request gives a new service.
#[derive(Clone, Debug)]
pub struct DldService {
    kind: ServiceKind,
    state: ServiceState,
    universe: Arc<Universe>,
    shed_bound: usize,
}

impl PartialEq for DldService {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind && self.state == other.state && *self.universe == *other.universe
    }
}

/// What a service does with one request.
#[derive(Clone, Debug)]
pub struct Response {
    pub reply: Reply,
    pub next: DldService,
    /// The action whose effect was applied, when the request was accepted.
    pub applied: Option<DldAction>,
}

/// `dlds(L)`: the plain service started in `l`.
pub fn dlds(u: &Universe, l: DataLinkage) -> Result<DldService> {
    DldService::new(ServiceKind::Plain, u, l)
}

/// `dldsm(L)`: the mimicking service started in `l`.
pub fn dldsm(u: &Universe, l: DataLinkage) -> Result<DldService> {
    DldService::new(ServiceKind::Mimic, u, l)
}

/// `dldss(L)`: the shedding service started in `l`.
pub fn dldss(u: &Universe, l: DataLinkage) -> Result<DldService> {
    DldService::new(ServiceKind::Shedding, u, l)
}

impl DldService {
    pub fn new(kind: ServiceKind, u: &Universe, l: DataLinkage) -> Result<Self> {
        let universe = match kind {
            ServiceKind::Mimic => u.mimic(),
            ServiceKind::Plain | ServiceKind::Shedding => u.plain(),
        };
        l.validate(&universe)?;
        Ok(DldService {
            kind,
            state: ServiceState::Live(l),
            universe: Arc::new(universe),
            shed_bound: DEFAULT_SHED_BOUND,
        })
    }

    pub fn with_shed_bound(mut self, bound: usize) -> Self {
        self.shed_bound = bound;
        self
    }

    pub fn with_state(&self, state: ServiceState) -> Self {
        DldService {
            state,
            ..self.clone()
        }
    }

    pub fn blocked(&self) -> Self {
        self.with_state(ServiceState::Blocked)
    }

    pub fn kind(&self) -> ServiceKind {
        self.kind
    }

    pub fn state(&self) -> &ServiceState {
        &self.state
    }

    pub fn universe(&self) -> &Universe {
        &self.universe
    }

    pub fn is_blocked(&self) -> bool {
        self.state == ServiceState::Blocked
    }

    /// Whether `a` is one of this service's basic actions.
    pub fn offers(&self, a: &DldAction) -> bool {
        a.belongs_to(&self.universe) && (self.kind == ServiceKind::Mimic || !a.is_mimic_only())
    }

    /// The request `m` as made by the residual thread at `n`, if the thread
    /// is in a position to make it and the method is in scope.
    fn accepted<'a>(&self, m: &'a Method, g: &ThreadGraph, n: NodeId) -> Option<&'a DldAction> {
        let Node::Post {
            action: ThreadAction::Call { method, .. },
            ..
        } = g.node(n)
        else {
            return None;
        };
        if method != m {
            return None;
        }
        m.as_dld().filter(|a| self.offers(a))
    }

    /// Reply and derived service for request `m` from the thread at `n`.
    pub fn respond(&self, m: &Method, g: &ThreadGraph, n: NodeId) -> Result<Response> {
        let rejected = || Response {
            reply: Reply::Blocked,
            next: self.blocked(),
            applied: None,
        };
        let ServiceState::Live(l) = &self.state else {
            return Ok(rejected());
        };
        let Some(a) = self.accepted(m, g, n) else {
            return Ok(rejected());
        };
        let applied = match self.kind {
            ServiceKind::Plain | ServiceKind::Mimic => *a,
            ServiceKind::Shedding => {
                let verdict = shedding::shok_member(g, n, l, &self.universe, self.shed_bound)?;
                if verdict.member {
                    shedding::shv(a)?
                } else {
                    *a
                }
            }
        };
        let out = dld::apply(&applied, l, &self.universe);
        Ok(Response {
            reply: out.reply.into(),
            next: self.with_state(ServiceState::Live(out.next)),
            applied: Some(applied),
        })
    }

    /// `yld(m, s, t)`
    pub fn reply(&self, m: &Method, g: &ThreadGraph, n: NodeId) -> Result<Reply> {
        Ok(self.respond(m, g, n)?.reply)
    }

    /// The derived service `d/dm H` in context `t`.
    pub fn derive(&self, m: &Method, g: &ThreadGraph, n: NodeId) -> Result<DldService> {
        Ok(self.respond(m, g, n)?.next)
    }
}

#[derive(Clone, Debug)]
pub enum UseOutcome {
    Terminated,
    Deadlocked,
    TauStep {
        next: NodeId,
        service: DldService,
        /// The processed request and its reply; `None` for a literal tau.
        processed: Option<(Method, bool)>,
    },
    ExternalPending {
        focus: String,
        method: Method,
        left: NodeId,
        right: NodeId,
    },
}

/// One step of the thread at `n` used with `h` at `focus`.
pub fn use_step(g: &ThreadGraph, n: NodeId, focus: &str, h: &DldService) -> Result<UseOutcome> {
    match g.node(n) {
        Node::Stop => Ok(UseOutcome::Terminated),
        Node::DeadEnd => Ok(UseOutcome::Deadlocked),
        Node::Post {
            left,
            action: ThreadAction::Tau,
            ..
        } => Ok(UseOutcome::TauStep {
            next: *left,
            service: h.clone(),
            processed: None,
        }),
        Node::Post {
            left,
            action:
                ThreadAction::Call {
                    focus: g_focus,
                    method,
                },
            right,
        } => {
            if g_focus != focus {
                return Ok(UseOutcome::ExternalPending {
                    focus: g_focus.clone(),
                    method: method.clone(),
                    left: *left,
                    right: *right,
                });
            }
            let resp = h.respond(method, g, n)?;
            let (next, reply) = match resp.reply {
                Reply::True => (*left, true),
                Reply::False => (*right, false),
                Reply::Blocked => return Ok(UseOutcome::Deadlocked),
            };
            Ok(UseOutcome::TauStep {
                next,
                service: resp.next,
                processed: Some((method.clone(), reply)),
            })
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TraceEvent {
    TauProcessed {
        method: Method,
        reply: bool,
    },
    TauLiteral,
    Foreign {
        focus: String,
        method: Method,
        reply: bool,
    },
    Terminated,
    Deadlocked,
    FuelExhausted,
}

impl TraceEvent {
    pub fn display<'a>(&'a self, u: &'a Universe) -> impl fmt::Display + 'a {
        EventDisplay { e: self, u }
    }
}

struct EventDisplay<'a> {
    e: &'a TraceEvent,
    u: &'a Universe,
}

impl fmt::Display for EventDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.e {
            TraceEvent::TauProcessed { method, reply } => {
                write!(f, "tau {} -> {reply}", method.display(self.u))
            }
            TraceEvent::TauLiteral => f.write_str("tau"),
            TraceEvent::Foreign {
                focus,
                method,
                reply,
            } => {
                write!(f, "foreign {focus}({}) -> {reply}", method.display(self.u))
            }
            TraceEvent::Terminated => f.write_str("stop"),
            TraceEvent::Deadlocked => f.write_str("dead"),
            TraceEvent::FuelExhausted => f.write_str("fuel"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Trace {
    pub initial: ServiceState,
    pub events: Vec<TraceEvent>,
    /// Service state after each event.
    pub states: Vec<ServiceState>,
}

impl Trace {
    pub fn fuel_exhausted(&self) -> bool {
        self.events.last() == Some(&TraceEvent::FuelExhausted)
    }

    /// One event per line, optionally followed by `| state`.
    pub fn render(&self, u: &Universe, with_states: bool) -> String {
        let mut out = String::new();
        for (e, s) in self.events.iter().zip(&self.states) {
            out.push_str(&e.display(u).to_string());
            if with_states {
                out.push_str(&format!(" | {}", s.display(u)));
            }
            out.push('\n');
        }
        out
    }
}

/// Iterates [`use_step`] from the root. Foreign requests take their replies
/// from `oracle` in order.
pub fn run(
    g: &ThreadGraph,
    focus: &str,
    h: DldService,
    oracle: &[bool],
    fuel: usize,
) -> Result<Trace> {
    let mut trace = Trace {
        initial: h.state().clone(),
        events: Vec::new(),
        states: Vec::new(),
    };
    let mut n = g.root();
    let mut h = h;
    let mut replies = oracle.iter();
    let mut used = 0;
    loop {
        if used == fuel {
            trace.events.push(TraceEvent::FuelExhausted);
            trace.states.push(h.state().clone());
            return Ok(trace);
        }
        used += 1;
        match use_step(g, n, focus, &h)? {
            UseOutcome::Terminated => {
                trace.events.push(TraceEvent::Terminated);
                trace.states.push(h.state().clone());
                return Ok(trace);
            }
            UseOutcome::Deadlocked => {
                if matches!(g.node(n), Node::Post { .. }) {
                    h = h.blocked();
                }
                trace.events.push(TraceEvent::Deadlocked);
                trace.states.push(h.state().clone());
                return Ok(trace);
            }
            UseOutcome::TauStep {
                next,
                service,
                processed,
            } => {
                trace.events.push(match processed {
                    Some((method, reply)) => TraceEvent::TauProcessed { method, reply },
                    None => TraceEvent::TauLiteral,
                });
                trace.states.push(service.state().clone());
                h = service;
                n = next;
            }
            UseOutcome::ExternalPending {
                focus,
                method,
                left,
                right,
            } => {
                let reply = *replies
                    .next()
                    .ok_or(Error::OracleExhausted(trace.events.len() + 1))?;
                trace.events.push(TraceEvent::Foreign {
                    focus,
                    method,
                    reply,
                });
                trace.states.push(h.state().clone());
                n = if reply { left } else { right };
            }
        }
    }
}

/// A sampled request together with the state and thread it is made in.
#[derive(Clone, Debug)]
pub struct Sample {
    pub method: Method,
    pub state: ServiceState,
    pub graph: ThreadGraph,
    pub node: NodeId,
}

#[derive(Clone, Debug, Default)]
pub struct ConditionReport {
    pub checked: usize,
    pub violations: Vec<String>,
}

impl ConditionReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks the two service conditions on each sample: a rejected request
/// leads to a state in which everything is rejected, and requests from
/// `stop`, `dead`, tau-prefixed threads or threads whose first action is a
/// different method are rejected.
pub fn check_service_conditions(
    h: &DldService,
    samples: impl IntoIterator<Item = Sample>,
) -> Result<ConditionReport> {
    let mut report = ConditionReport::default();
    let u = h.universe().clone();
    for s in samples {
        report.checked += 1;
        let svc = h.with_state(s.state.clone());
        let resp = svc.respond(&s.method, &s.graph, s.node)?;
        let describe = || {
            format!(
                "method `{}` in state `{}` at node {}",
                s.method.display(&u),
                s.state.display(&u),
                s.node.0
            )
        };
        let must_block = match s.graph.node(s.node) {
            Node::Stop | Node::DeadEnd => Some("stop/dead thread"),
            Node::Post {
                action: ThreadAction::Tau,
                ..
            } => Some("tau-prefixed thread"),
            Node::Post {
                action: ThreadAction::Call { method, .. },
                ..
            } if *method != s.method => Some("mismatched first action"),
            _ if s.state == ServiceState::Blocked => Some("blocked state"),
            _ => None,
        };
        if let Some(why) = must_block {
            if resp.reply != Reply::Blocked {
                report
                    .violations
                    .push(format!("{}: {why} not rejected", describe()));
            }
        }
        if resp.reply == Reply::Blocked {
            if !resp.next.is_blocked() {
                report
                    .violations
                    .push(format!("{}: rejection did not block", describe()));
                continue;
            }
            // from the blocked state even a well-formed request is rejected
            let again = resp.next.respond(&s.method, &s.graph, s.node)?;
            if again.reply != Reply::Blocked || !again.next.is_blocked() {
                report
                    .violations
                    .push(format!("{}: blocked state is not absorbing", describe()));
            }
            if let Some((g, n, m)) = matching_request(&s.graph) {
                let again = resp.next.respond(&m, &g, n)?;
                if again.reply != Reply::Blocked || !again.next.is_blocked() {
                    report
                        .violations
                        .push(format!("{}: blocked state accepted a request", describe()));
                }
            }
        }
    }
    Ok(report)
}

fn matching_request(g: &ThreadGraph) -> Option<(ThreadGraph, NodeId, Method)> {
    g.nodes().find_map(|(id, node)| match node {
        Node::Post {
            action: ThreadAction::Call { method, .. },
            ..
        } => Some((g.clone(), id, method.clone())),
        _ => None,
    })
}

/// A random basic action over `u`; mimic-only actions only if `mimic`.
pub fn random_action<R: Rng + ?Sized>(u: &Universe, mimic: bool, rng: &mut R) -> DldAction {
    let s = |rng: &mut R| u.spots().choose(rng).unwrap();
    let f = |rng: &mut R| u.fields().choose(rng).unwrap();
    let top = if mimic { 16 } else { 12 };
    match rng.gen_range(0..top) {
        0 => DldAction::GetFresh(s(rng)),
        1 => DldAction::SetSpot {
            dst: s(rng),
            src: s(rng),
        },
        2 => DldAction::ClrSpot(s(rng)),
        3 => DldAction::EqualTst(s(rng), s(rng)),
        4 => DldAction::UndefTst(s(rng)),
        5 => DldAction::AddField(s(rng), f(rng)),
        6 => DldAction::RmvField(s(rng), f(rng)),
        7 => DldAction::HasField(s(rng), f(rng)),
        8 => DldAction::SetField {
            obj: s(rng),
            field: f(rng),
            src: s(rng),
        },
        9 => DldAction::ClrField(s(rng), f(rng)),
        10 => DldAction::GetField {
            dst: s(rng),
            src: s(rng),
            field: f(rng),
        },
        11 => DldAction::Fgc,
        12 => DldAction::SetSpotPso(s(rng)),
        13 => DldAction::SetSpotSso(s(rng)),
        14 => DldAction::SetFieldPso(s(rng), f(rng)),
        _ => DldAction::SetFieldSso(s(rng), f(rng)),
    }
}

fn random_method<R: Rng + ?Sized>(u: &Universe, rng: &mut R) -> Method {
    if rng.gen_bool(0.1) {
        Method::Other(["m", "get", "ping"].choose(rng).unwrap().to_string())
    } else {
        Method::Dld(random_action(u, true, rng))
    }
}

/// A random linkage over `u`, using the special atoms when `u` mimics.
pub fn random_state<R: Rng + ?Sized>(u: &Universe, max_links: usize, rng: &mut R) -> DataLinkage {
    let atoms = u.all_atoms();
    let n = rng.gen_range(0..=max_links);
    (0..n)
        .map(|_| {
            let link = random_link(u, rng);
            if atoms.len() > u.atom_count() && rng.gen_bool(0.2) {
                let special = *[Atom::Pso, Atom::Sso].choose(rng).unwrap();
                match link {
                    AtomicLink::Spot(s, _) => AtomicLink::Spot(s, special),
                    AtomicLink::Field(a, f, _) => AtomicLink::Field(a, f, special),
                    other => other,
                }
            } else {
                link
            }
        })
        .collect()
}

/// A random graph of at most `posts` post nodes plus `stop` and `dead`.
/// Actions are mostly `dld` requests, with some tau and foreign ones.
pub fn random_graph<R: Rng + ?Sized>(u: &Universe, posts: usize, rng: &mut R) -> ThreadGraph {
    let k = rng.gen_range(1..=posts.max(1));
    let total = k + 2;
    let mut nodes = Vec::with_capacity(total);
    for _ in 0..k {
        let action = match rng.gen_range(0..10) {
            0 => ThreadAction::Tau,
            1 => ThreadAction::call("io", "read"),
            _ => ThreadAction::Call {
                focus: crate::thread::DLD_FOCUS.to_string(),
                method: random_method(u, rng),
            },
        };
        nodes.push(Node::Post {
            left: NodeId(rng.gen_range(0..total) as u32),
            action,
            right: NodeId(rng.gen_range(0..total) as u32),
        });
    }
    nodes.push(Node::Stop);
    nodes.push(Node::DeadEnd);
    ThreadGraph::from_nodes(nodes, NodeId(0)).expect("node references are in range")
}

/// Samples (method, state, thread) triples for [`check_service_conditions`].
/// About half of the requests match the first action of the thread.
pub fn sample<R: Rng + ?Sized>(u: &Universe, kind: ServiceKind, rng: &mut R) -> Sample {
    let su = if kind == ServiceKind::Mimic {
        u.mimic()
    } else {
        u.plain()
    };
    let graph = random_graph(&su, 3, rng);
    let node = NodeId(rng.gen_range(0..graph.len()) as u32);
    let method = match graph.node(node) {
        Node::Post {
            action: ThreadAction::Call { method, .. },
            ..
        } if rng.gen_bool(0.5) => method.clone(),
        _ => random_method(&su, rng),
    };
    let state = if rng.gen_bool(0.1) {
        ServiceState::Blocked
    } else {
        ServiceState::Live(random_state(&su, 4, rng))
    };
    Sample {
        method,
        state,
        graph,
        node,
    }
}
