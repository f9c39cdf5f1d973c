//! Regular threads as finite graphs.
//!
//! A thread is built from a finite guarded recursive specification: every
//! equation `X := rhs` has a constant or a postconditional composition on
//! the right, so every cycle of the graph passes through a `Post` node.
//! Nodes are the residual threads; equal behaviour is detected by
//! partition refinement, which gives each node a canonical class.
//!
//! File syntax:
//!
//! ```text
//! X := stop
//! X := dead
//! X := <Y> dld(s = fresh) <Z>     Y on a true reply, Z on false
//! X := tau; Y
//! start X
//! ```
//!
//! Branches may be variables, `stop`, `dead`, or nested terms.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;

use crate::dld::DldAction;
use crate::error::{Error, Result};
use crate::universe::{is_identifier, Universe};

/// The focus under which data linkage services are used.
pub const DLD_FOCUS: &str = "dld";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

impl NodeId {
    fn index(self) -> usize {
        self.0 as usize
    }
}

/// The command part of a basic action `focus.method`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    Dld(DldAction),
    Other(String),
}

impl Method {
    pub fn as_dld(&self) -> Option<&DldAction> {
        match self {
            Method::Dld(a) => Some(a),
            Method::Other(_) => None,
        }
    }

    pub fn display<'a>(&'a self, u: &'a Universe) -> impl fmt::Display + 'a {
        MethodDisplay { m: self, u }
    }
}

struct MethodDisplay<'a> {
    m: &'a Method,
    u: &'a Universe,
}

impl fmt::Display for MethodDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.m {
            Method::Dld(a) => write!(f, "{}", a.display(self.u)),
            Method::Other(s) => f.write_str(s),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ThreadAction {
    Tau,
    Call { focus: String, method: Method },
}

impl ThreadAction {
    pub fn dld(action: DldAction) -> Self {
        ThreadAction::Call {
            focus: DLD_FOCUS.to_string(),
            method: Method::Dld(action),
        }
    }

    pub fn call(focus: impl Into<String>, method: impl Into<String>) -> Self {
        ThreadAction::Call {
            focus: focus.into(),
            method: Method::Other(method.into()),
        }
    }

    pub fn display<'a>(&'a self, u: &'a Universe) -> impl fmt::Display + 'a {
        ActionDisplay { a: self, u }
    }
}

struct ActionDisplay<'a> {
    a: &'a ThreadAction,
    u: &'a Universe,
}

impl fmt::Display for ActionDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.a {
            ThreadAction::Tau => f.write_str("tau"),
            ThreadAction::Call { focus, method } => {
                write!(f, "{focus}({})", method.display(self.u))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Node {
    Stop,
    DeadEnd,
    Post {
        left: NodeId,
        action: ThreadAction,
        right: NodeId,
    },
}

/// Right-hand sides of recursion equations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ThreadTerm {
    Stop,
    DeadEnd,
    Var(String),
    Post(Box<ThreadTerm>, ThreadAction, Box<ThreadTerm>),
}

impl ThreadTerm {
    pub fn post(left: ThreadTerm, action: ThreadAction, right: ThreadTerm) -> Self {
        ThreadTerm::Post(Box::new(left), action, Box::new(right))
    }

    /// Action prefixing: `action` followed by `next` whatever the reply.
    pub fn prefix(action: ThreadAction, next: ThreadTerm) -> Self {
        ThreadTerm::post(next.clone(), action, next)
    }

    pub fn var(name: impl Into<String>) -> Self {
        ThreadTerm::Var(name.into())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ThreadSpec {
    pub equations: Vec<(String, ThreadTerm)>,
    pub start: String,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CanonicalId(String);

impl CanonicalId {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

/// Class of a node under behavioural equality, local to one graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ThreadClass(pub u32);

#[derive(Debug)]
pub enum Step<'a> {
    Terminated,
    Deadlocked,
    Next(&'a ThreadAction, NodeId),
}

#[derive(Clone, Debug)]
pub struct ThreadGraph {
    nodes: Vec<Node>,
    labels: Vec<Option<String>>,
    root: NodeId,
    class: Vec<ThreadClass>,
}

impl ThreadGraph {
    /// Builds a graph from explicit nodes. Tau nodes are normalised so that
    /// both branches agree (the left one is kept).
    pub fn from_nodes(mut nodes: Vec<Node>, root: NodeId) -> Result<Self> {
        let n = nodes.len();
        let ok = |id: NodeId| id.index() < n;
        if !ok(root) {
            return Err(Error::Thread(format!("root {} does not exist", root.0)));
        }
        for (i, node) in nodes.iter_mut().enumerate() {
            if let Node::Post {
                left,
                action,
                right,
            } = node
            {
                if !ok(*left) || !ok(*right) {
                    return Err(Error::Thread(format!("node {i} refers to a missing node")));
                }
                if *action == ThreadAction::Tau {
                    *right = *left;
                }
            }
        }
        let labels = vec![None; n];
        Ok(Self::finish(nodes, labels, root))
    }

    fn finish(nodes: Vec<Node>, labels: Vec<Option<String>>, root: NodeId) -> Self {
        let class = refine(&nodes);
        ThreadGraph {
            nodes,
            labels,
            root,
            class,
        }
    }

    /// Ties the equations of `spec` into a graph. Each variable defined by a
    /// postconditional composition becomes one node; `stop` and `dead` are
    /// shared.
    pub fn build(spec: &ThreadSpec) -> Result<Self> {
        let mut defs: HashMap<&str, &ThreadTerm> = HashMap::new();
        for (name, rhs) in &spec.equations {
            if defs.insert(name.as_str(), rhs).is_some() {
                return Err(Error::Thread(format!("`{name}` is defined twice")));
            }
        }
        let mut b = Builder::default();
        let mut var_node: HashMap<&str, NodeId> = HashMap::new();
        for (name, rhs) in &spec.equations {
            let id = match rhs {
                ThreadTerm::Stop => b.stop(),
                ThreadTerm::DeadEnd => b.dead(),
                ThreadTerm::Post(..) => b.reserve(),
                ThreadTerm::Var(v) => {
                    return Err(Error::Thread(format!(
                        "`{name} := {v}` is unguarded: the right-hand side must be stop, dead or a postconditional composition"
                    )))
                }
            };
            if b.labels[id.index()].is_none() {
                b.labels[id.index()] = Some(name.clone());
            }
            var_node.insert(name.as_str(), id);
        }
        for (name, rhs) in &spec.equations {
            if let ThreadTerm::Post(l, action, r) = rhs {
                let id = var_node[name.as_str()];
                let left = b.term(l, &var_node)?;
                let right = b.term(r, &var_node)?;
                b.nodes[id.index()] = Some(b.post(left, action.clone(), right));
            }
        }
        let root = *var_node.get(spec.start.as_str()).ok_or_else(|| {
            Error::Thread(format!("start variable `{}` is not defined", spec.start))
        })?;
        let nodes = b
            .nodes
            .into_iter()
            .map(|n| n.expect("every reserved node is filled"))
            .collect();
        Ok(Self::finish(nodes, b.labels, root))
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, n: NodeId) -> &Node {
        &self.nodes[n.index()]
    }

    pub fn nodes(&self) -> impl Iterator<Item = (NodeId, &Node)> + '_ {
        self.nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (NodeId(i as u32), n))
    }

    pub fn label(&self, n: NodeId) -> Option<&str> {
        self.labels[n.index()].as_deref()
    }

    /// Residual threads of the root.
    pub fn residuals(&self) -> BTreeSet<NodeId> {
        self.residuals_from(self.root)
    }

    /// Least set containing `n` and closed under both branches.
    pub fn residuals_from(&self, n: NodeId) -> BTreeSet<NodeId> {
        let mut seen = BTreeSet::new();
        let mut stack = vec![n];
        while let Some(id) = stack.pop() {
            if !seen.insert(id) {
                continue;
            }
            if let Node::Post { left, right, .. } = &self.nodes[id.index()] {
                stack.push(*left);
                stack.push(*right);
            }
        }
        seen
    }

    pub fn step(&self, n: NodeId, reply: bool) -> Step<'_> {
        match &self.nodes[n.index()] {
            Node::Stop => Step::Terminated,
            Node::DeadEnd => Step::Deadlocked,
            Node::Post {
                left,
                action,
                right,
            } => {
                let next = if reply || *action == ThreadAction::Tau {
                    *left
                } else {
                    *right
                };
                Step::Next(action, next)
            }
        }
    }

    pub fn class(&self, n: NodeId) -> ThreadClass {
        self.class[n.index()]
    }

    /// A token that is equal for nodes with the same behaviour, also across
    /// separately built graphs: the minimised reachable graph numbered in
    /// breadth-first order.
    pub fn canonical_id(&self, n: NodeId) -> CanonicalId {
        let mut rep: HashMap<ThreadClass, NodeId> = HashMap::new();
        for (i, c) in self.class.iter().enumerate() {
            rep.entry(*c).or_insert(NodeId(i as u32));
        }
        let mut local: HashMap<ThreadClass, usize> = HashMap::new();
        let mut queue = VecDeque::new();
        let mut parts = Vec::new();
        local.insert(self.class(n), 0);
        queue.push_back(self.class(n));
        while let Some(c) = queue.pop_front() {
            let part = match &self.nodes[rep[&c].index()] {
                Node::Stop => "S".to_string(),
                Node::DeadEnd => "D".to_string(),
                Node::Post {
                    left,
                    action,
                    right,
                } => {
                    let mut idx = |id: NodeId| {
                        let cls = self.class(id);
                        let next = local.len();
                        *local.entry(cls).or_insert_with(|| {
                            queue.push_back(cls);
                            next
                        })
                    };
                    let l = idx(*left);
                    let r = idx(*right);
                    format!("P({action:?},{l},{r})")
                }
            };
            parts.push(part);
        }
        CanonicalId(parts.join(";"))
    }

    /// Prints the part reachable from the root in the file syntax.
    pub fn to_spec_text(&self, u: &Universe) -> String {
        let reachable = self.residuals();
        let mut names: HashMap<NodeId, String> = HashMap::new();
        let mut taken: BTreeSet<String> = BTreeSet::new();
        for &id in &reachable {
            if let Some(l) = self.label(id) {
                names.insert(id, l.to_string());
                taken.insert(l.to_string());
            }
        }
        for &id in &reachable {
            names.entry(id).or_insert_with(|| {
                let mut name = format!("_n{}", id.0);
                while taken.contains(&name) {
                    name.push('_');
                }
                taken.insert(name.clone());
                name
            });
        }
        let branch = |id: NodeId| match self.node(id) {
            Node::Stop => "stop".to_string(),
            Node::DeadEnd => "dead".to_string(),
            Node::Post { .. } => names[&id].clone(),
        };
        let mut out = String::new();
        let mut order: Vec<NodeId> = reachable.iter().copied().collect();
        order.sort_by_key(|&id| (id != self.root, id));
        for id in order {
            let line = match self.node(id) {
                Node::Stop if id == self.root => format!("{} := stop", names[&id]),
                Node::DeadEnd if id == self.root => format!("{} := dead", names[&id]),
                Node::Stop | Node::DeadEnd => continue,
                Node::Post {
                    left,
                    action: ThreadAction::Tau,
                    ..
                } => {
                    format!("{} := tau; {}", names[&id], branch(*left))
                }
                Node::Post {
                    left,
                    action,
                    right,
                } => format!(
                    "{} := <{}> {} <{}>",
                    names[&id],
                    branch(*left),
                    action.display(u),
                    branch(*right)
                ),
            };
            out.push_str(&line);
            out.push('\n');
        }
        out.push_str(&format!("start {}\n", names[&self.root]));
        out
    }
}

#[derive(Default)]
struct Builder {
    nodes: Vec<Option<Node>>,
    labels: Vec<Option<String>>,
    stop: Option<NodeId>,
    dead: Option<NodeId>,
}

impl Builder {
    fn push(&mut self, node: Option<Node>) -> NodeId {
        self.nodes.push(node);
        self.labels.push(None);
        NodeId(self.nodes.len() as u32 - 1)
    }

    fn reserve(&mut self) -> NodeId {
        self.push(None)
    }

    fn stop(&mut self) -> NodeId {
        match self.stop {
            Some(id) => id,
            None => {
                let id = self.push(Some(Node::Stop));
                self.stop = Some(id);
                id
            }
        }
    }

    fn dead(&mut self) -> NodeId {
        match self.dead {
            Some(id) => id,
            None => {
                let id = self.push(Some(Node::DeadEnd));
                self.dead = Some(id);
                id
            }
        }
    }

    fn post(&self, left: NodeId, action: ThreadAction, right: NodeId) -> Node {
        let right = if action == ThreadAction::Tau {
            left
        } else {
            right
        };
        Node::Post {
            left,
            action,
            right,
        }
    }

    fn term(&mut self, t: &ThreadTerm, vars: &HashMap<&str, NodeId>) -> Result<NodeId> {
        match t {
            ThreadTerm::Stop => Ok(self.stop()),
            ThreadTerm::DeadEnd => Ok(self.dead()),
            ThreadTerm::Var(v) => vars
                .get(v.as_str())
                .copied()
                .ok_or_else(|| Error::Thread(format!("variable `{v}` is not defined"))),
            ThreadTerm::Post(l, action, r) => {
                let id = self.reserve();
                let left = self.term(l, vars)?;
                let right = self.term(r, vars)?;
                self.nodes[id.index()] = Some(self.post(left, action.clone(), right));
                Ok(id)
            }
        }
    }
}

/// Moore-style partition refinement over the deterministic two-successor
/// graph. Class numbers follow first appearance by node index.
fn refine(nodes: &[Node]) -> Vec<ThreadClass> {
    #[derive(PartialEq, Eq, Hash)]
    enum Shape<'a> {
        Stop,
        Dead,
        Post(&'a ThreadAction),
    }
    let mut ids: HashMap<Shape<'_>, u32> = HashMap::new();
    let mut class: Vec<u32> = nodes
        .iter()
        .map(|n| {
            let shape = match n {
                Node::Stop => Shape::Stop,
                Node::DeadEnd => Shape::Dead,
                Node::Post { action, .. } => Shape::Post(action),
            };
            let next = ids.len() as u32;
            *ids.entry(shape).or_insert(next)
        })
        .collect();
    let mut count = ids.len();
    loop {
        let mut ids: HashMap<(u32, u32, u32), u32> = HashMap::new();
        let next: Vec<u32> = nodes
            .iter()
            .enumerate()
            .map(|(i, n)| {
                let key = match n {
                    Node::Post { left, right, .. } => {
                        (class[i], class[left.index()], class[right.index()])
                    }
                    _ => (class[i], u32::MAX, u32::MAX),
                };
                let fresh = ids.len() as u32;
                *ids.entry(key).or_insert(fresh)
            })
            .collect();
        let stable = ids.len() == count;
        count = ids.len();
        class = next;
        if stable {
            return class.into_iter().map(ThreadClass).collect();
        }
    }
}

impl ThreadSpec {
    /// Parses the thread file syntax. Methods under the `dld` focus must be
    /// basic actions over `u`.
    pub fn parse(text: &str, u: &Universe) -> Result<ThreadSpec> {
        Self::parse_lines(text.lines().enumerate().map(|(i, l)| (i + 1, l)), u)
    }

    /// Like [`ThreadSpec::parse`] but with caller-supplied line numbers.
    pub fn parse_lines<'a>(
        lines: impl IntoIterator<Item = (usize, &'a str)>,
        u: &Universe,
    ) -> Result<ThreadSpec> {
        let mut equations = Vec::new();
        let mut start = None;
        let mut last_line = 0;
        for (no, raw) in lines {
            last_line = no;
            let line = strip_comment(raw).trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix("start ") {
                let name = rest.trim();
                if !is_identifier(name) {
                    return Err(Error::parse(format!("bad start variable `{name}`")).at_line(no));
                }
                if start.replace(name.to_string()).is_some() {
                    return Err(Error::parse("more than one start directive").at_line(no));
                }
                continue;
            }
            let (lhs, rhs) = line
                .split_once(":=")
                .ok_or_else(|| Error::parse("expected `X := ...` or `start X`").at_line(no))?;
            let name = lhs.trim();
            if !is_identifier(name) || KEYWORDS.contains(&name) {
                return Err(Error::parse(format!("bad variable name `{name}`")).at_line(no));
            }
            let term = TermParser::new(rhs, u)
                .parse_all()
                .map_err(|e| e.at_line(no))?;
            equations.push((name.to_string(), term));
        }
        let start = match start {
            Some(s) => s,
            None => equations
                .first()
                .map(|(n, _)| n.clone())
                .ok_or_else(|| Error::parse("no equations").at_line(last_line.max(1)))?,
        };
        Ok(ThreadSpec { equations, start })
    }
}

const KEYWORDS: &[&str] = &["stop", "dead", "tau", "start"];

fn strip_comment(line: &str) -> &str {
    line.split('#').next().unwrap_or("")
}

struct TermParser<'a> {
    src: &'a str,
    pos: usize,
    u: &'a Universe,
}

impl<'a> TermParser<'a> {
    fn new(src: &'a str, u: &'a Universe) -> Self {
        TermParser { src, pos: 0, u }
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn skip_ws(&mut self) {
        let trimmed = self.rest().trim_start();
        self.pos = self.src.len() - trimmed.len();
    }

    fn eat(&mut self, s: &str) -> bool {
        self.skip_ws();
        if self.rest().starts_with(s) {
            self.pos += s.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, s: &str) -> Result<()> {
        if self.eat(s) {
            Ok(())
        } else {
            Err(Error::parse(format!(
                "expected `{s}` at `{}`",
                self.rest().trim()
            )))
        }
    }

    fn ident(&mut self) -> Result<&'a str> {
        self.skip_ws();
        let rest = self.rest();
        let len = rest
            .char_indices()
            .find(|&(_, c)| !(c.is_ascii_alphanumeric() || c == '_'))
            .map_or(rest.len(), |(i, _)| i);
        let word = &rest[..len];
        if !is_identifier(word) {
            return Err(Error::parse(format!(
                "expected a name at `{}`",
                rest.trim()
            )));
        }
        self.pos += len;
        Ok(word)
    }

    fn parse_all(mut self) -> Result<ThreadTerm> {
        let t = self.term()?;
        self.skip_ws();
        if !self.rest().is_empty() {
            return Err(Error::parse(format!("trailing input `{}`", self.rest())));
        }
        Ok(t)
    }

    fn term(&mut self) -> Result<ThreadTerm> {
        if self.eat("<") {
            let left = self.term()?;
            self.expect(">")?;
            let focus = self.ident()?;
            self.expect("(")?;
            let close = self
                .rest()
                .find(')')
                .ok_or_else(|| Error::parse("missing `)` after method"))?;
            let method_text = &self.rest()[..close];
            self.pos += close + 1;
            self.expect("<")?;
            let right = self.term()?;
            self.expect(">")?;
            let action = self.action(focus, method_text)?;
            return Ok(ThreadTerm::post(left, action, right));
        }
        let word = self.ident()?;
        match word {
            "stop" => Ok(ThreadTerm::Stop),
            "dead" => Ok(ThreadTerm::DeadEnd),
            "tau" => {
                self.expect(";")?;
                let next = self.term()?;
                Ok(ThreadTerm::prefix(ThreadAction::Tau, next))
            }
            "start" => Err(Error::parse("`start` is a keyword")),
            v => Ok(ThreadTerm::var(v)),
        }
    }

    fn action(&self, focus: &str, method: &str) -> Result<ThreadAction> {
        let method = method.trim();
        if method.is_empty() {
            return Err(Error::parse(format!("empty method for focus `{focus}`")));
        }
        if focus == DLD_FOCUS {
            Ok(ThreadAction::dld(DldAction::parse(method, self.u)?))
        } else {
            Ok(ThreadAction::call(focus, method))
        }
    }
}
