//! Workspace files and the commands of the `linkdyn` tool.
//!
//! A workspace is a sectioned text file:
//!
//! ```text
//! [universe]
//! spots = s, t
//! fields = f
//! atoms = a
//! values = n
//! [state]
//! s = a
//! [thread]
//! P := <stop> dld(t = fresh) <dead>
//! start P
//! [oracle]
//! true false
//! [fuel]
//! 10000
//! ```
//!
//! Lines starting with `#` are comments. Only `[universe]` is required.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use linkdyn_core::dla::term::{normalize_text, parse_link};
use linkdyn_core::dld::reachable_atoms;
use linkdyn_core::service::{run, DldService, ServiceKind, Trace};
use linkdyn_core::shedding::{shok_member_with_witness, ShedVerdict};
use linkdyn_core::{AtomicLink, DataLinkage, ThreadGraph, ThreadSpec, Universe};

pub const DEFAULT_FUEL: usize = 10_000;
pub const DEFAULT_BOUND: usize = 1_000_000;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(#[from] linkdyn_core::Error),
    #[error("line {line}: {message}")]
    Workspace { line: usize, message: String },
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(linkdyn_core::Error::BoundExceeded(_)) => 2,
            _ => 1,
        }
    }
}

fn ws_err(line: usize, message: impl Into<String>) -> CliError {
    CliError::Workspace {
        line,
        message: message.into(),
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Clone, Debug)]
pub struct Workspace {
    pub universe: Universe,
    pub initial: DataLinkage,
    pub thread: Option<ThreadSpec>,
    pub oracle: Vec<bool>,
    pub fuel: usize,
}

#[derive(Default)]
struct Section<'a> {
    header: usize,
    lines: Vec<(usize, &'a str)>,
}

const SECTIONS: [&str; 5] = ["universe", "state", "thread", "oracle", "fuel"];

impl Workspace {
    pub fn load(path: &str) -> Result<Workspace> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_string(),
            source,
        })?;
        Workspace::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Workspace> {
        let mut sections: [Option<Section>; 5] = Default::default();
        let mut current: Option<usize> = None;
        for (i, raw) in text.lines().enumerate() {
            let no = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                let idx = SECTIONS
                    .iter()
                    .position(|s| *s == name.trim())
                    .ok_or_else(|| ws_err(no, format!("unknown section [{}]", name.trim())))?;
                if sections[idx].is_some() {
                    return Err(ws_err(no, format!("section [{name}] appears twice")));
                }
                sections[idx] = Some(Section {
                    header: no,
                    lines: Vec::new(),
                });
                current = Some(idx);
                continue;
            }
            let idx = current.ok_or_else(|| ws_err(no, "content before the first section"))?;
            sections[idx].as_mut().unwrap().lines.push((no, line));
        }
        let [universe, state, thread, oracle, fuel] = sections;
        let universe =
            parse_universe(universe.ok_or_else(|| ws_err(1, "missing [universe] section"))?)?;
        let mut initial = DataLinkage::empty();
        for (no, line) in state.map(|s| s.lines).unwrap_or_default() {
            let link = parse_link(line, &universe).map_err(|e| e.at_line(no))?;
            initial.insert(link);
        }
        let thread = match thread {
            Some(s) if s.lines.is_empty() => {
                return Err(ws_err(s.header, "empty [thread] section"))
            }
            Some(s) => Some(ThreadSpec::parse_lines(s.lines, &universe)?),
            None => None,
        };
        let mut replies = Vec::new();
        for (no, line) in oracle.map(|s| s.lines).unwrap_or_default() {
            for tok in line.split_whitespace() {
                replies.push(match tok {
                    "true" => true,
                    "false" => false,
                    other => {
                        return Err(ws_err(
                            no,
                            format!("oracle replies are true or false, not `{other}`"),
                        ))
                    }
                });
            }
        }
        let fuel = match fuel {
            None => DEFAULT_FUEL,
            Some(s) => match s.lines.as_slice() {
                [(no, l)] => match l.parse::<usize>() {
                    Ok(n) if n > 0 => n,
                    _ => {
                        return Err(ws_err(
                            *no,
                            format!("fuel must be a positive number, not `{l}`"),
                        ))
                    }
                },
                _ => return Err(ws_err(s.header, "[fuel] takes exactly one number")),
            },
        };
        Ok(Workspace {
            universe,
            initial,
            thread,
            oracle: replies,
            fuel,
        })
    }

    pub fn graph(&self) -> Result<ThreadGraph> {
        let spec = self
            .thread
            .as_ref()
            .ok_or_else(|| ws_err(1, "the workspace has no [thread] section"))?;
        Ok(ThreadGraph::build(spec)?)
    }
}

fn parse_universe(section: Section) -> Result<Universe> {
    let mut lists: [Option<Vec<String>>; 4] = Default::default();
    const KEYS: [&str; 4] = ["spots", "fields", "atoms", "values"];
    for (no, line) in section.lines {
        let (key, rest) = line.split_once('=').ok_or_else(|| {
            ws_err(
                no,
                "expected `spots = ...`, `fields = ...`, `atoms = ...` or `values = ...`",
            )
        })?;
        let idx = KEYS
            .iter()
            .position(|k| *k == key.trim())
            .ok_or_else(|| ws_err(no, format!("unknown universe key `{}`", key.trim())))?;
        if lists[idx].is_some() {
            return Err(ws_err(no, format!("`{}` given twice", KEYS[idx])));
        }
        let names = rest
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(str::to_string)
            .collect();
        lists[idx] = Some(names);
    }
    let [spots, fields, atoms, values] = lists.map(Option::unwrap_or_default);
    Universe::new(spots, fields, atoms, values).map_err(|e| ws_err(section.header, e.to_string()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum ServiceChoice {
    Plain,
    Shed,
}

/// Atom counts of one state.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GarbageReport {
    pub links: usize,
    pub occurring: usize,
    pub reachable: usize,
    pub reclaimable: usize,
}

impl GarbageReport {
    pub fn of(l: &DataLinkage, u: &Universe) -> GarbageReport {
        let occurring: BTreeSet<_> = l
            .occurring_atoms()
            .into_iter()
            .filter(|a| a.is_real())
            .collect();
        let reachable: BTreeSet<_> = reachable_atoms(l, u)
            .into_iter()
            .filter(|a| a.is_real())
            .collect();
        GarbageReport {
            links: l.len(),
            occurring: occurring.len(),
            reachable: occurring.intersection(&reachable).count(),
            reclaimable: occurring.difference(&reachable).count(),
        }
    }
}

pub struct RunOutput {
    pub trace: Trace,
    /// One report per event, for the state after it.
    pub garbage: Vec<Option<GarbageReport>>,
    pub text: String,
}

pub struct RunOptions {
    pub service: ServiceChoice,
    pub states: bool,
    pub garbage: bool,
    pub fuel: Option<usize>,
    pub bound: usize,
}

pub fn cmd_run(ws: &Workspace, opts: &RunOptions) -> Result<RunOutput> {
    let g = ws.graph()?;
    let kind = match opts.service {
        ServiceChoice::Plain => ServiceKind::Plain,
        ServiceChoice::Shed => ServiceKind::Shedding,
    };
    let h = DldService::new(kind, &ws.universe, ws.initial.clone())?.with_shed_bound(opts.bound);
    let trace = run(
        &g,
        linkdyn_core::thread::DLD_FOCUS,
        h,
        &ws.oracle,
        opts.fuel.unwrap_or(ws.fuel),
    )?;
    let garbage: Vec<_> = trace
        .states
        .iter()
        .map(|s| s.linkage().map(|l| GarbageReport::of(l, &ws.universe)))
        .collect();
    let mut text = trace.render(&ws.universe, opts.states);
    if opts.garbage {
        for (i, r) in garbage.iter().enumerate() {
            match r {
                Some(r) => writeln!(
                    text,
                    "garbage {}: links {} occurring {} reachable {} reclaimable {}",
                    i + 1,
                    r.links,
                    r.occurring,
                    r.reachable,
                    r.reclaimable
                )
                .unwrap(),
                None => writeln!(text, "garbage {}: blocked", i + 1).unwrap(),
            }
        }
    }
    Ok(RunOutput {
        trace,
        garbage,
        text,
    })
}

pub fn cmd_shed_check(ws: &Workspace, bound: usize) -> Result<(ShedVerdict, String)> {
    let g = ws.graph()?;
    let v = shok_member_with_witness(&g, g.root(), &ws.initial, &ws.universe, bound)?;
    let mut text = format!("member: {}\nexplored: {}\n", v.member, v.explored);
    if let Some(path) = &v.evidence {
        text.push_str("witness:\n");
        let mu = ws.universe.mimic();
        for step in path {
            writeln!(text, "  {}", step.display(&mu)).unwrap();
        }
    }
    Ok((v, text))
}

pub fn cmd_normalize(ws: &Workspace, term: &str) -> Result<String> {
    let l = normalize_text(term, &ws.universe)?;
    Ok(format!("{}\n", l.display(&ws.universe)))
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// The heap graph of `l`: atoms as nodes, spots as boxes pointing at their
/// atoms, fields as labelled edges, partial fields as edges to a point.
pub fn cmd_dot(l: &DataLinkage, u: &Universe) -> String {
    let mut out = String::from("digraph linkage {\n");
    let atoms: BTreeSet<_> = l.occurring_atoms().into_iter().collect();
    for a in &atoms {
        let name = u.atom_name(*a);
        let values: Vec<&str> = l
            .iter()
            .filter_map(|link| match *link {
                AtomicLink::Value(c, n) if c == *a => Some(u.value_name(n)),
                _ => None,
            })
            .collect();
        if values.is_empty() {
            writeln!(out, "  {} [shape=circle];", quote(name)).unwrap();
        } else {
            let label = format!("{name}\\n{}", values.join(", "));
            writeln!(out, "  {} [shape=circle, label=\"{label}\"];", quote(name)).unwrap();
        }
    }
    let spots: BTreeSet<_> = l
        .iter()
        .filter_map(|link| match *link {
            AtomicLink::Spot(s, _) => Some(s),
            _ => None,
        })
        .collect();
    for s in &spots {
        let name = u.spot_name(*s);
        writeln!(
            out,
            "  {} [shape=box, label={}];",
            quote(&format!("spot {name}")),
            quote(name)
        )
        .unwrap();
    }
    for link in l.iter() {
        match *link {
            AtomicLink::Spot(s, a) => writeln!(
                out,
                "  {} -> {};",
                quote(&format!("spot {}", u.spot_name(s))),
                quote(u.atom_name(a))
            ),
            AtomicLink::Field(a, f, b) => writeln!(
                out,
                "  {} -> {} [label={}];",
                quote(u.atom_name(a)),
                quote(u.atom_name(b)),
                quote(u.field_name(f))
            ),
            AtomicLink::PartialField(a, f) => {
                let half = format!("{}.{}", u.atom_name(a), u.field_name(f));
                writeln!(out, "  {} [shape=point];", quote(&half)).unwrap();
                writeln!(
                    out,
                    "  {} -> {} [label={}, arrowhead=none];",
                    quote(u.atom_name(a)),
                    quote(&half),
                    quote(u.field_name(f))
                )
            }
            AtomicLink::Value(..) => Ok(()),
        }
        .unwrap();
    }
    out.push_str("}\n");
    out
}

/// Runs the randomised law suite and renders one line per law.
pub fn cmd_selftest(seed: u64, per_law: usize) -> (bool, String) {
    use rand::SeedableRng;
    let u = Universe::new(["s", "t", "r"], ["f", "g"], ["a", "b", "c"], ["n", "m"])
        .expect("fixed universe is valid");
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
    let mut ok = true;
    let mut text = String::new();
    for out in linkdyn_core::dla::laws::check_laws(&u, per_law, &mut rng) {
        let pass = out.violations == 0 && out.checked == per_law;
        ok &= pass;
        writeln!(
            text,
            "{} {}: {} checked, {} violations",
            if pass { "ok" } else { "FAIL" },
            out.name,
            out.checked,
            out.violations
        )
        .unwrap();
    }
    (ok, text)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str =
        "[universe]\nspots = s\nfields = f\natoms = a\nvalues = n\n[thread]\nX := stop\n";

    #[test]
    fn minimal_workspace() {
        let ws = Workspace::parse(MINIMAL).unwrap();
        assert!(ws.initial.is_empty());
        assert_eq!(ws.fuel, DEFAULT_FUEL);
        assert!(ws.graph().is_ok());
    }

    #[test]
    fn errors_have_lines() {
        let text = "[universe]\nspots = s\nfields = f\natoms = a\nvalues = n\n[state]\nt = a\n";
        let err = Workspace::parse(text).unwrap_err();
        assert!(err.to_string().starts_with("line 7"), "{err}");
        let err = Workspace::parse("[universe]\nspots = s\n[bogus]\n").unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
        let err =
            Workspace::parse(&format!("{MINIMAL}Y := <stop> dld(q = fresh) <stop>\n")).unwrap_err();
        assert!(err.to_string().contains("line 8"), "{err}");
        let err = Workspace::parse(&format!("{MINIMAL}[fuel]\nlots\n")).unwrap_err();
        assert!(err.to_string().contains("line 9"), "{err}");
    }

    #[test]
    fn dot_shapes() {
        let ws = Workspace::parse("[universe]\nspots = s\nfields = f\natoms = a, b\nvalues = n\n[state]\ns = a\na.f = b\n").unwrap();
        let dot = cmd_dot(&ws.initial, &ws.universe);
        assert_eq!(dot.matches("shape=circle").count(), 2);
        assert_eq!(dot.matches("shape=box").count(), 1);
        assert_eq!(dot.matches("->").count(), 2);
        assert_eq!(
            cmd_dot(&DataLinkage::empty(), &ws.universe),
            "digraph linkage {\n}\n"
        );
    }

    #[test]
    fn normalize_outputs() {
        let ws = Workspace::parse(MINIMAL).unwrap();
        assert_eq!(cmd_normalize(&ws, "empty (+) (s = a)").unwrap(), "s = a\n");
        let ws = Workspace::parse("[universe]\nspots = s\nfields = f\natoms = a, b\nvalues = n\n")
            .unwrap();
        assert_eq!(
            cmd_normalize(&ws, "(s = a) (>) (s = b)").unwrap(),
            "s = b\n"
        );
    }

    #[test]
    fn garbage_counts() {
        let ws = Workspace::parse("[universe]\nspots = s\nfields = f\natoms = a, b, c\nvalues = n\n[state]\ns = a\nb.f = c\n").unwrap();
        let r = GarbageReport::of(&ws.initial, &ws.universe);
        assert_eq!(
            r,
            GarbageReport {
                links: 2,
                occurring: 3,
                reachable: 1,
                reclaimable: 2
            }
        );
    }
}
