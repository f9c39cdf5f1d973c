//! Basic actions on data linkages: their effect and reply.
//!
//! A spot or field that an action consults must be locally deterministic;
//! if it is not, the state is left alone and the reply is `false`. Spots and
//! fields that are only written are overridden whatever their multiplicity.

use std::collections::BTreeSet;
use std::fmt;

use crate::dla::{AtomicLink, DataLinkage, FieldGroup, LinkKey, SpotContent};
use crate::error::{Error, Result};
use crate::universe::{Atom, Field, Spot, Universe};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DldAction {
    /// `s = fresh`
    GetFresh(Spot),
    /// `dst = src`
    SetSpot { dst: Spot, src: Spot },
    /// `clr s`
    ClrSpot(Spot),
    /// `s == t`
    EqualTst(Spot, Spot),
    /// `undef s`
    UndefTst(Spot),
    /// `s +. f`
    AddField(Spot, Field),
    /// `s -. f`
    RmvField(Spot, Field),
    /// `s ?. f`
    HasField(Spot, Field),
    /// `obj.field = src`
    SetField { obj: Spot, field: Field, src: Spot },
    /// `clr s.f`
    ClrField(Spot, Field),
    /// `dst = src.field`
    GetField { dst: Spot, src: Spot, field: Field },
    /// `fgc`
    Fgc,
    /// `s = !pso`
    SetSpotPso(Spot),
    /// `s = !sso`
    SetSpotSso(Spot),
    /// `s.f = !pso`
    SetFieldPso(Spot, Field),
    /// `s.f = !sso`
    SetFieldSso(Spot, Field),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EffectResult {
    pub next: DataLinkage,
    pub reply: bool,
}

impl DldAction {
    /// True for the four actions that write the mimic atoms.
    pub fn is_mimic_only(&self) -> bool {
        matches!(
            self,
            DldAction::SetSpotPso(_)
                | DldAction::SetSpotSso(_)
                | DldAction::SetFieldPso(..)
                | DldAction::SetFieldSso(..)
        )
    }

    /// True for the actions that change the content of a spot or field and
    /// are therefore candidates for shedding.
    pub fn changes_content(&self) -> bool {
        matches!(
            self,
            DldAction::GetFresh(_)
                | DldAction::SetSpot { .. }
                | DldAction::SetField { .. }
                | DldAction::GetField { .. }
        )
    }

    /// True for the three test actions, which never change the state.
    pub fn is_test(&self) -> bool {
        matches!(
            self,
            DldAction::EqualTst(..) | DldAction::UndefTst(_) | DldAction::HasField(..)
        )
    }

    pub fn belongs_to(&self, u: &Universe) -> bool {
        use DldAction::*;
        let spots_ok = |ss: &[Spot]| ss.iter().all(|&s| u.has_spot(s));
        match *self {
            GetFresh(s) | ClrSpot(s) | UndefTst(s) | SetSpotPso(s) | SetSpotSso(s) => {
                spots_ok(&[s])
            }
            SetSpot { dst, src } => spots_ok(&[dst, src]),
            EqualTst(s, t) => spots_ok(&[s, t]),
            AddField(s, f) | RmvField(s, f) | HasField(s, f) | ClrField(s, f) => {
                spots_ok(&[s]) && u.has_field(f)
            }
            SetFieldPso(s, f) | SetFieldSso(s, f) => spots_ok(&[s]) && u.has_field(f),
            SetField { obj, field, src } => spots_ok(&[obj, src]) && u.has_field(field),
            GetField { dst, src, field } => spots_ok(&[dst, src]) && u.has_field(field),
            Fgc => true,
        }
    }

    pub fn display<'a>(&'a self, u: &'a Universe) -> impl fmt::Display + 'a {
        ActionDisplay { a: self, u }
    }

    /// Parses the action surface syntax against `u`. The mimic-only forms
    /// are accepted only when `u` is a mimicking universe.
    pub fn parse(text: &str, u: &Universe) -> Result<DldAction> {
        let toks = tokenize(text)?;
        let spot = |n: &str| u.spot(n);
        let field = |n: &str| u.field(n);
        use Tok::*;
        let action = match toks.as_slice() {
            [Word(w)] if w == "fgc" => DldAction::Fgc,
            [Word(c), Word(s), Dot, Word(f)] if c == "clr" => {
                DldAction::ClrField(spot(s)?, field(f)?)
            }
            [Word(c), Word(s)] if c == "clr" => DldAction::ClrSpot(spot(s)?),
            [Word(c), Word(s)] if c == "undef" => DldAction::UndefTst(spot(s)?),
            [Word(s), EqEq, Word(t)] => DldAction::EqualTst(spot(s)?, spot(t)?),
            [Word(s), PlusDot, Word(f)] => DldAction::AddField(spot(s)?, field(f)?),
            [Word(s), MinusDot, Word(f)] => DldAction::RmvField(spot(s)?, field(f)?),
            [Word(s), QueryDot, Word(f)] => DldAction::HasField(spot(s)?, field(f)?),
            [Word(s), Dot, Word(f), Eq, Special(m)] => {
                let (s, f) = (spot(s)?, field(f)?);
                mimic(u, text)?;
                if *m == Atom::Pso {
                    DldAction::SetFieldPso(s, f)
                } else {
                    DldAction::SetFieldSso(s, f)
                }
            }
            [Word(s), Dot, Word(f), Eq, Word(t)] => DldAction::SetField {
                obj: spot(s)?,
                field: field(f)?,
                src: spot(t)?,
            },
            [Word(s), Eq, Word(w)] if w == "fresh" => DldAction::GetFresh(spot(s)?),
            [Word(s), Eq, Special(m)] => {
                let s = spot(s)?;
                mimic(u, text)?;
                if *m == Atom::Pso {
                    DldAction::SetSpotPso(s)
                } else {
                    DldAction::SetSpotSso(s)
                }
            }
            [Word(s), Eq, Word(t), Dot, Word(f)] => DldAction::GetField {
                dst: spot(s)?,
                src: spot(t)?,
                field: field(f)?,
            },
            [Word(s), Eq, Word(t)] => DldAction::SetSpot {
                dst: spot(s)?,
                src: spot(t)?,
            },
            _ => {
                return Err(Error::parse(format!(
                    "`{}` is not a basic action",
                    text.trim()
                )))
            }
        };
        Ok(action)
    }
}

fn mimic(u: &Universe, text: &str) -> Result<()> {
    if u.is_mimic() {
        Ok(())
    } else {
        Err(Error::MimicOnly(text.trim().to_string()))
    }
}

#[derive(Debug, PartialEq, Eq)]
enum Tok {
    Word(String),
    Special(Atom),
    Eq,
    EqEq,
    Dot,
    PlusDot,
    MinusDot,
    QueryDot,
}

fn tokenize(text: &str) -> Result<Vec<Tok>> {
    let mut out = Vec::new();
    let mut chars = text.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        match c {
            c if c.is_whitespace() => {}
            '=' => {
                if chars.peek().map(|&(_, c)| c) == Some('=') {
                    chars.next();
                    out.push(Tok::EqEq);
                } else {
                    out.push(Tok::Eq);
                }
            }
            '.' => out.push(Tok::Dot),
            '+' | '-' | '?' => match chars.next() {
                Some((_, '.')) => out.push(match c {
                    '+' => Tok::PlusDot,
                    '-' => Tok::MinusDot,
                    _ => Tok::QueryDot,
                }),
                _ => {
                    return Err(Error::parse(format!(
                        "expected `{c}.` in `{}`",
                        text.trim()
                    )))
                }
            },
            c if c.is_ascii_alphanumeric() || c == '_' || c == '!' => {
                let mut end = i + c.len_utf8();
                while let Some(&(j, d)) = chars.peek() {
                    if d.is_ascii_alphanumeric() || d == '_' {
                        end = j + d.len_utf8();
                        chars.next();
                    } else {
                        break;
                    }
                }
                let word = &text[i..end];
                out.push(match word {
                    "!pso" => Tok::Special(Atom::Pso),
                    "!sso" => Tok::Special(Atom::Sso),
                    w if w.starts_with('!') => {
                        return Err(Error::parse(format!("unknown special atom `{w}`")))
                    }
                    w => Tok::Word(w.to_string()),
                });
            }
            _ => {
                return Err(Error::parse(format!(
                    "unexpected `{c}` in `{}`",
                    text.trim()
                )))
            }
        }
    }
    Ok(out)
}

struct ActionDisplay<'a> {
    a: &'a DldAction,
    u: &'a Universe,
}

impl fmt::Display for ActionDisplay<'_> {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        let u = self.u;
        let s = |x: Spot| u.spot_name(x);
        let f = |x: Field| u.field_name(x);
        match *self.a {
            DldAction::GetFresh(x) => write!(out, "{} = fresh", s(x)),
            DldAction::SetSpot { dst, src } => write!(out, "{} = {}", s(dst), s(src)),
            DldAction::ClrSpot(x) => write!(out, "clr {}", s(x)),
            DldAction::EqualTst(x, y) => write!(out, "{} == {}", s(x), s(y)),
            DldAction::UndefTst(x) => write!(out, "undef {}", s(x)),
            DldAction::AddField(x, g) => write!(out, "{} +. {}", s(x), f(g)),
            DldAction::RmvField(x, g) => write!(out, "{} -. {}", s(x), f(g)),
            DldAction::HasField(x, g) => write!(out, "{} ?. {}", s(x), f(g)),
            DldAction::SetField { obj, field, src } => {
                write!(out, "{}.{} = {}", s(obj), f(field), s(src))
            }
            DldAction::ClrField(x, g) => write!(out, "clr {}.{}", s(x), f(g)),
            DldAction::GetField { dst, src, field } => {
                write!(out, "{} = {}.{}", s(dst), s(src), f(field))
            }
            DldAction::Fgc => out.write_str("fgc"),
            DldAction::SetSpotPso(x) => write!(out, "{} = !pso", s(x)),
            DldAction::SetSpotSso(x) => write!(out, "{} = !sso", s(x)),
            DldAction::SetFieldPso(x, g) => write!(out, "{}.{} = !pso", s(x), f(g)),
            DldAction::SetFieldSso(x, g) => write!(out, "{}.{} = !sso", s(x), f(g)),
        }
    }
}

/// Allocates the least atom (in declaration order) that occurs nowhere in
/// `l`. The mimic atoms are never candidates.
pub fn fresh(l: &DataLinkage, u: &Universe) -> Option<Atom> {
    let used = l.occurring_atoms();
    u.atoms().find(|a| !used.contains(a))
}

/// Atoms reachable from the roots via field links. Roots are the spot
/// contents, plus the mimic atoms in a mimicking universe.
pub fn reachable_atoms(l: &DataLinkage, u: &Universe) -> BTreeSet<Atom> {
    let mut reached: BTreeSet<Atom> = l
        .iter()
        .filter_map(|link| match *link {
            AtomicLink::Spot(_, a) => Some(a),
            _ => None,
        })
        .collect();
    if u.is_mimic() {
        reached.insert(Atom::Pso);
        reached.insert(Atom::Sso);
    }
    let mut frontier: Vec<Atom> = reached.iter().copied().collect();
    while let Some(a) = frontier.pop() {
        for link in l.iter() {
            if let AtomicLink::Field(from, _, to) = *link {
                if from == a && reached.insert(to) {
                    frontier.push(to);
                }
            }
        }
    }
    reached
}

/// Full garbage collection: drops every non-spot link whose carrier is
/// unreachable. Spot links are always kept.
pub fn fgc(l: &DataLinkage, u: &Universe) -> DataLinkage {
    let live = reachable_atoms(l, u);
    l.iter()
        .filter(|link| link.carrier().is_none_or(|a| live.contains(&a)))
        .copied()
        .collect()
}

/// Effect and reply of `action` in state `l`.
pub fn effect(action: &DldAction, l: &DataLinkage, u: &Universe) -> Result<EffectResult> {
    if action.is_mimic_only() && !u.is_mimic() {
        return Err(Error::MimicOnly(format!("{action:?}")));
    }
    Ok(apply(action, l, u))
}

/// [`effect`] without the legality check; callers guarantee it.
pub(crate) fn apply(action: &DldAction, l: &DataLinkage, u: &Universe) -> EffectResult {
    let done = |next: DataLinkage| EffectResult { next, reply: true };
    let unchanged = |reply: bool| EffectResult {
        next: l.clone(),
        reply,
    };
    // content of a spot that the action consults
    let read = |s: Spot| l.content_of_spot(s);

    match *action {
        DldAction::GetFresh(s) => match fresh(l, u) {
            Some(a) => done(l.override_with(AtomicLink::Spot(s, a))),
            None => unchanged(false),
        },
        DldAction::SetSpot { dst, src } => match read(src) {
            SpotContent::Unique(a) => done(l.override_with(AtomicLink::Spot(dst, a))),
            SpotContent::Undefined => done(l.without_key(LinkKey::Spot(dst))),
            SpotContent::Multiple => unchanged(false),
        },
        DldAction::ClrSpot(s) => done(l.without_key(LinkKey::Spot(s))),
        DldAction::EqualTst(s, t) => match (read(s), read(t)) {
            (SpotContent::Unique(a), SpotContent::Unique(b)) => unchanged(a == b),
            _ => unchanged(false),
        },
        DldAction::UndefTst(s) => unchanged(read(s) == SpotContent::Undefined),
        DldAction::AddField(s, f) => match read(s) {
            SpotContent::Unique(a) if l.field_group(a, f) == FieldGroup::Absent => {
                done(l.combine(&std::iter::once(AtomicLink::PartialField(a, f)).collect()))
            }
            _ => unchanged(false),
        },
        DldAction::RmvField(s, f) => match read(s) {
            SpotContent::Unique(a) if l.field_group(a, f) != FieldGroup::Absent => {
                done(l.without_key(LinkKey::Field(a, f)))
            }
            _ => unchanged(false),
        },
        DldAction::HasField(s, f) => match read(s) {
            SpotContent::Unique(a) => unchanged(l.field_group(a, f) != FieldGroup::Absent),
            _ => unchanged(false),
        },
        DldAction::SetField { obj, field, src } => match (read(obj), read(src)) {
            (SpotContent::Unique(a), content) if has_single_group(l, a, field) => match content {
                SpotContent::Unique(b) => done(l.override_with(AtomicLink::Field(a, field, b))),
                SpotContent::Undefined => done(l.override_with(AtomicLink::PartialField(a, field))),
                SpotContent::Multiple => unchanged(false),
            },
            _ => unchanged(false),
        },
        DldAction::ClrField(s, f) => match read(s) {
            SpotContent::Unique(a) if l.field_group(a, f) != FieldGroup::Absent => {
                done(l.override_with(AtomicLink::PartialField(a, f)))
            }
            _ => unchanged(false),
        },
        DldAction::GetField { dst, src, field } => match read(src) {
            SpotContent::Unique(a) => match l.field_group(a, field) {
                FieldGroup::Unique(b) => done(l.override_with(AtomicLink::Spot(dst, b))),
                FieldGroup::UndefinedContent => done(l.without_key(LinkKey::Spot(dst))),
                FieldGroup::Absent | FieldGroup::Multiple => unchanged(false),
            },
            _ => unchanged(false),
        },
        DldAction::Fgc => done(fgc(l, u)),
        DldAction::SetSpotPso(s) => done(l.override_with(AtomicLink::Spot(s, Atom::Pso))),
        DldAction::SetSpotSso(s) => done(l.override_with(AtomicLink::Spot(s, Atom::Sso))),
        DldAction::SetFieldPso(s, f) | DldAction::SetFieldSso(s, f) => match read(s) {
            SpotContent::Unique(a) if has_single_group(l, a, f) => {
                let mark = if matches!(action, DldAction::SetFieldPso(..)) {
                    Atom::Pso
                } else {
                    Atom::Sso
                };
                done(l.override_with(AtomicLink::Field(a, f, mark)))
            }
            _ => unchanged(false),
        },
    }
}

/// The field exists on `a` and is locally deterministic.
fn has_single_group(l: &DataLinkage, a: Atom, f: Field) -> bool {
    matches!(
        l.field_group(a, f),
        FieldGroup::Unique(_) | FieldGroup::UndefinedContent
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dla::term::normalize_text;

    fn one_atom() -> Universe {
        Universe::new(["s", "t", "u"], ["f"], ["a"], ["n"]).unwrap()
    }

    fn three() -> Universe {
        Universe::new(["s", "t", "u"], ["f", "g"], ["a", "b", "c"], ["n"]).unwrap()
    }

    fn st(text: &str, u: &Universe) -> DataLinkage {
        normalize_text(text, u).unwrap()
    }

    fn act(text: &str, u: &Universe) -> DldAction {
        DldAction::parse(text, u).unwrap()
    }

    fn run(a: &str, l: &str, u: &Universe) -> (DataLinkage, bool) {
        let r = effect(&act(a, u), &st(l, u), u).unwrap();
        (r.next, r.reply)
    }

    #[test]
    fn get_fresh_in_mimic_universe_skips_markers() {
        let m = one_atom().mimic();
        assert_eq!(
            run("t = fresh", "s = !pso", &m),
            (st("s = !pso (+) t = a", &m), true)
        );
    }

    #[test]
    fn get_fresh_fails_when_exhausted() {
        let u = one_atom();
        assert_eq!(run("t = fresh", "s = a", &u), (st("s = a", &u), false));
    }

    #[test]
    fn mimic_spot_writes() {
        let m = one_atom().mimic();
        assert_eq!(
            run("t = !sso", "s = !pso", &m),
            (st("s = !pso (+) t = !sso", &m), true)
        );
        assert!(matches!(
            effect(
                &DldAction::SetSpotSso(Spot(0)),
                &DataLinkage::empty(),
                &one_atom()
            ),
            Err(Error::MimicOnly(_))
        ));
    }

    #[test]
    fn undef_test_on_empty_state() {
        let u = one_atom();
        assert_eq!(run("undef s", "empty", &u), (DataLinkage::empty(), true));
        assert_eq!(run("undef s", "s = a", &u), (st("s = a", &u), false));
    }

    #[test]
    fn fresh_examples() {
        let u1 = one_atom();
        assert_eq!(fresh(&DataLinkage::empty(), &u1), Some(Atom::Obj(0)));
        assert_eq!(fresh(&st("s = a", &u1), &u1), None);
        let u3 = three();
        assert_eq!(fresh(&st("a.f = b", &u3), &u3), Some(Atom::Obj(2)));
        // a value carrier counts as an occurrence
        assert_eq!(fresh(&st("a : n", &u3), &u3), Some(Atom::Obj(1)));
    }

    #[test]
    fn fgc_examples() {
        let u = three();
        assert!(fgc(&DataLinkage::empty(), &u).is_empty());
        let all = st("s = a (+) a.f = b (+) b.g = c", &u);
        assert_eq!(fgc(&all, &u), all);
        assert_eq!(
            fgc(&st("s = a (+) b.f = c (+) b : n", &u), &u),
            st("s = a", &u)
        );
        let m = u.mimic();
        let marked = st("!pso.f = b (+) c.f = a", &m);
        assert_eq!(fgc(&marked, &m), st("!pso.f = b", &m));
    }

    #[test]
    fn spot_copy_and_clear() {
        let u = three();
        assert_eq!(
            run("t = s", "s = a (+) t = b", &u),
            (st("s = a (+) t = a", &u), true)
        );
        assert_eq!(run("t = s", "t = b", &u), (DataLinkage::empty(), true));
        assert_eq!(
            run("t = s", "s = a (+) s = b", &u),
            (st("s = a (+) s = b", &u), false)
        );
        // a written spot with several links is simply overridden
        assert_eq!(
            run("t = s", "s = a (+) t = a (+) t = b", &u),
            (st("s = a (+) t = a", &u), true)
        );
        assert_eq!(
            run("clr s", "s = a (+) s = b", &u),
            (DataLinkage::empty(), true)
        );
    }

    #[test]
    fn equality_test() {
        let u = three();
        assert!(run("s == t", "s = a (+) t = a", &u).1);
        assert!(!run("s == t", "s = a (+) t = b", &u).1);
        assert!(!run("s == t", "empty", &u).1);
        assert!(!run("s == s", "s = a (+) s = b", &u).1);
    }

    #[test]
    fn field_actions() {
        let u = three();
        assert_eq!(run("s +. f", "s = a", &u), (st("s = a (+) a.f", &u), true));
        assert!(!run("s +. f", "s = a (+) a.f", &u).1);
        assert!(!run("s +. f", "empty", &u).1);
        assert_eq!(
            run("s -. f", "s = a (+) a.f = b", &u),
            (st("s = a", &u), true)
        );
        assert!(!run("s -. f", "s = a", &u).1);
        assert!(run("s ?. f", "s = a (+) a.f", &u).1);
        assert!(!run("s ?. g", "s = a (+) a.f", &u).1);
        assert_eq!(
            run("s.f = t", "s = a (+) a.f (+) t = b", &u),
            (st("s = a (+) a.f = b (+) t = b", &u), true)
        );
        assert_eq!(
            run("s.f = t", "s = a (+) a.f = b", &u),
            (st("s = a (+) a.f", &u), true)
        );
        assert!(!run("s.f = t", "s = a (+) t = b", &u).1);
        assert!(!run("s.f = t", "s = a (+) a.f (+) a.f = c (+) t = b", &u).1);
        assert_eq!(
            run("clr s.f", "s = a (+) a.f = b", &u),
            (st("s = a (+) a.f", &u), true)
        );
        assert!(!run("clr s.f", "s = a", &u).1);
        assert_eq!(
            run("t = s.f", "s = a (+) a.f = b", &u),
            (st("s = a (+) a.f = b (+) t = b", &u), true)
        );
        assert_eq!(
            run("t = s.f", "s = a (+) a.f (+) t = c", &u),
            (st("s = a (+) a.f", &u), true)
        );
        assert!(!run("t = s.f", "s = a", &u).1);
    }

    #[test]
    fn mimic_field_writes() {
        let m = three().mimic();
        assert_eq!(
            run("s.f = !pso", "s = a (+) a.f = b", &m),
            (st("s = a (+) a.f = !pso", &m), true)
        );
        assert_eq!(
            run("s.f = !sso", "s = a (+) a.f", &m),
            (st("s = a (+) a.f = !sso", &m), true)
        );
        assert!(!run("s.f = !sso", "s = a", &m).1);
    }

    #[test]
    fn syntax_round_trips() {
        let m = three().mimic();
        for text in [
            "s = fresh",
            "s = t",
            "clr s",
            "s == t",
            "undef s",
            "s +. f",
            "s -. f",
            "s ?. f",
            "s.f = t",
            "clr s.f",
            "s = t.f",
            "fgc",
            "s = !pso",
            "s = !sso",
            "s.f = !pso",
            "s.f = !sso",
        ] {
            let a = act(text, &m);
            assert_eq!(a.display(&m).to_string(), text);
        }
        assert_eq!(
            act("s=t.g", &m),
            DldAction::GetField {
                dst: Spot(0),
                src: Spot(1),
                field: Field(1)
            }
        );
        assert!(DldAction::parse("s = !pso", &three()).is_err());
        assert!(DldAction::parse("s = q", &three()).is_err());
        assert!(DldAction::parse("s + f", &three()).is_err());
    }
}
