//! Closed terms over the linkage constants and their text syntax.
//!
//! ```text
//! term    := primary (("(+)" | "(>)") primary)*      left associative
//! primary := "empty" | "(" term ")" | link
//! link    := s "=" a | a "." f | a "." f "=" b | a ":" n
//! ```

use std::fmt;

use super::{AtomicLink, DataLinkage};
use crate::error::{Error, Result};
use crate::universe::Universe;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum DlaTerm {
    Empty,
    Link(AtomicLink),
    Combine(Box<DlaTerm>, Box<DlaTerm>),
    Override(Box<DlaTerm>, Box<DlaTerm>),
}

impl DlaTerm {
    pub fn combine(l: DlaTerm, r: DlaTerm) -> DlaTerm {
        DlaTerm::Combine(Box::new(l), Box::new(r))
    }

    pub fn override_(l: DlaTerm, r: DlaTerm) -> DlaTerm {
        DlaTerm::Override(Box::new(l), Box::new(r))
    }

    /// The basic term (a plain combination of links) denoting `l`.
    pub fn from_linkage(l: &DataLinkage) -> DlaTerm {
        l.iter()
            .map(|&link| DlaTerm::Link(link))
            .reduce(DlaTerm::combine)
            .unwrap_or(DlaTerm::Empty)
    }

    /// Evaluates the term bottom-up to its canonical linkage.
    pub fn normalize(&self) -> DataLinkage {
        match self {
            DlaTerm::Empty => DataLinkage::empty(),
            DlaTerm::Link(l) => std::iter::once(*l).collect(),
            DlaTerm::Combine(l, r) => l.normalize().combine(&r.normalize()),
            DlaTerm::Override(l, r) => l.normalize().override_by(&r.normalize()),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            DlaTerm::Empty | DlaTerm::Link(_) => 0,
            DlaTerm::Combine(l, r) | DlaTerm::Override(l, r) => 1 + l.depth().max(r.depth()),
        }
    }

    pub fn validate(&self, u: &Universe) -> Result<()> {
        match self {
            DlaTerm::Empty => Ok(()),
            DlaTerm::Link(l) if l.belongs_to(u) => Ok(()),
            DlaTerm::Link(l) => Err(Error::Universe(format!(
                "link {l:?} is not over the universe"
            ))),
            DlaTerm::Combine(l, r) | DlaTerm::Override(l, r) => {
                l.validate(u)?;
                r.validate(u)
            }
        }
    }

    pub fn parse(text: &str, u: &Universe) -> Result<DlaTerm> {
        let tokens = tokenize(text)?;
        let mut p = Parser { tokens, pos: 0, u };
        let t = p.term()?;
        if p.pos != p.tokens.len() {
            return Err(Error::parse(format!("unexpected `{}`", p.tokens[p.pos])));
        }
        Ok(t)
    }

    /// Fully parenthesised text that [`DlaTerm::parse`] reads back.
    pub fn display<'a>(&'a self, u: &'a Universe) -> impl fmt::Display + 'a {
        TermDisplay { t: self, u }
    }
}

/// Parses and normalises term text in one go.
pub fn normalize_text(text: &str, u: &Universe) -> Result<DataLinkage> {
    Ok(DlaTerm::parse(text, u)?.normalize())
}

/// Parses a single atomic link such as `s = a` or `a . f = b`.
pub fn parse_link(text: &str, u: &Universe) -> Result<AtomicLink> {
    match DlaTerm::parse(text, u)? {
        DlaTerm::Link(l) => Ok(l),
        _ => Err(Error::parse(format!(
            "`{}` is not a single link",
            text.trim()
        ))),
    }
}

struct TermDisplay<'a> {
    t: &'a DlaTerm,
    u: &'a Universe,
}

impl fmt::Display for TermDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sub = |t| TermDisplay { t, u: self.u };
        match self.t {
            DlaTerm::Empty => f.write_str("empty"),
            DlaTerm::Link(l) => write!(f, "({})", l.display(self.u)),
            DlaTerm::Combine(l, r) => write!(f, "({} (+) {})", sub(l), sub(r)),
            DlaTerm::Override(l, r) => write!(f, "({} (>) {})", sub(l), sub(r)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Token {
    Name(String),
    Combine,
    Override,
    Open,
    Close,
    Dot,
    Eq,
    Colon,
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Name(n) => f.write_str(n),
            Token::Combine => f.write_str("(+)"),
            Token::Override => f.write_str("(>)"),
            Token::Open => f.write_str("("),
            Token::Close => f.write_str(")"),
            Token::Dot => f.write_str("."),
            Token::Eq => f.write_str("="),
            Token::Colon => f.write_str(":"),
        }
    }
}

fn tokenize(text: &str) -> Result<Vec<Token>> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c == '(' {
            // `( + )` with inner whitespace is still an operator
            let rest: String = text[i + 1..]
                .chars()
                .filter(|c| !c.is_whitespace())
                .take(2)
                .collect();
            if rest == "+)" || rest == ">)" {
                let op = rest.chars().next().unwrap();
                let close = text[i + 1..].find(')').unwrap();
                i += close + 2;
                out.push(if op == '+' {
                    Token::Combine
                } else {
                    Token::Override
                });
                continue;
            }
            out.push(Token::Open);
            i += 1;
            continue;
        }
        let tok = match c {
            ')' => Some(Token::Close),
            '.' => Some(Token::Dot),
            '=' => Some(Token::Eq),
            ':' => Some(Token::Colon),
            _ => None,
        };
        if let Some(t) = tok {
            out.push(t);
            i += 1;
            continue;
        }
        if c.is_ascii_alphanumeric() || c == '_' || c == '!' {
            let start = i;
            i += 1;
            while i < bytes.len()
                && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] == b'_')
            {
                i += 1;
            }
            out.push(Token::Name(text[start..i].to_string()));
            continue;
        }
        return Err(Error::parse(format!("unexpected character `{c}`")));
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    u: &'a Universe,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn expect_name(&mut self) -> Result<String> {
        match self.next() {
            Some(Token::Name(n)) => Ok(n),
            Some(t) => Err(Error::parse(format!("expected a name, found `{t}`"))),
            None => Err(Error::parse("expected a name, found end of input")),
        }
    }

    fn term(&mut self) -> Result<DlaTerm> {
        let mut acc = self.primary()?;
        loop {
            match self.peek() {
                Some(Token::Combine) => {
                    self.pos += 1;
                    acc = DlaTerm::combine(acc, self.primary()?);
                }
                Some(Token::Override) => {
                    self.pos += 1;
                    acc = DlaTerm::override_(acc, self.primary()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn primary(&mut self) -> Result<DlaTerm> {
        match self.peek() {
            Some(Token::Open) => {
                self.pos += 1;
                let t = self.term()?;
                match self.next() {
                    Some(Token::Close) => Ok(t),
                    _ => Err(Error::parse("missing `)`")),
                }
            }
            Some(Token::Name(n)) if n == "empty" => {
                self.pos += 1;
                Ok(DlaTerm::Empty)
            }
            Some(Token::Name(_)) => self.link().map(DlaTerm::Link),
            Some(t) => Err(Error::parse(format!("unexpected `{t}`"))),
            None => Err(Error::parse("unexpected end of input")),
        }
    }

    fn link(&mut self) -> Result<AtomicLink> {
        let first = self.expect_name()?;
        let u = self.u;
        match self.next() {
            Some(Token::Eq) => {
                let a = self.expect_name()?;
                Ok(AtomicLink::Spot(u.spot(&first)?, u.atom(&a)?))
            }
            Some(Token::Colon) => {
                let n = self.expect_name()?;
                Ok(AtomicLink::Value(u.atom(&first)?, u.value(&n)?))
            }
            Some(Token::Dot) => {
                let f = self.expect_name()?;
                if self.peek() == Some(&Token::Eq) {
                    self.pos += 1;
                    let b = self.expect_name()?;
                    Ok(AtomicLink::Field(
                        u.atom(&first)?,
                        u.field(&f)?,
                        u.atom(&b)?,
                    ))
                } else {
                    Ok(AtomicLink::PartialField(u.atom(&first)?, u.field(&f)?))
                }
            }
            _ => Err(Error::parse(format!(
                "`{first}` must be followed by `=`, `.` or `:`"
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::universe::{Atom, Field, Spot};

    fn u() -> Universe {
        Universe::new(["s", "t"], ["f"], ["a", "b", "c"], ["n"]).unwrap()
    }

    #[test]
    fn normalize_examples() {
        let u = u();
        let sa = AtomicLink::Spot(Spot(0), Atom::Obj(0));
        let sc = AtomicLink::Spot(Spot(0), Atom::Obj(2));
        assert_eq!(
            normalize_text("empty (>) (s = a)", &u).unwrap(),
            [sa].into_iter().collect()
        );
        assert_eq!(
            normalize_text("((s=a) (+) (s=b)) (>) (s=c)", &u).unwrap(),
            [sc].into_iter().collect()
        );
        assert!(normalize_text("empty", &u).unwrap().is_empty());
    }

    #[test]
    fn all_link_forms_parse() {
        let u = u();
        let t = DlaTerm::parse("a.f (+) a . f = b (+) b:n (+) t=c", &u).unwrap();
        let l = t.normalize();
        assert!(l.contains(&AtomicLink::PartialField(Atom::Obj(0), Field(0))));
        assert!(l.contains(&AtomicLink::Field(Atom::Obj(0), Field(0), Atom::Obj(1))));
        assert_eq!(l.len(), 4);
    }

    #[test]
    fn operators_are_left_associative() {
        let u = u();
        let t = DlaTerm::parse("s = a (+) s = b (>) s = c", &u).unwrap();
        assert!(matches!(t, DlaTerm::Override(..)));
        assert_eq!(t.normalize().len(), 1);
    }

    #[test]
    fn errors_are_reported() {
        let u = u();
        assert!(matches!(
            DlaTerm::parse("s = z", &u),
            Err(Error::UnknownName { .. })
        ));
        assert!(DlaTerm::parse("(s = a", &u).is_err());
        assert!(DlaTerm::parse("s = a t = b", &u).is_err());
        assert!(DlaTerm::parse("s = !pso", &u).is_err());
        assert!(DlaTerm::parse("s = !pso", &u.mimic()).is_ok());
        assert!(DlaTerm::parse("", &u).is_err());
    }

    #[test]
    fn printed_terms_parse_back() {
        let u = u();
        let t = DlaTerm::parse("(s = a (>) a.f) (+) empty (>) (b : n (+) a.f = c)", &u).unwrap();
        let text = t.display(&u).to_string();
        assert_eq!(DlaTerm::parse(&text, &u).unwrap(), t);
        let l = t.normalize();
        let shown = l.display(&u).to_string();
        assert_eq!(normalize_text(&shown, &u).unwrap(), l);
    }
}
