//! Data linkages and their two combination operators.
//!
//! A data linkage is kept as a duplicate-free ordered set of atomic links;
//! closed terms modulo the unit, associativity, commutativity and
//! idempotence of combination are exactly such sets.

pub mod laws;
pub mod term;

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{Error, Result};
use crate::universe::{Atom, Field, Spot, Universe, Value};

pub use term::DlaTerm;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AtomicLink {
    /// Link via a spot to an atomic object.
    Spot(Spot, Atom),
    /// A field present on an object whose content is undefined.
    PartialField(Atom, Field),
    /// Link from an object via a field to another object.
    Field(Atom, Field, Atom),
    /// Association of a value with an object.
    Value(Atom, Value),
}

/// The overriding group a link belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LinkKey {
    Spot(Spot),
    Field(Atom, Field),
    Value(Atom),
}

impl AtomicLink {
    pub fn key(&self) -> LinkKey {
        match *self {
            AtomicLink::Spot(s, _) => LinkKey::Spot(s),
            AtomicLink::PartialField(a, f) | AtomicLink::Field(a, f, _) => LinkKey::Field(a, f),
            AtomicLink::Value(a, _) => LinkKey::Value(a),
        }
    }

    /// Every atom the link mentions.
    pub fn atoms(&self) -> impl Iterator<Item = Atom> {
        let (first, second) = match *self {
            AtomicLink::Spot(_, a) => (a, None),
            AtomicLink::PartialField(a, _) => (a, None),
            AtomicLink::Field(a, _, b) => (a, Some(b)),
            AtomicLink::Value(a, _) => (a, None),
        };
        std::iter::once(first).chain(second)
    }

    /// The object carrying a non-spot link.
    pub fn carrier(&self) -> Option<Atom> {
        match *self {
            AtomicLink::Spot(..) => None,
            AtomicLink::PartialField(a, _)
            | AtomicLink::Field(a, _, _)
            | AtomicLink::Value(a, _) => Some(a),
        }
    }

    pub fn belongs_to(&self, u: &Universe) -> bool {
        match *self {
            AtomicLink::Spot(s, a) => u.has_spot(s) && u.has_atom(a),
            AtomicLink::PartialField(a, f) => u.has_atom(a) && u.has_field(f),
            AtomicLink::Field(a, f, b) => u.has_atom(a) && u.has_field(f) && u.has_atom(b),
            AtomicLink::Value(a, n) => u.has_atom(a) && u.has_value(n),
        }
    }

    pub fn display<'a>(&'a self, u: &'a Universe) -> impl fmt::Display + 'a {
        LinkDisplay { link: self, u }
    }
}

struct LinkDisplay<'a> {
    link: &'a AtomicLink,
    u: &'a Universe,
}

impl fmt::Display for LinkDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let u = self.u;
        match *self.link {
            AtomicLink::Spot(s, a) => write!(f, "{} = {}", u.spot_name(s), u.atom_name(a)),
            AtomicLink::PartialField(a, g) => write!(f, "{} . {}", u.atom_name(a), u.field_name(g)),
            AtomicLink::Field(a, g, b) => write!(
                f,
                "{} . {} = {}",
                u.atom_name(a),
                u.field_name(g),
                u.atom_name(b)
            ),
            AtomicLink::Value(a, n) => write!(f, "{} : {}", u.atom_name(a), u.value_name(n)),
        }
    }
}

/// Content of a spot.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpotContent {
    Undefined,
    Unique(Atom),
    Multiple,
}

/// State of the group of links from object `a` via field `f`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldGroup {
    Absent,
    UndefinedContent,
    Unique(Atom),
    Multiple,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Target {
    Spot(Spot),
    Field(Atom, Field),
}

#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DataLinkage {
    links: BTreeSet<AtomicLink>,
}

impl DataLinkage {
    pub fn empty() -> Self {
        DataLinkage::default()
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }

    pub fn len(&self) -> usize {
        self.links.len()
    }

    pub fn contains(&self, link: &AtomicLink) -> bool {
        self.links.contains(link)
    }

    pub fn iter(&self) -> impl Iterator<Item = &AtomicLink> + '_ {
        self.links.iter()
    }

    pub fn insert(&mut self, link: AtomicLink) -> bool {
        self.links.insert(link)
    }

    /// Checks that every name the linkage mentions belongs to `u`.
    pub fn validate(&self, u: &Universe) -> Result<()> {
        match self.links.iter().find(|l| !l.belongs_to(u)) {
            None => Ok(()),
            Some(l) => Err(Error::Universe(format!(
                "link {l:?} is not over the given universe"
            ))),
        }
    }

    /// Union of the two linkages.
    pub fn combine(&self, other: &DataLinkage) -> DataLinkage {
        let mut links = self.links.clone();
        links.extend(other.links.iter().copied());
        DataLinkage { links }
    }

    /// Overriding combination with a single atomic link: every link of the
    /// same group is dropped and `link` is added.
    pub fn override_with(&self, link: AtomicLink) -> DataLinkage {
        let key = link.key();
        let mut links: BTreeSet<AtomicLink> = self
            .links
            .iter()
            .filter(|l| l.key() != key)
            .copied()
            .collect();
        links.insert(link);
        DataLinkage { links }
    }

    /// Overriding combination. The right operand is distributed over link by
    /// link, so with several right-hand links a link dropped by one of them
    /// can come back through another.
    pub fn override_by(&self, other: &DataLinkage) -> DataLinkage {
        if other.is_empty() {
            return self.clone();
        }
        let mut links = BTreeSet::new();
        for r in &other.links {
            links.extend(self.override_with(*r).links);
        }
        DataLinkage { links }
    }

    /// Removes every link of the given group.
    pub fn without_key(&self, key: LinkKey) -> DataLinkage {
        DataLinkage {
            links: self
                .links
                .iter()
                .filter(|l| l.key() != key)
                .copied()
                .collect(),
        }
    }

    pub fn content_of_spot(&self, s: Spot) -> SpotContent {
        let mut found = None;
        for l in self.spot_links(s) {
            if found.is_some() {
                return SpotContent::Multiple;
            }
            found = Some(l);
        }
        found.map_or(SpotContent::Undefined, SpotContent::Unique)
    }

    /// The atoms spot `s` links to.
    pub fn spot_links(&self, s: Spot) -> impl Iterator<Item = Atom> + '_ {
        let lo = AtomicLink::Spot(s, Atom::Obj(0));
        let hi = AtomicLink::Spot(s, Atom::Sso);
        self.links.range(lo..=hi).map(|l| match *l {
            AtomicLink::Spot(_, a) => a,
            _ => unreachable!("range over spot links"),
        })
    }

    pub fn field_group(&self, a: Atom, f: Field) -> FieldGroup {
        let partial = self.links.contains(&AtomicLink::PartialField(a, f));
        let lo = AtomicLink::Field(a, f, Atom::Obj(0));
        let hi = AtomicLink::Field(a, f, Atom::Sso);
        let mut targets = self.links.range(lo..=hi).map(|l| match *l {
            AtomicLink::Field(_, _, b) => b,
            _ => unreachable!("range over field links"),
        });
        match (partial, targets.next(), targets.next()) {
            (false, None, _) => FieldGroup::Absent,
            (true, None, _) => FieldGroup::UndefinedContent,
            (false, Some(b), None) => FieldGroup::Unique(b),
            _ => FieldGroup::Multiple,
        }
    }

    pub fn is_locally_deterministic(&self, target: Target) -> bool {
        match target {
            Target::Spot(s) => matches!(self.content_of_spot(s), SpotContent::Unique(_)),
            Target::Field(a, f) => matches!(
                self.field_group(a, f),
                FieldGroup::Unique(_) | FieldGroup::UndefinedContent
            ),
        }
    }

    /// Every atom occurring anywhere in the linkage.
    pub fn occurring_atoms(&self) -> BTreeSet<Atom> {
        self.links.iter().flat_map(|l| l.atoms()).collect()
    }

    /// Canonical text in universe order: `empty` or links joined by `(+)`.
    pub fn display<'a>(&'a self, u: &'a Universe) -> impl fmt::Display + 'a {
        LinkageDisplay { l: self, u }
    }
}

impl FromIterator<AtomicLink> for DataLinkage {
    fn from_iter<I: IntoIterator<Item = AtomicLink>>(iter: I) -> Self {
        DataLinkage {
            links: iter.into_iter().collect(),
        }
    }
}

impl<'a> IntoIterator for &'a DataLinkage {
    type Item = &'a AtomicLink;
    type IntoIter = std::collections::btree_set::Iter<'a, AtomicLink>;

    fn into_iter(self) -> Self::IntoIter {
        self.links.iter()
    }
}

struct LinkageDisplay<'a> {
    l: &'a DataLinkage,
    u: &'a Universe,
}

impl fmt::Display for LinkageDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.l.is_empty() {
            return f.write_str("empty");
        }
        for (i, link) in self.l.iter().enumerate() {
            if i > 0 {
                f.write_str(" (+) ")?;
            }
            write!(f, "{}", link.display(self.u))?;
        }
        Ok(())
    }
}

/// `combine` with both operands checked against the universe.
pub fn combine(u: &Universe, l: &DataLinkage, r: &DataLinkage) -> Result<DataLinkage> {
    l.validate(u)?;
    r.validate(u)?;
    Ok(l.combine(r))
}

/// `override` with both operands checked against the universe.
pub fn override_(u: &Universe, l: &DataLinkage, r: &DataLinkage) -> Result<DataLinkage> {
    l.validate(u)?;
    r.validate(u)?;
    Ok(l.override_by(r))
}
