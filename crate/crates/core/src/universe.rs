//! Finite name universes for spots, fields, atomic objects and values.
//!
//! Names are interned as small indices in declaration order, so the derived
//! orderings on [`Spot`], [`Field`], [`Atom`] and [`Value`] follow the order
//! in which the universe declared them.

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Spot(pub u16);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Field(pub u16);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Value(pub u16);

/// An atomic object. `Pso` and `Sso` exist only in mimicking universes and
/// mark primarily and secondarily shed contents.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Atom {
    Obj(u16),
    Pso,
    Sso,
}

impl Atom {
    /// True for ordinary atomic objects, false for the two mimic markers.
    pub fn is_real(self) -> bool {
        matches!(self, Atom::Obj(_))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Variant {
    Plain,
    Mimic,
}

/// Words that cannot be used as names because the surface syntaxes use them.
pub const RESERVED: &[&str] = &[
    "empty", "fresh", "clr", "undef", "fgc", "stop", "dead", "tau", "start",
];

#[derive(Clone, Debug, Default)]
struct NameSet {
    names: Vec<String>,
    index: HashMap<String, u16>,
}

impl NameSet {
    fn new(kind: &str, names: Vec<String>) -> Result<Self> {
        if names.is_empty() {
            return Err(Error::Universe(format!("the set of {kind}s is empty")));
        }
        if names.len() > u16::MAX as usize {
            return Err(Error::Universe(format!("too many {kind}s")));
        }
        let mut index = HashMap::with_capacity(names.len());
        for (i, name) in names.iter().enumerate() {
            if !is_identifier(name) {
                return Err(Error::Universe(format!(
                    "`{name}` is not a valid {kind} name"
                )));
            }
            if RESERVED.contains(&name.as_str()) {
                return Err(Error::Universe(format!("`{name}` is a reserved word")));
            }
            if index.insert(name.clone(), i as u16).is_some() {
                return Err(Error::Universe(format!("duplicate {kind} `{name}`")));
            }
        }
        Ok(NameSet { names, index })
    }
}

pub(crate) fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// The fixed finite sets a data linkage is built from.
#[derive(Clone, Debug)]
pub struct Universe {
    spots: NameSet,
    fields: NameSet,
    atoms: NameSet,
    values: NameSet,
    variant: Variant,
}

impl PartialEq for Universe {
    fn eq(&self, other: &Self) -> bool {
        self.variant == other.variant
            && self.spots.names == other.spots.names
            && self.fields.names == other.fields.names
            && self.atoms.names == other.atoms.names
            && self.values.names == other.values.names
    }
}

impl Eq for Universe {}

impl Universe {
    /// Builds a plain universe. All four sets must be non-empty.
    pub fn new<S: Into<String>>(
        spots: impl IntoIterator<Item = S>,
        fields: impl IntoIterator<Item = S>,
        atoms: impl IntoIterator<Item = S>,
        values: impl IntoIterator<Item = S>,
    ) -> Result<Self> {
        fn collect<S: Into<String>>(it: impl IntoIterator<Item = S>) -> Vec<String> {
            it.into_iter().map(Into::into).collect()
        }
        Ok(Universe {
            spots: NameSet::new("spot", collect(spots))?,
            fields: NameSet::new("field", collect(fields))?,
            atoms: NameSet::new("atomic object", collect(atoms))?,
            values: NameSet::new("value", collect(values))?,
            variant: Variant::Plain,
        })
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn is_mimic(&self) -> bool {
        self.variant == Variant::Mimic
    }

    /// The same names with the two mimic atoms added.
    pub fn mimic(&self) -> Universe {
        Universe {
            variant: Variant::Mimic,
            ..self.clone()
        }
    }

    /// The same names without the mimic atoms.
    pub fn plain(&self) -> Universe {
        Universe {
            variant: Variant::Plain,
            ..self.clone()
        }
    }

    pub fn spot_count(&self) -> usize {
        self.spots.names.len()
    }

    pub fn field_count(&self) -> usize {
        self.fields.names.len()
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.names.len()
    }

    pub fn value_count(&self) -> usize {
        self.values.names.len()
    }

    pub fn spots(&self) -> impl Iterator<Item = Spot> + '_ {
        (0..self.spots.names.len() as u16).map(Spot)
    }

    pub fn fields(&self) -> impl Iterator<Item = Field> + '_ {
        (0..self.fields.names.len() as u16).map(Field)
    }

    /// Ordinary atomic objects in declaration order.
    pub fn atoms(&self) -> impl Iterator<Item = Atom> + '_ {
        (0..self.atoms.names.len() as u16).map(Atom::Obj)
    }

    /// Ordinary atoms followed by `Pso` and `Sso` when mimicking.
    pub fn all_atoms(&self) -> Vec<Atom> {
        let mut all: Vec<Atom> = self.atoms().collect();
        if self.is_mimic() {
            all.push(Atom::Pso);
            all.push(Atom::Sso);
        }
        all
    }

    pub fn values(&self) -> impl Iterator<Item = Value> + '_ {
        (0..self.values.names.len() as u16).map(Value)
    }

    pub fn spot(&self, name: &str) -> Result<Spot> {
        self.spots
            .index
            .get(name)
            .map(|&i| Spot(i))
            .ok_or_else(|| unknown("spot", name))
    }

    pub fn field(&self, name: &str) -> Result<Field> {
        self.fields
            .index
            .get(name)
            .map(|&i| Field(i))
            .ok_or_else(|| unknown("field", name))
    }

    pub fn value(&self, name: &str) -> Result<Value> {
        self.values
            .index
            .get(name)
            .map(|&i| Value(i))
            .ok_or_else(|| unknown("value", name))
    }

    /// Resolves an atom name; `!pso` and `!sso` resolve only when mimicking.
    pub fn atom(&self, name: &str) -> Result<Atom> {
        match name {
            "!pso" | "!sso" if !self.is_mimic() => Err(Error::MimicOnly(name.to_string())),
            "!pso" => Ok(Atom::Pso),
            "!sso" => Ok(Atom::Sso),
            _ => self
                .atoms
                .index
                .get(name)
                .map(|&i| Atom::Obj(i))
                .ok_or_else(|| unknown("atomic object", name)),
        }
    }

    pub fn spot_name(&self, s: Spot) -> &str {
        &self.spots.names[s.0 as usize]
    }

    pub fn field_name(&self, f: Field) -> &str {
        &self.fields.names[f.0 as usize]
    }

    pub fn value_name(&self, v: Value) -> &str {
        &self.values.names[v.0 as usize]
    }

    pub fn atom_name(&self, a: Atom) -> &str {
        match a {
            Atom::Obj(i) => &self.atoms.names[i as usize],
            Atom::Pso => "!pso",
            Atom::Sso => "!sso",
        }
    }

    pub fn has_spot(&self, s: Spot) -> bool {
        (s.0 as usize) < self.spots.names.len()
    }

    pub fn has_field(&self, f: Field) -> bool {
        (f.0 as usize) < self.fields.names.len()
    }

    pub fn has_value(&self, v: Value) -> bool {
        (v.0 as usize) < self.values.names.len()
    }

    pub fn has_atom(&self, a: Atom) -> bool {
        match a {
            Atom::Obj(i) => (i as usize) < self.atoms.names.len(),
            Atom::Pso | Atom::Sso => self.is_mimic(),
        }
    }
}

fn unknown(kind: &'static str, name: &str) -> Error {
    Error::UnknownName {
        kind,
        name: name.to_string(),
    }
}

impl fmt::Display for Universe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "spots = {}", self.spots.names.join(", "))?;
        writeln!(f, "fields = {}", self.fields.names.join(", "))?;
        writeln!(f, "atoms = {}", self.atoms.names.join(", "))?;
        write!(f, "values = {}", self.values.names.join(", "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> Universe {
        Universe::new(["s", "t"], ["f"], ["a", "b"], ["n"]).unwrap()
    }

    #[test]
    fn names_resolve_in_declaration_order() {
        let u = small();
        assert_eq!(u.spot("t").unwrap(), Spot(1));
        assert_eq!(u.atom("b").unwrap(), Atom::Obj(1));
        assert!(Atom::Obj(1) < Atom::Pso && Atom::Pso < Atom::Sso);
    }

    #[test]
    fn empty_and_duplicate_sets_are_rejected() {
        assert!(Universe::new(
            Vec::<String>::new(),
            vec!["f".into()],
            vec!["a".into()],
            vec!["n".into()]
        )
        .is_err());
        assert!(Universe::new(["s", "s"], ["f"], ["a"], ["n"]).is_err());
        assert!(Universe::new(["fresh"], ["f"], ["a"], ["n"]).is_err());
    }

    #[test]
    fn mimic_atoms_only_in_mimic_universe() {
        let u = small();
        assert!(matches!(u.atom("!pso"), Err(Error::MimicOnly(_))));
        let m = u.mimic();
        assert_eq!(m.atom("!sso").unwrap(), Atom::Sso);
        assert_eq!(m.all_atoms().len(), 4);
        assert!(!u.has_atom(Atom::Pso) && m.has_atom(Atom::Pso));
    }
}
