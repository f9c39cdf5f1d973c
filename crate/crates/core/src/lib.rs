//! Data linkage dynamics with shedding.
//!
//! States are data linkages ([`dla`]), changed by basic actions ([`dld`]).
//! Threads ([`thread`]) request those actions from services ([`service`]),
//! and the shedding service clears spots and fields that the remaining
//! behaviour can never use again ([`shedding`]).

pub mod dla;
pub mod dld;
pub mod error;
pub mod service;
pub mod shedding;
pub mod thread;
pub mod universe;

pub use dla::{AtomicLink, DataLinkage, DlaTerm, FieldGroup, LinkKey, SpotContent};
pub use dld::{DldAction, EffectResult};
pub use error::{Error, Result};
pub use service::{
    dlds, dldsm, dldss, DldService, Reply, ServiceKind, ServiceState, Trace, TraceEvent,
};
pub use shedding::{shok_member, ShedVerdict};
pub use thread::{Method, Node, NodeId, ThreadAction, ThreadGraph, ThreadSpec, ThreadTerm};
pub use universe::{Atom, Field, Spot, Universe, Value, Variant};
