//! Combinatorics of subgraphs of the complete bipartite graph `K_{n,d}`.
//!
//! Everything in this crate is a finite, exactly-checkable object: fine mixed
//! subdivisions of a dilated simplex, generic tropical oriented matroids,
//! matching fields and stacks, and tope arrangements, all encoded uniformly as
//! collections of bipartite graphs on `[n] ⊔ [d̄]`. The crate provides
//! validators for each object kind, conversions between the kinds, exhaustive
//! desk-scale enumerators, and JSON interchange for all of it.
//!
//! Left vertices are `0..n` and right vertices `0..d` internally; all JSON and
//! display output is 1-based.

pub mod bigraph;
pub mod cryptomorphism;
pub mod enumerate;
pub mod error;
pub mod fms;
pub mod json;
pub mod lattice;
pub mod matchfield;
pub mod report;
pub mod tom;
pub mod topearr;
pub mod treelink;

pub use bigraph::BiGraph;
pub use cryptomorphism::{extraction, fms_from_ensemble, roundtrip_audit, ObjectHandle};
pub use enumerate::{enumerate, EnumerationKind, EnumerationOutcome, EnumerationTask};
pub use error::{Error, Result};
pub use fms::FineMixedSubdivision;
pub use lattice::LatticePoint;
pub use matchfield::{MatchingField, MatchingStack, TopeField};
pub use report::{ValidationReport, Violation};
pub use tom::GenericTom;
pub use topearr::{ArrangementLevel, TopeArrangement};
pub use treelink::{build_covector, TreeLinkageCovector};


