//! Finite-scale covering dimension and piecewise-linear embedding toolkit.
//!
//! This crate works with *finite surrogates* of the classical objects of
//! covering-dimension theory: a space is a finite metric space sampled from
//! the geometric realization of a simplicial complex, an open cover is a
//! finite family of id subsets, and a continuous map is a table of values at
//! samples (or a PL map determined by vertex images). At this scale every
//! supremum is a maximum, so the classical constructions become checkable
//! algorithms:
//!
//! - [`covers`] — cover order, refinement, Lebesgue numbers, the unit-cube
//!   cover of order `n`, order-preserving merges, staged refinements over an
//!   exhaustion, and star-cover dimension bounds.
//! - [`geometry`] — exact rational predicates: affine independence, general
//!   position, randomized perturbation into general position, and an exact
//!   simplex-disjointness oracle backed by rational linear programming.
//! - [`maps`] — sample maps, the bounded metrics `delta`/`rho`, fiber
//!   diameters, distance-quotient partitions of unity, proper height
//!   functions, escape-to-infinity ladders, and nearest-point blend
//!   extensions.
//! - [`embed`] — the perturbation step that shrinks fiber diameters while
//!   moving the map by less than `r`, the iterated pipeline producing
//!   injective sample maps into `R^(2n+1)`, the direct general-position PL
//!   embedding, and the certificate verifier.
//! - [`space`] — the ground objects: finite metric spaces, simplicial
//!   complexes, sample sets, and exhaustions by nested stages.
//! - [`formats`] — JSON/CSV schemas and OBJ/SVG export used by the `coverdim`
//!   command-line tool.
//!
//! The `book/` directory of the repository contains a narrative guide; its
//! code snippets are compiled and run as doc-tests (see the crate's
//! `booktests` module) so the guide cannot drift from the API.

pub mod covers;
pub mod embed;
pub mod fixtures;
pub mod formats;
pub mod geometry;
pub mod maps;
pub mod space;
pub mod subdivision;

mod booktests;

pub use covers::{Cover, CubeCoverSpec};
pub use embed::{EmbeddingCertificate, PerturbationReport};
pub use geometry::{PointSet, SimplexRelation};
pub use maps::{PartitionOfUnity, PlMap, SampleMap};
pub use space::{Exhaustion, FiniteMetricSpace, ReferenceCoords, SampleSet, SimplicialComplex};

/// Set of sample/point identifiers, ordered for reproducible iteration.
pub type IdSet = std::collections::BTreeSet<String>;
