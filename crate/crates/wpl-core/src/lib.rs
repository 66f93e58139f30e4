//! Exact arithmetic for string groups of weighted projective lines.
//!
//! A weight sequence `p = (p_1, ..., p_t)` presents the string group `L(p)`,
//! the rank-one abelian group on generators `x_1, ..., x_t` with relations
//! `p_1 x_1 = ... = p_t x_t = c`. This crate implements:
//!
//! * normal-form arithmetic in `L(p)` together with the degree map `delta`,
//!   the functions `mult` and `mu`, torsion enumeration and the
//!   domestic/tubular/wild trichotomy ([`string_group`]);
//! * enumeration of the finite subgroups of Cyclic and Klein type that can
//!   occur as kernels of admissible homomorphisms ([`subgroups`]);
//! * construction, verification, composition and exhaustive enumeration of
//!   admissible homomorphisms `L(p) -> L(q)` ([`admissible`]);
//! * exact arithmetic in towers of quadratic extensions of the rationals,
//!   with a high-precision complex backend as an independent numeric oracle
//!   ([`exact_field`]);
//! * the `L(p)`-graded coordinate algebra `S(p; lambda)`: graded dimensions,
//!   monomial bases, reduction, and verification of compatible algebra
//!   homomorphisms ([`coord_algebra`]);
//! * parameter-orbit arithmetic for the tubular weight type `(2,2,2,2)`
//!   ([`tubular`]);
//! * equivariant-relations graphs with DOT and JSON export
//!   ([`relations_graph`]).
//!
//! All types are immutable values and all operations are pure functions, so
//! everything here is safe to use concurrently.

pub mod admissible;
pub mod coord_algebra;
pub mod error;
pub mod exact_field;
pub mod relations_graph;
pub mod string_group;
pub mod subgroups;
pub mod tubular;

pub use admissible::{AdmissibleRecord, StringHom};
pub use coord_algebra::{AlgebraCtx, CompatibleHom, GradedPoly, ParamSeq};
pub use error::WplError;
pub use exact_field::{BigComplex, FieldElem, Scalar};
pub use relations_graph::{RelationEdge, RelationGraph, RelationNode};
pub use string_group::{GroupElement, GroupTypeClass, WeightSeq};
pub use subgroups::{FiniteSubgroup, SubgroupKind};
pub use tubular::ParamOrbit;
