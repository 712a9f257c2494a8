//! Exact computations with algebras with involution: the split unitary
//! algebra `Mₙ × Mₙ` with `(a, b) ↦ (bᵗ, aᵗ)`, its maximal subalgebras and
//! generators, censuses of non-generating tuples over finite fields, and
//! generator-count bounds for Azumaya algebras with unitary involution.

pub mod bounds;
pub mod census;
pub mod field;
pub mod matrix;
pub mod mualg;
pub mod subspace;
pub mod unitary;

pub use field::{AnyField, Field, FieldSpec, FiniteField, Fq, Rationals};
pub use matrix::{symmetry_kind, Matrix, SymmetryKind};
pub use mualg::{AlgElement, InvAlgebra, SubalgebraSpan};
pub use subspace::Subspace;
pub use unitary::UnitaryModel;
