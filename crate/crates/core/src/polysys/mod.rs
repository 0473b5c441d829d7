//! Sparse polynomial arithmetic and the critical-point systems built on it.

mod builders;
mod polynomial;
mod system;

pub use builders::{
    build_kkt_system, build_kkt_system_with, build_lagrange_system, component_anchors,
    objective_of_point, KappaPlacement,
};
pub use polynomial::{Monomial, Polynomial};
pub use system::{polynomial_to_json, PolySystem, Variable, VariableRegistry};
