//! Equivalence checking for MILP formulations.
//!
//! Two formulations of the same optimization problem instance are judged
//! equivalent when a polynomial-time (here: linear) mapping sends any optimal
//! solution of one into an optimal solution of the other. This crate provides
//! the symbolic model, a deterministic desk-scale solver, the mapping-based
//! checker plus three baselines (canonical, execution, Weisfeiler-Lehman),
//! and a dataset engine producing labeled equivalent/non-equivalent pairs.
//!
//! Numeric layering: the symbolic side is exact ([`Rat`] coefficients
//! everywhere); the solver is generic over any [`scalar::LpFloat`] and runs
//! on `f64` by default.

pub mod expr;
pub mod graph;
pub mod exhaustive;
pub mod instance;
pub mod llm;
pub mod mapping;
pub mod model;
pub mod scalar;
pub mod solver;

pub use instance::{Assignment, ConcreteModel, InstanceData};
pub use model::Formulation;
pub use scalar::Rat;

/// Exact instantiated model.
pub type ExactModel = ConcreteModel<Rat>;
/// Solver-facing model in double precision.
pub type FloatModel = ConcreteModel<f64>;
