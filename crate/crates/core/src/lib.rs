//! Numerical lab for damped viscous compressible swarming with nonlocal forces.
//!
//! The core solves
//!
//! ```text
//! ∂ₜϱ + div(ϱu) = εΔϱ
//! ∂ₜ(ϱu) + div(ϱu⊗u) + ∇(aϱ^m + δϱ^β) = μΔu + (λ+μ)∇div u - ϱ∇K∗ϱ - ϱ∇Φ - damping
//! ```
//!
//! on a uniform 1D or 2D mesh, tracks the free-energy balance along runs, and
//! computes the stationary densities the runs relax to.
//!
//! Everything numerical is generic over [`scalar::Real`] (`f32`, `f64`); the
//! closed-form exponent formulas also accept [`Rational`]. The aliases below
//! fix the scalar for the common cases.

pub mod dynamics;
pub mod energy;
pub mod error;
pub mod fields;
mod linalg;
pub mod nonlocal;
pub mod potentials;
pub mod quadrature;
pub mod scalar;
pub mod snapshot;
pub mod steady;

pub use error::{Error, Result};
pub use scalar::{Exact, Real};

/// Exact rationals for the exponent formulas.
pub type Rational = num_rational::Ratio<i64>;

pub type Grid = fields::Grid<f64>;
pub type ScalarField = fields::ScalarField<f64>;
pub type VectorField = fields::VectorField<f64>;
pub type State = fields::State<f64>;
pub type ModelParams = dynamics::ModelParams<f64>;
pub type ConvolutionPlan = nonlocal::ConvolutionPlan<f64>;
pub type KernelSpec = potentials::KernelSpec<f64>;
pub type ConfinementSpec = potentials::ConfinementSpec<f64>;
pub type AlignmentKernel = potentials::AlignmentKernel<f64>;
pub type EnergyLedger = energy::EnergyLedger<f64>;
pub type SteadyProblem = steady::SteadyProblem<f64>;
pub type SteadySolution = steady::SteadySolution<f64>;

pub type Grid32 = fields::Grid<f32>;
pub type ScalarField32 = fields::ScalarField<f32>;
pub type State32 = fields::State<f32>;
pub type ModelParams32 = dynamics::ModelParams<f32>;
pub type ConvolutionPlan32 = nonlocal::ConvolutionPlan<f32>;
