//! A desk-scale simulator of an elastic sheet whose every material point
//! carries a quantum fibre.
//!
//! The macro side is a planar extensible elastica clamped between two bars
//! whose separation follows a schedule; each time step finds the quasi-static
//! equilibrium shape. The micro side attaches a qubit (or a truncated
//! harmonic oscillator) to every node; its Hamiltonian is driven by the
//! local strain invariant and curvature, and the referential gradient of the
//! accumulated propagator field feeds back into the bending stiffness.
//!
//! Module map:
//! - [`grid`]: the discretized body manifold.
//! - [`kinematics`]: placements, deformation gradients, strain invariants,
//!   curvature.
//! - [`elastica`]: the quasi-static macro solver and its shooting oracle.
//! - [`qubit`]: qubit fibre dynamics with closed-form Pauli exponentials.
//! - [`oscillator`]: truncated harmonic-oscillator fibre.
//! - [`coupling`]: unitary-gradient coupling fields and the stiffness law.
//! - [`schedule`], [`driver`]: bar schedules and the staggered time loop.
//! - [`config`], [`output`]: run configuration and bit-exact output files.

pub mod config;
pub mod coupling;
pub mod driver;
pub mod elastica;
pub mod error;
pub mod grid;
pub mod kinematics;
pub mod oscillator;
pub mod output;
pub mod qubit;
pub mod schedule;
pub mod stencil;

pub use error::{Error, Result};
pub use grid::MaterialGrid;
