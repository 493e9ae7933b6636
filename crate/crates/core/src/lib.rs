//! Exact continuous logic over finite rational metric spaces.
//!
//! The crate is organised around the objects it manipulates:
//!
//! * [`metric`]: finite metric spaces with rational distances, Katětov
//!   one-point extensions, the amalgamation construction used to embed a
//!   perturbed copy of a tuple, and a budgeted approximation of the rational
//!   Urysohn space.
//! * [`formula`]: continuous-logic formulas, their concrete syntax, linear
//!   continuity moduli and Borel-level bookkeeping.
//! * [`finite`]: exact evaluation over finite structures.
//! * [`urysohn`]: certified enclosures for sentences evaluated in the
//!   Urysohn space.
//! * [`graded`]: graded subgroups of isometry groups, acting on partial
//!   isometries.
//! * [`vaught`]: graded Vaught transforms on finite discrete group actions.
//! * [`reduction`]: encoding a finite G-space as continuous structures.
//!
//! All arithmetic is exact; the only approximations are explicit
//! [`Enclosure`]s.

// Distance tables are indexed by point on both axes.
#![allow(clippy::needless_range_loop)]

pub mod enclosure;
pub mod finite;
pub mod formula;
pub mod gen;
pub mod graded;
pub mod metric;
pub mod rational;
pub mod reduction;
pub mod text;
pub mod urysohn;
pub mod vaught;

pub use enclosure::Enclosure;
pub use rational::Rational;
