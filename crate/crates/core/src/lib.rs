//! Inverse magnetic billiards on strictly convex planar domains.
//!
//! A charged particle travels in straight chords inside the domain and along
//! circular Larmor arcs of radius `mu` outside it. The crate provides the
//! return map in Birkhoff coordinates `(s, u)`, its exact Jacobians, the
//! generating function, periodic-orbit searches and near-boundary diagnostics.

pub mod action;
pub mod analysis;
pub mod boundary;
pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod orbits;
pub mod quadrature;
pub mod tolerances;

pub use boundary::{BoundaryPoint, Curve, CurveKind, CurvaturePair, FourierCurve, Parametrization, Regime};
pub use error::{Error, Result};
pub use geometry::{vec2, Vec2};
