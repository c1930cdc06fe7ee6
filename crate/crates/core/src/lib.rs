//! Generalized regressive motion (GRM) and looming-based collision avoidance
//! for populations of walking agents on a toroidal arena.
//!
//! - [`geometry`]: azimuths, angular velocities, torus arithmetic and
//!   closed-form encounter expressions.
//! - [`perception`]: two-eyed projection of body outlines, GRM and looming
//!   detection.
//! - [`dynamics`]: per-agent walking, stopping and reorientation.
//! - [`engine`]: synchronous stepping, collisions and full trials.
//! - [`analysis`]: TP/FP/FN classification and safety/mobility metrics.
//! - [`fixtures`]: small deterministic scenarios used by tests and demos.
//! - [`harness`]: configuration, sweeps, CSV/SVG output and theorem checks.

pub mod analysis;
pub mod dynamics;
pub mod engine;
pub mod fixtures;
pub mod geometry;
pub mod harness;
pub mod perception;
