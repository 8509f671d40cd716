//! Exact-integer substitution tilings over polyominoes.
//!
//! The crate models tilesets (prototiles with two layers of stitch marks and
//! per-tile substitution rules), validates rules as exact covers, expands
//! patches iteratively, rewrites tilesets (fuse / dedup / eliminate), and
//! analyzes the results: cover integrity, closed-curve tracing against the
//! Fibonacci-snowflake family, stitch statistics, bar extraction, periodicity
//! scans, and substitution-matrix statistics. Everything except the reported
//! eigenvector statistics is integer-exact.

pub mod algebra;
pub mod analysis;
pub mod assets;
pub mod engine;
pub mod error;
pub mod geometry;
pub mod model;
pub mod render;

pub use engine::Patch;
pub use geometry::{Cell, D4Transform, Placement, Polyomino, Turn, TurnWord};
pub use model::{MarkLayer, MarkSegment, SubstitutionRule, TilePrototype, Tileset};
