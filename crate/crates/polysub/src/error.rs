//! Error types shared across the crate.

use thiserror::Error;

use crate::geometry::Cell;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GeometryError {
    #[error("polyomino has no cells")]
    EmptyPolyomino,
    #[error("duplicate cell {0} in polyomino")]
    DuplicateCell(Cell),
    #[error("polyomino is not edge-connected")]
    Disconnected,
    #[error("path step from ({},{}) to ({},{}) is not an axis-parallel unit step", from.0, from.1, to.0, to.1)]
    MalformedPath { from: (i64, i64), to: (i64, i64) },
    #[error("path reverses onto itself")]
    BacktrackingPath,
    #[error("path needs at least two vertices")]
    PathTooShort,
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("tileset syntax error: {0}")]
    Syntax(String),
    #[error("duplicate tile id {0:?}")]
    DuplicateTileId(String),
    #[error("rule references unknown tile id {0:?}")]
    UnresolvedId(String),
    #[error("duplicate rule for parent {0:?}")]
    DuplicateRule(String),
    #[error("scale {0} is out of range (the inflation factor must be at least 2)")]
    ScaleOutOfRange(i64),
    #[error("tile {id:?}: {source}")]
    BadShape {
        id: String,
        source: GeometryError,
    },
    #[error("tile {id:?} mark {index}: {reason}")]
    BadMark {
        id: String,
        index: usize,
        reason: String,
    },
    #[error("tile {0:?} has no substitution rule")]
    NoRuleForTile(String),
    #[error("unknown tile id {0:?}")]
    UnknownTile(String),
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("tile {0:?} has no substitution rule and cannot be expanded")]
    UnruledTile(String),
    #[error("unknown tile id {0:?} in patch")]
    UnknownTile(String),
    #[error("patch overlaps itself at cell {0}")]
    Overlap(Cell),
    #[error("patch references tileset {patch:?} but was given tileset {tileset:?}")]
    TilesetMismatch { patch: String, tileset: String },
}

#[derive(Debug, Error)]
pub enum AlgebraError {
    #[error("unknown tile id {0:?}")]
    UnknownTile(String),
    #[error("pair relation of {a:?} and {b:?} does not form a polyomino: {reason}")]
    BadPairRelation { a: String, b: String, reason: String },
    #[error("fusion precondition failed: {unmatched_a} occurrences of {a:?} and {unmatched_b} of {b:?} are unpaired at depth {depth}")]
    UnmatchedOccurrences {
        a: String,
        b: String,
        unmatched_a: usize,
        unmatched_b: usize,
        depth: u32,
    },
    #[error("tile id {0:?} already exists")]
    IdExists(String),
    #[error("invalid decomposition of {target:?}: {reason}")]
    InvalidDecomposition { target: String, reason: String },
    #[error("tile {0:?} still has a rule or is a rule parent; eliminate applies to rule children only")]
    TargetHasRule(String),
    #[error("result of rewrite failed validation: {0}")]
    InvalidResult(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("tile {0:?} has no substitution rule")]
    UnruledTile(String),
    #[error("analysis window lies outside the patch hull")]
    WindowOutOfRange,
    #[error(transparent)]
    Engine(#[from] EngineError),
}
