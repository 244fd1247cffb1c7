use std::fmt;

use thiserror::Error;

/// A red side of a hexagonal face: `slot` indexes r0, r1, r2 in the cyclic
/// order r0 b0 r1 b1 r2 b2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Side {
    pub face: usize,
    pub slot: usize,
}

impl Side {
    pub fn new(face: usize, slot: usize) -> Self {
        Side { face, slot }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(face {}, slot {})", self.face, self.slot)
    }
}

/// Names the hexagon side that failed validation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HexSide {
    A,
    B,
    C,
}

impl fmt::Display for HexSide {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            HexSide::A => "first side (a)",
            HexSide::B => "second side (b)",
            HexSide::C => "third side (c)",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{side} = {value} is not a finite positive length")]
    InvalidSide { side: HexSide, value: f64 },

    #[error("{side} = {value} exceeds the overflow limit {limit}")]
    SideTooLarge { side: HexSide, value: f64, limit: f64 },

    #[error("hexagon arc length overflowed for sides ({0}, {1}, {2})")]
    ArcOverflow(f64, f64, f64),

    #[error("loss of precision: sinh of the arc length underflowed for sides ({0}, {1}, {2})")]
    PrecisionLoss(f64, f64, f64),

    #[error("number of faces must be even and at least 2, got {0}")]
    InvalidFaceCount(usize),

    #[error("side index out of range: {0}")]
    SideOutOfRange(Side),

    #[error("self-paired side {0}")]
    SelfPairedSide(Side),

    #[error("duplicate side {0}")]
    DuplicateSide(Side),

    #[error("unmatched side {0}")]
    UnmatchedSide(Side),

    #[error("{what}: expected length {expected}, got {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("edge {edge} has non-positive or non-finite length {value}")]
    InvalidEdgeLength { edge: usize, value: f64 },

    #[error("{what}[{index}] = {value} must be finite and strictly positive")]
    NonPositiveEntry {
        what: &'static str,
        index: usize,
        value: f64,
    },

    #[error("{what}[{index}] = {value} is not finite")]
    NonFiniteEntry {
        what: &'static str,
        index: usize,
        value: f64,
    },

    #[error("conformal factor is not admissible: edge {edge} has margin {margin}")]
    Inadmissible { edge: usize, margin: f64 },

    #[error("edge {edge} would have length {length}, beyond the overflow limit")]
    EdgeOverflow { edge: usize, length: f64 },

    #[error("matrix is not negative definite: eigenvalue {eigenvalue} of -Laplacian is not positive")]
    NotNegativeDefinite { eigenvalue: f64 },

    #[error("invalid flow parameters: {0}")]
    InvalidSpec(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed document: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
