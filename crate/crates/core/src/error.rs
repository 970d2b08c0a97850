use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid refinement key {key:#x} for dimension {dim}: face bit without its edge bits")]
    InvalidKey { key: u32, dim: usize },
    #[error("refinement would exceed the level cap {cap}")]
    LevelCap { cap: u8 },
    #[error("cell {0} is not a leaf of the grid")]
    NotALeaf(String),
    #[error("no pattern table entry for key {0:#x} (grading violated?)")]
    MissingKey(u32),
    #[error("dimension mismatch: grid is {grid}D, pattern table is {table}D")]
    DimensionMismatch { grid: usize, table: usize },
    #[error("time step {dt} exceeds the CFL bound {max}")]
    Cfl { dt: f64, max: f64 },
    #[error("malformed input: {0}")]
    Format(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
