//! Staggered dual grids for adaptively refined Cartesian meshes.
//!
//! A primal octree (quadtree in 2D) grid with 1-level grading is paired with
//! a dual grid holding one cell per primal node. Each dual cell is the
//! L-infinity Voronoi region of its node, assembled leaf by leaf from a
//! precomputed table of local patterns keyed by the hanging nodes on the
//! leaf boundary. A first-order staggered central scheme for linear
//! advection alternates between the two grids.

pub mod cost;
pub mod dual;
pub mod error;
pub mod geometry;
pub mod grid;
pub mod pattern;
pub mod solver;
pub mod vtk;

pub use cost::{flux_count, CensusRow, FluxCountReport, FluxInputs};
pub use dual::{assemble, gauss_check, grid_stats, sampling_oracle_check, DualCell, DualFace, DualMesh, MeshStats};
pub use error::{Error, Result};
pub use geometry::{reference_atoms, Atom, AtomKind};
pub use grid::{CellIndex, Indicator, NodeKey, PrimalGrid};
pub use pattern::table::{build_table, PatternTable};
pub use pattern::{build_pattern, LocalPattern, RefinementKey, SymmetryOp};
pub use solver::{run_advection, Field, Rotating, SchemeConfig, Staggering, Velocity};
