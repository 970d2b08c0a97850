//! Local node numbering on the reference cell and refinement keys.
//!
//! 3D ids: 0-7 corners (`x + 2y + 4z`), 8-11 x-parallel edge midpoints
//! (`8 + y + 2z`), 12-15 y-parallel (`12 + x + 2z`), 16-19 z-parallel
//! (`16 + x + 2y`), 20-25 face midpoints in the order x=0, x=1, y=0, y=1, z=0,
//! z=1. 2D ids: 0-3 corners (`x + 2y`), 4-5 x-parallel edge midpoints
//! (`4 + y`), 6-7 y-parallel (`6 + x`). Key bit `b` stands for the midpoint
//! node `first_midpoint(dim) + b`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{LocalCoord, HALF, SCALE};

pub type LocalNodeId = u8;

pub fn node_count(dim: usize) -> usize {
    if dim == 3 {
        26
    } else {
        8
    }
}

pub fn first_midpoint(dim: usize) -> LocalNodeId {
    1 << dim
}

pub fn key_bits(dim: usize) -> u32 {
    if dim == 3 {
        18
    } else {
        4
    }
}

/// Number of cell faces (`2 * dim`); in 2D the faces are the cell edges.
pub fn face_count(dim: usize) -> usize {
    2 * dim
}

pub fn node_coord(dim: usize, id: LocalNodeId) -> LocalCoord {
    let s = SCALE;
    let h = HALF;
    let b = |v: u8, k: u8| ((v >> k) & 1) as i64 * s;
    if dim == 2 {
        return match id {
            0..=3 => [b(id, 0), b(id, 1), 0],
            4 | 5 => [h, b(id - 4, 0), 0],
            6 | 7 => [b(id - 6, 0), h, 0],
            _ => panic!("2D node id {id} out of range"),
        };
    }
    match id {
        0..=7 => [b(id, 0), b(id, 1), b(id, 2)],
        8..=11 => [h, b(id - 8, 0), b(id - 8, 1)],
        12..=15 => [b(id - 12, 0), h, b(id - 12, 1)],
        16..=19 => [b(id - 16, 0), b(id - 16, 1), h],
        20..=25 => {
            let f = id - 20;
            let mut c = [h, h, h];
            c[(f / 2) as usize] = (f % 2) as i64 * s;
            c
        }
        _ => panic!("3D node id {id} out of range"),
    }
}

/// Inverse of [`node_coord`].
pub fn node_id_at(dim: usize, c: LocalCoord) -> Option<LocalNodeId> {
    (0..node_count(dim) as u8).find(|&id| node_coord(dim, id) == c)
}

/// Cell face `f` is the plane `coord[f / 2] == (f % 2) * 48`.
pub fn face_plane(f: usize) -> (usize, i64) {
    (f / 2, (f % 2) as i64 * SCALE)
}

/// Key bits whose midpoint node lies on cell face `f`: four edges plus the
/// face midpoint in 3D, the single edge midpoint in 2D.
pub fn face_mask(dim: usize, f: usize) -> u32 {
    let (ax, v) = face_plane(f);
    let first = first_midpoint(dim);
    (0..key_bits(dim))
        .filter(|&b| node_coord(dim, first + b as u8)[ax] == v)
        .fold(0, |m, b| m | 1 << b)
}

/// 18-bit (3D) or 4-bit (2D) hanging-node constellation of a leaf cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RefinementKey(pub u32);

impl RefinementKey {
    pub const EMPTY: RefinementKey = RefinementKey(0);

    pub fn has_bit(self, b: u32) -> bool {
        self.0 >> b & 1 == 1
    }

    /// A set face bit requires the bits of the four edges bounding that face.
    pub fn is_valid(self, dim: usize) -> bool {
        if self.0 >> key_bits(dim) != 0 {
            return false;
        }
        if dim == 2 {
            return true;
        }
        (0..6).all(|f| {
            let fb = 12 + f as u32;
            !self.has_bit(fb) || {
                let edges = face_mask(3, f) & !(1 << fb);
                self.0 & edges == edges
            }
        })
    }

    pub fn validate(self, dim: usize) -> Result<()> {
        if self.is_valid(dim) {
            Ok(())
        } else {
            Err(Error::InvalidKey { key: self.0, dim })
        }
    }

    /// Nodes present for this key: the corners and every midpoint whose bit
    /// is set, in id order.
    pub fn nodes(self, dim: usize) -> Vec<(LocalNodeId, LocalCoord)> {
        let first = first_midpoint(dim);
        (0..node_count(dim) as u8)
            .filter(|&id| id < first || self.has_bit((id - first) as u32))
            .map(|id| (id, node_coord(dim, id)))
            .collect()
    }

    /// The bits of this key that live on cell face `f`.
    pub fn face_config(self, dim: usize, f: usize) -> u32 {
        self.0 & face_mask(dim, f)
    }
}

/// All keys satisfying the face-implies-edges constraint, ascending.
pub fn enumerate_valid_keys(dim: usize) -> Vec<RefinementKey> {
    (0..1u32 << key_bits(dim))
        .map(RefinementKey)
        .filter(|k| k.is_valid(dim))
        .collect()
}
