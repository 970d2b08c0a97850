//! Symmetry group of the reference cell: the 48 signed permutation matrices
//! in 3D, the 8 of the square in 2D, acting about the cell center.

use std::collections::HashMap;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::nodes::{first_midpoint, node_coord, node_count, node_id_at, LocalNodeId, RefinementKey};
use crate::geometry::{facet_key, reference_atoms, Direction, LocalCoord, HALF};

/// `(g p)_i = signs[i] * p_{perm[i]}` in coordinates centered at the cell
/// midpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SymmetryOp {
    pub perm: [usize; 3],
    pub signs: [i64; 3],
}

impl SymmetryOp {
    pub const IDENTITY: SymmetryOp = SymmetryOp {
        perm: [0, 1, 2],
        signs: [1, 1, 1],
    };

    pub fn apply_vector(&self, v: [i64; 3]) -> [i64; 3] {
        [
            self.signs[0] * v[self.perm[0]],
            self.signs[1] * v[self.perm[1]],
            self.signs[2] * v[self.perm[2]],
        ]
    }

    pub fn apply_point(&self, p: LocalCoord, dim: usize) -> LocalCoord {
        let mut c = p;
        for x in c.iter_mut().take(dim) {
            *x -= HALF;
        }
        let mut r = self.apply_vector(c);
        for x in r.iter_mut().take(dim) {
            *x += HALF;
        }
        r
    }

    pub fn apply_direction(&self, n: Direction) -> Direction {
        self.apply_vector(n)
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &SymmetryOp) -> SymmetryOp {
        let mut perm = [0; 3];
        let mut signs = [0; 3];
        for i in 0..3 {
            perm[i] = other.perm[self.perm[i]];
            signs[i] = self.signs[i] * other.signs[self.perm[i]];
        }
        SymmetryOp { perm, signs }
    }

    pub fn inverse(&self) -> SymmetryOp {
        let mut perm = [0; 3];
        let mut signs = [0; 3];
        for i in 0..3 {
            perm[self.perm[i]] = i;
            signs[self.perm[i]] = self.signs[i];
        }
        SymmetryOp { perm, signs }
    }

    pub fn determinant(&self) -> i64 {
        let p = self.perm;
        let mut inversions = 0;
        for i in 0..3 {
            for j in i + 1..3 {
                if p[i] > p[j] {
                    inversions += 1;
                }
            }
        }
        let s = if inversions % 2 == 0 { 1 } else { -1 };
        s * self.signs.iter().product::<i64>()
    }

    pub fn apply_node(&self, dim: usize, id: LocalNodeId) -> LocalNodeId {
        node_id_at(dim, self.apply_point(node_coord(dim, id), dim)).expect("node maps to node")
    }

    pub fn apply_key(&self, dim: usize, key: RefinementKey) -> RefinementKey {
        let first = first_midpoint(dim);
        let mut out = 0;
        let mut bits = key.0;
        while bits != 0 {
            let b = bits.trailing_zeros();
            bits &= bits - 1;
            let m = self.apply_node(dim, first + b as u8);
            out |= 1 << (m - first);
        }
        RefinementKey(out)
    }
}

/// Group elements in a fixed order, identity first. The position in this
/// list is the serialized symmetry id.
pub fn group(dim: usize) -> &'static [SymmetryOp] {
    static G2: OnceLock<Vec<SymmetryOp>> = OnceLock::new();
    static G3: OnceLock<Vec<SymmetryOp>> = OnceLock::new();
    match dim {
        2 => G2.get_or_init(|| {
            let mut g = Vec::new();
            for perm in [[0, 1, 2], [1, 0, 2]] {
                for s in 0..4 {
                    let signs = [sign(s, 0), sign(s, 1), 1];
                    g.push(SymmetryOp { perm, signs });
                }
            }
            g
        }),
        3 => G3.get_or_init(|| {
            let mut g = Vec::new();
            for perm in [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]] {
                for s in 0..8 {
                    g.push(SymmetryOp {
                        perm,
                        signs: [sign(s, 0), sign(s, 1), sign(s, 2)],
                    });
                }
            }
            g
        }),
        _ => panic!("unsupported dimension {dim}"),
    }
}

fn sign(s: usize, k: usize) -> i64 {
    if s >> k & 1 == 1 {
        -1
    } else {
        1
    }
}

pub fn op_index(dim: usize, op: &SymmetryOp) -> usize {
    group(dim).iter().position(|g| g == op).expect("element of the group")
}

/// Tables of the induced permutations of nodes and atoms.
pub(crate) struct Induced {
    pub nodes: Vec<Vec<LocalNodeId>>,
    pub atoms: Vec<Vec<u16>>,
}

pub(crate) fn induced(dim: usize) -> &'static Induced {
    static I2: OnceLock<Induced> = OnceLock::new();
    static I3: OnceLock<Induced> = OnceLock::new();
    let build = || {
        let atoms = reference_atoms(dim);
        let by_centroid: HashMap<LocalCoord, u16> =
            atoms.iter().enumerate().map(|(i, a)| (a.centroid, i as u16)).collect();
        let by_shape: HashMap<Vec<LocalCoord>, u16> = atoms
            .iter()
            .enumerate()
            .map(|(i, a)| (facet_key(&a.vertices), i as u16))
            .collect();
        let g = group(dim);
        Induced {
            nodes: g
                .iter()
                .map(|op| (0..node_count(dim) as u8).map(|id| op.apply_node(dim, id)).collect())
                .collect(),
            atoms: g
                .iter()
                .map(|op| {
                    atoms
                        .iter()
                        .map(|a| {
                            let c = op.apply_point(a.centroid, dim);
                            let i = by_centroid[&c];
                            let vs: Vec<LocalCoord> = a.vertices.iter().map(|&v| op.apply_point(v, dim)).collect();
                            debug_assert_eq!(by_shape[&facet_key(&vs)], i);
                            i
                        })
                        .collect()
                })
                .collect(),
        }
    };
    match dim {
        2 => I2.get_or_init(build),
        3 => I3.get_or_init(build),
        _ => panic!("unsupported dimension {dim}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pattern::nodes::enumerate_valid_keys;

    #[test]
    fn group_axioms() {
        for (dim, order) in [(2, 8), (3, 48)] {
            let g = group(dim);
            assert_eq!(g.len(), order);
            assert_eq!(g[0], SymmetryOp::IDENTITY);
            for a in g {
                assert_eq!(a.compose(&a.inverse()), SymmetryOp::IDENTITY);
                assert_eq!(a.inverse().compose(a), SymmetryOp::IDENTITY);
                for b in g {
                    assert!(g.contains(&a.compose(b)), "closure");
                }
            }
        }
    }

    #[test]
    fn composition_matches_action() {
        let g = group(3);
        let p = [6, 18, 42];
        for a in g {
            for b in g {
                assert_eq!(a.compose(b).apply_point(p, 3), a.apply_point(b.apply_point(p, 3), 3));
            }
        }
    }

    #[test]
    fn key_action_preserves_validity() {
        for dim in [2, 3] {
            for k in enumerate_valid_keys(dim) {
                for op in group(dim) {
                    let m = op.apply_key(dim, k);
                    assert!(m.is_valid(dim));
                    assert_eq!(m.0.count_ones(), k.0.count_ones());
                }
            }
        }
    }

    #[test]
    fn induced_permutations_are_bijections() {
        for dim in [2, 3] {
            let ind = induced(dim);
            for perm in ind.atoms.iter() {
                let mut s = perm.clone();
                s.sort_unstable();
                assert_eq!(s, (0..perm.len() as u16).collect::<Vec<_>>());
            }
            for perm in ind.nodes.iter() {
                // corners to corners, midpoints to midpoints of the same kind
                for (id, &m) in perm.iter().enumerate() {
                    assert_eq!((id as u8) < first_midpoint(dim), m < first_midpoint(dim));
                }
            }
        }
    }
}
