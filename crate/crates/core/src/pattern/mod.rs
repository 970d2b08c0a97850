//! Local patterns: the partition of one primal cell into local L-infinity
//! Voronoi regions of its boundary nodes, built atom by atom.

pub mod io;
pub mod nodes;
pub mod oracle;
pub mod symmetry;
pub mod table;

use std::collections::BTreeMap;

use num_rational::Ratio;

use crate::error::Result;
use crate::geometry::{
    assign_atom, cell_volume_units, facet_neighbors, merge_coplanar, reference_atoms, Facet, FacePolygon,
    LocalCoord, SCALE,
};
pub use nodes::{enumerate_valid_keys, LocalNodeId, RefinementKey};
pub use symmetry::SymmetryOp;
use symmetry::{induced, op_index};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Region {
    pub node: LocalNodeId,
    /// Ids into [`reference_atoms`], ascending.
    pub atoms: Vec<u16>,
    /// Volume in lattice units, see [`cell_volume_units`].
    pub volume: i64,
}

impl Region {
    pub fn volume_fraction(&self, dim: usize) -> Ratio<i64> {
        Ratio::new(self.volume, cell_volume_units(dim))
    }
}

/// Face between the regions of nodes `a < b`, normal pointing from `a` to `b`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct InternalFace {
    pub a: LocalNodeId,
    pub b: LocalNodeId,
    pub polygon: FacePolygon,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalPattern {
    pub dim: usize,
    pub key: RefinementKey,
    /// Owning node per atom.
    pub owner: Vec<LocalNodeId>,
    /// Sorted by node id.
    pub regions: Vec<Region>,
    /// Sorted; polygons normalized (see [`normalize_polygon`]).
    pub internal_faces: Vec<InternalFace>,
    /// Per cell face: atom with a facet on that face -> owning node.
    pub boundary_traces: Vec<BTreeMap<u16, LocalNodeId>>,
}

/// Assigns every atom of the reference cell to its closest node of `key`.
pub fn build_pattern(key: RefinementKey, dim: usize) -> Result<LocalPattern> {
    key.validate(dim)?;
    let nodes = key.nodes(dim);
    let owner = reference_atoms(dim).iter().map(|a| assign_atom(a, &nodes)).collect();
    Ok(LocalPattern::from_owners(dim, key, owner))
}

impl LocalPattern {
    pub fn from_owners(dim: usize, key: RefinementKey, owner: Vec<LocalNodeId>) -> LocalPattern {
        let atoms = reference_atoms(dim);
        let nbrs = facet_neighbors(dim);
        let mut regions: BTreeMap<LocalNodeId, Region> = BTreeMap::new();
        let mut shared: BTreeMap<(LocalNodeId, LocalNodeId), Vec<Facet>> = BTreeMap::new();
        let mut traces = vec![BTreeMap::new(); 2 * dim];
        for (i, atom) in atoms.iter().enumerate() {
            let o = owner[i];
            let r = regions.entry(o).or_insert_with(|| Region {
                node: o,
                atoms: Vec::new(),
                volume: 0,
            });
            r.atoms.push(i as u16);
            r.volume += atom.volume;
            for (fi, f) in atom.facets.iter().enumerate() {
                match nbrs[i][fi] {
                    Some(j) if owner[j] != o && o < owner[j] => {
                        shared.entry((o, owner[j])).or_default().push(f.clone());
                    }
                    Some(_) => {}
                    None => {
                        traces[cell_face_of(f)].insert(i as u16, o);
                    }
                }
            }
        }
        let mut internal_faces: Vec<InternalFace> = shared
            .into_iter()
            .flat_map(|((a, b), fs)| {
                merge_coplanar(fs).into_iter().map(move |p| InternalFace {
                    a,
                    b,
                    polygon: normalize_polygon(p),
                })
            })
            .collect();
        internal_faces.sort_by(face_order);
        LocalPattern {
            dim,
            key,
            owner,
            regions: regions.into_values().collect(),
            internal_faces,
            boundary_traces: traces,
        }
    }

    pub fn region(&self, node: LocalNodeId) -> Option<&Region> {
        self.regions.iter().find(|r| r.node == node)
    }

    /// Pieces of cell face `f` merged per owning node: the trace polygons,
    /// normals pointing out of the cell.
    pub fn trace_polygons(&self, f: usize) -> Vec<(LocalNodeId, FacePolygon)> {
        let atoms = reference_atoms(self.dim);
        let mut per_node: BTreeMap<LocalNodeId, Vec<Facet>> = BTreeMap::new();
        for (&a, &node) in &self.boundary_traces[f] {
            let atom = &atoms[a as usize];
            for facet in &atom.facets {
                if cell_face_of_opt(facet) == Some(f) {
                    per_node.entry(node).or_default().push(facet.clone());
                }
            }
        }
        per_node
            .into_iter()
            .flat_map(|(n, fs)| merge_coplanar(fs).into_iter().map(move |p| (n, normalize_polygon(p))))
            .collect()
    }
}

fn face_order(x: &InternalFace, y: &InternalFace) -> std::cmp::Ordering {
    (x.a, x.b, &x.polygon.vertices, x.polygon.normal).cmp(&(y.a, y.b, &y.polygon.vertices, y.polygon.normal))
}

fn cell_face_of_opt(f: &Facet) -> Option<usize> {
    let ax = (0..3).find(|&k| f.normal[k] != 0)?;
    if f.normal.iter().filter(|&&x| x != 0).count() != 1 {
        return None;
    }
    let v = f.vertices[0][ax];
    if !f.vertices.iter().all(|p| p[ax] == v) {
        return None;
    }
    match v {
        0 if f.normal[ax] < 0 => Some(2 * ax),
        SCALE if f.normal[ax] > 0 => Some(2 * ax + 1),
        _ => None,
    }
}

fn cell_face_of(f: &Facet) -> usize {
    cell_face_of_opt(f).expect("unshared facet lies on the cell boundary")
}

/// Rotates a polygon so its smallest vertex comes first (orientation kept);
/// 2D segments are sorted, their orientation lives in the normal.
pub fn normalize_polygon(mut p: FacePolygon) -> FacePolygon {
    if p.vertices.len() == 2 {
        p.vertices.sort_unstable();
    } else {
        let i = (0..p.vertices.len()).min_by_key(|&i| p.vertices[i]).unwrap();
        p.vertices.rotate_left(i);
    }
    p
}

fn transform_polygon(p: &FacePolygon, op: &SymmetryOp, dim: usize) -> FacePolygon {
    let mut vertices: Vec<LocalCoord> = p.vertices.iter().map(|&v| op.apply_point(v, dim)).collect();
    if dim == 3 && op.determinant() < 0 {
        vertices.reverse();
    }
    normalize_polygon(FacePolygon {
        vertices,
        normal: op.apply_direction(p.normal),
        area: p.area,
    })
}

fn reverse_polygon(p: FacePolygon) -> FacePolygon {
    let mut p = p;
    p.vertices.reverse();
    p.normal = p.normal.map(|x| -x);
    normalize_polygon(p)
}

/// Transforms a pattern by a cell symmetry: atoms, nodes, faces and traces
/// are mapped, volumes are unchanged.
pub fn apply_symmetry(pattern: &LocalPattern, op: &SymmetryOp) -> LocalPattern {
    let dim = pattern.dim;
    let ind = induced(dim);
    let gi = op_index(dim, op);
    let node_map = &ind.nodes[gi];
    let atom_map = &ind.atoms[gi];

    let mut owner = vec![0; pattern.owner.len()];
    for (a, &o) in pattern.owner.iter().enumerate() {
        owner[atom_map[a] as usize] = node_map[o as usize];
    }
    let mut regions: Vec<Region> = pattern
        .regions
        .iter()
        .map(|r| {
            let mut atoms: Vec<u16> = r.atoms.iter().map(|&a| atom_map[a as usize]).collect();
            atoms.sort_unstable();
            Region {
                node: node_map[r.node as usize],
                atoms,
                volume: r.volume,
            }
        })
        .collect();
    regions.sort_by_key(|r| r.node);

    let mut internal_faces: Vec<InternalFace> = pattern
        .internal_faces
        .iter()
        .map(|f| {
            let (a, b) = (node_map[f.a as usize], node_map[f.b as usize]);
            let poly = transform_polygon(&f.polygon, op, dim);
            if a < b {
                InternalFace { a, b, polygon: poly }
            } else {
                InternalFace {
                    a: b,
                    b: a,
                    polygon: reverse_polygon(poly),
                }
            }
        })
        .collect();
    internal_faces.sort_by(face_order);

    let mut boundary_traces = vec![BTreeMap::new(); 2 * dim];
    for (f, trace) in pattern.boundary_traces.iter().enumerate() {
        let (ax, side) = (f / 2, f % 2);
        let mut n = [0i64; 3];
        n[ax] = if side == 1 { 1 } else { -1 };
        let m = op.apply_direction(n);
        let max = (0..3).find(|&k| m[k] != 0).unwrap();
        let g = 2 * max + (m[max] > 0) as usize;
        for (&a, &o) in trace {
            boundary_traces[g].insert(atom_map[a as usize], node_map[o as usize]);
        }
    }

    LocalPattern {
        dim,
        key: op.apply_key(dim, pattern.key),
        owner,
        regions,
        internal_faces,
        boundary_traces,
    }
}

#[cfg(test)]
mod tests {
    use super::symmetry::group;
    use super::*;
    use crate::geometry::{interface_faces, is_axis_or_diagonal};
    use rand::{Rng, SeedableRng};

    #[test]
    fn key_zero_patterns() {
        let p = build_pattern(RefinementKey(0), 3).unwrap();
        assert_eq!(p.regions.len(), 8);
        for r in &p.regions {
            assert_eq!(r.volume_fraction(3), Ratio::new(1, 8));
            assert_eq!(r.atoms.len(), 16);
        }
        // three center planes, four quarter squares each
        assert_eq!(p.internal_faces.len(), 12);
        for f in &p.internal_faces {
            assert_eq!(f.polygon.vertices.len(), 4);
            assert_eq!(f.polygon.area.face_ratio(3), Ratio::new(1, 4));
        }
        let p2 = build_pattern(RefinementKey(0), 2).unwrap();
        assert_eq!(p2.regions.len(), 4);
        assert!(p2.regions.iter().all(|r| r.volume_fraction(2) == Ratio::new(1, 4)));
        assert_eq!(p2.internal_faces.len(), 4);
    }

    #[test]
    fn full_key_pattern() {
        let p = build_pattern(RefinementKey((1 << 18) - 1), 3).unwrap();
        assert_eq!(p.regions.len(), 26);
        let total: Ratio<i64> = p.regions.iter().map(|r| r.volume_fraction(3)).sum();
        assert_eq!(total, Ratio::from_integer(1));
        for r in p.regions.iter().filter(|r| r.node < 8) {
            assert!(r.volume_fraction(3) < Ratio::new(1, 8));
        }
    }

    #[test]
    fn invalid_key_rejected() {
        assert!(build_pattern(RefinementKey(1 << 12), 3).is_err());
    }

    #[test]
    fn faces_are_merged_and_oriented() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(5);
        let keys = enumerate_valid_keys(3);
        for _ in 0..40 {
            let k = keys[rng.gen_range(0..keys.len())];
            let p = build_pattern(k, 3).unwrap();
            for f in &p.internal_faces {
                assert!(f.a < f.b);
                assert!(is_axis_or_diagonal(f.polygon.normal));
                // the normal leaves region a: region a's atoms lie behind the plane
                let d = crate::geometry::dot(f.polygon.normal, f.polygon.vertices[0]);
                let ra = p.region(f.a).unwrap();
                let behind = ra.atoms.iter().any(|&x| {
                    crate::geometry::dot(f.polygon.normal, reference_atoms(3)[x as usize].centroid) < d
                });
                assert!(behind);
            }
            // merged faces carry the whole shared area, pair by pair
            for ra in &p.regions {
                for rb in p.regions.iter().filter(|r| r.node > ra.node) {
                    let ra_atoms: Vec<usize> = ra.atoms.iter().map(|&x| x as usize).collect();
                    let rb_atoms: Vec<usize> = rb.atoms.iter().map(|&x| x as usize).collect();
                    let direct: i64 = interface_faces(&ra_atoms, &rb_atoms, 3)
                        .iter()
                        .map(|f| f.area.twice)
                        .sum();
                    let stored: i64 = p
                        .internal_faces
                        .iter()
                        .filter(|f| f.a == ra.node && f.b == rb.node)
                        .map(|f| f.polygon.area.twice)
                        .sum();
                    assert_eq!(direct, stored);
                }
            }
        }
    }

    #[test]
    fn identity_and_inverse() {
        let keys = enumerate_valid_keys(3);
        let mut rng = rand::rngs::StdRng::seed_from_u64(9);
        for _ in 0..20 {
            let k = keys[rng.gen_range(0..keys.len())];
            let g = group(3)[rng.gen_range(0..48)];
            let p = build_pattern(k, 3).unwrap();
            assert_eq!(apply_symmetry(&p, &SymmetryOp::IDENTITY), p);
            assert_eq!(apply_symmetry(&apply_symmetry(&p, &g), &g.inverse()), p);
        }
    }

    #[test]
    fn equivariance_2d_exhaustive() {
        for k in enumerate_valid_keys(2) {
            let p = build_pattern(k, 2).unwrap();
            for g in group(2) {
                let q = build_pattern(g.apply_key(2, k), 2).unwrap();
                assert_eq!(apply_symmetry(&p, g), q, "key {k:?} op {g:?}");
            }
        }
    }

    #[test]
    fn equivariance_3d_sampled() {
        let keys = enumerate_valid_keys(3);
        let mut rng = rand::rngs::StdRng::seed_from_u64(1);
        for _ in 0..60 {
            let k = keys[rng.gen_range(0..keys.len())];
            let g = group(3)[rng.gen_range(0..48)];
            let p = build_pattern(k, 3).unwrap();
            let q = build_pattern(g.apply_key(3, k), 3).unwrap();
            assert_eq!(apply_symmetry(&p, &g), q, "key {k:?} op {g:?}");
        }
    }
}
