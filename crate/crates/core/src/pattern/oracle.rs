//! Brute-force sample-lattice Voronoi assignment, used as an independent
//! check of the atom construction.

use std::collections::BTreeMap;

use rand::Rng;

use super::nodes::LocalNodeId;
use crate::grid::{CellIndex, PrimalGrid};
use super::RefinementKey;
use crate::error::Result;
use crate::geometry::{linf_dist2_scaled, LocalCoord, SCALE};

/// Default lattice resolution per cell edge.
pub const ORACLE_RESOLUTION: usize = 96;

/// Node reference for assignments that may include nodes of neighbouring
/// cells. Cell nodes sort first, so they win exact ties.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum OracleNode {
    Local(LocalNodeId),
    Outside(usize),
}

/// Closest node by (L-infinity, Euclidean, id).
pub fn closest<I: Copy + Ord>(p: LocalCoord, nodes: &[(I, LocalCoord)]) -> I {
    nodes
        .iter()
        .map(|&(id, c)| {
            let (a, b) = linf_dist2_scaled(p, c);
            (a, b, id)
        })
        .min()
        .expect("non-empty node set")
        .2
}

/// Sample-cube centers of a `res^dim` lattice on the reference cell, in
/// coordinates scaled by `2 * res` relative to the 48-unit cell; the centers
/// are the odd multiples of 48.
pub fn sample_points(dim: usize, res: usize) -> impl Iterator<Item = LocalCoord> {
    let r = res as i64;
    let nz = if dim == 3 { r } else { 1 };
    (0..nz).flat_map(move |k| {
        (0..r).flat_map(move |j| {
            (0..r).map(move |i| {
                let z = if dim == 3 { (2 * k + 1) * SCALE } else { 0 };
                [(2 * i + 1) * SCALE, (2 * j + 1) * SCALE, z]
            })
        })
    })
}

fn scale_node(c: LocalCoord, dim: usize, res: usize) -> LocalCoord {
    let f = 2 * res as i64;
    let mut s = c.map(|x| x * f);
    if dim == 2 {
        s[2] = 0;
    }
    s
}

/// Owner of every sample point, in [`sample_points`] order.
pub fn lattice_owners<I: Copy + Ord>(dim: usize, res: usize, nodes: &[(I, LocalCoord)]) -> Vec<I> {
    let scaled: Vec<(I, LocalCoord)> = nodes.iter().map(|&(i, c)| (i, scale_node(c, dim, res))).collect();
    sample_points(dim, res).map(|p| closest(p, &scaled)).collect()
}

/// Volume fractions of the nodes of `key` from a `res^dim` sample lattice.
pub fn local_voronoi_oracle_res(key: RefinementKey, dim: usize, res: usize) -> Result<BTreeMap<LocalNodeId, f64>> {
    key.validate(dim)?;
    let owners = lattice_owners(dim, res, &key.nodes(dim));
    let total = owners.len() as f64;
    let mut counts: BTreeMap<LocalNodeId, usize> = key.nodes(dim).iter().map(|&(id, _)| (id, 0)).collect();
    for o in owners {
        *counts.get_mut(&o).unwrap() += 1;
    }
    Ok(counts.into_iter().map(|(k, c)| (k, c as f64 / total)).collect())
}

pub fn local_voronoi_oracle(key: RefinementKey, dim: usize) -> Result<BTreeMap<LocalNodeId, f64>> {
    local_voronoi_oracle_res(key, dim, ORACLE_RESOLUTION)
}

/// Number of sample points whose owner changes when `outside` nodes (given
/// in reference-cell coordinates, possibly beyond `[0, 48]`) are added to
/// the cell's own node set.
pub fn neighbor_mismatches(key: RefinementKey, dim: usize, outside: &[LocalCoord], res: usize) -> Result<usize> {
    key.validate(dim)?;
    let local: Vec<(OracleNode, LocalCoord)> = key
        .nodes(dim)
        .into_iter()
        .map(|(id, c)| (OracleNode::Local(id), c))
        .collect();
    let mut all = local.clone();
    all.extend(outside.iter().enumerate().map(|(i, &c)| (OracleNode::Outside(i), c)));
    let a = lattice_owners(dim, res, &local);
    let b = lattice_owners(dim, res, &all);
    Ok(a.iter().zip(&b).filter(|(x, y)| x != y).count())
}

/// A leaf together with the nodes of every other leaf touching it, in the
/// leaf's reference coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Neighborhood {
    pub grid: PrimalGrid,
    pub center: CellIndex,
    pub key: RefinementKey,
    pub outside: Vec<LocalCoord>,
}

/// Random graded two-level neighborhood: an interior cell of the uniform
/// level-2 grid whose touching cells are each refined with probability 1/2.
pub fn random_neighborhood(dim: usize, rng: &mut impl Rng) -> Result<Neighborhood> {
    let base = PrimalGrid::uniform(dim, 2)?;
    let mut coords = [0u32; 3];
    for c in coords.iter_mut().take(dim) {
        *c = rng.gen_range(1..=2);
    }
    let center = CellIndex::new(2, coords);
    let mut marked = Vec::new();
    for off in neighbor_offsets(dim) {
        if let Some(n) = center.offset(off, dim) {
            if rng.gen_bool(0.5) {
                marked.push(n);
            }
        }
    }
    let grid = base.refine(&marked)?;
    touching_nodes(grid, center)
}

fn neighbor_offsets(dim: usize) -> Vec<[i32; 3]> {
    let r = if dim == 3 { -1..=1 } else { 0..=0 };
    let mut v = Vec::new();
    for k in r {
        for j in -1..=1 {
            for i in -1..=1 {
                if [i, j, k] != [0, 0, 0] {
                    v.push([i, j, k]);
                }
            }
        }
    }
    v
}

/// Collects the nodes of all leaves sharing at least a point with `center`.
pub fn touching_nodes(grid: PrimalGrid, center: CellIndex) -> Result<Neighborhood> {
    let dim = grid.dim();
    let l = grid.max_level();
    let (lo, h) = center.box_at(l);
    let touches = |c: &CellIndex| {
        let (clo, ch) = c.box_at(l);
        (0..dim).all(|i| clo[i] <= lo[i] + h && lo[i] <= clo[i] + ch)
    };
    let mut outside = Vec::new();
    for c in grid.leaves().filter(|c| **c != center && touches(c)) {
        for (_, k) in grid.boundary_nodes(*c)? {
            let mut p = [0i64; 3];
            for i in 0..dim {
                p[i] = (k[i] as i64 - lo[i] as i64) * SCALE / h as i64;
            }
            outside.push(p);
        }
    }
    outside.sort_unstable();
    outside.dedup();
    let key = grid.refinement_key(center)?;
    Ok(Neighborhood {
        grid,
        center,
        key,
        outside,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pattern::build_pattern;

    #[test]
    fn key_zero_oracle() {
        let v = local_voronoi_oracle(RefinementKey(0), 3).unwrap();
        assert_eq!(v.len(), 8);
        for x in v.values() {
            assert!((x - 0.125).abs() < 0.02 * 0.125);
        }
    }

    #[test]
    fn full_key_oracle_matches_atoms() {
        for (dim, key) in [(3, (1u32 << 18) - 1), (2, 15)] {
            let k = RefinementKey(key);
            let v = local_voronoi_oracle(k, dim).unwrap();
            let p = build_pattern(k, dim).unwrap();
            for r in &p.regions {
                let exact = *r.volume_fraction(dim).numer() as f64 / *r.volume_fraction(dim).denom() as f64;
                assert!((v[&r.node] - exact).abs() <= 0.02 * exact, "node {}", r.node);
            }
        }
    }

    #[test]
    fn far_nodes_change_nothing() {
        let far = [[-48, -48, -48], [96, 24, 24], [0, 0, -48]];
        assert_eq!(neighbor_mismatches(RefinementKey(0), 3, &far, 24).unwrap(), 0);
    }

    #[test]
    fn random_neighborhoods_change_nothing() {
        use rand::SeedableRng;
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        for dim in [2, 3] {
            for _ in 0..3 {
                let n = random_neighborhood(dim, &mut rng).unwrap();
                assert!(n.grid.is_graded());
                assert!(n.outside.len() >= if dim == 3 { 56 } else { 12 });
                assert_eq!(neighbor_mismatches(n.key, dim, &n.outside, 24).unwrap(), 0);
            }
        }
    }
}
