//! Graded adaptive Cartesian grids on the unit cube (octree in 3D, quadtree
//! in 2D). Face- and edge-adjacent leaves differ by at most one level.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pattern::nodes::{first_midpoint, key_bits, node_coord, LocalNodeId};
use crate::pattern::RefinementKey;
use crate::geometry::HALF;

/// Default hard cap on the refinement level.
pub const LEVEL_CAP: u8 = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellIndex {
    pub level: u8,
    pub coords: [u32; 3],
}

impl CellIndex {
    pub const ROOT: CellIndex = CellIndex {
        level: 0,
        coords: [0, 0, 0],
    };

    pub fn new(level: u8, coords: [u32; 3]) -> CellIndex {
        CellIndex { level, coords }
    }

    pub fn parent(self) -> Option<CellIndex> {
        (self.level > 0).then(|| CellIndex {
            level: self.level - 1,
            coords: self.coords.map(|c| c / 2),
        })
    }

    pub fn children(self, dim: usize) -> impl Iterator<Item = CellIndex> {
        let n = 1u32 << dim;
        (0..n).map(move |b| {
            let mut coords = self.coords.map(|c| 2 * c);
            for (k, c) in coords.iter_mut().enumerate().take(dim) {
                *c += (b >> k) & 1;
            }
            CellIndex {
                level: self.level + 1,
                coords,
            }
        })
    }

    /// Same-level cell shifted by `off`, if it lies inside the unit cube.
    pub fn offset(self, off: [i32; 3], dim: usize) -> Option<CellIndex> {
        let n = 1i64 << self.level;
        let mut coords = [0u32; 3];
        for k in 0..3 {
            let c = self.coords[k] as i64 + off[k] as i64;
            if k >= dim {
                if off[k] != 0 {
                    return None;
                }
                continue;
            }
            if c < 0 || c >= n {
                return None;
            }
            coords[k] = c as u32;
        }
        Some(CellIndex {
            level: self.level,
            coords,
        })
    }

    /// Lower corner and edge length at integer scale `2^scale_level`.
    pub fn box_at(self, scale_level: u8) -> ([u64; 3], u64) {
        debug_assert!(scale_level >= self.level);
        let h = 1u64 << (scale_level - self.level);
        (self.coords.map(|c| c as u64 * h), h)
    }

    pub fn width(self) -> f64 {
        1.0 / (1u64 << self.level) as f64
    }

    pub fn lower_corner(self) -> [f64; 3] {
        let h = self.width();
        self.coords.map(|c| c as f64 * h)
    }
}

impl std::fmt::Display for CellIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "L{}({},{},{})", self.level, self.coords[0], self.coords[1], self.coords[2])
    }
}

/// Global node position at scale `2^L`, `L` the grid's `max_level`.
pub type NodeKey = [u64; 3];

/// Result of locating a same-level cell in the leaf set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Lookup {
    /// The cell is covered by this leaf (the cell itself or an ancestor).
    Leaf(CellIndex),
    /// The cell is subdivided further.
    Refined,
    /// Outside the unit cube.
    Outside,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrimalGrid {
    dim: usize,
    leaves: BTreeSet<CellIndex>,
    level_cap: u8,
}

fn neighbor_offsets(dim: usize) -> Vec<[i32; 3]> {
    let r = if dim == 3 { -1..=1 } else { 0..=0 };
    let mut out = Vec::new();
    for z in r {
        for y in -1..=1 {
            for x in -1..=1 {
                let nz = [x, y, z].iter().filter(|&&v| v != 0).count();
                if nz >= 1 && nz < dim {
                    out.push([x, y, z]);
                }
            }
        }
    }
    out
}

impl PrimalGrid {
    pub fn root(dim: usize) -> PrimalGrid {
        assert!(dim == 2 || dim == 3, "unsupported dimension {dim}");
        PrimalGrid {
            dim,
            leaves: BTreeSet::from([CellIndex::ROOT]),
            level_cap: LEVEL_CAP,
        }
    }

    pub fn uniform(dim: usize, level: u8) -> Result<PrimalGrid> {
        let mut g = PrimalGrid::root(dim);
        if level > g.level_cap {
            return Err(Error::LevelCap { cap: g.level_cap });
        }
        for _ in 0..level {
            let mut next = BTreeSet::new();
            for c in &g.leaves {
                next.extend(c.children(dim));
            }
            g.leaves = next;
        }
        Ok(g)
    }

    pub fn with_level_cap(mut self, cap: u8) -> PrimalGrid {
        self.level_cap = cap;
        self
    }

    /// Builds a grid from an explicit leaf list, checking the partition and
    /// grading invariants.
    pub fn from_leaves(dim: usize, leaves: impl IntoIterator<Item = CellIndex>) -> Result<PrimalGrid> {
        if dim != 2 && dim != 3 {
            return Err(Error::Format(format!("unsupported dimension {dim}")));
        }
        let g = PrimalGrid {
            dim,
            leaves: leaves.into_iter().collect(),
            level_cap: LEVEL_CAP,
        };
        for c in &g.leaves {
            let n = 1u64 << c.level;
            if c.level > g.level_cap
                || c.coords.iter().take(dim).any(|&x| x as u64 >= n)
                || c.coords.iter().skip(dim).any(|&x| x != 0)
            {
                return Err(Error::Format(format!("cell {c} out of range")));
            }
        }
        if !g.is_partition() {
            return Err(Error::Format("leaves do not partition the unit cube".into()));
        }
        if !g.is_graded() {
            return Err(Error::Format("leaves violate the one-level grading".into()));
        }
        Ok(g)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn leaves(&self) -> impl ExactSizeIterator<Item = &CellIndex> + '_ {
        self.leaves.iter()
    }

    pub fn leaf_count(&self) -> usize {
        self.leaves.len()
    }

    pub fn is_leaf(&self, c: CellIndex) -> bool {
        self.leaves.contains(&c)
    }

    pub fn max_level(&self) -> u8 {
        self.leaves.iter().map(|c| c.level).max().unwrap_or(0)
    }

    pub fn locate(&self, c: CellIndex) -> Lookup {
        let mut a = Some(c);
        while let Some(x) = a {
            if self.leaves.contains(&x) {
                return Lookup::Leaf(x);
            }
            a = x.parent();
        }
        Lookup::Refined
    }

    fn locate_offset(&self, c: CellIndex, off: [i32; 3]) -> Lookup {
        match c.offset(off, self.dim) {
            Some(n) => self.locate(n),
            None => Lookup::Outside,
        }
    }

    /// Subdivides the marked leaves, refining coarser face/edge neighbours
    /// first so the grading holds throughout.
    pub fn refine(&self, marked: &[CellIndex]) -> Result<PrimalGrid> {
        let mut g = self.clone();
        let mut marked = marked.to_vec();
        marked.sort_unstable();
        for c in marked {
            if !self.leaves.contains(&c) {
                return Err(Error::NotALeaf(c.to_string()));
            }
            g.refine_leaf(c)?;
        }
        Ok(g)
    }

    fn refine_leaf(&mut self, c: CellIndex) -> Result<()> {
        if !self.leaves.contains(&c) {
            return Ok(());
        }
        if c.level >= self.level_cap {
            return Err(Error::LevelCap { cap: self.level_cap });
        }
        for off in neighbor_offsets(self.dim) {
            while let Lookup::Leaf(m) = self.locate_offset(c, off) {
                if m.level >= c.level {
                    break;
                }
                self.refine_leaf(m)?;
            }
        }
        self.leaves.remove(&c);
        self.leaves.extend(c.children(self.dim));
        Ok(())
    }

    /// Refines every leaf below `target_level` whose closed region shows a
    /// change of the indicator on a 5-point-per-axis sample lattice, until no
    /// such leaf is left.
    pub fn refine_by_indicator(&self, indicator: &dyn Fn([f64; 3]) -> bool, target_level: u8) -> Result<PrimalGrid> {
        let mut g = self.clone();
        loop {
            let marked: Vec<CellIndex> = g
                .leaves
                .iter()
                .copied()
                .filter(|c| c.level < target_level && sign_changes(*c, g.dim, indicator))
                .collect();
            if marked.is_empty() {
                return Ok(g);
            }
            g = g.refine(&marked)?;
        }
    }

    /// Key of hanging midpoints: a midpoint is a grid node exactly when one
    /// of the same-level cells around it is subdivided.
    pub fn refinement_key(&self, c: CellIndex) -> Result<RefinementKey> {
        if !self.is_leaf(c) {
            return Err(Error::NotALeaf(c.to_string()));
        }
        let first = first_midpoint(self.dim);
        let mut key = 0u32;
        for b in 0..key_bits(self.dim) {
            let m = node_coord(self.dim, first + b as u8);
            // directions in which the midpoint sits on the cell boundary
            let side: Vec<i32> = (0..3)
                .map(|k| {
                    if k >= self.dim || m[k] == HALF {
                        0
                    } else if m[k] == 0 {
                        -1
                    } else {
                        1
                    }
                })
                .collect();
            let free: Vec<usize> = (0..3).filter(|&k| side[k] != 0).collect();
            let refined = (1..1u32 << free.len()).any(|mask| {
                let mut off = [0i32; 3];
                for (t, &k) in free.iter().enumerate() {
                    if mask >> t & 1 == 1 {
                        off[k] = side[k];
                    }
                }
                self.locate_offset(c, off) == Lookup::Refined
            });
            if refined {
                key |= 1 << b;
            }
        }
        let key = RefinementKey(key);
        debug_assert!(key.is_valid(self.dim));
        Ok(key)
    }

    /// Position of local node `id` of leaf `c` at scale `2^max_level`.
    pub fn node_key(&self, c: CellIndex, id: LocalNodeId, max_level: u8) -> NodeKey {
        let (lo, h) = c.box_at(max_level);
        let p = node_coord(self.dim, id);
        let mut k = [0u64; 3];
        for i in 0..self.dim {
            k[i] = lo[i] + (p[i] as u64 / HALF as u64) * h / 2;
        }
        k
    }

    /// Corners plus the midpoints present in the cell's key.
    pub fn boundary_nodes(&self, c: CellIndex) -> Result<Vec<(LocalNodeId, NodeKey)>> {
        let key = self.refinement_key(c)?;
        let l = self.max_level();
        Ok(key
            .nodes(self.dim)
            .into_iter()
            .map(|(id, _)| (id, self.node_key(c, id, l)))
            .collect())
    }

    /// All grid nodes: the corners of every leaf.
    pub fn node_set(&self) -> BTreeSet<NodeKey> {
        let l = self.max_level();
        let mut s = BTreeSet::new();
        for &c in &self.leaves {
            for id in 0..first_midpoint(self.dim) {
                s.insert(self.node_key(c, id, l));
            }
        }
        s
    }

    /// Leaves cover the unit cube without overlap.
    pub fn is_partition(&self) -> bool {
        let l = self.max_level() as u32;
        let d = self.dim as u32;
        let vol: u128 = self
            .leaves
            .iter()
            .map(|c| 1u128 << (d * (l - c.level as u32)))
            .sum();
        if vol != 1u128 << (d * l) {
            return false;
        }
        self.leaves
            .iter()
            .all(|c| c.parent().is_none_or(|p| self.locate(p) == Lookup::Refined))
    }

    /// Exhaustive grading check over all face/edge neighbours.
    pub fn is_graded(&self) -> bool {
        let offs = neighbor_offsets(self.dim);
        self.leaves.iter().all(|&c| {
            offs.iter().all(|&off| match self.locate_offset(c, off) {
                Lookup::Leaf(m) => m.level + 1 >= c.level,
                _ => true,
            })
        })
    }

    pub fn to_json(&self) -> GridJson {
        GridJson {
            dim: self.dim,
            max_level: self.max_level(),
            leaves: self
                .leaves
                .iter()
                .map(|c| [c.level as u32, c.coords[0], c.coords[1], c.coords[2]])
                .collect(),
        }
    }

    pub fn from_json(j: &GridJson) -> Result<PrimalGrid> {
        let mut leaves = Vec::with_capacity(j.leaves.len());
        for l in &j.leaves {
            let level = u8::try_from(l[0]).map_err(|_| Error::Format(format!("bad level {}", l[0])))?;
            leaves.push(CellIndex::new(level, [l[1], l[2], l[3]]));
        }
        if leaves.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Format("leaves must be sorted and unique".into()));
        }
        let g = PrimalGrid::from_leaves(j.dim, leaves)?;
        if g.max_level() != j.max_level {
            return Err(Error::Format(format!("max_level {} does not match leaves", j.max_level)));
        }
        Ok(g)
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let f = std::io::BufWriter::new(std::fs::File::create(path)?);
        serde_json::to_writer(f, &self.to_json())?;
        Ok(())
    }

    pub fn read_json(path: &Path) -> Result<PrimalGrid> {
        let f = std::io::BufReader::new(std::fs::File::open(path)?);
        PrimalGrid::from_json(&serde_json::from_reader(f)?)
    }
}

fn sign_changes(c: CellIndex, dim: usize, indicator: &dyn Fn([f64; 3]) -> bool) -> bool {
    let lo = c.lower_corner();
    let h = c.width();
    let nz = if dim == 3 { 5 } else { 1 };
    let mut first = None;
    for k in 0..nz {
        for j in 0..5 {
            for i in 0..5 {
                let mut p = [lo[0] + h * i as f64 / 4.0, lo[1] + h * j as f64 / 4.0, 0.0];
                if dim == 3 {
                    p[2] = lo[2] + h * k as f64 / 4.0;
                }
                let v = indicator(p);
                match first {
                    None => first = Some(v),
                    Some(f) if f != v => return true,
                    _ => {}
                }
            }
        }
    }
    false
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridJson {
    pub dim: usize,
    pub max_level: u8,
    pub leaves: Vec<[u32; 4]>,
}

/// Built-in refinement indicators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Indicator {
    /// Tilted elliptic paraboloid `z' = 2x'^2 + y'^2 - 0.35`, in coordinates
    /// centered at (0.5, 0.5, 0.35), rotated 20 degrees about x and then 15
    /// degrees about y. In 2D the section `y' = 2x'^2 - 0.35` rotated by 15
    /// degrees.
    Paraboloid,
    /// Sphere of radius 0.3 about the cube center (circle in 2D).
    Sphere,
    /// Every cell refined.
    Uniform,
}

impl Indicator {
    /// Inside/outside classification; `None` for [`Indicator::Uniform`].
    pub fn inside(self, dim: usize, p: [f64; 3]) -> Option<bool> {
        match self {
            Indicator::Paraboloid => Some(if dim == 3 {
                let (ax, ay) = (20f64.to_radians(), 15f64.to_radians());
                let d = [p[0] - 0.5, p[1] - 0.5, p[2] - 0.35];
                // R_x(20) first
                let q = [d[0], ax.cos() * d[1] - ax.sin() * d[2], ax.sin() * d[1] + ax.cos() * d[2]];
                // then R_y(15)
                let r = [ay.cos() * q[0] + ay.sin() * q[2], q[1], -ay.sin() * q[0] + ay.cos() * q[2]];
                r[2] > 2.0 * r[0] * r[0] + r[1] * r[1] - 0.35
            } else {
                let a = 15f64.to_radians();
                let d = [p[0] - 0.5, p[1] - 0.35];
                let r = [a.cos() * d[0] - a.sin() * d[1], a.sin() * d[0] + a.cos() * d[1]];
                r[1] > 2.0 * r[0] * r[0] - 0.35
            }),
            Indicator::Sphere => {
                let r2: f64 = (0..dim).map(|k| (p[k] - 0.5).powi(2)).sum();
                Some(r2 < 0.09)
            }
            Indicator::Uniform => None,
        }
    }

    pub fn build(self, dim: usize, level: u8) -> Result<PrimalGrid> {
        match self {
            Indicator::Uniform => PrimalGrid::uniform(dim, level),
            _ => PrimalGrid::root(dim).refine_by_indicator(&|p| self.inside(dim, p).unwrap(), level),
        }
    }
}

impl std::str::FromStr for Indicator {
    type Err = Error;
    fn from_str(s: &str) -> Result<Indicator> {
        match s {
            "paraboloid" => Ok(Indicator::Paraboloid),
            "sphere" => Ok(Indicator::Sphere),
            "uniform" => Ok(Indicator::Uniform),
            _ => Err(Error::Format(format!("unknown indicator {s:?}"))),
        }
    }
}
