//! Dual mesh assembly: one cell per primal node, collected leaf by leaf from
//! the local patterns.
//!
//! Geometry is exact on the global integer lattice of spacing
//! `1 / (48 * 2^L)`. Pattern geometry is shared between all leaves with the
//! same key, and the faces of a leaf are materialized on demand.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{cell_volume_units, linf_distance_to_atom, reference_atoms, Direction, FacePolygon, LocalCoord, SCALE};
use crate::grid::{CellIndex, Lookup, NodeKey, PrimalGrid};
use crate::pattern::nodes::{face_count, node_count, LocalNodeId};
use crate::pattern::table::PatternTable;
use crate::pattern::{LocalPattern, RefinementKey};

/// Global integer position at scale `48 * 2^L`.
pub type GlobalCoord = [i64; 3];

/// Planar polygon (a segment in 2D) with vertex quadrature weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    pub vertices: Vec<GlobalCoord>,
    /// Quadrature weights at the vertices; they sum to `area`.
    pub weights: Vec<f64>,
    /// Primitive integer direction of the normal.
    pub normal: Direction,
    pub area: f64,
}

impl Polygon {
    pub fn unit_normal(&self) -> [f64; 3] {
        unit(self.normal)
    }

    pub fn point(&self, i: usize, scale: f64) -> [f64; 3] {
        self.vertices[i].map(|x| x as f64 / scale)
    }

    /// Quadrature of `f` over the polygon.
    pub fn integrate(&self, scale: f64, f: impl Fn([f64; 3]) -> f64) -> f64 {
        (0..self.vertices.len()).map(|i| self.weights[i] * f(self.point(i, scale))).sum()
    }
}

fn unit(n: Direction) -> [f64; 3] {
    let n = n.map(|x| x as f64);
    let l = dot3(n, n).sqrt();
    n.map(|x| x / l)
}

/// Face between the dual cells `owner` and `neighbor`, normal pointing from
/// owner to neighbor. Each face lies inside a single primal leaf.
#[derive(Debug, Clone, PartialEq)]
pub struct DualFace {
    pub owner: usize,
    pub neighbor: usize,
    pub leaf: usize,
    pub polygon: Polygon,
}

/// Piece of a primal leaf face covered by one dual cell, normal pointing out
/// of the leaf.
#[derive(Debug, Clone, PartialEq)]
pub struct TracePiece {
    pub leaf: usize,
    pub face: u8,
    pub cell: usize,
    pub on_boundary: bool,
    pub polygon: Polygon,
}

/// Polygon of a pattern in reference-cell units.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct LocalPoly {
    /// Owner node (the `a` side of an internal face, the covering node of a
    /// trace piece).
    pub a: LocalNodeId,
    /// Neighbour node of an internal face; unused for traces.
    pub b: LocalNodeId,
    /// Cell face of a trace piece.
    pub face: u8,
    pub vertices: Vec<LocalCoord>,
    pub normal: Direction,
    pub area: f64,
    pub weights: Vec<f64>,
    pub mean: [f64; 3],
}

/// Everything the assembly needs per refinement key.
#[derive(Debug)]
pub(crate) struct KeyGeometry {
    pub pattern: LocalPattern,
    pub canon_id: usize,
    pub faces: Vec<LocalPoly>,
    pub traces: Vec<LocalPoly>,
    /// Smallest L-infinity distance of a part's vertex mean to the boundary
    /// of the cell on which the data is smooth, in reference units.
    pub d_min: f64,
}

fn local_poly(a: LocalNodeId, b: LocalNodeId, face: u8, p: &FacePolygon, dim: usize) -> LocalPoly {
    let pts: Vec<[f64; 3]> = p.vertices.iter().map(|v| v.map(|x| x as f64)).collect();
    let area = p.area.to_f64();
    LocalPoly {
        a,
        b,
        face,
        weights: vertex_weights(&pts, unit(p.normal), area),
        mean: p.vertex_mean(),
        vertices: p.vertices.clone(),
        normal: p.normal,
        area,
    }
    .with_dim(dim)
}

impl LocalPoly {
    fn with_dim(mut self, dim: usize) -> Self {
        if dim == 2 {
            self.mean[2] = 0.0;
        }
        self
    }
}

fn box_distance(m: [f64; 3], axes: impl Iterator<Item = usize>) -> f64 {
    axes.map(|k| m[k].min(SCALE as f64 - m[k])).fold(f64::INFINITY, f64::min)
}

impl KeyGeometry {
    fn new(pattern: LocalPattern, canon_id: usize) -> KeyGeometry {
        let dim = pattern.dim;
        let faces: Vec<LocalPoly> = pattern
            .internal_faces
            .iter()
            .map(|f| local_poly(f.a, f.b, 0, &f.polygon, dim))
            .collect();
        let mut traces = Vec::new();
        for f in 0..face_count(dim) {
            for (node, p) in pattern.trace_polygons(f) {
                traces.push(local_poly(node, node, f as u8, &p, dim));
            }
        }
        let atoms = reference_atoms(dim);
        let mut d_min = faces
            .iter()
            .map(|p| box_distance(p.mean, 0..dim))
            .fold(f64::INFINITY, f64::min);
        for t in &traces {
            let ax = t.face as usize / 2;
            let mut d = box_distance(t.mean, (0..dim).filter(|&k| k != ax));
            for (i, atom) in atoms.iter().enumerate() {
                if pattern.owner[i] != t.a {
                    d = d.min(linf_distance_to_atom(t.mean, atom, dim));
                }
            }
            d_min = d_min.min(d);
        }
        KeyGeometry {
            pattern,
            canon_id,
            faces,
            traces,
            d_min,
        }
    }
}

/// Patterns per key, expanded from the table on first use.
pub(crate) struct PatternCache<'a> {
    table: &'a PatternTable,
    map: HashMap<RefinementKey, Arc<KeyGeometry>>,
}

impl<'a> PatternCache<'a> {
    pub(crate) fn new(table: &'a PatternTable) -> Self {
        PatternCache {
            table,
            map: HashMap::new(),
        }
    }

    pub(crate) fn get(&mut self, key: RefinementKey) -> Result<Arc<KeyGeometry>> {
        if let Some(g) = self.map.get(&key) {
            return Ok(g.clone());
        }
        let pattern = self.table.pattern(key)?;
        let (canon_id, _) = self.table.lookup(key)?;
        let g = Arc::new(KeyGeometry::new(pattern, canon_id));
        self.map.insert(key, g.clone());
        Ok(g)
    }
}

/// One primal leaf: its pattern and the dual cell of each local node.
#[derive(Debug, Clone)]
pub struct LeafPart {
    pub cell: CellIndex,
    pub key: RefinementKey,
    pub canon_id: usize,
    /// Dual cell per local node id (`u32::MAX` for absent midpoints).
    pub node_cells: Vec<u32>,
    /// Dual cell and overlap volume `|C ∩ C*|`.
    pub regions: Vec<(usize, f64)>,
    pub(crate) geometry: Arc<KeyGeometry>,
    /// Which cell faces lie on the domain boundary, one bit per face.
    pub boundary_faces: u8,
}

impl LeafPart {
    pub fn volume(&self, dim: usize) -> f64 {
        1.0 / (1u64 << (dim as u32 * self.cell.level as u32)) as f64
    }

    pub fn width(&self) -> f64 {
        self.cell.width()
    }

    /// Smallest distance of a flux evaluation point to a discontinuity of
    /// the data it sees, in physical units.
    pub fn d_min(&self) -> f64 {
        self.geometry.d_min * self.width() / SCALE as f64
    }

    pub fn face_count(&self) -> usize {
        self.geometry.faces.len()
    }

    pub fn trace_count(&self) -> usize {
        self.geometry.traces.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualCell {
    pub node: NodeKey,
    pub volume: f64,
    /// Face index and orientation (`true` when this cell is the owner).
    pub faces: Vec<(usize, bool)>,
    /// Trace pieces on the domain boundary.
    pub boundary_patches: Vec<usize>,
    pub contributing_leaves: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct DualMesh {
    pub dim: usize,
    pub max_level: u8,
    pub cells: Vec<DualCell>,
    pub leaves: Vec<LeafPart>,
    /// Exact cell volumes in units of `(48 * 2^L)^-dim`.
    pub volume_units: Vec<i128>,
    face_start: Vec<usize>,
    trace_start: Vec<usize>,
    node_index: HashMap<NodeKey, usize>,
}

impl DualMesh {
    /// Lattice points per unit length.
    pub fn scale(&self) -> f64 {
        (SCALE << self.max_level) as f64
    }

    pub fn cell_of(&self, node: NodeKey) -> Option<usize> {
        self.node_index.get(&node).copied()
    }

    pub fn total_volume_units(&self) -> i128 {
        (SCALE as i128 * (1i128 << self.max_level)).pow(self.dim as u32)
    }

    pub fn face_count(&self) -> usize {
        *self.face_start.last().unwrap()
    }

    pub fn trace_count(&self) -> usize {
        *self.trace_start.last().unwrap()
    }

    fn locate(starts: &[usize], i: usize) -> (usize, usize) {
        let leaf = starts.partition_point(|&s| s <= i) - 1;
        (leaf, i - starts[leaf])
    }

    fn polygon(&self, leaf: usize, p: &LocalPoly) -> Polygon {
        let c = self.leaves[leaf].cell;
        let f = (self.leaves[leaf].width() / SCALE as f64).powi(self.dim as i32 - 1);
        Polygon {
            vertices: p.vertices.iter().map(|&v| to_global(c, self.max_level, self.dim, v)).collect(),
            weights: p.weights.iter().map(|w| w * f).collect(),
            normal: p.normal,
            area: p.area * f,
        }
    }

    pub fn face(&self, i: usize) -> DualFace {
        let (leaf, k) = Self::locate(&self.face_start, i);
        let lp = &self.leaves[leaf];
        let p = &lp.geometry.faces[k];
        DualFace {
            owner: lp.node_cells[p.a as usize] as usize,
            neighbor: lp.node_cells[p.b as usize] as usize,
            leaf,
            polygon: self.polygon(leaf, p),
        }
    }

    pub fn trace(&self, i: usize) -> TracePiece {
        let (leaf, k) = Self::locate(&self.trace_start, i);
        let lp = &self.leaves[leaf];
        let p = &lp.geometry.traces[k];
        TracePiece {
            leaf,
            face: p.face,
            cell: lp.node_cells[p.a as usize] as usize,
            on_boundary: lp.boundary_faces >> p.face & 1 == 1,
            polygon: self.polygon(leaf, p),
        }
    }

    /// Faces in index order.
    pub fn faces(&self) -> impl Iterator<Item = DualFace> + '_ {
        (0..self.leaves.len()).flat_map(move |l| {
            let lp = &self.leaves[l];
            lp.geometry.faces.iter().map(move |p| DualFace {
                owner: lp.node_cells[p.a as usize] as usize,
                neighbor: lp.node_cells[p.b as usize] as usize,
                leaf: l,
                polygon: self.polygon(l, p),
            })
        })
    }

    /// Trace pieces in index order.
    pub fn traces(&self) -> impl Iterator<Item = TracePiece> + '_ {
        (0..self.leaves.len()).flat_map(move |l| {
            let lp = &self.leaves[l];
            lp.geometry.traces.iter().map(move |p| TracePiece {
                leaf: l,
                face: p.face,
                cell: lp.node_cells[p.a as usize] as usize,
                on_boundary: lp.boundary_faces >> p.face & 1 == 1,
                polygon: self.polygon(l, p),
            })
        })
    }

    /// Global index of the first face of a leaf.
    pub fn first_face(&self, leaf: usize) -> usize {
        self.face_start[leaf]
    }

    /// Global index of the first trace piece of a leaf.
    pub fn first_trace(&self, leaf: usize) -> usize {
        self.trace_start[leaf]
    }
}

fn check_dims(grid: &PrimalGrid, table: &PatternTable) -> Result<()> {
    if grid.dim() != table.dim {
        return Err(Error::DimensionMismatch {
            grid: grid.dim(),
            table: table.dim,
        });
    }
    Ok(())
}

fn to_global(c: CellIndex, max_level: u8, dim: usize, p: LocalCoord) -> GlobalCoord {
    let s = 1i64 << (max_level - c.level);
    let mut g = [0i64; 3];
    for k in 0..dim {
        g[k] = (c.coords[k] as i64 * SCALE + p[k]) * s;
    }
    g
}

fn boundary_mask(c: CellIndex, dim: usize) -> u8 {
    let mut m = 0;
    for f in 0..face_count(dim) {
        let mut off = [0i32; 3];
        off[f / 2] = if f % 2 == 1 { 1 } else { -1 };
        if c.offset(off, dim).is_none() {
            m |= 1 << f;
        }
    }
    m
}

/// Vertex weights of the fan rule about the vertex mean. The mean's share is
/// handed to the vertices equally, which keeps the rule exact for affine
/// integrands.
fn vertex_weights(vs: &[[f64; 3]], n: [f64; 3], area: f64) -> Vec<f64> {
    let m = vs.len();
    if m == 2 {
        return vec![area / 2.0; 2];
    }
    let mut c = [0.0; 3];
    for v in vs {
        for k in 0..3 {
            c[k] += v[k] / m as f64;
        }
    }
    let tri: Vec<f64> = (0..m)
        .map(|i| {
            let a = sub3(vs[i], c);
            let b = sub3(vs[(i + 1) % m], c);
            0.5 * dot3(cross3(a, b), n)
        })
        .collect();
    let total: f64 = tri.iter().sum();
    (0..m)
        .map(|i| (tri[(i + m - 1) % m] + tri[i]) / 3.0 + total / (3.0 * m as f64))
        .collect()
}

pub fn sub3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn cross3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

/// Collects the dual mesh in a single pass over the leaves.
pub fn assemble(grid: &PrimalGrid, table: &PatternTable) -> Result<DualMesh> {
    check_dims(grid, table)?;
    let dim = grid.dim();
    let max_level = grid.max_level();
    let nodes = grid.node_set();
    let node_index: HashMap<NodeKey, usize> = nodes.iter().enumerate().map(|(i, &n)| (n, i)).collect();
    let mut cells: Vec<DualCell> = nodes
        .iter()
        .map(|&node| DualCell {
            node,
            volume: 0.0,
            faces: Vec::new(),
            boundary_patches: Vec::new(),
            contributing_leaves: Vec::new(),
        })
        .collect();
    let mut volume_units = vec![0i128; cells.len()];
    let mut face_start = vec![0];
    let mut trace_start = vec![0];
    let mut leaves = Vec::with_capacity(grid.leaf_count());
    let mut cache = PatternCache::new(table);
    let cell_units = cell_volume_units(dim) as f64;

    for (li, &c) in grid.leaves().enumerate() {
        let key = grid.refinement_key(c)?;
        let geo = cache.get(key)?;
        let mut node_cells = vec![u32::MAX; node_count(dim)];
        for (id, _) in key.nodes(dim) {
            node_cells[id as usize] = node_index[&grid.node_key(c, id, max_level)] as u32;
        }
        let shift = dim as u32 * (max_level - c.level) as u32;
        let leaf_volume = 1.0 / (1u64 << (dim as u32 * c.level as u32)) as f64;
        let mut regions = Vec::with_capacity(geo.pattern.regions.len());
        for r in &geo.pattern.regions {
            let ci = node_cells[r.node as usize] as usize;
            volume_units[ci] += (r.volume as i128) << shift;
            cells[ci].contributing_leaves.push(li);
            regions.push((ci, r.volume as f64 / cell_units * leaf_volume));
        }
        let f0 = *face_start.last().unwrap();
        for (k, f) in geo.faces.iter().enumerate() {
            cells[node_cells[f.a as usize] as usize].faces.push((f0 + k, true));
            cells[node_cells[f.b as usize] as usize].faces.push((f0 + k, false));
        }
        face_start.push(f0 + geo.faces.len());
        let t0 = *trace_start.last().unwrap();
        let boundary_faces = boundary_mask(c, dim);
        for (k, t) in geo.traces.iter().enumerate() {
            if boundary_faces >> t.face & 1 == 1 {
                cells[node_cells[t.a as usize] as usize].boundary_patches.push(t0 + k);
            }
        }
        trace_start.push(t0 + geo.traces.len());
        leaves.push(LeafPart {
            cell: c,
            key,
            canon_id: geo.canon_id,
            node_cells,
            regions,
            geometry: geo,
            boundary_faces,
        });
    }
    let total = (SCALE as i128 * (1i128 << max_level)).pow(dim as u32) as f64;
    for (cell, &u) in cells.iter_mut().zip(&volume_units) {
        cell.volume = u as f64 / total;
    }
    log::debug!(
        "assembled {} dual cells, {} faces, {} trace pieces from {} leaves",
        cells.len(),
        face_start.last().unwrap(),
        trace_start.last().unwrap(),
        leaves.len()
    );
    Ok(DualMesh {
        dim,
        max_level,
        cells,
        leaves,
        volume_units,
        face_start,
        trace_start,
        node_index,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussReport {
    /// `|surface integral - volume| / volume` per dual cell.
    pub residuals: Vec<f64>,
    pub max_relative: f64,
    /// `|Σ area * n| / Σ area` per dual cell.
    pub closure: Vec<f64>,
    pub max_closure: f64,
    /// Surface integral of `x / dim` over all domain-boundary patches.
    pub boundary_total: f64,
}

/// Divergence check with `v = x / dim` (so `div v = 1`) and outward normals.
pub fn gauss_check(mesh: &DualMesh) -> GaussReport {
    gauss_check_with(mesh, |_| {})
}

/// [`gauss_check`] with a hook that may alter each face before it is
/// integrated (used to test that the check detects broken geometry).
pub fn gauss_check_with(mesh: &DualMesh, mut alter: impl FnMut(&mut DualFace)) -> GaussReport {
    let s = mesh.scale();
    let d = mesh.dim as f64;
    let n_cells = mesh.cells.len();
    let mut integral = vec![0.0; n_cells];
    let mut vec = vec![[0.0; 3]; n_cells];
    let mut area = vec![0.0; n_cells];
    let mut add = |c: usize, sign: f64, p: &Polygon| {
        let n = p.unit_normal();
        integral[c] += sign * p.integrate(s, |x| dot3(x, n) / d);
        for k in 0..3 {
            vec[c][k] += sign * n[k] * p.area;
        }
        area[c] += p.area;
    };
    for mut f in mesh.faces() {
        alter(&mut f);
        add(f.owner, 1.0, &f.polygon);
        add(f.neighbor, -1.0, &f.polygon);
    }
    let mut boundary_total = 0.0;
    for t in mesh.traces().filter(|t| t.on_boundary) {
        let n = t.polygon.unit_normal();
        boundary_total += t.polygon.integrate(s, |x| dot3(x, n) / d);
        add(t.cell, 1.0, &t.polygon);
    }
    let residuals: Vec<f64> = (0..n_cells)
        .map(|c| (integral[c] - mesh.cells[c].volume).abs() / mesh.cells[c].volume)
        .collect();
    let closure: Vec<f64> = (0..n_cells).map(|c| dot3(vec[c], vec[c]).sqrt() / area[c]).collect();
    GaussReport {
        max_relative: residuals.iter().copied().fold(0.0, f64::max),
        max_closure: closure.iter().copied().fold(0.0, f64::max),
        residuals,
        closure,
        boundary_total,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    /// `|V_sampled - V_mesh| / V_mesh` per dual cell.
    pub relative_errors: Vec<f64>,
    pub max_relative: f64,
    /// Largest absolute difference of volume fractions of the unit cube.
    pub max_absolute: f64,
    pub samples: u64,
}

/// Independent volume check: every sample-cube center of a lattice with
/// `resolution` points per finest cell edge goes to its globally nearest
/// primal node by (L-infinity, Euclidean, node key).
pub fn sampling_oracle_check(grid: &PrimalGrid, mesh: &DualMesh, resolution: usize) -> OracleReport {
    let dim = grid.dim();
    let l = grid.max_level();
    let nodes = grid.node_set();
    let r = resolution as i64;
    // samples at odd integers, scale 2 * resolution * 2^L
    let node_scale = 2 * r;
    let mut counts = vec![0u64; mesh.cells.len()];
    let mut samples = 0u64;
    for &c in grid.leaves() {
        let (lo, h) = c.box_at(l);
        let (lo, h) = (lo.map(|x| x as i64), h as i64);
        // every point of the leaf has a corner within h/2, so farther nodes
        // cannot win
        let reach = (h + 1) / 2;
        let mut cand: Vec<(NodeKey, GlobalCoord)> = Vec::new();
        let zr = if dim == 3 { (lo[2] - reach).max(0)..=(lo[2] + h + reach).min(1 << l) } else { 0..=0 };
        for z in zr {
            for y in (lo[1] - reach).max(0)..=(lo[1] + h + reach).min(1 << l) {
                for x in (lo[0] - reach).max(0)..=(lo[0] + h + reach).min(1 << l) {
                    let k = [x as u64, y as u64, z as u64];
                    if nodes.contains(&k) {
                        cand.push((k, [x * node_scale, y * node_scale, z * node_scale]));
                    }
                }
            }
        }
        let n = h * r;
        let nz = if dim == 3 { n } else { 1 };
        for k in 0..nz {
            for j in 0..n {
                for i in 0..n {
                    let p = [
                        2 * (lo[0] * r + i) + 1,
                        2 * (lo[1] * r + j) + 1,
                        if dim == 3 { 2 * (lo[2] * r + k) + 1 } else { 0 },
                    ];
                    let best = cand
                        .iter()
                        .map(|&(key, q)| {
                            let d = [p[0] - q[0], p[1] - q[1], p[2] - q[2]];
                            let dinf = d.iter().map(|x| x.abs()).max().unwrap();
                            (dinf, d[0] * d[0] + d[1] * d[1] + d[2] * d[2], key)
                        })
                        .min()
                        .expect("a leaf always has candidate nodes")
                        .2;
                    counts[mesh.cell_of(best).unwrap()] += 1;
                    samples += 1;
                }
            }
        }
    }
    let mut relative_errors = Vec::with_capacity(counts.len());
    let mut max_absolute: f64 = 0.0;
    for (cell, &cnt) in mesh.cells.iter().zip(&counts) {
        let v = cnt as f64 / samples as f64;
        relative_errors.push((v - cell.volume).abs() / cell.volume);
        max_absolute = max_absolute.max((v - cell.volume).abs());
    }
    OracleReport {
        max_relative: relative_errors.iter().copied().fold(0.0, f64::max),
        relative_errors,
        max_absolute,
        samples,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MeshStats {
    pub leaves: usize,
    pub primal_faces: usize,
    pub primal_nodes: usize,
    pub dual_cells: usize,
    pub dual_nodes: usize,
    pub distinct_patterns: usize,
    pub trivial_leaves: usize,
}

impl MeshStats {
    pub fn trivial_fraction(&self) -> f64 {
        self.trivial_leaves as f64 / self.leaves as f64
    }
}

/// Primal faces: domain-boundary faces once, same-level interior faces once,
/// coarse/fine faces once per fine face.
pub fn count_primal_faces(grid: &PrimalGrid) -> usize {
    let dim = grid.dim();
    let mut n = 0;
    for &c in grid.leaves() {
        for f in 0..face_count(dim) {
            let mut off = [0i32; 3];
            off[f / 2] = if f % 2 == 1 { 1 } else { -1 };
            match c.offset(off, dim).map(|x| grid.locate(x)) {
                None => n += 1,
                Some(Lookup::Leaf(m)) if m.level < c.level => n += 1,
                Some(Lookup::Leaf(m)) if m.level == c.level && c < m => n += 1,
                _ => {}
            }
        }
    }
    n
}

/// Accumulates the corners of compound dual faces. Per-leaf face parts are
/// grouped by node pair and plane; a vertex of a group is a corner unless the
/// parts around it fill a straight angle or a full turn.
#[derive(Default)]
pub(crate) struct CornerCounter {
    groups: HashMap<(NodeKey, NodeKey, Direction, i64), Vec<Vec<GlobalCoord>>>,
}

impl CornerCounter {
    pub(crate) fn add(&mut self, a: NodeKey, b: NodeKey, normal: Direction, verts: Vec<GlobalCoord>) {
        let (a, b, n) = if a < b { (a, b, normal) } else { (b, a, normal.map(|x| -x)) };
        let d = n[0] * verts[0][0] + n[1] * verts[0][1] + n[2] * verts[0][2];
        self.groups.entry((a, b, n, d)).or_default().push(verts);
    }

    pub(crate) fn corners(&self) -> HashSet<GlobalCoord> {
        let mut out = HashSet::new();
        for ((_, _, n, _), parts) in &self.groups {
            if parts[0].len() == 2 {
                let mut inc: HashMap<GlobalCoord, usize> = HashMap::new();
                for s in parts {
                    for v in s {
                        *inc.entry(*v).or_default() += 1;
                    }
                }
                out.extend(inc.into_iter().filter(|&(_, k)| k == 1).map(|(v, _)| v));
                continue;
            }
            let nf = n.map(|x| x as f64);
            let mut angle: BTreeMap<GlobalCoord, f64> = BTreeMap::new();
            for poly in parts {
                let m = poly.len();
                let orient = signed_area(poly, nf).signum();
                for i in 0..m {
                    let v = poly[i];
                    let next = poly[(i + 1) % m];
                    let prev = poly[(i + m - 1) % m];
                    let (e1, e2) = if orient > 0.0 { (next, prev) } else { (prev, next) };
                    let e1 = sub_i(e1, v);
                    let e2 = sub_i(e2, v);
                    let cr = cross3(e1, e2);
                    let mut t = dot3(cr, nf).atan2(dot3(e1, e2));
                    if t < 0.0 {
                        t += 2.0 * std::f64::consts::PI;
                    }
                    *angle.entry(v).or_default() += t;
                }
            }
            let keys: Vec<GlobalCoord> = angle.keys().copied().collect();
            for v in keys {
                for poly in parts {
                    if poly.contains(&v) {
                        continue;
                    }
                    let m = poly.len();
                    if (0..m).any(|i| on_segment_interior(v, poly[i], poly[(i + 1) % m])) {
                        *angle.get_mut(&v).unwrap() += std::f64::consts::PI;
                    }
                }
            }
            let pi = std::f64::consts::PI;
            out.extend(
                angle
                    .into_iter()
                    .filter(|&(_, a)| (a - pi).abs() > 1e-9 && (a - 2.0 * pi).abs() > 1e-9)
                    .map(|(v, _)| v),
            );
        }
        out
    }
}

fn sub_i(a: GlobalCoord, b: GlobalCoord) -> [f64; 3] {
    [(a[0] - b[0]) as f64, (a[1] - b[1]) as f64, (a[2] - b[2]) as f64]
}

fn signed_area(poly: &[GlobalCoord], n: [f64; 3]) -> f64 {
    let o = poly[0];
    let mut s = 0.0;
    for i in 1..poly.len() - 1 {
        s += dot3(cross3(sub_i(poly[i], o), sub_i(poly[i + 1], o)), n);
    }
    s
}

fn on_segment_interior(p: GlobalCoord, a: GlobalCoord, b: GlobalCoord) -> bool {
    let ab = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
    let ap = [p[0] - a[0], p[1] - a[1], p[2] - a[2]];
    let cr = [
        ab[1] * ap[2] - ab[2] * ap[1],
        ab[2] * ap[0] - ab[0] * ap[2],
        ab[0] * ap[1] - ab[1] * ap[0],
    ];
    if cr != [0, 0, 0] {
        return false;
    }
    let t = ab[0] * ap[0] + ab[1] * ap[1] + ab[2] * ap[2];
    t > 0 && t < ab[0] * ab[0] + ab[1] * ab[1] + ab[2] * ab[2]
}

/// Grid census without storing the dual mesh: counts, pattern statistics and
/// the dual nodes (corners of the compound dual faces).
pub fn grid_stats(grid: &PrimalGrid, table: &PatternTable) -> Result<MeshStats> {
    check_dims(grid, table)?;
    let dim = grid.dim();
    let l = grid.max_level();
    let mut cache = PatternCache::new(table);
    let mut corners = CornerCounter::default();
    let mut canon = HashSet::new();
    let mut trivial = 0;
    for &c in grid.leaves() {
        let key = grid.refinement_key(c)?;
        if key == RefinementKey::EMPTY {
            trivial += 1;
        }
        let geo = cache.get(key)?;
        canon.insert(geo.canon_id);
        for f in &geo.pattern.internal_faces {
            let verts = f.polygon.vertices.iter().map(|&v| to_global(c, l, dim, v)).collect();
            corners.add(grid.node_key(c, f.a, l), grid.node_key(c, f.b, l), f.polygon.normal, verts);
        }
    }
    Ok(MeshStats {
        leaves: grid.leaf_count(),
        primal_faces: count_primal_faces(grid),
        primal_nodes: grid.node_set().len(),
        dual_cells: grid.node_set().len(),
        dual_nodes: corners.corners().len(),
        distinct_patterns: canon.len(),
        trivial_leaves: trivial,
    })
}

/// Census of an assembled mesh; agrees with [`grid_stats`].
pub fn mesh_stats(grid: &PrimalGrid, mesh: &DualMesh) -> MeshStats {
    let mut corners = CornerCounter::default();
    for f in mesh.faces() {
        corners.add(mesh.cells[f.owner].node, mesh.cells[f.neighbor].node, f.polygon.normal, f.polygon.vertices);
    }
    let canon: HashSet<usize> = mesh.leaves.iter().map(|l| l.canon_id).collect();
    MeshStats {
        leaves: mesh.leaves.len(),
        primal_faces: count_primal_faces(grid),
        primal_nodes: grid.node_set().len(),
        dual_cells: mesh.cells.len(),
        dual_nodes: corners.corners().len(),
        distinct_patterns: canon.len(),
        trivial_leaves: mesh.leaves.iter().filter(|l| l.key == RefinementKey::EMPTY).count(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pattern::table::build_table;

    fn table(dim: usize) -> PatternTable {
        build_table(dim).unwrap()
    }

    #[test]
    fn single_cell() {
        let t = table(3);
        let m = assemble(&PrimalGrid::root(3), &t).unwrap();
        assert_eq!(m.cells.len(), 8);
        for c in &m.cells {
            assert_eq!(c.volume, 0.125);
        }
    }

    #[test]
    fn uniform_level_one_center_cell() {
        let t = table(3);
        let g = PrimalGrid::uniform(3, 1).unwrap();
        let m = assemble(&g, &t).unwrap();
        assert_eq!(m.cells.len(), 27);
        let c = &m.cells[m.cell_of([1, 1, 1]).unwrap()];
        assert_eq!(c.volume, 0.125);
        assert_eq!(c.contributing_leaves.len(), 8);
        assert!(c.boundary_patches.is_empty());
        // bounding box of its faces is [1/4, 3/4]^3
        let s = m.scale();
        let mut lo = [f64::MAX; 3];
        let mut hi = [f64::MIN; 3];
        for &(fi, _) in &c.faces {
            let p = &m.face(fi).polygon;
            for i in 0..p.vertices.len() {
                let x = p.point(i, s);
                for k in 0..3 {
                    lo[k] = lo[k].min(x[k]);
                    hi[k] = hi[k].max(x[k]);
                }
            }
        }
        assert_eq!(lo, [0.25; 3]);
        assert_eq!(hi, [0.75; 3]);
    }

    #[test]
    fn quadrature_exact_for_affine() {
        let t = table(3);
        let g = PrimalGrid::uniform(3, 1).unwrap().refine(&[CellIndex::new(1, [0, 0, 0])]).unwrap();
        let m = assemble(&g, &t).unwrap();
        let s = m.scale();
        for f in m.faces() {
            let p = &f.polygon;
            let w: f64 = p.weights.iter().sum();
            assert!((w - p.area).abs() < 1e-14);
            // compare with the centroid rule on the fan triangulation
            let lin = |x: [f64; 3]| 1.0 + 2.0 * x[0] - 3.0 * x[1] + 0.5 * x[2];
            let pts: Vec<[f64; 3]> = (0..p.vertices.len()).map(|i| p.point(i, s)).collect();
            let n = p.unit_normal();
            let mut exact = 0.0;
            for i in 1..pts.len() - 1 {
                let a = 0.5 * dot3(cross3(sub3(pts[i], pts[0]), sub3(pts[i + 1], pts[0])), n);
                let c = [0, 1, 2].map(|k| (pts[0][k] + pts[i][k] + pts[i + 1][k]) / 3.0);
                exact += a * lin(c);
            }
            assert!((p.integrate(s, lin) - exact).abs() < 1e-14);
        }
    }

    #[test]
    fn gauss_on_small_grids() {
        let t = table(3);
        let g = PrimalGrid::uniform(3, 1)
            .unwrap()
            .refine(&[CellIndex::new(1, [0, 0, 0]), CellIndex::new(1, [1, 1, 0])])
            .unwrap();
        let m = assemble(&g, &t).unwrap();
        let r = gauss_check(&m);
        assert!(r.max_relative < 1e-12, "{}", r.max_relative);
        assert!(r.max_closure < 1e-12, "{}", r.max_closure);
        assert!((r.boundary_total - 1.0).abs() < 1e-12);
        let total: i128 = m.volume_units.iter().sum();
        assert_eq!(total, m.total_volume_units());
    }

    #[test]
    fn corrupted_normal_detected() {
        let t = table(3);
        let g = PrimalGrid::uniform(3, 1).unwrap();
        let m = assemble(&g, &t).unwrap();
        let mut i = 0;
        let r = gauss_check_with(&m, |f| {
            if i == 3 {
                f.polygon.normal = f.polygon.normal.map(|x| -x);
            }
            i += 1;
        });
        assert!(r.max_relative > 1e-3);
        assert!(r.max_closure > 1e-3);
    }

    #[test]
    fn uniform_stats() {
        let t = table(3);
        let g = PrimalGrid::uniform(3, 2).unwrap();
        let m = assemble(&g, &t).unwrap();
        let s = mesh_stats(&g, &m);
        assert_eq!(s.distinct_patterns, 1);
        assert_eq!(s.trivial_fraction(), 1.0);
        assert_eq!(s.primal_faces, 3 * 4 * 4 * 5);
        assert_eq!(s.dual_cells, 125);
        // leaf centers, centers of leaf faces on the boundary and midpoints
        // of leaf edges on the cube edges
        assert_eq!(s.dual_nodes, 64 + 6 * 16 + 12 * 4);
        assert_eq!(grid_stats(&g, &t).unwrap(), s);
    }

    #[test]
    fn two_dimensional_assembly() {
        let t = table(2);
        let g = crate::grid::Indicator::Sphere.build(2, 4).unwrap();
        let m = assemble(&g, &t).unwrap();
        assert_eq!(m.cells.len(), g.node_set().len());
        let r = gauss_check(&m);
        assert!(r.max_relative < 1e-12);
        let sum: f64 = m.cells.iter().map(|c| c.volume).sum();
        assert!((sum - 1.0).abs() < 1e-12);
    }
}
