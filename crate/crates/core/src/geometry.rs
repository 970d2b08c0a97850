//! Exact integer geometry on the reference cell `[0, 48]^dim`.
//!
//! The reference cell is cut into a fixed set of atoms: small lattice cubes of
//! edge 12, where the cubes touching a face midpoint are halved into prisms and
//! the cubes touching the cell center are cut into six tetrahedra. In 2D the
//! same construction yields squares and triangles. Every atom vertex lies on
//! the 12-lattice and every centroid is an integer point, so all distance
//! comparisons below are exact.

use std::collections::{BTreeMap, HashMap};
use std::sync::OnceLock;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

/// Edge length of the reference cell in lattice units.
pub const SCALE: i64 = 48;
pub(crate) const HALF: i64 = SCALE / 2;
const STEP: i64 = SCALE / 4;

/// Point on the reference cell, integer coordinates at scale 48. In 2D the
/// third coordinate is always zero.
pub type LocalCoord = [i64; 3];

/// Primitive integer direction vector. Axis directions have one nonzero entry,
/// plane diagonals have two entries of magnitude one.
pub type Direction = [i64; 3];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AtomKind {
    Cube,
    Prism,
    Tet,
    Square,
    Triangle,
}

/// Planar facet of an atom, vertices counterclockwise about the outward
/// normal. In 2D a facet is a segment `[a, b]` with the polygon interior on
/// its left.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Facet {
    pub vertices: Vec<LocalCoord>,
    pub normal: Direction,
}

#[derive(Debug, Clone)]
pub struct Atom {
    pub kind: AtomKind,
    pub vertices: Vec<LocalCoord>,
    pub centroid: LocalCoord,
    /// Volume in lattice units (`48^dim` for the whole cell).
    pub volume: i64,
    pub facets: Vec<Facet>,
}

impl Atom {
    /// Volume as a fraction of the reference cell.
    pub fn volume_fraction(&self, dim: usize) -> Ratio<i64> {
        Ratio::new(self.volume, cell_volume_units(dim))
    }
}

/// Volume of the whole reference cell in lattice units.
pub fn cell_volume_units(dim: usize) -> i64 {
    SCALE.pow(dim as u32)
}

/// Exact measure of a facet or merged face: `twice / 2`, times `sqrt(2)` when
/// the face lies in a plane-diagonal plane (or is a diagonal segment in 2D).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Area {
    pub twice: i64,
    pub sqrt2: bool,
}

impl Area {
    pub fn to_f64(self) -> f64 {
        let base = self.twice as f64 * 0.5;
        if self.sqrt2 {
            base * std::f64::consts::SQRT_2
        } else {
            base
        }
    }

    /// Rational coefficient relative to one face of the reference cell. The
    /// actual ratio is this value times `sqrt(2)` when `sqrt2` is set.
    pub fn face_ratio(self, dim: usize) -> Ratio<i64> {
        Ratio::new(self.twice, 2 * SCALE.pow(dim as u32 - 1))
    }

    fn add(self, other: Area) -> Area {
        debug_assert_eq!(self.sqrt2, other.sqrt2);
        Area {
            twice: self.twice + other.twice,
            sqrt2: self.sqrt2,
        }
    }
}

/// Face polygon with exact vertices, outward (or A-to-B) normal and area.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FacePolygon {
    pub vertices: Vec<LocalCoord>,
    pub normal: Direction,
    pub area: Area,
}

impl FacePolygon {
    pub fn vertex_mean(&self) -> [f64; 3] {
        vertex_mean(&self.vertices)
    }

    fn from_facet(f: &Facet) -> FacePolygon {
        FacePolygon {
            area: facet_area(&f.vertices, f.normal),
            vertices: f.vertices.clone(),
            normal: f.normal,
        }
    }
}

pub(crate) fn vertex_mean(vs: &[LocalCoord]) -> [f64; 3] {
    let n = vs.len() as f64;
    let mut m = [0.0; 3];
    for v in vs {
        for i in 0..3 {
            m[i] += v[i] as f64;
        }
    }
    m.map(|x| x / n)
}

pub(crate) fn sub(a: LocalCoord, b: LocalCoord) -> LocalCoord {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn dot(a: [i64; 3], b: [i64; 3]) -> i64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn cross(a: [i64; 3], b: [i64; 3]) -> [i64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

pub(crate) fn primitive(v: [i64; 3]) -> Direction {
    let g = gcd(gcd(v[0], v[1]), v[2]);
    if g == 0 {
        v
    } else {
        v.map(|x| x / g)
    }
}

/// `true` for the 6 axis and 12 plane-diagonal directions.
pub fn is_axis_or_diagonal(n: Direction) -> bool {
    let nz: Vec<i64> = n.iter().copied().filter(|&x| x != 0).collect();
    match nz.len() {
        1 => nz[0].abs() == 1,
        2 => nz.iter().all(|x| x.abs() == 1),
        _ => false,
    }
}

fn is_diagonal(n: Direction) -> bool {
    n.iter().filter(|&&x| x != 0).count() == 2
}

/// Exact area of a planar polygon (or length of a 2D segment).
pub(crate) fn facet_area(vs: &[LocalCoord], normal: Direction) -> Area {
    if vs.len() == 2 {
        let d = sub(vs[1], vs[0]);
        let comp = d.iter().map(|x| x.abs()).max().unwrap();
        return Area {
            twice: 2 * comp,
            sqrt2: is_diagonal(normal),
        };
    }
    let mut va = [0i64; 3];
    for i in 0..vs.len() {
        let c = cross(vs[i], vs[(i + 1) % vs.len()]);
        for k in 0..3 {
            va[k] += c[k];
        }
    }
    // For an axis normal the vector area has one entry; for a diagonal normal
    // it is (twice / sqrt 2) * (+-1, +-1, 0) up to permutation.
    let k = (0..3).find(|&k| normal[k] != 0).unwrap();
    Area {
        twice: va[k].abs(),
        sqrt2: is_diagonal(normal),
    }
}

/// L-infinity distance and squared Euclidean distance, both exact.
pub fn linf_dist2_scaled(a: LocalCoord, b: LocalCoord) -> (i64, i64) {
    let d = sub(a, b);
    let dinf = d.iter().map(|x| x.abs()).max().unwrap();
    (dinf, dot(d, d))
}

/// Node closest to `p`: smallest L-infinity distance, ties broken by the
/// Euclidean distance and finally by node id.
pub fn assign_point(p: LocalCoord, nodes: &[(u8, LocalCoord)]) -> u8 {
    assert!(!nodes.is_empty(), "assign_point: empty node set");
    nodes
        .iter()
        .map(|&(id, c)| {
            let (dinf, d2) = linf_dist2_scaled(p, c);
            (dinf, d2, id)
        })
        .min()
        .unwrap()
        .2
}

pub fn assign_atom(atom: &Atom, nodes: &[(u8, LocalCoord)]) -> u8 {
    assign_point(atom.centroid, nodes)
}

/// The fixed atom subdivision of the reference cell. Computed once per
/// dimension.
pub fn reference_atoms(dim: usize) -> &'static [Atom] {
    static ATOMS2: OnceLock<Vec<Atom>> = OnceLock::new();
    static ATOMS3: OnceLock<Vec<Atom>> = OnceLock::new();
    match dim {
        2 => ATOMS2.get_or_init(|| subdivide_reference_cell(2)),
        3 => ATOMS3.get_or_init(|| subdivide_reference_cell(3)),
        _ => panic!("unsupported dimension {dim}"),
    }
}

/// Builds the atoms of the reference cell: 128 in 3D, 20 in 2D.
pub fn subdivide_reference_cell(dim: usize) -> Vec<Atom> {
    assert!(dim == 2 || dim == 3, "unsupported dimension {dim}");
    let mut atoms = Vec::new();
    let zr = if dim == 3 { 4 } else { 1 };
    for k in 0..zr {
        for j in 0..4 {
            for i in 0..4 {
                let idx = [i, j, k];
                let origin = idx.map(|t| t * STEP);
                let corners: Vec<LocalCoord> = (0..1 << dim)
                    .map(|b| {
                        let mut c = origin;
                        for (ax, x) in c.iter_mut().enumerate().take(dim) {
                            if b >> ax & 1 == 1 {
                                *x += STEP;
                            }
                        }
                        c
                    })
                    .collect();
                let inner: Vec<usize> = (0..dim).filter(|&ax| idx[ax] == 1 || idx[ax] == 2).collect();
                let abs = |c: &LocalCoord, ax: usize| (c[ax] - HALF).abs();
                match (dim, inner.len()) {
                    (3, 3) | (2, 2) => {
                        // ordered by |x'|, |y'|(, |z'|) about the cell center
                        let kind = if dim == 3 { AtomKind::Tet } else { AtomKind::Triangle };
                        for perm in permutations(dim) {
                            let vs: Vec<LocalCoord> = corners
                                .iter()
                                .copied()
                                .filter(|c| (1..dim).all(|t| abs(c, perm[t - 1]) >= abs(c, perm[t])))
                                .collect();
                            atoms.push(make_atom(kind, vs, dim));
                        }
                    }
                    (3, 2) => {
                        let (u, w) = (inner[0], inner[1]);
                        for ge in [true, false] {
                            let vs: Vec<LocalCoord> = corners
                                .iter()
                                .copied()
                                .filter(|c| if ge { abs(c, u) >= abs(c, w) } else { abs(c, u) <= abs(c, w) })
                                .collect();
                            atoms.push(make_atom(AtomKind::Prism, vs, dim));
                        }
                    }
                    _ => {
                        let kind = if dim == 3 { AtomKind::Cube } else { AtomKind::Square };
                        atoms.push(make_atom(kind, corners, dim));
                    }
                }
            }
        }
    }
    atoms
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 2 {
        return vec![vec![0, 1], vec![1, 0]];
    }
    vec![
        vec![0, 1, 2],
        vec![0, 2, 1],
        vec![1, 0, 2],
        vec![1, 2, 0],
        vec![2, 0, 1],
        vec![2, 1, 0],
    ]
}

fn make_atom(kind: AtomKind, vertices: Vec<LocalCoord>, dim: usize) -> Atom {
    let n = vertices.len() as i64;
    let mut sum = [0i64; 3];
    for v in &vertices {
        for i in 0..3 {
            sum[i] += v[i];
        }
    }
    assert!(sum.iter().all(|s| s % n == 0), "non-integer centroid");
    let centroid = sum.map(|s| s / n);
    let (facets, volume) = if dim == 3 {
        let f = convex_facets_3d(&vertices);
        let vol = polytope_volume6(&f, centroid) / 6;
        (f, vol)
    } else {
        let ordered = order_ccw(&vertices, [0, 0, 1]);
        let mut a2 = 0;
        let mut f = Vec::new();
        for i in 0..ordered.len() {
            let a = ordered[i];
            let b = ordered[(i + 1) % ordered.len()];
            a2 += a[0] * b[1] - a[1] * b[0];
            f.push(Facet {
                vertices: vec![a, b],
                normal: primitive([b[1] - a[1], a[0] - b[0], 0]),
            });
        }
        (f, a2 / 2)
    };
    Atom {
        kind,
        vertices,
        centroid,
        volume,
        facets,
    }
}

/// Six times the volume, from the facet fans about an interior point.
fn polytope_volume6(facets: &[Facet], inner: LocalCoord) -> i64 {
    let mut v6 = 0;
    for f in facets {
        for i in 1..f.vertices.len() - 1 {
            let a = sub(f.vertices[0], inner);
            let b = sub(f.vertices[i], inner);
            let c = sub(f.vertices[i + 1], inner);
            v6 += dot(a, cross(b, c));
        }
    }
    v6
}

fn convex_facets_3d(vs: &[LocalCoord]) -> Vec<Facet> {
    let n = vs.len();
    let mut seen: Vec<(Direction, i64)> = Vec::new();
    let mut facets = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let nr = cross(sub(vs[j], vs[i]), sub(vs[k], vs[i]));
                if nr == [0, 0, 0] {
                    continue;
                }
                let mut nr = primitive(nr);
                let d = dot(nr, vs[i]);
                let above = vs.iter().any(|v| dot(nr, *v) > d);
                let below = vs.iter().any(|v| dot(nr, *v) < d);
                if above && below {
                    continue;
                }
                if above {
                    nr = nr.map(|x| -x);
                }
                let d = dot(nr, vs[i]);
                if seen.contains(&(nr, d)) {
                    continue;
                }
                seen.push((nr, d));
                let on: Vec<LocalCoord> = vs.iter().copied().filter(|v| dot(nr, *v) == d).collect();
                facets.push(Facet {
                    vertices: order_ccw(&on, nr),
                    normal: nr,
                });
            }
        }
    }
    facets
}

/// Orders points of a convex planar polygon counterclockwise about `normal`.
fn order_ccw(vs: &[LocalCoord], normal: Direction) -> Vec<LocalCoord> {
    let c = vertex_mean(vs);
    let nf = normal.map(|x| x as f64);
    let e1 = [vs[0][0] as f64 - c[0], vs[0][1] as f64 - c[1], vs[0][2] as f64 - c[2]];
    let e2 = [
        nf[1] * e1[2] - nf[2] * e1[1],
        nf[2] * e1[0] - nf[0] * e1[2],
        nf[0] * e1[1] - nf[1] * e1[0],
    ];
    let mut keyed: Vec<(f64, LocalCoord)> = vs
        .iter()
        .map(|v| {
            let d = [v[0] as f64 - c[0], v[1] as f64 - c[1], v[2] as f64 - c[2]];
            let x = d[0] * e1[0] + d[1] * e1[1] + d[2] * e1[2];
            let y = d[0] * e2[0] + d[1] * e2[1] + d[2] * e2[2];
            (y.atan2(x), *v)
        })
        .collect();
    keyed.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    keyed.into_iter().map(|(_, v)| v).collect()
}

/// Canonical hash key of a facet (its vertex set).
pub(crate) fn facet_key(vs: &[LocalCoord]) -> Vec<LocalCoord> {
    let mut k = vs.to_vec();
    k.sort_unstable();
    k
}

/// Facet adjacency of the reference subdivision: for every atom facet, the
/// atom on the other side (`None` on the cell boundary).
pub fn facet_neighbors(dim: usize) -> &'static [Vec<Option<usize>>] {
    static N2: OnceLock<Vec<Vec<Option<usize>>>> = OnceLock::new();
    static N3: OnceLock<Vec<Vec<Option<usize>>>> = OnceLock::new();
    let build = || {
        let atoms = reference_atoms(dim);
        let mut owners: HashMap<Vec<LocalCoord>, Vec<usize>> = HashMap::new();
        for (a, atom) in atoms.iter().enumerate() {
            for f in &atom.facets {
                owners.entry(facet_key(&f.vertices)).or_default().push(a);
            }
        }
        atoms
            .iter()
            .enumerate()
            .map(|(a, atom)| {
                atom.facets
                    .iter()
                    .map(|f| {
                        let o = &owners[&facet_key(&f.vertices)];
                        o.iter().copied().find(|&b| b != a)
                    })
                    .collect()
            })
            .collect()
    };
    match dim {
        2 => N2.get_or_init(build),
        3 => N3.get_or_init(build),
        _ => panic!("unsupported dimension {dim}"),
    }
}

/// Shared facets between two disjoint atom sets, merged into maximal
/// coplanar polygons with normals pointing from `a` to `b`.
pub fn interface_faces(atoms_a: &[usize], atoms_b: &[usize], dim: usize) -> Vec<FacePolygon> {
    let atoms = reference_atoms(dim);
    let nbrs = facet_neighbors(dim);
    let in_b: std::collections::HashSet<usize> = atoms_b.iter().copied().collect();
    let mut facets = Vec::new();
    for &a in atoms_a {
        for (fi, f) in atoms[a].facets.iter().enumerate() {
            if let Some(b) = nbrs[a][fi] {
                if in_b.contains(&b) {
                    facets.push(f.clone());
                }
            }
        }
    }
    merge_coplanar(facets)
}

/// Merges facets that share a plane and an orientation into maximal
/// polygons. Components whose union is not a simple polygon are returned as
/// their individual facets.
pub fn merge_coplanar(facets: Vec<Facet>) -> Vec<FacePolygon> {
    let mut groups: BTreeMap<(Direction, i64), Vec<Facet>> = BTreeMap::new();
    for f in facets {
        let d = dot(f.normal, f.vertices[0]);
        groups.entry((f.normal, d)).or_default().push(f);
    }
    let mut out = Vec::new();
    for (_, group) in groups {
        if group[0].vertices.len() == 2 {
            out.extend(merge_collinear(group));
        } else {
            for comp in components(&group) {
                let fs: Vec<&Facet> = comp.iter().map(|&i| &group[i]).collect();
                match merge_component(&fs) {
                    Some(p) => out.push(p),
                    None => out.extend(fs.iter().map(|f| FacePolygon::from_facet(f))),
                }
            }
        }
    }
    out
}

fn components(group: &[Facet]) -> Vec<Vec<usize>> {
    let n = group.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        let mut c = x;
        while p[c] != r {
            let nx = p[c];
            p[c] = r;
            c = nx;
        }
        r
    }
    let mut edge_owner: HashMap<(LocalCoord, LocalCoord), usize> = HashMap::new();
    for (i, f) in group.iter().enumerate() {
        let m = f.vertices.len();
        for t in 0..m {
            let (u, v) = (f.vertices[t], f.vertices[(t + 1) % m]);
            let key = if u < v { (u, v) } else { (v, u) };
            if let Some(&j) = edge_owner.get(&key) {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                parent[ri] = rj;
            } else {
                edge_owner.insert(key, i);
            }
        }
    }
    let mut comps: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        comps.entry(r).or_default().push(i);
    }
    comps.into_values().collect()
}

fn merge_component(fs: &[&Facet]) -> Option<FacePolygon> {
    let normal = fs[0].normal;
    if fs.len() == 1 {
        return Some(FacePolygon::from_facet(fs[0]));
    }
    let mut directed: std::collections::HashSet<(LocalCoord, LocalCoord)> = Default::default();
    for f in fs {
        let m = f.vertices.len();
        for t in 0..m {
            directed.insert((f.vertices[t], f.vertices[(t + 1) % m]));
        }
    }
    let mut next: BTreeMap<LocalCoord, LocalCoord> = BTreeMap::new();
    for &(u, v) in &directed {
        if !directed.contains(&(v, u)) && next.insert(u, v).is_some() {
            // pinch vertex
            return None;
        }
    }
    let start = *next.keys().next()?;
    let mut loop_ = vec![start];
    let mut cur = next[&start];
    while cur != start {
        loop_.push(cur);
        cur = *next.get(&cur)?;
        if loop_.len() > next.len() {
            return None;
        }
    }
    if loop_.len() != next.len() {
        // hole or several boundary loops
        return None;
    }
    let m = loop_.len();
    let verts: Vec<LocalCoord> = (0..m)
        .filter(|&i| {
            let a = loop_[(i + m - 1) % m];
            let b = loop_[i];
            let c = loop_[(i + 1) % m];
            cross(sub(b, a), sub(c, b)) != [0, 0, 0]
        })
        .map(|i| loop_[i])
        .collect();
    let area = fs
        .iter()
        .map(|f| facet_area(&f.vertices, f.normal))
        .reduce(Area::add)
        .unwrap();
    Some(FacePolygon {
        vertices: verts,
        normal,
        area,
    })
}

fn merge_collinear(group: Vec<Facet>) -> Vec<FacePolygon> {
    // All segments lie on one line with a common orientation; sort along the
    // line direction and join the ones that touch.
    let dir = sub(group[0].vertices[1], group[0].vertices[0]);
    let mut segs: Vec<(i64, i64, LocalCoord, LocalCoord)> = group
        .iter()
        .map(|f| (dot(dir, f.vertices[0]), dot(dir, f.vertices[1]), f.vertices[0], f.vertices[1]))
        .collect();
    segs.sort_unstable();
    let normal = group[0].normal;
    let mut out: Vec<FacePolygon> = Vec::new();
    let mut cur: Option<(LocalCoord, LocalCoord, Area)> = None;
    for (_, _, a, b) in segs {
        let area = facet_area(&[a, b], normal);
        cur = match cur {
            Some((s, e, ar)) if e == a => Some((s, b, ar.add(area))),
            Some((s, e, ar)) => {
                out.push(FacePolygon {
                    vertices: vec![s, e],
                    normal,
                    area: ar,
                });
                Some((a, b, area))
            }
            None => Some((a, b, area)),
        };
    }
    if let Some((s, e, ar)) = cur {
        out.push(FacePolygon {
            vertices: vec![s, e],
            normal,
            area: ar,
        });
    }
    out
}

/// L-infinity distance from a point to a convex atom, by the separating-axis
/// theorem (axis-aligned cube against a convex polytope).
pub fn linf_distance_to_atom(p: [f64; 3], atom: &Atom, dim: usize) -> f64 {
    let mut axes: Vec<[f64; 3]> = Vec::new();
    for ax in 0..dim {
        let mut u = [0.0; 3];
        u[ax] = 1.0;
        axes.push(u);
    }
    for f in &atom.facets {
        axes.push(f.normal.map(|x| x as f64));
        if dim == 3 {
            let m = f.vertices.len();
            for t in 0..m {
                let e = sub(f.vertices[(t + 1) % m], f.vertices[t]);
                for ax in 0..3 {
                    let mut u = [0i64; 3];
                    u[ax] = 1;
                    let c = cross(u, e);
                    if c != [0, 0, 0] {
                        axes.push(c.map(|x| x as f64));
                    }
                }
            }
        }
    }
    let mut best: f64 = 0.0;
    for u in axes {
        let l1 = u[0].abs() + u[1].abs() + u[2].abs();
        let up = u[0] * p[0] + u[1] * p[1] + u[2] * p[2];
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in &atom.vertices {
            let x = u[0] * v[0] as f64 + u[1] * v[1] as f64 + u[2] * v[2] as f64;
            lo = lo.min(x);
            hi = hi.max(x);
        }
        let gap = (lo - up).max(up - hi);
        best = best.max(gap / l1);
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn census(dim: usize) -> BTreeMap<AtomKind, usize> {
        let mut m = BTreeMap::new();
        for a in reference_atoms(dim) {
            *m.entry(a.kind).or_insert(0) += 1;
        }
        m
    }

    #[test]
    fn atom_counts_and_volumes() {
        let a3 = reference_atoms(3);
        assert_eq!(a3.len(), 128);
        let c = census(3);
        assert_eq!(c[&AtomKind::Cube], 32);
        assert_eq!(c[&AtomKind::Prism], 48);
        assert_eq!(c[&AtomKind::Tet], 48);
        let total: Ratio<i64> = a3.iter().map(|a| a.volume_fraction(3)).sum();
        assert_eq!(total, Ratio::from_integer(1));
        for a in a3 {
            let expect = match a.kind {
                AtomKind::Cube => Ratio::new(1, 64),
                AtomKind::Prism => Ratio::new(1, 128),
                AtomKind::Tet => Ratio::new(1, 384),
                _ => unreachable!(),
            };
            assert_eq!(a.volume_fraction(3), expect);
        }

        let a2 = reference_atoms(2);
        assert_eq!(a2.len(), 20);
        let c = census(2);
        assert_eq!(c[&AtomKind::Square], 12);
        assert_eq!(c[&AtomKind::Triangle], 8);
        let total: Ratio<i64> = a2.iter().map(|a| a.volume_fraction(2)).sum();
        assert_eq!(total, Ratio::from_integer(1));
    }

    #[test]
    fn lattice_and_centroid_integrality() {
        for dim in [2, 3] {
            for a in reference_atoms(dim) {
                assert!(a.vertices.iter().flatten().all(|x| x % 12 == 0));
                match a.kind {
                    AtomKind::Cube | AtomKind::Square => {
                        assert!(a.centroid[..dim].iter().all(|x| x % 6 == 0))
                    }
                    _ => {}
                }
            }
        }
    }

    #[test]
    fn watertight_and_normals() {
        for dim in [2, 3] {
            let atoms = reference_atoms(dim);
            let nb = facet_neighbors(dim);
            let mut owners: HashMap<Vec<LocalCoord>, usize> = HashMap::new();
            for (i, a) in atoms.iter().enumerate() {
                for (fi, f) in a.facets.iter().enumerate() {
                    assert!(is_axis_or_diagonal(f.normal), "{:?}", f.normal);
                    *owners.entry(facet_key(&f.vertices)).or_default() += 1;
                    let on_boundary = f
                        .vertices
                        .iter()
                        .all(|v| (0..dim).any(|ax| v[ax] == 0) )
                        || f.vertices.iter().all(|v| (0..dim).any(|ax| v[ax] == SCALE));
                    if nb[i][fi].is_none() {
                        // single-owner facets lie on one cell face
                        let k = (0..dim).find(|&k| f.normal[k] != 0).unwrap();
                        assert!(f.vertices.iter().all(|v| v[k] == f.vertices[0][k]));
                        assert!(f.vertices[0][k] == 0 || f.vertices[0][k] == SCALE);
                        assert!(on_boundary);
                    }
                }
            }
            assert!(owners.values().all(|&c| c == 1 || c == 2));
        }
    }

    #[test]
    fn facet_normals_point_outward() {
        for a in reference_atoms(3) {
            for f in &a.facets {
                let d = dot(f.normal, f.vertices[0]);
                assert!(dot(f.normal, a.centroid) < d);
                assert!(facet_area(&f.vertices, f.normal).twice > 0);
            }
        }
    }

    #[test]
    fn distance_examples() {
        assert_eq!(linf_dist2_scaled([5, 6, 7], [5, 6, 7]), (0, 0));
        assert_eq!(linf_dist2_scaled([0, 0, 0], [48, 24, 0]), (48, 2880));
        assert_eq!(linf_dist2_scaled([18, 18, 18], [0, 0, 0]), (18, 972));
        assert_eq!(linf_dist2_scaled([18, 18, 18], [24, 24, 0]), (18, 396));
        let nodes = [(0u8, [0, 0, 0]), (24u8, [24, 24, 0])];
        assert_eq!(assign_point([18, 18, 18], &nodes), 24);
    }

    #[test]
    fn assignment_examples() {
        let corners: Vec<(u8, LocalCoord)> = (0..8u8)
            .map(|id| (id, [48 * (id & 1) as i64, 48 * (id >> 1 & 1) as i64, 48 * (id >> 2 & 1) as i64]))
            .collect();
        assert_eq!(assign_point([6, 6, 6], &corners), 0);
        let mut with_face = corners.clone();
        with_face.push((24, [24, 24, 0]));
        assert_eq!(linf_dist2_scaled([18, 18, 6], [0, 0, 0]), (18, 684));
        assert_eq!(linf_dist2_scaled([18, 18, 6], [24, 24, 0]), (6, 108));
        assert_eq!(assign_point([18, 18, 6], &with_face), 24);
        for a in reference_atoms(3) {
            assert_eq!(assign_atom(a, &[(7, [48, 0, 48])]), 7);
        }
    }

    #[test]
    fn interface_examples() {
        let atoms = reference_atoms(3);
        let find = |c: LocalCoord| atoms.iter().position(|a| a.centroid == c).unwrap();
        // two face-adjacent corner cubes
        let a = find([6, 6, 6]);
        let b = find([18, 6, 6]);
        let f = interface_faces(&[a], &[b], 3);
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].normal, [1, 0, 0]);
        assert_eq!(f[0].area.face_ratio(3), Ratio::new(1, 16));
        assert!(!f[0].area.sqrt2);
        assert!(interface_faces(&[a], &[find([42, 42, 42])], 3).is_empty());
        // tet/tet across a diagonal cut: triangle, sqrt(2) * 1/32
        let tets: Vec<usize> = (0..atoms.len()).filter(|&i| atoms[i].kind == AtomKind::Tet).collect();
        let mut diagonal_tris = 0;
        for &i in &tets {
            for &j in &tets {
                for f in interface_faces(&[i], &[j], 3) {
                    if f.area.sqrt2 {
                        assert_eq!(f.vertices.len(), 3);
                        assert_eq!(f.area.face_ratio(3), Ratio::new(1, 32));
                        diagonal_tris += 1;
                    }
                }
            }
        }
        // 8 central cubes, 6 internal diagonal facets each, seen from both sides
        assert_eq!(diagonal_tris, 8 * 6 * 2);
        // prism/tet share an axis-aligned triangle of area 1/32
        let prisms: Vec<usize> = (0..atoms.len()).filter(|&i| atoms[i].kind == AtomKind::Prism).collect();
        let shared: Vec<FacePolygon> = prisms
            .iter()
            .flat_map(|&p| tets.iter().flat_map(move |&t| interface_faces(&[p], &[t], 3)))
            .collect();
        assert_eq!(shared.len(), 48);
        for f in &shared {
            assert!(!f.area.sqrt2 && f.vertices.len() == 3);
            assert_eq!(f.area.face_ratio(3), Ratio::new(1, 32));
        }
        // prism/prism across a diagonal cut: rectangle, sqrt(2) * 1/16
        let mut diagonal_rects = 0;
        for &i in &prisms {
            for &j in &prisms {
                for f in interface_faces(&[i], &[j], 3).into_iter().filter(|f| f.area.sqrt2) {
                    assert_eq!(f.vertices.len(), 4);
                    assert_eq!(f.area.face_ratio(3), Ratio::new(1, 16));
                    diagonal_rects += 1;
                }
            }
        }
        assert_eq!(diagonal_rects, 24 * 2);
    }

    #[test]
    fn sat_distance() {
        let atoms = reference_atoms(3);
        let cube = atoms.iter().find(|a| a.centroid == [6, 6, 6]).unwrap();
        assert!((linf_distance_to_atom([20.0, 6.0, 6.0], cube, 3) - 8.0).abs() < 1e-12);
        assert!((linf_distance_to_atom([20.0, 20.0, 30.0], cube, 3) - 18.0).abs() < 1e-12);
        assert_eq!(linf_distance_to_atom([6.0, 6.0, 6.0], cube, 3), 0.0);
        let tet = atoms.iter().find(|a| a.kind == AtomKind::Tet).unwrap();
        for &v in &tet.vertices {
            let p = v.map(|x| x as f64);
            assert!(linf_distance_to_atom(p, tet, 3).abs() < 1e-12);
        }
    }
}
