//! Canonical forms under the cell symmetry group and the key lookup table.

use std::collections::BTreeMap;

use super::nodes::{enumerate_valid_keys, face_count, key_bits, node_coord, node_id_at, LocalNodeId};
use super::symmetry::{group, op_index};
use super::{apply_symmetry, build_pattern, LocalPattern, RefinementKey, SymmetryOp};
use crate::error::{Error, Result};
use crate::geometry::{reference_atoms, LocalCoord};

/// Orbit-minimum key and the group element taking it back to `key`.
pub fn canonicalize(key: RefinementKey, dim: usize) -> Result<(RefinementKey, SymmetryOp)> {
    key.validate(dim)?;
    let (canon, g) = group(dim)
        .iter()
        .map(|g| (g.apply_key(dim, key), *g))
        .min_by_key(|&(k, _)| k)
        .unwrap();
    Ok((canon, g.inverse()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TableEntry {
    pub canon_id: u32,
    /// Index into [`group`].
    pub sym_op: u8,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternTable {
    pub dim: usize,
    pub canonical: Vec<LocalPattern>,
    index: Vec<Option<TableEntry>>,
}

impl PatternTable {
    pub(crate) fn from_parts(dim: usize, canonical: Vec<LocalPattern>, entries: &[(RefinementKey, TableEntry)]) -> Self {
        let mut index = vec![None; 1 << key_bits(dim)];
        for &(k, e) in entries {
            index[k.0 as usize] = Some(e);
        }
        PatternTable { dim, canonical, index }
    }

    pub fn entry_count(&self) -> usize {
        self.index.iter().filter(|e| e.is_some()).count()
    }

    pub fn canonical_count(&self) -> usize {
        self.canonical.len()
    }

    /// Valid keys with their entries, ascending.
    pub fn entries(&self) -> impl Iterator<Item = (RefinementKey, TableEntry)> + '_ {
        self.index
            .iter()
            .enumerate()
            .filter_map(|(k, e)| e.map(|e| (RefinementKey(k as u32), e)))
    }

    pub fn lookup(&self, key: RefinementKey) -> Result<(usize, SymmetryOp)> {
        let e = self
            .index
            .get(key.0 as usize)
            .copied()
            .flatten()
            .ok_or(Error::MissingKey(key.0))?;
        Ok((e.canon_id as usize, group(self.dim)[e.sym_op as usize]))
    }

    pub fn pattern(&self, key: RefinementKey) -> Result<LocalPattern> {
        let (id, op) = self.lookup(key)?;
        Ok(apply_symmetry(&self.canonical[id], &op))
    }

    /// Number of keys in the orbit of each canonical pattern.
    pub fn orbit_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.canonical.len()];
        for (_, e) in self.entries() {
            sizes[e.canon_id as usize] += 1;
        }
        sizes
    }
}

/// Builds every canonical pattern once and maps each valid key to it.
/// A sample of keys is checked against direct construction.
pub fn build_table(dim: usize) -> Result<PatternTable> {
    let keys = enumerate_valid_keys(dim);
    let mut canon_ids: BTreeMap<RefinementKey, u32> = BTreeMap::new();
    let mut canonical = Vec::new();
    let mut entries = Vec::with_capacity(keys.len());
    for &k in &keys {
        let (c, op) = canonicalize(k, dim)?;
        let id = match canon_ids.get(&c) {
            Some(&id) => id,
            None => {
                let id = canonical.len() as u32;
                canonical.push(build_pattern(c, dim)?);
                canon_ids.insert(c, id);
                id
            }
        };
        entries.push((
            k,
            TableEntry {
                canon_id: id,
                sym_op: op_index(dim, &op) as u8,
            },
        ));
    }
    let table = PatternTable::from_parts(dim, canonical, &entries);
    let stride = (keys.len() / 64).max(1);
    for &k in keys.iter().step_by(stride) {
        let direct = build_pattern(k, dim)?;
        if table.pattern(k)? != direct {
            return Err(Error::Format(format!("table pattern for key {} differs from direct build", k.0)));
        }
    }
    log::debug!("pattern table dim {dim}: {} keys, {} canonical", table.entry_count(), table.canonical_count());
    Ok(table)
}

/// Returns true when the traces of `p` and `q` on cell face `f` coincide.
pub fn traces_agree(p: &LocalPattern, q: &LocalPattern, f: usize) -> bool {
    p.boundary_traces[f] == q.boundary_traces[f]
}

/// Compares the trace of a 3D pattern on face `f` with the 2D pattern of the
/// face's own node configuration. Returns the number of trace pieces whose
/// owner disagrees.
pub fn trace_mismatches_2d(p: &LocalPattern, f: usize) -> usize {
    assert_eq!(p.dim, 3);
    let ax = f / 2;
    let (u, w) = match ax {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    };
    let project = |c: LocalCoord| -> LocalCoord { [c[u], c[w], 0] };
    let mut key2 = 0u32;
    for (_, c) in p.key.nodes(3) {
        if c[ax] != node_coord(3, 20 + f as u8)[ax] {
            continue;
        }
        let id2 = node_id_at(2, project(c));
        if let Some(id2) = id2.filter(|&i| i >= 4) {
            key2 |= 1 << (id2 - 4);
        }
    }
    let p2 = build_pattern(RefinementKey(key2), 2).expect("2D keys are always valid");
    let atoms2: BTreeMap<LocalCoord, usize> = reference_atoms(2)
        .iter()
        .enumerate()
        .map(|(i, a)| (project3(a.centroid), i))
        .collect();
    let atoms3 = reference_atoms(3);
    let mut mismatches = 0;
    for (&a, &owner) in &p.boundary_traces[f] {
        for facet in &atoms3[a as usize].facets {
            if facet.vertices.iter().any(|v| v[ax] != node_coord(3, 20 + f as u8)[ax]) {
                continue;
            }
            let n = facet.vertices.len() as i64;
            let mut m = [0i64; 3];
            for v in &facet.vertices {
                for k in 0..3 {
                    m[k] += v[k];
                }
            }
            let m = project(m.map(|x| x / n));
            let expected: Option<LocalNodeId> = atoms2.get(&m).map(|&i| p2.owner[i]);
            let owner2 = node_id_at(2, project(node_coord(3, owner)));
            if expected.is_none() || expected != owner2 {
                mismatches += 1;
            }
        }
    }
    mismatches
}

fn project3(c: LocalCoord) -> LocalCoord {
    [c[0], c[1], 0]
}

/// Keys grouped by their configuration on face `f`.
pub fn keys_by_face_config(dim: usize, f: usize) -> BTreeMap<u32, Vec<RefinementKey>> {
    assert!(f < face_count(dim));
    let mut m: BTreeMap<u32, Vec<RefinementKey>> = BTreeMap::new();
    for k in enumerate_valid_keys(dim) {
        m.entry(k.face_config(dim, f)).or_default().push(k);
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts() {
        let t3 = build_table(3).unwrap();
        assert_eq!(t3.entry_count(), 6210);
        assert_eq!(t3.canonical_count(), 227);
        assert_eq!(t3.orbit_sizes().iter().sum::<usize>(), 6210);
        let t2 = build_table(2).unwrap();
        assert_eq!(t2.entry_count(), 16);
        assert_eq!(t2.canonical_count(), 6);
    }

    #[test]
    fn canonical_forms() {
        let (c, op) = canonicalize(RefinementKey(0), 3).unwrap();
        assert_eq!((c, op), (RefinementKey(0), SymmetryOp::IDENTITY));
        for &k in enumerate_valid_keys(3).iter().step_by(37) {
            let (c, op) = canonicalize(k, 3).unwrap();
            assert_eq!(op.apply_key(3, c), k);
            assert_eq!(canonicalize(c, 3).unwrap().0, c);
            for g in group(3).iter().step_by(5) {
                assert_eq!(canonicalize(g.apply_key(3, k), 3).unwrap().0, c);
            }
        }
        assert!(canonicalize(RefinementKey(1 << 12), 3).is_err());
    }

    #[test]
    fn traces_match_2d_patterns() {
        for &k in enumerate_valid_keys(3).iter().step_by(11) {
            let p = build_pattern(k, 3).unwrap();
            for f in 0..6 {
                if !k.has_bit(12 + f as u32) {
                    assert_eq!(trace_mismatches_2d(&p, f), 0, "key {} face {f}", k.0);
                }
            }
        }
    }
}
