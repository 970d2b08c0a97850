//! JSON form of a [`PatternTable`].
//!
//! Regions carry their atom ids, so a table read back is rebuilt from the
//! per-atom owners; the stored faces are then compared against the rebuilt
//! ones to reject inconsistent files.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::nodes::{node_count, LocalNodeId};
use super::symmetry::group;
use super::table::{PatternTable, TableEntry};
use super::{LocalPattern, RefinementKey};
use crate::error::{Error, Result};
use crate::geometry::{reference_atoms, Direction, LocalCoord};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableJson {
    pub dim: usize,
    pub canonical: Vec<CanonicalJson>,
    pub index: Vec<IndexJson>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CanonicalJson {
    pub id: u32,
    pub key: u32,
    pub regions: Vec<RegionJson>,
    pub faces: Vec<FaceJson>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionJson {
    pub node: LocalNodeId,
    pub volume_num: i64,
    pub volume_den: i64,
    pub atoms: Vec<u16>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FaceJson {
    pub a: LocalNodeId,
    pub b: LocalNodeId,
    pub normal: Direction,
    pub sqrt2: bool,
    pub area_num: i64,
    pub area_den: i64,
    pub verts: Vec<LocalCoord>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexJson {
    pub key: u32,
    pub canon_id: u32,
    pub sym_op: u8,
}

fn pattern_json(id: u32, p: &LocalPattern) -> CanonicalJson {
    CanonicalJson {
        id,
        key: p.key.0,
        regions: p
            .regions
            .iter()
            .map(|r| {
                let v = r.volume_fraction(p.dim);
                RegionJson {
                    node: r.node,
                    volume_num: *v.numer(),
                    volume_den: *v.denom(),
                    atoms: r.atoms.clone(),
                }
            })
            .collect(),
        faces: p
            .internal_faces
            .iter()
            .map(|f| {
                let a = f.polygon.area.face_ratio(p.dim);
                FaceJson {
                    a: f.a,
                    b: f.b,
                    normal: f.polygon.normal,
                    sqrt2: f.polygon.area.sqrt2,
                    area_num: *a.numer(),
                    area_den: *a.denom(),
                    verts: f.polygon.vertices.clone(),
                }
            })
            .collect(),
    }
}

pub fn table_to_json(t: &PatternTable) -> TableJson {
    TableJson {
        dim: t.dim,
        canonical: t
            .canonical
            .iter()
            .enumerate()
            .map(|(i, p)| pattern_json(i as u32, p))
            .collect(),
        index: t
            .entries()
            .map(|(k, e)| IndexJson {
                key: k.0,
                canon_id: e.canon_id,
                sym_op: e.sym_op,
            })
            .collect(),
    }
}

pub fn table_from_json(j: &TableJson) -> Result<PatternTable> {
    let dim = j.dim;
    if dim != 2 && dim != 3 {
        return Err(Error::Format(format!("unsupported dimension {dim}")));
    }
    let n_atoms = reference_atoms(dim).len();
    let mut canonical = Vec::with_capacity(j.canonical.len());
    for (i, c) in j.canonical.iter().enumerate() {
        if c.id as usize != i {
            return Err(Error::Format(format!("canonical ids must be 0..n in order, found {} at {i}", c.id)));
        }
        let key = RefinementKey(c.key);
        key.validate(dim)?;
        let mut owner: Vec<Option<LocalNodeId>> = vec![None; n_atoms];
        for r in &c.regions {
            if r.node as usize >= node_count(dim) {
                return Err(Error::Format(format!("node id {} out of range", r.node)));
            }
            for &a in &r.atoms {
                let slot = owner
                    .get_mut(a as usize)
                    .ok_or_else(|| Error::Format(format!("atom id {a} out of range")))?;
                if slot.replace(r.node).is_some() {
                    return Err(Error::Format(format!("atom {a} assigned twice in pattern {i}")));
                }
            }
        }
        let owner: Vec<LocalNodeId> = owner
            .into_iter()
            .enumerate()
            .map(|(a, o)| o.ok_or_else(|| Error::Format(format!("atom {a} unassigned in pattern {i}"))))
            .collect::<Result<_>>()?;
        let p = LocalPattern::from_owners(dim, key, owner);
        if pattern_json(c.id, &p) != *c {
            return Err(Error::Format(format!("pattern {i}: stored regions or faces inconsistent with atoms")));
        }
        canonical.push(p);
    }
    let mut entries = Vec::with_capacity(j.index.len());
    let mut prev: Option<u32> = None;
    for e in &j.index {
        if prev.is_some_and(|p| p >= e.key) {
            return Err(Error::Format("index keys must be strictly ascending".into()));
        }
        prev = Some(e.key);
        RefinementKey(e.key).validate(dim)?;
        if e.canon_id as usize >= canonical.len() || e.sym_op as usize >= group(dim).len() {
            return Err(Error::Format(format!("index entry for key {} out of range", e.key)));
        }
        entries.push((
            RefinementKey(e.key),
            TableEntry {
                canon_id: e.canon_id,
                sym_op: e.sym_op,
            },
        ));
    }
    Ok(PatternTable::from_parts(dim, canonical, &entries))
}

pub fn write_table(t: &PatternTable, path: &Path) -> Result<()> {
    let f = std::io::BufWriter::new(std::fs::File::create(path)?);
    serde_json::to_writer(f, &table_to_json(t))?;
    Ok(())
}

pub fn read_table(path: &Path) -> Result<PatternTable> {
    let f = std::io::BufReader::new(std::fs::File::open(path)?);
    let j: TableJson = serde_json::from_reader(f)?;
    table_from_json(&j)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pattern::table::build_table;

    #[test]
    fn round_trip_2d_and_3d() {
        for dim in [2, 3] {
            let t = build_table(dim).unwrap();
            let s = serde_json::to_string(&table_to_json(&t)).unwrap();
            let back = table_from_json(&serde_json::from_str(&s).unwrap()).unwrap();
            assert_eq!(back, t);
            assert_eq!(serde_json::to_string(&table_to_json(&back)).unwrap(), s);
        }
    }

    #[test]
    fn corrupted_file_rejected() {
        let t = build_table(2).unwrap();
        let mut j = table_to_json(&t);
        let moved = j.canonical[1].regions[0].atoms.pop().unwrap();
        j.canonical[1].regions[1].atoms.push(moved);
        assert!(table_from_json(&j).is_err());
    }
}
