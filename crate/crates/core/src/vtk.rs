//! Legacy ASCII VTK writers.

use std::collections::HashMap;
use std::io::Write;

use crate::dual::{DualMesh, GaussReport, GlobalCoord};
use crate::error::{Error, Result};
use crate::grid::PrimalGrid;

#[derive(Default)]
struct Points {
    index: HashMap<GlobalCoord, usize>,
    coords: Vec<GlobalCoord>,
}

impl Points {
    fn id(&mut self, p: GlobalCoord) -> usize {
        *self.index.entry(p).or_insert_with(|| {
            self.coords.push(p);
            self.coords.len() - 1
        })
    }

    fn write(&self, w: &mut impl Write, scale: f64) -> Result<()> {
        writeln!(w, "POINTS {} double", self.coords.len())?;
        for p in &self.coords {
            writeln!(w, "{} {} {}", p[0] as f64 / scale, p[1] as f64 / scale, p[2] as f64 / scale)?;
        }
        Ok(())
    }
}

fn header(w: &mut impl Write, title: &str, kind: &str) -> Result<()> {
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "{title}")?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET {kind}")?;
    Ok(())
}

fn scalars(w: &mut impl Write, name: &str, kind: &str, values: impl Iterator<Item = String>) -> Result<()> {
    writeln!(w, "SCALARS {name} {kind} 1")?;
    writeln!(w, "LOOKUP_TABLE default")?;
    for v in values {
        writeln!(w, "{v}")?;
    }
    Ok(())
}

/// Dual cells as `VTK_POLYHEDRON` cells (3D meshes only), with cell data
/// `volume`, `n_leaves` and, when given, `gauss_residual`.
pub fn write_dual_cells(mesh: &DualMesh, gauss: Option<&GaussReport>, w: &mut impl Write) -> Result<()> {
    if mesh.dim != 3 {
        return Err(Error::Format("polyhedral export needs a 3D mesh; use the face export in 2D".into()));
    }
    let mut pts = Points::default();
    let mut cells: Vec<Vec<Vec<usize>>> = Vec::with_capacity(mesh.cells.len());
    for c in &mesh.cells {
        let mut faces = Vec::with_capacity(c.faces.len() + c.boundary_patches.len());
        for &(fi, owner) in &c.faces {
            let mut ids: Vec<usize> = mesh.face(fi).polygon.vertices.iter().map(|&v| pts.id(v)).collect();
            if !owner {
                ids.reverse();
            }
            faces.push(ids);
        }
        for &ti in &c.boundary_patches {
            faces.push(mesh.trace(ti).polygon.vertices.iter().map(|&v| pts.id(v)).collect());
        }
        cells.push(faces);
    }
    header(w, "dual grid", "UNSTRUCTURED_GRID")?;
    pts.write(w, mesh.scale())?;
    let entries: Vec<usize> = cells
        .iter()
        .map(|f| 1 + f.iter().map(|ids| 1 + ids.len()).sum::<usize>())
        .collect();
    writeln!(w, "CELLS {} {}", cells.len(), entries.iter().map(|e| e + 1).sum::<usize>())?;
    for (faces, n) in cells.iter().zip(&entries) {
        write!(w, "{n} {}", faces.len())?;
        for ids in faces {
            write!(w, " {}", ids.len())?;
            for i in ids {
                write!(w, " {i}")?;
            }
        }
        writeln!(w)?;
    }
    writeln!(w, "CELL_TYPES {}", cells.len())?;
    for _ in &cells {
        writeln!(w, "42")?;
    }
    writeln!(w, "CELL_DATA {}", cells.len())?;
    scalars(w, "volume", "double", mesh.cells.iter().map(|c| format!("{:e}", c.volume)))?;
    scalars(w, "n_leaves", "int", mesh.cells.iter().map(|c| c.contributing_leaves.len().to_string()))?;
    if let Some(g) = gauss {
        scalars(w, "gauss_residual", "double", g.residuals.iter().map(|r| format!("{r:e}")))?;
    }
    Ok(())
}

/// Dual faces as polygons (segments in 2D) with `owner`, `neighbor` and
/// `leaf` cell data.
pub fn write_dual_faces(mesh: &DualMesh, w: &mut impl Write) -> Result<()> {
    let mut pts = Points::default();
    let faces: Vec<(Vec<usize>, [usize; 3])> = mesh
        .faces()
        .map(|f| {
            let ids = f.polygon.vertices.iter().map(|&v| pts.id(v)).collect();
            (ids, [f.owner, f.neighbor, f.leaf])
        })
        .collect();
    header(w, "dual faces", "POLYDATA")?;
    pts.write(w, mesh.scale())?;
    let size: usize = faces.iter().map(|(ids, _)| ids.len() + 1).sum();
    writeln!(w, "{} {} {size}", if mesh.dim == 3 { "POLYGONS" } else { "LINES" }, faces.len())?;
    for (ids, _) in &faces {
        write!(w, "{}", ids.len())?;
        for i in ids {
            write!(w, " {i}")?;
        }
        writeln!(w)?;
    }
    writeln!(w, "CELL_DATA {}", faces.len())?;
    for (k, name) in ["owner", "neighbor", "leaf"].iter().enumerate() {
        scalars(w, name, "int", faces.iter().map(|(_, d)| d[k].to_string()))?;
    }
    Ok(())
}

/// Primal leaves as voxels (pixels in 2D) carrying one scalar per leaf.
pub fn write_primal_field(grid: &PrimalGrid, name: &str, values: &[f64], w: &mut impl Write) -> Result<()> {
    if values.len() != grid.leaf_count() {
        return Err(Error::Format(format!("{} values for {} leaves", values.len(), grid.leaf_count())));
    }
    let dim = grid.dim();
    let l = grid.max_level();
    let mut pts = Points::default();
    let corners = 1usize << dim;
    let mut cells = Vec::with_capacity(values.len());
    for c in grid.leaves() {
        let (lo, h) = c.box_at(l);
        let ids: Vec<usize> = (0..corners)
            .map(|k| {
                let mut p = [0i64; 3];
                for (i, x) in p.iter_mut().enumerate().take(dim) {
                    *x = (lo[i] + (k >> i & 1) as u64 * h) as i64;
                }
                pts.id(p)
            })
            .collect();
        cells.push(ids);
    }
    header(w, name, "UNSTRUCTURED_GRID")?;
    pts.write(w, (1u64 << l) as f64)?;
    writeln!(w, "CELLS {} {}", cells.len(), cells.len() * (corners + 1))?;
    for ids in &cells {
        write!(w, "{corners}")?;
        for i in ids {
            write!(w, " {i}")?;
        }
        writeln!(w)?;
    }
    writeln!(w, "CELL_TYPES {}", cells.len())?;
    let kind = if dim == 3 { 11 } else { 8 };
    for _ in &cells {
        writeln!(w, "{kind}")?;
    }
    writeln!(w, "CELL_DATA {}", cells.len())?;
    scalars(w, name, "double", values.iter().map(|v| format!("{v:e}")))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dual::{assemble, gauss_check};
    use crate::pattern::table::build_table;

    #[test]
    fn polyhedron_counts_are_consistent() {
        let t = build_table(3).unwrap();
        let g = PrimalGrid::uniform(3, 1).unwrap();
        let m = assemble(&g, &t).unwrap();
        let mut out = Vec::new();
        write_dual_cells(&m, Some(&gauss_check(&m)), &mut out).unwrap();
        let s = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = s.lines().collect();
        let ci = lines.iter().position(|l| l.starts_with("CELLS")).unwrap();
        let h: Vec<usize> = lines[ci].split(' ').skip(1).map(|x| x.parse().unwrap()).collect();
        assert_eq!(h[0], 27);
        let body = &lines[ci + 1..ci + 1 + h[0]];
        let total: usize = body.iter().map(|l| l.split(' ').count()).sum();
        assert_eq!(total, h[1]);
        for l in body {
            let n: Vec<usize> = l.split(' ').map(|x| x.parse().unwrap()).collect();
            assert_eq!(n[0], n.len() - 1);
        }
        // the center cell collects three quarter faces from each of its eight leaves
        let center = m.cell_of([1, 1, 1]).unwrap();
        assert_eq!(body[center].split(' ').nth(1), Some("24"));
        assert!(s.contains("SCALARS gauss_residual double 1"));
    }

    #[test]
    fn primal_field_and_faces() {
        let g = PrimalGrid::uniform(2, 2).unwrap();
        let mut out = Vec::new();
        write_primal_field(&g, "u", &[0.5; 16], &mut out).unwrap();
        let s = String::from_utf8(out).unwrap();
        assert!(s.contains("POINTS 25 double"));
        assert!(s.contains("CELLS 16 80"));
        assert!(write_primal_field(&g, "u", &[0.5; 3], &mut Vec::new()).is_err());
        let t = build_table(2).unwrap();
        let m = assemble(&g, &t).unwrap();
        let mut out = Vec::new();
        write_dual_faces(&m, &mut out).unwrap();
        let s = String::from_utf8(out).unwrap();
        assert!(s.contains(&format!("LINES {} ", m.face_count())));
        assert!(write_dual_cells(&m, None, &mut Vec::new()).is_err());
    }
}
