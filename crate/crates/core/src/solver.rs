//! First-order staggered central scheme for linear advection
//! `u_t + div(a u) = 0`, alternating between the primal leaves and the dual
//! cells.
//!
//! With piecewise constant data every flux integrand is `(a . n) v` with `v`
//! constant on the face, so the face integrals reduce to fixed coefficients
//! `∫ a . n dA` that are computed once per velocity field.

use std::f64::consts::FRAC_PI_4;

use crate::dual::{cross3, dot3, DualMesh};
use crate::error::{Error, Result};
use crate::grid::PrimalGrid;

pub trait Velocity {
    fn at(&self, x: [f64; 3]) -> [f64; 3];
}

/// Rigid rotation with unit angular speed about the axis through `center`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotating {
    pub center: [f64; 3],
    /// Unit vector.
    pub axis: [f64; 3],
    pub omega: f64,
}

impl Rotating {
    /// The rotating-cone field: center (0.6, 0.3, 0.2), rotation in the
    /// plane spanned by (1, 0, 0) and (0, 1, 0.5).
    pub fn cone() -> Rotating {
        let axis = cross3([1.0, 0.0, 0.0], [0.0, 1.0, 0.5]);
        let l = dot3(axis, axis).sqrt();
        Rotating {
            center: CONE_CENTER,
            axis: axis.map(|x| x / l),
            omega: 1.0,
        }
    }

    /// Rotates `x` about the axis by `angle` (Rodrigues).
    pub fn rotate(&self, x: [f64; 3], angle: f64) -> [f64; 3] {
        let k = self.axis;
        let v = [x[0] - self.center[0], x[1] - self.center[1], x[2] - self.center[2]];
        let (s, c) = angle.sin_cos();
        let kv = cross3(k, v);
        let kd = dot3(k, v);
        let mut r = [0.0; 3];
        for i in 0..3 {
            r[i] = self.center[i] + v[i] * c + kv[i] * s + k[i] * kd * (1.0 - c);
        }
        r
    }
}

impl Velocity for Rotating {
    fn at(&self, x: [f64; 3]) -> [f64; 3] {
        let r = [x[0] - self.center[0], x[1] - self.center[1], x[2] - self.center[2]];
        cross3(self.axis, r).map(|v| v * self.omega)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constant(pub [f64; 3]);

impl Velocity for Constant {
    fn at(&self, _: [f64; 3]) -> [f64; 3] {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeConfig {
    pub cfl: f64,
    pub t_end: f64,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        SchemeConfig {
            cfl: 0.45,
            t_end: FRAC_PI_4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Staggering {
    Primal,
    Dual,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub on: Staggering,
    pub values: Vec<f64>,
}

impl Field {
    pub fn mass(&self, mesh: &DualMesh) -> f64 {
        match self.on {
            Staggering::Primal => self
                .values
                .iter()
                .zip(&mesh.leaves)
                .map(|(v, l)| v * l.volume(mesh.dim))
                .sum(),
            Staggering::Dual => self.values.iter().zip(&mesh.cells).map(|(v, c)| v * c.volume).sum(),
        }
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Flux coefficients of one velocity field on one mesh.
#[derive(Debug, Clone)]
pub struct Operators {
    /// `∫ a . n dA` per dual face, owner to neighbor.
    face_flux: Vec<f64>,
    /// Per trace piece: `∫ a . n dA` (outward of the leaf) on interior
    /// faces, `∫ (a . n)+ dA` on the domain boundary.
    trace_flux: Vec<f64>,
    /// Largest stable step for CFL number 1.
    dt_limit: f64,
}

impl Operators {
    pub fn new(mesh: &DualMesh, velocity: &dyn Velocity) -> Operators {
        let s = mesh.scale();
        let mut a_max: f64 = 0.0;
        let mut flux = |p: &crate::dual::Polygon, positive: bool| -> f64 {
            let n = p.unit_normal();
            let mut acc = 0.0;
            for i in 0..p.vertices.len() {
                let x = p.point(i, s);
                let a = velocity.at(x);
                a_max = a_max.max(dot3(a, a).sqrt());
                let an = dot3(a, n);
                acc += p.weights[i] * if positive { an.max(0.0) } else { an };
            }
            acc
        };
        let face_flux: Vec<f64> = mesh.faces().map(|f| flux(&f.polygon, false)).collect();
        let trace_flux: Vec<f64> = mesh.traces().map(|t| flux(&t.polygon, t.on_boundary)).collect();
        let d_min = mesh.leaves.iter().map(|l| l.d_min()).fold(f64::INFINITY, f64::min);
        let dt_limit = if a_max > 0.0 { 2.0 * d_min / a_max } else { f64::INFINITY };
        Operators {
            face_flux,
            trace_flux,
            dt_limit,
        }
    }

    /// `σ · 2 · d_min / a_max`, or `t_end` when the field is at rest.
    pub fn max_timestep(&self, config: &SchemeConfig) -> f64 {
        if self.dt_limit.is_finite() {
            config.cfl * self.dt_limit
        } else {
            config.t_end
        }
    }

    fn check(&self, dt: f64) -> Result<()> {
        if dt > self.dt_limit * (1.0 + 1e-12) {
            return Err(Error::Cfl {
                dt,
                max: self.dt_limit,
            });
        }
        Ok(())
    }
}

fn expect(field: &Field, on: Staggering) -> Result<()> {
    if field.on != on {
        return Err(Error::Format(format!("field lives on the {:?} grid, expected {on:?}", field.on)));
    }
    Ok(())
}

/// New averages on the dual cells: overlap-weighted primal averages minus
/// the fluxes through the dual faces, each evaluated with the value of the
/// leaf containing the face.
pub fn half_step_primal_to_dual(field: &Field, mesh: &DualMesh, ops: &Operators, dt: f64) -> Result<Field> {
    expect(field, Staggering::Primal)?;
    ops.check(dt)?;
    let mut out = vec![0.0; mesh.cells.len()];
    for (li, leaf) in mesh.leaves.iter().enumerate() {
        let v = field.values[li];
        for &(c, vol) in &leaf.regions {
            out[c] += v * vol;
        }
        let f0 = mesh.first_face(li);
        for (k, p) in leaf.geometry.faces.iter().enumerate() {
            let q = dt * ops.face_flux[f0 + k] * v;
            out[leaf.node_cells[p.a as usize] as usize] -= q;
            out[leaf.node_cells[p.b as usize] as usize] += q;
        }
        if leaf.boundary_faces != 0 {
            let t0 = mesh.first_trace(li);
            for (k, p) in leaf.geometry.traces.iter().enumerate() {
                if leaf.boundary_faces >> p.face & 1 == 1 {
                    out[leaf.node_cells[p.a as usize] as usize] -= dt * ops.trace_flux[t0 + k] * v;
                }
            }
        }
    }
    for (o, c) in out.iter_mut().zip(&mesh.cells) {
        *o /= c.volume;
    }
    Ok(Field {
        on: Staggering::Dual,
        values: out,
    })
}

/// New averages on the primal leaves: overlap-weighted dual averages minus
/// the fluxes through the leaf faces, each trace piece evaluated with the
/// value of the dual cell covering it.
pub fn half_step_dual_to_primal(field: &Field, mesh: &DualMesh, ops: &Operators, dt: f64) -> Result<Field> {
    expect(field, Staggering::Dual)?;
    ops.check(dt)?;
    let mut out = Vec::with_capacity(mesh.leaves.len());
    for (li, leaf) in mesh.leaves.iter().enumerate() {
        let mut acc: f64 = leaf.regions.iter().map(|&(c, vol)| field.values[c] * vol).sum();
        let t0 = mesh.first_trace(li);
        for (k, p) in leaf.geometry.traces.iter().enumerate() {
            acc -= dt * ops.trace_flux[t0 + k] * field.values[leaf.node_cells[p.a as usize] as usize];
        }
        out.push(acc / leaf.volume(mesh.dim));
    }
    Ok(Field {
        on: Staggering::Primal,
        values: out,
    })
}

pub const CONE_CENTER: [f64; 3] = [0.6, 0.3, 0.2];
pub const CONE_RADIUS: f64 = 0.25;

/// Cone profile on the octant of the sphere `|x - c| = R` with `x - c >= 0`
/// componentwise, using the radius normalized by `R`.
pub fn cone_profile(x: [f64; 3]) -> f64 {
    let c = CONE_CENTER;
    let d = [x[0] - c[0], x[1] - c[1], x[2] - c[2]];
    if d.iter().any(|&v| v < 0.0) {
        return 0.0;
    }
    let r2 = dot3(d, d) / (CONE_RADIUS * CONE_RADIUS);
    let q = 4.0 * (1.0 - r2).abs();
    if q < 0.5 {
        1.0 - 2.0 * q * q
    } else if q <= 1.0 {
        2.0 * (q - 1.0) * (q - 1.0)
    } else {
        0.0
    }
}

/// Leaf averages of `f` by 3-point midpoint sampling per axis.
pub fn cell_averages(grid: &PrimalGrid, f: impl Fn([f64; 3]) -> f64) -> Vec<f64> {
    let dim = grid.dim();
    let offs = [1.0 / 6.0, 0.5, 5.0 / 6.0];
    grid.leaves()
        .map(|c| {
            let lo = c.lower_corner();
            let h = c.width();
            let mut s = 0.0;
            let nz = if dim == 3 { 3 } else { 1 };
            for k in 0..nz {
                for j in 0..3 {
                    for i in 0..3 {
                        let z = if dim == 3 { lo[2] + offs[k] * h } else { 0.0 };
                        s += f([lo[0] + offs[i] * h, lo[1] + offs[j] * h, z]);
                    }
                }
            }
            s / (3usize.pow(dim as u32)) as f64
        })
        .collect()
}

/// Grid refined to `level` along the sphere carrying the cone.
pub fn cone_grid(level: u8) -> Result<PrimalGrid> {
    let c = CONE_CENTER;
    PrimalGrid::root(3).refine_by_indicator(
        &|x| dot3(crate::dual::sub3(x, c), crate::dual::sub3(x, c)) < CONE_RADIUS * CONE_RADIUS,
        level,
    )
}

pub fn init_cone(grid: &PrimalGrid) -> Field {
    Field {
        on: Staggering::Primal,
        values: cell_averages(grid, cone_profile),
    }
}

/// Exact cone solution at time `t`: the initial profile rotated back.
pub fn exact_cone(grid: &PrimalGrid, velocity: &Rotating, t: f64) -> Vec<f64> {
    cell_averages(grid, |x| cone_profile(velocity.rotate(x, -velocity.omega * t)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub step: usize,
    pub t: f64,
    pub mass: f64,
    pub min: f64,
    pub max: f64,
    pub l1_error: f64,
    pub linf_error: f64,
}

#[derive(Debug, Clone)]
pub struct AdvectionResult {
    pub field: Field,
    pub dt: f64,
    pub double_steps: usize,
    /// One row per double step, starting with the initial state.
    pub rows: Vec<ReportRow>,
}

impl AdvectionResult {
    pub fn final_row(&self) -> &ReportRow {
        self.rows.last().unwrap()
    }
}

fn row(step: usize, t: f64, field: &Field, exact: &[f64], mesh: &DualMesh) -> ReportRow {
    let mut l1 = 0.0;
    let mut linf: f64 = 0.0;
    for ((v, e), leaf) in field.values.iter().zip(exact).zip(&mesh.leaves) {
        l1 += (v - e).abs() * leaf.volume(mesh.dim);
        linf = linf.max((v - e).abs());
    }
    ReportRow {
        step,
        t,
        mass: field.mass(mesh),
        min: field.min(),
        max: field.max(),
        l1_error: l1,
        linf_error: linf,
    }
}

/// Rotating cone from `t = 0` to `config.t_end` in `m` double steps of
/// `2 Δt`, with `m` the smallest count respecting the CFL bound. The field
/// ends on the primal grid. `on_step` sees the primal field after every
/// double step.
pub fn run_advection(
    grid: &PrimalGrid,
    mesh: &DualMesh,
    config: &SchemeConfig,
    mut on_step: impl FnMut(usize, &Field),
) -> Result<AdvectionResult> {
    let velocity = Rotating::cone();
    let ops = Operators::new(mesh, &velocity);
    let mut field = init_cone(grid);
    let mut rows = vec![row(0, 0.0, &field, &field.values.clone(), mesh)];
    on_step(0, &field);
    if config.t_end <= 0.0 {
        return Ok(AdvectionResult {
            field,
            dt: 0.0,
            double_steps: 0,
            rows,
        });
    }
    let dt_max = ops.max_timestep(config);
    let m = (config.t_end / (2.0 * dt_max)).ceil().max(1.0) as usize;
    let dt = config.t_end / (2 * m) as f64;
    log::info!("rotating cone: {} leaves, {m} double steps of dt = {dt:.3e}", grid.leaf_count());
    for step in 1..=m {
        let dual = half_step_primal_to_dual(&field, mesh, &ops, dt)?;
        field = half_step_dual_to_primal(&dual, mesh, &ops, dt)?;
        let t = 2.0 * dt * step as f64;
        let exact = exact_cone(grid, &velocity, t);
        rows.push(row(step, t, &field, &exact, mesh));
        on_step(step, &field);
    }
    Ok(AdvectionResult {
        field,
        dt,
        double_steps: m,
        rows,
    })
}
