use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use dualgrid_core::dual::{assemble, gauss_check, grid_stats, mesh_stats, sampling_oracle_check};
use dualgrid_core::pattern::io::{read_table, write_table};
use dualgrid_core::pattern::oracle::{neighbor_mismatches, random_neighborhood};
use dualgrid_core::pattern::{enumerate_valid_keys, table::build_table};
use dualgrid_core::solver::{cone_grid, run_advection, SchemeConfig};
use dualgrid_core::{flux_count, vtk, CensusRow, FluxInputs, Indicator, PatternTable, PrimalGrid};
use rand::SeedableRng;

#[derive(Parser)]
#[command(name = "dualgrid", version, about = "Staggered L-infinity Voronoi dual grids on graded octrees")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Primal grid construction.
    #[command(subcommand)]
    Grid(GridCmd),
    /// Local pattern tables.
    #[command(subcommand)]
    Patterns(PatternsCmd),
    /// Dual mesh assembly.
    #[command(subcommand)]
    Dual(DualCmd),
    /// Geometric verification of an assembled dual mesh.
    #[command(subcommand)]
    Verify(VerifyCmd),
    /// Advection experiments.
    #[command(subcommand)]
    Advect(AdvectCmd),
    /// Flux-count and pattern statistics.
    #[command(subcommand)]
    Analyze(AnalyzeCmd),
}

#[derive(Subcommand)]
enum GridCmd {
    /// Refine the unit square or cube with a built-in indicator.
    Build {
        #[arg(long, default_value_t = 3)]
        dim: usize,
        #[arg(long, default_value = "paraboloid")]
        indicator: Indicator,
        #[arg(long)]
        level: u8,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum PatternsCmd {
    /// Build the canonical pattern table and write it as JSON.
    Generate {
        #[arg(long, default_value_t = 3)]
        dim: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Read a table back and compare it against a freshly built one.
    Verify {
        #[arg(long)]
        patterns: PathBuf,
    },
}

#[derive(Args)]
struct MeshInput {
    /// Grid JSON written by `grid build`.
    #[arg(long)]
    grid: PathBuf,
    /// Pattern table JSON; built in memory when omitted.
    #[arg(long)]
    patterns: Option<PathBuf>,
}

#[derive(Subcommand)]
enum DualCmd {
    /// Assemble the dual mesh and write it as VTK polyhedra.
    Assemble {
        #[command(flatten)]
        input: MeshInput,
        #[arg(long)]
        out: PathBuf,
        /// Mesh statistics as CSV.
        #[arg(long)]
        stats: Option<PathBuf>,
        /// Dual faces as VTK polydata.
        #[arg(long)]
        faces: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum VerifyCmd {
    /// Divergence-theorem check with `v = x / dim` on every dual cell.
    Gauss {
        #[command(flatten)]
        input: MeshInput,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        /// Per-cell residuals as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample-lattice Voronoi volumes against the assembled cells, plus the
    /// neighbor-independence check on random two-level neighborhoods.
    Oracle {
        #[command(flatten)]
        input: MeshInput,
        #[arg(long, default_value_t = 32)]
        resolution: usize,
        /// Random neighborhoods to check.
        #[arg(long, default_value_t = 20)]
        neighborhoods: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Per-cell relative errors as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum GridKind {
    Uniform,
    Adaptive,
}

#[derive(Subcommand)]
enum AdvectCmd {
    /// Rotating cone with the first-order staggered scheme.
    Cone {
        #[arg(long)]
        level: u8,
        #[arg(long, default_value_t = 0.45)]
        cfl: f64,
        #[arg(long, default_value_t = std::f64::consts::FRAC_PI_4)]
        tend: f64,
        #[arg(long, value_enum, default_value = "uniform")]
        grid: GridKind,
        /// VTK file pattern; `%04d` is replaced by the double-step number.
        #[arg(long)]
        out: PathBuf,
        /// Write a snapshot every this many double steps (the last one is always written).
        #[arg(long, default_value_t = 10)]
        every: usize,
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum AnalyzeCmd {
    /// Flux evaluations of two successive time steps for given grid sizes
    /// or for a grid file.
    Fluxcount {
        #[arg(long, conflicts_with_all = ["primal_cells", "primal_faces", "primal_nodes", "dual_nodes"])]
        grid: Option<PathBuf>,
        #[arg(long)]
        patterns: Option<PathBuf>,
        #[arg(long, requires_all = ["primal_faces", "primal_nodes", "dual_nodes"])]
        primal_cells: Option<u64>,
        #[arg(long)]
        primal_faces: Option<u64>,
        #[arg(long)]
        primal_nodes: Option<u64>,
        #[arg(long)]
        dual_nodes: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Per-level census of indicator-refined grids.
    Census {
        #[arg(long, default_value = "paraboloid")]
        indicator: Indicator,
        #[arg(long, default_value_t = 3)]
        dim: usize,
        /// Comma-separated levels.
        #[arg(long, value_delimiter = ',', default_value = "4,5,6")]
        levels: Vec<u8>,
        #[arg(long)]
        out: PathBuf,
    },
}

/// A check ran to completion and found a violation.
#[derive(Debug)]
struct VerificationFailed(String);

impl std::fmt::Display for VerificationFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "verification failed: {}", self.0)
    }
}

impl std::error::Error for VerificationFailed {}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn load_table(path: Option<&Path>, dim: usize) -> Result<PatternTable> {
    let t = match path {
        Some(p) => read_table(p).with_context(|| format!("reading {}", p.display()))?,
        None => build_table(dim)?,
    };
    if t.dim != dim {
        bail!("pattern table is {}D but the grid is {dim}D", t.dim);
    }
    Ok(t)
}

fn load_input(input: &MeshInput) -> Result<(PrimalGrid, PatternTable)> {
    let grid = PrimalGrid::read_json(&input.grid).with_context(|| format!("reading {}", input.grid.display()))?;
    let table = load_table(input.patterns.as_deref(), grid.dim())?;
    Ok((grid, table))
}

/// Substitutes `%0Nd` (or `%d`) in a file pattern.
fn numbered(pattern: &Path, step: usize) -> PathBuf {
    let s = pattern.to_string_lossy();
    let Some(start) = s.find('%') else {
        return pattern.to_path_buf();
    };
    let Some(len) = s[start..].find('d') else {
        return pattern.to_path_buf();
    };
    let width: usize = s[start + 1..start + len].trim_start_matches('0').parse().unwrap_or(0);
    PathBuf::from(format!("{}{step:0width$}{}", &s[..start], &s[start + len + 1..]))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Grid(GridCmd::Build {
            dim,
            indicator,
            level,
            out,
        }) => {
            let g = indicator.build(dim, level)?;
            log::info!("{} leaves, max level {}", g.leaf_count(), g.max_level());
            g.write_json(&out)?;
            println!("{} leaves", g.leaf_count());
        }
        Command::Patterns(PatternsCmd::Generate { dim, out }) => {
            let t = build_table(dim)?;
            write_table(&t, &out)?;
            println!("{} canonical / {} keys", t.canonical_count(), t.entry_count());
        }
        Command::Patterns(PatternsCmd::Verify { patterns }) => {
            let t = read_table(&patterns).with_context(|| format!("reading {}", patterns.display()))?;
            println!("{} canonical / {} keys", t.canonical_count(), t.entry_count());
            let keys = enumerate_valid_keys(t.dim).len();
            if t.entry_count() != keys {
                return Err(VerificationFailed(format!("{} entries, expected {keys}", t.entry_count())).into());
            }
            if t != build_table(t.dim)? {
                return Err(VerificationFailed("table differs from a fresh build".into()).into());
            }
        }
        Command::Dual(DualCmd::Assemble {
            input,
            out,
            stats,
            faces,
        }) => {
            let (grid, table) = load_input(&input)?;
            let mesh = assemble(&grid, &table)?;
            log::info!("{} dual cells, {} faces", mesh.cells.len(), mesh.face_count());
            if grid.dim() == 3 {
                let mut w = create(&out)?;
                vtk::write_dual_cells(&mesh, Some(&gauss_check(&mesh)), &mut w)?;
                w.flush()?;
            } else {
                let mut w = create(&out)?;
                vtk::write_dual_faces(&mesh, &mut w)?;
                w.flush()?;
            }
            if let Some(p) = faces {
                let mut w = create(&p)?;
                vtk::write_dual_faces(&mesh, &mut w)?;
                w.flush()?;
            }
            if let Some(p) = stats {
                let s = mesh_stats(&grid, &mesh);
                let mut w = create(&p)?;
                writeln!(w, "leaves,primal_faces,primal_nodes,dual_cells,dual_nodes,distinct_patterns,trivial_fraction")?;
                writeln!(
                    w,
                    "{},{},{},{},{},{},{:.6}",
                    s.leaves,
                    s.primal_faces,
                    s.primal_nodes,
                    s.dual_cells,
                    s.dual_nodes,
                    s.distinct_patterns,
                    s.trivial_fraction()
                )?;
                w.flush()?;
            }
            println!("{} dual cells", mesh.cells.len());
        }
        Command::Verify(VerifyCmd::Gauss { input, tol, out }) => {
            let (grid, table) = load_input(&input)?;
            let mesh = assemble(&grid, &table)?;
            let r = gauss_check(&mesh);
            println!("max residual {:.3e}", r.max_relative);
            println!("max closure {:.3e}", r.max_closure);
            if let Some(p) = out {
                let mut w = create(&p)?;
                writeln!(w, "cell,volume,gauss_residual,closure")?;
                for (i, c) in mesh.cells.iter().enumerate() {
                    writeln!(w, "{i},{:e},{:e},{:e}", c.volume, r.residuals[i], r.closure[i])?;
                }
                w.flush()?;
            }
            if r.max_relative > tol || r.max_closure > tol {
                return Err(VerificationFailed(format!("Gauss residual above {tol:e}")).into());
            }
        }
        Command::Verify(VerifyCmd::Oracle {
            input,
            resolution,
            neighborhoods,
            seed,
            out,
        }) => {
            let (grid, table) = load_input(&input)?;
            let mesh = assemble(&grid, &table)?;
            let r = sampling_oracle_check(&grid, &mesh, resolution);
            let bound = 2.0 / resolution as f64;
            println!("max relative volume error {:.4e} (bound {bound:.4e})", r.max_relative);
            if let Some(p) = out {
                let mut w = create(&p)?;
                writeln!(w, "cell,volume,relative_error")?;
                for (i, c) in mesh.cells.iter().enumerate() {
                    writeln!(w, "{i},{:e},{:e}", c.volume, r.relative_errors[i])?;
                }
                w.flush()?;
            }
            let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
            let mut bad = 0;
            for _ in 0..neighborhoods {
                let n = random_neighborhood(grid.dim(), &mut rng)?;
                bad += neighbor_mismatches(n.key, grid.dim(), &n.outside, resolution)?;
            }
            println!("neighborhood mismatches {bad} over {neighborhoods} neighborhoods");
            if r.max_relative > bound || bad > 0 {
                return Err(VerificationFailed("sampled Voronoi cells disagree with the mesh".into()).into());
            }
        }
        Command::Advect(AdvectCmd::Cone {
            level,
            cfl,
            tend,
            grid,
            out,
            every,
            report,
        }) => {
            if !(cfl > 0.0 && cfl <= 1.0) {
                bail!("--cfl must lie in (0, 1]");
            }
            let g = match grid {
                GridKind::Uniform => PrimalGrid::uniform(3, level)?,
                GridKind::Adaptive => cone_grid(level)?,
            };
            let table = build_table(3)?;
            let mesh = assemble(&g, &table)?;
            let config = SchemeConfig { cfl, t_end: tend };
            let mut io_error = None;
            let mut last = None;
            let every = every.max(1);
            let result = run_advection(&g, &mesh, &config, |step, field| {
                last = Some(step);
                if step % every == 0 && io_error.is_none() {
                    let path = numbered(&out, step);
                    let r = create(&path).and_then(|mut w| {
                        vtk::write_primal_field(&g, "u", &field.values, &mut w)?;
                        w.flush()?;
                        Ok(())
                    });
                    io_error = r.err();
                }
            })?;
            if let Some(e) = io_error {
                return Err(e);
            }
            if let Some(step) = last.filter(|s| s % every != 0) {
                let mut w = create(&numbered(&out, step))?;
                vtk::write_primal_field(&g, "u", &result.field.values, &mut w)?;
                w.flush()?;
            }
            let f = result.final_row();
            println!(
                "{} double steps, dt {:.4e}: L1 error {:.4e}, Linf error {:.4e}, mass drift {:.3e}",
                result.double_steps,
                result.dt,
                f.l1_error,
                f.linf_error,
                f.mass - result.rows[0].mass
            );
            if let Some(p) = report {
                let mut w = create(&p)?;
                writeln!(w, "# cone radius normalized by R = 0.25; octant taken relative to the center")?;
                writeln!(w, "step,t,mass,min,max,L1err,Linferr")?;
                for r in &result.rows {
                    writeln!(
                        w,
                        "{},{:e},{:e},{:e},{:e},{:e},{:e}",
                        r.step, r.t, r.mass, r.min, r.max, r.l1_error, r.linf_error
                    )?;
                }
                w.flush()?;
            }
        }
        Command::Analyze(AnalyzeCmd::Fluxcount {
            grid,
            patterns,
            primal_cells,
            primal_faces,
            primal_nodes,
            dual_nodes,
            out,
        }) => {
            let inputs = match (grid, primal_cells) {
                (Some(path), _) => {
                    let g = PrimalGrid::read_json(&path).with_context(|| format!("reading {}", path.display()))?;
                    let t = load_table(patterns.as_deref(), g.dim())?;
                    FluxInputs::from(&grid_stats(&g, &t)?)
                }
                (None, Some(primal_cells)) => FluxInputs {
                    primal_cells,
                    primal_faces: primal_faces.unwrap_or_default(),
                    primal_nodes: primal_nodes.unwrap_or_default(),
                    dual_nodes: dual_nodes.unwrap_or_default(),
                },
                (None, None) => bail!("give either --grid or all of --primal-cells, --primal-faces, --primal-nodes, --dual-nodes"),
            };
            let r = flux_count(inputs);
            let mut w = create(&out)?;
            writeln!(w, "{}", dualgrid_core::FluxCountReport::csv_header())?;
            for row in r.csv_rows() {
                writeln!(w, "{row}")?;
                println!("{row}");
            }
            w.flush()?;
        }
        Command::Analyze(AnalyzeCmd::Census {
            indicator,
            dim,
            levels,
            out,
        }) => {
            let table = build_table(dim)?;
            let mut w = create(&out)?;
            writeln!(w, "{}", CensusRow::csv_header())?;
            for level in levels {
                let g = indicator.build(dim, level)?;
                let row = CensusRow::new(level, &grid_stats(&g, &table)?);
                println!("{}", row.csv());
                writeln!(w, "{}", row.csv())?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(if e.is::<VerificationFailed>() { 1 } else { 2 })
        }
    }
}
