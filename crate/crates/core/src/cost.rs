//! Flux-evaluation accounting for two successive time steps, comparing the
//! diamond-grid scheme, a non-staggered HLL scheme and the staggered
//! Voronoi scheme.

use serde::{Deserialize, Serialize};

use crate::dual::MeshStats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FluxInputs {
    pub primal_cells: u64,
    pub primal_faces: u64,
    pub primal_nodes: u64,
    pub dual_nodes: u64,
}

impl From<&MeshStats> for FluxInputs {
    fn from(s: &MeshStats) -> Self {
        FluxInputs {
            primal_cells: s.leaves as u64,
            primal_faces: s.primal_faces as u64,
            primal_nodes: s.primal_nodes as u64,
            dual_nodes: s.dual_nodes as u64,
        }
    }
}

/// Flux evaluations of one scheme: primal to dual, then dual to primal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepCounts {
    pub primal_to_dual: u64,
    pub dual_to_primal: u64,
}

impl StepCounts {
    pub fn total(&self) -> u64 {
        self.primal_to_dual + self.dual_to_primal
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FluxCountReport {
    pub inputs: FluxInputs,
    pub diamond: StepCounts,
    pub hll: StepCounts,
    pub voronoi: StepCounts,
}

pub fn flux_count(inputs: FluxInputs) -> FluxCountReport {
    let FluxInputs {
        primal_cells,
        primal_faces,
        primal_nodes,
        dual_nodes,
    } = inputs;
    FluxCountReport {
        inputs,
        diamond: StepCounts {
            primal_to_dual: 12 * primal_cells,
            dual_to_primal: primal_faces,
        },
        hll: StepCounts {
            primal_to_dual: 2 * primal_faces,
            dual_to_primal: 2 * primal_faces,
        },
        voronoi: StepCounts {
            primal_to_dual: 3 * dual_nodes,
            dual_to_primal: 3 * primal_nodes,
        },
    }
}

impl FluxCountReport {
    pub fn csv_header() -> &'static str {
        "scheme,primal_to_dual,dual_to_primal,total"
    }

    pub fn csv_rows(&self) -> Vec<String> {
        [("diamond", self.diamond), ("hll", self.hll), ("voronoi", self.voronoi)]
            .iter()
            .map(|(n, c)| format!("{n},{},{},{}", c.primal_to_dual, c.dual_to_primal, c.total()))
            .collect()
    }
}

/// One census line: grid sizes plus single-step flux counts, the HLL
/// count `2 #primal faces` against the staggered count `3 #dual nodes`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CensusRow {
    pub level: u8,
    pub primal_cells: u64,
    pub dual_cells: u64,
    pub fluxes_non_staggered: u64,
    pub fluxes_staggered: u64,
    pub distinct_patterns: u64,
    pub trivial_fraction: f64,
    /// Share of leaves without hanging nodes on their boundary.
    pub a_over_n: f64,
    pub report: FluxCountReport,
}

impl CensusRow {
    pub fn new(level: u8, stats: &MeshStats) -> CensusRow {
        let report = flux_count(FluxInputs::from(stats));
        CensusRow {
            level,
            primal_cells: stats.leaves as u64,
            dual_cells: stats.dual_cells as u64,
            fluxes_non_staggered: report.hll.primal_to_dual,
            fluxes_staggered: report.voronoi.primal_to_dual,
            distinct_patterns: stats.distinct_patterns as u64,
            trivial_fraction: stats.trivial_fraction(),
            a_over_n: stats.trivial_fraction(),
            report,
        }
    }

    /// Staggered over non-staggered evaluations for one step.
    pub fn ratio(&self) -> f64 {
        self.fluxes_staggered as f64 / self.fluxes_non_staggered as f64
    }

    /// Same ratio over both steps of a double step.
    pub fn two_step_ratio(&self) -> f64 {
        self.report.voronoi.total() as f64 / self.report.hll.total() as f64
    }

    pub fn csv_header() -> &'static str {
        "level,primal_cells,dual_cells,fluxes_non_staggered,fluxes_staggered,ratio,two_step_ratio,distinct_patterns,trivial_fraction,a_over_n"
    }

    pub fn csv(&self) -> String {
        format!(
            "{},{},{},{},{},{:.6},{:.6},{},{:.6},{:.6}",
            self.level,
            self.primal_cells,
            self.dual_cells,
            self.fluxes_non_staggered,
            self.fluxes_staggered,
            self.ratio(),
            self.two_step_ratio(),
            self.distinct_patterns,
            self.trivial_fraction,
            self.a_over_n
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_inputs_give_zero() {
        let r = flux_count(FluxInputs::default());
        for c in [r.diamond, r.hll, r.voronoi] {
            assert_eq!(c.total(), 0);
        }
    }

    #[test]
    fn hand_counted_single_cube() {
        let r = flux_count(FluxInputs {
            primal_cells: 1,
            primal_faces: 6,
            primal_nodes: 8,
            dual_nodes: 20,
        });
        assert_eq!(r.diamond.total(), 18);
        assert_eq!(r.hll.total(), 24);
        assert_eq!(r.voronoi.total(), 84);
        assert_eq!(r.csv_rows()[2], "voronoi,60,24,84");
    }
}
