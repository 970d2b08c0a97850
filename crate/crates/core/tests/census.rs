use dualgrid_core::dual::grid_stats;
use dualgrid_core::pattern::table::build_table;
use dualgrid_core::{CensusRow, Indicator};

#[test]
fn uniform_grids_have_no_hanging_nodes() {
    let table = build_table(3).unwrap();
    for level in 1..=3 {
        let row = CensusRow::new(level, &grid_stats(&Indicator::Uniform.build(3, level).unwrap(), &table).unwrap());
        assert_eq!(row.a_over_n, 1.0);
        assert_eq!(row.distinct_patterns, 1);
        let n = 1u64 << level;
        assert_eq!(row.dual_cells, (n + 1).pow(3));
    }
}

#[test]
fn paraboloid_level_six_statistics() {
    let table = build_table(3).unwrap();
    let g = Indicator::Paraboloid.build(3, 6).unwrap();
    let row = CensusRow::new(6, &grid_stats(&g, &table).unwrap());
    // thin refined surfaces approach A/N = 5/7 from above
    assert!((0.6..=1.0).contains(&row.a_over_n), "{}", row.a_over_n);
    assert!(row.report.voronoi.total() < row.report.hll.total());
    assert_eq!(row.dual_cells as usize, g.node_set().len());
}

#[test]
fn census_csv_has_matching_columns() {
    let table = build_table(2).unwrap();
    let row = CensusRow::new(3, &grid_stats(&Indicator::Sphere.build(2, 3).unwrap(), &table).unwrap());
    let header = CensusRow::csv_header().split(',').count();
    assert_eq!(row.csv().split(',').count(), header);
}
