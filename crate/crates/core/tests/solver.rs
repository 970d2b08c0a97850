use dualgrid_core::dual::assemble;
use dualgrid_core::pattern::table::build_table;
use dualgrid_core::solver::{
    cell_averages, half_step_dual_to_primal, half_step_primal_to_dual, Field, Operators, Rotating, SchemeConfig, Staggering,
};
use dualgrid_core::PrimalGrid;

/// L1 error of the rotation of a wide Gaussian after a quarter turn.
fn gaussian_error(level: u8) -> f64 {
    let table = build_table(3).unwrap();
    let cfg = SchemeConfig::default();
    let v = Rotating::cone();
    let bump = |x: [f64; 3]| {
        let d = [x[0] - 0.6, x[1] - 0.45, x[2] - 0.5];
        (-(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]) / 0.02).exp()
    };
    let g = PrimalGrid::uniform(3, level).unwrap();
    let m = assemble(&g, &table).unwrap();
    let ops = Operators::new(&m, &v);
    let n = (cfg.t_end / (2.0 * ops.max_timestep(&cfg))).ceil() as usize;
    let dt = cfg.t_end / (2 * n) as f64;
    let mut f = Field {
        on: Staggering::Primal,
        values: cell_averages(&g, bump),
    };
    for _ in 0..n {
        let d = half_step_primal_to_dual(&f, &m, &ops, dt).unwrap();
        f = half_step_dual_to_primal(&d, &m, &ops, dt).unwrap();
    }
    let exact = cell_averages(&g, |x| bump(v.rotate(x, -cfg.t_end)));
    f.values
        .iter()
        .zip(&exact)
        .zip(&m.leaves)
        .map(|((a, b), l)| (a - b).abs() * l.volume(3))
        .sum()
}

#[test]
fn smooth_profile_error_decreases_with_level() {
    let e: Vec<f64> = [4u8, 5, 6].iter().map(|&l| gaussian_error(l)).collect();
    assert!(e[0] > e[1] && e[1] > e[2], "{e:?}");
    assert!(e[1] / e[2] > 1.3, "{e:?}");
}

#[test]
fn rotation_of_dual_field_keeps_mass_away_from_boundary() {
    let table = build_table(3).unwrap();
    let g = PrimalGrid::uniform(3, 4).unwrap();
    let m = assemble(&g, &table).unwrap();
    let ops = Operators::new(&m, &Rotating::cone());
    let dt = ops.max_timestep(&SchemeConfig::default());
    let f = Field {
        on: Staggering::Primal,
        values: cell_averages(&g, |x| {
            let d = [x[0] - 0.6, x[1] - 0.4, x[2] - 0.5];
            if d.iter().all(|v| v.abs() < 0.1) {
                1.0
            } else {
                0.0
            }
        }),
    };
    let mut u = f.clone();
    for _ in 0..4 {
        let d = half_step_primal_to_dual(&u, &m, &ops, dt).unwrap();
        assert!((d.mass(&m) - f.mass(&m)).abs() < 1e-14);
        u = half_step_dual_to_primal(&d, &m, &ops, dt).unwrap();
        assert!((u.mass(&m) - f.mass(&m)).abs() < 1e-14);
    }
}

#[test]
fn wrong_staggering_is_rejected() {
    let table = build_table(2).unwrap();
    let g = PrimalGrid::uniform(2, 2).unwrap();
    let m = assemble(&g, &table).unwrap();
    let ops = Operators::new(&m, &dualgrid_core::solver::Constant([0.1, 0.2, 0.0]));
    let f = Field {
        on: Staggering::Dual,
        values: vec![0.0; m.cells.len()],
    };
    assert!(half_step_primal_to_dual(&f, &m, &ops, 1e-3).is_err());
    assert!(half_step_dual_to_primal(&f, &m, &ops, 1e-3).is_ok());
}
