use bgk_imex::imex_bgk::{EpsProfile, KineticField, PositivityMode, SimConfig, Stepper, TimeStepRule};
use bgk_imex::kinetic::{maxwellian, Primitive, VelocityGrid};
use bgk_imex::setups::{periodic_mesh, sod_initial};
use bgk_imex::tableau::builtin;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Runs `steps` steps in strict mode, which rejects any negative stage
/// value beyond round-off.
fn strict_run(f0: KineticField, mut cfg: SimConfig, steps: usize) -> Result<f64, bgk_imex::Error> {
    cfg.positivity = PositivityMode::Strict;
    let s = Stepper::new(cfg, &f0)?;
    let mut f = f0;
    let mut min = f64::INFINITY;
    for _ in 0..steps {
        let d = s.step(&mut f, s.dt())?;
        assert_eq!(d.negative_stage_count, 0);
        min = min.min(f.min_value());
    }
    Ok(min)
}

#[test]
fn sod_start_stays_nonnegative() {
    let grid = VelocityGrid::default();
    for name in ["scheme_a", "scheme_ars"] {
        for eps in [1e-6, 1e-8] {
            let f0 = sod_initial(80, &grid).unwrap();
            let mut cfg = SimConfig::new(builtin(name).unwrap(), EpsProfile::Constant(eps), 0.0);
            cfg.time_step = TimeStepRule::Cfl { number: 1.0 / 24.0 };
            let min = strict_run(f0, cfg, 60).unwrap();
            assert!(min >= 0.0, "{name} {eps}: {min:e}");
        }
    }
}

/// Cell-wise random Maxwellians with random holes and jitter: jumps,
/// zeros and near-vacuum cells, but moments the grid can still represent.
fn rough_field(seed: u64, n_x: usize, grid: &VelocityGrid) -> KineticField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_v = grid.n_v();
    let mut values = vec![0.0; n_x * n_v];
    for j in 0..n_x {
        let rho = if rng.gen_bool(0.2) { 1e-8 } else { rng.gen_range(0.1..2.0) };
        let p = Primitive::new(rho, rng.gen_range(-1.0..1.0), rng.gen_range(0.5..1.5));
        let m = maxwellian(p, grid).unwrap();
        for k in 0..n_v {
            let hole = rng.gen_bool(0.3) && (grid.nodes()[k] - p.u).abs() > 0.5;
            values[k * n_x + j] = if hole { 0.0 } else { m[k] * rng.gen_range(0.5..1.5) };
        }
    }
    KineticField::new(values, periodic_mesh(n_x).unwrap(), grid.clone()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn rough_data_stays_nonnegative_at_the_positivity_step(
        seed in any::<u64>(),
        log_eps in -10.0f64..1.0,
        fraction in 0.1f64..1.0,
        ars in any::<bool>(),
    ) {
        let grid = VelocityGrid::new(48, 8.0).unwrap();
        let f0 = rough_field(seed, 16, &grid);
        let name = if ars { "scheme_ars" } else { "scheme_a" };
        let mut cfg = SimConfig::new(builtin(name).unwrap(), EpsProfile::Constant(10f64.powf(log_eps)), 0.0);
        cfg.time_step = TimeStepRule::Positivity { fraction };
        let min = strict_run(f0, cfg, 3);
        prop_assert!(min.is_ok(), "{:?}", min);
        prop_assert!(min.unwrap() >= 0.0);
    }
}
