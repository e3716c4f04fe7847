use bgk_imex::imex_bgk::{EpsProfile, KineticField, PositivityMode, SimConfig, Stepper};
use bgk_imex::kinetic::{discrete_maxwellian, ConservedState, Primitive, VelocityGrid};
use bgk_imex::setups::{inconsistent_initial, periodic_mesh};
use bgk_imex::tableau::builtin;
use proptest::prelude::*;

/// Largest per-step change of the totals, relative to the total mass and
/// energy scale.
fn max_step_drift(f0: KineticField, cfg: SimConfig, steps: usize) -> f64 {
    let s = Stepper::new(cfg, &f0).unwrap();
    let mut f = f0;
    let mut worst = 0.0f64;
    for _ in 0..steps {
        let before = f.totals();
        s.step(&mut f, s.dt()).unwrap();
        let after = f.totals();
        let scale = before.rho.abs().max(before.energy.abs());
        for (a, b) in before.to_array().iter().zip(after.to_array()) {
            worst = worst.max((a - b).abs() / scale);
        }
    }
    worst
}

#[test]
fn periodic_runs_conserve_per_step() {
    let grid = VelocityGrid::default();
    let profiles = [
        EpsProfile::Constant(1.0),
        EpsProfile::Constant(1e-2),
        EpsProfile::Constant(1e-6),
        EpsProfile::Constant(1e-10),
        EpsProfile::mixed_regime(),
    ];
    for name in ["scheme_a", "scheme_ars"] {
        for eps in &profiles {
            let f0 = inconsistent_initial(32, &grid).unwrap();
            let cfg = SimConfig::new(builtin(name).unwrap(), eps.clone(), 0.0);
            let d = max_step_drift(f0, cfg, 10);
            assert!(d <= 1e-12, "{name} {eps:?}: {d:e}");
        }
    }
}

fn mixture(n_x: usize, grid: &VelocityGrid, a: Primitive, b: Primitive, wave: f64) -> KineticField {
    let ma = discrete_maxwellian(ConservedState::from(a), grid).unwrap();
    let mb = discrete_maxwellian(ConservedState::from(b), grid).unwrap();
    KineticField::from_fn(periodic_mesh(n_x).unwrap(), grid.clone(), |x, out| {
        let s = 0.5 + 0.5 * (std::f64::consts::PI * wave * x).sin();
        for (o, (p, q)) in out.iter_mut().zip(ma.iter().zip(&mb)) {
            *o = s * p + (1.0 - s) * q;
        }
        Ok(())
    })
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn random_mixtures_conserve(
        rho in (0.2f64..2.0, 0.2f64..2.0),
        u in (-1.5f64..1.5, -1.5f64..1.5),
        t in (0.3f64..2.0, 0.3f64..2.0),
        wave in 1u32..4,
        log_eps in -10.0f64..0.0,
        ars in any::<bool>(),
    ) {
        let grid = VelocityGrid::new(48, 10.0).unwrap();
        let f0 = mixture(16, &grid, Primitive::new(rho.0, u.0, t.0), Primitive::new(rho.1, u.1, t.1), wave as f64);
        let name = if ars { "scheme_ars" } else { "scheme_a" };
        let mut cfg = SimConfig::new(builtin(name).unwrap(), EpsProfile::Constant(10f64.powf(log_eps)), 0.0);
        cfg.positivity = PositivityMode::Strict;
        let d = max_step_drift(f0, cfg, 3);
        prop_assert!(d <= 1e-12, "{}", d);
    }
}
