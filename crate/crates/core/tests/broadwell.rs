use bgk_imex::broadwell::{
    broadwell_collision, broadwell_entropy, broadwell_imex_step, broadwell_imex_step_with, broadwell_kinetic_rhs,
    broadwell_positivity_dt, broadwell_relax, equilibrium_z, from_moments, BroadwellField, Triple,
};
use bgk_imex::setups::periodic_mesh;
use bgk_imex::space_fv::SpatialScheme;
use bgk_imex::tableau::{builtin, TableauPair};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Damped fixed-point iteration on `f = g + b Q(f)` over the full triple.
/// The `z` map has slope `-(1 + b rho)`, so this damping halves the error
/// each sweep.
fn relax_by_iteration(g: Triple, b: f64) -> Triple {
    let rho = g[0] + 2.0 * g[1] + g[2];
    let omega = 1.0 / (2.0 * (1.0 + b * rho));
    let mut f = g;
    for _ in 0..400 {
        let q = broadwell_collision(f);
        let next: Triple = std::array::from_fn(|c| f[c] + omega * (g[c] + b * q[c] - f[c]));
        let change = (0..3).map(|c| (next[c] - f[c]).abs()).fold(0.0, f64::max);
        f = next;
        if change <= 1e-17 * rho.max(1.0) {
            break;
        }
    }
    f
}

#[test]
fn closed_form_relaxation_matches_iteration() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let scale = 10f64.powf(rng.gen_range(-3.0..1.0));
        let g: Triple = std::array::from_fn(|_| if rng.gen_bool(0.1) { 0.0 } else { scale * rng.gen::<f64>() });
        let b = 10f64.powf(rng.gen_range(-6.0..6.0));
        let closed = broadwell_relax(g, b).unwrap();
        let iterated = relax_by_iteration(g, b);
        let size = g.iter().copied().fold(0.0, f64::max).max(1e-300);
        for c in 0..3 {
            worst = worst.max((closed[c] - iterated[c]).abs() / size.max(1.0));
        }
    }
    assert!(worst <= 1e-10, "{worst:e}");
}

fn smooth_field(n_x: usize) -> BroadwellField {
    let mesh = periodic_mesh(n_x).unwrap();
    let triples: Vec<Triple> = (0..n_x)
        .map(|j| {
            let rho = 1.0 + 0.2 * (std::f64::consts::PI * mesh.center(j)).sin();
            from_moments(rho, 0.3 * rho, 0.75 * rho)
        })
        .collect();
    BroadwellField::from_triples(&triples, mesh).unwrap()
}

fn closure_residual(f: &BroadwellField) -> f64 {
    f.moments()
        .iter()
        .map(|&[rho, m, z]| (z - equilibrium_z(rho, m)).abs())
        .fold(0.0, f64::max)
}

#[test]
fn stiff_step_reaches_the_closure() {
    for name in ["scheme_a", "scheme_ars"] {
        let t = builtin(name).unwrap();
        let f = smooth_field(40);
        let dt = broadwell_positivity_dt(&t, f.mesh()).unwrap();
        let (g, _) = broadwell_imex_step(&f, &t, dt, 1e-10).unwrap();
        assert!(closure_residual(&f) > 0.1);
        let r = closure_residual(&g);
        assert!(r <= 1e-6, "{name}: {r:e}");
    }
}

/// Moments after an explicit RK step of the limit system with the explicit
/// tableau; a GSA scheme takes its last stage as the update.
fn limit_rk_step(t: &TableauPair, rho_m: &[[f64; 2]], dt: f64, f: &BroadwellField) -> Vec<[f64; 2]> {
    let nu = t.nu();
    let mut rates: Vec<Vec<[f64; 2]>> = Vec::new();
    let combine = |coef: &dyn Fn(usize) -> f64, rates: &[Vec<[f64; 2]>]| -> Vec<[f64; 2]> {
        let mut out = rho_m.to_vec();
        for (j, r) in rates.iter().enumerate() {
            for (o, x) in out.iter_mut().zip(r) {
                o[0] += dt * coef(j) * x[0];
                o[1] += dt * coef(j) * x[1];
            }
        }
        out
    };
    for i in 0..nu {
        let stage = combine(&|j| t.at(i, j), &rates);
        if i + 1 == nu && t.is_gsa() {
            return stage;
        }
        rates.push(broadwell_kinetic_rhs(&stage, f.mesh()).unwrap());
    }
    combine(&|j| t.w_explicit()[j], &rates)
}

#[test]
fn stiff_moment_updates_follow_the_limit_scheme() {
    for name in ["scheme_a", "scheme_ars", "imex_euler"] {
        let t = builtin(name).unwrap();
        let f0 = smooth_field(40);
        let dt = broadwell_positivity_dt(&t, f0.mesh()).unwrap();
        let (mut f, _) = broadwell_imex_step(&f0, &t, dt, 1e-10).unwrap();
        for _ in 0..3 {
            let rho_m: Vec<[f64; 2]> = f.moments().iter().map(|m| [m[0], m[1]]).collect();
            let expected = limit_rk_step(&t, &rho_m, dt, &f);
            f = broadwell_imex_step(&f, &t, dt, 1e-10).unwrap().0;
            let got = f.moments();
            let mut worst = 0.0f64;
            for (g, e) in got.iter().zip(&expected) {
                worst = worst.max((g[0] - e[0]).abs()).max((g[1] - e[1]).abs());
            }
            assert!(worst <= 1e-8, "{name}: {worst:e}");
        }
    }
}

#[test]
fn periodic_steps_conserve_mass_and_momentum() {
    for name in ["scheme_a", "scheme_ars"] {
        for eps in [1.0, 1e-3, 1e-8] {
            let t = builtin(name).unwrap();
            let mut f = smooth_field(32);
            let dt = broadwell_positivity_dt(&t, f.mesh()).unwrap();
            for _ in 0..20 {
                let before = f.totals();
                f = broadwell_imex_step(&f, &t, dt, eps).unwrap().0;
                let after = f.totals();
                for c in 0..2 {
                    assert!((before[c] - after[c]).abs() <= 1e-12 * before[0], "{name} {eps}");
                }
            }
        }
    }
}

#[test]
fn upwind_steps_do_not_increase_entropy() {
    for name in ["scheme_a", "scheme_ars"] {
        for eps in [1.0, 1e-2, 1e-8] {
            let t = builtin(name).unwrap();
            let mut f = smooth_field(40);
            // the upwind positivity step is c_sch dx
            let dt = 12.0 * broadwell_positivity_dt(&t, f.mesh()).unwrap();
            let mut prev = broadwell_entropy(&f).unwrap();
            for n in 0..100 {
                f = broadwell_imex_step_with(&f, &t, dt, eps, SpatialScheme::Upwind1).unwrap().0;
                let s = broadwell_entropy(&f).unwrap();
                assert!(s <= prev + 1e-12, "{name} {eps} step {n}: {prev} -> {s}");
                prev = s;
            }
        }
    }
}

fn rough_field(seed: u64, n_x: usize) -> BroadwellField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let triples: Vec<Triple> = (0..n_x)
        .map(|_| std::array::from_fn(|_| if rng.gen_bool(0.3) { 0.0 } else { rng.gen::<f64>().powi(2) }))
        .collect();
    BroadwellField::from_triples(&triples, periodic_mesh(n_x).unwrap()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn random_data_stays_nonnegative(
        seed in any::<u64>(),
        log_eps in -10.0f64..1.0,
        fraction in 0.05f64..1.0,
        ars in any::<bool>(),
    ) {
        let t = builtin(if ars { "scheme_ars" } else { "scheme_a" }).unwrap();
        let mut f = rough_field(seed, 24);
        let dt = fraction * broadwell_positivity_dt(&t, f.mesh()).unwrap();
        for _ in 0..5 {
            // the step rejects negative stage data beyond round-off
            let (g, report) = broadwell_imex_step(&f, &t, dt, 10f64.powf(log_eps)).unwrap();
            prop_assert_eq!(report.negative_stage_count, 0);
            prop_assert!(g.min_value() >= 0.0);
            f = g;
        }
    }
}
