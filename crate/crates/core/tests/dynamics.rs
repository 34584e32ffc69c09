use std::f64::consts::PI;

use sqg_core::checkpoint::Checkpoint;
use sqg_core::dynamics::{evolve, evolve_from, step, DtPolicy, SolverConfig, SolverState};
use sqg_core::operators::{hs_norm_sq, l2_norm, linf_norm};
use sqg_core::{SpectralField, TorusGrid};

fn smooth_random(n: usize, seed: u64) -> SpectralField {
    SpectralField::random_band_limited(TorusGrid::new(n).unwrap(), 4, seed).unwrap()
}

fn inviscid_drift(dt: f64) -> (f64, f64) {
    let g = TorusGrid::new(128).unwrap();
    let cfg = SolverConfig::new(g, 0.0, dt).unwrap();
    let theta0 = smooth_random(128, 11).scale(0.25);
    let (_, end) = evolve(&cfg, &theta0, 1.0, &mut []).unwrap();
    let l2 = (l2_norm(&end.theta) - l2_norm(&theta0)).abs() / l2_norm(&theta0);
    let linf = (linf_norm(&end.theta, 1) - linf_norm(&theta0, 1)).abs() / linf_norm(&theta0, 1);
    (l2, linf)
}

#[test]
fn inviscid_run_conserves_l2_at_second_order() {
    let (coarse, linf_coarse) = inviscid_drift(2e-3);
    let (fine, _) = inviscid_drift(1e-3);
    assert!(fine <= 1e-6, "relative L2 drift {fine:e}");
    assert!(coarse >= 4.0 * fine, "{coarse:e} vs {fine:e}");
    // L∞ is conserved by the continuous flow; the grid max is one-sided so only a loose check
    assert!(linf_coarse < 0.05, "{linf_coarse}");
}

#[test]
fn semigroup_is_bitwise_with_aligned_steps() {
    let g = TorusGrid::new(32).unwrap();
    let f = SpectralField::from_fn(g, |_, x2| 0.1 * (2.0 * PI * x2).cos()).unwrap();
    let cfg = SolverConfig::new(g, 0.5, 1e-2).unwrap().with_forcing(f).unwrap();
    let theta0 = SpectralField::random_band_limited(g, 8, 5).unwrap();
    let (_, direct) = evolve(&cfg, &theta0, 0.5, &mut []).unwrap();
    let (_, mid) = evolve(&cfg, &theta0, 0.2, &mut []).unwrap();
    let (_, split) = evolve_from(&cfg, &mid, 0.3, &mut []).unwrap();
    assert_eq!(direct.step, split.step);
    assert!(direct.theta.coeffs() == split.theta.coeffs());

    // restart through the binary checkpoint format as well
    let restored = Checkpoint::from_bytes(
        &Checkpoint {
            kappa: cfg.kappa,
            state: mid.clone(),
        }
        .to_bytes(),
    )
    .unwrap();
    let (_, resumed) = evolve_from(&cfg, &restored.state, 0.3, &mut []).unwrap();
    assert!(resumed.theta.coeffs() == direct.theta.coeffs());
}

#[test]
fn repeated_runs_are_identical() {
    let g = TorusGrid::new(32).unwrap();
    let cfg = SolverConfig::new(g, 0.2, 5e-3).unwrap();
    let theta0 = SpectralField::random_band_limited(g, 8, 9).unwrap();
    let (a, sa) = evolve(&cfg, &theta0, 0.2, &mut []).unwrap();
    let (b, sb) = evolve(&cfg, &theta0, 0.2, &mut []).unwrap();
    assert_eq!(a, b);
    assert_eq!(sa, sb);
}

fn energy_step_residual(dt: f64) -> f64 {
    let g = TorusGrid::new(64).unwrap();
    let cfg = SolverConfig::new(g, 0.3, dt).unwrap();
    let state = SolverState::new(SpectralField::random_band_limited(g, 6, 2).unwrap());
    let next = step(&cfg, &state, dt).unwrap();
    let before = hs_norm_sq(&state.theta, 0.0);
    let after = hs_norm_sq(&next.theta, 0.0);
    assert!(after <= before);
    let predicted = 2.0 * cfg.kappa * hs_norm_sq(&state.theta, 0.5) * dt;
    ((before - after) - predicted).abs()
}

#[test]
fn discrete_energy_decrement_matches_dissipation_to_second_order() {
    let r1 = energy_step_residual(1e-3);
    let r2 = energy_step_residual(5e-4);
    let ratio = r1 / r2;
    assert!(ratio > 3.5 && ratio < 4.5, "ratio {ratio}");
}

#[test]
fn unforced_energy_never_increases() {
    let g = TorusGrid::new(64).unwrap();
    let mut cfg = SolverConfig::new(g, 0.1, 1e-3).unwrap();
    cfg.dt = DtPolicy::Cfl {
        safety: 0.5,
        dt_max: 5e-3,
    };
    let (rec, _) = evolve(&cfg, &SpectralField::random_band_limited(g, 10, 4).unwrap(), 0.5, &mut []).unwrap();
    assert!(rec.samples.windows(2).all(|w| w[1].l2 <= w[0].l2));
    assert!(rec.samples.windows(2).all(|w| w[1].int_half >= w[0].int_half));
}

#[test]
fn resolution_refinement_converges() {
    let run = |n: usize| {
        let g = TorusGrid::new(n).unwrap();
        let f = SpectralField::from_fn(g, |_, x2| 0.1 * (2.0 * PI * x2).cos()).unwrap();
        let cfg = SolverConfig::new(g, 0.5, 2e-3).unwrap().with_forcing(f).unwrap();
        let theta0 = SpectralField::random_band_limited(g, 3, 1).unwrap();
        evolve(&cfg, &theta0, 1.0, &mut []).unwrap().1.theta
    };
    let restrict = |fine: &SpectralField, n: usize| {
        let g = TorusGrid::new(n).unwrap();
        let half = n as i64 / 2;
        let coeffs = (0..g.len())
            .map(|i| {
                let (k1, k2) = g.mode(i);
                if k1 == -half || k2 == -half {
                    Default::default()
                } else {
                    fine.coeff(k1, k2)
                }
            })
            .collect();
        SpectralField::from_coefficients(g, coeffs).unwrap()
    };
    let (a, b, c) = (run(16), run(32), run(64));
    let e1 = l2_norm(&a.sub(&restrict(&b, 16)).unwrap());
    let e2 = l2_norm(&b.sub(&restrict(&c, 32)).unwrap());
    assert!(e2 < e1, "{e1:e} {e2:e}");
}

#[test]
fn checkpoint_file_round_trip_resumes_bitwise() {
    let dir = tempfile::tempdir().unwrap();
    let g = TorusGrid::new(32).unwrap();
    let cfg = SolverConfig::new(g, 0.3, 5e-3).unwrap();
    let theta0 = SpectralField::random_band_limited(g, 6, 8).unwrap();
    let (_, mid) = evolve(&cfg, &theta0, 0.1, &mut []).unwrap();
    let path = dir.path().join("mid.ckpt");
    Checkpoint {
        kappa: cfg.kappa,
        state: mid.clone(),
    }
    .save(&path)
    .unwrap();
    let loaded = Checkpoint::load(&path).unwrap();
    assert_eq!(loaded.kappa, cfg.kappa);
    assert_eq!((loaded.state.t, loaded.state.step), (mid.t, mid.step));
    assert!(loaded.state.theta.coeffs() == mid.theta.coeffs());
    let (_, a) = evolve_from(&cfg, &loaded.state, 0.1, &mut []).unwrap();
    let (_, b) = evolve(&cfg, &theta0, 0.2, &mut []).unwrap();
    assert!(a.theta.coeffs() == b.theta.coeffs());
}
