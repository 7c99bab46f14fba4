//! Run-level properties: interpolant identities, refinement behaviour and
//! the physical response of the charging scenarios.

use hydride_core::driver::{interpolant_eval, refine_study, run, Field, Interp, Trajectory};
use hydride_core::presets;

/// Three-point Gauss–Legendre rule on `[a, b]`, exact for quintics.
fn gauss3(a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
    let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
    let x = (0.6f64).sqrt();
    h * (5.0 / 9.0 * f(c - h * x) + 8.0 / 9.0 * f(c) + 5.0 / 9.0 * f(c + h * x))
}

fn lumped_sq(tr: &Trajectory, f: &[f64]) -> f64 {
    tr.mesh.lumped_mass().iter().zip(f).map(|(m, v)| m * v * v).sum()
}

fn short_desk(steps: usize) -> Trajectory {
    let mut c = presets::desk_default();
    c.resolution = vec![20];
    c.t_final = steps as f64 * c.tau;
    run(&c).unwrap()
}

#[test]
fn affine_and_backward_interpolants_differ_by_tau_over_sqrt3_times_rate() {
    // a hydrogen mode drives the phase past the activation threshold at once
    let mut c = presets::desk_default();
    c.resolution = vec![20];
    c.t_final = 12.0 * c.tau;
    c.initial.chi = hydride_core::driver::Ramp { value: 0.5, cos_x: 0.2, ..Default::default() };
    let tr = run(&c).unwrap();
    let tau = tr.tau;
    for field in [Field::Phase, Field::Hydrogen, Field::Enthalpy, Field::Displacement] {
        let (mut gap, mut rate) = (0.0, 0.0);
        for k in 1..=tr.num_steps() {
            let (a, b) = ((k - 1) as f64 * tau, k as f64 * tau);
            gap += gauss3(a, b, |t| {
                let x = interpolant_eval(&tr, field, Interp::Affine, t).unwrap();
                let y = interpolant_eval(&tr, field, Interp::Backward, t).unwrap();
                let d: Vec<f64> = x.iter().zip(&y).map(|(p, q)| p - q).collect();
                lumped_sq(&tr, &d)
            });
            let pick = |s: &hydride_core::state::State| match field {
                Field::Phase => s.m.clone(),
                Field::Hydrogen => s.chi.clone(),
                Field::Enthalpy => s.w.clone(),
                _ => s.u.clone(),
            };
            let d: Vec<f64> = pick(&tr.states[k]).iter().zip(pick(&tr.states[k - 1]).iter()).map(|(p, q)| (p - q) / tau).collect();
            rate += tau * lumped_sq(&tr, &d);
        }
        let (lhs, rhs) = (gap.sqrt(), tau / 3f64.sqrt() * rate.sqrt());
        assert!(rhs > 0.0, "{field:?} does not move");
        assert!((lhs - rhs).abs() <= 1e-10 * rhs.max(1.0), "{field:?}: {lhs:e} vs {rhs:e}");
    }
}

#[test]
fn forward_and_backward_interpolants_are_shifted_levels() {
    let tr = short_desk(4);
    let tau = tr.tau;
    for k in 1..=4 {
        let t = (k as f64 - 0.3) * tau;
        assert_eq!(interpolant_eval(&tr, Field::Hydrogen, Interp::Forward, t).unwrap(), tr.states[k - 1].chi);
        assert_eq!(interpolant_eval(&tr, Field::Hydrogen, Interp::Backward, t).unwrap(), tr.states[k].chi);
    }
    assert!(interpolant_eval(&tr, Field::Hydrogen, Interp::Affine, -tau).is_err());
}

#[test]
fn velocity_interpolant_slope_is_the_second_difference() {
    let tr = short_desk(6);
    let tau = tr.tau;
    for k in 2..=tr.num_steps() {
        let (a, b) = ((k as f64 - 0.75) * tau, (k as f64 - 0.25) * tau);
        let va = interpolant_eval(&tr, Field::Velocity, Interp::VelocityAffine, a).unwrap();
        let vb = interpolant_eval(&tr, Field::Velocity, Interp::VelocityAffine, b).unwrap();
        let (u0, u1, u2) = (&tr.states[k - 2].u, &tr.states[k - 1].u, &tr.states[k].u);
        for i in 0..va.len() {
            let slope = (vb[i] - va[i]) / (b - a);
            let second = (u2[i] - 2.0 * u1[i] + u0[i]) / (tau * tau);
            assert!((slope - second).abs() <= 1e-8 * second.abs().max(1.0), "step {k} node {i}: {slope} vs {second}");
        }
    }
}

#[test]
fn state_count_and_uniform_timestamps() {
    let tr = short_desk(7);
    assert_eq!(tr.states.len(), 8);
    for (k, s) in tr.states.iter().enumerate() {
        assert!((s.t - k as f64 * tr.tau).abs() < 1e-15);
    }
    assert_eq!(tr.ledger.rows.len(), 8);
}

#[test]
fn refinement_differences_shrink_by_more_than_1_2() {
    let r = refine_study(&presets::desk_default(), 3).unwrap();
    for (name, q) in hydride_core::driver::RefineReport::FIELDS.iter().zip(r.ratios()) {
        assert!(q.iter().all(|&x| x > 1.2), "{name}: ratios {q:?}");
    }
    assert!(r.hydrogen_defects.iter().all(|d| d.abs() <= 1e-12));
    assert!(r.slack_nu05.iter().all(|s| *s >= -1e-9));
}

#[test]
fn refinement_of_a_stationary_state_reports_zero_differences() {
    let r = refine_study(&presets::equilibrium(), 2).unwrap();
    for d in &r.diffs {
        assert!(d.iter().all(|&x| x <= 1e-10), "{d:?}");
    }
}

#[test]
fn refinement_is_independent_of_scheduling() {
    let mut c = presets::desk_default();
    c.resolution = vec![16];
    c.t_final = 0.01;
    let a = refine_study(&c, 3).unwrap();
    let b = refine_study(&c, 3).unwrap();
    assert_eq!(a, b);
}

#[test]
fn charging_raises_the_phase_toward_the_swelling_curve() {
    let tr = run(&presets::desk_default()).unwrap();
    let mat = &tr.material;
    let (first, last) = (&tr.states[0], tr.states.last().unwrap());
    // node 0 is the charged end
    assert!(last.chi[0] > first.chi[0]);
    assert!(last.m[0] > first.m[0]);
    assert!(last.m[0] <= mat.swelling_curve(last.chi[0]) + 1e-12);
    // the far end is still untouched
    let n = last.m.len() - 1;
    assert!((last.m[n] - first.m[n]).abs() < 1e-12);
    let supplied: f64 = tr.influx().iter().sum();
    assert!((tr.ledger.hydrogen_defect(&tr.influx())).abs() <= 1e-12);
    assert!((supplied - 0.5 * tr.t_final()).abs() < 1e-14);
}

#[test]
fn plate_run_keeps_every_invariant() {
    let tr = run(&presets::charging_2d()).unwrap();
    let min_chi = tr.ledger.rows.iter().map(|r| r.min_chi).fold(f64::INFINITY, f64::min);
    let min_w = tr.ledger.rows.iter().map(|r| r.min_w).fold(f64::INFINITY, f64::min);
    assert!(min_chi >= -1e-12 && min_w >= -1e-12);
    assert!(tr.ledger.slack_nu05().iter().all(|&s| s >= -1e-9));
    assert!(tr.ledger.hydrogen_defect(&tr.influx()).abs() <= 1e-12);
    assert!(tr.states.iter().all(|s| s.m.iter().all(|&m| tr.material.in_phase_box(m))));
}

#[test]
fn equilibrium_stays_put() {
    let tr = run(&presets::equilibrium()).unwrap();
    let s0 = &tr.states[0];
    for s in &tr.states {
        for (a, b) in [(&s.u, &s0.u), (&s.m, &s0.m), (&s.chi, &s0.chi), (&s.w, &s0.w)] {
            assert!(a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-10));
        }
    }
}
