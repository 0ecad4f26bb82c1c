mod common;

use common::*;
use measchrod::measure::SignedMeasure;
use measchrod::wave::{bump, evolve, led_experiment, local_energy_trace, LedOptions, WaveSetup};

#[test]
fn repulsive_delta_energy_decreases_late() {
    let traj = evolve(
        &repulsive_delta(),
        bump(0.0, 1.0, 1.0),
        bump(0.2, 0.7, 1.0),
        1.0,
        12.0,
        true,
        &WaveSetup::default(),
        &[-2.0, 2.0],
    )
    .unwrap();
    let trace = local_energy_trace(&traj, 2.0, None).unwrap();
    let late: Vec<f64> = trace
        .times
        .iter()
        .zip(&trace.energies)
        .filter(|(t, _)| **t >= 6.0)
        .map(|(_, e)| *e)
        .collect();
    assert!(late.len() > 10);
    for w in late.windows(2) {
        assert!(w[1] <= w[0], "{} then {}", w[0], w[1]);
    }
}

#[test]
fn decay_tracks_the_slowest_resonance() {
    let cases = [
        (repulsive_delta(), 20.0),
        (SignedMeasure::atoms_only(&[(-1.0, 2.0), (1.0, 2.0)]).unwrap(), 20.0),
    ];
    for (m, t) in cases {
        let (r, _) = led_experiment(
            &m,
            bump(0.0, 1.0, 1.0),
            bump(0.2, 0.7, 1.0),
            1.0,
            2.0,
            t,
            &LedOptions::default(),
        )
        .unwrap();
        assert!(r.negative_eigenvalues.is_empty() && !r.zero_resonance);
        let slowest = r.slowest_resonance.expect("resonance in the search box");
        let c_over_gap = r.fit.rate / slowest.lambda.im.abs();
        assert!((1.5..=2.5).contains(&c_over_gap), "c/|Im λ| = {c_over_gap}");
        assert!(r.fit.r_squared >= 0.9);
    }
}

#[test]
fn attractive_delta_needs_the_projection() {
    let m = SignedMeasure::delta(-2.0);
    let run = |project| {
        let opts = LedOptions {
            project,
            ..LedOptions::default()
        };
        led_experiment(&m, bump(0.0, 1.0, 1.0), bump(0.2, 0.7, 1.0), 1.0, 2.0, 30.0, &opts)
            .unwrap()
            .0
    };
    let on = run(true);
    assert_eq!(on.negative_eigenvalues.len(), 1);
    assert!((on.negative_eigenvalues[0] + 1.0).abs() < 1e-2);
    assert!(on.decays, "{on:?}");
    let off = run(false);
    assert!(!off.decays);
    assert!(off.fit.rate < 0.0, "{off:?}");
}

#[test]
fn zero_resonance_profile_is_stationary() {
    let m = tuned_pair(1.0);
    let u0 = |x: f64| {
        if x <= 0.0 {
            1.0
        } else if x >= 1.0 {
            2.0
        } else {
            1.0 + x
        }
    };
    let cut = |x: f64| {
        let s = |t: f64| if t <= 0.0 { 0.0 } else { (-1.0 / t).exp() };
        let up = |a: f64, b: f64, x: f64| s(x - a) / (s(x - a) + s(b - x));
        up(-5.0, -3.0, x) * (1.0 - up(3.0, 5.0, x))
    };
    let setup = WaveSetup {
        save_every: 0.25,
        ..WaveSetup::default()
    };
    let traj = evolve(&m, |x| cut(x) * u0(x), |_| 0.0, 5.0, 1.0, false, &setup, &[]).unwrap();
    let x = traj.grid.nodes();
    for s in &traj.states {
        for (xi, w) in x.iter().zip(&s.w) {
            if xi.abs() <= 1.5 {
                assert!((w - u0(*xi)).abs() < 1e-3 * (1.0 + s.t), "t={} x={xi}: {w}", s.t);
            }
        }
    }
}
