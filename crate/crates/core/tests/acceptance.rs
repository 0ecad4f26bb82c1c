//! Acceptance criteria 1–9, one PASS/FAIL line each. Runs without the libtest
//! harness so the summary is always printed.

mod common;

use common::*;
use measchrod::carleman::{
    calibrate_c_tilde, carleman_check, constants, exterior_h0, exterior_scan, resolvent_bound_check, Discretization,
    Sign,
};
use measchrod::cli::BumpSum;
use measchrod::fem::{DiscreteOperator, H1Function};
use measchrod::measure::SignedMeasure;
use measchrod::par::ExecMode;
use measchrod::scattering::{find_resonances, green_kernel, strip_scan, wronskian, Rect};
use measchrod::wave::{bump, evolve, led_experiment, LedOptions, WaveSetup};
use num_complex::Complex64 as C;
use proptest::test_runner::{Config, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

type Outcome = Result<String, String>;
type Criterion = (u32, &'static str, fn() -> Outcome);

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

// 1 -------------------------------------------------------------------------

/// `u(x) = ∫ G(x, y) f(y) dy` at `xs` by Gauss–Legendre in `y`, with panels
/// split at the kernel kinks (diagonal, atoms, density breakpoints).
fn green_solution(
    m: &SignedMeasure,
    lambda: C,
    f: impl Fn(f64) -> f64,
    supp: (f64, f64),
    xs: &[f64],
) -> Result<Vec<C>, String> {
    let mut cuts: Vec<f64> = xs.to_vec();
    cuts.extend(m.atoms().iter().map(|a| a.position));
    cuts.extend_from_slice(m.density().breakpoints());
    let quad = nodes_and_weights(supp.0, supp.1, &cuts, 0.05, 8);
    let mut pts = xs.to_vec();
    pts.extend(quad.iter().map(|q| q.0));
    let g = green_kernel(m, lambda, &pts).map_err(err)?;
    Ok((0..xs.len())
        .map(|i| {
            quad.iter()
                .enumerate()
                .map(|(j, &(y, w))| g.get(i, xs.len() + j) * (w * f(y)))
                .sum()
        })
        .collect())
}

fn criterion_1() -> Outcome {
    let lambda = C::new(1.0, 0.5);
    let f = bump(0.1, 1.2, 1.0);
    let supp = (0.1 - 1.2, 0.1 + 1.2);
    let xs: Vec<f64> = (0..=20).map(|i| -2.0 + 0.2 * i as f64).collect();
    let mut details = Vec::new();
    let mut ok = true;
    for (name, m) in [
        ("zero", SignedMeasure::zero()),
        ("2δ₀", repulsive_delta()),
        ("-2δ₀+hat", attractive_top_hat()),
        ("cantor6", cantor6()),
    ] {
        let exact = green_solution(&m, lambda, f, supp, &xs)?;
        let mut errs = Vec::new();
        for res in [0.04, 0.02, 0.01] {
            let grid = DiscreteOperator::grid_for(&m, m.radius() + 40.0, res, &xs).map_err(err)?;
            let op = DiscreteOperator::assemble(&m, 1.0, grid.clone()).map_err(err)?;
            let u = op
                .apply_resolvent(lambda * lambda, &H1Function::from_real_fn(&grid, f))
                .map_err(err)?;
            let e = xs
                .iter()
                .zip(&exact)
                .map(|(&x, v)| (u.values[grid.node_index(x).unwrap()] - v).norm())
                .fold(0.0, f64::max);
            errs.push(e);
        }
        let orders = [(errs[0] / errs[1]).log2(), (errs[1] / errs[2]).log2()];
        let pass = orders.iter().all(|&p| p >= 1.8) && errs[2] < 1e-3;
        ok &= pass;
        details.push(format!(
            "{name}: err {:.1e} order {:.2}/{:.2}",
            errs[2], orders[0], orders[1]
        ));
    }
    ensure(ok, details.join("; "))
}

// 2 -------------------------------------------------------------------------

fn criterion_2() -> Outcome {
    let m = SignedMeasure::delta(-2.0);
    let grid = DiscreteOperator::grid_for(&m, 20.0, 0.01, &[]).map_err(err)?;
    let ev = DiscreteOperator::assemble(&m, 1.0, grid)
        .map_err(err)?
        .eigenvalues_below(0.0);
    let bound_ok = ev.len() == 1 && (ev[0] + 1.0).abs() < 1e-3;
    let i = C::new(0.0, 1.0);
    let up = find_resonances(&m, Rect::new((-0.5, 0.5), (0.5, 1.5))).map_err(err)?;
    let w_i = wronskian(&m, i).map_err(err)?.norm();
    let zero_ok = up.len() == 1 && (up[0].lambda - i).norm() < 1e-6 && w_i < 1e-6;
    let down = find_resonances(&repulsive_delta(), Rect::new((-0.5, 0.5), (-1.5, -0.5))).map_err(err)?;
    let res_ok = down.len() == 1 && (down[0].lambda + i).norm() < 1e-6;
    ensure(
        bound_ok && zero_ok && res_ok,
        format!(
            "FEM {:?}, zero {:?} |W(i)| {w_i:.1e}, resonance {:?}",
            ev,
            up.iter().map(|r| r.lambda).collect::<Vec<_>>(),
            down.iter().map(|r| r.lambda).collect::<Vec<_>>()
        ),
    )
}

// 3, 4 ----------------------------------------------------------------------

struct Tuple {
    name: &'static str,
    m: SignedMeasure,
    energy: f64,
    eps: f64,
    h: f64,
    delta: f64,
    sign: Sign,
    f: BumpSum,
}

fn suite_potentials() -> Vec<(&'static str, SignedMeasure)> {
    vec![
        ("2δ₀", repulsive_delta()),
        ("-2δ₀+hat", attractive_top_hat()),
        ("2δ₀+2δ₁", double_delta()),
        ("cantor6", cantor6()),
    ]
}

fn standard_suite() -> Vec<Tuple> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut out = Vec::new();
    for (name, m) in suite_potentials() {
        for _ in 0..25 {
            out.push(Tuple {
                name,
                energy: rng.random_range(0.25..4.0),
                eps: 10f64.powf(rng.random_range(-3.0..0.0)),
                h: rng.random_range(0.2..1.0),
                delta: rng.random_range(0.25..2.0),
                sign: if rng.random_bool(0.5) { Sign::Plus } else { Sign::Minus },
                f: BumpSum::random(&mut rng, m.radius() + 2.0),
                m: m.clone(),
            });
        }
    }
    out
}

fn criterion_3() -> Outcome {
    let suite = standard_suite();
    let disc = Discretization::default();
    let reports = measchrod::par::map(ExecMode::Parallel, &suite, |t| {
        carleman_check(&t.m, t.energy, t.eps, t.h, t.delta, t.sign, |x| t.f.eval(x), &disc)
    });
    let mut fails = Vec::new();
    let mut worst = 0.0f64;
    for (t, r) in suite.iter().zip(reports) {
        let r = r.map_err(err)?;
        worst = worst.max(r.ratio / r.tolerance());
        if r.skipped.is_some() || !r.passed() {
            fails.push(format!(
                "{} E={:.3} h={:.3} ratio {:.3e}",
                t.name, t.energy, t.h, r.ratio
            ));
        }
    }
    ensure(
        fails.is_empty(),
        format!(
            "{} tuples, max ratio/tol {worst:.3e}, failures {:?}",
            suite.len(),
            fails
        ),
    )
}

fn criterion_4() -> Outcome {
    let suite = standard_suite();
    let disc = Discretization::default();
    let reports = measchrod::par::map(ExecMode::Parallel, &suite, |t| {
        resolvent_bound_check(&t.m, t.energy, t.eps, t.h, t.delta, t.sign, &disc)
    });
    let mut fails = 0;
    let mut worst = 0.0f64;
    for r in reports {
        let r = r.map_err(err)?;
        worst = worst.max(r.ratio);
        if r.skipped.is_some() || !r.passed() {
            fails += 1;
        }
    }
    let m = repulsive_delta();
    let tv = m.total_variation();
    let cal = calibrate_c_tilde(1.0, 1.0, 5.0).map_err(err)?;
    let hs = [1.0, 0.5, 0.25, 0.125, 0.0625];
    let mut envelope_ok = true;
    let mut margins = Vec::new();
    for &h in &hs {
        let r = resolvent_bound_check(&m, 1.0, 0.1, h, 1.0, Sign::Plus, &disc).map_err(err)?;
        let k = constants(tv, 1.0, h, 1.0).map_err(err)?;
        let env = cal.ln_envelope(tv, h);
        envelope_ok &= r.measured_norm.ln() <= env && k.ln_resolvent_bound() <= env;
        margins.push(env - r.measured_norm.ln());
    }
    ensure(
        fails == 0 && envelope_ok,
        format!(
            "{} tuples, max ratio {worst:.3e}, {fails} failures; C̃ = {:.3}, envelope margins (ln) {:?}",
            suite.len(),
            cal.c_tilde,
            margins.iter().map(|m| format!("{m:.1}")).collect::<Vec<_>>()
        ),
    )
}

// 5 -------------------------------------------------------------------------

fn criterion_5() -> Outcome {
    let disc = Discretization::default();
    let mut ok = true;
    let mut details = Vec::new();
    for (name, m) in [("2δ₀", repulsive_delta()), ("cantor6", cantor6())] {
        let h0 = exterior_h0(1.0, m.radius());
        let hs: Vec<f64> = [1.0, 2.0, 4.0, 8.0].iter().map(|k| h0 / k).collect();
        let r = exterior_scan(&m, 1.0, 1e-3, 1.0, &hs, Sign::Plus, &disc, ExecMode::Parallel).map_err(err)?;
        ok &= r.slope_in_band();
        details.push(format!("{name}: h₀ {h0}, slope {:.3}", r.slope));
    }
    ensure(ok, details.join("; "))
}

// 6 -------------------------------------------------------------------------

fn criterion_6() -> Outcome {
    let mut ok = true;
    let mut details = Vec::new();
    for (name, m) in [
        ("2δ₀", repulsive_delta()),
        ("2δ₀+2δ₁", double_delta()),
        ("cantor6", cantor6()),
    ] {
        let r = strip_scan(&m, 0.5, 20.0, 0.3, 0.5).map_err(err)?;
        let pass = r.resonance_free() && r.constant_l2.is_finite() && r.constant_l2 > 0.0;
        ok &= pass;
        details.push(format!(
            "{name}: {} zeros, C = {:.3}",
            r.resonances.len(),
            r.constant_l2
        ));
    }
    ensure(ok, details.join("; "))
}

// 7 -------------------------------------------------------------------------

/// `‖e‖²_{H¹(-r, r)}` of a nodal P1 function, cells inside the window only.
fn h1_window(x: &[f64], e: &[f64], r: f64) -> f64 {
    let mut s = 0.0;
    for i in 0..x.len() - 1 {
        if x[i] >= -r - 1e-12 && x[i + 1] <= r + 1e-12 {
            let d = x[i + 1] - x[i];
            s += d * (e[i] * e[i] + e[i] * e[i + 1] + e[i + 1] * e[i + 1]) / 3.0;
            s += (e[i + 1] - e[i]).powi(2) / d;
        }
    }
    s
}

fn criterion_7() -> Outcome {
    let (w0, w1) = (bump(0.0, 1.0, 1.0), bump(0.2, 0.7, 1.0));
    let (r, r1) = (1.0, 2.0);
    let (rep, _) = led_experiment(&repulsive_delta(), w0, w1, r, r1, 30.0, &LedOptions::default()).map_err(err)?;
    let target = 2.0;
    let rate_ok = (rep.fit.rate - target).abs() <= 0.25 * target && rep.fit.r_squared >= 0.9;

    // tuned pair c = 1: u₀ = 1 left of 0, 1 + x on [0, 1], 2 right of 1
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
    let (ul, ur) = (1.0, 2.0);
    let proj = integrate(-0.5, 0.9, &[0.0], 0.05, |y| u0(y) * w1(y));
    let w_inf = |x: f64| u0(x) * proj / (ul * ul + ur * ur);
    let traj = evolve(&m, w0, w1, r, 80.0, true, &WaveSetup::default(), &[-r1, r1]).map_err(err)?;
    let x = traj.grid.nodes();
    let last = traj.states.last().unwrap();
    let e: Vec<f64> = x.iter().zip(&last.w).map(|(&xi, w)| w - w_inf(xi)).collect();
    let dist = h1_window(x, &e, r1).sqrt();
    let limit_ok = dist <= 1e-2;
    ensure(
        rate_ok && limit_ok,
        format!(
            "2δ₀ rate {:.4} (target {target}, R² {:.4}); tuned pair ‖w(80) - w_∞‖_H¹ = {dist:.2e} (‖w_∞‖ {:.3})",
            rep.fit.rate,
            rep.fit.r_squared,
            h1_window(x, &x.iter().map(|&xi| w_inf(xi)).collect::<Vec<_>>(), r1).sqrt()
        ),
    )
}

// 8 -------------------------------------------------------------------------

fn run_cases<S: proptest::strategy::Strategy>(strategy: S, check: impl Fn(S::Value) -> f64, tol: f64) -> (bool, f64)
where
    S::Value: std::fmt::Debug,
{
    let mut runner = TestRunner::new(Config {
        cases: 20,
        failure_persistence: None,
        ..Config::default()
    });
    let worst = std::cell::Cell::new(0.0f64);
    let ok = runner
        .run(&strategy, |v| {
            let e = check(v);
            worst.set(worst.get().max(e));
            proptest::prop_assert!(e < tol, "error {e}");
            Ok(())
        })
        .is_ok();
    (ok, worst.get())
}

fn criterion_8() -> Outcome {
    use proptest::prelude::*;
    let product = run_cases(
        (
            measure_draw(),
            measure_draw(),
            prop::collection::vec(-1.0..1.0f64, 1..6),
        ),
        |(f, g, phi)| product_rule_error(&f, &g, &phi),
        1e-8,
    );
    let ibp = run_cases(
        (measure_draw(), 0.1..4.0f64, -3.0..3.0f64, -2.0..0.0f64, 0.0..2.0f64),
        |(f, k, s, a, b)| integration_by_parts_error(&f, k, s, a, b),
        1e-8,
    );
    let chain = run_cases(
        prop::collection::vec((0.1..0.8f64, -2.0..2.0f64), 1..6),
        |pieces| {
            let mut breaks = vec![-1.5];
            for (g, _) in &pieces {
                breaks.push(breaks.last().unwrap() + g);
            }
            let slopes: Vec<f64> = pieces.iter().map(|p| p.1).collect();
            chain_rule_error(&breaks, &slopes)
        },
        1e-8,
    );
    let smoothing = run_cases(
        (
            prop::collection::vec((-1.5..1.5f64, prop_oneof![-2.0..-0.05f64, 0.05..2.0f64]), 1..5),
            0.02..1.0f64,
        ),
        |(atoms, eta)| smoothing_mass_error(&atoms, eta),
        1e-8,
    );
    let all = [
        ("product", product),
        ("ibp", ibp),
        ("chain", chain),
        ("smoothing", smoothing),
    ];
    ensure(
        all.iter().all(|(_, (ok, _))| *ok),
        all.iter()
            .map(|(n, (_, w))| format!("{n} max {w:.1e}"))
            .collect::<Vec<_>>()
            .join(", "),
    )
}

// 9 -------------------------------------------------------------------------

fn criterion_9() -> Outcome {
    let disc = Discretization::default();
    let mut worst = 0.0f64;
    let mut fails = Vec::new();
    for (name, m) in named_potentials() {
        for eps in [1e-1, 1e-2, 1e-3, 1e-4] {
            for sign in [Sign::Plus, Sign::Minus] {
                let r = resolvent_bound_check(&m, 1.0, eps, 1.0, 1.0, sign, &disc).map_err(err)?;
                worst = worst.max(r.ratio);
                if r.skipped.is_some() || !r.passed() {
                    fails.push(format!("{name} ε={eps}: {:.3e}", r.ratio));
                }
            }
        }
    }
    ensure(
        fails.is_empty(),
        format!("max norm/(C/E)^½ {worst:.3e}, failures {fails:?}"),
    )
}

// ---------------------------------------------------------------------------

fn main() {
    let criteria: [Criterion; 9] = [
        (1, "Green kernel vs FEM resolvent, O(res²)", criterion_1),
        (2, "closed-form delta spectral data", criterion_2),
        (3, "Carleman suite", criterion_3),
        (4, "resolvent bound suite and envelope", criterion_4),
        (5, "exterior h-scaling", criterion_5),
        (6, "resonance-free strip", criterion_6),
        (7, "wave decay and zero-resonance limit", criterion_7),
        (8, "BV calculus suite", criterion_8),
        (9, "no positive eigenvalues probe", criterion_9),
    ];
    let filter: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let results: Vec<(u32, &str, Outcome, f64)> = std::thread::scope(|s| {
        let handles: Vec<_> = criteria
            .iter()
            .filter(|c| filter.is_empty() || filter.contains(&c.0))
            .map(|&(n, name, f)| {
                s.spawn(move || {
                    let t = Instant::now();
                    let out = std::panic::catch_unwind(f).unwrap_or_else(|p| {
                        Err(p
                            .downcast_ref::<String>()
                            .cloned()
                            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                            .unwrap_or_default())
                    });
                    (n, name, out, t.elapsed().as_secs_f64())
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    let mut failed = 0;
    for (n, name, out, secs) in &results {
        match out {
            Ok(d) => println!("criterion {n} PASS [{name}] {d} ({secs:.1}s)"),
            Err(d) => {
                failed += 1;
                println!("criterion {n} FAIL [{name}] {d} ({secs:.1}s)");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
