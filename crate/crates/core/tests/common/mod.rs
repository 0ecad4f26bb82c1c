#![allow(dead_code)]

use measchrod::measure::{cantor_approx, Atom, BvFunction, PiecewiseDensity, SignedMeasure};
use measchrod::quad::GaussLegendre;
use proptest::prelude::*;

pub fn repulsive_delta() -> SignedMeasure {
    SignedMeasure::delta(2.0)
}

/// `-2δ₀` plus the indicator of `[-1/2, 1/2]`.
pub fn attractive_top_hat() -> SignedMeasure {
    let density = PiecewiseDensity::constant(-0.5, 0.5, 1.0).unwrap();
    SignedMeasure::new(
        vec![Atom {
            position: 0.0,
            weight: -2.0,
        }],
        density,
        (-1.0, 1.0),
    )
    .unwrap()
}

pub fn double_delta() -> SignedMeasure {
    SignedMeasure::atoms_only(&[(0.0, 2.0), (1.0, 2.0)]).unwrap()
}

pub fn cantor6() -> SignedMeasure {
    cantor_approx(6, 1.0).unwrap()
}

/// `c δ₀ - c/(1+c) δ₁`: a zero resonance equal to 1 on the left and `1 + c`
/// on the right.
pub fn tuned_pair(c: f64) -> SignedMeasure {
    SignedMeasure::atoms_only(&[(0.0, c), (1.0, -c / (1.0 + c))]).unwrap()
}

pub fn named_potentials() -> Vec<(&'static str, SignedMeasure)> {
    vec![
        ("zero", SignedMeasure::zero()),
        ("2δ₀", repulsive_delta()),
        ("-2δ₀+hat", attractive_top_hat()),
        ("2δ₀+2δ₁", double_delta()),
        ("cantor6", cantor6()),
    ]
}

/// Composite Gauss–Legendre over `[a, b]` split at `cuts`, panels no longer
/// than `max_panel`.
pub fn integrate(a: f64, b: f64, cuts: &[f64], max_panel: f64, f: impl Fn(f64) -> f64) -> f64 {
    nodes_and_weights(a, b, cuts, max_panel, 12)
        .into_iter()
        .map(|(x, w)| w * f(x))
        .sum()
}

pub fn nodes_and_weights(a: f64, b: f64, cuts: &[f64], max_panel: f64, order: usize) -> Vec<(f64, f64)> {
    let gl = GaussLegendre::new(order);
    let mut pts: Vec<f64> = std::iter::once(a)
        .chain(cuts.iter().copied().filter(|c| *c > a && *c < b))
        .chain(std::iter::once(b))
        .collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let mut out = Vec::new();
    for w in pts.windows(2) {
        let k = ((w[1] - w[0]) / max_panel).ceil().max(1.0) as usize;
        let len = (w[1] - w[0]) / k as f64;
        for p in 0..k {
            let lo = w[0] + p as f64 * len;
            for (t, wt) in gl.nodes.iter().zip(&gl.weights) {
                out.push((lo + 0.5 * len * (t + 1.0), 0.5 * len * wt));
            }
        }
    }
    out
}

/// Random step-plus-cubic measure on `[-1.5, 1.5]`.
#[derive(Debug, Clone)]
pub struct MeasureDraw {
    pub atoms: Vec<(f64, f64)>,
    pub lo: f64,
    pub len: f64,
    pub coeffs: [f64; 4],
}

impl MeasureDraw {
    pub fn measure(&self) -> SignedMeasure {
        let density = PiecewiseDensity::new(vec![self.lo, self.lo + self.len], vec![self.coeffs]).unwrap();
        let atoms = self
            .atoms
            .iter()
            .map(|&(position, weight)| Atom { position, weight })
            .collect();
        SignedMeasure::new(atoms, density, (-1.5, 1.5)).unwrap()
    }

    pub fn cuts(&self) -> Vec<f64> {
        let mut c: Vec<f64> = self.atoms.iter().map(|a| a.0).collect();
        c.extend([self.lo, self.lo + self.len]);
        c
    }
}

fn nonzero_weight() -> impl Strategy<Value = f64> {
    prop_oneof![-2.0..-0.05f64, 0.05..2.0f64]
}

pub fn measure_draw() -> impl Strategy<Value = MeasureDraw> {
    (
        prop::collection::vec((-1.4..1.4f64, nonzero_weight()), 0..4),
        -1.5..0.0f64,
        0.2..1.5f64,
        prop::array::uniform4(-1.0..1.0f64),
    )
        .prop_map(|(atoms, lo, len, coeffs)| MeasureDraw { atoms, lo, len, coeffs })
}

/// Polynomial `Σ c_k x^k` and its derivative.
pub fn poly(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, ck| acc * x + ck)
}

pub fn poly_deriv(c: &[f64], x: f64) -> f64 {
    c.iter()
        .enumerate()
        .skip(1)
        .rev()
        .fold(0.0, |acc, (k, ck)| acc * x + k as f64 * ck)
}

fn rel(a: f64, b: f64, scale: f64) -> f64 {
    (a - b).abs() / scale.max(1.0)
}

/// `∫_{(a,b]} φ d(fg)` two ways: integration by parts against `(fg)^R`, and
/// `∫ φ f^A dg + ∫ φ g^A df` with the measures integrated piece by piece.
pub fn product_rule_error(f: &MeasureDraw, g: &MeasureDraw, phi: &[f64]) -> f64 {
    let (a, b) = (-2.0, 2.0);
    let fb = BvFunction::cdf_of(f.measure());
    let gb = BvFunction::cdf_of(g.measure());
    let mut cuts = f.cuts();
    cuts.extend(g.cuts());
    let fg = |x: f64| fb.right(x) * gb.right(x);
    let lhs =
        fg(b) * poly(phi, b) - fg(a) * poly(phi, a) - integrate(a, b, &cuts, 0.25, |x| poly_deriv(phi, x) * fg(x));
    let mut pts = cuts.clone();
    pts.extend([a, b]);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let mut rhs = 0.0;
    let mut scale = 0.0;
    for w in pts.windows(2) {
        let t1 = gb
            .derivative
            .integrate_on(w[0], w[1], |x| poly(phi, x) * fb.eval(x).average);
        let t2 = fb
            .derivative
            .integrate_on(w[0], w[1], |x| poly(phi, x) * gb.eval(x).average);
        rhs += t1 + t2;
        scale += t1.abs() + t2.abs();
    }
    rel(lhs, rhs, scale)
}

/// `∫_{(a,b]} φ df + ∫_a^b φ' f dx - (f^R(b)φ(b) - f^R(a)φ(a))` for `φ = sin(kx + s)`.
pub fn integration_by_parts_error(f: &MeasureDraw, k: f64, s: f64, a: f64, b: f64) -> f64 {
    let fb = BvFunction::cdf_of(f.measure());
    let phi = |x: f64| (k * x + s).sin();
    let dphi = |x: f64| k * (k * x + s).cos();
    let t1 = fb.derivative.integrate_on(a, b, phi);
    let t2 = integrate(a, b, &f.cuts(), 0.1, |x| dphi(x) * fb.right(x));
    let bdry = fb.right(b) * phi(b) - fb.right(a) * phi(a);
    rel(t1 + t2, bdry, t1.abs() + t2.abs() + bdry.abs())
}

/// Continuous piecewise-linear `f` (cdf of a piecewise-constant density):
/// `e^{f(x)} - e^{f(a)}` against `∫_{(a,x]} e^f df` at several `x`.
pub fn chain_rule_error(breaks: &[f64], slopes: &[f64]) -> f64 {
    let coeffs = slopes.iter().map(|&s| [s, 0.0, 0.0, 0.0]).collect();
    let density = PiecewiseDensity::new(breaks.to_vec(), coeffs).unwrap();
    let (lo, hi) = (breaks[0], *breaks.last().unwrap());
    let m = SignedMeasure::new(vec![], density, (lo, hi)).unwrap();
    let f = BvFunction::cdf_of(m);
    let a = lo - 0.5;
    let mut worst = 0.0f64;
    for i in 0..=16 {
        let x = lo - 0.25 + (hi - lo + 0.5) * i as f64 / 16.0;
        let direct = f.right(x).exp() - f.right(a).exp();
        let via = f.derivative.integrate_on(a, x, |t| f.right(t).exp());
        worst = worst.max(rel(direct, via, direct.abs()));
    }
    worst
}

/// Smoothed discrete part: total mass `Σ|V_j|`, and its closed-form cdf
/// against quadrature of the density.
pub fn smoothing_mass_error(atoms: &[(f64, f64)], eta: f64) -> f64 {
    let m = SignedMeasure::atoms_only(atoms).unwrap();
    let total: f64 = atoms.iter().map(|a| a.1.abs()).sum();
    let cuts: Vec<f64> = atoms.iter().map(|a| a.0).collect();
    let (lo, hi) = (-3.0 - 12.0 * eta, 3.0 + 12.0 * eta);
    let panel = eta.min(0.1);
    let mass = integrate(lo, hi, &cuts, panel, |x| m.smoothed_atoms(eta, x));
    let mut worst = rel(mass, total, total);
    worst = worst.max(rel(m.smoothed_atoms_cdf(eta, hi), total, total));
    for &x in &[-1.0, -0.3, 0.0, 0.7, 1.2] {
        let q = integrate(lo, x, &cuts, panel, |t| m.smoothed_atoms(eta, t));
        worst = worst.max(rel(q, m.smoothed_atoms_cdf(eta, x), total));
    }
    worst
}

/// `cdf(b) - cdf(a)` against the atoms in `(a, b]` plus quadrature of the density.
pub fn interval_mass_error(f: &MeasureDraw, a: f64, b: f64) -> f64 {
    use measchrod::measure::Side;
    let m = f.measure();
    let atoms: f64 = f.atoms.iter().filter(|p| p.0 > a && p.0 <= b).map(|p| p.1).sum();
    let dens = integrate(a, b, &f.cuts(), 0.1, |x| m.density().value(x));
    let got = m.cdf(b, Side::Right) - m.cdf(a, Side::Right);
    (got - atoms - dens).abs().max((m.interval_mass(a, b) - got).abs())
}
