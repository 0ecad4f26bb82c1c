//! Scattering for compactly supported measure potentials at `h = 1`:
//! transfer matrices, Jost solutions, the Wronskian, the Green kernel,
//! cutoff resolvent norms and resonance search.
//!
//! Solutions of `-u'' + V u = λ² u` are carried as right limits
//! `(u, u')` together with their `λ`-derivatives. Crossing an atom of weight
//! `c` kicks the derivative, `u'(x⁺) = u'(x⁻) + c u(x)`.
//!
//! Wronskian convention: `W = f₋ f₊' - f₋' f₊`, so `W = 2iλ` for `V = 0`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::fem::Grid;
use crate::measure::SignedMeasure;
use crate::ode::{self, Tolerance};
use crate::par::{self, ExecMode};

type C = Complex64;

const I: C = C::new(0.0, 1.0);
const ZERO: C = C::new(0.0, 0.0);

/// `(u, u', ∂_λ u, ∂_λ u')` at a point (right limits).
pub type State = [C; 4];

/// Distance from `λ = 0` every search rectangle must keep.
pub const ZERO_MARGIN: f64 = 1e-3;
/// Distance below which a contour is considered to hit a zero.
pub const CONTOUR_PROXIMITY: f64 = 1e-6;
/// Contour perturbations tried before giving up.
pub const MAX_CONTOUR_RETRIES: usize = 5;

/// 2×2 map of `(u, u')` across an atom or interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferMatrix {
    pub entries: [[C; 2]; 2],
    pub from: f64,
    pub to: f64,
}

impl TransferMatrix {
    pub fn det(&self) -> C {
        let m = &self.entries;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    pub fn apply(&self, u: C, du: C) -> (C, C) {
        let m = &self.entries;
        (m[0][0] * u + m[0][1] * du, m[1][0] * u + m[1][1] * du)
    }

    /// `next ∘ self`.
    pub fn then(&self, next: &TransferMatrix) -> TransferMatrix {
        let (a, b) = (&next.entries, &self.entries);
        let mut e = [[ZERO; 2]; 2];
        for (i, row) in e.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        TransferMatrix {
            entries: e,
            from: self.from,
            to: next.to,
        }
    }
}

/// Jump across an atom of weight `c` located at `at`.
pub fn atom_transfer(c: f64, at: f64) -> TransferMatrix {
    let one = C::new(1.0, 0.0);
    TransferMatrix {
        entries: [[one, ZERO], [C::new(c, 0.0), one]],
        from: at,
        to: at,
    }
}

/// Propagation across `[a, b]` for density `Σ coeffs[k] (x - a)^k`.
pub fn density_transfer(lambda: C, a: f64, b: f64, coeffs: [f64; 4]) -> Result<TransferMatrix> {
    let mut cols = [[ZERO; 2]; 2];
    for (j, col) in cols.iter_mut().enumerate() {
        let mut s = [ZERO; 4];
        s[j] = C::new(1.0, 0.0);
        let out = continuous(lambda, s, a, b, &coeffs, a)?;
        *col = [out[0], out[1]];
    }
    Ok(TransferMatrix {
        entries: [[cols[0][0], cols[1][0]], [cols[0][1], cols[1][1]]],
        from: a,
        to: b,
    })
}

/// `sin(λℓ)/λ` and its `λ`-derivative `(ℓ cos(λℓ) - sin(λℓ)/λ)/λ`.
fn sinc_terms(lambda: C, l: f64) -> (C, C) {
    let x = lambda * l;
    if x.norm() < 0.5 {
        let x2 = x * x;
        let mut s = ZERO;
        let mut ds = ZERO;
        let mut term = C::new(1.0, 0.0); // (-1)^k x^{2k} / (2k+1)!
        for k in 0..14 {
            s += term;
            if k >= 1 {
                // (-1)^k x^{2k-1} 2k/(2k+1)!
                ds += term * (2.0 * k as f64) / x;
            }
            term *= -x2 / ((2 * k + 2) as f64 * (2 * k + 3) as f64);
        }
        if x.norm() == 0.0 {
            ds = ZERO;
        }
        (s * l, ds * l * l)
    } else {
        let s = x.sin() / lambda;
        (s, (x.cos() * l - s) / lambda)
    }
}

/// Closed-form propagation with zero potential over signed length `l`.
fn free_step(lambda: C, l: f64, s: State) -> State {
    if l == 0.0 {
        return s;
    }
    let c = (lambda * l).cos();
    let (sn, dsn) = sinc_terms(lambda, l);
    let dc = -lambda * sn * l;
    let l2 = lambda * lambda;
    let d_l2s = lambda * sn * 2.0 + l2 * dsn;
    [
        c * s[0] + sn * s[1],
        -l2 * sn * s[0] + c * s[1],
        dc * s[0] + dsn * s[1] + c * s[2] + sn * s[3],
        -d_l2s * s[0] + dc * s[1] - l2 * sn * s[2] + c * s[3],
    ]
}

fn poly(c: &[f64; 4], t: f64) -> f64 {
    ((c[3] * t + c[2]) * t + c[1]) * t + c[0]
}

/// Propagate from `a` to `b` with density polynomial `coeffs` in `x - origin`.
fn continuous(lambda: C, s: State, a: f64, b: f64, coeffs: &[f64; 4], origin: f64) -> Result<State> {
    if coeffs.iter().all(|&c| c == 0.0) {
        return Ok(free_step(lambda, b - a, s));
    }
    let l2 = lambda * lambda;
    let f = |x: f64, y: &State| {
        let q = C::new(poly(coeffs, x - origin), 0.0) - l2;
        [y[1], q * y[0], y[3], q * y[2] - lambda * y[0] * 2.0]
    };
    ode::integrate(f, a, s, b, Tolerance::default())
}

/// Propagate a right-limit state at `x0` to the right-limit state at `x1`.
/// Atoms in `(min, max]` are crossed in either direction.
pub fn propagate(m: &SignedMeasure, lambda: C, s: State, x0: f64, x1: f64) -> Result<State> {
    if x0 == x1 {
        return Ok(s);
    }
    let (lo, hi) = (x0.min(x1), x0.max(x1));
    let atoms = m.atoms();
    let dens = m.density();
    let mut events: Vec<f64> = atoms
        .iter()
        .map(|a| a.position)
        .filter(|&p| p > lo && p <= hi)
        .chain(dens.breakpoints().iter().copied().filter(|&p| p > lo && p < hi))
        .collect();
    events.sort_by(f64::total_cmp);
    events.dedup();
    let forward = x1 > x0;
    if !forward {
        events.reverse();
    }
    let atom_at = |p: f64| {
        let k = atoms.partition_point(|a| a.position < p);
        (k < atoms.len() && atoms[k].position == p).then(|| atoms[k].weight)
    };
    let segment = |s: State, a: f64, b: f64| -> Result<State> {
        let mid = 0.5 * (a + b);
        match dens.pieces().find(|(p, q, _)| mid >= *p && mid < *q) {
            Some((p, _, c)) => continuous(lambda, s, a, b, c, p),
            None => Ok(free_step(lambda, b - a, s)),
        }
    };
    let mut cur = x0;
    let mut s = s;
    for p in events {
        s = segment(s, cur, p)?;
        if let Some(w) = atom_at(p) {
            let k = if forward { w } else { -w };
            s[1] += s[0] * k;
            s[3] += s[2] * k;
        }
        cur = p;
    }
    segment(s, cur, x1)
}

/// Left/right ends used to pin the Jost asymptotics.
fn pins(m: &SignedMeasure) -> (f64, f64) {
    m.essential_bounds().unwrap_or((0.0, 0.0))
}

fn plus_asymptotic(lambda: C, x: f64) -> State {
    let e = (I * lambda * x).exp();
    [e, I * lambda * e, I * x * e, (I - lambda * x) * e]
}

fn minus_asymptotic(lambda: C, x: f64) -> State {
    let e = (-I * lambda * x).exp();
    [e, -I * lambda * e, -I * x * e, (-I - lambda * x) * e]
}

/// Jost solutions sampled at `points`: `(value, derivative)` per point.
#[derive(Debug, Clone, PartialEq)]
pub struct JostPair {
    pub lambda: C,
    pub points: Vec<f64>,
    pub f_minus: Vec<[C; 2]>,
    pub f_plus: Vec<[C; 2]>,
}

impl JostPair {
    /// `f₋ f₊' - f₋' f₊` at sample `i`.
    pub fn wronskian_at(&self, i: usize) -> C {
        let (m, p) = (self.f_minus[i], self.f_plus[i]);
        m[0] * p[1] - m[1] * p[0]
    }
}

fn jost_states(m: &SignedMeasure, lambda: C, points: &[f64]) -> Result<(Vec<State>, Vec<State>)> {
    let (a, b) = pins(m);
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&i, &j| points[i].total_cmp(&points[j]));
    let mut fm = vec![[ZERO; 4]; points.len()];
    let mut fp = vec![[ZERO; 4]; points.len()];

    let mut cur = a - 1.0;
    let mut s = minus_asymptotic(lambda, cur);
    for &i in &order {
        let x = points[i];
        if x < a {
            fm[i] = minus_asymptotic(lambda, x);
        } else {
            s = propagate(m, lambda, s, cur, x)?;
            cur = x;
            fm[i] = s;
        }
    }
    let mut cur = b;
    let mut s = plus_asymptotic(lambda, b);
    for &i in order.iter().rev() {
        let x = points[i];
        if x >= b {
            fp[i] = plus_asymptotic(lambda, x);
        } else {
            s = propagate(m, lambda, s, cur, x)?;
            cur = x;
            fp[i] = s;
        }
    }
    Ok((fm, fp))
}

/// Jost solutions `f_± ~ e^{±iλx}` off the support, sampled at `points`.
pub fn jost(m: &SignedMeasure, lambda: C, points: &[f64]) -> Result<JostPair> {
    if lambda == ZERO {
        return Err(Error::InvalidArgument {
            field: "lambda",
            reason: "Jost normalization needs λ ≠ 0".into(),
        });
    }
    let (fm, fp) = jost_states(m, lambda, points)?;
    Ok(JostPair {
        lambda,
        points: points.to_vec(),
        f_minus: fm.iter().map(|s| [s[0], s[1]]).collect(),
        f_plus: fp.iter().map(|s| [s[0], s[1]]).collect(),
    })
}

/// `W(λ)` and `W'(λ)`.
pub fn wronskian_with_derivative(m: &SignedMeasure, lambda: C) -> Result<(C, C)> {
    let (a, b) = pins(m);
    let x = a - 1.0;
    let p = propagate(m, lambda, plus_asymptotic(lambda, b), b, x)?;
    let q = minus_asymptotic(lambda, x);
    let w = q[0] * p[1] - q[1] * p[0];
    let dw = q[2] * p[1] + q[0] * p[3] - q[3] * p[0] - q[1] * p[2];
    Ok((w, dw))
}

pub fn wronskian(m: &SignedMeasure, lambda: C) -> Result<C> {
    Ok(wronskian_with_derivative(m, lambda)?.0)
}

/// Magnitude against which `|W|` is judged small.
pub fn wronskian_scale(m: &SignedMeasure, lambda: C) -> f64 {
    2.0 * lambda.norm() + m.total_variation()
}

fn check_pole(m: &SignedMeasure, lambda: C, w: C) -> Result<()> {
    if w.norm() <= 1e-10 * wronskian_scale(m, lambda).max(1e-300) {
        return Err(Error::PoleProximity {
            re: lambda.re,
            im: lambda.im,
            wronskian: w.norm(),
        });
    }
    Ok(())
}

/// Samples of the resolvent kernel of `(H - λ²)⁻¹`,
/// `G(x, y) = -f₋(min) f₊(max) / W`.
#[derive(Debug, Clone, PartialEq)]
pub struct GreenKernel {
    pub lambda: C,
    pub points: Vec<f64>,
    /// row-major `G(points[i], points[j])`
    pub values: Vec<C>,
}

impl GreenKernel {
    pub fn get(&self, i: usize, j: usize) -> C {
        self.values[i * self.points.len() + j]
    }

    /// `Σ_j G(x_i, x_j) g_j`.
    pub fn apply(&self, g: &[C]) -> Vec<C> {
        let n = self.points.len();
        (0..n)
            .map(|i| self.values[i * n..(i + 1) * n].iter().zip(g).map(|(k, v)| k * v).sum())
            .collect()
    }
}

/// Kernel and `∂ₓ` kernel on `points`.
fn kernels(m: &SignedMeasure, lambda: C, points: &[f64], with_dx: bool) -> Result<(Vec<C>, Option<Vec<C>>)> {
    let (fm, fp) = jost_states(m, lambda, points)?;
    let (w, _) = wronskian_with_derivative(m, lambda)?;
    check_pole(m, lambda, w)?;
    let n = points.len();
    let mut g = vec![ZERO; n * n];
    let mut dx = with_dx.then(|| vec![ZERO; n * n]);
    for i in 0..n {
        for j in 0..n {
            let (xi, xj) = (points[i], points[j]);
            let (left, right) = if xi <= xj { (i, j) } else { (j, i) };
            g[i * n + j] = -fm[left][0] * fp[right][0] / w;
            if let Some(d) = dx.as_mut() {
                let left = -fm[i][1] * fp[j][0] / w;
                let right = -fm[j][0] * fp[i][1] / w;
                d[i * n + j] = if xi < xj {
                    left
                } else if xi > xj {
                    right
                } else {
                    0.5 * (left + right)
                };
            }
        }
    }
    Ok((g, dx))
}

pub fn green_kernel(m: &SignedMeasure, lambda: C, points: &[f64]) -> Result<GreenKernel> {
    let (values, _) = kernels(m, lambda, points, false)?;
    Ok(GreenKernel {
        lambda,
        points: points.to_vec(),
        values,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum WeightMode {
    /// `χ = 1` on `[-R₀-1, R₀+1]`, zero outside.
    Cutoff,
    /// `(|x|+1)^{-(1+δ)/2}` on `[-R₀-1-window, R₀+1+window]`.
    Polynomial { delta: f64, window: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    L2,
    H1,
    /// `(‖Hu‖² + ‖u‖²)^{1/2}`.
    Graph,
}

#[derive(Debug, Clone, Copy)]
pub struct NormOptions {
    pub points_per_wavelength: f64,
    pub max_spacing: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for NormOptions {
    fn default() -> Self {
        Self {
            points_per_wavelength: 20.0,
            max_spacing: 0.02,
            tol: 1e-6,
            max_iter: 5000,
        }
    }
}

pub fn cutoff_resolvent_norm(m: &SignedMeasure, lambda: C, mode: WeightMode, target: Target) -> Result<f64> {
    cutoff_resolvent_norm_with(m, lambda, mode, target, NormOptions::default())
}

/// Largest singular value of the Nyström discretization of the weighted
/// kernel operator, with derivative rows (`H1`) or `H`-rows (`Graph`)
/// stacked under the value rows.
pub fn cutoff_resolvent_norm_with(
    m: &SignedMeasure,
    lambda: C,
    mode: WeightMode,
    target: Target,
    opts: NormOptions,
) -> Result<f64> {
    let r = m.radius() + 1.0;
    let (half, weight): (f64, Box<dyn Fn(f64) -> f64>) = match mode {
        WeightMode::Cutoff => (r, Box::new(|_| 1.0)),
        WeightMode::Polynomial { delta, window } => {
            if matches!(target, Target::Graph) {
                return Err(Error::InvalidArgument {
                    field: "target",
                    reason: "graph norm is defined for the cutoff weight only".into(),
                });
            }
            let e = -(1.0 + delta) / 2.0;
            (r + window, Box::new(move |x: f64| (x.abs() + 1.0).powf(e)))
        }
    };
    let d = opts
        .max_spacing
        .min(2.0 * PI / (opts.points_per_wavelength * lambda.norm().max(1e-12)));
    let mut required: Vec<f64> = m.atoms().iter().map(|a| a.position).collect();
    required.extend_from_slice(m.density().breakpoints());
    let grid = Grid::build(half - 1.0 - 1e-9, half, d, &required)?;
    let x = grid.nodes().to_vec();
    let sw: Vec<f64> = grid
        .trapezoid_weights()
        .iter()
        .zip(&x)
        .map(|(w, &xi)| w.sqrt() * weight(xi))
        .collect();
    let n = x.len();
    let (g, dx) = kernels(m, lambda, &x, matches!(target, Target::H1))?;
    let k: Vec<C> = (0..n * n).map(|ij| g[ij] * sw[ij / n] * sw[ij % n]).collect();
    let kd: Option<Vec<C>> = dx.map(|dv| (0..n * n).map(|ij| dv[ij] * sw[ij / n] * sw[ij % n]).collect());
    let l2 = lambda * lambda;
    let matvec = |v: &[C]| -> Vec<C> {
        let kv: Vec<C> = (0..n)
            .map(|i| k[i * n..(i + 1) * n].iter().zip(v).map(|(a, b)| a * b).sum())
            .collect();
        let mut out = kv.clone();
        match target {
            Target::L2 => {}
            Target::H1 => {
                let kd = kd.as_ref().expect("derivative kernel");
                out.extend((0..n).map(|i| kd[i * n..(i + 1) * n].iter().zip(v).map(|(a, b)| a * b).sum::<C>()));
            }
            Target::Graph => out.extend(kv.iter().zip(v).map(|(a, b)| l2 * a + b)),
        }
        out
    };
    let rmatvec = |y: &[C]| -> Vec<C> {
        let mut out = vec![ZERO; n];
        for i in 0..n {
            let yi = y[i];
            for j in 0..n {
                out[j] += k[i * n + j].conj() * yi;
            }
        }
        match target {
            Target::L2 => {}
            Target::H1 => {
                let kd = kd.as_ref().expect("derivative kernel");
                for i in 0..n {
                    let yi = y[n + i];
                    for j in 0..n {
                        out[j] += kd[i * n + j].conj() * yi;
                    }
                }
            }
            Target::Graph => {
                for i in 0..n {
                    let yi = y[n + i];
                    for j in 0..n {
                        out[j] += (l2 * k[i * n + j]).conj() * yi;
                    }
                    out[i] += yi;
                }
            }
        }
        out
    };
    Ok(power_iteration(n, matvec, rmatvec, opts.tol, opts.max_iter))
}

/// Largest singular value by power iteration on `T*T`.
pub fn power_iteration<F, G>(n: usize, apply: F, adjoint: G, tol: f64, max_iter: usize) -> f64
where
    F: Fn(&[C]) -> Vec<C>,
    G: Fn(&[C]) -> Vec<C>,
{
    let norm = |v: &[C]| v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    let mut v: Vec<C> = (0..n)
        .map(|i| {
            C::new(
                1.0 + 0.5 * ((i * 7919) % 13) as f64 / 13.0,
                0.25 * ((i * 104729) % 5) as f64,
            )
        })
        .collect();
    let nv = norm(&v);
    v.iter_mut().for_each(|c| *c /= nv);
    let mut sigma = 0.0;
    for _ in 0..max_iter {
        let y = apply(&v);
        let s = norm(&y);
        let z = adjoint(&y);
        let nz = norm(&z);
        if nz == 0.0 {
            return s;
        }
        v = z.into_iter().map(|c| c / nz).collect();
        let done = (s - sigma).abs() <= tol * s;
        sigma = s;
        if done {
            break;
        }
    }
    sigma
}

/// Axis-aligned rectangle in the `λ` plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub re: (f64, f64),
    pub im: (f64, f64),
}

impl Rect {
    pub fn new(re: (f64, f64), im: (f64, f64)) -> Rect {
        Rect { re, im }
    }

    /// Distance from the rectangle to the origin.
    pub fn distance_to_origin(&self) -> f64 {
        let dr = if self.re.0 > 0.0 {
            self.re.0
        } else if self.re.1 < 0.0 {
            -self.re.1
        } else {
            0.0
        };
        let di = if self.im.0 > 0.0 {
            self.im.0
        } else if self.im.1 < 0.0 {
            -self.im.1
        } else {
            0.0
        };
        dr.hypot(di)
    }

    fn size(&self) -> f64 {
        (self.re.1 - self.re.0).max(self.im.1 - self.im.0)
    }

    fn center(&self) -> C {
        C::new(0.5 * (self.re.0 + self.re.1), 0.5 * (self.im.0 + self.im.1))
    }

    fn contains(&self, z: C, slack: f64) -> bool {
        z.re >= self.re.0 - slack && z.re <= self.re.1 + slack && z.im >= self.im.0 - slack && z.im <= self.im.1 + slack
    }

    fn corners(&self) -> [C; 4] {
        [
            C::new(self.re.0, self.im.0),
            C::new(self.re.1, self.im.0),
            C::new(self.re.1, self.im.1),
            C::new(self.re.0, self.im.1),
        ]
    }

    fn inflate(&self, by: f64) -> Rect {
        Rect {
            re: (self.re.0 - by, self.re.1 + by),
            im: (self.im.0 - by, self.im.1 + by),
        }
    }
}

/// A zero of `W`: a resonance (`Im λ ≤ 0`) or, on the positive imaginary
/// axis, an eigenvalue `λ²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "ResonanceRecord", from = "ResonanceRecord")]
pub struct Resonance {
    pub lambda: C,
    pub multiplicity: usize,
    pub newton_residual: f64,
}

impl Resonance {
    pub fn is_eigenvalue(&self) -> bool {
        self.lambda.im > 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct ResonanceRecord {
    lambda_re: f64,
    lambda_im: f64,
    multiplicity: usize,
    residual: f64,
}

impl From<Resonance> for ResonanceRecord {
    fn from(r: Resonance) -> Self {
        Self {
            lambda_re: r.lambda.re,
            lambda_im: r.lambda.im,
            multiplicity: r.multiplicity,
            residual: r.newton_residual,
        }
    }
}

impl From<ResonanceRecord> for Resonance {
    fn from(r: ResonanceRecord) -> Self {
        Self {
            lambda: C::new(r.lambda_re, r.lambda_im),
            multiplicity: r.multiplicity,
            newton_residual: r.residual,
        }
    }
}

/// The contour came within [`CONTOUR_PROXIMITY`] of a zero.
struct Hit;

struct ZeroFinder<'a> {
    m: &'a SignedMeasure,
    /// spatial extent, sets the oscillation scale of `W'/W`
    extent: f64,
}

impl ZeroFinder<'_> {
    fn log_derivative(&self, z: C) -> std::result::Result<C, Hit> {
        let (w, dw) = wronskian_with_derivative(self.m, z).map_err(|_| Hit)?;
        if w == ZERO || (w / dw).norm() < CONTOUR_PROXIMITY {
            return Err(Hit);
        }
        Ok(dw / w)
    }

    /// `∫ W'/W` along the segment `a → b` by adaptive Simpson.
    fn edge(&self, a: C, b: C) -> std::result::Result<C, Hit> {
        let len = (b - a).norm();
        let panels = ((len * (1.0 + 2.0 * self.extent)).ceil() as usize).clamp(8, 4000);
        let dz = (b - a) / panels as f64;
        let mut total = ZERO;
        for p in 0..panels {
            let z0 = a + dz * p as f64;
            let z1 = z0 + dz;
            let f0 = self.log_derivative(z0)?;
            let f1 = self.log_derivative(z1)?;
            let fm = self.log_derivative(0.5 * (z0 + z1))?;
            let whole = (f0 + 4.0 * fm + f1) * dz / 6.0;
            total += self.simpson(z0, z1, f0, fm, f1, whole, 1e-9, 0)?;
        }
        Ok(total)
    }

    #[allow(clippy::too_many_arguments)]
    fn simpson(&self, a: C, b: C, fa: C, fm: C, fb: C, whole: C, tol: f64, depth: u32) -> std::result::Result<C, Hit> {
        let m = 0.5 * (a + b);
        let flm = self.log_derivative(0.5 * (a + m))?;
        let frm = self.log_derivative(0.5 * (m + b))?;
        let left = (fa + 4.0 * flm + fm) * (m - a) / 6.0;
        let right = (fm + 4.0 * frm + fb) * (b - m) / 6.0;
        let diff = left + right - whole;
        if depth >= 40 || diff.norm() <= 15.0 * tol {
            return Ok(left + right + diff / 15.0);
        }
        Ok(self.simpson(a, m, fa, flm, fm, left, 0.5 * tol, depth + 1)?
            + self.simpson(m, b, fm, frm, fb, right, 0.5 * tol, depth + 1)?)
    }

    /// Winding number of `W` around the boundary; `None` when the
    /// integral is not close to an integer.
    fn winding(&self, r: &Rect) -> std::result::Result<Option<usize>, Hit> {
        let c = r.corners();
        let mut total = ZERO;
        for k in 0..4 {
            total += self.edge(c[k], c[(k + 1) % 4])?;
        }
        let n = total / (2.0 * PI * I);
        let rounded = n.re.round();
        if (n.re - rounded).abs() > 0.05 || n.im.abs() > 0.05 || rounded < 0.0 {
            return Ok(None);
        }
        Ok(Some(rounded as usize))
    }

    fn newton(&self, start: C, r: &Rect) -> Option<Resonance> {
        let mut z = start;
        for _ in 0..80 {
            let (w, dw) = wronskian_with_derivative(self.m, z).ok()?;
            if dw == ZERO {
                return None;
            }
            let step = w / dw;
            z -= step;
            if !r.contains(z, 0.25 * r.size()) {
                return None;
            }
            if step.norm() <= 1e-14 * (1.0 + z.norm()) {
                break;
            }
        }
        let w = wronskian(self.m, z).ok()?;
        (r.contains(z, 1e-9 * (1.0 + z.norm())) && w.norm() <= 1e-8 * (1.0 + z.norm())).then_some(Resonance {
            lambda: z,
            multiplicity: 1,
            newton_residual: w.norm(),
        })
    }

    fn search(&self, r: Rect, count: usize, out: &mut Vec<Resonance>) -> Result<()> {
        if count == 0 {
            return Ok(());
        }
        if count == 1 {
            if let Some(res) = self.newton(r.center(), &r) {
                out.push(res);
                return Ok(());
            }
        }
        if r.size() < 1e-7 {
            let z = r.center();
            let polished = self.newton(z, &r.inflate(1e-7)).map(|s| s.lambda).unwrap_or(z);
            out.push(Resonance {
                lambda: polished,
                multiplicity: count,
                newton_residual: wronskian(self.m, polished)?.norm(),
            });
            return Ok(());
        }
        const OFFSETS: [f64; MAX_CONTOUR_RETRIES + 1] = [0.0137, -0.0241, 0.0389, -0.0533, 0.0711, -0.0877];
        for off in OFFSETS {
            let split_wide = r.re.1 - r.re.0 >= r.im.1 - r.im.0;
            let children = if split_wide {
                let s = r.re.0 + (0.5 + off) * (r.re.1 - r.re.0);
                [Rect::new((r.re.0, s), r.im), Rect::new((s, r.re.1), r.im)]
            } else {
                let s = r.im.0 + (0.5 + off) * (r.im.1 - r.im.0);
                [Rect::new(r.re, (r.im.0, s)), Rect::new(r.re, (s, r.im.1))]
            };
            let counts: Vec<Option<usize>> = match children.iter().map(|c| self.winding(c)).collect() {
                Ok(v) => v,
                Err(Hit) => continue,
            };
            if counts.iter().any(Option::is_none) || counts.iter().flatten().sum::<usize>() != count {
                continue;
            }
            for (c, n) in children.iter().zip(counts) {
                self.search(*c, n.unwrap_or(0), out)?;
            }
            return Ok(());
        }
        Err(Error::ContourRetries(MAX_CONTOUR_RETRIES))
    }
}

/// Zeros of `W` inside `rect`, found by the argument principle with
/// recursive bisection and Newton refinement.
pub fn find_resonances(m: &SignedMeasure, rect: Rect) -> Result<Vec<Resonance>> {
    if !(rect.re.0 < rect.re.1 && rect.im.0 < rect.im.1) {
        return Err(Error::InvalidArgument {
            field: "rect",
            reason: "rectangle must have positive width and height".into(),
        });
    }
    if rect.distance_to_origin() < ZERO_MARGIN {
        return Err(Error::InvalidArgument {
            field: "rect",
            reason: "rectangle must exclude λ=0".into(),
        });
    }
    let (a, b) = pins(m);
    let finder = ZeroFinder {
        m,
        extent: (b - a) + 2.0,
    };
    let step = 1e-5 * rect.size();
    for attempt in 0..=MAX_CONTOUR_RETRIES {
        let r = if attempt == 0 {
            rect
        } else {
            let mut r = rect.inflate(step * attempt as f64);
            // keep the origin margin when inflating
            if r.distance_to_origin() < ZERO_MARGIN {
                r = rect.inflate(-step * attempt as f64);
            }
            r
        };
        match finder.winding(&r) {
            Ok(Some(n)) => {
                let mut out = Vec::with_capacity(n);
                finder.search(r, n, &mut out)?;
                out.sort_by(|p, q| {
                    p.lambda
                        .re
                        .total_cmp(&q.lambda.re)
                        .then(p.lambda.im.total_cmp(&q.lambda.im))
                });
                return Ok(out);
            }
            Ok(None) | Err(Hit) => continue,
        }
    }
    Err(Error::ContourRetries(MAX_CONTOUR_RETRIES))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StripSample {
    pub lambda_re: f64,
    pub lambda_im: f64,
    pub norm_l2: f64,
    pub norm_h1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StripReport {
    pub lambda0: f64,
    pub lambda_max: f64,
    pub eps0: f64,
    pub step: f64,
    pub resonances: Vec<Resonance>,
    pub samples: Vec<StripSample>,
    /// `sup ‖χRχ‖_{L²→L²}·|Re λ|`
    pub constant_l2: f64,
    /// `sup ‖χRχ‖_{L²→H¹}`
    pub constant_h1: f64,
}

impl StripReport {
    pub fn resonance_free(&self) -> bool {
        self.resonances.is_empty()
    }
}

/// Search `[λ₀, Λ] × [-ε₀, 0]` for resonances and sample the cutoff
/// resolvent on `Re λ ∈ step·ℤ`, `Im λ ∈ {0, -ε₀/2, -ε₀}`.
pub fn strip_scan(m: &SignedMeasure, lambda0: f64, lambda_max: f64, eps0: f64, step: f64) -> Result<StripReport> {
    strip_scan_with(m, lambda0, lambda_max, eps0, step, ExecMode::default())
}

pub fn strip_scan_with(
    m: &SignedMeasure,
    lambda0: f64,
    lambda_max: f64,
    eps0: f64,
    step: f64,
    mode: ExecMode,
) -> Result<StripReport> {
    if !(lambda0 > 0.0) || !(lambda_max > lambda0) || !(eps0 > 0.0) || !(step > 0.0) {
        return Err(Error::InvalidArgument {
            field: "strip",
            reason: format!("need 0 < λ₀ < Λ, ε₀ > 0, step > 0 (got {lambda0}, {lambda_max}, {eps0}, {step})"),
        });
    }
    let resonances = find_resonances(m, Rect::new((lambda0, lambda_max), (-eps0, 0.0)))?;
    let k0 = (lambda0 / step - 1e-9).ceil() as i64;
    let k1 = (lambda_max / step + 1e-9).floor() as i64;
    let mut lambdas = Vec::new();
    for k in k0..=k1 {
        for im in [0.0, -0.5 * eps0, -eps0] {
            lambdas.push(C::new(k as f64 * step, im));
        }
    }
    let results = par::map(mode, &lambdas, |&l| -> Result<StripSample> {
        Ok(StripSample {
            lambda_re: l.re,
            lambda_im: l.im,
            norm_l2: cutoff_resolvent_norm(m, l, WeightMode::Cutoff, Target::L2)?,
            norm_h1: cutoff_resolvent_norm(m, l, WeightMode::Cutoff, Target::H1)?,
        })
    });
    let samples = results.into_iter().collect::<Result<Vec<_>>>()?;
    let constant_l2 = samples
        .iter()
        .map(|s| s.norm_l2 * s.lambda_re.abs())
        .fold(0.0, f64::max);
    let constant_h1 = samples.iter().map(|s| s.norm_h1).fold(0.0, f64::max);
    Ok(StripReport {
        lambda0,
        lambda_max,
        eps0,
        step,
        resonances,
        samples,
        constant_l2,
        constant_h1,
    })
}
