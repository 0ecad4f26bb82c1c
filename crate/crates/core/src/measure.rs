//! Finite signed Borel measures on the line: atoms plus a piecewise cubic
//! density, and the Lebesgue–Stieltjes bookkeeping built on them.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::quad::GaussLegendre;

/// Atoms closer than this are merged.
pub const ATOM_MERGE_TOL: f64 = 1e-12;
/// Largest supported Cantor level.
pub const MAX_CANTOR_LEVEL: u32 = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub position: f64,
    pub weight: f64,
}

/// Piecewise cubic density. On `[b_i, b_{i+1})` the density is
/// `c0 + c1 t + c2 t² + c3 t³` with `t = x - b_i`; zero outside.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PiecewiseDensity {
    breakpoints: Vec<f64>,
    coeffs: Vec<[f64; 4]>,
    // signed and absolute integrals over whole pieces
    piece_mass: Vec<f64>,
    piece_abs: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

fn poly(c: &[f64; 4], t: f64) -> f64 {
    ((c[3] * t + c[2]) * t + c[1]) * t + c[0]
}

fn poly_antideriv(c: &[f64; 4], t: f64) -> f64 {
    (((c[3] / 4.0 * t + c[2] / 3.0) * t + c[1] / 2.0) * t + c[0]) * t
}

/// `∫_{t0}^{t1} |p(t)| dt` for a cubic, split at real roots.
fn poly_abs_integral(c: &[f64; 4], t0: f64, t1: f64) -> f64 {
    if t1 <= t0 {
        return 0.0;
    }
    // monotone pieces: split at critical points (roots of p')
    let mut cuts = vec![t0, t1];
    let (a, b, cc) = (3.0 * c[3], 2.0 * c[2], c[1]);
    if a.abs() > 0.0 {
        let disc = b * b - 4.0 * a * cc;
        if disc >= 0.0 {
            let s = disc.sqrt();
            cuts.push((-b - s) / (2.0 * a));
            cuts.push((-b + s) / (2.0 * a));
        }
    } else if b.abs() > 0.0 {
        cuts.push(-cc / b);
    }
    cuts.retain(|&t| t >= t0 && t <= t1);
    cuts.sort_by(f64::total_cmp);
    let mut roots = Vec::new();
    for w in cuts.windows(2) {
        let (mut lo, mut hi) = (w[0], w[1]);
        let (plo, phi) = (poly(c, lo), poly(c, hi));
        if plo == 0.0 || phi == 0.0 || plo.signum() == phi.signum() {
            continue;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if poly(c, mid).signum() == plo.signum() {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-15 * (1.0 + hi.abs()) {
                break;
            }
        }
        roots.push(0.5 * (lo + hi));
    }
    let mut pts = vec![t0];
    pts.extend(roots);
    pts.push(t1);
    pts.windows(2)
        .map(|w| (poly_antideriv(c, w[1]) - poly_antideriv(c, w[0])).abs())
        .sum()
}

impl PiecewiseDensity {
    pub fn new(breakpoints: Vec<f64>, coeffs: Vec<[f64; 4]>) -> Result<Self> {
        if breakpoints.is_empty() && coeffs.is_empty() {
            return Ok(Self::default());
        }
        if breakpoints.len() < 2 || coeffs.len() + 1 != breakpoints.len() {
            return Err(Error::InvalidMeasure(format!(
                "density needs n+1 breakpoints for n pieces (got {} breakpoints, {} pieces)",
                breakpoints.len(),
                coeffs.len()
            )));
        }
        if breakpoints.iter().any(|b| !b.is_finite()) || coeffs.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::InvalidMeasure("density contains non-finite values".into()));
        }
        if breakpoints.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidMeasure(
                "density breakpoints must be strictly increasing".into(),
            ));
        }
        let piece_mass = coeffs
            .iter()
            .zip(breakpoints.windows(2))
            .map(|(c, w)| poly_antideriv(c, w[1] - w[0]))
            .collect();
        let piece_abs = coeffs
            .iter()
            .zip(breakpoints.windows(2))
            .map(|(c, w)| poly_abs_integral(c, 0.0, w[1] - w[0]))
            .collect();
        Ok(Self {
            breakpoints,
            coeffs,
            piece_mass,
            piece_abs,
        })
    }

    /// Constant density `value` on `[a, b]`.
    pub fn constant(a: f64, b: f64, value: f64) -> Result<Self> {
        Self::new(vec![a, b], vec![[value, 0.0, 0.0, 0.0]])
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.iter().all(|&v| v == 0.0))
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn coeffs(&self) -> &[[f64; 4]] {
        &self.coeffs
    }

    pub fn pieces(&self) -> impl Iterator<Item = (f64, f64, &[f64; 4])> + '_ {
        self.breakpoints
            .windows(2)
            .zip(&self.coeffs)
            .map(|(w, c)| (w[0], w[1], c))
    }

    fn piece_index(&self, x: f64) -> Option<usize> {
        if self.breakpoints.len() < 2 || x < self.breakpoints[0] || x >= *self.breakpoints.last().unwrap() {
            return None;
        }
        let i = self.breakpoints.partition_point(|&b| b <= x);
        Some(i - 1)
    }

    /// Density value (right-continuous at breakpoints).
    pub fn value(&self, x: f64) -> f64 {
        self.piece_index(x)
            .map(|i| poly(&self.coeffs[i], x - self.breakpoints[i]))
            .unwrap_or(0.0)
    }

    /// `∫_{-∞}^x density`.
    pub fn cumulative(&self, x: f64) -> f64 {
        self.accumulate(x, false)
    }

    /// `∫_{-∞}^x |density|`.
    pub fn cumulative_abs(&self, x: f64) -> f64 {
        self.accumulate(x, true)
    }

    fn accumulate(&self, x: f64, abs: bool) -> f64 {
        if self.breakpoints.len() < 2 || x <= self.breakpoints[0] {
            return 0.0;
        }
        let whole = if abs { &self.piece_abs } else { &self.piece_mass };
        let n = self.coeffs.len();
        let k = self.breakpoints.partition_point(|&b| b <= x).min(n + 1) - 1;
        let mut s: f64 = whole[..k.min(n)].iter().sum();
        if k < n {
            let t = x - self.breakpoints[k];
            let c = &self.coeffs[k];
            s += if abs {
                poly_abs_integral(c, 0.0, t)
            } else {
                poly_antideriv(c, t)
            };
        }
        s
    }

    /// `∫_a^b density`.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        self.cumulative(b) - self.cumulative(a)
    }

    pub fn abs_total(&self) -> f64 {
        self.piece_abs.iter().sum()
    }

    pub fn bounds(&self) -> Option<(f64, f64)> {
        if self.breakpoints.len() < 2 {
            None
        } else {
            Some((self.breakpoints[0], *self.breakpoints.last().unwrap()))
        }
    }
}

/// Finite signed measure `Σ_j w_j δ_{x_j} + ρ(x) dx` supported in `[lo, hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SignedMeasure {
    atoms: Vec<Atom>,
    density: PiecewiseDensity,
    support: (f64, f64),
    // prefix sums of atom weights and |weights|
    prefix: Vec<f64>,
    prefix_abs: Vec<f64>,
}

impl SignedMeasure {
    /// Validates the invariants, sorts atoms and merges near-coincident ones.
    pub fn new(mut atoms: Vec<Atom>, density: PiecewiseDensity, support: (f64, f64)) -> Result<Self> {
        let (lo, hi) = support;
        if !(lo.is_finite() && hi.is_finite()) || lo > hi {
            return Err(Error::InvalidMeasure(format!(
                "support [{lo}, {hi}] is not a closed interval"
            )));
        }
        if atoms.iter().any(|a| !a.position.is_finite() || !a.weight.is_finite()) {
            return Err(Error::InvalidMeasure("atom with non-finite position or weight".into()));
        }
        atoms.sort_by(|a, b| a.position.total_cmp(&b.position));
        let mut merged: Vec<Atom> = Vec::with_capacity(atoms.len());
        for a in atoms {
            match merged.last_mut() {
                Some(last) if (a.position - last.position).abs() < ATOM_MERGE_TOL => last.weight += a.weight,
                _ => merged.push(a),
            }
        }
        merged.retain(|a| a.weight != 0.0);
        if let Some(a) = merged.iter().find(|a| a.position < lo || a.position > hi) {
            return Err(Error::InvalidMeasure(format!(
                "atom at {} lies outside support [{lo}, {hi}]",
                a.position
            )));
        }
        if let Some((a, b)) = density.bounds() {
            if a < lo || b > hi {
                return Err(Error::InvalidMeasure(format!(
                    "density on [{a}, {b}] exceeds support [{lo}, {hi}]"
                )));
            }
        }
        let mut prefix = vec![0.0];
        let mut prefix_abs = vec![0.0];
        for a in &merged {
            prefix.push(prefix.last().unwrap() + a.weight);
            prefix_abs.push(prefix_abs.last().unwrap() + a.weight.abs());
        }
        Ok(Self {
            atoms: merged,
            density,
            support,
            prefix,
            prefix_abs,
        })
    }

    pub fn zero() -> Self {
        Self::new(vec![], PiecewiseDensity::default(), (-1.0, 1.0)).expect("zero measure")
    }

    /// `Σ c_j δ_{x_j}` with the support padded to a symmetric interval.
    pub fn atoms_only(atoms: &[(f64, f64)]) -> Result<Self> {
        let r = atoms.iter().map(|a| a.0.abs()).fold(1.0, f64::max);
        Self::new(
            atoms
                .iter()
                .map(|&(position, weight)| Atom { position, weight })
                .collect(),
            PiecewiseDensity::default(),
            (-r, r),
        )
    }

    /// `c δ_0` on support `[-1, 1]`.
    pub fn delta(c: f64) -> Self {
        Self::atoms_only(&[(0.0, c)]).expect("single atom")
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn density(&self) -> &PiecewiseDensity {
        &self.density
    }

    pub fn support(&self) -> (f64, f64) {
        self.support
    }

    /// `R₀ = max(|lo|, |hi|)`, so that the support lies in `[-R₀, R₀]`.
    pub fn radius(&self) -> f64 {
        self.support.0.abs().max(self.support.1.abs())
    }

    /// Smallest interval containing every atom and the density.
    pub fn essential_bounds(&self) -> Option<(f64, f64)> {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        if let (Some(f), Some(l)) = (self.atoms.first(), self.atoms.last()) {
            lo = lo.min(f.position);
            hi = hi.max(l.position);
        }
        if let Some((a, b)) = self.density.bounds() {
            lo = lo.min(a);
            hi = hi.max(b);
        }
        (lo <= hi).then_some((lo, hi))
    }

    pub fn is_zero(&self) -> bool {
        self.atoms.is_empty() && self.density.is_zero()
    }

    /// Sum of two measures; supports are joined.
    pub fn combine(&self, other: &SignedMeasure) -> Result<SignedMeasure> {
        let mut atoms = self.atoms.clone();
        atoms.extend_from_slice(&other.atoms);
        let density = merge_densities(&self.density, &other.density)?;
        let support = (self.support.0.min(other.support.0), self.support.1.max(other.support.1));
        SignedMeasure::new(atoms, density, support)
    }

    /// Same measure declared on a wider support.
    pub fn with_support(&self, support: (f64, f64)) -> Result<SignedMeasure> {
        SignedMeasure::new(self.atoms.clone(), self.density.clone(), support)
    }

    /// `|V|(ℝ) = Σ_j |V_j| + ∫|ρ|`.
    pub fn total_variation(&self) -> f64 {
        self.prefix_abs.last().unwrap() + self.density.abs_total()
    }

    /// Right side: `m((-∞, x])`; left side: `m((-∞, x))`.
    pub fn cdf(&self, x: f64, side: Side) -> f64 {
        let k = match side {
            Side::Right => self.atoms.partition_point(|a| a.position <= x),
            Side::Left => self.atoms.partition_point(|a| a.position < x),
        };
        self.prefix[k] + self.density.cumulative(x)
    }

    /// `m((a, b])`.
    pub fn interval_mass(&self, a: f64, b: f64) -> f64 {
        self.cdf(b, Side::Right) - self.cdf(a, Side::Right)
    }

    /// `|V_c|((-∞, x])`, the continuous part of the variation.
    pub fn continuous_variation_cdf(&self, x: f64) -> f64 {
        self.density.cumulative_abs(x)
    }

    /// `Σ_{x_j < x} |V_j|` (left) or `Σ_{x_j ≤ x} |V_j|` (right).
    pub fn atom_variation_cdf(&self, x: f64, side: Side) -> f64 {
        let k = match side {
            Side::Right => self.atoms.partition_point(|a| a.position <= x),
            Side::Left => self.atoms.partition_point(|a| a.position < x),
        };
        self.prefix_abs[k]
    }

    /// Gaussian smoothing of the discrete part,
    /// `π^{-1/2} η^{-1} Σ_j |V_j| exp(-((x - x_j)/η)²)`.
    pub fn smoothed_atoms(&self, eta: f64, x: f64) -> f64 {
        assert!(eta > 0.0, "smoothing width must be positive");
        let s: f64 = self
            .atoms
            .iter()
            .map(|a| {
                let r = (x - a.position) / eta;
                a.weight.abs() * (-r * r).exp()
            })
            .sum();
        s / (PI.sqrt() * eta)
    }

    /// `∫_{-∞}^x` of [`smoothed_atoms`](Self::smoothed_atoms), in closed form.
    pub fn smoothed_atoms_cdf(&self, eta: f64, x: f64) -> f64 {
        assert!(eta > 0.0, "smoothing width must be positive");
        self.atoms
            .iter()
            .map(|a| 0.5 * a.weight.abs() * libm::erfc(-(x - a.position) / eta))
            .sum()
    }

    /// `∫ φ dm` for a continuous test function, atoms exactly and the
    /// density by Gauss–Legendre on each piece.
    pub fn integrate<F: Fn(f64) -> f64>(&self, phi: F) -> f64 {
        let atoms: f64 = self.atoms.iter().map(|a| a.weight * phi(a.position)).sum();
        let gl = GaussLegendre::new(12);
        let dens: f64 = self
            .density
            .pieces()
            .map(|(a, b, c)| gl.integrate_piecewise(a, b, &[], 4, |x| phi(x) * poly(c, x - a)))
            .sum();
        atoms + dens
    }

    /// `∫_{(a,b]} φ dm`.
    pub fn integrate_on<F: Fn(f64) -> f64>(&self, a: f64, b: f64, phi: F) -> f64 {
        let atoms: f64 = self
            .atoms
            .iter()
            .filter(|at| at.position > a && at.position <= b)
            .map(|at| at.weight * phi(at.position))
            .sum();
        let gl = GaussLegendre::new(12);
        let dens: f64 = self
            .density
            .pieces()
            .filter_map(|(p, q, c)| {
                let lo = p.max(a);
                let hi = q.min(b);
                (hi > lo).then(|| gl.integrate_piecewise(lo, hi, &[], 4, |x| phi(x) * poly(c, x - p)))
            })
            .sum();
        atoms + dens
    }
}

fn merge_densities(a: &PiecewiseDensity, b: &PiecewiseDensity) -> Result<PiecewiseDensity> {
    if a.breakpoints.is_empty() {
        return Ok(b.clone());
    }
    if b.breakpoints.is_empty() {
        return Ok(a.clone());
    }
    let mut bps: Vec<f64> = a.breakpoints.iter().chain(&b.breakpoints).copied().collect();
    bps.sort_by(f64::total_cmp);
    bps.dedup();
    let coeffs = bps
        .windows(2)
        .map(|w| {
            let mut sum = [0.0; 4];
            for d in [a, b] {
                if let Some(i) = d.piece_index(0.5 * (w[0] + w[1])) {
                    let shifted = shift_poly(&d.coeffs[i], w[0] - d.breakpoints[i]);
                    for k in 0..4 {
                        sum[k] += shifted[k];
                    }
                }
            }
            sum
        })
        .collect();
    PiecewiseDensity::new(bps, coeffs)
}

/// Coefficients of `p(t + s)` in `t`.
fn shift_poly(c: &[f64; 4], s: f64) -> [f64; 4] {
    [
        c[0] + c[1] * s + c[2] * s * s + c[3] * s * s * s,
        c[1] + 2.0 * c[2] * s + 3.0 * c[3] * s * s,
        c[2] + 3.0 * c[3] * s,
        c[3],
    ]
}

/// `2^level` atoms of weight `mass·2^{-level}` at the left endpoints of the
/// level-`level` middle-thirds intervals of `[0, 1]`.
pub fn cantor_approx(level: u32, mass: f64) -> Result<SignedMeasure> {
    cantor_approx_on(level, mass, (0.0, 1.0))
}

/// [`cantor_approx`] mapped affinely onto `[a, b]`.
pub fn cantor_approx_on(level: u32, mass: f64, (a, b): (f64, f64)) -> Result<SignedMeasure> {
    if level == 0 || level > MAX_CANTOR_LEVEL {
        return Err(Error::InvalidArgument {
            field: "level",
            reason: format!("Cantor level must be in 1..={MAX_CANTOR_LEVEL}, got {level}"),
        });
    }
    if !(b > a) {
        return Err(Error::InvalidArgument {
            field: "interval",
            reason: format!("[{a}, {b}] is empty"),
        });
    }
    let mut lefts = vec![0.0_f64];
    let mut len = 1.0;
    for _ in 0..level {
        len /= 3.0;
        lefts = lefts.iter().flat_map(|&l| [l, l + 2.0 * len]).collect();
    }
    let w = mass / (1u64 << level) as f64;
    let atoms = lefts
        .into_iter()
        .map(|l| Atom {
            position: a + (b - a) * l,
            weight: w,
        })
        .collect();
    SignedMeasure::new(atoms, PiecewiseDensity::default(), (a, b))
}

/// Locally BV function `f` with `df = derivative` and `f^R(anchor) = base`.
#[derive(Debug, Clone)]
pub struct BvFunction {
    pub anchor: f64,
    pub base: f64,
    pub derivative: SignedMeasure,
}

/// One-sided limits and their average at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BvValue {
    pub left: f64,
    pub right: f64,
    pub average: f64,
}

impl BvFunction {
    /// Right-continuous distribution function of `m`: `f^R(x) = m((-∞, x])`.
    pub fn cdf_of(m: SignedMeasure) -> Self {
        let anchor = m.support().0 - 1.0;
        Self {
            anchor,
            base: 0.0,
            derivative: m,
        }
    }

    pub fn right(&self, x: f64) -> f64 {
        let m = &self.derivative;
        self.base + m.cdf(x, Side::Right) - m.cdf(self.anchor, Side::Right)
    }

    pub fn left(&self, x: f64) -> f64 {
        let m = &self.derivative;
        self.base + m.cdf(x, Side::Left) - m.cdf(self.anchor, Side::Right)
    }

    pub fn eval(&self, x: f64) -> BvValue {
        let left = self.left(x);
        let right = self.right(x);
        BvValue {
            left,
            right,
            average: 0.5 * (left + right),
        }
    }

    /// Points where `f` may jump or its derivative may be discontinuous.
    pub fn breakpoints(&self) -> Vec<f64> {
        let m = &self.derivative;
        m.atoms()
            .iter()
            .map(|a| a.position)
            .chain(m.density().breakpoints().iter().copied())
            .collect()
    }
}

// ---------------------------------------------------------------------------
// JSON potential specification

/// On-disk potential description.
///
/// ```json
/// {"support": [-1, 1],
///  "atoms": [{"x": 0.0, "w": 2.0}],
///  "density": {"breakpoints": [-0.5, 0.5], "coeffs": [[1, 0, 0, 0]]},
///  "generators": [{"type": "cantor", "level": 6, "mass": 1.0}]}
/// ```
///
/// Density coefficients are in the local variable `t = x - breakpoints[i]`
/// and may list fewer than four entries. Cantor generators default to
/// `[0, 1]` and accept an optional `"interval": [a, b]`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PotentialSpec {
    pub support: [f64; 2],
    #[serde(default)]
    pub atoms: Vec<AtomSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<DensitySpec>,
    #[serde(default)]
    pub generators: Vec<GeneratorSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct AtomSpec {
    pub x: f64,
    pub w: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DensitySpec {
    pub breakpoints: Vec<f64>,
    pub coeffs: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum GeneratorSpec {
    Cantor {
        level: u32,
        mass: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        interval: Option<[f64; 2]>,
    },
}

impl PotentialSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_measure(&self) -> Result<SignedMeasure> {
        let support = (self.support[0], self.support[1]);
        let atoms = self
            .atoms
            .iter()
            .map(|a| Atom {
                position: a.x,
                weight: a.w,
            })
            .collect();
        let density = match &self.density {
            None => PiecewiseDensity::default(),
            Some(d) => {
                let mut coeffs = Vec::with_capacity(d.coeffs.len());
                for (i, c) in d.coeffs.iter().enumerate() {
                    if c.len() > 4 {
                        return Err(Error::InvalidMeasure(format!(
                            "density piece {i} has degree {} > 3",
                            c.len() - 1
                        )));
                    }
                    let mut arr = [0.0; 4];
                    arr[..c.len()].copy_from_slice(c);
                    coeffs.push(arr);
                }
                PiecewiseDensity::new(d.breakpoints.clone(), coeffs)?
            }
        };
        let mut m = SignedMeasure::new(atoms, density, support)?;
        for g in &self.generators {
            match *g {
                GeneratorSpec::Cantor { level, mass, interval } => {
                    let iv = interval.map(|[a, b]| (a, b)).unwrap_or((0.0, 1.0));
                    let c = cantor_approx_on(level, mass, iv)?;
                    if iv.0 < support.0 || iv.1 > support.1 {
                        return Err(Error::InvalidMeasure(format!(
                            "cantor generator on [{}, {}] exceeds support",
                            iv.0, iv.1
                        )));
                    }
                    m = m.combine(&c)?.with_support(support)?;
                }
            }
        }
        Ok(m)
    }
}
