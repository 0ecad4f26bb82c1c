//! Explicit Carleman constants and weights, and numerical checks of the
//! weighted Carleman estimate, the limiting-absorption resolvent bound and
//! the exterior `C/h` bound on finite-element discretizations.
//!
//! Constants grow like `e^{C/h}`, so they are carried as natural logs.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::{weighted_resolvent_norm, Absorber, DiscreteOperator, H1Function, DEFAULT_BOX_MARGIN};
use crate::measure::SignedMeasure;
use crate::par::{self, ExecMode};

/// Energy-window distance below which an `ε = 0` run is skipped.
pub const EIGEN_PROXIMITY: f64 = 1e-4;

fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CarlemanConstants {
    pub tv: f64,
    pub energy: f64,
    pub h: f64,
    pub delta: f64,
    /// `2/δ + ‖V‖/(√E h)`
    pub c1: f64,
    /// `ln C`, derivation-consistent grouping
    pub ln_c: f64,
    /// `ln C` with the printed grouping (no `e^{C₁}` on `4/h²`)
    pub ln_c_literal: f64,
}

impl CarlemanConstants {
    pub fn c(&self) -> f64 {
        self.ln_c.exp()
    }

    /// `ln` of the dominant term `e^{C₁}·4e^{C₁}/h²`.
    pub fn ln_dominant(&self) -> f64 {
        2.0 * self.c1 + 4f64.ln() - 2.0 * self.h.ln()
    }

    /// `ln (C/E)^{1/2}`, the limiting-absorption bound.
    pub fn ln_resolvent_bound(&self) -> f64 {
        0.5 * (self.ln_c - self.energy.ln())
    }
}

pub fn constants(tv: f64, energy: f64, h: f64, delta: f64) -> Result<CarlemanConstants> {
    for (field, v) in [("E", energy), ("h", h), ("delta", delta)] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::InvalidArgument {
                field,
                reason: format!("must be positive, got {v}"),
            });
        }
    }
    if !(tv >= 0.0) {
        return Err(Error::InvalidArgument {
            field: "tv",
            reason: format!("must be nonnegative, got {tv}"),
        });
    }
    let c1 = 2.0 / delta + tv / (energy.sqrt() * h);
    let k = (2.0 + 2.0 * energy + tv * tv / (h * h)).powi(2) / (energy * h * h);
    let ln_h = h.ln();
    let tail = [2f64.ln() - ln_h, k.ln() + c1];
    let ln_c = c1 + log_sum_exp(&[c1 + 4f64.ln() - 2.0 * ln_h, tail[0], tail[1]]);
    let ln_c_literal = c1 + log_sum_exp(&[4f64.ln() - 2.0 * ln_h, tail[0], tail[1]]);
    Ok(CarlemanConstants {
        tv,
        energy,
        h,
        delta,
        c1,
        ln_c,
        ln_c_literal,
    })
}

/// Smallest `C̃` with `C̃(1+‖V‖)/h ≥ ln C` on the sampled `(h, ‖V‖)` grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub energy: f64,
    pub delta: f64,
    pub c_tilde: f64,
    pub h_range: (f64, f64),
    pub tv_max: f64,
}

impl Calibration {
    /// `ln` of the envelope `exp(C̃(1+‖V‖)/h)`.
    pub fn ln_envelope(&self, tv: f64, h: f64) -> f64 {
        self.c_tilde * (1.0 + tv) / h
    }
}

/// Calibrate over `h ∈ [10⁻², 1]` (log grid) and `‖V‖ ∈ [0, tv_max]`.
pub fn calibrate_c_tilde(energy: f64, delta: f64, tv_max: f64) -> Result<Calibration> {
    let hs: Vec<f64> = (0..=200).map(|i| 10f64.powf(-2.0 + 2.0 * i as f64 / 200.0)).collect();
    let tvs: Vec<f64> = (0..=100).map(|i| tv_max * i as f64 / 100.0).collect();
    let mut c_tilde = 0.0f64;
    for &h in &hs {
        for &tv in &tvs {
            let k = constants(tv, energy, h, delta)?;
            c_tilde = c_tilde.max(h * k.ln_c / (1.0 + tv));
        }
    }
    Ok(Calibration {
        energy,
        delta,
        c_tilde,
        h_range: (1e-2, 1.0),
        tv_max,
    })
}

/// `∫_{-∞}^x (|t|+1)^{-1-δ} dt`.
pub fn poly_weight_integral(x: f64, delta: f64) -> f64 {
    if x <= 0.0 {
        (1.0 - x).powf(-delta) / delta
    } else {
        (2.0 - (1.0 + x).powf(-delta)) / delta
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightProfile {
    pub eta: f64,
    pub energy: f64,
    pub h: f64,
    pub delta: f64,
    pub points: Vec<f64>,
    /// `ln w_η` at each point
    pub exponents: Vec<f64>,
}

impl WeightProfile {
    pub fn values(&self) -> Vec<f64> {
        self.exponents.iter().map(|e| e.exp()).collect()
    }

    pub fn max_exponent(&self) -> f64 {
        self.exponents.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Exponent of `w_η` at `x`.
pub fn weight_exponent(m: &SignedMeasure, energy: f64, h: f64, delta: f64, eta: f64, x: f64) -> f64 {
    let s = 1.0 / (energy.sqrt() * h);
    s * (m.continuous_variation_cdf(x) + m.smoothed_atoms_cdf(eta, x)) + poly_weight_integral(x, delta)
}

pub fn weight_eta(
    m: &SignedMeasure,
    energy: f64,
    h: f64,
    delta: f64,
    eta: f64,
    points: &[f64],
) -> Result<WeightProfile> {
    if !(eta > 0.0) {
        return Err(Error::InvalidArgument {
            field: "eta",
            reason: format!("must be positive, got {eta}"),
        });
    }
    constants(m.total_variation(), energy, h, delta)?;
    Ok(WeightProfile {
        eta,
        energy,
        h,
        delta,
        points: points.to_vec(),
        exponents: points
            .iter()
            .map(|&x| weight_exponent(m, energy, h, delta, eta, x))
            .collect(),
    })
}

/// Pointwise energy `F = |hu'|² + E|u|²` on cells (midpoint value of `|u|²`
/// averaged from the nodes).
pub fn energy_density(u: &H1Function, h: f64, energy: f64) -> Vec<f64> {
    let x = u.grid.nodes();
    (0..x.len() - 1)
        .map(|i| {
            let d = x[i + 1] - x[i];
            let du = (u.values[i + 1] - u.values[i]) / d;
            h * h * du.norm_sqr() + energy * 0.5 * (u.values[i].norm_sqr() + u.values[i + 1].norm_sqr())
        })
        .collect()
}

/// When the complex absorbing layer is used.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum AbsorbMode {
    /// Only for `ε < 0.05`.
    #[default]
    Auto,
    Always,
    Never,
}

/// Box, resolution and absorbing layer for the finite-element checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Discretization {
    /// `None`: `min(0.05, 0.1·h/√E)`
    pub resolution: Option<f64>,
    /// box half width is `R₀ + box_margin`
    pub box_margin: f64,
    pub absorber_width: f64,
    /// `None`: `E`
    pub absorber_strength: Option<f64>,
    pub absorb: AbsorbMode,
}

impl Default for Discretization {
    fn default() -> Self {
        Self {
            resolution: None,
            box_margin: DEFAULT_BOX_MARGIN,
            absorber_width: 15.0,
            absorber_strength: None,
            absorb: AbsorbMode::Auto,
        }
    }
}

/// Assembled problem for one `(V, h, E, ε)`.
pub struct Setup {
    pub op: DiscreteOperator,
    pub absorber: Option<Absorber>,
    pub resolution: f64,
    /// nodes with `|x| ≤ physical` lie outside the absorbing layer
    pub physical: f64,
}

impl Discretization {
    pub fn resolution_for(&self, h: f64, energy: f64) -> f64 {
        self.resolution.unwrap_or_else(|| (0.1 * h / energy.sqrt()).min(0.05))
    }

    pub fn setup(&self, m: &SignedMeasure, h: f64, energy: f64, eps: f64, extra_nodes: &[f64]) -> Result<Setup> {
        let res = self.resolution_for(h, energy);
        let half = m.radius() + self.box_margin;
        let grid = DiscreteOperator::grid_for(m, half, res, extra_nodes)?;
        let op = DiscreteOperator::assemble(m, h, grid)?;
        let use_abs = match self.absorb {
            AbsorbMode::Always => true,
            AbsorbMode::Never => false,
            AbsorbMode::Auto => eps < 0.05,
        };
        let absorber =
            use_abs.then(|| Absorber::outer_layer(half, self.absorber_width, self.absorber_strength.unwrap_or(energy)));
        let physical = absorber.map(|a| a.start).unwrap_or(half);
        Ok(Setup {
            op,
            absorber,
            resolution: res,
            physical,
        })
    }
}

impl Setup {
    /// `(|x|+1)^{-(1+δ)/2}` on physical nodes (interior), zero in the layer.
    pub fn decay_weight(&self, delta: f64, exterior_of: Option<f64>) -> Vec<f64> {
        let x = self.op.grid().nodes();
        x[1..x.len() - 1]
            .iter()
            .map(|&xi| {
                let inside = xi.abs() <= self.physical;
                let ext = exterior_of.is_none_or(|r| xi.abs() > r);
                if inside && ext {
                    (xi.abs() + 1.0).powf(-(1.0 + delta) / 2.0)
                } else {
                    0.0
                }
            })
            .collect()
    }

    /// Whether a Dirichlet eigenvalue of the unabsorbed box lies within
    /// [`EIGEN_PROXIMITY`] of `energy`.
    pub fn near_box_eigenvalue(&self, energy: f64) -> bool {
        let a = self.op.operator();
        let m = self.op.mass();
        a.sturm_count(m, energy + EIGEN_PROXIMITY) != a.sturm_count(m, energy - EIGEN_PROXIMITY)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    /// Spectral parameter `z` with `P - z = P - E ± iε`.
    pub fn shift(self, energy: f64, eps: f64) -> Complex64 {
        match self {
            Sign::Plus => Complex64::new(energy, -eps),
            Sign::Minus => Complex64::new(energy, eps),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Sign::Plus => "+",
            Sign::Minus => "-",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CarlemanReport {
    pub energy: f64,
    pub eps: f64,
    pub h: f64,
    pub delta: f64,
    pub sign: Sign,
    pub resolution: f64,
    pub constants: CarlemanConstants,
    pub lhs: f64,
    /// `ln` of the right side `C ∫(|x|+1)^{1+δ}|f|²`
    pub ln_rhs: f64,
    pub ratio: f64,
    /// reason the run was skipped, if it was
    pub skipped: Option<String>,
}

impl CarlemanReport {
    pub fn tolerance(&self) -> f64 {
        1.0 + 10.0 * self.resolution * self.resolution
    }

    pub fn passed(&self) -> bool {
        self.skipped.is_some() || self.ratio <= self.tolerance()
    }
}

/// Weighted node/cell quadratures shared by the checks.
fn weighted_sums(u: &H1Function, f: Option<&H1Function>, h: f64, energy: f64, delta: f64) -> (f64, f64) {
    let x = u.grid.nodes();
    let tw = u.grid.trapezoid_weights();
    let inner = |xi: f64| (xi.abs() + 1.0).powf(-1.0 - delta);
    let outer = |xi: f64| (xi.abs() + 1.0).powf(1.0 + delta);
    let mut lhs: f64 = x
        .iter()
        .zip(&tw)
        .zip(&u.values)
        .map(|((&xi, w), v)| w * inner(xi) * energy * v.norm_sqr())
        .sum();
    for i in 0..x.len() - 1 {
        let d = x[i + 1] - x[i];
        let du = (u.values[i + 1] - u.values[i]) / d;
        lhs += d * 0.5 * (inner(x[i]) + inner(x[i + 1])) * h * h * du.norm_sqr();
    }
    let rhs = f.map_or(0.0, |f| {
        x.iter()
            .zip(&tw)
            .zip(&f.values)
            .map(|((&xi, w), v)| w * outer(xi) * v.norm_sqr())
            .sum()
    });
    (lhs, rhs)
}

/// Solve `(P - E ± iε)u = f` on the grid and compare both sides of the
/// weighted Carleman estimate. `f` is given as a function sampled at nodes.
#[allow(clippy::too_many_arguments)]
pub fn carleman_check<F: Fn(f64) -> Complex64>(
    m: &SignedMeasure,
    energy: f64,
    eps: f64,
    h: f64,
    delta: f64,
    sign: Sign,
    f: F,
    disc: &Discretization,
) -> Result<CarlemanReport> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::InvalidArgument {
            field: "eps",
            reason: format!("must lie in [0, 1], got {eps}"),
        });
    }
    let constants = constants(m.total_variation(), energy, h, delta)?;
    let setup = disc.setup(m, h, energy, eps, &[])?;
    let mut report = CarlemanReport {
        energy,
        eps,
        h,
        delta,
        sign,
        resolution: setup.resolution,
        constants,
        lhs: 0.0,
        ln_rhs: f64::NEG_INFINITY,
        ratio: 0.0,
        skipped: None,
    };
    if eps == 0.0 && setup.near_box_eigenvalue(energy) {
        report.skipped = Some(format!("box eigenvalue within {EIGEN_PROXIMITY} of E = {energy}"));
        return Ok(report);
    }
    let grid = setup.op.grid().clone();
    let fh = H1Function::from_fn(&grid, &f);
    let edge = grid.nodes()[1].abs().min(setup.physical);
    if fh
        .values
        .iter()
        .zip(grid.nodes())
        .any(|(v, x)| v.norm() > 0.0 && x.abs() >= edge)
    {
        return Err(Error::InvalidArgument {
            field: "f",
            reason: "data must be supported inside the physical box".into(),
        });
    }
    let z = sign.shift(energy, eps);
    let solver = setup.op.resolvent_solver(z, setup.absorber.as_ref())?;
    let ui = solver.apply(fh.interior());
    let res = solver.residual(fh.interior(), &ui);
    if res > crate::fem::RESOLVENT_RESIDUAL_TOL {
        return Err(Error::IllConditioned {
            residual: res,
            tolerance: crate::fem::RESOLVENT_RESIDUAL_TOL,
            condition: solver.condition(),
        });
    }
    let u = setup.op.from_interior(ui);
    let (lhs, rhs) = weighted_sums(&u, Some(&fh), h, energy, delta);
    report.lhs = lhs;
    report.ln_rhs = constants.ln_c + rhs.ln();
    report.ratio = if lhs == 0.0 {
        0.0
    } else {
        (lhs.ln() - report.ln_rhs).exp()
    };
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolventBoundReport {
    pub energy: f64,
    pub eps: f64,
    pub h: f64,
    pub delta: f64,
    pub sign: Sign,
    pub resolution: f64,
    pub measured_norm: f64,
    /// `ln (C/E)^{1/2}`
    pub ln_paper_bound: f64,
    pub ratio: f64,
    pub skipped: Option<String>,
}

impl ResolventBoundReport {
    pub fn passed(&self) -> bool {
        self.skipped.is_some() || self.ratio <= 1.0
    }
}

/// Power-iteration tolerance and cap for weighted norms.
pub const NORM_TOL: f64 = 1e-6;
pub const NORM_MAX_ITER: usize = 3000;

/// `‖w_δ (P - E ± iε)⁻¹ w_δ‖` on the discretization against `(C/E)^{1/2}`.
pub fn resolvent_bound_check(
    m: &SignedMeasure,
    energy: f64,
    eps: f64,
    h: f64,
    delta: f64,
    sign: Sign,
    disc: &Discretization,
) -> Result<ResolventBoundReport> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::InvalidArgument {
            field: "eps",
            reason: format!("must lie in [0, 1], got {eps}"),
        });
    }
    let k = constants(m.total_variation(), energy, h, delta)?;
    let setup = disc.setup(m, h, energy, eps, &[])?;
    let mut report = ResolventBoundReport {
        energy,
        eps,
        h,
        delta,
        sign,
        resolution: setup.resolution,
        measured_norm: 0.0,
        ln_paper_bound: k.ln_resolvent_bound(),
        ratio: 0.0,
        skipped: None,
    };
    if eps == 0.0 && setup.near_box_eigenvalue(energy) {
        report.skipped = Some(format!("box eigenvalue within {EIGEN_PROXIMITY} of E = {energy}"));
        return Ok(report);
    }
    let solver = setup
        .op
        .resolvent_solver(sign.shift(energy, eps), setup.absorber.as_ref())?;
    let w = setup.decay_weight(delta, None);
    let norm = weighted_resolvent_norm(&solver, &w, &w, NORM_TOL, NORM_MAX_ITER);
    report.measured_norm = norm;
    report.ratio = (norm.ln() - report.ln_paper_bound).exp();
    Ok(report)
}

/// `h₀ = 1/(2δ(1+R₀)^δ)`.
pub fn exterior_h0(delta: f64, r0: f64) -> f64 {
    0.5 / (delta * (1.0 + r0).powf(delta))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExteriorRow {
    pub h: f64,
    pub norm: f64,
    pub norm_times_h: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExteriorReport {
    pub r0: f64,
    pub h0: f64,
    pub energy: f64,
    pub eps: f64,
    pub delta: f64,
    pub rows: Vec<ExteriorRow>,
    /// least-squares slope of `ln norm` against `ln h`
    pub slope: f64,
    /// `max norm·h`
    pub constant: f64,
}

impl ExteriorReport {
    pub fn slope_in_band(&self) -> bool {
        (-1.15..=-0.85).contains(&self.slope)
    }
}

/// Least-squares `(slope, intercept, R²)` of `y` against `x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, my - slope * mx, r2)
}

/// Exterior weighted norms `‖w_δ 1_{|x|>R₀} R 1_{|x|>R₀} w_δ‖` over `hs`.
#[allow(clippy::too_many_arguments)]
pub fn exterior_scan(
    m: &SignedMeasure,
    energy: f64,
    eps: f64,
    delta: f64,
    hs: &[f64],
    sign: Sign,
    disc: &Discretization,
    mode: ExecMode,
) -> Result<ExteriorReport> {
    let r0 = m.radius();
    let h0 = exterior_h0(delta, r0);
    if hs.is_empty() {
        return Err(Error::InvalidArgument {
            field: "h",
            reason: "h grid empty".into(),
        });
    }
    if let Some(&h) = hs.iter().find(|&&h| !(h > 0.0)) {
        return Err(Error::InvalidArgument {
            field: "h",
            reason: format!("must be positive, got {h}"),
        });
    }
    if let Some(&h) = hs.iter().find(|&&h| h > h0 * (1.0 + 1e-12)) {
        return Err(Error::InvalidArgument {
            field: "h",
            reason: format!("h exceeds h₀ = {h0} (h = {h})"),
        });
    }
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::InvalidArgument {
            field: "eps",
            reason: format!("must lie in (0, 1], got {eps}"),
        });
    }
    let rows = par::map(mode, hs, |&h| -> Result<ExteriorRow> {
        let setup = disc.setup(m, h, energy, eps, &[-r0, r0])?;
        let solver = setup
            .op
            .resolvent_solver(sign.shift(energy, eps), setup.absorber.as_ref())?;
        let w = setup.decay_weight(delta, Some(r0));
        let norm = weighted_resolvent_norm(&solver, &w, &w, NORM_TOL, NORM_MAX_ITER);
        Ok(ExteriorRow {
            h,
            norm,
            norm_times_h: norm * h,
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let (slope, constant) = if rows.len() >= 2 {
        let lx: Vec<f64> = rows.iter().map(|r| r.h.ln()).collect();
        let ly: Vec<f64> = rows.iter().map(|r| r.norm.ln()).collect();
        (
            linear_fit(&lx, &ly).0,
            rows.iter().map(|r| r.norm_times_h).fold(0.0, f64::max),
        )
    } else {
        (f64::NAN, rows[0].norm_times_h)
    };
    Ok(ExteriorReport {
        r0,
        h0,
        energy,
        eps,
        delta,
        rows,
        slope,
        constant,
    })
}

/// `e^x - 1 - x e^{x/2} = 2e^{x/2}(sinh(x/2) - x/2)`, stable near 0.
pub fn scalar_gap(x: f64) -> f64 {
    let y = 0.5 * x;
    let sinh_minus = if y.abs() < 0.1 {
        let y2 = y * y;
        // y³/3! + y⁵/5! + y⁷/7! + y⁹/9!
        y * y2 * (1.0 / 6.0 + y2 * (1.0 / 120.0 + y2 * (1.0 / 5040.0 + y2 / 362880.0)))
    } else {
        y.sinh() - y
    };
    2.0 * y.exp() * sinh_minus
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarReport {
    pub points: usize,
    pub value_at_zero: f64,
    pub min_positive_value: f64,
    pub passed: bool,
}

/// `e^x - 1 - x e^{x/2} ≥ 0` on a log grid of `(0, 50]` with equality at 0.
pub fn scalar_inequality_check() -> ScalarReport {
    let n = 4000;
    let xs = (0..n).map(|i| 10f64.powf(-8.0 + (8.0 + 50f64.log10()) * i as f64 / (n - 1) as f64));
    let min = xs.map(scalar_gap).fold(f64::INFINITY, f64::min);
    let v0 = scalar_gap(0.0);
    ScalarReport {
        points: n + 1,
        value_at_zero: v0,
        min_positive_value: min,
        passed: v0 == 0.0 && min > 0.0,
    }
}

/// `E(h)`; constant by default.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Energy {
    Constant {
        value: f64,
    },
    /// `e0 · h^power`
    Power {
        e0: f64,
        power: f64,
    },
}

impl Energy {
    pub fn at(&self, h: f64) -> f64 {
        match *self {
            Energy::Constant { value } => value,
            Energy::Power { e0, power } => e0 * h.powf(power),
        }
    }
}
