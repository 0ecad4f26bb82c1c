//! Wave equation `∂_t²w - ∂_x²w + V w = 0` on the finite-element grid:
//! leapfrog evolution, local energy, exponential decay fits and the
//! zero-resonance limit profile.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

use crate::carleman::linear_fit;
use crate::error::{Error, Result};
use crate::fem::{DiscreteOperator, Grid};
use crate::linalg::{pencil_eigenvalues_below, pencil_eigenvector, SpdFactor, SymTridiag};
use crate::measure::SignedMeasure;
use crate::scattering::{self, Rect, Resonance};

/// `C^∞` bump `amplitude·exp(1 - 1/(1 - r²))`, `r = (x - center)/radius`.
pub fn bump(center: f64, radius: f64, amplitude: f64) -> impl Fn(f64) -> f64 + Copy {
    move |x| {
        let r = (x - center) / radius;
        if r.abs() >= 1.0 {
            0.0
        } else {
            amplitude * (1.0 - 1.0 / (1.0 - r * r)).exp()
        }
    }
}

/// Bounded solution of `Hu = 0`, if one exists.
#[derive(Debug, Clone, PartialEq)]
pub struct ZeroResonanceState {
    pub exists: bool,
    /// slope to the right of the support of the solution equal to 1 on the left
    pub end_slope: f64,
    /// its value to the right of the support
    pub right_value: f64,
    /// `u₀ = scale·u`, normalized so that the residue of `χRχ` at 0 is
    /// `(i/λ)⟨χu₀, ·⟩χu₀`; zero when no state exists
    pub scale: f64,
    measure: SignedMeasure,
}

impl ZeroResonanceState {
    /// `u₀` at `points` (zero everywhere when no state exists).
    pub fn values(&self, points: &[f64]) -> Result<Vec<f64>> {
        if !self.exists {
            return Ok(vec![0.0; points.len()]);
        }
        Ok(standard_solution(&self.measure, points)?
            .into_iter()
            .map(|u| self.scale * u)
            .collect())
    }
}

/// `λ = 0` solution equal to 1 left of the support, at `points`.
fn standard_solution(m: &SignedMeasure, points: &[f64]) -> Result<Vec<f64>> {
    let (a, _) = m.essential_bounds().unwrap_or((0.0, 0.0));
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&i, &j| points[i].total_cmp(&points[j]));
    let mut out = vec![0.0; points.len()];
    let mut cur = a - 1.0;
    let mut s = [one, zero, zero, zero];
    for i in order {
        if points[i] < cur {
            out[i] = 1.0;
            continue;
        }
        s = scattering::propagate(m, zero, s, cur, points[i])?;
        cur = points[i];
        out[i] = s[0].re;
    }
    Ok(out)
}

pub fn zero_resonance_state(m: &SignedMeasure) -> Result<ZeroResonanceState> {
    let (a, b) = m.essential_bounds().unwrap_or((0.0, 0.0));
    let zero = Complex64::new(0.0, 0.0);
    let s = scattering::propagate(m, zero, [Complex64::new(1.0, 0.0), zero, zero, zero], a - 1.0, b)?;
    let (right, slope) = (s[0].re, s[1].re);
    let exists = slope.abs() <= 1e-8 * right.abs().max(1.0);
    let mut scale = 0.0;
    if exists {
        let (_, dw) = scattering::wronskian_with_derivative(m, zero)?;
        let alpha2 = Complex64::new(0.0, 1.0) / (dw * right);
        if alpha2.im.abs() > 1e-8 * alpha2.norm() || alpha2.re <= 0.0 {
            return Err(Error::Numerical(format!(
                "zero-resonance normalization {alpha2} is not positive"
            )));
        }
        scale = alpha2.re.sqrt();
    }
    Ok(ZeroResonanceState {
        exists,
        end_slope: slope,
        right_value: right,
        scale,
        measure: m.clone(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaveState {
    pub t: f64,
    /// nodal values on all nodes (zero at the walls)
    pub w: Vec<f64>,
    pub v: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveSetup {
    /// `None`: `R + T + 2`
    pub half_width: Option<f64>,
    pub resolution: f64,
    /// `None`: the smallest cell for `Lumped`, half the bound for `Consistent`
    pub dt: Option<f64>,
    /// time between stored states
    pub save_every: f64,
    pub mass: MassKind,
}

/// Mass matrix used by the time stepper. `Lumped` is the row-sum mass with
/// the potential averaged over three time levels, `M_L + (dt²/4)V`: the
/// stencil is strictly local, any `V` is stable at `dt = d` on a uniform grid
/// and free propagation there is exact. `Consistent` is the Galerkin mass,
/// which disperses grid-scale content at near-zero group velocity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MassKind {
    #[default]
    Lumped,
    Consistent,
}

impl Default for WaveSetup {
    fn default() -> Self {
        Self {
            half_width: None,
            resolution: 0.02,
            dt: None,
            save_every: 0.05,
            mass: MassKind::Lumped,
        }
    }
}

/// Velocity-Verlet stepper for `M ẅ = -A w` on interior nodes.
pub struct Stepper {
    a: SymTridiag,
    m: SymTridiag,
    mass: SpdFactor,
    pub dt: f64,
}

impl Stepper {
    pub fn new(op: &DiscreteOperator, kind: MassKind, dt: f64) -> Result<Stepper> {
        let bound = stability_bound(op, kind);
        if !(dt > 0.0) {
            return Err(Error::Cfl { dt, bound });
        }
        let a = op.operator().clone();
        let m = match kind {
            MassKind::Consistent => {
                if dt > bound {
                    return Err(Error::Cfl { dt, bound });
                }
                op.mass().clone()
            }
            MassKind::Lumped => {
                let m = lumped_mass(op.grid().nodes()).scaled_add(0.25 * dt * dt, op.potential());
                // stable iff every eigenvalue of (A, M) lies below 4/dt²
                if m.factor_spd().is_err() || a.sturm_count(&m, 4.0 / (dt * dt)) < a.len() {
                    return Err(Error::Cfl { dt, bound });
                }
                m
            }
        };
        Ok(Stepper {
            mass: m.factor_spd()?,
            a,
            m,
            dt,
        })
    }

    pub fn mass_matrix(&self) -> &SymTridiag {
        &self.m
    }

    fn accel(&self, w: &[f64]) -> Vec<f64> {
        let mut a = self.a.mul_real(w);
        a.iter_mut().for_each(|x| *x = -*x);
        self.mass.solve_in_place(&mut a);
        a
    }

    /// Advance `(w, v, a)` by one step; `a` must hold the current acceleration.
    pub fn step(&self, w: &mut [f64], v: &mut [f64], a: &mut Vec<f64>) {
        let h = self.dt;
        for i in 0..w.len() {
            v[i] += 0.5 * h * a[i];
            w[i] += h * v[i];
        }
        *a = self.accel(w);
        for i in 0..w.len() {
            v[i] += 0.5 * h * a[i];
        }
    }

    /// `½vᵀMv + ½wᵀAw - (dt²/8)(Aw)ᵀM⁻¹(Aw)`, exactly conserved by the scheme.
    pub fn shadow_energy(&self, w: &[f64], v: &[f64]) -> f64 {
        let aw = self.a.mul_real(w);
        let mut maw = aw.clone();
        self.mass.solve_in_place(&mut maw);
        0.5 * dot(v, &self.m.mul_real(v)) + 0.5 * dot(w, &aw) - self.dt * self.dt / 8.0 * dot(&aw, &maw)
    }

    /// `½vᵀMv + ½|wᵀAw|`, the scale against which drift is measured.
    pub fn energy_scale(&self, w: &[f64], v: &[f64]) -> f64 {
        0.5 * dot(v, &self.m.mul_real(v)) + 0.5 * dot(w, &self.a.mul_real(w)).abs()
    }

    /// `M`-orthonormal eigenpairs of `(A, M)` below `threshold`.
    pub fn pairs_below(&self, threshold: f64) -> Result<Vec<(f64, Vec<f64>)>> {
        pencil_pairs(&self.a, &self.m, threshold, 1.0)
    }

    /// Eigenpairs above the top of the free band: lattice bound states that a
    /// repulsive atom pushes out of the discrete spectrum. They have no
    /// continuum counterpart and never radiate.
    pub fn grid_scale_pairs(&self, free: &SymTridiag) -> Result<Vec<(f64, Vec<f64>)>> {
        let top = gershgorin(free, &self.m);
        let full = gershgorin(&self.a, &self.m);
        if full <= top {
            return Ok(Vec::new());
        }
        let neg = SymTridiag::zeros(self.a.len()).scaled_add(-1.0, &self.a);
        pencil_pairs(&neg, &self.m, -top, -1.0)
    }
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// Eigenpairs of `(a, m)` below `threshold`, eigenvalues multiplied by `sign`.
fn pencil_pairs(a: &SymTridiag, m: &SymTridiag, threshold: f64, sign: f64) -> Result<Vec<(f64, Vec<f64>)>> {
    let mut lower = threshold.min(0.0) - 1.0;
    while a.sturm_count(m, lower) > 0 {
        lower *= 2.0;
    }
    let mut pairs: Vec<(f64, Vec<f64>)> = Vec::new();
    for mu in pencil_eigenvalues_below(a, m, lower, threshold, 1e-13) {
        let mut v = pencil_eigenvector(a, m, mu)?;
        deflate(&mut v, m, &pairs);
        let nrm = dot(&v, &m.mul_real(&v)).sqrt();
        v.iter_mut().for_each(|a| *a /= nrm);
        pairs.push((sign * mu, v));
    }
    Ok(pairs)
}

fn lumped_mass(x: &[f64]) -> SymTridiag {
    let n = x.len() - 2;
    SymTridiag {
        diag: (1..x.len() - 1).map(|i| 0.5 * (x[i + 1] - x[i - 1])).collect(),
        off: vec![0.0; n.saturating_sub(1)],
    }
}

/// Default step. `Lumped`: the smallest cell. `Consistent`: `2/√μ` with
/// `μ ≥ λ_max(M⁻¹A)` from Gershgorin on `M_L^{-1/2} A M_L^{-1/2}` and
/// `M ≥ M_L/3` for hat functions.
pub fn stability_bound(op: &DiscreteOperator, kind: MassKind) -> f64 {
    let x = op.grid().nodes();
    match kind {
        MassKind::Lumped => x.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min),
        MassKind::Consistent => 2.0 / (3.0 * gershgorin(op.operator(), &lumped_mass(x))).sqrt(),
    }
}

/// Gershgorin bound on the spectrum of `diag(m)^{-1/2} a diag(m)^{-1/2}`.
fn gershgorin(a: &SymTridiag, m: &SymTridiag) -> f64 {
    let d = &m.diag;
    let n = a.len();
    let mut mu = 0.0f64;
    for i in 0..n {
        let mut s = a.diag[i].abs() / d[i];
        if i > 0 {
            s += a.off[i - 1].abs() / (d[i] * d[i - 1]).sqrt();
        }
        if i + 1 < n {
            s += a.off[i].abs() / (d[i] * d[i + 1]).sqrt();
        }
        mu = mu.max(s);
    }
    mu
}

/// Remove the components along the `mass`-orthonormal `vectors`.
pub fn deflate(x: &mut [f64], mass: &SymTridiag, vectors: &[(f64, Vec<f64>)]) {
    for (_, v) in vectors {
        let mv = mass.mul_real(v);
        let c: f64 = x.iter().zip(&mv).map(|(a, b)| a * b).sum();
        x.iter_mut().zip(v).for_each(|(a, b)| *a -= c * b);
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub grid: Arc<Grid>,
    pub dt: f64,
    pub states: Vec<WaveState>,
    /// `max |H̃(t) - H̃(0)| / max(scale(0), scale(t))` over stored states
    pub energy_drift: f64,
    pub projected: bool,
    pub negative_eigenvalues: Vec<f64>,
    /// eigenvalues of removed lattice bound states above the free band
    pub grid_modes: Vec<f64>,
}

/// Evolve data supported in `(-R, R)` up to `t_final`. With `project`, the
/// data are first projected onto the nonnegative spectral subspace of the
/// discrete pair `(A, mass)`.
#[allow(clippy::too_many_arguments)]
pub fn evolve<F0, F1>(
    m: &SignedMeasure,
    w0: F0,
    w1: F1,
    data_radius: f64,
    t_final: f64,
    project: bool,
    setup: &WaveSetup,
    extra_nodes: &[f64],
) -> Result<Trajectory>
where
    F0: Fn(f64) -> f64,
    F1: Fn(f64) -> f64,
{
    if !(t_final > 0.0) {
        return Err(Error::InvalidArgument {
            field: "T",
            reason: format!("final time must be positive, got {t_final}"),
        });
    }
    let half = setup.half_width.unwrap_or(data_radius + t_final + 2.0);
    if data_radius + t_final >= half {
        return Err(Error::BoxViolation(format!(
            "data radius {data_radius} + T {t_final} reaches the wall at {half}"
        )));
    }
    if m.radius() + 1.0 >= half {
        return Err(Error::BoxViolation(format!(
            "support radius {} does not fit the box",
            m.radius()
        )));
    }
    let mut req = extra_nodes.to_vec();
    req.extend([-data_radius, data_radius]);
    let grid = DiscreteOperator::grid_for(m, half, setup.resolution, &req)?;
    let x = grid.nodes();
    for (i, &xi) in x.iter().enumerate() {
        if xi.abs() >= data_radius && (w0(xi) != 0.0 || w1(xi) != 0.0) {
            return Err(Error::BoxViolation(format!(
                "initial data nonzero at x = {xi} outside (-{data_radius}, {data_radius}) (node {i})"
            )));
        }
    }
    let op = DiscreteOperator::assemble(m, 1.0, grid.clone())?;
    let bound = stability_bound(&op, setup.mass);
    let dt_req = setup.dt.unwrap_or(match setup.mass {
        MassKind::Lumped => bound,
        MassKind::Consistent => 0.5 * bound,
    });
    if !(dt_req > 0.0) {
        return Err(Error::Cfl { dt: dt_req, bound });
    }
    let steps = ((t_final / dt_req) * (1.0 - 1e-12)).ceil() as usize;
    let dt = t_final / steps as f64;
    let stepper = Stepper::new(&op, setup.mass, dt)?;

    let n = x.len();
    let mut w: Vec<f64> = x[1..n - 1].iter().map(|&xi| w0(xi)).collect();
    let mut v: Vec<f64> = x[1..n - 1].iter().map(|&xi| w1(xi)).collect();
    let negative = op.eigenvalues_below(0.0);
    let mut grid_modes = Vec::new();
    let mut removed = Vec::new();
    if project {
        removed = stepper.pairs_below(0.0)?;
        let free = op.operator().scaled_add(-1.0, op.potential());
        grid_modes = stepper.grid_scale_pairs(&free)?;
        removed.extend(grid_modes.iter().cloned());
        deflate(&mut w, stepper.mass_matrix(), &removed);
        deflate(&mut v, stepper.mass_matrix(), &removed);
    }
    let full = |inner: &[f64]| {
        let mut out = Vec::with_capacity(n);
        out.push(0.0);
        out.extend_from_slice(inner);
        out.push(0.0);
        out
    };
    let stride = ((setup.save_every / dt).round() as usize).max(1);
    let e0 = stepper.shadow_energy(&w, &v);
    let scale = stepper.energy_scale(&w, &v).max(f64::MIN_POSITIVE);
    let mut drift = 0.0f64;
    let mut acc = stepper.accel(&w);
    // exact backward Verlet step
    let mut before: Vec<f64> = (0..w.len())
        .map(|i| w[i] - dt * v[i] + 0.5 * dt * dt * acc[i])
        .collect();
    let mut pending = Some((0.0, w.clone(), v.clone(), before.clone()));
    let mut states = Vec::new();
    for k in 1..=steps + 1 {
        before.copy_from_slice(&w);
        stepper.step(&mut w, &mut v, &mut acc);
        // the projector commutes with the dynamics; reapplying it keeps
        // rounding from re-seeding exponentially growing modes
        for x in [&mut w, &mut v, &mut acc] {
            deflate(x, stepper.mass_matrix(), &removed);
        }
        if let Some((t, cur, vel, prev)) = pending.take() {
            // three-level average: removes the (-1)^n checkerboard the lattice
            // supports at the temporal Nyquist frequency
            let avg: Vec<f64> = (0..cur.len()).map(|i| 0.25 * (prev[i] + 2.0 * cur[i] + w[i])).collect();
            states.push(WaveState {
                t,
                w: full(&avg),
                v: full(&vel),
            });
        }
        if k <= steps && (k % stride == 0 || k == steps) {
            let scale = scale.max(stepper.energy_scale(&w, &v));
            drift = drift.max((stepper.shadow_energy(&w, &v) - e0).abs() / scale);
            pending = Some((k as f64 * dt, w.clone(), v.clone(), before.clone()));
        }
    }
    Ok(Trajectory {
        grid,
        dt,
        states,
        energy_drift: drift,
        projected: project,
        negative_eigenvalues: negative,
        grid_modes: grid_modes.iter().map(|p| p.0).collect(),
    })
}

/// Exact `∫_{[p,q]} (|f|², |f'|²)` of the piecewise-linear `f` over the part
/// of each cell inside `[-r, r]`.
fn window_norms(x: &[f64], f: &[f64], r: f64) -> (f64, f64) {
    let (mut l2, mut d2) = (0.0, 0.0);
    for i in 0..x.len() - 1 {
        let (p, q) = (x[i].max(-r), x[i + 1].min(r));
        if q <= p {
            continue;
        }
        let d = x[i + 1] - x[i];
        let slope = (f[i + 1] - f[i]) / d;
        let fp = f[i] + slope * (p - x[i]);
        let fq = f[i] + slope * (q - x[i]);
        l2 += (q - p) / 3.0 * (fp * fp + fp * fq + fq * fq);
        d2 += (q - p) * slope * slope;
    }
    (l2, d2)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyTrace {
    pub r1: f64,
    pub times: Vec<f64>,
    pub energies: Vec<f64>,
}

/// `‖w(t) - w_∞‖²_{H¹(-R₁,R₁)} + ‖∂_t w(t)‖²_{L²(-R₁,R₁)}` per stored state.
pub fn local_energy_trace(traj: &Trajectory, r1: f64, w_inf: Option<&[f64]>) -> Result<EnergyTrace> {
    if !(r1 > 0.0 && r1 < traj.grid.half_width()) {
        return Err(Error::InvalidArgument {
            field: "R1",
            reason: format!("window radius {r1} must lie in (0, box)"),
        });
    }
    let x = traj.grid.nodes();
    let mut energies = Vec::with_capacity(traj.states.len());
    for s in &traj.states {
        let e: Vec<f64> = match w_inf {
            Some(wi) => s.w.iter().zip(wi).map(|(a, b)| a - b).collect(),
            None => s.w.clone(),
        };
        let (l2, d2) = window_norms(x, &e, r1);
        let (v2, _) = window_norms(x, &s.v, r1);
        energies.push(l2 + d2 + v2);
    }
    Ok(EnergyTrace {
        r1,
        times: traj.states.iter().map(|s| s.t).collect(),
        energies,
    })
}

/// `‖w(T) - w_∞‖_{H¹(-R₁,R₁)}` for the last stored state.
pub fn final_h1_distance(traj: &Trajectory, r1: f64, w_inf: &[f64]) -> f64 {
    let s = traj.states.last().expect("trajectory has states");
    let e: Vec<f64> = s.w.iter().zip(w_inf).map(|(a, b)| a - b).collect();
    let (l2, d2) = window_norms(traj.grid.nodes(), &e, r1);
    (l2 + d2).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    /// fitted rate in `energy ≈ C e^{-c t}`
    pub rate: f64,
    pub prefactor: f64,
    pub window: (f64, f64),
    pub r_squared: f64,
}

impl DecayFit {
    pub fn decays(&self) -> bool {
        self.rate > 0.0 && self.r_squared >= 0.9
    }
}

pub fn fit_decay(trace: &EnergyTrace, window: (f64, f64)) -> Result<DecayFit> {
    let (t, y): (Vec<f64>, Vec<f64>) = trace
        .times
        .iter()
        .zip(&trace.energies)
        .filter(|(t, _)| **t >= window.0 && **t <= window.1)
        .map(|(t, e)| (*t, *e))
        .unzip();
    if t.len() < 3 {
        return Err(Error::InvalidArgument {
            field: "window",
            reason: format!("fewer than 3 samples in [{}, {}]", window.0, window.1),
        });
    }
    if let Some(e) = y.iter().find(|e| !(**e > 0.0)) {
        return Err(Error::Numerical(format!("nonpositive energy {e} in fit window")));
    }
    let ly: Vec<f64> = y.iter().map(|e| e.ln()).collect();
    let (slope, intercept, r2) = linear_fit(&t, &ly);
    Ok(DecayFit {
        rate: -slope,
        prefactor: intercept.exp(),
        window,
        r_squared: r2,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedReport {
    pub zero_resonance: bool,
    pub w_inf_h1_norm: f64,
    /// `‖w(T) - w_∞‖_{H¹(-R₁,R₁)}`
    pub final_distance: f64,
    pub fit: DecayFit,
    pub decays: bool,
    pub negative_eigenvalues: Vec<f64>,
    pub projected: bool,
    pub energy_drift: f64,
    pub slowest_resonance: Option<Resonance>,
    /// `c / (2|Im λ|)` for the slowest resonance
    pub rate_ratio: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LedOptions {
    pub project: bool,
    /// `None`: `2(R + R₁)`
    pub fit_start: Option<f64>,
    /// resonance search `[-re_max, re_max] × [-depth, -0.01]`
    pub re_max: f64,
    pub depth: f64,
    pub setup: WaveSetup,
}

impl Default for LedOptions {
    fn default() -> Self {
        Self {
            project: true,
            fit_start: None,
            re_max: 10.0,
            depth: 3.0,
            setup: WaveSetup::default(),
        }
    }
}

/// Evolve, trace the local energy against `w_∞`, fit the decay and compare
/// with the resonance closest to the real axis.
pub fn led_experiment<F0, F1>(
    m: &SignedMeasure,
    w0: F0,
    w1: F1,
    data_radius: f64,
    r1: f64,
    t_final: f64,
    opts: &LedOptions,
) -> Result<(LedReport, EnergyTrace)>
where
    F0: Fn(f64) -> f64,
    F1: Fn(f64) -> f64,
{
    let traj = evolve(m, w0, &w1, data_radius, t_final, opts.project, &opts.setup, &[-r1, r1])?;
    let x = traj.grid.nodes();
    let zr = zero_resonance_state(m)?;
    let w_inf = if zr.exists {
        let u0 = zr.values(x)?;
        let g1: Vec<f64> = x.iter().map(|&xi| w1(xi)).collect();
        let coef = p1_inner(x, &u0, &g1);
        u0.iter().map(|u| u * coef).collect()
    } else {
        vec![0.0; x.len()]
    };
    let trace = local_energy_trace(&traj, r1, Some(&w_inf))?;
    let start = opts.fit_start.unwrap_or(2.0 * (data_radius + r1));
    let fit = fit_decay(&trace, (start, t_final))?;
    let (l2, d2) = window_norms(x, &w_inf, r1);
    let rect = Rect::new((-opts.re_max, opts.re_max), (-opts.depth, -0.01));
    let slowest = scattering::find_resonances(m, rect)?
        .into_iter()
        .max_by(|a, b| a.lambda.im.total_cmp(&b.lambda.im));
    let rate_ratio = slowest.map(|r| fit.rate / (2.0 * r.lambda.im.abs()));
    Ok((
        LedReport {
            zero_resonance: zr.exists,
            w_inf_h1_norm: (l2 + d2).sqrt(),
            final_distance: final_h1_distance(&traj, r1, &w_inf),
            decays: fit.decays(),
            fit,
            negative_eigenvalues: traj.negative_eigenvalues.clone(),
            projected: traj.projected,
            energy_drift: traj.energy_drift,
            slowest_resonance: slowest,
            rate_ratio,
        },
        trace,
    ))
}

/// `∫ f g` for piecewise-linear nodal `f`, `g`.
fn p1_inner(x: &[f64], f: &[f64], g: &[f64]) -> f64 {
    (0..x.len() - 1)
        .map(|i| {
            let d = x[i + 1] - x[i];
            d / 6.0 * (2.0 * f[i] * g[i] + f[i] * g[i + 1] + f[i + 1] * g[i] + 2.0 * f[i + 1] * g[i + 1])
        })
        .sum()
}
