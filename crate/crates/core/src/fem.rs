//! Hat-function discretization of the quadratic form
//! `q(u, v) = ∫ h² ū' v' dx + ∫ ū v dV` on a Dirichlet box `[-L, L]`.
//!
//! Hat functions are continuous, so atoms contribute the exact point values
//! `φ_i(x_j) φ_k(x_j) V_j`. All matrices are stored on interior nodes only.

use num_complex::Complex64;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{pencil_eigenvalues_below, pencil_eigenvector, SymTridiag, Tridiag, TridiagLu};
use crate::measure::SignedMeasure;
use crate::quad::GaussLegendre;

/// Default truncation margin beyond the support radius.
pub const DEFAULT_BOX_MARGIN: f64 = 40.0;
/// Relative residual accepted from a resolvent solve.
pub const RESOLVENT_RESIDUAL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    nodes: Vec<f64>,
}

impl Grid {
    /// Nodes on `[-L, L]` containing every point of `required`, uniform
    /// between consecutive required points with spacing at most `resolution`.
    pub fn build(support_radius: f64, half_width: f64, resolution: f64, required: &[f64]) -> Result<Grid> {
        if !(resolution > 0.0) || !resolution.is_finite() {
            return Err(Error::InvalidArgument {
                field: "resolution",
                reason: format!("must be positive, got {resolution}"),
            });
        }
        if !(half_width > support_radius + 1.0) {
            return Err(Error::InvalidArgument {
                field: "box",
                reason: format!(
                    "half width {half_width} must exceed support radius + 1 = {}",
                    support_radius + 1.0
                ),
            });
        }
        if let Some(&p) = required.iter().find(|p| p.abs() >= half_width) {
            return Err(Error::InvalidArgument {
                field: "atoms",
                reason: format!("point {p} lies outside the box (-{half_width}, {half_width})"),
            });
        }
        let mut breaks: Vec<f64> = Vec::with_capacity(required.len() + 2);
        breaks.push(-half_width);
        breaks.extend_from_slice(required);
        breaks.push(half_width);
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        let mut nodes = vec![-half_width];
        for w in breaks.windows(2) {
            let cells = ((w[1] - w[0]) / resolution * (1.0 - 1e-12)).ceil().max(1.0) as usize;
            let step = (w[1] - w[0]) / cells as f64;
            nodes.extend((1..cells).map(|i| w[0] + step * i as f64));
            nodes.push(w[1]);
        }
        nodes.dedup();
        Ok(Grid { nodes })
    }

    /// Grid from explicit nodes (must be strictly increasing).
    pub fn from_nodes(nodes: Vec<f64>) -> Result<Grid> {
        if nodes.len() < 3 || nodes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument {
                field: "nodes",
                reason: "need at least 3 strictly increasing nodes".into(),
            });
        }
        Ok(Grid { nodes })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn half_width(&self) -> f64 {
        self.nodes[self.nodes.len() - 1].max(-self.nodes[0])
    }

    pub fn max_spacing(&self) -> f64 {
        self.nodes.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    /// Index of the node equal to `x`, if any.
    pub fn node_index(&self, x: f64) -> Option<usize> {
        let k = self.nodes.partition_point(|&n| n < x);
        (k < self.nodes.len() && self.nodes[k] == x).then_some(k)
    }

    /// Trapezoid weights `∫ g ≈ Σ_i w_i g(x_i)` on the nodes.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let n = self.nodes.len();
        let mut w = vec![0.0; n];
        for i in 0..n - 1 {
            let d = self.nodes[i + 1] - self.nodes[i];
            w[i] += 0.5 * d;
            w[i + 1] += 0.5 * d;
        }
        w
    }
}

/// Stiffness, mass and potential matrices of the full node set.
#[derive(Debug, Clone)]
pub struct FormMatrices {
    pub stiffness: SymTridiag,
    pub mass: SymTridiag,
    pub potential: SymTridiag,
}

impl FormMatrices {
    pub fn assemble(m: &SignedMeasure, grid: &Grid) -> FormMatrices {
        let x = grid.nodes();
        let n = x.len();
        let mut stiffness = SymTridiag::zeros(n);
        let mut mass = SymTridiag::zeros(n);
        for i in 0..n - 1 {
            let d = x[i + 1] - x[i];
            stiffness.diag[i] += 1.0 / d;
            stiffness.diag[i + 1] += 1.0 / d;
            stiffness.off[i] -= 1.0 / d;
            mass.diag[i] += d / 3.0;
            mass.diag[i + 1] += d / 3.0;
            mass.off[i] += d / 6.0;
        }
        let potential = weighted_mass(grid, m, |_| 1.0);
        FormMatrices {
            stiffness,
            mass,
            potential,
        }
    }
}

/// `∫ φ_i φ_j g dm` for the hat basis: atoms exactly, density by
/// Gauss–Legendre on each cell split at density breakpoints.
fn weighted_mass<G: Fn(f64) -> f64>(grid: &Grid, m: &SignedMeasure, g: G) -> SymTridiag {
    let x = grid.nodes();
    let n = x.len();
    let mut out = SymTridiag::zeros(n);
    for atom in m.atoms() {
        let p = atom.position;
        if p < x[0] || p > x[n - 1] {
            continue;
        }
        let k = x.partition_point(|&v| v <= p).clamp(1, n - 1) - 1;
        let d = x[k + 1] - x[k];
        let s = (p - x[k]) / d;
        let (a, b) = (1.0 - s, s);
        let w = atom.weight * g(p);
        out.diag[k] += a * a * w;
        out.diag[k + 1] += b * b * w;
        out.off[k] += a * b * w;
    }
    let dens = m.density();
    if dens.is_zero() {
        return out;
    }
    let gl = GaussLegendre::new(4);
    let bps = dens.breakpoints();
    for k in 0..n - 1 {
        let (lo, hi) = (x[k], x[k + 1]);
        let d = hi - lo;
        if let Some((a, b)) = dens.bounds() {
            if hi <= a || lo >= b {
                continue;
            }
        }
        let mut cuts: Vec<f64> = bps.iter().copied().filter(|&c| c > lo && c < hi).collect();
        cuts.sort_by(f64::total_cmp);
        let mut seg = vec![lo];
        seg.extend(cuts);
        seg.push(hi);
        for w in seg.windows(2) {
            let (a, b) = (w[0], w[1]);
            let mid = 0.5 * (a + b);
            let rho = |t: f64| {
                // evaluate on the piece containing the sub-segment midpoint
                dens_value_near(dens, t, mid) * g(t)
            };
            out.diag[k] += gl.integrate(a, b, |t| {
                let s = 1.0 - (t - lo) / d;
                s * s * rho(t)
            });
            out.diag[k + 1] += gl.integrate(a, b, |t| {
                let s = (t - lo) / d;
                s * s * rho(t)
            });
            out.off[k] += gl.integrate(a, b, |t| {
                let s = (t - lo) / d;
                s * (1.0 - s) * rho(t)
            });
        }
    }
    out
}

fn dens_value_near(dens: &crate::measure::PiecewiseDensity, t: f64, mid: f64) -> f64 {
    // the polynomial of the piece containing `mid`, evaluated at `t`
    for (a, b, c) in dens.pieces() {
        if mid >= a && mid < b {
            let s = t - a;
            return ((c[3] * s + c[2]) * s + c[1]) * s + c[0];
        }
    }
    0.0
}

/// Smooth absorbing layer `W(x) = strength·((|x| - start)/(L - start))²` for
/// `|x| > start`, entering the shifted operator as `∓ i W` so that the
/// truncated problem mimics the outgoing (incoming) resolvent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Absorber {
    pub start: f64,
    pub strength: f64,
}

impl Absorber {
    /// Layer occupying the outer `width` of the box.
    pub fn outer_layer(half_width: f64, width: f64, strength: f64) -> Absorber {
        Absorber {
            start: half_width - width,
            strength,
        }
    }

    pub fn profile(&self, x: f64, half_width: f64) -> f64 {
        let r = x.abs() - self.start;
        if r <= 0.0 {
            0.0
        } else {
            let s = r / (half_width - self.start);
            self.strength * s * s
        }
    }
}

/// `P(h) = -h²∂² + V` discretized on a Dirichlet box.
#[derive(Debug, Clone)]
pub struct DiscreteOperator {
    h: f64,
    grid: Arc<Grid>,
    tv: f64,
    /// interior-node restrictions
    stiffness: SymTridiag,
    mass: SymTridiag,
    potential: SymTridiag,
    operator: SymTridiag,
}

/// Element of the hat space: nodal values on every node (zero at the walls).
#[derive(Debug, Clone, PartialEq)]
pub struct H1Function {
    pub grid: Arc<Grid>,
    pub values: Vec<Complex64>,
}

impl H1Function {
    pub fn from_fn<F: Fn(f64) -> Complex64>(grid: &Arc<Grid>, f: F) -> Self {
        let n = grid.len();
        let values = grid
            .nodes()
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                if i == 0 || i == n - 1 {
                    Complex64::new(0.0, 0.0)
                } else {
                    f(x)
                }
            })
            .collect();
        Self {
            grid: grid.clone(),
            values,
        }
    }

    pub fn from_real_fn<F: Fn(f64) -> f64>(grid: &Arc<Grid>, f: F) -> Self {
        Self::from_fn(grid, |x| Complex64::new(f(x), 0.0))
    }

    fn from_interior(grid: &Arc<Grid>, interior: Vec<Complex64>) -> Self {
        let mut values = Vec::with_capacity(interior.len() + 2);
        values.push(Complex64::new(0.0, 0.0));
        values.extend(interior);
        values.push(Complex64::new(0.0, 0.0));
        Self {
            grid: grid.clone(),
            values,
        }
    }

    pub fn interior(&self) -> &[Complex64] {
        &self.values[1..self.values.len() - 1]
    }

    /// Exact `‖u‖²_{L²}` of the piecewise-linear function.
    pub fn l2_norm_sq(&self) -> f64 {
        self.cells()
            .map(|(d, a, b)| d / 3.0 * (a.norm_sqr() + (a.conj() * b).re + b.norm_sqr()))
            .sum()
    }

    /// Exact `‖u'‖²_{L²}`.
    pub fn deriv_norm_sq(&self) -> f64 {
        self.cells().map(|(d, a, b)| (b - a).norm_sqr() / d).sum()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// `(d, u_i, u_{i+1})` per cell.
    fn cells(&self) -> impl Iterator<Item = (f64, Complex64, Complex64)> + '_ {
        let x = self.grid.nodes();
        (0..x.len() - 1).map(move |i| (x[i + 1] - x[i], self.values[i], self.values[i + 1]))
    }

    /// Piecewise-linear interpolation at `x` (zero outside the box).
    pub fn eval(&self, x: f64) -> Complex64 {
        let nodes = self.grid.nodes();
        if x <= nodes[0] || x >= nodes[nodes.len() - 1] {
            return Complex64::new(0.0, 0.0);
        }
        let k = nodes.partition_point(|&v| v <= x) - 1;
        let s = (x - nodes[k]) / (nodes[k + 1] - nodes[k]);
        self.values[k] * (1.0 - s) + self.values[k + 1] * s
    }
}

/// Result of [`DiscreteOperator::form_bounds_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FormBoundsReport {
    pub q: f64,
    pub lower: f64,
    pub upper: f64,
}

impl FormBoundsReport {
    pub fn holds(&self) -> bool {
        let slack = 1e-12 * (self.q.abs() + self.upper.abs() + self.lower.abs());
        self.lower <= self.q + slack && self.q <= self.upper + slack
    }
}

impl DiscreteOperator {
    /// Grid with default box `L = R₀ + 40` whose nodes include every atom and
    /// density breakpoint.
    pub fn default_grid(m: &SignedMeasure, resolution: f64) -> Result<Arc<Grid>> {
        Self::grid_for(m, m.radius() + DEFAULT_BOX_MARGIN, resolution, &[])
    }

    /// Grid on `[-L, L]` containing the atoms, density breakpoints and `extra`.
    pub fn grid_for(m: &SignedMeasure, half_width: f64, resolution: f64, extra: &[f64]) -> Result<Arc<Grid>> {
        let mut req: Vec<f64> = m.atoms().iter().map(|a| a.position).collect();
        req.extend_from_slice(m.density().breakpoints());
        req.extend_from_slice(extra);
        req.sort_by(f64::total_cmp);
        req.dedup();
        Ok(Arc::new(Grid::build(m.radius(), half_width, resolution, &req)?))
    }

    pub fn assemble(m: &SignedMeasure, h: f64, grid: Arc<Grid>) -> Result<DiscreteOperator> {
        if !(h > 0.0) {
            return Err(Error::InvalidArgument {
                field: "h",
                reason: format!("semiclassical parameter must be positive, got {h}"),
            });
        }
        let full = FormMatrices::assemble(m, &grid);
        let stiffness = interior(&full.stiffness);
        let mass = interior(&full.mass);
        let potential = interior(&full.potential);
        let operator = potential.scaled_add(h * h, &stiffness);
        Ok(DiscreteOperator {
            h,
            grid,
            tv: m.total_variation(),
            stiffness,
            mass,
            potential,
            operator,
        })
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn total_variation(&self) -> f64 {
        self.tv
    }

    /// `A = h²·stiffness + potential` on interior nodes.
    pub fn operator(&self) -> &SymTridiag {
        &self.operator
    }

    pub fn mass(&self) -> &SymTridiag {
        &self.mass
    }

    pub fn stiffness(&self) -> &SymTridiag {
        &self.stiffness
    }

    pub fn potential(&self) -> &SymTridiag {
        &self.potential
    }

    /// Interior absorbing matrix `∫ φ_i φ_j W dx`.
    pub fn absorber_matrix(&self, absorber: &Absorber) -> SymTridiag {
        let l = self.grid.half_width();
        let x = self.grid.nodes();
        let n = x.len();
        let gl = GaussLegendre::new(3);
        let mut out = SymTridiag::zeros(n);
        for k in 0..n - 1 {
            let (lo, hi) = (x[k], x[k + 1]);
            if lo.abs().max(hi.abs()) <= absorber.start {
                continue;
            }
            let d = hi - lo;
            let w = |t: f64| absorber.profile(t, l);
            out.diag[k] += gl.integrate(lo, hi, |t| (1.0 - (t - lo) / d).powi(2) * w(t));
            out.diag[k + 1] += gl.integrate(lo, hi, |t| ((t - lo) / d).powi(2) * w(t));
            out.off[k] += gl.integrate(lo, hi, |t| (t - lo) / d * (1.0 - (t - lo) / d) * w(t));
        }
        interior(&out)
    }

    /// `A - z·mass`, optionally with the absorbing layer `-i·sgn(Im z)·W`
    /// (outgoing for `Im z ≥ 0`).
    pub fn shifted(&self, z: Complex64, absorber: Option<&Absorber>) -> Tridiag {
        let mut t = Tridiag::from_pencil(&self.operator, z, &self.mass);
        if let Some(ab) = absorber {
            let w = self.absorber_matrix(ab);
            let s = if z.im < 0.0 { 1.0 } else { -1.0 };
            let iw = Complex64::new(0.0, s);
            for (d, wv) in t.diag.iter_mut().zip(&w.diag) {
                *d += iw * wv;
            }
            for i in 0..w.off.len() {
                t.lower[i] += iw * w.off[i];
                t.upper[i] += iw * w.off[i];
            }
        }
        t
    }

    /// Solve `(A - z·mass) u = mass·f`, the Galerkin form of `(P - z) u = f`.
    pub fn apply_resolvent(&self, z: Complex64, f: &H1Function) -> Result<H1Function> {
        let shifted = self.shifted(z, None);
        let lu = shifted.factor()?;
        let rhs = self.mass.mul(f.interior());
        let u = lu.solve(&rhs);
        check_residual(&shifted, &u, &rhs, lu.condition)?;
        Ok(H1Function::from_interior(&self.grid, u))
    }

    /// Factorized shifted operator for repeated solves.
    pub fn resolvent_solver(&self, z: Complex64, absorber: Option<&Absorber>) -> Result<ResolventSolver> {
        let t = self.shifted(z, absorber);
        let lu = t.factor()?;
        // (A - zM - iW)^* = A - z̄M + iW: the same absorber sign convention
        // applied to z̄ flips the layer, so build the adjoint by conjugation.
        let adj = Tridiag {
            lower: t.upper.iter().map(|v| v.conj()).collect(),
            diag: t.diag.iter().map(|v| v.conj()).collect(),
            upper: t.lower.iter().map(|v| v.conj()).collect(),
        };
        let lu_adj = adj.factor()?;
        let mass_lu = Tridiag::from_pencil(&self.mass, Complex64::new(0.0, 0.0), &self.mass).factor()?;
        Ok(ResolventSolver {
            shifted: t,
            lu,
            lu_adj,
            mass_lu,
            mass: self.mass.clone(),
        })
    }

    /// Generalized eigenvalues of `(A, mass)` strictly below `threshold`.
    pub fn eigenvalues_below(&self, threshold: f64) -> Vec<f64> {
        pencil_eigenvalues_below(&self.operator, &self.mass, self.spectral_floor(), threshold, 1e-13)
    }

    /// Lower bound of the form: `q(u,u) ≥ -(‖V‖²/2h²)‖u‖²`.
    pub fn spectral_floor(&self) -> f64 {
        -(self.tv * self.tv) / (2.0 * self.h * self.h) - 1.0
    }

    /// Eigenpairs below `threshold`, eigenvectors `mass`-orthonormal
    /// (interior nodal values).
    pub fn eigenpairs_below(&self, threshold: f64) -> Result<Vec<(f64, Vec<f64>)>> {
        let vals = self.eigenvalues_below(threshold);
        let mut pairs: Vec<(f64, Vec<f64>)> = Vec::with_capacity(vals.len());
        for mu in vals {
            let mut v = pencil_eigenvector(&self.operator, &self.mass, mu)?;
            // Gram–Schmidt against earlier vectors (clustered eigenvalues)
            for (_, w) in &pairs {
                let mw = self.mass.mul_real(w);
                let c: f64 = v.iter().zip(&mw).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(w).for_each(|(a, b)| *a -= c * b);
            }
            let nrm = v
                .iter()
                .zip(self.mass.mul_real(&v))
                .map(|(a, b)| a * b)
                .sum::<f64>()
                .sqrt();
            v.iter_mut().for_each(|a| *a /= nrm);
            pairs.push((mu, v));
        }
        Ok(pairs)
    }

    /// `q(u,u) = u*Au` against the form bounds
    /// `-(‖V‖²/2h²)‖u‖² + (h²/2)‖u'‖² ≤ q ≤ (‖V‖²/2h²)‖u‖² + (3h²/2)‖u'‖²`.
    pub fn form_bounds_check(&self, u: &H1Function) -> FormBoundsReport {
        let ui = u.interior();
        let q = self.operator.form(ui, ui).re;
        let l2 = self.mass.form(ui, ui).re;
        let d2 = self.stiffness.form(ui, ui).re;
        let h2 = self.h * self.h;
        let c = self.tv * self.tv / (2.0 * h2);
        FormBoundsReport {
            q,
            lower: -c * l2 + 0.5 * h2 * d2,
            upper: c * l2 + 1.5 * h2 * d2,
        }
    }

    /// Discrete graph norm `‖M⁻¹A u‖²_M + ‖u‖²_M`.
    pub fn graph_norm_sq(&self, u: &H1Function) -> Result<f64> {
        let ui = u.interior();
        let au = self.operator.mul(ui);
        let lu = Tridiag::from_pencil(&self.mass, Complex64::new(0.0, 0.0), &self.mass).factor()?;
        let pu = lu.solve(&au);
        Ok(self.mass.form(&pu, &pu).re + self.mass.form(ui, ui).re)
    }

    pub fn from_interior(&self, interior: Vec<Complex64>) -> H1Function {
        H1Function::from_interior(&self.grid, interior)
    }
}

fn interior(t: &SymTridiag) -> SymTridiag {
    let n = t.len();
    SymTridiag {
        diag: t.diag[1..n - 1].to_vec(),
        off: t.off[1..n - 2].to_vec(),
    }
}

fn check_residual(t: &Tridiag, u: &[Complex64], rhs: &[Complex64], condition: f64) -> Result<()> {
    let r = t.mul(u);
    let res = r.iter().zip(rhs).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
    let nb = rhs.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    let tol = RESOLVENT_RESIDUAL_TOL * nb.max(f64::MIN_POSITIVE);
    if res > tol && nb > 0.0 {
        return Err(Error::IllConditioned {
            residual: res / nb,
            tolerance: RESOLVENT_RESIDUAL_TOL,
            condition,
        });
    }
    Ok(())
}

/// Factorizations of `A - zM (∓ iW)`, its adjoint and the mass matrix.
///
/// With the mass inner product `⟨x, y⟩_M = x*My`, the map `f ↦ u`,
/// `(A - zM)u = Mf`, has adjoint `g ↦ (A - zM)^{-*} M g`.
#[derive(Debug, Clone)]
pub struct ResolventSolver {
    shifted: Tridiag,
    lu: TridiagLu,
    lu_adj: TridiagLu,
    mass_lu: TridiagLu,
    mass: SymTridiag,
}

impl ResolventSolver {
    /// `u` with `(A - zM)u = M f` (interior values).
    pub fn apply(&self, f: &[Complex64]) -> Vec<Complex64> {
        self.lu.solve(&self.mass.mul(f))
    }

    /// Adjoint of [`apply`](Self::apply) in the mass inner product.
    pub fn apply_adjoint(&self, g: &[Complex64]) -> Vec<Complex64> {
        self.lu_adj.solve(&self.mass.mul(g))
    }

    /// `M⁻¹ x`.
    pub fn mass_inverse(&self, x: &[Complex64]) -> Vec<Complex64> {
        self.mass_lu.solve(x)
    }

    pub fn mass(&self) -> &SymTridiag {
        &self.mass
    }

    /// Relative residual of a solve, `‖(A - zM)u - Mf‖ / ‖Mf‖`.
    pub fn residual(&self, f: &[Complex64], u: &[Complex64]) -> f64 {
        let rhs = self.mass.mul(f);
        let r = self.shifted.mul(u);
        let res = r.iter().zip(&rhs).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        res / rhs
            .iter()
            .map(|v| v.norm_sqr())
            .sum::<f64>()
            .sqrt()
            .max(f64::MIN_POSITIVE)
    }

    pub fn condition(&self) -> f64 {
        self.lu.condition
    }
}

/// Operator norm in the mass inner product of `f ↦ D_out R D_in f` where
/// `R f = u`, `(A - zM)u = Mf`, and `D_*` are nodal multipliers. Power
/// iteration on `T*T`; relative tolerance `tol` on the singular value.
pub fn weighted_resolvent_norm(
    solver: &ResolventSolver,
    d_in: &[f64],
    d_out: &[f64],
    tol: f64,
    max_iter: usize,
) -> f64 {
    let n = d_in.len();
    let m = solver.mass();
    let mul = |d: &[f64], x: &[Complex64]| -> Vec<Complex64> { x.iter().zip(d).map(|(v, s)| v * *s).collect() };
    let apply = |f: &[Complex64]| mul(d_out, &solver.apply(&mul(d_in, f)));
    // T* = M⁻¹ D_in M (A - zM)^{-*} D_out M in the mass inner product
    let apply_adj = |g: &[Complex64]| {
        let y = solver.lu_adj.solve(&m.mul(&mul(d_out, g)));
        solver.mass_inverse(&m.mul(&mul(d_in, &y)))
    };
    let norm_m = |x: &[Complex64]| m.form(x, x).re.max(0.0).sqrt();
    let mut x: Vec<Complex64> = (0..n)
        .map(|i| {
            Complex64::new(
                d_in[i] * (1.0 + 0.3 * ((i * 37 % 11) as f64 / 11.0)),
                0.1 * ((i % 7) as f64),
            )
        })
        .collect();
    let nx = norm_m(&x);
    if nx == 0.0 {
        return 0.0;
    }
    x.iter_mut().for_each(|v| *v /= nx);
    let mut sigma = 0.0;
    for _ in 0..max_iter {
        let y = apply(&x);
        let s = norm_m(&y);
        let z = apply_adj(&y);
        let nz = norm_m(&z);
        if nz == 0.0 {
            return s;
        }
        x = z.into_iter().map(|v| v / nz).collect();
        if (s - sigma).abs() <= tol * s {
            sigma = s;
            break;
        }
        sigma = s;
    }
    sigma
}
