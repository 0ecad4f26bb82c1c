//! Tridiagonal kernels: banded LU with partial pivoting for complex shifts,
//! Sturm counts and bisection for the symmetric pencil `(A, M)`.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Real symmetric tridiagonal matrix. `off[i]` couples rows `i` and `i + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiag {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl SymTridiag {
    pub fn zeros(n: usize) -> Self {
        Self {
            diag: vec![0.0; n],
            off: vec![0.0; n.saturating_sub(1)],
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn scaled_add(&self, s: f64, other: &SymTridiag) -> SymTridiag {
        SymTridiag {
            diag: self.diag.iter().zip(&other.diag).map(|(a, b)| a + s * b).collect(),
            off: self.off.iter().zip(&other.off).map(|(a, b)| a + s * b).collect(),
        }
    }

    pub fn mul_real(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut s = self.diag[i] * x[i];
            if i > 0 {
                s += self.off[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                s += self.off[i] * x[i + 1];
            }
            y[i] = s;
        }
        y
    }

    pub fn mul(&self, x: &[Complex64]) -> Vec<Complex64> {
        let n = self.len();
        let mut y = vec![Complex64::new(0.0, 0.0); n];
        for i in 0..n {
            let mut s = x[i] * self.diag[i];
            if i > 0 {
                s += x[i - 1] * self.off[i - 1];
            }
            if i + 1 < n {
                s += x[i + 1] * self.off[i];
            }
            y[i] = s;
        }
        y
    }

    /// `x* T y` for complex vectors.
    pub fn form(&self, x: &[Complex64], y: &[Complex64]) -> Complex64 {
        self.mul(y).iter().zip(x).map(|(t, a)| a.conj() * t).sum()
    }

    /// Number of eigenvalues of the pencil `(self, mass)` strictly below
    /// `sigma` (Sylvester inertia of `self - sigma * mass`, `mass` SPD).
    pub fn sturm_count(&self, mass: &SymTridiag, sigma: f64) -> usize {
        let n = self.len();
        let mut count = 0;
        let mut d_prev = 1.0;
        let scale = self.diag.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1.0);
        for i in 0..n {
            let t = self.diag[i] - sigma * mass.diag[i];
            let mut d = if i == 0 {
                t
            } else {
                let e = self.off[i - 1] - sigma * mass.off[i - 1];
                t - e * e / d_prev
            };
            if d == 0.0 {
                d = -f64::EPSILON * scale;
            }
            if d < 0.0 {
                count += 1;
            }
            d_prev = d;
        }
        count
    }
}

/// `LDLᵀ` factorization of a positive definite [`SymTridiag`].
#[derive(Debug, Clone)]
pub struct SpdFactor {
    d: Vec<f64>,
    l: Vec<f64>,
}

impl SymTridiag {
    pub fn factor_spd(&self) -> Result<SpdFactor> {
        let n = self.len();
        let mut d = vec![0.0; n];
        let mut l = vec![0.0; n.saturating_sub(1)];
        for i in 0..n {
            d[i] = self.diag[i] - if i > 0 { l[i - 1] * self.off[i - 1] } else { 0.0 };
            if !(d[i] > 0.0) {
                return Err(Error::Singular {
                    condition: f64::INFINITY,
                });
            }
            if i + 1 < n {
                l[i] = self.off[i] / d[i];
            }
        }
        Ok(SpdFactor { d, l })
    }
}

impl SpdFactor {
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.d.len();
        for i in 1..n {
            b[i] -= self.l[i - 1] * b[i - 1];
        }
        b.iter_mut().zip(&self.d).for_each(|(x, d)| *x /= d);
        for i in (0..n.saturating_sub(1)).rev() {
            b[i] -= self.l[i] * b[i + 1];
        }
    }
}

/// Complex general tridiagonal matrix.
#[derive(Debug, Clone)]
pub struct Tridiag {
    pub lower: Vec<Complex64>,
    pub diag: Vec<Complex64>,
    pub upper: Vec<Complex64>,
}

impl Tridiag {
    /// `a + shift_a * b` with complex scalar and complex diagonal extra term.
    pub fn from_pencil(a: &SymTridiag, z: Complex64, m: &SymTridiag) -> Self {
        let diag = a
            .diag
            .iter()
            .zip(&m.diag)
            .map(|(&x, &y)| Complex64::new(x, 0.0) - z * y)
            .collect();
        let off: Vec<Complex64> = a
            .off
            .iter()
            .zip(&m.off)
            .map(|(&x, &y)| Complex64::new(x, 0.0) - z * y)
            .collect();
        Self {
            lower: off.clone(),
            diag,
            upper: off,
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn mul(&self, x: &[Complex64]) -> Vec<Complex64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i] * x[i];
                if i > 0 {
                    s += self.lower[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    s += self.upper[i] * x[i + 1];
                }
                s
            })
            .collect()
    }

    /// LU factorization with partial pivoting (same scheme as LAPACK `gttrf`).
    pub fn factor(&self) -> Result<TridiagLu> {
        let n = self.len();
        let mut dl = self.lower.clone();
        let mut d = self.diag.clone();
        let mut du = self.upper.clone();
        let mut du2 = vec![Complex64::new(0.0, 0.0); n.saturating_sub(2)];
        let mut ipiv: Vec<usize> = (0..n).collect();
        let norm = self
            .diag
            .iter()
            .chain(&self.lower)
            .chain(&self.upper)
            .map(|v| v.norm())
            .fold(0.0, f64::max);
        for i in 0..n.saturating_sub(1) {
            if d[i].norm() >= dl[i].norm() {
                if d[i].norm() > 0.0 {
                    let fact = dl[i] / d[i];
                    dl[i] = fact;
                    d[i + 1] -= fact * du[i];
                }
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = fact;
                let temp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = temp - fact * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] = -fact * du[i + 1];
                }
                ipiv[i] = i + 1;
            }
        }
        let dmax = d.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let dmin = d.iter().map(|v| v.norm()).fold(f64::INFINITY, f64::min);
        let condition = if dmin > 0.0 { dmax / dmin } else { f64::INFINITY };
        if n > 0 && (dmin <= 1e-14 * norm.max(f64::MIN_POSITIVE) || !condition.is_finite()) {
            return Err(Error::Singular { condition });
        }
        Ok(TridiagLu {
            dl,
            d,
            du,
            du2,
            ipiv,
            condition,
        })
    }
}

/// Factorization produced by [`Tridiag::factor`].
#[derive(Debug, Clone)]
pub struct TridiagLu {
    dl: Vec<Complex64>,
    d: Vec<Complex64>,
    du: Vec<Complex64>,
    du2: Vec<Complex64>,
    ipiv: Vec<usize>,
    /// Pivot growth ratio `max|u_ii| / min|u_ii|`, a cheap condition estimate.
    pub condition: f64,
}

impl TridiagLu {
    pub fn solve_in_place(&self, b: &mut [Complex64]) {
        let n = self.d.len();
        if n == 0 {
            return;
        }
        for i in 0..n - 1 {
            let ip = self.ipiv[i];
            let temp = b[2 * i + 1 - ip] - self.dl[i] * b[ip];
            b[i] = b[ip];
            b[i + 1] = temp;
        }
        b[n - 1] /= self.d[n - 1];
        if n > 1 {
            b[n - 2] = (b[n - 2] - self.du[n - 2] * b[n - 1]) / self.d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - self.du[i] * b[i + 1] - self.du2[i] * b[i + 2]) / self.d[i];
        }
    }

    pub fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

/// All eigenvalues of the pencil `(a, m)` strictly below `threshold`,
/// ascending, by Sturm bisection. `lower` must bound the spectrum from below.
pub fn pencil_eigenvalues_below(a: &SymTridiag, m: &SymTridiag, lower: f64, threshold: f64, rel_tol: f64) -> Vec<f64> {
    let total = a.sturm_count(m, threshold);
    (0..total)
        .map(|k| {
            // k-th eigenvalue: smallest sigma with count(sigma) > k
            let mut lo = lower;
            let mut hi = threshold;
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if a.sturm_count(m, mid) > k {
                    hi = mid;
                } else {
                    lo = mid;
                }
                if hi - lo <= rel_tol * hi.abs().max(lo.abs()).max(1e-300) {
                    break;
                }
            }
            0.5 * (lo + hi)
        })
        .collect()
}

/// Eigenvector of the pencil near `mu` by inverse iteration, normalized so
/// that `vᵀ M v = 1`.
pub fn pencil_eigenvector(a: &SymTridiag, m: &SymTridiag, mu: f64) -> Result<Vec<f64>> {
    let n = a.len();
    let scale = mu.abs().max(1.0);
    let mut shift = mu - 1e-9 * scale;
    let lu = loop {
        match Tridiag::from_pencil(a, Complex64::new(shift, 0.0), m).factor() {
            Ok(lu) => break lu,
            Err(_) => shift -= 1e-9 * scale,
        }
    };
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 0.01 * ((i * 7919) % 13) as f64).collect();
    for _ in 0..6 {
        let rhs: Vec<Complex64> = m.mul_real(&v).into_iter().map(|x| Complex64::new(x, 0.0)).collect();
        let x = lu.solve(&rhs);
        v = x.iter().map(|c| c.re).collect();
        let nrm = v.iter().zip(m.mul_real(&v)).map(|(a, b)| a * b).sum::<f64>().sqrt();
        if !nrm.is_finite() || nrm == 0.0 {
            return Err(Error::Numerical("inverse iteration broke down".into()));
        }
        v.iter_mut().for_each(|x| *x /= nrm);
    }
    Ok(v)
}
