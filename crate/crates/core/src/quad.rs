//! Gauss–Legendre quadrature on panels.

use std::f64::consts::PI;

/// Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes and weights by Newton iteration on the Legendre recurrence.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    /// Integrate `f` over `[a, b]` with a single panel.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let c = 0.5 * (a + b);
        let r = 0.5 * (b - a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(c + r * x))
            .sum::<f64>()
            * r
    }

    /// Integrate over `[a, b]` split at every breakpoint in `cuts` and
    /// further into `panels` equal pieces per segment.
    pub fn integrate_piecewise<F: FnMut(f64) -> f64>(
        &self,
        a: f64,
        b: f64,
        cuts: &[f64],
        panels: usize,
        mut f: F,
    ) -> f64 {
        let mut pts: Vec<f64> = cuts.iter().copied().filter(|&c| c > a && c < b).collect();
        pts.push(a);
        pts.push(b);
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        let mut total = 0.0;
        for seg in pts.windows(2) {
            let step = (seg[1] - seg[0]) / panels as f64;
            for k in 0..panels {
                let lo = seg[0] + step * k as f64;
                total += self.integrate(lo, lo + step, &mut f);
            }
        }
        total
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_for_polynomials_up_to_degree_2n_minus_1() {
        let gl = GaussLegendre::new(6);
        for deg in 0..12 {
            let got = gl.integrate(-1.0, 2.0, |x| x.powi(deg));
            let exact = (2f64.powi(deg + 1) - (-1f64).powi(deg + 1)) / (deg + 1) as f64;
            assert!((got - exact).abs() < 1e-11 * exact.abs().max(1.0), "deg {deg}");
        }
    }

    #[test]
    fn weights_sum_to_two() {
        for n in [1, 2, 5, 16, 33] {
            let s: f64 = GaussLegendre::new(n).weights.iter().sum();
            assert!((s - 2.0).abs() < 1e-13);
        }
    }

    #[test]
    fn piecewise_handles_kinks() {
        let gl = GaussLegendre::new(4);
        let got = gl.integrate_piecewise(-1.0, 1.0, &[0.0], 1, |x| x.abs());
        assert!((got - 1.0).abs() < 1e-14);
    }
}
