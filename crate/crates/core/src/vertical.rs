//! Chebyshev–Gauss–Lobatto reference grid on `[-1, 1]`.
//!
//! Nodal values at the `N + 1` Lobatto points represent a polynomial of
//! degree `N`. The grid provides differentiation, Clenshaw–Curtis weights,
//! a Gauss–Legendre rule exact to degree `3N`, and the matrices mapping
//! nodal values to the quadrature points.

use crate::dense::RMat;
use std::f64::consts::PI;

#[derive(Debug, Clone)]
pub struct VerticalGrid {
    /// Nodes in ascending order, `zeta_0 = -1`, `zeta_N = 1`.
    pub nodes: Vec<f64>,
    bary: Vec<f64>,
    /// Clenshaw–Curtis weights; they integrate the nodal interpolant exactly and sum to 2.
    pub cc_weights: Vec<f64>,
    /// Differentiation matrix on nodal values.
    pub diff: RMat,
    /// Gauss–Legendre points and weights.
    pub gl_points: Vec<f64>,
    pub gl_weights: Vec<f64>,
    /// Nodal to Gauss–Legendre interpolation, `Q x (N+1)`.
    pub interp: RMat,
    /// `interp * diff`.
    pub interp_diff: RMat,
    /// Exact mass matrix `E^T W E`.
    pub mass: RMat,
    /// Exact stiffness matrix `(ED)^T W (ED)`.
    pub stiff: RMat,
    /// Nodal values to Chebyshev coefficients.
    pub to_modal: RMat,
    /// Chebyshev coefficients to nodal values.
    pub to_nodal: RMat,
}

impl VerticalGrid {
    /// `nv` Lobatto points; the polynomial degree is `nv - 1`.
    pub fn new(nv: usize) -> Self {
        assert!(nv >= 2, "need at least two vertical nodes");
        let n = nv - 1;
        let nodes: Vec<f64> = (0..nv).map(|j| -(PI * j as f64 / n as f64).cos()).collect();
        let bary: Vec<f64> = (0..nv)
            .map(|j| {
                let s = if j % 2 == 0 { 1.0 } else { -1.0 };
                if j == 0 || j == n {
                    0.5 * s
                } else {
                    s
                }
            })
            .collect();

        let mut diff = RMat::zeros(nv, nv);
        for i in 0..nv {
            let mut diag = 0.0;
            for j in 0..nv {
                if i != j {
                    let v = bary[j] / bary[i] / (nodes[i] - nodes[j]);
                    diff.set(i, j, v);
                    diag -= v;
                }
            }
            diff.set(i, i, diag);
        }

        let cc_weights = clenshaw_curtis(n);
        let q = (3 * nv).div_ceil(2).max(nv);
        let (gl_points, gl_weights) = gauss_legendre(q);
        let interp = RMat::from_fn(q, nv, |p, j| lagrange_basis(&nodes, &bary, j, gl_points[p]));
        let interp_diff = interp.matmul(&diff);
        let weighted = |a: &RMat| RMat::from_fn(a.rows, a.cols, |p, j| a.get(p, j) * gl_weights[p]);
        let mass = interp.transpose().matmul(&weighted(&interp));
        let stiff = interp_diff.transpose().matmul(&weighted(&interp_diff));

        // Chebyshev coefficients with T_k(zeta_j) = (-1)^k cos(pi j k / N) on ascending nodes.
        let to_nodal = RMat::from_fn(nv, nv, |j, k| {
            let s = if k % 2 == 0 { 1.0 } else { -1.0 };
            s * (PI * (j * k) as f64 / n as f64).cos()
        });
        let to_modal = RMat::from_fn(nv, nv, |k, j| {
            let cj = if j == 0 || j == n { 2.0 } else { 1.0 };
            let ck = if k == 0 || k == n { 2.0 } else { 1.0 };
            2.0 / (n as f64 * cj * ck) * to_nodal.get(j, k)
        });

        Self {
            nodes,
            bary,
            cc_weights,
            diff,
            gl_points,
            gl_weights,
            interp,
            interp_diff,
            mass,
            stiff,
            to_modal,
            to_nodal,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn n_quad(&self) -> usize {
        self.gl_points.len()
    }

    /// Barycentric evaluation of the nodal interpolant at `x`.
    pub fn eval(&self, values: &[f64], x: f64) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for (j, (&xj, &wj)) in self.nodes.iter().zip(&self.bary).enumerate() {
            let d = x - xj;
            if d == 0.0 {
                return values[j];
            }
            let t = wj / d;
            num += t * values[j];
            den += t;
        }
        num / den
    }

    /// Row of interpolation weights for evaluation at `x`.
    pub fn basis_row(&self, x: f64) -> Vec<f64> {
        (0..self.len())
            .map(|j| lagrange_basis(&self.nodes, &self.bary, j, x))
            .collect()
    }

    /// Average over `[-1, 1]` of the nodal interpolant.
    pub fn average(&self, values: &[f64]) -> f64 {
        0.5 * self.cc_weights.iter().zip(values).map(|(w, v)| w * v).sum::<f64>()
    }
}

fn lagrange_basis(nodes: &[f64], bary: &[f64], j: usize, x: f64) -> f64 {
    let mut den = 0.0;
    for (k, (&xk, &wk)) in nodes.iter().zip(bary).enumerate() {
        let d = x - xk;
        if d == 0.0 {
            return if k == j { 1.0 } else { 0.0 };
        }
        den += wk / d;
    }
    bary[j] / (x - nodes[j]) / den
}

/// Clenshaw–Curtis weights on the ascending Lobatto nodes of degree `n`.
pub fn clenshaw_curtis(n: usize) -> Vec<f64> {
    let nf = n as f64;
    let mut w = vec![0.0; n + 1];
    if n == 0 {
        w[0] = 2.0;
        return w;
    }
    let theta: Vec<f64> = (0..=n).map(|j| PI * j as f64 / nf).collect();
    let interior = 1..n;
    let mut v = vec![1.0; n + 1];
    if n.is_multiple_of(2) {
        w[0] = 1.0 / (nf * nf - 1.0);
        w[n] = w[0];
        for k in 1..n / 2 {
            for j in interior.clone() {
                v[j] -= 2.0 * (2.0 * k as f64 * theta[j]).cos() / (4.0 * (k * k) as f64 - 1.0);
            }
        }
        for j in interior.clone() {
            v[j] -= (nf * theta[j]).cos() / (nf * nf - 1.0);
        }
    } else {
        w[0] = 1.0 / (nf * nf);
        w[n] = w[0];
        for k in 1..=(n - 1) / 2 {
            for j in interior.clone() {
                v[j] -= 2.0 * (2.0 * k as f64 * theta[j]).cos() / (4.0 * (k * k) as f64 - 1.0);
            }
        }
    }
    for j in interior {
        w[j] = 2.0 * v[j] / nf;
    }
    w
}

/// Gauss–Legendre points (ascending) and weights by Newton iteration on `P_q`.
pub fn gauss_legendre(q: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; q];
    let mut w = vec![0.0; q];
    let qf = q as f64;
    for i in 0..q.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (qf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(q, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(q, z);
        dp = if d != 0.0 { d } else { dp };
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[q - 1 - i] = z;
        w[i] = wi;
        w[q - 1 - i] = wi;
    }
    (x, w)
}

fn legendre(q: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if q == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=q {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = q as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly(x: f64, deg: i32) -> f64 {
        (0..=deg).map(|k| (k as f64 + 1.0) * x.powi(k)).sum()
    }

    #[test]
    fn differentiation_is_exact_on_polynomials() {
        let g = VerticalGrid::new(9);
        let f: Vec<f64> = g.nodes.iter().map(|&x| poly(x, 8)).collect();
        let mut df = vec![0.0; 9];
        g.diff.apply(&f, &mut df);
        for (x, d) in g.nodes.iter().zip(&df) {
            let exact: f64 = (1..=8).map(|k| (k as f64 + 1.0) * k as f64 * x.powi(k - 1)).sum();
            assert!((d - exact).abs() < 1e-11, "{d} vs {exact}");
        }
    }

    #[test]
    fn quadratures_are_exact() {
        for nv in [5, 9, 17, 33] {
            let g = VerticalGrid::new(nv);
            let n = (nv - 1) as i32;
            let exact = |deg: i32| -> f64 {
                (0..=deg)
                    .map(|k| if k % 2 == 0 { 2.0 * (k as f64 + 1.0) / (k as f64 + 1.0) } else { 0.0 })
                    .sum()
            };
            let f: Vec<f64> = g.nodes.iter().map(|&x| poly(x, n)).collect();
            let cc: f64 = g.cc_weights.iter().zip(&f).map(|(w, v)| w * v).sum();
            assert!((cc - exact(n)).abs() < 1e-12);
            let deg = 3 * n;
            let gl: f64 = g.gl_points.iter().zip(&g.gl_weights).map(|(&x, w)| w * poly(x, deg)).sum();
            assert!((gl - exact(deg)).abs() < 1e-10 * exact(deg).abs());
        }
    }

    #[test]
    fn modal_transform_roundtrip() {
        let g = VerticalGrid::new(17);
        let f: Vec<f64> = g.nodes.iter().map(|&x| (2.0 * x).sin() + x * x).collect();
        let mut c = vec![0.0; 17];
        let mut back = vec![0.0; 17];
        g.to_modal.apply(&f, &mut c);
        g.to_nodal.apply(&c, &mut back);
        for (a, b) in f.iter().zip(&back) {
            assert!((a - b).abs() < 1e-13);
        }
        // T_2 = 2x^2 - 1.
        let t2: Vec<f64> = g.nodes.iter().map(|&x| 2.0 * x * x - 1.0).collect();
        g.to_modal.apply(&t2, &mut c);
        for (k, ck) in c.iter().enumerate() {
            assert!((ck - if k == 2 { 1.0 } else { 0.0 }).abs() < 1e-13);
        }
    }

    #[test]
    fn mass_matrix_integrates_products() {
        let g = VerticalGrid::new(9);
        let f: Vec<f64> = g.nodes.iter().map(|&x| x.powi(8)).collect();
        let h: Vec<f64> = g.nodes.iter().map(|&x| x.powi(6)).collect();
        let mut mf = vec![0.0; 9];
        g.mass.apply(&f, &mut mf);
        let ip: f64 = mf.iter().zip(&h).map(|(a, b)| a * b).sum();
        assert!((ip - 2.0 / 15.0).abs() < 1e-13);
        assert!((g.eval(&f, 0.3) - 0.3f64.powi(8)).abs() < 1e-14);
    }
}
