//! Chebyshev–Gauss–Lobatto collocation on the interval `[0, b]`.
//!
//! Nodes are `y_j = (b/2)(1 − cos(πj/(N−1)))`, ascending from `y_0 = 0` (the
//! rigid bottom) to `y_{N−1} = b` (the free surface).  The struct owns the
//! first and second differentiation matrices, Clenshaw–Curtis quadrature
//! weights and barycentric interpolation weights.
//!
//! [`Chebyshev::stretched`] composes the same points with the end-clustering
//! map `y = (b/2)(1 + tanh(λt)/tanh λ)`, `t ∈ [−1, 1]`, which resolves
//! boundary layers far thinner than the plain node spacing.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Collocation data for `N` Chebyshev–Gauss–Lobatto points on `[0, b]`.
#[derive(Debug, Clone)]
pub struct Chebyshev {
    n: usize,
    b: f64,
    nodes: Vec<f64>,
    d1: Vec<f64>,
    d2: Vec<f64>,
    weights: Vec<f64>,
    bary: Vec<f64>,
    /// Plain Chebyshev nodes (the reference coordinate, scaled to `[0, b]`).
    reference: Vec<f64>,
    stretch: f64,
}

impl Chebyshev {
    /// Builds the collocation data for `n ≥ 2` points on `[0, b]`.
    pub fn new(n: usize, b: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidArgument(format!(
                "need at least 2 Chebyshev points, got {n}"
            )));
        }
        if !(b > 0.0 && b.is_finite()) {
            return Err(Error::InvalidArgument(format!("depth b must be positive, got {b}")));
        }
        let m = n - 1;
        let nodes: Vec<f64> = (0..n)
            .map(|j| {
                // 1 − cos(πj/m) = 2 sin²(πj/(2m)) avoids cancellation near y = 0.
                let s = (PI * j as f64 / (2.0 * m as f64)).sin();
                b * s * s
            })
            .collect();

        // Differentiation matrix in the reference variable x = cos(θ), then
        // mapped through y = (b/2)(1 − x), i.e. d/dy = −(2/b) d/dx.
        let c = |j: usize| -> f64 {
            let s = if j == 0 || j == m { 2.0 } else { 1.0 };
            if j.is_multiple_of(2) {
                s
            } else {
                -s
            }
        };
        let mut d1 = vec![0.0; n * n];
        for i in 0..n {
            let mut row_sum = 0.0;
            for j in 0..n {
                if i == j {
                    continue;
                }
                // x_i − x_j = 2 sin(π(i+j)/(2m)) sin(π(j−i)/(2m))
                let dx = 2.0
                    * (PI * (i + j) as f64 / (2.0 * m as f64)).sin()
                    * (PI * (j as f64 - i as f64) / (2.0 * m as f64)).sin();
                let v = c(i) / c(j) / dx;
                d1[i * n + j] = v;
                row_sum += v;
            }
            d1[i * n + i] = -row_sum;
        }
        let scale = -2.0 / b;
        for v in d1.iter_mut() {
            *v *= scale;
        }
        let d2 = matmul(&d1, &d1, n);

        let weights = clenshaw_curtis(n).into_iter().map(|w| w * b / 2.0).collect();
        let bary = (0..n)
            .map(|j| {
                let s = if j % 2 == 0 { 1.0 } else { -1.0 };
                if j == 0 || j == m {
                    0.5 * s
                } else {
                    s
                }
            })
            .collect();
        let reference = nodes.clone();
        Ok(Self { n, b, nodes, d1, d2, weights, bary, reference, stretch: 0.0 })
    }

    /// Collocation on `n` points clustered toward both ends by the tanh map
    /// with strength `lambda ≥ 0` (`lambda = 0` is the plain grid).
    pub fn stretched(n: usize, b: f64, lambda: f64) -> Result<Self> {
        let mut c = Self::new(n, b)?;
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidArgument(format!("stretch must be ≥ 0, got {lambda}")));
        }
        if lambda == 0.0 {
            return Ok(c);
        }
        c.stretch = lambda;
        let jac: Vec<f64> = c.reference.iter().map(|&s| c.map_slope(s)).collect();
        c.nodes = c.reference.iter().map(|&s| c.map(s)).collect();
        c.nodes[0] = 0.0;
        c.nodes[n - 1] = b;
        for i in 0..n {
            for j in 0..n {
                c.d1[i * n + j] /= jac[i];
            }
            c.weights[i] *= jac[i];
        }
        c.d2 = matmul(&c.d1, &c.d1, n);
        Ok(c)
    }

    /// Stretch parameter of the coordinate map (0 for the plain grid).
    pub fn stretch(&self) -> f64 {
        self.stretch
    }

    fn map(&self, s: f64) -> f64 {
        let l = self.stretch;
        let t = 2.0 * s / self.b - 1.0;
        0.5 * self.b * (1.0 + (l * t).tanh() / l.tanh())
    }

    fn map_slope(&self, s: f64) -> f64 {
        let l = self.stretch;
        let t = 2.0 * s / self.b - 1.0;
        let sech = 1.0 / (l * t).cosh();
        l * sech * sech / l.tanh()
    }

    /// Reference coordinate of a physical height `y`.
    fn to_reference(&self, y: f64) -> f64 {
        if self.stretch == 0.0 {
            return y;
        }
        let l = self.stretch;
        let r = (2.0 * y / self.b - 1.0).clamp(-1.0, 1.0) * l.tanh();
        0.5 * self.b * (1.0 + r.atanh() / l)
    }

    /// Number of collocation points.
    pub fn len(&self) -> usize {
        self.n
    }

    /// Always false (at least two points exist); provided for API symmetry.
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Interval length `b`.
    pub fn depth(&self) -> f64 {
        self.b
    }

    /// Node coordinates, ascending.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// First-derivative matrix, row-major `N × N`.
    pub fn d1(&self) -> &[f64] {
        &self.d1
    }

    /// Second-derivative matrix (the square of [`Self::d1`]), row-major.
    pub fn d2(&self) -> &[f64] {
        &self.d2
    }

    /// Entry `(i, j)` of the differentiation matrix of the given order.
    pub fn diff_entry(&self, order: usize, i: usize, j: usize) -> f64 {
        match order {
            1 => self.d1[i * self.n + j],
            2 => self.d2[i * self.n + j],
            _ => panic!("differentiation order must be 1 or 2"),
        }
    }

    /// Clenshaw–Curtis quadrature weights for `∫_0^b`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Applies the differentiation matrix of order 1 or 2 to a nodal profile
    /// stored with stride `stride` starting at `src[0]`, writing into `dst`.
    pub fn apply<T>(&self, order: usize, src: &[T], dst: &mut [T])
    where
        T: Copy + std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T> + Default,
    {
        let mat = match order {
            1 => &self.d1,
            2 => &self.d2,
            _ => panic!("differentiation order must be 1 or 2"),
        };
        let n = self.n;
        for i in 0..n {
            let mut acc = T::default();
            for j in 0..n {
                acc = acc + src[j] * mat[i * n + j];
            }
            dst[i] = acc;
        }
    }

    /// Lagrange basis values `ℓ_j(y)` of the nodal interpolant at `y`.
    pub fn lagrange_row(&self, y: f64) -> Vec<f64> {
        let mut row = vec![0.0; self.n];
        for (j, &yj) in self.nodes.iter().enumerate() {
            if y == yj {
                row[j] = 1.0;
                return row;
            }
        }
        let s = self.to_reference(y);
        for (j, &sj) in self.reference.iter().enumerate() {
            if s == sj {
                row[j] = 1.0;
                return row;
            }
        }
        let mut den = 0.0;
        for j in 0..self.n {
            let t = self.bary[j] / (s - self.reference[j]);
            row[j] = t;
            den += t;
        }
        for v in row.iter_mut() {
            *v /= den;
        }
        row
    }

    /// Evaluates the polynomial interpolant of nodal `values` at `y`.
    pub fn interpolate<T>(&self, values: &[T], y: f64) -> T
    where
        T: Copy + std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T> + Default,
    {
        let row = self.lagrange_row(y);
        let mut acc = T::default();
        for (v, w) in values.iter().zip(row) {
            acc = acc + *v * w;
        }
        acc
    }

    /// Interpolation matrix (row-major `targets.len() × N`).
    pub fn interpolation_matrix(&self, targets: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(targets.len() * self.n);
        for &y in targets {
            out.extend(self.lagrange_row(y));
        }
        out
    }

    /// `L²(0,b)` Gram matrix of the nodal interpolants, row-major.
    ///
    /// Computed by interpolating to a Clenshaw–Curtis grid with `2N` points,
    /// which integrates products of two degree-`N−1` polynomials exactly (on
    /// a stretched grid the map's Jacobian makes it a quadrature estimate).
    pub fn l2_gram(&self) -> Vec<f64> {
        let fine = Chebyshev::stretched(2 * self.n, self.b, self.stretch).expect("valid fine grid");
        let p = self.interpolation_matrix(fine.nodes());
        let n = self.n;
        let m = fine.n;
        let mut g = vec![0.0; n * n];
        for q in 0..m {
            let w = fine.weights[q];
            for i in 0..n {
                let a = p[q * n + i] * w;
                for j in 0..n {
                    g[i * n + j] += a * p[q * n + j];
                }
            }
        }
        g
    }

    /// `∫_0^b` of nodal values by Clenshaw–Curtis quadrature.
    pub fn integrate<T>(&self, values: &[T]) -> T
    where
        T: Copy + std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T> + Default,
    {
        let mut acc = T::default();
        for (v, w) in values.iter().zip(&self.weights) {
            acc = acc + *v * *w;
        }
        acc
    }
}

/// Clenshaw–Curtis weights on `[−1, 1]` for `n` Lobatto points.
fn clenshaw_curtis(n: usize) -> Vec<f64> {
    let m = n - 1;
    let mut w = vec![0.0; n];
    if m == 1 {
        return vec![1.0, 1.0];
    }
    let mf = m as f64;
    let mut v = vec![1.0; m - 1];
    if m.is_multiple_of(2) {
        w[0] = 1.0 / (mf * mf - 1.0);
        w[m] = w[0];
        for k in 1..m / 2 {
            let kf = k as f64;
            for (i, vi) in v.iter_mut().enumerate() {
                let theta = PI * (i + 1) as f64 / mf;
                *vi -= 2.0 * (2.0 * kf * theta).cos() / (4.0 * kf * kf - 1.0);
            }
        }
        for (i, vi) in v.iter_mut().enumerate() {
            let theta = PI * (i + 1) as f64 / mf;
            *vi -= (mf * theta).cos() / (mf * mf - 1.0);
        }
    } else {
        w[0] = 1.0 / (mf * mf);
        w[m] = w[0];
        for k in 1..=(m - 1) / 2 {
            let kf = k as f64;
            for (i, vi) in v.iter_mut().enumerate() {
                let theta = PI * (i + 1) as f64 / mf;
                *vi -= 2.0 * (2.0 * kf * theta).cos() / (4.0 * kf * kf - 1.0);
            }
        }
    }
    for i in 1..m {
        w[i] = 2.0 * v[i - 1] / mf;
    }
    w
}

fn matmul(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut c = vec![0.0; n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            for j in 0..n {
                c[i * n + j] += aik * b[k * n + j];
            }
        }
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoints_and_midpoint() {
        let c = Chebyshev::new(9, 1.0).unwrap();
        assert_eq!(c.nodes()[0], 0.0);
        assert!((c.nodes()[8] - 1.0).abs() < 1e-15);
        assert!((c.nodes()[4] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn differentiates_polynomials_exactly() {
        let c = Chebyshev::new(12, 2.0).unwrap();
        let f: Vec<f64> = c.nodes().iter().map(|y| y.powi(5) - 3.0 * y * y + 1.0).collect();
        let mut d = vec![0.0; 12];
        c.apply(1, &f, &mut d);
        for (y, v) in c.nodes().iter().zip(&d) {
            assert!((v - (5.0 * y.powi(4) - 6.0 * y)).abs() < 1e-10);
        }
        c.apply(2, &f, &mut d);
        for (y, v) in c.nodes().iter().zip(&d) {
            assert!((v - (20.0 * y.powi(3) - 6.0)).abs() < 1e-9);
        }
    }

    #[test]
    fn quadrature_integrates_polynomials() {
        for n in [8usize, 9, 16, 17] {
            let c = Chebyshev::new(n, 3.0).unwrap();
            let f: Vec<f64> = c.nodes().iter().map(|y| y.powi(4)).collect();
            assert!((c.integrate(&f) - 3f64.powi(5) / 5.0).abs() < 1e-11);
        }
    }

    #[test]
    fn interpolation_reproduces_polynomials() {
        let c = Chebyshev::new(10, 1.0).unwrap();
        let f: Vec<f64> = c.nodes().iter().map(|y| y.powi(7) - y).collect();
        for y in [0.013, 0.5, 0.77, 1.0] {
            assert!((c.interpolate(&f, y) - (y.powi(7) - y)).abs() < 1e-13);
        }
    }

    #[test]
    fn stretched_grid_differentiates_and_integrates() {
        let c = Chebyshev::stretched(40, 1.0, 3.0).unwrap();
        assert_eq!(c.nodes()[0], 0.0);
        assert_eq!(c.nodes()[39], 1.0);
        // the first interior node sits much closer to the wall than on the plain grid
        assert!(c.nodes()[1] < 0.2 * Chebyshev::new(40, 1.0).unwrap().nodes()[1]);
        let k = 60.0;
        let f: Vec<f64> = c.nodes().iter().map(|y| (-k * y).exp()).collect();
        let mut d = vec![0.0; 40];
        c.apply(1, &f, &mut d);
        for (y, v) in c.nodes().iter().zip(&d) {
            assert!((v + k * (-k * y).exp()).abs() < 1e-4 * k);
        }
        assert!((c.integrate(&f) - (1.0 - (-k).exp()) / k).abs() < 1e-10);
        for y in [0.003, 0.4, 0.97] {
            assert!((c.interpolate(&f, y) - (-k * y).exp()).abs() < 1e-5);
        }
    }

    #[test]
    fn gram_matches_exact_inner_products() {
        let c = Chebyshev::new(8, 1.0).unwrap();
        let g = c.l2_gram();
        let f: Vec<f64> = c.nodes().iter().map(|y| y.powi(3)).collect();
        let h: Vec<f64> = c.nodes().iter().map(|y| y.powi(6)).collect();
        let mut acc = 0.0;
        for i in 0..8 {
            for j in 0..8 {
                acc += f[i] * g[i * 8 + j] * h[j];
            }
        }
        assert!((acc - 0.1).abs() < 1e-13);
    }
}
