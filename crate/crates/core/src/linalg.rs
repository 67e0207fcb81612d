//! Small dense complex linear algebra: LU factorization with partial pivoting.

use crate::grid::C64;

/// Row-major dense LU factorization `PA = LU` of a square complex matrix.
#[derive(Debug, Clone)]
pub struct ComplexLu {
    n: usize,
    lu: Vec<C64>,
    perm: Vec<usize>,
    pivot_ratio: f64,
}

impl ComplexLu {
    /// Factors the row-major `n × n` matrix `a` (consumed).
    ///
    /// Returns `None` if an exactly zero pivot is met.
    pub fn factor(mut a: Vec<C64>, n: usize) -> Option<Self> {
        assert_eq!(a.len(), n * n);
        let mut perm: Vec<usize> = (0..n).collect();
        let mut pmax: f64 = 0.0;
        let mut pmin = f64::INFINITY;
        for k in 0..n {
            let mut best = k;
            let mut bv = a[k * n + k].norm();
            for i in k + 1..n {
                let v = a[i * n + k].norm();
                if v > bv {
                    bv = v;
                    best = i;
                }
            }
            if bv == 0.0 || !bv.is_finite() {
                return None;
            }
            if best != k {
                for j in 0..n {
                    a.swap(k * n + j, best * n + j);
                }
                perm.swap(k, best);
            }
            pmax = pmax.max(bv);
            pmin = pmin.min(bv);
            let inv = a[k * n + k].inv();
            let (head, tail) = a.split_at_mut((k + 1) * n);
            let prow = &head[k * n..(k + 1) * n];
            for i in 0..n - k - 1 {
                let row = &mut tail[i * n..(i + 1) * n];
                let f = row[k] * inv;
                if f == C64::new(0.0, 0.0) {
                    continue;
                }
                row[k] = f;
                for j in k + 1..n {
                    row[j] -= f * prow[j];
                }
            }
        }
        Some(Self { n, lu: a, perm, pivot_ratio: pmax / pmin })
    }

    /// Dimension.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Ratio of the largest to the smallest pivot magnitude (a cheap
    /// condition indicator).
    pub fn pivot_ratio(&self) -> f64 {
        self.pivot_ratio
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[C64]) -> Vec<C64> {
        let n = self.n;
        let mut x: Vec<C64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let row = &self.lu[i * n..(i + 1) * n];
            let mut acc = x[i];
            for j in 0..i {
                acc -= row[j] * x[j];
            }
            x[i] = acc;
        }
        for i in (0..n).rev() {
            let row = &self.lu[i * n..(i + 1) * n];
            let mut acc = x[i];
            for j in i + 1..n {
                acc -= row[j] * x[j];
            }
            x[i] = acc / row[i];
        }
        x
    }
}

/// Row-major complex matrix–vector product.
pub fn matvec(a: &[C64], n: usize, x: &[C64]) -> Vec<C64> {
    let m = a.len() / n;
    (0..m)
        .map(|i| a[i * n..(i + 1) * n].iter().zip(x).map(|(u, v)| u * v).sum())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_random_system() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let n = 17;
        let a: Vec<C64> = (0..n * n).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        let x: Vec<C64> = (0..n).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        let b = matvec(&a, n, &x);
        let lu = ComplexLu::factor(a, n).unwrap();
        let y = lu.solve(&b);
        for (u, v) in x.iter().zip(&y) {
            assert!((u - v).norm() < 1e-12);
        }
    }

    #[test]
    fn detects_zero_pivot() {
        let a = vec![C64::new(1.0, 0.0), C64::new(2.0, 0.0), C64::new(2.0, 0.0), C64::new(4.0, 0.0)];
        assert!(ComplexLu::factor(a, 2).is_none());
    }
}
