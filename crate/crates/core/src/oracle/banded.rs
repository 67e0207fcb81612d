//! Banded complex LU with partial pivoting, for the long but narrow systems
//! of the finite-difference oracle.

use crate::grid::C64;

/// Square banded matrix with `kl` sub- and `ku` super-diagonals, stored by
/// rows with room for the `kl` extra super-diagonals that row exchanges
/// create.
#[derive(Debug, Clone)]
pub struct Banded {
    n: usize,
    kl: usize,
    width: usize,
    data: Vec<C64>,
}

impl Banded {
    /// The zero matrix of size `n`.
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Self { n, kl, width, data: vec![C64::new(0.0, 0.0); n * width] }
    }

    /// Dimension.
    pub fn n(&self) -> usize {
        self.n
    }

    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        let off = j as isize - i as isize + self.kl as isize;
        (off >= 0 && (off as usize) < self.width && j < self.n).then(|| i * self.width + off as usize)
    }

    /// Entry `(i, j)` (zero outside the band).
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.slot(i, j).map_or(C64::new(0.0, 0.0), |s| self.data[s])
    }

    /// Adds `v` to entry `(i, j)`.
    ///
    /// # Panics
    /// If `(i, j)` lies outside the declared band.
    pub fn add(&mut self, i: usize, j: usize, v: C64) {
        let s = self.slot(i, j).unwrap_or_else(|| panic!("entry ({i}, {j}) outside the band"));
        self.data[s] += v;
    }

    /// Solves `A x = b` for several right-hand sides (columns of `rhs`),
    /// consuming the matrix.  Returns `None` on an exactly zero pivot.
    pub fn solve(mut self, rhs: &mut [Vec<C64>]) -> Option<()> {
        let n = self.n;
        for k in 0..n {
            let last = (k + self.kl).min(n - 1);
            let (mut best, mut bv) = (k, 0.0);
            for i in k..=last {
                let v = self.get(i, k).norm();
                if v > bv {
                    best = i;
                    bv = v;
                }
            }
            if bv == 0.0 || !bv.is_finite() {
                return None;
            }
            let hi = (k + self.width - self.kl).min(n);
            if best != k {
                for j in k..hi {
                    let a = self.get(k, j);
                    let b = self.get(best, j);
                    self.put(k, j, b);
                    self.put(best, j, a);
                }
                for r in rhs.iter_mut() {
                    r.swap(k, best);
                }
            }
            let inv = self.get(k, k).inv();
            for i in k + 1..=last {
                let f = self.get(i, k) * inv;
                if f == C64::new(0.0, 0.0) {
                    continue;
                }
                self.put(i, k, C64::new(0.0, 0.0));
                for j in k + 1..hi {
                    let v = self.get(k, j);
                    if v != C64::new(0.0, 0.0) {
                        let s = self.slot(i, j).expect("fill stays within the widened band");
                        self.data[s] -= f * v;
                    }
                }
                for r in rhs.iter_mut() {
                    let rk = r[k];
                    r[i] -= f * rk;
                }
            }
        }
        for r in rhs.iter_mut() {
            for k in (0..n).rev() {
                let hi = (k + self.width - self.kl).min(n);
                let mut s = r[k];
                for j in k + 1..hi {
                    s -= self.get(k, j) * r[j];
                }
                r[k] = s / self.get(k, k);
            }
        }
        Some(())
    }

    fn put(&mut self, i: usize, j: usize, v: C64) {
        match self.slot(i, j) {
            Some(s) => self.data[s] = v,
            None => debug_assert!(v == C64::new(0.0, 0.0), "nonzero outside the band"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn matches_dense_solution() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let (n, kl, ku) = (40, 3, 2);
        let mut a = Banded::zeros(n, kl, ku);
        let mut dense = vec![C64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for j in i.saturating_sub(kl)..(i + ku + 1).min(n) {
                // weak diagonal forces row exchanges
                let v = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * if i == j { 0.01 } else { 1.0 };
                a.add(i, j, v);
                dense[i * n + j] = v;
            }
        }
        let x: Vec<C64> = (0..n).map(|i| C64::new(i as f64, 1.0)).collect();
        let b: Vec<C64> = (0..n).map(|i| (0..n).map(|j| dense[i * n + j] * x[j]).sum()).collect();
        let mut rhs = vec![b];
        a.solve(&mut rhs).unwrap();
        let err = rhs[0].iter().zip(&x).map(|(u, v)| (u - v).norm()).fold(0.0, f64::max);
        assert!(err < 1e-9, "{err}");
    }
}
