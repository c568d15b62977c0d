//! Symmetric banded matrices, their Cholesky factor and selected inversion.

use crate::error::{Error, Result};

/// Symmetric matrix with half-bandwidth `bw`, lower triangle stored by row:
/// entry `(i, j)` with `i − bw ≤ j ≤ i` lives at `i·(bw+1) + (i − j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandMatrix {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, bw: usize) -> Self {
        BandMatrix {
            n,
            bw,
            data: vec![0.0; n * (bw + 1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    /// Entry `(i, j)`; zero outside the band.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        if i - j > self.bw {
            0.0
        } else {
            self.data[i * (self.bw + 1) + (i - j)]
        }
    }

    /// Sets `(i, j)` and, implicitly, `(j, i)`.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        assert!(i - j <= self.bw, "({i}, {j}) outside the band");
        self.data[i * (self.bw + 1) + (i - j)] = v;
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    /// y = A x
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let lo = i.saturating_sub(self.bw);
            for j in lo..=i {
                let a = self.data[i * (self.bw + 1) + (i - j)];
                y[i] += a * x[j];
                if j != i {
                    y[j] += a * x[i];
                }
            }
        }
        y
    }
}

/// Lower-triangular Cholesky factor `L` with `A = L Lᵀ`, same band layout.
#[derive(Debug, Clone)]
pub struct BandCholesky {
    n: usize,
    bw: usize,
    l: Vec<f64>,
}

impl BandCholesky {
    pub fn factor(a: &BandMatrix) -> Result<Self> {
        let n = a.n;
        let bw = a.bw;
        let w = bw + 1;
        let mut l = a.data.clone();
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            for j in lo..=i {
                let mut s = l[i * w + (i - j)];
                // Σ_k L_ik L_jk over the overlap of the two row bands.
                let k0 = lo.max(j.saturating_sub(bw));
                for k in k0..j {
                    s -= l[i * w + (i - k)] * l[j * w + (j - k)];
                }
                if i == j {
                    if !(s > 0.0) || !s.is_finite() {
                        return Err(Error::Factorization { pivot: i, value: s });
                    }
                    l[i * w] = s.sqrt();
                } else {
                    l[i * w + (i - j)] = s / l[j * w];
                }
            }
        }
        Ok(BandCholesky { n, bw, l })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.l[i * (self.bw + 1) + (i - j)]
    }

    /// Entry `L_ij` for `i ≥ j`; zero outside the band.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        if j > i || i - j > self.bw {
            0.0
        } else {
            self.at(i, j)
        }
    }

    /// ln det A = 2 Σ ln L_ii
    pub fn log_det(&self) -> f64 {
        2.0 * (0..self.n).map(|i| self.at(i, i).ln()).sum::<f64>()
    }

    /// In place: x ← L⁻¹ x
    pub fn solve_lower(&self, x: &mut [f64]) {
        for i in 0..self.n {
            let lo = i.saturating_sub(self.bw);
            let mut s = x[i];
            for k in lo..i {
                s -= self.at(i, k) * x[k];
            }
            x[i] = s / self.at(i, i);
        }
    }

    /// In place: x ← L⁻ᵀ x
    pub fn solve_upper(&self, x: &mut [f64]) {
        for i in (0..self.n).rev() {
            let hi = (i + self.bw).min(self.n - 1);
            let mut s = x[i];
            for k in i + 1..=hi {
                s -= self.at(k, i) * x[k];
            }
            x[i] = s / self.at(i, i);
        }
    }

    /// In place: x ← A⁻¹ x
    pub fn solve(&self, x: &mut [f64]) {
        self.solve_lower(x);
        self.solve_upper(x);
    }

    /// Entries of A⁻¹ inside the band (Takahashi recursion). Cost
    /// `O(n·bw²)`; the diagonal is exact, not an estimate.
    pub fn selected_inverse(&self) -> BandMatrix {
        let n = self.n;
        let bw = self.bw;
        let w = bw + 1;
        let mut sig = BandMatrix::zeros(n, bw);
        // Upper-band accessor Σ_kj for k, j > i, both within the band of i.
        for i in (0..n).rev() {
            let lii = self.at(i, i);
            let hi = (i + bw).min(n.saturating_sub(1));
            for j in (i..=hi).rev() {
                let mut s = if i == j { 1.0 / lii } else { 0.0 };
                for k in i + 1..=hi {
                    let lki = self.l[k * w + (k - i)];
                    if lki == 0.0 {
                        continue;
                    }
                    s -= lki * sig.get(k, j);
                }
                sig.set(j, i, s / lii);
            }
        }
        sig
    }
}
