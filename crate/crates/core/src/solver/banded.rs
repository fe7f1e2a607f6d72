//! Square band matrix with an in-place LU factorization without pivoting.
//!
//! The active-set systems assembled by the step solver are diagonally
//! dominant, so elimination without row exchanges is stable; a pivot that
//! collapses below `PIVOT_FLOOR` relative to its row is reported instead.

const PIVOT_FLOOR: f64 = 1e-13;

#[derive(Debug, Clone)]
pub(crate) struct BandMatrix {
    n: usize,
    bw: usize,
    // row-major, each row holds columns r - bw ..= r + bw
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, bw: usize) -> Self {
        BandMatrix {
            n,
            bw,
            data: vec![0.0; n * (2 * bw + 1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    fn slot(&self, r: usize, c: usize) -> usize {
        debug_assert!(c + self.bw >= r && c <= r + self.bw);
        r * (2 * self.bw + 1) + (c + self.bw - r)
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        let s = self.slot(r, c);
        self.data[s] = v;
    }

    pub fn clear_row(&mut self, r: usize) {
        let w = 2 * self.bw + 1;
        self.data[r * w..(r + 1) * w].fill(0.0);
    }

    /// Factorizes in place into unit-lower `L` and upper `U`. Returns the
    /// index of the first unusable pivot on failure.
    pub fn factorize(mut self) -> Result<BandLu, usize> {
        let (n, bw) = (self.n, self.bw);
        let w = 2 * bw + 1;
        for k in 0..n {
            let row_scale = self.data[k * w..(k + 1) * w]
                .iter()
                .fold(0.0f64, |m, v| m.max(v.abs()));
            let pivot = self.data[self.slot(k, k)];
            if !(pivot.abs() > PIVOT_FLOOR * row_scale) {
                return Err(k);
            }
            let last = (k + bw).min(n - 1);
            let len = last - k;
            let (head, tail) = self.data.split_at_mut((k + 1) * w);
            let src = &head[k * w + bw + 1..k * w + bw + 1 + len];
            for r in k + 1..=last {
                // rows are contiguous in the column index, so row r columns
                // k..=last start at offset bw - (r - k)
                let base = (r - k - 1) * w + bw - (r - k);
                let l = tail[base] / pivot;
                if l == 0.0 {
                    continue;
                }
                tail[base] = l;
                for (d, s) in tail[base + 1..base + 1 + len].iter_mut().zip(src) {
                    *d -= l * s;
                }
            }
        }
        Ok(BandLu { m: self })
    }
}

#[derive(Debug, Clone)]
pub(crate) struct BandLu {
    m: BandMatrix,
}

impl BandLu {
    pub fn solve_in_place(&self, x: &mut [f64]) {
        let (n, bw) = (self.m.n, self.m.bw);
        debug_assert_eq!(x.len(), n);
        for r in 0..n {
            let first = r.saturating_sub(bw);
            let mut acc = x[r];
            for c in first..r {
                acc -= self.m.data[self.m.slot(r, c)] * x[c];
            }
            x[r] = acc;
        }
        for r in (0..n).rev() {
            let last = (r + bw).min(n - 1);
            let mut acc = x[r];
            for c in r + 1..=last {
                acc -= self.m.data[self.m.slot(r, c)] * x[c];
            }
            x[r] = acc / self.m.data[self.m.slot(r, r)];
        }
    }

    /// Operation count of one factorization of this shape.
    pub fn factor_work(n: usize, bw: usize) -> u64 {
        2 * (n * bw * bw) as u64
    }

    pub fn solve_work(&self) -> u64 {
        4 * (self.m.n * self.m.bw) as u64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_tridiagonal_system() {
        let n = 6;
        let mut a = BandMatrix::zeros(n, 1);
        for r in 0..n {
            a.set(r, r, 4.0);
            if r > 0 {
                a.set(r, r - 1, -1.0);
            }
            if r + 1 < n {
                a.set(r, r + 1, -2.0);
            }
        }
        let x_true: Vec<f64> = (0..n).map(|k| k as f64 - 2.5).collect();
        let mut b = vec![0.0; n];
        for r in 0..n {
            b[r] = 4.0 * x_true[r];
            if r > 0 {
                b[r] -= x_true[r - 1];
            }
            if r + 1 < n {
                b[r] -= 2.0 * x_true[r + 1];
            }
        }
        let lu = a.factorize().unwrap();
        lu.solve_in_place(&mut b);
        for (x, t) in b.iter().zip(&x_true) {
            assert!((x - t).abs() < 1e-13);
        }
    }

    #[test]
    fn reports_zero_pivot() {
        let mut a = BandMatrix::zeros(3, 1);
        a.set(0, 0, 1.0);
        a.set(1, 1, 0.0);
        a.set(2, 2, 1.0);
        assert_eq!(a.factorize().unwrap_err(), 1);
    }
}
