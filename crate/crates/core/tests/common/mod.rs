#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use phasefield_mfmc::harness::io::parse_stats;
use phasefield_mfmc::mfmc::{ModelStat, ModelStats};
use phasefield_mfmc::solver::{InteractionMode, SimParams};
use phasefield_mfmc::{Field, Grid, KernelParams};

pub const PUBLISHED: &str = include_str!("../../fixtures/published_stats.csv");

pub fn published() -> ModelStats {
    parse_stats(PUBLISHED, "published_stats.csv").unwrap()
}

pub fn kernel(delta: f64) -> KernelParams {
    KernelParams {
        eps2: 0.00178,
        delta_hf: 0.25,
        delta,
        c_f: 1.0,
    }
}

pub fn params(beta1: f64, beta2: f64) -> SimParams {
    SimParams {
        beta1,
        beta2,
        dt: 0.01,
        t_final: 1.0,
        solver_tol: 1e-10,
        solver_max_iter: 100,
        interaction: InteractionMode::Initial,
    }
}

/// Gaussian kernel written out from its closed form.
pub fn gamma(r: f64, k: &KernelParams) -> f64 {
    let s = k.delta_hf / 3.0;
    if r > k.delta * (1.0 + 1e-12) {
        return 0.0;
    }
    4.0 * k.eps2 / (std::f64::consts::PI * s.powi(4)) * (-(r * r) / (s * s)).exp()
}

/// `(γ * u)` at interior nodes by a double loop over every node of the grid.
pub fn naive_convolution(grid: &Grid, k: &KernelParams, u: &Field) -> Vec<f64> {
    let h = grid.h();
    let side = grid.side();
    let n = grid.interior_side();
    let pad = grid.pad();
    let mut out = Vec::with_capacity(n * n);
    for r in 0..n {
        for c in 0..n {
            let (i0, j0) = (r + pad + 1, c + pad + 1);
            let mut acc = 0.0;
            for i in 0..side {
                for j in 0..side {
                    let di = i as f64 - i0 as f64;
                    let dj = j as f64 - j0 as f64;
                    let dist = (di * di + dj * dj).sqrt() * h;
                    acc += gamma(dist, k) * h * h * u.get(i, j);
                }
            }
            out.push(acc);
        }
    }
    out
}

/// Dense `S = dt (beta1 I - beta2 Δ_h)` on the interior with zero-flux
/// closure.
pub fn s_matrix(n: usize, h: f64, p: &SimParams) -> DMatrix<f64> {
    let m = n * n;
    let mut s = DMatrix::zeros(m, m);
    let c1 = p.dt * p.beta2 / (h * h);
    for r in 0..n {
        for c in 0..n {
            let q = r * n + c;
            s[(q, q)] += p.dt * p.beta1;
            let mut nb = Vec::new();
            if r > 0 {
                nb.push(q - n);
            }
            if r + 1 < n {
                nb.push(q + n);
            }
            if c > 0 {
                nb.push(q - 1);
            }
            if c + 1 < n {
                nb.push(q + 1);
            }
            for o in nb {
                s[(q, q)] += c1;
                s[(q, o)] -= c1;
            }
        }
    }
    s
}

/// Solves `u - u_old + S (xi u - g + lambda) = 0` with `lambda` in the normal
/// cone of `[-1, 1]` at `u` by trying every split of the nodes into free and
/// clamped ones. A clamped node sits at the bound on the side of its old
/// value. Returns every split whose solution satisfies the complementarity
/// conditions, as `(u, lambda)`.
pub fn enumerate_step(
    u_old: &[f64],
    g: &[f64],
    s: &DMatrix<f64>,
    xi: f64,
) -> Vec<(Vec<f64>, Vec<f64>)> {
    let m = u_old.len();
    assert!(m <= 20);
    let a = DMatrix::identity(m, m) + s * xi;
    let rhs0 = DVector::from_column_slice(u_old) + s * DVector::from_column_slice(g);
    let side: Vec<f64> = u_old.iter().map(|&v| if v >= 0.0 { 1.0 } else { -1.0 }).collect();
    let tol = 1e-11;
    let mut found = Vec::new();
    for mask in 0u32..(1 << m) {
        // bit set: clamped at the bound `side`
        let mut sys = DMatrix::zeros(m, m);
        let mut rhs = rhs0.clone();
        for q in 0..m {
            if mask >> q & 1 == 1 {
                sys.set_column(q, &s.column(q));
                for row in 0..m {
                    rhs[row] -= a[(row, q)] * side[q];
                }
            } else {
                sys.set_column(q, &a.column(q));
            }
        }
        let Some(x) = sys.lu().solve(&rhs) else {
            continue;
        };
        let mut u = vec![0.0; m];
        let mut lam = vec![0.0; m];
        let mut ok = true;
        for q in 0..m {
            if mask >> q & 1 == 1 {
                u[q] = side[q];
                lam[q] = x[q];
                ok &= lam[q] * side[q] >= -tol;
            } else {
                u[q] = x[q];
                ok &= u[q].abs() <= 1.0 + tol;
            }
        }
        if ok {
            found.push((u, lam));
        }
    }
    found
}

/// Random field with every node in `±[lo, 1]` and some at exactly `±1`.
pub fn random_admissible(grid: &Grid, rng: &mut impl Rng, lo: f64) -> Field {
    let n = grid.node_count();
    let vals = (0..n)
        .map(|_| {
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            if rng.random::<f64>() < 0.3 {
                sign
            } else {
                sign * rng.random_range(lo..1.0)
            }
        })
        .collect();
    Field::from_values(grid, vals).unwrap()
}

/// Three models of `theta ~ U(0, 1)` with closed-form statistics:
/// `f1 = theta^2`, `f2 = theta^2 + 0.1 theta`, `f3 = theta`.
pub struct Synthetic;

impl Synthetic {
    pub const MEAN_F1: f64 = 1.0 / 3.0;

    pub fn eval(model: usize, t: f64) -> f64 {
        match model {
            1 => t * t,
            2 => t * t + 0.1 * t,
            3 => t,
            _ => unreachable!(),
        }
    }

    /// Exact moments of the three outputs.
    pub fn stats() -> ModelStats {
        // E t^k = 1/(k+1)
        let e = |k: i32| 1.0 / (k as f64 + 1.0);
        let mean = [e(2), e(2) + 0.1 * e(1), e(1)];
        // second moments and cross moments with f1
        let sq = [e(4), e(4) + 0.2 * e(3) + 0.01 * e(2), e(2)];
        let cross = [e(4), e(4) + 0.1 * e(3), e(3)];
        let var: Vec<f64> = (0..3).map(|k| sq[k] - mean[k] * mean[k]).collect();
        let cov: Vec<f64> = (0..3).map(|k| cross[k] - mean[0] * mean[k]).collect();
        let costs = [1.0, 0.05, 0.002];
        let models = (0..3)
            .map(|k| ModelStat {
                id: k + 1,
                h: 0.0,
                delta: 0.0,
                rho: if k == 0 { 1.0 } else { cov[k] / (var[0] * var[k]).sqrt() },
                sigma: var[k].sqrt(),
                cost: costs[k],
            })
            .collect();
        ModelStats::new(models).unwrap()
    }
}
