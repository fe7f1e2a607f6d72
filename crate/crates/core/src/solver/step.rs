//! One implicit step of the nonlocal Cahn-Hilliard system with obstacle
//! potential.
//!
//! With `S = dt (beta1 I - beta2 Δ_h)` acting on interior nodes, the step
//! solves
//!
//! ```text
//! u - u_old + S w = 0
//! w = xi u - g + lambda,      lambda ∈ ∂I_[-1,1](u)
//! ```
//!
//! where `g = γ * u_old` is the explicit convolution and `xi = c_gamma - c_F`.
//! The complementarity condition is handled by a primal-dual active-set
//! iteration. For a fixed active set the unknown is `w`:
//!
//! ```text
//! inactive:          w + xi (S w) = xi u_old - g     (lambda = 0)
//! active at b = ±1:  (S w)        = u_old - b        (u = b)
//! ```
//!
//! `Δ_h` is the 5-point Laplacian with zero-flux closure: a neighbour outside
//! the interior is replaced by the centre value.

use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::kernel::ConvolutionStencil;

use super::banded::{BandLu, BandMatrix};
use super::SimParams;

/// Solution at one time level. `w` and `lambda` live on interior nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct StepState {
    pub u: Field,
    pub w: Vec<f64>,
    pub lambda: Vec<f64>,
    pub t: f64,
    pub step: usize,
}

impl StepState {
    pub fn initial(u: Field, grid: &Grid) -> Self {
        let n = grid.interior_count();
        StepState {
            u,
            w: vec![0.0; n],
            lambda: vec![0.0; n],
            t: 0.0,
            step: 0,
        }
    }
}

/// Diagnostics of an accepted step, all max-norms over interior nodes.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StepReport {
    pub sweeps: usize,
    pub factorizations: usize,
    /// `|u - P(u + lambda)|`, zero iff the obstacle complementarity holds.
    pub complementarity: f64,
    /// Residual of `u - u_old + S w = 0`.
    pub evolution_residual: f64,
    /// Residual of `w - xi u + g - lambda = 0`.
    pub potential_residual: f64,
}

struct Factored {
    active: Vec<bool>,
    pinned: bool,
    lu: BandLu,
}

/// Reusable workspace for stepping one model; caches the factorization of
/// the last active pattern.
pub struct StepSolver<'a> {
    grid: &'a Grid,
    stencil: &'a ConvolutionStencil,
    params: SimParams,
    cache: Option<Factored>,
    work: u64,
    conv: Vec<f64>,
    u_old: Vec<f64>,
    sw: Vec<f64>,
}

impl<'a> StepSolver<'a> {
    pub fn new(grid: &'a Grid, stencil: &'a ConvolutionStencil, params: SimParams) -> Result<Self> {
        params.validate()?;
        let n = grid.interior_count();
        Ok(StepSolver {
            grid,
            stencil,
            params,
            cache: None,
            work: 0,
            conv: vec![0.0; n],
            u_old: vec![0.0; n],
            sw: vec![0.0; n],
        })
    }

    /// Floating-point operations performed so far.
    pub fn work(&self) -> u64 {
        self.work
    }

    fn apply_s(&self, w: &[f64], out: &mut [f64]) {
        let n = self.grid.interior_side();
        let p = &self.params;
        let c0 = p.dt * p.beta1;
        let c1 = p.dt * p.beta2 / (self.grid.h() * self.grid.h());
        for r in 0..n {
            for c in 0..n {
                let q = r * n + c;
                let mut lap = 0.0;
                if r > 0 {
                    lap += w[q] - w[q - n];
                }
                if r + 1 < n {
                    lap += w[q] - w[q + n];
                }
                if c > 0 {
                    lap += w[q] - w[q - 1];
                }
                if c + 1 < n {
                    lap += w[q] - w[q + 1];
                }
                out[q] = c0 * w[q] + c1 * lap;
            }
        }
    }

    fn assemble(&self, active: &[bool], pinned: bool) -> BandMatrix {
        let n = self.grid.interior_side();
        let p = &self.params;
        let xi = self.stencil.xi();
        let c0 = p.dt * p.beta1;
        let c1 = p.dt * p.beta2 / (self.grid.h() * self.grid.h());
        let mut m = BandMatrix::zeros(n * n, n);
        for r in 0..n {
            for c in 0..n {
                let q = r * n + c;
                let mut nbrs = [None; 4];
                if r > 0 {
                    nbrs[0] = Some(q - n);
                }
                if r + 1 < n {
                    nbrs[1] = Some(q + n);
                }
                if c > 0 {
                    nbrs[2] = Some(q - 1);
                }
                if c + 1 < n {
                    nbrs[3] = Some(q + 1);
                }
                let deg = nbrs.iter().flatten().count() as f64;
                let scale = if active[q] { 1.0 } else { xi };
                let identity = if active[q] { 0.0 } else { 1.0 };
                m.set(q, q, identity + scale * (c0 + c1 * deg));
                for &nb in nbrs.iter().flatten() {
                    m.set(q, nb, -scale * c1);
                }
            }
        }
        if pinned {
            m.clear_row(0);
            m.set(0, 0, 1.0);
        }
        m
    }

    fn factor(&mut self, active: &[bool], pinned: bool) -> Result<()> {
        let fresh = match &self.cache {
            Some(f) => f.pinned != pinned || f.active != active,
            None => true,
        };
        if fresh {
            let m = self.assemble(active, pinned);
            let n = m.dim();
            let lu = m.factorize().map_err(|_| Error::Convergence {
                step: 0,
                iterations: 0,
                residual: f64::INFINITY,
            })?;
            self.work += BandLu::factor_work(n, self.grid.interior_side());
            self.cache = Some(Factored {
                active: active.to_vec(),
                pinned,
                lu,
            });
        }
        Ok(())
    }

    /// Advances `state` by one time step.
    pub fn step(&mut self, state: &StepState) -> Result<(StepState, StepReport)> {
        let grid = self.grid;
        state.u.check_grid(grid)?;
        let n = grid.interior_count();
        if state.w.len() != n || state.lambda.len() != n {
            return Err(Error::invalid("state multipliers do not match the interior"));
        }
        let xi = self.stencil.xi();
        let tol = self.params.solver_tol;
        let step_index = state.step + 1;

        self.stencil.convolve_into(grid, state.u.values(), &mut self.conv);
        self.work += self.stencil.work(grid);
        for k in 0..n {
            self.u_old[k] = state.u.values()[grid.interior_node(k)];
        }

        let mut u = self.u_old.clone();
        let mut lambda = state.lambda.clone();
        let mut w = vec![0.0; n];
        let mut bound = vec![0.0f64; n];
        let mut active = vec![false; n];
        let mut report = StepReport::default();
        let mut residual = f64::INFINITY;
        // Each iterate depends only on the active pattern, so a repeated
        // pattern is a cycle; restart once from the cold guess.
        let mut seen: HashSet<Vec<i8>> = HashSet::new();
        let mut restarted = false;

        for sweep in 1..=self.params.solver_max_iter {
            for k in 0..n {
                bound[k] = if lambda[k] + (u[k] - 1.0) > 0.0 {
                    1.0
                } else if lambda[k] + (u[k] + 1.0) < 0.0 {
                    -1.0
                } else {
                    0.0
                };
                active[k] = bound[k] != 0.0;
            }
            if !seen.insert(bound.iter().map(|&b| b as i8).collect()) {
                if restarted {
                    break;
                }
                restarted = true;
                seen.clear();
                u.copy_from_slice(&self.u_old);
                lambda.iter_mut().for_each(|l| *l = 0.0);
                for k in 0..n {
                    bound[k] = if u[k] > 1.0 {
                        1.0
                    } else if u[k] < -1.0 {
                        -1.0
                    } else {
                        0.0
                    };
                    active[k] = bound[k] != 0.0;
                }
                seen.insert(bound.iter().map(|&b| b as i8).collect());
            }
            let pinned = self.params.beta1 == 0.0 && active.iter().all(|&a| a);
            let before = self.work;
            self.factor(&active, pinned).map_err(|_| Error::Convergence {
                step: step_index,
                iterations: sweep,
                residual,
            })?;
            if self.work != before {
                report.factorizations += 1;
            }

            for k in 0..n {
                w[k] = if active[k] {
                    self.u_old[k] - bound[k]
                } else {
                    xi * self.u_old[k] - self.conv[k]
                };
            }
            if pinned {
                w[0] = 0.0;
            }
            let cache = self.cache.as_ref().expect("factorization present");
            cache.lu.solve_in_place(&mut w);
            self.work += cache.lu.solve_work();
            if pinned {
                self.shift_pinned(&mut w, &bound);
            }

            let mut sw = std::mem::take(&mut self.sw);
            self.apply_s(&w, &mut sw);
            self.work += 10 * n as u64;
            residual = 0.0f64;
            for k in 0..n {
                if active[k] {
                    u[k] = bound[k];
                    lambda[k] = w[k] - xi * bound[k] + self.conv[k];
                } else {
                    u[k] = self.u_old[k] - sw[k];
                    lambda[k] = 0.0;
                }
                let ncp = u[k] - (u[k] + lambda[k]).clamp(-1.0, 1.0);
                residual = residual.max(ncp.abs());
            }
            report.sweeps = sweep;
            if residual <= tol {
                for v in u.iter_mut() {
                    *v = v.clamp(-1.0, 1.0);
                }
                report.complementarity = residual;
                for k in 0..n {
                    report.evolution_residual = report
                        .evolution_residual
                        .max((u[k] - self.u_old[k] + sw[k]).abs());
                    report.potential_residual = report
                        .potential_residual
                        .max((w[k] - xi * u[k] + self.conv[k] - lambda[k]).abs());
                }
                self.sw = sw;
                if report.evolution_residual > tol || report.potential_residual > tol {
                    return Err(Error::Convergence {
                        step: step_index,
                        iterations: sweep,
                        residual: report.evolution_residual.max(report.potential_residual),
                    });
                }
                let mut next = state.u.clone();
                let vals = next.values_mut();
                for (k, &v) in u.iter().enumerate() {
                    vals[grid.interior_node(k)] = v;
                }
                return Ok((
                    StepState {
                        u: next,
                        w,
                        lambda,
                        t: state.t + self.params.dt,
                        step: step_index,
                    },
                    report,
                ));
            }
            self.sw = sw;
        }
        Err(Error::Convergence {
            step: step_index,
            iterations: report.sweeps,
            residual,
        })
    }

    // With beta1 = 0 and every node active, `w` is fixed only up to a
    // constant; pick the one closest to zero that keeps the multiplier signs.
    fn shift_pinned(&self, w: &mut [f64], bound: &[f64]) {
        let xi = self.stencil.xi();
        let mut lo = f64::NEG_INFINITY;
        let mut hi = f64::INFINITY;
        for k in 0..w.len() {
            let base = w[k] - xi * bound[k] + self.conv[k];
            if bound[k] > 0.0 {
                lo = lo.max(-base);
            } else {
                hi = hi.min(-base);
            }
        }
        let shift = if lo <= hi { 0.0f64.clamp(lo, hi) } else { lo };
        for v in w.iter_mut() {
            *v += shift;
        }
    }
}

/// One step with a fresh workspace.
pub fn time_step(
    state: &StepState,
    grid: &Grid,
    stencil: &ConvolutionStencil,
    params: &SimParams,
) -> Result<(StepState, StepReport)> {
    StepSolver::new(grid, stencil, *params)?.step(state)
}
