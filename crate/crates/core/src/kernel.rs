//! Truncated Gaussian interaction kernel and its lattice quadrature.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelParams {
    /// Interface parameter squared.
    pub eps2: f64,
    /// Horizon of the high-fidelity model; sets the Gaussian width and peak.
    pub delta_hf: f64,
    /// Horizon of this model; sets the support radius.
    pub delta: f64,
    /// Obstacle potential coefficient.
    pub c_f: f64,
}

impl KernelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps2 > 0.0) {
            return Err(Error::invalid(format!("eps2 must be positive, got {}", self.eps2)));
        }
        if !(self.delta > 0.0 && self.delta <= self.delta_hf) {
            return Err(Error::invalid(format!(
                "horizon must satisfy 0 < delta <= delta_hf, got delta = {}, delta_hf = {}",
                self.delta, self.delta_hf
            )));
        }
        if !(self.c_f > 0.0) {
            return Err(Error::invalid(format!("c_F must be positive, got {}", self.c_f)));
        }
        Ok(())
    }

    fn width(&self) -> f64 {
        self.delta_hf / 3.0
    }

    /// Kernel value at zero distance.
    pub fn peak(&self) -> f64 {
        let s = self.width();
        4.0 * self.eps2 / (PI * s.powi(4))
    }

    fn gaussian(&self, r: f64) -> f64 {
        let s = self.width();
        self.peak() * (-(r * r) / (s * s)).exp()
    }
}

/// Kernel value at distance `r`.
///
/// The Gaussian is scaled by the fourth power of `delta_hf / 3` so that its
/// second moment over the plane is `4 eps2`, i.e. `L u -> -eps2 Δu` as the
/// horizon shrinks, and its mass is `36 eps2 / delta_hf^2` up to the
/// truncated tail.
pub fn kernel_value(r: f64, params: &KernelParams) -> Result<f64> {
    if !(r >= 0.0) {
        return Err(Error::invalid(format!("distance must be non-negative, got {r}")));
    }
    if r > params.delta {
        return Ok(0.0);
    }
    Ok(params.gaussian(r))
}

/// Nodal quadrature of the kernel on a given lattice.
#[derive(Debug, Clone)]
pub struct ConvolutionStencil {
    taps: Vec<(isize, isize)>,
    weights: Vec<f64>,
    offsets: Vec<isize>,
    side: usize,
    radius: usize,
    c_gamma: f64,
    xi: f64,
}

/// Builds the lumped quadrature: one weight `kernel(|offset| h) h^2` per
/// lattice offset inside the closed disc of radius `delta`.
pub fn build_stencil(grid: &Grid, params: &KernelParams) -> Result<ConvolutionStencil> {
    params.validate()?;
    let h = grid.h();
    let reach = params.delta * grid.cells() as f64;
    if reach < 1.0 - 1e-12 {
        return Err(Error::DegenerateStencil {
            delta: params.delta,
            h,
        });
    }
    let radius = reach.floor() as usize + 1;
    let reach2 = reach * reach * (1.0 + 1e-12);

    let side = grid.side() as isize;
    let mut taps = Vec::new();
    let mut weights = Vec::new();
    let mut offsets = Vec::new();
    let r = radius as isize;
    for di in -r..=r {
        for dj in -r..=r {
            let d2 = (di * di + dj * dj) as f64;
            if d2 > reach2 {
                continue;
            }
            // the lattice test above is authoritative at the rim
            let w = params.gaussian(d2.sqrt() * h) * h * h;
            taps.push((di, dj));
            weights.push(w);
            offsets.push(di * side + dj);
        }
    }
    let used = taps
        .iter()
        .map(|&(di, dj)| di.unsigned_abs().max(dj.unsigned_abs()))
        .max()
        .unwrap_or(0);
    if used > grid.pad() {
        return Err(Error::invalid(format!(
            "stencil reaches {used} layers but the grid has only {} interaction layers",
            grid.pad()
        )));
    }
    let c_gamma: f64 = weights.iter().sum();
    Ok(ConvolutionStencil {
        taps,
        weights,
        offsets,
        side: grid.side(),
        radius: used,
        c_gamma,
        xi: c_gamma - params.c_f,
    })
}

impl ConvolutionStencil {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Lattice offsets `(di, dj)` and their weights.
    pub fn taps(&self) -> impl Iterator<Item = ((isize, isize), f64)> + '_ {
        self.taps.iter().copied().zip(self.weights.iter().copied())
    }

    pub fn weight(&self, di: isize, dj: isize) -> Option<f64> {
        self.taps
            .iter()
            .position(|&t| t == (di, dj))
            .map(|k| self.weights[k])
    }

    /// Largest offset along either axis.
    pub fn radius(&self) -> usize {
        self.radius
    }

    /// Discrete kernel mass, zero offset included.
    pub fn c_gamma(&self) -> f64 {
        self.c_gamma
    }

    /// Nonlocal interface parameter `c_gamma - c_F`.
    pub fn xi(&self) -> f64 {
        self.xi
    }

    fn check(&self, grid: &Grid, u: &Field) -> Result<()> {
        u.check_grid(grid)?;
        if self.side != grid.side() {
            return Err(Error::invalid(format!(
                "stencil built for side {} used on grid of side {}",
                self.side,
                grid.side()
            )));
        }
        Ok(())
    }

    /// Convolution at interior nodes, written in interior order into `out`.
    pub(crate) fn convolve_into(&self, grid: &Grid, u: &[f64], out: &mut [f64]) {
        for (k, slot) in out.iter_mut().enumerate() {
            let p = grid.interior_node(k) as isize;
            let mut acc = 0.0;
            for (&off, &w) in self.offsets.iter().zip(&self.weights) {
                acc += w * u[(p + off) as usize];
            }
            *slot = acc;
        }
    }

    /// `(γ * u)` at the interior nodes, in interior order.
    pub fn convolve(&self, grid: &Grid, u: &Field) -> Result<Vec<f64>> {
        self.check(grid, u)?;
        let mut out = vec![0.0; grid.interior_count()];
        self.convolve_into(grid, u.values(), &mut out);
        Ok(out)
    }

    /// Nonlocal operator `L u = c_gamma u - γ * u` at the interior nodes.
    pub fn apply_l(&self, grid: &Grid, u: &Field) -> Result<Vec<f64>> {
        let mut out = self.convolve(grid, u)?;
        let vals = u.values();
        for (k, v) in out.iter_mut().enumerate() {
            *v = self.c_gamma * vals[grid.interior_node(k)] - *v;
        }
        Ok(out)
    }

    /// Operation count of one interior convolution.
    pub(crate) fn work(&self, grid: &Grid) -> u64 {
        2 * (self.len() * grid.interior_count()) as u64
    }
}
