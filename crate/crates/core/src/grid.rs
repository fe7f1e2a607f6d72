//! Uniform node lattice over the unit square plus the surrounding
//! interaction layer.
//!
//! Nodes are indexed `(i, j)` with `i` the row (y direction) and `j` the
//! column (x direction). Node `(pad, pad)` sits at the origin, so the node
//! at `(i, j)` has coordinates `((j - pad) h, (i - pad) h)`. Nodes strictly
//! inside the open square are the evolution unknowns; every other node,
//! including those on the boundary of the square, belongs to the
//! interaction layer and carries a prescribed value.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Interior,
    Interaction,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    cells: usize,
    h: f64,
    pad: usize,
    side: usize,
}

/// Builds the padded lattice for `cells` cells per side, with enough layers
/// outside the square to cover a horizon of `delta_hf`.
pub fn build_grid(cells: usize, delta_hf: f64) -> Result<Grid> {
    if cells < 4 {
        return Err(Error::invalid(format!(
            "grid needs at least 4 cells per side, got {cells}"
        )));
    }
    if !(delta_hf > 0.0) || !delta_hf.is_finite() {
        return Err(Error::invalid(format!(
            "interaction horizon must be positive, got {delta_hf}"
        )));
    }
    let h = 1.0 / cells as f64;
    let pad = ceil_lattice(delta_hf * cells as f64);
    Ok(Grid {
        cells,
        h,
        pad,
        side: cells + 2 * pad + 1,
    })
}

/// `ceil` that treats values within rounding of an integer as that integer.
pub(crate) fn ceil_lattice(x: f64) -> usize {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * r.max(1.0) {
        r as usize
    } else {
        x.ceil() as usize
    }
}

impl Grid {
    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn pad(&self) -> usize {
        self.pad
    }

    /// Nodes per side of the padded square.
    pub fn side(&self) -> usize {
        self.side
    }

    pub fn node_count(&self) -> usize {
        self.side * self.side
    }

    /// Interior nodes per side.
    pub fn interior_side(&self) -> usize {
        self.cells - 1
    }

    pub fn interior_count(&self) -> usize {
        self.interior_side() * self.interior_side()
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.side + j
    }

    /// Coordinates `(x, y)` of node `(i, j)`.
    pub fn coords(&self, i: usize, j: usize) -> (f64, f64) {
        (
            (j as f64 - self.pad as f64) * self.h,
            (i as f64 - self.pad as f64) * self.h,
        )
    }

    pub fn kind(&self, i: usize, j: usize) -> NodeKind {
        let lo = self.pad;
        let hi = self.pad + self.cells;
        if i > lo && i < hi && j > lo && j < hi {
            NodeKind::Interior
        } else {
            NodeKind::Interaction
        }
    }

    /// Linear node index of the `k`-th interior node (interior nodes are
    /// enumerated row by row).
    #[inline]
    pub fn interior_node(&self, k: usize) -> usize {
        let n = self.interior_side();
        let (r, c) = (k / n, k % n);
        self.index(r + self.pad + 1, c + self.pad + 1)
    }

    /// Linear indices of all interior nodes in interior order.
    pub fn interior_nodes(&self) -> Vec<usize> {
        (0..self.interior_count())
            .map(|k| self.interior_node(k))
            .collect()
    }
}

/// Nodal values on the whole padded lattice, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    side: usize,
    values: Vec<f64>,
}

impl Field {
    pub fn constant(grid: &Grid, value: f64) -> Self {
        Field {
            side: grid.side(),
            values: vec![value; grid.node_count()],
        }
    }

    pub fn from_fn(grid: &Grid, mut f: impl FnMut(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.node_count());
        for i in 0..grid.side() {
            for j in 0..grid.side() {
                let (x, y) = grid.coords(i, j);
                values.push(f(x, y));
            }
        }
        Field {
            side: grid.side(),
            values,
        }
    }

    pub fn from_values(grid: &Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.node_count() {
            return Err(Error::invalid(format!(
                "field has {} values, grid has {} nodes",
                values.len(),
                grid.node_count()
            )));
        }
        Ok(Field {
            side: grid.side(),
            values,
        })
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.side + j]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.side)
    }

    pub(crate) fn check_grid(&self, grid: &Grid) -> Result<()> {
        if self.side != grid.side() || self.values.len() != grid.node_count() {
            return Err(Error::invalid(format!(
                "field of side {} does not match grid of side {}",
                self.side,
                grid.side()
            )));
        }
        Ok(())
    }

    /// Values at interior nodes in interior order.
    pub fn interior(&self, grid: &Grid) -> Vec<f64> {
        (0..grid.interior_count())
            .map(|k| self.values[grid.interior_node(k)])
            .collect()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Mirror image under `(x, y) -> (y, x)`.
    pub fn transposed(&self) -> Field {
        let n = self.side;
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                values[j * n + i] = self.values[i * n + j];
            }
        }
        Field { side: n, values }
    }

    /// Mirror image under `x -> 1 - x`.
    pub fn reflected_x(&self) -> Field {
        let n = self.side;
        let mut values = self.values.clone();
        for row in values.chunks_mut(n) {
            row.reverse();
        }
        Field { side: n, values }
    }

    /// Number of 4-connected regions where the field is negative.
    pub fn negative_components(&self) -> usize {
        self.components_below(0.0)
    }

    /// Number of 4-connected regions where the field is below `threshold`.
    pub fn components_below(&self, threshold: f64) -> usize {
        let n = self.side;
        let mut seen = vec![false; n * n];
        let mut count = 0;
        let mut stack = Vec::new();
        for start in 0..n * n {
            if seen[start] || self.values[start] >= threshold {
                continue;
            }
            count += 1;
            seen[start] = true;
            stack.push(start);
            while let Some(p) = stack.pop() {
                let (i, j) = (p / n, p % n);
                let mut visit = |q: usize| {
                    if !seen[q] && self.values[q] < threshold {
                        seen[q] = true;
                        stack.push(q);
                    }
                };
                if i > 0 {
                    visit(p - n);
                }
                if i + 1 < n {
                    visit(p + n);
                }
                if j > 0 {
                    visit(p - 1);
                }
                if j + 1 < n {
                    visit(p + 1);
                }
            }
        }
        count
    }
}
