use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{build_grid, Field, Grid, NodeKind};
use crate::kernel::{build_stencil, ConvolutionStencil, KernelParams};

use super::initial::{initial_condition, RandomInputs};
use super::step::{StepReport, StepSolver, StepState};
use super::{InteractionMode, SimParams};

/// Operations per second used to convert counted work into nominal seconds.
pub const NOMINAL_FLOP_RATE: f64 = 1e9;

/// One member of the model family: a mesh resolution paired with a horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub id: usize,
    /// Cells per side of the unit square; the mesh width is `1 / cells`.
    pub cells: usize,
    pub delta: f64,
    #[serde(default)]
    pub label: String,
}

impl ModelSpec {
    pub fn new(id: usize, cells: usize, delta: f64) -> Self {
        ModelSpec {
            id,
            cells,
            delta,
            label: format!("h=1/{cells} delta={delta}"),
        }
    }

    pub fn h(&self) -> f64 {
        1.0 / self.cells as f64
    }
}

/// A model with its lattice and stencil built once.
#[derive(Debug, Clone)]
pub struct Model {
    spec: ModelSpec,
    kernel: KernelParams,
    grid: Grid,
    stencil: ConvolutionStencil,
}

#[derive(Debug, Clone)]
pub struct SimulationOutput {
    pub u: Field,
    pub steps: usize,
    pub seconds: f64,
    pub work: u64,
    pub max_sweeps: usize,
    pub factorizations: usize,
    pub max_complementarity: f64,
    pub max_residual: f64,
}

/// Output of interest with the cost of producing it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub ooi: f64,
    /// Measured wall-clock seconds of the forward run.
    pub seconds: f64,
    /// Counted work converted at [`NOMINAL_FLOP_RATE`].
    pub nominal_seconds: f64,
}

impl Model {
    /// `base` supplies `eps2`, `delta_hf` and `c_f`; the horizon comes from
    /// the spec.
    pub fn new(spec: ModelSpec, base: &KernelParams) -> Result<Self> {
        let kernel = KernelParams {
            delta: spec.delta,
            ..*base
        };
        kernel.validate()?;
        let grid = build_grid(spec.cells, kernel.delta_hf)?;
        let stencil = build_stencil(&grid, &kernel)?;
        Ok(Model {
            spec,
            kernel,
            grid,
            stencil,
        })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn id(&self) -> usize {
        self.spec.id
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn stencil(&self) -> &ConvolutionStencil {
        &self.stencil
    }

    pub fn kernel(&self) -> &KernelParams {
        &self.kernel
    }

    /// Initial field for `theta` with the interaction layer set per `mode`.
    pub fn initial_field(&self, theta: &RandomInputs, mode: InteractionMode) -> Result<Field> {
        let mut u = initial_condition(theta, &self.grid)?;
        if mode == InteractionMode::PurePhase {
            let side = self.grid.side();
            let vals = u.values_mut();
            for i in 0..side {
                for j in 0..side {
                    if self.grid.kind(i, j) == NodeKind::Interaction {
                        vals[i * side + j] = 1.0;
                    }
                }
            }
        }
        Ok(u)
    }

    /// Integrates from `u0` to the final time, calling `observer` after the
    /// initial state and after every step.
    pub fn simulate_from(
        &self,
        u0: Field,
        params: &SimParams,
        mut observer: impl FnMut(&StepState, Option<&StepReport>),
    ) -> Result<SimulationOutput> {
        u0.check_grid(&self.grid)?;
        let start = Instant::now();
        let mut solver = StepSolver::new(&self.grid, &self.stencil, *params)?;
        let mut state = StepState::initial(u0, &self.grid);
        observer(&state, None);
        let steps = params.steps();
        let mut out = SimulationOutput {
            u: Field::constant(&self.grid, 0.0),
            steps,
            seconds: 0.0,
            work: 0,
            max_sweeps: 0,
            factorizations: 0,
            max_complementarity: 0.0,
            max_residual: 0.0,
        };
        for _ in 0..steps {
            let (next, report) = solver.step(&state)?;
            out.max_sweeps = out.max_sweeps.max(report.sweeps);
            out.factorizations += report.factorizations;
            out.max_complementarity = out.max_complementarity.max(report.complementarity);
            out.max_residual = out
                .max_residual
                .max(report.evolution_residual.max(report.potential_residual));
            observer(&next, Some(&report));
            state = next;
        }
        out.u = state.u;
        out.work = solver.work();
        out.seconds = start.elapsed().as_secs_f64();
        Ok(out)
    }

    pub fn simulate(&self, theta: &RandomInputs, params: &SimParams) -> Result<SimulationOutput> {
        let u0 = self.initial_field(theta, params.interaction)?;
        self.simulate_from(u0, params, |_, _| {})
    }

    pub fn evaluate(&self, theta: &RandomInputs, params: &SimParams) -> Result<Evaluation> {
        let out = self.simulate(theta, params)?;
        Ok(Evaluation {
            ooi: mass_fraction_ooi(&out.u, &self.grid)?,
            seconds: out.seconds,
            nominal_seconds: out.work as f64 / NOMINAL_FLOP_RATE,
        })
    }
}

pub fn run_simulation(
    theta: &RandomInputs,
    model: &Model,
    params: &SimParams,
) -> Result<SimulationOutput> {
    model.simulate(theta, params)
}

pub fn evaluate_model(model: &Model, theta: &RandomInputs, params: &SimParams) -> Result<Evaluation> {
    model.evaluate(theta, params)
}

/// Fraction of the domain in the `u = 1` phase: `(1 + mean u) / 2` over the
/// interior nodes, each carrying the same lumped mass.
pub fn mass_fraction_ooi(u: &Field, grid: &Grid) -> Result<f64> {
    u.check_grid(grid)?;
    let n = grid.interior_count();
    if n == 0 {
        return Err(Error::invalid("grid has no interior nodes"));
    }
    let vals = u.values();
    let total: f64 = (0..n).map(|k| vals[grid.interior_node(k)]).sum();
    Ok(0.5 * (1.0 + total / n as f64))
}
