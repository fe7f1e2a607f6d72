//! Time integration of the nonlocal Cahn-Hilliard model with obstacle
//! potential, the random initial condition, and the mass-fraction output.

mod banded;
mod initial;
mod model;
mod step;

pub use initial::{
    initial_condition, nuclei_profile, Nucleus, RandomInputs, CENTERS, ETA_RANGE, MU_RANGE,
};
pub use model::{
    evaluate_model, mass_fraction_ooi, run_simulation, Evaluation, Model, ModelSpec,
    SimulationOutput, NOMINAL_FLOP_RATE,
};
pub use step::{time_step, StepReport, StepSolver, StepState};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How the interaction layer is populated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InteractionMode {
    /// Initial profile evaluated on the layer and held fixed.
    #[default]
    Initial,
    /// Layer frozen at the pure phase `u = 1`.
    PurePhase,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimParams {
    pub beta1: f64,
    pub beta2: f64,
    pub dt: f64,
    pub t_final: f64,
    pub solver_tol: f64,
    pub solver_max_iter: usize,
    pub interaction: InteractionMode,
}

impl Default for SimParams {
    fn default() -> Self {
        SimParams {
            beta1: 1.0,
            beta2: 0.05,
            dt: 0.01,
            t_final: 1.0,
            solver_tol: 1e-10,
            solver_max_iter: 100,
            interaction: InteractionMode::Initial,
        }
    }
}

impl SimParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) {
            return Err(Error::invalid(format!("time step must be positive, got {}", self.dt)));
        }
        if !(self.t_final >= self.dt * (1.0 - 1e-12)) {
            return Err(Error::invalid(format!(
                "final time {} is shorter than one step {}",
                self.t_final, self.dt
            )));
        }
        if !(self.beta1 >= 0.0 && self.beta2 >= 0.0) || (self.beta1 == 0.0 && self.beta2 == 0.0) {
            return Err(Error::invalid(format!(
                "need beta1, beta2 >= 0, not both zero (got {}, {})",
                self.beta1, self.beta2
            )));
        }
        if !(self.solver_tol > 0.0) || self.solver_max_iter == 0 {
            return Err(Error::invalid("solver tolerance and sweep limit must be positive"));
        }
        Ok(())
    }

    /// Number of steps to reach the final time.
    pub fn steps(&self) -> usize {
        (self.t_final / self.dt).round().max(1.0) as usize
    }
}
