//! Equations of motion and time integration.

pub mod flapping;
pub mod integrator;
pub mod reduced;
pub mod rotation;

use crate::tether::TetherSolution;

pub use integrator::rk4_step;

/// Loads and auxiliary outputs produced by one derivative evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantOutputs {
    pub thrust: [f64; 2],
    pub h_force: [f64; 2],
    pub torque_aero: [f64; 2],
    pub induced: [f64; 2],
    pub mu: [f64; 2],
    pub inflow_converged: [bool; 2],
    pub tether: TetherSolution,
}
