//! Planar rigid frame with two azimuth-averaged rotors.
//!
//! State vector: `[x, z, beta, x_dot, z_dot, beta_dot, omega_1, omega_2]`.
//! Frame axis `x_b = (cos beta, -sin beta)`, disc normal `n = (sin beta, cos beta)`
//! in `(X, Z)`, wind along `+X`. Rotor 1 sits at `C - (l/2) x_b` (the upwind,
//! upper end), rotor 2 at `C + (l/2) x_b`, so more thrust on rotor 1 raises beta.

use std::cell::Cell;

use nalgebra::{SVector, Vector2};

use crate::aero::{BemRotor, DEFAULT_AZIMUTH_STATIONS};
use crate::config::{Inertias, PhysicalParams};
use crate::error::{Error, Result};
use crate::tether::{solve_line, Line, TetherRegime, TetherSolution};

use super::PlantOutputs;

pub type ReducedState = SVector<f64, 8>;

/// Lowest rotor speed at which the rotor model is evaluated (rad/s).
pub const ROTOR_SPEED_FLOOR: f64 = 0.1;

pub const X: usize = 0;
pub const Z: usize = 1;
pub const BETA: usize = 2;
pub const X_DOT: usize = 3;
pub const Z_DOT: usize = 4;
pub const BETA_DOT: usize = 5;
pub const OMEGA_1: usize = 6;
pub const OMEGA_2: usize = 7;

pub fn state(x: f64, z: f64, beta: f64, velocity: [f64; 3], omega: [f64; 2]) -> ReducedState {
    ReducedState::from([x, z, beta, velocity[0], velocity[1], velocity[2], omega[0], omega[1]])
}

/// Unit frame axis and disc normal at pitch `beta`.
pub fn frame_axes(beta: f64) -> (Vector2<f64>, Vector2<f64>) {
    let (s, c) = beta.sin_cos();
    (Vector2::new(c, -s), Vector2::new(s, c))
}

/// Signed offset of each rotor centre along the frame axis, in half-separations.
pub const ROTOR_SIDE: [f64; 2] = [-1.0, 1.0];

/// Flow seen by one rotor hub.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HubFlow {
    pub axial: f64,
    pub inplane: f64,
    /// Unit in-plane direction of the flow (along `+x_b` or `-x_b`).
    pub inplane_dir: Vector2<f64>,
}

/// Decomposes the apparent wind at a hub moving with `hub_velocity`.
pub fn hub_flow(wind: f64, hub_velocity: Vector2<f64>, beta: f64) -> HubFlow {
    let (xb, n) = frame_axes(beta);
    let rel = Vector2::new(wind, 0.0) - hub_velocity;
    let along = rel.dot(&xb);
    HubFlow {
        axial: rel.dot(&n),
        inplane: along.abs(),
        inplane_dir: if along >= 0.0 { xb } else { -xb },
    }
}

/// Reduced-order plant. Holds solver warm starts between evaluations.
#[derive(Debug, Clone)]
pub struct ReducedPlant {
    params: PhysicalParams,
    inertias: Inertias,
    rotor: BemRotor,
    line: Line,
    induced_cache: Cell<[f64; 2]>,
    tether_cache: Cell<Option<(f64, f64)>>,
}

impl ReducedPlant {
    pub fn new(params: &PhysicalParams) -> Self {
        Self::with_azimuth_stations(params, DEFAULT_AZIMUTH_STATIONS)
    }

    pub fn with_azimuth_stations(params: &PhysicalParams, n_psi: usize) -> Self {
        Self {
            params: params.clone(),
            inertias: params.derived_inertias(),
            rotor: BemRotor::new(params, n_psi),
            line: Line::from_params(params),
            induced_cache: Cell::new([0.0; 2]),
            tether_cache: Cell::new(None),
        }
    }

    pub fn params(&self) -> &PhysicalParams {
        &self.params
    }

    pub fn inertias(&self) -> &Inertias {
        &self.inertias
    }

    pub fn rotor(&self) -> &BemRotor {
        &self.rotor
    }

    /// Seeds the inflow warm start, e.g. from a trim solution.
    pub fn seed_induced(&self, v_i: [f64; 2]) {
        self.induced_cache.set(v_i);
    }

    /// Tether force on the frame centre, including optional taut damping.
    pub fn tether_force(&self, position: Vector2<f64>, velocity: Vector2<f64>) -> Result<TetherSolution> {
        let mut sol = solve_line(&self.line, Vector2::zeros(), position, self.tether_cache.get())?;
        if sol.horizontal_component > 0.0 {
            self.tether_cache.set(Some((sol.horizontal_component, sol.vertical_top)));
        }
        if sol.regime == TetherRegime::TautElastic && self.params.tether_damping > 0.0 {
            let dir = position / sol.chord;
            let rate = velocity.dot(&dir);
            sol.tension_at_top -= dir * (self.params.tether_damping * rate);
        }
        Ok(sol)
    }

    /// State derivative for wind speed `wind` and braking torques `u`.
    pub fn derivative(&self, s: &ReducedState, wind: f64, u: [f64; 2]) -> Result<(ReducedState, PlantOutputs)> {
        let p = &self.params;
        let beta = s[BETA];
        let (_, n) = frame_axes(beta);
        let centre = Vector2::new(s[X], s[Z]);
        let v_c = Vector2::new(s[X_DOT], s[Z_DOT]);
        let half = 0.5 * p.l;

        let mut force = Vector2::new(0.0, -self.inertias.total_mass * p.g);
        let mut pitch_moment = 0.0;
        let mut out_thrust = [0.0; 2];
        let mut out_h = [0.0; 2];
        let mut out_q = [0.0; 2];
        let mut out_mu = [0.0; 2];
        let mut out_conv = [true; 2];
        let mut induced = self.induced_cache.get();
        let mut deriv = ReducedState::zeros();

        for i in 0..2 {
            let omega = s[OMEGA_1 + i];
            if !(omega > ROTOR_SPEED_FLOOR) {
                return Err(Error::Domain(format!(
                    "rotor {} speed {omega:.4} rad/s below floor {ROTOR_SPEED_FLOOR}",
                    i + 1
                )));
            }
            // d(offset)/d(beta) for an offset `side * half * x_b` is `-side * half * n`.
            let lever = -ROTOR_SIDE[i] * half * n;
            let hub_v = v_c + lever * s[BETA_DOT];
            let flow = hub_flow(wind, hub_v, beta);
            let loads = self.rotor.loads_from(p, flow.axial, flow.inplane, omega, induced[i])?;
            induced[i] = loads.inflow.v_i;
            let f = n * loads.thrust + flow.inplane_dir * loads.h_force;
            force += f;
            pitch_moment += f.dot(&lever);
            deriv[OMEGA_1 + i] = (loads.torque_aero + u[i]) / self.inertias.rotor;
            out_thrust[i] = loads.thrust;
            out_h[i] = loads.h_force;
            out_q[i] = loads.torque_aero;
            out_mu[i] = loads.inflow.mu;
            out_conv[i] = loads.inflow.converged;
        }
        self.induced_cache.set(induced);

        let tether = self.tether_force(centre, v_c)?;
        force += tether.tension_at_top;

        deriv[X] = s[X_DOT];
        deriv[Z] = s[Z_DOT];
        deriv[BETA] = s[BETA_DOT];
        deriv[X_DOT] = force.x / self.inertias.total_mass;
        deriv[Z_DOT] = force.y / self.inertias.total_mass;
        deriv[BETA_DOT] = pitch_moment / self.inertias.pitch;

        if deriv.iter().any(|d| !d.is_finite()) {
            return Err(Error::NonFinite {
                context: "reduced dynamics",
                iteration: 0,
            });
        }
        Ok((
            deriv,
            PlantOutputs {
                thrust: out_thrust,
                h_force: out_h,
                torque_aero: out_q,
                induced,
                mu: out_mu,
                inflow_converged: out_conv,
                tether,
            },
        ))
    }

    /// Rotor-centre positions in `(X, Z)`.
    pub fn rotor_centres(&self, s: &ReducedState) -> [Vector2<f64>; 2] {
        let (xb, _) = frame_axes(s[BETA]);
        let c = Vector2::new(s[X], s[Z]);
        let half = 0.5 * self.params.l;
        [c + xb * (ROTOR_SIDE[0] * half), c + xb * (ROTOR_SIDE[1] * half)]
    }
}
