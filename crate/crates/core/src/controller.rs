//! Differential braking laws and reference generation.
//!
//! Braking rotor 1 pitches the frame down and braking rotor 2 pitches it up,
//! so only one rotor is braked at a time: rotor 1 when the pitch is at or
//! above the reference, rotor 2 otherwise. Torques are never positive.

use crate::config::GainSet;

/// Time constant of the derivative filter in the altitude loop (s).
pub const DERIVATIVE_FILTER: f64 = 0.5;

/// Allowed braking torque range (N m), `min <= max <= 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TorqueLimits {
    pub min: f64,
    pub max: f64,
}

impl Default for TorqueLimits {
    fn default() -> Self {
        Self { min: -1.0, max: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlCommand {
    pub u1: f64,
    pub u2: f64,
    pub beta_r: f64,
    /// Pitch-error integral after this step (rad s).
    pub integ: f64,
}

impl ControlCommand {
    pub fn torques(&self) -> [f64; 2] {
        [self.u1, self.u2]
    }

    /// Bounds and exclusivity check.
    pub fn is_admissible(&self, limits: &TorqueLimits) -> bool {
        let within = |u: f64| u >= limits.min && u <= limits.max && u <= 0.0;
        within(self.u1) && within(self.u2) && self.u1 * self.u2 == 0.0
    }
}

/// Routes a signed braking demand to one rotor. `raw` is the rotor-1 torque
/// when `beta >= beta_r`; below the reference rotor 2 receives `-raw`.
fn route(beta: f64, beta_r: f64, raw: f64, limits: &TorqueLimits) -> (f64, f64, bool) {
    if beta >= beta_r {
        let u1 = raw.clamp(limits.min, limits.max);
        (u1, 0.0, raw <= limits.min)
    } else {
        let u2 = (-raw).clamp(limits.min, limits.max);
        (0.0, u2, -raw <= limits.min)
    }
}

/// PI pitch law with conditional anti-windup: the integral is not advanced
/// while the active rotor is saturated at the lower limit.
pub fn pi_braking(
    beta: f64,
    beta_r: f64,
    integ: f64,
    gains: &GainSet,
    limits: &TorqueLimits,
    dt: f64,
) -> ControlCommand {
    let err = beta_r - beta;
    let advanced = integ + err * dt;
    let (u1, u2, saturated) = route(beta, beta_r, gains.kp2 * err + gains.ki2 * advanced, limits);
    if !saturated {
        return ControlCommand {
            u1,
            u2,
            beta_r,
            integ: advanced,
        };
    }
    let (u1, u2, _) = route(beta, beta_r, gains.kp2 * err + gains.ki2 * integ, limits);
    ControlCommand { u1, u2, beta_r, integ }
}

/// Outer altitude loop state of the legacy controller.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AltitudeLoop {
    /// Integral of the altitude error (m s).
    pub integ: f64,
    pub prev_error: Option<f64>,
    /// Filtered altitude-error rate (m/s).
    pub rate: f64,
}

impl AltitudeLoop {
    /// Loop whose first output equals `beta_r` for zero error, so engaging it
    /// does not jump the reference.
    pub fn bumpless(beta_r: f64, gains: &GainSet) -> Self {
        Self {
            integ: if gains.ki != 0.0 { beta_r / gains.ki } else { 0.0 },
            ..Self::default()
        }
    }
}

/// Legacy two-loop law: a PID on altitude error sets the pitch reference,
/// then proportional braking tracks it.
pub fn pid_two_loop(
    z_c: f64,
    z_d: f64,
    beta: f64,
    state: &mut AltitudeLoop,
    gains: &GainSet,
    limits: &TorqueLimits,
    dt: f64,
) -> ControlCommand {
    let e = z_d - z_c;
    state.integ += e * dt;
    if let Some(prev) = state.prev_error {
        let raw_rate = (e - prev) / dt;
        state.rate += dt / (DERIVATIVE_FILTER + dt) * (raw_rate - state.rate);
    }
    state.prev_error = Some(e);
    let beta_r = gains.kp * e + gains.ki * state.integ + gains.kd * state.rate;
    let raw = gains.kp2 * (beta_r - beta);
    let (u1, u2, _) = route(beta, beta_r, raw, limits);
    ControlCommand {
        u1,
        u2,
        beta_r,
        integ: 0.0,
    }
}

/// Pitch reference: fixed before the switch time, then the estimator vertex
/// approached at a bounded rate. Without a valid vertex the last target is
/// held.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceSource {
    pub initial: f64,
    pub t_switch: f64,
    /// Slew-rate limit after the switch (rad/s).
    pub rate: f64,
    current: f64,
    target: f64,
}

impl ReferenceSource {
    pub fn new(initial: f64, t_switch: f64, rate: f64) -> Self {
        Self {
            initial,
            t_switch,
            rate,
            current: initial,
            target: initial,
        }
    }

    pub fn current(&self) -> f64 {
        self.current
    }

    /// Advances the reference to time `t`. `vertex` is the clamped estimator
    /// vertex, `None` when the estimator is flagged invalid.
    pub fn update(&mut self, t: f64, vertex: Option<f64>, dt: f64) -> f64 {
        if t < self.t_switch {
            self.current = self.initial;
            self.target = self.initial;
            return self.current;
        }
        if let Some(v) = vertex {
            self.target = v;
        }
        let max_step = self.rate * dt;
        self.current += (self.target - self.current).clamp(-max_step, max_step);
        self.current
    }
}
