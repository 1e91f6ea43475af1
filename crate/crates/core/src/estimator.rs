//! Online estimation of the altitude-pitch map `z = -a beta^2 + b beta + c`
//! and of its vertex.
//!
//! The adaptation laws impose `d/dt e_zh = -k e_zh` on the altitude estimate
//! error with `k = k1 + k2 + k3`. Each control sample runs an inner
//! pseudo-time loop with frozen measurements until the error falls below the
//! tolerance or the iteration cap is reached.

use crate::config::{EstimatorSettings, GainSet};

/// Largest inner pseudo-time step (s).
pub const MAX_INNER_STEP: f64 = 0.01;
/// Errors smaller than this carry no sign in the robustness terms.
pub const SIGN_DEADBAND: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measurement {
    pub beta: f64,
    pub beta_dot: f64,
    pub z_c: f64,
    pub t: f64,
}

/// Adaptation gains and robustness bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptationGains {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub e_amax: f64,
    pub e_bmax: f64,
}

impl AdaptationGains {
    pub fn k(&self) -> f64 {
        self.k1 + self.k2 + self.k3
    }

    /// Inner pseudo-time step, `min(0.5 / k, 0.01)`.
    pub fn inner_step(&self) -> f64 {
        (0.5 / self.k()).min(MAX_INNER_STEP)
    }
}

impl From<&GainSet> for AdaptationGains {
    fn from(g: &GainSet) -> Self {
        Self {
            k1: g.k1,
            k2: g.k2,
            k3: g.k3,
            e_amax: g.e_amax,
            e_bmax: g.e_bmax,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorState {
    pub a_hat: f64,
    pub b_hat: f64,
    pub c_hat: f64,
    /// Latest `z_c - zhat(beta)` (m).
    pub e_zh: f64,
    /// Last reported vertex pitch, unclamped (rad).
    pub beta_zmax: f64,
    /// False while the curvature estimate is below the guard and the vertex
    /// is being held.
    pub vertex_valid: bool,
    pub gains: AdaptationGains,
}

fn sgn(x: f64) -> f64 {
    if x.abs() < SIGN_DEADBAND {
        0.0
    } else {
        x.signum()
    }
}

impl EstimatorState {
    pub fn new(a_hat: f64, b_hat: f64, c_hat: f64, gains: AdaptationGains) -> Self {
        let mut s = Self {
            a_hat,
            b_hat,
            c_hat,
            e_zh: 0.0,
            beta_zmax: f64::NAN,
            vertex_valid: false,
            gains,
        };
        if let Some(v) = s.vertex() {
            s.beta_zmax = v;
            s.vertex_valid = true;
        }
        s
    }

    /// Estimate whose vertex sits at `beta_r`, with the intercept at the
    /// measured altitude.
    pub fn centred(a_hat: f64, beta_r: f64, z_c: f64, gains: AdaptationGains) -> Self {
        Self::new(a_hat, 2.0 * a_hat * beta_r, z_c, gains)
    }

    /// Estimated altitude at `beta`.
    pub fn zhat(&self, beta: f64) -> f64 {
        -self.a_hat * beta * beta + self.b_hat * beta + self.c_hat
    }

    pub fn error(&self, m: &Measurement) -> f64 {
        m.z_c - self.zhat(m.beta)
    }

    /// `b / 2a`, or `None` when the estimate has no maximum.
    pub fn vertex(&self) -> Option<f64> {
        (self.a_hat > 0.0).then(|| self.b_hat / (2.0 * self.a_hat))
    }

    /// Estimated altitude at the vertex.
    pub fn vertex_altitude(&self) -> Option<f64> {
        (self.a_hat > 0.0).then(|| self.c_hat + self.b_hat * self.b_hat / (4.0 * self.a_hat))
    }

    /// Time derivatives of `(a, b, c)` for error `e` at measurement `m`.
    pub fn rates(&self, e: f64, m: &Measurement) -> [f64; 3] {
        let g = &self.gains;
        let s = sgn(e);
        let (b, bd) = (m.beta, m.beta_dot);
        let a_dot = -(g.k1 * e + s * 2.0 * g.e_amax.abs() * b.abs() * bd.abs()) / (b * b);
        let b_dot = (g.k2 * e + s * g.e_bmax.abs() * bd.abs()) / b;
        let c_dot = g.k3 * e;
        [a_dot, b_dot, c_dot]
    }

    /// One explicit Euler step of the adaptation laws. Returns `None` without
    /// touching the state when `|beta| < beta_min`.
    pub fn adapt_step(&self, m: &Measurement, dt: f64, beta_min: f64) -> Option<Self> {
        if m.beta.abs() < beta_min {
            log::debug!("adaptation skipped at t = {}: |beta| = {:.3e} rad", m.t, m.beta.abs());
            return None;
        }
        let e = self.error(m);
        let [da, db, dc] = self.rates(e, m);
        Some(Self {
            a_hat: self.a_hat + dt * da,
            b_hat: self.b_hat + dt * db,
            c_hat: self.c_hat + dt * dc,
            e_zh: e,
            ..*self
        })
    }
}

/// Result of one estimator sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateOutcome {
    pub state: EstimatorState,
    pub iterations: usize,
    /// The inner loop reached the tolerance.
    pub converged: bool,
    /// `|beta| < beta_min`: nothing was updated.
    pub skipped: bool,
}

/// Runs the inner adaptation loop on a frozen measurement, then recomputes
/// the error and the vertex. The vertex is held when the curvature estimate
/// drops below `a_min`.
pub fn sample_update(state: &EstimatorState, m: &Measurement, settings: &EstimatorSettings) -> UpdateOutcome {
    if m.beta.abs() < settings.beta_min {
        log::debug!("estimator sample skipped at t = {}", m.t);
        return UpdateOutcome {
            state: *state,
            iterations: 0,
            converged: false,
            skipped: true,
        };
    }
    let step = state.gains.inner_step();
    let mut s = *state;
    let mut iterations = 0;
    let mut e = s.error(m);
    while e.abs() >= settings.tolerance && iterations < settings.max_inner {
        // adapt_step cannot skip here: beta was checked above
        s = s.adapt_step(m, step, settings.beta_min).unwrap_or(s);
        e = s.error(m);
        iterations += 1;
    }
    let converged = e.abs() < settings.tolerance;
    if !converged {
        log::trace!("estimator inner loop stopped at |e_zh| = {:.3e} m", e.abs());
    }
    s.e_zh = e;
    match s.vertex() {
        Some(v) if s.a_hat >= settings.a_min => {
            s.beta_zmax = v;
            s.vertex_valid = true;
        }
        _ => {
            s.vertex_valid = false;
        }
    }
    UpdateOutcome {
        state: s,
        iterations,
        converged,
        skipped: false,
    }
}

/// Vertex limited to the operating range, if one is available.
pub fn clamped_vertex(state: &EstimatorState, settings: &EstimatorSettings) -> Option<f64> {
    (state.vertex_valid && state.beta_zmax.is_finite())
        .then(|| state.beta_zmax.clamp(settings.beta_zmax_min, settings.beta_zmax_max))
}

/// Quadratic test plant and pitch trajectory used for self-checks.
#[derive(Debug, Clone, Copy)]
pub struct SyntheticPlant {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// Pitch trajectory `beta0 + amplitude sin(2 pi t / period)`.
    pub beta0: f64,
    pub amplitude: f64,
    pub period: f64,
}

impl SyntheticPlant {
    pub fn measure(&self, t: f64) -> Measurement {
        let w = std::f64::consts::TAU / self.period;
        let beta = self.beta0 + self.amplitude * (w * t).sin();
        let beta_dot = self.amplitude * w * (w * t).cos();
        Measurement {
            beta,
            beta_dot,
            z_c: -self.a * beta * beta + self.b * beta + self.c,
            t,
        }
    }
}

impl Default for SyntheticPlant {
    fn default() -> Self {
        Self {
            a: 40.0,
            b: 14.0,
            c: 850.0,
            beta0: 0.15,
            amplitude: 0.01,
            period: 2000.0,
        }
    }
}

/// Runs the estimator against a synthetic plant, one sample every `dt`
/// seconds. Returns the error after each sample and the final state.
pub fn synthetic_run(
    plant: &SyntheticPlant,
    initial: EstimatorState,
    settings: &EstimatorSettings,
    dt: f64,
    samples: usize,
) -> (Vec<f64>, EstimatorState) {
    let mut s = initial;
    let mut errors = Vec::with_capacity(samples);
    for i in 0..samples {
        let m = plant.measure(i as f64 * dt);
        s = sample_update(&s, &m, settings).state;
        errors.push(s.e_zh);
    }
    (errors, s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_gains() -> AdaptationGains {
        AdaptationGains {
            k1: 1.0,
            k2: 1.0,
            k3: 1.0,
            e_amax: 0.0,
            e_bmax: 0.0,
        }
    }

    fn at(beta: f64, z_c: f64) -> Measurement {
        Measurement {
            beta,
            beta_dot: 0.0,
            z_c,
            t: 0.0,
        }
    }

    #[test]
    fn zhat_hand_values() {
        let zero = EstimatorState::new(0.0, 0.0, 0.0, unit_gains());
        assert_eq!(zero.zhat(0.3), 0.0);
        let s = EstimatorState::new(1.0, 2.0, 3.0, unit_gains());
        assert_eq!(s.zhat(1.0), 4.0);
        assert_eq!(s.zhat(0.0), 3.0);
    }

    #[test]
    fn single_euler_step() {
        let s = EstimatorState::new(0.0, 0.0, 0.0, unit_gains());
        let next = s.adapt_step(&at(1.0, 4.0), 0.01, 0.01).unwrap();
        assert_eq!(next.e_zh, 4.0);
        assert!((next.a_hat + 0.04).abs() < 1e-15);
        assert!((next.b_hat - 0.04).abs() < 1e-15);
        assert!((next.c_hat - 0.04).abs() < 1e-15);
    }

    #[test]
    fn zero_error_is_an_equilibrium() {
        let s = EstimatorState::new(40.0, 14.0, 850.0, unit_gains());
        let m = at(0.2, s.zhat(0.2));
        let next = s.adapt_step(&m, 0.1, 0.01).unwrap();
        assert_eq!((next.a_hat, next.b_hat, next.c_hat), (s.a_hat, s.b_hat, s.c_hat));
    }

    #[test]
    fn small_pitch_skips() {
        let s = EstimatorState::new(40.0, 14.0, 850.0, unit_gains());
        assert!(s.adapt_step(&at(0.005, 900.0), 0.1, 0.01).is_none());
        let out = sample_update(&s, &at(-0.001, 900.0), &EstimatorSettings::default());
        assert!(out.skipped);
        assert_eq!(out.state, s);
    }

    #[test]
    fn converged_entry_does_nothing() {
        let s = EstimatorState::new(40.0, 14.0, 850.0, unit_gains());
        let m = at(0.2, s.zhat(0.2) + 5e-6);
        let out = sample_update(&s, &m, &EstimatorSettings::default());
        assert_eq!(out.iterations, 0);
        assert!(out.converged);
        assert_eq!((out.state.a_hat, out.state.b_hat), (40.0, 14.0));
    }

    #[test]
    fn vertex_hand_value_and_guard() {
        let settings = EstimatorSettings::default();
        let s = EstimatorState::new(0.5, 2.0, 0.0, unit_gains());
        let m = at(0.2, s.zhat(0.2));
        let out = sample_update(&s, &m, &EstimatorSettings { a_min: 0.1, ..settings.clone() });
        assert_eq!(out.state.beta_zmax, 2.0);
        assert_eq!(clamped_vertex(&out.state, &settings), Some(settings.beta_zmax_max));

        let held = sample_update(&out.state, &m, &settings);
        assert!(!held.state.vertex_valid);
        assert_eq!(held.state.beta_zmax, 2.0);
        assert_eq!(clamped_vertex(&held.state, &settings), None);
    }

    #[test]
    fn inner_step_rule() {
        assert_eq!(unit_gains().inner_step(), 0.01);
        let fast = AdaptationGains {
            k3: 198.0,
            ..unit_gains()
        };
        assert!((fast.inner_step() - 0.0025).abs() < 1e-15);
    }

    #[test]
    fn centred_estimate_has_vertex_at_reference() {
        let s = EstimatorState::centred(3000.0, 0.15, 900.0, unit_gains());
        assert!((s.vertex().unwrap() - 0.15).abs() < 1e-15);
    }
}
