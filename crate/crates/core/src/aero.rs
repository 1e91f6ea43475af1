//! Blade-element rotor aerodynamics with uniform momentum inflow.
//!
//! Sign conventions for one rotor: `v_axial` is the flow component along the
//! disc normal (positive up through the disc, as in autorotation), `v_inplane`
//! the magnitude of the in-disc component. Azimuth is measured from the
//! downwind in-plane direction in the direction of rotation.

use std::f64::consts::PI;

use crate::config::PhysicalParams;
use crate::error::{Error, Result};

pub const RADIAL_ELEMENTS: usize = 10;
pub const DEFAULT_AZIMUTH_STATIONS: usize = 36;
pub const BLADES: usize = 4;

pub const INFLOW_RELAXATION: f64 = 0.5;
pub const INFLOW_TOLERANCE: f64 = 1e-8;
pub const INFLOW_MAX_ITERATIONS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotorInflowState {
    /// Induced velocity along the disc normal, opposing thrust (m/s).
    pub v_i: f64,
    pub mu: f64,
    /// Normal inflow ratio (v_axial - v_i) / (Omega R).
    pub lambda: f64,
    pub converged: bool,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotorLoads {
    /// Force along the disc normal (N).
    pub thrust: f64,
    /// In-plane force along the in-plane flow direction (N).
    pub h_force: f64,
    /// Shaft torque, positive accelerating the rotor (N m).
    pub torque_aero: f64,
    pub inflow: RotorInflowState,
}

/// Element-summed loads at a prescribed induced velocity.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ElementSums {
    pub thrust: f64,
    pub h_force: f64,
    pub torque: f64,
}

/// μ = V_w cos β / (Ω R).
pub fn tip_speed_ratio(wind: f64, beta: f64, omega: f64, radius: f64) -> Result<f64> {
    if !(omega > 0.0) {
        return Err(Error::Domain(format!("rotor speed must be > 0, got {omega}")));
    }
    Ok(wind * beta.cos() / (omega * radius))
}

/// Precomputed blade-element discretisation of one rotor.
#[derive(Debug, Clone)]
pub struct BemRotor {
    radii: [f64; RADIAL_ELEMENTS],
    dr: f64,
    sin_psi: Vec<f64>,
}

impl BemRotor {
    pub fn new(p: &PhysicalParams, n_psi: usize) -> Self {
        let n_psi = n_psi.max(1);
        let dr = (p.rotor_radius - p.r_h) / RADIAL_ELEMENTS as f64;
        let mut radii = [0.0; RADIAL_ELEMENTS];
        for (k, r) in radii.iter_mut().enumerate() {
            *r = p.r_h + (k as f64 + 0.5) * dr;
        }
        let sin_psi = (0..n_psi)
            .map(|i| (2.0 * PI * i as f64 / n_psi as f64).sin())
            .collect();
        Self { radii, dr, sin_psi }
    }

    pub fn radii(&self) -> &[f64; RADIAL_ELEMENTS] {
        &self.radii
    }

    pub fn element_width(&self) -> f64 {
        self.dr
    }

    pub fn azimuth_stations(&self) -> usize {
        self.sin_psi.len()
    }

    /// Azimuth-averaged loads of all blades at a fixed induced velocity.
    pub fn element_sums(&self, p: &PhysicalParams, v_axial: f64, v_inplane: f64, omega: f64, v_i: f64) -> ElementSums {
        let up = v_axial - v_i;
        let q = 0.5 * p.rho_air * p.chord * self.dr;
        let mut thrust = 0.0;
        let mut h = 0.0;
        let mut torque = 0.0;
        for &s in &self.sin_psi {
            let mut f_sum = 0.0;
            for &r in &self.radii {
                let ut = omega * r + v_inplane * s;
                let u = ut.hypot(up);
                let alpha = p.theta0 + up.atan2(ut);
                let lift = p.a0 * alpha;
                let dt = q * u * (lift * ut + p.cd0 * up);
                let df = q * u * (lift * up - p.cd0 * ut);
                thrust += dt;
                f_sum += df;
                torque += r * df;
            }
            h -= f_sum * s;
        }
        let scale = BLADES as f64 / self.sin_psi.len() as f64;
        ElementSums {
            thrust: thrust * scale,
            h_force: h * scale,
            torque: torque * scale,
        }
    }

    /// Momentum-theory induced velocity for a given thrust, evaluated at the
    /// current induced velocity estimate.
    pub fn momentum_inflow(p: &PhysicalParams, thrust: f64, v_axial: f64, v_inplane: f64, v_i: f64) -> f64 {
        if thrust == 0.0 {
            return 0.0;
        }
        let area = PI * p.rotor_radius * p.rotor_radius;
        let speed = v_inplane.hypot(v_axial - v_i).max(1e-6);
        thrust / (2.0 * p.rho_air * area * speed)
    }

    /// Glauert fixed point, starting from the momentum inflow of `thrust_guess`.
    pub fn solve_inflow(
        &self,
        p: &PhysicalParams,
        v_axial: f64,
        v_inplane: f64,
        omega: f64,
        thrust_guess: f64,
    ) -> Result<(RotorInflowState, ElementSums)> {
        let v0 = Self::momentum_inflow(p, thrust_guess, v_axial, v_inplane, 0.0);
        self.solve_inflow_from(p, v_axial, v_inplane, omega, v0)
    }

    /// Glauert fixed point, starting from an induced velocity estimate.
    pub fn solve_inflow_from(
        &self,
        p: &PhysicalParams,
        v_axial: f64,
        v_inplane: f64,
        omega: f64,
        v_start: f64,
    ) -> Result<(RotorInflowState, ElementSums)> {
        if !(omega > 0.0) {
            return Err(Error::Domain(format!("rotor speed must be > 0, got {omega}")));
        }
        let tip = omega * p.rotor_radius;
        let mut v = if v_start.is_finite() { v_start } else { 0.0 };
        let mut converged = false;
        let mut iterations = 0;
        let mut sums = self.element_sums(p, v_axial, v_inplane, omega, v);
        for it in 1..=INFLOW_MAX_ITERATIONS {
            iterations = it;
            let target = Self::momentum_inflow(p, sums.thrust, v_axial, v_inplane, v);
            let next = v + INFLOW_RELAXATION * (target - v);
            if !next.is_finite() {
                return Err(Error::NonFinite {
                    context: "inflow fixed point",
                    iteration: it,
                });
            }
            let step = (next - v).abs();
            v = next;
            sums = self.element_sums(p, v_axial, v_inplane, omega, v);
            if step < INFLOW_TOLERANCE {
                converged = true;
                break;
            }
        }
        if !(sums.thrust.is_finite() && sums.torque.is_finite() && sums.h_force.is_finite()) {
            return Err(Error::NonFinite {
                context: "blade-element loads",
                iteration: iterations,
            });
        }
        let state = RotorInflowState {
            v_i: v,
            mu: v_inplane / tip,
            lambda: (v_axial - v) / tip,
            converged,
            iterations,
        };
        Ok((state, sums))
    }

    pub fn loads(&self, p: &PhysicalParams, v_axial: f64, v_inplane: f64, omega: f64) -> Result<RotorLoads> {
        self.loads_from(p, v_axial, v_inplane, omega, 0.0)
    }

    /// Loads with the inflow iteration warm-started at `v_start`.
    pub fn loads_from(
        &self,
        p: &PhysicalParams,
        v_axial: f64,
        v_inplane: f64,
        omega: f64,
        v_start: f64,
    ) -> Result<RotorLoads> {
        let (inflow, sums) = self.solve_inflow_from(p, v_axial, v_inplane, omega, v_start)?;
        Ok(RotorLoads {
            thrust: sums.thrust,
            h_force: sums.h_force,
            torque_aero: sums.torque,
            inflow,
        })
    }
}

/// Induced inflow with the default discretisation.
pub fn solve_inflow(
    p: &PhysicalParams,
    v_axial: f64,
    v_inplane: f64,
    omega: f64,
    thrust_guess: f64,
) -> Result<RotorInflowState> {
    BemRotor::new(p, DEFAULT_AZIMUTH_STATIONS)
        .solve_inflow(p, v_axial, v_inplane, omega, thrust_guess)
        .map(|(s, _)| s)
}

/// Rotor loads with the default discretisation.
pub fn rotor_loads(p: &PhysicalParams, v_axial: f64, v_inplane: f64, omega: f64) -> Result<RotorLoads> {
    BemRotor::new(p, DEFAULT_AZIMUTH_STATIONS).loads(p, v_axial, v_inplane, omega)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn tip_speed_ratio_values() {
        assert!(tip_speed_ratio(8.0, PI / 2.0, 15.0, 3.048).unwrap().abs() < 1e-15);
        let mu = tip_speed_ratio(8.0, PI / 3.0, 15.0, 3.048).unwrap();
        assert!((mu - 0.0875).abs() < 5e-5, "{mu}");
        let b = 0.3;
        let r = tip_speed_ratio(12.0, b, 20.0, 3.048).unwrap() / tip_speed_ratio(8.0, b, 20.0, 3.048).unwrap();
        assert_relative_eq!(r, 1.5, max_relative = 1e-15);
        assert!(tip_speed_ratio(8.0, 0.1, 0.0, 3.0).is_err());
    }

    #[test]
    fn zero_flow_zero_pitch_is_pure_drag() {
        let p = PhysicalParams {
            theta0: 0.0,
            ..PhysicalParams::default()
        };
        let l = rotor_loads(&p, 0.0, 0.0, 20.0).unwrap();
        assert!(l.thrust.abs() < 1e-9, "{}", l.thrust);
        assert!(l.torque_aero < 0.0);
        assert_eq!(l.inflow.v_i, 0.0);
    }

    #[test]
    fn zero_thrust_fixed_point() {
        let p = PhysicalParams {
            theta0: 0.0,
            ..PhysicalParams::default()
        };
        let s = solve_inflow(&p, 0.0, 0.0, 10.0, 0.0).unwrap();
        assert_eq!(s.v_i, 0.0);
        assert!(s.converged);
    }

    #[test]
    fn converged_inflow_satisfies_momentum() {
        let p = PhysicalParams::default();
        let rotor = BemRotor::new(&p, 36);
        let (s, sums) = rotor.solve_inflow(&p, 1.2, 7.9, 25.0, 50.0).unwrap();
        assert!(s.converged);
        let area = PI * p.rotor_radius.powi(2);
        let resid = s.v_i - sums.thrust / (2.0 * p.rho_air * area * 7.9f64.hypot(1.2 - s.v_i));
        assert!(resid.abs() < 1e-6, "{resid}");
    }

    #[test]
    fn density_linearity() {
        let p = PhysicalParams::default();
        let p2 = PhysicalParams {
            rho_air: 1.0,
            ..p.clone()
        };
        let p4 = PhysicalParams { rho_air: 0.5, ..p };
        let rotor = BemRotor::new(&p2, 36);
        // Fix the induced velocity so only the density scaling remains.
        let a = rotor.element_sums(&p2, 1.0, 7.0, 20.0, 0.3);
        let b = rotor.element_sums(&p4, 1.0, 7.0, 20.0, 0.3);
        assert_relative_eq!(a.thrust, 2.0 * b.thrust, max_relative = 1e-13);
        assert_relative_eq!(a.h_force, 2.0 * b.h_force, max_relative = 1e-13);
        assert_relative_eq!(a.torque, 2.0 * b.torque, max_relative = 1e-13);
    }

    #[test]
    fn axisymmetric_limit_ignores_azimuth_count() {
        let p = PhysicalParams::default();
        let a = BemRotor::new(&p, 36).loads(&p, 5.0, 0.0, 20.0).unwrap();
        let b = BemRotor::new(&p, 7).loads(&p, 5.0, 0.0, 20.0).unwrap();
        assert!(a.inflow.converged && b.inflow.converged);
        assert_relative_eq!(a.thrust, b.thrust, max_relative = 1e-12);
        assert_relative_eq!(a.torque_aero, b.torque_aero, max_relative = 1e-12);
        assert!(a.h_force.abs() < 1e-9 && b.h_force.abs() < 1e-9);
    }
}
