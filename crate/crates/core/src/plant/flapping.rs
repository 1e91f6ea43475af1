//! Thirteen-coordinate multibody model with flapping blades.
//!
//! Coordinates `q = [x, z, beta, psi_1, theta_1..theta_4, psi_2, theta_5..theta_8]`.
//! World axes are `(X, Y, Z)` with motion in the X-Z plane. The frame is a
//! uniform bar along `x_b`, each hub a disc of radius `r_h`, each blade a
//! uniform rod hinged at the hub rim. Blade `n` of a rotor sits at azimuth
//! `psi + n pi/2` and flaps by `theta` towards the disc normal.
//!
//! Velocity Jacobians are assembled analytically in terms of the frame
//! vectors, using `d x_b / d beta = -n` and `d n / d beta = x_b`.

use std::cell::Cell;
use std::f64::consts::FRAC_PI_2;

use nalgebra::{SMatrix, SVector, Vector2, Vector3};

use crate::aero::{BemRotor, DEFAULT_AZIMUTH_STATIONS};
use crate::config::PhysicalParams;
use crate::error::{Error, Result};
use crate::tether::{solve_line, Line, TetherRegime};

use super::reduced::{hub_flow, ReducedState, ROTOR_SIDE, ROTOR_SPEED_FLOOR};
use super::rotation::blade_slot;
use super::PlantOutputs;

pub const NQ: usize = 13;
pub type Coords = SVector<f64, NQ>;
pub type MassMatrix = SMatrix<f64, NQ, NQ>;
/// `[q, q_dot]`.
pub type FullState = SVector<f64, 26>;

pub const X: usize = 0;
pub const Z: usize = 1;
pub const BETA: usize = 2;
pub const PSI: [usize; 2] = [3, 8];

type Jac = SMatrix<f64, 3, 5>;

/// Index of the flap coordinate of blade `j` (1..=8).
pub fn theta_index(j: usize) -> usize {
    let (rotor, slot) = blade_slot(j);
    PSI[rotor] + 1 + slot
}

/// Coordinates touched by blade `j`: x, z, beta, its rotor azimuth and its flap.
fn blade_columns(j: usize) -> [usize; 5] {
    let (rotor, _) = blade_slot(j);
    [X, Z, BETA, PSI[rotor], theta_index(j)]
}

/// Frame vectors `(x_b, y, n)` in world coordinates.
pub fn frame_vectors(beta: f64) -> (Vector3<f64>, Vector3<f64>, Vector3<f64>) {
    let (s, c) = beta.sin_cos();
    (Vector3::new(c, 0.0, -s), Vector3::y(), Vector3::new(s, 0.0, c))
}

/// Position, Jacobians and velocity-product accelerations of one blade.
#[derive(Debug, Clone, Copy)]
pub struct BladeKinematics {
    pub hinge: Vector3<f64>,
    pub span: Vector3<f64>,
    /// Unit direction of travel from rotor spin.
    pub chordwise: Vector3<f64>,
    pub azimuth: f64,
    /// d(hinge)/d(q_cols), d(span)/d(q_cols).
    pub j_hinge: Jac,
    pub j_span: Jac,
    /// Hinge and span accelerations at zero generalized acceleration.
    pub a_hinge: Vector3<f64>,
    pub a_span: Vector3<f64>,
    pub columns: [usize; 5],
}

pub fn blade_kinematics(p: &PhysicalParams, q: &Coords, qd: &Coords, j: usize) -> BladeKinematics {
    let (rotor, slot) = blade_slot(j);
    let cols = blade_columns(j);
    let (xb, y, n) = frame_vectors(q[BETA]);
    let offset = ROTOR_SIDE[rotor] * 0.5 * p.l;
    let azimuth = q[PSI[rotor]] + slot as f64 * FRAC_PI_2;
    let (sp, cp) = azimuth.sin_cos();
    let (st, ct) = q[cols[4]].sin_cos();
    let bd = qd[BETA];
    let pd = qd[cols[3]];
    let td = qd[cols[4]];
    let rh = p.r_h;

    let centre = Vector3::new(q[X], 0.0, q[Z]);
    let hinge = centre + xb * (offset + rh * cp) + y * (rh * sp);
    let (c1, c2, c3) = (ct * cp, ct * sp, st);
    let span = xb * c1 + y * c2 + n * c3;
    let chordwise = -xb * sp + y * cp;

    let mut j_hinge = Jac::zeros();
    j_hinge.set_column(0, &Vector3::x());
    j_hinge.set_column(1, &Vector3::z());
    j_hinge.set_column(2, &(-n * (offset + rh * cp)));
    j_hinge.set_column(3, &(chordwise * rh));

    let mut j_span = Jac::zeros();
    j_span.set_column(2, &(-n * c1 + xb * c3));
    j_span.set_column(3, &(chordwise * ct));
    j_span.set_column(4, &(-xb * (st * cp) - y * (st * sp) + n * ct));

    // Coefficient rates along (x_b, y, n).
    let d1 = offset + rh * cp;
    let d1_dot = -rh * sp * pd;
    let d1_dd = -rh * cp * pd * pd;
    let d2_dd = -rh * sp * pd * pd;
    let a_hinge = xb * d1_dd + y * d2_dd - n * (2.0 * bd * d1_dot) - xb * (bd * bd * d1);

    let c1_dot = -st * cp * td - ct * sp * pd;
    let c3_dot = ct * td;
    let c1_dd = -ct * cp * td * td + 2.0 * st * sp * td * pd - ct * cp * pd * pd;
    let c2_dd = -ct * sp * td * td - 2.0 * st * cp * td * pd - ct * sp * pd * pd;
    let c3_dd = -st * td * td;
    let a_span = xb * c1_dd + y * c2_dd + n * c3_dd + (xb * c3_dot - n * c1_dot) * (2.0 * bd)
        - (xb * c1 + n * c3) * (bd * bd);

    BladeKinematics {
        hinge,
        span,
        chordwise,
        azimuth,
        j_hinge,
        j_span,
        a_hinge,
        a_span,
        columns: cols,
    }
}

/// Hub-centre Jacobian over (x, z, beta) and its velocity-product acceleration.
fn hub_kinematics(p: &PhysicalParams, q: &Coords, qd: &Coords, rotor: usize) -> (Vector3<f64>, SMatrix<f64, 3, 3>, Vector3<f64>) {
    let (xb, _, n) = frame_vectors(q[BETA]);
    let offset = ROTOR_SIDE[rotor] * 0.5 * p.l;
    let pos = Vector3::new(q[X], 0.0, q[Z]) + xb * offset;
    let jac = SMatrix::<f64, 3, 3>::from_columns(&[Vector3::x(), Vector3::z(), -n * offset]);
    let acc = -xb * (offset * qd[BETA] * qd[BETA]);
    (pos, jac, acc)
}

fn blade_length(p: &PhysicalParams) -> f64 {
    p.rotor_radius - p.r_h
}

fn scatter<const C: usize>(a: &mut MassMatrix, cols: &[usize; C], block: &SMatrix<f64, C, C>) {
    for (li, &gi) in cols.iter().enumerate() {
        for (lj, &gj) in cols.iter().enumerate() {
            a[(gi, gj)] += block[(li, lj)];
        }
    }
}

fn scatter_vec<const C: usize>(b: &mut Coords, cols: &[usize; C], v: &SVector<f64, C>) {
    for (li, &gi) in cols.iter().enumerate() {
        b[gi] += v[li];
    }
}

/// Mass matrix `A(q)` of the assembly.
pub fn full_mass_matrix(p: &PhysicalParams, q: &Coords) -> MassMatrix {
    let zero = Coords::zeros();
    let mut a = MassMatrix::zeros();
    a[(X, X)] += p.m_f;
    a[(Z, Z)] += p.m_f;
    a[(BETA, BETA)] += p.m_f * p.l * p.l / 12.0;
    for rotor in 0..2 {
        let (_, jac, _) = hub_kinematics(p, q, &zero, rotor);
        scatter(&mut a, &[X, Z, BETA], &(jac.transpose() * jac * p.m_h));
        a[(BETA, BETA)] += 0.25 * p.m_h * p.r_h * p.r_h;
        a[(PSI[rotor], PSI[rotor])] += 0.5 * p.m_h * p.r_h * p.r_h;
    }
    let len = blade_length(p);
    for j in 1..=8 {
        let k = blade_kinematics(p, q, &zero, j);
        let (jh, je) = (k.j_hinge, k.j_span);
        let cross = jh.transpose() * je;
        let block = (jh.transpose() * jh + (cross + cross.transpose()) * (0.5 * len) + je.transpose() * je * (len * len / 3.0)) * p.m_b;
        scatter(&mut a, &k.columns, &block);
    }
    a
}

/// Velocity-product and gravity terms `B(q, q_dot)`.
pub fn full_bias(p: &PhysicalParams, q: &Coords, qd: &Coords) -> Coords {
    let mut b = Coords::zeros();
    b[Z] += p.m_f * p.g;
    for rotor in 0..2 {
        let (_, jac, acc) = hub_kinematics(p, q, qd, rotor);
        let mut v = jac.transpose() * acc * p.m_h;
        v += jac.row(2).transpose() * (p.m_h * p.g);
        scatter_vec(&mut b, &[X, Z, BETA], &v);
    }
    let len = blade_length(p);
    for j in 1..=8 {
        let k = blade_kinematics(p, q, qd, j);
        let (jh, je) = (k.j_hinge, k.j_span);
        let mut v = (jh.transpose() * k.a_hinge
            + (jh.transpose() * k.a_span + je.transpose() * k.a_hinge) * (0.5 * len)
            + je.transpose() * k.a_span * (len * len / 3.0))
            * p.m_b;
        v += (jh.row(2).transpose() + je.row(2).transpose() * (0.5 * len)) * (p.m_b * p.g);
        scatter_vec(&mut b, &k.columns, &v);
    }
    b
}

/// Gravitational potential energy of the assembly.
pub fn potential_energy(p: &PhysicalParams, q: &Coords) -> f64 {
    let zero = Coords::zeros();
    let mut v = p.m_f * q[Z];
    for rotor in 0..2 {
        v += p.m_h * hub_kinematics(p, q, &zero, rotor).0.z;
    }
    let len = blade_length(p);
    for j in 1..=8 {
        let k = blade_kinematics(p, q, &zero, j);
        v += p.m_b * (k.hinge.z + 0.5 * len * k.span.z);
    }
    v * p.g
}

pub fn kinetic_energy(p: &PhysicalParams, q: &Coords, qd: &Coords) -> f64 {
    0.5 * qd.dot(&(full_mass_matrix(p, q) * qd))
}

/// Splits a full state into coordinates and rates.
pub fn split(s: &FullState) -> (Coords, Coords) {
    (s.fixed_rows::<NQ>(0).into_owned(), s.fixed_rows::<NQ>(NQ).into_owned())
}

pub fn join(q: &Coords, qd: &Coords) -> FullState {
    let mut s = FullState::zeros();
    s.fixed_rows_mut::<NQ>(0).copy_from(q);
    s.fixed_rows_mut::<NQ>(NQ).copy_from(qd);
    s
}

/// Full state matching a reduced state with all blades at flap angle `theta`.
pub fn from_reduced(s: &ReducedState, psi: [f64; 2], theta: f64) -> FullState {
    use super::reduced as r;
    let mut q = Coords::zeros();
    let mut qd = Coords::zeros();
    q[X] = s[r::X];
    q[Z] = s[r::Z];
    q[BETA] = s[r::BETA];
    qd[X] = s[r::X_DOT];
    qd[Z] = s[r::Z_DOT];
    qd[BETA] = s[r::BETA_DOT];
    for rotor in 0..2 {
        q[PSI[rotor]] = psi[rotor];
        qd[PSI[rotor]] = s[r::OMEGA_1 + rotor];
    }
    for j in 1..=8 {
        q[theta_index(j)] = theta;
    }
    join(&q, &qd)
}

/// Multibody plant with blade-element aerodynamics on every blade.
#[derive(Debug, Clone)]
pub struct FlappingPlant {
    params: PhysicalParams,
    rotor: BemRotor,
    line: Line,
    induced_cache: Cell<[f64; 2]>,
    tether_cache: Cell<Option<(f64, f64)>>,
}

/// Generalized forces and loads at one state.
#[derive(Debug, Clone, Copy)]
pub struct GeneralizedForces {
    pub q: Coords,
    pub outputs: PlantOutputs,
}

impl FlappingPlant {
    pub fn new(params: &PhysicalParams) -> Self {
        Self {
            params: params.clone(),
            rotor: BemRotor::new(params, DEFAULT_AZIMUTH_STATIONS),
            line: Line::from_params(params),
            induced_cache: Cell::new([0.0; 2]),
            tether_cache: Cell::new(None),
        }
    }

    pub fn params(&self) -> &PhysicalParams {
        &self.params
    }

    pub fn seed_induced(&self, v_i: [f64; 2]) {
        self.induced_cache.set(v_i);
    }

    /// Aerodynamic, tether and braking generalized forces.
    pub fn generalized_forces(&self, q: &Coords, qd: &Coords, wind: f64, u: [f64; 2]) -> Result<GeneralizedForces> {
        let p = &self.params;
        let (_, _, n) = frame_vectors(q[BETA]);
        let mut gq = Coords::zeros();
        let mut induced = self.induced_cache.get();
        let mut out_thrust = [0.0; 2];
        let mut out_h = [0.0; 2];
        let mut out_q = [0.0; 2];
        let mut out_mu = [0.0; 2];
        let mut out_conv = [true; 2];
        let wind3 = Vector3::new(wind, 0.0, 0.0);
        let qc = 0.5 * p.rho_air * p.chord * self.rotor.element_width();

        for rotor in 0..2 {
            let omega = qd[PSI[rotor]];
            if !(omega > ROTOR_SPEED_FLOOR) {
                return Err(Error::Domain(format!(
                    "rotor {} speed {omega:.4} rad/s below floor {ROTOR_SPEED_FLOOR}",
                    rotor + 1
                )));
            }
            let (_, jac, _) = hub_kinematics(p, q, qd, rotor);
            let hv = jac * Vector3::new(qd[X], qd[Z], qd[BETA]);
            let flow = hub_flow(wind, Vector2::new(hv.x, hv.z), q[BETA]);
            let (inflow, _) = self.rotor.solve_inflow_from(p, flow.axial, flow.inplane, omega, induced[rotor])?;
            induced[rotor] = inflow.v_i;
            out_mu[rotor] = inflow.mu;
            out_conv[rotor] = inflow.converged;
            let induced_vel = -n * inflow.v_i;
            let dir3 = Vector3::new(flow.inplane_dir.x, 0.0, flow.inplane_dir.y);
            let before = gq[PSI[rotor]];
            let mut total = Vector3::zeros();

            for slot in 0..4 {
                let j = rotor * 4 + slot + 1;
                let k = blade_kinematics(p, q, qd, j);
                let cols = k.columns;
                let qd_loc = SVector::<f64, 5>::from_fn(|i, _| qd[cols[i]]);
                let v_hinge = k.j_hinge * qd_loc;
                let v_span = k.j_span * qd_loc;
                let normal = k.span.cross(&k.chordwise);
                for &r in self.rotor.radii() {
                    let rho = r - p.r_h;
                    let w = wind3 - (v_hinge + v_span * rho) + induced_vel;
                    let ut = -w.dot(&k.chordwise);
                    let up = w.dot(&normal);
                    let speed = ut.hypot(up);
                    let alpha = p.theta0 + up.atan2(ut);
                    let lift = p.a0 * alpha;
                    let dt = qc * speed * (lift * ut + p.cd0 * up);
                    let df = qc * speed * (lift * up - p.cd0 * ut);
                    let f = normal * dt + k.chordwise * df;
                    total += f;
                    let gen = (k.j_hinge + k.j_span * rho).transpose() * f;
                    scatter_vec(&mut gq, &cols, &gen);
                }
            }
            out_thrust[rotor] = total.dot(&n);
            out_h[rotor] = total.dot(&dir3);
            out_q[rotor] = gq[PSI[rotor]] - before;
            gq[PSI[rotor]] += u[rotor];
        }
        self.induced_cache.set(induced);

        let centre = Vector2::new(q[X], q[Z]);
        let velocity = Vector2::new(qd[X], qd[Z]);
        let mut tether = solve_line(&self.line, Vector2::zeros(), centre, self.tether_cache.get())?;
        if tether.horizontal_component > 0.0 {
            self.tether_cache.set(Some((tether.horizontal_component, tether.vertical_top)));
        }
        if tether.regime == TetherRegime::TautElastic && p.tether_damping > 0.0 {
            let dir = centre / tether.chord;
            tether.tension_at_top -= dir * (p.tether_damping * velocity.dot(&dir));
        }
        gq[X] += tether.tension_at_top.x;
        gq[Z] += tether.tension_at_top.y;

        Ok(GeneralizedForces {
            q: gq,
            outputs: PlantOutputs {
                thrust: out_thrust,
                h_force: out_h,
                torque_aero: out_q,
                induced,
                mu: out_mu,
                inflow_converged: out_conv,
                tether,
            },
        })
    }

    /// State derivative `[q_dot, A^-1 (Q - B)]`.
    pub fn derivative(&self, s: &FullState, wind: f64, u: [f64; 2]) -> Result<(FullState, PlantOutputs)> {
        let (q, qd) = split(s);
        for j in 1..=8 {
            let th = q[theta_index(j)];
            if !(th.abs() < FRAC_PI_2) {
                return Err(Error::Domain(format!("blade {j} flap angle {th:.4} rad is unphysical")));
            }
        }
        let forces = self.generalized_forces(&q, &qd, wind, u)?;
        let a = full_mass_matrix(&self.params, &q);
        let b = full_bias(&self.params, &q, &qd);
        let chol = a.cholesky().ok_or_else(|| {
            Error::ModelConsistency("mass matrix is not positive definite".into())
        })?;
        let qdd = chol.solve(&(forces.q - b));
        if qdd.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: "flapping dynamics",
                iteration: 0,
            });
        }
        Ok((join(&qd, &qdd), forces.outputs))
    }
}
