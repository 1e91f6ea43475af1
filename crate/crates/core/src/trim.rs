//! Equilibrium (trim) points and pitch/wind sweeps.
//!
//! At trim the frame is at rest, both rotors see the same flow and the rotor
//! speed is the autorotation speed. The net rotor plus weight force must be
//! carried by the tether, so the top tension is known and the equilibrium
//! position follows from the elastic catenary end map. The inverse tether
//! solve at that position closes the force balance.

use nalgebra::Vector2;
use rayon::prelude::*;

use crate::aero::{tip_speed_ratio, BemRotor, DEFAULT_AZIMUTH_STATIONS};
use crate::config::PhysicalParams;
use crate::error::{Error, Result};
use crate::plant::reduced::{self, ReducedState};
use crate::tether::{solve_line, Line};

pub const OMEGA_BRACKET: (f64, f64) = (1.0, 60.0);
pub const OMEGA_TOLERANCE: f64 = 1e-6;
/// Force closure required per component (N).
pub const FORCE_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrimPoint {
    pub wind: f64,
    pub beta: f64,
    pub omega: f64,
    pub mu: f64,
    pub z_e: f64,
    pub x_e: f64,
    pub tension: f64,
    pub thrust: f64,
    pub h_force: f64,
    pub induced: f64,
    /// Normal inflow ratio through the disc.
    pub lambda: f64,
    /// Largest force-balance component error (N).
    pub resid_force: f64,
    /// Rotor shaft torque at the trim speed (N m).
    pub resid_torque: f64,
}

impl TrimPoint {
    /// Reduced-tier state at rest at this equilibrium.
    pub fn state(&self) -> ReducedState {
        reduced::state(self.x_e, self.z_e, self.beta, [0.0; 3], [self.omega, self.omega])
    }
}

/// Trim solver with a reusable rotor discretisation.
#[derive(Debug, Clone)]
pub struct TrimSolver {
    params: PhysicalParams,
    rotor: BemRotor,
    line: Line,
}

impl TrimSolver {
    pub fn new(p: &PhysicalParams) -> Self {
        Self {
            params: p.clone(),
            rotor: BemRotor::new(p, DEFAULT_AZIMUTH_STATIONS),
            line: Line::from_params(p),
        }
    }

    fn torque(&self, v_ax: f64, v_in: f64, omega: f64, warm: &mut f64) -> Result<f64> {
        let l = self.rotor.loads_from(&self.params, v_ax, v_in, omega, *warm)?;
        *warm = l.inflow.v_i;
        Ok(l.torque_aero)
    }

    /// Autorotation speed for the given rotor flow.
    pub fn autorotation_speed(&self, wind: f64, beta: f64) -> Result<f64> {
        let v_ax = wind * beta.sin();
        let v_in = wind * beta.cos();
        let (mut lo, mut hi) = OMEGA_BRACKET;
        let mut warm = 0.0;
        let q_lo = self.torque(v_ax, v_in, lo, &mut warm)?;
        let q_hi = self.torque(v_ax, v_in, hi, &mut warm)?;
        if !(q_lo > 0.0 && q_hi < 0.0) {
            return Err(Error::Infeasible {
                wind,
                beta_deg: beta.to_degrees(),
                reason: format!(
                    "no autorotation in [{lo}, {hi}] rad/s: torque {q_lo:.4} .. {q_hi:.4} N m"
                ),
            });
        }
        while hi - lo > OMEGA_TOLERANCE {
            let mid = 0.5 * (lo + hi);
            if self.torque(v_ax, v_in, mid, &mut warm)? > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    pub fn solve(&self, wind: f64, beta: f64) -> Result<TrimPoint> {
        let p = &self.params;
        let omega = self.autorotation_speed(wind, beta)?;
        let v_ax = wind * beta.sin();
        let v_in = wind * beta.cos();
        let loads = self.rotor.loads(p, v_ax, v_in, omega)?;
        let (xb, n) = reduced::frame_axes(beta);
        let mass = p.derived_inertias().total_mass;
        let net = (n * loads.thrust + xb * loads.h_force) * 2.0 - Vector2::new(0.0, mass * p.g);
        let infeasible = |reason: String| Error::Infeasible {
            wind,
            beta_deg: beta.to_degrees(),
            reason,
        };
        if !(net.x > 0.0) {
            return Err(infeasible(format!("no downwind pull on the tether ({:.3} N)", net.x)));
        }
        let (x_e, z_e) = if self.line.weight > 0.0 {
            self.line.span(net.x, net.y)
        } else {
            let t = net.norm();
            let len = self.line.length * (1.0 + t / self.line.stiffness);
            (len * net.x / t, len * net.y / t)
        };
        if !(z_e > 0.0) {
            return Err(infeasible(format!("equilibrium below ground (z = {z_e:.2} m)")));
        }
        let attach = Vector2::new(x_e, z_e);
        let tether = solve_line(&self.line, Vector2::zeros(), attach, Some((net.x, net.y)))?;
        let resid = net + tether.tension_at_top;
        let resid_force = resid.amax();
        if !(resid_force < FORCE_TOLERANCE) {
            return Err(Error::RootFind {
                context: "trim force balance",
                detail: format!("residual {resid_force:.3e} N at V_w = {wind}, beta = {beta}"),
            });
        }
        Ok(TrimPoint {
            wind,
            beta,
            omega,
            mu: tip_speed_ratio(wind, beta, omega, p.rotor_radius)?,
            z_e,
            x_e,
            tension: tether.tension_magnitude,
            thrust: loads.thrust,
            h_force: loads.h_force,
            induced: loads.inflow.v_i,
            lambda: loads.inflow.lambda,
            resid_force,
            resid_torque: loads.torque_aero,
        })
    }
}

pub fn solve_trim(p: &PhysicalParams, wind: f64, beta: f64) -> Result<TrimPoint> {
    TrimSolver::new(p).solve(wind, beta)
}

/// Peak of the altitude curve at one wind speed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vertex {
    pub wind: f64,
    /// Pitch of the fitted maximum (rad).
    pub beta: f64,
    /// Fitted maximum altitude (m).
    pub z_max: f64,
    /// Curvature of the fitted parabola, `z = -a beta^2 + ...` (m/rad^2).
    pub curvature: f64,
    /// Largest altitude on the grid.
    pub grid_max: TrimPoint,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    /// Feasible points ordered by (wind, beta).
    pub points: Vec<TrimPoint>,
    /// Grid points without an equilibrium, with the reason.
    pub infeasible: Vec<(f64, f64, String)>,
    pub vertices: Vec<Vertex>,
}

impl SweepResult {
    pub fn curve(&self, wind: f64) -> Vec<TrimPoint> {
        self.points.iter().filter(|t| t.wind == wind).copied().collect()
    }

    pub fn vertex(&self, wind: f64) -> Option<&Vertex> {
        self.vertices.iter().find(|v| v.wind == wind)
    }
}

/// Solves every `(wind, beta)` pair concurrently and fits each altitude peak.
pub fn sweep(p: &PhysicalParams, winds: &[f64], betas: &[f64]) -> Result<SweepResult> {
    let solver = TrimSolver::new(p);
    let grid: Vec<(f64, f64)> = winds
        .iter()
        .flat_map(|&w| betas.iter().map(move |&b| (w, b)))
        .collect();
    let results: Vec<_> = grid.par_iter().map(|&(w, b)| (w, b, solver.solve(w, b))).collect();
    let mut points = Vec::new();
    let mut infeasible = Vec::new();
    for (w, b, r) in results {
        match r {
            Ok(t) => points.push(t),
            Err(e @ Error::Infeasible { .. }) => infeasible.push((w, b, e.to_string())),
            Err(e) => return Err(e),
        }
    }
    let mut vertices = Vec::new();
    for &w in winds {
        let curve: Vec<TrimPoint> = points.iter().filter(|t| t.wind == w).copied().collect();
        if curve.len() < 3 {
            return Err(Error::Domain(format!(
                "sweep at V_w = {w} m/s has only {} feasible points",
                curve.len()
            )));
        }
        if let Some(v) = fit_vertex(&curve) {
            vertices.push(v);
        }
    }
    Ok(SweepResult {
        points,
        infeasible,
        vertices,
    })
}

/// Least-squares parabola `z = c0 + c1 x + c2 x^2` with its coefficient of determination.
pub fn quadratic_fit(xs: &[f64], ys: &[f64]) -> Option<([f64; 3], f64)> {
    if xs.len() < 3 || xs.len() != ys.len() {
        return None;
    }
    // Centre and scale the abscissa for conditioning.
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let scale = xs.iter().map(|x| (x - mean).abs()).fold(0.0, f64::max).max(1e-300);
    let mut ata = nalgebra::Matrix3::<f64>::zeros();
    let mut aty = nalgebra::Vector3::<f64>::zeros();
    for (&x, &y) in xs.iter().zip(ys) {
        let u = (x - mean) / scale;
        let row = nalgebra::Vector3::new(1.0, u, u * u);
        ata += row * row.transpose();
        aty += row * y;
    }
    let c = ata.lu().solve(&aty)?;
    let (d0, d1, d2) = (c[0], c[1] / scale, c[2] / (scale * scale));
    // Back to the original abscissa.
    let c2 = d2;
    let c1 = d1 - 2.0 * d2 * mean;
    let c0 = d0 - d1 * mean + d2 * mean * mean;
    let ybar = ys.iter().sum::<f64>() / n;
    let ss_tot: f64 = ys.iter().map(|y| (y - ybar).powi(2)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(&x, &y)| {
            let u = (x - mean) / scale;
            (y - (c[0] + c[1] * u + c[2] * u * u)).powi(2)
        })
        .sum();
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Some(([c0, c1, c2], r2))
}

/// Vertex from the parabola through the five grid points bracketing the
/// discrete altitude maximum. `None` when the maximum sits on the grid edge.
pub fn fit_vertex(curve: &[TrimPoint]) -> Option<Vertex> {
    let (imax, best) = curve
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.z_e.total_cmp(&b.1.z_e))?;
    if imax == 0 || imax + 1 == curve.len() {
        return None;
    }
    let lo = imax.saturating_sub(2).min(curve.len().saturating_sub(5));
    let hi = (lo + 5).min(curve.len());
    let xs: Vec<f64> = curve[lo..hi].iter().map(|t| t.beta).collect();
    let ys: Vec<f64> = curve[lo..hi].iter().map(|t| t.z_e).collect();
    let ([c0, c1, c2], _) = quadratic_fit(&xs, &ys)?;
    if !(c2 < 0.0) {
        return None;
    }
    let beta = -c1 / (2.0 * c2);
    Some(Vertex {
        wind: best.wind,
        beta,
        z_max: c0 + c1 * beta + c2 * beta * beta,
        curvature: -c2,
        grid_max: *best,
    })
}

/// R^2 of the least-squares parabola through the points within `half_width`
/// of `centre`.
pub fn local_fit_quality(curve: &[TrimPoint], centre: f64, half_width: f64) -> Option<f64> {
    let sel: Vec<&TrimPoint> = curve
        .iter()
        .filter(|t| (t.beta - centre).abs() <= half_width + 1e-12)
        .collect();
    let xs: Vec<f64> = sel.iter().map(|t| t.beta).collect();
    let ys: Vec<f64> = sel.iter().map(|t| t.z_e).collect();
    quadratic_fit(&xs, &ys).map(|(_, r2)| r2)
}

/// Number of interior strict local maxima of the altitude curve.
pub fn interior_maxima(curve: &[TrimPoint]) -> usize {
    curve
        .windows(3)
        .filter(|w| w[1].z_e > w[0].z_e && w[1].z_e > w[2].z_e)
        .count()
}

/// Pitch grid `start:step:stop` in degrees, inclusive of `stop` within
/// round-off, returned in radians.
pub fn degree_grid(start: f64, step: f64, stop: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(stop >= start) {
        return Err(Error::Domain(format!("bad pitch grid {start}:{step}:{stop}")));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| (start + i as f64 * step).to_radians()).collect())
}

/// CSV rendering of sweep points.
pub fn sweep_csv(points: &[TrimPoint]) -> String {
    let mut out = String::from("V_w,beta_deg,Omega,mu,z_e,x_e,tension,resid_force,resid_torque\n");
    for t in points {
        let cols = [
            t.wind,
            t.beta.to_degrees(),
            t.omega,
            t.mu,
            t.z_e,
            t.x_e,
            t.tension,
            t.resid_force,
            t.resid_torque,
        ];
        let row: Vec<String> = cols.iter().map(|v| format!("{v:.8e}")).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}
