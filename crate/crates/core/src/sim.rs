//! Closed-loop scenario runner and telemetry.
//!
//! Each step reads the wind, advances the pitch reference, updates the
//! estimator once the switch time is reached, evaluates the braking law and
//! integrates the plant with RK4 over one step.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::config::{Config, ControlMode, PhysicalParams, PlantTier};
use crate::controller::{pi_braking, pid_two_loop, AltitudeLoop, ControlCommand, ReferenceSource, TorqueLimits};
use crate::error::{Error, Result};
use crate::estimator::{sample_update, clamped_vertex, AdaptationGains, EstimatorState, Measurement};
use crate::plant::flapping::{self, FlappingPlant, FullState};
use crate::plant::reduced::{self as red, ReducedPlant, ReducedState, ROTOR_SPEED_FLOOR};
use crate::plant::{rk4_step, PlantOutputs};
use crate::trim::{degree_grid, sweep, TrimSolver, Vertex};
use crate::wind::WindProfile;

/// Pitch grid used to locate the trim altitude maximum of each wind segment (deg).
pub const VERTEX_GRID_DEG: (f64, f64, f64) = (2.0, 0.25, 25.0);

/// Initial blade azimuths of the two rotors in the multibody tier (rad).
const INITIAL_AZIMUTH: [f64; 2] = [0.0, std::f64::consts::FRAC_PI_4];

/// One telemetry row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TelemetryRecord {
    pub t: f64,
    pub x_c: f64,
    pub z_c: f64,
    pub beta: f64,
    pub omega1: f64,
    pub omega2: f64,
    pub u1: f64,
    pub u2: f64,
    pub t1: f64,
    pub t2: f64,
    pub tether_tension: f64,
    pub mu: f64,
    pub beta_r: f64,
    pub a_hat: f64,
    pub b_hat: f64,
    pub c_hat: f64,
    pub e_zh: f64,
    pub v_w: f64,
}

impl TelemetryRecord {
    pub const HEADER: &'static str =
        "t,x_c,z_c,beta,Omega1,Omega2,u1,u2,T1,T2,tether_tension,mu,beta_r,a_hat,b_hat,c_hat,e_zh,V_w";

    fn fields(&self) -> [f64; 18] {
        [
            self.t,
            self.x_c,
            self.z_c,
            self.beta,
            self.omega1,
            self.omega2,
            self.u1,
            self.u2,
            self.t1,
            self.t2,
            self.tether_tension,
            self.mu,
            self.beta_r,
            self.a_hat,
            self.b_hat,
            self.c_hat,
            self.e_zh,
            self.v_w,
        ]
    }

    pub fn csv_row(&self) -> String {
        let cols: Vec<String> = self.fields().iter().map(|v| format!("{v:.8e}")).collect();
        cols.join(",")
    }

    pub fn parse_row(line: &str) -> Result<Self> {
        let v: Vec<f64> = line
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse(format!("telemetry row `{line}`: {e}")))?;
        if v.len() != 18 {
            return Err(Error::Parse(format!("telemetry row has {} columns, expected 18", v.len())));
        }
        Ok(Self {
            t: v[0],
            x_c: v[1],
            z_c: v[2],
            beta: v[3],
            omega1: v[4],
            omega2: v[5],
            u1: v[6],
            u2: v[7],
            t1: v[8],
            t2: v[9],
            tether_tension: v[10],
            mu: v[11],
            beta_r: v[12],
            a_hat: v[13],
            b_hat: v[14],
            c_hat: v[15],
            e_zh: v[16],
            v_w: v[17],
        })
    }
}

/// Reads a telemetry file written by [`run_scenario`].
pub fn read_telemetry(path: &Path) -> Result<Vec<TelemetryRecord>> {
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut rows = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        if i == 0 {
            if line != TelemetryRecord::HEADER {
                return Err(Error::Parse(format!("{}: unexpected header", path.display())));
            }
            continue;
        }
        rows.push(TelemetryRecord::parse_row(&line)?);
    }
    Ok(rows)
}

/// Per-wind-segment tracking of the maximum-altitude error.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentReport {
    pub t_start: f64,
    pub t_end: f64,
    /// Nominal (mean) wind speed of the segment (m/s).
    pub wind: f64,
    /// Trim altitude maximum at the segment wind, if the sweep found one.
    pub trim_vertex: Option<Vertex>,
    /// `(t, |z_max - estimated vertex altitude|)` at every telemetry sample
    /// with the estimator active.
    pub e_zmax: Vec<(f64, f64)>,
}

impl SegmentReport {
    /// Error at the last sample of the segment.
    pub fn e_zmax_end(&self) -> Option<f64> {
        self.e_zmax.last().map(|&(_, e)| e)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub final_t: f64,
    pub final_x: f64,
    pub final_z: f64,
    pub final_beta: f64,
    pub final_beta_r: f64,
    pub segments: Vec<SegmentReport>,
    /// Steps whose command broke the torque bounds or exclusivity, or whose
    /// rotor speed was not positive.
    pub violations: usize,
    pub steps: usize,
    /// Estimator samples whose inner loop hit the iteration cap.
    pub estimator_unconverged: usize,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub summary: RunSummary,
    pub records: Vec<TelemetryRecord>,
}

/// Plant-independent view of the vehicle state.
#[derive(Debug, Clone, Copy)]
struct Pose {
    x: f64,
    z: f64,
    beta: f64,
    beta_dot: f64,
    omega: [f64; 2],
}

enum Vehicle {
    Reduced(ReducedPlant, ReducedState),
    Flapping(FlappingPlant, FullState),
}

impl Vehicle {
    fn pose(&self) -> Pose {
        match self {
            Vehicle::Reduced(_, s) => Pose {
                x: s[red::X],
                z: s[red::Z],
                beta: s[red::BETA],
                beta_dot: s[red::BETA_DOT],
                omega: [s[red::OMEGA_1], s[red::OMEGA_2]],
            },
            Vehicle::Flapping(_, s) => {
                let (q, qd) = flapping::split(s);
                Pose {
                    x: q[flapping::X],
                    z: q[flapping::Z],
                    beta: q[flapping::BETA],
                    beta_dot: qd[flapping::BETA],
                    omega: [qd[flapping::PSI[0]], qd[flapping::PSI[1]]],
                }
            }
        }
    }

    fn finite(&self) -> bool {
        match self {
            Vehicle::Reduced(_, s) => s.iter().all(|v| v.is_finite()),
            Vehicle::Flapping(_, s) => s.iter().all(|v| v.is_finite()),
        }
    }

    /// Advances one RK4 step; returns the loads at the start of the step.
    fn step(&mut self, t: f64, dt: f64, wind: &WindProfile, u: [f64; 2]) -> Result<PlantOutputs> {
        let mut first = None;
        match self {
            Vehicle::Reduced(plant, s) => {
                *s = rk4_step(s, t, dt, |tt, y| {
                    let (d, out) = plant.derivative(y, wind.at(tt), u)?;
                    first.get_or_insert(out);
                    Ok::<_, Error>(d)
                })?;
            }
            Vehicle::Flapping(plant, s) => {
                *s = rk4_step(s, t, dt, |tt, y| {
                    let (d, out) = plant.derivative(y, wind.at(tt), u)?;
                    first.get_or_insert(out);
                    Ok::<_, Error>(d)
                })?;
            }
        }
        first.ok_or_else(|| Error::ModelConsistency("integrator made no evaluations".into()))
    }
}

struct Telemetry {
    writer: Option<BufWriter<File>>,
    records: Vec<TelemetryRecord>,
}

impl Telemetry {
    fn open(path: Option<&Path>) -> Result<Self> {
        let writer = match path {
            Some(p) => {
                let io = |source| Error::Io {
                    path: p.to_path_buf(),
                    source,
                };
                let mut w = BufWriter::new(File::create(p).map_err(io)?);
                writeln!(w, "{}", TelemetryRecord::HEADER).map_err(io)?;
                w.flush().map_err(io)?;
                Some(w)
            }
            None => None,
        };
        Ok(Self {
            writer,
            records: Vec::new(),
        })
    }

    fn push(&mut self, r: TelemetryRecord) -> Result<()> {
        if let Some(w) = self.writer.as_mut() {
            writeln!(w, "{}", r.csv_row())
                .and_then(|_| w.flush())
                .map_err(|e| Error::SimFault {
                    t: r.t,
                    reason: format!("telemetry write failed: {e}"),
                })?;
        }
        self.records.push(r);
        Ok(())
    }
}

/// Trim vertex at each distinct wind speed, computed on the standard grid.
fn segment_vertices(p: &PhysicalParams, winds: &[f64]) -> Result<Vec<Option<Vertex>>> {
    let (a, s, b) = VERTEX_GRID_DEG;
    let grid = degree_grid(a, s, b)?;
    Ok(winds
        .iter()
        .map(|&w| match sweep(p, &[w], &grid) {
            Ok(res) => res.vertex(w).copied(),
            Err(e) => {
                log::warn!("no trim map at V_w = {w} m/s: {e}");
                None
            }
        })
        .collect())
}

/// Runs one scenario to completion.
pub fn run_scenario(cfg: &Config) -> Result<RunOutput> {
    cfg.validate()?;
    let sc = &cfg.scenario;
    let p = &cfg.params;
    let wind = WindProfile::new(&sc.wind, sc.duration)?;
    let limits = TorqueLimits {
        min: sc.u_min,
        max: sc.u_max,
    };

    let mut segments: Vec<SegmentReport> = sc
        .wind
        .segments(sc.duration)
        .into_iter()
        .map(|(t0, t1, w)| {
            let wind_mean = if w.is_finite() {
                w
            } else {
                let n = ((t1 - t0).ceil() as usize).max(1);
                (0..n).map(|i| wind.at(t0 + (i as f64 + 0.5) * (t1 - t0) / n as f64)).sum::<f64>() / n as f64
            };
            SegmentReport {
                t_start: t0,
                t_end: t1,
                wind: wind_mean,
                trim_vertex: None,
                e_zmax: Vec::new(),
            }
        })
        .collect();
    let winds: Vec<f64> = segments.iter().map(|s| s.wind).collect();
    for (seg, v) in segments.iter_mut().zip(segment_vertices(p, &winds)?) {
        seg.trim_vertex = v;
    }

    let trim = TrimSolver::new(p).solve(wind.at(0.0), sc.beta_r_initial)?;
    log::info!(
        "initial trim: V_w = {} m/s, beta = {:.3} deg, z = {:.2} m, Omega = {:.3} rad/s",
        trim.wind,
        trim.beta.to_degrees(),
        trim.z_e,
        trim.omega
    );
    let mut vehicle = match sc.plant_tier {
        PlantTier::Reduced => {
            let plant = ReducedPlant::new(p);
            plant.seed_induced([trim.induced; 2]);
            Vehicle::Reduced(plant, trim.state())
        }
        PlantTier::Flapping => {
            let plant = FlappingPlant::new(p);
            plant.seed_induced([trim.induced; 2]);
            Vehicle::Flapping(plant, flapping::from_reduced(&trim.state(), INITIAL_AZIMUTH, 0.0))
        }
    };

    let a_init = match sc.estimator.a_init {
        Some(a) => a,
        None => {
            let seg = segments
                .iter()
                .find(|s| s.t_start <= sc.t_switch && sc.t_switch < s.t_end)
                .or(segments.first());
            seg.and_then(|s| s.trim_vertex)
                .map(|v| v.curvature)
                .filter(|a| *a > 0.0)
                .ok_or_else(|| {
                    Error::invalid(
                        "estimator.a_init",
                        "no trim altitude maximum at the switch wind speed; set it explicitly",
                    )
                })?
        }
    };

    let mut telemetry = Telemetry::open(sc.output_path.as_deref())?;
    let gains = AdaptationGains::from(&cfg.gains);
    let mut estimator: Option<EstimatorState> = None;
    let mut reference = ReferenceSource::new(sc.beta_r_initial, sc.t_switch, sc.beta_r_rate);
    let mut integ = 0.0;
    let mut altitude_loop: Option<AltitudeLoop> = None;
    let mut violations = 0;
    let mut unconverged = 0;

    let n_steps = (sc.duration / sc.dt).round() as usize;
    let every = if sc.output_interval > 0.0 {
        ((sc.output_interval / sc.dt).round() as usize).max(1)
    } else {
        1
    };

    for k in 0..=n_steps {
        let t = k as f64 * sc.dt;
        let pose = vehicle.pose();
        let v_w = wind.at(t);

        let vertex = estimator.as_ref().and_then(|e| clamped_vertex(e, &sc.estimator));
        let beta_r = reference.update(t, vertex, sc.dt);

        if sc.mode == ControlMode::Adaptive && t >= sc.t_switch {
            let m = Measurement {
                beta: pose.beta,
                beta_dot: pose.beta_dot,
                z_c: pose.z,
                t,
            };
            let st = *estimator.get_or_insert_with(|| {
                log::info!("estimator engaged at t = {t} s with a_hat = {a_init:.2} m/rad^2");
                EstimatorState::centred(a_init, sc.beta_r_initial, pose.z, gains)
            });
            let out = sample_update(&st, &m, &sc.estimator);
            if !out.converged && !out.skipped {
                unconverged += 1;
            }
            estimator = Some(out.state);
        }

        let cmd: ControlCommand = if sc.mode == ControlMode::Legacy && t >= sc.t_switch {
            let lp = altitude_loop.get_or_insert_with(|| AltitudeLoop::bumpless(beta_r, &cfg.gains));
            pid_two_loop(pose.z, sc.z_d, pose.beta, lp, &cfg.gains, &limits, sc.dt)
        } else {
            let c = pi_braking(pose.beta, beta_r, integ, &cfg.gains, &limits, sc.dt);
            integ = c.integ;
            c
        };
        if !cmd.is_admissible(&limits) || !(pose.omega[0] > 0.0 && pose.omega[1] > 0.0) {
            violations += 1;
        }

        let fault = |e: Error| match e {
            Error::SimFault { .. } => e,
            other => Error::SimFault {
                t,
                reason: other.to_string(),
            },
        };
        let out = if k < n_steps {
            Some(vehicle.step(t, sc.dt, &wind, cmd.torques()).map_err(fault)?)
        } else {
            None
        };

        if k % every == 0 || k == n_steps {
            let loads = match out {
                Some(o) => o,
                None => probe_loads(&vehicle, v_w, cmd.torques()).map_err(fault)?,
            };
            let est = estimator.as_ref();
            let rec = TelemetryRecord {
                t,
                x_c: pose.x,
                z_c: pose.z,
                beta: pose.beta,
                omega1: pose.omega[0],
                omega2: pose.omega[1],
                u1: cmd.u1,
                u2: cmd.u2,
                t1: loads.thrust[0],
                t2: loads.thrust[1],
                tether_tension: loads.tether.tension_magnitude,
                mu: 0.5 * (loads.mu[0] + loads.mu[1]),
                beta_r: cmd.beta_r,
                a_hat: est.map_or(f64::NAN, |e| e.a_hat),
                b_hat: est.map_or(f64::NAN, |e| e.b_hat),
                c_hat: est.map_or(f64::NAN, |e| e.c_hat),
                e_zh: est.map_or(f64::NAN, |e| e.e_zh),
                v_w,
            };
            telemetry.push(rec)?;
            if let Some(zv) = est.and_then(|e| e.vertex_altitude()) {
                if let Some(seg) = segments.iter_mut().find(|s| s.t_start <= t && t <= s.t_end) {
                    if let Some(v) = seg.trim_vertex {
                        seg.e_zmax.push((t, (v.z_max - zv).abs()));
                    }
                }
            }
        }

        if k < n_steps {
            let next = vehicle.pose();
            let t_next = t + sc.dt;
            if !vehicle.finite() {
                return Err(Error::SimFault {
                    t: t_next,
                    reason: "state became non-finite".into(),
                });
            }
            if !(next.z > 0.0) {
                return Err(Error::SimFault {
                    t: t_next,
                    reason: format!("vehicle reached the ground (z = {:.3} m)", next.z),
                });
            }
            if next.omega.iter().any(|w| !(*w > ROTOR_SPEED_FLOOR)) {
                return Err(Error::SimFault {
                    t: t_next,
                    reason: format!("rotor stalled: Omega = {:?} rad/s", next.omega),
                });
            }
        }
    }

    let end = vehicle.pose();
    Ok(RunOutput {
        summary: RunSummary {
            final_t: n_steps as f64 * sc.dt,
            final_x: end.x,
            final_z: end.z,
            final_beta: end.beta,
            final_beta_r: reference.current(),
            segments,
            violations,
            steps: n_steps,
            estimator_unconverged: unconverged,
        },
        records: telemetry.records,
    })
}

fn probe_loads(vehicle: &Vehicle, wind: f64, u: [f64; 2]) -> Result<PlantOutputs> {
    match vehicle {
        Vehicle::Reduced(plant, s) => plant.derivative(s, wind, u).map(|(_, o)| o),
        Vehicle::Flapping(plant, s) => plant.derivative(s, wind, u).map(|(_, o)| o),
    }
}
