//! Physical parameters, controller gains and scenario settings.
//!
//! Scenario files are flat `key = value` text (TOML syntax, dotted keys).
//! Angles are written in degrees and carry a `_deg` suffix; every other
//! quantity is SI. Internally all angles are radians.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::wind::WindSpec;

/// Mass, geometry, aerodynamic and tether constants of the vehicle.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalParams {
    /// Frame mass (kg).
    pub m_f: f64,
    /// Hub mass, per rotor (kg).
    pub m_h: f64,
    /// Blade mass (kg).
    pub m_b: f64,
    /// Rotor-centre separation (m).
    pub l: f64,
    /// Hub radius, which is also the flap-hinge radius (m).
    pub r_h: f64,
    /// Blade chord (m).
    pub chord: f64,
    /// Rotor radius (m).
    pub rotor_radius: f64,
    /// Unstretched tether length (m).
    pub l_t: f64,
    pub rho_air: f64,
    pub g: f64,
    /// Blade lift-curve slope (1/rad).
    pub a0: f64,
    /// Blade profile drag coefficient.
    pub cd0: f64,
    /// Blade pitch setting (rad).
    pub theta0: f64,
    /// Tether mass per unit length (kg/m).
    pub tether_lin_density: f64,
    /// Tether axial stiffness EA (N).
    pub tether_axial_stiffness: f64,
    /// Optional axial damping along the chord when taut (N s/m); 0 disables it.
    pub tether_damping: f64,
}

impl Default for PhysicalParams {
    fn default() -> Self {
        Self {
            m_f: 13.6056,
            m_h: 1.0,
            m_b: 2.5418,
            l: 8.13,
            r_h: 0.0762,
            chord: 0.03048,
            rotor_radius: 3.048,
            l_t: 1000.0,
            rho_air: 1.225,
            g: 9.81,
            a0: 5.73,
            cd0: 0.008,
            theta0: 6.0_f64.to_radians(),
            tether_lin_density: 0.005,
            tether_axial_stiffness: 2.0e5,
            tether_damping: 0.0,
        }
    }
}

/// Lumped inertias used by the reduced-order plant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Inertias {
    /// Total mass: frame, two hubs, eight blades (kg).
    pub total_mass: f64,
    /// Frame pitch inertia about the frame centre (kg m^2).
    pub pitch: f64,
    /// Per-rotor inertia about the hub axis (kg m^2).
    pub rotor: f64,
}

impl PhysicalParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("params.m_f", self.m_f),
            ("params.m_h", self.m_h),
            ("params.m_b", self.m_b),
            ("params.l", self.l),
            ("params.r_h", self.r_h),
            ("params.chord", self.chord),
            ("params.rotor_radius", self.rotor_radius),
            ("params.tether_length", self.l_t),
            ("params.g", self.g),
            ("params.a0", self.a0),
            ("params.tether_axial_stiffness", self.tether_axial_stiffness),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(name, format!("must be > 0, got {v}")));
            }
        }
        if self.r_h >= self.rotor_radius {
            return Err(Error::invalid(
                "params.r_h",
                format!("hub radius {} must be below rotor radius {}", self.r_h, self.rotor_radius),
            ));
        }
        if self.chord >= self.rotor_radius {
            return Err(Error::invalid(
                "params.chord",
                format!("chord {} must be below rotor radius {}", self.chord, self.rotor_radius),
            ));
        }
        if !(self.rho_air > 0.5 && self.rho_air < 1.5) {
            return Err(Error::invalid(
                "params.rho_air",
                format!("must lie in (0.5, 1.5), got {}", self.rho_air),
            ));
        }
        for (name, v) in [
            ("params.cd0", self.cd0),
            ("params.tether_lin_density", self.tether_lin_density),
            ("params.tether_damping", self.tether_damping),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(name, format!("must be >= 0, got {v}")));
            }
        }
        if !self.theta0.is_finite() {
            return Err(Error::invalid("params.theta0_deg", "not finite"));
        }
        Ok(())
    }

    /// Total mass, frame pitch inertia and per-rotor spin inertia.
    ///
    /// Blades are uniform rods from `r_h` to `R`; the hub is a disc of radius
    /// `r_h`; for pitch, hubs and blades are lumped at the rotor centres and the
    /// frame is a uniform bar of length `l`.
    pub fn derived_inertias(&self) -> Inertias {
        let r = self.rotor_radius;
        let rh = self.r_h;
        let total_mass = self.m_f + 2.0 * self.m_h + 8.0 * self.m_b;
        let blade = self.m_b * (r.powi(3) - rh.powi(3)) / (3.0 * (r - rh));
        let rotor = 4.0 * blade + 0.5 * self.m_h * rh * rh;
        let half = 0.5 * self.l;
        let pitch = 2.0 * (self.m_h + 4.0 * self.m_b) * half * half + self.m_f * self.l * self.l / 12.0;
        Inertias {
            total_mass,
            pitch,
            rotor,
        }
    }

    /// Weight per unit length of the tether (N/m).
    pub fn tether_weight_per_length(&self) -> f64 {
        self.tether_lin_density * self.g
    }
}

/// Feedback and adaptation gains.
#[derive(Debug, Clone, PartialEq)]
pub struct GainSet {
    /// Legacy outer loop, rad per m of altitude error.
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
    /// Inner braking loop, N m per rad.
    pub kp2: f64,
    pub ki2: f64,
    /// Adaptation gains for a, b and c.
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    /// Robustness bounds on the a- and b-estimation errors.
    pub e_amax: f64,
    pub e_bmax: f64,
}

impl Default for GainSet {
    fn default() -> Self {
        Self {
            kp: 0.02,
            ki: 0.001,
            kd: 0.05,
            kp2: 100.0,
            ki2: 0.5,
            k1: -0.0003,
            k2: -0.003,
            k3: 0.01,
            e_amax: 0.0,
            e_bmax: 0.0,
        }
    }
}

impl GainSet {
    pub fn k_total(&self) -> f64 {
        self.k1 + self.k2 + self.k3
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("gains.kp", self.kp),
            ("gains.ki", self.ki),
            ("gains.kd", self.kd),
            ("gains.kp2", self.kp2),
            ("gains.ki2", self.ki2),
            ("gains.k1", self.k1),
            ("gains.k2", self.k2),
            ("gains.k3", self.k3),
            ("gains.e_amax", self.e_amax),
            ("gains.e_bmax", self.e_bmax),
        ] {
            if !v.is_finite() {
                return Err(Error::invalid(name, "not finite"));
            }
        }
        if self.k3 <= -(self.k1 + self.k2) {
            return Err(Error::invalid(
                "gains.k3",
                format!(
                    "k3 = {} must exceed -(k1 + k2) = {} so that k1 + k2 + k3 > 0",
                    self.k3,
                    -(self.k1 + self.k2)
                ),
            ));
        }
        if self.kp2 <= 0.0 {
            return Err(Error::invalid("gains.kp2", format!("must be > 0, got {}", self.kp2)));
        }
        if self.ki2 < 0.0 {
            return Err(Error::invalid("gains.ki2", format!("must be >= 0, got {}", self.ki2)));
        }
        if self.e_amax < 0.0 || self.e_bmax < 0.0 {
            return Err(Error::invalid("gains.e_amax/e_bmax", "robustness bounds must be >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlantTier {
    Reduced,
    Flapping,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ControlMode {
    /// Estimator-generated reference with the PI braking law.
    Adaptive,
    /// Altitude-tracking outer PID loop with proportional braking.
    Legacy,
}

/// Settings of the online quadratic estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorSettings {
    /// Initial curvature estimate (m/rad^2). `None` derives it from the trim
    /// map at the initial wind speed.
    pub a_init: Option<f64>,
    /// Smallest |beta| accepted for adaptation (rad).
    pub beta_min: f64,
    /// Smallest curvature estimate for which a vertex is reported (m/rad^2).
    pub a_min: f64,
    /// Inner-loop iteration cap per sample.
    pub max_inner: usize,
    /// Inner-loop convergence threshold on |e_zh| (m).
    pub tolerance: f64,
    /// Operating range the vertex estimate is clamped to (rad).
    pub beta_zmax_min: f64,
    pub beta_zmax_max: f64,
}

impl Default for EstimatorSettings {
    fn default() -> Self {
        Self {
            a_init: None,
            beta_min: 0.01,
            a_min: 1.0,
            max_inner: 10_000,
            tolerance: 1e-5,
            beta_zmax_min: 3.0_f64.to_radians(),
            beta_zmax_max: 20.0_f64.to_radians(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    /// Simulated time (s).
    pub duration: f64,
    /// Integrator step (s).
    pub dt: f64,
    /// Time at which the estimator starts generating the reference (s).
    pub t_switch: f64,
    /// Fixed reference pitch before `t_switch` (rad).
    pub beta_r_initial: f64,
    pub wind: WindSpec,
    /// Braking torque limits (N m).
    pub u_min: f64,
    pub u_max: f64,
    pub output_path: Option<PathBuf>,
    pub plant_tier: PlantTier,
    pub mode: ControlMode,
    /// Desired altitude for the legacy controller (m).
    pub z_d: f64,
    /// Reference slew-rate limit after the switch (rad/s).
    pub beta_r_rate: f64,
    /// Telemetry sampling interval (s); 0 records every step.
    pub output_interval: f64,
    pub estimator: EstimatorSettings,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            duration: 3600.0,
            dt: 1e-3,
            t_switch: 1200.0,
            beta_r_initial: 8.5_f64.to_radians(),
            wind: WindSpec::Constant(8.0),
            u_min: -1.0,
            u_max: 0.0,
            output_path: None,
            plant_tier: PlantTier::Reduced,
            mode: ControlMode::Adaptive,
            z_d: 800.0,
            beta_r_rate: 0.2_f64.to_radians(),
            output_interval: 1.0,
            estimator: EstimatorSettings::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::invalid("scenario.dt", format!("must be > 0, got {}", self.dt)));
        }
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return Err(Error::invalid(
                "scenario.duration",
                format!("must be > 0, got {}", self.duration),
            ));
        }
        if !(self.t_switch >= 0.0) {
            return Err(Error::invalid(
                "scenario.t_switch",
                format!("must be >= 0, got {}", self.t_switch),
            ));
        }
        if !(self.u_min <= self.u_max && self.u_max <= 0.0) {
            return Err(Error::invalid(
                "scenario.u_min/u_max",
                format!("need u_min <= u_max <= 0, got [{}, {}]", self.u_min, self.u_max),
            ));
        }
        if !(self.beta_r_rate > 0.0) {
            return Err(Error::invalid("scenario.beta_r_rate_deg", "must be > 0"));
        }
        if !(self.output_interval >= 0.0) {
            return Err(Error::invalid("scenario.output_interval", "must be >= 0"));
        }
        if self.mode == ControlMode::Legacy && !(self.z_d > 0.0) {
            return Err(Error::invalid("scenario.z_d", "desired altitude must be > 0"));
        }
        let est = &self.estimator;
        if !(est.beta_min > 0.0) || !(est.a_min > 0.0) || !(est.tolerance > 0.0) {
            return Err(Error::invalid(
                "estimator",
                "beta_min, a_min and tolerance must be > 0",
            ));
        }
        if let Some(a) = est.a_init {
            if !(a > 0.0) {
                return Err(Error::invalid("estimator.a_init", "must be > 0"));
            }
        }
        if !(est.beta_zmax_min < est.beta_zmax_max) {
            return Err(Error::invalid(
                "estimator.beta_zmax_min_deg",
                "clamp range must be non-empty",
            ));
        }
        self.wind.validate()
    }
}

/// Everything a scenario file defines.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Config {
    pub scenario: ScenarioConfig,
    pub params: PhysicalParams,
    pub gains: GainSet,
}

/// Reads and validates a scenario file.
pub fn load_config(path: impl AsRef<Path>) -> Result<Config> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Config::parse(&text)
}

type Flat = BTreeMap<String, toml::Value>;

fn flatten(prefix: &str, table: &toml::Table, out: &mut Flat) -> Result<()> {
    for (k, v) in table {
        let key = if prefix.is_empty() {
            k.clone()
        } else {
            format!("{prefix}.{k}")
        };
        match v {
            toml::Value::Table(t) => flatten(&key, t, out)?,
            other => {
                if out.insert(key.clone(), other.clone()).is_some() {
                    return Err(Error::Parse(format!("duplicate key `{key}`")));
                }
            }
        }
    }
    Ok(())
}

struct Reader {
    map: Flat,
}

impl Reader {
    fn take(&mut self, key: &str) -> Option<toml::Value> {
        self.map.remove(key)
    }

    fn f64(&mut self, key: &str, slot: &mut f64) -> Result<()> {
        if let Some(v) = self.take(key) {
            *slot = as_f64(key, &v)?;
        }
        Ok(())
    }

    fn deg(&mut self, key: &str, slot: &mut f64) -> Result<()> {
        if let Some(v) = self.take(key) {
            *slot = as_f64(key, &v)?.to_radians();
        }
        Ok(())
    }

    fn string(&mut self, key: &str) -> Result<Option<String>> {
        match self.take(key) {
            None => Ok(None),
            Some(toml::Value::String(s)) => Ok(Some(s)),
            Some(other) => Err(Error::Parse(format!("`{key}` must be a string, got {other}"))),
        }
    }

    fn f64_list(&mut self, key: &str) -> Result<Option<Vec<f64>>> {
        match self.take(key) {
            None => Ok(None),
            Some(toml::Value::Array(items)) => items
                .iter()
                .map(|v| as_f64(key, v))
                .collect::<Result<Vec<_>>>()
                .map(Some),
            Some(other) => Err(Error::Parse(format!("`{key}` must be an array, got {other}"))),
        }
    }
}

fn as_f64(key: &str, v: &toml::Value) -> Result<f64> {
    match v {
        toml::Value::Float(f) => Ok(*f),
        toml::Value::Integer(i) => Ok(*i as f64),
        other => Err(Error::Parse(format!("`{key}` must be a number, got {other}"))),
    }
}

impl Config {
    /// Parses scenario text; omitted keys keep their defaults.
    pub fn parse(text: &str) -> Result<Config> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Parse(e.to_string()))?;
        let mut map = Flat::new();
        flatten("", &table, &mut map)?;
        let mut r = Reader { map };
        let mut cfg = Config::default();

        let p = &mut cfg.params;
        r.f64("params.m_f", &mut p.m_f)?;
        r.f64("params.m_h", &mut p.m_h)?;
        r.f64("params.m_b", &mut p.m_b)?;
        r.f64("params.l", &mut p.l)?;
        r.f64("params.r_h", &mut p.r_h)?;
        r.f64("params.chord", &mut p.chord)?;
        r.f64("params.rotor_radius", &mut p.rotor_radius)?;
        r.f64("params.tether_length", &mut p.l_t)?;
        r.f64("params.rho_air", &mut p.rho_air)?;
        r.f64("params.g", &mut p.g)?;
        r.f64("params.a0", &mut p.a0)?;
        r.f64("params.cd0", &mut p.cd0)?;
        r.deg("params.theta0_deg", &mut p.theta0)?;
        r.f64("params.tether_lin_density", &mut p.tether_lin_density)?;
        r.f64("params.tether_axial_stiffness", &mut p.tether_axial_stiffness)?;
        r.f64("params.tether_damping", &mut p.tether_damping)?;

        let g = &mut cfg.gains;
        r.f64("gains.kp", &mut g.kp)?;
        r.f64("gains.ki", &mut g.ki)?;
        r.f64("gains.kd", &mut g.kd)?;
        r.f64("gains.kp2", &mut g.kp2)?;
        r.f64("gains.ki2", &mut g.ki2)?;
        r.f64("gains.k1", &mut g.k1)?;
        r.f64("gains.k2", &mut g.k2)?;
        r.f64("gains.k3", &mut g.k3)?;
        r.f64("gains.e_amax", &mut g.e_amax)?;
        r.f64("gains.e_bmax", &mut g.e_bmax)?;

        let s = &mut cfg.scenario;
        r.f64("scenario.duration", &mut s.duration)?;
        r.f64("scenario.dt", &mut s.dt)?;
        r.f64("scenario.t_switch", &mut s.t_switch)?;
        r.deg("scenario.beta_r_initial_deg", &mut s.beta_r_initial)?;
        r.f64("scenario.u_min", &mut s.u_min)?;
        r.f64("scenario.u_max", &mut s.u_max)?;
        r.f64("scenario.z_d", &mut s.z_d)?;
        r.deg("scenario.beta_r_rate_deg", &mut s.beta_r_rate)?;
        r.f64("scenario.output_interval", &mut s.output_interval)?;
        if let Some(out) = r.string("scenario.output")? {
            s.output_path = Some(PathBuf::from(out));
        }
        if let Some(tier) = r.string("scenario.plant_tier")? {
            s.plant_tier = match tier.as_str() {
                "reduced" => PlantTier::Reduced,
                "flapping" => PlantTier::Flapping,
                other => {
                    return Err(Error::invalid(
                        "scenario.plant_tier",
                        format!("expected `reduced` or `flapping`, got `{other}`"),
                    ))
                }
            };
        }
        if let Some(mode) = r.string("scenario.mode")? {
            s.mode = match mode.as_str() {
                "adaptive" => ControlMode::Adaptive,
                "legacy" => ControlMode::Legacy,
                other => {
                    return Err(Error::invalid(
                        "scenario.mode",
                        format!("expected `adaptive` or `legacy`, got `{other}`"),
                    ))
                }
            };
        }

        let e = &mut s.estimator;
        if let Some(v) = r.take("estimator.a_init") {
            e.a_init = Some(as_f64("estimator.a_init", &v)?);
        }
        r.deg("estimator.beta_min_deg", &mut e.beta_min)?;
        r.f64("estimator.a_min", &mut e.a_min)?;
        if let Some(v) = r.take("estimator.max_inner") {
            let n = as_f64("estimator.max_inner", &v)?;
            if !(n >= 0.0 && n.fract() == 0.0) {
                return Err(Error::invalid("estimator.max_inner", "must be a non-negative integer"));
            }
            e.max_inner = n as usize;
        }
        r.f64("estimator.tolerance", &mut e.tolerance)?;
        r.deg("estimator.beta_zmax_min_deg", &mut e.beta_zmax_min)?;
        r.deg("estimator.beta_zmax_max_deg", &mut e.beta_zmax_max)?;

        s.wind = read_wind(&mut r, s.wind.clone())?;

        if let Some(key) = r.map.keys().next() {
            return Err(Error::Parse(format!("unknown key `{key}`")));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.gains.validate()?;
        self.scenario.validate()
    }

    /// Writes every field as flat `key = value` text that [`Config::parse`]
    /// reads back to identical values.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let p = &self.params;
        let s = &self.scenario;
        let g = &self.gains;
        let mut num = |key: &str, v: f64| {
            let _ = writeln!(out, "{key} = {}", fmt_f64(v));
        };
        num("params.m_f", p.m_f);
        num("params.m_h", p.m_h);
        num("params.m_b", p.m_b);
        num("params.l", p.l);
        num("params.r_h", p.r_h);
        num("params.chord", p.chord);
        num("params.rotor_radius", p.rotor_radius);
        num("params.tether_length", p.l_t);
        num("params.rho_air", p.rho_air);
        num("params.g", p.g);
        num("params.a0", p.a0);
        num("params.cd0", p.cd0);
        num("params.theta0_deg", deg_repr(p.theta0));
        num("params.tether_lin_density", p.tether_lin_density);
        num("params.tether_axial_stiffness", p.tether_axial_stiffness);
        num("params.tether_damping", p.tether_damping);
        num("gains.kp", g.kp);
        num("gains.ki", g.ki);
        num("gains.kd", g.kd);
        num("gains.kp2", g.kp2);
        num("gains.ki2", g.ki2);
        num("gains.k1", g.k1);
        num("gains.k2", g.k2);
        num("gains.k3", g.k3);
        num("gains.e_amax", g.e_amax);
        num("gains.e_bmax", g.e_bmax);
        num("scenario.duration", s.duration);
        num("scenario.dt", s.dt);
        num("scenario.t_switch", s.t_switch);
        num("scenario.beta_r_initial_deg", deg_repr(s.beta_r_initial));
        num("scenario.u_min", s.u_min);
        num("scenario.u_max", s.u_max);
        num("scenario.z_d", s.z_d);
        num("scenario.beta_r_rate_deg", deg_repr(s.beta_r_rate));
        num("scenario.output_interval", s.output_interval);
        if let Some(a) = s.estimator.a_init {
            num("estimator.a_init", a);
        }
        num("estimator.beta_min_deg", deg_repr(s.estimator.beta_min));
        num("estimator.a_min", s.estimator.a_min);
        num("estimator.max_inner", s.estimator.max_inner as f64);
        num("estimator.tolerance", s.estimator.tolerance);
        num("estimator.beta_zmax_min_deg", deg_repr(s.estimator.beta_zmax_min));
        num("estimator.beta_zmax_max_deg", deg_repr(s.estimator.beta_zmax_max));
        let tier = match s.plant_tier {
            PlantTier::Reduced => "reduced",
            PlantTier::Flapping => "flapping",
        };
        let mode = match s.mode {
            ControlMode::Adaptive => "adaptive",
            ControlMode::Legacy => "legacy",
        };
        let _ = writeln!(out, "scenario.plant_tier = \"{tier}\"");
        let _ = writeln!(out, "scenario.mode = \"{mode}\"");
        if let Some(path) = &s.output_path {
            let _ = writeln!(out, "scenario.output = {}", toml::Value::String(path.display().to_string()));
        }
        write_wind(&mut out, &s.wind);
        out
    }
}

fn read_wind(r: &mut Reader, default: WindSpec) -> Result<WindSpec> {
    let kind = r.string("wind.kind")?;
    let constant = r.take("wind.constant");
    let levels = r.f64_list("wind.levels")?;
    let times = r.f64_list("wind.times")?;
    let file = r.string("wind.file")?;
    let mean = r.take("wind.mean");
    let intensity = r.take("wind.intensity");
    let corr = r.take("wind.correlation_time");
    let seed = r.take("wind.seed");

    let kind = match kind {
        Some(k) => k,
        None if constant.is_some() => "constant".into(),
        None if levels.is_some() => "steps".into(),
        None if file.is_some() => "file".into(),
        None if mean.is_some() => "gust".into(),
        None => return Ok(default),
    };
    let missing = |key: &str| Error::invalid(key, format!("required for wind.kind = \"{kind}\""));
    match kind.as_str() {
        "constant" => {
            let v = constant.ok_or_else(|| missing("wind.constant"))?;
            Ok(WindSpec::Constant(as_f64("wind.constant", &v)?))
        }
        "steps" => {
            let levels = levels.ok_or_else(|| missing("wind.levels"))?;
            let times = match times {
                Some(t) => t,
                None if levels.len() == crate::wind::DEFAULT_STEP_TIMES.len() => {
                    crate::wind::DEFAULT_STEP_TIMES.to_vec()
                }
                None => return Err(missing("wind.times")),
            };
            Ok(WindSpec::Steps { levels, times })
        }
        "file" => {
            let path = file.ok_or_else(|| missing("wind.file"))?;
            Ok(WindSpec::File(PathBuf::from(path)))
        }
        "gust" => {
            let mean = as_f64("wind.mean", &mean.ok_or_else(|| missing("wind.mean"))?)?;
            let intensity = match intensity {
                Some(v) => as_f64("wind.intensity", &v)?,
                None => 0.1,
            };
            let correlation_time = match corr {
                Some(v) => as_f64("wind.correlation_time", &v)?,
                None => 10.0,
            };
            let seed = match seed {
                Some(toml::Value::Integer(i)) if i >= 0 => i as u64,
                Some(other) => {
                    return Err(Error::invalid("wind.seed", format!("must be a non-negative integer, got {other}")))
                }
                None => 0,
            };
            Ok(WindSpec::Gust {
                mean,
                intensity,
                correlation_time,
                seed,
            })
        }
        other => Err(Error::invalid(
            "wind.kind",
            format!("expected constant, steps, file or gust, got `{other}`"),
        )),
    }
}

fn write_wind(out: &mut String, wind: &WindSpec) {
    let list = |v: &[f64]| v.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(", ");
    match wind {
        WindSpec::Constant(v) => {
            let _ = writeln!(out, "wind.kind = \"constant\"\nwind.constant = {}", fmt_f64(*v));
        }
        WindSpec::Steps { levels, times } => {
            let _ = writeln!(
                out,
                "wind.kind = \"steps\"\nwind.levels = [{}]\nwind.times = [{}]",
                list(levels),
                list(times)
            );
        }
        WindSpec::File(path) => {
            let _ = writeln!(
                out,
                "wind.kind = \"file\"\nwind.file = {}",
                toml::Value::String(path.display().to_string())
            );
        }
        WindSpec::Gust {
            mean,
            intensity,
            correlation_time,
            seed,
        } => {
            let _ = writeln!(
                out,
                "wind.kind = \"gust\"\nwind.mean = {}\nwind.intensity = {}\nwind.correlation_time = {}\nwind.seed = {}",
                fmt_f64(*mean),
                fmt_f64(*intensity),
                fmt_f64(*correlation_time),
                seed
            );
        }
    }
}

/// Shortest float literal that parses back to `v` (always with a decimal point
/// or exponent so TOML reads it as a float).
fn fmt_f64(v: f64) -> String {
    let s = format!("{v:?}");
    if s.contains(['.', 'e', 'E', 'n', 'i']) {
        s
    } else {
        format!("{s}.0")
    }
}

/// Degree value whose conversion back to radians reproduces `rad` exactly.
fn deg_repr(rad: f64) -> f64 {
    let d = rad.to_degrees();
    if d.to_radians() == rad {
        return d;
    }
    let mut up = d;
    let mut down = d;
    for _ in 0..8 {
        up = up.next_up();
        down = down.next_down();
        if up.to_radians() == rad {
            return up;
        }
        if down.to_radians() == rad {
            return down;
        }
    }
    d
}
