//! Horizontal wind speed profiles.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Default switch times of a three-level step sequence (s).
pub const DEFAULT_STEP_TIMES: [f64; 3] = [0.0, 2400.0, 3600.0];

/// Sample interval of the synthetic gust series (s).
const GUST_SAMPLE: f64 = 0.1;

/// Wind profile description as written in a scenario file.
#[derive(Debug, Clone, PartialEq)]
pub enum WindSpec {
    Constant(f64),
    /// Zero-order hold: `levels[i]` applies from `times[i]`.
    Steps { levels: Vec<f64>, times: Vec<f64> },
    /// Two-column CSV `time_s, wind_mps`, linearly interpolated.
    File(PathBuf),
    /// Mean plus first-order (Ornstein-Uhlenbeck) coloured noise.
    Gust {
        mean: f64,
        /// Standard deviation as a fraction of the mean.
        intensity: f64,
        correlation_time: f64,
        seed: u64,
    },
}

impl WindSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            WindSpec::Constant(v) => {
                if !(*v > 0.0 && v.is_finite()) {
                    return Err(Error::invalid("wind.constant", format!("must be > 0, got {v}")));
                }
            }
            WindSpec::Steps { levels, times } => {
                if levels.is_empty() || levels.len() != times.len() {
                    return Err(Error::invalid(
                        "wind.levels",
                        format!("{} levels but {} switch times", levels.len(), times.len()),
                    ));
                }
                if levels.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
                    return Err(Error::invalid("wind.levels", "all levels must be > 0"));
                }
                if times[0] != 0.0 || times.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(Error::invalid(
                        "wind.times",
                        "must start at 0 and be strictly increasing",
                    ));
                }
            }
            WindSpec::File(_) => {}
            WindSpec::Gust {
                mean,
                intensity,
                correlation_time,
                ..
            } => {
                if !(*mean > 0.0) {
                    return Err(Error::invalid("wind.mean", "must be > 0"));
                }
                if !(*intensity >= 0.0) {
                    return Err(Error::invalid("wind.intensity", "must be >= 0"));
                }
                if !(*correlation_time > 0.0) {
                    return Err(Error::invalid("wind.correlation_time", "must be > 0"));
                }
            }
        }
        Ok(())
    }

    /// Segment boundaries `(start, end, nominal speed)` used for per-segment
    /// reporting. Non-step profiles form a single segment.
    pub fn segments(&self, duration: f64) -> Vec<(f64, f64, f64)> {
        match self {
            WindSpec::Constant(v) => vec![(0.0, duration, *v)],
            WindSpec::Steps { levels, times } => {
                let mut out = Vec::new();
                for (i, (&lv, &t0)) in levels.iter().zip(times).enumerate() {
                    if t0 >= duration {
                        break;
                    }
                    let t1 = times.get(i + 1).copied().unwrap_or(duration).min(duration);
                    out.push((t0, t1, lv));
                }
                out
            }
            WindSpec::Gust { mean, .. } => vec![(0.0, duration, *mean)],
            WindSpec::File(_) => vec![(0.0, duration, f64::NAN)],
        }
    }
}

/// Evaluable wind profile.
#[derive(Debug)]
pub struct WindProfile {
    kind: Kind,
    warned: AtomicBool,
}

#[derive(Debug)]
enum Kind {
    Constant(f64),
    Steps { levels: Vec<f64>, times: Vec<f64> },
    Series { times: Vec<f64>, values: Vec<f64> },
}

impl WindProfile {
    /// Builds a profile. Gust series are generated up to `horizon` seconds and
    /// held afterwards.
    pub fn new(spec: &WindSpec, horizon: f64) -> Result<Self> {
        spec.validate()?;
        let kind = match spec {
            WindSpec::Constant(v) => Kind::Constant(*v),
            WindSpec::Steps { levels, times } => Kind::Steps {
                levels: levels.clone(),
                times: times.clone(),
            },
            WindSpec::File(path) => {
                let (times, values) = read_series(path)?;
                Kind::Series { times, values }
            }
            WindSpec::Gust {
                mean,
                intensity,
                correlation_time,
                seed,
            } => {
                let (times, values) =
                    gust_series(*mean, *intensity, *correlation_time, *seed, horizon.max(GUST_SAMPLE));
                Kind::Series { times, values }
            }
        };
        Ok(Self {
            kind,
            warned: AtomicBool::new(false),
        })
    }

    pub fn constant(v: f64) -> Self {
        Self {
            kind: Kind::Constant(v),
            warned: AtomicBool::new(false),
        }
    }

    /// Wind speed at time `t` (m/s).
    pub fn at(&self, t: f64) -> f64 {
        match &self.kind {
            Kind::Constant(v) => *v,
            Kind::Steps { levels, times } => {
                let idx = times.partition_point(|&s| s <= t);
                levels[idx.saturating_sub(1)]
            }
            Kind::Series { times, values } => {
                let last = times.len() - 1;
                if t <= times[0] {
                    return values[0];
                }
                if t >= times[last] {
                    if t > times[last] && !self.warned.swap(true, Ordering::Relaxed) {
                        log::warn!(
                            "wind series ends at t = {} s; holding {} m/s",
                            times[last],
                            values[last]
                        );
                    }
                    return values[last];
                }
                let i = times.partition_point(|&s| s <= t) - 1;
                let f = (t - times[i]) / (times[i + 1] - times[i]);
                values[i] + f * (values[i + 1] - values[i])
            }
        }
    }
}

fn read_series(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_series(&text).map_err(|e| match e {
        Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Parses `time_s, wind_mps` rows. A non-numeric first line is a header.
pub fn parse_series(text: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut times = Vec::new();
    let mut values = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut cols = line.split(',').map(str::trim);
        let (a, b) = match (cols.next(), cols.next()) {
            (Some(a), Some(b)) => (a, b),
            _ => return Err(Error::Parse(format!("line {}: expected two columns", lineno + 1))),
        };
        match (a.parse::<f64>(), b.parse::<f64>()) {
            (Ok(t), Ok(v)) => {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(Error::Parse(format!("line {}: wind speed must be > 0", lineno + 1)));
                }
                if let Some(&prev) = times.last() {
                    if !(t > prev) {
                        return Err(Error::Parse(format!(
                            "line {}: time {t} not strictly increasing",
                            lineno + 1
                        )));
                    }
                }
                times.push(t);
                values.push(v);
            }
            _ if times.is_empty() => continue,
            _ => return Err(Error::Parse(format!("line {}: non-numeric row", lineno + 1))),
        }
    }
    if times.is_empty() {
        return Err(Error::Parse("wind series has no rows".into()));
    }
    Ok((times, values))
}

/// Exact discretisation of an OU process sampled every `GUST_SAMPLE` seconds.
fn gust_series(mean: f64, intensity: f64, tau: f64, seed: u64, horizon: f64) -> (Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sigma = intensity * mean;
    let phi = (-GUST_SAMPLE / tau).exp();
    let kick = sigma * (1.0 - phi * phi).sqrt();
    let n = (horizon / GUST_SAMPLE).ceil() as usize + 1;
    let floor = 0.05 * mean;
    let mut times = Vec::with_capacity(n);
    let mut values = Vec::with_capacity(n);
    let first: f64 = StandardNormal.sample(&mut rng);
    let mut dev = sigma * first;
    for i in 0..n {
        times.push(i as f64 * GUST_SAMPLE);
        values.push((mean + dev).max(floor));
        let xi: f64 = StandardNormal.sample(&mut rng);
        dev = phi * dev + kick * xi;
    }
    (times, values)
}
