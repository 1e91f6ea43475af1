use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use autogyro_core::config::{load_config, Config, GainSet, PhysicalParams};
use autogyro_core::estimator::{synthetic_run, AdaptationGains, EstimatorState, SyntheticPlant};
use autogyro_core::sim::run_scenario;
use autogyro_core::tether::{catenary_oracle, solve_tether};
use autogyro_core::trim::{degree_grid, sweep, sweep_csv};
use clap::{ArgAction, Parser, Subcommand};
use nalgebra::Vector2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Largest tracking error accepted by the estimator self-test (m).
const SELFTEST_TOLERANCE: f64 = 1e-3;
/// Largest relative tension mismatch accepted by the catenary check.
const CATENARY_TOLERANCE: f64 = 5e-3;

#[derive(Parser)]
#[command(name = "autogyro", version, about = "Tethered dual-rotor autogyro simulator")]
struct Cli {
    /// Increase log verbosity (-v info, -vv debug, -vvv trace).
    #[arg(short, long, action = ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a closed-loop scenario and write telemetry.
    Run {
        /// Scenario file.
        scenario: PathBuf,
        /// Telemetry CSV path, overriding the scenario file.
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Simulated duration in seconds, overriding the scenario file.
        #[arg(long)]
        duration: Option<f64>,
        /// Integration step in seconds, overriding the scenario file.
        #[arg(long)]
        dt: Option<f64>,
    },
    /// Sweep trim equilibria over wind speeds and pitch angles.
    Trim {
        /// Scenario file supplying the vehicle parameters; defaults if omitted.
        params: Option<PathBuf>,
        /// Wind speeds in m/s.
        #[arg(long, value_delimiter = ',', default_value = "8,10,12")]
        winds: Vec<f64>,
        /// Pitch grid in degrees as start:step:stop.
        #[arg(long, default_value = "3:0.25:20")]
        beta: String,
        /// Write the CSV here instead of standard output.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run the altitude-map estimator against a known quadratic plant.
    EstimatorSelftest {
        /// Number of one-second measurement samples.
        #[arg(long, default_value_t = 200)]
        samples: usize,
    },
    /// Compare the analytic tether solution with a discrete chain model.
    CatenaryCheck {
        #[arg(long, default_value_t = 5)]
        cases: usize,
        #[arg(long, default_value_t = 500)]
        links: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        2 => "debug",
        _ => "trace",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    match dispatch(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

/// Runs one subcommand. `Ok(false)` means the command completed but a check
/// or invariant failed.
fn dispatch(cmd: Command) -> Result<bool, Box<dyn std::error::Error>> {
    match cmd {
        Command::Run {
            scenario,
            output,
            duration,
            dt,
        } => {
            let mut cfg = load_config(&scenario)?;
            if let Some(path) = output {
                cfg.scenario.output_path = Some(path);
            }
            if let Some(d) = duration {
                cfg.scenario.duration = d;
            }
            if let Some(h) = dt {
                cfg.scenario.dt = h;
            }
            run(&cfg)
        }
        Command::Trim {
            params,
            winds,
            beta,
            output,
        } => {
            let p = match params {
                Some(path) => load_config(path)?.params,
                None => PhysicalParams::default(),
            };
            trim(&p, &winds, &beta, output)
        }
        Command::EstimatorSelftest { samples } => Ok(estimator_selftest(samples)),
        Command::CatenaryCheck { cases, links, seed } => catenary_check(cases, links, seed),
    }
}

fn run(cfg: &Config) -> Result<bool, Box<dyn std::error::Error>> {
    let out = run_scenario(cfg)?;
    let s = &out.summary;
    println!(
        "t = {:.2} s  x = {:.2} m  z = {:.2} m  beta = {:.3} deg  beta_r = {:.3} deg",
        s.final_t,
        s.final_x,
        s.final_z,
        s.final_beta.to_degrees(),
        s.final_beta_r.to_degrees()
    );
    for seg in &s.segments {
        let peak = seg
            .trim_vertex
            .map_or("none".to_string(), |v| format!("{:.2} m at {:.3} deg", v.z_max, v.beta.to_degrees()));
        let err = seg.e_zmax_end().map_or("n/a".to_string(), |e| format!("{e:.3} m"));
        println!(
            "segment {:.0}-{:.0} s at {:.2} m/s: trim peak {peak}, final e_zmax {err}",
            seg.t_start, seg.t_end, seg.wind
        );
    }
    println!(
        "steps {}  actuation violations {}  capped estimator updates {}",
        s.steps, s.violations, s.estimator_unconverged
    );
    if let Some(path) = &cfg.scenario.output_path {
        println!("telemetry: {}", path.display());
    }
    if s.violations > 0 {
        eprintln!("error: {} steps violated the actuation invariants", s.violations);
        return Ok(false);
    }
    Ok(true)
}

/// Parses `start:step:stop` in degrees.
fn parse_range(text: &str) -> Result<(f64, f64, f64), String> {
    let parts: Vec<&str> = text.split(':').collect();
    let nums = parts
        .iter()
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| format!("bad pitch range `{text}`: {e}"))?;
    match nums[..] {
        [a, s, b] => Ok((a, s, b)),
        _ => Err(format!("pitch range `{text}` must be start:step:stop")),
    }
}

fn trim(
    p: &PhysicalParams,
    winds: &[f64],
    beta: &str,
    output: Option<PathBuf>,
) -> Result<bool, Box<dyn std::error::Error>> {
    let (a, s, b) = parse_range(beta)?;
    let grid = degree_grid(a, s, b)?;
    let res = sweep(p, winds, &grid)?;
    let csv = sweep_csv(&res.points);
    match output {
        Some(path) => fs::write(&path, csv).map_err(|e| format!("cannot write {}: {e}", path.display()))?,
        None => print!("{csv}"),
    }
    for (w, b, why) in &res.infeasible {
        eprintln!("no equilibrium at {w} m/s, {:.2} deg: {why}", b.to_degrees());
    }
    for v in &res.vertices {
        eprintln!(
            "{} m/s: peak {:.2} m at {:.3} deg (curvature {:.1} m/rad^2)",
            v.wind,
            v.z_max,
            v.beta.to_degrees(),
            v.curvature
        );
    }
    Ok(true)
}

fn estimator_selftest(samples: usize) -> bool {
    let settings = Config::default().scenario.estimator;
    let plant = SyntheticPlant::default();
    let m0 = plant.measure(0.0);
    let gains = AdaptationGains::from(&GainSet::default());
    let init = EstimatorState::centred(40.0, m0.beta, m0.z_c, gains);
    let (errors, state) = synthetic_run(&plant, init, &settings, 1.0, samples.max(1));
    let last = errors.last().copied().unwrap_or(f64::NAN);
    println!(
        "plant a = {} b = {} c = {}; estimate a = {:.4} b = {:.4} c = {:.4}",
        plant.a, plant.b, plant.c, state.a_hat, state.b_hat, state.c_hat
    );
    println!("initial e_zh = {:.4e} m, final e_zh = {last:.4e} m", errors[0]);
    let ok = last.abs() < SELFTEST_TOLERANCE;
    if !ok {
        eprintln!("error: final tracking error exceeds {SELFTEST_TOLERANCE:e} m");
    }
    ok
}

fn catenary_check(cases: usize, links: usize, seed: u64) -> Result<bool, Box<dyn std::error::Error>> {
    let p = PhysicalParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0_f64;
    println!("chord_frac,elevation_deg,analytic_N,chain_N,rel_error");
    for _ in 0..cases {
        let frac = rng.random_range(0.55..0.95);
        let elev = rng.random_range(15.0_f64..75.0).to_radians();
        let d = frac * p.l_t;
        let attach = Vector2::new(d * elev.cos(), d * elev.sin());
        let analytic = solve_tether(&p, Vector2::zeros(), attach)?.tension_magnitude;
        let chain = catenary_oracle(
            Vector2::zeros(),
            attach,
            p.l_t,
            p.tether_weight_per_length(),
            links,
            Some(p.tether_axial_stiffness),
        )?;
        let rel = ((analytic - chain) / chain).abs();
        worst = worst.max(rel);
        println!("{frac:.4},{:.3},{analytic:.6e},{chain:.6e},{rel:.3e}", elev.to_degrees());
    }
    let ok = worst < CATENARY_TOLERANCE;
    if !ok {
        eprintln!("error: worst relative error {worst:.3e} exceeds {CATENARY_TOLERANCE:e}");
    }
    Ok(ok)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn range_parsing() {
        assert_eq!(parse_range("3:0.25:20").unwrap(), (3.0, 0.25, 20.0));
        assert!(parse_range("3:20").is_err());
        assert!(parse_range("a:b:c").is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
