//! Station/orbit scenarios and the satellite-versus-ground comparison.
//!
//! Ground methods accrue pairs over exactly the satellite's joint-pass
//! duration, so every method in a [`ComparisonReport`] is measured over the
//! same wall-clock interval.

use std::f64::consts::FRAC_PI_2;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ground_chain::{self, ChainSpec, GroundPathResult, RepeaterOptimum, DEFAULT_MAX_REPEATERS};
use crate::orbit::{self, GroundStationSpec, OrbitConfig, PassGeometry, TuneGrid, DEFAULT_MIN_ELEVATION_DEG};
use crate::params::SystemParams;
use crate::space_link::{self, SpacePathSample};

pub const DEFAULT_FIDELITY_MIN: f64 = 0.8;

pub const COMMON_INTERVAL_NOTE: &str =
    "ground methods accrue pairs over the satellite joint-pass duration";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioSpec {
    pub name: String,
    pub station_a_name: String,
    pub station_b_name: String,
    pub station_a: GroundStationSpec,
    pub station_b: GroundStationSpec,
    pub orbit: OrbitConfig,
    /// User-to-user fiber distance [m].
    pub ground_distance: f64,
}

impl ScenarioSpec {
    /// Checks that the station coordinates agree with the fiber distance to within 15%.
    pub fn validate(&self) -> Result<()> {
        if !(self.ground_distance > 0.0) {
            return Err(Error::domain(format!(
                "scenario `{}`: ground distance must be > 0",
                self.name
            )));
        }
        let gc = self.station_a.great_circle_distance(&self.station_b);
        if (gc - self.ground_distance).abs() > 0.15 * self.ground_distance {
            return Err(Error::domain(format!(
                "scenario `{}`: station separation {:.1} km disagrees with ground distance {:.1} km",
                self.name,
                gc / 1e3,
                self.ground_distance / 1e3
            )));
        }
        Ok(())
    }

    pub fn with_min_elevation(&self, min_elevation: f64) -> Result<Self> {
        Ok(ScenarioSpec {
            station_a: self.station_a.with_min_elevation(min_elevation)?,
            station_b: self.station_b.with_min_elevation(min_elevation)?,
            ..self.clone()
        })
    }
}

/// Degrees-minutes-seconds to decimal degrees.
fn dms(deg: f64, min: f64, sec: f64) -> f64 {
    deg.signum() * (deg.abs() + min / 60.0 + sec / 3600.0)
}

fn station(lat_deg: f64, lon_deg: f64) -> GroundStationSpec {
    GroundStationSpec::from_degrees(lat_deg, lon_deg, DEFAULT_MIN_ELEVATION_DEG)
        .expect("built-in coordinates are valid")
}

fn polar_orbit(raan_deg: f64) -> OrbitConfig {
    OrbitConfig::new(600e3, FRAC_PI_2, raan_deg.to_radians(), 0.0, 0.0).expect("built-in orbit is valid")
}

/// The short, medium and long reference scenarios.
pub fn builtin_scenarios() -> Vec<ScenarioSpec> {
    let calern = station(dms(43.0, 45.0, 13.2), dms(6.0, 55.0, 22.7));
    let haute_provence = station(dms(43.0, 55.0, 51.0), dms(5.0, 42.0, 48.0));
    let toulouse = station(dms(43.0, 36.0, 15.3), dms(1.0, 26.0, 37.2));
    let bordeaux = station(dms(44.0, 50.0, 16.04), -dms(0.0, 34.0, 45.048));
    let padova = station(dms(45.0, 24.0, 28.69), dms(11.0, 53.0, 9.10));
    vec![
        ScenarioSpec {
            name: "short".into(),
            station_a_name: "Calern".into(),
            station_b_name: "Haute-Provence".into(),
            station_a: calern,
            station_b: haute_provence,
            orbit: polar_orbit(134.4),
            ground_distance: 90e3,
        },
        ScenarioSpec {
            name: "medium".into(),
            station_a_name: "Calern".into(),
            station_b_name: "Toulouse".into(),
            station_a: calern,
            station_b: toulouse,
            orbit: polar_orbit(132.5),
            ground_distance: 440e3,
        },
        ScenarioSpec {
            name: "long".into(),
            station_a_name: "Bordeaux".into(),
            station_b_name: "Padova".into(),
            station_a: bordeaux,
            station_b: padova,
            orbit: polar_orbit(134.0),
            ground_distance: 980e3,
        },
    ]
}

pub fn builtin_scenario(name: &str) -> Result<ScenarioSpec> {
    builtin_scenarios()
        .into_iter()
        .find(|s| s.name == name)
        .ok_or_else(|| Error::domain(format!("unknown scenario `{name}` (expected short, medium or long)")))
}

/// Pass sampling and orbit tuning settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PassOptions {
    /// Sampling step of the reported pass [s].
    pub step: f64,
    pub tune: TuneGrid,
}

impl Default for PassOptions {
    fn default() -> Self {
        PassOptions {
            step: orbit::DEFAULT_STEP_S,
            tune: TuneGrid::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpacePathRun {
    pub orbit: OrbitConfig,
    pub pass: PassGeometry,
    pub samples: Vec<SpacePathSample>,
    /// Running trapezoidal integral of the pair rate, aligned with `samples`.
    pub cumulative_pairs: Vec<f64>,
    pub integrated_pairs: f64,
    pub peak_rate: f64,
    /// Fidelity at culmination; `None` for an empty pass.
    pub fidelity: Option<f64>,
}

impl SpacePathRun {
    pub fn duration(&self) -> f64 {
        self.pass.duration()
    }
}

/// Tunes the orbit phase for the station pair and finds its best joint pass.
pub fn tuned_pass(params: &SystemParams, spec: &ScenarioSpec, opts: &PassOptions) -> Result<(OrbitConfig, PassGeometry)> {
    let tuned = orbit::tune_phase(params, &spec.orbit, &spec.station_a, &spec.station_b, &opts.tune)?;
    let pass = orbit::find_joint_pass(
        params,
        &tuned.orbit,
        &spec.station_a,
        &spec.station_b,
        tuned.orbit.period(),
        opts.step,
    )?;
    Ok((tuned.orbit, pass))
}

/// Pair-rate time series over a pass, its running integral and the culmination fidelity.
pub fn space_path_over(params: &SystemParams, orbit: OrbitConfig, pass: PassGeometry) -> Result<SpacePathRun> {
    let t0 = pass.window.map_or(0.0, |(s, _)| s);
    let mut samples = Vec::with_capacity(pass.samples.len());
    for s in &pass.samples {
        let eta_a = space_link::channel_efficiency(params, &s.a)?;
        let eta_b = space_link::channel_efficiency(params, &s.b)?;
        samples.push(SpacePathSample {
            time: s.time - t0,
            eta_a,
            eta_b,
            pair_rate: space_link::pair_rate_from_efficiencies(params, eta_a, eta_b)?,
        });
    }
    let mut cumulative_pairs = Vec::with_capacity(samples.len());
    let mut total = 0.0;
    for (i, s) in samples.iter().enumerate() {
        if i > 0 {
            total += 0.5 * (samples[i - 1].pair_rate + s.pair_rate) * pass.step;
        }
        cumulative_pairs.push(total);
    }
    let peak_rate = samples.iter().map(|s| s.pair_rate).fold(0.0, f64::max);
    let fidelity = match pass.culmination() {
        Some(i) => Some(space_link::space_fidelity(params, &pass.samples[i].a, &pass.samples[i].b)?),
        None => None,
    };
    Ok(SpacePathRun {
        orbit,
        pass,
        samples,
        cumulative_pairs,
        integrated_pairs: total,
        peak_rate,
        fidelity,
    })
}

pub fn run_space_path(params: &SystemParams, spec: &ScenarioSpec, opts: &PassOptions) -> Result<SpacePathRun> {
    let (orbit, pass) = tuned_pass(params, spec, opts)?;
    space_path_over(params, orbit, pass)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GroundMethodResult {
    pub result: GroundPathResult,
    /// Pairs delivered over the comparison interval.
    pub pairs: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum OptimizedGround {
    Feasible {
        repeaters: u32,
        result: GroundPathResult,
        pairs: f64,
    },
    Infeasible,
}

impl OptimizedGround {
    pub fn pairs(&self) -> f64 {
        match self {
            OptimizedGround::Feasible { pairs, .. } => *pairs,
            OptimizedGround::Infeasible => 0.0,
        }
    }

    pub fn repeaters(&self) -> Option<u32> {
        match self {
            OptimizedGround::Feasible { repeaters, .. } => Some(*repeaters),
            OptimizedGround::Infeasible => None,
        }
    }

    pub fn result(&self) -> Option<&GroundPathResult> {
        match self {
            OptimizedGround::Feasible { result, .. } => Some(result),
            OptimizedGround::Infeasible => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GroundMethods {
    pub no_repeater: GroundMethodResult,
    pub optimized: OptimizedGround,
}

/// The single-source chain and the fidelity-constrained optimal chain.
pub fn run_ground_methods(
    params: &SystemParams,
    spec: &ScenarioSpec,
    fidelity_min: f64,
    pass_duration: f64,
) -> Result<GroundMethods> {
    if !(pass_duration > 0.0) {
        return Err(Error::domain(format!("pass duration must be > 0, got {pass_duration}")));
    }
    ground_methods_over(params, spec.ground_distance, fidelity_min, pass_duration)
}

fn ground_methods_over(params: &SystemParams, distance: f64, fidelity_min: f64, interval: f64) -> Result<GroundMethods> {
    let single = ground_chain::evaluate_ground_path(params, &ChainSpec::new(distance, 0)?)?;
    let optimized = match ground_chain::optimize_repeaters(params, distance, fidelity_min, DEFAULT_MAX_REPEATERS)? {
        RepeaterOptimum::Feasible { repeaters, result } => OptimizedGround::Feasible {
            repeaters,
            result,
            pairs: result.pair_rate * interval,
        },
        RepeaterOptimum::Infeasible => OptimizedGround::Infeasible,
    };
    Ok(GroundMethods {
        no_repeater: GroundMethodResult {
            result: single,
            pairs: single.pair_rate * interval,
        },
        optimized,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SatelliteSummary {
    pub peak_rate: f64,
    pub integrated_pairs: f64,
    pub fidelity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub scenario: String,
    pub note: &'static str,
    /// `ok`, or `empty_pass` when the stations are never jointly visible.
    pub status: &'static str,
    pub fidelity_min: f64,
    pub pass_duration: f64,
    pub satellite: SatelliteSummary,
    pub ground_no_repeater: GroundMethodResult,
    pub ground_optimized: OptimizedGround,
}

impl ComparisonReport {
    /// Pairs of the better ground method over the comparison interval.
    pub fn best_ground_pairs(&self) -> f64 {
        self.ground_optimized.pairs().max(self.ground_no_repeater.pairs)
    }
}

/// Comparison report plus the satellite time series behind it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub report: ComparisonReport,
    pub space: SpacePathRun,
}

pub fn compare(params: &SystemParams, spec: &ScenarioSpec, fidelity_min: f64, opts: &PassOptions) -> Result<Comparison> {
    let space = run_space_path(params, spec, opts)?;
    let duration = space.duration();
    let ground = ground_methods_over(params, spec.ground_distance, fidelity_min, duration)?;
    let report = ComparisonReport {
        scenario: spec.name.clone(),
        note: COMMON_INTERVAL_NOTE,
        status: if space.pass.is_empty() { "empty_pass" } else { "ok" },
        fidelity_min,
        pass_duration: duration,
        satellite: SatelliteSummary {
            peak_rate: space.peak_rate,
            integrated_pairs: space.integrated_pairs,
            fidelity: space.fidelity,
        },
        ground_no_repeater: ground.no_repeater,
        ground_optimized: ground.optimized,
    };
    Ok(Comparison { report, space })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Satellite,
    Ground,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossoverRow {
    /// [m]
    pub distance: f64,
    pub best: Method,
    pub satellite_pairs: f64,
    pub ground_pairs: f64,
    /// Satellite pairs over best-ground pairs; infinite when the ground delivers nothing.
    pub ratio: f64,
    pub optimal_repeaters: Option<u32>,
    pub pass_duration: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossoverTable {
    pub rows: Vec<CrossoverRow>,
    /// Consecutive sweep distances [m] between which the winner first changes from ground to satellite.
    pub bracket: Option<(f64, f64)>,
}

/// A symmetric station pair at the given great-circle separation [m],
/// centered on the short scenario's latitude band.
pub fn synthetic_scenario(distance: f64) -> Result<ScenarioSpec> {
    if !(distance > 0.0) {
        return Err(Error::domain(format!("sweep distance must be > 0, got {distance}")));
    }
    let short = builtin_scenario("short")?;
    let lat = 0.5 * (short.station_a.latitude + short.station_b.latitude);
    let lon = 0.5 * (short.station_a.longitude + short.station_b.longitude);
    // Same-latitude points: cos(d/R) = sin²φ + cos²φ·cos Δλ
    let (s, c) = lat.sin_cos();
    let cos_dlon = ((distance / orbit::EARTH_RADIUS).cos() - s * s) / (c * c);
    if !(-1.0..=1.0).contains(&cos_dlon) {
        return Err(Error::domain(format!(
            "separation of {:.0} km is not reachable along latitude {:.2} deg",
            distance / 1e3,
            lat.to_degrees()
        )));
    }
    let half = 0.5 * cos_dlon.acos();
    let min_el = short.station_a.min_elevation;
    Ok(ScenarioSpec {
        name: format!("sweep-{:.0}km", distance / 1e3),
        station_a_name: "west".into(),
        station_b_name: "east".into(),
        station_a: GroundStationSpec::new(lat, lon - half, min_el)?,
        station_b: GroundStationSpec::new(lat, lon + half, min_el)?,
        orbit: short.orbit,
        ground_distance: distance,
    })
}

/// Compares satellite and ground delivery at each distance [m] and brackets the crossover.
pub fn crossover_sweep(params: &SystemParams, distances: &[f64], fidelity_min: f64, opts: &PassOptions) -> Result<CrossoverTable> {
    if distances.is_empty() {
        return Err(Error::domain("sweep needs at least one distance"));
    }
    if distances.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::domain("sweep distances must be strictly increasing"));
    }
    let mut rows = Vec::with_capacity(distances.len());
    for &d in distances {
        let spec = synthetic_scenario(d)?;
        let report = compare(params, &spec, fidelity_min, opts)?.report;
        let satellite_pairs = report.satellite.integrated_pairs;
        let ground_pairs = report.best_ground_pairs();
        rows.push(CrossoverRow {
            distance: d,
            best: if satellite_pairs > ground_pairs {
                Method::Satellite
            } else {
                Method::Ground
            },
            satellite_pairs,
            ground_pairs,
            ratio: if ground_pairs > 0.0 {
                satellite_pairs / ground_pairs
            } else {
                f64::INFINITY
            },
            optimal_repeaters: report.ground_optimized.repeaters(),
            pass_duration: report.pass_duration,
        });
    }
    let bracket = rows
        .windows(2)
        .find(|w| w[0].best == Method::Ground && w[1].best == Method::Satellite)
        .map(|w| (w[0].distance, w[1].distance));
    Ok(CrossoverTable { rows, bracket })
}
