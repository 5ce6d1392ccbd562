//! Circular-orbit propagation over a rotating spherical Earth, topocentric
//! geometry, and joint-visibility pass search for two ground stations.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use nalgebra::Vector3;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::SystemParams;
use crate::space_link::{self, LinkGeometry};

/// Earth gravitational parameter [m³/s²].
pub const MU_EARTH: f64 = 3.986_004_418e14;
/// Earth radius, spherical model [m].
pub const EARTH_RADIUS: f64 = 6_378_137.0;
/// Earth rotation rate [rad/s].
pub const EARTH_ROTATION_RATE: f64 = 7.292_115_9e-5;

pub const DEFAULT_MIN_ELEVATION_DEG: f64 = 20.0;
pub const DEFAULT_STEP_S: f64 = 1.0;

fn normalize_angle(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OrbitConfig {
    /// [m]
    pub altitude: f64,
    /// [rad]
    pub inclination: f64,
    /// Right ascension of the ascending node [rad].
    pub raan: f64,
    /// Argument of latitude at t = 0 [rad].
    pub phase_at_epoch: f64,
    /// Greenwich sidereal angle at t = 0 [rad].
    pub epoch_gst: f64,
}

impl OrbitConfig {
    pub fn new(altitude: f64, inclination: f64, raan: f64, phase_at_epoch: f64, epoch_gst: f64) -> Result<Self> {
        if !(altitude > 0.0 && altitude.is_finite()) {
            return Err(Error::domain(format!("altitude must be > 0, got {altitude}")));
        }
        if !(0.0..=PI).contains(&inclination) {
            return Err(Error::domain(format!("inclination must lie in [0, pi], got {inclination}")));
        }
        Ok(OrbitConfig {
            altitude,
            inclination,
            raan: normalize_angle(raan),
            phase_at_epoch: normalize_angle(phase_at_epoch),
            epoch_gst: normalize_angle(epoch_gst),
        })
    }

    pub fn semi_major_axis(&self) -> f64 {
        EARTH_RADIUS + self.altitude
    }

    /// Mean motion [rad/s].
    pub fn mean_motion(&self) -> f64 {
        (MU_EARTH / self.semi_major_axis().powi(3)).sqrt()
    }

    /// Orbital period [s].
    pub fn period(&self) -> f64 {
        TAU / self.mean_motion()
    }

    fn with_phase(self, phase_at_epoch: f64, epoch_gst: f64) -> Self {
        OrbitConfig {
            phase_at_epoch: normalize_angle(phase_at_epoch),
            epoch_gst: normalize_angle(epoch_gst),
            ..self
        }
    }

    /// Inertial position at time `t` [s].
    fn inertial(&self, t: f64) -> Vector3<f64> {
        let a = self.semi_major_axis();
        let u = self.phase_at_epoch + self.mean_motion() * t;
        let (su, cu) = u.sin_cos();
        let (so, co) = self.raan.sin_cos();
        let (si, ci) = self.inclination.sin_cos();
        Vector3::new(
            a * (co * cu - so * su * ci),
            a * (so * cu + co * su * ci),
            a * su * si,
        )
    }
}

/// Rotates an inertial vector into the Earth-fixed frame at sidereal angle `theta`.
fn to_earth_fixed(v: &Vector3<f64>, theta: f64) -> Vector3<f64> {
    let (s, c) = theta.sin_cos();
    Vector3::new(c * v.x + s * v.y, -s * v.x + c * v.y, v.z)
}

/// Earth-fixed satellite position [m] at time `t` [s].
pub fn propagate(orbit: &OrbitConfig, t: f64) -> Vector3<f64> {
    let theta = orbit.epoch_gst + EARTH_ROTATION_RATE * t;
    to_earth_fixed(&orbit.inertial(t), theta)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GroundStationSpec {
    /// Geocentric latitude [rad].
    pub latitude: f64,
    /// [rad], east positive.
    pub longitude: f64,
    /// [rad]
    pub min_elevation: f64,
}

impl GroundStationSpec {
    pub fn new(latitude: f64, longitude: f64, min_elevation: f64) -> Result<Self> {
        if !(latitude.abs() <= FRAC_PI_2) {
            return Err(Error::domain(format!("latitude out of range: {latitude}")));
        }
        if !(longitude > -PI && longitude <= PI) {
            return Err(Error::domain(format!("longitude must lie in (-pi, pi], got {longitude}")));
        }
        if !(0.0..FRAC_PI_2).contains(&min_elevation) {
            return Err(Error::domain(format!("min elevation must lie in [0, pi/2), got {min_elevation}")));
        }
        Ok(GroundStationSpec {
            latitude,
            longitude,
            min_elevation,
        })
    }

    pub fn from_degrees(lat_deg: f64, lon_deg: f64, min_elevation_deg: f64) -> Result<Self> {
        Self::new(lat_deg.to_radians(), lon_deg.to_radians(), min_elevation_deg.to_radians())
    }

    pub fn with_min_elevation(self, min_elevation: f64) -> Result<Self> {
        Self::new(self.latitude, self.longitude, min_elevation)
    }

    fn unit(&self) -> Vector3<f64> {
        let (sl, cl) = self.latitude.sin_cos();
        let (so, co) = self.longitude.sin_cos();
        Vector3::new(cl * co, cl * so, sl)
    }

    /// Earth-fixed position [m].
    pub fn position(&self) -> Vector3<f64> {
        self.unit() * EARTH_RADIUS
    }

    /// Great-circle distance to another station [m].
    pub fn great_circle_distance(&self, other: &GroundStationSpec) -> f64 {
        let c = self.unit().dot(&other.unit()).clamp(-1.0, 1.0);
        EARTH_RADIUS * c.acos()
    }
}

/// Elevation and slant range of a satellite seen from a station.
///
/// The elevation is negative when the satellite is below the horizon, in
/// which case the result is not a valid link geometry.
pub fn elevation_and_range(sat_pos: &Vector3<f64>, station: &GroundStationSpec) -> LinkGeometry {
    let up = station.unit();
    let rho = sat_pos - up * EARTH_RADIUS;
    let range = rho.norm();
    let elevation = (rho.dot(&up) / range).clamp(-1.0, 1.0).asin();
    LinkGeometry {
        slant_range: range,
        elevation,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PassSample {
    pub time: f64,
    pub a: LinkGeometry,
    pub b: LinkGeometry,
}

/// One contiguous interval of joint visibility.
#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct PassGeometry {
    /// `(t_start, t_end)` [s], `None` for an empty pass.
    pub window: Option<(f64, f64)>,
    pub step: f64,
    pub samples: Vec<PassSample>,
}

impl PassGeometry {
    pub fn empty(step: f64) -> Self {
        PassGeometry {
            window: None,
            step,
            samples: Vec::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.window.map_or(0.0, |(s, e)| e - s)
    }

    /// Index of the sample with the highest lower elevation of the two arms.
    pub fn culmination(&self) -> Option<usize> {
        self.samples
            .iter()
            .enumerate()
            .max_by(|(_, x), (_, y)| {
                let ex = x.a.elevation.min(x.b.elevation);
                let ey = y.a.elevation.min(y.b.elevation);
                ex.total_cmp(&ey)
            })
            .map(|(i, _)| i)
    }
}

fn visible(g: &LinkGeometry, station: &GroundStationSpec) -> bool {
    g.elevation >= station.min_elevation && g.elevation > 0.0
}

/// Splits a time-ordered series of satellite positions into joint passes.
fn collect_passes(
    positions: impl Iterator<Item = (f64, Vector3<f64>)>,
    a: &GroundStationSpec,
    b: &GroundStationSpec,
    step: f64,
) -> Vec<PassGeometry> {
    let mut passes = Vec::new();
    let mut current: Vec<PassSample> = Vec::new();
    let mut close = |current: &mut Vec<PassSample>| {
        if let (Some(first), Some(last)) = (current.first(), current.last()) {
            passes.push(PassGeometry {
                window: Some((first.time, last.time)),
                step,
                samples: std::mem::take(current),
            });
        }
    };
    for (t, sat) in positions {
        let ga = elevation_and_range(&sat, a);
        let gb = elevation_and_range(&sat, b);
        if visible(&ga, a) && visible(&gb, b) {
            current.push(PassSample { time: t, a: ga, b: gb });
        } else {
            close(&mut current);
        }
    }
    close(&mut current);
    passes
}

fn sample_times(horizon: f64, step: f64) -> impl Iterator<Item = f64> {
    let n = (horizon / step + 1e-9).floor() as usize;
    (0..=n).map(move |i| i as f64 * step)
}

fn check_step(horizon: f64, step: f64) -> Result<()> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::domain(format!("sampling step must be > 0, got {step}")));
    }
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(Error::domain(format!("search horizon must be >= 0, got {horizon}")));
    }
    Ok(())
}

/// Every joint-visibility window in `[0, horizon]`, sampled at `step`.
pub fn find_joint_passes(
    orbit: &OrbitConfig,
    a: &GroundStationSpec,
    b: &GroundStationSpec,
    horizon: f64,
    step: f64,
) -> Result<Vec<PassGeometry>> {
    check_step(horizon, step)?;
    let positions = sample_times(horizon, step).map(|t| (t, propagate(orbit, t)));
    Ok(collect_passes(positions, a, b, step))
}

/// Trapezoidal integral of the pair rate over a pass [pairs].
pub fn integrated_pair_count(params: &SystemParams, pass: &PassGeometry) -> Result<f64> {
    let rates = pass
        .samples
        .iter()
        .map(|s| space_link::space_pair_rate(params, &s.a, &s.b))
        .collect::<Result<Vec<_>>>()?;
    Ok(trapezoid(&rates, pass.step))
}

pub(crate) fn trapezoid(values: &[f64], step: f64) -> f64 {
    values.windows(2).map(|w| 0.5 * (w[0] + w[1]) * step).sum()
}

/// The joint pass within `[0, horizon]` with the largest integrated pair count.
///
/// Ranking by integrated pair count is the same as ranking by the integral
/// of the arm-efficiency product, since the two differ by a constant factor.
/// Returns an empty pass when the stations are never jointly visible.
pub fn find_joint_pass(
    params: &SystemParams,
    orbit: &OrbitConfig,
    a: &GroundStationSpec,
    b: &GroundStationSpec,
    horizon: f64,
    step: f64,
) -> Result<PassGeometry> {
    best_pass(params, find_joint_passes(orbit, a, b, horizon, step)?, step).map(|(p, _)| p)
}

fn best_pass(params: &SystemParams, passes: Vec<PassGeometry>, step: f64) -> Result<(PassGeometry, f64)> {
    let mut best = (PassGeometry::empty(step), 0.0);
    for pass in passes {
        let score = integrated_pair_count(params, &pass)?;
        if best.0.is_empty() || score > best.1 {
            best = (pass, score);
        }
    }
    Ok(best)
}

/// Resolution of the phase/epoch grid search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TuneGrid {
    /// Number of argument-of-latitude values over one revolution.
    pub phase_steps: usize,
    /// Number of sidereal-angle values over one revolution.
    pub gst_steps: usize,
    /// Time step used to score candidate passes [s].
    pub score_step: f64,
}

impl Default for TuneGrid {
    fn default() -> Self {
        TuneGrid {
            phase_steps: 8,
            gst_steps: 720,
            score_step: 5.0,
        }
    }
}

impl TuneGrid {
    /// The same search with both angular resolutions doubled.
    pub fn refined(&self) -> Self {
        TuneGrid {
            phase_steps: self.phase_steps * 2,
            gst_steps: self.gst_steps * 2,
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TunedOrbit {
    pub orbit: OrbitConfig,
    /// Integrated pair count of the best pass at the scoring step [pairs].
    pub score: f64,
}

/// Chooses the orbit phase and epoch sidereal angle that maximize the
/// pass-integrated pair count within one orbital period.
///
/// Grid points are `j * 2π / steps`, so refining the grid never lowers the score.
pub fn tune_phase(
    params: &SystemParams,
    orbit: &OrbitConfig,
    a: &GroundStationSpec,
    b: &GroundStationSpec,
    grid: &TuneGrid,
) -> Result<TunedOrbit> {
    if grid.phase_steps == 0 || grid.gst_steps == 0 {
        return Err(Error::domain("tuning grid needs at least one point per axis"));
    }
    let horizon = orbit.period();
    check_step(horizon, grid.score_step)?;
    let times: Vec<f64> = sample_times(horizon, grid.score_step).collect();
    let rotation: Vec<(f64, f64)> = times.iter().map(|t| (EARTH_ROTATION_RATE * t).sin_cos()).collect();

    let mut best: Option<TunedOrbit> = None;
    for i in 0..grid.phase_steps {
        let phase = TAU * i as f64 / grid.phase_steps as f64;
        let candidate = orbit.with_phase(phase, 0.0);
        let inertial: Vec<Vector3<f64>> = times.iter().map(|&t| candidate.inertial(t)).collect();
        for j in 0..grid.gst_steps {
            let gst = TAU * j as f64 / grid.gst_steps as f64;
            let (sg, cg) = gst.sin_cos();
            let positions = times.iter().zip(&inertial).zip(&rotation).map(|((&t, v), &(sw, cw))| {
                // sin/cos of gst + ωt by angle addition
                let s = sg * cw + cg * sw;
                let c = cg * cw - sg * sw;
                (t, Vector3::new(c * v.x + s * v.y, -s * v.x + c * v.y, v.z))
            });
            let passes = collect_passes(positions, a, b, grid.score_step);
            let (_, score) = best_pass(params, passes, grid.score_step)?;
            if best.is_none_or(|b| score > b.score) {
                best = Some(TunedOrbit {
                    orbit: orbit.with_phase(phase, gst),
                    score,
                });
            }
        }
    }
    Ok(best.expect("grid has at least one point"))
}
