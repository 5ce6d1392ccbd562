//! Satellite dual-downlink channel.
//!
//! Each downlink is a Gaussian beam leaving an on-board telescope with waist
//! `D_T/2`, attenuated by an airmass-scaled atmosphere and truncated by the
//! ground aperture. The pair rate is the product of both arm efficiencies;
//! fidelity combines the device Werner parameters with a stray-light term
//! derived from the coincidence-to-accidental ratio.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ground_chain::{elem_werner, fidelity_from_werner};
use crate::memory::MemoryModel;
use crate::params::SystemParams;

const PLANCK: f64 = 6.626_070_15e-34;
const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Station-to-satellite geometry of one arm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinkGeometry {
    /// Slant range [m].
    pub slant_range: f64,
    /// Elevation above the local horizon [rad].
    pub elevation: f64,
}

impl LinkGeometry {
    pub fn new(slant_range: f64, elevation: f64) -> Result<Self> {
        let g = LinkGeometry { slant_range, elevation };
        g.validate()?;
        Ok(g)
    }

    pub fn from_km_deg(slant_range_km: f64, elevation_deg: f64) -> Result<Self> {
        Self::new(slant_range_km * 1e3, elevation_deg.to_radians())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.slant_range > 0.0 && self.slant_range.is_finite()) {
            return Err(Error::domain(format!(
                "slant range must be > 0, got {}",
                self.slant_range
            )));
        }
        if !(self.elevation > 0.0 && self.elevation <= FRAC_PI_2 + 1e-12) {
            return Err(Error::domain(format!(
                "elevation must lie in (0, pi/2], got {} rad",
                self.elevation
            )));
        }
        Ok(())
    }
}

/// One time sample of the space path over a pass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpacePathSample {
    /// Seconds from the start of the pass.
    pub time: f64,
    pub eta_a: f64,
    pub eta_b: f64,
    pub pair_rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StrayLightModel {
    /// Stray photons reaching each receiver [counts/s].
    pub stray_rate_per_arm: f64,
    /// Coincidence-to-accidental ratio; `f64::INFINITY` when there are no accidentals.
    pub car: f64,
    pub werner_stray: f64,
}

fn beam_waist_at_origin(params: &SystemParams) -> f64 {
    params.tx_aperture / 2.0
}

/// Rayleigh length of the transmitted beam [m].
pub fn rayleigh_length(params: &SystemParams) -> f64 {
    let w0 = beam_waist_at_origin(params);
    PI * w0 * w0 / params.wavelength
}

/// Beam radius at distance `r` [m] from the transmitter.
pub fn beam_waist_at(params: &SystemParams, r: f64) -> Result<f64> {
    if !(r >= 0.0) {
        return Err(Error::domain(format!("range must be >= 0, got {r}")));
    }
    let ratio = r / rayleigh_length(params);
    Ok(beam_waist_at_origin(params) * (1.0 + ratio * ratio).sqrt())
}

/// Fraction of the source output leaving the on-board telescope.
///
/// With the waist fixed at half the aperture the truncation exponent is
/// exactly `-2`.
pub fn transmitter_gain(params: &SystemParams) -> f64 {
    let w0 = beam_waist_at_origin(params);
    let d = params.tx_aperture;
    params.tx_internal_transmittance * (1.0 - (-(d * d) / (2.0 * w0 * w0)).exp())
}

/// Atmospheric transmittance at the given elevation [rad].
pub fn atmospheric_transmittance(params: &SystemParams, elevation: f64) -> Result<f64> {
    if !(elevation > 0.0 && elevation <= FRAC_PI_2 + 1e-12) {
        return Err(Error::domain(format!(
            "airmass model needs elevation in (0, pi/2], got {elevation} rad"
        )));
    }
    Ok(params.atm_zenith_transmittance.powf(1.0 / elevation.sin()))
}

/// Fraction of the beam collected by the ground telescope at range `r` [m].
pub fn receiver_gain(params: &SystemParams, r: f64) -> Result<f64> {
    let w = beam_waist_at(params, r)?;
    let d = params.rx_aperture;
    Ok(params.rx_internal_transmittance * (1.0 - (-(d * d) / (2.0 * w * w)).exp()))
}

/// Downlink efficiency as the product of transmitter gain, atmosphere and receiver gain.
pub fn channel_efficiency(params: &SystemParams, geom: &LinkGeometry) -> Result<f64> {
    geom.validate()?;
    Ok(transmitter_gain(params)
        * atmospheric_transmittance(params, geom.elevation)?
        * receiver_gain(params, geom.slant_range)?)
}

/// The same link budget written directly in terms of apertures and wavelength.
pub fn channel_efficiency_closed_form(params: &SystemParams, geom: &LinkGeometry) -> Result<f64> {
    geom.validate()?;
    let (dt, dr, lambda, r) = (
        params.tx_aperture,
        params.rx_aperture,
        params.wavelength,
        geom.slant_range,
    );
    let spread = 1.0 + 16.0 * lambda * lambda * r * r / (PI * PI * dt.powi(4));
    let collected = 1.0 - (-2.0 * dr * dr / (dt * dt) / spread).exp();
    Ok(params.tx_internal_transmittance
        * (1.0 - (-2.0f64).exp())
        * params.atm_zenith_transmittance.powf(1.0 / geom.elevation.sin())
        * params.rx_internal_transmittance
        * collected)
}

fn space_memory_efficiency(params: &SystemParams) -> Result<f64> {
    MemoryModel::from_params(params).mode_efficiency(params.space_memory_slot)
}

/// Pair rate delivered to both users for the given arm efficiencies.
pub fn pair_rate_from_efficiencies(params: &SystemParams, eta_a: f64, eta_b: f64) -> Result<f64> {
    let qm = space_memory_efficiency(params)?;
    Ok(params.source_rate * params.source_efficiency * eta_a * eta_b * qm * qm)
}

/// Pairs per second stored in both users' memories.
pub fn space_pair_rate(params: &SystemParams, geom_a: &LinkGeometry, geom_b: &LinkGeometry) -> Result<f64> {
    let eta_a = channel_efficiency(params, geom_a)?;
    let eta_b = channel_efficiency(params, geom_b)?;
    pair_rate_from_efficiencies(params, eta_a, eta_b)
}

/// Sky background photons per second collected by one ground receiver.
pub fn stray_photon_rate(params: &SystemParams) -> f64 {
    let bandwidth_um = params.bandwidth * 1e6;
    let aperture_area = PI * (params.rx_aperture / 2.0).powi(2);
    let half_fov = params.rx_fov / 2.0;
    let solid_angle = PI * half_fov * half_fov;
    let photon_energy = PLANCK * SPEED_OF_LIGHT / params.wavelength;
    params.rx_internal_transmittance * params.sky_radiance * bandwidth_um * aperture_area * solid_angle
        / photon_energy
}

fn car_from_efficiencies(params: &SystemParams, eta_a: f64, eta_b: f64) -> f64 {
    let emitted = params.source_rate * params.source_efficiency;
    let true_rate = emitted * eta_a * eta_b;
    let stray = stray_photon_rate(params);
    let (signal_a, signal_b) = (emitted * eta_a, emitted * eta_b);
    let accidental = (stray * signal_b + stray * signal_a + stray * stray) * params.qm_storage_window;
    if accidental == 0.0 {
        f64::INFINITY
    } else {
        true_rate / accidental
    }
}

/// Coincidence-to-accidental ratio of the two downlinks.
///
/// Accidentals are stray-signal and stray-stray coincidences inside the
/// storage window; detector dark counts are not included.
pub fn coincidence_to_accidental(params: &SystemParams, geom_a: &LinkGeometry, geom_b: &LinkGeometry) -> Result<f64> {
    let eta_a = channel_efficiency(params, geom_a)?;
    let eta_b = channel_efficiency(params, geom_b)?;
    Ok(car_from_efficiencies(params, eta_a, eta_b))
}

/// Werner parameter of the stray-light contribution, `(CAR-1)/(CAR+1)` clamped to `[0, 1]`.
pub fn stray_werner(car: f64) -> f64 {
    if car.is_infinite() && car > 0.0 {
        return 1.0;
    }
    ((car - 1.0) / (car + 1.0)).clamp(0.0, 1.0)
}

pub fn stray_light(params: &SystemParams, geom_a: &LinkGeometry, geom_b: &LinkGeometry) -> Result<StrayLightModel> {
    let car = coincidence_to_accidental(params, geom_a, geom_b)?;
    Ok(StrayLightModel {
        stray_rate_per_arm: stray_photon_rate(params),
        car,
        werner_stray: stray_werner(car),
    })
}

/// Fidelity for a given CAR: device Werner parameter of the free-space link times the stray term.
pub fn space_fidelity_from_car(params: &SystemParams, car: f64) -> Result<f64> {
    fidelity_from_werner(elem_werner(params, params.freespace_fidelity) * stray_werner(car))
}

pub fn space_fidelity(params: &SystemParams, geom_a: &LinkGeometry, geom_b: &LinkGeometry) -> Result<f64> {
    let car = coincidence_to_accidental(params, geom_a, geom_b)?;
    space_fidelity_from_car(params, car)
}
