//! Simulation parameter set.
//!
//! All physical quantities are stored in SI base units (meters, seconds,
//! radians, hertz). The two exceptions are `fiber_attenuation`, kept in dB/km
//! as fiber is always specified that way, and `sky_radiance`, a spectral
//! radiance in W·m⁻²·sr⁻¹·μm⁻¹.
//!
//! Config files are flat TOML: one key per parameter, absent keys take the
//! reference defaults, unknown keys are rejected.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How many elementary links and swapping nodes a chain of `M` repeaters has
/// when composing its Werner parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkConvention {
    /// `M + 1` elementary links, `M` Bell-state measurements.
    #[serde(rename = "links_eq_m_plus_1")]
    LinksEqMPlus1,
    /// `M` elementary links, `M - 1` Bell-state measurements (at least one link).
    LinksEqM,
}

impl LinkConvention {
    /// Returns `(links, bsm_nodes)` for a chain with `repeaters` repeaters.
    pub fn counts(self, repeaters: u32) -> (u32, u32) {
        match self {
            LinkConvention::LinksEqMPlus1 => (repeaters + 1, repeaters),
            LinkConvention::LinksEqM => (repeaters.max(1), repeaters.saturating_sub(1)),
        }
    }
}

/// Exponent applied to the channel and memory fidelities of one elementary link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArmConvention {
    /// Channel and memory fidelity enter once per arm (squared per link).
    PerArm,
    /// Channel and memory fidelity enter once per link.
    PerLink,
}

impl ArmConvention {
    pub fn exponent(self) -> i32 {
        match self {
            ArmConvention::PerArm => 2,
            ArmConvention::PerLink => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemParams {
    /// Signal wavelength [m].
    pub wavelength: f64,
    /// Optical filter width [m].
    pub bandwidth: f64,
    /// Pair generation probability per timeslot.
    pub source_efficiency: f64,
    /// Source pump rate [pairs/s]; one timeslot is `1/source_rate`.
    pub source_rate: f64,
    pub source_fidelity: f64,
    pub qm_write_efficiency: f64,
    pub qm_fidelity: f64,
    /// Number of memory storage modes.
    pub qm_modes: u32,
    /// Characteristic storage time [s].
    pub qm_storage_time: f64,
    /// Coincidence window [s].
    pub qm_storage_window: f64,
    pub detector_efficiency: f64,
    /// Detector dark count rate [counts/s].
    pub dark_count_rate: f64,
    pub bsm_efficiency: f64,
    /// Fiber attenuation [dB/km].
    pub fiber_attenuation: f64,
    pub fiber_fidelity: f64,
    pub freespace_fidelity: f64,
    /// On-board telescope aperture [m].
    pub tx_aperture: f64,
    /// Ground telescope aperture [m].
    pub rx_aperture: f64,
    /// Ground telescope full field of view [rad].
    pub rx_fov: f64,
    /// Sky spectral radiance [W·m⁻²·sr⁻¹·μm⁻¹].
    pub sky_radiance: f64,
    pub atm_zenith_transmittance: f64,
    pub rx_internal_transmittance: f64,
    pub tx_internal_transmittance: f64,
    /// Satellite altitude [m].
    pub sat_altitude: f64,

    pub fidelity_link_convention: LinkConvention,
    pub fidelity_arm_convention: ArmConvention,
    /// Memory slot index used for the read-out efficiency of the space path.
    pub space_memory_slot: u32,
}

impl Default for SystemParams {
    fn default() -> Self {
        SystemParams {
            wavelength: 1550e-9,
            bandwidth: 1e-9,
            source_efficiency: 0.1,
            source_rate: 1e9,
            source_fidelity: 0.99,
            qm_write_efficiency: 0.9,
            qm_fidelity: 0.99,
            qm_modes: 50,
            qm_storage_time: 10e-3,
            qm_storage_window: 250e-12,
            detector_efficiency: 0.9,
            dark_count_rate: 50.0,
            bsm_efficiency: 0.5,
            fiber_attenuation: 0.2,
            fiber_fidelity: 0.99,
            freespace_fidelity: 0.99,
            tx_aperture: 0.30,
            rx_aperture: 1.00,
            rx_fov: 0.2e-6,
            sky_radiance: 0.3,
            atm_zenith_transmittance: 0.5,
            rx_internal_transmittance: 0.3,
            tx_internal_transmittance: 0.8,
            sat_altitude: 600e3,
            fidelity_link_convention: LinkConvention::LinksEqM,
            fidelity_arm_convention: ArmConvention::PerArm,
            space_memory_slot: 1,
        }
    }
}

/// Unit label for each key, used by `params show`.
const UNITS: &[(&str, &str)] = &[
    ("wavelength", "m"),
    ("bandwidth", "m"),
    ("source_efficiency", "-"),
    ("source_rate", "pairs/s"),
    ("source_fidelity", "-"),
    ("qm_write_efficiency", "-"),
    ("qm_fidelity", "-"),
    ("qm_modes", "modes"),
    ("qm_storage_time", "s"),
    ("qm_storage_window", "s"),
    ("detector_efficiency", "-"),
    ("dark_count_rate", "counts/s"),
    ("bsm_efficiency", "-"),
    ("fiber_attenuation", "dB/km"),
    ("fiber_fidelity", "-"),
    ("freespace_fidelity", "-"),
    ("tx_aperture", "m"),
    ("rx_aperture", "m"),
    ("rx_fov", "rad"),
    ("sky_radiance", "W/m^2/sr/um"),
    ("atm_zenith_transmittance", "-"),
    ("rx_internal_transmittance", "-"),
    ("tx_internal_transmittance", "-"),
    ("sat_altitude", "m"),
    ("fidelity_link_convention", ""),
    ("fidelity_arm_convention", ""),
    ("space_memory_slot", "slot"),
];

fn invalid(field: &'static str, bound: &'static str, value: impl ToString) -> Error {
    Error::Validation {
        field,
        bound,
        value: value.to_string(),
    }
}

impl SystemParams {
    /// Checks every field against its validity range.
    pub fn validate(&self) -> Result<()> {
        let probabilities = [
            ("source_efficiency", self.source_efficiency),
            ("source_fidelity", self.source_fidelity),
            ("qm_write_efficiency", self.qm_write_efficiency),
            ("qm_fidelity", self.qm_fidelity),
            ("detector_efficiency", self.detector_efficiency),
            ("bsm_efficiency", self.bsm_efficiency),
            ("fiber_fidelity", self.fiber_fidelity),
            ("freespace_fidelity", self.freespace_fidelity),
            ("atm_zenith_transmittance", self.atm_zenith_transmittance),
            ("rx_internal_transmittance", self.rx_internal_transmittance),
            ("tx_internal_transmittance", self.tx_internal_transmittance),
        ];
        for (field, p) in probabilities {
            if !(0.0..=1.0).contains(&p) {
                return Err(invalid(field, "in [0, 1]", p));
            }
        }
        if self.bsm_efficiency > 0.5 {
            return Err(invalid("bsm_efficiency", "<= 0.5", self.bsm_efficiency));
        }

        let positive = [
            ("wavelength", self.wavelength),
            ("bandwidth", self.bandwidth),
            ("source_rate", self.source_rate),
            ("qm_storage_time", self.qm_storage_time),
            ("qm_storage_window", self.qm_storage_window),
            ("fiber_attenuation", self.fiber_attenuation),
            ("tx_aperture", self.tx_aperture),
            ("rx_aperture", self.rx_aperture),
            ("rx_fov", self.rx_fov),
            ("sat_altitude", self.sat_altitude),
        ];
        for (field, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(field, "> 0 and finite", v));
            }
        }

        let non_negative = [
            ("dark_count_rate", self.dark_count_rate),
            ("sky_radiance", self.sky_radiance),
        ];
        for (field, v) in non_negative {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(invalid(field, ">= 0 and finite", v));
            }
        }

        if self.qm_modes < 1 {
            return Err(invalid("qm_modes", ">= 1", self.qm_modes));
        }
        if self.storage_time_slots() < 1.0 {
            return Err(invalid(
                "qm_storage_time",
                "at least one timeslot (qm_storage_time * source_rate >= 1)",
                self.qm_storage_time,
            ));
        }
        if self.space_memory_slot < 1 || self.space_memory_slot > self.qm_modes {
            return Err(invalid(
                "space_memory_slot",
                "in [1, qm_modes]",
                self.space_memory_slot,
            ));
        }
        Ok(())
    }

    /// Characteristic storage time expressed in timeslots.
    pub fn storage_time_slots(&self) -> f64 {
        self.qm_storage_time * self.source_rate
    }

    /// Parses config text, applies `key=value` overrides and validates.
    pub fn from_toml_str(text: &str, overrides: &[(String, String)]) -> Result<Self> {
        let mut table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::Config(one_line(&e.to_string())))?;
        for (key, raw) in overrides {
            table.insert(key.clone(), parse_override_value(key, raw)?);
        }
        let params: SystemParams = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(one_line(&e.to_string())))?;
        params.validate()?;
        Ok(params)
    }

    /// Serializes to config text that [`SystemParams::from_toml_str`] reads back exactly.
    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Serialize(e.to_string()))
    }

    /// Human-readable listing of the effective parameter set with units.
    pub fn show(&self) -> Result<String> {
        let value = toml::Value::try_from(self).map_err(|e| Error::Serialize(e.to_string()))?;
        let table = value.as_table().expect("struct serializes to a table");
        let mut out = String::new();
        for (key, unit) in UNITS {
            let v = &table[*key];
            let _ = writeln!(out, "{key:<28} {v:<22} {unit}");
        }
        Ok(out)
    }
}

/// Reads parameters from a config file.
///
/// An empty file yields the reference defaults.
pub fn load_params(path: &Path, overrides: &[(String, String)]) -> Result<SystemParams> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    SystemParams::from_toml_str(&text, overrides)
}

/// Duration of one timeslot, `1 / source_rate` [s].
pub fn timeslot_duration(params: &SystemParams) -> f64 {
    1.0 / params.source_rate
}

/// Splits a `key=value` CLI override.
pub fn parse_override(arg: &str) -> Result<(String, String)> {
    match arg.split_once('=') {
        Some((k, v)) if !k.trim().is_empty() => Ok((k.trim().to_string(), v.trim().to_string())),
        _ => Err(Error::Config(format!("override `{arg}` is not of the form key=value"))),
    }
}

fn parse_override_value(key: &str, raw: &str) -> Result<toml::Value> {
    // Bare words (enum variants) are accepted without quotes.
    let doc = format!("v = {raw}");
    match doc.parse::<toml::Table>() {
        Ok(mut t) => Ok(t.remove("v").expect("key just inserted")),
        Err(_) if raw.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') => {
            Ok(toml::Value::String(raw.to_string()))
        }
        Err(e) => Err(Error::Config(format!(
            "override `{key}`: {}",
            one_line(&e.to_string())
        ))),
    }
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}
