//! Multimode heralded quantum memory.
//!
//! Each of the `N` storage modes is a timeslot. The read-out probability of
//! the mode written at slot `k` decays exponentially with `k` measured in
//! timeslots, and is constant within a slot.

use crate::error::{Error, Result};
use crate::params::SystemParams;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MemoryModel {
    write_efficiency: f64,
    characteristic_time_slots: f64,
    modes: u32,
}

impl MemoryModel {
    pub fn new(write_efficiency: f64, characteristic_time_slots: f64, modes: u32) -> Result<Self> {
        crate::error::check_probability("write_efficiency", write_efficiency)?;
        if !(characteristic_time_slots > 0.0) {
            return Err(Error::domain(format!(
                "characteristic time must be > 0 slots, got {characteristic_time_slots}"
            )));
        }
        if modes < 1 {
            return Err(Error::domain("memory needs at least one mode"));
        }
        Ok(MemoryModel {
            write_efficiency,
            characteristic_time_slots,
            modes,
        })
    }

    pub fn from_params(params: &SystemParams) -> Self {
        MemoryModel {
            write_efficiency: params.qm_write_efficiency,
            characteristic_time_slots: params.storage_time_slots(),
            modes: params.qm_modes,
        }
    }

    pub fn write_efficiency(&self) -> f64 {
        self.write_efficiency
    }

    pub fn characteristic_time_slots(&self) -> f64 {
        self.characteristic_time_slots
    }

    pub fn modes(&self) -> u32 {
        self.modes
    }

    /// Read-out probability of the mode at 1-based slot `k`.
    pub fn mode_efficiency(&self, k: u32) -> Result<f64> {
        if k < 1 || k > self.modes {
            return Err(Error::domain(format!(
                "slot index {k} outside [1, {}]",
                self.modes
            )));
        }
        Ok(self.efficiency_unchecked(k))
    }

    pub(crate) fn efficiency_unchecked(&self, k: u32) -> f64 {
        self.write_efficiency * (-(k as f64) / self.characteristic_time_slots).exp()
    }

    /// Efficiencies of slots `1..=N` in order.
    pub fn efficiencies(&self) -> impl Iterator<Item = f64> + '_ {
        (1..=self.modes).map(|k| self.efficiency_unchecked(k))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn table_values_at_slot_50() {
        let m = MemoryModel::new(0.9, 1e7, 50).unwrap();
        let e = m.mode_efficiency(50).unwrap();
        // 0.9 * exp(-5e-6)
        assert!((e - 0.899_995_500_011_25).abs() < 1e-12, "{e}");
    }

    #[test]
    fn e_folding_at_characteristic_time() {
        let m = MemoryModel::new(0.9, 40.0, 50).unwrap();
        let e = m.mode_efficiency(40).unwrap();
        assert!((e - 0.9 / std::f64::consts::E).abs() < 1e-15);
        assert!((e - 0.33110).abs() < 1e-5);
    }

    #[test]
    fn lossless_limit() {
        let m = MemoryModel::new(1.0, 1e300, 50).unwrap();
        assert!(m.efficiencies().all(|e| e == 1.0));
    }

    #[test]
    fn slot_out_of_range() {
        let m = MemoryModel::new(0.9, 10.0, 4).unwrap();
        assert!(m.mode_efficiency(0).is_err());
        assert!(m.mode_efficiency(5).is_err());
        assert!(m.mode_efficiency(4).is_ok());
    }

    #[test]
    fn from_default_params() {
        let m = MemoryModel::from_params(&SystemParams::default());
        assert_eq!(m.modes(), 50);
        assert!((m.characteristic_time_slots() - 1e7).abs() < 1e-6);
    }

    proptest! {
        #[test]
        fn strictly_decreasing_and_bounded(w in 0.01f64..=1.0, tau in 0.5f64..1e6, n in 2u32..200) {
            let m = MemoryModel::new(w, tau, n).unwrap();
            let effs: Vec<f64> = m.efficiencies().collect();
            for pair in effs.windows(2) {
                prop_assert!(pair[1] < pair[0]);
            }
            for e in effs {
                prop_assert!((0.0..=w).contains(&e));
            }
        }
    }
}
