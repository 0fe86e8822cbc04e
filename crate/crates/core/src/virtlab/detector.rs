use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NoiseMode {
    /// Counts equal expected values exactly.
    Noiseless,
    /// Counts are Poisson draws around the expected values.
    Poisson,
}

/// Single-photon counters with coincidence logic, plus the camera.
#[derive(Clone, Debug, PartialEq)]
pub struct DetectorModel {
    /// Coincidence window in seconds.
    pub coincidence_window_s: f64,
    /// Dark counts per second per detector.
    pub dark_rate: f64,
    /// Detection probability per photon.
    pub efficiency: f64,
    pub noise: NoiseMode,
    pub seed: u64,
}

impl Default for DetectorModel {
    fn default() -> Self {
        Self {
            coincidence_window_s: 2.5e-9,
            dark_rate: 0.0,
            efficiency: 1.0,
            noise: NoiseMode::Noiseless,
            seed: 0,
        }
    }
}

impl DetectorModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.coincidence_window_s > 0.0 && self.coincidence_window_s.is_finite()) {
            return Err(Error::Config(format!(
                "coincidence window must be positive, got {}",
                self.coincidence_window_s
            )));
        }
        if !(0.0..=1.0).contains(&self.efficiency) {
            return Err(Error::Config(format!(
                "efficiency must lie in [0, 1], got {}",
                self.efficiency
            )));
        }
        if !(self.dark_rate >= 0.0 && self.dark_rate.is_finite()) {
            return Err(Error::Config(format!(
                "dark rate must be non-negative, got {}",
                self.dark_rate
            )));
        }
        Ok(())
    }
}
