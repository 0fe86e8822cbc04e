use crate::error::{Error, Result};

/// Line shape of the two-photon mutual coherence as a function of delay.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoherenceShape {
    Gaussian,
}

/// Photon-pair source seen through its effective interference visibility.
#[derive(Clone, Debug, PartialEq)]
pub struct SourceModel {
    /// Nominal centre wavelength in nm. Metadata only.
    pub wavelength_nm: f64,
    /// Filter bandwidth (FWHM) in nm. Metadata only.
    pub filter_fwhm_nm: f64,
    /// Two-photon interference visibility at zero delay.
    pub visibility: f64,
    /// Delay scale of the coherence function, in mm.
    pub coherence_scale_mm: f64,
    /// Pairs per second entering the fiber.
    pub pair_rate: f64,
    pub shape: CoherenceShape,
}

impl Default for SourceModel {
    fn default() -> Self {
        Self {
            wavelength_nm: 810.0,
            filter_fwhm_nm: 1.0,
            visibility: 0.86,
            // V(0.4 mm) / V(0) = e^-4
            coherence_scale_mm: 0.2,
            pair_rate: 1.0e3,
            shape: CoherenceShape::Gaussian,
        }
    }
}

impl SourceModel {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.visibility) {
            return Err(Error::Config(format!(
                "visibility must lie in [0, 1], got {}",
                self.visibility
            )));
        }
        if !(self.coherence_scale_mm > 0.0 && self.coherence_scale_mm.is_finite()) {
            return Err(Error::Config(format!(
                "coherence scale must be positive, got {}",
                self.coherence_scale_mm
            )));
        }
        if !(self.pair_rate >= 0.0 && self.pair_rate.is_finite()) {
            return Err(Error::Config(format!(
                "pair rate must be non-negative, got {}",
                self.pair_rate
            )));
        }
        Ok(())
    }

    /// Interference weight `V(δ)` between the two coincidence pathways.
    pub fn mutual_coherence(&self, delay_mm: f64) -> f64 {
        match self.shape {
            CoherenceShape::Gaussian => {
                let x = delay_mm / self.coherence_scale_mm;
                self.visibility * (-x * x).exp()
            }
        }
    }
}

/// Free-function form of [`SourceModel::mutual_coherence`].
pub fn mutual_coherence(source: &SourceModel, delay_mm: f64) -> f64 {
    source.mutual_coherence(delay_mm)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_delay_gives_source_visibility() {
        assert_eq!(mutual_coherence(&SourceModel::default(), 0.0), 0.86);
    }

    #[test]
    fn far_delay_is_distinguishable() {
        let s = SourceModel::default();
        assert!(s.mutual_coherence(0.4) <= 0.02 * s.visibility);
        assert!((s.mutual_coherence(0.4) / s.visibility - (-4.0f64).exp()).abs() < 1e-15);
        assert!(s.mutual_coherence(50.0) < 1e-300);
    }

    #[test]
    fn even_and_monotone() {
        let s = SourceModel::default();
        let mut last = f64::INFINITY;
        for k in 0..200 {
            let d = k as f64 * 0.005;
            let v = s.mutual_coherence(d);
            assert_eq!(v, s.mutual_coherence(-d));
            assert!(v <= last);
            last = v;
        }
    }

    #[test]
    fn invalid_sources_rejected() {
        let s = SourceModel {
            visibility: 1.2,
            ..Default::default()
        };
        assert!(s.validate().is_err());
        let s = SourceModel {
            coherence_scale_mm: 0.0,
            ..Default::default()
        };
        assert!(s.validate().is_err());
        let s = SourceModel {
            pair_rate: -1.0,
            ..Default::default()
        };
        assert!(s.validate().is_err());
    }
}
