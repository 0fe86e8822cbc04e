//! The virtual experiment.
//!
//! A [`LabState`] hides a ground-truth fiber and exposes it only through the
//! instruments of the real setup: two phase-only SLM halves (one per photon),
//! a delay stage, an intensity camera, two movable single-photon counters
//! with coincidence logic, and a classical probe laser for transmission
//! matrix measurements.

mod detector;
mod fiber;
mod source;

pub use detector::{DetectorModel, NoiseMode};
pub use fiber::{FiberConfig, GroundTruthFiber, OutputGrid, OutputPosition};
pub use source::{mutual_coherence, CoherenceShape, SourceModel};

use num_complex::Complex64;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Poisson};

use crate::control::SlmPattern;
use crate::error::{Error, Result};
use crate::numcore::{norm, stream_rng, ComplexVector};
use crate::tmrecon::{Half, TransmissionMatrix};
use crate::ttm::{coincidence_rate, PairAmplitudes};

/// Photons contributing to a camera image.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Photons {
    H,
    V,
    Both,
}

/// Collection fiber / counter.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Arm {
    F1,
    F2,
}

/// Camera frame over the output grid, row-major. Cells past `n_out` are 0.
#[derive(Clone, Debug, PartialEq)]
pub struct IntensityImage {
    pub rows: usize,
    pub cols: usize,
    pub pixels: Vec<f64>,
}

impl IntensityImage {
    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.cols + col]
    }

    /// Values of the first `n` cells, i.e. the monitored modes.
    pub fn modes(&self, n: usize) -> &[f64] {
        &self.pixels[..n]
    }
}

/// Outcome of one coincidence acquisition.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoincidenceRecord {
    pub counts: f64,
    pub estimated_rate: f64,
    pub poisson_sigma: f64,
    pub duration_s: f64,
}

/// Default probe-laser photon flux for transmission matrix measurements.
pub const DEFAULT_PROBE_RATE: f64 = 1.0e9;

/// Mutable state of the virtual apparatus.
#[derive(Clone, Debug)]
pub struct LabState {
    fiber: GroundTruthFiber,
    source: SourceModel,
    detector: DetectorModel,
    field_h: ComplexVector,
    field_v: ComplexVector,
    out_h: ComplexVector,
    out_v: ComplexVector,
    delay_mm: f64,
    probe_rate: f64,
    rng: ChaCha20Rng,
}

impl LabState {
    pub fn new(config: FiberConfig, source: SourceModel, detector: DetectorModel) -> Result<Self> {
        let fiber = GroundTruthFiber::build(&config)?;
        Self::from_fiber(fiber, source, detector)
    }

    pub fn from_fiber(fiber: GroundTruthFiber, source: SourceModel, detector: DetectorModel) -> Result<Self> {
        source.validate()?;
        detector.validate()?;
        let rng = stream_rng(detector.seed, 1);
        let tm = fiber.transmission();
        let field_h = SlmPattern::flat(Half::H, tm.n_in_h()).field();
        let field_v = SlmPattern::flat(Half::V, tm.n_in_v()).field();
        let out_h = tm.propagate_half(Half::H, &field_h)?;
        let out_v = tm.propagate_half(Half::V, &field_v)?;
        Ok(Self {
            fiber,
            source,
            detector,
            field_h,
            field_v,
            out_h,
            out_v,
            delay_mm: 0.0,
            probe_rate: DEFAULT_PROBE_RATE,
            rng,
        })
    }

    pub fn with_probe_rate(mut self, photons_per_s: f64) -> Result<Self> {
        if !(photons_per_s > 0.0 && photons_per_s.is_finite()) {
            return Err(Error::Config(format!(
                "probe rate must be positive, got {photons_per_s}"
            )));
        }
        self.probe_rate = photons_per_s;
        Ok(self)
    }

    pub fn source(&self) -> &SourceModel {
        &self.source
    }

    pub fn detector(&self) -> &DetectorModel {
        &self.detector
    }

    pub fn grid(&self) -> OutputGrid {
        self.fiber.grid()
    }

    pub fn n_out(&self) -> usize {
        self.fiber.grid().n_out
    }

    pub fn n_in(&self) -> usize {
        self.fiber.transmission().n_in()
    }

    pub fn half_len(&self, half: Half) -> usize {
        self.fiber.transmission().half_len(half)
    }

    pub fn position(&self, index: usize) -> Result<OutputPosition> {
        self.fiber.position(index)
    }

    pub fn delay(&self) -> f64 {
        self.delay_mm
    }

    pub fn set_delay(&mut self, delay_mm: f64) {
        self.delay_mm = delay_mm;
    }

    pub fn input_field(&self, half: Half) -> &ComplexVector {
        match half {
            Half::H => &self.field_h,
            Half::V => &self.field_v,
        }
    }

    /// Programs one SLM half with a phase-only pattern.
    pub fn set_slm(&mut self, half: Half, pattern: &SlmPattern) -> Result<()> {
        if pattern.half() != half {
            return Err(Error::DimensionMismatch(format!(
                "pattern for SLM {} programmed on SLM {}",
                pattern.half().label(),
                half.label()
            )));
        }
        self.install(half, pattern.field())
    }

    /// Launches the photon of `half` into a single input mode.
    pub fn set_input_mode(&mut self, half: Half, mode: usize) -> Result<()> {
        let len = self.half_len(half);
        if mode >= len {
            return Err(Error::Range(format!(
                "input mode {mode} outside {} half of {len} modes",
                half.label()
            )));
        }
        let mut field = ComplexVector::zeros(len);
        field[mode] = Complex64::new(1.0, 0.0);
        self.install(half, field)
    }

    /// Launches an arbitrary field, normalized to unit energy.
    pub fn set_input_field(&mut self, half: Half, field: &ComplexVector) -> Result<()> {
        let n = norm(field.as_slice());
        if n == 0.0 || !n.is_finite() {
            return Err(Error::Degenerate("input field has no energy".into()));
        }
        self.install(half, field / Complex64::new(n, 0.0))
    }

    fn install(&mut self, half: Half, field: ComplexVector) -> Result<()> {
        let len = self.half_len(half);
        if field.len() != len {
            return Err(Error::DimensionMismatch(format!(
                "SLM {} drives {len} modes, got {}",
                half.label(),
                field.len()
            )));
        }
        let out = self.fiber.transmission().propagate_half(half, &field)?;
        match half {
            Half::H => {
                self.field_h = field;
                self.out_h = out;
            }
            Half::V => {
                self.field_v = field;
                self.out_v = out;
            }
        }
        Ok(())
    }

    fn out(&self, half: Half) -> &ComplexVector {
        match half {
            Half::H => &self.out_h,
            Half::V => &self.out_v,
        }
    }

    fn poisson(&mut self, mean: f64) -> f64 {
        if mean <= 0.0 {
            return 0.0;
        }
        Poisson::new(mean)
            .expect("finite positive Poisson mean")
            .sample(&mut self.rng)
    }

    /// Camera frame accumulated over `exposure_s` seconds.
    pub fn intensity_image(&mut self, which: Photons, exposure_s: f64) -> Result<IntensityImage> {
        check_duration(exposure_s)?;
        let grid = self.grid();
        let scale = self.source.pair_rate * exposure_s * self.detector.efficiency;
        let mut pixels = vec![0.0; grid.rows * grid.cols];
        for (p, px) in pixels.iter_mut().take(grid.n_out).enumerate() {
            let ih = self.out_h[p].norm_sqr();
            let iv = self.out_v[p].norm_sqr();
            *px = scale
                * match which {
                    Photons::H => ih,
                    Photons::V => iv,
                    Photons::Both => ih + iv,
                };
        }
        if self.detector.noise == NoiseMode::Poisson {
            for px in pixels.iter_mut().take(grid.n_out) {
                *px = self.poisson(*px);
            }
        }
        Ok(IntensityImage {
            rows: grid.rows,
            cols: grid.cols,
            pixels,
        })
    }

    /// Camera frame of the classical probe laser launched with `field` over the
    /// full input space, optionally interfered with an external reference
    /// field given directly at the output plane.
    pub fn probe_intensity(
        &mut self,
        field: &ComplexVector,
        external_reference: Option<&ComplexVector>,
        exposure_s: f64,
    ) -> Result<Vec<f64>> {
        check_duration(exposure_s)?;
        let mut out = self.fiber.transmission().propagate(field)?;
        if let Some(reference) = external_reference {
            if reference.len() != out.len() {
                return Err(Error::DimensionMismatch(format!(
                    "reference has {} entries, camera has {}",
                    reference.len(),
                    out.len()
                )));
            }
            out += reference;
        }
        let scale = self.probe_rate * exposure_s;
        let mut frame: Vec<f64> = out.iter().map(|z| z.norm_sqr() * scale).collect();
        if self.detector.noise == NoiseMode::Poisson {
            for v in frame.iter_mut() {
                *v = self.poisson(*v);
            }
        }
        Ok(frame)
    }

    /// Photons per probe-laser exposure second for unit field intensity.
    pub fn probe_scale(&self, exposure_s: f64) -> f64 {
        self.probe_rate * exposure_s
    }

    /// Count rate of one counter placed at `pos`, in counts per second.
    pub fn singles_rate(&self, pos: &OutputPosition, _arm: Arm) -> Result<f64> {
        self.check_position(pos)?;
        let p = pos.index;
        let photons = self.out_h[p].norm_sqr() + self.out_v[p].norm_sqr();
        Ok(self.source.pair_rate * self.detector.efficiency * photons + self.detector.dark_rate)
    }

    /// Expected true-plus-accidental coincidence rate between F1 at `x` and
    /// F2 at `y` for the current delay.
    pub fn coincidence_rate(&self, x: &OutputPosition, y: &OutputPosition) -> Result<f64> {
        self.check_position(x)?;
        self.check_position(y)?;
        if x.index == y.index {
            return Err(Error::Unsupported(
                "both collection fibers at the same output mode".into(),
            ));
        }
        let amps = PairAmplitudes::from_output_fields(
            self.out(Half::H).as_slice(),
            self.out(Half::V).as_slice(),
            x.index,
            y.index,
        );
        let visibility = self.source.mutual_coherence(self.delay_mm);
        let eff = self.detector.efficiency;
        let correlated = self.source.pair_rate * eff * eff * coincidence_rate(&amps, visibility)?;
        let accidental =
            self.singles_rate(x, Arm::F1)? * self.singles_rate(y, Arm::F2)? * self.detector.coincidence_window_s;
        Ok(correlated + accidental)
    }

    pub fn count_coincidences(
        &mut self,
        x: &OutputPosition,
        y: &OutputPosition,
        duration_s: f64,
    ) -> Result<CoincidenceRecord> {
        check_duration(duration_s)?;
        let mean = self.coincidence_rate(x, y)? * duration_s;
        let counts = match self.detector.noise {
            NoiseMode::Noiseless => mean,
            NoiseMode::Poisson => self.poisson(mean),
        };
        Ok(CoincidenceRecord {
            counts,
            estimated_rate: counts / duration_s,
            poisson_sigma: counts.sqrt(),
            duration_s,
        })
    }

    /// Copy of the hidden transmission matrix. Validation only: experiment
    /// code paths work from measured matrices.
    pub fn true_transmission_matrix(&self) -> TransmissionMatrix {
        self.fiber.transmission().clone()
    }

    fn check_position(&self, pos: &OutputPosition) -> Result<()> {
        if pos.index >= self.n_out() {
            return Err(Error::Range(format!(
                "output index {} outside {} monitored modes",
                pos.index,
                self.n_out()
            )));
        }
        Ok(())
    }
}

fn check_duration(seconds: f64) -> Result<()> {
    if seconds > 0.0 && seconds.is_finite() {
        Ok(())
    } else {
        Err(Error::Range(format!(
            "acquisition time must be positive, got {seconds}"
        )))
    }
}

/// Intensity contrast `std(I)/mean(I)`; 1 for fully developed speckle.
pub fn speckle_contrast(intensities: &[f64]) -> f64 {
    let n = intensities.len() as f64;
    let mean = intensities.iter().sum::<f64>() / n;
    let var = intensities.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    var.sqrt() / mean
}

/// Effective number of speckle grains, `(ΣI)² / ΣI²`.
///
/// For Rayleigh speckle over `n` uncorrelated cells this tends to `n/2`.
pub fn speckle_grains(intensities: &[f64]) -> f64 {
    let s: f64 = intensities.iter().sum();
    let s2: f64 = intensities.iter().map(|v| v * v).sum();
    s * s / s2
}
