//! Transmission matrix measurement from intensity-only camera frames.
//!
//! Each probed input mode is launched together with a reference mode while
//! the probe phase is stepped through `θ_k = 2πk/K`. With both fields
//! carrying half the probe power, the camera records
//! `I_k(p) = |e^{iθ_k}·T(p,i) + E_ref(p)|² / 2` and
//!
//! ```text
//! Ê(p, i) = (2/K) Σ_k I_k(p) e^{-iθ_k} = T(p, i) · conj(E_ref(p))
//! ```
//!
//! exactly for any `K ≥ 3`. The unknown reference speckle leaves one complex
//! factor per output row; its magnitude is recovered from a reference-only
//! frame, its phase is not (and never affects a physical prediction).

mod matrix;
mod qwtm;

pub use matrix::{Basis, Half, Provenance, TransmissionMatrix};
pub use qwtm::{decode as decode_qwtm, encode as encode_qwtm, read_qwtm, write_qwtm, QWTM_MAGIC, QWTM_VERSION};

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numcore::{cis, inner, norm, ComplexMatrix, ComplexVector};
use crate::virtlab::LabState;

/// Where the holographic reference comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Reference {
    /// One input mode is sacrificed as a co-propagating reference.
    Internal(usize),
    /// Ideal plane reference with `E_ref ≡ 1` at every output mode.
    External,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TmMeasurement {
    pub reference: Reference,
    pub phase_steps: usize,
    /// Camera exposure per frame, in seconds of probe laser.
    pub exposure_s: f64,
    /// Input modes to probe; `None` probes every non-reference mode.
    pub probes: Option<Vec<usize>>,
}

impl Default for TmMeasurement {
    fn default() -> Self {
        Self {
            reference: Reference::Internal(0),
            phase_steps: 4,
            exposure_s: 1.0e-3,
            probes: None,
        }
    }
}

/// Reference rows dimmer than this fraction of the mean are unreliable.
const UNRELIABLE_FRACTION: f64 = 1e-4;

/// A measured transmission matrix with its per-row calibration data.
#[derive(Clone, Debug, PartialEq)]
pub struct ReconstructedTM {
    tm: TransmissionMatrix,
    reference_magnitude: Vec<f64>,
    unreliable: Vec<bool>,
    probed: Vec<usize>,
    phase_steps: usize,
    reference: Reference,
}

impl ReconstructedTM {
    /// The raw reconstruction `T(p, i)·conj(E_ref(p))`.
    pub fn tm(&self) -> &TransmissionMatrix {
        &self.tm
    }

    /// Estimated `|E_ref(p)|` per output row.
    pub fn reference_magnitude(&self) -> &[f64] {
        &self.reference_magnitude
    }

    pub fn unreliable_rows(&self) -> &[bool] {
        &self.unreliable
    }

    pub fn unreliable_count(&self) -> usize {
        self.unreliable.iter().filter(|&&u| u).count()
    }

    pub fn probed_columns(&self) -> &[usize] {
        &self.probed
    }

    pub fn phase_steps(&self) -> usize {
        self.phase_steps
    }

    pub fn reference(&self) -> Reference {
        self.reference
    }

    /// Rows divided by the reference magnitude: the true matrix up to one
    /// unit-modulus factor per row.
    pub fn calibrated(&self) -> TransmissionMatrix {
        let mut m = self.tm.matrix().clone();
        for (p, &mag) in self.reference_magnitude.iter().enumerate() {
            if mag > 0.0 {
                m.row_mut(p).unscale_mut(mag);
            }
        }
        self.tm
            .with_matrix(m, self.tm.basis())
            .expect("calibrated matrix keeps the shape")
    }

    /// Rows scaled to unit norm.
    pub fn row_normalized(&self) -> TransmissionMatrix {
        let mut m = self.tm.matrix().clone();
        for p in 0..m.nrows() {
            let n = m.row(p).norm();
            if n > 0.0 {
                m.row_mut(p).unscale_mut(n);
            }
        }
        self.tm
            .with_matrix(m, self.tm.basis())
            .expect("normalized matrix keeps the shape")
    }
}

/// Recovers `a·conj(b)` from frames `|e^{iθ_k}·a + b|²/2`, `θ_k = 2πk/K`.
pub fn demodulate(intensities: &[f64]) -> Result<Complex64> {
    let k = intensities.len();
    if k < 3 {
        return Err(Error::InsufficientSteps(k));
    }
    let sum: Complex64 = intensities
        .iter()
        .enumerate()
        .map(|(j, &i)| cis(-step_phase(j, k)) * i)
        .sum();
    Ok(sum * (2.0 / k as f64))
}

fn step_phase(j: usize, k: usize) -> f64 {
    2.0 * PI * j as f64 / k as f64
}

/// Measures the lab's transmission matrix by phase-stepping holography.
pub fn measure_tm(lab: &mut LabState, plan: &TmMeasurement) -> Result<ReconstructedTM> {
    let k = plan.phase_steps;
    if k < 3 {
        return Err(Error::InsufficientSteps(k));
    }
    let n_in = lab.n_in();
    let n_out = lab.n_out();
    let n_in_h = lab.half_len(Half::H);
    let probes: Vec<usize> = match (&plan.probes, plan.reference) {
        (Some(p), _) => p.clone(),
        (None, Reference::Internal(r)) => (0..n_in).filter(|&i| i != r).collect(),
        (None, Reference::External) => (0..n_in).collect(),
    };
    if let Reference::Internal(r) = plan.reference {
        if r >= n_in {
            return Err(Error::Config(format!("reference mode {r} outside {n_in} inputs")));
        }
        if probes.contains(&r) {
            return Err(Error::Config(format!("reference mode {r} is also probed")));
        }
    }
    if let Some(&bad) = probes.iter().find(|&&i| i >= n_in) {
        return Err(Error::Config(format!("probe mode {bad} outside {n_in} inputs")));
    }

    let scale = lab.probe_scale(plan.exposure_s);
    let half_amp = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let mut measured = ComplexMatrix::zeros(n_out, n_in);

    let (external, reference_magnitude) = match plan.reference {
        Reference::External => (Some(ComplexVector::from_element(n_out, half_amp)), vec![1.0; n_out]),
        Reference::Internal(r) => {
            let mut field = ComplexVector::zeros(n_in);
            field[r] = Complex64::new(1.0, 0.0);
            let frame = lab.probe_intensity(&field, None, plan.exposure_s)?;
            let mags: Vec<f64> = frame.iter().map(|v| (v / scale).max(0.0).sqrt()).collect();
            // The reference column itself: T(p, r)·conj(T(p, r)) = |E_ref(p)|².
            for (p, &m) in mags.iter().enumerate() {
                measured[(p, r)] = Complex64::new(m * m, 0.0);
            }
            (None, mags)
        }
    };

    let mut frames = vec![vec![0.0; k]; n_out];
    for &i in &probes {
        #[allow(clippy::needless_range_loop)]
        for step in 0..k {
            let mut field = ComplexVector::zeros(n_in);
            field[i] = cis(step_phase(step, k)) * half_amp;
            if let Reference::Internal(r) = plan.reference {
                field[r] = half_amp;
            }
            let frame = lab.probe_intensity(&field, external.as_ref(), plan.exposure_s)?;
            for (p, v) in frame.into_iter().enumerate() {
                frames[p][step] = v / scale;
            }
        }
        for (p, f) in frames.iter().enumerate() {
            measured[(p, i)] = demodulate(f)?;
        }
    }

    let mean_ref = reference_magnitude.iter().map(|m| m * m).sum::<f64>() / n_out as f64;
    let unreliable = reference_magnitude
        .iter()
        .map(|m| m * m < UNRELIABLE_FRACTION * mean_ref)
        .collect();
    let tm = TransmissionMatrix::new(measured, n_in_h, Basis::InputMode, Provenance::Measured)?;
    Ok(ReconstructedTM {
        tm,
        reference_magnitude,
        unreliable,
        probed: probes,
        phase_steps: k,
        reference: plan.reference,
    })
}

/// Mean over rows of `|⟨a_p, b_p⟩| / (‖a_p‖·‖b_p‖)`, skipping excluded rows
/// and rows where either side is zero.
pub fn row_fidelity(a: &ComplexMatrix, b: &ComplexMatrix, exclude: &[bool]) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(Error::DimensionMismatch(format!(
            "fidelity needs equal shapes, got {:?} and {:?}",
            a.shape(),
            b.shape()
        )));
    }
    let mut total = 0.0;
    let mut rows = 0usize;
    for p in 0..a.nrows() {
        if exclude.get(p).copied().unwrap_or(false) {
            continue;
        }
        let ra: Vec<Complex64> = a.row(p).iter().copied().collect();
        let rb: Vec<Complex64> = b.row(p).iter().copied().collect();
        let denom = norm(&ra) * norm(&rb);
        if denom == 0.0 {
            continue;
        }
        total += inner(&ra, &rb).norm() / denom;
        rows += 1;
    }
    if rows == 0 {
        return Err(Error::Degenerate("no usable rows for fidelity".into()));
    }
    Ok(total / rows as f64)
}

/// Row-phase-invariant agreement between a measurement and the truth.
pub fn tm_fidelity(measured: &ReconstructedTM, truth: &TransmissionMatrix) -> Result<f64> {
    row_fidelity(measured.tm().matrix(), truth.matrix(), measured.unreliable_rows())
}

/// `T·B`, where `B` maps the new basis onto the input-mode basis. `B` must
/// be square so the H/V column split carries over.
pub fn change_basis(tm: &TransmissionMatrix, b: &ComplexMatrix) -> Result<TransmissionMatrix> {
    if b.nrows() != tm.n_in() || b.ncols() != b.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "basis change must be {n}x{n}, got {}x{}",
            b.nrows(),
            b.ncols(),
            n = tm.n_in()
        )));
    }
    tm.with_matrix(tm.matrix() * b, Basis::SlmMacropixel)
}
