//! Inverse design of phase-only SLM masks from a transmission matrix.
//!
//! Every routine works from rows of the matrix only, so a measured matrix
//! (known up to one unit-modulus factor per row) gives the same physical
//! result as the truth: the factor shifts both photons' relative output
//! phases by the same amount, and two-photon interference only depends on
//! their difference.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numcore::{cis, norm, singular_values, ComplexMatrix, ComplexVector};
use crate::tmrecon::{Half, TransmissionMatrix};
use crate::ttm::{pair_amplitude, PairAmplitudes, TwoPhotonInput};

/// Phase-only mask over one SLM half, phases in `[0, 2π)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SlmPattern {
    half: Half,
    phases: Vec<f64>,
}

fn canonical_phase(theta: f64) -> f64 {
    let r = theta.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

impl SlmPattern {
    pub fn new(half: Half, phases: Vec<f64>) -> Result<Self> {
        if phases.is_empty() {
            return Err(Error::InvalidDimension("empty SLM pattern".into()));
        }
        if phases.iter().any(|p| !p.is_finite()) {
            return Err(Error::Range("SLM phases must be finite".into()));
        }
        Ok(Self {
            half,
            phases: phases.into_iter().map(canonical_phase).collect(),
        })
    }

    pub fn flat(half: Half, len: usize) -> Self {
        Self {
            half,
            phases: vec![0.0; len],
        }
    }

    pub fn half(&self) -> Half {
        self.half
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }

    /// Induced unit-energy input field `e^{iθ_i}/√N`.
    pub fn field(&self) -> ComplexVector {
        let amp = 1.0 / (self.phases.len() as f64).sqrt();
        ComplexVector::from_iterator(self.phases.len(), self.phases.iter().map(|&t| cis(t) * amp))
    }
}

/// Result of discarding the amplitude of an ideal field.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseProjection {
    pub pattern: SlmPattern,
    /// Entries with zero amplitude, which were given phase 0.
    pub zero_entries: Vec<usize>,
}

/// `θ_i = arg(field_i)`, referenced so that `θ_0 = 0`.
pub fn phase_only_project(half: Half, field: &[Complex64]) -> Result<PhaseProjection> {
    if field.is_empty() || norm(field) == 0.0 {
        return Err(Error::Degenerate("cannot project a zero field".into()));
    }
    let reference = if field[0].norm() > 0.0 { field[0].arg() } else { 0.0 };
    let mut zero_entries = Vec::new();
    let phases = field
        .iter()
        .enumerate()
        .map(|(i, z)| {
            if z.norm() == 0.0 {
                zero_entries.push(i);
                0.0
            } else {
                z.arg() - reference
            }
        })
        .collect::<Vec<_>>();
    let mut pattern = SlmPattern::new(half, phases)?;
    for &i in &zero_entries {
        pattern.phases[i] = 0.0;
    }
    Ok(PhaseProjection { pattern, zero_entries })
}

fn check_output(tm: &TransmissionMatrix, x: usize) -> Result<()> {
    if x >= tm.n_out() {
        return Err(Error::Range(format!("output {x} outside {} modes", tm.n_out())));
    }
    Ok(())
}

fn nonzero_row(tm: &TransmissionMatrix, x: usize, half: Half) -> Result<Vec<Complex64>> {
    check_output(tm, x)?;
    let row = tm.half_row(x, half);
    if norm(&row) == 0.0 {
        return Err(Error::Degenerate(format!(
            "output {x} receives no light from SLM {}",
            half.label()
        )));
    }
    Ok(row)
}

/// Unit-norm phase-conjugate field `conj(T[x, ·])` over one half.
pub fn conjugate_field(tm: &TransmissionMatrix, x: usize, half: Half) -> Result<ComplexVector> {
    let row = nonzero_row(tm, x, half)?;
    let n = norm(&row);
    Ok(ComplexVector::from_iterator(
        row.len(),
        row.iter().map(|z| z.conj() / n),
    ))
}

/// Phase-conjugation focus of one photon onto output `x`: `θ_i = −arg T[x, i]`.
pub fn focus_single(tm: &TransmissionMatrix, x: usize, half: Half) -> Result<SlmPattern> {
    let field = conjugate_field(tm, x, half)?;
    Ok(phase_only_project(half, field.as_slice())?.pattern)
}

/// Photon H focused on `x`, photon V focused on `y`.
pub fn focus_independent(tm: &TransmissionMatrix, x: usize, y: usize) -> Result<(SlmPattern, SlmPattern)> {
    if x == y {
        return Err(Error::Unsupported("focus targets must differ".into()));
    }
    Ok((focus_single(tm, x, Half::H)?, focus_single(tm, y, Half::V)?))
}

/// Both photons sent to the superposition `(|x⟩ + e^{iφ}|y⟩)/√2` with their
/// own relative phases.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SuperpositionTarget {
    pub x: usize,
    pub y: usize,
    pub phi_h: f64,
    pub phi_v: f64,
}

fn wrap_pi(theta: f64) -> f64 {
    let r = (theta + PI).rem_euclid(TAU) - PI;
    if r < -PI {
        r + TAU
    } else {
        r
    }
}

const CALIBRATION_TOL: f64 = 1e-13;
const CALIBRATION_ITERS: usize = 200;

/// Pre-projection field aiming one photon at `(|x⟩ + e^{iφ}|y⟩)/√2`.
///
/// The starting point is the balanced conjugate field
/// `conj(T_x)/‖T_x‖ + e^{iφ}·conj(T_y)/‖T_y‖`. Phase-only projection then
/// perturbs the realized spot ratio by `O(1/√N)`, so the relative phase and
/// weight of the two terms are corrected (using the same rows) until the
/// projected pattern produces equal spot amplitudes at relative phase `φ`.
pub fn superposition_field(row_x: &[Complex64], row_y: &[Complex64], phi: f64) -> Result<ComplexVector> {
    let (nx, ny) = (norm(row_x), norm(row_y));
    if nx == 0.0 || ny == 0.0 || row_x.len() != row_y.len() {
        return Err(Error::Degenerate("superposition target rows are empty".into()));
    }
    let n = row_x.len();
    let build = |psi: f64, weight: f64| -> ComplexVector {
        let w = cis(psi) * weight;
        ComplexVector::from_iterator(
            n,
            row_x.iter().zip(row_y).map(|(a, b)| a.conj() / nx + w * b.conj() / ny),
        )
    };
    let realized = |field: &ComplexVector| -> Result<Complex64> {
        let phases = phase_only_project(Half::H, field.as_slice())?.pattern;
        let f = phases.field();
        let ex: Complex64 = row_x.iter().zip(f.iter()).map(|(a, u)| a * u).sum();
        let ey: Complex64 = row_y.iter().zip(f.iter()).map(|(b, u)| b * u).sum();
        if ex.norm() == 0.0 {
            return Err(Error::Degenerate("projected field leaves target dark".into()));
        }
        Ok(ey / ex)
    };

    let (mut psi, mut weight) = (phi, 1.0f64);
    let mut field = build(psi, weight);
    for _ in 0..CALIBRATION_ITERS {
        let ratio = realized(&field)?;
        let phase_err = wrap_pi(phi - ratio.arg());
        let amp_err = ratio.norm().ln();
        if phase_err.abs() < CALIBRATION_TOL && amp_err.abs() < CALIBRATION_TOL {
            break;
        }
        psi += phase_err;
        weight *= (-amp_err).exp();
        field = build(psi, weight);
    }
    Ok(field)
}

fn superposition_pattern(tm: &TransmissionMatrix, x: usize, y: usize, half: Half, phi: f64) -> Result<SlmPattern> {
    let rx = nonzero_row(tm, x, half)?;
    let ry = nonzero_row(tm, y, half)?;
    let field = superposition_field(&rx, &ry, phi)?;
    Ok(phase_only_project(half, field.as_slice())?.pattern)
}

pub fn superposition_masks(tm: &TransmissionMatrix, target: &SuperpositionTarget) -> Result<(SlmPattern, SlmPattern)> {
    if target.x == target.y {
        return Err(Error::Unsupported("superposition outputs must differ".into()));
    }
    Ok((
        superposition_pattern(tm, target.x, target.y, Half::H, target.phi_h)?,
        superposition_pattern(tm, target.x, target.y, Half::V, target.phi_v)?,
    ))
}

/// Pathway amplitudes at `(x, y)` for a pair of programmed masks.
pub fn predict_pair(
    tm: &TransmissionMatrix,
    pattern_h: &SlmPattern,
    pattern_v: &SlmPattern,
    x: usize,
    y: usize,
) -> Result<PairAmplitudes> {
    let input = TwoPhotonInput::new(pattern_h.field(), pattern_v.field(), "slm")?;
    pair_amplitude(tm, &input, x, y)
}

/// Conjugated rows of the targets, split by half.
#[derive(Clone, Debug, PartialEq)]
pub struct RowFactors {
    pub x_h: ComplexVector,
    pub x_v: ComplexVector,
    pub y_h: ComplexVector,
    pub y_v: ComplexVector,
}

/// Two-photon input amplitude `B[i, j]` over (H-mode, V-mode) pairs that
/// the conjugate-transposed TTM assigns to an output pair.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoPhotonInputField {
    pub b: ComplexMatrix,
    pub target: Option<(usize, usize)>,
    /// Analytic rank-2 factors when the field came from a TTM row.
    pub factors: Option<RowFactors>,
}

impl TwoPhotonInputField {
    /// Wraps an arbitrary amplitude matrix without known factors.
    pub fn from_matrix(b: ComplexMatrix) -> Self {
        Self {
            b,
            target: None,
            factors: None,
        }
    }

    pub fn singular_values(&self) -> Vec<f64> {
        singular_values(&self.b)
    }
}

/// `B[i, j] = conj(T[x, i]·T[y, j] + T[y, i]·T[x, j])`, `i` over H inputs and
/// `j` over V inputs.
pub fn ttm_inverse_field(tm: &TransmissionMatrix, x: usize, y: usize) -> Result<TwoPhotonInputField> {
    if x == y {
        return Err(Error::Unsupported("inverse field targets must differ".into()));
    }
    check_output(tm, x)?;
    check_output(tm, y)?;
    if norm(tm.matrix().row(x).transpose().as_slice()) == 0.0 || norm(tm.matrix().row(y).transpose().as_slice()) == 0.0
    {
        return Err(Error::Degenerate(format!("target rows ({x}, {y}) receive no light")));
    }
    let conj_row = |p: usize, half: Half| {
        let r = tm.half_row(p, half);
        ComplexVector::from_iterator(r.len(), r.iter().map(|z| z.conj()))
    };
    let factors = RowFactors {
        x_h: conj_row(x, Half::H),
        x_v: conj_row(x, Half::V),
        y_h: conj_row(y, Half::H),
        y_v: conj_row(y, Half::V),
    };
    let b = &factors.x_h * factors.y_v.transpose() + &factors.y_h * factors.x_v.transpose();
    Ok(TwoPhotonInputField {
        b,
        target: Some((x, y)),
        factors: Some(factors),
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SolutionKind {
    /// H focused on `x`, V focused on `y`.
    Independent,
    /// Both photons in the balanced superposition with relative phase `phi`.
    Superposition { phi: f64 },
    /// A rank-one term of the singular value decomposition.
    Singular { index: usize },
}

/// One separable input `u ⊗ v` (unit-norm fields, before projection).
#[derive(Clone, Debug, PartialEq)]
pub struct SeparableSolution {
    pub kind: SolutionKind,
    pub u: ComplexVector,
    pub v: ComplexVector,
}

impl SeparableSolution {
    /// Phase-only masks realizing this solution.
    pub fn project(&self) -> Result<(SlmPattern, SlmPattern)> {
        Ok((
            phase_only_project(Half::H, self.u.as_slice())?.pattern,
            phase_only_project(Half::V, self.v.as_slice())?.pattern,
        ))
    }
}

const RANK_TOL: f64 = 1e-10;

fn unit(v: ComplexVector) -> ComplexVector {
    let n = v.norm();
    v.unscale(n)
}

/// Separable factorizations of a rank-≤2 input field.
///
/// Fields built by [`ttm_inverse_field`] yield the independent-focusing
/// solution and the symmetric superposition family at each phase in
/// `phis` (phase 0 when empty). Other fields are split into the rank-one
/// terms of their SVD.
pub fn separable_solutions(field: &TwoPhotonInputField, phis: &[f64]) -> Result<Vec<SeparableSolution>> {
    let sv = field.singular_values();
    let top = sv.first().copied().unwrap_or(0.0);
    if top == 0.0 {
        return Err(Error::Degenerate("input field is zero".into()));
    }
    if sv.len() > 2 && sv[2] > RANK_TOL * top {
        return Err(Error::Unsupported(format!(
            "input field has rank > 2 (third singular value {:.3e})",
            sv[2] / top
        )));
    }
    match &field.factors {
        Some(f) => {
            let rebuilt = &f.x_h * f.y_v.transpose() + &f.y_h * f.x_v.transpose();
            if (&rebuilt - &field.b).norm() > 1e-9 * field.b.norm() {
                return Err(Error::Degenerate("row factors do not reproduce the field".into()));
            }
            let mut out = vec![SeparableSolution {
                kind: SolutionKind::Independent,
                u: unit(f.x_h.clone()),
                v: unit(f.y_v.clone()),
            }];
            let conj = |v: &ComplexVector| v.iter().map(|z| z.conj()).collect::<Vec<_>>();
            let phis = if phis.is_empty() { &[0.0][..] } else { phis };
            for &phi in phis {
                // The family needs both targets reachable from both halves.
                let u = match superposition_field(&conj(&f.x_h), &conj(&f.y_h), phi) {
                    Err(Error::Degenerate(_)) => break,
                    r => r?,
                };
                let v = match superposition_field(&conj(&f.x_v), &conj(&f.y_v), phi) {
                    Err(Error::Degenerate(_)) => break,
                    r => r?,
                };
                out.push(SeparableSolution {
                    kind: SolutionKind::Superposition { phi },
                    u: unit(u),
                    v: unit(v),
                });
            }
            Ok(out)
        }
        None => {
            let svd = field.b.clone().svd(true, true);
            let (u, v_t) = (svd.u.expect("requested U"), svd.v_t.expect("requested V†"));
            let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
            order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
            Ok(order
                .into_iter()
                .filter(|&k| svd.singular_values[k] > RANK_TOL * top)
                .enumerate()
                .map(|(index, k)| SeparableSolution {
                    kind: SolutionKind::Singular { index },
                    u: unit(u.column(k).into_owned()),
                    // B = Σ σ p q†, so B[i, j] = σ p_i conj(q_j): the V factor is row k of V†.
                    v: unit(v_t.row(k).transpose()),
                })
                .collect())
        }
    }
}

/// Least-squares fit of `C = A·cos(Δ + φ₀)` to `(Δ, C)` samples, where
/// `Δ = φ_H − φ_V`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CosineFit {
    pub amplitude: f64,
    pub phase_offset: f64,
    /// Pearson correlation between the data and the fitted curve.
    pub correlation: f64,
}

pub fn fit_phase_law(samples: &[(f64, f64)]) -> Result<CosineFit> {
    if samples.len() < 3 {
        return Err(Error::Config("phase-law fit needs at least 3 samples".into()));
    }
    let (mut scc, mut sss, mut scs, mut syc, mut sys) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(d, c) in samples {
        let (s, co) = d.sin_cos();
        scc += co * co;
        sss += s * s;
        scs += co * s;
        syc += c * co;
        sys += c * s;
    }
    let det = scc * sss - scs * scs;
    if det.abs() < 1e-12 {
        return Err(Error::Degenerate("phase settings do not span a full cycle".into()));
    }
    let a = (syc * sss - sys * scs) / det;
    let b = (sys * scc - syc * scs) / det;
    let amplitude = a.hypot(b);
    let phase_offset = (-b).atan2(a);
    let fitted: Vec<f64> = samples.iter().map(|&(d, _)| a * d.cos() + b * d.sin()).collect();
    let data: Vec<f64> = samples.iter().map(|&(_, c)| c).collect();
    Ok(CosineFit {
        amplitude,
        phase_offset,
        correlation: pearson(&data, &fitted),
    })
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (x, y) in a.iter().zip(b) {
        cov += (x - ma) * (y - mb);
        va += (x - ma).powi(2);
        vb += (y - mb).powi(2);
    }
    cov / (va * vb).sqrt()
}
