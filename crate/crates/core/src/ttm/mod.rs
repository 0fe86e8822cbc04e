//! Two-photon interference.
//!
//! Photon H enters through the H columns of the transmission matrix with
//! field `u`, photon V through the V columns with field `v`. A coincidence
//! between output modes `x` and `y` can happen along two pathways, H→x/V→y
//! and H→y/V→x, with amplitudes
//!
//! ```text
//! A1 = e_H(x)·e_V(y)    A2 = e_H(y)·e_V(x)    e_P = T_P · field_P
//! ```
//!
//! and partial distinguishability weights their cross term:
//! `R = |A1|² + |A2|² + 2·V·Re(A1·conj(A2))`.

mod brute;

pub use brute::{brute_force_two_photon, TwoPhotonDistribution};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numcore::{norm, ComplexVector};
use crate::tmrecon::{Half, TransmissionMatrix};
use crate::virtlab::SourceModel;

const UNIT_NORM_TOL: f64 = 1e-12;

/// Separable two-photon input: one unit-norm field per SLM half.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoPhotonInput {
    u: ComplexVector,
    v: ComplexVector,
    pub descriptor: String,
}

impl TwoPhotonInput {
    pub fn new(u: ComplexVector, v: ComplexVector, descriptor: impl Into<String>) -> Result<Self> {
        for (name, f) in [("u", &u), ("v", &v)] {
            let n = norm(f.as_slice());
            if (n - 1.0).abs() > UNIT_NORM_TOL {
                return Err(Error::Range(format!("input field {name} has norm {n}, expected 1")));
            }
        }
        Ok(Self {
            u,
            v,
            descriptor: descriptor.into(),
        })
    }

    /// Rescales both fields to unit norm first.
    pub fn normalized(u: ComplexVector, v: ComplexVector, descriptor: impl Into<String>) -> Result<Self> {
        let nu = norm(u.as_slice());
        let nv = norm(v.as_slice());
        if nu == 0.0 || nv == 0.0 {
            return Err(Error::Degenerate("two-photon input field has no energy".into()));
        }
        Self::new(u / Complex64::new(nu, 0.0), v / Complex64::new(nv, 0.0), descriptor)
    }

    /// Photon H in H-mode `h`, photon V in V-mode `v`.
    pub fn modes(tm: &TransmissionMatrix, h: usize, v: usize) -> Result<Self> {
        let (nh, nv) = (tm.n_in_h(), tm.n_in_v());
        if h >= nh || v >= nv {
            return Err(Error::Range(format!(
                "input modes ({h}, {v}) outside halves of {nh} and {nv} modes"
            )));
        }
        let mut u = ComplexVector::zeros(nh);
        let mut w = ComplexVector::zeros(nv);
        u[h] = Complex64::new(1.0, 0.0);
        w[v] = Complex64::new(1.0, 0.0);
        Self::new(u, w, format!("H{h}V{v}"))
    }

    pub fn u(&self) -> &ComplexVector {
        &self.u
    }

    pub fn v(&self) -> &ComplexVector {
        &self.v
    }

    /// Output fields `(T_H·u, T_V·v)`.
    pub fn output_fields(&self, tm: &TransmissionMatrix) -> Result<(ComplexVector, ComplexVector)> {
        Ok((
            tm.propagate_half(Half::H, &self.u)?,
            tm.propagate_half(Half::V, &self.v)?,
        ))
    }
}

/// The two coincidence pathway amplitudes at an ordered output pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairAmplitudes {
    pub a1: Complex64,
    pub a2: Complex64,
}

impl PairAmplitudes {
    pub fn from_output_fields(e_h: &[Complex64], e_v: &[Complex64], x: usize, y: usize) -> Self {
        Self {
            a1: e_h[x] * e_v[y],
            a2: e_h[y] * e_v[x],
        }
    }

    pub fn swapped(self) -> Self {
        Self {
            a1: self.a2,
            a2: self.a1,
        }
    }

    /// Rate for distinguishable photons, `|A1|² + |A2|²`.
    pub fn classical(&self) -> f64 {
        self.a1.norm_sqr() + self.a2.norm_sqr()
    }

    /// Interference term `2·Re(A1·conj(A2))`.
    pub fn interference(&self) -> f64 {
        2.0 * (self.a1 * self.a2.conj()).re
    }
}

fn check_pair(n_out: usize, x: usize, y: usize) -> Result<()> {
    if x >= n_out || y >= n_out {
        return Err(Error::Range(format!(
            "output pair ({x}, {y}) outside {n_out} monitored modes"
        )));
    }
    if x == y {
        return Err(Error::Unsupported(format!(
            "coincidences within one output mode ({x}) are not measurable"
        )));
    }
    Ok(())
}

pub fn pair_amplitude(tm: &TransmissionMatrix, input: &TwoPhotonInput, x: usize, y: usize) -> Result<PairAmplitudes> {
    check_pair(tm.n_out(), x, y)?;
    let (e_h, e_v) = input.output_fields(tm)?;
    Ok(PairAmplitudes::from_output_fields(e_h.as_slice(), e_v.as_slice(), x, y))
}

/// `R = |A1|² + |A2|² + 2·V·Re(A1·conj(A2))`, in units of the pair rate.
pub fn coincidence_rate(amps: &PairAmplitudes, visibility: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&visibility) {
        return Err(Error::Range(format!(
            "interference weight must lie in [0, 1], got {visibility}"
        )));
    }
    Ok((amps.classical() + visibility * amps.interference()).max(0.0))
}

/// Block of predicted coincidence rates: rows are inputs, columns are
/// output pairs, both in the order given.
#[derive(Clone, Debug, PartialEq)]
pub struct TtmBlock {
    pub rates: DMatrix<f64>,
    pub visibility: f64,
    pub pairs: Vec<(usize, usize)>,
}

impl TtmBlock {
    pub fn shape(&self) -> (usize, usize) {
        self.rates.shape()
    }
}

pub fn build_ttm_block(
    tm: &TransmissionMatrix,
    inputs: &[TwoPhotonInput],
    pairs: &[(usize, usize)],
    visibility: f64,
) -> Result<TtmBlock> {
    if inputs.is_empty() || pairs.is_empty() {
        return Err(Error::Config("TTM block needs at least one input and one pair".into()));
    }
    for &(x, y) in pairs {
        check_pair(tm.n_out(), x, y)?;
    }
    let mut rates = DMatrix::zeros(inputs.len(), pairs.len());
    for (i, input) in inputs.iter().enumerate() {
        let (e_h, e_v) = input.output_fields(tm)?;
        for (j, &(x, y)) in pairs.iter().enumerate() {
            let amps = PairAmplitudes::from_output_fields(e_h.as_slice(), e_v.as_slice(), x, y);
            rates[(i, j)] = coincidence_rate(&amps, visibility)?;
        }
    }
    Ok(TtmBlock {
        rates,
        visibility,
        pairs: pairs.to_vec(),
    })
}

/// `C = (R_near − R_far) / R_far`.
pub fn nonclassical_contrast(r_near: f64, r_far: f64) -> Result<f64> {
    if r_far < 0.0 || r_near < 0.0 {
        return Err(Error::Range(format!(
            "rates must be non-negative, got {r_near} and {r_far}"
        )));
    }
    if r_far == 0.0 {
        return Err(Error::UndefinedContrast);
    }
    Ok((r_near - r_far) / r_far)
}

/// Poisson error of a contrast estimated from `n_near` and `n_far` counts
/// taken over `t_near` and `t_far` seconds:
/// `σ_C ≈ (R_near/R_far)·√(1/N_near + 1/N_far)`.
pub fn contrast_sigma(n_near: f64, n_far: f64, t_near: f64, t_far: f64) -> f64 {
    if n_near <= 0.0 || n_far <= 0.0 {
        return f64::NAN;
    }
    let ratio = (n_near / t_near) / (n_far / t_far);
    ratio * (1.0 / n_near + 1.0 / n_far).sqrt()
}

/// Contrast for every entry of two equally shaped blocks. Entries whose
/// distinguishable rate vanishes are NaN and listed in `undefined`.
#[derive(Clone, Debug, PartialEq)]
pub struct ContrastMatrix {
    pub values: DMatrix<f64>,
    pub sigma: Option<DMatrix<f64>>,
    pub delta_near_mm: f64,
    pub delta_far_mm: f64,
    pub undefined: Vec<(usize, usize)>,
}

impl ContrastMatrix {
    pub fn from_rates(near: &DMatrix<f64>, far: &DMatrix<f64>, delta_near_mm: f64, delta_far_mm: f64) -> Result<Self> {
        if near.shape() != far.shape() {
            return Err(Error::DimensionMismatch(format!(
                "contrast needs equal shapes, got {:?} and {:?}",
                near.shape(),
                far.shape()
            )));
        }
        let mut undefined = Vec::new();
        let mut values = DMatrix::zeros(near.nrows(), near.ncols());
        for j in 0..near.ncols() {
            for i in 0..near.nrows() {
                values[(i, j)] = match nonclassical_contrast(near[(i, j)], far[(i, j)]) {
                    Ok(c) => c,
                    Err(Error::UndefinedContrast) => {
                        undefined.push((i, j));
                        f64::NAN
                    }
                    Err(e) => return Err(e),
                };
            }
        }
        Ok(Self {
            values,
            sigma: None,
            delta_near_mm,
            delta_far_mm,
            undefined,
        })
    }

    /// Contrast from raw counts, with Poisson error bars.
    pub fn from_counts(
        near: &DMatrix<f64>,
        far: &DMatrix<f64>,
        duration_near_s: f64,
        duration_far_s: f64,
        delta_near_mm: f64,
        delta_far_mm: f64,
    ) -> Result<Self> {
        let rate_near = near / duration_near_s;
        let rate_far = far / duration_far_s;
        let mut out = Self::from_rates(&rate_near, &rate_far, delta_near_mm, delta_far_mm)?;
        out.sigma = Some(DMatrix::from_fn(near.nrows(), near.ncols(), |i, j| {
            contrast_sigma(near[(i, j)], far[(i, j)], duration_near_s, duration_far_s)
        }));
        Ok(out)
    }

    pub fn max_abs(&self) -> f64 {
        self.values
            .iter()
            .filter(|c| c.is_finite())
            .fold(0.0f64, |m, c| m.max(c.abs()))
    }
}

/// Coincidence rate as a function of the delay between the photons.
pub fn hom_curve(amps: &PairAmplitudes, source: &SourceModel, deltas_mm: &[f64]) -> Result<Vec<(f64, f64)>> {
    if deltas_mm.is_empty() {
        return Err(Error::Config("HOM scan needs at least one delay".into()));
    }
    deltas_mm
        .iter()
        .map(|&d| Ok((d, coincidence_rate(amps, source.mutual_coherence(d))?)))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HomShape {
    Peak,
    Dip,
    Flat,
}

impl HomShape {
    pub fn label(self) -> &'static str {
        match self {
            HomShape::Peak => "peak",
            HomShape::Dip => "dip",
            HomShape::Flat => "flat",
        }
    }
}

/// Relative change `(R(0) − R(∞))/R(∞)` of a scan, taking the point closest
/// to zero delay and the point of largest |δ| as the two references.
pub fn hom_relative_change(curve: &[(f64, f64)]) -> Option<f64> {
    let zero = curve.iter().min_by(|a, b| a.0.abs().total_cmp(&b.0.abs()))?;
    let far = curve.iter().max_by(|a, b| a.0.abs().total_cmp(&b.0.abs()))?;
    (far.1 > 0.0).then(|| (zero.1 - far.1) / far.1)
}

/// Peak if the rate rises at zero delay, dip if it falls, flat if the
/// relative change stays below `flat_tolerance`.
pub fn classify_hom(curve: &[(f64, f64)], flat_tolerance: f64) -> Option<HomShape> {
    let change = hom_relative_change(curve)?;
    Some(if change.abs() < flat_tolerance {
        HomShape::Flat
    } else if change > 0.0 {
        HomShape::Peak
    } else {
        HomShape::Dip
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numcore::ComplexMatrix;
    use crate::tmrecon::{Basis, Provenance};
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn tm(m: ComplexMatrix, n_in_h: usize) -> TransmissionMatrix {
        TransmissionMatrix::new(m, n_in_h, Basis::InputMode, Provenance::Oracle).unwrap()
    }

    fn coupler() -> TransmissionMatrix {
        let s = FRAC_1_SQRT_2;
        tm(
            ComplexMatrix::from_row_slice(2, 2, &[c(s, 0.0), c(s, 0.0), c(s, 0.0), c(-s, 0.0)]),
            1,
        )
    }

    #[test]
    fn identity_amplitudes() {
        let t = tm(ComplexMatrix::identity(2, 2), 1);
        let input = TwoPhotonInput::modes(&t, 0, 0).unwrap();
        let amps = pair_amplitude(&t, &input, 0, 1).unwrap();
        assert_eq!(amps.a1, c(1.0, 0.0));
        assert_eq!(amps.a2, c(0.0, 0.0));
    }

    #[test]
    fn coupler_amplitudes_and_hom_dip() {
        let t = coupler();
        let input = TwoPhotonInput::modes(&t, 0, 0).unwrap();
        let amps = pair_amplitude(&t, &input, 0, 1).unwrap();
        assert!((amps.a1 - c(-0.5, 0.0)).norm() < 1e-15);
        assert!((amps.a2 - c(0.5, 0.0)).norm() < 1e-15);
        assert!(coincidence_rate(&amps, 1.0).unwrap().abs() < 1e-12);
        assert!((coincidence_rate(&amps, 0.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((coincidence_rate(&amps, 0.86).unwrap() - 0.07).abs() < 1e-12);
        assert_eq!(pair_amplitude(&t, &input, 1, 0).unwrap(), amps.swapped());
    }

    #[test]
    fn same_output_rejected() {
        let t = coupler();
        let input = TwoPhotonInput::modes(&t, 0, 0).unwrap();
        assert!(matches!(pair_amplitude(&t, &input, 1, 1), Err(Error::Unsupported(_))));
    }

    #[test]
    fn visibility_out_of_range() {
        let amps = PairAmplitudes {
            a1: c(1.0, 0.0),
            a2: c(0.0, 1.0),
        };
        assert!(coincidence_rate(&amps, 1.5).is_err());
        assert!(coincidence_rate(&amps, -0.1).is_err());
    }

    #[test]
    fn non_unit_input_rejected() {
        let u = ComplexVector::from_element(2, c(1.0, 0.0));
        let v = ComplexVector::from_element(1, c(1.0, 0.0));
        assert!(TwoPhotonInput::new(u.clone(), v.clone(), "x").is_err());
        assert!(TwoPhotonInput::normalized(u, v, "x").is_ok());
    }

    #[test]
    fn contrast_examples() {
        assert!((nonclassical_contrast(1.72, 1.0).unwrap() - 0.72).abs() < 1e-15);
        assert_eq!(nonclassical_contrast(3.0, 3.0).unwrap(), 0.0);
        assert!(matches!(nonclassical_contrast(1.0, 0.0), Err(Error::UndefinedContrast)));
    }

    #[test]
    fn contrast_matrix_flags_zero_denominators() {
        let near = DMatrix::from_row_slice(1, 2, &[1.0, 2.0]);
        let far = DMatrix::from_row_slice(1, 2, &[0.0, 1.0]);
        let cm = ContrastMatrix::from_rates(&near, &far, 0.0, 0.4).unwrap();
        assert!(cm.values[(0, 0)].is_nan());
        assert_eq!(cm.undefined, vec![(0, 0)]);
        assert_eq!(cm.values[(0, 1)], 1.0);
        assert_eq!(cm.max_abs(), 1.0);
    }

    #[test]
    fn sigma_propagation() {
        let s = contrast_sigma(400.0, 100.0, 1.0, 1.0);
        assert!((s - 4.0 * (1.0 / 400.0 + 1.0 / 100.0f64).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn block_matches_scalar_path() {
        let t = tm(crate::numcore::haar_unitary(6, 3).unwrap().into_matrix(), 3);
        let inputs: Vec<_> = (0..3)
            .flat_map(|h| (0..3).map(move |v| (h, v)))
            .map(|(h, v)| TwoPhotonInput::modes(&t, h, v).unwrap())
            .collect();
        let pairs = [(0, 1), (2, 5), (4, 3)];
        let block = build_ttm_block(&t, &inputs, &pairs, 0.7).unwrap();
        assert_eq!(block.shape(), (9, 3));
        for (i, input) in inputs.iter().enumerate() {
            for (j, &(x, y)) in pairs.iter().enumerate() {
                let r = coincidence_rate(&pair_amplitude(&t, input, x, y).unwrap(), 0.7).unwrap();
                assert_eq!(block.rates[(i, j)], r);
            }
        }
        assert!(build_ttm_block(&t, &[], &pairs, 0.7).is_err());
    }

    #[test]
    fn hom_curve_shapes() {
        let src = SourceModel::default();
        let deltas: Vec<f64> = (-10..=10).map(|k| k as f64 * 0.05).collect();
        let bunch = PairAmplitudes {
            a1: c(0.5, 0.0),
            a2: c(0.5, 0.0),
        };
        let anti = PairAmplitudes {
            a1: c(0.5, 0.0),
            a2: c(-0.5, 0.0),
        };
        let quad = PairAmplitudes {
            a1: c(0.5, 0.0),
            a2: c(0.0, 0.5),
        };
        let curve = |a| hom_curve(&a, &src, &deltas).unwrap();
        assert_eq!(classify_hom(&curve(bunch), 0.02), Some(HomShape::Peak));
        assert_eq!(classify_hom(&curve(anti), 0.02), Some(HomShape::Dip));
        assert_eq!(classify_hom(&curve(quad), 0.02), Some(HomShape::Flat));
        let c = curve(bunch);
        for k in 0..c.len() {
            assert_eq!(c[k].1, c[c.len() - 1 - k].1);
        }
        assert!(hom_curve(&bunch, &src, &[]).is_err());
    }
}
