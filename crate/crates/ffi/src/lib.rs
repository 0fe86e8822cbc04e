//! C ABI over the `qwalk` simulator.
//!
//! Conventions:
//! - Every fallible call returns a [`QwStatus`]; results go through out-pointers.
//! - Handles are opaque. Free them with the matching `*_free` function.
//! - On error, [`qw_last_error`] describes the failure for the calling thread.
//! - Panics never cross the boundary; they surface as [`QwStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use qwalk::control::{focus_single, superposition_masks, SlmPattern, SuperpositionTarget};
use qwalk::tmrecon::{self, Reference, TmMeasurement, TransmissionMatrix};
use qwalk::ttm::{self, PairAmplitudes};
use qwalk::virtlab::{Arm, DetectorModel, FiberConfig, LabState, NoiseMode, Photons, SourceModel};
use qwalk::{numcore::cis, Error};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QwStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidDimension = 2,
    DimensionMismatch = 3,
    Range = 4,
    Config = 5,
    Degenerate = 6,
    UndefinedContrast = 7,
    Unsupported = 8,
    InsufficientSteps = 9,
    Format = 10,
    Io = 11,
    InvalidString = 12,
    BufferTooSmall = 13,
    Panic = 99,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QwHalf {
    H = 0,
    V = 1,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QwPhotons {
    H = 0,
    V = 1,
    Both = 2,
}

/// Lab parameters. Fill with [`qw_lab_config_default`] and adjust.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QwLabConfig {
    pub n_in_h: usize,
    pub n_in_v: usize,
    pub n_out: usize,
    /// Size of the random unitary; 0 means `n_in_h + n_in_v + n_out`.
    pub ambient_dim: usize,
    pub fiber_seed: u64,
    pub detector_seed: u64,
    pub visibility: f64,
    pub coherence_scale_mm: f64,
    pub pair_rate: f64,
    pub coincidence_window_s: f64,
    pub dark_rate: f64,
    pub efficiency: f64,
    /// Nonzero enables Poisson counting noise.
    pub poisson: u8,
}

/// Opaque virtual lab.
pub struct QwLab {
    inner: LabState,
}

/// Opaque transmission matrix.
pub struct QwTm {
    inner: TransmissionMatrix,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> QwStatus {
    match err {
        Error::InvalidDimension(_) => QwStatus::InvalidDimension,
        Error::DimensionMismatch(_) => QwStatus::DimensionMismatch,
        Error::Range(_) => QwStatus::Range,
        Error::Config(_) => QwStatus::Config,
        Error::Degenerate(_) => QwStatus::Degenerate,
        Error::UndefinedContrast => QwStatus::UndefinedContrast,
        Error::Unsupported(_) => QwStatus::Unsupported,
        Error::InsufficientSteps(_) => QwStatus::InsufficientSteps,
        Error::Format { .. } => QwStatus::Format,
        Error::Io { .. } => QwStatus::Io,
    }
}

struct Failure(QwStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(QwStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> QwStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => QwStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic".into());
            QwStatus::Panic
        }
    }
}

unsafe fn lab_ref<'a>(lab: *const QwLab) -> Result<&'a QwLab, Failure> {
    lab.as_ref().ok_or_else(|| null("lab"))
}

unsafe fn lab_mut<'a>(lab: *mut QwLab) -> Result<&'a mut QwLab, Failure> {
    lab.as_mut().ok_or_else(|| null("lab"))
}

unsafe fn tm_ref<'a>(tm: *const QwTm) -> Result<&'a QwTm, Failure> {
    tm.as_ref().ok_or_else(|| null("matrix"))
}

unsafe fn write<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

unsafe fn slice<'a>(data: *const f64, len: usize) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if data.is_null() {
        return Err(null("input buffer"));
    }
    Ok(std::slice::from_raw_parts(data, len))
}

unsafe fn fill(out: *mut f64, len: usize, values: &[f64]) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output buffer"));
    }
    if len < values.len() {
        return Err(Failure(
            QwStatus::BufferTooSmall,
            format!("buffer holds {len} values, {} needed", values.len()),
        ));
    }
    ptr::copy_nonoverlapping(values.as_ptr(), out, values.len());
    Ok(())
}

unsafe fn path_arg(path: *const c_char) -> Result<String, Failure> {
    if path.is_null() {
        return Err(null("path"));
    }
    CStr::from_ptr(path)
        .to_str()
        .map(str::to_owned)
        .map_err(|_| Failure(QwStatus::InvalidString, "path is not valid UTF-8".into()))
}

fn half(h: QwHalf) -> tmrecon::Half {
    match h {
        QwHalf::H => tmrecon::Half::H,
        QwHalf::V => tmrecon::Half::V,
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn qw_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn qw_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// # Safety
/// `out` must be null or point to writable memory for one `QwLabConfig`.
#[no_mangle]
pub unsafe extern "C" fn qw_lab_config_default(out: *mut QwLabConfig) -> QwStatus {
    guard(|| {
        let (f, s, d) = (FiberConfig::default(), SourceModel::default(), DetectorModel::default());
        let cfg = QwLabConfig {
            n_in_h: f.n_in_h,
            n_in_v: f.n_in_v,
            n_out: f.n_out,
            ambient_dim: 0,
            fiber_seed: f.seed,
            detector_seed: d.seed,
            visibility: s.visibility,
            coherence_scale_mm: s.coherence_scale_mm,
            pair_rate: s.pair_rate,
            coincidence_window_s: d.coincidence_window_s,
            dark_rate: d.dark_rate,
            efficiency: d.efficiency,
            poisson: u8::from(d.noise == NoiseMode::Poisson),
        };
        write(out, cfg, "config")
    })
}

/// # Safety
/// `cfg` must be null or point to a valid `QwLabConfig`; `out` must be null
/// or writable. On success `*out` owns a lab to be released by `qw_lab_free`.
#[no_mangle]
pub unsafe extern "C" fn qw_lab_new(cfg: *const QwLabConfig, out: *mut *mut QwLab) -> QwStatus {
    guard(|| {
        let c = cfg.as_ref().ok_or_else(|| null("config"))?;
        if out.is_null() {
            return Err(null("output handle"));
        }
        let fiber = FiberConfig {
            n_in_h: c.n_in_h,
            n_in_v: c.n_in_v,
            n_out: c.n_out,
            ambient_dim: (c.ambient_dim != 0).then_some(c.ambient_dim),
            seed: c.fiber_seed,
        };
        let source = SourceModel {
            visibility: c.visibility,
            coherence_scale_mm: c.coherence_scale_mm,
            pair_rate: c.pair_rate,
            ..SourceModel::default()
        };
        let detector = DetectorModel {
            coincidence_window_s: c.coincidence_window_s,
            dark_rate: c.dark_rate,
            efficiency: c.efficiency,
            noise: if c.poisson != 0 {
                NoiseMode::Poisson
            } else {
                NoiseMode::Noiseless
            },
            seed: c.detector_seed,
        };
        let lab = LabState::new(fiber, source, detector)?;
        out.write(Box::into_raw(Box::new(QwLab { inner: lab })));
        Ok(())
    })
}

/// # Safety
/// `lab` must be null or a handle from `qw_lab_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qw_lab_free(lab: *mut QwLab) {
    if !lab.is_null() {
        drop(Box::from_raw(lab));
    }
}

/// # Safety
/// `lab` must be a live handle; out-pointers must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn qw_lab_dims(
    lab: *const QwLab,
    n_in_h: *mut usize,
    n_in_v: *mut usize,
    n_out: *mut usize,
) -> QwStatus {
    guard(|| {
        let l = &lab_ref(lab)?.inner;
        write(n_in_h, l.half_len(tmrecon::Half::H), "n_in_h")?;
        write(n_in_v, l.half_len(tmrecon::Half::V), "n_in_v")?;
        write(n_out, l.n_out(), "n_out")
    })
}

/// Camera grid of the output plane (`rows * cols >= n_out`).
///
/// # Safety
/// `lab` must be a live handle; out-pointers must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn qw_lab_grid(lab: *const QwLab, rows: *mut usize, cols: *mut usize) -> QwStatus {
    guard(|| {
        let g = lab_ref(lab)?.inner.grid();
        write(rows, g.rows, "rows")?;
        write(cols, g.cols, "cols")
    })
}

/// # Safety
/// `lab` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn qw_lab_set_delay(lab: *mut QwLab, delay_mm: f64) -> QwStatus {
    guard(|| {
        if !delay_mm.is_finite() {
            return Err(Failure(QwStatus::Range, "delay must be finite".into()));
        }
        lab_mut(lab)?.inner.set_delay(delay_mm);
        Ok(())
    })
}

/// # Safety
/// `lab` must be a live handle and `phases` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn qw_lab_set_slm(lab: *mut QwLab, which: QwHalf, phases: *const f64, len: usize) -> QwStatus {
    guard(|| {
        let l = lab_mut(lab)?;
        let pattern = SlmPattern::new(half(which), slice(phases, len)?.to_vec())?;
        l.inner.set_slm(half(which), &pattern)?;
        Ok(())
    })
}

/// # Safety
/// `lab` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn qw_lab_set_input_mode(lab: *mut QwLab, which: QwHalf, mode: usize) -> QwStatus {
    guard(|| {
        lab_mut(lab)?.inner.set_input_mode(half(which), mode)?;
        Ok(())
    })
}

/// Counts accumulated over `duration_s` between F1 at `x` and F2 at `y`.
///
/// # Safety
/// `lab` must be a live handle; `counts` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn qw_lab_count_coincidences(
    lab: *mut QwLab,
    x: usize,
    y: usize,
    duration_s: f64,
    counts: *mut f64,
) -> QwStatus {
    guard(|| {
        let l = &mut lab_mut(lab)?.inner;
        let (px, py) = (l.position(x)?, l.position(y)?);
        let rec = l.count_coincidences(&px, &py, duration_s)?;
        write(counts, rec.counts, "counts")
    })
}

/// Expected coincidence rate, accidentals included.
///
/// # Safety
/// `lab` must be a live handle; `rate` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn qw_lab_coincidence_rate(lab: *const QwLab, x: usize, y: usize, rate: *mut f64) -> QwStatus {
    guard(|| {
        let l = &lab_ref(lab)?.inner;
        let (px, py) = (l.position(x)?, l.position(y)?);
        write(rate, l.coincidence_rate(&px, &py)?, "rate")
    })
}

/// # Safety
/// `lab` must be a live handle; `rate` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn qw_lab_singles_rate(lab: *const QwLab, pos: usize, rate: *mut f64) -> QwStatus {
    guard(|| {
        let l = &lab_ref(lab)?.inner;
        let p = l.position(pos)?;
        write(rate, l.singles_rate(&p, Arm::F1)?, "rate")
    })
}

/// Camera frame, row-major over the grid from [`qw_lab_grid`].
///
/// # Safety
/// `lab` must be a live handle and `out` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn qw_lab_intensity_image(
    lab: *mut QwLab,
    which: QwPhotons,
    exposure_s: f64,
    out: *mut f64,
    len: usize,
) -> QwStatus {
    guard(|| {
        let photons = match which {
            QwPhotons::H => Photons::H,
            QwPhotons::V => Photons::V,
            QwPhotons::Both => Photons::Both,
        };
        let image = lab_mut(lab)?.inner.intensity_image(photons, exposure_s)?;
        fill(out, len, &image.pixels)
    })
}

/// Phase-stepping measurement. `reference_mode < 0` selects an external
/// plane reference; otherwise that input mode serves as the reference. The
/// returned matrix is calibrated by the measured reference magnitude.
///
/// # Safety
/// `lab` must be a live handle; `out` must be null or writable. On success
/// `*out` must be released with `qw_tm_free`.
#[no_mangle]
pub unsafe extern "C" fn qw_tm_measure(
    lab: *mut QwLab,
    reference_mode: i64,
    phase_steps: usize,
    exposure_s: f64,
    out: *mut *mut QwTm,
) -> QwStatus {
    guard(|| {
        let l = lab_mut(lab)?;
        if out.is_null() {
            return Err(null("output handle"));
        }
        let plan = TmMeasurement {
            reference: if reference_mode < 0 {
                Reference::External
            } else {
                Reference::Internal(reference_mode as usize)
            },
            phase_steps,
            exposure_s,
            probes: None,
        };
        let measured = tmrecon::measure_tm(&mut l.inner, &plan)?;
        out.write(Box::into_raw(Box::new(QwTm {
            inner: measured.calibrated(),
        })));
        Ok(())
    })
}

/// Copy of the lab's hidden matrix, for validation.
///
/// # Safety
/// `lab` must be a live handle; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn qw_tm_oracle(lab: *const QwLab, out: *mut *mut QwTm) -> QwStatus {
    guard(|| {
        let l = lab_ref(lab)?;
        if out.is_null() {
            return Err(null("output handle"));
        }
        out.write(Box::into_raw(Box::new(QwTm {
            inner: l.inner.true_transmission_matrix(),
        })));
        Ok(())
    })
}

/// # Safety
/// `tm` must be null or a live matrix handle.
#[no_mangle]
pub unsafe extern "C" fn qw_tm_free(tm: *mut QwTm) {
    if !tm.is_null() {
        drop(Box::from_raw(tm));
    }
}

/// # Safety
/// `tm` must be a live handle; out-pointers must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn qw_tm_dims(
    tm: *const QwTm,
    rows: *mut usize,
    cols: *mut usize,
    n_in_h: *mut usize,
) -> QwStatus {
    guard(|| {
        let t = &tm_ref(tm)?.inner;
        write(rows, t.n_out(), "rows")?;
        write(cols, t.n_in(), "cols")?;
        write(n_in_h, t.n_in_h(), "n_in_h")
    })
}

/// # Safety
/// `tm` must be a live handle; out-pointers must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn qw_tm_entry(tm: *const QwTm, row: usize, col: usize, re: *mut f64, im: *mut f64) -> QwStatus {
    guard(|| {
        let t = &tm_ref(tm)?.inner;
        if row >= t.n_out() || col >= t.n_in() {
            return Err(Failure(
                QwStatus::Range,
                format!("entry ({row}, {col}) outside the matrix"),
            ));
        }
        let z = t.entry(row, col);
        write(re, z.re, "re")?;
        write(im, z.im, "im")
    })
}

/// # Safety
/// `tm` must be a live handle and `path` a NUL-terminated UTF-8 string.
#[no_mangle]
pub unsafe extern "C" fn qw_tm_save(tm: *const QwTm, path: *const c_char) -> QwStatus {
    guard(|| {
        let t = tm_ref(tm)?;
        tmrecon::write_qwtm(path_arg(path)?, &t.inner)?;
        Ok(())
    })
}

/// # Safety
/// `path` must be a NUL-terminated UTF-8 string; `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn qw_tm_load(path: *const c_char, out: *mut *mut QwTm) -> QwStatus {
    guard(|| {
        let p = path_arg(path)?;
        if out.is_null() {
            return Err(null("output handle"));
        }
        let tm = tmrecon::read_qwtm(p)?;
        out.write(Box::into_raw(Box::new(QwTm { inner: tm })));
        Ok(())
    })
}

/// Row-phase-invariant fidelity between two matrices of equal shape.
///
/// # Safety
/// Both handles must be live; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn qw_tm_fidelity(a: *const QwTm, b: *const QwTm, out: *mut f64) -> QwStatus {
    guard(|| {
        let (a, b) = (tm_ref(a)?, tm_ref(b)?);
        let f = tmrecon::row_fidelity(a.inner.matrix(), b.inner.matrix(), &[])?;
        write(out, f, "fidelity")
    })
}

/// Phase-conjugation mask focusing one SLM half onto output `x`.
///
/// # Safety
/// `tm` must be a live handle and `phases` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn qw_focus(tm: *const QwTm, x: usize, which: QwHalf, phases: *mut f64, len: usize) -> QwStatus {
    guard(|| {
        let p = focus_single(&tm_ref(tm)?.inner, x, half(which))?;
        fill(phases, len, p.phases())
    })
}

/// Masks sending both photons to `(|x⟩ + e^{iφ}|y⟩)/√2`.
///
/// # Safety
/// `tm` must be a live handle; `phases_h`/`phases_v` must hold `len_h`/`len_v` values.
#[no_mangle]
pub unsafe extern "C" fn qw_superposition(
    tm: *const QwTm,
    x: usize,
    y: usize,
    phi_h: f64,
    phi_v: f64,
    phases_h: *mut f64,
    len_h: usize,
    phases_v: *mut f64,
    len_v: usize,
) -> QwStatus {
    guard(|| {
        let target = SuperpositionTarget { x, y, phi_h, phi_v };
        let (h, v) = superposition_masks(&tm_ref(tm)?.inner, &target)?;
        fill(phases_h, len_h, h.phases())?;
        fill(phases_v, len_v, v.phases())
    })
}

/// `|A1|² + |A2|² + 2·V·Re(A1·conj(A2))` for pathway amplitudes in polar form.
///
/// # Safety
/// `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn qw_coincidence_rate(
    a1_abs: f64,
    a1_arg: f64,
    a2_abs: f64,
    a2_arg: f64,
    visibility: f64,
    out: *mut f64,
) -> QwStatus {
    guard(|| {
        let amps = PairAmplitudes {
            a1: cis(a1_arg) * a1_abs,
            a2: cis(a2_arg) * a2_abs,
        };
        write(out, ttm::coincidence_rate(&amps, visibility)?, "rate")
    })
}
