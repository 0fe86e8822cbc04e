//! Flat `key = value` experiment configuration.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::tmrecon::{Reference, TmMeasurement};
use crate::virtlab::{DetectorModel, FiberConfig, NoiseMode, SourceModel};

/// Everything a command needs to build its lab and acquisitions.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub fiber: FiberConfig,
    pub source: SourceModel,
    pub detector: DetectorModel,
    pub probe_rate: f64,
    pub tm: TmMeasurement,
    /// Design masks from the oracle matrix instead of a measured one.
    pub design_from_oracle: bool,
    pub delta_near_mm: f64,
    pub delta_far_mm: f64,
    pub duration_matrix_s: f64,
    pub duration_scan_s: f64,
    pub image_exposure_s: f64,
    pub matrix_inputs_h: Vec<usize>,
    pub matrix_inputs_v: Vec<usize>,
    pub matrix_f1: Vec<usize>,
    pub matrix_f2: Vec<usize>,
    pub target_x: usize,
    pub target_y: usize,
    pub scan_width: usize,
    pub grid_size: usize,
    pub hom_deltas_mm: Vec<f64>,
    pub flat_tolerance: f64,
    pub out_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            fiber: FiberConfig::default(),
            source: SourceModel::default(),
            detector: DetectorModel::default(),
            probe_rate: crate::virtlab::DEFAULT_PROBE_RATE,
            tm: TmMeasurement::default(),
            design_from_oracle: false,
            delta_near_mm: 0.0,
            delta_far_mm: 0.4,
            duration_matrix_s: 900.0,
            duration_scan_s: 290.0,
            image_exposure_s: 1.0,
            matrix_inputs_h: vec![0, 1, 2, 3],
            matrix_inputs_v: vec![0, 1, 2, 3],
            matrix_f1: vec![22, 27],
            matrix_f2: vec![72, 77],
            target_x: 23,
            target_y: 76,
            scan_width: 5,
            grid_size: 8,
            hom_deltas_mm: (-12..=12).map(|k| k as f64 * 0.05).collect(),
            flat_tolerance: 0.02,
            out_dir: PathBuf::from("out"),
        }
    }
}

/// Values given on the command line, applied after the file.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub noise: Option<NoiseMode>,
    pub out_dir: Option<PathBuf>,
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse '{value}'")))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(key, s))
        .collect()
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

pub fn parse_noise(value: &str) -> Result<NoiseMode> {
    match value {
        "off" | "none" | "noiseless" => Ok(NoiseMode::Noiseless),
        "poisson" => Ok(NoiseMode::Poisson),
        other => Err(Error::Config(format!("noise must be off or poisson, got '{other}'"))),
    }
}

fn noise_label(mode: NoiseMode) -> &'static str {
    match mode {
        NoiseMode::Noiseless => "off",
        NoiseMode::Poisson => "poisson",
    }
}

fn parse_reference(value: &str) -> Result<Reference> {
    if value == "external" {
        return Ok(Reference::External);
    }
    match value.strip_prefix("internal:") {
        Some(mode) => Ok(Reference::Internal(parse("reference", mode)?)),
        None => Err(Error::Config(format!(
            "reference must be external or internal:<mode>, got '{value}'"
        ))),
    }
}

fn reference_label(r: Reference) -> String {
    match r {
        Reference::External => "external".into(),
        Reference::Internal(m) => format!("internal:{m}"),
    }
}

impl ExperimentConfig {
    /// Parses `key = value` lines; `#` starts a comment.
    pub fn parse_str(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut seen = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", lineno + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            if seen.insert(key.to_string(), ()).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key '{key}'", lineno + 1)));
            }
            cfg.set(key, value)?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_str(&text)
    }

    fn set(&mut self, key: &str, v: &str) -> Result<()> {
        match key {
            "n_in_h" => self.fiber.n_in_h = parse(key, v)?,
            "n_in_v" => self.fiber.n_in_v = parse(key, v)?,
            "n_out" => self.fiber.n_out = parse(key, v)?,
            "ambient_dim" => self.fiber.ambient_dim = if v == "auto" { None } else { Some(parse(key, v)?) },
            "seed" => {
                let seed = parse(key, v)?;
                self.fiber.seed = seed;
                self.detector.seed = seed;
            }
            "detector_seed" => self.detector.seed = parse(key, v)?,
            "wavelength_nm" => self.source.wavelength_nm = parse(key, v)?,
            "filter_fwhm_nm" => self.source.filter_fwhm_nm = parse(key, v)?,
            "visibility" => self.source.visibility = parse(key, v)?,
            "coherence_scale_mm" => self.source.coherence_scale_mm = parse(key, v)?,
            "pair_rate" => self.source.pair_rate = parse(key, v)?,
            "coincidence_window_s" => self.detector.coincidence_window_s = parse(key, v)?,
            "dark_rate" => self.detector.dark_rate = parse(key, v)?,
            "efficiency" => self.detector.efficiency = parse(key, v)?,
            "noise" => self.detector.noise = parse_noise(v)?,
            "probe_rate" => self.probe_rate = parse(key, v)?,
            "reference" => self.tm.reference = parse_reference(v)?,
            "phase_steps" => self.tm.phase_steps = parse(key, v)?,
            "tm_exposure_s" => self.tm.exposure_s = parse(key, v)?,
            "design_tm" => {
                self.design_from_oracle = match v {
                    "oracle" => true,
                    "measured" => false,
                    _ => {
                        return Err(Error::Config(format!(
                            "design_tm must be oracle or measured, got '{v}'"
                        )))
                    }
                }
            }
            "delta_near_mm" => self.delta_near_mm = parse(key, v)?,
            "delta_far_mm" => self.delta_far_mm = parse(key, v)?,
            "duration_matrix_s" => self.duration_matrix_s = parse(key, v)?,
            "duration_scan_s" => self.duration_scan_s = parse(key, v)?,
            "image_exposure_s" => self.image_exposure_s = parse(key, v)?,
            "matrix_inputs_h" => self.matrix_inputs_h = parse_list(key, v)?,
            "matrix_inputs_v" => self.matrix_inputs_v = parse_list(key, v)?,
            "matrix_f1" => self.matrix_f1 = parse_list(key, v)?,
            "matrix_f2" => self.matrix_f2 = parse_list(key, v)?,
            "target_x" => self.target_x = parse(key, v)?,
            "target_y" => self.target_y = parse(key, v)?,
            "scan_width" => self.scan_width = parse(key, v)?,
            "grid_size" => self.grid_size = parse(key, v)?,
            "hom_deltas_mm" => self.hom_deltas_mm = parse_list(key, v)?,
            "flat_tolerance" => self.flat_tolerance = parse(key, v)?,
            "out" => self.out_dir = PathBuf::from(v),
            _ => return Err(Error::Config(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(seed) = o.seed {
            self.fiber.seed = seed;
            self.detector.seed = seed;
        }
        if let Some(noise) = o.noise {
            self.detector.noise = noise;
        }
        if let Some(dir) = &o.out_dir {
            self.out_dir = dir.clone();
        }
    }

    /// Checks everything that can be checked before building the lab.
    pub fn validate(&self) -> Result<()> {
        let as_config = |e: Error| match e {
            Error::Config(_) => e,
            other => Error::Config(other.to_string()),
        };
        self.fiber.validate().map_err(as_config)?;
        self.source.validate().map_err(as_config)?;
        self.detector.validate().map_err(as_config)?;
        if self.tm.phase_steps < 3 {
            return Err(Error::Config(format!(
                "phase_steps must be at least 3, got {}",
                self.tm.phase_steps
            )));
        }
        for (name, t) in [
            ("duration_matrix_s", self.duration_matrix_s),
            ("duration_scan_s", self.duration_scan_s),
            ("image_exposure_s", self.image_exposure_s),
            ("tm_exposure_s", self.tm.exposure_s),
            ("probe_rate", self.probe_rate),
        ] {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {t}")));
            }
        }
        for (name, d) in [
            ("delta_near_mm", self.delta_near_mm),
            ("delta_far_mm", self.delta_far_mm),
        ] {
            if !d.is_finite() {
                return Err(Error::Config(format!("{name} must be finite")));
            }
        }
        let n_out = self.fiber.n_out;
        let check_outputs = |name: &str, xs: &[usize]| -> Result<()> {
            match xs.iter().find(|&&x| x >= n_out) {
                Some(x) => Err(Error::Config(format!("{name}: output {x} outside {n_out} modes"))),
                None => Ok(()),
            }
        };
        let check_inputs = |name: &str, xs: &[usize], n: usize| -> Result<()> {
            match xs.iter().find(|&&x| x >= n) {
                Some(x) => Err(Error::Config(format!("{name}: input mode {x} outside {n} modes"))),
                None => Ok(()),
            }
        };
        check_inputs("matrix_inputs_h", &self.matrix_inputs_h, self.fiber.n_in_h)?;
        check_inputs("matrix_inputs_v", &self.matrix_inputs_v, self.fiber.n_in_v)?;
        check_outputs("matrix_f1", &self.matrix_f1)?;
        check_outputs("matrix_f2", &self.matrix_f2)?;
        check_outputs("target_x", &[self.target_x])?;
        check_outputs("target_y", &[self.target_y])?;
        if let Reference::Internal(m) = self.tm.reference {
            check_inputs("reference", &[m], self.fiber.n_in())?;
        }
        if self.matrix_inputs_h.is_empty()
            || self.matrix_inputs_v.is_empty()
            || self.matrix_f1.is_empty()
            || self.matrix_f2.is_empty()
        {
            return Err(Error::Config(
                "coincidence-matrix inputs and positions must be non-empty".into(),
            ));
        }
        if self.matrix_f1.iter().any(|a| self.matrix_f2.contains(a)) {
            return Err(Error::Config("matrix_f1 and matrix_f2 must not share an output".into()));
        }
        if self.target_x == self.target_y {
            return Err(Error::Config("target_x and target_y must differ".into()));
        }
        if self.scan_width == 0 || self.scan_width > n_out {
            return Err(Error::Config(format!("scan_width must lie in 1..={n_out}")));
        }
        let (sx, sy) = (self.scan_f1(), self.scan_f2());
        if sx.iter().any(|a| sy.contains(a)) {
            return Err(Error::Config("focus scan windows around the targets overlap".into()));
        }
        if self.grid_size < 3 {
            return Err(Error::Config("grid_size must be at least 3".into()));
        }
        if self.hom_deltas_mm.is_empty() || self.hom_deltas_mm.iter().any(|d| !d.is_finite()) {
            return Err(Error::Config(
                "hom_deltas_mm must be a non-empty list of numbers".into(),
            ));
        }
        Ok(())
    }

    fn window(&self, center: usize) -> Vec<usize> {
        let w = self.scan_width;
        let start = center.saturating_sub(w / 2).min(self.fiber.n_out - w);
        (start..start + w).collect()
    }

    /// F1 scan positions: a window of consecutive outputs around `target_x`.
    pub fn scan_f1(&self) -> Vec<usize> {
        self.window(self.target_x)
    }

    pub fn scan_f2(&self) -> Vec<usize> {
        self.window(self.target_y)
    }

    /// Resolved values of every key, for the run manifest.
    pub fn echo(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        let mut put = |k: &str, v: String| {
            m.insert(k.to_string(), v);
        };
        put("n_in_h", self.fiber.n_in_h.to_string());
        put("n_in_v", self.fiber.n_in_v.to_string());
        put("n_out", self.fiber.n_out.to_string());
        put("ambient_dim", self.fiber.ambient().to_string());
        put("seed", self.fiber.seed.to_string());
        put("detector_seed", self.detector.seed.to_string());
        put("wavelength_nm", self.source.wavelength_nm.to_string());
        put("filter_fwhm_nm", self.source.filter_fwhm_nm.to_string());
        put("visibility", self.source.visibility.to_string());
        put("coherence_scale_mm", self.source.coherence_scale_mm.to_string());
        put("pair_rate", self.source.pair_rate.to_string());
        put("coincidence_window_s", self.detector.coincidence_window_s.to_string());
        put("dark_rate", self.detector.dark_rate.to_string());
        put("efficiency", self.detector.efficiency.to_string());
        put("noise", noise_label(self.detector.noise).to_string());
        put("probe_rate", self.probe_rate.to_string());
        put("reference", reference_label(self.tm.reference));
        put("phase_steps", self.tm.phase_steps.to_string());
        put("tm_exposure_s", self.tm.exposure_s.to_string());
        put(
            "design_tm",
            if self.design_from_oracle { "oracle" } else { "measured" }.to_string(),
        );
        put("delta_near_mm", self.delta_near_mm.to_string());
        put("delta_far_mm", self.delta_far_mm.to_string());
        put("duration_matrix_s", self.duration_matrix_s.to_string());
        put("duration_scan_s", self.duration_scan_s.to_string());
        put("image_exposure_s", self.image_exposure_s.to_string());
        put("matrix_inputs_h", join(&self.matrix_inputs_h));
        put("matrix_inputs_v", join(&self.matrix_inputs_v));
        put("matrix_f1", join(&self.matrix_f1));
        put("matrix_f2", join(&self.matrix_f2));
        put("target_x", self.target_x.to_string());
        put("target_y", self.target_y.to_string());
        put("scan_width", self.scan_width.to_string());
        put("grid_size", self.grid_size.to_string());
        put("hom_deltas_mm", join(&self.hom_deltas_mm));
        put("flat_tolerance", self.flat_tolerance.to_string());
        m
    }

    /// Serializes the resolved configuration back to the file format.
    pub fn to_config_text(&self) -> String {
        // `seed` also sets the detector seed, so it must precede `detector_seed`.
        let mut echo = self.echo();
        let seed = echo.remove("seed").expect("seed is always echoed");
        std::iter::once(("seed".to_string(), seed))
            .chain(echo)
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }
}
