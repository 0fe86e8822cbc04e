use std::f64::consts::{PI, TAU};

use nalgebra::DMatrix;
use serde::Serialize;

use super::config::ExperimentConfig;
use super::output::{pgm_artifacts, Artifact, Csv};
use crate::control::{fit_phase_law, focus_independent, superposition_masks, SlmPattern, SuperpositionTarget};
use crate::error::Result;
use crate::tmrecon::{measure_tm, tm_fidelity, Half, TransmissionMatrix};
use crate::ttm::{classify_hom, contrast_sigma, hom_relative_change, nonclassical_contrast, ContrastMatrix};
use crate::virtlab::{Arm, LabState, Photons};

/// Artifacts of one command plus its typed summary (also emitted as JSON).
#[derive(Clone, Debug)]
pub struct Run<S> {
    pub summary: S,
    pub artifacts: Vec<Artifact>,
}

pub fn build_lab(cfg: &ExperimentConfig) -> Result<LabState> {
    cfg.validate()?;
    LabState::new(cfg.fiber.clone(), cfg.source.clone(), cfg.detector.clone())?.with_probe_rate(cfg.probe_rate)
}

/// Matrix used for inverse design: measured in the lab unless the config
/// asks for the oracle.
fn design_matrix(cfg: &ExperimentConfig, lab: &mut LabState) -> Result<TransmissionMatrix> {
    if cfg.design_from_oracle {
        Ok(lab.true_transmission_matrix())
    } else {
        Ok(measure_tm(lab, &cfg.tm)?.calibrated())
    }
}

fn mask_artifact(name: &str, p: &SlmPattern) -> Artifact {
    let mut csv = Csv::new(&["index", "phase"]);
    for (i, &t) in p.phases().iter().enumerate() {
        csv.numeric_row(&[i as f64, t]);
    }
    csv.into_artifact(name)
}

fn set_masks(lab: &mut LabState, h: &SlmPattern, v: &SlmPattern) -> Result<()> {
    lab.set_slm(Half::H, h)?;
    lab.set_slm(Half::V, v)
}

/// Counts per output pair for the current masks and delay.
fn count_grid(lab: &mut LabState, f1: &[usize], f2: &[usize], duration_s: f64) -> Result<DMatrix<f64>> {
    let mut m = DMatrix::zeros(f1.len(), f2.len());
    for (i, &a) in f1.iter().enumerate() {
        let pa = lab.position(a)?;
        for (j, &b) in f2.iter().enumerate() {
            let pb = lab.position(b)?;
            m[(i, j)] = lab.count_coincidences(&pa, &pb, duration_s)?.counts;
        }
    }
    Ok(m)
}

fn count_at(lab: &mut LabState, x: usize, y: usize, delay_mm: f64, duration_s: f64) -> Result<f64> {
    lab.set_delay(delay_mm);
    let (px, py) = (lab.position(x)?, lab.position(y)?);
    Ok(lab.count_coincidences(&px, &py, duration_s)?.counts)
}

fn grid_csv(row_name: &str, rows: &[usize], cols: &[usize], m: &DMatrix<f64>) -> Csv {
    let mut header = vec![row_name.to_string()];
    header.extend(cols.iter().map(|c| format!("F2_{c}")));
    let mut csv = Csv::new(&header);
    for (i, r) in rows.iter().enumerate() {
        let values: Vec<f64> = m.row(i).iter().copied().collect();
        csv.row(format!("F1_{r}"), &values);
    }
    csv
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TmReport {
    pub fidelity: f64,
    pub unreliable_rows: usize,
    pub n_out: usize,
    pub n_in: usize,
    pub n_in_h: usize,
    pub phase_steps: usize,
    pub probed_columns: usize,
}

pub fn measure_tm_cmd(cfg: &ExperimentConfig) -> Result<Run<TmReport>> {
    let mut lab = build_lab(cfg)?;
    let measured = measure_tm(&mut lab, &cfg.tm)?;
    let truth = lab.true_transmission_matrix();
    let summary = TmReport {
        fidelity: tm_fidelity(&measured, &truth)?,
        unreliable_rows: measured.unreliable_count(),
        n_out: truth.n_out(),
        n_in: truth.n_in(),
        n_in_h: truth.n_in_h(),
        phase_steps: measured.phase_steps(),
        probed_columns: measured.probed_columns().len(),
    };
    let tm = measured.calibrated();
    let artifacts = vec![
        Artifact::new("tm.qwtm", crate::tmrecon::encode_qwtm(&tm)),
        Artifact::json("tm_report.json", &summary),
    ];
    Ok(Run { summary, artifacts })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TtmMatrixSummary {
    pub rows: usize,
    pub cols: usize,
    pub inputs: Vec<String>,
    pub pairs: Vec<String>,
    pub max_abs_contrast: f64,
    /// `(input, pair)` entries whose distinguishable count was zero.
    pub undefined_contrast: Vec<(usize, usize)>,
    pub duration_s: f64,
    pub delta_near_mm: f64,
    pub delta_far_mm: f64,
}

pub fn ttm_matrix_cmd(cfg: &ExperimentConfig) -> Result<Run<TtmMatrixSummary>> {
    let mut lab = build_lab(cfg)?;
    let mut inputs = Vec::new();
    for &h in &cfg.matrix_inputs_h {
        for &v in &cfg.matrix_inputs_v {
            inputs.push((h, v));
        }
    }
    let mut pairs = Vec::new();
    for &a in &cfg.matrix_f1 {
        for &b in &cfg.matrix_f2 {
            pairs.push((a, b));
        }
    }
    let t = cfg.duration_matrix_s;
    let mut near = DMatrix::zeros(inputs.len(), pairs.len());
    let mut far = DMatrix::zeros(inputs.len(), pairs.len());
    for (i, &(h, v)) in inputs.iter().enumerate() {
        lab.set_input_mode(Half::H, h)?;
        lab.set_input_mode(Half::V, v)?;
        for (j, &(a, b)) in pairs.iter().enumerate() {
            near[(i, j)] = count_at(&mut lab, a, b, cfg.delta_near_mm, t)?;
            far[(i, j)] = count_at(&mut lab, a, b, cfg.delta_far_mm, t)?;
        }
    }
    let contrast = ContrastMatrix::from_counts(&near, &far, t, t, cfg.delta_near_mm, cfg.delta_far_mm)?;

    let input_labels: Vec<String> = inputs.iter().map(|(h, v)| format!("H{h}V{v}")).collect();
    let pair_labels: Vec<String> = pairs.iter().map(|(a, b)| format!("F1_{a}-F2_{b}")).collect();
    let table = |m: &DMatrix<f64>| {
        let mut header = vec!["input".to_string()];
        header.extend(pair_labels.iter().cloned());
        let mut csv = Csv::new(&header);
        for (i, label) in input_labels.iter().enumerate() {
            csv.row(label, &m.row(i).iter().copied().collect::<Vec<_>>());
        }
        csv
    };
    let mut artifacts = vec![
        table(&near).into_artifact("coincidences_near.csv"),
        table(&far).into_artifact("coincidences_far.csv"),
    ];
    let sigma = contrast.sigma.clone().expect("contrast from counts carries sigma");
    let mut header = vec!["input".to_string()];
    header.extend(pair_labels.iter().map(|p| format!("C_{p}")));
    header.extend(pair_labels.iter().map(|p| format!("sigma_{p}")));
    let mut csv = Csv::new(&header);
    for (i, label) in input_labels.iter().enumerate() {
        let mut values: Vec<f64> = contrast.values.row(i).iter().copied().collect();
        values.extend(sigma.row(i).iter().copied());
        csv.row(label, &values);
    }
    artifacts.push(csv.into_artifact("contrast.csv"));

    let (h0, v0) = inputs[0];
    lab.set_input_mode(Half::H, h0)?;
    lab.set_input_mode(Half::V, v0)?;
    for (stem, which) in [
        ("speckle_h", Photons::H),
        ("speckle_v", Photons::V),
        ("speckle_both", Photons::Both),
    ] {
        let image = lab.intensity_image(which, cfg.image_exposure_s)?;
        artifacts.extend(pgm_artifacts(stem, &image));
    }

    let summary = TtmMatrixSummary {
        rows: inputs.len(),
        cols: pairs.len(),
        inputs: input_labels,
        pairs: pair_labels,
        max_abs_contrast: contrast.max_abs(),
        undefined_contrast: contrast.undefined.clone(),
        duration_s: t,
        delta_near_mm: cfg.delta_near_mm,
        delta_far_mm: cfg.delta_far_mm,
    };
    artifacts.push(Artifact::json("summary.json", &summary));
    Ok(Run { summary, artifacts })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FocusConfigSummary {
    pub label: &'static str,
    pub target_counts_near: f64,
    pub target_counts_far: f64,
    pub background_mean_near: f64,
    pub enhancement: f64,
    pub contrast_at_target: f64,
    pub contrast_sigma: f64,
    pub intensity_enhancement_h: f64,
    pub intensity_enhancement_v: f64,
    pub singles_x_near: f64,
    pub singles_x_far: f64,
    pub singles_y_near: f64,
    pub singles_y_far: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FocusSummary {
    pub target_x: usize,
    pub target_y: usize,
    pub scan_f1: Vec<usize>,
    pub scan_f2: Vec<usize>,
    pub duration_s: f64,
    pub independent: FocusConfigSummary,
    pub superposition: FocusConfigSummary,
}

/// `I(x) / mean over the other outputs` of one camera frame.
fn spot_enhancement(pixels: &[f64], x: usize) -> f64 {
    let others: f64 = pixels.iter().enumerate().filter(|&(i, _)| i != x).map(|(_, v)| v).sum();
    pixels[x] / (others / (pixels.len() - 1) as f64)
}

fn focus_config(
    cfg: &ExperimentConfig,
    lab: &mut LabState,
    label: &'static str,
    stem: &str,
    masks: (SlmPattern, SlmPattern),
    artifacts: &mut Vec<Artifact>,
) -> Result<FocusConfigSummary> {
    let (x, y) = (cfg.target_x, cfg.target_y);
    let (f1, f2) = (cfg.scan_f1(), cfg.scan_f2());
    let t = cfg.duration_matrix_s;
    set_masks(lab, &masks.0, &masks.1)?;
    artifacts.push(mask_artifact(&format!("{stem}_mask_h.csv"), &masks.0));
    artifacts.push(mask_artifact(&format!("{stem}_mask_v.csv"), &masks.1));

    let (px, py) = (lab.position(x)?, lab.position(y)?);
    lab.set_delay(cfg.delta_near_mm);
    let near = count_grid(lab, &f1, &f2, t)?;
    let singles_x_near = lab.singles_rate(&px, Arm::F1)?;
    let singles_y_near = lab.singles_rate(&py, Arm::F2)?;
    lab.set_delay(cfg.delta_far_mm);
    let far = count_grid(lab, &f1, &f2, t)?;
    let singles_x_far = lab.singles_rate(&px, Arm::F1)?;
    let singles_y_far = lab.singles_rate(&py, Arm::F2)?;
    artifacts.push(grid_csv("position", &f1, &f2, &near).into_artifact(format!("{stem}_near.csv")));
    artifacts.push(grid_csv("position", &f1, &f2, &far).into_artifact(format!("{stem}_far.csv")));

    let ti = f1.iter().position(|&a| a == x).expect("target inside its scan window");
    let tj = f2.iter().position(|&b| b == y).expect("target inside its scan window");
    let target_near = near[(ti, tj)];
    let target_far = far[(ti, tj)];
    let background_sum: f64 = near.iter().sum::<f64>() - target_near;
    let background_mean_near = background_sum / (near.len() - 1) as f64;

    let image_h = lab.intensity_image(Photons::H, cfg.image_exposure_s)?;
    let image_v = lab.intensity_image(Photons::V, cfg.image_exposure_s)?;
    let n_out = lab.n_out();
    let intensity_enhancement_h = spot_enhancement(image_h.modes(n_out), x);
    let intensity_enhancement_v = spot_enhancement(image_v.modes(n_out), y);
    let image = lab.intensity_image(Photons::Both, cfg.image_exposure_s)?;
    artifacts.extend(pgm_artifacts(&format!("{stem}_image"), &image));

    Ok(FocusConfigSummary {
        label,
        target_counts_near: target_near,
        target_counts_far: target_far,
        background_mean_near,
        enhancement: target_near / background_mean_near,
        contrast_at_target: nonclassical_contrast(target_near / t, target_far / t)?,
        contrast_sigma: contrast_sigma(target_near, target_far, t, t),
        intensity_enhancement_h,
        intensity_enhancement_v,
        singles_x_near,
        singles_x_far,
        singles_y_near,
        singles_y_far,
    })
}

pub fn focus_cmd(cfg: &ExperimentConfig) -> Result<Run<FocusSummary>> {
    let mut lab = build_lab(cfg)?;
    let tm = design_matrix(cfg, &mut lab)?;
    let (x, y) = (cfg.target_x, cfg.target_y);
    let mut artifacts = Vec::new();
    let independent = focus_config(
        cfg,
        &mut lab,
        "independent",
        "focus_a",
        focus_independent(&tm, x, y)?,
        &mut artifacts,
    )?;
    let target = SuperpositionTarget {
        x,
        y,
        phi_h: 0.0,
        phi_v: 0.0,
    };
    let superposition = focus_config(
        cfg,
        &mut lab,
        "superposition",
        "focus_b",
        superposition_masks(&tm, &target)?,
        &mut artifacts,
    )?;
    let summary = FocusSummary {
        target_x: x,
        target_y: y,
        scan_f1: cfg.scan_f1(),
        scan_f2: cfg.scan_f2(),
        duration_s: cfg.duration_matrix_s,
        independent,
        superposition,
    };
    artifacts.push(Artifact::json("summary.json", &summary));
    Ok(Run { summary, artifacts })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhaseGridSummary {
    pub grid_size: usize,
    pub phases: Vec<f64>,
    /// Row-major `contrast[i][j]` at `(φ_H, φ_V) = (phases[i], phases[j])`.
    pub contrast: Vec<Vec<f64>>,
    pub amplitude: f64,
    pub phase_offset: f64,
    pub correlation: f64,
    pub argmax: (usize, usize),
    pub argmin: (usize, usize),
    /// Largest `|C(φ_H, φ_V) + C(φ_H, φ_V + π)|`; absent for odd grids.
    pub antisymmetry_residual: Option<f64>,
    pub duration_s: f64,
}

/// Superposition masks for each phase of a grid, one set per half.
fn phase_masks(tm: &TransmissionMatrix, x: usize, y: usize, phases: &[f64]) -> Result<Vec<(SlmPattern, SlmPattern)>> {
    phases
        .iter()
        .map(|&phi| {
            superposition_masks(
                tm,
                &SuperpositionTarget {
                    x,
                    y,
                    phi_h: phi,
                    phi_v: phi,
                },
            )
        })
        .collect()
}

pub fn phase_grid_cmd(cfg: &ExperimentConfig) -> Result<Run<PhaseGridSummary>> {
    let mut lab = build_lab(cfg)?;
    let tm = design_matrix(cfg, &mut lab)?;
    let (x, y) = (cfg.target_x, cfg.target_y);
    let g = cfg.grid_size;
    let t = cfg.duration_scan_s;
    let phases: Vec<f64> = (0..g).map(|k| TAU * k as f64 / g as f64).collect();
    let masks = phase_masks(&tm, x, y, &phases)?;

    let mut c = DMatrix::zeros(g, g);
    let mut sigma = DMatrix::zeros(g, g);
    let mut samples = Vec::with_capacity(g * g);
    for i in 0..g {
        lab.set_slm(Half::H, &masks[i].0)?;
        for j in 0..g {
            lab.set_slm(Half::V, &masks[j].1)?;
            let n_near = count_at(&mut lab, x, y, cfg.delta_near_mm, t)?;
            let n_far = count_at(&mut lab, x, y, cfg.delta_far_mm, t)?;
            c[(i, j)] = nonclassical_contrast(n_near / t, n_far / t)?;
            sigma[(i, j)] = contrast_sigma(n_near, n_far, t, t);
            samples.push((phases[i] - phases[j], c[(i, j)]));
        }
    }
    let fit = fit_phase_law(&samples)?;
    let extreme = |better: fn(f64, f64) -> bool| {
        let mut best = (0, 0);
        for i in 0..g {
            for j in 0..g {
                if better(c[(i, j)], c[best]) {
                    best = (i, j);
                }
            }
        }
        best
    };
    let antisymmetry_residual = g.is_multiple_of(2).then(|| {
        let mut worst = 0.0f64;
        for i in 0..g {
            for j in 0..g {
                worst = worst.max((c[(i, j)] + c[(i, (j + g / 2) % g)]).abs());
            }
        }
        worst
    });

    let header: Vec<String> = std::iter::once("phi_h".to_string())
        .chain(phases.iter().map(|p| format!("phi_v={p}")))
        .collect();
    let table = |m: &DMatrix<f64>| {
        let mut csv = Csv::new(&header);
        for (i, p) in phases.iter().enumerate() {
            csv.row(p, &m.row(i).iter().copied().collect::<Vec<_>>());
        }
        csv
    };
    let mut artifacts = vec![
        table(&c).into_artifact("contrast_grid.csv"),
        table(&sigma).into_artifact("contrast_grid_sigma.csv"),
    ];
    let summary = PhaseGridSummary {
        grid_size: g,
        phases: phases.clone(),
        contrast: (0..g).map(|i| c.row(i).iter().copied().collect()).collect(),
        amplitude: fit.amplitude,
        phase_offset: fit.phase_offset,
        correlation: fit.correlation,
        argmax: extreme(|a, b| a > b),
        argmin: extreme(|a, b| a < b),
        antisymmetry_residual,
        duration_s: t,
    };
    artifacts.push(Artifact::json("summary.json", &summary));
    Ok(Run { summary, artifacts })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HomCurveSummary {
    pub phi_h: f64,
    pub phi_v: f64,
    pub shape: Option<&'static str>,
    pub relative_change: Option<f64>,
    /// `(max − min) / mean` of the rate across the scan.
    pub variation: f64,
    pub file: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HomScanSummary {
    pub deltas_mm: Vec<f64>,
    pub duration_s: f64,
    pub curves: Vec<HomCurveSummary>,
}

pub const HOM_SETTINGS: [(f64, f64, &str); 3] = [
    (0.0, 0.0, "hom_0_0"),
    (0.0, PI / 2.0, "hom_0_pi2"),
    (0.0, PI, "hom_0_pi"),
];

pub fn hom_scan_cmd(cfg: &ExperimentConfig) -> Result<Run<HomScanSummary>> {
    let mut lab = build_lab(cfg)?;
    let tm = design_matrix(cfg, &mut lab)?;
    let (x, y) = (cfg.target_x, cfg.target_y);
    let t = cfg.duration_scan_s;
    let mut artifacts = Vec::new();
    let mut curves = Vec::new();
    for (phi_h, phi_v, stem) in HOM_SETTINGS {
        let (h, v) = superposition_masks(&tm, &SuperpositionTarget { x, y, phi_h, phi_v })?;
        set_masks(&mut lab, &h, &v)?;
        let mut csv = Csv::new(&["delta_mm", "counts", "rate", "sigma"]);
        let mut curve = Vec::with_capacity(cfg.hom_deltas_mm.len());
        for &d in &cfg.hom_deltas_mm {
            let n = count_at(&mut lab, x, y, d, t)?;
            csv.numeric_row(&[d, n, n / t, n.sqrt() / t]);
            curve.push((d, n / t));
        }
        let rates: Vec<f64> = curve.iter().map(|p| p.1).collect();
        let max = rates.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = rates.iter().cloned().fold(f64::INFINITY, f64::min);
        let mean = rates.iter().sum::<f64>() / rates.len() as f64;
        let file = format!("{stem}.csv");
        artifacts.push(csv.into_artifact(file.clone()));
        curves.push(HomCurveSummary {
            phi_h,
            phi_v,
            shape: classify_hom(&curve, cfg.flat_tolerance).map(|s| s.label()),
            relative_change: hom_relative_change(&curve),
            variation: if mean > 0.0 { (max - min) / mean } else { f64::NAN },
            file,
        });
    }
    let summary = HomScanSummary {
        deltas_mm: cfg.hom_deltas_mm.clone(),
        duration_s: t,
        curves,
    };
    artifacts.push(Artifact::json("summary.json", &summary));
    Ok(Run { summary, artifacts })
}
