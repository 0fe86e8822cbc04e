//! Artifact encoders. Everything is built in memory first so a run can be
//! checksummed, written, or compared against an earlier manifest.

use std::fmt::Write as _;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::virtlab::IntensityImage;

/// One emitted file, relative to the run's output directory.
#[derive(Clone, Debug, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

impl Artifact {
    pub fn new(name: impl Into<String>, bytes: Vec<u8>) -> Self {
        Self {
            name: name.into(),
            bytes,
        }
    }

    pub fn json<T: Serialize>(name: impl Into<String>, value: &T) -> Self {
        let mut bytes = serde_json::to_vec_pretty(value).expect("serializable summary");
        bytes.push(b'\n');
        Self::new(name, bytes)
    }

    pub fn sha256(&self) -> String {
        sha256_hex(&self.bytes)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
}

/// Formats a float for CSV; non-finite values become `nan`.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else {
        "nan".to_string()
    }
}

/// Comma-separated table with a header row and LF line endings.
#[derive(Clone, Debug, Default)]
pub struct Csv {
    text: String,
    width: usize,
}

impl Csv {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        let mut csv = Self {
            text: String::new(),
            width: header.len(),
        };
        csv.push_line(header.iter().map(|s| s.as_ref().to_string()).collect());
        csv
    }

    fn push_line(&mut self, cells: Vec<String>) {
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }

    pub fn row(&mut self, label: impl ToString, values: &[f64]) {
        assert_eq!(values.len() + 1, self.width, "CSV row width");
        let mut cells = vec![label.to_string()];
        cells.extend(values.iter().map(|&v| fmt_f64(v)));
        self.push_line(cells);
    }

    pub fn numeric_row(&mut self, values: &[f64]) {
        assert_eq!(values.len(), self.width, "CSV row width");
        self.push_line(values.iter().map(|&v| fmt_f64(v)).collect());
    }

    pub fn into_artifact(self, name: impl Into<String>) -> Artifact {
        Artifact::new(name, self.text.into_bytes())
    }
}

/// Linear sample scale of a PGM frame: `value = sample · scale`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PgmScale {
    pub width: usize,
    pub height: usize,
    pub maxval: u16,
    pub scale: f64,
    pub max_value: f64,
}

/// Binary P5 with 16-bit big-endian samples.
pub fn encode_pgm(image: &IntensityImage) -> (Vec<u8>, PgmScale) {
    let max_value = image.pixels.iter().fold(0.0f64, |m, &v| m.max(v));
    let maxval = u16::MAX;
    let scale = if max_value > 0.0 {
        max_value / maxval as f64
    } else {
        1.0
    };
    let mut bytes = format!("P5\n{} {}\n{}\n", image.cols, image.rows, maxval).into_bytes();
    for &v in &image.pixels {
        let s = (v / scale).round().clamp(0.0, maxval as f64) as u16;
        bytes.extend_from_slice(&s.to_be_bytes());
    }
    (
        bytes,
        PgmScale {
            width: image.cols,
            height: image.rows,
            maxval,
            scale,
            max_value,
        },
    )
}

/// PGM frame plus its `<stem>.json` scale sidecar.
pub fn pgm_artifacts(stem: &str, image: &IntensityImage) -> [Artifact; 2] {
    let (bytes, scale) = encode_pgm(image);
    [
        Artifact::new(format!("{stem}.pgm"), bytes),
        Artifact::json(format!("{stem}.json"), &scale),
    ]
}
