use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numcore::{validate_matrix, ComplexMatrix, ComplexVector};

/// Which SLM half (and therefore which photon) an input column belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Half {
    H,
    V,
}

impl Half {
    pub fn label(self) -> &'static str {
        match self {
            Half::H => "H",
            Half::V => "V",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Basis {
    InputMode,
    SlmMacropixel,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    /// Copied from the hidden ground truth; only for validation.
    Oracle,
    /// Reconstructed from intensity measurements.
    Measured,
}

impl Provenance {
    pub fn code(self) -> u8 {
        match self {
            Provenance::Oracle => 0,
            Provenance::Measured => 1,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Provenance::Oracle),
            1 => Some(Provenance::Measured),
            _ => None,
        }
    }
}

/// Complex field transmission matrix, `n_out × (n_in_h + n_in_v)`.
///
/// Columns `0..n_in_h` are the H half of the input, the rest the V half.
/// A measured matrix is only known up to one complex factor per row.
#[derive(Clone, Debug, PartialEq)]
pub struct TransmissionMatrix {
    matrix: ComplexMatrix,
    n_in_h: usize,
    basis: Basis,
    provenance: Provenance,
}

impl TransmissionMatrix {
    pub fn new(matrix: ComplexMatrix, n_in_h: usize, basis: Basis, provenance: Provenance) -> Result<Self> {
        validate_matrix(&matrix)?;
        if n_in_h > matrix.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "H block of {n_in_h} columns does not fit a matrix with {} columns",
                matrix.ncols()
            )));
        }
        Ok(Self {
            matrix,
            n_in_h,
            basis,
            provenance,
        })
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn n_out(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn n_in(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn n_in_h(&self) -> usize {
        self.n_in_h
    }

    pub fn n_in_v(&self) -> usize {
        self.matrix.ncols() - self.n_in_h
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    /// Set for measured matrices: each row carries an unknown complex factor.
    pub fn has_row_ambiguity(&self) -> bool {
        self.provenance == Provenance::Measured
    }

    pub fn half_len(&self, half: Half) -> usize {
        match half {
            Half::H => self.n_in_h,
            Half::V => self.n_in_v(),
        }
    }

    /// Column offset of `half` in the full input index space.
    pub fn half_offset(&self, half: Half) -> usize {
        match half {
            Half::H => 0,
            Half::V => self.n_in_h,
        }
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.matrix[(row, col)]
    }

    /// Row `p` restricted to the columns of `half`.
    pub fn half_row(&self, row: usize, half: Half) -> Vec<Complex64> {
        let off = self.half_offset(half);
        (0..self.half_len(half)).map(|i| self.matrix[(row, off + i)]).collect()
    }

    /// Output field `T_half · field` for a field defined over one half.
    pub fn propagate_half(&self, half: Half, field: &ComplexVector) -> Result<ComplexVector> {
        let len = self.half_len(half);
        if field.len() != len {
            return Err(Error::DimensionMismatch(format!(
                "{} field has {} entries, half has {len} modes",
                half.label(),
                field.len()
            )));
        }
        let block = self.matrix.columns(self.half_offset(half), len);
        Ok(block * field)
    }

    /// Output field for a field over the full input space.
    pub fn propagate(&self, field: &ComplexVector) -> Result<ComplexVector> {
        if field.len() != self.n_in() {
            return Err(Error::DimensionMismatch(format!(
                "field has {} entries, matrix has {} inputs",
                field.len(),
                self.n_in()
            )));
        }
        Ok(&self.matrix * field)
    }

    pub(crate) fn with_matrix(&self, matrix: ComplexMatrix, basis: Basis) -> Result<Self> {
        Self::new(matrix, self.n_in_h, basis, self.provenance)
    }
}
