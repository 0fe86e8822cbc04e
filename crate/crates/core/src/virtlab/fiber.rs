use crate::error::{Error, Result};
use crate::numcore::{haar_unitary, UnitaryMatrix};
use crate::tmrecon::{Basis, Provenance, TransmissionMatrix};

/// Geometry and seed of the simulated fiber.
#[derive(Clone, Debug, PartialEq)]
pub struct FiberConfig {
    pub n_in_h: usize,
    pub n_in_v: usize,
    pub n_out: usize,
    /// Dimension of the ambient unitary; `None` means `n_in + n_out`.
    pub ambient_dim: Option<usize>,
    pub seed: u64,
}

impl Default for FiberConfig {
    fn default() -> Self {
        Self {
            n_in_h: 180,
            n_in_v: 190,
            n_out: 100,
            ambient_dim: None,
            seed: 1,
        }
    }
}

impl FiberConfig {
    pub fn n_in(&self) -> usize {
        self.n_in_h + self.n_in_v
    }

    pub fn ambient(&self) -> usize {
        self.ambient_dim.unwrap_or(self.n_in() + self.n_out)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_in_h == 0 || self.n_in_v == 0 || self.n_out == 0 {
            return Err(Error::Config(format!(
                "mode counts must be positive (n_in_h={}, n_in_v={}, n_out={})",
                self.n_in_h, self.n_in_v, self.n_out
            )));
        }
        let d = self.ambient();
        if self.n_in() > d || self.n_out > d {
            return Err(Error::Config(format!(
                "ambient dimension {d} too small for {} inputs and {} outputs",
                self.n_in(),
                self.n_out
            )));
        }
        Ok(())
    }
}

/// Rectangular arrangement of the monitored output modes, row-major.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OutputGrid {
    pub rows: usize,
    pub cols: usize,
    pub n_out: usize,
}

impl OutputGrid {
    pub fn for_modes(n_out: usize) -> Self {
        let cols = (n_out as f64).sqrt().ceil().max(1.0) as usize;
        let rows = n_out.div_ceil(cols);
        Self { rows, cols, n_out }
    }

    pub fn coord(&self, index: usize) -> (usize, usize) {
        (index / self.cols, index % self.cols)
    }

    pub fn index(&self, row: usize, col: usize) -> Option<usize> {
        let idx = row * self.cols + col;
        (row < self.rows && col < self.cols && idx < self.n_out).then_some(idx)
    }
}

/// A monitored output mode, addressed by index and grid cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OutputPosition {
    pub index: usize,
    pub row: usize,
    pub col: usize,
}

/// The hidden fiber: one Haar unitary, of which the monitored rows and the
/// programmed input columns form the transmission matrix.
#[derive(Clone, Debug)]
pub struct GroundTruthFiber {
    unitary: UnitaryMatrix,
    transmission: TransmissionMatrix,
    grid: OutputGrid,
}

impl GroundTruthFiber {
    pub fn build(config: &FiberConfig) -> Result<Self> {
        config.validate()?;
        let unitary = haar_unitary(config.ambient(), config.seed)?;
        Self::from_unitary(unitary, config.n_in_h, config.n_in_v, config.n_out)
    }

    /// Fiber built around an explicit unitary, e.g. an identity or a
    /// beam-splitter network for analytic checks.
    pub fn from_unitary(unitary: UnitaryMatrix, n_in_h: usize, n_in_v: usize, n_out: usize) -> Result<Self> {
        let config = FiberConfig {
            n_in_h,
            n_in_v,
            n_out,
            ambient_dim: Some(unitary.dim()),
            seed: unitary.seed(),
        };
        config.validate()?;
        let block = unitary.matrix().view((0, 0), (n_out, n_in_h + n_in_v)).into_owned();
        let transmission = TransmissionMatrix::new(block, n_in_h, Basis::InputMode, Provenance::Oracle)?;
        Ok(Self {
            unitary,
            transmission,
            grid: OutputGrid::for_modes(n_out),
        })
    }

    pub fn unitary(&self) -> &UnitaryMatrix {
        &self.unitary
    }

    pub fn transmission(&self) -> &TransmissionMatrix {
        &self.transmission
    }

    pub fn grid(&self) -> OutputGrid {
        self.grid
    }

    pub fn position(&self, index: usize) -> Result<OutputPosition> {
        if index >= self.grid.n_out {
            return Err(Error::Range(format!(
                "output index {index} outside {} monitored modes",
                self.grid.n_out
            )));
        }
        let (row, col) = self.grid.coord(index);
        Ok(OutputPosition { index, row, col })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numcore::singular_values;

    #[test]
    fn default_shape() {
        let f = GroundTruthFiber::build(&FiberConfig::default()).unwrap();
        assert_eq!(f.transmission().n_out(), 100);
        assert_eq!(f.transmission().n_in(), 370);
        assert_eq!(f.transmission().n_in_h(), 180);
        assert_eq!(f.grid().rows * f.grid().cols, 100);
    }

    #[test]
    fn no_truncation_gives_the_unitary() {
        let cfg = FiberConfig {
            n_in_h: 1,
            n_in_v: 1,
            n_out: 2,
            ambient_dim: Some(2),
            seed: 4,
        };
        let f = GroundTruthFiber::build(&cfg).unwrap();
        assert_eq!(f.transmission().matrix(), f.unitary().matrix());
    }

    #[test]
    fn sub_block_singular_values_bounded() {
        let cfg = FiberConfig {
            n_in_h: 20,
            n_in_v: 25,
            n_out: 30,
            ambient_dim: None,
            seed: 9,
        };
        let f = GroundTruthFiber::build(&cfg).unwrap();
        assert!(singular_values(f.transmission().matrix())[0] <= 1.0 + 1e-10);
    }

    #[test]
    fn bad_configs_rejected() {
        let mut cfg = FiberConfig {
            ambient_dim: Some(200),
            ..Default::default()
        };
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
        cfg.ambient_dim = None;
        cfg.n_out = 0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn grid_round_trip() {
        let g = OutputGrid::for_modes(30);
        for i in 0..30 {
            let (r, c) = g.coord(i);
            assert_eq!(g.index(r, c), Some(i));
        }
        assert_eq!(g.index(g.rows, 0), None);
    }
}
