//! Complex linear algebra primitives shared by every other module.
//!
//! Matrices are dense `nalgebra` matrices of `Complex64`. Randomness always
//! goes through [`stream_rng`], a ChaCha20 generator addressed by a 64-bit
//! seed and a stream number, so independent parts of an experiment draw from
//! non-overlapping sequences and every run is bit-reproducible.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

pub type ComplexMatrix = DMatrix<Complex64>;
pub type ComplexVector = DVector<Complex64>;

/// Seeded generator for one named stream of an experiment.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Unit-modulus complex number `e^{iθ}`.
#[inline]
pub fn cis(theta: f64) -> Complex64 {
    Complex64::from_polar(1.0, theta)
}

pub fn all_finite(m: &ComplexMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Checks the invariants every stored matrix must satisfy.
pub fn validate_matrix(m: &ComplexMatrix) -> Result<()> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Err(Error::InvalidDimension(format!(
            "matrix must be non-empty, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if !all_finite(m) {
        return Err(Error::Range("matrix contains non-finite entries".into()));
    }
    Ok(())
}

/// A square unitary matrix together with the seed it was drawn from.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitaryMatrix {
    matrix: ComplexMatrix,
    seed: u64,
}

impl UnitaryMatrix {
    /// Wraps an explicit matrix, checking `‖U†U − I‖_max < 1e-10`.
    pub fn from_matrix(matrix: ComplexMatrix, seed: u64) -> Result<Self> {
        validate_matrix(&matrix)?;
        let defect = unitarity_defect(&matrix)?;
        if defect >= 1e-10 {
            return Err(Error::Range(format!("matrix is not unitary (defect {defect:.3e})")));
        }
        Ok(Self { matrix, seed })
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }
}

/// Draws a Haar-distributed unitary of dimension `dim`.
///
/// A complex Ginibre matrix (entries with independent `N(0, 1/2)` real and
/// imaginary parts) is QR-factored and the unitary factor is multiplied by
/// the phases of the diagonal of `R`, which makes the factorization unique
/// and the distribution invariant under left multiplication.
pub fn haar_unitary(dim: usize, seed: u64) -> Result<UnitaryMatrix> {
    if dim == 0 {
        return Err(Error::InvalidDimension("unitary dimension must be >= 1".into()));
    }
    let mut rng = stream_rng(seed, 0);
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let mut ginibre = ComplexMatrix::zeros(dim, dim);
    for j in 0..dim {
        for i in 0..dim {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            ginibre[(i, j)] = Complex64::new(re * scale, im * scale);
        }
    }
    let qr = ginibre.qr();
    let r = qr.r();
    let mut q = qr.q();
    for k in 0..dim {
        let rkk = r[(k, k)];
        let norm = rkk.norm();
        let phase = if norm > 0.0 {
            rkk / norm
        } else {
            Complex64::new(1.0, 0.0)
        };
        for z in q.column_mut(k).iter_mut() {
            *z *= phase;
        }
    }
    Ok(UnitaryMatrix { matrix: q, seed })
}

/// `max |(M†M − I)_ij|`.
pub fn unitarity_defect(m: &ComplexMatrix) -> Result<f64> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "unitarity defect needs a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let gram = m.adjoint() * m;
    let n = m.nrows();
    let mut worst = 0.0f64;
    for j in 0..n {
        for i in 0..n {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((gram[(i, j)] - Complex64::new(target, 0.0)).norm());
        }
    }
    Ok(worst)
}

/// Singular values in non-increasing order.
pub fn singular_values(m: &ComplexMatrix) -> Vec<f64> {
    let mut sv: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Hermitian inner product `⟨a, b⟩ = Σ conj(a_i) b_i`.
pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Unitary discrete Fourier matrix, `F_jk = e^{-2πi jk/n}/√n`.
pub fn dft_matrix(n: usize) -> ComplexMatrix {
    let scale = 1.0 / (n as f64).sqrt();
    ComplexMatrix::from_fn(n, n, |j, k| {
        let angle = -2.0 * std::f64::consts::PI * ((j * k) % n) as f64 / n as f64;
        cis(angle) * scale
    })
}

/// Block-diagonal matrix `diag(a, b)`.
pub fn block_diagonal(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(a.nrows() + b.nrows(), a.ncols() + b.ncols());
    out.view_mut((0, 0), a.shape()).copy_from(a);
    out.view_mut((a.nrows(), a.ncols()), b.shape()).copy_from(b);
    out
}
