//! Explicit Fock-space evolution of a two-photon input, used as an
//! independent check on the pathway-amplitude formulas.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::tmrecon::TransmissionMatrix;
use crate::ttm::TwoPhotonInput;

/// Output detection probabilities for both photon statistics.
///
/// Entry `(a, b)` with `a != b` is the probability of one photon in `a` and
/// one in `b` (stored symmetrically); entry `(a, a)` is the probability of
/// both photons in `a`.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoPhotonDistribution {
    pub indistinguishable: DMatrix<f64>,
    pub distinguishable: DMatrix<f64>,
}

impl TwoPhotonDistribution {
    /// Sum over unordered output configurations.
    pub fn total(m: &DMatrix<f64>) -> f64 {
        let n = m.nrows();
        (0..n).flat_map(|a| (a..n).map(move |b| m[(a, b)])).sum()
    }
}

fn permanent2(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Complex64 {
    a * d + b * c
}

/// Enumerates every output configuration. The indistinguishable case sums
/// `u_i·v_j·perm(T[{a,b},{i,j}])` over all input mode pairs; the
/// distinguishable case multiplies single-photon probabilities.
pub fn brute_force_two_photon(tm: &TransmissionMatrix, input: &TwoPhotonInput) -> TwoPhotonDistribution {
    let n_out = tm.n_out();
    let nh = tm.n_in_h();
    let nv = tm.n_in_v();
    let t = tm.matrix();
    let (u, v) = (input.u(), input.v());

    let mut p_h = vec![0.0; n_out];
    let mut p_v = vec![0.0; n_out];
    for a in 0..n_out {
        let mut amp_h = Complex64::new(0.0, 0.0);
        for i in 0..nh {
            amp_h += t[(a, i)] * u[i];
        }
        let mut amp_v = Complex64::new(0.0, 0.0);
        for j in 0..nv {
            amp_v += t[(a, nh + j)] * v[j];
        }
        p_h[a] = amp_h.norm_sqr();
        p_v[a] = amp_v.norm_sqr();
    }

    let mut indist = DMatrix::zeros(n_out, n_out);
    let mut dist = DMatrix::zeros(n_out, n_out);
    for a in 0..n_out {
        for b in a..n_out {
            let mut amp = Complex64::new(0.0, 0.0);
            for i in 0..nh {
                for j in 0..nv {
                    let col_j = nh + j;
                    amp += u[i] * v[j] * permanent2(t[(a, i)], t[(a, col_j)], t[(b, i)], t[(b, col_j)]);
                }
            }
            let (pi, pd) = if a == b {
                // Normalization by the occupation factorial 2!.
                (amp.norm_sqr() / 2.0, p_h[a] * p_v[a])
            } else {
                (amp.norm_sqr(), p_h[a] * p_v[b] + p_h[b] * p_v[a])
            };
            indist[(a, b)] = pi;
            indist[(b, a)] = pi;
            dist[(a, b)] = pd;
            dist[(b, a)] = pd;
        }
    }
    TwoPhotonDistribution {
        indistinguishable: indist,
        distinguishable: dist,
    }
}
