//! Dense complex linear algebra used as ground truth by every other module.

mod bessel;
mod eig;
mod matrix;
mod rng;

pub use bessel::{bessel_j, jacobi_anger_degree};
pub use eig::{hermitian_eig, EigenDecomposition};
pub use matrix::{ComplexMatrix, C64};
pub use rng::SplitMix64;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default absolute tolerance on operator max-norm comparisons.
pub const DEFAULT_TOL: f64 = 1e-10;

/// The four norms compared throughout.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormBounds {
    pub max_norm: f64,
    pub spectral: f64,
    pub induced_one: f64,
    pub one_to_two: f64,
}

impl NormBounds {
    /// Slack of each link in the chain
    /// `max <= 1->2 <= spec <= 1 <= sqrt(d) 1->2 <= sqrt(d max 1) <= d max`.
    /// Every entry is `rhs - lhs`, so a valid chain has all entries >= 0.
    pub fn chain_slacks(&self, d: usize) -> [f64; 6] {
        let d = d as f64;
        let links = [
            self.max_norm,
            self.one_to_two,
            self.spectral,
            self.induced_one,
            d.sqrt() * self.one_to_two,
            (d * self.max_norm * self.induced_one).sqrt(),
            d * self.max_norm,
        ];
        let mut out = [0.0; 6];
        for i in 0..6 {
            out[i] = links[i + 1] - links[i];
        }
        out
    }

    pub fn chain_holds(&self, d: usize, tol: f64) -> bool {
        self.chain_slacks(d).iter().all(|&s| s >= -tol)
    }
}

pub fn compute_norms(h: &ComplexMatrix) -> Result<NormBounds> {
    let n = h.require_square()?;
    let mut induced_one: f64 = 0.0;
    let mut one_to_two: f64 = 0.0;
    for k in 0..n {
        let mut abs_sum = 0.0;
        let mut sq_sum = 0.0;
        for i in 0..n {
            let z = h[(i, k)];
            abs_sum += z.norm();
            sq_sum += z.norm_sqr();
        }
        induced_one = induced_one.max(abs_sum);
        one_to_two = one_to_two.max(sq_sum.sqrt());
    }
    Ok(NormBounds {
        max_norm: h.max_abs(),
        spectral: spectral_norm(h)?,
        induced_one,
        one_to_two,
    })
}

/// Largest singular value.
pub fn spectral_norm(h: &ComplexMatrix) -> Result<f64> {
    if h.rows() == 0 || h.cols() == 0 {
        return Ok(0.0);
    }
    if h.is_square() && h.hermiticity_defect() <= 1e-12 * h.max_abs() {
        let e = hermitian_eig(h)?;
        return Ok(e
            .eigenvalues
            .iter()
            .fold(0.0f64, |acc, l| acc.max(l.abs())));
    }
    let g = h.adjoint_matmul(h);
    let e = hermitian_eig(&g)?;
    Ok(e.eigenvalues.last().copied().unwrap_or(0.0).max(0.0).sqrt())
}

/// `e^{-iHt}` through the eigendecomposition of `H`.
pub fn expm_i(h: &ComplexMatrix, t: f64) -> Result<ComplexMatrix> {
    let e = hermitian_eig(h)?;
    Ok(e.map(|l| C64::from_polar(1.0, -l * t)))
}

/// `T_k(H)` by the three-term recurrence. Requires `||H|| <= 1`.
pub fn chebyshev_apply(h: &ComplexMatrix, k: usize) -> Result<ComplexMatrix> {
    let n = h.require_square()?;
    let norm = spectral_norm(h)?;
    if norm > 1.0 + 1e-12 {
        return Err(Error::NormTooLarge { norm });
    }
    Ok(chebyshev_series(h, k).pop().unwrap_or_else(|| ComplexMatrix::identity(n)))
}

/// `[T_0(H), ..., T_k(H)]` without the norm check.
pub(crate) fn chebyshev_series(h: &ComplexMatrix, k: usize) -> Vec<ComplexMatrix> {
    let n = h.rows();
    let mut out = Vec::with_capacity(k + 1);
    out.push(ComplexMatrix::identity(n));
    if k >= 1 {
        out.push(h.clone());
    }
    for j in 2..=k {
        let mut next = (h * &out[j - 1]).scale_real(2.0);
        next.add_scaled(&out[j - 2], C64::new(-1.0, 0.0));
        out.push(next);
    }
    out
}

/// Random Hermitian matrix with entries of modulus at most `scale`.
pub fn random_hermitian(n: usize, scale: f64, rng: &mut SplitMix64) -> ComplexMatrix {
    let mut h = ComplexMatrix::zeros(n, n);
    for i in 0..n {
        h[(i, i)] = C64::new(scale * rng.uniform(-1.0, 1.0), 0.0);
        for j in i + 1..n {
            let z = C64::from_polar(scale * rng.next_f64(), std::f64::consts::TAU * rng.next_f64());
            h[(i, j)] = z;
            h[(j, i)] = z.conj();
        }
    }
    h
}

/// Haar-ish random unitary, `e^{-iH}` of a random Hermitian `H`.
pub fn random_unitary(n: usize, rng: &mut SplitMix64) -> ComplexMatrix {
    let h = random_hermitian(n, std::f64::consts::PI, rng);
    expm_i(&h, 1.0).expect("random Hermitian is Hermitian")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pauli_x_norms() {
        let x = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let nb = compute_norms(&x).unwrap();
        assert_eq!((nb.max_norm, nb.induced_one, nb.one_to_two), (1.0, 1.0, 1.0));
        assert!((nb.spectral - 1.0).abs() < 1e-15);
    }

    #[test]
    fn non_hermitian_spectral() {
        // singular values of [[1,1],[0,1]] are the golden ratio and its inverse
        let m = ComplexMatrix::from_real_rows(&[&[1.0, 1.0], &[0.0, 1.0]]);
        let s = spectral_norm(&m).unwrap();
        assert!((s - (1.0 + 5f64.sqrt()) / 2.0).abs() < 1e-12);
    }
}
