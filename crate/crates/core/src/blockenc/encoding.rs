use crate::error::{Error, Result};
use crate::numerics::{hermitian_eig, spectral_norm, ComplexMatrix, C64};
use crate::oracles::{Query, QueryCounts};

/// Unitary `U` on `ancilla (x) system` (ancilla index slowest) whose
/// top-left `system_dim` block is `H / alpha`.
#[derive(Clone, Debug)]
pub struct BlockEncoding {
    unitary: ComplexMatrix,
    ancilla_dim: usize,
    system_dim: usize,
    pub alpha: f64,
    /// queries charged by one application of `U`
    pub cost: QueryCounts,
}

/// `sqrt(M)` of a positive semidefinite Hermitian `M`; tiny negative
/// eigenvalues from rounding are clipped.
pub(crate) fn psd_sqrt(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let e = hermitian_eig(m)?;
    Ok(e.map(|l| C64::new(l.max(0.0).sqrt(), 0.0)))
}

/// `[[A, sqrt(I - AA^dag)], [sqrt(I - A^dag A), -A^dag]]`, unitary for `||A|| <= 1`.
pub fn halmos_dilation(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n = a.require_square()?;
    let norm = spectral_norm(a)?;
    if norm > 1.0 + 1e-9 {
        return Err(Error::NormTooLarge { norm });
    }
    let id = ComplexMatrix::identity(n);
    let ad = a.adjoint();
    let top = psd_sqrt(&(&id - &(a * &ad)))?;
    let bottom = psd_sqrt(&(&id - &(&ad * a)))?;
    let mut u = ComplexMatrix::zeros(2 * n, 2 * n);
    u.set_block(0, 0, a);
    u.set_block(0, n, &top);
    u.set_block(n, 0, &bottom);
    u.set_block(n, n, &ad.scale_real(-1.0));
    Ok(u)
}

impl BlockEncoding {
    pub fn from_unitary(
        unitary: ComplexMatrix,
        ancilla_dim: usize,
        system_dim: usize,
        alpha: f64,
        cost: QueryCounts,
    ) -> Result<Self> {
        let dim = unitary.require_square()?;
        if dim != ancilla_dim * system_dim {
            return Err(Error::DimensionMismatch {
                expected: ancilla_dim * system_dim,
                actual: dim,
            });
        }
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::param("alpha", format!("must be positive and finite, got {alpha}")));
        }
        let deviation = unitary.unitarity_defect();
        if deviation > 1e-9 {
            return Err(Error::NotUnitary { deviation });
        }
        Ok(Self {
            unitary,
            ancilla_dim,
            system_dim,
            alpha,
            cost,
        })
    }

    /// Encoding whose block is `block` exactly, realized by a one-qubit dilation.
    pub fn from_block(block: &ComplexMatrix, alpha: f64, cost: QueryCounts) -> Result<Self> {
        let n = block.require_square()?;
        Self::from_unitary(halmos_dilation(block)?, 2, n, alpha, cost)
    }

    /// Encoding of a Hermitian `h` with normalization `alpha >= ||h||`,
    /// charging one `U_B` query per application.
    pub fn of_matrix(h: &ComplexMatrix, alpha: f64) -> Result<Self> {
        Self::from_block(&h.scale_real(1.0 / alpha), alpha, QueryCounts::default().with(Query::Block, 1))
    }

    pub fn unitary(&self) -> &ComplexMatrix {
        &self.unitary
    }

    pub fn ancilla_dim(&self) -> usize {
        self.ancilla_dim
    }

    pub fn system_dim(&self) -> usize {
        self.system_dim
    }

    /// `(<0|_a (x) I_s) U (|0>_a (x) I_s)`
    pub fn encoded_block(&self) -> ComplexMatrix {
        self.unitary.block(0, 0, self.system_dim, self.system_dim)
    }

    /// `alpha` times the encoded block.
    pub fn encoded_operator(&self) -> ComplexMatrix {
        self.encoded_block().scale_real(self.alpha)
    }
}

/// `|| block(U) - H / alpha ||`
pub fn verify(enc: &BlockEncoding, h: &ComplexMatrix) -> Result<f64> {
    let n = h.require_square()?;
    if n != enc.system_dim {
        return Err(Error::DimensionMismatch {
            expected: enc.system_dim,
            actual: n,
        });
    }
    spectral_norm(&(&enc.encoded_block() - &h.scale_real(1.0 / enc.alpha)))
}

/// Sequential product: block `B2 B1`, ancillas concatenated as `(a1, a2)`.
pub fn product(e1: &BlockEncoding, e2: &BlockEncoding) -> Result<BlockEncoding> {
    if e1.system_dim != e2.system_dim {
        return Err(Error::DimensionMismatch {
            expected: e1.system_dim,
            actual: e2.system_dim,
        });
    }
    let (a1, a2, s) = (e1.ancilla_dim, e2.ancilla_dim, e1.system_dim);
    let dim = a1 * a2 * s;
    // index = (x1 * a2 + x2) * s + sys
    let u1 = ComplexMatrix::from_fn(dim, dim, |r, c| {
        let (x1r, x2r, sr) = (r / (a2 * s), (r / s) % a2, r % s);
        let (x1c, x2c, sc) = (c / (a2 * s), (c / s) % a2, c % s);
        if x2r != x2c {
            return C64::new(0.0, 0.0);
        }
        e1.unitary[(x1r * s + sr, x1c * s + sc)]
    });
    let u2 = ComplexMatrix::from_fn(dim, dim, |r, c| {
        let (x1r, x2r, sr) = (r / (a2 * s), (r / s) % a2, r % s);
        let (x1c, x2c, sc) = (c / (a2 * s), (c / s) % a2, c % s);
        if x1r != x1c {
            return C64::new(0.0, 0.0);
        }
        e2.unitary[(x2r * s + sr, x2c * s + sc)]
    });
    BlockEncoding::from_unitary(&u2 * &u1, a1 * a2, s, e1.alpha * e2.alpha, e1.cost + e2.cost)
}

/// Unitary whose first column is the unit vector `v` (Householder).
fn unitary_with_first_column(v: &[C64]) -> ComplexMatrix {
    let n = v.len();
    let mut u = v.to_vec();
    // reflect e0 onto v: H = I - 2 w w^dag / |w|^2 with w = e0 - v (v[0] made real first)
    let phase = if v[0].norm() > 0.0 { v[0] / v[0].norm() } else { C64::new(1.0, 0.0) };
    for x in u.iter_mut() {
        *x /= phase;
    }
    u[0] -= C64::new(1.0, 0.0);
    let wn: f64 = u.iter().map(|x| x.norm_sqr()).sum();
    let mut h = ComplexMatrix::identity(n);
    if wn > 1e-30 {
        for i in 0..n {
            for j in 0..n {
                h[(i, j)] -= u[i] * u[j].conj() * (2.0 / wn);
            }
        }
    }
    // H e0 = v / phase; restore the phase on every column
    h.scale(phase)
}

/// Linear combination `sum_j w_j H_j` of encodings sharing an ancilla
/// dimension. `alpha = sum_j |w_j| alpha_j`.
pub fn linear_combination(encs: &[BlockEncoding], weights: &[f64]) -> Result<BlockEncoding> {
    if encs.is_empty() || encs.len() != weights.len() {
        return Err(Error::DimensionMismatch {
            expected: encs.len(),
            actual: weights.len(),
        });
    }
    let (a, s) = (encs[0].ancilla_dim, encs[0].system_dim);
    if let Some(e) = encs.iter().find(|e| e.ancilla_dim != a || e.system_dim != s) {
        return Err(Error::DimensionMismatch {
            expected: a * s,
            actual: e.ancilla_dim * e.system_dim,
        });
    }
    let terms = encs.len().next_power_of_two();
    let lambda: f64 = encs.iter().zip(weights).map(|(e, w)| w.abs() * e.alpha).sum();
    if !(lambda > 0.0) {
        return Err(Error::param("weights", "all weights are zero"));
    }
    let mut amps = vec![C64::new(0.0, 0.0); terms];
    for (j, (e, w)) in encs.iter().zip(weights).enumerate() {
        amps[j] = C64::new((w.abs() * e.alpha / lambda).sqrt(), 0.0);
    }
    let prep = unitary_with_first_column(&amps);
    let inner = a * s;
    let dim = terms * inner;
    let id_inner = ComplexMatrix::identity(inner);
    let prep_full = prep.kron(&id_inner);
    let mut select = ComplexMatrix::zeros(dim, dim);
    for j in 0..terms {
        match encs.get(j) {
            Some(e) => {
                let sign = if weights[j] < 0.0 { -1.0 } else { 1.0 };
                select.set_block(j * inner, j * inner, &e.unitary.scale_real(sign));
            }
            None => select.set_block(j * inner, j * inner, &id_inner),
        }
    }
    // reorder (j, x, sys) so the system index stays fastest: already the case
    let u = &prep_full.adjoint() * &(&select * &prep_full);
    let cost = encs.iter().fold(QueryCounts::default(), |acc, e| acc + e.cost);
    BlockEncoding::from_unitary(u, terms * a, s, lambda, cost)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{random_hermitian, SplitMix64};

    fn pauli_x() -> ComplexMatrix {
        ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]])
    }

    #[test]
    fn identity_encoding_verifies() {
        let id = ComplexMatrix::identity(3);
        let e = BlockEncoding::of_matrix(&id, 1.0).unwrap();
        assert!(verify(&e, &id).unwrap() < 1e-12);
    }

    #[test]
    fn off_block_encoding_residual() {
        // U = X (x) I: the ancilla |0> block is zero
        let u = pauli_x().kron(&ComplexMatrix::identity(2));
        let e = BlockEncoding::from_unitary(u, 2, 2, 1.0, QueryCounts::default()).unwrap();
        let h = ComplexMatrix::identity(2).scale_real(0.5);
        assert!((verify(&e, &h).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn x_squared_is_identity() {
        let ex = BlockEncoding::of_matrix(&pauli_x(), 1.0).unwrap();
        let p = product(&ex, &ex).unwrap();
        assert_eq!(p.alpha, 1.0);
        assert!(verify(&p, &ComplexMatrix::identity(2)).unwrap() < 1e-12);
        assert_eq!(p.cost.u_b, 2);
    }

    #[test]
    fn lcu_of_random_terms() {
        let mut rng = SplitMix64::new(5);
        let h1 = random_hermitian(4, 1.0, &mut rng);
        let h2 = random_hermitian(4, 1.0, &mut rng);
        let h3 = random_hermitian(4, 1.0, &mut rng);
        let encs: Vec<_> = [&h1, &h2, &h3]
            .iter()
            .map(|h| BlockEncoding::of_matrix(h, 4.0).unwrap())
            .collect();
        let w = [0.5, -1.0, 2.0];
        let e = linear_combination(&encs, &w).unwrap();
        let mut target = h1.scale_real(0.5);
        target.add_scaled(&h2, C64::new(-1.0, 0.0));
        target.add_scaled(&h3, C64::new(2.0, 0.0));
        assert!((e.alpha - 14.0).abs() < 1e-12);
        assert!(verify(&e, &target).unwrap() < 1e-12);
    }
}
