//! Hamiltonians with closed-form dynamics, the unitary dilation, and random
//! sparse instances.
//!
//! Basis order for composite instances: `s` register slowest, then `o`,
//! then `c`, then the `out` qubit fastest.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{ComplexMatrix, SplitMix64, C64};
use crate::oracles::{FixedPointFormat, FixedPointValue, SparseHermitian};

/// Parameters of the composed PARITY of ORs instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceParams {
    /// PARITY arity
    pub n: usize,
    /// OR arity
    pub m_or: usize,
    /// complete-graph size
    pub s: usize,
    /// `n` rows of `m_or` bits
    pub x: Vec<Vec<bool>>,
}

impl InstanceParams {
    pub fn new(n: usize, m_or: usize, s: usize, x: Vec<Vec<bool>>) -> Result<Self> {
        if n == 0 || m_or == 0 || s == 0 {
            return Err(Error::param("params", "n, m_or and s must be at least 1"));
        }
        if x.len() != n || x.iter().any(|r| r.len() != m_or) {
            return Err(Error::param("x", format!("expected {n} rows of {m_or} bits")));
        }
        Ok(Self { n, m_or, s, x })
    }

    /// Every row holds at most one set bit.
    pub fn promise(&self) -> bool {
        self.x.iter().all(|r| r.iter().filter(|&&b| b).count() <= 1)
    }

    pub fn or_values(&self) -> Vec<bool> {
        self.x.iter().map(|r| r.iter().any(|&b| b)).collect()
    }

    /// `XOR_j OR(x_j)`
    pub fn parity_of_ors(&self) -> bool {
        self.or_values().into_iter().fold(false, |a, b| a ^ b)
    }

    pub fn dim(&self) -> usize {
        (self.n + 1) * self.m_or * self.s * 2
    }

    /// Time at which the out register holds the answer.
    pub fn transfer_time(&self) -> f64 {
        self.n as f64 * std::f64::consts::PI / (2.0 * self.s as f64)
    }
}

/// Coupling between `|j-1>` and `|j>` of the spin chain.
fn spin_coupling(n: usize, j: usize) -> f64 {
    ((j * (n - j + 1)) as f64).sqrt() / n as f64
}

/// Tridiagonal `(n+1) x (n+1)` chain transferring `|0>` to `|n>` at `t = n pi / 2`.
pub fn h_spin(n: usize) -> Result<ComplexMatrix> {
    if n == 0 {
        return Err(Error::param("n", "must be at least 1"));
    }
    let mut h = ComplexMatrix::zeros(n + 1, n + 1);
    for j in 1..=n {
        let c = C64::new(spin_coupling(n, j), 0.0);
        h[(j - 1, j)] = c;
        h[(j, j - 1)] = c;
    }
    Ok(h)
}

/// `sum_j c_j |j-1><j| (x) op_j + h.c.`, `s` register slowest.
fn chain_with(n: usize, ops: &[ComplexMatrix]) -> ComplexMatrix {
    let k = ops[0].rows();
    let mut h = ComplexMatrix::zeros((n + 1) * k, (n + 1) * k);
    for j in 1..=n {
        let c = C64::new(spin_coupling(n, j), 0.0);
        let op = ops[j - 1].scale(c);
        h.set_block((j - 1) * k, j * k, &op);
        h.set_block(j * k, (j - 1) * k, &op.adjoint());
    }
    h
}

fn pauli_x() -> ComplexMatrix {
    ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]])
}

/// Spin chain whose `j`-th hop flips the out qubit when `x_j = 1`.
pub fn h_parity(x: &[bool]) -> Result<ComplexMatrix> {
    if x.is_empty() {
        return Err(Error::param("x", "needs at least one bit"));
    }
    let ops: Vec<ComplexMatrix> = x
        .iter()
        .map(|&b| if b { pauli_x() } else { ComplexMatrix::identity(2) })
        .collect();
    Ok(chain_with(x.len(), &ops))
}

/// Circulant `C_0[a][b] = x[(b - a) mod m]`.
fn circulant(x: &[bool]) -> ComplexMatrix {
    let m = x.len();
    ComplexMatrix::from_fn(m, m, |a, b| {
        if x[(b + m - a) % m] {
            C64::new(1.0, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

/// `[[C_1, C_0], [C_0^dag, C_1]]` in the out qubit, with `o` slowest.
/// On `|k>|u>` it acts as `|k xor OR(x)>|u>` when at most one bit is set.
pub fn h_or(x: &[bool]) -> Result<ComplexMatrix> {
    let m = x.len();
    if m == 0 {
        return Err(Error::param("x", "needs at least one bit"));
    }
    let c0 = circulant(x);
    let ones = ComplexMatrix::from_fn(m, m, |_, _| C64::new(1.0 / m as f64, 0.0));
    let c1 = &ones - &(&c0 + &c0.adjoint()).scale_real(0.5);
    let mut h = ComplexMatrix::zeros(2 * m, 2 * m);
    for a in 0..m {
        for b in 0..m {
            h[(2 * a, 2 * b)] = c1[(a, b)];
            h[(2 * a + 1, 2 * b + 1)] = c1[(a, b)];
            h[(2 * a, 2 * b + 1)] = c0[(a, b)];
            h[(2 * a + 1, 2 * b)] = c0[(b, a)].conj();
        }
    }
    Ok(h)
}

/// Spin chain over `H_OR(x_j)` hops, tensored with the all-ones `s x s` matrix
/// placed between the `o` register and the out qubit.
pub fn h_parity_or(p: &InstanceParams) -> Result<ComplexMatrix> {
    if !p.promise() {
        return Err(Error::param("x", "each row may hold at most one set bit"));
    }
    let s = p.s;
    let m = p.m_or;
    let ops = p
        .x
        .iter()
        .map(|row| {
            let hor = h_or(row)?;
            // (o, out) -> (o, c, out)
            Ok(ComplexMatrix::from_fn(m * s * 2, m * s * 2, |r, c| {
                let (ro, rout) = (r / (2 * s), r % 2);
                let (co, cout) = (c / (2 * s), c % 2);
                hor[(ro * 2 + rout, co * 2 + cout)]
            }))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(chain_with(p.n, &ops))
}

/// `|0>_s |u>_o |u>_c |k>_out`
pub fn parity_or_input(p: &InstanceParams, k: usize) -> Vec<C64> {
    let inner = p.m_or * p.s * 2;
    let amp = C64::new(1.0 / ((p.m_or * p.s) as f64).sqrt(), 0.0);
    let mut v = vec![C64::new(0.0, 0.0); p.dim()];
    for oc in 0..p.m_or * p.s {
        v[oc * 2 + k] = amp;
    }
    debug_assert!(v.len() == (p.n + 1) * inner);
    v
}

/// `|n>_s |u>_o |u>_c |k>_out`
pub fn parity_or_target(p: &InstanceParams, k: usize) -> Vec<C64> {
    let inner = p.m_or * p.s * 2;
    let mut v = vec![C64::new(0.0, 0.0); p.dim()];
    let src = parity_or_input(p, k);
    v[p.n * inner..].copy_from_slice(&src[..inner]);
    v
}

/// `[[0, U], [U^dag, 0]]`, which squares to `I` for unitary `U`.
pub fn dilate_unitary(u: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n = u.require_square()?;
    let deviation = u.unitarity_defect();
    if deviation > 1e-10 {
        return Err(Error::NotUnitary { deviation });
    }
    let mut h = ComplexMatrix::zeros(2 * n, 2 * n);
    h.set_block(0, n, u);
    h.set_block(n, 0, &u.adjoint());
    Ok(h)
}

/// Distribution of entry magnitudes in `(0, Lambda_max]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum MagnitudeProfile {
    /// every entry equals `Lambda_max`
    Constant,
    Uniform,
    /// `Lambda_max 10^{-u}` with `u` uniform in `[0, decades]`
    LogUniform { decades: f64 },
    /// first matching at `Lambda_max`, the others at `small`
    TwoScale { small: f64 },
}

fn fixed_magnitude(r: f64, fmt: FixedPointFormat) -> u64 {
    let scale = (1u64 << fmt.n) as f64;
    ((r * scale).floor() as u64).clamp(1, fmt.r_int_max())
}

/// Random `d`-sparse Hermitian matrix built from `d` random matchings,
/// one of which may be the diagonal. Deterministic in `seed`.
pub fn random_sparse(
    n: usize,
    d: usize,
    lambda_max: f64,
    profile: MagnitudeProfile,
    fmt: FixedPointFormat,
    seed: u64,
) -> Result<SparseHermitian> {
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::param("N", format!("must be a power of two, got {n}")));
    }
    if d == 0 || d > n {
        return Err(Error::param("d", format!("need 1 <= d <= N, got d = {d}, N = {n}")));
    }
    if !(lambda_max > 0.0) || lambda_max > fmt.r_max() {
        return Err(Error::param(
            "lambda_max",
            format!("must lie in (0, {}], got {lambda_max}", fmt.r_max()),
        ));
    }
    if lambda_max * ((1u64 << fmt.n) as f64) < 1.0 {
        return Err(Error::param("lambda_max", "below the fixed-point resolution"));
    }
    let mut rng = SplitMix64::new(seed);
    let mut taken = std::collections::BTreeSet::new();
    let mut upper = Vec::new();
    let modulus = fmt.phase_modulus();
    let magnitude = |rng: &mut SplitMix64, round: usize| {
        let r = match profile {
            MagnitudeProfile::Constant => lambda_max,
            MagnitudeProfile::TwoScale { small } => {
                if round == 0 {
                    lambda_max
                } else {
                    small.min(lambda_max)
                }
            }
            MagnitudeProfile::Uniform => lambda_max * (1.0 - rng.next_f64()),
            MagnitudeProfile::LogUniform { decades } => lambda_max * 10f64.powf(-decades * rng.next_f64()),
        };
        fixed_magnitude(r, fmt)
    };
    for round in 0..d {
        let mut perm: Vec<usize> = (0..n).collect();
        rng.shuffle(&mut perm);
        if round == 0 && rng.coin() {
            for i in 0..n {
                let sign = if rng.coin() { 0 } else { modulus / 2 };
                let v = FixedPointValue::from_bits(fmt, magnitude(&mut rng, round), sign)?;
                taken.insert((i, i));
                upper.push((i, i, v));
            }
            continue;
        }
        for pair in perm.chunks(2) {
            let (i, k) = (pair[0].min(pair[1]), pair[0].max(pair[1]));
            if !taken.insert((i, k)) {
                continue;
            }
            let v = FixedPointValue::from_bits(fmt, magnitude(&mut rng, round), rng.below(modulus))?;
            upper.push((i, k, v));
        }
    }
    let mut h = SparseHermitian::from_upper(n, d, fmt, upper)?;
    h.seed = Some(seed);
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{compute_norms, expm_i};

    fn amplitude(u: &ComplexMatrix, to: &[C64], from: &[C64]) -> C64 {
        let v = u.apply(from);
        to.iter().zip(&v).map(|(a, b)| a.conj() * b).sum()
    }

    #[test]
    fn spin_small_cases() {
        assert_eq!(h_spin(1).unwrap(), pauli_x());
        let h = h_spin(2).unwrap();
        let c = 2f64.sqrt() / 2.0;
        assert!((h[(0, 1)].re - c).abs() < 1e-15 && (h[(1, 2)].re - c).abs() < 1e-15);
    }

    #[test]
    fn perfect_transfer() {
        for n in 1..=12 {
            let u = expm_i(&h_spin(n).unwrap(), n as f64 * std::f64::consts::FRAC_PI_2).unwrap();
            assert!(u[(n, 0)].norm() >= 1.0 - 1e-9, "n = {n}");
        }
    }

    #[test]
    fn or_acts_on_uniform() {
        let m = 4;
        let u: Vec<C64> = (0..2 * m)
            .map(|i| if i % 2 == 0 { C64::new(0.5, 0.0) } else { C64::new(0.0, 0.0) })
            .collect();
        let id = h_or(&[false; 4]).unwrap().apply(&u);
        assert!(id.iter().zip(&u).all(|(a, b)| (a - b).norm() < 1e-15));
        let flip = h_or(&[false, true, false, false]).unwrap().apply(&u);
        for i in 0..m {
            assert!(flip[2 * i].norm() < 1e-15);
            assert!((flip[2 * i + 1].re - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn parity_or_small() {
        let p = InstanceParams::new(2, 2, 1, vec![vec![true, false], vec![false, false]]).unwrap();
        let h = h_parity_or(&p).unwrap();
        let u = expm_i(&h, p.transfer_time()).unwrap();
        let amp = amplitude(&u, &parity_or_target(&p, 1), &parity_or_input(&p, 0));
        assert!(amp.norm() >= 1.0 - 1e-9);
    }

    #[test]
    fn dilation_identity() {
        let h = dilate_unitary(&ComplexMatrix::identity(2)).unwrap();
        assert_eq!(h, pauli_x().kron(&ComplexMatrix::identity(2)));
        assert!(dilate_unitary(&ComplexMatrix::real_diagonal(&[1.0, 2.0])).is_err());
    }

    #[test]
    fn random_sparse_is_reproducible() {
        let fmt = FixedPointFormat::default();
        let a = random_sparse(16, 4, 1.0, MagnitudeProfile::Uniform, fmt, 9).unwrap();
        let b = random_sparse(16, 4, 1.0, MagnitudeProfile::Uniform, fmt, 9).unwrap();
        assert_eq!(a, b);
        let norms = compute_norms(&a.decode()).unwrap();
        assert!(norms.chain_holds(4, 1e-9));
        assert!(norms.max_norm <= 1.0);
        let one = random_sparse(8, 1, 0.5, MagnitudeProfile::Constant, fmt, 2).unwrap();
        assert!(one.decode().row_nonzeros(0.0).iter().all(|&c| c <= 1));
    }
}
