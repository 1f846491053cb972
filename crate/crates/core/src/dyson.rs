//! Interaction-picture evolution and the discrete truncated Dyson series.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::blockenc::BlockEncoding;
use crate::error::{Error, Result};
use crate::numerics::{expm_i, hermitian_eig, ComplexMatrix, EigenDecomposition, C64};
use crate::oracles::{Query, QueryCounts};

/// An approximation of `e^{-iAs}` and the queries one application costs.
#[derive(Clone, Debug)]
pub struct Evolution {
    pub op: ComplexMatrix,
    pub cost: QueryCounts,
    /// applications of each term encoding, for recursive providers
    pub apps: Vec<u64>,
}

/// Source of `e^{-iAs}` accurate to `eps`.
pub trait EvolutionProvider: Send + Sync {
    fn evolve(&self, s: f64, eps: f64) -> Result<Evolution>;
    fn dim(&self) -> usize;
    /// upper bound on `||A||`
    fn norm_bound(&self) -> f64;
    /// the generator `A` itself, for measuring errors
    fn generator(&self) -> ComplexMatrix;
}

/// Exact `e^{-iAs}` from one eigendecomposition; each call costs one `exp_A` query.
pub struct ExactEvolution {
    a: ComplexMatrix,
    eig: EigenDecomposition,
}

impl ExactEvolution {
    pub fn new(a: &ComplexMatrix) -> Result<Self> {
        Ok(Self {
            a: a.clone(),
            eig: hermitian_eig(a)?,
        })
    }
}

/// `e^{-iAs}` at `s`, for any provider, with its error against `exact`.
pub fn provider_error(p: &dyn EvolutionProvider, exact: &ComplexMatrix, s: f64, eps: f64) -> Result<f64> {
    let e = p.evolve(s, eps)?;
    crate::numerics::spectral_norm(&(&e.op - &expm_i(exact, s)?))
}

impl EvolutionProvider for ExactEvolution {
    fn evolve(&self, s: f64, _eps: f64) -> Result<Evolution> {
        Ok(Evolution {
            op: self.eig.map(|l| C64::from_polar(1.0, -l * s)),
            cost: QueryCounts::default().with(Query::ExpA, 1),
            apps: Vec::new(),
        })
    }

    fn dim(&self) -> usize {
        self.eig.eigenvalues.len()
    }

    fn norm_bound(&self) -> f64 {
        self.eig.eigenvalues.iter().fold(0.0, |m, l| m.max(l.abs()))
    }

    fn generator(&self) -> ComplexMatrix {
        self.a.clone()
    }
}

/// `B`, bounds `alpha_A >= ||A||`, `alpha_B >= ||B||`, and an `e^{-iAs}` provider.
#[derive(Clone)]
pub struct InteractionFrame {
    pub b: ComplexMatrix,
    pub alpha_a: f64,
    pub alpha_b: f64,
    pub provider: Arc<dyn EvolutionProvider>,
}

impl InteractionFrame {
    /// Frame with an exact provider and spectral norms as the bounds.
    pub fn exact(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<Self> {
        let provider = ExactEvolution::new(a)?;
        Ok(Self {
            b: b.clone(),
            alpha_a: provider.norm_bound(),
            alpha_b: crate::numerics::spectral_norm(b)?,
            provider: Arc::new(provider),
        })
    }
}

/// `H_I(s) = E(s)^dag B E(s)` with `E(s) = e^{-iAs}`.
pub fn interaction_ham(frame: &InteractionFrame, s: f64) -> Result<ComplexMatrix> {
    let e = frame.provider.evolve(s, 1e-12)?.op;
    Ok(conjugate(&e, &frame.b))
}

/// `E^dag X E`
fn conjugate(e: &ComplexMatrix, x: &ComplexMatrix) -> ComplexMatrix {
    e.adjoint_matmul(&(x * e))
}

/// Grid size, truncation order and budgets for one Dyson slice.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DysonPlan {
    pub tau: f64,
    pub eps: f64,
    pub grid: u64,
    pub order: usize,
    pub alpha_a: f64,
    pub alpha_b: f64,
    pub alpha_prime: f64,
    pub c_m: f64,
    /// accuracy requested from each provider call
    pub provider_eps: f64,
}

impl DysonPlan {
    pub fn step(&self) -> f64 {
        self.tau / self.grid as f64
    }

    /// Number of controlled powers `e^{-iA 2^k Delta}` needed to reach every grid point.
    pub fn power_count(&self) -> u32 {
        u64::BITS - (self.grid - 1).leading_zeros()
    }
}

/// `M = ceil(c_M (tau^2/eps)(alpha'/alpha_B + 1))`, `alpha' = 2 alpha_A alpha_B`;
/// `K` smallest with `(2 alpha_B tau)^{K+1} / (K+1)! <= eps/2`.
pub fn plan(tau: f64, eps: f64, alpha_a: f64, alpha_b: f64, c_m: f64) -> Result<DysonPlan> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::param("eps", format!("must lie in (0, 1), got {eps}")));
    }
    if !(tau >= 0.0) || !tau.is_finite() {
        return Err(Error::param("tau", format!("must be finite and non-negative, got {tau}")));
    }
    if alpha_a < 0.0 || alpha_b < 0.0 {
        return Err(Error::param("alpha", "norm bounds must be non-negative"));
    }
    if alpha_b > 0.0 && tau * 2.0 * alpha_b > 1.0 + 1e-12 {
        return Err(Error::param(
            "tau",
            format!("tau = {tau} exceeds 1/(2 alpha_B) = {}", 0.5 / alpha_b),
        ));
    }
    let alpha_prime = 2.0 * alpha_a * alpha_b;
    let (grid, order) = if alpha_b == 0.0 || tau == 0.0 {
        (1, 0)
    } else {
        let m = (c_m * tau * tau / eps * (alpha_prime / alpha_b + 1.0)).ceil().max(1.0);
        if m > 1e15 {
            return Err(Error::param("eps", "grid size overflows"));
        }
        let x = 2.0 * alpha_b * tau;
        let mut k = 0usize;
        // term = x^{k+1} / (k+1)!
        let mut term = x;
        while term > eps / 2.0 {
            k += 1;
            term *= x / (k + 1) as f64;
        }
        (m as u64, k)
    };
    let mut p = DysonPlan {
        tau,
        eps,
        grid,
        order,
        alpha_a,
        alpha_b,
        alpha_prime,
        c_m,
        provider_eps: eps,
    };
    p.provider_eps = eps / (4.0 * (p.power_count() as f64 + 1.0));
    Ok(p)
}

/// Truncated series with the provider calls it made.
#[derive(Clone, Debug)]
pub struct DysonOutput {
    pub op: ComplexMatrix,
    /// `e^{-iA Delta 2^k}` for `k = 0..power_count`
    pub powers: Vec<Evolution>,
}

type Poly = Vec<ComplexMatrix>;

/// `later * earlier`, truncated at degree `k`.
fn poly_mul(later: &Poly, earlier: &Poly, k: usize) -> Poly {
    let n = later[0].rows();
    (0..=k)
        .map(|deg| {
            let mut acc = ComplexMatrix::zeros(n, n);
            for i in 0..=deg {
                if i < later.len() && deg - i < earlier.len() {
                    let prod = &later[i] * &earlier[deg - i];
                    acc.add_scaled(&prod, C64::new(1.0, 0.0));
                }
            }
            acc
        })
        .collect()
}

/// Conjugates every coefficient but the constant one, which stays exactly `I`
/// (conjugating it would feed `E`'s rounding into every doubling).
fn poly_conj(e: &ComplexMatrix, p: &Poly) -> Poly {
    p.iter()
        .enumerate()
        .map(|(i, x)| if i == 0 { x.clone() } else { conjugate(e, x) })
        .collect()
}

/// `sum_{k<=K} (-i Delta)^k sum_{j_1 < ... < j_k} H_I(t_{j_k}) ... H_I(t_{j_1})`.
///
/// Evaluated as the degree-`K` part of `prod_j (I - i Delta lambda H_I(t_j))`
/// by doubling: the segment starting at `t` is the first segment conjugated
/// by `e^{-iAt}`, so only the powers `e^{-iA 2^k Delta}` are needed.
pub fn truncated_dyson(frame: &InteractionFrame, plan: &DysonPlan) -> Result<DysonOutput> {
    let n = frame.b.rows();
    if frame.provider.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: frame.provider.dim(),
        });
    }
    let k = plan.order;
    let id = ComplexMatrix::identity(n);
    if k == 0 {
        return Ok(DysonOutput { op: id, powers: vec![] });
    }
    let delta = plan.step();
    let bits = plan.power_count();
    let mut powers = Vec::with_capacity(bits as usize);
    for j in 0..bits {
        powers.push(frame.provider.evolve(delta * (1u64 << j) as f64, plan.provider_eps)?);
    }
    // segment of length 2^j starting at 0
    let mut seg: Poly = vec![id.clone(), frame.b.scale(C64::new(0.0, -delta))];
    let mut acc: Poly = vec![id.clone()];
    let mut offset = id.clone();
    let mut remaining = plan.grid;
    let mut j = 0usize;
    loop {
        if remaining & 1 == 1 {
            let shifted = poly_conj(&offset, &seg);
            acc = poly_mul(&shifted, &acc, k);
            if remaining > 1 {
                offset = &powers[j].op * &offset;
            }
        }
        remaining >>= 1;
        if remaining == 0 {
            break;
        }
        let e = &powers[j].op;
        let shifted = poly_conj(e, &seg);
        seg = poly_mul(&shifted, &seg, k);
        j += 1;
    }
    let mut op = ComplexMatrix::zeros(n, n);
    for term in &acc {
        op.add_scaled(term, C64::new(1.0, 0.0));
    }
    Ok(DysonOutput { op, powers })
}

/// Same sum by the prefix recurrence `S_k(j+1) = S_k(j) + (-i Delta) H_I(t_j) S_{k-1}(j)`;
/// `O(K M)` products and one provider call per grid point.
pub fn truncated_dyson_prefix(frame: &InteractionFrame, plan: &DysonPlan) -> Result<ComplexMatrix> {
    let n = frame.b.rows();
    let k = plan.order;
    let delta = plan.step();
    let mut s: Vec<ComplexMatrix> = vec![ComplexMatrix::identity(n)];
    s.extend((0..k).map(|_| ComplexMatrix::zeros(n, n)));
    for j in 0..plan.grid {
        let h = interaction_ham(frame, j as f64 * delta)?.scale(C64::new(0.0, -delta));
        for deg in (1..=k).rev() {
            let add = &h * &s[deg - 1];
            s[deg].add_scaled(&add, C64::new(1.0, 0.0));
        }
    }
    let mut op = ComplexMatrix::zeros(n, n);
    for term in &s {
        op.add_scaled(term, C64::new(1.0, 0.0));
    }
    Ok(op)
}

/// `T(tau, 0) = e^{iA tau} e^{-i(A+B) tau}`.
pub fn exact_propagator(a: &ComplexMatrix, b: &ComplexMatrix, tau: f64) -> Result<ComplexMatrix> {
    let ea = expm_i(a, -tau)?;
    let eh = expm_i(&(a + b), tau)?;
    Ok(&ea * &eh)
}

/// Largest grid that `select_unitary` will materialize.
pub const SELECT_MAX_GRID: u64 = 8;

/// `(R^dag (x) I)(I_M (x) U_B)(R (x) I)` with `R = sum_j |j><j| (x) e^{-iA j tau/M}`.
/// The encoded operator on `d (x) s` is block-diagonal with blocks `H_I(j tau/M) / alpha_B`.
pub fn select_unitary(frame: &InteractionFrame, plan: &DysonPlan, enc_b: &BlockEncoding) -> Result<BlockEncoding> {
    let m = plan.grid;
    if m > SELECT_MAX_GRID {
        return Err(Error::param("M", format!("select unitary materializes at most {SELECT_MAX_GRID} grid points, got {m}")));
    }
    let m = m as usize;
    let n = frame.b.rows();
    if enc_b.system_dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: enc_b.system_dim(),
        });
    }
    let a_dim = enc_b.ancilla_dim();
    let sys = m * n;
    let dim = a_dim * sys;
    let delta = plan.step();
    let mut rot = ComplexMatrix::zeros(dim, dim);
    let mut cost = enc_b.cost;
    for j in 0..m {
        let e = frame.provider.evolve(j as f64 * delta, 1e-12)?;
        cost += e.cost * 2;
        for x in 0..a_dim {
            rot.set_block(x * sys + j * n, x * sys + j * n, &e.op);
        }
    }
    // I_M (x) U_B with index (x, j, s)
    let ub = enc_b.unitary();
    let sel = ComplexMatrix::from_fn(dim, dim, |r, c| {
        let (xr, jr, sr) = (r / sys, (r / n) % m, r % n);
        let (xc, jc, sc) = (c / sys, (c / n) % m, c % n);
        if jr != jc {
            return C64::new(0.0, 0.0);
        }
        ub[(xr * n + sr, xc * n + sc)]
    });
    let u = rot.adjoint_matmul(&(&sel * &rot));
    BlockEncoding::from_unitary(u, a_dim, sys, enc_b.alpha, cost)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{random_hermitian, spectral_norm, SplitMix64};

    #[test]
    fn plan_examples() {
        let p = plan(0.5, 1e-3, 1.0, 1.0, 1.0).unwrap();
        assert_eq!(p.alpha_prime, 2.0);
        assert_eq!(p.grid, 750);
        let p = plan(0.5, 1e-6, 1.0, 1.0, 1.0).unwrap();
        assert_eq!(p.order, 9);
        assert!(plan(0.6, 1e-3, 1.0, 1.0, 1.0).is_err());
        assert!(plan(0.5, 1.5, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn doubling_matches_prefix() {
        let mut rng = SplitMix64::new(11);
        let a = random_hermitian(3, 1.0, &mut rng);
        let b = random_hermitian(3, 0.3, &mut rng);
        let f = InteractionFrame::exact(&a, &b).unwrap();
        for grid in [1u64, 2, 5, 13, 64] {
            let mut p = plan(0.4 / f.alpha_b.max(1.0), 1e-4, f.alpha_a, f.alpha_b, 1.0).unwrap();
            p.grid = grid;
            let d1 = truncated_dyson(&f, &p).unwrap().op;
            let d2 = truncated_dyson_prefix(&f, &p).unwrap();
            assert!((&d1 - &d2).max_abs() < 1e-13, "M = {grid}");
        }
    }

    #[test]
    fn interaction_two_by_two() {
        let a = ComplexMatrix::real_diagonal(&[0.3, -0.8]);
        let b = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let f = InteractionFrame::exact(&a, &b).unwrap();
        let s = 0.7;
        let h = interaction_ham(&f, s).unwrap();
        let want = C64::from_polar(1.0, (0.3 + 0.8) * s);
        assert!((h[(0, 1)] - want).norm() < 1e-14);
        assert!((h[(1, 0)] - want.conj()).norm() < 1e-14);
    }

    #[test]
    fn slice_error_within_budget() {
        let mut rng = SplitMix64::new(3);
        let a = random_hermitian(4, 1.0, &mut rng);
        let b = random_hermitian(4, 0.5, &mut rng);
        let f = InteractionFrame::exact(&a, &b).unwrap();
        let tau = 0.4 / f.alpha_b;
        let p = plan(tau, 1e-8, f.alpha_a, f.alpha_b, 1.0).unwrap();
        let d = truncated_dyson(&f, &p).unwrap().op;
        let err = spectral_norm(&(&d - &exact_propagator(&a, &b, tau).unwrap())).unwrap();
        assert!(err <= 1e-8, "{err:e}");
    }
}
