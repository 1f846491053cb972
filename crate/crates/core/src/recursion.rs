//! Recursive simulation of a sum of block-encoded terms.
//!
//! Level 1 evolves the largest term by a truncated Jacobi–Anger series in
//! its encoded block. Level `k` evolves `H_{<k} + H_k` in the interaction
//! picture of `H_{<k}`, using level `k - 1` as its `e^{-iAs}` provider.

use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::blockenc::BlockEncoding;
use crate::dyson::{plan, truncated_dyson, DysonPlan, Evolution, EvolutionProvider, InteractionFrame};
use crate::error::{Error, Result};
use crate::numerics::{bessel_j, chebyshev_series, expm_i, jacobi_anger_degree, spectral_norm, ComplexMatrix, C64};
use crate::oracles::QueryCounts;

/// Tunable constants of the recursion.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[derive(Default)]
pub struct RecursionConfig {
    /// grid constant for every Dyson slice; `None` uses `2 max(1, alpha_B)`
    pub c_m: Option<f64>,
}


impl RecursionConfig {
    pub fn c_m_for(&self, alpha_b: f64) -> f64 {
        self.c_m.unwrap_or(2.0 * alpha_b.max(1.0))
    }
}

/// Queries made on behalf of one term.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelReport {
    /// position of the term in the caller's input
    pub term: usize,
    /// recursion level, 1 for the largest term
    pub level: usize,
    pub alpha: f64,
    /// queries per application of the term's encoding
    pub cost: QueryCounts,
    pub applications: u64,
    pub queries: QueryCounts,
    /// slices the top call spends at this level (level 1: Chebyshev degree of one call)
    pub slices: u64,
    /// error budget this level is allotted
    pub budget: f64,
}

#[derive(Clone, Debug)]
pub struct SimResult {
    pub operator: ComplexMatrix,
    /// `||operator - e^{-iHt}||`
    pub measured_error: f64,
    pub ledger: QueryCounts,
    /// one row per term, in input order
    pub levels: Vec<LevelReport>,
    pub t: f64,
    pub eps: f64,
}

impl SimResult {
    /// Total encoding applications across all terms.
    pub fn applications(&self) -> u64 {
        self.levels.iter().map(|l| l.applications).sum()
    }
}

struct Term {
    alpha: f64,
    cost: QueryCounts,
    /// encoded block, Hermitian part
    block: ComplexMatrix,
    cheb: Mutex<Vec<ComplexMatrix>>,
}

impl Term {
    fn new(enc: &BlockEncoding) -> Result<Self> {
        let b = enc.encoded_block();
        if !b.is_square() {
            return Err(Error::NotSquare {
                rows: b.rows(),
                cols: b.cols(),
            });
        }
        let asym = b.hermiticity_defect();
        if asym > 1e-9 {
            return Err(Error::NotHermitian { asymmetry: asym });
        }
        let block = (&b + &b.adjoint()).scale_real(0.5);
        Ok(Self {
            alpha: enc.alpha,
            cost: enc.cost,
            block,
            cheb: Mutex::new(Vec::new()),
        })
    }

    fn operator(&self) -> ComplexMatrix {
        self.block.scale_real(self.alpha)
    }

    fn dim(&self) -> usize {
        self.block.rows()
    }

    /// `e^{-i s alpha x}` by the degree-`q` Jacobi–Anger series, and `q`.
    fn evolve(&self, s: f64, eps: f64) -> (ComplexMatrix, usize) {
        let x = s * self.alpha;
        let n = self.dim();
        if x == 0.0 {
            return (ComplexMatrix::identity(n), 0);
        }
        let q = jacobi_anger_degree(x, eps);
        let j = bessel_j(q, x);
        let mut cache = self.cheb.lock().unwrap_or_else(|e| e.into_inner());
        if cache.len() <= q {
            *cache = chebyshev_series(&self.block, q);
        }
        let mut op = ComplexMatrix::zeros(n, n);
        let mut phase = C64::new(1.0, 0.0);
        for k in 0..=q {
            let w = if k == 0 { 1.0 } else { 2.0 };
            op.add_scaled(&cache[k], phase * (w * j[k]));
            phase *= C64::new(0.0, -1.0);
        }
        (op, q)
    }
}

/// Terms sorted by normalization, largest first.
pub struct TermStack {
    terms: Arc<Vec<Term>>,
    /// `order[k]` is the input position of sorted term `k`
    order: Vec<usize>,
    config: RecursionConfig,
}

impl TermStack {
    pub fn new(encs: &[BlockEncoding]) -> Result<Self> {
        Self::with_config(encs, RecursionConfig::default())
    }

    pub fn with_config(encs: &[BlockEncoding], config: RecursionConfig) -> Result<Self> {
        let first = encs.first().ok_or_else(|| Error::param("terms", "stack is empty"))?;
        let n = first.system_dim();
        let mut order: Vec<usize> = (0..encs.len()).collect();
        order.sort_by(|&a, &b| encs[b].alpha.total_cmp(&encs[a].alpha));
        let mut terms = Vec::with_capacity(encs.len());
        for &k in &order {
            let e = &encs[k];
            if e.system_dim() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    actual: e.system_dim(),
                }
                .at_level(k));
            }
            terms.push(Term::new(e).map_err(|err| err.at_level(k))?);
        }
        Ok(Self {
            terms: Arc::new(terms),
            order,
            config,
        })
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.terms[0].dim()
    }

    /// Normalizations in sorted order.
    pub fn alphas(&self) -> Vec<f64> {
        self.terms.iter().map(|t| t.alpha).collect()
    }

    /// Input positions in sorted order.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// `sum_j alpha_j x_j`
    pub fn hamiltonian(&self) -> ComplexMatrix {
        let mut h = ComplexMatrix::zeros(self.dim(), self.dim());
        for t in self.terms.iter() {
            h.add_scaled(&t.operator(), C64::new(1.0, 0.0));
        }
        h
    }

    fn provider(&self, levels: usize) -> LevelProvider {
        LevelProvider {
            terms: self.terms.clone(),
            levels,
            config: self.config,
        }
    }
}

/// `e^{-i(H_1 + ... + H_levels)s}` by the recursion.
struct LevelProvider {
    terms: Arc<Vec<Term>>,
    levels: usize,
    config: RecursionConfig,
}

impl LevelProvider {
    fn run(&self, s: f64, eps: f64) -> Result<Evolution> {
        let k = self.levels;
        if k == 1 {
            let term = &self.terms[0];
            let (op, q) = term.evolve(s, eps);
            let mut apps = vec![0; self.terms.len()];
            apps[0] = q as u64;
            return Ok(Evolution {
                op,
                cost: term.cost * q as u64,
                apps,
            });
        }
        let inner = LevelProvider {
            terms: self.terms.clone(),
            levels: k - 1,
            config: self.config,
        };
        let b = &self.terms[k - 1];
        let frame = InteractionFrame {
            b: b.operator(),
            alpha_a: inner.norm_bound(),
            alpha_b: b.alpha,
            provider: Arc::new(inner),
        };
        let own = eps / k as f64;
        let below = eps - own;
        let out = pair_step(&frame, b.cost, k - 1, self.terms.len(), s, own, below, &self.config)?;
        Ok(out.evolution)
    }
}

impl EvolutionProvider for LevelProvider {
    fn evolve(&self, s: f64, eps: f64) -> Result<Evolution> {
        self.run(s, eps).map_err(|e| match e {
            Error::AtLevel { .. } => e,
            other => other.at_level(self.levels),
        })
    }

    fn dim(&self) -> usize {
        self.terms[0].dim()
    }

    fn norm_bound(&self) -> f64 {
        self.terms[..self.levels].iter().map(|t| t.alpha).sum()
    }

    fn generator(&self) -> ComplexMatrix {
        let n = self.dim();
        let mut h = ComplexMatrix::zeros(n, n);
        for t in &self.terms[..self.levels] {
            h.add_scaled(&t.operator(), C64::new(1.0, 0.0));
        }
        h
    }
}

struct PairOutput {
    evolution: Evolution,
    slices: u64,
    plan: Option<DysonPlan>,
}

/// `L` slices of `e^{-iA tau} D(tau)`. `own` bounds the Dyson error summed
/// over slices, `below` the provider error summed over every provider call.
/// `b_slot` indexes the B term in `apps`.
#[allow(clippy::too_many_arguments)]
fn pair_step(
    frame: &InteractionFrame,
    b_cost: QueryCounts,
    b_slot: usize,
    slots: usize,
    t: f64,
    own: f64,
    below: f64,
    config: &RecursionConfig,
) -> Result<PairOutput> {
    let p = &frame.provider;
    let alpha_b = frame.alpha_b;
    if alpha_b == 0.0 || t == 0.0 {
        let mut e = p.evolve(t, own + below)?;
        e.apps.resize(slots, 0);
        return Ok(PairOutput {
            evolution: e,
            slices: 0,
            plan: None,
        });
    }
    let slices = (2.0 * alpha_b * t).ceil().max(1.0) as u64;
    let tau = t / slices as f64;
    let slice_eps = (own / slices as f64).min(0.5);
    let mut dp = plan(tau, slice_eps, frame.alpha_a, alpha_b, config.c_m_for(alpha_b))?;
    let calls = dp.power_count() as f64 + 1.0;
    dp.provider_eps = (below / (slices as f64 * calls)).min(0.5);
    if !(dp.provider_eps > 0.0) {
        return Err(Error::param("eps", "provider budget vanished"));
    }

    let dyson = truncated_dyson(frame, &dp)?;
    let head = p.evolve(tau, dp.provider_eps)?;
    let slice_op = &head.op * &dyson.op;

    // per slice: K uses of the select oracle, each with U_B and R, R^dag,
    // where R applies every power once; then one e^{-iA tau}
    let order = dp.order as u64;
    let mut apps = vec![0u64; slots];
    let mut cost = QueryCounts::default();
    let mut add = |e: &Evolution, times: u64, apps: &mut Vec<u64>| {
        cost += e.cost * times;
        for (a, x) in apps.iter_mut().zip(&e.apps) {
            *a += x * times;
        }
    };
    for pw in &dyson.powers {
        add(pw, 2 * order, &mut apps);
    }
    add(&head, 1, &mut apps);
    cost += b_cost * order;
    apps[b_slot] += order;

    let mut op = ComplexMatrix::identity(slice_op.rows());
    for _ in 0..slices {
        op = &slice_op * &op;
    }
    Ok(PairOutput {
        evolution: Evolution {
            op,
            cost: cost * slices,
            apps: apps.into_iter().map(|a| a * slices).collect(),
        },
        slices,
        plan: Some(dp),
    })
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps < 1.0 {
        Ok(())
    } else {
        Err(Error::param("eps", format!("must lie in (0, 1), got {eps}")))
    }
}

fn check_t(t: f64) -> Result<()> {
    if t >= 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::param("t", format!("must be finite and non-negative, got {t}")))
    }
}

fn measure(op: &ComplexMatrix, h: &ComplexMatrix, t: f64) -> Result<f64> {
    spectral_norm(&(op - &expm_i(h, t)?))
}

/// `e^{-iHt}` for the encoded `H` by a truncated Jacobi–Anger series,
/// charging one application of `enc` per Chebyshev degree.
pub fn simulate_single(enc: &BlockEncoding, t: f64, eps: f64) -> Result<SimResult> {
    check_eps(eps)?;
    check_t(t)?;
    let term = Term::new(enc)?;
    let (op, q) = term.evolve(t, eps);
    let measured_error = measure(&op, &term.operator(), t)?;
    let queries = term.cost * q as u64;
    Ok(SimResult {
        operator: op,
        measured_error,
        ledger: queries,
        levels: vec![LevelReport {
            term: 0,
            level: 1,
            alpha: term.alpha,
            cost: term.cost,
            applications: q as u64,
            queries,
            slices: q as u64,
            budget: eps,
        }],
        t,
        eps,
    })
}

/// `e^{-i(A+B)t}` in the interaction picture of `A`, with `provider` supplying
/// `e^{-iAs}`. Half of `eps` goes to the Dyson slices, half to provider calls.
pub fn simulate_pair(
    provider: Arc<dyn EvolutionProvider>,
    enc_b: &BlockEncoding,
    t: f64,
    eps: f64,
    config: &RecursionConfig,
) -> Result<SimResult> {
    check_eps(eps)?;
    check_t(t)?;
    let b = Term::new(enc_b)?;
    if provider.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: b.dim(),
            actual: provider.dim(),
        });
    }
    let alpha_a = provider.norm_bound();
    if alpha_a < b.alpha {
        return Err(Error::param(
            "alpha",
            format!("provider bound {alpha_a} is below alpha_B = {}", b.alpha),
        ));
    }
    let a = provider.generator();
    let frame = InteractionFrame {
        b: b.operator(),
        alpha_a,
        alpha_b: b.alpha,
        provider,
    };
    let out = pair_step(&frame, b.cost, 0, 1, t, eps / 2.0, eps / 2.0, config)?;
    let h = &a + &frame.b;
    let e = out.evolution;
    let measured_error = measure(&e.op, &h, t)?;
    let b_queries = b.cost * e.apps[0];
    let cost_a = e.cost - b_queries;
    Ok(SimResult {
        operator: e.op,
        measured_error,
        ledger: e.cost,
        levels: vec![
            LevelReport {
                term: 0,
                level: 2,
                alpha: b.alpha,
                cost: b.cost,
                applications: e.apps[0],
                queries: b_queries,
                slices: out.slices,
                budget: eps / 2.0,
            },
            LevelReport {
                term: 1,
                level: 1,
                alpha: alpha_a,
                cost: cost_a,
                applications: 1,
                queries: cost_a,
                slices: out.plan.map_or(0, |p| p.power_count() as u64 + 1),
                budget: eps / 2.0,
            },
        ],
        t,
        eps,
    })
}

/// `e^{-i sum_j H_j t}`; level `k` (by decreasing `alpha`) owns `eps/m` of the error.
pub fn simulate_stack(stack: &TermStack, t: f64, eps: f64) -> Result<SimResult> {
    check_eps(eps)?;
    check_t(t)?;
    let m = stack.len();
    let top = stack.provider(m);
    let (e, slices) = if m == 1 {
        let (op, q) = stack.terms[0].evolve(t, eps);
        let cost = stack.terms[0].cost * q as u64;
        (
            Evolution {
                op,
                cost,
                apps: vec![q as u64],
            },
            vec![q as u64],
        )
    } else {
        let b = &stack.terms[m - 1];
        let inner = stack.provider(m - 1);
        let frame = InteractionFrame {
            b: b.operator(),
            alpha_a: inner.norm_bound(),
            alpha_b: b.alpha,
            provider: Arc::new(inner),
        };
        let own = eps / m as f64;
        let out = pair_step(&frame, b.cost, m - 1, m, t, own, eps - own, &stack.config)
            .map_err(|e| match e {
                Error::AtLevel { .. } => e,
                other => other.at_level(m),
            })?;
        let mut slices = vec![0u64; m];
        slices[m - 1] = out.slices;
        (out.evolution, slices)
    };
    let measured_error = measure(&e.op, &top.generator(), t)?;
    let mut levels: Vec<LevelReport> = (0..m)
        .map(|k| {
            let term = &stack.terms[k];
            LevelReport {
                term: stack.order[k],
                level: k + 1,
                alpha: term.alpha,
                cost: term.cost,
                applications: e.apps[k],
                queries: term.cost * e.apps[k],
                slices: slices[k],
                budget: eps / m as f64,
            }
        })
        .collect();
    levels.sort_by_key(|l| l.term);
    Ok(SimResult {
        operator: e.op,
        measured_error,
        ledger: e.cost,
        levels,
        t,
        eps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyson::ExactEvolution;
    use crate::numerics::{random_hermitian, SplitMix64};

    fn enc(h: &ComplexMatrix) -> BlockEncoding {
        let a = spectral_norm(h).unwrap();
        BlockEncoding::of_matrix(h, a).unwrap()
    }

    #[test]
    fn single_zero_time_is_free() {
        let x = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let r = simulate_single(&enc(&x), 0.0, 1e-6).unwrap();
        assert_eq!(r.operator, ComplexMatrix::identity(2));
        assert_eq!(r.applications(), 0);
    }

    #[test]
    fn single_quarter_turn_of_x() {
        let x = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let r = simulate_single(&enc(&x), std::f64::consts::FRAC_PI_2, 1e-10).unwrap();
        let want = x.scale(C64::new(0.0, -1.0));
        assert!((&r.operator - &want).max_abs() < 1e-10);
    }

    #[test]
    fn single_degree_follows_tail_rule() {
        let x = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let r = simulate_single(&enc(&x), 1.0, 1e-6).unwrap();
        let q = r.levels[0].applications as usize;
        assert_eq!(q, jacobi_anger_degree(1.0, 1e-6));
        let j = bessel_j(q + 40, 1.0);
        let tail: f64 = j[q + 1..].iter().map(|v| 2.0 * v.abs()).sum();
        let prev = tail + 2.0 * j[q].abs();
        assert!(tail <= 1e-6 && prev > 1e-6);
        assert!(r.measured_error <= 1e-6);
    }

    #[test]
    fn pair_with_exact_provider() {
        let mut rng = SplitMix64::new(5);
        let a = random_hermitian(4, 1.0, &mut rng);
        let b = random_hermitian(4, 0.4, &mut rng);
        let p: Arc<dyn EvolutionProvider> = Arc::new(ExactEvolution::new(&a).unwrap());
        let r = simulate_pair(p, &enc(&b), 1.0, 1e-6, &RecursionConfig::default()).unwrap();
        assert!(r.measured_error <= 1e-6, "{:e}", r.measured_error);
    }

    #[test]
    fn pair_without_b_is_provider() {
        let mut rng = SplitMix64::new(6);
        let a = random_hermitian(3, 1.0, &mut rng);
        let p = Arc::new(ExactEvolution::new(&a).unwrap());
        let zero = BlockEncoding::of_matrix(&ComplexMatrix::zeros(3, 3), 1e-3).unwrap();
        let direct = p.evolve(0.8, 1e-6).unwrap().op;
        let r = simulate_pair(p, &zero, 0.8, 1e-6, &RecursionConfig::default()).unwrap();
        assert_eq!(r.operator, direct);
    }

    #[test]
    fn stack_of_one_is_single() {
        let mut rng = SplitMix64::new(7);
        let h = random_hermitian(4, 1.0, &mut rng);
        let e = enc(&h);
        let s = simulate_stack(&TermStack::new(std::slice::from_ref(&e)).unwrap(), 0.7, 1e-5).unwrap();
        let r = simulate_single(&e, 0.7, 1e-5).unwrap();
        assert_eq!(s.operator, r.operator);
        assert_eq!(s.ledger, r.ledger);
    }

    #[test]
    fn stack_of_two_within_budget() {
        let mut rng = SplitMix64::new(8);
        let h1 = random_hermitian(4, 1.0, &mut rng);
        let h2 = random_hermitian(4, 0.5, &mut rng);
        let stack = TermStack::new(&[enc(&h2), enc(&h1)]).unwrap();
        assert_eq!(stack.order(), &[1, 0]);
        let r = simulate_stack(&stack, 1.0, 1e-5).unwrap();
        assert!(r.measured_error <= 1e-5, "{:e}", r.measured_error);
        // term 0 is the smaller one, queried K per slice
        let top = &r.levels[0];
        assert_eq!(top.level, 2);
        assert_eq!(top.applications % top.slices, 0);
    }
}
