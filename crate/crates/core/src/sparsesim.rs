//! End-to-end sparse simulation: split `H` by entry magnitude, encode each
//! piece with amplified state preparation, and run the term recursion.

use serde::{Deserialize, Serialize};

use crate::blockenc::{amplitude_multiply, build_stateprep, AmplificationSpec, AncillaLayout, DeltaProfile};
use crate::costmodel::{optimal_m, Constants};
use crate::error::{Error, Result};
use crate::numerics::{expm_i, spectral_norm, ComplexMatrix, NormBounds, C64};
use crate::oracles::{OracleSet, QueryCounts};
use crate::recursion::{simulate_stack, RecursionConfig, SimResult, TermStack};

/// Cut-offs `0 = L_0 < L_1 < ... < L_m` with ratio `d^gamma`, one-norm
/// bounds per window and per-term encoding error budgets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSchedule {
    pub m: usize,
    pub d: usize,
    pub lambda_12: f64,
    pub gamma: f64,
    /// `m + 1` values starting at 0
    pub cutoffs: Vec<f64>,
    pub one_norms: Vec<f64>,
    /// infinite when `t = 0`
    pub deltas: Vec<f64>,
}

impl ThresholdSchedule {
    pub fn window(&self, j: usize) -> (f64, f64) {
        (self.cutoffs[j], self.cutoffs[j + 1])
    }
}

/// `max(1, round(sqrt(ln d) / 2))`
pub fn choose_m(d: f64) -> usize {
    if d <= 1.0 {
        return 1;
    }
    ((d.ln().sqrt() / 2.0).round() as usize).max(1)
}

/// Minimizer of the sparse cost bound over `m = 1..=12`.
pub fn choose_m_brute(t: f64, d: f64, lambda_12: f64, eps: f64) -> Result<usize> {
    optimal_m(t, d, lambda_12, eps, &Constants::default())
}

pub fn build_schedule(norms: &NormBounds, d: usize, m: usize, t: f64, eps: f64) -> Result<ThresholdSchedule> {
    if m == 0 {
        return Err(Error::param("m", "must be at least 1"));
    }
    if d == 0 {
        return Err(Error::param("d", "must be at least 1"));
    }
    let l12 = norms.one_to_two;
    if !(l12 > 0.0) || !l12.is_finite() {
        return Err(Error::param("Lambda_12", format!("must be positive, got {l12}")));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::param("eps", format!("must lie in (0, 1), got {eps}")));
    }
    let df = d as f64;
    let gamma = 1.0 / (2.0 * m as f64);
    let mut cutoffs = vec![0.0; m + 1];
    for j in 1..=m {
        cutoffs[j] = l12 * df.powf(j as f64 * gamma - 0.5);
    }
    cutoffs[m] = l12;
    let one_norms = (1..=m)
        .map(|j| if j == 1 { df.sqrt() * l12 } else { l12 * l12 / cutoffs[j - 1] })
        .collect();
    let delta = if t > 0.0 {
        eps / (m as f64 * t * df.sqrt() * l12)
    } else {
        f64::INFINITY
    };
    Ok(ThresholdSchedule {
        m,
        d,
        lambda_12: l12,
        gamma,
        cutoffs,
        one_norms,
        deltas: vec![delta; m],
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparseOptions {
    /// level count; `None` uses `choose_m`
    pub m: Option<usize>,
    /// use the measured largest column sum as `alpha_j` when it is tighter
    pub tighten: bool,
    /// injected `delta_j` as a fraction of the scheduled value
    pub delta_scale: f64,
    /// fraction of `eps` handed to the recursion
    pub recursion_share: f64,
    pub profile: DeltaProfile,
    pub c_am: f64,
    pub recursion: RecursionConfig,
}

impl Default for SparseOptions {
    fn default() -> Self {
        Self {
            m: None,
            tighten: false,
            delta_scale: 0.25,
            recursion_share: 0.5,
            profile: DeltaProfile::Alternating,
            c_am: 1.0,
            recursion: RecursionConfig::default(),
        }
    }
}

/// One nonempty window of the split.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparseTerm {
    /// window index, 0-based
    pub window: usize,
    pub lo: f64,
    pub hi: f64,
    pub nnz: usize,
    pub max_entry: f64,
    /// largest column sum of the piece
    pub measured_one_norm: f64,
    pub one_norm_bound: f64,
    pub tightened: bool,
    pub factor: f64,
    pub delta: f64,
    pub alpha: f64,
    pub repetitions: u64,
    pub layout: AncillaLayout,
    /// queries per application
    pub cost: QueryCounts,
    /// `||H_j|| ` of the piece
    pub spectral: f64,
    pub applications: u64,
}

#[derive(Clone, Debug)]
pub struct SparseResult {
    pub schedule: ThresholdSchedule,
    pub terms: Vec<SparseTerm>,
    /// windows with no entries
    pub dropped: Vec<usize>,
    /// recursion result; its `measured_error` is against `e^{-iHt}` of the input
    pub sim: SimResult,
    /// `||sum_j H~_j - H||`
    pub encoding_error: f64,
    /// error of the recursion against the encoded sum alone
    pub recursion_error: f64,
}

impl SparseResult {
    pub fn ledger(&self) -> QueryCounts {
        self.sim.ledger
    }
}

pub fn simulate_sparse(o: &OracleSet, norms: &NormBounds, t: f64, eps: f64, opts: &SparseOptions) -> Result<SparseResult> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::param("eps", format!("must lie in (0, 1), got {eps}")));
    }
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::param("t", format!("must be finite and non-negative, got {t}")));
    }
    let h = o.materialize();
    let n = h.rows();
    let d = o.sparsity();
    let top = o.max_entry();
    if top > norms.one_to_two * (1.0 + 1e-12) {
        return Err(Error::param(
            "norms",
            format!("largest entry {top} exceeds the stated Lambda_12 = {}", norms.one_to_two),
        ));
    }
    let m = opts.m.unwrap_or_else(|| choose_m(d as f64));
    let schedule = build_schedule(norms, d, m, t, eps)?;

    let mut terms = Vec::new();
    let mut encs = Vec::new();
    let mut dropped = Vec::new();
    for j in 0..m {
        let (lo, hi) = schedule.window(j);
        let sub = o.threshold(lo, hi)?;
        if sub.is_empty() {
            dropped.push(j);
            continue;
        }
        let built = encode_window(&sub, &schedule, j, opts).map_err(|e| e.at_level(j + 1))?;
        terms.push(built.0);
        encs.push(built.1);
    }

    let id = ComplexMatrix::identity(n);
    let (sim, encoded) = if encs.is_empty() {
        let sim = SimResult {
            operator: id.clone(),
            measured_error: 0.0,
            ledger: QueryCounts::default(),
            levels: Vec::new(),
            t,
            eps,
        };
        (sim, ComplexMatrix::zeros(n, n))
    } else {
        let stack = TermStack::with_config(&encs, opts.recursion)?;
        let sim = simulate_stack(&stack, t, eps * opts.recursion_share)?;
        (sim, stack.hamiltonian())
    };
    for l in &sim.levels {
        terms[l.term].applications = l.applications;
    }
    let recursion_error = sim.measured_error;
    let measured = spectral_norm(&(&sim.operator - &expm_i(&h, t)?))?;
    let encoding_error = spectral_norm(&(&encoded - &h))?;
    o.ledger().charge_all(&sim.ledger);
    let sim = SimResult {
        measured_error: measured,
        eps,
        ..sim
    };
    Ok(SparseResult {
        schedule,
        terms,
        dropped,
        sim,
        encoding_error,
        recursion_error,
    })
}

fn encode_window(
    sub: &OracleSet,
    schedule: &ThresholdSchedule,
    j: usize,
    opts: &SparseOptions,
) -> Result<(SparseTerm, crate::blockenc::BlockEncoding)> {
    let (lo, hi) = schedule.window(j);
    let d = schedule.d as f64;
    let piece = sub.materialize();
    let measured = sub.column_sums().into_iter().fold(0.0, f64::max);
    let bound = schedule.one_norms[j];
    let tightened = opts.tighten && measured < bound;
    let target = if tightened { measured } else { bound };
    let delta = if schedule.deltas[j].is_finite() {
        (schedule.deltas[j] * opts.delta_scale).min(0.5)
    } else {
        0.0
    };
    let pair = build_stateprep(sub, hi)?;
    let factor = (d * hi / target).sqrt() / (1.0 + delta);
    let spec = AmplificationSpec {
        factor,
        delta,
        profile: opts.profile.clone(),
        c_am: opts.c_am,
    };
    let enc = amplitude_multiply(&pair, &spec)?;
    let nnz = piece.as_slice().iter().filter(|z| **z != C64::new(0.0, 0.0)).count();
    let term = SparseTerm {
        window: j,
        lo,
        hi,
        nnz,
        max_entry: sub.max_entry(),
        measured_one_norm: measured,
        one_norm_bound: bound,
        tightened,
        factor,
        delta,
        alpha: enc.alpha,
        repetitions: spec.repetitions(),
        layout: pair.layout,
        cost: enc.cost,
        spectral: spectral_norm(&piece)?,
        applications: 0,
    };
    Ok((term, enc))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{random_sparse, MagnitudeProfile};
    use crate::oracles::{build_oracles, FixedPointFormat, SparseHermitian};

    #[test]
    fn choose_m_examples() {
        assert_eq!(choose_m(2.0), 1);
        assert_eq!(choose_m(256.0), 1);
    }

    #[test]
    fn schedule_examples() {
        let norms = NormBounds {
            max_norm: 0.5,
            spectral: 1.0,
            induced_one: 1.0,
            one_to_two: 1.0,
        };
        let s = build_schedule(&norms, 4, 2, 1.0, 1e-3).unwrap();
        assert!((s.cutoffs[1] - 0.5f64.sqrt()).abs() < 1e-12);
        assert_eq!(s.cutoffs[2], 1.0);
        assert!((s.one_norms[1] - 2f64.sqrt()).abs() < 1e-12);
        let one = build_schedule(&norms, 4, 1, 1.0, 1e-3).unwrap();
        assert_eq!(one.cutoffs, vec![0.0, 1.0]);
        assert_eq!(one.one_norms, vec![2.0]);
        assert!(build_schedule(&norms, 4, 1, 0.0, 1e-3).unwrap().deltas[0].is_infinite());
    }

    #[test]
    fn diagonal_instance() {
        let fmt = FixedPointFormat::default();
        let h = ComplexMatrix::real_diagonal(&[0.5, -0.25, 0.125, 0.75]);
        let sh = SparseHermitian::from_dense(&h, 1, fmt).unwrap();
        let norms = *sh.norms();
        let o = build_oracles(sh);
        let r = simulate_sparse(&o, &norms, 1.0, 1e-4, &SparseOptions::default()).unwrap();
        assert_eq!(r.schedule.m, 1);
        assert!(r.sim.measured_error <= 1e-4, "{:e}", r.sim.measured_error);
    }

    #[test]
    fn random_instance_within_budget() {
        let fmt = FixedPointFormat::default();
        let sh = random_sparse(16, 4, 0.5, MagnitudeProfile::LogUniform { decades: 1.5 }, fmt, 4).unwrap();
        let norms = *sh.norms();
        let o = build_oracles(sh);
        for m in [1, 2] {
            let opts = SparseOptions {
                m: Some(m),
                ..Default::default()
            };
            let r = simulate_sparse(&o, &norms, 1.0, 1e-4, &opts).unwrap();
            assert!(r.sim.measured_error <= 1e-4, "m = {m}: {:e}", r.sim.measured_error);
            for term in &r.terms {
                assert!(term.measured_one_norm <= term.one_norm_bound * (1.0 + 1e-12));
            }
            let per_term: u64 = r.terms.iter().map(|t| t.cost.o_h * t.applications).sum();
            assert_eq!(per_term, r.ledger().o_h);
        }
    }
}
