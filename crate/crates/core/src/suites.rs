//! Seeded regression suites. Every row carries its measured value, its
//! tolerance and a pass flag; CSV output is byte-stable for a given seed.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::blockenc::{amplitude_multiply, build_stateprep, max_factor, verify, AmplificationSpec, DeltaProfile};
use crate::costmodel::{cost_recursion, cost_single, cost_sparse, fitted_exponent, optimal_m, recursion_closed_form, recursion_symbolic, Constants};
use crate::dyson::{exact_propagator, plan, truncated_dyson, InteractionFrame};
use crate::error::{Error, Result};
use crate::gadgets::{exhaustive_sweep, gate_count};
use crate::instances::{
    dilate_unitary, h_parity, h_parity_or, parity_or_input, parity_or_target, random_sparse, InstanceParams,
    MagnitudeProfile,
};
use crate::numerics::{compute_norms, expm_i, random_hermitian, random_unitary, spectral_norm, ComplexMatrix, SplitMix64, C64};
use crate::oracles::{build_oracles, FixedPointFormat, OracleSet};
use crate::recursion::{simulate_single, simulate_stack, TermStack};
use crate::sparsesim::{simulate_sparse, SparseOptions};

pub const SUITES: [&str; 10] = [
    "norms", "blockenc", "amplify", "gadget", "dyson", "recursion", "sparse", "lowerbound", "dilation", "cost",
];

/// How a measured value is judged against its tolerance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Bound {
    /// `measured <= allowed`
    Max,
    /// `measured >= allowed`
    Min,
    /// reported only
    Info,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub case: String,
    pub metric: String,
    pub measured: f64,
    pub allowed: f64,
    pub bound: Bound,
    pub pass: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: String,
    pub checks: Vec<Check>,
}

impl Check {
    pub fn new(case: impl Into<String>, metric: impl Into<String>, measured: f64, allowed: f64, bound: Bound) -> Self {
        let pass = match bound {
            Bound::Max => measured <= allowed,
            Bound::Min => measured >= allowed,
            Bound::Info => true,
        };
        Self {
            case: case.into(),
            metric: metric.into(),
            measured,
            allowed,
            bound,
            pass,
        }
    }
}

impl SuiteReport {
    pub fn new(suite: &str) -> Self {
        Self {
            suite: suite.to_string(),
            checks: Vec::new(),
        }
    }

    fn push(&mut self, case: impl Into<String>, metric: &str, measured: f64, allowed: f64, bound: Bound) {
        self.checks.push(Check::new(case, metric, measured, allowed, bound));
    }

    fn max(&mut self, case: impl Into<String>, metric: &str, measured: f64, allowed: f64) {
        self.push(case, metric, measured, allowed, Bound::Max);
    }

    fn min(&mut self, case: impl Into<String>, metric: &str, measured: f64, allowed: f64) {
        self.push(case, metric, measured, allowed, Bound::Min);
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    /// Checks whose metric starts with `prefix`.
    pub fn metric<'a>(&'a self, prefix: &'a str) -> impl Iterator<Item = &'a Check> + 'a {
        self.checks.iter().filter(move |c| c.metric.starts_with(prefix))
    }

    /// Worst measured value of a metric: largest for `Max`, smallest for `Min`.
    pub fn worst(&self, metric: &str) -> Option<f64> {
        let mut it = self.checks.iter().filter(|c| c.metric == metric);
        let first = it.next()?;
        let pick = |a: f64, b: f64| match first.bound {
            Bound::Min => a.min(b),
            _ => a.max(b),
        };
        Some(it.fold(first.measured, |a, c| pick(a, c.measured)))
    }

    /// Columns `suite,case,metric,measured,allowed,pass`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("suite,case,metric,measured,allowed,pass\n");
        for c in &self.checks {
            let _ = writeln!(
                out,
                "{},{},{},{:.6e},{:.6e},{}",
                self.suite, c.case, c.metric, c.measured, c.allowed, c.pass
            );
        }
        out
    }
}

/// Instance counts are scaled down by `Quick` for smoke runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scale {
    Full,
    Quick,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub seed: u64,
    pub scale: Scale,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            seed: 2024,
            scale: Scale::Full,
        }
    }
}

impl SuiteConfig {
    fn count(&self, full: usize, quick: usize) -> usize {
        match self.scale {
            Scale::Full => full,
            Scale::Quick => quick,
        }
    }

    fn rng(&self, salt: u64) -> SplitMix64 {
        SplitMix64::new(self.seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15))
    }
}

pub fn run_suite(name: &str, cfg: &SuiteConfig) -> Result<SuiteReport> {
    match name {
        "norms" => norms(cfg),
        "blockenc" => blockenc(cfg),
        "amplify" => amplify(cfg),
        "gadget" => gadget(cfg),
        "dyson" => dyson(cfg),
        "recursion" => recursion(cfg),
        "sparse" => sparse(cfg),
        "lowerbound" => lowerbound(cfg),
        "dilation" => dilation(cfg),
        "cost" => cost(cfg),
        "" => Err(Error::param("suite", format!("name required; one of {}", SUITES.join(", ")))),
        other => Err(Error::param("suite", format!("unknown suite {other:?}; one of {}", SUITES.join(", ")))),
    }
}

fn random_profile(rng: &mut SplitMix64) -> MagnitudeProfile {
    match rng.below(3) {
        0 => MagnitudeProfile::Uniform,
        1 => MagnitudeProfile::Constant,
        _ => MagnitudeProfile::LogUniform {
            decades: rng.uniform(0.5, 3.0),
        },
    }
}

fn random_instance(rng: &mut SplitMix64, max_log_n: u32, max_d: usize, fmt: FixedPointFormat, lambda: f64) -> Result<OracleSet> {
    let n = 1usize << (1 + rng.below(max_log_n as u64) as u32);
    let d = 1 + rng.below(max_d.min(n) as u64) as usize;
    let profile = random_profile(rng);
    let seed = rng.next_u64();
    Ok(build_oracles(random_sparse(n, d, lambda, profile, fmt, seed)?))
}

/// Every link of the norm chain on random sparse instances.
pub fn norms(cfg: &SuiteConfig) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new("norms");
    let mut rng = cfg.rng(1);
    let fmt = FixedPointFormat::default();
    for i in 0..cfg.count(1000, 50) {
        let lambda = rng.uniform(0.1, 4.0);
        let o = random_instance(&mut rng, 6, 8, fmt, lambda)?;
        let slack = o.matrix().norms().chain_slacks(o.sparsity());
        let worst = slack.iter().copied().fold(f64::INFINITY, f64::min);
        rep.min(format!("{i}"), "min_slack", worst, -1e-9);
    }
    Ok(rep)
}

fn small_format() -> FixedPointFormat {
    FixedPointFormat::new(3, 1, 4).expect("valid")
}

/// Instance for the encoding suites: literal layout on a tiny format every
/// other case, compact on the default format otherwise.
fn encoding_instance(rng: &mut SplitMix64, i: usize) -> Result<(OracleSet, f64)> {
    if i.is_multiple_of(2) {
        let o = random_instance(rng, 3, 4, small_format(), 2.0)?;
        Ok((o, 2.0))
    } else {
        let lambda = rng.uniform(0.2, 3.0);
        let o = random_instance(rng, 4, 4, FixedPointFormat::default(), lambda)?;
        let lambda = o.max_entry() * rng.uniform(1.0, 1.5);
        Ok((o, lambda))
    }
}

/// Residual of the plain encoding and of the exact odd-factor multiplication.
pub fn blockenc(cfg: &SuiteConfig) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new("blockenc");
    let mut rng = cfg.rng(2);
    for i in 0..cfg.count(200, 20) {
        let (o, lambda) = encoding_instance(&mut rng, i)?;
        let h = o.materialize();
        let pair = build_stateprep(&o, lambda)?;
        let case = format!("{i}:{:?}:N{}:d{}", pair.layout, o.dim(), o.sparsity());
        rep.max(case.clone(), "residual_plain", verify(&pair.encoding()?, &h)?, 1e-9);
        let top = max_factor(&pair, &o).floor() as u64;
        let c = if top.is_multiple_of(2) { top.saturating_sub(1).max(1) } else { top };
        let enc = amplitude_multiply(&pair, &AmplificationSpec::exact(c as f64))?;
        rep.max(case, "residual_amplified", verify(&enc, &h)?, 1e-8);
    }
    Ok(rep)
}

/// `||H~ - H|| <= ||H|| (2 delta + delta^2)` with injected per-column errors.
pub fn amplify(cfg: &SuiteConfig) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new("amplify");
    let mut rng = cfg.rng(3);
    for i in 0..cfg.count(60, 8) {
        let (o, lambda) = encoding_instance(&mut rng, i)?;
        let h = o.materialize();
        let hn = spectral_norm(&h)?;
        let pair = build_stateprep(&o, lambda)?;
        for delta in [1e-2, 1e-4] {
            let spec = AmplificationSpec {
                factor: max_factor(&pair, &o) / (1.0 + delta),
                delta,
                profile: DeltaProfile::Random { seed: rng.next_u64() },
                c_am: 1.0,
            };
            let enc = amplitude_multiply(&pair, &spec)?;
            let err = spectral_norm(&(&enc.encoded_operator() - &h))?;
            rep.max(format!("{i}:delta{delta:e}"), "operator_error", err, hn * (2.0 * delta + delta * delta) + 1e-12);
        }
    }
    Ok(rep)
}

/// Every format with `p + m + n + 1 <= max_b`, `p, n >= 1`.
pub fn gadget_formats(max_b: u32) -> Vec<FixedPointFormat> {
    let mut out = Vec::new();
    for p in 1..max_b {
        for m in 0..max_b {
            for n in 1..max_b {
                if p + m + n < max_b {
                    out.push(FixedPointFormat::new(p, m, n).expect("small format"));
                }
            }
        }
    }
    out
}

/// Exhaustive amplitude check and affine gate count.
pub fn gadget(cfg: &SuiteConfig) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new("gadget");
    let max_b = cfg.count(10, 7) as u32;
    let mut values = 0usize;
    for fmt in gadget_formats(max_b) {
        let lambda = 2f64.powi(fmt.m as i32);
        let s = exhaustive_sweep(fmt, lambda)?;
        values += s.values;
        let case = format!("p{}m{}n{}", fmt.p, fmt.m, fmt.n);
        rep.max(case.clone(), "amplitude_error", s.max_amplitude_error, 1e-12);
        rep.max(case.clone(), "garbage_error", s.max_component_error, 1e-12);
        rep.max(case, "leak", s.max_leak, 1e-12);
    }
    rep.push("all", "values", values as f64, f64::NAN, Bound::Info);
    // second differences of the gate count along each width
    let count = |p: u32, m: u32, n: u32| gate_count(FixedPointFormat::new(p, m, n).expect("valid")).0.total as i64;
    let mut residual = 0i64;
    for p in 1..=4 {
        for m in 0..=3 {
            for n in 1..=4 {
                residual = residual.max((count(p, m, n + 2) - 2 * count(p, m, n + 1) + count(p, m, n)).abs());
                residual = residual.max((count(p + 2, m, n) - 2 * count(p + 1, m, n) + count(p, m, n)).abs());
                residual = residual.max((count(p, m + 2, n) - 2 * count(p, m + 1, n) + count(p, m, n)).abs());
            }
        }
    }
    rep.max("all", "gate_count_curvature", residual as f64, 0.0);
    Ok(rep)
}

/// Slice error against the exact propagator and first-order grid convergence.
pub fn dyson(cfg: &SuiteConfig) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new("dyson");
    let mut rng = cfg.rng(5);
    for i in 0..cfg.count(8, 2) {
        let a = random_hermitian(4, 1.0, &mut rng);
        let b = random_hermitian(4, rng.uniform(0.2, 0.8), &mut rng);
        let f = InteractionFrame::exact(&a, &b)?;
        let tau = rng.uniform(0.2, 1.0) * 0.5 / f.alpha_b;
        let exact = exact_propagator(&a, &b, tau)?;
        for eps in [1e-4, 1e-8] {
            let p = plan(tau, eps, f.alpha_a, f.alpha_b, 1.0)?;
            let d = truncated_dyson(&f, &p)?.op;
            rep.max(format!("{i}:eps{eps:e}:M{}", p.grid), "slice_error", spectral_norm(&(&d - &exact))?, eps);
        }
        let mut p = plan(tau, 1e-14, f.alpha_a, f.alpha_b, 1.0)?;
        let mut errs = Vec::new();
        for grid in [16u64, 32] {
            p.grid = grid;
            errs.push(spectral_norm(&(&truncated_dyson(&f, &p)?.op - &exact))?);
        }
        rep.min(format!("{i}:M16->32"), "halving_gain", errs[0] / errs[1], 1.8);
    }
    Ok(rep)
}

/// Recursion error and ledger against the closed form.
pub fn recursion(cfg: &SuiteConfig) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new("recursion");
    let mut rng = cfg.rng(6);
    let k = Constants::default();
    let reps = cfg.count(2, 1);
    for m in 1..=3usize {
        for &n in &[2usize, 4, 8] {
            for &t in &[0.5, 1.0] {
                for &eps in &[1e-3, 1e-5] {
                    for r in 0..reps {
                        let encs: Vec<_> = (0..m)
                            .map(|j| {
                                let h = random_hermitian(n, rng.uniform(0.3, 1.0) / (j + 1) as f64, &mut rng);
                                let alpha = spectral_norm(&h)?;
                                crate::blockenc::BlockEncoding::of_matrix(&h, alpha)
                            })
                            .collect::<Result<_>>()?;
                        let stack = TermStack::new(&encs)?;
                        let res = simulate_stack(&stack, t, eps)?;
                        let case = format!("m{m}:N{n}:t{t}:eps{eps:e}:{r}");
                        rep.max(case.clone(), "error", res.measured_error, eps);
                        let alphas = stack.alphas();
                        let bound = recursion_closed_form(&alphas, &vec![1.0; m], t, eps, &k);
                        rep.max(case, "ledger_over_bound", res.ledger.u_b as f64 / bound, 8.0);
                    }
                }
            }
        }
    }
    Ok(rep)
}

/// Two-scale instance with `Lambda_12 <= 1` and one large entry per column.
pub fn regression_instance(d: usize, seed: u64) -> Result<OracleSet> {
    let small = 1.0 / (2.0 * (d.max(2) - 1) as f64).sqrt();
    let h = random_sparse(
        32,
        d,
        0.5f64.sqrt(),
        MagnitudeProfile::TwoScale { small },
        FixedPointFormat::default(),
        seed,
    )?;
    Ok(build_oracles(h))
}

/// End-to-end error, ledger decomposition, and the sparsity regression.
pub fn sparse(cfg: &SuiteConfig) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new("sparse");
    let mut rng = cfg.rng(7);
    let k = Constants::default();
    let eps = 1e-4;
    for i in 0..cfg.count(20, 4) {
        let lambda = rng.uniform(0.2, 1.5);
        let o = random_instance(&mut rng, 5, 8, FixedPointFormat::default(), lambda)?;
        let norms = *o.matrix().norms();
        let t = rng.uniform(0.3, 1.0);
        let r = simulate_sparse(&o, &norms, t, eps, &SparseOptions::default())?;
        let case = format!("{i}:N{}:d{}:m{}", o.dim(), o.sparsity(), r.schedule.m);
        rep.max(case.clone(), "error", r.sim.measured_error, eps);
        let per_term: u64 = r.terms.iter().map(|t| t.cost.o_h * t.applications).sum();
        rep.max(case.clone(), "ledger_mismatch", (per_term as f64 - r.ledger().o_h as f64).abs(), 0.0);
        let bound = cost_sparse(t, o.sparsity() as f64, norms.one_to_two, eps, r.schedule.m, &k)?.queries;
        rep.max(case, "o_h_over_bound", r.ledger().o_h as f64 / bound, 8.0);
    }
    let ds = [4usize, 8, 16, 32];
    let mut sparse_oh = Vec::new();
    let mut dense_oh = Vec::new();
    for &d in &ds {
        let o = regression_instance(d, cfg.seed.wrapping_add(d as u64))?;
        let mut norms = *o.matrix().norms();
        norms.one_to_two = 1.0;
        let r = simulate_sparse(&o, &norms, 1.0, eps, &SparseOptions::default())?;
        rep.max(format!("regression:d{d}"), "error", r.sim.measured_error, eps);
        sparse_oh.push(r.ledger().o_h as f64);
        let pair = build_stateprep(&o, o.max_entry())?;
        dense_oh.push(simulate_single(&pair.encoding()?, 1.0, eps)?.ledger.o_h as f64);
    }
    let xs: Vec<f64> = ds.iter().map(|&d| d as f64).collect();
    rep.max("regression", "o_h_exponent", fitted_exponent(&xs, &sparse_oh), 0.75);
    rep.push("regression", "dense_o_h_exponent", fitted_exponent(&xs, &dense_oh), 1.0, Bound::Info);
    Ok(rep)
}

fn fidelity(u: &ComplexMatrix, to: &[C64], from: &[C64]) -> f64 {
    let v = u.apply(from);
    to.iter().zip(&v).map(|(a, b)| a.conj() * b).sum::<C64>().norm_sqr()
}

fn bits(value: usize, len: usize) -> Vec<bool> {
    (0..len).map(|j| value >> j & 1 == 1).collect()
}

/// Promise inputs: each of `n` rows holds at most one set bit among `m`.
fn promise_inputs(n: usize, m: usize) -> Vec<Vec<Vec<bool>>> {
    let per_row = m + 1;
    let total = per_row.pow(n as u32);
    (0..total)
        .map(|mut code| {
            (0..n)
                .map(|_| {
                    let c = code % per_row;
                    code /= per_row;
                    (0..m).map(|j| c == j + 1).collect()
                })
                .collect()
        })
        .collect()
}

fn parity_or_fidelity(p: &InstanceParams) -> Result<f64> {
    let h = h_parity_or(p)?;
    let u = expm_i(&h, p.transfer_time())?;
    let want = usize::from(p.parity_of_ors());
    Ok(fidelity(&u, &parity_or_target(p, want), &parity_or_input(p, 0)))
}

/// Transfer fidelities for PARITY, OR and PARITY of ORs.
pub fn lowerbound(cfg: &SuiteConfig) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new("lowerbound");
    let tol = 1.0 - 1e-9;
    let max_n = cfg.count(6, 3);
    for n in 1..=max_n {
        for v in 0..1usize << n {
            let x = bits(v, n);
            let u = expm_i(&h_parity(&x)?, n as f64 * std::f64::consts::FRAC_PI_2)?;
            let parity = x.iter().fold(false, |a, &b| a ^ b);
            let mut from = vec![C64::new(0.0, 0.0); 2 * (n + 1)];
            from[0] = C64::new(1.0, 0.0);
            let mut to = vec![C64::new(0.0, 0.0); 2 * (n + 1)];
            to[2 * n + usize::from(parity)] = C64::new(1.0, 0.0);
            rep.min(format!("parity:n{n}:x{v}"), "fidelity", fidelity(&u, &to, &from), tol);
        }
    }
    for m in 1..=cfg.count(6, 3) {
        for x in promise_inputs(1, m) {
            let p = InstanceParams::new(1, m, 1, x)?;
            let code: usize = p.x[0].iter().position(|&b| b).map_or(0, |j| j + 1);
            rep.min(format!("or:m{m}:x{code}"), "fidelity", parity_or_fidelity(&p)?, tol);
        }
    }
    let max_nm = cfg.count(8, 4);
    let ss: &[usize] = if cfg.scale == Scale::Full { &[1, 2, 4] } else { &[1, 2] };
    for n in 1..=max_nm {
        for m in 1..=max_nm / n {
            for (idx, x) in promise_inputs(n, m).into_iter().enumerate() {
                for &s in ss {
                    let p = InstanceParams::new(n, m, s, x.clone())?;
                    rep.min(format!("parity_or:n{n}:m{m}:s{s}:x{idx}"), "fidelity", parity_or_fidelity(&p)?, tol);
                }
            }
        }
    }
    let base = vec![vec![true, false], vec![false, false]];
    let mut ratios = Vec::new();
    for s in [1usize, 2, 4, 8] {
        let p = InstanceParams::new(2, 2, s, base.clone())?;
        let norms = compute_norms(&h_parity_or(&p)?)?;
        let r = norms.one_to_two / (s as f64).sqrt();
        rep.push(format!("norm:s{s}"), "l12_over_sqrt_s", r, f64::NAN, Bound::Info);
        ratios.push(r);
    }
    let hi = ratios.iter().copied().fold(0.0, f64::max);
    let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    rep.max("norm", "l12_over_sqrt_s_spread", hi / lo, 2.0);
    Ok(rep)
}

/// Quarter-period evolution of the dilation and `H^2 = I`.
pub fn dilation(cfg: &SuiteConfig) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new("dilation");
    let mut rng = cfg.rng(9);
    for i in 0..cfg.count(100, 10) {
        let n = 1 + rng.below(8) as usize;
        let u = random_unitary(n, &mut rng);
        let h = dilate_unitary(&u)?;
        let e = expm_i(&h, std::f64::consts::FRAC_PI_2)?;
        let mut sum = e.clone();
        sum.add_scaled(&h, C64::new(0.0, 1.0));
        let case = format!("{i}:N{n}");
        rep.max(case.clone(), "quarter_turn_error", spectral_norm(&sum)?, 1e-9);
        let sq = &(&h * &h) - &ComplexMatrix::identity(2 * n);
        rep.max(case, "square_error", spectral_norm(&sq)?, 1e-9);
    }
    Ok(rep)
}

/// Formula identities and the bound-level growth check.
pub fn cost(cfg: &SuiteConfig) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new("cost");
    let k = Constants::default();
    let mut rng = cfg.rng(10);
    for i in 0..cfg.count(50, 5) {
        let t = rng.uniform(0.0, 5.0);
        let a = rng.uniform(0.1, 4.0);
        let c = rng.uniform(1.0, 10.0);
        let eps = 10f64.powf(-rng.uniform(1.0, 9.0));
        let r = cost_recursion(&[a], &[c], t, eps, &k)?.queries;
        let s = cost_single(t, a, c, eps, &k)?.queries;
        rep.max(format!("{i}"), "single_vs_recursion", (r - s).abs(), 0.0);
    }
    let sym = recursion_symbolic(2).to_string();
    rep.max(sym.replace(' ', ""), "symbolic_m2_mismatch", f64::from(u8::from(sym != "C2 + 2(a1/a2)C1")), 0.0);
    let ds: Vec<f64> = (2..=12).map(|e| 2f64.powi(e)).collect();
    let mut ratio = Vec::new();
    for &d in &ds {
        let m = optimal_m(1.0, d, 1.0, 1e-3, &k)?;
        let q = cost_sparse(1.0, d, 1.0, 1e-3, m, &k)?.queries;
        rep.push(format!("d{d}"), "m_opt", m as f64, f64::NAN, Bound::Info);
        ratio.push(q / d.sqrt());
    }
    rep.max("d4..4096", "sparse_ratio_exponent", fitted_exponent(&ds, &ratio), 0.13);
    Ok(rep)
}
