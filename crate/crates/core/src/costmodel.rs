//! Closed-form query counts with explicit constants.
//!
//! Logarithms are base 2 and guarded: `lg(x) = log2(max(x, 2))`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gadgets::gate_count;
use crate::oracles::FixedPointFormat;

/// Multiplicative constants for each formula; all 1 by default.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    pub single: f64,
    pub interaction: f64,
    pub recursion: f64,
    pub sparse: f64,
}

impl Default for Constants {
    fn default() -> Self {
        Self {
            single: 1.0,
            interaction: 1.0,
            recursion: 1.0,
            sparse: 1.0,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CostInputs {
    pub t: f64,
    pub d: f64,
    pub eps: f64,
    pub m: usize,
    pub alphas: Vec<f64>,
    pub costs: Vec<f64>,
    pub lambda_12: f64,
    pub b: u32,
    pub gamma: f64,
    pub kappa: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub formula: String,
    pub inputs: CostInputs,
    pub queries: f64,
    /// closed-form bound alongside an exact recursion, when one exists
    pub bound: Option<f64>,
    pub gates: Option<f64>,
    pub constants: Constants,
}

pub fn lg(x: f64) -> f64 {
    x.max(2.0).log2()
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::param(name, format!("must be positive and finite, got {v}")))
    }
}

fn non_negative(name: &'static str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::param(name, format!("must be finite and non-negative, got {v}")))
    }
}

/// `(t alpha + 1) C_A lg(t alpha / eps)`
pub fn cost_single(t: f64, alpha: f64, c_a: f64, eps: f64, k: &Constants) -> Result<CostReport> {
    non_negative("t", t)?;
    non_negative("alpha", alpha)?;
    non_negative("C_A", c_a)?;
    positive("eps", eps)?;
    let ta = t * alpha;
    Ok(CostReport {
        formula: "single".into(),
        inputs: CostInputs {
            t,
            eps,
            m: 1,
            alphas: vec![alpha],
            costs: vec![c_a],
            ..Default::default()
        },
        queries: k.single * (ta + 1.0) * c_a * lg(ta / eps),
        bound: None,
        gates: None,
        constants: *k,
    })
}

/// `(t alpha_B + 1)(C_B + nested) lg^2(t alpha_A / eps)`, where `nested`
/// is the cost of `e^{-iA/alpha_B}` at accuracy `eps/(t alpha_B)`.
pub fn cost_interaction(
    t: f64,
    alpha_a: f64,
    alpha_b: f64,
    c_b: f64,
    nested: f64,
    eps: f64,
    k: &Constants,
) -> Result<CostReport> {
    non_negative("t", t)?;
    non_negative("alpha_A", alpha_a)?;
    non_negative("alpha_B", alpha_b)?;
    non_negative("C_B", c_b)?;
    non_negative("nested", nested)?;
    positive("eps", eps)?;
    let queries = if alpha_b == 0.0 {
        nested
    } else {
        let l = lg(t * alpha_a / eps);
        k.interaction * (t * alpha_b + 1.0) * (c_b + nested) * l * l
    };
    Ok(CostReport {
        formula: "interaction".into(),
        inputs: CostInputs {
            t,
            eps,
            m: 2,
            alphas: vec![alpha_a, alpha_b],
            costs: vec![c_b, nested],
            ..Default::default()
        },
        queries,
        bound: None,
        gates: None,
        constants: *k,
    })
}

fn check_stack(alphas: &[f64], costs: &[f64]) -> Result<()> {
    if alphas.is_empty() || alphas.len() != costs.len() {
        return Err(Error::param("stack", "need one cost per alpha and at least one term"));
    }
    for w in alphas.windows(2) {
        if w[1] > w[0] {
            return Err(Error::param("alphas", "must be sorted in decreasing order"));
        }
    }
    for &a in alphas {
        positive("alpha", a)?;
    }
    for &c in costs {
        non_negative("C", c)?;
    }
    Ok(())
}

/// Level-`k` cost: level 1 is `cost_single`; level `k` is `cost_interaction`
/// with `A` the level below evolved for `1/alpha_k`.
fn recursion_level(alphas: &[f64], costs: &[f64], t: f64, eps: f64, k: &Constants) -> Result<f64> {
    let m = alphas.len();
    if m == 1 {
        return Ok(cost_single(t, alphas[0], costs[0], eps, k)?.queries);
    }
    let ab = alphas[m - 1];
    let inner_eps = if t * ab > 0.0 { eps / (t * ab) } else { eps };
    let nested = recursion_level(&alphas[..m - 1], &costs[..m - 1], 1.0 / ab, inner_eps, k)?;
    Ok(cost_interaction(t, alphas[m - 2], ab, costs[m - 1], nested, eps, k)?.queries)
}

/// `t <alpha, C> lg^{2m-1}(t alpha_1 / eps)`
pub fn recursion_closed_form(alphas: &[f64], costs: &[f64], t: f64, eps: f64, k: &Constants) -> f64 {
    let m = alphas.len() as i32;
    let dot: f64 = alphas.iter().zip(costs).map(|(a, c)| a * c).sum();
    k.recursion * t * dot * lg(t * alphas[0] / eps).powi(2 * m - 1)
}

/// Exact nested recursion with the closed form as `bound`.
pub fn cost_recursion(alphas: &[f64], costs: &[f64], t: f64, eps: f64, k: &Constants) -> Result<CostReport> {
    check_stack(alphas, costs)?;
    non_negative("t", t)?;
    positive("eps", eps)?;
    Ok(CostReport {
        formula: "recursion".into(),
        inputs: CostInputs {
            t,
            eps,
            m: alphas.len(),
            alphas: alphas.to_vec(),
            costs: costs.to_vec(),
            ..Default::default()
        },
        queries: recursion_level(alphas, costs, t, eps, k)?,
        bound: Some(recursion_closed_form(alphas, costs, t, eps, k)),
        gates: None,
        constants: *k,
    })
}

/// `coef * prod_i alpha_i^{exps[i]} * C_term`
#[derive(Clone, Debug, PartialEq)]
pub struct Monomial {
    pub coef: f64,
    pub exps: Vec<i32>,
    pub term: usize,
}

/// Per-slice cost of the top level with logarithms dropped, as a sum of monomials.
#[derive(Clone, Debug, PartialEq)]
pub struct SymbolicCost(pub Vec<Monomial>);

impl SymbolicCost {
    pub fn eval(&self, alphas: &[f64], costs: &[f64]) -> f64 {
        self.0
            .iter()
            .map(|mono| {
                let p: f64 = mono.exps.iter().zip(alphas).map(|(&e, a)| a.powi(e)).product();
                mono.coef * p * costs[mono.term]
            })
            .sum()
    }
}

impl fmt::Display for SymbolicCost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, mono) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            if mono.coef != 1.0 {
                write!(f, "{}", mono.coef)?;
            }
            let num: Vec<String> = mono
                .exps
                .iter()
                .enumerate()
                .filter(|(_, &e)| e > 0)
                .map(|(i, &e)| if e == 1 { format!("a{}", i + 1) } else { format!("a{}^{e}", i + 1) })
                .collect();
            let den: Vec<String> = mono
                .exps
                .iter()
                .enumerate()
                .filter(|(_, &e)| e < 0)
                .map(|(i, &e)| if e == -1 { format!("a{}", i + 1) } else { format!("a{}^{}", i + 1, -e) })
                .collect();
            if !num.is_empty() || !den.is_empty() {
                let n = if num.is_empty() { "1".to_string() } else { num.join(" ") };
                if den.is_empty() {
                    write!(f, "({n})")?;
                } else {
                    write!(f, "({n}/{})", den.join(" "))?;
                }
            }
            write!(f, "C{}", mono.term + 1)?;
        }
        Ok(())
    }
}

/// Per-slice bracket `C_m + cost of level m-1 over time 1/alpha_m`, logs
/// dropped and `(x + 1)` bounded by `2x` for `x = alpha_{k-1}/alpha_k >= 1`.
pub fn recursion_symbolic(m: usize) -> SymbolicCost {
    fn bracket(k: usize, m: usize) -> Vec<Monomial> {
        let mut out = vec![Monomial {
            coef: 1.0,
            exps: vec![0; m],
            term: k - 1,
        }];
        if k >= 2 {
            for mut mono in bracket(k - 1, m) {
                mono.coef *= 2.0;
                mono.exps[k - 2] += 1;
                mono.exps[k - 1] -= 1;
                out.push(mono);
            }
        }
        out
    }
    SymbolicCost(bracket(m.max(1), m.max(1)))
}

/// `c t sqrt(d) Lambda_12 d^{1/(4m)} lg^{2m}(t sqrt(d) Lambda_12 / eps)`
pub fn cost_sparse(t: f64, d: f64, lambda_12: f64, eps: f64, m: usize, k: &Constants) -> Result<CostReport> {
    non_negative("t", t)?;
    positive("eps", eps)?;
    positive("Lambda_12", lambda_12)?;
    if !(d >= 1.0) {
        return Err(Error::param("d", format!("must be at least 1, got {d}")));
    }
    if m == 0 {
        return Err(Error::param("m", "must be at least 1"));
    }
    let scale = t * d.sqrt() * lambda_12;
    let queries = k.sparse * scale * d.powf(1.0 / (4.0 * m as f64)) * lg(scale / eps).powi(2 * m as i32);
    Ok(CostReport {
        formula: "sparse".into(),
        inputs: CostInputs {
            t,
            d,
            eps,
            m,
            lambda_12,
            gamma: 1.0 / (2.0 * m as f64),
            ..Default::default()
        },
        queries,
        bound: Some(t * d.sqrt() * lambda_12),
        gates: None,
        constants: *k,
    })
}

/// `m` in `1..=12` minimizing `cost_sparse`; ties go to the smaller `m`.
pub fn optimal_m(t: f64, d: f64, lambda_12: f64, eps: f64, k: &Constants) -> Result<usize> {
    let mut best = (1, f64::INFINITY);
    for m in 1..=12 {
        let q = cost_sparse(t, d, lambda_12, eps, m, k)?.queries;
        if q < best.1 {
            best = (m, q);
        }
    }
    Ok(best.0)
}

/// Queries times gates per query, for the arithmetic-free gadget and for a
/// `b^{5/2}` arithmetic path.
pub fn gate_estimates(queries: f64, fmt: FixedPointFormat) -> (f64, f64) {
    let (count, _) = gate_count(fmt);
    (queries * count.total as f64, queries * (fmt.bits() as f64).powf(2.5))
}

/// Unitary implementation through the dilation (`t = pi/2`, `Lambda_12 <= 1`)
/// and, for `kappa > 1`, `kappa` such calls at accuracy `eps/kappa`.
pub fn cost_corollaries(d: f64, eps: f64, kappa: f64, k: &Constants) -> Result<CostReport> {
    positive("eps", eps)?;
    if !(kappa >= 1.0) || !kappa.is_finite() {
        return Err(Error::param("kappa", format!("must be at least 1, got {kappa}")));
    }
    let t = std::f64::consts::FRAC_PI_2;
    let inner = eps / kappa;
    let m = optimal_m(t, d, 1.0, inner, k)?;
    let one = cost_sparse(t, d, 1.0, inner, m, k)?;
    Ok(CostReport {
        formula: if kappa == 1.0 { "unitary".into() } else { "composition".into() },
        inputs: CostInputs {
            t,
            d,
            eps,
            m,
            lambda_12: 1.0,
            gamma: 1.0 / (2.0 * m as f64),
            kappa,
            ..Default::default()
        },
        queries: kappa * one.queries,
        bound: Some(kappa * d.sqrt()),
        gates: None,
        constants: *k,
    })
}

/// CSV with columns `formula,t,d,eps,m,value`.
pub fn to_csv(reports: &[CostReport]) -> String {
    let mut out = String::from("formula,t,d,eps,m,value\n");
    for r in reports {
        let i = &r.inputs;
        out.push_str(&format!("{},{},{},{:e},{},{:.6e}\n", r.formula, i.t, i.d, i.eps, i.m, r.queries));
    }
    out
}

/// `cost_sparse` at the optimal `m` for each `d`.
pub fn sweep_d(ds: &[f64], t: f64, lambda_12: f64, eps: f64, k: &Constants) -> Result<Vec<CostReport>> {
    ds.iter()
        .map(|&d| {
            let m = optimal_m(t, d, lambda_12, eps, k)?;
            cost_sparse(t, d, lambda_12, eps, m, k)
        })
        .collect()
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn fitted_exponent(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_examples() {
        let k = Constants::default();
        let r = cost_single(1.0, 1.0, 1.0, 1e-3, &k).unwrap();
        assert!((r.queries - 2.0 * 1e3f64.log2()).abs() < 1e-12);
        assert_eq!(cost_single(0.0, 1.0, 3.0, 1e-3, &k).unwrap().queries, 3.0);
        let a = cost_single(2.0, 1.5, 1.0, 1e-4, &k).unwrap().queries;
        let b = cost_single(2.0, 1.5, 5.0, 1e-4, &k).unwrap().queries;
        assert!((b - 5.0 * a).abs() < 1e-9);
    }

    #[test]
    fn interaction_without_b_is_nested() {
        let k = Constants::default();
        assert_eq!(cost_interaction(1.0, 1.0, 0.0, 4.0, 7.0, 1e-3, &k).unwrap().queries, 7.0);
    }

    #[test]
    fn recursion_of_one_is_single() {
        let k = Constants::default();
        let r = cost_recursion(&[1.3], &[2.0], 0.7, 1e-4, &k).unwrap();
        assert_eq!(r.queries, cost_single(0.7, 1.3, 2.0, 1e-4, &k).unwrap().queries);
    }

    #[test]
    fn symbolic_two_levels() {
        let s = recursion_symbolic(2);
        assert_eq!(s.to_string(), "C2 + 2(a1/a2)C1");
    }

    #[test]
    fn sparse_degenerate_d() {
        let k = Constants::default();
        let r = cost_sparse(1.0, 1.0, 1.0, 1e-3, 3, &k).unwrap();
        assert!((r.queries - lg(1e3).powi(6)).abs() < 1e-6);
    }

    #[test]
    fn slope_of_power_law() {
        let xs = [1.0, 2.0, 4.0, 8.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(0.5)).collect();
        assert!((fitted_exponent(&xs, &ys) - 0.5).abs() < 1e-12);
    }
}
