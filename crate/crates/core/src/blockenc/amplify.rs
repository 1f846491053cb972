use serde::{Deserialize, Serialize};

use super::encoding::BlockEncoding;
use super::stateprep::StatePrepPair;
use crate::error::{Error, Result};
use crate::numerics::{ComplexMatrix, SplitMix64, C64};
use crate::oracles::{OracleSet, QueryCounts};

/// Error floor used in the cost formula when `delta = 0`.
pub const DELTA_FLOOR: f64 = f64::EPSILON;

/// How the per-column multiplicative errors `delta_k` are injected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum DeltaProfile {
    /// `+delta` on even columns, `-delta` on odd ones
    Alternating,
    /// uniform in `[-delta, delta]`
    Random { seed: u64 },
    /// explicit values, each clipped to `[-delta, delta]`
    Explicit(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AmplificationSpec {
    pub factor: f64,
    pub delta: f64,
    pub profile: DeltaProfile,
    /// constant in the `ceil(c_am C ln(1/delta))` query count
    pub c_am: f64,
}

impl AmplificationSpec {
    pub fn exact(factor: f64) -> Self {
        Self {
            factor,
            delta: 0.0,
            profile: DeltaProfile::Alternating,
            c_am: 1.0,
        }
    }

    pub fn with_delta(factor: f64, delta: f64) -> Self {
        Self {
            delta,
            ..Self::exact(factor)
        }
    }

    /// `delta_k` for `k = 0..n`.
    pub fn realized_deltas(&self, n: usize) -> Vec<f64> {
        let dl = self.delta;
        match &self.profile {
            DeltaProfile::Alternating => (0..n).map(|k| if k % 2 == 0 { dl } else { -dl }).collect(),
            DeltaProfile::Random { seed } => {
                let mut rng = SplitMix64::new(*seed);
                (0..n).map(|_| rng.uniform(-dl, dl)).collect()
            }
            DeltaProfile::Explicit(v) => (0..n).map(|k| v.get(k).copied().unwrap_or(0.0).clamp(-dl, dl)).collect(),
        }
    }

    /// Base-pair applications per amplified application.
    pub fn repetitions(&self) -> u64 {
        let delta = self.delta.max(DELTA_FLOOR);
        (self.c_am * self.factor * (1.0 / delta).ln()).ceil().max(1.0) as u64
    }
}

/// `sigma_k = sum_p |H_pk|`.
pub fn column_sums(o: &OracleSet) -> Vec<f64> {
    o.column_sums()
}

/// Splits column `k` of `v` into its good and bad parts.
fn split(v: &ComplexMatrix, k: usize, mask: &[bool]) -> (Vec<C64>, Vec<C64>) {
    let zero = C64::new(0.0, 0.0);
    let col = v.column(k);
    let good = col.iter().zip(mask).map(|(x, &g)| if g { *x } else { zero }).collect();
    let bad = col.iter().zip(mask).map(|(x, &g)| if g { zero } else { *x }).collect();
    (good, bad)
}

fn norm(v: &[C64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Sets the good-branch amplitude of every column to `target[k]` by a
/// rotation inside `span{good_k, bad_k}`. A column without garbage rotates
/// into the row `spare` past its largest good entry.
fn rotate_columns(v: &ComplexMatrix, mask: &[bool], target: &[f64], spare: usize) -> Result<ComplexMatrix> {
    let mut out = v.clone();
    for k in 0..v.cols() {
        let (good, bad) = split(v, k, mask);
        let a = norm(&good);
        let b = norm(&bad);
        let t = target[k];
        if !(0.0..=1.0 + 1e-15).contains(&t) {
            return Err(Error::param("factor", format!("column {k} would need amplitude {t}")));
        }
        let t = t.min(1.0);
        if a == 0.0 {
            if t > 0.0 {
                return Err(Error::param("factor", format!("column {k} has no good branch")));
            }
            continue;
        }
        let tb = (1.0 - t * t).max(0.0).sqrt();
        if b == 0.0 && tb > 1e-15 {
            let lead = (0..v.rows())
                .filter(|&r| mask[r])
                .max_by(|&x, &y| good[x].norm().total_cmp(&good[y].norm()))
                .expect("good branch is nonzero");
            let r = lead + spare;
            if r >= v.rows() || mask[r] {
                return Err(Error::param("factor", format!("column {k} has no garbage branch to rotate into")));
            }
            for (x, g) in good.iter().enumerate() {
                out[(x, k)] = *g * (t / a);
            }
            out[(r, k)] = C64::new(tb, 0.0);
            continue;
        }
        for r in 0..v.rows() {
            out[(r, k)] = if mask[r] {
                good[r] * (t / a)
            } else if b > 0.0 {
                bad[r] * (tb / b)
            } else {
                C64::new(0.0, 0.0)
            };
        }
    }
    Ok(out)
}

/// `Q^{(C-1)/2} V` with `Q = -(I - 2 V V^dag)(I - 2 Pi_good)`.
fn amplify_isometry(v: &ComplexMatrix, mask: &[bool], c_odd: u64) -> ComplexMatrix {
    let mut w = v.clone();
    for _ in 0..(c_odd - 1) / 2 {
        // S_good: negate good rows
        for r in 0..w.rows() {
            if mask[r] {
                for k in 0..w.cols() {
                    w[(r, k)] = -w[(r, k)];
                }
            }
        }
        // -(I - 2 V V^dag) = 2 V V^dag - I
        let proj = v * &v.adjoint_matmul(&w);
        let mut next = proj.scale_real(2.0);
        next.add_scaled(&w, C64::new(-1.0, 0.0));
        w = next;
    }
    w
}

/// Exact amplitude amplification of both sides: every good amplitude
/// `a -> sin(C asin a)`. Charges `C` base-pair applications.
pub fn amplitude_amplify(pair: &StatePrepPair, c_odd: u64) -> Result<StatePrepPair> {
    if c_odd == 0 || c_odd.is_multiple_of(2) {
        return Err(Error::param("C", format!("must be odd and positive, got {c_odd}")));
    }
    let mask = pair.good_mask();
    for v in [&pair.v_col, &pair.v_row] {
        let worst = pair
            .good_amplitudes(v)
            .into_iter()
            .fold(0.0f64, |m, a| m.max(a.min(1.0).asin()));
        if c_odd as f64 * worst > std::f64::consts::FRAC_PI_2 + 1e-12 {
            return Err(Error::param(
                "C",
                format!("C asin(a_max) = {} exceeds pi/2", c_odd as f64 * worst),
            ));
        }
    }
    let mut out = pair.clone();
    out.v_col = amplify_isometry(&pair.v_col, &mask, c_odd);
    out.v_row = amplify_isometry(&pair.v_row, &mask, c_odd);
    out.cost = pair.cost * c_odd;
    Ok(out)
}

/// Contract model of amplitude multiplication on both sides: good
/// amplitudes become `C a_k (1 + delta_k)`, so the block encodes
/// `(I + D) H (I + D)` with `alpha = d Lambda_max / C^2`.
pub fn amplitude_multiply(pair: &StatePrepPair, spec: &AmplificationSpec) -> Result<BlockEncoding> {
    let (col, row, alpha) = multiply_isometries(pair, spec)?;
    let block = row.adjoint_matmul(&col);
    let cost: QueryCounts = pair.cost * spec.repetitions();
    BlockEncoding::from_block(&block, alpha, cost)
}

/// The amplified isometries and the resulting normalization.
pub fn multiply_isometries(
    pair: &StatePrepPair,
    spec: &AmplificationSpec,
) -> Result<(ComplexMatrix, ComplexMatrix, f64)> {
    if !(spec.factor > 0.0) || !spec.factor.is_finite() {
        return Err(Error::param("C", format!("must be positive, got {}", spec.factor)));
    }
    if !(0.0..1.0).contains(&spec.delta) {
        return Err(Error::param("delta", format!("must lie in [0, 1), got {}", spec.delta)));
    }
    let deltas = spec.realized_deltas(pair.dim);
    let mask = pair.good_mask();
    let mut sides = Vec::with_capacity(2);
    let (spare_col, spare_row) = pair.spare_offsets();
    for (v, spare) in [(&pair.v_col, spare_col), (&pair.v_row, spare_row)] {
        let a = pair.good_amplitudes(v);
        let a_max = a.iter().copied().fold(0.0, f64::max);
        let limit = spec.factor * a_max * (1.0 + spec.delta);
        if limit > 1.0 + 1e-12 {
            return Err(Error::param(
                "C",
                format!("C a_max (1 + delta) = {limit} exceeds 1; C must be at most sqrt(d Lambda_max / Lambda_1)"),
            ));
        }
        let target: Vec<f64> = a.iter().zip(&deltas).map(|(ak, dk)| spec.factor * ak * (1.0 + dk)).collect();
        sides.push(rotate_columns(v, &mask, &target, spare)?);
    }
    let row = sides.pop().expect("two sides");
    let col = sides.pop().expect("two sides");
    Ok((col, row, pair.alpha / (spec.factor * spec.factor)))
}

/// Largest factor allowed by the column sums: `sqrt(d Lambda_max / Lambda_1)`.
pub fn max_factor(pair: &StatePrepPair, o: &OracleSet) -> f64 {
    let lambda_1 = column_sums(o).into_iter().fold(0.0, f64::max);
    if lambda_1 == 0.0 {
        return 1.0;
    }
    (pair.alpha / lambda_1).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blockenc::{build_stateprep, verify};
    use crate::oracles::{build_oracles, FixedPointFormat, SparseHermitian};

    fn diag_pair(a: f64) -> (StatePrepPair, OracleSet) {
        // 1x1 matrix [a^2]: good amplitude a with d = 1, Lambda = 1
        let h = ComplexMatrix::real_diagonal(&[a * a]);
        let o = build_oracles(SparseHermitian::from_dense(&h, 1, FixedPointFormat::new(2, 0, 30).unwrap()).unwrap());
        (build_stateprep(&o, 1.0).unwrap(), o)
    }

    #[test]
    fn sin_map_examples() {
        for (a, c, want) in [(0.5, 3, 1.0), (0.2, 3, 0.568), (0.3, 1, 0.3)] {
            let (pair, _) = diag_pair(a);
            let amp = amplitude_amplify(&pair, c).unwrap();
            let got = amp.good_amplitudes(&amp.v_col)[0];
            let exact_a = pair.good_amplitudes(&pair.v_col)[0];
            let expect = (c as f64 * exact_a.asin()).sin();
            assert!((got - expect).abs() < 1e-12);
            assert!((got - want).abs() < 1e-6, "a={a} C={c}: {got}");
        }
    }

    #[test]
    fn over_rotation_rejected() {
        let (pair, _) = diag_pair(0.9);
        assert!(amplitude_amplify(&pair, 3).is_err());
        assert!(amplitude_amplify(&pair, 2).is_err());
    }

    #[test]
    fn exact_multiplication_reaches_lambda_one() {
        let h = ComplexMatrix::from_real_rows(&[&[0.25, 0.5], &[0.5, 0.0]]);
        let o = build_oracles(SparseHermitian::from_dense(&h, 2, FixedPointFormat::default()).unwrap());
        let pair = build_stateprep(&o, 1.0).unwrap();
        let c = max_factor(&pair, &o);
        let e = amplitude_multiply(&pair, &AmplificationSpec::exact(c)).unwrap();
        assert!((e.alpha - 0.75).abs() < 1e-12);
        assert!(verify(&e, &h).unwrap() < 1e-12);
        assert!(amplitude_multiply(&pair, &AmplificationSpec::exact(c * 1.01)).is_err());
    }

    #[test]
    fn repetitions_formula() {
        let s = AmplificationSpec::with_delta(3.0, 0.01);
        assert_eq!(s.repetitions(), (3.0 * 100f64.ln()).ceil() as u64);
    }
}
