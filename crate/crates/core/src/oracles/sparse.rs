use std::collections::BTreeMap;
use std::sync::Arc;

use super::fixed_point::{FixedPointFormat, FixedPointValue};
use super::ledger::{Query, QueryLedger};
use crate::error::{Error, Result};
use crate::numerics::{compute_norms, ComplexMatrix, NormBounds, C64};

/// Explicit d-sparse Hermitian matrix with fixed-point entries.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseHermitian {
    dim: usize,
    d: usize,
    fmt: FixedPointFormat,
    /// both triangles; only nonzero values are stored
    entries: BTreeMap<(usize, usize), FixedPointValue>,
    rows: Vec<Vec<usize>>,
    norms: NormBounds,
    pub seed: Option<u64>,
}

impl SparseHermitian {
    /// Builds from upper-triangle entries `(row, col, value)` with `row <= col`.
    pub fn from_upper(
        dim: usize,
        d: usize,
        fmt: FixedPointFormat,
        upper: impl IntoIterator<Item = (usize, usize, FixedPointValue)>,
    ) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, k, v) in upper {
            if i >= dim || k >= dim {
                return Err(Error::OutOfRange {
                    what: "entry index",
                    index: i.max(k),
                    limit: dim,
                });
            }
            if i > k {
                return Err(Error::param("entries", format!("({i}, {k}) is below the diagonal")));
            }
            if v.fmt != fmt {
                return Err(Error::param("entries", "mixed fixed-point formats"));
            }
            if v.is_zero() {
                continue;
            }
            if i == k && !v.is_real() {
                return Err(Error::NotHermitian {
                    asymmetry: v.to_complex().im.abs() * 2.0,
                });
            }
            entries.insert((i, k), v);
            if i != k {
                entries.insert((k, i), v.conj());
            }
        }
        Self::finish(dim, d, fmt, entries)
    }

    /// Rounds a dense Hermitian matrix to fixed point, keeping the upper
    /// triangle and mirroring its conjugate.
    pub fn from_dense(h: &ComplexMatrix, d: usize, fmt: FixedPointFormat) -> Result<Self> {
        let dim = h.require_square()?;
        let asym = h.hermiticity_defect();
        if asym > 1e-12 * h.max_abs().max(1.0) {
            return Err(Error::NotHermitian { asymmetry: asym });
        }
        let mut upper = Vec::new();
        for i in 0..dim {
            for k in i..dim {
                let z = if i == k { C64::new(h[(i, i)].re, 0.0) } else { h[(i, k)] };
                if z == C64::new(0.0, 0.0) {
                    continue;
                }
                upper.push((i, k, FixedPointValue::encode(z, fmt)?));
            }
        }
        Self::from_upper(dim, d, fmt, upper)
    }

    fn finish(
        dim: usize,
        d: usize,
        fmt: FixedPointFormat,
        entries: BTreeMap<(usize, usize), FixedPointValue>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::param("N", "dimension must be positive"));
        }
        if d == 0 || d > dim {
            return Err(Error::param("d", format!("need 1 <= d <= N, got d = {d}, N = {dim}")));
        }
        let mut rows = vec![Vec::new(); dim];
        for &(i, k) in entries.keys() {
            rows[i].push(k);
        }
        for (i, r) in rows.iter().enumerate() {
            if r.len() > d {
                return Err(Error::SparsityViolated {
                    row: i,
                    count: r.len(),
                    bound: d,
                });
            }
        }
        let mut out = Self {
            dim,
            d,
            fmt,
            entries,
            rows,
            norms: NormBounds {
                max_norm: 0.0,
                spectral: 0.0,
                induced_one: 0.0,
                one_to_two: 0.0,
            },
            seed: None,
        };
        out.norms = compute_norms(&out.decode())?;
        Ok(out)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn sparsity(&self) -> usize {
        self.d
    }

    pub fn format(&self) -> FixedPointFormat {
        self.fmt
    }

    pub fn norms(&self) -> &NormBounds {
        &self.norms
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, i: usize, k: usize) -> FixedPointValue {
        self.entries
            .get(&(i, k))
            .copied()
            .unwrap_or_else(|| FixedPointValue::zero(self.fmt))
    }

    /// Sorted nonzero columns of row `i`.
    pub fn row_columns(&self, i: usize) -> &[usize] {
        &self.rows[i]
    }

    /// Upper-triangle entries in row-major order.
    pub fn upper_entries(&self) -> impl Iterator<Item = (usize, usize, FixedPointValue)> + '_ {
        self.entries
            .iter()
            .filter(|((i, k), _)| i <= k)
            .map(|(&(i, k), &v)| (i, k, v))
    }

    pub fn decode(&self) -> ComplexMatrix {
        let mut h = ComplexMatrix::zeros(self.dim, self.dim);
        for (&(i, k), v) in &self.entries {
            h[(i, k)] = v.to_complex();
        }
        h
    }
}

/// Entry window `lo < |H_ik| <= hi`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Window {
    pub lo: f64,
    pub hi: f64,
}

impl Window {
    pub fn contains(&self, magnitude: f64) -> bool {
        magnitude > self.lo && magnitude <= self.hi
    }
}

/// Value and position oracles over a sparse matrix, with a query ledger.
#[derive(Clone, Debug)]
pub struct OracleSet {
    h: Arc<SparseHermitian>,
    window: Option<Window>,
    ledger: QueryLedger,
}

impl OracleSet {
    pub fn new(h: SparseHermitian) -> Self {
        Self::with_ledger(Arc::new(h), QueryLedger::new())
    }

    pub fn with_ledger(h: Arc<SparseHermitian>, ledger: QueryLedger) -> Self {
        Self { h, window: None, ledger }
    }

    pub fn matrix(&self) -> &SparseHermitian {
        &self.h
    }

    pub fn dim(&self) -> usize {
        self.h.dim
    }

    pub fn sparsity(&self) -> usize {
        self.h.d
    }

    pub fn window(&self) -> Option<Window> {
        self.window
    }

    pub fn ledger(&self) -> &QueryLedger {
        &self.ledger
    }

    fn check_index(&self, what: &'static str, i: usize) -> Result<()> {
        if i >= self.h.dim {
            return Err(Error::OutOfRange {
                what,
                index: i,
                limit: self.h.dim,
            });
        }
        Ok(())
    }

    /// Value without charging the ledger.
    pub fn inspect(&self, i: usize, k: usize) -> FixedPointValue {
        let v = self.h.get(i, k);
        match self.window {
            Some(w) if !w.contains(v.r()) => FixedPointValue::zero(self.h.fmt),
            _ => v,
        }
    }

    /// `O_H` (or `O_{H_j}` for a thresholded set). Each call charges one
    /// base `O_H` query.
    pub fn value(&self, i: usize, k: usize) -> Result<FixedPointValue> {
        self.check_index("row", i)?;
        self.check_index("column", k)?;
        self.ledger.charge(Query::Value, 1);
        if self.window.is_some() {
            self.ledger.charge(Query::SubValue, 1);
        }
        Ok(self.inspect(i, k))
    }

    /// Column of the `l`-th (1-based) entry of row `i`, without charging.
    ///
    /// For `l` past the row's nonzero count the answer is the
    /// `(l - count)`-th smallest column that holds no nonzero in row `i`.
    pub fn inspect_position(&self, i: usize, l: usize) -> Result<usize> {
        self.check_index("row", i)?;
        if l == 0 || l > self.h.d {
            return Err(Error::OutOfRange {
                what: "l",
                index: l,
                limit: self.h.d,
            });
        }
        let cols = &self.h.rows[i];
        if l <= cols.len() {
            return Ok(cols[l - 1]);
        }
        let mut need = l - cols.len();
        let mut taken = cols.iter().peekable();
        for c in 0..self.h.dim {
            if taken.peek() == Some(&&c) {
                taken.next();
                continue;
            }
            need -= 1;
            if need == 0 {
                return Ok(c);
            }
        }
        unreachable!("d <= N guarantees enough free columns")
    }

    /// `O_F`; charges one position query.
    pub fn position(&self, i: usize, l: usize) -> Result<usize> {
        let c = self.inspect_position(i, l)?;
        self.ledger.charge(Query::Position, 1);
        Ok(c)
    }

    /// Sub-oracle that zeroes entries outside `lo < |H_ik| <= hi`. Shares
    /// the base ledger.
    pub fn threshold(&self, lo: f64, hi: f64) -> Result<OracleSet> {
        if !(lo >= 0.0 && lo < hi) {
            return Err(Error::param("window", format!("need 0 <= lo < hi, got ({lo}, {hi}]")));
        }
        let window = match self.window {
            Some(w) => Window {
                lo: w.lo.max(lo),
                hi: w.hi.min(hi),
            },
            None => Window { lo, hi },
        };
        Ok(OracleSet {
            h: Arc::clone(&self.h),
            window: Some(window),
            ledger: self.ledger.clone(),
        })
    }

    /// Dense decoded matrix; free inspection, the ledger is untouched.
    pub fn materialize(&self) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.h.dim, self.h.dim);
        for (&(i, k), v) in &self.h.entries {
            if self.window.is_none_or(|w| w.contains(v.r())) {
                out[(i, k)] = v.to_complex();
            }
        }
        out
    }

    /// `sigma_k = sum_p |H_pk|` per column (free inspection).
    pub fn column_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.h.dim];
        for (&(_, k), v) in &self.h.entries {
            if self.window.is_none_or(|w| w.contains(v.r())) {
                sums[k] += v.r();
            }
        }
        sums
    }

    /// Largest entry magnitude visible through this oracle.
    pub fn max_entry(&self) -> f64 {
        self.h
            .entries
            .values()
            .map(|v| v.r())
            .filter(|&r| self.window.is_none_or(|w| w.contains(r)))
            .fold(0.0, f64::max)
    }

    pub fn is_empty(&self) -> bool {
        self.max_entry() == 0.0
    }
}

pub fn build_oracles(h: SparseHermitian) -> OracleSet {
    OracleSet::new(h)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pauli_x() -> SparseHermitian {
        let x = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        SparseHermitian::from_dense(&x, 1, FixedPointFormat::default()).unwrap()
    }

    #[test]
    fn x_positions_and_values() {
        let o = build_oracles(pauli_x());
        assert_eq!(o.position(0, 1).unwrap(), 1);
        assert_eq!(o.position(1, 1).unwrap(), 0);
        assert!(o.value(0, 0).unwrap().is_zero());
        assert_eq!(o.value(0, 1).unwrap().to_complex(), C64::new(1.0, 0.0));
        let s = o.ledger().snapshot();
        assert_eq!((s.o_f, s.o_h), (2, 2));
        assert!(o.position(0, 2).is_err());
    }

    #[test]
    fn padding_uses_free_columns() {
        let mut h = ComplexMatrix::zeros(4, 4);
        h[(0, 1)] = C64::new(0.5, 0.0);
        h[(1, 0)] = C64::new(0.5, 0.0);
        h[(0, 3)] = C64::new(0.25, 0.0);
        h[(3, 0)] = C64::new(0.25, 0.0);
        let o = build_oracles(SparseHermitian::from_dense(&h, 4, FixedPointFormat::default()).unwrap());
        let cols: Vec<usize> = (1..=4).map(|l| o.position(0, l).unwrap()).collect();
        assert_eq!(cols, vec![1, 3, 0, 2]);
        assert!(o.value(0, 2).unwrap().is_zero());
    }

    #[test]
    fn sparsity_enforced() {
        let h = ComplexMatrix::from_real_rows(&[&[1.0, 1.0], &[1.0, 1.0]]);
        assert!(matches!(
            SparseHermitian::from_dense(&h, 1, FixedPointFormat::default()),
            Err(Error::SparsityViolated { .. })
        ));
    }
}
