use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::encoding::BlockEncoding;
use crate::error::{Error, Result};
use crate::gadgets::{run_gadget_sparse, Gadget, GadgetLayout};
use crate::numerics::{ComplexMatrix, C64};
use crate::oracles::{FixedPointValue, OracleSet, Query, QueryCounts};

/// Ancilla register layout of the state-preparation pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum AncillaLayout {
    /// one qutrit `a2`: `|0>` good, `|1>` column garbage, `|2>` row garbage
    Compact,
    /// gadget registers `a, b, c` plus a tag qubit `e` marking row garbage;
    /// good subspace is `b = c = e = 0`
    Literal,
}

/// Largest number of isometry entries the literal layout may allocate.
const LITERAL_ENTRY_LIMIT: usize = 1 << 24;

/// Isometries `V_col |k> = |chi_k>` and `V_row |j> = |chi_bar_j>` on
/// `s (x) a1 (x) anc` (anc fastest), with `<chi_bar_j|chi_k> = H_jk / (d Lambda_max)`
/// once both are amplitude-processed identically.
#[derive(Clone, Debug)]
pub struct StatePrepPair {
    pub v_col: ComplexMatrix,
    pub v_row: ComplexMatrix,
    pub layout: AncillaLayout,
    pub dim: usize,
    pub anc_dim: usize,
    pub d: usize,
    pub lambda_max: f64,
    /// normalization of `V_row^dag V_col`
    pub alpha: f64,
    good: Vec<bool>,
    /// queries per application of `U_row^dag U_col`
    pub cost: QueryCounts,
}

impl StatePrepPair {
    fn index(&self, s: usize, a1: usize, anc: usize) -> usize {
        (s * self.dim + a1) * self.anc_dim + anc
    }

    /// Offsets from a good row to an unused garbage row of the column and row side.
    pub fn spare_offsets(&self) -> (usize, usize) {
        match self.layout {
            AncillaLayout::Compact => (1, 2),
            AncillaLayout::Literal => {
                let flag = self.anc_dim >> 3;
                (flag, 4 * flag)
            }
        }
    }

    pub fn is_good(&self, row: usize) -> bool {
        self.good[row % self.anc_dim]
    }

    /// Rows of the isometry space that lie in the flagged good subspace.
    pub fn good_mask(&self) -> Vec<bool> {
        (0..self.v_col.rows()).map(|r| self.is_good(r)).collect()
    }

    /// Good-branch amplitude of every column of `v`.
    pub fn good_amplitudes(&self, v: &ComplexMatrix) -> Vec<f64> {
        (0..v.cols())
            .map(|k| {
                (0..v.rows())
                    .filter(|&r| self.is_good(r))
                    .map(|r| v[(r, k)].norm_sqr())
                    .sum::<f64>()
                    .sqrt()
            })
            .collect()
    }

    /// `V_row^dag V_col`
    pub fn block(&self) -> ComplexMatrix {
        self.v_row.adjoint_matmul(&self.v_col)
    }

    pub fn encoding(&self) -> Result<BlockEncoding> {
        BlockEncoding::from_block(&self.block(), self.alpha, self.cost)
    }

    /// Unitary completions `(U_col, U_row)` of the isometries, with
    /// `|k>_s |0>_{a1 anc}` mapped to the isometry columns. Small sizes only.
    pub fn unitaries(&self) -> Result<(ComplexMatrix, ComplexMatrix)> {
        let rows = self.v_col.rows();
        if rows > 4096 {
            return Err(Error::param("dimension", format!("completion of a {rows}-dim isometry is too large")));
        }
        Ok((complete(&self.v_col, self.dim, self.anc_dim)?, complete(&self.v_row, self.dim, self.anc_dim)?))
    }

    /// Block encoding built from the completed unitaries: ancilla `a1 (x) anc`
    /// is moved in front of the system register.
    pub fn encoding_from_unitaries(&self) -> Result<BlockEncoding> {
        let (uc, ur) = self.unitaries()?;
        let u = ur.adjoint_matmul(&uc);
        let n = self.dim;
        let anc = n * self.anc_dim;
        // (s, a1, anc) -> (a1, anc, s)
        let perm: Vec<usize> = (0..u.rows())
            .map(|idx| {
                let s = idx / anc;
                let rest = idx % anc;
                rest * n + s
            })
            .collect();
        BlockEncoding::from_unitary(u.permute(&perm), anc, n, self.alpha, self.cost)
    }
}

/// Extends the isometry `v` to a unitary whose column `s * width` is `v e_s`.
fn complete(v: &ComplexMatrix, n: usize, anc: usize) -> Result<ComplexMatrix> {
    let rows = v.rows();
    let width = n * anc;
    let mut cols: Vec<Vec<C64>> = Vec::with_capacity(rows);
    for k in 0..n {
        cols.push(v.column(k));
    }
    let mut e = 0;
    while cols.len() < rows {
        let mut c = vec![C64::new(0.0, 0.0); rows];
        c[e] = C64::new(1.0, 0.0);
        e += 1;
        for _ in 0..2 {
            for q in &cols {
                let ov: C64 = q.iter().zip(&c).map(|(a, b)| a.conj() * b).sum();
                for (x, y) in c.iter_mut().zip(q) {
                    *x -= ov * y;
                }
            }
        }
        let nrm = c.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        if nrm > 1e-8 {
            for x in c.iter_mut() {
                *x /= nrm;
            }
            cols.push(c);
        }
        if e > rows {
            return Err(Error::param("isometry", "columns are not orthonormal"));
        }
    }
    // place isometry columns at positions s * width, the rest in order
    let mut order = vec![usize::MAX; rows];
    for k in 0..n {
        order[k * width] = k;
    }
    let mut next = n;
    for slot in order.iter_mut() {
        if *slot == usize::MAX {
            *slot = next;
            next += 1;
        }
    }
    Ok(ComplexMatrix::from_fn(rows, rows, |r, c| cols[order[c]][r]))
}

/// Queries of one `U_row^dag U_col`: each side makes one `O_F` call and
/// computes then uncomputes the entry with `O_H`.
pub fn pair_cost(o: &OracleSet) -> QueryCounts {
    let mut c = QueryCounts::default()
        .with(Query::Position, 2)
        .with(Query::Value, 4)
        .with(Query::UCol, 1)
        .with(Query::URow, 1);
    if o.window().is_some() {
        c = c.with(Query::SubValue, 4);
    }
    c
}

fn literal_feasible(o: &OracleSet, lambda_max: f64) -> bool {
    let fmt = o.matrix().format();
    let w = (fmt.m + fmt.n) as usize;
    if lambda_max < 2f64.powi(fmt.m as i32) || w > 20 {
        return false;
    }
    let n = o.dim();
    n.saturating_mul(n).saturating_mul(n).saturating_mul(1 << (w + 3)) <= LITERAL_ENTRY_LIMIT
}

/// Literal layout when it fits in memory and `Lambda_max >= 2^m`, else compact.
pub fn build_stateprep(o: &OracleSet, lambda_max: f64) -> Result<StatePrepPair> {
    let layout = if literal_feasible(o, lambda_max) {
        AncillaLayout::Literal
    } else {
        AncillaLayout::Compact
    };
    build_stateprep_with(o, lambda_max, layout)
}

pub fn build_stateprep_with(o: &OracleSet, lambda_max: f64, layout: AncillaLayout) -> Result<StatePrepPair> {
    let largest = o.max_entry();
    if !(lambda_max > 0.0) || lambda_max < largest {
        return Err(Error::param(
            "lambda_max",
            format!("{lambda_max} is below the largest entry {largest}"),
        ));
    }
    if layout == AncillaLayout::Literal && !literal_feasible(o, lambda_max) {
        return Err(Error::param("layout", "literal layout needs lambda_max >= 2^m and a small instance"));
    }
    let n = o.dim();
    let d = o.sparsity();
    let fmt = o.matrix().format();
    let (anc_dim, good) = match layout {
        AncillaLayout::Compact => (3, vec![true, false, false]),
        AncillaLayout::Literal => {
            let w = (fmt.m + fmt.n) as usize;
            let dim = 1usize << (w + 3);
            // anc = x + 2^w (b + 2c + 4e)
            let good = (0..dim).map(|i| i >> w == 0).collect();
            (dim, good)
        }
    };
    let rows = n * n * anc_dim;
    let mut pair = StatePrepPair {
        v_col: ComplexMatrix::zeros(rows, n),
        v_row: ComplexMatrix::zeros(rows, n),
        layout,
        dim: n,
        anc_dim,
        d,
        lambda_max,
        alpha: d as f64 * lambda_max,
        good,
        cost: pair_cost(o),
    };
    let inv_sqrt_d = 1.0 / (d as f64).sqrt();

    match layout {
        AncillaLayout::Compact => {
            for k in 0..n {
                for l in 1..=d {
                    let p = o.inspect_position(k, l)?;
                    // column side uses H_pk, row side H_kp = conj(H_pk)
                    let z = o.inspect(p, k);
                    let (good_amp, bad_amp) = compact_amplitudes(&z, lambda_max, false);
                    let i = pair.index(k, p, 0);
                    pair.v_col[(i, k)] = good_amp * inv_sqrt_d;
                    pair.v_col[(i + 1, k)] = C64::new(bad_amp * inv_sqrt_d, 0.0);
                    let zr = o.inspect(k, p);
                    let (good_amp, bad_amp) = compact_amplitudes(&zr, lambda_max, true);
                    let i = pair.index(p, k, 0);
                    pair.v_row[(i, k)] = good_amp * inv_sqrt_d;
                    pair.v_row[(i + 2, k)] = C64::new(bad_amp * inv_sqrt_d, 0.0);
                }
            }
        }
        AncillaLayout::Literal => {
            let col_gadget = Gadget::new(fmt, lambda_max)?;
            let row_gadget = Gadget::conjugated(fmt, lambda_max)?;
            let mut cache: HashMap<(FixedPointValue, bool), Vec<(usize, C64)>> = HashMap::new();
            let w = (fmt.m + fmt.n) as usize;
            for k in 0..n {
                for l in 1..=d {
                    let p = o.inspect_position(k, l)?;
                    for (row_side, z) in [(false, o.inspect(p, k)), (true, o.inspect(k, p))] {
                        let g = if row_side { &row_gadget } else { &col_gadget };
                        let amps = match cache.get(&(z, row_side)) {
                            Some(a) => a.clone(),
                            None => {
                                let a = gadget_ancilla_state(g, &z, w, row_side)?;
                                cache.insert((z, row_side), a.clone());
                                a
                            }
                        };
                        let (v, s, a1) = if row_side {
                            (&mut pair.v_row, p, k)
                        } else {
                            (&mut pair.v_col, k, p)
                        };
                        let base = (s * n + a1) * anc_dim;
                        for (anc, amp) in amps {
                            v[(base + anc, k)] = amp * inv_sqrt_d;
                        }
                    }
                }
            }
        }
    }
    Ok(pair)
}

/// `(sqrt(z / Lambda), sqrt(1 - |z| / Lambda))`, conjugating the first on the row side.
fn compact_amplitudes(z: &FixedPointValue, lambda_max: f64, row_side: bool) -> (C64, f64) {
    let root = z.sqrt() / lambda_max.sqrt();
    let good = if row_side { root.conj() } else { root };
    let bad = (1.0 - z.r() / lambda_max).max(0.0).sqrt();
    (good, bad)
}

/// Gadget output restricted to the `a, b, c` registers, with row-side
/// garbage moved under the tag qubit `e`.
fn gadget_ancilla_state(g: &Gadget, z: &FixedPointValue, w: usize, row_side: bool) -> Result<Vec<(usize, C64)>> {
    let (_, state) = run_gadget_sparse(g, z)?;
    let l: &GadgetLayout = &g.layout;
    let mut out = Vec::new();
    for &(idx, amp) in state.entries() {
        let x = ((idx >> l.a) & ((1 << w) - 1)) as usize;
        let b = ((idx >> l.b) & 1) as usize;
        let c = ((idx >> l.c) & 1) as usize;
        let mut anc = x + (1 << w) * (b + 2 * c);
        if row_side && (b | c) != 0 {
            anc += 4 << w;
        }
        out.push((anc, amp));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blockenc::verify;
    use crate::oracles::{build_oracles, FixedPointFormat, SparseHermitian};

    #[test]
    fn single_nonzero_rows() {
        let x = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let o = build_oracles(SparseHermitian::from_dense(&x, 1, FixedPointFormat::default()).unwrap());
        let pair = build_stateprep(&o, 1.0).unwrap();
        assert_eq!(pair.layout, AncillaLayout::Compact);
        assert!((&pair.block() - &x).max_abs() < 1e-15);
    }

    #[test]
    fn literal_layout_matches_compact() {
        let fmt = FixedPointFormat::new(3, 0, 3).unwrap();
        let mut h = ComplexMatrix::zeros(4, 4);
        h[(0, 0)] = C64::new(-0.5, 0.0);
        h[(0, 1)] = C64::new(0.25, 0.5);
        h[(1, 0)] = C64::new(0.25, -0.5);
        h[(2, 3)] = C64::new(0.0, -0.875);
        h[(3, 2)] = C64::new(0.0, 0.875);
        let s = SparseHermitian::from_dense(&h, 2, fmt).unwrap();
        let hq = s.decode();
        let o = build_oracles(s);
        let lit = build_stateprep(&o, 1.0).unwrap();
        assert_eq!(lit.layout, AncillaLayout::Literal);
        let cmp = build_stateprep_with(&o, 1.0, AncillaLayout::Compact).unwrap();
        let target = hq.scale_real(0.5);
        assert!((&lit.block() - &target).max_abs() < 1e-12);
        assert!((&cmp.block() - &target).max_abs() < 1e-15);
        assert!(lit.v_col.unitarity_defect() < 1e-12);
        assert!(lit.v_row.unitarity_defect() < 1e-12);
        let e = cmp.encoding_from_unitaries().unwrap();
        assert!(verify(&e, &hq).unwrap() < 1e-12);
        assert_eq!(o.ledger().snapshot().o_h, 0);
    }
}
