//! Plain-text instance format.
//!
//! ```text
//! N d b p m n seed
//! row col r_bits phi_bits
//! ...
//! ```
//! One line per upper-triangle nonzero (`row <= col`). `r_bits` is the
//! integer `r 2^n`, `phi_bits` the integer `phi 2^p`. `seed` is `-` when
//! the instance was not generated.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::fixed_point::{FixedPointFormat, FixedPointValue};
use super::sparse::SparseHermitian;
use crate::error::{Error, Result};
use crate::numerics::NormBounds;

pub fn write_instance(h: &SparseHermitian) -> String {
    let fmt = h.format();
    let mut out = String::new();
    let seed = h.seed.map_or_else(|| "-".to_string(), |s| s.to_string());
    let _ = writeln!(
        out,
        "{} {} {} {} {} {} {}",
        h.dim(),
        h.sparsity(),
        fmt.bits(),
        fmt.p,
        fmt.m,
        fmt.n,
        seed
    );
    for (i, k, v) in h.upper_entries() {
        let _ = writeln!(out, "{} {} {} {}", i, k, v.r_int(), v.phi_int());
    }
    out
}

fn parse_num<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| Error::Parse {
        line,
        reason: format!("missing {what}"),
    })?;
    tok.parse().map_err(|_| Error::Parse {
        line,
        reason: format!("bad {what} '{tok}'"),
    })
}

pub fn read_instance(text: &str) -> Result<SparseHermitian> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (hl, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        reason: "empty file".into(),
    })?;
    let mut tok = header.split_whitespace();
    let dim: usize = parse_num(tok.next(), hl, "N")?;
    let d: usize = parse_num(tok.next(), hl, "d")?;
    let b: u32 = parse_num(tok.next(), hl, "b")?;
    let p: u32 = parse_num(tok.next(), hl, "p")?;
    let m: u32 = parse_num(tok.next(), hl, "m")?;
    let n: u32 = parse_num(tok.next(), hl, "n")?;
    let seed = match tok.next() {
        Some("-") | None => None,
        Some(s) => Some(parse_num::<u64>(Some(s), hl, "seed")?),
    };
    if tok.next().is_some() {
        return Err(Error::Parse {
            line: hl,
            reason: "trailing tokens in header".into(),
        });
    }
    let fmt = FixedPointFormat::new(p, m, n).map_err(|e| Error::Parse {
        line: hl,
        reason: e.to_string(),
    })?;
    if fmt.bits() != b {
        return Err(Error::Parse {
            line: hl,
            reason: format!("b = {b} but p+m+n+1 = {}", fmt.bits()),
        });
    }
    let mut upper = Vec::new();
    for (ln, line) in lines {
        let mut tok = line.split_whitespace();
        let i: usize = parse_num(tok.next(), ln, "row")?;
        let k: usize = parse_num(tok.next(), ln, "col")?;
        let r: u64 = parse_num(tok.next(), ln, "r_bits")?;
        let phi: u64 = parse_num(tok.next(), ln, "phi_bits")?;
        if tok.next().is_some() {
            return Err(Error::Parse {
                line: ln,
                reason: "trailing tokens".into(),
            });
        }
        let v = FixedPointValue::from_bits(fmt, r, phi).map_err(|e| Error::Parse {
            line: ln,
            reason: e.to_string(),
        })?;
        upper.push((i, k, v));
    }
    let mut h = SparseHermitian::from_upper(dim, d, fmt, upper)?;
    h.seed = seed;
    Ok(h)
}

/// Companion metadata document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceMetadata {
    pub dim: usize,
    pub sparsity: usize,
    pub nnz: usize,
    pub format: FixedPointFormat,
    pub seed: Option<u64>,
    pub generator: String,
    pub norms: NormBounds,
}

impl InstanceMetadata {
    pub fn describe(h: &SparseHermitian, generator: impl Into<String>) -> Self {
        Self {
            dim: h.dim(),
            sparsity: h.sparsity(),
            nnz: h.nnz(),
            format: h.format(),
            seed: h.seed,
            generator: generator.into(),
            norms: *h.norms(),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("metadata serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse {
            line: 0,
            reason: e.to_string(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{ComplexMatrix, C64};

    #[test]
    fn round_trip_is_bit_exact() {
        let mut h = ComplexMatrix::zeros(3, 3);
        h[(0, 0)] = C64::new(-0.5, 0.0);
        h[(0, 2)] = C64::new(0.3, 0.4);
        h[(2, 0)] = C64::new(0.3, -0.4);
        let s = SparseHermitian::from_dense(&h, 2, FixedPointFormat::default()).unwrap();
        let text = write_instance(&s);
        assert!(text.starts_with("3 2 32 12 3 16 -\n"));
        let back = read_instance(&text).unwrap();
        assert_eq!(back, s);
        assert_eq!(write_instance(&back), text);
    }

    #[test]
    fn bad_header_reports_line() {
        let err = read_instance("4 2 9 1 1 1\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }
}
