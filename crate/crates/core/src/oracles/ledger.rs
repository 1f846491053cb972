use std::fmt;
use std::ops::{Add, AddAssign, Mul, Sub};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

/// Oracle kinds tracked by a ledger.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Query {
    /// value oracle `O_H`
    Value,
    /// position oracle `O_F`
    Position,
    /// thresholded value oracle `O_{H_j}`
    SubValue,
    UCol,
    URow,
    /// block-encoding of a term
    Block,
    /// `e^{-iAs}` provider calls
    ExpA,
}

impl Query {
    pub const ALL: [Query; 7] = [
        Query::Value,
        Query::Position,
        Query::SubValue,
        Query::UCol,
        Query::URow,
        Query::Block,
        Query::ExpA,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Query::Value => "O_H",
            Query::Position => "O_F",
            Query::SubValue => "O_Hj",
            Query::UCol => "U_col",
            Query::URow => "U_row",
            Query::Block => "U_B",
            Query::ExpA => "exp_A",
        }
    }

    fn slot(self) -> usize {
        self as usize
    }
}

/// Plain snapshot of ledger counters.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryCounts {
    pub o_h: u64,
    pub o_f: u64,
    pub o_hj: u64,
    pub u_col: u64,
    pub u_row: u64,
    pub u_b: u64,
    pub exp_a: u64,
}

impl QueryCounts {
    pub fn get(&self, q: Query) -> u64 {
        match q {
            Query::Value => self.o_h,
            Query::Position => self.o_f,
            Query::SubValue => self.o_hj,
            Query::UCol => self.u_col,
            Query::URow => self.u_row,
            Query::Block => self.u_b,
            Query::ExpA => self.exp_a,
        }
    }

    fn get_mut(&mut self, q: Query) -> &mut u64 {
        match q {
            Query::Value => &mut self.o_h,
            Query::Position => &mut self.o_f,
            Query::SubValue => &mut self.o_hj,
            Query::UCol => &mut self.u_col,
            Query::URow => &mut self.u_row,
            Query::Block => &mut self.u_b,
            Query::ExpA => &mut self.exp_a,
        }
    }

    pub fn with(mut self, q: Query, n: u64) -> Self {
        *self.get_mut(q) += n;
        self
    }

    /// Base oracle queries `O_H + O_F`.
    pub fn base_total(&self) -> u64 {
        self.o_h + self.o_f
    }

    pub fn dominates(&self, other: &QueryCounts) -> bool {
        Query::ALL.iter().all(|&q| self.get(q) >= other.get(q))
    }
}

impl Add for QueryCounts {
    type Output = QueryCounts;
    fn add(mut self, rhs: QueryCounts) -> QueryCounts {
        self += rhs;
        self
    }
}

impl AddAssign for QueryCounts {
    fn add_assign(&mut self, rhs: QueryCounts) {
        for q in Query::ALL {
            *self.get_mut(q) += rhs.get(q);
        }
    }
}

impl Sub for QueryCounts {
    type Output = QueryCounts;
    fn sub(mut self, rhs: QueryCounts) -> QueryCounts {
        for q in Query::ALL {
            *self.get_mut(q) = self.get(q).saturating_sub(rhs.get(q));
        }
        self
    }
}

impl Mul<u64> for QueryCounts {
    type Output = QueryCounts;
    fn mul(mut self, k: u64) -> QueryCounts {
        for q in Query::ALL {
            *self.get_mut(q) *= k;
        }
        self
    }
}

impl fmt::Display for QueryCounts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for q in Query::ALL {
            let v = self.get(q);
            if v == 0 {
                continue;
            }
            if !first {
                write!(f, " ")?;
            }
            write!(f, "{}={}", q.label(), v)?;
            first = false;
        }
        if first {
            write!(f, "none")?;
        }
        Ok(())
    }
}

/// Shared, monotone query counters. Clones share the same counters.
#[derive(Clone, Default)]
pub struct QueryLedger {
    slots: Arc<[AtomicU64; 7]>,
}

impl QueryLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn charge(&self, q: Query, n: u64) {
        self.slots[q.slot()].fetch_add(n, Ordering::Relaxed);
    }

    pub fn charge_all(&self, counts: &QueryCounts) {
        for q in Query::ALL {
            let v = counts.get(q);
            if v > 0 {
                self.charge(q, v);
            }
        }
    }

    pub fn snapshot(&self) -> QueryCounts {
        let mut c = QueryCounts::default();
        for q in Query::ALL {
            *c.get_mut(q) = self.slots[q.slot()].load(Ordering::Relaxed);
        }
        c
    }

    pub fn shares_with(&self, other: &QueryLedger) -> bool {
        Arc::ptr_eq(&self.slots, &other.slots)
    }
}

impl fmt::Debug for QueryLedger {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "QueryLedger({})", self.snapshot())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clones_share_counters() {
        let a = QueryLedger::new();
        let b = a.clone();
        a.charge(Query::Value, 3);
        b.charge(Query::Position, 2);
        let s = a.snapshot();
        assert_eq!((s.o_h, s.o_f), (3, 2));
        assert_eq!(s.to_string(), "O_H=3 O_F=2");
    }
}
