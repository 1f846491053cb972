use super::circuit::Gate;
use crate::error::{Error, Result};
use crate::numerics::C64;

pub const MAX_QUBITS: usize = 24;

/// Anything a gate can act on.
pub trait QuantumState {
    fn qubits(&self) -> usize;
    fn apply_gate(&mut self, g: &Gate) -> Result<()>;
    fn amplitude(&self, index: u64) -> C64;
    fn norm_sqr(&self) -> f64;
}

fn control_mask(g: &Gate) -> u64 {
    g.controls().iter().fold(0u64, |m, &c| m | (1u64 << c))
}

/// Dense state over `q <= 24` qubits; qubit 0 is the least significant bit.
#[derive(Clone, Debug, PartialEq)]
pub struct Statevector {
    qubits: usize,
    amps: Vec<C64>,
}

impl Statevector {
    pub fn basis(qubits: usize, index: u64) -> Result<Self> {
        if qubits > MAX_QUBITS {
            return Err(Error::OutOfRange {
                what: "qubits",
                index: qubits,
                limit: MAX_QUBITS,
            });
        }
        let len = 1usize << qubits;
        if index as usize >= len {
            return Err(Error::OutOfRange {
                what: "basis index",
                index: index as usize,
                limit: len,
            });
        }
        let mut amps = vec![C64::new(0.0, 0.0); len];
        amps[index as usize] = C64::new(1.0, 0.0);
        Ok(Self { qubits, amps })
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }
}

impl QuantumState for Statevector {
    fn qubits(&self) -> usize {
        self.qubits
    }

    fn apply_gate(&mut self, g: &Gate) -> Result<()> {
        g.validate(self.qubits)?;
        let t = 1usize << g.target();
        let cm = control_mask(g) as usize;
        let [[u00, u01], [u10, u11]] = g.local_matrix();
        for i in 0..self.amps.len() {
            if i & t != 0 || i & cm != cm {
                continue;
            }
            let a0 = self.amps[i];
            let a1 = self.amps[i | t];
            self.amps[i] = u00 * a0 + u01 * a1;
            self.amps[i | t] = u10 * a0 + u11 * a1;
        }
        Ok(())
    }

    fn amplitude(&self, index: u64) -> C64 {
        self.amps.get(index as usize).copied().unwrap_or_default()
    }

    fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }
}

/// Sparse state: sorted `(basis index, amplitude)` pairs. Cheap when most
/// qubits stay in basis states, as in the gadget where only the `a`
/// register is ever in superposition.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseState {
    qubits: usize,
    entries: Vec<(u64, C64)>,
}

impl SparseState {
    pub fn basis(qubits: usize, index: u64) -> Result<Self> {
        if qubits > 63 {
            return Err(Error::OutOfRange {
                what: "qubits",
                index: qubits,
                limit: 63,
            });
        }
        Ok(Self {
            qubits,
            entries: vec![(index, C64::new(1.0, 0.0))],
        })
    }

    pub fn entries(&self) -> &[(u64, C64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl QuantumState for SparseState {
    fn qubits(&self) -> usize {
        self.qubits
    }

    fn apply_gate(&mut self, g: &Gate) -> Result<()> {
        g.validate(self.qubits)?;
        let t = 1u64 << g.target();
        let cm = control_mask(g);
        let [[u00, u01], [u10, u11]] = g.local_matrix();
        if g.is_monomial() {
            // each basis state maps to one basis state
            let flips = u00.norm_sqr() == 0.0;
            for (idx, amp) in self.entries.iter_mut() {
                if *idx & cm != cm {
                    continue;
                }
                let bit = *idx & t != 0;
                if flips {
                    *amp *= if bit { u01 } else { u10 };
                    *idx ^= t;
                } else {
                    *amp *= if bit { u11 } else { u00 };
                }
            }
            if flips {
                self.entries.sort_unstable_by_key(|e| e.0);
            }
            return Ok(());
        }
        let mut next = Vec::with_capacity(self.entries.len() * 2);
        for &(idx, amp) in &self.entries {
            if idx & cm != cm {
                next.push((idx, amp));
                continue;
            }
            let lo = idx & !t;
            let hi = idx | t;
            let (c_lo, c_hi) = if idx & t == 0 { (u00, u10) } else { (u01, u11) };
            next.push((lo, c_lo * amp));
            next.push((hi, c_hi * amp));
        }
        next.sort_unstable_by_key(|e| e.0);
        let mut merged: Vec<(u64, C64)> = Vec::with_capacity(next.len());
        for (idx, amp) in next {
            match merged.last_mut() {
                Some(last) if last.0 == idx => last.1 += amp,
                _ => merged.push((idx, amp)),
            }
        }
        merged.retain(|e| e.1.norm_sqr() != 0.0);
        self.entries = merged;
        Ok(())
    }

    fn amplitude(&self, index: u64) -> C64 {
        match self.entries.binary_search_by_key(&index, |e| e.0) {
            Ok(pos) => self.entries[pos].1,
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    fn norm_sqr(&self) -> f64 {
        self.entries.iter().map(|e| e.1.norm_sqr()).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hadamard_on_zero() {
        let mut sv = Statevector::basis(1, 0).unwrap();
        sv.apply_gate(&Gate::H(0)).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((sv.amplitude(0).re - s).abs() < 1e-15);
        assert!((sv.amplitude(1).re - s).abs() < 1e-15);
    }

    #[test]
    fn overlapping_qubits_rejected() {
        let mut sv = Statevector::basis(2, 0).unwrap();
        assert!(sv.apply_gate(&Gate::Cx { control: 1, target: 1 }).is_err());
        assert!(sv.apply_gate(&Gate::X(2)).is_err());
    }

    #[test]
    fn sparse_matches_dense() {
        let gates = [
            Gate::H(0),
            Gate::H(2),
            Gate::Ccx { c1: 0, c2: 2, target: 1 },
            Gate::CPhase { control: 1, target: 0, theta: 0.3 },
            Gate::Ry { target: 3, theta: 1.1 },
            Gate::Cx { control: 3, target: 2 },
            Gate::X(1),
        ];
        let mut dense = Statevector::basis(4, 0b0000).unwrap();
        let mut sparse = SparseState::basis(4, 0b0000).unwrap();
        for g in &gates {
            dense.apply_gate(g).unwrap();
            sparse.apply_gate(g).unwrap();
        }
        for i in 0..16 {
            assert!((dense.amplitude(i) - sparse.amplitude(i)).norm() < 1e-15);
        }
    }
}
