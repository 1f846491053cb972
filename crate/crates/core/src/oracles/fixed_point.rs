use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::C64;

/// Bit widths of a complex fixed-point number `r e^{2 pi i phi}`.
///
/// `p` phase bits, `m + 1` integer bits and `n` fraction bits for the
/// magnitude, so `b = p + m + n + 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FixedPointFormat {
    pub p: u32,
    pub m: u32,
    pub n: u32,
}

impl Default for FixedPointFormat {
    fn default() -> Self {
        Self { p: 12, m: 3, n: 16 }
    }
}

impl FixedPointFormat {
    pub fn new(p: u32, m: u32, n: u32) -> Result<Self> {
        if p + m + n + 1 > 52 {
            return Err(Error::param("b", format!("p+m+n+1 = {} exceeds 52 bits", p + m + n + 1)));
        }
        Ok(Self { p, m, n })
    }

    pub fn bits(&self) -> u32 {
        self.p + self.m + self.n + 1
    }

    /// Largest magnitude integer `R = r 2^n`, i.e. `2^(m+n)`.
    pub fn r_int_max(&self) -> u64 {
        1u64 << (self.m + self.n)
    }

    pub fn phase_modulus(&self) -> u64 {
        1u64 << self.p
    }

    pub fn r_max(&self) -> f64 {
        2f64.powi(self.m as i32)
    }

    /// Every value in this format; intended for small `b` only.
    pub fn enumerate(&self) -> impl Iterator<Item = FixedPointValue> + '_ {
        let fmt = *self;
        (0..=fmt.r_int_max()).flat_map(move |r| {
            (0..fmt.phase_modulus()).map(move |phi| FixedPointValue { fmt, r_int: r, phi_int: phi })
        })
    }
}

/// A value `z = r e^{2 pi i phi}` with `R = r 2^n` and `Phi = phi 2^p` stored as integers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FixedPointValue {
    pub fmt: FixedPointFormat,
    r_int: u64,
    phi_int: u64,
}

impl FixedPointValue {
    pub fn zero(fmt: FixedPointFormat) -> Self {
        Self { fmt, r_int: 0, phi_int: 0 }
    }

    pub fn from_bits(fmt: FixedPointFormat, r_int: u64, phi_int: u64) -> Result<Self> {
        if r_int > fmt.r_int_max() {
            return Err(Error::NotRepresentable {
                value: format!("R={r_int}"),
                reason: format!("magnitude integer exceeds 2^(m+n) = {}", fmt.r_int_max()),
            });
        }
        if phi_int >= fmt.phase_modulus() {
            return Err(Error::NotRepresentable {
                value: format!("Phi={phi_int}"),
                reason: format!("phase integer must be below 2^p = {}", fmt.phase_modulus()),
            });
        }
        Ok(Self { fmt, r_int, phi_int })
    }

    /// Round-to-nearest encoding of `z`.
    pub fn encode(z: C64, fmt: FixedPointFormat) -> Result<Self> {
        if !z.re.is_finite() || !z.im.is_finite() {
            return Err(Error::NotRepresentable {
                value: format!("{z}"),
                reason: "non-finite".into(),
            });
        }
        let scale = (1u64 << fmt.n) as f64;
        let r_int = (z.norm() * scale).round();
        if r_int > fmt.r_int_max() as f64 {
            return Err(Error::NotRepresentable {
                value: format!("{z}"),
                reason: format!("|z| exceeds 2^m = {}", fmt.r_max()),
            });
        }
        let r_int = r_int as u64;
        if r_int == 0 {
            return Ok(Self::zero(fmt));
        }
        let modulus = fmt.phase_modulus();
        let turns = z.arg().rem_euclid(TAU) / TAU;
        let phi_int = ((turns * modulus as f64).round() as u64) % modulus;
        Ok(Self { fmt, r_int, phi_int })
    }

    pub fn r_int(&self) -> u64 {
        self.r_int
    }

    pub fn phi_int(&self) -> u64 {
        self.phi_int
    }

    pub fn r(&self) -> f64 {
        self.r_int as f64 / (1u64 << self.fmt.n) as f64
    }

    pub fn phi(&self) -> f64 {
        self.phi_int as f64 / self.fmt.phase_modulus() as f64
    }

    pub fn is_zero(&self) -> bool {
        self.r_int == 0
    }

    /// `r_j` with `r = 2^m sum_j r_j 2^-j`, `j = 0..=m+n`.
    pub fn r_bit(&self, j: u32) -> u8 {
        let pos = self.fmt.m + self.fmt.n - j;
        ((self.r_int >> pos) & 1) as u8
    }

    /// `phi_j` with `phi = sum_j phi_j 2^-j`, `j = 1..=p`.
    pub fn phi_bit(&self, j: u32) -> u8 {
        ((self.phi_int >> (self.fmt.p - j)) & 1) as u8
    }

    pub fn conj(&self) -> Self {
        let modulus = self.fmt.phase_modulus();
        Self {
            fmt: self.fmt,
            r_int: self.r_int,
            phi_int: (modulus - self.phi_int) % modulus,
        }
    }

    /// Real (phase 0 or 1/2)?
    pub fn is_real(&self) -> bool {
        self.is_zero() || self.phi_int == 0 || 2 * self.phi_int == self.fmt.phase_modulus()
    }

    /// Decoded complex value. Conjugate pairs decode to exact conjugates.
    pub fn to_complex(&self) -> C64 {
        if self.r_int == 0 {
            return C64::new(0.0, 0.0);
        }
        let r = self.r();
        let modulus = self.fmt.phase_modulus();
        if self.phi_int == 0 {
            return C64::new(r, 0.0);
        }
        if 2 * self.phi_int == modulus {
            return C64::new(-r, 0.0);
        }
        if 4 * self.phi_int == modulus {
            return C64::new(0.0, r);
        }
        if 4 * self.phi_int == 3 * modulus {
            return C64::new(0.0, -r);
        }
        if 2 * self.phi_int > modulus {
            return self.conj().to_complex().conj();
        }
        let angle = TAU * self.phi();
        C64::new(r * angle.cos(), r * angle.sin())
    }

    /// Principal square root `sqrt(r) e^{i pi phi}`.
    pub fn sqrt(&self) -> C64 {
        C64::from_polar(self.r().sqrt(), std::f64::consts::PI * self.phi())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bits_round_trip() {
        let fmt = FixedPointFormat::new(2, 1, 2).unwrap();
        for v in fmt.enumerate() {
            let mut r = 0.0;
            for j in 0..=fmt.m + fmt.n {
                r += f64::from(v.r_bit(j)) * 2f64.powi(fmt.m as i32 - j as i32);
            }
            assert_eq!(r, v.r());
            let phi: f64 = (1..=fmt.p).map(|j| f64::from(v.phi_bit(j)) * 2f64.powi(-(j as i32))).sum();
            assert_eq!(phi, v.phi());
            if !v.is_zero() {
                assert_eq!(FixedPointValue::encode(v.to_complex(), fmt).unwrap(), v);
            }
        }
    }

    #[test]
    fn conj_decodes_exactly() {
        let fmt = FixedPointFormat::default();
        let z = FixedPointValue::encode(C64::new(0.3, -1.7), fmt).unwrap();
        assert_eq!(z.conj().to_complex(), z.to_complex().conj());
    }

    #[test]
    fn too_large_rejected() {
        let fmt = FixedPointFormat::new(4, 0, 8).unwrap();
        assert!(FixedPointValue::encode(C64::new(1.5, 0.0), fmt).is_err());
        assert!(FixedPointValue::encode(C64::new(1.0, 0.0), fmt).is_ok());
    }
}
