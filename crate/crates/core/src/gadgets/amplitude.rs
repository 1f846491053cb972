use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::circuit::{Circuit, Gate, GateCount};
use super::statevector::{QuantumState, SparseState, Statevector, MAX_QUBITS};
use crate::error::{Error, Result};
use crate::numerics::C64;
use crate::oracles::{FixedPointFormat, FixedPointValue};

/// Qubit offsets of the gadget registers. Integers are stored LSB first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GadgetLayout {
    pub fmt: FixedPointFormat,
    /// `Phi = phi 2^p`, `p` qubits
    pub phi: usize,
    /// `R = r 2^n`, `m + n + 1` qubits
    pub r: usize,
    /// uniform register, `m + n` qubits
    pub a: usize,
    /// comparison flag
    pub b: usize,
    /// rotation qubit
    pub c: usize,
    /// carry line of the comparator
    pub carry: usize,
    pub qubits: usize,
}

impl GadgetLayout {
    pub fn new(fmt: FixedPointFormat) -> Self {
        let p = fmt.p as usize;
        let w = (fmt.m + fmt.n) as usize;
        let phi = 0;
        let r = phi + p;
        let a = r + w + 1;
        let b = a + w;
        Self {
            fmt,
            phi,
            r,
            a,
            b,
            c: b + 1,
            carry: b + 2,
            qubits: b + 3,
        }
    }

    pub fn width_a(&self) -> usize {
        (self.fmt.m + self.fmt.n) as usize
    }

    /// Basis index holding `z` in the input registers, everything else `|0>`.
    pub fn input_index(&self, z: &FixedPointValue) -> u64 {
        (z.phi_int() << self.phi) | (z.r_int() << self.r)
    }

    fn input_mask(&self) -> u64 {
        (1u64 << self.a) - 1
    }
}

/// Gate counts per stage.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GadgetGateBreakdown {
    pub uniform: usize,
    pub compare: usize,
    pub phase: usize,
    pub rotation: usize,
}

impl GadgetGateBreakdown {
    pub fn total(&self) -> usize {
        self.uniform + self.compare + self.phase + self.rotation
    }
}

/// The amplitude-conversion circuit for one format and normalization.
#[derive(Clone, Debug)]
pub struct Gadget {
    pub layout: GadgetLayout,
    pub lambda_max: f64,
    /// phase ladder angles negated, giving `sqrt(r) e^{-i pi phi}`
    pub conjugate: bool,
    pub circuit: Circuit,
    pub breakdown: GadgetGateBreakdown,
}

/// MAJ of the ripple comparator: leaves the carry-out on `z`.
fn maj(c: &mut Circuit, x: usize, y: usize, z: usize) {
    c.push(Gate::Cx { control: z, target: y });
    c.push(Gate::Cx { control: z, target: x });
    c.push(Gate::Ccx { c1: x, c2: y, target: z });
}

fn unmaj(c: &mut Circuit, x: usize, y: usize, z: usize) {
    c.push(Gate::Ccx { c1: x, c2: y, target: z });
    c.push(Gate::Cx { control: z, target: x });
    c.push(Gate::Cx { control: z, target: y });
}

/// Flags `b` iff `x >= R`, via the carry of `x + !R + 1`.
fn compare(c: &mut Circuit, l: &GadgetLayout) {
    let w = l.width_a();
    for i in 0..=w {
        c.push(Gate::X(l.r + i));
    }
    c.push(Gate::X(l.carry));
    let mut carry = l.carry;
    for i in 0..w {
        maj(c, carry, l.r + i, l.a + i);
        carry = l.a + i;
    }
    // top bit of x is 0, so the final carry is !R_w AND c_w
    c.push(Gate::Ccx { c1: carry, c2: l.r + w, target: l.b });
    for i in (0..w).rev() {
        let x = if i == 0 { l.carry } else { l.a + i - 1 };
        unmaj(c, x, l.r + i, l.a + i);
    }
    c.push(Gate::X(l.carry));
    for i in 0..=w {
        c.push(Gate::X(l.r + i));
    }
}

/// `e^{i Z_b pi phi_j 2^-j}` controlled on each phase bit.
fn phase(c: &mut Circuit, l: &GadgetLayout, sign: f64) {
    let p = l.fmt.p as usize;
    for j in 1..=p {
        let control = l.phi + p - j;
        let theta = sign * PI * 2f64.powi(-(j as i32));
        c.push(Gate::X(l.b));
        c.push(Gate::CPhase { control, target: l.b, theta });
        c.push(Gate::X(l.b));
        c.push(Gate::CPhase { control, target: l.b, theta: -theta });
    }
}

impl Gadget {
    pub fn new(fmt: FixedPointFormat, lambda_max: f64) -> Result<Self> {
        Self::build(fmt, lambda_max, false)
    }

    /// Variant whose good branch carries `conj(sqrt(z))`.
    pub fn conjugated(fmt: FixedPointFormat, lambda_max: f64) -> Result<Self> {
        Self::build(fmt, lambda_max, true)
    }

    fn build(fmt: FixedPointFormat, lambda_max: f64, conjugate: bool) -> Result<Self> {
        let floor = 2f64.powi(fmt.m as i32);
        if !(lambda_max >= floor) || !lambda_max.is_finite() {
            return Err(Error::param("lambda_max", format!("need lambda_max >= 2^m = {floor}, got {lambda_max}")));
        }
        let layout = GadgetLayout::new(fmt);
        let mut circuit = Circuit::new(layout.qubits);
        let w = layout.width_a();
        for i in 0..w {
            circuit.push(Gate::H(layout.a + i));
        }
        let uniform = circuit.gates.len();
        compare(&mut circuit, &layout);
        let compare_n = circuit.gates.len() - uniform;
        phase(&mut circuit, &layout, if conjugate { -1.0 } else { 1.0 });
        let phase_n = circuit.gates.len() - uniform - compare_n;
        let theta = 2.0 * (floor / lambda_max).sqrt().acos();
        circuit.push(Gate::Ry { target: layout.c, theta });
        Ok(Self {
            layout,
            lambda_max,
            conjugate,
            circuit,
            breakdown: GadgetGateBreakdown {
                uniform,
                compare: compare_n,
                phase: phase_n,
                rotation: 1,
            },
        })
    }

    pub fn run<S: QuantumState>(&self, state: &mut S) -> Result<()> {
        for g in &self.circuit.gates {
            state.apply_gate(g)?;
        }
        Ok(())
    }

    /// Expected `|00>_{bc}` amplitude on each `x` of register `a`.
    pub fn expected_component(&self, z: &FixedPointValue, x: u64) -> C64 {
        if x >= z.r_int() {
            return C64::new(0.0, 0.0);
        }
        let scale = (self.lambda_max * (1u64 << self.layout.fmt.n) as f64).sqrt().recip();
        C64::from_polar(scale, self.phase_sign() * PI * z.phi())
    }

    fn phase_sign(&self) -> f64 {
        if self.conjugate {
            -1.0
        } else {
            1.0
        }
    }
}

/// Outcome of running the gadget on one input.
#[derive(Clone, Debug)]
pub struct GadgetRun {
    pub z: FixedPointValue,
    /// `<u_r| (I_a (x) <00|_{bc}) |Phi>`, or the plain projection norm when `r = 0`
    pub projected_amplitude: C64,
    /// `sqrt(r) e^{i pi phi} / sqrt(Lambda_max)`
    pub expected_amplitude: C64,
    /// max over `x` of the deviation of the `|00>_{bc}` component from its target
    pub component_error: f64,
    /// weight left on input/carry registers other than `z`, `|0>`
    pub leaked_weight: f64,
    pub norm_error: f64,
}

impl GadgetRun {
    pub fn max_error(&self) -> f64 {
        (self.projected_amplitude - self.expected_amplitude)
            .norm()
            .max(self.component_error)
            .max(self.leaked_weight)
    }
}

fn analyse<S: QuantumState>(g: &Gadget, z: &FixedPointValue, entries: impl Iterator<Item = (u64, C64)>, state: &S) -> GadgetRun {
    let l = &g.layout;
    let input = l.input_index(z);
    let a_mask = ((1u64 << l.width_a()) - 1) << l.a;
    let mut component_error: f64 = 0.0;
    let mut overlap = C64::new(0.0, 0.0);
    let mut leaked = 0.0;
    let mut projected_sqr = 0.0;
    let mut seen = vec![false; 1usize << l.width_a()];
    for (idx, amp) in entries {
        if idx & l.input_mask() != input || idx & (1 << l.carry) != 0 {
            leaked += amp.norm_sqr();
            continue;
        }
        if idx & ((1 << l.b) | (1 << l.c)) != 0 {
            continue;
        }
        let x = (idx & a_mask) >> l.a;
        seen[x as usize] = true;
        component_error = component_error.max((amp - g.expected_component(z, x)).norm());
        projected_sqr += amp.norm_sqr();
        if x < z.r_int() {
            overlap += amp / (z.r_int() as f64).sqrt();
        }
    }
    for (x, s) in seen.iter().enumerate() {
        if !s {
            component_error = component_error.max(g.expected_component(z, x as u64).norm());
        }
    }
    let expected = C64::from_polar((z.r() / g.lambda_max).sqrt(), g.phase_sign() * PI * z.phi());
    let projected_amplitude = if z.is_zero() {
        C64::new(projected_sqr.sqrt(), 0.0)
    } else {
        overlap
    };
    GadgetRun {
        z: *z,
        projected_amplitude,
        expected_amplitude: expected,
        component_error,
        leaked_weight: leaked.sqrt(),
        norm_error: (state.norm_sqr() - 1.0).abs(),
    }
}

/// Runs the gadget on `z` with the sparse simulator.
pub fn run_gadget_sparse(g: &Gadget, z: &FixedPointValue) -> Result<(GadgetRun, SparseState)> {
    let mut s = SparseState::basis(g.layout.qubits, g.layout.input_index(z))?;
    g.run(&mut s)?;
    let run = analyse(g, z, s.entries().iter().copied(), &s);
    Ok((run, s))
}

/// Dense-statevector run; limited to 24 qubits.
pub fn fixed_point_to_amplitude(z: &FixedPointValue, lambda_max: f64) -> Result<(GadgetRun, Statevector)> {
    let g = Gadget::new(z.fmt, lambda_max)?;
    if g.layout.qubits > MAX_QUBITS {
        return Err(Error::OutOfRange {
            what: "qubits",
            index: g.layout.qubits,
            limit: MAX_QUBITS,
        });
    }
    let mut s = Statevector::basis(g.layout.qubits, g.layout.input_index(z))?;
    g.run(&mut s)?;
    let entries: Vec<(u64, C64)> = s
        .amplitudes()
        .iter()
        .enumerate()
        .filter(|(_, a)| a.norm_sqr() > 0.0)
        .map(|(i, a)| (i as u64, *a))
        .collect();
    let run = analyse(&g, z, entries.into_iter(), &s);
    Ok((run, s))
}

/// Gate tallies of the gadget for a format (independent of `Lambda_max`).
pub fn gate_count(fmt: FixedPointFormat) -> (GateCount, GadgetGateBreakdown) {
    let lambda = 2f64.powi(fmt.m as i32);
    let g = Gadget::new(fmt, lambda).expect("2^m is admissible");
    (g.circuit.count(), g.breakdown)
}

/// Worst-case errors of an exhaustive sweep over every value of a format.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub values: usize,
    pub max_amplitude_error: f64,
    pub max_component_error: f64,
    pub max_leak: f64,
    pub max_norm_error: f64,
}

pub fn exhaustive_sweep(fmt: FixedPointFormat, lambda_max: f64) -> Result<SweepSummary> {
    let g = Gadget::new(fmt, lambda_max)?;
    let mut s = SweepSummary::default();
    for z in fmt.enumerate() {
        let (run, _) = run_gadget_sparse(&g, &z)?;
        s.values += 1;
        s.max_amplitude_error = s
            .max_amplitude_error
            .max((run.projected_amplitude - run.expected_amplitude).norm());
        s.max_component_error = s.max_component_error.max(run.component_error);
        s.max_leak = s.max_leak.max(run.leaked_weight);
        s.max_norm_error = s.max_norm_error.max(run.norm_error);
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn breakdown_formula() {
        for (p, m, n) in [(0, 0, 1), (1, 0, 1), (3, 2, 4), (12, 3, 16)] {
            let fmt = FixedPointFormat::new(p, m, n).unwrap();
            let (count, parts) = gate_count(fmt);
            let w = (m + n) as usize;
            assert_eq!(count.total, parts.total());
            assert_eq!(parts.compare, 8 * w + 5);
            assert_eq!(parts.phase, 4 * p as usize);
            assert_eq!(count.total, 9 * w + 4 * p as usize + 6);
        }
    }

    #[test]
    fn half_phase_example() {
        let fmt = FixedPointFormat::new(1, 0, 1).unwrap();
        let z = FixedPointValue::from_bits(fmt, 1, 1).unwrap();
        assert_eq!((z.r(), z.phi()), (0.5, 0.5));
        let (run, _) = fixed_point_to_amplitude(&z, 1.0).unwrap();
        assert!((run.projected_amplitude - C64::new(0.0, 0.5f64.sqrt())).norm() < 1e-12);
        assert!(run.max_error() < 1e-12);
    }

    #[test]
    fn small_format_dense_and_sparse_agree() {
        let fmt = FixedPointFormat::new(2, 1, 2).unwrap();
        let g = Gadget::new(fmt, 3.0).unwrap();
        for z in fmt.enumerate() {
            let (dense, _) = fixed_point_to_amplitude(&z, 3.0).unwrap();
            let (sparse, _) = run_gadget_sparse(&g, &z).unwrap();
            assert!(dense.max_error() < 1e-12, "{z:?}");
            assert!((dense.projected_amplitude - sparse.projected_amplitude).norm() < 1e-14);
        }
    }

    #[test]
    fn conjugated_ladder() {
        let fmt = FixedPointFormat::new(3, 0, 2).unwrap();
        let g = Gadget::conjugated(fmt, 1.0).unwrap();
        let z = FixedPointValue::from_bits(fmt, 3, 5).unwrap();
        let (run, _) = run_gadget_sparse(&g, &z).unwrap();
        assert!((run.projected_amplitude - z.sqrt().conj()).norm() < 1e-12);
    }
}
