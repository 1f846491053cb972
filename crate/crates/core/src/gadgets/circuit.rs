use std::fmt;

use crate::error::{Error, Result};
use crate::numerics::C64;

/// Gate alphabet of the amplitude gadget.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Gate {
    H(usize),
    X(usize),
    Cx { control: usize, target: usize },
    Ccx { c1: usize, c2: usize, target: usize },
    /// phase `e^{i theta}` on `|11>`
    CPhase { control: usize, target: usize, theta: f64 },
    Ry { target: usize, theta: f64 },
}

impl Gate {
    pub fn name(&self) -> &'static str {
        match self {
            Gate::H(_) => "H",
            Gate::X(_) => "X",
            Gate::Cx { .. } => "CX",
            Gate::Ccx { .. } => "CCX",
            Gate::CPhase { .. } => "CP",
            Gate::Ry { .. } => "RY",
        }
    }

    pub fn target(&self) -> usize {
        match *self {
            Gate::H(t) | Gate::X(t) => t,
            Gate::Cx { target, .. }
            | Gate::Ccx { target, .. }
            | Gate::CPhase { target, .. }
            | Gate::Ry { target, .. } => target,
        }
    }

    pub fn controls(&self) -> Vec<usize> {
        match *self {
            Gate::H(_) | Gate::X(_) | Gate::Ry { .. } => vec![],
            Gate::Cx { control, .. } | Gate::CPhase { control, .. } => vec![control],
            Gate::Ccx { c1, c2, .. } => vec![c1, c2],
        }
    }

    /// Number of qubits the gate acts on.
    pub fn arity(&self) -> usize {
        1 + self.controls().len()
    }

    /// Target action as a 2x2 matrix `[[u00, u01], [u10, u11]]`.
    pub fn local_matrix(&self) -> [[C64; 2]; 2] {
        let z = C64::new(0.0, 0.0);
        let o = C64::new(1.0, 0.0);
        match *self {
            Gate::H(_) => {
                let s = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
                [[s, s], [s, -s]]
            }
            Gate::X(_) | Gate::Cx { .. } | Gate::Ccx { .. } => [[z, o], [o, z]],
            Gate::CPhase { theta, .. } => [[o, z], [z, C64::from_polar(1.0, theta)]],
            Gate::Ry { theta, .. } => {
                let (s, c) = (theta / 2.0).sin_cos();
                [[C64::new(c, 0.0), C64::new(-s, 0.0)], [C64::new(s, 0.0), C64::new(c, 0.0)]]
            }
        }
    }

    /// True when the gate maps basis states to (phased) basis states.
    pub fn is_monomial(&self) -> bool {
        !matches!(self, Gate::H(_) | Gate::Ry { .. })
    }

    pub fn validate(&self, qubits: usize) -> Result<()> {
        let t = self.target();
        let cs = self.controls();
        for &q in cs.iter().chain(std::iter::once(&t)) {
            if q >= qubits {
                return Err(Error::OutOfRange {
                    what: "qubit",
                    index: q,
                    limit: qubits,
                });
            }
        }
        if cs.contains(&t) || (cs.len() == 2 && cs[0] == cs[1]) {
            return Err(Error::param("gate", format!("{self} uses a qubit twice")));
        }
        Ok(())
    }
}

impl fmt::Display for Gate {
    /// `GATE targets controls params`, `-` for an empty field.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cs = self.controls();
        let controls = if cs.is_empty() {
            "-".to_string()
        } else {
            cs.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(",")
        };
        let params = match *self {
            Gate::CPhase { theta, .. } | Gate::Ry { theta, .. } => format!("{theta:.17e}"),
            _ => "-".to_string(),
        };
        write!(f, "{} {} {} {}", self.name(), self.target(), controls, params)
    }
}

/// Gate tallies.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct GateCount {
    pub total: usize,
    pub single: usize,
    pub two_qubit: usize,
    pub toffoli: usize,
}

impl GateCount {
    /// Two-qubit gates with each Toffoli expanded into 6 CNOTs.
    pub fn two_qubit_equivalent(&self) -> usize {
        self.two_qubit + 6 * self.toffoli
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Circuit {
    pub qubits: usize,
    pub gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(qubits: usize) -> Self {
        Self { qubits, gates: Vec::new() }
    }

    pub fn push(&mut self, g: Gate) {
        debug_assert!(g.validate(self.qubits).is_ok(), "invalid gate {g}");
        self.gates.push(g);
    }

    pub fn count(&self) -> GateCount {
        let mut c = GateCount::default();
        for g in &self.gates {
            c.total += 1;
            match g.arity() {
                1 => c.single += 1,
                2 => c.two_qubit += 1,
                _ => c.toffoli += 1,
            }
        }
        c
    }

    pub fn dump(&self) -> String {
        let mut s = String::new();
        for g in &self.gates {
            s.push_str(&g.to_string());
            s.push('\n');
        }
        s
    }
}
