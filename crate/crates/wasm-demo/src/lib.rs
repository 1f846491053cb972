//! Browser bindings: parity-of-ORs transfer trace, the fixed-point gadget on
//! one value, and the sparse cost curve over d.

use hamsim_core::costmodel::{cost_sparse, optimal_m, Constants};
use hamsim_core::gadgets::{run_gadget_sparse, Gadget};
use hamsim_core::instances::{h_parity_or, parity_or_input, parity_or_target, InstanceParams};
use hamsim_core::numerics::{hermitian_eig, ComplexMatrix, C64};
use hamsim_core::oracles::{FixedPointFormat, FixedPointValue};
use wasm_bindgen::prelude::*;

fn parse_blocks(x: &str) -> Result<Vec<Vec<bool>>, String> {
    x.split(',')
        .map(|b| {
            b.trim()
                .chars()
                .map(|c| match c {
                    '0' => Ok(false),
                    '1' => Ok(true),
                    _ => Err(format!("bad bit {c:?}")),
                })
                .collect()
        })
        .collect()
}

/// Probability of reaching the answer state at `points` evenly spaced times
/// in `[0, 1.5 T]`, `T` the transfer time. Last entry is the parity.
pub fn transfer_trace(x: &str, s: usize, points: usize) -> Result<Vec<f64>, String> {
    let blocks = parse_blocks(x)?;
    let n = blocks.len();
    let m = blocks.first().map_or(0, Vec::len);
    let p = InstanceParams::new(n, m, s, blocks).map_err(|e| e.to_string())?;
    if p.dim() > 256 {
        return Err(format!("dimension {} too large for the page", p.dim()));
    }
    let h = h_parity_or(&p).map_err(|e| e.to_string())?;
    let eig = hermitian_eig(&h).map_err(|e| e.to_string())?;
    let from = parity_or_input(&p, 0);
    let parity = usize::from(p.parity_of_ors());
    let to = parity_or_target(&p, parity);
    let v: &ComplexMatrix = &eig.eigenvectors;
    // overlaps in the eigenbasis, then the trace is a sum of phases
    let a = v.adjoint().apply(&from);
    let b = v.adjoint().apply(&to);
    let horizon = 1.5 * p.transfer_time();
    let mut out: Vec<f64> = (0..points.max(2))
        .map(|k| {
            let t = horizon * k as f64 / (points.max(2) - 1) as f64;
            let amp: C64 = eig
                .eigenvalues
                .iter()
                .zip(a.iter().zip(&b))
                .map(|(&e, (ai, bi))| bi.conj() * ai * C64::from_polar(1.0, -e * t))
                .sum();
            amp.norm_sqr()
        })
        .collect();
    out.push(parity as f64);
    Ok(out)
}

/// `[projected re, projected im, expected re, expected im, garbage error, qubits, gates]`.
pub fn gadget_amplitude(p: u32, m: u32, n: u32, r_int: u32, phi_int: u32, lambda_max: f64) -> Result<Vec<f64>, String> {
    let fmt = FixedPointFormat::new(p, m, n).map_err(|e| e.to_string())?;
    let z = FixedPointValue::from_bits(fmt, r_int.into(), phi_int.into()).map_err(|e| e.to_string())?;
    let g = Gadget::new(fmt, lambda_max).map_err(|e| e.to_string())?;
    let (run, _) = run_gadget_sparse(&g, &z).map_err(|e| e.to_string())?;
    Ok(vec![
        run.projected_amplitude.re,
        run.projected_amplitude.im,
        run.expected_amplitude.re,
        run.expected_amplitude.im,
        run.component_error,
        g.layout.qubits as f64,
        g.circuit.count().total as f64,
    ])
}

/// Triples `(d, queries / (t sqrt(d) Lambda_12), m)` for `d = 2, 4, ..., 2^max_log_d`.
pub fn cost_curve(t: f64, lambda_12: f64, eps: f64, max_log_d: u32) -> Result<Vec<f64>, String> {
    let k = Constants::default();
    let mut out = Vec::new();
    for e in 1..=max_log_d.min(40) {
        let d = 2f64.powi(e as i32);
        let m = optimal_m(t, d, lambda_12, eps, &k).map_err(|e| e.to_string())?;
        let q = cost_sparse(t, d, lambda_12, eps, m, &k).map_err(|e| e.to_string())?.queries;
        out.extend([d, q / (t * d.sqrt() * lambda_12), m as f64]);
    }
    Ok(out)
}

#[wasm_bindgen(js_name = transferTrace)]
pub fn transfer_trace_js(x: &str, s: usize, points: usize) -> Result<Vec<f64>, JsValue> {
    transfer_trace(x, s, points).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = gadgetAmplitude)]
pub fn gadget_amplitude_js(p: u32, m: u32, n: u32, r_int: u32, phi_int: u32, lambda_max: f64) -> Result<Vec<f64>, JsValue> {
    gadget_amplitude(p, m, n, r_int, phi_int, lambda_max).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = costCurve)]
pub fn cost_curve_js(t: f64, lambda_12: f64, eps: f64, max_log_d: u32) -> Result<Vec<f64>, JsValue> {
    cost_curve(t, lambda_12, eps, max_log_d).map_err(|e| JsValue::from_str(&e))
}
