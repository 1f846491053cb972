use hamsim_wasm_demo::{cost_curve, gadget_amplitude, transfer_trace};

#[test]
fn trace_peaks_at_transfer_time() {
    // 25 points over [0, 1.5 T]: index 16 is T
    let tr = transfer_trace("10,00", 2, 25).unwrap();
    assert_eq!(tr.len(), 26);
    assert_eq!(tr[25], 1.0);
    assert!(tr[0] < 1e-12);
    assert!(tr[16] > 1.0 - 1e-9, "{}", tr[16]);
}

#[test]
fn trace_rejects_promise_violation() {
    assert!(transfer_trace("11", 1, 4).is_err());
    assert!(transfer_trace("1x", 1, 4).is_err());
}

#[test]
fn gadget_matches_target() {
    let v = gadget_amplitude(3, 1, 4, 20, 5, 2.0).unwrap();
    assert!((v[0] - v[2]).abs() < 1e-12 && (v[1] - v[3]).abs() < 1e-12);
    assert!(v[4] < 1e-12);
}

#[test]
fn cost_curve_has_one_triple_per_d() {
    let c = cost_curve(1.0, 1.0, 1e-3, 12).unwrap();
    assert_eq!(c.len(), 36);
    assert_eq!(c[33], 4096.0);
}
