use std::path::PathBuf;

use hamsim_core::instances::{h_parity_or, parity_or_input, parity_or_target, random_sparse, InstanceParams, MagnitudeProfile};
use hamsim_core::numerics::C64;
use hamsim_core::oracles::{build_oracles, read_instance, write_instance, FixedPointFormat, SparseHermitian};
use hamsim_core::sparsesim::{simulate_sparse, SparseOptions};
use hamsim_core::suites::{run_suite, Scale, SuiteConfig};

#[test]
fn file_round_trip_then_simulate() {
    let h = random_sparse(16, 4, 0.8, MagnitudeProfile::Uniform, FixedPointFormat::default(), 77).unwrap();
    let h = read_instance(&write_instance(&h)).unwrap();
    let norms = *h.norms();
    let o = build_oracles(h);
    let r = simulate_sparse(&o, &norms, 0.7, 1e-4, &SparseOptions::default()).unwrap();
    assert!(r.sim.measured_error <= 1e-4, "{}", r.sim.measured_error);
    assert_eq!(r.ledger().o_h, o.ledger().snapshot().o_h);
}

#[test]
fn two_terms_when_forced() {
    let h = random_sparse(16, 8, 1.0, MagnitudeProfile::LogUniform { decades: 2.0 }, FixedPointFormat::default(), 3).unwrap();
    let norms = *h.norms();
    let o = build_oracles(h);
    let opts = SparseOptions {
        m: Some(2),
        ..SparseOptions::default()
    };
    let r = simulate_sparse(&o, &norms, 0.5, 1e-4, &opts).unwrap();
    assert_eq!(r.schedule.m, 2);
    assert!(r.sim.measured_error <= 1e-4);
}

#[test]
fn exported_parity_of_ors_runs_through_the_sparse_pipeline() {
    let p = InstanceParams::new(2, 1, 1, vec![vec![true], vec![false]]).unwrap();
    let dense = h_parity_or(&p).unwrap();
    let h = SparseHermitian::from_dense(&dense, dense.sparsity(1e-12), FixedPointFormat::default()).unwrap();
    let norms = *h.norms();
    let o = build_oracles(h);
    let r = simulate_sparse(&o, &norms, p.transfer_time(), 1e-4, &SparseOptions::default()).unwrap();
    let out = r.sim.operator.apply(&parity_or_input(&p, 0));
    let target = parity_or_target(&p, usize::from(p.parity_of_ors()));
    let amp: C64 = target.iter().zip(&out).map(|(a, b)| a.conj() * b).sum();
    // fixed-point rounding of 1/sqrt(2) entries dominates
    assert!(amp.norm_sqr() > 1.0 - 1e-3, "{}", amp.norm_sqr());
}

fn golden(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

fn check_golden(suite: &str) {
    let csv = run_suite(suite, &SuiteConfig { seed: 7, scale: Scale::Quick }).unwrap().to_csv();
    let path = golden(&format!("{suite}-quick-seed7.csv"));
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, &csv).unwrap();
    }
    let want = std::fs::read_to_string(&path).expect("golden file; run with UPDATE_GOLDEN=1 to create");
    assert_eq!(csv, want, "{suite} drifted from {}", path.display());
}

#[test]
fn golden_norms() {
    check_golden("norms");
}

#[test]
fn golden_cost() {
    check_golden("cost");
}

#[test]
fn golden_recursion() {
    check_golden("recursion");
}
