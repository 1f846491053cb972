use hamsim_core::blockenc::{build_stateprep, verify};
use hamsim_core::costmodel::{cost_recursion, cost_single, Constants};
use hamsim_core::instances::{dilate_unitary, random_sparse, MagnitudeProfile};
use hamsim_core::numerics::{random_unitary, spectral_norm, ComplexMatrix, SplitMix64};
use hamsim_core::oracles::{build_oracles, read_instance, write_instance, FixedPointFormat, FixedPointValue};
use proptest::prelude::*;

fn profile() -> impl Strategy<Value = MagnitudeProfile> {
    prop_oneof![
        Just(MagnitudeProfile::Constant),
        Just(MagnitudeProfile::Uniform),
        (0.5f64..3.0).prop_map(|decades| MagnitudeProfile::LogUniform { decades }),
    ]
}

prop_compose! {
    fn instance_params()(log_n in 1u32..=5, d_frac in 0.0f64..1.0, lambda in 0.1f64..4.0, profile in profile(), seed in any::<u64>())
        -> (usize, usize, f64, MagnitudeProfile, u64) {
        let n = 1usize << log_n;
        let d = 1 + ((d_frac * n.min(8) as f64) as usize).min(n.min(8) - 1);
        (n, d, lambda, profile, seed)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fixed_point_bits_survive_decode(r in 0u64..=(1 << 13), phi in 0u64..(1 << 12)) {
        let fmt = FixedPointFormat::new(12, 1, 12).unwrap();
        let v = FixedPointValue::from_bits(fmt, r, phi).unwrap();
        let back = FixedPointValue::encode(v.to_complex(), fmt).unwrap();
        if r == 0 {
            prop_assert!(back.is_zero());
        } else {
            prop_assert_eq!((back.r_int(), back.phi_int()), (r, phi));
        }
    }

    #[test]
    fn instance_file_round_trips((n, d, lambda, profile, seed) in instance_params()) {
        let h = random_sparse(n, d, lambda, profile, FixedPointFormat::default(), seed).unwrap();
        let text = write_instance(&h);
        let back = read_instance(&text).unwrap();
        prop_assert_eq!(write_instance(&back), text);
        prop_assert_eq!(back.decode(), h.decode());
    }

    #[test]
    fn norm_chain_holds((n, d, lambda, profile, seed) in instance_params()) {
        let h = random_sparse(n, d, lambda, profile, FixedPointFormat::default(), seed).unwrap();
        prop_assert!(h.norms().chain_holds(d, 1e-9));
    }

    #[test]
    fn encoding_reproduces_the_matrix((n, d, lambda, profile, seed) in instance_params()) {
        prop_assume!(n <= 16);
        let o = build_oracles(random_sparse(n, d, lambda, profile, FixedPointFormat::default(), seed).unwrap());
        let pair = build_stateprep(&o, o.max_entry()).unwrap();
        let enc = pair.encoding().unwrap();
        prop_assert!(verify(&enc, &o.materialize()).unwrap() <= 1e-9);
    }

    #[test]
    fn single_term_recursion_is_cost_single(t in 0.0f64..10.0, a in 0.01f64..10.0, c in 1.0f64..100.0, e in 1.0f64..12.0) {
        let k = Constants::default();
        let eps = 10f64.powf(-e);
        let r = cost_recursion(&[a], &[c], t, eps, &k).unwrap().queries;
        prop_assert_eq!(r, cost_single(t, a, c, eps, &k).unwrap().queries);
    }

    #[test]
    fn dilation_squares_to_identity(n in 1usize..6, seed in any::<u64>()) {
        let u = random_unitary(n, &mut SplitMix64::new(seed));
        let h = dilate_unitary(&u).unwrap();
        let sq = &(&h * &h) - &ComplexMatrix::identity(2 * n);
        prop_assert!(spectral_norm(&sq).unwrap() <= 1e-9);
    }
}
