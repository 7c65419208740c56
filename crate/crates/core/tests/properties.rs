use std::f64::consts::PI;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rxdesign::config::DesignConfig;
use rxdesign::geometry::{disc_square_overlap, max_pd_side, regime_of, BeamFootprint, InnerArray, Regime};
use rxdesign::modulation::{q_function, q_inverse, Modulation};
use rxdesign::optics::{BeamSpotModel, FovModel, LensSpec};
use rxdesign::oracle::linspace;
use rxdesign::pd::PinPhotodetector;
use rxdesign::snr::{egc_snr_exact, mrc_snr_exact};
use rxdesign::validation::random_problem;

fn square_count() -> impl Strategy<Value = u32> {
    (1u32..=12).prop_map(|k| k * k)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn overlap_is_bounded_and_symmetric(
        cx in -3.0f64..3.0, cy in -3.0f64..3.0, r in 0.01f64..3.0, s in 0.01f64..3.0,
    ) {
        let a = disc_square_overlap(&BeamFootprint::new((cx, cy), r).unwrap(), (0.0, 0.0), s);
        let mirrored = disc_square_overlap(&BeamFootprint::new((-cx, cy), r).unwrap(), (0.0, 0.0), s);
        let swapped = disc_square_overlap(&BeamFootprint::new((cy, cx), r).unwrap(), (0.0, 0.0), s);
        let cap = (PI * r * r).min(s * s);
        // Corner terms scale with the larger of the two areas.
        let scale = (PI * r * r).max(s * s);
        prop_assert!(a >= 0.0 && a <= cap * (1.0 + 1e-12));
        prop_assert!((a - mirrored).abs() <= 1e-12 * scale);
        prop_assert!((a - swapped).abs() <= 1e-12 * scale);
    }

    #[test]
    fn overlap_is_monotone_in_radius(cx in -1.0f64..1.0, cy in -1.0f64..1.0, r in 0.01f64..2.0, grow in 1.0f64..2.0) {
        let small = disc_square_overlap(&BeamFootprint::new((cx, cy), r).unwrap(), (0.0, 0.0), 1.0);
        let big = disc_square_overlap(&BeamFootprint::new((cx, cy), r * grow).unwrap(), (0.0, 0.0), 1.0);
        prop_assert!(big >= small - 1e-12);
    }

    #[test]
    fn array_overlaps_never_exceed_spot_or_detector_area(
        n in square_count(), ff in 0.05f64..1.0, w in 1e-6f64..500e-6, cx in -250e-6f64..250e-6, cy in -250e-6f64..250e-6,
    ) {
        let d = max_pd_side(n, 400e-6, ff);
        let inner = InnerArray::new(n, 400e-6, d).unwrap();
        let areas = inner.overlap_areas(&BeamFootprint::new((cx, cy), w).unwrap());
        let total: f64 = areas.iter().sum();
        prop_assert_eq!(areas.len(), n as usize);
        prop_assert!(total <= PI * w * w * (1.0 + 1e-9));
        prop_assert!(total <= n as f64 * d * d * (1.0 + 1e-9));
        prop_assert!(areas.iter().all(|a| *a >= 0.0 && *a <= d * d * (1.0 + 1e-9)));
    }

    #[test]
    fn spot_inside_one_detector_is_fully_collected(n in square_count(), fx in 0.2f64..0.8, fy in 0.2f64..0.8) {
        let d = max_pd_side(n, 400e-6, 0.64);
        let inner = InnerArray::new(n, 400e-6, d).unwrap();
        let k = n / 2;
        let (x0, y0) = inner.pd_centers()[k as usize];
        let c = (x0 + (fx - 0.5) * d * 0.5, y0 + (fy - 0.5) * d * 0.5);
        let w = 0.2 * d;
        let areas = inner.overlap_areas(&BeamFootprint::new(c, w).unwrap());
        prop_assert!((areas[k as usize] - PI * w * w).abs() <= 1e-12 * PI * w * w);
        prop_assert_eq!(inner.pd_at(c), Some(k as usize));
    }

    #[test]
    fn regimes_are_ordered_in_spot_radius(d in 1e-6f64..100e-6, w in 1e-7f64..1e-3) {
        let side = 400e-6;
        let r = regime_of(d, side, w);
        let expected = if w <= d / PI.sqrt() {
            Regime::SmallSpot
        } else if w <= side / PI.sqrt() {
            Regime::Intermediate
        } else {
            Regime::LargeSpot
        };
        prop_assert_eq!(r, expected);
    }

    #[test]
    fn depletion_length_maximises_bandwidth(side in 5e-6f64..500e-6, ratio in 0.05f64..20.0) {
        let pd = PinPhotodetector::silicon(side).unwrap();
        let best = pd.optimal_bandwidth().unwrap();
        let at_opt = pd.bandwidth(pd.optimal_depletion_length()).unwrap();
        let elsewhere = pd.bandwidth(pd.optimal_depletion_length() * ratio).unwrap();
        prop_assert!((best - at_opt).abs() <= 1e-12 * best);
        prop_assert!(elsewhere <= best * (1.0 + 1e-12));
    }

    #[test]
    fn bandwidth_falls_with_detector_side(side in 5e-6f64..500e-6, grow in 1.001f64..4.0) {
        let a = PinPhotodetector::silicon(side).unwrap().optimal_bandwidth().unwrap();
        let b = PinPhotodetector::silicon(side * grow).unwrap().optimal_bandwidth().unwrap();
        prop_assert!(b < a);
        prop_assert!((a * side - b * side * grow).abs() <= 1e-9 * a * side);
    }

    #[test]
    fn q_inverse_round_trips(log_p in -12.0f64..-0.31) {
        let p = 10f64.powf(log_p);
        let x = q_inverse(p).unwrap();
        prop_assert!(((q_function(x) - p) / p).abs() < 1e-10);
    }

    #[test]
    fn mrc_dominates_egc(powers in proptest::collection::vec(0.0f64..1e-5, 1..50)) {
        let m = mrc_snr_exact(&powers, 0.5, 1e-12);
        let e = egc_snr_exact(&powers, 0.5, 1e-12);
        prop_assert!(m >= e * (1.0 - 1e-12));
    }

    #[test]
    fn defocus_inverts_spot_side(x in 2e-6f64..900e-6) {
        let m = BeamSpotModel::new(1e-6, 0.69, 820e-6, 0.5).unwrap();
        let l = m.distance_for_side(x);
        prop_assert!((m.spot_side(l) - x).abs() <= 1e-9 * x);
    }

    #[test]
    fn tangent_fov_is_decreasing_and_invertible(a in 0.0f64..800e-6, b in 0.0f64..800e-6) {
        let lens = LensSpec::thorlabs_354140b();
        let fov = FovModel::tangent(400e-6, &lens).unwrap();
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assume!(hi - lo > 1e-9);
        prop_assert!(fov.fov_deg(lo).unwrap() > fov.fov_deg(hi).unwrap());
        let target = fov.fov_deg(hi).unwrap();
        let l = fov.max_distance(target, 1.0).unwrap();
        prop_assert!((l - hi).abs() < 1e-12);
    }

    #[test]
    fn cubic_fov_is_decreasing_and_invertible(lo in 10.0f64..40.0, hi in 10.0f64..40.0) {
        let fov = FovModel::cubic(FovModel::PUBLISHED_CUBIC).unwrap();
        let (a, b) = if lo < hi { (lo, hi) } else { (hi, lo) };
        prop_assume!(b - a > 1e-6);
        let (Ok(la), Ok(lb)) = (fov.max_distance(a, 1.0), fov.max_distance(b, 1.0)) else {
            // Past the fit's zero crossing no distance provides the FOV.
            prop_assert!(fov.max_distance(b, 1.0).is_err());
            return Ok(());
        };
        prop_assert!(la > lb);
        prop_assert!((fov.fov_deg(la).unwrap() - a).abs() < 1e-6);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// No node of a coarse sweep beats the closed-form optimum.
    #[test]
    fn closed_form_beats_every_feasible_node(seed in any::<u64>(), ofdm in any::<bool>()) {
        let base = DesignConfig::headline_ook().resolve().unwrap().template;
        let modulation = if ofdm { Modulation::dco_ofdm(512).unwrap() } else { Modulation::Ook };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let problem = match random_problem(&mut rng, &base, modulation) {
            Ok(p) => p,
            Err(rxdesign::Error::InfeasibleFov { .. }) => return Ok(()),
            Err(e) => panic!("{e}"),
        };
        let solution = problem.solve().unwrap();
        let best = solution.rate();
        for d in linspace(problem.d_min, problem.d_max.max(problem.d_min), 60) {
            for l in linspace(0.0, problem.l_max, 60) {
                let node = problem.evaluate(d, l);
                if node.satisfies_all {
                    prop_assert!(solution.feasible);
                    prop_assert!(node.rate <= best * (1.0 + 1e-9), "node {node:?} beats {best}");
                }
            }
        }
    }

    #[test]
    fn config_round_trip(n_a in square_count(), fov in 5.0f64..30.0, eps in 5.0f64..15.0, ofdm in any::<bool>()) {
        let mut cfg = if ofdm { DesignConfig::headline_ofdm() } else { DesignConfig::headline_ook() };
        cfg.receiver.n_a = Some(n_a);
        cfg.constraints.fov_req_deg = fov;
        cfg.pd.eps_r = eps;
        let again = DesignConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        prop_assert_eq!(cfg, again);
    }
}
