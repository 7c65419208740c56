use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rxdesign::config::DesignConfig;
use rxdesign::geometry::{disc_square_overlap, max_pd_side, BeamFootprint, InnerArray, Regime};
use rxdesign::modulation::Modulation;
use rxdesign::optimizer::{feasible_region, Enumeration, Problem, SolutionCase, Trend};
use rxdesign::oracle::{grid_search, linspace, mc_average_snr, mc_sum_ai_squared, Combiner, GridSpec, McSpec};
use rxdesign::snr::OuterCombining;
use rxdesign::validation::random_problem;

fn headline_problem(cfg: &DesignConfig, n_pd: u32, n_a: u32) -> Problem {
    let r = cfg.resolve().unwrap();
    Problem::new(r.template.build(n_pd, n_a).unwrap(), &r.constraints, r.modulation).unwrap()
}

/// Golden-section maximiser for a unimodal function.
fn argmax(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..300 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if f(c) > f(d) {
            b = d;
        } else {
            a = c;
        }
    }
    0.5 * (a + b)
}

#[test]
fn disc_overlap_matches_rejection_sampling() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let cases: Vec<(f64, f64, f64, f64)> = (0..100)
        .map(|_| (rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5), rng.gen_range(0.05..1.5), rng.gen_range(0.1..2.0)))
        .collect();
    cases.par_iter().enumerate().for_each(|(k, &(cx, cy, r, s))| {
        // Sample the intersection of the disc's and the square's bounding boxes.
        let (x0, x1) = ((cx - r).max(-s / 2.0), (cx + r).min(s / 2.0));
        let (y0, y1) = ((cy - r).max(-s / 2.0), (cy + r).min(s / 2.0));
        let exact = disc_square_overlap(&BeamFootprint::new((cx, cy), r).unwrap(), (0.0, 0.0), s);
        if x1 <= x0 || y1 <= y0 {
            assert_eq!(exact, 0.0);
            return;
        }
        let box_area = (x1 - x0) * (y1 - y0);
        let mut local = ChaCha8Rng::seed_from_u64(1000 + k as u64);
        let n = 1_000_000;
        let hits = (0..n)
            .filter(|_| {
                let x = local.gen_range(x0..x1);
                let y = local.gen_range(y0..y1);
                (x - cx).powi(2) + (y - cy).powi(2) <= r * r
            })
            .count();
        let estimate = box_area * hits as f64 / n as f64;
        assert!(
            (estimate - exact).abs() <= 0.002 * box_area,
            "case {k}: exact {exact}, sampled {estimate}, box {box_area}"
        );
    });
}

#[test]
fn closed_form_extrema_maximise_the_rate() {
    let p = headline_problem(&DesignConfig::headline_ofdm(), 36, 64);
    let cs = p.critical_sides();
    let rate_small = |d: f64| p.rate(d, p.ax.branch(Regime::SmallSpot, d, 1e-9));
    let found = argmax(rate_small, 1e-7, 1e-2);
    assert!((found / cs.d_star - 1.0).abs() < 1e-6, "{found} vs {}", cs.d_star);

    let l = 0.5 * p.l_max;
    let w = p.design.spot.radius_unchecked(l);
    let rate_mid = |d: f64| p.rate(d, p.ax.branch(Regime::Intermediate, d, w));
    let found = argmax(rate_mid, 1e-7, 1e-2);
    assert!((found / cs.d_2star(l) - 1.0).abs() < 1e-6);

    let rate_large = |d: f64| p.rate(d, p.ax.branch(Regime::LargeSpot, d, w));
    let found = argmax(rate_large, 1e-7, 1e-2);
    assert!((found / cs.d_3star(l) - 1.0).abs() < 1e-6);
}

#[test]
fn headline_configurations_agree_with_the_grid() {
    for (cfg, n_pd) in [(DesignConfig::headline_ook(), 49), (DesignConfig::headline_ofdm(), 36)] {
        let p = headline_problem(&cfg, n_pd, 64);
        let closed = p.solve().unwrap().optimum.unwrap();
        let grid = grid_search(&p, GridSpec::default());
        let node = grid.best.unwrap();
        assert!(closed.rate >= node.rate * (1.0 - 2.0 * grid.d_step / node.d));
        assert!(node.rate <= closed.rate * (1.0 + 1e-9));
        assert!((node.rate / closed.rate - 1.0).abs() < 0.01, "{} vs {}", node.rate, closed.rate);
    }
}

#[test]
fn ofdm_large_spot_region_is_empty_for_the_headline_receiver() {
    let p = headline_problem(&DesignConfig::headline_ofdm(), 36, 64);
    let nodes = feasible_region(&p, &linspace(p.d_min, p.d_max, 200), &linspace(0.0, p.back_focal_length(), 200));
    assert!(nodes.iter().any(|n| n.satisfies_all));
    assert!(!nodes.iter().any(|n| n.regime == Regime::LargeSpot && n.satisfies_all));
}

#[test]
fn zero_threshold_grid_is_feasible_everywhere_in_bounds() {
    let mut cfg = DesignConfig::headline_ook();
    cfg.constraints.snr_req_override = Some(0.0);
    let p = headline_problem(&cfg, 49, 64);
    let nodes = feasible_region(&p, &linspace(p.d_min, p.d_max, 50), &linspace(0.0, p.l_max, 50));
    assert!(nodes.iter().all(|n| n.satisfies_all));
}

#[test]
fn zero_threshold_ook_sits_on_the_small_spot_edge() {
    let mut cfg = DesignConfig::headline_ook();
    cfg.constraints.snr_req_override = Some(0.0);
    let p = headline_problem(&cfg, 49, 64);
    let edge = p.design.spot.spot_side(p.l_max);
    let expected = p.d_min.max(edge);
    assert!(expected <= p.d_max);
    let opt = p.solve().unwrap().optimum.unwrap();
    assert_eq!(opt.case, SolutionCase::OokSmallSpot);
    assert!((opt.d - expected).abs() < 1e-15);
}

#[test]
fn unreachable_fov_is_reported_first() {
    let mut cfg = DesignConfig::headline_ook();
    cfg.constraints.fov_req_deg = 89.0;
    let r = cfg.resolve().unwrap();
    let g = rxdesign::optimizer::solve_global(&r.template, &r.constraints, r.modulation, &r.enumeration).unwrap();
    assert!(!g.best.feasible);
    assert!(matches!(g.best.infeasibility, Some(rxdesign::optimizer::Infeasibility::FieldOfView { .. })));
}

#[test]
fn intermediate_ofdm_optimum_dominates_the_clamped_peak() {
    let base = DesignConfig::headline_ook().resolve().unwrap().template;
    let m = Modulation::dco_ofdm(512).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut checked = 0;
    for _ in 0..4000 {
        let Ok(p) = random_problem(&mut rng, &base, m) else { continue };
        let cs = p.critical_sides();
        let l = p.l_max;
        let lo = p.d_min.max(cs.d_lambda(l));
        let hi = p.d_max.min(p.design.spot.spot_side(l));
        if lo > hi || p.design.spot.spot_side(l) > p.array_side() {
            continue;
        }
        let d = cs.d_2star(l).clamp(lo, hi);
        let node = p.evaluate(d, l);
        let w = p.design.spot.radius_unchecked(l);
        let on_branch = p.rate(d, p.ax.branch(Regime::Intermediate, d, w));
        let solution = p.solve().unwrap();
        assert!(solution.feasible);
        assert!(solution.rate() >= on_branch * (1.0 - 1e-9), "{} < {}", solution.rate(), on_branch);
        assert!(solution.rate() >= node.rate * (1.0 - 1e-9));
        checked += 1;
    }
    assert!(checked >= 20, "only {checked} intermediate cases");
}

#[test]
fn ofdm_interior_peak_is_selected_when_it_fits() {
    // A low threshold with a wide detector range puts the small-spot
    // peak inside the admissible interval.
    let mut cfg = DesignConfig::headline_ofdm();
    cfg.array.ff_target = 1.0;
    cfg.array.d_min_um = 1.0;
    cfg.models.p_r_lns_override_w = Some(1e-3);
    let p = headline_problem(&cfg, 1, 64);
    let opt = p.solve().unwrap().optimum.unwrap();
    let cs = p.critical_sides();
    assert_eq!(opt.case, SolutionCase::OfdmSmallSpot { trend: Trend::Interior });
    assert!((opt.d - cs.d_star).abs() < 1e-15);
}

#[test]
fn linear_combining_reproduces_minimum_lens_counts() {
    for (modulation, min_n_a, rate) in
        [(Modulation::Ook, 9, 3.38e9), (Modulation::dco_ofdm(512).unwrap(), 16, 4.30e9)]
    {
        let mut cfg = DesignConfig::headline_ook();
        cfg.models.p_r_lns_override_w = None;
        cfg.models.outer_combining = OuterCombining::Linear;
        cfg.transmitter.power_mw = 19.54;
        let r = cfg.resolve().unwrap();
        let e = Enumeration::new(vec![1], Enumeration::squares_up_to(100)).unwrap();
        let g = rxdesign::optimizer::solve_global(&r.template, &r.constraints, modulation, &e).unwrap();
        let first = g.configurations.iter().find(|c| c.feasible).unwrap();
        assert_eq!(first.n_a, min_n_a, "{}", modulation.name());
        assert!((first.rate() / rate - 1.0).abs() < 5e-3, "{}", first.rate());
    }
}

#[test]
fn monte_carlo_is_deterministic_per_seed() {
    let inner = InnerArray::new(64, 400e-6, 40e-6).unwrap();
    let a = mc_sum_ai_squared(&inner, 145e-6, McSpec::new(20_000, 3).unwrap()).unwrap();
    let b = mc_sum_ai_squared(&inner, 145e-6, McSpec::new(20_000, 3).unwrap()).unwrap();
    let c = mc_sum_ai_squared(&inner, 145e-6, McSpec::new(20_000, 4).unwrap()).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.mean, c.mean);
    assert!(McSpec::new(9_999, 0).is_err());
}

#[test]
fn narrow_spot_overlap_ratio_is_below_the_approximation() {
    // W = 2.5 d is outside the approximation's useful range.
    let inner = InnerArray::new(64, 400e-6, 40e-6).unwrap();
    let w = 100e-6;
    let est = mc_sum_ai_squared(&inner, w, McSpec::new(100_000, 11).unwrap()).unwrap();
    let ratio = est.mean / (PI * w * w * inner.fill_factor() * 40e-6 * 40e-6);
    assert!((ratio - 0.866).abs() < 0.01 + 3.0 * est.std_error / est.mean, "{ratio}");
}

#[test]
fn averaged_snr_matches_sampling_in_the_intermediate_regime() {
    let r = DesignConfig::headline_ook().resolve().unwrap();
    let ctx = r.template.build(64, 64).unwrap().snr;
    let d = max_pd_side(64, 400e-6, 0.64);
    let w = 150e-6;
    let mc = mc_average_snr(&ctx, d, w, Combiner::Mrc, McSpec::new(50_000, 5).unwrap()).unwrap();
    let analytic = ctx.avg_mrc_snr(d, w);
    assert!((mc.mean / analytic - 1.0).abs() < 0.1 + 3.0 * mc.std_error / mc.mean);
    let egc = mc_average_snr(&ctx, d, w, Combiner::Egc, McSpec::new(50_000, 5).unwrap()).unwrap();
    assert!(egc.mean <= mc.mean);
}
