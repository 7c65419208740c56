//! Acceptance battery: fourteen checks tying the implementation to the
//! published design figures and to the brute-force oracles.
//!
//! Checks read detector, amplifier, lens and receiver parameters from a
//! [`DesignConfig`], so a perturbed configuration makes the affected checks
//! fail.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::DesignConfig;
use crate::error::Result;
use crate::geometry::{max_pd_side, per_pd_power, BeamFootprint, InnerArray, Regime};
use crate::modulation::{rate_ofdm, rate_ook, snr_gap, snr_required, BerTarget, Modulation};
use crate::optics::{BeamSpotModel, FovModel};
use crate::optimizer::{
    extremum_constants, solve_global, CollectedPower, DesignConstraints, Problem, ReceiverTemplate,
};
use crate::oracle::{grid_search, mc_sum_ai_squared, GridSpec, McSpec};
use crate::pd::PinPhotodetector;
use crate::snr::{egc_snr_exact, mrc_egc_gain_db, mrc_snr_exact, OuterCombining, SnrContext};

pub const CRITERIA: u8 = 14;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub id: u8,
    pub name: String,
    pub expected: String,
    pub actual: String,
    pub tolerance: String,
    pub passed: bool,
}

impl std::fmt::Display for CheckResult {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "[{}] criterion {:2} {}: expected {}; actual {}; tolerance {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.expected,
            self.actual,
            self.tolerance
        )
    }
}

fn check(id: u8, name: &str, expected: String, actual: String, tolerance: &str, passed: bool) -> CheckResult {
    CheckResult { id, name: name.into(), expected, actual, tolerance: tolerance.into(), passed }
}

fn rel_err(actual: f64, expected: f64) -> f64 {
    ((actual - expected) / expected).abs()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BatteryOptions {
    pub seed: u64,
    pub mc_samples: usize,
    pub random_configs: usize,
    pub grid: GridSpec,
}

impl Default for BatteryOptions {
    fn default() -> Self {
        Self { seed: 0x5eed_2024, mc_samples: 100_000, random_configs: 50, grid: GridSpec::default() }
    }
}

pub fn run_all(cfg: &DesignConfig, opts: &BatteryOptions) -> Vec<CheckResult> {
    (1..=CRITERIA).map(|id| run(id, cfg, opts)).collect()
}

/// Runs one criterion. Model errors are reported as failures.
pub fn run(id: u8, cfg: &DesignConfig, opts: &BatteryOptions) -> CheckResult {
    let outcome = match id {
        1 => bandwidth_calibration(cfg),
        2 => ook_rate_identity(cfg),
        3 => defocus_range(cfg),
        4 => spot_slope(cfg),
        5 => threshold_constants(),
        6 => extremum_roots(),
        7 => ofdm_rate_identity(),
        8 => geometry_limits(cfg),
        9 => tangent_fov(cfg),
        10 => combiner_properties(cfg, opts),
        11 => piecewise_continuity(cfg, opts),
        12 => overlap_approximation(opts),
        13 => oracle_equivalence(cfg, opts),
        14 => tradeoff_monotonicity(cfg),
        _ => return check(id, "unknown", "-".into(), "-".into(), "-", false),
    };
    outcome.unwrap_or_else(|e| check(id, "model error", "no error".into(), e.to_string(), "-", false))
}

fn detector(cfg: &DesignConfig, side: f64) -> Result<PinPhotodetector> {
    cfg.photodetector()?.with_side(side)
}

fn bandwidth_calibration(cfg: &DesignConfig) -> Result<CheckResult> {
    let b1 = detector(cfg, 44.81e-6)?.optimal_bandwidth()?;
    let b2 = detector(cfg, 53.33e-6)?.optimal_bandwidth()?;
    let ok = rel_err(b1, 11.91e9) <= 5e-3 && rel_err(b2, 10.00e9) <= 5e-3;
    Ok(check(
        1,
        "bandwidth calibration",
        "B(44.81 um) = 11.91 GHz, B(53.33 um) = 10.00 GHz".into(),
        format!("{:.4} GHz, {:.4} GHz", b1 * 1e-9, b2 * 1e-9),
        "0.5 %",
        ok,
    ))
}

fn ook_rate_identity(cfg: &DesignConfig) -> Result<CheckResult> {
    let r = rate_ook(detector(cfg, 44.81e-6)?.optimal_bandwidth()?);
    Ok(check(
        2,
        "OOK rate identity",
        "23.82 Gbps".into(),
        format!("{:.4} Gbps", r * 1e-9),
        "0.5 %",
        rel_err(r, 23.82e9) <= 5e-3,
    ))
}

fn defocus_range(cfg: &DesignConfig) -> Result<CheckResult> {
    let m = BeamSpotModel::new(1e-6, 0.69, cfg.lens.f_b_mm * 1e-3, cfg.lens.eta)?;
    let a = m.defocus_for_spot(44.81e-6);
    let b = m.defocus_for_spot(53.33e-6);
    let ok = a.clamped.is_none()
        && b.clamped.is_none()
        && (a.distance - 785e-6).abs() <= 1e-6
        && (b.distance - 778e-6).abs() <= 1e-6;
    Ok(check(
        3,
        "defocus range",
        "L(44.81 um) = 785 um, L(53.33 um) = 778 um".into(),
        format!("{:.2} um, {:.2} um", a.distance * 1e6, b.distance * 1e6),
        "1 um",
        ok,
    ))
}

fn spot_slope(cfg: &DesignConfig) -> Result<CheckResult> {
    let m = BeamSpotModel::from_lens(&cfg.lens_spec()?, 0.5)?;
    Ok(check(4, "beam-spot slope", "b1 = 0.69".into(), format!("{:.4}", m.b1), "0.01", (m.b1 - 0.69).abs() <= 0.01))
}

fn threshold_constants() -> Result<CheckResult> {
    let ber = BerTarget::new(1e-3)?;
    let ook = snr_required(Modulation::Ook, ber)?;
    let gap = snr_gap(ber)?;
    let ofdm = snr_required(Modulation::dco_ofdm(512)?, ber)?;
    let ok = (ook - 9.549).abs() <= 0.01 && (gap - 3.532).abs() <= 0.005 && (ofdm - 10.60).abs() <= 0.05;
    Ok(check(
        5,
        "threshold constants",
        "gamma_ook = 9.549, Gamma = 3.532, 3 Gamma = 10.60".into(),
        format!("{ook:.4}, {gap:.4}, {ofdm:.4}"),
        "0.01, 0.005, 0.05",
        ok,
    ))
}

fn extremum_roots() -> Result<CheckResult> {
    let (x3, x5) = extremum_constants();
    Ok(check(
        6,
        "extremum constants",
        "x3 = 15.80, x5 = 142.32".into(),
        format!("{x3:.4}, {x5:.4}"),
        "0.02, 0.10",
        (x3 - 15.80).abs() <= 0.02 && (x5 - 142.32).abs() <= 0.10,
    ))
}

fn ofdm_rate_identity() -> Result<CheckResult> {
    let r = rate_ofdm(10e9, 11.85, 512, snr_gap(BerTarget::new(1e-3)?)?);
    Ok(check(
        7,
        "DCO-OFDM rate identity",
        "21.14 Gbps".into(),
        format!("{:.4} Gbps", r * 1e-9),
        "0.5 %",
        rel_err(r, 21.14e9) <= 5e-3,
    ))
}

fn geometry_limits(cfg: &DesignConfig) -> Result<CheckResult> {
    let side = cfg.array.d_um * 1e-6;
    let d49 = max_pd_side(49, side, cfg.array.ff_target);
    let d36 = max_pd_side(36, side, cfg.array.ff_target);
    let round = |v: f64| (v * 1e8).round() / 100.0;
    Ok(check(
        8,
        "geometry limits",
        "d_max(49) = 45.71 um, d_max(36) = 53.33 um".into(),
        format!("{:.6} um, {:.6} um", d49 * 1e6, d36 * 1e6),
        "exact to the quoted 0.01 um",
        round(d49) == 45.71 && round(d36) == 53.33,
    ))
}

fn tangent_fov(cfg: &DesignConfig) -> Result<CheckResult> {
    let lens = cfg.lens_spec()?;
    let fov = FovModel::tangent(cfg.array.d_um * 1e-6, &lens)?;
    let at_820 = fov.fov_deg(820e-6)?;
    let at_785 = fov.fov_deg(785e-6)?;
    let l_max = fov.max_distance(15.0, lens.back_focal_length)?;
    let ok = (at_820 - 15.7).abs() <= 0.1 && (at_785 - 16.1).abs() <= 0.2 && (l_max - 820e-6).abs() <= 1e-12;
    Ok(check(
        9,
        "tangent FOV model",
        "FOV(820 um) = 15.7 deg, FOV(785 um) = 16.1 deg, L_max(15 deg) = 820 um".into(),
        format!("{at_820:.3} deg, {at_785:.3} deg, {:.3} um", l_max * 1e6),
        "0.1 deg, 0.2 deg, clamp exact",
        ok,
    ))
}

fn random_context(rng: &mut ChaCha8Rng, cfg: &DesignConfig) -> Result<(SnrContext, f64)> {
    let n_pd = rng.gen_range(1u32..=12).pow(2);
    let side = rng.gen_range(100e-6..800e-6);
    let ff = rng.gen_range(0.05..1.0);
    let d = max_pd_side(n_pd, side, ff);
    let ctx = SnrContext::new(
        cfg.photodetector()?,
        cfg.tia()?,
        n_pd,
        side,
        rng.gen_range(1u32..=12).pow(2),
        rng.gen_range(0.01..0.9),
        10f64.powf(rng.gen_range(-7.0..-3.0)),
        OuterCombining::Sqrt,
    )?;
    Ok((ctx, d))
}

fn combiner_properties(cfg: &DesignConfig, opts: &BatteryOptions) -> Result<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let sigma2 = 1e-12;
    let r = cfg.pd.responsivity;
    let mut worst_identity = 0.0f64;
    let mut violations = 0;
    let mut unequal_ties = 0;
    for _ in 0..1000 {
        let n_pd = rng.gen_range(1u32..=10).pow(2);
        let side = 400e-6;
        let d = max_pd_side(n_pd, side, rng.gen_range(0.1..1.0));
        let inner = InnerArray::new(n_pd, side, d)?;
        let w = rng.gen_range(0.02..1.5) * side;
        let c = (rng.gen_range(-0.6..0.6) * side, rng.gen_range(-0.6..0.6) * side);
        let p = per_pd_power(&inner, &BeamFootprint::new(c, w)?, 1e-5, 0.2);
        let mrc = mrc_snr_exact(&p, r, sigma2);
        let egc = egc_snr_exact(&p, r, sigma2);
        // MRC − EGC equals the pairwise spread of the branch currents.
        let mut spread = 0.0;
        for i in 0..p.len() {
            for j in i + 1..p.len() {
                spread += (r * (p[i] - p[j])).powi(2);
            }
        }
        spread /= p.len() as f64 * sigma2;
        if mrc < egc - 1e-12 * mrc.abs() {
            violations += 1;
        }
        if mrc > 0.0 {
            worst_identity = worst_identity.max(((mrc - egc) - spread).abs() / mrc);
        }
        let equal = p.iter().all(|v| *v == p[0]);
        if !equal && spread == 0.0 {
            unequal_ties += 1;
        }
    }
    let mut equal_gap = 0.0f64;
    for n in [1usize, 4, 9, 49, 100] {
        let p = vec![rng.gen_range(1e-7..1e-5); n];
        let (m, e) = (mrc_snr_exact(&p, r, sigma2), egc_snr_exact(&p, r, sigma2));
        equal_gap = equal_gap.max(rel_err(e, m));
    }
    let mut worst_gain = 0.0f64;
    for _ in 0..100 {
        let (ctx, d) = random_context(&mut rng, cfg)?;
        let w = d / PI.sqrt() * rng.gen_range(0.01..1.0);
        let g = 10.0 * (ctx.avg_mrc_snr(d, w) / ctx.avg_egc_snr(d, w)).log10();
        worst_gain = worst_gain.max((g - mrc_egc_gain_db(ctx.n_pd)).abs());
    }
    let ok = violations == 0 && unequal_ties == 0 && worst_identity < 1e-9 && equal_gap < 1e-12 && worst_gain < 1e-9;
    Ok(check(
        10,
        "combiner properties",
        "MRC >= EGC on 1000 placements, equality only for equal powers; small-spot gain = 10 log10 N_PD".into(),
        format!(
            "{violations} violations, {unequal_ties} unequal ties, identity residual {worst_identity:.1e}, \
             equal-power gap {equal_gap:.1e}, gain error {worst_gain:.1e} dB"
        ),
        "exact (1e-9 rounding)",
        ok,
    ))
}

fn piecewise_continuity(cfg: &DesignConfig, opts: &BatteryOptions) -> Result<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x11);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let (ctx, d) = random_context(&mut rng, cfg)?;
        let small = d / PI.sqrt();
        let large = ctx.array_side / PI.sqrt();
        let a = ctx.avg_mrc_branch(Regime::SmallSpot, d, small);
        let b = ctx.avg_mrc_branch(Regime::Intermediate, d, small);
        let c = ctx.avg_mrc_branch(Regime::Intermediate, d, large);
        let e = ctx.avg_mrc_branch(Regime::LargeSpot, d, large);
        worst = worst.max(rel_err(b, a)).max(rel_err(e, c));
    }
    Ok(check(
        11,
        "piecewise continuity",
        "branches agree at both regime boundaries".into(),
        format!("worst relative gap {worst:.2e}"),
        "1e-12",
        worst <= 1e-12,
    ))
}

/// Intermediate-spot layouts (N_PD, d, W₂) on a 400 µm array with the spot
/// at least 3.5 detector sides wide and at least one cell pitch clear of the
/// array edge.
pub const OVERLAP_CASES: [(u32, f64, f64); 10] = [
    (64, 40e-6, 145e-6),
    (81, 35e-6, 140e-6),
    (100, 32e-6, 130e-6),
    (100, 30e-6, 150e-6),
    (121, 29e-6, 120e-6),
    (144, 26e-6, 110e-6),
    (144, 25e-6, 150e-6),
    (64, 30e-6, 120e-6),
    (81, 25e-6, 110e-6),
    (100, 20e-6, 100e-6),
];

fn overlap_approximation(opts: &BatteryOptions) -> Result<CheckResult> {
    let mut worst = 0.0f64;
    let mut failures = Vec::new();
    for (k, (n, d, w)) in OVERLAP_CASES.iter().enumerate() {
        let inner = InnerArray::new(*n, 400e-6, *d)?;
        let est = mc_sum_ai_squared(&inner, *w, McSpec::new(opts.mc_samples, opts.seed + k as u64)?)?;
        let analytic = PI * w * w * inner.fill_factor() * d * d;
        let band = 0.10 * analytic + 3.0 * est.std_error;
        let dev = (est.mean - analytic).abs();
        worst = worst.max(dev / analytic);
        if dev > band {
            failures.push(format!("N={n} d={:.0}um W={:.0}um ratio {:.3}", d * 1e6, w * 1e6, est.mean / analytic));
        }
    }
    Ok(check(
        12,
        "overlap approximation",
        format!("E[sum A_i^2] = pi W^2 FF d^2 on {} intermediate layouts", OVERLAP_CASES.len()),
        if failures.is_empty() {
            format!("worst relative deviation {worst:.3}")
        } else {
            format!("outside band: {}", failures.join("; "))
        },
        "10 % + 3 sigma",
        failures.is_empty(),
    ))
}

/// A random receiver and constraint set spanning all three regimes and both
/// feasible and infeasible outcomes.
pub fn random_problem(rng: &mut ChaCha8Rng, base: &ReceiverTemplate, modulation: Modulation) -> Result<Problem> {
    let side = rng.gen_range(200e-6..600e-6);
    let template = ReceiverTemplate {
        array_side: side,
        fov: FovModel::tangent(side, &base.lens)?,
        power: CollectedPower::Fixed { watts: 10f64.powf(rng.gen_range(-6.0..-3.5)) },
        ..*base
    };
    let n_pd = rng.gen_range(1u32..=10).pow(2);
    let n_a = rng.gen_range(1u32..=12).pow(2);
    let constraints = DesignConstraints {
        fov_req_deg: rng.gen_range(4.0..40.0),
        ber: BerTarget::new(10f64.powf(rng.gen_range(-6.0..-2.0)))?,
        d_min: rng.gen_range(2e-6..30e-6),
        ff_target: rng.gen_range(0.2..0.95),
        snr_req_override: None,
    };
    let design = ReceiverTemplate { power: template.power, ..template }.build(n_pd, n_a.min(100))?;
    Problem::new(design, &constraints, modulation)
}

fn oracle_equivalence(cfg: &DesignConfig, opts: &BatteryOptions) -> Result<CheckResult> {
    let base = cfg.resolve()?.template;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x13);
    let mut problems = Vec::new();
    let mut disagreements = Vec::new();
    let mut feasible = 0;
    for modulation in [Modulation::Ook, Modulation::dco_ofdm(512)?] {
        let mut made = 0;
        while made < opts.random_configs {
            let problem = match random_problem(&mut rng, &base, modulation) {
                Ok(p) => p,
                // Unreachable field of view: nothing to compare.
                Err(crate::Error::InfeasibleFov { .. }) => continue,
                Err(e) => return Err(e),
            };
            made += 1;
            problems.push(problem);
        }
    }
    for (k, problem) in problems.iter().enumerate() {
        let closed = problem.solve()?;
        let grid = grid_search(problem, opts.grid);
        match (closed.optimum, grid.best) {
            (None, None) => {}
            (Some(opt), Some(node)) => {
                feasible += 1;
                let allowance = 2.0 * grid.d_step / node.d;
                if opt.rate < node.rate * (1.0 - allowance) {
                    disagreements.push(format!(
                        "#{k} {}: closed form {:.6e} < grid {:.6e}",
                        problem.modulation.name(),
                        opt.rate,
                        node.rate
                    ));
                }
            }
            (c, g) => disagreements.push(format!(
                "#{k} {}: closed form feasible = {}, grid feasible = {}",
                problem.modulation.name(),
                c.is_some(),
                g.is_some()
            )),
        }
    }
    Ok(check(
        13,
        "oracle equivalence",
        format!("{} random configurations per scheme agree with the grid search", opts.random_configs),
        if disagreements.is_empty() {
            format!("{} configurations, {feasible} feasible, all agree", problems.len())
        } else {
            disagreements.join("; ")
        },
        "2 grid steps in d",
        disagreements.is_empty(),
    ))
}

fn tradeoff_monotonicity(cfg: &DesignConfig) -> Result<CheckResult> {
    let resolved = cfg.resolve()?;
    let mut notes = Vec::new();
    let mut ok = true;
    for modulation in [Modulation::Ook, Modulation::dco_ofdm(512)?] {
        let mut previous = f64::INFINITY;
        let mut rates = Vec::new();
        for fov in 10..=40 {
            let constraints = resolved.constraints.with_fov(fov as f64);
            let g = solve_global(&resolved.template, &constraints, modulation, &resolved.enumeration)?;
            let rate = g.best.rate();
            if rate > previous * (1.0 + 1e-12) {
                ok = false;
                notes.push(format!("{} rises at {fov} deg", modulation.name()));
            }
            previous = rate;
            rates.push(rate);
        }
        notes.push(format!(
            "{} {:.2} -> {:.2} Gbps",
            modulation.name(),
            rates[0] * 1e-9,
            rates[rates.len() - 1] * 1e-9
        ));
    }
    Ok(check(
        14,
        "rate-FOV trade-off",
        "optimised rate nonincreasing over 10..40 deg for both schemes".into(),
        notes.join(", "),
        "1e-12 relative",
        ok,
    ))
}
