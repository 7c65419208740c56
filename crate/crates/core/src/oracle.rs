//! Brute-force checks of the analytical results: a grid search over
//! `(d, L)` and Monte-Carlo averaging of the exact geometric SNR.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{positive, Error, Result};
use crate::geometry::{regime_of, BeamFootprint, InnerArray, Regime};
use crate::optimizer::{feasible_region, NodeEval, Problem};
use crate::snr::{egc_snr_exact, mrc_snr_exact, SnrContext};

pub const MIN_GRID_STEPS: usize = 50;
pub const MIN_MC_SAMPLES: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    pub d_steps: usize,
    pub l_steps: usize,
}

impl GridSpec {
    pub fn new(d_steps: usize, l_steps: usize) -> Result<Self> {
        if d_steps < MIN_GRID_STEPS || l_steps < MIN_GRID_STEPS {
            return Err(Error::domain(
                "grid",
                format!("needs at least {MIN_GRID_STEPS} steps per axis, got {d_steps}x{l_steps}"),
            ));
        }
        Ok(Self { d_steps, l_steps })
    }
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { d_steps: 400, l_steps: 400 }
    }
}

pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let step = (hi - lo) / (n - 1) as f64;
    (0..n).map(|i| if i == n - 1 { hi } else { lo + step * i as f64 }).collect()
}

/// Grid nodes of the search: `d` across `[d_min, d_max]`, `L` across
/// `[0, f_b]` plus `L_max` itself so the best corner is always sampled.
pub fn grid_nodes(problem: &Problem, grid: GridSpec) -> (Vec<f64>, Vec<f64>) {
    let d = linspace(problem.d_min, problem.d_max, grid.d_steps);
    let mut l = linspace(0.0, problem.back_focal_length(), grid.l_steps);
    if !l.contains(&problem.l_max) {
        l.push(problem.l_max);
        l.sort_by(f64::total_cmp);
    }
    (d, l)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    /// Fastest node meeting every constraint, if any.
    pub best: Option<NodeEval>,
    pub feasible_nodes: usize,
    pub total_nodes: usize,
    /// Largest `d` spacing, the resolution of the search in `d`.
    pub d_step: f64,
}

/// Exhaustive search with the optimizer's own predicates.
pub fn grid_search(problem: &Problem, grid: GridSpec) -> GridResult {
    if problem.d_min > problem.d_max {
        return GridResult { best: None, feasible_nodes: 0, total_nodes: 0, d_step: 0.0 };
    }
    let (d, l) = grid_nodes(problem, grid);
    grid_search_with(problem, &d, &l, |n| n.satisfies_all)
}

/// Search over explicit nodes with a caller-supplied acceptance predicate.
pub fn grid_search_with(
    problem: &Problem,
    d_nodes: &[f64],
    l_nodes: &[f64],
    accept: impl Fn(&NodeEval) -> bool,
) -> GridResult {
    let cells = feasible_region(problem, d_nodes, l_nodes);
    let mut best: Option<NodeEval> = None;
    let mut feasible_nodes = 0;
    for c in cells.iter().filter(|c| accept(c)) {
        feasible_nodes += 1;
        if best.is_none_or(|b| c.rate > b.rate) {
            best = Some(*c);
        }
    }
    let d_step = d_nodes.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    GridResult { best, feasible_nodes, total_nodes: cells.len(), d_step }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct McSpec {
    pub samples: usize,
    pub seed: u64,
}

impl McSpec {
    pub fn new(samples: usize, seed: u64) -> Result<Self> {
        if samples < MIN_MC_SAMPLES {
            return Err(Error::domain(
                "Monte-Carlo samples",
                format!("needs at least {MIN_MC_SAMPLES}, got {samples}"),
            ));
        }
        Ok(Self { samples, seed })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
}

impl McEstimate {
    fn from_samples(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = pairwise_sum(values) / n;
        let sq: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
        let var = if values.len() > 1 { pairwise_sum(&sq) / (n - 1.0) } else { 0.0 };
        Self { mean, std_error: (var / n).sqrt(), samples: values.len() }
    }
}

fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 64 {
        return v.iter().sum();
    }
    let (a, b) = v.split_at(v.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

/// Two uniform variates for sample `index`, independent of evaluation order.
fn sample_uniforms(seed: u64, index: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    (rng.gen::<f64>(), rng.gen::<f64>())
}

/// Spot centre for one tilt sample: uniform over the positions that keep
/// the whole spot on the array, or the array centre if none do.
pub fn spot_center(array_side: f64, radius: f64, u: (f64, f64)) -> (f64, f64) {
    let h = (array_side / 2.0 - radius).max(0.0);
    (h * (2.0 * u.0 - 1.0), h * (2.0 * u.1 - 1.0))
}

fn monte_carlo(mc: McSpec, f: impl Fn((f64, f64)) -> f64 + Sync) -> McEstimate {
    let values: Vec<f64> =
        (0..mc.samples as u64).into_par_iter().map(|i| f(sample_uniforms(mc.seed, i))).collect();
    McEstimate::from_samples(&values)
}

/// Mean of `Σ 𝒜ᵢ²` (m⁴) over tilt samples. Intended for the intermediate
/// regime; see [`mc_sum_ai_squared_any`] for other spot sizes.
pub fn mc_sum_ai_squared(inner: &InnerArray, w2: f64, mc: McSpec) -> Result<McEstimate> {
    let regime = regime_of(inner.pd_side, inner.side, w2);
    if regime != Regime::Intermediate {
        return Err(Error::domain("spot radius", format!("{w2} m puts the array in the {regime} regime")));
    }
    mc_sum_ai_squared_any(inner, w2, mc)
}

/// [`mc_sum_ai_squared`] without the regime precondition.
pub fn mc_sum_ai_squared_any(inner: &InnerArray, w2: f64, mc: McSpec) -> Result<McEstimate> {
    positive("spot radius", w2)?;
    Ok(monte_carlo(mc, |u| {
        let fp = BeamFootprint { center: spot_center(inner.side, w2, u), radius: w2 };
        let mut acc = 0.0;
        inner.for_each_overlap(&fp, |_, a| acc += a * a);
        acc
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Combiner {
    Mrc,
    Egc,
}

/// Receiver SNR averaged over tilt samples, using exact overlaps for each
/// placement. Includes the outer-array gain so it compares directly with
/// [`SnrContext::avg_mrc_snr`].
pub fn mc_average_snr(ctx: &SnrContext, d: f64, w2: f64, combiner: Combiner, mc: McSpec) -> Result<McEstimate> {
    positive("spot radius", w2)?;
    let inner = InnerArray::new(ctx.n_pd, ctx.array_side, d)?;
    let sigma2 = ctx.noise_variance(d);
    let gain = ctx.outer_gain();
    let scale = ctx.xi * ctx.lens_power / (std::f64::consts::PI * w2 * w2);
    let r = ctx.pd.responsivity;
    Ok(monte_carlo(mc, |u| {
        let fp = BeamFootprint { center: spot_center(inner.side, w2, u), radius: w2 };
        let powers: Vec<f64> = inner.overlap_areas(&fp).into_iter().map(|a| a * scale).collect();
        gain * match combiner {
            Combiner::Mrc => mrc_snr_exact(&powers, r, sigma2),
            Combiner::Egc => egc_snr_exact(&powers, r, sigma2),
        }
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeded_samples_are_reproducible() {
        assert_eq!(sample_uniforms(7, 123), sample_uniforms(7, 123));
        assert_ne!(sample_uniforms(7, 123), sample_uniforms(7, 124));
        assert_ne!(sample_uniforms(7, 123), sample_uniforms(8, 123));
    }

    #[test]
    fn pairwise_sum_matches_naive_on_integers() {
        let v: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&v), 499_500.0);
    }

    #[test]
    fn spot_centre_stays_on_array() {
        let (x, y) = spot_center(400.0, 150.0, (0.0, 1.0));
        assert_eq!((x, y), (-50.0, 50.0));
        assert_eq!(spot_center(400.0, 300.0, (0.1, 0.9)), (0.0, 0.0));
    }

    #[test]
    fn specs_reject_small_sizes() {
        assert!(GridSpec::new(49, 400).is_err());
        assert!(McSpec::new(9_999, 1).is_err());
        assert_eq!(linspace(0.0, 1.0, 5), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    }
}
