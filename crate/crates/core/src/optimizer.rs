//! Closed-form receiver design: choose the detector side `d` and the
//! lens-to-array distance `L` that maximise the data rate subject to the
//! field-of-view, SNR and fill-factor constraints.
//!
//! The averaged MRC SNR is piecewise in `(d, W₂(L))` with three regimes, so
//! the problem splits into three sub-problems, one per regime. Each is solved
//! in closed form on the closure of its regime (the SNR is continuous across
//! regime boundaries), every candidate is re-evaluated with the plain
//! piecewise model, and the best survivor wins.

use std::f64::consts::PI;
use std::fmt;
use std::sync::OnceLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{positive, Error, Result};
use crate::geometry::{is_perfect_square, max_pd_side, regime_of, OuterArray, Regime};
use crate::modulation::{
    extremum_constant, rate_ofdm, rate_ook, snr_gap, snr_required, BerTarget, Modulation,
};
use crate::optics::{BeamSpotModel, FovModel, LensSpec, LinkBudget, OpticalEfficiency};
use crate::pd::{PinPhotodetector, TiaConfig};
use crate::snr::{AxConstant, OuterCombining, SnrContext};

/// Relative tolerance of every constraint check.
pub const CONSTRAINT_TOLERANCE: f64 = 1e-9;
/// Relative rate difference below which two designs count as equally fast.
pub const RATE_TIE_TOLERANCE: f64 = 1e-12;

/// `(x₃, x₅)`, computed once.
pub fn extremum_constants() -> (f64, f64) {
    static CONSTANTS: OnceLock<(f64, f64)> = OnceLock::new();
    *CONSTANTS.get_or_init(|| {
        (
            extremum_constant(3).expect("k = 3 is supported"),
            extremum_constant(5).expect("k = 5 is supported"),
        )
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignConstraints {
    pub fov_req_deg: f64,
    pub ber: BerTarget,
    /// Smallest manufacturable detector side (m).
    pub d_min: f64,
    /// Upper bound on the inner-array fill factor.
    pub ff_target: f64,
    /// Replaces the SNR threshold derived from the BER target.
    pub snr_req_override: Option<f64>,
}

impl DesignConstraints {
    pub fn validate(&self) -> Result<()> {
        positive("required field of view", self.fov_req_deg)?;
        positive("minimum detector side", self.d_min)?;
        if !(self.ff_target > 0.0 && self.ff_target <= 1.0) {
            return Err(Error::domain("fill factor target", format!("must lie in (0, 1], got {}", self.ff_target)));
        }
        if let Some(g) = self.snr_req_override {
            if !(g.is_finite() && g >= 0.0) {
                return Err(Error::domain("SNR threshold override", format!("must be non-negative, got {g}")));
            }
        }
        Ok(())
    }

    pub fn with_fov(&self, fov_req_deg: f64) -> Self {
        Self { fov_req_deg, ..*self }
    }
}

/// One fully specified receiver: fixed detector and lens counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReceiverDesign {
    pub snr: SnrContext,
    pub spot: BeamSpotModel,
    pub fov: FovModel,
}

/// Where the per-lens collected power comes from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CollectedPower {
    Gaussian(LinkBudget),
    /// Fixed per-lens power (W), regardless of the lens count.
    Fixed { watts: f64 },
}

impl CollectedPower {
    pub fn lens_power(&self, lens_radius: f64) -> Result<f64> {
        match self {
            CollectedPower::Gaussian(link) => link.lens_power(lens_radius),
            CollectedPower::Fixed { watts } => positive("collected power", *watts),
        }
    }
}

/// Fixed hardware from which a [`ReceiverDesign`] is built for any
/// `(N_PD, N_a)` pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReceiverTemplate {
    pub pd: PinPhotodetector,
    pub tia: TiaConfig,
    pub lens: LensSpec,
    pub spot: BeamSpotModel,
    pub fov: FovModel,
    /// Inner-array side (m).
    pub array_side: f64,
    /// Side of the whole receiver (m).
    pub receiver_side: f64,
    pub power: CollectedPower,
    pub combining: OuterCombining,
}

impl ReceiverTemplate {
    pub fn build(&self, n_pd: u32, n_a: u32) -> Result<ReceiverDesign> {
        let outer = OuterArray::new(n_a, self.receiver_side)?;
        let r_lns = outer.lens_radius();
        let xi = OpticalEfficiency::new(&self.lens, r_lns, self.spot.eta)?.total();
        let lens_power = self.power.lens_power(r_lns)?;
        let snr = SnrContext::new(self.pd, self.tia, n_pd, self.array_side, n_a, xi, lens_power, self.combining)?;
        Ok(ReceiverDesign { snr, spot: self.spot, fov: self.fov })
    }
}

/// Detector and lens counts to enumerate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Enumeration {
    pub n_pd: Vec<u32>,
    pub n_a: Vec<u32>,
}

impl Enumeration {
    pub fn new(n_pd: Vec<u32>, n_a: Vec<u32>) -> Result<Self> {
        if n_pd.is_empty() || n_a.is_empty() {
            return Err(Error::Layout("enumeration sets must not be empty".into()));
        }
        if let Some(bad) = n_pd.iter().chain(&n_a).find(|n| !is_perfect_square(**n)) {
            return Err(Error::Layout(format!("counts must be perfect squares, got {bad}")));
        }
        Ok(Self { n_pd, n_a })
    }

    /// `{1, 4, 9, …}` up to and including `max`.
    pub fn squares_up_to(max: u32) -> Vec<u32> {
        (1..).map(|k: u32| k * k).take_while(|n| *n <= max).collect()
    }

    pub fn pairs(&self) -> Vec<(u32, u32)> {
        self.n_pd.iter().flat_map(|p| self.n_a.iter().map(move |a| (*p, *a))).collect()
    }
}

/// Slope of the rate objective over the admissible `d` interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trend {
    /// Peak lies below the interval: the lower bound wins.
    Decreasing,
    /// Peak lies inside the interval.
    Interior,
    /// Peak lies above the interval: the upper bound wins.
    Increasing,
}

impl Trend {
    pub fn classify(peak: f64, lo: f64, hi: f64) -> Self {
        if peak < lo {
            Trend::Decreasing
        } else if peak > hi {
            Trend::Increasing
        } else {
            Trend::Interior
        }
    }

    fn pick(self, peak: f64, lo: f64, hi: f64) -> f64 {
        match self {
            Trend::Decreasing => lo,
            Trend::Interior => peak,
            Trend::Increasing => hi,
        }
    }
}

/// Candidate corner and extremum points of the OFDM intermediate-spot
/// sub-problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CornerPoint {
    MaxSideAtMaxDistance,
    MinSideAtSpotBoundary,
    ArraySideAtSpotBoundary,
    SnrBoundaryAtMaxDistance,
    MinSideAtSnrBoundary,
    SmallSpotPeakAtSpotBoundary,
    SpotSideAtMaxDistance,
    SnrThresholdAtSpotBoundary,
    PeakAtMaxDistance,
    MinSideAtMaxDistance,
    MaxSideAtSpotBoundary,
}

/// Which sub-problem and which branch of its solution produced a design.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "problem", rename_all = "snake_case")]
pub enum SolutionCase {
    OokSmallSpot,
    OokIntermediate,
    OokLargeSpot,
    OfdmSmallSpot { trend: Trend },
    OfdmIntermediate { point: CornerPoint },
    OfdmLargeSpot { trend: Trend },
}

impl SolutionCase {
    pub fn regime(&self) -> Regime {
        match self {
            SolutionCase::OokSmallSpot | SolutionCase::OfdmSmallSpot { .. } => Regime::SmallSpot,
            SolutionCase::OokIntermediate | SolutionCase::OfdmIntermediate { .. } => Regime::Intermediate,
            SolutionCase::OokLargeSpot | SolutionCase::OfdmLargeSpot { .. } => Regime::LargeSpot,
        }
    }

    /// Sub-problem number, 1 to 3, in order of growing spot.
    pub fn problem_id(&self) -> u8 {
        match self.regime() {
            Regime::SmallSpot => 1,
            Regime::Intermediate => 2,
            Regime::LargeSpot => 3,
        }
    }
}

impl fmt::Display for SolutionCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolutionCase::OokSmallSpot => write!(f, "ook/1"),
            SolutionCase::OokIntermediate => write!(f, "ook/2"),
            SolutionCase::OokLargeSpot => write!(f, "ook/3"),
            SolutionCase::OfdmSmallSpot { trend } => write!(f, "ofdm/1/{trend:?}"),
            SolutionCase::OfdmIntermediate { point } => write!(f, "ofdm/2/{point:?}"),
            SolutionCase::OfdmLargeSpot { trend } => write!(f, "ofdm/3/{trend:?}"),
        }
    }
}

/// First constraint found to be unsatisfiable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "constraint", rename_all = "snake_case")]
pub enum Infeasibility {
    FieldOfView { fov_req_deg: f64, max_fov_deg: f64 },
    DetectorSide { d_min: f64, d_max: f64 },
    Snr { best_snr: f64, required: f64 },
    Model { reason: String },
}

impl fmt::Display for Infeasibility {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Infeasibility::FieldOfView { fov_req_deg, max_fov_deg } => write!(
                f,
                "field of view: {fov_req_deg} deg requested, at most {max_fov_deg:.3} deg reachable"
            ),
            Infeasibility::DetectorSide { d_min, d_max } => write!(
                f,
                "detector side: minimum {:.3} um exceeds fill-factor limit {:.3} um",
                d_min * 1e6,
                d_max * 1e6
            ),
            Infeasibility::Snr { best_snr, required } => {
                write!(f, "snr: best achievable {best_snr:.4} below required {required:.4}")
            }
            Infeasibility::Model { reason } => write!(f, "model: {reason}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Optimum {
    /// Detector side (m).
    pub d: f64,
    /// Admissible lens-to-array distances `[l_lo, l_hi]` (m).
    pub l_lo: f64,
    pub l_hi: f64,
    pub regime: Regime,
    pub case: SolutionCase,
    /// bit/s.
    pub rate: f64,
    /// Averaged MRC SNR at `l_lo`, the worst point of the range.
    pub snr: f64,
    pub bandwidth: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignSolution {
    pub n_pd: u32,
    pub n_a: u32,
    pub feasible: bool,
    pub optimum: Option<Optimum>,
    pub infeasibility: Option<Infeasibility>,
}

impl DesignSolution {
    fn found(n_pd: u32, n_a: u32, optimum: Optimum) -> Self {
        Self { n_pd, n_a, feasible: true, optimum: Some(optimum), infeasibility: None }
    }

    fn infeasible(n_pd: u32, n_a: u32, why: Infeasibility) -> Self {
        Self { n_pd, n_a, feasible: false, optimum: None, infeasibility: Some(why) }
    }

    pub fn rate(&self) -> f64 {
        self.optimum.map_or(0.0, |o| o.rate)
    }

    /// Whether `self` should be preferred over `other`: faster, then wider
    /// distance margin, then fewer detectors, then fewer lenses.
    pub fn beats(&self, other: &DesignSolution) -> bool {
        match (self.optimum, other.optimum) {
            (None, _) => false,
            (Some(_), None) => true,
            (Some(a), Some(b)) => {
                if !rates_tie(a.rate, b.rate) {
                    return a.rate > b.rate;
                }
                if a.l_hi != b.l_hi {
                    return a.l_hi > b.l_hi;
                }
                (self.n_pd, self.n_a) < (other.n_pd, other.n_a)
            }
        }
    }
}

fn rates_tie(a: f64, b: f64) -> bool {
    (a - b).abs() <= RATE_TIE_TOLERANCE * a.abs().max(b.abs())
}

/// A configuration with its constraints resolved into numbers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Problem {
    pub design: ReceiverDesign,
    pub modulation: Modulation,
    pub ax: AxConstant,
    pub snr_req: f64,
    /// SNR gap Γ; only used by DCO-OFDM.
    pub gap: f64,
    pub d_min: f64,
    pub d_max: f64,
    pub l_max: f64,
    pub transit_constant: f64,
}

/// Model evaluated at one `(d, L)` node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeEval {
    pub d: f64,
    pub l: f64,
    pub regime: Regime,
    pub snr: f64,
    pub rate: f64,
    pub satisfies_all: bool,
}

/// The critical detector sides of the closed-form solution. Sides that
/// depend on `L` are methods.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalSides {
    ax: f64,
    snr_req: f64,
    gap: f64,
    array_side: f64,
    spot: BeamSpotModel,
    /// Smallest side meeting the SNR with a small spot.
    pub d_delta: f64,
    /// Rate peak of the small-spot OFDM objective.
    pub d_star: f64,
    pub d_max: f64,
}

impl CriticalSides {
    fn spot_area(&self, l: f64) -> f64 {
        let w = self.spot.radius_unchecked(l);
        PI * w * w
    }

    /// Smallest side meeting the SNR with an intermediate spot at `l`.
    pub fn d_lambda(&self, l: f64) -> f64 {
        (self.spot_area(l) * self.ax * self.snr_req).powf(0.2)
    }

    /// Smallest side meeting the SNR with a large spot at `l`.
    pub fn d_g(&self, l: f64) -> f64 {
        let a = self.spot_area(l);
        (a * a * self.ax * self.snr_req / (self.array_side * self.array_side)).powf(0.2)
    }

    /// Rate peak of the intermediate-spot OFDM objective at `l`.
    pub fn d_2star(&self, l: f64) -> f64 {
        let (_, x5) = extremum_constants();
        (x5 * self.spot_area(l) * self.gap * self.ax).powf(0.2)
    }

    /// Rate peak of the large-spot OFDM objective at `l`.
    pub fn d_3star(&self, l: f64) -> f64 {
        let (_, x5) = extremum_constants();
        let a = self.spot_area(l);
        (x5 * a * a * self.gap * self.ax / (self.array_side * self.array_side)).powf(0.2)
    }
}

fn within(v: f64, lo: f64, hi: f64) -> bool {
    let slack = CONSTRAINT_TOLERANCE * lo.abs().max(hi.abs());
    v >= lo - slack && v <= hi + slack
}

fn at_least(v: f64, bound: f64) -> bool {
    v >= bound - CONSTRAINT_TOLERANCE * bound.abs()
}

impl Problem {
    pub fn new(design: ReceiverDesign, constraints: &DesignConstraints, modulation: Modulation) -> Result<Self> {
        constraints.validate()?;
        let f_b = design.spot.back_focal_length;
        let l_max = design.fov.max_distance(constraints.fov_req_deg, f_b)?;
        let snr_req = match constraints.snr_req_override {
            Some(g) => g,
            None => snr_required(modulation, constraints.ber)?,
        };
        let gap = match modulation {
            Modulation::Ook => f64::NAN,
            Modulation::DcoOfdm { .. } => snr_gap(constraints.ber)?,
        };
        let ctx = &design.snr;
        Ok(Self {
            design,
            modulation,
            ax: ctx.ax_constant(),
            snr_req,
            gap,
            d_min: constraints.d_min,
            d_max: max_pd_side(ctx.n_pd, ctx.array_side, constraints.ff_target),
            l_max,
            transit_constant: ctx.pd.transit_constant(),
        })
    }

    pub fn array_side(&self) -> f64 {
        self.design.snr.array_side
    }

    pub fn back_focal_length(&self) -> f64 {
        self.design.spot.back_focal_length
    }

    pub fn critical_sides(&self) -> CriticalSides {
        let (x3, _) = extremum_constants();
        CriticalSides {
            ax: self.ax.value,
            snr_req: self.snr_req,
            gap: self.gap,
            array_side: self.array_side(),
            spot: self.design.spot,
            d_delta: (self.ax.value * self.snr_req).cbrt(),
            d_star: (x3 * self.gap * self.ax.value).cbrt(),
            d_max: self.d_max,
        }
    }

    pub fn bandwidth(&self, d: f64) -> f64 {
        1.0 / (self.transit_constant * d)
    }

    /// Rate of detectors of side `d` delivering averaged SNR `snr`.
    pub fn rate(&self, d: f64, snr: f64) -> f64 {
        match self.modulation {
            Modulation::Ook => rate_ook(self.bandwidth(d)),
            Modulation::DcoOfdm { subcarriers } => rate_ofdm(self.bandwidth(d), snr, subcarriers, self.gap),
        }
    }

    /// Objective and constraint predicates at one node. The oracle and the
    /// post-hoc check of the closed forms both go through here.
    pub fn evaluate(&self, d: f64, l: f64) -> NodeEval {
        let w = self.design.spot.radius_unchecked(l);
        let regime = regime_of(d, self.array_side(), w);
        let snr = self.ax.branch(regime, d, w);
        let satisfies_all = within(d, self.d_min, self.d_max)
            && within(l, 0.0, self.l_max)
            && at_least(snr, self.snr_req);
        NodeEval { d, l, regime, snr, rate: self.rate(d, snr), satisfies_all }
    }

    fn spot_side(&self, l: f64) -> f64 {
        self.design.spot.spot_side(l)
    }

    fn distance_for_side(&self, x: f64) -> f64 {
        self.design.spot.distance_for_side(x)
    }

    fn optimum(&self, case: SolutionCase, d: f64, l_lo: f64, l_hi: f64) -> Optimum {
        let lo = self.evaluate(d, l_lo);
        let hi = self.evaluate(d, l_hi);
        Optimum {
            d,
            l_lo,
            l_hi,
            regime: case.regime(),
            case,
            rate: hi.rate,
            snr: lo.snr,
            bandwidth: self.bandwidth(d),
        }
    }

    fn ook_candidates(&self) -> Vec<Optimum> {
        let cs = self.critical_sides();
        let mut out = Vec::new();

        let d1 = self.d_min.max(cs.d_delta).max(self.spot_side(self.l_max));
        if d1 <= self.d_max {
            let l_lo = self.distance_for_side(d1).max(0.0);
            out.push(self.optimum(SolutionCase::OokSmallSpot, d1, l_lo, self.l_max));
        }

        let l2 = self.distance_for_side(cs.d_delta).min(self.l_max);
        if l2 >= 0.0 && self.spot_side(l2) <= self.array_side() {
            let d2 = self.d_min.max(cs.d_lambda(l2));
            if d2 <= self.d_max && d2 <= self.spot_side(l2) {
                out.push(self.optimum(SolutionCase::OokIntermediate, d2, l2, l2));
            }
        }

        let l3 = self.distance_for_side(self.array_side()).min(self.l_max);
        if l3 >= 0.0 {
            let d3 = self.d_min.max(cs.d_g(l3));
            if d3 <= self.d_max {
                out.push(self.optimum(SolutionCase::OokLargeSpot, d3, l3, l3));
            }
        }
        out
    }

    fn ofdm_candidates(&self) -> Vec<Optimum> {
        let cs = self.critical_sides();
        let mut out = Vec::new();

        let lo = self.d_min.max(cs.d_delta).max(self.spot_side(self.l_max));
        if lo <= self.d_max {
            let trend = Trend::classify(cs.d_star, lo, self.d_max);
            let d = trend.pick(cs.d_star, lo, self.d_max);
            let l_lo = self.distance_for_side(d).max(0.0);
            out.push(self.optimum(SolutionCase::OfdmSmallSpot { trend }, d, l_lo, self.l_max));
        }

        if let Some((point, d, l)) = self.ofdm_intermediate_best() {
            out.push(self.optimum(SolutionCase::OfdmIntermediate { point }, d, l, l));
        }

        let l3 = self.distance_for_side(self.array_side()).min(self.l_max);
        if l3 >= 0.0 {
            let lo = self.d_min.max(cs.d_g(l3));
            if lo <= self.d_max {
                let peak = cs.d_3star(l3);
                let trend = Trend::classify(peak, lo, self.d_max);
                let d = trend.pick(peak, lo, self.d_max);
                out.push(self.optimum(SolutionCase::OfdmLargeSpot { trend }, d, l3, l3));
            }
        }
        out
    }

    /// The eleven candidate points of the intermediate-spot OFDM problem,
    /// in tabulated order. Points may fall outside the feasible set.
    pub fn ofdm_intermediate_points(&self) -> [(CornerPoint, f64, f64); 11] {
        let cs = self.critical_sides();
        let big_d = self.array_side();
        let d_min = self.d_min;
        let snr_boundary_at_min = (d_min.powi(5) / (self.ax.value * self.snr_req)).sqrt();
        use CornerPoint::*;
        [
            (MaxSideAtMaxDistance, self.d_max, self.l_max),
            (MinSideAtSpotBoundary, d_min, self.distance_for_side(d_min)),
            (ArraySideAtSpotBoundary, big_d, self.distance_for_side(big_d)),
            (SnrBoundaryAtMaxDistance, cs.d_lambda(self.l_max), self.l_max),
            (MinSideAtSnrBoundary, d_min, self.distance_for_side(snr_boundary_at_min)),
            (SmallSpotPeakAtSpotBoundary, cs.d_star, self.distance_for_side(cs.d_star)),
            (SpotSideAtMaxDistance, self.spot_side(self.l_max), self.l_max),
            (SnrThresholdAtSpotBoundary, cs.d_delta, self.distance_for_side(cs.d_delta)),
            (PeakAtMaxDistance, cs.d_2star(self.l_max), self.l_max),
            (MinSideAtMaxDistance, d_min, self.l_max),
            (MaxSideAtSpotBoundary, self.d_max, self.distance_for_side(self.d_max)),
        ]
    }

    /// Closure of the intermediate-spot feasible set.
    fn intermediate_admits(&self, d: f64, l: f64) -> bool {
        let s = self.spot_side(l);
        within(d, self.d_min, self.d_max)
            && within(l, 0.0, self.l_max)
            && at_least(s, d)
            && s <= self.array_side() * (1.0 + CONSTRAINT_TOLERANCE)
            && at_least(self.ax.branch(Regime::Intermediate, d, s / PI.sqrt()), self.snr_req)
    }

    fn ofdm_intermediate_best(&self) -> Option<(CornerPoint, f64, f64)> {
        let mut best: Option<(CornerPoint, f64, f64, f64)> = None;
        for (point, d, l) in self.ofdm_intermediate_points() {
            if !(d.is_finite() && l.is_finite()) || !self.intermediate_admits(d, l) {
                continue;
            }
            let d = d.clamp(self.d_min, self.d_max);
            let l = l.clamp(0.0, self.l_max);
            let w = self.design.spot.radius_unchecked(l);
            let rate = self.rate(d, self.ax.branch(Regime::Intermediate, d, w));
            let better = match best {
                None => true,
                Some((_, _, bl, br)) => {
                    if rates_tie(rate, br) {
                        l > bl
                    } else {
                        rate > br
                    }
                }
            };
            if better {
                best = Some((point, d, l, rate));
            }
        }
        best.map(|(p, d, l, _)| (p, d, l))
    }

    /// Closed-form optimum for this configuration.
    pub fn solve(&self) -> Result<DesignSolution> {
        let (n_pd, n_a) = (self.design.snr.n_pd, self.design.snr.n_a);
        let candidates = match self.modulation {
            Modulation::Ook => self.ook_candidates(),
            Modulation::DcoOfdm { .. } => self.ofdm_candidates(),
        };
        let mut best: Option<Optimum> = None;
        for c in candidates {
            for l in [c.l_lo, c.l_hi] {
                let node = self.evaluate(c.d, l);
                if !node.satisfies_all {
                    return Err(Error::InternalCheck(format!(
                        "{} candidate d = {:.6e} m, L = {l:.6e} m fails re-evaluation (snr {:.6} vs {:.6})",
                        c.case, c.d, node.snr, self.snr_req
                    )));
                }
            }
            let replace = match best {
                None => true,
                Some(b) => {
                    if rates_tie(c.rate, b.rate) {
                        c.l_hi > b.l_hi
                    } else {
                        c.rate > b.rate
                    }
                }
            };
            if replace {
                best = Some(c);
            }
        }
        let corner = self.evaluate(self.d_max, self.l_max);
        match best {
            Some(opt) => Ok(DesignSolution::found(n_pd, n_a, opt)),
            None if self.d_min > self.d_max => Ok(DesignSolution::infeasible(
                n_pd,
                n_a,
                Infeasibility::DetectorSide { d_min: self.d_min, d_max: self.d_max },
            )),
            None if corner.satisfies_all => Err(Error::InternalCheck(format!(
                "no closed-form candidate although d = {:.6e} m, L = {:.6e} m is feasible",
                self.d_max, self.l_max
            ))),
            None => Ok(DesignSolution::infeasible(
                n_pd,
                n_a,
                Infeasibility::Snr { best_snr: corner.snr, required: self.snr_req },
            )),
        }
    }
}

/// Solves one configuration. Constraint violations are reported in the
/// solution; only broken inputs and failed self-checks are errors.
pub fn solve(design: ReceiverDesign, constraints: &DesignConstraints, modulation: Modulation) -> Result<DesignSolution> {
    let (n_pd, n_a) = (design.snr.n_pd, design.snr.n_a);
    match Problem::new(design, constraints, modulation) {
        Ok(problem) => problem.solve(),
        Err(Error::InfeasibleFov { fov_req_deg, max_fov_deg }) => Ok(DesignSolution::infeasible(
            n_pd,
            n_a,
            Infeasibility::FieldOfView { fov_req_deg, max_fov_deg },
        )),
        Err(e) => Err(e),
    }
}

pub fn solve_ook(design: ReceiverDesign, constraints: &DesignConstraints) -> Result<DesignSolution> {
    solve(design, constraints, Modulation::Ook)
}

pub fn solve_ofdm(design: ReceiverDesign, constraints: &DesignConstraints, subcarriers: u32) -> Result<DesignSolution> {
    solve(design, constraints, Modulation::dco_ofdm(subcarriers)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalSolution {
    pub best: DesignSolution,
    /// One entry per enumerated `(N_PD, N_a)` pair, in enumeration order.
    pub configurations: Vec<DesignSolution>,
}

/// Best design over every `(N_PD, N_a)` pair of the enumeration.
pub fn solve_global(
    template: &ReceiverTemplate,
    constraints: &DesignConstraints,
    modulation: Modulation,
    enumeration: &Enumeration,
) -> Result<GlobalSolution> {
    constraints.validate()?;
    let configurations = enumeration
        .pairs()
        .into_par_iter()
        .map(|(n_pd, n_a)| match template.build(n_pd, n_a) {
            Ok(design) => solve(design, constraints, modulation),
            Err(e @ (Error::Geometry(_) | Error::ModelValidity(_))) => Ok(DesignSolution::infeasible(
                n_pd,
                n_a,
                Infeasibility::Model { reason: e.to_string() },
            )),
            Err(e) => Err(e),
        })
        .collect::<Result<Vec<_>>>()?;
    let mut best = configurations[0].clone();
    for c in &configurations[1..] {
        if c.beats(&best) {
            best = c.clone();
        }
    }
    if !best.feasible {
        // Report the first configuration's diagnosis when nothing works.
        best = configurations[0].clone();
    }
    Ok(GlobalSolution { best, configurations })
}

/// Evaluates every `(d, L)` node of the grid, row-major in `d`.
pub fn feasible_region(problem: &Problem, d_grid: &[f64], l_grid: &[f64]) -> Vec<NodeEval> {
    d_grid
        .par_iter()
        .flat_map_iter(|d| l_grid.iter().map(move |l| problem.evaluate(*d, *l)))
        .collect()
}
