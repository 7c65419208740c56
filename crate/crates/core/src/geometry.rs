//! Inner-array and array-of-arrays layout, exact disc–square overlap and
//! per-detector received power.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{positive, Error, Result};

/// Relative slack allowed when checking `FF ≤ 1`, so that `d = D/√N`
/// computed in floating point is accepted.
const FILL_FACTOR_SLACK: f64 = 1e-12;

pub fn is_perfect_square(n: u32) -> bool {
    n > 0 && integer_sqrt(n).pow(2) == n
}

pub fn integer_sqrt(n: u32) -> u32 {
    let mut r = (n as f64).sqrt() as u32;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

fn require_square(what: &'static str, n: u32) -> Result<u32> {
    if is_perfect_square(n) {
        Ok(integer_sqrt(n))
    } else {
        Err(Error::Layout(format!("{what} must be a positive perfect square, got {n}")))
    }
}

pub fn fill_factor(n_pd: u32, pd_side: f64, array_side: f64) -> Result<f64> {
    positive("pd side", pd_side)?;
    positive("array side", array_side)?;
    let ff = n_pd as f64 * pd_side * pd_side / (array_side * array_side);
    if ff > 1.0 + FILL_FACTOR_SLACK {
        return Err(Error::Layout(format!(
            "{n_pd} detectors of side {pd_side:.4e} m do not fit in {array_side:.4e} m (fill factor {ff:.4})"
        )));
    }
    Ok(ff)
}

/// Largest detector side meeting the fill-factor target.
pub fn max_pd_side(n_pd: u32, array_side: f64, ff_target: f64) -> f64 {
    array_side * (ff_target / n_pd as f64).sqrt()
}

/// Square lattice of `n_pd` square detectors, each centred in an equal cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InnerArray {
    pub n_pd: u32,
    /// Array side (m).
    pub side: f64,
    /// Detector side (m).
    pub pd_side: f64,
}

impl InnerArray {
    pub fn new(n_pd: u32, side: f64, pd_side: f64) -> Result<Self> {
        require_square("detector count", n_pd)?;
        fill_factor(n_pd, pd_side, side)?;
        Ok(Self { n_pd, side, pd_side })
    }

    pub fn per_row(&self) -> u32 {
        integer_sqrt(self.n_pd)
    }

    pub fn pitch(&self) -> f64 {
        self.side / self.per_row() as f64
    }

    pub fn fill_factor(&self) -> f64 {
        self.n_pd as f64 * self.pd_side * self.pd_side / (self.side * self.side)
    }

    /// Lattice coordinate of cell `i` along one axis.
    fn cell_center(&self, i: u32) -> f64 {
        (i as f64 + 0.5) * self.pitch() - self.side / 2.0
    }

    /// Detector centres in row-major order, array centred at the origin.
    pub fn pd_centers(&self) -> Vec<(f64, f64)> {
        let n = self.per_row();
        (0..n)
            .flat_map(|row| (0..n).map(move |col| (row, col)))
            .map(|(row, col)| (self.cell_center(col), self.cell_center(row)))
            .collect()
    }

    /// Index of the detector whose active area contains `point`.
    pub fn pd_at(&self, point: (f64, f64)) -> Option<usize> {
        let n = self.per_row();
        let pitch = self.pitch();
        let locate = |v: f64| -> Option<u32> {
            let k = ((v + self.side / 2.0) / pitch).floor();
            if k < 0.0 || k >= n as f64 {
                return None;
            }
            let k = k as u32;
            ((v - self.cell_center(k)).abs() <= self.pd_side / 2.0).then_some(k)
        };
        let col = locate(point.0)?;
        let row = locate(point.1)?;
        Some((row * n + col) as usize)
    }

    /// Overlap area of `footprint` with every detector, row-major. Cells
    /// outside the footprint's bounding box are skipped.
    pub fn overlap_areas(&self, footprint: &BeamFootprint) -> Vec<f64> {
        let mut areas = vec![0.0; self.n_pd as usize];
        self.for_each_overlap(footprint, |i, a| areas[i] = a);
        areas
    }

    pub(crate) fn for_each_overlap(&self, footprint: &BeamFootprint, mut f: impl FnMut(usize, f64)) {
        let n = self.per_row();
        let pitch = self.pitch();
        let r = footprint.radius;
        let span = |c: f64| -> (u32, u32) {
            let lo = ((c - r + self.side / 2.0) / pitch).floor().max(0.0);
            let hi = ((c + r + self.side / 2.0) / pitch).floor().min(n as f64 - 1.0);
            (lo as u32, hi as u32)
        };
        let half = self.side / 2.0;
        let (cx, cy) = footprint.center;
        if cx + r < -half || cx - r > half || cy + r < -half || cy - r > half {
            return;
        }
        let (c0, c1) = span(cx);
        let (r0, r1) = span(cy);
        for row in r0..=r1 {
            for col in c0..=c1 {
                let centre = (self.cell_center(col), self.cell_center(row));
                let a = disc_square_overlap(footprint, centre, self.pd_side);
                if a > 0.0 {
                    f((row * n + col) as usize, a);
                }
            }
        }
    }
}

/// Lenses tiling a square receiver of side `side`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OuterArray {
    pub n_a: u32,
    /// Receiver side (m).
    pub side: f64,
}

impl OuterArray {
    pub fn new(n_a: u32, side: f64) -> Result<Self> {
        require_square("lens count", n_a)?;
        positive("receiver side", side)?;
        Ok(Self { n_a, side })
    }

    /// Half pitch of a lens cell, `D_a / (2 √N_a)`.
    pub fn lens_radius(&self) -> f64 {
        self.side / (2.0 * (self.n_a as f64).sqrt())
    }
}

/// Focused spot on the detector plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamFootprint {
    pub center: (f64, f64),
    pub radius: f64,
}

impl BeamFootprint {
    pub fn new(center: (f64, f64), radius: f64) -> Result<Self> {
        positive("spot radius", radius)?;
        Ok(Self { center, radius })
    }
}

/// Exact area of the intersection of a disc with an axis-aligned square.
pub fn disc_square_overlap(footprint: &BeamFootprint, square_center: (f64, f64), side: f64) -> f64 {
    let r = footprint.radius;
    let h = side / 2.0;
    let x0 = square_center.0 - h - footprint.center.0;
    let x1 = square_center.0 + h - footprint.center.0;
    let y0 = square_center.1 - h - footprint.center.1;
    let y1 = square_center.1 + h - footprint.center.1;
    if x0 >= r || x1 <= -r || y0 >= r || y1 <= -r {
        return 0.0;
    }
    let far = x0.abs().max(x1.abs()).powi(2) + y0.abs().max(y1.abs()).powi(2);
    if far <= r * r {
        return side * side;
    }
    if x0 <= -r && x1 >= r && y0 <= -r && y1 >= r {
        return PI * r * r;
    }
    let area = corner(r, x1, y1) - corner(r, x0, y1) - corner(r, x1, y0) + corner(r, x0, y0);
    area.clamp(0.0, (PI * r * r).min(side * side))
}

/// Area of the origin-centred disc of radius `r` inside `{X ≤ x, Y ≤ y}`.
fn corner(r: f64, x: f64, y: f64) -> f64 {
    if x <= -r || y <= -r {
        return 0.0;
    }
    let x = x.min(r);
    // Integrate the chord length below `y` over t ∈ [−r, x]. The chord at
    // abscissa t spans [−h, h] with h = √(r² − t²).
    let chord = |a: f64, b: f64| half_disc_primitive(r, b) - half_disc_primitive(r, a);
    let width = |a: f64, b: f64| b - a;
    let clip = |a: f64, b: f64| (a.max(-r), b.min(x));
    let mut total = 0.0;
    if y >= r {
        let (a, b) = clip(-r, r);
        if b > a {
            total += 2.0 * chord(a, b);
        }
        return total;
    }
    let s = (r * r - y * y).sqrt();
    // Inside |t| < s the chord is cut at y: length y + h.
    let (a, b) = clip(-s, s);
    if b > a {
        total += y * width(a, b) + chord(a, b);
    }
    if y > 0.0 {
        // Outside |t| < s the whole chord lies below y.
        for (lo, hi) in [(-r, -s), (s, r)] {
            let (a, b) = clip(lo, hi);
            if b > a {
                total += 2.0 * chord(a, b);
            }
        }
    }
    total
}

/// Primitive of `√(r² − t²)`.
fn half_disc_primitive(r: f64, t: f64) -> f64 {
    let t = t.clamp(-r, r);
    let h = (r * r - t * t).max(0.0).sqrt();
    0.5 * (t * h + r * r * (t / r).clamp(-1.0, 1.0).asin())
}

/// Illumination regime of an array by a spot of radius `w2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// Spot no larger (in area) than one detector.
    SmallSpot,
    Intermediate,
    /// Spot larger than the whole array.
    LargeSpot,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Regime::SmallSpot => "small_spot",
            Regime::Intermediate => "intermediate",
            Regime::LargeSpot => "large_spot",
        })
    }
}

/// Boundaries belong to the smaller-spot regime.
pub fn regime_of(pd_side: f64, array_side: f64, w2: f64) -> Regime {
    let sqrt_pi = PI.sqrt();
    if w2 <= pd_side / sqrt_pi {
        Regime::SmallSpot
    } else if w2 <= array_side / sqrt_pi {
        Regime::Intermediate
    } else {
        Regime::LargeSpot
    }
}

/// Per-detector power from exact overlap areas, `ξ P 𝒜ᵢ / (π W₂²)`.
pub fn per_pd_power(array: &InnerArray, footprint: &BeamFootprint, lens_power: f64, xi: f64) -> Vec<f64> {
    let scale = xi * lens_power / (PI * footprint.radius * footprint.radius);
    array.overlap_areas(footprint).into_iter().map(|a| a * scale).collect()
}

/// Per-detector power under the three-regime approximation: a small spot is
/// caught whole by the detector under its centre or missed entirely, a large
/// spot illuminates every detector fully.
pub fn per_pd_power_piecewise(
    array: &InnerArray,
    footprint: &BeamFootprint,
    lens_power: f64,
    xi: f64,
) -> Vec<f64> {
    let w = footprint.radius;
    match regime_of(array.pd_side, array.side, w) {
        Regime::SmallSpot => {
            let mut p = vec![0.0; array.n_pd as usize];
            if let Some(i) = array.pd_at(footprint.center) {
                p[i] = xi * lens_power;
            }
            p
        }
        Regime::Intermediate => per_pd_power(array, footprint, lens_power, xi),
        Regime::LargeSpot => {
            let each = xi * lens_power * array.pd_side * array.pd_side / (PI * w * w);
            vec![each; array.n_pd as usize]
        }
    }
}
