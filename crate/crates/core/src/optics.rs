//! Aspheric-lens optics: diffraction limit, the linear beam-spot model,
//! field of view versus lens-to-array distance, and per-lens collected power.

use serde::{Deserialize, Serialize};

use crate::error::{non_negative, positive, Error, Result};

const SQRT_PI: f64 = 1.772_453_850_905_516;

/// Lens datasheet values. Lengths in metres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LensSpec {
    pub effective_focal_length: f64,
    pub back_focal_length: f64,
    /// Clear aperture diameter.
    pub clear_aperture: f64,
    pub outer_diameter: f64,
    /// Power transmission coefficient.
    pub transmission: f64,
    pub wavelength: f64,
}

impl LensSpec {
    pub fn new(
        effective_focal_length: f64,
        back_focal_length: f64,
        clear_aperture: f64,
        outer_diameter: f64,
        transmission: f64,
        wavelength: f64,
    ) -> Result<Self> {
        let lens = Self {
            effective_focal_length,
            back_focal_length,
            clear_aperture,
            outer_diameter,
            transmission,
            wavelength,
        };
        lens.validate()?;
        Ok(lens)
    }

    /// Thorlabs 354140-B molded asphere at 850 nm.
    pub fn thorlabs_354140b() -> Self {
        Self {
            effective_focal_length: 1.45e-3,
            back_focal_length: 0.82e-3,
            clear_aperture: 1.6e-3,
            outer_diameter: 2.4e-3,
            transmission: 0.88,
            wavelength: 850e-9,
        }
    }

    pub fn validate(&self) -> Result<()> {
        positive("back focal length", self.back_focal_length)?;
        positive("clear aperture", self.clear_aperture)?;
        positive("wavelength", self.wavelength)?;
        if self.back_focal_length > self.effective_focal_length {
            return Err(Error::domain(
                "focal lengths",
                "back focal length must not exceed effective focal length",
            ));
        }
        if self.clear_aperture > self.outer_diameter {
            return Err(Error::domain("clear aperture", "must not exceed the outer diameter"));
        }
        if !(self.transmission > 0.0 && self.transmission <= 1.0) {
            return Err(Error::domain(
                "transmission",
                format!("must lie in (0, 1], got {}", self.transmission),
            ));
        }
        Ok(())
    }

    /// Airy radius `1.22 λ f_e / CA`.
    pub fn diffraction_limit(&self) -> f64 {
        1.22 * self.wavelength * self.effective_focal_length / self.clear_aperture
    }
}

/// Linear beam-spot model `W₂(L) = b1 (f_b − L) + b0` for `0 ≤ L ≤ f_b`.
///
/// `W₂` is the radius enclosing the fraction `eta` of the focused power.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamSpotModel {
    /// Radius at the back focal plane (m).
    pub b0: f64,
    pub b1: f64,
    pub back_focal_length: f64,
    pub eta: f64,
}

/// Which end of `[0, f_b]` a defocus distance was clamped to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Clamp {
    Lens,
    Focus,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Defocus {
    pub distance: f64,
    pub clamped: Option<Clamp>,
}

impl BeamSpotModel {
    pub fn new(b0: f64, b1: f64, back_focal_length: f64, eta: f64) -> Result<Self> {
        positive("b0", b0)?;
        positive("back focal length", back_focal_length)?;
        if !(b1 > 0.0 && b1 < 1.0) {
            return Err(Error::domain("b1", format!("must lie in (0, 1), got {b1}")));
        }
        if !(eta > 0.0 && eta < 1.0) {
            return Err(Error::domain("eta", format!("must lie in (0, 1), got {eta}")));
        }
        Ok(Self { b0, b1, back_focal_length, eta })
    }

    /// Coefficients from the lens datasheet: the spot shrinks linearly from
    /// `κ CA / 2` at the lens to `κ r_DL` at the focus, with `κ = √eta`.
    pub fn from_lens(lens: &LensSpec, eta: f64) -> Result<Self> {
        if !(eta > 0.0 && eta < 1.0) {
            return Err(Error::domain("eta", format!("must lie in (0, 1), got {eta}")));
        }
        let r_dl = lens.diffraction_limit();
        if lens.clear_aperture <= 2.0 * r_dl {
            return Err(Error::DegenerateLens { ca: lens.clear_aperture, r_dl });
        }
        let kappa = eta.sqrt();
        let b0 = r_dl * kappa;
        let b1 = kappa / (2.0 * lens.back_focal_length) * (lens.clear_aperture - 2.0 * r_dl);
        Self::new(b0, b1, lens.back_focal_length, eta)
    }

    /// Spot radius at distance `l` from the lens.
    pub fn radius(&self, l: f64) -> Result<f64> {
        if !(0.0..=self.back_focal_length).contains(&l) {
            return Err(Error::domain(
                "lens-to-array distance",
                format!("{l} m lies outside [0, {}] m", self.back_focal_length),
            ));
        }
        Ok(self.radius_unchecked(l))
    }

    /// Affine extension of [`radius`](Self::radius) without the range check.
    pub fn radius_unchecked(&self, l: f64) -> f64 {
        self.b1 * (self.back_focal_length - l) + self.b0
    }

    /// Equivalent square side `√π W₂(L)` of the spot: the PD side whose area
    /// equals the spot area.
    pub fn spot_side(&self, l: f64) -> f64 {
        SQRT_PI * self.radius_unchecked(l)
    }

    /// Distance at which `√π W₂ = x`, without clamping.
    pub fn distance_for_side(&self, x: f64) -> f64 {
        self.back_focal_length - (x / SQRT_PI - self.b0) / self.b1
    }

    /// Distance at which `√π W₂ = x`, clamped into `[0, f_b]`.
    pub fn defocus_for_spot(&self, x: f64) -> Defocus {
        let raw = self.distance_for_side(x);
        if raw > self.back_focal_length {
            Defocus { distance: self.back_focal_length, clamped: Some(Clamp::Focus) }
        } else if raw < 0.0 {
            Defocus { distance: 0.0, clamped: Some(Clamp::Lens) }
        } else {
            Defocus { distance: raw, clamped: None }
        }
    }
}

/// Field-of-view model relating lens-to-array distance to the full-cone FOV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FovModel {
    /// Chief-ray geometry: the array of side `aperture` subtends the FOV from
    /// the principal plane, `f_e − f_b` in front of the lens back surface.
    Tangent { aperture: f64, effective_focal_length: f64, back_focal_length: f64 },
    /// Fitted cubic `L[µm] = a3 F³ + a2 F² + a1 F + a0` with F in degrees.
    /// Coefficients ordered `[a3, a2, a1, a0]`.
    Cubic { coeffs: [f64; 4] },
}

impl FovModel {
    /// Fitted cubic coefficients from ray-traced data for the 354140-B lens.
    pub const PUBLISHED_CUBIC: [f64; 4] = [-0.08506, 6.142, -159.5, 1720.0];
    /// FOV range (degrees) over which the cubic is evaluated.
    pub const CUBIC_RANGE_DEG: (f64, f64) = (10.0, 40.0);

    pub fn tangent(aperture: f64, lens: &LensSpec) -> Result<Self> {
        positive("array side", aperture)?;
        Ok(FovModel::Tangent {
            aperture,
            effective_focal_length: lens.effective_focal_length,
            back_focal_length: lens.back_focal_length,
        })
    }

    pub fn cubic(coeffs: [f64; 4]) -> Result<Self> {
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::domain("cubic coefficients", "must be finite"));
        }
        Ok(FovModel::Cubic { coeffs })
    }

    fn cubic_distance(coeffs: &[f64; 4], fov_deg: f64) -> f64 {
        let [a3, a2, a1, a0] = *coeffs;
        (((a3 * fov_deg + a2) * fov_deg + a1) * fov_deg + a0) * 1e-6
    }

    fn check_cubic_range(fov_deg: f64) -> Result<()> {
        let (lo, hi) = Self::CUBIC_RANGE_DEG;
        if !(lo..=hi).contains(&fov_deg) {
            return Err(Error::domain(
                "field of view",
                format!("cubic fit is only evaluated on [{lo}, {hi}] deg, got {fov_deg}"),
            ));
        }
        Ok(())
    }

    /// Full-cone FOV in degrees at lens-to-array distance `l` (m).
    pub fn fov_deg(&self, l: f64) -> Result<f64> {
        match *self {
            FovModel::Tangent { aperture, effective_focal_length, back_focal_length } => {
                let image = l + effective_focal_length - back_focal_length;
                positive("image distance", image)?;
                Ok((2.0 * (aperture / (2.0 * image)).atan()).to_degrees())
            }
            FovModel::Cubic { coeffs } => {
                let (lo, hi) = Self::CUBIC_RANGE_DEG;
                let at_lo = Self::cubic_distance(&coeffs, lo);
                let at_hi = Self::cubic_distance(&coeffs, hi);
                let (near, far) = (at_lo.min(at_hi), at_lo.max(at_hi));
                if !(near..=far).contains(&l) {
                    return Err(Error::domain(
                        "lens-to-array distance",
                        format!("{l} m lies outside the cubic fit's range [{near}, {far}] m"),
                    ));
                }
                let (mut a, mut b) = (lo, hi);
                let sign_a = Self::cubic_distance(&coeffs, a) - l;
                if sign_a == 0.0 {
                    return Ok(a);
                }
                for _ in 0..200 {
                    let m = 0.5 * (a + b);
                    let fm = Self::cubic_distance(&coeffs, m) - l;
                    if fm == 0.0 {
                        return Ok(m);
                    }
                    if (fm > 0.0) == (sign_a > 0.0) {
                        a = m;
                    } else {
                        b = m;
                    }
                    if b - a < 1e-13 {
                        break;
                    }
                }
                Ok(0.5 * (a + b))
            }
        }
    }

    /// Largest lens-to-array distance that still provides `fov_req_deg`,
    /// limited to the back focal length.
    pub fn max_distance(&self, fov_req_deg: f64, back_focal_length: f64) -> Result<f64> {
        positive("required field of view", fov_req_deg)?;
        let raw = match *self {
            FovModel::Tangent { aperture, effective_focal_length, back_focal_length: fb } => {
                if fov_req_deg >= 180.0 {
                    return Err(Error::InfeasibleFov {
                        fov_req_deg,
                        max_fov_deg: self.fov_deg(0.0).unwrap_or(0.0),
                    });
                }
                aperture / (2.0 * (fov_req_deg.to_radians() / 2.0).tan())
                    - (effective_focal_length - fb)
            }
            FovModel::Cubic { coeffs } => {
                Self::check_cubic_range(fov_req_deg)?;
                Self::cubic_distance(&coeffs, fov_req_deg)
            }
        };
        if raw < 0.0 {
            let max_fov_deg = match self {
                FovModel::Tangent { .. } => self.fov_deg(0.0)?,
                FovModel::Cubic { .. } => self.fov_deg(0.0).unwrap_or(Self::CUBIC_RANGE_DEG.1),
            };
            return Err(Error::InfeasibleFov { fov_req_deg, max_fov_deg });
        }
        Ok(raw.min(back_focal_length))
    }
}

/// Breakdown of the optical efficiency `ξ = ξ_r ξ_p ξ_a`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OpticalEfficiency {
    /// Lens transmission.
    pub transmission: f64,
    /// Fraction of focused power inside the spot radius.
    pub spot_fraction: f64,
    /// Clear-aperture share of the lens cell area.
    pub aperture: f64,
}

impl OpticalEfficiency {
    /// `r_lns` is the half pitch of the lens cell.
    pub fn new(lens: &LensSpec, lens_radius: f64, spot_fraction: f64) -> Result<Self> {
        positive("lens radius", lens_radius)?;
        if lens_radius < lens.clear_aperture / 2.0 {
            return Err(Error::Geometry(format!(
                "lens pitch radius {lens_radius:.4e} m is smaller than the clear-aperture radius {:.4e} m",
                lens.clear_aperture / 2.0
            )));
        }
        let ratio = lens.clear_aperture / (2.0 * lens_radius);
        Ok(Self { transmission: lens.transmission, spot_fraction, aperture: ratio * ratio })
    }

    pub fn total(&self) -> f64 {
        self.transmission * self.spot_fraction * self.aperture
    }

    /// Efficiency with the spot-fraction convention switched off.
    pub fn without_spot_fraction(&self) -> f64 {
        self.transmission * self.aperture
    }
}

/// Gaussian transmitter illuminating the receiver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkBudget {
    /// Transmit power (W).
    pub transmit_power: f64,
    /// Beam radius at the receiver plane (m).
    pub beam_radius: f64,
}

impl LinkBudget {
    pub fn new(transmit_power: f64, beam_radius: f64) -> Result<Self> {
        non_negative("transmit power", transmit_power)?;
        positive("beam radius", beam_radius)?;
        Ok(Self { transmit_power, beam_radius })
    }

    /// Power through one lens cell at the beam centre, `2 P_t r² / W²`.
    /// The peak-intensity approximation needs the beam to be much wider than
    /// the lens.
    pub fn lens_power(&self, lens_radius: f64) -> Result<f64> {
        positive("lens radius", lens_radius)?;
        if self.beam_radius < 10.0 * lens_radius {
            return Err(Error::ModelValidity(format!(
                "beam radius {:.4e} m is not much larger than the lens radius {lens_radius:.4e} m",
                self.beam_radius
            )));
        }
        Ok(2.0 * self.transmit_power * lens_radius * lens_radius
            / (self.beam_radius * self.beam_radius))
    }
}

#[cfg(test)]
fn area_side(radius: f64) -> f64 {
    SQRT_PI * radius
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    fn fitted() -> BeamSpotModel {
        BeamSpotModel::new(1e-6, 0.69, 820e-6, 0.5).unwrap()
    }

    #[test]
    fn diffraction_limit_reference() {
        let lens = LensSpec::thorlabs_354140b();
        assert!(rel(lens.diffraction_limit(), 9.3978125e-07) < 1e-12);
        let wide = LensSpec { clear_aperture: 3.2e-3, outer_diameter: 4e-3, ..lens };
        assert!(rel(wide.diffraction_limit(), lens.diffraction_limit() / 2.0) < 1e-15);
    }

    #[test]
    fn datasheet_coefficients() {
        let m = BeamSpotModel::from_lens(&LensSpec::thorlabs_354140b(), 0.5).unwrap();
        assert!(rel(m.b0, 6.6452569470697e-07) < 1e-12);
        assert!(rel(m.b1, 0.6890498771396721) < 1e-12);
        let lens = LensSpec::thorlabs_354140b();
        let kappa = 0.5f64.sqrt();
        assert!(rel(m.radius(0.0).unwrap(), kappa * lens.clear_aperture / 2.0) < 1e-12);
        assert!(rel(m.radius(lens.back_focal_length).unwrap(), m.b0) < 1e-12);
        let m86 = BeamSpotModel::from_lens(&lens, 0.86).unwrap();
        let s = (0.86f64 / 0.5).sqrt();
        assert!(rel(m86.b0, m.b0 * s) < 1e-12 && rel(m86.b1, m.b1 * s) < 1e-12);
    }

    #[test]
    fn degenerate_lens_rejected() {
        let lens = LensSpec { wavelength: 1e-3, ..LensSpec::thorlabs_354140b() };
        assert!(matches!(BeamSpotModel::from_lens(&lens, 0.5), Err(Error::DegenerateLens { .. })));
    }

    #[test]
    fn spot_radius_values() {
        let m = fitted();
        assert!(rel(m.radius(820e-6).unwrap(), 1e-6) < 1e-12);
        assert!(rel(m.radius(0.0).unwrap(), 566.8e-6) < 1e-12);
        assert!(rel(m.radius(420e-6).unwrap(), 277e-6) < 1e-12);
        assert!(m.radius(-1e-9).is_err());
        assert!(m.radius(821e-6).is_err());
    }

    #[test]
    fn defocus_reference_values() {
        let m = fitted();
        let a = m.defocus_for_spot(44.81e-6);
        assert!(a.clamped.is_none());
        assert!((a.distance - 784.81e-6).abs() < 0.01e-6);
        let b = m.defocus_for_spot(53.33e-6);
        assert!((b.distance - 777.84e-6).abs() < 0.01e-6);
        let at_b0 = m.defocus_for_spot(area_side(m.b0));
        assert!((at_b0.distance - 820e-6).abs() < 1e-18);
        assert_eq!(m.defocus_for_spot(1e-7).clamped, Some(Clamp::Focus));
        assert_eq!(m.defocus_for_spot(1e-2).clamped, Some(Clamp::Lens));
    }

    #[test]
    fn tangent_fov_values() {
        let fov = FovModel::tangent(400e-6, &LensSpec::thorlabs_354140b()).unwrap();
        assert!((fov.fov_deg(820e-6).unwrap() - 15.7066).abs() < 1e-3);
        assert!((fov.fov_deg(785e-6).unwrap() - 16.0901).abs() < 1e-3);
        assert!(fov.fov_deg(1e3).unwrap() < 1e-4);
        assert!(rel(fov.max_distance(15.0, 820e-6).unwrap(), 820e-6) < 1e-15);
        assert!((fov.max_distance(16.2, 820e-6).unwrap() - 775.27e-6).abs() < 0.01e-6);
        assert!(rel(fov.max_distance(1e-3, 820e-6).unwrap(), 820e-6) < 1e-15);
        assert!(matches!(fov.max_distance(89.0, 820e-6), Err(Error::InfeasibleFov { .. })));
    }

    #[test]
    fn cubic_fov_round_trip_within_range() {
        let fov = FovModel::cubic(FovModel::PUBLISHED_CUBIC).unwrap();
        let l = fov.max_distance(15.0, 820e-6).unwrap();
        assert!((l - 422.5e-6).abs() < 1e-6);
        assert!((fov.fov_deg(l).unwrap() - 15.0).abs() < 1e-9);
        assert!(fov.max_distance(5.0, 820e-6).is_err());
        assert!(fov.max_distance(45.0, 820e-6).is_err());
    }

    #[test]
    fn efficiency_and_power() {
        let lens = LensSpec::thorlabs_354140b();
        let eff = OpticalEfficiency::new(&lens, 1.25e-3, 0.5).unwrap();
        assert!(rel(eff.total(), 0.180224) < 1e-12);
        let tight = OpticalEfficiency::new(&lens, 0.8e-3, 0.5).unwrap();
        assert!(rel(tight.total(), 0.88 * 0.5) < 1e-12);
        assert!(OpticalEfficiency::new(&lens, 0.7e-3, 0.5).is_err());
        assert!(rel(eff.without_spot_fraction(), 0.88 * 0.4096) < 1e-12);

        let link = LinkBudget::new(10e-3, 0.1).unwrap();
        assert!(rel(link.lens_power(1.25e-3).unwrap(), 3.125e-6) < 1e-12);
        assert!(rel(link.lens_power(2.5e-3).unwrap(), 4.0 * 3.125e-6) < 1e-12);
        assert_eq!(LinkBudget::new(0.0, 0.1).unwrap().lens_power(1e-3).unwrap(), 0.0);
        assert!(matches!(link.lens_power(0.02), Err(Error::ModelValidity(_))));
    }
}
