//! PIN photodetector bandwidth and transimpedance-amplifier thermal noise.
//!
//! The 3-dB bandwidth of a PIN diode is limited by two competing terms: the
//! RC constant of the junction, which grows with area and shrinks with the
//! depletion length, and the carrier transit time, which grows with the
//! depletion length. Choosing the depletion length optimally leaves a
//! bandwidth inversely proportional to the detector side, `B = 1 / (C_t d)`.

use serde::{Deserialize, Serialize};

use crate::error::{non_negative, positive, Error, Result};

/// Vacuum permittivity in F/m, at the precision used by the device model.
pub const VACUUM_PERMITTIVITY: f64 = 8.85e-12;
/// Boltzmann constant in J/K.
pub const BOLTZMANN: f64 = 1.380649e-23;

const TRANSIT_FACTOR: f64 = 0.44;

/// Square PIN photodetector. All quantities SI.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PinPhotodetector {
    /// Side length (m).
    pub side: f64,
    /// Junction series resistance (Ω).
    pub series_resistance: f64,
    /// TIA input resistance seen by the diode (Ω).
    pub load_resistance: f64,
    pub relative_permittivity: f64,
    /// Carrier saturation velocity (m/s).
    pub saturation_velocity: f64,
    /// Responsivity (A/W).
    pub responsivity: f64,
}

impl PinPhotodetector {
    pub fn new(
        side: f64,
        series_resistance: f64,
        load_resistance: f64,
        relative_permittivity: f64,
        saturation_velocity: f64,
        responsivity: f64,
    ) -> Result<Self> {
        let pd = Self {
            side,
            series_resistance,
            load_resistance,
            relative_permittivity,
            saturation_velocity,
            responsivity,
        };
        pd.validate()?;
        Ok(pd)
    }

    /// Silicon diode behind a 50 Ω TIA input, 7 Ω series resistance.
    pub fn silicon(side: f64) -> Result<Self> {
        Self::new(side, 7.0, 50.0, 11.7, 4.8e4, 0.5)
    }

    pub fn validate(&self) -> Result<()> {
        positive("pd side", self.side)?;
        non_negative("series resistance", self.series_resistance)?;
        non_negative("load resistance", self.load_resistance)?;
        positive("saturation velocity", self.saturation_velocity)?;
        if !(self.relative_permittivity.is_finite() && self.relative_permittivity > 1.0) {
            return Err(Error::domain(
                "relative permittivity",
                format!("must exceed 1, got {}", self.relative_permittivity),
            ));
        }
        if !(self.responsivity > 0.0 && self.responsivity <= 1.5) {
            return Err(Error::domain(
                "responsivity",
                format!("must lie in (0, 1.5] A/W, got {}", self.responsivity),
            ));
        }
        if self.total_resistance() <= 0.0 {
            return Err(Error::domain("resistance", "series plus load resistance must be positive"));
        }
        Ok(())
    }

    /// Same materials, different side length.
    pub fn with_side(&self, side: f64) -> Result<Self> {
        let pd = Self { side, ..*self };
        positive("pd side", side)?;
        Ok(pd)
    }

    pub fn total_resistance(&self) -> f64 {
        self.series_resistance + self.load_resistance
    }

    /// Bandwidth for an arbitrary depletion length `ell` (m).
    pub fn bandwidth(&self, ell: f64) -> Result<f64> {
        positive("depletion length", ell)?;
        positive("pd side", self.side)?;
        let rc = 2.0
            * std::f64::consts::PI
            * self.total_resistance()
            * VACUUM_PERMITTIVITY
            * self.relative_permittivity
            * self.side
            * self.side
            / ell;
        let transit = ell / (TRANSIT_FACTOR * self.saturation_velocity);
        Ok(1.0 / rc.hypot(transit))
    }

    /// Depletion length that maximises [`bandwidth`](Self::bandwidth).
    pub fn optimal_depletion_length(&self) -> f64 {
        self.side
            * (2.0
                * TRANSIT_FACTOR
                * std::f64::consts::PI
                * self.total_resistance()
                * VACUUM_PERMITTIVITY
                * self.relative_permittivity
                * self.saturation_velocity)
                .sqrt()
    }

    /// `C_t` in `B = 1 / (C_t d)` (s/m). Depends on materials only.
    pub fn transit_constant(&self) -> f64 {
        (4.0 * std::f64::consts::PI
            * self.total_resistance()
            * VACUUM_PERMITTIVITY
            * self.relative_permittivity
            / (TRANSIT_FACTOR * self.saturation_velocity))
            .sqrt()
    }

    /// Bandwidth at the optimal depletion length.
    pub fn optimal_bandwidth(&self) -> Result<f64> {
        positive("pd side", self.side)?;
        Ok(1.0 / (self.transit_constant() * self.side))
    }
}

/// Transimpedance amplifier noise parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TiaConfig {
    /// Feedback resistance (Ω).
    pub feedback_resistance: f64,
    pub noise_figure_db: f64,
    /// Temperature (K).
    pub temperature: f64,
}

impl TiaConfig {
    pub fn new(feedback_resistance: f64, noise_figure_db: f64, temperature: f64) -> Result<Self> {
        positive("feedback resistance", feedback_resistance)?;
        positive("temperature", temperature)?;
        non_negative("noise figure", noise_figure_db)?;
        Ok(Self { feedback_resistance, noise_figure_db, temperature })
    }

    pub fn noise_figure_linear(&self) -> f64 {
        10f64.powf(self.noise_figure_db / 10.0)
    }

    /// One-sided current noise density `4 k T F_n / R_f` (A²/Hz).
    pub fn noise_density(&self) -> f64 {
        4.0 * BOLTZMANN * self.temperature * self.noise_figure_linear() / self.feedback_resistance
    }

    /// Thermal noise variance (A²) over `bandwidth` (Hz).
    pub fn thermal_noise_variance(&self, bandwidth: f64) -> f64 {
        self.noise_density() * bandwidth
    }
}

impl Default for TiaConfig {
    fn default() -> Self {
        Self { feedback_resistance: 500.0, noise_figure_db: 5.0, temperature: 300.0 }
    }
}
