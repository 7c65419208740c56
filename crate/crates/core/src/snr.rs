//! Combiner SNR for one inner array and the tilt-averaged SNR of the
//! array-of-arrays receiver.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{positive, Error, Result};
use crate::geometry::{is_perfect_square, regime_of, Regime};
use crate::pd::{PinPhotodetector, TiaConfig};

/// How the averaged SNR grows with the number of lensed arrays.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OuterCombining {
    /// SNR ∝ √N_a.
    #[default]
    Sqrt,
    /// SNR ∝ N_a.
    Linear,
}

impl OuterCombining {
    pub fn gain(self, n_a: u32) -> f64 {
        match self {
            OuterCombining::Sqrt => (n_a as f64).sqrt(),
            OuterCombining::Linear => n_a as f64,
        }
    }
}

/// Everything the SNR depends on except the design variables `d` and `L`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnrContext {
    /// Detector materials. The side is overridden by the design variable.
    pub pd: PinPhotodetector,
    pub tia: TiaConfig,
    pub n_pd: u32,
    /// Inner-array side (m).
    pub array_side: f64,
    pub n_a: u32,
    /// Optical efficiency ξ.
    pub xi: f64,
    /// Power collected by one lens (W).
    pub lens_power: f64,
    pub combining: OuterCombining,
}

impl SnrContext {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        pd: PinPhotodetector,
        tia: TiaConfig,
        n_pd: u32,
        array_side: f64,
        n_a: u32,
        xi: f64,
        lens_power: f64,
        combining: OuterCombining,
    ) -> Result<Self> {
        pd.validate()?;
        positive("array side", array_side)?;
        positive("optical efficiency", xi)?;
        positive("lens power", lens_power)?;
        for (what, n) in [("detector count", n_pd), ("lens count", n_a)] {
            if !is_perfect_square(n) {
                return Err(Error::Layout(format!("{what} must be a positive perfect square, got {n}")));
            }
        }
        Ok(Self { pd, tia, n_pd, array_side, n_a, xi, lens_power, combining })
    }

    pub fn fill_factor(&self, d: f64) -> f64 {
        self.n_pd as f64 * d * d / (self.array_side * self.array_side)
    }

    /// Photocurrent amplitude `R_res ξ P_r,lns` for a fully caught spot (A).
    pub fn signal_current(&self) -> f64 {
        self.pd.responsivity * self.xi * self.lens_power
    }

    /// `B = 1/(C_t d)` for detectors of side `d`.
    pub fn bandwidth(&self, d: f64) -> f64 {
        1.0 / (self.pd.transit_constant() * d)
    }

    pub fn noise_variance(&self, d: f64) -> f64 {
        self.tia.thermal_noise_variance(self.bandwidth(d))
    }

    pub fn outer_gain(&self) -> f64 {
        self.combining.gain(self.n_a)
    }

    /// Tilt-averaged MRC SNR of the whole receiver.
    pub fn avg_mrc_snr(&self, d: f64, w2: f64) -> f64 {
        self.avg_mrc_branch(regime_of(d, self.array_side, w2), d, w2)
    }

    /// One branch of [`avg_mrc_snr`](Self::avg_mrc_snr), evaluated whatever
    /// regime `(d, w2)` actually falls in.
    pub fn avg_mrc_branch(&self, regime: Regime, d: f64, w2: f64) -> f64 {
        let s = self.signal_current();
        let spot = d * d / (PI * w2 * w2);
        let branch = match regime {
            Regime::SmallSpot => s * s * self.fill_factor(d),
            Regime::Intermediate => s * s * spot * self.fill_factor(d),
            Regime::LargeSpot => self.n_pd as f64 * (s * spot).powi(2),
        };
        self.outer_gain() * branch / self.noise_variance(d)
    }

    /// Tilt-averaged EGC SNR of the whole receiver.
    pub fn avg_egc_snr(&self, d: f64, w2: f64) -> f64 {
        let s = self.signal_current();
        let n = self.n_pd as f64;
        let ff = self.fill_factor(d);
        let branch = match regime_of(d, self.array_side, w2) {
            Regime::SmallSpot => s * s * ff / n,
            Regime::Intermediate => (s * ff).powi(2) / n,
            Regime::LargeSpot => n * (s * d * d / (PI * w2 * w2)).powi(2),
        };
        self.outer_gain() * branch / self.noise_variance(d)
    }

    /// Design constant `A_x` of the averaged MRC SNR.
    pub fn ax_constant(&self) -> AxConstant {
        let s = self.signal_current();
        let value = self.tia.noise_density() * self.array_side * self.array_side
            / (self.n_pd as f64 * self.outer_gain() * self.pd.transit_constant() * s * s);
        AxConstant { value, array_side: self.array_side }
    }
}

/// `A_x` such that the averaged MRC SNR reads
/// `(1/A_x) · { d³ | d⁵/(πW₂²) | D² d⁵/(πW₂²)² }` across the three regimes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxConstant {
    /// m³.
    pub value: f64,
    pub array_side: f64,
}

impl AxConstant {
    pub fn mrc_snr(&self, d: f64, w2: f64) -> f64 {
        self.branch(regime_of(d, self.array_side, w2), d, w2)
    }

    /// One branch evaluated regardless of which regime `(d, w2)` lies in.
    pub fn branch(&self, regime: Regime, d: f64, w2: f64) -> f64 {
        let spot_area = PI * w2 * w2;
        let d3 = d * d * d;
        match regime {
            Regime::SmallSpot => d3 / self.value,
            Regime::Intermediate => d3 * d * d / (spot_area * self.value),
            Regime::LargeSpot => {
                self.array_side * self.array_side * d3 * d * d / (spot_area * spot_area * self.value)
            }
        }
    }
}

/// MRC SNR of one array for a given set of per-detector powers.
pub fn mrc_snr_exact(powers: &[f64], responsivity: f64, sigma2: f64) -> f64 {
    powers.iter().map(|p| (responsivity * p).powi(2)).sum::<f64>() / sigma2
}

/// EGC SNR of one array for a given set of per-detector powers.
pub fn egc_snr_exact(powers: &[f64], responsivity: f64, sigma2: f64) -> f64 {
    let total: f64 = powers.iter().map(|p| responsivity * p).sum();
    total * total / (powers.len() as f64 * sigma2)
}

/// MRC advantage over EGC for a spot caught by one of `n_pd` detectors.
pub fn mrc_egc_gain_db(n_pd: u32) -> f64 {
    10.0 * (n_pd as f64).log10()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    fn ctx(n_pd: u32, n_a: u32) -> SnrContext {
        let pd = PinPhotodetector::silicon(1e-5).unwrap();
        SnrContext::new(pd, TiaConfig::default(), n_pd, 400e-6, n_a, 0.180224, 3.125e-6, OuterCombining::Sqrt)
            .unwrap()
    }

    #[test]
    fn ax_reference_value() {
        assert!(rel(ctx(49, 64).ax_constant().value, 2.878082043741351e-13) < 1e-12);
    }

    #[test]
    fn ax_scalings() {
        let base = ctx(49, 16);
        let doubled = SnrContext { lens_power: 2.0 * base.lens_power, ..base };
        assert!(rel(doubled.ax_constant().value, base.ax_constant().value / 4.0) < 1e-12);
        assert!(rel(ctx(49, 64).ax_constant().value, base.ax_constant().value / 2.0) < 1e-12);
    }

    #[test]
    fn ax_form_matches_averaged_snr() {
        let c = ctx(49, 64);
        let ax = c.ax_constant();
        for (d, w) in [(40e-6, 5e-6), (40e-6, 60e-6), (40e-6, 300e-6), (20e-6, 100e-6)] {
            assert!(rel(ax.mrc_snr(d, w), c.avg_mrc_snr(d, w)) < 1e-12);
        }
    }

    #[test]
    fn exact_combiners() {
        assert_eq!(mrc_snr_exact(&[0.0, 0.0], 0.5, 1.0), 0.0);
        let one = mrc_snr_exact(&[2.0], 0.5, 4.0);
        assert!(rel(one, 0.25) < 1e-15);
        assert!(rel(mrc_snr_exact(&[2.0, 2.0], 0.5, 4.0), 2.0 * one) < 1e-15);
        let eq = [1.5; 4];
        assert!(rel(egc_snr_exact(&eq, 0.5, 1.0), mrc_snr_exact(&eq, 0.5, 1.0)) < 1e-15);
        let single = [3.0, 0.0, 0.0, 0.0];
        assert!(rel(egc_snr_exact(&single, 0.5, 1.0), mrc_snr_exact(&single, 0.5, 1.0) / 4.0) < 1e-15);
        let lumped = [2.0, 0.0, 0.0, 0.0];
        let spread = [0.5; 4];
        assert!(rel(egc_snr_exact(&lumped, 1.0, 1.0), egc_snr_exact(&spread, 1.0, 1.0)) < 1e-15);
        assert!(rel(mrc_snr_exact(&lumped, 1.0, 1.0), 4.0 * mrc_snr_exact(&spread, 1.0, 1.0)) < 1e-15);
    }

    #[test]
    fn egc_relations() {
        let c = ctx(49, 64);
        let d = 40e-6;
        assert!(rel(c.avg_mrc_snr(d, 400e-6), c.avg_egc_snr(d, 400e-6)) < 1e-12);
        assert!(rel(c.avg_mrc_snr(d, 5e-6) / c.avg_egc_snr(d, 5e-6), 49.0) < 1e-12);
        let single = ctx(1, 64);
        for w in [5e-6, 100e-6, 300e-6] {
            assert!(rel(single.avg_mrc_snr(300e-6, w), single.avg_egc_snr(300e-6, w)) < 1e-12);
        }
    }

    #[test]
    fn gain_values() {
        assert!((mrc_egc_gain_db(49) - 16.901_960_800_285_14).abs() < 1e-12);
        assert!((mrc_egc_gain_db(64) - 18.061_799_739_838_87).abs() < 1e-12);
        assert_eq!(mrc_egc_gain_db(1), 0.0);
    }

    #[test]
    fn linear_combining_scales_with_count() {
        let sqrt = ctx(49, 16);
        let lin = SnrContext { combining: OuterCombining::Linear, ..sqrt };
        assert!(rel(lin.avg_mrc_snr(40e-6, 60e-6), 4.0 * sqrt.avg_mrc_snr(40e-6, 60e-6)) < 1e-12);
    }
}
