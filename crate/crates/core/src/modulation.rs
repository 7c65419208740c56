//! OOK and DCO-OFDM rate models, SNR thresholds, and the extremum constants
//! of the OFDM rate objective.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest QAM order loaded on an OFDM subcarrier.
const MIN_QAM_ORDER: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "snake_case")]
pub enum Modulation {
    Ook,
    DcoOfdm { subcarriers: u32 },
}

impl Modulation {
    pub fn dco_ofdm(subcarriers: u32) -> Result<Self> {
        if subcarriers < 4 || !subcarriers.is_multiple_of(2) {
            return Err(Error::domain(
                "subcarrier count",
                format!("must be even and at least 4, got {subcarriers}"),
            ));
        }
        Ok(Modulation::DcoOfdm { subcarriers })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Modulation::Ook => "ook",
            Modulation::DcoOfdm { .. } => "dco_ofdm",
        }
    }
}

/// Target bit error rate in `(0, 0.5)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct BerTarget(f64);

impl BerTarget {
    pub fn new(ber: f64) -> Result<Self> {
        if ber > 0.0 && ber < 0.5 {
            Ok(Self(ber))
        } else {
            Err(Error::domain("bit error rate", format!("must lie in (0, 0.5), got {ber}")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for BerTarget {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        Self::new(v)
    }
}

impl From<BerTarget> for f64 {
    fn from(b: BerTarget) -> f64 {
        b.0
    }
}

/// Nyquist-limited OOK rate.
pub fn rate_ook(bandwidth: f64) -> f64 {
    2.0 * bandwidth
}

/// Fraction of OFDM subcarriers carrying data after Hermitian symmetry and
/// the DC/Nyquist bins.
pub fn ofdm_efficiency(subcarriers: u32) -> f64 {
    (subcarriers as f64 - 2.0) / subcarriers as f64
}

/// DCO-OFDM rate bound `ν B log₂(1 + γ/Γ)`.
pub fn rate_ofdm(bandwidth: f64, snr: f64, subcarriers: u32, gap: f64) -> f64 {
    ofdm_efficiency(subcarriers) * bandwidth * (snr / gap).ln_1p() / std::f64::consts::LN_2
}

/// SNR gap `Γ = −ln(5 BER) / 1.5` of M-QAM at the target BER.
pub fn snr_gap(ber: BerTarget) -> Result<f64> {
    let p = ber.value();
    if p >= 0.2 {
        return Err(Error::domain("bit error rate", format!("SNR gap needs BER < 0.2, got {p}")));
    }
    Ok(-(5.0 * p).ln() / 1.5)
}

/// SNR needed to meet `ber`: `Q⁻¹(BER)²` for OOK, `Γ (M − 1)` with 4-QAM for
/// DCO-OFDM.
pub fn snr_required(modulation: Modulation, ber: BerTarget) -> Result<f64> {
    match modulation {
        Modulation::Ook => {
            let q = q_inverse(ber.value())?;
            Ok(q * q)
        }
        Modulation::DcoOfdm { .. } => Ok(snr_gap(ber)? * (MIN_QAM_ORDER - 1.0)),
    }
}

/// Standard normal tail probability.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

/// Inverse of [`q_function`] on `(0, 1)`.
pub fn q_inverse(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain("tail probability", format!("must lie in (0, 1), got {p}")));
    }
    if p == 0.5 {
        return Ok(0.0);
    }
    // Work in the lower tail for numerical headroom, then mirror.
    let (tail, sign) = if p < 0.5 { (p, 1.0) } else { (1.0 - p, -1.0) };
    let mut x = -normal_quantile_guess(tail);
    for _ in 0..50 {
        let residual = q_function(x) - tail;
        let density = (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let step = residual / density;
        x += step;
        if step.abs() <= 1e-15 * x.abs().max(1.0) {
            break;
        }
    }
    Ok(sign * x)
}

/// Rational approximation of the normal quantile (about 1e-9 relative),
/// valid for `0 < p < 0.5`; returns a negative deviate.
fn normal_quantile_guess(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969683028665376e1,
        2.209460984245205e2,
        -2.759285104469687e2,
        1.38357751867269e2,
        -3.066479806614716e1,
        2.506628277459239,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e1,
        1.615858368580409e2,
        -1.556989798598866e2,
        6.680131188771972e1,
        -1.328068155288572e1,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-3,
        -3.223964580411365e-1,
        -2.400758277161838,
        -2.549732539343734,
        4.374664141464968,
        2.938163982698783,
    ];
    const D: [f64; 4] = [7.784695709041462e-3, 3.224671290700398e-1, 2.445134137142996, 3.754408661907416];
    const P_LOW: f64 = 0.02425;

    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    }
}

/// Positive root `x_k` of `k x / (1 + x) = ln(1 + x)` for `k ∈ {3, 5}`.
///
/// The OFDM objective `log₂(1 + c dᵏ) / d` peaks where `c dᵏ = x_k`.
pub fn extremum_constant(k: u32) -> Result<f64> {
    if k != 3 && k != 5 {
        return Err(Error::domain("extremum exponent", format!("only 3 and 5 are used, got {k}")));
    }
    let k = k as f64;
    // With u = ln(1 + x) the condition reads k (1 − e^{−u}) = u, which is
    // positive below the root and negative above it.
    let g = |u: f64| k * (-(-u).exp_m1()) - u;
    let (mut lo, mut hi) = (1e-3, k);
    debug_assert!(g(lo) > 0.0 && g(hi) < 0.0);
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((0.5 * (lo + hi)).exp_m1())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ber(p: f64) -> BerTarget {
        BerTarget::new(p).unwrap()
    }

    #[test]
    fn ook_rates() {
        assert!((rate_ook(11.91e9) - 23.82e9).abs() < 1.0);
        assert!((rate_ook(1.69e9) - 3.38e9).abs() < 1.0);
        assert_eq!(rate_ook(0.0), 0.0);
    }

    #[test]
    fn gap_and_thresholds() {
        let g = snr_gap(ber(1e-3)).unwrap();
        assert!((g - 3.532211577698691).abs() < 1e-12);
        let unit = snr_gap(ber(0.2 / 1.5f64.exp())).unwrap();
        assert!((unit - 1.0).abs() < 1e-12);
        assert!(snr_gap(ber(0.25)).is_err());
        let ook = snr_required(Modulation::Ook, ber(1e-3)).unwrap();
        assert!((ook - 9.54953570608324).abs() < 1e-9);
        let ofdm = snr_required(Modulation::dco_ofdm(512).unwrap(), ber(1e-3)).unwrap();
        assert!((ofdm - 10.596634733096073).abs() < 1e-12);
        assert!(snr_required(Modulation::Ook, ber(0.499999999)).unwrap() < 1e-15);
    }

    #[test]
    fn ofdm_rate_values() {
        let g = snr_gap(ber(1e-3)).unwrap();
        let r = rate_ofdm(10e9, 11.85, 512, g);
        assert!((r / 21.14e9 - 1.0).abs() < 5e-3);
        assert_eq!(rate_ofdm(10e9, 0.0, 512, g), 0.0);
        assert!((rate_ofdm(10e9, g, 512, g) - ofdm_efficiency(512) * 10e9).abs() < 1e-3);
    }

    #[test]
    fn q_inverse_values() {
        assert!((q_inverse(1e-3).unwrap() - 3.090232306167813).abs() < 1e-12);
        assert_eq!(q_inverse(0.5).unwrap(), 0.0);
        for p in [1e-2, 1e-4, 1e-6, 1e-12, 0.3, 0.7, 0.999] {
            let x = q_inverse(p).unwrap();
            assert!(((q_function(x) - p) / p).abs() < 1e-10, "p = {p}");
        }
        assert!(q_inverse(0.0).is_err() && q_inverse(1.0).is_err());
    }

    #[test]
    fn extremum_constants() {
        assert!((extremum_constant(3).unwrap() - 15.801016190708332).abs() < 1e-8);
        assert!((extremum_constant(5).unwrap() - 142.32492159405584).abs() < 1e-7);
        assert!(extremum_constant(1).is_err());
        assert!(extremum_constant(4).is_err());
    }

    #[test]
    fn modulation_guards() {
        assert!(Modulation::dco_ofdm(3).is_err());
        assert!(Modulation::dco_ofdm(2).is_err());
        assert!(BerTarget::new(0.5).is_err());
    }
}
