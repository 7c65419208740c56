//! Sectioned key/value design configuration.
//!
//! Keys carry their unit as a suffix; everything is converted to SI when
//! the configuration is resolved. Unknown sections and keys are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modulation::{BerTarget, Modulation};
use crate::optics::{BeamSpotModel, FovModel, LensSpec, LinkBudget};
use crate::optimizer::{CollectedPower, DesignConstraints, Enumeration, ReceiverTemplate};
use crate::pd::{PinPhotodetector, TiaConfig};
use crate::snr::OuterCombining;

/// Headline OOK configuration.
pub const HEADLINE_OOK: &str = include_str!("../configs/paper_ook.cfg");
/// Headline DCO-OFDM configuration.
pub const HEADLINE_OFDM: &str = include_str!("../configs/paper_ofdm.cfg");

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignConfig {
    #[serde(default)]
    pub transmitter: TransmitterSection,
    #[serde(default)]
    pub lens: LensSection,
    #[serde(default)]
    pub pd: PdSection,
    #[serde(default)]
    pub tia: TiaSection,
    #[serde(default)]
    pub array: ArraySection,
    #[serde(default)]
    pub receiver: ReceiverSection,
    #[serde(default)]
    pub constraints: ConstraintsSection,
    #[serde(default)]
    pub modulation: ModulationSection,
    #[serde(default)]
    pub models: ModelsSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TransmitterSection {
    pub power_mw: f64,
    pub wavelength_nm: f64,
    /// Gaussian beam radius on the receiver plane.
    pub beam_radius_rx_cm: f64,
}

impl Default for TransmitterSection {
    fn default() -> Self {
        Self { power_mw: 10.0, wavelength_nm: 850.0, beam_radius_rx_cm: 10.0 }
    }
}

/// Source of the beam-spot line coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpotModelKind {
    /// Use `b0_um` and `b1` as given.
    #[default]
    Fitted,
    /// Derive both from the datasheet values and `eta`.
    Datasheet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LensSection {
    pub f_e_mm: f64,
    pub f_b_mm: f64,
    pub ca_mm: f64,
    pub outer_diameter_mm: f64,
    pub xi_r: f64,
    pub spot_model: SpotModelKind,
    /// Spot radius at the back focal plane, for the fitted model.
    pub b0_um: f64,
    /// Spot shrink rate per unit distance, for the fitted model.
    pub b1: f64,
    /// Power fraction enclosed by the spot radius.
    pub eta: f64,
}

impl Default for LensSection {
    fn default() -> Self {
        Self {
            f_e_mm: 1.45,
            f_b_mm: 0.82,
            ca_mm: 1.6,
            outer_diameter_mm: 2.4,
            xi_r: 0.88,
            spot_model: SpotModelKind::Fitted,
            b0_um: 1.0,
            b1: 0.69,
            eta: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PdSection {
    pub r_s_ohm: f64,
    pub r_l_ohm: f64,
    pub eps_r: f64,
    /// Saturation velocity in m/s.
    pub v_s: f64,
    /// A/W.
    pub responsivity: f64,
}

impl Default for PdSection {
    fn default() -> Self {
        Self { r_s_ohm: 7.0, r_l_ohm: 50.0, eps_r: 11.7, v_s: 4.8e4, responsivity: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TiaSection {
    pub r_f_ohm: f64,
    pub f_n_db: f64,
    pub temperature_k: f64,
}

impl Default for TiaSection {
    fn default() -> Self {
        Self { r_f_ohm: 500.0, f_n_db: 5.0, temperature_k: 300.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ArraySection {
    #[serde(rename = "D_um")]
    pub d_um: f64,
    pub ff_target: f64,
    pub d_min_um: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_pd: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_pd_set: Option<Vec<u32>>,
}

impl Default for ArraySection {
    fn default() -> Self {
        Self { d_um: 400.0, ff_target: 0.64, d_min_um: 10.0, n_pd: None, n_pd_set: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReceiverSection {
    #[serde(rename = "Da_cm")]
    pub da_cm: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_a: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_a_set: Option<Vec<u32>>,
}

impl Default for ReceiverSection {
    fn default() -> Self {
        Self { da_cm: 2.0, n_a: None, n_a_set: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConstraintsSection {
    pub fov_req_deg: f64,
    pub ber_req: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snr_req_override: Option<f64>,
}

impl Default for ConstraintsSection {
    fn default() -> Self {
        Self { fov_req_deg: 15.0, ber_req: 1e-3, snr_req_override: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    #[default]
    Ook,
    DcoOfdm,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModulationSection {
    pub scheme: Scheme,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_sc: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FovModelKind {
    #[default]
    Tangent,
    Cubic,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelsSection {
    pub fov_model: FovModelKind,
    /// `[a3, a2, a1, a0]` of the cubic FOV fit.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cubic_coeffs: Option<[f64; 4]>,
    /// Per-lens collected power, replacing the Gaussian link model.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_r_lns_override_w: Option<f64>,
    pub outer_combining: OuterCombining,
}

/// Everything the optimizer needs, in SI units.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedConfig {
    pub template: ReceiverTemplate,
    pub constraints: DesignConstraints,
    pub modulation: Modulation,
    pub enumeration: Enumeration,
}

const DEFAULT_N_PD_MAX: u32 = 100;
const DEFAULT_N_A: u32 = 64;
const DEFAULT_SUBCARRIERS: u32 = 512;

fn in_section(section: &str, e: Error) -> Error {
    match e {
        Error::Config(_) => e,
        other => Error::Config(format!("[{section}] {other}")),
    }
}

fn choose_set(section: &str, key: &str, single: Option<u32>, set: &Option<Vec<u32>>, default: Vec<u32>) -> Result<Vec<u32>> {
    match (single, set) {
        (Some(_), Some(_)) => Err(Error::Config(format!("[{section}] give either {key} or {key}_set, not both"))),
        (Some(n), None) => Ok(vec![n]),
        (None, Some(s)) => Ok(s.clone()),
        (None, None) => Ok(default),
    }
}

impl DesignConfig {
    pub fn from_toml_str(raw: &str) -> Result<Self> {
        let de = toml::Deserializer::parse(raw).map_err(|e| Error::Config(e.to_string()))?;
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::Config(format!("{path}: {}", e.into_inner()))
        })?;
        cfg.resolve()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let raw = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&raw)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("configuration serialises")
    }

    pub fn headline_ook() -> Self {
        Self::from_toml_str(HEADLINE_OOK).expect("bundled configuration is valid")
    }

    pub fn headline_ofdm() -> Self {
        Self::from_toml_str(HEADLINE_OFDM).expect("bundled configuration is valid")
    }

    pub fn lens_spec(&self) -> Result<LensSpec> {
        let l = &self.lens;
        LensSpec::new(
            l.f_e_mm * 1e-3,
            l.f_b_mm * 1e-3,
            l.ca_mm * 1e-3,
            l.outer_diameter_mm * 1e-3,
            l.xi_r,
            self.transmitter.wavelength_nm * 1e-9,
        )
        .map_err(|e| in_section("lens", e))
    }

    pub fn photodetector(&self) -> Result<PinPhotodetector> {
        let p = &self.pd;
        // The side is a design variable; any positive placeholder will do.
        PinPhotodetector::new(1e-6, p.r_s_ohm, p.r_l_ohm, p.eps_r, p.v_s, p.responsivity)
            .map_err(|e| in_section("pd", e))
    }

    pub fn tia(&self) -> Result<TiaConfig> {
        let t = &self.tia;
        TiaConfig::new(t.r_f_ohm, t.f_n_db, t.temperature_k).map_err(|e| in_section("tia", e))
    }

    pub fn modulation(&self) -> Result<Modulation> {
        match self.modulation.scheme {
            Scheme::Ook => {
                if self.modulation.n_sc.is_some() {
                    return Err(Error::Config("[modulation] n_sc applies to dco_ofdm only".into()));
                }
                Ok(Modulation::Ook)
            }
            Scheme::DcoOfdm => Modulation::dco_ofdm(self.modulation.n_sc.unwrap_or(DEFAULT_SUBCARRIERS))
                .map_err(|e| in_section("modulation", e)),
        }
    }

    pub fn resolve(&self) -> Result<ResolvedConfig> {
        let lens = self.lens_spec()?;
        let spot = match self.lens.spot_model {
            SpotModelKind::Fitted => {
                BeamSpotModel::new(self.lens.b0_um * 1e-6, self.lens.b1, lens.back_focal_length, self.lens.eta)
            }
            SpotModelKind::Datasheet => BeamSpotModel::from_lens(&lens, self.lens.eta),
        }
        .map_err(|e| in_section("lens", e))?;

        let array_side = self.array.d_um * 1e-6;
        let fov = match self.models.fov_model {
            FovModelKind::Tangent => FovModel::tangent(array_side, &lens),
            FovModelKind::Cubic => FovModel::cubic(self.models.cubic_coeffs.unwrap_or(FovModel::PUBLISHED_CUBIC)),
        }
        .map_err(|e| in_section("models", e))?;
        if self.models.fov_model == FovModelKind::Tangent && self.models.cubic_coeffs.is_some() {
            return Err(Error::Config("[models] cubic_coeffs requires fov_model = \"cubic\"".into()));
        }

        let power = match self.models.p_r_lns_override_w {
            Some(watts) => {
                crate::error::positive("p_r_lns_override_w", watts).map_err(|e| in_section("models", e))?;
                CollectedPower::Fixed { watts }
            }
            None => CollectedPower::Gaussian(
                LinkBudget::new(self.transmitter.power_mw * 1e-3, self.transmitter.beam_radius_rx_cm * 1e-2)
                    .map_err(|e| in_section("transmitter", e))?,
            ),
        };

        let receiver_side = self.receiver.da_cm * 1e-2;
        crate::error::positive("Da_cm", receiver_side).map_err(|e| in_section("receiver", e))?;
        crate::error::positive("D_um", array_side).map_err(|e| in_section("array", e))?;

        let template = ReceiverTemplate {
            pd: self.photodetector()?,
            tia: self.tia()?,
            lens,
            spot,
            fov,
            array_side,
            receiver_side,
            power,
            combining: self.models.outer_combining,
        };

        let ber = BerTarget::new(self.constraints.ber_req).map_err(|e| in_section("constraints", e))?;
        let constraints = DesignConstraints {
            fov_req_deg: self.constraints.fov_req_deg,
            ber,
            d_min: self.array.d_min_um * 1e-6,
            ff_target: self.array.ff_target,
            snr_req_override: self.constraints.snr_req_override,
        };
        constraints.validate().map_err(|e| in_section("constraints", e))?;
        let modulation = self.modulation()?;
        if matches!(modulation, Modulation::DcoOfdm { .. }) && ber.value() >= 0.2 {
            return Err(Error::Config("[constraints] DCO-OFDM needs ber_req < 0.2".into()));
        }

        let n_pd = choose_set(
            "array",
            "n_pd",
            self.array.n_pd,
            &self.array.n_pd_set,
            Enumeration::squares_up_to(DEFAULT_N_PD_MAX),
        )?;
        let n_a = choose_set("receiver", "n_a", self.receiver.n_a, &self.receiver.n_a_set, vec![DEFAULT_N_A])?;
        let enumeration = Enumeration::new(n_pd, n_a).map_err(|e| in_section("array/receiver", e))?;

        Ok(ResolvedConfig { template, constraints, modulation, enumeration })
    }
}
