use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the model it was passed to.
    #[error("{what} out of domain: {detail}")]
    Domain { what: &'static str, detail: String },

    #[error("degenerate lens: clear aperture {ca:.4e} m is not larger than twice the diffraction limit {r_dl:.4e} m")]
    DegenerateLens { ca: f64, r_dl: f64 },

    #[error("geometry: {0}")]
    Geometry(String),

    #[error("layout: {0}")]
    Layout(String),

    /// The requested field of view cannot be met by any lens-to-array distance.
    #[error("field of view {fov_req_deg} deg is not reachable (largest achievable {max_fov_deg:.4} deg)")]
    InfeasibleFov { fov_req_deg: f64, max_fov_deg: f64 },

    #[error("model validity: {0}")]
    ModelValidity(String),

    #[error("config: {0}")]
    Config(String),

    /// A closed-form result failed its re-evaluation against the model.
    #[error("internal check failed: {0}")]
    InternalCheck(String),
}

impl Error {
    pub(crate) fn domain(what: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain { what, detail: detail.into() }
    }
}

/// Fails with a domain error unless `value` is finite and strictly positive.
pub(crate) fn positive(what: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(Error::domain(what, format!("expected a positive finite value, got {value}")))
    }
}

pub(crate) fn non_negative(what: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value >= 0.0 {
        Ok(value)
    } else {
        Err(Error::domain(what, format!("expected a non-negative finite value, got {value}")))
    }
}
