//! Design toolkit for imaging optical-wireless receivers built as an array
//! of lensed photodetector arrays.
//!
//! The models cover PIN bandwidth and TIA noise ([`pd`]), lens optics and
//! field of view ([`optics`]), array layout and exact spot overlap
//! ([`geometry`]), combiner SNR ([`snr`]), and OOK / DCO-OFDM rates
//! ([`modulation`]). [`optimizer`] solves for the detector side and
//! lens-to-array distance in closed form, and [`oracle`] checks it by brute
//! force.

pub mod config;
pub mod error;
pub mod fmt;
pub mod geometry;
pub mod modulation;
pub mod optics;
pub mod optimizer;
pub mod oracle;
pub mod pd;
pub mod report;
pub mod snr;
pub mod validation;

pub use error::{Error, Result};
