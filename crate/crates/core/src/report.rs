//! Design report: resolved configuration, optimum, constraint slack and
//! calibration diagnostics.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::config::DesignConfig;
use crate::error::{Error, Result};
use crate::modulation::Modulation;
use crate::optimizer::{extremum_constants, solve_global, DesignSolution, Problem};

/// Threshold detector side reported for the 49-detector OOK receiver.
pub const REFERENCE_THRESHOLD_SIDE: f64 = 44.81e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// `C_t` in s/m.
    pub transit_constant: f64,
    /// `A_x` in m³.
    pub ax: f64,
    pub snr_req: f64,
    /// SNR gap Γ, for DCO-OFDM.
    pub snr_gap: Option<f64>,
    pub x3: f64,
    pub x5: f64,
    /// Small-spot threshold side `(A_x γ_req)^{1/3}` (m).
    pub d_delta: f64,
    /// `d_delta` over [`REFERENCE_THRESHOLD_SIDE`].
    pub d_delta_ratio: f64,
    pub d_max: f64,
    pub l_max: f64,
    pub optical_efficiency: f64,
    pub lens_power: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Slack {
    /// Guaranteed SNR minus the threshold (linear).
    pub snr: f64,
    pub snr_db: f64,
    pub d_above_min: f64,
    pub d_below_max: f64,
    /// `L_max − L_hi` (m).
    pub l_below_max: f64,
    /// FOV at `L_hi` minus the requirement (degrees).
    pub fov_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignReport {
    pub config: DesignConfig,
    pub modulation: Modulation,
    pub solution: DesignSolution,
    pub slack: Option<Slack>,
    pub diagnostics: Option<Diagnostics>,
    pub configurations: Vec<DesignSolution>,
}

impl DesignReport {
    pub fn build(config: &DesignConfig) -> Result<Self> {
        let resolved = config.resolve()?;
        let global =
            solve_global(&resolved.template, &resolved.constraints, resolved.modulation, &resolved.enumeration)?;
        let best = global.best;
        let (mut slack, mut diagnostics) = (None, None);
        if let Ok(design) = resolved.template.build(best.n_pd, best.n_a) {
            match Problem::new(design, &resolved.constraints, resolved.modulation) {
                Ok(problem) => {
                    let (x3, x5) = extremum_constants();
                    let cs = problem.critical_sides();
                    diagnostics = Some(Diagnostics {
                        transit_constant: problem.transit_constant,
                        ax: problem.ax.value,
                        snr_req: problem.snr_req,
                        snr_gap: problem.gap.is_finite().then_some(problem.gap),
                        x3,
                        x5,
                        d_delta: cs.d_delta,
                        d_delta_ratio: cs.d_delta / REFERENCE_THRESHOLD_SIDE,
                        d_max: problem.d_max,
                        l_max: problem.l_max,
                        optical_efficiency: design.snr.xi,
                        lens_power: design.snr.lens_power,
                    });
                    if let Some(opt) = best.optimum {
                        slack = Some(Slack {
                            snr: opt.snr - problem.snr_req,
                            snr_db: 10.0 * (opt.snr / problem.snr_req).log10(),
                            d_above_min: opt.d - problem.d_min,
                            d_below_max: problem.d_max - opt.d,
                            l_below_max: problem.l_max - opt.l_hi,
                            fov_deg: design.fov.fov_deg(opt.l_hi)? - resolved.constraints.fov_req_deg,
                        });
                    }
                }
                Err(Error::InfeasibleFov { .. }) => {}
                Err(e) => return Err(e),
            }
        }
        Ok(Self {
            config: config.clone(),
            modulation: resolved.modulation,
            solution: best,
            slack,
            diagnostics,
            configurations: global.configurations,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }

    pub fn from_json(raw: &str) -> Result<Self> {
        serde_json::from_str(raw).map_err(|e| Error::Config(format!("report: {e}")))
    }

    /// Short human-readable summary.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        let sol = &self.solution;
        let _ = writeln!(s, "modulation      {}", self.modulation.name());
        match (&sol.optimum, &sol.infeasibility) {
            (Some(o), _) => {
                let _ = writeln!(s, "configuration   N_PD = {}, N_a = {}", sol.n_pd, sol.n_a);
                let _ = writeln!(s, "case            {} ({})", o.case, o.regime);
                let _ = writeln!(s, "detector side   {:.3} um", o.d * 1e6);
                let _ = writeln!(s, "lens distance   {:.2} .. {:.2} um", o.l_lo * 1e6, o.l_hi * 1e6);
                let _ = writeln!(s, "bandwidth       {:.3} GHz", o.bandwidth * 1e-9);
                let _ = writeln!(s, "rate            {:.3} Gbps", o.rate * 1e-9);
                let _ = writeln!(s, "snr             {:.4}", o.snr);
            }
            (None, Some(why)) => {
                let _ = writeln!(s, "infeasible      {why}");
            }
            (None, None) => {
                let _ = writeln!(s, "infeasible");
            }
        }
        if let Some(d) = &self.diagnostics {
            let _ = writeln!(s, "C_t             {:.6e} s/m", d.transit_constant);
            let _ = writeln!(s, "A_x             {:.6e} m^3", d.ax);
            let _ = writeln!(s, "snr required    {:.4}", d.snr_req);
            let _ = writeln!(
                s,
                "d_delta         {:.3} um ({:.4} x {:.2} um)",
                d.d_delta * 1e6,
                d.d_delta_ratio,
                REFERENCE_THRESHOLD_SIDE * 1e6
            );
        }
        s
    }
}
