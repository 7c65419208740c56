use rxdesign::config::DesignConfig;
use rxdesign::report::DesignReport;
use rxdesign::validation::{run, BatteryOptions};

#[test]
fn bundled_reports_carry_the_headline_rates() {
    let ook = DesignReport::build(&DesignConfig::headline_ook()).unwrap();
    assert_eq!((ook.solution.n_pd, ook.solution.n_a), (49, 64));
    assert!((ook.solution.rate() / 23.82e9 - 1.0).abs() < 5e-3);
    let d = ook.diagnostics.as_ref().unwrap();
    assert!((d.d_delta_ratio - 1.0).abs() < 1e-9);
    assert!(ook.slack.as_ref().unwrap().snr >= -1e-9);

    let ofdm = DesignReport::build(&DesignConfig::headline_ofdm()).unwrap();
    assert_eq!(ofdm.solution.n_pd, 36);
    assert!((ofdm.solution.rate() / 21.14e9 - 1.0).abs() < 5e-3);
    assert!(ofdm.diagnostics.unwrap().snr_gap.is_some());
}

#[test]
fn report_json_round_trips() {
    for cfg in [DesignConfig::headline_ook(), DesignConfig::headline_ofdm()] {
        let report = DesignReport::build(&cfg).unwrap();
        assert_eq!(DesignReport::from_json(&report.to_json()).unwrap(), report);
    }
}

#[test]
fn infeasible_report_still_serialises() {
    let mut cfg = DesignConfig::headline_ook();
    cfg.constraints.fov_req_deg = 89.0;
    let report = DesignReport::build(&cfg).unwrap();
    assert!(!report.solution.feasible);
    assert!(report.summary().contains("field of view"), "{}", report.summary());
    assert_eq!(DesignReport::from_json(&report.to_json()).unwrap(), report);
}

#[test]
fn config_errors_name_section_and_key() {
    let raw = rxdesign::config::HEADLINE_OOK.replace("eps_r = 11.7", "eps_r = \"high\"");
    let err = DesignConfig::from_toml_str(&raw).unwrap_err().to_string();
    assert!(err.contains("pd.eps_r"), "{err}");
    let raw = rxdesign::config::HEADLINE_OOK.replace("responsivity = 0.5", "responsivity = 0.5\nresponsivty = 0.4");
    let err = DesignConfig::from_toml_str(&raw).unwrap_err().to_string();
    assert!(err.contains("pd") && err.contains("responsivty"), "{err}");
    let raw = rxdesign::config::HEADLINE_OOK.replace("n_a = 64", "n_a = 60");
    assert!(DesignConfig::from_toml_str(&raw).is_err());
}

#[test]
fn perturbed_permittivity_fails_the_calibration_check() {
    let mut cfg = DesignConfig::headline_ook();
    cfg.pd.eps_r = 20.0;
    let result = run(1, &cfg, &BatteryOptions::default());
    assert!(!result.passed);
    assert!(result.to_string().contains("bandwidth calibration"));
}
