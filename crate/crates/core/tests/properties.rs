use proptest::prelude::*;

use optoread::calib::thermal_calibration;
use optoread::chain::{noise_budget, signal_photons, snr, ChainConfig};
use optoread::device::default_paper_device;
use optoread::experiments::{builtin_scenario_names, Scenario};

#[test]
fn microwave_to_optical_snr_ratio() {
    let d = default_paper_device();
    let mw = ChainConfig::microwave_default(&d);
    let opt = ChainConfig::optical_default(&d);
    let s_mw = snr(signal_photons(&mw), noise_budget(&d, &mw, 1.0).unwrap().total_photons);
    let s_opt = snr(
        signal_photons(&opt),
        noise_budget(&d, &opt, opt.transduction_efficiency).unwrap().total_photons,
    );
    let ratio = s_mw / s_opt;
    assert!((20.0..30.0).contains(&ratio), "{ratio}");
}

#[test]
fn resolved_scenarios_are_fixed_points() {
    for name in builtin_scenario_names() {
        let s = Scenario::find(name, None).unwrap();
        let again = Scenario::from_value(s.to_value()).unwrap();
        assert_eq!(s, again, "{name}");
        assert_eq!(s.with_overrides(&[]).unwrap(), s, "{name}");
    }
}

proptest! {
    #[test]
    fn thermal_arithmetic_is_order_free(tone in -60.0f64..0.0, att in 0.0f64..100.0, snr_db in 0.0f64..80.0) {
        let a = thermal_calibration(tone, att, snr_db).nep_dbm;
        let b = thermal_calibration(tone, snr_db, att).nep_dbm;
        let c = thermal_calibration(tone - att, 0.0, snr_db).nep_dbm;
        let d = thermal_calibration(0.0, 0.0, att + snr_db - tone).nep_dbm;
        for x in [b, c, d] {
            prop_assert!((a - x).abs() <= 1e-12 * a.abs().max(1.0));
        }
    }

    #[test]
    fn pump_override_round_trips(p in 1e-7f64..1e-4) {
        let base = Scenario::find("fig3a", None).unwrap();
        let s = base.with_overrides(&[("chain.pump.power_w".into(), format!("{p:e}"))]).unwrap();
        prop_assert_eq!(s.chain.pump.power_w, p);
        prop_assert_eq!(Scenario::from_value(s.to_value()).unwrap(), s);
    }
}
