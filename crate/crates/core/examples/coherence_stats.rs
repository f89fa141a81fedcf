//! Distributions of fitted T1 and T2* with the pump off and on.

use optoread::chain::ChainConfig;
use optoread::device::default_paper_device;
use optoread::error::Result;
use optoread::experiments::{run_coherence_stats, CoherenceParams, Context, Overrides};
use optoread::qubit::DemolitionConfig;
use optoread::rng::SeedSpec;

pub fn run_example() -> Result<()> {
    let device = default_paper_device();
    let ctx = Context {
        chain: ChainConfig::microwave_default(&device),
        device,
        demolition: DemolitionConfig::default(),
        seed: SeedSpec::new(4, 0),
    };
    let params = CoherenceParams {
        n_repeats: 50,
        pump_on: Overrides {
            t1_s: None,
            t2_star_s: Some(5.2e-6),
        },
        ..Default::default()
    };
    let s = run_coherence_stats(&ctx, &params)?.summary;
    for (name, st) in [
        ("T1  off", s.t1_pump_off),
        ("T1  on ", s.t1_pump_on),
        ("T2* off", s.t2_star_pump_off),
        ("T2* on ", s.t2_star_pump_on),
    ] {
        println!(
            "{name}: {:6.2} ± {:5.2} us (generated {:.2} us, {} failed)",
            st.mean_s * 1e6,
            st.std_s * 1e6,
            st.generating_s * 1e6,
            st.n_failed
        );
    }
    println!("T1 p = {:.3}, T2* p = {:.2e}", s.t1_test.p_value, s.t2_star_test.p_value);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
