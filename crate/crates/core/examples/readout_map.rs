//! Readout contrast between |0⟩ and |1⟩ over drive frequency and power.

use optoread::chain::ChainConfig;
use optoread::device::default_paper_device;
use optoread::error::Result;
use optoread::experiments::{run_readout_map, Context, Grid, ReadoutMapParams};
use optoread::qubit::DemolitionConfig;
use optoread::rng::SeedSpec;

pub fn run_example() -> Result<()> {
    let device = default_paper_device();
    let ctx = Context {
        chain: ChainConfig::microwave_default(&device),
        device,
        demolition: DemolitionConfig::default(),
        seed: SeedSpec::new(0, 0),
    };
    let params = ReadoutMapParams {
        frequency_hz: Grid::linear(5.190e9, 5.202e9, 121),
        power_dbm: Grid::linear(-125.0, -90.0, 71),
    };
    let out = run_readout_map(&ctx, &params)?;
    let s = out.summary;
    println!(
        "largest contrast {:.3} at {:.4} GHz, {:.1} dBm",
        s.max_difference,
        s.argmax_frequency_hz / 1e9,
        s.argmax_power_dbm
    );
    // One line per 5 dB: the frequency where the states differ most.
    for k in (0..71).step_by(10) {
        let row = out.power_row(k, 121);
        let best = row.iter().max_by(|a, b| a.difference.total_cmp(&b.difference)).unwrap();
        println!("{:7.1} dBm  {:.4} GHz  {:.3}", best.power_dbm, best.frequency_hz / 1e9, best.difference);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
