//! Pauli-error threshold in the decay width at zero erasure, for both pulses.
//!
//! `cargo run --release --example gamma_threshold -- [samples] [steps]`

use qec_thresholds::pipeline::{gamma_threshold, McSettings, Protocol, TemperatureRule};

fn main() -> qec_thresholds::Result<()> {
    let args: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut settings = McSettings::desk();
    if let Some(&s) = args.first() {
        settings.samples = s;
    }
    if let Some(&s) = args.get(1) {
        settings.equilibration_steps = s;
        settings.sample_steps = s;
    }
    let grid: Vec<f64> = (1..=10).map(|i| 2e-3 * i as f64).collect();
    for protocol in [Protocol::Jaksch, Protocol::TimeOptimal] {
        let th = gamma_threshold(&protocol, &grid, 2, &settings, TemperatureRule::Marginal, 11)?;
        for (g, p) in &th.scanned {
            println!("  {protocol:?} gamma = {g:.2e}: {p:?}");
        }
        println!("{protocol:?}: gamma_th = {:.2e} +- {:.1e}", th.gamma, th.error);
    }
    Ok(())
}
