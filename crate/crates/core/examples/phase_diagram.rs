//! Small phase diagram in decay width and erasure, with and without
//! stabiliser refresh.
//!
//! Usage: `cargo run --release --example phase_diagram [samples] [steps]`

use qec_thresholds::pipeline::{run_sweep, McSettings, Protocol, SweepConfig, SweepResults, TemperatureRule};

fn main() -> qec_thresholds::Result<()> {
    let args: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut settings = McSettings::desk();
    settings.samples = args.first().copied().unwrap_or(20);
    let steps = args.get(1).copied().unwrap_or(400);
    settings.equilibration_steps = steps;
    settings.sample_steps = steps;
    let config = SweepConfig {
        protocol: Protocol::TimeOptimal,
        gammas: vec![2e-3, 6e-3, 1e-2],
        r_bars: vec![0.0, 0.1, 0.2, 0.3],
        settings,
        rule: TemperatureRule::Marginal,
        seed: 17,
    };
    let mut done = SweepResults::new();
    let b = run_sweep(&config, None, &mut done, &mut |_| Ok(()))?;
    println!("percolation anchors: {:.3} (no refresh), {:.3} (refresh)", b.anchors.no_refresh.0, b.anchors.refresh.0);
    for p in &b.points {
        println!("gamma {:.1e}  r {:.2}  T {:.3}  {:?}", p.gamma, p.r_bar, p.sheet.temperature, p.classification);
    }
    println!("boundary without refresh: {:?}", b.no_refresh.polyline);
    println!("boundary with refresh:    {:?}", b.refresh.polyline);
    Ok(())
}
