//! Threshold of independent bit flips on the Nishimori line.
//!
//! Usage: `cargo run --release --example nishimori_threshold [samples] [sweeps]`

use qec_thresholds::disorder::ErrorModel;
use qec_thresholds::fss::threshold_scan;
use qec_thresholds::nishimori::independent_temperature;
use qec_thresholds::rbim::ThermalParams;

fn main() -> qec_thresholds::Result<()> {
    let args: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let samples = args.first().copied().unwrap_or(200);
    let sweeps = args.get(1).copied().unwrap_or(2000);
    let ps = [0.09, 0.10, 0.11, 0.12, 0.13, 0.14, 0.15];
    let sizes = [8, 12, 16];
    let family = |p: f64| Ok((ErrorModel::Independent { p, q: 0.0 }, independent_temperature(p)));
    let start = std::time::Instant::now();
    let curve = threshold_scan(&family, &ps, &sizes, samples, ThermalParams::new(sweeps / 2, sweeps), 7)?;
    for (i, p) in ps.iter().enumerate() {
        let row: Vec<String> = curve.xi_over_l.iter().map(|c| format!("{:.4} ± {:.4}  ", c[i].0, c[i].1)).collect();
        println!("p = {p:.3}  T = {:.4}  {}", independent_temperature(*p), row.join(""));
    }
    for c in &curve.pairs {
        println!("pair {:?}: p = {:.4}", c.sizes, c.x);
    }
    println!(
        "p_th = {:.4} ± {:.4}  [{:.4}, {:.4}]",
        curve.crossing, curve.error, curve.interval.0, curve.interval.1
    );
    println!("elapsed {:.1} s", start.elapsed().as_secs_f64());
    Ok(())
}
