//! Clean Ising crossing: `xi/L` curves for several sizes cross near the
//! Onsager temperature `2 / ln(1 + sqrt 2)`.
//!
//! Usage: `cargo run --release --example onsager_crossing [samples] [sweeps]`

use qec_thresholds::disorder::ErrorModel;
use qec_thresholds::fss::find_tc;
use qec_thresholds::rbim::ThermalParams;

fn main() -> qec_thresholds::Result<()> {
    let args: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let samples = args.first().copied().unwrap_or(16);
    let sweeps = args.get(1).copied().unwrap_or(5000);
    let temps = [2.15, 2.20, 2.24, 2.28, 2.32, 2.36, 2.42];
    let sizes = [8, 16, 32];
    let start = std::time::Instant::now();
    let curve = find_tc(
        &ErrorModel::Independent { p: 0.0, q: 0.0 },
        0.0,
        &sizes,
        &temps,
        samples,
        ThermalParams::new(sweeps / 5, sweeps),
        2024,
    )?;
    println!("T      {}", sizes.map(|l| format!("xi/L(L={l:<2})     ")).join(""));
    for (p, t) in temps.iter().enumerate() {
        let row: Vec<String> = curve.xi_over_l.iter().map(|c| format!("{:.4} ± {:.4}  ", c[p].0, c[p].1)).collect();
        println!("{t:.2}   {}", row.join(""));
    }
    for c in &curve.pairs {
        println!("pair {:?}: T = {:.4}", c.sizes, c.x);
    }
    let onsager = 2.0 / (1.0 + 2f64.sqrt()).ln();
    println!(
        "T_c = {:.4} ± {:.4}  [{:.4}, {:.4}]  (exact {onsager:.4})  nu = {:?}",
        curve.crossing, curve.error, curve.interval.0, curve.interval.1, curve.nu
    );
    println!("elapsed {:.1} s", start.elapsed().as_secs_f64());
    Ok(())
}
