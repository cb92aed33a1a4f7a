//! Bond and site-bond erasure thresholds from crossings of torus winding
//! probabilities.
//!
//! Usage: `cargo run --release --example percolation_thresholds [trials]`

use qec_thresholds::percolation::{percolation_threshold, PercolationKind};

fn main() -> qec_thresholds::Result<()> {
    let trials = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(2000);
    let sizes = [32, 64];
    let grids = [
        (PercolationKind::Bond, (0..=12).map(|i| 0.44 + 0.01 * i as f64).collect::<Vec<_>>()),
        (PercolationKind::SiteBond, (0..=14).map(|i| 0.20 + 0.01 * i as f64).collect::<Vec<_>>()),
    ];
    for (kind, rs) in grids {
        let t = percolation_threshold(kind, &sizes, &rs, trials, 99)?;
        println!("{kind:?}");
        for (i, r) in rs.iter().enumerate() {
            let row: Vec<String> = t.curves.iter().map(|c| format!("{:.3} ± {:.3}", c[i].fraction(), c[i].error())).collect();
            println!("  r = {r:.2}  {}", row.join("   "));
        }
        println!("  threshold {:.4} ± {:.4}", t.threshold, t.error);
    }
    Ok(())
}
