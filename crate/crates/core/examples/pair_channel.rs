//! Twirled two-qubit channel of one Rydberg pulse: the largest Pauli
//! probabilities and the erased weight.
//!
//! Usage: `cargo run --release --example pair_channel [gamma] [omega_leak]`

use qec_thresholds::channel::{pair_channel, DecayParameters};
use qec_thresholds::pulse::{jaksch_waveform, time_optimal_waveform, PlaquetteGeometry};

fn main() -> qec_thresholds::Result<()> {
    let args: Vec<f64> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let decay = DecayParameters::new(args.first().copied().unwrap_or(1e-3), args.get(1).copied().unwrap_or(0.0))?;
    let geometry = PlaquetteGeometry::clockwise(4);
    for wf in [jaksch_waveform(1.0)?, time_optimal_waveform()] {
        let chi = pair_channel(&wf, &geometry, 0, &decay)?;
        let mut entries: Vec<(String, f64)> = chi.labelled().into_iter().collect();
        entries.sort_by(|a, b| b.1.total_cmp(&a.1));
        println!("# {} (gamma {:.1e}, omega {:.1e})", wf.protocol, decay.gamma, decay.omega_leak);
        for (label, p) in entries.iter().take(6) {
            println!("  {label}  {p:.6e}");
        }
        println!("  erased {:.6e}  dropped coherences {:.2e}  total {:.12}", chi.erasure_weight, chi.off_diagonal_mass, chi.total());
    }
    Ok(())
}
