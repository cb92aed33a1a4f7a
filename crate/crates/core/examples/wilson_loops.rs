//! Wilson loops of the 3D gauge model below and above the clean transition,
//! with the perimeter/area fit that classifies each phase.
//!
//! Usage: `cargo run --release --example wilson_loops [d] [steps]`

use qec_thresholds::rng;
use qec_thresholds::rpgm::{anneal_run, classify_phase, AnnealSchedule, GaugeLattice3D, LoopCatalog, LoopPlane, WilsonLoopSet};

fn main() -> qec_thresholds::Result<()> {
    let args: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let d = args.first().copied().unwrap_or(8);
    let steps = args.get(1).copied().unwrap_or(2000);
    for t in [1.0, 1.8] {
        let mut lattice = GaugeLattice3D::clean(d, d);
        let catalog = LoopCatalog::build(&lattice, &[LoopPlane::Xy], d / 2);
        let schedule = AnnealSchedule::single(t, steps, steps);
        let traces = anneal_run(&mut lattice, &schedule, &catalog, &mut rng::stream(1, 0))?;
        let set = WilsonLoopSet::from_trace(&traces[0], &catalog);
        println!("T = {t}");
        for (i, k) in set.keys.iter().enumerate() {
            println!("  {}x{}  W = {:.4e} ± {:.1e}", k.r, k.s, set.mean[i], set.error[i]);
        }
        match classify_phase(&set) {
            Ok(fit) => println!(
                "  perimeter {:.3} ± {:.3}, area {:.3} ± {:.3}: {:?}",
                fit.perimeter.0, fit.perimeter.1, fit.area.0, fit.area.1, fit.phase
            ),
            Err(e) => println!("  fit failed: {e}"),
        }
    }
    Ok(())
}
