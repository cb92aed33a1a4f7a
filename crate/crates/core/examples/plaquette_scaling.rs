//! Grouped plaquette error probabilities against the decay rate, for both
//! pulse protocols, with log-log slopes between the end points.

use qec_thresholds::channel::DecayParameters;
use qec_thresholds::plaquette::{plaquette_distribution, PlaquetteModel, StabilizerType};
use qec_thresholds::pulse::{jaksch_waveform, time_optimal_waveform, PlaquetteGeometry};

fn main() -> qec_thresholds::Result<()> {
    let gammas = [1e-4, 3e-4, 1e-3];
    let geometry = PlaquetteGeometry::clockwise(4);
    for wf in [jaksch_waveform(1.0)?, time_optimal_waveform()] {
        println!("# {}", wf.protocol);
        println!("gamma\tk=1\tk=2\tq");
        let mut rows = Vec::new();
        for &g in &gammas {
            let t = std::time::Instant::now();
            let d = plaquette_distribution(
                &wf,
                &geometry,
                &DecayParameters::new(g, 0.0)?,
                StabilizerType::Z,
                PlaquetteModel::Sequential,
            )?;
            let grouped = d.grouped();
            let k1 = grouped[&(1, false)] + grouped[&(3, false)];
            let k2 = grouped[&(2, false)];
            println!("{g:.1e}\t{k1:.4e}\t{k2:.4e}\t{:.4e}\t({:.2?})", d.measurement_error(), t.elapsed());
            rows.push((g, k1, k2));
        }
        let (a, b) = (rows[0], rows[rows.len() - 1]);
        let slope = |x: f64, y: f64| (y / x).ln() / (b.0 / a.0).ln();
        println!("slope k=1 {:.3}, k=2 {:.3}", slope(a.1, b.1), slope(a.2, b.2));
    }
    Ok(())
}
