//! Number of cycles before accumulated erasure crosses a flat boundary, for
//! both pulses, with and without trap loss.

use qec_thresholds::erasure::{ErasureParameters, GAMMA_BBR, OMEGA_RABI};
use qec_thresholds::pipeline::{lifetime_estimate, protocol_f_int, BoundaryCurve, Protocol};

fn main() -> qec_thresholds::Result<()> {
    let tau = 5e-3;
    let boundary = BoundaryCurve {
        polyline: vec![(0.0, 0.25), (1e-2, 0.25)],
    };
    for protocol in [Protocol::Jaksch, Protocol::TimeOptimal] {
        let f_int = protocol_f_int(&protocol.waveform()?, tau, OMEGA_RABI)?;
        for t_trap in [f64::INFINITY, 30.0] {
            let params = ErasureParameters {
                gamma_bbr: GAMMA_BBR,
                t_trap,
                tau_meas: tau,
                f_int,
                cycles: 0,
            };
            let est = lifetime_estimate(&params, 1e-3, &boundary)?;
            println!(
                "{protocol:?}  T_trap {t_trap:>4} s  f_int {f_int:.3e}  omega {:.3e}/s  cycles {:.0} ({:?})",
                est.omega, est.cycles, est.limit
            );
        }
    }
    Ok(())
}
