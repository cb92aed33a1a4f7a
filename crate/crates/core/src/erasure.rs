//! Atom loss and leakage accumulated over many cycles.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Black-body scattering width of the Rydberg level, rad/s.
pub const GAMMA_BBR: f64 = 2.0 * PI * 840.0;

/// Upper end of the Rabi frequency range, rad/s.
pub const OMEGA_RABI: f64 = 2.0 * PI * 30e6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErasureParameters {
    /// rad/s
    pub gamma_bbr: f64,
    /// seconds; `f64::INFINITY` for a lossless trap
    pub t_trap: f64,
    /// seconds per cycle
    pub tau_meas: f64,
    /// Rydberg time per cycle divided by the cycle time.
    pub f_int: f64,
    pub cycles: u64,
}

impl ErasureParameters {
    pub fn validate(&self) -> Result<()> {
        let ok = self.gamma_bbr >= 0.0 && self.t_trap > 0.0 && self.tau_meas >= 0.0 && (0.0..=1.0).contains(&self.f_int);
        if !ok {
            return Err(Error::InvalidArgument(format!("invalid erasure parameters {self:?}")));
        }
        Ok(())
    }

    /// `f_int` for a pulse spending `rydberg_time` (units of `1/omega_rabi`)
    /// in the Rydberg state per cycle of length `tau_meas`.
    pub fn f_int_from_pulse(rydberg_time: f64, omega_rabi: f64, tau_meas: f64) -> f64 {
        (rydberg_time / omega_rabi / tau_meas).clamp(0.0, 1.0)
    }
}

/// `omega = f_int * Gamma_BBR + 1 / T_trap`.
pub fn erasure_rate(params: &ErasureParameters) -> f64 {
    params.f_int * params.gamma_bbr + 1.0 / params.t_trap
}

/// `r = 1 - exp(-omega tau c)`.
pub fn effective_erasure(omega: f64, tau_meas: f64, cycles: u64) -> f64 {
    -(-omega * tau_meas * cycles as f64).exp_m1()
}

/// Largest number of cycles with `effective_erasure <= r_max`.
pub fn cycles_until(omega: f64, tau_meas: f64, r_max: f64) -> f64 {
    if r_max <= 0.0 {
        return 0.0;
    }
    let per_cycle = omega * tau_meas;
    if per_cycle == 0.0 {
        return f64::INFINITY;
    }
    (-(-r_max).ln_1p() / per_cycle).floor()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rates() {
        let base = ErasureParameters {
            gamma_bbr: GAMMA_BBR,
            t_trap: f64::INFINITY,
            tau_meas: 1e-3,
            f_int: 0.0,
            cycles: 1,
        };
        assert_eq!(erasure_rate(&base), 0.0);
        let bbr = ErasureParameters { f_int: 1.0, ..base };
        assert!((erasure_rate(&bbr) - 2.0 * PI * 840.0).abs() < 1e-9);
        let trap = ErasureParameters { t_trap: 10.0, ..base };
        assert!((erasure_rate(&trap) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn effective_erasure_values() {
        assert_eq!(effective_erasure(3.0, 1.0, 0), 0.0);
        assert!((effective_erasure(2f64.ln(), 1.0, 1) - 0.5).abs() < 1e-15);
        assert!(effective_erasure(1e3, 1.0, 1000) < 1.0 + 1e-15);
    }

    #[test]
    fn cycles_inverse() {
        let c = cycles_until(0.01, 1.0, 0.5);
        assert!(effective_erasure(0.01, 1.0, c as u64) <= 0.5);
        assert!(effective_erasure(0.01, 1.0, c as u64 + 1) > 0.5);
    }
}
