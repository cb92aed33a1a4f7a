//! Temperatures at which the dual spin models reproduce the error statistics.
//!
//! For a cell distribution `phi(tau)` over data-error patterns the couplings
//! on the Nishimori sheet are the Fourier coefficients
//! `beta J(sigma) = 2^-n sum_tau ln(phi(tau) (1 - r)) [[sigma, tau]]`.
//! The `(1 - r)` factor cancels for every `sigma != 0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::plaquette::PlaquetteErrorDistribution;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NishimoriOptions {
    /// Zero-probability patterns are raised to this value; `None` reports them.
    pub floor: Option<f64>,
}

impl Default for NishimoriOptions {
    fn default() -> Self {
        NishimoriOptions { floor: None }
    }
}

/// `beta J(sigma)` for every data pattern `sigma` (index = bit mask).
pub fn coupling_spectrum(dist: &PlaquetteErrorDistribution, r: f64, opts: NishimoriOptions) -> Result<Vec<f64>> {
    if !(0.0..1.0).contains(&r) {
        return Err(Error::InvalidArgument(format!("erasure probability {r} outside [0, 1)")));
    }
    let n = dist.n_data;
    let size = 1usize << n;
    let mut phi = vec![0.0; size];
    for (mask, _, p) in dist.support() {
        phi[mask] += p;
    }
    let total: f64 = phi.iter().sum();
    if total <= 0.0 {
        return Err(Error::ZeroProbability(size));
    }
    let zeros = phi.iter().filter(|&&p| p <= 0.0).count();
    if zeros > 0 {
        match opts.floor {
            Some(f) if f > 0.0 => phi.iter_mut().filter(|p| **p <= 0.0).for_each(|p| *p = f),
            _ => return Err(Error::ZeroProbability(zeros)),
        }
    }
    let logs: Vec<f64> = phi.iter().map(|p| (p / total * (1.0 - r)).ln()).collect();
    Ok((0..size)
        .map(|sigma| {
            logs.iter()
                .enumerate()
                .map(|(tau, l)| if (sigma & tau).count_ones() % 2 == 1 { -l } else { *l })
                .sum::<f64>()
                / size as f64
        })
        .collect())
}

/// Single-bond coupling averaged over the cell's data qubits.
pub fn single_bond_coupling(dist: &PlaquetteErrorDistribution, r: f64, opts: NishimoriOptions) -> Result<f64> {
    let spec = coupling_spectrum(dist, r, opts)?;
    Ok((0..dist.n_data).map(|k| spec[1 << k]).sum::<f64>() / dist.n_data as f64)
}

/// Nishimori temperature of one cell (`J = 1`). Infinite when the coupling
/// vanishes or turns antiferromagnetic.
pub fn nishimori_temperature(dist: &PlaquetteErrorDistribution, r: f64, opts: NishimoriOptions) -> Result<f64> {
    let bj = single_bond_coupling(dist, r, opts)?;
    Ok(if bj > 1e-12 { 1.0 / bj } else { f64::INFINITY })
}

/// Temperature for a lattice where every bond is shared by two cells, so its
/// coupling collects contributions from both.
pub fn shared_bond_temperature(dist: &PlaquetteErrorDistribution, r: f64, opts: NishimoriOptions) -> Result<f64> {
    nishimori_temperature(dist, r, opts).map(|t| t / 2.0)
}

/// `beta J = 1/2 ln((1 - p)/p)` for independent errors.
pub fn independent_coupling(p: f64) -> f64 {
    0.5 * ((1.0 - p) / p).ln()
}

/// `T = 2 / ln((1 - p)/p)`.
pub fn independent_temperature(p: f64) -> f64 {
    let bj = independent_coupling(p);
    if bj > 0.0 {
        1.0 / bj
    } else {
        f64::INFINITY
    }
}

/// Inverse of [`independent_temperature`] on `p < 1/2`.
pub fn nishimori_p(temperature: f64) -> f64 {
    1.0 / (1.0 + (2.0 / temperature).exp())
}

/// Per-element rates of a lattice built from shared cells, and the
/// independent-element Nishimori couplings they imply (`J_space = 1`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarginalSheet {
    /// Wrong-sign probability of a data bond: parity of the two cells
    /// sharing it.
    pub p_space: f64,
    /// Wrong-sign probability of a readout plaquette.
    pub q: f64,
    pub temperature: f64,
    /// `J_time / J_space`; infinite for perfect readout.
    pub j_time: f64,
}

/// Bond `k` of a cell is bond `(k + n/2) mod n` of its neighbour, so the two
/// draws on a bond come from opposite qubits.
pub fn marginal_sheet(dist: &PlaquetteErrorDistribution) -> Result<MarginalSheet> {
    let kept = dist.conditioned_on_kept();
    let n = kept.n_data;
    if n % 2 != 0 {
        return Err(Error::InvalidArgument(format!("cells with {n} data qubits do not tile the square lattice")));
    }
    let m: Vec<f64> = (0..n).map(|k| kept.qubit_marginal(k)).collect();
    let p_space = (0..n).map(|k| {
        let (a, b) = (m[k], m[(k + n / 2) % n]);
        a + b - 2.0 * a * b
    }).sum::<f64>() / n as f64;
    let q = kept.measurement_error();
    let bj = independent_coupling(p_space);
    let temperature = if p_space <= 0.0 { 0.0 } else if bj > 0.0 { 1.0 / bj } else { f64::INFINITY };
    let j_time = if q <= 0.0 {
        f64::INFINITY
    } else if p_space <= 0.0 {
        1.0
    } else {
        independent_coupling(q) / bj
    };
    Ok(MarginalSheet {
        p_space,
        q,
        temperature,
        j_time,
    })
}

/// Nishimori temperature as a function of the erasure grid.
pub fn nishimori_sheet(dist: &PlaquetteErrorDistribution, rs: &[f64], opts: NishimoriOptions) -> Result<Vec<(f64, f64)>> {
    rs.iter()
        .map(|&r| nishimori_temperature(dist, r, opts).map(|t| (r, t)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn independent_case_reduces_to_closed_form() {
        for p in [0.01, 0.05, 0.109, 0.3] {
            let d = PlaquetteErrorDistribution::independent(4, p, 0.0).unwrap();
            let t = nishimori_temperature(&d, 0.0, Default::default()).unwrap();
            assert!((t - independent_temperature(p)).abs() < 1e-10 * t);
            let spec = coupling_spectrum(&d, 0.0, Default::default()).unwrap();
            assert!(spec[0b0011].abs() < 1e-12);
        }
    }

    #[test]
    fn half_is_infinite() {
        let d = PlaquetteErrorDistribution::independent(4, 0.5, 0.0).unwrap();
        assert!(nishimori_temperature(&d, 0.0, Default::default()).unwrap().is_infinite());
    }

    #[test]
    fn erasure_cancels() {
        let d = PlaquetteErrorDistribution::independent(4, 0.07, 0.02).unwrap();
        let a = nishimori_temperature(&d, 0.0, Default::default()).unwrap();
        let b = nishimori_temperature(&d, 0.3, Default::default()).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn zeros_are_reported_or_floored() {
        let d = PlaquetteErrorDistribution::noiseless(4, crate::plaquette::StabilizerType::Z);
        assert!(matches!(
            nishimori_temperature(&d, 0.0, Default::default()),
            Err(Error::ZeroProbability(15))
        ));
        let t = nishimori_temperature(&d, 0.0, NishimoriOptions { floor: Some(1e-8) }).unwrap();
        assert!((t - 16.0 / 1e8f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn marginal_sheet_of_independent_cells() {
        let p = 0.02;
        let d = PlaquetteErrorDistribution::independent(4, p, 0.01).unwrap();
        let m = marginal_sheet(&d).unwrap();
        let pb = 2.0 * p * (1.0 - p);
        assert!((m.p_space - pb).abs() < 1e-14);
        assert!((m.temperature - independent_temperature(pb)).abs() < 1e-12);
        assert!((m.j_time - independent_coupling(0.01) / independent_coupling(pb)).abs() < 1e-12);
        let perfect = PlaquetteErrorDistribution::independent(4, p, 0.0).unwrap();
        assert!(marginal_sheet(&perfect).unwrap().j_time.is_infinite());
    }

    #[test]
    fn p_round_trip() {
        assert!((nishimori_p(independent_temperature(0.109)) - 0.109).abs() < 1e-14);
    }
}
