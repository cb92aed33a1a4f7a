//! Open-system propagation of one ancilla/data pulse and its Pauli twirl.
//!
//! The pair channel is carried as a superoperator on row-major vectorised
//! 9x9 density matrices (`81 x 81`), together with a linear functional that
//! accumulates the weight lost to leakage.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::{all_strings, PauliString};
use crate::pulse::{
    build_step_propagator, computational_block, local_cz_target, pair_index, pair_unitary, CMatrix,
    ControlWaveform, PlaquetteGeometry, COMPUTATIONAL, PAIR_DIM, RYD,
};

const SUPER_DIM: usize = PAIR_DIM * PAIR_DIM;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayParameters {
    /// Rydberg to `|1>` decay rate.
    pub gamma: f64,
    /// Rydberg loss out of the qubit manifold (detected as erasure).
    pub omega_leak: f64,
    pub measurement_drain: bool,
}

impl DecayParameters {
    pub fn new(gamma: f64, omega_leak: f64) -> Result<Self> {
        let d = DecayParameters {
            gamma,
            omega_leak,
            measurement_drain: true,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn noiseless() -> Self {
        DecayParameters {
            gamma: 0.0,
            omega_leak: 0.0,
            measurement_drain: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma >= 0.0) || !(self.omega_leak >= 0.0) || !self.gamma.is_finite() || !self.omega_leak.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "decay rates must be finite and non-negative (gamma={}, omega_leak={})",
                self.gamma, self.omega_leak
            )));
        }
        Ok(())
    }

    pub fn total(&self) -> f64 {
        self.gamma + self.omega_leak
    }

    /// Fraction of the end-of-cycle drain that returns to `|1>`.
    pub fn decay_fraction(&self) -> f64 {
        if self.total() > 0.0 {
            self.gamma / self.total()
        } else {
            1.0
        }
    }
}

/// Single-qutrit Kraus operators of decay plus leakage over a time `h`.
/// `E1 = diag(1, 1, sqrt(1 - (gamma + omega) h))`, `E2 = sqrt(gamma h) |1><r|`.
pub fn qutrit_decay_kraus(decay: &DecayParameters, h: f64) -> Result<[[[f64; 3]; 3]; 2]> {
    let product = decay.total() * h;
    if product >= 1.0 {
        return Err(Error::StepSize { product });
    }
    let mut e1 = [[0.0; 3]; 3];
    e1[0][0] = 1.0;
    e1[1][1] = 1.0;
    e1[RYD][RYD] = (1.0 - product).sqrt();
    let mut e2 = [[0.0; 3]; 3];
    e2[1][RYD] = (decay.gamma * h).sqrt();
    Ok([e1, e2])
}

/// Drain Kraus operators: all Rydberg weight leaves, a fraction `f` to `|1>`.
pub fn qutrit_drain_kraus(decay: &DecayParameters) -> [[[f64; 3]; 3]; 2] {
    let mut e1 = [[0.0; 3]; 3];
    e1[0][0] = 1.0;
    e1[1][1] = 1.0;
    let mut e2 = [[0.0; 3]; 3];
    e2[1][RYD] = decay.decay_fraction().sqrt();
    [e1, e2]
}

fn pair_superop_from_qutrit(kraus: &[[[f64; 3]; 3]; 2]) -> CMatrix {
    let mut total = CMatrix::zeros(SUPER_DIM, SUPER_DIM);
    for ka in kraus {
        for kd in kraus {
            let k = CMatrix::from_fn(PAIR_DIM, PAIR_DIM, |i, j| {
                Complex64::new(ka[i / 3][j / 3] * kd[i % 3][j % 3], 0.0)
            });
            total += unitary_superop(&k);
        }
    }
    total
}

/// `K rho K^dag` as a superoperator on row-major vectorised matrices.
pub fn unitary_superop(k: &CMatrix) -> CMatrix {
    k.kronecker(&k.conjugate())
}

fn trace_row() -> DVector<Complex64> {
    let mut t = DVector::zeros(SUPER_DIM);
    for i in 0..PAIR_DIM {
        t[i * PAIR_DIM + i] = Complex64::new(1.0, 0.0);
    }
    t
}

/// Process of one noisy pulse on the ancilla/data pair.
#[derive(Clone, Debug)]
pub struct GammaMatrix {
    pub dim: usize,
    /// `vec(E(rho)) = entries * vec(rho)`.
    pub entries: CMatrix,
    /// `leaked . vec(rho)` is the weight lost to leakage.
    pub leaked: DVector<Complex64>,
    /// Noiseless pair propagator of the same pulse.
    pub noiseless: CMatrix,
    pub drained: bool,
}

impl GammaMatrix {
    pub fn identity() -> Self {
        GammaMatrix {
            dim: PAIR_DIM,
            entries: CMatrix::identity(SUPER_DIM, SUPER_DIM),
            leaked: DVector::zeros(SUPER_DIM),
            noiseless: CMatrix::identity(PAIR_DIM, PAIR_DIM),
            drained: false,
        }
    }

    /// Image of the density matrix `rho` (9x9).
    pub fn apply(&self, rho: &CMatrix) -> CMatrix {
        let v = DVector::from_iterator(SUPER_DIM, rho.transpose().iter().copied());
        let out = &self.entries * v;
        CMatrix::from_row_slice(PAIR_DIM, PAIR_DIM, out.as_slice())
    }

    pub fn leaked_weight(&self, rho: &CMatrix) -> f64 {
        let v = DVector::from_iterator(SUPER_DIM, rho.transpose().iter().copied());
        self.leaked.dot(&v).re
    }

    /// Largest output Rydberg population over the computational inputs.
    pub fn rydberg_population(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for &b in &COMPUTATIONAL {
            let mut rho = CMatrix::zeros(PAIR_DIM, PAIR_DIM);
            rho[(b, b)] = Complex64::new(1.0, 0.0);
            let out = self.apply(&rho);
            let pop: f64 = (0..PAIR_DIM)
                .filter(|&i| i / 3 == RYD || i % 3 == RYD)
                .map(|i| out[(i, i)].re)
                .sum();
            worst = worst.max(pop.abs());
        }
        worst
    }
}

/// Trotterised Kraus evolution of the pair through the whole waveform.
///
/// Each Trotter step is `D(dt/2) U D(dt/2)` with `D` the two-qutrit decay
/// channel; the symmetric split keeps the splitting error at `O(dt^2)`.
pub fn propagate_gamma(
    waveform: &ControlWaveform,
    geometry: &PlaquetteGeometry,
    data: usize,
    decay: &DecayParameters,
) -> Result<GammaMatrix> {
    waveform.validate()?;
    geometry.validate()?;
    decay.validate()?;
    let steps = waveform.trotter_steps_per_slice;
    let trace = trace_row();
    let mut gamma = GammaMatrix::identity();
    gamma.noiseless = pair_unitary(waveform, geometry, data)?;

    for (index, slice) in waveform.slices.iter().enumerate() {
        let dt = slice.duration / steps as f64;
        if decay.total() * dt >= 1.0 {
            return Err(Error::StepSize {
                product: decay.total() * dt,
            });
        }
        let half = pair_superop_from_qutrit(&qutrit_decay_kraus(decay, dt / 2.0)?);
        let leak_half = &trace - half.transpose() * &trace;
        let u = unitary_superop(&build_step_propagator(waveform, geometry, data, index)?);
        let step = &half * &u * &half;
        let leak_step = &leak_half + (&u * &half).transpose() * &leak_half;
        for _ in 0..steps {
            gamma.leaked += gamma.entries.transpose() * &leak_step;
            gamma.entries = &step * &gamma.entries;
        }
    }
    Ok(gamma)
}

/// End-of-cycle drain: leftover Rydberg weight returns to `|1>` or is erased
/// in the ratio `gamma : omega_leak`.
pub fn apply_measurement_drain(gamma: &GammaMatrix, decay: &DecayParameters) -> Result<GammaMatrix> {
    if !decay.measurement_drain {
        return Err(Error::DrainDisabled);
    }
    let drain = pair_superop_from_qutrit(&qutrit_drain_kraus(decay));
    let trace = trace_row();
    let leak = &trace - drain.transpose() * &trace;
    let mut out = gamma.clone();
    out.leaked += gamma.entries.transpose() * leak;
    out.entries = drain * &gamma.entries;
    out.drained = true;
    Ok(out)
}

/// Twirled pair channel: the diagonal of the process matrix in the
/// ancilla (x) data Pauli basis, plus the erased weight.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChiDiagonal {
    /// Indexed like [`all_strings`]`(2)`; site 0 is the ancilla.
    pub probs: Vec<f64>,
    pub erasure_weight: f64,
    pub off_diagonal_mass: f64,
    pub qubit_roles: (usize, usize),
}

impl ChiDiagonal {
    pub fn identity() -> Self {
        let mut probs = vec![0.0; 16];
        probs[0] = 1.0;
        ChiDiagonal {
            probs,
            erasure_weight: 0.0,
            off_diagonal_mass: 0.0,
            qubit_roles: (0, 1),
        }
    }

    /// Channel with the given `(string, probability)` entries; the identity
    /// carries whatever is left after `erasure_weight`.
    pub fn from_entries(entries: &[(&str, f64)], erasure_weight: f64) -> Result<Self> {
        let labels = all_strings(2);
        let mut probs = vec![0.0; 16];
        for (label, p) in entries {
            let s: PauliString = label.parse()?;
            let idx = labels
                .iter()
                .position(|l| *l == s)
                .ok_or_else(|| Error::PauliParse(label.to_string()))?;
            probs[idx] += p;
        }
        probs[0] += 1.0 - erasure_weight - probs.iter().sum::<f64>();
        if let Some((i, &v)) = probs.iter().enumerate().find(|(_, v)| **v < 0.0) {
            return Err(Error::NegativeProbability {
                label: labels[i].to_string(),
                value: v,
            });
        }
        Ok(ChiDiagonal {
            probs,
            erasure_weight,
            off_diagonal_mass: 0.0,
            qubit_roles: (0, 1),
        })
    }

    pub fn prob(&self, label: &str) -> f64 {
        let s: PauliString = match label.parse() {
            Ok(s) => s,
            Err(_) => return 0.0,
        };
        all_strings(2)
            .iter()
            .position(|l| *l == s)
            .map(|i| self.probs[i])
            .unwrap_or(0.0)
    }

    pub fn entries(&self) -> impl Iterator<Item = (PauliString, f64)> + '_ {
        all_strings(2).into_iter().zip(self.probs.iter().copied())
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum::<f64>() + self.erasure_weight
    }

    /// Total-variation distance, erasure included as an outcome.
    pub fn tv_distance(&self, other: &ChiDiagonal) -> f64 {
        let body: f64 = self.probs.iter().zip(&other.probs).map(|(a, b)| (a - b).abs()).sum();
        0.5 * (body + (self.erasure_weight - other.erasure_weight).abs())
    }

    pub fn labelled(&self) -> BTreeMap<String, f64> {
        self.entries().map(|(s, p)| (s.to_string(), p)).collect()
    }
}

fn two_qubit_paulis() -> Vec<CMatrix> {
    all_strings(2)
        .iter()
        .map(|s| {
            let (a, d) = (s.get(0).matrix(), s.get(1).matrix());
            CMatrix::from_fn(4, 4, |i, j| a[i / 2][j / 2] * d[i % 2][j % 2])
        })
        .collect()
}

/// Full 16x16 process matrix of the computational restriction of `gamma`,
/// in the frame of `ideal` (4x4): `chi_{mu nu} = 4^-2 sum P_mu[b,a] conj(P_nu[d,c]) S~[(a,c),(b,d)]`.
pub fn chi_matrix(gamma: &GammaMatrix, ideal: &CMatrix) -> Result<CMatrix> {
    if ideal.nrows() != 4 || ideal.ncols() != 4 {
        return Err(Error::InvalidArgument(format!(
            "ideal unitary must be 4x4, got {}x{}",
            ideal.nrows(),
            ideal.ncols()
        )));
    }
    let s = |a: usize, c: usize, b: usize, d: usize| {
        gamma.entries[(
            COMPUTATIONAL[a] * PAIR_DIM + COMPUTATIONAL[c],
            COMPUTATIONAL[b] * PAIR_DIM + COMPUTATIONAL[d],
        )]
    };
    let mut rel = vec![Complex64::new(0.0, 0.0); 256];
    let at = |a: usize, c: usize, b: usize, d: usize| ((a * 4 + c) * 4 + b) * 4 + d;
    for a in 0..4 {
        for c in 0..4 {
            for b in 0..4 {
                for d in 0..4 {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for a2 in 0..4 {
                        for c2 in 0..4 {
                            acc += ideal[(a2, a)].conj() * ideal[(c2, c)] * s(a2, c2, b, d);
                        }
                    }
                    rel[at(a, c, b, d)] = acc;
                }
            }
        }
    }
    let paulis = two_qubit_paulis();
    let mut chi = CMatrix::zeros(16, 16);
    for (mu, pm) in paulis.iter().enumerate() {
        for (nu, pn) in paulis.iter().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for a in 0..4 {
                for b in 0..4 {
                    let x = pm[(b, a)];
                    if x.norm_sqr() == 0.0 {
                        continue;
                    }
                    for c in 0..4 {
                        for d in 0..4 {
                            let y = pn[(d, c)];
                            if y.norm_sqr() == 0.0 {
                                continue;
                            }
                            acc += x * y.conj() * rel[at(a, c, b, d)];
                        }
                    }
                }
            }
            chi[(mu, nu)] = acc / 16.0;
        }
    }
    Ok(chi)
}

/// Twirls `gamma` in the frame of `ideal`; the off-diagonal process-matrix
/// mass is dropped and reported.
pub fn extract_chi_diagonal(gamma: &GammaMatrix, ideal: &CMatrix) -> Result<ChiDiagonal> {
    let chi = chi_matrix(gamma, ideal)?;
    let labels = all_strings(2);
    let mut probs = Vec::with_capacity(16);
    for mu in 0..16 {
        let v = chi[(mu, mu)].re;
        if v < -1e-9 {
            return Err(Error::NegativeProbability {
                label: labels[mu].to_string(),
                value: v,
            });
        }
        probs.push(v.max(0.0));
    }
    let mut off = 0.0;
    for mu in 0..16 {
        for nu in 0..16 {
            if mu != nu {
                off += chi[(mu, nu)].norm();
            }
        }
    }
    let mut kept = 0.0;
    for &b in &COMPUTATIONAL {
        let mut rho = CMatrix::zeros(PAIR_DIM, PAIR_DIM);
        rho[(b, b)] = Complex64::new(1.0, 0.0);
        let out = gamma.apply(&rho);
        kept += COMPUTATIONAL.iter().map(|&i| out[(i, i)].re).sum::<f64>();
    }
    Ok(ChiDiagonal {
        probs,
        erasure_weight: 1.0 - kept / 4.0,
        off_diagonal_mass: off,
        qubit_roles: (0, 1),
    })
}

/// The reference gate of a pulse: CZ with the local phases of its noiseless run.
pub fn ideal_gate(gamma: &GammaMatrix) -> CMatrix {
    local_cz_target(&computational_block(&gamma.noiseless))
}

/// Propagate, drain and twirl in one call.
pub fn pair_channel(
    waveform: &ControlWaveform,
    geometry: &PlaquetteGeometry,
    data: usize,
    decay: &DecayParameters,
) -> Result<ChiDiagonal> {
    let g = propagate_gamma(waveform, geometry, data, decay)?;
    let g = apply_measurement_drain(&g, decay)?;
    extract_chi_diagonal(&g, &ideal_gate(&g))
}

/// Serialised channel record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelDocument {
    pub protocol: String,
    pub gamma: f64,
    pub omega_leak: f64,
    pub trotter_steps: usize,
    pub probs: BTreeMap<String, f64>,
    /// Probability that the ancilla reports a flipped outcome.
    pub q: f64,
    pub erasure_weight: f64,
    pub off_diagonal_mass: f64,
}

impl ChannelDocument {
    pub fn new(waveform: &ControlWaveform, decay: &DecayParameters, chi: &ChiDiagonal) -> Self {
        // an X or Y on the ancilla before its final Hadamard flips the Z-basis readout
        let q = chi
            .entries()
            .filter(|(s, _)| s.get(0).z())
            .map(|(_, p)| p)
            .sum();
        ChannelDocument {
            protocol: waveform.protocol.clone(),
            gamma: decay.gamma,
            omega_leak: decay.omega_leak,
            trotter_steps: waveform.trotter_steps_per_slice,
            probs: chi.labelled(),
            q,
            erasure_weight: chi.erasure_weight,
            off_diagonal_mass: chi.off_diagonal_mass,
        }
    }
}

/// Helper for tests and examples: `|a d><a d|` for computational labels.
pub fn basis_projector(a: usize, d: usize) -> CMatrix {
    let mut rho = DMatrix::zeros(PAIR_DIM, PAIR_DIM);
    rho[(pair_index(a, d), pair_index(a, d))] = Complex64::new(1.0, 0.0);
    rho
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pulse::{jaksch_waveform, time_optimal_waveform};

    fn cz() -> CMatrix {
        let mut m = CMatrix::identity(4, 4);
        m[(3, 3)] = Complex64::new(-1.0, 0.0);
        m
    }

    fn gamma_of_unitary(u4: &CMatrix) -> GammaMatrix {
        let mut u = CMatrix::identity(PAIR_DIM, PAIR_DIM);
        for i in 0..4 {
            for j in 0..4 {
                u[(COMPUTATIONAL[i], COMPUTATIONAL[j])] = u4[(i, j)];
            }
        }
        GammaMatrix {
            entries: unitary_superop(&u),
            noiseless: u,
            ..GammaMatrix::identity()
        }
    }

    #[test]
    fn noiseless_cz_in_its_own_frame() {
        let chi = extract_chi_diagonal(&gamma_of_unitary(&cz()), &cz()).unwrap();
        assert!((chi.prob("II") - 1.0).abs() < 1e-12);
        assert!(chi.erasure_weight.abs() < 1e-12);
    }

    #[test]
    fn noiseless_cz_against_identity_frame() {
        let chi = extract_chi_diagonal(&gamma_of_unitary(&cz()), &CMatrix::identity(4, 4)).unwrap();
        for l in ["II", "IZ", "ZI", "ZZ"] {
            assert!((chi.prob(l) - 0.25).abs() < 1e-12, "{l}");
        }
        assert!(chi.off_diagonal_mass > 0.5);
    }

    #[test]
    fn noiseless_jaksch_is_identity_channel() {
        let wf = jaksch_waveform(1.0).unwrap();
        let chi = pair_channel(&wf, &PlaquetteGeometry::clockwise(4), 0, &DecayParameters::noiseless()).unwrap();
        assert!((chi.prob("II") - 1.0).abs() < 1e-10);
        assert!((chi.total() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn drain_fixed_point_and_branching() {
        let decay = DecayParameters::new(1e-2, 1e-2).unwrap();
        let g = apply_measurement_drain(&GammaMatrix::identity(), &decay).unwrap();
        let rho = basis_projector(1, 1);
        assert!((g.apply(&rho) - &rho).norm() < 1e-15);

        let mut rho = CMatrix::zeros(PAIR_DIM, PAIR_DIM);
        rho[(pair_index(0, 1), pair_index(0, 1))] = Complex64::new(0.99, 0.0);
        rho[(pair_index(0, RYD), pair_index(0, RYD))] = Complex64::new(0.01, 0.0);
        assert!((g.leaked_weight(&rho) - 0.005).abs() < 1e-12);
        let out = g.apply(&rho);
        assert!((out[(pair_index(0, 1), pair_index(0, 1))].re - 0.995).abs() < 1e-12);
    }

    #[test]
    fn drain_without_leak_returns_everything() {
        let decay = DecayParameters::new(1e-2, 0.0).unwrap();
        let g = apply_measurement_drain(&GammaMatrix::identity(), &decay).unwrap();
        let mut rho = CMatrix::zeros(PAIR_DIM, PAIR_DIM);
        rho[(pair_index(RYD, 0), pair_index(RYD, 0))] = Complex64::new(0.3, 0.0);
        let out = g.apply(&rho);
        assert!((out[(pair_index(1, 0), pair_index(1, 0))].re - 0.3).abs() < 1e-15);
        assert_eq!(g.leaked_weight(&rho), 0.0);
    }

    #[test]
    fn disabled_drain_is_an_error() {
        let mut decay = DecayParameters::noiseless();
        decay.measurement_drain = false;
        assert!(matches!(
            apply_measurement_drain(&GammaMatrix::identity(), &decay),
            Err(Error::DrainDisabled)
        ));
    }

    #[test]
    fn oversized_step_is_rejected() {
        let wf = jaksch_waveform(1.0).unwrap().with_trotter_steps(1);
        let decay = DecayParameters::new(0.5, 0.0).unwrap();
        assert!(matches!(
            propagate_gamma(&wf, &PlaquetteGeometry::clockwise(4), 0, &decay),
            Err(Error::StepSize { .. })
        ));
    }

    #[test]
    fn trace_deficit_equals_leakage() {
        let wf = jaksch_waveform(1.0).unwrap();
        let decay = DecayParameters::new(3e-2, 2e-2).unwrap();
        let g = propagate_gamma(&wf, &PlaquetteGeometry::clockwise(4), 0, &decay).unwrap();
        let g = apply_measurement_drain(&g, &decay).unwrap();
        assert!(g.rydberg_population() < 1e-12);
        for &b in &COMPUTATIONAL {
            let mut rho = CMatrix::zeros(PAIR_DIM, PAIR_DIM);
            rho[(b, b)] = Complex64::new(1.0, 0.0);
            let out = g.apply(&rho);
            let deficit = 1.0 - out.trace().re;
            assert!((deficit - g.leaked_weight(&rho)).abs() < 1e-12);
        }
    }

    #[test]
    fn time_optimal_channel_is_normalised() {
        let wf = time_optimal_waveform();
        let decay = DecayParameters::new(1e-3, 1e-3).unwrap();
        let chi = pair_channel(&wf, &PlaquetteGeometry::clockwise(4), 0, &decay).unwrap();
        assert!((chi.total() - 1.0).abs() < 1e-10);
        assert!(chi.erasure_weight > 0.0);
    }

    #[test]
    fn finite_blockade_matches_perfect_at_large_v() {
        let wf = jaksch_waveform(1.0).unwrap();
        let decay = DecayParameters::new(1e-3, 0.0).unwrap();
        let mut g = PlaquetteGeometry::clockwise(4);
        let a = pair_channel(&wf, &g, 0, &decay).unwrap();
        g.blockade = crate::pulse::Blockade::Finite;
        g.c6 = 1e4;
        let b = pair_channel(&wf, &g, 0, &decay).unwrap();
        assert!(a.tv_distance(&b) < 1e-3);
    }
}
