//! Error distribution of a whole stabiliser measurement.
//!
//! Two models are provided. [`simulate_plaquette`] evolves the ancilla and
//! all data qutrits through the gate sequence as one density matrix, so a
//! Rydberg excitation left behind by one gate keeps blocking the following
//! ones. [`compose_plaquette_channel`] treats every gate as an independent
//! twirled pair channel and pushes the pair errors through the rest of the
//! ideal circuit.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::{pair_channel, qutrit_decay_kraus, qutrit_drain_kraus, ChiDiagonal, DecayParameters};
use crate::error::{Error, Result};
use crate::pauli::{Pauli, PauliString};
use crate::pulse::{build_step_propagator, CMatrix, ControlWaveform, PlaquetteGeometry, RYD};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum StabilizerType {
    X,
    Z,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlaquetteModel {
    Sequential,
    PairComposition,
}

/// Joint distribution of data errors and the measurement flip for one plaquette.
///
/// `probs[mask | flag << n_data]`, where bit `k` of `mask` marks an error on
/// data qubit `k` (geometric index, not stabilisation step). The errors are of
/// the stabiliser's own type: Z for Z-stabilisers, X for X-stabilisers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlaquetteErrorDistribution {
    pub n_data: usize,
    pub stabilizer: StabilizerType,
    pub probs: Vec<f64>,
    pub erasure_weight: f64,
    pub off_diagonal_mass: f64,
    /// Weight on data errors of the other type (zero for both models here).
    pub cross_type_mass: f64,
}

impl PlaquetteErrorDistribution {
    pub fn noiseless(n_data: usize, stabilizer: StabilizerType) -> Self {
        let mut probs = vec![0.0; 1 << (n_data + 1)];
        probs[0] = 1.0;
        PlaquetteErrorDistribution {
            n_data,
            stabilizer,
            probs,
            erasure_weight: 0.0,
            off_diagonal_mass: 0.0,
            cross_type_mass: 0.0,
        }
    }

    /// Independent data errors at rate `p` and readout flips at rate `q`.
    pub fn independent(n_data: usize, p: f64, q: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) || !(0.0..=1.0).contains(&q) {
            return Err(Error::InvalidArgument(format!("rates out of range: p={p}, q={q}")));
        }
        let mut d = Self::noiseless(n_data, StabilizerType::Z);
        for (idx, slot) in d.probs.iter_mut().enumerate() {
            let mask = idx & ((1 << n_data) - 1);
            let k = mask.count_ones() as i32;
            let flag = idx >> n_data == 1;
            *slot = p.powi(k) * (1.0 - p).powi(n_data as i32 - k) * if flag { q } else { 1.0 - q };
        }
        Ok(d)
    }

    /// Distribution supported on the given `(mask, flag, probability)` entries.
    pub fn from_entries(n_data: usize, stabilizer: StabilizerType, entries: &[(usize, bool, f64)]) -> Result<Self> {
        let mut d = Self::noiseless(n_data, stabilizer);
        d.probs[0] = 0.0;
        for &(mask, flag, p) in entries {
            if mask >= 1 << n_data || p < 0.0 {
                return Err(Error::InvalidArgument(format!("bad entry ({mask}, {flag}, {p})")));
            }
            d.probs[mask | (flag as usize) << n_data] += p;
        }
        let total: f64 = d.probs.iter().sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidArgument(format!("entries sum to {total}, not 1")));
        }
        Ok(d)
    }

    pub fn index(&self, mask: usize, flag: bool) -> usize {
        mask | (flag as usize) << self.n_data
    }

    pub fn prob(&self, mask: usize, flag: bool) -> f64 {
        self.probs[self.index(mask, flag)]
    }

    pub fn support(&self) -> impl Iterator<Item = (usize, bool, f64)> + '_ {
        let n = self.n_data;
        self.probs
            .iter()
            .enumerate()
            .map(move |(i, &p)| (i & ((1 << n) - 1), i >> n == 1, p))
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum::<f64>() + self.erasure_weight
    }

    /// Marginal over error count and flag.
    pub fn grouped(&self) -> BTreeMap<(usize, bool), f64> {
        let mut g = BTreeMap::new();
        for (mask, flag, p) in self.support() {
            *g.entry((mask.count_ones() as usize, flag)).or_insert(0.0) += p;
        }
        g
    }

    /// Error count related to `k` by multiplication with the stabiliser itself.
    pub fn congruent_count(&self, k: usize) -> usize {
        self.n_data - k
    }

    /// Probability of a flipped readout.
    pub fn measurement_error(&self) -> f64 {
        self.support().filter(|(_, f, _)| *f).map(|(_, _, p)| p).sum()
    }

    /// Marginal error probability of data qubit `k`.
    pub fn qubit_marginal(&self, k: usize) -> f64 {
        self.support().filter(|(m, _, _)| m >> k & 1 == 1).map(|(_, _, p)| p).sum()
    }

    /// `P(error on j | error on i)` for every `j`.
    pub fn conditional_given(&self, i: usize) -> Vec<f64> {
        let pi = self.qubit_marginal(i);
        (0..self.n_data)
            .map(|j| {
                if pi == 0.0 {
                    return 0.0;
                }
                let joint: f64 = self
                    .support()
                    .filter(|(m, _, _)| m >> i & 1 == 1 && m >> j & 1 == 1)
                    .map(|(_, _, p)| p)
                    .sum();
                joint / pi
            })
            .collect()
    }

    /// The distribution conditioned on no erasure.
    pub fn conditioned_on_kept(&self) -> Self {
        let kept: f64 = self.probs.iter().sum();
        let mut out = self.clone();
        if kept > 0.0 {
            out.probs.iter_mut().for_each(|p| *p /= kept);
        }
        out.erasure_weight = 0.0;
        out
    }

    /// Same distribution with the flag dropped (perfect readout).
    pub fn without_measurement_errors(&self) -> Self {
        let mut out = self.clone();
        let half = 1 << self.n_data;
        for m in 0..half {
            out.probs[m] += out.probs[m + half];
            out.probs[m + half] = 0.0;
        }
        out
    }

    /// Mean number of data errors per plaquette divided by `n_data`.
    pub fn mean_qubit_error(&self) -> f64 {
        (0..self.n_data).map(|k| self.qubit_marginal(k)).sum::<f64>() / self.n_data as f64
    }
}

/// Composes twirled pair channels into a plaquette distribution.
///
/// `pair_channels[s]` is the channel of stabilisation step `s`, which acts on
/// data qubit `geometry.pair_order[s]`. Its ancilla error is pushed through
/// the CZs of the later steps.
pub fn compose_plaquette_channel(
    pair_channels: &[ChiDiagonal],
    geometry: &PlaquetteGeometry,
    stabilizer: StabilizerType,
) -> Result<PlaquetteErrorDistribution> {
    geometry.validate()?;
    let n = geometry.n_data;
    if pair_channels.len() != n {
        return Err(Error::PairCount {
            expected: n,
            got: pair_channels.len(),
        });
    }
    let mut dist: BTreeMap<PauliString, f64> = BTreeMap::new();
    dist.insert(PauliString::identity(n + 1), 1.0);
    for (step, chan) in pair_channels.iter().enumerate() {
        let site = 1 + geometry.pair_order[step];
        let mut next: BTreeMap<PauliString, f64> = BTreeMap::new();
        for (pair_err, p) in chan.entries() {
            if p == 0.0 {
                continue;
            }
            let mut e = PauliString::identity(n + 1);
            e.set(0, pair_err.get(0));
            e.set(site, pair_err.get(1));
            for later in step + 1..n {
                e.conjugate_cz(0, 1 + geometry.pair_order[later]);
            }
            for (acc, q) in &dist {
                *next.entry(acc.mul(&e)?).or_insert(0.0) += q * p;
            }
        }
        dist = next;
    }

    let mut out = PlaquetteErrorDistribution::noiseless(n, stabilizer);
    out.probs[0] = 0.0;
    for (e, p) in &dist {
        let mut mask = 0;
        for k in 0..n {
            let s = e.get(1 + k);
            if s.z() {
                mask |= 1 << k;
            }
            if s.x() {
                out.cross_type_mass += p;
            }
        }
        let flag = e.get(0).z();
        let idx = out.index(mask, flag);
        out.probs[idx] += p;
    }
    let kept: f64 = out.probs.iter().sum();
    out.erasure_weight = 1.0 - kept;
    out.off_diagonal_mass = pair_channels.iter().map(|c| c.off_diagonal_mass).sum();
    Ok(out)
}

/// Pair channel of every stabilisation step, then [`compose_plaquette_channel`].
pub fn composed_plaquette(
    waveform: &ControlWaveform,
    geometry: &PlaquetteGeometry,
    decay: &DecayParameters,
    stabilizer: StabilizerType,
) -> Result<PlaquetteErrorDistribution> {
    let chans = geometry
        .pair_order
        .iter()
        .map(|&q| pair_channel(waveform, geometry, q, decay))
        .collect::<Result<Vec<_>>>()?;
    compose_plaquette_channel(&chans, geometry, stabilizer)
}

/// Density matrix of `sites` qutrits, row-major.
struct Register {
    sites: usize,
    dim: usize,
    rho: Vec<Complex64>,
    levels: Vec<Vec<u8>>,
}

impl Register {
    fn stride(&self, site: usize) -> usize {
        3usize.pow((self.sites - 1 - site) as u32)
    }

    /// Uniform superposition of all computational basis states (unnormalised).
    fn computational_superposition(sites: usize) -> Self {
        let dim = 3usize.pow(sites as u32);
        let levels: Vec<Vec<u8>> = (0..sites)
            .map(|s| {
                let stride = 3usize.pow((sites - 1 - s) as u32);
                (0..dim).map(|i| ((i / stride) % 3) as u8).collect()
            })
            .collect();
        let comp = computational_indices(sites);
        let mut rho = vec![Complex64::new(0.0, 0.0); dim * dim];
        for &i in &comp {
            for &j in &comp {
                rho[i * dim + j] = Complex64::new(1.0, 0.0);
            }
        }
        Register { sites, dim, rho, levels }
    }

    /// `rho -> U rho U^dag` with `U` acting on sites `(a, b)`, pair index `la*3 + lb`.
    fn apply_pair(&mut self, u: &CMatrix, a: usize, b: usize) {
        let (sa, sb) = (self.stride(a), self.stride(b));
        let offsets: Vec<usize> = (0..9).map(|m| (m / 3) * sa + (m % 3) * sb).collect();
        let bases: Vec<usize> = (0..self.dim)
            .filter(|&i| self.levels[a][i] == 0 && self.levels[b][i] == 0)
            .collect();
        let mut uu = [[Complex64::new(0.0, 0.0); 9]; 9];
        let mut nz = Vec::new();
        for m in 0..9 {
            for n in 0..9 {
                uu[m][n] = u[(m, n)];
                if u[(m, n)].norm_sqr() > 0.0 {
                    nz.push((m, n));
                }
            }
        }
        let dim = self.dim;
        let mut buf = [Complex64::new(0.0, 0.0); 9];
        let mut out = [Complex64::new(0.0, 0.0); 9];
        // left multiplication, column by column
        for col in 0..dim {
            for &base in &bases {
                for m in 0..9 {
                    buf[m] = self.rho[(base + offsets[m]) * dim + col];
                }
                out.iter_mut().for_each(|o| *o = Complex64::new(0.0, 0.0));
                for &(m, n) in &nz {
                    out[m] += uu[m][n] * buf[n];
                }
                for m in 0..9 {
                    self.rho[(base + offsets[m]) * dim + col] = out[m];
                }
            }
        }
        // right multiplication by U^dag, row by row
        for row in 0..dim {
            let r = &mut self.rho[row * dim..(row + 1) * dim];
            for &base in &bases {
                for m in 0..9 {
                    buf[m] = r[base + offsets[m]];
                }
                out.iter_mut().for_each(|o| *o = Complex64::new(0.0, 0.0));
                for &(m, n) in &nz {
                    out[m] += buf[n] * uu[m][n].conj();
                }
                for m in 0..9 {
                    r[base + offsets[m]] = out[m];
                }
            }
        }
    }

    /// Applies the qutrit channel `{E1 = diag(1, 1, s), E2 = sqrt(w) |1><r|}` to every site.
    fn relax_all(&mut self, s: f64, w: f64) {
        let dim = self.dim;
        for site in 0..self.sites {
            let stride = self.stride(site);
            let lv = &self.levels[site];
            for i in 0..dim {
                let ri = lv[i] as usize == RYD;
                for j in 0..dim {
                    let rj = lv[j] as usize == RYD;
                    match (ri, rj) {
                        (false, false) => {}
                        (true, true) => {
                            let v = self.rho[i * dim + j];
                            self.rho[i * dim + j] = v * (s * s);
                            if w > 0.0 {
                                self.rho[(i - stride) * dim + (j - stride)] += v * w;
                            }
                        }
                        _ => self.rho[i * dim + j] *= s,
                    }
                }
            }
        }
    }

    fn entry(&self, i: usize, j: usize) -> Complex64 {
        self.rho[i * self.dim + j]
    }
}

fn computational_indices(sites: usize) -> Vec<usize> {
    (0..1usize << sites)
        .map(|x| {
            (0..sites).fold(0, |acc, s| acc * 3 + ((x >> (sites - 1 - s)) & 1))
        })
        .collect()
}

fn run_register(
    waveform: &ControlWaveform,
    geometry: &PlaquetteGeometry,
    decay: &DecayParameters,
    drain_between_gates: bool,
) -> Result<Register> {
    let mut reg = Register::computational_superposition(geometry.n_data + 1);
    let steps = waveform.trotter_steps_per_slice;
    let drain = qutrit_drain_kraus(decay);
    let drain_w = drain[1][1][RYD].powi(2);
    for &q in &geometry.pair_order {
        for (index, slice) in waveform.slices.iter().enumerate() {
            let dt = slice.duration / steps as f64;
            let half = qutrit_decay_kraus(decay, dt / 2.0)?;
            let (s, w) = (half[0][RYD][RYD], half[1][1][RYD].powi(2));
            let u = build_step_propagator(waveform, geometry, q, index)?;
            let noisy = decay.total() > 0.0;
            for _ in 0..steps {
                if noisy {
                    reg.relax_all(s, w);
                }
                reg.apply_pair(&u, 0, 1 + q);
                if noisy {
                    reg.relax_all(s, w);
                }
            }
        }
        if drain_between_gates && decay.measurement_drain {
            reg.relax_all(0.0, drain_w);
        }
    }
    if decay.measurement_drain {
        reg.relax_all(0.0, drain_w);
    }
    Ok(reg)
}

/// Options for [`simulate_plaquette`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SequentialOptions {
    /// Drain Rydberg population after every gate instead of once per cycle.
    pub drain_between_gates: bool,
}

/// Exact density-matrix evolution of the ancilla and all data qutrits.
///
/// Starting from `rho0 = sum_{x,y} |x><y|` over computational strings, the
/// output block `C_xy` determines the whole channel because every qutrit
/// that starts in `|0>` stays there. The reference frame is the noiseless
/// run, and `chi_zz = 4^-N sum_xy C~_xy (-1)^{z.(x^y)}`.
///
/// Without the measurement drain, Rydberg population left at the end counts
/// as erased.
pub fn simulate_plaquette(
    waveform: &ControlWaveform,
    geometry: &PlaquetteGeometry,
    decay: &DecayParameters,
    stabilizer: StabilizerType,
    options: SequentialOptions,
) -> Result<PlaquetteErrorDistribution> {
    waveform.validate()?;
    geometry.validate()?;
    decay.validate()?;
    let n = geometry.n_data;
    let sites = n + 1;
    let noisy = run_register(waveform, geometry, decay, options.drain_between_gates)?;
    let clean = run_register(waveform, geometry, &DecayParameters::noiseless(), false)?;
    let comp = computational_indices(sites);
    let size = comp.len();
    let phase: Vec<Complex64> = comp
        .iter()
        .map(|&i| {
            let z = clean.entry(i, comp[0]);
            if z.norm() > 0.0 {
                z / z.norm()
            } else {
                Complex64::new(1.0, 0.0)
            }
        })
        .collect();
    let mut rel = vec![Complex64::new(0.0, 0.0); size * size];
    for x in 0..size {
        for y in 0..size {
            rel[x * size + y] = noisy.entry(comp[x], comp[y]) * phase[x].conj() * phase[y];
        }
    }
    let chi = walsh_both(&rel, size);
    let norm = (size * size) as f64;

    let mut out = PlaquetteErrorDistribution::noiseless(n, stabilizer);
    out.probs[0] = 0.0;
    let mut off = 0.0;
    for z in 0..size {
        for w in 0..size {
            let v = chi[z * size + w] / norm;
            if z == w {
                if v.re < -1e-9 {
                    return Err(Error::NegativeProbability {
                        label: z_label(z, sites).to_string(),
                        value: v.re,
                    });
                }
                // site 0 is the most significant bit of z
                let flag = z >> n & 1 == 1;
                let mut mask = 0;
                for k in 0..n {
                    if z >> (n - 1 - k) & 1 == 1 {
                        mask |= 1 << k;
                    }
                }
                let idx = out.index(mask, flag);
                out.probs[idx] += v.re.max(0.0);
            } else {
                off += v.norm();
            }
        }
    }
    let kept: f64 = (0..size).map(|x| rel[x * size + x].re).sum::<f64>() / size as f64;
    out.erasure_weight = 1.0 - kept;
    out.off_diagonal_mass = off;
    Ok(out)
}

fn z_label(z: usize, sites: usize) -> PauliString {
    PauliString::new(
        (0..sites)
            .map(|s| if z >> (sites - 1 - s) & 1 == 1 { Pauli::Z } else { Pauli::I })
            .collect(),
    )
}

/// `H m H` for the +-1 Walsh matrix `H[z, x] = (-1)^{z.x}`.
fn walsh_both(m: &[Complex64], size: usize) -> Vec<Complex64> {
    let mut a = m.to_vec();
    for row in a.chunks_mut(size) {
        fwht(row);
    }
    for col in 0..size {
        let mut c: Vec<Complex64> = (0..size).map(|r| a[r * size + col]).collect();
        fwht(&mut c);
        for r in 0..size {
            a[r * size + col] = c[r];
        }
    }
    a
}

fn fwht(v: &mut [Complex64]) {
    let mut h = 1;
    while h < v.len() {
        for i in (0..v.len()).step_by(2 * h) {
            for j in i..i + h {
                let (x, y) = (v[j], v[j + h]);
                v[j] = x + y;
                v[j + h] = x - y;
            }
        }
        h *= 2;
    }
}

/// Plaquette distribution under the chosen model.
pub fn plaquette_distribution(
    waveform: &ControlWaveform,
    geometry: &PlaquetteGeometry,
    decay: &DecayParameters,
    stabilizer: StabilizerType,
    model: PlaquetteModel,
) -> Result<PlaquetteErrorDistribution> {
    match model {
        PlaquetteModel::Sequential => {
            simulate_plaquette(waveform, geometry, decay, stabilizer, SequentialOptions::default())
        }
        PlaquetteModel::PairComposition => composed_plaquette(waveform, geometry, decay, stabilizer),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pulse::jaksch_waveform;

    #[test]
    fn noiseless_composition() {
        let g = PlaquetteGeometry::clockwise(4);
        let chans = vec![ChiDiagonal::identity(); 4];
        let d = compose_plaquette_channel(&chans, &g, StabilizerType::Z).unwrap();
        assert_eq!(d.prob(0, false), 1.0);
        assert_eq!(d.measurement_error(), 0.0);
    }

    #[test]
    fn single_data_error_has_no_propagation_path() {
        let g = PlaquetteGeometry::clockwise(4);
        let mut chans = vec![ChiDiagonal::identity(); 4];
        chans[1] = ChiDiagonal::from_entries(&[("IZ", 0.01)], 0.0).unwrap();
        let d = compose_plaquette_channel(&chans, &g, StabilizerType::Z).unwrap();
        assert!((d.prob(0b0010, false) - 0.01).abs() < 1e-15);
        assert_eq!(d.measurement_error(), 0.0);
    }

    #[test]
    fn ancilla_x_spreads_to_later_qubits() {
        let g = PlaquetteGeometry::clockwise(4);
        let mut chans = vec![ChiDiagonal::identity(); 4];
        chans[1] = ChiDiagonal::from_entries(&[("XI", 0.02)], 0.0).unwrap();
        let d = compose_plaquette_channel(&chans, &g, StabilizerType::Z).unwrap();
        assert!((d.prob(0b1100, false) - 0.02).abs() < 1e-15);
        assert_eq!(d.congruent_count(2), 2);
    }

    #[test]
    fn wrong_pair_count() {
        let g = PlaquetteGeometry::clockwise(4);
        assert!(matches!(
            compose_plaquette_channel(&[ChiDiagonal::identity()], &g, StabilizerType::Z),
            Err(Error::PairCount { expected: 4, got: 1 })
        ));
    }

    #[test]
    fn independent_model_marginals() {
        let d = PlaquetteErrorDistribution::independent(4, 0.1, 0.05).unwrap();
        assert!((d.total() - 1.0).abs() < 1e-12);
        assert!((d.qubit_marginal(2) - 0.1).abs() < 1e-12);
        assert!((d.measurement_error() - 0.05).abs() < 1e-12);
        let g = d.grouped();
        assert!((g[&(1, false)] - 4.0 * 0.1 * 0.9f64.powi(3) * 0.95).abs() < 1e-12);
    }

    #[test]
    fn sequential_noiseless_is_identity() {
        let wf = jaksch_waveform(1.0).unwrap();
        let g = PlaquetteGeometry::clockwise(2);
        let d = simulate_plaquette(&wf, &g, &DecayParameters::noiseless(), StabilizerType::Z, Default::default())
            .unwrap();
        assert!((d.prob(0, false) - 1.0).abs() < 1e-10);
        assert!(d.erasure_weight.abs() < 1e-10);
    }

    #[test]
    fn sequential_matches_composition_with_per_gate_drain() {
        let wf = jaksch_waveform(1.0).unwrap();
        let g = PlaquetteGeometry::clockwise(2);
        let decay = DecayParameters::new(2e-3, 1e-3).unwrap();
        let seq = simulate_plaquette(
            &wf,
            &g,
            &decay,
            StabilizerType::Z,
            SequentialOptions {
                drain_between_gates: true,
            },
        )
        .unwrap();
        let comp = composed_plaquette(&wf, &g, &decay, StabilizerType::Z).unwrap();
        assert!((seq.total() - 1.0).abs() < 1e-10);
        // erasure depends on the input string, so only the averages agree
        assert!((seq.erasure_weight - comp.erasure_weight).abs() < 1e-5, "{} vs {}", seq.erasure_weight, comp.erasure_weight);
        for (a, b) in seq.probs.iter().zip(&comp.probs) {
            assert!((a - b).abs() < 1e-5, "{a} vs {b}");
        }
    }
}
