//! Laser control waveforms for a single ancilla/data entangling pulse and the
//! qutrit-pair propagators they generate.
//!
//! Every qubit is a qutrit `{|0>, |1>, |r>}`. Qubit 0 of a waveform is the
//! stabiliser ancilla, qubit 1 the data qubit it is entangled with. Times are
//! in units of `1/omega_max`, frequencies in units of `omega_max`.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

/// Local level index of the Rydberg state.
pub const RYD: usize = 2;
/// Dimension of the ancilla/data qutrit pair.
pub const PAIR_DIM: usize = 9;

/// Index of `|a d>` in the pair basis.
pub const fn pair_index(a: usize, d: usize) -> usize {
    a * 3 + d
}

/// Pair-basis indices of the four computational states, in `|00>, |01>, |10>, |11>` order.
pub const COMPUTATIONAL: [usize; 4] = [pair_index(0, 0), pair_index(0, 1), pair_index(1, 0), pair_index(1, 1)];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QubitControl {
    pub rabi: f64,
    pub phase: f64,
    pub detuning: f64,
}

impl QubitControl {
    pub const OFF: QubitControl = QubitControl {
        rabi: 0.0,
        phase: 0.0,
        detuning: 0.0,
    };

    pub fn resonant(rabi: f64) -> Self {
        QubitControl {
            rabi,
            phase: 0.0,
            detuning: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Slice {
    pub duration: f64,
    /// `[ancilla, data]`
    pub controls: [QubitControl; 2],
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControlBounds {
    pub omega_max: f64,
    pub delta_max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub source: String,
    pub sha256: String,
}

/// Piecewise-constant controls for one two-qubit entangling pulse.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControlWaveform {
    pub protocol: String,
    pub slices: Vec<Slice>,
    pub trotter_steps_per_slice: usize,
    pub bounds: ControlBounds,
    pub provenance: Option<Provenance>,
}

impl ControlWaveform {
    pub fn total_duration(&self) -> f64 {
        self.slices.iter().map(|s| s.duration).sum()
    }

    pub fn total_steps(&self) -> usize {
        self.slices.len() * self.trotter_steps_per_slice
    }

    pub fn with_trotter_steps(mut self, steps: usize) -> Self {
        self.trotter_steps_per_slice = steps;
        self
    }

    /// Checks the slice invariants; the error names the first offending slice.
    pub fn validate(&self) -> Result<()> {
        if self.trotter_steps_per_slice == 0 {
            return Err(Error::InvalidArgument("trotter_steps_per_slice must be >= 1".into()));
        }
        if self.slices.is_empty() {
            return Err(Error::InvalidArgument("waveform has no slices".into()));
        }
        let tol = 1e-9 * self.bounds.omega_max.max(1.0);
        for (i, s) in self.slices.iter().enumerate() {
            if !(s.duration > 0.0) || !s.duration.is_finite() {
                return Err(Error::BoundViolation {
                    slice: i,
                    msg: format!("duration {} must be positive", s.duration),
                });
            }
            for (q, c) in s.controls.iter().enumerate() {
                if !(c.rabi >= 0.0 && c.rabi <= self.bounds.omega_max + tol) {
                    return Err(Error::BoundViolation {
                        slice: i,
                        msg: format!(
                            "qubit {q}: rabi amplitude {} outside [0, {}]",
                            c.rabi, self.bounds.omega_max
                        ),
                    });
                }
                if c.detuning.abs() > self.bounds.delta_max + tol {
                    return Err(Error::BoundViolation {
                        slice: i,
                        msg: format!(
                            "qubit {q}: detuning {} outside [-{d}, {d}]",
                            c.detuning,
                            d = self.bounds.delta_max
                        ),
                    });
                }
                if !c.phase.is_finite() {
                    return Err(Error::BoundViolation {
                        slice: i,
                        msg: format!("qubit {q}: non-finite phase"),
                    });
                }
            }
        }
        Ok(())
    }

    /// Serialises to the tab-separated waveform table read by [`parse_waveform`].
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# protocol: {}", self.protocol);
        let _ = writeln!(out, "# qubits: 2");
        let _ = writeln!(out, "# omega_max: {}", self.bounds.omega_max);
        let _ = writeln!(out, "# delta_max: {}", self.bounds.delta_max);
        let _ = writeln!(out, "# trotter_steps: {}", self.trotter_steps_per_slice);
        let _ = writeln!(out, "duration\tomega_0\tphi_0\tdelta_0\tomega_1\tphi_1\tdelta_1");
        for s in &self.slices {
            let [a, d] = s.controls;
            let _ = writeln!(
                out,
                "{:?}\t{:?}\t{:?}\t{:?}\t{:?}\t{:?}\t{:?}",
                s.duration, a.rabi, a.phase, a.detuning, d.rabi, d.phase, d.detuning
            );
        }
        out
    }
}

/// The resonant pi / 2pi / pi sequence with Rabi frequency `omega_max`.
///
/// The data qubit takes the two pi pulses and the ancilla the 2pi pulse, so a
/// decay of the data atom never leaves the ancilla stranded in `|r>`.
pub fn jaksch_waveform(omega_max: f64) -> Result<ControlWaveform> {
    if !(omega_max > 0.0) || !omega_max.is_finite() {
        return Err(Error::InvalidArgument(format!("omega_max must be positive, got {omega_max}")));
    }
    let pi_pulse = Slice {
        duration: PI / omega_max,
        controls: [QubitControl::OFF, QubitControl::resonant(omega_max)],
    };
    let two_pi = Slice {
        duration: 2.0 * PI / omega_max,
        controls: [QubitControl::resonant(omega_max), QubitControl::OFF],
    };
    Ok(ControlWaveform {
        protocol: "jaksch".into(),
        slices: vec![pi_pulse.clone(), two_pi, pi_pulse],
        trotter_steps_per_slice: 20,
        bounds: ControlBounds {
            omega_max,
            delta_max: 0.0,
        },
        provenance: None,
    })
}

/// Reads a waveform table from disk, recording its path and digest.
pub fn load_waveform(path: impl AsRef<Path>) -> Result<ControlWaveform> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_waveform(&text, &path.display().to_string())
}

/// The time-optimal phase-modulated pulse shipped with the crate (100 slices,
/// `T = 7.612 / omega_max`).
pub fn time_optimal_waveform() -> ControlWaveform {
    parse_waveform(include_str!("../data/time_optimal.tsv"), "builtin:time_optimal.tsv")
        .expect("bundled waveform table is valid")
}

/// Parses the waveform table format.
///
/// ```text
/// # protocol: time-optimal
/// # omega_max: 1.0
/// # delta_max: 0.0
/// # trotter_steps: 1            (optional, default 1)
/// duration  omega_0  phi_0  delta_0  omega_1  phi_1  delta_1
/// 0.07612   1        5.685  0        1        5.685  0
/// ```
///
/// Columns may be separated by tabs or spaces. Qubit 0 is the ancilla.
pub fn parse_waveform(text: &str, source: &str) -> Result<ControlWaveform> {
    let mut protocol = None;
    let mut omega_max = None;
    let mut delta_max = 0.0;
    let mut steps = 1usize;
    let mut header_seen = false;
    let mut slices = Vec::new();

    for (lineno, raw) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(meta) = line.strip_prefix('#') {
            let Some((key, value)) = meta.split_once(':') else {
                continue;
            };
            let value = value.trim();
            let num = |v: &str| {
                v.parse::<f64>().map_err(|e| Error::WaveformParse {
                    line: line_no,
                    msg: format!("bad number {v:?}: {e}"),
                })
            };
            match key.trim() {
                "protocol" => protocol = Some(value.to_string()),
                "omega_max" => omega_max = Some(num(value)?),
                "delta_max" => delta_max = num(value)?,
                "trotter_steps" => {
                    steps = value.parse().map_err(|e| Error::WaveformParse {
                        line: line_no,
                        msg: format!("bad trotter_steps {value:?}: {e}"),
                    })?
                }
                "qubits" => {
                    if value != "2" {
                        return Err(Error::WaveformParse {
                            line: line_no,
                            msg: format!("only two-qubit pulses are supported, got {value}"),
                        });
                    }
                }
                _ => {}
            }
            continue;
        }
        if !header_seen {
            let cols: Vec<&str> = line.split_whitespace().collect();
            let expected = ["duration", "omega_0", "phi_0", "delta_0", "omega_1", "phi_1", "delta_1"];
            if cols != expected {
                return Err(Error::WaveformParse {
                    line: line_no,
                    msg: format!("expected column header {expected:?}, got {cols:?}"),
                });
            }
            header_seen = true;
            continue;
        }
        let vals = line
            .split_whitespace()
            .map(|v| {
                v.parse::<f64>().map_err(|e| Error::WaveformParse {
                    line: line_no,
                    msg: format!("bad number {v:?}: {e}"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        if vals.len() != 7 {
            return Err(Error::WaveformParse {
                line: line_no,
                msg: format!("expected 7 columns, got {}", vals.len()),
            });
        }
        slices.push(Slice {
            duration: vals[0],
            controls: [
                QubitControl {
                    rabi: vals[1],
                    phase: vals[2],
                    detuning: vals[3],
                },
                QubitControl {
                    rabi: vals[4],
                    phase: vals[5],
                    detuning: vals[6],
                },
            ],
        });
    }

    if !header_seen {
        return Err(Error::WaveformParse {
            line: text.lines().count(),
            msg: "missing column header".into(),
        });
    }
    let omega_max = omega_max.ok_or_else(|| Error::WaveformParse {
        line: 0,
        msg: "missing `# omega_max:` metadata".into(),
    })?;
    let digest = hex::encode(Sha256::digest(text.as_bytes()));
    let waveform = ControlWaveform {
        protocol: protocol.unwrap_or_else(|| "unnamed".into()),
        slices,
        trotter_steps_per_slice: steps,
        bounds: ControlBounds { omega_max, delta_max },
        provenance: Some(Provenance {
            source: source.to_string(),
            sha256: digest,
        }),
    };
    waveform.validate()?;
    Ok(waveform)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Blockade {
    /// `|rr>` is removed from the dynamics.
    Perfect,
    /// Van der Waals shift `C6 / R^6` on `|rr>`.
    Finite,
}

/// Stabiliser plaquette layout: which data qubits are entangled with the
/// ancilla, in which order, and at what distance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlaquetteGeometry {
    pub n_data: usize,
    /// Stabilisation sequence; entry `s` is the data qubit entangled at step `s`.
    pub pair_order: Vec<usize>,
    pub c6: f64,
    /// Ancilla/data distance for each data qubit.
    pub distances: Vec<f64>,
    pub blockade: Blockade,
}

impl PlaquetteGeometry {
    /// Weight-`n_data` plaquette with clockwise order and perfect blockade.
    /// The finite-blockade parameters give `V = 100` (in units of `omega_max`).
    pub fn clockwise(n_data: usize) -> Self {
        PlaquetteGeometry {
            n_data,
            pair_order: (0..n_data).collect(),
            c6: 100.0,
            distances: vec![1.0; n_data],
            blockade: Blockade::Perfect,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_data != 2 && self.n_data != 4 {
            return Err(Error::Geometry(format!("n_data must be 2 or 4, got {}", self.n_data)));
        }
        let mut seen = vec![false; self.n_data];
        if self.pair_order.len() != self.n_data {
            return Err(Error::Geometry("pair_order length differs from n_data".into()));
        }
        for &q in &self.pair_order {
            if q >= self.n_data || seen[q] {
                return Err(Error::Geometry(format!("pair_order {:?} is not a permutation", self.pair_order)));
            }
            seen[q] = true;
        }
        if self.distances.len() != self.n_data || self.distances.iter().any(|&r| !(r > 0.0)) {
            return Err(Error::Geometry("every distance must be positive".into()));
        }
        Ok(())
    }

    /// Rydberg-Rydberg shift for the pair containing data qubit `data`.
    pub fn interaction(&self, data: usize) -> f64 {
        self.c6 / self.distances[data].powi(6)
    }
}

/// Pair Hamiltonian `sum_i Omega_i/2 (e^{i phi_i}|r><1| + h.c.) + Delta_i |r><r| + V |rr><rr|`.
///
/// With `interaction = None` the doubly excited state is decoupled entirely.
pub fn pair_hamiltonian(controls: &[QubitControl; 2], interaction: Option<f64>) -> CMatrix {
    let mut h = CMatrix::zeros(PAIR_DIM, PAIR_DIM);
    for (site, c) in controls.iter().enumerate() {
        let couple = Complex64::from_polar(c.rabi / 2.0, c.phase);
        for other in 0..3 {
            let idx = |level: usize| {
                if site == 0 {
                    pair_index(level, other)
                } else {
                    pair_index(other, level)
                }
            };
            let (g, r) = (idx(1), idx(RYD));
            h[(r, g)] += couple;
            h[(g, r)] += couple.conj();
            h[(r, r)] += Complex64::new(c.detuning, 0.0);
        }
    }
    let rr = pair_index(RYD, RYD);
    match interaction {
        Some(v) => h[(rr, rr)] += Complex64::new(v, 0.0),
        None => {
            for k in 0..PAIR_DIM {
                h[(rr, k)] = Complex64::new(0.0, 0.0);
                h[(k, rr)] = Complex64::new(0.0, 0.0);
            }
        }
    }
    h
}

/// `exp(-i H dt)` for a Hermitian `h`, through its eigendecomposition.
pub fn expm_hermitian(h: &CMatrix, dt: f64) -> CMatrix {
    let eig = h.clone().symmetric_eigen();
    let n = h.nrows();
    let mut phases = CMatrix::zeros(n, n);
    for k in 0..n {
        phases[(k, k)] = Complex64::from_polar(1.0, -eig.eigenvalues[k] * dt);
    }
    &eig.eigenvectors * phases * eig.eigenvectors.adjoint()
}

/// One Trotter step `exp(-i H dt)` of slice `slice_index`, acting on the
/// ancilla and data qubit `data`.
pub fn build_step_propagator(
    waveform: &ControlWaveform,
    geometry: &PlaquetteGeometry,
    data: usize,
    slice_index: usize,
) -> Result<CMatrix> {
    let slice = waveform.slices.get(slice_index).ok_or_else(|| {
        Error::InvalidArgument(format!(
            "slice index {slice_index} out of range ({} slices)",
            waveform.slices.len()
        ))
    })?;
    let v = match geometry.blockade {
        Blockade::Perfect => None,
        Blockade::Finite => Some(geometry.interaction(data)),
    };
    let h = pair_hamiltonian(&slice.controls, v);
    Ok(expm_hermitian(&h, slice.duration / waveform.trotter_steps_per_slice as f64))
}

/// Noiseless pair propagator of the whole waveform.
pub fn pair_unitary(waveform: &ControlWaveform, geometry: &PlaquetteGeometry, data: usize) -> Result<CMatrix> {
    let mut u = CMatrix::identity(PAIR_DIM, PAIR_DIM);
    for s in 0..waveform.slices.len() {
        let step = build_step_propagator(waveform, geometry, data, s)?;
        for _ in 0..waveform.trotter_steps_per_slice {
            u = &step * u;
        }
    }
    Ok(u)
}

/// Time spent in `|r>` by either atom during the noiseless pulse, summed over
/// both atoms and averaged over the four computational inputs (units of
/// `1/omega_max`). Evaluated at the Trotter-step midpoints.
pub fn integrated_rydberg_time(waveform: &ControlWaveform, geometry: &PlaquetteGeometry, data: usize) -> Result<f64> {
    let mut total = 0.0;
    for &input in &COMPUTATIONAL {
        let mut psi = nalgebra::DVector::<Complex64>::zeros(PAIR_DIM);
        psi[input] = Complex64::new(1.0, 0.0);
        for s in 0..waveform.slices.len() {
            let dt = waveform.slices[s].duration / waveform.trotter_steps_per_slice as f64;
            let step = build_step_propagator(waveform, geometry, data, s)?;
            let half = {
                let v = match geometry.blockade {
                    Blockade::Perfect => None,
                    Blockade::Finite => Some(geometry.interaction(data)),
                };
                expm_hermitian(&pair_hamiltonian(&waveform.slices[s].controls, v), dt / 2.0)
            };
            for _ in 0..waveform.trotter_steps_per_slice {
                let mid = &half * &psi;
                let pop: f64 = (0..PAIR_DIM)
                    .map(|i| mid[i].norm_sqr() * ((i / 3 == RYD) as u8 + (i % 3 == RYD) as u8) as f64)
                    .sum();
                total += pop * dt;
                psi = &step * psi;
            }
        }
    }
    Ok(total / 4.0)
}

/// Restriction of a pair operator to the computational states.
pub fn computational_block(u: &CMatrix) -> CMatrix {
    CMatrix::from_fn(4, 4, |i, j| u[(COMPUTATIONAL[i], COMPUTATIONAL[j])])
}

/// Single-qubit Z phases that bring a near-diagonal gate onto CZ, returned as
/// the corrected 4x4 target `diag(u00, u00 e^{ia}, u00 e^{ib}, -u00 e^{i(a+b)})`.
pub fn local_cz_target(block: &CMatrix) -> CMatrix {
    let u00 = block[(0, 0)];
    let g = if u00.norm() > 0.0 { u00 / u00.norm() } else { Complex64::new(1.0, 0.0) };
    let unit = |z: Complex64| if z.norm() > 0.0 { z / z.norm() } else { Complex64::new(1.0, 0.0) };
    let ph_d = unit(block[(1, 1)] / g);
    let ph_a = unit(block[(2, 2)] / g);
    let mut target = CMatrix::zeros(4, 4);
    target[(0, 0)] = g;
    target[(1, 1)] = g * ph_d;
    target[(2, 2)] = g * ph_a;
    target[(3, 3)] = -g * ph_a * ph_d;
    target
}

/// Average gate fidelity of the computational block against CZ up to local Z
/// phases: `(|Tr(V^† U)|^2 + Tr(U^† U)) / 20`.
pub fn cz_fidelity(u: &CMatrix) -> f64 {
    let block = computational_block(u);
    let target = local_cz_target(&block);
    let overlap = (target.adjoint() * &block).trace();
    let norm = (block.adjoint() * &block).trace().re;
    (overlap.norm_sqr() + norm) / 20.0
}
