//! Quenched disorder for the dual spin models.
//!
//! Square lattice (perfect readout): spins sit on the stabilisers that detect
//! the error type, bonds on data qubits. Bond `2*s + dir` leaves site
//! `s = y*l + x` in direction `dir` (0 = +x, 1 = +y). The stabilisers of the
//! other type are the faces; face `(x, y)` owns the bonds
//! `[top, right, bottom, left]` = data qubits `0..4` of its plaquette.
//!
//! Cubic lattice (faulty readout): the gauge lattice dual to the space-time
//! syndrome lattice, periodic in all three directions. Vertex
//! `v = (t*l + y)*l + x`; edge `3*v + dir` (x, y, t); plaquette `3*v + o` with
//! orientation `o` = 0 (xy, readout errors), 1 (xt) and 2 (yt) (data errors).

use std::fmt::Write as _;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng as _;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::plaquette::PlaquetteErrorDistribution;
use crate::rng;

pub const XY: usize = 0;
pub const XT: usize = 1;
pub const YT: usize = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Shape {
    Square { l: usize },
    Cubic { l: usize, lt: usize },
}

impl Shape {
    pub fn sites(&self) -> usize {
        match *self {
            Shape::Square { l } => l * l,
            Shape::Cubic { l, lt } => l * l * lt,
        }
    }

    pub fn edges(&self) -> usize {
        match *self {
            Shape::Square { .. } => 2 * self.sites(),
            Shape::Cubic { .. } => 3 * self.sites(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErasureScenario {
    /// Lost stabilisers stay lost: site-bond erasure.
    NoRefresh,
    /// Stabilisers are refilled each cycle: only data qubits are lost.
    Refresh,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorModel {
    /// Every data qubit flips independently with `p`, every readout with `q`.
    Independent { p: f64, q: f64 },
    /// Every cell draws a joint pattern; shared qubits take the parity of both draws.
    Plaquette(PlaquetteErrorDistribution),
}

impl ErrorModel {
    pub fn digest(&self) -> String {
        let json = serde_json::to_vec(self).unwrap_or_default();
        hex::encode(Sha256::digest(json))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleOptions {
    pub scenario: ErasureScenario,
    /// Cell patterns below this probability are dropped before sampling.
    pub truncation: f64,
}

impl Default for SampleOptions {
    fn default() -> Self {
        SampleOptions {
            scenario: ErasureScenario::NoRefresh,
            truncation: 1e-8,
        }
    }
}

/// One disorder realisation. Erased edges carry sign 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DisorderSample {
    pub shape: Shape,
    /// Square lattice: sign of every bond.
    pub bond_signs: Vec<i8>,
    /// Cubic lattice: sign of every plaquette.
    pub plaquette_signs: Vec<i8>,
    pub erased_edges: Vec<bool>,
    pub erased_sites: Vec<bool>,
    pub seed: u64,
    pub r_bar: f64,
    /// Wrong-sign fraction over unerased data-error elements.
    pub effective_p: f64,
    /// Wrong-sign fraction over unerased readout plaquettes (cubic only).
    pub effective_q: f64,
    pub model_digest: String,
}

impl DisorderSample {
    /// Uniform ferromagnetic square lattice without erasures.
    pub fn clean_square(l: usize) -> Self {
        let shape = Shape::Square { l };
        DisorderSample {
            shape,
            bond_signs: vec![1; shape.edges()],
            plaquette_signs: Vec::new(),
            erased_edges: vec![false; shape.edges()],
            erased_sites: vec![false; shape.sites()],
            seed: 0,
            r_bar: 0.0,
            effective_p: 0.0,
            effective_q: 0.0,
            model_digest: String::new(),
        }
    }

    pub fn clean_cubic(l: usize, lt: usize) -> Self {
        let shape = Shape::Cubic { l, lt };
        DisorderSample {
            shape,
            bond_signs: Vec::new(),
            plaquette_signs: vec![1; 3 * shape.sites()],
            erased_edges: vec![false; shape.edges()],
            erased_sites: vec![false; shape.sites()],
            seed: 0,
            r_bar: 0.0,
            effective_p: 0.0,
            effective_q: 0.0,
            model_digest: String::new(),
        }
    }

    /// Text dump: a header line, then one row per lattice line of signs
    /// (`+`, `-`, `.` for erased).
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "# shape={} seed={} r_bar={:?} model={}",
            serde_json::to_string(&self.shape).unwrap_or_default(),
            self.seed,
            self.r_bar,
            self.model_digest
        );
        let signs = match self.shape {
            Shape::Square { .. } => &self.bond_signs,
            Shape::Cubic { .. } => &self.plaquette_signs,
        };
        let row = match self.shape {
            Shape::Square { l } => 2 * l,
            Shape::Cubic { l, .. } => 3 * l,
        };
        for chunk in signs.chunks(row) {
            for &s in chunk {
                out.push(match s {
                    1 => '+',
                    -1 => '-',
                    _ => '.',
                });
            }
            out.push('\n');
        }
        out
    }

    /// Erased sites must have every incident edge erased.
    pub fn site_closure_holds(&self) -> bool {
        (0..self.erased_sites.len())
            .filter(|&s| self.erased_sites[s])
            .all(|s| incident_edges(self.shape, s).iter().all(|&e| self.erased_edges[e]))
    }
}

/// Square: the four bonds touching site `s`; cubic: the six edges at vertex `s`.
pub fn incident_edges(shape: Shape, s: usize) -> Vec<usize> {
    match shape {
        Shape::Square { l } => {
            let (x, y) = (s % l, s / l);
            let left = y * l + (x + l - 1) % l;
            let down = ((y + l - 1) % l) * l + x;
            vec![2 * s, 2 * s + 1, 2 * left, 2 * down + 1]
        }
        Shape::Cubic { l, lt } => {
            let (x, y, t) = (s % l, (s / l) % l, s / (l * l));
            let v = |x: usize, y: usize, t: usize| (t * l + y) * l + x;
            vec![
                3 * s,
                3 * s + 1,
                3 * s + 2,
                3 * v((x + l - 1) % l, y, t),
                3 * v(x, (y + l - 1) % l, t) + 1,
                3 * v(x, y, (t + lt - 1) % lt) + 2,
            ]
        }
    }
}

/// Bond of the square lattice leaving `(x, y)` in direction `dir`.
pub fn bond(l: usize, x: usize, y: usize, dir: usize) -> usize {
    2 * ((y % l) * l + x % l) + dir
}

/// Bonds of face `(x, y)` in data-qubit order `[top, right, bottom, left]`.
pub fn face_bonds(l: usize, x: usize, y: usize) -> [usize; 4] {
    [bond(l, x, y + 1, 0), bond(l, x + 1, y, 1), bond(l, x, y, 0), bond(l, x, y, 1)]
}

/// Plaquette of the cubic lattice carrying the error of 2D bond `b` in cycle `t`.
pub fn data_plaquette(l: usize, lt: usize, b: usize, t: usize) -> usize {
    let (s, dir) = (b / 2, b % 2);
    let (i, j) = (s % l, s / l);
    let v = |x: usize, y: usize, c: usize| (c * l + y) * l + x;
    let tm = (t + lt - 1) % lt;
    if dir == 0 {
        3 * v(i, (j + l - 1) % l, tm) + YT
    } else {
        3 * v((i + l - 1) % l, j, tm) + XT
    }
}

/// Plaquette of the cubic lattice carrying the readout error of site `s` in cycle `t`.
pub fn readout_plaquette(l: usize, s: usize, t: usize) -> usize {
    let (i, j) = (s % l, s / l);
    3 * ((t * l + (j + l - 1) % l) * l + (i + l - 1) % l) + XY
}

/// Edges of plaquette `p` of the cubic lattice.
pub fn plaquette_edges(l: usize, lt: usize, p: usize) -> [usize; 4] {
    let (vtx, o) = (p / 3, p % 3);
    let (x, y, t) = (vtx % l, (vtx / l) % l, vtx / (l * l));
    let v = |x: usize, y: usize, t: usize| (t % lt * l + y % l) * l + x % l;
    match o {
        XY => [3 * vtx, 3 * v(x, y + 1, t), 3 * vtx + 1, 3 * v(x + 1, y, t) + 1],
        XT => [3 * vtx, 3 * v(x, y, t + 1), 3 * vtx + 2, 3 * v(x + 1, y, t) + 2],
        _ => [3 * vtx + 1, 3 * v(x, y, t + 1) + 1, 3 * vtx + 2, 3 * v(x, y + 1, t) + 2],
    }
}

struct CellSampler {
    index: WeightedIndex<f64>,
    outcomes: Vec<(usize, bool)>,
}

impl CellSampler {
    fn new(dist: &PlaquetteErrorDistribution, truncation: f64) -> Result<Self> {
        let kept = dist.conditioned_on_kept();
        let mut outcomes = Vec::new();
        let mut weights = Vec::new();
        for (mask, flag, p) in kept.support() {
            if p >= truncation && p > 0.0 {
                outcomes.push((mask, flag));
                weights.push(p);
            }
        }
        let index = WeightedIndex::new(&weights)
            .map_err(|e| Error::InvalidArgument(format!("cannot sample plaquette distribution: {e}")))?;
        Ok(CellSampler { index, outcomes })
    }

    fn draw(&self, rng: &mut rng::Rng) -> (usize, bool) {
        self.outcomes[self.index.sample(rng)]
    }
}

fn draw_erasures(shape: Shape, r_bar: f64, scenario: ErasureScenario, rng: &mut rng::Rng) -> (Vec<bool>, Vec<bool>) {
    let mut edges: Vec<bool> = (0..shape.edges()).map(|_| rng.random::<f64>() < r_bar).collect();
    let sites: Vec<bool> = (0..shape.sites())
        .map(|_| {
            let u = rng.random::<f64>();
            scenario == ErasureScenario::NoRefresh && u < r_bar
        })
        .collect();
    for s in (0..sites.len()).filter(|&s| sites[s]) {
        for e in incident_edges(shape, s) {
            edges[e] = true;
        }
    }
    (edges, sites)
}

/// Draws one realisation; identical arguments give identical samples.
pub fn sample_disorder(model: &ErrorModel, r_bar: f64, shape: Shape, seed: u64, opts: SampleOptions) -> Result<DisorderSample> {
    if !(0.0..1.0).contains(&r_bar) {
        return Err(Error::InvalidArgument(format!("r_bar = {r_bar} outside [0, 1)")));
    }
    let (l, lt) = match shape {
        Shape::Square { l } => (l, 1),
        Shape::Cubic { l, lt } => (l, lt),
    };
    if l < 2 || lt < 1 {
        return Err(Error::InvalidArgument(format!("lattice too small: {shape:?}")));
    }
    let mut rng = rng::stream(seed, 0);
    let (erased_edges, erased_sites) = draw_erasures(shape, r_bar, opts.scenario, &mut rng);
    let sampler = match model {
        ErrorModel::Plaquette(d) => Some(CellSampler::new(d, opts.truncation)?),
        ErrorModel::Independent { p, q } => {
            if !(0.0..=1.0).contains(p) || !(0.0..=1.0).contains(q) {
                return Err(Error::InvalidArgument(format!("rates out of range: p={p}, q={q}")));
            }
            None
        }
    };
    let q_marginal = match model {
        ErrorModel::Independent { q, .. } => *q,
        ErrorModel::Plaquette(d) => d.conditioned_on_kept().measurement_error(),
    };

    // data-error parity of every 2D bond in one cycle
    let cycle_flips = |rng: &mut rng::Rng| -> Vec<bool> {
        let mut flips = vec![false; 2 * l * l];
        match (&sampler, model) {
            (Some(s), _) => {
                for y in 0..l {
                    for x in 0..l {
                        let (mask, _) = s.draw(rng);
                        for (k, b) in face_bonds(l, x, y).into_iter().enumerate() {
                            if mask >> k & 1 == 1 {
                                flips[b] ^= true;
                            }
                        }
                    }
                }
            }
            (None, ErrorModel::Independent { p, .. }) => {
                for f in flips.iter_mut() {
                    *f = rng.random::<f64>() < *p;
                }
            }
            _ => unreachable!(),
        }
        flips
    };

    let mut sample = DisorderSample {
        shape,
        bond_signs: Vec::new(),
        plaquette_signs: Vec::new(),
        erased_edges,
        erased_sites,
        seed,
        r_bar,
        effective_p: 0.0,
        effective_q: 0.0,
        model_digest: model.digest(),
    };
    match shape {
        Shape::Square { .. } => {
            let flips = cycle_flips(&mut rng);
            sample.bond_signs = flips
                .iter()
                .zip(&sample.erased_edges)
                .map(|(&f, &e)| if e { 0 } else if f { -1 } else { 1 })
                .collect();
            sample.effective_p = wrong_fraction(&sample.bond_signs);
        }
        Shape::Cubic { .. } => {
            let mut signs = vec![1i8; 3 * shape.sites()];
            for t in 0..lt {
                let flips = cycle_flips(&mut rng);
                for (b, &f) in flips.iter().enumerate() {
                    if f {
                        signs[data_plaquette(l, lt, b, t)] = -1;
                    }
                }
                for s in 0..l * l {
                    let flip = rng.random::<f64>() < q_marginal;
                    if flip && t + 1 < lt {
                        signs[readout_plaquette(l, s, t)] = -1;
                    }
                }
            }
            for (p, sign) in signs.iter_mut().enumerate() {
                if plaquette_edges(l, lt, p).iter().any(|&e| sample.erased_edges[e]) {
                    *sign = 0;
                }
            }
            let data: Vec<i8> = signs.iter().enumerate().filter(|(p, _)| p % 3 != XY).map(|(_, &s)| s).collect();
            let readout: Vec<i8> = signs.iter().enumerate().filter(|(p, _)| p % 3 == XY).map(|(_, &s)| s).collect();
            sample.effective_p = wrong_fraction(&data);
            sample.effective_q = wrong_fraction(&readout);
            sample.plaquette_signs = signs;
        }
    }
    Ok(sample)
}

fn wrong_fraction(signs: &[i8]) -> f64 {
    let live = signs.iter().filter(|&&s| s != 0).count();
    if live == 0 {
        return 0.0;
    }
    signs.iter().filter(|&&s| s == -1).count() as f64 / live as f64
}
