//! (2+1)D random-plaquette gauge model with Wilson-loop classification.
//!
//! `E = -sum_P J_P tau_P U_P`, `U_P` the product of the four edge spins of
//! plaquette `P`. Readout plaquettes (orientation xy) carry `J_time`, which
//! may be infinite; data plaquettes (xt, yt) carry `J_space`. Indexing follows
//! [`crate::disorder`].

use std::collections::BTreeMap;

use rand::{Rng as _, RngCore};
use serde::{Deserialize, Serialize};

use crate::disorder::{plaquette_edges, DisorderSample, Shape, XT, XY, YT};
use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::stats;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Couplings {
    pub j_space: f64,
    /// `f64::INFINITY` makes readout plaquettes hard constraints.
    pub j_time: f64,
}

impl Couplings {
    pub fn isotropic() -> Self {
        Couplings {
            j_space: 1.0,
            j_time: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaugeLattice3D {
    pub l: usize,
    pub lt: usize,
    pub spins: Vec<i8>,
    /// Plaquette signs, 0 when the plaquette touches an erased edge.
    pub tau: Vec<i8>,
    pub edge_active: Vec<bool>,
    pub couplings: Couplings,
    /// Four plaquettes per edge.
    #[serde(skip)]
    edge_plaquettes: Vec<[u32; 4]>,
    /// Four edges per plaquette.
    #[serde(skip)]
    plaquette_edges: Vec<[u32; 4]>,
}

impl GaugeLattice3D {
    pub fn from_sample(sample: &DisorderSample, couplings: Couplings) -> Result<Self> {
        let Shape::Cubic { l, lt } = sample.shape else {
            return Err(Error::InvalidArgument("rpgm needs a cubic disorder sample".into()));
        };
        if l < 2 || lt < 2 {
            return Err(Error::InvalidArgument(format!("gauge lattice {l}x{l}x{lt} too small")));
        }
        if !(couplings.j_space > 0.0) || !(couplings.j_time > 0.0) {
            return Err(Error::InvalidArgument(format!("couplings must be positive: {couplings:?}")));
        }
        let n = 3 * l * l * lt;
        let pe: Vec<[u32; 4]> = (0..n).map(|p| plaquette_edges(l, lt, p).map(|e| e as u32)).collect();
        let mut ep = vec![[0u32; 4]; n];
        let mut fill = vec![0usize; n];
        for (p, edges) in pe.iter().enumerate() {
            for &e in edges {
                ep[e as usize][fill[e as usize]] = p as u32;
                fill[e as usize] += 1;
            }
        }
        debug_assert!(fill.iter().all(|&f| f == 4));
        Ok(GaugeLattice3D {
            l,
            lt,
            spins: vec![1; n],
            tau: sample.plaquette_signs.clone(),
            edge_active: sample.erased_edges.iter().map(|&e| !e).collect(),
            couplings,
            edge_plaquettes: ep,
            plaquette_edges: pe,
        })
    }

    pub fn clean(l: usize, lt: usize) -> Self {
        Self::from_sample(&DisorderSample::clean_cubic(l, lt), Couplings::isotropic()).expect("valid clean lattice")
    }

    #[inline]
    pub fn plaquette_product(&self, p: usize) -> i8 {
        self.plaquette_edges[p].iter().map(|&e| self.spins[e as usize]).product()
    }

    fn coupling(&self, p: usize) -> f64 {
        if p % 3 == XY {
            self.couplings.j_time
        } else {
            self.couplings.j_space
        }
    }

    /// Energy with infinite couplings counted as unit weight on satisfied
    /// plaquettes; violated hard plaquettes give `+inf`.
    pub fn energy(&self) -> f64 {
        (0..self.tau.len()).map(|p| self.plaquette_energy(p)).sum()
    }

    fn plaquette_energy(&self, p: usize) -> f64 {
        let tu = (self.tau[p] * self.plaquette_product(p)) as f64;
        if tu == 0.0 {
            return 0.0;
        }
        let j = self.coupling(p);
        if j.is_infinite() {
            return if tu > 0.0 { -1.0 } else { f64::INFINITY };
        }
        -j * tu
    }

    /// Energy of the data plaquettes in time slice `t`.
    pub fn slice_energy(&self, t: usize) -> f64 {
        let base = 3 * self.l * self.l * t;
        (base..base + 3 * self.l * self.l)
            .filter(|p| p % 3 != XY)
            .map(|p| self.plaquette_energy(p))
            .sum()
    }

    /// `s_e -> sigma_a sigma_b s_e` on every edge `(a, b)`, `tau` updated so
    /// every `tau_P U_P` is unchanged.
    pub fn gauge_transform(&mut self, sigma: &[i8]) {
        let (l, lt) = (self.l, self.lt);
        let next = |v: usize, dir: usize| {
            let (x, y, t) = (v % l, (v / l) % l, v / (l * l));
            match dir {
                0 => (t * l + y) * l + (x + 1) % l,
                1 => (t * l + (y + 1) % l) * l + x,
                _ => (((t + 1) % lt) * l + y) * l + x,
            }
        };
        let flips: Vec<i8> = (0..self.spins.len()).map(|e| sigma[e / 3] * sigma[next(e / 3, e % 3)]).collect();
        for (e, f) in flips.iter().enumerate() {
            self.spins[e] *= f;
        }
        for p in 0..self.tau.len() {
            let f: i8 = self.plaquette_edges[p].iter().map(|&e| flips[e as usize]).product();
            self.tau[p] *= f;
        }
    }

    pub fn edge_count(&self) -> usize {
        self.spins.len()
    }
}

/// Acceptance thresholds indexed by the summed `tau U` of the readout
/// (-2..=2) and data (-4..=4) plaquettes around an edge.
pub struct GaugeAcceptance {
    thresholds: [[u64; 9]; 5],
}

impl GaugeAcceptance {
    pub fn new(couplings: Couplings, temperature: f64) -> Self {
        let mut thresholds = [[0u64; 9]; 5];
        let (kt, ks) = (couplings.j_time / temperature, couplings.j_space / temperature);
        for (a, row) in thresholds.iter_mut().enumerate() {
            for (b, t) in row.iter_mut().enumerate() {
                let (na, nb) = (a as f64 - 2.0, b as f64 - 4.0);
                let term = |k: f64, n: f64| if n == 0.0 { 0.0 } else { 2.0 * k * n };
                let de = term(kt, na) + term(ks, nb);
                let p = if de <= 0.0 { 1.0 } else { (-de).exp() };
                *t = (p * 4294967296.0).ceil().min(4294967296.0) as u64;
            }
        }
        GaugeAcceptance { thresholds }
    }
}

#[inline]
fn try_flip(lattice: &mut GaugeLattice3D, e: usize, table: &GaugeAcceptance, rng: &mut Rng) {
    let (mut nt, mut ns) = (0i32, 0i32);
    for &p in &lattice.edge_plaquettes[e] {
        let p = p as usize;
        let tu = (lattice.tau[p] * lattice.plaquette_product(p)) as i32;
        if p % 3 == XY {
            nt += tu;
        } else {
            ns += tu;
        }
    }
    let th = table.thresholds[(nt + 2) as usize][(ns + 4) as usize];
    if th >= 1 << 32 || (rng.next_u32() as u64) < th {
        lattice.spins[e] = -lattice.spins[e];
    }
}

/// One attempted flip per active edge, in index order.
pub fn gauge_sweep(lattice: &mut GaugeLattice3D, table: &GaugeAcceptance, rng: &mut Rng) {
    for e in 0..lattice.spins.len() {
        if lattice.edge_active[e] {
            try_flip(lattice, e, table, rng);
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LoopPlane {
    Xy,
    Xt,
    Yt,
}

impl LoopPlane {
    fn axes(self) -> (usize, usize, usize) {
        match self {
            LoopPlane::Xy => (0, 1, XY),
            LoopPlane::Xt => (0, 2, XT),
            LoopPlane::Yt => (1, 2, YT),
        }
    }
}

/// Loop shape class: loops with the same perimeter and erasure-corrected area.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LoopKey {
    pub plane: LoopPlane,
    pub r: usize,
    pub s: usize,
    /// Enclosed plaquettes that are not erased.
    pub area: usize,
}

impl LoopKey {
    pub fn perimeter(&self) -> usize {
        2 * (self.r + self.s)
    }
}

/// Every valid rectangular loop up to `max_side`, as edge lists.
pub struct LoopCatalog {
    pub keys: Vec<LoopKey>,
    /// `(key index, edges)`
    loops: Vec<(usize, Vec<u32>)>,
    pub rejected: usize,
}

impl LoopCatalog {
    pub fn build(lattice: &GaugeLattice3D, planes: &[LoopPlane], max_side: usize) -> Self {
        let (l, lt) = (lattice.l, lattice.lt);
        let dims = [l, l, lt];
        let vertex = |c: [usize; 3]| ((c[2] % lt) * l + c[1] % l) * l + c[0] % l;
        let mut keys: Vec<LoopKey> = Vec::new();
        let mut index: BTreeMap<LoopKey, usize> = BTreeMap::new();
        let mut loops = Vec::new();
        let mut rejected = 0;
        for &plane in planes {
            let (u, v, orient) = plane.axes();
            let (mu, mv) = (max_side.min(dims[u] / 2), max_side.min(dims[v] / 2));
            for c0 in 0..l * l * lt {
                let origin = [c0 % l, (c0 / l) % l, c0 / (l * l)];
                for r in 1..=mu {
                    for s in 1..=mv {
                        let at = |du: usize, dv: usize| {
                            let mut c = origin;
                            c[u] += du;
                            c[v] += dv;
                            vertex(c)
                        };
                        let mut edges = Vec::with_capacity(2 * (r + s));
                        for i in 0..r {
                            edges.push((3 * at(i, 0) + u) as u32);
                            edges.push((3 * at(i, s) + u) as u32);
                        }
                        for j in 0..s {
                            edges.push((3 * at(0, j) + v) as u32);
                            edges.push((3 * at(r, j) + v) as u32);
                        }
                        if edges.iter().any(|&e| !lattice.edge_active[e as usize]) {
                            rejected += 1;
                            continue;
                        }
                        let mut area = 0;
                        for i in 0..r {
                            for j in 0..s {
                                if lattice.tau[3 * at(i, j) + orient] != 0 {
                                    area += 1;
                                }
                            }
                        }
                        let key = LoopKey { plane, r, s, area };
                        let k = *index.entry(key).or_insert_with(|| {
                            keys.push(key);
                            keys.len() - 1
                        });
                        loops.push((k, edges));
                    }
                }
            }
        }
        LoopCatalog { keys, loops, rejected }
    }

    /// Mean Wilson loop per key for the current configuration.
    pub fn measure(&self, lattice: &GaugeLattice3D) -> Vec<f64> {
        let mut sum = vec![0.0; self.keys.len()];
        let mut count = vec![0usize; self.keys.len()];
        for (k, edges) in &self.loops {
            let w: i8 = edges.iter().map(|&e| lattice.spins[e as usize]).product();
            sum[*k] += w as f64;
            count[*k] += 1;
        }
        sum.iter().zip(&count).map(|(s, &c)| s / c as f64).collect()
    }

    pub fn multiplicity(&self) -> Vec<usize> {
        let mut count = vec![0usize; self.keys.len()];
        for (k, _) in &self.loops {
            count[*k] += 1;
        }
        count
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnealSchedule {
    /// Strictly decreasing temperatures visited before measuring.
    pub descending: Vec<f64>,
    /// Strictly increasing temperatures at which traces are recorded.
    pub ascending: Vec<f64>,
    pub equilibration_steps: usize,
    pub sample_steps: usize,
    pub measure_every: usize,
}

impl AnnealSchedule {
    /// Plain Metropolis at one temperature.
    pub fn single(t: f64, equilibration_steps: usize, sample_steps: usize) -> Self {
        AnnealSchedule {
            descending: Vec::new(),
            ascending: vec![t],
            equilibration_steps,
            sample_steps,
            measure_every: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let strictly = |v: &[f64], up: bool| v.windows(2).all(|w| if up { w[1] > w[0] } else { w[1] < w[0] });
        let positive = self.descending.iter().chain(&self.ascending).all(|&t| t > 0.0);
        if self.ascending.is_empty() || !positive || !strictly(&self.descending, false) || !strictly(&self.ascending, true) {
            return Err(Error::InvalidArgument(format!("invalid anneal schedule {self:?}")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GaugeTrace {
    pub temperature: f64,
    pub energy: Vec<f64>,
    /// Per measurement, mean loop value per catalog key.
    pub wilson: Vec<Vec<f64>>,
    /// Value of edge 0 per measurement.
    pub probe_edge: Vec<f64>,
    pub slice_energy: Vec<Vec<f64>>,
}

/// Cools through `descending`, then records traces on the way up.
pub fn anneal_run(
    lattice: &mut GaugeLattice3D,
    schedule: &AnnealSchedule,
    catalog: &LoopCatalog,
    rng: &mut Rng,
) -> Result<Vec<GaugeTrace>> {
    schedule.validate()?;
    for &t in &schedule.descending {
        let table = GaugeAcceptance::new(lattice.couplings, t);
        for _ in 0..schedule.equilibration_steps {
            gauge_sweep(lattice, &table, rng);
        }
    }
    let mut traces = Vec::new();
    for &t in &schedule.ascending {
        let table = GaugeAcceptance::new(lattice.couplings, t);
        for _ in 0..schedule.equilibration_steps {
            gauge_sweep(lattice, &table, rng);
        }
        let mut trace = GaugeTrace {
            temperature: t,
            ..Default::default()
        };
        for _ in 0..schedule.sample_steps {
            for _ in 0..schedule.measure_every.max(1) {
                gauge_sweep(lattice, &table, rng);
            }
            trace.energy.push(lattice.energy());
            trace.wilson.push(catalog.measure(lattice));
            trace.probe_edge.push(lattice.spins[0] as f64);
            trace.slice_energy.push((0..lattice.lt).map(|c| lattice.slice_energy(c)).collect());
        }
        traces.push(trace);
    }
    Ok(traces)
}

/// Disorder- and thermally averaged loops.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WilsonLoopSet {
    pub keys: Vec<LoopKey>,
    pub mean: Vec<f64>,
    pub error: Vec<f64>,
    pub samples: Vec<usize>,
    pub rejected: usize,
}

impl WilsonLoopSet {
    /// From per-sample thermal means keyed by loop class.
    pub fn from_samples(per_sample: &[BTreeMap<LoopKey, f64>], rejected: usize) -> Self {
        let mut all: BTreeMap<LoopKey, Vec<f64>> = BTreeMap::new();
        for m in per_sample {
            for (k, &v) in m {
                all.entry(*k).or_default().push(v);
            }
        }
        let keys: Vec<LoopKey> = all.keys().copied().collect();
        let mean = all.values().map(|v| stats::mean(v)).collect();
        let error = all.values().map(|v| stats::std_error(v)).collect();
        let samples = all.values().map(Vec::len).collect();
        WilsonLoopSet {
            keys,
            mean,
            error,
            samples,
            rejected,
        }
    }

    /// Single-run set with jackknife errors over the thermal series.
    pub fn from_trace(trace: &GaugeTrace, catalog: &LoopCatalog) -> Self {
        let n = catalog.keys.len();
        let mut mean = Vec::with_capacity(n);
        let mut error = Vec::with_capacity(n);
        for k in 0..n {
            let rows: Vec<Vec<f64>> = trace.wilson.iter().map(|w| vec![w[k]]).collect();
            let (m, e) = stats::jackknife(&rows, 20, |c| c[0]);
            mean.push(m);
            error.push(e);
        }
        WilsonLoopSet {
            keys: catalog.keys.clone(),
            mean,
            error,
            samples: vec![1; n],
            rejected: catalog.rejected,
        }
    }
}

/// Thermal mean of every loop class in one trace.
pub fn trace_means(trace: &GaugeTrace, catalog: &LoopCatalog) -> BTreeMap<LoopKey, f64> {
    catalog
        .keys
        .iter()
        .enumerate()
        .map(|(k, key)| (*key, stats::mean(&trace.wilson.iter().map(|w| w[k]).collect::<Vec<_>>())))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Phase {
    Ordered,
    Disordered,
    Undetermined,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoopFit {
    pub phase: Phase,
    pub intercept: f64,
    pub perimeter: (f64, f64),
    pub area: (f64, f64),
    pub loops_used: usize,
}

/// Fits `-ln W = c + a |tau| + b S` over loops with a resolved mean.
pub fn classify_phase(set: &WilsonLoopSet) -> Result<LoopFit> {
    let mut design = Vec::new();
    let mut y = Vec::new();
    let mut sigma = Vec::new();
    for (i, key) in set.keys.iter().enumerate() {
        let (w, e) = (set.mean[i], set.error[i]);
        if w <= 0.0 || w < 2.0 * e {
            continue;
        }
        design.push(vec![1.0, key.perimeter() as f64, key.area as f64]);
        y.push(-w.ln());
        sigma.push((e / w).max(1e-6));
    }
    let shapes: std::collections::BTreeSet<(usize, usize)> = design.iter().map(|d| (d[1] as usize, d[2] as usize)).collect();
    if shapes.len() < 3 {
        return Err(Error::LoopStatistics(format!(
            "{} resolved loop shapes, need at least 3",
            shapes.len()
        )));
    }
    let (beta, err) = stats::weighted_least_squares(&design, &y, &sigma)
        .map_err(|e| Error::LoopStatistics(format!("fit failed: {e}")))?;
    let (a, b) = (beta[1], beta[2]);
    let (da, db) = (err[1], err[2]);
    let phase = if b.abs() <= 2.0 * db && a > 0.0 {
        Phase::Ordered
    } else if b > 2.0 * db {
        Phase::Disordered
    } else {
        Phase::Undetermined
    };
    Ok(LoopFit {
        phase,
        intercept: beta[0],
        perimeter: (a, da),
        area: (b, db),
        loops_used: y.len(),
    })
}

/// Random `+-1` per vertex.
pub fn random_gauge(lattice: &GaugeLattice3D, rng: &mut Rng) -> Vec<i8> {
    (0..lattice.l * lattice.l * lattice.lt)
        .map(|_| if rng.random::<bool>() { 1 } else { -1 })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::disorder::{sample_disorder, ErrorModel};
    use crate::rng;

    fn synthetic(f: impl Fn(&LoopKey) -> f64) -> WilsonLoopSet {
        let mut keys = Vec::new();
        for r in 1..=4 {
            for s in 1..=4 {
                keys.push(LoopKey {
                    plane: LoopPlane::Xy,
                    r,
                    s,
                    area: r * s,
                });
            }
        }
        let mean: Vec<f64> = keys.iter().map(&f).collect();
        let error = mean.iter().map(|m| 1e-3 * m).collect();
        WilsonLoopSet {
            samples: vec![1; keys.len()],
            keys,
            mean,
            error,
            rejected: 0,
        }
    }

    #[test]
    fn planted_laws() {
        let perim = classify_phase(&synthetic(|k| (-0.3 * k.perimeter() as f64).exp())).unwrap();
        assert_eq!(perim.phase, Phase::Ordered);
        let area = classify_phase(&synthetic(|k| (-0.1 * k.area as f64).exp())).unwrap();
        assert_eq!(area.phase, Phase::Disordered);
        let few = WilsonLoopSet {
            keys: vec![LoopKey {
                plane: LoopPlane::Xy,
                r: 1,
                s: 1,
                area: 1,
            }],
            mean: vec![0.5],
            error: vec![0.01],
            samples: vec![1],
            rejected: 0,
        };
        assert!(matches!(classify_phase(&few), Err(Error::LoopStatistics(_))));
    }

    #[test]
    fn frozen_state_and_single_defect() {
        let mut lat = GaugeLattice3D::clean(4, 4);
        let mut r = rng::stream(1, 0);
        let table = GaugeAcceptance::new(lat.couplings, 1e-4);
        for _ in 0..5 {
            gauge_sweep(&mut lat, &table, &mut r);
        }
        assert!(lat.spins.iter().all(|&s| s == 1));
        let cat = LoopCatalog::build(&lat, &[LoopPlane::Xy, LoopPlane::Xt], 2);
        assert!(cat.measure(&lat).iter().all(|&w| w == 1.0));
        let e0 = lat.energy();
        lat.tau[17] = -1;
        assert_eq!(lat.energy() - e0, 2.0);
        for _ in 0..20 {
            gauge_sweep(&mut lat, &table, &mut r);
        }
        // a lone frustrated plaquette cannot be satisfied by any edge move
        assert_eq!(lat.energy() - e0, 2.0);
    }

    #[test]
    fn gauge_invariance() {
        let model = ErrorModel::Independent { p: 0.1, q: 0.1 };
        let mut r = rng::stream(2, 0);
        for seed in 0..20 {
            let s = sample_disorder(&model, 0.05, Shape::Cubic { l: 4, lt: 3 }, seed, Default::default()).unwrap();
            let mut lat = GaugeLattice3D::from_sample(&s, Couplings::isotropic()).unwrap();
            for sp in lat.spins.iter_mut() {
                *sp = if r.random::<bool>() { 1 } else { -1 };
            }
            let cat = LoopCatalog::build(&lat, &[LoopPlane::Xy, LoopPlane::Yt], 2);
            let before: Vec<i8> = (0..lat.tau.len()).map(|p| lat.tau[p] * lat.plaquette_product(p)).collect();
            let (e, w) = (lat.energy(), cat.measure(&lat));
            let sigma = random_gauge(&lat, &mut r);
            lat.gauge_transform(&sigma);
            let after: Vec<i8> = (0..lat.tau.len()).map(|p| lat.tau[p] * lat.plaquette_product(p)).collect();
            assert_eq!(before, after);
            assert_eq!(lat.energy(), e);
            // Wilson loops are products of spins only, so they are invariant on their own
            assert_eq!(cat.measure(&lat), w);
        }
    }

    #[test]
    fn erasure_corrected_area() {
        let model = ErrorModel::Independent { p: 0.0, q: 0.0 };
        let s = sample_disorder(&model, 0.08, Shape::Cubic { l: 6, lt: 4 }, 3, Default::default()).unwrap();
        let lat = GaugeLattice3D::from_sample(&s, Couplings::isotropic()).unwrap();
        let cat = LoopCatalog::build(&lat, &[LoopPlane::Xy], 3);
        assert!(cat.rejected > 0);
        let mut some_reduced = false;
        for (k, edges) in &cat.loops {
            let key = cat.keys[*k];
            assert!(edges.iter().all(|&e| lat.edge_active[e as usize]));
            assert!(key.area <= key.r * key.s);
            some_reduced |= key.area < key.r * key.s;
        }
        assert!(some_reduced);
    }

    #[test]
    fn single_plaquette_strong_coupling() {
        // at high temperature <U_P> -> tanh(beta J) to leading order
        let mut lat = GaugeLattice3D::clean(4, 4);
        let mut r = rng::stream(3, 0);
        let t = 8.0;
        let cat = LoopCatalog::build(&lat, &[LoopPlane::Xy], 1);
        let traces = anneal_run(&mut lat, &AnnealSchedule::single(t, 200, 4000), &cat, &mut r).unwrap();
        let set = WilsonLoopSet::from_trace(&traces[0], &cat);
        let exact = (1.0 / t).tanh();
        // next order is O(beta^5) from the cube; the slack covers it
        assert!((set.mean[0] - exact).abs() < 3.0 * set.error[0] + 2e-3, "{} vs {exact}", set.mean[0]);
    }

    #[test]
    fn two_cube_matches_enumeration() {
        let (l, lt) = (2, 2);
        let model = ErrorModel::Independent { p: 0.2, q: 0.2 };
        let s = sample_disorder(&model, 0.0, Shape::Cubic { l, lt }, 8, Default::default()).unwrap();
        let mut lat = GaugeLattice3D::from_sample(&s, Couplings { j_space: 1.0, j_time: 0.7 }).unwrap();
        let t = 1.0;
        let n = lat.edge_count();
        // Gray-code enumeration of all 2^24 configurations
        let mut probe = lat.clone();
        probe.spins.iter_mut().for_each(|s| *s = 1);
        let mut e = probe.energy();
        let (mut z, mut ez) = (0.0, 0.0);
        let w0 = (-e / t).exp();
        z += w0;
        ez += w0 * e;
        for i in 1u64..1 << n {
            let bit = i.trailing_zeros() as usize;
            let before: f64 = probe.edge_plaquettes[bit].iter().map(|&p| probe.plaquette_energy(p as usize)).sum();
            probe.spins[bit] = -probe.spins[bit];
            let after: f64 = probe.edge_plaquettes[bit].iter().map(|&p| probe.plaquette_energy(p as usize)).sum();
            e += after - before;
            let w = (-e / t).exp();
            z += w;
            ez += w * e;
        }
        let exact = ez / z;
        let mut r = rng::stream(4, 0);
        let cat = LoopCatalog::build(&lat, &[LoopPlane::Xy], 1);
        let traces = anneal_run(&mut lat, &AnnealSchedule::single(t, 1000, 100_000), &cat, &mut r).unwrap();
        let rows: Vec<Vec<f64>> = traces[0].energy.iter().map(|&e| vec![e]).collect();
        let (m, err) = stats::jackknife(&rows, 50, |c| c[0]);
        assert!((m - exact).abs() < 3.0 * err, "{m} ± {err} vs {exact}");
    }

    #[test]
    fn elitzur() {
        let mut lat = GaugeLattice3D::clean(4, 4);
        let mut r = rng::stream(5, 0);
        let cat = LoopCatalog::build(&lat, &[LoopPlane::Xy], 1);
        let traces = anneal_run(&mut lat, &AnnealSchedule::single(2.0, 100, 20_000), &cat, &mut r).unwrap();
        let rows: Vec<Vec<f64>> = traces[0].probe_edge.iter().map(|&v| vec![v]).collect();
        let (m, err) = stats::jackknife(&rows, 50, |c| c[0]);
        assert!(m.abs() < 3.0 * err.max(1e-3), "{m} ± {err}");
    }

    #[test]
    fn annealing_reaches_lower_energy() {
        let cat = |lat: &GaugeLattice3D| LoopCatalog::build(lat, &[LoopPlane::Xy], 1);
        let mut hot = GaugeLattice3D::clean(8, 8);
        let mut r = rng::stream(6, 0);
        hot.spins.iter_mut().for_each(|sp| *sp = if r.random::<bool>() { 1 } else { -1 });
        let mut annealed = hot.clone();
        let c = cat(&hot);
        let plain = anneal_run(&mut hot, &AnnealSchedule::single(0.5, 100, 20), &c, &mut r).unwrap();
        let ladder = AnnealSchedule {
            descending: vec![2.0, 1.5, 1.0, 0.7],
            ascending: vec![0.5],
            equilibration_steps: 20,
            sample_steps: 20,
            measure_every: 1,
        };
        let cooled = anneal_run(&mut annealed, &ladder, &c, &mut r).unwrap();
        let (a, b) = (stats::mean(&cooled[0].energy), stats::mean(&plain[0].energy));
        assert!(a <= b, "annealed {a} vs quenched {b}");
    }

    #[test]
    fn schedule_validation() {
        let bad = AnnealSchedule {
            descending: vec![1.0, 2.0],
            ascending: vec![1.0],
            equilibration_steps: 1,
            sample_steps: 1,
            measure_every: 1,
        };
        assert!(bad.validate().is_err());
        assert!(AnnealSchedule::single(1.0, 1, 1).validate().is_ok());
    }

    #[test]
    fn suzuki_reduction_matches_rbim() {
        use crate::rbim::{run_thermal, SpinLattice2D, ThermalParams};
        let (l, lt) = (4, 3);
        let model = ErrorModel::Independent { p: 0.1, q: 0.0 };
        let s = sample_disorder(&model, 0.0, Shape::Cubic { l, lt }, 7, Default::default()).unwrap();
        let mut lat = GaugeLattice3D::from_sample(&s, Couplings { j_space: 1.0, j_time: f64::INFINITY }).unwrap();
        let t = 1.5;
        let mut r = rng::stream(7, 0);
        let cat = LoopCatalog::build(&lat, &[LoopPlane::Xy], 1);
        let traces = anneal_run(&mut lat, &AnnealSchedule::single(t, 1000, 40_000), &cat, &mut r).unwrap();
        // spacelike edges stay frozen
        for e in (0..lat.edge_count()).filter(|e| e % 3 != 2) {
            assert_eq!(lat.spins[e], 1);
        }
        let c = 1;
        let v = |a: usize, b: usize| 3 * ((c * l + b % l) * l + a % l);
        let mut rb = SpinLattice2D::ferromagnet(l);
        for b in 0..l {
            for a in 0..l {
                let site = b * l + a;
                rb.bonds[2 * site] = s.plaquette_signs[v(a, b) + XT];
                rb.bonds[2 * site + 1] = s.plaquette_signs[v(a, b) + YT];
            }
        }
        let rt = run_thermal(&mut rb, t, ThermalParams::new(1000, 40_000), &mut r).unwrap();
        let gauge_rows: Vec<Vec<f64>> = traces[0].slice_energy.iter().map(|e| vec![e[c]]).collect();
        let rbim_rows: Vec<Vec<f64>> = rt.energy.iter().map(|&e| vec![e]).collect();
        let (g, dg) = stats::jackknife(&gauge_rows, 40, |x| x[0]);
        let (b, db) = stats::jackknife(&rbim_rows, 40, |x| x[0]);
        assert!((g - b).abs() < 3.0 * (dg * dg + db * db).sqrt(), "slice {g} ± {dg} vs rbim {b} ± {db}");
        // histograms over the occupied energy levels
        let hist = |xs: &[f64]| {
            let mut h = BTreeMap::new();
            for &x in xs {
                *h.entry(x as i64).or_insert(0usize) += 1;
            }
            h
        };
        let hg = hist(&traces[0].slice_energy.iter().map(|e| e[c]).collect::<Vec<_>>());
        let hb = hist(&rt.energy);
        let n = rt.energy.len() as f64;
        for (level, &cb) in &hb {
            let cg = *hg.get(level).unwrap_or(&0) as f64;
            let pb = cb as f64 / n;
            if pb < 0.02 {
                continue;
            }
            // autocorrelated samples: allow for an effective sample size of n / 20
            let sigma = (pb * (1.0 - pb) / (n / 20.0)).sqrt() * 2f64.sqrt();
            assert!((cg / n - pb).abs() < 3.0 * sigma, "level {level}: {} vs {pb}", cg / n);
        }
    }
}
