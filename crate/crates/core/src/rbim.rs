//! Random-bond Ising model on the L×L torus, single-site Metropolis.
//!
//! `H = -sum_<ij> eta_ij s_i s_j` with `J = 1`. Bond layout follows
//! [`crate::disorder`]: bond `2*s + dir`.

use std::f64::consts::PI;

use rand::{Rng as _, RngCore};
use serde::{Deserialize, Serialize};

use crate::disorder::{DisorderSample, Shape};
use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::stats;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpinLattice2D {
    pub l: usize,
    pub spins: Vec<i8>,
    /// `eta` per bond, 0 when erased.
    pub bonds: Vec<i8>,
    pub active: Vec<bool>,
}

impl SpinLattice2D {
    /// Lattice on a square disorder sample with a random (hot) start.
    pub fn from_sample(sample: &DisorderSample, rng: &mut Rng) -> Result<Self> {
        let Shape::Square { l } = sample.shape else {
            return Err(Error::InvalidArgument("rbim needs a square disorder sample".into()));
        };
        let spins = (0..l * l).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect();
        Ok(SpinLattice2D {
            l,
            spins,
            bonds: sample.bond_signs.clone(),
            active: sample.erased_sites.iter().map(|&e| !e).collect(),
        })
    }

    pub fn ferromagnet(l: usize) -> Self {
        SpinLattice2D {
            l,
            spins: vec![1; l * l],
            bonds: vec![1; 2 * l * l],
            active: vec![true; l * l],
        }
    }

    /// The four (neighbour, bond) pairs of site `s`.
    #[inline]
    fn neighbours(&self, s: usize) -> [(usize, usize); 4] {
        let l = self.l;
        let (x, y) = (s % l, s / l);
        let right = y * l + (x + 1) % l;
        let left = y * l + (x + l - 1) % l;
        let up = ((y + 1) % l) * l + x;
        let down = ((y + l - 1) % l) * l + x;
        [(right, 2 * s), (up, 2 * s + 1), (left, 2 * left), (down, 2 * down + 1)]
    }

    #[inline]
    fn local_field(&self, s: usize) -> i32 {
        self.neighbours(s)
            .iter()
            .map(|&(n, b)| self.bonds[b] as i32 * self.spins[n] as i32)
            .sum()
    }

    pub fn energy(&self) -> f64 {
        let mut e = 0i64;
        for s in 0..self.spins.len() {
            let [(r, br), (u, bu), _, _] = self.neighbours(s);
            e -= (self.bonds[br] * self.spins[s] * self.spins[r]) as i64;
            e -= (self.bonds[bu] * self.spins[s] * self.spins[u]) as i64;
        }
        e as f64
    }

    /// Magnetisation per active site.
    pub fn magnetization(&self) -> f64 {
        let n = self.active.iter().filter(|&&a| a).count();
        if n == 0 {
            return 0.0;
        }
        let sum: i64 = (0..self.spins.len()).filter(|&s| self.active[s]).map(|s| self.spins[s] as i64).sum();
        sum as f64 / n as f64
    }

    /// `s_i -> sigma_i s_i`, `eta_ij -> sigma_i sigma_j eta_ij`.
    pub fn gauge_transform(&mut self, sigma: &[i8]) {
        for s in 0..self.spins.len() {
            self.spins[s] *= sigma[s];
            let [(r, br), (u, bu), _, _] = self.neighbours(s);
            self.bonds[br] *= sigma[s] * sigma[r];
            self.bonds[bu] *= sigma[s] * sigma[u];
        }
    }

    /// `<eta_ij s_i s_j>` averaged over unerased bonds.
    pub fn bond_order(&self) -> f64 {
        let mut sum = 0i64;
        let mut n = 0i64;
        for s in 0..self.spins.len() {
            let [(r, br), (u, bu), _, _] = self.neighbours(s);
            for (nb, b) in [(r, br), (u, bu)] {
                if self.bonds[b] != 0 {
                    sum += (self.bonds[b] * self.spins[s] * self.spins[nb]) as i64;
                    n += 1;
                }
            }
        }
        if n == 0 { 0.0 } else { sum as f64 / n as f64 }
    }

    /// `|F(0)|^2` and `|F(k)|^2` averaged over `k = 2pi/L` along x and y.
    pub fn fourier_moments(&self, table: &PhaseTable) -> (f64, f64) {
        let l = self.l;
        let (mut f0, mut cx, mut sx, mut cy, mut sy) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for y in 0..l {
            for x in 0..l {
                let s = y * l + x;
                if !self.active[s] {
                    continue;
                }
                let v = self.spins[s] as f64;
                f0 += v;
                cx += v * table.cos[x];
                sx += v * table.sin[x];
                cy += v * table.cos[y];
                sy += v * table.sin[y];
            }
        }
        (f0 * f0, 0.5 * (cx * cx + sx * sx + cy * cy + sy * sy))
    }
}

/// `cos`, `sin` of `2 pi x / L`.
pub struct PhaseTable {
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl PhaseTable {
    pub fn new(l: usize) -> Self {
        let angle = |x: usize| 2.0 * PI * x as f64 / l as f64;
        PhaseTable {
            cos: (0..l).map(|x| angle(x).cos()).collect(),
            sin: (0..l).map(|x| angle(x).sin()).collect(),
        }
    }
}

/// Acceptance thresholds on 32-bit uniforms for `Delta E = 2 s h`, `h` in [-4, 4].
pub struct AcceptanceTable {
    thresholds: [u64; 9],
}

impl AcceptanceTable {
    pub fn new(temperature: f64) -> Self {
        let mut thresholds = [0u64; 9];
        for (i, t) in thresholds.iter_mut().enumerate() {
            let de = 2.0 * (i as f64 - 4.0);
            let p = if de <= 0.0 { 1.0 } else { (-de / temperature).exp() };
            *t = (p * 4294967296.0).ceil().min(4294967296.0) as u64;
        }
        AcceptanceTable { thresholds }
    }

    #[inline]
    fn accept(&self, de_half: i32, rng: &mut Rng) -> bool {
        if de_half <= 0 {
            return true;
        }
        (rng.next_u32() as u64) < self.thresholds[(de_half + 4) as usize]
    }
}

fn check_temperature(t: f64) -> Result<()> {
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!("temperature {t} must be positive")));
    }
    Ok(())
}

#[inline]
fn try_flip(lattice: &mut SpinLattice2D, s: usize, table: &AcceptanceTable, rng: &mut Rng) {
    let de_half = lattice.spins[s] as i32 * lattice.local_field(s);
    if table.accept(de_half, rng) {
        lattice.spins[s] = -lattice.spins[s];
    }
}

/// One attempted flip per active site in typewriter order.
pub fn metropolis_sweep(lattice: &mut SpinLattice2D, table: &AcceptanceTable, rng: &mut Rng) {
    for s in 0..lattice.spins.len() {
        if lattice.active[s] {
            try_flip(lattice, s, table, rng);
        }
    }
}

/// One attempted flip at a uniformly chosen active site.
pub fn metropolis_step(lattice: &mut SpinLattice2D, table: &AcceptanceTable, rng: &mut Rng) {
    let s = rng.random_range(0..lattice.spins.len());
    if lattice.active[s] {
        try_flip(lattice, s, table, rng);
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThermalParams {
    pub equilibration_steps: usize,
    pub sample_steps: usize,
    /// Sweeps between recorded samples.
    pub measure_every: usize,
    /// Start from all spins up instead of the lattice's current state.
    pub cold_start: bool,
}

impl ThermalParams {
    pub fn new(equilibration_steps: usize, sample_steps: usize) -> Self {
        ThermalParams {
            equilibration_steps,
            sample_steps,
            measure_every: 1,
            cold_start: true,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ThermalTrace {
    pub temperature: f64,
    pub l: usize,
    pub energy: Vec<f64>,
    pub magnetization: Vec<f64>,
    pub f0_sq: Vec<f64>,
    pub fk_sq: Vec<f64>,
    pub bond_order: Vec<f64>,
    pub equilibration_steps: usize,
    pub sample_steps: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Wavevector {
    Zero,
    /// `2 pi / L` along a lattice axis, averaged over both axes.
    Minimal,
}

/// Equilibrate, then record `sample_steps` measurements.
pub fn run_thermal(lattice: &mut SpinLattice2D, temperature: f64, params: ThermalParams, rng: &mut Rng) -> Result<ThermalTrace> {
    check_temperature(temperature)?;
    let table = AcceptanceTable::new(temperature);
    let phases = PhaseTable::new(lattice.l);
    if params.cold_start {
        lattice.spins.iter_mut().for_each(|s| *s = 1);
    }
    for _ in 0..params.equilibration_steps {
        metropolis_sweep(lattice, &table, rng);
    }
    let mut trace = ThermalTrace {
        temperature,
        l: lattice.l,
        equilibration_steps: params.equilibration_steps,
        sample_steps: params.sample_steps,
        ..Default::default()
    };
    for _ in 0..params.sample_steps {
        for _ in 0..params.measure_every.max(1) {
            metropolis_sweep(lattice, &table, rng);
        }
        let (f0, fk) = lattice.fourier_moments(&phases);
        trace.energy.push(lattice.energy());
        trace.magnetization.push(lattice.magnetization());
        trace.f0_sq.push(f0);
        trace.fk_sq.push(fk);
        trace.bond_order.push(lattice.bond_order());
    }
    Ok(trace)
}

/// `chi(k) = <|F(k)|^2> / L^2` with a jackknife error.
pub fn susceptibility(trace: &ThermalTrace, k: Wavevector) -> Result<(f64, f64)> {
    let series = match k {
        Wavevector::Zero => &trace.f0_sq,
        Wavevector::Minimal => &trace.fk_sq,
    };
    if series.is_empty() {
        return Err(Error::EmptyTrace);
    }
    let rows: Vec<Vec<f64>> = series.iter().map(|&v| vec![v]).collect();
    let norm = (trace.l * trace.l) as f64;
    let (m, e) = stats::jackknife(&rows, 20, |c| c[0]);
    Ok((m / norm, e / norm))
}

/// `xi = L/(2 pi) sqrt(chi0/chik - 1)`.
pub fn correlation_length(chi0: f64, chik: f64, l: usize) -> Result<f64> {
    if !(chik > 0.0) {
        return Err(Error::DivergentCorrelationLength);
    }
    let ratio = (chi0 / chik).max(1.0);
    Ok(l as f64 / (2.0 * PI) * (ratio - 1.0).sqrt())
}

/// `xi / L` from a single trace, with a jackknife error.
pub fn xi_over_l(trace: &ThermalTrace) -> Result<(f64, f64)> {
    if trace.f0_sq.is_empty() {
        return Err(Error::EmptyTrace);
    }
    let rows: Vec<Vec<f64>> = trace.f0_sq.iter().zip(&trace.fk_sq).map(|(&a, &b)| vec![a, b]).collect();
    let l = trace.l;
    let f = |c: &[f64]| correlation_length(c[0], c[1], l).map(|x| x / l as f64).unwrap_or(f64::INFINITY);
    Ok(stats::jackknife(&rows, 20, f))
}
