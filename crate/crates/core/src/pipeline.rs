//! From pulse parameters to phase diagrams and logical lifetimes.
//!
//! Every grid point `(gamma, r_bar)` goes through
//! channel -> plaquette distribution -> Nishimori couplings -> Monte Carlo.
//! Points above the percolation threshold of the final slice are disordered
//! without simulation; with readout errors below `q_floor` the 2D model is
//! used, otherwise the 3D gauge model.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::channel::DecayParameters;
use crate::disorder::{sample_disorder, ErasureScenario, ErrorModel, SampleOptions, Shape};
use crate::erasure::{cycles_until, erasure_rate, ErasureParameters};
use crate::error::{Error, Result};
use crate::fss::{gather, run_plan, GridPoint, SweepPlan, TaskResults};
use crate::nishimori::{marginal_sheet, shared_bond_temperature, independent_coupling, NishimoriOptions};
use crate::percolation::{percolation_threshold, PercolationKind};
use crate::plaquette::{plaquette_distribution, PlaquetteErrorDistribution, PlaquetteModel, StabilizerType};
use crate::pulse::{jaksch_waveform, load_waveform, time_optimal_waveform, ControlWaveform, PlaquetteGeometry};
use crate::rbim::ThermalParams;
use crate::rng;
use crate::rpgm::{anneal_run, classify_phase, trace_means, AnnealSchedule, Couplings, GaugeLattice3D, LoopCatalog, LoopPlane, Phase, WilsonLoopSet};
use crate::stats;

pub use crate::pauli::scalar_commutator;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Protocol {
    Jaksch,
    TimeOptimal,
    /// Waveform table on disk.
    File(PathBuf),
}

impl Protocol {
    pub fn waveform(&self) -> Result<ControlWaveform> {
        match self {
            Protocol::Jaksch => jaksch_waveform(1.0),
            Protocol::TimeOptimal => Ok(time_optimal_waveform()),
            Protocol::File(p) => load_waveform(p),
        }
    }
}

/// How a correlated cell distribution is turned into couplings.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TemperatureRule {
    /// Independent-element Nishimori couplings of the per-bond and readout
    /// marginals.
    Marginal,
    /// Single-bond Fourier coefficient of the full cell distribution.
    Fourier,
}

/// Couplings of one grid point, `J_space = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SheetPoint {
    pub p_space: f64,
    pub q: f64,
    pub temperature: f64,
    pub j_time: f64,
}

pub fn sheet_point(dist: &PlaquetteErrorDistribution, rule: TemperatureRule) -> Result<SheetPoint> {
    let m = marginal_sheet(dist)?;
    match rule {
        TemperatureRule::Marginal => Ok(SheetPoint {
            p_space: m.p_space,
            q: m.q,
            temperature: m.temperature,
            j_time: m.j_time,
        }),
        TemperatureRule::Fourier => {
            let t = shared_bond_temperature(dist, 0.0, NishimoriOptions { floor: Some(1e-12) })?;
            let j_time = if m.q <= 0.0 { f64::INFINITY } else { independent_coupling(m.q) * t };
            Ok(SheetPoint {
                p_space: m.p_space,
                q: m.q,
                temperature: t,
                j_time,
            })
        }
    }
}

/// Plaquette distribution of a protocol at decay width `gamma` (units of the
/// Rabi frequency).
pub fn point_distribution(waveform: &ControlWaveform, gamma: f64) -> Result<PlaquetteErrorDistribution> {
    plaquette_distribution(
        waveform,
        &PlaquetteGeometry::clockwise(4),
        &DecayParameters::new(gamma, 0.0)?,
        StabilizerType::Z,
        PlaquetteModel::Sequential,
    )
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McSettings {
    /// Linear size of the 3D lattice; the 2D check uses `d` and `2d`.
    pub d: usize,
    pub samples: usize,
    pub equilibration_steps: usize,
    pub sample_steps: usize,
    /// Descending anneal temperatures in units of the target temperature.
    pub anneal: Vec<f64>,
    /// Below this readout error the 2D model is used.
    pub q_floor: f64,
    pub percolation_trials: usize,
}

impl McSettings {
    pub fn desk() -> Self {
        McSettings {
            d: 6,
            samples: 60,
            equilibration_steps: 800,
            sample_steps: 800,
            anneal: vec![2.0, 1.6, 1.3, 1.1],
            q_floor: 1e-4,
            percolation_trials: 400,
        }
    }

    pub fn paper() -> Self {
        McSettings {
            d: 10,
            samples: 2500,
            equilibration_steps: 2000,
            sample_steps: 2000,
            anneal: vec![2.0, 1.6, 1.3, 1.1],
            q_floor: 1e-4,
            percolation_trials: 2000,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let descending = self.anneal.windows(2).all(|w| w[1] < w[0]) && self.anneal.iter().all(|&f| f > 1.0);
        if self.d < 4 || self.samples < 2 || self.sample_steps == 0 || !descending || !(self.q_floor >= 0.0) {
            return Err(Error::InvalidArgument(format!("invalid Monte Carlo settings {self:?}")));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// No wrong signs at all.
    Clean,
    /// Erasure above the percolation threshold of the final slice.
    Percolation,
    Rbim,
    Rpgm,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub phase: Phase,
    pub method: Method,
    /// Area-law coefficient (3D) or `xi/L` growth (2D) with its error.
    pub statistic: (f64, f64),
    /// Spread of the realised wrong-sign fraction over samples.
    pub p_spread: f64,
    pub note: Option<String>,
}

/// Classifies one point of one erasure scenario.
pub fn classify_point(
    dist: &PlaquetteErrorDistribution,
    sheet: SheetPoint,
    r_bar: f64,
    scenario: ErasureScenario,
    anchor: f64,
    settings: &McSettings,
    seed: u64,
) -> Result<Verdict> {
    settings.validate()?;
    if r_bar >= anchor {
        return Ok(Verdict {
            phase: Phase::Disordered,
            method: Method::Percolation,
            statistic: (r_bar, anchor),
            p_spread: 0.0,
            note: None,
        });
    }
    if sheet.p_space <= 0.0 && sheet.q <= 0.0 {
        return Ok(Verdict {
            phase: Phase::Ordered,
            method: Method::Clean,
            statistic: (0.0, 0.0),
            p_spread: 0.0,
            note: None,
        });
    }
    if !sheet.temperature.is_finite() {
        return Ok(Verdict {
            phase: Phase::Disordered,
            method: Method::Clean,
            statistic: (f64::INFINITY, 0.0),
            p_spread: 0.0,
            note: Some("Nishimori temperature is infinite".into()),
        });
    }
    let opts = SampleOptions {
        scenario,
        ..SampleOptions::default()
    };
    if sheet.q < settings.q_floor {
        classify_rbim(dist, sheet, r_bar, opts, settings, seed)
    } else {
        classify_rpgm(dist, sheet, r_bar, opts, settings, seed)
    }
}

fn classify_rbim(
    dist: &PlaquetteErrorDistribution,
    sheet: SheetPoint,
    r_bar: f64,
    opts: SampleOptions,
    settings: &McSettings,
    seed: u64,
) -> Result<Verdict> {
    let sizes = vec![settings.d, 2 * settings.d];
    let plan = SweepPlan {
        sizes: sizes.clone(),
        points: vec![GridPoint {
            x: 0.0,
            model: ErrorModel::Plaquette(dist.without_measurement_errors()),
            r_bar,
            temperature: sheet.temperature,
        }],
        samples: settings.samples,
        thermal: ThermalParams::new(settings.equilibration_steps, settings.sample_steps),
        sample_options: opts,
        seed,
    };
    let mut done = TaskResults::new();
    run_plan(&plan, &mut done, 0, &mut |_| Ok(()))?;
    let data = gather(&plan, &done)?;
    let xi = |size: usize| {
        let rows: Vec<Vec<f64>> = data[size][0].iter().map(|m| vec![m.chi0, m.chik]).collect();
        let l = sizes[size];
        stats::jackknife(&rows, 20, |c| {
            crate::rbim::correlation_length(c[0], c[1], l).map_or(f64::INFINITY, |x| x / l as f64)
        })
    };
    let ((a, ea), (b, eb)) = (xi(0), xi(1));
    let (diff, err) = (b - a, (ea * ea + eb * eb).sqrt());
    let phase = if !diff.is_finite() {
        Phase::Undetermined
    } else if diff > 2.0 * err {
        Phase::Ordered
    } else if diff < -2.0 * err {
        Phase::Disordered
    } else {
        Phase::Undetermined
    };
    Ok(Verdict {
        phase,
        method: Method::Rbim,
        statistic: (diff, err),
        p_spread: 0.0,
        note: None,
    })
}

fn classify_rpgm(
    dist: &PlaquetteErrorDistribution,
    sheet: SheetPoint,
    r_bar: f64,
    opts: SampleOptions,
    settings: &McSettings,
    seed: u64,
) -> Result<Verdict> {
    let d = settings.d;
    let t = sheet.temperature;
    let schedule = AnnealSchedule {
        descending: settings.anneal.iter().map(|f| f * t).collect(),
        ascending: vec![t],
        equilibration_steps: settings.equilibration_steps,
        sample_steps: settings.sample_steps,
        measure_every: 1,
    };
    let model = ErrorModel::Plaquette(dist.clone());
    let mut per = Vec::with_capacity(settings.samples);
    let mut realised = Vec::with_capacity(settings.samples);
    let mut rejected = 0;
    for s in 0..settings.samples {
        let dis = sample_disorder(&model, r_bar, Shape::Cubic { l: d, lt: d }, rng::task_id(&[seed, s as u64]), opts)?;
        realised.push(dis.effective_p);
        let mut lattice = GaugeLattice3D::from_sample(&dis, Couplings { j_space: 1.0, j_time: sheet.j_time })?;
        let catalog = LoopCatalog::build(&lattice, &[LoopPlane::Xy], d / 2);
        rejected += catalog.rejected;
        let mut r = rng::stream(seed, rng::task_id(&[2, s as u64]));
        let traces = anneal_run(&mut lattice, &schedule, &catalog, &mut r)?;
        per.push(trace_means(&traces[0], &catalog));
    }
    let p_spread = stats::std_error(&realised) * (realised.len() as f64).sqrt();
    let set = WilsonLoopSet::from_samples(&per, rejected);
    Ok(match classify_phase(&set) {
        Ok(fit) => Verdict {
            phase: fit.phase,
            method: Method::Rpgm,
            statistic: fit.area,
            p_spread,
            note: None,
        },
        Err(Error::LoopStatistics(msg)) => Verdict {
            phase: Phase::Undetermined,
            method: Method::Rpgm,
            statistic: (f64::NAN, f64::NAN),
            p_spread,
            note: Some(msg),
        },
        Err(e) => return Err(e),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    Qec,
    /// Ordered only if lost stabilisers are replaced.
    QecWithRefresh,
    NoQec,
    Undetermined,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointResult {
    pub gamma: f64,
    pub r_bar: f64,
    pub sheet: SheetPoint,
    pub no_refresh: Verdict,
    pub refresh: Verdict,
    pub classification: Classification,
}

fn combine(no_refresh: Phase, refresh: Phase) -> Classification {
    match (no_refresh, refresh) {
        (Phase::Ordered, _) => Classification::Qec,
        (_, Phase::Ordered) => Classification::QecWithRefresh,
        (Phase::Disordered, Phase::Disordered) => Classification::NoQec,
        _ => Classification::Undetermined,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub protocol: Protocol,
    /// Sorted, in units of the Rabi frequency.
    pub gammas: Vec<f64>,
    /// Sorted; should start at 0.
    pub r_bars: Vec<f64>,
    pub settings: McSettings,
    pub rule: TemperatureRule,
    pub seed: u64,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        let sorted = |v: &[f64]| !v.is_empty() && v.windows(2).all(|w| w[1] > w[0]);
        if !sorted(&self.gammas) || self.gammas[0] < 0.0 {
            return Err(Error::InvalidArgument("gamma grid must be nonempty, sorted and nonnegative".into()));
        }
        if !sorted(&self.r_bars) || self.r_bars[0] < 0.0 || *self.r_bars.last().unwrap() >= 1.0 {
            return Err(Error::InvalidArgument("erasure grid must be nonempty, sorted and inside [0, 1)".into()));
        }
        self.settings.validate()
    }
}

/// Percolation thresholds of the final slice, `(no refresh, refresh)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Anchors {
    pub no_refresh: (f64, f64),
    pub refresh: (f64, f64),
}

impl Anchors {
    pub fn measure(settings: &McSettings, seed: u64) -> Result<Self> {
        let sizes = [4 * settings.d, 8 * settings.d];
        let grid = |lo: f64, hi: f64| -> Vec<f64> { (0..=20).map(|i| lo + (hi - lo) * i as f64 / 20.0).collect() };
        let sb = percolation_threshold(PercolationKind::SiteBond, &sizes, &grid(0.15, 0.35), settings.percolation_trials, seed)?;
        let b = percolation_threshold(PercolationKind::Bond, &sizes, &grid(0.4, 0.6), settings.percolation_trials, seed)?;
        Ok(Anchors {
            no_refresh: (sb.threshold, sb.error),
            refresh: (b.threshold, b.error),
        })
    }
}

pub fn point_key(gamma: f64, r_bar: f64) -> String {
    format!("g{gamma:.6e}/r{r_bar:.6e}")
}

/// Completed points keyed by [`point_key`].
pub type SweepResults = BTreeMap<String, PointResult>;

/// Runs one grid point. Disorder seeds depend on the master seed only, so
/// neighbouring points share random numbers.
pub fn run_point(
    waveform: &ControlWaveform,
    gamma: f64,
    r_bar: f64,
    anchors: &Anchors,
    settings: &McSettings,
    rule: TemperatureRule,
    seed: u64,
) -> Result<PointResult> {
    let dist = point_distribution(waveform, gamma)?;
    let sheet = sheet_point(&dist, rule)?;
    let verdict = |scenario, anchor: f64| {
        classify_point(&dist, sheet, r_bar, scenario, anchor, settings, seed).or_else(|e| match e.exit_code() {
            3 => Ok(Verdict {
                phase: Phase::Undetermined,
                method: Method::Rpgm,
                statistic: (f64::NAN, f64::NAN),
                p_spread: 0.0,
                note: Some(e.to_string()),
            }),
            _ => Err(e),
        })
    };
    let no_refresh = verdict(ErasureScenario::NoRefresh, anchors.no_refresh.0)?;
    let refresh = if r_bar == 0.0 {
        no_refresh.clone()
    } else {
        verdict(ErasureScenario::Refresh, anchors.refresh.0)?
    };
    let classification = combine(no_refresh.phase, refresh.phase);
    Ok(PointResult {
        gamma,
        r_bar,
        sheet,
        no_refresh,
        refresh,
        classification,
    })
}

/// Fitted boundary: largest ordered `r_bar` per `gamma`, nonincreasing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryCurve {
    /// `(gamma, r_bar)` with the percolation anchor at `gamma = 0`.
    pub polyline: Vec<(f64, f64)>,
}

impl BoundaryCurve {
    /// Largest tolerable erasure at `gamma`; 0 beyond the last vertex.
    pub fn r_max(&self, gamma: f64) -> f64 {
        let pts = &self.polyline;
        if pts.is_empty() || gamma > pts[pts.len() - 1].0 {
            return 0.0;
        }
        if gamma <= pts[0].0 {
            return pts[0].1;
        }
        let i = pts.partition_point(|p| p.0 <= gamma);
        let (a, b) = (pts[i - 1], pts[i]);
        a.1 + (b.1 - a.1) * (gamma - a.0) / (b.0 - a.0)
    }
}

/// Pool-adjacent-violators fit of a nonincreasing sequence.
pub fn nonincreasing_fit(ys: &[f64]) -> Vec<f64> {
    let mut blocks: Vec<(f64, usize)> = Vec::new();
    for &y in ys {
        blocks.push((y, 1));
        while blocks.len() > 1 {
            let (b, nb) = blocks[blocks.len() - 1];
            let (a, na) = blocks[blocks.len() - 2];
            if a >= b {
                break;
            }
            blocks.pop();
            let last = blocks.len() - 1;
            blocks[last] = ((a * na as f64 + b * nb as f64) / (na + nb) as f64, na + nb);
        }
    }
    blocks.into_iter().flat_map(|(v, n)| std::iter::repeat_n(v, n)).collect()
}

/// Boundary of the region where `ordered` holds, anchored at `(0, anchor)`.
/// Past the last column with an ordered point the curve closes at the
/// midpoint to the next column.
pub fn fit_boundary(points: &[PointResult], gammas: &[f64], r_bars: &[f64], anchor: f64, ordered: impl Fn(&PointResult) -> bool) -> BoundaryCurve {
    let lookup: BTreeMap<String, &PointResult> = points.iter().map(|p| (point_key(p.gamma, p.r_bar), p)).collect();
    let mut cols = Vec::new();
    for &g in gammas {
        let mut edge = None;
        for (i, &r) in r_bars.iter().enumerate() {
            match lookup.get(&point_key(g, r)) {
                Some(p) if ordered(p) => {
                    let next = r_bars.get(i + 1).map_or(anchor.max(r), |&n| 0.5 * (r + n));
                    edge = Some(next.min(anchor));
                }
                _ => break,
            }
        }
        cols.push((g, edge));
    }
    let mut polyline = Vec::new();
    if gammas.first().is_none_or(|&g| g > 0.0) {
        polyline.push((0.0, anchor));
    }
    let mut closed = false;
    for (i, (g, e)) in cols.iter().enumerate() {
        match e {
            Some(r) if !closed => polyline.push((*g, if *g == 0.0 { anchor } else { *r })),
            None if !closed => {
                let prev = if i == 0 { 0.0 } else { cols[i - 1].0 };
                polyline.push((0.5 * (prev + g), 0.0));
                closed = true;
            }
            _ => {}
        }
    }
    let ys = nonincreasing_fit(&polyline.iter().map(|p| p.1).collect::<Vec<_>>());
    BoundaryCurve {
        polyline: polyline.iter().zip(ys).map(|(p, y)| (p.0, y)).collect(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseBoundary {
    pub points: Vec<PointResult>,
    pub anchors: Anchors,
    pub no_refresh: BoundaryCurve,
    pub refresh: BoundaryCurve,
}

/// Runs every point missing from `done`, checkpointing after each one.
pub fn run_sweep(
    config: &SweepConfig,
    anchors: Option<Anchors>,
    done: &mut SweepResults,
    checkpoint: &mut dyn FnMut(&SweepResults) -> Result<()>,
) -> Result<PhaseBoundary> {
    config.validate()?;
    let waveform = config.protocol.waveform()?;
    let anchors = match anchors {
        Some(a) => a,
        None => Anchors::measure(&config.settings, config.seed)?,
    };
    for &g in &config.gammas {
        for &r in &config.r_bars {
            let key = point_key(g, r);
            if done.contains_key(&key) {
                continue;
            }
            let p = run_point(&waveform, g, r, &anchors, &config.settings, config.rule, config.seed)?;
            done.insert(key, p);
            checkpoint(done)?;
        }
    }
    let points: Vec<PointResult> = config
        .gammas
        .iter()
        .flat_map(|&g| config.r_bars.iter().map(move |&r| point_key(g, r)))
        .filter_map(|k| done.get(&k).cloned())
        .collect();
    let no_refresh = fit_boundary(&points, &config.gammas, &config.r_bars, anchors.no_refresh.0, |p| {
        p.classification == Classification::Qec
    });
    let refresh = fit_boundary(&points, &config.gammas, &config.r_bars, anchors.refresh.0, |p| {
        matches!(p.classification, Classification::Qec | Classification::QecWithRefresh)
    });
    Ok(PhaseBoundary {
        points,
        anchors,
        no_refresh,
        refresh,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaThreshold {
    pub gamma: f64,
    /// Half width of the final bracket.
    pub error: f64,
    /// Every classified `(gamma, phase)`, in evaluation order.
    pub scanned: Vec<(f64, Phase)>,
}

/// Threshold in `gamma` at `r_bar = 0`: scan the grid upwards to the first
/// point that is not ordered, then bisect that bracket `refine` times.
pub fn gamma_threshold(
    protocol: &Protocol,
    grid: &[f64],
    refine: usize,
    settings: &McSettings,
    rule: TemperatureRule,
    seed: u64,
) -> Result<GammaThreshold> {
    let waveform = protocol.waveform()?;
    let anchors = Anchors {
        no_refresh: (1.0, 0.0),
        refresh: (1.0, 0.0),
    };
    let mut scanned = Vec::new();
    let mut phase_at = |g: f64| -> Result<Phase> {
        let p = run_point(&waveform, g, 0.0, &anchors, settings, rule, seed)?.no_refresh.phase;
        scanned.push((g, p));
        Ok(p)
    };
    let mut lo = None;
    let mut hi = None;
    for &g in grid {
        if phase_at(g)? == Phase::Ordered {
            lo = Some(g);
        } else {
            hi = Some(g);
            break;
        }
    }
    let (mut lo, mut hi) = match (lo, hi) {
        (Some(a), Some(b)) => (a, b),
        _ => {
            return Err(Error::Bracket(format!(
                "no ordered/disordered bracket on the gamma grid {grid:?}"
            )))
        }
    };
    for _ in 0..refine {
        let mid = 0.5 * (lo + hi);
        if phase_at(mid)? == Phase::Ordered {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(GammaThreshold {
        gamma: 0.5 * (lo + hi),
        error: 0.5 * (hi - lo),
        scanned,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LifetimeLimit {
    Bbr,
    Trap,
    Pauli,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LifetimeEstimate {
    pub cycles: f64,
    pub limit: LifetimeLimit,
    pub r_max: f64,
    pub omega: f64,
    pub params: ErasureParameters,
}

/// Largest number of cycles for which `(gamma, r_bar(c))` stays inside the
/// boundary.
pub fn lifetime_estimate(params: &ErasureParameters, gamma: f64, boundary: &BoundaryCurve) -> Result<LifetimeEstimate> {
    params.validate()?;
    if !(gamma >= 0.0) || boundary.polyline.is_empty() {
        return Err(Error::OutsideDiagram(format!("gamma = {gamma} with {} boundary vertices", boundary.polyline.len())));
    }
    let omega = erasure_rate(params);
    let r_max = boundary.r_max(gamma);
    if r_max <= 0.0 {
        return Ok(LifetimeEstimate {
            cycles: 0.0,
            limit: LifetimeLimit::Pauli,
            r_max,
            omega,
            params: *params,
        });
    }
    let limit = if params.f_int * params.gamma_bbr >= 1.0 / params.t_trap {
        LifetimeLimit::Bbr
    } else {
        LifetimeLimit::Trap
    };
    Ok(LifetimeEstimate {
        cycles: cycles_until(omega, params.tau_meas, r_max),
        limit,
        r_max,
        omega,
        params: *params,
    })
}

/// `f_int` of a protocol: Rydberg time of one gate over the cycle time.
pub fn protocol_f_int(waveform: &ControlWaveform, tau_meas: f64, omega_rabi: f64) -> Result<f64> {
    let t = crate::pulse::integrated_rydberg_time(waveform, &PlaquetteGeometry::clockwise(4), 0)?;
    Ok(ErasureParameters::f_int_from_pulse(t, omega_rabi, tau_meas))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::erasure::{GAMMA_BBR, OMEGA_RABI};
    use crate::pauli::PauliString;

    fn result(gamma: f64, r_bar: f64, class: Classification) -> PointResult {
        let v = Verdict {
            phase: Phase::Ordered,
            method: Method::Clean,
            statistic: (0.0, 0.0),
            p_spread: 0.0,
            note: None,
        };
        PointResult {
            gamma,
            r_bar,
            sheet: SheetPoint {
                p_space: 0.0,
                q: 0.0,
                temperature: 0.0,
                j_time: 1.0,
            },
            no_refresh: v.clone(),
            refresh: v,
            classification: class,
        }
    }

    #[test]
    fn commutator_examples() {
        let c = |a: &str, b: &str| scalar_commutator(&a.parse::<PauliString>().unwrap(), &b.parse().unwrap()).unwrap();
        assert_eq!(c("X", "X"), 1);
        assert_eq!(c("X", "Z"), -1);
        assert_eq!(c("XZ", "ZX"), 1);
    }

    #[test]
    fn isotonic_fit() {
        assert_eq!(nonincreasing_fit(&[3.0, 1.0, 2.0, 0.0]), vec![3.0, 1.5, 1.5, 0.0]);
        assert_eq!(nonincreasing_fit(&[1.0, 2.0]), vec![1.5, 1.5]);
    }

    #[test]
    fn boundary_from_grid() {
        let gammas = [1e-3, 2e-3, 3e-3];
        let rs = [0.0, 0.1, 0.2];
        let mut pts = Vec::new();
        for &g in &gammas {
            for &r in &rs {
                let ok = (g < 1.5e-3 && r < 0.15) || (g < 2.5e-3 && r == 0.0);
                pts.push(result(g, r, if ok { Classification::Qec } else { Classification::NoQec }));
            }
        }
        let b = fit_boundary(&pts, &gammas, &rs, 0.25, |p| p.classification == Classification::Qec);
        let expected = [(0.0, 0.25), (1e-3, 0.15), (2e-3, 0.05), (2.5e-3, 0.0)];
        assert_eq!(b.polyline.len(), expected.len());
        for (a, e) in b.polyline.iter().zip(expected) {
            assert!((a.0 - e.0).abs() < 1e-15 && (a.1 - e.1).abs() < 1e-12, "{a:?} vs {e:?}");
        }
        assert!((b.r_max(1.5e-3) - 0.1).abs() < 1e-12);
        assert_eq!(b.r_max(4e-3), 0.0);
        assert!(b.polyline.windows(2).all(|w| w[1].1 <= w[0].1));
    }

    #[test]
    fn lifetime_limits() {
        let boundary = BoundaryCurve {
            polyline: vec![(0.0, 0.25), (2e-3, 0.0)],
        };
        let t_ryd = 2.957;
        let tau = 5e-3;
        let f_int = ErasureParameters::f_int_from_pulse(t_ryd, OMEGA_RABI, tau);
        let bbr = ErasureParameters {
            gamma_bbr: GAMMA_BBR,
            t_trap: f64::INFINITY,
            tau_meas: tau,
            f_int,
            cycles: 0,
        };
        let est = lifetime_estimate(&bbr, 0.0, &boundary).unwrap();
        assert_eq!(est.limit, LifetimeLimit::Bbr);
        let expected = -(0.75f64).ln() / (GAMMA_BBR * t_ryd / OMEGA_RABI);
        assert!((est.cycles - expected.floor()).abs() < 1.0);
        assert!((est.cycles - 3.5e3).abs() < 100.0);
        let trap = ErasureParameters { t_trap: 30.0, ..bbr };
        let est = lifetime_estimate(&trap, 0.0, &boundary).unwrap();
        assert_eq!(est.limit, LifetimeLimit::Trap);
        assert!(est.cycles > 25.0);
        let pauli = lifetime_estimate(&bbr, 3e-3, &boundary).unwrap();
        assert_eq!((pauli.cycles, pauli.limit), (0.0, LifetimeLimit::Pauli));
    }

    #[test]
    fn noiseless_point_is_ordered() {
        let s = McSettings::desk();
        let anchors = Anchors {
            no_refresh: (0.25, 0.0),
            refresh: (0.5, 0.0),
        };
        let p = run_point(&Protocol::Jaksch.waveform().unwrap(), 0.0, 0.0, &anchors, &s, TemperatureRule::Marginal, 1).unwrap();
        assert_eq!(p.classification, Classification::Qec);
        let lost = run_point(&Protocol::Jaksch.waveform().unwrap(), 0.0, 0.3, &anchors, &s, TemperatureRule::Marginal, 1).unwrap();
        assert_eq!(lost.classification, Classification::QecWithRefresh);
        assert_eq!(lost.no_refresh.method, Method::Percolation);
    }

    #[test]
    fn combine_rules() {
        assert_eq!(combine(Phase::Disordered, Phase::Ordered), Classification::QecWithRefresh);
        assert_eq!(combine(Phase::Disordered, Phase::Undetermined), Classification::Undetermined);
        assert_eq!(combine(Phase::Disordered, Phase::Disordered), Classification::NoQec);
    }
}
