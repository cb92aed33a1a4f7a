//! Command-line front end.
//!
//! Every subcommand resolves its settings in the order flag > config file >
//! preset, writes its tables and a `manifest.json` into `--out`, and returns
//! the process exit code. Failures surface as [`Error`]s; the binary turns
//! them into a JSON record on stderr.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::channel::{pair_channel, ChannelDocument, DecayParameters};
use crate::disorder::{sample_disorder, ErrorModel, SampleOptions, Shape};
use crate::erasure::{ErasureParameters, GAMMA_BBR, OMEGA_RABI};
use crate::error::{Error, Result};
use crate::fss::{analyze, gather, mean_curves, run_plan, GridPoint, SweepPlan, TaskResults};
use crate::io::{self, Cell, RunManifest};
use crate::nishimori::{independent_coupling, independent_temperature};
use crate::percolation::{percolation_threshold, PercolationKind};
use crate::pipeline::{
    lifetime_estimate, protocol_f_int, run_sweep, Anchors, BoundaryCurve, McSettings, PhaseBoundary, Protocol,
    SweepConfig, SweepResults, TemperatureRule,
};
use crate::plaquette::{plaquette_distribution, PlaquetteModel, StabilizerType};
use crate::pulse::PlaquetteGeometry;
use crate::rbim::ThermalParams;
use crate::rng;
use crate::rpgm::{anneal_run, classify_phase, trace_means, AnnealSchedule, Couplings, GaugeLattice3D, LoopCatalog, LoopPlane, Phase, WilsonLoopSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// Minutes on one core.
    Desk,
    /// Cluster-scale sample counts.
    Paper,
}

#[derive(Parser, Debug)]
#[command(name = "qec-thresholds", version, about = "Decoder-free toric-code thresholds for Rydberg-atom stabiliser circuits")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML configuration (`schema_version = 1`).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_enum)]
    pub preset: Option<Preset>,
    /// Continue from a checkpoint written by an earlier run.
    #[arg(long, global = true)]
    pub resume: Option<PathBuf>,
    /// Output directory; `QEC_OUT` sets the default.
    #[arg(long, global = true, env = "QEC_OUT", default_value = "out")]
    pub out: PathBuf,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Twirled pair channel and plaquette distribution of one pulse.
    Chi(ChiArgs),
    /// 2D random-bond Ising model: T_c, Nishimori threshold or a single point.
    Rbim(RbimArgs),
    /// 3D random plaquette gauge model at one disorder strength.
    Rpgm(RpgmArgs),
    /// Erasure percolation threshold on the torus.
    Percolation(PercolationArgs),
    /// Phase diagram over decay width and erasure.
    PhaseDiagram(PhaseArgs),
    /// Maximum number of cycles before the logical qubit is lost.
    Lifetime(LifetimeArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ProtocolName {
    Jaksch,
    TimeOptimal,
}

fn protocol(name: Option<ProtocolName>, waveform: Option<PathBuf>) -> Protocol {
    match (waveform, name) {
        (Some(p), _) => Protocol::File(p),
        (None, Some(ProtocolName::TimeOptimal)) => Protocol::TimeOptimal,
        _ => Protocol::Jaksch,
    }
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChiArgs {
    #[arg(long, value_enum)]
    pub protocol: Option<ProtocolName>,
    /// Waveform table; overrides `--protocol`.
    #[arg(long)]
    pub waveform: Option<PathBuf>,
    /// Decay width in units of the Rabi frequency.
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub omega_leak: Option<f64>,
    /// Trotter steps per slice.
    #[arg(long)]
    pub steps: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum RbimMode {
    /// Temperature scan at fixed `p`.
    Tc,
    /// Scan along the Nishimori line.
    Threshold,
    /// `xi/L` per size at one `(p, T)`.
    Point,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RbimArgs {
    #[arg(long, value_enum)]
    pub mode: Option<RbimMode>,
    #[arg(long)]
    pub p: Option<f64>,
    /// Defaults to the Nishimori temperature of `p`.
    #[arg(long)]
    pub temperature: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub sizes: Option<Vec<usize>>,
    /// Scan grid (temperatures for `tc`, error rates for `threshold`).
    #[arg(long, value_delimiter = ',')]
    pub grid: Option<Vec<f64>>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub sweeps: Option<usize>,
    /// Tasks between checkpoints.
    #[arg(long)]
    pub checkpoint_every: Option<usize>,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RpgmArgs {
    /// Data error rate.
    #[arg(long)]
    pub p: Option<f64>,
    /// Readout error rate; defaults to `p`.
    #[arg(long)]
    pub q: Option<f64>,
    /// Defaults to the Nishimori temperature of `p`.
    #[arg(long)]
    pub temperature: Option<f64>,
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long, value_enum)]
    pub plane: Option<PlaneName>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum PlaneName {
    Xy,
    Xt,
    Yt,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PercolationArgs {
    #[arg(long, value_enum)]
    pub mode: Option<PercolationKind>,
    #[arg(long, value_delimiter = ',')]
    pub sizes: Option<Vec<usize>>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub grid: Option<Vec<f64>>,
}

impl ValueEnum for PercolationKind {
    fn value_variants<'a>() -> &'a [Self] {
        &[PercolationKind::Bond, PercolationKind::SiteBond]
    }

    fn to_possible_value(&self) -> Option<clap::builder::PossibleValue> {
        Some(clap::builder::PossibleValue::new(match self {
            PercolationKind::Bond => "bond",
            PercolationKind::SiteBond => "site-bond",
        }))
    }
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseArgs {
    #[arg(long, value_enum)]
    pub protocol: Option<ProtocolName>,
    #[arg(long)]
    pub waveform: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    pub gammas: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub r_bars: Option<Vec<f64>>,
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long, value_enum)]
    pub rule: Option<RuleName>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum RuleName {
    Marginal,
    Fourier,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LifetimeArgs {
    #[arg(long, value_enum)]
    pub protocol: Option<ProtocolName>,
    #[arg(long)]
    pub waveform: Option<PathBuf>,
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Trap lifetime in seconds; omitted means lossless traps.
    #[arg(long)]
    pub t_trap: Option<f64>,
    /// Cycle time in seconds.
    #[arg(long)]
    pub tau_meas: Option<f64>,
    /// `boundary.json` written by `phase-diagram`.
    #[arg(long)]
    pub boundary: Option<PathBuf>,
    /// Use a flat boundary at this erasure instead.
    #[arg(long)]
    pub r_max: Option<f64>,
    #[arg(long)]
    pub refresh: Option<bool>,
}

/// Layout of the TOML configuration file. Every section is optional.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub schema_version: u32,
    pub seed: Option<u64>,
    pub preset: Option<Preset>,
    #[serde(default)]
    pub chi: ChiArgs,
    #[serde(default)]
    pub rbim: RbimArgs,
    #[serde(default)]
    pub rpgm: RpgmArgs,
    #[serde(default)]
    pub percolation: PercolationArgs,
    #[serde(default)]
    pub phase_diagram: PhaseArgs,
    #[serde(default)]
    pub lifetime: LifetimeArgs,
}

macro_rules! merge {
    ($flag:expr, $file:expr, [$($f:ident),*]) => {{
        let mut m = $flag.clone();
        $( if m.$f.is_none() { m.$f = $file.$f.clone(); } )*
        m
    }};
}

struct Context {
    seed: u64,
    preset: Preset,
    resume: Option<PathBuf>,
    out: PathBuf,
    started: Instant,
    config_path: Option<PathBuf>,
}

impl Context {
    fn manifest<C: Serialize>(&self, command: &str, config: &C) -> Result<RunManifest> {
        let mut m = RunManifest::new(command, config, self.seed)?;
        if let Some(p) = &self.config_path {
            m.record_input(p)?;
        }
        if let Some(p) = &self.resume {
            m.record_input(p)?;
        }
        Ok(m)
    }

    fn finish(&self, mut m: RunManifest, steps: u64) -> Result<()> {
        m.steps = steps;
        m.wall_clock_s = self.started.elapsed().as_secs_f64();
        m.write(&self.out)?;
        Ok(())
    }

    fn checkpoint_path(&self) -> PathBuf {
        self.resume.clone().unwrap_or_else(|| self.out.join("checkpoint.json"))
    }

    fn desk(&self) -> bool {
        self.preset == Preset::Desk
    }
}

/// Parses `argv` and runs the command.
pub fn run<I, T>(argv: I) -> Result<i32>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(|e| match e.kind() {
        clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
            let _ = e.print();
            Error::InvalidArgument(String::new())
        }
        _ => Error::Config {
            path: "argv".into(),
            msg: e.to_string().trim().to_string(),
        },
    });
    let cli = match cli {
        Err(Error::InvalidArgument(msg)) if msg.is_empty() => return Ok(0),
        other => other?,
    };
    execute(cli)
}

pub fn execute(cli: Cli) -> Result<i32> {
    let file: FileConfig = match &cli.config {
        Some(p) => io::load_config(p)?,
        None => FileConfig {
            schema_version: io::SCHEMA_VERSION,
            ..Default::default()
        },
    };
    let ctx = Context {
        seed: cli.seed.or(file.seed).unwrap_or(1),
        preset: cli.preset.or(file.preset).unwrap_or(Preset::Desk),
        resume: cli.resume.clone(),
        out: cli.out.clone(),
        started: Instant::now(),
        config_path: cli.config.clone(),
    };
    match &cli.command {
        Command::Chi(a) => chi(&ctx, merge!(a, file.chi, [protocol, waveform, gamma, omega_leak, steps])),
        Command::Rbim(a) => rbim(&ctx, merge!(a, file.rbim, [mode, p, temperature, sizes, grid, samples, sweeps, checkpoint_every])),
        Command::Rpgm(a) => rpgm(&ctx, merge!(a, file.rpgm, [p, q, temperature, d, samples, steps, plane])),
        Command::Percolation(a) => percolation(&ctx, merge!(a, file.percolation, [mode, sizes, trials, grid])),
        Command::PhaseDiagram(a) => phase_diagram(&ctx, merge!(a, file.phase_diagram, [protocol, waveform, gammas, r_bars, d, samples, steps, rule])),
        Command::Lifetime(a) => lifetime(&ctx, merge!(a, file.lifetime, [protocol, waveform, gamma, t_trap, tau_meas, boundary, r_max, refresh])),
    }
}

fn check_probability(name: &str, v: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::Config {
            path: name.into(),
            msg: format!("{v} is not a probability"),
        });
    }
    Ok(v)
}

fn chi(ctx: &Context, a: ChiArgs) -> Result<i32> {
    let proto = protocol(a.protocol, a.waveform.clone());
    let mut waveform = proto.waveform()?;
    if let Some(s) = a.steps {
        waveform = waveform.with_trotter_steps(s);
    }
    let decay = DecayParameters::new(a.gamma.unwrap_or(1e-3), a.omega_leak.unwrap_or(0.0))?;
    let geometry = PlaquetteGeometry::clockwise(4);
    let chi = pair_channel(&waveform, &geometry, 0, &decay)?;
    let doc = ChannelDocument::new(&waveform, &decay, &chi);
    let dist = plaquette_distribution(&waveform, &geometry, &decay, StabilizerType::Z, PlaquetteModel::Sequential)?;
    let mut m = ctx.manifest("chi", &a)?;
    if let Protocol::File(p) = &proto {
        m.record_input(p)?;
    }
    m.emit(&ctx.out, "channel.json", &pretty(&doc)?)?;
    m.emit(&ctx.out, "plaquette.json", &pretty(&dist)?)?;
    let rows: Vec<Vec<Cell>> = dist
        .grouped()
        .iter()
        .map(|(&(k, f), &p)| vec![k.into(), (if f { "1" } else { "0" }).into(), p.into()])
        .collect();
    m.emit(&ctx.out, "grouped.tsv", io::render_table(&["errors", "readout_flip", "probability"], &rows)?.as_bytes())?;
    println!(
        "{}: total {:.12} (pauli {:.12} + erasure {:.3e}), q = {:.4e}",
        doc.protocol,
        chi.total() + chi.erasure_weight,
        chi.total(),
        chi.erasure_weight,
        doc.q
    );
    ctx.finish(m, waveform.total_steps() as u64)?;
    Ok(0)
}

fn pretty<T: Serialize>(v: &T) -> Result<Vec<u8>> {
    let mut b = serde_json::to_vec_pretty(v)?;
    b.push(b'\n');
    Ok(b)
}

#[derive(Serialize, Deserialize)]
struct RbimCheckpoint {
    plan_digest: String,
    done: TaskResults,
}

fn rbim(ctx: &Context, a: RbimArgs) -> Result<i32> {
    let mode = a.mode.unwrap_or(RbimMode::Point);
    let p = check_probability("rbim.p", a.p.unwrap_or(0.0))?;
    let sizes = a.sizes.clone().unwrap_or(if ctx.desk() { vec![8, 12, 16] } else { vec![16, 24, 32] });
    let samples = a.samples.unwrap_or(if ctx.desk() { 200 } else { 2500 });
    let sweeps = a.sweeps.unwrap_or(if ctx.desk() { 2000 } else { 8000 });
    let thermal = ThermalParams::new(sweeps / 2, sweeps);
    let nishimori = |p: f64| if p > 0.0 { independent_temperature(p) } else { f64::INFINITY };
    let points: Vec<GridPoint> = match mode {
        RbimMode::Point => {
            let t = a.temperature.unwrap_or_else(|| nishimori(p));
            if !(t.is_finite() && t > 0.0) {
                return Err(Error::Config {
                    path: "rbim.temperature".into(),
                    msg: "required when p = 0".into(),
                });
            }
            vec![GridPoint {
                x: t,
                model: ErrorModel::Independent { p, q: 0.0 },
                r_bar: 0.0,
                temperature: t,
            }]
        }
        RbimMode::Tc => a
            .grid
            .clone()
            .unwrap_or_else(|| (0..8).map(|i| 2.15 + 0.035 * i as f64).collect())
            .into_iter()
            .map(|t| GridPoint {
                x: t,
                model: ErrorModel::Independent { p, q: 0.0 },
                r_bar: 0.0,
                temperature: t,
            })
            .collect(),
        RbimMode::Threshold => a
            .grid
            .clone()
            .unwrap_or_else(|| (0..7).map(|i| 0.09 + 0.01 * i as f64).collect())
            .into_iter()
            .map(|x| GridPoint {
                x,
                model: ErrorModel::Independent { p: x, q: 0.0 },
                r_bar: 0.0,
                temperature: nishimori(x),
            })
            .collect(),
    };
    let plan = SweepPlan {
        sizes: sizes.clone(),
        points,
        samples,
        thermal,
        sample_options: SampleOptions::default(),
        seed: ctx.seed,
    };
    let plan_digest = io::sha256_hex(&serde_json::to_vec(&plan)?);
    let mut done = match &ctx.resume {
        Some(path) => {
            let c: RbimCheckpoint = io::read_checkpoint(path, "rbim")?;
            if c.plan_digest != plan_digest {
                return Err(Error::Checkpoint {
                    path: path.clone(),
                    msg: "written for a different plan".into(),
                });
            }
            c.done
        }
        None => TaskResults::new(),
    };
    let cp = ctx.checkpoint_path();
    run_plan(&plan, &mut done, a.checkpoint_every.unwrap_or(50), &mut |d| {
        io::write_checkpoint(
            &cp,
            "rbim",
            &RbimCheckpoint {
                plan_digest: plan_digest.clone(),
                done: d.clone(),
            },
        )
    })?;
    let data = gather(&plan, &done)?;
    let xs: Vec<f64> = plan.points.iter().map(|g| g.x).collect();
    let mut m = ctx.manifest("rbim", &plan)?;
    let steps = (sizes.len() * xs.len() * samples * (thermal.equilibration_steps + thermal.sample_steps)) as u64;
    let curves = mean_curves(&data, &sizes);
    let mut rows = Vec::new();
    for (si, &l) in sizes.iter().enumerate() {
        for (pi, &x) in xs.iter().enumerate() {
            rows.push(vec![l.into(), x.into(), plan.points[pi].temperature.into(), curves[si][pi].into()]);
        }
    }
    m.emit(&ctx.out, "xi_over_l.tsv", io::render_table(&["L", "x", "T", "xi_over_L"], &rows)?.as_bytes())?;
    if mode == RbimMode::Point {
        for (si, &l) in sizes.iter().enumerate() {
            println!("L = {l}: xi/L = {:.4}", curves[si][0]);
        }
        ctx.finish(m, steps)?;
        return Ok(0);
    }
    let fss = analyze(&xs, &sizes, &data, 200, ctx.seed);
    let fss = match fss {
        Ok(f) => f,
        Err(e) => {
            ctx.finish(m, steps)?;
            return Err(e);
        }
    };
    m.emit(&ctx.out, "crossing.json", &pretty(&fss)?)?;
    println!(
        "crossing {:.4} +- {:.4}, interval [{:.4}, {:.4}]",
        fss.crossing, fss.error, fss.interval.0, fss.interval.1
    );
    ctx.finish(m, steps)?;
    Ok(0)
}

fn rpgm(ctx: &Context, a: RpgmArgs) -> Result<i32> {
    let p = check_probability("rpgm.p", a.p.unwrap_or(0.033))?;
    let q = check_probability("rpgm.q", a.q.unwrap_or(p))?;
    let d = a.d.unwrap_or(if ctx.desk() { 6 } else { 10 });
    let samples = a.samples.unwrap_or(if ctx.desk() { 40 } else { 1000 });
    let steps = a.steps.unwrap_or(if ctx.desk() { 600 } else { 2000 });
    let t = match a.temperature {
        Some(t) => t,
        None if p > 0.0 => independent_temperature(p),
        None => {
            return Err(Error::Config {
                path: "rpgm.temperature".into(),
                msg: "required when p = 0".into(),
            })
        }
    };
    let j_time = if q <= 0.0 {
        f64::INFINITY
    } else if p > 0.0 {
        independent_coupling(q) / independent_coupling(p)
    } else {
        1.0
    };
    let plane = match a.plane.unwrap_or(PlaneName::Xy) {
        PlaneName::Xy => LoopPlane::Xy,
        PlaneName::Xt => LoopPlane::Xt,
        PlaneName::Yt => LoopPlane::Yt,
    };
    let schedule = AnnealSchedule {
        descending: vec![2.0 * t, 1.6 * t, 1.3 * t, 1.1 * t],
        ascending: vec![t],
        equilibration_steps: steps,
        sample_steps: steps,
        measure_every: 1,
    };
    let model = ErrorModel::Independent { p, q };
    let mut per = Vec::new();
    let mut rejected = 0;
    for s in 0..samples {
        let dis = sample_disorder(&model, 0.0, Shape::Cubic { l: d, lt: d }, rng::task_id(&[ctx.seed, s as u64]), SampleOptions::default())?;
        let mut lattice = GaugeLattice3D::from_sample(&dis, Couplings { j_space: 1.0, j_time })?;
        let catalog = LoopCatalog::build(&lattice, &[plane], d / 2);
        rejected += catalog.rejected;
        let mut r = rng::stream(ctx.seed, rng::task_id(&[2, s as u64]));
        let traces = anneal_run(&mut lattice, &schedule, &catalog, &mut r)?;
        per.push(trace_means(&traces[0], &catalog));
    }
    let set = WilsonLoopSet::from_samples(&per, rejected);
    let mut m = ctx.manifest("rpgm", &(p, q, t, j_time, d, samples, &schedule))?;
    let rows: Vec<Vec<Cell>> = set
        .keys
        .iter()
        .enumerate()
        .map(|(i, k)| vec![k.r.into(), k.s.into(), k.perimeter().into(), k.area.into(), set.mean[i].into(), set.error[i].into()])
        .collect();
    m.emit(&ctx.out, "wilson_loops.tsv", io::render_table(&["R", "S", "perimeter", "area", "W", "error"], &rows)?.as_bytes())?;
    let steps_done = (samples * steps * (schedule.descending.len() + 2)) as u64;
    let fit = classify_phase(&set);
    let code = match &fit {
        Ok(f) => {
            m.emit(&ctx.out, "fit.json", &pretty(f)?)?;
            println!(
                "T = {t:.4}: {:?} (perimeter {:.4} +- {:.4}, area {:.4} +- {:.4})",
                f.phase, f.perimeter.0, f.perimeter.1, f.area.0, f.area.1
            );
            if f.phase == Phase::Undetermined {
                3
            } else {
                0
            }
        }
        Err(_) => 3,
    };
    ctx.finish(m, steps_done)?;
    fit.map(|_| code)
}

fn percolation(ctx: &Context, a: PercolationArgs) -> Result<i32> {
    let kind = a.mode.unwrap_or(PercolationKind::Bond);
    let sizes = a.sizes.clone().unwrap_or(vec![32, 64]);
    let trials = a.trials.unwrap_or(if ctx.desk() { 2000 } else { 10000 });
    let grid = a.grid.clone().unwrap_or_else(|| {
        let (lo, hi) = match kind {
            PercolationKind::Bond => (0.4, 0.6),
            PercolationKind::SiteBond => (0.15, 0.35),
        };
        (0..=20).map(|i| lo + (hi - lo) * i as f64 / 20.0).collect()
    });
    for (i, &r) in grid.iter().enumerate() {
        check_probability(&format!("percolation.grid[{i}]"), r)?;
    }
    let th = percolation_threshold(kind, &sizes, &grid, trials, ctx.seed)?;
    let mut m = ctx.manifest("percolation", &(kind, &sizes, trials, &grid))?;
    let mut rows = Vec::new();
    for (si, &l) in sizes.iter().enumerate() {
        for pt in &th.curves[si] {
            rows.push(vec![l.into(), pt.r.into(), pt.wraps.into(), pt.trials.into(), pt.fraction().into()]);
        }
    }
    m.emit(&ctx.out, "survival.tsv", io::render_table(&["L", "r", "wraps", "trials", "fraction"], &rows)?.as_bytes())?;
    m.emit(&ctx.out, "threshold.json", &pretty(&th)?)?;
    println!("{kind:?} threshold {:.4} +- {:.4}", th.threshold, th.error);
    ctx.finish(m, (sizes.len() * grid.len() * trials) as u64)?;
    Ok(0)
}

#[derive(Serialize, Deserialize)]
struct SweepCheckpoint {
    config_digest: String,
    anchors: Anchors,
    done: SweepResults,
}

fn phase_settings(ctx: &Context, d: Option<usize>, samples: Option<usize>, steps: Option<usize>) -> McSettings {
    let mut s = if ctx.desk() { McSettings::desk() } else { McSettings::paper() };
    if let Some(d) = d {
        s.d = d;
    }
    if let Some(n) = samples {
        s.samples = n;
    }
    if let Some(n) = steps {
        s.equilibration_steps = n;
        s.sample_steps = n;
    }
    s
}

fn phase_diagram(ctx: &Context, a: PhaseArgs) -> Result<i32> {
    let config = SweepConfig {
        protocol: protocol(a.protocol, a.waveform.clone()),
        gammas: a.gammas.clone().unwrap_or_else(|| (1..=6).map(|i| 2e-3 * i as f64).collect()),
        r_bars: a.r_bars.clone().unwrap_or(vec![0.0, 0.1, 0.2, 0.3, 0.4]),
        settings: phase_settings(ctx, a.d, a.samples, a.steps),
        rule: match a.rule.unwrap_or(RuleName::Marginal) {
            RuleName::Marginal => TemperatureRule::Marginal,
            RuleName::Fourier => TemperatureRule::Fourier,
        },
        seed: ctx.seed,
    };
    config.validate()?;
    let config_digest = io::sha256_hex(&serde_json::to_vec(&config)?);
    let (anchors, mut done) = match &ctx.resume {
        Some(path) => {
            let c: SweepCheckpoint = io::read_checkpoint(path, "phase-diagram")?;
            if c.config_digest != config_digest {
                return Err(Error::Checkpoint {
                    path: path.clone(),
                    msg: "written for a different sweep configuration".into(),
                });
            }
            (c.anchors, c.done)
        }
        None => (Anchors::measure(&config.settings, config.seed)?, SweepResults::new()),
    };
    let cp = ctx.checkpoint_path();
    let boundary = run_sweep(&config, Some(anchors), &mut done, &mut |d| {
        io::write_checkpoint(
            &cp,
            "phase-diagram",
            &SweepCheckpoint {
                config_digest: config_digest.clone(),
                anchors,
                done: d.clone(),
            },
        )
    })?;
    let mut m = ctx.manifest("phase-diagram", &config)?;
    m.emit(&ctx.out, "phase_diagram.tsv", phase_table(&boundary)?.as_bytes())?;
    m.emit(&ctx.out, "boundary.json", &pretty(&boundary)?)?;
    for (g, r) in &boundary.no_refresh.polyline {
        println!("boundary  gamma {g:.3e}  r_max {r:.4}");
    }
    ctx.finish(m, (boundary.points.len() * config.settings.samples) as u64)?;
    Ok(0)
}

/// One row per grid point: `(gamma, r_bar, class, T, sigma)` plus diagnostics.
pub fn phase_table(b: &PhaseBoundary) -> Result<String> {
    let rows: Vec<Vec<Cell>> = b
        .points
        .iter()
        .map(|p| {
            let (stat, err) = p.no_refresh.statistic;
            let sigma = (err * err + p.no_refresh.p_spread * p.no_refresh.p_spread).sqrt();
            vec![
                p.gamma.into(),
                p.r_bar.into(),
                serde_json::to_value(p.classification).map_or(String::new(), |v| v.as_str().unwrap_or("").to_string()).into(),
                p.sheet.temperature.into(),
                p.sheet.j_time.into(),
                p.sheet.p_space.into(),
                p.sheet.q.into(),
                stat.into(),
                sigma.into(),
            ]
        })
        .collect();
    io::render_table(&["gamma", "r_bar", "class", "T", "J_time", "p_space", "q", "statistic", "sigma"], &rows)
}

fn lifetime(ctx: &Context, a: LifetimeArgs) -> Result<i32> {
    let proto = protocol(a.protocol, a.waveform.clone());
    let waveform = proto.waveform()?;
    let gamma = a.gamma.unwrap_or(0.0);
    let tau = a.tau_meas.unwrap_or(5e-3);
    let refresh = a.refresh.unwrap_or(false);
    let boundary = match (&a.boundary, a.r_max) {
        (Some(path), _) => {
            let text = std::fs::read(path).map_err(|e| Error::io(path, e))?;
            let b: PhaseBoundary = serde_json::from_slice(&text)?;
            if refresh {
                b.refresh
            } else {
                b.no_refresh
            }
        }
        (None, Some(r)) => BoundaryCurve {
            polyline: vec![(0.0, check_probability("lifetime.r_max", r)?), (gamma.max(0.0), r)],
        },
        (None, None) => {
            let anchors = Anchors::measure(&McSettings::desk(), ctx.seed)?;
            let r = if refresh { anchors.refresh.0 } else { anchors.no_refresh.0 };
            BoundaryCurve {
                polyline: vec![(0.0, r), (gamma.max(0.0), r)],
            }
        }
    };
    let params = ErasureParameters {
        gamma_bbr: GAMMA_BBR,
        t_trap: a.t_trap.unwrap_or(f64::INFINITY),
        tau_meas: tau,
        f_int: protocol_f_int(&waveform, tau, OMEGA_RABI)?,
        cycles: 0,
    };
    let est = lifetime_estimate(&params, gamma, &boundary)?;
    let mut m = ctx.manifest("lifetime", &a)?;
    if let Some(p) = &a.boundary {
        m.record_input(p)?;
    }
    m.emit(&ctx.out, "lifetime.json", &pretty(&est)?)?;
    println!("c* = {} cycles ({:?}-limited, r_max = {:.4})", est.cycles, est.limit, est.r_max);
    ctx.finish(m, 0)?;
    Ok(0)
}

/// Machine-readable failure record printed by the binary.
pub fn error_record(e: &Error) -> String {
    let mut rec = BTreeMap::new();
    rec.insert("error", serde_json::Value::String(e.kind().into()));
    rec.insert("message", serde_json::Value::String(e.to_string()));
    rec.insert("exit_code", serde_json::Value::from(e.exit_code()));
    if let Error::Config { path, .. } = e {
        rec.insert("field", serde_json::Value::String(path.clone()));
    }
    serde_json::to_string(&rec).unwrap_or_else(|_| "{\"error\":\"unknown\"}".into())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_subcommand_is_a_validation_error() {
        let e = run(["qec-thresholds", "frobnicate"]).unwrap_err();
        assert_eq!(e.exit_code(), 1);
        assert!(error_record(&e).contains("\"error\":\"config\""));
    }

    #[test]
    fn config_field_path_reported() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(&path, "schema_version = 1\n[percolation]\nsizes = [8, -1]\n").unwrap();
        let e = run(["qec-thresholds", "percolation", "--config", path.to_str().unwrap()]).unwrap_err();
        match e {
            Error::Config { path, .. } => assert_eq!(path, "percolation.sizes[1]"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn chi_is_normalised() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().to_str().unwrap();
        assert_eq!(run(["qec-thresholds", "chi", "--gamma", "1e-3", "--steps", "20", "--out", out]).unwrap(), 0);
        let doc: ChannelDocument = serde_json::from_slice(&std::fs::read(dir.path().join("channel.json")).unwrap()).unwrap();
        let total: f64 = doc.probs.values().sum::<f64>() + doc.erasure_weight;
        assert!((total - 1.0).abs() < 1e-10);
        assert!(dir.path().join("manifest.json").exists());
    }
}
