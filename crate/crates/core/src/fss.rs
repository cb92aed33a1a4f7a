//! Finite-size scaling of `xi/L` and threshold location.
//!
//! Every (size, grid point, disorder sample) is an independent task. A task
//! yields thermal averages; curves, crossings and bootstrap intervals are
//! computed from the collected tasks, so a sweep can be checkpointed and
//! resumed at task granularity.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::disorder::{sample_disorder, ErrorModel, SampleOptions, Shape};
use crate::error::{Error, Result};
use crate::rbim::{run_thermal, SpinLattice2D, ThermalParams};
use crate::rng;
use crate::stats;

/// Thermal averages of one disorder sample at one grid point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointMoments {
    /// `<|F(0)|^2> / L^2`
    pub chi0: f64,
    /// `<|F(k_min)|^2> / L^2`
    pub chik: f64,
    /// energy per site
    pub energy: f64,
    pub bond_order: f64,
}

/// One point of a sweep: the disorder model and the temperature to run at.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub x: f64,
    pub model: ErrorModel,
    pub r_bar: f64,
    pub temperature: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPlan {
    pub sizes: Vec<usize>,
    pub points: Vec<GridPoint>,
    pub samples: usize,
    pub thermal: ThermalParams,
    pub sample_options: SampleOptions,
    pub seed: u64,
}

pub fn task_key(l: usize, point: usize, sample: usize) -> String {
    format!("L{l}/x{point}/s{sample}")
}

/// Runs one task. Disorder depends on `(seed, L, sample)` only, so every grid
/// point sees the same uniforms.
pub fn run_task(plan: &SweepPlan, l: usize, point: usize, sample: usize) -> Result<PointMoments> {
    let gp = &plan.points[point];
    let disorder_seed = rng::task_id(&[plan.seed, l as u64, sample as u64]);
    let dis = sample_disorder(&gp.model, gp.r_bar, Shape::Square { l }, disorder_seed, plan.sample_options)?;
    let mut r = rng::stream(plan.seed, rng::task_id(&[1, l as u64, point as u64, sample as u64]));
    let mut lattice = SpinLattice2D::from_sample(&dis, &mut r)?;
    let trace = run_thermal(&mut lattice, gp.temperature, plan.thermal, &mut r)?;
    let n = (l * l) as f64;
    Ok(PointMoments {
        chi0: stats::mean(&trace.f0_sq) / n,
        chik: stats::mean(&trace.fk_sq) / n,
        energy: stats::mean(&trace.energy) / n,
        bond_order: stats::mean(&trace.bond_order),
    })
}

/// Completed tasks keyed by [`task_key`].
pub type TaskResults = BTreeMap<String, PointMoments>;

/// Runs every task missing from `done`, calling `checkpoint` after each
/// `every` new tasks.
pub fn run_plan(
    plan: &SweepPlan,
    done: &mut TaskResults,
    every: usize,
    checkpoint: &mut dyn FnMut(&TaskResults) -> Result<()>,
) -> Result<()> {
    let mut fresh = 0;
    for &l in &plan.sizes {
        for p in 0..plan.points.len() {
            for s in 0..plan.samples {
                let key = task_key(l, p, s);
                if done.contains_key(&key) {
                    continue;
                }
                let m = run_task(plan, l, p, s)?;
                done.insert(key, m);
                fresh += 1;
                if every > 0 && fresh % every == 0 {
                    checkpoint(done)?;
                }
            }
        }
    }
    checkpoint(done)
}

/// `xi/L` of the disorder-averaged susceptibilities over the given samples.
fn xi_over_l(moments: &[PointMoments], idx: &[usize], l: usize) -> f64 {
    let (c0, ck) = idx.iter().fold((0.0, 0.0), |(a, b), &i| (a + moments[i].chi0, b + moments[i].chik));
    crate::rbim::correlation_length(c0, ck, l).map_or(f64::INFINITY, |x| x / l as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairCrossing {
    pub sizes: (usize, usize),
    pub x: f64,
    pub inv_nu: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FssCurve {
    pub xs: Vec<f64>,
    pub sizes: Vec<usize>,
    /// `[size][point] = (xi/L, error)`
    pub xi_over_l: Vec<Vec<(f64, f64)>>,
    pub pairs: Vec<PairCrossing>,
    pub crossing: f64,
    pub error: f64,
    pub interval: (f64, f64),
    pub nu: Option<f64>,
    pub bootstrap_failures: usize,
}

/// First downward sign change of `xi/L(L2) - xi/L(L1)` along the grid.
fn pair_crossing(xs: &[f64], small: &[f64], large: &[f64], l1: usize, l2: usize) -> Option<PairCrossing> {
    let d: Vec<f64> = large.iter().zip(small).map(|(a, b)| a - b).collect();
    for i in 0..xs.len().saturating_sub(1) {
        if d[i] > 0.0 && d[i + 1] <= 0.0 && d[i].is_finite() && d[i + 1].is_finite() {
            let x = stats::interpolate_root(xs[i], d[i], xs[i + 1], d[i + 1]);
            let dx = xs[i + 1] - xs[i];
            let s1 = (small[i + 1] - small[i]) / dx;
            let s2 = (large[i + 1] - large[i]) / dx;
            let inv_nu = if s1 < 0.0 && s2 < 0.0 {
                Some((s2 / s1).ln() / (l2 as f64 / l1 as f64).ln())
            } else {
                None
            };
            return Some(PairCrossing { sizes: (l1, l2), x, inv_nu });
        }
    }
    None
}

/// Pairwise downward crossings of per-size curves sampled on `xs`.
pub fn crossings(xs: &[f64], sizes: &[usize], curves: &[Vec<f64>]) -> Vec<PairCrossing> {
    let mut out = Vec::new();
    for a in 0..sizes.len() {
        for b in a + 1..sizes.len() {
            if let Some(c) = pair_crossing(xs, &curves[a], &curves[b], sizes[a], sizes[b]) {
                out.push(c);
            }
        }
    }
    out
}

/// Collects `[size][point][sample]` moments from a finished plan.
pub fn gather(plan: &SweepPlan, done: &TaskResults) -> Result<Vec<Vec<Vec<PointMoments>>>> {
    plan.sizes
        .iter()
        .map(|&l| {
            (0..plan.points.len())
                .map(|p| {
                    (0..plan.samples)
                        .map(|s| {
                            done.get(&task_key(l, p, s))
                                .copied()
                                .ok_or_else(|| Error::InvalidArgument(format!("task {} missing", task_key(l, p, s))))
                        })
                        .collect()
                })
                .collect()
        })
        .collect()
}

/// `[size][point]` of `xi/L` over all samples.
pub fn mean_curves(data: &[Vec<Vec<PointMoments>>], sizes: &[usize]) -> Vec<Vec<f64>> {
    data.iter()
        .zip(sizes)
        .map(|(per_point, &l)| {
            per_point
                .iter()
                .map(|m| xi_over_l(m, &(0..m.len()).collect::<Vec<_>>(), l))
                .collect()
        })
        .collect()
}

/// Crossing of the `xi/L` curves with a bootstrap over disorder samples.
pub fn analyze(xs: &[f64], sizes: &[usize], data: &[Vec<Vec<PointMoments>>], bootstrap: usize, seed: u64) -> Result<FssCurve> {
    if sizes.len() < 2 {
        return Err(Error::InvalidArgument("a crossing needs at least two sizes".into()));
    }
    let samples = data[0][0].len();
    let curves = mean_curves(data, sizes);
    let pairs = crossings(xs, sizes, &curves);
    if pairs.is_empty() {
        return Err(Error::NoCrossing(format!(
            "xi/L curves for L = {sizes:?} do not cross in [{}, {}]",
            xs.first().copied().unwrap_or(f64::NAN),
            xs.last().copied().unwrap_or(f64::NAN)
        )));
    }
    let crossing = stats::mean(&pairs.iter().map(|c| c.x).collect::<Vec<_>>());
    let nus: Vec<f64> = pairs.iter().filter_map(|c| c.inv_nu).filter(|v| *v > 0.0).map(|v| 1.0 / v).collect();
    let nu = if nus.is_empty() { None } else { Some(stats::mean(&nus)) };

    let mut r = rng::stream(seed, rng::task_id(&[0xb007]));
    let mut reps = Vec::new();
    let mut per_curve_reps: Vec<Vec<Vec<f64>>> = vec![vec![Vec::new(); xs.len()]; sizes.len()];
    let mut failures = 0;
    for _ in 0..bootstrap {
        let idx: Vec<Vec<usize>> = sizes.iter().map(|_| stats::resample(samples, &mut r)).collect();
        let c: Vec<Vec<f64>> = (0..sizes.len())
            .map(|a| (0..xs.len()).map(|p| xi_over_l(&data[a][p], &idx[a], sizes[a])).collect())
            .collect();
        for a in 0..sizes.len() {
            for p in 0..xs.len() {
                per_curve_reps[a][p].push(c[a][p]);
            }
        }
        let pc = crossings(xs, sizes, &c);
        if pc.is_empty() {
            failures += 1;
        } else {
            reps.push(stats::mean(&pc.iter().map(|c| c.x).collect::<Vec<_>>()));
        }
    }
    let spread = |v: &[f64]| {
        if v.len() < 2 {
            return 0.0;
        }
        let m = stats::mean(v);
        (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
    };
    let error = spread(&reps);
    reps.sort_by(f64::total_cmp);
    let interval = if reps.len() >= 2 {
        let q = |f: f64| reps[((reps.len() - 1) as f64 * f).round() as usize];
        (q(0.025).min(crossing - error), q(0.975).max(crossing + error))
    } else {
        (crossing, crossing)
    };
    let xi_table = (0..sizes.len())
        .map(|a| (0..xs.len()).map(|p| (curves[a][p], spread(&per_curve_reps[a][p]))).collect())
        .collect();
    Ok(FssCurve {
        xs: xs.to_vec(),
        sizes: sizes.to_vec(),
        xi_over_l: xi_table,
        pairs,
        crossing,
        error,
        interval,
        nu,
        bootstrap_failures: failures,
    })
}

/// Runs a plan in memory and analyses it.
pub fn run_and_analyze(plan: &SweepPlan, bootstrap: usize) -> Result<FssCurve> {
    let mut done = TaskResults::new();
    run_plan(plan, &mut done, 0, &mut |_| Ok(()))?;
    let data = gather(plan, &done)?;
    let xs: Vec<f64> = plan.points.iter().map(|p| p.x).collect();
    analyze(&xs, &plan.sizes, &data, bootstrap, plan.seed)
}

/// Temperature sweep at fixed disorder.
pub fn find_tc(
    model: &ErrorModel,
    r_bar: f64,
    sizes: &[usize],
    temperatures: &[f64],
    samples: usize,
    thermal: ThermalParams,
    seed: u64,
) -> Result<FssCurve> {
    if temperatures.len() < 5 {
        return Err(Error::InvalidArgument("find_tc needs at least 5 temperatures".into()));
    }
    let plan = SweepPlan {
        sizes: sizes.to_vec(),
        points: temperatures
            .iter()
            .map(|&t| GridPoint {
                x: t,
                model: model.clone(),
                r_bar,
                temperature: t,
            })
            .collect(),
        samples,
        thermal,
        sample_options: SampleOptions::default(),
        seed,
    };
    run_and_analyze(&plan, 200)
}

/// Sweep of a one-parameter family along its Nishimori line. The crossing in
/// the parameter is the threshold: below it `xi/L` grows with `L`.
pub fn threshold_scan(
    family: &dyn Fn(f64) -> Result<(ErrorModel, f64)>,
    xs: &[f64],
    sizes: &[usize],
    samples: usize,
    thermal: ThermalParams,
    seed: u64,
) -> Result<FssCurve> {
    let points = xs
        .iter()
        .map(|&x| {
            family(x).map(|(model, temperature)| GridPoint {
                x,
                model,
                r_bar: 0.0,
                temperature,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let plan = SweepPlan {
        sizes: sizes.to_vec(),
        points,
        samples,
        thermal,
        sample_options: SampleOptions::default(),
        seed,
    };
    match run_and_analyze(&plan, 200) {
        Err(Error::NoCrossing(msg)) => Err(Error::Bracket(format!("threshold not bracketed: {msg}"))),
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(chi0: f64, chik: f64) -> PointMoments {
        PointMoments {
            chi0,
            chik,
            energy: 0.0,
            bond_order: 0.0,
        }
    }

    #[test]
    fn synthetic_crossing() {
        // xi/L = 0.5 + (1 - x) L^(1/nu) / 100 with nu = 1
        let xs = [0.6, 0.8, 0.9, 1.1, 1.3];
        let sizes = [8, 16];
        let chik = 1.0;
        let data: Vec<Vec<Vec<PointMoments>>> = sizes
            .iter()
            .map(|&l| {
                xs.iter()
                    .map(|&x| {
                        let r: f64 = 0.5 + (1.0 - x) * l as f64 / 100.0;
                        let chi0 = chik * (1.0 + (2.0 * std::f64::consts::PI * r).powi(2));
                        vec![m(chi0, chik); 4]
                    })
                    .collect()
            })
            .collect();
        let c = analyze(&xs, &sizes, &data, 10, 1).unwrap();
        assert!((c.crossing - 1.0).abs() < 1e-9);
        assert!((c.nu.unwrap() - 1.0).abs() < 1e-9);
        assert!(c.error < 1e-12);
    }

    #[test]
    fn no_crossing_is_reported() {
        let xs = [0.1, 0.2, 0.3, 0.4, 0.5];
        let data = vec![vec![vec![m(2.0, 1.0)]; 5], vec![vec![m(3.0, 1.0)]; 5]];
        assert!(matches!(analyze(&xs, &[8, 16], &data, 5, 1), Err(Error::NoCrossing(_))));
    }

    #[test]
    fn clean_family_has_no_threshold() {
        let family = |_x: f64| Ok((ErrorModel::Independent { p: 0.0, q: 0.0 }, 1.0));
        let r = threshold_scan(&family, &[0.1, 0.2, 0.3], &[4, 6], 2, ThermalParams::new(20, 50), 1);
        assert!(matches!(r, Err(Error::Bracket(_))));
    }

    #[test]
    fn resumed_plan_matches_fresh_run() {
        let plan = SweepPlan {
            sizes: vec![4, 6],
            points: [1.5, 2.5]
                .iter()
                .map(|&t| GridPoint {
                    x: t,
                    model: ErrorModel::Independent { p: 0.05, q: 0.0 },
                    r_bar: 0.0,
                    temperature: t,
                })
                .collect(),
            samples: 3,
            thermal: ThermalParams::new(10, 30),
            sample_options: SampleOptions::default(),
            seed: 11,
        };
        let mut full = TaskResults::new();
        run_plan(&plan, &mut full, 0, &mut |_| Ok(())).unwrap();
        let mut partial = TaskResults::new();
        let stop = run_plan(&plan, &mut partial, 5, &mut |d| {
            if d.len() >= 5 { Err(Error::InvalidArgument("interrupted".into())) } else { Ok(()) }
        });
        assert!(stop.is_err());
        assert_eq!(partial.len(), 5);
        run_plan(&plan, &mut partial, 0, &mut |_| Ok(())).unwrap();
        assert_eq!(full, partial);
    }
}
