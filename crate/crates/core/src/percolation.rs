//! Erasure percolation on the L×L torus.
//!
//! Union-find where every node stores its displacement to the parent. An edge
//! closing a loop with nonzero net displacement means the cluster winds
//! around the torus.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fss::{crossings, PairCrossing};
use crate::rng::{self, Rng};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PercolationKind {
    /// Only bonds are erased.
    Bond,
    /// Sites and bonds are erased with the same probability.
    SiteBond,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Winding {
    pub x: bool,
    pub y: bool,
}

impl Winding {
    pub fn any(&self) -> bool {
        self.x || self.y
    }
}

/// Surviving structure: `sites[s]`, `bonds[2*s + dir]` as in [`crate::disorder`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TorusGraph {
    pub l: usize,
    pub sites: Vec<bool>,
    pub bonds: Vec<bool>,
}

struct OffsetUnionFind {
    parent: Vec<usize>,
    offset: Vec<(i32, i32)>,
    rank: Vec<u8>,
}

impl OffsetUnionFind {
    fn new(n: usize) -> Self {
        OffsetUnionFind {
            parent: (0..n).collect(),
            offset: vec![(0, 0); n],
            rank: vec![0; n],
        }
    }

    /// Root of `a` and the displacement from `a` to it.
    fn find(&mut self, a: usize) -> (usize, (i32, i32)) {
        let p = self.parent[a];
        if p == a {
            return (a, (0, 0));
        }
        let (root, d) = self.find(p);
        let o = self.offset[a];
        self.offset[a] = (o.0 + d.0, o.1 + d.1);
        self.parent[a] = root;
        (root, self.offset[a])
    }

    /// Joins `b = a + d`; returns the loop displacement if already joined.
    fn union(&mut self, a: usize, b: usize, d: (i32, i32)) -> Option<(i32, i32)> {
        let (ra, da) = self.find(a);
        let (rb, db) = self.find(b);
        if ra == rb {
            return Some((da.0 - d.0 - db.0, da.1 - d.1 - db.1));
        }
        // displacement from rb to ra: rb -> b -> a -> ra
        let link = (da.0 - d.0 - db.0, da.1 - d.1 - db.1);
        if self.rank[ra] < self.rank[rb] {
            self.parent[ra] = rb;
            self.offset[ra] = (-link.0, -link.1);
        } else {
            self.parent[rb] = ra;
            self.offset[rb] = link;
            if self.rank[ra] == self.rank[rb] {
                self.rank[ra] += 1;
            }
        }
        None
    }
}

impl TorusGraph {
    pub fn full(l: usize) -> Self {
        TorusGraph {
            l,
            sites: vec![true; l * l],
            bonds: vec![true; 2 * l * l],
        }
    }

    pub fn sample(l: usize, kind: PercolationKind, r: f64, rng: &mut Rng) -> Self {
        let mut g = TorusGraph::full(l);
        for b in g.bonds.iter_mut() {
            *b = rng.random::<f64>() >= r;
        }
        if kind == PercolationKind::SiteBond {
            for s in g.sites.iter_mut() {
                *s = rng.random::<f64>() >= r;
            }
        }
        g
    }

    fn bond_usable(&self, s: usize, dir: usize) -> Option<usize> {
        let l = self.l;
        let (x, y) = (s % l, s / l);
        let t = if dir == 0 { y * l + (x + 1) % l } else { ((y + 1) % l) * l + x };
        (self.bonds[2 * s + dir] && self.sites[s] && self.sites[t]).then_some(t)
    }

    /// Directions in which some cluster of surviving elements winds.
    pub fn winding(&self) -> Winding {
        let l = self.l;
        let mut uf = OffsetUnionFind::new(l * l);
        let mut w = Winding::default();
        for s in 0..l * l {
            for dir in 0..2 {
                if let Some(t) = self.bond_usable(s, dir) {
                    let d = if dir == 0 { (1, 0) } else { (0, 1) };
                    if let Some(lp) = uf.union(s, t, d) {
                        w.x |= lp.0 != 0;
                        w.y |= lp.1 != 0;
                    }
                }
            }
        }
        w
    }

    pub fn percolates(&self) -> bool {
        self.winding().any()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurvivalPoint {
    pub r: f64,
    pub trials: usize,
    pub wraps: usize,
}

impl SurvivalPoint {
    pub fn fraction(&self) -> f64 {
        self.wraps as f64 / self.trials as f64
    }

    pub fn error(&self) -> f64 {
        let f = self.fraction();
        (f * (1.0 - f) / self.trials as f64).sqrt()
    }
}

/// Fraction of samples with a winding cluster at each erasure probability.
pub fn survival_curve(l: usize, kind: PercolationKind, rs: &[f64], trials: usize, seed: u64) -> Result<Vec<SurvivalPoint>> {
    if l < 2 || trials == 0 {
        return Err(Error::InvalidArgument(format!("need l >= 2 and trials > 0 (l = {l}, trials = {trials})")));
    }
    rs.iter()
        .enumerate()
        .map(|(i, &r)| {
            if !(0.0..=1.0).contains(&r) {
                return Err(Error::InvalidArgument(format!("erasure probability {r} outside [0, 1]")));
            }
            let mut rng = rng::stream(seed, rng::task_id(&[l as u64, i as u64]));
            let wraps = (0..trials).filter(|_| TorusGraph::sample(l, kind, r, &mut rng).percolates()).count();
            Ok(SurvivalPoint { r, trials, wraps })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PercolationThreshold {
    pub kind: PercolationKind,
    pub sizes: Vec<usize>,
    pub curves: Vec<Vec<SurvivalPoint>>,
    pub pairs: Vec<PairCrossing>,
    pub threshold: f64,
    /// Largest shift of the crossing when every curve moves by one standard error.
    pub error: f64,
}

/// Crossing of the survival curves of different sizes.
pub fn percolation_threshold(kind: PercolationKind, sizes: &[usize], rs: &[f64], trials: usize, seed: u64) -> Result<PercolationThreshold> {
    let curves = sizes
        .iter()
        .map(|&l| survival_curve(l, kind, rs, trials, seed))
        .collect::<Result<Vec<_>>>()?;
    let fractions = |shift: f64| -> Vec<Vec<f64>> {
        curves
            .iter()
            .enumerate()
            .map(|(a, c)| {
                let sign = if a % 2 == 0 { shift } else { -shift };
                c.iter().map(|p| p.fraction() + sign * p.error()).collect()
            })
            .collect()
    };
    let pairs = crossings(rs, sizes, &fractions(0.0));
    if pairs.is_empty() {
        return Err(Error::NoCrossing(format!("survival curves for L = {sizes:?} do not cross")));
    }
    let mean = |p: &[PairCrossing]| p.iter().map(|c| c.x).sum::<f64>() / p.len() as f64;
    let threshold = mean(&pairs);
    let error = [-1.0, 1.0]
        .iter()
        .filter_map(|&s| {
            let p = crossings(rs, sizes, &fractions(s));
            (!p.is_empty()).then(|| (mean(&p) - threshold).abs())
        })
        .fold(0.0, f64::max);
    Ok(PercolationThreshold {
        kind,
        sizes: sizes.to_vec(),
        curves,
        pairs,
        threshold,
        error,
    })
}
