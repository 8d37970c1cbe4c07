//! Weak null space property on `G_y − G_y = ker A`: for all kernel vectors
//! `x` and supports `|S| ≤ K`, `R(x_S) ≤ γ R(x_{[n]∖S}) + δ`.
//!
//! Because `R` is separable, the binding support for a given `x` is always the
//! set of its `K` largest components, so only that one support is evaluated.
//! The checker is a falsifier: a violation comes with a witness that has been
//! re-evaluated independently, while "holds" only means no sample violated.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{kernel_basis, Matrix, Vector};
use crate::regularizers::Penalty;
use crate::sparsity::top_k_indices;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NspQuery {
    #[serde(rename = "K")]
    pub k: usize,
    pub gamma: f64,
    pub delta: f64,
}

/// Which kernel vectors to test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sampling {
    /// Random unit directions in kernel coordinates.
    pub count: usize,
    /// Each direction is tested at every radius.
    pub radii: Vec<f64>,
    pub seed: u64,
    /// Optional dense grid: for every radius `r`, all points of
    /// `{−r, …, r}^d` with this many points per kernel coordinate.
    #[serde(default)]
    pub grid_points: Option<usize>,
}

/// `{10^{-2}, 10^{-1.5}, …, 10^{2}}`.
pub fn default_radii() -> Vec<f64> {
    (0..9).map(|k| 10f64.powf(-2.0 + 0.5 * k as f64)).collect()
}

pub const DEFAULT_GRID_POINTS: usize = 201;

impl Sampling {
    pub fn new(count: usize, seed: u64) -> Self {
        Sampling {
            count,
            radii: default_radii(),
            seed,
            grid_points: None,
        }
    }

    pub fn with_radii(mut self, radii: Vec<f64>) -> Self {
        self.radii = radii;
        self
    }

    pub fn with_grid(mut self, points: usize) -> Self {
        self.grid_points = Some(points);
        self
    }

    fn validate(&self) -> Result<()> {
        if self.radii.is_empty() || self.radii.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
            return Err(Error::InvalidSpec("radii must be a non-empty list of positive numbers".into()));
        }
        if let Some(g) = self.grid_points {
            if g < 2 {
                return Err(Error::InvalidSpec("a grid needs at least 2 points per axis".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NspReport {
    pub holds_on_samples: bool,
    pub worst_deficit: f64,
    pub witness: Option<Vec<f64>>,
    pub witness_support: Option<Vec<usize>>,
    /// `(γ, δ̂(γ))` with `δ̂(γ) = max(0, max_x R(x_S) − γ R(x_tail))`.
    pub delta_frontier: Vec<(f64, f64)>,
    pub samples_used: usize,
    pub radii: Vec<f64>,
    pub seed: u64,
}

/// The `K` indices maximizing `R(x_S)`, ascending, ties to the lowest index.
pub fn worst_support<P: Penalty + ?Sized>(penalty: &P, x: &[f64], k: usize) -> Result<Vec<usize>> {
    if k > x.len() {
        return Err(Error::OutOfRange(format!("K = {k} exceeds dimension {}", x.len())));
    }
    Ok(top_k_indices(&penalty.components(x)?, k))
}

fn restrict(x: &[f64], support: &[usize], inside: bool) -> Vec<f64> {
    let mut mask = vec![!inside; x.len()];
    for &i in support {
        mask[i] = inside;
    }
    x.iter().zip(&mask).map(|(v, keep)| if *keep { *v } else { 0.0 }).collect()
}

/// `R(x_S) − γ R(x_{[n]∖S}) − δ` on the worst support, evaluated from the
/// restricted vectors themselves.
pub fn deficit<P: Penalty + ?Sized>(penalty: &P, x: &[f64], query: &NspQuery) -> Result<f64> {
    let support = worst_support(penalty, x, query.k)?;
    let head = penalty.eval(&restrict(x, &support, true))?;
    let tail = penalty.eval(&restrict(x, &support, false))?;
    Ok(head - query.gamma * tail - query.delta)
}

struct Scan {
    /// Per γ: max of `R(x_S) − γ R(x_tail)` and its argmax.
    best: Vec<(f64, Option<Vec<f64>>)>,
    visited: usize,
}

fn scan<P: Penalty + ?Sized>(
    a: &Matrix,
    penalty: &P,
    k: usize,
    gammas: &[f64],
    sampling: &Sampling,
) -> Result<Scan> {
    sampling.validate()?;
    let n = a.ncols();
    penalty.check_len(n)?;
    if k > n {
        return Err(Error::OutOfRange(format!("K = {k} exceeds dimension {n}")));
    }
    let basis = kernel_basis(a)?;
    let d = basis.ncols();
    let mut scan = Scan {
        best: gammas.iter().map(|_| (f64::NEG_INFINITY, None)).collect(),
        visited: 0,
    };
    if d == 0 {
        // ker A = {0}
        for b in scan.best.iter_mut() {
            *b = (0.0, Some(vec![0.0; n]));
        }
        scan.visited = 1;
        return Ok(scan);
    }

    let mut values = vec![0.0; n];
    let mut visit = |x: &[f64], scan: &mut Scan| -> Result<()> {
        for (i, v) in x.iter().enumerate() {
            values[i] = penalty.component(i, *v)?;
        }
        let (head, tail) = if k == 0 {
            (0.0, values.iter().sum())
        } else if k == n {
            (values.iter().sum(), 0.0)
        } else {
            values.select_nth_unstable_by(k - 1, |p, q| q.total_cmp(p));
            (values[..k].iter().sum::<f64>(), values[k..].iter().sum::<f64>())
        };
        for (g, best) in gammas.iter().zip(scan.best.iter_mut()) {
            let score = head - g * tail;
            if score > best.0 {
                *best = (score, Some(x.to_vec()));
            }
        }
        scan.visited += 1;
        Ok(())
    };

    let mut rng = ChaCha8Rng::seed_from_u64(sampling.seed);
    let mut x = vec![0.0; n];
    for _ in 0..sampling.count {
        let g: Vector = Vector::from_fn(d, |_, _| StandardNormal.sample(&mut rng));
        let norm = g.norm();
        if norm == 0.0 {
            continue;
        }
        let dir = &basis * (g / norm);
        for &r in &sampling.radii {
            for (xi, di) in x.iter_mut().zip(dir.iter()) {
                *xi = r * di;
            }
            visit(&x, &mut scan)?;
        }
    }

    if let Some(points) = sampling.grid_points {
        let first: Vec<f64> = basis.column(0).iter().copied().collect();
        let mut offset = vec![0.0; n];
        let mut outer = vec![0usize; d - 1];
        for &r in &sampling.radii {
            let step = 2.0 * r / (points - 1) as f64;
            let coord = |j: usize| -r + j as f64 * step;
            outer.iter_mut().for_each(|i| *i = 0);
            loop {
                // contribution of every coordinate but the first
                for (row, o) in offset.iter_mut().enumerate() {
                    *o = outer.iter().enumerate().map(|(c, &j)| basis[(row, c + 1)] * coord(j)).sum();
                }
                let outer_zero = outer.iter().all(|&j| coord(j) == 0.0);
                for j in 0..points {
                    let t = coord(j);
                    if outer_zero && t == 0.0 {
                        continue;
                    }
                    for ((xi, o), b) in x.iter_mut().zip(&offset).zip(&first) {
                        *xi = o + b * t;
                    }
                    visit(&x, &mut scan)?;
                }
                let mut pos = 0;
                while pos < outer.len() {
                    outer[pos] += 1;
                    if outer[pos] < points {
                        break;
                    }
                    outer[pos] = 0;
                    pos += 1;
                }
                if pos == outer.len() {
                    break;
                }
            }
        }
    }
    Ok(scan)
}

fn validate_query(query: &NspQuery) -> Result<()> {
    if !(query.gamma > 0.0 && query.gamma.is_finite()) || !(query.delta >= 0.0) {
        return Err(Error::InvalidSpec(format!(
            "need γ > 0 and δ ≥ 0, got γ = {}, δ = {}",
            query.gamma, query.delta
        )));
    }
    Ok(())
}

/// Tests the `(K, γ, δ)` weak null space property of `(G_y, R)` on sampled
/// kernel vectors.
pub fn check_nsp<P: Penalty + ?Sized>(
    a: &Matrix,
    penalty: &P,
    query: &NspQuery,
    sampling: &Sampling,
) -> Result<NspReport> {
    validate_query(query)?;
    let scan = scan(a, penalty, query.k, &[query.gamma], sampling)?;
    let (score, arg) = scan.best.into_iter().next().expect("one gamma");
    let mut worst = score - query.delta;
    let mut witness = None;
    let mut witness_support = None;
    if worst > 0.0 {
        let x = arg.expect("a scored sample");
        let rechecked = deficit(penalty, &x, query)?;
        worst = rechecked;
        if rechecked > 0.0 {
            witness_support = Some(worst_support(penalty, &x, query.k)?);
            witness = Some(x);
        }
    }
    Ok(NspReport {
        holds_on_samples: worst <= 0.0,
        worst_deficit: worst,
        witness,
        witness_support,
        delta_frontier: vec![(query.gamma, score.max(0.0))],
        samples_used: scan.visited,
        radii: sampling.radii.clone(),
        seed: sampling.seed,
    })
}

/// Smallest `δ̂(γ)` making the sampled inequality hold, for each `γ`.
pub fn estimate_frontier<P: Penalty + ?Sized>(
    a: &Matrix,
    penalty: &P,
    k: usize,
    gammas: &[f64],
    sampling: &Sampling,
) -> Result<NspReport> {
    if gammas.is_empty() || gammas.iter().any(|g| !(*g > 0.0 && g.is_finite())) {
        return Err(Error::InvalidSpec("gammas must be a non-empty list of positive numbers".into()));
    }
    let scan = scan(a, penalty, k, gammas, sampling)?;
    let frontier: Vec<(f64, f64)> = gammas
        .iter()
        .zip(&scan.best)
        .map(|(g, (score, _))| (*g, score.max(0.0)))
        .collect();
    let worst = scan
        .best
        .iter()
        .zip(&frontier)
        .map(|((score, _), (_, d))| score - d)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(NspReport {
        holds_on_samples: true,
        worst_deficit: worst,
        witness: None,
        witness_support: None,
        delta_frontier: frontier,
        samples_used: scan.visited,
        radii: sampling.radii.clone(),
        seed: sampling.seed,
    })
}
