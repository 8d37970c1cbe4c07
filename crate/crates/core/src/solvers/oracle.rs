use serde::Serialize;

use super::SensingProblem;
use crate::error::{Error, Result};
use crate::linalg::{kernel_basis, min_norm_solution};
use crate::regularizers::Penalty;

pub const DEFAULT_ORACLE_POINTS: usize = 401;
const MAX_KERNEL_DIM: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleGrid {
    /// Points per kernel coordinate. Going from `p` to `2p − 1` nests the
    /// grids, so the minimum cannot increase.
    pub points_per_axis: usize,
    /// Half-width of the coordinate box; `‖c₀‖∞ + ‖y‖₁ + 1` when absent.
    pub half_width: Option<f64>,
}

impl Default for OracleGrid {
    fn default() -> Self {
        OracleGrid {
            points_per_axis: DEFAULT_ORACLE_POINTS,
            half_width: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridMinimum {
    /// Upper bound on `inf R` over the solution set.
    pub min_value: f64,
    pub minimizer: Vec<f64>,
    pub step: f64,
    pub half_width: f64,
    /// `step · Σ_i L_i Σ_j |N_ij|`: how much `R` can change across one
    /// cell, given Lipschitz constants `L_i`. Infinite when unknown.
    pub cell_modulus: f64,
}

/// Grid minimum of `R` over `{c₀ + N t}` with `c₀` the minimum-norm solution
/// and `N` an orthonormal kernel basis of dimension at most 3.
pub fn bruteforce_min_r_over_gy<P: Penalty + ?Sized>(
    problem: &SensingProblem,
    penalty: &P,
    grid: &OracleGrid,
) -> Result<GridMinimum> {
    let n = problem.n();
    penalty.check_len(n)?;
    let basis = kernel_basis(&problem.a)?;
    let d = basis.ncols();
    if d > MAX_KERNEL_DIM {
        return Err(Error::TooLarge(format!("kernel dimension {d} exceeds {MAX_KERNEL_DIM}")));
    }
    if grid.points_per_axis < 2 {
        return Err(Error::InvalidSpec("the oracle grid needs at least 2 points per axis".into()));
    }
    let c0 = min_norm_solution(&problem.a, &problem.y)?;
    let half = grid
        .half_width
        .unwrap_or_else(|| c0.amax() + problem.y.lp_norm(1) + 1.0);
    if !(half > 0.0 && half.is_finite()) {
        return Err(Error::InvalidSpec(format!("box half-width must be positive, got {half}")));
    }
    let points = grid.points_per_axis;
    let step = 2.0 * half / (points - 1) as f64;

    let mut modulus = 0.0;
    for i in 0..n {
        let l = penalty.lipschitz(i).unwrap_or(f64::INFINITY);
        let row: f64 = (0..d).map(|j| basis[(i, j)].abs()).sum();
        if row > 0.0 {
            modulus += l * row;
        }
    }

    let mut best = (f64::INFINITY, c0.as_slice().to_vec());
    let coord = |j: usize| -half + j as f64 * step;
    let mut consider = |x: &[f64]| -> Result<()> {
        let mut value = 0.0;
        for (i, xi) in x.iter().enumerate() {
            value += penalty.component(i, *xi)?;
            if value >= best.0 {
                return Ok(());
            }
        }
        best = (value, x.to_vec());
        Ok(())
    };
    if d == 0 {
        consider(c0.as_slice())?;
    } else {
        let first: Vec<f64> = basis.column(0).iter().copied().collect();
        let mut offset = vec![0.0; n];
        let mut x = vec![0.0; n];
        let mut outer = vec![0usize; d - 1];
        loop {
            for (row, o) in offset.iter_mut().enumerate() {
                *o = c0[row] + outer.iter().enumerate().map(|(c, &j)| basis[(row, c + 1)] * coord(j)).sum::<f64>();
            }
            for j in 0..points {
                let t = coord(j);
                for ((xi, o), b) in x.iter_mut().zip(&offset).zip(&first) {
                    *xi = o + b * t;
                }
                consider(&x)?;
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
    Ok(GridMinimum {
        min_value: best.0,
        minimizer: best.1,
        step,
        half_width: half,
        cell_modulus: step * modulus,
    })
}
