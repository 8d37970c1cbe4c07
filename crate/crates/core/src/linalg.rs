//! Dense linear algebra on top of `nalgebra` storage.
//!
//! Only two numerical kernels live here: a Cholesky-based SPD solve with
//! iterative refinement, and an orthonormal null space basis obtained from a
//! full Householder QR of `Aᵀ`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Singular values below this fraction of the largest count as zero.
pub const RANK_TOLERANCE: f64 = 1e-12;

const SYMMETRY_TOLERANCE: f64 = 1e-12;
const REFINEMENT_STEPS: usize = 2;

pub fn ensure_finite_matrix(m: &Matrix, what: &str) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::DegenerateInput(format!("{what} has non-finite entries")))
    }
}

pub fn ensure_finite_vector(v: &Vector, what: &str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::DegenerateInput(format!("{what} has non-finite entries")))
    }
}

/// Lower-triangular Cholesky factor `L` with `M = L Lᵀ`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    l: Matrix,
}

impl Cholesky {
    /// Factorizes `m`, failing on the first pivot at or below
    /// `f64::EPSILON * max|diag|`.
    pub fn new(m: &Matrix) -> Result<Self> {
        let n = m.nrows();
        let max_diag = (0..n).map(|i| m[(i, i)].abs()).fold(0.0, f64::max);
        let floor = f64::EPSILON * max_diag;
        let mut l = Matrix::zeros(n, n);
        for j in 0..n {
            let mut d = m[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if !(d > floor) {
                return Err(Error::NotPositiveDefinite { index: j, pivot: d });
            }
            let d = d.sqrt();
            l[(j, j)] = d;
            for i in (j + 1)..n {
                let mut s = m[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / d;
            }
        }
        Ok(Cholesky { l })
    }

    pub fn solve(&self, b: &Vector) -> Vector {
        let n = self.l.nrows();
        let mut z = b.clone();
        for i in 0..n {
            let mut s = z[i];
            for k in 0..i {
                s -= self.l[(i, k)] * z[k];
            }
            z[i] = s / self.l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = z[i];
            for k in (i + 1)..n {
                s -= self.l[(k, i)] * z[k];
            }
            z[i] = s / self.l[(i, i)];
        }
        z
    }

    pub fn factor(&self) -> &Matrix {
        &self.l
    }
}

fn check_symmetric(m: &Matrix) -> Result<()> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "expected a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let scale = m.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            if (m[(i, j)] - m[(j, i)]).abs() > SYMMETRY_TOLERANCE * scale.max(1.0) {
                return Err(Error::DegenerateInput(format!(
                    "matrix is not symmetric at ({i}, {j})"
                )));
            }
        }
    }
    Ok(())
}

/// Solves `M x = b` for symmetric positive definite `M`.
pub fn solve_spd(m: &Matrix, b: &Vector) -> Result<Vector> {
    solve_spd_jittered(m, b, 0.0)
}

/// Like [`solve_spd`], but when the factorization breaks down and `jitter > 0`
/// retries once on `M + jitter·I`.
pub fn solve_spd_jittered(m: &Matrix, b: &Vector, jitter: f64) -> Result<Vector> {
    check_symmetric(m)?;
    if b.len() != m.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "right-hand side has length {}, matrix is {}x{}",
            b.len(),
            m.nrows(),
            m.ncols()
        )));
    }
    let (chol, system) = match Cholesky::new(m) {
        Ok(c) => (c, None),
        Err(e) if jitter > 0.0 => {
            let shifted = m + Matrix::identity(m.nrows(), m.ncols()) * jitter;
            match Cholesky::new(&shifted) {
                Ok(c) => (c, Some(shifted)),
                Err(_) => return Err(e),
            }
        }
        Err(e) => return Err(e),
    };
    let system = system.as_ref().unwrap_or(m);
    let mut x = chol.solve(b);
    for _ in 0..REFINEMENT_STEPS {
        let r = b - system * &x;
        x += chol.solve(&r);
    }
    Ok(x)
}

/// Numerical rank with singular values below `RANK_TOLERANCE × σ_max` dropped.
pub fn numerical_rank(a: &Matrix) -> usize {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0;
    }
    let sv = a.clone().svd(false, false).singular_values;
    let largest = sv.iter().fold(0.0_f64, |m, s| m.max(*s));
    if largest == 0.0 {
        return 0;
    }
    sv.iter().filter(|s| **s > RANK_TOLERANCE * largest).count()
}

fn require_full_row_rank(a: &Matrix) -> Result<()> {
    let rank = numerical_rank(a);
    if rank < a.nrows() {
        return Err(Error::RankDeficient {
            rank,
            required: a.nrows(),
        });
    }
    Ok(())
}

/// Full orthogonal factor `Q` (n×n) of a Householder QR of `b` (n×m, m ≤ n).
fn householder_full_q(b: &Matrix) -> Matrix {
    let (n, m) = b.shape();
    let mut r = b.clone();
    let mut reflectors: Vec<Vector> = Vec::with_capacity(m);
    for j in 0..m.min(n) {
        let mut v = Vector::zeros(n);
        for i in j..n {
            v[i] = r[(i, j)];
        }
        let alpha = v.norm();
        if alpha == 0.0 {
            reflectors.push(Vector::zeros(n));
            continue;
        }
        v[j] += alpha.copysign(v[j]);
        let vnorm = v.norm();
        v /= vnorm;
        for k in j..m {
            let s: f64 = (j..n).map(|i| v[i] * r[(i, k)]).sum();
            for i in j..n {
                r[(i, k)] -= 2.0 * v[i] * s;
            }
        }
        reflectors.push(v);
    }
    let mut q = Matrix::identity(n, n);
    for v in reflectors.iter().rev() {
        for k in 0..n {
            let s: f64 = (0..n).map(|i| v[i] * q[(i, k)]).sum();
            if s != 0.0 {
                for i in 0..n {
                    q[(i, k)] -= 2.0 * v[i] * s;
                }
            }
        }
    }
    q
}

/// Orthonormal basis (n×(n−m)) of the null space of a full-row-rank `A`.
pub fn kernel_basis(a: &Matrix) -> Result<Matrix> {
    let (m, n) = a.shape();
    if m > n {
        return Err(Error::RankDeficient {
            rank: n,
            required: m,
        });
    }
    ensure_finite_matrix(a, "A")?;
    require_full_row_rank(a)?;
    let q = householder_full_q(&a.transpose());
    Ok(q.columns(m, n - m).into_owned())
}

/// Minimum ℓ2-norm solution `Aᵀ (A Aᵀ)⁻¹ y`.
pub fn min_norm_solution(a: &Matrix, y: &Vector) -> Result<Vector> {
    if y.len() != a.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "y has length {}, A has {} rows",
            y.len(),
            a.nrows()
        )));
    }
    let gram = a * a.transpose();
    let x = solve_spd(&symmetrize(gram), y)?;
    Ok(a.transpose() * x)
}

/// Averages `m` with its transpose to remove rounding asymmetry.
pub fn symmetrize(m: Matrix) -> Matrix {
    let t = m.transpose();
    (m + t) * 0.5
}
