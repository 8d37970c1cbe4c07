//! The auxiliary functions `f_i` of the G-IRLS loss and the smoothed
//! penalties `h_{i,ε}` built from them.
//!
//! `f_i` is pinned down (up to a constant) by `f_i'(R_i(x)/x²) = −x²`. With
//! `u(x) = R_i(x)/x²` strictly decreasing and `X = u⁻¹(v)`, integrating by
//! parts in `x` gives
//!
//! ```text
//! f_i(v) = f_i(u₀) − R_i(X) + R_i(1) + 2 ∫_1^X R_i(s)/s ds,   u₀ = R_i(1),
//! ```
//!
//! so only the one-dimensional inverse `X` needs bisection. The constant is
//! fixed by `f_i(u₀) = 1/u₀`, which makes the unit-rate ℓ1 case `f(v) = 1/v`.

use serde::Serialize;

use super::Penalty;
use crate::error::{Error, Result};
use crate::quadrature::{integrate, QuadratureConfig};

const BISECTION_RELATIVE_TOL: f64 = 1e-13;
const PROBE_DECADES: (i32, i32) = (-6, 6);

#[derive(Debug, Clone, Copy)]
enum Form {
    /// `R_i = λ|x|`: `f(v) = λ²/v + 1/λ − λ`.
    Reciprocal { rate: f64 },
    Numeric { anchor_u: f64 },
}

/// Reconstructed `f_i` on `(0, ∞)`.
#[derive(Debug, Clone)]
pub struct AuxiliaryFn<'a, P: Penalty + ?Sized> {
    penalty: &'a P,
    index: usize,
    form: Form,
    quadrature: QuadratureConfig,
}

/// Builds `f_i` for component `i`, probing that `R_i(x)/x²` is strictly
/// decreasing on `x ∈ [1e-6, 1e6]`.
pub fn reconstruct_f<P: Penalty + ?Sized>(penalty: &P, i: usize) -> Result<AuxiliaryFn<'_, P>> {
    if i >= penalty.dim() {
        return Err(Error::OutOfRange(format!(
            "component {i} of a {}-dimensional regularizer",
            penalty.dim()
        )));
    }
    let quadrature = QuadratureConfig::default();
    if let Some(rate) = penalty.l1_rate(i) {
        return Ok(AuxiliaryFn {
            penalty,
            index: i,
            form: Form::Reciprocal { rate },
            quadrature,
        });
    }
    let mut previous = f64::INFINITY;
    for k in (PROBE_DECADES.0 * 4)..=(PROBE_DECADES.1 * 4) {
        let x = 10f64.powf(k as f64 / 4.0);
        let u = penalty.component(i, x)? / (x * x);
        if !(u > 0.0 && u.is_finite() && u < previous) {
            return Err(Error::NotInvertible(format!(
                "R_{i}(x)/x² is not strictly decreasing near x = {x:e}"
            )));
        }
        previous = u;
    }
    let anchor_u = penalty.component(i, 1.0)?;
    Ok(AuxiliaryFn {
        penalty,
        index: i,
        form: Form::Numeric { anchor_u },
        quadrature,
    })
}

impl<P: Penalty + ?Sized> AuxiliaryFn<'_, P> {
    fn ratio(&self, x: f64) -> Result<f64> {
        Ok(self.penalty.component(self.index, x)? / (x * x))
    }

    fn check_domain(u: f64) -> Result<()> {
        if u > 0.0 && u.is_finite() {
            Ok(())
        } else {
            Err(Error::DegenerateInput(format!(
                "f is defined on (0, ∞), got {u}"
            )))
        }
    }

    /// `x > 0` with `R_i(x)/x² = u`.
    pub fn inverse(&self, u: f64) -> Result<f64> {
        Self::check_domain(u)?;
        if let Form::Reciprocal { rate } = self.form {
            return Ok(rate / u);
        }
        let (mut lo, mut hi) = (1e-8, 1.0);
        while self.ratio(lo)? < u {
            lo *= 0.1;
            if lo < 1e-300 {
                return Err(Error::NotInvertible(format!("no x with R(x)/x² = {u:e}")));
            }
        }
        while self.ratio(hi)? > u {
            hi *= 10.0;
            if hi > 1e300 {
                return Err(Error::NotInvertible(format!("no x with R(x)/x² = {u:e}")));
            }
        }
        while hi / lo - 1.0 > BISECTION_RELATIVE_TOL {
            let mid = (lo * hi).sqrt();
            if mid <= lo || mid >= hi {
                break;
            }
            if self.ratio(mid)? > u {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok((lo * hi).sqrt())
    }

    /// `f_i(u)`.
    pub fn value(&self, u: f64) -> Result<f64> {
        Self::check_domain(u)?;
        match self.form {
            Form::Reciprocal { rate } => Ok(rate * rate / u + 1.0 / rate - rate),
            Form::Numeric { anchor_u } => {
                let x = self.inverse(u)?;
                let p = self.penalty;
                let i = self.index;
                let tail = integrate(
                    |s| p.component(i, s).map(|r| r / s).unwrap_or(f64::NAN),
                    1.0,
                    x,
                    &self.quadrature,
                )?;
                Ok(1.0 / anchor_u - p.component(i, x)? + anchor_u + 2.0 * tail.value)
            }
        }
    }

    /// `f_i'(u) = −x(u)²`.
    pub fn derivative(&self, u: f64) -> Result<f64> {
        let x = self.inverse(u)?;
        Ok(-x * x)
    }
}

/// `h_{i,ε}(x) = ½[R_i(s) + f_i(R_i(s)/s²)]` with `s = √(x² + ε²)`.
pub fn h_eval<P: Penalty + ?Sized>(f: &AuxiliaryFn<'_, P>, eps: f64, x: f64) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::DegenerateInput(format!("ε must be positive, got {eps}")));
    }
    let t = x * x + eps * eps;
    let r = f.penalty.component(f.index, t.sqrt())?;
    Ok(0.5 * (r + f.value(r / t)?))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvexityGrid {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
    /// Second differences must exceed this for a strict verdict.
    pub tolerance: f64,
}

impl ConvexityGrid {
    pub fn symmetric(half_width: f64, step: f64) -> Self {
        ConvexityGrid {
            lo: -half_width,
            hi: half_width,
            step,
            tolerance: 1e-10,
        }
    }

    fn points(&self) -> Vec<f64> {
        let count = ((self.hi - self.lo) / self.step).round() as usize;
        (0..=count).map(|k| self.lo + k as f64 * self.step).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvexityReport {
    pub is_strictly_convex: bool,
    pub min_second_difference: f64,
    pub witness: Option<f64>,
}

/// Centered second differences of `h_{i,ε}` on a grid.
pub fn check_convexity_h<P: Penalty + ?Sized>(
    penalty: &P,
    i: usize,
    eps: f64,
    grid: &ConvexityGrid,
) -> Result<ConvexityReport> {
    if !(grid.step > 0.0 && grid.hi > grid.lo) {
        return Err(Error::InvalidSpec("convexity grid must have positive extent".into()));
    }
    let points = grid.points();
    if points.len() < 3 {
        return Err(Error::InvalidSpec("convexity grid needs at least 3 points".into()));
    }
    let f = reconstruct_f(penalty, i)?;
    let values = points
        .iter()
        .map(|&x| h_eval(&f, eps, x))
        .collect::<Result<Vec<_>>>()?;
    let mut min_d2 = f64::INFINITY;
    let mut witness: Option<f64> = None;
    for k in 1..points.len() - 1 {
        let d2 = values[k - 1] - 2.0 * values[k] + values[k + 1];
        if d2 < min_d2 {
            min_d2 = d2;
            if d2 <= grid.tolerance {
                witness = Some(points[k].abs());
            }
        }
    }
    Ok(ConvexityReport {
        is_strictly_convex: min_d2 > grid.tolerance,
        min_second_difference: min_d2,
        witness,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regularizers::Regularizer;

    struct Quartic;
    impl Penalty for Quartic {
        fn dim(&self) -> usize {
            1
        }
        fn component(&self, _i: usize, x: f64) -> Result<f64> {
            Ok(x.powi(4))
        }
    }

    #[test]
    fn l1_reciprocal() {
        let l1 = Regularizer::l1_norm(1).unwrap();
        let f = reconstruct_f(&l1, 0).unwrap();
        assert!((f.value(2.0).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(f.derivative(0.5).unwrap(), -4.0);
    }

    #[test]
    fn l1_with_rate_matches_numeric_route() {
        // Force the numeric path on λ|x| through a wrapper that hides the rate.
        struct Hidden(Regularizer);
        impl Penalty for Hidden {
            fn dim(&self) -> usize {
                1
            }
            fn component(&self, i: usize, x: f64) -> Result<f64> {
                self.0.component(i, x)
            }
        }
        let r = Regularizer::l1(vec![2.5]).unwrap();
        let closed = reconstruct_f(&r, 0).unwrap();
        let hidden = Hidden(r.clone());
        let numeric = reconstruct_f(&hidden, 0).unwrap();
        for u in [0.05, 0.7, 2.5, 30.0] {
            let a = closed.value(u).unwrap();
            let b = numeric.value(u).unwrap();
            assert!((a - b).abs() < 1e-8 * a.abs().max(1.0), "{u}: {a} vs {b}");
        }
    }

    #[test]
    fn defining_condition_holds() {
        let regs = [
            Regularizer::l1_norm(1).unwrap(),
            Regularizer::cl_discrete(vec![1.0], vec![1.0, 4.0], vec![0.5, 0.5]).unwrap(),
        ];
        for r in &regs {
            let f = reconstruct_f(r, 0).unwrap();
            for t in [0.1, 1.0, 10.0] {
                let u = r.weight(0, t).unwrap();
                let d = f.derivative(u).unwrap();
                assert!((d + t).abs() < 1e-6 * t.max(1.0), "t={t}: {d}");
            }
        }
    }

    #[test]
    fn finite_differences_match_derivative() {
        let r = Regularizer::cl_discrete(vec![1.0], vec![1.0, 4.0], vec![0.5, 0.5]).unwrap();
        let f = reconstruct_f(&r, 0).unwrap();
        for u in [0.1, 0.4, 1.0, 3.0] {
            let h = 1e-4 * u;
            let fd = (f.value(u + h).unwrap() - f.value(u - h).unwrap()) / (2.0 * h);
            let x = f.inverse(u).unwrap();
            assert!((fd + x * x).abs() < 1e-5 * (x * x).max(1.0), "u={u}: {fd} vs {}", -x * x);
        }
    }

    #[test]
    fn anchor_value() {
        let r = Regularizer::cl_discrete(vec![1.0], vec![1.0, 4.0], vec![0.5, 0.5]).unwrap();
        let f = reconstruct_f(&r, 0).unwrap();
        let u0 = r.component(0, 1.0).unwrap();
        assert!((f.value(u0).unwrap() - 1.0 / u0).abs() < 1e-10);
    }

    #[test]
    fn non_invertible_double() {
        assert!(matches!(reconstruct_f(&Quartic, 0), Err(Error::NotInvertible(_))));
    }

    #[test]
    fn h_for_l1() {
        let l1 = Regularizer::l1_norm(1).unwrap();
        let f = reconstruct_f(&l1, 0).unwrap();
        assert!((h_eval(&f, 1.0, 0.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((h_eval(&f, 1.0, 3f64.sqrt()).unwrap() - 2.0).abs() < 1e-15);
        let r = Regularizer::cl_discrete(vec![1.0], vec![1.0, 4.0], vec![0.5, 0.5]).unwrap();
        let g = reconstruct_f(&r, 0).unwrap();
        for x in [0.3, 1.7, 6.0] {
            assert_eq!(h_eval(&g, 0.5, x).unwrap(), h_eval(&g, 0.5, -x).unwrap());
        }
        assert!(h_eval(&f, 0.0, 1.0).is_err());
    }

    #[test]
    fn convexity_of_l1_h() {
        let l1 = Regularizer::l1_norm(1).unwrap();
        let rep = check_convexity_h(&l1, 0, 1.0, &ConvexityGrid::symmetric(5.0, 0.01)).unwrap();
        assert!(rep.is_strictly_convex);
        assert!(rep.witness.is_none());
        // analytic: ε²/(x²+ε²)^{3/2} · step², smallest at the last interior point
        let expected = 1.0 / (1.0 + 4.99f64 * 4.99).powf(1.5) * 1e-4;
        assert!((rep.min_second_difference - expected).abs() < 1e-3 * expected);
    }

    #[test]
    fn vanishing_smoothing_loses_strict_convexity() {
        let l1 = Regularizer::l1_norm(1).unwrap();
        let rep = check_convexity_h(&l1, 0, 1e-8, &ConvexityGrid::symmetric(5.0, 0.01)).unwrap();
        assert!(!rep.is_strictly_convex);
        assert!(rep.min_second_difference.abs() < 1e-12);
        assert!(rep.witness.unwrap() >= 0.0);
    }

    #[test]
    fn degenerate_grid() {
        let l1 = Regularizer::l1_norm(1).unwrap();
        let g = ConvexityGrid {
            lo: 0.0,
            hi: 0.01,
            step: 0.01,
            tolerance: 1e-10,
        };
        assert!(check_convexity_h(&l1, 0, 1.0, &g).is_err());
    }
}
