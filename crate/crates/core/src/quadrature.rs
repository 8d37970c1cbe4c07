//! Globally adaptive Gauss–Kronrod (10/21) quadrature.
//!
//! Intervals are kept in a max-heap keyed by their error estimate and the
//! worst one is bisected until the summed error meets
//! `max(abs_tol, rel_tol·|I|)`. Half-line integrals are mapped onto (0, 1)
//! with `z = a + s/(1−s)`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuadratureConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            abs_tol: 1e-12,
            rel_tol: 1e-10,
            max_subdivisions: 2000,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) {
            return Err(Error::InvalidSpec(
                "quadrature tolerances must be positive".into(),
            ));
        }
        if self.max_subdivisions == 0 {
            return Err(Error::InvalidSpec(
                "quadrature needs at least one subdivision".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
}

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    abs_value: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Result<Segment> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[10];
    let mut gauss = 0.0;
    let mut abs_sum = kronrod.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let x = half * XGK[j];
        let f1 = f(center - x);
        let f2 = f(center + x);
        fv1[j] = f1;
        fv2[j] = f2;
        kronrod += WGK[j] * (f1 + f2);
        abs_sum += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    if !kronrod.is_finite() {
        return Err(Error::QuadratureFailure(format!(
            "non-finite integrand on [{a}, {b}]"
        )));
    }
    let mean = 0.5 * kronrod;
    let mut asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let abs_half = half.abs();
    let raw = ((kronrod - gauss) * half).abs();
    let asc = asc * abs_half;
    let abs_value = abs_sum * abs_half;
    let mut err = raw;
    if asc != 0.0 && err != 0.0 {
        err = asc * (200.0 * err / asc).powf(1.5).min(1.0);
    }
    if abs_value > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * abs_value);
    }
    Ok(Segment {
        a,
        b,
        value: kronrod * half,
        error: err,
        abs_value,
    })
}

/// Integrates `f` over `[points[0], points[last]]`, using interior points as
/// initial breakpoints.
pub fn integrate_with_breaks<F: Fn(f64) -> f64>(
    f: F,
    points: &[f64],
    cfg: &QuadratureConfig,
) -> Result<Estimate> {
    if points.len() < 2 {
        return Err(Error::QuadratureFailure("need at least two points".into()));
    }
    let mut heap = BinaryHeap::new();
    for w in points.windows(2) {
        if w[1] > w[0] {
            heap.push(gk21(&f, w[0], w[1])?);
        }
    }
    if heap.is_empty() {
        return Ok(Estimate {
            value: 0.0,
            error: 0.0,
            intervals: 0,
        });
    }
    let mut count = heap.len();
    loop {
        let value: f64 = heap.iter().map(|s| s.value).sum();
        let error: f64 = heap.iter().map(|s| s.error).sum();
        let abs_value: f64 = heap.iter().map(|s| s.abs_value).sum();
        let tol = cfg.abs_tol.max(cfg.rel_tol * value.abs());
        // Below this floor further bisection only chases rounding noise.
        let noise = 100.0 * f64::EPSILON * abs_value;
        if error <= tol || error <= noise {
            return Ok(Estimate {
                value,
                error,
                intervals: count,
            });
        }
        if count >= cfg.max_subdivisions {
            return Err(Error::QuadratureFailure(format!(
                "error estimate {error:e} exceeds tolerance {tol:e} after {count} subdivisions"
            )));
        }
        let worst = heap.pop().expect("non-empty heap");
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            return Err(Error::QuadratureFailure(format!(
                "interval [{}, {}] cannot be bisected further",
                worst.a, worst.b
            )));
        }
        heap.push(gk21(&f, worst.a, mid)?);
        heap.push(gk21(&f, mid, worst.b)?);
        count += 1;
    }
}

pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, cfg: &QuadratureConfig) -> Result<Estimate> {
    if b < a {
        let e = integrate_with_breaks(f, &[b, a], cfg)?;
        return Ok(Estimate {
            value: -e.value,
            ..e
        });
    }
    integrate_with_breaks(f, &[a, b], cfg)
}

/// `∫_a^∞ f(z) dz` through `z = a + s/(1−s)`; `breaks` are points of
/// `(a, ∞)` where the integrand needs resolving.
pub fn integrate_half_line<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    breaks: &[f64],
    cfg: &QuadratureConfig,
) -> Result<Estimate> {
    let mut pts = vec![0.0];
    let mut interior: Vec<f64> = breaks
        .iter()
        .filter(|z| z.is_finite() && **z > a)
        .map(|z| {
            let d = z - a;
            d / (1.0 + d)
        })
        .collect();
    interior.sort_by(f64::total_cmp);
    interior.dedup();
    pts.extend(interior);
    pts.push(1.0);
    integrate_with_breaks(
        |s| {
            let t = 1.0 - s;
            let v = f(a + s / t);
            if v == 0.0 {
                0.0
            } else {
                v / (t * t)
            }
        },
        &pts,
        cfg,
    )
}

/// `∫_{-∞}^{∞} f(x) dx`, split at `center`.
pub fn integrate_real_line<F: Fn(f64) -> f64>(
    f: F,
    center: f64,
    cfg: &QuadratureConfig,
) -> Result<Estimate> {
    let right = integrate_half_line(|x| f(x), center, &[], cfg)?;
    let left = integrate_half_line(|x| f(2.0 * center - x), center, &[], cfg)?;
    Ok(Estimate {
        value: left.value + right.value,
        error: left.error + right.error,
        intervals: left.intervals + right.intervals,
    })
}
