//! Adaptive Gauss–Kronrod and fixed Gauss–Legendre quadrature for real,
//! complex and small vector-valued integrands.

use std::collections::BinaryHeap;
use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::C64;

/// How multidimensional integrals are evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Nested one-dimensional adaptive rules (tensor adaptive).
    Adaptive,
    /// Composite Gauss–Legendre with a fixed number of panels per axis.
    Fixed { panels: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Half-width of momentum windows, in units of the packet width.
    pub window_halfwidth: f64,
    /// Interval budget of each one-dimensional adaptive integration.
    pub max_subdivisions: usize,
    pub scheme: Scheme,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            rel_tol: 1e-5,
            abs_tol: 1e-9,
            window_halfwidth: 10.0,
            max_subdivisions: 2000,
            scheme: Scheme::Adaptive,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.rel_tol.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "rel_tol must be > 0, got {}",
                self.rel_tol
            )));
        }
        if !(self.abs_tol >= 0.0 && self.abs_tol.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "abs_tol must be >= 0, got {}",
                self.abs_tol
            )));
        }
        if !(self.window_halfwidth >= 6.0) {
            return Err(Error::InvalidParameter(format!(
                "window half-width must be >= 6 packet widths, got {}",
                self.window_halfwidth
            )));
        }
        if self.max_subdivisions == 0 {
            return Err(Error::InvalidParameter("max_subdivisions must be > 0".into()));
        }
        if let Scheme::Fixed { panels } = self.scheme {
            if panels == 0 {
                return Err(Error::InvalidParameter("fixed scheme needs >= 1 panel".into()));
            }
        }
        Ok(())
    }

    pub fn with_tolerances(self, rel_tol: f64, abs_tol: f64) -> Self {
        Self {
            rel_tol,
            abs_tol,
            ..self
        }
    }
}

/// Integrand values the rules can accumulate.
pub trait Value: Copy + Send + Sync {
    fn zero() -> Self;
    fn axpy(&mut self, a: f64, x: &Self);
    /// Largest component magnitude.
    fn norm(&self) -> f64;
    fn sub(&self, other: &Self) -> Self {
        let mut d = *self;
        d.axpy(-1.0, other);
        d
    }
}

impl Value for f64 {
    fn zero() -> Self {
        0.0
    }
    fn axpy(&mut self, a: f64, x: &Self) {
        *self += a * x;
    }
    fn norm(&self) -> f64 {
        self.abs()
    }
}

impl Value for C64 {
    fn zero() -> Self {
        C64::new(0.0, 0.0)
    }
    fn axpy(&mut self, a: f64, x: &Self) {
        *self += x * a;
    }
    fn norm(&self) -> f64 {
        self.re.abs().max(self.im.abs())
    }
}

impl<T: Value, const N: usize> Value for [T; N] {
    fn zero() -> Self {
        [T::zero(); N]
    }
    fn axpy(&mut self, a: f64, x: &Self) {
        for (s, v) in self.iter_mut().zip(x) {
            s.axpy(a, v);
        }
    }
    fn norm(&self) -> f64 {
        self.iter().map(Value::norm).fold(0.0, f64::max)
    }
}

/// An integral with its error estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate<T> {
    pub value: T,
    pub error: f64,
    pub subdivisions: usize,
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

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_600_525_452_386,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

// Gauss weights for the odd-indexed Kronrod nodes (1, 3, 5, 7, 9).
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

struct Segment<T> {
    a: f64,
    b: f64,
    value: T,
    error: f64,
}

impl<T> PartialEq for Segment<T> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl<T> Eq for Segment<T> {}
impl<T> PartialOrd for Segment<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T> Ord for Segment<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk21<T: Value>(f: &impl Fn(f64) -> T, a: f64, b: f64) -> (T, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = T::zero();
    let mut gauss = T::zero();
    kron.axpy(WGK[10], &fc);
    for j in 0..10 {
        let dx = h * XGK[j];
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        kron.axpy(WGK[j], &f1);
        kron.axpy(WGK[j], &f2);
        if j % 2 == 1 {
            gauss.axpy(WG[j / 2], &f1);
            gauss.axpy(WG[j / 2], &f2);
        }
    }
    let mut value = T::zero();
    value.axpy(h, &kron);
    let mut g = T::zero();
    g.axpy(h, &gauss);
    let raw = value.sub(&g).norm();
    // The (200 e)^1.5 rescaling of the raw Gauss/Kronrod difference is the
    // customary pessimistic estimate for smooth integrands.
    let err = if raw == 0.0 {
        0.0
    } else {
        let scale = (200.0 * raw / value.norm().max(f64::MIN_POSITIVE)).powf(1.5).min(1.0);
        (raw * scale.max(1e-3)).max(50.0 * f64::EPSILON * value.norm())
    };
    (value, err)
}

fn sorted_points(a: f64, b: f64, breaks: &[f64]) -> Vec<f64> {
    let mut pts = vec![a];
    let mut inner: Vec<f64> = breaks
        .iter()
        .copied()
        .filter(|x| x.is_finite() && *x > a && *x < b)
        .collect();
    inner.sort_by(f64::total_cmp);
    inner.dedup();
    pts.extend(inner);
    pts.push(b);
    pts
}

/// Globally adaptive Gauss–Kronrod (10/21) integration of `f` over `[a, b]`.
///
/// `breaks` are interior points where the integrand has kinks or sharp
/// features; they seed the initial partition. Convergence is declared when the
/// summed error estimate drops below `max(abs_tol, rel_tol * |value|)`, with the
/// norm taken componentwise for vector integrands.
pub fn integrate_with<T: Value>(
    f: impl Fn(f64) -> T,
    a: f64,
    b: f64,
    breaks: &[f64],
    q: &QuadratureSpec,
) -> Result<Estimate<T>> {
    if a == b {
        return Ok(Estimate {
            value: T::zero(),
            error: 0.0,
            subdivisions: 0,
        });
    }
    if b < a {
        let mut est = integrate_with(f, b, a, breaks, q)?;
        let v = est.value;
        est.value = T::zero();
        est.value.axpy(-1.0, &v);
        return Ok(est);
    }
    if let Scheme::Fixed { panels } = q.scheme {
        return Ok(gauss_legendre_composite(&f, a, b, breaks, panels));
    }
    let pts = sorted_points(a, b, breaks);
    let mut heap = BinaryHeap::new();
    let mut total = T::zero();
    let mut err = 0.0;
    for w in pts.windows(2) {
        let (v, e) = gk21(&f, w[0], w[1]);
        total.axpy(1.0, &v);
        err += e;
        heap.push(Segment {
            a: w[0],
            b: w[1],
            value: v,
            error: e,
        });
    }
    let mut count = heap.len();
    loop {
        let tol = q.abs_tol.max(q.rel_tol * total.norm());
        if err <= tol {
            break;
        }
        if count >= q.max_subdivisions {
            return Err(Error::Quadrature {
                value: total.norm(),
                error: err,
                subdivisions: count,
            });
        }
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            // Interval exhausted at floating-point resolution; keep what we have.
            heap.push(worst);
            break;
        }
        let (v1, e1) = gk21(&f, worst.a, mid);
        let (v2, e2) = gk21(&f, mid, worst.b);
        total.axpy(-1.0, &worst.value);
        total.axpy(1.0, &v1);
        total.axpy(1.0, &v2);
        err += e1 + e2 - worst.error;
        heap.push(Segment {
            a: worst.a,
            b: mid,
            value: v1,
            error: e1,
        });
        heap.push(Segment {
            a: mid,
            b: worst.b,
            value: v2,
            error: e2,
        });
        count += 1;
    }
    // Re-sum to shed the rounding drift of incremental updates.
    let mut value = T::zero();
    let mut error = 0.0;
    for s in heap.iter() {
        value.axpy(1.0, &s.value);
        error += s.error;
    }
    Ok(Estimate {
        value,
        error,
        subdivisions: count,
    })
}

/// Scalar convenience wrapper around [`integrate_with`].
pub fn integrate(
    f: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    breaks: &[f64],
    q: &QuadratureSpec,
) -> Result<Estimate<f64>> {
    integrate_with(f, a, b, breaks, q)
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp;
        loop {
            let (mut p1, mut p2) = (1.0, 0.0);
            for j in 1..=n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2 * j - 1) as f64 * z * p2 - (j - 1) as f64 * p3) / j as f64;
            }
            dp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() <= 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

const FIXED_ORDER: usize = 20;

/// Composite 20-point Gauss–Legendre with `panels` equal panels between
/// consecutive breakpoints. The error is estimated against a halved panel count.
pub fn gauss_legendre_composite<T: Value>(
    f: &impl Fn(f64) -> T,
    a: f64,
    b: f64,
    breaks: &[f64],
    panels: usize,
) -> Estimate<T> {
    let (x, w) = gauss_legendre(FIXED_ORDER);
    let rule = |m: usize| {
        let mut total = T::zero();
        for seg in sorted_points(a, b, breaks).windows(2) {
            let h = (seg[1] - seg[0]) / m as f64;
            for p in 0..m {
                let c = seg[0] + (p as f64 + 0.5) * h;
                for (xi, wi) in x.iter().zip(&w) {
                    total.axpy(0.5 * h * wi, &f(c + 0.5 * h * xi));
                }
            }
        }
        total
    };
    let fine = rule(panels);
    let coarse = rule(panels.div_ceil(2).max(1));
    let error = if panels > 1 { fine.sub(&coarse).norm() } else { f64::NAN };
    Estimate {
        value: fine,
        error,
        subdivisions: panels,
    }
}
