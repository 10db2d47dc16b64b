//! Adaptive Gauss-Kronrod quadrature.
//!
//! The 15-point Kronrod rule never evaluates interval endpoints, so
//! integrable endpoint singularities (`x^{-1/2}` and the like) are handled by
//! repeated bisection of the worst interval. Error estimates follow QUADPACK's
//! `qk15` heuristic.

// Nodes and weights are copied digit for digit from QUADPACK.
#![allow(clippy::excessive_precision)]

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

// 7-point Gauss weights at XGK[1], XGK[3], XGK[5] and the centre.
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Tolerance and node budget for adaptive integration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadParams {
    /// Accepted when the error estimate is below `tolerance` in absolute
    /// terms or relative to the magnitude of the result.
    pub tolerance: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadParams {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            max_subdivisions: 2000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub abs_error: f64,
    pub evaluations: usize,
}

#[derive(Clone, Copy, Debug)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
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

#[allow(clippy::needless_range_loop)]
fn kronrod15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Segment {
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let abs_half = half.abs();

    let fc = f(centre);
    let mut res_g = fc * WG[3];
    let mut res_k = fc * WGK[7];
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];

    for j in 0..3 {
        let jtw = 2 * j + 1;
        let x = half * XGK[jtw];
        let (f1, f2) = (f(centre - x), f(centre + x));
        fv1[jtw] = f1;
        fv2[jtw] = f2;
        res_g += WG[j] * (f1 + f2);
        res_k += WGK[jtw] * (f1 + f2);
        res_abs += WGK[jtw] * (f1.abs() + f2.abs());
    }
    for j in 0..4 {
        let jtwm1 = 2 * j;
        let x = half * XGK[jtwm1];
        let (f1, f2) = (f(centre - x), f(centre + x));
        fv1[jtwm1] = f1;
        fv2[jtwm1] = f2;
        res_k += WGK[jtwm1] * (f1 + f2);
        res_abs += WGK[jtwm1] * (f1.abs() + f2.abs());
    }

    let mean = 0.5 * res_k;
    let mut res_asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    res_abs *= abs_half;
    res_asc *= abs_half;

    let mut error = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && error != 0.0 {
        error = res_asc * (200.0 * error / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * res_abs);
    }

    Segment {
        a,
        b,
        value: res_k * half,
        error,
    }
}

/// Integrates `f` over `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, params: QuadParams) -> Result<Estimate> {
    integrate_with_breaks(f, &[a, b], params)
}

/// Integrates `f` over `[breaks[0], breaks[last]]`, starting from the given
/// partition. Useful when the location of a narrow peak is known.
pub fn integrate_with_breaks<F: Fn(f64) -> f64>(
    f: F,
    breaks: &[f64],
    params: QuadParams,
) -> Result<Estimate> {
    if breaks.len() < 2 {
        return Err(Error::InvalidInput(
            "quadrature needs at least two breakpoints".into(),
        ));
    }
    if breaks.iter().any(|x| !x.is_finite()) || breaks.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidInput(format!(
            "quadrature breakpoints must be finite and nondecreasing: {breaks:?}"
        )));
    }

    let mut heap = BinaryHeap::new();
    let mut evaluations = 0;
    for w in breaks.windows(2) {
        if w[1] > w[0] {
            heap.push(kronrod15(&f, w[0], w[1]));
            evaluations += 15;
        }
    }

    let totals = |heap: &BinaryHeap<Segment>| {
        heap.iter()
            .fold((0.0, 0.0), |(v, e), s| (v + s.value, e + s.error))
    };

    let mut splits = 0;
    loop {
        let (value, error) = totals(&heap);
        let target = params.tolerance.max(params.tolerance * value.abs());
        if !value.is_finite() || !error.is_finite() {
            return Err(Error::QuadratureFailure {
                estimate: f64::INFINITY,
                tolerance: target,
            });
        }
        if error <= target {
            return Ok(Estimate {
                value,
                abs_error: error,
                evaluations,
            });
        }
        let worst = match heap.pop() {
            Some(s) => s,
            None => {
                return Ok(Estimate {
                    value,
                    abs_error: error,
                    evaluations,
                })
            }
        };
        let mid = 0.5 * (worst.a + worst.b);
        let exhausted = splits >= params.max_subdivisions;
        let too_narrow = mid <= worst.a || mid >= worst.b;
        if exhausted || too_narrow {
            return Err(Error::QuadratureFailure {
                estimate: error,
                tolerance: target,
            });
        }
        heap.push(kronrod15(&f, worst.a, mid));
        heap.push(kronrod15(&f, mid, worst.b));
        evaluations += 30;
        splits += 1;
    }
}

/// Integrates `exp(log_f(u))` over the whole real line.
///
/// `centre` should sit near the mode of `log_f` and `width` should be of the
/// order of the peak width. The range is widened from the centre until the
/// integrand has fallen by a factor `e^-60` below the largest value seen on
/// each side; the remaining tails are then negligible for integrands that
/// decay at least exponentially in `u`.
pub fn integrate_log_line<F: Fn(f64) -> f64>(
    log_f: F,
    centre: f64,
    width: f64,
    params: QuadParams,
) -> Result<Estimate> {
    const DROP: f64 = 60.0;
    const MAX_STEPS: usize = 400;

    if !centre.is_finite() || !width.is_finite() || width <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "log-line integration needs a finite centre and positive width (centre {centre}, width {width})"
        )));
    }

    let mut peak = log_f(centre);
    let mut edge = |direction: f64| -> Result<f64> {
        let mut step = width;
        let mut u = centre;
        for _ in 0..MAX_STEPS {
            u += direction * step;
            let v = log_f(u);
            if v > peak {
                peak = v;
            } else if v < peak - DROP || v == f64::NEG_INFINITY {
                return Ok(u);
            }
            step *= 1.25;
        }
        Err(Error::QuadratureFailure {
            estimate: f64::INFINITY,
            tolerance: params.tolerance,
        })
    };
    let hi = edge(1.0)?;
    let lo = edge(-1.0)?;

    let mut breaks = Vec::with_capacity(9);
    for i in 0..=4 {
        breaks.push(lo + (centre - lo) * i as f64 / 4.0);
    }
    for i in 1..=4 {
        breaks.push(centre + (hi - centre) * i as f64 / 4.0);
    }
    integrate_with_breaks(|u| log_f(u).exp(), &breaks, params)
}

/// Cumulative distribution obtained by integrating a density from `lower`.
///
/// Queries in nondecreasing order reuse the previous value and only integrate
/// the increment, which is how KS statistics walk a sorted sample.
pub struct QuadratureCdf<F> {
    density: F,
    lower: f64,
    params: QuadParams,
    last_x: f64,
    last_value: f64,
}

impl<F: Fn(f64) -> f64> QuadratureCdf<F> {
    pub fn new(density: F, lower: f64, params: QuadParams) -> Self {
        Self {
            density,
            lower,
            params,
            last_x: lower,
            last_value: 0.0,
        }
    }

    pub fn eval(&mut self, x: f64) -> Result<f64> {
        if x <= self.lower {
            return Ok(0.0);
        }
        let (from, base) = if x >= self.last_x {
            (self.last_x, self.last_value)
        } else {
            (self.lower, 0.0)
        };
        let inc = integrate(&self.density, from, x, self.params)?;
        self.last_x = x;
        self.last_value = base + inc.value;
        Ok(self.last_value)
    }
}
