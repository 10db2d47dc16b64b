//! Conditioning distributions on `[0, inf)`: gamma, Levy and one-sided stable.
//!
//! Gamma(alpha, lambda) has density `lambda^alpha x^(alpha-1) e^(-lambda x) / Gamma(alpha)`
//! and Laplace transform `(lambda / (lambda + s))^alpha`. The one-sided stable law
//! with scale `alpha` and index `nu` has transform `exp(-alpha s^nu)`; at
//! `nu = 1/2` it is the Levy distribution with density
//! `alpha e^(-alpha^2 / 4x) / (2 sqrt(pi x^3))`. Both families are closed under
//! convolution (gamma at fixed decay rate, stable at fixed index).

use std::cmp::Ordering;
use std::f64::consts::PI;
use std::io::{self, Write};

use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Cap on rejection-loop iterations in the samplers.
pub const MAX_REJECTIONS: usize = 10_000;

#[cfg(feature = "fault-injection")]
const LEVY_SCALE_FAULT: f64 = 0.5;
#[cfg(not(feature = "fault-injection"))]
const LEVY_SCALE_FAULT: f64 = 1.0;

/// A nonnegative quantity that may be infinite.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Extended {
    Finite(f64),
    Infinite,
}

impl Extended {
    pub fn finite(self) -> Option<f64> {
        match self {
            Extended::Finite(v) => Some(v),
            Extended::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Extended::Infinite)
    }
}

/// A mass distribution on `[0, inf)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase", deny_unknown_fields)]
pub enum DistributionSpec {
    /// Shape `alpha`, decay rate `lambda`.
    Gamma { alpha: f64, lambda: f64 },
    /// Stable law with index 1/2 and scale `alpha`.
    Levy { alpha: f64 },
    /// One-sided stable law with scale `alpha` and index `nu` in (0, 1).
    Stable { alpha: f64, nu: f64 },
}

/// Closed convolution families.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Family {
    Gamma { lambda: f64 },
    Stable { nu: f64 },
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidSpec(format!(
            "{name} must be a positive finite number, got {v}"
        )))
    }
}

fn check_point(name: &str, x: f64) -> Result<()> {
    if x.is_finite() && x >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "{name} must be finite and nonnegative, got {x}"
        )))
    }
}

impl DistributionSpec {
    pub fn gamma(alpha: f64, lambda: f64) -> Result<Self> {
        let spec = DistributionSpec::Gamma { alpha, lambda };
        spec.validate()?;
        Ok(spec)
    }

    pub fn levy(alpha: f64) -> Result<Self> {
        let spec = DistributionSpec::Levy { alpha };
        spec.validate()?;
        Ok(spec)
    }

    pub fn stable(alpha: f64, nu: f64) -> Result<Self> {
        let spec = DistributionSpec::Stable { alpha, nu };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            DistributionSpec::Gamma { alpha, lambda } => {
                positive("gamma shape alpha", alpha)?;
                positive("gamma decay lambda", lambda)
            }
            DistributionSpec::Levy { alpha } => positive("levy scale alpha", alpha),
            DistributionSpec::Stable { alpha, nu } => {
                positive("stable scale alpha", alpha)?;
                if nu > 0.0 && nu < 1.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidSpec(format!(
                        "stable index nu must lie in (0, 1), got {nu}"
                    )))
                }
            }
        }
    }

    /// Shape (gamma) or scale (stable) parameter.
    pub fn alpha(&self) -> f64 {
        match *self {
            DistributionSpec::Gamma { alpha, .. }
            | DistributionSpec::Levy { alpha }
            | DistributionSpec::Stable { alpha, .. } => alpha,
        }
    }

    pub fn family(&self) -> Family {
        match *self {
            DistributionSpec::Gamma { lambda, .. } => Family::Gamma { lambda },
            DistributionSpec::Levy { .. } => Family::Stable { nu: 0.5 },
            DistributionSpec::Stable { nu, .. } => Family::Stable { nu },
        }
    }

    /// Same family and fixed parameter, new shape/scale.
    pub fn with_alpha(&self, alpha: f64) -> Self {
        match *self {
            DistributionSpec::Gamma { lambda, .. } => DistributionSpec::Gamma { alpha, lambda },
            DistributionSpec::Levy { .. } => DistributionSpec::Levy { alpha },
            DistributionSpec::Stable { nu, .. } => DistributionSpec::Stable { alpha, nu },
        }
    }

    /// Probability density at `x`.
    ///
    /// Gamma with `alpha < 1` diverges at the origin and reports
    /// [`Extended::Infinite`] there. Stable laws other than `nu = 1/2` have no
    /// closed form and return [`Error::UnsupportedDensity`].
    pub fn density(&self, x: f64) -> Result<Extended> {
        self.validate()?;
        check_point("x", x)?;
        if let DistributionSpec::Gamma { alpha, lambda } = *self {
            if x == 0.0 {
                return Ok(if alpha < 1.0 {
                    Extended::Infinite
                } else if alpha == 1.0 {
                    Extended::Finite(lambda)
                } else {
                    Extended::Finite(0.0)
                });
            }
        } else if x == 0.0 {
            self.require_closed_form()?;
            return Ok(Extended::Finite(0.0));
        }
        Ok(Extended::Finite(self.ln_density_at_log(x.ln())?.exp()))
    }

    fn require_closed_form(&self) -> Result<()> {
        match *self {
            DistributionSpec::Stable { nu, .. } if nu != 0.5 => {
                Err(Error::UnsupportedDensity { nu })
            }
            _ => Ok(()),
        }
    }

    /// Natural log of the density at `x = exp(ln_x)`.
    ///
    /// Taking the logarithm of the argument keeps quadrature over `ln x` free
    /// of underflow in `x` itself.
    pub fn ln_density_at_log(&self, ln_x: f64) -> Result<f64> {
        self.require_closed_form()?;
        Ok(match *self {
            DistributionSpec::Gamma { alpha, lambda } => {
                alpha * lambda.ln() - ln_gamma(alpha) + (alpha - 1.0) * ln_x - lambda * ln_x.exp()
            }
            _ => {
                let alpha = self.alpha();
                alpha.ln()
                    - alpha * alpha / 4.0 * (-ln_x).exp()
                    - (2.0 * PI.sqrt()).ln()
                    - 1.5 * ln_x
            }
        })
    }

    /// Laplace transform `E[exp(-s X)]`.
    pub fn laplace(&self, s: f64) -> Result<f64> {
        self.validate()?;
        check_point("s", s)?;
        Ok(match *self {
            DistributionSpec::Gamma { alpha, lambda } => (lambda / (lambda + s)).powf(alpha),
            DistributionSpec::Levy { alpha } => (-alpha * s.sqrt()).exp(),
            DistributionSpec::Stable { alpha, nu } => (-alpha * s.powf(nu)).exp(),
        })
    }

    pub fn mean(&self) -> Extended {
        match *self {
            DistributionSpec::Gamma { alpha, lambda } => Extended::Finite(alpha / lambda),
            DistributionSpec::Levy { .. } | DistributionSpec::Stable { .. } => Extended::Infinite,
        }
    }

    /// Draws one variate.
    ///
    /// Gamma uses Marsaglia-Tsang squeeze rejection (boosted by `U^(1/alpha)`
    /// for `alpha < 1`). Levy inverts a standard normal, `alpha^2 / (2 Z^2)`.
    /// General stable laws use Kanter's representation from a uniform angle
    /// and a unit exponential.
    pub fn sample(&self, rng: &mut RngStream) -> Result<f64> {
        self.validate()?;
        match *self {
            DistributionSpec::Gamma { alpha, lambda } => Ok(sample_gamma(alpha, rng)? / lambda),
            DistributionSpec::Levy { alpha } => sample_levy(alpha * LEVY_SCALE_FAULT, rng),
            DistributionSpec::Stable { alpha, nu } => Ok(sample_stable(alpha, nu, rng)),
        }
    }
}

/// Standard gamma variate with shape `alpha` and unit rate.
fn sample_gamma(alpha: f64, rng: &mut RngStream) -> Result<f64> {
    if alpha < 1.0 {
        let boost = rng.open01().ln() / alpha;
        let base = sample_gamma(alpha + 1.0, rng)?;
        return Ok((base.ln() + boost).exp());
    }
    let d = alpha - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    for _ in 0..MAX_REJECTIONS {
        let x: f64 = StandardNormal.sample(rng);
        let v = 1.0 + c * x;
        if v <= 0.0 {
            continue;
        }
        let v = v * v * v;
        let u = rng.open01();
        let x2 = x * x;
        if u < 1.0 - 0.0331 * x2 * x2 || u.ln() < 0.5 * x2 + d * (1.0 - v + v.ln()) {
            return Ok(d * v);
        }
    }
    Err(Error::NonConvergence {
        what: "gamma rejection sampler",
        cap: MAX_REJECTIONS,
    })
}

/// `alpha^2 / (2 Z^2)` with `Z` standard normal.
pub fn levy_from_normal(alpha: f64, z: f64) -> f64 {
    alpha * alpha / (2.0 * z * z)
}

fn sample_levy(alpha: f64, rng: &mut RngStream) -> Result<f64> {
    for _ in 0..MAX_REJECTIONS {
        let z: f64 = StandardNormal.sample(rng);
        if z != 0.0 {
            return Ok(levy_from_normal(alpha, z));
        }
    }
    Err(Error::NonConvergence {
        what: "levy normal inversion",
        cap: MAX_REJECTIONS,
    })
}

/// Kanter: with `theta ~ U(0, pi)` and `E ~ Exp(1)`,
/// `(A(theta) / E)^((1 - nu) / nu)` has transform `exp(-s^nu)`, where
/// `A(theta) = [sin(nu theta)^nu sin((1 - nu) theta)^(1 - nu) / sin theta]^(1 / (1 - nu))`.
/// Scaling by `alpha^(1 / nu)` gives transform `exp(-alpha s^nu)`.
fn sample_stable(alpha: f64, nu: f64, rng: &mut RngStream) -> f64 {
    let theta = PI * rng.open01();
    let e: f64 = Exp1.sample(rng);
    let ln_a = (nu * (nu * theta).sin().ln() + (1.0 - nu) * ((1.0 - nu) * theta).sin().ln()
        - theta.sin().ln())
        / (1.0 - nu);
    let ln_x = (1.0 - nu) / nu * (ln_a - e.ln()) + alpha.ln() / nu;
    ln_x.exp()
}

/// Closed-form convolution within a family.
///
/// `Gamma(a1, l) * Gamma(a2, l) = Gamma(a1 + a2, l)` and
/// `Stable(a1, nu) * Stable(a2, nu) = Stable(a1 + a2, nu)`. A Levy operand
/// paired with `Stable(_, 1/2)` produces the `Stable` form.
pub fn convolve_closed(a: &DistributionSpec, b: &DistributionSpec) -> Result<DistributionSpec> {
    a.validate()?;
    b.validate()?;
    use DistributionSpec::*;
    match (*a, *b) {
        (
            Gamma {
                alpha: a1,
                lambda: l1,
            },
            Gamma {
                alpha: a2,
                lambda: l2,
            },
        ) => {
            if l1 == l2 {
                Ok(Gamma {
                    alpha: a1 + a2,
                    lambda: l1,
                })
            } else {
                Err(Error::ClosureViolation(format!(
                    "gamma decay rates differ ({l1} vs {l2})"
                )))
            }
        }
        (Levy { alpha: a1 }, Levy { alpha: a2 }) => Ok(Levy { alpha: a1 + a2 }),
        (Gamma { .. }, _) | (_, Gamma { .. }) => Err(Error::ClosureViolation(
            "gamma and stable laws do not convolve in closed form".into(),
        )),
        _ => {
            let (nu1, nu2) = match (a.family(), b.family()) {
                (Family::Stable { nu: x }, Family::Stable { nu: y }) => (x, y),
                _ => unreachable!("gamma handled above"),
            };
            if nu1 == nu2 {
                Ok(Stable {
                    alpha: a.alpha() + b.alpha(),
                    nu: nu1,
                })
            } else {
                Err(Error::ClosureViolation(format!(
                    "stable indices differ ({nu1} vs {nu2})"
                )))
            }
        }
    }
}

/// Monte Carlo estimate of a Laplace transform with its standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LaplaceEstimate {
    pub mean: f64,
    pub std_error: f64,
}

/// Mean of `exp(-s x)` over `samples`.
pub fn empirical_laplace(samples: &[f64], s: f64) -> Result<LaplaceEstimate> {
    if samples.is_empty() {
        return Err(Error::EmptyInput(
            "empirical_laplace needs at least one sample",
        ));
    }
    check_point("s", s)?;
    if let Some(x) = samples.iter().find(|x| x.is_nan() || **x < 0.0) {
        return Err(Error::InvalidInput(format!(
            "samples must be nonnegative, got {x}"
        )));
    }
    let n = samples.len() as f64;
    let term = |x: f64| if s == 0.0 { 1.0 } else { (-s * x).exp() };
    let mean = samples.iter().map(|&x| term(x)).sum::<f64>() / n;
    let std_error = if samples.len() > 1 {
        let var = samples
            .iter()
            .map(|&x| (term(x) - mean).powi(2))
            .sum::<f64>()
            / (n - 1.0);
        (var / n).sqrt()
    } else {
        0.0
    };
    Ok(LaplaceEstimate { mean, std_error })
}

/// A density tabulated on a uniform grid starting at zero.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityTable {
    grid: Vec<f64>,
    values: Vec<f64>,
}

impl DensityTable {
    pub fn new(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if grid.is_empty() {
            return Err(Error::EmptyInput("density table needs at least one point"));
        }
        if grid.len() != values.len() {
            return Err(Error::InvalidInput(format!(
                "grid has {} points but values has {}",
                grid.len(),
                values.len()
            )));
        }
        if grid[0] < 0.0
            || grid
                .windows(2)
                .any(|w| w[1].partial_cmp(&w[0]) != Some(Ordering::Greater))
        {
            return Err(Error::InvalidInput(
                "grid must be nonnegative and strictly increasing".into(),
            ));
        }
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidInput(
                "density values must be finite and nonnegative".into(),
            ));
        }
        Ok(Self { grid, values })
    }

    /// `values[k]` sits at `k * step`.
    pub fn uniform(step: f64, values: Vec<f64>) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "grid step must be positive, got {step}"
            )));
        }
        let grid = (0..values.len()).map(|k| k as f64 * step).collect();
        Self::new(grid, values)
    }

    /// Tabulates `spec` at `0, step, ..., (points - 1) * step`.
    pub fn from_spec(spec: &DistributionSpec, step: f64, points: usize) -> Result<Self> {
        let mut values = Vec::with_capacity(points);
        for k in 0..points {
            match spec.density(k as f64 * step)? {
                Extended::Finite(v) => values.push(v),
                Extended::Infinite => {
                    return Err(Error::BoundaryDivergence { index: k });
                }
            }
        }
        Self::uniform(step, values)
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// Common spacing when the grid is uniform and anchored at zero.
    pub fn uniform_step(&self) -> Option<f64> {
        if self.grid[0] != 0.0 {
            return None;
        }
        if self.grid.len() == 1 {
            return Some(f64::NAN);
        }
        let n = self.grid.len() - 1;
        let step = self.grid[n] / n as f64;
        let uniform = self
            .grid
            .iter()
            .enumerate()
            .all(|(k, &x)| (x - k as f64 * step).abs() <= 1e-9 * step.max(x));
        uniform.then_some(step)
    }

    /// Trapezoid integral of `weight(x) * f(x)` over the grid.
    fn trapezoid(&self, weight: impl Fn(f64) -> f64) -> f64 {
        self.grid
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(x, f)| 0.5 * (x[1] - x[0]) * (weight(x[0]) * f[0] + weight(x[1]) * f[1]))
            .sum()
    }

    pub fn integral(&self) -> f64 {
        self.trapezoid(|_| 1.0)
    }

    /// Trapezoid approximation of the Laplace transform at `s`.
    pub fn laplace(&self, s: f64) -> f64 {
        self.trapezoid(|x| (-s * x).exp())
    }

    /// Two columns `x,density` under a one-line header, 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "x,density")?;
        for (x, f) in self.grid.iter().zip(&self.values) {
            writeln!(out, "{x:.16e},{f:.16e}")?;
        }
        Ok(())
    }
}

/// Trapezoid discretization of `(a * b)(x) = int_0^x a(u) b(x - u) du`.
///
/// Both tables must share the step and start at zero; the result lives on
/// the longer of the two grids. Values past the end of a table count as
/// zero, so mass whose convolution lands beyond the grid is dropped and the
/// output integrates to at most `int a * int b` plus an `O(h^2)`
/// discretization term. Products are summed in mirrored pairs so the result
/// is bit-identical under swapping `a` and `b`.
pub fn numeric_convolve(a: &DensityTable, b: &DensityTable) -> Result<DensityTable> {
    let (ha, hb) = match (a.uniform_step(), b.uniform_step()) {
        (Some(ha), Some(hb)) => (ha, hb),
        _ => {
            return Err(Error::GridMismatch(
                "both grids must be uniform and start at zero".into(),
            ))
        }
    };
    let step = match (ha.is_nan(), hb.is_nan()) {
        (true, true) => {
            return Err(Error::GridMismatch(
                "single-point tables carry no grid step".into(),
            ))
        }
        (true, false) => hb,
        (false, true) => ha,
        (false, false) => {
            if (ha - hb).abs() > 1e-12 * ha.max(hb) {
                return Err(Error::GridMismatch(format!(
                    "grid steps differ ({ha} vs {hb})"
                )));
            }
            // steps recovered from grids of different length may differ in the
            // last bits; an order-free choice keeps the result symmetric
            ha.max(hb)
        }
    };

    let fa = |j: usize| a.values.get(j).copied().unwrap_or(0.0);
    let fb = |j: usize| b.values.get(j).copied().unwrap_or(0.0);
    let n = a.len().max(b.len());
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let mut sum = 0.0;
        for j in 0..k.div_ceil(2) {
            sum += fa(j) * fb(k - j) + fa(k - j) * fb(j);
        }
        if k % 2 == 0 {
            sum += fa(k / 2) * fb(k / 2);
        }
        let ends = 0.5 * (fa(0) * fb(k) + fa(k) * fb(0));
        out.push((step * (sum - ends)).max(0.0));
    }
    let longer = match a.len().cmp(&b.len()) {
        Ordering::Greater => a,
        Ordering::Less => b,
        Ordering::Equal => {
            let by_nodes = a
                .grid
                .iter()
                .zip(&b.grid)
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne());
            if by_nodes == Some(Ordering::Less) {
                b
            } else {
                a
            }
        }
    };
    let grid = longer.grid.clone();
    DensityTable::new(grid, out)
}
