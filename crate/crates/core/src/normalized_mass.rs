//! Normalized cluster masses.
//!
//! Given independent masses `x_i ~ f_i` with sum `z`, the vector
//! `p = x / z` is itself a random probability distribution over the `n`
//! clusters. Its joint density is `int_0^inf z^(n-1) prod_i f_i(z p_i) dz`
//! and its `i`-th marginal is `int_0^inf z f_i(z p) f_(i)(z (1 - p)) dz`,
//! where `f_(i)` is the convolution of every conditioner except `f_i`.
//!
//! Gamma conditioners with a common decay rate give the Dirichlet
//! distribution with beta marginals. Levy conditioners give marginals
//! `S(p) / (pi sqrt(p (1 - p)))` with the skew factor [`SkewFactor`].

use std::f64::consts::PI;
use std::io::{self, Write};

use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::distributions::{convolve_closed, DistributionSpec, Family};
use crate::error::{Error, Result};
use crate::quadrature::{integrate_log_line, Estimate, QuadParams};
use crate::rng::RngStream;

/// Default cap on the number of components in a conditioning set.
pub const DEFAULT_MAX_COMPONENTS: usize = 1_000_000;

/// Redraws allowed when every sampled mass is zero (or overflows).
pub const MAX_RESAMPLES: usize = 64;

const SUM_TOLERANCE: f64 = 1e-12;

/// A discrete probability distribution `(p_1, ..., p_n)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct ProbVector(Vec<f64>);

impl ProbVector {
    /// Checks nonnegativity and that the entries sum to one within `1e-12`.
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::EmptyInput(
                "probability vector needs at least one entry",
            ));
        }
        if let Some(p) = entries.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
            return Err(Error::InvalidInput(format!(
                "probabilities must be finite and nonnegative, got {p}"
            )));
        }
        let total: f64 = entries.iter().sum();
        if (total - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::InvalidInput(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        Ok(Self(entries))
    }

    /// Normalizes nonnegative weights.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::EmptyInput(
                "probability vector needs at least one entry",
            ));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::InvalidInput(format!(
                "weights must be finite and nonnegative, got {w}"
            )));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::NoEligibleTarget);
        }
        Ok(Self(weights.iter().map(|w| w / total).collect()))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// Inverse-CDF selection for a uniform `u` in `[0, 1)`.
    ///
    /// Never returns an index whose probability is zero.
    pub fn select(&self, u: f64) -> usize {
        let total: f64 = self.0.iter().sum();
        let target = u * total;
        let mut cumulative = 0.0;
        let mut last_positive = 0;
        for (i, &p) in self.0.iter().enumerate() {
            if p > 0.0 {
                cumulative += p;
                last_positive = i;
                if target < cumulative {
                    return i;
                }
            }
        }
        last_positive
    }
}

impl std::ops::Index<usize> for ProbVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// The conditioning distributions `{f_1, ..., f_n}`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConditioningSet {
    specs: Vec<DistributionSpec>,
}

impl ConditioningSet {
    pub fn new(specs: Vec<DistributionSpec>) -> Result<Self> {
        Self::with_cap(specs, DEFAULT_MAX_COMPONENTS)
    }

    pub fn with_cap(specs: Vec<DistributionSpec>, max_components: usize) -> Result<Self> {
        if specs.is_empty() {
            return Err(Error::EmptyInput(
                "conditioning set needs at least one distribution",
            ));
        }
        if specs.len() > max_components {
            return Err(Error::InvalidInput(format!(
                "{} components exceed the cap of {max_components}",
                specs.len()
            )));
        }
        for s in &specs {
            s.validate()?;
        }
        Ok(Self { specs })
    }

    /// Gamma conditioners sharing one decay rate.
    pub fn gamma(shapes: &[f64], lambda: f64) -> Result<Self> {
        Self::new(
            shapes
                .iter()
                .map(|&alpha| DistributionSpec::Gamma { alpha, lambda })
                .collect(),
        )
    }

    pub fn levy(scales: &[f64]) -> Result<Self> {
        Self::new(
            scales
                .iter()
                .map(|&alpha| DistributionSpec::Levy { alpha })
                .collect(),
        )
    }

    pub fn specs(&self) -> &[DistributionSpec] {
        &self.specs
    }

    pub fn len(&self) -> usize {
        self.specs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.specs.is_empty()
    }

    /// The single closed family every member belongs to.
    pub fn closed_family(&self) -> Result<Family> {
        let first = self.specs[0].family();
        for s in &self.specs[1..] {
            if s.family() != first {
                return Err(Error::ClosureViolation(format!(
                    "mixed conditioning set ({first:?} vs {:?}); densities need one closed family",
                    s.family()
                )));
            }
        }
        Ok(first)
    }

    /// Closed-form convolution of every member except `index`.
    pub fn complement(&self, index: usize) -> Result<DistributionSpec> {
        self.check_index(index)?;
        if self.specs.len() < 2 {
            return Err(Error::InvalidInput(
                "complement needs at least two conditioners".into(),
            ));
        }
        let mut rest = self
            .specs
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != index)
            .map(|(_, s)| *s);
        let first = rest.next().expect("at least one other member");
        rest.try_fold(first, |acc, s| convolve_closed(&acc, &s))
    }

    fn check_index(&self, index: usize) -> Result<()> {
        if index < self.specs.len() {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!(
                "component index {index} out of range for {} conditioners",
                self.specs.len()
            )))
        }
    }
}

/// Draws one normalized mass vector: sample every conditioner independently
/// and divide by the total.
///
/// A draw whose masses sum to zero (tiny gamma shapes underflow) or overflow
/// is redrawn up to [`MAX_RESAMPLES`] times before [`Error::DegenerateSum`].
pub fn sample_normalized(cond: &ConditioningSet, rng: &mut RngStream) -> Result<ProbVector> {
    let mut masses = vec![0.0; cond.len()];
    for _ in 0..MAX_RESAMPLES {
        for (m, spec) in masses.iter_mut().zip(cond.specs()) {
            *m = spec.sample(rng)?;
        }
        let total: f64 = masses.iter().sum();
        if total > 0.0 && total.is_finite() {
            return Ok(ProbVector(masses.iter().map(|m| m / total).collect()));
        }
    }
    Err(Error::DegenerateSum {
        attempts: MAX_RESAMPLES,
    })
}

fn check_shapes(alphas: &[f64]) -> Result<()> {
    if let Some(a) = alphas.iter().find(|a| !(a.is_finite() && **a > 0.0)) {
        return Err(Error::InvalidInput(format!(
            "shape parameters must be positive, got {a}"
        )));
    }
    Ok(())
}

/// `(a - 1) ln p`, with the boundary `p = 0` resolved: `None` means the
/// density vanishes there.
fn ln_power(p: f64, a: f64, index: usize) -> Result<Option<f64>> {
    if p > 0.0 {
        Ok(Some((a - 1.0) * p.ln()))
    } else if a < 1.0 {
        Err(Error::BoundaryDivergence { index })
    } else if a == 1.0 {
        Ok(Some(0.0))
    } else {
        Ok(None)
    }
}

/// Dirichlet density `Gamma(a) prod_i p_i^(a_i - 1) / Gamma(a_i)`, `a = sum a_i`.
pub fn dirichlet_density(p: &ProbVector, alphas: &[f64]) -> Result<f64> {
    if p.len() != alphas.len() {
        return Err(Error::InvalidInput(format!(
            "dimension mismatch: {} probabilities, {} shapes",
            p.len(),
            alphas.len()
        )));
    }
    if alphas.len() < 2 {
        return Err(Error::InvalidInput("dirichlet density needs n >= 2".into()));
    }
    check_shapes(alphas)?;
    let total: f64 = alphas.iter().sum();
    let mut ln_density = ln_gamma(total);
    for (i, (&pi, &ai)) in p.as_slice().iter().zip(alphas).enumerate() {
        match ln_power(pi, ai, i)? {
            Some(term) => ln_density += term - ln_gamma(ai),
            None => return Ok(0.0),
        }
    }
    Ok(ln_density.exp())
}

/// Dirichlet mean `(a_1 / a, ..., a_n / a)`.
pub fn dirichlet_mean(alphas: &[f64]) -> Result<ProbVector> {
    if alphas.is_empty() {
        return Err(Error::InvalidInput(
            "dirichlet mean needs at least one shape".into(),
        ));
    }
    check_shapes(alphas)?;
    ProbVector::from_weights(alphas)
}

fn check_split(alpha_i: f64, alpha_total: f64) -> Result<f64> {
    check_shapes(&[alpha_i, alpha_total])?;
    if alpha_total <= alpha_i {
        return Err(Error::InvalidInput(format!(
            "alpha_total ({alpha_total}) must exceed alpha_i ({alpha_i})"
        )));
    }
    Ok(alpha_total - alpha_i)
}

/// Density of `Beta(alpha_i, alpha_total - alpha_i)` at `p`.
pub fn beta_marginal_density(p: f64, alpha_i: f64, alpha_total: f64) -> Result<f64> {
    let rest = check_split(alpha_i, alpha_total)?;
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidInput(format!(
            "p must lie in [0, 1], got {p}"
        )));
    }
    let a = match ln_power(p, alpha_i, 0)? {
        Some(v) => v,
        None => return Ok(0.0),
    };
    let b = match ln_power(1.0 - p, rest, 1)? {
        Some(v) => v,
        None => return Ok(0.0),
    };
    Ok((ln_gamma(alpha_total) - ln_gamma(alpha_i) - ln_gamma(rest) + a + b).exp())
}

/// `S(p) = a b / (a^2 (1 - p) + b^2 p)`, the tilt applied to the
/// `Beta(1/2, 1/2)` shape by Levy conditioners with scales `a` and `b`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SkewFactor {
    alpha: f64,
    beta: f64,
}

impl SkewFactor {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        check_shapes(&[alpha, beta])?;
        Ok(Self { alpha, beta })
    }

    pub fn eval(&self, p: f64) -> f64 {
        let (a, b) = (self.alpha, self.beta);
        a * b / (a * a * (1.0 - p) + b * b * p)
    }
}

/// Marginal density of `p_i` under Levy conditioners, `alpha_total` being
/// the sum of all scales.
pub fn levy_marginal_density(p: f64, alpha_i: f64, alpha_total: f64) -> Result<f64> {
    let rest = check_split(alpha_i, alpha_total)?;
    if p == 0.0 || p == 1.0 {
        return Err(Error::BoundaryDivergence {
            index: usize::from(p == 1.0),
        });
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidInput(format!(
            "p must lie in (0, 1), got {p}"
        )));
    }
    let skew = SkewFactor::new(alpha_i, rest)?;
    Ok(skew.eval(p) / (PI * (p * (1.0 - p)).sqrt()))
}

fn check_interior(p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "p must lie in (0, 1), got {p}"
        )))
    }
}

/// Peak location and width (in `u = ln z`) of `prod_i z f_i(z p_i)`.
///
/// Gamma: the product is proportional to `z^a e^(-lambda z)`, peaked at
/// `z = a / lambda` with log-width `1 / sqrt(a)`. Levy: proportional to
/// `z^(-m/2) e^(-c / z)` for `m` factors with `c = sum a_i^2 / (4 p_i)`,
/// peaked at `z = 2c / m` with log-width `sqrt(2 / m)`.
fn peak(family: Family, parts: &[(DistributionSpec, f64)], power: f64) -> (f64, f64) {
    match family {
        Family::Gamma { lambda } => {
            let a: f64 = parts.iter().map(|(s, _)| s.alpha()).sum();
            ((a / lambda).ln(), 1.0 / a.sqrt())
        }
        Family::Stable { .. } => {
            let c: f64 = parts
                .iter()
                .map(|(s, p)| s.alpha().powi(2) / (4.0 * p))
                .sum();
            ((c / power).ln(), (1.0 / power).sqrt())
        }
    }
}

/// Marginal density of `p_index` by quadrature over the latent sum.
///
/// Requires a single closed family so the complement `f_(i)` exists in closed
/// form, and closed-form densities for both pieces.
pub fn numeric_marginal_density(
    p: f64,
    cond: &ConditioningSet,
    index: usize,
    quad: QuadParams,
) -> Result<Estimate> {
    check_interior(p)?;
    cond.check_index(index)?;
    let family = cond.closed_family()?;
    let own = cond.specs()[index];
    let rest = cond.complement(index)?;
    let parts = [(own, p), (rest, 1.0 - p)];
    for (spec, _) in &parts {
        spec.ln_density_at_log(0.0)?;
    }

    let (ln_p, ln_q) = (p.ln(), (1.0 - p).ln());
    let log_integrand = |u: f64| {
        2.0 * u
            + own.ln_density_at_log(u + ln_p).unwrap_or(f64::NEG_INFINITY)
            + rest
                .ln_density_at_log(u + ln_q)
                .unwrap_or(f64::NEG_INFINITY)
    };
    let (centre, width) = peak(family, &parts, 1.0);
    integrate_log_line(log_integrand, centre, width, quad)
}

/// Joint density of `(p_1, ..., p_{n-1})` with `p_n = 1 - sum`.
///
/// Gamma conditioners short-circuit to the Dirichlet density; other closed
/// families integrate `int dz / z prod_i z f_i(z p_i)` numerically.
pub fn joint_density(p: &ProbVector, cond: &ConditioningSet, quad: QuadParams) -> Result<Estimate> {
    if p.len() != cond.len() {
        return Err(Error::InvalidInput(format!(
            "dimension mismatch: {} probabilities, {} conditioners",
            p.len(),
            cond.len()
        )));
    }
    if cond.len() < 2 {
        return Err(Error::InvalidInput("joint density needs n >= 2".into()));
    }
    let family = cond.closed_family()?;
    if let Family::Gamma { .. } = family {
        let alphas: Vec<f64> = cond.specs().iter().map(DistributionSpec::alpha).collect();
        return Ok(Estimate {
            value: dirichlet_density(p, &alphas)?,
            abs_error: 0.0,
            evaluations: 0,
        });
    }
    for spec in cond.specs() {
        spec.ln_density_at_log(0.0)?;
    }
    // a Levy factor vanishes at the origin, so does the product
    if p.as_slice().contains(&0.0) {
        return Ok(Estimate {
            value: 0.0,
            abs_error: 0.0,
            evaluations: 0,
        });
    }

    let parts: Vec<(DistributionSpec, f64)> = cond
        .specs()
        .iter()
        .copied()
        .zip(p.as_slice().iter().copied())
        .collect();
    let log_integrand = |u: f64| {
        parts
            .iter()
            .map(|(s, pi)| {
                u + s
                    .ln_density_at_log(u + pi.ln())
                    .unwrap_or(f64::NEG_INFINITY)
            })
            .sum::<f64>()
    };
    let (centre, width) = peak(family, &parts, parts.len() as f64 / 2.0);
    integrate_log_line(log_integrand, centre, width, quad)
}

/// One row per sample, header `p1,...,pn`, 17 significant digits.
pub fn write_samples_csv<W: Write>(samples: &[ProbVector], mut out: W) -> io::Result<()> {
    let n = samples.first().map_or(0, ProbVector::len);
    let header: Vec<String> = (1..=n).map(|i| format!("p{i}")).collect();
    writeln!(out, "{}", header.join(","))?;
    for row in samples {
        let cells: Vec<String> = row.as_slice().iter().map(|p| format!("{p:.16e}")).collect();
        writeln!(out, "{}", cells.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::integrate;

    const TWO_OVER_PI: f64 = 2.0 / PI;

    #[test]
    fn prob_vector_validation() {
        assert!(ProbVector::new(vec![0.5, 0.5]).is_ok());
        assert!(ProbVector::new(vec![0.5, 0.6]).is_err());
        assert!(ProbVector::new(vec![-0.1, 1.1]).is_err());
        assert!(ProbVector::new(vec![]).is_err());
        assert!(matches!(
            ProbVector::from_weights(&[0.0, 0.0]),
            Err(Error::NoEligibleTarget)
        ));
    }

    #[test]
    fn select_skips_zero_weights() {
        let v = ProbVector::new(vec![0.0, 0.25, 0.0, 0.75, 0.0]).unwrap();
        assert_eq!(v.select(0.0), 1);
        assert_eq!(v.select(0.2499), 1);
        assert_eq!(v.select(0.25), 3);
        assert_eq!(v.select(0.999_999_999), 3);
    }

    #[test]
    fn single_component_is_degenerate_one() {
        let cond = ConditioningSet::new(vec![DistributionSpec::Levy { alpha: 2.0 }]).unwrap();
        let mut rng = RngStream::new(3, 0);
        assert_eq!(
            sample_normalized(&cond, &mut rng).unwrap().as_slice(),
            &[1.0]
        );
    }

    #[test]
    fn tiny_shapes_underflow_is_redrawn_or_reported() {
        // shapes this small underflow to exactly zero almost surely
        let cond = ConditioningSet::gamma(&[1e-300, 1e-300], 1.0).unwrap();
        let mut rng = RngStream::new(3, 0);
        assert!(matches!(
            sample_normalized(&cond, &mut rng),
            Err(Error::DegenerateSum { .. })
        ));
    }

    #[test]
    fn component_cap() {
        let specs = vec![
            DistributionSpec::Gamma {
                alpha: 1.0,
                lambda: 1.0
            };
            5
        ];
        assert!(ConditioningSet::with_cap(specs, 4).is_err());
    }

    #[test]
    fn dirichlet_density_values() {
        let p = ProbVector::new(vec![0.3, 0.7]).unwrap();
        assert!((dirichlet_density(&p, &[1.0, 1.0]).unwrap() - 1.0).abs() < 1e-12);
        let p3 = ProbVector::new(vec![0.2, 0.3, 0.5]).unwrap();
        assert!((dirichlet_density(&p3, &[1.0, 1.0, 1.0]).unwrap() - 2.0).abs() < 1e-12);
        let half = ProbVector::new(vec![0.5, 0.5]).unwrap();
        assert!((dirichlet_density(&half, &[2.0, 2.0]).unwrap() - 1.5).abs() < 1e-12);
    }

    #[test]
    fn dirichlet_density_errors_and_boundaries() {
        let p = ProbVector::new(vec![0.0, 1.0]).unwrap();
        assert!(matches!(
            dirichlet_density(&p, &[0.5, 2.0]),
            Err(Error::BoundaryDivergence { index: 0 })
        ));
        assert_eq!(dirichlet_density(&p, &[2.0, 2.0]).unwrap(), 0.0);
        assert!((dirichlet_density(&p, &[1.0, 2.0]).unwrap() - 2.0).abs() < 1e-12);
        assert!(matches!(
            dirichlet_density(&p, &[1.0, 1.0, 1.0]),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn beta_density_integrates_to_one() {
        let q = integrate(
            |p| beta_marginal_density(p, 2.0, 4.0).unwrap(),
            0.0,
            1.0,
            QuadParams::default(),
        )
        .unwrap();
        assert!((q.value - 1.0).abs() < 1e-10);
    }

    #[test]
    fn dirichlet_mean_values() {
        assert_eq!(dirichlet_mean(&[1.0; 4]).unwrap().as_slice(), &[0.25; 4]);
        assert_eq!(
            dirichlet_mean(&[2.0, 1.0, 1.0]).unwrap().as_slice(),
            &[0.5, 0.25, 0.25]
        );
        let m = dirichlet_mean(&[3.0, 1.0]).unwrap();
        assert_eq!(m.as_slice(), &[0.75, 0.25]);
        assert!(dirichlet_mean(&[1.0, 0.0]).is_err());
    }

    #[test]
    fn beta_marginal_values() {
        for p in [0.0, 0.2, 0.9, 1.0] {
            assert!((beta_marginal_density(p, 1.0, 2.0).unwrap() - 1.0).abs() < 1e-12);
        }
        assert!((beta_marginal_density(0.5, 0.5, 1.0).unwrap() - TWO_OVER_PI).abs() < 1e-12);
        assert!(matches!(
            beta_marginal_density(0.5, 2.0, 2.0),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            beta_marginal_density(0.0, 0.5, 1.0),
            Err(Error::BoundaryDivergence { .. })
        ));
        // nodes may round onto an endpoint on tiny intervals; that point has no mass
        let q = integrate(
            |p| beta_marginal_density(p, 0.5, 1.0).unwrap_or(0.0),
            0.0,
            1.0,
            QuadParams::default(),
        )
        .unwrap();
        assert!((q.value - 1.0).abs() < 1e-8);
    }

    #[test]
    fn beta_marginal_mean() {
        let q = integrate(
            |p| p * beta_marginal_density(p, 2.0, 5.0).unwrap(),
            0.0,
            1.0,
            QuadParams::default(),
        )
        .unwrap();
        assert!((q.value - 0.4).abs() < 1e-12);
    }

    #[test]
    fn skew_factor_properties() {
        let s = SkewFactor::new(1.0, 3.0).unwrap();
        assert!((s.eval(0.0) - 3.0).abs() < 1e-15);
        assert!((s.eval(1.0) - 1.0 / 3.0).abs() < 1e-15);
        let scaled = SkewFactor::new(10.0, 30.0).unwrap();
        for p in [0.0, 0.1, 0.5, 0.9, 1.0] {
            assert!((s.eval(p) - scaled.eval(p)).abs() < 1e-15);
        }
        assert!(SkewFactor::new(0.0, 1.0).is_err());
    }

    #[test]
    fn levy_marginal_values() {
        assert!((levy_marginal_density(0.5, 1.0, 2.0).unwrap() - TWO_OVER_PI).abs() < 1e-15);
        for p in [0.1, 0.5, 0.9] {
            let a = levy_marginal_density(p, 1.0, 3.0).unwrap();
            let b = levy_marginal_density(p, 10.0, 30.0).unwrap();
            assert!((a - b).abs() < 1e-14);
        }
        let v = levy_marginal_density(0.5, 1.0, 4.0).unwrap();
        assert!((v - 1.2 / PI).abs() < 1e-12);
        assert!(matches!(
            levy_marginal_density(0.0, 1.0, 4.0),
            Err(Error::BoundaryDivergence { .. })
        ));
        assert!(matches!(
            levy_marginal_density(0.5, 4.0, 4.0),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn levy_marginal_limiting_ratios() {
        let (a, b) = (1.0, 3.0);
        let tilt =
            |p: f64| levy_marginal_density(p, a, a + b).unwrap() * PI * (p * (1.0 - p)).sqrt();
        assert!((tilt(1e-9) - 3.0).abs() < 1e-6);
        assert!((tilt(1.0 - 1e-9) - 1.0 / 3.0).abs() < 1e-6);
    }

    #[test]
    fn numeric_marginal_gamma_matches_beta() {
        let cond = ConditioningSet::gamma(&[2.0, 3.0], 1.0).unwrap();
        for p in [0.1, 0.5, 0.9] {
            let est = numeric_marginal_density(p, &cond, 0, QuadParams::default()).unwrap();
            let exact = beta_marginal_density(p, 2.0, 5.0).unwrap();
            assert!(
                (est.value - exact).abs() < 1e-9,
                "p={p}: {} vs {exact}",
                est.value
            );
        }
    }

    #[test]
    fn numeric_marginal_levy_matches_closed_form() {
        let cond = ConditioningSet::levy(&[1.0, 1.0, 2.0]).unwrap();
        for p in [0.1, 0.5, 0.9] {
            let est = numeric_marginal_density(p, &cond, 1, QuadParams::default()).unwrap();
            let exact = levy_marginal_density(p, 1.0, 4.0).unwrap();
            assert!(
                (est.value - exact).abs() < 1e-9,
                "p={p}: {} vs {exact}",
                est.value
            );
        }
    }

    #[test]
    fn numeric_marginal_rejects_mixed_and_unsupported() {
        let mixed = ConditioningSet::new(vec![
            DistributionSpec::Gamma {
                alpha: 1.0,
                lambda: 1.0,
            },
            DistributionSpec::Levy { alpha: 1.0 },
        ])
        .unwrap();
        assert!(matches!(
            numeric_marginal_density(0.5, &mixed, 0, QuadParams::default()),
            Err(Error::ClosureViolation(_))
        ));
        let stable = ConditioningSet::new(vec![
            DistributionSpec::Stable {
                alpha: 1.0,
                nu: 0.3
            };
            2
        ])
        .unwrap();
        assert!(matches!(
            numeric_marginal_density(0.5, &stable, 0, QuadParams::default()),
            Err(Error::UnsupportedDensity { .. })
        ));
        let cond = ConditioningSet::gamma(&[1.0, 2.0], 1.0).unwrap();
        assert!(numeric_marginal_density(0.5, &cond, 2, QuadParams::default()).is_err());
        assert!(numeric_marginal_density(1.0, &cond, 0, QuadParams::default()).is_err());
    }

    #[test]
    fn joint_gamma_is_dirichlet() {
        let cond = ConditioningSet::gamma(&[0.7, 2.0, 3.5], 2.5).unwrap();
        let p = ProbVector::new(vec![0.2, 0.3, 0.5]).unwrap();
        let est = joint_density(&p, &cond, QuadParams::default()).unwrap();
        assert_eq!(est.value, dirichlet_density(&p, &[0.7, 2.0, 3.5]).unwrap());
    }

    #[test]
    fn joint_levy_two_components() {
        let cond = ConditioningSet::levy(&[1.0, 1.0]).unwrap();
        let p = ProbVector::new(vec![0.5, 0.5]).unwrap();
        let est = joint_density(&p, &cond, QuadParams::default()).unwrap();
        assert!((est.value - TWO_OVER_PI).abs() < 1e-9);
        let cond = ConditioningSet::levy(&[0.5, 2.0]).unwrap();
        let p = ProbVector::new(vec![0.3, 0.7]).unwrap();
        let joint = joint_density(&p, &cond, QuadParams::default())
            .unwrap()
            .value;
        let marginal = numeric_marginal_density(0.3, &cond, 0, QuadParams::default())
            .unwrap()
            .value;
        assert!((joint - marginal).abs() < 1e-9);
    }

    #[test]
    fn joint_levy_three_components_integrates_to_marginal() {
        // integrating out p2 along p1 = const leaves the closed-form marginal
        // of p1 against the convolved remainder Levy(1.5 + 0.5)
        let cond = ConditioningSet::levy(&[1.0, 1.5, 0.5]).unwrap();
        let quad = QuadParams {
            tolerance: 1e-10,
            max_subdivisions: 4000,
        };
        for p1 in [0.2, 0.5, 0.8] {
            let slice = integrate(
                |p2| {
                    let p3 = (1.0 - p1 - p2).max(0.0);
                    joint_density(&ProbVector(vec![p1, p2, p3]), &cond, quad)
                        .unwrap()
                        .value
                },
                0.0,
                1.0 - p1,
                QuadParams {
                    tolerance: 1e-8,
                    max_subdivisions: 400,
                },
            )
            .unwrap()
            .value;
            let exact = levy_marginal_density(p1, 1.0, 3.0).unwrap();
            assert!(
                (slice - exact).abs() < 1e-6 * exact,
                "p1 = {p1}: {slice} vs {exact}"
            );
        }
    }

    #[test]
    fn samples_csv_layout() {
        let rows = vec![ProbVector::new(vec![0.25, 0.75]).unwrap()];
        let mut buf = Vec::new();
        write_samples_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "p1,p2\n2.5000000000000000e-1,7.5000000000000000e-1\n");
    }
}
