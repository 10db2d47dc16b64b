//! Forest statistics and the sampler validation battery.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::distributions::{empirical_laplace, DistributionSpec};
use crate::error::{Error, Result};
use crate::normalized_mass::{
    beta_marginal_density, levy_marginal_density, sample_normalized, ConditioningSet,
};
use crate::quadrature::{QuadParams, QuadratureCdf};
use crate::rng::RngStream;
use crate::tree::Forest;

/// Vertex counts per in-degree.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegreeHistogram {
    pub counts: BTreeMap<usize, usize>,
    pub total_vertices: usize,
    pub total_edges: usize,
}

pub fn degree_histogram(forest: &Forest) -> DegreeHistogram {
    let mut counts = BTreeMap::new();
    let degrees = forest.in_degrees();
    for &k in &degrees {
        *counts.entry(k).or_insert(0) += 1;
    }
    DegreeHistogram {
        counts,
        total_vertices: degrees.len(),
        total_edges: degrees.iter().sum(),
    }
}

/// Summary written next to grown forests.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForestStats {
    pub vertices: usize,
    pub edges: usize,
    pub roots: usize,
    pub leaves: usize,
    pub max_in_degree: usize,
    pub degree_histogram: DegreeHistogram,
}

pub fn forest_stats(forest: &Forest) -> ForestStats {
    let hist = degree_histogram(forest);
    ForestStats {
        vertices: forest.len(),
        edges: forest.edge_count(),
        roots: forest.roots().len(),
        leaves: hist.counts.get(&0).copied().unwrap_or(0),
        max_in_degree: hist.counts.keys().next_back().copied().unwrap_or(0),
        degree_histogram: hist,
    }
}

/// Two-sided Kolmogorov-Smirnov distance between the empirical distribution
/// of `samples` and `cdf`. The cdf is queried in ascending order.
pub fn ks_statistic<F>(samples: &[f64], mut cdf: F) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    if samples.is_empty() {
        return Err(Error::EmptyInput("samples"));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x)?;
        d = d.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
    }
    Ok(d)
}

/// Two-sample Kolmogorov-Smirnov distance.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyInput("samples"));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// One-sample KS acceptance bound: the asymptotic 95% value plus an allowance
/// for numerically integrated cdfs.
pub fn ks_threshold(n: usize) -> f64 {
    1.36 / (n as f64).sqrt() + 0.01
}

pub fn ks_two_sample_threshold(n: usize, m: usize) -> f64 {
    1.36 * ((n + m) as f64 / (n as f64 * m as f64)).sqrt() + 0.01
}

/// Largest z-score tolerated by moment checks.
pub const Z_THRESHOLD: f64 = 3.0;

/// Tolerance used for quadrature cdfs.
pub const CDF_TOLERANCE: f64 = 1e-8;

fn cdf_params() -> QuadParams {
    QuadParams {
        tolerance: CDF_TOLERANCE,
        ..QuadParams::default()
    }
}

/// Closed-form Levy cdf, `erfc(alpha / (2 sqrt x))`.
pub fn levy_cdf(x: f64, alpha: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        erfc(alpha / (2.0 * x.sqrt()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidationConfig {
    pub n_samples: usize,
    pub seed: u64,
}

impl ValidationConfig {
    pub const DEFAULT_SAMPLES: usize = 100_000;

    pub fn new(seed: u64) -> Self {
        Self {
            n_samples: Self::DEFAULT_SAMPLES,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(Error::InvalidInput("n_samples: must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub name: String,
    pub statistic: f64,
    pub threshold: f64,
    pub n_samples: usize,
    pub passed: bool,
}

impl ValidationReport {
    pub fn new(name: impl Into<String>, statistic: f64, threshold: f64, n_samples: usize) -> Self {
        Self {
            name: name.into(),
            statistic,
            threshold,
            n_samples,
            passed: statistic <= threshold,
        }
    }
}

fn draws(spec: &DistributionSpec, n: usize, rng: &mut RngStream) -> Result<Vec<f64>> {
    (0..n).map(|_| spec.sample(rng)).collect()
}

fn first_components(cond: &ConditioningSet, n: usize, rng: &mut RngStream) -> Result<Vec<f64>> {
    (0..n)
        .map(|_| Ok(sample_normalized(cond, rng)?[0]))
        .collect()
}

/// (a) Sums of `Gamma(1.5, 1)` and `Gamma(2.5, 1)` draws against the
/// `Gamma(4, 1)` cdf.
pub fn check_gamma_closure(n: usize, rng: &mut RngStream) -> Result<ValidationReport> {
    let a = DistributionSpec::gamma(1.5, 1.0)?;
    let b = DistributionSpec::gamma(2.5, 1.0)?;
    let sums = (0..n)
        .map(|_| Ok(a.sample(rng)? + b.sample(rng)?))
        .collect::<Result<Vec<f64>>>()?;
    let target = DistributionSpec::gamma(4.0, 1.0)?;
    let mut cdf = QuadratureCdf::new(
        |x| {
            target
                .density(x)
                .ok()
                .and_then(|d| d.finite())
                .unwrap_or(0.0)
        },
        0.0,
        cdf_params(),
    );
    let d = ks_statistic(&sums, |x| cdf.eval(x))?;
    Ok(ValidationReport::new(
        "gamma_closure",
        d,
        ks_threshold(n),
        n,
    ))
}

/// (b) Sums of `Stable(1, 1/2)` and `Stable(2, 1/2)` draws (general stable
/// sampler) against the `Levy(3)` cdf.
pub fn check_stable_closure(n: usize, rng: &mut RngStream) -> Result<ValidationReport> {
    let a = DistributionSpec::stable(1.0, 0.5)?;
    let b = DistributionSpec::stable(2.0, 0.5)?;
    let sums = (0..n)
        .map(|_| Ok(a.sample(rng)? + b.sample(rng)?))
        .collect::<Result<Vec<f64>>>()?;
    let d = ks_statistic(&sums, |x| Ok(levy_cdf(x, 3.0)))?;
    Ok(ValidationReport::new(
        "stable_closure",
        d,
        ks_threshold(n),
        n,
    ))
}

/// (c) Empirical Laplace transform of `Stable(1, nu)` draws against
/// `exp(-s^nu)`; the statistic is the largest absolute z-score over
/// `nu in {0.3, 0.5, 0.8}` and `s in {0.1, 1, 10}`.
pub fn check_stable_transform(n: usize, rng: &mut RngStream) -> Result<ValidationReport> {
    let mut worst: f64 = 0.0;
    for nu in [0.3, 0.5, 0.8] {
        let spec = DistributionSpec::stable(1.0, nu)?;
        let xs = draws(&spec, n, rng)?;
        for s in [0.1, 1.0, 10.0] {
            worst = worst.max(laplace_z(&xs, s, spec.laplace(s)?)?);
        }
    }
    Ok(ValidationReport::new(
        "stable_transform",
        worst,
        Z_THRESHOLD,
        n,
    ))
}

fn laplace_z(xs: &[f64], s: f64, exact: f64) -> Result<f64> {
    let est = empirical_laplace(xs, s)?;
    let diff = (est.mean - exact).abs();
    Ok(if est.std_error > 0.0 {
        diff / est.std_error
    } else if diff == 0.0 {
        0.0
    } else {
        f64::INFINITY
    })
}

/// (d) Component means of normalized gamma draws with shapes
/// `(0.5, 1, 2, 4)` against `alpha_i / alpha`; largest absolute z-score.
pub fn check_dirichlet_mean(n: usize, rng: &mut RngStream) -> Result<ValidationReport> {
    let alphas = [0.5, 1.0, 2.0, 4.0];
    let total: f64 = alphas.iter().sum();
    let cond = ConditioningSet::gamma(&alphas, 1.0)?;
    let mut sum = [0.0; 4];
    let mut sum_sq = [0.0; 4];
    for _ in 0..n {
        let p = sample_normalized(&cond, rng)?;
        for (i, &x) in p.as_slice().iter().enumerate() {
            sum[i] += x;
            sum_sq[i] += x * x;
        }
    }
    let nf = n as f64;
    let mut worst: f64 = 0.0;
    for i in 0..4 {
        let mean = sum[i] / nf;
        let exact = alphas[i] / total;
        // exact Beta variance keeps the check meaningful for tiny n
        let var = exact * (1.0 - exact) / (total + 1.0);
        let sample_var = if n > 1 {
            (sum_sq[i] - nf * mean * mean) / (nf - 1.0)
        } else {
            var
        };
        let se = sample_var.max(var).sqrt() / nf.sqrt();
        worst = worst.max((mean - exact).abs() / se);
    }
    Ok(ValidationReport::new(
        "dirichlet_mean",
        worst,
        Z_THRESHOLD,
        n,
    ))
}

/// (e) First component of normalized `Gamma(2), Gamma(3)` draws against the
/// integrated `Beta(2, 3)` density.
pub fn check_beta_marginal(n: usize, rng: &mut RngStream) -> Result<ValidationReport> {
    let cond = ConditioningSet::gamma(&[2.0, 3.0], 1.0)?;
    let ps = first_components(&cond, n, rng)?;
    let mut cdf = QuadratureCdf::new(
        |p| beta_marginal_density(p, 2.0, 5.0).unwrap_or(0.0),
        0.0,
        cdf_params(),
    );
    let d = ks_statistic(&ps, |p| cdf.eval(p.min(1.0)))?;
    Ok(ValidationReport::new(
        "beta_marginal",
        d,
        ks_threshold(n),
        n,
    ))
}

/// (f) First component of normalized `Levy(1), Stable(3, 1/2)` draws against
/// the integrated skewed arcsine marginal. The first member goes through the
/// Levy sampler and the second through the general stable sampler.
pub fn check_levy_marginal(n: usize, rng: &mut RngStream) -> Result<ValidationReport> {
    let cond = ConditioningSet::new(vec![
        DistributionSpec::levy(1.0)?,
        DistributionSpec::stable(3.0, 0.5)?,
    ])?;
    let ps = first_components(&cond, n, rng)?;
    let mut cdf = QuadratureCdf::new(
        |p| levy_marginal_density(p, 1.0, 4.0).unwrap_or(0.0),
        0.0,
        cdf_params(),
    );
    let d = ks_statistic(&ps, |p| cdf.eval(p.min(1.0)))?;
    Ok(ValidationReport::new(
        "levy_marginal",
        d,
        ks_threshold(n),
        n,
    ))
}

/// Runs checks (a) to (f), each on its own child stream of `cfg.seed`.
///
/// Only an invalid configuration is an error; failed checks are reported.
pub fn validate_suite(cfg: &ValidationConfig) -> Result<Vec<ValidationReport>> {
    cfg.validate()?;
    type Check = fn(usize, &mut RngStream) -> Result<ValidationReport>;
    let checks: [(&str, Check); 6] = [
        ("gamma_closure", check_gamma_closure),
        ("stable_closure", check_stable_closure),
        ("stable_transform", check_stable_transform),
        ("dirichlet_mean", check_dirichlet_mean),
        ("beta_marginal", check_beta_marginal),
        ("levy_marginal", check_levy_marginal),
    ];
    let root = RngStream::new(cfg.seed, 0);
    Ok(checks
        .iter()
        .enumerate()
        .map(|(i, (name, check))| {
            let mut rng = root.child(i as u64 + 1);
            check(cfg.n_samples, &mut rng)
                .unwrap_or_else(|_| ValidationReport::new(*name, f64::INFINITY, 0.0, cfg.n_samples))
        })
        .collect())
}

/// Plain-text report table.
pub fn format_reports(reports: &[ValidationReport]) -> String {
    let mut out = format!(
        "{:<4}{:<18}{:>14}{:>14}{:>10}  {}\n",
        "id", "check", "statistic", "threshold", "n", "result"
    );
    for (i, r) in reports.iter().enumerate() {
        let id = (b'a' + i as u8) as char;
        let _ = writeln!(
            out,
            "{:<4}{:<18}{:>14.6}{:>14.6}{:>10}  {}",
            format!("({id})"),
            r.name,
            r.statistic,
            r.threshold,
            r.n_samples,
            if r.passed { "PASS" } else { "FAIL" }
        );
    }
    out
}

/// Least-squares slope of `ln count` against `ln degree` over degrees at or
/// above `k_min`. Diagnostic only.
pub fn tail_slope(hist: &DegreeHistogram, k_min: usize) -> Result<f64> {
    let pts: Vec<(f64, f64)> = hist
        .counts
        .range(k_min.max(1)..)
        .filter(|(_, &c)| c > 0)
        .map(|(&k, &c)| (k as f64, c as f64))
        .collect();
    if pts.len() < 5 {
        return Err(Error::InsufficientSupport(format!(
            "need 5 distinct degrees >= {k_min}, found {}",
            pts.len()
        )));
    }
    Ok(log_log_slope(&pts))
}

/// Least-squares slope through `(ln x, ln y)`.
pub fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::VertexId;

    fn star(children: usize) -> Forest {
        let mut f = Forest::new();
        for _ in 0..children {
            f.attach(VertexId(0), 1).unwrap();
        }
        f
    }

    #[test]
    fn histograms() {
        let h = degree_histogram(&Forest::new());
        assert_eq!(h.counts, BTreeMap::from([(0, 1)]));
        assert_eq!(h.total_edges, 0);

        let h = degree_histogram(&star(5));
        assert_eq!(h.counts, BTreeMap::from([(0, 5), (5, 1)]));
        assert_eq!(h.total_edges, 5);

        let mut chain = Forest::new();
        for t in 1..=3u64 {
            chain.attach(VertexId(t as usize - 1), t).unwrap();
            chain.advance_to(t).unwrap();
        }
        let h = degree_histogram(&chain);
        assert_eq!(h.counts, BTreeMap::from([(0, 1), (1, 3)]));
        assert_eq!(h.total_edges, 3);
    }

    #[test]
    fn ks_at_midpoint_quantiles() {
        let n = 40;
        let xs: Vec<f64> = (1..=n).map(|i| (i as f64 - 0.5) / n as f64).collect();
        let d = ks_statistic(&xs, Ok).unwrap();
        assert!((d - 0.5 / n as f64).abs() < 1e-15);
    }

    #[test]
    fn ks_degenerate_and_empty() {
        let d = ks_statistic(&[0.0], |x| Ok(1.0 - (-x).exp())).unwrap();
        assert_eq!(d, 1.0);
        assert!(matches!(ks_statistic(&[], Ok), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn ks_uniform_draws() {
        let mut rng = RngStream::new(3, 0);
        let n = 100_000;
        let xs: Vec<f64> = (0..n).map(|_| rng.open01()).collect();
        let d = ks_statistic(&xs, Ok).unwrap();
        assert!(d < 1.36 / (n as f64).sqrt() + 0.005, "{d}");
    }

    #[test]
    fn two_sample_ks() {
        assert_eq!(ks_two_sample(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(ks_two_sample(&[1.0, 2.0], &[3.0, 4.0]).unwrap(), 1.0);
        assert_eq!(ks_two_sample(&[1.0, 3.0], &[2.0, 4.0]).unwrap(), 0.5);
    }

    #[test]
    fn levy_cdf_matches_integrated_density() {
        let spec = DistributionSpec::levy(3.0).unwrap();
        let mut cdf = QuadratureCdf::new(
            |x| spec.density(x).unwrap().finite().unwrap(),
            0.0,
            cdf_params(),
        );
        for x in [0.1, 1.0, 5.0, 40.0] {
            assert!((cdf.eval(x).unwrap() - levy_cdf(x, 3.0)).abs() < 1e-8);
        }
    }

    #[test]
    fn suite_rejects_zero_samples() {
        let cfg = ValidationConfig {
            n_samples: 0,
            seed: 1,
        };
        assert!(validate_suite(&cfg).is_err());
    }

    #[test]
    fn suite_small_is_deterministic() {
        let cfg = ValidationConfig {
            n_samples: 2000,
            seed: 5,
        };
        let a = validate_suite(&cfg).unwrap();
        let b = validate_suite(&cfg).unwrap();
        assert_eq!(a.len(), 6);
        assert_eq!(a, b);
        for r in &a {
            assert_eq!(r.passed, r.statistic <= r.threshold);
        }
    }

    #[test]
    fn report_table_layout() {
        let reports = vec![ValidationReport::new("gamma_closure", 0.004, 0.0143, 100)];
        let table = format_reports(&reports);
        let lines: Vec<&str> = table.lines().collect();
        assert_eq!(lines.len(), 2);
        assert!(lines[1].starts_with("(a)") && lines[1].ends_with("PASS"));
    }

    #[test]
    fn slope_of_exact_power_law() {
        let pts: Vec<(f64, f64)> = (1..=100).map(|k| (k as f64, (k as f64).powi(-3))).collect();
        assert!((log_log_slope(&pts) + 3.0).abs() < 1e-9);

        let mut h = DegreeHistogram::default();
        for k in 1..=100usize {
            h.counts
                .insert(k, (1e9 * (k as f64).powi(-3)).round() as usize);
        }
        assert!((tail_slope(&h, 1).unwrap() + 3.0).abs() < 1e-3);
    }

    #[test]
    fn slope_needs_support() {
        let h = degree_histogram(&star(5));
        assert!(matches!(
            tail_slope(&h, 1),
            Err(Error::InsufficientSupport(_))
        ));
    }
}
