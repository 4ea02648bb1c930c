//! Tail-index inference: the kurtosis-ratio estimator, growth-slope fitting
//! with a linearity diagnostic, a percentile-bootstrap test of `alpha < 2`,
//! and a characteristic-function (Kogon-Williams) comparator.
//!
//! The kurtosis route rests on the large-sample relation
//! `E(g2) ~ (1 - alpha/2) n` for symmetric stable data: excess kurtosis grows
//! linearly in `n` with slope `1 - alpha/2`, so either the ratio `g2/n` of a
//! single sample or the fitted slope of a growth curve inverts to an `alpha`
//! estimate via `alpha = 2 (1 - slope)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::SeedSpec;
use crate::error::{Error, Result};
use crate::linreg;
use crate::moments::{self, GrowthCurve};
use crate::numeric;

/// Reported estimates are clamped into `[ALPHA_CLAMP_MIN, ALPHA_CLAMP_MAX]`;
/// the relation being inverted only covers `alpha` in (0, 2].
pub const ALPHA_CLAMP_MIN: f64 = 0.01;
pub const ALPHA_CLAMP_MAX: f64 = 2.0;

/// Default cut on `quad_improvement` below which a growth curve counts as
/// linear (stable-like). Stable mean curves sit well under this; Student-t
/// curves with small `nu` bend far above it.
pub const DEFAULT_LINEARITY_THRESHOLD: f64 = 0.02;

/// Fewest observations accepted by the characteristic-function estimator.
pub const KW_MIN_OBS: usize = 100;

/// Quantile-spread divisor giving the initial scale for the
/// characteristic-function estimator: `sigma0 = (q(0.72) - q(0.28)) / 1.654`.
/// 1.654 is that spread for a unit-scale symmetric stable at `alpha = 2`.
pub const KW_SCALE_DIVISOR: f64 = 1.654;

/// How an `alpha` estimate was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimationMethod {
    /// Inversion of `g2/n` from one sample.
    KurtosisRatio,
    /// Inversion of a fitted growth-curve slope.
    GrowthSlope,
    /// Characteristic-function log-log regression.
    KogonWilliams,
}

impl std::fmt::Display for EstimationMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            EstimationMethod::KurtosisRatio => "kurtosis-ratio",
            EstimationMethod::GrowthSlope => "growth-slope",
            EstimationMethod::KogonWilliams => "kogon-williams",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for EstimationMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kurtosis-ratio" => Ok(EstimationMethod::KurtosisRatio),
            "growth-slope" => Ok(EstimationMethod::GrowthSlope),
            "kogon-williams" => Ok(EstimationMethod::KogonWilliams),
            other => Err(Error::Parameter(format!(
                "unknown estimation method `{other}`"
            ))),
        }
    }
}

/// Point estimate of the tail index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaEstimate {
    /// Estimate clamped into `[0.01, 2.0]`.
    pub alpha_hat: f64,
    pub method: EstimationMethod,
    /// Observations behind the estimate.
    pub n_used: usize,
    /// Scale estimate; produced by the characteristic-function method only.
    pub sigma_hat: Option<f64>,
    /// True iff the raw estimate fell outside the reported range.
    pub clamped: bool,
}

/// Least-squares line through a growth curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Observed minus fitted `g2`, one per checkpoint.
    pub residuals: Vec<f64>,
}

/// Linear-vs-quadratic comparison of a growth curve.
///
/// Stable samples grow `g2` linearly in the prefix length; Student-t samples
/// with a finite fourth moment bend, so the gain from adding a quadratic term
/// separates the two.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearityReport {
    pub linear_r2: f64,
    /// Coefficient of the squared term in the quadratic fit.
    pub quad_coeff: f64,
    /// `R^2` gain of the quadratic over the linear fit (never negative).
    pub quad_improvement: f64,
    /// `quad_improvement < threshold`.
    pub stable_like: bool,
    /// The cut applied; configurable, default [`DEFAULT_LINEARITY_THRESHOLD`].
    pub threshold: f64,
}

/// Percentile-bootstrap summary for the kurtosis-ratio estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapResult {
    /// Clamped point estimate on the original sample.
    pub alpha_hat: f64,
    /// Median of the unclamped resample estimates.
    pub alpha_raw_median: f64,
    /// Percentile interval `[level/2, 1 - level/2]` on the unclamped
    /// resample estimates.
    pub alpha_ci_low: f64,
    pub alpha_ci_high: f64,
    #[serde(rename = "B")]
    pub b: usize,
    pub level: f64,
    /// One-sided decision: true iff the `(1 - level)` percentile of the
    /// unclamped estimates lies below 2.
    pub reject_alpha2: bool,
}

/// Empirical characteristic function sampled on a frequency grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalCF {
    /// Positive, increasing frequencies.
    pub t_grid: Vec<f64>,
    /// `|phi_hat(t)|` per grid point, in (0, 1).
    pub modulus: Vec<f64>,
    /// `ln(-ln |phi_hat(t)|^2)` per grid point.
    pub log_log_modulus: Vec<f64>,
}

impl EmpiricalCF {
    /// Evaluate `phi_hat(t) = (1/n) sum exp(i t x_j)` over `t_grid`.
    ///
    /// Every squared modulus must land strictly inside (0, 1) so its double
    /// logarithm exists; a violation reports the offending grid point.
    pub fn from_sample(xs: &[f64], t_grid: &[f64]) -> Result<EmpiricalCF> {
        if xs.is_empty() {
            return Err(Error::InsufficientData(
                "empirical characteristic function needs a non-empty sample".into(),
            ));
        }
        if t_grid.is_empty() {
            return Err(Error::Parameter("frequency grid is empty".into()));
        }
        if let Some(w) = t_grid.windows(2).find(|w| w[1] <= w[0]) {
            return Err(Error::Parameter(format!(
                "frequency grid must be strictly increasing, got {} after {}",
                w[1], w[0]
            )));
        }
        if t_grid[0] <= 0.0 {
            return Err(Error::Parameter(format!(
                "frequencies must be positive, got {}",
                t_grid[0]
            )));
        }

        let n = xs.len() as f64;
        let mut modulus = Vec::with_capacity(t_grid.len());
        let mut log_log = Vec::with_capacity(t_grid.len());
        for &t in t_grid {
            let mut re = numeric::CompensatedSum::new();
            let mut im = numeric::CompensatedSum::new();
            for &x in xs {
                let (s, c) = (t * x).sin_cos();
                re.add(c);
                im.add(s);
            }
            let re = re.value() / n;
            let im = im.value() / n;
            let sq = re * re + im * im;
            if !(sq > 0.0 && sq < 1.0) {
                return Err(Error::NumericDomain(format!(
                    "squared CF modulus {sq} at grid point t={t} is outside (0, 1)"
                )));
            }
            modulus.push(sq.sqrt());
            log_log.push((-sq.ln()).ln());
        }
        Ok(EmpiricalCF {
            t_grid: t_grid.to_vec(),
            modulus,
            log_log_modulus: log_log,
        })
    }
}

fn clamp_alpha(raw: f64) -> (f64, bool) {
    let hat = raw.clamp(ALPHA_CLAMP_MIN, ALPHA_CLAMP_MAX);
    (hat, hat != raw)
}

/// Invert `E(g2) ~ (1 - alpha/2) n`: `alpha_raw = 2 (1 - g2/n)`, clamped into
/// `[0.01, 2.0]` for the report.
///
/// Light-tailed samples (`g2 < 0`) push the raw value above 2 and clamp to
/// the Gaussian boundary.
pub fn alpha_from_kurtosis(g2: f64, n: usize) -> Result<AlphaEstimate> {
    if n < moments::MIN_MOMENT_OBS {
        return Err(Error::InsufficientData(format!(
            "kurtosis inversion needs n >= {}, got {n}",
            moments::MIN_MOMENT_OBS
        )));
    }
    if !g2.is_finite() {
        return Err(Error::NumericDomain(format!(
            "excess kurtosis must be finite, got {g2}"
        )));
    }
    let raw = alpha_raw_from_kurtosis(g2, n);
    let (alpha_hat, clamped) = clamp_alpha(raw);
    Ok(AlphaEstimate {
        alpha_hat,
        method: EstimationMethod::KurtosisRatio,
        n_used: n,
        sigma_hat: None,
        clamped,
    })
}

/// Unclamped inversion, used inside the bootstrap so the null `alpha = 2`
/// stays interior to the statistic's range.
fn alpha_raw_from_kurtosis(g2: f64, n: usize) -> f64 {
    2.0 * (1.0 - g2 / n as f64)
}

/// Ordinary least squares of `g2` on the checkpoint sizes, intercept fitted.
///
/// Curves are not forced through the origin: a finite sample has `g2` near
/// its distributional value at the first checkpoint, not near zero.
pub fn fit_growth_slope(curve: &GrowthCurve) -> Result<SlopeFit> {
    if curve.len() < 3 {
        return Err(Error::Parameter(format!(
            "slope fit needs at least 3 checkpoints, got {}",
            curve.len()
        )));
    }
    let xs: Vec<f64> = curve.points().iter().map(|&(k, _)| k as f64).collect();
    let ys = curve.g2s();
    let (intercept, slope, r_squared) = linreg::fit_line(&xs, &ys).map_err(|e| match e {
        Error::DegenerateSample(_) => {
            Error::Parameter("checkpoint sizes have zero variance".into())
        }
        other => other,
    })?;
    let residuals = xs
        .iter()
        .zip(&ys)
        .map(|(&x, &y)| y - (intercept + slope * x))
        .collect();
    Ok(SlopeFit {
        slope,
        intercept,
        r_squared,
        residuals,
    })
}

/// Regression through the origin of growth slope `b` on `2 - alpha`.
///
/// Under `b ~ 1 - alpha/2` the coefficient is 0.5. Points are
/// `(alpha, slope)` pairs; a single point is a valid through-origin fit.
pub fn slope_vs_alpha_regression(points: &[(f64, f64)]) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::Parameter(
            "slope-vs-alpha regression needs at least 1 point".into(),
        ));
    }
    if let Some((a, b)) = points
        .iter()
        .find(|(a, b)| !a.is_finite() || !b.is_finite())
    {
        return Err(Error::NumericDomain(format!(
            "non-finite point ({a}, {b}) in regression input"
        )));
    }
    let xs: Vec<f64> = points.iter().map(|&(a, _)| 2.0 - a).collect();
    let ys: Vec<f64> = points.iter().map(|&(_, b)| b).collect();
    linreg::fit_through_origin(&xs, &ys).map_err(|e| match e {
        Error::DegenerateSample(_) => Error::Parameter(
            "all points sit at alpha = 2; the through-origin regressor vanishes".into(),
        ),
        other => other,
    })
}

/// Linearity diagnostic with the default threshold.
pub fn linearity_diagnostic(curve: &GrowthCurve) -> Result<LinearityReport> {
    linearity_diagnostic_with_threshold(curve, DEFAULT_LINEARITY_THRESHOLD)
}

/// Compare linear and quadratic least-squares fits of the growth curve;
/// `stable_like` iff the quadratic's `R^2` gain stays below `threshold`.
pub fn linearity_diagnostic_with_threshold(
    curve: &GrowthCurve,
    threshold: f64,
) -> Result<LinearityReport> {
    if curve.len() < 5 {
        return Err(Error::Parameter(format!(
            "linearity diagnostic needs at least 5 checkpoints, got {}",
            curve.len()
        )));
    }
    if !threshold.is_finite() || threshold <= 0.0 {
        return Err(Error::Parameter(format!(
            "linearity threshold must be positive, got {threshold}"
        )));
    }
    let xs: Vec<f64> = curve.points().iter().map(|&(k, _)| k as f64).collect();
    let ys = curve.g2s();
    let (_, _, linear_r2) = linreg::fit_line(&xs, &ys).map_err(|e| match e {
        Error::DegenerateSample(_) => {
            Error::Parameter("checkpoint sizes have zero variance".into())
        }
        other => other,
    })?;
    let (_, _, quad_coeff, quad_r2) = linreg::fit_quadratic(&xs, &ys)?;
    // Nested least squares cannot lose R^2; negative values are float dust.
    let quad_improvement = (quad_r2 - linear_r2).max(0.0);
    Ok(LinearityReport {
        linear_r2,
        quad_coeff,
        quad_improvement,
        stable_like: quad_improvement < threshold,
        threshold,
    })
}

/// Retries allowed when a bootstrap resample comes out degenerate.
const BOOTSTRAP_DEGENERATE_RETRIES: usize = 10;

/// Percentile-bootstrap test of `H0: alpha = 2` against `H1: alpha < 2`.
///
/// Draws `b` with-replacement resamples of the full sample, computes the
/// unclamped `alpha_raw = 2 (1 - g2/n)` on each, and reports the percentile
/// interval plus the one-sided decision. Resample `i` uses the derived child
/// stream `seed.child(i)`, so the result is reproducible at any parallelism.
pub fn bootstrap_alpha_test(
    sample: &[f64],
    b: usize,
    level: f64,
    seed: SeedSpec,
) -> Result<BootstrapResult> {
    let n = sample.len();
    if n < 50 {
        return Err(Error::Parameter(format!(
            "bootstrap test needs n >= 50, got {n}"
        )));
    }
    if b < 100 {
        return Err(Error::Parameter(format!(
            "bootstrap test needs B >= 100, got {b}"
        )));
    }
    if !(level > 0.0 && level < 0.5) {
        return Err(Error::Parameter(format!(
            "level must lie in (0, 0.5), got {level}"
        )));
    }
    let original = moments::compute_stats(sample)?;
    let (alpha_hat, _) = clamp_alpha(alpha_raw_from_kurtosis(original.g2, n));

    let mut raws: Vec<f64> = (0..b as u64)
        .into_par_iter()
        .map(|i| resample_alpha_raw(sample, seed.child(i)))
        .collect::<Result<Vec<_>>>()?;
    raws.sort_by(f64::total_cmp);

    let alpha_ci_low = numeric::quantile_sorted(&raws, level / 2.0);
    let alpha_ci_high = numeric::quantile_sorted(&raws, 1.0 - level / 2.0);
    let alpha_raw_median = numeric::quantile_sorted(&raws, 0.5);
    let reject_alpha2 = numeric::quantile_sorted(&raws, 1.0 - level) < 2.0;

    Ok(BootstrapResult {
        alpha_hat,
        alpha_raw_median,
        alpha_ci_low,
        alpha_ci_high,
        b,
        level,
        reject_alpha2,
    })
}

/// One resample's unclamped estimate; degenerate draws are re-drawn from the
/// same child stream, capped at [`BOOTSTRAP_DEGENERATE_RETRIES`].
fn resample_alpha_raw(sample: &[f64], child: SeedSpec) -> Result<f64> {
    use rand::Rng;
    let n = sample.len();
    let mut rng = child.rng();
    let mut resample = vec![0.0f64; n];
    for attempt in 0..=BOOTSTRAP_DEGENERATE_RETRIES {
        for slot in resample.iter_mut() {
            *slot = sample[rng.random_range(0..n)];
        }
        match moments::compute_stats(&resample) {
            Ok(stats) => return Ok(alpha_raw_from_kurtosis(stats.g2, n)),
            Err(Error::DegenerateSample(_)) if attempt < BOOTSTRAP_DEGENERATE_RETRIES => continue,
            Err(Error::DegenerateSample(_)) => return Err(Error::DegenerateSample(format!(
                "bootstrap resample stayed degenerate after {BOOTSTRAP_DEGENERATE_RETRIES} retries"
            ))),
            Err(other) => return Err(other),
        }
    }
    unreachable!("loop returns on every path")
}

/// Characteristic-function estimate of `(alpha, sigma)`.
///
/// Pipeline: center at the sample median; rescale by the quantile-spread
/// scale `sigma0`; evaluate the empirical characteristic function on
/// `t = 0.1, 0.2, ..., 1.0`; regress `ln(-ln |phi_hat|^2)` on `ln t`. The
/// slope is `alpha_hat` and the intercept `ln(2 sigma_tilde^alpha)` recovers
/// the residual scale, so `sigma_hat = sigma_tilde * sigma0`.
pub fn kogon_williams(sample: &[f64]) -> Result<AlphaEstimate> {
    let n = sample.len();
    if n < KW_MIN_OBS {
        return Err(Error::InsufficientData(format!(
            "characteristic-function estimation needs n >= {KW_MIN_OBS}, got {n}"
        )));
    }
    if let Some(bad) = sample.iter().find(|x| !x.is_finite()) {
        return Err(Error::NumericDomain(format!(
            "non-finite observation {bad} in sample"
        )));
    }

    let med = numeric::median(sample);
    let spread = numeric::quantile(sample, 0.72) - numeric::quantile(sample, 0.28);
    if spread <= 0.0 {
        return Err(Error::DegenerateSample(
            "central quantile spread is zero; scale is unidentifiable".into(),
        ));
    }
    let sigma0 = spread / KW_SCALE_DIVISOR;
    let rescaled: Vec<f64> = sample.iter().map(|x| (x - med) / sigma0).collect();

    let t_grid: Vec<f64> = (1..=10).map(|k| 0.1 * k as f64).collect();
    let cf = EmpiricalCF::from_sample(&rescaled, &t_grid)?;

    let log_t: Vec<f64> = t_grid.iter().map(|t| t.ln()).collect();
    let (intercept, slope, _) = linreg::fit_line(&log_t, &cf.log_log_modulus)?;

    // intercept = ln(2 sigma_tilde^alpha)  =>  ln sigma_tilde = (intercept - ln 2) / alpha.
    // The raw slope is used here so sigma stays consistent with the fit even
    // when the reported alpha clamps.
    let sigma_tilde = ((intercept - std::f64::consts::LN_2) / slope).exp();
    let sigma_hat = sigma_tilde * sigma0;
    if !sigma_hat.is_finite() || sigma_hat <= 0.0 {
        return Err(Error::NumericDomain(format!(
            "scale estimate {sigma_hat} is not a positive real"
        )));
    }

    let (alpha_hat, clamped) = clamp_alpha(slope);
    Ok(AlphaEstimate {
        alpha_hat,
        method: EstimationMethod::KogonWilliams,
        n_used: n,
        sigma_hat: Some(sigma_hat),
        clamped,
    })
}
