//! Central sample moments, moment-ratio kurtosis, and kurtosis growth curves.
//!
//! Conventions: central moments use the `1/n` normalization, kurtosis is the
//! moment ratio `b2 = m4 / m2^2`, excess kurtosis is `g2 = b2 - 3`, and the
//! kurtosis ratio is `c = b2 / n`. For any sample, `b2` is algebraically
//! bounded by `n`, so `c` always lies in `(0, 1]` — heavy tails show up as
//! `g2` growing with `n` rather than converging.

use serde::{Deserialize, Serialize};
use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::numeric::CompensatedSum;

/// Fewest observations for which fourth-moment ratios are defined here.
pub const MIN_MOMENT_OBS: usize = 4;

/// Moment summary of one sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleStats {
    /// Observation count.
    pub n: usize,
    /// Sample mean.
    pub mean: f64,
    /// Second central moment `m2` (biased, `1/n`).
    pub m2: f64,
    /// Third central moment `m3`.
    pub m3: f64,
    /// Fourth central moment `m4`.
    pub m4: f64,
    /// Moment-ratio skewness `g1 = m3 / m2^(3/2)`.
    pub g1: f64,
    /// Moment-ratio kurtosis `b2 = m4 / m2^2`.
    pub b2: f64,
    /// Excess kurtosis `g2 = b2 - 3`.
    pub g2: f64,
    /// Kurtosis ratio `c = b2 / n`, always in `(0, 1]`.
    pub c: f64,
}

/// Central moments through order four, two-pass with compensated accumulation.
///
/// Requires `n >= 4` and a non-degenerate sample (`m2 > 0`); all observations
/// must be finite.
pub fn compute_stats(xs: &[f64]) -> Result<SampleStats> {
    let n = xs.len();
    if n < MIN_MOMENT_OBS {
        return Err(Error::InsufficientData(format!(
            "need at least {MIN_MOMENT_OBS} observations for fourth-moment ratios, got {n}"
        )));
    }
    if let Some(bad) = xs.iter().find(|x| !x.is_finite()) {
        return Err(Error::NumericDomain(format!(
            "non-finite observation {bad} in sample"
        )));
    }

    let nf = n as f64;
    let mut total = CompensatedSum::new();
    for &x in xs {
        total.add(x);
    }
    let mean = total.value() / nf;

    let mut s2 = CompensatedSum::new();
    let mut s3 = CompensatedSum::new();
    let mut s4 = CompensatedSum::new();
    for &x in xs {
        let d = x - mean;
        let d2 = d * d;
        s2.add(d2);
        s3.add(d2 * d);
        s4.add(d2 * d2);
    }
    let m2 = s2.value() / nf;
    let m3 = s3.value() / nf;
    let m4 = s4.value() / nf;

    if m2 <= 0.0 {
        return Err(Error::DegenerateSample(format!(
            "sample of {n} observations has zero second moment (all values equal)"
        )));
    }

    let b2 = m4 / (m2 * m2);
    Ok(SampleStats {
        n,
        mean,
        m2,
        m3,
        m4,
        g1: m3 / m2.powf(1.5),
        b2,
        g2: b2 - 3.0,
        c: b2 / nf,
    })
}

/// Excess kurtosis `g2 = m4 / m2^2 - 3`.
pub fn excess_kurtosis(xs: &[f64]) -> Result<f64> {
    compute_stats(xs).map(|s| s.g2)
}

/// Kurtosis ratio `c = b2 / n`, the fraction of its algebraic ceiling the
/// sample kurtosis attains.
pub fn kurtosis_ratio(xs: &[f64]) -> Result<f64> {
    compute_stats(xs).map(|s| s.c)
}

/// Moment-ratio skewness `g1 = m3 / m2^(3/2)`.
pub fn skewness(xs: &[f64]) -> Result<f64> {
    compute_stats(xs).map(|s| s.g1)
}

/// Excess kurtosis along nested sample prefixes.
///
/// Point `(k, g2)` is the excess kurtosis of the first `k` observations, so
/// the curve tracks how kurtosis accumulates as a single sample grows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthCurve {
    points: Vec<(usize, f64)>,
}

impl GrowthCurve {
    /// Curve from explicit `(prefix length, g2)` points — e.g. a mean curve
    /// aggregated across replicates. Prefix lengths must be strictly
    /// increasing and start at `>= 4`; values must be finite.
    pub fn from_points(points: Vec<(usize, f64)>) -> Result<GrowthCurve> {
        validate_checkpoints(
            &points.iter().map(|&(k, _)| k).collect::<Vec<_>>(),
            usize::MAX,
        )?;
        if let Some(&(k, g)) = points.iter().find(|(_, g)| !g.is_finite()) {
            return Err(Error::NumericDomain(format!(
                "non-finite g2 value {g} at prefix length {k}"
            )));
        }
        Ok(GrowthCurve { points })
    }

    pub fn points(&self) -> &[(usize, f64)] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Prefix lengths, in checkpoint order.
    pub fn ns(&self) -> Vec<usize> {
        self.points.iter().map(|&(k, _)| k).collect()
    }

    /// Excess-kurtosis values, in checkpoint order.
    pub fn g2s(&self) -> Vec<f64> {
        self.points.iter().map(|&(_, g)| g).collect()
    }

    /// CSV with header `n,g2`; values round-trip exactly.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["n", "g2"])?;
        for &(k, g2) in &self.points {
            out.write_record([k.to_string(), g2.to_string()])?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("in-memory write");
        String::from_utf8(buf).expect("csv output is utf-8")
    }

    /// Parse the `n,g2` CSV form produced by [`GrowthCurve::write_csv`].
    pub fn read_csv<R: Read>(r: R) -> Result<GrowthCurve> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
        {
            let headers = rdr.headers()?;
            if headers.len() != 2 || &headers[0] != "n" || &headers[1] != "g2" {
                return Err(Error::Ingest(format!(
                    "expected growth-curve header `n,g2`, got `{}`",
                    headers.iter().collect::<Vec<_>>().join(",")
                )));
            }
        }
        let mut points = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let k: usize = rec[0]
                .parse()
                .map_err(|_| Error::Ingest(format!("bad prefix length `{}`", &rec[0])))?;
            let g2: f64 = rec[1]
                .parse()
                .map_err(|_| Error::Ingest(format!("bad g2 value `{}`", &rec[1])))?;
            points.push((k, g2));
        }
        GrowthCurve::from_points(points)
    }
}

/// Excess kurtosis of each sample prefix named in `checkpoints`.
///
/// Checkpoints must be strictly increasing, start at `>= 4`, and end at
/// `<= xs.len()`. A degenerate prefix is reported with its checkpoint.
pub fn growth_curve(xs: &[f64], checkpoints: &[usize]) -> Result<GrowthCurve> {
    validate_checkpoints(checkpoints, xs.len())?;
    let mut points = Vec::with_capacity(checkpoints.len());
    for &k in checkpoints {
        let stats = compute_stats(&xs[..k]).map_err(|e| match e {
            Error::DegenerateSample(_) => {
                Error::DegenerateSample(format!("prefix at checkpoint {k} has zero second moment"))
            }
            other => other,
        })?;
        points.push((k, stats.g2));
    }
    Ok(GrowthCurve { points })
}

/// Shared checkpoint validation: non-empty, strictly increasing, first `>= 4`,
/// last `<= n`.
pub(crate) fn validate_checkpoints(checkpoints: &[usize], n: usize) -> Result<()> {
    if checkpoints.is_empty() {
        return Err(Error::Parameter("checkpoint list is empty".into()));
    }
    if checkpoints[0] < MIN_MOMENT_OBS {
        return Err(Error::Parameter(format!(
            "first checkpoint must be >= {MIN_MOMENT_OBS}, got {}",
            checkpoints[0]
        )));
    }
    if let Some(w) = checkpoints.windows(2).find(|w| w[1] <= w[0]) {
        return Err(Error::Parameter(format!(
            "checkpoints must be strictly increasing, got {} after {}",
            w[1], w[0]
        )));
    }
    let last = *checkpoints.last().expect("non-empty");
    if last > n {
        return Err(Error::Parameter(format!(
            "last checkpoint {last} exceeds sample length {n}"
        )));
    }
    Ok(())
}
