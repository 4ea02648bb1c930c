//! Price-series ingestion and the log-return workflow: cumulative kurtosis
//! growth and per-window tail-index estimates.
//!
//! The intended path: load a dated close-price CSV, take log-returns, watch
//! how excess kurtosis accumulates as observations arrive (a roughly linear
//! climb suggests stable-like tails with `alpha = 2 (1 - slope)`), and
//! compare kurtosis-ratio and characteristic-function estimates on chosen
//! windows.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::moments::{self, GrowthCurve, SampleStats};
use crate::tail_inference::{alpha_from_kurtosis, kogon_williams, AlphaEstimate};

/// Dated close prices: strictly increasing dates, strictly positive closes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceSeries {
    observations: Vec<(NaiveDate, f64)>,
    source: String,
    /// Ingestion notes (e.g. the input needed re-sorting), newest last.
    warnings: Vec<String>,
}

impl PriceSeries {
    /// Validating constructor: dates strictly increasing, closes positive
    /// and finite.
    pub fn new(observations: Vec<(NaiveDate, f64)>, source: impl Into<String>) -> Result<Self> {
        if let Some((date, close)) = observations
            .iter()
            .find(|(_, c)| !c.is_finite() || *c <= 0.0)
        {
            return Err(Error::Ingest(format!(
                "close {close} on {date} is not a positive real"
            )));
        }
        if let Some(w) = observations.windows(2).find(|w| w[1].0 <= w[0].0) {
            let msg = if w[1].0 == w[0].0 {
                format!("duplicate date {}", w[1].0)
            } else {
                format!("dates out of order: {} after {}", w[1].0, w[0].0)
            };
            return Err(Error::Ingest(msg));
        }
        Ok(PriceSeries {
            observations,
            source: source.into(),
            warnings: Vec::new(),
        })
    }

    pub fn observations(&self) -> &[(NaiveDate, f64)] {
        &self.observations
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// CSV with header `date,close`; ISO dates, closes at full round-trip
    /// precision, so a reload reproduces the series exactly.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["date", "close"])?;
        for (date, close) in &self.observations {
            out.write_record([date.to_string(), close.to_string()])?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("in-memory write");
        String::from_utf8(buf).expect("csv output is utf-8")
    }
}

/// Log-returns `r_t = ln(p_t / p_{t-1})` with the date of the later price.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnSeries {
    returns: Vec<f64>,
    dates: Vec<NaiveDate>,
}

impl ReturnSeries {
    pub fn returns(&self) -> &[f64] {
        &self.returns
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn len(&self) -> usize {
        self.returns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.returns.is_empty()
    }
}

/// Load a dated close-price CSV from disk. See [`read_price_csv`].
pub fn load_price_csv(path: &Path, date_col: &str, close_col: &str) -> Result<PriceSeries> {
    let file = std::fs::File::open(path)
        .map_err(|e| Error::Ingest(format!("cannot open {}: {e}", path.display())))?;
    read_price_csv(file, &path.display().to_string(), date_col, close_col)
}

/// Parse a close-price CSV: header row required, dates ISO-8601, one price
/// per row. Rows may arrive unsorted — they are re-sorted with a recorded
/// warning — but duplicate dates, nonpositive prices, and unparseable cells
/// are errors naming the offending line.
pub fn read_price_csv<R: Read>(
    reader: R,
    source: &str,
    date_col: &str,
    close_col: &str,
) -> Result<PriceSeries> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let headers = rdr.headers()?.clone();
    let find = |name: &str| -> Result<usize> {
        headers.iter().position(|h| h == name).ok_or_else(|| {
            Error::Ingest(format!(
                "column `{name}` not found in {source}; header has [{}]",
                headers.iter().collect::<Vec<_>>().join(", ")
            ))
        })
    };
    let date_idx = find(date_col)?;
    let close_idx = find(close_col)?;

    let mut observations: Vec<(NaiveDate, f64)> = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let date_text = record
            .get(date_idx)
            .ok_or_else(|| Error::Ingest(format!("line {line}: missing `{date_col}` field")))?;
        let close_text = record
            .get(close_idx)
            .ok_or_else(|| Error::Ingest(format!("line {line}: missing `{close_col}` field")))?;
        let date: NaiveDate = date_text.parse().map_err(|_| {
            Error::Ingest(format!(
                "line {line}: `{date_text}` is not an ISO-8601 date"
            ))
        })?;
        let close: f64 = close_text
            .parse()
            .map_err(|_| Error::Ingest(format!("line {line}: `{close_text}` is not a number")))?;
        if !close.is_finite() || close <= 0.0 {
            return Err(Error::Ingest(format!(
                "line {line}: close {close} must be a positive real"
            )));
        }
        observations.push((date, close));
    }

    let sorted = observations.windows(2).all(|w| w[0].0 < w[1].0);
    let mut warnings = Vec::new();
    if !sorted {
        observations.sort_by_key(|(date, _)| *date);
        if let Some(w) = observations.windows(2).find(|w| w[1].0 == w[0].0) {
            return Err(Error::Ingest(format!(
                "duplicate date {} in {source}",
                w[1].0
            )));
        }
        warnings.push(format!(
            "{source}: dates were unsorted; rows re-sorted by date"
        ));
    }

    let mut series = PriceSeries::new(observations, source)?;
    series.warnings = warnings;
    Ok(series)
}

/// Log-returns of consecutive closes: `r_t = ln(p_t / p_{t-1})`.
///
/// The ratio form makes scaling every close by a power of two an exact
/// no-op on the returns (the quotient is unchanged), and any other positive
/// scale a no-op to rounding.
pub fn log_returns(prices: &PriceSeries) -> Result<ReturnSeries> {
    if prices.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "log-returns need at least 2 prices, got {}",
            prices.len()
        )));
    }
    let obs = prices.observations();
    let mut returns = Vec::with_capacity(obs.len() - 1);
    let mut dates = Vec::with_capacity(obs.len() - 1);
    for w in obs.windows(2) {
        returns.push((w[1].1 / w[0].1).ln());
        dates.push(w[1].0);
    }
    Ok(ReturnSeries { returns, dates })
}

/// Excess kurtosis of return prefixes of length `4 + step`, `4 + 2*step`, …
/// up to the series length.
pub fn rolling_kurtosis(returns: &ReturnSeries, step: usize) -> Result<GrowthCurve> {
    if step == 0 {
        return Err(Error::Parameter("rolling step must be >= 1".into()));
    }
    let n = returns.len();
    if n < 4 + step {
        return Err(Error::InsufficientData(format!(
            "rolling kurtosis needs at least {} returns for step {step}, got {n}",
            4 + step
        )));
    }
    let checkpoints: Vec<usize> = (1..)
        .map(|i| 4 + i * step)
        .take_while(|&k| k <= n)
        .collect();
    moments::growth_curve(returns.returns(), &checkpoints)
}

/// Both tail-index estimates plus moment statistics for one return window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowEstimates {
    /// Half-open window `[start, end)` in return indices.
    pub start: usize,
    pub end: usize,
    pub stats: SampleStats,
    pub kurtosis_ratio: AlphaEstimate,
    pub kogon_williams: AlphaEstimate,
}

/// Apply the kurtosis-ratio and characteristic-function estimators to each
/// half-open window `[start, end)` of the return series. Windows must lie in
/// range and hold at least 100 returns; the report is sorted by start.
pub fn window_estimates(
    returns: &ReturnSeries,
    windows: &[(usize, usize)],
) -> Result<Vec<WindowEstimates>> {
    let n = returns.len();
    for &(start, end) in windows {
        if start >= end || end > n {
            return Err(Error::Parameter(format!(
                "window [{start}, {end}) is not a valid range within {n} returns"
            )));
        }
        if end - start < 100 {
            return Err(Error::Parameter(format!(
                "window [{start}, {end}) holds {} returns; need at least 100",
                end - start
            )));
        }
    }
    let mut sorted: Vec<(usize, usize)> = windows.to_vec();
    sorted.sort();
    sorted
        .into_iter()
        .map(|(start, end)| {
            let slice = &returns.returns()[start..end];
            let stats = moments::compute_stats(slice)?;
            Ok(WindowEstimates {
                start,
                end,
                stats,
                kurtosis_ratio: alpha_from_kurtosis(stats.g2, slice.len())?,
                kogon_williams: kogon_williams(slice)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{sample_symmetric_stable, SeedSpec, StableParams};
    use approx::assert_relative_eq;

    fn date(s: &str) -> NaiveDate {
        s.parse().unwrap()
    }

    fn series(closes: &[f64]) -> PriceSeries {
        let obs: Vec<(NaiveDate, f64)> = closes
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                let d = date("2020-01-01") + chrono::Days::new(i as u64);
                (d, c)
            })
            .collect();
        PriceSeries::new(obs, "test").unwrap()
    }

    #[test]
    fn loads_well_formed_csv() {
        let csv = "date,close\n2021-03-01,100\n2021-03-02,101\n";
        let s = read_price_csv(csv.as_bytes(), "mem", "date", "close").unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.observations()[0], (date("2021-03-01"), 100.0));
        assert!(s.warnings().is_empty());
    }

    #[test]
    fn load_respects_custom_column_names() {
        let csv = "Day,Extra,Close Price\n2021-03-01,x,100\n2021-03-02,y,101\n";
        let s = read_price_csv(csv.as_bytes(), "mem", "Day", "Close Price").unwrap();
        assert_eq!(s.len(), 2);
    }

    #[test]
    fn load_errors_name_the_line() {
        let mut csv = String::from("date,close\n");
        for i in 1..=5 {
            csv.push_str(&format!("2021-03-{:02},10{i}\n", i));
        }
        csv.push_str("2021-03-06,0\n"); // line 7
        let err = read_price_csv(csv.as_bytes(), "mem", "date", "close").unwrap_err();
        assert!(err.to_string().contains("line 7"), "error: {err}");

        let bad_date = "date,close\n2021-03-01,100\nnot-a-date,101\n";
        let err = read_price_csv(bad_date.as_bytes(), "mem", "date", "close").unwrap_err();
        assert!(err.to_string().contains("line 3"), "error: {err}");

        let bad_close = "date,close\n2021-03-01,abc\n";
        let err = read_price_csv(bad_close.as_bytes(), "mem", "date", "close").unwrap_err();
        assert!(err.to_string().contains("line 2"), "error: {err}");
    }

    #[test]
    fn load_rejects_missing_columns_and_duplicates() {
        let csv = "day,close\n2021-03-01,100\n";
        let err = read_price_csv(csv.as_bytes(), "mem", "date", "close").unwrap_err();
        assert!(err.to_string().contains("`date`"), "error: {err}");

        let dup = "date,close\n2021-03-02,100\n2021-03-01,99\n2021-03-02,101\n";
        let err = read_price_csv(dup.as_bytes(), "mem", "date", "close").unwrap_err();
        assert!(err.to_string().contains("duplicate"), "error: {err}");
    }

    #[test]
    fn unsorted_input_is_sorted_with_warning() {
        let csv = "date,close\n2021-03-03,103\n2021-03-01,101\n2021-03-02,102\n";
        let s = read_price_csv(csv.as_bytes(), "mem", "date", "close").unwrap();
        assert_eq!(s.len(), 3);
        assert!(s.observations().windows(2).all(|w| w[0].0 < w[1].0));
        assert_eq!(s.warnings().len(), 1);
        assert!(s.warnings()[0].contains("re-sorted"));
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let s = series(&[100.0, 101.37, 99.995, 102.125061]);
        let text = s.to_csv_string();
        assert!(text.starts_with("date,close\n"));
        let back = read_price_csv(text.as_bytes(), "test", "date", "close").unwrap();
        assert_eq!(back.observations(), s.observations());
    }

    #[test]
    fn log_return_hand_values() {
        let s = series(&[1.0, std::f64::consts::E]);
        let r = log_returns(&s).unwrap();
        assert_eq!(r.returns(), &[1.0]);
        assert_eq!(r.dates(), &[date("2020-01-02")]);

        let s = series(&[5.0, 5.0, 5.0]);
        assert_eq!(log_returns(&s).unwrap().returns(), &[0.0, 0.0]);

        let s = series(&[100.0, 101.0]);
        assert_relative_eq!(
            log_returns(&s).unwrap().returns()[0],
            0.00995033085316808,
            max_relative = 1e-15
        );
    }

    #[test]
    fn log_returns_need_two_prices() {
        let s = series(&[100.0]);
        assert!(matches!(log_returns(&s), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn price_scaling_leaves_returns_unchanged() {
        let closes = [100.0, 103.7, 99.2, 101.6, 104.9];
        let base = log_returns(&series(&closes)).unwrap();
        // Power-of-two scaling is exact: quotients are bit-identical.
        let doubled: Vec<f64> = closes.iter().map(|c| 4.0 * c).collect();
        let scaled = log_returns(&series(&doubled)).unwrap();
        assert_eq!(base.returns(), scaled.returns());
        // Arbitrary positive scaling is a no-op to rounding.
        let odd: Vec<f64> = closes.iter().map(|c| 3.1 * c).collect();
        let scaled = log_returns(&series(&odd)).unwrap();
        for (a, b) in base.returns().iter().zip(scaled.returns()) {
            assert_relative_eq!(a, b, epsilon = 1e-13);
        }
    }

    #[test]
    fn rolling_kurtosis_checkpoints_and_delegation() {
        let p = StableParams::standard(1.6).unwrap();
        let xs = sample_symmetric_stable(&p, 64, SeedSpec::new(31, 0));
        let prices: Vec<f64> = std::iter::once(100.0)
            .chain(xs.iter().scan(100.0f64, |acc, &r| {
                *acc *= (r / 100.0).exp();
                Some(*acc)
            }))
            .collect();
        let returns = log_returns(&series(&prices)).unwrap();
        assert_eq!(returns.len(), 64);

        let curve = rolling_kurtosis(&returns, 10).unwrap();
        assert_eq!(curve.ns(), vec![14, 24, 34, 44, 54, 64]);
        // Final checkpoint covers the full series, so it equals the batch value.
        let full = moments::excess_kurtosis(returns.returns()).unwrap();
        let last = curve.points().last().unwrap().1;
        assert_relative_eq!(last, full, max_relative = 1e-9);
        // Each point equals batch recomputation on its prefix.
        for &(k, g2) in curve.points() {
            let direct = moments::excess_kurtosis(&returns.returns()[..k]).unwrap();
            assert_eq!(g2, direct);
        }
    }

    #[test]
    fn rolling_kurtosis_validates_input() {
        let s = series(&[100.0, 101.0, 102.0, 103.0]);
        let r = log_returns(&s).unwrap();
        assert!(matches!(
            rolling_kurtosis(&r, 10),
            Err(Error::InsufficientData(_))
        ));
        assert!(matches!(rolling_kurtosis(&r, 0), Err(Error::Parameter(_))));
    }

    #[test]
    fn window_estimates_run_both_methods() {
        let p = StableParams::standard(1.7).unwrap();
        let xs = sample_symmetric_stable(&p, 400, SeedSpec::new(53, 0));
        let returns = ReturnSeries {
            returns: xs,
            dates: (0..400)
                .map(|i| date("2020-01-01") + chrono::Days::new(i))
                .collect(),
        };
        let reports = window_estimates(&returns, &[(200, 400), (0, 150)]).unwrap();
        assert_eq!(reports.len(), 2);
        // Sorted by window start.
        assert_eq!((reports[0].start, reports[0].end), (0, 150));
        assert_eq!((reports[1].start, reports[1].end), (200, 400));
        for r in &reports {
            assert!(r.kurtosis_ratio.alpha_hat > 0.0);
            assert!(r.kogon_williams.sigma_hat.is_some());
            assert_eq!(r.stats.n, r.end - r.start);
        }
    }

    #[test]
    fn window_estimates_validate_ranges() {
        let returns = ReturnSeries {
            returns: vec![0.1; 300],
            dates: (0..300)
                .map(|i| date("2020-01-01") + chrono::Days::new(i))
                .collect(),
        };
        assert!(window_estimates(&returns, &[]).unwrap().is_empty());
        assert!(window_estimates(&returns, &[(0, 50)]).is_err());
        assert!(window_estimates(&returns, &[(0, 400)]).is_err());
        assert!(window_estimates(&returns, &[(200, 200)]).is_err());
    }

    #[test]
    fn constructor_rejects_bad_series() {
        assert!(PriceSeries::new(vec![(date("2021-01-01"), -1.0)], "t").is_err());
        assert!(PriceSeries::new(
            vec![(date("2021-01-02"), 1.0), (date("2021-01-01"), 2.0)],
            "t"
        )
        .is_err());
        assert!(PriceSeries::new(
            vec![(date("2021-01-01"), 1.0), (date("2021-01-01"), 2.0)],
            "t"
        )
        .is_err());
    }
}
