//! Deterministic Monte Carlo harness.
//!
//! Seven experiment kinds probe how sample kurtosis behaves on heavy-tailed
//! data: a kurtosis-vs-(n, alpha) scatter with its no-intercept regression,
//! mean growth curves with slope and linearity summaries, per-alpha slope
//! averages regressed on `2 - alpha`, the variance of `b2` over `n^2`, the
//! mean of `g2/n` against `1 - alpha/2`, pairwise ordering accuracy, and a
//! skewness baseline.
//!
//! Reproducibility contract: every replicate owns the PRNG stream named by
//! [`derive_replicate_seed`], rows are collected in grid order, and all
//! aggregation is sequential compensated summation over the ordered rows —
//! so a report depends only on its config, never on thread count or
//! scheduling.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::time::Instant;

use crate::distributions::{
    sample_gaussian_with, sample_stable_with, sample_student_t_with, SeedSpec, StableParams,
    StudentTParams,
};
use crate::error::{Error, Result};
use crate::moments::{self, growth_curve, GrowthCurve};
use crate::numeric::{self, CompensatedSum};
use crate::tail_inference::{
    fit_growth_slope, linearity_diagnostic, slope_vs_alpha_regression, LinearityReport, SlopeFit,
};

/// Experiment kinds, named after what they measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    /// `(alpha, n, g2)` cloud with the no-intercept regression on `(n, n*alpha)`.
    Scatter,
    /// Mean growth curves per parameter, with slope fit and linearity report.
    GrowthSlopes,
    /// Per-alpha mean of per-replicate growth slopes, regressed on `2 - alpha`.
    SlopeVsAlpha,
    /// Variance of `b2` across replicates, divided by `n^2`.
    VarianceCurve,
    /// Mean of `g2/n` against the predicted `1 - alpha/2`.
    MeanRatio,
    /// How often the heavier-tailed sample of a pair shows the larger kurtosis.
    Ordering,
    /// Mean and variance of sample skewness over an `(alpha, n)` grid.
    Skewness,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 7] = [
        ExperimentKind::Scatter,
        ExperimentKind::GrowthSlopes,
        ExperimentKind::SlopeVsAlpha,
        ExperimentKind::VarianceCurve,
        ExperimentKind::MeanRatio,
        ExperimentKind::Ordering,
        ExperimentKind::Skewness,
    ];

    /// Stable numeric id used in stream derivation; never renumber.
    fn stream_tag(self) -> u64 {
        match self {
            ExperimentKind::Scatter => 1,
            ExperimentKind::GrowthSlopes => 2,
            ExperimentKind::SlopeVsAlpha => 3,
            ExperimentKind::VarianceCurve => 4,
            ExperimentKind::MeanRatio => 5,
            ExperimentKind::Ordering => 6,
            ExperimentKind::Skewness => 7,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::Scatter => "scatter",
            ExperimentKind::GrowthSlopes => "growth-slopes",
            ExperimentKind::SlopeVsAlpha => "slope-vs-alpha",
            ExperimentKind::VarianceCurve => "variance-curve",
            ExperimentKind::MeanRatio => "mean-ratio",
            ExperimentKind::Ordering => "ordering",
            ExperimentKind::Skewness => "skewness",
        }
    }
}

impl std::fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Parameter(format!("unknown experiment kind `{s}`")))
    }
}

/// Sampled family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilySpec {
    Stable,
    StudentT,
    Gaussian,
}

impl std::fmt::Display for FamilySpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FamilySpec::Stable => "stable",
            FamilySpec::StudentT => "student-t",
            FamilySpec::Gaussian => "gaussian",
        })
    }
}

impl std::str::FromStr for FamilySpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "stable" => Ok(FamilySpec::Stable),
            "student-t" | "t" => Ok(FamilySpec::StudentT),
            "gaussian" => Ok(FamilySpec::Gaussian),
            other => Err(Error::Parameter(format!("unknown family `{other}`"))),
        }
    }
}

/// How each replicate's sample size is chosen.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SizeSpec {
    /// Every replicate uses this size.
    Fixed(usize),
    /// Discrete uniform draw on `[lo, hi]`, one per replicate.
    UniformRandom { lo: usize, hi: usize },
    /// One grid cell per size (skewness kind only).
    Grid(Vec<usize>),
}

/// Full description of one experiment; a report is reproducible from this
/// alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub family: FamilySpec,
    /// Stable tail indices; one grid cell each (except scatter, which draws
    /// alpha uniformly and wants this empty).
    #[serde(default)]
    pub alphas: Vec<f64>,
    /// Student-t degrees of freedom (family = student-t).
    #[serde(default)]
    pub nus: Vec<f64>,
    /// Replicates per grid cell.
    pub m: usize,
    pub size: SizeSpec,
    /// Prefix checkpoints (growth kinds only).
    #[serde(default)]
    pub checkpoints: Vec<usize>,
    pub master_seed: u64,
}

impl ExperimentConfig {
    /// Config preloaded with each kind's reference protocol: m = 5000,
    /// checkpoints 50..500 step 50, uniform sizes on [200, 1500] where sizes
    /// are random, n = 250 for slope-vs-alpha, n = 500 elsewhere.
    pub fn preset(kind: ExperimentKind, master_seed: u64) -> ExperimentConfig {
        let step50 = |last: usize| -> Vec<usize> { (1..=last / 50).map(|i| 50 * i).collect() };
        let base = ExperimentConfig {
            kind,
            family: FamilySpec::Stable,
            alphas: Vec::new(),
            nus: Vec::new(),
            m: 5000,
            size: SizeSpec::Fixed(500),
            checkpoints: Vec::new(),
            master_seed,
        };
        match kind {
            ExperimentKind::Scatter => ExperimentConfig {
                m: 500,
                size: SizeSpec::UniformRandom { lo: 200, hi: 1500 },
                ..base
            },
            ExperimentKind::GrowthSlopes => ExperimentConfig {
                alphas: vec![1.0, 1.5, 2.0],
                checkpoints: step50(500),
                ..base
            },
            ExperimentKind::SlopeVsAlpha => ExperimentConfig {
                alphas: (0..=10).map(|i| 1.0 + 0.1 * i as f64).collect(),
                size: SizeSpec::Fixed(250),
                checkpoints: step50(250),
                ..base
            },
            ExperimentKind::VarianceCurve => ExperimentConfig {
                alphas: vec![1.2, 1.4, 1.6, 1.8, 2.0],
                ..base
            },
            ExperimentKind::MeanRatio => ExperimentConfig {
                alphas: vec![1.25, 1.5, 1.75],
                size: SizeSpec::UniformRandom { lo: 200, hi: 1500 },
                ..base
            },
            ExperimentKind::Ordering => ExperimentConfig {
                alphas: vec![1.25, 1.75],
                size: SizeSpec::UniformRandom { lo: 200, hi: 1500 },
                ..base
            },
            ExperimentKind::Skewness => ExperimentConfig {
                alphas: vec![1.5],
                size: SizeSpec::Grid(vec![100, 500]),
                ..base
            },
        }
    }

    pub fn from_json_str(s: &str) -> Result<ExperimentConfig> {
        serde_json::from_str(s).map_err(|e| Error::Config(format!("bad JSON config: {e}")))
    }

    pub fn from_toml_str(s: &str) -> Result<ExperimentConfig> {
        toml::from_str(s).map_err(|e| Error::Config(format!("bad TOML config: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    /// Cross-field validation; every run calls this first.
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::Parameter("replicate count m must be >= 1".into()));
        }
        if self.m as u64 >= 1 << 40 {
            return Err(Error::Parameter(format!(
                "replicate count {} exceeds the stream budget (2^40)",
                self.m
            )));
        }
        for &a in &self.alphas {
            if !a.is_finite() || a <= 0.0 || a > 2.0 {
                return Err(Error::Parameter(format!(
                    "alpha values must lie in (0, 2], got {a}"
                )));
            }
        }
        for &nu in &self.nus {
            if !nu.is_finite() || nu <= 0.0 {
                return Err(Error::Parameter(format!(
                    "nu values must be positive, got {nu}"
                )));
            }
        }
        match &self.size {
            SizeSpec::Fixed(n) => {
                if *n < 4 {
                    return Err(Error::Parameter(format!("fixed size {n} must be >= 4")));
                }
            }
            SizeSpec::UniformRandom { lo, hi } => {
                if *lo < 4 || lo > hi {
                    return Err(Error::Parameter(format!(
                        "size bounds must satisfy 4 <= lo <= hi, got [{lo}, {hi}]"
                    )));
                }
            }
            SizeSpec::Grid(ns) => {
                if self.kind != ExperimentKind::Skewness {
                    return Err(Error::Parameter(
                        "grid sizes only apply to the skewness kind".into(),
                    ));
                }
                if ns.is_empty() || ns.iter().any(|&n| n < 4) {
                    return Err(Error::Parameter(
                        "size grid must be non-empty with every size >= 4".into(),
                    ));
                }
            }
        }

        let is_growth = matches!(
            self.kind,
            ExperimentKind::GrowthSlopes | ExperimentKind::SlopeVsAlpha
        );
        if is_growth {
            if self.checkpoints.len() < 3 {
                return Err(Error::Parameter(
                    "growth kinds need at least 3 checkpoints".into(),
                ));
            }
            let n = match self.size {
                SizeSpec::Fixed(n) => n,
                _ => {
                    return Err(Error::Parameter(
                        "growth kinds need a fixed sample size".into(),
                    ))
                }
            };
            moments::validate_checkpoints(&self.checkpoints, n)?;
        } else if !self.checkpoints.is_empty() {
            return Err(Error::Parameter(format!(
                "checkpoints do not apply to the {} kind",
                self.kind
            )));
        }

        if self.family != FamilySpec::Stable && self.kind != ExperimentKind::GrowthSlopes {
            return Err(Error::Parameter(format!(
                "family {} is only supported by the growth-slopes kind",
                self.family
            )));
        }

        match self.kind {
            ExperimentKind::Scatter => {
                if !self.alphas.is_empty() {
                    return Err(Error::Parameter(
                        "scatter draws alpha uniformly on [1, 2]; leave alphas empty".into(),
                    ));
                }
                if !matches!(self.size, SizeSpec::UniformRandom { .. }) {
                    return Err(Error::Parameter(
                        "scatter requires uniform-random sizes".into(),
                    ));
                }
            }
            ExperimentKind::Ordering => {
                if self.alphas.len() != 2 {
                    return Err(Error::Parameter(format!(
                        "ordering requires exactly two alphas, got {}",
                        self.alphas.len()
                    )));
                }
            }
            ExperimentKind::VarianceCurve => {
                if !matches!(self.size, SizeSpec::Fixed(_)) {
                    return Err(Error::Parameter(
                        "variance-curve requires a fixed sample size".into(),
                    ));
                }
                if self.alphas.is_empty() {
                    return Err(Error::Parameter("variance-curve needs alphas".into()));
                }
            }
            ExperimentKind::MeanRatio | ExperimentKind::SlopeVsAlpha | ExperimentKind::Skewness => {
                if self.alphas.is_empty() {
                    return Err(Error::Parameter(format!(
                        "{} needs at least one alpha",
                        self.kind
                    )));
                }
            }
            ExperimentKind::GrowthSlopes => {
                let params = self.family_params()?;
                if params.is_empty() {
                    return Err(Error::Parameter(format!(
                        "growth-slopes needs parameters for the {} family",
                        self.family
                    )));
                }
            }
        }
        Ok(())
    }

    /// Parameter list driving the grid for the configured family.
    /// Gaussian has no shape parameter; its single grid cell carries sigma.
    fn family_params(&self) -> Result<Vec<f64>> {
        match self.family {
            FamilySpec::Stable => Ok(self.alphas.clone()),
            FamilySpec::StudentT => {
                if !self.alphas.is_empty() {
                    return Err(Error::Parameter(
                        "student-t experiments take nus, not alphas".into(),
                    ));
                }
                Ok(self.nus.clone())
            }
            FamilySpec::Gaussian => {
                if !self.alphas.is_empty() || !self.nus.is_empty() {
                    return Err(Error::Parameter(
                        "gaussian experiments take no shape parameters".into(),
                    ));
                }
                Ok(vec![1.0])
            }
        }
    }

    /// Grid cells in row order. Each cell is `(param, fixed size if any)`.
    fn grid(&self) -> Result<Vec<GridCell>> {
        let cells = match self.kind {
            ExperimentKind::Scatter | ExperimentKind::Ordering => vec![GridCell {
                param: f64::NAN,
                n: None,
            }],
            ExperimentKind::Skewness => {
                let ns: Vec<usize> = match &self.size {
                    SizeSpec::Grid(ns) => ns.clone(),
                    SizeSpec::Fixed(n) => vec![*n],
                    SizeSpec::UniformRandom { .. } => {
                        return Err(Error::Parameter(
                            "skewness needs fixed or grid sizes".into(),
                        ))
                    }
                };
                self.alphas
                    .iter()
                    .flat_map(|&a| {
                        ns.iter().map(move |&n| GridCell {
                            param: a,
                            n: Some(n),
                        })
                    })
                    .collect()
            }
            _ => self
                .family_params()?
                .into_iter()
                .map(|p| GridCell { param: p, n: None })
                .collect(),
        };
        if cells.len() >= 1 << 16 {
            return Err(Error::Parameter(format!(
                "parameter grid of {} cells exceeds the stream budget (2^16)",
                cells.len()
            )));
        }
        Ok(cells)
    }

    fn column_names(&self) -> Vec<String> {
        match self.kind {
            ExperimentKind::Scatter => vec!["alpha".into(), "n".into(), "g2".into()],
            ExperimentKind::GrowthSlopes => {
                let mut cols = vec!["param".into(), "n".into()];
                cols.extend(self.checkpoints.iter().map(|k| format!("g2_at_{k}")));
                cols
            }
            ExperimentKind::SlopeVsAlpha => vec!["alpha".into(), "n".into(), "slope".into()],
            ExperimentKind::VarianceCurve => vec!["alpha".into(), "n".into(), "b2".into()],
            ExperimentKind::MeanRatio => {
                vec!["alpha".into(), "n".into(), "g2".into(), "g2_over_n".into()]
            }
            ExperimentKind::Ordering => vec![
                "alpha1".into(),
                "n1".into(),
                "g2_1".into(),
                "alpha2".into(),
                "n2".into(),
                "g2_2".into(),
            ],
            ExperimentKind::Skewness => vec!["alpha".into(), "n".into(), "g1".into()],
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct GridCell {
    param: f64,
    n: Option<usize>,
}

/// One replicate's record: provenance plus the kind's value columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRow {
    pub grid_index: usize,
    pub replicate: u64,
    pub seed: SeedSpec,
    pub values: Vec<f64>,
}

/// Kind-specific aggregates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ExperimentSummary {
    Scatter {
        /// Coefficients of the no-intercept least squares of `g2` on the
        /// regressors `n` and `n * alpha`; near (1, -0.5) for stable data.
        coeff_n: f64,
        coeff_n_alpha: f64,
    },
    GrowthSlopes {
        per_param: Vec<GrowthSlopesEntry>,
    },
    SlopeVsAlpha {
        per_alpha: Vec<SlopeVsAlphaEntry>,
        /// Through-origin coefficient of mean slope on `2 - alpha`; near 0.5.
        coefficient: f64,
    },
    VarianceCurve {
        n: usize,
        per_alpha: Vec<VarianceCurveEntry>,
    },
    MeanRatio {
        per_alpha: Vec<MeanRatioEntry>,
    },
    Ordering {
        alphas: [f64; 2],
        /// Fraction of pairs where the smaller-alpha sample had larger g2.
        fraction_raw: f64,
        /// Same fraction computed on g2/n instead of raw g2.
        fraction_ratio: f64,
    },
    Skewness {
        per_cell: Vec<SkewnessEntry>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthSlopesEntry {
    pub param: f64,
    pub mean_curve: Vec<(usize, f64)>,
    pub slope_fit: SlopeFit,
    /// Present when the curve has the 5+ checkpoints the diagnostic needs.
    pub linearity: Option<LinearityReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeVsAlphaEntry {
    pub alpha: f64,
    pub mean_slope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceCurveEntry {
    pub alpha: f64,
    pub var_b2: f64,
    pub var_b2_over_n2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanRatioEntry {
    pub alpha: f64,
    pub mean_g2_over_n: f64,
    /// The large-sample prediction `1 - alpha/2`.
    pub expected: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkewnessEntry {
    pub alpha: f64,
    pub n: usize,
    pub mean_g1: f64,
    pub var_g1: f64,
    /// Standard error of the mean, `sqrt(var_g1 / m)`.
    pub se_g1: f64,
}

/// Wall-clock facts about one run; excluded from reproducibility comparisons.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuntimeMeta {
    pub wall_seconds: f64,
    pub threads: usize,
}

/// Everything a run produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub columns: Vec<String>,
    pub rows: Vec<ReplicateRow>,
    pub summary: ExperimentSummary,
    pub runtime: RuntimeMeta,
}

impl ExperimentReport {
    /// Replicate rows as CSV. The first line echoes the config as a `#`
    /// comment so the artifact is self-describing; values round-trip exactly.
    pub fn write_rows_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# config={}", self.config.to_json())?;
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec![
            "grid_index".to_string(),
            "replicate".to_string(),
            "master_seed".to_string(),
            "stream_id".to_string(),
        ];
        header.extend(self.columns.iter().cloned());
        out.write_record(&header)?;
        for row in &self.rows {
            let mut rec = vec![
                row.grid_index.to_string(),
                row.replicate.to_string(),
                row.seed.master_seed.to_string(),
                row.seed.stream_id.to_string(),
            ];
            rec.extend(row.values.iter().map(|v| v.to_string()));
            out.write_record(&rec)?;
        }
        out.flush()?;
        Ok(())
    }

    /// Config + summary as pretty JSON. Runtime metadata is deliberately
    /// omitted so two runs of one config compare byte-identical.
    pub fn summary_json(&self) -> String {
        #[derive(Serialize)]
        struct View<'a> {
            config: &'a ExperimentConfig,
            summary: &'a ExperimentSummary,
        }
        let mut s = serde_json::to_string_pretty(&View {
            config: &self.config,
            summary: &self.summary,
        })
        .expect("summary serializes");
        s.push('\n');
        s
    }

    /// Runtime metadata as JSON (the only artifact that varies run to run).
    pub fn meta_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.runtime).expect("meta serializes");
        s.push('\n');
        s
    }

    /// Plot-ready two-column CSVs, named by content: `(file name, CSV text)`.
    pub fn figure_csvs(&self) -> Vec<(String, String)> {
        fn two_col(header: (&str, &str), rows: &[(f64, f64)]) -> String {
            let mut s = format!("{},{}\n", header.0, header.1);
            for (x, y) in rows {
                s.push_str(&format!("{x},{y}\n"));
            }
            s
        }
        match &self.summary {
            ExperimentSummary::Scatter { .. } => {
                // alpha, n live in columns 0, 1; g2 in column 2.
                let rows: Vec<(f64, f64)> = self
                    .rows
                    .iter()
                    .map(|r| {
                        let predicted = r.values[1] * (2.0 - r.values[0]) / 2.0;
                        (predicted, r.values[2])
                    })
                    .collect();
                vec![(
                    "scatter_predicted_vs_observed.csv".into(),
                    two_col(("predicted_g2", "observed_g2"), &rows),
                )]
            }
            ExperimentSummary::GrowthSlopes { per_param } => per_param
                .iter()
                .map(|e| {
                    let rows: Vec<(f64, f64)> =
                        e.mean_curve.iter().map(|&(k, g)| (k as f64, g)).collect();
                    (
                        format!("growth_mean_curve_{}_{}.csv", self.config.family, e.param),
                        two_col(("n", "mean_g2"), &rows),
                    )
                })
                .collect(),
            ExperimentSummary::SlopeVsAlpha { per_alpha, .. } => {
                let rows: Vec<(f64, f64)> = per_alpha
                    .iter()
                    .map(|e| (2.0 - e.alpha, e.mean_slope))
                    .collect();
                vec![(
                    "slope_vs_two_minus_alpha.csv".into(),
                    two_col(("two_minus_alpha", "mean_slope"), &rows),
                )]
            }
            ExperimentSummary::VarianceCurve { per_alpha, .. } => {
                let rows: Vec<(f64, f64)> = per_alpha
                    .iter()
                    .map(|e| (e.alpha, e.var_b2_over_n2))
                    .collect();
                vec![(
                    "variance_over_n2_vs_alpha.csv".into(),
                    two_col(("alpha", "var_b2_over_n2"), &rows),
                )]
            }
            ExperimentSummary::MeanRatio { per_alpha } => {
                let rows: Vec<(f64, f64)> = per_alpha
                    .iter()
                    .map(|e| (e.alpha, e.mean_g2_over_n))
                    .collect();
                vec![(
                    "mean_ratio_vs_alpha.csv".into(),
                    two_col(("alpha", "mean_g2_over_n"), &rows),
                )]
            }
            ExperimentSummary::Ordering {
                fraction_raw,
                fraction_ratio,
                ..
            } => {
                let text = format!(
                    "variant,fraction\nraw_g2,{fraction_raw}\ng2_over_n,{fraction_ratio}\n"
                );
                vec![("ordering_fractions.csv".into(), text)]
            }
            ExperimentSummary::Skewness { per_cell } => {
                let mut alphas: Vec<f64> = per_cell.iter().map(|e| e.alpha).collect();
                alphas.dedup();
                alphas
                    .into_iter()
                    .map(|a| {
                        let rows: Vec<(f64, f64)> = per_cell
                            .iter()
                            .filter(|e| e.alpha == a)
                            .map(|e| (e.n as f64, e.var_g1))
                            .collect();
                        (
                            format!("skewness_variance_vs_n_alpha_{a}.csv"),
                            two_col(("n", "var_g1"), &rows),
                        )
                    })
                    .collect()
            }
        }
    }
}

/// The stream id of one replicate: `kind tag << 56 | grid index << 40 |
/// replicate index`. Bit-packing keeps streams injective across kinds, grid
/// cells and replicates under one master seed; this layout is frozen.
pub fn derive_replicate_seed(
    master_seed: u64,
    kind: ExperimentKind,
    grid_index: usize,
    replicate_index: u64,
) -> SeedSpec {
    assert!(
        (grid_index as u64) < (1 << 16),
        "grid index {grid_index} out of range"
    );
    assert!(
        replicate_index < (1 << 40),
        "replicate index {replicate_index} out of range"
    );
    let stream_id = (kind.stream_tag() << 56) | ((grid_index as u64) << 40) | replicate_index;
    SeedSpec::new(master_seed, stream_id)
}

/// Run one experiment to completion.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let started = Instant::now();
    let cells = config.grid()?;
    let total = cells.len() * config.m;

    let rows: Vec<ReplicateRow> = (0..total as u64)
        .into_par_iter()
        .map(|idx| {
            let grid_index = (idx / config.m as u64) as usize;
            let replicate = idx % config.m as u64;
            let seed = derive_replicate_seed(config.master_seed, config.kind, grid_index, replicate);
            run_replicate(config, cells[grid_index], seed)
                .map(|values| ReplicateRow {
                    grid_index,
                    replicate,
                    seed,
                    values,
                })
                .map_err(|e| {
                    e.with_context(format!(
                        "kind={} grid_index={grid_index} replicate={replicate} master_seed={} stream_id={}",
                        config.kind, seed.master_seed, seed.stream_id
                    ))
                })
        })
        .collect::<Result<Vec<_>>>()?;

    let summary = summarize(config, &cells, &rows)?;
    Ok(ExperimentReport {
        config: config.clone(),
        columns: config.column_names(),
        rows,
        summary,
        runtime: RuntimeMeta {
            wall_seconds: started.elapsed().as_secs_f64(),
            threads: rayon::current_num_threads(),
        },
    })
}

/// One replicate's values, drawn entirely from `seed`'s stream. Draw order
/// within the stream is part of the reproducibility contract: size first
/// (when random), then the sample; the ordering kind interleaves
/// (size1, sample1, size2, sample2).
fn run_replicate(config: &ExperimentConfig, cell: GridCell, seed: SeedSpec) -> Result<Vec<f64>> {
    use rand::Rng;
    let mut rng = seed.rng();
    let draw_n = |rng: &mut rand_chacha::ChaCha12Rng| -> usize {
        match config.size {
            SizeSpec::Fixed(n) => n,
            SizeSpec::UniformRandom { lo, hi } => rng.random_range(lo..=hi),
            SizeSpec::Grid(_) => cell.n.expect("grid cell carries its size"),
        }
    };

    match config.kind {
        ExperimentKind::Scatter => {
            let alpha = rng.random_range(1.0..=2.0);
            let n = draw_n(&mut rng);
            let params = StableParams::standard(alpha)?;
            let xs = sample_stable_with(&params, n, &mut rng);
            let g2 = moments::compute_stats(&xs)?.g2;
            Ok(vec![alpha, n as f64, g2])
        }
        ExperimentKind::GrowthSlopes => {
            let n = draw_n(&mut rng);
            let xs = sample_family(config.family, cell.param, n, &mut rng)?;
            let curve = growth_curve(&xs, &config.checkpoints)?;
            let mut values = vec![cell.param, n as f64];
            values.extend(curve.g2s());
            Ok(values)
        }
        ExperimentKind::SlopeVsAlpha => {
            let n = draw_n(&mut rng);
            let params = StableParams::standard(cell.param)?;
            let xs = sample_stable_with(&params, n, &mut rng);
            let curve = growth_curve(&xs, &config.checkpoints)?;
            let fit = fit_growth_slope(&curve)?;
            Ok(vec![cell.param, n as f64, fit.slope])
        }
        ExperimentKind::VarianceCurve => {
            let n = draw_n(&mut rng);
            let params = StableParams::standard(cell.param)?;
            let xs = sample_stable_with(&params, n, &mut rng);
            let b2 = moments::compute_stats(&xs)?.b2;
            Ok(vec![cell.param, n as f64, b2])
        }
        ExperimentKind::MeanRatio => {
            let n = draw_n(&mut rng);
            let params = StableParams::standard(cell.param)?;
            let xs = sample_stable_with(&params, n, &mut rng);
            let g2 = moments::compute_stats(&xs)?.g2;
            Ok(vec![cell.param, n as f64, g2, g2 / n as f64])
        }
        ExperimentKind::Ordering => {
            let (a1, a2) = (config.alphas[0], config.alphas[1]);
            let n1 = draw_n(&mut rng);
            let xs1 = sample_stable_with(&StableParams::standard(a1)?, n1, &mut rng);
            let g2_1 = moments::compute_stats(&xs1)?.g2;
            let n2 = draw_n(&mut rng);
            let xs2 = sample_stable_with(&StableParams::standard(a2)?, n2, &mut rng);
            let g2_2 = moments::compute_stats(&xs2)?.g2;
            Ok(vec![a1, n1 as f64, g2_1, a2, n2 as f64, g2_2])
        }
        ExperimentKind::Skewness => {
            let n = cell.n.expect("skewness cell carries its size");
            let params = StableParams::standard(cell.param)?;
            let xs = sample_stable_with(&params, n, &mut rng);
            let g1 = moments::compute_stats(&xs)?.g1;
            Ok(vec![cell.param, n as f64, g1])
        }
    }
}

fn sample_family(
    family: FamilySpec,
    param: f64,
    n: usize,
    rng: &mut rand_chacha::ChaCha12Rng,
) -> Result<Vec<f64>> {
    match family {
        FamilySpec::Stable => {
            let p = StableParams::standard(param)?;
            Ok(sample_stable_with(&p, n, rng))
        }
        FamilySpec::StudentT => {
            let p = StudentTParams::new(param)?;
            Ok(sample_student_t_with(&p, n, rng))
        }
        FamilySpec::Gaussian => Ok(sample_gaussian_with(param, n, rng)),
    }
}

/// Sequential aggregation over the ordered rows.
fn summarize(
    config: &ExperimentConfig,
    cells: &[GridCell],
    rows: &[ReplicateRow],
) -> Result<ExperimentSummary> {
    let per_cell = |idx: usize| rows.iter().filter(move |r| r.grid_index == idx);
    let column =
        |idx: usize, col: usize| -> Vec<f64> { per_cell(idx).map(|r| r.values[col]).collect() };

    match config.kind {
        ExperimentKind::Scatter => {
            let us: Vec<f64> = rows.iter().map(|r| r.values[1]).collect();
            let vs: Vec<f64> = rows.iter().map(|r| r.values[1] * r.values[0]).collect();
            let ys: Vec<f64> = rows.iter().map(|r| r.values[2]).collect();
            let (coeff_n, coeff_n_alpha) = crate::linreg::fit_through_origin2(&us, &vs, &ys)?;
            Ok(ExperimentSummary::Scatter {
                coeff_n,
                coeff_n_alpha,
            })
        }
        ExperimentKind::GrowthSlopes => {
            let mut per_param = Vec::with_capacity(cells.len());
            for (idx, cell) in cells.iter().enumerate() {
                let mut sums = vec![CompensatedSum::new(); config.checkpoints.len()];
                let mut count = 0usize;
                for row in per_cell(idx) {
                    count += 1;
                    for (s, v) in sums.iter_mut().zip(&row.values[2..]) {
                        s.add(*v);
                    }
                }
                let mean_curve: Vec<(usize, f64)> = config
                    .checkpoints
                    .iter()
                    .zip(&sums)
                    .map(|(&k, s)| (k, s.value() / count as f64))
                    .collect();
                let curve = GrowthCurve::from_points(mean_curve.clone())?;
                let slope_fit = fit_growth_slope(&curve)?;
                let linearity = if curve.len() >= 5 {
                    Some(linearity_diagnostic(&curve)?)
                } else {
                    None
                };
                per_param.push(GrowthSlopesEntry {
                    param: cell.param,
                    mean_curve,
                    slope_fit,
                    linearity,
                });
            }
            Ok(ExperimentSummary::GrowthSlopes { per_param })
        }
        ExperimentKind::SlopeVsAlpha => {
            let mut per_alpha = Vec::with_capacity(cells.len());
            for (idx, cell) in cells.iter().enumerate() {
                per_alpha.push(SlopeVsAlphaEntry {
                    alpha: cell.param,
                    mean_slope: numeric::mean(&column(idx, 2)),
                });
            }
            let points: Vec<(f64, f64)> =
                per_alpha.iter().map(|e| (e.alpha, e.mean_slope)).collect();
            let coefficient = slope_vs_alpha_regression(&points)?;
            Ok(ExperimentSummary::SlopeVsAlpha {
                per_alpha,
                coefficient,
            })
        }
        ExperimentKind::VarianceCurve => {
            let n = match config.size {
                SizeSpec::Fixed(n) => n,
                _ => unreachable!("validated as fixed"),
            };
            let mut per_alpha = Vec::with_capacity(cells.len());
            for (idx, cell) in cells.iter().enumerate() {
                let var_b2 = numeric::sample_variance(&column(idx, 2));
                per_alpha.push(VarianceCurveEntry {
                    alpha: cell.param,
                    var_b2,
                    var_b2_over_n2: var_b2 / (n as f64 * n as f64),
                });
            }
            Ok(ExperimentSummary::VarianceCurve { n, per_alpha })
        }
        ExperimentKind::MeanRatio => {
            let mut per_alpha = Vec::with_capacity(cells.len());
            for (idx, cell) in cells.iter().enumerate() {
                per_alpha.push(MeanRatioEntry {
                    alpha: cell.param,
                    mean_g2_over_n: numeric::mean(&column(idx, 3)),
                    expected: 1.0 - cell.param / 2.0,
                });
            }
            Ok(ExperimentSummary::MeanRatio { per_alpha })
        }
        ExperimentKind::Ordering => {
            let (a1, a2) = (config.alphas[0], config.alphas[1]);
            // The heavier tail is the smaller alpha; ties keep the first.
            let heavy_first = a1 <= a2;
            let mut raw_hits = 0usize;
            let mut ratio_hits = 0usize;
            for row in rows {
                let (g_h, n_h, g_l, n_l) = if heavy_first {
                    (row.values[2], row.values[1], row.values[5], row.values[4])
                } else {
                    (row.values[5], row.values[4], row.values[2], row.values[1])
                };
                if g_h > g_l {
                    raw_hits += 1;
                }
                if g_h / n_h > g_l / n_l {
                    ratio_hits += 1;
                }
            }
            let m = rows.len() as f64;
            Ok(ExperimentSummary::Ordering {
                alphas: [a1, a2],
                fraction_raw: raw_hits as f64 / m,
                fraction_ratio: ratio_hits as f64 / m,
            })
        }
        ExperimentKind::Skewness => {
            let mut per_cell_entries = Vec::with_capacity(cells.len());
            for (idx, cell) in cells.iter().enumerate() {
                let g1s = column(idx, 2);
                let var_g1 = numeric::sample_variance(&g1s);
                per_cell_entries.push(SkewnessEntry {
                    alpha: cell.param,
                    n: cell.n.expect("skewness cell carries its size"),
                    mean_g1: numeric::mean(&g1s),
                    var_g1,
                    se_g1: (var_g1 / g1s.len() as f64).sqrt(),
                });
            }
            Ok(ExperimentSummary::Skewness {
                per_cell: per_cell_entries,
            })
        }
    }
}
