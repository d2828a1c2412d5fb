//! Report rows, JSON-lines and CSV encodings, and summaries.

use dynmatch::estimator::{EstimatorConfig, Mode, TradeoffParams};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const FORMAT: &str = "dynmatch-report/1";

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("malformed report at line {line}: {msg}")]
    MalformedReport { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportMeta {
    pub format: String,
    pub n: usize,
    pub left: Option<usize>,
    pub updates: u64,
    pub oracle_every: u64,
    pub config: EstimatorConfig,
    /// μ/ν bound the mode is checked against.
    pub ratio_bound: f64,
    pub tradeoff: Option<TradeoffParams>,
    pub deviations: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub update: u64,
    pub nu: f64,
    pub mu_exact: Option<usize>,
    pub ratio: Option<f64>,
    /// Cumulative probes and elementary operations of the estimator.
    pub probes: u64,
    pub backlog: u64,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub meta: ReportMeta,
    pub rows: Vec<Row>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum Line {
    Meta(ReportMeta),
    Row(Row),
}

/// Default μ/ν bound per mode.
pub fn ratio_bound(cfg: &EstimatorConfig) -> f64 {
    match cfg.mode {
        Mode::Bipartite => 1.0 + std::f64::consts::FRAC_1_SQRT_2 + cfg.eps,
        Mode::General => 1.0 / (0.5 + 1.0 / 144.0) + cfg.eps,
        Mode::Tradeoff => {
            TradeoffParams::new(cfg.alpha)
                .map(|p| p.beta)
                .unwrap_or(2.0)
                + cfg.eps
        }
    }
}

/// Deviations from the reference algorithms that every run carries.
pub fn standard_deviations() -> Vec<String> {
    [
        "fractional provider recomputed per rebuild (amortized, not worst-case, update time)",
        "exact maximum-weight matching on kernels",
        "queries on the copy graph answered by an exact maximal b-matching when the small-instance rule holds",
        "small-matching branch keeps a locally repaired maximal matching",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect()
}

impl Report {
    pub fn to_jsonl(&self) -> String {
        let mut out = serde_json::to_string(&Line::Meta(self.meta.clone())).unwrap();
        out.push('\n');
        for r in &self.rows {
            out.push_str(&serde_json::to_string(&Line::Row(r.clone())).unwrap());
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Self, ReportError> {
        let mut meta = None;
        let mut rows = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let parsed: Line =
                serde_json::from_str(line).map_err(|e| ReportError::MalformedReport {
                    line: i + 1,
                    msg: e.to_string(),
                })?;
            match parsed {
                Line::Meta(m) if meta.is_none() => meta = Some(m),
                Line::Meta(_) => {
                    return Err(ReportError::MalformedReport {
                        line: i + 1,
                        msg: "second metadata line".into(),
                    })
                }
                Line::Row(r) => {
                    if rows.last().is_some_and(|p: &Row| p.update > r.update) {
                        return Err(ReportError::MalformedReport {
                            line: i + 1,
                            msg: "rows not monotone".into(),
                        });
                    }
                    rows.push(r)
                }
            }
        }
        let meta = meta.ok_or(ReportError::MalformedReport {
            line: 0,
            msg: "missing metadata".into(),
        })?;
        Ok(Self { meta, rows })
    }

    /// CSV projection: update, nu, mu_exact, ratio, probes, backlog, error.
    pub fn to_csv(&self) -> Result<String, ReportError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "update", "nu", "mu_exact", "ratio", "probes", "backlog", "error",
        ])?;
        for r in &self.rows {
            w.write_record([
                r.update.to_string(),
                r.nu.to_string(),
                r.mu_exact.map(|m| m.to_string()).unwrap_or_default(),
                r.ratio.map(|x| x.to_string()).unwrap_or_default(),
                r.probes.to_string(),
                r.backlog.to_string(),
                r.error.clone().unwrap_or_default(),
            ])?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| ReportError::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

/// Pass/fail thresholds for `summarize`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Criteria {
    pub max_ratio: Option<f64>,
    /// Fraction of checked rows that must satisfy the ratio bound.
    #[serde(default = "default_quantile")]
    pub quantile: f64,
    /// Require ν ≤ μ on every checked row.
    #[serde(default = "default_true")]
    pub require_lower: bool,
}

fn default_quantile() -> f64 {
    0.99
}
fn default_true() -> bool {
    true
}

impl Criteria {
    pub fn from_meta(meta: &ReportMeta) -> Self {
        Self {
            max_ratio: Some(meta.ratio_bound),
            quantile: 0.99,
            require_lower: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub rows: usize,
    pub checked: usize,
    pub errors: usize,
    pub ratio_p50: Option<f64>,
    pub ratio_p90: Option<f64>,
    pub ratio_p99: Option<f64>,
    pub ratio_max: Option<f64>,
    pub ratio_mean: Option<f64>,
    pub within_bound: Option<f64>,
    pub lower_violations: usize,
    pub max_ops_per_update: f64,
    pub mean_ops_per_update: f64,
    pub pass: bool,
}

fn quantile(sorted: &[f64], q: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let idx = ((sorted.len() as f64 * q).ceil() as usize).clamp(1, sorted.len()) - 1;
    Some(sorted[idx])
}

/// Rows where ν exceeds μ or μ is positive while ν is zero count as failures
/// of the respective checks.
pub fn summarize(report: &Report, criteria: &Criteria) -> Summary {
    let checked: Vec<&Row> = report
        .rows
        .iter()
        .filter(|r| r.mu_exact.is_some())
        .collect();
    let errors = report.rows.iter().filter(|r| r.error.is_some()).count();
    let lower_violations = checked
        .iter()
        .filter(|r| r.nu > r.mu_exact.unwrap() as f64 + 1e-9)
        .count();
    let ratios: Vec<f64> = checked
        .iter()
        .map(|r| r.ratio.unwrap_or(f64::INFINITY))
        .collect();
    let mut sorted = ratios.clone();
    sorted.sort_by(f64::total_cmp);
    let finite: Vec<f64> = ratios.iter().copied().filter(|r| r.is_finite()).collect();
    let within = criteria
        .max_ratio
        .filter(|_| !ratios.is_empty())
        .map(|b| ratios.iter().filter(|&&r| r <= b).count() as f64 / ratios.len() as f64);

    let mut max_ops: f64 = 0.0;
    let mut prev = (0u64, 0u64);
    for r in &report.rows {
        if r.update > prev.0 {
            max_ops =
                max_ops.max((r.probes - prev.1.min(r.probes)) as f64 / (r.update - prev.0) as f64);
            prev = (r.update, r.probes);
        }
    }
    let mean_ops = report.rows.last().map_or(0.0, |r| {
        if r.update > 0 {
            r.probes as f64 / r.update as f64
        } else {
            0.0
        }
    });

    let ratio_ok = within.map_or(true, |w| w + 1e-12 >= criteria.quantile);
    let lower_ok = !criteria.require_lower || lower_violations == 0;
    Summary {
        rows: report.rows.len(),
        checked: checked.len(),
        errors,
        ratio_p50: quantile(&sorted, 0.5),
        ratio_p90: quantile(&sorted, 0.9),
        ratio_p99: quantile(&sorted, 0.99),
        ratio_max: sorted.last().copied(),
        ratio_mean: (!finite.is_empty()).then(|| finite.iter().sum::<f64>() / finite.len() as f64),
        within_bound: within,
        lower_violations,
        max_ops_per_update: max_ops,
        mean_ops_per_update: mean_ops,
        pass: ratio_ok && lower_ok && errors == 0,
    }
}
