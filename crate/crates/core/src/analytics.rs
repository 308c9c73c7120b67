//! Convergence metrics over cycle logs.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::cycle::log::CycleLogRecord;
use crate::entity::CurationDepth;
use crate::kb::KnowledgeBase;

pub const DEFAULT_WINDOW: usize = 3;
pub const DEFAULT_THRESHOLD: u32 = 1;
pub const DEFAULT_PROMOTION_THRESHOLD: usize = 3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalyticsError {
    #[error("no cycle logs to analyse")]
    EmptyInput,
    #[error("cycle {0} appears more than once")]
    DuplicateCycle(String),
    #[error("cycle index {index} is outside 1..={len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("a power-law fit needs two cycles with new entities, found {0}")]
    InsufficientPoints(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CyclePoint {
    pub new: u32,
    pub updated: u32,
    pub reused: u32,
    pub minutes: u32,
}

/// Per-cycle counts, indexed 1..=N in cycle order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CycleSeries {
    pub points: Vec<CyclePoint>,
}

impl CycleSeries {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// The point for 1-based cycle index `n`.
    pub fn get(&self, n: usize) -> Result<&CyclePoint, AnalyticsError> {
        n.checked_sub(1)
            .and_then(|i| self.points.get(i))
            .ok_or(AnalyticsError::IndexOutOfRange { index: n, len: self.len() })
    }

    pub fn new_counts(&self) -> Vec<u32> {
        self.points.iter().map(|p| p.new).collect()
    }

    pub fn total_new(&self) -> u64 {
        self.points.iter().map(|p| p.new as u64).sum()
    }

    pub fn total_minutes(&self) -> u64 {
        self.points.iter().map(|p| p.minutes as u64).sum()
    }
}

fn cycle_order(id: &str) -> (u64, String) {
    (id.parse().unwrap_or(u64::MAX), id.to_string())
}

pub fn compute_series(logs: &[CycleLogRecord]) -> Result<CycleSeries, AnalyticsError> {
    if logs.is_empty() {
        return Err(AnalyticsError::EmptyInput);
    }
    let mut seen = BTreeSet::new();
    for log in logs {
        if !seen.insert(cycle_order(&log.cycle_id)) {
            return Err(AnalyticsError::DuplicateCycle(log.cycle_id.clone()));
        }
    }
    let mut ordered: Vec<&CycleLogRecord> = logs.iter().collect();
    ordered.sort_by_key(|l| cycle_order(&l.cycle_id));
    Ok(CycleSeries {
        points: ordered
            .into_iter()
            .map(|l| CyclePoint {
                new: l.entities_created,
                updated: l.entities_updated,
                reused: l.entities_reused.len() as u32,
                minutes: l.time_spent_minutes,
            })
            .collect(),
    })
}

/// `r_n / (e_n + r_n)`, or `None` when both are zero.
pub fn reuse_ratio(series: &CycleSeries, n: usize) -> Result<Option<f64>, AnalyticsError> {
    let p = series.get(n)?;
    let total = p.new + p.reused;
    Ok((total > 0).then(|| p.reused as f64 / total as f64))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLawFit {
    pub alpha: f64,
    pub log_intercept: f64,
    pub r_squared: f64,
    pub points_used: usize,
}

/// Least squares on `(ln n, ln e_n)`; cycles with no new entities are left
/// out because `ln 0` is undefined.
pub fn fit_power_law(series: &CycleSeries) -> Result<PowerLawFit, AnalyticsError> {
    let values: Vec<f64> = series.points.iter().map(|p| p.new as f64).collect();
    fit_power_law_values(&values)
}

/// Same fit over real values `values[n-1] = e_n`. Non-positive values are
/// skipped.
pub fn fit_power_law_values(values: &[f64]) -> Result<PowerLawFit, AnalyticsError> {
    let points: Vec<(f64, f64)> = values
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > 0.0 && v.is_finite())
        .map(|(i, &v)| (((i + 1) as f64).ln(), v.ln()))
        .collect();
    let k = points.len();
    if k < 2 {
        return Err(AnalyticsError::InsufficientPoints(k));
    }
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / k as f64;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / k as f64;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for &(x, y) in &points {
        sxx += (x - mean_x) * (x - mean_x);
        sxy += (x - mean_x) * (y - mean_y);
        syy += (y - mean_y) * (y - mean_y);
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0)
    };
    Ok(PowerLawFit {
        alpha: -slope,
        log_intercept: mean_y - slope * mean_x,
        r_squared,
        points_used: k,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Convergence {
    pub converged: bool,
    /// 1-based cycle index at which the trailing run first filled a window.
    pub cycle: Option<usize>,
}

/// Converged when the last `window` or more cycles all have
/// `e_n <= threshold`; the reported cycle is where that trailing run first
/// spans a full window.
pub fn detect_convergence(series: &CycleSeries, window: usize, threshold: u32) -> Result<Convergence, AnalyticsError> {
    if window == 0 {
        return Err(AnalyticsError::InvalidParameter("window must be at least 1".into()));
    }
    let run = series.points.iter().rev().take_while(|p| p.new <= threshold).count();
    if run >= window {
        let start = series.len() - run + 1;
        Ok(Convergence {
            converged: true,
            cycle: Some(start + window - 1),
        })
    } else {
        Ok(Convergence {
            converged: false,
            cycle: None,
        })
    }
}

/// Entity count per type; types with no entities are absent.
pub fn entity_breakdown(kb: &KnowledgeBase) -> BTreeMap<String, usize> {
    let mut counts = BTreeMap::new();
    for e in kb.entities() {
        *counts.entry(e.entity_type.clone()).or_insert(0) += 1;
    }
    counts
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromotionCandidate {
    pub entity_id: String,
    pub reference_count: usize,
}

/// Stub entities reused in at least `threshold` distinct cycles, most
/// referenced first.
pub fn promotion_candidates(kb: &KnowledgeBase, logs: &[CycleLogRecord], threshold: usize) -> Vec<PromotionCandidate> {
    let mut cycles: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for log in logs {
        for id in &log.entities_reused {
            cycles.entry(id.as_str()).or_default().insert(log.cycle_id.as_str());
        }
    }
    let mut out: Vec<PromotionCandidate> = cycles
        .into_iter()
        .filter(|(id, seen)| {
            seen.len() >= threshold
                && kb.get(id).is_some_and(|e| e.curation_depth() == CurationDepth::Stub)
        })
        .map(|(id, seen)| PromotionCandidate {
            entity_id: id.to_string(),
            reference_count: seen.len(),
        })
        .collect();
    out.sort_by(|a, b| b.reference_count.cmp(&a.reference_count).then_with(|| a.entity_id.cmp(&b.entity_id)));
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub series: CycleSeries,
    pub reuse_ratios: Vec<Option<f64>>,
    pub fit: Option<PowerLawFit>,
    pub convergence: Convergence,
    pub window: usize,
    pub threshold: u32,
    pub total_entities: u64,
    pub total_minutes: u64,
    pub breakdown: BTreeMap<String, usize>,
}

impl ConvergenceReport {
    pub fn new(series: CycleSeries, window: usize, threshold: u32) -> Result<Self, AnalyticsError> {
        let reuse_ratios = (1..=series.len())
            .map(|n| reuse_ratio(&series, n))
            .collect::<Result<_, _>>()?;
        let fit = match fit_power_law(&series) {
            Ok(fit) => Some(fit),
            Err(AnalyticsError::InsufficientPoints(_)) => None,
            Err(e) => return Err(e),
        };
        let convergence = detect_convergence(&series, window, threshold)?;
        Ok(ConvergenceReport {
            total_entities: series.total_new(),
            total_minutes: series.total_minutes(),
            series,
            reuse_ratios,
            fit,
            convergence,
            window,
            threshold,
            breakdown: BTreeMap::new(),
        })
    }

    pub fn with_breakdown(mut self, kb: &KnowledgeBase) -> Self {
        self.breakdown = entity_breakdown(kb);
        self
    }

    /// Whether every defined ratio is at least the previous defined one.
    pub fn reuse_monotonic(&self) -> bool {
        let defined: Vec<f64> = self.reuse_ratios.iter().flatten().copied().collect();
        defined.windows(2).all(|w| w[1] >= w[0])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Table,
    Delimited,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "table" => Ok(ReportFormat::Table),
            "delimited" | "csv" => Ok(ReportFormat::Delimited),
            other => Err(format!("format must be table or delimited, got {other:?}")),
        }
    }
}

/// Four decimals at most, trailing zeros dropped, at least one decimal kept:
/// `0.0`, `0.75`, `0.4286`.
pub fn format_ratio(r: f64) -> String {
    let fixed = format!("{r:.4}");
    let trimmed = fixed.trim_end_matches('0');
    if trimmed.ends_with('.') {
        format!("{trimmed}0")
    } else {
        trimmed.to_string()
    }
}

pub const DELIMITED_HEADER: &str = "cycle,new,updated,reused,ratio,minutes";

pub fn render_report(report: &ConvergenceReport, format: ReportFormat) -> String {
    let mut out = String::new();
    let ratio = |i: usize| report.reuse_ratios[i].map(format_ratio).unwrap_or_default();
    match format {
        ReportFormat::Delimited => {
            out.push_str(DELIMITED_HEADER);
            out.push('\n');
            for (i, p) in report.series.points.iter().enumerate() {
                let _ = writeln!(out, "{},{},{},{},{},{}", i + 1, p.new, p.updated, p.reused, ratio(i), p.minutes);
            }
        }
        ReportFormat::Table => {
            let _ = writeln!(out, "{:>5}  {:>4}  {:>7}  {:>6}  {:>6}  {:>7}", "cycle", "new", "updated", "reused", "ratio", "minutes");
            for (i, p) in report.series.points.iter().enumerate() {
                let r = report.reuse_ratios[i].map(format_ratio).unwrap_or_else(|| "-".into());
                let _ = writeln!(
                    out,
                    "{:>5}  {:>4}  {:>7}  {:>6}  {:>6}  {:>7}",
                    i + 1,
                    p.new,
                    p.updated,
                    p.reused,
                    r,
                    p.minutes
                );
            }
            out.push('\n');
        }
    }

    let _ = writeln!(out, "cycles={}", report.series.len());
    let _ = writeln!(out, "total_entities={}", report.total_entities);
    let _ = writeln!(out, "total_minutes={}", report.total_minutes);
    match &report.fit {
        Some(fit) => {
            let _ = writeln!(out, "alpha={:.6}", fit.alpha);
            let _ = writeln!(out, "log_intercept={:.6}", fit.log_intercept);
            let _ = writeln!(out, "r_squared={:.6}", fit.r_squared);
            let _ = writeln!(out, "fit_points={}", fit.points_used);
        }
        None => {
            out.push_str("alpha=\nlog_intercept=\nr_squared=\nfit_points=0\n");
        }
    }
    out.push_str("fit_note=cycles with zero new entities are excluded from the fit\n");
    let _ = writeln!(out, "reuse_monotonic={}", report.reuse_monotonic());
    let _ = writeln!(out, "converged={}", report.convergence.converged);
    let _ = writeln!(
        out,
        "convergence_cycle={}",
        report.convergence.cycle.map(|c| c.to_string()).unwrap_or_default()
    );
    let _ = writeln!(out, "window={}", report.window);
    let _ = writeln!(out, "threshold={}", report.threshold);
    let mut types: Vec<(&String, &usize)> = report.breakdown.iter().collect();
    types.sort_by(|a, b| b.1.cmp(a.1).then_with(|| a.0.cmp(b.0)));
    for (ty, count) in types {
        let _ = writeln!(out, "entities.{ty}={count}");
    }
    out
}

/// A decaying series for exercising the fit and the detector:
/// `e_n = round(scale * n^-alpha + u)` with `u` uniform in `[-0.5, 0.5)`,
/// so each value is within one of the noiseless rounding. Reuse grows as
/// `round(scale * (1 - n^-alpha))`, capped by the entities created so far.
pub fn synthetic_series(n_cycles: usize, alpha: f64, scale: f64, seed: u64) -> Result<CycleSeries, AnalyticsError> {
    if n_cycles == 0 {
        return Err(AnalyticsError::InvalidParameter("n_cycles must be at least 1".into()));
    }
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(AnalyticsError::InvalidParameter(format!("alpha must be positive, got {alpha}")));
    }
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(AnalyticsError::InvalidParameter(format!("scale must be positive, got {scale}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut created = 0u64;
    let mut points = Vec::with_capacity(n_cycles);
    for n in 1..=n_cycles {
        let decay = (n as f64).powf(-alpha);
        let jitter: f64 = rng.gen_range(-0.5..0.5);
        let new = (scale * decay + jitter).round().max(0.0) as u32;
        let reused = ((scale * (1.0 - decay)).round() as u64).min(created) as u32;
        points.push(CyclePoint {
            new,
            updated: 0,
            reused,
            minutes: 0,
        });
        created += new as u64;
    }
    Ok(CycleSeries { points })
}
