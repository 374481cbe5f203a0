//! Cross-trial curves.

use serde::{Deserialize, Serialize};

use super::metrics::{geometric_stats, ErrorNorm, GeometricStats};
use super::record::RecordRow;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    ErrorL2,
    ErrorLinf,
    Cond,
    Kappa,
}

impl Metric {
    pub fn of(self, r: &RecordRow) -> f64 {
        match self {
            Metric::ErrorL2 => r.error_l2,
            Metric::ErrorLinf => r.error_linf,
            Metric::Cond => r.cond,
            Metric::Kappa => r.kappa,
        }
    }

    pub fn error(norm: ErrorNorm) -> Self {
        match norm {
            ErrorNorm::L2 => Metric::ErrorL2,
            ErrorNorm::Linf => Metric::ErrorLinf,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub m: usize,
    /// Trials with a row at or below `m`.
    pub trials: usize,
    pub stats: GeometricStats,
}

/// The distinct sample counts in `rows`, ascending.
pub fn sample_counts(rows: &[RecordRow]) -> Vec<usize> {
    let mut ms: Vec<usize> = rows.iter().map(|r| r.m).collect();
    ms.sort_unstable();
    ms.dedup();
    ms
}

/// Geometric statistics across trials at each `m` in `at`.
///
/// Each trial is read as a step function of `m`: its value at `m` is the
/// metric of its last row with `rows.m <= m`. Trials with no such row are
/// left out, and points with no contributing trial are skipped. Rows must be
/// sorted by `(trial, step)` with `m` nondecreasing within a trial.
pub fn curve(rows: &[RecordRow], metric: Metric, at: &[usize]) -> Vec<CurvePoint> {
    let mut trials: Vec<Vec<&RecordRow>> = Vec::new();
    for r in rows {
        match trials.last_mut() {
            Some(t) if t[0].trial == r.trial => t.push(r),
            _ => trials.push(vec![r]),
        }
    }
    at.iter()
        .filter_map(|&m| {
            let values: Vec<f64> = trials
                .iter()
                .filter_map(|t| t.iter().take_while(|r| r.m <= m).last().map(|r| metric.of(r)))
                .collect();
            (!values.is_empty()).then(|| CurvePoint {
                m,
                trials: values.len(),
                stats: geometric_stats(&values),
            })
        })
        .collect()
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    let logs: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0 && x.is_finite() && y.is_finite())
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if logs.len() < 2 {
        return None;
    }
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(trial: usize, step: usize, m: usize, err: f64) -> RecordRow {
        RecordRow {
            trial,
            step,
            m,
            n: step + 1,
            error_l2: err,
            error_linf: 2.0 * err,
            cond: 1.0,
            kappa: (step + 1) as f64,
            wall_time_ms: 0.0,
        }
    }

    #[test]
    fn step_alignment() {
        let rows = vec![
            row(0, 0, 10, 1.0),
            row(0, 1, 20, 0.1),
            row(0, 2, 40, 0.01),
            row(1, 0, 15, 1e-1),
            row(1, 1, 30, 1e-3),
        ];
        let c = curve(&rows, Metric::ErrorL2, &[5, 10, 15, 35, 100]);
        let ms: Vec<usize> = c.iter().map(|p| p.m).collect();
        assert_eq!(ms, vec![10, 15, 35, 100]);
        assert_eq!(c[0].trials, 1);
        assert_eq!(c[0].stats.mean, 1.0);
        assert_eq!(c[1].trials, 2);
        assert!((c[1].stats.mean - (1.0f64 * 0.1).sqrt()).abs() < 1e-15);
        assert!((c[2].stats.mean - (0.1f64 * 1e-3).sqrt()).abs() < 1e-15);
        assert!((c[3].stats.mean - (0.01f64 * 1e-3).sqrt()).abs() < 1e-15);
        let linf = curve(&rows, Metric::ErrorLinf, &[100]);
        assert!((linf[0].stats.mean / c[3].stats.mean - 2.0).abs() < 1e-12);
        assert_eq!(sample_counts(&rows), vec![10, 15, 20, 30, 40]);
    }

    #[test]
    fn slope_of_power_law() {
        let pts: Vec<(f64, f64)> = (1..20).map(|k| (k as f64 * 10.0, 3.0 * (k as f64 * 10.0).powf(-1.5))).collect();
        assert!((loglog_slope(&pts).unwrap() + 1.5).abs() < 1e-12);
        assert_eq!(loglog_slope(&pts[..1]), None);
        assert_eq!(loglog_slope(&[(2.0, 1.0), (2.0, 3.0)]), None);
    }
}
