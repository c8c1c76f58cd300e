//! Per-cell statistics and log-log scaling fits.

use serde::{Deserialize, Serialize};

use crate::ea::RunRecord;
use crate::error::{invalid, Result};

/// z-value of a two-sided 95% normal interval.
pub const Z95: f64 = 1.96;

/// Statistics of one cell. Moments are over the uncensored runs only.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub experiment_id: String,
    pub cell_key: String,
    pub trials: u64,
    pub censored: u64,
    pub mean: Option<f64>,
    pub sd: Option<f64>,
    pub se: Option<f64>,
    pub ci_lo: Option<f64>,
    pub ci_hi: Option<f64>,
}

impl CellSummary {
    /// More than half the runs hit the budget: the mean says little.
    pub fn unusable(&self) -> bool {
        2 * self.censored > self.trials
    }
}

/// Mean, sample standard deviation, standard error and a 95% interval of
/// the evaluation counts, skipping censored runs.
pub fn summarize(experiment_id: &str, cell_key: &str, records: &[RunRecord]) -> CellSummary {
    let done: Vec<f64> = records
        .iter()
        .filter(|r| !r.hit_budget)
        .map(|r| r.evaluations as f64)
        .collect();
    let censored = (records.len() - done.len()) as u64;
    let (mean, sd, se) = match moments(&done) {
        Some((m, sd)) => (Some(m), Some(sd), Some(sd / (done.len() as f64).sqrt())),
        None => (None, None, None),
    };
    CellSummary {
        experiment_id: experiment_id.to_string(),
        cell_key: cell_key.to_string(),
        trials: records.len() as u64,
        censored,
        mean,
        sd,
        se,
        ci_lo: mean.zip(se).map(|(m, s)| m - Z95 * s),
        ci_hi: mean.zip(se).map(|(m, s)| m + Z95 * s),
    }
}

/// Mean and sample standard deviation (0 for a single value).
pub fn moments(xs: &[f64]) -> Option<(f64, f64)> {
    if xs.is_empty() {
        return None;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() == 1 {
        return Some((mean, 0.0));
    }
    let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
    Some((mean, (ss / (n - 1.0)).sqrt()))
}

/// Least-squares line through `(ln n, ln T)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    /// Slope: the fitted exponent.
    pub alpha: f64,
    pub stderr: f64,
    pub intercept: f64,
}

pub fn fit_scaling(points: &[(f64, f64)]) -> Result<ScalingFit> {
    if points.len() < 3 {
        return Err(invalid("points", format!("need at least 3, got {}", points.len())));
    }
    if let Some(&(n, t)) = points.iter().find(|(n, t)| !(*n > 0.0 && *t > 0.0)) {
        return Err(invalid("points", format!("({n}, {t}) is not positive")));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx <= 1e-12 * (1.0 + mx * mx) {
        return Err(invalid("points", "all lengths are identical"));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let alpha = sxy / sxx;
    let intercept = my - alpha * mx;
    let rss: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let r = y - intercept - alpha * x;
            r * r
        })
        .sum();
    let stderr = (rss / (k - 2.0) / sxx).sqrt();
    Ok(ScalingFit {
        alpha,
        stderr,
        intercept,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(evaluations: u64, hit_budget: bool) -> RunRecord {
        RunRecord {
            evaluations,
            hit_budget,
            seed: 0,
            realized_length: 1,
        }
    }

    #[test]
    fn single_trial_summary() {
        let s = summarize("e", "n=1", &[rec(17, false)]);
        assert_eq!(s.mean, Some(17.0));
        assert_eq!(s.sd, Some(0.0));
        assert_eq!(s.ci_lo, Some(17.0));
        assert_eq!(s.ci_hi, Some(17.0));
        assert_eq!(s.censored, 0);
    }

    #[test]
    fn interval_is_z_times_se() {
        let rs: Vec<_> = [2, 4, 4, 4, 5, 5, 7, 9].iter().map(|&e| rec(e, false)).collect();
        let s = summarize("e", "c", &rs);
        assert_eq!(s.mean, Some(5.0));
        let sd = (32.0f64 / 7.0).sqrt();
        assert!((s.sd.unwrap() - sd).abs() < 1e-12);
        assert!((s.ci_hi.unwrap() - s.mean.unwrap() - Z95 * sd / 8f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn censored_runs_are_counted_not_averaged() {
        let s = summarize("e", "c", &[rec(10, true), rec(10, true), rec(4, false)]);
        assert_eq!(s.censored, 2);
        assert_eq!(s.mean, Some(4.0));
        assert!(s.unusable());
        let all = summarize("e", "c", &[rec(10, true)]);
        assert_eq!(all.mean, None);
    }

    #[test]
    fn exact_power_law() {
        let pts: Vec<_> = [4.0, 8.0, 16.0, 32.0].iter().map(|&n: &f64| (n, 7.0 * n * n)).collect();
        let f = fit_scaling(&pts).unwrap();
        assert!((f.alpha - 2.0).abs() < 1e-9);
        assert!(f.stderr < 1e-9);
    }

    #[test]
    fn n_log_n_window() {
        let pts: Vec<_> = (6..=12).map(|k| (1u64 << k) as f64).map(|n| (n, n * n.ln())).collect();
        let f = fit_scaling(&pts).unwrap();
        assert!((1.05..=1.25).contains(&f.alpha), "{}", f.alpha);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(fit_scaling(&[(4.0, 1.0), (4.0, 2.0), (4.0, 3.0)]).is_err());
        assert!(fit_scaling(&[(4.0, 1.0), (8.0, 2.0)]).is_err());
        assert!(fit_scaling(&[(4.0, 1.0), (8.0, 0.0), (16.0, 3.0)]).is_err());
    }
}
