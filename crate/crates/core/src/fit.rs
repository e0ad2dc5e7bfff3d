//! Decay tables and log-log fits.

use crate::error::{Error, Result};

/// `(t, value)` samples of a quantity expected to decay in `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayTable {
    pub t: Vec<f64>,
    pub values: Vec<f64>,
}

/// Least-squares line `log y = intercept + slope · log t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogLogFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

impl DecayTable {
    pub fn new(t: Vec<f64>, values: Vec<f64>) -> Self {
        assert_eq!(t.len(), values.len());
        Self { t, values }
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn last(&self) -> Option<f64> {
        self.values.last().copied()
    }

    pub fn value_at(&self, t: f64) -> Option<f64> {
        self.t
            .iter()
            .position(|&s| (s - t).abs() <= 1e-12 * t.abs().max(1.0))
            .map(|i| self.values[i])
    }

    /// Each value at most the previous one, up to relative slack.
    pub fn is_nonincreasing(&self, slack: f64) -> bool {
        self.values
            .windows(2)
            .all(|w| w[1] <= w[0] * (1.0 + slack) + slack)
    }

    pub fn loglog_fit(&self) -> Result<LogLogFit> {
        loglog_fit(&self.t, &self.values)
    }
}

pub fn loglog_fit(t: &[f64], y: &[f64]) -> Result<LogLogFit> {
    if t.len() != y.len() || t.len() < 2 {
        return Err(Error::InvalidParameter("a log-log fit needs at least two samples".into()));
    }
    if t.iter().chain(y).any(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(Error::InvalidParameter("log-log fit of non-positive data".into()));
    }
    let xs: Vec<f64> = t.iter().map(|v| v.ln()).collect();
    let ys: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter("log-log fit with a single abscissa".into()));
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(LogLogFit {
        slope,
        intercept: my - slope * mx,
        r_squared,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_law_slope() {
        let t: Vec<f64> = (1..=10).map(|k| k as f64).collect();
        let y: Vec<f64> = t.iter().map(|s| 3.0 / s).collect();
        let f = loglog_fit(&t, &y).unwrap();
        assert!((f.slope + 1.0).abs() < 1e-12);
        assert!((f.intercept - 3f64.ln()).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
        assert!(DecayTable::new(t, y).is_nonincreasing(0.0));
    }

    #[test]
    fn rejects_degenerate_input() {
        assert!(loglog_fit(&[1.0], &[1.0]).is_err());
        assert!(loglog_fit(&[1.0, 2.0], &[1.0, 0.0]).is_err());
    }
}
