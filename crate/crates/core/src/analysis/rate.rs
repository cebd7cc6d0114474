//! Least-squares power-law fits `log e_m ≈ intercept + slope · log(m+1)`.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root mean square of the log-residuals.
    pub residual: f64,
    pub points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RateOutcome {
    Fitted(RateFit),
    /// A zero value at `m` inside the range: no power law to fit.
    ConvergedExactly { m: usize },
}

/// The upper decade `[M/10, M]`.
pub fn default_range(steps: usize) -> (usize, usize) {
    (steps / 10, steps)
}

/// Fits `values[m]` for `m` in the inclusive `range`.
pub fn fit_rate(values: &[f64], range: (usize, usize)) -> Result<RateOutcome> {
    let (lo, hi) = range;
    if lo > hi || values.is_empty() {
        return Err(Error::RateFit(format!("empty range [{lo}, {hi}]")));
    }
    let hi = hi.min(values.len() - 1);
    if hi < lo || hi - lo + 1 < 3 {
        return Err(Error::RateFit(format!("need at least 3 points in [{lo}, {hi}]")));
    }
    if let Some(m) = (lo..=hi).find(|&m| values[m] == 0.0) {
        return Ok(RateOutcome::ConvergedExactly { m });
    }
    if let Some(m) = (lo..=hi).find(|&m| !(values[m] > 0.0 && values[m].is_finite())) {
        return Err(Error::RateFit(format!("value at m = {m} is not a positive number: {}", values[m])));
    }
    let xs: Vec<f64> = (lo..=hi).map(|m| (m as f64 + 1.0).ln()).collect();
    let ys: Vec<f64> = (lo..=hi).map(|m| values[m].ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(RateOutcome::Fitted(RateFit { slope, intercept, residual, points: xs.len() }))
}
