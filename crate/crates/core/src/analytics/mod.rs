//! Statistics over simulation traces: return series, geometric means and
//! their closed-form prediction, autocorrelation, distribution shape
//! diagnostics, volume, the strategy payoff matrix, parameter sweeps, and
//! ingestion of external price series.
//!
//! All functions are pure; sweep cells run in parallel with order-independent
//! aggregation.

mod ingest;
mod payoff;
mod sweep;

pub use ingest::{
    ingest_price_series, parse_price_series, IngestResult, PriceRow, WindowStats,
    SEMI_ANNUAL_WINDOW,
};
pub use payoff::{payoff_matrix, PayoffMatrix};
pub use sweep::{
    classify_and_correlate, sample_sweep_grid, sweep_correlations, SignClass, SweepCell,
    SweepResult,
};

use serde::Serialize;
use thiserror::Error;

use crate::config::ModelConfig;
use crate::engine::SimulationTrace;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyticsError {
    #[error("trace has no records")]
    EmptyTrace,
    #[error("return series is empty")]
    EmptySeries,
    #[error("gross returns must be strictly positive, got {value} at index {index}")]
    NonPositiveReturn { index: usize, value: f64 },
    #[error("series of length {len} is too short, need at least {required}")]
    SeriesTooShort { len: usize, required: usize },
    #[error("{name} must be non-negative, got {value}")]
    NegativeInput { name: &'static str, value: f64 },
    #[error("price rows must be sorted by date: row {row} is out of order")]
    UnsortedDates { row: usize },
    #[error("prices must be strictly positive: row {row} has {value}")]
    NonPositivePrice { row: usize, value: f64 },
    #[error("malformed price row {row}: {message}")]
    MalformedRow { row: usize, message: String },
    #[error("sweep grid is empty")]
    EmptyGrid,
}

/// Ordered gross returns of a run, one per period, with the annualization
/// base.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReturnSeries {
    returns: Vec<f64>,
    periods_per_year: u32,
}

impl ReturnSeries {
    pub fn new(returns: Vec<f64>, periods_per_year: u32) -> Result<Self, AnalyticsError> {
        for (index, &value) in returns.iter().enumerate() {
            if !(value > 0.0 && value.is_finite()) {
                return Err(AnalyticsError::NonPositiveReturn { index, value });
            }
        }
        Ok(Self {
            returns,
            periods_per_year: periods_per_year.max(1),
        })
    }

    pub fn returns(&self) -> &[f64] {
        &self.returns
    }

    pub fn periods_per_year(&self) -> u32 {
        self.periods_per_year
    }

    pub fn len(&self) -> usize {
        self.returns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.returns.is_empty()
    }

    /// Log returns after the burn-in cutoff.
    pub fn stationary_log_returns(&self) -> Vec<f64> {
        let cut = burn_in_cutoff(self);
        self.returns[cut..].iter().map(|r| r.ln()).collect()
    }
}

/// Per-period gross returns of a trace, in period order.
pub fn gross_returns(trace: &SimulationTrace) -> Result<ReturnSeries, AnalyticsError> {
    if trace.records.is_empty() {
        return Err(AnalyticsError::EmptyTrace);
    }
    ReturnSeries::new(
        trace.records.iter().map(|r| r.gross_return).collect(),
        trace.config.periods_per_year,
    )
}

/// Per-period traded dollar volume of a trace.
pub fn dollar_volume_series(trace: &SimulationTrace) -> Vec<f64> {
    trace.records.iter().map(|r| r.dollar_volume).collect()
}

/// First index after which the one-year rolling geometric mean is stable:
/// every later pair of consecutive year-long windows agrees within 1%
/// relative. Capped at 20% of the series; series shorter than two windows
/// get cutoff 0.
pub fn burn_in_cutoff(series: &ReturnSeries) -> usize {
    let window = series.periods_per_year as usize;
    let len = series.len();
    if len < 2 * window {
        return 0;
    }
    let cap = len / 5;

    // Prefix sums of log returns make any window's geometric mean O(1).
    let mut prefix = Vec::with_capacity(len + 1);
    prefix.push(0.0);
    for r in &series.returns {
        prefix.push(prefix.last().unwrap() + r.ln());
    }
    let window_log_mean = |start: usize| (prefix[start + window] - prefix[start]) / window as f64;

    'candidate: for cut in 0..=cap {
        let mut start = cut;
        while start + 2 * window <= len {
            let a = window_log_mean(start);
            let b = window_log_mean(start + window);
            if ((b - a).exp() - 1.0).abs() > 0.01 {
                continue 'candidate;
            }
            start += window;
        }
        return cut;
    }
    cap
}

/// Geometric mean of a raw slice of gross returns, no burn-in.
pub fn geometric_mean(returns: &[f64]) -> f64 {
    let sum: f64 = returns.iter().map(|r| r.ln()).sum();
    (sum / returns.len() as f64).exp()
}

/// Geometric mean gross return after the burn-in cutoff, per period or
/// raised to the number of periods per year.
pub fn geometric_mean_return(
    series: &ReturnSeries,
    annualize: bool,
) -> Result<f64, AnalyticsError> {
    let cut = burn_in_cutoff(series);
    let post = &series.returns[cut..];
    if post.is_empty() {
        return Err(AnalyticsError::EmptySeries);
    }
    let per_period = geometric_mean(post);
    Ok(if annualize {
        per_period.powi(series.periods_per_year as i32)
    } else {
        per_period
    })
}

/// Closed-form annual mean gross return: `r * (alpha*beta)^(m*tau/(2N))`,
/// with `m` the fixed active count or the mean of the uniform policy.
pub fn predicted_mean_return(config: &ModelConfig) -> f64 {
    config.bond_rate * predicted_risk_growth(config)
}

/// Closed-form annual growth factor of the population mean target ratio:
/// `(alpha*beta)^(m*tau/(2N))`. Same expression as the excess-return law,
/// kept separate because it is compared against measured ratio growth.
pub fn predicted_risk_growth(config: &ModelConfig) -> f64 {
    risk_growth_rate(
        config.feedback.alpha,
        config.feedback.beta,
        config.active_policy.mean_active(),
        f64::from(config.periods_per_year),
        config.n_agents as f64,
    )
}

/// The growth law for explicit parameters.
pub fn risk_growth_rate(
    alpha: f64,
    beta: f64,
    mean_active: f64,
    periods_per_year: f64,
    n_agents: f64,
) -> f64 {
    (alpha * beta).powf(mean_active * periods_per_year / (2.0 * n_agents))
}

/// Sample autocorrelation of the post-burn-in gross returns at lags
/// `0..=max_lag`; index 0 is 1 by construction.
///
/// The lag-l covariance is normalized by `n - l` and the variance by `n`,
/// so a strictly alternating series scores exactly -1 at lag 1.
pub fn autocorrelation(series: &ReturnSeries, max_lag: usize) -> Result<Vec<f64>, AnalyticsError> {
    let cut = burn_in_cutoff(series);
    let post = &series.returns[cut..];
    let n = post.len();
    if n < max_lag + 2 {
        return Err(AnalyticsError::SeriesTooShort {
            len: n,
            required: max_lag + 2,
        });
    }
    let mean = post.iter().sum::<f64>() / n as f64;
    let variance = post.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
    let mut acf = vec![1.0];
    if variance == 0.0 {
        acf.resize(max_lag + 1, 0.0);
        return Ok(acf);
    }
    for lag in 1..=max_lag {
        let mut covariance = 0.0;
        for t in lag..n {
            covariance += (post[t] - mean) * (post[t - lag] - mean);
        }
        acf.push(covariance / (n - lag) as f64 / variance);
    }
    Ok(acf)
}

/// Shape summary of the post-burn-in log returns against a moment-matched
/// normal reference.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailDiagnostics {
    /// Post-burn-in sample count.
    pub n_samples: usize,
    /// Excess kurtosis of log returns (0 for a log-normal return series).
    pub excess_kurtosis: f64,
    /// Fraction of gross returns within the mass band of 1.
    pub mass_at_one: f64,
    /// Probability mass of log returns within a quarter standard deviation
    /// of their mean, relative to the moment-matched normal prediction.
    /// 1 for a log-normal series; above 1 means a sharper central peak.
    pub central_mass_ratio: f64,
    /// Empirical-vs-normal quantile ratios of centered log returns at the
    /// probabilities in [`TAIL_PROBABILITIES`]; above 1 means a fatter tail.
    pub quantile_ratios: Vec<QuantileRatio>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuantileRatio {
    pub probability: f64,
    pub empirical: f64,
    pub reference: f64,
    pub ratio: f64,
}

/// Tail probabilities reported by [`tail_diagnostics`].
pub const TAIL_PROBABILITIES: [f64; 4] = [0.001, 0.01, 0.99, 0.999];

/// Minimum post-burn-in sample count for meaningful shape diagnostics.
pub const MIN_TAIL_SAMPLES: usize = 100;

/// Distribution-shape diagnostics: excess kurtosis of log returns, the
/// fraction of returns within `mass_band` of 1, and tail quantiles against
/// a moment-matched log-normal reference.
pub fn tail_diagnostics(
    series: &ReturnSeries,
    mass_band: f64,
) -> Result<TailDiagnostics, AnalyticsError> {
    let cut = burn_in_cutoff(series);
    let post = &series.returns[cut..];
    if post.len() < MIN_TAIL_SAMPLES {
        return Err(AnalyticsError::SeriesTooShort {
            len: post.len(),
            required: MIN_TAIL_SAMPLES,
        });
    }
    let logs: Vec<f64> = post.iter().map(|r| r.ln()).collect();
    let n = logs.len() as f64;
    let mean = logs.iter().sum::<f64>() / n;
    let m2 = logs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let m4 = logs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
    let excess_kurtosis = if m2 > 0.0 { m4 / (m2 * m2) - 3.0 } else { 0.0 };
    let sd = m2.sqrt();

    let mass_at_one = post
        .iter()
        .filter(|&&r| (r - 1.0).abs() <= mass_band)
        .count() as f64
        / n;

    let central_mass_ratio = if sd > 0.0 {
        let half_width = CENTRAL_BAND_SIGMAS * sd;
        let empirical = logs
            .iter()
            .filter(|&&x| (x - mean).abs() <= half_width)
            .count() as f64
            / n;
        let normal = 2.0 * standard_normal_cdf(CENTRAL_BAND_SIGMAS) - 1.0;
        empirical / normal
    } else {
        1.0
    };

    let mut sorted = logs;
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let quantile_ratios = TAIL_PROBABILITIES
        .iter()
        .map(|&probability| {
            let empirical = empirical_quantile(&sorted, probability) - mean;
            let reference = sd * standard_normal_quantile(probability);
            let ratio = if reference != 0.0 {
                empirical / reference
            } else {
                f64::NAN
            };
            QuantileRatio {
                probability,
                empirical,
                reference,
                ratio,
            }
        })
        .collect();

    Ok(TailDiagnostics {
        n_samples: post.len(),
        excess_kurtosis,
        mass_at_one,
        central_mass_ratio,
        quantile_ratios,
    })
}

/// Half-width, in standard deviations, of the central band used by
/// `central_mass_ratio`.
pub const CENTRAL_BAND_SIGMAS: f64 = 0.25;

/// Standard normal CDF via the Abramowitz-Stegun polynomial
/// (|error| < 7.5e-8).
pub fn standard_normal_cdf(x: f64) -> f64 {
    let t = 1.0 / (1.0 + 0.2316419 * x.abs());
    let density = 0.3989422804014327 * (-x * x / 2.0).exp();
    let tail = density
        * t
        * (0.319381530
            + t * (-0.356563782 + t * (1.781477937 + t * (-1.821255978 + t * 1.330274429))));
    if x >= 0.0 {
        1.0 - tail
    } else {
        tail
    }
}

/// Linear-interpolation quantile of an ascending slice.
fn empirical_quantile(sorted: &[f64], probability: f64) -> f64 {
    let n = sorted.len();
    let position = probability * (n - 1) as f64;
    let lower = position.floor() as usize;
    let upper = position.ceil() as usize;
    let weight = position - lower as f64;
    sorted[lower] * (1.0 - weight) + sorted[upper.min(n - 1)] * weight
}

/// Inverse standard normal CDF (Acklam's rational approximation,
/// |relative error| < 1.2e-9 over (0, 1)).
pub fn standard_normal_quantile(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "probability must be in (0, 1)");
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.38357751867269e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;

    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    }
}

/// Sample Pearson correlation; `None` for fewer than 3 points or a
/// degenerate marginal.
pub fn pearson_correlation(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 3 {
        return None;
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx).powi(2);
        syy += (y - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

/// Sample mean and standard deviation (n-1 denominator).
pub fn mean_and_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}
