//! Ingestion of external daily price series for the mean-vs-volatility
//! comparison: daily log returns are partitioned into non-overlapping
//! semi-annual windows, summarized per window, and the windows are
//! classified and correlated the same way as sweep cells.

use serde::Serialize;

use super::{mean_and_std, pearson_correlation, AnalyticsError};

/// Trading days per semi-annual window.
pub const SEMI_ANNUAL_WINDOW: usize = 126;

/// One input row: ISO date (YYYY-MM-DD) and a closing price.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PriceRow {
    pub date: String,
    pub price: f64,
}

/// Mean and standard deviation of the daily log returns of one window.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindowStats {
    pub start_date: String,
    pub end_date: String,
    pub mean_log_return: f64,
    pub std_log_return: f64,
}

/// Windowed statistics of a daily price series plus the same mean-vs-std
/// correlations as a parameter sweep, computed over windows.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IngestResult {
    pub n_prices: usize,
    pub n_returns: usize,
    pub windows: Vec<WindowStats>,
    pub positive_correlation: Option<f64>,
    pub negative_correlation: Option<f64>,
}

/// Parses the two-column text format: `date,price` per line, ISO dates,
/// decimal prices, optional header line, blank lines ignored.
pub fn parse_price_series(text: &str) -> Result<Vec<PriceRow>, AnalyticsError> {
    let mut rows = Vec::new();
    for (line_index, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let row = line_index + 1;
        let mut parts = trimmed.splitn(2, ',');
        let date = parts.next().unwrap_or("").trim().to_string();
        let price_text = parts
            .next()
            .ok_or_else(|| AnalyticsError::MalformedRow {
                row,
                message: "expected two comma-separated columns".to_string(),
            })?
            .trim();
        if !is_iso_date(&date) {
            // A non-date first column on the first row is a header.
            if rows.is_empty() && line_index == 0 {
                continue;
            }
            return Err(AnalyticsError::MalformedRow {
                row,
                message: format!("'{date}' is not an ISO date (YYYY-MM-DD)"),
            });
        }
        let price: f64 = price_text
            .parse()
            .map_err(|_| AnalyticsError::MalformedRow {
                row,
                message: format!("'{price_text}' is not a decimal price"),
            })?;
        rows.push(PriceRow { date, price });
    }
    Ok(rows)
}

fn is_iso_date(s: &str) -> bool {
    let bytes = s.as_bytes();
    if bytes.len() != 10 || bytes[4] != b'-' || bytes[7] != b'-' {
        return false;
    }
    let digits = |range: std::ops::Range<usize>| bytes[range].iter().all(u8::is_ascii_digit);
    if !(digits(0..4) && digits(5..7) && digits(8..10)) {
        return false;
    }
    let month: u32 = s[5..7].parse().unwrap();
    let day: u32 = s[8..10].parse().unwrap();
    (1..=12).contains(&month) && (1..=31).contains(&day)
}

/// Daily log returns split into non-overlapping semi-annual windows with
/// per-window mean and standard deviation; a trailing partial window is
/// dropped. Rows must be strictly increasing in date with positive prices;
/// violations are reported with the offending row index (1-based).
pub fn ingest_price_series(rows: &[PriceRow]) -> Result<IngestResult, AnalyticsError> {
    if rows.len() < 2 {
        return Err(AnalyticsError::SeriesTooShort {
            len: rows.len(),
            required: 2,
        });
    }
    for (i, row) in rows.iter().enumerate() {
        if !(row.price > 0.0 && row.price.is_finite()) {
            return Err(AnalyticsError::NonPositivePrice {
                row: i + 1,
                value: row.price,
            });
        }
        if i > 0 && rows[i - 1].date.as_str() >= row.date.as_str() {
            return Err(AnalyticsError::UnsortedDates { row: i + 1 });
        }
    }

    let log_returns: Vec<f64> = rows
        .windows(2)
        .map(|pair| (pair[1].price / pair[0].price).ln())
        .collect();

    let mut windows = Vec::new();
    let mut start = 0;
    while start + SEMI_ANNUAL_WINDOW <= log_returns.len() {
        let chunk = &log_returns[start..start + SEMI_ANNUAL_WINDOW];
        let (mean, std) = mean_and_std(chunk);
        windows.push(WindowStats {
            // Return i spans rows i..i+1; the window covers rows
            // start+1 ..= start+SEMI_ANNUAL_WINDOW.
            start_date: rows[start + 1].date.clone(),
            end_date: rows[start + SEMI_ANNUAL_WINDOW].date.clone(),
            mean_log_return: mean,
            std_log_return: std,
        });
        start += SEMI_ANNUAL_WINDOW;
    }

    let gather = |positive: bool| -> (Vec<f64>, Vec<f64>) {
        windows
            .iter()
            .filter(|w| {
                if positive {
                    w.mean_log_return > 0.0
                } else {
                    w.mean_log_return < 0.0
                }
            })
            .map(|w| (w.mean_log_return, w.std_log_return))
            .unzip()
    };
    let (pos_means, pos_stds) = gather(true);
    let (neg_means, neg_stds) = gather(false);

    Ok(IngestResult {
        n_prices: rows.len(),
        n_returns: log_returns.len(),
        windows,
        positive_correlation: pearson_correlation(&pos_means, &pos_stds),
        negative_correlation: pearson_correlation(&neg_means, &neg_stds),
    })
}
