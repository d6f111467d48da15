//! The stay-or-sell decision game between one agent and the rest of the
//! market, with payoffs after a number of years of bubble growth.

use serde::Serialize;

use super::AnalyticsError;

/// Dollar payoffs to the agent indexed by (agent action, market action).
///
/// By construction `sell_sell` equals the initial bond account exactly and
/// `stay_sell` is zero: if the market sells first, a staying agent's stock
/// is worthless.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PayoffMatrix {
    /// Agent stays, market stays: bond plus the recoverable fraction of
    /// the grown stock account.
    pub stay_stay: f64,
    /// Agent stays, market sells: nothing.
    pub stay_sell: f64,
    /// Agent sells, market stays: bond plus the full grown stock account.
    pub sell_stay: f64,
    /// Agent sells, market sells: the bond account alone.
    pub sell_sell: f64,
}

impl PayoffMatrix {
    /// Selling dominates staying against either market action whenever the
    /// recovery fraction does not exceed 1.
    pub fn sell_dominates(&self) -> bool {
        self.sell_stay >= self.stay_stay && self.sell_sell >= self.stay_sell
    }
}

/// Payoffs after `years` of growth at `annual_return`, starting from bond
/// `b0` and stock `s0`. A staying agent expects to recover
/// `stay_recovery_fraction` of the stock's cash value if the market holds.
pub fn payoff_matrix(
    b0: f64,
    s0: f64,
    annual_return: f64,
    years: u32,
    stay_recovery_fraction: f64,
) -> Result<PayoffMatrix, AnalyticsError> {
    for (name, value) in [
        ("b0", b0),
        ("s0", s0),
        ("annual_return", annual_return),
        ("stay_recovery_fraction", stay_recovery_fraction),
    ] {
        if !(value >= 0.0 && value.is_finite()) {
            return Err(AnalyticsError::NegativeInput { name, value });
        }
    }
    let grown_stock = s0 * annual_return.powi(years as i32);
    Ok(PayoffMatrix {
        stay_stay: b0 + stay_recovery_fraction * grown_stock,
        stay_sell: 0.0,
        sell_stay: b0 + grown_stock,
        sell_sell: b0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ten_year_payoffs_direct_evaluation() {
        let m = payoff_matrix(100.0, 100.0, 1.1, 10, 0.1).unwrap();
        assert!((m.stay_stay - 125.94).abs() < 0.005, "{}", m.stay_stay);
        assert!((m.sell_stay - 359.37).abs() < 0.005, "{}", m.sell_stay);
        assert_eq!(m.stay_sell, 0.0);
        assert_eq!(m.sell_sell, 100.0);
    }

    #[test]
    fn zero_years_keeps_initial_accounts() {
        let m = payoff_matrix(100.0, 100.0, 1.1, 0, 0.1).unwrap();
        assert!((m.stay_stay - 110.0).abs() < 1e-12);
        assert!((m.sell_stay - 200.0).abs() < 1e-12);
    }

    #[test]
    fn negative_inputs_are_rejected() {
        assert!(matches!(
            payoff_matrix(-1.0, 100.0, 1.1, 10, 0.1),
            Err(AnalyticsError::NegativeInput { name: "b0", .. })
        ));
        assert!(matches!(
            payoff_matrix(100.0, 100.0, 1.1, 10, -0.2),
            Err(AnalyticsError::NegativeInput {
                name: "stay_recovery_fraction",
                ..
            })
        ));
    }

    #[test]
    fn selling_is_dominant_for_sane_recovery_fractions() {
        let m = payoff_matrix(40.0, 260.0, 1.14, 7, 0.35).unwrap();
        assert!(m.sell_dominates());
    }
}
