//! Pure pricing, rebalancing, and feedback rules.
//!
//! Everything in this module is a deterministic function of its inputs:
//! no randomness, no I/O, no shared state. The simulation engine composes
//! these primitives into the period-by-period trading loop.
//!
//! Portfolios are dollar values of a stock and a bond (cash) account,
//! together with a target stock-to-bond ratio. Stock positions are held as
//! dollar values against a global price; fractional share amounts are
//! implied, never stored.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative tolerance used by [`is_equilibrium`] when comparing an agent's
/// realized ratio to its target.
pub const EQUILIBRIUM_TOLERANCE: f64 = 1e-9;

/// Default relative tolerance for the "unchanged" branch of the feedback
/// rule. Exact equality of realized and target ratios is measure-zero in
/// floating arithmetic; a small relative band makes the branch reachable.
pub const DEFAULT_EQUALITY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MarketError {
    #[error("agent state must be strictly positive and finite (stock={stock}, bond={bond}, target={target})")]
    InvalidAgentState { stock: f64, bond: f64, target: f64 },
    #[error("price ratio must be strictly positive and finite, got {0}")]
    InvalidPriceRatio(f64),
    #[error(
        "feedback parameters must be strictly positive and finite (alpha={alpha}, beta={beta})"
    )]
    InvalidFeedbackParams { alpha: f64, beta: f64 },
    #[error("clearing requires at least two active agents, got {0}")]
    TooFewActiveAgents(usize),
    #[error("no clearing price exists: total marked stock value of the active set is zero")]
    DegenerateClearing,
}

/// One agent's portfolio: dollar value of stock at the last mark-to-market,
/// dollar value of the bond (cash) account, and the target stock-to-bond
/// ratio the agent aims to hold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentState {
    pub stock_value: f64,
    pub bond_value: f64,
    pub target_ratio: f64,
}

impl AgentState {
    pub fn new(stock_value: f64, bond_value: f64, target_ratio: f64) -> Result<Self, MarketError> {
        let ok = stock_value > 0.0
            && bond_value > 0.0
            && target_ratio > 0.0
            && stock_value.is_finite()
            && bond_value.is_finite()
            && target_ratio.is_finite();
        if !ok {
            return Err(MarketError::InvalidAgentState {
                stock: stock_value,
                bond: bond_value,
                target: target_ratio,
            });
        }
        Ok(Self {
            stock_value,
            bond_value,
            target_ratio,
        })
    }

    /// Agent at a balanced portfolio: target ratio equal to stock/bond.
    pub fn balanced(stock_value: f64, bond_value: f64) -> Result<Self, MarketError> {
        Self::new(stock_value, bond_value, stock_value / bond_value)
    }

    /// Realized stock-to-bond ratio of the current holdings.
    pub fn ratio(&self) -> f64 {
        self.stock_value / self.bond_value
    }

    /// Total wealth in dollars.
    pub fn total_wealth(&self) -> f64 {
        self.stock_value + self.bond_value
    }
}

/// Gross per-period price ratio `P_next / P_current`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct PriceRatio(f64);

impl PriceRatio {
    pub fn new(gross: f64) -> Result<Self, MarketError> {
        if gross > 0.0 && gross.is_finite() {
            Ok(Self(gross))
        } else {
            Err(MarketError::InvalidPriceRatio(gross))
        }
    }

    pub fn gross(self) -> f64 {
        self.0
    }
}

/// Parameters of the multiplicative feedback rule: the target ratio is
/// scaled by `alpha` after a better-than-expected period and by `beta`
/// after a worse one.
///
/// The optimistic regime has `alpha > 1` and `0 < beta < 1` with
/// `alpha * beta > 1`; any strictly positive pair is accepted so that
/// pessimistic (deflationary, `alpha * beta < 1`) configurations can be
/// expressed as well.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeedbackParams {
    pub alpha: f64,
    pub beta: f64,
    /// Relative tolerance for the "unchanged" branch.
    pub equality_tolerance: f64,
}

impl FeedbackParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self, MarketError> {
        if alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite() {
            Ok(Self {
                alpha,
                beta,
                equality_tolerance: DEFAULT_EQUALITY_TOLERANCE,
            })
        } else {
            Err(MarketError::InvalidFeedbackParams { alpha, beta })
        }
    }

    /// The product `alpha * beta` whose position relative to 1 decides
    /// whether the price is pumped up or deflated.
    pub fn bias(&self) -> f64 {
        self.alpha * self.beta
    }
}

/// Signed dollar amount one agent moves from bond to stock at a cleared
/// price; negative means selling stock.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TradeOrder {
    pub agent_index: usize,
    pub demand: f64,
}

/// Clearing price of the two-agent balance equation: the gross ratio at
/// which the dollars one agent moves out of stock equal the dollars the
/// other moves in.
///
/// Returns `(k1*b1 + k2*b2) / (s1 + s2)`. This is the textbook two-agent
/// form; it omits the `1/(1+k)` demand weights of [`multi_agent_clearing_price`]
/// and therefore agrees with it only when both agents share one target
/// ratio. All simulation uses the multi-agent form; this one is kept for
/// comparison.
pub fn two_agent_clearing_price(
    agent1: &AgentState,
    agent2: &AgentState,
) -> Result<PriceRatio, MarketError> {
    let total_stock = agent1.stock_value + agent2.stock_value;
    if total_stock.is_nan() || total_stock <= 0.0 {
        return Err(MarketError::DegenerateClearing);
    }
    let gross = (agent1.target_ratio * agent1.bond_value + agent2.target_ratio * agent2.bond_value)
        / total_stock;
    PriceRatio::new(gross)
}

/// Clearing price for an active set: the gross ratio at which the signed
/// dollar demands of all active agents sum to zero.
///
/// Solves `sum(demand_i) = 0` for the price, giving
/// `gross = sum(k_i*b_i/(1+k_i)) / sum(s_i/(1+k_i))`.
pub fn multi_agent_clearing_price<'a, I>(active: I) -> Result<PriceRatio, MarketError>
where
    I: IntoIterator<Item = &'a AgentState>,
{
    let mut numerator = 0.0;
    let mut denominator = 0.0;
    let mut count = 0usize;
    for agent in active {
        let weight = 1.0 + agent.target_ratio;
        numerator += agent.target_ratio * agent.bond_value / weight;
        denominator += agent.stock_value / weight;
        count += 1;
    }
    if count < 2 {
        return Err(MarketError::TooFewActiveAgents(count));
    }
    if denominator.is_nan() || denominator <= 0.0 {
        return Err(MarketError::DegenerateClearing);
    }
    PriceRatio::new(numerator / denominator)
}

/// Signed dollar amount the agent wants to move from bond to stock at the
/// given price: `(k*b - gross*s) / (1+k)`. Positive means buying stock.
pub fn agent_demand(agent: &AgentState, price: PriceRatio) -> f64 {
    let g = price.gross();
    (agent.target_ratio * agent.bond_value - g * agent.stock_value) / (1.0 + agent.target_ratio)
}

/// Demands of an indexed active set at a cleared price.
pub fn trade_orders<'a, I>(active: I, price: PriceRatio) -> Vec<TradeOrder>
where
    I: IntoIterator<Item = (usize, &'a AgentState)>,
{
    active
        .into_iter()
        .map(|(agent_index, agent)| TradeOrder {
            agent_index,
            demand: agent_demand(agent, price),
        })
        .collect()
}

/// Marks the agent's stock to the new price and moves the demanded dollar
/// amount between the accounts, leaving the holdings exactly at the target
/// ratio. The target itself is unchanged.
///
/// For positive inputs both accounts stay strictly positive: the new stock
/// value is `k*(g*s + b)/(1+k)` and the new bond value `(g*s + b)/(1+k)`.
pub fn rebalance(agent: &AgentState, price: PriceRatio) -> AgentState {
    let marked = price.gross() * agent.stock_value;
    let demand = agent_demand(agent, price);
    AgentState {
        stock_value: marked + demand,
        bond_value: agent.bond_value - demand,
        target_ratio: agent.target_ratio,
    }
}

/// Multiplicative update of a target ratio given the realized
/// (pre-rebalance, marked-to-market) ratio: `alpha * target` when the
/// market did better than expected, `beta * target` when worse, unchanged
/// inside the equality band.
pub fn feedback_update(target: f64, realized: f64, params: &FeedbackParams) -> f64 {
    let band = params.equality_tolerance * target;
    if (realized - target).abs() <= band {
        target
    } else if realized > target {
        params.alpha * target
    } else {
        params.beta * target
    }
}

/// True when every agent's realized ratio equals its target within
/// [`EQUILIBRIUM_TOLERANCE`]: the no-trade fixed point of the dynamics.
pub fn is_equilibrium<'a, I>(agents: I) -> bool
where
    I: IntoIterator<Item = &'a AgentState>,
{
    agents
        .into_iter()
        .all(|a| (a.ratio() - a.target_ratio).abs() <= EQUILIBRIUM_TOLERANCE * a.target_ratio)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn agent(s: f64, b: f64, k: f64) -> AgentState {
        AgentState::new(s, b, k).unwrap()
    }

    #[test]
    fn agent_state_rejects_nonpositive_fields() {
        assert!(AgentState::new(0.0, 100.0, 1.0).is_err());
        assert!(AgentState::new(100.0, -1.0, 1.0).is_err());
        assert!(AgentState::new(100.0, 100.0, 0.0).is_err());
        assert!(AgentState::new(f64::NAN, 100.0, 1.0).is_err());
        assert!(AgentState::new(100.0, f64::INFINITY, 1.0).is_err());
    }

    #[test]
    fn price_ratio_rejects_degenerate_values() {
        assert!(PriceRatio::new(0.0).is_err());
        assert!(PriceRatio::new(-1.0).is_err());
        assert!(PriceRatio::new(f64::NAN).is_err());
        assert!(PriceRatio::new(1.25).is_ok());
    }

    #[test]
    fn two_agent_price_balanced_portfolios_do_not_trade() {
        let a = agent(100.0, 100.0, 1.0);
        let b = agent(100.0, 100.0, 1.0);
        let g = two_agent_clearing_price(&a, &b).unwrap();
        assert_eq!(g.gross(), 1.0);
    }

    #[test]
    fn two_agent_price_solves_balance_equation() {
        // (k1*b1 + k2*b2) / (s1 + s2), solved by hand.
        let a = agent(100.0, 100.0, 2.0);
        let b = agent(100.0, 100.0, 0.5);
        let g = two_agent_clearing_price(&a, &b).unwrap();
        assert!((g.gross() - 1.25).abs() < 1e-15);

        let a = agent(100.0, 100.0, 3.0);
        let b = agent(100.0, 100.0, 1.0);
        let g = two_agent_clearing_price(&a, &b).unwrap();
        assert!((g.gross() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn multi_agent_price_is_one_at_equilibrium() {
        let agents = [
            AgentState::balanced(100.0, 300.0).unwrap(),
            AgentState::balanced(50.0, 200.0).unwrap(),
            AgentState::balanced(400.0, 100.0).unwrap(),
        ];
        let g = multi_agent_clearing_price(agents.iter()).unwrap();
        assert!((g.gross() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn multi_agent_price_direct_evaluation() {
        // (75 + 50) / (25 + 50) = 5/3
        let a = agent(100.0, 100.0, 3.0);
        let b = agent(100.0, 100.0, 1.0);
        let g = multi_agent_clearing_price([&a, &b]).unwrap();
        assert!((g.gross() - 5.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn multi_agent_price_differs_from_two_agent_form_when_targets_differ() {
        // Same input as the two-agent 1.25 case; the demand-weighted form
        // gives (200/3 + 100/3) / (100/3 + 200/3) = 1 instead.
        let a = agent(100.0, 100.0, 2.0);
        let b = agent(100.0, 100.0, 0.5);
        let g = multi_agent_clearing_price([&a, &b]).unwrap();
        assert!((g.gross() - 1.0).abs() < 1e-15);
        let g2 = two_agent_clearing_price(&a, &b).unwrap();
        assert!((g2.gross() - 1.25).abs() < 1e-15);
    }

    #[test]
    fn multi_agent_price_rejects_small_sets() {
        let a = agent(100.0, 100.0, 1.0);
        assert_eq!(
            multi_agent_clearing_price([&a]),
            Err(MarketError::TooFewActiveAgents(1))
        );
        assert_eq!(
            multi_agent_clearing_price(std::iter::empty()),
            Err(MarketError::TooFewActiveAgents(0))
        );
    }

    #[test]
    fn demand_is_zero_at_target_after_marking() {
        let g = PriceRatio::new(1.5).unwrap();
        // k = gross*s/b means the agent is at target once marked.
        let a = agent(100.0, 100.0, 1.5);
        assert_eq!(agent_demand(&a, g), 0.0);
    }

    #[test]
    fn demand_direct_evaluation_and_zero_sum() {
        let g = PriceRatio::new(5.0 / 3.0).unwrap();
        let buyer = agent(100.0, 100.0, 3.0);
        let seller = agent(100.0, 100.0, 1.0);
        let x_buy = agent_demand(&buyer, g);
        let x_sell = agent_demand(&seller, g);
        assert!((x_buy - 100.0 / 3.0).abs() < 1e-12);
        assert!((x_sell + 100.0 / 3.0).abs() < 1e-12);
        assert!((x_buy + x_sell).abs() < 1e-12);
    }

    #[test]
    fn trade_orders_keep_indices() {
        let g = PriceRatio::new(5.0 / 3.0).unwrap();
        let a = agent(100.0, 100.0, 3.0);
        let b = agent(100.0, 100.0, 1.0);
        let orders = trade_orders([(7, &a), (9, &b)], g);
        assert_eq!(orders.len(), 2);
        assert_eq!(orders[0].agent_index, 7);
        assert_eq!(orders[1].agent_index, 9);
        assert!((orders[0].demand + orders[1].demand).abs() < 1e-12);
    }

    #[test]
    fn rebalance_lands_exactly_on_target() {
        let g = PriceRatio::new(5.0 / 3.0).unwrap();
        let a = rebalance(&agent(100.0, 100.0, 3.0), g);
        assert!((a.stock_value - 200.0).abs() < 1e-12);
        assert!((a.bond_value - 200.0 / 3.0).abs() < 1e-12);
        assert!((a.ratio() - 3.0).abs() < 1e-12);

        let b = rebalance(&agent(100.0, 100.0, 1.0), g);
        assert!((b.stock_value - 400.0 / 3.0).abs() < 1e-12);
        assert!((b.bond_value - 400.0 / 3.0).abs() < 1e-12);
        assert!((b.ratio() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rebalance_with_zero_demand_only_marks_stock() {
        let g = PriceRatio::new(2.0).unwrap();
        let a = agent(100.0, 100.0, 2.0); // at target once marked
        let next = rebalance(&a, g);
        assert_eq!(next.stock_value, 200.0);
        assert_eq!(next.bond_value, 100.0);
        assert_eq!(next.target_ratio, 2.0);
    }

    #[test]
    fn feedback_update_branches() {
        let params = FeedbackParams::new(3.01, 0.34).unwrap();
        assert!((feedback_update(2.0, 2.5, &params) - 6.02).abs() < 1e-12);
        assert!((feedback_update(2.0, 1.5, &params) - 0.68).abs() < 1e-12);
        assert_eq!(feedback_update(2.0, 2.0, &params), 2.0);
        // Inside the equality band counts as unchanged.
        assert_eq!(feedback_update(2.0, 2.0 + 1e-13, &params), 2.0);
        // Just outside the band triggers the update.
        assert_eq!(feedback_update(2.0, 2.0 + 1e-11, &params), 6.02);
    }

    #[test]
    fn feedback_params_reject_nonpositive_values() {
        assert!(FeedbackParams::new(0.0, 0.5).is_err());
        assert!(FeedbackParams::new(1.5, -0.1).is_err());
        assert!(FeedbackParams::new(f64::NAN, 0.5).is_err());
        // Pessimistic bias is a valid configuration.
        let p = FeedbackParams::new(0.9, 0.9).unwrap();
        assert!(p.bias() < 1.0);
    }

    #[test]
    fn equilibrium_detection() {
        let balanced: Vec<_> = (0..4)
            .map(|_| AgentState::new(100.0, 300.0, 1.0 / 3.0).unwrap())
            .collect();
        assert!(is_equilibrium(balanced.iter()));

        let mut perturbed = balanced.clone();
        perturbed[2].target_ratio = 0.34;
        assert!(!is_equilibrium(perturbed.iter()));

        // Wealth-independent: ratios match targets even though sizes differ.
        let mixed = [
            AgentState::balanced(10.0, 30.0).unwrap(),
            AgentState::balanced(700.0, 2100.0).unwrap(),
            AgentState::balanced(5.0, 1.0).unwrap(),
        ];
        assert!(is_equilibrium(mixed.iter()));
    }
}
