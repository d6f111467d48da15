//! Agent-based simulator of speculative price bubbles driven by adaptive
//! portfolio rebalancing.
//!
//! A population of agents holds stock and bond accounts and trades toward
//! target stock-to-bond ratios; a market maker clears their dollar demands
//! at a single price each period, and agents adapt targets multiplicatively
//! to their realized performance. The crate provides the pure market
//! mathematics ([`market`]), the trading loop and scenario drivers
//! ([`engine`]), statistics over the resulting traces ([`analytics`]), and
//! canned named experiments with file output ([`experiments`]).

pub mod analytics;
pub mod config;
pub mod engine;
pub mod experiments;
pub mod market;
pub mod rng;

pub use config::{ActivePolicy, ConfigError, InitialPortfolio, ModelConfig};
pub use engine::{
    apply_noise, crash, deflate, run, select_active, state_is_equilibrium, wealth_snapshot, Engine,
    MarketState, PeriodRecord, SimulationTrace, WealthRow, WealthSnapshot,
};
pub use market::{
    agent_demand, feedback_update, is_equilibrium, multi_agent_clearing_price, rebalance,
    trade_orders, two_agent_clearing_price, AgentState, FeedbackParams, MarketError, PriceRatio,
    TradeOrder,
};
