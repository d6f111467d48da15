//! The period-by-period trading loop.
//!
//! Each period a random subset of agents becomes active, a single clearing
//! price balances their dollar demands, the active agents rebalance to
//! their targets and update them through the feedback rule, inactive
//! agents are marked to the new price, and bond accounts accrue interest.
//!
//! A run is strictly sequential (each period depends on the previous one)
//! and fully deterministic given the config seed. Independent runs share
//! no state and can execute in parallel.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::config::{ActivePolicy, ConfigError, ModelConfig};
use crate::market::{
    self, agent_demand, feedback_update, multi_agent_clearing_price, rebalance, AgentState,
};
use crate::rng::{stream_rng, Stream};

/// Full market state at one instant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketState {
    /// Current price per share.
    pub price: f64,
    /// The whole agent population, indexed by position.
    pub agents: Vec<AgentState>,
    /// Number of completed periods.
    pub period: u64,
}

/// What happened in one trading period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodRecord {
    pub period: u64,
    /// Price at the start of the session (after any between-session noise).
    pub price_before: f64,
    /// Price after the trade: `price_before * gross_return` by construction.
    pub price_after: f64,
    /// Gross return of the session itself, excluding between-session noise.
    pub gross_return: f64,
    /// Dollar value of shares traded: half the sum of absolute demands.
    pub dollar_volume: f64,
    /// Population indices of the active set, ascending.
    pub active_indices: Vec<usize>,
    /// Population mean of the target ratios after the period's updates.
    pub mean_target_ratio: f64,
    /// False when the clearing price was degenerate and the period was
    /// recorded as a no-trade period.
    pub traded: bool,
}

/// A complete run: the configuration that produced it, one record per
/// period, and the final population.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationTrace {
    pub config: ModelConfig,
    pub records: Vec<PeriodRecord>,
    pub final_agents: Vec<AgentState>,
}

impl SimulationTrace {
    pub fn final_price(&self) -> f64 {
        self.records
            .last()
            .map(|r| r.price_after)
            .unwrap_or(self.config.initial_price)
    }
}

/// Driver for a single simulation. Holds the evolving state plus the
/// per-component randomness streams.
pub struct Engine {
    config: ModelConfig,
    state: MarketState,
    selection_rng: ChaCha8Rng,
    noise_rng: ChaCha8Rng,
    active_scratch: Vec<bool>,
}

impl Engine {
    /// Engine at the configured initial state.
    pub fn new(config: ModelConfig) -> Result<Self, ConfigError> {
        config.validate()?;
        let state = MarketState {
            price: config.initial_price,
            agents: config.initial_agents(),
            period: 0,
        };
        Ok(Self::with_state(config, state))
    }

    /// Engine continuing from a checkpointed state (branch scenarios).
    /// The state's period counter is kept.
    pub fn from_state(config: ModelConfig, state: MarketState) -> Result<Self, ConfigError> {
        config.validate()?;
        if state.agents.len() != config.n_agents {
            return Err(ConfigError::PortfolioCountMismatch {
                listed: state.agents.len(),
                n_agents: config.n_agents,
            });
        }
        Ok(Self::with_state(config, state))
    }

    fn with_state(config: ModelConfig, state: MarketState) -> Self {
        let selection_rng = stream_rng(config.seed, Stream::Selection);
        let noise_rng = stream_rng(config.seed, Stream::Noise);
        let n = state.agents.len();
        Self {
            config,
            state,
            selection_rng,
            noise_rng,
            active_scratch: vec![false; n],
        }
    }

    pub fn state(&self) -> &MarketState {
        &self.state
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    /// Runs one trading period and returns its record.
    pub fn step(&mut self) -> PeriodRecord {
        // Noise moves the price between sessions, so the first session
        // starts from the configured price untouched.
        if self.state.period > 0 && self.config.noise_sigma > 0.0 {
            let noisy = apply_noise(
                self.state.price,
                self.config.noise_sigma,
                &mut self.noise_rng,
            );
            let factor = noisy / self.state.price;
            self.state.price = noisy;
            for agent in &mut self.state.agents {
                agent.stock_value *= factor;
            }
        }

        let price_before = self.state.price;
        let active = select_active(
            self.state.agents.len(),
            &self.config.active_policy,
            &mut self.selection_rng,
        );
        let rho = self.config.per_period_bond_rate();

        let clearing = multi_agent_clearing_price(active.iter().map(|&i| &self.state.agents[i]));
        let (gross, dollar_volume, traded) = match clearing {
            Ok(price_ratio) => {
                let g = price_ratio.gross();
                let mut abs_demand = 0.0;
                for &i in &active {
                    let agent = self.state.agents[i];
                    // Performance is judged on the pre-rebalance holdings
                    // marked to the new price.
                    let realized = g * agent.stock_value / agent.bond_value;
                    abs_demand += agent_demand(&agent, price_ratio).abs();
                    let mut next = rebalance(&agent, price_ratio);
                    next.target_ratio =
                        feedback_update(agent.target_ratio, realized, &self.config.feedback);
                    self.state.agents[i] = next;
                }
                for &i in &active {
                    self.active_scratch[i] = true;
                }
                for (i, agent) in self.state.agents.iter_mut().enumerate() {
                    if !self.active_scratch[i] {
                        agent.stock_value *= g;
                    }
                }
                for &i in &active {
                    self.active_scratch[i] = false;
                }
                (g, 0.5 * abs_demand, true)
            }
            Err(_) => {
                // No clearing price: the period trades nothing and the
                // price follows the equilibrium convention of drifting at
                // the bond rate.
                for agent in &mut self.state.agents {
                    agent.stock_value *= rho;
                }
                (rho, 0.0, false)
            }
        };

        if rho != 1.0 {
            for agent in &mut self.state.agents {
                agent.bond_value *= rho;
            }
        }

        let price_after = price_before * gross;
        self.state.price = price_after;
        let period = self.state.period;
        self.state.period += 1;

        let mean_target_ratio = self
            .state
            .agents
            .iter()
            .map(|a| a.target_ratio)
            .sum::<f64>()
            / self.state.agents.len() as f64;

        PeriodRecord {
            period,
            price_before,
            price_after,
            gross_return: gross,
            dollar_volume,
            active_indices: active,
            mean_target_ratio,
            traded,
        }
    }
}

/// Draws the active set for one period: `m` distinct indices chosen
/// uniformly without replacement, with `m` fixed or itself uniform in
/// `[min, max]`. Returned ascending.
pub fn select_active(n_agents: usize, policy: &ActivePolicy, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let m = match *policy {
        ActivePolicy::Fixed(m) => m,
        ActivePolicy::UniformRandom { min, max } => rng.random_range(min..=max),
    };
    let mut indices = rand::seq::index::sample(rng, n_agents, m).into_vec();
    indices.sort_unstable();
    indices
}

/// One multiplicative log-normal shock: `price * exp(sigma * z)` with `z`
/// standard normal. `sigma = 0` returns the price unchanged without
/// consuming randomness.
pub fn apply_noise(price: f64, sigma: f64, rng: &mut ChaCha8Rng) -> f64 {
    if sigma == 0.0 {
        return price;
    }
    let z: f64 = StandardNormal.sample(rng);
    price * (sigma * z).exp()
}

/// Runs the configured number of periods from the initial state.
pub fn run(config: &ModelConfig) -> Result<SimulationTrace, ConfigError> {
    let mut engine = Engine::new(config.clone())?;
    let mut records = Vec::with_capacity(config.horizon_periods);
    for _ in 0..config.horizon_periods {
        records.push(engine.step());
    }
    Ok(SimulationTrace {
        config: config.clone(),
        records,
        final_agents: engine.state.agents,
    })
}

/// Instantaneous mark-down of the price to a floor without trading: every
/// stock position is scaled by `floor_price / price`; bonds and targets
/// are untouched.
pub fn crash(state: &MarketState, floor_price: f64) -> Result<MarketState, ConfigError> {
    if !(floor_price > 0.0 && floor_price.is_finite()) {
        return Err(ConfigError::InvalidFloorPrice(floor_price));
    }
    let factor = floor_price / state.price;
    let agents = state
        .agents
        .iter()
        .map(|a| AgentState {
            stock_value: a.stock_value * factor,
            ..*a
        })
        .collect();
    Ok(MarketState {
        price: floor_price,
        agents,
        period: state.period,
    })
}

/// Continued trading under a pessimistic feedback bias until the price
/// reaches the floor or `max_periods` elapse. The config must satisfy
/// `alpha * beta < 1`. The returned trace starts at period 0.
pub fn deflate(
    state: &MarketState,
    config: &ModelConfig,
    floor_price: f64,
    max_periods: usize,
) -> Result<SimulationTrace, ConfigError> {
    if config.feedback.bias() >= 1.0 {
        return Err(ConfigError::DeflationRequiresPessimisticBias(
            config.feedback.bias(),
        ));
    }
    if !(floor_price > 0.0 && floor_price.is_finite()) {
        return Err(ConfigError::InvalidFloorPrice(floor_price));
    }
    let mut branch_state = state.clone();
    branch_state.period = 0;
    let mut engine = Engine::from_state(config.clone(), branch_state)?;
    let mut records = Vec::new();
    while engine.state().price > floor_price && records.len() < max_periods {
        records.push(engine.step());
    }
    Ok(SimulationTrace {
        config: config.clone(),
        records,
        final_agents: engine.state.agents,
    })
}

/// Per-agent wealth rows of a state, plus population summaries. One row
/// per agent: stock, bond, total, and target ratio.
pub fn wealth_snapshot(state: &MarketState) -> WealthSnapshot {
    let rows: Vec<WealthRow> = state
        .agents
        .iter()
        .map(|a| WealthRow {
            stock_value: a.stock_value,
            bond_value: a.bond_value,
            total_wealth: a.total_wealth(),
            target_ratio: a.target_ratio,
        })
        .collect();
    let n = rows.len() as f64;
    let mean_stock = rows.iter().map(|r| r.stock_value).sum::<f64>() / n;
    let mean_bond = rows.iter().map(|r| r.bond_value).sum::<f64>() / n;
    let mean_total = rows.iter().map(|r| r.total_wealth).sum::<f64>() / n;
    let mean_target_ratio = rows.iter().map(|r| r.target_ratio).sum::<f64>() / n;
    let min_target_ratio = rows
        .iter()
        .map(|r| r.target_ratio)
        .fold(f64::INFINITY, f64::min);
    WealthSnapshot {
        rows,
        mean_stock,
        mean_bond,
        mean_total,
        mean_target_ratio,
        min_target_ratio,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WealthRow {
    pub stock_value: f64,
    pub bond_value: f64,
    pub total_wealth: f64,
    pub target_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WealthSnapshot {
    pub rows: Vec<WealthRow>,
    pub mean_stock: f64,
    pub mean_bond: f64,
    pub mean_total: f64,
    pub mean_target_ratio: f64,
    pub min_target_ratio: f64,
}

/// True when the whole population is at its target ratios (the no-trade
/// fixed point).
pub fn state_is_equilibrium(state: &MarketState) -> bool {
    market::is_equilibrium(state.agents.iter())
}
