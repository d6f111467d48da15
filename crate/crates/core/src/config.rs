//! Simulation configuration and validation.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::market::{AgentState, FeedbackParams};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("n_agents must be at least 2, got {0}")]
    TooFewAgents(usize),
    #[error("active_policy: fixed m={m} violates 2 <= m <= n_agents={n_agents}")]
    FixedActiveOutOfRange { m: usize, n_agents: usize },
    #[error(
        "active_policy: uniform range [{min}, {max}] violates 2 <= min <= max <= n_agents={n_agents}"
    )]
    UniformActiveOutOfRange {
        min: usize,
        max: usize,
        n_agents: usize,
    },
    #[error("periods_per_year must be at least 1")]
    InvalidPeriodsPerYear,
    #[error("initial_price must be strictly positive and finite, got {0}")]
    InvalidInitialPrice(f64),
    #[error("horizon_periods must be at least 1")]
    InvalidHorizon,
    #[error("noise_sigma must be finite and non-negative, got {0}")]
    InvalidNoiseSigma(f64),
    #[error("bond_rate must be strictly positive and finite, got {0}")]
    InvalidBondRate(f64),
    #[error("target_perturbation must be finite and greater than -1, got {0}")]
    InvalidPerturbation(f64),
    #[error("initial_portfolio: {0}")]
    InvalidInitialPortfolio(String),
    #[error("initial_portfolio: per-agent list has {listed} entries but n_agents={n_agents}")]
    PortfolioCountMismatch { listed: usize, n_agents: usize },
    #[error("feedback: {0}")]
    InvalidFeedback(#[from] crate::market::MarketError),
    #[error("deflation requires a pessimistic bias alpha*beta < 1, got alpha*beta={0}")]
    DeflationRequiresPessimisticBias(f64),
    #[error("floor_price must be strictly positive and finite, got {0}")]
    InvalidFloorPrice(f64),
}

/// How the active set size is chosen each period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ActivePolicy {
    /// The same number of active traders every period.
    Fixed(usize),
    /// Active-set size drawn uniformly from `[min, max]` each period.
    UniformRandom { min: usize, max: usize },
}

impl ActivePolicy {
    pub fn validate(&self, n_agents: usize) -> Result<(), ConfigError> {
        match *self {
            ActivePolicy::Fixed(m) => {
                if m < 2 || m > n_agents {
                    return Err(ConfigError::FixedActiveOutOfRange { m, n_agents });
                }
            }
            ActivePolicy::UniformRandom { min, max } => {
                if min < 2 || min > max || max > n_agents {
                    return Err(ConfigError::UniformActiveOutOfRange { min, max, n_agents });
                }
            }
        }
        Ok(())
    }

    /// Expected active-set size, used where a closed form needs a single m.
    pub fn mean_active(&self) -> f64 {
        match *self {
            ActivePolicy::Fixed(m) => m as f64,
            ActivePolicy::UniformRandom { min, max } => (min + max) as f64 / 2.0,
        }
    }
}

/// Starting portfolios for the population.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum InitialPortfolio {
    /// Every agent starts with a copy of this portfolio.
    Template(AgentState),
    /// One entry per agent.
    PerAgent(Vec<AgentState>),
}

/// Complete parameterization of one simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Population size N.
    pub n_agents: usize,
    /// Active-set policy (m).
    pub active_policy: ActivePolicy,
    /// Trading periods per year (tau); used for annualization and for the
    /// per-period bond rate.
    pub periods_per_year: u32,
    /// Feedback rule parameters (alpha, beta).
    pub feedback: FeedbackParams,
    /// Gross annual return on bond accounts (r). Bond balances grow by
    /// `r^(1/periods_per_year)` each period.
    pub bond_rate: f64,
    /// Starting price per share (P0).
    pub initial_price: f64,
    /// Starting portfolios.
    pub initial_portfolio: InitialPortfolio,
    /// Relative bump applied to agent 0's target ratio when expanding a
    /// template population: the smallest change that breaks the no-trade
    /// fixed point. Ignored for per-agent portfolios.
    pub target_perturbation: f64,
    /// Per-period standard deviation of log-price noise applied between
    /// trading sessions; 0 disables.
    pub noise_sigma: f64,
    /// Global seed; expands into per-component streams.
    pub seed: u64,
    /// Number of periods to simulate.
    pub horizon_periods: usize,
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.n_agents < 2 {
            return Err(ConfigError::TooFewAgents(self.n_agents));
        }
        self.active_policy.validate(self.n_agents)?;
        if self.periods_per_year < 1 {
            return Err(ConfigError::InvalidPeriodsPerYear);
        }
        if !(self.initial_price > 0.0 && self.initial_price.is_finite()) {
            return Err(ConfigError::InvalidInitialPrice(self.initial_price));
        }
        if self.horizon_periods < 1 {
            return Err(ConfigError::InvalidHorizon);
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(ConfigError::InvalidNoiseSigma(self.noise_sigma));
        }
        if !(self.bond_rate > 0.0 && self.bond_rate.is_finite()) {
            return Err(ConfigError::InvalidBondRate(self.bond_rate));
        }
        if !(self.target_perturbation > -1.0 && self.target_perturbation.is_finite()) {
            return Err(ConfigError::InvalidPerturbation(self.target_perturbation));
        }
        FeedbackParams::new(self.feedback.alpha, self.feedback.beta)?;
        match &self.initial_portfolio {
            InitialPortfolio::Template(template) => {
                AgentState::new(
                    template.stock_value,
                    template.bond_value,
                    template.target_ratio,
                )
                .map_err(|e| ConfigError::InvalidInitialPortfolio(e.to_string()))?;
            }
            InitialPortfolio::PerAgent(list) => {
                if list.len() != self.n_agents {
                    return Err(ConfigError::PortfolioCountMismatch {
                        listed: list.len(),
                        n_agents: self.n_agents,
                    });
                }
                for a in list {
                    AgentState::new(a.stock_value, a.bond_value, a.target_ratio)
                        .map_err(|e| ConfigError::InvalidInitialPortfolio(e.to_string()))?;
                }
            }
        }
        Ok(())
    }

    /// Gross per-period rate applied to bond accounts: `r^(1/tau)`.
    pub fn per_period_bond_rate(&self) -> f64 {
        if self.bond_rate == 1.0 {
            1.0
        } else {
            self.bond_rate.powf(1.0 / f64::from(self.periods_per_year))
        }
    }

    /// Expands the configured portfolios into the starting population,
    /// applying the target perturbation to agent 0 for templates.
    pub fn initial_agents(&self) -> Vec<AgentState> {
        match &self.initial_portfolio {
            InitialPortfolio::Template(template) => {
                let mut agents = vec![*template; self.n_agents];
                agents[0].target_ratio *= 1.0 + self.target_perturbation;
                agents
            }
            InitialPortfolio::PerAgent(list) => list.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_config() -> ModelConfig {
        ModelConfig {
            n_agents: 500,
            active_policy: ActivePolicy::Fixed(10),
            periods_per_year: 100,
            feedback: FeedbackParams::new(3.01, 0.34).unwrap(),
            bond_rate: 1.0,
            initial_price: 1.0,
            initial_portfolio: InitialPortfolio::Template(
                AgentState::new(100.0, 300.0, 1.0 / 3.0).unwrap(),
            ),
            target_perturbation: 0.01,
            noise_sigma: 0.0,
            seed: 42,
            horizon_periods: 1000,
        }
    }

    #[test]
    fn valid_config_passes() {
        base_config().validate().unwrap();
    }

    #[test]
    fn active_policy_bounds_are_enforced() {
        let mut cfg = base_config();
        cfg.active_policy = ActivePolicy::Fixed(600);
        let err = cfg.validate().unwrap_err();
        assert_eq!(
            err,
            ConfigError::FixedActiveOutOfRange {
                m: 600,
                n_agents: 500
            }
        );
        // The message names both offending quantities.
        let text = err.to_string();
        assert!(text.contains("600") && text.contains("500"));

        cfg.active_policy = ActivePolicy::UniformRandom { min: 1, max: 10 };
        assert!(cfg.validate().is_err());
        cfg.active_policy = ActivePolicy::UniformRandom { min: 2, max: 501 };
        assert!(cfg.validate().is_err());
        cfg.active_policy = ActivePolicy::UniformRandom { min: 2, max: 50 };
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn zero_horizon_is_rejected() {
        let mut cfg = base_config();
        cfg.horizon_periods = 0;
        assert_eq!(cfg.validate(), Err(ConfigError::InvalidHorizon));
    }

    #[test]
    fn per_agent_list_must_match_population() {
        let mut cfg = base_config();
        cfg.initial_portfolio =
            InitialPortfolio::PerAgent(vec![AgentState::new(100.0, 300.0, 1.0 / 3.0).unwrap(); 3]);
        assert!(matches!(
            cfg.validate(),
            Err(ConfigError::PortfolioCountMismatch {
                listed: 3,
                n_agents: 500
            })
        ));
    }

    #[test]
    fn template_expansion_perturbs_first_agent_only() {
        let cfg = base_config();
        let agents = cfg.initial_agents();
        assert_eq!(agents.len(), 500);
        assert!((agents[0].target_ratio - (1.0 / 3.0) * 1.01).abs() < 1e-15);
        for a in &agents[1..] {
            assert_eq!(a.target_ratio, 1.0 / 3.0);
        }
    }

    #[test]
    fn per_period_bond_rate_is_annual_root() {
        let mut cfg = base_config();
        assert_eq!(cfg.per_period_bond_rate(), 1.0);
        cfg.bond_rate = 1.03;
        let rho = cfg.per_period_bond_rate();
        assert!((rho.powi(100) - 1.03).abs() < 1e-12);
    }
}
