//! The TOML configuration document. Every field is optional with a
//! documented default; unknown keys are rejected so typos surface at load
//! time instead of silently running the defaults.

use serde::Deserialize;

use bubblelab_core::experiments::ConfigOverrides;
use bubblelab_core::{ActivePolicy, AgentState, InitialPortfolio, ModelConfig};

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CliConfig {
    /// Global seed; expands into per-component randomness streams.
    pub seed: Option<u64>,
    /// Output directory; overridden by BUBBLELAB_OUT and by --out.
    pub output_dir: Option<String>,
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub sweep: SweepSection,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    /// Population size N (default 500).
    pub n_agents: Option<usize>,
    /// Active-set policy (default fixed 10).
    pub active: Option<ActiveSection>,
    /// Trading periods per year tau (default 100).
    pub periods_per_year: Option<u32>,
    /// Feedback multiplier after a better-than-expected period (default 3.01).
    pub alpha: Option<f64>,
    /// Feedback multiplier after a worse-than-expected period (default 0.34).
    pub beta: Option<f64>,
    /// Gross annual return on bond accounts (default 1.0).
    pub bond_rate: Option<f64>,
    /// Starting price per share (default 1.0).
    pub initial_price: Option<f64>,
    /// Starting stock value per agent (default 100).
    pub initial_stock: Option<f64>,
    /// Starting bond value per agent (default 300).
    pub initial_bond: Option<f64>,
    /// Starting target ratio (default stock/bond).
    pub initial_target: Option<f64>,
    /// Relative bump on agent 0's target ratio (default 0.01).
    pub target_perturbation: Option<f64>,
    /// Per-period log-price noise between sessions (default 0).
    pub noise_sigma: Option<f64>,
    /// Periods to simulate (default 2000).
    pub horizon_periods: Option<usize>,
}

/// Either `{ fixed = m }` or `{ min = a, max = b }`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActiveSection {
    pub fixed: Option<usize>,
    pub min: Option<usize>,
    pub max: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    /// Number of (alpha, beta) cells (default 1000).
    pub cells: Option<usize>,
    /// Replicate runs per cell (default 1).
    pub seeds_per_cell: Option<u32>,
    /// Active counts to sweep (default [10, 50]).
    pub active_counts: Option<Vec<usize>>,
    /// Periods per cell (default 500).
    pub cell_periods: Option<usize>,
    pub alpha_min: Option<f64>,
    pub alpha_max: Option<f64>,
    pub beta_min: Option<f64>,
    pub beta_max: Option<f64>,
}

impl CliConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    /// The overrides this document expresses, for experiment runs.
    pub fn overrides(&self) -> Result<ConfigOverrides, String> {
        let mut overrides = ConfigOverrides {
            n_agents: self.model.n_agents,
            periods_per_year: self.model.periods_per_year,
            alpha: self.model.alpha,
            beta: self.model.beta,
            bond_rate: self.model.bond_rate,
            initial_price: self.model.initial_price,
            initial_stock: self.model.initial_stock,
            initial_bond: self.model.initial_bond,
            initial_target: self.model.initial_target,
            target_perturbation: self.model.target_perturbation,
            noise_sigma: self.model.noise_sigma,
            horizon_periods: self.model.horizon_periods,
            sweep_cells: self.sweep.cells,
            seeds_per_cell: self.sweep.seeds_per_cell,
            ..Default::default()
        };
        if let Some(active) = &self.model.active {
            match (active.fixed, active.min, active.max) {
                (Some(m), None, None) => overrides.active_fixed = Some(m),
                (None, Some(min), Some(max)) => overrides.active_uniform = Some((min, max)),
                _ => {
                    return Err(
                        "model.active: use either { fixed = m } or { min = a, max = b }"
                            .to_string(),
                    )
                }
            }
        }
        Ok(overrides)
    }

    /// A full model configuration: documented defaults, then this
    /// document's fields, then validation.
    pub fn model_config(&self, seed: u64) -> Result<ModelConfig, String> {
        let defaults = ModelConfig {
            n_agents: 500,
            active_policy: ActivePolicy::Fixed(10),
            periods_per_year: 100,
            feedback: bubblelab_core::FeedbackParams::new(3.01, 0.34).expect("default feedback"),
            bond_rate: 1.0,
            initial_price: 1.0,
            initial_portfolio: InitialPortfolio::Template(AgentState {
                stock_value: 100.0,
                bond_value: 300.0,
                target_ratio: 1.0 / 3.0,
            }),
            target_perturbation: 0.01,
            noise_sigma: 0.0,
            seed,
            horizon_periods: 2000,
        };
        let config = self.overrides()?.apply(defaults);
        config.validate().map_err(|e| e.to_string())?;
        Ok(config)
    }
}
