//! Shared benchmark fixtures.

use bubblelab_core::{ActivePolicy, AgentState, FeedbackParams, InitialPortfolio, ModelConfig};

/// The multi-agent baseline used by the benchmarks.
pub fn bench_config(n_agents: usize, active: usize, horizon: usize) -> ModelConfig {
    ModelConfig {
        n_agents,
        active_policy: ActivePolicy::Fixed(active),
        periods_per_year: 100,
        feedback: FeedbackParams::new(3.01, 0.34).expect("bench feedback"),
        bond_rate: 1.0,
        initial_price: 1.0,
        initial_portfolio: InitialPortfolio::Template(AgentState {
            stock_value: 100.0,
            bond_value: 300.0,
            target_ratio: 1.0 / 3.0,
        }),
        target_perturbation: 0.01,
        noise_sigma: 0.0,
        seed: 42,
        horizon_periods: horizon,
    }
}

/// A population spread over a range of portfolio shapes.
pub fn mixed_population(n: usize) -> Vec<AgentState> {
    (0..n)
        .map(|i| {
            let phase = (i % 17) as f64;
            AgentState {
                stock_value: 50.0 + 10.0 * phase,
                bond_value: 250.0 + 5.0 * phase,
                target_ratio: 0.2 + 0.05 * phase,
            }
        })
        .collect()
}
