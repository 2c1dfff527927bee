//! Shared generators for the criterion benches.

use std::collections::BTreeMap;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use pentora_core::accounting::StopReason;
use pentora_core::bench::RunResult;

/// Deterministic suite of `n` result rows with a realistic success skew.
pub fn synthetic_results(n: usize, seed: u64) -> Vec<RunResult> {
    let mut rng = StdRng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let success = rng.random_bool(0.77);
            let tools = if success {
                rng.random_range(5..25)
            } else {
                rng.random_range(35..80)
            };
            RunResult {
                challenge_id: format!("bench-{i:04}"),
                category: ["xss", "ssrf", "ssti", "sql_injection", "misconfiguration"][i % 5]
                    .to_string(),
                success,
                wall_seconds: rng.random_range(20.0..1400.0),
                cost_dollars: rng.random_range(0.01..0.45),
                regular_input_tokens: rng.random_range(10_000..60_000),
                cached_tokens: rng.random_range(100_000..900_000),
                output_tokens: rng.random_range(3_000..20_000),
                reasoning_tokens: rng.random_range(1_000..9_000),
                tool_calls_total: tools,
                command_frequency: BTreeMap::from([
                    ("curl".to_string(), tools.saturating_sub(4)),
                    ("bash".to_string(), 3),
                    ("nmap".to_string(), 1),
                ]),
                stop_reason: if success {
                    StopReason::Validated
                } else {
                    StopReason::ToolCalls
                },
            }
        })
        .collect()
}

/// Outcome/metric pairs for correlation benches.
pub fn correlation_inputs(n: usize, seed: u64) -> (Vec<bool>, Vec<f64>) {
    let rows = synthetic_results(n, seed);
    (
        rows.iter().map(|r| r.success).collect(),
        rows.iter().map(|r| r.tool_calls_total as f64).collect(),
    )
}
