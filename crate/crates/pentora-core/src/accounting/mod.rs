//! Per-scan usage tracking, cost computation, and early-stopping budgets.
//!
//! Every job owns one [`UsageTracker`]: a concurrency-safe accumulator of
//! token counts by class, tool-call tallies, command frequencies, tool
//! latencies and wall clock. Dollar cost is computed in integer nanodollars
//! so that per-job costs add up exactly to suite totals; display rounds to
//! four decimal places.

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::clock::{Clock, TimestampMs};
use crate::gateway::TokenUsage;

// ---------------------------------------------------------------------------
// Usage records
// ---------------------------------------------------------------------------

/// Point-in-time copy of a job's resource consumption.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct UsageRecord {
    pub regular_input_tokens: u64,
    pub cached_tokens: u64,
    pub output_tokens: u64,
    pub reasoning_tokens: u64,
    /// Dispatch count per tool name.
    pub tool_calls: BTreeMap<String, u64>,
    /// Execution count per command binary (first token, paths and
    /// sudo/env prefixes stripped).
    pub command_frequency: BTreeMap<String, u64>,
    pub tool_latencies_ms: Vec<u64>,
    pub wall_start_ms: TimestampMs,
    pub wall_now_ms: TimestampMs,
    /// Last time a controller gate was newly satisfied; soft-time stops fire
    /// only after a progress-free window.
    pub last_progress_ms: TimestampMs,
}

impl UsageRecord {
    pub fn total_tool_calls(&self) -> u64 {
        self.tool_calls.values().sum()
    }

    pub fn total_commands(&self) -> u64 {
        self.command_frequency.values().sum()
    }

    /// Total billed tokens. Reasoning tokens are a subset of output and are
    /// not added again.
    pub fn total_tokens(&self) -> u64 {
        self.regular_input_tokens + self.cached_tokens + self.output_tokens
    }

    pub fn elapsed_ms(&self) -> i64 {
        (self.wall_now_ms - self.wall_start_ms).max(0)
    }

    pub fn wall_seconds(&self) -> f64 {
        self.elapsed_ms() as f64 / 1000.0
    }

    /// Field-wise sum of two records, used for suite-level reconciliation.
    pub fn merged(&self, other: &UsageRecord) -> UsageRecord {
        let mut out = self.clone();
        out.regular_input_tokens += other.regular_input_tokens;
        out.cached_tokens += other.cached_tokens;
        out.output_tokens += other.output_tokens;
        out.reasoning_tokens += other.reasoning_tokens;
        for (name, count) in &other.tool_calls {
            *out.tool_calls.entry(name.clone()).or_default() += count;
        }
        for (bin, count) in &other.command_frequency {
            *out.command_frequency.entry(bin.clone()).or_default() += count;
        }
        out.tool_latencies_ms
            .extend_from_slice(&other.tool_latencies_ms);
        out.wall_start_ms = out.wall_start_ms.min(other.wall_start_ms);
        out.wall_now_ms = out.wall_now_ms.max(other.wall_now_ms);
        out.last_progress_ms = out.last_progress_ms.max(other.last_progress_ms);
        out
    }
}

// ---------------------------------------------------------------------------
// Cost model
// ---------------------------------------------------------------------------

/// Token prices in dollars per million tokens.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    pub input_rate: f64,
    pub output_rate: f64,
    pub cached_rate: f64,
}

impl Default for CostModel {
    fn default() -> Self {
        Self {
            input_rate: 1.25,
            output_rate: 10.00,
            cached_rate: 0.125,
        }
    }
}

impl CostModel {
    pub fn validate(&self) -> Result<(), String> {
        for (name, rate) in [
            ("input_rate", self.input_rate),
            ("output_rate", self.output_rate),
            ("cached_rate", self.cached_rate),
        ] {
            if !rate.is_finite() || rate < 0.0 {
                return Err(format!("{name} must be a non-negative finite number"));
            }
        }
        Ok(())
    }

    /// Dollars-per-1M-tokens is exactly nanodollars-per-token × 1000.
    fn nanos_per_token(rate_per_million: f64) -> u128 {
        (rate_per_million * 1000.0).round() as u128
    }
}

/// Exact dollar amount in integer nanodollars.
///
/// Addition over costs is associative and lossless, which makes per-job
/// costs reconcile exactly against the cost of the summed usage record.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cost {
    pub nanos: u128,
}

impl Cost {
    pub fn from_dollars(dollars: f64) -> Self {
        Self {
            nanos: (dollars.max(0.0) * 1e9).round() as u128,
        }
    }

    pub fn dollars(&self) -> f64 {
        self.nanos as f64 / 1e9
    }

    /// Display value, rounded to 4 decimal places.
    pub fn rounded_dollars(&self) -> f64 {
        (self.dollars() * 10_000.0).round() / 10_000.0
    }
}

impl std::ops::Add for Cost {
    type Output = Cost;
    fn add(self, rhs: Cost) -> Cost {
        Cost {
            nanos: self.nanos + rhs.nanos,
        }
    }
}

impl std::iter::Sum for Cost {
    fn sum<I: Iterator<Item = Cost>>(iter: I) -> Cost {
        iter.fold(Cost::default(), |a, b| a + b)
    }
}

impl std::fmt::Display for Cost {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "${:.4}", self.rounded_dollars())
    }
}

/// regular·input_rate + cached·cached_rate + output·output_rate, per million
/// tokens. Reasoning tokens are billed inside the output class and carry no
/// separate rate.
pub fn compute_cost(record: &UsageRecord, model: &CostModel) -> Cost {
    let nanos = record.regular_input_tokens as u128 * CostModel::nanos_per_token(model.input_rate)
        + record.cached_tokens as u128 * CostModel::nanos_per_token(model.cached_rate)
        + record.output_tokens as u128 * CostModel::nanos_per_token(model.output_rate);
    Cost { nanos }
}

// ---------------------------------------------------------------------------
// Stop policy
// ---------------------------------------------------------------------------

/// Why a job loop ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// A proof of concept passed validation.
    Validated,
    ToolCalls,
    Cost,
    SoftTime,
    HardTime,
    /// The bounded global retry loop ran out of attempts.
    AttemptsExhausted,
    /// Per-agent safety valve when every budget threshold is disabled.
    StepLimit,
    ProviderFailure,
    /// Target or container could not be provisioned; excluded from
    /// success-rate statistics.
    Infrastructure,
}

impl StopReason {
    pub fn label(&self) -> &'static str {
        match self {
            StopReason::Validated => "validated",
            StopReason::ToolCalls => "tool_calls",
            StopReason::Cost => "cost",
            StopReason::SoftTime => "soft_time",
            StopReason::HardTime => "hard_time",
            StopReason::AttemptsExhausted => "attempts_exhausted",
            StopReason::StepLimit => "step_limit",
            StopReason::ProviderFailure => "provider_failure",
            StopReason::Infrastructure => "infrastructure",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StopFlags {
    pub tool_calls: bool,
    pub cost: bool,
    pub soft_time: bool,
    pub hard_time: bool,
}

impl Default for StopFlags {
    fn default() -> Self {
        Self {
            tool_calls: true,
            cost: true,
            soft_time: true,
            hard_time: true,
        }
    }
}

/// Budget caps for one job.
///
/// Defaults: 40 tool calls, $0.30, 300 s soft wall (requiring a 120 s
/// progress-free window), 1500 s hard wall.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StopPolicy {
    pub max_tool_calls: u64,
    pub max_cost: f64,
    pub max_wall_secs: u64,
    pub hard_time_cap_secs: u64,
    #[serde(default)]
    pub enabled: StopFlags,
}

/// Soft-time stops require this much time without a newly satisfied gate.
pub const PROGRESS_WINDOW_SECS: u64 = 120;

impl Default for StopPolicy {
    fn default() -> Self {
        Self {
            max_tool_calls: 40,
            max_cost: 0.30,
            max_wall_secs: 300,
            hard_time_cap_secs: 1500,
            enabled: StopFlags::default(),
        }
    }
}

impl StopPolicy {
    pub fn validate(&self) -> Result<(), String> {
        if self.enabled.tool_calls && self.max_tool_calls == 0 {
            return Err("max_tool_calls must be positive when enabled".into());
        }
        if self.enabled.cost && !(self.max_cost.is_finite() && self.max_cost > 0.0) {
            return Err("max_cost must be a positive finite number when enabled".into());
        }
        if self.enabled.soft_time && self.max_wall_secs == 0 {
            return Err("max_wall_secs must be positive when enabled".into());
        }
        if self.enabled.hard_time {
            if self.hard_time_cap_secs == 0 {
                return Err("hard_time_cap_secs must be positive when enabled".into());
            }
            if self.enabled.soft_time && self.hard_time_cap_secs < self.max_wall_secs {
                return Err("hard_time_cap_secs must be >= max_wall_secs".into());
            }
        }
        Ok(())
    }

    pub fn disabled() -> Self {
        Self {
            enabled: StopFlags {
                tool_calls: false,
                cost: false,
                soft_time: false,
                hard_time: false,
            },
            ..Self::default()
        }
    }

    /// Enable only the tool-call cap.
    pub fn only_tool_calls(max: u64) -> Self {
        let mut policy = Self::disabled();
        policy.max_tool_calls = max;
        policy.enabled.tool_calls = true;
        policy
    }

    /// Enable only the cost cap.
    pub fn only_cost(max_dollars: f64) -> Self {
        let mut policy = Self::disabled();
        policy.max_cost = max_dollars;
        policy.enabled.cost = true;
        policy
    }

    /// Enable only the soft wall-clock cap.
    pub fn only_soft_time(max_secs: u64) -> Self {
        let mut policy = Self::disabled();
        policy.max_wall_secs = max_secs;
        policy.enabled.soft_time = true;
        policy
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopDecision {
    Continue,
    Stop(StopReason),
}

impl StopDecision {
    pub fn should_stop(&self) -> bool {
        matches!(self, StopDecision::Stop(_))
    }
}

/// Evaluate the stop policy against a usage snapshot.
///
/// Breach order is fixed so stop reasons are deterministic: validated,
/// hard time, tool calls, cost, soft time. Tool calls breach at the cap
/// ("40+ calls"), cost breaches strictly above the cap ("surpasses $0.30"),
/// and the soft wall fires only after [`PROGRESS_WINDOW_SECS`] without a
/// newly satisfied gate.
pub fn should_stop(
    record: &UsageRecord,
    policy: &StopPolicy,
    model: &CostModel,
    has_validated: bool,
) -> StopDecision {
    if has_validated {
        return StopDecision::Stop(StopReason::Validated);
    }
    let elapsed_ms = record.elapsed_ms();
    if policy.enabled.hard_time && elapsed_ms >= policy.hard_time_cap_secs as i64 * 1000 {
        return StopDecision::Stop(StopReason::HardTime);
    }
    if policy.enabled.tool_calls && record.total_tool_calls() >= policy.max_tool_calls {
        return StopDecision::Stop(StopReason::ToolCalls);
    }
    if policy.enabled.cost && compute_cost(record, model) > Cost::from_dollars(policy.max_cost) {
        return StopDecision::Stop(StopReason::Cost);
    }
    if policy.enabled.soft_time && elapsed_ms >= policy.max_wall_secs as i64 * 1000 {
        let idle_ms = record.wall_now_ms - record.last_progress_ms;
        if idle_ms >= PROGRESS_WINDOW_SECS as i64 * 1000 {
            return StopDecision::Stop(StopReason::SoftTime);
        }
    }
    StopDecision::Continue
}

// ---------------------------------------------------------------------------
// Tracker
// ---------------------------------------------------------------------------

/// Shared per-job accumulator. All mutation happens under one lock so that
/// snapshots are consistent and concurrent recorders stay additive.
pub struct UsageTracker {
    inner: Mutex<UsageRecord>,
    clock: Arc<dyn Clock>,
}

impl UsageTracker {
    pub fn new(clock: Arc<dyn Clock>) -> Self {
        let now = clock.now_ms();
        let record = UsageRecord {
            wall_start_ms: now,
            wall_now_ms: now,
            last_progress_ms: now,
            ..UsageRecord::default()
        };
        Self {
            inner: Mutex::new(record),
            clock,
        }
    }

    pub fn record_llm(&self, usage: &TokenUsage) {
        let mut record = self.inner.lock().unwrap();
        record.regular_input_tokens += usage.regular_input;
        record.cached_tokens += usage.cached_input;
        record.output_tokens += usage.output;
        record.reasoning_tokens += usage.reasoning;
    }

    pub fn record_tool(&self, name: &str, latency: Duration) {
        let mut record = self.inner.lock().unwrap();
        *record.tool_calls.entry(name.to_string()).or_default() += 1;
        record.tool_latencies_ms.push(latency.as_millis() as u64);
    }

    /// Bin a `run_command` invocation by its command binary.
    pub fn record_command(&self, command_line: &str) {
        let bin = bin_command(command_line);
        let mut record = self.inner.lock().unwrap();
        *record.command_frequency.entry(bin).or_default() += 1;
    }

    /// Note that a controller gate was newly satisfied.
    pub fn note_progress(&self) {
        let now = self.clock.now_ms();
        let mut record = self.inner.lock().unwrap();
        record.last_progress_ms = record.last_progress_ms.max(now);
    }

    pub fn total_tool_calls(&self) -> u64 {
        self.inner.lock().unwrap().total_tool_calls()
    }

    /// Consistent point-in-time copy with the wall clock refreshed.
    pub fn snapshot(&self) -> UsageRecord {
        let now = self.clock.now_ms();
        let mut record = self.inner.lock().unwrap().clone();
        record.wall_now_ms = record.wall_now_ms.max(now).max(record.wall_start_ms);
        record
    }
}

/// Extract the command binary from a shell line: skip `sudo`/`env` and
/// KEY=VAL assignments, then strip any path prefix from the first token.
pub fn bin_command(command_line: &str) -> String {
    for token in command_line.split_whitespace() {
        if token == "sudo" || token == "env" || token.contains('=') {
            continue;
        }
        return token.rsplit('/').next().unwrap_or(token).to_string();
    }
    "(empty)".to_string()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clock::VirtualClock;

    fn record_with_tokens(regular: u64, cached: u64, output: u64) -> UsageRecord {
        UsageRecord {
            regular_input_tokens: regular,
            cached_tokens: cached,
            output_tokens: output,
            ..UsageRecord::default()
        }
    }

    #[test]
    fn benchmark_token_totals_cost_reconciles() {
        // Known totals over a 104-challenge evaluation: $21.38 with the
        // default price card, $0.206 average per challenge.
        let record = record_with_tokens(3_244_880, 50_524_032, 1_100_790);
        let cost = compute_cost(&record, &CostModel::default());
        assert!(
            (cost.dollars() - 21.38).abs() <= 0.01,
            "got {}",
            cost.dollars()
        );
        assert!((cost.dollars() / 104.0 - 0.206).abs() <= 0.001);
    }

    #[test]
    fn one_million_input_tokens_cost_a_dollar_twenty_five() {
        let record = record_with_tokens(1_000_000, 0, 0);
        let cost = compute_cost(&record, &CostModel::default());
        assert_eq!(cost.nanos, 1_250_000_000);
        assert_eq!(cost.dollars(), 1.25);
    }

    #[test]
    fn zero_usage_costs_nothing() {
        let cost = compute_cost(&UsageRecord::default(), &CostModel::default());
        assert_eq!(cost.nanos, 0);
    }

    #[test]
    fn cost_addition_is_exact() {
        let model = CostModel::default();
        let a = record_with_tokens(123_456, 789_012, 34_567);
        let b = record_with_tokens(7, 1_000_003, 999_999);
        let sum = compute_cost(&a, &model) + compute_cost(&b, &model);
        assert_eq!(sum, compute_cost(&a.merged(&b), &model));
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            /// compute_cost(a) + compute_cost(b) == compute_cost(a ⊕ b)
            /// exactly, for any two records and any non-negative rate card.
            #[test]
            fn cost_is_exactly_additive(
                a_reg in 0u64..10_000_000, a_cached in 0u64..100_000_000, a_out in 0u64..10_000_000,
                b_reg in 0u64..10_000_000, b_cached in 0u64..100_000_000, b_out in 0u64..10_000_000,
                in_rate in 0.0f64..50.0, out_rate in 0.0f64..50.0, cached_rate in 0.0f64..5.0,
            ) {
                let model = CostModel { input_rate: in_rate, output_rate: out_rate, cached_rate };
                let a = record_with_tokens(a_reg, a_cached, a_out);
                let b = record_with_tokens(b_reg, b_cached, b_out);
                let sum = compute_cost(&a, &model) + compute_cost(&b, &model);
                prop_assert_eq!(sum, compute_cost(&a.merged(&b), &model));
            }
        }
    }

    #[test]
    fn per_job_costs_reconcile_to_the_suite_total() {
        let model = CostModel::default();
        let jobs: Vec<UsageRecord> = (0..37u64)
            .map(|i| record_with_tokens(31_000 + 917 * i, 480_000 + 13 * i * i, 9_000 + 7 * i))
            .collect();
        let summed: Cost = jobs.iter().map(|r| compute_cost(r, &model)).sum();
        let merged = jobs
            .iter()
            .fold(UsageRecord::default(), |acc, r| acc.merged(r));
        assert_eq!(summed, compute_cost(&merged, &model));
    }

    #[test]
    fn concurrent_records_are_additive() {
        let tracker = Arc::new(UsageTracker::new(Arc::new(VirtualClock::new())));
        let handles: Vec<_> = (0..2)
            .map(|_| {
                let tracker = Arc::clone(&tracker);
                std::thread::spawn(move || {
                    tracker.record_llm(&TokenUsage {
                        output: 100,
                        ..TokenUsage::default()
                    });
                })
            })
            .collect();
        for handle in handles {
            handle.join().unwrap();
        }
        assert_eq!(tracker.snapshot().output_tokens, 200);
    }

    #[test]
    fn zero_usage_record_leaves_counters_unchanged() {
        let tracker = UsageTracker::new(Arc::new(VirtualClock::new()));
        tracker.record_llm(&TokenUsage::zero());
        let snap = tracker.snapshot();
        assert_eq!(snap.total_tokens(), 0);
        assert_eq!(snap.reasoning_tokens, 0);
    }

    #[test]
    fn thousand_concurrent_records_match_sequential_replay() {
        // Oracle: sequential replay of the same 1000 one-token events.
        let sequential = {
            let tracker = UsageTracker::new(Arc::new(VirtualClock::new()));
            for _ in 0..1000 {
                tracker.record_llm(&TokenUsage {
                    output: 1,
                    ..TokenUsage::default()
                });
            }
            tracker.snapshot().output_tokens
        };

        let tracker = Arc::new(UsageTracker::new(Arc::new(VirtualClock::new())));
        let handles: Vec<_> = (0..8)
            .map(|_| {
                let tracker = Arc::clone(&tracker);
                std::thread::spawn(move || {
                    for _ in 0..125 {
                        tracker.record_llm(&TokenUsage {
                            output: 1,
                            ..TokenUsage::default()
                        });
                    }
                })
            })
            .collect();
        for handle in handles {
            handle.join().unwrap();
        }
        assert_eq!(tracker.snapshot().output_tokens, sequential);
        assert_eq!(sequential, 1000);
    }

    #[test]
    fn snapshots_are_monotone() {
        let clock = Arc::new(VirtualClock::new());
        let tracker = UsageTracker::new(clock.clone());
        let first = tracker.snapshot();
        tracker.record_llm(&TokenUsage {
            regular_input: 5,
            ..TokenUsage::default()
        });
        clock.advance_ms(10);
        let second = tracker.snapshot();
        assert!(second.regular_input_tokens >= first.regular_input_tokens);
        assert!(second.wall_now_ms >= first.wall_now_ms);

        let third = tracker.snapshot();
        assert_eq!(third.regular_input_tokens, second.regular_input_tokens);
    }

    #[test]
    fn stop_fires_on_tool_cap() {
        let mut record = UsageRecord::default();
        record.tool_calls.insert("run_command".into(), 41);
        let decision = should_stop(
            &record,
            &StopPolicy::default(),
            &CostModel::default(),
            false,
        );
        assert_eq!(decision, StopDecision::Stop(StopReason::ToolCalls));
    }

    #[test]
    fn stop_fires_on_cost() {
        let mut record = record_with_tokens(0, 0, 31_000); // $0.31 at $10/1M
        record.tool_calls.insert("run_command".into(), 10);
        let decision = should_stop(
            &record,
            &StopPolicy::default(),
            &CostModel::default(),
            false,
        );
        assert_eq!(decision, StopDecision::Stop(StopReason::Cost));
    }

    #[test]
    fn exact_cost_cap_is_not_a_breach() {
        let record = record_with_tokens(0, 0, 30_000); // exactly $0.30
        let decision = should_stop(
            &record,
            &StopPolicy::only_cost(0.30),
            &CostModel::default(),
            false,
        );
        assert_eq!(decision, StopDecision::Continue);
    }

    #[test]
    fn fresh_tracker_continues() {
        let tracker = UsageTracker::new(Arc::new(VirtualClock::new()));
        let decision = should_stop(
            &tracker.snapshot(),
            &StopPolicy::default(),
            &CostModel::default(),
            false,
        );
        assert_eq!(decision, StopDecision::Continue);
    }

    #[test]
    fn validated_wins_over_every_breach() {
        let mut record = record_with_tokens(0, 0, 10_000_000);
        record.tool_calls.insert("run_command".into(), 500);
        let decision = should_stop(&record, &StopPolicy::default(), &CostModel::default(), true);
        assert_eq!(decision, StopDecision::Stop(StopReason::Validated));
    }

    #[test]
    fn breach_order_is_hard_time_tools_cost_soft_time() {
        let mut record = record_with_tokens(0, 0, 10_000_000);
        record.tool_calls.insert("run_command".into(), 500);
        record.wall_now_ms = 1_500_000; // 1500 s
        let model = CostModel::default();
        let decision = should_stop(&record, &StopPolicy::default(), &model, false);
        assert_eq!(decision, StopDecision::Stop(StopReason::HardTime));

        record.wall_now_ms = 400_000;
        let decision = should_stop(&record, &StopPolicy::default(), &model, false);
        assert_eq!(decision, StopDecision::Stop(StopReason::ToolCalls));

        record.tool_calls.clear();
        let decision = should_stop(&record, &StopPolicy::default(), &model, false);
        assert_eq!(decision, StopDecision::Stop(StopReason::Cost));

        record.output_tokens = 0;
        let decision = should_stop(&record, &StopPolicy::default(), &model, false);
        assert_eq!(decision, StopDecision::Stop(StopReason::SoftTime));
    }

    #[test]
    fn soft_time_needs_a_progress_free_window() {
        let mut record = UsageRecord {
            wall_now_ms: 310_000,
            last_progress_ms: 250_000, // progressed 60 s ago
            ..UsageRecord::default()
        };
        let policy = StopPolicy::only_soft_time(300);
        let model = CostModel::default();
        assert_eq!(
            should_stop(&record, &policy, &model, false),
            StopDecision::Continue
        );

        record.last_progress_ms = 150_000; // idle for 160 s
        assert_eq!(
            should_stop(&record, &policy, &model, false),
            StopDecision::Stop(StopReason::SoftTime)
        );
    }

    #[test]
    fn policy_validation_rejects_bad_thresholds() {
        let zero_cost = StopPolicy {
            max_cost: 0.0,
            ..StopPolicy::default()
        };
        assert!(zero_cost.validate().is_err());

        let hard_below_soft = StopPolicy {
            hard_time_cap_secs: 10,
            ..StopPolicy::default()
        };
        assert!(hard_below_soft.validate().is_err());

        assert!(StopPolicy::default().validate().is_ok());
        assert!(StopPolicy::disabled().validate().is_ok());
    }

    #[test]
    fn command_binning_strips_paths_and_wrappers() {
        assert_eq!(bin_command("curl -s http://x/"), "curl");
        assert_eq!(bin_command("/usr/bin/python3 exploit.py"), "python3");
        assert_eq!(bin_command("sudo nmap -p80 host"), "nmap");
        assert_eq!(bin_command("env FOO=1 bash -c 'id'"), "bash");
        assert_eq!(bin_command("FOO=1 ./run.sh"), "run.sh");
        assert_eq!(bin_command("   "), "(empty)");
    }

    #[test]
    fn progress_note_updates_snapshot() {
        let clock = Arc::new(VirtualClock::new());
        let tracker = UsageTracker::new(clock.clone());
        clock.advance_ms(5_000);
        tracker.note_progress();
        assert_eq!(tracker.snapshot().last_progress_ms, 5_000);
    }
}
