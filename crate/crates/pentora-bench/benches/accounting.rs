use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;
use std::sync::Arc;

use pentora_core::accounting::{
    bin_command, compute_cost, should_stop, CostModel, StopPolicy, UsageRecord, UsageTracker,
};
use pentora_core::clock::VirtualClock;
use pentora_core::gateway::TokenUsage;

fn benchmark_totals() -> UsageRecord {
    UsageRecord {
        regular_input_tokens: 3_244_880,
        cached_tokens: 50_524_032,
        output_tokens: 1_100_790,
        reasoning_tokens: 594_880,
        ..UsageRecord::default()
    }
}

fn bench_compute_cost(c: &mut Criterion) {
    let record = benchmark_totals();
    let model = CostModel::default();
    c.bench_function("compute_cost/suite_totals", |b| {
        b.iter(|| compute_cost(black_box(&record), black_box(&model)))
    });
}

fn bench_should_stop(c: &mut Criterion) {
    let mut record = benchmark_totals();
    record.tool_calls.insert("run_command".into(), 38);
    record.wall_now_ms = 250_000;
    let policy = StopPolicy::default();
    let model = CostModel::default();
    c.bench_function("should_stop/near_thresholds", |b| {
        b.iter(|| {
            should_stop(
                black_box(&record),
                black_box(&policy),
                black_box(&model),
                false,
            )
        })
    });
}

fn bench_tracker_snapshot(c: &mut Criterion) {
    let tracker = UsageTracker::new(Arc::new(VirtualClock::new()));
    for i in 0..500 {
        tracker.record_llm(&TokenUsage {
            regular_input: 100 + i,
            cached_input: 900,
            output: 80,
            reasoning: 20,
        });
        tracker.record_tool("run_command", std::time::Duration::from_millis(5));
        tracker.record_command("curl -s http://target/");
    }
    c.bench_function("tracker/snapshot_after_500_events", |b| {
        b.iter(|| tracker.snapshot())
    });
}

fn bench_bin_command(c: &mut Criterion) {
    c.bench_function("bin_command/wrapped_path", |b| {
        b.iter(|| {
            bin_command(black_box(
                "sudo env FOO=1 /usr/local/bin/python3 -c 'print(1)'",
            ))
        })
    });
}

criterion_group!(
    benches,
    bench_compute_cost,
    bench_should_stop,
    bench_tracker_snapshot,
    bench_bin_command
);
criterion_main!(benches);
