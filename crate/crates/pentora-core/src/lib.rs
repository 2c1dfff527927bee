//! Autonomous web penetration-testing engine.
//!
//! The engine runs one assessment per *job*: an LLM-driven coordinator agent
//! probes an HTTP target from inside a fresh per-job container, optionally
//! delegating to sandbox agents that share the same container, and every
//! candidate exploit must survive proof-of-concept validation before it is
//! reported as a finding. A per-job usage tracker meters tokens, tool calls,
//! dollar cost and wall clock, and enforces early-stopping budgets.
//!
//! Module map:
//!
//! - [`domain`]: shared vocabulary (jobs, findings, evidence, verdicts)
//! - [`gateway`]: provider-agnostic chat completion with tool calling
//! - [`sandbox`]: per-job container lifecycle and in-container execution
//! - [`agents`]: the three agent loops and the job controller
//! - [`accounting`]: usage tracking, cost computation, stop policies
//! - [`bench`]: challenge suite harness, grading, and result statistics
//! - [`reporting`]: alert/mail tool clients and report synthesis
//! - [`store`]: on-disk layout of per-job run directories
//! - [`clock`]: real and virtual time sources
//! - [`config`]: run configuration shared by the CLI and the harness

pub mod accounting;
pub mod agents;
pub mod bench;
pub mod clock;
pub mod config;
pub mod domain;
pub mod gateway;
pub mod reporting;
pub mod sandbox;
pub mod store;

pub use accounting::{CostModel, StopDecision, StopPolicy, UsageRecord, UsageTracker};
pub use clock::{Clock, SystemClock, VirtualClock};
pub use domain::{Job, JobEvent, JobMode, JobState, StopReason};
pub use gateway::{ChatMessage, Provider, ProviderResponse, TokenUsage, ToolCall};
