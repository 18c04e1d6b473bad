//! Simulator for hosting a service at an edge server under rent, service and
//! fetch costs, with online hosting policies, offline benchmarks and a
//! config-driven experiment runner.

pub mod arrivals;
pub mod bounds;
pub mod metrics;
pub mod model;
pub mod oracles;
pub mod policies;
pub mod report;
pub mod runner;

pub use arrivals::{ArrivalSpec, ClipPolicy, FrameMode};
pub use model::{
    ArrivalSequence, CostBreakdown, CostParams, HostingLadder, HostingSchedule, Level, RunRecord,
};
pub use policies::{
    AlphaRetroRenting, EtaSchedule, FollowPerturbedLeader, HostingPolicy, StaticLevel, WaitThenFtpl,
};
pub use runner::{run_experiment, ExperimentConfig, ModelConfig};
