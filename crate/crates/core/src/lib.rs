//! Schedule reconstruction for time-triggered distributed systems.
//!
//! Tasks of a DAG-shaped application are placed on end systems connected
//! by routed links, following temporal and spatial priorities. Schedules can
//! be recovered after slack, end-system failures and mode changes.

pub mod bench;
pub mod context;
pub mod error;
pub mod evaluator;
pub mod ids;
pub mod models;
pub mod priorities;
pub mod reconstructor;
mod text;
pub mod workload;

pub use context::{
    apply_events, apply_failure, apply_mode, apply_slack, parse_context, ContextEvent, EventKind, ModeId, ModeSpec,
    ModeTable,
};
pub use error::{Error, Result};
pub use evaluator::{evaluate, Evaluation, Metrics, Profile};
pub use ids::{EsId, Link, Node, RouterId, TaskId, Time};
pub use models::{ApplicationModel, EndSystem, MessageRecord, PlatformModel, Task};
pub use priorities::{
    b_level, built_in_temporal, ingest_priorities, least_loaded, temporal_order, SpatialPriorities, TemporalPriorities,
};
pub use reconstructor::{
    reconstruct_full, reconstruct_temporal, reconstruct_until, recover_failure, safety_check, snapshot_restore,
    MessageEntry, RecoveryLog, Schedule, Snapshot, TaskEntry, Violation,
};
pub use workload::{chain_platform, generate_instance, generate_workload};
