//! Schedule construction, recovery, logging and validation.

mod engine;
mod log;
mod recovery;
mod safety;
mod schedule;
mod state;

pub use log::{snapshot_restore, snapshot_restore_at, RecoveryLog};
pub use recovery::{reconstruct_full, reconstruct_temporal, reconstruct_until, recover_failure};
pub use safety::{safety_check, Violation};
pub use schedule::{MessageEntry, Reservation, Schedule, TaskEntry};
pub use state::{transmission_duration, CollisionLists, Snapshot};
