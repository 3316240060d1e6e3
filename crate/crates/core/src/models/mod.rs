//! Application and platform models consumed by every reconstructor.

mod application;
mod platform;

pub use application::{ApplicationModel, MessageRecord, Task};
pub use platform::{EndSystem, PlatformModel, DEFAULT_ACTIVE_POWER, DEFAULT_BANDWIDTH, DEFAULT_IDLE_POWER};
