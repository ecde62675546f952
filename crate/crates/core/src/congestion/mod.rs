//! Per-direction queues, scheduling, delay marking and path windows.

pub mod queue;
pub mod window;

pub use queue::{ChannelQueue, QueueEntry, SchedulingPolicy, DEFAULT_QUEUE_LIMIT};
pub use window::{admit, window_on_abort, window_on_success, DEFAULT_BETA, DEFAULT_GAMMA, W_INIT, W_MIN};
