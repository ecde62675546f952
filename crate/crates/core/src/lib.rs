//! Payment channel network simulation toolkit.
//!
//! * [`network`]: nodes, channels and fund movement.
//! * [`placement`]: hub placement under a management/synchronisation cost
//!   tradeoff: cost model, MILP encoding, exact solver and a randomized
//!   double-greedy approximation.
//! * [`routing`]: demand splitting, path computation and the price-driven
//!   rate controller.
//! * [`congestion`]: per-channel queues, scheduling, delay marking and
//!   window control.
//! * [`sim`]: the deterministic event loop tying everything together.

pub mod amount;
pub mod congestion;
pub mod error;
pub mod network;
pub mod placement;
pub mod routing;
pub mod sim;
pub mod time;

pub use amount::Amount;
pub use error::{NetworkError, PlacementError, QueueError, RoutingError, SimError};
pub use network::{build_network, Network, NetworkSpec, NodeId, NodeRole, PaymentDemand};
pub use time::SimTime;
