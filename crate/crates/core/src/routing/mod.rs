//! Demand splitting, path computation and price-driven rate control.

pub mod paths;
pub mod price;
pub mod rate;
pub mod tu;

pub use paths::{bottleneck, compute_paths, k_shortest, Path, PathKind};
pub use price::{
    capacity_price_step, channel_routing_price, forwarding_fee, imbalance_price_step, path_fee, path_price,
    ChannelPriceState,
};
pub use rate::{
    apply_demand_cap, apply_rate_rule, marginal_utility, rate_step, update_rate, update_rate_proportional, PathState, RateRule,
    RATE_FLOOR,
};
pub use tu::{split_amounts, split_demand, TransactionUnit, TuId, TuState};
