use serde::{Deserialize, Serialize};

use crate::error::RoutingError;
use crate::network::Direction;

/// One capacity step: `max(0, lambda + kappa * (n_a + n_b - c))`.
pub fn capacity_price_step(lambda: f64, n_a: f64, n_b: f64, capacity: f64, kappa: f64) -> f64 {
    (lambda + kappa * (n_a + n_b - capacity)).max(0.0)
}

/// One imbalance step, antisymmetric before projection.
pub fn imbalance_price_step(mu_ab: f64, mu_ba: f64, m_a: f64, m_b: f64, eta: f64) -> (f64, f64) {
    let d = eta * (m_a - m_b);
    ((mu_ab + d).max(0.0), (mu_ba - d).max(0.0))
}

/// `2 lambda + mu_ab - mu_ba`. May be negative.
pub fn channel_routing_price(lambda: f64, mu_ab: f64, mu_ba: f64) -> f64 {
    2.0 * lambda + mu_ab - mu_ba
}

pub fn check_fee_threshold(t_fee: f64) -> Result<(), RoutingError> {
    if t_fee > 0.0 && t_fee < 1.0 {
        Ok(())
    } else {
        Err(RoutingError::InvalidThreshold(t_fee))
    }
}

/// Fee for one hop, floored at zero.
pub fn forwarding_fee(xi: f64, t_fee: f64) -> Result<f64, RoutingError> {
    check_fee_threshold(t_fee)?;
    Ok((t_fee * xi).max(0.0))
}

/// Sum of per-hop fees along a path.
pub fn path_fee(xis: &[f64], t_fee: f64) -> Result<f64, RoutingError> {
    check_fee_threshold(t_fee)?;
    Ok(xis.iter().map(|&x| (t_fee * x).max(0.0)).sum())
}

/// `(1 + t_fee) * sum(xi)`.
pub fn path_price(xis: &[f64], t_fee: f64) -> f64 {
    (1.0 + t_fee) * xis.iter().sum::<f64>()
}

/// Price state for both directions of one channel.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ChannelPriceState {
    /// Shared by both directions.
    pub lambda: f64,
    pub mu: [f64; 2],
    /// Funds needed to sustain the current rates, `n_a` and `n_b`.
    pub n_required: [f64; 2],
    /// Token volume that arrived this interval, `m_a` and `m_b`.
    pub m_arrived: [f64; 2],
    /// Arrival rate measured over the last closed interval, tokens/sec.
    pub rate: [f64; 2],
}

impl ChannelPriceState {
    pub fn record_arrival(&mut self, dir: Direction, tokens: f64) {
        self.m_arrived[dir.index()] += tokens;
    }

    pub fn set_required(&mut self, dir: Direction, tokens: f64) {
        self.n_required[dir.index()] = tokens;
    }

    pub fn update_capacity_price(&mut self, capacity: f64, kappa: f64) -> f64 {
        self.lambda = capacity_price_step(self.lambda, self.n_required[0], self.n_required[1], capacity, kappa);
        self.lambda
    }

    pub fn update_imbalance_price(&mut self, eta: f64) -> (f64, f64) {
        let (ab, ba) = imbalance_price_step(self.mu[0], self.mu[1], self.m_arrived[0], self.m_arrived[1], eta);
        self.mu = [ab, ba];
        (ab, ba)
    }

    /// `xi` for traffic in `dir`.
    pub fn routing_price(&self, dir: Direction) -> f64 {
        channel_routing_price(self.lambda, self.mu[dir.index()], self.mu[dir.reverse().index()])
    }

    pub fn fee(&self, dir: Direction, t_fee: f64) -> Result<f64, RoutingError> {
        forwarding_fee(self.routing_price(dir), t_fee)
    }

    /// Archives the interval's arrivals as a rate and clears the counters.
    pub fn close_interval(&mut self, tau_secs: f64) {
        for d in 0..2 {
            self.rate[d] = self.m_arrived[d] / tau_secs;
            self.m_arrived[d] = 0.0;
            self.n_required[d] = 0.0;
        }
    }

    /// Capacity and imbalance updates followed by closing the interval.
    pub fn step(&mut self, capacity: f64, kappa: f64, eta: f64, tau_secs: f64) {
        self.update_capacity_price(capacity, kappa);
        self.update_imbalance_price(eta);
        self.close_interval(tau_secs);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn capacity_price_cases() {
        assert_eq!(capacity_price_step(0.7, 5.0, 5.0, 10.0, 0.1), 0.7);
        assert!((capacity_price_step(0.0, 10.0, 10.0, 10.0, 0.1) - 1.0).abs() < 1e-12);
        assert_eq!(capacity_price_step(0.5, 0.0, 0.0, 10.0, 0.1), 0.0);
    }

    #[test]
    fn imbalance_price_cases() {
        assert_eq!(imbalance_price_step(0.3, 0.2, 4.0, 4.0, 0.05), (0.3, 0.2));
        let (ab, ba) = imbalance_price_step(0.0, 0.4, 20.0, 0.0, 0.05);
        assert!((ab - 1.0).abs() < 1e-12);
        assert_eq!(ba, 0.0);
        let (ab, ba) = imbalance_price_step(2.0, 3.0, 5.0, 1.0, 0.25);
        let (ab, ba) = imbalance_price_step(ab, ba, 1.0, 5.0, 0.25);
        assert_eq!((ab, ba), (2.0, 3.0));
    }

    #[test]
    fn routing_price_and_fees() {
        assert_eq!(channel_routing_price(0.0, 0.0, 0.0), 0.0);
        assert!((channel_routing_price(1.0, 0.4, 0.1) - 2.3).abs() < 1e-12);
        assert!((channel_routing_price(0.6, 0.9, 0.9) - 1.2).abs() < 1e-12);
        assert!((forwarding_fee(2.3, 0.1).unwrap() - 0.23).abs() < 1e-12);
        assert_eq!(forwarding_fee(-1.0, 0.1).unwrap(), 0.0);
        assert!((path_fee(&[1.0, 0.5], 0.1).unwrap() - 0.15).abs() < 1e-12);
        assert_eq!(forwarding_fee(1.0, 1.0), Err(RoutingError::InvalidThreshold(1.0)));
        assert_eq!(forwarding_fee(1.0, 0.0), Err(RoutingError::InvalidThreshold(0.0)));
    }

    #[test]
    fn path_price_cases() {
        assert_eq!(path_price(&[0.0, 0.0], 0.1), 0.0);
        assert!((path_price(&[1.0, 0.5], 0.1) - 1.65).abs() < 1e-12);
        assert!((path_price(&[2.0], 0.1) - 2.2).abs() < 1e-12);
    }

    #[test]
    fn state_updates_by_direction() {
        let mut st = ChannelPriceState::default();
        st.record_arrival(Direction::AtoB, 20.0);
        st.set_required(Direction::AtoB, 8.0);
        st.set_required(Direction::BtoA, 12.0);
        st.update_capacity_price(10.0, 0.1);
        st.update_imbalance_price(0.05);
        assert!((st.lambda - 1.0).abs() < 1e-12);
        assert!((st.routing_price(Direction::AtoB) - 3.0).abs() < 1e-12);
        assert!((st.routing_price(Direction::BtoA) - 1.0).abs() < 1e-12);
        st.close_interval(0.2);
        assert_eq!(st.rate, [100.0, 0.0]);
        assert_eq!(st.m_arrived, [0.0, 0.0]);
    }
}
