//! Monte Carlo simulation of a reconfigurable free-space QKD network.
//!
//! * [`quantum`]: pure-state arithmetic, BB84 preparation, channels and the Bell analyzer.
//! * [`mdi`]: measurement-device-independent sessions through an untrusted relay.
//! * [`relay`]: the trusted relay, BB84 links and one-time-pad key forwarding.
//! * [`qpv`]: Bell-measurement position verification and its entanglement-based twin.
//! * [`adversary`]: attacks on position verification, analytic error rates and the bound.

pub mod adversary;
pub mod mdi;
pub mod qpv;
pub mod quantum;
pub mod relay;
pub mod rng;
pub mod stats;
