//! Channel-aware user matching for uplink multiuser-MIMO 802.11 LANs.
//!
//! Clients are paired into ordered tuples ("mates") whose channels interfere
//! little under zero-forcing with successive interference cancellation. Only
//! the tuple lead contends for the medium; the mates join its transmission.
//! The crate covers the channel geometry, the matchers, brute-force oracles
//! for them, a round-based MAC simulator with several baseline protocols, and
//! the metrics and files a run produces.

pub mod channel;
pub mod config;
pub mod contention;
pub mod error;
pub mod matching;
pub mod metrics;
pub mod oracle;
pub mod protocols;
pub mod rate;

pub use error::{Error, Result};
