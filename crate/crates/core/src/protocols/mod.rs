//! Round-based uplink MAC simulation.
//!
//! Every round is one concurrent transmission: stream-1 contention (with any
//! collisions it takes to produce a winner folded into the round's
//! overhead), the streams that join it, and the ACK. The protocols differ in
//! how positions 2..N are filled.

mod airtime;
mod engine;
mod traffic;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use airtime::{account_airtime, single_frame_airtime, AirtimeShare, Timing, SYMBOL_US};
pub use engine::run_simulation;
pub use traffic::{traffic_step, ClientTraffic, TrafficModel, TrafficState};

use crate::channel::{ClientId, ClientPlacement, PathLoss};
use crate::contention::ContentionParams;
use crate::error::{Error, Result};
use crate::matching::MateSet;
use crate::metrics::ExperimentSummary;
use crate::rate::RateTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    Mimomate,
    MimomateAngle,
    Sam,
    Mrc,
    MaxThroughputFirst,
    MaxAngleFirst,
    Legacy80211,
}

impl Protocol {
    pub const ALL: [Protocol; 7] = [
        Protocol::Mimomate,
        Protocol::MimomateAngle,
        Protocol::Sam,
        Protocol::Mrc,
        Protocol::MaxThroughputFirst,
        Protocol::MaxAngleFirst,
        Protocol::Legacy80211,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Protocol::Mimomate => "mimomate",
            Protocol::MimomateAngle => "mimomate_angle",
            Protocol::Sam => "sam",
            Protocol::Mrc => "mrc",
            Protocol::MaxThroughputFirst => "max_throughput_first",
            Protocol::MaxAngleFirst => "max_angle_first",
            Protocol::Legacy80211 => "legacy_80211",
        }
    }

    pub fn uses_matching(&self) -> bool {
        matches!(self, Protocol::Mimomate | Protocol::MimomateAngle)
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Protocol::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| Error::config(format!("unknown protocol {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PacketSize {
    Fixed { bytes: u32 },
    /// Drawn uniformly per round for the first stream.
    Uniform { min_bytes: u32, max_bytes: u32 },
}

impl Default for PacketSize {
    fn default() -> Self {
        PacketSize::Fixed { bytes: 1500 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ClientLayout {
    /// Uniformly random in a disk around the AP.
    Random { count: usize, radius_m: f64 },
    Explicit { placements: Vec<ClientPlacement> },
}

impl Default for ClientLayout {
    fn default() -> Self {
        ClientLayout::Random { count: 15, radius_m: 100.0 }
    }
}

impl ClientLayout {
    pub fn count(&self) -> usize {
        match self {
            ClientLayout::Random { count, .. } => *count,
            ClientLayout::Explicit { placements } => placements.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimConfig {
    pub seed: u64,
    pub protocol: Protocol,
    pub n_antennas: usize,
    pub rounds: u64,
    pub clients: ClientLayout,
    pub legacy_ids: BTreeSet<ClientId>,
    pub packet: PacketSize,
    pub traffic: TrafficModel,
    pub rate_table: RateTable,
    pub contention: ContentionParams,
    pub timing: Timing,
    pub path_loss: PathLoss,
    /// Channels are redrawn (and mates recomputed) every this many rounds;
    /// `None` keeps them fixed for the whole run.
    pub rematch_every: Option<u64>,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            seed: 1,
            protocol: Protocol::Mimomate,
            n_antennas: 2,
            rounds: 1000,
            clients: ClientLayout::default(),
            legacy_ids: BTreeSet::new(),
            packet: PacketSize::default(),
            traffic: TrafficModel::Continuous,
            rate_table: RateTable::simulation(),
            contention: ContentionParams::default(),
            timing: Timing::default(),
            path_loss: PathLoss::default(),
            rematch_every: None,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rounds == 0 {
            return Err(Error::config("rounds must be at least 1"));
        }
        if self.n_antennas == 0 {
            return Err(Error::config("n_antennas must be at least 1"));
        }
        if self.n_antennas > 16 {
            return Err(Error::config("n_antennas above 16 is not supported"));
        }
        let n = self.clients.count();
        if n == 0 {
            return Err(Error::config("need at least one client"));
        }
        match &self.clients {
            ClientLayout::Random { radius_m, .. } => {
                if !(*radius_m > 0.0 && radius_m.is_finite()) {
                    return Err(Error::config("radius_m must be positive"));
                }
            }
            ClientLayout::Explicit { placements } => {
                for (i, p) in placements.iter().enumerate() {
                    if p.client_id != i {
                        return Err(Error::config("explicit placements must use client ids 0..n in order"));
                    }
                    if !(p.distance_m > 0.0) || !p.original_snr_db.is_finite() {
                        return Err(Error::config(format!("client {i}: bad placement")));
                    }
                }
            }
        }
        if let Some(&bad) = self.legacy_ids.iter().find(|&&id| id >= n) {
            return Err(Error::config(format!("legacy id {bad} is not a client")));
        }
        match self.packet {
            PacketSize::Fixed { bytes: 0 } => return Err(Error::config("packet size must be positive")),
            PacketSize::Uniform { min_bytes, max_bytes } if min_bytes == 0 || min_bytes > max_bytes => {
                return Err(Error::config("packet size range must satisfy 0 < min <= max"))
            }
            _ => {}
        }
        if self.rematch_every == Some(0) {
            return Err(Error::config("rematch_every must be at least 1"));
        }
        self.traffic.validate()?;
        self.contention.validate()?;
        self.timing.validate()?;
        self.path_loss.validate()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureCause {
    None,
    /// Contention for a joining stream ended in a tie; nothing in the round decodes.
    Collision,
    /// A stream could not be decoded, so nothing recovered before it in SIC order either.
    SicCascade,
    /// A scheduled or winning joiner found too little airtime left to start.
    InsufficientAirtime,
}

impl FailureCause {
    pub fn as_str(&self) -> &'static str {
        match self {
            FailureCause::None => "none",
            FailureCause::Collision => "collision",
            FailureCause::SicCascade => "sic_cascade",
            FailureCause::InsufficientAirtime => "insufficient_airtime",
        }
    }
}

impl FromStr for FailureCause {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [FailureCause::None, FailureCause::Collision, FailureCause::SicCascade, FailureCause::InsufficientAirtime]
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::config(format!("unknown failure cause {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StreamRecord {
    /// 1-based joining order.
    pub position: usize,
    pub client_id: ClientId,
    /// Rate the stream was sent at; 0 when no rate was decodable.
    pub rate_mbps: f64,
    pub effective_snr_db: f64,
    pub data_us: f64,
    pub overhead_us: f64,
    pub bits: u64,
    pub decoded: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundRecord {
    pub round: u64,
    pub protocol: Protocol,
    pub streams: Vec<StreamRecord>,
    pub failure_cause: FailureCause,
}

impl RoundRecord {
    /// Channel time of the whole round; every stream's data plus overhead.
    pub fn duration_us(&self) -> f64 {
        self.streams.first().map_or(0.0, |s| s.data_us + s.overhead_us)
    }

    pub fn bits(&self) -> u64 {
        self.streams.iter().map(|s| s.bits).sum()
    }

    pub fn holder(&self, position: usize) -> Option<ClientId> {
        self.streams.iter().find(|s| s.position == position).map(|s| s.client_id)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatchEvent {
    pub round: u64,
    pub mates: MateSet,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationRun {
    pub config: SimConfig,
    pub placements: Vec<ClientPlacement>,
    pub records: Vec<RoundRecord>,
    /// Matching announcements (MIMOMate protocols only).
    pub matchings: Vec<MatchEvent>,
    pub summary: ExperimentSummary,
}
