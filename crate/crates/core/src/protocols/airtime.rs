//! Frame timing and per-stream airtime accounting.

use serde::{Deserialize, Serialize};

use crate::contention::ContentionParams;
use crate::error::{Error, Result};

use super::RoundRecord;

/// OFDM symbol duration.
pub const SYMBOL_US: f64 = 4.0;

/// PHY/MAC framing constants, 802.11a values by default.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Timing {
    /// PLCP preamble plus SIGNAL field.
    pub plcp_us: f64,
    /// MAC header plus FCS, sent at the data rate.
    pub mac_header_bytes: u32,
    /// Rate for ACK, RTS, CTS and matching announcements.
    pub control_rate_mbps: f64,
    pub ack_bytes: u32,
    pub rts_bytes: u32,
    pub cts_bytes: u32,
    /// Fixed part of the matching announcement frame.
    pub announce_header_bytes: u32,
    /// Per client id listed in the announcement.
    pub announce_bytes_per_id: u32,
    /// Shortest payload worth starting a joining stream for.
    pub min_fragment_us: f64,
}

impl Default for Timing {
    fn default() -> Self {
        Timing {
            plcp_us: 20.0,
            mac_header_bytes: 28,
            control_rate_mbps: 6.0,
            ack_bytes: 14,
            rts_bytes: 20,
            cts_bytes: 14,
            announce_header_bytes: 28,
            announce_bytes_per_id: 2,
            min_fragment_us: SYMBOL_US,
        }
    }
}

impl Timing {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("plcp_us", self.plcp_us),
            ("control_rate_mbps", self.control_rate_mbps),
            ("min_fragment_us", self.min_fragment_us),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::config(format!("{name} must be a non-negative number")));
            }
        }
        if self.control_rate_mbps <= 0.0 {
            return Err(Error::config("control_rate_mbps must be positive"));
        }
        Ok(())
    }

    /// Duration of a control frame: preamble plus whole symbols carrying
    /// SERVICE (16 bits), body and tail (6 bits).
    pub fn control_frame_us(&self, bytes: u32) -> f64 {
        let bits_per_symbol = self.control_rate_mbps * SYMBOL_US;
        let symbols = ((16.0 + 6.0 + 8.0 * bytes as f64) / bits_per_symbol).ceil();
        self.plcp_us + symbols * SYMBOL_US
    }

    pub fn ack_us(&self) -> f64 {
        self.control_frame_us(self.ack_bytes)
    }

    pub fn rts_us(&self) -> f64 {
        self.control_frame_us(self.rts_bytes)
    }

    pub fn cts_us(&self) -> f64 {
        self.control_frame_us(self.cts_bytes)
    }

    pub fn announce_us(&self, n_ids: usize) -> f64 {
        self.control_frame_us(self.announce_header_bytes + self.announce_bytes_per_id * n_ids as u32)
    }

    pub fn mac_header_us(&self, rate_mbps: f64) -> f64 {
        8.0 * self.mac_header_bytes as f64 / rate_mbps
    }

    /// PLCP + MAC header + payload for a frame at `rate_mbps`.
    pub fn frame_us(&self, payload_bits: u64, rate_mbps: f64) -> f64 {
        self.plcp_us + self.mac_header_us(rate_mbps) + payload_bits as f64 / rate_mbps
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AirtimeShare {
    pub data_us: f64,
    pub overhead_us: f64,
    pub data_fraction: f64,
}

impl AirtimeShare {
    fn new(data_us: f64, overhead_us: f64) -> Self {
        let total = data_us + overhead_us;
        AirtimeShare { data_us, overhead_us, data_fraction: if total > 0.0 { data_us / total } else { 0.0 } }
    }
}

/// Airtime split of a single 802.11 frame sent alone: DIFS, mean backoff at
/// `cw_min`, PLCP, MAC header, SIFS and ACK are overhead.
pub fn single_frame_airtime(payload_bytes: u32, rate_mbps: f64, params: &ContentionParams, timing: &Timing) -> AirtimeShare {
    let data_us = 8.0 * payload_bytes as f64 / rate_mbps;
    let overhead_us = params.difs_us
        + params.mean_backoff_us()
        + timing.plcp_us
        + timing.mac_header_us(rate_mbps)
        + params.sifs_us
        + timing.ack_us();
    AirtimeShare::new(data_us, overhead_us)
}

/// Per-stream data/overhead split of a finished round, in position order.
///
/// Each stream occupies the channel for the whole round; whatever part of the
/// round it does not spend on payload (contention, RTS/CTS exchanges, waiting
/// for earlier preambles, its own PLCP and MAC header, SIFS and ACK) counts
/// as its overhead.
pub fn account_airtime(record: &RoundRecord) -> Vec<AirtimeShare> {
    let duration = record.duration_us();
    record.streams.iter().map(|s| AirtimeShare::new(s.data_us, duration - s.data_us)).collect()
}
