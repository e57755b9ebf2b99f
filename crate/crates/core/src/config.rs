//! TOML experiment descriptions.
//!
//! ```toml
//! seed = 7
//! protocol = "mimomate"        # mimomate_angle, sam, mrc, max_throughput_first, max_angle_first, legacy_80211
//! n_antennas = 2
//! rounds = 1000
//! legacy_ids = [0, 3]
//! rematch_every = 250          # default: never
//!
//! [clients]
//! count = 15                   # or: placements = [{ distance_m = 12.0 }, { distance_m = 40.0, snr_db = 20.0 }]
//! radius_m = 100.0
//!
//! [packet]
//! bytes = 1500                 # or: min_bytes = 500, max_bytes = 1500
//!
//! [traffic]
//! model = "bursty"             # or "continuous"
//! lambda_files_per_s = 2.0
//! file_kb_min = 500.0
//! file_kb_max = 550.0
//!
//! [rates]
//! profile = "experimental"     # or "simulation"
//! thresholds_db = [4, 6, 8, 11, 15, 19, 22, 25]
//!
//! [contention]                 # cw_min, cw_max, slot_us, sifs_us, difs_us
//! [timing]                     # plcp_us, mac_header_bytes, control_rate_mbps, ...
//! [path_loss]                  # reference_distance_m, reference_snr_db, exponent
//! ```
//!
//! Every key is optional; unknown keys are rejected.

use std::collections::BTreeSet;
use std::path::Path;

use serde::Deserialize;

use crate::channel::{ClientId, ClientPlacement, PathLoss};
use crate::contention::ContentionParams;
use crate::error::{Error, Result};
use crate::protocols::{ClientLayout, PacketSize, Protocol, SimConfig, Timing, TrafficModel};
use crate::rate::{RateTable, DEFAULT_THRESHOLDS_DB, EXPERIMENTAL_RATES_MBPS, SIMULATION_RATES_MBPS};

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    seed: Option<u64>,
    protocol: Option<Protocol>,
    n_antennas: Option<usize>,
    rounds: Option<u64>,
    legacy_ids: Option<BTreeSet<ClientId>>,
    rematch_every: Option<u64>,
    clients: Option<RawClients>,
    packet: Option<RawPacket>,
    traffic: Option<RawTraffic>,
    rates: Option<RawRates>,
    contention: Option<ContentionParams>,
    timing: Option<Timing>,
    path_loss: Option<PathLoss>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawClients {
    count: Option<usize>,
    radius_m: Option<f64>,
    placements: Option<Vec<RawPlacement>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPlacement {
    distance_m: f64,
    /// Defaults to the path-loss mean at `distance_m`.
    snr_db: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPacket {
    bytes: Option<u32>,
    min_bytes: Option<u32>,
    max_bytes: Option<u32>,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case")]
enum TrafficKind {
    Continuous,
    Bursty,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTraffic {
    model: TrafficKind,
    lambda_files_per_s: Option<f64>,
    file_kb_min: Option<f64>,
    file_kb_max: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateProfile {
    #[default]
    Simulation,
    Experimental,
}

impl RateProfile {
    pub fn table(self) -> RateTable {
        match self {
            RateProfile::Simulation => RateTable::simulation(),
            RateProfile::Experimental => RateTable::experimental(),
        }
    }
}

impl std::str::FromStr for RateProfile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "simulation" => Ok(RateProfile::Simulation),
            "experimental" => Ok(RateProfile::Experimental),
            _ => Err(Error::config(format!("unknown rate profile {s:?}"))),
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRates {
    profile: Option<RateProfile>,
    thresholds_db: Option<Vec<f64>>,
    rates_mbps: Option<Vec<f64>>,
}

pub fn parse_config(text: &str) -> Result<SimConfig> {
    let raw: RawConfig = toml::from_str(text)?;
    let d = SimConfig::default();
    let path_loss = raw.path_loss.unwrap_or(d.path_loss);
    path_loss.validate()?;

    let clients = match raw.clients {
        None => d.clients.clone(),
        Some(RawClients { placements: Some(list), count, radius_m }) => {
            if radius_m.is_some() {
                return Err(Error::config("clients: radius_m does not apply to explicit placements"));
            }
            if count.is_some_and(|c| c != list.len()) {
                return Err(Error::config("clients: count disagrees with the number of placements"));
            }
            let placements = list
                .into_iter()
                .enumerate()
                .map(|(client_id, p)| ClientPlacement {
                    client_id,
                    distance_m: p.distance_m,
                    original_snr_db: p.snr_db.unwrap_or_else(|| path_loss.mean_snr_db(p.distance_m)),
                })
                .collect();
            ClientLayout::Explicit { placements }
        }
        Some(RawClients { placements: None, count, radius_m }) => ClientLayout::Random {
            count: count.unwrap_or(d.clients.count()),
            radius_m: radius_m.unwrap_or(100.0),
        },
    };

    let packet = match raw.packet {
        None => d.packet,
        Some(RawPacket { bytes: Some(bytes), min_bytes: None, max_bytes: None }) => PacketSize::Fixed { bytes },
        Some(RawPacket { bytes: None, min_bytes: Some(min_bytes), max_bytes: Some(max_bytes) }) => {
            PacketSize::Uniform { min_bytes, max_bytes }
        }
        Some(RawPacket { bytes: None, min_bytes: None, max_bytes: None }) => d.packet,
        Some(_) => return Err(Error::config("packet: give either bytes or both min_bytes and max_bytes")),
    };

    let traffic = match raw.traffic {
        None => d.traffic,
        Some(RawTraffic { model: TrafficKind::Continuous, lambda_files_per_s: None, file_kb_min: None, file_kb_max: None }) => {
            TrafficModel::Continuous
        }
        Some(RawTraffic { model: TrafficKind::Continuous, .. }) => {
            return Err(Error::config("traffic: continuous traffic takes no arrival parameters"))
        }
        Some(RawTraffic { model: TrafficKind::Bursty, lambda_files_per_s, file_kb_min, file_kb_max }) => {
            let TrafficModel::Bursty { lambda_files_per_s: l, file_kb_min: lo, file_kb_max: hi } = TrafficModel::bursty_default()
            else {
                unreachable!()
            };
            TrafficModel::Bursty {
                lambda_files_per_s: lambda_files_per_s.unwrap_or(l),
                file_kb_min: file_kb_min.unwrap_or(lo),
                file_kb_max: file_kb_max.unwrap_or(hi),
            }
        }
    };

    let rate_table = match raw.rates {
        None => d.rate_table.clone(),
        Some(r) => {
            let profile = r.profile.unwrap_or_default();
            let default_rates: &[f64] = match profile {
                RateProfile::Simulation => &SIMULATION_RATES_MBPS,
                RateProfile::Experimental => &EXPERIMENTAL_RATES_MBPS,
            };
            let thresholds = r.thresholds_db.unwrap_or_else(|| DEFAULT_THRESHOLDS_DB.to_vec());
            let rates = r.rates_mbps.unwrap_or_else(|| default_rates.to_vec());
            RateTable::from_pairs(&thresholds, &rates)?
        }
    };

    let config = SimConfig {
        seed: raw.seed.unwrap_or(d.seed),
        protocol: raw.protocol.unwrap_or(d.protocol),
        n_antennas: raw.n_antennas.unwrap_or(d.n_antennas),
        rounds: raw.rounds.unwrap_or(d.rounds),
        clients,
        legacy_ids: raw.legacy_ids.unwrap_or_default(),
        packet,
        traffic,
        rate_table,
        contention: raw.contention.unwrap_or(d.contention),
        timing: raw.timing.unwrap_or(d.timing),
        path_loss,
        rematch_every: raw.rematch_every,
    };
    config.validate()?;
    Ok(config)
}

pub fn load_config(path: &Path) -> Result<SimConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    parse_config(&text)
}
