//! SNR to bit-rate mapping.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateEntry {
    pub min_snr_db: f64,
    pub rate_mbps: f64,
}

/// Threshold table; an SNR qualifies for an entry when `snr >= min_snr_db`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateTable {
    entries: Vec<RateEntry>,
}

pub const DEFAULT_THRESHOLDS_DB: [f64; 8] = [4.0, 6.0, 8.0, 11.0, 15.0, 19.0, 22.0, 25.0];

/// 10 MHz OFDM rates of the software-radio testbed.
pub const EXPERIMENTAL_RATES_MBPS: [f64; 8] = [3.0, 4.5, 6.0, 9.0, 12.0, 18.0, 24.0, 27.0];

/// 802.11a rates.
pub const SIMULATION_RATES_MBPS: [f64; 8] = [6.0, 9.0, 12.0, 18.0, 24.0, 36.0, 48.0, 54.0];

impl RateTable {
    pub fn new(entries: Vec<RateEntry>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::config("rate table is empty"));
        }
        for e in &entries {
            if !e.min_snr_db.is_finite() || !e.rate_mbps.is_finite() || e.rate_mbps <= 0.0 {
                return Err(Error::config(format!("bad rate table entry {e:?}")));
            }
        }
        for w in entries.windows(2) {
            if !(w[1].min_snr_db > w[0].min_snr_db && w[1].rate_mbps > w[0].rate_mbps) {
                return Err(Error::config("rate table must be strictly increasing in threshold and rate"));
            }
        }
        Ok(RateTable { entries })
    }

    pub fn from_pairs(thresholds_db: &[f64], rates_mbps: &[f64]) -> Result<Self> {
        if thresholds_db.len() != rates_mbps.len() {
            return Err(Error::config("rate table thresholds and rates differ in length"));
        }
        Self::new(
            thresholds_db
                .iter()
                .zip(rates_mbps)
                .map(|(&min_snr_db, &rate_mbps)| RateEntry { min_snr_db, rate_mbps })
                .collect(),
        )
    }

    pub fn experimental() -> Self {
        Self::from_pairs(&DEFAULT_THRESHOLDS_DB, &EXPERIMENTAL_RATES_MBPS).expect("built-in table")
    }

    pub fn simulation() -> Self {
        Self::from_pairs(&DEFAULT_THRESHOLDS_DB, &SIMULATION_RATES_MBPS).expect("built-in table")
    }

    pub fn entries(&self) -> &[RateEntry] {
        &self.entries
    }

    pub fn floor_snr_db(&self) -> f64 {
        self.entries[0].min_snr_db
    }

    pub fn top_rate(&self) -> f64 {
        self.entries[self.entries.len() - 1].rate_mbps
    }

    pub fn base_rate(&self) -> f64 {
        self.entries[0].rate_mbps
    }

    /// Highest rate whose threshold is at most `snr_db`; `None` means undecodable.
    pub fn snr_to_rate(&self, snr_db: f64) -> Option<f64> {
        // NaN and the zero-power marker both fail every comparison below.
        self.entries.iter().rev().find(|e| snr_db >= e.min_snr_db).map(|e| e.rate_mbps)
    }
}

/// Bits delivered by a stream at `rate_mbps` over `airtime_us`, floored.
pub fn stream_bits(rate_mbps: f64, airtime_us: f64) -> u64 {
    if !(rate_mbps > 0.0) || !(airtime_us > 0.0) {
        return 0;
    }
    let bits = rate_mbps * airtime_us;
    // Absorb representation error so that rate * (bits / rate) gives back bits.
    (bits + bits * 1e-12).floor() as u64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::ZERO_POWER_DB;
    use proptest::prelude::*;

    #[test]
    fn below_floor_is_undecodable() {
        let t = RateTable::experimental();
        assert_eq!(t.floor_snr_db(), 4.0);
        assert_eq!(t.snr_to_rate(3.9), None);
        assert_eq!(t.snr_to_rate(ZERO_POWER_DB), None);
        assert_eq!(t.snr_to_rate(f64::NAN), None);
    }

    #[test]
    fn saturation_and_inclusive_thresholds() {
        let t = RateTable::simulation();
        assert_eq!(t.snr_to_rate(60.0), Some(54.0));
        assert_eq!(t.snr_to_rate(4.0), Some(6.0));
        assert_eq!(t.snr_to_rate(11.0), Some(18.0));
        assert_eq!(t.snr_to_rate(10.999), Some(12.0));
        assert_eq!(RateTable::experimental().snr_to_rate(25.0), Some(27.0));
    }

    #[test]
    fn table_validation() {
        assert!(RateTable::new(vec![]).is_err());
        assert!(RateTable::from_pairs(&[4.0, 4.0], &[6.0, 9.0]).is_err());
        assert!(RateTable::from_pairs(&[4.0, 6.0], &[9.0, 6.0]).is_err());
        assert!(RateTable::from_pairs(&[4.0], &[6.0, 9.0]).is_err());
    }

    #[test]
    fn bits_arithmetic() {
        assert_eq!(stream_bits(6.0, 2000.0), 12000);
        assert_eq!(stream_bits(54.0, 0.0), 0);
        // 27 * 444.4 = 11998.8
        assert_eq!(stream_bits(27.0, 444.4), 11998);
        assert_eq!(stream_bits(54.0, 12000.0 / 54.0), 12000);
    }

    proptest! {
        #[test]
        fn rate_is_monotone(a in -20.0f64..60.0, b in -20.0f64..60.0) {
            let t = RateTable::simulation();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(t.snr_to_rate(lo).unwrap_or(0.0) <= t.snr_to_rate(hi).unwrap_or(0.0));
        }
    }
}
