//! Slot-level contention: DCF backoff draws, collision resolution and the
//! angle-scaled per-stream contention windows.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::ClientId;
use crate::error::{Error, Result};

/// 802.11a OFDM timing by default.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ContentionParams {
    pub cw_min: u32,
    pub cw_max: u32,
    pub slot_us: f64,
    pub sifs_us: f64,
    pub difs_us: f64,
}

impl Default for ContentionParams {
    fn default() -> Self {
        ContentionParams { cw_min: 16, cw_max: 1024, slot_us: 9.0, sifs_us: 16.0, difs_us: 34.0 }
    }
}

impl ContentionParams {
    pub fn validate(&self) -> Result<()> {
        if self.cw_min == 0 || self.cw_min > self.cw_max {
            return Err(Error::config(format!("need 0 < cw_min <= cw_max, got {} and {}", self.cw_min, self.cw_max)));
        }
        for (name, v) in [("slot_us", self.slot_us), ("sifs_us", self.sifs_us), ("difs_us", self.difs_us)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::config(format!("{name} must be a non-negative number")));
            }
        }
        Ok(())
    }

    /// Expected backoff of a lone contender at `cw_min`, in microseconds.
    pub fn mean_backoff_us(&self) -> f64 {
        (self.cw_min as f64 + 1.0) / 2.0 * self.slot_us
    }
}

/// Result of a contention attempt as seen by one participant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    Collision,
    /// Someone else won; the window is left alone.
    Deferred,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct StreamWindow {
    cw: f64,
    delta_cur: f64,
    pending: Option<Outcome>,
}

/// Per-client contention state, one window per stream index `k = 1..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct BackoffState {
    params: ContentionParams,
    streams: Vec<StreamWindow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Participation {
    Contend,
    GiveUp,
}

impl BackoffState {
    pub fn new(n_streams: usize, params: ContentionParams) -> Self {
        let w = StreamWindow { cw: params.cw_min as f64, delta_cur: 0.0, pending: None };
        BackoffState { params, streams: vec![w; n_streams.max(1)] }
    }

    pub fn params(&self) -> &ContentionParams {
        &self.params
    }

    fn window(&self, k: usize) -> &StreamWindow {
        assert!(k >= 1 && k <= self.streams.len(), "stream index {k} out of range");
        &self.streams[k - 1]
    }

    fn window_mut(&mut self, k: usize) -> &mut StreamWindow {
        assert!(k >= 1 && k <= self.streams.len(), "stream index {k} out of range");
        &mut self.streams[k - 1]
    }

    pub fn cw(&self, k: usize) -> f64 {
        self.window(k).cw
    }

    pub fn delta_cur(&self, k: usize) -> f64 {
        self.window(k).delta_cur
    }

    /// Overrides the window, e.g. to set up a known state.
    pub fn set_window(&mut self, k: usize, cw: f64, delta_cur: f64) {
        let w = self.window_mut(k);
        w.cw = cw;
        w.delta_cur = delta_cur;
        w.pending = None;
    }

    /// Remembers how the last attempt on stream `k` ended; applied by the
    /// next [`standard_update`](Self::standard_update).
    pub fn record(&mut self, k: usize, outcome: Outcome) {
        self.window_mut(k).pending = Some(outcome);
    }

    /// Binary exponential backoff: double after a collision, reset after a
    /// success, unchanged otherwise.
    pub fn standard_update(&mut self, k: usize) {
        let (lo, hi) = (self.params.cw_min as f64, self.params.cw_max as f64);
        let w = self.window_mut(k);
        match w.pending.take() {
            Some(Outcome::Collision) => w.cw = (2.0 * w.cw).min(hi),
            Some(Outcome::Success) => w.cw = lo,
            Some(Outcome::Deferred) | None => {}
        }
    }

    /// Uniform slot count in `[1, cw_k]` after applying the pending update.
    pub fn draw_backoff<R: Rng + ?Sized>(&mut self, k: usize, rng: &mut R) -> u32 {
        self.standard_update(k);
        self.draw_current(k, rng)
    }

    /// Uniform slot count in `[1, cw_k]` without touching the window.
    pub fn draw_current<R: Rng + ?Sized>(&self, k: usize, rng: &mut R) -> u32 {
        let upper = self.window(k).cw.round().max(1.0) as u32;
        rng.random_range(1..=upper)
    }

    /// Angle-scaled window update for stream `k > 1`.
    ///
    /// Gives up (leaving the window untouched) when the projected SNR is at
    /// or below the floor. Otherwise applies the standard update, strips the
    /// previous packet's adjustment to recover the unscaled window, scales it
    /// by `1 - (θ - π/4)/(π/4)`, clamps, and stores the new adjustment so it
    /// is paid back on the next packet.
    pub fn angle_cw_update(
        &mut self,
        k: usize,
        theta: f64,
        snr_after_projection_db: f64,
        floor_db: f64,
    ) -> Result<Participation> {
        if k <= 1 {
            return Err(Error::Precondition("angle scaling applies to streams k > 1".into()));
        }
        if k > self.streams.len() {
            return Err(Error::Precondition(format!("stream index {k} beyond {} streams", self.streams.len())));
        }
        if !(0.0..=FRAC_PI_2).contains(&theta) {
            return Err(Error::AngleOutOfRange(theta));
        }
        // NaN and the zero-power marker never participate.
        if !(snr_after_projection_db > floor_db) {
            return Ok(Participation::GiveUp);
        }
        self.standard_update(k);
        let (lo, hi) = (self.params.cw_min as f64, self.params.cw_max as f64);
        let w = self.window_mut(k);
        let delta_last = w.delta_cur;
        let cw_orig = w.cw - delta_last;
        let scaled = cw_orig - (theta - FRAC_PI_4) / FRAC_PI_4 * cw_orig;
        w.cw = scaled.clamp(lo, hi);
        w.delta_cur = w.cw - cw_orig;
        Ok(Participation::Contend)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ContentionResult {
    Winner { client: ClientId, slots: u32 },
    Collision { clients: Vec<ClientId>, slots: u32 },
}

impl ContentionResult {
    pub fn slots(&self) -> u32 {
        match self {
            ContentionResult::Winner { slots, .. } | ContentionResult::Collision { slots, .. } => *slots,
        }
    }
}

/// The smallest backoff wins; a tie at the minimum is a collision.
pub fn resolve_contention(backoffs: &[(ClientId, u32)]) -> Result<ContentionResult> {
    let min = backoffs.iter().map(|&(_, s)| s).min().ok_or(Error::NoContenders)?;
    let mut at_min: Vec<ClientId> = backoffs.iter().filter(|&&(_, s)| s == min).map(|&(c, _)| c).collect();
    if at_min.len() == 1 {
        Ok(ContentionResult::Winner { client: at_min[0], slots: min })
    } else {
        at_min.sort_unstable();
        Ok(ContentionResult::Collision { clients: at_min, slots: min })
    }
}
