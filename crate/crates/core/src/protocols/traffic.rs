use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
#[derive(Default)]
pub enum TrafficModel {
    /// Every client always has a packet queued.
    #[default]
    Continuous,
    /// Poisson file arrivals per client with uniformly distributed sizes.
    Bursty { lambda_files_per_s: f64, file_kb_min: f64, file_kb_max: f64 },
}


impl TrafficModel {
    pub fn bursty_default() -> Self {
        TrafficModel::Bursty { lambda_files_per_s: 2.0, file_kb_min: 500.0, file_kb_max: 550.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if let TrafficModel::Bursty { lambda_files_per_s, file_kb_min, file_kb_max } = *self {
            if !(lambda_files_per_s > 0.0 && lambda_files_per_s.is_finite()) {
                return Err(Error::config("lambda_files_per_s must be positive"));
            }
            if !(file_kb_min > 0.0 && file_kb_min <= file_kb_max && file_kb_max.is_finite()) {
                return Err(Error::config("file size range must satisfy 0 < min <= max"));
            }
        }
        Ok(())
    }
}

/// Bits per kilobyte (1 KB = 1000 bytes).
const KB_BITS: f64 = 8000.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ClientTraffic {
    pub backlog_bits: u64,
    next_arrival_us: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrafficState {
    model: TrafficModel,
    clients: Vec<ClientTraffic>,
    now_us: f64,
    arrivals: u64,
    file_sizes_kb: Vec<f64>,
    log_sizes: bool,
}

impl TrafficState {
    pub fn new<R: Rng + ?Sized>(model: TrafficModel, n_clients: usize, rng: &mut R) -> Self {
        let mut s = TrafficState {
            model,
            clients: Vec::with_capacity(n_clients),
            now_us: 0.0,
            arrivals: 0,
            file_sizes_kb: Vec::new(),
            log_sizes: false,
        };
        for _ in 0..n_clients {
            let next_arrival_us = s.inter_arrival_us(rng);
            s.clients.push(ClientTraffic { backlog_bits: 0, next_arrival_us });
        }
        s
    }

    /// Keeps every generated file size, for inspection in tests.
    pub fn with_size_log(mut self) -> Self {
        self.log_sizes = true;
        self
    }

    fn inter_arrival_us<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.model {
            TrafficModel::Continuous => f64::INFINITY,
            TrafficModel::Bursty { lambda_files_per_s, .. } => {
                Exp::new(lambda_files_per_s).expect("validated rate").sample(rng) * 1e6
            }
        }
    }

    pub fn model(&self) -> &TrafficModel {
        &self.model
    }

    pub fn now_us(&self) -> f64 {
        self.now_us
    }

    pub fn arrivals(&self) -> u64 {
        self.arrivals
    }

    pub fn file_sizes_kb(&self) -> &[f64] {
        &self.file_sizes_kb
    }

    pub fn has_traffic(&self, client: usize) -> bool {
        match self.model {
            TrafficModel::Continuous => true,
            TrafficModel::Bursty { .. } => self.clients[client].backlog_bits > 0,
        }
    }

    /// Queued bits, `None` when unlimited.
    pub fn available_bits(&self, client: usize) -> Option<u64> {
        match self.model {
            TrafficModel::Continuous => None,
            TrafficModel::Bursty { .. } => Some(self.clients[client].backlog_bits),
        }
    }

    pub fn backlog_bits(&self, client: usize) -> u64 {
        self.clients[client].backlog_bits
    }

    /// Removes transmitted (or dropped) bits from a client's queue.
    pub fn consume(&mut self, client: usize, bits: u64) {
        let c = &mut self.clients[client];
        c.backlog_bits = c.backlog_bits.saturating_sub(bits);
    }

    /// Time until the earliest pending arrival.
    pub fn time_to_next_arrival_us(&self) -> f64 {
        self.clients.iter().map(|c| c.next_arrival_us - self.now_us).fold(f64::INFINITY, f64::min).max(0.0)
    }

    /// Advances the clock and enqueues every file that arrived meanwhile.
    pub fn step<R: Rng + ?Sized>(&mut self, elapsed_us: f64, rng: &mut R) {
        debug_assert!(elapsed_us >= 0.0);
        self.now_us += elapsed_us.max(0.0);
        let TrafficModel::Bursty { file_kb_min, file_kb_max, .. } = self.model else {
            return;
        };
        for i in 0..self.clients.len() {
            while self.clients[i].next_arrival_us <= self.now_us {
                let kb = if file_kb_max > file_kb_min { rng.random_range(file_kb_min..=file_kb_max) } else { file_kb_min };
                if self.log_sizes {
                    self.file_sizes_kb.push(kb);
                }
                self.clients[i].backlog_bits += (kb * KB_BITS).round() as u64;
                self.arrivals += 1;
                let gap = self.inter_arrival_us(rng);
                self.clients[i].next_arrival_us += gap;
            }
        }
    }
}

/// Free-function form of [`TrafficState::step`].
pub fn traffic_step<R: Rng + ?Sized>(state: &mut TrafficState, elapsed_us: f64, rng: &mut R) {
    state.step(elapsed_us, rng);
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn continuous_always_has_traffic() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut s = TrafficState::new(TrafficModel::Continuous, 3, &mut rng);
        s.step(1e9, &mut rng);
        s.consume(1, 1 << 40);
        assert!((0..3).all(|c| s.has_traffic(c)));
        assert_eq!(s.available_bits(0), None);
        assert_eq!(s.arrivals(), 0);
    }

    #[test]
    fn poisson_arrival_count() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut s = TrafficState::new(TrafficModel::bursty_default(), 1, &mut rng).with_size_log();
        // 100 s in uneven steps.
        for _ in 0..1000 {
            s.step(100_000.0, &mut rng);
        }
        let n = s.arrivals() as f64;
        // Poisson(200): sigma = sqrt(200)
        assert!((n - 200.0).abs() <= 3.0 * 200f64.sqrt(), "arrivals {n}");
        assert!(s.file_sizes_kb().iter().all(|&kb| (500.0..=550.0).contains(&kb)));
        let expected_bits: u64 = s.file_sizes_kb().iter().map(|kb| (kb * KB_BITS).round() as u64).sum();
        assert_eq!(s.backlog_bits(0), expected_bits);
    }

    #[test]
    fn consume_never_underflows() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut s = TrafficState::new(TrafficModel::bursty_default(), 2, &mut rng);
        s.step(5e6, &mut rng);
        s.consume(0, u64::MAX);
        assert_eq!(s.backlog_bits(0), 0);
        assert!(!s.has_traffic(0));
    }

    #[test]
    fn bad_bursty_parameters() {
        let bad = TrafficModel::Bursty { lambda_files_per_s: 0.0, file_kb_min: 1.0, file_kb_max: 2.0 };
        assert!(bad.validate().is_err());
        let bad = TrafficModel::Bursty { lambda_files_per_s: 1.0, file_kb_min: 3.0, file_kb_max: 2.0 };
        assert!(bad.validate().is_err());
    }
}
