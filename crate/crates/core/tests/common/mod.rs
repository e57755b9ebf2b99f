#![allow(dead_code)]

use mimomate::channel::{place_clients, sample_channel, ChannelVector, ClientPlacement, PathLoss};
use mimomate::matching::WeightMatrix;
use rand::Rng;

/// All-positive weights on a dyadic grid, so every sum of them is exact.
pub fn dyadic_weights<R: Rng>(rng: &mut R, n: usize) -> WeightMatrix {
    let table: Vec<Vec<f64>> = (0..n)
        .map(|u| (0..n).map(|v| if u == v { 0.0 } else { rng.random_range(1u32..(1 << 20)) as f64 / 1024.0 }).collect())
        .collect();
    WeightMatrix::from_dense(&table).unwrap()
}

/// Rayleigh channels for `n` clients dropped in the default 100 m cell.
pub fn random_cell<R: Rng>(rng: &mut R, n: usize, n_antennas: usize) -> (Vec<ChannelVector>, Vec<f64>) {
    let placements = place_clients(rng, n, 100.0, &PathLoss::default());
    let channels: Vec<ChannelVector> =
        placements.iter().map(|p| sample_channel(rng, p, n_antennas).unwrap()).collect();
    let snrs = channels.iter().map(ChannelVector::snr_db).collect();
    (channels, snrs)
}

pub fn fixed_snr_placements(snrs: &[f64]) -> Vec<ClientPlacement> {
    snrs.iter()
        .enumerate()
        .map(|(client_id, &original_snr_db)| ClientPlacement { client_id, distance_m: 10.0, original_snr_db })
        .collect()
}

pub fn at_distances(distances: &[f64]) -> Vec<ClientPlacement> {
    let pl = PathLoss::default();
    distances
        .iter()
        .enumerate()
        .map(|(client_id, &d)| ClientPlacement { client_id, distance_m: d, original_snr_db: pl.mean_snr_db(d) })
        .collect()
}
