//! Pairs clients for a 2-antenna AP on random channels and checks the result
//! against exhaustive search.
//!
//!     cargo run --example pair_matching -- [clients] [seed]

use mimomate::channel::{inter_channel_angle, place_clients, sample_channel, ChannelVector, PathLoss};
use mimomate::matching::{pair_weights, two_mimomate};
use mimomate::oracle::brute_force_two_mimomate;
use mimomate::rate::RateTable;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> mimomate::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map_or(6, |s| s.parse().expect("client count"));
    let seed: u64 = args.next().map_or(1, |s| s.parse().expect("seed"));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let placements = place_clients(&mut rng, n, 100.0, &PathLoss::default());
    let channels: Vec<ChannelVector> =
        placements.iter().map(|p| sample_channel(&mut rng, p, 2)).collect::<mimomate::Result<_>>()?;
    let snrs: Vec<f64> = channels.iter().map(ChannelVector::snr_db).collect();
    let table = RateTable::simulation();

    for (h, s) in channels.iter().zip(&snrs) {
        println!("client {}: {:.1} dB, standalone {:?} Mb/s", h.client_id, s, table.snr_to_rate(*s));
    }
    let mates = two_mimomate(&channels, &snrs, &table)?;
    let weights = pair_weights(&channels, &snrs, &table)?;
    let mut total = 0.0;
    for &(u, v) in &mates.pairs() {
        let w = weights.weight(u, v).unwrap_or(0.0);
        let deg = inter_channel_angle(&channels[u], &channels[v])?.to_degrees();
        println!("lead {u} -> follower {v}: {w} Mb/s at {deg:.1} degrees");
        total += w;
    }
    let best = brute_force_two_mimomate(&weights)?;
    let best_total: f64 = best.pairs().iter().map(|&(u, v)| weights.weight(u, v).unwrap_or(0.0)).sum();
    println!("{} pairs, {total} Mb/s; exhaustive: {} pairs, {best_total} Mb/s", mates.len(), best.len());
    Ok(())
}
