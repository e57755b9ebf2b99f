//! Builds 3-antenna mate tuples layer by layer and compares them with the
//! best set of triples found by exhaustive search. The layered matcher is a
//! heuristic, so it can come up short.
//!
//!     cargo run --example layered_matching -- [clients<=7] [seed]

use mimomate::channel::{place_clients, sample_channel, ChannelVector, ClientId, PathLoss};
use mimomate::matching::{follower_weight, mate_set_weight, n_mimomate, MatchingConfig};
use mimomate::oracle::brute_force_three_mimomate;
use mimomate::rate::RateTable;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> mimomate::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map_or(6, |s| s.parse().expect("client count"));
    let seed: u64 = args.next().map_or(1, |s| s.parse().expect("seed"));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let placements = place_clients(&mut rng, n, 60.0, &PathLoss::default());
    let channels: Vec<ChannelVector> =
        placements.iter().map(|p| sample_channel(&mut rng, p, 3)).collect::<mimomate::Result<_>>()?;
    let snrs: Vec<f64> = channels.iter().map(ChannelVector::snr_db).collect();
    let table = RateTable::simulation();

    let mates = n_mimomate(&channels, &snrs, &table, &MatchingConfig::new(3))?;
    println!("layered: {:?}", mates.relations());
    println!("  follower total {:?} Mb/s", mate_set_weight(&mates, &channels, &snrs, &table)?);

    let triple = |u: ClientId, v: ClientId, x: ClientId| {
        let rv = follower_weight(&[&channels[u]], &channels[v], snrs[v], &table).ok()??;
        let rx = follower_weight(&[&channels[u], &channels[v]], &channels[x], snrs[x], &table).ok()??;
        Some((rv, rx))
    };
    let ids: Vec<ClientId> = (0..n).collect();
    let best = brute_force_three_mimomate(&ids, triple)?;
    println!("exhaustive: {:?}", best.mates.relations());
    println!("  {} triples, follower total {} Mb/s", best.cardinality, best.weight);
    println!("layered found {} full triples", mates.count_of_len(3));
    Ok(())
}
