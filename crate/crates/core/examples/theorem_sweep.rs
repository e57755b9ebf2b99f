//! Random positive weight instances: the optimal matching's average follower
//! throughput against the best fair probabilistic assignment and against
//! uniformly random follower contention.
//!
//!     cargo run --release --example theorem_sweep -- [instances] [seed]

use mimomate::oracle::{random_positive_weights, verify_theorems};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> mimomate::Result<()> {
    let mut args = std::env::args().skip(1);
    let instances: usize = args.next().map_or(500, |s| s.parse().expect("instance count"));
    let seed: u64 = args.next().map_or(1, |s| s.parse().expect("seed"));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let (mut equal, mut worst_margin, mut mean_gain) = (0, f64::INFINITY, 0.0);
    for _ in 0..instances {
        let n = rng.random_range(3..=7);
        let r = verify_theorems(&random_positive_weights(&mut rng, n))?;
        assert!(r.verdict, "matching lost to a fair assignment: {r:?}");
        equal += r.matches_fair_optimum() as usize;
        worst_margin = worst_margin.min(r.uniform_margin());
        mean_gain += r.t_m / r.t_uniform;
    }
    println!("matching equals the fair optimum on {equal} of {instances}");
    println!("smallest gain over uniform contention {worst_margin:.4}");
    println!("mean ratio to uniform {:.4}", mean_gain / instances as f64);
    Ok(())
}
