//! How the angle-scaled window favours joiners whose channels are far from
//! the streams already on air.
//!
//!     cargo run --example angle_contention -- [trials]

use std::f64::consts::FRAC_PI_2;

use mimomate::contention::{resolve_contention, BackoffState, ContentionParams, ContentionResult, Participation};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> mimomate::Result<()> {
    let trials: usize = std::env::args().nth(1).map_or(20_000, |s| s.parse().expect("trial count"));
    let params = ContentionParams::default();
    let floor = 4.0;
    // (angle in degrees, SNR after projection)
    let joiners = [(80.0, 20.0), (60.0, 15.0), (45.0, 12.0), (30.0, 6.0), (15.0, 3.0)];

    let mut states: Vec<BackoffState> = joiners.iter().map(|_| BackoffState::new(2, params)).collect();
    for (s, &(deg, snr)) in states.iter_mut().zip(&joiners) {
        let p = s.angle_cw_update(2, (deg as f64).to_radians().min(FRAC_PI_2), snr, floor)?;
        let note = if p == Participation::GiveUp { "gives up" } else { "contends" };
        println!("{deg:>4} degrees, {snr:>4} dB: window {:>5.1}, {note}", s.cw(2));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut wins = vec![0usize; joiners.len()];
    let mut collisions = 0;
    for _ in 0..trials {
        let draws: Vec<(usize, u32)> = states
            .iter()
            .enumerate()
            .filter(|(i, _)| joiners[*i].1 > floor)
            .map(|(i, s)| (i, s.draw_current(2, &mut rng)))
            .collect();
        match resolve_contention(&draws)? {
            ContentionResult::Winner { client, .. } => wins[client] += 1,
            ContentionResult::Collision { .. } => collisions += 1,
        }
    }
    for (w, &(deg, _)) in wins.iter().zip(&joiners) {
        println!("{deg:>4} degrees wins {:.3}", *w as f64 / trials as f64);
    }
    println!("collisions {:.3}", collisions as f64 / trials as f64);
    Ok(())
}
