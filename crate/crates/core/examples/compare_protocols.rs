//! Mean aggregate throughput of every protocol over a handful of seeds.
//!
//!     cargo run --release --example compare_protocols -- [clients] [antennas] [seeds]

use mimomate::protocols::{run_simulation, ClientLayout, Protocol, SimConfig};

fn main() -> mimomate::Result<()> {
    let args: Vec<usize> = std::env::args().skip(1).map(|a| a.parse().expect("numeric argument")).collect();
    let clients = args.first().copied().unwrap_or(15);
    let antennas = args.get(1).copied().unwrap_or(2);
    let seeds = args.get(2).copied().unwrap_or(20) as u64;

    println!("{clients} clients, {antennas} antennas, {seeds} seeds");
    println!("{:<22} {:>10} {:>10} {:>10}", "protocol", "Mb/s", "collide", "no-room");
    let mut baseline = None;
    for protocol in Protocol::ALL {
        let (mut mbps, mut collisions, mut short) = (0.0, 0, 0);
        for seed in 1..=seeds {
            let cfg = SimConfig {
                seed,
                protocol,
                n_antennas: antennas,
                clients: ClientLayout::Random { count: clients, radius_m: 100.0 },
                ..SimConfig::default()
            };
            let s = run_simulation(&cfg)?.summary;
            mbps += s.total_throughput_mbps / seeds as f64;
            collisions += s.failures.collision;
            short += s.failures.insufficient_airtime;
        }
        let gain = match baseline {
            None => {
                baseline = Some(mbps);
                String::new()
            }
            Some(b) => format!("  ({:+.1}% vs mimomate)", 100.0 * (mbps / b - 1.0)),
        };
        println!("{:<22} {:>10.3} {:>10} {:>10}{gain}", protocol.as_str(), mbps, collisions, short);
    }
    Ok(())
}
