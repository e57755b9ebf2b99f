//! Throughput as the cell fills up, averaged over seeds.
//!
//!     cargo run --release --example client_sweep -- [antennas] [seeds]

use mimomate::protocols::{run_simulation, ClientLayout, Protocol, SimConfig};

fn main() -> mimomate::Result<()> {
    let mut args = std::env::args().skip(1);
    let antennas: usize = args.next().map_or(2, |s| s.parse().expect("antenna count"));
    let seeds: u64 = args.next().map_or(5, |s| s.parse().expect("seed count"));
    let protocols = [Protocol::Mimomate, Protocol::MimomateAngle, Protocol::Sam, Protocol::Mrc];

    print!("{:>7}", "clients");
    for p in protocols {
        print!("{:>16}", p.as_str());
    }
    println!();
    for count in [3, 6, 9, 12, 15, 20, 25, 30] {
        print!("{count:>7}");
        for protocol in protocols {
            let mut sum = 0.0;
            for seed in 1..=seeds {
                let cfg = SimConfig {
                    seed,
                    protocol,
                    n_antennas: antennas,
                    clients: ClientLayout::Random { count, radius_m: 100.0 },
                    ..SimConfig::default()
                };
                sum += run_simulation(&cfg)?.summary.total_throughput_mbps;
            }
            print!("{:>16.2}", sum / seeds as f64);
        }
        println!();
    }
    Ok(())
}
