//! A cell mixing single-stream legacy clients with multiuser-capable ones.
//! Legacy clients may lead a transmission but never join one.
//!
//!     cargo run --release --example legacy_coexistence -- [legacy_count] [seed]

use mimomate::protocols::{run_simulation, Protocol, SimConfig};

fn main() -> mimomate::Result<()> {
    let mut args = std::env::args().skip(1);
    let legacy: usize = args.next().map_or(5, |s| s.parse().expect("legacy count"));
    let seed: u64 = args.next().map_or(1, |s| s.parse().expect("seed"));

    for protocol in [Protocol::Mimomate, Protocol::Sam, Protocol::Mrc, Protocol::Legacy80211] {
        let cfg = SimConfig { seed, protocol, legacy_ids: (0..legacy).collect(), ..SimConfig::default() };
        let run = run_simulation(&cfg)?;
        let legacy_leads = run.records.iter().filter(|r| r.holder(1).is_some_and(|c| c < legacy)).count();
        let legacy_joins = run
            .records
            .iter()
            .flat_map(|r| &r.streams)
            .filter(|s| s.position > 1 && s.client_id < legacy)
            .count();
        println!(
            "{:<13} {:>7.2} Mb/s  legacy leads {:>4}  legacy joins {}",
            protocol.as_str(),
            run.summary.total_throughput_mbps,
            legacy_leads,
            legacy_joins
        );
    }
    Ok(())
}
