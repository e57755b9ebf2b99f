//! Per-client share of the second and third stream, and the data fraction of
//! each position, for a small testbed-like cell.
//!
//!     cargo run --release --example fairness -- [seed] [balanced|skewed]

use mimomate::channel::ClientPlacement;
use mimomate::protocols::{run_simulation, ClientLayout, Protocol, SimConfig};
use mimomate::rate::RateTable;

fn placements(snrs: &[f64]) -> Vec<ClientPlacement> {
    snrs.iter()
        .enumerate()
        .map(|(client_id, &original_snr_db)| ClientPlacement { client_id, distance_m: 10.0, original_snr_db })
        .collect()
}

fn main() -> mimomate::Result<()> {
    let mut args = std::env::args().skip(1);
    let seed: u64 = args.next().map_or(1, |s| s.parse().expect("numeric seed"));
    let skewed = args.next().as_deref() == Some("skewed");
    let snrs: &[f64] = if skewed { &[35.0, 26.0, 17.0, 8.0, 5.7] } else { &[28.0, 26.0, 24.0, 22.0, 20.0] };

    for protocol in Protocol::ALL {
        let cfg = SimConfig {
            seed,
            protocol,
            n_antennas: 3,
            clients: ClientLayout::Explicit { placements: placements(snrs) },
            rate_table: RateTable::experimental(),
            ..SimConfig::default()
        };
        let s = run_simulation(&cfg)?.summary;
        let col = |k: usize| (0..s.n_clients).map(|c| format!("{:.3}", s.share(c, k))).collect::<Vec<_>>().join(" ");
        let frac = |k: usize| s.position_data_fraction[k - 1].map_or("-".into(), |f| format!("{f:.3}"));
        println!("{:<21} pos2 [{}]  pos3 [{}]", protocol.as_str(), col(2), col(3));
        println!("{:<21} data fraction 1/2/3: {} {} {}  ({:.2} Mb/s)", "", frac(1), frac(2), frac(3), s.total_throughput_mbps);
    }
    Ok(())
}
