//! Properties every simulated round must satisfy, whatever the protocol.

mod common;

use mimomate::protocols::{run_simulation, ClientLayout, FailureCause, PacketSize, Protocol, SimConfig, TrafficModel};
use mimomate::rate::RateTable;
use proptest::prelude::*;

fn check(cfg: &SimConfig) {
    let run = run_simulation(cfg).unwrap();
    let n = cfg.n_antennas;
    let min_rate = cfg.rate_table.base_rate();
    assert_eq!(run.records.len() as u64, cfg.rounds);
    for (i, r) in run.records.iter().enumerate() {
        assert_eq!(r.round, i as u64);
        assert!(!r.streams.is_empty());
        let mut seen = std::collections::BTreeSet::new();
        for (k, s) in r.streams.iter().enumerate() {
            assert_eq!(s.position, k + 1, "positions are consecutive");
            assert!(seen.insert(s.client_id), "client twice in one round");
            assert!(s.data_us >= 0.0 && s.overhead_us >= 0.0);
            assert!((s.data_us + s.overhead_us - r.duration_us()).abs() < 1e-6, "streams end together");
            if s.decoded {
                assert!(s.rate_mbps >= min_rate);
            } else {
                assert_eq!(s.bits, 0);
            }
            if cfg.legacy_ids.contains(&s.client_id) {
                assert_eq!(s.position, 1, "legacy client joined");
            }
        }
        match r.failure_cause {
            FailureCause::Collision => assert!(r.streams.iter().all(|s| !s.decoded)),
            _ => assert!(r.streams.len() <= n),
        }
        if cfg.protocol == Protocol::Legacy80211 {
            assert_eq!(r.streams.len(), 1);
        }
    }
    let bits: u64 = run.records.iter().map(|r| r.bits()).sum();
    assert_eq!(bits, run.summary.total_bits);
}

#[test]
fn defaults_hold_for_every_protocol() {
    for protocol in Protocol::ALL {
        for n in 1..=3 {
            check(&SimConfig { protocol, n_antennas: n, rounds: 300, ..SimConfig::default() });
        }
    }
}

#[test]
fn mixed_cells_and_variable_packets() {
    for protocol in Protocol::ALL {
        check(&SimConfig {
            protocol,
            n_antennas: 3,
            rounds: 300,
            legacy_ids: [1, 4, 7].into(),
            packet: PacketSize::Uniform { min_bytes: 200, max_bytes: 1500 },
            rate_table: RateTable::experimental(),
            rematch_every: Some(50),
            ..SimConfig::default()
        });
    }
}

#[test]
fn bursty_traffic_runs() {
    for protocol in [Protocol::Mimomate, Protocol::Sam, Protocol::Mrc] {
        check(&SimConfig { protocol, rounds: 200, traffic: TrafficModel::bursty_default(), ..SimConfig::default() });
    }
}

#[test]
fn same_seed_same_records() {
    let cfg = SimConfig { protocol: Protocol::MimomateAngle, rounds: 200, ..SimConfig::default() };
    assert_eq!(run_simulation(&cfg).unwrap().records, run_simulation(&cfg).unwrap().records);
    let other = SimConfig { seed: 2, ..cfg.clone() };
    assert_ne!(run_simulation(&cfg).unwrap().records, run_simulation(&other).unwrap().records);
}

#[test]
fn only_matching_protocols_announce() {
    for protocol in Protocol::ALL {
        let run = run_simulation(&SimConfig { protocol, rounds: 100, ..SimConfig::default() }).unwrap();
        assert_eq!(!run.matchings.is_empty(), protocol.uses_matching(), "{protocol}");
    }
}

#[test]
fn one_client_cell() {
    for protocol in Protocol::ALL {
        let cfg = SimConfig {
            protocol,
            rounds: 50,
            clients: ClientLayout::Explicit { placements: common::fixed_snr_placements(&[20.0]) },
            ..SimConfig::default()
        };
        let run = run_simulation(&cfg).unwrap();
        assert!(run.records.iter().all(|r| r.streams.len() == 1 && r.streams[0].decoded));
    }
}

#[test]
fn undecodable_cells_are_rejected() {
    let cfg = SimConfig {
        clients: ClientLayout::Explicit { placements: common::fixed_snr_placements(&[-20.0, -30.0]) },
        ..SimConfig::default()
    };
    assert!(run_simulation(&cfg).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn random_configs_hold(
        seed in any::<u64>(),
        p in 0usize..7,
        n in 1usize..=4,
        count in 1usize..=20,
        legacy in 0usize..=3,
    ) {
        let cfg = SimConfig {
            seed,
            protocol: Protocol::ALL[p],
            n_antennas: n,
            rounds: 80,
            clients: ClientLayout::Explicit {
                placements: common::at_distances(&(0..count).map(|i| 5.0 + 4.0 * i as f64).collect::<Vec<_>>()),
            },
            legacy_ids: (0..legacy.min(count)).collect(),
            ..SimConfig::default()
        };
        check(&cfg);
    }
}
