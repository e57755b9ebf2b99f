//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! the process fails if any criterion does.

mod common;

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use mimomate::channel::ChannelVector;
use mimomate::matching::{follower_rates, follower_weight, mwmcm_bipartite, n_mimomate, MatchingConfig, WeightMatrix};
use mimomate::metrics::{critical_angles, emit_outputs, projection_curves};
use mimomate::oracle::{brute_force_three_mimomate, brute_force_two_mimomate, verify_theorems};
use mimomate::protocols::{run_simulation, ClientLayout, Protocol, SimConfig, SimulationRun};
use mimomate::rate::RateTable;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{at_distances, dyadic_weights, fixed_snr_placements, random_cell};

type Outcome = Result<String, String>;

fn within(limit: Duration, started: Instant, detail: String) -> Outcome {
    let took = started.elapsed();
    if took > limit {
        Err(format!("{detail}; took {took:.2?}, limit {limit:?}"))
    } else {
        Ok(format!("{detail}; {took:.2?}"))
    }
}

fn critical_angle() -> Outcome {
    let started = Instant::now();
    let table = RateTable::simulation();
    let points = projection_curves(&[10.0], &table).map_err(|e| e.to_string())?;
    // sin²θ · 10 = 10^0.4
    let analytic = (10f64.powf(0.4 - 1.0)).sqrt().asin().to_degrees();
    for p in &points {
        let zero = p.throughput_mbps == 0.0;
        if zero != ((p.theta_deg as f64) < analytic) {
            return Err(format!("{} deg: throughput {} against analytic edge {analytic:.3}", p.theta_deg, p.throughput_mbps));
        }
    }
    let first = critical_angles(&points)["10"].ok_or("no nonzero throughput at 10 dB")?;
    if (first as f64 - 31.0).abs() > 1.5 {
        return Err(format!("first nonzero degree {first}, expected 31 +- 1.5"));
    }
    within(Duration::from_secs(1), started, format!("analytic edge {analytic:.2} deg, first nonzero {first} deg"))
}

fn sweep_instances() -> Vec<WeightMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    (0..1000).map(|_| {
        let n = rng.random_range(3..=7);
        dyadic_weights(&mut rng, n)
    }).collect()
}

fn total(w: &WeightMatrix, pairs: &[(usize, usize)]) -> f64 {
    pairs.iter().map(|&(u, v)| w.weight(u, v).unwrap()).sum()
}

fn matcher_optimality(instances: &[WeightMatrix]) -> Outcome {
    let started = Instant::now();
    for (i, w) in instances.iter().enumerate() {
        let fast = mwmcm_bipartite(w, &MatchingConfig::new(2)).map_err(|e| e.to_string())?;
        let slow = brute_force_two_mimomate(w).map_err(|e| e.to_string())?;
        let (fw, sw) = (total(w, &fast.pairs()), total(w, &slow.pairs()));
        if fast.len() != slow.len() || fw != sw {
            return Err(format!("instance {i}: matcher {}/{fw}, brute force {}/{sw}", fast.len(), slow.len()));
        }
    }
    within(Duration::from_secs(30), started, format!("{} instances agree exactly", instances.len()))
}

fn theorem_sweep(instances: &[WeightMatrix]) -> Outcome {
    let started = Instant::now();
    let mut min_margin = f64::INFINITY;
    for (i, w) in instances.iter().enumerate() {
        let r = verify_theorems(w).map_err(|e| e.to_string())?;
        if r.t_m != r.t_r {
            return Err(format!("instance {i}: T_M {} != T_R {}", r.t_m, r.t_r));
        }
        let weights: BTreeSet<u64> = w
            .leads()
            .iter()
            .flat_map(|&u| w.followers().iter().filter_map(move |&v| w.weight(u, v)))
            .map(f64::to_bits)
            .collect();
        let non_constant = weights.len() > 1;
        if r.t_m < r.t_uniform || (non_constant && r.t_m <= r.t_uniform) {
            return Err(format!("instance {i}: T_M {} vs uniform {}", r.t_m, r.t_uniform));
        }
        min_margin = min_margin.min(r.uniform_margin());
    }
    within(
        Duration::from_secs(60),
        started,
        format!("T_M = T_R on all {}; smallest margin over uniform {min_margin:.4} Mb/s", instances.len()),
    )
}

fn constraint_audit() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let table = RateTable::simulation();
    let mut ratios = Vec::new();
    let mut short = 0;
    for i in 0..500 {
        let n = rng.random_range(3..=7);
        let (channels, snrs) = random_cell(&mut rng, n, 3);
        let mates = n_mimomate(&channels, &snrs, &table, &MatchingConfig::new(3)).map_err(|e| e.to_string())?;
        mates.check_structure(3).map_err(|e| format!("instance {i}: {e}"))?;
        for (r, rates) in mates.relations().iter().zip(follower_rates(&mates, &channels, &snrs, &table).unwrap()) {
            if rates.iter().any(|x| x.is_none()) {
                return Err(format!("instance {i}: undecodable follower in {r:?}"));
            }
        }
        let by_id = |id: usize| -> &ChannelVector { &channels[id] };
        let triple = |u: usize, v: usize, w: usize| {
            let rv = follower_weight(&[by_id(u)], by_id(v), snrs[v], &table).ok()??;
            let rw = follower_weight(&[by_id(u), by_id(v)], by_id(w), snrs[w], &table).ok()??;
            Some((rv, rw))
        };
        let ids: Vec<usize> = (0..n).collect();
        let best = brute_force_three_mimomate(&ids, triple).map_err(|e| e.to_string())?;
        let full = mates.count_of_len(3);
        if full != best.cardinality {
            short += 1;
            continue;
        }
        if best.weight > 0.0 {
            let got: f64 = mates
                .relations()
                .iter()
                .filter(|r| r.len() == 3)
                .map(|r| triple(r[0], r[1], r[2]).map(|(a, b)| a + b).unwrap())
                .sum();
            ratios.push(got / best.weight);
        }
    }
    ratios.sort_by(f64::total_cmp);
    let mean = ratios.iter().sum::<f64>() / ratios.len().max(1) as f64;
    let detail = format!(
        "{short}/500 with fewer triples than the optimum; weight ratio mean {mean:.4}, min {:.4}",
        ratios.first().copied().unwrap_or(f64::NAN)
    );
    if short > 0 {
        Err(detail)
    } else {
        Ok(detail)
    }
}

fn mean_throughput(base: &SimConfig, protocol: Protocol, seeds: u64) -> mimomate::Result<f64> {
    let mut sum = 0.0;
    for seed in 1..=seeds {
        sum += run_simulation(&SimConfig { seed, protocol, ..base.clone() })?.summary.total_throughput_mbps;
    }
    Ok(sum / seeds as f64)
}

fn throughput_ordering() -> Outcome {
    let started = Instant::now();
    let mut lines = Vec::new();
    let mut ok = true;
    for n in [2, 3] {
        let base = SimConfig { n_antennas: n, ..SimConfig::default() };
        let m = mean_throughput(&base, Protocol::Mimomate, 20).map_err(|e| e.to_string())?;
        let s = mean_throughput(&base, Protocol::Sam, 20).map_err(|e| e.to_string())?;
        let r = mean_throughput(&base, Protocol::Mrc, 20).map_err(|e| e.to_string())?;
        // The ordering is required at the two-antenna default; three antennas are reported.
        if n == 2 {
            ok &= m > s && m > r;
        }
        lines.push(format!(
            "N={n}: mimomate {m:.2}, sam {s:.2} ({:+.1}%), mrc {r:.2} ({:+.1}%)",
            100.0 * (m / s - 1.0),
            100.0 * (m / r - 1.0)
        ));
    }
    let outcome = within(Duration::from_secs(300), started, lines.join("; "));
    if ok {
        outcome
    } else {
        Err(outcome.unwrap_or_else(|e| e))
    }
}

fn testbed(protocol: Protocol, placements: Vec<mimomate::channel::ClientPlacement>) -> mimomate::Result<SimulationRun> {
    run_simulation(&SimConfig {
        protocol,
        n_antennas: 3,
        clients: ClientLayout::Explicit { placements },
        rate_table: RateTable::experimental(),
        ..SimConfig::default()
    })
}

fn balanced() -> Vec<mimomate::channel::ClientPlacement> {
    fixed_snr_placements(&[28.0, 26.0, 24.0, 22.0, 20.0])
}

fn skewed() -> Vec<mimomate::channel::ClientPlacement> {
    at_distances(&[10.0, 20.0, 40.0, 80.0, 95.0])
}

fn fairness() -> Outcome {
    let mut worst = Vec::new();
    let mut failed = Vec::new();
    for protocol in [Protocol::Mimomate, Protocol::Sam, Protocol::Mrc] {
        let run = testbed(protocol, balanced()).map_err(|e| e.to_string())?;
        let v = run.summary.n_clients as f64;
        let p = 1.0 / v;
        let mut max_z: f64 = 0.0;
        for k in [2, 3] {
            // Shares among the rounds that used position k.
            let used = run.records.iter().filter(|r| r.holder(k).is_some()).count() as f64;
            let sigma = (p * (1.0 - p) / used).sqrt();
            for c in 0..run.summary.n_clients {
                let held = run.records.iter().filter(|r| r.holder(k) == Some(c)).count() as f64;
                let z = (held / used - p).abs() / sigma;
                max_z = max_z.max(z);
                if z > 3.0 {
                    failed.push(format!("{protocol} client {c} position {k}: {:.3} ({z:.1} sigma)", held / used));
                }
            }
        }
        worst.push(format!("{protocol} max {max_z:.2} sigma"));
    }
    for protocol in [Protocol::MaxThroughputFirst, Protocol::MaxAngleFirst] {
        let run = testbed(protocol, skewed()).map_err(|e| e.to_string())?;
        let v = run.summary.n_clients as f64;
        let min = (0..run.summary.n_clients).map(|c| run.summary.share(c, 2)).fold(f64::INFINITY, f64::min);
        worst.push(format!("{protocol} min position-2 share {min:.3}"));
        if min >= 1.0 / (2.0 * v) {
            failed.push(format!("{protocol}: no starved client (min share {min:.3})"));
        }
    }
    let detail = worst.join(", ");
    if failed.is_empty() {
        Ok(detail)
    } else {
        Err(format!("{detail}; {}", failed.join("; ")))
    }
}

fn overhead() -> Outcome {
    let frac = |protocol| -> Result<f64, String> {
        let run = testbed(protocol, balanced()).map_err(|e| e.to_string())?;
        run.summary.position_data_fraction[1].ok_or_else(|| format!("{protocol}: position 2 never used"))
    };
    let (m, s, r) = (frac(Protocol::Mimomate)?, frac(Protocol::Sam)?, frac(Protocol::Mrc)?);
    let detail = format!("position-2 data fraction: mimomate {m:.3}, sam {s:.3}, mrc {r:.3}");
    if m > s && m > r && (0.53..=0.73).contains(&m) {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn legacy_degeneration() -> Outcome {
    let base = SimConfig { legacy_ids: (0..15).collect(), ..SimConfig::default() };
    let means: Vec<(Protocol, f64)> = Protocol::ALL
        .iter()
        .map(|&p| mean_throughput(&base, p, 20).map(|m| (p, m)))
        .collect::<mimomate::Result<_>>()
        .map_err(|e| e.to_string())?;
    let lo = means.iter().map(|m| m.1).fold(f64::INFINITY, f64::min);
    let hi = means.iter().map(|m| m.1).fold(0.0, f64::max);
    let detail = format!("mean throughput {lo:.3}..{hi:.3} Mb/s across {} protocols", means.len());
    if hi <= lo * 1.02 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn crossover() -> Outcome {
    let sizes = [3, 6, 9, 12, 15, 20, 25, 30];
    let mut diffs = Vec::new();
    for &n in &sizes {
        let base = SimConfig { clients: ClientLayout::Random { count: n, radius_m: 100.0 }, ..SimConfig::default() };
        let s = mean_throughput(&base, Protocol::Sam, 10).map_err(|e| e.to_string())?;
        let r = mean_throughput(&base, Protocol::Mrc, 10).map_err(|e| e.to_string())?;
        diffs.push((n, s - r));
    }
    let first_below = diffs.iter().find(|d| d.1 < 0.0).map(|d| d.0);
    let detail = format!(
        "sam - mrc: {}; first size where mrc leads: {first_below:?}",
        diffs.iter().map(|(n, d)| format!("{n}:{d:+.2}")).collect::<Vec<_>>().join(" ")
    );
    if diffs[0].1 > 0.0 && diffs[diffs.len() - 1].1 < 0.0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    for protocol in Protocol::ALL {
        let cfg = SimConfig { protocol, n_antennas: 3, rounds: 400, seed: 99, ..SimConfig::default() };
        let mut files = Vec::new();
        for attempt in 0..2 {
            let run = run_simulation(&cfg).map_err(|e| e.to_string())?;
            let out = dir.path().join(format!("{protocol}-{attempt}"));
            let paths = emit_outputs(&out, &run.summary, &run.records, &run.matchings, None).map_err(|e| e.to_string())?;
            files.push(std::fs::read(paths.rounds_csv).map_err(|e| e.to_string())?);
        }
        if files[0] != files[1] {
            return Err(format!("{protocol}: CSV differs between identical runs"));
        }
    }
    Ok(format!("{} protocols, byte-identical CSV", Protocol::ALL.len()))
}

fn main() {
    let instances = sweep_instances();
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("critical angle", Box::new(critical_angle)),
        ("matcher optimality", Box::new(|| matcher_optimality(&instances))),
        ("fair-assignment theorems", Box::new(|| theorem_sweep(&instances))),
        ("layered matching constraints", Box::new(constraint_audit)),
        ("throughput ordering", Box::new(throughput_ordering)),
        ("fairness", Box::new(fairness)),
        ("overhead", Box::new(overhead)),
        ("legacy degeneration", Box::new(legacy_degeneration)),
        ("sam/mrc crossover", Box::new(crossover)),
        ("determinism", Box::new(determinism)),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("criterion {:>2} {name}: PASS ({detail})", i + 1),
            Err(detail) => {
                failures += 1;
                println!("criterion {:>2} {name}: FAIL ({detail})", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
