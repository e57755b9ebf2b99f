use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use mimomate::config::{load_config, RateProfile};
use mimomate::metrics::{emit_outputs, projection_curves, write_curves_csv, DEFAULT_CURVE_SNRS_DB};
use mimomate::oracle::{run_sweep, SweepOptions};
use mimomate::protocols::{run_simulation, SimConfig};

#[derive(Parser)]
#[command(name = "mimomate", version, about = "Uplink multiuser-MIMO matching simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one experiment and write rounds.csv, summary.json and matchings.json.
    Run {
        /// TOML experiment description; defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides the seed in the config.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Also write curves.csv for the config's rate table.
        #[arg(long)]
        curves: bool,
    },
    /// Check the matchers against exhaustive search on random instances.
    Verify {
        #[arg(long, default_value_t = 1000)]
        instances: usize,
        #[arg(long, default_value_t = 7)]
        max_clients: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Throughput after projection against the angle, one row per degree.
    Curves {
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_CURVE_SNRS_DB)]
        snr_list: Vec<f64>,
        #[arg(long, default_value = "simulation")]
        table: RateProfile,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> mimomate::Result<bool> {
    match cli.command {
        Command::Run { config, seed, out, curves } => {
            let mut cfg = match config {
                Some(path) => load_config(&path)?,
                None => SimConfig::default(),
            };
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            let run = run_simulation(&cfg)?;
            let points = if curves { Some(projection_curves(&DEFAULT_CURVE_SNRS_DB, &cfg.rate_table)?) } else { None };
            let paths = emit_outputs(&out, &run.summary, &run.records, &run.matchings, points.as_deref())?;
            let s = &run.summary;
            println!(
                "{} seed {}: {} rounds, {:.3} Mb/s, collisions {}, sic cascades {}, short airtime {}",
                s.protocol,
                s.seed,
                s.rounds,
                s.total_throughput_mbps,
                s.failures.collision,
                s.failures.sic_cascade,
                s.failures.insufficient_airtime
            );
            println!("wrote {}", paths.rounds_csv.display());
            Ok(true)
        }
        Command::Verify { instances, max_clients, seed } => {
            let r = run_sweep(&SweepOptions { instances, max_clients, seed })?;
            let verdict = |bad: usize| if bad == 0 { "pass" } else { "FAIL" };
            println!("matcher vs enumeration: {} ({} of {} differ)", verdict(r.matcher_mismatches), r.matcher_mismatches, r.instances);
            println!("fair-assignment bound: {} ({} of {} violate)", verdict(r.theorem_violations), r.theorem_violations, r.instances);
            println!(
                "layered 3-antenna structure: {} ({} of {} violate)",
                verdict(r.layered_structure_violations),
                r.layered_structure_violations,
                r.layered_instances
            );
            println!(
                "layered 3-antenna optimality: {} of {} short of the most triples; weight ratio {:.4} on the rest",
                r.layered_short_of_optimum, r.layered_instances, r.layered_weight_ratio_mean
            );
            Ok(r.passed())
        }
        Command::Curves { snr_list, table, out } => {
            let points = projection_curves(&snr_list, &table.table())?;
            match out {
                Some(path) => {
                    let file = std::fs::File::create(&path).map_err(|source| mimomate::Error::Io { path: path.clone(), source })?;
                    write_curves_csv(file, &points)?;
                }
                None => write_curves_csv(std::io::stdout().lock(), &points)?,
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
