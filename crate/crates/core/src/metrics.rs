//! Aggregation of round records and the files a run leaves behind.

use std::collections::BTreeMap;
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::channel::{projected_snr, ClientId};
use crate::error::{Error, Result};
use crate::protocols::{FailureCause, MatchEvent, Protocol, RoundRecord, SimConfig, StreamRecord};
use crate::rate::RateTable;

pub const ROUNDS_CSV_HEADER: [&str; 11] = [
    "round",
    "protocol",
    "position",
    "client_id",
    "rate_mbps",
    "effective_snr_db",
    "data_us",
    "overhead_us",
    "bits",
    "decoded",
    "failure_cause",
];

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailureCounts {
    pub collision: u64,
    pub sic_cascade: u64,
    pub insufficient_airtime: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub protocol: Protocol,
    pub seed: u64,
    pub rounds: u64,
    pub n_antennas: usize,
    pub n_clients: usize,
    /// Delivered bits over the channel time of all rounds, in Mb/s.
    pub total_throughput_mbps: f64,
    pub total_bits: u64,
    pub total_airtime_us: f64,
    /// `shares[c][k-1]`: fraction of rounds in which client `c` held position `k`.
    pub shares: Vec<Vec<f64>>,
    /// Mean data fraction of the streams at each position; `None` if never used.
    pub position_data_fraction: Vec<Option<f64>>,
    pub failures: FailureCounts,
    pub rematches: u64,
}

impl ExperimentSummary {
    pub fn share(&self, client: ClientId, position: usize) -> f64 {
        self.shares.get(client).and_then(|s| s.get(position - 1)).copied().unwrap_or(0.0)
    }
}

pub fn summarize(config: &SimConfig, records: &[RoundRecord], rematches: u64) -> ExperimentSummary {
    let n_clients = config.clients.count();
    let total_bits: u64 = records.iter().map(RoundRecord::bits).sum();
    let total_airtime_us: f64 = records.iter().map(RoundRecord::duration_us).sum();
    let mut failures = FailureCounts::default();
    for r in records {
        match r.failure_cause {
            FailureCause::None => {}
            FailureCause::Collision => failures.collision += 1,
            FailureCause::SicCascade => failures.sic_cascade += 1,
            FailureCause::InsufficientAirtime => failures.insufficient_airtime += 1,
        }
    }
    ExperimentSummary {
        protocol: config.protocol,
        seed: config.seed,
        rounds: records.len() as u64,
        n_antennas: config.n_antennas,
        n_clients,
        total_throughput_mbps: if total_airtime_us > 0.0 { total_bits as f64 / total_airtime_us } else { 0.0 },
        total_bits,
        total_airtime_us,
        shares: fairness_shares(records, n_clients, config.n_antennas),
        position_data_fraction: position_data_fraction(records, config.n_antennas),
        failures,
        rematches,
    }
}

/// Fraction of rounds in which each client held each position `1..=n_positions`.
pub fn fairness_shares(records: &[RoundRecord], n_clients: usize, n_positions: usize) -> Vec<Vec<f64>> {
    let mut counts = vec![vec![0u64; n_positions]; n_clients];
    for r in records {
        for s in &r.streams {
            if s.position <= n_positions && s.client_id < n_clients {
                counts[s.client_id][s.position - 1] += 1;
            }
        }
    }
    let total = records.len().max(1) as f64;
    counts.into_iter().map(|row| row.into_iter().map(|c| c as f64 / total).collect()).collect()
}

pub fn position_data_fraction(records: &[RoundRecord], n_positions: usize) -> Vec<Option<f64>> {
    let mut sums = vec![(0.0, 0u64); n_positions];
    for s in records.iter().flat_map(|r| &r.streams) {
        if let Some(slot) = sums.get_mut(s.position - 1) {
            let total = s.data_us + s.overhead_us;
            if total > 0.0 {
                slot.0 += s.data_us / total;
                slot.1 += 1;
            }
        }
    }
    sums.into_iter().map(|(sum, n)| (n > 0).then(|| sum / n as f64)).collect()
}

/// Delivered throughput of each round in Mb/s.
pub fn round_throughputs(records: &[RoundRecord]) -> Vec<f64> {
    records
        .iter()
        .map(|r| {
            let d = r.duration_us();
            if d > 0.0 {
                r.bits() as f64 / d
            } else {
                0.0
            }
        })
        .collect()
}

/// Empirical CDF: distinct values ascending, each with the fraction of
/// samples at or below it.
pub fn cdf_points(values: &[f64]) -> Vec<(f64, f64)> {
    let mut sorted: Vec<f64> = values.iter().copied().filter(|v| !v.is_nan()).collect();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (i, v) in sorted.iter().enumerate() {
        let frac = (i + 1) as f64 / n;
        match out.last_mut() {
            Some(last) if last.0 == *v => last.1 = frac,
            _ => out.push((*v, frac)),
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub snr_db: f64,
    pub theta_deg: u32,
    pub projected_snr_db: f64,
    pub throughput_mbps: f64,
}

/// Throughput after projection for each SNR, one point per whole degree 0..=90.
pub fn projection_curves(snr_list_db: &[f64], table: &RateTable) -> Result<Vec<CurvePoint>> {
    let mut out = Vec::with_capacity(snr_list_db.len() * 91);
    for &snr_db in snr_list_db {
        if !snr_db.is_finite() {
            return Err(Error::config(format!("curve SNR must be finite, got {snr_db}")));
        }
        for theta_deg in 0..=90u32 {
            let projected_snr_db = projected_snr(snr_db, (theta_deg as f64).to_radians().min(std::f64::consts::FRAC_PI_2))?;
            let throughput_mbps = table.snr_to_rate(projected_snr_db).unwrap_or(0.0);
            out.push(CurvePoint { snr_db, theta_deg, projected_snr_db, throughput_mbps });
        }
    }
    Ok(out)
}

pub const DEFAULT_CURVE_SNRS_DB: [f64; 5] = [5.0, 10.0, 15.0, 20.0, 25.0];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputPaths {
    pub rounds_csv: PathBuf,
    pub summary_json: PathBuf,
    pub matchings_json: PathBuf,
    pub curves_csv: Option<PathBuf>,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io { path: path.to_path_buf(), source }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> Error + '_ {
    move |source| Error::Csv { path: path.to_path_buf(), source }
}

/// Writes `rounds.csv`, `summary.json`, `matchings.json` and, when given,
/// `curves.csv` into `dir`.
pub fn emit_outputs(
    dir: &Path,
    summary: &ExperimentSummary,
    records: &[RoundRecord],
    matchings: &[MatchEvent],
    curves: Option<&[CurvePoint]>,
) -> Result<OutputPaths> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let rounds_csv = dir.join("rounds.csv");
    let file = fs::File::create(&rounds_csv).map_err(io_err(&rounds_csv))?;
    write_rounds_csv(file, records).map_err(|e| relocate(e, &rounds_csv))?;

    let summary_json = dir.join("summary.json");
    write_json(&summary_json, summary)?;
    let matchings_json = dir.join("matchings.json");
    write_json(&matchings_json, &matchings)?;

    let curves_csv = match curves {
        Some(points) => {
            let path = dir.join("curves.csv");
            let file = fs::File::create(&path).map_err(io_err(&path))?;
            write_curves_csv(file, points).map_err(|e| relocate(e, &path))?;
            Some(path)
        }
        None => None,
    };
    Ok(OutputPaths { rounds_csv, summary_json, matchings_json, curves_csv })
}

fn relocate(e: Error, path: &Path) -> Error {
    match e {
        Error::Io { source, .. } => Error::Io { path: path.to_path_buf(), source },
        Error::Csv { source, .. } => Error::Csv { path: path.to_path_buf(), source },
        other => other,
    }
}

fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|source| Error::Json { path: path.to_path_buf(), source })?;
    text.push('\n');
    fs::write(path, text).map_err(io_err(path))
}

pub fn write_rounds_csv<W: Write>(writer: W, records: &[RoundRecord]) -> Result<()> {
    let here = Path::new("<rounds>");
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(ROUNDS_CSV_HEADER).map_err(csv_err(here))?;
    for r in records {
        for s in &r.streams {
            w.write_record([
                r.round.to_string(),
                r.protocol.to_string(),
                s.position.to_string(),
                s.client_id.to_string(),
                s.rate_mbps.to_string(),
                s.effective_snr_db.to_string(),
                s.data_us.to_string(),
                s.overhead_us.to_string(),
                s.bits.to_string(),
                s.decoded.to_string(),
                r.failure_cause.as_str().to_string(),
            ])
            .map_err(csv_err(here))?;
        }
    }
    w.flush().map_err(io_err(here))
}

fn field<T: std::str::FromStr>(row: &csv::StringRecord, i: usize, line: u64) -> Result<T> {
    let raw = row.get(i).unwrap_or("");
    raw.parse().map_err(|_| Error::config(format!("rounds CSV line {line}: bad {} value {raw:?}", ROUNDS_CSV_HEADER[i])))
}

/// Parses a rounds CSV back into records (rounds without streams are not representable).
pub fn read_rounds_csv<R: Read>(reader: R) -> Result<Vec<RoundRecord>> {
    let here = Path::new("<rounds>");
    let mut rdr = csv::Reader::from_reader(reader);
    let header = rdr.headers().map_err(csv_err(here))?.clone();
    if header.iter().ne(ROUNDS_CSV_HEADER) {
        return Err(Error::config(format!("unexpected rounds CSV header {header:?}")));
    }
    let mut out: Vec<RoundRecord> = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row.map_err(csv_err(here))?;
        let line = i as u64 + 2;
        let round: u64 = field(&row, 0, line)?;
        let protocol: Protocol = field(&row, 1, line)?;
        let failure_cause: FailureCause = field(&row, 10, line)?;
        let stream = StreamRecord {
            position: field(&row, 2, line)?,
            client_id: field(&row, 3, line)?,
            rate_mbps: field(&row, 4, line)?,
            effective_snr_db: field(&row, 5, line)?,
            data_us: field(&row, 6, line)?,
            overhead_us: field(&row, 7, line)?,
            bits: field(&row, 8, line)?,
            decoded: field(&row, 9, line)?,
        };
        match out.last_mut() {
            Some(last) if last.round == round => last.streams.push(stream),
            _ => out.push(RoundRecord { round, protocol, streams: vec![stream], failure_cause }),
        }
    }
    Ok(out)
}

pub fn write_curves_csv<W: Write>(writer: W, points: &[CurvePoint]) -> Result<()> {
    let here = Path::new("<curves>");
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["snr_db", "theta_deg", "projected_snr_db", "throughput_mbps"]).map_err(csv_err(here))?;
    for p in points {
        w.write_record([
            p.snr_db.to_string(),
            p.theta_deg.to_string(),
            p.projected_snr_db.to_string(),
            p.throughput_mbps.to_string(),
        ])
        .map_err(csv_err(here))?;
    }
    w.flush().map_err(io_err(here))
}

/// Smallest whole degree with nonzero throughput on each curve.
pub fn critical_angles(points: &[CurvePoint]) -> BTreeMap<String, Option<u32>> {
    let mut out: BTreeMap<String, Option<u32>> = BTreeMap::new();
    for p in points {
        let entry = out.entry(p.snr_db.to_string()).or_insert(None);
        if entry.is_none() && p.throughput_mbps > 0.0 {
            *entry = Some(p.theta_deg);
        }
    }
    out
}
