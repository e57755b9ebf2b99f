//! Throughput of a joining stream against the angle between its channel and
//! the streams already on air, and the angle below which it cannot decode.
//!
//!     cargo run --example projection_curve -- [snr_db ...]

use mimomate::metrics::{critical_angles, projection_curves, DEFAULT_CURVE_SNRS_DB};
use mimomate::rate::RateTable;

fn main() -> mimomate::Result<()> {
    let snrs: Vec<f64> = std::env::args().skip(1).map(|s| s.parse().expect("SNR in dB")).collect();
    let snrs = if snrs.is_empty() { DEFAULT_CURVE_SNRS_DB.to_vec() } else { snrs };
    let points = projection_curves(&snrs, &RateTable::simulation())?;

    print!("{:>5}", "deg");
    for s in &snrs {
        print!("{:>9}", format!("{s} dB"));
    }
    println!();
    for deg in (0..=90).step_by(10) {
        print!("{deg:>5}");
        for s in &snrs {
            let p = points.iter().find(|p| p.snr_db == *s && p.theta_deg == deg).unwrap();
            print!("{:>9}", p.throughput_mbps);
        }
        println!();
    }
    for (snr, angle) in critical_angles(&points) {
        match angle {
            Some(a) => println!("{snr} dB: decodable from {a} degrees"),
            None => println!("{snr} dB: never decodable"),
        }
    }
    Ok(())
}
