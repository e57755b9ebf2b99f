//! Uplink channel vectors, inter-client geometry and ZF-SIC effective SNR.
//!
//! A client's SNR is the squared norm of its channel vector (unit noise power
//! per antenna). Projecting a client orthogonally to the subspace spanned by
//! the concurrent clients scales its SNR by `sin²θ`, where `θ` is the angle
//! between its channel and that subspace.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type ClientId = usize;

/// Residual fraction `‖P⊥h‖/‖h‖` below which `h` is treated as lying in the span.
pub const IN_SPAN_TOLERANCE: f64 = 1e-9;

/// Marker for a stream with no usable signal power after projection.
pub const ZERO_POWER_DB: f64 = f64::NEG_INFINITY;

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelVector {
    pub client_id: ClientId,
    gains: Vec<Complex64>,
}

impl ChannelVector {
    pub fn new(client_id: ClientId, gains: Vec<Complex64>) -> Result<Self> {
        if gains.is_empty() {
            return Err(Error::channel(format!("client {client_id}: empty channel vector")));
        }
        if gains.iter().any(|g| !g.re.is_finite() || !g.im.is_finite()) {
            return Err(Error::channel(format!("client {client_id}: non-finite gain")));
        }
        let v = ChannelVector { client_id, gains };
        if v.norm() <= 0.0 {
            return Err(Error::channel(format!("client {client_id}: zero-norm channel")));
        }
        Ok(v)
    }

    /// Convenience constructor from `(re, im)` pairs.
    pub fn from_parts(client_id: ClientId, parts: &[(f64, f64)]) -> Result<Self> {
        Self::new(client_id, parts.iter().map(|&(re, im)| Complex64::new(re, im)).collect())
    }

    pub fn gains(&self) -> &[Complex64] {
        &self.gains
    }

    pub fn n_antennas(&self) -> usize {
        self.gains.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.gains.iter().map(|g| g.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Receive SNR in dB when the client transmits alone.
    pub fn snr_db(&self) -> f64 {
        lin_to_db(self.norm_sqr())
    }

    pub fn scaled(&self, factor: Complex64) -> Result<Self> {
        Self::new(self.client_id, self.gains.iter().map(|g| g * factor).collect())
    }
}

/// Hermitian inner product `⟨a, b⟩ = Σ conj(a_i) b_i`.
fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|g| g.norm_sqr()).sum::<f64>().sqrt()
}

pub fn db_to_lin(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn lin_to_db(lin: f64) -> f64 {
    if lin <= 0.0 {
        ZERO_POWER_DB
    } else {
        10.0 * lin.log10()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClientPlacement {
    pub client_id: ClientId,
    pub distance_m: f64,
    pub original_snr_db: f64,
}

/// Log-distance path loss anchored at a reference distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PathLoss {
    pub reference_distance_m: f64,
    pub reference_snr_db: f64,
    pub exponent: f64,
}

impl Default for PathLoss {
    fn default() -> Self {
        // 5 dB at the 100 m cell edge, 35 dB at 10 m.
        PathLoss { reference_distance_m: 100.0, reference_snr_db: 5.0, exponent: 3.0 }
    }
}

impl PathLoss {
    pub fn mean_snr_db(&self, distance_m: f64) -> f64 {
        self.reference_snr_db + 10.0 * self.exponent * (self.reference_distance_m / distance_m).log10()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.reference_distance_m > 0.0) || !self.reference_snr_db.is_finite() || !(self.exponent > 0.0) {
            return Err(Error::config("path loss needs a positive reference distance and exponent"));
        }
        Ok(())
    }
}

/// Drops `count` clients uniformly at random in a disk around the AP.
pub fn place_clients<R: Rng + ?Sized>(
    rng: &mut R,
    count: usize,
    radius_m: f64,
    path_loss: &PathLoss,
) -> Vec<ClientPlacement> {
    (0..count)
        .map(|client_id| {
            // 1 - U lies in (0, 1], which keeps the distance strictly positive.
            let u: f64 = 1.0 - rng.random::<f64>();
            let distance_m = radius_m * u.sqrt();
            ClientPlacement { client_id, distance_m, original_snr_db: path_loss.mean_snr_db(distance_m) }
        })
        .collect()
}

/// Draws an i.i.d. Rayleigh channel whose mean `‖h‖²` equals the placement's SNR.
pub fn sample_channel<R: Rng + ?Sized>(
    rng: &mut R,
    placement: &ClientPlacement,
    n_antennas: usize,
) -> Result<ChannelVector> {
    if n_antennas == 0 {
        return Err(Error::config("n_antennas must be at least 1"));
    }
    if !placement.original_snr_db.is_finite() {
        return Err(Error::config(format!("client {}: non-finite SNR", placement.client_id)));
    }
    // Each antenna gets variance snr/N, split evenly between I and Q.
    let sigma = (db_to_lin(placement.original_snr_db) / (2.0 * n_antennas as f64)).sqrt();
    let gains = (0..n_antennas)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(sigma * re, sigma * im)
        })
        .collect();
    ChannelVector::new(placement.client_id, gains)
}

fn check_dims(a: &ChannelVector, b: &ChannelVector) -> Result<()> {
    if a.n_antennas() != b.n_antennas() {
        return Err(Error::channel(format!(
            "dimension mismatch: client {} has {} antennas, client {} has {}",
            a.client_id,
            a.n_antennas(),
            b.client_id,
            b.n_antennas()
        )));
    }
    Ok(())
}

pub fn inter_channel_angle(h_u: &ChannelVector, h_v: &ChannelVector) -> Result<f64> {
    check_dims(h_u, h_v)?;
    let denom = h_u.norm() * h_v.norm();
    if !(denom > 0.0) {
        return Err(Error::channel("zero-norm channel"));
    }
    let cos = (inner(h_u.gains(), h_v.gains()).norm() / denom).clamp(0.0, 1.0);
    Ok(cos.acos().clamp(0.0, FRAC_PI_2))
}

/// Orthonormal basis of the span of `vectors` (modified Gram-Schmidt).
///
/// Vectors whose residual is below [`IN_SPAN_TOLERANCE`] of their own norm
/// add nothing to the basis.
pub fn orthonormal_basis(vectors: &[&ChannelVector]) -> Vec<Vec<Complex64>> {
    let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(vectors.len());
    for v in vectors {
        let mut r = v.gains().to_vec();
        for q in &basis {
            let c = inner(q, &r);
            r.iter_mut().zip(q).for_each(|(ri, qi)| *ri -= qi * c);
        }
        let rn = norm(&r);
        if rn > IN_SPAN_TOLERANCE * v.norm() {
            r.iter_mut().for_each(|x| *x /= rn);
            basis.push(r);
        }
    }
    basis
}

/// Angle between `h` and `span(ongoing)`; `π/2` when nothing is ongoing.
pub fn subspace_angle(h: &ChannelVector, ongoing: &[&ChannelVector]) -> Result<f64> {
    for o in ongoing {
        check_dims(h, o)?;
    }
    let hn = h.norm();
    if !(hn > 0.0) {
        return Err(Error::channel("zero-norm channel"));
    }
    if ongoing.is_empty() {
        return Ok(FRAC_PI_2);
    }
    let basis = orthonormal_basis(ongoing);
    let mut residual = h.gains().to_vec();
    // Project twice; the second pass mops up cancellation error.
    for _ in 0..2 {
        for q in &basis {
            let c = inner(q, &residual);
            residual.iter_mut().zip(q).for_each(|(ri, qi)| *ri -= qi * c);
        }
    }
    let rn = norm(&residual);
    if rn < IN_SPAN_TOLERANCE * hn {
        return Ok(0.0);
    }
    let projected: Vec<Complex64> = h.gains().iter().zip(&residual).map(|(a, b)| a - b).collect();
    Ok(rn.atan2(norm(&projected)).clamp(0.0, FRAC_PI_2))
}

/// SNR after projecting at angle `theta`; [`ZERO_POWER_DB`] when `theta` is 0.
pub fn projected_snr(original_snr_db: f64, theta: f64) -> Result<f64> {
    if !(0.0..=FRAC_PI_2).contains(&theta) {
        return Err(Error::AngleOutOfRange(theta));
    }
    let s = theta.sin();
    Ok(lin_to_db(db_to_lin(original_snr_db) * s * s))
}

/// Effective SNR of each stream in joining order under ZF-SIC.
///
/// The stream at position `k` is decoded by projecting orthogonally to the
/// `k - 1` streams that joined before it; the first stream is recovered after
/// every later stream has been cancelled and keeps its original SNR.
pub fn zf_sic_snr_chain(chain: &[(&ChannelVector, f64)], n_antennas: usize) -> Result<Vec<f64>> {
    if chain.len() > n_antennas {
        return Err(Error::DegreesOfFreedomExceeded { len: chain.len(), n_antennas });
    }
    let channels: Vec<&ChannelVector> = chain.iter().map(|(h, _)| *h).collect();
    chain
        .iter()
        .enumerate()
        .map(|(k, &(h, snr))| {
            if k == 0 {
                // Still validate the dimension against the AP.
                if h.n_antennas() != n_antennas {
                    return Err(Error::channel(format!(
                        "client {} has {} antennas, AP has {}",
                        h.client_id,
                        h.n_antennas(),
                        n_antennas
                    )));
                }
                Ok(snr)
            } else {
                projected_snr(snr, subspace_angle(h, &channels[..k])?)
            }
        })
        .collect()
}
