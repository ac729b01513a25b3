//! Measured-power additive white Gaussian noise.
//!
//! Signal power is the mean of `|F_pq|²` over all `N²` entries. Each entry
//! receives complex Gaussian noise of total variance `P·10^(−SNR/10)`, split
//! evenly between real and imaginary parts.
//!
//! Samples come from ChaCha8 seeded with `seed` (via `seed_from_u64`) on
//! stream `stream`, drawn column-major over entries, real part first.
//! Giving every frequency its own stream keeps parallel generation
//! independent of scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{MsrMatrix, Provenance};
use crate::error::{Error, Result};

/// Same as [`add_awgn_stream`] on stream 0.
pub fn add_awgn(msr: &MsrMatrix, snr_db: f64, seed: u64) -> Result<MsrMatrix> {
    add_awgn_stream(msr, snr_db, seed, 0)
}

/// Adds noise at `snr_db` decibels. `+∞` returns the input unchanged.
pub fn add_awgn_stream(msr: &MsrMatrix, snr_db: f64, seed: u64, stream: u64) -> Result<MsrMatrix> {
    if snr_db.is_nan() || snr_db == f64::NEG_INFINITY {
        return Err(Error::config("snr_db", format!("must be finite or +inf, got {snr_db}")));
    }
    if !msr.is_finite() {
        return Err(Error::Numeric("MSR matrix has non-finite entries".into()));
    }
    if snr_db == f64::INFINITY {
        return Ok(msr.clone());
    }
    let count = msr.entries.len() as f64;
    let power = msr.entries.iter().map(|z| z.norm_sqr()).sum::<f64>() / count;
    if power == 0.0 {
        return Err(Error::Numeric("signal power is zero, SNR undefined".into()));
    }
    let sigma = (power * 10f64.powf(-snr_db / 10.0) / 2.0).sqrt();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let mut entries = msr.entries.clone();
    for z in entries.iter_mut() {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        z.re += sigma * re;
        z.im += sigma * im;
    }
    Ok(MsrMatrix {
        entries,
        frequency: msr.frequency,
        provenance: Provenance::Noisy {
            source: Box::new(msr.provenance.clone()),
            snr_db,
            seed,
            stream,
        },
    })
}
