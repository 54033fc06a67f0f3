//! Random shifts and Monte Carlo samples from a single seeded ChaCha20 stream
//! family.
//!
//! Every variate is addressed by its position in the stream, so sample `i`
//! can be generated independently of samples `0..i` and parallel evaluation
//! reproduces the sequential output exactly.

use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::normal;

pub const RNG_ID: &str = "chacha20-seed_from_u64-u53";

/// Stream used for random shifts.
pub const SHIFT_STREAM: u64 = 1;
/// Stream used for Monte Carlo samples.
pub const MC_STREAM: u64 = 2;

const SCALE: f64 = 1.0 / (1u64 << 53) as f64;

fn rng_at(seed: u64, stream: u64, index: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    // two 32-bit words per u64 draw
    rng.set_word_pos(2 * index as u128);
    rng
}

/// Uniform draw in `[0, 1)` with 53 random bits.
#[inline]
fn unit_closed_open(rng: &mut ChaCha20Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * SCALE
}

/// Uniform draw strictly inside `(0, 1)` (midpoint of a 2^-53 cell).
#[inline]
fn unit_open(rng: &mut ChaCha20Rng) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * SCALE
}

/// `R` reproducible uniform shifts in `[0, 1)^m`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ShiftSet {
    pub shifts: Vec<Vec<f64>>,
    pub seed: u64,
    pub rng_id: &'static str,
}

pub fn random_shifts(r: usize, m: usize, seed: u64) -> Result<ShiftSet> {
    if r == 0 {
        return Err(Error::InvalidArgument("need at least one shift".into()));
    }
    let mut rng = rng_at(seed, SHIFT_STREAM, 0);
    let shifts = (0..r)
        .map(|_| (0..m).map(|_| unit_closed_open(&mut rng)).collect())
        .collect();
    Ok(ShiftSet {
        shifts,
        seed,
        rng_id: RNG_ID,
    })
}

/// The `index`-th standard normal sample of dimension `m`, written into `out`.
pub fn mc_point_into(seed: u64, index: u64, out: &mut [f64]) -> Result<()> {
    let mut rng = rng_at(seed, MC_STREAM, index * out.len() as u64);
    for o in out.iter_mut() {
        *o = normal::inv_cdf(unit_open(&mut rng))?;
    }
    Ok(())
}

/// `n` i.i.d. standard normal vectors in `R^m`.
pub fn mc_points(n: usize, m: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    if n == 0 {
        return Err(Error::InvalidArgument("need at least one sample".into()));
    }
    let mut rng = rng_at(seed, MC_STREAM, 0);
    (0..n)
        .map(|_| {
            (0..m)
                .map(|_| normal::inv_cdf(unit_open(&mut rng)))
                .collect()
        })
        .collect()
}
