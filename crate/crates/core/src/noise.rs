//! Reproducible scalar Brownian paths on a dyadic time grid.
//!
//! Sample `k` of an experiment is a pure function of `(master_seed, k)`: a
//! ChaCha12 key is derived from the master seed and `k` selects the stream,
//! so workers can draw samples in any order. Increments are snapped to the
//! lattice `2^-40 Z`, which makes every partial sum of increments (at any
//! coarsening level) exact in `f64` while `|beta|` stays below `2^12`.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Largest supported finest level; `2^24` increments.
pub const MAX_LEVEL: u32 = 24;

/// Increments are multiples of this value.
pub const LATTICE: f64 = 1.0 / (1u64 << 40) as f64;

/// Description recorded in report metadata.
pub const RNG_METHOD: &str =
    "chacha12 keyed by splitmix64(seed), stream = sample index; ziggurat normal (rand_distr); increments snapped to 2^-40";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SeedRecord {
    pub master_seed: u64,
    pub sample_index: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BrownianPath {
    horizon: f64,
    level: u32,
    increments: Vec<f64>,
    seed: SeedRecord,
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn stream_rng(master_seed: u64, sample_index: u64) -> ChaCha12Rng {
    let mut state = master_seed;
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    let mut rng = ChaCha12Rng::from_seed(key);
    rng.set_stream(sample_index);
    rng
}

fn snap(x: f64) -> f64 {
    (x / LATTICE).round() * LATTICE
}

/// Draws sample `sample_index` of the Brownian path on `[0, horizon]` with
/// `2^level` increments.
pub fn sample_path(
    horizon: f64,
    level: u32,
    master_seed: u64,
    sample_index: u64,
) -> Result<BrownianPath> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::Config(format!(
            "time horizon must be positive, got {horizon}"
        )));
    }
    if level > MAX_LEVEL {
        return Err(Error::InvalidLevel(format!(
            "finest level {level} exceeds the cap {MAX_LEVEL}"
        )));
    }
    let count = 1usize << level;
    let std_dev = (horizon / count as f64).sqrt();
    let mut rng = stream_rng(master_seed, sample_index);
    let increments = (0..count)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            snap(std_dev * z)
        })
        .collect();
    Ok(BrownianPath {
        horizon,
        level,
        increments,
        seed: SeedRecord {
            master_seed,
            sample_index,
        },
    })
}

impl BrownianPath {
    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn seed(&self) -> SeedRecord {
        self.seed
    }

    /// Finest step `T / 2^L`.
    pub fn finest_step(&self) -> f64 {
        self.horizon / self.increments.len() as f64
    }

    pub fn increments(&self) -> &[f64] {
        &self.increments
    }

    /// `2^level` increments, each the left-to-right sum of its fine children.
    pub fn coarsen(&self, level: u32) -> Result<Vec<f64>> {
        if level > self.level {
            return Err(Error::InvalidLevel(format!(
                "cannot coarsen a level-{} path to level {level}",
                self.level
            )));
        }
        let ratio = 1usize << (self.level - level);
        Ok(self
            .increments
            .chunks_exact(ratio)
            .map(|c| c.iter().fold(0.0, |acc, x| acc + x))
            .collect())
    }

    /// `beta(T)`.
    pub fn endpoint(&self) -> f64 {
        self.increments.iter().fold(0.0, |acc, x| acc + x)
    }
}

/// `beta(t_m)` for `m = 0..=len`.
pub fn partial_sums(increments: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(increments.len() + 1);
    let mut acc = 0.0;
    out.push(acc);
    for x in increments {
        acc += x;
        out.push(acc);
    }
    out
}

/// FNV-1a over the bit patterns; identifies an increment sequence.
pub fn checksum(increments: &[f64]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for x in increments {
        for byte in x.to_bits().to_le_bytes() {
            hash ^= byte as u64;
            hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    hash
}
