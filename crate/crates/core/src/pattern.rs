//! Binary L×L patterns: the information written to the net, recall cues and
//! snapshots of the microscopic u/d configuration.

use rand::seq::index::sample;
use rand::Rng;

use crate::error::{Error, Result};

/// Binary grid in row-major order; 1 = "on" (u), 0 = "off" (d).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Pattern {
    size: usize,
    bits: Vec<u8>,
}

impl Pattern {
    pub fn new(size: usize, bits: Vec<u8>) -> Result<Self> {
        if bits.len() != size * size {
            return Err(Error::Shape { expected: size, found: format!("{} cells", bits.len()) });
        }
        if let Some(pos) = bits.iter().position(|&b| b > 1) {
            return Err(Error::validation("pattern", format!("cell {pos} is not 0 or 1")));
        }
        Ok(Pattern { size, bits })
    }

    pub fn from_fn(size: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let bits = (0..size * size).map(|i| f(i / size, i % size) as u8).collect();
        Pattern { size, bits }
    }

    pub fn filled(size: usize, on: bool) -> Self {
        Pattern { size, bits: vec![on as u8; size * size] }
    }

    pub fn checkerboard(size: usize) -> Self {
        Self::from_fn(size, |r, c| (r + c) % 2 == 0)
    }

    /// Independent fair coin per site.
    pub fn random<R: Rng + ?Sized>(size: usize, rng: &mut R) -> Self {
        let bits = (0..size * size).map(|_| rng.gen_range(0..2u8)).collect();
        Pattern { size, bits }
    }

    /// Spins `+1` (on) / `-1` (off).
    pub fn from_spins(size: usize, spins: &[i8]) -> Result<Self> {
        if spins.len() != size * size {
            return Err(Error::Shape { expected: size, found: format!("{} spins", spins.len()) });
        }
        Ok(Pattern { size, bits: spins.iter().map(|&s| (s > 0) as u8).collect() })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn n_sites(&self) -> usize {
        self.bits.len()
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.bits[row * self.size + col] == 1
    }

    pub fn spins(&self) -> Vec<i8> {
        self.bits.iter().map(|&b| if b == 1 { 1 } else { -1 }).collect()
    }

    pub fn count_on(&self) -> usize {
        self.bits.iter().filter(|&&b| b == 1).count()
    }

    pub fn complement(&self) -> Self {
        Pattern { size: self.size, bits: self.bits.iter().map(|&b| 1 - b).collect() }
    }

    pub fn check_size(&self, size: usize) -> Result<()> {
        if self.size != size {
            return Err(Error::Shape { expected: size, found: format!("{0}x{0}", self.size) });
        }
        Ok(())
    }

    /// Copy with exactly `round(fraction * N)` bits flipped, chosen uniformly
    /// without replacement.
    pub fn with_flips<R: Rng + ?Sized>(&self, fraction: f64, rng: &mut R) -> Self {
        let n = self.bits.len();
        let k = ((fraction.clamp(0.0, 1.0) * n as f64).round() as usize).min(n);
        let mut out = self.clone();
        for i in sample(rng, n, k) {
            out.bits[i] ^= 1;
        }
        out
    }

    /// Normalized spin overlap `(1/N) Σ s_i s'_i` in [-1, 1].
    pub fn overlap(&self, other: &Pattern) -> Result<f64> {
        other.check_size(self.size)?;
        let agree = self.bits.iter().zip(&other.bits).filter(|(a, b)| a == b).count();
        let n = self.bits.len() as f64;
        Ok((2.0 * agree as f64 - n) / n)
    }

    /// Fraction of sites on which the two patterns agree.
    pub fn agreement(&self, other: &Pattern) -> Result<f64> {
        Ok((self.overlap(other)? + 1.0) / 2.0)
    }
}
