//! Counter-addressed Gaussian streams.
//!
//! A replica owns one ChaCha8 stream; block `b` (a sub-step) starts at word
//! `b·2³²`, and normals inside a block are drawn sequentially in site order.
//! Any sub-step of any replica can be regenerated without replaying the ones
//! before it, and blocks never overlap (a block uses far fewer than 2³² words).

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// What a stream is used for; different purposes never share key material.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Purpose {
    Initial,
    Noise,
}

impl Purpose {
    fn tag(self) -> u64 {
        match self {
            Purpose::Initial => 0x243f_6a88_85a3_08d3,
            Purpose::Noise => 0x1319_8a2e_0370_7344,
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives an independent seed from a base seed and a list of tags.
pub fn derive_seed(seed: u64, tags: &[u64]) -> u64 {
    tags.iter().fold(splitmix64(seed), |s, t| splitmix64(s ^ splitmix64(*t)))
}

fn key(seed: u64, purpose: Purpose) -> [u8; 32] {
    let mut out = [0u8; 32];
    let mut s = seed ^ purpose.tag();
    for chunk in out.chunks_mut(8) {
        s = splitmix64(s);
        chunk.copy_from_slice(&s.to_le_bytes());
    }
    out
}

const BLOCK_WORDS_LOG2: u32 = 32;

pub struct NormalStream {
    rng: ChaCha8Rng,
}

impl NormalStream {
    pub fn new(seed: u64, replica: u64, purpose: Purpose) -> Self {
        let mut rng = ChaCha8Rng::from_seed(key(seed, purpose));
        rng.set_stream(replica);
        NormalStream { rng }
    }

    /// Positions the stream at the start of `block`.
    pub fn seek(&mut self, block: u64) {
        self.rng.set_word_pos((block as u128) << BLOCK_WORDS_LOG2);
    }

    #[inline]
    pub fn normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn block(s: &mut NormalStream, b: u64, len: usize) -> Vec<f64> {
        s.seek(b);
        (0..len).map(|_| s.normal()).collect()
    }

    #[test]
    fn seek_gives_random_access() {
        let mut a = NormalStream::new(7, 3, Purpose::Noise);
        let b0 = block(&mut a, 0, 10);
        let b2 = block(&mut a, 2, 10);
        let mut b = NormalStream::new(7, 3, Purpose::Noise);
        assert_eq!(block(&mut b, 2, 10), b2);
        assert_eq!(block(&mut b, 0, 10), b0);
        assert_ne!(b0, b2);
    }

    #[test]
    fn replicas_and_purposes_differ() {
        let mut a = NormalStream::new(1, 0, Purpose::Noise);
        let mut b = NormalStream::new(1, 1, Purpose::Noise);
        let mut c = NormalStream::new(1, 0, Purpose::Initial);
        let x = a.normal();
        assert_ne!(x, b.normal());
        assert_ne!(x, c.normal());
    }

    #[test]
    fn moments_are_standard() {
        let mut s = NormalStream::new(11, 0, Purpose::Noise);
        let m = 200_000;
        let (mut s1, mut s2) = (0.0, 0.0);
        for b in 0..(m / 1000) as u64 {
            s.seek(b);
            for _ in 0..1000 {
                let x = s.normal();
                s1 += x;
                s2 += x * x;
            }
        }
        let mean = s1 / m as f64;
        let var = s2 / m as f64 - mean * mean;
        assert!(mean.abs() < 4.0 / (m as f64).sqrt());
        assert!((var - 1.0).abs() < 4.0 * (2.0 / m as f64).sqrt());
    }
}
