//! Seed derivation and randomized tie-breaking.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type TrialRng = ChaCha8Rng;

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of trial `index` under `master`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    mix(mix(master) ^ index.wrapping_mul(0xD1B5_4A32_D192_ED03))
}

/// Reward stream and tie-break stream of a trial are independent.
pub fn reward_rng(seed: u64) -> TrialRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(0);
    rng
}

pub fn tie_rng(seed: u64) -> TrialRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    rng
}

/// A random priority per arm, fixed for a trial. Among exactly equal
/// values the arm with the lowest priority wins.
#[derive(Clone, Debug)]
pub struct TieBreak {
    priority: Vec<usize>,
}

impl TieBreak {
    /// Identity priority: ties go to the lowest arm index.
    pub fn identity(arms: usize) -> Self {
        Self {
            priority: (0..arms).collect(),
        }
    }

    pub fn shuffled(arms: usize, rng: &mut TrialRng) -> Self {
        let mut priority: Vec<usize> = (0..arms).collect();
        priority.shuffle(rng);
        Self { priority }
    }

    pub fn from_seed(arms: usize, seed: u64) -> Self {
        Self::shuffled(arms, &mut tie_rng(seed))
    }

    #[inline]
    pub fn priority(&self, arm: usize) -> usize {
        self.priority[arm]
    }

    pub fn arms(&self) -> usize {
        self.priority.len()
    }

    /// `true` when `(va, a)` ranks above `(vb, b)` in a descending order.
    #[inline]
    pub fn before_desc(&self, va: f64, a: usize, vb: f64, b: usize) -> bool {
        va > vb || (va == vb && self.priority[a] < self.priority[b])
    }

    /// `true` when `(va, a)` ranks above `(vb, b)` in an ascending order.
    #[inline]
    pub fn before_asc(&self, va: f64, a: usize, vb: f64, b: usize) -> bool {
        va < vb || (va == vb && self.priority[a] < self.priority[b])
    }

    /// Arm maximizing `value` over `candidates`.
    pub fn argmax<I, F>(&self, candidates: I, value: F) -> Option<usize>
    where
        I: IntoIterator<Item = usize>,
        F: Fn(usize) -> f64,
    {
        let mut best: Option<(usize, f64)> = None;
        for a in candidates {
            let v = value(a);
            match best {
                Some((b, vb)) if !self.before_desc(v, a, vb, b) => {}
                _ => best = Some((a, v)),
            }
        }
        best.map(|(a, _)| a)
    }

    /// Arm minimizing `value` over `candidates`.
    pub fn argmin<I, F>(&self, candidates: I, value: F) -> Option<usize>
    where
        I: IntoIterator<Item = usize>,
        F: Fn(usize) -> f64,
    {
        let mut best: Option<(usize, f64)> = None;
        for a in candidates {
            let v = value(a);
            match best {
                Some((b, vb)) if !self.before_asc(v, a, vb, b) => {}
                _ => best = Some((a, v)),
            }
        }
        best.map(|(a, _)| a)
    }

    /// The `m` arms of largest value, in descending order.
    pub fn top_m_desc(&self, values: &[f64], m: usize) -> Vec<usize> {
        let mut order: Vec<usize> = (0..values.len()).collect();
        order.sort_by(|&a, &b| {
            values[b]
                .partial_cmp(&values[a])
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(self.priority[a].cmp(&self.priority[b]))
        });
        order.truncate(m);
        order
    }

    /// The `m` arms of smallest value, in ascending order.
    pub fn bottom_m_asc(&self, values: &[f64], m: usize) -> Vec<usize> {
        let mut order: Vec<usize> = (0..values.len()).collect();
        order.sort_by(|&a, &b| {
            values[a]
                .partial_cmp(&values[b])
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(self.priority[a].cmp(&self.priority[b]))
        });
        order.truncate(m);
        order
    }
}
