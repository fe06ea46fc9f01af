//! Seeded pseudorandom streams shared by every stage that shuffles.
//!
//! The stream layout is part of the on-disk contract: a manifest produced by
//! any implementation must be reproducible from `(seed, stream index)` alone.
//!
//! * A stream index is folded into the user seed as
//!   `seed ^ index.wrapping_mul(GOLDEN_GAMMA)` and passed once through the
//!   SplitMix64 output function to obtain the stream seed.
//! * The stream seed initialises xoshiro256** with four consecutive
//!   SplitMix64 outputs (the reference seeding procedure).
//! * Shuffles are Fisher–Yates from the last position down, drawing each
//!   index with Lemire's unbiased multiply-shift rejection method.
//!
//! Index 0 is reserved for the train/validation holdout split. Schedule
//! epochs use `(phase << 32) | epoch` with 1-based epochs, so they never
//! collide with index 0.

/// SplitMix64 increment, `2^64 / phi`.
pub const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// Stream index reserved for the holdout split.
pub const HOLDOUT_STREAM: u64 = 0;

/// Advance a SplitMix64 state and return the next output.
pub fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(GOLDEN_GAMMA);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for stream `index` derived from the user-facing seed.
pub fn stream_seed(seed: u64, index: u64) -> u64 {
    let mut state = seed ^ index.wrapping_mul(GOLDEN_GAMMA);
    splitmix64(&mut state)
}

/// Stream index of one schedule epoch. `phase` is 0 for i.i.d. schedules.
pub fn epoch_stream(phase: u32, epoch: u32) -> u64 {
    (u64::from(phase) << 32) | u64::from(epoch)
}

/// xoshiro256** generator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Xoshiro256StarStar {
    s: [u64; 4],
}

impl Xoshiro256StarStar {
    /// Seed from a single word through SplitMix64.
    pub fn seed_from_u64(seed: u64) -> Self {
        let mut sm = seed;
        let s = [
            splitmix64(&mut sm),
            splitmix64(&mut sm),
            splitmix64(&mut sm),
            splitmix64(&mut sm),
        ];
        Self { s }
    }

    /// Generator for stream `index` under `seed`.
    pub fn for_stream(seed: u64, index: u64) -> Self {
        Self::seed_from_u64(stream_seed(seed, index))
    }

    pub fn next_u64(&mut self) -> u64 {
        let result = self.s[1].wrapping_mul(5).rotate_left(7).wrapping_mul(9);
        let t = self.s[1] << 17;

        self.s[2] ^= self.s[0];
        self.s[3] ^= self.s[1];
        self.s[1] ^= self.s[2];
        self.s[0] ^= self.s[3];

        self.s[2] ^= t;
        self.s[3] = self.s[3].rotate_left(45);

        result
    }

    /// Uniform integer in `0..bound`. `bound` must be non-zero.
    pub fn below(&mut self, bound: u64) -> u64 {
        debug_assert!(bound > 0);
        let mut m = u128::from(self.next_u64()) * u128::from(bound);
        let mut low = m as u64;
        if low < bound {
            let threshold = bound.wrapping_neg() % bound;
            while low < threshold {
                m = u128::from(self.next_u64()) * u128::from(bound);
                low = m as u64;
            }
        }
        (m >> 64) as u64
    }

    /// In-place Fisher–Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }
}
