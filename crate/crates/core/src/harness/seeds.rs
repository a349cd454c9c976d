//! Splittable seed derivation: every (cell, sample) pair gets its own stream,
//! independent of scheduling order.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// One round of the SplitMix64 output function.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed of `parent` labelled by `tag`.
pub fn derive_seed(parent: u64, tag: u64) -> u64 {
    splitmix64(parent ^ splitmix64(tag))
}

/// Reserved tags for per-cell auxiliary streams, outside the sample index range.
const INPUT_TAG: u64 = u64::MAX;
const BOOTSTRAP_TAG: u64 = u64::MAX - 1;
const DATA_TAG: u64 = u64::MAX - 2;

/// Seeds of one sweep cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CellSeeds(u64);

impl CellSeeds {
    pub fn new(master: u64, cell: u64) -> Self {
        Self(derive_seed(master, cell))
    }

    /// Initialization seed of sample `i`.
    pub fn sample(&self, i: u64) -> u64 {
        derive_seed(self.0, i)
    }

    /// Seed of the cell's fixed input.
    pub fn input(&self) -> u64 {
        derive_seed(self.0, INPUT_TAG)
    }

    pub fn bootstrap(&self) -> u64 {
        derive_seed(self.0, BOOTSTRAP_TAG)
    }

    pub fn data(&self) -> u64 {
        derive_seed(self.0, DATA_TAG)
    }
}
