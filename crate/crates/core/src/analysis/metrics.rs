//! Error counting and summary statistics.

/// Positions where `truth` and `estimate` differ.
pub fn bit_errors(truth: &[u8], estimate: &[u8]) -> usize {
    assert_eq!(truth.len(), estimate.len(), "bit sequences differ in length");
    truth.iter().zip(estimate).filter(|(a, b)| a != b).count()
}

pub fn ber(truth: &[u8], estimate: &[u8]) -> f64 {
    if truth.is_empty() {
        return 0.0;
    }
    bit_errors(truth, estimate) as f64 / truth.len() as f64
}

/// Bits decoded correctly.
pub fn detected_bits(truth: &[u8], estimate: &[u8]) -> usize {
    truth.len() - bit_errors(truth, estimate)
}

/// Mean squared difference of `(estimate, truth)` pairs; `NaN` when empty.
pub fn delay_mse(pairs: &[(f64, f64)]) -> f64 {
    if pairs.is_empty() {
        return f64::NAN;
    }
    pairs.iter().map(|(e, t)| (e - t).powi(2)).sum::<f64>() / pairs.len() as f64
}

/// Frames needed until every active user has been verified at least once.
///
/// `first_verified[k]` is the 0-based window in which user `k` was first
/// verified. Returns a 1-based frame count, `windows + 1` if some active user
/// never verified, and 0 when no user is active.
pub fn sync_time(first_verified: &[Option<usize>], active: &[bool], windows: usize) -> usize {
    let mut worst = 0;
    for (v, &a) in first_verified.iter().zip(active) {
        if !a {
            continue;
        }
        match v {
            Some(w) => worst = worst.max(w + 1),
            None => return windows + 1,
        }
    }
    worst
}

/// Accumulates errors over bits; merging is exact and order independent.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ErrorTally {
    pub errors: u64,
    pub bits: u64,
}

impl ErrorTally {
    pub fn add(&mut self, truth: &[u8], estimate: &[u8]) {
        self.errors += bit_errors(truth, estimate) as u64;
        self.bits += truth.len() as u64;
    }

    /// Counts `bits` bits as lost (half of them wrong on average).
    pub fn add_lost(&mut self, bits: usize) {
        self.errors += bits as u64 / 2;
        self.bits += bits as u64;
    }

    pub fn merge(&mut self, other: &Self) {
        self.errors += other.errors;
        self.bits += other.bits;
    }

    pub fn rate(&self) -> f64 {
        if self.bits == 0 {
            0.0
        } else {
            self.errors as f64 / self.bits as f64
        }
    }
}
