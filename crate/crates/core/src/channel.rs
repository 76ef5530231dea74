//! Asynchronous superposition of user frames on the receiver timeline and
//! Poisson photon counting.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::frame::Frame;
use crate::model::{sample_poisson, UserProfile};

/// Placement of frames on the receiver timeline.
///
/// The timeline starts with one frame of silence; frame `j` of a user with
/// delay `ξ` occupies `[(j+1)·L_s + ξ, (j+2)·L_s + ξ)`. One trailing frame of
/// margin keeps every 3·L_s synchronization buffer inside the timeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimelineGeometry {
    pub l_s: usize,
    pub frames: usize,
}

impl TimelineGeometry {
    pub fn new(l_s: usize, frames: usize) -> Self {
        Self { l_s, frames }
    }

    pub fn len(&self) -> usize {
        (self.frames + 2) * self.l_s
    }

    pub fn is_empty(&self) -> bool {
        self.frames == 0
    }

    /// Nominal (zero-delay) start of frame `j`.
    pub fn nominal_start(&self, j: usize) -> usize {
        (j + 1) * self.l_s
    }

    /// Start slot `l(k, j)` of frame `j` for a user with `delay`.
    pub fn frame_start(&self, j: usize, delay: usize) -> usize {
        self.nominal_start(j) + delay
    }
}

/// Receiver-side view of one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct Timeline {
    pub geometry: TimelineGeometry,
    /// Expected photo-electrons per slot.
    pub rates: Vec<f64>,
    /// Observed counts per slot.
    pub counts: Vec<u32>,
    /// Per-user delay `ξ_k` in slots.
    pub true_delays: Vec<usize>,
    /// Per-user, per-frame start slots `l(k, j)`.
    pub frame_starts: Vec<Vec<usize>>,
}

impl Timeline {
    pub fn new(
        geometry: TimelineGeometry,
        rates: Vec<f64>,
        counts: Vec<u32>,
        true_delays: Vec<usize>,
    ) -> Self {
        let frame_starts = true_delays
            .iter()
            .map(|&d| (0..geometry.frames).map(|j| geometry.frame_start(j, d)).collect())
            .collect();
        Self {
            geometry,
            rates,
            counts,
            true_delays,
            frame_starts,
        }
    }
}

/// Draws `ξ_k = round(N(delay_mean, delay_std²))` clamped to `[0, L_s)`.
pub fn sample_delays<R: Rng + ?Sized>(rng: &mut R, profiles: &[UserProfile], l_s: usize) -> Vec<usize> {
    profiles
        .iter()
        .map(|p| {
            let x = if p.delay_std > 0.0 {
                Normal::new(p.delay_mean, p.delay_std).expect("finite std").sample(rng)
            } else {
                p.delay_mean
            };
            x.round().clamp(0.0, (l_s - 1) as f64) as usize
        })
        .collect()
}

/// Expected-count timeline
/// `n_b + n_s Σ_k α_k G_k s_k(l − ξ_k)`, with `s = 0` outside frames.
///
/// `frames[k][j]` is user `k`'s frame `j`; the number of frames per user must
/// match `geometry.frames`.
pub fn superpose(
    frames: &[Vec<Frame>],
    delays: &[usize],
    profiles: &[UserProfile],
    n_s: f64,
    n_b: f64,
    geometry: &TimelineGeometry,
) -> Vec<f64> {
    let mut rates = vec![n_b; geometry.len()];
    for ((user_frames, &delay), profile) in frames.iter().zip(delays).zip(profiles) {
        if !profile.active {
            continue;
        }
        let amp = n_s * profile.gain;
        for (j, frame) in user_frames.iter().enumerate() {
            let start = geometry.frame_start(j, delay);
            for (slot, &s) in rates[start..start + frame.symbols.len()].iter_mut().zip(&frame.symbols) {
                if s != 0 {
                    *slot += amp;
                }
            }
        }
    }
    rates
}

/// Independent Poisson count per slot.
pub fn observe<R: Rng + ?Sized>(rng: &mut R, rates: &[f64]) -> Vec<u32> {
    rates.iter().map(|&n| sample_poisson(rng, n) as u32).collect()
}

/// Imperfect channel knowledge: `Ĝ = G + ε`, `ε ~ N(0, ψ²)`, `ψ = (B·G)^A`,
/// floored at `1e-9·G` so the estimate stays positive.
pub fn apply_csi_error<R: Rng + ?Sized>(rng: &mut R, gain: f64, a: f64, b: f64) -> f64 {
    if b <= 0.0 {
        return gain;
    }
    let psi = (b * gain).powf(a);
    if !(psi > 0.0) || !psi.is_finite() {
        return gain;
    }
    let eps = Normal::new(0.0, psi).expect("finite psi").sample(rng);
    (gain + eps).max(1e-9 * gain)
}
