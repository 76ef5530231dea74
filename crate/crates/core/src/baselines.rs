//! Benchmark detectors sharing the channel and frame stack.

use crate::channel::TimelineGeometry;
use crate::frame::FrameLayout;
use crate::mud::{hard_bit, iterative_mud, FrameSlot, MudOutput, MudProblem, MudUser};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BaselineKind {
    /// Iterative detection with the true delays and activities.
    PerfectSync,
    /// Iterative detection assuming every user arrives at the nominal
    /// frame start.
    WithoutSync,
    /// Per-chip linear estimate, no delay compensation.
    MmseNoSync,
    /// Single-pass Gaussian-approximation detector with the true delays.
    GaussianApproxSync,
}

impl BaselineKind {
    pub fn tag(&self) -> &'static str {
        match self {
            Self::PerfectSync => "perfect_sync",
            Self::WithoutSync => "without_sync",
            Self::MmseNoSync => "mmse",
            Self::GaussianApproxSync => "gaussian_approx",
        }
    }
}

/// Received trial as seen by a detector.
#[derive(Debug, Clone)]
pub struct ReceivedTrial<'a> {
    pub layout: &'a FrameLayout,
    pub vp: &'a [u8],
    pub users: &'a [MudUser<'a>],
    pub geometry: TimelineGeometry,
    pub counts: &'a [u32],
    pub n_s: f64,
    pub n_b: f64,
    /// Relaxation of the iterative detectors, see [`iterative_mud`].
    pub damping: f64,
}

impl ReceivedTrial<'_> {
    /// Frames of every user flagged in `active`, placed with `delays`.
    pub fn frame_slots(&self, delays: &[usize], active: &[bool]) -> Vec<FrameSlot> {
        let mut out = Vec::new();
        for (k, (&d, &a)) in delays.iter().zip(active).enumerate() {
            if !a {
                continue;
            }
            for j in 0..self.geometry.frames {
                out.push(FrameSlot {
                    user: k,
                    frame: j,
                    start: self.geometry.frame_start(j, d),
                });
            }
        }
        out
    }

    fn problem<'p>(&'p self, frames: &'p [FrameSlot]) -> MudProblem<'p> {
        MudProblem {
            layout: self.layout,
            vp: self.vp,
            users: self.users,
            frames,
            counts: self.counts,
            n_s: self.n_s,
            n_b: self.n_b,
        }
    }

    /// Expected photons at a slot from every user except `k`, weighted by the
    /// prior activity and an on-chip probability of one half.
    fn prior_interference(&self, k: usize, alpha: f64) -> f64 {
        self.n_b
            + self
                .users
                .iter()
                .enumerate()
                .filter(|(kp, _)| *kp != k)
                .map(|(_, u)| alpha * u.gain_hat * self.n_s * 0.5)
                .sum::<f64>()
    }

    /// Deinterleaves per-chip scores of one frame and sums them per data
    /// bit.
    fn despread(&self, user: usize, chip_scores: &[f64]) -> Vec<f64> {
        let coded = self.users[user].interleaver.deinterleave(chip_scores);
        coded[..self.layout.l_b * self.layout.n_c]
            .chunks(self.layout.n_c)
            .map(|c| c.iter().sum())
            .collect()
    }
}

/// Detected bits of one frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameDecision {
    pub slot: FrameSlot,
    pub bits: Vec<u8>,
}

pub fn detect_perfect_sync(rx: &ReceivedTrial<'_>, delays: &[usize], active: &[bool], t_out: usize) -> (Vec<FrameSlot>, MudOutput) {
    let frames = rx.frame_slots(delays, active);
    let out = iterative_mud(&rx.problem(&frames), t_out, rx.damping);
    (frames, out)
}

pub fn detect_without_sync(rx: &ReceivedTrial<'_>, active: &[bool], t_out: usize) -> (Vec<FrameSlot>, MudOutput) {
    let zeros = vec![0; active.len()];
    let frames = rx.frame_slots(&zeros, active);
    let out = iterative_mud(&rx.problem(&frames), t_out, rx.damping);
    (frames, out)
}

/// Amplitude signal-to-noise proxy `n_s / √(n_s/2 + n_b)`.
pub fn mmse_snr_proxy(n_s: f64, n_b: f64) -> f64 {
    n_s / (n_s / 2.0 + n_b).sqrt()
}

/// Scalar per-chip Wiener estimate around the prior mean, thresholded at
/// one half and despread by majority vote. Frames are read at the nominal
/// start; other users are treated as noise at their prior mean.
pub fn detect_mmse(rx: &ReceivedTrial<'_>, active: &[bool], alpha: f64) -> Vec<FrameDecision> {
    let zeros = vec![0; active.len()];
    let cs = rx.layout.chip_start();
    let n_c = rx.layout.n_c;
    rx.frame_slots(&zeros, active)
        .into_iter()
        .map(|slot| {
            let signal = rx.n_s * rx.users[slot.user].gain_hat;
            let snr = mmse_snr_proxy(signal, rx.n_b);
            let weight = snr / (1.0 + snr) / signal;
            let mean = rx.prior_interference(slot.user, alpha) + 0.5 * signal;
            let votes: Vec<f64> = (0..rx.layout.chip_len())
                .map(|i| {
                    let y = f64::from(rx.counts[slot.start + cs + i]);
                    let x = 0.5 + weight * (y - mean);
                    if x > 0.5 {
                        1.0
                    } else {
                        0.0
                    }
                })
                .collect();
            let bits = rx
                .despread(slot.user, &votes)
                .into_iter()
                .map(|ones| u8::from(2.0 * ones > n_c as f64))
                .collect();
            FrameDecision { slot, bits }
        })
        .collect()
}

/// Moments of the Gaussian-approximated slot count for an off and an on
/// chip: `(μ0, σ0², μ1, σ1²)` with variance equal to mean.
pub fn gaussian_moments(rx: &ReceivedTrial<'_>, k: usize, alpha: f64) -> (f64, f64, f64, f64) {
    let mu0 = rx.prior_interference(k, alpha);
    let mu1 = mu0 + rx.n_s * rx.users[k].gain_hat;
    (mu0, mu0, mu1, mu1)
}

/// Gaussian-approximation detector with known delays: per-chip Gaussian
/// LLR, summed over each bit's chips, hard decision. Single pass.
pub fn detect_gaussian_approx(rx: &ReceivedTrial<'_>, delays: &[usize], active: &[bool], alpha: f64) -> Vec<FrameDecision> {
    let cs = rx.layout.chip_start();
    rx.frame_slots(delays, active)
        .into_iter()
        .map(|slot| {
            let (m0, v0, m1, v1) = gaussian_moments(rx, slot.user, alpha);
            let llrs: Vec<f64> = (0..rx.layout.chip_len())
                .map(|i| {
                    let y = f64::from(rx.counts[slot.start + cs + i]);
                    -0.5 * (v1 / v0).ln() - (y - m1).powi(2) / (2.0 * v1) + (y - m0).powi(2) / (2.0 * v0)
                })
                .collect();
            let bits = rx.despread(slot.user, &llrs).into_iter().map(hard_bit).collect();
            FrameDecision { slot, bits }
        })
        .collect()
}
