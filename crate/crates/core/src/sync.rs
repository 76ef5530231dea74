//! Frame synchronization: group pilot correlation, prior-guided delay
//! selection, verification-pilot check and activity detection.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::bayes::{init_belief, DelayBelief};
use crate::frame::{FrameLayout, Interleaver};

/// Thresholds and limits of the synchronizer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyncParams {
    /// Pilot correlation threshold.
    pub eps_p: f64,
    /// Verification threshold.
    pub eps_q: f64,
    /// Verification rounds per user and window.
    pub t_in: usize,
    /// Half-width (slots) of the local-maximum neighbourhood used to merge
    /// adjacent above-threshold lags into one peak.
    pub dedup_radius: usize,
}

impl Default for SyncParams {
    fn default() -> Self {
        Self {
            eps_p: 0.75,
            eps_q: 0.3,
            t_in: 4,
            dedup_radius: 2,
        }
    }
}

/// `r̃(l) = r(l) − n_b`.
pub fn denoise(r: &[u32], n_b: f64) -> Vec<f64> {
    r.iter().map(|&c| f64::from(c) - n_b).collect()
}

/// Zero-mean replica `p(l) − w` of a binary pilot, `w` its ones fraction,
/// together with the gain `Σ p(l)(p(l) − w)` an aligned unit-amplitude copy
/// produces.
pub fn bipolar_replica(pilot: &[u8]) -> (Vec<f64>, f64) {
    let ones = pilot.iter().filter(|&&b| b == 1).count() as f64;
    let w = ones / pilot.len() as f64;
    let rep = pilot.iter().map(|&b| f64::from(b) - w).collect();
    (rep, ones * (1.0 - w))
}

/// FFT cross-correlator for a fixed input length against every group pilot.
pub struct SpCorrelator {
    input_len: usize,
    l_p: usize,
    fft_len: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    spectra: Vec<Vec<Complex64>>,
    gains: Vec<f64>,
}

impl std::fmt::Debug for SpCorrelator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpCorrelator")
            .field("input_len", &self.input_len)
            .field("l_p", &self.l_p)
            .field("fft_len", &self.fft_len)
            .field("groups", &self.spectra.len())
            .finish()
    }
}

impl SpCorrelator {
    pub fn new(pilots: &[Vec<u8>], input_len: usize) -> Self {
        let l_p = pilots[0].len();
        assert!(input_len >= l_p, "input shorter than pilot");
        let fft_len = (input_len + l_p - 1).next_power_of_two();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(fft_len);
        let inverse = planner.plan_fft_inverse(fft_len);
        let mut spectra = Vec::with_capacity(pilots.len());
        let mut gains = Vec::with_capacity(pilots.len());
        for p in pilots {
            assert_eq!(p.len(), l_p, "pilots differ in length");
            let (rep, gain) = bipolar_replica(p);
            let mut buf: Vec<Complex64> = rep.iter().map(|&x| Complex64::new(x, 0.0)).collect();
            buf.resize(fft_len, Complex64::default());
            forward.process(&mut buf);
            buf.iter_mut().for_each(|z| *z = z.conj());
            spectra.push(buf);
            gains.push(gain);
        }
        Self {
            input_len,
            l_p,
            fft_len,
            forward,
            inverse,
            spectra,
            gains,
        }
    }

    pub fn groups(&self) -> usize {
        self.spectra.len()
    }

    /// Number of lags produced per group.
    pub fn lags(&self) -> usize {
        self.input_len - self.l_p + 1
    }

    /// Unit-amplitude scores `Σ_l x(n+l)(p(l) − w) / Σ p(p − w)` for every
    /// group and every lag `n ∈ [0, input_len − L_p]`.
    pub fn correlate(&self, x: &[f64]) -> Vec<Vec<f64>> {
        assert_eq!(x.len(), self.input_len, "correlator input length");
        let mut spec: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        spec.resize(self.fft_len, Complex64::default());
        self.forward.process(&mut spec);
        let scale = 1.0 / self.fft_len as f64;
        self.spectra
            .iter()
            .zip(&self.gains)
            .map(|(p, &gain)| {
                let mut buf: Vec<Complex64> = spec.iter().zip(p).map(|(a, b)| a * b).collect();
                self.inverse.process(&mut buf);
                buf[..self.lags()].iter().map(|z| z.re * scale / gain).collect()
            })
            .collect()
    }
}

/// Pilot correlation normalized so that a noise-free aligned copy of
/// `amplitude · pilot` scores 1. Returns one score per lag
/// `n ∈ [0, r̃.len() − L_p]`.
pub fn sp_correlate(r_tilde: &[f64], pilot: &[u8], amplitude: f64) -> Vec<f64> {
    let c = SpCorrelator::new(&[pilot.to_vec()], r_tilde.len());
    let mut out = c.correlate(r_tilde).pop().unwrap_or_default();
    out.iter_mut().for_each(|v| *v /= amplitude);
    out
}

/// Candidate delays of one group in one window, ascending by offset.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DelayCandidates {
    pub entries: Vec<(usize, f64)>,
}

impl DelayCandidates {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn offsets(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.iter().map(|e| e.0)
    }
}

/// Local maxima of `scores` above `eps_p` (within ±`radius` lags), keeping
/// the `k_max` highest.
pub fn candidate_delays(scores: &[f64], eps_p: f64, k_max: usize, radius: usize) -> DelayCandidates {
    let n = scores.len();
    let mut peaks: Vec<(usize, f64)> = (0..n)
        .filter(|&i| scores[i] > eps_p)
        .filter(|&i| {
            let v = scores[i];
            let lo = i.saturating_sub(radius);
            let hi = (i + radius).min(n - 1);
            (lo..i).all(|m| scores[m] < v) && (i + 1..=hi).all(|m| scores[m] <= v)
        })
        .map(|i| (i, scores[i]))
        .collect();
    peaks.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    peaks.truncate(k_max);
    peaks.sort_by_key(|e| e.0);
    DelayCandidates { entries: peaks }
}

/// Candidate with the highest Gaussian prior density among those not
/// excluded; equal densities resolve to the smaller delay.
pub fn pick_delay(candidates: &DelayCandidates, u: f64, delta2: f64, excluded: &[usize]) -> Option<usize> {
    assert!(delta2 > 0.0, "prior variance must be positive");
    let mut best: Option<(usize, f64)> = None;
    for n in candidates.offsets().filter(|n| !excluded.contains(n)) {
        let log_density = -(n as f64 - u).powi(2) / (2.0 * delta2);
        match best {
            Some((_, b)) if log_density <= b => {}
            _ => best = Some((n, log_density)),
        }
    }
    best.map(|b| b.0)
}

/// The `l_s` slots of `buffer` starting `xi` slots after position `base`,
/// the nominal start of the current frame. Negative `xi` reaches into the
/// previous frame.
pub fn extract_window(buffer: &[u32], base: usize, xi: i64, l_s: usize) -> &[u32] {
    let start = base as i64 + xi;
    assert!(
        start >= 0 && start as usize + l_s <= buffer.len(),
        "window outside buffer"
    );
    &buffer[start as usize..start as usize + l_s]
}

/// Verification-pilot correlation of a candidate window and its decision.
///
/// The pilot chips are pulled back through `interleaver`, background
/// subtracted and correlated against the zero-mean spread pilot; a noise-free
/// window at the right delay scores 1.
pub fn verify_vp(
    window: &[u32],
    interleaver: &Interleaver,
    layout: &FrameLayout,
    vp: &[u8],
    amplitude: f64,
    n_b: f64,
    eps_q: f64,
) -> (f64, bool) {
    assert_eq!(window.len(), layout.l_s(), "window length");
    let first = layout.l_b * layout.n_c;
    let chip_start = layout.chip_start();
    let ones = vp.iter().filter(|&&b| b == 1).count() as f64 * layout.n_c as f64;
    let w = ones / layout.l_q as f64;
    let mut acc = 0.0;
    for c in first..layout.chip_len() {
        let bit = vp[(c - first) / layout.n_c];
        let slot = chip_start + interleaver.position(c);
        acc += (f64::from(window[slot]) - n_b) * (f64::from(bit) - w);
    }
    let r = acc / (amplitude * ones * (1.0 - w));
    (r, r > eps_q)
}

/// Receiver-side description of one user.
#[derive(Debug, Clone, Copy)]
pub struct SyncUser<'a> {
    pub group: usize,
    pub gain_hat: f64,
    pub interleaver: &'a Interleaver,
}

/// Everything the synchronizer needs besides the received buffer.
#[derive(Debug, Clone)]
pub struct SyncContext<'a> {
    pub layout: &'a FrameLayout,
    pub correlator: &'a SpCorrelator,
    pub vp: &'a [u8],
    pub users: Vec<SyncUser<'a>>,
    pub n_s: f64,
    pub n_b: f64,
    pub params: SyncParams,
}

impl SyncContext<'_> {
    /// Users sharing `group`'s pilot.
    pub fn group_size(&self, group: usize) -> usize {
        self.users.iter().filter(|u| u.group == group).count()
    }

    /// Search amplitude of a group: the weakest assumed gain among its users,
    /// so that faded users still clear the threshold.
    pub fn group_amplitude(&self, group: usize) -> f64 {
        let g = self
            .users
            .iter()
            .filter(|u| u.group == group)
            .map(|u| u.gain_hat)
            .fold(f64::INFINITY, f64::min);
        self.n_s * g
    }
}

/// Per-user state carried across windows.
#[derive(Debug, Clone, PartialEq)]
pub struct UserTracker {
    pub belief: DelayBelief,
    /// Offsets that failed verification since the last success.
    pub rejected: Vec<usize>,
}

impl UserTracker {
    pub fn new(search_lo: f64, search_hi: f64) -> Self {
        Self {
            belief: init_belief(search_lo, search_hi),
            rejected: Vec::new(),
        }
    }
}

/// Outcome for one user in one window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserSync {
    pub alpha_hat: bool,
    pub xi_hat: Option<usize>,
    pub rho_hat: bool,
    pub rounds_used: usize,
    /// Verification score of the last candidate tried.
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyncResult {
    pub users: Vec<UserSync>,
    pub candidates: Vec<DelayCandidates>,
    /// Users that verified an offset already claimed by another user of the
    /// same group.
    pub collisions: usize,
}

/// Runs one detection window.
///
/// `buffer` holds `3·L_s` counts with the current frame's nominal start at
/// index `L_s`. Candidate offsets are searched in `[0, L_s)`. Beliefs of
/// verified users are updated in place.
pub fn synchronize(buffer: &[u32], ctx: &SyncContext<'_>, trackers: &mut [UserTracker]) -> SyncResult {
    let layout = ctx.layout;
    let l_s = layout.l_s();
    let base = l_s;
    assert_eq!(buffer.len(), 3 * l_s, "sync buffer length");
    assert_eq!(trackers.len(), ctx.users.len());

    let span = ctx.correlator.input_len;
    let r_tilde = denoise(&buffer[base..base + span], ctx.n_b);
    let raw = ctx.correlator.correlate(&r_tilde);
    let candidates: Vec<DelayCandidates> = raw
        .iter()
        .enumerate()
        .map(|(m, scores)| {
            let amp = ctx.group_amplitude(m);
            let scaled: Vec<f64> = scores[..l_s].iter().map(|v| v / amp).collect();
            candidate_delays(&scaled, ctx.params.eps_p, ctx.group_size(m), ctx.params.dedup_radius)
        })
        .collect();

    let mut users = Vec::with_capacity(ctx.users.len());
    for (user, tracker) in ctx.users.iter().zip(trackers.iter_mut()) {
        let cands = &candidates[user.group];
        let (u, delta2) = tracker.belief.prior();
        let mut out = UserSync {
            alpha_hat: false,
            xi_hat: None,
            rho_hat: false,
            rounds_used: 0,
            score: 0.0,
        };
        for _ in 0..ctx.params.t_in {
            let Some(xi) = pick_delay(cands, u, delta2, &tracker.rejected) else {
                break;
            };
            out.rounds_used += 1;
            let window = extract_window(buffer, base, xi as i64, l_s);
            let (score, ok) = verify_vp(
                window,
                user.interleaver,
                layout,
                ctx.vp,
                ctx.n_s * user.gain_hat,
                ctx.n_b,
                ctx.params.eps_q,
            );
            out.score = score;
            if ok {
                out.alpha_hat = true;
                out.rho_hat = true;
                out.xi_hat = Some(xi);
                break;
            }
            tracker.rejected.push(xi);
        }
        if let Some(xi) = out.xi_hat {
            tracker.rejected.clear();
            tracker.belief.observe(xi as f64);
        }
        users.push(out);
    }

    let mut collisions = 0;
    for (k, a) in users.iter().enumerate() {
        let claimed = users.iter().enumerate().any(|(k2, b)| {
            k2 < k && b.xi_hat.is_some() && b.xi_hat == a.xi_hat && ctx.users[k2].group == ctx.users[k].group
        });
        if claimed {
            collisions += 1;
        }
    }

    SyncResult {
        users,
        candidates,
        collisions,
    }
}
