//! Iterative interleave-division multi-user detection on the asynchronous
//! Poisson channel.
//!
//! Each outer iteration estimates, for every detected frame, the expected
//! interference photons per slot from the other users' current soft symbols,
//! forms Poisson extrinsic LLRs for its chips, and runs the repetition
//! decoder to refresh the chip priors. Updates are Jacobi-style: every frame
//! reads the same snapshot of the previous iteration.

use crate::frame::{FrameLayout, Interleaver};

/// Magnitude bound applied to every LLR.
pub const LLR_CLIP: f64 = 50.0;

#[inline]
fn clip(x: f64) -> f64 {
    x.clamp(-LLR_CLIP, LLR_CLIP)
}

/// Locates the interferer slot overlapping slot `l` (1-based) of the
/// reference frame, given `delta = ξ_{k'} − ξ_k`.
///
/// Returns `(frame offset, 1-based source slot)` where the frame offset is
/// −1, 0 or +1 relative to the reference frame index, or `None` if the
/// overlap falls outside the three neighbouring frames.
pub fn resolve_interferer(l: usize, delta: i64, l_s: usize) -> Option<(i8, usize)> {
    let l_s = l_s as i64;
    let d = l as i64 - delta;
    if delta >= 0 && -l_s < d && d <= 0 {
        Some((-1, (d + l_s) as usize))
    } else if (delta >= 0 && d > 0) || (delta < 0 && d <= l_s) {
        if (1..=l_s).contains(&d) {
            Some((0, d as usize))
        } else {
            None
        }
    } else if delta < 0 && l_s < d && d < 2 * l_s {
        Some((1, (d - l_s) as usize))
    } else {
        None
    }
}

/// `E[s] = Pr(s = 1) = e^a / (1 + e^a)`.
#[inline]
pub fn soft_symbol_mean(a: f64) -> f64 {
    if a >= 0.0 {
        1.0 / (1.0 + (-a).exp())
    } else {
        let e = a.exp();
        e / (1.0 + e)
    }
}

/// Poisson LLR of an on-chip: `α̂ [r ln(1 + S/ς̃) − S]`, clipped.
#[inline]
pub fn extrinsic_llr(r: u32, sigma_tilde: f64, signal: f64, alpha_hat: f64) -> f64 {
    debug_assert!(sigma_tilde > 0.0, "interference estimate must be positive");
    clip(alpha_hat * (f64::from(r) * (signal / sigma_tilde).ln_1p() - signal))
}

/// Repetition-code soft decoder for one or more bits of `n_c` chips each.
///
/// Returns the leave-one-out extrinsic LLR of every chip and the posterior
/// LLR of every bit.
pub fn dec_repetition(chip_llrs: &[f64], n_c: usize) -> (Vec<f64>, Vec<f64>) {
    let mut ext = Vec::with_capacity(chip_llrs.len());
    let mut post = Vec::with_capacity(chip_llrs.len() / n_c);
    for bit in chip_llrs.chunks(n_c) {
        let total: f64 = bit.iter().sum();
        ext.extend(bit.iter().map(|&a| total - a));
        post.push(total);
    }
    (ext, post)
}

/// Hard decision from a bit posterior; exact zero resolves to 0.
#[inline]
pub fn hard_bit(posterior: f64) -> u8 {
    u8::from(posterior > 0.0)
}

/// Soft state of one detected frame.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftFrame {
    /// A-priori LLR of every chip slot, in transmitted (interleaved) order.
    pub a_priori: Vec<f64>,
    /// Latest channel extrinsic LLR per chip slot.
    pub extrinsic: Vec<f64>,
}

impl SoftFrame {
    /// Uninformative data chips; verification chips saturated to their known
    /// values.
    pub fn initial(layout: &FrameLayout, interleaver: &Interleaver, vp: &[u8]) -> Self {
        let first_vp = layout.l_b * layout.n_c;
        let a_priori = (0..layout.chip_len())
            .map(|i| {
                let c = interleaver.source(i);
                if c >= first_vp {
                    known_llr(vp[(c - first_vp) / layout.n_c])
                } else {
                    0.0
                }
            })
            .collect();
        Self {
            a_priori,
            extrinsic: vec![0.0; layout.chip_len()],
        }
    }

    /// Expected symbol at 0-based frame slot `l`: pilot value, soft chip
    /// mean, or silence in the guard.
    pub fn symbol_mean(&self, l: usize, layout: &FrameLayout, sp: &[u8]) -> f64 {
        if l < layout.l_p {
            f64::from(sp[l])
        } else if l < layout.guard_start() {
            soft_symbol_mean(self.a_priori[l - layout.l_p])
        } else {
            0.0
        }
    }
}

fn known_llr(bit: u8) -> f64 {
    if bit == 1 {
        LLR_CLIP
    } else {
        -LLR_CLIP
    }
}

/// Receiver view of one user.
#[derive(Debug, Clone, Copy)]
pub struct MudUser<'a> {
    pub gain_hat: f64,
    pub sp: &'a [u8],
    pub interleaver: &'a Interleaver,
}

/// A frame the receiver decided to decode, placed on the timeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameSlot {
    pub user: usize,
    /// Frame index within the trial.
    pub frame: usize,
    /// Absolute timeline slot of the frame's first symbol.
    pub start: usize,
}

/// Inputs shared by all iterations.
#[derive(Debug, Clone)]
pub struct MudProblem<'a> {
    pub layout: &'a FrameLayout,
    pub vp: &'a [u8],
    pub users: &'a [MudUser<'a>],
    pub frames: &'a [FrameSlot],
    pub counts: &'a [u32],
    pub n_s: f64,
    pub n_b: f64,
}

impl MudProblem<'_> {
    fn amplitude(&self, f: &FrameSlot) -> f64 {
        self.n_s * self.users[f.user].gain_hat
    }

    pub fn initial_soft(&self) -> Vec<SoftFrame> {
        self.frames
            .iter()
            .map(|f| SoftFrame::initial(self.layout, self.users[f.user].interleaver, self.vp))
            .collect()
    }

    /// Expected photons per slot given every frame's soft symbols:
    /// `n_b + n_s Σ Ĝ E[s]` over the whole timeline.
    pub fn soft_rate_timeline(&self, soft: &[SoftFrame]) -> Vec<f64> {
        let mut mu = vec![self.n_b; self.counts.len()];
        for (f, s) in self.frames.iter().zip(soft) {
            let amp = self.amplitude(f);
            let sp = self.users[f.user].sp;
            for (l, m) in mu[f.start..f.start + self.layout.l_s()].iter_mut().enumerate() {
                *m += amp * s.symbol_mean(l, self.layout, sp);
            }
        }
        mu
    }

    /// Interference estimate `ς̃` for every slot of frame `idx`: the soft
    /// timeline minus the frame's own contribution.
    pub fn interference(&self, idx: usize, soft: &[SoftFrame], mu: &[f64]) -> Vec<f64> {
        let f = &self.frames[idx];
        let amp = self.amplitude(f);
        let sp = self.users[f.user].sp;
        (0..self.layout.l_s())
            .map(|l| (mu[f.start + l] - amp * soft[idx].symbol_mean(l, self.layout, sp)).max(self.n_b))
            .collect()
    }

    /// One ESE pass for frame `idx`: channel extrinsic LLR of every chip slot.
    pub fn ese(&self, idx: usize, soft: &[SoftFrame], mu: &[f64]) -> Vec<f64> {
        let f = &self.frames[idx];
        let amp = self.amplitude(f);
        let sp = self.users[f.user].sp;
        let cs = self.layout.chip_start();
        (0..self.layout.chip_len())
            .map(|i| {
                let t = f.start + cs + i;
                let own = amp * soft[idx].symbol_mean(cs + i, self.layout, sp);
                let sigma = (mu[t] - own).max(self.n_b);
                extrinsic_llr(self.counts[t], sigma, amp, 1.0)
            })
            .collect()
    }

    /// DEC pass: deinterleave `extrinsic`, decode, and return the new chip
    /// priors (interleaved order) with the data-bit posteriors.
    pub fn dec(&self, user: usize, extrinsic: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let layout = self.layout;
        let pi = self.users[user].interleaver;
        let coded = pi.deinterleave(extrinsic);
        let n_data = layout.l_b * layout.n_c;
        let (mut ext, mut post) = dec_repetition(&coded[..n_data], layout.n_c);
        post.truncate(layout.l_b);
        for (b, _) in coded[n_data..].chunks(layout.n_c).enumerate() {
            ext.extend(std::iter::repeat_n(known_llr(self.vp[b]), layout.n_c));
        }
        let prior = pi.interleave(&ext).into_iter().map(clip).collect();
        (prior, post)
    }
}

/// Result of the outer loop.
#[derive(Debug, Clone, PartialEq)]
pub struct MudOutput {
    /// Hard data bits per frame after the final iteration.
    pub bits: Vec<Vec<u8>>,
    /// Hard data bits per frame after each iteration.
    pub per_iteration: Vec<Vec<Vec<u8>>>,
    /// Mean |posterior LLR| over all data bits after each iteration.
    pub mean_abs_llr: Vec<f64>,
}

/// Relaxation weight on the previous ESE output used by the harness.
pub const DEFAULT_DAMPING: f64 = 0.5;

/// Runs `t_out` ESE/DEC iterations over every frame of `problem`.
///
/// From the second iteration on, the ESE output passed to the decoder is
/// `(1 − damping)·fresh + damping·previous`; `damping = 0` is the plain
/// update.
pub fn iterative_mud(problem: &MudProblem<'_>, t_out: usize, damping: f64) -> MudOutput {
    assert!((0.0..1.0).contains(&damping), "damping must be in [0, 1)");
    let mut soft = problem.initial_soft();
    let mut per_iteration = Vec::with_capacity(t_out);
    let mut mean_abs_llr = Vec::with_capacity(t_out);
    for it in 0..t_out {
        let mu = problem.soft_rate_timeline(&soft);
        let mut next = Vec::with_capacity(soft.len());
        let mut bits = Vec::with_capacity(soft.len());
        let mut abs_sum = 0.0;
        let mut count = 0usize;
        for (idx, f) in problem.frames.iter().enumerate() {
            let mut extrinsic = problem.ese(idx, &soft, &mu);
            if it > 0 && damping > 0.0 {
                for (e, old) in extrinsic.iter_mut().zip(&soft[idx].extrinsic) {
                    *e = (1.0 - damping) * *e + damping * old;
                }
            }
            let (a_priori, post) = problem.dec(f.user, &extrinsic);
            abs_sum += post.iter().map(|p| p.abs()).sum::<f64>();
            count += post.len();
            bits.push(post.iter().map(|&p| hard_bit(p)).collect::<Vec<u8>>());
            next.push(SoftFrame { a_priori, extrinsic });
        }
        soft = next;
        per_iteration.push(bits);
        mean_abs_llr.push(if count > 0 { abs_sum / count as f64 } else { 0.0 });
    }
    let bits = per_iteration.last().cloned().unwrap_or_else(|| vec![Vec::new(); problem.frames.len()]);
    MudOutput {
        bits,
        per_iteration,
        mean_abs_llr,
    }
}

/// Interferer overlapping one slot of a reference frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InterferenceSource {
    pub user: usize,
    pub frame: usize,
    /// 1-based slot within the interferer's frame.
    pub slot: usize,
}

/// For user `k`'s frame `j`, the interferers of every slot (index `l − 1`),
/// resolved from per-user delays that are constant across neighbouring
/// frames. `present[k'][j']` tells whether the receiver decodes that frame.
pub fn interference_map(
    k: usize,
    j: usize,
    delays: &[i64],
    present: &[Vec<bool>],
    l_s: usize,
) -> Vec<Vec<InterferenceSource>> {
    (1..=l_s)
        .map(|l| {
            (0..delays.len())
                .filter(|&kp| kp != k)
                .filter_map(|kp| {
                    let (off, slot) = resolve_interferer(l, delays[kp] - delays[k], l_s)?;
                    let jp = j as i64 + i64::from(off);
                    if jp < 0 || jp as usize >= present[kp].len() || !present[kp][jp as usize] {
                        return None;
                    }
                    Some(InterferenceSource {
                        user: kp,
                        frame: jp as usize,
                        slot,
                    })
                })
                .collect()
        })
        .collect()
}

/// `ς̃ = n_b + n_s Σ_{k'≠k} α̂ Ĝ_{k'} E[s̃]` at one slot, summed over the
/// resolved interferers. `soft_of(user, frame)` returns the interferer's
/// soft frame.
pub fn total_interference<'s>(
    sources: &[InterferenceSource],
    soft_of: impl Fn(usize, usize) -> &'s SoftFrame,
    users: &[MudUser<'_>],
    layout: &FrameLayout,
    n_s: f64,
    n_b: f64,
) -> f64 {
    n_b + sources
        .iter()
        .map(|s| {
            let u = &users[s.user];
            n_s * u.gain_hat * soft_of(s.user, s.frame).symbol_mean(s.slot - 1, layout, u.sp)
        })
        .sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{observe, superpose, TimelineGeometry};
    use crate::frame::{assemble_frame, gen_vp, Frame, SpFamily};
    use crate::model::{GainReference, UserProfile};
    use crate::rng::stream_rng;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn resolve_examples() {
        for l in 1..=8 {
            assert_eq!(resolve_interferer(l, 0, 8), Some((0, l)));
        }
        assert_eq!(resolve_interferer(2, 3, 8), Some((-1, 7)));
        assert_eq!(resolve_interferer(7, -3, 8), Some((1, 2)));
    }

    /// Brute-force overlay: place the reference frame j at ξ_k + j·L_s and
    /// the interferer's frames j−1..j+1 at ξ_k' + j'·L_s, then look up which
    /// interferer slot covers each absolute position.
    fn overlay_oracle(l: usize, delta: i64, l_s: usize) -> Option<(i8, usize)> {
        let l_s_i = l_s as i64;
        let j = 5i64;
        let pos = j * l_s_i + (l as i64 - 1);
        (-1i8..=1)
            .filter_map(|off| {
                let start = (j + i64::from(off)) * l_s_i + delta;
                let rel = pos - start;
                (0..l_s_i).contains(&rel).then_some((off, rel as usize + 1))
            })
            .next()
    }

    #[test]
    fn partition_is_exhaustive_at_l16() {
        let l_s = 16usize;
        for delta in -(l_s as i64 - 1)..l_s as i64 {
            for l in 1..=l_s {
                let got = resolve_interferer(l, delta, l_s);
                assert!(got.is_some(), "Δ={delta} l={l}");
                assert_eq!(got, overlay_oracle(l, delta, l_s), "Δ={delta} l={l}");
            }
        }
    }

    #[test]
    fn soft_mean_examples() {
        assert_eq!(soft_symbol_mean(0.0), 0.5);
        assert!((soft_symbol_mean(3f64.ln()) - 0.75).abs() < 1e-12);
        assert_eq!(soft_symbol_mean(1e6), 1.0);
        assert_eq!(soft_symbol_mean(-1e6), 0.0);
    }

    #[test]
    fn extrinsic_examples() {
        assert_eq!(extrinsic_llr(0, 2.0, 10.0, 1.0), -10.0);
        assert!((extrinsic_llr(3, 2.0, 10.0, 1.0) - (3.0 * 6f64.ln() - 10.0)).abs() < 1e-12);
        assert!((extrinsic_llr(3, 2.0, 10.0, 1.0) + 4.62472).abs() < 1e-5);
        assert_eq!(extrinsic_llr(9, 2.0, 10.0, 0.0), 0.0);
    }

    #[test]
    fn repetition_examples() {
        let (e, p) = dec_repetition(&[1.0, 3.0], 2);
        assert_eq!((e, p.clone()), (vec![3.0, 1.0], vec![4.0]));
        assert_eq!(hard_bit(p[0]), 1);
        let (e, p) = dec_repetition(&[0.0; 4], 2);
        assert!(e.iter().all(|&x| x == 0.0));
        assert_eq!(hard_bit(p[0]), 0);
        let (e, p) = dec_repetition(&[2.0, -1.0, 0.5], 3);
        assert_eq!(e, vec![-0.5, 2.5, 1.0]);
        assert_eq!(p, vec![1.5]);
    }

    proptest! {
        #[test]
        fn extrinsic_monotone(r in 0u32..200, s in 0.1f64..100.0, sig in 0.1f64..100.0, dr in 1u32..5, ds in 0.01f64..10.0) {
            let base = (f64::from(r) * (sig / s).ln_1p()) - sig;
            prop_assume!(base.abs() < LLR_CLIP - 20.0);
            let up = f64::from(r + dr) * (sig / s).ln_1p() - sig;
            prop_assume!(up.abs() < LLR_CLIP);
            prop_assert!(extrinsic_llr(r + dr, s, sig, 1.0) > extrinsic_llr(r, s, sig, 1.0));
            if r > 0 {
                prop_assert!(extrinsic_llr(r, s + ds, sig, 1.0) < extrinsic_llr(r, s, sig, 1.0));
            }
        }

        #[test]
        fn repetition_leave_one_out(a in prop::collection::vec(-20.0f64..20.0, 10), nc in prop::sample::select(vec![1usize, 2, 5, 10])) {
            let (e, p) = dec_repetition(&a, nc);
            for (b, chunk) in a.chunks(nc).enumerate() {
                let s: f64 = chunk.iter().sum();
                prop_assert!((p[b] - s).abs() < 1e-9);
                for (i, _) in chunk.iter().enumerate() {
                    let loo: f64 = chunk.iter().enumerate().filter(|(m, _)| *m != i).map(|(_, v)| v).sum();
                    prop_assert!((e[b * nc + i] - loo).abs() < 1e-9);
                }
            }
            let neg: Vec<f64> = a.iter().map(|x| -x).collect();
            let (en, pn) = dec_repetition(&neg, nc);
            prop_assert!(en.iter().zip(&e).all(|(x, y)| (x + y).abs() < 1e-9));
            prop_assert!(pn.iter().zip(&p).all(|(x, y)| (x + y).abs() < 1e-9));
        }
    }

    struct Setup {
        layout: FrameLayout,
        vp: Vec<u8>,
        family: SpFamily,
        interleavers: Vec<Interleaver>,
    }

    impl Setup {
        fn new(layout: FrameLayout, users: usize) -> Self {
            Self {
                vp: gen_vp(5, layout.vp_bits()),
                family: SpFamily::new(layout.l_p, 1).unwrap(),
                interleavers: (0..users).map(|k| Interleaver::new(300 + k as u64, layout.chip_len())).collect(),
                layout,
            }
        }

        fn users(&self, gains: &[f64]) -> Vec<MudUser<'_>> {
            gains
                .iter()
                .enumerate()
                .map(|(k, &g)| MudUser {
                    gain_hat: g,
                    sp: self.family.get(0),
                    interleaver: &self.interleavers[k],
                })
                .collect()
        }

        fn frames(&self, rng: &mut impl Rng, users: usize, n: usize) -> Vec<Vec<Frame>> {
            (0..users)
                .map(|k| {
                    (0..n)
                        .map(|_| {
                            let d: Vec<u8> = (0..self.layout.l_b).map(|_| rng.random_range(0..2u8)).collect();
                            assemble_frame(&d, &self.layout, &self.vp, self.family.get(0), &self.interleavers[k]).unwrap()
                        })
                        .collect()
                })
                .collect()
        }
    }

    fn profiles(gains: &[f64]) -> Vec<UserProfile> {
        gains
            .iter()
            .enumerate()
            .map(|(k, &g)| UserProfile::new(k, 0, 5.0, g, 0.15, GainReference::Received, true, 0))
            .collect()
    }

    fn slots(delays: &[usize], frames: usize, geom: &TimelineGeometry) -> Vec<FrameSlot> {
        (0..delays.len())
            .flat_map(|k| {
                (0..frames).map(move |j| FrameSlot {
                    user: k,
                    frame: j,
                    start: geom.frame_start(j, delays[k]),
                })
            })
            .collect()
    }

    #[test]
    fn interference_examples() {
        let setup = Setup::new(FrameLayout::new(4, 2, 4, 7, 3).unwrap(), 2);
        let users = setup.users(&[1.0, 0.5]);
        let l = &setup.layout;
        let mut soft = SoftFrame::initial(l, &setup.interleavers[1], &setup.vp);
        assert_eq!(total_interference(&[], |_, _| &soft, &users, l, 40.0, 2.0), 2.0);
        soft.a_priori.iter_mut().for_each(|a| *a = 0.0);
        let chip = InterferenceSource {
            user: 1,
            frame: 0,
            slot: l.chip_start() + 1,
        };
        assert_eq!(total_interference(&[chip], |_, _| &soft, &users, l, 40.0, 2.0), 12.0);
        let sp = setup.family.get(0);
        let one = sp.iter().position(|&b| b == 1).unwrap();
        let pilot = InterferenceSource {
            user: 1,
            frame: 0,
            slot: one + 1,
        };
        assert_eq!(total_interference(&[pilot], |_, _| &soft, &users, l, 40.0, 2.0), 2.0 + 40.0 * 0.5);
    }

    #[test]
    fn fast_interference_matches_reference() {
        let setup = Setup::new(FrameLayout::new(8, 3, 6, 7, 2).unwrap(), 3);
        let l_s = setup.layout.l_s();
        let gains = [1.0, 0.6, 0.3];
        let users = setup.users(&gains);
        let geom = TimelineGeometry::new(l_s, 3);
        let delays = [0usize, 9, l_s - 1];
        let frames = slots(&delays, 3, &geom);
        let counts = vec![0u32; geom.len()];
        let problem = MudProblem {
            layout: &setup.layout,
            vp: &setup.vp,
            users: &users,
            frames: &frames,
            counts: &counts,
            n_s: 40.0,
            n_b: 2.0,
        };
        let mut rng = stream_rng(11, 0);
        let mut soft = problem.initial_soft();
        for s in soft.iter_mut() {
            for a in s.a_priori.iter_mut() {
                if a.abs() < LLR_CLIP {
                    *a = rng.random_range(-6.0..6.0);
                }
            }
        }
        let mu = problem.soft_rate_timeline(&soft);
        let present = vec![vec![true; 3]; 3];
        let d: Vec<i64> = delays.iter().map(|&x| x as i64).collect();
        for (idx, f) in frames.iter().enumerate() {
            let fast = problem.interference(idx, &soft, &mu);
            let map = interference_map(f.user, f.frame, &d, &present, l_s);
            for l in 0..l_s {
                let reference = total_interference(&map[l], |k, j| &soft[k * 3 + j], &users, &setup.layout, 40.0, 2.0);
                assert!((fast[l] - reference).abs() < 1e-9, "frame {idx} slot {l}: {} vs {reference}", fast[l]);
            }
        }
    }

    fn ber(truth: &[Vec<Frame>], frames: &[FrameSlot], bits: &[Vec<u8>]) -> f64 {
        let mut err = 0usize;
        let mut n = 0usize;
        for (f, b) in frames.iter().zip(bits) {
            let t = &truth[f.user][f.frame].data_bits;
            err += t.iter().zip(b).filter(|(x, y)| x != y).count();
            n += t.len();
        }
        err as f64 / n as f64
    }

    #[test]
    fn single_user_threshold_oracle() {
        let setup = Setup::new(FrameLayout::default(), 1);
        let l_s = setup.layout.l_s();
        let users = setup.users(&[1.0]);
        let n_frames = 98;
        let mut rng = stream_rng(12, 0);
        let truth = setup.frames(&mut rng, 1, n_frames);
        let geom = TimelineGeometry::new(l_s, n_frames);
        let rates = superpose(&truth, &[17], &profiles(&[1.0]), 40.0, 2.0, &geom);
        let counts = observe(&mut rng, &rates);
        let frames = slots(&[17], n_frames, &geom);
        let problem = MudProblem {
            layout: &setup.layout,
            vp: &setup.vp,
            users: &users,
            frames: &frames,
            counts: &counts,
            n_s: 40.0,
            n_b: 2.0,
        };
        let out = iterative_mud(&problem, 2, 0.0);
        let b = ber(&truth, &frames, &out.bits);
        assert!(b < 1e-4, "{b}");

        // per-chip ML threshold then majority vote: the same regime
        let thr = 40.0 / (1.0 + 40.0 / 2.0f64).ln();
        let pi = &setup.interleavers[0];
        let mut err = 0;
        for (f, t) in frames.iter().zip(&truth[0]) {
            let chips: Vec<u8> = (0..setup.layout.chip_len())
                .map(|i| u8::from(f64::from(counts[f.start + setup.layout.chip_start() + i]) > thr))
                .collect();
            let coded = pi.deinterleave(&chips);
            for (bit, c) in t.data_bits.iter().zip(coded.chunks(setup.layout.n_c)) {
                let ones = c.iter().filter(|&&x| x == 1).count();
                err += usize::from(u8::from(2 * ones > c.len()) != *bit);
            }
        }
        assert!((err as f64) / ((n_frames * 1024) as f64) < 1e-4);
    }

    #[test]
    fn two_synchronous_users_noiseless() {
        let setup = Setup::new(FrameLayout::default(), 2);
        let l_s = setup.layout.l_s();
        let users = setup.users(&[1.0, 1.0]);
        let mut rng = stream_rng(13, 0);
        let truth = setup.frames(&mut rng, 2, 1);
        let geom = TimelineGeometry::new(l_s, 1);
        let rates = superpose(&truth, &[0, 0], &profiles(&[1.0, 1.0]), 40.0, 2.0, &geom);
        let counts: Vec<u32> = rates.iter().map(|&r| r as u32).collect();
        let frames = slots(&[0, 0], 1, &geom);
        let problem = MudProblem {
            layout: &setup.layout,
            vp: &setup.vp,
            users: &users,
            frames: &frames,
            counts: &counts,
            n_s: 40.0,
            n_b: 2.0,
        };
        let out = iterative_mud(&problem, 5, DEFAULT_DAMPING);
        let b = ber(&truth, &frames, &out.bits);
        assert_eq!(b, 0.0);
    }

    #[test]
    fn weak_user_interference_estimate_improves() {
        let setup = Setup::new(FrameLayout::default(), 2);
        let l_s = setup.layout.l_s();
        let gains = [1.0, 0.3];
        let users = setup.users(&gains);
        let mut improved = 0;
        for t in 0..5 {
            let mut rng = stream_rng(14, t);
            let truth = setup.frames(&mut rng, 2, 2);
            let geom = TimelineGeometry::new(l_s, 2);
            let delays = [0usize, 3000];
            let rates = superpose(&truth, &delays, &profiles(&gains), 30.0, 2.0, &geom);
            let counts = observe(&mut rng, &rates);
            let frames = slots(&delays, 2, &geom);
            let problem = MudProblem {
                layout: &setup.layout,
                vp: &setup.vp,
                users: &users,
                frames: &frames,
                counts: &counts,
                n_s: 30.0,
                n_b: 2.0,
            };
            // true interference seen by the weak user's first frame
            let weak = 2;
            let f = frames[weak];
            let own = 30.0 * 0.3;
            let true_sigma: Vec<f64> = (0..l_s)
                .map(|l| rates[f.start + l] - own * f64::from(truth[1][0].symbols[l]))
                .collect();
            let mut soft = problem.initial_soft();
            let mut errs = Vec::new();
            for _ in 0..2 {
                let mu = problem.soft_rate_timeline(&soft);
                let est = problem.interference(weak, &soft, &mu);
                errs.push(est.iter().zip(&true_sigma).map(|(a, b)| (a - b).abs()).sum::<f64>());
                soft = (0..frames.len())
                    .map(|i| {
                        let e = problem.ese(i, &soft, &mu);
                        let (a, _) = problem.dec(frames[i].user, &e);
                        SoftFrame { a_priori: a, extrinsic: e }
                    })
                    .collect();
            }
            let mu = problem.soft_rate_timeline(&soft);
            let est = problem.interference(weak, &soft, &mu);
            let e3 = est.iter().zip(&true_sigma).map(|(a, b)| (a - b).abs()).sum::<f64>();
            if e3 < errs[1] && errs[1] < errs[0] {
                improved += 1;
            }
        }
        assert_eq!(improved, 5);
    }

    #[test]
    fn damping_tames_heavy_load() {
        let users_n = 10;
        let setup = Setup::new(FrameLayout::default(), users_n);
        let l_s = setup.layout.l_s();
        let gains: Vec<f64> = (0..users_n).map(|k| 0.6 + 0.1 * (k % 5) as f64).collect();
        let users = setup.users(&gains);
        let geom = TimelineGeometry::new(l_s, 2);
        let mut rng = stream_rng(15, 0);
        let delays: Vec<usize> = (0..users_n).map(|_| rng.random_range(0..l_s / 2)).collect();
        let truth = setup.frames(&mut rng, users_n, 2);
        let rates = superpose(&truth, &delays, &profiles(&gains), 40.0, 40.0, &geom);
        let counts = observe(&mut rng, &rates);
        let frames = slots(&delays, 2, &geom);
        let problem = MudProblem {
            layout: &setup.layout,
            vp: &setup.vp,
            users: &users,
            frames: &frames,
            counts: &counts,
            n_s: 40.0,
            n_b: 40.0,
        };
        let plain = ber(&truth, &frames, &iterative_mud(&problem, 8, 0.0).bits);
        let damped = ber(&truth, &frames, &iterative_mud(&problem, 8, DEFAULT_DAMPING).bits);
        assert!(damped < 1e-2 && damped < plain, "damped {damped} plain {plain}");
    }
}
