//! Extrinsic-information transfer analysis of the iterative receiver.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::mud::{dec_repetition, MudProblem, LLR_CLIP};
use crate::rng::{stream_rng, SimRng};

const J_STEPS: usize = 4000;
const J_SIGMA_MAX: f64 = 100.0;

fn log2_1p_exp_neg(y: f64) -> f64 {
    // log2(1 + e^{-y}) without overflow
    if y > 0.0 {
        (-y).exp().ln_1p() / std::f64::consts::LN_2
    } else {
        (-y + y.exp().ln_1p()) / std::f64::consts::LN_2
    }
}

/// Mutual information between a bit and a consistent Gaussian LLR of
/// standard deviation `sigma` (mean `σ²/2`).
pub fn j_function(sigma: f64) -> f64 {
    if sigma <= 0.0 {
        return 0.0;
    }
    let mu = 0.5 * sigma * sigma;
    let (lo, hi) = (mu - 12.0 * sigma, mu + 12.0 * sigma);
    let h = (hi - lo) / J_STEPS as f64;
    let norm = 1.0 / (sigma * (2.0 * std::f64::consts::PI).sqrt());
    let f = |y: f64| norm * (-(y - mu).powi(2) / (2.0 * sigma * sigma)).exp() * log2_1p_exp_neg(y);
    // composite Simpson
    let mut acc = f(lo) + f(hi);
    for i in 1..J_STEPS {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(lo + i as f64 * h);
    }
    (1.0 - acc * h / 3.0).clamp(0.0, 1.0)
}

/// Inverse of [`j_function`] by bisection to `1e-6`.
pub fn j_inverse(i_a: f64) -> f64 {
    if i_a <= 0.0 {
        return 0.0;
    }
    let (mut lo, mut hi) = (0.0, J_SIGMA_MAX);
    if j_function(hi) <= i_a {
        return hi;
    }
    while hi - lo > 1e-6 {
        let mid = 0.5 * (lo + hi);
        if j_function(mid) < i_a {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

const MI_BINS: usize = 200;

/// Histogram estimate of the mutual information between `bits` and their
/// LLRs (positive favours 1), using 200 bins over `[−50, 50]` with add-one
/// smoothing.
pub fn mutual_information(llrs: &[f64], bits: &[u8]) -> f64 {
    assert_eq!(llrs.len(), bits.len(), "llr and bit counts differ");
    let mut hist = [[0.0f64; MI_BINS]; 2];
    let mut n = [0.0f64; 2];
    let width = 2.0 * LLR_CLIP / MI_BINS as f64;
    for (&l, &b) in llrs.iter().zip(bits) {
        let x = l.clamp(-LLR_CLIP, LLR_CLIP);
        let bin = (((x + LLR_CLIP) / width) as usize).min(MI_BINS - 1);
        hist[b as usize][bin] += 1.0;
        n[b as usize] += 1.0;
    }
    assert!(n[0] > 0.0 && n[1] > 0.0, "mutual information needs both bit values");
    let p: Vec<Vec<f64>> = (0..2)
        .map(|s| hist[s].iter().map(|&c| (c + 1.0) / (n[s] + MI_BINS as f64)).collect())
        .collect();
    let mut mi = 0.0;
    for s in 0..2 {
        for b in 0..MI_BINS {
            let ps = p[s][b];
            mi += 0.5 * ps * (2.0 * ps / (p[0][b] + p[1][b])).log2();
        }
    }
    mi.clamp(0.0, 1.0)
}

/// Consistent Gaussian a-priori LLRs `μ(2s − 1) + n`, `n ~ N(0, σ²)`,
/// `μ = σ²/2`, with `σ = J⁻¹(i_a)`.
pub fn gaussian_prior_llrs<R: Rng + ?Sized>(rng: &mut R, bits: &[u8], i_a: f64) -> Vec<f64> {
    let sigma = j_inverse(i_a);
    let mu = 0.5 * sigma * sigma;
    if sigma == 0.0 {
        return vec![0.0; bits.len()];
    }
    let noise = Normal::new(0.0, sigma).expect("finite sigma");
    bits.iter()
        .map(|&b| (mu * (2.0 * f64::from(b) - 1.0) + noise.sample(rng)).clamp(-LLR_CLIP, LLR_CLIP))
        .collect()
}

/// A soft-in/soft-out stage measured in isolation.
pub trait ExitComponent {
    /// Extrinsic mutual information produced from a-priori information
    /// `i_a`.
    fn transfer(&self, i_a: f64, rng: &mut SimRng) -> f64;
}

/// Repetition decoder stage.
#[derive(Debug, Clone, Copy)]
pub struct DecoderExit {
    pub n_c: usize,
    pub bits: usize,
}

impl ExitComponent for DecoderExit {
    fn transfer(&self, i_a: f64, rng: &mut SimRng) -> f64 {
        let data: Vec<u8> = (0..self.bits).map(|_| rng.random_range(0..2u8)).collect();
        let chips: Vec<u8> = data.iter().flat_map(|&b| std::iter::repeat_n(b, self.n_c)).collect();
        let a = gaussian_prior_llrs(rng, &chips, i_a);
        let (ext, _) = dec_repetition(&a, self.n_c);
        mutual_information(&ext, &chips)
    }
}

/// Elementary signal estimator stage over one simulated trial.
///
/// `chips[f]` holds the true transmitted chip of every chip slot of frame
/// `f` of `problem`.
#[derive(Debug, Clone)]
pub struct DetectorExit<'a> {
    pub problem: MudProblem<'a>,
    pub chips: Vec<Vec<u8>>,
}

impl ExitComponent for DetectorExit<'_> {
    fn transfer(&self, i_a: f64, rng: &mut SimRng) -> f64 {
        let p = &self.problem;
        let first_vp = p.layout.l_b * p.layout.n_c;
        let mut soft = p.initial_soft();
        for (f, (s, chips)) in p.frames.iter().zip(soft.iter_mut().zip(&self.chips)) {
            let pi = p.users[f.user].interleaver;
            let synth = gaussian_prior_llrs(rng, chips, i_a);
            for (i, a) in s.a_priori.iter_mut().enumerate() {
                if pi.source(i) < first_vp {
                    *a = synth[i];
                }
            }
        }
        let mu = p.soft_rate_timeline(&soft);
        let mut llrs = Vec::new();
        let mut truth = Vec::new();
        for (idx, f) in p.frames.iter().enumerate() {
            let pi = p.users[f.user].interleaver;
            let e = p.ese(idx, &soft, &mu);
            for (i, &x) in e.iter().enumerate() {
                if pi.source(i) < first_vp {
                    llrs.push(x);
                    truth.push(self.chips[idx][i]);
                }
            }
        }
        mutual_information(&llrs, &truth)
    }
}

/// Sampled transfer curves of both stages and the predicted trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct ExitChart {
    pub grid: Vec<f64>,
    pub detector: Vec<f64>,
    pub decoder: Vec<f64>,
    /// Staircase points `(I_A of detector, I_E of detector)` then
    /// `(I_E of decoder, I_E of detector)`, alternating.
    pub trajectory: Vec<(f64, f64)>,
    /// Alternations until the change fell below `1e-3`, if it did within 20.
    pub converged_after: Option<usize>,
}

/// Default a-priori grid `{0, 0.1, …, 0.9, 0.99}`.
pub fn default_grid() -> Vec<f64> {
    let mut g: Vec<f64> = (0..10).map(|i| i as f64 / 10.0).collect();
    g.push(0.99);
    g
}

fn interpolate(grid: &[f64], values: &[f64], x: f64) -> f64 {
    if x <= grid[0] {
        return values[0];
    }
    for w in 0..grid.len() - 1 {
        if x <= grid[w + 1] {
            let t = (x - grid[w]) / (grid[w + 1] - grid[w]);
            return values[w] + t * (values[w + 1] - values[w]);
        }
    }
    *values.last().expect("non-empty curve")
}

/// Samples both transfer curves on `grid` and walks the staircase between
/// them: the detector's output feeds the decoder, whose output feeds the
/// detector in the next alternation.
pub fn exit_curves(detector: &dyn ExitComponent, decoder: &dyn ExitComponent, grid: &[f64], seed: u64) -> ExitChart {
    let det: Vec<f64> = grid
        .iter()
        .enumerate()
        .map(|(i, &x)| detector.transfer(x, &mut stream_rng(seed, 2 * i as u64)))
        .collect();
    let dec: Vec<f64> = grid
        .iter()
        .enumerate()
        .map(|(i, &x)| decoder.transfer(x, &mut stream_rng(seed, 2 * i as u64 + 1)))
        .collect();
    let mut trajectory = Vec::new();
    let mut converged_after = None;
    let mut i_a = 0.0;
    for step in 1..=20 {
        let ie_det = interpolate(grid, &det, i_a);
        let ie_dec = interpolate(grid, &dec, ie_det);
        trajectory.push((i_a, ie_det));
        trajectory.push((ie_dec, ie_det));
        let delta = (ie_dec - i_a).abs();
        i_a = ie_dec;
        if delta < 1e-3 {
            converged_after = Some(step);
            break;
        }
    }
    ExitChart {
        grid: grid.to_vec(),
        detector: det,
        decoder: dec,
        trajectory,
        converged_after,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn j_limits_and_monotonicity() {
        assert_eq!(j_function(0.0), 0.0);
        assert!(j_function(1e-3) < 1e-5);
        assert!(j_function(60.0) > 1.0 - 1e-9);
        let mut last = 0.0;
        for i in 1..=100 {
            let v = j_function(i as f64 / 10.0);
            assert!(v > last);
            last = v;
        }
    }

    #[test]
    fn j_round_trip() {
        for s in [0.5, 1.0, 2.0, 4.0] {
            assert!((j_inverse(j_function(s)) - s).abs() < 1e-4);
        }
    }

    #[test]
    fn mi_examples() {
        let n = 100_000;
        let bits: Vec<u8> = (0..n).map(|i| (i % 2) as u8).collect();
        assert!(mutual_information(&vec![0.0; n], &bits) < 1e-9);
        let perfect: Vec<f64> = bits.iter().map(|&b| if b == 1 { 50.0 } else { -50.0 }).collect();
        assert!(mutual_information(&perfect, &bits) > 0.99);
        let mut rng = stream_rng(31, 0);
        let g = gaussian_prior_llrs(&mut rng, &bits, j_function(2.0));
        assert!((mutual_information(&g, &bits) - j_function(2.0)).abs() < 0.01);
    }

    #[test]
    fn j_and_mi_agree_on_consistent_llrs() {
        let n = 100_000;
        let mut rng = stream_rng(32, 0);
        let bits: Vec<u8> = (0..n).map(|_| rng.random_range(0..2u8)).collect();
        for i_a in [0.1, 0.3, 0.5, 0.7, 0.9] {
            let l = gaussian_prior_llrs(&mut rng, &bits, i_a);
            assert!((mutual_information(&l, &bits) - i_a).abs() < 0.01, "{i_a}");
        }
    }

    #[test]
    fn synthesized_priors_are_symmetric() {
        // Pr(−L | s=1) against Pr(L | s=0): two-sample Kolmogorov–Smirnov
        let n = 20_000;
        let mut rng = stream_rng(33, 0);
        let ones = gaussian_prior_llrs(&mut rng, &vec![1u8; n], 0.6);
        let zeros = gaussian_prior_llrs(&mut rng, &vec![0u8; n], 0.6);
        let mut a: Vec<f64> = ones.iter().map(|x| -x).collect();
        let mut b = zeros;
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
        while i < n && j < n {
            if a[i] <= b[j] {
                i += 1;
            } else {
                j += 1;
            }
            d = d.max((i as f64 - j as f64).abs() / n as f64);
        }
        // 1% critical value for equal samples of size n
        assert!(d < 1.63 * (2.0 / n as f64).sqrt(), "{d}");
    }

    #[test]
    fn decoder_curve() {
        let dec = DecoderExit { n_c: 10, bits: 10_000 };
        let mut rng = stream_rng(34, 0);
        assert!(dec.transfer(0.0, &mut rng) < 1e-3);
        let mut last = 0.0;
        for i_a in [0.05, 0.2, 0.5] {
            let v = dec.transfer(i_a, &mut rng);
            assert!(v > last);
            last = v;
        }
        // nine independent consistent LLRs combine to σ·3
        let i_a = 0.2;
        let expect = j_function(3.0 * j_inverse(i_a));
        assert!((dec.transfer(i_a, &mut rng) - expect).abs() < 0.02);
    }
}
