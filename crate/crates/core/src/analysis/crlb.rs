//! Fisher information and Cramér–Rao bound for the arrival delay of a known
//! pulse train observed through Poisson counting.

use std::f64::consts::PI;

/// Root-raised-cosine pulse with unit symbol period (slots).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RrcPulse {
    /// Roll-off factor.
    pub beta: f64,
    /// Total support in slots; the pulse is truncated to `|t| ≤ span/2`.
    pub span: f64,
    /// Samples per slot of [`PulseModel::oversampled`].
    pub oversampling: usize,
}

impl Default for RrcPulse {
    fn default() -> Self {
        Self {
            beta: 0.25,
            span: 8.0,
            oversampling: 16,
        }
    }
}

const SINGULAR_EPS: f64 = 1e-8;
const DIFF_STEP: f64 = 1e-4;

impl RrcPulse {
    fn half_span(&self) -> f64 {
        0.5 * self.span
    }

    /// Pulse value at `t`.
    pub fn value(&self, t: f64) -> f64 {
        if t.abs() > self.half_span() {
            return 0.0;
        }
        self.untruncated(t)
    }

    fn untruncated(&self, t: f64) -> f64 {
        let b = self.beta;
        if t.abs() < SINGULAR_EPS {
            return 1.0 - b + 4.0 * b / PI;
        }
        if b > 0.0 && (t.abs() - 1.0 / (4.0 * b)).abs() < SINGULAR_EPS {
            let a = PI / (4.0 * b);
            return b / 2f64.sqrt() * ((1.0 + 2.0 / PI) * a.sin() + (1.0 - 2.0 / PI) * a.cos());
        }
        let num = (PI * t * (1.0 - b)).sin() + 4.0 * b * t * (PI * t * (1.0 + b)).cos();
        let den = PI * t * (1.0 - (4.0 * b * t).powi(2));
        num / den
    }

    /// Pulse derivative at `t`. Closed form away from the removable
    /// singularities, central difference within `1e-3` of them.
    pub fn derivative(&self, t: f64) -> f64 {
        if t.abs() > self.half_span() {
            return 0.0;
        }
        let b = self.beta;
        let near_zero = t.abs() < 1e-3;
        let near_edge = b > 0.0 && (t.abs() - 1.0 / (4.0 * b)).abs() < 1e-3;
        if near_zero || near_edge {
            return (self.untruncated(t + DIFF_STEP) - self.untruncated(t - DIFF_STEP)) / (2.0 * DIFF_STEP);
        }
        let (a, c, q) = (PI * (1.0 - b), PI * (1.0 + b), 4.0 * b);
        let num = (a * t).sin() + q * t * (c * t).cos();
        let dnum = a * (a * t).cos() + q * (c * t).cos() - q * c * t * (c * t).sin();
        let den = PI * t * (1.0 - q * q * t * t);
        let dden = PI * (1.0 - 3.0 * q * q * t * t);
        (dnum * den - num * dden) / (den * den)
    }
}

/// Known OOK symbol train shaped by an RRC pulse, with its photon budget.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseModel {
    pub pulse: RrcPulse,
    /// Photons per on-symbol.
    pub amplitude: f64,
    /// Background photons per slot.
    pub background: f64,
    pub symbols: Vec<u8>,
}

impl PulseModel {
    fn contributing(&self, t: f64) -> impl Iterator<Item = usize> + '_ {
        let h = self.pulse.half_span();
        let lo = (t - h).ceil().max(0.0) as usize;
        let hi = ((t + h).floor() + 1.0).clamp(0.0, self.symbols.len() as f64) as usize;
        (lo..hi.max(lo)).filter(|&i| self.symbols[i] == 1)
    }

    /// Unit-amplitude waveform `s(t) = max(0, Σ_i sym_i h(t − i))`.
    pub fn waveform(&self, t: f64) -> f64 {
        self.contributing(t).map(|i| self.pulse.value(t - i as f64)).sum::<f64>().max(0.0)
    }

    /// `s'(t)`; zero where the waveform is clipped.
    pub fn waveform_derivative(&self, t: f64) -> f64 {
        let raw: f64 = self.contributing(t).map(|i| self.pulse.value(t - i as f64)).sum();
        if raw <= 0.0 {
            return 0.0;
        }
        self.contributing(t).map(|i| self.pulse.derivative(t - i as f64)).sum()
    }

    /// Integer slots `l` at which `s(l − ξ)` can be non-zero.
    pub fn slots(&self, xi: f64) -> std::ops::RangeInclusive<i64> {
        let h = self.pulse.half_span();
        let lo = (xi - h).floor() as i64;
        let hi = (xi + self.symbols.len() as f64 + h).ceil() as i64;
        lo..=hi
    }

    /// Expected count `n_b + n_s s(l − ξ)` at slot `l`.
    pub fn rate(&self, l: i64, xi: f64) -> f64 {
        self.background + self.amplitude * self.waveform(l as f64 - xi)
    }

    /// Waveform sampled `oversampling` times per slot over its support.
    pub fn oversampled(&self) -> Vec<f64> {
        let os = self.pulse.oversampling as f64;
        let h = self.pulse.half_span();
        let n = ((self.symbols.len() as f64 + 2.0 * h) * os) as usize;
        (0..=n).map(|i| self.waveform(i as f64 / os - h)).collect()
    }
}

/// `I(ξ) = Σ_l (n_s s'(l − ξ))² / (n_b + n_s s(l − ξ))`.
pub fn fisher_information(model: &PulseModel, xi: f64) -> f64 {
    model
        .slots(xi)
        .map(|l| {
            let t = l as f64 - xi;
            let d = model.amplitude * model.waveform_derivative(t);
            if d == 0.0 {
                return 0.0;
            }
            let den = model.background + model.amplitude * model.waveform(t);
            assert!(den > 0.0, "zero expected count where the waveform has slope");
            d * d / den
        })
        .sum()
}

/// `1 / I(ξ)`, infinite when the waveform carries no timing information.
pub fn crlb(model: &PulseModel, xi: f64) -> f64 {
    let i = fisher_information(model, xi);
    if i > 0.0 {
        1.0 / i
    } else {
        f64::INFINITY
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::sample_poisson;
    use crate::rng::stream_rng;

    fn single(n_s: f64, n_b: f64) -> PulseModel {
        PulseModel {
            pulse: RrcPulse::default(),
            amplitude: n_s,
            background: n_b,
            symbols: vec![1],
        }
    }

    #[test]
    fn rrc_values_and_derivative() {
        let p = RrcPulse::default();
        assert!((p.value(0.0) - (0.75 + 1.0 / PI)).abs() < 1e-12);
        // continuity across the removable singularity at 1/(4β)
        assert!((p.value(1.0) - p.value(1.0 + 1e-6)).abs() < 1e-5);
        for t in [-3.3, -1.0, -0.4, 0.0, 0.2, 0.999, 1.0, 1.7, 3.1] {
            let fd = (p.value(t + 1e-6) - p.value(t - 1e-6)) / 2e-6;
            assert!((p.derivative(t) - fd).abs() < 1e-4, "t={t}: {} vs {fd}", p.derivative(t));
        }
        assert_eq!(p.value(4.5), 0.0);
    }

    #[test]
    fn flat_waveform_has_no_information() {
        let m = PulseModel {
            pulse: RrcPulse::default(),
            amplitude: 0.0,
            background: 2.0,
            symbols: vec![1; 20],
        };
        assert_eq!(fisher_information(&m, 0.3), 0.0);
        assert!(crlb(&m, 0.3).is_infinite());
    }

    #[test]
    fn scaling_without_background() {
        let sp = crate::frame::gen_sp(0, 31).unwrap();
        let m = |n_s: f64| PulseModel {
            pulse: RrcPulse::default(),
            amplitude: n_s,
            background: 0.0,
            symbols: sp.clone(),
        };
        let a = fisher_information(&m(20.0), 0.37);
        let b = fisher_information(&m(40.0), 0.37);
        assert!((b / a - 2.0).abs() < 1e-9);
        assert!((crlb(&m(40.0), 0.37) / crlb(&m(20.0), 0.37) - 0.5).abs() < 1e-9);
    }

    #[test]
    fn integer_translation_invariance() {
        let sp = crate::frame::gen_sp(0, 31).unwrap();
        let m = PulseModel {
            pulse: RrcPulse::default(),
            amplitude: 30.0,
            background: 2.0,
            symbols: sp,
        };
        let a = fisher_information(&m, 0.25);
        for s in [1.0, 5.0, 17.0] {
            assert!((fisher_information(&m, 0.25 + s) - a).abs() < 1e-9 * a);
        }
    }

    #[test]
    fn bound_decreases_with_energy() {
        let phys = crate::model::PhysicalParams::default();
        let sp = crate::frame::gen_sp(0, 511).unwrap();
        let mut last = f64::INFINITY;
        for dbj in (-173..=-165).map(f64::from) {
            let m = PulseModel {
                pulse: RrcPulse::default(),
                amplitude: phys.photons_from_dbj(dbj),
                background: phys.n_b,
                symbols: sp.clone(),
            };
            let b = crlb(&m, 0.0);
            assert!(b < last);
            last = b;
        }
    }

    /// Negative curvature of the log-likelihood at the true delay, averaged
    /// over simulated traces.
    fn curvature_oracle(m: &PulseModel, xi: f64, traces: usize, h: f64) -> f64 {
        let slots: Vec<i64> = m.slots(xi).collect();
        let lam0: Vec<f64> = slots.iter().map(|&l| m.rate(l, xi)).collect();
        let lp: Vec<f64> = slots.iter().map(|&l| m.rate(l, xi + h)).collect();
        let lm: Vec<f64> = slots.iter().map(|&l| m.rate(l, xi - h)).collect();
        let mut rng = stream_rng(21, 0);
        let mut acc = 0.0;
        for _ in 0..traces {
            let mut ll = [0.0; 3];
            for i in 0..slots.len() {
                let r = sample_poisson(&mut rng, lam0[i]) as f64;
                for (k, lam) in [lm[i], lam0[i], lp[i]].into_iter().enumerate() {
                    ll[k] += r * lam.ln() - lam;
                }
            }
            acc += (ll[2] - 2.0 * ll[1] + ll[0]) / (h * h);
        }
        -acc / traces as f64
    }

    #[test]
    fn fisher_matches_curvature_oracle() {
        let m = single(40.0, 2.0);
        for xi in [0.3, 0.5, 0.8] {
            let fi = fisher_information(&m, xi);
            let oracle = curvature_oracle(&m, xi, 100_000, 1e-3);
            assert!((oracle - fi).abs() < 0.05 * fi, "ξ={xi}: {fi} vs {oracle}");
        }
    }

    #[test]
    fn oversampled_support() {
        let m = single(1.0, 0.0);
        let w = m.oversampled();
        assert_eq!(w.len(), 9 * 16 + 1);
        assert!((w[4 * 16] - RrcPulse::default().value(0.0)).abs() < 1e-12);
        assert!(w.iter().all(|&v| v >= 0.0));
    }
}
