//! Physical constants and the closed-form photon/channel relations shared by
//! every other module: photon budget, Beer-Lambert path loss, log-normal
//! turbulence, Poisson photon statistics and the per-slot expected count.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use statrs::function::gamma::ln_gamma;

use crate::error::{invalid, Result};

/// Planck constant as used throughout the link budget (J·s).
pub const PLANCK: f64 = 6.626e-34;

/// Physical link parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams {
    /// Quantum efficiency of the photon counter, in (0, 1].
    pub eta: f64,
    /// Slot duration in seconds.
    pub tau: f64,
    /// Optical center frequency in Hz.
    pub freq: f64,
    /// Planck constant in J·s.
    pub planck: f64,
    /// Attenuation coefficient in 1/m.
    pub attenuation: f64,
    /// Expected background photo-electrons per slot.
    pub n_b: f64,
    /// Turbulence intensity (log-domain standard deviation).
    pub sigma_x: f64,
}

impl Default for PhysicalParams {
    fn default() -> Self {
        let mut p = Self {
            eta: 0.5,
            tau: 1e-6,
            freq: 600e12,
            planck: PLANCK,
            attenuation: 0.15,
            n_b: 0.0,
            sigma_x: 0.0,
        };
        p.n_b = p.photons_from_dbj(-165.0);
        p
    }
}

impl PhysicalParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(invalid("eta", format!("{} not in (0, 1]", self.eta)));
        }
        if !(self.tau > 0.0) {
            return Err(invalid("tau", "must be positive"));
        }
        if !(self.freq > 0.0) {
            return Err(invalid("freq", "must be positive"));
        }
        if !(self.planck > 0.0) {
            return Err(invalid("planck", "must be positive"));
        }
        if !(self.attenuation >= 0.0) {
            return Err(invalid("attenuation", "must be non-negative"));
        }
        if !(self.n_b >= 0.0) {
            return Err(invalid("n_b", "must be non-negative"));
        }
        if !(self.sigma_x >= 0.0) {
            return Err(invalid("sigma_x", "must be non-negative"));
        }
        Ok(())
    }

    /// Energy of one photon, `h·f`.
    pub fn photon_energy(&self) -> f64 {
        self.planck * self.freq
    }

    /// Photo-electrons produced by `energy` joules arriving within one slot.
    pub fn photons_from_energy(&self, energy: f64) -> f64 {
        self.eta * energy / self.photon_energy()
    }

    /// Same as [`photons_from_energy`](Self::photons_from_energy) with the
    /// energy given in dBJ.
    pub fn photons_from_dbj(&self, dbj: f64) -> f64 {
        self.photons_from_energy(dbj_to_joules(dbj))
    }
}

pub fn dbj_to_joules(dbj: f64) -> f64 {
    10f64.powf(dbj / 10.0)
}

pub fn joules_to_dbj(joules: f64) -> f64 {
    10.0 * joules.log10()
}

/// Expected signal photo-electrons per slot for transmit power `power_w`:
/// `n_s = η·P_s·τ / (h·f)`.
pub fn photons_per_slot(params: &PhysicalParams, power_w: f64) -> f64 {
    debug_assert!(power_w >= 0.0);
    params.photons_from_energy(power_w * params.tau)
}

/// Beer-Lambert attenuation `exp(-C·Z)`.
pub fn path_loss(attenuation: f64, distance: f64) -> f64 {
    debug_assert!(attenuation >= 0.0 && distance >= 0.0);
    (-attenuation * distance).exp()
}

/// Draws a log-normal fading coefficient with unit mean:
/// `ln I ~ N(-σ²/2, σ²)`. Returns exactly 1 when `sigma_x == 0`.
pub fn sample_fading<R: Rng + ?Sized>(rng: &mut R, sigma_x: f64) -> f64 {
    if sigma_x <= 0.0 {
        return 1.0;
    }
    let normal = Normal::new(-0.5 * sigma_x * sigma_x, sigma_x).expect("finite sigma");
    normal.sample(rng).exp()
}

/// Log-normal fading density with unit mean.
pub fn fading_pdf(i: f64, sigma_x: f64) -> f64 {
    if i <= 0.0 || sigma_x <= 0.0 {
        return 0.0;
    }
    let z = i.ln() + 0.5 * sigma_x * sigma_x;
    (-z * z / (2.0 * sigma_x * sigma_x)).exp()
        / ((2.0 * std::f64::consts::PI).sqrt() * i * sigma_x)
}

/// `ln P(r | n)` for a Poisson count with mean `n`.
pub fn ln_poisson_pmf(n: f64, r: u64) -> f64 {
    if n <= 0.0 {
        return if r == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    let r_f = r as f64;
    r_f * n.ln() - n - ln_gamma(r_f + 1.0)
}

/// Poisson probability `nʳ e^{-n} / r!`, evaluated in log space.
pub fn poisson_pmf(n: f64, r: u64) -> f64 {
    ln_poisson_pmf(n, r).exp()
}

/// Below this mean the sampler uses sequential inversion, above it PTRS.
pub const POISSON_INVERSION_LIMIT: f64 = 30.0;

/// Draws a Poisson variate.
///
/// Sequential-search inversion for `n < 30`; Hörmann's transformed
/// rejection with squeeze (PTRS) otherwise. Both consume only uniform
/// draws from `rng`, so a fixed stream reproduces bit-exactly.
pub fn sample_poisson<R: Rng + ?Sized>(rng: &mut R, n: f64) -> u64 {
    if n <= 0.0 {
        return 0;
    }
    if n < POISSON_INVERSION_LIMIT {
        poisson_inversion(rng, n)
    } else {
        poisson_ptrs(rng, n)
    }
}

fn poisson_inversion<R: Rng + ?Sized>(rng: &mut R, n: f64) -> u64 {
    let u: f64 = rng.random();
    let mut k = 0u64;
    let mut p = (-n).exp();
    let mut cdf = p;
    while u > cdf {
        k += 1;
        p *= n / k as f64;
        cdf += p;
        // Guard against round-off stalling the cumulative sum below u.
        if p < f64::MIN_POSITIVE && k as f64 > n {
            break;
        }
    }
    k
}

fn poisson_ptrs<R: Rng + ?Sized>(rng: &mut R, n: f64) -> u64 {
    let slam = n.sqrt();
    let loglam = n.ln();
    let b = 0.931 + 2.53 * slam;
    let a = -0.059 + 0.02483 * b;
    let inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    let vr = 0.9277 - 3.6224 / (b - 2.0);
    loop {
        let u: f64 = rng.random::<f64>() - 0.5;
        let v: f64 = rng.random();
        let us = 0.5 - u.abs();
        let k = ((2.0 * a / us + b) * u + n + 0.43).floor();
        if us >= 0.07 && v <= vr {
            return k as u64;
        }
        if k < 0.0 || (us < 0.013 && v > us) {
            continue;
        }
        let lhs = v.ln() + inv_alpha.ln() - (a / (us * us) + b).ln();
        let rhs = -n + k * loglam - ln_gamma(k + 1.0);
        if lhs <= rhs {
            return k as u64;
        }
    }
}

/// One user's contribution to a slot: activity, channel gain and the OOK
/// symbol it sends in that slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotContribution {
    pub active: bool,
    pub gain: f64,
    pub symbol: u8,
}

/// Expected photo-electrons in one slot:
/// `n(l) = n_b + n_s Σ_k α_k G_k s_k(l)`.
pub fn slot_rate(users: &[SlotContribution], n_s: f64, n_b: f64) -> f64 {
    let signal: f64 = users
        .iter()
        .filter(|u| u.active)
        .map(|u| u.gain * f64::from(u.symbol))
        .sum();
    n_b + n_s * signal
}

/// How the per-user channel gain relates to the photon budget `n_s`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GainReference {
    /// `n_s` is the photon count received from each user at unit fading;
    /// distance-dependent path loss is absorbed by per-user transmit power
    /// so that `G = I`.
    #[default]
    Received,
    /// `n_s` is the transmitted photon count and `G = I·exp(-C·Z)`.
    Transmit,
}

/// Per-user identity and channel state.
#[derive(Debug, Clone, PartialEq)]
pub struct UserProfile {
    /// Zero-based user index.
    pub id: usize,
    /// Zero-based group index; users in a group share a synchronization pilot.
    pub group: usize,
    /// Distance to the receiver in metres.
    pub distance: f64,
    /// Turbulence fading coefficient.
    pub fading: f64,
    /// Beer-Lambert path loss for `distance`.
    pub path_loss: f64,
    /// Channel gain actually applied to the photon budget.
    pub gain: f64,
    /// Gain assumed by the receiver.
    pub gain_hat: f64,
    pub active: bool,
    pub interleaver_seed: u64,
    /// Mean arrival delay in slots.
    pub delay_mean: f64,
    /// Arrival delay standard deviation in slots.
    pub delay_std: f64,
}

impl UserProfile {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        id: usize,
        group: usize,
        distance: f64,
        fading: f64,
        attenuation: f64,
        reference: GainReference,
        active: bool,
        interleaver_seed: u64,
    ) -> Self {
        let loss = path_loss(attenuation, distance);
        let gain = match reference {
            GainReference::Received => fading,
            GainReference::Transmit => fading * loss,
        };
        Self {
            id,
            group,
            distance,
            fading,
            path_loss: loss,
            gain,
            gain_hat: gain,
            active,
            interleaver_seed,
            delay_mean: 0.0,
            delay_std: 0.0,
        }
    }

    pub fn with_delay(mut self, mean: f64, std: f64) -> Self {
        self.delay_mean = mean;
        self.delay_std = std;
        self
    }
}
