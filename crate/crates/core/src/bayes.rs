//! Gaussian delay belief carried across detection windows.

use std::collections::VecDeque;

/// Likelihood variance used when the history holds fewer than two distinct
/// values (slots²).
pub const VARIANCE_FLOOR: f64 = 0.25;

/// Number of past posterior means retained.
pub const HISTORY_CAP: usize = 32;

/// Per-user delay belief. All quantities are in slots (variances in slots²).
#[derive(Debug, Clone, PartialEq)]
pub struct DelayBelief {
    /// Prior mean for the current window.
    pub u: f64,
    /// Prior variance for the current window.
    pub delta2: f64,
    pub upsilon: f64,
    pub phi2: f64,
    /// Posterior mean of the latest verified window.
    pub nu: f64,
    pub zeta2: f64,
    /// Past posterior means, oldest first.
    pub history: VecDeque<f64>,
    has_posterior: bool,
}

/// Belief centred on the middle of `[lo, hi]` with unit variance.
pub fn init_belief(lo: f64, hi: f64) -> DelayBelief {
    let u = 0.5 * (lo + hi);
    DelayBelief {
        u,
        delta2: 1.0,
        upsilon: u,
        phi2: f64::INFINITY,
        nu: u,
        zeta2: 1.0,
        history: VecDeque::with_capacity(HISTORY_CAP),
        has_posterior: false,
    }
}

/// Prior for the next window: the latest posterior, or the initial values if
/// no window has been verified yet.
pub fn prior_update(belief: &DelayBelief) -> (f64, f64) {
    if belief.has_posterior {
        (belief.nu, belief.zeta2)
    } else {
        (belief.u, belief.delta2)
    }
}

/// Mean and population variance of `history ∪ {xi_tilde}`, variance floored
/// at [`VARIANCE_FLOOR`].
pub fn likelihood_update<'a, I>(history: I, xi_tilde: f64) -> (f64, f64)
where
    I: IntoIterator<Item = &'a f64>,
{
    let mut n = 1.0;
    let mut sum = xi_tilde;
    let mut sum_sq = xi_tilde * xi_tilde;
    for &h in history {
        n += 1.0;
        sum += h;
        sum_sq += h * h;
    }
    let mean = sum / n;
    let var = (sum_sq / n - mean * mean).max(0.0);
    (mean, var.max(VARIANCE_FLOOR))
}

/// Product of two Gaussians: `ν = (uφ² + υδ²)/(δ² + φ²)`, `ζ² = δ²φ²/(δ² + φ²)`.
pub fn posterior_update(u: f64, delta2: f64, upsilon: f64, phi2: f64) -> (f64, f64) {
    assert!(delta2 + phi2 > 0.0, "both variances are zero");
    if phi2.is_infinite() {
        return (u, delta2);
    }
    if delta2.is_infinite() {
        return (upsilon, phi2);
    }
    let s = delta2 + phi2;
    ((u * phi2 + upsilon * delta2) / s, delta2 * phi2 / s)
}

impl DelayBelief {
    /// Prior `(u, δ²)` used for the current window.
    pub fn prior(&self) -> (f64, f64) {
        (self.u, self.delta2)
    }

    /// Folds a verified delay into the belief and advances the prior.
    pub fn observe(&mut self, xi_tilde: f64) {
        let (u, delta2) = self.prior();
        let (upsilon, phi2) = likelihood_update(&self.history, xi_tilde);
        let (nu, zeta2) = posterior_update(u, delta2, upsilon, phi2);
        self.upsilon = upsilon;
        self.phi2 = phi2;
        self.nu = nu;
        self.zeta2 = zeta2;
        self.has_posterior = true;
        if self.history.len() == HISTORY_CAP {
            self.history.pop_front();
        }
        self.history.push_back(nu);
        let (u, d) = prior_update(self);
        self.u = u;
        self.delta2 = d;
    }

    pub fn has_posterior(&self) -> bool {
        self.has_posterior
    }

    pub fn snapshot(&self, user: usize, window: usize) -> BeliefSnapshot {
        BeliefSnapshot {
            user,
            window,
            u: self.u,
            delta2: self.delta2,
            upsilon: self.upsilon,
            phi2: self.phi2,
            nu: self.nu,
            zeta2: self.zeta2,
        }
    }
}

/// One row of the belief diagnostics table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeliefSnapshot {
    pub user: usize,
    pub window: usize,
    pub u: f64,
    pub delta2: f64,
    pub upsilon: f64,
    pub phi2: f64,
    pub nu: f64,
    pub zeta2: f64,
}
