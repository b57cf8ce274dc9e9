//! Closed-form reference solutions for the probed ensemble pair, used both
//! as fast evaluators and as test oracles for the numerical engines.
//!
//! All functions are pure and operate on the dimensionless accumulated
//! quantities κ²_t = κ̃²t, θ = ωt and ηt.

use crate::error::{Error, Result};
use crate::params::PhysicalParams;

/// Dimensionless inputs of the closed forms, bundled for convenience.
///
/// `kappa_sq_t` is the *nominal* accumulated coupling κ̃²t; the lossy closed
/// forms are parameterized by (α₀, ηt) directly and fold the coupling decay
/// in themselves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticInputs {
    pub kappa_sq_t: f64,
    pub theta: f64,
    pub alpha0: f64,
    pub eta_t: f64,
}

impl AnalyticInputs {
    /// Accumulates the dimensionless quantities of `params` up to time `t`.
    pub fn from_params(params: &PhysicalParams, t: f64) -> Self {
        AnalyticInputs {
            kappa_sq_t: params.kappa_sq_rate * t,
            theta: params.omega * t,
            alpha0: params.alpha0,
            eta_t: params.eta * t,
        }
    }

    pub fn a_plus_minus(&self) -> (f64, f64) {
        a_plus_minus(self.kappa_sq_t, self.theta)
    }

    pub fn delta_sq(&self) -> f64 {
        delta_sq(self.kappa_sq_t, self.theta)
    }

    pub fn lossy_norot_covariances(&self) -> (f64, f64, f64, f64) {
        lossy_norot_covariances(self.alpha0, self.eta_t)
    }

    pub fn rotated_lossy_covariances(&self) -> (f64, f64) {
        rotated_lossy_covariances(self.alpha0, self.eta_t)
    }
}

/// sin(θ)/θ with its removable singularity expanded below |θ| < 10⁻⁸.
fn sinc(theta: f64) -> f64 {
    if theta.abs() < 1e-8 {
        1.0 - theta * theta / 6.0
    } else {
        theta.sin() / theta
    }
}

/// Extremal sum/difference variances of the lossless rotated probe:
/// a± = 1 + κ²_t ± (κ²_t/θ)·sin θ.
///
/// In the half-angle counter-rotated frame the sum/difference covariance is
/// diag(a₊, 1/a₋, 1/a₊, a₋). The static limit θ → 0 gives 1 + κ²_t ± κ²_t;
/// for θ → ∞ both variances converge to 1 + κ²_t.
pub fn a_plus_minus(kappa_sq_t: f64, theta: f64) -> (f64, f64) {
    let wave = kappa_sq_t * sinc(theta);
    (1.0 + kappa_sq_t + wave, 1.0 + kappa_sq_t - wave)
}

/// Squared EPR variance product of the lossless rotated probe:
/// Δ² = 1/[(1+κ²_t)² − (κ²_t·sinθ/θ)²] = 1/(a₊·a₋).
pub fn delta_sq(kappa_sq_t: f64, theta: f64) -> f64 {
    let wave = kappa_sq_t * sinc(theta);
    let sum = 1.0 + kappa_sq_t;
    1.0 / (sum * sum - wave * wave)
}

/// Sum/difference diagonal (γ₁₁, γ₂₂, γ₃₃, γ₄₄) of the lossy, non-rotated
/// probe with no light absorption (ε = 0).
///
/// * γ₁₁ = e^{ηt} + 2α₀·ηt·e^{−ηt} (anti-squeezed x difference),
/// * γ₂₂ = γ₄₄ = e^{ηt} (thermalizing unmeasured combinations),
/// * γ₃₃ = e^{ηt}·(δ + tanh(δηt)) / (δ + (1+2α₀)·tanh(δηt)) with
///   δ = √(1+4α₀) (measurement-squeezed p sum).
///
/// The tanh form is an overflow-safe rewrite of the cosh/sinh ratio and is
/// valid for every ηt ≥ 0.
pub fn lossy_norot_covariances(alpha0: f64, eta_t: f64) -> (f64, f64, f64, f64) {
    let delta = (1.0 + 4.0 * alpha0).sqrt();
    let th = (delta * eta_t).tanh();
    let g33 = eta_t.exp() * (delta + th) / (delta + (1.0 + 2.0 * alpha0) * th);
    let g11 = eta_t.exp() + 2.0 * alpha0 * eta_t * (-eta_t).exp();
    let g22 = eta_t.exp();
    (g11, g22, g33, g22)
}

/// Time of maximal entanglement of the lossy, non-rotated probe.
///
/// Evaluates t_crit = arccosh(z)/(δη) with δ = √(1+4α₀) and
/// z = ½·√[(1 + 5α₀ + 4α₀²)/α₀^{3/2} − 4 − 2/α₀]; the product η·t_crit
/// depends on α₀ alone, so t_crit scales exactly as 1/η.
///
/// Returns a domain error when the formula has no interior maximum
/// (z < 1; at α₀ = 1 the formula yields exactly t_crit = 0).
pub fn t_crit(alpha0: f64, eta: f64) -> Result<f64> {
    if alpha0 <= 0.0 || !alpha0.is_finite() {
        return Err(Error::Domain(format!(
            "t_crit requires alpha0 > 0, got {alpha0}"
        )));
    }
    if eta <= 0.0 || !eta.is_finite() {
        return Err(Error::Domain(format!("t_crit requires eta > 0, got {eta}")));
    }
    let inner =
        (1.0 + 5.0 * alpha0 + 4.0 * alpha0 * alpha0) / alpha0.powf(1.5) - 4.0 - 2.0 / alpha0;
    if inner < 0.0 {
        return Err(Error::Domain(format!(
            "no interior entanglement maximum at alpha0 = {alpha0}"
        )));
    }
    let z = 0.5 * inner.sqrt();
    if z < 1.0 - 1e-12 {
        return Err(Error::Domain(format!(
            "no interior entanglement maximum at alpha0 = {alpha0} (arccosh argument {z} < 1)"
        )));
    }
    let delta = (1.0 + 4.0 * alpha0).sqrt();
    Ok(z.max(1.0).acosh() / (delta * eta))
}

/// Continuum limit of pure depumping: a single variance evolves as
/// e^{−ηt}·γ₀ + sinh(ηt).
pub fn depump_variance(gamma0_ii: f64, eta_t: f64) -> f64 {
    (-eta_t).exp() * gamma0_ii + eta_t.sinh()
}

/// Depumping iterated over `n_slices` equal slices of η_τ = ηt/n: the noise
/// injected at step j carries the discrete growth factor (1−η_τ)^{−j}, and
/// the resulting geometric sum is evaluated in closed form,
///
/// γ_n = (1−η_τ)ⁿ·γ₀ + η_τ·(1−η_τ)^{n−1}·(qⁿ − 1)/(q − 1),
/// q = (1−η_τ)^{−2}.
///
/// Converges to [`depump_variance`] at rate O(1/n).
pub fn depump_variance_sliced(gamma0_ii: f64, eta_t: f64, n_slices: usize) -> f64 {
    if n_slices == 0 || eta_t == 0.0 {
        return gamma0_ii;
    }
    let n = n_slices as f64;
    let h = eta_t / n;
    // ln(1−h) via ln_1p keeps the n → ∞ limit accurate.
    let log_decay = (-h).ln_1p();
    let decay_n = (n * log_decay).exp();
    let decay_n1 = ((n - 1.0) * log_decay).exp();
    let q = (-2.0 * log_decay).exp();
    let geometric = ((n * (-2.0) * log_decay).exp() - 1.0) / (q - 1.0);
    decay_n * gamma0_ii + h * decay_n1 * geometric
}

/// Sum/difference diagonal (γ₁₁, γ₂₂) of the strongly rotated lossy probe in
/// its co-rotating collective basis, from the small-ηt closed form with
/// β = √(1+16α₀):
///
/// * γ₁₁ = (α₀+4) − (α₀+3)·e^{−ηt},
/// * γ₂₂ = (7·tanh(βηt/2) + β) / ((1+2α₀)·tanh(βηt/2) + β).
///
/// Derived assuming ξ ≈ 2 and a constant coupling, so quantitative validity
/// requires ηt ≲ 0.1; squeezing (γ₂₂ < 1) needs α₀ > 3.
pub fn rotated_lossy_covariances(alpha0: f64, eta_t: f64) -> (f64, f64) {
    let beta = (1.0 + 16.0 * alpha0).sqrt();
    let th = (0.5 * beta * eta_t).tanh();
    let g11 = (alpha0 + 4.0) - (alpha0 + 3.0) * (-eta_t).exp();
    let g22 = (7.0 * th + beta) / ((1.0 + 2.0 * alpha0) * th + beta);
    (g11, g22)
}

/// First-order-in-ηt expansion of the rotated γ₂₂:
/// (2 + ηt(7+β)) / (2 + ηt(1+2α₀+β)).
pub fn rotated_lossy_gamma22_expansion(alpha0: f64, eta_t: f64) -> f64 {
    let beta = (1.0 + 16.0 * alpha0).sqrt();
    (2.0 + eta_t * (7.0 + beta)) / (2.0 + eta_t * (1.0 + 2.0 * alpha0 + beta))
}
