use crate::error::{Error, Result};

/// Default ratio of atomic linewidth to probe detuning, Γ/Δ_det.
///
/// Matches the experimentally motivated numbers of a 5 MHz linewidth probed
/// 1000 MHz off resonance, giving a light-absorption fraction
/// ε = α₀ (Γ/Δ_det)² = 2.5·10⁻⁵ α₀.
pub const DEFAULT_GAMMA_OVER_DETUNING: f64 = 0.005;

/// Physical parameters of the two collectively probed ensembles.
///
/// All rates share one (arbitrary) inverse-time unit; the dynamics only ever
/// depends on the dimensionless products κ̃²t, ηt and ωt.
///
/// Two regimes are captured:
///
/// * **Lossless probing** ([`PhysicalParams::lossless`]): the measurement
///   rate κ̃² is a free parameter and η = ε = 0.
/// * **Lossy probing** ([`PhysicalParams::from_optical_density`]): the
///   resonant optical density α₀ ties the measurement rate to the depumping
///   rate via κ̃² = η·α₀, and light is absorbed with probability
///   ε = α₀ (Γ/Δ_det)² per sample traversal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams {
    /// Resonant optical density α₀ of each ensemble.
    pub alpha0: f64,
    /// Depumping rate η: probe-induced decay of the collective mean spin.
    pub eta: f64,
    /// Measurement rate κ̃², so that the accumulated coupling of a lossless
    /// probe is κ²_t = κ̃²·t.
    pub kappa_sq_rate: f64,
    /// Larmor angular frequency ω; the two samples precess in opposite
    /// senses (sample 1 by +ωt, sample 2 by −ωt).
    pub omega: f64,
    /// Linewidth-to-detuning ratio Γ/Δ_det; sets ε = α₀ (Γ/Δ_det)².
    pub gamma_over_detuning: f64,
    /// Duration of one discrete probe slice.
    pub tau: f64,
}

impl PhysicalParams {
    /// Lossless probe of strength κ̃²; no depumping, no absorption, no
    /// rotation. The slice duration defaults to [`PhysicalParams::default_tau`].
    pub fn lossless(kappa_sq_rate: f64) -> Result<Self> {
        let mut p = PhysicalParams {
            alpha0: 0.0,
            eta: 0.0,
            kappa_sq_rate,
            omega: 0.0,
            gamma_over_detuning: 0.0,
            tau: 1.0,
        };
        p.tau = p.default_tau();
        p.validate()?;
        Ok(p)
    }

    /// Lossy probe characterized by optical density α₀ and depumping rate η.
    ///
    /// The measurement rate is tied to them by κ̃² = η·α₀ and the absorption
    /// ratio defaults to [`DEFAULT_GAMMA_OVER_DETUNING`]. No rotation.
    pub fn from_optical_density(alpha0: f64, eta: f64) -> Result<Self> {
        let mut p = PhysicalParams {
            alpha0,
            eta,
            kappa_sq_rate: eta * alpha0,
            omega: 0.0,
            gamma_over_detuning: DEFAULT_GAMMA_OVER_DETUNING,
            tau: 1.0,
        };
        p.tau = p.default_tau();
        p.validate()?;
        Ok(p)
    }

    /// Returns a copy with the Larmor frequency set.
    pub fn with_omega(mut self, omega: f64) -> Self {
        self.omega = omega;
        self
    }

    /// Returns a copy with the linewidth-to-detuning ratio set.
    pub fn with_gamma_over_detuning(mut self, ratio: f64) -> Self {
        self.gamma_over_detuning = ratio;
        self
    }

    /// Returns a copy with the slice duration set.
    pub fn with_tau(mut self, tau: f64) -> Self {
        self.tau = tau;
        self
    }

    /// Fraction of photons absorbed per sample traversal, ε = α₀ (Γ/Δ_det)².
    pub fn epsilon(&self) -> f64 {
        self.alpha0 * self.gamma_over_detuning * self.gamma_over_detuning
    }

    /// Per-slice coupling κ²_τ(t) = κ̃²·τ·e^{−ηt}, evaluated from the
    /// accumulated dimensionless depumping ηt.
    ///
    /// The decay of the collective mean spin weakens the Faraday coupling, so
    /// the slice coupling shrinks as the run progresses.
    pub fn kappa_tau_sq(&self, elapsed_eta_t: f64) -> f64 {
        self.kappa_sq_rate * self.tau * (-elapsed_eta_t).exp()
    }

    /// Thermal-noise scale ξ(t) = 2·e^{ηt} of the depumped atomic modes.
    ///
    /// ξ is the atom number divided by the decaying mean spin; it starts at 2
    /// for a fully pumped ensemble and grows as coherence is lost.
    pub fn xi(elapsed_eta_t: f64) -> f64 {
        2.0 * elapsed_eta_t.exp()
    }

    /// Slice duration keeping the discrete model close to its differential
    /// limit: κ²_τ ≤ 10⁻³, η·τ ≤ 10⁻⁴ and ω·τ ≤ 10⁻².
    ///
    /// Falls back to 10⁻³ time units when every rate vanishes.
    pub fn default_tau(&self) -> f64 {
        let mut tau = f64::INFINITY;
        if self.kappa_sq_rate > 0.0 {
            tau = tau.min(1e-3 / self.kappa_sq_rate);
        }
        if self.eta > 0.0 {
            tau = tau.min(1e-4 / self.eta);
        }
        if self.omega.abs() > 0.0 {
            tau = tau.min(1e-2 / self.omega.abs());
        }
        if tau.is_finite() {
            tau
        } else {
            1e-3
        }
    }

    /// Step size for the fixed-step Riccati integrator:
    /// dt = min(10⁻³/κ̃², 10⁻²/max(ω, η)), falling back to 10⁻³ time units
    /// when every rate vanishes.
    pub fn default_dt(&self) -> f64 {
        let mut dt = f64::INFINITY;
        if self.kappa_sq_rate > 0.0 {
            dt = dt.min(1e-3 / self.kappa_sq_rate);
        }
        let fastest = self.omega.abs().max(self.eta);
        if fastest > 0.0 {
            dt = dt.min(1e-2 / fastest);
        }
        if dt.is_finite() {
            dt
        } else {
            1e-3
        }
    }

    /// Checks that every rate is finite and non-negative, that ε < 1 and that
    /// the slice duration is positive.
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("alpha0", self.alpha0),
            ("eta", self.eta),
            ("kappa_sq_rate", self.kappa_sq_rate),
            ("gamma_over_detuning", self.gamma_over_detuning),
            ("tau", self.tau),
        ];
        for (name, value) in fields {
            if !value.is_finite() || value < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be finite and non-negative, got {value}"
                )));
            }
        }
        if !self.omega.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "omega must be finite, got {}",
                self.omega
            )));
        }
        if self.tau <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "tau must be positive, got {}",
                self.tau
            )));
        }
        let epsilon = self.epsilon();
        if !(0.0..1.0).contains(&epsilon) {
            return Err(Error::InvalidParameter(format!(
                "derived absorption epsilon = alpha0·(gamma/detuning)² must lie in [0,1), got {epsilon}"
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lossless_params_have_no_decoherence() {
        let p = PhysicalParams::lossless(2.0).unwrap();
        assert_eq!(p.eta, 0.0);
        assert_eq!(p.epsilon(), 0.0);
        assert_eq!(p.kappa_tau_sq(0.0), 2.0 * p.tau);
        // κ²_τ ≤ 1e-3 by construction of the default slice.
        assert!(p.kappa_tau_sq(0.0) <= 1e-3 + 1e-15);
    }

    #[test]
    fn optical_density_fixes_measurement_rate() {
        let p = PhysicalParams::from_optical_density(100.0, 0.5).unwrap();
        assert_eq!(p.kappa_sq_rate, 50.0);
        // ε = α₀ (Γ/Δ)² with the default ratio 0.005.
        assert!((p.epsilon() - 0.0025).abs() < 1e-15);
        // κ²_τ(0) = η·τ·α₀.
        assert!((p.kappa_tau_sq(0.0) - p.eta * p.tau * p.alpha0).abs() < 1e-15);
    }

    #[test]
    fn coupling_decays_with_accumulated_depumping() {
        let p = PhysicalParams::from_optical_density(10.0, 1.0).unwrap();
        let fresh = p.kappa_tau_sq(0.0);
        let later = p.kappa_tau_sq(1.0);
        assert!((later / fresh - (-1.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn noise_scale_starts_at_two() {
        assert_eq!(PhysicalParams::xi(0.0), 2.0);
        assert!((PhysicalParams::xi(0.7) - 2.0 * 0.7f64.exp()).abs() < 1e-12);
    }

    #[test]
    fn negative_rates_are_rejected() {
        let p = PhysicalParams {
            alpha0: -1.0,
            eta: 0.0,
            kappa_sq_rate: 1.0,
            omega: 0.0,
            gamma_over_detuning: 0.0,
            tau: 1e-3,
        };
        assert!(p.validate().is_err());
    }

    #[test]
    fn default_steps_resolve_fastest_timescale() {
        let p = PhysicalParams::lossless(1.0).unwrap().with_omega(10.0);
        assert!(p.default_tau() <= 1e-3 + 1e-15);
        assert!((p.default_dt() - 1e-3).abs() < 1e-15);
        let fast = PhysicalParams::lossless(100.0).unwrap();
        assert!((fast.default_dt() - 1e-5).abs() < 1e-18);
    }
}
