//! The discrete time-slice model of the probe.
//!
//! Each slice of duration τ sends one fresh segment of light through sample 1,
//! then sample 2, rotates the atomic quadratures by ±ωτ, and finally detects
//! the light's x quadrature by homodyning. Decoherence is folded into each
//! traversal: the touched atoms lose a fraction η·τ of their correlation with
//! the collective spin (refilled with thermal noise ξ(t) = 2e^{ηt}) and the
//! light loses a fraction ε to absorption (refilled with vacuum).
//!
//! The conditional covariance update is deterministic — only the means feel
//! the random detector outcome — which the trajectory machinery exploits.

use nalgebra::{Matrix4, Matrix6, Vector4, Vector6};
use rand::Rng;
use rand_distr::StandardNormal;
use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{Error, Result};
use crate::gaussian::{rotation2, AtomicState, CanonicalState};
use crate::params::PhysicalParams;

/// Light variance below which conditioning degenerates to the pseudo-inverse
/// convention: no information, no update.
pub const LIGHT_VARIANCE_FLOOR: f64 = 1e-12;

/// Which ensemble the current light traversal couples to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sample {
    One,
    Two,
}

impl Sample {
    /// One-based index of the sample.
    pub fn index(self) -> usize {
        match self {
            Sample::One => 1,
            Sample::Two => 2,
        }
    }
}

/// Dimensionless per-slice couplings, evaluated at the slice start.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SliceCoupling {
    /// Atom–light coupling √(κ̃²τ·e^{−ηt}); decays with the mean spin.
    pub kappa_tau: f64,
    /// Depumping probability η·τ per traversal of the touched sample.
    pub eta_tau: f64,
    /// Photon absorption probability per sample traversal.
    pub epsilon: f64,
}

impl SliceCoupling {
    /// Couplings for a slice starting after accumulated depumping
    /// `elapsed_eta_t`.
    pub fn at(params: &PhysicalParams, elapsed_eta_t: f64) -> Self {
        SliceCoupling {
            kappa_tau: params.kappa_tau_sq(elapsed_eta_t).sqrt(),
            eta_tau: params.eta * params.tau,
            epsilon: params.epsilon(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kappa_tau >= 0.0) || !self.kappa_tau.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "kappa_tau must be finite and non-negative, got {}",
                self.kappa_tau
            )));
        }
        for (name, value) in [("eta_tau", self.eta_tau), ("epsilon", self.epsilon)] {
            if !(0.0..1.0).contains(&value) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must lie in [0, 1), got {value}"
                )));
            }
        }
        Ok(())
    }
}

/// Diagonal loss matrices and the thermal/vacuum covariances refilling the
/// lost fractions, one pair per sample traversal.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseInjection {
    /// Loss fractions during the sample-1 traversal: η·τ on the sample-1
    /// quadratures, ε on the light.
    pub d1: Matrix6<f64>,
    /// Loss fractions during the sample-2 traversal.
    pub d2: Matrix6<f64>,
    /// Refill covariance for the sample-1 traversal: thermal ξ(t) on the
    /// atoms, vacuum on the light.
    pub gnoise1: Matrix6<f64>,
    /// Refill covariance for the sample-2 traversal.
    pub gnoise2: Matrix6<f64>,
}

impl NoiseInjection {
    pub fn at(slice: &SliceCoupling, xi: f64) -> Self {
        let e = slice.eta_tau;
        let a = slice.epsilon;
        NoiseInjection {
            d1: Matrix6::from_diagonal(&Vector6::new(e, e, 0.0, 0.0, a, a)),
            d2: Matrix6::from_diagonal(&Vector6::new(0.0, 0.0, e, e, a, a)),
            gnoise1: Matrix6::from_diagonal(&Vector6::new(xi, xi, 0.0, 0.0, 1.0, 1.0)),
            gnoise2: Matrix6::from_diagonal(&Vector6::new(0.0, 0.0, xi, xi, 1.0, 1.0)),
        }
    }

    fn for_sample(&self, sample: Sample) -> (&Matrix6<f64>, &Matrix6<f64>) {
        match sample {
            Sample::One => (&self.d1, &self.gnoise1),
            Sample::Two => (&self.d2, &self.gnoise2),
        }
    }
}

/// Symplectic interaction of one light traversal: `x_Ai ← x_Ai + κ_τ·p_L`
/// and `x_L ← x_L + κ_τ·p_Ai`.
pub fn interaction_matrix(sample: Sample, kappa_tau: f64) -> Matrix6<f64> {
    let mut s = Matrix6::identity();
    match sample {
        Sample::One => {
            s[(0, 5)] = kappa_tau;
            s[(4, 1)] = kappa_tau;
        }
        Sample::Two => {
            s[(2, 5)] = kappa_tau;
            s[(4, 3)] = kappa_tau;
        }
    }
    s
}

/// Block-diagonal Larmor step: sample 1 rotates by +ωτ, sample 2 by −ωτ,
/// light untouched.
pub fn rotation_matrix(omega_tau: f64) -> Matrix6<f64> {
    let mut r = Matrix6::identity();
    r.fixed_view_mut::<2, 2>(0, 0)
        .copy_from(&rotation2(omega_tau));
    r.fixed_view_mut::<2, 2>(2, 2)
        .copy_from(&rotation2(-omega_tau));
    r
}

fn symmetrized6(m: Matrix6<f64>) -> Matrix6<f64> {
    (m + m.transpose()) * 0.5
}

/// One traversal of the light through `sample`, with the interaction and the
/// loss channels applied together:
///
/// γ → D̄ S γ Sᵀ D̄ + D·γ_noise,  ⟨y⟩ → D̄ S ⟨y⟩,  D̄ = √(1−D).
pub fn apply_decoherence(
    state: &CanonicalState,
    slice: &SliceCoupling,
    xi: f64,
    sample: Sample,
) -> Result<CanonicalState> {
    slice.validate()?;
    if !(xi >= 2.0) {
        return Err(Error::InvalidParameter(format!(
            "thermal refill xi must be at least 2, got {xi}"
        )));
    }
    let s = interaction_matrix(sample, slice.kappa_tau);
    let noise = NoiseInjection::at(slice, xi);
    let (d, gnoise) = noise.for_sample(sample);
    let dbar = Matrix6::from_diagonal(&d.diagonal().map(|f| (1.0 - f).sqrt()));
    let cov = symmetrized6(dbar * (s * state.cov * s.transpose()) * dbar + d * gnoise);
    let mean = dbar * (s * state.mean);
    Ok(CanonicalState { mean, cov })
}

/// Shared conditioning arithmetic: Schur complement of the light's x
/// quadrature. Returns the conditioned atomic covariance, the mean gain
/// vector γ_c/γ₅₅ and the pre-measurement light variance γ₅₅.
pub(crate) fn condition_on_light(cov: &Matrix6<f64>) -> (Matrix4<f64>, Vector4<f64>, f64) {
    let g55 = cov[(4, 4)];
    let gamma_a = cov.fixed_view::<4, 4>(0, 0).into_owned();
    if g55 <= LIGHT_VARIANCE_FLOOR {
        return (gamma_a, Vector4::zeros(), g55);
    }
    let v = Vector4::new(cov[(0, 4)], cov[(1, 4)], cov[(2, 4)], cov[(3, 4)]);
    let gain = v / g55;
    let update = gain * v.transpose();
    let conditioned = gamma_a - (update + update.transpose()) * 0.5;
    (conditioned, gain, g55)
}

/// Conditions the atomic block on a homodyne detection of x_L.
///
/// `outcome_deviation` is χ, the measured value minus the pre-measurement
/// expectation of x_L. The covariance update is outcome-independent; the
/// means move along the correlation vector. The light block is discarded.
///
/// The returned state restarts the depumping clock at zero; a driver that
/// tracks accumulated depumping must restore it (see [`SliceSimulator`]).
pub fn homodyne_condition(state: &CanonicalState, outcome_deviation: f64) -> Result<AtomicState> {
    if !outcome_deviation.is_finite() {
        return Err(Error::NonFiniteOutcome);
    }
    let (cov, gain, _) = condition_on_light(&state.cov);
    let mean =
        state.mean.fixed_view::<4, 1>(0, 0).into_owned() + gain * outcome_deviation;
    Ok(AtomicState {
        mean,
        cov,
        elapsed_eta_t: 0.0,
    })
}

/// Everything one slice does short of picking the outcome: the 6×6 linear
/// map acting on the means and the pre-measurement covariance for the given
/// atomic input.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceMap {
    /// R·D̄₂S₂·D̄₁S₁ — interactions, loss attenuation, rotation.
    pub mean_map: Matrix6<f64>,
    /// Covariance just before homodyning, starting from `cov` plus a fresh
    /// light segment.
    pub cov_pre_measurement: Matrix6<f64>,
}

/// Builds the slice map for an atomic covariance `cov` after accumulated
/// depumping `elapsed_eta_t`.
pub fn slice_map(
    cov: &Matrix4<f64>,
    params: &PhysicalParams,
    elapsed_eta_t: f64,
) -> Result<SliceMap> {
    let slice = SliceCoupling::at(params, elapsed_eta_t);
    let xi = PhysicalParams::xi(elapsed_eta_t);
    let with_light = AtomicState {
        mean: Vector4::zeros(),
        cov: *cov,
        elapsed_eta_t,
    }
    .with_fresh_light();
    let after_one = apply_decoherence(&with_light, &slice, xi, Sample::One)?;
    let after_two = apply_decoherence(&after_one, &slice, xi, Sample::Two)?;
    let r = rotation_matrix(params.omega * params.tau);
    let cov_pre_measurement = symmetrized6(r * after_two.cov * r.transpose());

    let noise = NoiseInjection::at(&slice, xi);
    let dbar = |d: &Matrix6<f64>| Matrix6::from_diagonal(&d.diagonal().map(|f| (1.0 - f).sqrt()));
    let mean_map = r
        * dbar(&noise.d2)
        * interaction_matrix(Sample::Two, slice.kappa_tau)
        * dbar(&noise.d1)
        * interaction_matrix(Sample::One, slice.kappa_tau);
    Ok(SliceMap {
        mean_map,
        cov_pre_measurement,
    })
}

/// Detector outcome of one slice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SliceOutcome {
    /// The actual homodyne read χ̃: innovation plus the predicted ⟨x_L⟩.
    pub record: f64,
    /// Deviation χ of the read from the pre-measurement expectation.
    pub innovation: f64,
}

/// How slice outcomes are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutcomeMode {
    /// χ ~ N(0, 1/2): treats the light variance as exactly shot noise,
    /// valid for κ²_τ ≪ 1.
    #[default]
    ApproxUnitShotNoise,
    /// χ ~ N(0, γ₅₅/2): the exact conditional distribution of x_L.
    ExactConditional,
}

pub(crate) struct SlicePre {
    pub(crate) mean_pre: Vector6<f64>,
    pub(crate) cov_post: Matrix4<f64>,
    pub(crate) gain: Vector4<f64>,
    pub(crate) g55: f64,
}

pub(crate) fn prepare_slice(state: &AtomicState, params: &PhysicalParams) -> Result<SlicePre> {
    let map = slice_map(&state.cov, params, state.elapsed_eta_t)?;
    let mut mean6 = Vector6::zeros();
    mean6.fixed_view_mut::<4, 1>(0, 0).copy_from(&state.mean);
    let mean_pre = map.mean_map * mean6;
    let (cov_post, gain, g55) = condition_on_light(&map.cov_pre_measurement);
    Ok(SlicePre {
        mean_pre,
        cov_post,
        gain,
        g55,
    })
}

pub(crate) fn finish_slice(
    state: &AtomicState,
    params: &PhysicalParams,
    pre: &SlicePre,
    innovation: f64,
) -> (AtomicState, SliceOutcome) {
    let mean = pre.mean_pre.fixed_view::<4, 1>(0, 0).into_owned() + pre.gain * innovation;
    let record = innovation + pre.mean_pre[4];
    let next = AtomicState {
        mean,
        cov: pre.cov_post,
        elapsed_eta_t: state.elapsed_eta_t + params.eta * params.tau,
    };
    (next, SliceOutcome { record, innovation })
}

/// Advances one full slice — both traversals, rotation, homodyne — drawing
/// χ ~ N(0, 1/2) from `rng`. Returns the post-measurement atomic state and
/// the outcome.
pub fn step<R: Rng + ?Sized>(
    state: &AtomicState,
    params: &PhysicalParams,
    rng: &mut R,
) -> Result<(AtomicState, SliceOutcome)> {
    let pre = prepare_slice(state, params)?;
    let z: f64 = rng.sample(StandardNormal);
    Ok(finish_slice(state, params, &pre, z * FRAC_1_SQRT_2))
}

/// Owns an atomic state and walks it slice by slice.
#[derive(Debug, Clone)]
pub struct SliceSimulator {
    params: PhysicalParams,
    state: AtomicState,
    time: f64,
    outcome_mode: OutcomeMode,
}

impl SliceSimulator {
    /// Starts from the fully pumped (vacuum) state.
    pub fn new(params: PhysicalParams) -> Result<Self> {
        Self::from_state(params, AtomicState::vacuum())
    }

    /// Starts from an arbitrary atomic state; the wall clock is recovered
    /// from the state's accumulated depumping (zero when η = 0).
    pub fn from_state(params: PhysicalParams, state: AtomicState) -> Result<Self> {
        params.validate()?;
        let time = if params.eta > 0.0 {
            state.elapsed_eta_t / params.eta
        } else {
            0.0
        };
        Ok(SliceSimulator {
            params,
            state,
            time,
            outcome_mode: OutcomeMode::default(),
        })
    }

    pub fn with_outcome_mode(mut self, mode: OutcomeMode) -> Self {
        self.outcome_mode = mode;
        self
    }

    pub fn params(&self) -> &PhysicalParams {
        &self.params
    }

    pub fn state(&self) -> &AtomicState {
        &self.state
    }

    /// Elapsed simulated time.
    pub fn time(&self) -> f64 {
        self.time
    }

    /// Accumulated Larmor angle θ = ω·t.
    pub fn theta(&self) -> f64 {
        self.params.omega * self.time
    }

    /// One slice with a random outcome.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<SliceOutcome> {
        let pre = prepare_slice(&self.state, &self.params)?;
        let std = match self.outcome_mode {
            OutcomeMode::ApproxUnitShotNoise => FRAC_1_SQRT_2,
            OutcomeMode::ExactConditional => (0.5 * pre.g55).sqrt(),
        };
        let z: f64 = rng.sample(StandardNormal);
        self.advance(&pre, z * std)
    }

    /// One slice with the outcome pinned to its expectation (χ = 0); the
    /// covariance path is the same as under any outcome stream.
    pub fn step_deterministic(&mut self) -> Result<SliceOutcome> {
        let pre = prepare_slice(&self.state, &self.params)?;
        self.advance(&pre, 0.0)
    }

    /// One slice replaying a recorded deviation-form outcome χ.
    pub fn step_with_outcome(&mut self, chi: f64) -> Result<SliceOutcome> {
        if !chi.is_finite() {
            return Err(Error::NonFiniteOutcome);
        }
        let pre = prepare_slice(&self.state, &self.params)?;
        self.advance(&pre, chi)
    }

    fn advance(&mut self, pre: &SlicePre, innovation: f64) -> Result<SliceOutcome> {
        let (next, outcome) = finish_slice(&self.state, &self.params, pre, innovation);
        self.state = next;
        self.time += self.params.tau;
        Ok(outcome)
    }
}
