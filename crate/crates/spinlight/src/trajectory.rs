//! Monte Carlo simulation of conditional mean values driven by homodyne
//! detection records.
//!
//! The covariance path — and with it every gain, weight and outcome spread —
//! is the same for all trajectories of a given parameter set, so it is
//! precomputed once as a conditioning schedule. Each trajectory then only
//! draws its outcome stream and recurses the four atomic means, which makes
//! large ensembles cheap and embarrassingly parallel.

use nalgebra::{Matrix4, RowVector4, Vector4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{Error, Result};
use crate::gaussian::{to_sum_diff_basis, AtomicState};
use crate::params::PhysicalParams;
use crate::propagator::{condition_on_light, slice_map, OutcomeMode};

/// Deterministic per-trajectory seed derived from a master seed, so that
/// parallel ensembles are reproducible and insensitive to scheduling.
pub fn trajectory_seed(master_seed: u64, index: u64) -> u64 {
    // SplitMix64 finalizer over a golden-ratio stride.
    let mut z = master_seed.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone)]
struct ScheduleSlice {
    /// Atomic block of the slice's mean map.
    atoms_map: Matrix4<f64>,
    /// Atomic part of the light-x row of the mean map: predicts ⟨x_L⟩.
    light_row: RowVector4<f64>,
    /// Conditioning gain γ_c/γ₅₅.
    gain: Vector4<f64>,
    /// Sampling spread of the innovation χ.
    chi_std: f64,
    /// Conditioned γ₃₃^sd after this slice.
    g33sd: f64,
    /// Coupling κ_τ at the slice start.
    kappa_tau: f64,
}

/// Precomputed per-slice conditioning data shared by all trajectories.
#[derive(Debug, Clone)]
pub(crate) struct ConditioningSchedule {
    tau: f64,
    eta: f64,
    slices: Vec<ScheduleSlice>,
    final_cov: Matrix4<f64>,
    final_elapsed_eta_t: f64,
}

impl ConditioningSchedule {
    pub(crate) fn build(
        params: &PhysicalParams,
        n_slices: usize,
        mode: OutcomeMode,
    ) -> Result<Self> {
        params.validate()?;
        let mut state = AtomicState::vacuum();
        let mut slices = Vec::with_capacity(n_slices);
        for _ in 0..n_slices {
            let map = slice_map(&state.cov, params, state.elapsed_eta_t)?;
            let (cov_post, gain, g55) = condition_on_light(&map.cov_pre_measurement);
            let chi_std = match mode {
                OutcomeMode::ApproxUnitShotNoise => FRAC_1_SQRT_2,
                OutcomeMode::ExactConditional => (0.5 * g55).sqrt(),
            };
            slices.push(ScheduleSlice {
                atoms_map: map.mean_map.fixed_view::<4, 4>(0, 0).into_owned(),
                light_row: map.mean_map.fixed_view::<1, 4>(4, 0).into_owned(),
                gain,
                chi_std,
                g33sd: to_sum_diff_basis(&cov_post)[(2, 2)],
                kappa_tau: params.kappa_tau_sq(state.elapsed_eta_t).sqrt(),
            });
            state = AtomicState {
                mean: Vector4::zeros(),
                cov: cov_post,
                elapsed_eta_t: state.elapsed_eta_t + params.eta * params.tau,
            };
        }
        Ok(ConditioningSchedule {
            tau: params.tau,
            eta: params.eta,
            slices,
            final_cov: state.cov,
            final_elapsed_eta_t: state.elapsed_eta_t,
        })
    }

    fn sample_record(&self, seed: u64) -> TrajectoryRecord {
        let n = self.slices.len();
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let mut times = Vec::with_capacity(n + 1);
        let mut outcomes = Vec::with_capacity(n + 1);
        let mut cond_means = Vec::with_capacity(n + 1);
        times.push(0.0);
        outcomes.push(0.0);
        cond_means.push(Vector4::zeros());
        let mut mean = Vector4::zeros();
        for (i, slice) in self.slices.iter().enumerate() {
            let z: f64 = rng.sample(StandardNormal);
            let chi = z * slice.chi_std;
            let predicted = (slice.light_row * mean)[0];
            mean = slice.atoms_map * mean + slice.gain * chi;
            times.push((i + 1) as f64 * self.tau);
            outcomes.push(chi + predicted);
            cond_means.push(mean);
        }
        TrajectoryRecord {
            times,
            outcomes,
            cond_means,
            seed,
        }
    }

    fn sample_final_mean(&self, seed: u64) -> Vector4<f64> {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let mut mean = Vector4::zeros();
        for slice in &self.slices {
            let z: f64 = rng.sample(StandardNormal);
            let chi = z * slice.chi_std;
            mean = slice.atoms_map * mean + slice.gain * chi;
        }
        mean
    }
}

fn slice_count(t_end: f64, tau: f64) -> Result<usize> {
    if !(t_end > 0.0) || !t_end.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "t_end must be finite and positive, got {t_end}"
        )));
    }
    Ok(((t_end / tau) - 1e-9).ceil().max(1.0) as usize)
}

/// One conditional trajectory: times, raw detector reads and the four
/// atomic means after every slice.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    /// Slice boundaries 0, τ, 2τ, …
    pub times: Vec<f64>,
    /// Actual detector reads χ̃ per slice; entry 0 is a placeholder for the
    /// initial boundary.
    pub outcomes: Vec<f64>,
    /// Conditional means (⟨x_A1⟩, ⟨p_A1⟩, ⟨x_A2⟩, ⟨p_A2⟩) at each boundary;
    /// entry 0 is the pumped initial state, all zeros.
    pub cond_means: Vec<Vector4<f64>>,
    /// RNG seed that produced the outcome stream.
    pub seed: u64,
}

impl TrajectoryRecord {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Final conditional means.
    pub fn final_mean(&self) -> Vector4<f64> {
        *self.cond_means.last().expect("record has an initial entry")
    }

    /// Symmetrized final momentum mean (⟨p₁⟩ + ⟨p₂⟩)/2.
    pub fn mean_p(&self) -> f64 {
        let m = self.final_mean();
        0.5 * (m[1] + m[3])
    }

    fn validate_against(&self, params: &PhysicalParams) -> Result<()> {
        let n = self.times.len();
        if self.outcomes.len() != n || self.cond_means.len() != n {
            return Err(Error::InvalidParameter(
                "record fields have mismatched lengths".into(),
            ));
        }
        if n >= 2 {
            let tau = self.times[1] - self.times[0];
            if ((tau - params.tau) / params.tau).abs() > 1e-9 {
                return Err(Error::InvalidParameter(format!(
                    "record slice duration {tau} does not match params.tau {}",
                    params.tau
                )));
            }
        }
        Ok(())
    }
}

/// Runs a single conditional trajectory from the pumped state to `t_end`,
/// drawing χ ~ N(0, 1/2) per slice.
pub fn run_trajectory(params: &PhysicalParams, t_end: f64, seed: u64) -> Result<TrajectoryRecord> {
    let n = slice_count(t_end, params.tau)?;
    let schedule = ConditioningSchedule::build(params, n, OutcomeMode::default())?;
    Ok(schedule.sample_record(seed))
}

/// Final means of one ensemble member.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySummary {
    pub seed: u64,
    pub final_mean: Vector4<f64>,
}

impl TrajectorySummary {
    /// Symmetrized momentum mean (⟨p₁⟩ + ⟨p₂⟩)/2.
    pub fn mean_p(&self) -> f64 {
        0.5 * (self.final_mean[1] + self.final_mean[3])
    }
}

/// Runs `n_traj` independent trajectories in parallel, seeded as
/// `trajectory_seed(master_seed, index)`, and returns their final means in
/// index order.
pub fn run_ensemble(
    params: &PhysicalParams,
    t_end: f64,
    n_traj: usize,
    master_seed: u64,
) -> Result<Vec<TrajectorySummary>> {
    if n_traj == 0 {
        return Err(Error::InvalidParameter(
            "ensemble needs at least one trajectory".into(),
        ));
    }
    let n = slice_count(t_end, params.tau)?;
    let schedule = ConditioningSchedule::build(params, n, OutcomeMode::default())?;
    Ok((0..n_traj)
        .into_par_iter()
        .map(|index| {
            let seed = trajectory_seed(master_seed, index as u64);
            TrajectorySummary {
                seed,
                final_mean: schedule.sample_final_mean(seed),
            }
        })
        .collect())
}

/// The deterministic conditioned covariance at `t_end` (identical for every
/// outcome stream), with zeroed means.
pub fn conditioned_covariance(params: &PhysicalParams, t_end: f64) -> Result<AtomicState> {
    let n = slice_count(t_end, params.tau)?;
    let schedule = ConditioningSchedule::build(params, n, OutcomeMode::default())?;
    Ok(AtomicState {
        mean: Vector4::zeros(),
        cov: schedule.final_cov,
        elapsed_eta_t: schedule.final_elapsed_eta_t,
    })
}

/// Ensemble statistics of the final momentum mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleStats {
    pub n_traj: usize,
    /// Sample mean of ⟨p(T)⟩ across the ensemble (zero in expectation).
    pub mean_of_mean_p: f64,
    /// Sample variance of ⟨p(T)⟩ across the ensemble.
    pub var_of_mean_p: f64,
    /// Standard error of `var_of_mean_p` under Gaussian sampling,
    /// var·√(2/(n−1)).
    pub stderr: f64,
}

impl EnsembleStats {
    pub fn from_samples(samples: &[f64]) -> Result<Self> {
        let n = samples.len();
        if n < 2 {
            return Err(Error::InvalidParameter(
                "statistics need at least two samples".into(),
            ));
        }
        let nf = n as f64;
        let mean = samples.iter().sum::<f64>() / nf;
        let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (nf - 1.0);
        Ok(EnsembleStats {
            n_traj: n,
            mean_of_mean_p: mean,
            var_of_mean_p: var,
            stderr: var * (2.0 / (nf - 1.0)).sqrt(),
        })
    }

    /// Standard error of `mean_of_mean_p`.
    pub fn stderr_of_mean(&self) -> f64 {
        (self.var_of_mean_p / self.n_traj as f64).sqrt()
    }
}

/// Variance of the final momentum mean over `n_traj` trajectories.
pub fn ensemble_variance(
    params: &PhysicalParams,
    t_end: f64,
    n_traj: usize,
    master_seed: u64,
) -> Result<EnsembleStats> {
    if n_traj < 100 {
        return Err(Error::InvalidParameter(format!(
            "variance estimation needs at least 100 trajectories, got {n_traj}"
        )));
    }
    let summaries = run_ensemble(params, t_end, n_traj, master_seed)?;
    let samples: Vec<f64> = summaries.iter().map(|s| s.mean_p()).collect();
    EnsembleStats::from_samples(&samples)
}

/// Re-derives the final ⟨p(T)⟩ directly from the raw detector reads via the
/// integral kernel
///
/// ⟨p(T)⟩ ≈ Σᵢ exp[−η(T−tᵢ)/2 − Σ_{j>i} 2κ²_τ(tⱼ)γ₃₃ʲ]·κ_τ(tᵢ)·γ₃₃ⁱ·χ̃ᵢ,
///
/// a first-order discretization of the recursive conditioning; the two
/// agree to O(τ). With η = ω = 0 the kernel collapses to the constant
/// κ_τ/(1 + 2κ̃²T).
pub fn weighted_estimator(record: &TrajectoryRecord, params: &PhysicalParams) -> Result<f64> {
    record.validate_against(params)?;
    let n_slices = record.times.len().saturating_sub(1);
    if n_slices == 0 {
        return Ok(0.0);
    }
    let schedule = ConditioningSchedule::build(params, n_slices, OutcomeMode::default())?;
    let t_end = *record.times.last().expect("nonempty");
    let mut estimate = 0.0;
    let mut tail_strength = 0.0;
    for (i, slice) in schedule.slices.iter().enumerate().rev() {
        let t_start = i as f64 * schedule.tau;
        let weight = (-schedule.eta * (t_end - t_start) / 2.0 - tail_strength).exp()
            * slice.kappa_tau
            * slice.g33sd;
        estimate += weight * record.outcomes[i + 1];
        tail_strength += 2.0 * slice.kappa_tau * slice.kappa_tau * slice.g33sd;
    }
    Ok(estimate)
}

/// Characteristic memory span of the detection record: reads older than
/// about 2/η no longer influence the estimate.
pub fn memory_time(eta: f64) -> Result<f64> {
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(Error::Domain(format!(
            "memory time requires a positive depumping rate, got {eta}"
        )));
    }
    Ok(2.0 / eta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::propagator::SliceSimulator;
    use approx::assert_abs_diff_eq;

    fn lossless_params(tau: f64) -> PhysicalParams {
        PhysicalParams::lossless(1.0).unwrap().with_tau(tau)
    }

    #[test]
    fn replaying_a_seed_reproduces_the_record_bitwise() {
        let params = lossless_params(1e-3);
        let a = run_trajectory(&params, 0.2, 99).unwrap();
        let b = run_trajectory(&params, 0.2, 99).unwrap();
        assert_eq!(a, b);
        let c = run_trajectory(&params, 0.2, 100).unwrap();
        assert_ne!(a.outcomes, c.outcomes);
    }

    #[test]
    fn schedule_and_slice_simulator_agree_exactly() {
        let params = lossless_params(1e-3);
        let record = run_trajectory(&params, 0.05, 11).unwrap();
        let mut sim = SliceSimulator::new(params).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        for i in 1..record.len() {
            let out = sim.step(&mut rng).unwrap();
            assert_eq!(out.record, record.outcomes[i]);
            assert_eq!(sim.state().mean, record.cond_means[i]);
        }
    }

    #[test]
    fn lossy_schedule_also_matches_the_simulator() {
        let params = PhysicalParams::from_optical_density(10.0, 1.0)
            .unwrap()
            .with_omega(4.0)
            .with_tau(1e-3);
        let record = run_trajectory(&params, 0.03, 5).unwrap();
        let mut sim = SliceSimulator::new(params).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        for i in 1..record.len() {
            let out = sim.step(&mut rng).unwrap();
            assert_eq!(out.record, record.outcomes[i]);
            assert_eq!(sim.state().mean, record.cond_means[i]);
        }
        let end_state = conditioned_covariance(&params, 0.03).unwrap();
        assert_eq!(end_state.cov, sim.state().cov);
    }

    #[test]
    fn symmetric_probing_keeps_x_means_at_zero_and_p_means_equal() {
        let params = lossless_params(1e-3);
        let record = run_trajectory(&params, 0.3, 3).unwrap();
        for m in &record.cond_means {
            assert_eq!(m[0], 0.0);
            assert_eq!(m[2], 0.0);
            assert_eq!(m[1], m[3]);
        }
    }

    #[test]
    fn silent_detector_leaves_the_means_at_zero() {
        let params = lossless_params(1e-3);
        let n = 40;
        let record = TrajectoryRecord {
            times: (0..=n).map(|i| i as f64 * params.tau).collect(),
            outcomes: vec![0.0; n + 1],
            cond_means: vec![Vector4::zeros(); n + 1],
            seed: 0,
        };
        assert_eq!(weighted_estimator(&record, &params).unwrap(), 0.0);
    }

    #[test]
    fn empty_record_estimates_zero() {
        let params = lossless_params(1e-3);
        let record = TrajectoryRecord {
            times: vec![0.0],
            outcomes: vec![0.0],
            cond_means: vec![Vector4::zeros()],
            seed: 0,
        };
        assert_eq!(weighted_estimator(&record, &params).unwrap(), 0.0);
    }

    #[test]
    fn estimator_rejects_mismatched_slice_duration() {
        let params = lossless_params(1e-3);
        let record = run_trajectory(&params, 0.1, 1).unwrap();
        let other = lossless_params(2e-3);
        assert!(weighted_estimator(&record, &other).is_err());
    }

    fn mean_estimator_gap(params: &PhysicalParams, t_end: f64, n_seeds: u64) -> f64 {
        let mut total = 0.0;
        for seed in 0..n_seeds {
            let record = run_trajectory(params, t_end, seed).unwrap();
            let est = weighted_estimator(&record, params).unwrap();
            total += (est - record.mean_p()).abs();
        }
        total / n_seeds as f64
    }

    #[test]
    fn estimator_converges_linearly_to_the_recursive_means() {
        let coarse = mean_estimator_gap(&lossless_params(2e-3), 1.0, 50);
        let fine = mean_estimator_gap(&lossless_params(1e-3), 1.0, 50);
        assert!(fine < coarse);
        let ratio = fine / coarse;
        assert!(
            (0.3..0.7).contains(&ratio),
            "halving the slice should roughly halve the gap, got ratio {ratio}"
        );
    }

    #[test]
    fn estimator_tracks_the_recursion_with_depumping() {
        let params = PhysicalParams::from_optical_density(10.0, 0.5)
            .unwrap()
            .with_tau(2e-4);
        let gap = mean_estimator_gap(&params, 0.4, 20);
        assert!(gap < 0.01, "kernel drifted from the recursion: {gap}");
    }

    #[test]
    fn ensemble_variance_matches_the_measurement_back_action_law() {
        // 2κ̃²T = 1: the final momentum variance must be κ̃²T/2/(1+2κ̃²T) = 1/8.
        let params = lossless_params(1e-3);
        let stats = ensemble_variance(&params, 0.5, 400, 2024).unwrap();
        assert!(stats.var_of_mean_p > 0.0);
        assert!(
            (stats.var_of_mean_p - 0.125).abs() < 3.0 * stats.stderr,
            "variance {} vs 0.125 ± {}",
            stats.var_of_mean_p,
            stats.stderr
        );
        assert!(stats.mean_of_mean_p.abs() < 4.0 * stats.stderr_of_mean());

        // Conditioned squeezing and ensemble spread partition the initial
        // unit variance.
        let g33 = conditioned_covariance(&params, 0.5)
            .unwrap()
            .sum_diff_cov()[(2, 2)];
        let total = g33 + 4.0 * stats.var_of_mean_p;
        assert!(
            (total - 1.0).abs() < 12.0 * stats.stderr,
            "sum rule violated: {total}"
        );
    }

    #[test]
    fn small_ensembles_are_rejected() {
        let params = lossless_params(1e-3);
        assert!(ensemble_variance(&params, 0.1, 50, 1).is_err());
        assert!(run_ensemble(&params, 0.1, 0, 1).is_err());
    }

    #[test]
    fn ensemble_order_is_deterministic() {
        let params = lossless_params(1e-3);
        let a = run_ensemble(&params, 0.1, 8, 7).unwrap();
        let b = run_ensemble(&params, 0.1, 8, 7).unwrap();
        assert_eq!(a, b);
        for (index, summary) in a.iter().enumerate() {
            assert_eq!(summary.seed, trajectory_seed(7, index as u64));
        }
    }

    #[test]
    fn memory_span_is_twice_the_depumping_time() {
        assert_abs_diff_eq!(memory_time(1.0).unwrap(), 2.0, epsilon = 0.0);
        assert_abs_diff_eq!(memory_time(0.5).unwrap(), 4.0, epsilon = 0.0);
        assert_abs_diff_eq!(memory_time(2.0).unwrap(), 1.0, epsilon = 0.0);
        assert!(memory_time(0.0).is_err());
        assert!(memory_time(-1.0).is_err());
    }

    #[test]
    fn seeds_spread_over_masters_and_indices() {
        let mut seen = std::collections::HashSet::new();
        for master in 0..20u64 {
            for index in 0..20u64 {
                assert!(seen.insert(trajectory_seed(master, index)));
            }
        }
    }

    #[test]
    fn detector_reads_carry_shot_noise_variance() {
        let params = lossless_params(1e-3);
        let record = run_trajectory(&params, 2.0, 31).unwrap();
        let reads = &record.outcomes[1..];
        let mean = reads.iter().sum::<f64>() / reads.len() as f64;
        let var = reads.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (reads.len() - 1) as f64;
        assert!(
            (var - 0.5).abs() < 0.05,
            "read variance {var} should sit at the shot-noise level 1/2"
        );
    }
}
