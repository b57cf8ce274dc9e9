//! Continuous-limit evolution of the atomic covariance: the matrix Riccati
//! equation
//!
//! dγ/dt = rγ + γrᵀ + Ã(t) − γ·B̃(t)·γ
//!
//! integrated either by fixed-step 4th-order stepping or, for constant
//! coefficients, exactly through the doubling (linearization) method.
//!
//! With depumping the coefficients become time dependent: the measurement
//! terms decay as e^{−ηt} with the mean spin, the thermal source grows as
//! ξ(t)·η = 2ηe^{ηt}, and the drift acquires −(η/2)·I.

use nalgebra::{Matrix2, Matrix4, SMatrix};

use crate::error::{Error, Result};
use crate::params::PhysicalParams;

/// Entry magnitude beyond which the integrator reports divergence.
pub const DIVERGENCE_GUARD: f64 = 1e12;

/// A time series of matrices produced by the integrators.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries<M> {
    pub times: Vec<f64>,
    pub values: Vec<M>,
}

impl<M> TimeSeries<M> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Final (time, value) pair.
    pub fn last(&self) -> Option<(f64, &M)> {
        match (self.times.last(), self.values.last()) {
            (Some(&t), Some(v)) => Some((t, v)),
            _ => None,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, &M)> {
        self.times.iter().copied().zip(self.values.iter())
    }
}

/// Series of 4×4 atomic covariances.
pub type CovarianceSeries = TimeSeries<Matrix4<f64>>;

/// Series of 2×2 collective covariances from the reduced rotating-frame
/// model.
pub type ReducedSeries = TimeSeries<Matrix2<f64>>;

/// Larmor drift generator: sample 1 rotates at +ω, sample 2 at −ω.
fn rotation_generator(omega: f64) -> Matrix4<f64> {
    Matrix4::new(
        0.0, omega, 0.0, 0.0, //
        -omega, 0.0, 0.0, 0.0, //
        0.0, 0.0, 0.0, -omega, //
        0.0, 0.0, omega, 0.0,
    )
}

fn source_matrix(kappa_sq_rate: f64, eta: f64, epsilon: f64, t: f64) -> Matrix4<f64> {
    let kt = kappa_sq_rate * (-eta * t).exp();
    let se = (1.0 - epsilon).sqrt();
    let xi_eta = 2.0 * (eta * t).exp() * eta;
    Matrix4::new(
        kt + xi_eta, 0.0, kt * se, 0.0, //
        0.0, xi_eta, 0.0, 0.0, //
        kt * se, 0.0, kt + xi_eta, 0.0, //
        0.0, 0.0, 0.0, xi_eta,
    )
}

fn kernel_matrix(kappa_sq_rate: f64, eta: f64, epsilon: f64, t: f64) -> Matrix4<f64> {
    let strength = kappa_sq_rate * (-eta * t).exp() * (1.0 - epsilon);
    let se = (1.0 - epsilon).sqrt();
    Matrix4::new(
        0.0, 0.0, 0.0, 0.0, //
        0.0, (1.0 - epsilon) * strength, 0.0, se * strength, //
        0.0, 0.0, 0.0, 0.0, //
        0.0, se * strength, 0.0, strength,
    )
}

/// Coefficients of the 4×4 Riccati flow.
///
/// `a_matrix` and `b_matrix` hold the full source and measurement kernel at
/// t = 0; for time-dependent (η > 0) problems the integrators re-evaluate
/// them along the way via [`RiccatiProblem::source_at`] and
/// [`RiccatiProblem::kernel_at`].
#[derive(Debug, Clone, PartialEq)]
pub struct RiccatiProblem {
    /// Drift r (rotation generator, plus −η/2 on the diagonal when lossy).
    pub r_matrix: Matrix4<f64>,
    /// Source Ã(0): measurement noise feed-through plus thermal depumping.
    pub a_matrix: Matrix4<f64>,
    /// Measurement kernel B̃(0) acting on the probed p quadratures.
    pub b_matrix: Matrix4<f64>,
    /// Measurement rate κ̃².
    pub scale: f64,
    /// Whether the coefficients vary in time (any η > 0).
    pub time_dependent: bool,
    eta: f64,
    epsilon: f64,
}

impl RiccatiProblem {
    /// Lossless probe: constant coefficients, η = ε = 0.
    pub fn lossless(kappa_sq_rate: f64, omega: f64) -> Self {
        Self::build(kappa_sq_rate, omega, 0.0, 0.0)
    }

    /// Probe with depumping η and absorption ε taken from `params`.
    pub fn lossy(params: &PhysicalParams) -> Self {
        Self::build(
            params.kappa_sq_rate,
            params.omega,
            params.eta,
            params.epsilon(),
        )
    }

    fn build(kappa_sq_rate: f64, omega: f64, eta: f64, epsilon: f64) -> Self {
        let r_matrix = rotation_generator(omega) - Matrix4::identity() * (eta / 2.0);
        RiccatiProblem {
            r_matrix,
            a_matrix: source_matrix(kappa_sq_rate, eta, epsilon, 0.0),
            b_matrix: kernel_matrix(kappa_sq_rate, eta, epsilon, 0.0),
            scale: kappa_sq_rate,
            time_dependent: eta > 0.0,
            eta,
            epsilon,
        }
    }

    /// Source matrix Ã(t).
    pub fn source_at(&self, t: f64) -> Matrix4<f64> {
        if self.time_dependent {
            source_matrix(self.scale, self.eta, self.epsilon, t)
        } else {
            self.a_matrix
        }
    }

    /// Measurement kernel B̃(t).
    pub fn kernel_at(&self, t: f64) -> Matrix4<f64> {
        if self.time_dependent {
            kernel_matrix(self.scale, self.eta, self.epsilon, t)
        } else {
            self.b_matrix
        }
    }

    /// Right-hand side of the flow at time `t`.
    pub fn rhs(&self, t: f64, gamma: &Matrix4<f64>) -> Matrix4<f64> {
        self.r_matrix * gamma + gamma * self.r_matrix.transpose() + self.source_at(t)
            - gamma * self.kernel_at(t) * gamma
    }
}

/// One classical 4th-order step; coefficient matrices are evaluated at the
/// sub-step midpoints, preserving the method's order for time-dependent
/// problems.
pub(crate) fn rk4_step<const N: usize>(
    t: f64,
    dt: f64,
    y: &SMatrix<f64, N, N>,
    f: &dyn Fn(f64, &SMatrix<f64, N, N>) -> SMatrix<f64, N, N>,
) -> SMatrix<f64, N, N> {
    let k1 = f(t, y);
    let k2 = f(t + 0.5 * dt, &(y + k1 * (0.5 * dt)));
    let k3 = f(t + 0.5 * dt, &(y + k2 * (0.5 * dt)));
    let k4 = f(t + dt, &(y + k3 * dt));
    y + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0)
}

fn symmetrize<const N: usize>(m: &mut SMatrix<f64, N, N>) {
    *m = (*m + m.transpose()) * 0.5;
}

fn check_bounded<const N: usize>(m: &SMatrix<f64, N, N>, t: f64) -> Result<()> {
    if m.iter().all(|v| v.is_finite() && v.abs() <= DIVERGENCE_GUARD) {
        Ok(())
    } else {
        Err(Error::Diverged {
            t,
            guard: DIVERGENCE_GUARD,
        })
    }
}

fn integrate<const N: usize>(
    rhs: &dyn Fn(f64, &SMatrix<f64, N, N>) -> SMatrix<f64, N, N>,
    gamma0: &SMatrix<f64, N, N>,
    t_end: f64,
    dt: f64,
    record_every: usize,
) -> Result<TimeSeries<SMatrix<f64, N, N>>> {
    if !(t_end >= 0.0) || !t_end.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "t_end must be finite and non-negative, got {t_end}"
        )));
    }
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "dt must be finite and positive, got {dt}"
        )));
    }
    if record_every == 0 {
        return Err(Error::InvalidParameter(
            "record_every must be at least 1".into(),
        ));
    }
    let n_steps = if t_end == 0.0 {
        0
    } else {
        (t_end / dt).ceil().max(1.0) as usize
    };
    let dt = if n_steps == 0 { dt } else { t_end / n_steps as f64 };

    let mut gamma = *gamma0;
    symmetrize(&mut gamma);
    let mut series = TimeSeries {
        times: Vec::with_capacity(n_steps / record_every + 2),
        values: Vec::with_capacity(n_steps / record_every + 2),
    };
    series.times.push(0.0);
    series.values.push(gamma);
    for step in 1..=n_steps {
        let t_prev = (step - 1) as f64 * dt;
        gamma = rk4_step(t_prev, dt, &gamma, rhs);
        symmetrize(&mut gamma);
        let t = step as f64 * dt;
        check_bounded(&gamma, t)?;
        if step % record_every == 0 || step == n_steps {
            series.times.push(t);
            series.values.push(gamma);
        }
    }
    Ok(series)
}

/// Integrates the Riccati flow from `gamma0` with fixed step `dt`, recording
/// every step.
pub fn integrate_ode(
    problem: &RiccatiProblem,
    gamma0: &Matrix4<f64>,
    t_end: f64,
    dt: f64,
) -> Result<CovarianceSeries> {
    integrate_ode_sampled(problem, gamma0, t_end, dt, 1)
}

/// Like [`integrate_ode`] but recording only every `record_every`-th step
/// (the final state is always recorded).
pub fn integrate_ode_sampled(
    problem: &RiccatiProblem,
    gamma0: &Matrix4<f64>,
    t_end: f64,
    dt: f64,
    record_every: usize,
) -> Result<CovarianceSeries> {
    integrate(
        &|t, gamma: &Matrix4<f64>| problem.rhs(t, gamma),
        gamma0,
        t_end,
        dt,
        record_every,
    )
}

/// Exact constant-coefficient solution through linearization: the flow of
/// γ = W·U⁻¹ is obtained from the matrix exponential of the 8×8 block matrix
/// [[r, Ã], [B̃, −rᵀ]] applied to (γ₀, I).
///
/// Only valid for constant coefficients; rejects any problem with η > 0.
/// A singular U signals the finite escape time of the Riccati flow.
pub fn solve_doubling(
    problem: &RiccatiProblem,
    gamma0: &Matrix4<f64>,
    t: f64,
) -> Result<Matrix4<f64>> {
    if problem.time_dependent {
        return Err(Error::InvalidParameter(
            "constant coefficients required: the doubling method cannot integrate \
             time-dependent (η > 0) problems"
                .into(),
        ));
    }
    if !t.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "time must be finite, got {t}"
        )));
    }
    let mut m = SMatrix::<f64, 8, 8>::zeros();
    m.fixed_view_mut::<4, 4>(0, 0).copy_from(&problem.r_matrix);
    m.fixed_view_mut::<4, 4>(0, 4).copy_from(&problem.a_matrix);
    m.fixed_view_mut::<4, 4>(4, 0).copy_from(&problem.b_matrix);
    m.fixed_view_mut::<4, 4>(4, 4)
        .copy_from(&(-problem.r_matrix.transpose()));
    let propagator = (m * t).exp();
    let e11 = propagator.fixed_view::<4, 4>(0, 0);
    let e12 = propagator.fixed_view::<4, 4>(0, 4);
    let e21 = propagator.fixed_view::<4, 4>(4, 0);
    let e22 = propagator.fixed_view::<4, 4>(4, 4);
    let w = e11 * gamma0 + e12;
    let u = e21 * gamma0 + e22;
    let u_inv = u
        .try_inverse()
        .ok_or(Error::SingularPropagator { t })?;
    let mut gamma = w * u_inv;
    symmetrize(&mut gamma);
    check_bounded(&gamma, t)?;
    Ok(gamma)
}

/// Reduced 2×2 model of the strongly rotated probe (ωt ≫ 1) in its
/// co-rotating collective basis.
///
/// The measured collective pair obeys the same Riccati structure with
/// constant coefficients: drift −(η/2)·I, source κ̃²·diag(1,0) + 4η·I and
/// kernel κ̃²·diag(0,1). Both thermal noise (ξ ≈ 2) and the coupling are
/// frozen at their initial values, matching the closed form's small-ηt
/// domain of validity; light absorption is not modeled here.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedProblem {
    pub r_matrix: Matrix2<f64>,
    pub a_matrix: Matrix2<f64>,
    pub b_matrix: Matrix2<f64>,
    pub scale: f64,
    pub time_dependent: bool,
}

impl ReducedProblem {
    pub fn rotating(params: &PhysicalParams) -> Self {
        let kappa_sq = params.kappa_sq_rate;
        let eta = params.eta;
        ReducedProblem {
            r_matrix: Matrix2::identity() * (-eta / 2.0),
            a_matrix: Matrix2::new(kappa_sq + 4.0 * eta, 0.0, 0.0, 4.0 * eta),
            b_matrix: Matrix2::new(0.0, 0.0, 0.0, kappa_sq),
            scale: kappa_sq,
            time_dependent: false,
        }
    }

    pub fn rhs(&self, gamma: &Matrix2<f64>) -> Matrix2<f64> {
        self.r_matrix * gamma + gamma * self.r_matrix.transpose() + self.a_matrix
            - gamma * self.b_matrix * gamma
    }
}

/// Integrates the reduced rotating-frame model from the collective vacuum,
/// recording every step of the default step size.
pub fn solve_reduced_rotating(params: &PhysicalParams, t_end: f64) -> Result<ReducedSeries> {
    solve_reduced_rotating_sampled(params, t_end, params.default_dt(), 1)
}

/// Like [`solve_reduced_rotating`] with explicit step size and recording
/// cadence.
pub fn solve_reduced_rotating_sampled(
    params: &PhysicalParams,
    t_end: f64,
    dt: f64,
    record_every: usize,
) -> Result<ReducedSeries> {
    let problem = ReducedProblem::rotating(params);
    integrate(
        &|_t, gamma: &Matrix2<f64>| problem.rhs(gamma),
        &Matrix2::identity(),
        t_end,
        dt,
        record_every,
    )
}
