//! Canonical variables, covariance conventions, basis transforms and the
//! symplectic form.
//!
//! # Conventions
//!
//! Quadratures are ordered `(x_A1, p_A1, x_A2, p_A2, x_L, p_L)`: sample 1,
//! sample 2, then the current light segment. Covariances use the
//! normalization γ_ij = 2·Re⟨δy_i δy_j⟩, so the vacuum (coherent) state has
//! γ = I and the uncertainty bound reads γ + iσ ⪰ 0 with σ the
//! unit-normalized commutator matrix ([[0,1],[−1,0]] per mode).
//!
//! Under this normalization the sum/difference covariance entries equal the
//! unnormalized EPR variances: (TγTᵀ)₂₂ = Var(x₁−x₂) and
//! (TγTᵀ)₃₃ = Var(p₁+p₂).

use nalgebra::{Complex, DMatrix, Matrix2, Matrix4, Matrix6, Vector4, Vector6};

use crate::error::{Error, Result};

/// Default absolute tolerance on physicality-witness eigenvalues.
///
/// Long propagations accumulate round-off at this scale; anything more
/// negative indicates a genuinely broken state.
pub const DEFAULT_PHYSICALITY_TOL: f64 = 1e-9;

/// 2×2 rotation through `phi`, matching the sign convention of the Larmor
/// drift d(x,p)/dt = (ωp, −ωx).
pub(crate) fn rotation2(phi: f64) -> Matrix2<f64> {
    let (s, c) = phi.sin_cos();
    Matrix2::new(c, s, -s, c)
}

/// Block-diagonal rotation of the two atomic modes through independent
/// angles.
pub fn local_rotation(phi1: f64, phi2: f64) -> Matrix4<f64> {
    let mut r = Matrix4::zeros();
    r.fixed_view_mut::<2, 2>(0, 0).copy_from(&rotation2(phi1));
    r.fixed_view_mut::<2, 2>(2, 2).copy_from(&rotation2(phi2));
    r
}

/// Orthonormal sum/difference transform `T`.
///
/// Rows map `(x₁,p₁,x₂,p₂)` to `(x₊,x₋,p₊,p₋)` with x± = (x₁±x₂)/√2,
/// p± = (p₁±p₂)/√2. `T` is orthogonal and maps the interleaved symplectic
/// form onto the form pairing (x₊,p₊) and (x₋,p₋), so the new basis is again
/// canonical.
pub fn sum_diff_transform() -> Matrix4<f64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Matrix4::new(
        s, 0.0, s, 0.0, //
        s, 0.0, -s, 0.0, //
        0.0, s, 0.0, s, //
        0.0, s, 0.0, -s,
    )
}

/// Expresses a 4×4 atomic covariance in the sum/difference basis
/// `(x₊, x₋, p₊, p₋)`: returns `T γ Tᵀ`.
pub fn to_sum_diff_basis(cov: &Matrix4<f64>) -> Matrix4<f64> {
    let t = sum_diff_transform();
    t * cov * t.transpose()
}

/// Inverse of [`to_sum_diff_basis`]: returns `Tᵀ γ_sd T`.
pub fn from_sum_diff_basis(cov_sd: &Matrix4<f64>) -> Matrix4<f64> {
    let t = sum_diff_transform();
    t.transpose() * cov_sd * t
}

/// Covariance in the frame counter-rotating at half the accumulated Larmor
/// angle (sample 1 by −θ/2, sample 2 by +θ/2).
///
/// In this frame the measurement-squeezed EPR combinations are stationary:
/// for a lossless rotated probe the sum/difference covariance becomes
/// diagonal here, while in the lab frame it only does so at θ multiples of
/// 2π.
pub fn counter_rotated_cov(cov: &Matrix4<f64>, theta: f64) -> Matrix4<f64> {
    let r = local_rotation(-0.5 * theta, 0.5 * theta);
    r * cov * r.transpose()
}

/// Antisymmetric commutator matrix σ of an m-mode system, with σ² = −I.
///
/// Two layouts are provided: [`SymplecticForm::interleaved`] for the
/// `(x₁,p₁,x₂,p₂,…)` ordering used by the propagators, and
/// [`SymplecticForm::from_pairs`] for arbitrary orderings such as the
/// sum/difference basis `(x₊,x₋,p₊,p₋)` or the partial-transpose pairing
/// used by the entanglement measures.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticForm {
    matrix: DMatrix<f64>,
}

impl SymplecticForm {
    /// Form for the interleaved ordering `(x₁,p₁,x₂,p₂,…)`.
    pub fn interleaved(modes: usize) -> Self {
        let pairs: Vec<(usize, usize)> = (0..modes).map(|m| (2 * m, 2 * m + 1)).collect();
        Self::from_pairs(&pairs).expect("interleaved pairs are always valid")
    }

    /// Form pairing the listed `(x_index, p_index)` coordinates.
    ///
    /// The dimension is twice the number of pairs; every coordinate must be
    /// used exactly once.
    pub fn from_pairs(pairs: &[(usize, usize)]) -> Result<Self> {
        let dim = 2 * pairs.len();
        let mut used = vec![false; dim];
        let mut matrix = DMatrix::zeros(dim, dim);
        for &(x, p) in pairs {
            for idx in [x, p] {
                if idx >= dim {
                    return Err(Error::InvalidParameter(format!(
                        "pair index {idx} out of range for dimension {dim}"
                    )));
                }
                if std::mem::replace(&mut used[idx], true) {
                    return Err(Error::InvalidParameter(format!(
                        "coordinate {idx} appears in more than one pair"
                    )));
                }
            }
            matrix[(x, p)] = 1.0;
            matrix[(p, x)] = -1.0;
        }
        Ok(SymplecticForm { matrix })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn modes(&self) -> usize {
        self.dim() / 2
    }
}

fn max_asymmetry(cov: &DMatrix<f64>) -> f64 {
    let n = cov.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((cov[(i, j)] - cov[(j, i)]).abs());
        }
    }
    worst
}

/// Smallest eigenvalue of the Hermitian physicality witness γ + iσ,
/// evaluated through its real symmetric embedding [[γ, −σ], [σ, γ]].
fn physicality_witness(cov: &DMatrix<f64>, form: &SymplecticForm) -> Result<f64> {
    let n = form.dim();
    let mut h = DMatrix::zeros(2 * n, 2 * n);
    h.view_mut((0, 0), (n, n)).copy_from(cov);
    h.view_mut((n, n), (n, n)).copy_from(cov);
    h.view_mut((0, n), (n, n)).copy_from(&(-form.matrix()));
    h.view_mut((n, 0), (n, n)).copy_from(form.matrix());
    let eigen = nalgebra::linalg::SymmetricEigen::try_new(h, f64::EPSILON, 100_000)
        .ok_or(Error::EigenFailure)?;
    Ok(eigen.eigenvalues.min())
}

/// Tests the uncertainty relation γ + iσ ⪰ 0 up to `-tol` on the witness
/// eigenvalues.
///
/// Returns an error if the input is not symmetric within `tol` or does not
/// match the form's dimension.
pub fn check_physical(cov: &DMatrix<f64>, form: &SymplecticForm, tol: f64) -> Result<bool> {
    if cov.nrows() != form.dim() || cov.ncols() != form.dim() {
        return Err(Error::InvalidParameter(format!(
            "covariance is {}x{} but the symplectic form has dimension {}",
            cov.nrows(),
            cov.ncols(),
            form.dim()
        )));
    }
    let asym = max_asymmetry(cov);
    if asym > tol.max(f64::EPSILON) {
        return Err(Error::NotSymmetric(asym));
    }
    Ok(physicality_witness(cov, form)? >= -tol)
}

/// Symplectic spectrum of a symmetric covariance: the m moduli of the
/// ±-paired eigenvalues of σ⁻¹γ, sorted ascending.
///
/// The commutator matrix is kept unit-normalized (σ² = −I) while covariances
/// carry the γ = 2·Var normalization, so the factor two is folded into the
/// returned moduli; the vacuum yields 1/2 per mode and any physical state
/// stays at or above that value.
pub fn symplectic_spectrum(cov: &DMatrix<f64>, form: &SymplecticForm) -> Result<Vec<f64>> {
    if cov.nrows() != form.dim() || cov.ncols() != form.dim() {
        return Err(Error::InvalidParameter(format!(
            "covariance is {}x{} but the symplectic form has dimension {}",
            cov.nrows(),
            cov.ncols(),
            form.dim()
        )));
    }
    let asym = max_asymmetry(cov);
    if asym > DEFAULT_PHYSICALITY_TOL {
        return Err(Error::NotSymmetric(asym));
    }
    // σ⁻¹ = −σ because σ² = −I.
    let m = -(form.matrix() * cov);
    let schur = nalgebra::linalg::Schur::try_new(m, f64::EPSILON, 100_000)
        .ok_or(Error::EigenFailure)?;
    let eigs: Vec<Complex<f64>> = schur.complex_eigenvalues().iter().copied().collect();
    let mut moduli: Vec<f64> = eigs.iter().map(|c| c.norm() / 2.0).collect();
    moduli.sort_by(f64::total_cmp);
    // Eigenvalues of σ⁻¹γ come in ±λ pairs with equal moduli; keep one per
    // pair.
    Ok(moduli.into_iter().step_by(2).collect())
}

pub(crate) fn dmatrix4(m: &Matrix4<f64>) -> DMatrix<f64> {
    DMatrix::from_column_slice(4, 4, m.as_slice())
}

pub(crate) fn dmatrix6(m: &Matrix6<f64>) -> DMatrix<f64> {
    DMatrix::from_column_slice(6, 6, m.as_slice())
}

/// Full state of both samples plus the current light segment: 6-entry mean
/// and 6×6 covariance in the ordering `(x_A1,p_A1,x_A2,p_A2,x_L,p_L)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalState {
    pub mean: Vector6<f64>,
    pub cov: Matrix6<f64>,
}

impl CanonicalState {
    /// Vacuum of all three modes: zero means, identity covariance.
    pub fn vacuum() -> Self {
        CanonicalState {
            mean: Vector6::zeros(),
            cov: Matrix6::identity(),
        }
    }

    /// Validating constructor: requires a symmetric, physical covariance with
    /// positive diagonal.
    pub fn new(mean: Vector6<f64>, cov: Matrix6<f64>) -> Result<Self> {
        validate_cov(&dmatrix6(&cov), &SymplecticForm::interleaved(3))?;
        if mean.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("mean vector is not finite".into()));
        }
        Ok(CanonicalState { mean, cov })
    }

    /// The 4×4 atomic covariance block.
    pub fn atomic_cov(&self) -> Matrix4<f64> {
        self.cov.fixed_view::<4, 4>(0, 0).into_owned()
    }

    /// The 2×2 light covariance block.
    pub fn light_cov(&self) -> Matrix2<f64> {
        self.cov.fixed_view::<2, 2>(4, 4).into_owned()
    }

    /// The 4×2 atom–light correlation block.
    pub fn cross_cov(&self) -> nalgebra::Matrix4x2<f64> {
        self.cov.fixed_view::<4, 2>(0, 4).into_owned()
    }

    /// Physicality check with the interleaved three-mode form.
    pub fn check_physical(&self, tol: f64) -> Result<bool> {
        check_physical(&dmatrix6(&self.cov), &SymplecticForm::interleaved(3), tol)
    }
}

/// Atomic-only state left after a light segment has been measured and
/// discarded: 4-entry mean, 4×4 covariance and the accumulated dimensionless
/// depumping ηt that drives the mean-spin decay e^{−ηt} and the thermal
/// noise scale ξ(t).
#[derive(Debug, Clone, PartialEq)]
pub struct AtomicState {
    pub mean: Vector4<f64>,
    pub cov: Matrix4<f64>,
    pub elapsed_eta_t: f64,
}

impl AtomicState {
    /// Fully pumped start: zero means, identity covariance, no accumulated
    /// depumping.
    pub fn vacuum() -> Self {
        AtomicState {
            mean: Vector4::zeros(),
            cov: Matrix4::identity(),
            elapsed_eta_t: 0.0,
        }
    }

    /// Validating constructor.
    pub fn new(mean: Vector4<f64>, cov: Matrix4<f64>, elapsed_eta_t: f64) -> Result<Self> {
        validate_cov(&dmatrix4(&cov), &SymplecticForm::interleaved(2))?;
        if mean.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("mean vector is not finite".into()));
        }
        if !elapsed_eta_t.is_finite() || elapsed_eta_t < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "elapsed_eta_t must be finite and non-negative, got {elapsed_eta_t}"
            )));
        }
        Ok(AtomicState {
            mean,
            cov,
            elapsed_eta_t,
        })
    }

    /// Appends a fresh coherent light segment (identity covariance, zero
    /// mean, no correlations), ready for the next probe slice.
    pub fn with_fresh_light(&self) -> CanonicalState {
        let mut cov = Matrix6::identity();
        cov.fixed_view_mut::<4, 4>(0, 0).copy_from(&self.cov);
        let mut mean = Vector6::zeros();
        mean.fixed_view_mut::<4, 1>(0, 0).copy_from(&self.mean);
        CanonicalState { mean, cov }
    }

    /// Physicality check with the interleaved two-mode form.
    pub fn check_physical(&self, tol: f64) -> Result<bool> {
        check_physical(&dmatrix4(&self.cov), &SymplecticForm::interleaved(2), tol)
    }

    /// Sum/difference covariance of the current atomic state.
    pub fn sum_diff_cov(&self) -> Matrix4<f64> {
        to_sum_diff_basis(&self.cov)
    }
}

fn validate_cov(cov: &DMatrix<f64>, form: &SymplecticForm) -> Result<()> {
    if cov.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter(
            "covariance contains non-finite entries".into(),
        ));
    }
    let asym = max_asymmetry(cov);
    if asym > DEFAULT_PHYSICALITY_TOL {
        return Err(Error::NotSymmetric(asym));
    }
    if cov.diagonal().iter().any(|&d| d <= 0.0) {
        return Err(Error::InvalidParameter(
            "covariance diagonal must be positive".into(),
        ));
    }
    let witness = physicality_witness(cov, form)?;
    if witness < -DEFAULT_PHYSICALITY_TOL {
        return Err(Error::Unphysical(witness));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn sum_diff_of_vacuum_is_vacuum() {
        let sd = to_sum_diff_basis(&Matrix4::identity());
        assert_abs_diff_eq!(sd, Matrix4::identity(), epsilon = 1e-14);
    }

    #[test]
    fn sum_diff_reorders_uncorrelated_diagonals() {
        let cov = Matrix4::from_diagonal(&Vector4::new(3.0, 7.0, 3.0, 7.0));
        let sd = to_sum_diff_basis(&cov);
        let expected = Matrix4::from_diagonal(&Vector4::new(3.0, 3.0, 7.0, 7.0));
        assert_abs_diff_eq!(sd, expected, epsilon = 1e-13);
    }

    #[test]
    fn sum_diff_roundtrip_recovers_correlated_state() {
        // Squeezed EPR state with a₊ = 3, a₋ = 1: sd-diagonal (a₊, 1/a₋, 1/a₊, a₋).
        let sd = Matrix4::from_diagonal(&Vector4::new(3.0, 1.0, 1.0 / 3.0, 1.0));
        let lab = from_sum_diff_basis(&sd);
        // The lab frame shows the x₁x₂ correlations that build the state.
        assert_abs_diff_eq!(lab[(0, 0)], 2.0, epsilon = 1e-13);
        assert_abs_diff_eq!(lab[(0, 2)], 1.0, epsilon = 1e-13);
        assert_abs_diff_eq!(lab[(1, 3)], -1.0 / 3.0, epsilon = 1e-13);
        assert_abs_diff_eq!(to_sum_diff_basis(&lab), sd, epsilon = 1e-12);
    }

    #[test]
    fn sum_diff_transform_is_symplectic() {
        let t = sum_diff_transform();
        let interleaved = SymplecticForm::interleaved(2);
        let sd_pairs = SymplecticForm::from_pairs(&[(0, 2), (1, 3)]).unwrap();
        let mapped = dmatrix4(&(t * from_dmatrix4(interleaved.matrix()) * t.transpose()));
        let diff = (&mapped - sd_pairs.matrix()).abs().max();
        assert!(diff < 1e-12, "form not preserved, diff {diff}");
    }

    fn from_dmatrix4(m: &DMatrix<f64>) -> Matrix4<f64> {
        Matrix4::from_column_slice(m.as_slice())
    }

    #[test]
    fn rotations_are_orthogonal_and_periodic() {
        let r = local_rotation(0.37, -0.37);
        assert_abs_diff_eq!(r * r.transpose(), Matrix4::identity(), epsilon = 1e-14);
        let full = local_rotation(2.0 * std::f64::consts::PI, -2.0 * std::f64::consts::PI);
        assert_abs_diff_eq!(full, Matrix4::identity(), epsilon = 1e-12);
    }

    #[test]
    fn vacuum_is_physical_and_boundary() {
        let form = SymplecticForm::interleaved(2);
        let cov = dmatrix4(&Matrix4::identity());
        assert!(check_physical(&cov, &form, 1e-9).unwrap());
    }

    #[test]
    fn below_uncertainty_is_unphysical() {
        let form = SymplecticForm::interleaved(1);
        let cov = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.1, 0.1]));
        assert!(!check_physical(&cov, &form, 1e-9).unwrap());
    }

    #[test]
    fn squeezed_epr_diagonal_is_physical() {
        // sd-diagonal states built from a±(κ²_t, θ) for several couplings.
        let form = SymplecticForm::from_pairs(&[(0, 2), (1, 3)]).unwrap();
        for (kappa_sq_t, theta) in [(1.0, 0.0), (5.0, std::f64::consts::FRAC_PI_2), (20.0, 7.0)] {
            let (ap, am) = crate::analytic::a_plus_minus(kappa_sq_t, theta);
            let cov = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
                ap,
                1.0 / am,
                1.0 / ap,
                am,
            ]));
            assert!(
                check_physical(&cov, &form, 1e-9).unwrap(),
                "a± state at κ²_t={kappa_sq_t}, θ={theta} should be physical"
            );
        }
    }

    #[test]
    fn asymmetric_input_is_rejected() {
        let mut cov = dmatrix4(&Matrix4::identity());
        cov[(0, 1)] = 1e-3;
        let form = SymplecticForm::interleaved(2);
        assert!(matches!(
            check_physical(&cov, &form, 1e-9),
            Err(Error::NotSymmetric(_))
        ));
    }

    #[test]
    fn vacuum_spectrum_is_half_per_mode() {
        let one = symplectic_spectrum(
            &DMatrix::identity(2, 2),
            &SymplecticForm::interleaved(1),
        )
        .unwrap();
        assert_eq!(one.len(), 1);
        assert_abs_diff_eq!(one[0], 0.5, epsilon = 1e-12);

        let scaled = symplectic_spectrum(
            &(DMatrix::identity(4, 4) * 3.0),
            &SymplecticForm::interleaved(2),
        )
        .unwrap();
        assert_abs_diff_eq!(scaled[0], 1.5, epsilon = 1e-12);
        assert_abs_diff_eq!(scaled[1], 1.5, epsilon = 1e-12);
    }

    #[test]
    fn spectrum_with_conjugate_pairs_sees_purity() {
        // (x₊,p₊),(x₋,p₋) pairing of a squeezed sd-diagonal pure state.
        let form = SymplecticForm::from_pairs(&[(0, 2), (1, 3)]).unwrap();
        let (ap, am) = crate::analytic::a_plus_minus(10.0, 40.0 * std::f64::consts::PI);
        let cov = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            ap,
            1.0 / am,
            1.0 / ap,
            am,
        ]));
        let spec = symplectic_spectrum(&cov, &form).unwrap();
        assert_abs_diff_eq!(spec[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(spec[1], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn spectrum_with_crossed_pairs_matches_diagonal_formula() {
        // (x₊,p₋),(x₋,p₊) pairing: moduli √(g₁₁g₄₄)/2 and √(g₂₂g₃₃)/2.
        let form = SymplecticForm::from_pairs(&[(0, 3), (1, 2)]).unwrap();
        let (g11, g22, g33, g44) = (4.0, 0.25, 0.25, 4.0);
        let cov =
            DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![g11, g22, g33, g44]));
        let spec = symplectic_spectrum(&cov, &form).unwrap();
        let lo = (g22 * g33 as f64).sqrt() / 2.0;
        let hi = (g11 * g44 as f64).sqrt() / 2.0;
        assert_abs_diff_eq!(spec[0], lo, epsilon = 1e-12);
        assert_abs_diff_eq!(spec[1], hi, epsilon = 1e-12);
    }

    #[test]
    fn state_constructors_validate() {
        assert!(CanonicalState::new(Vector6::zeros(), Matrix6::identity()).is_ok());
        assert!(matches!(
            AtomicState::new(Vector4::zeros(), Matrix4::identity() * 0.1, 0.0),
            Err(Error::Unphysical(_))
        ));
        let fresh = AtomicState::vacuum().with_fresh_light();
        assert!(fresh.check_physical(1e-9).unwrap());
        assert_eq!(fresh.cov, Matrix6::identity());
    }

    #[test]
    fn counter_rotation_fixes_identity() {
        let cov = counter_rotated_cov(&Matrix4::identity(), 1.3);
        assert_abs_diff_eq!(cov, Matrix4::identity(), epsilon = 1e-13);
    }
}
