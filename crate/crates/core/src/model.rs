//! Coefficient matrices of the two-mode resonator and the orthogonal
//! change of basis between physical and hybridized coordinates.
//!
//! The equation of motion in physical coordinates is
//!
//! ```text
//! q'' + D q' + C q = b(t)
//! ```
//!
//! with damping `D = diag(2π d1, 2π d2)` and stiffness
//!
//! ```text
//! C = [ (2π f1)²   −(2π λ)² ]
//!     [ −(2π λ)²   (2π f2)² ]
//! ```
//!
//! where `f1`, `f2` are the uncoupled mode frequencies and `λ` the coupling
//! constant, all in Hz. Diagonalizing `C` yields the hybridized
//! eigenfrequencies `η₊ ≤ η₋` (the measurable resonances) and an orthogonal
//! transformation `T(θ)` with `C = Tᵀ diag((2πη₊)², (2πη₋)²) T`.

use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use thiserror::Error;

/// Deviation of `TᵀT` from the identity above which a matrix is rejected
/// as a basis change.
pub const ORTHOGONALITY_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(
        "squared eigenfrequency {value:.6e} is not positive \
         (f1={f1} Hz, f2={f2} Hz, lambda={lambda} Hz: coupling exceeds the stable range)"
    )]
    NonPositiveFrequency { value: f64, f1: f64, f2: f64, lambda: f64 },
    #[error("matrix is not orthogonal: max |TᵀT − I| = {defect:.3e}")]
    NotOrthogonal { defect: f64 },
    #[error("stiffness diagonal must be positive, got C11={c11:.6e}, C22={c22:.6e}")]
    NegativeDiagonal { c11: f64, c22: f64 },
    #[error("quality factor must be positive, got {q}")]
    NonPositiveQ { q: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Which family of orthogonal basis changes a parameter angle refers to.
///
/// `O(2)` splits into rotations (determinant +1) and reflections
/// (determinant −1); the identification runs both and keeps the better fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Rotation,
    Reflection,
}

impl std::fmt::Display for Branch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Branch::Rotation => write!(f, "rotation"),
            Branch::Reflection => write!(f, "reflection"),
        }
    }
}

impl std::str::FromStr for Branch {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, ModelError> {
        match s {
            "rotation" => Ok(Branch::Rotation),
            "reflection" => Ok(Branch::Reflection),
            other => Err(ModelError::InvalidParameter(format!(
                "unknown branch `{other}` (expected `rotation` or `reflection`)"
            ))),
        }
    }
}

/// Physical coefficients of the coupled pair: mode frequencies, coupling,
/// and per-mode damping, all in Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    pub f1: f64,
    pub f2: f64,
    pub lambda: f64,
    pub d1: f64,
    pub d2: f64,
}

impl PhysicalParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.f1 > 0.0) || !(self.f2 > 0.0) {
            return Err(ModelError::InvalidParameter(format!(
                "mode frequencies must be positive, got f1={}, f2={}",
                self.f1, self.f2
            )));
        }
        if !(self.lambda >= 0.0) {
            return Err(ModelError::InvalidParameter(format!(
                "coupling must be nonnegative, got lambda={}",
                self.lambda
            )));
        }
        Ok(())
    }
}

/// The identification unknowns: basis angle and the two damping
/// coefficients (Hz), plus which O(2) branch the angle lives on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamVector {
    pub theta: f64,
    pub d1: f64,
    pub d2: f64,
    pub branch: Branch,
}

impl ParamVector {
    pub fn new(theta: f64, d1: f64, d2: f64, branch: Branch) -> Self {
        Self { theta, d1, d2, branch }
    }

    /// Zero start vector used by the outer iteration.
    pub fn zero(branch: Branch) -> Self {
        Self::new(0.0, 0.0, 0.0, branch)
    }

    pub fn components(&self) -> [f64; 3] {
        [self.theta, self.d1, self.d2]
    }

    pub fn from_components(c: [f64; 3], branch: Branch) -> Self {
        Self::new(c[0], c[1], c[2], branch)
    }

    /// Euclidean distance on (θ, d1, d2); the branch is not a metric
    /// coordinate.
    pub fn distance(&self, other: &ParamVector) -> f64 {
        let a = self.components();
        let b = other.components();
        ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
    }
}

/// Componentwise box for the identification unknowns, ordered
/// (θ, d1, d2).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl Bounds {
    pub fn new(min: [f64; 3], max: [f64; 3]) -> Result<Self, ModelError> {
        for i in 0..3 {
            if !(min[i] <= max[i]) {
                return Err(ModelError::InvalidParameter(format!(
                    "bounds component {i}: min {} exceeds max {}",
                    min[i], max[i]
                )));
            }
        }
        Ok(Self { min, max })
    }

    pub fn contains(&self, p: &ParamVector) -> bool {
        let c = p.components();
        (0..3).all(|i| c[i] >= self.min[i] - 1e-12 && c[i] <= self.max[i] + 1e-12)
    }

    pub fn clamp(&self, c: [f64; 3]) -> [f64; 3] {
        let mut out = c;
        for i in 0..3 {
            out[i] = out[i].clamp(self.min[i], self.max[i]);
        }
        out
    }

    pub fn width(&self, i: usize) -> f64 {
        self.max[i] - self.min[i]
    }
}

/// Dense 2×2 real matrix. The problem never needs anything larger, so the
/// arithmetic is written out explicitly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Matrix2 {
    pub m: [[f64; 2]; 2],
}

impl Matrix2 {
    pub fn new(m00: f64, m01: f64, m10: f64, m11: f64) -> Self {
        Self { m: [[m00, m01], [m10, m11]] }
    }

    pub fn identity() -> Self {
        Self::new(1.0, 0.0, 0.0, 1.0)
    }

    pub fn diag(a: f64, b: f64) -> Self {
        Self::new(a, 0.0, 0.0, b)
    }

    pub fn transpose(&self) -> Self {
        Self::new(self.m[0][0], self.m[1][0], self.m[0][1], self.m[1][1])
    }

    pub fn mul(&self, rhs: &Matrix2) -> Self {
        let a = &self.m;
        let b = &rhs.m;
        Self::new(
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        )
    }

    pub fn mul_vec(&self, v: [f64; 2]) -> [f64; 2] {
        [
            self.m[0][0] * v[0] + self.m[0][1] * v[1],
            self.m[1][0] * v[0] + self.m[1][1] * v[1],
        ]
    }

    pub fn det(&self) -> f64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (self.m[0][1] - self.m[1][0]).abs() <= tol * self.max_abs().max(1.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.m
            .iter()
            .flatten()
            .fold(0.0_f64, |acc, x| acc.max(x.abs()))
    }

    /// Largest entry of |TᵀT − I|; zero for an exactly orthogonal matrix.
    pub fn orthogonality_defect(&self) -> f64 {
        let g = self.transpose().mul(self);
        let mut defect = 0.0_f64;
        for i in 0..2 {
            for j in 0..2 {
                let target = if i == j { 1.0 } else { 0.0 };
                defect = defect.max((g.m[i][j] - target).abs());
            }
        }
        defect
    }
}

/// Hybridized eigenfrequencies in Hz, ordered `eta_plus <= eta_minus`.
///
/// These are the two resonances actually visible in a measured spectrum;
/// the diagonalized stiffness is `diag((2πη₊)², (2πη₋)²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HybridStiffness {
    pub eta_plus: f64,
    pub eta_minus: f64,
}

impl HybridStiffness {
    pub fn new(eta_plus: f64, eta_minus: f64) -> Result<Self, ModelError> {
        if !(eta_plus > 0.0) || !(eta_minus > 0.0) || eta_plus > eta_minus {
            return Err(ModelError::InvalidParameter(format!(
                "hybrid eigenfrequencies must satisfy 0 < eta_plus <= eta_minus, \
                 got ({eta_plus}, {eta_minus})"
            )));
        }
        Ok(Self { eta_plus, eta_minus })
    }

    /// Squared angular eigenfrequencies ((2πη₊)², (2πη₋)²).
    pub fn angular_sq(&self) -> (f64, f64) {
        ((TAU * self.eta_plus).powi(2), (TAU * self.eta_minus).powi(2))
    }

    /// Diagonalized stiffness matrix.
    pub fn stiffness(&self) -> Matrix2 {
        let (a, b) = self.angular_sq();
        Matrix2::diag(a, b)
    }
}

/// Assemble the physical stiffness matrix from mode frequencies and
/// coupling. The off-diagonal is −(2πλ)² for a positive coupling
/// convention.
pub fn stiffness_from_physical(params: &PhysicalParams) -> Matrix2 {
    let off = -(TAU * params.lambda).powi(2);
    Matrix2::new(
        (TAU * params.f1).powi(2),
        off,
        off,
        (TAU * params.f2).powi(2),
    )
}

/// Eigenfrequencies of the coupled stiffness matrix:
///
/// ```text
/// (2πη±)² = ½ [ (2πf1)² + (2πf2)² ∓ sqrt(4 (2πλ)⁴ + ((2πf1)² − (2πf2)²)²) ]
/// ```
///
/// so `η₊ ≤ η₋`, with equality only at λ = 0 and f1 = f2. Fails when the
/// coupling is strong enough to drive the lower squared eigenvalue
/// non-positive.
pub fn hybrid_eigenvalues(f1: f64, f2: f64, lambda: f64) -> Result<HybridStiffness, ModelError> {
    let a = (TAU * f1).powi(2);
    let b = (TAU * f2).powi(2);
    let l2 = (TAU * lambda).powi(2);
    let disc = (4.0 * l2 * l2 + (a - b) * (a - b)).sqrt();
    let low = 0.5 * (a + b - disc);
    let high = 0.5 * (a + b + disc);
    if !(low > 0.0) {
        return Err(ModelError::NonPositiveFrequency { value: low, f1, f2, lambda });
    }
    HybridStiffness::new(low.sqrt() / TAU, high.sqrt() / TAU)
}

/// The parameterized O(2) basis change.
///
/// Rotation branch: `[[cos θ, −sin θ], [sin θ, cos θ]]` (det +1).
/// Reflection branch: `[[−cos θ, sin θ], [sin θ, cos θ]]` (det −1).
pub fn rotation_from_theta(theta: f64, branch: Branch) -> Matrix2 {
    let (s, c) = theta.sin_cos();
    match branch {
        Branch::Rotation => Matrix2::new(c, -s, s, c),
        Branch::Reflection => Matrix2::new(-c, s, s, c),
    }
}

/// Reassemble the physical stiffness `C = Tᵀ C̃ T` from a basis change and
/// the diagonalized stiffness. Rejects matrices that are not orthogonal to
/// within [`ORTHOGONALITY_TOL`].
pub fn physical_stiffness_from_hybrid(
    t: &Matrix2,
    hybrid: &HybridStiffness,
) -> Result<Matrix2, ModelError> {
    let defect = t.orthogonality_defect();
    if defect > ORTHOGONALITY_TOL {
        return Err(ModelError::NotOrthogonal { defect });
    }
    Ok(t.transpose().mul(&hybrid.stiffness()).mul(t))
}

/// Physical coefficients read off a stiffness matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtractedPhysical {
    pub f1: f64,
    pub f2: f64,
    pub lambda: f64,
    /// +1 when the off-diagonal matches the −(2πλ)² convention,
    /// −1 when the reconstructed off-diagonal came out positive.
    pub coupling_sign: i8,
}

/// Invert [`stiffness_from_physical`]: `f_i = sqrt(C_ii)/2π`,
/// `λ = sqrt(|C12|)/2π`. A positive off-diagonal cannot arise from the
/// assembly convention, so it is flagged via `coupling_sign` rather than
/// rejected.
pub fn extract_physical(c: &Matrix2) -> Result<ExtractedPhysical, ModelError> {
    let c11 = c.m[0][0];
    let c22 = c.m[1][1];
    if !(c11 > 0.0) || !(c22 > 0.0) {
        return Err(ModelError::NegativeDiagonal { c11, c22 });
    }
    let off = 0.5 * (c.m[0][1] + c.m[1][0]);
    Ok(ExtractedPhysical {
        f1: c11.sqrt() / TAU,
        f2: c22.sqrt() / TAU,
        lambda: off.abs().sqrt() / TAU,
        coupling_sign: if off > 0.0 { -1 } else { 1 },
    })
}

/// Damping matrix seen in the hybridized basis:
/// `D̃ = T diag(2π d1, 2π d2) Tᵀ`. Not diagonal unless d1 = d2 or the
/// basis change is trivial; its diagonal is what a linewidth measurement
/// reports.
pub fn hybrid_damping(t: &Matrix2, d1: f64, d2: f64) -> Result<Matrix2, ModelError> {
    let defect = t.orthogonality_defect();
    if defect > ORTHOGONALITY_TOL {
        return Err(ModelError::NotOrthogonal { defect });
    }
    Ok(t.mul(&Matrix2::diag(TAU * d1, TAU * d2)).mul(&t.transpose()))
}

/// Damping references `d± = η± / Q±` in Hz, the diagonal of the measured
/// hybrid damping divided by 2π. These anchor the regularization term of
/// the identification.
pub fn damping_reference(
    eta_plus: f64,
    eta_minus: f64,
    q_plus: f64,
    q_minus: f64,
) -> Result<(f64, f64), ModelError> {
    if !(q_plus > 0.0) {
        return Err(ModelError::NonPositiveQ { q: q_plus });
    }
    if !(q_minus > 0.0) {
        return Err(ModelError::NonPositiveQ { q: q_minus });
    }
    Ok((eta_plus / q_plus, eta_minus / q_minus))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    /// Independent eigensolver for symmetric 2×2 matrices, used only to
    /// cross-check the closed-form eigenvalue expression.
    fn symmetric_eigenvalues(c: &Matrix2) -> (f64, f64) {
        let a = c.m[0][0];
        let b = c.m[0][1];
        let d = c.m[1][1];
        let mean = 0.5 * (a + d);
        let r = (0.25 * (a - d) * (a - d) + b * b).sqrt();
        (mean - r, mean + r)
    }

    #[test]
    fn eigenvalues_match_numeric_solver() {
        let params = PhysicalParams {
            f1: 6.9522e6,
            f2: 7.0156e6,
            lambda: 0.6474e6,
            d1: 0.0,
            d2: 0.0,
        };
        let c = stiffness_from_physical(&params);
        let (lo, hi) = symmetric_eigenvalues(&c);
        let hybrid = hybrid_eigenvalues(params.f1, params.f2, params.lambda).unwrap();
        let (plus, minus) = hybrid.angular_sq();
        assert_relative_eq!(plus, lo, max_relative = 1e-12);
        assert_relative_eq!(minus, hi, max_relative = 1e-12);
    }

    #[test]
    fn eigenvalues_reproduce_measured_resonances() {
        // f1 = 6.9522 MHz, f2 = 7.0156 MHz, λ = 0.6474 MHz puts the
        // hybridized resonances at 6.9402 MHz and 7.0275 MHz.
        let hybrid = hybrid_eigenvalues(6.9522e6, 7.0156e6, 0.6474e6).unwrap();
        assert!((hybrid.eta_plus - 6.9402e6).abs() < 500.0);
        assert!((hybrid.eta_minus - 7.0275e6).abs() < 500.0);
        // Frozen values from the closed form, cross-checked above.
        assert_relative_eq!(hybrid.eta_plus, 6.940185521252e6, max_relative = 1e-11);
        assert_relative_eq!(hybrid.eta_minus, 7.027485548231e6, max_relative = 1e-11);
    }

    #[test]
    fn zero_coupling_leaves_frequencies_unchanged() {
        let hybrid = hybrid_eigenvalues(3.0e5, 4.0e5, 0.0).unwrap();
        assert_relative_eq!(hybrid.eta_plus, 3.0e5, max_relative = 1e-14);
        assert_relative_eq!(hybrid.eta_minus, 4.0e5, max_relative = 1e-14);
    }

    #[test]
    fn overstrong_coupling_is_rejected() {
        // λ² ≥ f1·f2 drives the lower eigenvalue of C non-positive.
        let err = hybrid_eigenvalues(1.0e3, 1.0e3, 2.0e3).unwrap_err();
        assert!(matches!(err, ModelError::NonPositiveFrequency { .. }));
    }

    #[test]
    fn stiffness_offdiagonal_matches_convention() {
        let params = PhysicalParams {
            f1: 6.9522e6,
            f2: 7.0156e6,
            lambda: 0.6474e6,
            d1: 0.0,
            d2: 0.0,
        };
        let c = stiffness_from_physical(&params);
        assert_relative_eq!(c.m[0][1], -1.6546461260441e13, max_relative = 1e-12);
        assert_eq!(c.m[0][1], c.m[1][0], "stiffness must be symmetric");
    }

    #[test]
    fn both_branches_are_orthogonal_everywhere() {
        for k in -20..=20 {
            let theta = k as f64 * 0.31;
            for branch in [Branch::Rotation, Branch::Reflection] {
                let t = rotation_from_theta(theta, branch);
                assert!(
                    t.orthogonality_defect() < 1e-15,
                    "defect too large at theta={theta}, branch={branch}"
                );
            }
        }
    }

    #[test]
    fn branch_determinants() {
        let r = rotation_from_theta(0.7, Branch::Rotation);
        let f = rotation_from_theta(0.7, Branch::Reflection);
        assert_abs_diff_eq!(r.det(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(f.det(), -1.0, epsilon = 1e-15);
    }

    #[test]
    fn stiffness_round_trip_through_hybrid_basis() {
        // C → eigenvalues → Tᵀ C̃ T with the diagonalizing angle must
        // reproduce C. The diagonalizing angle of a symmetric 2×2 with
        // our rotation convention satisfies tan(2θ) = 2 C12 / (C22 − C11)
        // up to quadrant; build T from eigenvectors instead to stay
        // independent of that bookkeeping.
        let params = PhysicalParams {
            f1: 2.4e5,
            f2: 2.9e5,
            lambda: 0.7e5,
            d1: 0.0,
            d2: 0.0,
        };
        let c = stiffness_from_physical(&params);
        let hybrid = hybrid_eigenvalues(params.f1, params.f2, params.lambda).unwrap();
        let (lo, _hi) = hybrid.angular_sq();
        // Eigenvector for the lower eigenvalue: (C − lo I) v = 0.
        let v = [c.m[0][1], lo - c.m[0][0]];
        let norm = (v[0] * v[0] + v[1] * v[1]).sqrt();
        let v = [v[0] / norm, v[1] / norm];
        // T rows are eigenvectors, so that T C Tᵀ = C̃.
        let t = Matrix2::new(v[0], v[1], -v[1], v[0]);
        let rebuilt = physical_stiffness_from_hybrid(&t, &hybrid).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert_relative_eq!(rebuilt.m[i][j], c.m[i][j], max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn non_orthogonal_matrix_is_rejected() {
        let t = Matrix2::new(1.0, 0.1, 0.0, 1.0);
        let hybrid = HybridStiffness::new(1.0e3, 2.0e3).unwrap();
        let err = physical_stiffness_from_hybrid(&t, &hybrid).unwrap_err();
        assert!(matches!(err, ModelError::NotOrthogonal { .. }));
        let err = hybrid_damping(&t, 1.0, 2.0).unwrap_err();
        assert!(matches!(err, ModelError::NotOrthogonal { .. }));
    }

    #[test]
    fn extraction_inverts_assembly() {
        let params = PhysicalParams {
            f1: 1.1e4,
            f2: 0.9e4,
            lambda: 2.5e3,
            d1: 0.0,
            d2: 0.0,
        };
        let c = stiffness_from_physical(&params);
        let got = extract_physical(&c).unwrap();
        assert_relative_eq!(got.f1, params.f1, max_relative = 1e-13);
        assert_relative_eq!(got.f2, params.f2, max_relative = 1e-13);
        assert_relative_eq!(got.lambda, params.lambda, max_relative = 1e-13);
        assert_eq!(got.coupling_sign, 1);
    }

    #[test]
    fn positive_offdiagonal_flips_coupling_sign() {
        let c = Matrix2::new(4.0, 1.5, 1.5, 9.0);
        let got = extract_physical(&c).unwrap();
        assert_eq!(got.coupling_sign, -1);
        assert_relative_eq!(got.lambda, 1.5_f64.sqrt() / TAU, max_relative = 1e-14);
    }

    #[test]
    fn negative_diagonal_is_rejected() {
        let c = Matrix2::new(-1.0, 0.0, 0.0, 4.0);
        assert!(matches!(
            extract_physical(&c),
            Err(ModelError::NegativeDiagonal { .. })
        ));
    }

    #[test]
    fn hybrid_damping_diagonal_mixes_mode_dampings() {
        // D̃ = T diag(2πd1, 2πd2) Tᵀ has diagonal
        // (d1 cos²θ + d2 sin²θ, d1 sin²θ + d2 cos²θ) up to 2π for the
        // rotation branch, and the same diagonal for the reflection
        // branch; only the off-diagonal sign differs between branches.
        let (d1, d2) = (30.0, 45.0);
        let theta = 1.9498_f64;
        let (s, c) = theta.sin_cos();
        for branch in [Branch::Rotation, Branch::Reflection] {
            let t = rotation_from_theta(theta, branch);
            let dt = hybrid_damping(&t, d1, d2).unwrap();
            assert_relative_eq!(
                dt.m[0][0],
                TAU * (d1 * c * c + d2 * s * s),
                max_relative = 1e-13
            );
            assert_relative_eq!(
                dt.m[1][1],
                TAU * (d1 * s * s + d2 * c * c),
                max_relative = 1e-13
            );
            assert!(dt.is_symmetric(1e-13));
        }
        let off_rot = hybrid_damping(&rotation_from_theta(theta, Branch::Rotation), d1, d2)
            .unwrap()
            .m[0][1];
        let off_ref = hybrid_damping(&rotation_from_theta(theta, Branch::Reflection), d1, d2)
            .unwrap()
            .m[0][1];
        assert_relative_eq!(off_rot, -off_ref, max_relative = 1e-12);
    }

    #[test]
    fn equal_dampings_make_hybrid_damping_diagonal() {
        let t = rotation_from_theta(0.83, Branch::Rotation);
        let dt = hybrid_damping(&t, 12.5, 12.5).unwrap();
        assert_abs_diff_eq!(dt.m[0][1], 0.0, epsilon = 1e-9);
        assert_relative_eq!(dt.m[0][0], TAU * 12.5, max_relative = 1e-13);
    }

    #[test]
    fn damping_reference_is_eta_over_q() {
        let (dp, dm) = damping_reference(6.94e6, 7.0275e6, 1.0e5, 1.0e5).unwrap();
        assert_relative_eq!(dp, 69.4, max_relative = 1e-12);
        assert_relative_eq!(dm, 70.275, max_relative = 1e-12);
        assert!(matches!(
            damping_reference(1.0, 1.0, 0.0, 1.0),
            Err(ModelError::NonPositiveQ { .. })
        ));
        assert!(matches!(
            damping_reference(1.0, 1.0, 1.0, -2.0),
            Err(ModelError::NonPositiveQ { .. })
        ));
    }

    #[test]
    fn bounds_clamp_and_contain() {
        let b = Bounds::new([-1.0, -2.0, -3.0], [1.0, 2.0, 3.0]).unwrap();
        let p = ParamVector::new(0.5, -1.0, 2.0, Branch::Rotation);
        assert!(b.contains(&p));
        let clamped = b.clamp([4.0, -5.0, 0.0]);
        assert_eq!(clamped, [1.0, -2.0, 0.0]);
        assert!(Bounds::new([1.0, 0.0, 0.0], [0.0, 1.0, 1.0]).is_err());
    }
}
