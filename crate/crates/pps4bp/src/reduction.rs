//! Symmetry-reduced linear stability analysis.
//!
//! The monodromy matrix of a family member factors as `Y₀⁻¹ Y(2π) = W⁴` with
//! `W = Λ D`, where `Λ = Y₀⁻¹ Q Y₀` comes from the quarter-period symmetry
//! and `D = B⁻¹ S_G B` from the reversing symmetry, `B = Y(π/4)`. With the
//! adapted orthogonal-symplectic `Y₀` built from `γ'(0)`, the average
//! `(W + W⁻¹)/2` is block diagonal `diag(Kᵀ, K)` for a 4×4 matrix `K` read
//! off `B` directly. Two eigenvalues of the lower-right 3×3 block of `K`
//! decide the stability type; the characteristic multipliers are fourth
//! powers of the preimages of the `K` eigenvalues under
//! `f(λ) = (λ + 1/λ)/2`. Only one-eighth of the period is ever integrated on
//! this path; the full-period integration exists as an optional cross-check.

use num_complex::Complex64;
use thiserror::Error;

use crate::integrate::{self, IntegrateError, StepSpec};
use crate::model::{self, Dynamics, ModelError, SymmetryConstants};
use crate::orbit::OrbitRecord;
use crate::spectrum;
use crate::{Mat3, Mat4, Mat8, Vec8, PERIOD, QUARTER_PERIOD};

#[derive(Debug, Error)]
pub enum ReductionError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Integrate(#[from] IntegrateError),
    #[error("orbit derivative at s = 0 is zero")]
    ZeroDerivative,
    #[error("γ'(0) violates the symmetric-derivative subspace by {defect:.3e}")]
    SubspaceViolation { defect: f64 },
    #[error("fundamental matrix at π/4 is ill-conditioned: ‖B⁻¹B - I‖ = {defect:.3e}")]
    IllConditioned { defect: f64 },
    #[error("the two K constructions disagree by {defect:.3e}")]
    FormulaMismatch { defect: f64 },
}

/// The adapted initial fundamental matrix and the derivative data it is
/// built from.
#[derive(Debug, Clone)]
pub struct Y0Basis {
    /// `u1'(0), u2'(0), v1'(0), v2'(0)`.
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    /// `‖γ'(0)‖`.
    pub e: f64,
    pub y0: Mat8,
}

/// Outputs of the `K` construction, with both routes kept for comparison.
#[derive(Debug, Clone)]
pub struct KMatrices {
    /// Assembled `K`: analytic first column, first row from the block
    /// formula, lower-right 3×3 from the column formula.
    pub k: Mat4,
    /// `A3ᵀ Hg A2 + A1ᵀ Hg A4` from the block partition of `B`.
    pub block_form: Mat4,
    /// Entrywise `cᵢᵀ S_G J c₄₊ⱼ` from the columns of `B`.
    pub column_form: Mat4,
    /// Max entrywise disagreement of the two routes.
    pub formula_agreement: f64,
    /// `‖column_form·e₁ - e₁‖`.
    pub first_column_defect: f64,
}

/// Stability verdict for one family member.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StabilityClass {
    LinearlyStable,
    SpectrallyStableMarginal,
    LinearlyUnstable,
    Indeterminate,
}

impl std::fmt::Display for StabilityClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Self::LinearlyStable => "LinearlyStable",
            Self::SpectrallyStableMarginal => "SpectrallyStableMarginal",
            Self::LinearlyUnstable => "LinearlyUnstable",
            Self::Indeterminate => "Indeterminate",
        };
        f.write_str(name)
    }
}

impl std::str::FromStr for StabilityClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "LinearlyStable" => Ok(Self::LinearlyStable),
            "SpectrallyStableMarginal" => Ok(Self::SpectrallyStableMarginal),
            "LinearlyUnstable" => Ok(Self::LinearlyUnstable),
            "Indeterminate" => Ok(Self::Indeterminate),
            other => Err(format!("unknown stability class {other:?}")),
        }
    }
}

/// Structural defects of one reduction, all expected near roundoff.
#[derive(Debug, Clone, Copy, Default)]
pub struct ReductionDefects {
    pub y0_orthogonality: f64,
    pub y0_symplectic: f64,
    pub y0_q_diagonalization: f64,
    pub b_symplectic: f64,
    pub lambda_involution: f64,
    pub d_involution: f64,
    pub w_symplectic: f64,
    pub w_fixes_e5: f64,
    pub w_block_structure: f64,
    pub k_first_column: f64,
    pub k_formula_agreement: f64,
}

/// Everything the stability pipeline produces for one orbit.
#[derive(Debug, Clone)]
pub struct ReductionResult {
    pub y0: Y0Basis,
    pub b: Mat8,
    pub lambda: Mat8,
    pub d: Mat8,
    pub w: Mat8,
    pub k: KMatrices,
    /// `(λ1, λ2, λ3)` of the lower-right 3×3 block of `K`.
    pub eigenvalues: [Complex64; 3],
    /// Both members of the two nontrivial multiplier pairs,
    /// `[λ1-pair, λ2-pair]` flattened.
    pub multipliers: [Complex64; 4],
    pub class: StabilityClass,
    pub defects: ReductionDefects,
}

fn max_abs(m: &Mat8) -> f64 {
    m.iter().fold(0.0f64, |acc, x| acc.max(x.abs()))
}

/// Builds the orthogonal symplectic `Y₀` adapted to `γ'(0)`.
///
/// The last four columns span the `Q`-eigenspace containing `γ'(0)` (which
/// sits in column five, normalized); the first four are their images under
/// `J⁻¹`, so `Y₀ᵀ Q Y₀ = diag(I, -I)`.
pub fn build_y0(gamma_prime_0: &Vec8) -> Result<Y0Basis, ReductionError> {
    let e = gamma_prime_0.norm();
    if e == 0.0 {
        return Err(ReductionError::ZeroDerivative);
    }
    // γ'(0) must satisfy u3' = -u1', u4' = u2', v3' = v1', v4' = -v2'.
    let g = gamma_prime_0;
    let defect = ((g[2] + g[0]).powi(2)
        + (g[3] - g[1]).powi(2)
        + (g[6] - g[4]).powi(2)
        + (g[7] + g[5]).powi(2))
    .sqrt()
        / e;
    if defect > 1e-10 {
        return Err(ReductionError::SubspaceViolation { defect });
    }

    let (a, b, c, d) = (g[0], g[1], g[4], g[5]);
    let rows = [
        [c, d, a, b, a, -b, -c, d],
        [d, -c, b, -a, b, a, -d, -c],
        [c, d, a, b, -a, b, c, -d],
        [-d, c, -b, a, b, a, -d, -c],
        [-a, b, c, -d, c, d, a, b],
        [-b, -a, d, c, d, -c, b, -a],
        [a, -b, -c, d, c, d, a, b],
        [-b, -a, d, c, -d, c, -b, a],
    ];
    let mut y0 = Mat8::zeros();
    for (i, row) in rows.iter().enumerate() {
        for (j, value) in row.iter().enumerate() {
            y0[(i, j)] = value / e;
        }
    }
    Ok(Y0Basis { a, b, c, d, e, y0 })
}

/// `B = Y(π/4)` with `Y(0) = Y₀`, integrated along the record's orbit.
pub fn compute_b(rec: &OrbitRecord, y0: &Y0Basis, h: f64) -> Result<Mat8, ReductionError> {
    let sys = Dynamics::new(rec.mass(), rec.e_hat);
    let spec = StepSpec::new(0.0, QUARTER_PERIOD, h)?;
    let (_, b) = integrate::flow_variational_system(&sys, &rec.initial_state(), &y0.y0, &spec)?;
    Ok(b)
}

/// Symplectic inverse `B⁻¹ = -J Bᵀ J`.
fn symplectic_inverse(b: &Mat8, j: &Mat8) -> Mat8 {
    -(j * b.transpose() * j)
}

/// The involutions `Λ = Y₀⁻¹ Q Y₀`, `D = B⁻¹ S_G B` and their product
/// `W = Λ D`.
pub fn compute_w(b: &Mat8, y0: &Y0Basis) -> Result<(Mat8, Mat8, Mat8), ReductionError> {
    let sym = SymmetryConstants::new();
    let b_inv = symplectic_inverse(b, &sym.j);
    let defect = max_abs(&(b_inv * b - Mat8::identity()));
    if defect > 1e-8 {
        return Err(ReductionError::IllConditioned { defect });
    }
    let lambda = y0.y0.transpose() * sym.q * y0.y0;
    let d = b_inv * sym.s_g * b;
    let w = lambda * d;
    Ok((lambda, d, w))
}

/// `K` from `B = Y(π/4)`, by both constructions.
///
/// The lower-right 3×3 block uses the column formula `cᵢᵀ S_G J c₄₊ⱼ`, the
/// first row the block formula `A3ᵀ Hg A2 + A1ᵀ Hg A4` with
/// `Hg = diag(-G, G)`, and the first column is the analytic `(1,0,0,0)ᵀ`.
pub fn compute_k(b: &Mat8) -> Result<KMatrices, ReductionError> {
    let sym = SymmetryConstants::new();
    let sgj = sym.s_g * sym.j;

    let mut column_form = Mat4::zeros();
    for i in 0..4 {
        for j in 0..4 {
            column_form[(i, j)] = (b.column(i).transpose() * sgj * b.column(4 + j))[(0, 0)];
        }
    }

    let block = |r0: usize, c0: usize| Mat4::from_fn(|i, j| b[(r0 + i, c0 + j)]);
    let a1 = block(0, 0);
    let a2 = block(0, 4);
    let a3 = block(4, 0);
    let a4 = block(4, 4);
    let hg = Mat4::from_diagonal(&nalgebra::Vector4::new(-1.0, -1.0, 1.0, 1.0));
    let block_form = a3.transpose() * hg * a2 + a1.transpose() * hg * a4;

    let formula_agreement = (column_form - block_form)
        .iter()
        .fold(0.0f64, |acc, x| acc.max(x.abs()));
    if formula_agreement > 1e-8 {
        return Err(ReductionError::FormulaMismatch { defect: formula_agreement });
    }

    let first_column_defect = {
        let col = column_form.column(0);
        ((col[0] - 1.0).powi(2) + col[1] * col[1] + col[2] * col[2] + col[3] * col[3]).sqrt()
    };

    let mut k = column_form;
    k[(0, 0)] = 1.0;
    for i in 1..4 {
        k[(i, 0)] = 0.0;
    }
    for j in 1..4 {
        k[(0, j)] = block_form[(0, j)];
    }

    Ok(KMatrices { k, block_form, column_form, formula_agreement, first_column_defect })
}

/// Eigenvalues of the lower-right 3×3 block of `K`, labeled.
///
/// `λ3` is the eigenvalue nearest `-1` (it stays there for the whole family
/// apart from one degenerate mass); `λ1 ≥ λ2` when real, conjugate-paired
/// otherwise. Classification never depends on the labels.
pub fn stability_eigs(k: &Mat4, tol: f64) -> [Complex64; 3] {
    let m3 = Mat3::from_fn(|i, j| k[(1 + i, 1 + j)]);
    let triple = spectrum::eig3(&m3, tol);
    let minus_one = Complex64::new(-1.0, 0.0);

    let all_real = triple.reality_flags.iter().all(|&flag| flag);
    if all_real {
        let mut roots = triple.roots;
        roots.sort_by(|x, y| {
            (x - minus_one)
                .norm()
                .partial_cmp(&(y - minus_one).norm())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let l3 = roots[0];
        let (l1, l2) = if roots[1].re >= roots[2].re {
            (roots[1], roots[2])
        } else {
            (roots[2], roots[1])
        };
        [l1, l2, l3]
    } else {
        let real = triple
            .roots
            .iter()
            .copied()
            .find(|r| r.im == 0.0)
            .unwrap_or(triple.roots[0]);
        let pair_plus = triple
            .roots
            .iter()
            .copied()
            .find(|r| r.im > 0.0)
            .unwrap_or(triple.roots[1]);
        if (real - minus_one).norm() <= (pair_plus - minus_one).norm() {
            [pair_plus, pair_plus.conj(), real]
        } else {
            [real, pair_plus, pair_plus.conj()]
        }
    }
}

/// The multiplier pair `{λ_W⁴, λ_W⁻⁴}` attached to an eigenvalue of `K`.
pub fn multipliers_from_k(k: Complex64) -> (Complex64, Complex64) {
    let (root, reciprocal) = spectrum::reciprocal_pair(k);
    (fourth_power(root), fourth_power(reciprocal))
}

fn fourth_power(x: Complex64) -> Complex64 {
    let sq = x * x;
    sq * sq
}

/// Stability classification from the two deciding eigenvalues.
///
/// Linear stability needs both real, distinct, strictly inside the unit
/// interval, and away from the resonances `0`, `±1/√2`; a real pair on the
/// closed unit interval that trips one of those guards is only marginally
/// (spectrally) stable; anything within `tol` of the unit boundary is left
/// undecided.
pub fn classify(l1: Complex64, l2: Complex64, tol_class: f64) -> StabilityClass {
    if l1.im.abs() > tol_class || l2.im.abs() > tol_class {
        return StabilityClass::LinearlyUnstable;
    }
    let x1 = l1.re;
    let x2 = l2.re;
    if x1.abs() > 1.0 + tol_class || x2.abs() > 1.0 + tol_class {
        return StabilityClass::LinearlyUnstable;
    }
    if x1.abs() >= 1.0 - tol_class || x2.abs() >= 1.0 - tol_class {
        return StabilityClass::Indeterminate;
    }
    let resonance = |x: f64| {
        let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
        x.abs() <= tol_class || (x - inv_sqrt2).abs() <= tol_class || (x + inv_sqrt2).abs() <= tol_class
    };
    if (x1 - x2).abs() <= tol_class || resonance(x1) || resonance(x2) {
        return StabilityClass::SpectrallyStableMarginal;
    }
    StabilityClass::LinearlyStable
}

/// Runs the whole eighth-period reduction for one converged orbit.
pub fn reduce(rec: &OrbitRecord, h: f64, class_tol: f64) -> Result<ReductionResult, ReductionError> {
    let sym = SymmetryConstants::new();
    let z0 = rec.initial_state();
    let gamma_prime = model::vector_field(&z0, rec.mass(), rec.e_hat)?;
    let y0 = build_y0(&gamma_prime)?;
    let b = compute_b(rec, &y0, h)?;
    let (lambda, d, w) = compute_w(&b, &y0)?;
    let k = compute_k(&b)?;
    let eigenvalues = stability_eigs(&k.k, class_tol);
    let (m1a, m1b) = multipliers_from_k(eigenvalues[0]);
    let (m2a, m2b) = multipliers_from_k(eigenvalues[1]);
    let class = classify(eigenvalues[0], eigenvalues[1], class_tol);

    let identity = Mat8::identity();
    let mut diag_pm = Mat8::zeros();
    for i in 0..4 {
        diag_pm[(i, i)] = 1.0;
        diag_pm[(4 + i, 4 + i)] = -1.0;
    }
    // W⁻¹ = DΛ since both factors are involutions.
    let w_inv = d * lambda;
    let mut block_diag_k = Mat8::zeros();
    for i in 0..4 {
        for j in 0..4 {
            block_diag_k[(i, j)] = k.k[(j, i)];
            block_diag_k[(4 + i, 4 + j)] = k.k[(i, j)];
        }
    }
    let e5 = Vec8::from_fn(|i, _| if i == 4 { 1.0 } else { 0.0 });

    let defects = ReductionDefects {
        y0_orthogonality: max_abs(&(y0.y0.transpose() * y0.y0 - identity)),
        y0_symplectic: max_abs(&(y0.y0.transpose() * sym.j * y0.y0 - sym.j)),
        y0_q_diagonalization: max_abs(&(y0.y0.transpose() * sym.q * y0.y0 - diag_pm)),
        b_symplectic: max_abs(&(b.transpose() * sym.j * b - sym.j)),
        lambda_involution: max_abs(&(lambda * lambda - identity)),
        d_involution: max_abs(&(d * d - identity)),
        w_symplectic: max_abs(&(w.transpose() * sym.j * w - sym.j)),
        w_fixes_e5: (w * e5 - e5).norm(),
        w_block_structure: max_abs(&(0.5 * (w + w_inv) - block_diag_k)),
        k_first_column: k.first_column_defect,
        k_formula_agreement: k.formula_agreement,
    };

    Ok(ReductionResult {
        y0,
        b,
        lambda,
        d,
        w,
        k,
        eigenvalues,
        multipliers: [m1a, m1b, m2a, m2b],
        class,
        defects,
    })
}

/// Full-period consistency check of the factorization.
#[derive(Debug, Clone)]
pub struct CrosscheckReport {
    /// `‖Y₀⁻¹Y(2π) - W⁴‖_max`.
    pub w4_defect: f64,
    /// `‖Y₀ (Y₀⁻¹ S_Fᵀ Y(π/2))⁴ - Y(2π)‖_max`, the quarter-factor identity.
    pub quarter_factor_defect: f64,
    /// Relative defects of the four analytically known unit-multiplier
    /// directions: flow direction, rotation generator, and the gradients of
    /// the two first integrals under the transposed monodromy.
    pub trivial_defects: [f64; 4],
    /// `‖Y(2π)ᵀ J Y(2π) - J‖_max` for the full-period fundamental matrix.
    pub full_period_symplectic_defect: f64,
    /// Magnitude scale of the monodromy entries, for judging the absolute
    /// defects above.
    pub monodromy_scale: f64,
}

/// Integrates the fundamental matrix over the full period and compares the
/// monodromy against the eighth-period factorization.
pub fn monodromy_crosscheck(rec: &OrbitRecord, h: f64) -> Result<CrosscheckReport, ReductionError> {
    let sym = SymmetryConstants::new();
    let m = rec.mass();
    let sys = Dynamics::new(m, rec.e_hat);
    let z0 = rec.initial_state();
    let gamma_prime = model::vector_field(&z0, m, rec.e_hat)?;
    let y0 = build_y0(&gamma_prime)?;

    // One pass over the period, capturing Y at π/4 and π/2 on the way.
    let spec_b = StepSpec::new(0.0, QUARTER_PERIOD, h)?;
    let (z_quarter, b) = integrate::flow_variational_system(&sys, &z0, &y0.y0, &spec_b)?;
    let spec_half = StepSpec::new(QUARTER_PERIOD, 2.0 * QUARTER_PERIOD, h)?;
    let (z_half, y_half) = integrate::flow_variational_system(&sys, &z_quarter, &b, &spec_half)?;
    let spec_rest = StepSpec::new(2.0 * QUARTER_PERIOD, PERIOD, h)?;
    let (_, y_full) = integrate::flow_variational_system(&sys, &z_half, &y_half, &spec_rest)?;

    let (_, _, w) = compute_w(&b, &y0)?;
    let monodromy = y0.y0.transpose() * y_full;
    let w4 = {
        let sq = w * w;
        sq * sq
    };
    let w4_defect = max_abs(&(monodromy - w4));

    let quarter_factor = y0.y0.transpose() * sym.s_f.transpose() * y_half;
    let quarter_power = {
        let sq = quarter_factor * quarter_factor;
        sq * sq
    };
    let quarter_factor_defect = max_abs(&(y0.y0 * quarter_power - y_full));

    // State-transition monodromy DΦ = Y(2π) Y₀⁻¹ fixes the flow direction
    // and the rotation generator; its transpose fixes the first-integral
    // gradients.
    let transition = y_full * y0.y0.transpose();
    let rotation = 0.5
        * Vec8::from([-z0[1], z0[0], -z0[3], z0[2], -z0[5], z0[4], -z0[7], z0[6]]);
    let grad_gamma = model::grad_gamma_hat(&z0, m, rec.e_hat)?;
    let grad_a = 0.5
        * Vec8::from([z0[5], -z0[4], z0[7], -z0[6], -z0[1], z0[0], -z0[3], z0[2]]);
    let rel = |image: Vec8, original: &Vec8| (image - original).norm() / original.norm();
    let trivial_defects = [
        rel(transition * gamma_prime, &gamma_prime),
        rel(transition * rotation, &rotation),
        rel(transition.transpose() * grad_gamma, &grad_gamma),
        rel(transition.transpose() * grad_a, &grad_a),
    ];

    Ok(CrosscheckReport {
        w4_defect,
        quarter_factor_defect,
        trivial_defects,
        full_period_symplectic_defect: max_abs(&(y_full.transpose() * sym.j * y_full - sym.j)),
        monodromy_scale: max_abs(&monodromy),
    })
}
