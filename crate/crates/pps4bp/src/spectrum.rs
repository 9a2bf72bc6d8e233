//! Small self-contained eigenvalue computations: the characteristic cubic of
//! a real 3×3 matrix in closed form, the reciprocal quadratic that inverts
//! `f(λ) = (λ + 1/λ)/2`, and modulus tests against the unit circle.

use num_complex::Complex64;

use crate::Mat3;

/// Roots of the characteristic polynomial of a real 3×3 matrix.
#[derive(Debug, Clone, Copy)]
pub struct EigenTriple {
    pub roots: [Complex64; 3],
    /// Per-root `|Im| ≤ tol` decision.
    pub reality_flags: [bool; 3],
    /// `|p(root)|` for the characteristic polynomial `p`.
    pub residuals: [f64; 3],
}

/// Where a complex number sits relative to the unit circle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModulusClass {
    Inside,
    OnCircle,
    Outside,
}

/// Eigenvalues of a real 3×3 matrix via the depressed cubic.
///
/// Three real roots use the trigonometric branch; one real root plus a
/// conjugate pair uses the hyperbolic/Cardano branch followed by quadratic
/// deflation, so conjugate symmetry is exact by construction. Every root
/// gets one Newton polish on the characteristic polynomial.
pub fn eig3(m: &Mat3, tol: f64) -> EigenTriple {
    // p(λ) = λ³ + a λ² + b λ + c
    let a = -m.trace();
    let b = minor_sum(m);
    let c = -m.determinant();

    // Depressed cubic x³ + px + q with λ = x - a/3.
    let shift = a / 3.0;
    let p = b - a * a / 3.0;
    let q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;

    let poly = |x: Complex64| ((x + a) * x + b) * x + c;
    let dpoly = |x: Complex64| (3.0 * x + 2.0 * a) * x + b;
    // One Newton step, kept only when it reduces the residual (it can jump
    // away near a repeated root where p' ≈ 0).
    let polish_real = |x: f64| {
        let px = ((x + a) * x + b) * x + c;
        let dpx = (3.0 * x + 2.0 * a) * x + b;
        if dpx != 0.0 && px.is_finite() {
            let refined = x - px / dpx;
            let pr = ((refined + a) * refined + b) * refined + c;
            if refined.is_finite() && pr.abs() <= px.abs() {
                return refined;
            }
        }
        x
    };

    let discriminant = -4.0 * p * p * p - 27.0 * q * q;
    let roots: [Complex64; 3] = if p == 0.0 && q == 0.0 {
        [Complex64::new(-shift, 0.0); 3]
    } else if discriminant >= 0.0 {
        // Three real roots (p < 0 is implied when the discriminant is
        // nonnegative and the cubic is not degenerate).
        let amp = 2.0 * (-p / 3.0).sqrt();
        let arg = (3.0 * q / (amp * p)).clamp(-1.0, 1.0);
        let phi = arg.acos() / 3.0;
        let mut out = [Complex64::new(0.0, 0.0); 3];
        for (k, slot) in out.iter_mut().enumerate() {
            let x = amp * (phi - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos();
            *slot = Complex64::new(polish_real(x - shift), 0.0);
        }
        out
    } else {
        // One real root, stable Cardano form avoiding cancellation.
        let half_q = q / 2.0;
        let inner = (half_q * half_q + p * p * p / 27.0).sqrt();
        let big = if half_q >= 0.0 { -half_q - inner } else { -half_q + inner };
        let s = big.cbrt();
        let x_real = if s == 0.0 { 0.0 } else { s - p / (3.0 * s) };
        let real_root = polish_real(x_real - shift);
        // Deflate: remaining quadratic λ² + (a + r)λ + (b + r(a + r)).
        let lin = a + real_root;
        let cst = b + real_root * lin;
        let disc = lin * lin - 4.0 * cst;
        let re = -lin / 2.0;
        let im = (-disc).max(0.0).sqrt() / 2.0;
        // One complex Newton polish on the representative, conjugate mirrored.
        let mut root = Complex64::new(re, im);
        let d = dpoly(root);
        if d.norm_sqr() > 0.0 {
            let next = root - poly(root) / d;
            if next.re.is_finite() && next.im.is_finite() && poly(next).norm() <= poly(root).norm() {
                root = next;
            }
        }
        let pair_im = root.im.abs();
        [
            Complex64::new(real_root, 0.0),
            Complex64::new(root.re, pair_im),
            Complex64::new(root.re, -pair_im),
        ]
    };

    let residuals = [poly(roots[0]).norm(), poly(roots[1]).norm(), poly(roots[2]).norm()];
    let reality_flags = [
        roots[0].im.abs() <= tol,
        roots[1].im.abs() <= tol,
        roots[2].im.abs() <= tol,
    ];
    EigenTriple { roots, reality_flags, residuals }
}

/// Sum of the principal 2×2 minors.
fn minor_sum(m: &Mat3) -> f64 {
    m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)]
        + m[(0, 0)] * m[(2, 2)] - m[(0, 2)] * m[(2, 0)]
        + m[(1, 1)] * m[(2, 2)] - m[(1, 2)] * m[(2, 1)]
}

/// The two roots of `λ² - 2kλ + 1 = 0`, i.e. the preimages of `k` under
/// `f(λ) = (λ + 1/λ)/2`.
///
/// The larger-modulus root is computed first, the second is its exact
/// reciprocal, so the pair multiplies to one by construction.
pub fn reciprocal_pair(k: Complex64) -> (Complex64, Complex64) {
    if k.im == 0.0 && k.re.abs() <= 1.0 {
        // Unit-circle case: k = cos θ, roots e^{±iθ}.
        let re = k.re;
        let im = (1.0 - re * re).max(0.0).sqrt();
        let root = Complex64::new(re, im);
        return (root, root.conj());
    }
    let s = (k * k - Complex64::new(1.0, 0.0)).sqrt();
    let plus = k + s;
    let minus = k - s;
    let first = if plus.norm_sqr() >= minus.norm_sqr() { plus } else { minus };
    (first, first.inv())
}

/// Classifies `||λ| - 1|` against `tol`.
pub fn modulus_class(lambda: Complex64, tol: f64) -> ModulusClass {
    let gap = lambda.norm() - 1.0;
    if gap.abs() <= tol {
        ModulusClass::OnCircle
    } else if gap < 0.0 {
        ModulusClass::Inside
    } else {
        ModulusClass::Outside
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    const TOL: f64 = 1e-8;

    fn sorted_by_re_im(mut roots: Vec<Complex64>) -> Vec<Complex64> {
        roots.sort_by(|a, b| {
            (a.re, a.im)
                .partial_cmp(&(b.re, b.im))
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        roots
    }

    #[test]
    fn identity_has_triple_unit_root() {
        let triple = eig3(&Mat3::identity(), TOL);
        for root in triple.roots {
            assert_relative_eq!(root.re, 1.0, epsilon = 1e-14);
            assert_eq!(root.im, 0.0);
        }
    }

    #[test]
    fn diagonal_matrix_roots() {
        let m = Mat3::from_diagonal(&nalgebra::Vector3::new(2.0, -3.0, 0.5));
        let triple = eig3(&m, TOL);
        let got = sorted_by_re_im(triple.roots.to_vec());
        let want = [-3.0, 0.5, 2.0];
        for (g, w) in got.iter().zip(want) {
            assert_relative_eq!(g.re, w, epsilon = 1e-12);
            assert_eq!(g.im, 0.0);
        }
    }

    #[test]
    fn companion_matrix_recovers_roots() {
        // (λ - 0.3)(λ + 0.9)(λ - 1.7) = λ³ - 1.1λ² - 1.5λ + 0.459... expand:
        // tr = 0.3 - 0.9 + 1.7, pairwise sum, product.
        let r = [0.3, -0.9, 1.7];
        let e1 = r[0] + r[1] + r[2];
        let e2 = r[0] * r[1] + r[0] * r[2] + r[1] * r[2];
        let e3 = r[0] * r[1] * r[2];
        let companion = Mat3::new(0.0, 0.0, e3, 1.0, 0.0, -e2, 0.0, 1.0, e1);
        let got = sorted_by_re_im(eig3(&companion, TOL).roots.to_vec());
        let want = [-0.9, 0.3, 1.7];
        for (g, w) in got.iter().zip(want) {
            assert_relative_eq!(g.re, w, epsilon = 1e-12);
            assert_eq!(g.im, 0.0);
        }
    }

    #[test]
    fn trace_determinant_identities_and_residuals() {
        let mut rng = StdRng::seed_from_u64(101);
        for _ in 0..500 {
            let m = Mat3::from_fn(|_, _| rng.gen_range(-2.0..2.0));
            let triple = eig3(&m, TOL);
            let sum: Complex64 = triple.roots.iter().sum();
            let prod: Complex64 = triple.roots.iter().product();
            let scale = m.norm().max(1.0);
            assert!((sum.re - m.trace()).abs() <= 1e-10 * scale);
            assert!(sum.im.abs() <= 1e-12 * scale);
            assert!((prod.re - m.determinant()).abs() <= 1e-10 * scale.powi(3));
            assert!(prod.im.abs() <= 1e-10 * scale.powi(3));
            for resid in triple.residuals {
                assert!(resid <= 1e-9 * scale.powi(3).max(1.0));
            }
            // Complex roots occur as exact conjugates.
            let complex: Vec<_> = triple.roots.iter().filter(|r| r.im != 0.0).collect();
            if !complex.is_empty() {
                assert_eq!(complex.len(), 2);
                assert_eq!(complex[0].re, complex[1].re);
                assert_eq!(complex[0].im, -complex[1].im);
            }
        }
    }

    #[test]
    fn agrees_with_qr_iteration_oracle() {
        let mut rng = StdRng::seed_from_u64(202);
        for _ in 0..1000 {
            let m = Mat3::from_fn(|_, _| rng.gen_range(-3.0..3.0));
            let ours = sorted_by_re_im(eig3(&m, TOL).roots.to_vec());
            let oracle = sorted_by_re_im(m.complex_eigenvalues().iter().copied().collect());
            for (a, b) in ours.iter().zip(oracle.iter()) {
                assert!(
                    (a - b).norm() <= 1e-9 * m.norm().max(1.0),
                    "eig mismatch: {a} vs {b} for {m}"
                );
            }
        }
    }

    #[test]
    fn reciprocal_pair_trivial_values() {
        let (a, b) = reciprocal_pair(Complex64::new(1.0, 0.0));
        assert_eq!(a, Complex64::new(1.0, 0.0));
        assert_eq!(b, Complex64::new(1.0, 0.0));

        // f(2) = (2 + 1/2)/2 = 1.25
        let (a, b) = reciprocal_pair(Complex64::new(1.25, 0.0));
        assert_relative_eq!(a.re, 2.0, epsilon = 1e-14);
        assert_relative_eq!(b.re, 0.5, epsilon = 1e-14);
        assert_eq!(a.im, 0.0);
        assert_eq!(b.im, 0.0);
    }

    #[test]
    fn reciprocal_pair_unit_circle_angle() {
        let k = Complex64::new(0.6941364299, 0.0);
        let (a, b) = reciprocal_pair(k);
        assert_relative_eq!(a.norm(), 1.0, epsilon = 1e-15);
        assert_relative_eq!(a.arg(), k.re.acos(), epsilon = 1e-14);
        assert_relative_eq!(a.arg(), 0.803578, epsilon = 2e-6);
        assert_relative_eq!(b.arg(), -0.803578, epsilon = 2e-6);
        let f = (a + a.inv()) / 2.0;
        assert!((f - k).norm() <= 1e-12);
    }

    #[test]
    fn reciprocal_pair_product_and_f_inverse() {
        let mut rng = StdRng::seed_from_u64(303);
        for _ in 0..500 {
            let k = if rng.gen() {
                Complex64::new(rng.gen_range(-3.0..3.0), 0.0)
            } else {
                Complex64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0))
            };
            let (a, b) = reciprocal_pair(k);
            assert!((a * b - Complex64::new(1.0, 0.0)).norm() <= 1e-14);
            for root in [a, b] {
                let f = (root + root.inv()) / 2.0;
                assert!((f - k).norm() <= 1e-12 * k.norm().max(1.0), "f({root}) = {f} != {k}");
            }
        }
    }

    #[test]
    fn modulus_classification() {
        assert_eq!(modulus_class(Complex64::new(1.0, 0.0), 1e-9), ModulusClass::OnCircle);
        assert_eq!(modulus_class(Complex64::new(-50.70044516, 0.0), 1e-9), ModulusClass::Outside);
        assert_eq!(
            modulus_class(Complex64::new(0.8407916212, 0.5413588917), 1e-9),
            ModulusClass::OnCircle
        );
        assert_eq!(modulus_class(Complex64::new(0.3, 0.2), 1e-9), ModulusClass::Inside);
    }
}
