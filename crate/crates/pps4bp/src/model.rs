//! The planar pairwise symmetric four-body problem in physical and
//! regularized coordinates.
//!
//! Bodies sit at `(x1,x2)`, `(x3,x4)`, `(-x1,-x2)`, `(-x3,-x4)` with masses
//! `1, m, 1, m`. The Levi-Civita-type transformation squares the two relative
//! coordinates `(x1∓x3) + i(x2∓x4)` and rescales time by
//! `dt/ds = (u1²+u2²)(u3²+u4²)`, which turns simultaneous binary collisions
//! into regular points of the flow. Everything downstream (integration,
//! shooting, stability) runs on the regularized Hamiltonian `Γ̂` defined on
//! the extended-phase-space level set `Γ̂ = 0`.

use thiserror::Error;

use crate::{Mat8, Vec4, Vec8};

/// Regularized phase-space point `(u1,u2,u3,u4,v1,v2,v3,v4)`.
pub type PhaseState = Vec8;

/// 2×2 block used by the symmetry matrices.
pub type Mat2 = nalgebra::SMatrix<f64, 2, 2>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("mass parameter {0} outside (0, 1]")]
    InvalidMass(f64),
    #[error("singular configuration: central-collision denominator vanished")]
    SingularConfiguration,
    #[error("degenerate at a simultaneous binary collision: (u1²+u2²)(u3²+u4²) = 0")]
    SbcDegenerate,
    #[error("collision singularity: an inter-body distance vanished")]
    CollisionSingularity,
    #[error("branch degeneracy: a relative coordinate pair vanished")]
    BranchDegenerate,
}

/// Mass ratio of the second pair, constrained to `(0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MassParam(f64);

impl MassParam {
    pub fn new(m: f64) -> Result<Self, ModelError> {
        if m.is_finite() && m > 0.0 && m <= 1.0 {
            Ok(Self(m))
        } else {
            Err(ModelError::InvalidMass(m))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Positions and conjugate momenta of the two independent bodies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalState {
    /// `(x1, x2, x3, x4)`
    pub positions: Vec4,
    /// `(ω1, ω2, ω3, ω4)`
    pub momenta: Vec4,
}

/// Regularized state together with the extended-phase-space bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtendedState {
    pub z: PhaseState,
    /// Energy `Ê`; conserved along the regularized flow.
    pub e_hat: f64,
    /// Accumulated physical time.
    pub t: f64,
    /// Regularized time.
    pub s: f64,
}

/// Parameter bundle identifying one regularized flow: mass and energy level.
#[derive(Debug, Clone, Copy)]
pub struct Dynamics {
    pub m: MassParam,
    pub e_hat: f64,
}

impl Dynamics {
    pub fn new(m: MassParam, e_hat: f64) -> Self {
        Self { m, e_hat }
    }

    /// Dynamics whose energy puts `z` on the level set `Γ̂ = 0`.
    pub fn on_level_set(z: &PhaseState, m: MassParam) -> Result<Self, ModelError> {
        Ok(Self { m, e_hat: solve_energy(z, m)? })
    }
}

// ---------------------------------------------------------------------------
// Symmetry matrices
// ---------------------------------------------------------------------------

/// The constant matrices attached to the orbit symmetries.
///
/// `S_F` advances the orbit a quarter regularized period, `S_G` reverses it
/// about `s = π/4`, and `Q = S_Fᵀ S_G` fixes the symmetric initial-condition
/// subspace at `s = 0`.
#[derive(Debug, Clone)]
pub struct SymmetryConstants {
    pub j: Mat8,
    pub s_f: Mat8,
    pub s_g: Mat8,
    pub q: Mat8,
    pub f: Mat2,
    pub g: Mat2,
}

impl SymmetryConstants {
    pub fn new() -> Self {
        let f = Mat2::new(-1.0, 0.0, 0.0, 1.0);
        let g = Mat2::identity();

        let mut s_f = Mat8::zeros();
        let mut s_g = Mat8::zeros();
        // S_F has 2x2 blocks [[0, F, 0, 0], [-F, 0, 0, 0], [0, 0, 0, F], [0, 0, -F, 0]].
        set_block(&mut s_f, 0, 1, &f);
        set_block(&mut s_f, 1, 0, &(-f));
        set_block(&mut s_f, 2, 3, &f);
        set_block(&mut s_f, 3, 2, &(-f));
        // S_G = diag(-G, G, G, -G).
        set_block(&mut s_g, 0, 0, &(-g));
        set_block(&mut s_g, 1, 1, &g);
        set_block(&mut s_g, 2, 2, &g);
        set_block(&mut s_g, 3, 3, &(-g));

        let j = symplectic_j();
        let q = s_f.transpose() * s_g;
        Self { j, s_f, s_g, q, f, g }
    }
}

impl Default for SymmetryConstants {
    fn default() -> Self {
        Self::new()
    }
}

fn set_block(target: &mut Mat8, block_row: usize, block_col: usize, block: &Mat2) {
    for r in 0..2 {
        for c in 0..2 {
            target[(2 * block_row + r, 2 * block_col + c)] = block[(r, c)];
        }
    }
}

/// Standard symplectic matrix `J = [[0, I], [-I, 0]]` in 4+4 blocks.
pub fn symplectic_j() -> Mat8 {
    let mut j = Mat8::zeros();
    for i in 0..4 {
        j[(i, i + 4)] = 1.0;
        j[(i + 4, i)] = -1.0;
    }
    j
}

/// `J x` without building the matrix.
pub fn apply_j(x: &Vec8) -> Vec8 {
    Vec8::from([x[4], x[5], x[6], x[7], -x[0], -x[1], -x[2], -x[3]])
}

/// `J M` without building `J`: swaps the row blocks and negates the lower one.
pub fn j_times(m: &Mat8) -> Mat8 {
    let mut out = Mat8::zeros();
    for c in 0..8 {
        for r in 0..4 {
            out[(r, c)] = m[(r + 4, c)];
            out[(r + 4, c)] = -m[(r, c)];
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Regularized Hamiltonian and derivatives
// ---------------------------------------------------------------------------

/// Common subexpressions of `Γ̂` at a phase point.
struct Eval {
    u: [f64; 4],
    v: [f64; 4],
    /// `u1²+u2²`, `u3²+u4²`
    r1: f64,
    r2: f64,
    /// `v1²+v2²`, `v3²+v4²`
    sv1: f64,
    sv2: f64,
    /// The bilinear/quadratic invariants `M1..M8` at indices `0..8`.
    mm: [f64; 8],
    /// `√(M5²+M6²)`, `√(M7²+M8²)`
    rho5: f64,
    rho7: f64,
    /// `dt/ds = r1 r2`
    p: f64,
    /// `(1 + 1/m)/16`
    c1: f64,
    /// `(1 - 1/m)/8`
    c2: f64,
    m: f64,
}

impl Eval {
    fn new(z: &PhaseState, m: MassParam) -> Result<Self, ModelError> {
        let m = m.value();
        let u = [z[0], z[1], z[2], z[3]];
        let v = [z[4], z[5], z[6], z[7]];
        let r1 = u[0] * u[0] + u[1] * u[1];
        let r2 = u[2] * u[2] + u[3] * u[3];
        let sv1 = v[0] * v[0] + v[1] * v[1];
        let sv2 = v[2] * v[2] + v[3] * v[3];
        let mm = [
            v[0] * u[0] - v[1] * u[1],
            v[0] * u[1] + v[1] * u[0],
            v[2] * u[2] - v[3] * u[3],
            v[2] * u[3] + v[3] * u[2],
            u[0] * u[0] - u[1] * u[1] + u[2] * u[2] - u[3] * u[3],
            2.0 * (u[0] * u[1] + u[2] * u[3]),
            u[0] * u[0] - u[1] * u[1] - u[2] * u[2] + u[3] * u[3],
            2.0 * (u[0] * u[1] - u[2] * u[3]),
        ];
        let rho5 = (mm[4] * mm[4] + mm[5] * mm[5]).sqrt();
        let rho7 = (mm[6] * mm[6] + mm[7] * mm[7]).sqrt();
        if rho5 == 0.0 || rho7 == 0.0 {
            return Err(ModelError::SingularConfiguration);
        }
        Ok(Self {
            u,
            v,
            r1,
            r2,
            sv1,
            sv2,
            mm,
            rho5,
            rho7,
            p: r1 * r2,
            c1: (1.0 + 1.0 / m) / 16.0,
            c2: (1.0 - 1.0 / m) / 8.0,
            m,
        })
    }

    /// `Γ̂` with the energy term left out.
    fn gamma_free(&self) -> f64 {
        let [m1, m2, m3, m4, ..] = self.mm;
        self.c1 * (self.sv1 * self.r2 + self.sv2 * self.r1)
            + self.c2 * (m3 * m1 + m4 * m2)
            - self.p / self.rho5
            - 2.0 * self.m * (self.r1 + self.r2)
            - self.m * self.m * self.p / self.rho7
    }

    fn grad_p(&self) -> Vec8 {
        let [u1, u2, u3, u4] = self.u;
        Vec8::from([
            2.0 * u1 * self.r2,
            2.0 * u2 * self.r2,
            2.0 * u3 * self.r1,
            2.0 * u4 * self.r1,
            0.0,
            0.0,
            0.0,
            0.0,
        ])
    }

    fn hess_p(&self) -> Mat8 {
        let [u1, u2, u3, u4] = self.u;
        let mut h = Mat8::zeros();
        h[(0, 0)] = 2.0 * self.r2;
        h[(1, 1)] = 2.0 * self.r2;
        h[(2, 2)] = 2.0 * self.r1;
        h[(3, 3)] = 2.0 * self.r1;
        for (i, &ua) in [u1, u2].iter().enumerate() {
            for (j, &ub) in [u3, u4].iter().enumerate() {
                h[(i, 2 + j)] = 4.0 * ua * ub;
                h[(2 + j, i)] = 4.0 * ua * ub;
            }
        }
        h
    }

    /// Gradients of the momentum invariants `M1..M4`.
    fn grad_m14(&self) -> [Vec8; 4] {
        let [u1, u2, u3, u4] = self.u;
        let [v1, v2, v3, v4] = self.v;
        [
            Vec8::from([v1, -v2, 0.0, 0.0, u1, -u2, 0.0, 0.0]),
            Vec8::from([v2, v1, 0.0, 0.0, u2, u1, 0.0, 0.0]),
            Vec8::from([0.0, 0.0, v3, -v4, 0.0, 0.0, u3, -u4]),
            Vec8::from([0.0, 0.0, v4, v3, 0.0, 0.0, u4, u3]),
        ]
    }

    /// Gradients of the position invariants `M5..M8`.
    fn grad_m58(&self) -> [Vec8; 4] {
        let [u1, u2, u3, u4] = self.u;
        [
            Vec8::from([2.0 * u1, -2.0 * u2, 2.0 * u3, -2.0 * u4, 0.0, 0.0, 0.0, 0.0]),
            Vec8::from([2.0 * u2, 2.0 * u1, 2.0 * u4, 2.0 * u3, 0.0, 0.0, 0.0, 0.0]),
            Vec8::from([2.0 * u1, -2.0 * u2, -2.0 * u3, 2.0 * u4, 0.0, 0.0, 0.0, 0.0]),
            Vec8::from([2.0 * u2, 2.0 * u1, -2.0 * u4, -2.0 * u3, 0.0, 0.0, 0.0, 0.0]),
        ]
    }
}

/// The regularized Hamiltonian `Γ̂ = (dt/ds)(H - Ê)` in the `u, v` variables.
///
/// Finite at simultaneous binary collisions (`u1²+u2² = 0` or `u3²+u4² = 0`);
/// singular only when one of the central-configuration denominators
/// `√(M5²+M6²)`, `√(M7²+M8²)` vanishes.
pub fn gamma_hat(z: &PhaseState, m: MassParam, e_hat: f64) -> Result<f64, ModelError> {
    let ev = Eval::new(z, m)?;
    Ok(ev.gamma_free() - e_hat * ev.p)
}

/// Analytic gradient of `Γ̂` with respect to `(u1,..,v4)`.
pub fn grad_gamma_hat(z: &PhaseState, m: MassParam, e_hat: f64) -> Result<Vec8, ModelError> {
    let ev = Eval::new(z, m)?;
    let [u1, u2, u3, u4] = ev.u;
    let [v1, v2, v3, v4] = ev.v;
    let [m1, m2, m3, m4, m5, m6, m7, m8] = ev.mm;
    let [g1, g2, g3, g4] = ev.grad_m14();
    let [g5, g6, g7, g8] = ev.grad_m58();
    let gp = ev.grad_p();

    // Kinetic term c1[(v1²+v2²)r2 + (v3²+v4²)r1].
    let grad_kin = Vec8::from([
        2.0 * ev.sv2 * u1,
        2.0 * ev.sv2 * u2,
        2.0 * ev.sv1 * u3,
        2.0 * ev.sv1 * u4,
        2.0 * v1 * ev.r2,
        2.0 * v2 * ev.r2,
        2.0 * v3 * ev.r1,
        2.0 * v4 * ev.r1,
    ]);

    let mut grad = ev.c1 * grad_kin;
    grad += ev.c2 * (m3 * g1 + m1 * g3 + m4 * g2 + m2 * g4);
    // -P/ρ5 piece.
    let q5 = m5 * g5 + m6 * g6;
    grad -= gp / ev.rho5;
    grad += (ev.p / ev.rho5.powi(3)) * q5;
    // -2m(r1+r2) piece.
    grad -= 4.0 * ev.m * Vec8::from([u1, u2, u3, u4, 0.0, 0.0, 0.0, 0.0]);
    // -m²P/ρ7 piece.
    let m_sq = ev.m * ev.m;
    let q7 = m7 * g7 + m8 * g8;
    grad -= m_sq * gp / ev.rho7;
    grad += (m_sq * ev.p / ev.rho7.powi(3)) * q7;
    // -Ê P piece.
    grad -= e_hat * gp;
    Ok(grad)
}

/// Analytic symmetric Hessian of `Γ̂`.
pub fn hess_gamma_hat(z: &PhaseState, m: MassParam, e_hat: f64) -> Result<Mat8, ModelError> {
    let ev = Eval::new(z, m)?;
    let [u1, u2, u3, u4] = ev.u;
    let [m1, m2, m3, m4, m5, m6, m7, m8] = ev.mm;
    let [g1, g2, g3, g4] = ev.grad_m14();
    let [g5, g6, g7, g8] = ev.grad_m58();
    let gp = ev.grad_p();
    let hp = ev.hess_p();

    let mut h = Mat8::zeros();

    // Kinetic term.
    let two_c1 = 2.0 * ev.c1;
    h[(0, 0)] += two_c1 * ev.sv2;
    h[(1, 1)] += two_c1 * ev.sv2;
    h[(2, 2)] += two_c1 * ev.sv1;
    h[(3, 3)] += two_c1 * ev.sv1;
    h[(4, 4)] += two_c1 * ev.r2;
    h[(5, 5)] += two_c1 * ev.r2;
    h[(6, 6)] += two_c1 * ev.r1;
    h[(7, 7)] += two_c1 * ev.r1;
    let first_u = Vec8::from([u1, u2, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    let second_u = Vec8::from([0.0, 0.0, u3, u4, 0.0, 0.0, 0.0, 0.0]);
    let first_v = Vec8::from([0.0, 0.0, 0.0, 0.0, ev.v[0], ev.v[1], 0.0, 0.0]);
    let second_v = Vec8::from([0.0, 0.0, 0.0, 0.0, 0.0, 0.0, ev.v[2], ev.v[3]]);
    sym_outer(&mut h, 4.0 * ev.c1, &first_u, &second_v);
    sym_outer(&mut h, 4.0 * ev.c1, &second_u, &first_v);

    // Momentum cross term c2(M1 M3 + M2 M4).
    sym_outer(&mut h, ev.c2, &g1, &g3);
    sym_outer(&mut h, ev.c2, &g2, &g4);
    // Constant Hessians of the bilinear invariants, scaled by their partner.
    add_sym(&mut h, 0, 4, ev.c2 * m3);
    add_sym(&mut h, 1, 5, -ev.c2 * m3);
    add_sym(&mut h, 0, 5, ev.c2 * m4);
    add_sym(&mut h, 1, 4, ev.c2 * m4);
    add_sym(&mut h, 2, 6, ev.c2 * m1);
    add_sym(&mut h, 3, 7, -ev.c2 * m1);
    add_sym(&mut h, 2, 7, ev.c2 * m2);
    add_sym(&mut h, 3, 6, ev.c2 * m2);

    // The two inverse-distance terms -coef P/ρ with ρ = √(Ma² + Mb²).
    let add_distance_term =
        |h: &mut Mat8, coef: f64, rho: f64, ma: f64, mb: f64, ga: &Vec8, gb: &Vec8, hess_ma: &Mat8, hess_mb: &Mat8| {
            let rho3 = rho.powi(3);
            let q = ma * ga + mb * gb;
            *h -= (coef / rho) * hp;
            sym_outer(h, coef / rho3, &gp, &q);
            *h -= (3.0 * coef * ev.p / rho.powi(5)) * (q * q.transpose());
            *h += (coef * ev.p / rho3)
                * (ga * ga.transpose() + gb * gb.transpose() + ma * hess_ma + mb * hess_mb);
        };

    let hess_m5 = diag_u(&[2.0, -2.0, 2.0, -2.0]);
    let hess_m6 = pair_u(2.0, 2.0);
    let hess_m7 = diag_u(&[2.0, -2.0, -2.0, 2.0]);
    let hess_m8 = pair_u(2.0, -2.0);
    add_distance_term(&mut h, 1.0, ev.rho5, m5, m6, &g5, &g6, &hess_m5, &hess_m6);
    add_distance_term(&mut h, ev.m * ev.m, ev.rho7, m7, m8, &g7, &g8, &hess_m7, &hess_m8);

    // -2m(r1+r2) and -Ê P.
    for i in 0..4 {
        h[(i, i)] -= 4.0 * ev.m;
    }
    h -= e_hat * hp;

    // Mirror the upper triangle so symmetry is exact, not just to roundoff.
    for i in 0..8 {
        for j in (i + 1)..8 {
            h[(j, i)] = h[(i, j)];
        }
    }
    Ok(h)
}

/// Accumulates `s (x yᵀ + y xᵀ)`.
fn sym_outer(h: &mut Mat8, s: f64, x: &Vec8, y: &Vec8) {
    *h += s * (x * y.transpose()) + s * (y * x.transpose());
}

fn add_sym(h: &mut Mat8, i: usize, j: usize, s: f64) {
    h[(i, j)] += s;
    h[(j, i)] += s;
}

/// Diagonal matrix on the `u` block.
fn diag_u(d: &[f64; 4]) -> Mat8 {
    let mut m = Mat8::zeros();
    for i in 0..4 {
        m[(i, i)] = d[i];
    }
    m
}

/// Matrix coupling `(u1,u2)` and `(u3,u4)` in-pair: entries at (0,1) and (2,3).
fn pair_u(first: f64, second: f64) -> Mat8 {
    let mut m = Mat8::zeros();
    m[(0, 1)] = first;
    m[(1, 0)] = first;
    m[(2, 3)] = second;
    m[(3, 2)] = second;
    m
}

/// Right-hand side of the regularized equations, `z' = J ∇Γ̂(z)`.
pub fn vector_field(z: &PhaseState, m: MassParam, e_hat: f64) -> Result<Vec8, ModelError> {
    Ok(apply_j(&grad_gamma_hat(z, m, e_hat)?))
}

/// Right-hand side of the linearized equations, `Ξ' = J ∇²Γ̂(z) Ξ`.
pub fn variational_rhs(z: &PhaseState, xi: &Mat8, m: MassParam, e_hat: f64) -> Result<Mat8, ModelError> {
    let h = hess_gamma_hat(z, m, e_hat)?;
    Ok(j_times(&h) * xi)
}

/// Derivative of the vector field with respect to the energy parameter `Ê`.
///
/// `Γ̂` is affine in `Ê` through `-Ê (u1²+u2²)(u3²+u4²)`, so
/// `∂(J∇Γ̂)/∂Ê = J (-∇P, 0) = (0, ∇ᵤP)`.
pub fn energy_sensitivity_rhs(z: &PhaseState) -> Vec8 {
    let r1 = z[0] * z[0] + z[1] * z[1];
    let r2 = z[2] * z[2] + z[3] * z[3];
    Vec8::from([
        0.0,
        0.0,
        0.0,
        0.0,
        2.0 * z[0] * r2,
        2.0 * z[1] * r2,
        2.0 * z[2] * r1,
        2.0 * z[3] * r1,
    ])
}

/// The unique `Ê` with `Γ̂(z, m, Ê) = 0`.
pub fn solve_energy(z: &PhaseState, m: MassParam) -> Result<f64, ModelError> {
    let ev = Eval::new(z, m)?;
    if ev.p == 0.0 {
        return Err(ModelError::SbcDegenerate);
    }
    Ok(ev.gamma_free() / ev.p)
}

/// Regularizing time change `dt/ds = (u1²+u2²)(u3²+u4²)`.
pub fn time_rescale(z: &PhaseState) -> f64 {
    (z[0] * z[0] + z[1] * z[1]) * (z[2] * z[2] + z[3] * z[3])
}

/// Angular momentum in regularized variables.
pub fn angular_momentum_reg(z: &PhaseState) -> f64 {
    0.5 * (-z[4] * z[1] + z[5] * z[0] - z[6] * z[3] + z[7] * z[2])
}

/// The PPS4BP Hamiltonian in physical variables.
pub fn physical_hamiltonian(p: &PhysicalState, m: MassParam) -> Result<f64, ModelError> {
    let m = m.value();
    let [x1, x2, x3, x4] = [p.positions[0], p.positions[1], p.positions[2], p.positions[3]];
    let [w1, w2, w3, w4] = [p.momenta[0], p.momenta[1], p.momenta[2], p.momenta[3]];
    let d_first = (x1 * x1 + x2 * x2).sqrt();
    let d_minus = ((x3 - x1) * (x3 - x1) + (x4 - x2) * (x4 - x2)).sqrt();
    let d_plus = ((x1 + x3) * (x1 + x3) + (x2 + x4) * (x2 + x4)).sqrt();
    let d_second = (x3 * x3 + x4 * x4).sqrt();
    if d_first == 0.0 || d_minus == 0.0 || d_plus == 0.0 || d_second == 0.0 {
        return Err(ModelError::CollisionSingularity);
    }
    Ok(0.25 * (w1 * w1 + w2 * w2) + 0.25 / m * (w3 * w3 + w4 * w4)
        - 0.5 / d_first
        - 2.0 * m / d_minus
        - 2.0 * m / d_plus
        - 0.5 * m * m / d_second)
}

/// Angular momentum in physical variables.
pub fn angular_momentum_phys(p: &PhysicalState) -> f64 {
    p.positions[0] * p.momenta[1] - p.positions[1] * p.momenta[0]
        + p.positions[2] * p.momenta[3]
        - p.positions[3] * p.momenta[2]
}

/// Principal square root of `re + i im`: nonnegative real part, and
/// nonnegative imaginary part when the real part is zero.
fn principal_sqrt(re: f64, im: f64) -> (f64, f64) {
    if re == 0.0 && im == 0.0 {
        return (0.0, 0.0);
    }
    let r = f64::hypot(re, im);
    if re >= 0.0 {
        let a = (0.5 * (r + re)).sqrt();
        (a, 0.5 * im / a)
    } else {
        let b_mag = (0.5 * (r - re)).sqrt();
        let b = if im >= 0.0 { b_mag } else { -b_mag };
        (0.5 * im / b, b)
    }
}

/// Canonical transformation into regularized variables.
///
/// Positions via `(u1 + i u2)² = (x1-x3) + i(x2-x4)` and
/// `(u3 + i u4)² = (x1+x3) + i(x2+x4)` on the principal branch; momenta by
/// the transpose-Jacobian rule `v = (∂x/∂u)ᵀ ω` of the point transformation.
pub fn to_regularized(p: &PhysicalState, _m: MassParam) -> Result<PhaseState, ModelError> {
    let [x1, x2, x3, x4] = [p.positions[0], p.positions[1], p.positions[2], p.positions[3]];
    let [w1, w2, w3, w4] = [p.momenta[0], p.momenta[1], p.momenta[2], p.momenta[3]];
    let diff = (x1 - x3, x2 - x4);
    let sum = (x1 + x3, x2 + x4);
    if (diff.0 == 0.0 && diff.1 == 0.0) || (sum.0 == 0.0 && sum.1 == 0.0) {
        return Err(ModelError::BranchDegenerate);
    }
    let (u1, u2) = principal_sqrt(diff.0, diff.1);
    let (u3, u4) = principal_sqrt(sum.0, sum.1);
    let v1 = u1 * (w1 - w3) + u2 * (w2 - w4);
    let v2 = -u2 * (w1 - w3) + u1 * (w2 - w4);
    let v3 = u3 * (w1 + w3) + u4 * (w2 + w4);
    let v4 = -u4 * (w1 + w3) + u3 * (w2 + w4);
    Ok(Vec8::from([u1, u2, u3, u4, v1, v2, v3, v4]))
}

/// Inverse transformation back to physical variables.
///
/// Momenta require both `u` pairs nonzero (away from collisions).
pub fn to_physical(z: &PhaseState, _m: MassParam) -> Result<PhysicalState, ModelError> {
    let [u1, u2, u3, u4] = [z[0], z[1], z[2], z[3]];
    let [v1, v2, v3, v4] = [z[4], z[5], z[6], z[7]];
    let x1 = 0.5 * (u1 * u1 - u2 * u2 + u3 * u3 - u4 * u4);
    let x2 = u1 * u2 + u3 * u4;
    let x3 = 0.5 * (u3 * u3 - u4 * u4 - u1 * u1 + u2 * u2);
    let x4 = u3 * u4 - u1 * u2;
    let r1 = u1 * u1 + u2 * u2;
    let r2 = u3 * u3 + u4 * u4;
    if r1 == 0.0 || r2 == 0.0 {
        return Err(ModelError::SbcDegenerate);
    }
    // Invert the linear relation v = (∂x/∂u)ᵀ ω blockwise.
    let diff_1 = (u1 * v1 - u2 * v2) / r1; // ω1 - ω3
    let diff_2 = (u2 * v1 + u1 * v2) / r1; // ω2 - ω4
    let sum_1 = (u3 * v3 - u4 * v4) / r2; // ω1 + ω3
    let sum_2 = (u4 * v3 + u3 * v4) / r2; // ω2 + ω4
    let w1 = 0.5 * (diff_1 + sum_1);
    let w2 = 0.5 * (diff_2 + sum_2);
    let w3 = 0.5 * (sum_1 - diff_1);
    let w4 = 0.5 * (sum_2 - diff_2);
    Ok(PhysicalState {
        positions: Vec4::from([x1, x2, x3, x4]),
        momenta: Vec4::from([w1, w2, w3, w4]),
    })
}
