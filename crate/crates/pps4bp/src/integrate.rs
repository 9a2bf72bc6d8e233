//! Fixed-step Runge–Kutta order-4 propagation of the regularized state,
//! optionally coupled with the 8×8 variational equations, an energy
//! sensitivity column, and the physical-time quadrature `t' = dt/ds`.
//!
//! Steps are deterministic: no adaptivity, no reordering, so identical
//! inputs give bit-identical trajectories.

use thiserror::Error;

use crate::model::{self, Dynamics, MassParam, ModelError};
use crate::{Mat8, Vec8};

#[derive(Debug, Error)]
pub enum IntegrateError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("invalid step specification: {0}")]
    InvalidSpec(String),
    #[error("state became non-finite at s = {s}")]
    NonFinite { s: f64 },
}

/// A first-order field on the 8-dimensional phase space, with the pieces the
/// coupled integrator may need.
pub trait System {
    /// `z' = f(z)`.
    fn rhs(&self, z: &Vec8) -> Result<Vec8, ModelError>;
    /// `A(z)` with `ξ' = A(z) ξ` the linearized equations along a solution.
    fn linearization(&self, z: &Vec8) -> Result<Mat8, ModelError>;
    /// Rate of the auxiliary time quadrature.
    fn time_rate(&self, _z: &Vec8) -> f64 {
        0.0
    }
    /// Inhomogeneous forcing of a parameter-sensitivity column,
    /// `w' = A(z) w + g(z)`.
    fn param_rhs(&self, _z: &Vec8) -> Vec8 {
        Vec8::zeros()
    }
}

impl System for Dynamics {
    fn rhs(&self, z: &Vec8) -> Result<Vec8, ModelError> {
        model::vector_field(z, self.m, self.e_hat)
    }

    fn linearization(&self, z: &Vec8) -> Result<Mat8, ModelError> {
        Ok(model::j_times(&model::hess_gamma_hat(z, self.m, self.e_hat)?))
    }

    fn time_rate(&self, z: &Vec8) -> f64 {
        model::time_rescale(z)
    }

    fn param_rhs(&self, z: &Vec8) -> Vec8 {
        model::energy_sensitivity_rhs(z)
    }
}

/// Fixed-step specification over `[s0, s1]`.
///
/// The requested step is adjusted so the span is an exact integer number of
/// steps; a final partial step never happens.
#[derive(Debug, Clone, Copy)]
pub struct StepSpec {
    pub s0: f64,
    pub s1: f64,
    pub h: f64,
    pub steps: usize,
}

impl StepSpec {
    pub fn new(s0: f64, s1: f64, h_request: f64) -> Result<Self, IntegrateError> {
        if !h_request.is_finite() || h_request <= 0.0 {
            return Err(IntegrateError::InvalidSpec(format!("step {h_request} must be positive")));
        }
        if !s0.is_finite() || !s1.is_finite() || s1 < s0 {
            return Err(IntegrateError::InvalidSpec(format!("bad span [{s0}, {s1}]")));
        }
        let span = s1 - s0;
        if span == 0.0 {
            return Ok(Self { s0, s1, h: h_request, steps: 0 });
        }
        let steps = (span / h_request).round().max(1.0) as usize;
        Ok(Self { s0, s1, h: span / steps as f64, steps })
    }
}

/// One point along a trajectory.
#[derive(Debug, Clone)]
pub struct TrajectorySample {
    pub s: f64,
    pub z: Vec8,
    /// Physical time accumulated from the start of the span.
    pub t: f64,
    pub y: Option<Mat8>,
}

fn advance_mat(y: &Option<Mat8>, k: &Option<Mat8>, f: f64) -> Option<Mat8> {
    match (y, k) {
        (Some(y), Some(k)) => Some(y + f * k),
        _ => None,
    }
}

fn advance_vec(w: &Option<Vec8>, k: &Option<Vec8>, f: f64) -> Option<Vec8> {
    match (w, k) {
        (Some(w), Some(k)) => Some(w + f * k),
        _ => None,
    }
}

type StageDeriv = (Vec8, Option<Mat8>, Option<Vec8>, f64);

fn stage<S: System>(
    sys: &S,
    z: &Vec8,
    y: &Option<Mat8>,
    w: &Option<Vec8>,
) -> Result<StageDeriv, ModelError> {
    let dz = sys.rhs(z)?;
    let (dy, dw) = if y.is_some() || w.is_some() {
        let a = sys.linearization(z)?;
        (
            y.as_ref().map(|y| a * y),
            w.as_ref().map(|w| a * w + sys.param_rhs(z)),
        )
    } else {
        (None, None)
    };
    Ok((dz, dy, dw, sys.time_rate(z)))
}

/// One classical RK4 step of the coupled system, with the stage
/// linearizations evaluated on the state stages.
#[allow(clippy::type_complexity)]
pub fn rk4_step_system<S: System>(
    sys: &S,
    z: &Vec8,
    y: Option<&Mat8>,
    w: Option<&Vec8>,
    t: Option<f64>,
    h: f64,
) -> Result<(Vec8, Option<Mat8>, Option<Vec8>, Option<f64>), ModelError> {
    let y0 = y.copied();
    let w0 = w.copied();
    let half = 0.5 * h;

    let (k1z, k1y, k1w, k1t) = stage(sys, z, &y0, &w0)?;
    let z2 = z + half * k1z;
    let (k2z, k2y, k2w, k2t) =
        stage(sys, &z2, &advance_mat(&y0, &k1y, half), &advance_vec(&w0, &k1w, half))?;
    let z3 = z + half * k2z;
    let (k3z, k3y, k3w, k3t) =
        stage(sys, &z3, &advance_mat(&y0, &k2y, half), &advance_vec(&w0, &k2w, half))?;
    let z4 = z + h * k3z;
    let (k4z, k4y, k4w, k4t) =
        stage(sys, &z4, &advance_mat(&y0, &k3y, h), &advance_vec(&w0, &k3w, h))?;

    let sixth = h / 6.0;
    let z_next = z + sixth * (k1z + 2.0 * (k2z + k3z) + k4z);
    let y_next = match (y0, k1y, k2y, k3y, k4y) {
        (Some(y), Some(k1), Some(k2), Some(k3), Some(k4)) => {
            Some(y + sixth * (k1 + 2.0 * (k2 + k3) + k4))
        }
        _ => None,
    };
    let w_next = match (w0, k1w, k2w, k3w, k4w) {
        (Some(w), Some(k1), Some(k2), Some(k3), Some(k4)) => {
            Some(w + sixth * (k1 + 2.0 * (k2 + k3) + k4))
        }
        _ => None,
    };
    let t_next = t.map(|t| t + sixth * (k1t + 2.0 * (k2t + k3t) + k4t));
    Ok((z_next, y_next, w_next, t_next))
}

/// One coupled RK4 step of the regularized PPS4BP flow.
#[allow(clippy::type_complexity)]
pub fn rk4_step(
    z: &Vec8,
    y: Option<&Mat8>,
    t: Option<f64>,
    h: f64,
    m: MassParam,
    e_hat: f64,
) -> Result<(Vec8, Option<Mat8>, Option<f64>), IntegrateError> {
    let sys = Dynamics::new(m, e_hat);
    let (z_next, y_next, _, t_next) = rk4_step_system(&sys, z, y, None, t, h)?;
    Ok((z_next, y_next, t_next))
}

fn check_finite(z: &Vec8, s: f64) -> Result<(), IntegrateError> {
    if z.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(IntegrateError::NonFinite { s })
    }
}

/// Repeated RK4 over the span; returns the final state and accumulated time.
pub fn flow_system<S: System>(sys: &S, z0: &Vec8, spec: &StepSpec) -> Result<(Vec8, f64), IntegrateError> {
    let mut z = *z0;
    let mut t = 0.0;
    check_finite(&z, spec.s0)?;
    for k in 0..spec.steps {
        let (z_next, _, _, t_next) = rk4_step_system(sys, &z, None, None, Some(t), spec.h)?;
        z = z_next;
        t = t_next.unwrap();
        check_finite(&z, spec.s0 + (k + 1) as f64 * spec.h)?;
    }
    Ok((z, t))
}

/// State flow of the regularized PPS4BP.
pub fn flow(z0: &Vec8, spec: &StepSpec, m: MassParam, e_hat: f64) -> Result<TrajectorySample, IntegrateError> {
    let sys = Dynamics::new(m, e_hat);
    let (z, t) = flow_system(&sys, z0, spec)?;
    Ok(TrajectorySample { s: spec.s1, z, t, y: None })
}

/// Flow coupled with the fundamental-matrix equations, `Y(s0) = y0`.
pub fn flow_variational_system<S: System>(
    sys: &S,
    z0: &Vec8,
    y0: &Mat8,
    spec: &StepSpec,
) -> Result<(Vec8, Mat8), IntegrateError> {
    let mut z = *z0;
    let mut y = *y0;
    check_finite(&z, spec.s0)?;
    for k in 0..spec.steps {
        let (z_next, y_next, _, _) = rk4_step_system(sys, &z, Some(&y), None, None, spec.h)?;
        z = z_next;
        y = y_next.unwrap();
        check_finite(&z, spec.s0 + (k + 1) as f64 * spec.h)?;
    }
    if !y.iter().all(|x| x.is_finite()) {
        return Err(IntegrateError::NonFinite { s: spec.s1 });
    }
    Ok((z, y))
}

/// Variational flow of the regularized PPS4BP.
pub fn flow_with_variational(
    z0: &Vec8,
    y0: &Mat8,
    spec: &StepSpec,
    m: MassParam,
    e_hat: f64,
) -> Result<(Vec8, Mat8), IntegrateError> {
    let sys = Dynamics::new(m, e_hat);
    flow_variational_system(&sys, z0, y0, spec)
}

/// Flow coupled with the fundamental matrix and one inhomogeneous
/// parameter-sensitivity column `w' = A(z) w + g(z)`.
pub fn flow_sensitivity_system<S: System>(
    sys: &S,
    z0: &Vec8,
    y0: &Mat8,
    w0: &Vec8,
    spec: &StepSpec,
) -> Result<(Vec8, Mat8, Vec8), IntegrateError> {
    let mut z = *z0;
    let mut y = *y0;
    let mut w = *w0;
    check_finite(&z, spec.s0)?;
    for k in 0..spec.steps {
        let (z_next, y_next, w_next, _) = rk4_step_system(sys, &z, Some(&y), Some(&w), None, spec.h)?;
        z = z_next;
        y = y_next.unwrap();
        w = w_next.unwrap();
        check_finite(&z, spec.s0 + (k + 1) as f64 * spec.h)?;
    }
    if !y.iter().all(|x| x.is_finite()) || !w.iter().all(|x| x.is_finite()) {
        return Err(IntegrateError::NonFinite { s: spec.s1 });
    }
    Ok((z, y, w))
}

/// Every `stride`-th sample of the state flow, endpoints always included.
pub fn sample_system<S: System>(
    sys: &S,
    z0: &Vec8,
    spec: &StepSpec,
    stride: usize,
) -> Result<Vec<TrajectorySample>, IntegrateError> {
    if stride == 0 {
        return Err(IntegrateError::InvalidSpec("stride must be at least 1".into()));
    }
    let mut out = Vec::with_capacity(spec.steps / stride + 2);
    let mut z = *z0;
    let mut t = 0.0;
    check_finite(&z, spec.s0)?;
    out.push(TrajectorySample { s: spec.s0, z, t, y: None });
    for k in 0..spec.steps {
        let (z_next, _, _, t_next) = rk4_step_system(sys, &z, None, None, Some(t), spec.h)?;
        z = z_next;
        t = t_next.unwrap();
        let s = spec.s0 + (k + 1) as f64 * spec.h;
        check_finite(&z, s)?;
        if (k + 1) % stride == 0 || k + 1 == spec.steps {
            out.push(TrajectorySample { s, z, t, y: None });
        }
    }
    Ok(out)
}

/// Sampled state flow of the regularized PPS4BP.
pub fn sample_trajectory(
    z0: &Vec8,
    spec: &StepSpec,
    stride: usize,
    m: MassParam,
    e_hat: f64,
) -> Result<Vec<TrajectorySample>, IntegrateError> {
    let sys = Dynamics::new(m, e_hat);
    sample_system(&sys, z0, spec, stride)
}
