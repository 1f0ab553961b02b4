//! Picard iteration for the grounded phase-locking equation
//!
//! ```text
//! θ̄ = (VᵀB·W(BᵀVθ̄)·BᵀV)⁻¹ · (N/K)·ω̄,      W(φ) = diag(sinc φ)
//! ```
//!
//! with certificates for stability (`|φ*| < π/2` and a positive definite
//! grounded Jacobian) and uniqueness (`K ≥` contraction bound).

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::DVector;
use serde::Serialize;

use super::contraction_from;
use crate::dynamics::{center_frequencies, FrequencyVector, KuramotoModel};
use crate::error::{Error, NonConvergence, Result};
use crate::graph::{check_len, sinc, OrientedGraph};
use crate::spectral::{grounding_projection, spectrum, GroundingProjection};

/// Phase differences are clamped to `±(π − CLAMP_MARGIN)` when forming weights.
pub const CLAMP_MARGIN: f64 = 1e-6;

/// Consecutive clamped iterations after which the run is declared divergent.
const DIVERGENCE_PATIENCE: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPointOptions {
    /// Bound on both the step `‖θ̄ₖ₊₁ − θ̄ₖ‖∞` and the dynamics residual.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for FixedPointOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FixedPointResult {
    /// Mean-zero phases `Vθ̄*`.
    pub theta_star: Vec<f64>,
    pub theta_bar: Vec<f64>,
    /// `Bᵀθ*`.
    pub phi_star: Vec<f64>,
    /// `‖ω̄ − (K/N)·VᵀB·sin(BᵀVθ̄*)‖₂`.
    pub residual: f64,
    pub iterations: usize,
    pub certified_stable: bool,
    pub certified_unique: bool,
    /// Some iterate had a phase difference clamped away from `±π`.
    pub clamped: bool,
}

pub fn solve_fixed_point(
    g: &OrientedGraph,
    omega: &FrequencyVector,
    coupling: f64,
    theta0_bar: Option<&DVector<f64>>,
    opts: &FixedPointOptions,
) -> Result<FixedPointResult> {
    let v = grounding_projection(g.n_vertices())?;
    let s = spectrum(&g.laplacian())?;
    let (centered, _) = center_frequencies(omega);
    let k_contraction = contraction_from(g.n_vertices(), s.lambda2, s.lambda_max, centered.norm2());
    solve_with_projection(g, omega, coupling, theta0_bar, opts, &v, k_contraction)
}

/// Solver core with the grounding basis and contraction bound supplied.
pub fn solve_with_projection(
    g: &OrientedGraph,
    omega: &FrequencyVector,
    coupling: f64,
    theta0_bar: Option<&DVector<f64>>,
    opts: &FixedPointOptions,
    v: &GroundingProjection,
    k_contraction: f64,
) -> Result<FixedPointResult> {
    let n = g.n_vertices();
    check_len(n, omega.len())?;
    check_len(n, v.n())?;
    if !(coupling.is_finite() && coupling > 0.0) {
        return Err(Error::InvalidParameter(format!("coupling must be positive, got {coupling}")));
    }
    if opts.tol.is_nan() || opts.tol <= 0.0 || opts.max_iter == 0 {
        return Err(Error::InvalidParameter("tol and max_iter must be positive".into()));
    }
    let (centered, _) = center_frequencies(omega);
    let model = KuramotoModel::new(g, &centered, coupling)?;
    let omega_bar = v.ground(centered.as_vector())?;
    let drive = &omega_bar * (n as f64 / coupling);

    let mut theta_bar = match theta0_bar {
        Some(t) => {
            check_len(n - 1, t.len())?;
            t.clone()
        }
        None => DVector::zeros(n - 1),
    };

    let limit = PI - CLAMP_MARGIN;
    let mut clamped_any = false;
    let mut clamped_streak = 0;
    let mut steps = Vec::with_capacity(opts.max_iter);

    for iter in 1..=opts.max_iter {
        let phi = g.incidence_transpose_apply(&(v.matrix() * &theta_bar));
        let mut clamped_now = false;
        let weights: Vec<f64> = phi
            .iter()
            .map(|&p| {
                if p.abs() >= limit {
                    clamped_now = true;
                    sinc(limit)
                } else {
                    sinc(p)
                }
            })
            .collect();
        clamped_any |= clamped_now;
        clamped_streak = if clamped_now { clamped_streak + 1 } else { 0 };

        let reduced = v.compress(&g.signed_weighted_laplacian(&weights))?;
        let Some(chol) = reduced.cholesky() else {
            return Err(not_converged(NonConvergence::Diverging, iter, &steps));
        };
        let next = chol.solve(&drive);
        let step = (&next - &theta_bar).amax();
        steps.push(step);
        theta_bar = next;

        if !step.is_finite() || clamped_streak >= DIVERGENCE_PATIENCE {
            return Err(not_converged(NonConvergence::Diverging, iter, &steps));
        }
        if step <= opts.tol {
            let residual = (model.grounded(&theta_bar, v)).norm();
            if residual <= opts.tol {
                return Ok(finish(g, v, theta_bar, residual, iter, clamped_any, coupling >= k_contraction));
            }
        }
    }

    let kind = if clamped_streak > 0 || trend_up(&steps) {
        NonConvergence::Diverging
    } else {
        NonConvergence::Oscillating
    };
    Err(not_converged(kind, opts.max_iter, &steps))
}

fn trend_up(steps: &[f64]) -> bool {
    let half = steps.len() / 2;
    match (steps.get(half), steps.last()) {
        (Some(mid), Some(last)) => last > mid,
        _ => false,
    }
}

fn not_converged(kind: NonConvergence, iterations: usize, steps: &[f64]) -> Error {
    Error::FixedPointNotConverged {
        kind,
        iterations,
        last_step: steps.last().copied().unwrap_or(f64::NAN),
    }
}

fn finish(
    g: &OrientedGraph,
    v: &GroundingProjection,
    theta_bar: DVector<f64>,
    residual: f64,
    iterations: usize,
    clamped: bool,
    above_contraction: bool,
) -> FixedPointResult {
    let theta = v.matrix() * &theta_bar;
    let phi = g.incidence_transpose_apply(&theta);
    let stable = !clamped && phi.iter().all(|p| p.abs() < FRAC_PI_2) && jacobian_positive_definite(g, v, &phi);
    FixedPointResult {
        theta_star: theta.iter().copied().collect(),
        theta_bar: theta_bar.iter().copied().collect(),
        phi_star: phi.iter().copied().collect(),
        residual,
        iterations,
        certified_stable: stable,
        certified_unique: !clamped && above_contraction,
        clamped,
    }
}

/// `VᵀB·diag(cos φ)·BᵀV ≻ 0`.
pub fn jacobian_positive_definite(g: &OrientedGraph, v: &GroundingProjection, phi: &DVector<f64>) -> bool {
    let weights: Vec<f64> = phi.iter().map(|p| p.cos()).collect();
    v.compress(&g.signed_weighted_laplacian(&weights))
        .ok()
        .and_then(|m| m.cholesky())
        .is_some()
}
