//! Critical-coupling bounds.
//!
//! Every bound is evaluated on the centered frequencies `Ω = ω − ⟨ω⟩·1`.
//! Necessary bounds: no phase-locked fixed point exists below them.
//! Sufficient bounds: above them a stable fixed point with `|(Bᵀθ)_i| < π/2`
//! exists (2-norm), or the Picard map is a contraction (contraction bound).

pub mod fixed_point;
pub mod threshold;

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Normal};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{center_frequencies, random_initial_phases, FrequencyVector};
use crate::error::{Error, Result};
use crate::graph::{check_len, sinc, OrientedGraph};
use crate::spectral::{grounding_projection, inf_norm, pseudoinverse, spectrum, GroundingProjection};

pub use fixed_point::{solve_fixed_point, FixedPointOptions, FixedPointResult};
pub use threshold::{empirical_threshold, OracleOptions, Probe, ThresholdResult};

/// Lipschitz constant of `sinc` on the real line.
pub const SINC_LIPSCHITZ: f64 = 0.5;

pub const DEFAULT_INFNORM_SAMPLES: usize = 1000;

fn centered(g: &OrientedGraph, omega: &FrequencyVector) -> Result<FrequencyVector> {
    check_len(g.n_vertices(), omega.len())?;
    Ok(center_frequencies(omega).0)
}

/// `N·‖Ω‖∞ / d_max`.
pub fn bound_necessary_maxdeg(g: &OrientedGraph, omega: &FrequencyVector) -> Result<f64> {
    let omega = centered(g, omega)?;
    Ok(g.n_vertices() as f64 * omega.norm_inf() / g.max_degree() as f64)
}

/// `N·‖BᵀL^#Ω‖∞ / ‖BᵀL^#B‖∞`.
///
/// The fixed-point equation pins the range-space part of `sin(Bᵀθ)` to
/// `BᵀL^#·NΩ/K`, and that part equals `BᵀL^#B·sin(Bᵀθ)`, whose infinity
/// norm is at most `‖BᵀL^#B‖∞`. On trees the projector is the identity; on
/// the complete graph this reproduces `‖BᵀΩ‖∞·N/(2(N−1))`.
pub fn bound_necessary_pinv(g: &OrientedGraph, omega: &FrequencyVector) -> Result<f64> {
    let omega = centered(g, omega)?;
    let b = g.incidence_matrix();
    let pinv = pseudoinverse(&g.laplacian())?;
    let potential = b.tr_mul(&(&pinv * omega.as_vector()));
    let projector = b.tr_mul(&pinv) * &b;
    Ok(g.n_vertices() as f64 * potential.amax() / inf_norm(&projector))
}

/// Closed form of [`bound_necessary_pinv`] on the complete graph.
pub fn bound_necessary_pinv_complete(g: &OrientedGraph, omega: &FrequencyVector) -> Result<f64> {
    if !g.is_complete() {
        return Err(Error::InvalidParameter("graph is not complete".into()));
    }
    let omega = centered(g, omega)?;
    let n = g.n_vertices() as f64;
    let diffs = g.incidence_transpose_apply(omega.as_vector());
    Ok(diffs.amax() * n / (2.0 * (n - 1.0)))
}

/// `N·‖BᵀL^#Ω‖∞`, necessary and sufficient on trees.
pub fn bound_tree_tight(g: &OrientedGraph, omega: &FrequencyVector) -> Result<f64> {
    if !g.is_tree() {
        return Err(Error::NotATree {
            vertices: g.n_vertices(),
            edges: g.n_edges(),
        });
    }
    let omega = centered(g, omega)?;
    let pinv = pseudoinverse(&g.laplacian())?;
    let flows = g.incidence_transpose_apply(&(&pinv * omega.as_vector()));
    Ok(g.n_vertices() as f64 * flows.amax())
}

/// `2·√N·‖Ω‖₂ / λ₂(L)`.
pub fn bound_sufficient_2norm(g: &OrientedGraph, omega: &FrequencyVector) -> Result<f64> {
    let omega = centered(g, omega)?;
    let s = spectrum(&g.laplacian())?;
    Ok(2.0 * (g.n_vertices() as f64).sqrt() * omega.norm2() / s.lambda2)
}

/// `(π²/4)·N·λmax(L)·‖Ω‖₂ / λ₂(L)²`.
pub fn bound_contraction(g: &OrientedGraph, omega: &FrequencyVector) -> Result<f64> {
    let omega = centered(g, omega)?;
    let s = spectrum(&g.laplacian())?;
    Ok(contraction_from(g.n_vertices(), s.lambda2, s.lambda_max, omega.norm2()))
}

pub(crate) fn contraction_from(n: usize, lambda2: f64, lambda_max: f64, omega_norm: f64) -> f64 {
    PI * PI / 4.0 * n as f64 * lambda_max * omega_norm / (lambda2 * lambda2)
}

/// `L_W^# = V·(VᵀL_WV)⁻¹·Vᵀ` for positive edge weights on a connected graph.
pub(crate) fn weighted_pseudoinverse(
    g: &OrientedGraph,
    weights: &[f64],
    v: &GroundingProjection,
) -> Option<DMatrix<f64>> {
    let lw = g.signed_weighted_laplacian(weights);
    let reduced = v.compress(&lw).ok()?;
    let inv = reduced.cholesky()?.inverse();
    Some(v.matrix() * inv * v.matrix().transpose())
}

/// Sampled estimate of `max ‖L_W^#(Bᵀθ)‖∞` over `θ ∈ (−π/4, π/4)ᴺ`.
///
/// Sample `i` draws from stream `i` of a ChaCha8 generator keyed by `seed`,
/// so the result does not depend on thread scheduling.
pub fn weighted_pinv_norm_estimate(g: &OrientedGraph, samples: usize, seed: u64) -> Result<f64> {
    if samples == 0 {
        return Err(Error::InvalidParameter("need at least one sample".into()));
    }
    let v = grounding_projection(g.n_vertices())?;
    let norms: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let theta = random_initial_phases(g.n_vertices(), &mut rng);
            let weights: Vec<f64> = g.incidence_transpose_apply(&theta).iter().map(|&p| sinc(p)).collect();
            weighted_pseudoinverse(g, &weights, &v).map_or(f64::INFINITY, |m| inf_norm(&m))
        })
        .collect();
    Ok(norms.into_iter().fold(0.0, f64::max))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InfNormEstimate {
    /// `(4/π)·N·M̂·‖Ω‖∞`; an estimate, not a certificate.
    pub k_estimate: f64,
    pub max_pinv_inf_norm: f64,
    pub samples: usize,
}

pub fn bound_sufficient_infnorm(
    g: &OrientedGraph,
    omega: &FrequencyVector,
    samples: usize,
    seed: u64,
) -> Result<InfNormEstimate> {
    let omega = centered(g, omega)?;
    let m = weighted_pinv_norm_estimate(g, samples, seed)?;
    Ok(InfNormEstimate {
        k_estimate: infnorm_from(g.n_vertices(), m, omega.norm_inf()),
        max_pinv_inf_norm: m,
        samples,
    })
}

pub(crate) fn infnorm_from(n: usize, max_pinv_inf_norm: f64, omega_inf: f64) -> f64 {
    4.0 / PI * n as f64 * max_pinv_inf_norm * omega_inf
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub k_necessary_maxdeg: f64,
    pub k_necessary_pinv: f64,
    /// Present iff the graph is a tree.
    pub k_tree_tight: Option<f64>,
    pub k_sufficient_2norm: f64,
    pub k_sufficient_infnorm_estimate: f64,
    pub k_contraction: f64,
    pub lambda2: f64,
    pub lambda_max: f64,
    pub max_degree: usize,
    pub omega_inf: f64,
    pub omega_2: f64,
    pub infnorm_samples: usize,
}

impl BoundReport {
    pub fn max_necessary(&self) -> f64 {
        self.k_necessary_maxdeg.max(self.k_necessary_pinv)
    }
}

/// All bounds for one `(graph, ω)` instance.
pub fn bound_report(
    g: &OrientedGraph,
    omega: &FrequencyVector,
    infnorm_samples: usize,
    seed: u64,
) -> Result<BoundReport> {
    let max_pinv = weighted_pinv_norm_estimate(g, infnorm_samples, seed)?;
    bound_report_with_pinv_norm(g, omega, max_pinv, infnorm_samples)
}

/// As [`bound_report`], reusing a precomputed `M̂` (it depends on the graph only).
pub fn bound_report_with_pinv_norm(
    g: &OrientedGraph,
    omega: &FrequencyVector,
    max_pinv_inf_norm: f64,
    infnorm_samples: usize,
) -> Result<BoundReport> {
    let omega_c = centered(g, omega)?;
    let s = spectrum(&g.laplacian())?;
    let n = g.n_vertices();
    Ok(BoundReport {
        k_necessary_maxdeg: bound_necessary_maxdeg(g, &omega_c)?,
        k_necessary_pinv: bound_necessary_pinv(g, &omega_c)?,
        k_tree_tight: if g.is_tree() {
            Some(bound_tree_tight(g, &omega_c)?)
        } else {
            None
        },
        k_sufficient_2norm: 2.0 * (n as f64).sqrt() * omega_c.norm2() / s.lambda2,
        k_sufficient_infnorm_estimate: infnorm_from(n, max_pinv_inf_norm, omega_c.norm_inf()),
        k_contraction: contraction_from(n, s.lambda2, s.lambda_max, omega_c.norm2()),
        lambda2: s.lambda2,
        lambda_max: s.lambda_max,
        max_degree: g.max_degree(),
        omega_inf: omega_c.norm_inf(),
        omega_2: omega_c.norm2(),
        infnorm_samples,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RInfinityBracket {
    pub lower: f64,
    pub upper: f64,
}

/// Order-parameter bracket at the locking threshold for a fixed point in
/// `(−π/4, π/4)ᴺ`: `(√(16 − π²)/4, √3/2)`.
pub fn r_infinity_bracket() -> RInfinityBracket {
    RInfinityBracket {
        lower: (16.0 - PI * PI).sqrt() / 4.0,
        upper: 3f64.sqrt() / 2.0,
    }
}

/// Rate guaranteed for identical frequencies: `(2K/(πN))·λ₂`.
pub fn sync_rate_bound(coupling: f64, n: usize, lambda2: f64) -> f64 {
    2.0 * coupling / (PI * n as f64) * lambda2
}

/// Draws `N(0, σ²)` frequencies and centers them.
pub fn centered_normal_frequencies<R: Rng + ?Sized>(n: usize, sigma: f64, rng: &mut R) -> Result<FrequencyVector> {
    let normal = Normal::new(0.0, sigma)
        .map_err(|e| Error::InvalidParameter(format!("sigma = {sigma}: {e}")))?;
    let raw = FrequencyVector::from_vector(DVector::from_fn(n, |_, _| normal.sample(rng)))?;
    Ok(center_frequencies(&raw).0)
}
