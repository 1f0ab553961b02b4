//! Empirical locking threshold by bisection on a synchronization oracle.
//!
//! The oracle at coupling `K` first runs the Picard solver from `θ̄ = 0` and
//! accepts a certified-stable fixed point. Otherwise it integrates the full
//! system from `θ = 0` and accepts if the tail of the trace is phase-locked.
//! Both acceptances exhibit a stable locked state, so a positive probe is
//! never below the true threshold.

use nalgebra::DVector;
use rayon::prelude::*;
use serde::Serialize;

use super::fixed_point::{solve_with_projection, FixedPointOptions};
use super::contraction_from;
use crate::dynamics::{center_frequencies, default_t_end, integrate, Coordinates, FrequencyVector, KuramotoModel, PhaseState, SimulationConfig, DEFAULT_STEP};
use crate::error::{Error, Result};
use crate::graph::{check_len, OrientedGraph};
use crate::observables::{detect_sync, DEFAULT_RESIDUAL_TOL, DEFAULT_TAIL_FRACTION};
use crate::spectral::{grounding_projection, spectrum, GroundingProjection, LaplacianSpectrum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleMethod {
    Picard,
    Simulation,
    /// Neither route found a locked state.
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Probe {
    pub k: f64,
    pub synchronized: bool,
    pub method: OracleMethod,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleOptions {
    pub fixed_point: FixedPointOptions,
    /// Fall back to simulation when Picard does not certify.
    pub simulate: bool,
    /// Simulation horizon as a multiple of the default `50·N/(K·λ₂)`.
    pub horizon_factor: f64,
    pub residual_tol: f64,
    /// Coarse grid evaluated before bisection, used for the monotonicity check.
    pub grid_points: usize,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            fixed_point: FixedPointOptions {
                tol: 1e-10,
                max_iter: 20_000,
            },
            simulate: true,
            horizon_factor: 4.0,
            residual_tol: DEFAULT_RESIDUAL_TOL,
            grid_points: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdResult {
    /// Smallest coupling the oracle accepted.
    pub k_hat: f64,
    /// Largest coupling the oracle rejected.
    pub k_below: f64,
    /// Every probe in evaluation order (coarse grid first).
    pub probes: Vec<Probe>,
}

struct OracleContext<'a> {
    g: &'a OrientedGraph,
    omega: FrequencyVector,
    v: GroundingProjection,
    spectrum: LaplacianSpectrum,
    k_contraction: f64,
    opts: OracleOptions,
}

impl OracleContext<'_> {
    fn probe(&self, k: f64) -> Probe {
        let verdict = |synchronized, method| Probe { k, synchronized, method };
        if k <= 0.0 {
            return verdict(false, OracleMethod::None);
        }
        let picard = solve_with_projection(
            self.g,
            &self.omega,
            k,
            None,
            &self.opts.fixed_point,
            &self.v,
            self.k_contraction,
        );
        if matches!(picard, Ok(ref r) if r.certified_stable) {
            return verdict(true, OracleMethod::Picard);
        }
        if self.opts.simulate && self.simulate(k) {
            return verdict(true, OracleMethod::Simulation);
        }
        verdict(false, OracleMethod::None)
    }

    fn simulate(&self, k: f64) -> bool {
        let n = self.g.n_vertices();
        let stiffness = k / n as f64 * self.spectrum.lambda_max;
        let step = DEFAULT_STEP.min(0.2 / stiffness);
        let t_end = self.opts.horizon_factor * default_t_end(k, n, self.spectrum.lambda2);
        let n_steps = (t_end / step).ceil() as usize;
        let Ok(cfg) = SimulationConfig::new(k, step, t_end, (n_steps / 1000).max(1)) else {
            return false;
        };
        let start = PhaseState::at_zero(DVector::zeros(n));
        let Ok(trace) = integrate(self.g, &self.omega, &cfg, &start, Coordinates::Full) else {
            return false;
        };
        let Ok(model) = KuramotoModel::new(self.g, &self.omega, k) else {
            return false;
        };
        detect_sync(&model, &trace, DEFAULT_TAIL_FRACTION, self.opts.residual_tol)
            .map(|v| v.synchronized)
            .unwrap_or(false)
    }
}

fn context<'a>(g: &'a OrientedGraph, omega: &FrequencyVector, opts: &OracleOptions) -> Result<OracleContext<'a>> {
    check_len(g.n_vertices(), omega.len())?;
    let (centered, _) = center_frequencies(omega);
    let s = spectrum(&g.laplacian())?;
    Ok(OracleContext {
        g,
        k_contraction: contraction_from(g.n_vertices(), s.lambda2, s.lambda_max, centered.norm2()),
        omega: centered,
        v: grounding_projection(g.n_vertices())?,
        spectrum: s,
        opts: *opts,
    })
}

/// Single oracle evaluation.
pub fn sync_oracle(g: &OrientedGraph, omega: &FrequencyVector, k: f64, opts: &OracleOptions) -> Result<Probe> {
    Ok(context(g, omega, opts)?.probe(k))
}

pub fn empirical_threshold(
    g: &OrientedGraph,
    omega: &FrequencyVector,
    k_lo: f64,
    k_hi: f64,
    tol_k: f64,
) -> Result<ThresholdResult> {
    empirical_threshold_with(g, omega, k_lo, k_hi, tol_k, &OracleOptions::default())
}

/// Bisection for the smallest synchronizing coupling in `[k_lo, k_hi]`.
///
/// A coarse grid is probed concurrently first; any accepted probe followed by
/// a rejected one at larger `K` is reported as [`Error::NonMonotoneOracle`].
/// If the oracle already accepts `k_lo`, `k_lo` is returned.
pub fn empirical_threshold_with(
    g: &OrientedGraph,
    omega: &FrequencyVector,
    k_lo: f64,
    k_hi: f64,
    tol_k: f64,
    opts: &OracleOptions,
) -> Result<ThresholdResult> {
    if !(k_lo.is_finite() && k_hi.is_finite() && k_lo >= 0.0 && k_lo < k_hi) {
        return Err(Error::BracketInvalid(format!("need 0 <= k_lo < k_hi, got [{k_lo}, {k_hi}]")));
    }
    if tol_k.is_nan() || tol_k <= 0.0 {
        return Err(Error::InvalidParameter(format!("tol_k must be positive, got {tol_k}")));
    }
    let ctx = context(g, omega, opts)?;
    if ctx.omega.norm_inf() == 0.0 {
        // Identical frequencies lock for every K > 0.
        return Ok(ThresholdResult {
            k_hat: 0.0,
            k_below: 0.0,
            probes: Vec::new(),
        });
    }

    let points = opts.grid_points.max(2);
    let grid: Vec<f64> = (0..points)
        .map(|i| k_lo + (k_hi - k_lo) * i as f64 / (points - 1) as f64)
        .collect();
    let mut probes: Vec<Probe> = grid.par_iter().map(|&k| ctx.probe(k)).collect();

    if let Some(first_ok) = probes.iter().position(|p| p.synchronized) {
        if probes[first_ok..].iter().any(|p| !p.synchronized) {
            return Err(Error::NonMonotoneOracle { probes });
        }
    }
    if !probes[points - 1].synchronized {
        return Err(Error::BracketInvalid(format!("oracle rejects k_hi = {k_hi}")));
    }
    if probes[0].synchronized {
        return Ok(ThresholdResult {
            k_hat: k_lo,
            k_below: k_lo,
            probes,
        });
    }

    let flip = probes.iter().position(|p| p.synchronized).unwrap();
    let (mut lo, mut hi) = (grid[flip - 1], grid[flip]);
    while hi - lo > tol_k {
        let mid = 0.5 * (lo + hi);
        let p = ctx.probe(mid);
        probes.push(p);
        if p.synchronized {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(ThresholdResult {
        k_hat: hi,
        k_below: lo,
        probes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_oscillator_threshold() {
        let g = OrientedGraph::complete(2).unwrap();
        let w = FrequencyVector::new(vec![1.0, -1.0]).unwrap();
        let r = empirical_threshold(&g, &w, 1.0, 4.0, 1e-3).unwrap();
        assert!((r.k_hat - 2.0).abs() <= 1e-2, "k_hat = {}", r.k_hat);
        assert!(r.k_hat >= 2.0);
        assert!(r.k_hat - r.k_below <= 1e-3);
    }

    #[test]
    fn zero_frequencies_threshold_is_zero() {
        let g = OrientedGraph::cycle(4).unwrap();
        let r = empirical_threshold(&g, &FrequencyVector::zeros(4), 0.5, 2.0, 1e-3).unwrap();
        assert_eq!(r.k_hat, 0.0);
    }

    #[test]
    fn invalid_bracket() {
        let g = OrientedGraph::complete(2).unwrap();
        let w = FrequencyVector::new(vec![1.0, -1.0]).unwrap();
        assert!(matches!(empirical_threshold(&g, &w, 3.0, 1.0, 1e-3), Err(Error::BracketInvalid(_))));
        assert!(matches!(empirical_threshold(&g, &w, 0.5, 1.5, 1e-3), Err(Error::BracketInvalid(_))));
    }

    #[test]
    fn oracle_methods() {
        let g = OrientedGraph::complete(2).unwrap();
        let w = FrequencyVector::new(vec![1.0, -1.0]).unwrap();
        let opts = OracleOptions::default();
        assert_eq!(sync_oracle(&g, &w, 4.0, &opts).unwrap().method, OracleMethod::Picard);
        let below = sync_oracle(&g, &w, 1.9, &opts).unwrap();
        assert!(!below.synchronized);
        assert_eq!(below.method, OracleMethod::None);
    }
}
