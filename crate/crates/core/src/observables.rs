//! Order parameters and synchronization diagnostics.
//!
//! The phasor quadratic form `[e^{jθ}]* L [e^{jθ}]` equals the edge-wise
//! disagreement `Σ_{(u,v)∈E} |e^{jθ_u} − e^{jθ_v}|²`, and
//! `r² = 1 − (phasor form)/N²` reproduces the edge-cosine formula for `r²`.

use std::f64::consts::PI;

use nalgebra::DVector;
use serde::Serialize;

use crate::dynamics::{center_frequencies, FrequencyVector, KuramotoModel, SimulationTrace};
use crate::error::{Error, Result};
use crate::graph::{check_len, OrientedGraph};
use crate::spectral::spectrum;

pub const DEFAULT_TAIL_FRACTION: f64 = 0.2;
pub const DEFAULT_RESIDUAL_TOL: f64 = 1e-7;
pub const MIN_TAIL_SAMPLES: usize = 10;

/// `R` below this leaves `ψ` undefined.
const DEGENERATE_R: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassicOrder {
    pub r: f64,
    /// In `(-π, π]`; 0 when `degenerate`.
    pub psi: f64,
    pub degenerate: bool,
}

/// `R·e^{jψ} = (1/N)·Σ e^{jθ_i}`.
pub fn order_parameter_classic(theta: &DVector<f64>) -> ClassicOrder {
    let n = theta.len().max(1) as f64;
    let (re, im) = theta
        .iter()
        .fold((0.0, 0.0), |(re, im), &t| (re + t.cos(), im + t.sin()));
    let (re, im) = (re / n, im / n);
    let r = re.hypot(im).min(1.0);
    if r <= DEGENERATE_R {
        return ClassicOrder {
            r,
            psi: 0.0,
            degenerate: true,
        };
    }
    let psi = im.atan2(re);
    ClassicOrder {
        r,
        psi: if psi == -PI { PI } else { psi },
        degenerate: false,
    }
}

/// `r² = (N² − 2e + 2·1ᵀcos(Bᵀθ)) / N²`.
pub fn order_parameter_general(g: &OrientedGraph, theta: &DVector<f64>) -> Result<f64> {
    check_len(g.n_vertices(), theta.len())?;
    let n = g.n_vertices() as f64;
    let e = g.n_edges() as f64;
    let cos_sum: f64 = g
        .edges()
        .iter()
        .map(|&(u, v)| (theta[v] - theta[u]).cos())
        .sum();
    Ok((n * n - 2.0 * e + 2.0 * cos_sum) / (n * n))
}

/// `Σ_{(u,v)∈E} |e^{jθ_u} − e^{jθ_v}|²`, one term per undirected edge.
pub fn disagreement(g: &OrientedGraph, theta: &DVector<f64>) -> Result<f64> {
    check_len(g.n_vertices(), theta.len())?;
    Ok(g.edges()
        .iter()
        .map(|&(u, v)| {
            let dc = theta[u].cos() - theta[v].cos();
            let ds = theta[u].sin() - theta[v].sin();
            dc * dc + ds * ds
        })
        .sum())
}

/// `cos(θ)ᵀ L cos(θ) + sin(θ)ᵀ L sin(θ)` using the dense Laplacian.
pub fn phasor_quadratic_form(g: &OrientedGraph, theta: &DVector<f64>) -> Result<f64> {
    check_len(g.n_vertices(), theta.len())?;
    let l = g.laplacian();
    let c = theta.map(f64::cos);
    let s = theta.map(f64::sin);
    Ok(c.dot(&(&l * &c)) + s.dot(&(&l * &s)))
}

/// `U₁ = 1 − r² = 4·‖sin(Bᵀθ/2)‖² / N²`.
pub fn lyapunov_u1(g: &OrientedGraph, theta: &DVector<f64>) -> Result<f64> {
    check_len(g.n_vertices(), theta.len())?;
    let n = g.n_vertices() as f64;
    let s: f64 = g
        .edges()
        .iter()
        .map(|&(u, v)| ((theta[v] - theta[u]) / 2.0).sin().powi(2))
        .sum();
    Ok(4.0 * s / (n * n))
}

/// `U₂ = θᵀ(N·I − 11ᵀ)θ = N·‖θ − mean(θ)·1‖²`.
pub fn lyapunov_u2(theta: &DVector<f64>) -> f64 {
    if theta.is_empty() {
        return 0.0;
    }
    let mean = theta.mean();
    theta.len() as f64 * theta.iter().map(|t| (t - mean).powi(2)).sum::<f64>()
}

/// Sufficient condition for `d(r²)/dt > 0`: `‖B·sin(Bᵀθ)‖₂ > (N/K)·‖Ω‖₂`
/// with `Ω` the centered frequencies. `false` means undetermined.
pub fn order_parameter_derivative_sign(
    g: &OrientedGraph,
    omega: &FrequencyVector,
    coupling: f64,
    theta: &DVector<f64>,
) -> Result<bool> {
    check_len(g.n_vertices(), omega.len())?;
    check_len(g.n_vertices(), theta.len())?;
    let (centered, _) = center_frequencies(omega);
    let lhs = g.sine_coupling(theta).norm();
    let rhs = g.n_vertices() as f64 / coupling * centered.norm2();
    Ok(lhs > rhs)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum AsymptoticRBound {
    Bound(f64),
    /// `‖Ω‖² ≥ K²λ₂`: the estimate says nothing.
    NoInformation,
}

impl AsymptoticRBound {
    pub fn value(&self) -> Option<f64> {
        match self {
            AsymptoticRBound::Bound(v) => Some(*v),
            AsymptoticRBound::NoInformation => None,
        }
    }
}

/// `r∞ ≤ √(1 − ‖Ω‖²/(K²·λ₂))` on centered frequencies.
pub fn asymptotic_r_bound(
    g: &OrientedGraph,
    omega: &FrequencyVector,
    coupling: f64,
) -> Result<AsymptoticRBound> {
    check_len(g.n_vertices(), omega.len())?;
    let lambda2 = spectrum(&g.laplacian())?.lambda2;
    let (centered, _) = center_frequencies(omega);
    Ok(asymptotic_r_bound_from(lambda2, centered.norm2(), coupling))
}

pub fn asymptotic_r_bound_from(lambda2: f64, omega_norm: f64, coupling: f64) -> AsymptoticRBound {
    let ratio = omega_norm * omega_norm / (coupling * coupling * lambda2);
    if ratio >= 1.0 || !ratio.is_finite() {
        AsymptoticRBound::NoInformation
    } else {
        AsymptoticRBound::Bound((1.0 - ratio).sqrt())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SyncVerdict {
    pub synchronized: bool,
    /// Max over the tail window of `‖d/dt(Bᵀθ)‖∞`.
    pub residual: f64,
    /// Exponential decay rate of `‖Vᵀ(θ(t) − θ(t_end))‖`; only fitted for
    /// synchronized traces with a resolvable decay.
    pub rate_estimate: Option<f64>,
}

/// Tail-window synchronization test plus decay-rate fit.
pub fn detect_sync(
    model: &KuramotoModel<'_>,
    trace: &SimulationTrace,
    tail_fraction: f64,
    residual_tol: f64,
) -> Result<SyncVerdict> {
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "tail_fraction must be in (0, 1], got {tail_fraction}"
        )));
    }
    let len = trace.len();
    let tail_len = ((len as f64) * tail_fraction).floor() as usize;
    if tail_len < MIN_TAIL_SAMPLES {
        return Err(Error::TraceTooShort {
            found: tail_len,
            needed: MIN_TAIL_SAMPLES,
        });
    }
    check_len(model.graph().n_vertices(), trace.phases(0).len())?;

    let residual = (len - tail_len..len)
        .map(|k| model.edge_velocity(&trace.phases(k)).amax())
        .fold(0.0, f64::max);
    let synchronized = residual <= residual_tol;
    let rate_estimate = if synchronized {
        fit_decay_rate(trace)
    } else {
        None
    };
    Ok(SyncVerdict {
        synchronized,
        residual,
        rate_estimate,
    })
}

/// Samples below this fraction of the peak distance are numerical floor.
const DECAY_FLOOR_RTOL: f64 = 1e-9;

/// Least-squares slope of `ln‖Vᵀ(θ_k − θ_end)‖` over the middle 60% of the
/// decay window (peak distance to first sample under the floor).
pub fn fit_decay_rate(trace: &SimulationTrace) -> Option<f64> {
    let last = trace.final_phases();
    let dist: Vec<f64> = (0..trace.len())
        .map(|k| centered_norm(&(trace.phases(k) - &last)))
        .collect();
    let peak_idx = dist
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)?;
    let peak = dist[peak_idx];
    if peak <= 0.0 {
        return None;
    }
    let floor = peak * DECAY_FLOOR_RTOL;
    let end = (peak_idx..dist.len())
        .find(|&k| dist[k] <= floor)
        .unwrap_or(dist.len() - 1);
    let span = end.saturating_sub(peak_idx);
    let lo = peak_idx + (span as f64 * 0.2).round() as usize;
    let hi = peak_idx + (span as f64 * 0.8).round() as usize;
    let points: Vec<(f64, f64)> = (lo..=hi)
        .filter(|&k| dist[k] > 0.0)
        .map(|k| (trace.times[k], dist[k].ln()))
        .collect();
    if points.len() < 3 {
        return None;
    }
    Some(-least_squares_slope(&points))
}

fn least_squares_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (sx, sy) = points
        .iter()
        .fold((0.0, 0.0), |(sx, sy), &(x, y)| (sx + x, sy + y));
    let (mx, my) = (sx / n, sy / n);
    let (sxy, sxx) = points.iter().fold((0.0, 0.0), |(sxy, sxx), &(x, y)| {
        (sxy + (x - mx) * (y - my), sxx + (x - mx) * (x - mx))
    });
    sxy / sxx
}

/// `‖x − mean(x)·1‖₂`, equal to `‖Vᵀx‖₂` for any grounding basis.
pub fn centered_norm(x: &DVector<f64>) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    let mean = x.mean();
    x.iter().map(|v| (v - mean).powi(2)).sum::<f64>().sqrt()
}

/// Per-sample observables appended to trace output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SampleObservables {
    pub r_classic: f64,
    pub psi: f64,
    pub r2: f64,
    pub u1: f64,
    pub u2: f64,
}

pub fn sample_observables(g: &OrientedGraph, theta: &DVector<f64>) -> Result<SampleObservables> {
    let classic = order_parameter_classic(theta);
    Ok(SampleObservables {
        r_classic: classic.r,
        psi: classic.psi,
        r2: order_parameter_general(g, theta)?,
        u1: lyapunov_u1(g, theta)?,
        u2: lyapunov_u2(theta),
    })
}
