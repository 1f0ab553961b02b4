//! Kuramoto dynamics on a graph, in full and grounded coordinates.
//!
//! Full system: `θ̇ = ω − (K/N)·B·sin(Bᵀθ)`.
//! Grounded system: `θ̄̇ = ω̄ − (K/N)·VᵀB·sin(BᵀVθ̄)` with `θ̄ = Vᵀθ`, `ω̄ = Vᵀω`.
//! Small-angle (consensus) limit: `θ̇ = ω − (K/N)·L·θ`.
//!
//! Integration is fixed-step classical RK4. Phases are kept unwrapped.

use std::f64::consts::{FRAC_PI_4, PI};

use nalgebra::DVector;
use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::{check_len, OrientedGraph};
use crate::spectral::{grounding_projection, GroundingProjection};

pub const DEFAULT_STEP: f64 = 0.01;

/// Natural frequencies `ω`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyVector(DVector<f64>);

impl FrequencyVector {
    pub fn new(omega: Vec<f64>) -> Result<Self> {
        Self::from_vector(DVector::from_vec(omega))
    }

    pub fn from_vector(omega: DVector<f64>) -> Result<Self> {
        if let Some(i) = omega.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self(omega))
    }

    pub fn zeros(n: usize) -> Self {
        Self(DVector::zeros(n))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn mean(&self) -> f64 {
        if self.0.is_empty() {
            0.0
        } else {
            self.0.mean()
        }
    }

    pub fn is_centered(&self) -> bool {
        self.mean().abs() <= 1e-12
    }

    pub fn norm2(&self) -> f64 {
        self.0.norm()
    }

    pub fn norm_inf(&self) -> f64 {
        self.0.amax()
    }

    pub fn is_identical(&self) -> bool {
        let m = self.mean();
        self.0.iter().all(|&w| (w - m).abs() <= 1e-12 * m.abs().max(1.0))
    }
}

/// Splits `ω` into the rotating-frame frequencies `Ω = ω − ⟨ω⟩·1` and `⟨ω⟩`.
pub fn center_frequencies(omega: &FrequencyVector) -> (FrequencyVector, f64) {
    let mean = omega.mean();
    let centered = omega.0.map(|w| w - mean);
    // Second pass removes the rounding residue of the first subtraction.
    let residue = if centered.is_empty() { 0.0 } else { centered.mean() };
    (FrequencyVector(centered.map(|w| w - residue)), mean)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseState {
    pub theta: DVector<f64>,
    pub time: f64,
}

impl PhaseState {
    pub fn new(theta: DVector<f64>, time: f64) -> Self {
        Self { theta, time }
    }

    pub fn at_zero(theta: DVector<f64>) -> Self {
        Self { theta, time: 0.0 }
    }

    /// Torus representatives in `(-π, π]`.
    pub fn wrapped(&self) -> DVector<f64> {
        self.theta.map(wrap_phase)
    }
}

/// Maps an angle into `(-π, π]`.
pub fn wrap_phase(x: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let y = (x + PI).rem_euclid(two_pi) - PI;
    if y == -PI {
        PI
    } else {
        y
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationConfig {
    pub coupling: f64,
    pub step: f64,
    pub t_end: f64,
    pub record_every: usize,
}

impl SimulationConfig {
    pub fn new(coupling: f64, step: f64, t_end: f64, record_every: usize) -> Result<Self> {
        let cfg = Self {
            coupling,
            step,
            t_end,
            record_every,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(self.coupling.is_finite() && self.coupling > 0.0) {
            return bad(format!("coupling must be positive, got {}", self.coupling));
        }
        if !(self.step.is_finite() && self.step > 0.0) {
            return bad(format!("step must be positive, got {}", self.step));
        }
        if !(self.t_end.is_finite() && self.t_end >= self.step) {
            return bad(format!(
                "t_end must be at least one step, got t_end = {} with h = {}",
                self.t_end, self.step
            ));
        }
        if self.record_every == 0 {
            return bad("record_every must be positive".into());
        }
        Ok(())
    }

    pub fn n_steps(&self) -> usize {
        ((self.t_end / self.step) - 1e-9).ceil().max(1.0) as usize
    }
}

/// Several multiples of the slowest guaranteed time constant `πN/(2Kλ₂)`.
pub fn default_t_end(coupling: f64, n: usize, lambda2: f64) -> f64 {
    50.0 / coupling * n as f64 / lambda2
}

/// Uniform draw in `(-π/4, π/4)ᴺ`.
pub fn random_initial_phases<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.random_range(-FRAC_PI_4..FRAC_PI_4))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coordinates {
    Full,
    Grounded,
}

#[derive(Debug, Clone)]
pub struct SimulationTrace {
    pub times: Vec<f64>,
    /// States in the integration coordinates (`N` or `N − 1` entries).
    pub states: Vec<PhaseState>,
    grounding: Option<GroundingProjection>,
}

impl SimulationTrace {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn coordinates(&self) -> Coordinates {
        if self.grounding.is_some() {
            Coordinates::Grounded
        } else {
            Coordinates::Full
        }
    }

    /// Full phases at sample `k`; grounded samples are lifted to their
    /// mean-zero representative.
    pub fn phases(&self, k: usize) -> DVector<f64> {
        match &self.grounding {
            None => self.states[k].theta.clone(),
            Some(v) => v.matrix() * &self.states[k].theta,
        }
    }

    pub fn final_phases(&self) -> DVector<f64> {
        self.phases(self.len() - 1)
    }
}

/// Borrowed problem data with dimensions checked once.
#[derive(Debug, Clone, Copy)]
pub struct KuramotoModel<'a> {
    graph: &'a OrientedGraph,
    omega: &'a FrequencyVector,
    coupling: f64,
}

impl<'a> KuramotoModel<'a> {
    pub fn new(graph: &'a OrientedGraph, omega: &'a FrequencyVector, coupling: f64) -> Result<Self> {
        check_len(graph.n_vertices(), omega.len())?;
        Ok(Self {
            graph,
            omega,
            coupling,
        })
    }

    pub fn graph(&self) -> &'a OrientedGraph {
        self.graph
    }

    pub fn omega(&self) -> &'a FrequencyVector {
        self.omega
    }

    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    fn gain(&self) -> f64 {
        self.coupling / self.graph.n_vertices() as f64
    }

    pub(crate) fn full(&self, theta: &DVector<f64>) -> DVector<f64> {
        self.omega.as_vector() - self.graph.sine_coupling(theta) * self.gain()
    }

    pub(crate) fn grounded(&self, theta_bar: &DVector<f64>, v: &GroundingProjection) -> DVector<f64> {
        let theta = v.matrix() * theta_bar;
        let drive = self.omega.as_vector() - self.graph.sine_coupling(&theta) * self.gain();
        v.matrix().tr_mul(&drive)
    }

    /// `d/dt (Bᵀθ)` at full phases `θ`.
    pub fn edge_velocity(&self, theta: &DVector<f64>) -> DVector<f64> {
        self.graph.incidence_transpose_apply(&self.full(theta))
    }
}

pub fn rhs_full(
    g: &OrientedGraph,
    omega: &FrequencyVector,
    coupling: f64,
    theta: &DVector<f64>,
) -> Result<DVector<f64>> {
    let model = KuramotoModel::new(g, omega, coupling)?;
    check_len(g.n_vertices(), theta.len())?;
    Ok(model.full(theta))
}

pub fn rhs_grounded(
    g: &OrientedGraph,
    omega: &FrequencyVector,
    coupling: f64,
    theta_bar: &DVector<f64>,
    v: &GroundingProjection,
) -> Result<DVector<f64>> {
    let model = KuramotoModel::new(g, omega, coupling)?;
    check_len(g.n_vertices(), v.n())?;
    check_len(g.n_vertices() - 1, theta_bar.len())?;
    Ok(model.grounded(theta_bar, v))
}

pub fn rhs_linearized(
    g: &OrientedGraph,
    omega: &FrequencyVector,
    coupling: f64,
    theta: &DVector<f64>,
) -> Result<DVector<f64>> {
    check_len(g.n_vertices(), omega.len())?;
    check_len(g.n_vertices(), theta.len())?;
    let gain = coupling / g.n_vertices() as f64;
    Ok(omega.as_vector() - g.incidence_apply(&g.incidence_transpose_apply(theta)) * gain)
}

fn rk4_step<F>(f: &F, x: &DVector<f64>, h: f64) -> DVector<f64>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    let k1 = f(x);
    let k2 = f(&(x + &k1 * (0.5 * h)));
    let k3 = f(&(x + &k2 * (0.5 * h)));
    let k4 = f(&(x + &k3 * h));
    x + (k1 + (k2 + k3) * 2.0 + k4) * (h / 6.0)
}

/// Integrates from `theta0` (always full `N` phases) for `cfg.t_end`.
///
/// Samples are taken every `record_every` steps, always including the first
/// and last. In grounded mode the stored states are `θ̄ = Vᵀθ`.
pub fn integrate(
    g: &OrientedGraph,
    omega: &FrequencyVector,
    cfg: &SimulationConfig,
    theta0: &PhaseState,
    coords: Coordinates,
) -> Result<SimulationTrace> {
    cfg.validate()?;
    let model = KuramotoModel::new(g, omega, cfg.coupling)?;
    check_len(g.n_vertices(), theta0.theta.len())?;
    if let Some(i) = theta0.theta.iter().position(|x| !x.is_finite()) {
        return Err(Error::NonFinite(i));
    }

    let grounding = match coords {
        Coordinates::Full => None,
        Coordinates::Grounded => Some(grounding_projection(g.n_vertices())?),
    };
    let rhs = |x: &DVector<f64>| match &grounding {
        None => model.full(x),
        Some(v) => model.grounded(x, v),
    };

    let mut x = match &grounding {
        None => theta0.theta.clone(),
        Some(v) => v.ground(&theta0.theta)?,
    };
    let n_steps = cfg.n_steps();
    let capacity = n_steps / cfg.record_every + 2;
    let mut times = Vec::with_capacity(capacity);
    let mut states = Vec::with_capacity(capacity);
    times.push(theta0.time);
    states.push(PhaseState::new(x.clone(), theta0.time));

    for step in 1..=n_steps {
        x = rk4_step(&rhs, &x, cfg.step);
        let t = theta0.time + step as f64 * cfg.step;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::BlowUp { step, time: t });
        }
        if step % cfg.record_every == 0 || step == n_steps {
            times.push(t);
            states.push(PhaseState::new(x.clone(), t));
        }
    }

    Ok(SimulationTrace {
        times,
        states,
        grounding,
    })
}
