//! Oriented simple graphs and the matrices built from them.
//!
//! Edges are stored in lexicographic order as `(u, v)` with `u < v`, oriented
//! from `u` to `v`. Column `j` of the incidence matrix `B` therefore
//! has `-1` in row `u` and `+1` in row `v`, so `(Bᵀθ)_j = θ_v - θ_u`.
//!
//! The Laplacian `L = BBᵀ` does not depend on that orientation; the
//! sinc-weighted Laplacian `B·diag(sinc φ)·Bᵀ` is the phase-dependent weight
//! matrix that turns the sine coupling into a linear one.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};

/// Below this magnitude `sin(x)/x` is evaluated by its Taylor series.
const SINC_SERIES_CUTOFF: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrientedGraph {
    n: usize,
    edges: Vec<(usize, usize)>,
}

impl OrientedGraph {
    /// Builds a connected simple graph on `n` vertices.
    ///
    /// Each pair is normalized to `(min, max)`; self-loops, repeated pairs and
    /// disconnected vertex sets are rejected.
    pub fn new<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        if n < 2 {
            return Err(Error::TooFewVertices(n));
        }
        let mut seen = BTreeSet::new();
        for (a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::VertexOutOfRange { u: a, v: b, n });
            }
            if a == b {
                return Err(Error::SelfLoop(a));
            }
            let e = (a.min(b), a.max(b));
            if !seen.insert(e) {
                return Err(Error::DuplicateEdge(e.0, e.1));
            }
        }
        let edges: Vec<_> = seen.into_iter().collect();
        let components = count_components(n, &edges);
        if components != 1 {
            return Err(Error::Disconnected { components });
        }
        Ok(Self { n, edges })
    }

    pub fn complete(n: usize) -> Result<Self> {
        let edges = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v)));
        Self::new(n, edges.collect::<Vec<_>>())
    }

    pub fn path(n: usize) -> Result<Self> {
        Self::new(n, (1..n).map(|v| (v - 1, v)).collect::<Vec<_>>())
    }

    pub fn cycle(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidParameter(format!(
                "cycle needs at least 3 vertices, got {n}"
            )));
        }
        let mut edges: Vec<_> = (1..n).map(|v| (v - 1, v)).collect();
        edges.push((0, n - 1));
        Self::new(n, edges)
    }

    /// Star with hub 0.
    pub fn star(n: usize) -> Result<Self> {
        Self::new(n, (1..n).map(|v| (0, v)).collect::<Vec<_>>())
    }

    /// Random connected graph: a uniformly shuffled spanning tree plus each
    /// remaining pair independently with probability `extra_edge_prob`.
    pub fn random_connected<R: Rng + ?Sized>(
        n: usize,
        extra_edge_prob: f64,
        rng: &mut R,
    ) -> Result<Self> {
        if n < 2 {
            return Err(Error::TooFewVertices(n));
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        let mut edges = BTreeSet::new();
        for i in 1..n {
            let parent = order[rng.random_range(0..i)];
            let child = order[i];
            edges.insert((parent.min(child), parent.max(child)));
        }
        for u in 0..n {
            for v in u + 1..n {
                if !edges.contains(&(u, v)) && rng.random::<f64>() < extra_edge_prob {
                    edges.insert((u, v));
                }
            }
        }
        Self::new(n, edges)
    }

    /// Parses the text edge-list format: a header line `N e`, then `e` lines
    /// `u v` with 0-based vertices. Blank lines and `#` comments are skipped.
    pub fn parse_edge_list(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter_map(|(i, raw)| {
            let content = raw.split('#').next().unwrap_or("").trim();
            (!content.is_empty()).then_some((i + 1, content))
        });
        let (header_line, header) = lines.next().ok_or(Error::Parse {
            line: 0,
            message: "missing header".into(),
        })?;
        let [n, e] = parse_pair(header_line, header)?;
        let mut edges = Vec::with_capacity(e);
        for (line, content) in lines {
            edges.push(parse_pair(line, content).map(|[u, v]| (u, v))?);
        }
        if edges.len() != e {
            return Err(Error::Parse {
                line: header_line,
                message: format!("header declares {e} edges, found {}", edges.len()),
            });
        }
        Self::new(n, edges)
    }

    pub fn to_edge_list(&self) -> String {
        let mut out = format!("{} {}\n", self.n, self.edges.len());
        for (u, v) in &self.edges {
            let _ = writeln!(out, "{u} {v}");
        }
        out
    }

    pub fn n_vertices(&self) -> usize {
        self.n
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n];
        for &(u, v) in &self.edges {
            deg[u] += 1;
            deg[v] += 1;
        }
        deg
    }

    pub fn max_degree(&self) -> usize {
        self.degrees().into_iter().max().unwrap_or(0)
    }

    pub fn is_tree(&self) -> bool {
        self.edges.len() == self.n - 1
    }

    pub fn is_complete(&self) -> bool {
        self.edges.len() == self.n * (self.n - 1) / 2
    }

    pub fn incidence_matrix(&self) -> DMatrix<f64> {
        let mut b = DMatrix::zeros(self.n, self.edges.len());
        for (j, &(u, v)) in self.edges.iter().enumerate() {
            b[(u, j)] = -1.0;
            b[(v, j)] = 1.0;
        }
        b
    }

    pub fn laplacian(&self) -> DMatrix<f64> {
        let ones = vec![1.0; self.edges.len()];
        self.signed_weighted_laplacian(&ones)
    }

    /// `B·diag(w)·Bᵀ`.
    pub fn weighted_laplacian(&self, weights: &WeightVector) -> Result<DMatrix<f64>> {
        check_len(self.edges.len(), weights.len())?;
        Ok(self.signed_weighted_laplacian(weights.as_slice()))
    }

    pub(crate) fn signed_weighted_laplacian(&self, w: &[f64]) -> DMatrix<f64> {
        let mut l = DMatrix::zeros(self.n, self.n);
        for (&(u, v), &wj) in self.edges.iter().zip(w) {
            l[(u, u)] += wj;
            l[(v, v)] += wj;
            l[(u, v)] -= wj;
            l[(v, u)] -= wj;
        }
        l
    }

    /// `φ = Bᵀθ`.
    pub fn phase_differences(&self, theta: &DVector<f64>) -> Result<PhaseDifferences> {
        check_len(self.n, theta.len())?;
        Ok(PhaseDifferences {
            phi: self.incidence_transpose_apply(theta),
        })
    }

    /// `Bᵀx` for an `N`-vector `x`. Lengths are the caller's responsibility.
    pub(crate) fn incidence_transpose_apply(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(self.edges.len(), self.edges.iter().map(|&(u, v)| x[v] - x[u]))
    }

    /// `By` for an `e`-vector `y`.
    pub(crate) fn incidence_apply(&self, y: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.n);
        for (&(u, v), &yj) in self.edges.iter().zip(y.iter()) {
            out[u] -= yj;
            out[v] += yj;
        }
        out
    }

    /// Coupling vector `B·sin(Bᵀθ)`.
    pub(crate) fn sine_coupling(&self, theta: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.n);
        for &(u, v) in &self.edges {
            let s = (theta[v] - theta[u]).sin();
            out[u] -= s;
            out[v] += s;
        }
        out
    }
}

fn parse_pair(line: usize, content: &str) -> Result<[usize; 2]> {
    let fields: Vec<_> = content.split_whitespace().collect();
    if fields.len() != 2 {
        return Err(Error::Parse {
            line,
            message: format!("expected two integers, found {:?}", content),
        });
    }
    let mut out = [0; 2];
    for (slot, field) in out.iter_mut().zip(&fields) {
        *slot = field.parse().map_err(|_| Error::Parse {
            line,
            message: format!("not a non-negative integer: {field:?}"),
        })?;
    }
    Ok(out)
}

pub(crate) fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

fn count_components(n: usize, edges: &[(usize, usize)]) -> usize {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut components = n;
    for &(u, v) in edges {
        let (ru, rv) = (find(&mut parent, u), find(&mut parent, v));
        if ru != rv {
            parent[ru] = rv;
            components -= 1;
        }
    }
    components
}

/// Strictly positive per-edge weights.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if let Some((index, &value)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| !(w.is_finite() && **w > 0.0))
        {
            return Err(Error::NonPositiveWeight { index, value });
        }
        Ok(Self(weights))
    }

    pub fn ones(len: usize) -> Self {
        Self(vec![1.0; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Edge phase differences `φ = Bᵀθ`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseDifferences {
    phi: DVector<f64>,
}

impl PhaseDifferences {
    pub fn new(phi: DVector<f64>) -> Self {
        Self { phi }
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.phi
    }

    pub fn len(&self) -> usize {
        self.phi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phi.is_empty()
    }

    pub fn max_abs(&self) -> f64 {
        self.phi.amax()
    }
}

/// `sin(x)/x`, continuous at zero.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < SINC_SERIES_CUTOFF {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

/// Phase-dependent edge weights `sinc(φ_i)`, positive on `(-π, π)`.
pub fn sinc_weights(phi: &PhaseDifferences) -> Result<WeightVector> {
    let mut w = Vec::with_capacity(phi.len());
    for (index, &value) in phi.phi.iter().enumerate() {
        if !value.is_finite() {
            return Err(Error::NonFinite(index));
        }
        if value.abs() >= std::f64::consts::PI {
            return Err(Error::PhaseOutOfRange { index, value });
        }
        w.push(sinc(value));
    }
    Ok(WeightVector(w))
}
