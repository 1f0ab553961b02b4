#![allow(dead_code)]

use kuramoto_core::coupling::centered_normal_frequencies;
use kuramoto_core::{FrequencyVector, OrientedGraph};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Connected graph on `n` vertices with a random edge density.
pub fn random_graph(rng: &mut ChaCha8Rng, n: usize) -> OrientedGraph {
    let p = rng.random_range(0.0..0.6);
    OrientedGraph::random_connected(n, p, rng).unwrap()
}

pub fn random_omega(rng: &mut ChaCha8Rng, n: usize, sigma: f64) -> FrequencyVector {
    centered_normal_frequencies(n, sigma, rng).unwrap()
}

pub fn uniform_vector(rng: &mut ChaCha8Rng, n: usize, half_width: f64) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.random_range(-half_width..half_width))
}

/// Orthogonal `Q` from the QR factorization of a random square matrix.
pub fn random_orthogonal(rng: &mut ChaCha8Rng, m: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(m, m, |_, _| rng.random_range(-1.0..1.0));
    a.qr().q()
}

pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).amax()
}

pub fn centered(x: &DVector<f64>) -> DVector<f64> {
    x.add_scalar(-x.mean())
}
