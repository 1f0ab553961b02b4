//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails. Pass criterion numbers as arguments to
//! run a subset.

mod common;

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use common::*;
use kuramoto_core::coupling::{
    bound_contraction, bound_report, bound_sufficient_2norm, centered_normal_frequencies,
    empirical_threshold, weighted_pinv_norm_estimate,
};
use kuramoto_core::dynamics::{default_t_end, random_initial_phases};
use kuramoto_core::graph::sinc_weights;
use kuramoto_core::observables::{
    asymptotic_r_bound, detect_sync, lyapunov_u1, lyapunov_u2, order_parameter_classic,
    order_parameter_derivative_sign, order_parameter_general, AsymptoticRBound, DEFAULT_RESIDUAL_TOL,
    DEFAULT_TAIL_FRACTION,
};
use kuramoto_core::spectral::{grounding_projection, spectrum};
use kuramoto_core::*;
use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(index);
    r
}

fn run(g: &OrientedGraph, omega: &FrequencyVector, k: f64, theta0: DVector<f64>, t_end: f64, every: usize) -> SimulationTrace {
    let cfg = SimulationConfig::new(k, 0.01, t_end, every).unwrap();
    integrate(g, omega, &cfg, &PhaseState::at_zero(theta0), Coordinates::Full).unwrap()
}

fn lambda2(g: &OrientedGraph) -> f64 {
    spectrum(&g.laplacian()).unwrap().lambda2
}

fn two_oscillator_oracle() -> Outcome {
    let start = Instant::now();
    let g = OrientedGraph::complete(2).unwrap();
    let omega = FrequencyVector::new(vec![1.0, -1.0]).unwrap();
    let k_hat = empirical_threshold(&g, &omega, 1.0, 4.0, 1e-3).unwrap().k_hat;
    let fp = solve_fixed_point(&g, &omega, 4.0, None, &FixedPointOptions::default()).unwrap();
    let phi_err = (fp.phi_star[0].abs() - PI / 6.0).abs();
    let trace = run(&g, &omega, 1.9, DVector::zeros(2), default_t_end(1.9, 2, 2.0), 1);
    let model = KuramotoModel::new(&g, &omega, 1.9).unwrap();
    let running = !detect_sync(&model, &trace, DEFAULT_TAIL_FRACTION, DEFAULT_RESIDUAL_TOL)
        .unwrap()
        .synchronized;
    let elapsed = start.elapsed();
    let pass = (k_hat / 2.0 - 1.0).abs() <= 0.02 && phi_err <= 1e-8 && running && elapsed < Duration::from_secs(5);
    outcome(
        pass,
        format!("k_hat={k_hat:.6}, |φ*|−π/6={phi_err:.2e}, running at K=1.9: {running}, {elapsed:.2?}"),
    )
}

fn complete_graph_rate() -> Outcome {
    let start = Instant::now();
    let k = 1.0;
    let floor = 0.95 * 2.0 * k / PI;
    let mut worst = f64::INFINITY;
    let mut failures = 0;
    for n in [3, 10, 50] {
        let g = OrientedGraph::complete(n).unwrap();
        let omega = FrequencyVector::zeros(n);
        let model = KuramotoModel::new(&g, &omega, k).unwrap();
        for seed in 0..10 {
            let theta0 = random_initial_phases(n, &mut rng(seed));
            let trace = run(&g, &omega, k, theta0, default_t_end(k, n, n as f64), 10);
            let v = detect_sync(&model, &trace, DEFAULT_TAIL_FRACTION, DEFAULT_RESIDUAL_TOL).unwrap();
            let rate = v.rate_estimate.unwrap_or(f64::NAN);
            worst = worst.min(rate);
            if !(v.synchronized && rate >= floor) {
                failures += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    outcome(
        failures == 0 && elapsed < Duration::from_secs(30),
        format!("min rate {worst:.4} vs floor {floor:.4}, {failures} failing runs, {elapsed:.2?}"),
    )
}

fn lyapunov_monotonicity() -> Outcome {
    let violations: usize = (0..20u64)
        .into_par_iter()
        .map(|i| {
            let mut r = stream(3, i);
            let n = 2 + (i as usize % 19);
            let g = random_graph(&mut r, n);
            let omega = FrequencyVector::zeros(n);
            let theta0 = random_initial_phases(n, &mut r);
            let trace = run(&g, &omega, 1.0, theta0, default_t_end(1.0, n, lambda2(&g)), 1);
            let u1: Vec<f64> = trace.states.iter().map(|s| lyapunov_u1(&g, &s.theta).unwrap()).collect();
            let u2: Vec<f64> = trace.states.iter().map(|s| lyapunov_u2(&s.theta)).collect();
            let bad = |u: &[f64]| u.windows(2).filter(|w| w[1] > w[0] + 1e-9).count();
            bad(&u1) + bad(&u2)
        })
        .sum();
    outcome(violations == 0, format!("{violations} violations over 20 graphs"))
}

fn order_parameter_identity() -> Outcome {
    let mut worst: f64 = 0.0;
    for n in 2..=10 {
        let g = OrientedGraph::complete(n).unwrap();
        let mut r = stream(4, n as u64);
        for _ in 0..1000 {
            let theta = uniform_vector(&mut r, n, PI);
            let big_r = order_parameter_classic(&theta).r;
            worst = worst.max((order_parameter_general(&g, &theta).unwrap() - big_r * big_r).abs());
        }
    }
    outcome(worst <= 1e-12, format!("max |r² − R²| = {worst:.2e}"))
}

struct SweepRow {
    r_final: f64,
    bound: f64,
    bound_lambda_max: f64,
}

fn asymptotic_bound() -> Outcome {
    let mut rows = Vec::new();
    let mut instance = 0u64;
    while rows.len() < 30 {
        let mut r = stream(5, instance);
        instance += 1;
        let n = 5 + (instance as usize % 16);
        let g = random_graph(&mut r, n);
        let omega = random_omega(&mut r, n, 0.5);
        let s = spectrum(&g.laplacian()).unwrap();
        let k_suff = bound_sufficient_2norm(&g, &omega).unwrap();
        for factor in [0.6, 1.0, 1.5, 2.5] {
            let k = factor * k_suff;
            let theta0 = random_initial_phases(n, &mut r);
            let trace = run(&g, &omega, k, theta0, default_t_end(k, n, s.lambda2), 10);
            let model = KuramotoModel::new(&g, &omega, k).unwrap();
            let verdict = detect_sync(&model, &trace, DEFAULT_TAIL_FRACTION, DEFAULT_RESIDUAL_TOL).unwrap();
            if !verdict.synchronized || rows.len() == 30 {
                continue;
            }
            let value = |b: AsymptoticRBound| b.value().unwrap_or(1.0);
            let norm = omega.norm2();
            rows.push(SweepRow {
                r_final: order_parameter_general(&g, &trace.final_phases()).unwrap().sqrt(),
                bound: value(asymptotic_r_bound(&g, &omega, k).unwrap()),
                bound_lambda_max: value(kuramoto_core::observables::asymptotic_r_bound_from(
                    s.lambda_max,
                    norm,
                    k,
                )),
            });
        }
    }
    let violations = rows.iter().filter(|row| row.r_final > row.bound + 1e-6).count();
    let excess = rows.iter().map(|row| row.r_final - row.bound).fold(f64::NEG_INFINITY, f64::max);
    let lmax_violations = rows.iter().filter(|row| row.r_final > row.bound_lambda_max + 1e-6).count();
    outcome(
        violations == 0,
        format!(
            "{violations}/30 rows exceed the λ₂ bound (max excess {excess:.3e}); \
             {lmax_violations}/30 exceed the same bound with λmax"
        ),
    )
}

fn bound_sandwich() -> Outcome {
    let start = Instant::now();
    let results: Vec<(bool, String)> = (0..25u64)
        .into_par_iter()
        .map(|i| {
            let mut r = stream(6, i);
            let n = 3 + (i as usize % 10);
            let g = random_graph(&mut r, n);
            let omega = random_omega(&mut r, n, 0.5);
            let report = bound_report(&g, &omega, 1, 0).unwrap();
            let nec = report.max_necessary();
            let k_hi = 1.5 * report.k_contraction.max(nec);
            let k_hat = match empirical_threshold(&g, &omega, 0.5 * nec, k_hi, 1e-3 * nec) {
                Ok(t) => t.k_hat,
                Err(e) => return (false, format!("graph {i}: threshold search failed: {e}")),
            };
            let chain = [nec, k_hat, report.k_sufficient_2norm, report.k_contraction];
            let ok = chain.windows(2).all(|w| w[0] <= w[1]);
            (
                ok,
                format!(
                    "graph {i} (N={n}, e={}): necessary {:.4} ≤ k_hat {:.4} ≤ 2-norm {:.4} ≤ contraction {:.4}",
                    g.n_edges(),
                    chain[0],
                    chain[1],
                    chain[2],
                    chain[3]
                ),
            )
        })
        .collect();
    let elapsed = start.elapsed();
    let failures: Vec<&String> = results.iter().filter(|(ok, _)| !ok).map(|(_, d)| d).collect();
    let mut detail = format!("{} violations over 25 graphs, {elapsed:.2?}", failures.len());
    for f in &failures {
        detail.push_str(&format!("\n      {f}"));
    }
    outcome(failures.is_empty() && elapsed < Duration::from_secs(300), detail)
}

fn uniqueness_above_contraction() -> Outcome {
    let mut problems = Vec::new();
    let opts = FixedPointOptions {
        tol: 1e-12,
        max_iter: 5000,
    };
    for i in 0..10u64 {
        let mut r = stream(7, i);
        let n = 3 + (i as usize % 8);
        let g = random_graph(&mut r, n);
        let omega = random_omega(&mut r, n, 0.5);
        let k = 1.01 * bound_contraction(&g, &omega).unwrap();
        let v = grounding_projection(n).unwrap();
        let reference = solve_fixed_point(&g, &omega, k, None, &opts).unwrap();
        if !reference.certified_stable {
            problems.push(format!("instance {i}: stability certificate missing"));
        }
        let star = DVector::from_vec(reference.theta_star.clone());
        let spread = (0..20)
            .map(|_| {
                let start = v.ground(&random_initial_phases(n, &mut r)).unwrap();
                let fp = solve_fixed_point(&g, &omega, k, Some(&start), &opts).unwrap();
                (DVector::from_vec(fp.theta_star) - &star).amax()
            })
            .fold(0.0, f64::max);
        if spread > 1e-8 {
            problems.push(format!("instance {i}: multistart spread {spread:.2e}"));
        }

        let phi = g.phase_differences(&star).unwrap();
        let cos_w: Vec<f64> = phi.as_vector().iter().map(|p| p.cos()).collect();
        let lc = spectrum(&g.weighted_laplacian(&WeightVector::new(cos_w).unwrap()).unwrap())
            .unwrap()
            .lambda2;
        let radius = 2.0 * n as f64 * omega.norm2() / (k * lc);
        let trace = run(&g, &omega, k, random_initial_phases(n, &mut r), default_t_end(k, n, lambda2(&g)), 1);
        for j in 0..trace.len() {
            let theta = trace.phases(j);
            if v.ground(&(&theta - &star)).unwrap().norm() <= radius {
                break;
            }
            if !order_parameter_derivative_sign(&g, &omega, k, &theta).unwrap() {
                problems.push(format!("instance {i}: growth flag false at t={:.2}", trace.times[j]));
                break;
            }
        }
    }
    let detail = if problems.is_empty() {
        "10 instances: multistarts agree, certificates hold, growth flag holds".to_string()
    } else {
        problems.join("; ")
    };
    outcome(problems.is_empty(), detail)
}

fn weighted_fiedler_lower_bound() -> Outcome {
    let mut worst = f64::INFINITY;
    let mut violations = 0;
    for i in 0..500u64 {
        let mut r = stream(8, i);
        let n = 2 + (i as usize % 24);
        let g = random_graph(&mut r, n);
        let phi = uniform_vector(&mut r, g.n_edges(), PI / 2.0);
        let w = sinc_weights(&PhaseDifferences::new(phi)).unwrap();
        let lw = spectrum(&g.weighted_laplacian(&w).unwrap()).unwrap().lambda2;
        let ratio = lw / lambda2(&g);
        worst = worst.min(ratio);
        if ratio < 2.0 / PI {
            violations += 1;
        }
    }
    outcome(
        violations == 0,
        format!("{violations} violations, min λ₂(L_W)/λ₂(L) = {worst:.4} vs 2/π = {:.4}", 2.0 / PI),
    )
}

fn pinv_norm_scaling() -> Outcome {
    let points: Vec<(f64, f64)> = [4usize, 8, 16, 32, 64]
        .iter()
        .map(|&n| {
            let g = OrientedGraph::complete(n).unwrap();
            let m = weighted_pinv_norm_estimate(&g, 1000, 9).unwrap();
            ((n as f64).ln(), m.ln())
        })
        .collect();
    let mx = points.iter().map(|p| p.0).sum::<f64>() / points.len() as f64;
    let my = points.iter().map(|p| p.1).sum::<f64>() / points.len() as f64;
    let sxy: f64 = points.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = points.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    outcome((slope + 1.0).abs() <= 0.15, format!("slope {slope:.4}"))
}

fn normal_frequency_bound() -> Outcome {
    let (sigma, k): (f64, f64) = (0.5, 2.0);
    let limit = (1.0 - (sigma / k) * (sigma / k)).sqrt() * 1.02;
    let mut worst: f64 = 0.0;
    let mut violations = 0;
    for n in [10, 50] {
        let g = OrientedGraph::complete(n).unwrap();
        for seed in 0..10 {
            let mut r = stream(10 + n as u64, seed);
            let omega = centered_normal_frequencies(n, sigma, &mut r).unwrap();
            let theta0 = random_initial_phases(n, &mut r);
            let trace = run(&g, &omega, k, theta0, default_t_end(k, n, n as f64), 10);
            let r_final = order_parameter_classic(&trace.final_phases()).r;
            worst = worst.max(r_final);
            if r_final > limit {
                violations += 1;
            }
        }
    }
    outcome(
        violations == 0,
        format!("{violations}/20 violations, max r_final {worst:.4} vs {limit:.4}"),
    )
}

fn rk4_order() -> Outcome {
    let g = OrientedGraph::complete(3).unwrap();
    let omega = FrequencyVector::new(vec![0.3, -0.1, -0.2]).unwrap();
    let theta0 = DVector::from_vec(vec![0.5, -0.2, 0.1]);
    let end = |h: f64| {
        let cfg = SimulationConfig::new(1.5, h, 2.0, usize::MAX).unwrap();
        integrate(&g, &omega, &cfg, &PhaseState::at_zero(theta0.clone()), Coordinates::Full)
            .unwrap()
            .final_phases()
    };
    let (a, b, c) = (end(0.1), end(0.05), end(0.025));
    let ratio = (&a - &b).norm() / (&b - &c).norm();
    outcome((ratio / 16.0 - 1.0).abs() <= 0.2, format!("step-halving ratio {ratio:.3}"))
}

type Check = fn() -> Outcome;

fn main() {
    let criteria: [(&str, Check); 11] = [
        ("two-oscillator analytic oracle", two_oscillator_oracle),
        ("complete-graph convergence rate", complete_graph_rate),
        ("Lyapunov monotonicity", lyapunov_monotonicity),
        ("order-parameter identity on complete graphs", order_parameter_identity),
        ("asymptotic order-parameter bound", asymptotic_bound),
        ("bound sandwich", bound_sandwich),
        ("uniqueness above the contraction bound", uniqueness_above_contraction),
        ("weighted Fiedler value lower bound", weighted_fiedler_lower_bound),
        ("weighted pseudoinverse norm scaling", pinv_norm_scaling),
        ("normal-frequency order-parameter bound", normal_frequency_bound),
        ("RK4 order", rk4_order),
    ];
    let selected: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let id = i + 1;
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        let result = check();
        let tag = if result.pass { "PASS" } else { "FAIL" };
        println!("{tag} [{id:>2}] {name}: {}", result.detail);
        failed += usize::from(!result.pass);
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
