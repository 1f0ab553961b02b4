use std::collections::BTreeMap;

use kuramoto_core::coupling::threshold::empirical_threshold_with;
use kuramoto_core::coupling::{
    bound_report_with_pinv_norm, r_infinity_bracket, sync_rate_bound, weighted_pinv_norm_estimate,
    RInfinityBracket,
};
use kuramoto_core::dynamics::{default_t_end, random_initial_phases};
use kuramoto_core::observables::{
    asymptotic_r_bound_from, detect_sync, order_parameter_classic, order_parameter_general, sample_observables,
    SyncVerdict,
};
use kuramoto_core::spectral::spectrum;
use kuramoto_core::{
    integrate, BoundReport, Coordinates, FixedPointOptions, FrequencyVector, KuramotoModel, LaplacianSpectrum,
    OracleOptions, OrientedGraph, PhaseState, SimulationConfig, SimulationTrace,
};
use nalgebra::DVector;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{CouplingSpec, ExperimentConfig, Format, InitialPhases};
use crate::failure::Failure;
use crate::output;

/// Graph plus the frequencies and initial phases of one replicate.
struct Instance {
    graph: OrientedGraph,
    omega: FrequencyVector,
    theta0: DVector<f64>,
    spectrum: LaplacianSpectrum,
}

impl Instance {
    fn load(cfg: &ExperimentConfig, graph: OrientedGraph, replicate: u64) -> Result<Self, Failure> {
        let n = graph.n_vertices();
        let mut rng = cfg.rng(replicate);
        let omega = cfg.omega.realize(n, &mut rng)?;
        let theta0 = match cfg.theta0 {
            InitialPhases::Random => random_initial_phases(n, &mut rng),
            InitialPhases::Zero => DVector::zeros(n),
        };
        let spectrum = spectrum(&graph.laplacian())?;
        Ok(Self {
            graph,
            omega,
            theta0,
            spectrum,
        })
    }

    fn first(cfg: &ExperimentConfig) -> Result<Self, Failure> {
        Self::load(cfg, cfg.graph.load()?, 0)
    }

    fn n(&self) -> usize {
        self.graph.n_vertices()
    }

    fn bounds(&self, cfg: &ExperimentConfig, pinv_norm: Option<f64>) -> Result<BoundReport, Failure> {
        let m = match pinv_norm {
            Some(m) => m,
            None => weighted_pinv_norm_estimate(&self.graph, cfg.infnorm_samples, cfg.seed)?,
        };
        Ok(bound_report_with_pinv_norm(&self.graph, &self.omega, m, cfg.infnorm_samples)?)
    }

    fn simulate(&self, cfg: &ExperimentConfig, k: f64) -> Result<(SimulationTrace, SyncVerdict), Failure> {
        let t_end = cfg.t_end.unwrap_or_else(|| default_t_end(k, self.n(), self.spectrum.lambda2));
        let sim = SimulationConfig::new(k, cfg.h, t_end, cfg.record_every)?;
        let trace = integrate(
            &self.graph,
            &self.omega,
            &sim,
            &PhaseState::at_zero(self.theta0.clone()),
            Coordinates::Full,
        )?;
        let model = KuramotoModel::new(&self.graph, &self.omega, k)?;
        let verdict = detect_sync(&model, &trace, cfg.tail_fraction, cfg.residual_tol)?;
        Ok((trace, verdict))
    }
}

/// Resolved options minus the output location.
fn config_map(cfg: &ExperimentConfig) -> BTreeMap<String, String> {
    cfg.to_kv()
        .lines()
        .filter_map(|l| l.split_once(" = "))
        .filter(|(k, _)| *k != "out")
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

/// Writes `files` into the output directory, or prints the one matching
/// the requested format.
fn emit(cfg: &ExperimentConfig, files: &[(&str, String)]) -> Result<(), Failure> {
    match &cfg.out {
        Some(dir) => {
            for (name, contents) in files {
                output::write_file(dir, name, contents)?;
            }
            output::write_file(dir, "config.txt", &cfg.to_kv())
        }
        None => {
            let ext = match cfg.format {
                Format::Json => ".json",
                Format::Csv => ".csv",
            };
            let chosen = files
                .iter()
                .find(|(name, _)| name.ends_with(ext))
                .or(files.first())
                .map(|(_, c)| c.as_str())
                .unwrap_or_default();
            output::stdout(chosen)
        }
    }
}

fn final_r(graph: &OrientedGraph, theta: &DVector<f64>) -> Result<f64, Failure> {
    Ok(order_parameter_general(graph, theta)?.max(0.0).sqrt())
}

#[derive(Serialize)]
struct SimulationSummary {
    config: BTreeMap<String, String>,
    seed: u64,
    n_vertices: usize,
    n_edges: usize,
    coupling: f64,
    step: f64,
    t_end: f64,
    samples: usize,
    synchronized: bool,
    residual: f64,
    rate_estimate: Option<f64>,
    rate_bound: f64,
    r_final: f64,
    big_r_final: f64,
    psi_final: f64,
    asymptotic_r_bound: Option<f64>,
    above_necessary: bool,
    above_sufficient_2norm: bool,
    above_contraction: bool,
    bounds: BoundReport,
}

fn trace_csv(graph: &OrientedGraph, trace: &SimulationTrace) -> Result<String, Failure> {
    let n = graph.n_vertices();
    let mut header = vec!["t".to_string()];
    header.extend((0..n).map(|i| format!("theta_{i}")));
    header.extend(["R", "psi", "r2", "U1", "U2"].map(String::from));
    let rows = (0..trace.len())
        .map(|j| {
            let theta = trace.phases(j);
            let obs = sample_observables(graph, &theta)?;
            let mut row = vec![output::float(trace.times[j])];
            row.extend(theta.iter().map(|&x| output::float(x)));
            row.extend([obs.r_classic, obs.psi, obs.r2, obs.u1, obs.u2].map(output::float));
            Ok(row)
        })
        .collect::<Result<Vec<_>, Failure>>()?;
    Ok(output::csv(&header, &rows))
}

pub fn simulate(cfg: &ExperimentConfig) -> Result<(), Failure> {
    let k = require_k(cfg)?.single()?;
    let inst = Instance::first(cfg)?;
    let (trace, verdict) = inst.simulate(cfg, k)?;
    let bounds = inst.bounds(cfg, None)?;
    let last = trace.final_phases();
    let classic = order_parameter_classic(&last);
    let summary = SimulationSummary {
        config: config_map(cfg),
        seed: cfg.seed,
        n_vertices: inst.n(),
        n_edges: inst.graph.n_edges(),
        coupling: k,
        step: cfg.h,
        t_end: *trace.times.last().unwrap_or(&0.0),
        samples: trace.len(),
        synchronized: verdict.synchronized,
        residual: verdict.residual,
        rate_estimate: verdict.rate_estimate,
        rate_bound: sync_rate_bound(k, inst.n(), inst.spectrum.lambda2),
        r_final: final_r(&inst.graph, &last)?,
        big_r_final: classic.r,
        psi_final: classic.psi,
        asymptotic_r_bound: asymptotic_r_bound_from(inst.spectrum.lambda2, bounds.omega_2, k).value(),
        above_necessary: k >= bounds.max_necessary(),
        above_sufficient_2norm: k >= bounds.k_sufficient_2norm,
        above_contraction: k >= bounds.k_contraction,
        bounds,
    };
    emit(
        cfg,
        &[
            ("summary.json", output::json(&summary)?),
            ("trace.csv", trace_csv(&inst.graph, &trace)?),
        ],
    )
}

#[derive(Serialize)]
struct BoundsOutput {
    seed: u64,
    #[serde(flatten)]
    report: BoundReport,
    r_infinity_bracket: RInfinityBracket,
}

const BOUND_COLUMNS: [&str; 6] = [
    "k_necessary_maxdeg",
    "k_necessary_pinv",
    "k_tree_tight",
    "k_sufficient_2norm",
    "k_sufficient_infnorm_estimate",
    "k_contraction",
];

fn bound_cells(b: &BoundReport) -> Vec<String> {
    vec![
        output::float(b.k_necessary_maxdeg),
        output::float(b.k_necessary_pinv),
        output::optional(b.k_tree_tight),
        output::float(b.k_sufficient_2norm),
        output::float(b.k_sufficient_infnorm_estimate),
        output::float(b.k_contraction),
    ]
}

pub fn bounds(cfg: &ExperimentConfig) -> Result<(), Failure> {
    let inst = Instance::first(cfg)?;
    let report = inst.bounds(cfg, None)?;
    let mut header: Vec<String> = BOUND_COLUMNS.map(String::from).to_vec();
    header.extend(["lambda2", "lambda_max"].map(String::from));
    let mut row = bound_cells(&report);
    row.extend([report.lambda2, report.lambda_max].map(output::float));
    let table = output::csv(&header, &[row]);
    let doc = output::json(&BoundsOutput {
        seed: cfg.seed,
        report,
        r_infinity_bracket: r_infinity_bracket(),
    })?;
    emit(cfg, &[("bounds.json", doc), ("bounds.csv", table)])
}

pub fn fixedpoint(cfg: &ExperimentConfig) -> Result<(), Failure> {
    let k = require_k(cfg)?.single()?;
    let inst = Instance::first(cfg)?;
    let opts = FixedPointOptions {
        tol: cfg.fp_tol,
        max_iter: cfg.fp_max_iter,
    };
    let result = kuramoto_core::solve_fixed_point(&inst.graph, &inst.omega, k, None, &opts)?;
    emit(cfg, &[("fixedpoint.json", output::json(&result)?)])
}

#[derive(Serialize)]
struct ThresholdOutput {
    seed: u64,
    k_lo: f64,
    k_hi: f64,
    tol_k: f64,
    #[serde(flatten)]
    result: kuramoto_core::ThresholdResult,
    bounds: BoundReport,
}

pub fn threshold(cfg: &ExperimentConfig) -> Result<(), Failure> {
    let inst = Instance::first(cfg)?;
    let bounds = inst.bounds(cfg, None)?;
    let (k_lo, k_hi) = match cfg.k {
        Some(CouplingSpec::Range { lo, hi, .. }) => (lo, hi),
        Some(CouplingSpec::Value(_)) => return Err(Failure::config("threshold needs a --k range <lo>:<hi>")),
        None => (
            0.5 * bounds.max_necessary(),
            1.5 * bounds.k_contraction.max(bounds.max_necessary()),
        ),
    };
    let opts = OracleOptions {
        residual_tol: cfg.residual_tol,
        ..OracleOptions::default()
    };
    let result = empirical_threshold_with(&inst.graph, &inst.omega, k_lo, k_hi, cfg.tol_k, &opts)?;
    let doc = output::json(&ThresholdOutput {
        seed: cfg.seed,
        k_lo,
        k_hi,
        tol_k: cfg.tol_k,
        result,
        bounds,
    })?;
    emit(cfg, &[("threshold.json", doc)])
}

#[derive(Serialize)]
struct SpectrumOutput {
    n_vertices: usize,
    n_edges: usize,
    max_degree: usize,
    kernel_dimension: usize,
    #[serde(flatten)]
    spectrum: LaplacianSpectrum,
}

pub fn spectrum_cmd(cfg: &ExperimentConfig) -> Result<(), Failure> {
    let g = cfg.graph.load()?;
    let s = spectrum(&g.laplacian())?;
    let header = vec!["index".to_string(), "eigenvalue".to_string()];
    let rows: Vec<Vec<String>> = s
        .eigenvalues
        .iter()
        .enumerate()
        .map(|(i, &x)| vec![i.to_string(), output::float(x)])
        .collect();
    let table = output::csv(&header, &rows);
    let doc = output::json(&SpectrumOutput {
        n_vertices: g.n_vertices(),
        n_edges: g.n_edges(),
        max_degree: g.max_degree(),
        kernel_dimension: s.kernel_dimension(),
        spectrum: s,
    })?;
    emit(cfg, &[("spectrum.json", doc), ("spectrum.csv", table)])
}

#[derive(Serialize)]
struct SweepRow {
    k: f64,
    replicate: usize,
    seed: u64,
    synchronized: bool,
    residual: f64,
    rate_estimate: Option<f64>,
    rate_bound: f64,
    r_final: f64,
    big_r_final: f64,
    asymptotic_r_bound: Option<f64>,
    #[serde(flatten)]
    bounds: BoundReport,
}

impl SweepRow {
    fn cells(&self) -> Vec<String> {
        let mut row = vec![
            output::float(self.k),
            self.replicate.to_string(),
            self.seed.to_string(),
            self.synchronized.to_string(),
            output::float(self.residual),
            output::optional(self.rate_estimate),
            output::float(self.rate_bound),
            output::float(self.r_final),
            output::float(self.big_r_final),
            output::optional(self.asymptotic_r_bound),
        ];
        row.extend(bound_cells(&self.bounds));
        row
    }
}

pub fn sweep(cfg: &ExperimentConfig) -> Result<(), Failure> {
    let grid = require_k(cfg)?.grid();
    let graph = cfg.graph.load()?;
    let pinv_norm = weighted_pinv_norm_estimate(&graph, cfg.infnorm_samples, cfg.seed)?;
    let replicates = (0..cfg.replicates)
        .map(|r| {
            let inst = Instance::load(cfg, graph.clone(), r as u64)?;
            let bounds = inst.bounds(cfg, Some(pinv_norm))?;
            Ok((inst, bounds))
        })
        .collect::<Result<Vec<_>, Failure>>()?;

    let jobs: Vec<(usize, usize)> = (0..grid.len())
        .flat_map(|i| (0..cfg.replicates).map(move |r| (i, r)))
        .collect();
    let rows = jobs
        .par_iter()
        .map(|&(i, r)| {
            let k = grid[i];
            let (inst, bounds) = &replicates[r];
            let (trace, verdict) = inst.simulate(cfg, k)?;
            let last = trace.final_phases();
            Ok(SweepRow {
                k,
                replicate: r,
                seed: cfg.seed,
                synchronized: verdict.synchronized,
                residual: verdict.residual,
                rate_estimate: verdict.rate_estimate,
                rate_bound: sync_rate_bound(k, inst.n(), inst.spectrum.lambda2),
                r_final: final_r(&inst.graph, &last)?,
                big_r_final: order_parameter_classic(&last).r,
                asymptotic_r_bound: asymptotic_r_bound_from(inst.spectrum.lambda2, bounds.omega_2, k).value(),
                bounds: bounds.clone(),
            })
        })
        .collect::<Result<Vec<_>, Failure>>()?;

    let mut header: Vec<String> = [
        "k",
        "replicate",
        "seed",
        "synchronized",
        "residual",
        "rate_estimate",
        "rate_bound",
        "r_final",
        "R_final",
        "asymptotic_r_bound",
    ]
    .map(String::from)
    .to_vec();
    header.extend(BOUND_COLUMNS.map(String::from));
    let cells: Vec<Vec<String>> = rows.iter().map(SweepRow::cells).collect();
    emit(
        cfg,
        &[
            ("sweep.csv", output::csv(&header, &cells)),
            ("sweep.json", output::json(&rows)?),
        ],
    )
}

fn require_k(cfg: &ExperimentConfig) -> Result<CouplingSpec, Failure> {
    cfg.k.ok_or_else(|| Failure::config("no coupling given (--k)"))
}
