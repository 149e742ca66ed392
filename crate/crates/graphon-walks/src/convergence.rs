//! Discrete-versus-continuum convergence experiments.
//!
//! For a graphon `W` with initial condition `g`, the study builds a graph of
//! size `n` (quotient, sampled, or externally supplied), solves the graph
//! problem as a step-function evolution `u(·,t) = e^{t𝓛_n} g_n`, solves the
//! continuum problem at a reference resolution `N_ref` divisible by every
//! `n`, and records `‖u(·,t) − w(·,t)‖₂` next to the explicit bound from the
//! semigroup estimate:
//!
//! - quotient/sampled: `‖g_□ − g‖₂ e^t + ‖K_□ − K‖₂ ‖g‖₂ t e^{2βt}`,
//! - external sequences: `‖g_n − g‖₂ (e^t + e^{2βt}) + ‖K_n − K‖₂ ‖g‖₂ t e^{2βt}`,
//!
//! with `β = max{‖K‖₂, 1/c}` for `c` the measured floor of the discrete
//! degree. The two lemma checks behind the estimate — step kernels commute
//! with cell averaging, and the telescoping bound for powers of
//! Hilbert–Schmidt operators — are exported as standalone verifications.

use std::fmt::Write as _;
use std::path::Path;

use ndarray::{Array1, Array2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discretize::{
    average_initial_condition, format_float, quotient_graph, refine_to_grid, sampled_graph,
    step_graphon, StepFunction, WeightedGraph, DEFAULT_CELL_SAMPLES,
};
use crate::error::{Error, Result};
use crate::graphon::{
    check_degree_bound, degree_function, is_connected, lp_norm_matrix, Graphon,
    DEFAULT_DEGREE_FLOOR,
};
use crate::solver::{
    build_kernel_matrix, solve_ivp_spectral, spectral_decomposition_of, GridField,
};
use crate::walks::{evolve_continuous_many, LaplacianMatrix};

/// Initial conditions for the evolution problems, either named analytic
/// profiles or explicit step data.
#[derive(Debug, Clone)]
pub enum InitialCondition {
    /// `g ≡ 1`.
    One,
    /// `g(x) = x`.
    Ramp,
    /// `g(x) = 1 + cos(2πx)/2`, a strictly positive smooth profile.
    Cosine,
    /// Piecewise-constant data, e.g. read from a CSV file.
    Step(StepFunction),
}

impl InitialCondition {
    pub fn at(&self, x: f64) -> f64 {
        match self {
            InitialCondition::One => 1.0,
            InitialCondition::Ramp => x,
            InitialCondition::Cosine => 1.0 + 0.5 * (2.0 * std::f64::consts::PI * x).cos(),
            InitialCondition::Step(u) => u.at(x),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            InitialCondition::One => "one",
            InitialCondition::Ramp => "ramp",
            InitialCondition::Cosine => "cos",
            InitialCondition::Step(_) => "step",
        }
    }

    /// Parse a named profile (`one`, `ramp`/`x`, `cos`/`cosine`).
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "one" | "1" => Ok(InitialCondition::One),
            "ramp" | "x" => Ok(InitialCondition::Ramp),
            "cos" | "cosine" => Ok(InitialCondition::Cosine),
            other => Err(Error::InvalidConfig(format!(
                "unknown initial condition {other:?} (expected one, ramp, cos)"
            ))),
        }
    }
}

/// An externally supplied discrete problem: a graph and its initial step
/// data, as ingested from the CSV interchange formats.
#[derive(Debug, Clone)]
pub struct ExternalProblem {
    pub graph: WeightedGraph,
    pub initial: StepFunction,
}

/// How the graph sequence is produced.
#[derive(Debug, Clone)]
pub enum ExperimentMode {
    /// Quotient graphs `W/𝒫` (cell averages).
    Quotient,
    /// Sampled graphs `W_[n]` (point evaluation).
    Sampled,
    /// A supplied sequence `(G_n, g_n)`, one entry per requested `n`.
    ExternalSequence(Vec<ExternalProblem>),
}

impl ExperimentMode {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentMode::Quotient => "quotient",
            ExperimentMode::Sampled => "sampled",
            ExperimentMode::ExternalSequence(_) => "external_sequence",
        }
    }
}

/// Full description of a convergence experiment.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub graphon: Graphon,
    pub initial: InitialCondition,
    pub mode: ExperimentMode,
    /// Graph sizes, strictly increasing.
    pub ns: Vec<usize>,
    /// Observation times, nonnegative and nondecreasing.
    pub times: Vec<f64>,
    /// Continuum resolution; a common multiple of every `n`.
    pub n_ref: usize,
    /// Midpoint sub-samples per cell for quotient averaging.
    pub cell_samples: usize,
}

impl ExperimentSpec {
    pub fn new(
        graphon: Graphon,
        initial: InitialCondition,
        mode: ExperimentMode,
        ns: Vec<usize>,
        times: Vec<f64>,
        n_ref: usize,
    ) -> Self {
        ExperimentSpec {
            graphon,
            initial,
            mode,
            ns,
            times,
            n_ref,
            cell_samples: DEFAULT_CELL_SAMPLES,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.ns.is_empty() {
            return Err(Error::InvalidConfig("no graph sizes requested".into()));
        }
        if self.ns.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidConfig(
                "graph sizes must be strictly increasing".into(),
            ));
        }
        for &n in &self.ns {
            if n == 0 || !self.n_ref.is_multiple_of(n) {
                return Err(Error::IncompatibleResolution {
                    n,
                    target: self.n_ref,
                });
            }
        }
        if self.times.is_empty()
            || self.times[0] < 0.0
            || self.times.windows(2).any(|w| w[1] < w[0])
        {
            return Err(Error::InvalidConfig(
                "times must be nonnegative and nondecreasing".into(),
            ));
        }
        if self.cell_samples == 0 {
            return Err(Error::InvalidConfig("cell_samples must be positive".into()));
        }
        if let ExperimentMode::ExternalSequence(problems) = &self.mode {
            if problems.len() != self.ns.len() {
                return Err(Error::InvalidConfig(format!(
                    "external sequence has {} problems for {} sizes",
                    problems.len(),
                    self.ns.len()
                )));
            }
            for (p, &n) in problems.iter().zip(&self.ns) {
                if p.graph.n() != n || p.initial.n() != n {
                    return Err(Error::InvalidConfig(format!(
                        "external problem sized {}/{} does not match n = {n}",
                        p.graph.n(),
                        p.initial.n()
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Reference resolution an order denser than the finest graph: the smallest
/// multiple of `lcm(ns)` near `min(8 · max(ns), 2048)`.
pub fn default_n_ref(ns: &[usize]) -> usize {
    let l = ns.iter().copied().fold(1, lcm);
    let target = (8 * ns.iter().copied().max().unwrap_or(1)).min(2048);
    ((target / l).max(1)) * l
}

fn lcm(a: usize, b: usize) -> usize {
    fn gcd(mut a: usize, mut b: usize) -> usize {
        while b != 0 {
            (a, b) = (b, a % b);
        }
        a
    }
    a / gcd(a, b) * b
}

/// One measurement of a study: all distances entering the bound next to the
/// observed error.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportRow {
    pub n: usize,
    pub t: f64,
    pub error: f64,
    pub bound: f64,
    pub kernel_dist: f64,
    pub g_dist: f64,
    pub beta: f64,
}

/// Fitted log–log decay of the error over the three largest sizes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SlopeFit {
    pub t: f64,
    pub slope: Option<f64>,
}

/// Results of [`run_study`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub graphon: String,
    pub mode: String,
    pub initial: String,
    pub n_ref: usize,
    pub rows: Vec<ReportRow>,
    pub slopes: Vec<SlopeFit>,
}

impl ConvergenceReport {
    /// CSV with header `n,t,error,bound,kernel_dist,g_dist,beta`.
    pub fn to_csv_string(&self) -> String {
        let mut s = String::from("n,t,error,bound,kernel_dist,g_dist,beta\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{}",
                r.n,
                format_float(r.t),
                format_float(r.error),
                format_float(r.bound),
                format_float(r.kernel_dist),
                format_float(r.g_dist),
                format_float(r.beta)
            );
        }
        s
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv_string())?;
        Ok(())
    }

    /// Structured summary (JSON) with the fitted slopes.
    pub fn summary_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn write_summary_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.summary_json())?;
        Ok(())
    }

    pub fn errors_at(&self, t: f64) -> Vec<(usize, f64)> {
        self.rows
            .iter()
            .filter(|r| r.t == t)
            .map(|r| (r.n, r.error))
            .collect()
    }

    /// Measured error never exceeds the bound (with quadrature slack).
    pub fn bound_dominates(&self, slack: f64) -> bool {
        self.rows.iter().all(|r| r.error <= r.bound + slack)
    }

    /// Errors strictly decrease in `n` at every observation time.
    pub fn errors_strictly_decreasing(&self) -> bool {
        self.slopes.iter().map(|s| s.t).all(|t| {
            let es = self.errors_at(t);
            es.windows(2).all(|w| w[1].1 < w[0].1)
        })
    }
}

/// `‖u − w‖₂` after replicating the step function onto the grid of `w`.
pub fn l2_error(u: &StepFunction, w: &GridField) -> Result<f64> {
    let refined = refine_to_grid(u, w.n())?;
    Ok(refined.l2_distance(w))
}

/// Terminal estimate for quotient and sampled discretizations:
/// `eg · e^t + eK · ‖g‖₂ · t · e^{2βt}`.
pub fn theoretical_bound(eg: f64, ek: f64, g_norm: f64, beta: f64, t: f64) -> f64 {
    eg * t.exp() + ek * g_norm * t * (2.0 * beta * t).exp()
}

/// Terminal estimate for supplied graph sequences, whose initial data is not
/// a cell average: `eg · (e^t + e^{2βt}) + eK · ‖g‖₂ · t · e^{2βt}`.
pub fn theoretical_bound_sequence(eg: f64, ek: f64, g_norm: f64, beta: f64, t: f64) -> f64 {
    eg * (t.exp() + (2.0 * beta * t).exp()) + ek * g_norm * t * (2.0 * beta * t).exp()
}

/// Run a full discrete-versus-continuum study.
///
/// The continuum problem is solved once at `n_ref` through the spectral
/// route; each graph problem is solved through the symmetric conjugation of
/// its random-walk Laplacian. Graph sizes are processed in parallel.
pub fn run_study(spec: &ExperimentSpec) -> Result<ConvergenceReport> {
    spec.validate()?;
    let w = &spec.graphon;
    let n_ref = spec.n_ref;

    let k_ref = degree_function(w, n_ref);
    if !check_degree_bound(&k_ref, DEFAULT_DEGREE_FLOOR).is_pass() {
        return Err(Error::HypothesisViolation(format!(
            "degree function of {} dips to {:.3e} at resolution {n_ref}",
            w.family_name(),
            k_ref.min_value()
        )));
    }
    let max_n = *spec.ns.last().unwrap();
    if !is_connected(w, max_n) {
        return Err(Error::HypothesisViolation(format!(
            "graphon {} is disconnected at resolution {max_n}",
            w.family_name()
        )));
    }

    let dec = spectral_decomposition_of(w, n_ref)?;
    let g_ref = GridField::from_fn(n_ref, |x| spec.initial.at(x));
    let w_sol = solve_ivp_spectral(&g_ref, &dec, &spec.times, Some(n_ref))?;
    let km_ref = build_kernel_matrix(w, n_ref)?;
    let k_norm2 = lp_norm_matrix(km_ref.matrix(), 2.0);
    let g_norm = g_ref.l2_norm();

    let rows: Vec<Vec<ReportRow>> = spec
        .ns
        .par_iter()
        .enumerate()
        .map(|(idx, &n)| -> Result<Vec<ReportRow>> {
            let (graph, g_n) = match &spec.mode {
                ExperimentMode::Quotient => (
                    quotient_graph(w, n, spec.cell_samples),
                    average_initial_condition(|x| spec.initial.at(x), n, spec.cell_samples),
                ),
                ExperimentMode::Sampled => (
                    sampled_graph(w, n),
                    average_initial_condition(|x| spec.initial.at(x), n, spec.cell_samples),
                ),
                ExperimentMode::ExternalSequence(problems) => {
                    (problems[idx].graph.clone(), problems[idx].initial.clone())
                }
            };
            let eta = step_graphon(&graph);
            let km_eta = build_kernel_matrix(&eta, n_ref)?;
            let kernel_dist = lp_norm_matrix(&(km_eta.matrix() - km_ref.matrix()), 2.0);
            let g_n_refined = refine_to_grid(&g_n, n_ref)?;
            let g_dist = g_n_refined.l2_distance(&g_ref);
            let c_cell = graph
                .strengths()
                .iter()
                .map(|&s| s / n as f64)
                .fold(f64::INFINITY, f64::min);
            if c_cell <= 0.0 {
                return Err(Error::HypothesisViolation(format!(
                    "graph of size {n} has a zero-strength node"
                )));
            }
            let beta = k_norm2.max(1.0 / c_cell);

            let lap = LaplacianMatrix::random_walk(&graph)?;
            let states = evolve_continuous_many(g_n.values(), &lap, &spec.times)?;
            let mut out = Vec::with_capacity(spec.times.len());
            for (ti, &t) in spec.times.iter().enumerate() {
                let u_t = StepFunction::new(states[ti].clone());
                let error = l2_error(&u_t, &w_sol.fields[ti])?;
                let bound = match &spec.mode {
                    ExperimentMode::ExternalSequence(_) => {
                        theoretical_bound_sequence(g_dist, kernel_dist, g_norm, beta, t)
                    }
                    _ => theoretical_bound(g_dist, kernel_dist, g_norm, beta, t),
                };
                out.push(ReportRow {
                    n,
                    t,
                    error,
                    bound,
                    kernel_dist,
                    g_dist,
                    beta,
                });
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;

    let rows: Vec<ReportRow> = rows.into_iter().flatten().collect();
    let slopes = spec
        .times
        .iter()
        .map(|&t| SlopeFit {
            t,
            slope: fit_slope(
                &rows
                    .iter()
                    .filter(|r| r.t == t)
                    .map(|r| (r.n, r.error))
                    .collect::<Vec<_>>(),
            ),
        })
        .collect();

    Ok(ConvergenceReport {
        graphon: w.family_name().to_string(),
        mode: spec.mode.name().to_string(),
        initial: spec.initial.name().to_string(),
        n_ref,
        rows,
        slopes,
    })
}

/// Least-squares slope of `log error` against `log n` over the three largest
/// sizes (the asymptotic regime); `None` when fewer than two positive errors
/// remain.
fn fit_slope(errors: &[(usize, f64)]) -> Option<f64> {
    let mut pts: Vec<(f64, f64)> = errors
        .iter()
        .rev()
        .take(3)
        .filter(|&&(_, e)| e > 0.0)
        .map(|&(n, e)| ((n as f64).ln(), e.ln()))
        .collect();
    pts.reverse();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mean_x = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    Some(sxy / sxx)
}

/// Does a grid kernel commute with cell averaging on the partition of size
/// `n`? True within `1e−10 · ‖f‖₂` exactly when the kernel is constant on the
/// partition's cells.
pub fn kernel_commutes_with_cell_average(
    kernel: &Array2<f64>,
    n: usize,
    f: &GridField,
    applications: usize,
) -> Result<bool> {
    let big_n = f.n();
    if kernel.nrows() != big_n || kernel.ncols() != big_n {
        return Err(Error::IncompatibleResolution {
            n: kernel.nrows(),
            target: big_n,
        });
    }
    if !big_n.is_multiple_of(n) {
        return Err(Error::IncompatibleResolution { n, target: big_n });
    }
    if applications == 0 {
        return Err(Error::InvalidConfig(
            "the commutation check needs at least one application".into(),
        ));
    }
    let f_avg = refine_to_grid(&cell_average(f, n), big_n)?;
    let mut a = f.values().clone();
    let mut b = f_avg.values().clone();
    for _ in 0..applications {
        a = kernel.dot(&a) / big_n as f64;
        b = kernel.dot(&b) / big_n as f64;
    }
    let diff = (&a - &b).mapv(|v| v * v).sum().sqrt() / (big_n as f64).sqrt();
    Ok(diff <= 1e-10 * f.l2_norm())
}

/// Cell averages of a grid field on the coarser partition of size `n`.
pub fn cell_average(f: &GridField, n: usize) -> StepFunction {
    let big_n = f.n();
    assert_eq!(big_n % n, 0);
    let rep = big_n / n;
    StepFunction::new(Array1::from_shape_fn(n, |i| {
        f.values().slice(ndarray::s![i * rep..(i + 1) * rep]).sum() / rep as f64
    }))
}

/// Step kernels absorb cell averaging: applying the step-graphon operator to
/// `f` and to its cell average `f_η` gives the same result.
pub fn lemma_step_kernel_check(
    g: &WeightedGraph,
    f: &GridField,
    applications: usize,
) -> Result<bool> {
    let eta = step_graphon(g);
    let kernel = eta.grid_matrix(f.n());
    kernel_commutes_with_cell_average(&kernel, g.n(), f, applications)
}

/// Telescoping estimate for powers of two Hilbert–Schmidt operators with
/// kernels `a, b` (entries of `a` bounded by `beta`):
/// `‖𝒜^ℓf − 𝓑^ℓf‖₂ ≤ β^{ℓ−1}‖A−B‖₂‖f‖₂ + ‖(𝒜^{ℓ−1} − 𝓑^{ℓ−1})𝓑f‖₂`.
pub fn lemma_hs_difference_check(
    a: &Array2<f64>,
    b: &Array2<f64>,
    f: &GridField,
    applications: usize,
    beta: f64,
) -> bool {
    assert!(applications >= 1);
    assert_eq!(a.dim(), b.dim());
    assert_eq!(a.nrows(), f.n());
    debug_assert!(a.iter().all(|&v| v.abs() <= beta));
    let n = f.n() as f64;
    let apply = |m: &Array2<f64>, v: &Array1<f64>, times: usize| {
        let mut out = v.clone();
        for _ in 0..times {
            out = m.dot(&out) / n;
        }
        out
    };
    let rms = |v: &Array1<f64>| (v.mapv(|x| x * x).sum() / n).sqrt();

    let lhs = {
        let av = apply(a, f.values(), applications);
        let bv = apply(b, f.values(), applications);
        rms(&(&av - &bv))
    };
    let hs_dist = lp_norm_matrix(&(a - b), 2.0);
    let bf = apply(b, f.values(), 1);
    let rest = {
        let av = apply(a, &bf, applications - 1);
        let bv = apply(b, &bf, applications - 1);
        rms(&(&av - &bv))
    };
    let rhs = beta.powi(applications as i32 - 1) * hs_dist * f.l2_norm() + rest;
    lhs <= rhs + 1e-9
}
