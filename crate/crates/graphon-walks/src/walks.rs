//! Random-walk dynamics on finite weighted graphs.
//!
//! Three walk classes share the transition structure `T = D⁻¹A`:
//!
//! - **discrete time**: `p(ℓ+1) = p(ℓ) T`;
//! - **node-centric continuous time**: exponential waiting times with a
//!   common rate `κ`, master equation `u̇ = κ · u (D⁻¹A − I)`; its generator
//!   (at `κ = 1`) is the random-walk Laplacian `L = D⁻¹A − I`;
//! - **edge-centric continuous time**: per-node rate proportional to the
//!   strength, `u̇ = κ u (A − D)`, the graph heat equation driven by the
//!   combinatorial Laplacian. On growing dense graphs the rate must be
//!   rescaled as `κ_n = 1/n` to keep `κ_n · str(v_j) ≤ 1` bounded.
//!
//! States are row vectors multiplying matrices from the left throughout.
//! Exact evolution goes through the similarity of `D⁻¹A` to the symmetric
//! `D^{-1/2} A D^{-1/2}`, giving real spectra and stable exponentials, with a
//! Padé scaling-and-squaring fallback when the strengths are too spread out
//! for the conjugation. Individual walkers are simulated event by event with
//! per-walker RNG streams, so Monte Carlo ensembles are reproducible and
//! embarrassingly parallel.

use std::fmt::Write as _;
use std::path::Path;

use ndarray::{Array1, Array2};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;

use crate::discretize::{format_float, WeightedGraph};
use crate::error::{Error, Result};
use crate::linalg;

/// Strength ratio beyond which the symmetric conjugation is considered
/// ill-conditioned and the Padé fallback takes over.
pub const CONDITION_RATIO_LIMIT: f64 = 1e12;

/// Row-stochastic transition matrix `T = D⁻¹A`.
#[derive(Debug, Clone)]
pub struct TransitionMatrix {
    t: Array2<f64>,
}

impl TransitionMatrix {
    pub fn matrix(&self) -> &Array2<f64> {
        &self.t
    }

    pub fn n(&self) -> usize {
        self.t.nrows()
    }
}

/// `T_ij = A_ij / str(v_i)`; fails on the first node with zero strength.
pub fn transition_matrix(g: &WeightedGraph) -> Result<TransitionMatrix> {
    let n = g.n();
    if let Some(i) = (0..n).find(|&i| g.strength(i) == 0.0) {
        return Err(Error::IsolatedNode(i));
    }
    let mut t = g.adjacency().clone();
    for i in 0..n {
        let s = g.strength(i);
        t.row_mut(i).mapv_inplace(|v| v / s);
    }
    Ok(TransitionMatrix { t })
}

/// `p(ℓ) = p(0) Tᵉ` by repeated vector–matrix products; the entry sum is
/// conserved because `T` is row stochastic.
pub fn evolve_discrete(p0: &Array1<f64>, t: &TransitionMatrix, steps: usize) -> Array1<f64> {
    assert_eq!(p0.len(), t.n());
    let mut p = p0.clone();
    for _ in 0..steps {
        // row vector times matrix
        p = t.t.t().dot(&p);
    }
    p
}

/// Stationary distribution of the discrete and node-centric walks,
/// `π ∝ (str(v₁), …, str(v_n))`.
pub fn stationary_distribution(g: &WeightedGraph) -> Array1<f64> {
    let total: f64 = g.strengths().sum();
    g.strengths() / total
}

/// Which generator drives the continuous-time evolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LaplacianKind {
    /// `D⁻¹A − I`, the node-centric generator.
    RandomWalk,
    /// `κ_n (A − D)` with `κ_n = 1/n`, the rescaled edge-centric generator.
    CombinatorialScaled,
}

/// A walk generator `M` together with the strengths needed for its symmetric
/// conjugation.
#[derive(Debug, Clone)]
pub struct LaplacianMatrix {
    kind: LaplacianKind,
    m: Array2<f64>,
    strengths: Array1<f64>,
}

impl LaplacianMatrix {
    pub fn random_walk(g: &WeightedGraph) -> Result<Self> {
        let t = transition_matrix(g)?;
        let mut m = t.t;
        for i in 0..g.n() {
            m[[i, i]] -= 1.0;
        }
        Ok(LaplacianMatrix {
            kind: LaplacianKind::RandomWalk,
            m,
            strengths: g.strengths().clone(),
        })
    }

    pub fn combinatorial_scaled(g: &WeightedGraph) -> Self {
        let n = g.n();
        let kappa_n = 1.0 / n as f64;
        let mut m = g.adjacency() * kappa_n;
        for i in 0..n {
            m[[i, i]] -= kappa_n * g.strength(i);
        }
        LaplacianMatrix {
            kind: LaplacianKind::CombinatorialScaled,
            m,
            strengths: g.strengths().clone(),
        }
    }

    pub fn kind(&self) -> LaplacianKind {
        self.kind
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.m
    }

    pub fn n(&self) -> usize {
        self.m.nrows()
    }

    /// Symmetric matrix similar to `M + c·I` used by the spectral routes:
    /// `D^{1/2} (M + I) D^{-1/2} = D^{-1/2} A D^{-1/2}` for the random-walk
    /// kind, and `M` itself for the combinatorial kind.
    fn symmetric_part(&self) -> Array2<f64> {
        match self.kind {
            LaplacianKind::RandomWalk => {
                let n = self.n();
                let sqrt_d = self.strengths.mapv(f64::sqrt);
                let mut s = Array2::zeros((n, n));
                for i in 0..n {
                    for j in 0..n {
                        let a_ij = if i == j {
                            self.m[[i, j]] + 1.0
                        } else {
                            self.m[[i, j]]
                        };
                        s[[i, j]] = sqrt_d[i] * a_ij / sqrt_d[j];
                    }
                }
                // exact symmetrization of rounding noise
                for i in 0..n {
                    for j in (i + 1)..n {
                        let v = 0.5 * (s[[i, j]] + s[[j, i]]);
                        s[[i, j]] = v;
                        s[[j, i]] = v;
                    }
                }
                s
            }
            LaplacianKind::CombinatorialScaled => self.m.clone(),
        }
    }

    fn conjugation_well_conditioned(&self) -> bool {
        let max = self.strengths.iter().cloned().fold(0.0_f64, f64::max);
        let min = self.strengths.iter().cloned().fold(f64::INFINITY, f64::min);
        min > 0.0 && max / min <= CONDITION_RATIO_LIMIT
    }
}

/// `u(t) = u₀ · exp(tM)` for a single time.
pub fn evolve_continuous(u0: &Array1<f64>, lap: &LaplacianMatrix, t: f64) -> Result<Array1<f64>> {
    Ok(evolve_continuous_many(u0, lap, &[t])?.pop().unwrap())
}

/// `u(t) = u₀ · exp(tM)` at several times with a single eigendecomposition.
///
/// The random-walk generator is conjugated to `D^{-1/2} A D^{-1/2}`, whose
/// symmetric eigensolve yields the exponential; if the strengths span more
/// than [`CONDITION_RATIO_LIMIT`] the route falls back to Padé scaling and
/// squaring on `tM` directly.
pub fn evolve_continuous_many(
    u0: &Array1<f64>,
    lap: &LaplacianMatrix,
    times: &[f64],
) -> Result<Vec<Array1<f64>>> {
    let n = lap.n();
    assert_eq!(u0.len(), n);
    if times.iter().any(|&t| t < 0.0) {
        return Err(Error::InvalidConfig("evolution times must be >= 0".into()));
    }
    if !lap.conjugation_well_conditioned() {
        return times
            .iter()
            .map(|&t| {
                if t == 0.0 {
                    return Ok(u0.clone());
                }
                let e = linalg::expm(&(&lap.m * t))?;
                Ok(e.t().dot(u0))
            })
            .collect();
    }
    let s = lap.symmetric_part();
    let (vals, q) = linalg::symmetric_eig_desc(&s)?;
    match lap.kind {
        LaplacianKind::RandomWalk => {
            let sqrt_d = lap.strengths.mapv(f64::sqrt);
            let v = u0 / &sqrt_d;
            let c = q.t().dot(&v);
            Ok(times
                .iter()
                .map(|&t| {
                    if t == 0.0 {
                        return u0.clone();
                    }
                    let weighted = &c * &vals.mapv(|th| (t * th).exp());
                    let out = q.dot(&weighted) * &sqrt_d;
                    out * (-t).exp()
                })
                .collect())
        }
        LaplacianKind::CombinatorialScaled => {
            let c = q.t().dot(u0);
            Ok(times
                .iter()
                .map(|&t| {
                    if t == 0.0 {
                        return u0.clone();
                    }
                    let weighted = &c * &vals.mapv(|mu| (t * mu).exp());
                    q.dot(&weighted)
                })
                .collect())
        }
    }
}

/// Eigenvalues of the generator `M`, descending (real by similarity to a
/// symmetric matrix).
pub fn generator_spectrum(lap: &LaplacianMatrix) -> Result<Array1<f64>> {
    let (vals, _) = linalg::symmetric_eig_desc(&lap.symmetric_part())?;
    Ok(match lap.kind {
        LaplacianKind::RandomWalk => vals.mapv(|v| v - 1.0),
        LaplacianKind::CombinatorialScaled => vals,
    })
}

/// `−λ₂` of the generator; the reciprocal of the walk's relaxation time.
pub fn spectral_gap(lap: &LaplacianMatrix) -> Result<f64> {
    let vals = generator_spectrum(lap)?;
    if vals.len() < 2 {
        return Err(Error::ZeroGap);
    }
    Ok(-vals[1])
}

/// Waiting-time regime of a simulated walker.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WalkMode {
    /// Constant jump rate `κ` on every node.
    NodeCentric { kappa: f64 },
    /// Per-node rate `κ_n · str(v_j)` with `κ_n = 1/n`.
    EdgeCentric,
}

/// Tag recording how a trajectory was generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrajectoryMode {
    Discrete,
    NodeCentric,
    EdgeCentric,
}

impl TrajectoryMode {
    pub fn name(&self) -> &'static str {
        match self {
            TrajectoryMode::Discrete => "discrete",
            TrajectoryMode::NodeCentric => "node_centric",
            TrajectoryMode::EdgeCentric => "edge_centric",
        }
    }
}

/// One walker's event list: strictly increasing times with the node occupied
/// from that time on.
#[derive(Debug, Clone)]
pub struct WalkTrajectory {
    pub seed: u64,
    pub events: Vec<(f64, usize)>,
    pub mode: TrajectoryMode,
}

impl WalkTrajectory {
    /// Node occupied at time `t` (the last event at or before `t`).
    pub fn node_at(&self, t: f64) -> usize {
        let mut node = self.events[0].1;
        for &(et, en) in &self.events {
            if et <= t {
                node = en;
            } else {
                break;
            }
        }
        node
    }

    pub fn jump_count(&self) -> usize {
        self.events.len() - 1
    }

    /// CSV with header `time,node`.
    pub fn to_csv_string(&self) -> String {
        let mut s = String::from("time,node\n");
        for &(t, node) in &self.events {
            let _ = writeln!(s, "{},{}", format_float(t), node);
        }
        s
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv_string())?;
        Ok(())
    }
}

fn draw_next_node(row: ndarray::ArrayView1<f64>, rng: &mut ChaCha8Rng) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (j, &p) in row.iter().enumerate() {
        if p > 0.0 {
            last_positive = j;
            acc += p;
            if u < acc {
                return j;
            }
        }
    }
    // the row sums to 1 up to rounding; a draw landing in the residual gap
    // goes to the last reachable neighbor
    last_positive
}

fn gillespie_with_rng(
    g: &WeightedGraph,
    t: &TransitionMatrix,
    mode: WalkMode,
    start: usize,
    t_max: f64,
    rng: &mut ChaCha8Rng,
) -> Vec<(f64, usize)> {
    let n = g.n();
    let mut events = vec![(0.0, start)];
    let mut node = start;
    let mut clock = 0.0;
    loop {
        let rate = match mode {
            WalkMode::NodeCentric { kappa } => kappa,
            WalkMode::EdgeCentric => g.strength(node) / n as f64,
        };
        let dt = Exp::new(rate).expect("positive jump rate").sample(rng);
        clock += dt;
        if clock > t_max {
            break;
        }
        node = draw_next_node(t.matrix().row(node), rng);
        events.push((clock, node));
    }
    events
}

/// Event-driven simulation of one walker up to `t_max`, deterministic in the
/// seed.
///
/// At node `j` the waiting time is exponential with rate `κ` (node-centric)
/// or `str(v_j)/n` (edge-centric); the destination is drawn from row `j` of
/// `T`.
pub fn gillespie_walk(
    g: &WeightedGraph,
    mode: WalkMode,
    start: usize,
    t_max: f64,
    seed: u64,
) -> Result<WalkTrajectory> {
    if t_max.is_nan() || t_max <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "walk horizon must be positive, got {t_max}"
        )));
    }
    if let WalkMode::NodeCentric { kappa } = mode {
        if kappa.is_nan() || kappa <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "node-centric rate must be positive, got {kappa}"
            )));
        }
    }
    if start >= g.n() {
        return Err(Error::InvalidConfig(format!(
            "start node {start} out of range for {} nodes",
            g.n()
        )));
    }
    let t = transition_matrix(g)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let events = gillespie_with_rng(g, &t, mode, start, t_max, &mut rng);
    Ok(WalkTrajectory {
        seed,
        events,
        mode: match mode {
            WalkMode::NodeCentric { .. } => TrajectoryMode::NodeCentric,
            WalkMode::EdgeCentric => TrajectoryMode::EdgeCentric,
        },
    })
}

/// Discrete-time walker: `steps` uniform-neighbor jumps at integer times.
pub fn discrete_walk(
    g: &WeightedGraph,
    start: usize,
    steps: usize,
    seed: u64,
) -> Result<WalkTrajectory> {
    if start >= g.n() {
        return Err(Error::InvalidConfig(format!(
            "start node {start} out of range for {} nodes",
            g.n()
        )));
    }
    let t = transition_matrix(g)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut events = vec![(0.0, start)];
    let mut node = start;
    for step in 1..=steps {
        node = draw_next_node(t.matrix().row(node), &mut rng);
        events.push((step as f64, node));
    }
    Ok(WalkTrajectory {
        seed,
        events,
        mode: TrajectoryMode::Discrete,
    })
}

/// Node occupancy counts of a walker ensemble at time `t_max`.
///
/// Walker `w` draws from the stream `(seed, w)` of a counter-based generator,
/// so the ensemble is reproducible independent of scheduling and can run
/// fully in parallel.
pub fn occupancy_histogram(
    g: &WeightedGraph,
    mode: WalkMode,
    start: usize,
    t_max: f64,
    walkers: usize,
    seed: u64,
) -> Result<Vec<u64>> {
    if walkers == 0 {
        return Err(Error::InvalidConfig("need at least one walker".into()));
    }
    if start >= g.n() {
        return Err(Error::InvalidConfig(format!(
            "start node {start} out of range for {} nodes",
            g.n()
        )));
    }
    let t = transition_matrix(g)?;
    let counts = (0..walkers)
        .into_par_iter()
        .fold(
            || vec![0_u64; g.n()],
            |mut acc, w| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(w as u64);
                let events = gillespie_with_rng(g, &t, mode, start, t_max, &mut rng);
                acc[events.last().unwrap().1] += 1;
                acc
            },
        )
        .reduce(
            || vec![0_u64; g.n()],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        );
    Ok(counts)
}

/// Node occupancy counts of a discrete-time walker ensemble after `steps`
/// jumps, with the same per-walker stream scheme as [`occupancy_histogram`].
pub fn discrete_occupancy_histogram(
    g: &WeightedGraph,
    start: usize,
    steps: usize,
    walkers: usize,
    seed: u64,
) -> Result<Vec<u64>> {
    if walkers == 0 {
        return Err(Error::InvalidConfig("need at least one walker".into()));
    }
    if start >= g.n() {
        return Err(Error::InvalidConfig(format!(
            "start node {start} out of range for {} nodes",
            g.n()
        )));
    }
    let t = transition_matrix(g)?;
    let counts = (0..walkers)
        .into_par_iter()
        .fold(
            || vec![0_u64; g.n()],
            |mut acc, w| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(w as u64);
                let mut node = start;
                for _ in 0..steps {
                    node = draw_next_node(t.matrix().row(node), &mut rng);
                }
                acc[node] += 1;
                acc
            },
        )
        .reduce(
            || vec![0_u64; g.n()],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        );
    Ok(counts)
}

/// Histogram CSV with header `node,count,frequency`.
pub fn histogram_csv(counts: &[u64]) -> String {
    let total: u64 = counts.iter().sum();
    let mut s = String::from("node,count,frequency\n");
    for (node, &c) in counts.iter().enumerate() {
        let _ = writeln!(
            s,
            "{},{},{}",
            node,
            c,
            format_float(c as f64 / total as f64)
        );
    }
    s
}
