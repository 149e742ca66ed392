//! Between graphons and finite graphs.
//!
//! Graphon → graph:
//! - [`quotient_graph`]: `A_ij = n² ∬_{P_i × P_j} W`, the cell means of `W`
//!   on the uniform partition (the quotient graph `W/𝒫`);
//! - [`sampled_graph`]: `A_ij = W(i/n, j/n)`, point evaluation at the right
//!   cell endpoints.
//!
//! Graph → graphon: [`step_graphon`] builds the piecewise-constant empirical
//! graphon `η(G)(x, y) = A_{cell(x), cell(y)}`. The same map sends vectors to
//! step functions, and [`average_initial_condition`] produces the
//! cell-averaged initial data `g_□` used by the discrete evolution problems.
//!
//! The strength/degree identity ties the two worlds together: the strength of
//! node `i` equals `n · k_η(x)` for every `x ∈ P_i`, where `k_η` is the degree
//! function of the step graphon.

use std::fmt::Write as _;
use std::path::Path;

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::graphon::{Graphon, JUMP_SAMPLE_OFFSET};
use crate::grid;
use crate::solver::GridField;

/// Default number of midpoint sub-samples per cell axis used when averaging
/// over partition cells. Step graphons aligned with the partition are
/// integrated exactly for any value; smooth families see an `O(1/(nm)²)`
/// midpoint error.
pub const DEFAULT_CELL_SAMPLES: usize = 8;

/// The uniform partition `P_i = [(i−1)/n, i/n)` of `[0, 1]`, with the last
/// cell closed on the right.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Partition {
    n: usize,
}

impl Partition {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        Partition { n }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn cell_of(&self, x: f64) -> usize {
        grid::cell_index(self.n, x)
    }

    /// Half-open interval of cell `i` (the last cell includes 1).
    pub fn cell_interval(&self, i: usize) -> (f64, f64) {
        (i as f64 / self.n as f64, (i + 1) as f64 / self.n as f64)
    }
}

/// A dense weighted graph: symmetric adjacency matrix with entries in
/// `[0, 1]` plus the node strengths `str(v_i) = Σ_j A_ij`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    a: Array2<f64>,
    strengths: Array1<f64>,
}

impl WeightedGraph {
    /// Validates squareness, exact symmetry and the `[0, 1]` weight range.
    pub fn new(a: Array2<f64>) -> Result<Self> {
        let n = a.nrows();
        if n == 0 || a.ncols() != n {
            return Err(Error::MalformedData(format!(
                "adjacency matrix must be square and nonempty, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        for i in 0..n {
            for j in 0..n {
                let v = a[[i, j]];
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::OutOfRange {
                        value: v,
                        context: format!("adjacency entry ({i}, {j})"),
                    });
                }
                if j > i && a[[i, j]] != a[[j, i]] {
                    return Err(Error::NotSymmetric {
                        i,
                        j,
                        a: a[[i, j]],
                        b: a[[j, i]],
                    });
                }
            }
        }
        let strengths = a.sum_axis(ndarray::Axis(1));
        Ok(WeightedGraph { a, strengths })
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn adjacency(&self) -> &Array2<f64> {
        &self.a
    }

    pub fn strengths(&self) -> &Array1<f64> {
        &self.strengths
    }

    pub fn strength(&self, i: usize) -> f64 {
        self.strengths[i]
    }

    /// Dense CSV: first line the node count, then `n` rows of `n`
    /// comma-separated reals at 17 significant digits (bit-exact round trip).
    pub fn to_csv_string(&self) -> String {
        let n = self.n();
        let mut s = String::new();
        let _ = writeln!(s, "{n}");
        for i in 0..n {
            let row: Vec<String> = (0..n).map(|j| format_float(self.a[[i, j]])).collect();
            let _ = writeln!(s, "{}", row.join(","));
        }
        s
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv_string())?;
        Ok(())
    }

    pub fn from_csv_string(s: &str) -> Result<Self> {
        let mut lines = s.lines();
        let n: usize = lines
            .next()
            .ok_or_else(|| Error::MalformedData("empty graph CSV".into()))?
            .trim()
            .parse()
            .map_err(|e| Error::MalformedData(format!("bad node count: {e}")))?;
        let mut a = Array2::zeros((n, n));
        for i in 0..n {
            let line = lines
                .next()
                .ok_or_else(|| Error::MalformedData(format!("graph CSV ends at row {i}")))?;
            let mut count = 0;
            for (j, tok) in line.split(',').enumerate() {
                if j >= n {
                    return Err(Error::MalformedData(format!("row {i} has extra columns")));
                }
                a[[i, j]] = parse_float(tok)?;
                count += 1;
            }
            if count != n {
                return Err(Error::MalformedData(format!(
                    "row {i} has {count} columns, expected {n}"
                )));
            }
        }
        WeightedGraph::new(a)
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        Self::from_csv_string(&std::fs::read_to_string(path)?)
    }
}

/// A piecewise-constant function on the uniform partition of size `n`:
/// `η(u)(x) = Σ u_i χ_{P_i}(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepFunction {
    values: Array1<f64>,
}

impl StepFunction {
    pub fn new(values: Array1<f64>) -> Self {
        assert!(!values.is_empty());
        StepFunction { values }
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &Array1<f64> {
        &self.values
    }

    pub fn at(&self, x: f64) -> f64 {
        self.values[grid::cell_index(self.n(), x)]
    }

    /// `‖η(u)‖₂ = sqrt((1/n) Σ u_i²)`.
    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(|&v| v * v).sum::<f64>() / self.n() as f64).sqrt()
    }

    /// One-column CSV with a `value` header, 17 significant digits.
    pub fn to_csv_string(&self) -> String {
        let mut s = String::from("value\n");
        for &v in &self.values {
            let _ = writeln!(s, "{}", format_float(v));
        }
        s
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv_string())?;
        Ok(())
    }

    pub fn from_csv_string(s: &str) -> Result<Self> {
        let mut lines = s.lines();
        match lines.next() {
            Some("value") => {}
            other => {
                return Err(Error::MalformedData(format!(
                    "step function CSV must start with a 'value' header, got {other:?}"
                )))
            }
        }
        let mut values = Vec::new();
        for line in lines {
            values.push(parse_float(line)?);
        }
        if values.is_empty() {
            return Err(Error::MalformedData("step function CSV has no rows".into()));
        }
        Ok(StepFunction::new(Array1::from_vec(values)))
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        Self::from_csv_string(&std::fs::read_to_string(path)?)
    }
}

pub(crate) fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

pub(crate) fn parse_float(tok: &str) -> Result<f64> {
    let v: f64 = tok
        .trim()
        .parse()
        .map_err(|e| Error::MalformedData(format!("bad float {tok:?}: {e}")))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::MalformedData(format!("non-finite value {tok:?}")))
    }
}

/// The quotient graph `W/𝒫`: `A_ij = n² ∬_{P_i × P_j} W`, approximated with
/// `m × m` midpoint samples per cell.
///
/// Exact whenever `W` is a step graphon on a partition whose size divides
/// `n·m`; indicator families with boundaries crossing cells see an `O(1/m)`
/// error on those cells.
pub fn quotient_graph(w: &Graphon, n: usize, m: usize) -> WeightedGraph {
    assert!(n >= 1 && m >= 1);
    let nm = n * m;
    let sub: Vec<f64> = (0..m).map(|a| (a as f64 + 0.5) / nm as f64).collect();
    let mut a = Array2::zeros((n, n));
    for i in 0..n {
        let x0 = i as f64 / n as f64;
        for j in i..n {
            let y0 = j as f64 / n as f64;
            let mut acc = 0.0;
            for dx in &sub {
                let x = x0 + dx;
                for dy in &sub {
                    acc += w.eval(x, y0 + dy);
                }
            }
            let v = acc / (m * m) as f64;
            a[[i, j]] = v;
            a[[j, i]] = v;
        }
    }
    WeightedGraph::new(a).expect("cell means of a graphon stay in [0, 1]")
}

/// The sampled graph `W_[n]`: `A_ij = W(i/n, j/n)` with `i/n ∈ (0, 1]`.
///
/// Families with jumps aligned to cell boundaries (block, step) are evaluated
/// at `i/n − ε` so that a sample landing exactly on a boundary belongs to the
/// cell it closes; in particular `sampled_graph(step_graphon(G), G.n())`
/// recovers `G` exactly.
pub fn sampled_graph(w: &Graphon, n: usize) -> WeightedGraph {
    assert!(n >= 1);
    let offset = if w.has_aligned_jumps() {
        JUMP_SAMPLE_OFFSET
    } else {
        0.0
    };
    let pts: Vec<f64> = (1..=n).map(|i| i as f64 / n as f64 - offset).collect();
    let mut a = Array2::zeros((n, n));
    for i in 0..n {
        for j in i..n {
            let v = w.eval(pts[i], pts[j]);
            a[[i, j]] = v;
            a[[j, i]] = v;
        }
    }
    WeightedGraph::new(a).expect("graphon samples stay in [0, 1]")
}

/// The step (empirical) graphon `η(G)` of a weighted graph.
pub fn step_graphon(g: &WeightedGraph) -> Graphon {
    Graphon::Step {
        graph: std::sync::Arc::new(g.clone()),
    }
}

/// Cell averages of an initial condition: `values[i] = n ∫_{P_i} g`,
/// approximated as the mean of `m` midpoint samples per cell.
pub fn average_initial_condition<F: Fn(f64) -> f64>(g: F, n: usize, m: usize) -> StepFunction {
    assert!(n >= 1 && m >= 1);
    let nm = n * m;
    let values = Array1::from_shape_fn(n, |i| {
        let x0 = i as f64 / n as f64;
        (0..m)
            .map(|a| g(x0 + (a as f64 + 0.5) / nm as f64))
            .sum::<f64>()
            / m as f64
    });
    StepFunction::new(values)
}

/// Replicate a step function onto a finer midpoint grid. The target
/// resolution must be a multiple of the step resolution; the `L²` norm is
/// preserved exactly.
pub fn refine_to_grid(u: &StepFunction, n_target: usize) -> Result<GridField> {
    let n = u.n();
    if n_target == 0 || !n_target.is_multiple_of(n) {
        return Err(Error::IncompatibleResolution {
            n,
            target: n_target,
        });
    }
    let rep = n_target / n;
    Ok(GridField::new(Array1::from_shape_fn(n_target, |i| {
        u.values()[i / rep]
    })))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphon::degree_function;
    use approx::assert_abs_diff_eq;

    #[test]
    fn quotient_constant() {
        let g = quotient_graph(&Graphon::constant(0.3).unwrap(), 5, 4);
        for &v in g.adjacency() {
            assert_abs_diff_eq!(v, 0.3, epsilon = 1e-15);
        }
    }

    #[test]
    fn quotient_separable_exact_cell_means() {
        // xy is bilinear, so one midpoint sample per cell is already the
        // exact cell mean ((2i−1)/2n)((2j−1)/2n).
        for m in [1_usize, 8] {
            let g = quotient_graph(&Graphon::separable(), 2, m);
            let a = g.adjacency();
            assert_abs_diff_eq!(a[[0, 0]], 1.0 / 16.0, epsilon = 1e-15);
            assert_abs_diff_eq!(a[[0, 1]], 3.0 / 16.0, epsilon = 1e-15);
            assert_abs_diff_eq!(a[[1, 1]], 9.0 / 16.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn quotient_stripe_band_geometry() {
        // Cells adjacent to the diagonal meet the band in a triangle of area
        // 1/32, so A = 16 · 1/32 = 1/2 up to the O(1/m) boundary bias; cells
        // two apart miss the band entirely.
        let m = 64;
        let g = quotient_graph(&Graphon::stripe(0.25).unwrap(), 4, m);
        let a = g.adjacency();
        assert!(
            (a[[0, 1]] - 0.5).abs() <= 0.5 / m as f64 + 1e-12,
            "{}",
            a[[0, 1]]
        );
        assert_eq!(a[[0, 2]], 0.0);
        assert_eq!(a[[0, 0]], 1.0);
    }

    #[test]
    fn quotient_exact_on_aligned_step_graphon() {
        let base = WeightedGraph::new(ndarray::array![[0.2, 0.7], [0.7, 1.0]]).unwrap();
        let eta = step_graphon(&base);
        let g = quotient_graph(&eta, 4, 3);
        for i in 0..4 {
            for j in 0..4 {
                assert_abs_diff_eq!(
                    g.adjacency()[[i, j]],
                    base.adjacency()[[i / 2, j / 2]],
                    epsilon = 1e-15
                );
            }
        }
    }

    #[test]
    fn sampled_separable() {
        let g = sampled_graph(&Graphon::separable(), 2);
        let a = g.adjacency();
        assert_eq!(a[[0, 0]], 0.25);
        assert_eq!(a[[0, 1]], 0.5);
        assert_eq!(a[[1, 1]], 1.0);
    }

    #[test]
    fn sampled_constant() {
        let g = sampled_graph(&Graphon::constant(0.4).unwrap(), 5);
        for &v in g.adjacency() {
            assert_eq!(v, 0.4);
        }
    }

    #[test]
    fn sampled_stripe_banded_pattern() {
        let g = sampled_graph(&Graphon::stripe(0.25).unwrap(), 4);
        for i in 0..4_usize {
            for j in 0..4_usize {
                let expect = if i.abs_diff(j) <= 1 { 1.0 } else { 0.0 };
                assert_eq!(g.adjacency()[[i, j]], expect);
            }
        }
    }

    #[test]
    fn sampled_step_graphon_round_trips() {
        let base = WeightedGraph::new(ndarray::array![
            [0.0, 0.5, 0.25],
            [0.5, 1.0, 0.125],
            [0.25, 0.125, 0.75]
        ])
        .unwrap();
        let back = sampled_graph(&step_graphon(&base), 3);
        assert_eq!(back.adjacency(), base.adjacency());
    }

    #[test]
    fn step_graphon_of_constant_quotient() {
        let g = quotient_graph(&Graphon::constant(0.6).unwrap(), 8, 2);
        let eta = step_graphon(&g);
        assert_eq!(eta.eval(0.13, 0.77), 0.6);
    }

    #[test]
    fn strength_degree_identity() {
        // str(v_i) = n k_η(x) for x ∈ P_i, to machine precision.
        let g = quotient_graph(&Graphon::stripe(0.25).unwrap(), 8, 4);
        let eta = step_graphon(&g);
        let n = g.n() as f64;
        for i in 0..g.n() {
            let x = grid::midpoint(g.n(), i);
            let k_eta = eta.degree_closed_form(x).unwrap();
            assert_abs_diff_eq!(g.strength(i), n * k_eta, epsilon = 1e-13);
            // and the sampled degree of the step graphon agrees when the
            // quadrature grid is a multiple of the partition
            let kd = degree_function(&eta, 4 * g.n());
            assert_abs_diff_eq!(kd.samples()[4 * i], k_eta, epsilon = 1e-13);
        }
    }

    #[test]
    fn checkerboard_two_node_graph() {
        let g = WeightedGraph::new(ndarray::array![[0.0, 1.0], [1.0, 0.0]]).unwrap();
        let eta = step_graphon(&g);
        assert_eq!(eta.eval(0.25, 0.75), 1.0);
        assert_eq!(eta.eval(0.25, 0.25), 0.0);
        let k = degree_function(&eta, 16);
        for &v in k.samples() {
            assert_eq!(v, 0.5);
        }
    }

    #[test]
    fn average_initial_condition_values() {
        let ones = average_initial_condition(|_| 1.0, 7, 3);
        for &v in ones.values() {
            assert_eq!(v, 1.0);
        }
        let ramp = average_initial_condition(|x| x, 2, 5);
        assert_abs_diff_eq!(ramp.values()[0], 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(ramp.values()[1], 0.75, epsilon = 1e-15);
        let cosine = average_initial_condition(|x| (2.0 * std::f64::consts::PI * x).cos(), 1, 8);
        assert!(cosine.values()[0].abs() <= 1e-15);
    }

    #[test]
    fn refine_replicates_and_preserves_l2() {
        let u = StepFunction::new(ndarray::array![1.0, 3.0]);
        let f = refine_to_grid(&u, 4).unwrap();
        assert_eq!(f.values().to_vec(), vec![1.0, 1.0, 3.0, 3.0]);
        assert_eq!(f.l2_norm(), u.l2_norm());

        let zero = StepFunction::new(ndarray::array![0.0]);
        let z = refine_to_grid(&zero, 8).unwrap();
        assert!(z.values().iter().all(|&v| v == 0.0));

        match refine_to_grid(&u, 7) {
            Err(Error::IncompatibleResolution { n: 2, target: 7 }) => {}
            other => panic!("expected IncompatibleResolution, got {other:?}"),
        }
    }

    #[test]
    fn graph_csv_round_trip() {
        let g = quotient_graph(&Graphon::stripe(0.25).unwrap(), 6, 8);
        let s = g.to_csv_string();
        let back = WeightedGraph::from_csv_string(&s).unwrap();
        assert_eq!(back.adjacency(), g.adjacency());
        // bit-exact: re-serialization is byte-identical
        assert_eq!(back.to_csv_string(), s);
    }

    #[test]
    fn step_csv_round_trip() {
        let u = average_initial_condition(|x| 1.0 / 3.0 + x.sin() / 7.0, 9, 4);
        let s = u.to_csv_string();
        let back = StepFunction::from_csv_string(&s).unwrap();
        assert_eq!(back.values(), u.values());
    }

    #[test]
    fn graph_csv_rejects_malformed() {
        assert!(WeightedGraph::from_csv_string("").is_err());
        assert!(WeightedGraph::from_csv_string("2\n0.0,1.0\n").is_err());
        assert!(WeightedGraph::from_csv_string("2\n0.0,1.0\n1.0\n").is_err());
        // asymmetric
        assert!(WeightedGraph::from_csv_string("2\n0.0,1.0\n0.5,0.0\n").is_err());
        // out of range
        assert!(WeightedGraph::from_csv_string("1\n1.5\n").is_err());
    }

    #[test]
    fn quotient_consistency_lipschitz_families() {
        // ‖η(W/𝒫) − W‖₂ decreases from n to 2n and respects the Lip(W)/n
        // bound for the smooth built-ins (block graphons aligned with the
        // grid are exact).
        let cases: Vec<(Graphon, f64)> = vec![
            (Graphon::constant(0.4).unwrap(), 0.0),
            (Graphon::separable(), 2.0),
            (
                Graphon::uniform_block(ndarray::array![[0.8, 0.3], [0.3, 0.6]]).unwrap(),
                0.0,
            ),
        ];
        let n_ref = 256;
        for (w, lip) in cases {
            let mut prev = f64::INFINITY;
            for n in [8_usize, 16, 32] {
                let eta = step_graphon(&quotient_graph(&w, n, 8));
                let dist =
                    crate::graphon::lp_norm(|x, y| eta.eval(x, y) - w.eval(x, y), 2.0, n_ref);
                assert!(
                    dist <= lip / n as f64 + 1e-12,
                    "{}: {dist}",
                    w.family_name()
                );
                assert!(dist <= prev + 1e-15);
                prev = dist;
            }
        }
    }

    #[test]
    fn sampling_consistency_monotone() {
        // ‖η(W_[n]) − W‖₂ decreases along n for a.e.-continuous families.
        let n_ref = 512;
        for w in [
            Graphon::separable(),
            Graphon::stripe(0.25).unwrap(),
            Graphon::threshold(2.0).unwrap(),
        ] {
            let mut prev = f64::INFINITY;
            for n in [8_usize, 16, 32, 64] {
                let eta = step_graphon(&sampled_graph(&w, n));
                let dist =
                    crate::graphon::lp_norm(|x, y| eta.eval(x, y) - w.eval(x, y), 2.0, n_ref);
                assert!(dist < prev, "{}: {dist} at n = {n}", w.family_name());
                prev = dist;
            }
        }
    }

    #[test]
    fn quotient_positivity_under_degree_bound() {
        // Connected graphon with k ≥ c: every quotient cell degree keeps the
        // same floor (the band indicator only gains mass from the closed
        // boundary under midpoint sampling).
        let w = Graphon::stripe(0.25).unwrap();
        for n in [4_usize, 8, 16] {
            let g = quotient_graph(&w, n, 8);
            for i in 0..n {
                let cell_degree = g.strength(i) / n as f64;
                assert!(cell_degree >= 0.25 - 1e-12, "cell {i}: {cell_degree}");
            }
        }
    }
}
