//! Random walks on dense weighted graphs and their graphon continuum limits.
//!
//! A graphon is a symmetric measurable function `W: [0,1]² → [0,1]`, the limit
//! object of a sequence of dense graphs. This crate implements the machinery
//! needed to move between the two worlds and to compare dynamics on them:
//!
//! - [`graphon`]: built-in graphon families, degree functions `k(x) = ∫W(x,y)dy`,
//!   the random-walk kernel `K(x,y) = W(x,y)/k(y)`, norms, operator products,
//!   and structural checks (symmetry, range, connectivity, degree lower bound).
//! - [`discretize`]: graphon → graph (quotient `W/𝒫` and sampled `W_[n]`) and
//!   graph → graphon (step graphon `η(G)`), plus cell-averaged initial data.
//! - [`walks`]: finite-graph dynamics — transition matrices, random-walk and
//!   scaled combinatorial Laplacians, exact evolution, and event-driven Monte
//!   Carlo simulation of individual walkers.
//! - [`solver`]: Nyström discretization of the continuum operators, spectral
//!   decomposition of the normalized adjacency, and two independent routes for
//!   the evolution equation `∂w/∂t = 𝒦w − w` (spectral sum and matrix
//!   exponential), with steady states, spectral gaps and relaxation times.
//! - [`convergence`]: discrete-vs-continuum experiments measuring
//!   `‖u(·,t) − w(·,t)‖₂` against the explicit exponential error bounds.
//! - [`config`]: plain-text configuration records for graphon families, shared
//!   by the CLI and any other front end.
//!
//! All quadrature is composite midpoint on uniform grids: a function on `[0,1]`
//! is represented by its values at `x_i = (i − 1/2)/N`, and integrals become
//! `(1/N) Σ`. Step functions aligned with the grid are integrated exactly,
//! which the spectral identities below rely on.
//!
//! ```
//! use graphon_walks::{degree_function, Graphon};
//! use graphon_walks::solver::{solve_ivp_spectral, spectral_decomposition_of, GridField};
//!
//! // the band graphon W(x,y) = 1 iff |x - y| <= 1/4
//! let w = Graphon::stripe(0.25)?;
//! let n = 128;
//! assert!((degree_function(&w, n).min_value() - 0.25).abs() < 0.01);
//!
//! // relax a density toward the steady state proportional to the degree
//! let dec = spectral_decomposition_of(&w, n)?;
//! let g = GridField::from_fn(n, |x| 1.0 + 0.5 * (2.0 * std::f64::consts::PI * x).cos());
//! let sol = solve_ivp_spectral(&g, &dec, &[0.0, 1.0, 10.0], None)?;
//! assert!((sol.fields[2].l1_mass() - g.l1_mass()).abs() < 1e-10);
//! # Ok::<(), graphon_walks::Error>(())
//! ```

pub mod config;
pub mod convergence;
pub mod discretize;
pub mod error;
pub mod graphon;
pub mod grid;
pub(crate) mod linalg;
pub mod solver;
pub mod walks;

pub use error::{Error, Result};
pub use graphon::{
    check_degree_bound, cut_norm_interval_estimate, degree_function, is_connected, kernel, lp_norm,
    operator_product, DegreeBoundCheck, DegreeFunction, Graphon, KernelEvaluator,
    DEFAULT_DEGREE_FLOOR,
};
