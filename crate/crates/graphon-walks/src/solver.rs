//! Nyström discretization and solution of the continuum evolution problem
//! `∂w/∂t = 𝒦w − w`, `w(·, 0) = g`, where `𝒦f(x) = ∫ W(x,y)/k(y) f(y) dy`.
//!
//! Two independent routes compute the same semigroup:
//!
//! 1. **Spectral.** The normalized adjacency operator with kernel
//!    `W(x,y)/√(k(x)k(y))` is symmetric, so it has an orthonormal eigenbasis
//!    `{φ_m}` with real eigenvalues `θ_m`. With `λ_m = θ_m − 1`,
//!    `ψ_m = φ_m/√k` and `ζ_m = √k·φ_m`, the solution is the mode sum
//!    `w(x,t) = Σ e^{λ_m t} (ψ_m, g) ζ_m(x)`.
//! 2. **Exponential.** `w(t) = e^{−t} · exp(t𝒦) g` with the matrix
//!    exponential evaluated by Padé scaling and squaring, never touching an
//!    eigendecomposition.
//!
//! The Nyström grid is the same midpoint grid as everywhere else, and the
//! degree samples used inside the kernels are the quadrature degrees of that
//! same grid. That pairing makes `𝒦k = k` and `θ₁ = 1` exact up to rounding,
//! so spectra of connected graphons have a genuinely simple zero eigenvalue
//! instead of one smeared by quadrature error.
//!
//! The separable family `W(x,y) = xy` has `k(x) = x/2` vanishing at 0, which
//! rules out the symmetric route (`1/√k` unbounded); its kernel `K = 2x` is
//! bounded, though, and [`kernel_spectrum`] eigensolves `𝒦` directly in its
//! nonsymmetric form for exactly this situation.

use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2};
use ndarray_linalg::{c64, Eig};

use crate::discretize::format_float;
use crate::error::{Error, Result};
use crate::graphon::{
    check_degree_bound, degree_function, kernel, DegreeFunction, Graphon, DEFAULT_DEGREE_FLOOR,
};
use crate::grid;
use crate::linalg;

/// Tolerance below which `|λ₂|` counts as a vanished spectral gap.
pub const ZERO_GAP_TOLERANCE: f64 = 1e-12;

/// Tolerance for counting multiplicity of the zero eigenvalue of `𝓛`.
pub const ZERO_MODE_TOLERANCE: f64 = 1e-8;

/// An `L²[0,1]` function sampled at the `N` midpoint nodes `x_i = (i−1/2)/N`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    values: Array1<f64>,
}

impl GridField {
    pub fn new(values: Array1<f64>) -> Self {
        assert!(!values.is_empty());
        GridField { values }
    }

    pub fn from_fn<F: Fn(f64) -> f64>(n: usize, f: F) -> Self {
        GridField::new(Array1::from_shape_fn(n, |i| f(grid::midpoint(n, i))))
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &Array1<f64> {
        &self.values
    }

    /// `‖f‖₂ = sqrt((1/N) Σ f_i²)`.
    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(|&v| v * v).sum::<f64>() / self.n() as f64).sqrt()
    }

    /// `∫ f = (1/N) Σ f_i`.
    pub fn l1_mass(&self) -> f64 {
        self.values.sum() / self.n() as f64
    }

    /// `(f, g) = (1/N) Σ f_i g_i`.
    pub fn inner(&self, other: &GridField) -> f64 {
        assert_eq!(self.n(), other.n());
        self.values
            .iter()
            .zip(other.values.iter())
            .map(|(&a, &b)| a * b)
            .sum::<f64>()
            / self.n() as f64
    }

    /// `‖f − g‖₂`.
    pub fn l2_distance(&self, other: &GridField) -> f64 {
        assert_eq!(self.n(), other.n());
        (self
            .values
            .iter()
            .zip(other.values.iter())
            .map(|(&a, &b)| (a - b) * (a - b))
            .sum::<f64>()
            / self.n() as f64)
            .sqrt()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

/// Nyström discretization of the compact operator
/// `𝒦f(x) = ∫ K(x,y) f(y) dy` on the midpoint grid: `Kmat[i][j] = K(x_i, x_j)`
/// together with the degree samples `kvals`, acting as `(Kmat · f)/N`.
#[derive(Debug, Clone)]
pub struct KernelMatrix {
    kmat: Array2<f64>,
    kvals: Array1<f64>,
}

impl KernelMatrix {
    pub fn n(&self) -> usize {
        self.kmat.nrows()
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.kmat
    }

    pub fn degree_samples(&self) -> &Array1<f64> {
        &self.kvals
    }

    /// Apply `𝒦` to a grid field: `(1/N) Σ_j K(x_i, x_j) f_j`.
    pub fn apply(&self, f: &GridField) -> GridField {
        assert_eq!(self.n(), f.n());
        GridField::new(self.kmat.dot(f.values()) / self.n() as f64)
    }
}

/// Build the Nyström kernel matrix for `𝒦`.
///
/// Families with a bounded closed-form kernel (separable, constant) sample it
/// directly; all others divide the grid samples of `W` by the quadrature
/// degree of the same grid, after checking it stays above the floor.
pub fn build_kernel_matrix(w: &Graphon, n: usize) -> Result<KernelMatrix> {
    assert!(n >= 2);
    let k = degree_function(w, n);
    let ker = kernel(w, &k)?;
    Ok(KernelMatrix {
        kmat: ker.grid_matrix(n),
        kvals: k.samples().clone(),
    })
}

/// Grid samples of the normalized adjacency kernel
/// `S(x,y) = W(x,y)/√(k(x) k(y))`, exactly symmetric by construction.
pub fn normalized_adjacency(w: &Graphon, n: usize) -> Result<Array2<f64>> {
    let k = degree_function(w, n);
    if !check_degree_bound(&k, DEFAULT_DEGREE_FLOOR).is_pass() {
        return Err(Error::DegreeTooSmall {
            min: k.min_value(),
            floor: DEFAULT_DEGREE_FLOOR,
        });
    }
    let mut s = w.grid_matrix(n);
    let inv_sqrt: Array1<f64> = k.samples().mapv(|v| 1.0 / v.sqrt());
    for i in 0..n {
        for j in 0..n {
            s[[i, j]] *= inv_sqrt[i] * inv_sqrt[j];
        }
    }
    Ok(s)
}

/// Eigenstructure of the discretized normalized adjacency, carrying both the
/// orthonormal basis `φ_m` and the transformed bases `ψ_m = φ_m/√k`,
/// `ζ_m = √k·φ_m` that diagonalize the random-walk semigroup.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    thetas: Array1<f64>,
    lambdas: Array1<f64>,
    phis: Array2<f64>,
    psis: Array2<f64>,
    zetas: Array2<f64>,
    degree: Array1<f64>,
    gap: f64,
}

impl SpectralDecomposition {
    pub fn n(&self) -> usize {
        self.thetas.len()
    }

    /// Eigenvalues of the normalized adjacency, descending.
    pub fn thetas(&self) -> &Array1<f64> {
        &self.thetas
    }

    /// Eigenvalues `λ_m = θ_m − 1` of the normalized Laplacian, descending.
    pub fn lambdas(&self) -> &Array1<f64> {
        &self.lambdas
    }

    /// Orthonormal eigenvectors in the `(1/N)`-weighted inner product
    /// (columns).
    pub fn phis(&self) -> &Array2<f64> {
        &self.phis
    }

    pub fn psis(&self) -> &Array2<f64> {
        &self.psis
    }

    pub fn zetas(&self) -> &Array2<f64> {
        &self.zetas
    }

    pub fn degree_samples(&self) -> &Array1<f64> {
        &self.degree
    }

    /// `−λ₂`, the distance from the top of the spectrum to the rest.
    pub fn gap(&self) -> f64 {
        self.gap
    }

    /// Number of eigenvalues within `tol` of zero; more than one signals a
    /// disconnected (or degenerate) graphon whose components should be
    /// analyzed separately.
    pub fn zero_multiplicity(&self, tol: f64) -> usize {
        self.lambdas.iter().filter(|&&l| l > -tol).count()
    }

    /// Eigenvalue CSV: `m,theta,lambda` with 17 significant digits.
    pub fn eigenvalues_csv(&self) -> String {
        let mut s = String::from("m,theta,lambda\n");
        for (m, (&t, &l)) in self.thetas.iter().zip(self.lambdas.iter()).enumerate() {
            let _ = writeln!(s, "{},{},{}", m + 1, format_float(t), format_float(l));
        }
        s
    }

    pub fn write_eigenvalues_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.eigenvalues_csv())?;
        Ok(())
    }
}

/// Full symmetric eigensolve of the `(1/N)`-weighted normalized adjacency.
///
/// The returned `φ_m` satisfy `(1/N) Φᵀ Φ = I`; `ψ` and `ζ` are pointwise
/// scalings by `1/√k` and `√k`.
pub fn spectral_decomposition(
    s: &Array2<f64>,
    k: &DegreeFunction,
) -> Result<SpectralDecomposition> {
    let n = s.nrows();
    if k.resolution() != n {
        return Err(Error::IncompatibleResolution {
            n: k.resolution(),
            target: n,
        });
    }
    let b = s / n as f64;
    let (thetas, vecs) = linalg::symmetric_eig_desc(&b)?;
    let scale = (n as f64).sqrt();
    let phis = &vecs * scale;
    let sqrt_k = k.samples().mapv(f64::sqrt);
    let mut psis = phis.clone();
    let mut zetas = phis.clone();
    for i in 0..n {
        let sk = sqrt_k[i];
        psis.row_mut(i).mapv_inplace(|v| v / sk);
        zetas.row_mut(i).mapv_inplace(|v| v * sk);
    }
    let lambdas = thetas.mapv(|t| t - 1.0);
    let gap = if n > 1 { -lambdas[1] } else { 0.0 };
    Ok(SpectralDecomposition {
        thetas,
        lambdas,
        phis,
        psis,
        zetas,
        degree: k.samples().clone(),
        gap,
    })
}

/// Convenience: degree, normalized adjacency and spectral decomposition of a
/// graphon at resolution `n` in one call.
pub fn spectral_decomposition_of(w: &Graphon, n: usize) -> Result<SpectralDecomposition> {
    let s = normalized_adjacency(w, n)?;
    let k = degree_function(w, n);
    spectral_decomposition(&s, &k)
}

/// Eigenvalues and eigenvectors of the discretized `𝒦` itself (nonsymmetric
/// solve), sorted by descending `|θ|`.
///
/// This is the route for families whose degree vanishes somewhere but whose
/// kernel stays bounded, where the similarity to the symmetric normalized
/// adjacency breaks down.
pub fn kernel_spectrum(km: &KernelMatrix) -> Result<(Array1<c64>, Array2<c64>)> {
    crate::linalg::ensure_serial_blas();
    let n = km.n();
    let op = km.matrix() / n as f64;
    let (vals, vecs) = op.eig()?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        vals[b]
            .norm()
            .partial_cmp(&vals[a].norm())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let sorted_vals = Array1::from_shape_fn(n, |i| vals[order[i]]);
    let mut sorted_vecs = Array2::zeros((n, n));
    for (i, &o) in order.iter().enumerate() {
        sorted_vecs.column_mut(i).assign(&vecs.column(o));
    }
    Ok((sorted_vals, sorted_vecs))
}

/// Which route produced an [`IVPSolution`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    Spectral,
    Exponential,
}

impl SolveMethod {
    pub fn name(&self) -> &'static str {
        match self {
            SolveMethod::Spectral => "spectral",
            SolveMethod::Exponential => "exponential",
        }
    }
}

/// A solved trajectory: fields at the requested times.
#[derive(Debug, Clone)]
pub struct IVPSolution {
    pub times: Vec<f64>,
    pub fields: Vec<GridField>,
    pub method: SolveMethod,
    pub modes_used: usize,
}

impl IVPSolution {
    pub fn n(&self) -> usize {
        self.fields[0].n()
    }

    /// CSV with header `t,v1,...,vN`.
    pub fn to_csv_string(&self) -> String {
        let n = self.n();
        let mut s = String::from("t");
        for i in 1..=n {
            let _ = write!(s, ",v{i}");
        }
        s.push('\n');
        for (t, f) in self.times.iter().zip(self.fields.iter()) {
            let _ = write!(s, "{}", format_float(*t));
            for &v in f.values() {
                let _ = write!(s, ",{}", format_float(v));
            }
            s.push('\n');
        }
        s
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv_string())?;
        Ok(())
    }

    /// Compact binary record: `u64 N`, `u64 T`, then `T` times and `T×N`
    /// field values as little-endian `f64`, time-major.
    pub fn write_binary(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(&(self.n() as u64).to_le_bytes())?;
        f.write_all(&(self.times.len() as u64).to_le_bytes())?;
        for &t in &self.times {
            f.write_all(&t.to_le_bytes())?;
        }
        for field in &self.fields {
            for &v in field.values() {
                f.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    /// Read a binary record back. The record does not carry the producing
    /// method or mode count; the returned metadata is a placeholder.
    pub fn read_binary(path: &Path) -> Result<IVPSolution> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        let mut pos = 0usize;
        let mut take_u64 = |bytes: &[u8]| -> Result<u64> {
            let end = pos + 8;
            let chunk = bytes
                .get(pos..end)
                .ok_or_else(|| Error::MalformedData("binary record truncated".into()))?;
            pos = end;
            Ok(u64::from_le_bytes(chunk.try_into().unwrap()))
        };
        let n = take_u64(&bytes)? as usize;
        let t_count = take_u64(&bytes)? as usize;
        let need = 16 + 8 * (t_count + t_count * n);
        if bytes.len() != need {
            return Err(Error::MalformedData(format!(
                "binary record has {} bytes, expected {need}",
                bytes.len()
            )));
        }
        let read_f64 = |off: usize| f64::from_le_bytes(bytes[off..off + 8].try_into().unwrap());
        let mut times = Vec::with_capacity(t_count);
        for i in 0..t_count {
            times.push(read_f64(16 + 8 * i));
        }
        let mut fields = Vec::with_capacity(t_count);
        let base = 16 + 8 * t_count;
        for ti in 0..t_count {
            let values = Array1::from_shape_fn(n, |i| read_f64(base + 8 * (ti * n + i)));
            fields.push(GridField::new(values));
        }
        Ok(IVPSolution {
            times,
            fields,
            method: SolveMethod::Spectral,
            modes_used: 0,
        })
    }
}

/// Solve the evolution problem by the truncated mode sum
/// `w(x, t) = Σ_m e^{λ_m t} (ψ_m, g) ζ_m(x)`.
///
/// `modes = None` keeps every mode whose contribution at the earliest time
/// exceeds `1e−12 · ‖g‖₂` (scanning in descending `θ` order); `Some(m)` forces
/// a fixed truncation.
pub fn solve_ivp_spectral(
    g: &GridField,
    dec: &SpectralDecomposition,
    times: &[f64],
    modes: Option<usize>,
) -> Result<IVPSolution> {
    let n = dec.n();
    if g.n() != n {
        return Err(Error::IncompatibleResolution {
            n: g.n(),
            target: n,
        });
    }
    if times.is_empty() || times[0] < 0.0 || times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidConfig(
            "times must be nonnegative and nondecreasing".into(),
        ));
    }
    // (ψ_m, g) in the (1/N)-weighted inner product.
    let coeffs = dec.psis().t().dot(g.values()) / n as f64;
    let g_norm = g.l2_norm();
    let m_used = match modes {
        Some(m) => m.min(n),
        None => {
            let t_min = times[0];
            let mut m_used = n;
            for m in 0..n {
                let zeta_norm =
                    (dec.zetas().column(m).iter().map(|&v| v * v).sum::<f64>() / n as f64).sqrt();
                let weight = (dec.lambdas()[m] * t_min).exp() * coeffs[m].abs() * zeta_norm;
                if weight < 1e-12 * g_norm {
                    m_used = m;
                    break;
                }
            }
            m_used.max(1)
        }
    };
    let zetas = dec.zetas().slice(ndarray::s![.., 0..m_used]);
    let mut fields = Vec::with_capacity(times.len());
    for &t in times {
        let weighted = Array1::from_shape_fn(m_used, |m| (dec.lambdas()[m] * t).exp() * coeffs[m]);
        fields.push(GridField::new(zetas.dot(&weighted)));
    }
    Ok(IVPSolution {
        times: times.to_vec(),
        fields,
        method: SolveMethod::Spectral,
        modes_used: m_used,
    })
}

/// Solve the evolution problem through the semigroup's power series:
/// `w(t) = e^{−t} · exp(t𝒦) g`, with `exp(t𝒦)` by Padé scaling and squaring.
///
/// Shares no code path with the spectral route, which makes the two mutually
/// cross-checking.
pub fn solve_ivp_exponential(g: &GridField, km: &KernelMatrix, t: f64) -> Result<GridField> {
    if t.is_nan() || t < 0.0 {
        return Err(Error::InvalidConfig(format!(
            "evolution time must be nonnegative, got {t}"
        )));
    }
    let n = km.n();
    if g.n() != n {
        return Err(Error::IncompatibleResolution {
            n: g.n(),
            target: n,
        });
    }
    let op = km.matrix() * (t / n as f64);
    let e = linalg::expm(&op)?;
    Ok(GridField::new(e.dot(g.values()) * (-t).exp()))
}

/// Relaxation time `τ = 1/gap = −1/λ₂` of the continuum walk.
pub fn relaxation_time(dec: &SpectralDecomposition) -> Result<f64> {
    if dec.gap() < ZERO_GAP_TOLERANCE {
        return Err(Error::ZeroGap);
    }
    Ok(1.0 / dec.gap())
}

/// Steady state `w_∞ = k · ∫g / ∫k` the evolution relaxes to.
pub fn steady_state(g: &GridField, dec: &SpectralDecomposition) -> GridField {
    let k = dec.degree_samples();
    let k_mass = k.sum() / k.len() as f64;
    let scale = g.l1_mass() / k_mass;
    GridField::new(k * scale)
}

/// Discrete-time iteration `w(·, ℓ) = 𝒦^ℓ w₀` by repeated application.
pub fn discrete_time_step(w0: &GridField, km: &KernelMatrix, steps: usize) -> GridField {
    let mut w = w0.clone();
    for _ in 0..steps {
        w = km.apply(&w);
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphon::Graphon;
    use approx::assert_abs_diff_eq;

    fn stripe() -> Graphon {
        Graphon::stripe(0.25).unwrap()
    }

    fn cos_field(n: usize) -> GridField {
        GridField::from_fn(n, |x| 1.0 + 0.5 * (2.0 * std::f64::consts::PI * x).cos())
    }

    #[test]
    fn kernel_matrix_constant_is_averaging() {
        let km = build_kernel_matrix(&Graphon::constant(0.5).unwrap(), 32).unwrap();
        for &v in km.matrix() {
            assert_eq!(v, 1.0);
        }
        let f = GridField::from_fn(32, |x| x * x);
        let out = km.apply(&f);
        let mean = f.l1_mass();
        for &v in out.values() {
            assert_abs_diff_eq!(v, mean, epsilon = 1e-15);
        }
    }

    #[test]
    fn kernel_matrix_separable_closed_form() {
        let km = build_kernel_matrix(&Graphon::separable(), 16).unwrap();
        for i in 0..16 {
            let x = grid::midpoint(16, i);
            for j in 0..16 {
                assert_eq!(km.matrix()[[i, j]], 2.0 * x);
            }
        }
    }

    #[test]
    fn kernel_fixes_degree() {
        // 𝒦k = k exactly when the degree samples come from the same grid.
        for w in [stripe(), Graphon::threshold(2.0).unwrap()] {
            let n = 64;
            let km = build_kernel_matrix(&w, n).unwrap();
            let k_field = GridField::new(km.degree_samples().clone());
            let out = km.apply(&k_field);
            let rel = out.l2_distance(&k_field) / k_field.l2_norm();
            assert!(rel <= 1e-14, "{}: residual {rel}", w.family_name());
        }
    }

    #[test]
    fn normalized_adjacency_values() {
        let s = normalized_adjacency(&Graphon::constant(0.5).unwrap(), 16).unwrap();
        for &v in &s {
            assert_abs_diff_eq!(v, 1.0, epsilon = 1e-13);
        }

        let blocks = Graphon::uniform_block(ndarray::array![[0.5, 0.0], [0.0, 0.5]]).unwrap();
        let sb = normalized_adjacency(&blocks, 16).unwrap();
        for i in 0..16 {
            for j in 0..16 {
                let same = (i < 8) == (j < 8);
                if same {
                    assert_abs_diff_eq!(sb[[i, j]], 2.0, epsilon = 1e-12);
                } else {
                    assert_eq!(sb[[i, j]], 0.0);
                }
            }
        }

        // Stripe corner: k(0) = 1/4, so S(0,0) ≈ 4 up to the O(1/n) quadrature
        // shift of the sampled degree.
        let n = 256;
        let ss = normalized_adjacency(&stripe(), n).unwrap();
        assert!(
            (ss[[0, 0]] - 4.0).abs() <= 4.0 * 8.0 / n as f64,
            "{}",
            ss[[0, 0]]
        );
    }

    #[test]
    fn spectral_decomposition_rank_one_constant() {
        let n = 256;
        let dec = spectral_decomposition_of(&Graphon::constant(0.5).unwrap(), n).unwrap();
        assert!(dec.lambdas()[0].abs() <= 1e-12);
        for m in 1..n {
            assert_abs_diff_eq!(dec.lambdas()[m], -1.0, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(relaxation_time(&dec).unwrap(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn spectral_decomposition_orthonormal_and_zero_mode() {
        let n = 128;
        let dec = spectral_decomposition_of(&stripe(), n).unwrap();
        // Orthonormality in the weighted inner product.
        let gram = dec.phis().t().dot(dec.phis()) / n as f64;
        for i in 0..n {
            for j in 0..n {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((gram[[i, j]] - expect).abs() <= 1e-10);
            }
        }
        // Simple zero mode with ζ₁ ∝ k.
        assert!(dec.lambdas()[0].abs() <= 1e-12);
        assert!(dec.lambdas()[1] < -1e-3);
        assert_eq!(dec.zero_multiplicity(ZERO_MODE_TOLERANCE), 1);
        let zeta1 = dec.zetas().column(0);
        let k = dec.degree_samples();
        let cos = zeta1.dot(k) / (zeta1.dot(&zeta1).sqrt() * k.dot(k).sqrt());
        assert!(cos.abs() > 1.0 - 1e-8, "cosine {cos}");
    }

    #[test]
    fn disconnected_blocks_have_double_zero_and_no_relaxation() {
        let w = Graphon::uniform_block(ndarray::array![[1.0, 0.0], [0.0, 1.0]]).unwrap();
        let dec = spectral_decomposition_of(&w, 64).unwrap();
        assert_eq!(dec.zero_multiplicity(ZERO_MODE_TOLERANCE), 2);
        match relaxation_time(&dec) {
            Err(Error::ZeroGap) => {}
            other => panic!("expected ZeroGap, got {other:?}"),
        }
    }

    #[test]
    fn spectral_reconstruction_at_time_zero() {
        let n = 128;
        let dec = spectral_decomposition_of(&stripe(), n).unwrap();
        let g = cos_field(n);
        let sol = solve_ivp_spectral(&g, &dec, &[0.0], Some(n)).unwrap();
        let rel = sol.fields[0].l2_distance(&g) / g.l2_norm();
        assert!(rel <= 1e-8, "reconstruction residual {rel}");
    }

    #[test]
    fn degree_is_stationary_under_flow() {
        let n = 96;
        let dec = spectral_decomposition_of(&stripe(), n).unwrap();
        let k_field = GridField::new(dec.degree_samples().clone());
        let sol = solve_ivp_spectral(&k_field, &dec, &[0.0, 0.5, 3.0, 10.0], None).unwrap();
        for f in &sol.fields {
            let rel = f.l2_distance(&k_field) / k_field.l2_norm();
            assert!(rel <= 1e-10, "drift {rel}");
        }
    }

    #[test]
    fn auto_truncation_stops_after_the_stationary_mode() {
        // g = k projects onto the zero mode only, so the auto rule keeps a
        // single mode.
        let n = 64;
        let dec = spectral_decomposition_of(&stripe(), n).unwrap();
        let k_field = GridField::new(dec.degree_samples().clone());
        let sol = solve_ivp_spectral(&k_field, &dec, &[1.0], None).unwrap();
        assert_eq!(sol.modes_used, 1);
        assert!(sol.fields[0].l2_distance(&k_field) <= 1e-12 * k_field.l2_norm());
    }

    #[test]
    fn long_time_limit_matches_steady_state_and_exponential_route() {
        let n = 96;
        let dec = spectral_decomposition_of(&stripe(), n).unwrap();
        let g = cos_field(n);
        let t_long = 10.0 / dec.gap();
        let w_spec = solve_ivp_spectral(&g, &dec, &[t_long], None)
            .unwrap()
            .fields[0]
            .clone();
        let w_inf = steady_state(&g, &dec);
        assert!(w_spec.l2_distance(&w_inf) <= 1e-3 * g.l2_norm());

        let km = build_kernel_matrix(&stripe(), n).unwrap();
        let w_exp = solve_ivp_exponential(&g, &km, t_long).unwrap();
        assert!(w_exp.l2_distance(&w_inf) <= 1e-3 * g.l2_norm());
    }

    #[test]
    fn spectral_and_exponential_routes_agree() {
        let n = 128;
        let w = stripe();
        let dec = spectral_decomposition_of(&w, n).unwrap();
        let km = build_kernel_matrix(&w, n).unwrap();
        let g = cos_field(n);
        for &t in &[0.1, 1.0, 10.0] {
            let a = solve_ivp_spectral(&g, &dec, &[t], Some(n)).unwrap().fields[0].clone();
            let b = solve_ivp_exponential(&g, &km, t).unwrap();
            let rel = a.l2_distance(&b) / g.l2_norm();
            assert!(rel <= 1e-8, "t = {t}: {rel}");
        }
    }

    #[test]
    fn positivity_and_mass_conservation() {
        let n = 128;
        let km = build_kernel_matrix(&stripe(), n).unwrap();
        let g = cos_field(n);
        for &t in &[0.1, 1.0, 10.0] {
            let w = solve_ivp_exponential(&g, &km, t).unwrap();
            assert!(w.min() >= -1e-10, "t = {t}: min {}", w.min());
            assert!((w.l1_mass() - g.l1_mass()).abs() <= 1e-10);
        }
    }

    #[test]
    fn semigroup_property() {
        let n = 96;
        let km = build_kernel_matrix(&stripe(), n).unwrap();
        let g = cos_field(n);
        let w_direct = solve_ivp_exponential(&g, &km, 1.5).unwrap();
        let w_mid = solve_ivp_exponential(&g, &km, 0.9).unwrap();
        let w_comp = solve_ivp_exponential(&w_mid, &km, 0.6).unwrap();
        let rel = w_direct.l2_distance(&w_comp) / g.l2_norm();
        assert!(rel <= 1e-9, "semigroup deviation {rel}");
    }

    #[test]
    fn relaxation_decay_law() {
        // ‖w(t) − w_∞‖₂ ≤ e^{λ₂ t} κ ‖g − w_∞‖₂ with κ = ‖√k‖_∞ ‖1/√k‖_∞.
        let n = 64;
        let dec = spectral_decomposition_of(&stripe(), n).unwrap();
        let g = cos_field(n);
        let w_inf = steady_state(&g, &dec);
        let kappa = {
            let k = dec.degree_samples();
            let max_sqrt = k.iter().map(|v| v.sqrt()).fold(0.0_f64, f64::max);
            let max_inv = k.iter().map(|v| 1.0 / v.sqrt()).fold(0.0_f64, f64::max);
            max_sqrt * max_inv
        };
        let g_dist = g.l2_distance(&w_inf);
        for &t in &[0.5, 1.0, 2.0, 5.0] {
            let w = solve_ivp_spectral(&g, &dec, &[t], None).unwrap().fields[0].clone();
            let bound = (dec.lambdas()[1] * t).exp() * kappa * g_dist;
            assert!(
                w.l2_distance(&w_inf) <= bound + 1e-12,
                "t = {t}: {} vs {bound}",
                w.l2_distance(&w_inf)
            );
        }
    }

    #[test]
    fn kernel_spectrum_separable_rank_one() {
        let n = 50;
        let km = build_kernel_matrix(&Graphon::separable(), n).unwrap();
        let (vals, vecs) = kernel_spectrum(&km).unwrap();
        assert!((vals[0].re - 1.0).abs() <= 1e-10 && vals[0].im.abs() <= 1e-12);
        for m in 1..n {
            assert!(vals[m].norm() <= 1e-10);
        }
        let xs = grid::midpoints(n);
        let v: Array1<f64> = vecs.column(0).mapv(|z| z.re);
        let cos = v.dot(&xs).abs() / (v.dot(&v).sqrt() * xs.dot(&xs).sqrt());
        assert!(cos > 1.0 - 1e-10, "cosine {cos}");
    }

    #[test]
    fn discrete_time_iteration() {
        let n = 64;
        let km = build_kernel_matrix(&stripe(), n).unwrap();
        let g = cos_field(n);
        assert_eq!(discrete_time_step(&g, &km, 0), g);

        let k_field = GridField::new(km.degree_samples().clone());
        let k5 = discrete_time_step(&k_field, &km, 5);
        assert!(k5.l2_distance(&k_field) / k_field.l2_norm() <= 1e-13);

        let km_const = build_kernel_matrix(&Graphon::constant(0.3).unwrap(), n).unwrap();
        let once = discrete_time_step(&g, &km_const, 1);
        for &v in once.values() {
            assert_abs_diff_eq!(v, g.l1_mass(), epsilon = 1e-14);
        }
    }

    #[test]
    fn discrete_time_matches_spectral_powers() {
        // 𝒦^ℓ w₀ = Σ θ_m^ℓ (ψ_m, w₀) ζ_m through the same similarity.
        let n = 48;
        let w = stripe();
        let km = build_kernel_matrix(&w, n).unwrap();
        let dec = spectral_decomposition_of(&w, n).unwrap();
        let g = cos_field(n);
        for &steps in &[1_usize, 3, 7] {
            let direct = discrete_time_step(&g, &km, steps);
            let coeffs = dec.psis().t().dot(g.values()) / n as f64;
            let weighted =
                Array1::from_shape_fn(n, |m| dec.thetas()[m].powi(steps as i32) * coeffs[m]);
            let modal = GridField::new(dec.zetas().dot(&weighted));
            let rel = direct.l2_distance(&modal) / g.l2_norm();
            assert!(rel <= 1e-10, "steps {steps}: {rel}");
        }
    }

    #[test]
    fn ivp_solution_binary_round_trip() {
        let n = 32;
        let dec = spectral_decomposition_of(&stripe(), n).unwrap();
        let g = cos_field(n);
        let sol = solve_ivp_spectral(&g, &dec, &[0.0, 0.4, 2.0], None).unwrap();
        let dir = std::env::temp_dir().join("graphon-walks-test-binary");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("sol.bin");
        sol.write_binary(&path).unwrap();
        let back = IVPSolution::read_binary(&path).unwrap();
        assert_eq!(back.times, sol.times);
        for (a, b) in back.fields.iter().zip(sol.fields.iter()) {
            assert_eq!(a.values(), b.values());
        }
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn solution_csv_has_documented_header() {
        let n = 4;
        let dec = spectral_decomposition_of(&Graphon::constant(0.5).unwrap(), n).unwrap();
        let g = GridField::from_fn(n, |x| x);
        let sol = solve_ivp_spectral(&g, &dec, &[0.0, 1.0], None).unwrap();
        let csv = sol.to_csv_string();
        assert!(csv.starts_with("t,v1,v2,v3,v4\n"));
        assert_eq!(csv.lines().count(), 3);
    }

    #[test]
    fn rejects_bad_times_and_mismatched_grids() {
        let n = 16;
        let dec = spectral_decomposition_of(&stripe(), n).unwrap();
        let g = cos_field(n);
        assert!(solve_ivp_spectral(&g, &dec, &[1.0, 0.5], None).is_err());
        assert!(solve_ivp_spectral(&g, &dec, &[], None).is_err());
        let g_bad = cos_field(n + 1);
        assert!(solve_ivp_spectral(&g_bad, &dec, &[0.0], None).is_err());
        let km = build_kernel_matrix(&stripe(), n).unwrap();
        assert!(solve_ivp_exponential(&g_bad, &km, 1.0).is_err());
        assert!(solve_ivp_exponential(&g, &km, -1.0).is_err());
    }
}
