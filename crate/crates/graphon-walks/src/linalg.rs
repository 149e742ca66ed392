//! Internal dense linear-algebra helpers: symmetric eigendecomposition in
//! descending order and a Padé scaling-and-squaring matrix exponential.

use std::sync::Once;

use ndarray::{Array1, Array2};
use ndarray_linalg::{Eigh, Inverse, UPLO};

use crate::error::Result;

extern "C" {
    fn openblas_set_num_threads(n: i32);
}

static SERIAL_BLAS: Once = Once::new();

/// Pin the BLAS backend to one thread before any LAPACK call.
///
/// The threaded OpenBLAS runtime needs several megabytes of calling-thread
/// stack, which test threads do not have, and its parallel reductions are not
/// byte-reproducible across machines with different core counts. Our matrices
/// stay small enough (≤ 2048) that the serial kernels are also the faster
/// choice.
pub fn ensure_serial_blas() {
    SERIAL_BLAS.call_once(|| unsafe { openblas_set_num_threads(1) });
}

/// Eigendecomposition of a symmetric matrix with eigenvalues (and matching
/// eigenvector columns) sorted in descending order.
pub fn symmetric_eig_desc(a: &Array2<f64>) -> Result<(Array1<f64>, Array2<f64>)> {
    ensure_serial_blas();
    let (vals, vecs) = a.eigh(UPLO::Lower)?;
    // LAPACK returns ascending order; flip.
    let n = vals.len();
    let vals_desc = Array1::from_shape_fn(n, |i| vals[n - 1 - i]);
    let mut vecs_desc = Array2::zeros((n, n));
    for i in 0..n {
        vecs_desc.column_mut(i).assign(&vecs.column(n - 1 - i));
    }
    Ok((vals_desc, vecs_desc))
}

/// Matrix 1-norm (maximum absolute column sum).
fn norm_1(a: &Array2<f64>) -> f64 {
    let mut best = 0.0_f64;
    for j in 0..a.ncols() {
        best = best.max(a.column(j).iter().map(|v| v.abs()).sum());
    }
    best
}

// Padé-13 coefficients for the matrix exponential.
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

// Largest 1-norm for which the order-13 approximant meets double precision.
const THETA13: f64 = 5.371920351148152;

/// Dense matrix exponential by scaling and squaring with a degree-13 Padé
/// approximant. Independent of any eigendecomposition, so it can serve as a
/// cross-check for spectral evolution routes.
pub fn expm(a: &Array2<f64>) -> Result<Array2<f64>> {
    ensure_serial_blas();
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm needs a square matrix");
    let norm = norm_1(a);
    let s = if norm > THETA13 {
        (norm / THETA13).log2().ceil() as u32
    } else {
        0
    };
    let a_scaled = a / 2f64.powi(s as i32);

    let b = &PADE13;
    let ident: Array2<f64> = Array2::eye(n);
    let a2 = a_scaled.dot(&a_scaled);
    let a4 = a2.dot(&a2);
    let a6 = a2.dot(&a4);

    let u_inner = &a6 * b[13] + &a4 * b[11] + &a2 * b[9];
    let u =
        a_scaled.dot(&(a6.dot(&u_inner) + &a6 * b[7] + &a4 * b[5] + &a2 * b[3] + &ident * b[1]));
    let v_inner = &a6 * b[12] + &a4 * b[10] + &a2 * b[8];
    let v = a6.dot(&v_inner) + &a6 * b[6] + &a4 * b[4] + &a2 * b[2] + &ident * b[0];

    let mut r = (&v - &u).inv()?.dot(&(&v + &u));
    for _ in 0..s {
        r = r.dot(&r);
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn expm_of_zero_is_identity() {
        let z = Array2::<f64>::zeros((4, 4));
        let e = expm(&z).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert_abs_diff_eq!(e[[i, j]], if i == j { 1.0 } else { 0.0 }, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn expm_matches_closed_form_2x2() {
        // exp(t [[-1, 1], [1, -1]]) = [[c, s], [s, c]] with
        // c = (1 + e^{-2t})/2, s = (1 − e^{-2t})/2.
        for &t in &[0.1, 1.0, 10.0, 40.0] {
            let m = ndarray::array![[-t, t], [t, -t]];
            let e = expm(&m).unwrap();
            let c = 0.5 * (1.0 + (-2.0 * t).exp());
            let s = 0.5 * (1.0 - (-2.0 * t).exp());
            assert_abs_diff_eq!(e[[0, 0]], c, epsilon = 1e-12);
            assert_abs_diff_eq!(e[[0, 1]], s, epsilon = 1e-12);
            assert_abs_diff_eq!(e[[1, 0]], s, epsilon = 1e-12);
            assert_abs_diff_eq!(e[[1, 1]], c, epsilon = 1e-12);
        }
    }

    #[test]
    fn expm_agrees_with_spectral_route_on_symmetric() {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let n = 24;
        let mut m = Array2::zeros((n, n));
        for i in 0..n {
            for j in i..n {
                let v: f64 = rng.random::<f64>() - 0.5;
                m[[i, j]] = v;
                m[[j, i]] = v;
            }
        }
        let e_pade = expm(&m).unwrap();
        let (vals, vecs) = symmetric_eig_desc(&m).unwrap();
        let mut lam = Array2::zeros((n, n));
        for i in 0..n {
            lam[[i, i]] = vals[i].exp();
        }
        let e_spec = vecs.dot(&lam).dot(&vecs.t());
        let mut worst = 0.0_f64;
        for (a, b) in e_pade.iter().zip(e_spec.iter()) {
            worst = worst.max((a - b).abs());
        }
        assert!(worst < 1e-11, "routes differ by {worst}");
    }

    #[test]
    fn symmetric_eig_is_descending_and_orthonormal() {
        let m = ndarray::array![[2.0, 1.0, 0.0], [1.0, 2.0, 1.0], [0.0, 1.0, 2.0]];
        let (vals, vecs) = symmetric_eig_desc(&m).unwrap();
        assert!(vals[0] >= vals[1] && vals[1] >= vals[2]);
        let gram = vecs.t().dot(&vecs);
        for i in 0..3 {
            for j in 0..3 {
                assert_abs_diff_eq!(
                    gram[[i, j]],
                    if i == j { 1.0 } else { 0.0 },
                    epsilon = 1e-12
                );
            }
        }
    }
}
