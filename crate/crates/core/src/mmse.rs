//! MMSE-GDFE front end.
//!
//! For a real channel `y = H x + w`, the backward filter `B` is the upper
//! triangular Cholesky factor of `H^T H + eta I` and the forward filter is
//! `F = B^{-T} H^T`. Lattice decoding then searches for the point of `B G Z^n`
//! closest to `F y`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct FilterPair {
    pub forward: DMatrix<f64>,
    pub backward: DMatrix<f64>,
    pub regularizer: f64,
}

/// Builds the filter pair with `eta = 1 / snr_per_dim`.
pub fn compute_filters(h: &DMatrix<f64>, snr_per_dim: f64) -> Result<FilterPair> {
    if !snr_per_dim.is_finite() || snr_per_dim <= 0.0 {
        return Err(Error::NonFinite("snr_per_dim"));
    }
    filters_with_regularizer(h, 1.0 / snr_per_dim)
}

/// Builds the filter pair for an explicit regularizer `eta > 0`.
pub fn filters_with_regularizer(h: &DMatrix<f64>, eta: f64) -> Result<FilterPair> {
    if !eta.is_finite() || eta <= 0.0 {
        return Err(Error::NonFinite("regularizer"));
    }
    if h.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("channel matrix"));
    }
    let n = h.ncols();
    let gram = h.transpose() * h + DMatrix::identity(n, n) * eta;
    let chol = gram
        .cholesky()
        .ok_or(Error::NonFinite("regularized Gram matrix is not positive definite"))?;
    // nalgebra gives lower L with L L^T; B = L^T is upper with positive diagonal
    let backward = chol.l().transpose();
    let forward = backward
        .transpose()
        .solve_lower_triangular(&h.transpose())
        .ok_or(Error::NonFinite("singular backward filter"))?;
    Ok(FilterPair {
        forward,
        backward,
        regularizer: eta,
    })
}

/// `F y - B offset`: the target of the lattice search once a known
/// translate (coset leader, dither) has been removed.
pub fn modified_observation(fp: &FilterPair, y: &DVector<f64>, offset: &DVector<f64>) -> DVector<f64> {
    &fp.forward * y - &fp.backward * offset
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn random_h(seed: u64, m: usize, n: usize) -> DMatrix<f64> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(m, n, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn identity_channel() {
        let fp = compute_filters(&DMatrix::identity(3, 3), 1.0).unwrap();
        let s = 2f64.sqrt();
        assert!((&fp.backward - DMatrix::identity(3, 3) * s).amax() < 1e-12);
        assert!((&fp.forward - DMatrix::identity(3, 3) / s).amax() < 1e-12);
    }

    #[test]
    fn small_regularizer_approaches_qr() {
        let h = random_h(3, 4, 4);
        let fp = filters_with_regularizer(&h, 1e-12).unwrap();
        let r = h.clone().qr().r();
        let signs = DMatrix::from_diagonal(&r.diagonal().map(f64::signum));
        let r = signs * r;
        assert!((&fp.backward - r).amax() < 1e-5);
    }

    #[test]
    fn zero_channel() {
        let fp = compute_filters(&DMatrix::zeros(2, 2), 4.0).unwrap();
        assert!((&fp.backward - DMatrix::identity(2, 2) * 0.5).amax() < 1e-12);
        assert!(fp.forward.amax() < 1e-12);
    }

    #[test]
    fn rejects_bad_input() {
        let h = DMatrix::identity(2, 2);
        assert!(compute_filters(&h, 0.0).is_err());
        assert!(compute_filters(&h, f64::NAN).is_err());
        let mut bad = h.clone();
        bad[(0, 1)] = f64::INFINITY;
        assert!(compute_filters(&bad, 1.0).is_err());
    }

    #[test]
    fn modified_observation_removes_offset() {
        let h = random_h(9, 4, 4);
        let fp = compute_filters(&h, 10.0).unwrap();
        let x = DVector::from_vec(vec![0.3, -1.0, 2.0, 0.5]);
        let u = DVector::from_vec(vec![1.0, 0.25, -0.5, 0.0]);
        let y = &h * (&x + &u);
        let a = modified_observation(&fp, &y, &u);
        // F H = B - eta B^{-T}, so F H (x+u) - B u = B x - eta B^{-T} (x+u)
        let binv_t = fp.backward.transpose().try_inverse().unwrap();
        let expect = &fp.backward * &x - binv_t * (&x + &u) * fp.regularizer;
        assert!((a - expect).amax() < 1e-9);
    }

    proptest! {
        #[test]
        fn filter_identities(seed in 0u64..10_000, m in 2usize..7, n in 2usize..7, snr in 0.1f64..1000.0) {
            let h = random_h(seed, m, n);
            let fp = compute_filters(&h, snr).unwrap();
            let eta = 1.0 / snr;
            let b = &fp.backward;
            let lhs = b.transpose() * b - h.transpose() * &h;
            prop_assert!((lhs - DMatrix::identity(n, n) * eta).amax() < 1e-9);
            for i in 0..n {
                prop_assert!(b[(i, i)] > 0.0);
                for j in 0..i {
                    prop_assert_eq!(b[(i, j)], 0.0);
                }
            }
            let binv_t = b.transpose().try_inverse().unwrap();
            prop_assert!((&fp.forward - &binv_t * h.transpose()).amax() < 1e-9);
            prop_assert!((b - &fp.forward * &h - binv_t * eta).amax() < 1e-9);
        }
    }
}
