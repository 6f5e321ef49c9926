//! Conversions between complex space-time matrices and real vectors.
//!
//! A complex `M x T` codeword `X` maps to the real vector
//! `[Re(vec X); Im(vec X)]` where `vec` stacks columns. Complex matrices act
//! on this layout through `[[Re A, -Im A], [Im A, Re A]]`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// `[Re(vec X); Im(vec X)]`, column-major.
pub fn to_real(x: &DMatrix<Complex64>) -> DVector<f64> {
    let k = x.len();
    DVector::from_fn(2 * k, |i, _| if i < k { x[i].re } else { x[i - k].im })
}

/// Inverse of [`to_real`].
pub fn to_complex(x: &DVector<f64>, rows: usize, cols: usize) -> DMatrix<Complex64> {
    let k = rows * cols;
    assert_eq!(x.len(), 2 * k, "real vector length must be 2 * rows * cols");
    DMatrix::from_fn(rows, cols, |i, j| {
        let idx = j * rows + i;
        Complex64::new(x[idx], x[idx + k])
    })
}

/// Complex vector from the real layout `[Re; Im]`.
pub fn to_complex_vec(x: &DVector<f64>) -> DVector<Complex64> {
    let k = x.len() / 2;
    DVector::from_fn(k, |i, _| Complex64::new(x[i], x[i + k]))
}

/// `[[Re A, -Im A], [Im A, Re A]]`.
pub fn real_form(a: &DMatrix<Complex64>) -> DMatrix<f64> {
    let (r, c) = a.shape();
    DMatrix::from_fn(2 * r, 2 * c, |i, j| {
        let z = a[(i % r, j % c)];
        match (i < r, j < c) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    })
}

/// Real channel acting on vectorized `M x T` codewords: the real form of
/// `I_T (x) H` in the `[Re; Im]` layout.
pub fn real_channel(h: &DMatrix<Complex64>, t: usize) -> DMatrix<f64> {
    let (n, m) = h.shape();
    let mut big = DMatrix::from_element(n * t, m * t, Complex64::new(0.0, 0.0));
    for s in 0..t {
        big.view_mut((s * n, s * m), (n, m)).copy_from(h);
    }
    real_form(&big)
}

/// The per-channel-use form `I_T (x) [[Re H, -Im H], [Im H, Re H]]`, which
/// acts on vectors ordered as `[Re x_1; Im x_1; Re x_2; Im x_2; ...]` for the
/// columns `x_t` of the codeword.
pub fn interleaved_channel(h: &DMatrix<Complex64>, t: usize) -> DMatrix<f64> {
    let (n, m) = h.shape();
    let blk = real_form(h);
    let mut out = DMatrix::zeros(2 * n * t, 2 * m * t);
    for s in 0..t {
        out.view_mut((2 * s * n, 2 * s * m), (2 * n, 2 * m)).copy_from(&blk);
    }
    out
}

/// Permutation `P` with `P * [Re; Im]`-layout = per-channel-use layout, for
/// `rows x t` matrices.
pub fn interleave_permutation(rows: usize, t: usize) -> DMatrix<f64> {
    let k = rows * t;
    let mut p = DMatrix::zeros(2 * k, 2 * k);
    for s in 0..t {
        for i in 0..rows {
            p[(2 * s * rows + i, s * rows + i)] = 1.0;
            p[(2 * s * rows + rows + i, k + s * rows + i)] = 1.0;
        }
    }
    p
}

/// Permutation taking the concatenation of `blocks` per-block vectors (each
/// the real layout of an `m x m` block) to the real layout of the
/// horizontally stacked `m x (blocks*m)` matrix.
pub fn stack_permutation(m: usize, blocks: usize) -> DMatrix<f64> {
    let per = m * m;
    let total = 2 * per * blocks;
    let mut p = DMatrix::zeros(total, total);
    for l in 0..blocks {
        for part in 0..2 {
            for e in 0..per {
                let global = part * per * blocks + l * per + e;
                let concat = l * 2 * per + part * per + e;
                p[(global, concat)] = 1.0;
            }
        }
    }
    p
}

/// Block-diagonal matrix with `copies` copies of `a`.
pub fn block_diag(a: &DMatrix<f64>, copies: usize) -> DMatrix<f64> {
    let (r, c) = a.shape();
    let mut out = DMatrix::zeros(r * copies, c * copies);
    for k in 0..copies {
        out.view_mut((k * r, k * c), (r, c)).copy_from(a);
    }
    out
}
