//! Independent oracles shared by the integration and acceptance tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use stlattice::cda::{AlgebraElement, GaussianInt, OrderBasis};
use stlattice::intlin::determinant;
use stlattice::tcm::{BlockMetrics, TcmScheme};

/// Closest point by exhaustive search over a coordinate box that provably
/// contains the optimum: any `z` at least as close as a candidate `z0`
/// satisfies `|z_i - (G^{-1} t)_i| <= |t - G z0| |row_i(G^{-1})|`.
pub fn brute_force_cvp(g: &DMatrix<f64>, t: &DVector<f64>) -> (Vec<i64>, f64) {
    let n = g.ncols();
    let ginv = g.clone().try_inverse().expect("square full-rank basis");
    let real = &ginv * t;
    let metric = |z: &[i64]| {
        let zf = DVector::from_iterator(n, z.iter().map(|&v| v as f64));
        (t - g * zf).norm_squared()
    };
    // cheap candidate: rounding followed by unit-step descent
    let mut z0: Vec<i64> = real.iter().map(|v| v.round() as i64).collect();
    let mut d0 = metric(&z0);
    loop {
        let mut improved = false;
        for i in 0..n {
            for step in [-1, 1] {
                z0[i] += step;
                let d = metric(&z0);
                if d < d0 {
                    d0 = d;
                    improved = true;
                } else {
                    z0[i] -= step;
                }
            }
        }
        if !improved {
            break;
        }
    }
    let rho = d0.sqrt() * (1.0 + 1e-9);
    let lo: Vec<i64> = (0..n)
        .map(|i| (real[i] - rho * ginv.row(i).norm()).ceil() as i64)
        .collect();
    let hi: Vec<i64> = (0..n)
        .map(|i| (real[i] + rho * ginv.row(i).norm()).floor() as i64)
        .collect();
    let widths: Vec<usize> = lo.iter().zip(&hi).map(|(l, h)| (h - l + 1).max(0) as usize).collect();
    let total: usize = widths.iter().product();
    assert!(total <= 50_000_000, "oracle box too large ({total})");
    let mut best = (z0, d0);
    let mut z = lo.clone();
    for k in 0..total {
        let mut r = k;
        for i in 0..n {
            z[i] = lo[i] + (r % widths[i]) as i64;
            r /= widths[i];
        }
        let d = metric(&z);
        if d < best.1 {
            best = (z.clone(), d);
        }
    }
    best
}

/// `[O : beta O]` as the absolute determinant of the integer matrix of
/// `x -> beta x` on the Z-basis `(B_0, .., B_3, i B_0, .., i B_3)`,
/// computed with the structure constants only.
pub fn module_index(order: &OrderBasis, beta: &AlgebraElement) -> u128 {
    let mut cols: Vec<Vec<i128>> = Vec::with_capacity(8);
    for scalar in [GaussianInt::ONE, GaussianInt::I] {
        for k in 0..4 {
            let mut e = [GaussianInt::ZERO; 4];
            e[k] = scalar;
            let p = order.mul(beta, &AlgebraElement::new(e));
            // x = sum (a_k + i b_k) B_k  ->  (a_0..a_3, b_0..b_3)
            let mut col: Vec<i128> = p.coords.iter().map(|g| g.re as i128).collect();
            col.extend(p.coords.iter().map(|g| g.im as i128));
            cols.push(col);
        }
    }
    let rows: Vec<Vec<i128>> = (0..8).map(|i| (0..8).map(|j| cols[j][i]).collect()).collect();
    determinant(&rows).unsigned_abs()
}

/// Exhaustive minimum-metric selector sequence from state 0 over all
/// `2^(kL)` input sequences; returns the labels, inputs and total metric.
pub fn brute_force_sequence(scheme: &TcmScheme, metrics: &[BlockMetrics]) -> (Vec<usize>, Vec<usize>, f64) {
    let sel = scheme.selector();
    let width = 1usize << sel.input_bits();
    let steps = metrics.len();
    let total = width.pow(steps as u32);
    let mut best: Option<(Vec<usize>, Vec<usize>, f64)> = None;
    for k in 0..total {
        let mut r = k;
        let inputs: Vec<usize> = (0..steps)
            .map(|_| {
                let u = r % width;
                r /= width;
                u
            })
            .rev()
            .collect();
        let mut state = 0;
        let mut cost = 0.0;
        let mut labels = Vec::with_capacity(steps);
        for (t, &u) in inputs.iter().enumerate() {
            let l = sel.label(state, u);
            cost += metrics[t][l].0;
            labels.push(l);
            state = sel.next_state(state, u);
        }
        if scheme.is_terminated() && state != 0 {
            continue;
        }
        if best.as_ref().is_none_or(|b| cost < b.2) {
            best = Some((labels, inputs, cost));
        }
    }
    best.expect("at least one admissible sequence")
}

/// Second moment `E|x|^2` of the uniform distribution on a regular hexagon
/// with inradius `rho`: `5 rho^2 / 9`.
pub fn hexagon_second_moment(inradius: f64) -> f64 {
    5.0 * inradius * inradius / 9.0
}

/// A random basis near the identity, with smallest singular value above 0.5
/// so that the brute-force box stays small.
pub fn random_basis(rng: &mut impl rand::Rng, n: usize) -> DMatrix<f64> {
    loop {
        let g = DMatrix::identity(n, n) + DMatrix::from_fn(n, n, |_, _| rng.random_range(-0.5..0.5));
        let s = g.clone().svd(false, false).singular_values;
        if s.min() > 0.5 {
            return g;
        }
    }
}
