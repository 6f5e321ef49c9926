//! Exact integer linear algebra on small dense matrices.
//!
//! Vectors are plain `Vec<i128>`. The echelon routine works on generating
//! sets (possibly redundant) and returns a triangular basis of the integer
//! span; its pivot product is the index of the span in `Z^n`.

/// Extended Euclid: returns `(g, x, y)` with `a*x + b*y = g >= 0`.
pub fn ext_gcd(a: i128, b: i128) -> (i128, i128, i128) {
    let (mut old_r, mut r) = (a, b);
    let (mut old_s, mut s) = (1i128, 0i128);
    let (mut old_t, mut t) = (0i128, 1i128);
    while r != 0 {
        let q = old_r.div_euclid(r);
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
        (old_t, t) = (t, old_t - q * t);
    }
    if old_r < 0 {
        (-old_r, -old_s, -old_t)
    } else {
        (old_r, old_s, old_t)
    }
}

/// Triangular (Hermite) basis of the integer span of `generators`.
///
/// Returns `n` vectors `b_0..b_{n-1}` with `b_i[j] = 0` for `j < i`,
/// `b_i[i] > 0` and `0 <= b_k[i] < b_i[i]` for `k < i`. Returns `None` when
/// the generators do not span a full-rank sublattice of `Z^n`.
pub fn hermite_basis(generators: &[Vec<i128>], n: usize) -> Option<Vec<Vec<i128>>> {
    let mut pivots: Vec<Option<Vec<i128>>> = vec![None; n];
    for g in generators {
        assert_eq!(g.len(), n, "generator length must equal the dimension");
        let mut v = g.clone();
        let mut col = 0;
        while col < n {
            if v[col] == 0 {
                col += 1;
                continue;
            }
            match pivots[col].take() {
                None => {
                    if v[col] < 0 {
                        v.iter_mut().for_each(|x| *x = -*x);
                    }
                    size_reduce(&mut v, &pivots, col + 1);
                    pivots[col] = Some(v);
                    break;
                }
                Some(p) => {
                    let (gcd, x, y) = ext_gcd(p[col], v[col]);
                    let a = p[col] / gcd;
                    let b = v[col] / gcd;
                    let mut new_p: Vec<i128> =
                        p.iter().zip(&v).map(|(&s, &t)| x * s + y * t).collect();
                    let mut rest: Vec<i128> =
                        p.iter().zip(&v).map(|(&s, &t)| b * s - a * t).collect();
                    debug_assert_eq!(rest[col], 0);
                    size_reduce(&mut new_p, &pivots, col + 1);
                    size_reduce(&mut rest, &pivots, col + 1);
                    pivots[col] = Some(new_p);
                    v = rest;
                    col += 1;
                }
            }
        }
    }
    let mut basis: Vec<Vec<i128>> = pivots.into_iter().collect::<Option<Vec<_>>>()?;
    // reduce entries above each pivot
    for i in 0..n {
        let d = basis[i][i];
        for k in 0..i {
            let q = basis[k][i].div_euclid(d);
            if q != 0 {
                let bi = basis[i].clone();
                for (v, w) in basis[k].iter_mut().zip(&bi) {
                    *v -= q * w;
                }
            }
        }
    }
    Some(basis)
}

// Reduces coordinates `from..` of `v` into `[0, pivot)` using the pivots known so far.
fn size_reduce(v: &mut [i128], pivots: &[Option<Vec<i128>>], from: usize) {
    for j in from..v.len() {
        if let Some(p) = &pivots[j] {
            let q = v[j].div_euclid(p[j]);
            if q != 0 {
                for (x, w) in v.iter_mut().zip(p) {
                    *x -= q * w;
                }
            }
        }
    }
}

/// Index of the integer span of `generators` in `Z^n`, or `None` if the span
/// is not full rank.
pub fn index_in_zn(generators: &[Vec<i128>], n: usize) -> Option<u128> {
    let basis = hermite_basis(generators, n)?;
    Some(basis.iter().enumerate().map(|(i, b)| b[i] as u128).product())
}

/// Reduces `z` to the canonical coset representative modulo the lattice with
/// triangular basis `basis` (as returned by [`hermite_basis`]): the unique
/// representative with `0 <= z_i < basis[i][i]`.
pub fn reduce_mod_basis(z: &[i128], basis: &[Vec<i128>]) -> Vec<i128> {
    let mut z = z.to_vec();
    for (i, b) in basis.iter().enumerate() {
        let q = z[i].div_euclid(b[i]);
        if q != 0 {
            for (v, w) in z.iter_mut().zip(b) {
                *v -= q * w;
            }
        }
    }
    z
}

/// All canonical coset representatives of `Z^n / span(basis)`, in
/// mixed-radix order with the first coordinate varying fastest.
pub fn coset_representatives(basis: &[Vec<i128>]) -> Vec<Vec<i128>> {
    let radices: Vec<i128> = basis.iter().enumerate().map(|(i, b)| b[i]).collect();
    let total: i128 = radices.iter().product();
    (0..total)
        .map(|mut k| {
            radices
                .iter()
                .map(|&r| {
                    let d = k % r;
                    k /= r;
                    d
                })
                .collect()
        })
        .collect()
}

/// Determinant by fraction-free (Bareiss) elimination.
pub fn determinant(m: &[Vec<i128>]) -> i128 {
    let n = m.len();
    if n == 0 {
        return 1;
    }
    let mut a: Vec<Vec<i128>> = m.to_vec();
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..n - 1 {
        if a[k][k] == 0 {
            let Some(swap) = (k + 1..n).find(|&r| a[r][k] != 0) else {
                return 0;
            };
            a.swap(k, swap);
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) / prev;
            }
        }
        prev = a[k][k];
    }
    sign * a[n - 1][n - 1]
}
