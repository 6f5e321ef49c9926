//! Closest-lattice-point and shortest-vector search.
//!
//! The basis is triangularized once by a QR factorization; the search is a
//! depth-first Schnorr–Euchner enumeration over the triangular system, with
//! coordinates visited in zig-zag order around the running centre and the
//! search radius shrunk whenever a better point is found. The initial radius
//! for closest-point search is the metric of the Babai (successive rounding)
//! point, so the default search never fails.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative tolerance under which two metrics are treated as a tie.
const TIE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchMode {
    ClosestPoint,
    ShortestVector,
}

/// A lattice search request: `basis` is `m x n` with `m >= n` and full
/// column rank, `target` has length `m`.
#[derive(Debug, Clone)]
pub struct SearchProblem {
    pub basis: DMatrix<f64>,
    pub target: DVector<f64>,
    pub radius: Option<f64>,
    pub mode: SearchMode,
}

impl SearchProblem {
    pub fn closest(basis: DMatrix<f64>, target: DVector<f64>) -> Self {
        SearchProblem {
            basis,
            target,
            radius: None,
            mode: SearchMode::ClosestPoint,
        }
    }

    pub fn shortest(basis: DMatrix<f64>) -> Self {
        let m = basis.nrows();
        SearchProblem {
            basis,
            target: DVector::zeros(m),
            radius: None,
            mode: SearchMode::ShortestVector,
        }
    }

    pub fn with_radius(mut self, radius: f64) -> Self {
        self.radius = Some(radius);
        self
    }
}

/// Outcome of a search: integer coordinates, squared distance, and the
/// number of enumeration nodes visited.
#[derive(Debug, Clone, PartialEq)]
pub struct Found {
    pub z: Vec<i64>,
    pub metric: f64,
    pub nodes: u64,
}

/// A basis preprocessed for repeated searches.
#[derive(Debug, Clone)]
pub struct Searcher {
    basis: DMatrix<f64>,
    // thin orthogonal factor (m x n) and upper-triangular factor with positive diagonal
    q: DMatrix<f64>,
    r: DMatrix<f64>,
}

impl Searcher {
    pub fn new(basis: &DMatrix<f64>) -> Result<Self> {
        let (m, n) = basis.shape();
        if n == 0 || m < n {
            return Err(Error::InvalidLattice(format!(
                "basis must be m x n with m >= n >= 1, got {m} x {n}"
            )));
        }
        if basis.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("basis"));
        }
        let qr = basis.clone().qr();
        let mut q = qr.q();
        let mut r = qr.r();
        let scale = basis.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        for k in 0..n {
            if r[(k, k)].abs() <= 1e-12 * scale.max(1e-300) {
                return Err(Error::InvalidLattice("basis is rank deficient".into()));
            }
            if r[(k, k)] < 0.0 {
                r.row_mut(k).neg_mut();
                q.column_mut(k).neg_mut();
            }
        }
        Ok(Searcher {
            basis: basis.clone(),
            q,
            r,
        })
    }

    pub fn dim(&self) -> usize {
        self.r.nrows()
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    /// Upper-triangular factor `R` of the basis (positive diagonal).
    pub fn triangular(&self) -> &DMatrix<f64> {
        &self.r
    }

    /// Squared distance `|target - basis * z|^2` evaluated on the original basis.
    pub fn metric(&self, target: &DVector<f64>, z: &[i64]) -> f64 {
        let zf = DVector::from_iterator(z.len(), z.iter().map(|&v| v as f64));
        (target - &self.basis * zf).norm_squared()
    }

    fn project(&self, target: &DVector<f64>) -> Result<DVector<f64>> {
        if target.len() != self.basis.nrows() {
            return Err(Error::DimensionMismatch {
                expected: self.basis.nrows(),
                got: target.len(),
            });
        }
        if target.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("target"));
        }
        Ok(self.q.transpose() * target)
    }

    /// Successive-rounding (Babai) point for `target`.
    pub fn babai(&self, target: &DVector<f64>) -> Result<Vec<i64>> {
        let y = self.project(target)?;
        let n = self.dim();
        let mut z = vec![0i64; n];
        for k in (0..n).rev() {
            let mut c = y[k];
            for j in k + 1..n {
                c -= self.r[(k, j)] * z[j] as f64;
            }
            z[k] = (c / self.r[(k, k)]).round() as i64;
        }
        Ok(z)
    }

    /// Lattice point nearest to `target`. Ties are broken towards the
    /// lexicographically smallest coordinate vector. With `radius` set, fails
    /// with [`Error::SearchRadiusExhausted`] when no point is that close.
    pub fn closest_point(&self, target: &DVector<f64>, radius: Option<f64>) -> Result<Found> {
        let y = self.project(target)?;
        let n = self.dim();
        let (mut best_z, mut best_d, mut radius_sq) = match radius {
            Some(r) => {
                if !(r > 0.0) {
                    return Err(Error::Config("search radius must be positive".into()));
                }
                let residual = (target.norm_squared() - y.norm_squared()).max(0.0);
                (None, f64::INFINITY, r * r - residual)
            }
            None => {
                let z = self.babai(target)?;
                let d = tri_metric(&self.r, &y, &z);
                (Some(z), d, d * (1.0 + TIE_TOL) + 1e-300)
            }
        };
        if radius_sq < 0.0 {
            return Err(Error::SearchRadiusExhausted);
        }
        let user_radius_sq = radius_sq;
        let nodes = enumerate(&self.r, &y, radius_sq, |z, d| {
            let better = match &best_z {
                None => d <= user_radius_sq,
                Some(bz) => {
                    let tol = TIE_TOL * best_d.max(1e-300);
                    d < best_d - tol || (d <= best_d + tol && z < bz.as_slice())
                }
            };
            if better {
                best_z = Some(z.to_vec());
                best_d = best_d.min(d);
                radius_sq = best_d * (1.0 + TIE_TOL) + 1e-300;
            }
            radius_sq
        });
        let z = best_z.ok_or(Error::SearchRadiusExhausted)?;
        debug_assert_eq!(z.len(), n);
        let metric = self.metric(target, &z);
        Ok(Found { z, metric, nodes })
    }

    /// A shortest nonzero lattice vector.
    pub fn shortest_vector(&self) -> Found {
        let n = self.dim();
        let y = DVector::zeros(n);
        // seed the radius with the shortest basis column
        let (mut best_z, mut best_d) = (0..n)
            .map(|j| {
                let mut z = vec![0i64; n];
                z[j] = 1;
                let d = tri_metric(&self.r, &y, &z);
                (z, d)
            })
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("nonempty basis");
        let mut radius_sq = best_d * (1.0 - TIE_TOL);
        let nodes = enumerate(&self.r, &y, radius_sq, |z, d| {
            if z.iter().all(|&v| v == 0) {
                return radius_sq;
            }
            if d < best_d * (1.0 - TIE_TOL) {
                best_d = d;
                best_z = z.to_vec();
                radius_sq = d * (1.0 - TIE_TOL);
            }
            radius_sq
        });
        let metric = self.metric(&DVector::zeros(self.basis.nrows()), &best_z);
        Found {
            z: best_z,
            metric,
            nodes,
        }
    }

    /// Every lattice point within distance `r` of `target`, sorted by metric
    /// (ties by coordinates). Fails once more than `cap` points are found.
    pub fn enumerate_within(
        &self,
        target: &DVector<f64>,
        r: f64,
        cap: usize,
    ) -> Result<Vec<(Vec<i64>, f64)>> {
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::Config("enumeration radius must be positive and finite".into()));
        }
        let y = self.project(target)?;
        let residual = (target.norm_squared() - y.norm_squared()).max(0.0);
        let radius_sq = r * r - residual;
        if radius_sq < 0.0 {
            return Ok(Vec::new());
        }
        let mut out: Vec<(Vec<i64>, f64)> = Vec::new();
        let mut overflow = false;
        enumerate(&self.r, &y, radius_sq, |z, _| {
            if overflow {
                return -1.0;
            }
            if out.len() == cap {
                overflow = true;
                return -1.0;
            }
            out.push((z.to_vec(), 0.0));
            radius_sq
        });
        if overflow {
            return Err(Error::ResultTooLarge { cap });
        }
        for (z, d) in out.iter_mut() {
            *d = self.metric(target, z);
        }
        out.retain(|(_, d)| *d <= r * r);
        out.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
        Ok(out)
    }

    /// Number of nodes a full closest-point search visits for `target`.
    pub fn node_count(&self, target: &DVector<f64>) -> Result<u64> {
        Ok(self.closest_point(target, None)?.nodes)
    }
}

fn tri_metric(r: &DMatrix<f64>, y: &DVector<f64>, z: &[i64]) -> f64 {
    let n = r.nrows();
    let mut d = 0.0;
    for k in 0..n {
        let mut e = y[k];
        for j in k..n {
            e -= r[(k, j)] * z[j] as f64;
        }
        d += e * e;
    }
    d
}

/// Schnorr–Euchner depth-first enumeration of `{z : |y - R z|^2 <= radius_sq}`.
///
/// `leaf` is called on every complete point inside the current radius and
/// returns the radius to continue with; a negative value aborts. Returns the
/// number of visited nodes.
fn enumerate<F>(r: &DMatrix<f64>, y: &DVector<f64>, mut radius_sq: f64, mut leaf: F) -> u64
where
    F: FnMut(&[i64], f64) -> f64,
{
    let n = r.nrows();
    let mut z = vec![0i64; n];
    let mut step = vec![0i64; n];
    let mut center = vec![0.0f64; n];
    // partial[k] holds the accumulated metric of levels k..n
    let mut partial = vec![0.0f64; n + 1];
    let mut nodes: u64 = 0;

    let set_level = |k: usize, z: &mut [i64], step: &mut [i64], center: &mut [f64]| {
        let mut c = y[k];
        for j in k + 1..n {
            c -= r[(k, j)] * z[j] as f64;
        }
        let c = c / r[(k, k)];
        center[k] = c;
        z[k] = c.round() as i64;
        step[k] = if c >= z[k] as f64 { 1 } else { -1 };
    };

    let mut k = n - 1;
    set_level(k, &mut z, &mut step, &mut center);
    loop {
        nodes += 1;
        let diff = (center[k] - z[k] as f64) * r[(k, k)];
        let d = partial[k + 1] + diff * diff;
        if d <= radius_sq {
            if k == 0 {
                radius_sq = leaf(&z, d);
                if radius_sq < 0.0 {
                    return nodes;
                }
                next_sibling(k, &mut z, &mut step);
            } else {
                partial[k] = d;
                k -= 1;
                set_level(k, &mut z, &mut step, &mut center);
            }
        } else {
            if k == n - 1 {
                return nodes;
            }
            k += 1;
            next_sibling(k, &mut z, &mut step);
        }
    }
}

#[inline]
fn next_sibling(k: usize, z: &mut [i64], step: &mut [i64]) {
    z[k] += step[k];
    step[k] = -step[k] - step[k].signum();
}

/// Closest point for a [`SearchProblem`] in closest-point mode.
pub fn closest_point(p: &SearchProblem) -> Result<Found> {
    if p.mode != SearchMode::ClosestPoint {
        return Err(Error::Config("problem is not in closest-point mode".into()));
    }
    Searcher::new(&p.basis)?.closest_point(&p.target, p.radius)
}

/// Shortest nonzero vector for a [`SearchProblem`] in shortest-vector mode.
pub fn shortest_vector(p: &SearchProblem) -> Result<Found> {
    if p.mode != SearchMode::ShortestVector {
        return Err(Error::Config("problem is not in shortest-vector mode".into()));
    }
    Ok(Searcher::new(&p.basis)?.shortest_vector())
}

/// All points of the lattice within distance `r` of the problem target.
pub fn enumerate_within(p: &SearchProblem, r: f64, cap: usize) -> Result<Vec<(Vec<i64>, f64)>> {
    Searcher::new(&p.basis)?.enumerate_within(&p.target, r, cap)
}
