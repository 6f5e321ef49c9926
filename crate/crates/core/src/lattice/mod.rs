//! Real lattices `{G u : u in Z^n}` with column-convention generators.
//!
//! A [`Lattice`] caches its Gram matrix and a triangularized searcher; the
//! minimum distance is computed on first use by shortest-vector enumeration
//! and then memoized.

mod catalog;
mod io;

pub use catalog::{catalog, golay24, hamming84, reed_muller_1_4, CatalogName};
pub use io::{format_lattice, parse_lattice, read_lattice, write_lattice};

use std::f64::consts::PI;
use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};

use crate::clps::Searcher;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct Lattice {
    generator: DMatrix<f64>,
    gram: DMatrix<f64>,
    integral: bool,
    searcher: Searcher,
    min_dist_sq: OnceLock<f64>,
}

/// How a lattice code region is bounded.
#[derive(Debug, Clone)]
pub enum Shaping {
    /// Axis-aligned hypercube `[-side/2, side/2)^n`.
    Hypercube { side: f64 },
    /// Fundamental Voronoi cell of a shaping lattice.
    Voronoi(Lattice),
}

/// A finite lattice code: points of `lattice + translate` inside the shaping region.
#[derive(Debug, Clone)]
pub struct LatticeCodeRegion {
    pub lattice: Lattice,
    pub translate: DVector<f64>,
    pub shaping: Shaping,
}

impl LatticeCodeRegion {
    pub fn new(lattice: Lattice, translate: DVector<f64>, shaping: Shaping) -> Result<Self> {
        if translate.len() != lattice.dim() {
            return Err(Error::DimensionMismatch {
                expected: lattice.dim(),
                got: translate.len(),
            });
        }
        if translate.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("translate"));
        }
        match &shaping {
            Shaping::Hypercube { side } if !(*side > 0.0 && side.is_finite()) => {
                return Err(Error::Config("hypercube side must be positive".into()))
            }
            Shaping::Voronoi(s) if s.dim() != lattice.dim() => {
                return Err(Error::DimensionMismatch {
                    expected: lattice.dim(),
                    got: s.dim(),
                })
            }
            _ => {}
        }
        Ok(LatticeCodeRegion {
            lattice,
            translate,
            shaping,
        })
    }

    /// Whether `x` lies in the (closed) shaping region.
    pub fn in_region(&self, x: &DVector<f64>) -> bool {
        match &self.shaping {
            Shaping::Hypercube { side } => x.iter().all(|v| v.abs() <= side / 2.0),
            Shaping::Voronoi(s) => {
                let q = s.quantize(x);
                (x - &q).norm_squared() >= x.norm_squared() * (1.0 - 1e-12) - 1e-12
            }
        }
    }
}

impl Lattice {
    /// Builds a lattice from a square full-rank generator (columns are basis vectors).
    pub fn new(generator: DMatrix<f64>) -> Result<Self> {
        let (r, c) = generator.shape();
        if r != c || r == 0 {
            return Err(Error::InvalidLattice(format!(
                "generator must be square and nonempty, got {r} x {c}"
            )));
        }
        if generator.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("generator"));
        }
        let gram = generator.transpose() * &generator;
        let det = gram.determinant();
        if !det.is_finite() || det <= 0.0 {
            return Err(Error::InvalidLattice(format!("Gram determinant {det} is not positive")));
        }
        let searcher = Searcher::new(&generator)?;
        Ok(Lattice {
            generator,
            gram,
            integral: false,
            searcher,
            min_dist_sq: OnceLock::new(),
        })
    }

    /// Marks the lattice as integral after checking that the Gram matrix is
    /// integer within `1e-9`.
    pub fn into_integral(mut self) -> Result<Self> {
        if !self.gram_is_integral() {
            return Err(Error::InvalidLattice("Gram matrix is not integral".into()));
        }
        self.integral = true;
        Ok(self)
    }

    pub fn gram_is_integral(&self) -> bool {
        self.gram.iter().all(|v| (v - v.round()).abs() <= 1e-9)
    }

    pub fn is_integral(&self) -> bool {
        self.integral
    }

    pub fn dim(&self) -> usize {
        self.generator.nrows()
    }

    pub fn generator(&self) -> &DMatrix<f64> {
        &self.generator
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn searcher(&self) -> &Searcher {
        &self.searcher
    }

    /// `sqrt(det(G^T G))`.
    pub fn fundamental_volume(&self) -> f64 {
        self.gram.determinant().sqrt()
    }

    /// Squared minimum distance, computed once by shortest-vector enumeration.
    pub fn min_dist_sq(&self) -> f64 {
        *self
            .min_dist_sq
            .get_or_init(|| self.searcher.shortest_vector().metric)
    }

    pub fn min_distance(&self) -> f64 {
        self.min_dist_sq().sqrt()
    }

    /// Fundamental coding gain `d_min^2 / V^(2/n)`.
    pub fn coding_gain(&self) -> f64 {
        let n = self.dim() as f64;
        self.min_dist_sq() / self.fundamental_volume().powf(2.0 / n)
    }

    /// Packing density: fraction of space covered by balls of radius `d_min / 2`.
    pub fn density(&self) -> f64 {
        unit_ball_volume(self.dim()) * self.center_density()
    }

    /// Center density `(d_min / 2)^n / V`.
    pub fn center_density(&self) -> f64 {
        let n = self.dim() as i32;
        (self.min_distance() / 2.0).powi(n) / self.fundamental_volume()
    }

    /// Nearest lattice point to `y` as integer coordinates.
    pub fn quantize_coords(&self, y: &DVector<f64>) -> Vec<i64> {
        self.searcher
            .closest_point(y, None)
            .expect("default-radius search cannot fail on a valid lattice")
            .z
    }

    /// Nearest lattice point to `y`.
    pub fn quantize(&self, y: &DVector<f64>) -> DVector<f64> {
        self.point(&self.quantize_coords(y))
    }

    /// `y - quantize(y)`: the representative of `y` in the Voronoi cell.
    pub fn mod_lattice(&self, y: &DVector<f64>) -> DVector<f64> {
        y - self.quantize(y)
    }

    /// Lattice point with integer coordinates `z`.
    pub fn point(&self, z: &[i64]) -> DVector<f64> {
        let zf = DVector::from_iterator(z.len(), z.iter().map(|&v| v as f64));
        &self.generator * zf
    }

    /// Integer coordinates of `v` if it is a lattice point (within `1e-9`
    /// relative to the generator scale).
    pub fn coordinates(&self, v: &DVector<f64>) -> Option<Vec<i64>> {
        let c = self.generator.clone().lu().solve(v)?;
        let z: Vec<i64> = c.iter().map(|x| x.round() as i64).collect();
        let scale = self
            .generator
            .column_iter()
            .map(|col| col.norm())
            .fold(1.0f64, f64::max);
        let err = (self.point(&z) - v).amax();
        (err <= 1e-9 * scale).then_some(z)
    }

    /// Whether every generator column of `self` lies in `other`.
    pub fn is_sublattice_of(&self, other: &Lattice) -> bool {
        self.dim() == other.dim()
            && self
                .generator
                .column_iter()
                .all(|c| other.coordinates(&c.into_owned()).is_some())
    }

    /// Integer matrix `K` with `G_self = G_other K`, if `self` is a sublattice of `other`.
    pub fn coordinates_in(&self, other: &Lattice) -> Option<Vec<Vec<i64>>> {
        self.generator
            .column_iter()
            .map(|c| other.coordinates(&c.into_owned()))
            .collect()
    }

    /// Generator `k G`.
    pub fn scale(&self, k: f64) -> Result<Lattice> {
        if k == 0.0 || !k.is_finite() {
            return Err(Error::Config("scale factor must be nonzero and finite".into()));
        }
        let mut l = Lattice::new(&self.generator * k)?;
        if let Some(&d) = self.min_dist_sq.get() {
            let _ = l.min_dist_sq.set(d * k * k);
        }
        l.integral = self.integral && (k * k - (k * k).round()).abs() < 1e-12;
        Ok(l)
    }

    /// Generator `U G` for orthogonal `U`.
    pub fn rotate(&self, u: &DMatrix<f64>) -> Result<Lattice> {
        if u.nrows() != self.dim() || u.ncols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: u.nrows(),
            });
        }
        let err = (u.transpose() * u - DMatrix::identity(self.dim(), self.dim())).amax();
        if err > 1e-10 {
            return Err(Error::Config(format!("matrix is not orthogonal (error {err:e})")));
        }
        let mut l = Lattice::new(u * &self.generator)?;
        l.integral = self.integral;
        if let Some(&d) = self.min_dist_sq.get() {
            let _ = l.min_dist_sq.set(d);
        }
        Ok(l)
    }

    /// Second moment `E|x|^2` of the uniform distribution on the Voronoi
    /// cell, by Monte Carlo with `samples` draws. Returns `(mean, stderr)`.
    pub fn voronoi_second_moment<R: rand::Rng>(&self, samples: usize, rng: &mut R) -> (f64, f64) {
        let n = self.dim();
        let (mut sum, mut sum_sq) = (0.0f64, 0.0f64);
        for _ in 0..samples {
            let u = DVector::from_fn(n, |_, _| rng.random::<f64>());
            let x = self.mod_lattice(&(&self.generator * u));
            let e = x.norm_squared();
            sum += e;
            sum_sq += e * e;
        }
        let m = samples as f64;
        let mean = sum / m;
        let var = (sum_sq / m - mean * mean).max(0.0);
        (mean, (var / m).sqrt())
    }
}

/// Volume of the unit ball in `n` dimensions.
pub fn unit_ball_volume(n: usize) -> f64 {
    let factorial = |k: usize| (1..=k).fold(1.0f64, |a, i| a * i as f64);
    if n.is_multiple_of(2) {
        PI.powi((n / 2) as i32) / factorial(n / 2)
    } else {
        2f64.powi(n as i32) * PI.powf((n as f64 - 1.0) / 2.0) * factorial((n - 1) / 2)
            / factorial(n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn cubic_lattice_basics() {
        let z = catalog("Z3").unwrap();
        assert_eq!(z.fundamental_volume(), 1.0);
        assert_eq!(z.coding_gain(), 1.0);
        assert!(z.is_integral());
        let q = z.quantize(&DVector::from_vec(vec![0.4, -0.7, 2.2]));
        assert_eq!(q.as_slice(), &[0.0, -1.0, 2.0]);
    }

    #[test]
    fn z2_rounding() {
        let z = catalog("Z2").unwrap();
        let q = z.quantize(&DVector::from_vec(vec![0.4, -0.7]));
        assert_eq!(q.as_slice(), &[0.0, -1.0]);
    }

    #[test]
    fn hexagonal_volume() {
        let h = catalog("hexagonal").unwrap();
        assert!((h.fundamental_volume() - 3f64.sqrt() / 2.0).abs() < 1e-15);
        assert!((h.min_dist_sq() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ball_volumes() {
        assert!((unit_ball_volume(2) - PI).abs() < 1e-12);
        assert!((unit_ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-12);
        assert!((unit_ball_volume(8) - PI.powi(4) / 24.0).abs() < 1e-12);
    }

    #[test]
    fn center_density_consistency() {
        for name in ["Z4", "hexagonal", "D4", "E8-unimodular", "E8-constructionA"] {
            let l = catalog(name).unwrap();
            let n = l.dim() as f64;
            let lhs = 4.0 * l.center_density().powf(2.0 / n);
            assert!((lhs - l.coding_gain()).abs() < 1e-9, "{name}");
        }
    }

    #[test]
    fn invalid_generators_rejected() {
        let singular = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(Lattice::new(singular).is_err());
        let rect = DMatrix::from_row_slice(2, 1, &[1.0, 2.0]);
        assert!(Lattice::new(rect).is_err());
        let nan = DMatrix::from_row_slice(1, 1, &[f64::NAN]);
        assert!(Lattice::new(nan).is_err());
    }

    #[test]
    fn scale_and_rotate() {
        let z = catalog("Z4").unwrap();
        let s = z.scale(2.0).unwrap();
        assert!((s.fundamental_volume() - 16.0).abs() < 1e-12);
        assert!(z.scale(0.0).is_err());
        let (c, sn) = (0.3f64.cos(), 0.3f64.sin());
        let mut u = DMatrix::<f64>::identity(4, 4);
        u[(0, 0)] = c;
        u[(0, 1)] = -sn;
        u[(1, 0)] = sn;
        u[(1, 1)] = c;
        let r = z.rotate(&u).unwrap();
        assert!((r.coding_gain() - 1.0).abs() < 1e-12);
        let mut bad = u.clone();
        bad[(0, 0)] = 2.0;
        assert!(z.rotate(&bad).is_err());
    }

    #[test]
    fn negated_lattice_is_same_point_set() {
        let e8 = catalog("E8-unimodular").unwrap();
        let neg = e8.scale(-1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let y = DVector::from_fn(8, |_, _| rand::Rng::random::<f64>(&mut rng) * 6.0 - 3.0);
            let a = e8.quantize(&y);
            let b = neg.quantize(&y);
            assert!((a - b).amax() < 1e-12);
        }
    }

    #[test]
    fn sublattice_detection() {
        let z8 = catalog("Z8").unwrap();
        let e8a = catalog("E8-constructionA").unwrap();
        let e8 = catalog("E8-unimodular").unwrap();
        assert!(e8a.is_sublattice_of(&z8));
        assert!(!z8.is_sublattice_of(&e8a));
        assert!(!e8.is_sublattice_of(&z8));
        let k = e8a.coordinates_in(&z8).unwrap();
        assert_eq!(k.len(), 8);
    }

    #[test]
    fn code_region_membership() {
        let h = catalog("hexagonal").unwrap();
        let s = h.scale(4.0).unwrap();
        let region =
            LatticeCodeRegion::new(h.clone(), DVector::zeros(2), Shaping::Voronoi(s)).unwrap();
        assert!(region.in_region(&DVector::from_vec(vec![0.5, 0.5])));
        assert!(!region.in_region(&DVector::from_vec(vec![3.0, 0.0])));
        let cube = LatticeCodeRegion::new(h, DVector::zeros(2), Shaping::Hypercube { side: 2.0 })
            .unwrap();
        assert!(cube.in_region(&DVector::from_vec(vec![0.9, -0.9])));
        assert!(!cube.in_region(&DVector::from_vec(vec![1.1, 0.0])));
    }
}
