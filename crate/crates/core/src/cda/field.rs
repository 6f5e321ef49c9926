//! Exact arithmetic in a quadratic extension `L = Q(i)(w)` with
//! `w^2 = c0 + c1 w`, and 2x2 matrices over it.

use num_complex::{Complex, Complex64};
use num_rational::Ratio;
use num_traits::{One, Zero};

use super::GaussianInt;

/// An element of `Q(i)` with exact rational real and imaginary parts.
pub type GaussRat = Complex<Ratio<i128>>;

pub fn gr(re: i128, im: i128) -> GaussRat {
    Complex::new(Ratio::from_integer(re), Ratio::from_integer(im))
}

pub fn gr_from(g: GaussianInt) -> GaussRat {
    gr(g.re as i128, g.im as i128)
}

/// The Gaussian integer equal to `x`, if `x` has integral parts.
pub fn gr_to_gaussian(x: &GaussRat) -> Option<GaussianInt> {
    (x.re.is_integer() && x.im.is_integer()).then(|| {
        GaussianInt::new(x.re.to_integer() as i64, x.im.to_integer() as i64)
    })
}

pub fn gr_to_f64(x: &GaussRat) -> Complex64 {
    let f = |r: &Ratio<i128>| *r.numer() as f64 / *r.denom() as f64;
    Complex64::new(f(&x.re), f(&x.im))
}

/// `a + b w`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LElem {
    pub a: GaussRat,
    pub b: GaussRat,
}

impl LElem {
    pub fn new(a: GaussRat, b: GaussRat) -> Self {
        LElem { a, b }
    }

    pub fn scalar(a: GaussRat) -> Self {
        LElem { a, b: GaussRat::zero() }
    }

    pub fn zero() -> Self {
        LElem::scalar(GaussRat::zero())
    }

    pub fn one() -> Self {
        LElem::scalar(GaussRat::one())
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    pub fn add(&self, o: &LElem) -> LElem {
        LElem::new(self.a + o.a, self.b + o.b)
    }

    pub fn sub(&self, o: &LElem) -> LElem {
        LElem::new(self.a - o.a, self.b - o.b)
    }

    pub fn scale(&self, s: &GaussRat) -> LElem {
        LElem::new(self.a * s, self.b * s)
    }
}

/// The extension `Q(i)(w)` with `w^2 = c0 + c1 w`; `root` is the numerical
/// value of `w` used for floating-point views.
#[derive(Debug, Clone, PartialEq)]
pub struct Extension {
    pub c0: GaussRat,
    pub c1: GaussRat,
    pub root: Complex64,
}

impl Extension {
    pub fn mul(&self, x: &LElem, y: &LElem) -> LElem {
        let bd = x.b * y.b;
        LElem::new(
            x.a * y.a + bd * self.c0,
            x.a * y.b + x.b * y.a + bd * self.c1,
        )
    }

    /// The nontrivial automorphism: `w -> c1 - w`.
    pub fn sigma(&self, x: &LElem) -> LElem {
        LElem::new(x.a + x.b * self.c1, -x.b)
    }

    pub fn to_complex(&self, x: &LElem) -> Complex64 {
        gr_to_f64(&x.a) + gr_to_f64(&x.b) * self.root
    }

    pub fn pow(&self, x: &LElem, e: u32) -> LElem {
        (0..e).fold(LElem::one(), |acc, _| self.mul(&acc, x))
    }
}

/// A 2x2 matrix over `L`, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mat2(pub [[LElem; 2]; 2]);

impl Mat2 {
    pub fn from_entries(a: LElem, b: LElem, c: LElem, d: LElem) -> Self {
        Mat2([[a, b], [c, d]])
    }

    pub fn identity() -> Self {
        Mat2::from_entries(LElem::one(), LElem::zero(), LElem::zero(), LElem::one())
    }

    pub fn zero() -> Self {
        Mat2::from_entries(LElem::zero(), LElem::zero(), LElem::zero(), LElem::zero())
    }

    pub fn add(&self, o: &Mat2) -> Mat2 {
        let e = |i: usize, j: usize| self.0[i][j].add(&o.0[i][j]);
        Mat2::from_entries(e(0, 0), e(0, 1), e(1, 0), e(1, 1))
    }

    pub fn scale(&self, s: &GaussRat) -> Mat2 {
        let e = |i: usize, j: usize| self.0[i][j].scale(s);
        Mat2::from_entries(e(0, 0), e(0, 1), e(1, 0), e(1, 1))
    }

    pub fn mul(&self, o: &Mat2, ext: &Extension) -> Mat2 {
        let e = |i: usize, j: usize| {
            ext.mul(&self.0[i][0], &o.0[0][j])
                .add(&ext.mul(&self.0[i][1], &o.0[1][j]))
        };
        Mat2::from_entries(e(0, 0), e(0, 1), e(1, 0), e(1, 1))
    }

    pub fn transpose(&self) -> Mat2 {
        let [[a, b], [c, d]] = self.0.clone();
        Mat2::from_entries(a, c, b, d)
    }

    pub fn det(&self, ext: &Extension) -> LElem {
        ext.mul(&self.0[0][0], &self.0[1][1])
            .sub(&ext.mul(&self.0[0][1], &self.0[1][0]))
    }

    pub fn trace(&self) -> LElem {
        self.0[0][0].add(&self.0[1][1])
    }

    pub fn to_complex(&self, ext: &Extension) -> nalgebra::DMatrix<Complex64> {
        nalgebra::DMatrix::from_fn(2, 2, |i, j| ext.to_complex(&self.0[i][j]))
    }

    /// The 8 rational Gaussian coordinates `(a, b)` of the four entries.
    pub fn flatten(&self) -> [GaussRat; 8] {
        let m = &self.0;
        [
            m[0][0].a, m[0][0].b, m[0][1].a, m[0][1].b, m[1][0].a, m[1][0].b, m[1][1].a,
            m[1][1].b,
        ]
    }
}
