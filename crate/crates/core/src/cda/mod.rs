//! Cyclic division algebras of degree 2 over `Q(i)`.
//!
//! Algebra elements live in exact coordinates: matrix entries are elements of
//! a quadratic extension with rational Gaussian coefficients, and elements of
//! an order are integer combinations over an ordered `Z[i]`-basis. Floating
//! point only appears in the derived complex-matrix and real-lattice views.

mod field;
mod gaussian;
mod search;

pub use field::{gr, gr_from, gr_to_f64, gr_to_gaussian, Extension, GaussRat, LElem, Mat2};
pub use gaussian::GaussianInt;
pub use search::{beta_search, BetaCandidate, BetaSearch};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use num_rational::Ratio;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::layout::{real_form, to_complex, to_real};

/// A cyclic algebra `(L/Q(i), sigma, gamma)` of degree 2, with `L = Q(i)(w)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgebraSpec {
    pub name: &'static str,
    pub gamma: GaussianInt,
    pub ext: Extension,
}

impl AlgebraSpec {
    /// `L = Q(i)(theta)`, `theta^2 = theta + 1`, `sigma(theta) = 1 - theta`, `gamma = i`.
    pub fn golden() -> Self {
        AlgebraSpec {
            name: "golden",
            gamma: GaussianInt::I,
            ext: Extension {
                c0: gr(1, 0),
                c1: gr(1, 0),
                root: Complex64::new((1.0 + 5f64.sqrt()) / 2.0, 0.0),
            },
        }
    }

    /// `L = Q(i)(delta)`, `delta^2 = 2 + i` (first-quadrant root),
    /// `sigma(delta) = -delta`, `gamma = i`.
    pub fn golden_plus() -> Self {
        AlgebraSpec {
            name: "golden+",
            gamma: GaussianInt::I,
            ext: Extension {
                c0: gr(2, 1),
                c1: gr(0, 0),
                root: Complex64::new(2.0, 1.0).sqrt(),
            },
        }
    }

    /// Exact left regular representation `[[l0, gamma sigma(l1)], [l1, sigma(l0)]]`.
    pub fn left_regular_exact(&self, l0: &LElem, l1: &LElem) -> Mat2 {
        let g = gr_from(self.gamma);
        Mat2::from_entries(
            l0.clone(),
            self.ext.sigma(l1).scale(&g),
            l1.clone(),
            self.ext.sigma(l0),
        )
    }
}

/// Left regular representation of `l0 + z l1` as a complex 2x2 matrix.
pub fn left_regular_rep(alg: &AlgebraSpec, l0: &LElem, l1: &LElem) -> DMatrix<Complex64> {
    alg.left_regular_exact(l0, l1).to_complex(&alg.ext)
}

/// Reduced norm (determinant) of a 2x2 complex matrix.
pub fn reduced_norm(x: &DMatrix<Complex64>) -> Complex64 {
    x[(0, 0)] * x[(1, 1)] - x[(0, 1)] * x[(1, 0)]
}

/// Reduced trace of a 2x2 complex matrix.
pub fn reduced_trace(x: &DMatrix<Complex64>) -> Complex64 {
    x[(0, 0)] + x[(1, 1)]
}

/// The Golden code rotation: an 8x8 real orthonormal generator of `G_p Z^8`.
///
/// Column `k` (resp. `k + 4`) is the real layout of the codeword generated by
/// the real (resp. imaginary) unit on the `k`-th information symbol, with
/// symbols `(a1, a2)` feeding `l0 = eta (a1 + theta a2)` and `(a3, a4)`
/// feeding `l1`.
pub fn golden_generator() -> DMatrix<f64> {
    let alg = AlgebraSpec::golden();
    let ext = &alg.ext;
    let theta = LElem::new(gr(0, 0), gr(1, 0));
    // eta = 1 + i - i theta
    let eta = LElem::new(gr(1, 1), gr(0, -1));
    let s_eta = ext.sigma(&eta);
    let s_theta = ext.sigma(&theta);
    let g = gr_from(alg.gamma);
    let z = LElem::zero();
    let c = |x: &LElem| ext.to_complex(x);
    let t_eta = ext.mul(&theta, &eta);
    let st_seta = ext.mul(&s_theta, &s_eta);
    // rows: l0, l1, gamma sigma(l1), sigma(l0)
    let rows: [[LElem; 4]; 4] = [
        [eta.clone(), t_eta.clone(), z.clone(), z.clone()],
        [z.clone(), z.clone(), eta.clone(), t_eta],
        [z.clone(), z.clone(), s_eta.scale(&g), st_seta.scale(&g)],
        [s_eta, st_seta, z.clone(), z],
    ];
    let gc = DMatrix::from_fn(4, 4, |i, j| c(&rows[i][j]) / 5f64.sqrt());
    real_form(&gc)
}

/// Exact coordinates of `x` over an ordered `Q(i)`-linearly independent
/// family of matrices, if `x` is in their span.
fn solve_coords(basis: &[Mat2], x: &Mat2) -> Option<Vec<GaussRat>> {
    let k = basis.len();
    let cols: Vec<[GaussRat; 8]> = basis.iter().map(Mat2::flatten).collect();
    let rhs = x.flatten();
    // augmented 8 x (k+1) system
    let mut a: Vec<Vec<GaussRat>> = (0..8)
        .map(|r| {
            let mut row: Vec<GaussRat> = cols.iter().map(|c| c[r]).collect();
            row.push(rhs[r]);
            row
        })
        .collect();
    let mut pivot_row = 0;
    let mut pivots = Vec::with_capacity(k);
    for col in 0..k {
        let Some(p) = (pivot_row..8).find(|&r| !a[r][col].is_zero()) else {
            return None;
        };
        a.swap(pivot_row, p);
        let inv = GaussRat::one() / a[pivot_row][col];
        for v in a[pivot_row].iter_mut() {
            *v *= inv;
        }
        for r in 0..8 {
            if r != pivot_row && !a[r][col].is_zero() {
                let f = a[r][col];
                let prow = a[pivot_row].clone();
                for (v, w) in a[r].iter_mut().zip(prow) {
                    *v -= f * w;
                }
            }
        }
        pivots.push(pivot_row);
        pivot_row += 1;
    }
    if (pivot_row..8).any(|r| !a[r][k].is_zero()) {
        return None;
    }
    Some(pivots.iter().map(|&r| a[r][k]).collect())
}

/// An element of an order, in Gaussian-integer coordinates over its basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AlgebraElement {
    pub coords: [GaussianInt; 4],
}

impl AlgebraElement {
    pub fn new(coords: [GaussianInt; 4]) -> Self {
        AlgebraElement { coords }
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|c| c.is_zero())
    }

    pub fn scale(&self, s: GaussianInt) -> Self {
        AlgebraElement::new(self.coords.map(|c| c * s))
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut c = self.coords;
        c.iter_mut().zip(o.coords).for_each(|(a, b)| *a = *a + b);
        AlgebraElement::new(c)
    }
}

/// Which side the generator of a principal one-sided ideal multiplies from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IdealSide {
    /// `{x M : x in O}`.
    #[default]
    Left,
    /// `{M x : x in O}`.
    Right,
}

/// A `Z[i]`-order given by an ordered basis of 2x2 matrices over `L`.
#[derive(Debug, Clone)]
pub struct OrderBasis {
    pub algebra: AlgebraSpec,
    basis: [Mat2; 4],
    // coordinates of basis[i] * basis[j]
    structure: [[[GaussianInt; 4]; 4]; 4],
    // reduced norm as a quadratic form: N(sum g_k B_k) = sum g_k g_l P_kl / denom
    norm_form: [[(GaussianInt, GaussianInt); 4]; 4],
    norm_denom: i64,
}

impl OrderBasis {
    /// Validates ring closure (every pairwise product has Gaussian-integer
    /// coordinates) and that the identity is in the span.
    pub fn new(algebra: AlgebraSpec, basis: [Mat2; 4]) -> Result<Self> {
        let ext = &algebra.ext;
        let mut structure = [[[GaussianInt::ZERO; 4]; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                let prod = basis[i].mul(&basis[j], ext);
                let c = solve_coords(&basis, &prod).ok_or_else(|| {
                    Error::NotAnOrderElement(format!("product B{i}*B{j} leaves the span"))
                })?;
                for k in 0..4 {
                    structure[i][j][k] = gr_to_gaussian(&c[k]).ok_or_else(|| {
                        Error::NotAnOrderElement(format!(
                            "product B{i}*B{j} has non-integral coordinates"
                        ))
                    })?;
                }
            }
        }
        let id = solve_coords(&basis, &Mat2::identity())
            .ok_or_else(|| Error::NotAnOrderElement("identity is not in the span".into()))?;
        if id.iter().any(|c| gr_to_gaussian(c).is_none()) {
            return Err(Error::NotAnOrderElement("identity is not integral".into()));
        }

        // P_kl = B_k[0][0] B_l[1][1] - B_k[0][1] B_l[1][0], symmetrized
        let mut raw: Vec<Vec<LElem>> = vec![vec![LElem::zero(); 4]; 4];
        for k in 0..4 {
            for l in 0..4 {
                let p = ext
                    .mul(&basis[k].0[0][0], &basis[l].0[1][1])
                    .sub(&ext.mul(&basis[k].0[0][1], &basis[l].0[1][0]));
                raw[k][l] = p;
            }
        }
        let mut denom: i128 = 1;
        for row in &raw {
            for p in row {
                for r in [p.a.re, p.a.im, p.b.re, p.b.im] {
                    denom = num_integer_lcm(denom, *r.denom());
                }
            }
        }
        let to_int = |r: Ratio<i128>| (r * Ratio::from_integer(denom)).to_integer() as i64;
        let mut norm_form = [[(GaussianInt::ZERO, GaussianInt::ZERO); 4]; 4];
        for k in 0..4 {
            for l in 0..4 {
                let p = &raw[k][l];
                norm_form[k][l] = (
                    GaussianInt::new(to_int(p.a.re), to_int(p.a.im)),
                    GaussianInt::new(to_int(p.b.re), to_int(p.b.im)),
                );
            }
        }
        Ok(OrderBasis {
            algebra,
            basis,
            structure,
            norm_form,
            norm_denom: denom as i64,
        })
    }

    pub fn basis(&self) -> &[Mat2; 4] {
        &self.basis
    }

    pub fn structure_constants(&self) -> &[[[GaussianInt; 4]; 4]; 4] {
        &self.structure
    }

    pub fn identity(&self) -> AlgebraElement {
        let c = solve_coords(&self.basis, &Mat2::identity()).expect("checked at construction");
        AlgebraElement::new([0, 1, 2, 3].map(|k| gr_to_gaussian(&c[k]).expect("integral")))
    }

    /// Coordinates of an exact matrix, if it belongs to the order.
    pub fn coords_of(&self, x: &Mat2) -> Result<AlgebraElement> {
        let c = solve_coords(&self.basis, x)
            .ok_or_else(|| Error::NotAnOrderElement("matrix is outside the span".into()))?;
        let mut out = [GaussianInt::ZERO; 4];
        for k in 0..4 {
            out[k] = gr_to_gaussian(&c[k])
                .ok_or_else(|| Error::NotAnOrderElement("non-integral coordinates".into()))?;
        }
        Ok(AlgebraElement::new(out))
    }

    pub fn matrix_exact(&self, x: &AlgebraElement) -> Mat2 {
        self.basis
            .iter()
            .zip(x.coords)
            .fold(Mat2::zero(), |acc, (b, g)| acc.add(&b.scale(&gr_from(g))))
    }

    pub fn matrix(&self, x: &AlgebraElement) -> DMatrix<Complex64> {
        self.matrix_exact(x).to_complex(&self.algebra.ext)
    }

    /// Product in the order, via the structure constants.
    pub fn mul(&self, x: &AlgebraElement, y: &AlgebraElement) -> AlgebraElement {
        let mut out = [GaussianInt::ZERO; 4];
        for i in 0..4 {
            if x.coords[i].is_zero() {
                continue;
            }
            for j in 0..4 {
                let s = x.coords[i] * y.coords[j];
                if s.is_zero() {
                    continue;
                }
                for k in 0..4 {
                    out[k] = out[k] + s * self.structure[i][j][k];
                }
            }
        }
        AlgebraElement::new(out)
    }

    /// Exact reduced norm; always a Gaussian integer for order elements.
    pub fn reduced_norm(&self, x: &AlgebraElement) -> Result<GaussianInt> {
        let mut a = GaussianInt::ZERO;
        let mut b = GaussianInt::ZERO;
        for k in 0..4 {
            if x.coords[k].is_zero() {
                continue;
            }
            for l in 0..4 {
                let s = x.coords[k] * x.coords[l];
                let (pa, pb) = self.norm_form[k][l];
                a = a + s * pa;
                b = b + s * pb;
            }
        }
        let d = self.norm_denom;
        if !b.is_zero() || a.re % d != 0 || a.im % d != 0 {
            return Err(Error::NotAnOrderElement(format!(
                "reduced norm ({a} + ({b}) w) / {d} is not a Gaussian integer"
            )));
        }
        Ok(GaussianInt::new(a.re / d, a.im / d))
    }

    /// Exact reduced trace.
    pub fn reduced_trace(&self, x: &AlgebraElement) -> LElem {
        self.matrix_exact(x).trace()
    }

    /// Real 8x8 generator of `{a x c : x in O}`, with columns ordered as
    /// `a B_k c` then `a (i B_k) c`.
    pub fn sandwich_lattice(&self, a: &AlgebraElement, c: &AlgebraElement) -> Result<Lattice> {
        Lattice::new(self.sandwich_generator(a, c))
    }

    pub fn sandwich_generator(&self, a: &AlgebraElement, c: &AlgebraElement) -> DMatrix<f64> {
        let mut g = DMatrix::zeros(8, 8);
        for (col, scalar) in [(0usize, GaussianInt::ONE), (4, GaussianInt::I)] {
            for k in 0..4 {
                let mut e = [GaussianInt::ZERO; 4];
                e[k] = scalar;
                let prod = self.mul(&self.mul(a, &AlgebraElement::new(e)), c);
                g.set_column(col + k, &to_real(&self.matrix(&prod)));
            }
        }
        g
    }

    /// Real lattice of the whole order.
    pub fn lattice(&self) -> Result<Lattice> {
        let one = self.identity();
        self.sandwich_lattice(&one, &one)
    }

    /// Real lattice of the principal one-sided ideal generated by `m`.
    pub fn ideal_lattice(&self, m: &AlgebraElement, side: IdealSide) -> Result<Lattice> {
        let one = self.identity();
        match side {
            IdealSide::Left => self.sandwich_lattice(&one, m),
            IdealSide::Right => self.sandwich_lattice(m, &one),
        }
    }

    /// Real lattice of the right ideal `beta O`.
    pub fn principal_lattice(&self, beta: &AlgebraElement) -> Result<Lattice> {
        self.sandwich_lattice(beta, &self.identity())
    }
}

fn num_integer_lcm(a: i128, b: i128) -> i128 {
    let (g, _, _) = crate::intlin::ext_gcd(a, b);
    (a / g * b).abs()
}

/// The maximal order of the Golden+ algebra with its ordered basis.
pub fn gaplus_order() -> OrderBasis {
    let h = |re: i128, im: i128| Ratio::new(re, 2).into_complex(im);
    let e = |a: GaussRat, b: GaussRat| LElem::new(a, b);
    let b0 = Mat2::identity();
    let b1 = Mat2::from_entries(LElem::zero(), LElem::one(), LElem::scalar(gr(0, 1)), LElem::zero());
    // (1/2) [[i + i d, i - d], [-1 + i d, i - i d]]
    let b2 = Mat2::from_entries(
        e(h(0, 1), h(0, 1)),
        e(h(0, 1), h(-1, 0)),
        e(h(-1, 0), h(0, 1)),
        e(h(0, 1), h(0, -1)),
    );
    // (1/2) [[-1 - i d, i + i d], [-1 + d, -1 + i d]]
    let b3 = Mat2::from_entries(
        e(h(-1, 0), h(0, -1)),
        e(h(0, 1), h(0, 1)),
        e(h(-1, 0), h(1, 0)),
        e(h(-1, 0), h(0, 1)),
    );
    OrderBasis::new(AlgebraSpec::golden_plus(), [b0, b1, b2, b3])
        .expect("the Golden+ basis is a valid order")
}

trait IntoComplex {
    fn into_complex(self, im: i128) -> GaussRat;
}

impl IntoComplex for Ratio<i128> {
    fn into_complex(self, im: i128) -> GaussRat {
        GaussRat::new(self, Ratio::new(im, 2))
    }
}

/// `diag((1 - delta)^3, (1 + delta)^3)` as an exact matrix.
pub fn gaplus_ideal_generator_matrix() -> Mat2 {
    let ext = AlgebraSpec::golden_plus().ext;
    let one_minus = LElem::new(gr(1, 0), gr(-1, 0));
    let one_plus = LElem::new(gr(1, 0), gr(1, 0));
    Mat2::from_entries(
        ext.pow(&one_minus, 3),
        LElem::zero(),
        LElem::zero(),
        ext.pow(&one_plus, 3),
    )
}

/// The ideal generator `M` in coordinates over the Golden+ basis.
pub fn gaplus_ideal_generator(order: &OrderBasis) -> AlgebraElement {
    order
        .coords_of(&gaplus_ideal_generator_matrix())
        .expect("M lies in the Golden+ order")
}

/// Real lattice of the Golden+ code: the left ideal `O M`.
pub fn gaplus_code_lattice() -> Lattice {
    let order = gaplus_order();
    let m = gaplus_ideal_generator(&order);
    order
        .ideal_lattice(&m, IdealSide::Left)
        .expect("the Golden+ ideal is full rank")
}

/// The partition element reported for the Golden+ lattice TCM construction,
/// with basis coordinates `(-1, -1, 1 - i, -1 - i)`.
pub fn gaplus_reference_beta() -> AlgebraElement {
    AlgebraElement::new([
        GaussianInt::new(-1, 0),
        GaussianInt::new(-1, 0),
        GaussianInt::new(1, -1),
        GaussianInt::new(-1, -1),
    ])
}

/// `[O : beta O] = |N_r(beta)^2|^2`.
pub fn order_index(order: &OrderBasis, beta: &AlgebraElement) -> Result<u128> {
    if beta.is_zero() {
        return Err(Error::NotAnOrderElement("zero has no index".into()));
    }
    let n = order.reduced_norm(beta)?.norm() as u128;
    Ok(n * n)
}

/// Minimum of `|det X|^2` over the nonzero points of an 8-dimensional
/// lattice (viewed as 2x2 complex matrices) within `radius` of the origin,
/// using at most `count` of the shortest such points.
pub fn min_det_sample(lattice: &Lattice, count: usize, radius: f64) -> Result<f64> {
    if lattice.dim() != 8 {
        return Err(Error::DimensionMismatch {
            expected: 8,
            got: lattice.dim(),
        });
    }
    if count == 0 {
        return Err(Error::EmptySample);
    }
    let pts = lattice
        .searcher()
        .enumerate_within(&DVector::zeros(8), radius, usize::MAX)?;
    pts.iter()
        .filter(|(z, _)| z.iter().any(|&v| v != 0))
        .take(count)
        .map(|(z, _)| reduced_norm(&to_complex(&lattice.point(z), 2, 2)).norm_sqr())
        .min_by(f64::total_cmp)
        .ok_or(Error::EmptySample)
}
