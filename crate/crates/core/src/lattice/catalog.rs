use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;

use super::Lattice;
use crate::error::{Error, Result};
use crate::intlin::hermite_basis;

/// Named lattices available from [`catalog`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CatalogName {
    Cubic(usize),
    Hexagonal,
    D4,
    E8Unimodular,
    E8ConstructionA,
    BarnesWall16,
    Leech24,
}

impl fmt::Display for CatalogName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CatalogName::Cubic(n) => write!(f, "Zn({n})"),
            CatalogName::Hexagonal => f.write_str("hexagonal"),
            CatalogName::D4 => f.write_str("D4"),
            CatalogName::E8Unimodular => f.write_str("E8-unimodular"),
            CatalogName::E8ConstructionA => f.write_str("E8-constructionA"),
            CatalogName::BarnesWall16 => f.write_str("BW16"),
            CatalogName::Leech24 => f.write_str("Leech24"),
        }
    }
}

impl FromStr for CatalogName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        let name = match lower.as_str() {
            "hexagonal" | "hex" | "a2" => CatalogName::Hexagonal,
            "d4" => CatalogName::D4,
            "e8" | "e8-unimodular" => CatalogName::E8Unimodular,
            "e8-constructiona" | "e8a" => CatalogName::E8ConstructionA,
            "bw16" | "barnes-wall16" | "lambda16" => CatalogName::BarnesWall16,
            "leech24" | "leech" | "lambda24" => CatalogName::Leech24,
            other => {
                let digits = other
                    .strip_prefix("zn(")
                    .and_then(|r| r.strip_suffix(')'))
                    .or_else(|| other.strip_prefix("zn"))
                    .or_else(|| other.strip_prefix('z'));
                match digits.and_then(|d| d.parse::<usize>().ok()) {
                    Some(n) if n >= 1 => CatalogName::Cubic(n),
                    _ => return Err(Error::UnknownLattice(s.to_string())),
                }
            }
        };
        Ok(name)
    }
}

/// Looks up a lattice by name: `Zn(n)` (also `Zn`), `hexagonal`, `D4`,
/// `E8-unimodular`, `E8-constructionA`, `BW16`, `Leech24`.
pub fn catalog(name: &str) -> Result<Lattice> {
    build(name.parse()?)
}

fn build(name: CatalogName) -> Result<Lattice> {
    match name {
        CatalogName::Cubic(n) => Lattice::new(DMatrix::identity(n, n))?.into_integral(),
        CatalogName::Hexagonal => {
            Lattice::new(DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 3f64.sqrt() / 2.0]))
        }
        CatalogName::D4 => Lattice::new(DMatrix::from_row_slice(
            4,
            4,
            &[
                -1.0, 1.0, 0.0, 0.0, //
                -1.0, -1.0, 1.0, 0.0, //
                0.0, 0.0, -1.0, 1.0, //
                0.0, 0.0, 0.0, -1.0,
            ],
        ))?
        .into_integral(),
        CatalogName::E8Unimodular => Lattice::new(e8_unimodular())?.into_integral(),
        CatalogName::E8ConstructionA => {
            let mut gens: Vec<Vec<i128>> = hamming84().into_iter().collect();
            gens.extend((0..8).map(|i| unit(8, i, 2)));
            integer_lattice(&gens, 8, 1.0)
        }
        CatalogName::BarnesWall16 => {
            // {c1 + 2 c2 + 4 z : c1 in RM(1,4), c2 in the even-weight code}
            let mut gens: Vec<Vec<i128>> = reed_muller_1_4().into_iter().collect();
            gens.extend((1..16).map(|i| {
                let mut v = unit(16, 0, 2);
                v[i] = 2;
                v
            }));
            gens.extend((0..16).map(|i| unit(16, i, 4)));
            integer_lattice(&gens, 16, 1.0)
        }
        CatalogName::Leech24 => {
            // sqrt(8) * Leech = 2*Golay + 4*D24 + Z(-3, 1^23)
            let mut gens: Vec<Vec<i128>> = golay24()
                .into_iter()
                .map(|c| c.iter().map(|&b| 2 * b).collect())
                .collect();
            for i in 0..23 {
                let mut v = unit(24, i, 4);
                v[i + 1] = -4;
                gens.push(v);
            }
            let mut v = unit(24, 0, 4);
            v[1] = 4;
            gens.push(v);
            let mut odd = vec![1i128; 24];
            odd[0] = -3;
            gens.push(odd);
            integer_lattice(&gens, 24, 8f64.sqrt().recip())
        }
    }
}

/// The Example-1 generator of E8 with the printed rows as rows of `G`.
fn e8_unimodular() -> DMatrix<f64> {
    #[rustfmt::skip]
    let rows = [
        2.0, -1.0,  0.0,  0.0,  0.0,  0.0,  0.0, 0.5,
        0.0,  1.0, -1.0,  0.0,  0.0,  0.0,  0.0, 0.5,
        0.0,  0.0,  1.0, -1.0,  0.0,  0.0,  0.0, 0.5,
        0.0,  0.0,  0.0,  1.0, -1.0,  0.0,  0.0, 0.5,
        0.0,  0.0,  0.0,  0.0,  1.0, -1.0,  0.0, 0.5,
        0.0,  0.0,  0.0,  0.0,  0.0,  1.0, -1.0, 0.5,
        0.0,  0.0,  0.0,  0.0,  0.0,  0.0,  1.0, 0.5,
        0.0,  0.0,  0.0,  0.0,  0.0,  0.0,  0.0, 0.5,
    ];
    DMatrix::from_row_slice(8, 8, &rows)
}

fn unit(n: usize, i: usize, value: i128) -> Vec<i128> {
    let mut v = vec![0; n];
    v[i] = value;
    v
}

fn integer_lattice(generators: &[Vec<i128>], n: usize, scale: f64) -> Result<Lattice> {
    let basis = hermite_basis(generators, n)
        .ok_or_else(|| Error::InvalidLattice("generators are rank deficient".into()))?;
    let g = DMatrix::from_fn(n, n, |i, j| basis[j][i] as f64 * scale);
    Lattice::new(g)?.into_integral()
}

/// Generator rows of the extended (8,4) Hamming code in systematic form.
pub fn hamming84() -> [Vec<i128>; 4] {
    [
        vec![1, 0, 0, 0, 0, 1, 1, 1],
        vec![0, 1, 0, 0, 1, 0, 1, 1],
        vec![0, 0, 1, 0, 1, 1, 0, 1],
        vec![0, 0, 0, 1, 1, 1, 1, 0],
    ]
}

/// Generator rows of the first-order Reed–Muller code RM(1,4), length 16.
pub fn reed_muller_1_4() -> [Vec<i128>; 5] {
    let coord = |bit: usize| (0..16).map(|p| ((p >> bit) & 1) as i128).collect::<Vec<_>>();
    [vec![1; 16], coord(0), coord(1), coord(2), coord(3)]
}

/// Generator rows of the extended binary Golay code: the cyclic (23,12) code
/// with generator polynomial `1 + x^2 + x^4 + x^5 + x^6 + x^10 + x^11`,
/// extended by an overall parity bit.
pub fn golay24() -> Vec<Vec<i128>> {
    const POLY: [i128; 12] = [1, 0, 1, 0, 1, 1, 1, 0, 0, 0, 1, 1];
    (0..12)
        .map(|shift| {
            let mut row = vec![0i128; 24];
            for (k, &c) in POLY.iter().enumerate() {
                row[shift + k] = c;
            }
            row[23] = row[..23].iter().sum::<i128>() % 2;
            row
        })
        .collect()
}
