//! Exhaustive search for principal ideals `beta O` of a given index with the
//! best coding gain.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use super::{order_index, AlgebraElement, GaussianInt, OrderBasis};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct BetaCandidate {
    pub beta: AlgebraElement,
    pub norm: GaussianInt,
    pub index: u128,
    pub coding_gain: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BetaSearch {
    pub target_index: u128,
    pub nu: i64,
    /// Every candidate with the target index, in enumeration order.
    pub candidates: Vec<BetaCandidate>,
    best: usize,
}

impl BetaSearch {
    pub fn best(&self) -> &BetaCandidate {
        &self.candidates[self.best]
    }

    /// CSV log with header `beta_coords, norm, index, coding_gain`; the four
    /// coordinates are space separated.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("beta_coords, norm, index, coding_gain\n");
        for c in &self.candidates {
            let coords: Vec<String> = c.beta.coords.iter().map(|g| g.to_string()).collect();
            let _ = writeln!(
                out,
                "{}, {}, {}, {:.12}",
                coords.join(" "),
                c.norm,
                c.index,
                c.coding_gain
            );
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}

/// Decodes the `k`-th point of the box `[-nu, nu]^8`, lexicographic over
/// `(Re g1, Im g1, ..., Re g4, Im g4)` with the last entry fastest.
fn box_point(mut k: u64, nu: i64) -> AlgebraElement {
    let side = (2 * nu + 1) as u64;
    let mut v = [0i64; 8];
    for slot in v.iter_mut().rev() {
        *slot = (k % side) as i64 - nu;
        k /= side;
    }
    AlgebraElement::new(std::array::from_fn(|i| GaussianInt::new(v[2 * i], v[2 * i + 1])))
}

/// Enumerates every nonzero `beta` whose Gaussian coordinates have real and
/// imaginary parts in `[-nu, nu]`, keeps those with `[O : beta O] = target`,
/// and ranks them by the coding gain of `beta O`. Ties go to the earliest
/// candidate in enumeration order.
pub fn beta_search(order: &OrderBasis, target_index: u128, nu: i64) -> Result<BetaSearch> {
    if nu < 1 {
        return Err(Error::Config(format!("nu must be at least 1, got {nu}")));
    }
    if target_index == 0 {
        return Err(Error::Config("target index must be positive".into()));
    }
    let side = (2 * nu + 1) as u64;
    let total = side
        .checked_pow(8)
        .ok_or_else(|| Error::Config(format!("search box for nu = {nu} is too large")))?;
    let candidates: Vec<BetaCandidate> = (0..total)
        .into_par_iter()
        .filter_map(|k| {
            let beta = box_point(k, nu);
            if beta.is_zero() {
                return None;
            }
            let norm = order.reduced_norm(&beta).ok()?;
            let index = order_index(order, &beta).ok()?;
            if index != target_index {
                return None;
            }
            let coding_gain = order.principal_lattice(&beta).ok()?.coding_gain();
            Some(BetaCandidate {
                beta,
                norm,
                index,
                coding_gain,
            })
        })
        .collect();
    if candidates.is_empty() {
        return Err(Error::NoCandidate);
    }
    let mut best = 0;
    for (i, c) in candidates.iter().enumerate() {
        let b = candidates[best].coding_gain;
        if c.coding_gain > b * (1.0 + 1e-9) {
            best = i;
        }
    }
    Ok(BetaSearch {
        target_index,
        nu,
        candidates,
        best,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cda::{gaplus_order, gaplus_reference_beta};

    #[test]
    fn box_enumeration_order() {
        let first = box_point(0, 1);
        assert!(first.coords.iter().all(|g| *g == GaussianInt::new(-1, -1)));
        let second = box_point(1, 1);
        assert_eq!(second.coords[3], GaussianInt::new(-1, 0));
        let mid = box_point((3u64.pow(8) - 1) / 2, 1);
        assert!(mid.is_zero());
    }

    #[test]
    fn unit_search_matches_the_order() {
        let order = gaplus_order();
        let s = beta_search(&order, 1, 1).unwrap();
        let g0 = order.lattice().unwrap().coding_gain();
        assert!(s.candidates.iter().all(|c| c.index == 1));
        assert!((s.best().coding_gain - g0).abs() < 1e-9);
        assert!(s.candidates.iter().any(|c| c.beta == order.identity()));
    }

    #[test]
    fn target_sixteen_beats_known_elements() {
        let order = gaplus_order();
        let s = beta_search(&order, 16, 2).unwrap();
        let beta = gaplus_reference_beta();
        let beta2 = order.mul(&beta, &beta);
        let g_ref = order.principal_lattice(&beta2).unwrap().coding_gain();
        assert!(s.best().coding_gain >= g_ref - 1e-9);
        let central = order.identity().scale(GaussianInt::new(1, 1));
        assert!(s.candidates.iter().any(|c| c.beta == central));
        // ties resolve to the earliest maximizer
        let first_max = s
            .candidates
            .iter()
            .position(|c| c.coding_gain > s.best().coding_gain * (1.0 - 1e-9))
            .unwrap();
        assert_eq!(&s.candidates[first_max], s.best());
        let csv = s.to_csv();
        assert!(csv.starts_with("beta_coords, norm, index, coding_gain\n"));
        assert_eq!(csv.lines().count(), s.candidates.len() + 1);
    }

    #[test]
    fn reference_element_is_found_at_its_index() {
        let order = gaplus_order();
        let s = beta_search(&order, 4, 1).unwrap();
        assert!(s.candidates.iter().any(|c| c.beta == gaplus_reference_beta()));
        assert!(s.best().coding_gain >= order.principal_lattice(&gaplus_reference_beta()).unwrap().coding_gain() - 1e-9);
    }

    #[test]
    fn invalid_arguments() {
        let order = gaplus_order();
        assert!(beta_search(&order, 16, 0).is_err());
        assert!(beta_search(&order, 0, 1).is_err());
        // no element has index 2: indices are fourth powers of integers' norms
        assert_eq!(beta_search(&order, 2, 1), Err(Error::NoCandidate));
    }
}
