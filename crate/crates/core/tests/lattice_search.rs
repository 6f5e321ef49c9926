mod common;

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stlattice::clps::{closest_point, shortest_vector, SearchProblem, Searcher};
use stlattice::lattice::{catalog, read_lattice, write_lattice, CatalogName};
use stlattice::Lattice;

use common::{brute_force_cvp, random_basis};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn closest_point_matches_brute_force(seed in any::<u64>(), n in 2usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_basis(&mut rng, n);
        let t = DVector::from_fn(n, |_, _| rng.random_range(-4.0..4.0));
        let found = closest_point(&SearchProblem::closest(g.clone(), t.clone())).unwrap();
        let (_, best) = brute_force_cvp(&g, &t);
        prop_assert_eq!(found.metric, best);
    }

    #[test]
    fn quantizer_invariants_in_e8(seed in any::<u64>()) {
        let e8 = catalog("E8-unimodular").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let y = DVector::from_fn(8, |_, _| rng.random_range(-5.0..5.0));
        let q = e8.quantize(&y);
        let r = e8.mod_lattice(&y);
        // quantization is idempotent and the residual is reduced
        prop_assert!((e8.quantize(&q) - &q).amax() < 1e-9);
        prop_assert!(e8.mod_lattice(&r).metric_distance(&r) < 1e-9);
        prop_assert!(e8.coordinates(&(&y - &r)).is_some());
        // the residual is no longer than any of its translates by a short vector
        for j in 0..8 {
            let g = e8.generator().column(j).into_owned();
            prop_assert!(r.norm_squared() <= (&r - &g).norm_squared() + 1e-9);
            prop_assert!(r.norm_squared() <= (&r + &g).norm_squared() + 1e-9);
        }
    }

    #[test]
    fn shortest_vector_matches_brute_force(seed in any::<u64>(), n in 2usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_basis(&mut rng, n);
        let sv = shortest_vector(&SearchProblem::shortest(g.clone())).unwrap();
        let mut best = f64::INFINITY;
        let r = 4i64;
        let side = (2 * r + 1) as usize;
        for k in 0..side.pow(n as u32) {
            let mut m = k;
            let z: Vec<f64> = (0..n).map(|_| { let v = (m % side) as i64 - r; m /= side; v as f64 }).collect();
            if z.iter().all(|&v| v == 0.0) { continue; }
            best = best.min((&g * DVector::from_vec(z)).norm_squared());
        }
        prop_assert!((sv.metric - best).abs() <= 1e-9 * best);
    }
}

#[test]
fn catalog_round_trips_through_files() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["Zn(4)", "hexagonal", "D4", "E8-unimodular", "E8-constructionA", "BW16"] {
        let l = catalog(name).unwrap();
        let path = dir.path().join(format!("{}.txt", name.replace(['(', ')'], "_")));
        write_lattice(&l, &path).unwrap();
        let back = read_lattice(&path).unwrap();
        assert_eq!(back.generator(), l.generator(), "{name}");
    }
}

#[test]
fn catalog_names_parse() {
    assert_eq!("leech".parse::<CatalogName>().unwrap(), CatalogName::Leech24);
    assert_eq!("Zn(3)".parse::<CatalogName>().unwrap(), CatalogName::Cubic(3));
    assert!("nonsense".parse::<CatalogName>().is_err());
    assert!(catalog("nonsense").is_err());
}

#[test]
fn enumeration_counts_kissing_numbers() {
    let d4 = catalog("D4").unwrap();
    let pts = d4
        .searcher()
        .enumerate_within(&DVector::zeros(4), d4.min_distance() * (1.0 + 1e-9), 1000)
        .unwrap();
    assert_eq!(pts.len(), 25);
    let e8 = catalog("E8-unimodular").unwrap();
    let pts = e8
        .searcher()
        .enumerate_within(&DVector::zeros(8), e8.min_distance() * (1.0 + 1e-9), 1000)
        .unwrap();
    assert_eq!(pts.len(), 241);
}

#[test]
fn rotation_preserves_figures_of_merit() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let a = DMatrix::from_fn(8, 8, |_, _| rng.random_range(-1.0..1.0));
    let u = a.qr().q();
    let e8 = catalog("E8-constructionA").unwrap();
    let r = e8.rotate(&u).unwrap();
    assert!((r.coding_gain() - e8.coding_gain()).abs() < 1e-9);
    assert!((r.fundamental_volume() - e8.fundamental_volume()).abs() < 1e-9);
    let fresh = Lattice::new(r.generator().clone()).unwrap();
    assert!((fresh.min_dist_sq() - e8.min_dist_sq()).abs() < 1e-9);
}

#[test]
fn node_counts_are_reported() {
    let s = Searcher::new(catalog("BW16").unwrap().generator()).unwrap();
    let t = DVector::from_element(16, 0.3);
    assert!(s.node_count(&t).unwrap() > 0);
}
