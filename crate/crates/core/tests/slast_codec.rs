mod common;

use std::collections::HashSet;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stlattice::cda::{golden_generator, min_det_sample};
use stlattice::channel::{draw_noise, realize_channel};
use stlattice::lattice::catalog;
use stlattice::mmse::filters_with_regularizer;
use stlattice::slast::{DitherPolicy, Message, SlastCode};
use stlattice::tcm::det_sq;

use common::hexagon_second_moment;

fn golden(q: u32) -> SlastCode {
    SlastCode::build(&golden_generator(), &catalog("Zn8").unwrap(), q, 1).unwrap()
}

#[test]
fn codebook_is_injective_and_shaped() {
    let code = golden(2);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let u0 = code.draw_dither(&DitherPolicy::Uniform, &mut rng).unwrap();
    let book = code.codebook(&u0, 1 << 16).unwrap();
    assert_eq!(book.len(), 256);
    let keys: HashSet<String> = book
        .iter()
        .map(|(_, x)| x.iter().map(|v| format!("{v:.8}")).collect::<Vec<_>>().join(","))
        .collect();
    assert_eq!(keys.len(), 256);
    let s = code.shaping_lattice();
    for (_, x) in &book {
        for _ in 0..20 {
            let z: Vec<i64> = (0..8).map(|_| rng.random_range(-2..=2)).collect();
            let lam = s.point(&z);
            assert!(x.norm_squared() <= (x + lam).norm_squared() + 1e-9);
        }
    }
}

#[test]
fn shaping_lowers_mean_energy() {
    for (name, q) in [("hexagonal", 4u32), ("hexagonal", 16), ("E8-unimodular", 4)] {
        let base = catalog(name).unwrap();
        let d = base.dim();
        let m = ((d / 2) as f64).sqrt() as usize;
        let code = SlastCode::build(&DMatrix::identity(2 * m * m, 2 * m * m), &base, q, d / (2 * m * m)).unwrap();
        let u0 = DVector::zeros(d);
        let (mut sphere, mut linear, mut count) = (0.0, 0.0, 0usize);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let size = code.codebook_size().unwrap();
        let samples: Vec<Message> = if size <= 4096 {
            (0..size).map(|k| Message::from_index(k, d, q)).collect()
        } else {
            (0..4096).map(|_| Message::random(&mut rng, d, q)).collect()
        };
        for msg in &samples {
            sphere += code.encode(msg, &u0).unwrap().norm_squared();
            linear += code.linear_encode(msg).unwrap().norm_squared();
            count += 1;
        }
        assert!(sphere / (count as f64) < linear / (count as f64), "{name} Q={q}");
    }
}

#[test]
fn hexagonal_moment_matches_polygon_integral() {
    let code = SlastCode::build(&DMatrix::identity(2, 2), &catalog("hexagonal").unwrap(), 3, 1).unwrap();
    let (m, se) = code.second_moment();
    // shaping hexagon of Q * (unit distance) has inradius Q / 2
    let exact = hexagon_second_moment(1.5);
    assert!((m - exact).abs() < 3.0 * se, "{m} vs {exact} (se {se})");
}

#[test]
fn dithered_codewords_have_zero_mean() {
    let code = golden(4).with_moment_samples(10_000, 7);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = 10_000;
    let mut sum = DVector::zeros(8);
    let mut sum_sq = DVector::zeros(8);
    for _ in 0..n {
        let u0 = code.draw_dither(&DitherPolicy::Uniform, &mut rng).unwrap();
        let x = code.encode(&Message::random(&mut rng, 8, 4), &u0).unwrap();
        sum += &x;
        sum_sq += x.component_mul(&x);
    }
    for i in 0..8 {
        let mean = sum[i] / n as f64;
        let var = sum_sq[i] / n as f64 - mean * mean;
        assert!(mean.abs() < 3.0 * (var / n as f64).sqrt() + 1e-12, "coordinate {i}: {mean}");
    }
}

#[test]
fn effective_noise_keeps_the_nominal_variance() {
    let code = golden(2).with_moment_samples(20_000, 9);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let alpha = code.power_scale(10.0).unwrap();
    let ch = realize_channel(2, 2, 2, &mut rng);
    let h = &ch.real * alpha;
    let fp = filters_with_regularizer(&h, code.mmse_regularizer()).unwrap();
    let bias = &fp.backward - &fp.forward * &h;
    let n = 10_000;
    let mut acc = 0.0;
    for _ in 0..n {
        let u0 = code.draw_dither(&DitherPolicy::Uniform, &mut rng).unwrap();
        let x = code.encode(&Message::random(&mut rng, 8, 2), &u0).unwrap();
        let e = -(&bias * &x) + &fp.forward * draw_noise(2, 2, &mut rng);
        acc += e.norm_squared();
    }
    let per_dim = acc / (n as f64 * 8.0);
    assert!((per_dim - 0.5).abs() < 0.025, "{per_dim}");
}

#[test]
fn nvd_witness_is_independent_of_q() {
    let c2 = golden(2);
    let c4 = golden(4);
    // codeword differences at Q = 2, taken from the zero-dither codebook
    let book = c2.codebook(&DVector::zeros(8), 1 << 16).unwrap();
    let mut min_pair = f64::INFINITY;
    for i in 0..book.len() {
        for j in i + 1..book.len() {
            min_pair = min_pair.min(det_sq(&(&book[i].1 - &book[j].1), 2));
        }
    }
    assert!(min_pair > 1e-9);
    // both codes share the coding lattice, so shells agree exactly
    let r = 2.5;
    let a = min_det_sample(c2.coding_lattice(), usize::MAX, r).unwrap();
    let b = min_det_sample(c4.coding_lattice(), usize::MAX, r).unwrap();
    assert!(a > 0.0);
    assert!((a - b).abs() <= 1e-12 * a.max(1.0));
}

#[test]
fn stacked_leech_code_round_trips() {
    let code = SlastCode::build(&golden_generator(), &catalog("leech").unwrap(), 2, 3)
        .unwrap()
        .with_moment_samples(2_000, 1);
    assert_eq!(code.t(), 6);
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let alpha = code.power_scale(1e4).unwrap();
    let ch = realize_channel(2, 2, 6, &mut rng);
    let h = &ch.real * alpha;
    for _ in 0..3 {
        let msg = Message::random(&mut rng, 24, 2);
        let u0 = code.draw_dither(&DitherPolicy::Uniform, &mut rng).unwrap();
        let y = &h * code.encode(&msg, &u0).unwrap();
        assert_eq!(code.decode_lattice(&h, &y, &u0).unwrap(), msg);
    }
}

#[test]
fn codebook_csv_is_written() {
    let code = SlastCode::build(&DMatrix::identity(2, 2), &catalog("hexagonal").unwrap(), 4, 1).unwrap();
    let csv = code.codebook_csv(&DVector::zeros(2), 1 << 10).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows[0], "msg_digits, x_coords, energy");
    assert_eq!(rows.len(), 17);
    let fields: Vec<&str> = rows[5].split(", ").collect();
    assert_eq!(fields.len(), 3);
    let x: Vec<f64> = fields[1].split(' ').map(|v| v.parse().unwrap()).collect();
    let e: f64 = fields[2].parse().unwrap();
    assert!((x[0] * x[0] + x[1] * x[1] - e).abs() < 1e-9);
}
