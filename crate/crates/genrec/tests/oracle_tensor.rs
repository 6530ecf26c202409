//! Matrix-product and SVD results checked against independent oracles.

mod common;

use common::{frobenius_distance, gram_singular_values, naive_matmul, random_matrix};
use genrec::{matmul, svd_thin, SeededRng, Tensor};

#[test]
fn matmul_matches_triple_loop_oracle() {
    let mut rng = SeededRng::new(101);
    let a = random_matrix(5, 7, &mut rng);
    let b = random_matrix(7, 3, &mut rng);
    let got = matmul(&a, &b).unwrap();
    let want = naive_matmul(&a, &b);
    for (x, y) in got.as_slice().iter().zip(want.as_slice()) {
        assert!((x - y).abs() <= 1e-12 * y.abs().max(1.0), "{x} vs {y}");
    }
}

#[test]
fn svd_singular_values_match_gram_eigen_oracle() {
    let mut rng = SeededRng::new(102);
    let m = random_matrix(6, 4, &mut rng);
    let svd = svd_thin(&m).unwrap();
    let want = gram_singular_values(&m);
    assert_eq!(svd.singular_values.len(), 4);
    for (got, want) in svd.singular_values.iter().zip(&want) {
        assert!((got - want).abs() < 1e-9, "{got} vs {want}");
    }
}

#[test]
fn svd_reconstructs_one_thousand_random_matrices() {
    let mut rng = SeededRng::new(103);
    for trial in 0..1000 {
        let rows = 1 + rng.next_index(16);
        let cols = 1 + rng.next_index(16);
        let m = random_matrix(rows, cols, &mut rng);
        let svd = svd_thin(&m).unwrap();
        let rec = svd.reconstruct();
        let rel = frobenius_distance(&rec, &m) / m.frobenius_norm().max(1e-300);
        assert!(rel < 1e-9, "trial {trial} ({rows}x{cols}): rel {rel}");
    }
}

#[test]
fn svd_factors_are_orthonormal() {
    let mut rng = SeededRng::new(104);
    let m = random_matrix(9, 5, &mut rng);
    let svd = svd_thin(&m).unwrap();
    for side in [&svd.left, &svd.right] {
        let cols = side.shape()[1];
        let rows = side.shape()[0];
        for a in 0..cols {
            for b in 0..cols {
                let dot: f64 = (0..rows).map(|i| side.at(i, a) * side.at(i, b)).sum();
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((dot - want).abs() < 1e-10, "gram[{a}][{b}] = {dot}");
            }
        }
    }
}

#[test]
fn gaussian_tensor_shape_and_determinism() {
    let mut a = SeededRng::new(105);
    let mut b = SeededRng::new(105);
    let ta = genrec::gaussian(&mut a, &[3, 4], 0.5).unwrap();
    let tb = genrec::gaussian(&mut b, &[3, 4], 0.5).unwrap();
    assert_eq!(ta.shape(), &[3, 4]);
    assert_eq!(ta.as_slice(), tb.as_slice());
    assert_eq!(ta, Tensor::new(vec![3, 4], ta.as_slice().to_vec()).unwrap());
}
