//! Independent oracles the integration tests check the library against.
//! Everything here recomputes results by a different route than the
//! implementation: naive loops, Gram-matrix eigendecompositions, direct
//! scatter sums, stepwise simulations.

#![allow(dead_code)]

use genrec::{SeededRng, Tensor};

/// Textbook i-j-k triple loop.
pub fn naive_matmul(a: &Tensor, b: &Tensor) -> Tensor {
    let (m, k) = (a.shape()[0], a.shape()[1]);
    let n = b.shape()[1];
    assert_eq!(k, b.shape()[0]);
    let mut out = Tensor::zeros(&[m, n]);
    for i in 0..m {
        for j in 0..n {
            let mut acc = 0.0;
            for x in 0..k {
                acc += a.at(i, x) * b.at(x, j);
            }
            *out.at_mut(i, j) = acc;
        }
    }
    out
}

/// Eigenvalues of a symmetric matrix by the classical two-sided Jacobi
/// rotation method, sorted descending.
pub fn symmetric_eigenvalues(sym: &Tensor) -> Vec<f64> {
    let n = sym.shape()[0];
    assert_eq!(n, sym.shape()[1]);
    let mut a: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| sym.at(i, j)).collect())
        .collect();
    for _ in 0..200 {
        // Largest off-diagonal element.
        let (mut p, mut q, mut big) = (0, 1, 0.0f64);
        for i in 0..n {
            for j in (i + 1)..n {
                if a[i][j].abs() > big {
                    big = a[i][j].abs();
                    p = i;
                    q = j;
                }
            }
        }
        if n < 2 || big < 1e-14 {
            break;
        }
        let theta = 0.5 * (2.0 * a[p][q]).atan2(a[p][p] - a[q][q]);
        let (s, c) = theta.sin_cos();
        for k in 0..n {
            let akp = a[k][p];
            let akq = a[k][q];
            a[k][p] = c * akp + s * akq;
            a[k][q] = -s * akp + c * akq;
        }
        for k in 0..n {
            let apk = a[p][k];
            let aqk = a[q][k];
            a[p][k] = c * apk + s * aqk;
            a[q][k] = -s * apk + c * aqk;
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    eig.sort_by(|x, y| y.partial_cmp(x).unwrap());
    eig
}

/// Gram matrix MᵀM.
pub fn gram(m: &Tensor) -> Tensor {
    let (rows, cols) = (m.shape()[0], m.shape()[1]);
    let mut g = Tensor::zeros(&[cols, cols]);
    for i in 0..cols {
        for j in 0..cols {
            let mut acc = 0.0;
            for r in 0..rows {
                acc += m.at(r, i) * m.at(r, j);
            }
            *g.at_mut(i, j) = acc;
        }
    }
    g
}

/// Singular values via the Gram-matrix eigenvalue route, descending.
pub fn gram_singular_values(m: &Tensor) -> Vec<f64> {
    symmetric_eigenvalues(&gram(m))
        .into_iter()
        .map(|l| l.max(0.0).sqrt())
        .collect()
}

/// Minimal Frobenius error of any rank-r approximation:
/// sqrt(Σ_{j>r} σ_j²), from the Gram-eigen oracle.
pub fn eckart_young_error(m: &Tensor, r: usize) -> f64 {
    gram_singular_values(m)
        .iter()
        .skip(r)
        .map(|s| s * s)
        .sum::<f64>()
        .sqrt()
}

/// Direct scatter-add transposed convolution: every input pixel deposits
/// `input[c,i,j] · kernel[c,o,:,:]` at stride-2 placements, padding 1.
pub fn scatter_deconv(input: &Tensor, kernel: &Tensor) -> Tensor {
    let (c_in, h, w) = (input.shape()[0], input.shape()[1], input.shape()[2]);
    let c_out = kernel.shape()[1];
    let (oh, ow) = (2 * h, 2 * w);
    let mut out = Tensor::zeros(&[c_out, oh, ow]);
    for c in 0..c_in {
        for o in 0..c_out {
            for iy in 0..h {
                for ix in 0..w {
                    for ky in 0..4 {
                        for kx in 0..4 {
                            let oy = 2 * iy as i64 + ky as i64 - 1;
                            let ox = 2 * ix as i64 + kx as i64 - 1;
                            if oy < 0 || ox < 0 || oy >= oh as i64 || ox >= ow as i64 {
                                continue;
                            }
                            *out.at3_mut(o, oy as usize, ox as usize) += input.at3(c, iy, ix)
                                * kernel.as_slice()
                                    [((c * c_out + o) * 4 + ky) * 4 + kx];
                        }
                    }
                }
            }
        }
    }
    out
}

/// Stepwise 1-D bounce simulation in [0, limit].
pub fn bounce_simulation(start: i64, velocity: i64, steps: usize, limit: i64) -> Vec<i64> {
    let mut pos = start;
    let mut vel = velocity;
    let mut track = vec![pos];
    for _ in 0..steps {
        let mut next = pos + vel;
        // Reflect until inside; limit 0 pins the sprite.
        while next < 0 || next > limit {
            if limit == 0 {
                next = 0;
                break;
            }
            if next < 0 {
                next = -next;
                vel = -vel;
            } else {
                next = 2 * limit - next;
                vel = -vel;
            }
        }
        pos = next;
        track.push(pos);
    }
    track
}

pub fn random_matrix(rows: usize, cols: usize, rng: &mut SeededRng) -> Tensor {
    Tensor::new(
        vec![rows, cols],
        (0..rows * cols).map(|_| rng.next_normal()).collect(),
    )
    .unwrap()
}

pub fn frobenius_distance(a: &Tensor, b: &Tensor) -> f64 {
    a.as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}
