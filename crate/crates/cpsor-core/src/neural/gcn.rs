//! Graph convolution building blocks.

use super::NeuralError;
use crate::mat::Mat;

/// Symmetric degree normalization with self-loops:
/// Ã = A + I, D̃ = diag(row sums), result = D̃^{−1/2} Ã D̃^{−1/2}.
/// The self-loop guarantees a strictly positive degree for every node.
pub fn normalize_adjacency(a: &Mat) -> Result<Mat, NeuralError> {
    if a.rows != a.cols {
        return Err(NeuralError::Shape(format!(
            "adjacency must be square, got {}x{}",
            a.rows, a.cols
        )));
    }
    let n = a.rows;
    let mut tilde = a.clone();
    for i in 0..n {
        tilde[(i, i)] += 1.0;
    }
    let inv_sqrt_deg: Vec<f64> = (0..n)
        .map(|i| 1.0 / tilde.row(i).iter().sum::<f64>().sqrt())
        .collect();
    let mut out = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            out[(i, j)] = tilde[(i, j)] * inv_sqrt_deg[i] * inv_sqrt_deg[j];
        }
    }
    Ok(out)
}

/// One graph convolution: ReLU(A_norm · H · W).
pub fn gcn_layer(h: &Mat, a_norm: &Mat, w: &Mat) -> Result<Mat, NeuralError> {
    if a_norm.rows != a_norm.cols || a_norm.cols != h.rows || h.cols != w.rows {
        return Err(NeuralError::Shape(format!(
            "gcn layer shapes: A {}x{}, H {}x{}, W {}x{}",
            a_norm.rows, a_norm.cols, h.rows, h.cols, w.rows, w.cols
        )));
    }
    Ok(a_norm.matmul(h).matmul(w).map(|x| x.max(0.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    #[test]
    fn isolated_node_normalizes_to_one() {
        let a = Mat::zeros(1, 1);
        let out = normalize_adjacency(&a).unwrap();
        assert_eq!(out.data, vec![1.0]);
    }

    #[test]
    fn two_node_clique_normalizes_to_half() {
        let a = Mat::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        let out = normalize_adjacency(&a).unwrap();
        for v in &out.data {
            assert!((v - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn block_diagonal_stays_block_diagonal() {
        let mut a = Mat::zeros(4, 4);
        a[(0, 1)] = 0.7;
        a[(1, 0)] = 0.7;
        a[(2, 3)] = 0.2;
        a[(3, 2)] = 0.2;
        let out = normalize_adjacency(&a).unwrap();
        for i in 0..2 {
            for j in 2..4 {
                assert_eq!(out[(i, j)], 0.0);
                assert_eq!(out[(j, i)], 0.0);
            }
        }
    }

    #[test]
    fn symmetric_input_symmetric_output() {
        let mut rng = Rng::new(3);
        let mut a = Mat::zeros(5, 5);
        for i in 0..5 {
            for j in (i + 1)..5 {
                let w = if rng.next_f64() < 0.5 { rng.next_f64() } else { 0.0 };
                a[(i, j)] = w;
                a[(j, i)] = w;
            }
        }
        let out = normalize_adjacency(&a).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                assert!((out[(i, j)] - out[(j, i)]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn relu_identity_pass() {
        let a_norm = Mat::identity(1);
        let w = Mat::identity(2);
        let h = Mat::from_rows(&[vec![2.0, -3.0]]);
        let out = gcn_layer(&h, &a_norm, &w).unwrap();
        assert_eq!(out.data, vec![2.0, 0.0]);
    }

    #[test]
    fn disconnected_nodes_do_not_mix() {
        // Two isolated nodes (self-loops only after normalization).
        let a = Mat::zeros(2, 2);
        let a_norm = normalize_adjacency(&a).unwrap();
        let w = Mat::identity(2);
        let h = Mat::from_rows(&[vec![1.0, 2.0], vec![5.0, -1.0]]);
        let out = gcn_layer(&h, &a_norm, &w).unwrap();
        assert_eq!(out.row(0), &[1.0, 2.0]);
        assert_eq!(out.row(1), &[5.0, 0.0]);
    }

    #[test]
    fn matches_dense_oracle() {
        // Independent route: explicit triple loop over Ã H W with ReLU.
        let mut rng = Rng::new(11);
        let n = 3;
        let mut a = Mat::zeros(n, n);
        for i in 0..n {
            for j in (i + 1)..n {
                let w = rng.next_f64();
                a[(i, j)] = w;
                a[(j, i)] = w;
            }
        }
        let a_norm = normalize_adjacency(&a).unwrap();
        let h = Mat::from_fn(n, 4, |_, _| rng.uniform(-1.0, 1.0));
        let w = Mat::from_fn(4, 2, |_, _| rng.uniform(-1.0, 1.0));
        let got = gcn_layer(&h, &a_norm, &w).unwrap();
        for i in 0..n {
            for o in 0..2 {
                let mut acc = 0.0;
                for j in 0..n {
                    for k in 0..4 {
                        acc += a_norm[(i, j)] * h[(j, k)] * w[(k, o)];
                    }
                }
                let expect = acc.max(0.0);
                assert!((got[(i, o)] - expect).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn permutation_equivariance() {
        // Permuting nodes (rows of H, rows+cols of A) permutes the output.
        let mut rng = Rng::new(19);
        let n = 4;
        let mut a = Mat::zeros(n, n);
        for i in 0..n {
            for j in (i + 1)..n {
                let w = rng.next_f64();
                a[(i, j)] = w;
                a[(j, i)] = w;
            }
        }
        let h = Mat::from_fn(n, 3, |_, _| rng.uniform(-1.0, 1.0));
        let w = Mat::from_fn(3, 3, |_, _| rng.uniform(-1.0, 1.0));
        let perm = [2usize, 0, 3, 1];
        let a_perm = Mat::from_fn(n, n, |i, j| a[(perm[i], perm[j])]);
        let h_perm = Mat::from_fn(n, 3, |i, j| h[(perm[i], j)]);
        let base = gcn_layer(&h, &normalize_adjacency(&a).unwrap(), &w).unwrap();
        let permuted = gcn_layer(&h_perm, &normalize_adjacency(&a_perm).unwrap(), &w).unwrap();
        for i in 0..n {
            for j in 0..3 {
                assert!((permuted[(i, j)] - base[(perm[i], j)]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let a = Mat::identity(2);
        let h = Mat::zeros(3, 2);
        let w = Mat::zeros(2, 2);
        assert!(gcn_layer(&h, &a, &w).is_err());
    }
}
