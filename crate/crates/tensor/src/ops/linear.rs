use rayon::prelude::*;

use crate::{Scalar, Tensor};

/// Raw `C = op_a(A) * op_b(B)` on row-major slices.
///
/// `a` is (m x k) after optional transposition, `b` is (k x n). Rows of the
/// output are computed independently (deterministic under any thread count).
pub fn gemm<T: Scalar>(
    a: &[T],
    a_rows: usize,
    a_cols: usize,
    ta: bool,
    b: &[T],
    b_rows: usize,
    b_cols: usize,
    tb: bool,
) -> (Vec<T>, usize, usize) {
    let (m, ka) = if ta { (a_cols, a_rows) } else { (a_rows, a_cols) };
    let (kb, n) = if tb { (b_cols, b_rows) } else { (b_rows, b_cols) };
    assert_eq!(ka, kb, "gemm inner dimensions differ");
    let k = ka;
    let mut out = vec![T::zero(); m * n];
    let body = |(i, row): (usize, &mut [T])| {
        for kk in 0..k {
            let av = if ta { a[kk * a_cols + i] } else { a[i * a_cols + kk] };
            if av == T::zero() {
                continue;
            }
            if tb {
                for (j, r) in row.iter_mut().enumerate() {
                    *r = *r + av * b[j * b_cols + kk];
                }
            } else {
                let brow = &b[kk * b_cols..kk * b_cols + n];
                for (r, &bv) in row.iter_mut().zip(brow) {
                    *r = *r + av * bv;
                }
            }
        }
    };
    if m * n * k > 32_768 {
        out.par_chunks_mut(n).enumerate().for_each(body);
    } else {
        out.chunks_mut(n).enumerate().for_each(body);
    }
    (out, m, n)
}

/// `C[m x n] = A[m x k] . B[k x n]`
pub fn matmul<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>) -> Tensor<T> {
    let (m, k) = dims2(a);
    let (k2, n) = dims2(b);
    assert_eq!(k, k2, "matmul shape mismatch: {:?} x {:?}", a.shape(), b.shape());
    let (data, _, _) = gemm(&a.data(), m, k, false, &b.data(), k2, n, false);
    Tensor::from_op(vec![m, n], data, vec![a.clone(), b.clone()], move |g, parents| {
        let (av, bv) = (parents[0].to_vec(), parents[1].to_vec());
        // dA = dC . B^T ; dB = A^T . dC
        let (da, _, _) = gemm(g, m, n, false, &bv, k, n, true);
        let (db, _, _) = gemm(&av, m, k, true, g, m, n, false);
        parents[0].accumulate_grad(&da);
        parents[1].accumulate_grad(&db);
    })
}

/// `C[m x n] = A[m x k] . B[n x k]^T` (weight stored row-per-output).
pub fn matmul_nt<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>) -> Tensor<T> {
    let (m, k) = dims2(a);
    let (n, k2) = dims2(b);
    assert_eq!(k, k2, "matmul_nt shape mismatch: {:?} x {:?}", a.shape(), b.shape());
    let (data, _, _) = gemm(&a.data(), m, k, false, &b.data(), n, k2, true);
    Tensor::from_op(vec![m, n], data, vec![a.clone(), b.clone()], move |g, parents| {
        let (av, bv) = (parents[0].to_vec(), parents[1].to_vec());
        // dA = dC . B ; dB = dC^T . A
        let (da, _, _) = gemm(g, m, n, false, &bv, n, k, false);
        let (db, _, _) = gemm(g, m, n, true, &av, m, k, false);
        parents[0].accumulate_grad(&da);
        parents[1].accumulate_grad(&db);
    })
}

/// `W[n x m] . v[m] + b[n]`: the basic dimension-changing layer.
pub fn fully_connected<T: Scalar>(w: &Tensor<T>, v: &Tensor<T>, b: &Tensor<T>) -> Tensor<T> {
    let (n, m) = dims2(w);
    assert_eq!(v.len(), m, "fully_connected input length mismatch");
    assert_eq!(b.len(), n, "fully_connected bias length mismatch");
    let vcol = super::arith::reshape(v, &[1, v.len()]);
    let prod = matmul_nt(&vcol, w);
    let flat = super::arith::reshape(&prod, &[n]);
    super::arith::add(&flat, b)
}

/// Broadcast-adds `b[c]` over the last dimension of `x[... x c]`.
pub fn add_last_dim_bias<T: Scalar>(x: &Tensor<T>, b: &Tensor<T>) -> Tensor<T> {
    let c = b.len();
    assert_eq!(x.len() % c, 0, "bias does not divide tensor length");
    let bv = b.to_vec();
    let data: Vec<T> = x.data().iter().enumerate().map(|(i, &v)| v + bv[i % c]).collect();
    Tensor::from_op(x.shape().to_vec(), data, vec![x.clone(), b.clone()], move |g, parents| {
        parents[0].accumulate_grad(g);
        parents[1].with_grad_mut(|gb| {
            for (i, &d) in g.iter().enumerate() {
                gb[i % c] = gb[i % c] + d;
            }
        });
    })
}

fn dims2<T: Scalar>(t: &Tensor<T>) -> (usize, usize) {
    let s = t.shape();
    assert_eq!(s.len(), 2, "expected 2-D tensor, got {s:?}");
    (s[0], s[1])
}
