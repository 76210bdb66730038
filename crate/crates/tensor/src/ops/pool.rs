use crate::{Scalar, Tensor};

/// Elementwise max over the first axis with argmax-routed gradients.
fn max_over_first_axis<T: Scalar>(x: &Tensor<T>, out_shape: Vec<usize>) -> Tensor<T> {
    let s = x.shape();
    assert!(!s.is_empty() && s[0] >= 1, "pooled axis must be non-empty");
    let n = s[0];
    let rest: usize = s[1..].iter().product();
    let xd = x.data();
    let mut out = vec![T::neg_infinity(); rest];
    let mut argmax = vec![0u32; rest];
    for i in 0..n {
        for j in 0..rest {
            let v = xd[i * rest + j];
            if v > out[j] {
                out[j] = v;
                argmax[j] = (i * rest + j) as u32;
            }
        }
    }
    drop(xd);
    Tensor::from_op(out_shape, out, vec![x.clone()], move |g, parents| {
        parents[0].with_grad_mut(|gx| {
            for (j, &src) in argmax.iter().enumerate() {
                gx[src as usize] = gx[src as usize] + g[j];
            }
        });
    })
}

/// View pooling: per-element max over the view axis of `[V, C, H, W]`.
pub fn view_pool<T: Scalar>(x: &Tensor<T>) -> Tensor<T> {
    let s = x.shape();
    assert_eq!(s.len(), 4, "view_pool expects [V, C, H, W]");
    max_over_first_axis(x, s[1..].to_vec())
}

/// The point-set symmetry function: column-wise max of `[n, s]`.
pub fn channel_max_pool<T: Scalar>(x: &Tensor<T>) -> Tensor<T> {
    let s = x.shape();
    assert_eq!(s.len(), 2, "channel_max_pool expects [n, s]");
    max_over_first_axis(x, vec![s[1]])
}
