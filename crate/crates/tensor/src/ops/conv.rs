use rayon::prelude::*;

use crate::{Scalar, Tensor};

/// 2-D cross-correlation (no kernel flip).
///
/// Input `[H, W, Cin]`, kernel `[kh, kw, Cin, Cout]`, output
/// `[H', W', Cout]` with `H' = (H + 2 pad - kh) / stride + 1`.
pub fn conv2d<T: Scalar>(input: &Tensor<T>, kernel: &Tensor<T>, stride: usize, pad: usize) -> Tensor<T> {
    let (h, w, cin) = dims3(input);
    let ks = kernel.shape();
    assert_eq!(ks.len(), 4, "kernel must be [kh, kw, Cin, Cout]");
    let (kh, kw, kcin, cout) = (ks[0], ks[1], ks[2], ks[3]);
    assert_eq!(cin, kcin, "kernel input channels mismatch");
    assert!(stride >= 1);
    assert!(h + 2 * pad >= kh && w + 2 * pad >= kw, "kernel larger than padded input");
    let ho = (h + 2 * pad - kh) / stride + 1;
    let wo = (w + 2 * pad - kw) / stride + 1;

    let out = {
        let x = input.data();
        let k = kernel.data();
        conv2d_forward(&x, h, w, cin, &k, kh, kw, cout, stride, pad, ho, wo)
    };

    let (sh, sw) = (stride, pad);
    Tensor::from_op(vec![ho, wo, cout], out, vec![input.clone(), kernel.clone()], move |g, parents| {
        let (stride, pad) = (sh, sw);
        let x = parents[0].to_vec();
        let k = parents[1].to_vec();
        // dX: gather over the outputs each input pixel feeds.
        parents[0].with_grad_mut(|gx| {
            let rows: Vec<(usize, &mut [T])> = gx.chunks_mut(w * cin).enumerate().collect();
            rows.into_par_iter().for_each(|(yi, grow)| {
                for xi in 0..w {
                    for ky in 0..kh {
                        let ypp = yi + pad;
                        if ypp < ky || (ypp - ky) % stride != 0 {
                            continue;
                        }
                        let yo = (ypp - ky) / stride;
                        if yo >= ho {
                            continue;
                        }
                        for kx in 0..kw {
                            let xpp = xi + pad;
                            if xpp < kx || (xpp - kx) % stride != 0 {
                                continue;
                            }
                            let xo = (xpp - kx) / stride;
                            if xo >= wo {
                                continue;
                            }
                            let gbase = (yo * wo + xo) * cout;
                            let kbase = (ky * kw + kx) * cin * cout;
                            for ci in 0..cin {
                                let mut acc = T::zero();
                                let krow = &k[kbase + ci * cout..kbase + (ci + 1) * cout];
                                let grow_out = &g[gbase..gbase + cout];
                                for co in 0..cout {
                                    acc = acc + krow[co] * grow_out[co];
                                }
                                grow[xi * cin + ci] = grow[xi * cin + ci] + acc;
                            }
                        }
                    }
                }
            });
        });
        // dK: each kernel slot accumulates over all output positions.
        parents[1].with_grad_mut(|gk| {
            let slots: Vec<(usize, &mut [T])> = gk.chunks_mut(cout).enumerate().collect();
            slots.into_par_iter().for_each(|(slot, gdst)| {
                let ci = slot % cin;
                let kx = (slot / cin) % kw;
                let ky = slot / (cin * kw);
                for yo in 0..ho {
                    let yi = yo * stride + ky;
                    if yi < pad || yi - pad >= h {
                        continue;
                    }
                    let yin = yi - pad;
                    for xo in 0..wo {
                        let xi = xo * stride + kx;
                        if xi < pad || xi - pad >= w {
                            continue;
                        }
                        let xv = x[(yin * w + (xi - pad)) * cin + ci];
                        if xv == T::zero() {
                            continue;
                        }
                        let gsrc = &g[(yo * wo + xo) * cout..(yo * wo + xo + 1) * cout];
                        for co in 0..cout {
                            gdst[co] = gdst[co] + xv * gsrc[co];
                        }
                    }
                }
            });
        });
    })
}

#[allow(clippy::too_many_arguments)]
fn conv2d_forward<T: Scalar>(
    x: &[T],
    h: usize,
    w: usize,
    cin: usize,
    k: &[T],
    kh: usize,
    kw: usize,
    cout: usize,
    stride: usize,
    pad: usize,
    ho: usize,
    wo: usize,
) -> Vec<T> {
    let mut out = vec![T::zero(); ho * wo * cout];
    let body = |(yo, orow): (usize, &mut [T])| {
        for xo in 0..wo {
            let dst = &mut orow[xo * cout..(xo + 1) * cout];
            for ky in 0..kh {
                let yi = yo * stride + ky;
                if yi < pad || yi - pad >= h {
                    continue;
                }
                let yin = yi - pad;
                for kx in 0..kw {
                    let xi = xo * stride + kx;
                    if xi < pad || xi - pad >= w {
                        continue;
                    }
                    let xin = xi - pad;
                    let xbase = (yin * w + xin) * cin;
                    let kbase = (ky * kw + kx) * cin * cout;
                    for ci in 0..cin {
                        let xv = x[xbase + ci];
                        if xv == T::zero() {
                            continue;
                        }
                        let krow = &k[kbase + ci * cout..kbase + (ci + 1) * cout];
                        for co in 0..cout {
                            dst[co] = dst[co] + xv * krow[co];
                        }
                    }
                }
            }
        }
    };
    if ho * wo * cout * cin * kh * kw > 65_536 {
        out.par_chunks_mut(wo * cout).enumerate().for_each(body);
    } else {
        out.chunks_mut(wo * cout).enumerate().for_each(body);
    }
    out
}

/// 2x2 stride-2 max pooling over `[H, W, C]`; odd trailing rows/columns are
/// pooled over the available window.
pub fn max_pool2d<T: Scalar>(input: &Tensor<T>) -> Tensor<T> {
    let (h, w, c) = dims3(input);
    let ho = h.div_ceil(2);
    let wo = w.div_ceil(2);
    let x = input.to_vec();
    let mut out = vec![T::zero(); ho * wo * c];
    let mut argmax = vec![0u32; ho * wo * c];
    for yo in 0..ho {
        for xo in 0..wo {
            for ci in 0..c {
                let mut best = T::neg_infinity();
                let mut best_idx = 0usize;
                for dy in 0..2 {
                    let yi = yo * 2 + dy;
                    if yi >= h {
                        continue;
                    }
                    for dx in 0..2 {
                        let xi = xo * 2 + dx;
                        if xi >= w {
                            continue;
                        }
                        let idx = (yi * w + xi) * c + ci;
                        if x[idx] > best {
                            best = x[idx];
                            best_idx = idx;
                        }
                    }
                }
                let o = (yo * wo + xo) * c + ci;
                out[o] = best;
                argmax[o] = best_idx as u32;
            }
        }
    }
    Tensor::from_op(vec![ho, wo, c], out, vec![input.clone()], move |g, parents| {
        parents[0].with_grad_mut(|gx| {
            for (o, &src) in argmax.iter().enumerate() {
                gx[src as usize] = gx[src as usize] + g[o];
            }
        });
    })
}

fn dims3<T: Scalar>(t: &Tensor<T>) -> (usize, usize, usize) {
    let s = t.shape();
    assert_eq!(s.len(), 3, "expected [H, W, C] tensor, got {s:?}");
    (s[0], s[1], s[2])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ops::sum;

    fn lcg(seed: u64) -> impl FnMut() -> f64 {
        let mut state = seed;
        move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 33) as f64 / (1u64 << 31) as f64) - 1.0
        }
    }

    /// Four-deep nested-loop reference convolution.
    fn conv_oracle(
        x: &[f64],
        h: usize,
        w: usize,
        cin: usize,
        k: &[f64],
        kh: usize,
        kw: usize,
        cout: usize,
        stride: usize,
        pad: usize,
    ) -> Vec<f64> {
        let ho = (h + 2 * pad - kh) / stride + 1;
        let wo = (w + 2 * pad - kw) / stride + 1;
        let mut out = vec![0.0; ho * wo * cout];
        for yo in 0..ho {
            for xo in 0..wo {
                for co in 0..cout {
                    let mut acc = 0.0;
                    for ky in 0..kh {
                        for kx in 0..kw {
                            let yi = (yo * stride + ky) as isize - pad as isize;
                            let xi = (xo * stride + kx) as isize - pad as isize;
                            if yi < 0 || xi < 0 || yi >= h as isize || xi >= w as isize {
                                continue;
                            }
                            for ci in 0..cin {
                                acc += x[((yi as usize) * w + xi as usize) * cin + ci]
                                    * k[((ky * kw + kx) * cin + ci) * cout + co];
                            }
                        }
                    }
                    out[(yo * wo + xo) * cout + co] = acc;
                }
            }
        }
        out
    }

    #[test]
    fn centered_delta_kernel_is_identity() {
        let mut rng = lcg(3);
        let x: Vec<f64> = (0..6 * 5 * 1).map(|_| rng()).collect();
        let input = Tensor::leaf(&[6, 5, 1], x.clone());
        let mut k = vec![0.0; 9];
        k[4] = 1.0; // center of a 3x3 kernel
        let kernel = Tensor::leaf(&[3, 3, 1, 1], k);
        let out = conv2d(&input, &kernel, 1, 1);
        assert_eq!(out.shape(), &[6, 5, 1]);
        for (a, b) in out.data().iter().zip(&x) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn ones_kernel_on_constant_image_gives_9c_interior() {
        let c: f64 = 0.7;
        let input = Tensor::leaf(&[8, 8, 1], vec![c; 64]);
        let kernel = Tensor::leaf(&[3, 3, 1, 1], vec![1.0; 9]);
        let out = conv2d(&input, &kernel, 1, 1);
        let d = out.data();
        for y in 1..7 {
            for x in 1..7 {
                assert!((d[y * 8 + x] - 9.0 * c).abs() < 1e-12);
            }
        }
        // corner sees only a 2x2 support
        assert!((d[0] - 4.0 * c).abs() < 1e-12);
    }

    #[test]
    fn random_case_matches_nested_loop_oracle() {
        let mut rng = lcg(11);
        let (h, w, cin, cout, kh, kw) = (7, 6, 3, 4, 3, 3);
        let x: Vec<f64> = (0..h * w * cin).map(|_| rng()).collect();
        let k: Vec<f64> = (0..kh * kw * cin * cout).map(|_| rng()).collect();
        for (stride, pad) in [(1, 1), (2, 1), (1, 0), (2, 0)] {
            let out = conv2d(
                &Tensor::leaf(&[h, w, cin], x.clone()),
                &Tensor::leaf(&[kh, kw, cin, cout], k.clone()),
                stride,
                pad,
            );
            let oracle = conv_oracle(&x, h, w, cin, &k, kh, kw, cout, stride, pad);
            assert_eq!(out.len(), oracle.len());
            for (a, b) in out.data().iter().zip(&oracle) {
                assert!((a - b).abs() < 1e-10, "stride={stride} pad={pad}");
            }
        }
    }

    #[test]
    fn max_pool_constant_image_halves_dims() {
        let input = Tensor::<f64>::leaf(&[6, 4, 2], vec![0.25; 48]);
        let out = max_pool2d(&input);
        assert_eq!(out.shape(), &[3, 2, 2]);
        assert!(out.data().iter().all(|&v| v == 0.25));
    }

    #[test]
    fn max_pool_picks_window_max() {
        let input = Tensor::<f64>::leaf(&[2, 2, 1], vec![1.0, 2.0, 3.0, 4.0]);
        let out = max_pool2d(&input);
        assert_eq!(out.to_vec(), vec![4.0]);
    }

    #[test]
    fn max_pool_routes_gradient_to_argmax() {
        let input = Tensor::<f64>::param(&[2, 2, 1], vec![1.0, 2.0, 3.0, 4.0]);
        sum(&max_pool2d(&input)).backward();
        assert_eq!(input.grad().unwrap(), vec![0.0, 0.0, 0.0, 1.0]);
    }
}
