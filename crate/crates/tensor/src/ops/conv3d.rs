use rayon::prelude::*;

use crate::{Scalar, Tensor};

/// Fractional-stride 3-D convolution: upsamples `[D, H, W, Cin]` to
/// `[(D-1)s - 2p + k, ..., Cout]` with kernel `[k, k, k, Cin, Cout]`.
///
/// Implemented as the adjoint of a strided convolution: each input voxel
/// stamps the kernel into the (cropped) output. With the k=4, s=2, p=1
/// configuration every layer exactly doubles the spatial dimensions.
pub fn transposed_conv3d<T: Scalar>(
    input: &Tensor<T>,
    kernel: &Tensor<T>,
    stride: usize,
    pad: usize,
) -> Tensor<T> {
    let s = input.shape();
    assert_eq!(s.len(), 4, "input must be [D, H, W, Cin]");
    let (d, h, w, cin) = (s[0], s[1], s[2], s[3]);
    let ks = kernel.shape();
    assert_eq!(ks.len(), 5, "kernel must be [k, k, k, Cin, Cout]");
    assert!(ks[0] == ks[1] && ks[1] == ks[2], "kernel must be cubic");
    let (k, kcin, cout) = (ks[0], ks[3], ks[4]);
    assert_eq!(cin, kcin, "kernel input channels mismatch");
    assert!(k > 2 * pad, "padding swallows the kernel");
    let od = (d - 1) * stride + k - 2 * pad;
    let oh = (h - 1) * stride + k - 2 * pad;
    let ow = (w - 1) * stride + k - 2 * pad;

    let out = {
        let x = input.data();
        let kd = kernel.data();
        tconv_forward(&x, d, h, w, cin, &kd, k, cout, stride, pad, od, oh, ow)
    };

    Tensor::from_op(
        vec![od, oh, ow, cout],
        out,
        vec![input.clone(), kernel.clone()],
        move |g, parents| {
            let x = parents[0].to_vec();
            let kd = parents[1].to_vec();
            // dX = strided conv of the output gradient with the same kernel.
            parents[0].with_grad_mut(|gx| {
                let voxels: Vec<(usize, &mut [T])> = gx.chunks_mut(cin).enumerate().collect();
                voxels.into_par_iter().for_each(|(v, dst)| {
                    let x_in = v % w;
                    let y_in = (v / w) % h;
                    let z_in = v / (w * h);
                    for kz in 0..k {
                        let oz = (z_in * stride + kz).wrapping_sub(pad);
                        if oz >= od {
                            continue;
                        }
                        for ky in 0..k {
                            let oy = (y_in * stride + ky).wrapping_sub(pad);
                            if oy >= oh {
                                continue;
                            }
                            for kx in 0..k {
                                let ox = (x_in * stride + kx).wrapping_sub(pad);
                                if ox >= ow {
                                    continue;
                                }
                                let gbase = ((oz * oh + oy) * ow + ox) * cout;
                                let kbase = ((kz * k + ky) * k + kx) * cin * cout;
                                for ci in 0..cin {
                                    let mut acc = T::zero();
                                    let krow = &kd[kbase + ci * cout..kbase + (ci + 1) * cout];
                                    for co in 0..cout {
                                        acc = acc + krow[co] * g[gbase + co];
                                    }
                                    dst[ci] = dst[ci] + acc;
                                }
                            }
                        }
                    }
                });
            });
            // dK: each (kz, ky, kx, ci) row accumulates over input voxels.
            parents[1].with_grad_mut(|gk| {
                let rows: Vec<(usize, &mut [T])> = gk.chunks_mut(cout).enumerate().collect();
                rows.into_par_iter().for_each(|(slot, dst)| {
                    let ci = slot % cin;
                    let kx = (slot / cin) % k;
                    let ky = (slot / (cin * k)) % k;
                    let kz = slot / (cin * k * k);
                    for z in 0..d {
                        let oz = (z * stride + kz).wrapping_sub(pad);
                        if oz >= od {
                            continue;
                        }
                        for y in 0..h {
                            let oy = (y * stride + ky).wrapping_sub(pad);
                            if oy >= oh {
                                continue;
                            }
                            for xx in 0..w {
                                let ox = (xx * stride + kx).wrapping_sub(pad);
                                if ox >= ow {
                                    continue;
                                }
                                let xv = x[((z * h + y) * w + xx) * cin + ci];
                                if xv == T::zero() {
                                    continue;
                                }
                                let gbase = ((oz * oh + oy) * ow + ox) * cout;
                                for co in 0..cout {
                                    dst[co] = dst[co] + xv * g[gbase + co];
                                }
                            }
                        }
                    }
                });
            });
        },
    )
}

#[allow(clippy::too_many_arguments)]
fn tconv_forward<T: Scalar>(
    x: &[T],
    d: usize,
    h: usize,
    w: usize,
    cin: usize,
    kd: &[T],
    k: usize,
    cout: usize,
    stride: usize,
    pad: usize,
    od: usize,
    oh: usize,
    ow: usize,
) -> Vec<T> {
    let mut out = vec![T::zero(); od * oh * ow * cout];
    // Gather form: each output voxel pulls the input voxels that reach it.
    let body = |(v, dst): (usize, &mut [T])| {
        let ox = v % ow;
        let oy = (v / ow) % oh;
        let oz = v / (ow * oh);
        for kz in 0..k {
            let zs = oz + pad;
            if zs < kz || (zs - kz) % stride != 0 {
                continue;
            }
            let z = (zs - kz) / stride;
            if z >= d {
                continue;
            }
            for ky in 0..k {
                let ys = oy + pad;
                if ys < ky || (ys - ky) % stride != 0 {
                    continue;
                }
                let y = (ys - ky) / stride;
                if y >= h {
                    continue;
                }
                for kx in 0..k {
                    let xs = ox + pad;
                    if xs < kx || (xs - kx) % stride != 0 {
                        continue;
                    }
                    let xx = (xs - kx) / stride;
                    if xx >= w {
                        continue;
                    }
                    let xbase = ((z * h + y) * w + xx) * cin;
                    let kbase = ((kz * k + ky) * k + kx) * cin * cout;
                    for ci in 0..cin {
                        let xv = x[xbase + ci];
                        if xv == T::zero() {
                            continue;
                        }
                        let krow = &kd[kbase + ci * cout..kbase + (ci + 1) * cout];
                        for co in 0..cout {
                            dst[co] = dst[co] + xv * krow[co];
                        }
                    }
                }
            }
        }
    };
    if od * oh * ow * cout * cin > 32_768 {
        out.par_chunks_mut(cout).enumerate().for_each(body);
    } else {
        out.chunks_mut(cout).enumerate().for_each(body);
    }
    out
}

/// Reference strided 3-D convolution, the exact adjoint of
/// [`transposed_conv3d`]: maps `[OD, OH, OW, Cout]` down to `[D, H, W, Cin]`.
///
/// Used by adjoint-identity checks: `<conv(x), y> = <x, tconv(y)>`.
#[allow(clippy::too_many_arguments)]
pub fn conv3d_adjoint_reference<T: Scalar>(
    x: &[T],
    out_dims: [usize; 3],
    cout: usize,
    kernel: &[T],
    k: usize,
    cin: usize,
    stride: usize,
    pad: usize,
    in_dims: [usize; 3],
) -> Vec<T> {
    let (od, oh, ow) = (out_dims[0], out_dims[1], out_dims[2]);
    let (d, h, w) = (in_dims[0], in_dims[1], in_dims[2]);
    let mut out = vec![T::zero(); d * h * w * cin];
    for z in 0..d {
        for y in 0..h {
            for xx in 0..w {
                for kz in 0..k {
                    let oz = (z * stride + kz).wrapping_sub(pad);
                    if oz >= od {
                        continue;
                    }
                    for ky in 0..k {
                        let oy = (y * stride + ky).wrapping_sub(pad);
                        if oy >= oh {
                            continue;
                        }
                        for kx in 0..k {
                            let ox = (xx * stride + kx).wrapping_sub(pad);
                            if ox >= ow {
                                continue;
                            }
                            let xbase = ((oz * oh + oy) * ow + ox) * cout;
                            let kbase = ((kz * k + ky) * k + kx) * cin * cout;
                            for ci in 0..cin {
                                let mut acc = T::zero();
                                for co in 0..cout {
                                    acc = acc + x[xbase + co] * kernel[kbase + ci * cout + co];
                                }
                                let dst = ((z * h + y) * w + xx) * cin + ci;
                                out[dst] = out[dst] + acc;
                            }
                        }
                    }
                }
            }
        }
    }
    out
}
