use rand::Rng;

use crate::{Scalar, Tensor};

/// Whether a stateful layer is collecting statistics / sampling masks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Per-feature batch statistics returned by the training-mode forward.
pub struct BatchStats {
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
}

/// Batch normalization over `[batch, features]`.
///
/// Training mode normalizes with biased batch statistics (`1/m` variance)
/// and reports them so the caller can maintain running averages; eval mode
/// uses the provided running statistics.
pub fn batch_norm<T: Scalar>(
    x: &Tensor<T>,
    gamma: &Tensor<T>,
    beta: &Tensor<T>,
    eps: f64,
    mode: Mode,
    running: Option<(&[f64], &[f64])>,
) -> (Tensor<T>, Option<BatchStats>) {
    let s = x.shape();
    assert_eq!(s.len(), 2, "batch_norm expects [batch, features]");
    let (m, f) = (s[0], s[1]);
    assert!(m >= 1);
    assert_eq!(gamma.len(), f);
    assert_eq!(beta.len(), f);

    let (mean, var) = match mode {
        Mode::Train => {
            let xd = x.data();
            let mut mean = vec![0.0f64; f];
            let mut var = vec![0.0f64; f];
            for i in 0..m {
                for j in 0..f {
                    mean[j] += xd[i * f + j].as_f64();
                }
            }
            for mj in mean.iter_mut() {
                *mj /= m as f64;
            }
            for i in 0..m {
                for j in 0..f {
                    let d = xd[i * f + j].as_f64() - mean[j];
                    var[j] += d * d;
                }
            }
            for vj in var.iter_mut() {
                *vj /= m as f64;
            }
            (mean, var)
        }
        Mode::Eval => {
            let (rm, rv) = running.expect("eval mode requires running statistics");
            (rm.to_vec(), rv.to_vec())
        }
    };

    let inv_std: Vec<T> = var.iter().map(|&v| T::of_f64(1.0 / (v + eps).sqrt())).collect();
    let mean_t: Vec<T> = mean.iter().map(|&v| T::of_f64(v)).collect();
    let xhat: Vec<T> = {
        let xd = x.data();
        (0..m * f).map(|i| (xd[i] - mean_t[i % f]) * inv_std[i % f]).collect()
    };
    let out: Vec<T> = {
        let g = gamma.data();
        let b = beta.data();
        xhat.iter().enumerate().map(|(i, &xh)| g[i % f] * xh + b[i % f]).collect()
    };

    let stats = match mode {
        Mode::Train => Some(BatchStats { mean: mean.clone(), var: var.clone() }),
        Mode::Eval => None,
    };

    let train = mode == Mode::Train;
    let out = Tensor::from_op(
        vec![m, f],
        out,
        vec![x.clone(), gamma.clone(), beta.clone()],
        move |g, parents| {
            let gam = parents[1].to_vec();
            // d_gamma, d_beta
            parents[1].with_grad_mut(|gg| {
                for i in 0..m * f {
                    gg[i % f] = gg[i % f] + g[i] * xhat[i];
                }
            });
            parents[2].with_grad_mut(|gb| {
                for i in 0..m * f {
                    gb[i % f] = gb[i % f] + g[i];
                }
            });
            parents[0].with_grad_mut(|gx| {
                if train {
                    // Batch statistics depend on x: full BN backward.
                    let mf = T::of_f64(1.0 / m as f64);
                    for j in 0..f {
                        let mut sum_g = T::zero();
                        let mut sum_gx = T::zero();
                        for i in 0..m {
                            let go = g[i * f + j] * gam[j];
                            sum_g = sum_g + go;
                            sum_gx = sum_gx + go * xhat[i * f + j];
                        }
                        for i in 0..m {
                            let go = g[i * f + j] * gam[j];
                            let d = (go - (sum_g + xhat[i * f + j] * sum_gx) * mf) * inv_std[j];
                            gx[i * f + j] = gx[i * f + j] + d;
                        }
                    }
                } else {
                    // Running statistics are constants: plain affine map.
                    for i in 0..m * f {
                        gx[i] = gx[i] + g[i] * gam[i % f] * inv_std[i % f];
                    }
                }
            });
        },
    );
    (out, stats)
}

/// Numerically stabilized softmax over a vector.
pub fn softmax<T: Scalar>(x: &Tensor<T>) -> Tensor<T> {
    let xd = x.to_vec();
    let max = xd.iter().copied().fold(T::neg_infinity(), T::max);
    let exps: Vec<T> = xd.iter().map(|&v| (v - max).exp()).collect();
    let total: T = exps.iter().copied().sum();
    let out: Vec<T> = exps.iter().map(|&e| e / total).collect();
    let saved = out.clone();
    Tensor::from_op(x.shape().to_vec(), out, vec![x.clone()], move |g, parents| {
        let dot: T = g.iter().zip(&saved).map(|(&gi, &yi)| gi * yi).sum();
        parents[0].with_grad_mut(|gx| {
            for i in 0..gx.len() {
                gx[i] = gx[i] + saved[i] * (g[i] - dot);
            }
        });
    })
}

/// Inverted dropout: in training, zeroes with probability `p` and scales
/// survivors by `1/(1-p)`; identity in eval mode.
pub fn dropout<T: Scalar>(x: &Tensor<T>, p: f64, mode: Mode, rng: &mut impl Rng) -> Tensor<T> {
    assert!((0.0..1.0).contains(&p), "dropout probability must be in [0, 1)");
    if mode == Mode::Eval || p == 0.0 {
        return super::arith::scale(x, 1.0);
    }
    let keep_scale = T::of_f64(1.0 / (1.0 - p));
    let mask: Vec<bool> = (0..x.len()).map(|_| rng.gen::<f64>() >= p).collect();
    let out: Vec<T> = x
        .data()
        .iter()
        .zip(&mask)
        .map(|(&v, &keep)| if keep { v * keep_scale } else { T::zero() })
        .collect();
    Tensor::from_op(x.shape().to_vec(), out, vec![x.clone()], move |g, parents| {
        parents[0].with_grad_mut(|gx| {
            for i in 0..gx.len() {
                if mask[i] {
                    gx[i] = gx[i] + g[i] * keep_scale;
                }
            }
        });
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn bn_constant_batch_outputs_beta() {
        let x = Tensor::<f64>::leaf(&[4, 2], vec![3.0; 8]);
        let gamma = Tensor::leaf(&[2], vec![1.0, 1.0]);
        let beta = Tensor::leaf(&[2], vec![0.0, 5.0]);
        let (y, _) = batch_norm(&x, &gamma, &beta, 1e-5, Mode::Train, None);
        for i in 0..4 {
            assert!(y.data()[i * 2].abs() < 1e-12);
            assert!((y.data()[i * 2 + 1] - 5.0).abs() < 1e-12);
        }
    }

    #[test]
    fn bn_two_sample_batch_by_hand() {
        // batch {1, 3}: mean 2, var 1 -> outputs -/+ 1/sqrt(1 + 1e-5)
        let x = Tensor::<f64>::leaf(&[2, 1], vec![1.0, 3.0]);
        let gamma = Tensor::leaf(&[1], vec![1.0]);
        let beta = Tensor::leaf(&[1], vec![0.0]);
        let (y, stats) = batch_norm(&x, &gamma, &beta, 1e-5, Mode::Train, None);
        let expect = 1.0 / (1.0f64 + 1e-5).sqrt();
        assert!((y.data()[0] + expect).abs() < 1e-12);
        assert!((y.data()[1] - expect).abs() < 1e-12);
        let stats = stats.unwrap();
        assert_eq!(stats.mean, vec![2.0]);
        assert_eq!(stats.var, vec![1.0]);
    }

    #[test]
    fn softmax_sums_to_one_and_uniform_on_zeros() {
        let x = Tensor::<f64>::leaf(&[3], vec![0.0; 3]);
        let y = softmax(&x);
        for &v in y.data().iter() {
            assert!((v - 1.0 / 3.0).abs() < 1e-12);
        }
        let x = Tensor::<f64>::leaf(&[4], vec![5.0, -2.0, 0.1, 3.3]);
        let s: f64 = softmax(&x).data().iter().sum();
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn softmax_is_shift_invariant() {
        let x = Tensor::<f64>::leaf(&[3], vec![1.0, 2.0, 3.0]);
        let y = Tensor::<f64>::leaf(&[3], vec![101.0, 102.0, 103.0]);
        let a = softmax(&x);
        let b = softmax(&y);
        for (u, v) in a.data().iter().zip(b.data().iter()) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn dropout_zero_p_and_eval_are_identity() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let x = Tensor::<f64>::leaf(&[5], vec![1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(dropout(&x, 0.0, Mode::Train, &mut rng).to_vec(), x.to_vec());
        assert_eq!(dropout(&x, 0.9, Mode::Eval, &mut rng).to_vec(), x.to_vec());
    }

    #[test]
    fn dropout_empirical_rate_near_p() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let n = 100_000;
        let x = Tensor::<f64>::leaf(&[n], vec![1.0; n]);
        let y = dropout(&x, 0.5, Mode::Train, &mut rng);
        let dropped = y.data().iter().filter(|&&v| v == 0.0).count();
        let rate = dropped as f64 / n as f64;
        assert!((rate - 0.5).abs() < 0.01, "rate {rate}");
    }
}
