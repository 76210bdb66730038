use crate::{Scalar, Tensor};

fn assert_same_shape<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>) {
    assert_eq!(a.shape(), b.shape(), "elementwise op requires matching shapes");
}

pub fn add<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>) -> Tensor<T> {
    assert_same_shape(a, b);
    let data = a.data().iter().zip(b.data().iter()).map(|(&x, &y)| x + y).collect();
    Tensor::from_op(a.shape().to_vec(), data, vec![a.clone(), b.clone()], |g, parents| {
        parents[0].accumulate_grad(g);
        parents[1].accumulate_grad(g);
    })
}

pub fn sub<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>) -> Tensor<T> {
    assert_same_shape(a, b);
    let data = a.data().iter().zip(b.data().iter()).map(|(&x, &y)| x - y).collect();
    Tensor::from_op(a.shape().to_vec(), data, vec![a.clone(), b.clone()], |g, parents| {
        parents[0].accumulate_grad(g);
        parents[1].with_grad_mut(|gb| {
            for (gi, &d) in gb.iter_mut().zip(g) {
                *gi = *gi - d;
            }
        });
    })
}

pub fn mul<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>) -> Tensor<T> {
    assert_same_shape(a, b);
    let data = a.data().iter().zip(b.data().iter()).map(|(&x, &y)| x * y).collect();
    Tensor::from_op(a.shape().to_vec(), data, vec![a.clone(), b.clone()], |g, parents| {
        let (av, bv) = (parents[0].to_vec(), parents[1].to_vec());
        parents[0].with_grad_mut(|ga| {
            for i in 0..ga.len() {
                ga[i] = ga[i] + g[i] * bv[i];
            }
        });
        parents[1].with_grad_mut(|gb| {
            for i in 0..gb.len() {
                gb[i] = gb[i] + g[i] * av[i];
            }
        });
    })
}

pub fn neg<T: Scalar>(a: &Tensor<T>) -> Tensor<T> {
    scale(a, -T::one().as_f64())
}

pub fn scale<T: Scalar>(a: &Tensor<T>, c: f64) -> Tensor<T> {
    let c = T::of_f64(c);
    let data = a.data().iter().map(|&x| x * c).collect();
    Tensor::from_op(a.shape().to_vec(), data, vec![a.clone()], move |g, parents| {
        parents[0].with_grad_mut(|ga| {
            for (gi, &d) in ga.iter_mut().zip(g) {
                *gi = *gi + d * c;
            }
        });
    })
}

pub fn add_scalar<T: Scalar>(a: &Tensor<T>, c: f64) -> Tensor<T> {
    let c = T::of_f64(c);
    let data = a.data().iter().map(|&x| x + c).collect();
    Tensor::from_op(a.shape().to_vec(), data, vec![a.clone()], |g, parents| {
        parents[0].accumulate_grad(g);
    })
}

pub fn sum<T: Scalar>(a: &Tensor<T>) -> Tensor<T> {
    let s: T = a.data().iter().copied().sum();
    Tensor::from_op(vec![1], vec![s], vec![a.clone()], |g, parents| {
        parents[0].with_grad_mut(|ga| {
            for gi in ga.iter_mut() {
                *gi = *gi + g[0];
            }
        });
    })
}

pub fn mean<T: Scalar>(a: &Tensor<T>) -> Tensor<T> {
    let n = a.len();
    scale(&sum(a), 1.0 / n as f64)
}

/// `sqrt(x + eps)`, with eps guarding the derivative at zero.
pub fn sqrt_eps<T: Scalar>(a: &Tensor<T>, eps: f64) -> Tensor<T> {
    let eps = T::of_f64(eps);
    let out: Vec<T> = a.data().iter().map(|&x| (x + eps).sqrt()).collect();
    let saved = out.clone();
    Tensor::from_op(a.shape().to_vec(), out, vec![a.clone()], move |g, parents| {
        let half = T::of_f64(0.5);
        parents[0].with_grad_mut(|ga| {
            for i in 0..ga.len() {
                ga[i] = ga[i] + g[i] * half / saved[i];
            }
        });
    })
}

/// Natural log with the input clamped to `floor` (gradient uses the clamped
/// value, so saturated entries still receive a finite pull).
pub fn log_clamped<T: Scalar>(a: &Tensor<T>, floor: f64) -> Tensor<T> {
    let floor = T::of_f64(floor);
    let clamped: Vec<T> = a.data().iter().map(|&x| if x < floor { floor } else { x }).collect();
    let out: Vec<T> = clamped.iter().map(|&x| x.ln()).collect();
    Tensor::from_op(a.shape().to_vec(), out, vec![a.clone()], move |g, parents| {
        parents[0].with_grad_mut(|ga| {
            for i in 0..ga.len() {
                ga[i] = ga[i] + g[i] / clamped[i];
            }
        });
    })
}

/// Euclidean norm of a flattened tensor, `sqrt(sum x^2 + 1e-30)`.
pub fn l2_norm<T: Scalar>(a: &Tensor<T>) -> Tensor<T> {
    sqrt_eps(&sum(&mul(a, a)), 1e-30)
}

pub fn concat<T: Scalar>(parts: &[&Tensor<T>]) -> Tensor<T> {
    assert!(!parts.is_empty());
    let mut data = Vec::new();
    let mut offsets = Vec::with_capacity(parts.len());
    for p in parts {
        offsets.push(data.len());
        data.extend_from_slice(&p.data());
    }
    let total = data.len();
    let parents: Vec<Tensor<T>> = parts.iter().map(|p| (*p).clone()).collect();
    Tensor::from_op(vec![total], data, parents, move |g, parents| {
        for (p, &off) in parents.iter().zip(&offsets) {
            p.with_grad_mut(|gp| {
                for i in 0..gp.len() {
                    gp[i] = gp[i] + g[off + i];
                }
            });
        }
    })
}

/// Contiguous 1-D slice `[start, end)` of the flattened tensor.
pub fn slice<T: Scalar>(a: &Tensor<T>, start: usize, end: usize) -> Tensor<T> {
    assert!(start <= end && end <= a.len(), "slice out of range");
    let data = a.data()[start..end].to_vec();
    Tensor::from_op(vec![end - start], data, vec![a.clone()], move |g, parents| {
        parents[0].with_grad_mut(|ga| {
            for (i, &d) in g.iter().enumerate() {
                ga[start + i] = ga[start + i] + d;
            }
        });
    })
}

/// Same data, new shape (copying; backward is pass-through).
pub fn reshape<T: Scalar>(a: &Tensor<T>, shape: &[usize]) -> Tensor<T> {
    assert_eq!(shape.iter().product::<usize>(), a.len(), "reshape size mismatch");
    Tensor::from_op(shape.to_vec(), a.to_vec(), vec![a.clone()], |g, parents| {
        parents[0].accumulate_grad(g);
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn add_sub_mul_values() {
        let a = Tensor::<f64>::leaf(&[3], vec![1.0, 2.0, 3.0]);
        let b = Tensor::<f64>::leaf(&[3], vec![4.0, 5.0, 6.0]);
        assert_eq!(add(&a, &b).to_vec(), vec![5.0, 7.0, 9.0]);
        assert_eq!(sub(&a, &b).to_vec(), vec![-3.0, -3.0, -3.0]);
        assert_eq!(mul(&a, &b).to_vec(), vec![4.0, 10.0, 18.0]);
    }

    #[test]
    fn mul_backward_is_product_rule() {
        let a = Tensor::<f64>::param(&[2], vec![3.0, -1.0]);
        let b = Tensor::<f64>::param(&[2], vec![2.0, 5.0]);
        sum(&mul(&a, &b)).backward();
        assert_eq!(a.grad().unwrap(), vec![2.0, 5.0]);
        assert_eq!(b.grad().unwrap(), vec![3.0, -1.0]);
    }

    #[test]
    fn concat_and_slice_round_trip_gradients() {
        let a = Tensor::<f64>::param(&[2], vec![1.0, 2.0]);
        let b = Tensor::<f64>::param(&[3], vec![3.0, 4.0, 5.0]);
        let c = concat(&[&a, &b]);
        assert_eq!(c.to_vec(), vec![1.0, 2.0, 3.0, 4.0, 5.0]);
        let s = slice(&c, 1, 4);
        sum(&s).backward();
        assert_eq!(a.grad().unwrap(), vec![0.0, 1.0]);
        assert_eq!(b.grad().unwrap(), vec![1.0, 1.0, 0.0]);
    }

    #[test]
    fn l2_norm_of_zero_is_tiny() {
        let a = Tensor::<f64>::param(&[4], vec![0.0; 4]);
        let n = l2_norm(&a);
        assert!(n.item() < 1e-12);
    }
}
