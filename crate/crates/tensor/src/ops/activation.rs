use crate::{Scalar, Tensor};

/// Parametric ReLU with a single learnable slope per layer:
/// `x if x >= 0 else p * x`.
pub fn prelu<T: Scalar>(x: &Tensor<T>, p: &Tensor<T>) -> Tensor<T> {
    assert_eq!(p.len(), 1, "prelu slope is one scalar per layer");
    let pv = p.item();
    let xd = x.to_vec();
    let out: Vec<T> = xd.iter().map(|&v| if v >= T::zero() { v } else { pv * v }).collect();
    Tensor::from_op(x.shape().to_vec(), out, vec![x.clone(), p.clone()], move |g, parents| {
        parents[0].with_grad_mut(|gx| {
            for i in 0..gx.len() {
                let factor = if xd[i] >= T::zero() { T::one() } else { pv };
                gx[i] = gx[i] + g[i] * factor;
            }
        });
        parents[1].with_grad_mut(|gp| {
            let mut acc = T::zero();
            for i in 0..xd.len() {
                if xd[i] < T::zero() {
                    acc = acc + g[i] * xd[i];
                }
            }
            gp[0] = gp[0] + acc;
        });
    })
}

/// `ln(1 + e^x)`, computed stably; maps onto (0, inf).
pub fn softplus<T: Scalar>(x: &Tensor<T>) -> Tensor<T> {
    let xd = x.to_vec();
    let out: Vec<T> = xd
        .iter()
        .map(|&v| {
            // log1p(exp(v)) with overflow guard: for large v this is v itself.
            if v.as_f64() > 30.0 {
                v
            } else {
                v.exp().ln_1p()
            }
        })
        .collect();
    Tensor::from_op(x.shape().to_vec(), out, vec![x.clone()], move |g, parents| {
        parents[0].with_grad_mut(|gx| {
            for i in 0..gx.len() {
                let sig = T::one() / (T::one() + (-xd[i]).exp());
                gx[i] = gx[i] + g[i] * sig;
            }
        });
    })
}

/// Logistic sigmoid, bounding activations to (0, 1).
pub fn sigmoid<T: Scalar>(x: &Tensor<T>) -> Tensor<T> {
    let out: Vec<T> = x.data().iter().map(|&v| T::one() / (T::one() + (-v).exp())).collect();
    let saved = out.clone();
    Tensor::from_op(x.shape().to_vec(), out, vec![x.clone()], move |g, parents| {
        parents[0].with_grad_mut(|gx| {
            for i in 0..gx.len() {
                gx[i] = gx[i] + g[i] * saved[i] * (T::one() - saved[i]);
            }
        });
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ops::sum;

    #[test]
    fn prelu_branches() {
        let x = Tensor::<f64>::leaf(&[2], vec![2.0, -2.0]);
        let p = Tensor::<f64>::leaf(&[1], vec![0.1]);
        let y = prelu(&x, &p);
        assert_eq!(y.to_vec(), vec![2.0, -0.2]);
    }

    #[test]
    fn prelu_gradient_wrt_slope() {
        // d/dp of prelu(-2, p) = -2
        let x = Tensor::<f64>::leaf(&[1], vec![-2.0]);
        let p = Tensor::<f64>::param(&[1], vec![0.1]);
        sum(&prelu(&x, &p)).backward();
        assert_eq!(p.grad().unwrap(), vec![-2.0]);
    }

    #[test]
    fn softplus_stays_positive() {
        let x = Tensor::<f64>::leaf(&[3], vec![-10.0, 0.0, 35.0]);
        let y = softplus(&x);
        let d = y.data();
        assert!(d[0] > 0.0 && d[0] < 1e-4);
        assert!((d[1] - (2.0f64).ln()).abs() < 1e-12);
        assert!((d[2] - 35.0).abs() < 1e-9);
    }

    #[test]
    fn sigmoid_bounds_and_midpoint() {
        let x = Tensor::<f64>::leaf(&[3], vec![-50.0, 0.0, 50.0]);
        let d = sigmoid(&x).to_vec();
        assert!(d[0] >= 0.0 && d[0] < 1e-20);
        assert!((d[1] - 0.5).abs() < 1e-12);
        assert!(d[2] <= 1.0 && d[2] > 1.0 - 1e-15);
    }
}
