use crate::{Scalar, Tensor};

fn assert_vec3<T: Scalar>(t: &Tensor<T>) {
    assert_eq!(t.len(), 3, "expected a 3-vector, got shape {:?}", t.shape());
}

/// Cross product of two 3-vectors.
pub fn cross3<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>) -> Tensor<T> {
    assert_vec3(a);
    assert_vec3(b);
    let (av, bv) = (a.to_vec(), b.to_vec());
    let out = vec![
        av[1] * bv[2] - av[2] * bv[1],
        av[2] * bv[0] - av[0] * bv[2],
        av[0] * bv[1] - av[1] * bv[0],
    ];
    Tensor::from_op(vec![3], out, vec![a.clone(), b.clone()], move |g, parents| {
        // d(a x b)/da applied to g is b x g; symmetric for b it is g x a.
        let cross = |u: &[T], v: &[T]| {
            [
                u[1] * v[2] - u[2] * v[1],
                u[2] * v[0] - u[0] * v[2],
                u[0] * v[1] - u[1] * v[0],
            ]
        };
        let ga = cross(&bv, g);
        let gb = cross(g, &av);
        parents[0].accumulate_grad(&ga);
        parents[1].accumulate_grad(&gb);
    })
}

/// Unit-normalized 3-vector, `x / |x|`.
pub fn normalize3<T: Scalar>(x: &Tensor<T>) -> Tensor<T> {
    assert_vec3(x);
    let xv = x.to_vec();
    let norm = (xv[0] * xv[0] + xv[1] * xv[1] + xv[2] * xv[2]).sqrt();
    assert!(norm.as_f64() > 1e-300, "cannot normalize a zero vector");
    let unit: Vec<T> = xv.iter().map(|&v| v / norm).collect();
    let saved = unit.clone();
    Tensor::from_op(vec![3], unit, vec![x.clone()], move |g, parents| {
        // J = (I - u u^T) / |x|
        let dot: T = g.iter().zip(&saved).map(|(&gi, &ui)| gi * ui).sum();
        parents[0].with_grad_mut(|gx| {
            for i in 0..3 {
                gx[i] = gx[i] + (g[i] - saved[i] * dot) / norm;
            }
        });
    })
}

/// Dot product of two same-length tensors.
pub fn dot<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>) -> Tensor<T> {
    super::arith::sum(&super::arith::mul(a, b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cross_of_axes() {
        let x = Tensor::<f64>::leaf(&[3], vec![1.0, 0.0, 0.0]);
        let y = Tensor::<f64>::leaf(&[3], vec![0.0, 1.0, 0.0]);
        assert_eq!(cross3(&x, &y).to_vec(), vec![0.0, 0.0, 1.0]);
    }

    #[test]
    fn normalize_scales_to_unit() {
        let v = Tensor::<f64>::leaf(&[3], vec![2.0, 0.0, 0.0]);
        assert_eq!(normalize3(&v).to_vec(), vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn cross_gradient_check() {
        let a0 = vec![0.3, -0.7, 0.5];
        let b0 = vec![0.9, 0.2, -0.4];
        let f = |av: &[f64], bv: &[f64]| {
            let a = Tensor::<f64>::param(&[3], av.to_vec());
            let b = Tensor::<f64>::param(&[3], bv.to_vec());
            let w = Tensor::<f64>::leaf(&[3], vec![1.0, 2.0, 3.0]);
            let out = dot(&cross3(&a, &b), &w);
            (a, b, out)
        };
        let (a, b, out) = f(&a0, &b0);
        out.backward();
        let (ga, gb) = (a.grad().unwrap(), b.grad().unwrap());
        let h = 1e-6;
        for i in 0..3 {
            let mut ap = a0.clone();
            ap[i] += h;
            let mut am = a0.clone();
            am[i] -= h;
            let num = (f(&ap, &b0).2.item() - f(&am, &b0).2.item()) / (2.0 * h);
            assert!((ga[i] - num).abs() < 1e-8);
            let mut bp = b0.clone();
            bp[i] += h;
            let mut bm = b0.clone();
            bm[i] -= h;
            let num = (f(&a0, &bp).2.item() - f(&a0, &bm).2.item()) / (2.0 * h);
            assert!((gb[i] - num).abs() < 1e-8);
        }
    }
}
