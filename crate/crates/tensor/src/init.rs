use rand::Rng;

use crate::{Scalar, Tensor};

/// Kaiming-uniform initialization: `U(-sqrt(6/fan_in), +sqrt(6/fan_in))`.
pub fn kaiming_uniform<T: Scalar>(shape: &[usize], fan_in: usize, rng: &mut impl Rng) -> Tensor<T> {
    assert!(fan_in > 0);
    let bound = (6.0 / fan_in as f64).sqrt();
    let n: usize = shape.iter().product();
    let data: Vec<T> = (0..n).map(|_| T::of_f64(rng.gen_range(-bound..bound))).collect();
    Tensor::param(shape, data)
}

/// Zero-initialized parameter (biases, final regression layers).
pub fn zeros_param<T: Scalar>(shape: &[usize]) -> Tensor<T> {
    Tensor::param(shape, vec![T::zero(); shape.iter().product()])
}

/// Constant-initialized parameter (PReLU slopes, BN gamma).
pub fn const_param<T: Scalar>(shape: &[usize], value: f64) -> Tensor<T> {
    Tensor::param(shape, vec![T::of_f64(value); shape.iter().product()])
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn kaiming_bound_respected() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        let t = kaiming_uniform::<f64>(&[100, 50], 50, &mut rng);
        let bound = (6.0 / 50.0f64).sqrt();
        assert!(t.data().iter().all(|v| v.abs() < bound));
        assert!(t.is_tracked());
    }
}
