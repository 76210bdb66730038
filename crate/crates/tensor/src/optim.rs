use std::collections::HashMap;

use crate::{Scalar, Tensor};

/// Adaptive moment estimation with bias correction.
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: u64,
    moments: HashMap<u64, (Vec<f64>, Vec<f64>)>,
}

impl Adam {
    pub fn new(beta1: f64, beta2: f64, eps: f64) -> Self {
        Self { beta1, beta2, eps, step: 0, moments: HashMap::new() }
    }

    /// The paper-default configuration: beta1 = 0.9, beta2 = 0.999.
    pub fn standard() -> Self {
        Self::new(0.9, 0.999, 1e-8)
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    /// Applies one update to every parameter with an accumulated gradient,
    /// then clears the gradients. Parameters without gradients are skipped.
    pub fn step<T: Scalar>(&mut self, params: &[Tensor<T>], lr: f64) {
        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - self.beta1.powi(t);
        let bc2 = 1.0 - self.beta2.powi(t);
        for p in params {
            let Some(grad) = p.grad() else { continue };
            let (m, v) = self
                .moments
                .entry(p.id())
                .or_insert_with(|| (vec![0.0; p.len()], vec![0.0; p.len()]));
            assert_eq!(m.len(), p.len(), "moment buffer shape mismatch");
            p.with_data_mut(|data| {
                for i in 0..data.len() {
                    let g = grad[i].as_f64();
                    m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * g;
                    v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * g * g;
                    let mhat = m[i] / bc1;
                    let vhat = v[i] / bc2;
                    data[i] = T::of_f64(data[i].as_f64() - lr * mhat / (vhat.sqrt() + self.eps));
                }
            });
            p.zero_grad();
        }
    }
}

/// Per-epoch geometric interpolation from `lr_init` (epoch 0) to `lr_final`
/// (the last epoch).
pub fn exponential_lr(lr_init: f64, lr_final: f64, epoch: usize, epochs: usize) -> f64 {
    assert!(lr_init > 0.0 && lr_final > 0.0 && epochs >= 1);
    if epochs == 1 {
        return lr_init;
    }
    let t = epoch as f64 / (epochs - 1) as f64;
    lr_init * (lr_final / lr_init).powf(t)
}
