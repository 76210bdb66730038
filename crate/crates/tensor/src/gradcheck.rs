use crate::{Scalar, Tensor};

/// Compares tape gradients with central finite differences.
///
/// `f` rebuilds the scalar-valued graph from the given parameters on every
/// call; run in f64 for meaningful tolerances. Returns the max relative
/// error over all parameter entries.
pub fn grad_check<T: Scalar>(
    f: impl Fn(&[Tensor<T>]) -> Tensor<T>,
    params: &[Tensor<T>],
    h: f64,
) -> f64 {
    let loss = f(params);
    assert_eq!(loss.len(), 1, "grad_check requires a scalar graph");
    assert!(loss.item().as_f64().is_finite(), "non-finite loss value");
    for p in params {
        p.zero_grad();
    }
    let loss = f(params);
    loss.backward();
    let analytic: Vec<Vec<f64>> = params
        .iter()
        .map(|p| p.grad().map(|g| g.iter().map(|v| v.as_f64()).collect()).unwrap_or_else(|| vec![0.0; p.len()]))
        .collect();

    let mut max_rel = 0.0f64;
    for (pi, p) in params.iter().enumerate() {
        let base = p.to_vec();
        for i in 0..p.len() {
            let mut plus = base.clone();
            plus[i] = plus[i] + T::of_f64(h);
            p.set_data(&plus);
            let fp = f(params).item().as_f64();
            let mut minus = base.clone();
            minus[i] = minus[i] - T::of_f64(h);
            p.set_data(&minus);
            let fm = f(params).item().as_f64();
            p.set_data(&base);
            let numeric = (fp - fm) / (2.0 * h);
            assert!(numeric.is_finite(), "non-finite finite-difference value");
            let a = analytic[pi][i];
            let denom = a.abs().max(numeric.abs());
            let rel = if denom < 1e-10 { 0.0 } else { (a - numeric).abs() / denom };
            max_rel = max_rel.max(rel);
        }
    }
    for p in params {
        p.zero_grad();
    }
    max_rel
}
