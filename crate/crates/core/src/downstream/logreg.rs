//! Binary logistic regression trained by full-batch gradient descent with
//! backtracking line search.

use ndarray::{Array1, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRegModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    /// Gradient steps actually taken.
    pub iterations: usize,
}

impl LogRegModel {
    pub fn zeros(d: usize) -> Self {
        Self {
            weights: vec![0.0; d],
            bias: 0.0,
            iterations: 0,
        }
    }
}

/// Step-size and stopping policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LrPolicy {
    /// Every iteration's line search starts from this step.
    pub initial_step: f64,
    pub shrink: f64,
    /// Armijo sufficient-decrease constant.
    pub armijo: f64,
    /// L2 penalty on the weights (not the bias).
    pub l2: f64,
    pub gradient_tolerance: f64,
}

impl Default for LrPolicy {
    fn default() -> Self {
        Self {
            initial_step: 4.0,
            shrink: 0.5,
            armijo: 1e-4,
            l2: 1e-8,
            gradient_tolerance: 1e-8,
        }
    }
}

impl LrPolicy {
    pub fn validate(&self) -> Result<()> {
        let ok = self.initial_step > 0.0
            && self.shrink > 0.0
            && self.shrink < 1.0
            && self.armijo > 0.0
            && self.armijo < 1.0
            && self.l2 >= 0.0
            && self.gradient_tolerance >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::invalid("invalid logistic-regression step policy"))
        }
    }
}

fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Mean binary cross-entropy plus `l2/2 * |w|^2`, and its gradient with
/// respect to `(weights, bias)`.
pub fn loss_and_gradient(
    x: ArrayView2<f64>,
    y: &[u8],
    weights: ArrayView1<f64>,
    bias: f64,
    l2: f64,
) -> (f64, Array1<f64>, f64) {
    let n = x.nrows() as f64;
    let z = x.dot(&weights) + bias;
    let mut loss = 0.0;
    let mut residual = Array1::zeros(z.len());
    for (k, (&zi, &yi)) in z.iter().zip(y).enumerate() {
        let yi = f64::from(yi);
        loss += softplus(zi) - yi * zi;
        residual[k] = sigmoid(zi) - yi;
    }
    let grad_w = x.t().dot(&residual) / n + &weights * l2;
    let grad_b = residual.sum() / n;
    (loss / n + 0.5 * l2 * weights.dot(&weights), grad_w, grad_b)
}

fn check_training(x: ArrayView2<f64>, y: &[u8]) -> Result<()> {
    if x.nrows() != y.len() {
        return Err(Error::ShapeMismatch {
            expected: (y.len(), x.ncols()),
            actual: x.dim(),
        });
    }
    if y.iter().any(|&v| v > 1) {
        return Err(Error::invalid("labels must be 0 or 1"));
    }
    if !y.contains(&0) || !y.contains(&1) {
        return Err(Error::SingleClass);
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("training features must be finite"));
    }
    Ok(())
}

/// Train once and keep a snapshot at each checkpoint iteration count.
/// Checkpoints must be ascending. A run that converges early reports the
/// converged model at every later checkpoint.
pub fn train_logreg_path(
    x: ArrayView2<f64>,
    y: &[u8],
    checkpoints: &[usize],
    policy: &LrPolicy,
) -> Result<Vec<LogRegModel>> {
    check_training(x, y)?;
    policy.validate()?;
    if checkpoints.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::invalid("iteration checkpoints must be ascending"));
    }
    let mut w = Array1::<f64>::zeros(x.ncols());
    let mut b = 0.0;
    let mut taken = 0;
    let mut converged = false;
    let (mut loss, mut gw, mut gb) = loss_and_gradient(x, y, w.view(), b, policy.l2);
    let mut out = Vec::with_capacity(checkpoints.len());
    for &target in checkpoints {
        while taken < target && !converged {
            let gnorm2 = gw.dot(&gw) + gb * gb;
            if gnorm2.sqrt() < policy.gradient_tolerance {
                converged = true;
                break;
            }
            let mut step = policy.initial_step;
            loop {
                let w_new = &w - &(&gw * step);
                let b_new = b - step * gb;
                let (l_new, gw_new, gb_new) = loss_and_gradient(x, y, w_new.view(), b_new, policy.l2);
                if l_new <= loss - policy.armijo * step * gnorm2 {
                    w = w_new;
                    b = b_new;
                    loss = l_new;
                    gw = gw_new;
                    gb = gb_new;
                    taken += 1;
                    break;
                }
                step *= policy.shrink;
                if step < 1e-30 {
                    // no representable descent left
                    converged = true;
                    break;
                }
            }
        }
        out.push(LogRegModel {
            weights: w.to_vec(),
            bias: b,
            iterations: taken,
        });
    }
    Ok(out)
}

pub fn train_logreg(
    x: ArrayView2<f64>,
    y: &[u8],
    max_iter: usize,
    policy: &LrPolicy,
) -> Result<LogRegModel> {
    Ok(train_logreg_path(x, y, &[max_iter], policy)?.pop().expect("one checkpoint"))
}

pub fn predict_proba(model: &LogRegModel, x: ArrayView2<f64>) -> Result<Vec<f64>> {
    if x.ncols() != model.weights.len() {
        return Err(Error::ShapeMismatch {
            expected: (x.nrows(), model.weights.len()),
            actual: x.dim(),
        });
    }
    let w = ArrayView1::from(&model.weights);
    Ok(x.dot(&w).iter().map(|&z| sigmoid(z + model.bias)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::downstream::auc;
    use crate::seed;
    use ndarray::{array, Array2};
    use rand::Rng as _;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn separable_line() {
        let x = array![[-1.0], [-1.0], [1.0], [1.0]];
        let y = [0, 0, 1, 1];
        let m = train_logreg(x.view(), &y, 100, &LrPolicy::default()).unwrap();
        let p = predict_proba(&m, x.view()).unwrap();
        assert_eq!(auc(&p, &y).unwrap(), 1.0);
        assert!(m.weights[0] > 0.0);
    }

    #[test]
    fn zero_iterations() {
        let x = array![[-1.0, 2.0], [1.0, 0.0]];
        let m = train_logreg(x.view(), &[0, 1], 0, &LrPolicy::default()).unwrap();
        assert_eq!(m, LogRegModel::zeros(2));
        assert_eq!(predict_proba(&m, x.view()).unwrap(), vec![0.5, 0.5]);
    }

    #[test]
    fn sigmoid_edges() {
        let m = LogRegModel {
            weights: vec![1.0],
            bias: 0.0,
            iterations: 0,
        };
        assert_eq!(predict_proba(&m, array![[0.0]].view()).unwrap(), vec![0.5]);
        let p = predict_proba(&m, array![[1.0], [5.0], [30.0], [800.0]].view()).unwrap();
        assert!(p.windows(2).all(|w| w[0] <= w[1]));
        assert!(p[3] <= 1.0 && p[3] > 0.999);
        assert!(sigmoid(-800.0) >= 0.0);
        assert!(predict_proba(&m, array![[0.0, 1.0]].view()).is_err());
    }

    #[test]
    fn single_class_rejected() {
        let x = array![[0.0], [1.0]];
        assert!(matches!(
            train_logreg(x.view(), &[1, 1], 10, &LrPolicy::default()),
            Err(Error::SingleClass)
        ));
    }

    fn noisy_data(n: usize, d: usize, seed: u64) -> (Array2<f64>, Vec<u8>) {
        let mut rng = seed::rng(seed);
        let mut x = Array2::zeros((n, d));
        let mut y = Vec::with_capacity(n);
        for i in 0..n {
            let label = rng.random::<bool>();
            y.push(u8::from(label));
            for j in 0..d {
                let shift = if label { 0.5 } else { -0.5 } / (j + 1) as f64;
                let noise: f64 = StandardNormal.sample(&mut rng);
                x[[i, j]] = shift + noise;
            }
        }
        (x, y)
    }

    #[test]
    fn duplicated_columns_match_single_column_model() {
        let (x, y) = noisy_data(200, 1, 3);
        let doubled = ndarray::concatenate(ndarray::Axis(1), &[x.view(), x.view()]).unwrap();
        let policy = LrPolicy::default();
        let single = train_logreg(x.view(), &y, 5000, &policy).unwrap();
        let dup = train_logreg(doubled.view(), &y, 5000, &policy).unwrap();
        assert!((dup.weights[0] - dup.weights[1]).abs() < 1e-12);
        let a = predict_proba(&single, x.view()).unwrap();
        let b = predict_proba(&dup, doubled.view()).unwrap();
        for (p, q) in a.iter().zip(&b) {
            assert!((p - q).abs() < 1e-6);
        }
    }

    #[test]
    fn path_snapshots_match_separate_runs() {
        let (x, y) = noisy_data(100, 3, 4);
        let policy = LrPolicy::default();
        let path = train_logreg_path(x.view(), &y, &[0, 5, 20], &policy).unwrap();
        for (m, iters) in path.iter().zip([0, 5, 20]) {
            assert_eq!(m, &train_logreg(x.view(), &y, iters, &policy).unwrap());
        }
        assert!(train_logreg_path(x.view(), &y, &[5, 2], &policy).is_err());
    }

    #[test]
    fn loss_decreases() {
        let (x, y) = noisy_data(100, 3, 5);
        let policy = LrPolicy::default();
        let path = train_logreg_path(x.view(), &y, &[0, 1, 10, 100], &policy).unwrap();
        let losses: Vec<f64> = path
            .iter()
            .map(|m| loss_and_gradient(x.view(), &y, ArrayView1::from(&m.weights), m.bias, policy.l2).0)
            .collect();
        assert!(losses.windows(2).all(|w| w[1] <= w[0]), "{losses:?}");
        assert!((losses[0] - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let (x, y) = noisy_data(50, 4, 6);
        let mut rng = seed::rng(60);
        for _ in 0..20 {
            let w: Array1<f64> = (0..4).map(|_| rng.random_range(-2.0..2.0)).collect();
            let b = rng.random_range(-1.0..1.0);
            let (_, gw, gb) = loss_and_gradient(x.view(), &y, w.view(), b, 0.1);
            let h = 1e-6;
            for j in 0..4 {
                let mut up = w.clone();
                up[j] += h;
                let mut down = w.clone();
                down[j] -= h;
                let fd = (loss_and_gradient(x.view(), &y, up.view(), b, 0.1).0
                    - loss_and_gradient(x.view(), &y, down.view(), b, 0.1).0)
                    / (2.0 * h);
                assert!((fd - gw[j]).abs() <= 1e-5 * gw[j].abs().max(1e-3));
            }
            let fd = (loss_and_gradient(x.view(), &y, w.view(), b + h, 0.1).0
                - loss_and_gradient(x.view(), &y, w.view(), b - h, 0.1).0)
                / (2.0 * h);
            assert!((fd - gb).abs() <= 1e-5 * gb.abs().max(1e-3));
        }
    }
}
