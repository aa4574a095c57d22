//! Adam optimizer with bias correction.

use serde::{Deserialize, Serialize};

/// Hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamOpts {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamOpts {
    pub fn with_lr(lr: f64) -> AdamOpts {
        AdamOpts { lr, ..AdamOpts::default() }
    }
}

impl Default for AdamOpts {
    fn default() -> Self {
        AdamOpts { lr: 1e-3, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// Per-parameter first/second moment estimates plus the step counter.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    step: u64,
}

impl AdamState {
    pub fn new(n_params: usize) -> AdamState {
        AdamState { m: vec![0.0; n_params], v: vec![0.0; n_params], step: 0 }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One bias-corrected update: `p -= lr · m̂ / (√v̂ + ε)`.
    pub fn step(&mut self, opts: &AdamOpts, params: &mut [f64], grads: &[f64]) {
        assert_eq!(params.len(), self.m.len());
        assert_eq!(grads.len(), self.m.len());
        self.step += 1;
        let bc1 = 1.0 - opts.beta1.powi(self.step as i32);
        let bc2 = 1.0 - opts.beta2.powi(self.step as i32);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = opts.beta1 * self.m[i] + (1.0 - opts.beta1) * g;
            self.v[i] = opts.beta2 * self.v[i] + (1.0 - opts.beta2) * g * g;
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= opts.lr * m_hat / (v_hat.sqrt() + opts.eps);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_lr_times_sign() {
        // with constant gradient g, m̂ = g and v̂ = g², so the first update
        // is −lr·g/(|g| + ε) ≈ −lr·sign(g)
        let opts = AdamOpts::with_lr(0.01);
        let mut state = AdamState::new(3);
        let mut params = vec![1.0, -2.0, 0.5];
        let grads = vec![3.0, -0.04, 1e-3];
        let before = params.clone();
        state.step(&opts, &mut params, &grads);
        for i in 0..3 {
            let delta = params[i] - before[i];
            let expected = -opts.lr * grads[i].signum();
            assert!((delta - expected).abs() < 1e-5, "{delta} vs {expected}");
        }
    }

    #[test]
    fn zero_gradient_changes_nothing() {
        let opts = AdamOpts::default();
        let mut state = AdamState::new(2);
        let mut params = vec![0.3, -0.7];
        state.step(&opts, &mut params, &[0.0, 0.0]);
        assert_eq!(params, vec![0.3, -0.7]);
        assert!(state.m.iter().all(|&x| x == 0.0));
        assert!(state.v.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn same_inputs_same_trajectory() {
        let opts = AdamOpts::with_lr(0.05);
        let run = || {
            let mut state = AdamState::new(4);
            let mut params = vec![0.1, 0.2, 0.3, 0.4];
            for step in 0..20 {
                let grads: Vec<f64> =
                    params.iter().map(|p| p * 2.0 + step as f64 * 0.01).collect();
                state.step(&opts, &mut params, &grads);
            }
            params
        };
        let a = run();
        let b = run();
        assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
    }
}
