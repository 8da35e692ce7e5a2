use crate::error::{Error, Result};

pub const DEFAULT_BETA1: f64 = 0.9;
pub const DEFAULT_BETA2: f64 = 0.999;
pub const DEFAULT_EPSILON: f64 = 1e-8;

/// Adam moment estimates for one parameter buffer.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    step: u64,
    beta1: f64,
    beta2: f64,
    eps: f64,
}

impl AdamState {
    pub fn new(num_params: usize) -> Self {
        Self::with_constants(num_params, DEFAULT_BETA1, DEFAULT_BETA2, DEFAULT_EPSILON)
    }

    pub fn with_constants(num_params: usize, beta1: f64, beta2: f64, eps: f64) -> Self {
        Self {
            m: vec![0.0; num_params],
            v: vec![0.0; num_params],
            step: 0,
            beta1,
            beta2,
            eps,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn len(&self) -> usize {
        self.m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.m.is_empty()
    }

    /// One bias-corrected descent step `params -= lr * m_hat / (sqrt(v_hat) + eps)`.
    ///
    /// A non-finite gradient leaves both the parameters and the state untouched.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64], lr: f64) -> Result<()> {
        if params.len() != self.m.len() {
            return Err(Error::Dimension {
                what: "adam parameters",
                expected: self.m.len(),
                found: params.len(),
            });
        }
        if grads.len() != self.m.len() {
            return Err(Error::Dimension {
                what: "adam gradients",
                expected: self.m.len(),
                found: grads.len(),
            });
        }
        if grads.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite("gradient"));
        }
        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - self.beta1.powi(t);
        let bc2 = 1.0 - self.beta2.powi(t);
        for (((p, &g), m), v) in params
            .iter_mut()
            .zip(grads)
            .zip(&mut self.m)
            .zip(&mut self.v)
        {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            *p -= lr * m_hat / (v_hat.sqrt() + self.eps);
        }
        Ok(())
    }

    /// Same as [`step`](Self::step) but climbs the gradient.
    pub fn ascend(&mut self, params: &mut [f64], grads: &[f64], lr: f64) -> Result<()> {
        let neg: Vec<f64> = grads.iter().map(|g| -g).collect();
        self.step(params, &neg, lr)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_keeps_params_and_counts_step() {
        let mut s = AdamState::new(3);
        let mut p = vec![1.0, -2.0, 0.5];
        s.step(&mut p, &[0.0; 3], 1e-3).unwrap();
        assert_eq!(p, vec![1.0, -2.0, 0.5]);
        assert_eq!(s.step_count(), 1);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut s = AdamState::new(1);
        let mut p = vec![0.0];
        s.step(&mut p, &[1.0], 1e-3).unwrap();
        let expected = -1e-3 / (1.0 + 1e-8);
        assert!((p[0] - expected).abs() < 1e-18, "{}", p[0]);
    }

    #[test]
    fn minimizes_a_quadratic() {
        // scalar oracle loop on f(w) = w^2
        let mut s = AdamState::new(1);
        let mut w = vec![1.0];
        for _ in 0..100 {
            let g = [2.0 * w[0]];
            s.step(&mut w, &g, 0.1).unwrap();
        }
        assert!(w[0].abs() < 0.1, "{}", w[0]);
    }

    #[test]
    fn non_finite_gradient_is_rejected_without_side_effects() {
        let mut s = AdamState::new(2);
        let mut p = vec![1.0, 1.0];
        let err = s.step(&mut p, &[f64::NAN, 0.0], 0.1).unwrap_err();
        assert!(matches!(err, Error::NonFinite(_)));
        assert_eq!(p, vec![1.0, 1.0]);
        assert_eq!(s.step_count(), 0);
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let mut s = AdamState::new(2);
        let mut p = vec![0.0; 3];
        assert!(s.step(&mut p, &[0.0; 3], 0.1).is_err());
    }

    #[test]
    fn ascend_climbs() {
        let mut s = AdamState::new(1);
        let mut p = vec![0.0];
        s.ascend(&mut p, &[1.0], 0.01).unwrap();
        assert!(p[0] > 0.0);
    }
}
