//! Adam optimizer and gradient-norm utilities.

#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: u64,
    m: Vec<f64>,
    v: Vec<f64>,
    skipped: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepOutcome {
    Applied,
    /// A gradient entry was NaN or infinite; parameters and moments untouched.
    SkippedNonFinite,
}

impl Adam {
    pub fn new(num_params: usize, lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: vec![0.0; num_params],
            v: vec![0.0; num_params],
            skipped: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    pub fn skipped(&self) -> u64 {
        self.skipped
    }

    pub fn moments(&self) -> (&[f64], &[f64]) {
        (&self.m, &self.v)
    }

    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) -> StepOutcome {
        assert_eq!(params.len(), self.m.len(), "parameter count does not match optimizer state");
        assert_eq!(grads.len(), self.m.len(), "gradient count does not match optimizer state");
        if grads.iter().any(|g| !g.is_finite()) {
            self.skipped += 1;
            return StepOutcome::SkippedNonFinite;
        }
        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - self.beta1.powi(t);
        let bc2 = 1.0 - self.beta2.powi(t);
        let (b1, b2) = (self.beta1, self.beta2);
        for (((p, &g), m), v) in params.iter_mut().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            *m = b1 * *m + (1.0 - b1) * g;
            *v = b2 * *v + (1.0 - b2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            *p -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
        StepOutcome::Applied
    }
}

pub fn global_norm(grads: &[&[f64]]) -> f64 {
    grads.iter().flat_map(|g| g.iter()).map(|x| x * x).sum::<f64>().sqrt()
}

/// Rescales all gradient buffers together so their joint L2 norm is at most
/// `max_norm`. Returns the norm before clipping.
pub fn clip_grad_norm(grads: &mut [&mut [f64]], max_norm: f64) -> f64 {
    let norm = grads.iter().flat_map(|g| g.iter()).map(|x| x * x).sum::<f64>().sqrt();
    if norm > max_norm && norm.is_finite() {
        let scale = max_norm / norm;
        for g in grads.iter_mut() {
            for x in g.iter_mut() {
                *x *= scale;
            }
        }
    }
    norm
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradients_leave_parameters() {
        let mut adam = Adam::new(3, 1e-3);
        let mut p = vec![1.0, -2.0, 0.5];
        adam.step(&mut p, &[0.0, 0.0, 0.0]);
        assert_eq!(p, vec![1.0, -2.0, 0.5]);
    }

    #[test]
    fn zero_learning_rate_leaves_parameters() {
        let mut adam = Adam::new(2, 0.0);
        let mut p = vec![1.0, 2.0];
        for _ in 0..5 {
            adam.step(&mut p, &[0.3, -7.0]);
        }
        assert_eq!(p, vec![1.0, 2.0]);
    }

    #[test]
    fn first_step_matches_closed_form() {
        // Step 1: m_hat = g, v_hat = g^2, so update = lr * g / (|g| + eps).
        let lr = 1e-3;
        for g in [0.25, -3.0, 1e-6, 40.0] {
            let mut adam = Adam::new(1, lr);
            let mut p = vec![0.0];
            adam.step(&mut p, &[g]);
            let expected = -lr * g / (g.abs() + 1e-8);
            assert!((p[0] - expected).abs() < 1e-15, "g={g}: {} vs {expected}", p[0]);
        }
    }

    #[test]
    fn step_counter_increments_by_one() {
        let mut adam = Adam::new(1, 0.1);
        let mut p = vec![0.0];
        for k in 1..=4 {
            adam.step(&mut p, &[1.0]);
            assert_eq!(adam.steps(), k);
        }
    }

    #[test]
    fn non_finite_gradient_is_skipped() {
        let mut adam = Adam::new(2, 0.1);
        let mut p = vec![1.0, 1.0];
        assert_eq!(adam.step(&mut p, &[f64::NAN, 0.0]), StepOutcome::SkippedNonFinite);
        assert_eq!(adam.step(&mut p, &[f64::INFINITY, 0.0]), StepOutcome::SkippedNonFinite);
        assert_eq!(p, vec![1.0, 1.0]);
        assert_eq!(adam.steps(), 0);
        assert_eq!(adam.skipped(), 2);
    }

    #[test]
    fn clip_to_max_norm() {
        let mut a = vec![4.8, 0.0];
        let mut b = vec![6.4];
        let before = clip_grad_norm(&mut [&mut a, &mut b], 4.0);
        assert!((before - 8.0).abs() < 1e-12);
        let after = global_norm(&[&a, &b]);
        assert!((after - 4.0).abs() < 1e-12);
    }

    #[test]
    fn clip_leaves_small_gradients() {
        let mut a = vec![1.0, 1.0];
        clip_grad_norm(&mut [&mut a], 4.0);
        assert_eq!(a, vec![1.0, 1.0]);
    }
}
