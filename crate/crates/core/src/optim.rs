//! Adam with bias correction, one instance per parameter tensor.

use alloc::vec;
use alloc::vec::Vec;

use crate::math::sqrt;

#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    step: i32,
}

impl Adam {
    pub fn new(len: usize, lr: f64) -> Self {
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: vec![0.0; len],
            v: vec![0.0; len],
            step: 0,
        }
    }

    /// `eps = 0` makes every coordinate move at the learning rate whatever
    /// the magnitude of its gradient.
    pub fn with_epsilon(len: usize, lr: f64, eps: f64) -> Self {
        Adam {
            eps,
            ..Adam::new(len, lr)
        }
    }

    pub fn steps_taken(&self) -> i32 {
        self.step
    }

    /// One dense update of `params` with `grads` (same length as at construction).
    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) {
        debug_assert_eq!(params.len(), self.m.len());
        debug_assert_eq!(grads.len(), self.m.len());
        self.step += 1;
        let bc1 = 1.0 - libm::pow(self.beta1, self.step as f64);
        let bc2 = 1.0 - libm::pow(self.beta2, self.step as f64);
        let step_size = self.lr / bc1;
        for ((p, &g), (m, v)) in params
            .iter_mut()
            .zip(grads)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            // A gradient whose square underflows would reach `m` but not `v`.
            let g = if g * g == 0.0 { 0.0 } else { g };
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            let denom = sqrt(*v / bc2) + self.eps;
            if denom > 0.0 {
                *p -= step_size * *m / denom;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scale_free_ignores_gradient_magnitude() {
        let mut a = Adam::with_epsilon(3, 0.01, 0.0);
        let mut b = Adam::with_epsilon(3, 0.01, 0.0);
        let mut pa = [0.0; 3];
        let mut pb = [0.0; 3];
        for _ in 0..5 {
            a.step(&mut pa, &[1.0, -2.0, 0.0]);
            b.step(&mut pb, &[1e-60, -2e-60, 0.0]);
        }
        for (x, y) in pa.iter().zip(&pb) {
            assert!((x - y).abs() < 1e-15);
        }
        assert_eq!(pa[2], 0.0);
        let mut c = Adam::with_epsilon(1, 0.01, 0.0);
        let mut pc = [1.0];
        c.step(&mut pc, &[1e-170]);
        assert_eq!(pc[0], 1.0);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        // With bias correction the first update is lr · g / (|g| + eps').
        let mut opt = Adam::new(2, 0.1);
        let mut p = [1.0, -1.0];
        opt.step(&mut p, &[3.0, -0.5]);
        assert!((p[0] - 0.9).abs() < 1e-8);
        assert!((p[1] + 0.9).abs() < 1e-8);
    }

    #[test]
    fn zero_gradient_is_a_no_op_from_rest() {
        let mut opt = Adam::new(1, 0.1);
        let mut p = [2.0];
        opt.step(&mut p, &[0.0]);
        assert_eq!(p, [2.0]);
    }

    #[test]
    fn minimises_a_quadratic() {
        let mut opt = Adam::new(1, 0.05);
        let mut p = [5.0];
        for _ in 0..2000 {
            let g = [2.0 * (p[0] - 1.5)];
            opt.step(&mut p, &g);
        }
        assert!((p[0] - 1.5).abs() < 1e-3);
    }
}
