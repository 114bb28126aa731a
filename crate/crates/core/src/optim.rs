//! Adam with decoupled weight decay, and a cosine-annealing learning-rate
//! schedule with warm restarts.

use std::f64::consts::PI;

use crate::error::{GonError, Result};

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

/// Moment estimates for a fixed list of variable buffers.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    first_moment: Vec<Vec<f64>>,
    second_moment: Vec<Vec<f64>>,
    step_count: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    /// State for buffers of the given lengths.
    pub fn new(buffer_lens: &[usize]) -> Self {
        Self {
            first_moment: buffer_lens.iter().map(|&n| vec![0.0; n]).collect(),
            second_moment: buffer_lens.iter().map(|&n| vec![0.0; n]).collect(),
            step_count: 0,
            beta1: ADAM_BETA1,
            beta2: ADAM_BETA2,
            eps: ADAM_EPS,
        }
    }

    pub fn for_vector(len: usize) -> Self {
        Self::new(&[len])
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    pub fn first_moment(&self) -> &[Vec<f64>] {
        &self.first_moment
    }

    pub fn second_moment(&self) -> &[Vec<f64>] {
        &self.second_moment
    }

    /// Total number of scalars tracked (both moments).
    pub fn moment_count(&self) -> usize {
        self.first_moment.iter().map(Vec::len).sum::<usize>() * 2
    }

    fn check_shapes(&self, vars: &[&mut [f64]], grads: &[&[f64]]) -> Result<()> {
        if vars.len() != self.first_moment.len() || grads.len() != vars.len() {
            return Err(GonError::DimensionMismatch {
                context: "adam buffer count",
                expected: self.first_moment.len(),
                actual: vars.len().min(grads.len()),
            });
        }
        for ((v, g), m) in vars.iter().zip(grads).zip(&self.first_moment) {
            if v.len() != m.len() || g.len() != m.len() {
                return Err(GonError::DimensionMismatch {
                    context: "adam buffer length",
                    expected: m.len(),
                    actual: if v.len() != m.len() { v.len() } else { g.len() },
                });
            }
        }
        Ok(())
    }

    /// One bias-corrected Adam update. With `maximize` the gradient is
    /// negated (ascent). Weight decay is decoupled: `v ← v − lr·wd·v` is
    /// applied before the Adam delta.
    pub fn step(
        &mut self,
        vars: &mut [&mut [f64]],
        grads: &[&[f64]],
        lr: f64,
        weight_decay: f64,
        maximize: bool,
    ) -> Result<()> {
        self.check_shapes(vars, grads)?;
        if !(lr > 0.0 && lr.is_finite()) {
            return Err(GonError::config(format!("learning rate must be positive, got {lr}")));
        }
        if !(weight_decay >= 0.0 && weight_decay.is_finite()) {
            return Err(GonError::config(format!(
                "weight decay must be non-negative, got {weight_decay}"
            )));
        }
        if grads.iter().any(|g| g.iter().any(|v| !v.is_finite())) {
            return Err(GonError::NonFinite("adam gradient"));
        }

        self.step_count += 1;
        let t = self.step_count as i32;
        let bias1 = 1.0 - self.beta1.powi(t);
        let bias2 = 1.0 - self.beta2.powi(t);
        let sign = if maximize { -1.0 } else { 1.0 };
        let decay = 1.0 - lr * weight_decay;

        for (((var, grad), m), s) in vars
            .iter_mut()
            .zip(grads)
            .zip(&mut self.first_moment)
            .zip(&mut self.second_moment)
        {
            for (((x, &g), m), s) in var.iter_mut().zip(grad.iter()).zip(m).zip(s) {
                let g = sign * g;
                if weight_decay != 0.0 {
                    *x *= decay;
                }
                *m = self.beta1 * *m + (1.0 - self.beta1) * g;
                *s = self.beta2 * *s + (1.0 - self.beta2) * g * g;
                let m_hat = *m / bias1;
                let s_hat = *s / bias2;
                *x -= lr * m_hat / (s_hat.sqrt() + self.eps);
            }
        }
        Ok(())
    }

    /// Single-buffer convenience wrapper.
    pub fn step_vector(
        &mut self,
        var: &mut [f64],
        grad: &[f64],
        lr: f64,
        weight_decay: f64,
        maximize: bool,
    ) -> Result<()> {
        self.step(&mut [var], &[grad], lr, weight_decay, maximize)
    }
}

/// Cosine annealing with warm restarts every `restart_period_epochs`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LrSchedule {
    pub base_lr: f64,
    pub min_lr: f64,
    pub restart_period_epochs: usize,
    pub weight_decay: f64,
}

impl Default for LrSchedule {
    fn default() -> Self {
        Self {
            base_lr: 1e-4,
            min_lr: 0.0,
            restart_period_epochs: 10,
            weight_decay: 1e-5,
        }
    }
}

impl LrSchedule {
    pub fn validate(&self) -> Result<()> {
        if !(self.base_lr > 0.0 && self.base_lr.is_finite()) {
            return Err(GonError::config(format!(
                "base_lr must be positive, got {}",
                self.base_lr
            )));
        }
        if !(0.0..=self.base_lr).contains(&self.min_lr) {
            return Err(GonError::config(format!(
                "min_lr must lie in [0, base_lr], got {}",
                self.min_lr
            )));
        }
        if self.restart_period_epochs == 0 {
            return Err(GonError::config("restart period must be at least one epoch"));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(GonError::config(format!(
                "weight decay must be non-negative, got {}",
                self.weight_decay
            )));
        }
        Ok(())
    }

    pub fn lr_at(&self, epoch: usize) -> f64 {
        cosine_lr(self, epoch)
    }
}

/// `min + ½(base − min)(1 + cos(π·(epoch mod P)/P))`.
pub fn cosine_lr(schedule: &LrSchedule, epoch: usize) -> f64 {
    let period = schedule.restart_period_epochs.max(1);
    let phase = (epoch % period) as f64 / period as f64;
    schedule.min_lr + 0.5 * (schedule.base_lr - schedule.min_lr) * (1.0 + (PI * phase).cos())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn zero_gradient_is_fixed_point() {
        let mut state = AdamState::for_vector(3);
        let mut x = vec![1.0, -2.0, 3.0];
        for _ in 0..50 {
            state.step_vector(&mut x, &[0.0; 3], 1e-2, 0.0, false).unwrap();
        }
        assert_eq!(x, vec![1.0, -2.0, 3.0]);
        assert_eq!(state.step_count(), 50);
    }

    #[test]
    fn first_step_by_hand() {
        // t = 1: m̂ = g, v̂ = g², so delta = −lr·g/(|g| + ε)
        for g in [0.3, -4.0, 1e-3] {
            let lr = 0.05;
            let mut state = AdamState::for_vector(1);
            let mut x = vec![2.0];
            state.step_vector(&mut x, &[g], lr, 0.0, false).unwrap();
            let expected = -lr * g / (g.abs() + ADAM_EPS);
            assert_relative_eq!(x[0] - 2.0, expected, max_relative = 1e-9);
            assert_relative_eq!(x[0] - 2.0, -lr * g.signum(), max_relative = 1e-4);
        }
    }

    #[test]
    fn decoupled_weight_decay_precedes_delta() {
        let mut state = AdamState::for_vector(1);
        let mut x = vec![4.0];
        state.step_vector(&mut x, &[0.0], 0.1, 0.5, false).unwrap();
        assert_relative_eq!(x[0], 4.0 * (1.0 - 0.05));
    }

    #[test]
    fn maximize_mirrors_negated_minimize() {
        let grads = [[0.2, -1.0], [0.5, 0.1], [-0.3, 2.0]];
        let mut a = AdamState::for_vector(2);
        let mut b = AdamState::for_vector(2);
        let mut xa = vec![0.5, 0.5];
        let mut xb = xa.clone();
        for g in grads {
            let neg = [-g[0], -g[1]];
            a.step_vector(&mut xa, &g, 0.01, 1e-3, true).unwrap();
            b.step_vector(&mut xb, &neg, 0.01, 1e-3, false).unwrap();
        }
        assert_eq!(xa, xb);
    }

    #[test]
    fn rejects_bad_input() {
        let mut state = AdamState::new(&[2, 1]);
        let mut a = vec![0.0; 2];
        let mut b = vec![0.0; 2];
        assert!(state
            .step(&mut [&mut a, &mut b], &[&[0.0, 0.0], &[0.0, 0.0]], 0.1, 0.0, false)
            .is_err());
        let mut c = vec![0.0; 1];
        assert!(matches!(
            state.step(&mut [&mut a, &mut c], &[&[0.0, f64::NAN], &[0.0]], 0.1, 0.0, false),
            Err(GonError::NonFinite(_))
        ));
        assert_eq!(state.step_count(), 0);
    }

    #[test]
    fn cosine_schedule_points() {
        let s = LrSchedule {
            base_lr: 1e-3,
            min_lr: 0.0,
            restart_period_epochs: 10,
            weight_decay: 0.0,
        };
        assert_eq!(cosine_lr(&s, 0), 1e-3);
        assert_relative_eq!(cosine_lr(&s, 5), 5e-4, max_relative = 1e-12);
        assert_eq!(cosine_lr(&s, 10), 1e-3);
        assert!(cosine_lr(&s, 9) < cosine_lr(&s, 8));
    }

    #[test]
    fn schedule_validation() {
        assert!(LrSchedule::default().validate().is_ok());
        let bad = LrSchedule {
            restart_period_epochs: 0,
            ..LrSchedule::default()
        };
        assert!(bad.validate().is_err());
        let bad = LrSchedule {
            min_lr: 1.0,
            ..LrSchedule::default()
        };
        assert!(bad.validate().is_err());
    }

    proptest! {
        #[test]
        fn cosine_periodic_and_bounded(
            base in 1e-6f64..1.0,
            frac in 0.0f64..1.0,
            period in 1usize..30,
            epoch in 0usize..500,
        ) {
            let s = LrSchedule { base_lr: base, min_lr: base * frac, restart_period_epochs: period, weight_decay: 0.0 };
            let lr = cosine_lr(&s, epoch);
            prop_assert!(lr >= s.min_lr - 1e-15 && lr <= s.base_lr + 1e-15);
            prop_assert_eq!(lr, cosine_lr(&s, epoch + period));
        }

        #[test]
        fn adam_step_is_deterministic(g in proptest::collection::vec(-10.0f64..10.0, 1..8), lr in 1e-5f64..1.0) {
            let run = || {
                let mut st = AdamState::for_vector(g.len());
                let mut x = vec![0.25; g.len()];
                st.step_vector(&mut x, &g, lr, 1e-4, false).unwrap();
                st.step_vector(&mut x, &g, lr, 1e-4, true).unwrap();
                (x, st)
            };
            let (a, sa) = run();
            let (b, sb) = run();
            prop_assert_eq!(a, b);
            prop_assert!(sa.second_moment().iter().flatten().all(|&v| v >= 0.0));
            prop_assert_eq!(sa, sb);
        }
    }
}
