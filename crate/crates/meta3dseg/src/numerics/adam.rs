//! Adam with bias correction.
//!
//! Moment state lives in the optimizer, keyed by registration order, so the
//! caller can rebuild its computation graph every step while the optimizer
//! state persists. All arithmetic runs in the parameter element type and
//! updates are applied in registration order, keeping runs bit-identical.

use crate::numerics::tensor::Scalar;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug)]
pub struct AdamParams {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamParams {
    fn default() -> Self {
        AdamParams {
            lr: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl AdamParams {
    pub fn with_lr(lr: f64) -> Self {
        AdamParams {
            lr,
            ..Default::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::InvalidConfig(format!("adam: lr {} out of range", self.lr)));
        }
        for (name, beta) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&beta) {
                return Err(Error::InvalidConfig(format!("adam: {name} {beta} out of [0, 1)")));
            }
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::InvalidConfig(format!("adam: eps {} out of range", self.eps)));
        }
        Ok(())
    }
}

struct Slot<T> {
    m: Vec<T>,
    v: Vec<T>,
}

pub struct Adam<T> {
    cfg: AdamParams,
    t: u64,
    slots: Vec<Slot<T>>,
}

impl<T: Scalar> Adam<T> {
    pub fn new(cfg: AdamParams) -> Result<Self> {
        cfg.validate()?;
        Ok(Adam {
            cfg,
            t: 0,
            slots: Vec::new(),
        })
    }

    pub fn params(&self) -> AdamParams {
        self.cfg
    }

    /// Reserve moment state for one parameter tensor; returns its slot id.
    pub fn register(&mut self, len: usize) -> usize {
        self.slots.push(Slot {
            m: vec![T::zero(); len],
            v: vec![T::zero(); len],
        });
        self.slots.len() - 1
    }

    /// Advance the shared step counter used for bias correction.
    pub fn begin_step(&mut self) {
        self.t += 1;
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }

    /// Apply one Adam update to `value` in place.
    pub fn update(&mut self, slot: usize, value: &mut [T], grad: &[T]) -> Result<()> {
        if self.t == 0 {
            return Err(Error::InvalidArgument(
                "adam: update before begin_step".into(),
            ));
        }
        let state = self
            .slots
            .get_mut(slot)
            .ok_or_else(|| Error::InvalidArgument(format!("adam: unknown slot {slot}")))?;
        if state.m.len() != value.len() || value.len() != grad.len() {
            return Err(Error::ShapeMismatch(format!(
                "adam: slot holds {} elements, value {}, grad {}",
                state.m.len(),
                value.len(),
                grad.len()
            )));
        }
        let b1 = T::from_f64(self.cfg.beta1);
        let b2 = T::from_f64(self.cfg.beta2);
        let one = T::one();
        let lr = T::from_f64(self.cfg.lr);
        let eps = T::from_f64(self.cfg.eps);
        let c1 = T::from_f64(1.0 - self.cfg.beta1.powi(self.t as i32));
        let c2 = T::from_f64(1.0 - self.cfg.beta2.powi(self.t as i32));
        for i in 0..value.len() {
            let g = grad[i];
            state.m[i] = b1 * state.m[i] + (one - b1) * g;
            state.v[i] = b2 * state.v[i] + (one - b2) * g * g;
            let m_hat = state.m[i] / c1;
            let v_hat = state.v[i] / c2;
            value[i] = value[i] - lr * m_hat / (v_hat.sqrt() + eps);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_roughly_lr() {
        let mut opt: Adam<f64> = Adam::new(AdamParams::with_lr(0.1)).unwrap();
        let slot = opt.register(1);
        let mut theta = [1.0];
        opt.begin_step();
        opt.update(slot, &mut theta, &[0.5]).unwrap();
        assert!((theta[0] - 0.9).abs() < 1e-7, "theta = {}", theta[0]);
    }

    #[test]
    fn zero_gradient_from_fresh_state_is_identity() {
        let mut opt: Adam<f32> = Adam::new(AdamParams::default()).unwrap();
        let slot = opt.register(3);
        let mut theta = [1.0f32, -2.0, 0.25];
        opt.begin_step();
        opt.update(slot, &mut theta, &[0.0; 3]).unwrap();
        assert_eq!(theta, [1.0, -2.0, 0.25]);
    }

    #[test]
    fn updates_are_bit_deterministic() {
        let run = || {
            let mut opt: Adam<f32> = Adam::new(AdamParams::default()).unwrap();
            let slot = opt.register(2);
            let mut theta = [0.3f32, -0.7];
            for step in 0..50 {
                opt.begin_step();
                let g = [0.01 * step as f32, -0.02];
                opt.update(slot, &mut theta, &g).unwrap();
            }
            theta.map(f32::to_bits)
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn descends_a_quadratic() {
        let mut opt: Adam<f64> = Adam::new(AdamParams::with_lr(0.05)).unwrap();
        let slot = opt.register(1);
        let mut theta = [2.0];
        for _ in 0..400 {
            opt.begin_step();
            let g = [2.0 * theta[0]];
            opt.update(slot, &mut theta, &g).unwrap();
        }
        assert!(theta[0].abs() < 0.05, "theta = {}", theta[0]);
    }

    #[test]
    fn update_requires_begin_step() {
        let mut opt: Adam<f32> = Adam::new(AdamParams::default()).unwrap();
        let slot = opt.register(1);
        let mut theta = [0.0f32];
        assert!(opt.update(slot, &mut theta, &[1.0]).is_err());
    }

    #[test]
    fn rejects_bad_hyperparameters() {
        assert!(Adam::<f32>::new(AdamParams {
            lr: 0.0,
            ..Default::default()
        })
        .is_err());
        assert!(Adam::<f32>::new(AdamParams {
            beta1: 1.0,
            ..Default::default()
        })
        .is_err());
    }
}
