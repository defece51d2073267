use crate::model::Parameters;
use crate::scalar::Scalar;

/// Adam with bias correction. Frozen tensors are skipped entirely: no
/// moment update, no parameter write, so they stay bit-identical.
#[derive(Debug, Clone)]
pub struct Adam<T> {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    step: u64,
    m: Option<Parameters<T>>,
    v: Option<Parameters<T>>,
}

impl<T: Scalar> Adam<T> {
    pub fn new(learning_rate: f64, beta1: f64, beta2: f64, epsilon: f64) -> Self {
        Adam {
            learning_rate,
            beta1,
            beta2,
            epsilon,
            step: 0,
            m: None,
            v: None,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn step(&mut self, params: &mut Parameters<T>, grads: &Parameters<T>) {
        if self.m.is_none() {
            self.m = Some(params.zeros_like());
            self.v = Some(params.zeros_like());
        }
        self.step += 1;
        let m = self.m.as_mut().unwrap();
        let v = self.v.as_mut().unwrap();
        let b1 = T::of_f64(self.beta1);
        let b2 = T::of_f64(self.beta2);
        let one = T::one();
        let correction1 = T::of_f64(1.0 - self.beta1.powi(self.step as i32));
        let correction2 = T::of_f64(1.0 - self.beta2.powi(self.step as i32));
        let lr = T::of_f64(self.learning_rate);
        let eps = T::of_f64(self.epsilon);
        for idx in 0..params.len() {
            if params.is_frozen(idx) {
                continue;
            }
            let g = &grads.tensor(idx).data;
            let mt = &mut m.tensor_mut(idx).data;
            for (slot, &gi) in mt.iter_mut().zip(g) {
                *slot = b1 * *slot + (one - b1) * gi;
            }
            let vt = &mut v.tensor_mut(idx).data;
            for (slot, &gi) in vt.iter_mut().zip(g) {
                *slot = b2 * *slot + (one - b2) * gi * gi;
            }
            let mt = &m.tensor(idx).data;
            let vt = &v.tensor(idx).data;
            let p = &mut params.tensor_mut(idx).data;
            for i in 0..p.len() {
                let m_hat = mt[i] / correction1;
                let v_hat = vt[i] / correction2;
                p[i] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::TdnnConfig;

    #[test]
    fn zero_learning_rate_leaves_params_bit_identical() {
        let cfg = TdnnConfig::published_default();
        let mut params = Parameters::<f32>::init(&cfg, 5).unwrap();
        let reference = params.clone();
        let mut grads = params.zeros_like();
        for idx in 0..grads.len() {
            for (i, v) in grads.tensor_mut(idx).data.iter_mut().enumerate() {
                *v = ((i % 7) as f32 - 3.0) * 0.01;
            }
        }
        let mut opt = Adam::<f32>::new(0.0, 0.9, 0.999, 1e-8);
        for _ in 0..3 {
            opt.step(&mut params, &grads);
        }
        assert_eq!(params, reference);
    }

    #[test]
    fn gradient_descent_direction_on_first_step() {
        let cfg = TdnnConfig {
            frozen_blocks: 0,
            ..TdnnConfig::published_default()
        };
        let mut params = Parameters::<f64>::init(&cfg, 5).unwrap();
        let before = params.tensor(0).data[0];
        let mut grads = params.zeros_like();
        grads.tensor_mut(0).data[0] = 1.0;
        let mut opt = Adam::<f64>::new(1e-3, 0.9, 0.999, 1e-8);
        opt.step(&mut params, &grads);
        // First Adam step moves by ~lr against the gradient sign.
        let delta = params.tensor(0).data[0] - before;
        assert!(delta < 0.0 && (delta + 1e-3).abs() < 1e-5, "delta {delta}");
    }

    #[test]
    fn frozen_tensors_never_move() {
        let cfg = TdnnConfig::published_default(); // blocks 1-2 frozen
        let mut params = Parameters::<f32>::init(&cfg, 5).unwrap();
        let reference = params.clone();
        let mut grads = params.zeros_like();
        for idx in 0..grads.len() {
            for v in grads.tensor_mut(idx).data.iter_mut() {
                *v = 0.5;
            }
        }
        let mut opt = Adam::<f32>::new(1e-2, 0.9, 0.999, 1e-8);
        for _ in 0..10 {
            opt.step(&mut params, &grads);
        }
        for idx in 0..params.len() {
            if params.is_frozen(idx) {
                assert_eq!(params.tensor(idx), reference.tensor(idx));
            } else {
                assert_ne!(params.tensor(idx), reference.tensor(idx));
            }
        }
    }
}
