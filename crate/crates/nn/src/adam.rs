use crate::model::ClassifierModel;
use crate::real::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Bias-corrected Adam with one moment pair per parameter tensor.
#[derive(Debug, Clone)]
pub struct Adam<T: Real = f32> {
    cfg: AdamConfig,
    step: i32,
    m: Vec<Vec<T>>,
    v: Vec<Vec<T>>,
}

impl<T: Real> Adam<T> {
    pub fn new(model: &ClassifierModel<T>, cfg: AdamConfig) -> Self {
        let zeros = || model.parameters().iter().map(|p| vec![T::zero(); p.len()]).collect();
        Self {
            cfg,
            step: 0,
            m: zeros(),
            v: zeros(),
        }
    }

    pub fn steps_taken(&self) -> i32 {
        self.step
    }

    /// One update from the gradients currently stored on `model`.
    pub fn step(&mut self, model: &mut ClassifierModel<T>) {
        self.step += 1;
        let c = self.cfg;
        let (b1, b2) = (T::from_f64(c.beta1), T::from_f64(c.beta2));
        let (one_b1, one_b2) = (T::one() - b1, T::one() - b2);
        let corr1 = T::from_f64(1.0 - c.beta1.powi(self.step));
        let corr2 = T::from_f64(1.0 - c.beta2.powi(self.step));
        let (lr, eps) = (T::from_f64(c.lr), T::from_f64(c.eps));
        for ((p, m), v) in model.parameters_mut().into_iter().zip(&mut self.m).zip(&mut self.v) {
            let (data, grad) = p.data_and_grad();
            for (((x, &g), m), v) in data.iter_mut().zip(grad).zip(m.iter_mut()).zip(v.iter_mut()) {
                *m = b1 * *m + one_b1 * g;
                *v = b2 * *v + one_b2 * g * g;
                let m_hat = *m / corr1;
                let v_hat = *v / corr2;
                *x -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_each_weight_by_lr() {
        // with bias correction the first step is lr * g/|g| (up to eps)
        let mut model = ClassifierModel::<f64>::new(0);
        let before = model.clone();
        for p in model.parameters_mut() {
            let (_, _) = p.data_and_grad();
            let g = p.grad_mut();
            for (i, v) in g.iter_mut().enumerate() {
                *v = if i % 2 == 0 { 0.3 } else { -2.0 };
            }
        }
        let mut adam = Adam::new(&model, AdamConfig::default());
        adam.step(&mut model);
        assert_eq!(adam.steps_taken(), 1);
        for (a, b) in model.parameters().iter().zip(before.parameters()) {
            for (i, (x, y)) in a.data().iter().zip(b.data()).enumerate() {
                let want = if i % 2 == 0 { -0.01 } else { 0.01 };
                assert!((x - y - want).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn zero_gradient_leaves_weights() {
        let mut model = ClassifierModel::<f32>::new(1);
        let before = model.clone();
        let mut adam = Adam::new(&model, AdamConfig::default());
        adam.step(&mut model);
        assert_eq!(model.parameters().map(|p| p.data().to_vec()), before.parameters().map(|p| p.data().to_vec()));
    }
}
