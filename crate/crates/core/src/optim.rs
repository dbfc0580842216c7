//! Per-parameter adaptive step sizes from accumulated squared gradients.

#[derive(Debug, Clone)]
pub struct AdaGrad {
    learning_rate: f64,
    accum: Vec<f64>,
}

const EPS: f64 = 1e-8;

impl AdaGrad {
    pub fn new(learning_rate: f64, len: usize) -> Self {
        Self {
            learning_rate,
            accum: vec![0.0; len],
        }
    }

    /// Applies one step to `params` (which must match the construction length).
    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        debug_assert_eq!(params.len(), self.accum.len());
        debug_assert_eq!(grad.len(), self.accum.len());
        for ((w, g), acc) in params.iter_mut().zip(grad).zip(self.accum.iter_mut()) {
            if *g == 0.0 {
                continue;
            }
            *acc += g * g;
            *w -= self.learning_rate * g / (acc.sqrt() + EPS);
        }
    }
}
