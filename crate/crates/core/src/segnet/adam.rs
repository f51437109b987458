use crate::error::{Error, Result};
use crate::tensor::Scalar;

/// Bias-corrected Adam over a list of parameter arrays.
#[derive(Clone, Debug)]
pub struct AdamState<T = f32> {
    pub t: u64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<Vec<T>>,
    v: Vec<Vec<T>>,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(params: &[Vec<T>], lr: f64) -> Self {
        Self {
            t: 0,
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: params.iter().map(|p| vec![T::zero(); p.len()]).collect(),
            v: params.iter().map(|p| vec![T::zero(); p.len()]).collect(),
        }
    }

    pub fn step(&mut self, params: &mut [Vec<T>], grads: &[Vec<T>]) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::shape(
                "adam_step",
                self.m.len(),
                format!("{} params / {} grads", params.len(), grads.len()),
            ));
        }
        for (i, (p, g)) in params.iter().zip(grads).enumerate() {
            if p.len() != self.m[i].len() || g.len() != self.m[i].len() {
                return Err(Error::shape("adam_step", self.m[i].len(), format!("{} / {}", p.len(), g.len())));
            }
            if let Some(j) = g.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("gradient of parameter {i} at element {j}")));
            }
        }
        self.t += 1;
        let b1 = T::of_f64(self.beta1);
        let b2 = T::of_f64(self.beta2);
        let one = T::one();
        let c1 = T::of_f64(1.0 - self.beta1.powi(self.t as i32));
        let c2 = T::of_f64(1.0 - self.beta2.powi(self.t as i32));
        let lr = T::of_f64(self.lr);
        let eps = T::of_f64(self.eps);
        for ((p, g), (m, v)) in params.iter_mut().zip(grads).zip(self.m.iter_mut().zip(self.v.iter_mut())) {
            for (((p, &g), m), v) in p.iter_mut().zip(g).zip(m.iter_mut()).zip(v.iter_mut()) {
                *m = b1 * *m + (one - b1) * g;
                *v = b2 * *v + (one - b2) * g * g;
                let m_hat = *m / c1;
                let v_hat = *v / c2;
                *p -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_first_step_is_noop() {
        let mut p = vec![vec![1.0f64, -2.0]];
        let mut adam = AdamState::new(&p, 0.01);
        adam.step(&mut p, &[vec![0.0, 0.0]]).unwrap();
        assert_eq!(p, vec![vec![1.0, -2.0]]);
        assert_eq!(adam.t, 1);
    }

    #[test]
    fn first_step_moves_by_lr_times_sign() {
        let mut p = vec![vec![0.0f64; 4]];
        let mut adam = AdamState::new(&p, 0.01);
        adam.step(&mut p, &[vec![1e-3, -5.0, 250.0, -1e-2]]).unwrap();
        for (v, s) in p[0].iter().zip([-1.0, 1.0, -1.0, 1.0]) {
            assert!((v - 0.01 * s).abs() < 1e-6, "{v}");
        }
    }

    #[test]
    fn non_finite_gradient_rejected() {
        let mut p = vec![vec![0.0f32]];
        let mut adam = AdamState::new(&p, 0.01);
        assert!(matches!(adam.step(&mut p, &[vec![f32::NAN]]), Err(Error::NonFinite(_))));
        assert_eq!(adam.t, 0);
    }

    #[test]
    fn quadratic_trajectory_matches_reference() {
        // f(x, y) = 3x² + 0.5y², straight-line Adam written out by hand.
        let grad = |x: f64, y: f64| (6.0 * x, y);
        let mut params = vec![vec![1.0f64], vec![-2.0]];
        let mut adam = AdamState::new(&params, 0.01);
        let (mut x, mut y) = (1.0f64, -2.0f64);
        let (mut mx, mut my, mut vx, mut vy) = (0.0, 0.0, 0.0, 0.0);
        for t in 1..=10 {
            let g = grad(params[0][0], params[1][0]);
            adam.step(&mut params, &[vec![g.0], vec![g.1]]).unwrap();

            let (gx, gy) = grad(x, y);
            mx = 0.9 * mx + 0.1 * gx;
            my = 0.9 * my + 0.1 * gy;
            vx = 0.999 * vx + 0.001 * gx * gx;
            vy = 0.999 * vy + 0.001 * gy * gy;
            let bc1 = 1.0 - 0.9f64.powi(t);
            let bc2 = 1.0 - 0.999f64.powi(t);
            x -= 0.01 * (mx / bc1) / ((vx / bc2).sqrt() + 1e-8);
            y -= 0.01 * (my / bc1) / ((vy / bc2).sqrt() + 1e-8);
        }
        assert!((params[0][0] - x).abs() < 1e-6);
        assert!((params[1][0] - y).abs() < 1e-6);
    }
}
