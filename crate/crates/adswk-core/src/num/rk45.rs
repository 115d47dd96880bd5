//! Adaptive Dormand-Prince 5(4) integration with a quartic dense-output
//! interpolant.
//!
//! Event localization in the tracer and the radial mode solver both need a
//! continuous representation of each accepted step, so the integrator hands
//! back [`DenseStep`] values instead of bare endpoints. The interpolant is
//! the standard continuous extension of the 5(4) pair (order 4 uniformly on
//! the step).

use thiserror::Error;

#[derive(Debug, Error)]
pub enum OdeError {
    #[error("step size underflow at s = {s} (h = {h:e})")]
    StepUnderflow { s: f64, h: f64 },
}

#[derive(Clone, Copy, Debug)]
pub struct StepControl {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
}

impl Default for StepControl {
    fn default() -> Self {
        StepControl { rel_tol: 1e-10, abs_tol: 1e-12, max_step: 0.1 }
    }
}

// Butcher tableau of the Dormand-Prince 5(4) pair.
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A2: [f64; 1] = [0.2];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0];
const A6: [f64; 5] = [
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
];
const A7: [f64; 6] =
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0];
// Difference between the 5th- and 4th-order weights (k2 weight is zero).
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
// Dense-output weights for the order-4 continuous extension.
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

/// One accepted step together with its interpolant. Valid on [s0, s1]
/// (mild extrapolation just outside is harmless and used by the event
/// projection).
#[derive(Clone, Debug)]
pub struct DenseStep {
    pub s0: f64,
    pub s1: f64,
    cont: [Vec<f64>; 5],
}

impl DenseStep {
    pub fn dim(&self) -> usize {
        self.cont[0].len()
    }

    pub fn h(&self) -> f64 {
        self.s1 - self.s0
    }

    fn theta(&self, s: f64) -> f64 {
        (s - self.s0) / (self.s1 - self.s0)
    }

    pub fn eval(&self, s: f64, out: &mut [f64]) {
        let th = self.theta(s);
        let th1 = 1.0 - th;
        let [c0, c1, c2, c3, c4] = &self.cont;
        for i in 0..out.len() {
            out[i] = c0[i] + th * (c1[i] + th1 * (c2[i] + th * (c3[i] + th1 * c4[i])));
        }
    }

    pub fn eval_component(&self, s: f64, i: usize) -> f64 {
        let th = self.theta(s);
        let th1 = 1.0 - th;
        let [c0, c1, c2, c3, c4] = &self.cont;
        c0[i] + th * (c1[i] + th1 * (c2[i] + th * (c3[i] + th1 * c4[i])))
    }

    /// d/ds of component `i` of the interpolant.
    pub fn eval_derivative(&self, s: f64, i: usize) -> f64 {
        let th = self.theta(s);
        let [_, c1, c2, c3, c4] = &self.cont;
        // P(th) = c0 + c1 th + c2 th(1-th) + c3 th^2(1-th) + c4 th^2(1-th)^2
        let dp = c1[i]
            + c2[i] * (1.0 - 2.0 * th)
            + c3[i] * th * (2.0 - 3.0 * th)
            + c4[i] * 2.0 * th * (1.0 - th) * (1.0 - 2.0 * th);
        dp / self.h()
    }

    pub fn start_state(&self) -> &[f64] {
        &self.cont[0]
    }

    pub fn end_state(&self, out: &mut [f64]) {
        for i in 0..out.len() {
            out[i] = self.cont[0][i] + self.cont[1][i];
        }
    }
}

/// Dormand-Prince stepper over a closure rhs(s, y, dy). Keeps the FSAL
/// derivative between steps.
pub struct DormandPrince<F> {
    f: F,
    ctrl: StepControl,
    pub s: f64,
    pub y: Vec<f64>,
    k: [Vec<f64>; 7],
    y_try: Vec<f64>,
    h: f64,
}

impl<F: FnMut(f64, &[f64], &mut [f64])> DormandPrince<F> {
    pub fn new(mut f: F, s0: f64, y0: &[f64], ctrl: StepControl) -> Self {
        let dim = y0.len();
        let mut k1 = vec![0.0; dim];
        f(s0, y0, &mut k1);
        let k = [
            k1,
            vec![0.0; dim],
            vec![0.0; dim],
            vec![0.0; dim],
            vec![0.0; dim],
            vec![0.0; dim],
            vec![0.0; dim],
        ];
        DormandPrince { f, ctrl, s: s0, y: y0.to_vec(), k, y_try: vec![0.0; dim], h: 0.0 }
    }

    pub fn rhs_now(&self) -> &[f64] {
        &self.k[0]
    }

    fn initial_step(&self, dir: f64) -> f64 {
        // crude but adequate: scale by the current derivative magnitude
        let dn = self.k[0].iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let yn = self.y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let h = if dn > 0.0 { (0.01 * (yn + 1.0) / dn).min(self.ctrl.max_step) } else { self.ctrl.max_step };
        dir * h.max(1e-10)
    }

    /// Take one accepted step toward `s_limit` (never past it). Returns the
    /// dense interpolant of the accepted step.
    pub fn step(&mut self, s_limit: f64) -> Result<DenseStep, OdeError> {
        let dim = self.y.len();
        let dir = (s_limit - self.s).signum();
        if self.h == 0.0 || self.h.signum() != dir {
            self.h = self.initial_step(dir);
        }
        let mut facmax = 5.0;
        loop {
            let mut h = self.h.clamp(-self.ctrl.max_step, self.ctrl.max_step);
            if (self.s + h - s_limit) * dir > 0.0 {
                h = s_limit - self.s;
            }
            if h.abs() < 1e-14 * self.s.abs().max(1.0) {
                return Err(OdeError::StepUnderflow { s: self.s, h });
            }

            let stage = |k: &[Vec<f64>; 7], a: &[f64], out: &mut Vec<f64>, y: &[f64]| {
                for i in 0..dim {
                    let mut acc = 0.0;
                    for (j, &aj) in a.iter().enumerate() {
                        acc += aj * k[j][i];
                    }
                    out[i] = y[i] + h * acc;
                }
            };

            let mut yt = std::mem::take(&mut self.y_try);
            stage(&self.k, &A2, &mut yt, &self.y);
            let mut k2 = std::mem::take(&mut self.k[1]);
            (self.f)(self.s + C[1] * h, &yt, &mut k2);
            self.k[1] = k2;
            stage(&self.k, &A3, &mut yt, &self.y);
            let mut k3 = std::mem::take(&mut self.k[2]);
            (self.f)(self.s + C[2] * h, &yt, &mut k3);
            self.k[2] = k3;
            stage(&self.k, &A4, &mut yt, &self.y);
            let mut k4 = std::mem::take(&mut self.k[3]);
            (self.f)(self.s + C[3] * h, &yt, &mut k4);
            self.k[3] = k4;
            stage(&self.k, &A5, &mut yt, &self.y);
            let mut k5 = std::mem::take(&mut self.k[4]);
            (self.f)(self.s + C[4] * h, &yt, &mut k5);
            self.k[4] = k5;
            stage(&self.k, &A6, &mut yt, &self.y);
            let mut k6 = std::mem::take(&mut self.k[5]);
            (self.f)(self.s + C[5] * h, &yt, &mut k6);
            self.k[5] = k6;
            // 5th-order solution (A7 row), also the FSAL evaluation point
            stage(&self.k, &A7, &mut yt, &self.y);
            let mut k7 = std::mem::take(&mut self.k[6]);
            (self.f)(self.s + h, &yt, &mut k7);
            self.k[6] = k7;

            let mut err = 0.0f64;
            for i in 0..dim {
                let mut e = 0.0;
                for j in 0..7 {
                    e += E[j] * self.k[j][i];
                }
                e *= h;
                let sc =
                    self.ctrl.abs_tol + self.ctrl.rel_tol * self.y[i].abs().max(yt[i].abs());
                err += (e / sc) * (e / sc);
            }
            err = (err / dim as f64).sqrt();

            let fac = if err > 0.0 { 0.9 * err.powf(-0.2) } else { facmax };
            if err <= 1.0 {
                // dense-output coefficients
                let mut c0 = vec![0.0; dim];
                let mut c1 = vec![0.0; dim];
                let mut c2 = vec![0.0; dim];
                let mut c3 = vec![0.0; dim];
                let mut c4 = vec![0.0; dim];
                for i in 0..dim {
                    let dy = yt[i] - self.y[i];
                    c0[i] = self.y[i];
                    c1[i] = dy;
                    c2[i] = h * self.k[0][i] - dy;
                    c3[i] = dy - h * self.k[6][i] - c2[i];
                    let mut d = 0.0;
                    for j in 0..7 {
                        d += D[j] * self.k[j][i];
                    }
                    c4[i] = h * d;
                }
                let dense = DenseStep { s0: self.s, s1: self.s + h, cont: [c0, c1, c2, c3, c4] };
                self.s += h;
                self.y.copy_from_slice(&yt);
                self.y_try = yt;
                self.k.swap(0, 6); // FSAL
                self.h = h * fac.clamp(0.2, facmax);
                return Ok(dense);
            }
            self.y_try = yt;
            self.h = h * fac.clamp(0.1, 0.9);
            facmax = 1.0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_with_dense_output() {
        let ctrl = StepControl { rel_tol: 1e-12, abs_tol: 1e-14, max_step: 0.5 };
        let mut ode = DormandPrince::new(|_, y, dy| dy[0] = y[0], 0.0, &[1.0], ctrl);
        let mut steps = Vec::new();
        while ode.s < 2.0 {
            steps.push(ode.step(2.0).expect("step"));
        }
        assert!((ode.y[0] - 2.0f64.exp()).abs() < 1e-10, "endpoint {}", ode.y[0]);
        // dense output probed inside every step
        for st in &steps {
            for frac in [0.25, 0.5, 0.75] {
                let s = st.s0 + frac * st.h();
                let v = st.eval_component(s, 0);
                assert!(
                    (v - s.exp()).abs() < 1e-9 * s.exp(),
                    "dense output off at s={s}: {v} vs {}",
                    s.exp()
                );
                let d = st.eval_derivative(s, 0);
                assert!((d - s.exp()).abs() < 1e-6 * s.exp(), "dense derivative off at s={s}");
            }
        }
    }

    #[test]
    fn harmonic_oscillator_energy_drift() {
        let ctrl = StepControl { rel_tol: 1e-11, abs_tol: 1e-13, max_step: 0.2 };
        let mut ode = DormandPrince::new(
            |_, y, dy| {
                dy[0] = y[1];
                dy[1] = -y[0];
            },
            0.0,
            &[1.0, 0.0],
            ctrl,
        );
        while ode.s < 50.0 {
            ode.step(50.0).expect("step");
        }
        let e = ode.y[0] * ode.y[0] + ode.y[1] * ode.y[1];
        assert!((e - 1.0).abs() < 1e-8, "energy drift {e}");
        assert!((ode.y[0] - 50.0f64.cos()).abs() < 1e-7, "phase error {}", ode.y[0]);
    }

    #[test]
    fn backward_integration() {
        let ctrl = StepControl::default();
        let mut ode = DormandPrince::new(|s, _, dy| dy[0] = s, 1.0, &[0.5], ctrl);
        while ode.s > 0.0 {
            ode.step(0.0).expect("step");
        }
        assert!(ode.y[0].abs() < 1e-10, "backward endpoint {}", ode.y[0]);
    }
}
