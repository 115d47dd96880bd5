//! Series solutions of the radial operator at the boundary x = 0.
//!
//! With a2(0) = 1 and a1(0) = -(n-1) the indicial polynomial is
//! I(z) = z^2 - (n-1)z + lambda with roots s- <= s+ (real below the
//! threshold). The plus branch is never resonant: I(s+ + k) = k(k + Delta)
//! with Delta = s+ - s- of nonnegative real part. The minus branch needs a
//! logarithm whenever Delta is a nonnegative integer and the obstruction at
//! order Delta does not vanish; the double root always carries one.

use super::{ModesError, RadialODE};
use num_complex::Complex64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Branch {
    Plus,
    Minus,
}

/// Generalized power series x^s sum_k c_k x^k, optionally plus
/// ln(x) x^{s_log} sum_k l_k x^k. The log ladder coefficients already
/// include the connection factor, so evaluation is a plain sum.
#[derive(Clone, Debug)]
pub struct FrobeniusSeries {
    pub s: Complex64,
    pub coeffs: Vec<Complex64>,
    pub s_log: Complex64,
    pub log_coeffs: Vec<Complex64>,
    /// factor multiplying the plus branch inside the log term; zero when no
    /// logarithm is present (including accidental non-resonance)
    pub log_factor: Complex64,
}

impl FrobeniusSeries {
    pub fn has_log(&self) -> bool {
        self.log_factor.norm() > 0.0
    }

    /// Value together with the first two D = x d/dx derivatives at x > 0.
    pub fn eval_jet(&self, x: f64) -> (Complex64, Complex64, Complex64) {
        assert!(x > 0.0, "series evaluation needs x > 0");
        let lx = x.ln();
        let xs = (self.s * lx).exp();
        let (mut v, mut d1, mut d2) = (Complex64::ZERO, Complex64::ZERO, Complex64::ZERO);
        let mut xk = Complex64::new(1.0, 0.0);
        for (k, &c) in self.coeffs.iter().enumerate() {
            let e = self.s + k as f64;
            let t = c * xk;
            v += t;
            d1 += t * e;
            d2 += t * e * e;
            xk *= x;
        }
        v *= xs;
        d1 *= xs;
        d2 *= xs;
        if !self.log_coeffs.is_empty() {
            let xsl = (self.s_log * lx).exp();
            let mut xk = Complex64::new(1.0, 0.0);
            for (k, &c) in self.log_coeffs.iter().enumerate() {
                let e = self.s_log + k as f64;
                let t = c * xk * xsl;
                // D(ln x * x^e) = x^e + e ln x x^e
                v += t * lx;
                d1 += t * (Complex64::ONE + e * lx);
                d2 += t * (2.0 * e + e * e * lx);
                xk *= x;
            }
        }
        (v, d1, d2)
    }

    pub fn eval(&self, x: f64) -> Complex64 {
        self.eval_jet(x).0
    }

    /// Relative size of the last few retained terms at x; the truncation
    /// error estimate used to pick integration seed points.
    pub fn tail_estimate(&self, x: f64) -> f64 {
        let kmax = self.coeffs.len();
        if kmax < 6 {
            return f64::INFINITY;
        }
        let mut tail = 0.0f64;
        for k in kmax - 4..kmax {
            let mut t = self.coeffs[k].norm() * x.powi(k as i32);
            if let Some(&l) = self.log_coeffs.get(k) {
                t += l.norm() * x.powi(k as i32) * x.ln().abs();
            }
            tail += t;
        }
        let scale = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| c.norm() * x.powi(k as i32))
            .fold(0.0, f64::max)
            .max(1e-300);
        tail / scale
    }

    /// Crude lower estimate of the convergence radius from the decay of the
    /// retained coefficients.
    pub fn radius_estimate(&self) -> f64 {
        let mut best = f64::INFINITY;
        for (k, c) in self.coeffs.iter().enumerate().skip(self.coeffs.len() / 2) {
            let a = c.norm();
            if a > 0.0 {
                best = best.min(a.powf(-1.0 / k as f64));
            }
        }
        best
    }
}

/// Expand the chosen branch to `k_max` coefficients. See the module docs
/// for the resonance handling on the minus branch.
pub fn frobenius_expand(
    ode: &RadialODE,
    branch: Branch,
    k_max: usize,
) -> Result<FrobeniusSeries, ModesError> {
    let ind = ode.indicial();
    let nm1 = (ode.n - 1) as f64;
    let ii = |z: Complex64| z * z - nm1 * z + ode.lambda;

    // full coefficient series including the constant terms
    let a2 = &ode.a2;
    let a1 = &ode.a1;
    let g = |m: usize| -> f64 {
        if m >= 2 {
            ode.q.get(m - 2).copied().unwrap_or(0.0)
        } else {
            0.0
        }
    };

    let resonant_minus = branch == Branch::Minus && ind.log_case;
    let s = match branch {
        Branch::Plus => ind.s_plus,
        Branch::Minus => ind.s_minus,
    };

    // F_k(s; c) = sum_{m=1..k} (a2_m (s+k-m)^2 + a1_m (s+k-m) + g_m) c_{k-m}
    let f_k = |s: Complex64, k: usize, c: &[Complex64]| -> Complex64 {
        let mut acc = Complex64::ZERO;
        for m in 1..=k {
            let a2m = a2.get(m).copied().unwrap_or(0.0);
            let a1m = a1.get(m).copied().unwrap_or(0.0);
            let gm = g(m);
            if a2m == 0.0 && a1m == 0.0 && gm == 0.0 {
                continue;
            }
            let e = s + (k - m) as f64;
            acc += (e * e * a2m + e * a1m + gm) * c[k - m];
        }
        acc
    };

    if !resonant_minus {
        let mut c = vec![Complex64::ZERO; k_max + 1];
        c[0] = Complex64::ONE;
        for k in 1..=k_max {
            let denom = ii(s + k as f64);
            if denom.norm() < 1e-9 {
                return Err(ModesError::NearResonance { k });
            }
            c[k] = -f_k(s, k, &c) / denom;
        }
        return Ok(FrobeniusSeries {
            s,
            coeffs: c,
            s_log: s,
            log_coeffs: Vec::new(),
            log_factor: Complex64::ZERO,
        });
    }

    // resonant minus branch: may need  c * ln(x) * (plus series)
    let plus = frobenius_expand(ode, Branch::Plus, k_max)?;
    let b = &plus.coeffs;
    let kstar = ind.integer_gap();
    // (2 a2 x d/dx + a1) applied to the plus series, order s+ + j
    let ladder = |j: usize| -> Complex64 {
        let mut acc = Complex64::ZERO;
        for m in 0..=j {
            let a2m = a2.get(m).copied().unwrap_or(0.0);
            let a1m = a1.get(m).copied().unwrap_or(0.0);
            if a2m == 0.0 && a1m == 0.0 {
                continue;
            }
            let e = ind.s_plus + (j - m) as f64;
            acc += (2.0 * e * a2m + a1m) * b[j - m];
        }
        acc
    };

    let mut c = vec![Complex64::ZERO; k_max + 1];
    let log_factor;
    if kstar == 0 {
        // double root: the second solution is ln(x) V_+ + x^s (correction)
        log_factor = Complex64::ONE;
        c[0] = Complex64::ZERO;
        for k in 1..=k_max {
            let denom = Complex64::new((k * k) as f64, 0.0);
            c[k] = -(f_k(s, k, &c) + ladder(k)) / denom;
        }
    } else {
        c[0] = Complex64::ONE;
        for k in 1..kstar {
            let denom = ii(s + k as f64);
            c[k] = -f_k(s, k, &c) / denom;
        }
        // solvability at the resonant order fixes the log coupling;
        // the resonant coefficient itself is a free gauge, set to zero
        log_factor = -f_k(s, kstar, &c) / (kstar as f64);
        c[kstar] = Complex64::ZERO;
        for k in kstar + 1..=k_max {
            let denom = ii(s + k as f64);
            c[k] = -(f_k(s, k, &c) + log_factor * ladder(k - kstar)) / denom;
        }
    }

    let log_coeffs = if log_factor.norm() == 0.0 {
        Vec::new()
    } else {
        b.iter().map(|&bk| log_factor * bk).collect()
    };
    Ok(FrobeniusSeries { s, coeffs: c, s_log: ind.s_plus, log_coeffs, log_factor })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{MetricModel, SpectralParam};
    use crate::modes::{build_radial_ode, ModeSpec};
    use crate::num::special::bessel_j;
    use num_complex::Complex64;

    const K: usize = 40;

    fn flat_ode(n: usize, lambda: f64, sigma: f64) -> RadialODE {
        let m = MetricModel::flat_slab(n);
        let k = vec![0.0; n - 2];
        build_radial_ode(&m, &ModeSpec::new(sigma, k), &SpectralParam::real(n, lambda)).unwrap()
    }

    fn residual_small(ode: &RadialODE, f: &FrobeniusSeries, xs: &[f64]) {
        for &x in xs {
            let (v, d1, d2) = f.eval_jet(x);
            let r = ode.apply(x, v, d1, d2);
            let scale = v.norm().max(d2.norm()).max(1.0);
            assert!(r.norm() <= 1e-12 * scale, "residual {r} at x = {x} (scale {scale})");
        }
    }

    #[test]
    fn plus_branch_is_x_sin_x() {
        let ode = flat_ode(4, 2.0, 1.0);
        let f = frobenius_expand(&ode, Branch::Plus, K).unwrap();
        assert_eq!(f.s.re, 2.0);
        assert!(!f.has_log());
        // x sin x = x^2 (1 - x^2/6 + x^4/120 - ...)
        assert!((f.coeffs[0].re - 1.0).abs() < 1e-15);
        assert!((f.coeffs[2].re + 1.0 / 6.0).abs() < 1e-15);
        assert!((f.coeffs[4].re - 1.0 / 120.0).abs() < 1e-15);
        assert!(f.coeffs[1].norm() + f.coeffs[3].norm() < 1e-15, "odd orders vanish");
        for x in [0.3f64, 0.9] {
            let want = x * x.sin();
            assert!((f.eval(x).re - want).abs() < 1e-14, "value at {x}");
        }
        residual_small(&ode, &f, &[0.2, 0.5, 0.9]);
    }

    #[test]
    fn minus_branch_is_x_cos_x_without_log() {
        let ode = flat_ode(4, 2.0, 1.0);
        let f = frobenius_expand(&ode, Branch::Minus, K).unwrap();
        assert_eq!(f.s.re, 1.0);
        // integer gap 1, yet the obstruction vanishes: no logarithm
        assert!(!f.has_log(), "accidental non-resonance");
        assert!((f.coeffs[0].re - 1.0).abs() < 1e-15);
        assert!(f.coeffs[1].norm() < 1e-15, "resonant order gauged to zero");
        assert!((f.coeffs[2].re + 0.5).abs() < 1e-15);
        assert!((f.coeffs[4].re - 1.0 / 24.0).abs() < 1e-15);
        for x in [0.3f64, 0.9] {
            let want = x * x.cos();
            assert!((f.eval(x).re - want).abs() < 1e-14, "value at {x}");
        }
        residual_small(&ode, &f, &[0.2, 0.5, 0.9]);
    }

    #[test]
    fn gap_three_without_log_matches_trig_form() {
        // roots 0 and 3: the minus solution is cos x + x sin x
        let ode = flat_ode(4, 0.0, 1.0);
        let f = frobenius_expand(&ode, Branch::Minus, K).unwrap();
        assert!(!f.has_log());
        assert!((f.coeffs[2].re - 0.5).abs() < 1e-15);
        assert!((f.coeffs[4].re + 0.125).abs() < 1e-15);
        for x in [0.4f64, 1.1] {
            let want = x.cos() + x * x.sin();
            assert!((f.eval(x).re - want).abs() < 5e-14, "value at {x}");
        }
        residual_small(&ode, &f, &[0.3, 0.8]);
    }

    #[test]
    fn genuine_log_case_integer_order() {
        // n = 3, lambda = 0: roots 0 and 2, Bessel order 1; the second
        // solution carries ln(x) with coupling -sigma^2 / 2
        let ode = flat_ode(3, 0.0, 1.0);
        let f = frobenius_expand(&ode, Branch::Minus, K).unwrap();
        assert!(f.has_log());
        assert!((f.log_factor.re + 0.5).abs() < 1e-15, "coupling {}", f.log_factor);
        assert!(f.log_factor.im.abs() < 1e-15);
        residual_small(&ode, &f, &[0.2, 0.5, 0.9]);
        // the plus branch is 2 x J_1(x) for sigma = 1 (a0-normalized)
        let p = frobenius_expand(&ode, Branch::Plus, K).unwrap();
        for x in [0.3f64, 0.8] {
            let want = 2.0 * x * bessel_j(1.0, x);
            assert!((p.eval(x).re - want).abs() < 1e-12, "Bessel check at {x}");
        }
    }

    #[test]
    fn double_root_carries_unit_log() {
        let ode = flat_ode(4, 2.25, 1.0);
        let f = frobenius_expand(&ode, Branch::Minus, K).unwrap();
        assert!(f.has_log());
        assert_eq!(f.log_factor, Complex64::ONE);
        assert_eq!(f.coeffs[0], Complex64::ZERO);
        residual_small(&ode, &f, &[0.2, 0.5, 0.9]);
        let p = frobenius_expand(&ode, Branch::Plus, K).unwrap();
        residual_small(&ode, &p, &[0.2, 0.5, 0.9]);
    }

    #[test]
    fn complex_roots_above_bound_still_expand() {
        let ode = flat_ode(4, 3.25, 1.0);
        let f = frobenius_expand(&ode, Branch::Plus, K).unwrap();
        assert!(f.s.im != 0.0);
        assert!(!f.has_log());
        residual_small(&ode, &f, &[0.2, 0.5, 0.9]);
    }

    #[test]
    fn radius_estimate_is_order_one_for_entire_solutions()
    {
        let ode = flat_ode(4, 2.0, 1.0);
        let f = frobenius_expand(&ode, Branch::Plus, K).unwrap();
        assert!(f.radius_estimate() > 3.0, "sin series has huge numerical radius");
        assert!(f.tail_estimate(0.2) < 1e-13, "tail tiny at the seed point");
    }
}
