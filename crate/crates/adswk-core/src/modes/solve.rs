//! Continuation of boundary series solutions into the interior, asymptotic
//! decomposition of arbitrary radial solutions, and derived connection
//! data (scattering coefficient, truncated eigenmodes).

use super::frobenius::{frobenius_expand, Branch, FrobeniusSeries};
use super::{ModeSpec, ModesError, RadialODE};
use crate::geometry::{MetricModel, SpectralParam};
use crate::num::rk45::{DormandPrince, StepControl};
use num_complex::Complex64;

/// Radial solution sampled uniformly in ln(x) from the seed point to the
/// outer evaluation point. `w` is the logarithmic derivative D v = x v'.
#[derive(Clone, Debug)]
pub struct RadialSolution {
    pub xs: Vec<f64>,
    pub v: Vec<Complex64>,
    pub w: Vec<Complex64>,
    pub x_seed: f64,
}

impl RadialSolution {
    pub fn end_value(&self) -> Complex64 {
        *self.v.last().expect("solution has samples")
    }

    pub fn max_abs(&self) -> f64 {
        self.v.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

const N_SAMPLES: usize = 400;
const SEED_TAIL: f64 = 1e-13;

/// Integrate the series solution from a seed point near the boundary out to
/// `x_end`, in the variable l = ln x where the operator reads
/// a2 v'' + a1 v' + a0 v = 0 (primes are d/dl). The seed point is moved
/// toward the boundary until the series truncation error is negligible.
pub fn integrate_radial(
    ode: &RadialODE,
    f: &FrobeniusSeries,
    x_end: f64,
) -> Result<RadialSolution, ModesError> {
    assert!(x_end > 0.0, "outer evaluation point must be positive");
    let mut x_seed = 0.2f64.min(0.5 * x_end);
    while f.tail_estimate(x_seed) > SEED_TAIL {
        x_seed *= 0.5;
        if x_seed < 1e-4 {
            return Err(ModesError::SeedFailure { x_seed });
        }
    }

    // a2 must stay elliptic on the integration range
    for i in 0..=200 {
        let x = x_seed + (x_end - x_seed) * i as f64 / 200.0;
        let a2 = ode.a2_at(x);
        if a2.abs() < 1e-8 {
            return Err(ModesError::CoefficientDegenerate { x, a2 });
        }
    }

    let (v0, w0, _) = f.eval_jet(x_seed);
    let y0 = [v0.re, v0.im, w0.re, w0.im];
    let rhs = |l: f64, y: &[f64], dy: &mut [f64]| {
        let x = l.exp();
        let a2 = ode.a2_at(x);
        let a1 = ode.a1_at(x);
        let a0 = ode.a0_at(x);
        let v = Complex64::new(y[0], y[1]);
        let w = Complex64::new(y[2], y[3]);
        let wp = -(a1 * w + a0 * v) / a2;
        dy[0] = y[2];
        dy[1] = y[3];
        dy[2] = wp.re;
        dy[3] = wp.im;
    };
    let ctrl = StepControl { rel_tol: 1e-12, abs_tol: 1e-14, max_step: 0.1 };
    let (l0, l1) = (x_seed.ln(), x_end.ln());
    let mut ode_int = DormandPrince::new(rhs, l0, &y0, ctrl);

    let mut xs = Vec::with_capacity(N_SAMPLES);
    let mut vv = Vec::with_capacity(N_SAMPLES);
    let mut ww = Vec::with_capacity(N_SAMPLES);
    let ls: Vec<f64> =
        (0..N_SAMPLES).map(|i| l0 + (l1 - l0) * i as f64 / (N_SAMPLES - 1) as f64).collect();
    xs.push(x_seed);
    vv.push(v0);
    ww.push(w0);
    let mut next = 1usize;
    let mut buf = [0.0; 4];
    while ode_int.s < l1 {
        let dense = ode_int
            .step(l1)
            .map_err(|e| ModesError::Integration(format!("{e}")))?;
        while next < N_SAMPLES && ls[next] <= dense.s1 + 1e-13 {
            dense.eval(ls[next].min(dense.s1), &mut buf);
            xs.push(ls[next].exp());
            vv.push(Complex64::new(buf[0], buf[1]));
            ww.push(Complex64::new(buf[2], buf[3]));
            next += 1;
        }
    }
    // make the final sample exactly the endpoint state
    if let Some(last) = vv.last_mut() {
        *last = Complex64::new(ode_int.y[0], ode_int.y[1]);
    }
    if let Some(last) = ww.last_mut() {
        *last = Complex64::new(ode_int.y[2], ode_int.y[3]);
    }
    if let Some(last) = xs.last_mut() {
        *last = x_end;
    }
    Ok(RadialSolution { xs, v: vv, w: ww, x_seed })
}

/// Decomposition of a radial solution near the boundary into the two
/// indicial branches.
#[derive(Clone, Debug)]
pub struct AsymptoticFit {
    pub c_minus: Complex64,
    pub c_plus: Complex64,
    /// coefficient of ln(x) x^{s_plus} in the fitted solution
    pub log_coeff: Complex64,
    /// conditioning of the 2-column least-squares system
    pub cond: f64,
    pub residual_rel: f64,
}

/// Least-squares fit of `sol` against the two boundary series on the
/// sample window [window.0, window.1]. Refuses spectral parameters above
/// the threshold: there the two branches have identical modulus x^{(n-1)/2}
/// and oscillate, so no asymptotic decomposition is defined.
pub fn fit_asymptotics(
    ode: &RadialODE,
    sol: &RadialSolution,
    window: (f64, f64),
) -> Result<AsymptoticFit, ModesError> {
    let ind = ode.indicial();
    if !ind.real_case {
        return Err(ModesError::IllPosedAboveBound { lambda: ode.lambda });
    }
    let minus = frobenius_expand(ode, Branch::Minus, 40)?;
    let plus = frobenius_expand(ode, Branch::Plus, 40)?;
    if minus.tail_estimate(window.1).max(plus.tail_estimate(window.1)) > 1e-8 {
        return Err(ModesError::FitFailure(format!(
            "window reaches x = {} where the boundary series are not converged",
            window.1
        )));
    }

    let mut g11 = 0.0f64;
    let mut g22 = 0.0f64;
    let mut g12 = Complex64::ZERO;
    let mut r1 = Complex64::ZERO;
    let mut r2 = Complex64::ZERO;
    let mut count = 0usize;
    for (i, &x) in sol.xs.iter().enumerate() {
        if x < window.0 || x > window.1 {
            continue;
        }
        let fm = minus.eval(x);
        let fp = plus.eval(x);
        let v = sol.v[i];
        g11 += fm.norm_sqr();
        g22 += fp.norm_sqr();
        g12 += fm.conj() * fp;
        r1 += fm.conj() * v;
        r2 += fp.conj() * v;
        count += 1;
    }
    if count < 8 {
        return Err(ModesError::FitFailure(format!(
            "only {count} samples inside the fit window [{}, {}]",
            window.0, window.1
        )));
    }
    let det = g11 * g22 - g12.norm_sqr();
    if det <= 0.0 {
        return Err(ModesError::FitFailure("degenerate normal equations".into()));
    }
    let c_minus = (r1 * g22 - g12 * r2) / det;
    let c_plus = (r2 * g11 - g12.conj() * r1) / det;

    let tr = g11 + g22;
    let disc = (tr * tr - 4.0 * det).max(0.0).sqrt();
    let (emax, emin) = ((tr + disc) / 2.0, (tr - disc) / 2.0);
    let cond = (emax / emin.max(1e-300)).sqrt();

    let mut num = 0.0f64;
    let mut den = 0.0f64;
    for (i, &x) in sol.xs.iter().enumerate() {
        if x < window.0 || x > window.1 {
            continue;
        }
        let model = c_minus * minus.eval(x) + c_plus * plus.eval(x);
        num += (sol.v[i] - model).norm_sqr();
        den += sol.v[i].norm_sqr();
    }
    let residual_rel = (num / den.max(1e-300)).sqrt();
    Ok(AsymptoticFit {
        c_minus,
        c_plus,
        log_coeff: c_minus * minus.log_factor,
        cond,
        residual_rel,
    })
}

/// Connection coefficient of the boundary problem against a Dirichlet
/// condition at x = x_bc: the multiple of the plus branch carried by the
/// solution that starts on the minus branch and vanishes at x_bc.
#[derive(Clone, Debug)]
pub struct ScatteringData {
    /// -V_minus(x_bc) / V_plus(x_bc); None exactly when resonant
    pub dtn: Option<Complex64>,
    /// the plus branch itself nearly vanishes at x_bc (interior eigenvalue)
    pub resonant: bool,
    pub minus_end: Complex64,
    pub plus_end: Complex64,
    pub plus_max: f64,
}

pub fn scattering_coefficient(ode: &RadialODE, x_bc: f64) -> Result<ScatteringData, ModesError> {
    let minus = frobenius_expand(ode, Branch::Minus, 40)?;
    let plus = frobenius_expand(ode, Branch::Plus, 40)?;
    let sol_m = integrate_radial(ode, &minus, x_bc)?;
    let sol_p = integrate_radial(ode, &plus, x_bc)?;
    let vm = sol_m.end_value();
    let vp = sol_p.end_value();
    let plus_max = sol_p.max_abs();
    let resonant = vp.norm() <= 1e-9 * plus_max;
    let dtn = if resonant { None } else { Some(-vm / vp) };
    Ok(ScatteringData { dtn, resonant, minus_end: vm, plus_end: vp, plus_max })
}

/// Frequencies in `omega_range` (torus wave vector fixed) whose plus-branch
/// solution vanishes at x_bc: the spectrum of the problem truncated by a
/// Dirichlet wall. Scan plus bisection on sign changes of V_plus(x_bc).
pub fn eigenmodes_truncated(
    model: &MetricModel,
    sp: &SpectralParam,
    k: &[f64],
    omega_range: (f64, f64),
    x_bc: f64,
) -> Result<Vec<f64>, ModesError> {
    let ind = crate::geometry::indicial_roots(sp);
    if !ind.real_case {
        return Err(ModesError::IllPosedAboveBound { lambda: sp.lambda });
    }
    let value = |omega: f64| -> Result<f64, ModesError> {
        let ode = super::build_radial_ode(model, &ModeSpec::new(omega, k.to_vec()), sp)?;
        let plus = frobenius_expand(&ode, Branch::Plus, 40)?;
        let sol = integrate_radial(&ode, &plus, x_bc)?;
        let v = sol.end_value();
        debug_assert!(v.im.abs() <= 1e-9 * v.norm().max(1.0), "real problem, real solution");
        Ok(v.re)
    };

    let step = 0.15;
    let mut roots = Vec::new();
    let mut a = omega_range.0;
    let mut fa = value(a)?;
    while a < omega_range.1 {
        let b = (a + step).min(omega_range.1);
        let fb = value(b)?;
        if fa == 0.0 {
            roots.push(a);
        } else if fa * fb < 0.0 {
            // bisection to machine-level bracket width
            let (mut lo, mut hi, mut flo) = (a, b, fa);
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                let fm = value(mid)?;
                if fm == 0.0 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if (fm > 0.0) == (flo > 0.0) {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
                if hi - lo < 1e-11 * hi.abs().max(1.0) {
                    break;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
        a = b;
        fa = fb;
        if b >= omega_range.1 {
            break;
        }
    }
    Ok(roots)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::MetricModel;
    use crate::modes::build_radial_ode;

    fn flat_ode(n: usize, lambda: f64, sigma: f64) -> RadialODE {
        let m = MetricModel::flat_slab(n);
        let k = vec![0.0; n - 2];
        build_radial_ode(&m, &ModeSpec::new(sigma, k), &SpectralParam::real(n, lambda)).unwrap()
    }

    #[test]
    fn plus_branch_continues_to_x_sin_x_over_sigma() {
        for sigma in [0.7, 3.3, 11.0] {
            let ode = flat_ode(4, 2.0, sigma);
            let plus = frobenius_expand(&ode, Branch::Plus, 40).unwrap();
            let sol = integrate_radial(&ode, &plus, 1.0).unwrap();
            for (i, &x) in sol.xs.iter().enumerate() {
                let want = x * (sigma * x).sin() / sigma;
                let got = sol.v[i].re;
                assert!(
                    (got - want).abs() <= 1e-9 * want.abs().max(0.1),
                    "sigma {sigma}, x {x}: {got} vs {want}"
                );
                assert!(sol.v[i].im.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn seed_adapts_for_high_frequency() {
        // at sigma = 18 the 40-term series already converges at 0.2
        let ode = flat_ode(4, 2.0, 18.0);
        let plus = frobenius_expand(&ode, Branch::Plus, 40).unwrap();
        let sol = integrate_radial(&ode, &plus, 1.0).unwrap();
        assert!((sol.x_seed - 0.2).abs() < 1e-14, "no halving needed at 18");
        let want = (18.0f64).sin() / 18.0;
        assert!((sol.end_value().re - want).abs() < 1e-9);

        // at sigma = 120 the tail test forces the seed inward
        let ode = flat_ode(4, 2.0, 120.0);
        let plus = frobenius_expand(&ode, Branch::Plus, 40).unwrap();
        let sol = integrate_radial(&ode, &plus, 1.0).unwrap();
        assert!(sol.x_seed < 0.11, "seed halved, got {}", sol.x_seed);
        let x = *sol.xs.last().unwrap();
        assert!((x - 1.0).abs() < 1e-14);
        let want = (120.0f64).sin() / 120.0;
        assert!((sol.end_value().re - want).abs() < 1e-7);
    }

    #[test]
    fn fit_recovers_a_known_combination() {
        let ode = flat_ode(4, 2.0, 1.0);
        let minus = frobenius_expand(&ode, Branch::Minus, 40).unwrap();
        let plus = frobenius_expand(&ode, Branch::Plus, 40).unwrap();
        // build a solution equal to 2 V- - 3 V+ by seeding with that combo
        let x0 = 0.05;
        let (vm, wm, _) = minus.eval_jet(x0);
        let (vp, wp, _) = plus.eval_jet(x0);
        let v0 = 2.0 * vm - 3.0 * vp;
        let w0 = 2.0 * wm - 3.0 * wp;
        let rhs = |l: f64, y: &[f64], dy: &mut [f64]| {
            let x: f64 = l.exp();
            let a2 = ode.a2_at(x);
            let a1 = ode.a1_at(x);
            let a0 = ode.a0_at(x);
            let v = Complex64::new(y[0], y[1]);
            let w = Complex64::new(y[2], y[3]);
            let wp = -(a1 * w + a0 * v) / a2;
            dy[0] = y[2];
            dy[1] = y[3];
            dy[2] = wp.re;
            dy[3] = wp.im;
        };
        let ctrl = StepControl { rel_tol: 1e-12, abs_tol: 1e-14, max_step: 0.05 };
        let mut ode_int =
            DormandPrince::new(rhs, x0.ln(), &[v0.re, v0.im, w0.re, w0.im], ctrl);
        let mut xs = vec![x0];
        let mut vv = vec![v0];
        while ode_int.s < 0.0 {
            ode_int.step(0.0).unwrap();
            xs.push(ode_int.s.exp());
            vv.push(Complex64::new(ode_int.y[0], ode_int.y[1]));
        }
        let ww = vec![Complex64::ZERO; xs.len()];
        let sol = RadialSolution { xs, v: vv, w: ww, x_seed: x0 };
        let fit = fit_asymptotics(&ode, &sol, (0.05, 0.35)).unwrap();
        assert!((fit.c_minus - Complex64::new(2.0, 0.0)).norm() < 1e-8, "{:?}", fit);
        assert!((fit.c_plus - Complex64::new(-3.0, 0.0)).norm() < 1e-7, "{:?}", fit);
        assert!(fit.cond < 1e4, "cond {}", fit.cond);
        assert!(fit.residual_rel < 1e-10);
        assert_eq!(fit.log_coeff, Complex64::ZERO, "no log branch here");
    }

    #[test]
    fn fit_refuses_above_the_bound() {
        let ode = flat_ode(4, 3.25, 1.0);
        let plus = frobenius_expand(&ode, Branch::Plus, 40).unwrap();
        let sol = integrate_radial(&ode, &plus, 1.0).unwrap();
        let err = fit_asymptotics(&ode, &sol, (0.05, 0.35)).unwrap_err();
        assert!(matches!(err, ModesError::IllPosedAboveBound { .. }), "{err}");
    }

    #[test]
    fn scattering_matches_the_closed_form() {
        // n = 4, lambda = 2: dtn(sigma) = -sigma cot(sigma)
        let ode = flat_ode(4, 2.0, 1.0);
        let sc = scattering_coefficient(&ode, 1.0).unwrap();
        assert!(!sc.resonant);
        let got = sc.dtn.unwrap();
        let want = -1.0 / 1.0f64.tan();
        assert!((got.re - want).abs() < 1e-10, "{got} vs {want}");
        assert!(got.im.abs() < 1e-12);

        // evanescent tangential data: sigma^2 = -1, dtn = -coth(1)
        let m = MetricModel::flat_slab(4);
        let ode = build_radial_ode(
            &m,
            &ModeSpec::new(0.0, vec![1.0, 0.0]),
            &SpectralParam::real(4, 2.0),
        )
        .unwrap();
        assert!((ode.q_at(0.5) + 1.0).abs() < 1e-14);
        let sc = scattering_coefficient(&ode, 1.0).unwrap();
        let want = -1.0 / 1.0f64.tanh();
        assert!((sc.dtn.unwrap().re - want).abs() < 1e-10);

        // sigma -> 0: the quotient tends to -1
        let ode = flat_ode(4, 2.0, 1e-4);
        let sc = scattering_coefficient(&ode, 1.0).unwrap();
        assert!((sc.dtn.unwrap().re + 1.0).abs() < 1e-7);
    }

    #[test]
    fn resonance_at_sigma_pi() {
        let ode = flat_ode(4, 2.0, std::f64::consts::PI);
        let sc = scattering_coefficient(&ode, 1.0).unwrap();
        assert!(sc.resonant, "plus branch vanishes at the wall: {:?}", sc.plus_end);
        assert!(sc.dtn.is_none());
    }

    #[test]
    fn truncated_spectrum_is_multiples_of_pi() {
        let m = MetricModel::flat_slab(4);
        let sp = SpectralParam::real(4, 2.0);
        let roots =
            eigenmodes_truncated(&m, &sp, &[0.0, 0.0], (0.5, 10.0), 1.0).unwrap();
        assert_eq!(roots.len(), 3, "pi, 2pi, 3pi in range: {roots:?}");
        for (i, r) in roots.iter().enumerate() {
            let want = std::f64::consts::PI * (i + 1) as f64;
            assert!((r - want).abs() < 1e-9, "root {i}: {r} vs {want}");
        }
    }
}
