//! Consistency across module seams: the boundary series, the radial
//! continuation, the indicial algebra, and the time-domain solver are
//! written against the same operator, so quantities computed twice by
//! independent code paths have to agree.

use adswk_core::evolve::{run_forward, BoundaryClosure, CollarGrid, ForwardProblem};
use adswk_core::geometry::{indicial_roots, MetricModel, SpectralParam};
use adswk_core::modes::{
    build_radial_ode, eigenmodes_truncated, frobenius_expand, integrate_radial, Branch, ModeSpec,
    RadialSolution,
};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Cubic Hermite interpolant in l = ln x over the uniform sample grid of
/// a radial solution, using the stored logarithmic derivative as slope.
struct LogInterp {
    l0: f64,
    dl: f64,
    v: Vec<f64>,
    w: Vec<f64>,
}

impl LogInterp {
    fn new(sol: &RadialSolution) -> Self {
        let l0 = sol.xs.first().unwrap().ln();
        let l1 = sol.xs.last().unwrap().ln();
        let dl = (l1 - l0) / (sol.xs.len() - 1) as f64;
        let v = sol.v.iter().map(|c| c.re).collect();
        let w = sol.w.iter().map(|c| c.re).collect();
        LogInterp { l0, dl, v, w }
    }

    fn eval(&self, l: f64) -> f64 {
        let t = ((l - self.l0) / self.dl).max(0.0);
        let i = (t.floor() as usize).min(self.v.len() - 2);
        let s = t - i as f64;
        let (v0, v1) = (self.v[i], self.v[i + 1]);
        let (m0, m1) = (self.w[i] * self.dl, self.w[i + 1] * self.dl);
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        h00 * v0 + h10 * m0 + h01 * v1 + h11 * m1
    }
}

#[test]
fn radial_eigenmode_evolves_periodically() {
    // n = 6, lambda = 5 has no elementary closed form, so the standing
    // wave below is genuinely supplied by the mode machinery
    let model = MetricModel::flat_slab(6);
    let sp = SpectralParam::real(6, 5.0);
    let k = vec![0.0; 4];
    let roots = eigenmodes_truncated(&model, &sp, &k, (2.0, 5.0), 1.0).unwrap();
    assert!(!roots.is_empty(), "expected a truncated eigenmode in range");
    let sigma = roots[0];

    let ode = build_radial_ode(&model, &ModeSpec::new(sigma, k.clone()), &sp).unwrap();
    let series = frobenius_expand(&ode, Branch::Plus, 40).unwrap();
    let sol = integrate_radial(&ode, &series, 1.0).unwrap();
    assert!(
        sol.end_value().norm() < 1e-8 * sol.max_abs(),
        "eigenmode should vanish at the wall"
    );
    let interp = LogInterp::new(&sol);
    let mode = |x: f64| {
        if x <= sol.x_seed {
            series.eval_jet(x).0.re
        } else {
            interp.eval(x.ln())
        }
    };

    let grid = CollarGrid::new(6, 0.05, 191, 1, 0.0);
    let prob =
        ForwardProblem::new(grid, 5.0, BoundaryClosure::IndicialExtrapolation { order: 3 })
            .unwrap();
    // the two modules compute the decaying exponent independently
    let ind = indicial_roots(&sp);
    assert!((prob.s_plus() - ind.s_plus.re).abs() < 1e-12, "exponent mismatch");

    let g = &prob.grid;
    let u0: Vec<f64> = (0..g.nx).map(|i| mode(g.x(i))).collect();
    let v0 = vec![0.0; g.nx];
    let period = 2.0 * std::f64::consts::PI / sigma;
    let out = run_forward(&prob, &u0, &v0, None, period, 200, None).unwrap();
    let scale = u0.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    let err = (0..g.nx)
        .map(|i| (out.final_u[i] - u0[i]).abs())
        .fold(0.0f64, f64::max)
        / scale;
    assert!(err < 5e-3, "mode did not return after one period: {err}");
}

#[test]
fn series_leading_power_matches_the_indicial_root() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..40 {
        let n = rng.gen_range(3..=8usize);
        let sp = SpectralParam::real(n, rng.gen_range(-10.0..sp_bound(n) - 0.2));
        let sigma = rng.gen_range(0.1..5.0);
        let model = MetricModel::flat_slab(n);
        let ode = build_radial_ode(&model, &ModeSpec::new(sigma, vec![0.0; n - 2]), &sp).unwrap();
        let series = frobenius_expand(&ode, Branch::Plus, 40).unwrap();
        let s_plus = indicial_roots(&sp).s_plus.re;
        let x = 1e-3;
        let (v, w, _) = series.eval_jet(x);
        let lead = v.re / x.powf(s_plus);
        assert!(
            (lead - 1.0).abs() < 1e-5,
            "n = {n}: v(x) x^(-s+) = {lead} should be the unit head coefficient"
        );
        // logarithmic derivative tends to the exponent at the boundary
        let ratio = (w / v).re;
        assert!(
            (ratio - s_plus).abs() < 1e-4,
            "n = {n}: log-derivative {ratio} vs exponent {s_plus}"
        );
    }
}

fn sp_bound(n: usize) -> f64 {
    0.25 * ((n - 1) as f64).powi(2)
}

#[test]
fn truncated_spectrum_scales_with_the_wall() {
    // with no tangential wave vector the radial problem is scale
    // invariant, so halving the wall radius exactly doubles every
    // truncated eigenfrequency
    let model = MetricModel::flat_slab(6);
    let sp = SpectralParam::real(6, 5.0);
    let k = vec![0.0; 4];
    let full = eigenmodes_truncated(&model, &sp, &k, (2.0, 8.0), 1.0).unwrap();
    let half = eigenmodes_truncated(&model, &sp, &k, (4.0, 16.0), 0.5).unwrap();
    assert!(full.len() >= 2, "want at least two modes, got {full:?}");
    assert!(half.len() >= 2, "want at least two modes, got {half:?}");
    for (f, h) in full.iter().zip(&half) {
        assert!(
            (h - 2.0 * f).abs() < 1e-8 * h,
            "scaling violated: {h} vs 2 x {f}"
        );
    }
}
