//! A-posteriori check that a traced path behaves like a broken
//! bicharacteristic in the compressed bundle.
//!
//! The defining property being tested: for suitable test functions f on the
//! compressed bundle, the forward difference quotients of f along the
//! compressed path dominate
//!
//! ```text
//! inf { H_p(pi^* f)(q) : q in the compression preimage of the point },
//! ```
//!
//! where the preimage of an interior point is the single covector the path
//! actually carries and the preimage of a boundary point consists of the
//! two normal-momentum branches xi = +-sqrt(zetab.B zetab). Reflections are
//! exactly the mechanism that makes this hold across boundary hits, so a
//! path whose momentum was not flipped fails the check on the test
//! function -xib.

use super::{CompressedSample, GBBPath, PathEventKind};
use crate::geometry::{MetricModel, NormalSign};
use crate::gbbflow::hamilton_field_jet;
use crate::geometry::MetricJet;
use std::sync::Arc;

/// Partials of a test function on the compressed bundle.
#[derive(Clone, Debug, Default)]
pub struct BGrad {
    pub fx: f64,
    pub fy: Vec<f64>,
    pub fxib: f64,
    pub fzetab: Vec<f64>,
}

impl BGrad {
    fn zeros(nb: usize) -> Self {
        BGrad { fx: 0.0, fy: vec![0.0; nb], fxib: 0.0, fzetab: vec![0.0; nb] }
    }
}

type BValueFn = Arc<dyn Fn(&CompressedSample) -> f64 + Send + Sync>;
type BGradFn = Arc<dyn Fn(&CompressedSample, &mut BGrad) + Send + Sync>;

/// Scalar test function on the compressed bundle with analytic partials.
#[derive(Clone)]
pub struct BTestFunction {
    pub name: String,
    value: BValueFn,
    grad: BGradFn,
}

impl BTestFunction {
    pub fn new(
        name: impl Into<String>,
        value: impl Fn(&CompressedSample) -> f64 + Send + Sync + 'static,
        grad: impl Fn(&CompressedSample, &mut BGrad) + Send + Sync + 'static,
    ) -> Self {
        BTestFunction { name: name.into(), value: Arc::new(value), grad: Arc::new(grad) }
    }

    pub fn value(&self, c: &CompressedSample) -> f64 {
        (self.value)(c)
    }

    pub fn grad(&self, c: &CompressedSample, out: &mut BGrad) {
        (self.grad)(c, out)
    }
}

/// The coordinate test functions: every base coordinate y (time first),
/// every tangential momentum, and the normal momentum with both signs.
/// Linear functions of the compressed coordinates, so the curvature slack
/// in the validator stays honest.
pub fn coordinate_basis(nb: usize) -> Vec<BTestFunction> {
    let mut v = Vec::new();
    for j in 0..nb {
        let name = if j == 0 { "t".to_string() } else { format!("y{}", j + 1) };
        v.push(BTestFunction::new(
            name,
            move |c: &CompressedSample| c.y[j],
            move |_, g: &mut BGrad| {
                g.fx = 0.0;
                g.fy.fill(0.0);
                g.fxib = 0.0;
                g.fzetab.fill(0.0);
                g.fy[j] = 1.0;
            },
        ));
    }
    for j in 0..nb {
        v.push(BTestFunction::new(
            format!("zetab{}", j + 1),
            move |c: &CompressedSample| c.zetab[j],
            move |_, g: &mut BGrad| {
                g.fx = 0.0;
                g.fy.fill(0.0);
                g.fxib = 0.0;
                g.fzetab.fill(0.0);
                g.fzetab[j] = 1.0;
            },
        ));
    }
    for sign in [1.0, -1.0] {
        v.push(BTestFunction::new(
            if sign > 0.0 { "+xib" } else { "-xib" },
            move |c: &CompressedSample| sign * c.xib,
            move |_, g: &mut BGrad| {
                g.fx = 0.0;
                g.fy.fill(0.0);
                g.fxib = sign;
                g.fzetab.fill(0.0);
            },
        ));
    }
    v
}

#[derive(Clone, Copy, Debug)]
pub struct ValidationOptions {
    /// absolute tolerance on the (slack-adjusted) margin
    pub tol: f64,
    /// samples per difference window (quotients span up to max_window - 1
    /// sampling intervals)
    pub max_window: usize,
    /// cap on the second-derivative estimate entering the slack; windows
    /// with larger apparent curvature are effectively unchecked and should
    /// be refined via sample_ds instead
    pub curv_cap: f64,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        ValidationOptions { tol: 1e-6, max_window: 5, curv_cap: 1e3 }
    }
}

#[derive(Clone, Debug)]
pub struct FunctionReport {
    pub name: String,
    pub windows_checked: usize,
    /// min over windows of (quotient - inf), before slack
    pub min_margin: f64,
    /// min over windows of (quotient - inf + slack); pass iff >= -tol
    pub min_effective_margin: f64,
    /// window realizing the minimum effective margin
    pub worst_window: (f64, f64),
    pub pass: bool,
}

#[derive(Clone, Debug)]
pub struct ValidationReport {
    pub functions: Vec<FunctionReport>,
    pub windows_excluded: usize,
    pub samples: usize,
    pub tol: f64,
    pub pass: bool,
}

impl ValidationReport {
    pub fn worst(&self) -> Option<&FunctionReport> {
        self.functions.iter().min_by(|a, b| {
            a.min_effective_margin.partial_cmp(&b.min_effective_margin).unwrap()
        })
    }
}

/// H_p(pi^* f) at the covector (x, y, xi, zeta), where f lives on the
/// compressed bundle. Chain rule through the compression:
///   d(pi^* f)/dx = f_x + xi f_xib, d/dxi = x f_xib, the rest unchanged.
fn hp_pullback(
    model: &MetricModel,
    state: &[f64],
    g: &BGrad,
    jet: &mut MetricJet,
    field: &mut [f64],
) -> f64 {
    let n = model.n;
    hamilton_field_jet(model, state, field, jet);
    let (x, xi) = (state[0], state[n]);
    let mut h = field[0] * (g.fx + xi * g.fxib) + field[n] * (x * g.fxib);
    for j in 0..n - 1 {
        h += field[1 + j] * g.fy[j] + field[n + 1 + j] * g.fzetab[j];
    }
    h
}

/// inf of H_p(pi^* f) over the compression preimage of the sample within
/// the characteristic set.
fn preimage_inf(
    model: &MetricModel,
    c: &CompressedSample,
    g: &BGrad,
    jet: &mut MetricJet,
    field: &mut [f64],
    state: &mut Vec<f64>,
) -> f64 {
    state.clear();
    if c.x > 0.0 {
        state.push(c.x);
        state.extend_from_slice(&c.y);
        state.push(c.xib / c.x);
        state.extend_from_slice(&c.zetab);
        return hp_pullback(model, state, g, jet, field);
    }
    // boundary point: both normal branches (they coincide when glancing)
    let mut best = f64::INFINITY;
    for sign in [NormalSign::Plus, NormalSign::Minus] {
        let h = model.b_form(0.0, &c.y, &c.zetab).max(0.0);
        let xi = match sign {
            NormalSign::Plus => h.sqrt(),
            NormalSign::Minus => -h.sqrt(),
        };
        state.clear();
        state.push(0.0);
        state.extend_from_slice(&c.y);
        state.push(xi);
        state.extend_from_slice(&c.zetab);
        best = best.min(hp_pullback(model, state, g, jet, field));
    }
    best
}

/// Difference-quotient check of the defining inequality over all sample
/// windows of up to `max_window` samples. Windows straddling a wall kink
/// (an artifact of WallBehavior::Reflect, not boundary geometry) are
/// excluded.
pub fn validate_gbb(
    model: &MetricModel,
    path: &GBBPath,
    funcs: &[BTestFunction],
    opts: &ValidationOptions,
) -> ValidationReport {
    let samples = path.compressed_samples();
    let kinks = path.wall_kink_params();
    let nsamp = samples.len();
    let nf = funcs.len();
    let nb = model.nb();

    // precompute f values and preimage infima
    let mut fvals = vec![vec![0.0; nsamp]; nf];
    let mut finfs = vec![vec![0.0; nsamp]; nf];
    let mut g = BGrad::zeros(nb);
    let mut jet = MetricJet::default();
    let mut field = vec![0.0; 2 * model.n];
    let mut stbuf: Vec<f64> = Vec::with_capacity(2 * model.n);
    for (fi, f) in funcs.iter().enumerate() {
        for (k, c) in samples.iter().enumerate() {
            fvals[fi][k] = f.value(c);
            f.grad(c, &mut g);
            finfs[fi][k] = preimage_inf(model, c, &g, &mut jet, &mut field, &mut stbuf);
        }
    }

    // the deduped sample at a kink carries the post-flip state, so a kink at
    // the right endpoint contaminates the window while one at the left does not
    let straddles_kink = |a: f64, b: f64| {
        kinks.iter().any(|&k| k > a + 1e-12 && k < b + 1e-12)
    };

    // second divided differences, skipping stencils that cross a kink
    let curv_at = |f: &[f64], k: usize| -> Option<f64> {
        if k == 0 || k + 1 >= nsamp {
            return None;
        }
        let (sa, sb, sc) = (samples[k - 1].s, samples[k].s, samples[k + 1].s);
        if straddles_kink(sa, sc) {
            return None;
        }
        let d1 = (f[k] - f[k - 1]) / (sb - sa);
        let d2 = (f[k + 1] - f[k]) / (sc - sb);
        Some(2.0 * ((d2 - d1) / (sc - sa)).abs())
    };

    let mut excluded = 0usize;
    let mut reports = Vec::with_capacity(nf);
    for (fi, f) in funcs.iter().enumerate() {
        let mut checked = 0usize;
        let mut min_margin = f64::INFINITY;
        let mut min_eff = f64::INFINITY;
        let mut worst = (path.span.0, path.span.0);
        for i in 0..nsamp {
            for w in 1..opts.max_window {
                let j = i + w;
                if j >= nsamp {
                    break;
                }
                let (si, sj) = (samples[i].s, samples[j].s);
                let ds = sj - si;
                if ds <= 1e-14 {
                    continue;
                }
                if straddles_kink(si, sj) {
                    if fi == 0 {
                        excluded += 1;
                    }
                    continue;
                }
                let q = (fvals[fi][j] - fvals[fi][i]) / ds;
                let inf_w =
                    (i..=j).map(|k| finfs[fi][k]).fold(f64::INFINITY, f64::min);
                let mut curv = 0.0f64;
                for k in i..=j {
                    if let Some(c) = curv_at(&fvals[fi], k) {
                        curv = curv.max(c);
                    }
                }
                let slack = curv.min(opts.curv_cap) * ds;
                let margin = q - inf_w;
                let eff = margin + slack;
                checked += 1;
                min_margin = min_margin.min(margin);
                if eff < min_eff {
                    min_eff = eff;
                    worst = (si, sj);
                }
            }
        }
        reports.push(FunctionReport {
            name: f.name.clone(),
            windows_checked: checked,
            min_margin,
            min_effective_margin: min_eff,
            worst_window: worst,
            pass: min_eff >= -opts.tol,
        });
    }
    let pass = reports.iter().all(|r| r.pass);
    ValidationReport { functions: reports, windows_excluded: excluded, samples: nsamp, tol: opts.tol, pass }
}

/// Control path for the validator: keep the sampled positions but undo the
/// momentum flip after the first hyperbolic event. The result is not a
/// broken bicharacteristic and the -xib test function must flag it.
pub fn no_flip_mutant(path: &GBBPath) -> GBBPath {
    let mut mutant = path.clone();
    let first = path.events.iter().position(|e| e.kind == PathEventKind::Hyperbolic);
    if let Some(j) = first {
        let n = path.n;
        for seg in mutant.segments.iter_mut().skip(j + 1) {
            for st in seg.states.iter_mut() {
                st[n] = -st[n];
            }
        }
        for ev in mutant.events.iter_mut().skip(j + 1) {
            ev.xi_in = -ev.xi_in;
            ev.xi_out = -ev.xi_out;
        }
    }
    mutant
}

#[derive(Clone, Debug)]
pub struct MonotonicityReport {
    /// the time coordinate along the path is strictly monotone
    pub t_strictly_monotone: bool,
    pub t_increasing: bool,
    pub min_abs_dt_ds: f64,
    pub hyperbolic_events: usize,
    /// at every hyperbolic event the compressed normal momentum changes
    /// sign from positive to negative (checked from the stored samples)
    pub xi_crossings_ok: bool,
}

/// Diagnostics a genuine broken bicharacteristic of these models satisfies:
/// strict monotonicity of t, and the downward sign change of xib at every
/// reflection.
pub fn monotonicity_report(path: &GBBPath) -> MonotonicityReport {
    let samples = path.compressed_samples();
    let mut increasing = 0usize;
    let mut decreasing = 0usize;
    let mut min_rate = f64::INFINITY;
    for w in samples.windows(2) {
        let dt = w[1].y[0] - w[0].y[0];
        let ds = w[1].s - w[0].s;
        if ds <= 0.0 {
            continue;
        }
        if dt > 0.0 {
            increasing += 1;
        } else if dt < 0.0 {
            decreasing += 1;
        }
        min_rate = min_rate.min((dt / ds).abs());
    }
    let monotone = increasing == 0 || decreasing == 0;

    let mut events = 0usize;
    let mut crossings_ok = true;
    for ev in &path.events {
        if ev.kind != PathEventKind::Hyperbolic {
            continue;
        }
        events += 1;
        // nearest samples strictly before and after the event
        let before = samples.iter().rev().find(|c| c.s < ev.s - 1e-12 && c.x > 0.0);
        let after = samples.iter().find(|c| c.s > ev.s + 1e-12 && c.x > 0.0);
        match (before, after) {
            (Some(b), Some(a)) => {
                if !(b.xib > 0.0 && a.xib < 0.0) {
                    crossings_ok = false;
                }
            }
            // an event at the very end of the span has no after-sample
            (Some(b), None) => {
                if b.xib <= 0.0 {
                    crossings_ok = false;
                }
            }
            _ => crossings_ok = false,
        }
    }

    MonotonicityReport {
        t_strictly_monotone: monotone,
        t_increasing: decreasing == 0,
        min_abs_dt_ds: min_rate,
        hyperbolic_events: events,
        xi_crossings_ok: crossings_ok,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{CotangentPoint, MetricModel};
    use crate::gbbflow::{trace_gbb, IntegratorConfig, WallBehavior};

    fn flat_path() -> (MetricModel, GBBPath) {
        let m = MetricModel::flat_slab(3);
        let start = CotangentPoint { x: 1.0, y: vec![0.0, 0.0], xi: 1.0, zeta: vec![1.0, 0.0] };
        let cfg = IntegratorConfig { x_max: 2.0, ..IntegratorConfig::default() };
        let path = trace_gbb(&m, &start, (0.0, 1.5), &cfg).expect("trace");
        (m, path)
    }

    #[test]
    fn flat_reflection_passes_the_coordinate_basis() {
        let (m, path) = flat_path();
        let basis = coordinate_basis(2);
        let rep = validate_gbb(&m, &path, &basis, &ValidationOptions::default());
        assert!(rep.pass, "worst: {:?}", rep.worst());
        // every margin is tight for the flat slab: the quotients equal the
        // infima up to integration error
        for f in &rep.functions {
            assert!(
                f.min_margin > -1e-8,
                "{}: margin {} should be near zero",
                f.name,
                f.min_margin
            );
            assert!(f.windows_checked > 100, "{} barely checked", f.name);
        }
    }

    #[test]
    fn mutant_without_reflection_is_flagged_by_minus_xib() {
        let (m, path) = flat_path();
        let mutant = no_flip_mutant(&path);
        let basis = coordinate_basis(2);
        let rep = validate_gbb(&m, &mutant, &basis, &ValidationOptions::default());
        assert!(!rep.pass, "mutant must fail");
        let bad = rep.functions.iter().find(|f| f.name == "-xib").unwrap();
        assert!(
            bad.min_effective_margin < -3.0,
            "-xib margin {} should be around -4",
            bad.min_effective_margin
        );
        // the coordinate functions do not see the flip
        let t = rep.functions.iter().find(|f| f.name == "t").unwrap();
        assert!(t.pass, "t stays valid on the mutant");
    }

    #[test]
    fn wall_kink_windows_are_excluded_not_failed() {
        let m = MetricModel::flat_slab(3);
        let start = CotangentPoint { x: 1.0, y: vec![0.0, 0.0], xi: 1.0, zeta: vec![1.0, 0.0] };
        let cfg = IntegratorConfig {
            x_max: 1.0,
            wall: WallBehavior::Reflect,
            ..IntegratorConfig::default()
        };
        let path = trace_gbb(&m, &start, (0.0, 3.0), &cfg).expect("trace");
        assert!(!path.wall_kink_params().is_empty());
        let basis = coordinate_basis(2);
        let rep = validate_gbb(&m, &path, &basis, &ValidationOptions::default());
        assert!(rep.pass, "wall bounces must not fail validation: {:?}", rep.worst());
        assert!(rep.windows_excluded > 0, "kink windows were excluded");
    }

    #[test]
    fn monotonicity_of_time_and_xi_crossing() {
        let (_, path) = flat_path();
        let rep = monotonicity_report(&path);
        assert!(rep.t_strictly_monotone && rep.t_increasing);
        assert!((rep.min_abs_dt_ds - 2.0).abs() < 1e-9, "dt/ds = 2 Btt tau = 2");
        assert_eq!(rep.hyperbolic_events, 1);
        assert!(rep.xi_crossings_ok);

        let mutant = no_flip_mutant(&path);
        let rep = monotonicity_report(&mutant);
        assert!(!rep.xi_crossings_ok, "mutant keeps xib positive after the hit");
    }
}
