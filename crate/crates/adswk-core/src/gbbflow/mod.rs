//! Broken bicharacteristic flow: interior Hamilton flow of the metric
//! function, boundary reflection, and event-resolved tracing.
//!
//! Paths are integrated in the ordinary cotangent coordinates
//! [x, y_1..y_{n-1}, xi, zeta_1..zeta_{n-1}] (state dimension 2n) and stored
//! both raw and, on demand, compressed. A trace alternates smooth interior
//! segments with boundary events: each downward crossing of x = 0 is located
//! to machine precision, classified as hyperbolic or glancing from the
//! normalized normal momentum, and continued with the sign of xi flipped.
//! In compressed coordinates (xib = x xi) this continuation is continuous
//! and the concatenated samples form one curve.

pub mod validate;

use crate::geometry::{CotangentPoint, MetricJet, MetricModel};
use crate::num::rk45::{DormandPrince, OdeError, StepControl};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GbbError {
    #[error("span must be increasing, got ({0}, {1})")]
    BadSpan(f64, f64),
    #[error("start point is invalid: {0}")]
    BadStart(String),
    #[error("event budget of {max_events} exhausted at s = {s}")]
    MaxEventsExceeded { max_events: usize, s: f64 },
}

/// What happens when a trajectory reaches the outer edge x = x_max of the
/// collar.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WallBehavior {
    /// stop the trace and record a domain-exit event
    Exit,
    /// flip xi and keep going; not part of the boundary flow structure, so
    /// the kink is recorded on the segment rather than as an event
    Reflect,
}

#[derive(Clone, Copy, Debug)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    /// spacing of the uniformly sampled dense output stored on segments
    pub sample_ds: f64,
    /// x threshold whose downward crossing triggers boundary-event search
    pub x_event_tol: f64,
    /// |xi| / |zeta| at or below which a boundary hit counts as glancing
    pub glancing_tol: f64,
    pub max_events: usize,
    pub x_max: f64,
    pub wall: WallBehavior,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_step: 0.05,
            sample_ds: 0.01,
            x_event_tol: 1e-9,
            glancing_tol: 1e-7,
            max_events: 64,
            x_max: 1.0,
            wall: WallBehavior::Exit,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PathEventKind {
    /// transversal boundary hit, xi flipped
    Hyperbolic,
    /// tangential hit (|xi| below glancing_tol relative to |zeta|); the
    /// flow is continued on the interior-pointing branch
    Glancing,
    /// trajectory left through x = x_max under WallBehavior::Exit
    DomainExit,
    /// step-size underflow or loss of the conserved metric value
    Breakdown,
}

#[derive(Clone, Debug)]
pub struct PathEvent {
    pub s: f64,
    pub kind: PathEventKind,
    pub x: f64,
    pub y: Vec<f64>,
    pub zeta: Vec<f64>,
    pub xi_in: f64,
    pub xi_out: f64,
    /// xi / |zeta| at the event (meaningful for boundary hits)
    pub normalized_xi: f64,
    pub note: Option<String>,
}

/// One smooth piece of a trace: uniform dense-output samples plus exact
/// endpoint states. Wall reflections under WallBehavior::Reflect do not end
/// a segment; their parameter values are listed in `wall_kinks` so that
/// consumers can avoid differencing across them.
#[derive(Clone, Debug, Default)]
pub struct Segment {
    pub s: Vec<f64>,
    /// raw states [x, y.., xi, zeta..], one per entry of `s`
    pub states: Vec<Vec<f64>>,
    pub wall_kinks: Vec<f64>,
}

impl Segment {
    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }
}

#[derive(Clone, Debug)]
pub struct GBBPath {
    pub n: usize,
    pub span: (f64, f64),
    /// segments[i] ends at events[i]; a final event of kind DomainExit or
    /// Breakdown terminates the path early, otherwise the last segment runs
    /// to the end of the span
    pub segments: Vec<Segment>,
    pub events: Vec<PathEvent>,
    pub config: IntegratorConfig,
}

/// Compressed-bundle sample of a path: xib = x xi, zetab = zeta.
#[derive(Clone, Debug)]
pub struct CompressedSample {
    pub s: f64,
    pub x: f64,
    pub y: Vec<f64>,
    pub xib: f64,
    pub zetab: Vec<f64>,
}

impl GBBPath {
    /// Concatenated compressed samples. Segment junctions contribute one
    /// sample (the two raw states there differ only in the sign of xi, and
    /// x = 0 makes their compressions equal); the post-event state is kept.
    pub fn compressed_samples(&self) -> Vec<CompressedSample> {
        let n = self.n;
        let mut out: Vec<CompressedSample> = Vec::new();
        for seg in &self.segments {
            for (k, st) in seg.states.iter().enumerate() {
                let s = seg.s[k];
                if let Some(last) = out.last() {
                    if (s - last.s).abs() <= 1e-13 * s.abs().max(1.0) {
                        out.pop();
                    }
                }
                out.push(CompressedSample {
                    s,
                    x: st[0],
                    y: st[1..n].to_vec(),
                    xib: st[0] * st[n],
                    zetab: st[n + 1..].to_vec(),
                });
            }
        }
        out
    }

    /// Raw state sample closest below or at parameter s (linear scan; paths
    /// are short).
    pub fn raw_samples(&self) -> impl Iterator<Item = (f64, &[f64])> {
        self.segments.iter().flat_map(|seg| {
            seg.s.iter().copied().zip(seg.states.iter().map(|v| v.as_slice()))
        })
    }

    pub fn wall_kink_params(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.segments.iter().flat_map(|s| s.wall_kinks.iter().copied()).collect();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v
    }

    pub fn boundary_event_count(&self) -> usize {
        self.events
            .iter()
            .filter(|e| matches!(e.kind, PathEventKind::Hyperbolic | PathEventKind::Glancing))
            .count()
    }
}

/// Hamilton vector field of p(x, y, xi, zeta) = Ghat((xi,zeta),(xi,zeta)):
///
///   dx/ds   = 2 (A xi + C.zeta)
///   dy_i/ds = 2 (C_i xi + (B zeta)_i)
///   dxi/ds  = -(dA/dx xi^2 + 2 dC/dx.zeta xi + zeta.dB/dx zeta)
///   dzeta_k = -(d/dy_k of the same quadratic form)
pub fn hamilton_field(model: &MetricModel, state: &[f64], out: &mut [f64]) {
    let mut jet = MetricJet::default();
    hamilton_field_jet(model, state, out, &mut jet);
}

/// Same as [`hamilton_field`] with a caller-provided coefficient workspace,
/// for hot loops.
pub fn hamilton_field_jet(model: &MetricModel, state: &[f64], out: &mut [f64], jet: &mut MetricJet) {
    let n = model.n;
    let nb = n - 1;
    let (x, y, xi, zeta) = (state[0], &state[1..n], state[n], &state[n + 1..]);
    model.jet(x, y, jet);

    let mut cdotz = 0.0;
    for j in 0..nb {
        cdotz += jet.c[j] * zeta[j];
    }
    out[0] = 2.0 * (jet.a * xi + cdotz);
    for i in 0..nb {
        let mut bz = 0.0;
        for j in 0..nb {
            bz += jet.b[i * nb + j] * zeta[j];
        }
        out[1 + i] = 2.0 * (jet.c[i] * xi + bz);
    }
    // momentum equations: -(partial of p in the k-th base coordinate)
    for k in 0..n {
        let mut dp = jet.da[k] * xi * xi;
        for j in 0..nb {
            dp += 2.0 * jet.dc[j * n + k] * xi * zeta[j];
        }
        for i in 0..nb {
            for j in 0..nb {
                dp += jet.db[(i * nb + j) * n + k] * zeta[i] * zeta[j];
            }
        }
        out[if k == 0 { n } else { n + k }] = -dp;
    }
}

/// Reflection at the boundary: flip the normal momentum. Defined on x = 0,
/// where it preserves the metric function (the cross terms C vanish there).
pub fn reflect(q: &CotangentPoint) -> CotangentPoint {
    assert!(q.x == 0.0, "reflection is defined on the boundary only");
    CotangentPoint { x: 0.0, y: q.y.clone(), xi: -q.xi, zeta: q.zeta.clone() }
}

/// Continuation at a glancing hit. The normal momentum is at most
/// glancing_tol in size; the sign flip picks the interior-pointing branch
/// of the residual motion and is within the event tolerance of the
/// identity, so glancing rays that genuinely glide stay on the boundary.
pub fn continue_glancing(q: &CotangentPoint) -> CotangentPoint {
    reflect(q)
}

fn state_of(q: &CotangentPoint, n: usize) -> Vec<f64> {
    let mut st = Vec::with_capacity(2 * n);
    st.push(q.x);
    st.extend_from_slice(&q.y);
    st.push(q.xi);
    st.extend_from_slice(&q.zeta);
    st
}

fn point_of(state: &[f64], n: usize) -> CotangentPoint {
    CotangentPoint {
        x: state[0],
        y: state[1..n].to_vec(),
        xi: state[n],
        zeta: state[n + 1..].to_vec(),
    }
}

fn metric_value(model: &MetricModel, state: &[f64]) -> f64 {
    let n = model.n;
    let q = point_of(state, n);
    crate::geometry::metric_function(model, &q)
}

enum SegmentFate {
    SpanEnd,
    Boundary { s: f64, state: Vec<f64> },
    Wall { s: f64, state: Vec<f64> },
    Breakdown { s: f64, state: Vec<f64>, note: String },
}

/// Integrate one smooth segment from (s0, start) until the end of the span,
/// a boundary hit, the outer wall, or breakdown. Returns the sampled
/// segment and the event ending it (None exactly when the span ran out).
/// Boundary events already carry the continued (sign-flipped) momentum in
/// `xi_out`.
pub fn integrate_segment(
    model: &MetricModel,
    s0: f64,
    start: &CotangentPoint,
    s_end: f64,
    cfg: &IntegratorConfig,
) -> Result<(Segment, Option<PathEvent>), GbbError> {
    let n = model.n;
    check_start(model, start)?;
    if !(s_end > s0) {
        return Err(GbbError::BadSpan(s0, s_end));
    }

    let mut seg = Segment::default();
    push_sample(&mut seg, s0, state_of(start, n), cfg);
    let mut next_sample = s0 + cfg.sample_ds;

    let mut cur_s = s0;
    let mut cur_state = state_of(start, n);
    let mut armed_boundary = false;
    let mut armed_wall = false;

    loop {
        let fate = run_smooth(
            model,
            cur_s,
            &cur_state,
            s_end,
            cfg,
            &mut seg,
            &mut next_sample,
            &mut armed_boundary,
            &mut armed_wall,
        );
        match fate {
            SegmentFate::SpanEnd => return Ok((seg, None)),
            SegmentFate::Breakdown { s, state, note } => {
                let q = point_of(&state, n);
                let ev = PathEvent {
                    s,
                    kind: PathEventKind::Breakdown,
                    x: q.x,
                    y: q.y,
                    zeta: q.zeta,
                    xi_in: q.xi,
                    xi_out: q.xi,
                    normalized_xi: normalized_xi(&state, n),
                    note: Some(note),
                };
                return Ok((seg, Some(ev)));
            }
            SegmentFate::Wall { s, mut state } => match cfg.wall {
                WallBehavior::Exit => {
                    push_sample(&mut seg, s, state.clone(), cfg);
                    let q = point_of(&state, n);
                    let ev = PathEvent {
                        s,
                        kind: PathEventKind::DomainExit,
                        x: q.x,
                        y: q.y,
                        zeta: q.zeta,
                        xi_in: q.xi,
                        xi_out: q.xi,
                        normalized_xi: normalized_xi(&state, n),
                        note: None,
                    };
                    return Ok((seg, Some(ev)));
                }
                WallBehavior::Reflect => {
                    state[n] = -state[n];
                    seg.wall_kinks.push(s);
                    push_sample(&mut seg, s, state.clone(), cfg);
                    cur_s = s;
                    cur_state = state;
                    armed_wall = false;
                    if cur_s >= s_end {
                        return Ok((seg, None));
                    }
                }
            },
            SegmentFate::Boundary { s, state } => {
                push_sample(&mut seg, s, state.clone(), cfg);
                let nxi = normalized_xi(&state, n);
                let kind = if nxi.abs() <= cfg.glancing_tol {
                    PathEventKind::Glancing
                } else {
                    PathEventKind::Hyperbolic
                };
                let q = point_of(&state, n);
                let ev = PathEvent {
                    s,
                    kind,
                    x: 0.0,
                    y: q.y,
                    zeta: q.zeta,
                    xi_in: q.xi,
                    xi_out: -q.xi,
                    normalized_xi: nxi,
                    note: None,
                };
                return Ok((seg, Some(ev)));
            }
        }
    }
}

fn normalized_xi(state: &[f64], n: usize) -> f64 {
    let xi = state[n];
    let zn: f64 = state[n + 1..].iter().map(|z| z * z).sum::<f64>().sqrt();
    xi / zn.max(1e-300)
}

fn check_start(model: &MetricModel, q: &CotangentPoint) -> Result<(), GbbError> {
    let nb = model.n - 1;
    if q.y.len() != nb || q.zeta.len() != nb {
        return Err(GbbError::BadStart(format!(
            "expected {nb} tangential components, got y: {}, zeta: {}",
            q.y.len(),
            q.zeta.len()
        )));
    }
    if q.x < 0.0 {
        return Err(GbbError::BadStart(format!("x = {} < 0", q.x)));
    }
    let finite = q.x.is_finite()
        && q.xi.is_finite()
        && q.y.iter().all(|v| v.is_finite())
        && q.zeta.iter().all(|v| v.is_finite());
    if !finite {
        return Err(GbbError::BadStart("non-finite component".into()));
    }
    Ok(())
}

fn push_sample(seg: &mut Segment, s: f64, state: Vec<f64>, _cfg: &IntegratorConfig) {
    if let Some(&last) = seg.s.last() {
        if (s - last).abs() <= 1e-13 * s.abs().max(1.0) {
            // replace: callers push refined states (event endpoints) that
            // supersede a grid sample landing on the same parameter
            seg.s.pop();
            seg.states.pop();
        }
    }
    seg.s.push(s);
    seg.states.push(state);
}

#[allow(clippy::too_many_arguments)]
fn run_smooth(
    model: &MetricModel,
    s0: f64,
    state0: &[f64],
    s_end: f64,
    cfg: &IntegratorConfig,
    seg: &mut Segment,
    next_sample: &mut f64,
    armed_boundary: &mut bool,
    armed_wall: &mut bool,
) -> SegmentFate {
    let n = model.n;
    let dim = 2 * n;
    let mut jet = MetricJet::default();
    let rhs = move |_s: f64, y: &[f64], dy: &mut [f64]| hamilton_field_jet(model, y, dy, &mut jet);
    let ctrl = StepControl { rel_tol: cfg.rel_tol, abs_tol: cfg.abs_tol, max_step: cfg.max_step };
    let mut ode = DormandPrince::new(rhs, s0, state0, ctrl);

    let p_ref = metric_value(model, state0);
    let mscale: f64 = state0[n..].iter().map(|v| v * v).sum();
    let drift_cap = 1e3 * cfg.rel_tol * mscale.max(1e-300);

    let tol = cfg.x_event_tol;
    let mut end_state = vec![0.0; dim];

    loop {
        if ode.s >= s_end - 1e-13 * s_end.abs().max(1.0) {
            push_sample(seg, s_end, ode.y.clone(), cfg);
            return SegmentFate::SpanEnd;
        }
        let dense = match ode.step(s_end) {
            Ok(d) => d,
            Err(OdeError::StepUnderflow { s, h }) => {
                return SegmentFate::Breakdown {
                    s: ode.s,
                    state: ode.y.clone(),
                    note: format!("step underflow at s = {s} (h = {h:e})"),
                };
            }
        };
        let x0 = dense.start_state()[0];
        dense.end_state(&mut end_state);
        let x1 = end_state[0];

        // locate the earliest event inside this step, if any
        let mut hit: Option<(f64, bool)> = None; // (s, is_wall)
        if *armed_boundary && x0 > tol && x1 <= tol {
            let s_star = bisect_component(&dense, 0, tol);
            let s_hit = newton_to_level(model, &dense, s_star, 0.0, n);
            hit = Some((s_hit, false));
        }
        if *armed_wall && x0 < cfg.x_max && x1 >= cfg.x_max {
            let s_star = bisect_component(&dense, 0, cfg.x_max);
            let s_hit = newton_to_level(model, &dense, s_star, cfg.x_max, n);
            if hit.map_or(true, |(sb, _)| s_hit < sb) {
                hit = Some((s_hit, true));
            }
        }

        let sample_limit = hit.map_or(dense.s1, |(s, _)| s);
        while *next_sample <= sample_limit + 1e-13 && *next_sample < s_end - 1e-13 {
            if (*next_sample - sample_limit).abs() > 1e-12 {
                let mut st = vec![0.0; dim];
                dense.eval(*next_sample, &mut st);
                if st[0] < 0.0 && st[0] > -tol {
                    st[0] = 0.0;
                }
                push_sample(seg, *next_sample, st, cfg);
            }
            *next_sample += cfg.sample_ds;
        }

        if let Some((s_hit, is_wall)) = hit {
            let mut st = vec![0.0; dim];
            dense.eval(s_hit, &mut st);
            if is_wall {
                st[0] = cfg.x_max;
                return SegmentFate::Wall { s: s_hit, state: st };
            }
            st[0] = 0.0;
            return SegmentFate::Boundary { s: s_hit, state: st };
        }

        // conservation monitor: p is a first integral of the smooth flow
        let p_now = metric_value(model, &end_state);
        if (p_now - p_ref).abs() > drift_cap {
            return SegmentFate::Breakdown {
                s: dense.s1,
                state: end_state.clone(),
                note: format!(
                    "metric function drifted by {:e} (cap {:e})",
                    (p_now - p_ref).abs(),
                    drift_cap
                ),
            };
        }
        // a segment that slips past x = 0 without an armed detector has
        // left the chart (bad start data); stop loudly rather than continue
        if x1 < -10.0 * tol {
            return SegmentFate::Breakdown {
                s: dense.s1,
                state: end_state.clone(),
                note: format!("x = {x1:e} left the chart without a boundary event"),
            };
        }

        if x1 > 2.0 * tol {
            *armed_boundary = true;
        }
        if x1 < cfg.x_max - 2.0 * tol {
            *armed_wall = true;
        }
    }
}

/// Bisect the dense interpolant of component `i` to level `level`,
/// assuming a sign change of (value - level) across the step.
fn bisect_component(dense: &crate::num::rk45::DenseStep, i: usize, level: f64) -> f64 {
    let (mut lo, mut hi) = (dense.s0, dense.s1);
    let flo = dense.eval_component(lo, i) - level;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= 1e-12 * hi.abs().max(1.0) {
            return mid;
        }
        let fm = dense.eval_component(mid, i) - level;
        if (fm > 0.0) == (flo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// One Newton correction from the bisected parameter towards x = level,
/// using the exact field for the slope (not the interpolant), which lands
/// the root to square of the bisection residual.
fn newton_to_level(
    model: &MetricModel,
    dense: &crate::num::rk45::DenseStep,
    s_star: f64,
    level: f64,
    n: usize,
) -> f64 {
    let mut st = vec![0.0; 2 * n];
    dense.eval(s_star, &mut st);
    let mut field = vec![0.0; 2 * n];
    hamilton_field(model, &st, &mut field);
    let xdot = field[0];
    if xdot.abs() < 1e-300 {
        return s_star;
    }
    s_star - (st[0] - level) / xdot
}

/// Trace the broken flow through `span`, alternating smooth segments and
/// boundary continuations until the span, an exit, a breakdown, or the
/// event budget ends the path.
pub fn trace_gbb(
    model: &MetricModel,
    start: &CotangentPoint,
    span: (f64, f64),
    cfg: &IntegratorConfig,
) -> Result<GBBPath, GbbError> {
    if !(span.1 > span.0) {
        return Err(GbbError::BadSpan(span.0, span.1));
    }
    check_start(model, start)?;
    let n = model.n;
    let mut path = GBBPath { n, span, segments: Vec::new(), events: Vec::new(), config: *cfg };

    let mut cur_s = span.0;
    let mut cur = start.clone();
    loop {
        let (seg, ev) = integrate_segment(model, cur_s, &cur, span.1, cfg)?;
        path.segments.push(seg);
        match ev {
            None => return Ok(path),
            Some(ev) => {
                let stop = matches!(ev.kind, PathEventKind::DomainExit | PathEventKind::Breakdown);
                cur_s = ev.s;
                cur = CotangentPoint {
                    x: 0.0,
                    y: ev.y.clone(),
                    xi: ev.xi_out,
                    zeta: ev.zeta.clone(),
                };
                path.events.push(ev);
                if stop {
                    return Ok(path);
                }
                if path.boundary_event_count() >= cfg.max_events {
                    return Err(GbbError::MaxEventsExceeded { max_events: cfg.max_events, s: cur_s });
                }
                if cur_s >= span.1 - 1e-13 * span.1.abs().max(1.0) {
                    return Ok(path);
                }
            }
        }
    }
}
