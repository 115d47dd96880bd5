//! Collar-coordinate metric models, the compressed cotangent bundle, and
//! indicial data.
//!
//! A model lives on X = [0, x_max) x Y, Y = R_t x T^{n-2}, and is specified
//! by the dual metric Ghat of the conformal multiple ghat = x^2 g in the
//! coordinate ordering (x, y_1 = t, y_2, ..., y_{n-1}):
//!
//!   Ghat = A dx.dx + 2 C_j dx.dy_j + B_ij dy_i.dy_j   (as a quadratic form
//!   on covectors),
//!
//! with the boundary normal form A(0,y) = -1, C_j(0,y) = 0 and B(0,y)
//! Lorentzian of signature (1, n-2), the t-direction carrying the positive
//! sign. Orientation convention used throughout: a covector or vector is
//! *forward* when its pairing with dt (resp. its dt-component under Ghat)
//! is positive.

use nalgebra::DMatrix;
use num_complex::Complex64;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("x = {0} is outside the chart (x >= 0 required)")]
    NegativeX(f64),
    #[error("boundary tangential momentum is null-degenerate: zetab = 0")]
    ZeroTangentialMomentum,
    #[error("not in the compressed characteristic set: zetab.B zetab = {0} < 0")]
    NotInCharSet(f64),
    #[error("coefficient table has wrong shape: expected {expected}, got {got}")]
    BadCoefficientShape { expected: usize, got: usize },
    #[error("dimension must satisfy n >= 3, got {0}")]
    DimensionTooSmall(usize),
}

pub type CoefMap = Arc<dyn Fn(f64, &[f64]) -> f64 + Send + Sync>;
pub type CoefGradMap = Arc<dyn Fn(f64, &[f64], &mut [f64]) + Send + Sync>;

/// One scalar coefficient of the dual metric together with its first
/// partials in (x, y_1, ..., y_{n-1}).
#[derive(Clone)]
pub struct Coefficient {
    pub value: CoefMap,
    pub grad: CoefGradMap,
}

impl Coefficient {
    pub fn constant(v: f64) -> Self {
        Coefficient {
            value: Arc::new(move |_, _| v),
            grad: Arc::new(|_, _, out| out.fill(0.0)),
        }
    }

    pub fn analytic(
        value: impl Fn(f64, &[f64]) -> f64 + Send + Sync + 'static,
        grad: impl Fn(f64, &[f64], &mut [f64]) + Send + Sync + 'static,
    ) -> Self {
        Coefficient { value: Arc::new(value), grad: Arc::new(grad) }
    }

    /// Value map only; partials by 4th-order central differences with step
    /// 1e-5 x coordinate scale. For user-supplied families without
    /// closed-form derivatives.
    pub fn from_value(value: impl Fn(f64, &[f64]) -> f64 + Send + Sync + 'static) -> Self {
        let value: CoefMap = Arc::new(value);
        let v = value.clone();
        let grad: CoefGradMap = Arc::new(move |x, y, out| {
            let mut yb = y.to_vec();
            let eval = |x: f64, yb: &[f64]| v(x, yb);
            for k in 0..=y.len() {
                let c = if k == 0 { x } else { y[k - 1] };
                let h = 1e-5 * c.abs().max(1.0);
                let sample = |t: f64, yb: &mut [f64]| -> f64 {
                    if k == 0 {
                        eval(t, yb)
                    } else {
                        let old = yb[k - 1];
                        yb[k - 1] = t;
                        let r = eval(x, yb);
                        yb[k - 1] = old;
                        r
                    }
                };
                let f = |d: f64, yb: &mut [f64]| sample(c + d, yb);
                out[k] = (f(-2.0 * h, &mut yb) - 8.0 * f(-h, &mut yb) + 8.0 * f(h, &mut yb)
                    - f(2.0 * h, &mut yb))
                    / (12.0 * h);
            }
        });
        Coefficient { value, grad }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FamilyTag {
    FlatSlab,
    ExactAdSCollar,
    PerturbedSlab,
}

impl FamilyTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            FamilyTag::FlatSlab => "flat_slab",
            FamilyTag::ExactAdSCollar => "exact_ads_collar",
            FamilyTag::PerturbedSlab => "perturbed_slab",
        }
    }
}

/// Polynomial radial data for models that separate: the radial operator
/// a2(x) (x d/dx)^2 + a1(x) (x d/dx) + lambda + x^2 q(x) is assembled from
/// these power series (see `modes::build_radial_ode`, which cross-checks
/// the declaration against the metric itself before using it).
#[derive(Clone, Debug)]
pub struct SeparableDecl {
    /// series of A(x) (x-dependence only)
    pub a: Vec<f64>,
    /// series of B_ij(x), row-major (n-1)^2 entries
    pub b: Vec<Vec<f64>>,
}

/// Dual metric of the conformal multiple in collar coordinates.
pub struct MetricModel {
    pub n: usize,
    pub family_tag: FamilyTag,
    a: Coefficient,
    c: Vec<Coefficient>,
    b: Vec<Coefficient>, // row-major (n-1) x (n-1); constructors keep it symmetric
    pub separable: Option<Arc<SeparableDecl>>,
}

impl MetricModel {
    /// Number of boundary coordinates (t plus the torus directions).
    pub fn nb(&self) -> usize {
        self.n - 1
    }

    /// Ghat = diag(-1 | 1, -1, ..., -1): the product slab. Separates
    /// trivially.
    pub fn flat_slab(n: usize) -> Self {
        assert!(n >= 3, "dimension must be at least 3");
        let nb = n - 1;
        let mut b = Vec::with_capacity(nb * nb);
        let mut b_series = Vec::with_capacity(nb * nb);
        for i in 0..nb {
            for j in 0..nb {
                let v = if i != j {
                    0.0
                } else if i == 0 {
                    1.0
                } else {
                    -1.0
                };
                b.push(Coefficient::constant(v));
                b_series.push(vec![v]);
            }
        }
        MetricModel {
            n,
            family_tag: FamilyTag::FlatSlab,
            a: Coefficient::constant(-1.0),
            c: vec![Coefficient::constant(0.0); nb],
            b,
            separable: Some(Arc::new(SeparableDecl { a: vec![-1.0], b: b_series })),
        }
    }

    /// Collar of the exact AdS metric: ghat = (1+x^2) dt^2 - dx^2/(1+x^2)
    /// - dw^2, so A = -(1+x^2), B_tt = 1/(1+x^2), B_ww = -1.
    pub fn exact_ads_collar(n: usize) -> Self {
        assert!(n >= 3, "dimension must be at least 3");
        let nb = n - 1;
        let a = Coefficient::analytic(
            |x, _| -(1.0 + x * x),
            |x, _, out| {
                out.fill(0.0);
                out[0] = -2.0 * x;
            },
        );
        let mut b = Vec::with_capacity(nb * nb);
        for i in 0..nb {
            for j in 0..nb {
                if i != j {
                    b.push(Coefficient::constant(0.0));
                } else if i == 0 {
                    b.push(Coefficient::analytic(
                        |x, _| 1.0 / (1.0 + x * x),
                        |x, _, out| {
                            out.fill(0.0);
                            let d = 1.0 + x * x;
                            out[0] = -2.0 * x / (d * d);
                        },
                    ));
                } else {
                    b.push(Coefficient::constant(-1.0));
                }
            }
        }
        MetricModel {
            n,
            family_tag: FamilyTag::ExactAdSCollar,
            a,
            c: vec![Coefficient::constant(0.0); nb],
            b,
            separable: None,
        }
    }

    /// Custom coefficient maps. `b` is row-major (n-1)^2 and must be given
    /// symmetrically; the boundary normal form (A(0,y) = -1, C(0,y) = 0,
    /// B(0,y) Lorentzian) is the caller's responsibility and is checked by
    /// `boundary_timelike_check` / signature sampling rather than here, so
    /// negative controls stay constructible.
    pub fn perturbed_slab(
        n: usize,
        a: Coefficient,
        c: Vec<Coefficient>,
        b: Vec<Coefficient>,
    ) -> Result<Self, GeometryError> {
        if n < 3 {
            return Err(GeometryError::DimensionTooSmall(n));
        }
        let nb = n - 1;
        if c.len() != nb {
            return Err(GeometryError::BadCoefficientShape { expected: nb, got: c.len() });
        }
        if b.len() != nb * nb {
            return Err(GeometryError::BadCoefficientShape { expected: nb * nb, got: b.len() });
        }
        Ok(MetricModel { n, family_tag: FamilyTag::PerturbedSlab, a, c, b, separable: None })
    }

    /// Flat slab with the tangential block replaced by the polynomial
    /// matrix B(x) = sum_k coeffs[k] x^k (row-major constant matrices).
    /// Declares the separable radial data, so the modes machinery accepts
    /// the family.
    pub fn perturbed_slab_polynomial_b(
        n: usize,
        coeffs: Vec<Vec<f64>>,
    ) -> Result<Self, GeometryError> {
        if n < 3 {
            return Err(GeometryError::DimensionTooSmall(n));
        }
        let nb = n - 1;
        for (k, c) in coeffs.iter().enumerate() {
            if c.len() != nb * nb {
                return Err(GeometryError::BadCoefficientShape {
                    expected: nb * nb,
                    got: c.len(),
                });
            }
            for i in 0..nb {
                for j in 0..i {
                    assert!(
                        (c[i * nb + j] - c[j * nb + i]).abs() < 1e-14,
                        "B coefficient {k} not symmetric at ({i},{j})"
                    );
                }
            }
        }
        let mut b = Vec::with_capacity(nb * nb);
        let mut b_series = Vec::with_capacity(nb * nb);
        for i in 0..nb {
            for j in 0..nb {
                let series: Vec<f64> = coeffs.iter().map(|c| c[i * nb + j]).collect();
                b_series.push(series.clone());
                let ds: Vec<f64> = series
                    .iter()
                    .enumerate()
                    .skip(1)
                    .map(|(k, v)| k as f64 * v)
                    .collect();
                let s2 = series.clone();
                b.push(Coefficient::analytic(
                    move |x, _| horner(&s2, x),
                    move |x, _, out| {
                        out.fill(0.0);
                        out[0] = horner(&ds, x);
                    },
                ));
            }
        }
        Ok(MetricModel {
            n,
            family_tag: FamilyTag::PerturbedSlab,
            a: Coefficient::constant(-1.0),
            c: vec![Coefficient::constant(0.0); nb],
            b,
            separable: Some(Arc::new(SeparableDecl { a: vec![-1.0], b: b_series })),
        })
    }

    /// Coefficients tabulated on a rectangular (x, y_1) grid, constant in
    /// the remaining y. Values are interpolated by local bicubic (4x4
    /// tensor-product Lagrange) patches, exact on cubics; partials fall
    /// back to finite differences of the interpolant.
    pub fn tabulated(
        n: usize,
        xs: Vec<f64>,
        y1s: Vec<f64>,
        a_tab: Vec<f64>,
        c_tabs: Vec<Vec<f64>>,
        b_tabs: Vec<Vec<f64>>,
    ) -> Result<Self, GeometryError> {
        if n < 3 {
            return Err(GeometryError::DimensionTooSmall(n));
        }
        let nb = n - 1;
        let cells = xs.len() * y1s.len();
        let check = |v: &Vec<f64>| -> Result<(), GeometryError> {
            if v.len() != cells {
                Err(GeometryError::BadCoefficientShape { expected: cells, got: v.len() })
            } else {
                Ok(())
            }
        };
        check(&a_tab)?;
        if c_tabs.len() != nb {
            return Err(GeometryError::BadCoefficientShape { expected: nb, got: c_tabs.len() });
        }
        if b_tabs.len() != nb * nb {
            return Err(GeometryError::BadCoefficientShape {
                expected: nb * nb,
                got: b_tabs.len(),
            });
        }
        for t in c_tabs.iter().chain(b_tabs.iter()) {
            check(t)?;
        }
        let grid = Arc::new(BicubicGrid { xs, y1s });
        let coef = |tab: Vec<f64>| {
            let g = grid.clone();
            Coefficient::from_value(move |x, y| g.eval(&tab, x, y[0]))
        };
        let a = coef(a_tab);
        let c: Vec<Coefficient> = c_tabs.into_iter().map(coef).collect();
        let b: Vec<Coefficient> = b_tabs.into_iter().map(coef).collect();
        MetricModel::perturbed_slab(n, a, c, b)
    }

    pub fn a_at(&self, x: f64, y: &[f64]) -> f64 {
        (self.a.value)(x, y)
    }

    /// Clone handles on raw coefficients, for consumers that build derived
    /// scalar fields on the collar without holding the whole model.
    pub fn a_coefficient(&self) -> Coefficient {
        self.a.clone()
    }

    pub fn c_coefficient(&self, j: usize) -> Coefficient {
        self.c[j].clone()
    }

    pub fn c_at(&self, x: f64, y: &[f64], out: &mut [f64]) {
        for (j, c) in self.c.iter().enumerate() {
            out[j] = (c.value)(x, y);
        }
    }

    pub fn b_at(&self, x: f64, y: &[f64], out: &mut [f64]) {
        let nb = self.nb();
        for i in 0..nb {
            for j in 0..nb {
                out[i * nb + j] = (self.b[i * nb + j].value)(x, y);
            }
        }
    }

    /// Values and first partials of every coefficient at (x, y). Gradient
    /// layout: index 0 is d/dx, then d/dy_j.
    pub fn jet(&self, x: f64, y: &[f64], jet: &mut MetricJet) {
        let nb = self.nb();
        jet.resize(nb);
        jet.a = (self.a.value)(x, y);
        (self.a.grad)(x, y, &mut jet.da);
        for j in 0..nb {
            jet.c[j] = (self.c[j].value)(x, y);
            (self.c[j].grad)(x, y, &mut jet.dc[j * self.n..(j + 1) * self.n]);
        }
        for e in 0..nb * nb {
            jet.b[e] = (self.b[e].value)(x, y);
            (self.b[e].grad)(x, y, &mut jet.db[e * self.n..(e + 1) * self.n]);
        }
    }

    /// zetab . B(x,y) zetab
    pub fn b_form(&self, x: f64, y: &[f64], zetab: &[f64]) -> f64 {
        let nb = self.nb();
        let mut acc = 0.0;
        for i in 0..nb {
            for j in 0..nb {
                acc += (self.b[i * nb + j].value)(x, y) * zetab[i] * zetab[j];
            }
        }
        acc
    }
}

fn horner(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &v| acc * x + v)
}

/// Workspace holding one evaluation of all coefficients and partials.
#[derive(Clone, Debug, Default)]
pub struct MetricJet {
    pub a: f64,
    pub c: Vec<f64>,
    pub b: Vec<f64>,
    pub da: Vec<f64>,
    pub dc: Vec<f64>,
    pub db: Vec<f64>,
}

impl MetricJet {
    fn resize(&mut self, nb: usize) {
        let n = nb + 1;
        self.c.resize(nb, 0.0);
        self.b.resize(nb * nb, 0.0);
        self.da.resize(n, 0.0);
        self.dc.resize(nb * n, 0.0);
        self.db.resize(nb * nb * n, 0.0);
    }
}

struct BicubicGrid {
    xs: Vec<f64>,
    y1s: Vec<f64>,
}

impl BicubicGrid {
    fn stencil(axis: &[f64], v: f64) -> (usize, [f64; 4]) {
        // 4-point Lagrange stencil around the cell containing v (clamped)
        let m = axis.len();
        assert!(m >= 4, "tabulated coefficients need at least 4 nodes per axis");
        let mut i = match axis.binary_search_by(|a| a.partial_cmp(&v).unwrap()) {
            Ok(i) => i,
            Err(i) => i.saturating_sub(1),
        };
        i = i.clamp(1, m - 3);
        let base = i - 1;
        let xs = [axis[base], axis[base + 1], axis[base + 2], axis[base + 3]];
        let mut w = [0.0; 4];
        for k in 0..4 {
            let mut p = 1.0;
            for l in 0..4 {
                if l != k {
                    p *= (v - xs[l]) / (xs[k] - xs[l]);
                }
            }
            w[k] = p;
        }
        (base, w)
    }

    fn eval(&self, tab: &[f64], x: f64, y1: f64) -> f64 {
        let (bx, wx) = Self::stencil(&self.xs, x);
        let (by, wy) = Self::stencil(&self.y1s, y1);
        let ny = self.y1s.len();
        let mut acc = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                acc += wx[i] * wy[j] * tab[(bx + i) * ny + (by + j)];
            }
        }
        acc
    }
}

/// Point of T*X in collar coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct CotangentPoint {
    pub x: f64,
    pub y: Vec<f64>,
    pub xi: f64,
    pub zeta: Vec<f64>,
}

/// Point of the compressed (b-)cotangent bundle: xib = x xi, zetab = zeta.
#[derive(Clone, Debug, PartialEq)]
pub struct BCotangentPoint {
    pub x: f64,
    pub y: Vec<f64>,
    pub xib: f64,
    pub zetab: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralParam {
    pub lambda: Complex64,
    pub n: usize,
}

impl SpectralParam {
    pub fn new(n: usize, lambda: Complex64) -> Self {
        SpectralParam { lambda, n }
    }

    pub fn real(n: usize, lambda: f64) -> Self {
        SpectralParam { lambda: Complex64::new(lambda, 0.0), n }
    }

    /// (n-1)^2/4, the threshold between real and complex indicial roots.
    pub fn bf_bound(&self) -> f64 {
        let nm1 = (self.n - 1) as f64;
        0.25 * nm1 * nm1
    }
}

/// Indicial roots s^2 - (n-1)s + lambda = 0 and derived flags.
#[derive(Clone, Copy, Debug)]
pub struct IndicialData {
    pub s_minus: Complex64,
    pub s_plus: Complex64,
    pub difference: Complex64,
    /// s_plus - s_minus is a nonnegative integer (0 included): series
    /// solutions on the minus branch may need a logarithm.
    pub log_case: bool,
    /// both roots real (lambda real and at most (n-1)^2/4)
    pub real_case: bool,
}

impl IndicialData {
    /// difference rounded to the nearest integer; meaningful in the log case.
    pub fn integer_gap(&self) -> usize {
        self.difference.re.round() as usize
    }
}

/// Full dual metric Ghat(x,y) as a symmetric n x n matrix in the
/// (x, y_1, ..., y_{n-1}) ordering.
pub fn eval_dual_metric(
    model: &MetricModel,
    x: f64,
    y: &[f64],
) -> Result<DMatrix<f64>, GeometryError> {
    if x < 0.0 {
        return Err(GeometryError::NegativeX(x));
    }
    let n = model.n;
    let nb = model.nb();
    let mut g = DMatrix::zeros(n, n);
    g[(0, 0)] = model.a_at(x, y);
    let mut c = vec![0.0; nb];
    model.c_at(x, y, &mut c);
    let mut b = vec![0.0; nb * nb];
    model.b_at(x, y, &mut b);
    for j in 0..nb {
        g[(0, j + 1)] = c[j];
        g[(j + 1, 0)] = c[j];
        for i in 0..nb {
            // store the symmetrized tangential block so the output is
            // exactly symmetric even for sloppy user tables
            g[(i + 1, j + 1)] = 0.5 * (b[i * nb + j] + b[j * nb + i]);
        }
    }
    Ok(g)
}

/// The metric function p(q) = Ghat(q, q) on covectors.
pub fn metric_function(model: &MetricModel, q: &CotangentPoint) -> f64 {
    let nb = model.nb();
    let mut c = vec![0.0; nb];
    model.c_at(q.x, &q.y, &mut c);
    let a = model.a_at(q.x, &q.y);
    let mut p = a * q.xi * q.xi;
    for j in 0..nb {
        p += 2.0 * c[j] * q.xi * q.zeta[j];
    }
    p + model.b_form(q.x, &q.y, &q.zeta)
}

/// Compression pi: (x, y, xi, zeta) -> (x, y, x xi, zeta).
pub fn compress(q: &CotangentPoint) -> BCotangentPoint {
    BCotangentPoint { x: q.x, y: q.y.clone(), xib: q.x * q.xi, zetab: q.zeta.clone() }
}

/// Interior inverse of the compression (x > 0 required).
pub fn decompress_interior(b: &BCotangentPoint) -> CotangentPoint {
    assert!(b.x > 0.0, "interior decompression needs x > 0");
    CotangentPoint { x: b.x, y: b.y.clone(), xi: b.xib / b.x, zeta: b.zetab.clone() }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NormalSign {
    Plus,
    Minus,
}

/// Preimage under the compression of a boundary characteristic point, on
/// the chosen normal-momentum branch: xi = sign sqrt(zetab . B(0,y) zetab).
pub fn decompress_boundary(
    model: &MetricModel,
    b: &BCotangentPoint,
    sign: NormalSign,
) -> Result<CotangentPoint, GeometryError> {
    let h = model.b_form(0.0, &b.y, &b.zetab);
    let scale: f64 = b.zetab.iter().map(|z| z * z).sum();
    if h < -1e-12 * scale.max(1e-300) {
        return Err(GeometryError::NotInCharSet(h));
    }
    let root = h.max(0.0).sqrt();
    let xi = match sign {
        NormalSign::Plus => root,
        NormalSign::Minus => -root,
    };
    Ok(CotangentPoint { x: 0.0, y: b.y.clone(), xi, zeta: b.zetab.clone() })
}

/// Indicial roots of the boundary normal form: s = (n-1)/2 +-
/// sqrt((n-1)^2/4 - lambda), principal branch of the square root.
pub fn indicial_roots(sp: &SpectralParam) -> IndicialData {
    let nm1 = (sp.n - 1) as f64;
    let disc = Complex64::new(0.25 * nm1 * nm1, 0.0) - sp.lambda;
    let root = disc.sqrt();
    let s_plus = Complex64::new(0.5 * nm1, 0.0) + root;
    let s_minus = Complex64::new(0.5 * nm1, 0.0) - root;
    let difference = s_plus - s_minus;
    let log_case = difference.im.abs() < 1e-9
        && (difference.re - difference.re.round()).abs() < 1e-9
        && difference.re.round() >= 0.0;
    let scale = sp.lambda.norm().max(1.0);
    let real_case = sp.lambda.im.abs() <= 1e-14 * scale && s_minus.im.abs() <= 1e-9;
    IndicialData { s_minus, s_plus, difference, log_case, real_case }
}

pub const DEFAULT_TOL_H: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PointClass {
    Hyperbolic,
    Glancing,
    NotInCompressedCharSet,
    Interior,
}

pub fn classify(model: &MetricModel, b: &BCotangentPoint) -> Result<PointClass, GeometryError> {
    classify_with_tol(model, b, DEFAULT_TOL_H)
}

/// Boundary classification on the normalized form zetab.B zetab / |zetab|^2,
/// so the answer is scale invariant.
pub fn classify_with_tol(
    model: &MetricModel,
    b: &BCotangentPoint,
    tol_h: f64,
) -> Result<PointClass, GeometryError> {
    if b.x > 0.0 {
        return Ok(PointClass::Interior);
    }
    let norm2: f64 = b.zetab.iter().map(|z| z * z).sum();
    if norm2 == 0.0 {
        return Err(GeometryError::ZeroTangentialMomentum);
    }
    // on the compressed characteristic set over the boundary xib must vanish
    if b.xib.abs() > 1e-9 * norm2.sqrt().max(1e-300) {
        return Ok(PointClass::NotInCompressedCharSet);
    }
    let h = model.b_form(0.0, &b.y, &b.zetab) / norm2;
    Ok(if h > tol_h {
        PointClass::Hyperbolic
    } else if h < -tol_h {
        PointClass::NotInCompressedCharSet
    } else {
        PointClass::Glancing
    })
}

#[derive(Clone, Debug)]
pub struct BoundaryTimelikeReport {
    pub pass: bool,
    pub samples: usize,
    pub max_violation: f64,
    /// index into the supplied sample list where the worst violation occurs
    pub worst_sample: Option<usize>,
}

/// Confirms A(0,y) < 0 and C(0,y) = 0 across the supplied boundary samples,
/// i.e. that the conformal boundary is timelike and the chart is in normal
/// form.
pub fn boundary_timelike_check(model: &MetricModel, y_samples: &[Vec<f64>]) -> BoundaryTimelikeReport {
    let nb = model.nb();
    let mut max_violation = 0.0f64;
    let mut worst = None;
    let mut c = vec![0.0; nb];
    for (idx, y) in y_samples.iter().enumerate() {
        let a = model.a_at(0.0, y);
        model.c_at(0.0, y, &mut c);
        let mut v = if a < 0.0 { 0.0 } else { a.max(f64::MIN_POSITIVE) };
        for cj in &c {
            v = v.max(cj.abs());
        }
        if v > max_violation {
            max_violation = v;
            worst = Some(idx);
        }
    }
    BoundaryTimelikeReport {
        pass: max_violation <= 1e-12,
        samples: y_samples.len(),
        max_violation,
        worst_sample: if max_violation > 1e-12 { worst } else { None },
    }
}
