//! Stress-energy quadratic forms on the compressed phase space.
//!
//! For a vector multiplier W and a covector alpha the form
//!
//! ```text
//! M(q, q) = 2 q(W) G(q, alpha) - alpha(W) G(q, q)
//! ```
//!
//! is positive definite whenever W and the dual of alpha are both forward
//! timelike, which is the algebraic heart of every energy estimate built
//! here. The refined variant adds a rank-one boost c along a spacelike
//! direction U orthogonal to the pair; positivity survives exactly up to
//! c = 1 and the bisection in `refined_positivity_check` locates that
//! edge, which doubles as an end-to-end test of the sign conventions.

use nalgebra::{DMatrix, DVector};

/// M = W (G alpha)^T + (G alpha) W^T - alpha(W) G, as a matrix acting on
/// covectors q: q^T M q = 2 q(W) G(q, alpha) - alpha(W) G(q, q).
pub fn stress_energy_form(g_dual: &DMatrix<f64>, w: &[f64], alpha: &[f64]) -> DMatrix<f64> {
    let n = g_dual.nrows();
    assert_eq!(w.len(), n, "vector size");
    assert_eq!(alpha.len(), n, "covector size");
    let wv = DVector::from_column_slice(w);
    let av = DVector::from_column_slice(alpha);
    let ga = g_dual * &av;
    let aw = av.dot(&wv);
    &wv * ga.transpose() + &ga * wv.transpose() - g_dual * aw
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    let sym = (m + m.transpose()) * 0.5;
    sym.symmetric_eigen()
        .eigenvalues
        .iter()
        .fold(f64::INFINITY, |a, &b| a.min(b))
}

/// Spacelike vector annihilated by alpha and g-orthogonal to W, i.e. a
/// vector in the common kernel of the covectors alpha and G^-1 W, found
/// by projecting coordinate directions off their span. The pair spans a
/// timelike 2-plane, so every vector in its g-orthocomplement is
/// spacelike and the final assert is a theorem, not a hope.
pub fn orthogonal_spacelike(g_dual: &DMatrix<f64>, w: &[f64], alpha: &[f64]) -> Vec<f64> {
    let n = g_dual.nrows();
    let a0 = DVector::from_column_slice(alpha).normalize();
    let w_flat = inverse(g_dual) * DVector::from_column_slice(w);
    let mut a1 = w_flat.clone();
    a1 -= &a0 * a0.dot(&w_flat);
    let a1 = a1.normalize();
    let mut best = DVector::zeros(n);
    let mut best_norm = -1.0;
    for k in 0..n {
        let mut r = DVector::zeros(n);
        r[k] = 1.0;
        r -= &a0 * a0[k];
        r -= &a1 * a1[k];
        let nr = r.norm();
        if nr > best_norm {
            best_norm = nr;
            best = r;
        }
    }
    let u: Vec<f64> = best.iter().map(|v| v / best_norm).collect();
    let gu = vector_norm(g_dual, &u);
    assert!(gu < 0.0, "annihilator of a timelike pair must be spacelike, got {gu}");
    u
}

fn inverse(g_dual: &DMatrix<f64>) -> DMatrix<f64> {
    g_dual
        .clone()
        .try_inverse()
        .expect("dual metric must be invertible")
}

/// g(v, v) for a vector v, i.e. the quadratic form of G^-1.
fn vector_norm(g_dual: &DMatrix<f64>, v: &[f64]) -> f64 {
    let vv = DVector::from_column_slice(v);
    vv.dot(&(inverse(g_dual) * &vv))
}

/// Minimum eigenvalue of the boosted form
///
/// ```text
/// M_c = M + c (alpha(W) / g(U,U)) U U^T
/// ```
///
/// where g(U,U) = U^T G^-1 U is the metric norm of the vector U. The
/// preconditions alpha(U) = 0 and g(W,U) = 0 put U in the spacelike
/// orthocomplement of the timelike plane spanned by the pair, and there
/// the result is positive for c < 1, degenerate exactly at c = 1 along
/// the covector G^-1 U, and indefinite beyond: splitting any covector
/// into its action on that plane, on U, and on the rest of the
/// orthocomplement shows M_1 is the 2d stress form plus alpha(W) times
/// the squares of the non-U spacelike components.
pub fn refined_min_eigenvalue(
    g_dual: &DMatrix<f64>,
    u: &[f64],
    w: &[f64],
    alpha: &[f64],
    c: f64,
) -> f64 {
    let au: f64 = alpha.iter().zip(u).map(|(a, b)| a * b).sum();
    assert!(au.abs() < 1e-9, "alpha must annihilate U, got {au}");
    let uw = {
        let g_inv = inverse(g_dual);
        let uv = DVector::from_column_slice(u);
        let wv = DVector::from_column_slice(w);
        uv.dot(&(&g_inv * wv))
    };
    assert!(uw.abs() < 1e-9, "U must be metric-orthogonal to W, got {uw}");
    let aw: f64 = alpha.iter().zip(w).map(|(a, b)| a * b).sum();
    assert!(aw > 0.0, "multiplier pairing must be positive, got {aw}");
    let gu = vector_norm(g_dual, u);
    assert!(gu < 0.0, "U must be spacelike, got norm {gu}");
    let m0 = stress_energy_form(g_dual, w, alpha);
    let uv = DVector::from_column_slice(u);
    let boost = &uv * uv.transpose() * (c * aw / gu);
    min_eigenvalue(&(m0 + boost))
}

#[derive(Clone, Debug)]
pub struct RefinedReport {
    /// Boost weight where the smallest eigenvalue crosses zero.
    pub critical_c: f64,
    pub min_eig_at_zero: f64,
    pub min_eig_at_two: f64,
}

/// Construct a spacelike U for the pair and bisect the boost weight for
/// the edge of positivity, which exact arithmetic puts at c = 1.
pub fn refined_positivity_check(
    g_dual: &DMatrix<f64>,
    w: &[f64],
    alpha: &[f64],
) -> RefinedReport {
    let u = orthogonal_spacelike(g_dual, w, alpha);
    let eig_at = |c: f64| refined_min_eigenvalue(g_dual, &u, w, alpha, c);
    let at0 = eig_at(0.0);
    let at2 = eig_at(2.0);
    assert!(at0 > 0.0, "base form must be positive definite");
    let (mut lo, mut hi) = (0.0, 4.0);
    assert!(eig_at(hi) < 0.0, "boosted form must eventually lose positivity");
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if eig_at(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    RefinedReport {
        critical_c: 0.5 * (lo + hi),
        min_eig_at_zero: at0,
        min_eig_at_two: at2,
    }
}
