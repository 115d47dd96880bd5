//! Small numerical building blocks shared across modules.

pub mod rk45;
pub mod special;
pub mod tridiag;

/// Bisect a sign change of `f` on [lo, hi] down to an interval of width
/// `tol`, returning the midpoint. Panics if the bracket is invalid; callers
/// are expected to have located a sign change first.
pub fn bisect_root(mut lo: f64, mut hi: f64, mut f: impl FnMut(f64) -> f64, tol: f64) -> f64 {
    let mut flo = f(lo);
    let fhi = f(hi);
    assert!(
        flo == 0.0 || fhi == 0.0 || (flo < 0.0) != (fhi < 0.0),
        "bisect_root: no sign change on [{lo}, {hi}] (f: {flo} .. {fhi})"
    );
    if flo == 0.0 {
        return lo;
    }
    if fhi == 0.0 {
        return hi;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= tol {
            return mid;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Quadratic sub-cell interpolation of an extremum: given samples
/// f(-1), f(0), f(+1) with f(0) the discrete max, returns the offset of the
/// parabola vertex in cell units, clamped to [-1, 1].
pub fn parabolic_peak_offset(fm: f64, f0: f64, fp: f64) -> f64 {
    let denom = fm - 2.0 * f0 + fp;
    if denom.abs() < 1e-300 {
        return 0.0;
    }
    (0.5 * (fm - fp) / denom).clamp(-1.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisect_finds_sqrt2() {
        let r = bisect_root(0.0, 2.0, |x| x * x - 2.0, 1e-14);
        assert!((r - 2f64.sqrt()).abs() < 1e-13, "got {r}");
    }

    #[test]
    fn parabolic_vertex_exact_on_quadratics() {
        // f(s) = -(s - 0.3)^2 sampled at -1, 0, 1
        let f = |s: f64| -(s - 0.3) * (s - 0.3);
        let off = parabolic_peak_offset(f(-1.0), f(0.0), f(1.0));
        assert!((off - 0.3).abs() < 1e-12, "vertex offset {off}");
    }
}
