//! Smallest eigenvalue of the symmetric tridiagonal pencil (K, M) by
//! inertia bisection.
//!
//! K is symmetric tridiagonal, M diagonal with nonnegative entries (the
//! quadrature mass; it may be singular when the mass is restricted to a
//! subregion). The 1e4-cell Hardy/Poincare eigenproblems only need the
//! bottom of the spectrum, so an LDL^T inertia count per probe is both
//! simpler and faster than any dense factorization.

/// Number of eigenvalues of the pencil below `mu`, i.e. the negative
/// inertia of K - mu M.
pub fn count_below(diag: &[f64], off: &[f64], mass: &[f64], mu: f64) -> usize {
    let n = diag.len();
    debug_assert_eq!(off.len() + 1, n);
    debug_assert_eq!(mass.len(), n);
    let mut count = 0;
    let mut d_prev = f64::INFINITY; // no subdiagonal correction for the first pivot
    for k in 0..n {
        let mut d = diag[k] - mu * mass[k];
        if k > 0 {
            d -= off[k - 1] * off[k - 1] / d_prev;
        }
        if d == 0.0 {
            d = -f64::MIN_POSITIVE;
        }
        if d < 0.0 {
            count += 1;
        }
        d_prev = d;
    }
    count
}

/// Smallest finite eigenvalue of the pencil (K, M). Requires M to have at
/// least one positive entry coupled to the matrix; for positive
/// semidefinite K the search starts just below zero.
pub fn smallest_eigenvalue(diag: &[f64], off: &[f64], mass: &[f64], rel_tol: f64) -> f64 {
    let scale = diag
        .iter()
        .zip(mass.iter())
        .filter(|(_, &m)| m > 0.0)
        .fold(1.0f64, |s, (&d, &m)| s.max((d / m).abs()));
    let mut lo = -1e-6 * scale;
    let mut hi = 1e-6 * scale.max(1.0);
    // widen until the bracket straddles the first eigenvalue
    let mut guard = 0;
    while count_below(diag, off, mass, lo) > 0 {
        lo = lo.min(-1.0) * 4.0;
        guard += 1;
        assert!(guard < 500, "no lower bound for the pencil spectrum");
    }
    guard = 0;
    while count_below(diag, off, mass, hi) == 0 {
        hi = hi.max(1.0) * 4.0;
        guard += 1;
        assert!(guard < 500, "pencil has no finite eigenvalue above {lo}");
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if (hi - lo) <= rel_tol * mid.abs().max(1e-30) || mid == lo || mid == hi {
            break;
        }
        if count_below(diag, off, mass, mid) == 0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two_analytic() {
        // K = [[2,-1],[-1,2]], M = I: eigenvalues 1 and 3
        let d = [2.0, 2.0];
        let o = [-1.0];
        let m = [1.0, 1.0];
        assert_eq!(count_below(&d, &o, &m, 0.5), 0);
        assert_eq!(count_below(&d, &o, &m, 2.0), 1);
        assert_eq!(count_below(&d, &o, &m, 3.5), 2);
        let e = smallest_eigenvalue(&d, &o, &m, 1e-12);
        assert!((e - 1.0).abs() < 1e-10, "smallest {e}");
    }

    #[test]
    fn dirichlet_laplacian_matches_sine_mode() {
        // -u'' on (0,1), h = 1/(n+1): smallest eigenvalue 4 sin^2(pi h / 2) / h^2
        let n = 400;
        let h = 1.0 / (n as f64 + 1.0);
        let d = vec![2.0 / (h * h); n];
        let o = vec![-1.0 / (h * h); n - 1];
        let m = vec![1.0; n];
        let exact = 4.0 * (std::f64::consts::PI * h / 2.0).sin().powi(2) / (h * h);
        let e = smallest_eigenvalue(&d, &o, &m, 1e-12);
        assert!((e - exact).abs() < 1e-7 * exact, "smallest {e} vs {exact}");
    }

    #[test]
    fn singular_mass_restricts_the_quotient() {
        // mass only on the middle node: quotient = Schur complement of K there
        let d = [2.0, 2.0, 2.0];
        let o = [-1.0, -1.0];
        let m = [0.0, 1.0, 0.0];
        // minimize (u K u)/(u_2^2): harmonic extension gives 2 - 1/2 - 1/2 = 1
        let e = smallest_eigenvalue(&d, &o, &m, 1e-12);
        assert!((e - 1.0).abs() < 1e-10, "constrained quotient {e}");
    }
}
