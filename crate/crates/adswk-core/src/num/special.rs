//! Gamma and Bessel-J evaluations used as independent oracles in tests.
//! Series implementations, adequate for moderate arguments; not tuned for
//! speed or extreme parameter ranges.

/// Lanczos approximation (g = 7, 9 terms), real arguments, poles excluded.
pub fn gamma(z: f64) -> f64 {
    const G: [f64; 9] = [
        0.99999999999980993,
        676.5203681218851,
        -1259.1392167224028,
        771.32342877765313,
        -176.61502916214059,
        12.507343278686905,
        -0.13857109526572012,
        9.9843695780195716e-6,
        1.5056327351493116e-7,
    ];
    if z < 0.5 {
        // reflection
        return std::f64::consts::PI / ((std::f64::consts::PI * z).sin() * gamma(1.0 - z));
    }
    let z = z - 1.0;
    let mut a = G[0];
    for (i, &g) in G.iter().enumerate().skip(1) {
        a += g / (z + i as f64);
    }
    let t = z + 7.5;
    (2.0 * std::f64::consts::PI).sqrt() * t.powf(z + 0.5) * (-t).exp() * a
}

/// Bessel function of the first kind, order nu >= 0, by the ascending
/// series. Accurate to roughly 1e-10 relative for 0 <= x <= 10 and the
/// moderate orders exercised in tests.
pub fn bessel_j(nu: f64, x: f64) -> f64 {
    assert!(nu >= 0.0 && x >= 0.0, "bessel_j oracle restricted to nu, x >= 0");
    if x == 0.0 {
        return if nu == 0.0 { 1.0 } else { 0.0 };
    }
    let half = 0.5 * x;
    let mut term = half.powf(nu) / gamma(nu + 1.0);
    let mut sum = term;
    let z = half * half;
    for m in 1..200 {
        let m = m as f64;
        term *= -z / (m * (m + nu));
        sum += term;
        if term.abs() < 1e-17 * sum.abs().max(1e-280) {
            break;
        }
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_matches_factorials_and_half_integers() {
        assert!((gamma(5.0) - 24.0).abs() < 1e-10);
        let sqrt_pi = std::f64::consts::PI.sqrt();
        assert!((gamma(0.5) - sqrt_pi).abs() < 1e-12);
        assert!((gamma(1.5) - 0.5 * sqrt_pi).abs() < 1e-12);
    }

    #[test]
    fn half_order_bessel_is_elementary() {
        // J_{1/2}(x) = sqrt(2/(pi x)) sin x
        for &x in &[0.3, 1.0, 2.7, 6.0, 9.5] {
            let elem = (2.0 / (std::f64::consts::PI * x)).sqrt() * x.sin();
            let j = bessel_j(0.5, x);
            assert!((j - elem).abs() < 1e-10 * elem.abs().max(0.1), "x={x}: {j} vs {elem}");
        }
    }

    #[test]
    fn first_zero_of_j0() {
        let z = crate::num::bisect_root(2.0, 3.0, |x| bessel_j(0.0, x), 1e-12);
        assert!((z - 2.404825557695773).abs() < 1e-9, "J0 zero {z}");
    }
}
