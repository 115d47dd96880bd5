//! Truncated formal power series in one variable, used to assemble radial
//! operator coefficients from declared polynomial metric data. Only the
//! ring operations needed there are provided; everything works on plain
//! coefficient vectors (index = power).

pub fn truncate(mut a: Vec<f64>, k: usize) -> Vec<f64> {
    a.truncate(k);
    a
}

pub fn eval(a: &[f64], x: f64) -> f64 {
    a.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    let m = a.len().max(b.len());
    (0..m)
        .map(|i| a.get(i).copied().unwrap_or(0.0) + b.get(i).copied().unwrap_or(0.0))
        .collect()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    let m = a.len().max(b.len());
    (0..m)
        .map(|i| a.get(i).copied().unwrap_or(0.0) - b.get(i).copied().unwrap_or(0.0))
        .collect()
}

pub fn scale(a: &[f64], c: f64) -> Vec<f64> {
    a.iter().map(|v| c * v).collect()
}

pub fn mul(a: &[f64], b: &[f64], k: usize) -> Vec<f64> {
    let mut out = vec![0.0; k.min(a.len() + b.len()).max(1)];
    for (i, &ai) in a.iter().enumerate() {
        if i >= k || ai == 0.0 {
            continue;
        }
        for (j, &bj) in b.iter().enumerate() {
            if i + j >= k {
                break;
            }
            out[i + j] += ai * bj;
        }
    }
    out
}

/// Multiplication by x: shift all powers up by one.
pub fn shift(a: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(a.len() + 1);
    out.push(0.0);
    out.extend_from_slice(a);
    out
}

/// d/dx of the series.
pub fn deriv(a: &[f64]) -> Vec<f64> {
    if a.len() <= 1 {
        return vec![0.0];
    }
    a.iter().enumerate().skip(1).map(|(i, &c)| i as f64 * c).collect()
}

/// num / den to k terms; den must be a unit (den[0] != 0).
pub fn div(num: &[f64], den: &[f64], k: usize) -> Vec<f64> {
    let d0 = den[0];
    assert!(d0 != 0.0, "series division by a non-unit");
    let mut out = vec![0.0; k];
    for i in 0..k {
        let mut acc = num.get(i).copied().unwrap_or(0.0);
        for j in 1..=i {
            acc -= den.get(j).copied().unwrap_or(0.0) * out[i - j];
        }
        out[i] = acc / d0;
    }
    out
}

/// Determinant of a square matrix of series (row-major), truncated to k
/// terms. Cofactor expansion; matrix sizes here are at most 7.
pub fn det(m: &[Vec<f64>], dim: usize, k: usize) -> Vec<f64> {
    assert_eq!(m.len(), dim * dim, "matrix shape");
    let idx: Vec<usize> = (0..dim).collect();
    det_minor(m, dim, &idx, 0, k)
}

fn det_minor(m: &[Vec<f64>], dim: usize, cols: &[usize], row: usize, k: usize) -> Vec<f64> {
    if cols.len() == 1 {
        return m[row * dim + cols[0]].clone();
    }
    let mut acc = vec![0.0];
    for (pos, &c) in cols.iter().enumerate() {
        let entry = &m[row * dim + c];
        if entry.iter().all(|&v| v == 0.0) {
            continue;
        }
        let rest: Vec<usize> = cols.iter().copied().filter(|&cc| cc != c).collect();
        let minor = det_minor(m, dim, &rest, row + 1, k);
        let term = mul(entry, &minor, k);
        acc = if pos % 2 == 0 { add(&acc, &term) } else { sub(&acc, &term) };
    }
    truncate(acc, k)
}
