//! Dense complex LU with partial pivoting on reusable buffers.

use nalgebra::DMatrix;
use num_complex::Complex64;

pub(crate) struct Lu {
    n: usize,
    a: Vec<Complex64>,
    piv: Vec<usize>,
}

impl Lu {
    pub(crate) fn new(n: usize) -> Self {
        Self { n, a: vec![Complex64::new(0.0, 0.0); n * n], piv: vec![0; n] }
    }

    /// Factors a row-major matrix; false when a pivot vanishes.
    pub(crate) fn factor(&mut self, m: &[Complex64]) -> bool {
        let n = self.n;
        self.a.copy_from_slice(m);
        let a = &mut self.a;
        for k in 0..n {
            let (mut p, mut best) = (k, a[k * n + k].norm_sqr());
            for r in k + 1..n {
                let v = a[r * n + k].norm_sqr();
                if v > best {
                    p = r;
                    best = v;
                }
            }
            if !(best > 0.0) || !best.is_finite() {
                return false;
            }
            self.piv[k] = p;
            if p != k {
                for c in 0..n {
                    a.swap(k * n + c, p * n + c);
                }
            }
            let inv = a[k * n + k].inv();
            for r in k + 1..n {
                let f = a[r * n + k] * inv;
                a[r * n + k] = f;
                if f != Complex64::new(0.0, 0.0) {
                    for c in k + 1..n {
                        let u = a[k * n + c];
                        a[r * n + c] -= f * u;
                    }
                }
            }
        }
        true
    }

    /// Solves in place using the last factorization.
    pub(crate) fn solve(&self, b: &mut [Complex64]) {
        let (n, a) = (self.n, &self.a);
        for k in 0..n {
            b.swap(k, self.piv[k]);
        }
        for r in 0..n {
            let mut s = b[r];
            for c in 0..r {
                s -= a[r * n + c] * b[c];
            }
            b[r] = s;
        }
        for r in (0..n).rev() {
            let mut s = b[r];
            for c in r + 1..n {
                s -= a[r * n + c] * b[c];
            }
            b[r] = s / a[r * n + r];
        }
    }
}

pub(crate) fn norm(x: &[Complex64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub(crate) fn to_matrix(n: usize, m: &[Complex64]) -> DMatrix<Complex64> {
    DMatrix::from_row_slice(n, n, m)
}

/// Extreme singular values `(σ_max, σ_min)`.
pub(crate) fn singular_extremes(m: &DMatrix<Complex64>) -> (f64, f64) {
    if m.is_empty() {
        return (0.0, 0.0);
    }
    let sv = m.clone().singular_values();
    let max = sv.iter().copied().fold(0.0, f64::max);
    let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
    (max, min)
}

/// 2-norm condition number; infinite for singular matrices.
pub(crate) fn condition_number(m: &DMatrix<Complex64>) -> f64 {
    let (max, min) = singular_extremes(m);
    if m.is_empty() {
        1.0
    } else if min > 0.0 {
        max / min
    } else {
        f64::INFINITY
    }
}

/// Condition number after scaling every row, then every column, to unit
/// max-norm. Insensitive to the units of equations and variables.
pub(crate) fn equilibrated_condition(m: &DMatrix<Complex64>) -> f64 {
    let mut a = m.clone();
    for mut row in a.row_iter_mut() {
        let s = row.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if s > 0.0 {
            row.unscale_mut(s);
        }
    }
    for mut col in a.column_iter_mut() {
        let s = col.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if s > 0.0 {
            col.unscale_mut(s);
        }
    }
    condition_number(&a)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn solves_against_nalgebra() {
        let m = vec![c(0.0, 1.0), c(2.0, 0.0), c(1.0, -1.0), c(1.0, 0.0), c(0.5, 0.5), c(3.0, 0.0), c(-1.0, 0.0), c(0.0, 0.0), c(2.0, 2.0)];
        let b = vec![c(1.0, 0.0), c(0.0, 1.0), c(2.0, -1.0)];
        let mut lu = Lu::new(3);
        assert!(lu.factor(&m));
        let mut x = b.clone();
        lu.solve(&mut x);
        let reference = to_matrix(3, &m).lu().solve(&nalgebra::DVector::from_vec(b)).unwrap();
        for i in 0..3 {
            assert!((x[i] - reference[i]).norm() < 1e-13);
        }
    }

    #[test]
    fn singular_matrix_is_detected() {
        let m = vec![c(1.0, 0.0), c(2.0, 0.0), c(2.0, 0.0), c(4.0, 0.0)];
        let mut lu = Lu::new(2);
        assert!(!lu.factor(&m));
        assert!(condition_number(&to_matrix(2, &m)) > 1e15);
        assert!(equilibrated_condition(&to_matrix(2, &m)) > 1e15);
    }

    #[test]
    fn equilibration_removes_scaling() {
        let m = vec![c(1e6, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1e-6, 0.0)];
        assert!(condition_number(&to_matrix(2, &m)) > 1e11);
        assert!((equilibrated_condition(&to_matrix(2, &m)) - 1.0).abs() < 1e-12);
    }
}
