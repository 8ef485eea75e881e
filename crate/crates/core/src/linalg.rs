//! Small complex-vector helpers shared by the channel, metric, and
//! coefficient code. Kept loop-based: the arrays here are at most 16x8.

use ndarray::{Array1, Array2};
use num_complex::Complex64;

/// Hermitian inner product `x^H y`.
pub fn inner(x: &Array1<Complex64>, y: &Array1<Complex64>) -> Complex64 {
    debug_assert_eq!(x.len(), y.len());
    x.iter().zip(y.iter()).map(|(a, b)| a.conj() * b).sum()
}

/// Squared Euclidean norm `||x||_2^2`.
pub fn norm_sq(x: &Array1<Complex64>) -> f64 {
    x.iter().map(|a| a.norm_sqr()).sum()
}

/// Matrix-vector product `M x`.
pub fn matvec(m: &Array2<Complex64>, x: &Array1<Complex64>) -> Array1<Complex64> {
    debug_assert_eq!(m.ncols(), x.len());
    Array1::from_iter(
        m.rows()
            .into_iter()
            .map(|row| row.iter().zip(x.iter()).map(|(a, b)| a * b).sum()),
    )
}

/// Quadratic form `r^H M t`.
pub fn quad_form(r: &Array1<Complex64>, m: &Array2<Complex64>, t: &Array1<Complex64>) -> Complex64 {
    inner(r, &matvec(m, t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn inner_conjugates_left_argument() {
        let x = array![Complex64::new(0.0, 1.0)];
        let y = array![Complex64::new(1.0, 0.0)];
        assert_eq!(inner(&x, &y), Complex64::new(0.0, -1.0));
    }

    #[test]
    fn quad_form_matches_manual_expansion() {
        let r = array![Complex64::new(1.0, 1.0), Complex64::new(0.5, -2.0)];
        let m = array![
            [Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)],
            [Complex64::new(-1.0, 0.5), Complex64::new(2.0, 0.0)],
        ];
        let t = array![Complex64::new(0.0, -1.0), Complex64::new(1.0, 0.25)];
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..2 {
            for j in 0..2 {
                acc += r[i].conj() * m[[i, j]] * t[j];
            }
        }
        let q = quad_form(&r, &m, &t);
        assert!((q - acc).norm() < 1e-14);
    }
}
