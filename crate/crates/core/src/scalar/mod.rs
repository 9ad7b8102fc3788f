//! Scalar fields the simulator can run over.
//!
//! Every numeric routine in the crate is written against [`Real`]. Two
//! backends are provided: `f64` (standard) and [`Double`] (extended, roughly
//! 32 significant digits). The backend only changes the achievable
//! infidelity floor; physics and schedules are identical.

mod double;

pub use double::Double;

use std::fmt::{Debug, Display};
use std::str::FromStr;

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, Zero};

/// Named arithmetic backend.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Precision {
    Standard,
    Extended,
}

impl Precision {
    pub fn name(self) -> &'static str {
        match self {
            Precision::Standard => "standard",
            Precision::Extended => "extended",
        }
    }

    /// Machine epsilon of the backend, as an `f64` for reporting.
    pub fn epsilon(self) -> f64 {
        match self {
            Precision::Standard => f64::EPSILON,
            Precision::Extended => Double::epsilon().hi(),
        }
    }
}

impl Display for Precision {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Precision {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "standard" => Ok(Precision::Standard),
            "extended" => Ok(Precision::Extended),
            other => Err(format!(
                "unknown precision backend `{other}` (expected standard|extended)"
            )),
        }
    }
}

/// Real scalar field used throughout the crate.
///
/// The two matrix-product hooks have portable default implementations; a
/// backend may override them with an optimised kernel. All matrices are
/// row-major and the product overwrites `c`.
pub trait Real:
    Float + FloatConst + FromPrimitive + Debug + Display + Send + Sync + 'static
{
    const PRECISION: Precision;

    /// Converts an `f64` literal. Panics only if the backend cannot represent
    /// finite `f64` values, which neither backend does.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 literal")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// A tolerance quoted for `f64` rescaled to this backend's epsilon.
    fn tol(base: f64) -> Self {
        Self::lit(base) * (Self::epsilon() / Self::lit(f64::EPSILON))
    }

    /// `c = a * b` for `a: m x k`, `b: k x n`.
    fn gemm_complex(
        m: usize,
        k: usize,
        n: usize,
        a: &[Complex<Self>],
        b: &[Complex<Self>],
        c: &mut [Complex<Self>],
    ) {
        generic_gemm(m, k, n, a, b, c);
    }

    /// Real counterpart of [`Real::gemm_complex`].
    fn gemm_real(m: usize, k: usize, n: usize, a: &[Self], b: &[Self], c: &mut [Self]) {
        generic_gemm(m, k, n, a, b, c);
    }
}

fn generic_gemm<S>(m: usize, k: usize, n: usize, a: &[S], b: &[S], c: &mut [S])
where
    S: Copy + Zero + std::ops::Mul<Output = S>,
{
    assert!(a.len() >= m * k && b.len() >= k * n && c.len() >= m * n);
    for i in 0..m {
        let row = &mut c[i * n..(i + 1) * n];
        row.iter_mut().for_each(|x| *x = S::zero());
        for p in 0..k {
            let aip = a[i * k + p];
            if aip.is_zero() {
                continue;
            }
            let brow = &b[p * n..(p + 1) * n];
            for (cj, &bj) in row.iter_mut().zip(brow) {
                *cj = *cj + aip * bj;
            }
        }
    }
}

impl Real for f64 {
    const PRECISION: Precision = Precision::Standard;

    fn gemm_complex(
        m: usize,
        k: usize,
        n: usize,
        a: &[Complex<f64>],
        b: &[Complex<f64>],
        c: &mut [Complex<f64>],
    ) {
        assert!(a.len() >= m * k && b.len() >= k * n && c.len() >= m * n);
        if m == 0 || n == 0 {
            return;
        }
        // SAFETY: `Complex<f64>` is `repr(C)` with layout `[re, im]`, identical
        // to matrixmultiply's `c64`; bounds were asserted above.
        unsafe {
            matrixmultiply::zgemm(
                matrixmultiply::CGemmOption::Standard,
                matrixmultiply::CGemmOption::Standard,
                m,
                k,
                n,
                [1.0, 0.0],
                a.as_ptr() as *const [f64; 2],
                k as isize,
                1,
                b.as_ptr() as *const [f64; 2],
                n as isize,
                1,
                [0.0, 0.0],
                c.as_mut_ptr() as *mut [f64; 2],
                n as isize,
                1,
            );
        }
    }

    fn gemm_real(m: usize, k: usize, n: usize, a: &[f64], b: &[f64], c: &mut [f64]) {
        assert!(a.len() >= m * k && b.len() >= k * n && c.len() >= m * n);
        if m == 0 || n == 0 {
            return;
        }
        // SAFETY: plain row-major f64 buffers, bounds asserted above.
        unsafe {
            matrixmultiply::dgemm(
                m,
                k,
                n,
                1.0,
                a.as_ptr(),
                k as isize,
                1,
                b.as_ptr(),
                n as isize,
                1,
                0.0,
                c.as_mut_ptr(),
                n as isize,
                1,
            );
        }
    }
}

impl Real for Double {
    const PRECISION: Precision = Precision::Extended;
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(
        m: usize,
        k: usize,
        n: usize,
        a: &[Complex<f64>],
        b: &[Complex<f64>],
    ) -> Vec<Complex<f64>> {
        let mut c = vec![Complex::zero(); m * n];
        for i in 0..m {
            for j in 0..n {
                for p in 0..k {
                    c[i * n + j] += a[i * k + p] * b[p * n + j];
                }
            }
        }
        c
    }

    #[test]
    fn fast_kernel_matches_index_loop() {
        let (m, k, n) = (5, 7, 3);
        let a: Vec<_> = (0..m * k)
            .map(|i| Complex::new(i as f64 * 0.3 - 2.0, (i % 4) as f64))
            .collect();
        let b: Vec<_> = (0..k * n)
            .map(|i| Complex::new((i % 5) as f64, 1.0 - i as f64 * 0.1))
            .collect();
        let mut c = vec![Complex::zero(); m * n];
        f64::gemm_complex(m, k, n, &a, &b, &mut c);
        let expect = naive(m, k, n, &a, &b);
        for (x, y) in c.iter().zip(&expect) {
            assert!((x - y).norm() < 1e-12);
        }
        let mut g = vec![Complex::zero(); m * n];
        generic_gemm(m, k, n, &a, &b, &mut g);
        for (x, y) in g.iter().zip(&expect) {
            assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn tolerance_scales_with_epsilon() {
        assert_eq!(f64::tol(1e-12), 1e-12);
        let ext = Double::tol(1e-12).as_f64();
        assert!(ext > 0.0 && ext < 1e-25, "{ext}");
        assert_eq!(
            "extended".parse::<Precision>().unwrap(),
            Precision::Extended
        );
        assert!(Precision::Extended.epsilon() < 1e-30);
        assert!(Precision::Extended.epsilon() > 1e-33);
    }
}
