//! Dense complex operators and state vectors.

pub mod block;
mod eigen;
pub mod pauli;
pub mod spectrum;

use num_complex::Complex;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::scalar::Real;

pub use block::{BlockOperator, DiagonalBlock};
pub use pauli::{Axis, Basis, PauliString, PauliSum};
pub use spectrum::Spectrum;

/// Square complex matrix of power-of-two side, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator<T> {
    dim: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> Operator<T> {
    /// Zero matrix. Panics if `dim` is not a power of two.
    pub fn zeros(dim: usize) -> Self {
        assert!(
            dim.is_power_of_two(),
            "operator side {dim} is not a power of two"
        );
        Operator {
            dim,
            data: vec![Complex::zero(); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut op = Self::zeros(dim);
        for i in 0..dim {
            op.data[i * dim + i] = Complex::one();
        }
        op
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex<T>) -> Self {
        let mut op = Self::zeros(dim);
        for r in 0..dim {
            for c in 0..dim {
                op.data[r * dim + c] = f(r, c);
            }
        }
        op
    }

    /// Wraps a row-major buffer of length `dim^2`.
    pub fn from_vec(dim: usize, data: Vec<Complex<T>>) -> Result<Self> {
        if !dim.is_power_of_two() {
            return Err(Error::InvalidArgument(format!(
                "operator side {dim} is not a power of two"
            )));
        }
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: data.len(),
            });
        }
        Ok(Operator { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn qubits(&self) -> usize {
        self.dim.trailing_zeros() as usize
    }

    pub fn get(&self, r: usize, c: usize) -> Complex<T> {
        self.data[r * self.dim + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: Complex<T>) {
        self.data[r * self.dim + c] = v;
    }

    pub fn as_slice(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex<T>] {
        &mut self.data
    }

    pub fn adjoint(&self) -> Self {
        let d = self.dim;
        Self::from_fn(d, |r, c| self.data[c * d + r].conj())
    }

    pub fn scale(&self, k: Complex<T>) -> Self {
        Operator {
            dim: self.dim,
            data: self.data.iter().map(|&x| x * k).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_dim(other)?;
        Ok(Operator {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| a + b)
                .collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.same_dim(other)?;
        Ok(Operator {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| a - b)
                .collect(),
        })
    }

    /// Matrix product `self * other`.
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        self.same_dim(other)?;
        let d = self.dim;
        let mut out = Self::zeros(d);
        T::gemm_complex(d, d, d, &self.data, &other.data, &mut out.data);
        Ok(out)
    }

    /// `[self, other]`.
    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.matmul(other)?.sub(&other.matmul(self)?)
    }

    pub fn trace(&self) -> Complex<T> {
        (0..self.dim).fold(Complex::zero(), |s, i| s + self.data[i * self.dim + i])
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, z| m.max(z.norm()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        assert_eq!(self.dim, other.dim, "comparing operators of different size");
        self.data
            .iter()
            .zip(&other.data)
            .fold(T::zero(), |m, (a, b)| m.max((a - b).norm()))
    }

    /// `max |H - H^dagger|`.
    pub fn hermiticity_error(&self) -> T {
        let d = self.dim;
        let mut worst = T::zero();
        for r in 0..d {
            for c in r..d {
                worst = worst.max((self.data[r * d + c] - self.data[c * d + r].conj()).norm());
            }
        }
        worst
    }

    /// Hermitian within `1e-12` (rescaled to the backend) relative to the
    /// largest entry.
    pub fn is_hermitian(&self) -> bool {
        self.hermiticity_error() <= T::tol(1e-12) * T::one().max(self.max_abs())
    }

    pub fn ensure_hermitian(&self) -> Result<()> {
        if self.is_hermitian() {
            Ok(())
        } else {
            Err(Error::NotHermitian {
                deviation: self.hermiticity_error().as_f64(),
            })
        }
    }

    /// `max |U U^dagger - I|`.
    pub fn unitarity_error(&self) -> T {
        let p = self.matmul(&self.adjoint()).expect("square");
        p.max_abs_diff(&Self::identity(self.dim))
    }

    pub fn is_unitary(&self) -> bool {
        self.unitarity_error() < T::tol(1e-10)
    }

    pub fn apply(&self, v: &StateVector<T>) -> Result<StateVector<T>> {
        if v.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: v.dim(),
            });
        }
        let d = self.dim;
        let amps = (0..d)
            .map(|r| {
                self.data[r * d..(r + 1) * d]
                    .iter()
                    .zip(v.amplitudes())
                    .fold(Complex::zero(), |s, (a, b)| s + a * b)
            })
            .collect();
        Ok(StateVector { amps })
    }

    /// `|v><v|`.
    pub fn outer(v: &StateVector<T>) -> Self {
        let a = v.amplitudes();
        Self::from_fn(a.len(), |r, c| a[r] * a[c].conj())
    }

    /// Distance after removing the best global phase:
    /// `min_gamma max |self - e^{i gamma} other|`.
    pub fn phase_distance(&self, other: &Self) -> T {
        phase_stripped_distance(&self.data, &other.data)
    }

    fn same_dim(&self, other: &Self) -> Result<()> {
        if self.dim == other.dim {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            })
        }
    }
}

/// `min_gamma max_k |a_k - e^{i gamma} b_k|`.
///
/// The phase aligning `<b, a>` is a near-optimum for the max norm; a short
/// golden-section search around it finishes the minimisation.
pub fn phase_stripped_distance<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> T {
    assert_eq!(a.len(), b.len());
    let overlap = b
        .iter()
        .zip(a)
        .fold(Complex::zero(), |s: Complex<T>, (x, y)| s + x.conj() * y);
    let g0 = if overlap.norm().is_zero() {
        T::zero()
    } else {
        overlap.arg()
    };
    let dist = |g: T| {
        let (s, c) = g.sin_cos();
        let ph = Complex::new(c, s);
        a.iter()
            .zip(b)
            .fold(T::zero(), |m, (x, y)| m.max((x - ph * y).norm()))
    };
    let ratio = T::lit(0.618_033_988_749_894_8);
    let stop = T::epsilon() * T::lit(16.0);
    let (mut lo, mut hi) = (g0 - T::lit(0.25), g0 + T::lit(0.25));
    let (mut m1, mut m2) = (hi - (hi - lo) * ratio, lo + (hi - lo) * ratio);
    let (mut f1, mut f2) = (dist(m1), dist(m2));
    for _ in 0..200 {
        if hi - lo <= stop {
            break;
        }
        if f1 < f2 {
            hi = m2;
            (m2, f2) = (m1, f1);
            m1 = hi - (hi - lo) * ratio;
            f1 = dist(m1);
        } else {
            lo = m1;
            (m1, f1) = (m2, f2);
            m2 = lo + (hi - lo) * ratio;
            f2 = dist(m2);
        }
    }
    dist(g0).min(f1).min(f2)
}

/// Pure state of a power-of-two register.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector<T> {
    amps: Vec<Complex<T>>,
}

impl<T: Real> StateVector<T> {
    /// Normalises the given amplitudes; an all-zero vector is rejected.
    pub fn normalized(amps: Vec<Complex<T>>) -> Result<Self> {
        if !amps.len().is_power_of_two() {
            return Err(Error::InvalidArgument(format!(
                "state length {} is not a power of two",
                amps.len()
            )));
        }
        let n2 = amps.iter().fold(T::zero(), |s, z| s + z.norm_sqr());
        if n2.is_zero() || !n2.is_finite() {
            return Err(Error::NotNormalized(n2.as_f64()));
        }
        let k = T::one() / n2.sqrt();
        Ok(StateVector {
            amps: amps.into_iter().map(|z| z * k).collect(),
        })
    }

    /// Takes amplitudes as given, without normalising.
    pub fn from_amplitudes(amps: Vec<Complex<T>>) -> Result<Self> {
        if !amps.len().is_power_of_two() {
            return Err(Error::InvalidArgument(format!(
                "state length {} is not a power of two",
                amps.len()
            )));
        }
        Ok(StateVector { amps })
    }

    /// Computational basis state `|index>`.
    pub fn basis(dim: usize, index: usize) -> Self {
        assert!(dim.is_power_of_two() && index < dim);
        let mut amps = vec![Complex::zero(); dim];
        amps[index] = Complex::one();
        StateVector { amps }
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex<T>] {
        &self.amps
    }

    pub fn norm(&self) -> T {
        self.amps
            .iter()
            .fold(T::zero(), |s, z| s + z.norm_sqr())
            .sqrt()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Self) -> Complex<T> {
        self.amps
            .iter()
            .zip(&other.amps)
            .fold(Complex::zero(), |s, (a, b)| s + a.conj() * b)
    }

    pub fn kron(&self, other: &Self) -> Self {
        let mut amps = Vec::with_capacity(self.dim() * other.dim());
        for a in &self.amps {
            amps.extend(other.amps.iter().map(|b| a * b));
        }
        StateVector { amps }
    }

    pub fn scaled(&self, k: Complex<T>) -> Self {
        StateVector {
            amps: self.amps.iter().map(|&a| a * k).collect(),
        }
    }

    pub fn plus(&self, other: &Self) -> Self {
        StateVector {
            amps: self
                .amps
                .iter()
                .zip(&other.amps)
                .map(|(&a, &b)| a + b)
                .collect(),
        }
    }
}

/// Kronecker product with `a`'s index as the slow index.
pub fn kron<T: Real>(a: &Operator<T>, b: &Operator<T>) -> Operator<T> {
    let (da, db) = (a.dim(), b.dim());
    let d = da * db;
    let mut out = Operator::zeros(d);
    for i in 0..da {
        for j in 0..da {
            let aij = a.get(i, j);
            if aij.is_zero() {
                continue;
            }
            for k in 0..db {
                for l in 0..db {
                    out.data[(i * db + k) * d + j * db + l] = aij * b.get(k, l);
                }
            }
        }
    }
    out
}

/// Product of `ops` with the rightmost factor acting first. The empty product
/// is the identity of side `dim`.
pub fn compose<T: Real>(ops: &[Operator<T>], dim: usize) -> Result<Operator<T>> {
    let mut acc = Operator::identity(dim);
    for op in ops.iter().rev() {
        if op.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: op.dim(),
            });
        }
        acc = op.matmul(&acc)?;
    }
    Ok(acc)
}

/// Traces out the trailing `bath_qubits` tensor slots.
pub fn partial_trace_bath<T: Real>(
    rho: &Operator<T>,
    system_qubits: usize,
    bath_qubits: usize,
) -> Result<Operator<T>> {
    let expected = 1usize << (system_qubits + bath_qubits);
    if rho.dim() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            found: rho.dim(),
        });
    }
    let (ds, db) = (1usize << system_qubits, 1usize << bath_qubits);
    let d = rho.dim();
    let mut out = Operator::zeros(ds);
    for i in 0..ds {
        for j in 0..ds {
            let mut s = Complex::zero();
            for b in 0..db {
                s = s + rho.data[(i * db + b) * d + j * db + b];
            }
            out.data[i * ds + j] = s;
        }
    }
    Ok(out)
}

/// Largest eigenvalue magnitude of a Hermitian operator.
pub fn spectral_norm<T: Real>(h: &Operator<T>) -> Result<T> {
    Ok(Spectrum::from_operator(h)?.norm())
}

/// `exp(-i h t)` through the eigendecomposition of `h`.
pub fn expm_hermitian<T: Real>(h: &Operator<T>, t: T) -> Result<Operator<T>> {
    Ok(Spectrum::from_operator(h)?.evolve(t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    type C = Complex<f64>;

    fn c(re: f64, im: f64) -> C {
        Complex::new(re, im)
    }

    fn pauli(axis: Axis) -> Operator<f64> {
        PauliString::on(1, &[0], axis).unwrap().to_operator()
    }

    fn random_op(dim: usize, rng: &mut ChaCha8Rng) -> Operator<f64> {
        Operator::from_fn(dim, |_, _| {
            c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        })
    }

    fn random_hermitian(dim: usize, rng: &mut ChaCha8Rng) -> Operator<f64> {
        let a = random_op(dim, rng);
        a.add(&a.adjoint()).unwrap().scale(c(0.5, 0.0))
    }

    fn random_unitary(dim: usize, rng: &mut ChaCha8Rng) -> Operator<f64> {
        expm_hermitian(&random_hermitian(dim, rng), 1.0).unwrap()
    }

    fn taylor_expm(h: &Operator<f64>, t: f64) -> Operator<f64> {
        let a = h.scale(c(0.0, -t));
        let mut term = Operator::identity(h.dim());
        let mut sum = term.clone();
        for k in 1..=30 {
            term = term.matmul(&a).unwrap().scale(c(1.0 / k as f64, 0.0));
            sum = sum.add(&term).unwrap();
        }
        sum
    }

    #[test]
    fn kron_examples() {
        let i2 = Operator::<f64>::identity(2);
        assert_eq!(kron(&i2, &i2), Operator::identity(4));
        let xz = kron(&pauli(Axis::X), &pauli(Axis::Z));
        let z = pauli(Axis::Z);
        for r in 0..4 {
            for col in 0..4 {
                let block = if (r < 2) != (col < 2) {
                    z.get(r % 2, col % 2)
                } else {
                    c(0.0, 0.0)
                };
                assert_eq!(xz.get(r, col), block);
            }
        }
    }

    #[test]
    fn kron_matches_index_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (a, b) = (random_op(2, &mut rng), random_op(2, &mut rng));
        let k = kron(&a, &b);
        for i in 0..2 {
            for j in 0..2 {
                for kk in 0..2 {
                    for l in 0..2 {
                        assert_eq!(k.get(i * 2 + kk, j * 2 + l), a.get(i, j) * b.get(kk, l));
                    }
                }
            }
        }
    }

    #[test]
    fn expm_examples() {
        let z4 = Operator::<f64>::zeros(4);
        assert!(
            expm_hermitian(&z4, 3.7)
                .unwrap()
                .max_abs_diff(&Operator::identity(4))
                < 1e-15
        );
        let x = pauli(Axis::X);
        let u = expm_hermitian(&x, std::f64::consts::FRAC_PI_2).unwrap();
        assert!(u.max_abs_diff(&x.scale(c(0.0, -1.0))) < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let h = random_hermitian(4, &mut rng);
        assert!(
            expm_hermitian(&h, 0.3)
                .unwrap()
                .max_abs_diff(&taylor_expm(&h, 0.3))
                < 1e-10
        );
    }

    #[test]
    fn expm_rejects_non_hermitian() {
        let mut a = Operator::<f64>::zeros(2);
        a.set(0, 1, c(1.0, 0.0));
        assert!(matches!(
            expm_hermitian(&a, 1.0),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn partial_trace_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_op(2, &mut rng);
        let rho_s = a.matmul(&a.adjoint()).unwrap();
        let rho_s = rho_s.scale(c(1.0 / rho_s.trace().re, 0.0));
        let rho_b =
            Operator::outer(&StateVector::normalized(vec![c(1.0, 0.0), c(0.0, 2.0)]).unwrap());
        let pt = partial_trace_bath(&kron(&rho_s, &rho_b), 1, 1).unwrap();
        assert!(pt.max_abs_diff(&rho_s) < 1e-15);

        let bell =
            StateVector::normalized(vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)])
                .unwrap();
        let pt = partial_trace_bath(&Operator::outer(&bell), 1, 1).unwrap();
        assert!(pt.max_abs_diff(&Operator::identity(2).scale(c(0.5, 0.0))) < 1e-15);

        assert!(matches!(
            partial_trace_bath(&rho_s, 1, 1),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn partial_trace_matches_double_sum_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let a = random_op(4, &mut rng);
        let rho = a.matmul(&a.adjoint()).unwrap();
        let rho = rho.scale(c(1.0 / rho.trace().re, 0.0));
        let pt = partial_trace_bath(&rho, 1, 1).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let mut s = c(0.0, 0.0);
                for b in 0..2 {
                    s += rho.get(2 * i + b, 2 * j + b);
                }
                assert!((pt.get(i, j) - s).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn spectral_norm_examples() {
        assert!((spectral_norm(&pauli(Axis::Z)).unwrap() - 1.0).abs() < 1e-15);
        let ci = Operator::<f64>::identity(4).scale(c(-2.5, 0.0));
        assert!((spectral_norm(&ci).unwrap() - 2.5).abs() < 1e-15);
        let j = 3.0;
        let mut h = PauliSum::<f64>::zero(2);
        for axis in Axis::ALL {
            h.push(PauliString::on(2, &[0, 1], axis).unwrap(), j / 2.0);
        }
        assert!((spectral_norm(&h.to_operator()).unwrap() - 1.5 * j).abs() < 1e-13);
    }

    #[test]
    fn compose_examples() {
        assert_eq!(compose::<f64>(&[], 2).unwrap(), Operator::identity(2));
        let x = pauli(Axis::X);
        assert!(
            compose(&[x.clone(), x], 2)
                .unwrap()
                .max_abs_diff(&Operator::identity(2))
                < 1e-15
        );
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let us: Vec<_> = (0..3).map(|_| random_unitary(4, &mut rng)).collect();
        let pairwise = us[0].matmul(&us[1].matmul(&us[2]).unwrap()).unwrap();
        assert!(compose(&us, 4).unwrap().max_abs_diff(&pairwise) < 1e-12);
        assert!(compose(&us, 2).is_err());
    }

    #[test]
    fn phase_distance_ignores_global_phase() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let u = random_unitary(4, &mut rng);
        let v = u.scale(Complex::from_polar(1.0, 2.1));
        assert!(u.phase_distance(&v) < 1e-14);
        assert!(u.phase_distance(&Operator::identity(4)) > 0.1);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn expm_inverse_and_group_law(seed in any::<u64>(), t1 in -3.0f64..3.0, t2 in -3.0f64..3.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let h = random_hermitian(8, &mut rng);
            let s = Spectrum::from_operator(&h).unwrap();
            let id = Operator::identity(8);
            prop_assert!(s.evolve(t1).matmul(&s.evolve(-t1)).unwrap().max_abs_diff(&id) < 1e-10);
            let sum = s.evolve(t1 + t2);
            prop_assert!(sum.max_abs_diff(&s.evolve(t1).matmul(&s.evolve(t2)).unwrap()) < 1e-10);
            prop_assert!(sum.unitarity_error() < 1e-10);
        }

        #[test]
        fn partial_trace_invariants(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_op(8, &mut rng);
            let rho = a.matmul(&a.adjoint()).unwrap();
            let rho = rho.scale(c(1.0 / rho.trace().re, 0.0));
            let pt = partial_trace_bath(&rho, 2, 1).unwrap();
            prop_assert!((pt.trace() - c(1.0, 0.0)).norm() < 1e-12);
            let u = random_unitary(4, &mut rng);
            let big = kron(&u, &Operator::identity(2));
            let lhs = partial_trace_bath(&big.matmul(&rho).unwrap().matmul(&big.adjoint()).unwrap(), 2, 1).unwrap();
            let rhs = u.matmul(&pt).unwrap().matmul(&u.adjoint()).unwrap();
            prop_assert!(lhs.max_abs_diff(&rhs) < 1e-10);
            let evals = Spectrum::from_operator(&pt).unwrap().eigenvalues();
            prop_assert!(evals.iter().all(|&l| l > -1e-12));
        }

        #[test]
        fn spectral_norm_is_homogeneous(seed in any::<u64>(), k in -50.0f64..50.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let h = random_hermitian(4, &mut rng);
            let n = spectral_norm(&h).unwrap();
            let nk = spectral_norm(&h.scale(c(k, 0.0))).unwrap();
            prop_assert!((nk - k.abs() * n).abs() <= 1e-12 * (k.abs() * n).max(1e-300));
        }
    }
}
