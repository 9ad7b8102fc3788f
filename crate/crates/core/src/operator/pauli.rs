//! Pauli strings and real-weighted Pauli sums.
//!
//! Qubit `q` of an `n`-qubit register lives at bit `n - 1 - q` of a basis
//! index, so qubit 0 is the most significant (leading) tensor slot.

use std::fmt;

use num_complex::Complex;

use super::Operator;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Single-qubit Pauli axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn name(self) -> &'static str {
        match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Computational (`Z`) or Hadamard-rotated (`X`) basis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Basis {
    Z,
    X,
}

/// Tensor product of single-qubit Paulis, stored as flip (`x`) and phase
/// (`z`) bit masks. A qubit with both bits set carries `Y`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PauliString {
    n: usize,
    x: u64,
    z: u64,
}

impl PauliString {
    pub fn identity(n: usize) -> Self {
        assert!(n <= 63, "at most 63 qubits");
        PauliString { n, x: 0, z: 0 }
    }

    /// Product of `axis` on each listed qubit.
    pub fn on(n: usize, qubits: &[usize], axis: Axis) -> Result<Self> {
        let mut p = Self::identity(n);
        for &q in qubits {
            if q >= n {
                return Err(Error::IndexOutOfRange(format!(
                    "qubit {q} in a {n}-qubit register"
                )));
            }
            let bit = 1u64 << (n - 1 - q);
            match axis {
                Axis::X => p.x ^= bit,
                Axis::Z => p.z ^= bit,
                Axis::Y => {
                    p.x ^= bit;
                    p.z ^= bit;
                }
            }
        }
        Ok(p)
    }

    pub fn qubits(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    pub fn x_mask(&self) -> u64 {
        self.x
    }

    pub fn z_mask(&self) -> u64 {
        self.z
    }

    fn y_count(&self) -> u32 {
        (self.x & self.z).count_ones()
    }

    /// Matrix element `P[s ^ x, s]`.
    pub fn phase<T: Real>(&self, s: usize) -> Complex<T> {
        let sign = if (s as u64 & self.z).count_ones().is_multiple_of(2) {
            T::one()
        } else {
            -T::one()
        };
        match self.y_count() % 4 {
            0 => Complex::new(sign, T::zero()),
            1 => Complex::new(T::zero(), sign),
            2 => Complex::new(-sign, T::zero()),
            _ => Complex::new(T::zero(), -sign),
        }
    }

    /// The same operator written in the Hadamard-rotated basis, with the sign
    /// picked up by each `Y`.
    pub fn to_x_basis(&self) -> (PauliString, bool) {
        (
            PauliString {
                n: self.n,
                x: self.z,
                z: self.x,
            },
            self.y_count() % 2 == 1,
        )
    }

    pub fn commutes_with(&self, other: &PauliString) -> bool {
        ((self.x & other.z).count_ones() + (self.z & other.x).count_ones()).is_multiple_of(2)
    }

    pub fn to_operator<T: Real>(&self) -> Operator<T> {
        let d = self.dim();
        let mut op = Operator::zeros(d);
        for s in 0..d {
            op.set(s ^ self.x as usize, s, self.phase(s));
        }
        op
    }

    /// `P * a` in O(dim^2).
    pub fn apply_left<T: Real>(&self, a: &Operator<T>) -> Result<Operator<T>> {
        let d = a.dim();
        if d != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: d,
            });
        }
        let mut out = Operator::zeros(d);
        let src = a.as_slice();
        let dst = out.as_mut_slice();
        for s in 0..d {
            let r = s ^ self.x as usize;
            let ph: Complex<T> = self.phase(s);
            for (o, &v) in dst[r * d..(r + 1) * d]
                .iter_mut()
                .zip(&src[s * d..(s + 1) * d])
            {
                *o = ph * v;
            }
        }
        Ok(out)
    }

    /// `a * P` in O(dim^2).
    pub fn apply_right<T: Real>(&self, a: &Operator<T>) -> Result<Operator<T>> {
        let d = a.dim();
        if d != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: d,
            });
        }
        let phases: Vec<Complex<T>> = (0..d).map(|c| self.phase(c)).collect();
        let mut out = Operator::zeros(d);
        let src = a.as_slice();
        let dst = out.as_mut_slice();
        for r in 0..d {
            let row = &src[r * d..(r + 1) * d];
            for c in 0..d {
                dst[r * d + c] = row[c ^ self.x as usize] * phases[c];
            }
        }
        Ok(out)
    }

    /// `P |psi>` for a dense amplitude vector.
    pub fn apply_vector<T: Real>(&self, v: &[Complex<T>]) -> Vec<Complex<T>> {
        let mut out = vec![Complex::new(T::zero(), T::zero()); v.len()];
        for (s, &a) in v.iter().enumerate() {
            out[s ^ self.x as usize] = self.phase::<T>(s) * a;
        }
        out
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for q in 0..self.n {
            let bit = 1u64 << (self.n - 1 - q);
            let c = match (self.x & bit != 0, self.z & bit != 0) {
                (false, false) => 'I',
                (true, false) => 'X',
                (true, true) => 'Y',
                (false, true) => 'Z',
            };
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

/// Hermitian operator `sum_k c_k P_k` with real weights.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliSum<T> {
    n: usize,
    terms: Vec<(PauliString, T)>,
}

impl<T: Real> PauliSum<T> {
    pub fn zero(n: usize) -> Self {
        PauliSum {
            n,
            terms: Vec::new(),
        }
    }

    pub fn qubits(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    pub fn terms(&self) -> &[(PauliString, T)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|(_, c)| c.is_zero())
    }

    /// Appends a term; zero weights are dropped.
    pub fn push(&mut self, p: PauliString, c: T) {
        assert_eq!(p.qubits(), self.n, "term acts on a different register");
        if !c.is_zero() {
            self.terms.push((p, c));
        }
    }

    pub fn scaled(&self, k: T) -> Self {
        let mut out = Self::zero(self.n);
        for &(p, c) in &self.terms {
            out.push(p, c * k);
        }
        out
    }

    pub fn plus(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n, "sum of Pauli sums on different registers");
        let mut out = self.clone();
        out.terms.extend_from_slice(&other.terms);
        out
    }

    /// Keeps the terms selected by `keep`.
    pub fn filtered(&self, keep: impl Fn(&PauliString) -> bool) -> Self {
        PauliSum {
            n: self.n,
            terms: self
                .terms
                .iter()
                .copied()
                .filter(|(p, _)| keep(p))
                .collect(),
        }
    }

    /// `sum |c_k|`, an upper bound on the spectral norm.
    pub fn weight(&self) -> T {
        self.terms
            .iter()
            .fold(T::zero(), |acc, (_, c)| acc + c.abs())
    }

    /// Dense matrix in the requested basis.
    pub fn matrix(&self, basis: Basis) -> Operator<T> {
        let d = self.dim();
        let mut op = Operator::zeros(d);
        let m = op.as_mut_slice();
        for &(p, c) in &self.terms {
            let (p, c) = match basis {
                Basis::Z => (p, c),
                Basis::X => {
                    let (q, flip) = p.to_x_basis();
                    (q, if flip { -c } else { c })
                }
            };
            for s in 0..d {
                let r = s ^ p.x as usize;
                m[r * d + s] = m[r * d + s] + p.phase::<T>(s) * c;
            }
        }
        op
    }

    pub fn to_operator(&self) -> Operator<T> {
        self.matrix(Basis::Z)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pauli2(axis: Axis) -> [[Complex<f64>; 2]; 2] {
        let (o, l, i) = (
            Complex::new(0.0, 0.0),
            Complex::new(1.0, 0.0),
            Complex::new(0.0, 1.0),
        );
        match axis {
            Axis::X => [[o, l], [l, o]],
            Axis::Y => [[o, -i], [i, o]],
            Axis::Z => [[l, o], [o, -l]],
        }
    }

    #[test]
    fn single_qubit_matrices() {
        for axis in Axis::ALL {
            let op: Operator<f64> = PauliString::on(1, &[0], axis).unwrap().to_operator();
            let m = pauli2(axis);
            for (r, row) in m.iter().enumerate() {
                for (c, &want) in row.iter().enumerate() {
                    assert_eq!(op.get(r, c), want, "{axis} ({r},{c})");
                }
            }
        }
    }

    #[test]
    fn qubit_zero_is_leading_slot() {
        let p = PauliString::on(3, &[0], Axis::X).unwrap();
        assert_eq!(p.x_mask(), 0b100);
        let op: Operator<f64> = p.to_operator();
        assert_eq!(op.get(4, 0).re, 1.0);
        assert_eq!(
            format!("{}", PauliString::on(3, &[1], Axis::Y).unwrap()),
            "IYI"
        );
    }

    #[test]
    fn left_and_right_application_match_dense_product() {
        let a = Operator::<f64>::from_fn(8, |r, c| {
            Complex::new((r * 8 + c) as f64 * 0.1, r as f64 - c as f64)
        });
        let p = PauliString::on(3, &[0, 2], Axis::Y).unwrap();
        let dense: Operator<f64> = p.to_operator();
        let l = p.apply_left(&a).unwrap();
        let r = p.apply_right(&a).unwrap();
        assert!(l.max_abs_diff(&dense.matmul(&a).unwrap()) < 1e-14);
        assert!(r.max_abs_diff(&a.matmul(&dense).unwrap()) < 1e-14);
    }

    #[test]
    fn x_basis_matrix_is_hadamard_conjugate() {
        let mut h = PauliSum::<f64>::zero(2);
        h.push(PauliString::on(2, &[0, 1], Axis::Y).unwrap(), 0.7);
        h.push(PauliString::on(2, &[1], Axis::Z).unwrap(), -1.3);
        h.push(PauliString::on(2, &[0], Axis::X).unwrap(), 0.4);
        let z = h.matrix(Basis::Z);
        let x = h.matrix(Basis::X);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let had1 = Operator::from_fn(2, |r, c| {
            Complex::new(if r == 1 && c == 1 { -s } else { s }, 0.0)
        });
        let w = super::super::kron(&had1, &had1);
        let expect = w.matmul(&z).unwrap().matmul(&w).unwrap();
        assert!(x.max_abs_diff(&expect) < 1e-14);
    }

    #[test]
    fn commutation_rule() {
        let xx = PauliString::on(2, &[0, 1], Axis::X).unwrap();
        let zz = PauliString::on(2, &[0, 1], Axis::Z).unwrap();
        let zi = PauliString::on(2, &[0], Axis::Z).unwrap();
        assert!(xx.commutes_with(&zz));
        assert!(!xx.commutes_with(&zi));
    }
}
