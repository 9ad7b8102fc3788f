//! Operators that are block diagonal in the computational or the
//! Hadamard-rotated basis.

use std::sync::Arc;

use num_complex::Complex;
use num_traits::Zero;

use super::pauli::{Basis, PauliString};
use super::Operator;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// One diagonal block: the basis indices it spans and its dense row-major
/// entries.
#[derive(Clone, Debug)]
pub struct DiagonalBlock<T> {
    pub idx: Arc<[usize]>,
    pub data: Vec<Complex<T>>,
}

/// Block-diagonal operator written in `basis`.
#[derive(Clone, Debug)]
pub struct BlockOperator<T> {
    dim: usize,
    basis: Basis,
    blocks: Vec<DiagonalBlock<T>>,
}

impl<T: Real> BlockOperator<T> {
    /// Blocks must partition `0..dim`.
    pub fn new(dim: usize, basis: Basis, blocks: Vec<DiagonalBlock<T>>) -> Result<Self> {
        let mut seen = vec![false; dim];
        for b in &blocks {
            let n = b.idx.len();
            if b.data.len() != n * n {
                return Err(Error::DimensionMismatch {
                    expected: n * n,
                    found: b.data.len(),
                });
            }
            for &i in b.idx.iter() {
                if i >= dim || seen[i] {
                    return Err(Error::IndexOutOfRange(format!(
                        "block index {i} in dimension {dim}"
                    )));
                }
                seen[i] = true;
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::InvalidArgument(
                "blocks do not cover every basis state".into(),
            ));
        }
        Ok(BlockOperator { dim, basis, blocks })
    }

    pub(crate) fn from_parts(dim: usize, basis: Basis, blocks: Vec<DiagonalBlock<T>>) -> Self {
        BlockOperator { dim, basis, blocks }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn blocks(&self) -> &[DiagonalBlock<T>] {
        &self.blocks
    }

    /// Dense form in the computational basis.
    pub fn to_operator(&self) -> Operator<T> {
        let mut u = Operator::zeros(self.dim);
        for b in &self.blocks {
            let n = b.idx.len();
            for (a, &r) in b.idx.iter().enumerate() {
                for (c, &col) in b.idx.iter().enumerate() {
                    u.set(r, col, b.data[a * n + c]);
                }
            }
        }
        if self.basis == Basis::X {
            hadamard_conjugate(&mut u);
        }
        u
    }

    fn same_partition(&self, other: &Self) -> bool {
        self.dim == other.dim
            && self.basis == other.basis
            && self.blocks.len() == other.blocks.len()
            && self
                .blocks
                .iter()
                .zip(&other.blocks)
                .all(|(a, b)| Arc::ptr_eq(&a.idx, &b.idx) || a.idx == b.idx)
    }

    /// `self * other` when both share a block structure.
    pub fn matmul(&self, other: &Self) -> Option<Self> {
        if !self.same_partition(other) {
            return None;
        }
        let blocks = self
            .blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| {
                let n = a.idx.len();
                let mut data = vec![Complex::zero(); n * n];
                T::gemm_complex(n, n, n, &a.data, &b.data, &mut data);
                DiagonalBlock {
                    idx: a.idx.clone(),
                    data,
                }
            })
            .collect();
        Some(BlockOperator {
            dim: self.dim,
            basis: self.basis,
            blocks,
        })
    }

    /// Diagonal entries of `p` in this operator's basis, if `p` is diagonal
    /// there.
    fn pauli_diagonal(&self, p: &PauliString) -> Option<Vec<Complex<T>>> {
        if p.dim() != self.dim {
            return None;
        }
        let (q, negate) = match self.basis {
            Basis::Z => (*p, false),
            Basis::X => p.to_x_basis(),
        };
        if q.x_mask() != 0 {
            return None;
        }
        Some(
            (0..self.dim)
                .map(|s| {
                    let ph: Complex<T> = q.phase(s);
                    if negate {
                        -ph
                    } else {
                        ph
                    }
                })
                .collect(),
        )
    }

    /// `p * self`, kept block diagonal when `p` is diagonal in this basis.
    pub fn pauli_left(&self, p: &PauliString) -> Option<Self> {
        let diag = self.pauli_diagonal(p)?;
        let mut out = self.clone();
        for b in &mut out.blocks {
            let n = b.idx.len();
            for (a, &r) in b.idx.iter().enumerate() {
                b.data[a * n..(a + 1) * n]
                    .iter_mut()
                    .for_each(|z| *z = *z * diag[r]);
            }
        }
        Some(out)
    }

    /// `self * p`, kept block diagonal when `p` is diagonal in this basis.
    pub fn pauli_right(&self, p: &PauliString) -> Option<Self> {
        let diag = self.pauli_diagonal(p)?;
        let mut out = self.clone();
        for b in &mut out.blocks {
            let n = b.idx.len();
            for row in b.data.chunks_mut(n) {
                for (z, &c) in row.iter_mut().zip(b.idx.iter()) {
                    *z = *z * diag[c];
                }
            }
        }
        Some(out)
    }

    /// `self * m` for a dense computational-basis `m`.
    pub fn mul_dense(&self, m: &Operator<T>) -> Result<Operator<T>> {
        let d = self.check_dim(m)?;
        let mut mb = m.clone();
        self.to_own_basis(&mut mb);
        let mut out = Operator::zeros(d);
        for b in &self.blocks {
            let n = b.idx.len();
            let mut rows = Vec::with_capacity(n * d);
            for &r in b.idx.iter() {
                rows.extend_from_slice(&mb.as_slice()[r * d..(r + 1) * d]);
            }
            let mut prod = vec![Complex::zero(); n * d];
            T::gemm_complex(n, n, d, &b.data, &rows, &mut prod);
            let dst = out.as_mut_slice();
            for (a, &r) in b.idx.iter().enumerate() {
                dst[r * d..(r + 1) * d].copy_from_slice(&prod[a * d..(a + 1) * d]);
            }
        }
        self.to_own_basis(&mut out);
        Ok(out)
    }

    /// `m * self` for a dense computational-basis `m`.
    pub fn dense_mul(&self, m: &Operator<T>) -> Result<Operator<T>> {
        let d = self.check_dim(m)?;
        let mut mb = m.clone();
        self.to_own_basis(&mut mb);
        let mut out = Operator::zeros(d);
        for b in &self.blocks {
            let n = b.idx.len();
            let mut cols = Vec::with_capacity(d * n);
            for r in 0..d {
                let row = &mb.as_slice()[r * d..(r + 1) * d];
                cols.extend(b.idx.iter().map(|&c| row[c]));
            }
            let mut prod = vec![Complex::zero(); d * n];
            T::gemm_complex(d, n, n, &cols, &b.data, &mut prod);
            let dst = out.as_mut_slice();
            for r in 0..d {
                for (a, &c) in b.idx.iter().enumerate() {
                    dst[r * d + c] = prod[r * n + a];
                }
            }
        }
        self.to_own_basis(&mut out);
        Ok(out)
    }

    /// `self |v>` for computational-basis amplitudes.
    pub fn apply_vector(&self, v: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: v.len(),
            });
        }
        let mut w = v.to_vec();
        if self.basis == Basis::X {
            hadamard_vector(&mut w);
        }
        let mut out = vec![Complex::zero(); self.dim];
        for b in &self.blocks {
            let n = b.idx.len();
            for (a, &r) in b.idx.iter().enumerate() {
                let row = &b.data[a * n..(a + 1) * n];
                out[r] = row
                    .iter()
                    .zip(b.idx.iter())
                    .fold(Complex::zero(), |s, (&x, &c)| s + x * w[c]);
            }
        }
        if self.basis == Basis::X {
            hadamard_vector(&mut out);
        }
        Ok(out)
    }

    fn check_dim(&self, m: &Operator<T>) -> Result<usize> {
        if m.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: m.dim(),
            });
        }
        Ok(self.dim)
    }

    fn to_own_basis(&self, m: &mut Operator<T>) {
        if self.basis == Basis::X {
            hadamard_conjugate(m);
        }
    }
}

fn fwht<T: Real>(v: &mut [Complex<T>]) {
    let d = v.len();
    let mut h = 1;
    while h < d {
        for start in (0..d).step_by(2 * h) {
            for i in start..start + h {
                let (x, y) = (v[i], v[i + h]);
                v[i] = x + y;
                v[i + h] = x - y;
            }
        }
        h *= 2;
    }
}

/// Normalised Walsh-Hadamard transform of a vector; an involution.
pub(crate) fn hadamard_vector<T: Real>(v: &mut [Complex<T>]) {
    fwht(v);
    let k = T::one()
        / T::from_usize(v.len())
            .expect("dimension fits the scalar type")
            .sqrt();
    v.iter_mut().for_each(|x| *x = *x * k);
}

/// `W U W / d` with `W` the unnormalised Walsh-Hadamard matrix.
pub(crate) fn hadamard_conjugate<T: Real>(u: &mut Operator<T>) {
    let d = u.dim();
    let a = u.as_mut_slice();
    for row in a.chunks_mut(d) {
        fwht(row);
    }
    let mut h = 1;
    while h < d {
        for start in (0..d).step_by(2 * h) {
            for i in start..start + h {
                let (top, bottom) = a.split_at_mut((i + h) * d);
                let ri = &mut top[i * d..(i + 1) * d];
                let rj = &mut bottom[..d];
                for (x, y) in ri.iter_mut().zip(rj.iter_mut()) {
                    let (p, q) = (*x, *y);
                    *x = p + q;
                    *y = p - q;
                }
            }
        }
        h *= 2;
    }
    let k = T::one() / T::from_usize(d).expect("dimension fits the scalar type");
    for x in a.iter_mut() {
        *x = *x * k;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::pauli::{Axis, PauliSum};
    use crate::operator::Spectrum;

    fn xx_chain(n: usize, w: f64) -> PauliSum<f64> {
        let mut h = PauliSum::zero(n);
        for q in 0..n - 1 {
            for (axis, k) in [(Axis::X, -2.0 * w), (Axis::Y, w), (Axis::Z, 1.0)] {
                h.push(PauliString::on(n, &[q, q + 1], axis).unwrap(), k);
            }
        }
        h.push(PauliString::on(n, &[0], Axis::X).unwrap(), 0.3);
        h
    }

    fn dense_random(d: usize, seed: u64) -> Operator<f64> {
        let mut s = seed;
        Operator::from_fn(d, |_, _| {
            s = s
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            let a = (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
            s = s
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            let b = (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
            Complex::new(a, b)
        })
    }

    #[test]
    fn products_match_dense_arithmetic() {
        let h = xx_chain(4, 0.7);
        let s = Spectrum::from_pauli_sum(&h).unwrap();
        assert_eq!(s.basis(), Basis::X);
        let (a, b) = (s.evolve_blocks(0.4), s.evolve_blocks(-1.3));
        let (da, db) = (a.to_operator(), b.to_operator());
        let m = dense_random(16, 7);
        assert!(
            a.matmul(&b)
                .unwrap()
                .to_operator()
                .max_abs_diff(&da.matmul(&db).unwrap())
                < 1e-13
        );
        assert!(
            a.mul_dense(&m)
                .unwrap()
                .max_abs_diff(&da.matmul(&m).unwrap())
                < 1e-13
        );
        assert!(
            a.dense_mul(&m)
                .unwrap()
                .max_abs_diff(&m.matmul(&da).unwrap())
                < 1e-13
        );
        let v: Vec<Complex<f64>> = (0..16)
            .map(|k| Complex::new(k as f64, 1.0 - k as f64))
            .collect();
        let want = da
            .apply(&crate::operator::StateVector::from_amplitudes(v.clone()).unwrap())
            .unwrap();
        let got = a.apply_vector(&v).unwrap();
        for (x, y) in got.iter().zip(want.amplitudes()) {
            assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn diagonal_paulis_keep_block_form() {
        let s = Spectrum::from_pauli_sum(&xx_chain(4, 0.7)).unwrap();
        let u = s.evolve_blocks(0.9);
        let du = u.to_operator();
        let xs = PauliString::on(4, &[0, 1, 2, 3], Axis::X).unwrap();
        let left = u.pauli_left(&xs).unwrap().to_operator();
        assert!(left.max_abs_diff(&xs.apply_left(&du).unwrap()) < 1e-13);
        let right = u.pauli_right(&xs).unwrap().to_operator();
        assert!(right.max_abs_diff(&xs.apply_right(&du).unwrap()) < 1e-13);
        let ys = PauliString::on(4, &[1, 2], Axis::Y).unwrap();
        assert!(u.pauli_left(&ys).is_none());
        let zs = PauliString::on(4, &[0, 1, 2, 3], Axis::Z).unwrap();
        assert!(u.pauli_right(&zs).is_none());
    }

    #[test]
    fn new_rejects_overlapping_blocks() {
        let blk = |idx: Vec<usize>| DiagonalBlock::<f64> {
            data: vec![Complex::zero(); idx.len() * idx.len()],
            idx: idx.into(),
        };
        assert!(BlockOperator::new(2, Basis::Z, vec![blk(vec![0]), blk(vec![1])]).is_ok());
        assert!(BlockOperator::new(2, Basis::Z, vec![blk(vec![0, 1]), blk(vec![1])]).is_err());
        assert!(BlockOperator::new(3, Basis::Z, vec![blk(vec![0, 1])]).is_err());
    }

    #[test]
    fn hadamard_conjugation_is_involutive() {
        let mut u = Operator::<f64>::from_fn(8, |r, c| {
            Complex::new(r as f64 - 2.0 * c as f64, (r * c) as f64)
        });
        let orig = u.clone();
        hadamard_conjugate(&mut u);
        hadamard_conjugate(&mut u);
        assert!(u.max_abs_diff(&orig) < 1e-12);
    }

    #[test]
    fn hadamard_vector_is_an_involution() {
        let v: Vec<Complex<f64>> = (0..8)
            .map(|k| Complex::new(k as f64, -(k as f64).sqrt()))
            .collect();
        let mut w = v.clone();
        hadamard_vector(&mut w);
        hadamard_vector(&mut w);
        for (a, b) in v.iter().zip(&w) {
            assert!((a - b).norm() < 1e-13);
        }
    }
}
