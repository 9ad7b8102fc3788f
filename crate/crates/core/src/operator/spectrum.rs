//! Block-diagonal spectral decompositions.
//!
//! A Hermitian matrix whose nonzero pattern splits into connected components
//! is diagonalised block by block. Pauli sums can additionally be written in
//! the Hadamard-rotated basis, where operators conserving total `S_x` become
//! block diagonal; the cheaper of the two bases is used.

use std::sync::Arc;

use num_complex::Complex;
use num_traits::Zero;

use super::block::{BlockOperator, DiagonalBlock};
use super::eigen::eigh;
use super::pauli::{Basis, PauliSum};
use super::Operator;
use crate::error::Result;
use crate::scalar::Real;

#[derive(Clone, Debug)]
enum Vectors<T> {
    /// `v` has eigenvectors as columns, `vt` is its transpose.
    Real { v: Vec<T>, vt: Vec<T> },
    /// `vh` is the conjugate transpose of `v`.
    Complex {
        v: Vec<Complex<T>>,
        vh: Vec<Complex<T>>,
    },
}

#[derive(Clone, Debug)]
struct Block<T> {
    idx: Arc<[usize]>,
    values: Vec<T>,
    vectors: Vectors<T>,
}

/// Eigen-decomposition of a Hermitian operator, reusable for any evolution
/// time.
#[derive(Clone, Debug)]
pub struct Spectrum<T> {
    dim: usize,
    basis: Basis,
    blocks: Vec<Block<T>>,
}

impl<T: Real> Spectrum<T> {
    /// Decomposes a dense Hermitian operator in the computational basis.
    pub fn from_operator(h: &Operator<T>) -> Result<Self> {
        h.ensure_hermitian()?;
        let sectors = sectors(h);
        Self::decompose(h, Basis::Z, &sectors)
    }

    /// Decomposes a Pauli sum in whichever basis yields the smaller blocks.
    pub fn from_pauli_sum(h: &PauliSum<T>) -> Result<Self> {
        let mz = h.matrix(Basis::Z);
        let sz = sectors(&mz);
        let mx = h.matrix(Basis::X);
        let sx = sectors(&mx);
        if cost(&sx) < cost(&sz) {
            Self::decompose(&mx, Basis::X, &sx)
        } else {
            Self::decompose(&mz, Basis::Z, &sz)
        }
    }

    fn decompose(m: &Operator<T>, basis: Basis, sectors: &[Vec<usize>]) -> Result<Self> {
        let d = m.dim();
        let mut blocks = Vec::with_capacity(sectors.len());
        for idx in sectors {
            let n = idx.len();
            let sub: Vec<Complex<T>> = idx
                .iter()
                .flat_map(|&r| idx.iter().map(move |&c| m.get(r, c)))
                .collect();
            let block = if sub.iter().all(|z| z.im.is_zero()) {
                let re: Vec<T> = sub.iter().map(|z| z.re).collect();
                let (values, rows) = eigh::<T, T>(re, n)?;
                Block {
                    idx: idx.as_slice().into(),
                    values,
                    vectors: Vectors::Real {
                        v: transpose(&rows, n),
                        vt: rows,
                    },
                }
            } else {
                let (values, rows) = eigh::<T, Complex<T>>(sub, n)?;
                let vh = rows.iter().map(|z| z.conj()).collect();
                Block {
                    idx: idx.as_slice().into(),
                    values,
                    vectors: Vectors::Complex {
                        v: transpose(&rows, n),
                        vh,
                    },
                }
            };
            blocks.push(block);
        }
        Ok(Spectrum {
            dim: d,
            basis,
            blocks,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.idx.len()).collect()
    }

    /// All eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<T> {
        let mut v: Vec<T> = self
            .blocks
            .iter()
            .flat_map(|b| b.values.iter().copied())
            .collect();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        v
    }

    /// `max |lambda|`.
    pub fn norm(&self) -> T {
        self.blocks
            .iter()
            .flat_map(|b| b.values.iter())
            .fold(T::zero(), |m, l| m.max(l.abs()))
    }

    /// `exp(-i H t)` in the computational basis.
    pub fn evolve(&self, t: T) -> Operator<T> {
        self.evolve_blocks(t).to_operator()
    }

    /// `exp(-i H t)` kept in block form in the decomposition basis.
    pub fn evolve_blocks(&self, t: T) -> BlockOperator<T> {
        let blocks = self
            .blocks
            .iter()
            .map(|b| {
                let n = b.idx.len();
                let phases: Vec<(T, T)> = b.values.iter().map(|&l| (l * t).sin_cos()).collect();
                let data: Vec<Complex<T>> = match &b.vectors {
                    Vectors::Real { v, vt } => {
                        let mut bc = vt.clone();
                        let mut bs = vt.clone();
                        for (k, &(s, c)) in phases.iter().enumerate() {
                            for j in 0..n {
                                bc[k * n + j] = bc[k * n + j] * c;
                                bs[k * n + j] = bs[k * n + j] * s;
                            }
                        }
                        let mut cm = vec![T::zero(); n * n];
                        let mut sm = vec![T::zero(); n * n];
                        T::gemm_real(n, n, n, v, &bc, &mut cm);
                        T::gemm_real(n, n, n, v, &bs, &mut sm);
                        cm.iter()
                            .zip(&sm)
                            .map(|(&c, &s)| Complex::new(c, -s))
                            .collect()
                    }
                    Vectors::Complex { v, vh } => {
                        let mut bm = vh.clone();
                        for (k, &(s, c)) in phases.iter().enumerate() {
                            let e = Complex::new(c, -s);
                            for j in 0..n {
                                bm[k * n + j] = bm[k * n + j] * e;
                            }
                        }
                        let mut out = vec![Complex::zero(); n * n];
                        T::gemm_complex(n, n, n, v, &bm, &mut out);
                        out
                    }
                };
                DiagonalBlock {
                    idx: b.idx.clone(),
                    data,
                }
            })
            .collect();
        BlockOperator::from_parts(self.dim, self.basis, blocks)
    }
}

fn transpose<E: Copy>(a: &[E], n: usize) -> Vec<E> {
    let mut t = Vec::with_capacity(n * n);
    for c in 0..n {
        for r in 0..n {
            t.push(a[r * n + c]);
        }
    }
    t
}

fn cost(sectors: &[Vec<usize>]) -> f64 {
    sectors.iter().map(|s| (s.len() as f64).powi(3)).sum()
}

/// Connected components of the off-diagonal nonzero pattern, each sorted,
/// ordered by smallest member.
fn sectors<T: Real>(m: &Operator<T>) -> Vec<Vec<usize>> {
    let d = m.dim();
    let mut parent: Vec<usize> = (0..d).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for r in 0..d {
        for c in r + 1..d {
            if !m.get(r, c).is_zero() || !m.get(c, r).is_zero() {
                let (a, b) = (find(&mut parent, r), find(&mut parent, c));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; d];
    for i in 0..d {
        let root = find(&mut parent, i);
        if slot[root] == usize::MAX {
            slot[root] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot[root]].push(i);
    }
    groups
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::pauli::{Axis, PauliString};

    fn heisenberg_chain(n: usize) -> PauliSum<f64> {
        let mut h = PauliSum::zero(n);
        for q in 0..n - 1 {
            for axis in Axis::ALL {
                h.push(
                    PauliString::on(n, &[q, q + 1], axis).unwrap(),
                    0.3 + q as f64 * 0.1,
                );
            }
        }
        h
    }

    #[test]
    fn both_bases_agree_with_dense_path() {
        let mut h = heisenberg_chain(5);
        // breaks S_z conservation but keeps S_x: prefers the rotated basis
        for (a, b) in [(0, 3), (1, 4)] {
            h.push(PauliString::on(5, &[a, b], Axis::Y).unwrap(), 0.7);
            h.push(PauliString::on(5, &[a, b], Axis::Z).unwrap(), 0.7);
            h.push(PauliString::on(5, &[a, b], Axis::X).unwrap(), -1.4);
        }
        let s = Spectrum::from_pauli_sum(&h).unwrap();
        assert_eq!(s.basis(), Basis::X);
        assert_eq!(s.block_sizes().iter().max(), Some(&10));
        let dense = Spectrum::from_operator(&h.to_operator()).unwrap();
        assert!(s.evolve(0.9).max_abs_diff(&dense.evolve(0.9)) < 1e-12);
        let ev_a = s.eigenvalues();
        let ev_b = dense.eigenvalues();
        assert!(ev_a.iter().zip(&ev_b).all(|(a, b)| (a - b).abs() < 1e-12));
    }

    #[test]
    fn conserving_sum_splits_in_computational_basis() {
        let mut h = heisenberg_chain(4);
        h.push(PauliString::on(4, &[2], Axis::Z).unwrap(), 0.25);
        let s = Spectrum::from_pauli_sum(&h).unwrap();
        let mut sizes = s.block_sizes();
        sizes.sort();
        assert_eq!(sizes, vec![1, 1, 4, 4, 6]);
        let u = s.evolve(1.3);
        assert!(u.unitarity_error() < 1e-13);
    }
}
