//! Hermitian eigensolver: Householder reduction to tridiagonal form, a
//! diagonal phase similarity that makes the tridiagonal matrix real, then
//! implicit QL with Wilkinson-style shifts.
//!
//! The same code serves real symmetric and complex Hermitian input through
//! the [`Entry`] trait.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::scalar::Real;

pub(crate) trait Entry<T: Real>:
    Copy
    + Zero
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + Send
    + Sync
{
    fn conj(self) -> Self;
    fn abs2(self) -> T;
    fn re(self) -> T;
    fn from_re(x: T) -> Self;
    fn scale(self, k: T) -> Self;
}

impl<T: Real> Entry<T> for T {
    fn conj(self) -> Self {
        self
    }
    fn abs2(self) -> T {
        self * self
    }
    fn re(self) -> T {
        self
    }
    fn from_re(x: T) -> Self {
        x
    }
    fn scale(self, k: T) -> Self {
        self * k
    }
}

impl<T: Real> Entry<T> for Complex<T> {
    fn conj(self) -> Self {
        Complex::conj(&self)
    }
    fn abs2(self) -> T {
        self.norm_sqr()
    }
    fn re(self) -> T {
        self.re
    }
    fn from_re(x: T) -> Self {
        Complex::new(x, T::zero())
    }
    fn scale(self, k: T) -> Self {
        Complex::new(self.re * k, self.im * k)
    }
}

fn unit_phase<T: Real, E: Entry<T>>(x: E) -> E {
    let a = x.abs2().sqrt();
    if a.is_zero() {
        E::from_re(T::one())
    } else {
        x.scale(T::one() / a)
    }
}

/// Eigen-decomposition of a Hermitian `n x n` row-major matrix.
///
/// Returns ascending eigenvalues and the matrix whose row `k` is the
/// eigenvector belonging to eigenvalue `k`.
pub(crate) fn eigh<T: Real, E: Entry<T>>(mut a: Vec<E>, n: usize) -> Result<(Vec<T>, Vec<E>)> {
    assert_eq!(a.len(), n * n);
    if n == 0 {
        return Ok((Vec::new(), Vec::new()));
    }
    let mut q: Vec<E> = vec![E::zero(); n * n];
    for i in 0..n {
        q[i * n + i] = E::from_re(T::one());
    }
    let two = T::lit(2.0);
    let mut v = vec![E::zero(); n];
    let mut p = vec![E::zero(); n];

    for k in 0..n.saturating_sub(2) {
        let m = n - k - 1;
        let below: T = (k + 2..n).fold(T::zero(), |s, i| s + a[i * n + k].abs2());
        if below.is_zero() {
            continue;
        }
        let x0 = a[(k + 1) * n + k];
        let x0abs = x0.abs2().sqrt();
        let xnorm = (below + x0.abs2()).sqrt();
        let ph = unit_phase(x0);
        let alpha = -ph.scale(xnorm);
        v[0] = ph.scale(x0abs + xnorm);
        for i in 1..m {
            v[i] = a[(k + 1 + i) * n + k];
        }
        let vnorm = (below + (x0abs + xnorm) * (x0abs + xnorm)).sqrt();
        for vi in v.iter_mut().take(m) {
            *vi = vi.scale(T::one() / vnorm);
        }

        // p = A_sub v, c = v^dagger p, w = p - c v, A_sub -= 2 (v w^dagger + w v^dagger)
        for i in 0..m {
            let row = &a[(k + 1 + i) * n + k + 1..(k + 1 + i) * n + n];
            let mut s = E::zero();
            for (aij, &vj) in row.iter().zip(&v[..m]) {
                s = s + *aij * vj;
            }
            p[i] = s;
        }
        let c: T = (0..m).fold(T::zero(), |s, i| s + (v[i].conj() * p[i]).re());
        for i in 0..m {
            p[i] = p[i] - v[i].scale(c);
        }
        for i in 0..m {
            let (vi, wi) = (v[i].scale(two), p[i].scale(two));
            let row = &mut a[(k + 1 + i) * n + k + 1..(k + 1 + i) * n + n];
            for j in 0..m {
                row[j] = row[j] - vi * p[j].conj() - wi * v[j].conj();
            }
        }
        a[(k + 1) * n + k] = alpha;
        a[k * n + k + 1] = alpha.conj();
        for i in k + 2..n {
            a[i * n + k] = E::zero();
            a[k * n + i] = E::zero();
        }

        // Q <- Q (I - 2 v v^dagger) on columns k+1..n
        for r in 0..n {
            let row = &mut q[r * n + k + 1..r * n + n];
            let mut t = E::zero();
            for (qj, &vj) in row.iter().zip(&v[..m]) {
                t = t + *qj * vj;
            }
            let t2 = t.scale(two);
            for (qj, &vj) in row.iter_mut().zip(&v[..m]) {
                *qj = *qj - t2 * vj.conj();
            }
        }
    }

    let mut d: Vec<T> = (0..n).map(|i| a[i * n + i].re()).collect();
    let mut e: Vec<T> = vec![T::zero(); n];
    // Phase similarity: D_{i+1} = D_i * phase(T[i+1, i]).
    let mut dphase = E::from_re(T::one());
    let mut phases = vec![dphase; n];
    for i in 0..n - 1 {
        let sub = a[(i + 1) * n + i];
        e[i] = sub.abs2().sqrt();
        dphase = dphase * unit_phase(sub);
        phases[i + 1] = dphase;
    }
    drop(a);

    // zt = (Q D)^T: row i holds column i of Q D.
    let mut zt = vec![E::zero(); n * n];
    for r in 0..n {
        for c in 0..n {
            zt[c * n + r] = q[r * n + c] * phases[c];
        }
    }
    drop(q);

    tql(&mut d, &mut e, &mut zt, n)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].partial_cmp(&d[j]).unwrap_or(std::cmp::Ordering::Equal));
    let values = order.iter().map(|&i| d[i]).collect();
    let mut vectors = Vec::with_capacity(n * n);
    for &i in &order {
        vectors.extend_from_slice(&zt[i * n..(i + 1) * n]);
    }
    Ok((values, vectors))
}

/// Implicit QL on the real tridiagonal (`d`, `e`), `e[i]` coupling `i` and
/// `i + 1`. Rotations are applied to rows of `zt`.
fn tql<T: Real, E: Entry<T>>(d: &mut [T], e: &mut [T], zt: &mut [E], n: usize) -> Result<()> {
    let eps = T::epsilon();
    let two = T::lit(2.0);
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= eps * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 100 {
                return Err(Error::EigenNoConvergence);
            }
            let mut g = (d[l + 1] - d[l]) / (two * e[l]);
            let mut r = g.hypot(T::one());
            g = d[m] - d[l] + e[l] / (g + if g >= T::zero() { r.abs() } else { -r.abs() });
            let (mut s, mut c, mut p) = (T::one(), T::one(), T::zero());
            let mut i = m;
            let mut deflated = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r.is_zero() {
                    d[i + 1] = d[i + 1] - p;
                    e[m] = T::zero();
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + two * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                let (lo, hi) = zt.split_at_mut((i + 1) * n);
                let row_i = &mut lo[i * n..(i + 1) * n];
                let row_j = &mut hi[..n];
                for (zi, zj) in row_i.iter_mut().zip(row_j.iter_mut()) {
                    let f = *zj;
                    *zj = zi.scale(s) + f.scale(c);
                    *zi = zi.scale(c) - f.scale(s);
                }
            }
            if deflated {
                continue;
            }
            d[l] = d[l] - p;
            e[l] = g;
            e[m] = T::zero();
        }
    }
    Ok(())
}
