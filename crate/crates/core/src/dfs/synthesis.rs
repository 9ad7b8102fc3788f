//! Exchange-only gate synthesis.
//!
//! Exchange sequences conserve total `S_z`, so they are simulated on the
//! `S_z = 0` sector of the system register where every swap is a
//! permutation. Angles are fitted by Levenberg-Marquardt on
//! `U P - e^{i gamma} P T`, with `P` the code basis and `T` the target.

use num_complex::Complex;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{block_basis, exchange_coefficients, project_logical, swap_slots, BLOCK_QUBITS};
use crate::error::{Error, Result};
use crate::model::{build_exchange_generator, ExchangeOp};
use crate::operator::Operator;
use crate::scalar::Real;

type Columns<T> = Vec<Vec<Complex<T>>>;

/// A fixed list of exchange pairs acting on the code basis, with the target
/// image of that basis.
struct SectorProblem<T> {
    perms: Vec<Vec<usize>>,
    start: Columns<T>,
    goal: Columns<T>,
}

impl<T: Real> SectorProblem<T> {
    fn new(blocks: usize, pairs: &[(usize, usize)], target: &Operator<T>) -> Result<Self> {
        let n = blocks * BLOCK_QUBITS;
        let states: Vec<usize> = (0..1usize << n)
            .filter(|s| s.count_ones() as usize == n / 2)
            .collect();
        let mut slot = vec![usize::MAX; 1 << n];
        for (k, &s) in states.iter().enumerate() {
            slot[s] = k;
        }
        let perms = pairs
            .iter()
            .map(|&(a, b)| {
                states
                    .iter()
                    .map(|&s| slot[swap_slots(s, n, a, b)])
                    .collect()
            })
            .collect();
        let basis = block_basis::<T>(blocks)?;
        let start: Columns<T> = basis
            .iter()
            .map(|v| states.iter().map(|&s| v.amplitudes()[s]).collect())
            .collect();
        let k = start.len();
        let goal = (0..k)
            .map(|c| {
                (0..states.len())
                    .map(|i| {
                        (0..k).fold(Complex::zero(), |acc, r| {
                            acc + start[r][i] * target.get(r, c)
                        })
                    })
                    .collect()
            })
            .collect();
        Ok(SectorProblem { perms, start, goal })
    }

    fn ops(&self) -> usize {
        self.perms.len()
    }

    fn apply(cols: &Columns<T>, perm: &[usize], (ci, cs): (Complex<T>, Complex<T>)) -> Columns<T> {
        cols.iter()
            .map(|v| (0..v.len()).map(|i| ci * v[i] + cs * v[perm[i]]).collect())
            .collect()
    }

    fn flatten(&self, image: &Columns<T>, gamma_term: impl Fn(Complex<T>) -> Complex<T>) -> Vec<T> {
        let mut out = Vec::with_capacity(2 * image.len() * image[0].len());
        for (v, g) in image.iter().zip(&self.goal) {
            for (&a, &b) in v.iter().zip(g) {
                let z = a + gamma_term(b);
                out.push(z.re);
                out.push(z.im);
            }
        }
        out
    }

    fn residual(&self, x: &[T]) -> Vec<T> {
        let mut w = self.start.clone();
        for (k, perm) in self.perms.iter().enumerate() {
            w = Self::apply(&w, perm, exchange_coefficients(x[k]));
        }
        let (s, c) = x[self.ops()].sin_cos();
        let ph = Complex::new(-c, -s);
        self.flatten(&w, |g| ph * g)
    }

    /// Residual and Jacobian columns (one per parameter).
    fn jacobian(&self, x: &[T]) -> (Vec<T>, Vec<Vec<T>>) {
        let l = self.ops();
        let mut states = vec![self.start.clone()];
        for (k, perm) in self.perms.iter().enumerate() {
            let next = Self::apply(&states[k], perm, exchange_coefficients(x[k]));
            states.push(next);
        }
        let mut cols = Vec::with_capacity(l + 1);
        for k in 0..l {
            let (s1, c1) = x[k].sin_cos();
            let (s2, c2) = (x[k] + x[k]).sin_cos();
            let g = Complex::new(c1, s1);
            let two = T::lit(2.0);
            let di = g * Complex::new(-two * s2, c2);
            let ds = g * Complex::new(s2, -two * c2);
            let mut d = Self::apply(&states[k], &self.perms[k], (di, ds));
            for (perm, &xj) in self.perms[k + 1..l].iter().zip(&x[k + 1..l]) {
                d = Self::apply(&d, perm, exchange_coefficients(xj));
            }
            cols.push(self.flatten(&d, |_| Complex::zero()));
        }
        let (s, c) = x[l].sin_cos();
        let dph = Complex::new(s, -c);
        let zero: Columns<T> = self
            .goal
            .iter()
            .map(|v| vec![Complex::zero(); v.len()])
            .collect();
        cols.push(self.flatten(&zero, |g| dph * g));
        let ph = Complex::new(-c, -s);
        (self.flatten(&states[l], |g| ph * g), cols)
    }
}

fn max_abs<T: Real>(r: &[T]) -> T {
    r.iter().fold(T::zero(), |m, v| m.max(v.abs()))
}

/// Solves `a x = b` for symmetric positive definite `a` (row-major).
fn cholesky_solve<T: Real>(a: &[T], b: &[T], n: usize) -> Option<Vec<T>> {
    let mut l = vec![T::zero(); n * n];
    for i in 0..n {
        for j in 0..=i {
            let s = (0..j).fold(a[i * n + j], |s, k| s - l[i * n + k] * l[j * n + k]);
            if i == j {
                if !(s > T::zero()) {
                    return None;
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    let mut y = vec![T::zero(); n];
    for i in 0..n {
        y[i] = (0..i).fold(b[i], |s, k| s - l[i * n + k] * y[k]) / l[i * n + i];
    }
    let mut x = vec![T::zero(); n];
    for i in (0..n).rev() {
        x[i] = (i + 1..n).fold(y[i], |s, k| s - l[k * n + i] * x[k]) / l[i * n + i];
    }
    Some(x)
}

/// Levenberg-Marquardt with Marquardt diagonal scaling, run until no step
/// lowers the cost. Returns the parameters and the largest residual entry.
fn levenberg_marquardt<T: Real>(
    mut x: Vec<T>,
    residual: impl Fn(&[T]) -> Vec<T>,
    jacobian: impl Fn(&[T]) -> (Vec<T>, Vec<Vec<T>>),
    max_iter: usize,
) -> (Vec<T>, T) {
    let n = x.len();
    let sq = |r: &[T]| r.iter().fold(T::zero(), |s, v| s + *v * *v);
    let (mut r, mut jac) = jacobian(&x);
    let mut cost = sq(&r);
    let mut lambda = T::lit(1e-3);
    let floor = T::epsilon() * T::epsilon();
    for _ in 0..max_iter {
        if cost <= floor {
            break;
        }
        let mut jtj = vec![T::zero(); n * n];
        let mut g = vec![T::zero(); n];
        for i in 0..n {
            g[i] = jac[i]
                .iter()
                .zip(&r)
                .fold(T::zero(), |s, (a, b)| s + *a * *b);
            for j in 0..=i {
                let v = jac[i]
                    .iter()
                    .zip(&jac[j])
                    .fold(T::zero(), |s, (a, b)| s + *a * *b);
                jtj[i * n + j] = v;
                jtj[j * n + i] = v;
            }
        }
        let mut improved = false;
        while lambda < T::lit(1e30) {
            let mut a = jtj.clone();
            for i in 0..n {
                a[i * n + i] = a[i * n + i] + lambda * jtj[i * n + i].max(T::lit(1e-12));
            }
            let neg_g: Vec<T> = g.iter().map(|v| -*v).collect();
            let Some(step) = cholesky_solve(&a, &neg_g, n) else {
                lambda = lambda * T::lit(4.0);
                continue;
            };
            let trial: Vec<T> = x.iter().zip(&step).map(|(a, b)| *a + *b).collect();
            let rt = residual(&trial);
            let ct = sq(&rt);
            if ct < cost {
                let tiny = step
                    .iter()
                    .zip(&x)
                    .all(|(s, v)| s.abs() <= T::epsilon() * (v.abs() + T::one()));
                x = trial;
                cost = ct;
                lambda = (lambda / T::lit(3.0)).max(T::lit(1e-15));
                improved = !tiny;
                break;
            }
            lambda = lambda * T::lit(4.0);
        }
        if !improved {
            break;
        }
        (r, jac) = jacobian(&x);
    }
    let r = residual(&x);
    (x, max_abs(&r))
}

/// Wraps an exchange angle into `(-pi/4, pi/4]`; a shift by `pi/2` changes
/// the exchange unitary only by a global phase.
fn wrap_angle<T: Real>(phi: T) -> T {
    let period = T::FRAC_PI_2();
    let mut w = phi - period * (phi / period).round();
    if w <= -T::FRAC_PI_4() {
        w = w + period;
    }
    w
}

/// Fits angles for a fixed pair list starting from `angles`; returns the
/// fitted angles and the largest residual entry.
fn refine<T: Real>(
    blocks: usize,
    pairs: &[(usize, usize)],
    target: &Operator<T>,
    angles: &[T],
    gamma: T,
    max_iter: usize,
) -> Result<(Vec<T>, T)> {
    let problem = SectorProblem::new(blocks, pairs, target)?;
    let mut x = angles.to_vec();
    x.push(gamma);
    let (x, res) = levenberg_marquardt(
        x,
        |p| problem.residual(p),
        |p| problem.jacobian(p),
        max_iter,
    );
    Ok((x[..pairs.len()].to_vec(), res))
}

fn to_ops<T: Real>(pairs: &[(usize, usize)], angles: &[T]) -> Result<Vec<ExchangeOp<T>>> {
    pairs
        .iter()
        .zip(angles)
        .map(|(&(a, b), &phi)| ExchangeOp::new(a, b, wrap_angle(phi)))
        .collect()
}

type Vec3<T> = [T; 3];

fn dot<T: Real>(a: Vec3<T>, b: Vec3<T>) -> T {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross<T: Real>(a: Vec3<T>, b: Vec3<T>) -> Vec3<T> {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

type Mat3<T> = [[T; 3]; 3];

fn mat_vec<T: Real>(m: &Mat3<T>, v: Vec3<T>) -> Vec3<T> {
    [dot(m[0], v), dot(m[1], v), dot(m[2], v)]
}

fn mat_mul<T: Real>(a: &Mat3<T>, b: &Mat3<T>) -> Mat3<T> {
    let mut out = [[T::zero(); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = (0..3).fold(T::zero(), |s, k| s + a[i][k] * b[k][j]);
        }
    }
    out
}

fn transpose3<T: Real>(m: &Mat3<T>) -> Mat3<T> {
    let mut t = *m;
    for i in 0..3 {
        for j in 0..3 {
            t[i][j] = m[j][i];
        }
    }
    t
}

/// Right-handed rotation by `theta` about unit `n`.
fn rotation<T: Real>(n: Vec3<T>, theta: T) -> Mat3<T> {
    let (s, c) = theta.sin_cos();
    let k = T::one() - c;
    let [x, y, z] = n;
    [
        [c + x * x * k, x * y * k - z * s, x * z * k + y * s],
        [y * x * k + z * s, c + y * y * k, y * z * k - x * s],
        [z * x * k - y * s, z * y * k + x * s, c + z * z * k],
    ]
}

/// Signed angle about unit `a` taking `p` to `q`, after projecting both
/// onto the plane normal to `a`; `None` if either projection vanishes.
fn angle_about<T: Real>(a: Vec3<T>, p: Vec3<T>, q: Vec3<T>) -> Option<T> {
    let proj = |v: Vec3<T>| {
        let d = dot(a, v);
        [v[0] - d * a[0], v[1] - d * a[1], v[2] - d * a[2]]
    };
    let (pp, qq) = (proj(p), proj(q));
    let tiny = T::tol(1e-9);
    if dot(pp, pp).sqrt() < tiny || dot(qq, qq).sqrt() < tiny {
        return None;
    }
    Some(dot(a, cross(pp, qq)).atan2(dot(pp, qq)))
}

/// A unit vector normal to `a`.
fn normal_to<T: Real>(a: Vec3<T>) -> Vec3<T> {
    let e = if a[0].abs() < T::lit(0.9) {
        [T::one(), T::zero(), T::zero()]
    } else {
        [T::zero(), T::one(), T::zero()]
    };
    let c = cross(a, e);
    let n = dot(c, c).sqrt();
    [c[0] / n, c[1] / n, c[2] / n]
}

/// Bloch-sphere rotation of a 2x2 unitary: `R_ij = Re tr(s_i U s_j U^dag) / 2`.
fn bloch_rotation<T: Real>(u: &Operator<T>) -> Mat3<T> {
    let i = Complex::new(T::zero(), T::one());
    let o = Complex::new(T::one(), T::zero());
    let z = Complex::zero();
    let paulis = [
        Operator::from_vec(2, vec![z, o, o, z]).expect("2x2"),
        Operator::from_vec(2, vec![z, -i, i, z]).expect("2x2"),
        Operator::from_vec(2, vec![o, z, z, -o]).expect("2x2"),
    ];
    let ud = u.adjoint();
    let mut r = [[T::zero(); 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            let m = paulis[a]
                .matmul(u)
                .and_then(|m| m.matmul(&paulis[b]))
                .and_then(|m| m.matmul(&ud));
            r[a][b] = m.expect("2x2 products").trace().re / T::lit(2.0);
        }
    }
    r
}

/// Logical action of `sigma_a . sigma_b` on one block as `c I + v . sigma`;
/// returns the unit axis and `|v|`.
fn pair_axis<T: Real>(pair: (usize, usize)) -> Result<(Vec3<T>, T)> {
    let h = build_exchange_generator::<T>(BLOCK_QUBITS, BLOCK_QUBITS, &[(pair, T::one())])?
        .to_operator();
    let (m, _) = project_logical(&h, 1)?;
    let v = [
        m.get(0, 1).re,
        -m.get(0, 1).im,
        (m.get(0, 0).re - m.get(1, 1).re) / T::lit(2.0),
    ];
    let norm = dot(v, v).sqrt();
    Ok(([v[0] / norm, v[1] / norm, v[2] / norm], norm))
}

/// `R = Rot(a, alpha) Rot(b, beta) Rot(a, gamma)` for unit axes `a`, `b`;
/// `None` when `R` is out of reach of this axis pair.
fn davenport<T: Real>(r: &Mat3<T>, a: Vec3<T>, b: Vec3<T>) -> Option<(T, T, T)> {
    let c = dot(a, b);
    let s2 = T::one() - c * c;
    let ra = mat_vec(r, a);
    let cos_beta = (dot(a, ra) - c * c) / s2;
    let slack = T::tol(1e-12);
    if cos_beta.abs() > T::one() + slack {
        return None;
    }
    let beta = cos_beta.max(-T::one()).min(T::one()).acos();
    let u = mat_vec(&rotation(b, beta), a);
    let alpha = angle_about(a, u, ra).unwrap_or(T::zero());
    let head = mat_mul(&rotation(a, alpha), &rotation(b, beta));
    let rest = mat_mul(&transpose3(&head), r);
    let p = normal_to(a);
    let gamma = angle_about(a, p, mat_vec(&rest, p))?;
    let rebuilt = mat_mul(&head, &rotation(a, gamma));
    let err = (0..3)
        .flat_map(|i| (0..3).map(move |j| (i, j)))
        .fold(T::zero(), |m, (i, j)| {
            m.max((rebuilt[i][j] - r[i][j]).abs())
        });
    (err < T::tol(1e-8)).then_some((alpha, beta, gamma))
}

/// Refines `angles` for `pairs` towards `target` on one block; returns the
/// ops if the result verifies within `tol`.
fn polish<T: Real>(
    target: &Operator<T>,
    pairs: &[(usize, usize)],
    angles: &[T],
    max_iter: usize,
    tol: T,
) -> Result<Option<Vec<ExchangeOp<T>>>> {
    let ops = to_ops(pairs, angles)?;
    let u = super::exchange_unitary(BLOCK_QUBITS, &ops)?;
    let (m, _) = project_logical(&u, 1)?;
    let overlap = (0..2).fold(Complex::zero(), |s: Complex<T>, k| {
        s + (0..2).fold(Complex::zero(), |t, j| {
            t + target.get(j, k).conj() * m.get(j, k)
        })
    });
    let (refined, _) = refine(1, pairs, target, angles, overlap.arg(), max_iter)?;
    let ops = to_ops(pairs, &refined)?;
    let u = super::exchange_unitary(BLOCK_QUBITS, &ops)?;
    let (m, leak) = project_logical(&u, 1)?;
    Ok((m.phase_distance(target) < tol && leak < tol).then_some(ops))
}

/// Exchange sequence on one block realising a logical 2x2 unitary up to
/// global phase: a single exchange when the target is a rotation about one
/// pair axis, otherwise a three-exchange Euler form on slots (0,1)/(1,2),
/// falling back to (1,2)/(0,1), (1,2)/(0,2) and finally to products over
/// all three pair axes.
pub fn synthesize_single_qubit_gate<T: Real>(target: &Operator<T>) -> Result<Vec<ExchangeOp<T>>> {
    if target.dim() != 2 || !target.is_unitary() {
        return Err(Error::SynthesisFailed(
            "target must be a 2x2 unitary".into(),
        ));
    }
    let tol = T::lit(1e-10);
    if target.phase_distance(&Operator::identity(2)) < T::tol(1e-14) {
        return Ok(Vec::new());
    }
    let r = bloch_rotation(target);
    let z01 = (0, 1);
    let n12 = (1, 2);
    let n02 = (0, 2);

    let mut candidates: Vec<Vec<((usize, usize), T)>> = Vec::new();
    for pair in [z01, n12, n02] {
        let (a, norm) = pair_axis::<T>(pair)?;
        let ra = mat_vec(&r, a);
        let fixed = (0..3).all(|k| (ra[k] - a[k]).abs() < T::tol(1e-12));
        if fixed {
            let p = normal_to(a);
            if let Some(theta) = angle_about(a, p, mat_vec(&r, p)) {
                candidates.push(vec![(pair, theta / (T::lit(2.0) * norm))]);
            }
        }
    }
    for (pa, pb) in [(z01, n12), (n12, z01), (n12, n02)] {
        let (a, na) = pair_axis::<T>(pa)?;
        let (b, nb) = pair_axis::<T>(pb)?;
        if let Some((alpha, beta, gamma)) = davenport(&r, a, b) {
            let two = T::lit(2.0);
            candidates.push(vec![
                (pa, gamma / (two * na)),
                (pb, beta / (two * nb)),
                (pa, alpha / (two * na)),
            ]);
        }
    }

    for cand in candidates {
        let pairs: Vec<(usize, usize)> = cand.iter().map(|c| c.0).collect();
        let angles: Vec<T> = cand.iter().map(|c| c.1).collect();
        if let Some(ops) = polish(target, &pairs, &angles, 50, tol)? {
            return Ok(ops);
        }
    }
    // three distinct axes reach the rotations no Euler pair covers
    let grid = [-0.6, -0.2, 0.2, 0.6];
    for pairs in [
        [z01, n12, n02],
        [z01, n02, n12],
        [n12, z01, n02],
        [n12, n02, z01],
        [n02, z01, n12],
        [n02, n12, z01],
    ] {
        for &a in &grid {
            for &b in &grid {
                for &c in &grid {
                    let start = [T::lit(a), T::lit(b), T::lit(c)];
                    if let Some(ops) = polish(target, &pairs, &start, 200, tol)? {
                        return Ok(ops);
                    }
                }
            }
        }
    }
    Err(Error::SynthesisFailed(
        "no exchange sequence of length at most 3 reaches the target".into(),
    ))
}

/// Result of a controlled-phase search.
#[derive(Clone, Debug, PartialEq)]
pub struct CphaseSynthesis<T> {
    pub ops: Vec<ExchangeOp<T>>,
    /// Random starts consumed, including the successful one.
    pub restarts: usize,
    /// Largest residual entry of the fitted sequence.
    pub residual: T,
}

/// Pairs cycled by the controlled-phase search: the chain across slots
/// 1..=5, which spans both blocks.
pub const CPHASE_PAIRS: [(usize, usize); 4] = [(1, 2), (2, 3), (3, 4), (4, 5)];

const CPHASE_RESTARTS: usize = 64;
const CPHASE_ACCEPT: f64 = 1e-8;

/// Searches exchange angles for `diag(1, 1, 1, -1)` on two blocks; random
/// starts are drawn from a ChaCha stream seeded by `seed`. The search runs
/// in double precision and is then polished in `T`.
pub fn synthesize_cphase<T: Real>(seed: u64, length: usize) -> Result<CphaseSynthesis<T>> {
    if length == 0 {
        return Err(Error::SynthesisFailed(
            "controlled-phase sequence length must be positive".into(),
        ));
    }
    let pairs: Vec<(usize, usize)> = (0..length)
        .map(|k| CPHASE_PAIRS[k % CPHASE_PAIRS.len()])
        .collect();
    let target64 = super::gate_target::<f64>(super::GateName::Cphase);
    let problem = SectorProblem::new(2, &pairs, &target64)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half_pi = std::f64::consts::FRAC_PI_2;
    for restart in 1..=CPHASE_RESTARTS {
        let x0: Vec<f64> = (0..=length)
            .map(|_| rng.gen_range(-half_pi..half_pi))
            .collect();
        let (x, res) =
            levenberg_marquardt(x0, |p| problem.residual(p), |p| problem.jacobian(p), 5000);
        if res < CPHASE_ACCEPT {
            let target = super::gate_target::<T>(super::GateName::Cphase);
            let start: Vec<T> = x.iter().map(|&v| T::lit(v)).collect();
            let (angles, residual) = if T::PRECISION == crate::scalar::Precision::Standard {
                (start[..length].to_vec(), T::lit(res))
            } else {
                refine(2, &pairs, &target, &start[..length], start[length], 30)?
            };
            return Ok(CphaseSynthesis {
                ops: to_ops(&pairs, &angles)?,
                restarts: restart,
                residual,
            });
        }
    }
    Err(Error::SynthesisFailed(format!(
        "no controlled-phase sequence of length {length} found in {CPHASE_RESTARTS} starts (seed {seed})"
    )))
}
