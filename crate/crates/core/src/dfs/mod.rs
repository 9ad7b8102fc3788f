//! Four-spin decoherence-free code: logical states, encoding, global pulses,
//! projection onto the code space and the encoded gate library.
//!
//! Within a block, slot 0 is the most significant bit and spin up is bit 0.
//! With two blocks the first block is the slow tensor factor.

mod seqfile;
mod synthesis;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use num_complex::Complex;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::model::ExchangeOp;
use crate::operator::{Axis, Operator, PauliString, StateVector};
use crate::scalar::Real;

pub use seqfile::{format_sequence, load_sequence, parse_sequence};
pub use synthesis::{synthesize_cphase, synthesize_single_qubit_gate, CphaseSynthesis};

/// Physical qubits per logical qubit.
pub const BLOCK_QUBITS: usize = 4;

/// Default length of the synthesized controlled-phase sequence.
pub const DEFAULT_CPHASE_LENGTH: usize = 40;

/// The two code states of one block.
#[derive(Clone, Debug, PartialEq)]
pub struct LogicalBasis<T> {
    pub zero: StateVector<T>,
    pub one: StateVector<T>,
}

pub fn logical_basis<T: Real>() -> LogicalBasis<T> {
    let half = T::lit(0.5);
    let k = T::one() / (T::lit(2.0) * T::lit(3.0).sqrt());
    let mut zero = vec![Complex::zero(); 16];
    let mut one = vec![Complex::zero(); 16];
    for (i, a) in [
        (0b0101, half),
        (0b1010, half),
        (0b0110, -half),
        (0b1001, -half),
    ] {
        zero[i] = Complex::new(a, T::zero());
    }
    for (i, a) in [
        (0b0011, 2.0),
        (0b1100, 2.0),
        (0b0110, -1.0),
        (0b1001, -1.0),
        (0b0101, -1.0),
        (0b1010, -1.0),
    ] {
        one[i] = Complex::new(T::lit(a) * k, T::zero());
    }
    LogicalBasis {
        zero: StateVector::from_amplitudes(zero).expect("16 amplitudes"),
        one: StateVector::from_amplitudes(one).expect("16 amplitudes"),
    }
}

fn check_blocks(blocks: usize) -> Result<()> {
    if blocks == 1 || blocks == 2 {
        Ok(())
    } else {
        Err(Error::UnsupportedCount(format!(
            "{blocks} code blocks, expected 1 or 2"
        )))
    }
}

/// Code states of `blocks` blocks, indexed by the logical bit string.
pub fn block_basis<T: Real>(blocks: usize) -> Result<Vec<StateVector<T>>> {
    check_blocks(blocks)?;
    let b = logical_basis::<T>();
    let single = [b.zero, b.one];
    Ok(match blocks {
        1 => single.to_vec(),
        _ => single
            .iter()
            .flat_map(|x| single.iter().map(move |y| x.kron(y)))
            .collect(),
    })
}

/// Physical system state `sum_k coeffs[k] |k_L>`.
pub fn embed_logical<T: Real>(coeffs: &[Complex<T>], blocks: usize) -> Result<StateVector<T>> {
    let basis = block_basis::<T>(blocks)?;
    if coeffs.len() != basis.len() {
        return Err(Error::DimensionMismatch {
            expected: basis.len(),
            found: coeffs.len(),
        });
    }
    let dim = basis[0].dim();
    let zero = StateVector::from_amplitudes(vec![Complex::zero(); dim])?;
    Ok(basis
        .iter()
        .zip(coeffs)
        .fold(zero, |acc, (v, &c)| acc.plus(&v.scaled(c))))
}

/// Uniform superposition over all bath basis states.
pub fn initial_bath_state<T: Real>(bath_count: usize) -> StateVector<T> {
    let d = 1usize << bath_count;
    let a = T::one() / T::lit(d as f64).sqrt();
    StateVector::from_amplitudes(vec![Complex::new(a, T::zero()); d]).expect("power-of-two length")
}

/// `(a|0_L> + b|1_L>)` per block, tensored with the initial bath state.
pub fn encode<T: Real>(
    amplitudes: &[[Complex<T>; 2]],
    bath_count: usize,
) -> Result<StateVector<T>> {
    check_blocks(amplitudes.len())?;
    let basis = logical_basis::<T>();
    let mut state = StateVector::from_amplitudes(vec![Complex::new(T::one(), T::zero())])?;
    for &[a, b] in amplitudes {
        let n2 = a.norm_sqr() + b.norm_sqr();
        if (n2 - T::one()).abs() > T::tol(1e-12) {
            return Err(Error::NotNormalized(n2.as_f64()));
        }
        state = state.kron(&basis.zero.scaled(a).plus(&basis.one.scaled(b)));
    }
    Ok(state.kron(&initial_bath_state(bath_count)))
}

/// `prod_j sigma_j^axis` over all system qubits, identity on the bath.
pub fn global_pulse(axis: Axis, blocks: usize, bath_count: usize) -> Result<PauliString> {
    check_blocks(blocks)?;
    let system = blocks * BLOCK_QUBITS;
    let qubits: Vec<usize> = (0..system).collect();
    PauliString::on(system + bath_count, &qubits, axis)
}

pub fn global_pulse_operator<T: Real>(
    axis: Axis,
    blocks: usize,
    bath_count: usize,
) -> Result<Operator<T>> {
    Ok(global_pulse(axis, blocks, bath_count)?.to_operator())
}

/// Logical matrix `<r_L|u|c_L>` of a system operator and its leakage: the
/// largest norm of `u|c_L>` outside the code space.
pub fn project_logical<T: Real>(u: &Operator<T>, blocks: usize) -> Result<(Operator<T>, T)> {
    let basis = block_basis::<T>(blocks)?;
    let dim = basis[0].dim();
    if u.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: u.dim(),
        });
    }
    let k = basis.len();
    let images: Vec<StateVector<T>> = basis.iter().map(|b| u.apply(b)).collect::<Result<_>>()?;
    let m = Operator::from_fn(k, |r, c| basis[r].inner(&images[c]));
    let mut leakage = T::zero();
    for (c, img) in images.iter().enumerate() {
        let inside = (0..k).fold(
            StateVector::from_amplitudes(vec![Complex::zero(); dim])?,
            |acc, r| acc.plus(&basis[r].scaled(m.get(r, c))),
        );
        let out = img.plus(&inside.scaled(Complex::new(-T::one(), T::zero())));
        leakage = leakage.max(out.norm());
    }
    Ok((m, leakage))
}

/// Bit position of register slot `q` in an `n`-qubit basis index.
fn bit(n: usize, q: usize) -> usize {
    1 << (n - 1 - q)
}

/// Basis index with the spins in slots `a` and `b` exchanged.
pub(crate) fn swap_slots(s: usize, n: usize, a: usize, b: usize) -> usize {
    let (ma, mb) = (bit(n, a), bit(n, b));
    if ((s & ma) == 0) == ((s & mb) == 0) {
        s
    } else {
        s ^ ma ^ mb
    }
}

/// `e^{-i phi sigma_a . sigma_b} = e^{i phi} (cos 2phi - i sin 2phi SWAP_ab)`
/// as coefficients on the identity and on the swap.
pub(crate) fn exchange_coefficients<T: Real>(phi: T) -> (Complex<T>, Complex<T>) {
    let (s1, c1) = phi.sin_cos();
    let (s2, c2) = (phi + phi).sin_cos();
    let g = Complex::new(c1, s1);
    (g * c2, g * Complex::new(T::zero(), -s2))
}

/// Composed unitary of an exchange sequence on an `n`-qubit register; the
/// first op acts first.
pub fn exchange_unitary<T: Real>(qubits: usize, ops: &[ExchangeOp<T>]) -> Result<Operator<T>> {
    let d = 1usize << qubits;
    let mut u = Operator::identity(d);
    for op in ops {
        let (a, b) = op.pair;
        if b >= qubits {
            return Err(Error::IndexOutOfRange(format!(
                "exchange pair ({a}, {b}) on {qubits} qubits"
            )));
        }
        let (ci, cs) = exchange_coefficients(op.angle);
        let src = u.as_slice().to_vec();
        let dst = u.as_mut_slice();
        for r in 0..d {
            let p = swap_slots(r, qubits, a, b);
            for c in 0..d {
                dst[r * d + c] = ci * src[r * d + c] + cs * src[p * d + c];
            }
        }
    }
    Ok(u)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GateName {
    Memory,
    Hadamard,
    Pi8,
    Cphase,
}

impl GateName {
    pub const ALL: [GateName; 4] = [
        GateName::Memory,
        GateName::Hadamard,
        GateName::Pi8,
        GateName::Cphase,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GateName::Memory => "memory",
            GateName::Hadamard => "hadamard",
            GateName::Pi8 => "pi8",
            GateName::Cphase => "cphase",
        }
    }

    pub fn blocks(self) -> usize {
        if self == GateName::Cphase {
            2
        } else {
            1
        }
    }
}

impl fmt::Display for GateName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GateName {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        GateName::ALL
            .into_iter()
            .find(|g| g.name() == s)
            .ok_or_else(|| format!("unknown gate `{s}` (expected memory|hadamard|pi8|cphase)"))
    }
}

/// An encoded gate as a sequence of exchange operations.
#[derive(Clone, Debug, PartialEq)]
pub struct LogicalGate<T> {
    pub name: GateName,
    pub ops: Vec<ExchangeOp<T>>,
    /// Ideal logical matrix, 2x2 or 4x4.
    pub target: Operator<T>,
    pub blocks: usize,
    /// Where the op list came from: `none`, `synthesized:seed=..,length=..`
    /// or `file:<path>`.
    pub source: String,
}

impl<T: Real> LogicalGate<T> {
    pub fn system_count(&self) -> usize {
        self.blocks * BLOCK_QUBITS
    }

    /// Bath-free composed evolution projected onto the code space: phase
    /// stripped distance to the target and leakage.
    pub fn verify(&self) -> Result<(T, T)> {
        let u = exchange_unitary(self.system_count(), &self.ops)?;
        let (m, leak) = project_logical(&u, self.blocks)?;
        Ok((m.phase_distance(&self.target), leak))
    }
}

pub fn gate_target<T: Real>(name: GateName) -> Operator<T> {
    let z = Complex::zero();
    let one = Complex::new(T::one(), T::zero());
    match name {
        GateName::Memory => Operator::identity(2),
        GateName::Hadamard => {
            let h = Complex::new(T::FRAC_1_SQRT_2(), T::zero());
            Operator::from_vec(2, vec![h, h, h, -h]).expect("2x2")
        }
        GateName::Pi8 => {
            let (s, c) = T::FRAC_PI_4().sin_cos();
            Operator::from_vec(2, vec![one, z, z, Complex::new(c, s)]).expect("2x2")
        }
        GateName::Cphase => Operator::from_fn(4, |r, c| match (r == c, r) {
            (true, 3) => -one,
            (true, _) => one,
            _ => z,
        }),
    }
}

/// How the controlled-phase sequence is obtained.
#[derive(Clone, Debug, PartialEq)]
pub struct LibraryOptions {
    /// Exchange-sequence file; replaces synthesis when present.
    pub cphase_file: Option<std::path::PathBuf>,
    pub seed: u64,
    pub cphase_length: usize,
}

impl Default for LibraryOptions {
    fn default() -> Self {
        LibraryOptions {
            cphase_file: None,
            seed: 0,
            cphase_length: DEFAULT_CPHASE_LENGTH,
        }
    }
}

/// Builds and verifies one gate of the library.
pub fn build_gate<T: Real>(name: GateName, options: &LibraryOptions) -> Result<LogicalGate<T>> {
    let target = gate_target::<T>(name);
    let (ops, source) = match name {
        GateName::Memory => (Vec::new(), "none".to_string()),
        GateName::Hadamard | GateName::Pi8 => {
            (synthesize_single_qubit_gate(&target)?, "none".to_string())
        }
        GateName::Cphase => match &options.cphase_file {
            Some(path) => (load_cphase_file(path)?, format!("file:{}", path.display())),
            None => {
                let s = synthesize_cphase::<T>(options.seed, options.cphase_length)?;
                (
                    s.ops,
                    format!(
                        "synthesized:seed={},length={}",
                        options.seed, options.cphase_length
                    ),
                )
            }
        },
    };
    let gate = LogicalGate {
        name,
        ops,
        target,
        blocks: name.blocks(),
        source,
    };
    let (dist, leak) = gate.verify()?;
    let tol = T::lit(1e-10);
    if !(dist < tol && leak < tol) {
        return Err(Error::SynthesisFailed(format!(
            "{name}: distance {:e}, leakage {:e}",
            dist.as_f64(),
            leak.as_f64()
        )));
    }
    Ok(gate)
}

/// Memory, Hadamard, pi/8 and controlled-phase.
pub fn gate_library<T: Real>(options: &LibraryOptions) -> Result<Vec<LogicalGate<T>>> {
    GateName::ALL
        .iter()
        .map(|&g| build_gate(g, options))
        .collect()
}

/// Tolerance for replaying a controlled-phase sequence file.
const FILE_REPLAY_TOLERANCE: f64 = 1e-8;

fn load_cphase_file<T: Real>(path: &Path) -> Result<Vec<ExchangeOp<T>>> {
    let ops = load_sequence::<T>(path, 2 * BLOCK_QUBITS)?;
    let u = exchange_unitary(2 * BLOCK_QUBITS, &ops)?;
    let (m, leak) = project_logical(&u, 2)?;
    let dist = m.phase_distance(&gate_target(GateName::Cphase));
    let tol = T::lit(FILE_REPLAY_TOLERANCE);
    if !(dist < tol && leak < tol) {
        return Err(Error::SequenceFileInvalid {
            line: 0,
            reason: format!(
                "replay does not realise the controlled phase (distance {:e}, leakage {:e})",
                dist.as_f64(),
                leak.as_f64()
            ),
        });
    }
    Ok(ops)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::build_exchange_generator;
    use crate::operator::Spectrum;
    use proptest::prelude::*;

    fn c(re: f64) -> Complex<f64> {
        Complex::new(re, 0.0)
    }

    #[test]
    fn code_states_are_orthonormal_and_pattern_matches() {
        let b = logical_basis::<f64>();
        assert!((b.zero.norm() - 1.0).abs() < 1e-15 && (b.one.norm() - 1.0).abs() < 1e-15);
        assert!(b.zero.inner(&b.one).norm() < 1e-15);
        let z = b.zero.amplitudes();
        for (i, a) in [(5, 0.5), (10, 0.5), (6, -0.5), (9, -0.5)] {
            assert_eq!(z[i], c(a));
        }
        assert_eq!(z.iter().filter(|a| !a.is_zero()).count(), 4);
        let sum_sq: f64 = b.one.amplitudes().iter().map(|a| a.norm_sqr()).sum();
        assert!((sum_sq - (4.0 + 4.0 + 1.0 + 1.0 + 1.0 + 1.0) / 12.0).abs() < 1e-15);
    }

    #[test]
    fn code_states_have_zero_total_spin() {
        let b = logical_basis::<f64>();
        for axis in Axis::ALL {
            let mut total = Operator::<f64>::zeros(16);
            for q in 0..4 {
                total = total
                    .add(&PauliString::on(4, &[q], axis).unwrap().to_operator())
                    .unwrap();
            }
            for s in [&b.zero, &b.one] {
                assert!(total.apply(s).unwrap().norm() < 1e-14);
            }
        }
    }

    #[test]
    fn encode_examples() {
        let s = encode(&[[c(0.0), c(1.0)]], 2).unwrap();
        assert_eq!(s.dim(), 64);
        let b = logical_basis::<f64>();
        for (i, a) in s.amplitudes().iter().enumerate() {
            assert!((a - b.one.amplitudes()[i / 4] * 0.5).norm() < 1e-15);
        }
        let s = encode(&[[c(1.0), c(0.0)]], 0).unwrap();
        assert_eq!(s, b.zero);
        assert!(matches!(
            encode(&[[c(1.0), c(1.0)]], 1),
            Err(Error::NotNormalized(_))
        ));
    }

    #[test]
    fn global_pulse_examples() {
        let b = logical_basis::<f64>();
        let z = global_pulse_operator::<f64>(Axis::Z, 1, 0).unwrap();
        let x = global_pulse_operator::<f64>(Axis::X, 1, 0).unwrap();
        assert!(
            z.apply(&b.zero)
                .unwrap()
                .plus(&b.zero.scaled(c(-1.0)))
                .norm()
                < 1e-15
        );
        assert!(x.apply(&b.one).unwrap().plus(&b.one.scaled(c(-1.0))).norm() < 1e-15);
        assert!(x.matmul(&x).unwrap().max_abs_diff(&Operator::identity(16)) < 1e-15);
        let big = global_pulse_operator::<f64>(Axis::X, 2, 1).unwrap();
        assert_eq!(big.dim(), 512);
    }

    #[test]
    fn pulses_fix_the_code_space() {
        for blocks in [1, 2] {
            for axis in Axis::ALL {
                let p = global_pulse_operator::<f64>(axis, blocks, 0).unwrap();
                let (m, leak) = project_logical(&p, blocks).unwrap();
                assert!(leak < 1e-14);
                assert!(
                    m.max_abs_diff(&Operator::identity(m.dim())) < 1e-14,
                    "{axis}"
                );
            }
        }
    }

    #[test]
    fn projection_examples() {
        let (m, leak) = project_logical(&Operator::<f64>::identity(16), 1).unwrap();
        assert!(m.max_abs_diff(&Operator::identity(2)) < 1e-15 && leak < 1e-15);

        // independent route: exponentiate the exchange generator by eigensolve
        let h = build_exchange_generator::<f64>(4, 4, &[((0, 1), 1.0)]).unwrap();
        let u = Spectrum::from_pauli_sum(&h).unwrap().evolve(0.37);
        let (m, leak) = project_logical(&u, 1).unwrap();
        assert!(leak < 1e-12);
        assert!(m.get(0, 1).norm() < 1e-12 && m.get(1, 0).norm() < 1e-12);

        let x1 = PauliString::on(4, &[0], Axis::X)
            .unwrap()
            .to_operator::<f64>();
        let (_, leak) = project_logical(&x1, 1).unwrap();
        assert!(leak > 0.9);
        assert!(matches!(
            project_logical(&x1, 2),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn closed_form_exchange_matches_eigensolve() {
        let ops = [
            ExchangeOp::new(0, 1, 0.3).unwrap(),
            ExchangeOp::new(1, 3, -1.1).unwrap(),
            ExchangeOp::new(2, 3, 0.05).unwrap(),
        ];
        let fast = exchange_unitary(5, &ops).unwrap();
        let mut slow = Operator::<f64>::identity(32);
        for op in &ops {
            let h = build_exchange_generator(4, 5, &[(op.pair, 1.0)]).unwrap();
            slow = Spectrum::from_pauli_sum(&h)
                .unwrap()
                .evolve(op.angle)
                .matmul(&slow)
                .unwrap();
        }
        assert!(fast.max_abs_diff(&slow) < 1e-13);
    }

    #[test]
    fn pi8_is_one_exchange() {
        let gate = build_gate::<f64>(GateName::Pi8, &LibraryOptions::default()).unwrap();
        assert_eq!(gate.ops.len(), 1);
        assert_eq!(gate.ops[0].pair, (0, 1));
        assert!((4.0 * gate.ops[0].angle.abs() - std::f64::consts::FRAC_PI_4).abs() < 1e-14);
        let (dist, leak) = gate.verify().unwrap();
        assert!(dist < 1e-14 && leak < 1e-14);
    }

    #[test]
    fn memory_gate_is_empty() {
        let gate = build_gate::<f64>(GateName::Memory, &LibraryOptions::default()).unwrap();
        assert!(gate.ops.is_empty());
        assert_eq!(gate.target, Operator::identity(2));
    }

    #[test]
    fn hadamard_needs_three_exchanges() {
        let gate = build_gate::<f64>(GateName::Hadamard, &LibraryOptions::default()).unwrap();
        assert_eq!(gate.ops.len(), 3);
        let (dist, leak) = gate.verify().unwrap();
        assert!(dist < 1e-13 && leak < 1e-13);
    }

    #[test]
    fn library_targets_are_unitary() {
        for g in GateName::ALL {
            assert!(gate_target::<f64>(g).unitarity_error() < 1e-15);
        }
        assert_eq!("pi8".parse::<GateName>(), Ok(GateName::Pi8));
        assert!("toffoli".parse::<GateName>().is_err());
    }

    #[test]
    fn generators_commute_with_global_pulses() {
        let gate = build_gate::<f64>(GateName::Hadamard, &LibraryOptions::default()).unwrap();
        let terms: Vec<_> = gate.ops.iter().map(|o| (o.pair, o.angle)).collect();
        let h = build_exchange_generator(4, 6, &terms)
            .unwrap()
            .to_operator();
        for axis in [Axis::X, Axis::Z] {
            let p = global_pulse_operator::<f64>(axis, 1, 2).unwrap();
            assert!(h.commutator(&p).unwrap().max_abs() < 1e-12);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn exchange_sequences_do_not_leak(angles in prop::collection::vec(-3.2f64..3.2, 1..6), pick in prop::collection::vec(0usize..6, 6)) {
            let pairs = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
            let ops: Vec<_> = angles.iter().zip(&pick).map(|(&a, &p)| ExchangeOp::new(pairs[p].0, pairs[p].1, a).unwrap()).collect();
            let u = exchange_unitary(4, &ops).unwrap();
            let (m, leak) = project_logical(&u, 1).unwrap();
            prop_assert!(leak < 1e-10);
            prop_assert!(m.unitarity_error() < 1e-12);
        }
    }
}
