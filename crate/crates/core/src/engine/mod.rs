//! Propagation of schedules, fidelities against the ideal gate, free
//! baselines, and the first-order decoupling check.

mod calibrate;
mod propagate;

use std::time::Instant;

use num_complex::Complex;
use num_traits::Zero;

pub use calibrate::{
    calibrate_bath_scaling, fit_bath_scaling, memory_observable, CalibrationReport, ModelTemplate,
};
pub use propagate::{propagate, propagate_flat, PropagatorCache};

use crate::dfs::{embed_logical, encode, GateName, LogicalGate};
use crate::error::{Error, Result};
use crate::model::{GeometryKind, SystemModel};
use crate::operator::{partial_trace_bath, spectral_norm, Operator, StateVector};
use crate::scalar::{Precision, Real};
use crate::sequence::{
    build_schedule, free_evolution_schedule, Register, Schedule, Strategy, Timing,
};

/// One simulation outcome with the parameters that produced it.
#[derive(Clone, Debug, PartialEq)]
pub struct FidelityRecord {
    pub gate: GateName,
    pub strategy: Strategy,
    pub n: usize,
    pub tau0: f64,
    pub delta: f64,
    pub j: f64,
    pub beta: f64,
    pub fidelity: f64,
    pub one_minus_f: f64,
    /// `log10(1 - F)`, raised to the backend floor when below it.
    pub log10_one_minus_f: f64,
    pub floor_clamped: bool,
    pub precision: Precision,
    pub wall_time: f64,
    pub cphase_source: String,
    pub geometry: GeometryKind,
    pub bath_count: usize,
    pub blocks: usize,
    pub bath_scaling: f64,
    pub total_time: f64,
}

/// `log10(64 eps)` of a backend.
pub fn precision_floor(precision: Precision) -> f64 {
    (64.0 * precision.epsilon()).log10()
}

/// How `simulate` obtains the final state.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Path {
    /// Whichever of the other two is estimated cheaper.
    #[default]
    Auto,
    /// Full schedule unitary with subtree reuse, then applied to the state.
    Operator,
    /// The state is pushed through the segments directly.
    State,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SimOptions {
    /// Let gates with more ops than intervals share intervals.
    pub packing: bool,
    pub path: Path,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            packing: true,
            path: Path::Auto,
        }
    }
}

/// Logical one on every block.
pub fn logical_one<T: Real>(blocks: usize) -> Vec<[Complex<T>; 2]> {
    vec![[Complex::zero(), Complex::new(T::one(), T::zero())]; blocks]
}

/// Reuses spectra across runs on one model.
pub struct Simulator<'m, T> {
    cache: PropagatorCache<'m, T>,
    options: SimOptions,
}

impl<'m, T: Real> Simulator<'m, T> {
    pub fn new(model: &'m SystemModel<T>, options: SimOptions) -> Self {
        Simulator {
            cache: PropagatorCache::new(model),
            options,
        }
    }

    pub fn cache(&self) -> &PropagatorCache<'m, T> {
        &self.cache
    }

    /// Gate under `strategy` at level `n`; empty `amplitudes` means logical
    /// one on every block.
    pub fn simulate(
        &mut self,
        gate: &LogicalGate<T>,
        strategy: Strategy,
        n: usize,
        timing: Timing<T>,
        amplitudes: &[[Complex<T>; 2]],
    ) -> Result<FidelityRecord> {
        let start = Instant::now();
        let reg = Register::from(self.cache.model());
        let schedule = build_schedule(strategy, gate, n, timing, reg, self.options.packing)?;
        let f = self.fidelity(gate, &schedule, amplitudes)?;
        Ok(self.record(gate, strategy, n, timing, &schedule, f, start))
    }

    /// Unprotected evolution for `4^n tau0`, reported at level `n`.
    pub fn baseline(
        &mut self,
        gate: &LogicalGate<T>,
        n: usize,
        timing: Timing<T>,
        amplitudes: &[[Complex<T>; 2]],
    ) -> Result<FidelityRecord> {
        self.simulate(gate, Strategy::Free, n, timing, amplitudes)
    }

    /// `1 - F` of the schedule's output against the ideal gate output.
    pub fn fidelity(
        &mut self,
        gate: &LogicalGate<T>,
        schedule: &Schedule<T>,
        amplitudes: &[[Complex<T>; 2]],
    ) -> Result<T> {
        let model = self.cache.model();
        if gate.blocks != model.blocks() {
            return Err(Error::DimensionMismatch {
                expected: model.blocks(),
                found: gate.blocks,
            });
        }
        let amps = if amplitudes.is_empty() {
            logical_one(gate.blocks)
        } else {
            amplitudes.to_vec()
        };
        if amps.len() != gate.blocks {
            return Err(Error::DimensionMismatch {
                expected: gate.blocks,
                found: amps.len(),
            });
        }
        let (system, bath) = (model.system_count(), model.bath_count());
        let psi0 = encode(&amps, bath)?;
        let out = match self.choose_path(schedule) {
            Path::State => self.cache.evolve_state(schedule, psi0.amplitudes())?,
            _ => self
                .cache
                .propagate(schedule)?
                .apply(&psi0)?
                .amplitudes()
                .to_vec(),
        };
        let target = ideal_output(gate, &amps)?;
        let rho = partial_trace_bath(
            &Operator::outer(&StateVector::from_amplitudes(out.clone())?),
            system,
            bath,
        )?;
        let overlap = target.inner(&rho.apply(&target)?).re;
        Ok(one_minus_fidelity(&out, &target, overlap))
    }

    fn choose_path(&self, schedule: &Schedule<T>) -> Path {
        match self.options.path {
            Path::Auto => {
                let segments = schedule.interval_count() + schedule.pulse_count();
                let products = PropagatorCache::tree_compositions(schedule);
                if segments * 8 < products * self.cache.model().dim() {
                    Path::State
                } else {
                    Path::Operator
                }
            }
            p => p,
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn record(
        &self,
        gate: &LogicalGate<T>,
        strategy: Strategy,
        n: usize,
        timing: Timing<T>,
        schedule: &Schedule<T>,
        one_minus_f: T,
        start: Instant,
    ) -> FidelityRecord {
        let model = self.cache.model();
        let omf = one_minus_f.as_f64();
        let floor = precision_floor(T::PRECISION);
        let raw = omf.log10();
        let floor_clamped = !(raw > floor);
        FidelityRecord {
            gate: gate.name,
            strategy,
            n,
            tau0: timing.tau0.as_f64(),
            delta: timing.delta.as_f64(),
            j: model.j().as_f64(),
            beta: model.beta().as_f64(),
            fidelity: (T::one() - one_minus_f).as_f64(),
            one_minus_f: omf,
            log10_one_minus_f: if floor_clamped { floor } else { raw },
            floor_clamped,
            precision: T::PRECISION,
            wall_time: start.elapsed().as_secs_f64(),
            cphase_source: if gate.name == GateName::Cphase {
                gate.source.clone()
            } else {
                "none".into()
            },
            geometry: model.geometry().kind(),
            bath_count: model.bath_count(),
            blocks: model.blocks(),
            bath_scaling: model.bath_scaling().as_f64(),
            total_time: schedule.nominal_duration().as_f64(),
        }
    }
}

/// Target system state: the gate's logical matrix applied to the product of
/// per-block amplitudes, embedded in the code space.
fn ideal_output<T: Real>(
    gate: &LogicalGate<T>,
    amps: &[[Complex<T>; 2]],
) -> Result<StateVector<T>> {
    let mut coeffs = vec![Complex::new(T::one(), T::zero())];
    for &[a, b] in amps {
        coeffs = coeffs.iter().flat_map(|&c| [c * a, c * b]).collect();
    }
    let logical = gate.target.apply(&StateVector::from_amplitudes(coeffs)?)?;
    embed_logical(logical.amplitudes(), gate.blocks)
}

/// `1 - sqrt(<psi|rho|psi>)`. The defect `1 - <psi|rho|psi>` is summed from
/// the components of the output orthogonal to `psi`, which stays accurate
/// when the overlap is within rounding of one; `overlap` is the same
/// quantity read off the reduced state and only guards against a mismatch.
fn one_minus_fidelity<T: Real>(out: &[Complex<T>], target: &StateVector<T>, overlap: T) -> T {
    let psi = target.amplitudes();
    let ds = psi.len();
    let db = out.len() / ds;
    let mut defect = T::zero();
    for b in 0..db {
        let proj = (0..ds).fold(Complex::zero(), |s, i| s + psi[i].conj() * out[i * db + b]);
        for i in 0..ds {
            defect = defect + (out[i * db + b] - psi[i] * proj).norm_sqr();
        }
    }
    debug_assert!((T::one() - overlap - defect).abs() < T::tol(1e-9));
    let p = (T::one() - defect).max(T::zero());
    defect / (T::one() + p.sqrt())
}

/// Fresh-cache convenience over [`Simulator::simulate`].
#[allow(clippy::too_many_arguments)]
pub fn simulate<T: Real>(
    gate: &LogicalGate<T>,
    strategy: Strategy,
    n: usize,
    timing: Timing<T>,
    model: &SystemModel<T>,
    amplitudes: &[[Complex<T>; 2]],
    options: SimOptions,
) -> Result<FidelityRecord> {
    Simulator::new(model, options).simulate(gate, strategy, n, timing, amplitudes)
}

/// The gate spread over one unprotected interval of length `total_time`.
pub fn baseline_free<T: Real>(
    gate: &LogicalGate<T>,
    total_time: T,
    model: &SystemModel<T>,
    amplitudes: &[[Complex<T>; 2]],
) -> Result<FidelityRecord> {
    let start = Instant::now();
    let timing = Timing::new(total_time, T::zero())?;
    let mut sim = Simulator::new(model, SimOptions::default());
    let schedule = free_evolution_schedule(gate, total_time, Register::from(model))?;
    let f = sim.fidelity(gate, &schedule, amplitudes)?;
    Ok(sim.record(gate, Strategy::Free, 0, timing, &schedule, f, start))
}

/// `|| (1/|P|) sum_a P_a^dag h P_a ||`: the first-order coupling left after
/// averaging over the pulse group, on the scale of `h`.
pub fn decoupling_condition_residual<T: Real>(
    pulses: &[Operator<T>],
    h_sb: &Operator<T>,
) -> Result<T> {
    if pulses.is_empty() {
        return Err(Error::InvalidArgument("empty pulse set".into()));
    }
    let mut sum = Operator::zeros(h_sb.dim());
    for p in pulses {
        if p.dim() != h_sb.dim() {
            return Err(Error::DimensionMismatch {
                expected: h_sb.dim(),
                found: p.dim(),
            });
        }
        sum = sum.add(&p.adjoint().matmul(&h_sb.matmul(p)?)?)?;
    }
    let k = T::one() / T::from_usize(pulses.len()).expect("pulse count fits the scalar type");
    let avg = sum.scale(Complex::new(k, T::zero()));
    let herm = avg
        .add(&avg.adjoint())?
        .scale(Complex::new(T::lit(0.5), T::zero()));
    spectral_norm(&herm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dfs::{build_gate, global_pulse_operator, LibraryOptions};
    use crate::model::Geometry;
    use crate::operator::{expm_hermitian, Axis, PauliString};
    use crate::sequence::Strategy;
    use crate::sequence::{cdd_schedule, Action, Piece};
    use proptest::prelude::*;

    fn model(j: f64, beta: f64, bath: usize) -> SystemModel<f64> {
        SystemModel::new(
            Geometry::new(GeometryKind::Linear, 4, bath).unwrap(),
            j,
            beta,
            1.0,
        )
        .unwrap()
    }

    fn gate(name: GateName) -> LogicalGate<f64> {
        build_gate(name, &LibraryOptions::default()).unwrap()
    }

    fn timing(delta: f64) -> Timing<f64> {
        Timing::new(1e-9, delta).unwrap()
    }

    fn run(g: GateName, m: &SystemModel<f64>, n: usize, delta: f64) -> FidelityRecord {
        simulate(
            &gate(g),
            Strategy::While,
            n,
            timing(delta),
            m,
            &[],
            SimOptions::default(),
        )
        .unwrap()
    }

    fn rk4(h: &Operator<f64>, v: &[Complex<f64>], duration: f64, step: f64) -> Vec<Complex<f64>> {
        let steps = (duration / step).ceil().max(1.0) as usize;
        let dt = duration / steps as f64;
        let d = v.len();
        let deriv = |x: &[Complex<f64>]| -> Vec<Complex<f64>> {
            (0..d)
                .map(|r| {
                    (0..d).fold(Complex::<f64>::zero(), |s, c| s + h.get(r, c) * x[c])
                        * Complex::new(0.0, -1.0)
                })
                .collect()
        };
        let axpy = |x: &[Complex<f64>], k: &[Complex<f64>], a: f64| -> Vec<Complex<f64>> {
            x.iter().zip(k).map(|(p, q)| p + q * a).collect()
        };
        let mut x = v.to_vec();
        for _ in 0..steps {
            let k1 = deriv(&x);
            let k2 = deriv(&axpy(&x, &k1, dt / 2.0));
            let k3 = deriv(&axpy(&x, &k2, dt / 2.0));
            let k4 = deriv(&axpy(&x, &k3, dt));
            for i in 0..d {
                x[i] += (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * (dt / 6.0);
            }
        }
        x
    }

    /// Fidelity from a fine fixed-step integration of every segment.
    fn integrated_fidelity(
        g: &LogicalGate<f64>,
        m: &SystemModel<f64>,
        n: usize,
        t: Timing<f64>,
    ) -> f64 {
        let schedule = build_schedule(Strategy::While, g, n, t, Register::from(m), true).unwrap();
        let env = m.environment().to_operator();
        let mut v = encode(&logical_one::<f64>(1), m.bath_count())
            .unwrap()
            .amplitudes()
            .to_vec();
        for seg in schedule.segments() {
            match &schedule.actions()[seg.label] {
                Action::Interval(pieces) => {
                    for p in pieces {
                        let mut h = env.clone();
                        if let Some(op) = p.op {
                            let gen = m
                                .exchange_generator(&[(op.pair, op.coupling)])
                                .unwrap()
                                .to_operator();
                            h = h.add(&gen).unwrap();
                        }
                        v = rk4(&h, &v, p.duration, t.tau0 / 1000.0);
                    }
                }
                Action::Pulse {
                    axis,
                    width,
                    amplitude,
                } => {
                    let mut h = env.clone();
                    for q in 0..4 {
                        let s = PauliString::on(m.qubits(), &[q], *axis)
                            .unwrap()
                            .to_operator::<f64>();
                        h = h.add(&s.scale(Complex::new(*amplitude, 0.0))).unwrap();
                    }
                    v = rk4(&h, &v, *width, width / 1000.0);
                }
                Action::Ideal { pauli, .. } => v = pauli.apply_vector(&v),
            }
        }
        let psi = ideal_output(g, &logical_one(1)).unwrap();
        let rho = partial_trace_bath(
            &Operator::outer(&StateVector::from_amplitudes(v).unwrap()),
            4,
            m.bath_count(),
        )
        .unwrap();
        psi.inner(&rho.apply(&psi).unwrap()).norm().sqrt()
    }

    #[test]
    fn empty_schedule_is_identity() {
        let m = model(1e4, 1e6, 2);
        let s = Schedule::empty(Register::from(&m), timing(0.0));
        assert_eq!(
            propagate(&s, &m)
                .unwrap()
                .max_abs_diff(&Operator::identity(64)),
            0.0
        );
    }

    #[test]
    fn recursion_matches_sequential_product() {
        for (delta, bath) in [(0.0, 2), (3e-10, 1)] {
            let m = model(1e6, 1e7, bath);
            for name in [GateName::Memory, GateName::Pi8, GateName::Hadamard] {
                for n in 0..=3 {
                    let s = build_schedule(
                        Strategy::While,
                        &gate(name),
                        n,
                        timing(delta),
                        Register::from(&m),
                        true,
                    )
                    .unwrap();
                    let mut cache = PropagatorCache::new(&m);
                    let tree = cache.propagate(&s).unwrap();
                    let flat = cache.propagate_flat(&s).unwrap();
                    assert!(tree.max_abs_diff(&flat) < 1e-10, "{name} n={n}");
                    assert!(tree.unitarity_error() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn cphase_recursion_matches_sequential_product() {
        let g = gate(GateName::Cphase);
        let m = SystemModel::new(
            Geometry::new(GeometryKind::Linear, 8, 1).unwrap(),
            1e4,
            1e6,
            1.0,
        )
        .unwrap();
        for n in 0..=2 {
            let s = build_schedule(
                Strategy::While,
                &g,
                n,
                timing(0.0),
                Register::from(&m),
                true,
            )
            .unwrap();
            let mut cache = PropagatorCache::new(&m);
            assert!(
                cache
                    .propagate(&s)
                    .unwrap()
                    .max_abs_diff(&cache.propagate_flat(&s).unwrap())
                    < 1e-10
            );
        }
    }

    #[test]
    fn ideal_memory_sequence_is_code_identity_without_coupling() {
        let m = model(0.0, 0.0, 2);
        let s = build_schedule(
            Strategy::While,
            &gate(GateName::Memory),
            3,
            timing(0.0),
            Register::from(&m),
            true,
        )
        .unwrap();
        let u = propagate(&s, &m).unwrap();
        let phase = u.get(0, 0);
        assert!((phase.norm() - 1.0).abs() < 1e-12);
        let rest = u.sub(&Operator::identity(64).scale(phase)).unwrap();
        let psi = encode(&logical_one::<f64>(1), 2).unwrap();
        assert!(rest.apply(&psi).unwrap().norm() < 1e-12);
    }

    #[test]
    fn no_system_bath_coupling_gives_unit_fidelity() {
        let m = model(0.0, 1e6, 2);
        for n in 0..=4 {
            let r = run(GateName::Memory, &m, n, 0.0);
            assert!((r.fidelity - 1.0).abs() < 1e-10, "n={n}: {}", r.fidelity);
            assert!(r.floor_clamped);
        }
    }

    #[test]
    fn pi8_error_shrinks_with_level_at_reference_couplings() {
        let m = model(1e4, 1e6, 2);
        let errs: Vec<f64> = (0..=3)
            .map(|n| run(GateName::Pi8, &m, n, 0.0).one_minus_f)
            .collect();
        assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
    }

    #[test]
    fn matches_fine_step_integration() {
        for (j, beta, delta) in [(1e4, 1e6, 0.0), (1e6, 1e7, 0.0), (1e6, 1e7, 2e-10)] {
            let m = model(j, beta, 2);
            let g = gate(GateName::Pi8);
            let want = integrated_fidelity(&g, &m, 1, timing(delta));
            let got = run(GateName::Pi8, &m, 1, delta).fidelity;
            assert!(
                (want - got).abs() < 1e-8,
                "J={j} beta={beta} delta={delta}: {want} vs {got}"
            );
        }
    }

    #[test]
    fn memory_matches_hand_built_pulse_sequence() {
        let m = model(1e5, 1e7, 2);
        let u0 = expm_hermitian(&m.environment().to_operator(), 1e-9).unwrap();
        let x = global_pulse_operator::<f64>(Axis::X, 1, 2).unwrap();
        let z = global_pulse_operator::<f64>(Axis::Z, 1, 2).unwrap();
        let mut c = u0;
        for n in 1..=3 {
            let c_then =
                |a: &Operator<f64>, p: &Operator<f64>| p.matmul(&c.matmul(a).unwrap()).unwrap();
            let mut acc = Operator::identity(64);
            for p in [&x, &z, &x, &z] {
                acc = c_then(&acc, p);
            }
            c = acc;
            let psi0 = encode(&logical_one::<f64>(1), 2).unwrap();
            let out = c.apply(&psi0).unwrap();
            let rho = partial_trace_bath(&Operator::outer(&out), 4, 2).unwrap();
            let target = ideal_output(&gate(GateName::Memory), &logical_one(1)).unwrap();
            let want = target.inner(&rho.apply(&target).unwrap()).norm().sqrt();
            let got = run(GateName::Memory, &m, n, 0.0).fidelity;
            assert!((want - got).abs() < 1e-12, "n={n}");
        }
    }

    #[test]
    fn narrow_pulses_approach_ideal_ones() {
        let m = model(1e4, 1e6, 2);
        for name in [GateName::Memory, GateName::Pi8] {
            let ideal = run(name, &m, 2, 0.0).fidelity;
            let narrow = run(name, &m, 2, 1e-15).fidelity;
            assert!((ideal - narrow).abs() < 1e-6);
        }
    }

    #[test]
    fn state_and_operator_paths_agree() {
        let m = model(1e5, 1e7, 2);
        for name in [GateName::Pi8, GateName::Hadamard] {
            for delta in [0.0, 1e-10] {
                let mut r = [0.0; 2];
                for (k, path) in [Path::Operator, Path::State].into_iter().enumerate() {
                    let opts = SimOptions {
                        packing: true,
                        path,
                    };
                    r[k] = simulate(
                        &gate(name),
                        Strategy::While,
                        2,
                        timing(delta),
                        &m,
                        &[],
                        opts,
                    )
                    .unwrap()
                    .one_minus_f;
                }
                assert!((r[0] - r[1]).abs() < 1e-14 + 1e-9 * r[0], "{r:?}");
            }
        }
    }

    #[test]
    fn one_eigendecomposition_per_generator() {
        let m = model(1e4, 1e6, 2);
        let mut sim = Simulator::new(&m, SimOptions::default());
        sim.simulate(
            &gate(GateName::Memory),
            Strategy::While,
            4,
            timing(0.0),
            &[],
        )
        .unwrap();
        assert_eq!(sim.cache().spectra_computed(), 1);
        sim.simulate(
            &gate(GateName::Memory),
            Strategy::While,
            4,
            timing(1e-10),
            &[],
        )
        .unwrap();
        assert_eq!(sim.cache().spectra_computed(), 3);
        let h = gate(GateName::Hadamard);
        let mut distinct: Vec<((usize, usize), f64)> = Vec::new();
        for op in &h.ops {
            if !distinct.contains(&(op.pair, op.angle)) {
                distinct.push((op.pair, op.angle));
            }
        }
        let mut sim = Simulator::new(&m, SimOptions::default());
        sim.simulate(&h, Strategy::While, 3, timing(0.0), &[])
            .unwrap();
        assert_eq!(sim.cache().spectra_computed(), distinct.len());
    }

    #[test]
    fn segment_cache_holds_unitaries() {
        let m = model(1e6, 1e7, 2);
        let s = build_schedule(
            Strategy::While,
            &gate(GateName::Hadamard),
            2,
            timing(1e-10),
            Register::from(&m),
            true,
        )
        .unwrap();
        let mut cache = PropagatorCache::new(&m);
        cache.propagate_flat(&s).unwrap();
        for label in 0..s.actions().len() {
            assert!(cache.segment_unitary(label).unwrap().unitarity_error() < 1e-10);
        }
    }

    #[test]
    fn repeated_runs_are_bit_identical() {
        let m = model(1e4, 1e6, 2);
        let a = run(GateName::Hadamard, &m, 3, 1e-9);
        let b = run(GateName::Hadamard, &m, 3, 1e-9);
        assert_eq!(a.one_minus_f.to_bits(), b.one_minus_f.to_bits());
    }

    #[test]
    fn level_zero_equals_free_baseline() {
        let m = model(1e4, 1e6, 2);
        let mut sim = Simulator::new(&m, SimOptions::default());
        for name in [GateName::Memory, GateName::Hadamard] {
            let a = sim
                .simulate(&gate(name), Strategy::While, 0, timing(0.0), &[])
                .unwrap();
            let b = sim.baseline(&gate(name), 0, timing(0.0), &[]).unwrap();
            assert_eq!(a.one_minus_f.to_bits(), b.one_minus_f.to_bits());
            assert_eq!(b.total_time, 1e-9);
        }
    }

    #[test]
    fn baseline_error_grows_with_duration() {
        let m = model(1e4, 1e6, 2);
        let g = gate(GateName::Memory);
        let errs: Vec<f64> = (0..=4)
            .map(|n| {
                baseline_free(&g, 4f64.powi(n) * 1e-9, &m, &[])
                    .unwrap()
                    .one_minus_f
            })
            .collect();
        assert!(errs.windows(2).all(|w| w[1] >= w[0]), "{errs:?}");
        let short: Vec<f64> = [1e-9, 1e-10, 1e-11, 1e-12]
            .iter()
            .map(|&t| baseline_free(&g, t, &m, &[]).unwrap().one_minus_f)
            .collect();
        assert!(short.windows(2).all(|w| w[1] <= w[0]), "{short:?}");
        assert!(short[3] < 1e-14);
        let decoupled = model(0.0, 1e6, 2);
        for t in [1e-9, 1e-6] {
            assert!((baseline_free(&g, t, &decoupled, &[]).unwrap().fidelity - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn records_carry_provenance_and_floor() {
        let m = model(0.0, 1e6, 2);
        let r = run(GateName::Pi8, &m, 1, 0.0);
        assert!(r.floor_clamped);
        assert_eq!(r.log10_one_minus_f, precision_floor(Precision::Standard));
        assert!((r.one_minus_f - (1.0 - r.fidelity)).abs() < 1e-16);
        assert_eq!(
            (r.gate, r.strategy, r.n, r.bath_count, r.blocks),
            (GateName::Pi8, Strategy::While, 1, 2, 1)
        );
        assert_eq!(r.cphase_source, "none");
        assert_eq!(r.total_time, 4e-9);
    }

    #[test]
    fn residual_examples() {
        let m = model(1.0, 0.0, 2);
        let h = m.h_sb_operator();
        let norm = spectral_norm(&h).unwrap();
        let id = Operator::identity(64);
        let pulses: Vec<Operator<f64>> = [Axis::X, Axis::Y, Axis::Z]
            .iter()
            .map(|&a| global_pulse_operator(a, 1, 2).unwrap())
            .collect();
        assert!(
            (decoupling_condition_residual(std::slice::from_ref(&id), &h).unwrap() - norm).abs()
                < 1e-12
        );
        let all = [
            id.clone(),
            pulses[0].clone(),
            pulses[1].clone(),
            pulses[2].clone(),
        ];
        assert!(decoupling_condition_residual(&all, &h).unwrap() < 1e-12 * norm);
        let x_only = crate::model::build_h_sb_axis(m.geometry(), 1.0, Axis::X).to_operator();
        let pair = decoupling_condition_residual(&[id, pulses[0].clone()], &h).unwrap();
        assert!((pair - spectral_norm(&x_only).unwrap()).abs() < 1e-12);
        assert!(decoupling_condition_residual(&[], &h).is_err());
        assert!(decoupling_condition_residual(&[Operator::identity(4)], &h).is_err());
    }

    #[test]
    fn calibration_examples() {
        let flat =
            fit_bath_scaling(vec![(2, 1e-8), (3, 1e-8), (4, 1e-8)], 2, |_| Ok(1e-8)).unwrap();
        assert_eq!(flat.multiplier, 1.0);
        let growing = fit_bath_scaling(vec![(2, 1e-8), (3, 1e-7), (4, 1e-6)], 2, |m: f64| {
            Ok(1e-8 * m * m)
        })
        .unwrap();
        assert!(
            (growing.multiplier - 10.0).abs() < 1e-6,
            "{}",
            growing.multiplier
        );
        assert_eq!(growing.points, vec![(2, 1e-8), (3, 1e-7), (4, 1e-6)]);
        let template = ModelTemplate {
            kind: GeometryKind::Linear,
            system_count: 4,
            j: 1e4,
            beta: 1e6,
        };
        assert!(matches!(
            calibrate_bath_scaling(&template, &[2, 9], |_| Ok(1.0)),
            Err(Error::BudgetExceeded(_))
        ));
    }

    #[test]
    fn calibration_on_simulated_baths() {
        let template = ModelTemplate {
            kind: GeometryKind::Linear,
            system_count: 4,
            j: 1e5,
            beta: 1e6,
        };
        let report =
            calibrate_bath_scaling(&template, &[2, 3, 4], memory_observable(0, timing(0.0)))
                .unwrap();
        assert_eq!(report.points.len(), 3);
        assert!(
            report.points.windows(2).all(|w| w[1].1 > w[0].1),
            "{:?}",
            report.points
        );
        assert!(report.slope > 0.0 && report.multiplier > 1.0 && report.bracketed);
    }

    #[test]
    fn mismatched_models_are_rejected() {
        let m = model(1e4, 1e6, 1);
        let other = model(1e4, 1e6, 2);
        let s = build_schedule(
            Strategy::While,
            &gate(GateName::Pi8),
            1,
            timing(0.0),
            Register::from(&other),
            true,
        )
        .unwrap();
        assert!(matches!(
            propagate(&s, &m),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn propagators_are_unitary_and_fidelities_bounded(
            lj in 0.0f64..7.0, lb in 0.0f64..8.0, n in 0usize..4, wide in any::<bool>(), g in 0usize..3,
        ) {
            let m = model(10f64.powf(lj), 10f64.powf(lb), 2);
            let name = [GateName::Memory, GateName::Pi8, GateName::Hadamard][g];
            let delta = if wide { 5e-10 } else { 0.0 };
            let s = build_schedule(Strategy::While, &gate(name), n, timing(delta), Register::from(&m), true).unwrap();
            prop_assert!(propagate(&s, &m).unwrap().unitarity_error() < 1e-10);
            let r = run(name, &m, n, delta);
            prop_assert!(r.fidelity >= 0.0 && r.fidelity <= 1.0 + 1e-12);
        }

        #[test]
        fn one_local_couplings_average_out(w in prop::collection::vec(-1.0f64..1.0, 12 * 8)) {
            let mut h = Operator::<f64>::zeros(64);
            for (k, c) in w.chunks(8).enumerate() {
                let (q, axis) = (k / 3, Axis::ALL[k % 3]);
                let bath = Operator::from_fn(4, |r, col| {
                    let (lo, hi) = (r.min(col), r.max(col));
                    let x = c[(lo * 4 + hi) % 8];
                    if r == col { Complex::new(x, 0.0) } else if r < col { Complex::new(x, c[(lo + hi) % 8]) } else { Complex::new(x, -c[(lo + hi) % 8]) }
                });
                let sys = PauliString::on(4, &[q], axis).unwrap().to_operator::<f64>();
                h = h.add(&crate::operator::kron(&sys, &bath)).unwrap();
            }
            let norm = spectral_norm(&h).unwrap();
            let mut pulses = vec![Operator::identity(64)];
            pulses.extend(Axis::ALL.iter().map(|&a| global_pulse_operator(a, 1, 2).unwrap()));
            prop_assert!(decoupling_condition_residual(&pulses, &h).unwrap() <= 1e-12 * norm);
        }
    }

    #[test]
    fn piece_with_zero_duration_is_identity() {
        let m = model(0.0, 0.0, 1);
        let mut cache = PropagatorCache::new(&m);
        let s = cdd_schedule(
            0,
            &[Piece::idle(0.0), Piece::idle(1e-9)],
            timing(0.0),
            Register::from(&m),
        )
        .unwrap();
        assert_eq!(
            cache
                .propagate(&s)
                .unwrap()
                .max_abs_diff(&Operator::identity(32)),
            0.0
        );
    }
}
