//! Schedule propagation with per-generator spectra and memoised subtrees.

use std::collections::HashMap;

use num_complex::Complex;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::model::SystemModel;
use crate::operator::{Axis, BlockOperator, Operator, PauliString, PauliSum, Spectrum};
use crate::scalar::Real;
use crate::sequence::{Action, Node, Piece, Schedule};

/// A unitary in the cheapest form that represents it exactly.
#[derive(Clone, Debug)]
pub(crate) enum Evolution<T> {
    Pauli(PauliString),
    Block(BlockOperator<T>),
    Dense(Operator<T>),
}

impl<T: Real> Evolution<T> {
    fn identity(qubits: usize) -> Self {
        Evolution::Pauli(PauliString::identity(qubits))
    }

    fn is_identity(&self) -> bool {
        matches!(self, Evolution::Pauli(p) if p.x_mask() == 0 && p.z_mask() == 0)
    }

    pub(crate) fn to_operator(&self) -> Operator<T> {
        match self {
            Evolution::Pauli(p) => p.to_operator(),
            Evolution::Block(b) => b.to_operator(),
            Evolution::Dense(m) => m.clone(),
        }
    }

    /// `later * self`.
    fn then(&self, later: &Self) -> Result<Self> {
        use Evolution::*;
        if self.is_identity() {
            return Ok(later.clone());
        }
        if later.is_identity() {
            return Ok(self.clone());
        }
        Ok(match (later, self) {
            (Pauli(l), Pauli(e)) => Dense(l.apply_left(&e.to_operator())?),
            (Pauli(l), Block(e)) => match e.pauli_left(l) {
                Some(b) => Block(b),
                None => Dense(l.apply_left(&e.to_operator())?),
            },
            (Block(l), Pauli(e)) => match l.pauli_right(e) {
                Some(b) => Block(b),
                None => Dense(e.apply_right(&l.to_operator())?),
            },
            (Pauli(l), Dense(e)) => Dense(l.apply_left(e)?),
            (Dense(l), Pauli(e)) => Dense(e.apply_right(l)?),
            (Block(l), Block(e)) => match l.matmul(e) {
                Some(b) => Block(b),
                None => Dense(l.to_operator().matmul(&e.to_operator())?),
            },
            (Block(l), Dense(e)) => Dense(l.mul_dense(e)?),
            (Dense(l), Block(e)) => Dense(e.dense_mul(l)?),
            (Dense(l), Dense(e)) => Dense(l.matmul(e)?),
        })
    }

    fn apply_vector(&self, v: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
        match self {
            Evolution::Pauli(p) => Ok(p.apply_vector(v)),
            Evolution::Block(b) => b.apply_vector(v),
            Evolution::Dense(m) => {
                let d = m.dim();
                if v.len() != d {
                    return Err(Error::DimensionMismatch {
                        expected: d,
                        found: v.len(),
                    });
                }
                Ok(m.as_slice()
                    .chunks(d)
                    .map(|row| {
                        row.iter()
                            .zip(v)
                            .fold(Complex::zero(), |s, (a, b)| s + a * b)
                    })
                    .collect())
            }
        }
    }
}

/// Identity of a time-independent generator on top of the environment.
#[derive(Clone, Copy, Debug, PartialEq)]
enum Generator<T> {
    Environment,
    Exchange { pair: (usize, usize), coupling: T },
    Pulse { axis: Axis, amplitude: T },
}

/// Spectra per distinct generator, unitaries per distinct
/// (generator, duration), and per-schedule unitaries keyed by segment label
/// and tree node. One cache serves one model; it is not shared across
/// threads.
pub struct PropagatorCache<'m, T> {
    model: &'m SystemModel<T>,
    environment: PauliSum<T>,
    spectra: Vec<(Generator<T>, Spectrum<T>)>,
    pieces: Vec<(Generator<T>, T, Evolution<T>)>,
    segments: HashMap<usize, Evolution<T>>,
    nodes: HashMap<usize, Evolution<T>>,
}

impl<'m, T: Real> PropagatorCache<'m, T> {
    pub fn new(model: &'m SystemModel<T>) -> Self {
        PropagatorCache {
            model,
            environment: model.environment(),
            spectra: Vec::new(),
            pieces: Vec::new(),
            segments: HashMap::new(),
            nodes: HashMap::new(),
        }
    }

    pub fn model(&self) -> &SystemModel<T> {
        self.model
    }

    /// Eigendecompositions performed so far.
    pub fn spectra_computed(&self) -> usize {
        self.spectra.len()
    }

    /// Segment unitaries held for the most recent schedule, by label.
    pub fn segment_unitary(&self, label: usize) -> Option<Operator<T>> {
        self.segments.get(&label).map(Evolution::to_operator)
    }

    /// Tree-node unitaries still held for the most recent schedule.
    pub fn node_unitary(&self, id: usize) -> Option<Operator<T>> {
        self.nodes.get(&id).map(Evolution::to_operator)
    }

    fn check(&self, schedule: &Schedule<T>) -> Result<()> {
        if schedule.qubits() != self.model.qubits() {
            return Err(Error::DimensionMismatch {
                expected: self.model.dim(),
                found: 1 << schedule.qubits(),
            });
        }
        if schedule.system_count() != self.model.system_count() {
            return Err(Error::DimensionMismatch {
                expected: self.model.system_count(),
                found: schedule.system_count(),
            });
        }
        Ok(())
    }

    fn spectrum(&mut self, g: Generator<T>) -> Result<&Spectrum<T>> {
        if let Some(k) = self.spectra.iter().position(|(key, _)| *key == g) {
            return Ok(&self.spectra[k].1);
        }
        let h = match g {
            Generator::Environment => self.environment.clone(),
            Generator::Exchange { pair, coupling } => self
                .environment
                .plus(&self.model.exchange_generator(&[(pair, coupling)])?),
            Generator::Pulse { axis, amplitude } => {
                let n = self.model.qubits();
                let mut drive = PauliSum::zero(n);
                for q in 0..self.model.system_count() {
                    drive.push(PauliString::on(n, &[q], axis)?, amplitude);
                }
                self.environment.plus(&drive)
            }
        };
        self.spectra.push((g, Spectrum::from_pauli_sum(&h)?));
        Ok(&self.spectra.last().expect("just pushed").1)
    }

    fn timed(&mut self, g: Generator<T>, duration: T) -> Result<Evolution<T>> {
        if duration.is_zero() {
            return Ok(Evolution::identity(self.model.qubits()));
        }
        if let Some((_, _, e)) = self
            .pieces
            .iter()
            .find(|(k, t, _)| *k == g && *t == duration)
        {
            return Ok(e.clone());
        }
        let e = Evolution::Block(self.spectrum(g)?.evolve_blocks(duration));
        self.pieces.push((g, duration, e.clone()));
        Ok(e)
    }

    fn piece(&mut self, p: &Piece<T>) -> Result<Evolution<T>> {
        let g = match p.op {
            Some(op) if !op.coupling.is_zero() => Generator::Exchange {
                pair: op.pair,
                coupling: op.coupling,
            },
            _ => Generator::Environment,
        };
        self.timed(g, p.duration)
    }

    /// Unitary of one action; intervals multiply their pieces in time order.
    fn action(&mut self, a: &Action<T>) -> Result<Evolution<T>> {
        match a {
            Action::Ideal { pauli, .. } => {
                if pauli.qubits() != self.model.qubits() {
                    return Err(Error::DimensionMismatch {
                        expected: self.model.dim(),
                        found: pauli.dim(),
                    });
                }
                Ok(Evolution::Pauli(*pauli))
            }
            Action::Pulse {
                axis,
                width,
                amplitude,
            } => self.timed(
                Generator::Pulse {
                    axis: *axis,
                    amplitude: *amplitude,
                },
                *width,
            ),
            Action::Interval(pieces) => {
                let mut acc = Evolution::identity(self.model.qubits());
                for p in pieces {
                    acc = acc.then(&self.piece(p)?)?;
                }
                Ok(acc)
            }
        }
    }

    fn segment(&mut self, schedule: &Schedule<T>, label: usize) -> Result<Evolution<T>> {
        if let Some(e) = self.segments.get(&label) {
            return Ok(e.clone());
        }
        let e = self.action(&schedule.actions()[label])?;
        self.segments.insert(label, e.clone());
        Ok(e)
    }

    fn reset(&mut self) {
        self.segments.clear();
        self.nodes.clear();
    }

    /// Time-ordered product of the schedule, evaluating every distinct
    /// subtree once. Node ids are topologically ordered (children first),
    /// and a node's unitary is dropped once all its parents are built.
    pub(crate) fn propagate_evolution(&mut self, schedule: &Schedule<T>) -> Result<Evolution<T>> {
        self.check(schedule)?;
        self.reset();
        let Some(root) = schedule.root() else {
            return Ok(Evolution::identity(self.model.qubits()));
        };
        let nodes = schedule.nodes();
        let mut reachable = vec![false; nodes.len()];
        reachable[root] = true;
        let mut uses = vec![0usize; nodes.len()];
        for id in (0..nodes.len()).rev() {
            if let (true, Node::Seq(children)) = (reachable[id], &nodes[id]) {
                for &c in children {
                    reachable[c] = true;
                    uses[c] += 1;
                }
            }
        }
        for id in (0..nodes.len()).filter(|&i| reachable[i]) {
            let e = match &nodes[id] {
                Node::Leaf(label) => self.segment(schedule, *label)?,
                Node::Seq(children) => {
                    let mut acc = Evolution::identity(self.model.qubits());
                    for &c in children {
                        acc = acc.then(&self.nodes[&c])?;
                    }
                    for &c in children {
                        uses[c] -= 1;
                        if uses[c] == 0 {
                            self.nodes.remove(&c);
                        }
                    }
                    acc
                }
            };
            self.nodes.insert(id, e);
        }
        Ok(self.nodes[&root].clone())
    }

    /// Schedule unitary through subtree reuse.
    pub fn propagate(&mut self, schedule: &Schedule<T>) -> Result<Operator<T>> {
        Ok(self.propagate_evolution(schedule)?.to_operator())
    }

    /// Schedule unitary by multiplying segment unitaries one at a time in
    /// time order, ignoring the tree.
    pub fn propagate_flat(&mut self, schedule: &Schedule<T>) -> Result<Operator<T>> {
        self.check(schedule)?;
        self.reset();
        let mut acc = Evolution::identity(self.model.qubits());
        for seg in schedule.segments() {
            acc = acc.then(&self.segment(schedule, seg.label)?)?;
        }
        Ok(acc.to_operator())
    }

    /// `U |psi>` applied segment by segment and piece by piece; never forms
    /// a dense product.
    pub fn evolve_state(
        &mut self,
        schedule: &Schedule<T>,
        psi: &[Complex<T>],
    ) -> Result<Vec<Complex<T>>> {
        self.check(schedule)?;
        self.reset();
        if psi.len() != self.model.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.model.dim(),
                found: psi.len(),
            });
        }
        let mut v = psi.to_vec();
        for seg in schedule.segments() {
            match &schedule.actions()[seg.label] {
                Action::Interval(pieces) => {
                    for p in pieces {
                        v = self.piece(p)?.apply_vector(&v)?;
                    }
                }
                other => v = self.action(other)?.apply_vector(&v)?,
            }
        }
        Ok(v)
    }

    /// Dense multiplications the tree path would perform, counting each
    /// distinct node once; used to pick between operator and state paths.
    pub(crate) fn tree_compositions(schedule: &Schedule<T>) -> usize {
        schedule
            .nodes()
            .iter()
            .map(|n| match n {
                Node::Seq(c) => c.len().saturating_sub(1),
                Node::Leaf(_) => 0,
            })
            .sum()
    }
}

/// Schedule unitary with subtree reuse and a fresh cache.
pub fn propagate<T: Real>(schedule: &Schedule<T>, model: &SystemModel<T>) -> Result<Operator<T>> {
    PropagatorCache::new(model).propagate(schedule)
}

/// Brute-force sequential product, for cross-checking [`propagate`].
pub fn propagate_flat<T: Real>(
    schedule: &Schedule<T>,
    model: &SystemModel<T>,
) -> Result<Operator<T>> {
    PropagatorCache::new(model).propagate_flat(schedule)
}
