//! Pulse schedules: CDD recursion, PDD repetition and the gate strategies.
//!
//! A schedule is a hash-consed tree over timed actions. Identical subtrees
//! share one node, so a CDD level whose four children coincide is stored
//! (and later propagated) once.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use crate::dfs::LogicalGate;
use crate::error::{Error, Result};
use crate::model::SystemModel;
use crate::operator::{Axis, PauliString};
use crate::scalar::Real;

/// Default pulse interval, 1 ns.
pub const DEFAULT_TAU0: f64 = 1e-9;

/// Exchange coupling active during part of an interval.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PieceOp<T> {
    /// Index of the elementary op within its gate.
    pub index: usize,
    pub pair: (usize, usize),
    /// Coupling weight on `sigma_a . sigma_b`, rad/s.
    pub coupling: T,
}

/// Constant-generator stretch of an interval.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Piece<T> {
    pub op: Option<PieceOp<T>>,
    pub duration: T,
}

impl<T: Real> Piece<T> {
    pub fn idle(duration: T) -> Self {
        Piece { op: None, duration }
    }
}

/// What a segment does; the environment `H_SB + H_B` is implied for every
/// action with nonzero duration.
#[derive(Clone, Debug, PartialEq)]
pub enum Action<T> {
    /// Free or gate evolution, pieces in time order.
    Interval(Vec<Piece<T>>),
    /// Rectangular pulse `amplitude sum_j sigma_j^axis` of duration `width`.
    Pulse { axis: Axis, width: T, amplitude: T },
    /// Instantaneous global Pauli.
    Ideal { axis: Axis, pauli: PauliString },
}

impl<T: Real> Action<T> {
    pub fn kind(&self) -> SegmentKind {
        match self {
            Action::Interval(_) => SegmentKind::Interval,
            _ => SegmentKind::Pulse,
        }
    }

    pub fn duration(&self) -> T {
        match self {
            Action::Interval(p) => p.iter().fold(T::zero(), |s, x| s + x.duration),
            Action::Pulse { width, .. } => *width,
            Action::Ideal { .. } => T::zero(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SegmentKind {
    Interval,
    Pulse,
}

/// One timed event of a flattened schedule. `label` indexes
/// [`Schedule::actions`]; equal labels mean physically identical segments.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Segment<T> {
    pub kind: SegmentKind,
    pub duration: T,
    pub label: usize,
}

/// Schedule tree node; `Seq` children run in time order.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Node {
    Leaf(usize),
    Seq(Vec<usize>),
}

/// How the schedule was built.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Structure {
    Empty,
    Cdd {
        level: usize,
    },
    Pdd {
        repetitions: usize,
    },
    /// CDD memory block of the given level followed by the gate.
    Then {
        level: usize,
    },
    Free,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Schedule<T> {
    structure: Structure,
    system_count: usize,
    qubits: usize,
    tau0: T,
    delta: T,
    actions: Vec<Action<T>>,
    nodes: Vec<Node>,
    root: Option<usize>,
}

#[derive(Default)]
struct Builder<T> {
    actions: Vec<Action<T>>,
    nodes: Vec<Node>,
    index: HashMap<Node, usize>,
}

impl<T: Real> Builder<T> {
    fn new() -> Self {
        Builder {
            actions: Vec::new(),
            nodes: Vec::new(),
            index: HashMap::new(),
        }
    }

    fn node(&mut self, n: Node) -> usize {
        if let Some(&id) = self.index.get(&n) {
            return id;
        }
        self.nodes.push(n.clone());
        self.index.insert(n, self.nodes.len() - 1);
        self.nodes.len() - 1
    }

    fn leaf(&mut self, a: Action<T>) -> usize {
        let label = match self.actions.iter().position(|x| *x == a) {
            Some(i) => i,
            None => {
                self.actions.push(a);
                self.actions.len() - 1
            }
        };
        self.node(Node::Leaf(label))
    }

    fn seq(&mut self, children: Vec<usize>) -> usize {
        self.node(Node::Seq(children))
    }

    fn finish(
        self,
        structure: Structure,
        model: &Register,
        timing: Timing<T>,
        root: Option<usize>,
    ) -> Schedule<T> {
        Schedule {
            structure,
            system_count: model.system_count,
            qubits: model.qubits,
            tau0: timing.tau0,
            delta: timing.delta,
            actions: self.actions,
            nodes: self.nodes,
            root,
        }
    }
}

/// Pulse interval and pulse width, seconds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Timing<T> {
    pub tau0: T,
    pub delta: T,
}

impl<T: Real> Timing<T> {
    pub fn new(tau0: T, delta: T) -> Result<Self> {
        if !(tau0 > T::zero()) || !tau0.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "tau0 must be positive, got {}",
                tau0.as_f64()
            )));
        }
        if !(delta >= T::zero()) || !delta.is_finite() {
            return Err(Error::NegativeWidth(delta.as_f64()));
        }
        Ok(Timing { tau0, delta })
    }
}

/// Register sizes a schedule is built for.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Register {
    pub system_count: usize,
    pub qubits: usize,
}

impl<T: Real> From<&SystemModel<T>> for Register {
    fn from(m: &SystemModel<T>) -> Self {
        Register {
            system_count: m.system_count(),
            qubits: m.qubits(),
        }
    }
}

fn pulse<T: Real>(
    b: &mut Builder<T>,
    axis: Axis,
    reg: &Register,
    timing: Timing<T>,
) -> Result<usize> {
    let action = if timing.delta.is_zero() {
        let system: Vec<usize> = (0..reg.system_count).collect();
        Action::Ideal {
            axis,
            pauli: PauliString::on(reg.qubits, &system, axis)?,
        }
    } else {
        Action::Pulse {
            axis,
            width: timing.delta,
            amplitude: T::FRAC_PI_2() / timing.delta,
        }
    };
    Ok(b.leaf(action))
}

/// CDD tree whose `k`-th interval (time order) is `interval(k)`.
fn cdd_tree<T: Real>(
    b: &mut Builder<T>,
    level: usize,
    offset: usize,
    reg: &Register,
    timing: Timing<T>,
    interval: &dyn Fn(usize) -> Vec<Piece<T>>,
) -> Result<usize> {
    if level == 0 {
        return Ok(b.leaf(Action::Interval(interval(offset))));
    }
    let stride = 1usize << (2 * (level - 1));
    let x = pulse(b, Axis::X, reg, timing)?;
    let z = pulse(b, Axis::Z, reg, timing)?;
    let mut c = Vec::with_capacity(4);
    for i in 0..4 {
        c.push(cdd_tree(
            b,
            level - 1,
            offset + i * stride,
            reg,
            timing,
            interval,
        )?);
    }
    let first = b.seq(vec![c[0], x, c[1], z]);
    let second = b.seq(vec![c[2], x, c[3], z]);
    Ok(b.seq(vec![first, second]))
}

fn check_level(level: usize) -> Result<()> {
    if level > 15 {
        return Err(Error::InvalidArgument(format!(
            "concatenation level {level} is too large"
        )));
    }
    Ok(())
}

/// `4^level`.
pub fn interval_count(level: usize) -> usize {
    1usize << (2 * level)
}

/// `sum_{k=1..level} 4^k`.
pub fn cdd_pulse_count(level: usize) -> usize {
    (1..=level).map(interval_count).sum()
}

/// CDD of the given level with every interval equal to `interval`.
pub fn cdd_schedule<T: Real>(
    level: usize,
    interval: &[Piece<T>],
    timing: Timing<T>,
    reg: Register,
) -> Result<Schedule<T>> {
    check_level(level)?;
    check_interval(interval, timing.tau0)?;
    let mut b = Builder::new();
    let root = cdd_tree(&mut b, level, 0, &reg, timing, &|_| interval.to_vec())?;
    Ok(b.finish(Structure::Cdd { level }, &reg, timing, Some(root)))
}

/// `repetitions` consecutive level-1 blocks.
pub fn pdd_schedule<T: Real>(
    repetitions: usize,
    interval: &[Piece<T>],
    timing: Timing<T>,
    reg: Register,
) -> Result<Schedule<T>> {
    if repetitions == 0 {
        return Err(Error::NonPositiveRepetitions);
    }
    check_interval(interval, timing.tau0)?;
    let mut b = Builder::new();
    let block = cdd_tree(&mut b, 1, 0, &reg, timing, &|_| interval.to_vec())?;
    let root = if repetitions == 1 {
        block
    } else {
        b.seq(vec![block; repetitions])
    };
    Ok(b.finish(Structure::Pdd { repetitions }, &reg, timing, Some(root)))
}

fn check_interval<T: Real>(interval: &[Piece<T>], tau0: T) -> Result<()> {
    let total = interval.iter().fold(T::zero(), |s, p| s + p.duration);
    if (total - tau0).abs() > T::tol(1e-12) * tau0
        || interval.iter().any(|p| !(p.duration >= T::zero()))
    {
        return Err(Error::InvalidArgument(
            "interval pieces must have non-negative durations summing to tau0".into(),
        ));
    }
    Ok(())
}

/// Apportions `total` slots to `weights`, each at least one, the rest by
/// largest remainder; ties go to the earlier entry.
pub fn allocate_intervals(weights: &[f64], total: usize) -> Vec<usize> {
    let n = weights.len();
    if n == 0 {
        return Vec::new();
    }
    assert!(total >= n);
    let spare = total - n;
    let sum: f64 = weights.iter().map(|w| w.abs()).sum();
    let quotas: Vec<f64> = if sum > 0.0 {
        weights
            .iter()
            .map(|w| spare as f64 * w.abs() / sum)
            .collect()
    } else {
        vec![spare as f64 / n as f64; n]
    };
    let mut counts: Vec<usize> = quotas.iter().map(|q| 1 + q.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        let (ra, rb) = (quotas[a] - quotas[a].floor(), quotas[b] - quotas[b].floor());
        rb.partial_cmp(&ra)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    for &i in order.iter().take(total - assigned) {
        counts[i] += 1;
    }
    counts
}

/// Splits `duration` across the ops in proportion to `|angle|`, each piece
/// carrying the coupling that accumulates its op's angle.
fn packed_pieces<T: Real>(
    gate: &LogicalGate<T>,
    ops: std::ops::Range<usize>,
    duration: T,
) -> Vec<Piece<T>> {
    let active: Vec<usize> = ops.filter(|&i| !gate.ops[i].angle.is_zero()).collect();
    let weight = active
        .iter()
        .fold(T::zero(), |s, &i| s + gate.ops[i].angle.abs());
    if active.is_empty() {
        return vec![Piece::idle(duration)];
    }
    active
        .iter()
        .map(|&i| {
            let op = gate.ops[i];
            let d = duration * op.angle.abs() / weight;
            Piece {
                op: Some(PieceOp {
                    index: i,
                    pair: op.pair,
                    coupling: op.angle / d,
                }),
                duration: d,
            }
        })
        .collect()
}

/// Spreads the gate over a CDD sequence: each op owns a contiguous block of
/// intervals (largest-remainder allocation by `|angle|`, at least one each)
/// with coupling `angle / (count tau0)`. With fewer intervals than ops,
/// `packing` puts several ops into one interval (split evenly by count,
/// time shared by `|angle|`); otherwise `TooFewIntervals` is returned.
pub fn decouple_while_compute<T: Real>(
    gate: &LogicalGate<T>,
    level: usize,
    timing: Timing<T>,
    reg: Register,
    packing: bool,
) -> Result<Schedule<T>> {
    check_level(level)?;
    check_gate(gate, &reg)?;
    let total = interval_count(level);
    let l = gate.ops.len();
    let tau0 = timing.tau0;
    let interval: Box<dyn Fn(usize) -> Vec<Piece<T>>> = if l == 0 {
        Box::new(move |_| vec![Piece::idle(tau0)])
    } else if l <= total {
        let weights: Vec<f64> = gate.ops.iter().map(|o| o.angle.as_f64()).collect();
        let counts = allocate_intervals(&weights, total);
        let mut owner = Vec::with_capacity(total);
        for (i, &c) in counts.iter().enumerate() {
            owner.extend(std::iter::repeat_n(i, c));
        }
        let couplings: Vec<T> = gate
            .ops
            .iter()
            .zip(&counts)
            .map(|(o, &c)| o.angle / (T::lit(c as f64) * tau0))
            .collect();
        let gate = gate.clone();
        Box::new(move |k| {
            let i = owner[k];
            let op = gate.ops[i];
            vec![Piece {
                op: Some(PieceOp {
                    index: i,
                    pair: op.pair,
                    coupling: couplings[i],
                }),
                duration: tau0,
            }]
        })
    } else if packing {
        let gate = gate.clone();
        Box::new(move |k| {
            let (base, extra) = (l / total, l % total);
            let start = k * base + k.min(extra);
            let len = base + usize::from(k < extra);
            packed_pieces(&gate, start..start + len, tau0)
        })
    } else {
        return Err(Error::TooFewIntervals {
            ops: l,
            intervals: total,
        });
    };
    let mut b = Builder::new();
    let root = cdd_tree(&mut b, level, 0, &reg, timing, &*interval)?;
    Ok(b.finish(Structure::Cdd { level }, &reg, timing, Some(root)))
}

/// CDD memory block followed by one `tau0` interval per op at coupling
/// `angle / tau0`.
pub fn decouple_then_compute<T: Real>(
    gate: &LogicalGate<T>,
    level: usize,
    timing: Timing<T>,
    reg: Register,
) -> Result<Schedule<T>> {
    check_level(level)?;
    check_gate(gate, &reg)?;
    let tau0 = timing.tau0;
    let mut b = Builder::new();
    let memory = cdd_tree(&mut b, level, 0, &reg, timing, &|_| vec![Piece::idle(tau0)])?;
    if gate.ops.is_empty() {
        return Ok(b.finish(Structure::Cdd { level }, &reg, timing, Some(memory)));
    }
    let mut children = vec![memory];
    for (i, op) in gate.ops.iter().enumerate() {
        let piece = Piece {
            op: Some(PieceOp {
                index: i,
                pair: op.pair,
                coupling: op.angle / tau0,
            }),
            duration: tau0,
        };
        children.push(b.leaf(Action::Interval(vec![piece])));
    }
    let root = b.seq(children);
    Ok(b.finish(Structure::Then { level }, &reg, timing, Some(root)))
}

/// One unprotected interval of length `total_time` carrying the whole gate,
/// ops in sequence with time shared by `|angle|`.
pub fn free_evolution_schedule<T: Real>(
    gate: &LogicalGate<T>,
    total_time: T,
    reg: Register,
) -> Result<Schedule<T>> {
    check_gate(gate, &reg)?;
    let timing = Timing::new(total_time, T::zero())?;
    let mut b = Builder::new();
    let root = b.leaf(Action::Interval(packed_pieces(
        gate,
        0..gate.ops.len(),
        total_time,
    )));
    Ok(b.finish(Structure::Free, &reg, timing, Some(root)))
}

fn check_gate<T: Real>(gate: &LogicalGate<T>, reg: &Register) -> Result<()> {
    if gate.system_count() != reg.system_count {
        return Err(Error::DimensionMismatch {
            expected: reg.system_count,
            found: gate.system_count(),
        });
    }
    Ok(())
}

/// Gate strategy of a run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Strategy {
    While,
    Then,
    Free,
}

impl Strategy {
    pub fn name(self) -> &'static str {
        match self {
            Strategy::While => "while",
            Strategy::Then => "then",
            Strategy::Free => "free",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "while" => Ok(Strategy::While),
            "then" => Ok(Strategy::Then),
            "free" => Ok(Strategy::Free),
            other => Err(format!(
                "unknown strategy `{other}` (expected while|then|free)"
            )),
        }
    }
}

/// Schedule for a strategy at level `level`; `free` evolves for
/// `4^level tau0`.
pub fn build_schedule<T: Real>(
    strategy: Strategy,
    gate: &LogicalGate<T>,
    level: usize,
    timing: Timing<T>,
    reg: Register,
    packing: bool,
) -> Result<Schedule<T>> {
    match strategy {
        Strategy::While => decouple_while_compute(gate, level, timing, reg, packing),
        Strategy::Then => decouple_then_compute(gate, level, timing, reg),
        Strategy::Free => {
            check_level(level)?;
            free_evolution_schedule(
                gate,
                T::lit(interval_count(level) as f64) * timing.tau0,
                reg,
            )
        }
    }
}

impl<T: Real> Schedule<T> {
    /// No segments; propagates to the identity.
    pub fn empty(reg: Register, timing: Timing<T>) -> Self {
        Builder::new().finish(Structure::Empty, &reg, timing, None)
    }

    pub fn structure(&self) -> Structure {
        self.structure
    }

    /// Concatenation level, if the schedule has one.
    pub fn level(&self) -> Option<usize> {
        match self.structure {
            Structure::Cdd { level } | Structure::Then { level } => Some(level),
            Structure::Pdd { .. } => Some(1),
            Structure::Free => Some(0),
            Structure::Empty => None,
        }
    }

    pub fn system_count(&self) -> usize {
        self.system_count
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn tau0(&self) -> T {
        self.tau0
    }

    pub fn delta(&self) -> T {
        self.delta
    }

    pub fn actions(&self) -> &[Action<T>] {
        &self.actions
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn root(&self) -> Option<usize> {
        self.root
    }

    /// Segments in time order.
    pub fn segments(&self) -> Vec<Segment<T>> {
        let mut out = Vec::new();
        if let Some(r) = self.root {
            self.flatten(r, &mut out);
        }
        out
    }

    fn flatten(&self, id: usize, out: &mut Vec<Segment<T>>) {
        match &self.nodes[id] {
            Node::Leaf(label) => {
                let a = &self.actions[*label];
                out.push(Segment {
                    kind: a.kind(),
                    duration: a.duration(),
                    label: *label,
                });
            }
            Node::Seq(children) => {
                for &c in children {
                    self.flatten(c, out);
                }
            }
        }
    }

    /// Per node, the number of leaf segments below it.
    fn counts(&self, kind: SegmentKind) -> Vec<usize> {
        let mut counts = vec![0usize; self.nodes.len()];
        for (id, n) in self.nodes.iter().enumerate() {
            counts[id] = match n {
                Node::Leaf(l) => usize::from(self.actions[*l].kind() == kind),
                Node::Seq(c) => c.iter().map(|&k| counts[k]).sum(),
            };
        }
        counts
    }

    fn count(&self, kind: SegmentKind) -> usize {
        self.root.map_or(0, |r| self.counts(kind)[r])
    }

    pub fn interval_count(&self) -> usize {
        self.count(SegmentKind::Interval)
    }

    pub fn pulse_count(&self) -> usize {
        self.count(SegmentKind::Pulse)
    }

    pub fn total_time(&self) -> T {
        self.segments()
            .iter()
            .fold(T::zero(), |s, x| s + x.duration)
    }

    /// Duration from the construction parameters: `T` for a free schedule,
    /// otherwise `intervals x tau0 + pulses x delta`. Equals
    /// [`Schedule::total_time`] up to rounding.
    pub fn nominal_duration(&self) -> T {
        match self.structure {
            Structure::Empty => T::zero(),
            Structure::Free => self.tau0,
            _ => {
                T::lit(self.interval_count() as f64) * self.tau0
                    + T::lit(self.pulse_count() as f64) * self.delta
            }
        }
    }

    pub fn interval_time(&self) -> T {
        self.segments()
            .iter()
            .filter(|s| s.kind == SegmentKind::Interval)
            .fold(T::zero(), |s, x| s + x.duration)
    }

    /// Accumulated `coupling x duration` per gate op index.
    pub fn op_angles(&self, ops: usize) -> Vec<T> {
        let mut acc = vec![T::zero(); ops];
        for seg in self.segments() {
            if let Action::Interval(pieces) = &self.actions[seg.label] {
                for p in pieces {
                    if let Some(op) = p.op {
                        acc[op.index] = acc[op.index] + op.coupling * p.duration;
                    }
                }
            }
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dfs::{
        build_gate, global_pulse_operator, project_logical, GateName, LibraryOptions,
    };
    use crate::model::ExchangeOp;
    use crate::operator::Operator;
    use proptest::prelude::*;

    const REG: Register = Register {
        system_count: 4,
        qubits: 6,
    };

    fn timing(delta: f64) -> Timing<f64> {
        Timing::new(1e-9, delta).unwrap()
    }

    fn idle() -> Vec<Piece<f64>> {
        vec![Piece::idle(1e-9)]
    }

    fn gate(name: GateName) -> LogicalGate<f64> {
        build_gate(name, &LibraryOptions::default()).unwrap()
    }

    fn synthetic(angles: &[f64]) -> LogicalGate<f64> {
        let mut g = gate(GateName::Memory);
        let pairs = [(0, 1), (1, 2)];
        g.ops = angles
            .iter()
            .enumerate()
            .map(|(i, &a)| ExchangeOp::new(pairs[i % 2].0, pairs[i % 2].1, a).unwrap())
            .collect();
        g
    }

    /// Time-ordered pulse/interval pattern by direct expansion of the rule.
    fn expand(level: usize) -> Vec<&'static str> {
        if level == 0 {
            return vec!["U"];
        }
        let inner = expand(level - 1);
        let mut out = Vec::new();
        for p in ["X", "Z", "X", "Z"] {
            out.extend(inner.iter().copied());
            out.push(p);
        }
        out
    }

    fn pattern(s: &Schedule<f64>) -> Vec<&'static str> {
        s.segments()
            .iter()
            .map(|seg| match &s.actions()[seg.label] {
                Action::Interval(_) => "U",
                Action::Pulse { axis: Axis::X, .. } | Action::Ideal { axis: Axis::X, .. } => "X",
                _ => "Z",
            })
            .collect()
    }

    #[test]
    fn cdd_examples() {
        let s0 = cdd_schedule(0, &idle(), timing(0.0), REG).unwrap();
        assert_eq!((s0.interval_count(), s0.pulse_count()), (1, 0));
        let s1 = cdd_schedule(1, &idle(), timing(0.0), REG).unwrap();
        assert_eq!(pattern(&s1), vec!["U", "X", "U", "Z", "U", "X", "U", "Z"]);
        let s2 = cdd_schedule(2, &idle(), timing(0.0), REG).unwrap();
        assert_eq!((s2.interval_count(), s2.pulse_count()), (16, 20));
        assert_eq!(pattern(&s2), expand(2));
        // outer X directly follows the inner block's closing Z
        assert_eq!(&pattern(&s2)[7..9], &["Z", "X"]);
    }

    #[test]
    fn pdd_examples() {
        let c1 = cdd_schedule(1, &idle(), timing(2e-10), REG).unwrap();
        let p1 = pdd_schedule(1, &idle(), timing(2e-10), REG).unwrap();
        assert_eq!(c1.segments(), p1.segments());
        assert_eq!(c1.actions(), p1.actions());
        let p3 = pdd_schedule(3, &idle(), timing(0.0), REG).unwrap();
        assert_eq!((p3.interval_count(), p3.pulse_count()), (12, 12));
        let p4 = pdd_schedule(4, &idle(), timing(0.0), REG).unwrap();
        let c2 = cdd_schedule(2, &idle(), timing(0.0), REG).unwrap();
        assert_eq!(p4.interval_count(), c2.interval_count());
        assert_ne!(pattern(&p4), pattern(&c2));
        assert!(matches!(
            pdd_schedule(0, &idle(), timing(0.0), REG),
            Err(Error::NonPositiveRepetitions)
        ));
    }

    #[test]
    fn identical_levels_are_shared() {
        let s = cdd_schedule(5, &idle(), timing(0.0), REG).unwrap();
        // per level: one block node, one half node; plus three leaves
        assert_eq!(s.nodes().len(), 3 + 2 * 5);
        assert_eq!(s.interval_count(), 1024);
    }

    #[test]
    fn memory_intervals_carry_no_exchange() {
        let g = gate(GateName::Memory);
        for n in 0..4 {
            let s = decouple_while_compute(&g, n, timing(0.0), REG, true).unwrap();
            for seg in s.segments() {
                if let Action::Interval(p) = &s.actions()[seg.label] {
                    assert!(p.iter().all(|x| x.op.is_none()));
                }
            }
            let t = decouple_then_compute(&g, n, timing(0.0), REG).unwrap();
            assert_eq!(s.segments(), t.segments());
        }
    }

    #[test]
    fn pi8_spreads_evenly() {
        let g = gate(GateName::Pi8);
        let s = decouple_while_compute(&g, 1, timing(0.0), REG, true).unwrap();
        let intervals: Vec<_> = s
            .segments()
            .into_iter()
            .filter(|x| x.kind == SegmentKind::Interval)
            .collect();
        assert_eq!(intervals.len(), 4);
        assert!(intervals.iter().all(|x| x.label == intervals[0].label));
        let Action::Interval(p) = &s.actions()[intervals[0].label] else {
            panic!()
        };
        assert_eq!(p[0].op.unwrap().coupling, g.ops[0].angle / (4.0 * 1e-9));
    }

    #[test]
    fn then_strategy_appends_the_gate() {
        let g = gate(GateName::Pi8);
        let s = decouple_then_compute(&g, 1, timing(0.0), REG).unwrap();
        assert_eq!(s.interval_count(), 5);
        assert!((s.total_time() - 5e-9).abs() < 1e-24);
    }

    #[test]
    fn free_schedule_is_one_interval() {
        let g = gate(GateName::Memory);
        let s = free_evolution_schedule(&g, 4e-9, REG).unwrap();
        assert_eq!((s.interval_count(), s.pulse_count()), (1, 0));
        assert_eq!(s.actions()[0], Action::Interval(vec![Piece::idle(4e-9)]));
        let h = gate(GateName::Hadamard);
        let s = free_evolution_schedule(&h, 3e-9, REG).unwrap();
        let a = s.op_angles(3);
        for (x, op) in a.iter().zip(&h.ops) {
            assert!((x - op.angle).abs() <= 1e-15 * op.angle.abs());
        }
    }

    #[test]
    fn level_zero_while_equals_free_at_tau0() {
        for name in [GateName::Memory, GateName::Pi8, GateName::Hadamard] {
            let g = gate(name);
            let a = decouple_while_compute(&g, 0, timing(0.0), REG, true).unwrap();
            let b = free_evolution_schedule(&g, 1e-9, REG).unwrap();
            assert_eq!(a.segments(), b.segments());
            assert_eq!(a.actions(), b.actions());
        }
    }

    #[test]
    fn strict_mode_rejects_packing() {
        let g = gate(GateName::Hadamard);
        assert!(matches!(
            decouple_while_compute(&g, 0, timing(0.0), REG, false),
            Err(Error::TooFewIntervals {
                ops: 3,
                intervals: 1
            })
        ));
        assert!(decouple_while_compute(&g, 1, timing(0.0), REG, false).is_ok());
    }

    #[test]
    fn allocation_examples() {
        assert_eq!(allocate_intervals(&[1.0], 4), vec![4]);
        assert_eq!(allocate_intervals(&[1.0, 1.0, 2.0], 4), vec![1, 1, 2]);
        assert_eq!(allocate_intervals(&[0.0, 0.0], 5), vec![3, 2]);
        assert_eq!(allocate_intervals(&[1e-9, 1.0], 16), vec![1, 15]);
    }

    #[test]
    fn bad_timing_is_rejected() {
        assert!(matches!(
            Timing::new(1e-9, -1.0),
            Err(Error::NegativeWidth(_))
        ));
        assert!(matches!(
            Timing::<f64>::new(0.0, 0.0),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn ideal_pulses_compose_to_code_identity() {
        for n in 0..=4 {
            let s = cdd_schedule(n, &idle(), timing(0.0), REG).unwrap();
            let mut u = Operator::<f64>::identity(16);
            for seg in s.segments() {
                if let Action::Ideal { axis, .. } = &s.actions()[seg.label] {
                    u = global_pulse_operator::<f64>(*axis, 1, 0)
                        .unwrap()
                        .matmul(&u)
                        .unwrap();
                }
            }
            let (m, leak) = project_logical(&u, 1).unwrap();
            assert!(leak < 1e-10 && m.max_abs_diff(&Operator::identity(2)) < 1e-10);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn counting_laws(n in 0usize..6, delta in prop_oneof![Just(0.0), 1e-12f64..1e-9]) {
            let s = cdd_schedule(n, &idle(), timing(delta), REG).unwrap();
            prop_assert_eq!(s.interval_count(), interval_count(n));
            prop_assert_eq!(s.pulse_count(), cdd_pulse_count(n));
            let tau_n = interval_count(n) as f64 * 1e-9;
            prop_assert!((s.interval_time() - tau_n).abs() <= 1e-12 * tau_n);
            let total = tau_n + s.pulse_count() as f64 * delta;
            prop_assert!((s.total_time() - total).abs() <= 1e-12 * total);
            prop_assert!((s.nominal_duration() - total).abs() <= 1e-15 * total);
        }

        #[test]
        fn angles_are_conserved(angles in prop::collection::vec(-0.78f64..0.78, 0..8), n in 0usize..6, packing in any::<bool>()) {
            let g = synthetic(&angles);
            match decouple_while_compute(&g, n, timing(0.0), REG, packing) {
                Ok(s) => {
                    prop_assert_eq!(s.interval_count(), interval_count(n));
                    for (got, op) in s.op_angles(angles.len()).iter().zip(&g.ops) {
                        prop_assert!((got - op.angle).abs() <= 1e-12 * op.angle.abs());
                    }
                }
                Err(Error::TooFewIntervals { .. }) => prop_assert!(!packing && angles.len() > interval_count(n)),
                Err(e) => return Err(TestCaseError::fail(e.to_string())),
            }
        }

        #[test]
        fn allocation_sums_and_covers(weights in prop::collection::vec(-2.0f64..2.0, 1..12), extra in 0usize..40) {
            let total = weights.len() + extra;
            let c = allocate_intervals(&weights, total);
            prop_assert_eq!(c.iter().sum::<usize>(), total);
            prop_assert!(c.iter().all(|&k| k >= 1));
        }
    }
}
