//! Physical model: qubit layout, system-bath and intrabath couplings,
//! exchange generators and pulse generators.
//!
//! Hamiltonians are kept as exact Pauli sums; `to_operator` materialises them.
//! System qubits occupy register slots `0..system_count`, bath qubits follow.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::operator::{Axis, Operator, PauliString, PauliSum};
use crate::scalar::Real;

/// Largest register the model will build.
pub const MAX_QUBITS: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GeometryKind {
    Linear,
    Circular,
    Polygonal,
}

impl GeometryKind {
    pub fn name(self) -> &'static str {
        match self {
            GeometryKind::Linear => "linear",
            GeometryKind::Circular => "circular",
            GeometryKind::Polygonal => "polygonal",
        }
    }
}

impl fmt::Display for GeometryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GeometryKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "linear" => Ok(GeometryKind::Linear),
            "circular" => Ok(GeometryKind::Circular),
            "polygonal" => Ok(GeometryKind::Polygonal),
            other => Err(format!(
                "unknown geometry `{other}` (expected linear|circular|polygonal)"
            )),
        }
    }
}

/// Planar positions of system and bath qubits, in units of the nearest
/// neighbour spacing.
#[derive(Clone, Debug, PartialEq)]
pub struct Geometry<T> {
    kind: GeometryKind,
    system_count: usize,
    bath_count: usize,
    positions: Vec<[T; 2]>,
}

impl<T: Real> Geometry<T> {
    /// Standard layout for one or two code blocks.
    ///
    /// * linear: all qubits on a line at unit spacing, system first;
    /// * circular: all qubits on a circle with unit chord between neighbours;
    /// * polygonal: system on a unit-spacing line, bath on a regular polygon
    ///   of unit side centred one unit above the middle of the line.
    pub fn new(kind: GeometryKind, system_count: usize, bath_count: usize) -> Result<Self> {
        if system_count != 4 && system_count != 8 {
            return Err(Error::UnsupportedCount(format!(
                "system_count = {system_count}, expected 4 or 8"
            )));
        }
        if bath_count == 0 {
            return Err(Error::UnsupportedCount(
                "bath_count must be at least 1".into(),
            ));
        }
        if system_count + bath_count > MAX_QUBITS {
            return Err(Error::UnsupportedCount(format!(
                "{} qubits exceed the limit of {MAX_QUBITS}",
                system_count + bath_count
            )));
        }
        let n = system_count + bath_count;
        let zero = T::zero();
        let positions: Vec<[T; 2]> = match kind {
            GeometryKind::Linear => (0..n).map(|q| [T::lit(q as f64), zero]).collect(),
            GeometryKind::Circular => {
                let nf = T::lit(n as f64);
                let radius = T::one() / (T::lit(2.0) * (T::PI() / nf).sin());
                (0..n)
                    .map(|q| {
                        let (s, c) = (T::TAU() * T::lit(q as f64) / nf).sin_cos();
                        [radius * c, radius * s]
                    })
                    .collect()
            }
            GeometryKind::Polygonal => {
                let mut pos: Vec<[T; 2]> = (0..system_count)
                    .map(|q| [T::lit(q as f64), zero])
                    .collect();
                let centre = [T::lit((system_count as f64 - 1.0) / 2.0), T::one()];
                let b = bath_count;
                if b == 1 {
                    pos.push(centre);
                } else {
                    let radius = T::one() / (T::lit(2.0) * (T::PI() / T::lit(b as f64)).sin());
                    for k in 0..b {
                        let theta = T::FRAC_PI_2() + T::TAU() * T::lit(k as f64) / T::lit(b as f64);
                        let (s, c) = theta.sin_cos();
                        pos.push([centre[0] + radius * c, centre[1] + radius * s]);
                    }
                }
                pos
            }
        };
        Self::from_positions(kind, system_count, positions)
    }

    /// Arbitrary layout; the first `system_count` positions are system qubits.
    pub fn from_positions(
        kind: GeometryKind,
        system_count: usize,
        positions: Vec<[T; 2]>,
    ) -> Result<Self> {
        if system_count == 0 || system_count > positions.len() {
            return Err(Error::UnsupportedCount(format!(
                "system_count = {system_count} with {} positions",
                positions.len()
            )));
        }
        if positions.len() > MAX_QUBITS {
            return Err(Error::UnsupportedCount(format!(
                "{} qubits exceed the limit of {MAX_QUBITS}",
                positions.len()
            )));
        }
        let g = Geometry {
            kind,
            system_count,
            bath_count: positions.len() - system_count,
            positions,
        };
        let tiny = T::tol(1e-9);
        for i in 0..g.qubits() {
            for j in i + 1..g.qubits() {
                if !(g.distance(i, j) > tiny) {
                    return Err(Error::DegenerateGeometry(i, j));
                }
            }
        }
        Ok(g)
    }

    pub fn kind(&self) -> GeometryKind {
        self.kind
    }

    pub fn system_count(&self) -> usize {
        self.system_count
    }

    pub fn bath_count(&self) -> usize {
        self.bath_count
    }

    pub fn qubits(&self) -> usize {
        self.positions.len()
    }

    pub fn positions(&self) -> &[[T; 2]] {
        &self.positions
    }

    pub fn distance(&self, i: usize, j: usize) -> T {
        let (a, b) = (self.positions[i], self.positions[j]);
        (a[0] - b[0]).hypot(a[1] - b[1])
    }

    fn bath_qubits(&self) -> std::ops::Range<usize> {
        self.system_count..self.qubits()
    }
}

/// `build_geometry` under its operation name.
pub fn build_geometry<T: Real>(
    kind: GeometryKind,
    system_count: usize,
    bath_count: usize,
) -> Result<Geometry<T>> {
    Geometry::new(kind, system_count, bath_count)
}

/// Heisenberg exchange `exp(-i angle sigma_i . sigma_j)` on a system pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExchangeOp<T> {
    pub pair: (usize, usize),
    pub angle: T,
}

impl<T: Real> ExchangeOp<T> {
    pub fn new(i: usize, j: usize, angle: T) -> Result<Self> {
        if i == j {
            return Err(Error::IndexOutOfRange(format!(
                "exchange pair ({i}, {j}) repeats a qubit"
            )));
        }
        Ok(ExchangeOp {
            pair: (i.min(j), i.max(j)),
            angle,
        })
    }
}

fn two_body<T: Real>(n: usize, i: usize, j: usize, weights: [T; 3]) -> Result<PauliSum<T>> {
    let mut h = PauliSum::zero(n);
    for (axis, w) in Axis::ALL.into_iter().zip(weights) {
        h.push(PauliString::on(n, &[i, j], axis)?, w);
    }
    Ok(h)
}

/// `sum_j sigma_j^axis (x) J sum_i sigma_i^axis / 2^d_ij` for one axis.
pub fn build_h_sb_axis<T: Real>(g: &Geometry<T>, j: T, axis: Axis) -> PauliSum<T> {
    let n = g.qubits();
    let mut h = PauliSum::zero(n);
    for s in 0..g.system_count() {
        for b in g.bath_qubits() {
            let w = j / T::lit(2.0).powf(g.distance(s, b));
            h.push(
                PauliString::on(n, &[s, b], axis).expect("indices within register"),
                w,
            );
        }
    }
    h
}

/// One-local isotropic system-bath coupling.
pub fn build_h_sb<T: Real>(g: &Geometry<T>, j: T) -> PauliSum<T> {
    Axis::ALL
        .iter()
        .fold(PauliSum::zero(g.qubits()), |acc, &a| {
            acc.plus(&build_h_sb_axis(g, j, a))
        })
}

/// Dipolar intrabath coupling `beta sum_{i<j} (YY + ZZ - 2 XX) / d^3`.
pub fn build_h_b<T: Real>(g: &Geometry<T>, beta: T) -> PauliSum<T> {
    let n = g.qubits();
    let mut h = PauliSum::zero(n);
    let bath: Vec<usize> = g.bath_qubits().collect();
    for (k, &i) in bath.iter().enumerate() {
        for &j in &bath[k + 1..] {
            let w = beta / g.distance(i, j).powi(3);
            let term =
                two_body(n, i, j, [-T::lit(2.0) * w, w, w]).expect("indices within register");
            h = h.plus(&term);
        }
    }
    h
}

/// `sum_k w_k sigma_a . sigma_b` on the system pairs, identity elsewhere.
pub fn build_exchange_generator<T: Real>(
    system_count: usize,
    qubits: usize,
    terms: &[((usize, usize), T)],
) -> Result<PauliSum<T>> {
    let mut h = PauliSum::zero(qubits);
    for &((a, b), w) in terms {
        if a >= system_count || b >= system_count || a == b {
            return Err(Error::IndexOutOfRange(format!(
                "exchange pair ({a}, {b}) outside the {system_count} system qubits"
            )));
        }
        h = h.plus(&two_body(qubits, a, b, [w, w, w])?);
    }
    Ok(h)
}

/// A decoupling pulse on all system qubits.
#[derive(Clone, Debug, PartialEq)]
pub enum PulseDescriptor<T> {
    /// Instantaneous `prod_j sigma_j^axis`.
    Ideal(PauliString),
    /// Rectangular pulse `Omega sum_j sigma_j^axis` of the given width with
    /// `Omega = pi / (2 width)`.
    Finite {
        axis: Axis,
        width: T,
        amplitude: T,
        generator: PauliSum<T>,
    },
}

pub fn build_pulse<T: Real>(
    axis: Axis,
    width: T,
    system_count: usize,
    qubits: usize,
) -> Result<PulseDescriptor<T>> {
    if !(width >= T::zero()) {
        return Err(Error::NegativeWidth(width.as_f64()));
    }
    let system: Vec<usize> = (0..system_count).collect();
    if width.is_zero() {
        return Ok(PulseDescriptor::Ideal(PauliString::on(
            qubits, &system, axis,
        )?));
    }
    let amplitude = T::FRAC_PI_2() / width;
    let mut generator = PauliSum::zero(qubits);
    for &q in &system {
        generator.push(PauliString::on(qubits, &[q], axis)?, amplitude);
    }
    Ok(PulseDescriptor::Finite {
        axis,
        width,
        amplitude,
        generator,
    })
}

/// Geometry plus the fixed environment Hamiltonians.
#[derive(Clone, Debug)]
pub struct SystemModel<T> {
    geometry: Geometry<T>,
    j: T,
    beta: T,
    bath_scaling: T,
    h_sb: PauliSum<T>,
    h_b: PauliSum<T>,
}

impl<T: Real> SystemModel<T> {
    /// `bath_scaling` multiplies `j` in the system-bath coupling.
    pub fn new(geometry: Geometry<T>, j: T, beta: T, bath_scaling: T) -> Result<Self> {
        for (name, v) in [("J", j), ("beta", beta), ("bath_scaling", bath_scaling)] {
            if !v.is_finite() {
                return Err(Error::InvalidArgument(format!("{name} must be finite")));
            }
        }
        let h_sb = build_h_sb(&geometry, j * bath_scaling);
        let h_b = build_h_b(&geometry, beta);
        Ok(SystemModel {
            geometry,
            j,
            beta,
            bath_scaling,
            h_sb,
            h_b,
        })
    }

    pub fn geometry(&self) -> &Geometry<T> {
        &self.geometry
    }

    pub fn j(&self) -> T {
        self.j
    }

    pub fn beta(&self) -> T {
        self.beta
    }

    pub fn bath_scaling(&self) -> T {
        self.bath_scaling
    }

    pub fn qubits(&self) -> usize {
        self.geometry.qubits()
    }

    pub fn dim(&self) -> usize {
        1 << self.qubits()
    }

    pub fn system_count(&self) -> usize {
        self.geometry.system_count()
    }

    pub fn bath_count(&self) -> usize {
        self.geometry.bath_count()
    }

    pub fn blocks(&self) -> usize {
        self.system_count() / 4
    }

    pub fn h_sb(&self) -> &PauliSum<T> {
        &self.h_sb
    }

    pub fn h_b(&self) -> &PauliSum<T> {
        &self.h_b
    }

    /// `H_SB + H_B`, present during every segment.
    pub fn environment(&self) -> PauliSum<T> {
        self.h_sb.plus(&self.h_b)
    }

    pub fn h_sb_operator(&self) -> Operator<T> {
        self.h_sb.to_operator()
    }

    pub fn h_b_operator(&self) -> Operator<T> {
        self.h_b.to_operator()
    }

    pub fn exchange_generator(&self, terms: &[((usize, usize), T)]) -> Result<PauliSum<T>> {
        build_exchange_generator(self.system_count(), self.qubits(), terms)
    }

    pub fn pulse(&self, axis: Axis, width: T) -> Result<PulseDescriptor<T>> {
        build_pulse(axis, width, self.system_count(), self.qubits())
    }
}
