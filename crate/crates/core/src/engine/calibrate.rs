//! Effective bath-size correction: how much stronger the system-bath
//! coupling of a small bath must be to reproduce the error seen with a
//! larger one.

use crate::dfs::{build_gate, GateName, LibraryOptions};
use crate::error::{Error, Result};
use crate::model::{Geometry, GeometryKind, SystemModel, MAX_QUBITS};
use crate::scalar::Real;
use crate::sequence::{Strategy, Timing};

use super::{SimOptions, Simulator};

/// Everything of a model except the bath size and scaling.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelTemplate<T> {
    pub kind: GeometryKind,
    pub system_count: usize,
    pub j: T,
    pub beta: T,
}

impl<T: Real> ModelTemplate<T> {
    pub fn build(&self, bath_count: usize, bath_scaling: T) -> Result<SystemModel<T>> {
        SystemModel::new(
            Geometry::new(self.kind, self.system_count, bath_count)?,
            self.j,
            self.beta,
            bath_scaling,
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CalibrationReport {
    /// Raw `(bath size, 1 - F)` pairs in the order simulated.
    pub points: Vec<(usize, f64)>,
    /// Least-squares fit `log10(1 - F) = intercept + slope N`.
    pub slope: f64,
    pub intercept: f64,
    /// Fitted `1 - F` at the largest bath, matched by the reference bath.
    pub target: f64,
    pub reference_bath: usize,
    /// `bath_scaling` for the reference bath; not applied to any model.
    pub multiplier: f64,
    /// False when the target lies outside the searched multiplier range and
    /// `multiplier` is the nearest end.
    pub bracketed: bool,
}

const SEARCH_LOG10_RANGE: (f64, f64) = (-3.0, 3.0);

/// Short memory run (`1 - F` of decouple-while-compute at `level`), the
/// default reference observable.
pub fn memory_observable<T: Real>(
    level: usize,
    timing: Timing<T>,
) -> impl Fn(&SystemModel<T>) -> Result<f64> {
    move |model| {
        let gate = build_gate::<T>(GateName::Memory, &LibraryOptions::default())?;
        let mut sim = Simulator::new(model, SimOptions::default());
        Ok(sim
            .simulate(&gate, Strategy::While, level, timing, &[])?
            .one_minus_f)
    }
}

/// Simulates `observable` for each bath size at unit scaling, fits the
/// trend, and searches for the scaling of the smallest listed bath that
/// reproduces the fitted error at the largest.
pub fn calibrate_bath_scaling<T: Real>(
    template: &ModelTemplate<T>,
    bath_sizes: &[usize],
    observable: impl Fn(&SystemModel<T>) -> Result<f64>,
) -> Result<CalibrationReport> {
    if bath_sizes.len() < 2 {
        return Err(Error::InvalidArgument(
            "calibration needs at least two bath sizes".into(),
        ));
    }
    for &n in bath_sizes {
        if template.system_count + n > MAX_QUBITS {
            return Err(Error::BudgetExceeded(format!(
                "{} system + {n} bath qubits exceeds {MAX_QUBITS}",
                template.system_count
            )));
        }
    }
    let mut points = Vec::with_capacity(bath_sizes.len());
    for &n in bath_sizes {
        points.push((n, observable(&template.build(n, T::one())?)?));
    }
    let reference = *bath_sizes.iter().min().expect("nonempty");
    fit_bath_scaling(points, reference, |m| {
        observable(&template.build(reference, T::lit(m))?)
    })
}

/// Fit and multiplier search over given points; `reference_error(m)` is
/// the reference-bath observable at scaling `m` and must grow with `m`.
pub fn fit_bath_scaling(
    points: Vec<(usize, f64)>,
    reference_bath: usize,
    reference_error: impl Fn(f64) -> Result<f64>,
) -> Result<CalibrationReport> {
    let logs: Vec<(f64, f64)> = points
        .iter()
        .map(|&(n, e)| (n as f64, e.max(f64::MIN_POSITIVE).log10()))
        .collect();
    let k = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / k;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument(
            "bath sizes must not all be equal".into(),
        ));
    }
    let slope = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / sxx;
    let intercept = my - slope * mx;
    let largest = points.iter().map(|p| p.0).max().expect("nonempty") as f64;
    let at = |n: f64| intercept + slope * n;
    let target_log = at(largest);
    let target = 10f64.powf(target_log);
    let mut report = CalibrationReport {
        points,
        slope,
        intercept,
        target,
        reference_bath,
        multiplier: 1.0,
        bracketed: true,
    };
    if (target_log - at(reference_bath as f64)).abs() < 1e-9 {
        return Ok(report);
    }
    let gap = |lm: f64| -> Result<f64> {
        Ok(reference_error(10f64.powf(lm))?
            .max(f64::MIN_POSITIVE)
            .log10()
            - target_log)
    };
    let (mut lo, mut hi) = SEARCH_LOG10_RANGE;
    let (glo, ghi) = (gap(lo)?, gap(hi)?);
    if glo >= 0.0 || ghi <= 0.0 {
        report.bracketed = false;
        report.multiplier = 10f64.powf(if glo >= 0.0 { lo } else { hi });
        return Ok(report);
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if gap(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    report.multiplier = 10f64.powf(0.5 * (lo + hi));
    Ok(report)
}
