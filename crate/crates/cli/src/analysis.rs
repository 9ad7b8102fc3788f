//! Post-processing of record tables: turning points and contour grids.

use cddsim_core::sequence::Strategy;
use cddsim_core::{Error, FidelityRecord, Result};

/// Largest `n*` such that `1 - F` strictly decreases over `0..=n*`. A
/// floor-clamped record ends the scan, since reaching the floor is not an
/// improvement. Records may come in any order but must cover `0..=n_max`
/// exactly once.
pub fn turning_point(records: &[FidelityRecord]) -> Result<usize> {
    let mut series: Vec<&FidelityRecord> = records.iter().collect();
    series.sort_by_key(|r| r.n);
    if series.is_empty() {
        return Err(Error::IncompleteSeries("no records".into()));
    }
    for (k, r) in series.iter().enumerate() {
        if r.n != k {
            return Err(Error::IncompleteSeries(format!(
                "expected level {k}, found level {}",
                r.n
            )));
        }
    }
    let mut best = 0;
    for w in series.windows(2) {
        if w[0].floor_clamped || w[1].floor_clamped || !(w[1].one_minus_f < w[0].one_minus_f) {
            break;
        }
        best = w[1].n;
    }
    Ok(best)
}

#[derive(Clone, Debug, PartialEq)]
pub struct TurningPoint {
    pub strategy: Strategy,
    pub j: f64,
    pub beta: f64,
    pub tau0: f64,
    pub n_max: usize,
    pub turning_point: usize,
}

/// Turning point of every `(strategy, J, beta)` cell, in order of first
/// appearance.
pub fn turning_point_map(records: &[FidelityRecord]) -> Result<Vec<TurningPoint>> {
    let mut groups: Vec<(Strategy, f64, f64, Vec<FidelityRecord>)> = Vec::new();
    for r in records {
        match groups
            .iter_mut()
            .find(|g| g.0 == r.strategy && g.1 == r.j && g.2 == r.beta)
        {
            Some(g) => g.3.push(r.clone()),
            None => groups.push((r.strategy, r.j, r.beta, vec![r.clone()])),
        }
    }
    groups
        .into_iter()
        .map(|(strategy, j, beta, rs)| {
            Ok(TurningPoint {
                strategy,
                j,
                beta,
                tau0: rs[0].tau0,
                n_max: rs.iter().map(|r| r.n).max().unwrap_or(0),
                turning_point: turning_point(&rs)?,
            })
        })
        .collect()
}

/// `log10(1 - F)` on a rectangular `(J tau0, beta tau0)` grid; rows follow
/// ascending J, columns ascending beta.
#[derive(Clone, Debug, PartialEq)]
pub struct ContourGrid {
    pub n: usize,
    pub delta: f64,
    pub tau0: f64,
    pub j_tau0: Vec<f64>,
    pub beta_tau0: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

/// Grid of the protected records at level `n` and pulse width `delta`.
pub fn contour_export(records: &[FidelityRecord], n: usize, delta: f64) -> Result<ContourGrid> {
    let picked: Vec<&FidelityRecord> = records
        .iter()
        .filter(|r| r.n == n && r.delta == delta && r.strategy != Strategy::Free)
        .collect();
    let first = picked.first().ok_or_else(|| {
        Error::IncompleteGrid(format!("no records at n = {n}, delta = {delta:e}"))
    })?;
    let tau0 = first.tau0;
    if picked.iter().any(|r| r.tau0 != tau0) {
        return Err(Error::InvalidArgument(
            "records mix several tau0 values".into(),
        ));
    }
    let axis = |f: fn(&FidelityRecord) -> f64| {
        let mut v: Vec<f64> = picked.iter().map(|r| f(r)).collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    };
    let js = axis(|r| r.j);
    let betas = axis(|r| r.beta);
    let mut values = vec![vec![None; betas.len()]; js.len()];
    for r in &picked {
        let a = js.partition_point(|&x| x < r.j);
        let b = betas.partition_point(|&x| x < r.beta);
        if values[a][b].replace(r.log10_one_minus_f).is_some() {
            return Err(Error::IncompleteGrid(format!(
                "duplicate cell J = {}, beta = {}",
                r.j, r.beta
            )));
        }
    }
    let values = values
        .into_iter()
        .enumerate()
        .map(|(a, row)| {
            row.into_iter()
                .enumerate()
                .map(|(b, v)| {
                    v.ok_or_else(|| {
                        Error::IncompleteGrid(format!(
                            "missing cell J = {}, beta = {}",
                            js[a], betas[b]
                        ))
                    })
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    Ok(ContourGrid {
        n,
        delta,
        tau0,
        j_tau0: js.iter().map(|j| j * tau0).collect(),
        beta_tau0: betas.iter().map(|b| b * tau0).collect(),
        values,
    })
}

impl ContourGrid {
    fn spread(values: impl Iterator<Item = f64>) -> f64 {
        let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        });
        hi - lo
    }

    /// Range of `log10(1 - F)` along J, one entry per beta column.
    pub fn spreads_along_j(&self) -> Vec<f64> {
        (0..self.beta_tau0.len())
            .map(|b| Self::spread(self.values.iter().map(|row| row[b])))
            .collect()
    }

    /// Range of `log10(1 - F)` along beta, one entry per J row.
    pub fn spreads_along_beta(&self) -> Vec<f64> {
        self.values
            .iter()
            .map(|row| Self::spread(row.iter().copied()))
            .collect()
    }
}
