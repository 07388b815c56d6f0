use std::collections::BTreeMap;

use serde::Serialize;

use super::grid::VarianceTable;
use crate::error::{Error, Result};
use crate::oracle::theory_bounds;
use crate::smoother::Method;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    T,
    N,
}

impl std::str::FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "T" | "t" => Ok(Axis::T),
            "N" | "n" => Ok(Axis::N),
            other => Err(Error::Config(format!("unknown axis `{other}`"))),
        }
    }
}

/// Least-squares fit of `log variance = intercept + slope · log axis`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Regression {
    pub method: Method,
    pub axis: Axis,
    /// Value of the other axis, held fixed.
    pub fixed: usize,
    pub slope: f64,
    pub slope_stderr: f64,
    pub intercept: f64,
    pub points: usize,
}

/// Log-log slope of variance along `axis`. `fixed` selects the value of the
/// other axis; it may be omitted when only one value has three or more points.
pub fn scaling_regression(table: &VarianceTable, method: Method, axis: Axis, fixed: Option<usize>) -> Result<Regression> {
    let mut groups: BTreeMap<usize, Vec<(f64, f64)>> = BTreeMap::new();
    for row in table.rows.iter().filter(|r| r.method == method) {
        let (along, other) = match axis {
            Axis::T => (row.horizon, row.n_particles),
            Axis::N => (row.n_particles, row.horizon),
        };
        groups.entry(other).or_default().push((along as f64, row.variance));
    }
    let fixed = match fixed {
        Some(v) => v,
        None => {
            let eligible: Vec<usize> = groups.iter().filter(|(_, p)| p.len() >= 3).map(|(k, _)| *k).collect();
            match eligible.as_slice() {
                [only] => *only,
                [] => return Err(Error::InvalidParameter(format!("{method}: fewer than 3 points along {axis:?}"))),
                _ => return Err(Error::InvalidParameter(format!("{method}: several slices along {axis:?}; pick one"))),
            }
        }
    };
    let points = groups.get(&fixed).cloned().unwrap_or_default();
    if points.len() < 3 {
        return Err(Error::InvalidParameter(format!(
            "{method}: {} points along {axis:?} at fixed value {fixed}, need 3",
            points.len()
        )));
    }
    if points.iter().any(|&(_, v)| v.is_nan() || v <= 0.0) {
        return Err(Error::InvalidParameter(format!("{method}: nonpositive variance in regression")));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let slope_stderr = (sse / (n - 2.0) / sxx).sqrt();
    Ok(Regression { method, axis, fixed, slope, slope_stderr, intercept, points: points.len() })
}

/// Observed variance next to the squared L2 bound shape
/// `Υ^N_{r,T}² (T − r + 1) / N`, scaled by one least-squares constant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OverlayRow {
    pub method: Method,
    #[serde(rename = "T")]
    pub horizon: usize,
    #[serde(rename = "N")]
    pub n_particles: usize,
    pub variance: f64,
    pub bound_shape: f64,
    pub fitted_bound: f64,
    pub fitted_constant: f64,
}

pub fn bound_overlay(table: &VarianceTable, method: Method) -> Result<Vec<OverlayRow>> {
    let rows: Vec<_> = table.rows.iter().filter(|r| r.method == method && r.variance.is_finite()).collect();
    if rows.is_empty() {
        return Err(Error::InvalidParameter(format!("no rows for {method}")));
    }
    let shapes = rows
        .iter()
        .map(|r| {
            let b = theory_bounds(r.lag, r.horizon, r.n_particles)?;
            Ok(b.upsilon * b.upsilon * (r.horizon - r.lag + 1) as f64 / r.n_particles as f64)
        })
        .collect::<Result<Vec<f64>>>()?;
    let num: f64 = rows.iter().zip(&shapes).map(|(r, s)| r.variance * s).sum();
    let den: f64 = shapes.iter().map(|s| s * s).sum();
    let constant = num / den;
    Ok(rows
        .iter()
        .zip(&shapes)
        .map(|(r, &s)| OverlayRow {
            method,
            horizon: r.horizon,
            n_particles: r.n_particles,
            variance: r.variance,
            bound_shape: s,
            fitted_bound: constant * s,
            fitted_constant: constant,
        })
        .collect())
}
