//! Synthetic data generation and the observation CSV format (`t,x_true,y`).

use std::io::{BufRead, Write};

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::numeric::{fmt_g17, Categorical};

/// A simulated hidden path and its observations, both indexed `0..=T`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedData {
    pub x_true: Vec<f64>,
    pub y: Vec<f64>,
}

impl SimulatedData {
    pub fn horizon(&self) -> usize {
        self.y.len().saturating_sub(1)
    }
}

fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

fn check_phi(phi: f64) -> Result<()> {
    if phi.abs() < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("|phi| must be < 1, got {phi}")))
    }
}

pub fn simulate_lgm<R: Rng + ?Sized>(phi: f64, sigma_u: f64, sigma_v: f64, horizon: usize, rng: &mut R) -> Result<SimulatedData> {
    check_phi(phi)?;
    let mut x = sigma_u / (1.0 - phi * phi).sqrt() * normal(rng);
    let mut data = SimulatedData {
        x_true: Vec::with_capacity(horizon + 1),
        y: Vec::with_capacity(horizon + 1),
    };
    for t in 0..=horizon {
        if t > 0 {
            x = phi * x + sigma_u * normal(rng);
        }
        data.x_true.push(x);
        data.y.push(x + sigma_v * normal(rng));
    }
    Ok(data)
}

pub fn simulate_svm<R: Rng + ?Sized>(phi: f64, sigma: f64, beta: f64, horizon: usize, rng: &mut R) -> Result<SimulatedData> {
    check_phi(phi)?;
    let mut x = sigma / (1.0 - phi * phi).sqrt() * normal(rng);
    let mut data = SimulatedData {
        x_true: Vec::with_capacity(horizon + 1),
        y: Vec::with_capacity(horizon + 1),
    };
    for t in 0..=horizon {
        if t > 0 {
            x = phi * x + sigma * normal(rng);
        }
        data.x_true.push(x);
        data.y.push(beta * (0.5 * x).exp() * normal(rng));
    }
    Ok(data)
}

/// Finite chain observed through `Y_t = means[X_t] + sd · V_t`.
pub fn simulate_finite<R: Rng + ?Sized>(
    transition: &[Vec<f64>],
    initial: &[f64],
    means: &[f64],
    sd: f64,
    horizon: usize,
    rng: &mut R,
) -> Result<SimulatedData> {
    let to_sampler = |p: &[f64]| {
        let logs: Vec<f64> = p.iter().map(|v| v.ln()).collect();
        Categorical::from_log_weights(&logs).ok_or_else(|| Error::InvalidParameter("zero probability vector".into()))
    };
    if means.len() != initial.len() || transition.len() != initial.len() {
        return Err(Error::Mismatch("transition, initial and means must agree on K".into()));
    }
    let rows = transition.iter().map(|r| to_sampler(r)).collect::<Result<Vec<_>>>()?;
    let mut state = to_sampler(initial)?.sample(rng);
    let mut data = SimulatedData {
        x_true: Vec::with_capacity(horizon + 1),
        y: Vec::with_capacity(horizon + 1),
    };
    for t in 0..=horizon {
        if t > 0 {
            state = rows[state].sample(rng);
        }
        data.x_true.push(state as f64);
        data.y.push(means[state] + sd * normal(rng));
    }
    Ok(data)
}

pub fn write_observations_csv<W: Write>(mut out: W, data: &SimulatedData) -> Result<()> {
    writeln!(out, "t,x_true,y")?;
    for (t, (x, y)) in data.x_true.iter().zip(&data.y).enumerate() {
        writeln!(out, "{t},{},{}", fmt_g17(*x), fmt_g17(*y))?;
    }
    Ok(())
}

/// Reads `t,x_true,y` rows. `x_true` may be empty when the hidden path is unknown.
pub fn read_observations_csv<R: BufRead>(input: R) -> Result<SimulatedData> {
    let mut lines = input.lines();
    let header = lines.next().transpose()?.unwrap_or_default();
    if header.trim() != "t,x_true,y" {
        return Err(Error::Config(format!("line 1: expected header `t,x_true,y`, found `{}`", header.trim())));
    }
    let mut data = SimulatedData { x_true: Vec::new(), y: Vec::new() };
    for (n, line) in lines.enumerate() {
        let line = line?;
        let line_no = n + 2;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.trim().split(',').collect();
        if fields.len() != 3 {
            return Err(Error::Config(format!("line {line_no}: expected 3 fields, found {}", fields.len())));
        }
        let t: usize = fields[0]
            .parse()
            .map_err(|_| Error::Config(format!("line {line_no}: bad time index `{}`", fields[0])))?;
        if t != data.y.len() {
            return Err(Error::Config(format!("line {line_no}: expected t = {}, found {t}", data.y.len())));
        }
        let x = if fields[1].is_empty() {
            f64::NAN
        } else {
            fields[1]
                .parse()
                .map_err(|_| Error::Config(format!("line {line_no}: bad x_true `{}`", fields[1])))?
        };
        let y: f64 = fields[2]
            .parse()
            .map_err(|_| Error::Config(format!("line {line_no}: bad y `{}`", fields[2])))?;
        data.x_true.push(x);
        data.y.push(y);
    }
    if data.y.is_empty() {
        return Err(Error::Config("observation file has no rows".into()));
    }
    Ok(data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn csv_round_trip_is_exact() {
        let data = simulate_lgm(0.9, 0.6, 1.0, 25, &mut stream(5)).unwrap();
        let mut buf = Vec::new();
        write_observations_csv(&mut buf, &data).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("t,x_true,y\n0,"));
        let back = read_observations_csv(&buf[..]).unwrap();
        assert_eq!(back, data);
    }

    #[test]
    fn csv_reports_bad_lines() {
        let err = read_observations_csv("t,x_true,y\n0,1,2\n2,1,2\n".as_bytes()).unwrap_err();
        assert!(err.to_string().contains("line 3"));
        assert!(read_observations_csv("t,y\n".as_bytes()).is_err());
    }

    #[test]
    fn finite_simulation_uses_state_means() {
        let d = simulate_finite(&[vec![0.9, 0.1], vec![0.2, 0.8]], &[0.5, 0.5], &[-1.0, 1.0], 1e-9, 50, &mut stream(2)).unwrap();
        for (x, y) in d.x_true.iter().zip(&d.y) {
            assert!((y - if *x == 0.0 { -1.0 } else { 1.0 }).abs() < 1e-6);
        }
    }
}
