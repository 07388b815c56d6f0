use std::io::Write;

use crate::error::{Error, Result};
use crate::numeric::fmt_g17;

/// Kalman filter and RTS smoother output for the scalar AR(1)-plus-noise model.
#[derive(Debug, Clone, PartialEq)]
pub struct KalmanResult {
    pub filtered_mean: Vec<f64>,
    pub filtered_var: Vec<f64>,
    pub smoothed_mean: Vec<f64>,
    pub smoothed_var: Vec<f64>,
    /// `log p(y_{0:T})` in nats.
    pub log_likelihood: f64,
}

impl KalmanResult {
    /// `I_T = Σ_t E[X_t | Y_{0:T}]`.
    pub fn smoothed_sum(&self) -> f64 {
        self.smoothed_mean.iter().sum()
    }

    /// `t,filt_mean,filt_var,smooth_mean,smooth_var`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "t,filt_mean,filt_var,smooth_mean,smooth_var")?;
        for t in 0..self.filtered_mean.len() {
            writeln!(
                out,
                "{t},{},{},{},{}",
                fmt_g17(self.filtered_mean[t]),
                fmt_g17(self.filtered_var[t]),
                fmt_g17(self.smoothed_mean[t]),
                fmt_g17(self.smoothed_var[t])
            )?;
        }
        Ok(())
    }
}

/// Forward Kalman recursion followed by the Rauch–Tung–Striebel backward pass
/// for `X_{t+1} = φ X_t + σ_u U_t`, `Y_t = X_t + σ_v V_t`, stationary `X_0`.
pub fn kalman_smooth(phi: f64, sigma_u: f64, sigma_v: f64, observations: &[f64]) -> Result<KalmanResult> {
    if !phi.is_finite() || phi.abs() >= 1.0 {
        return Err(Error::InvalidParameter(format!("|phi| must be < 1, got {phi}")));
    }
    if !(sigma_u > 0.0 && sigma_v > 0.0) {
        return Err(Error::InvalidParameter("sigma_u and sigma_v must be positive".into()));
    }
    if observations.is_empty() {
        return Err(Error::InvalidParameter("observation sequence is empty".into()));
    }
    let n = observations.len();
    let q = sigma_u * sigma_u;
    let r = sigma_v * sigma_v;
    let mut filtered_mean = Vec::with_capacity(n);
    let mut filtered_var = Vec::with_capacity(n);
    let mut log_likelihood = 0.0;
    let (mut pred_mean, mut pred_var) = (0.0, q / (1.0 - phi * phi));
    for &y in observations {
        let s = pred_var + r;
        let innovation = y - pred_mean;
        log_likelihood += -0.5 * ((2.0 * std::f64::consts::PI * s).ln() + innovation * innovation / s);
        let gain = pred_var / s;
        let mean = pred_mean + gain * innovation;
        let var = (1.0 - gain) * pred_var;
        filtered_mean.push(mean);
        filtered_var.push(var);
        pred_mean = phi * mean;
        pred_var = phi * phi * var + q;
    }

    let mut smoothed_mean = filtered_mean.clone();
    let mut smoothed_var = filtered_var.clone();
    for t in (0..n - 1).rev() {
        let pred = phi * phi * filtered_var[t] + q;
        let gain = filtered_var[t] * phi / pred;
        smoothed_mean[t] = filtered_mean[t] + gain * (smoothed_mean[t + 1] - phi * filtered_mean[t]);
        smoothed_var[t] = filtered_var[t] + gain * gain * (smoothed_var[t + 1] - pred);
    }
    Ok(KalmanResult { filtered_mean, filtered_var, smoothed_mean, smoothed_var, log_likelihood })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_observation_is_conjugate_update() {
        let (phi, su, sv, y) = (0.9, 0.6, 1.0, 1.7);
        let k = kalman_smooth(phi, su, sv, &[y]).unwrap();
        let prior = su * su / (1.0 - phi * phi);
        let expected = (y / (sv * sv)) / (1.0 / prior + 1.0 / (sv * sv));
        assert!((k.smoothed_mean[0] - expected).abs() < 1e-14);
        assert_eq!(k.smoothed_mean, k.filtered_mean);
    }

    #[test]
    fn uninformative_observations_give_prior_mean() {
        let y = [3.0, -2.0, 5.0, 1.0];
        let k = kalman_smooth(0.9, 0.6, 1e6, &y).unwrap();
        assert!(k.smoothed_mean.iter().all(|m| m.abs() < 1e-6));
    }

    #[test]
    fn phi_zero_decouples_time_steps() {
        let y = [0.4, -1.1, 2.3];
        let (su, sv) = (0.8, 1.3);
        let k = kalman_smooth(0.0, su, sv, &y).unwrap();
        for (m, &yt) in k.smoothed_mean.iter().zip(&y) {
            let expected = (yt / (sv * sv)) / (1.0 / (su * su) + 1.0 / (sv * sv));
            assert!((m - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn smoothing_shrinks_variance() {
        let y: Vec<f64> = (0..50).map(|t| (t as f64 * 0.3).cos()).collect();
        let k = kalman_smooth(0.9, 0.6, 1.0, &y).unwrap();
        for t in 0..y.len() {
            assert!(k.smoothed_var[t] > 0.0);
            assert!(k.smoothed_var[t] <= k.filtered_var[t] + 1e-15);
        }
        assert!(kalman_smooth(1.0, 0.6, 1.0, &y).is_err());
    }
}
