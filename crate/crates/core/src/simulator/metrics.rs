use crate::error::{RegError, Result};

use super::SimulationTrajectory;

#[derive(Clone, Debug, PartialEq)]
pub struct TrackingMetrics {
    /// Left ends `j` of the unit windows `[j, j+1]` inside the run.
    pub window_starts: Vec<f64>,
    /// `‖e‖_{L²(j, j+1)}` by the trapezoidal rule.
    pub window_norms: Vec<f64>,
    pub sup_state_norm: f64,
    pub saturation_fraction: f64,
    /// Mean of `‖u(t) − u_reg(t)‖` over the last 10% of the run.
    pub tail_mean_mismatch: f64,
}

impl TrackingMetrics {
    pub fn first_window(&self) -> Option<f64> {
        self.window_norms.first().copied()
    }

    pub fn last_window(&self) -> Option<f64> {
        self.window_norms.last().copied()
    }
}

fn row_norm(m: &ndarray::Array2<f64>, i: usize) -> f64 {
    m.row(i).iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// `(∫_a^b ‖e(t)‖² dt)^{1/2}` with `‖e‖²` interpolated linearly between samples.
pub fn windowed_error_norm(traj: &SimulationTrajectory, a: f64, b: f64) -> f64 {
    let t = &traj.times;
    let sq: Vec<f64> = (0..t.len())
        .map(|i| row_norm(&traj.errors, i).powi(2))
        .collect();
    let mut acc = 0.0;
    for i in 0..t.len().saturating_sub(1) {
        let (t0, t1) = (t[i], t[i + 1]);
        let lo = t0.max(a);
        let hi = t1.min(b);
        if hi <= lo {
            continue;
        }
        let at = |s: f64| sq[i] + (sq[i + 1] - sq[i]) * (s - t0) / (t1 - t0);
        acc += 0.5 * (hi - lo) * (at(lo) + at(hi));
    }
    acc.sqrt()
}

pub fn tracking_error_metrics(traj: &SimulationTrajectory) -> Result<TrackingMetrics> {
    if traj.is_empty() {
        return Err(RegError::InvalidSpec("empty trajectory".into()));
    }
    let t0 = traj.times[0];
    let t_end = *traj.times.last().expect("nonempty");
    let mut window_starts = Vec::new();
    let mut window_norms = Vec::new();
    let mut j = t0.ceil();
    while j + 1.0 <= t_end + 1e-9 {
        window_starts.push(j);
        window_norms.push(windowed_error_norm(traj, j, j + 1.0));
        j += 1.0;
    }
    let sup_state_norm = traj.state_norms.iter().cloned().fold(0.0, f64::max);
    let active = traj.saturation_active.iter().filter(|&&a| a).count();
    let saturation_fraction = active as f64 / traj.len() as f64;
    let tail_start = t_end - 0.1 * (t_end - t0);
    let tail: Vec<f64> = (0..traj.len())
        .filter(|&i| traj.times[i] >= tail_start)
        .map(|i| {
            traj.controls
                .row(i)
                .iter()
                .zip(traj.ureg.row(i))
                .map(|(u, r)| (u - r).powi(2))
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    let tail_mean_mismatch = if tail.is_empty() {
        0.0
    } else {
        tail.iter().sum::<f64>() / tail.len() as f64
    };
    Ok(TrackingMetrics {
        window_starts,
        window_norms,
        sup_state_norm,
        saturation_fraction,
        tail_mean_mismatch,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    fn scalar_error_trajectory(
        t_end: f64,
        dt: f64,
        e: impl Fn(f64) -> f64,
    ) -> SimulationTrajectory {
        let n = (t_end / dt).round() as usize + 1;
        let times: Vec<f64> = (0..n).map(|i| i as f64 * dt).collect();
        let errors = Array2::from_shape_fn((n, 1), |(i, _)| e(times[i]));
        SimulationTrajectory {
            times,
            states: Array2::zeros((n, 1)),
            outputs: errors.clone(),
            references: Array2::zeros((n, 1)),
            errors,
            controls: Array2::zeros((n, 1)),
            saturated: Array2::zeros((n, 1)),
            ureg: Array2::zeros((n, 1)),
            saturation_active: vec![false; n],
            state_norms: vec![0.0; n],
        }
    }

    #[test]
    fn constant_error_window() {
        let traj = scalar_error_trajectory(3.0, 0.01, |_| 1.0);
        let m = tracking_error_metrics(&traj).unwrap();
        assert_eq!(m.window_norms.len(), 3);
        for w in &m.window_norms {
            assert!((w - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn exponential_decay_ratio() {
        let traj = scalar_error_trajectory(5.0, 1e-3, |t| (-t).exp());
        let m = tracking_error_metrics(&traj).unwrap();
        for (j, w) in m.window_norms.iter().enumerate() {
            // ∫_j^{j+1} e^{−2t} dt = e^{−2j}(1 − e^{−2})/2.
            let exact = ((-2.0 * j as f64).exp() * (1.0 - (-2.0f64).exp()) / 2.0).sqrt();
            assert!((w - exact).abs() <= 1e-3 * exact);
        }
        for pair in m.window_norms.windows(2) {
            assert!((pair[0] / pair[1] - std::f64::consts::E).abs() < 1e-3);
        }
    }

    #[test]
    fn zero_trajectory() {
        let traj = scalar_error_trajectory(2.0, 0.1, |_| 0.0);
        let m = tracking_error_metrics(&traj).unwrap();
        assert!(m.window_norms.iter().all(|&w| w == 0.0));
        assert_eq!(m.sup_state_norm, 0.0);
        assert_eq!(m.saturation_fraction, 0.0);
        assert_eq!(m.tail_mean_mismatch, 0.0);
    }

    #[test]
    fn unaligned_windows_interpolate() {
        // Grid spacing 0.3 does not hit integer times; e ≡ 2 still integrates exactly.
        let traj = scalar_error_trajectory(2.7, 0.3, |_| 2.0);
        let m = tracking_error_metrics(&traj).unwrap();
        assert_eq!(m.window_norms.len(), 2);
        assert!((m.window_norms[1] - 2.0).abs() < 1e-12);
    }
}
