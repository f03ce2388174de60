//! Closed-loop simulation of
//!
//! ```text
//! ẋ = A x + B_c φ(u) + B_d w_d(t),   u = u_reg(t) − κ (C x − y_ref(t))
//! ```
//!
//! with an exponential integrator: the linear part is propagated exactly and
//! the forcing is frozen over each step.

mod metrics;
mod propagator;

use std::fmt::Write as _;
use std::path::Path;

use ndarray::{Array1, Array2};

use crate::error::{RegError, Result};
use crate::regulator::RegulatorCoefficients;
use crate::saturation::SaturationSpec;
use crate::signal::SignalSpec;
use crate::state_space::StateSpaceModel;
use propagator::Propagator;

pub use metrics::{tracking_error_metrics, windowed_error_norm, TrackingMetrics};

pub const DEFAULT_DT: f64 = 1e-3;
pub const MAX_SAMPLES: usize = 20_000;
/// Largest admissible `dt · max ω_k`.
pub const SAMPLING_LIMIT: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Scheme {
    /// Forcing evaluated at the start of the step (first order).
    #[default]
    ExponentialEuler,
    /// Forcing evaluated at the midpoint of an exponential-Euler half step
    /// (second order).
    ExponentialMidpoint,
}

impl std::str::FromStr for Scheme {
    type Err = RegError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exponential-euler" => Ok(Scheme::ExponentialEuler),
            "exponential-midpoint" => Ok(Scheme::ExponentialMidpoint),
            other => Err(RegError::InvalidSpec(format!("unknown scheme '{other}'"))),
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Scheme::ExponentialEuler => "exponential-euler",
            Scheme::ExponentialMidpoint => "exponential-midpoint",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimulationConfig {
    pub t_end: f64,
    pub dt: f64,
    pub kappa: f64,
    pub record_stride: usize,
    pub scheme: Scheme,
}

impl SimulationConfig {
    /// Exponential Euler with a stride that keeps at most [`MAX_SAMPLES`]
    /// samples.
    pub fn new(t_end: f64, dt: f64, kappa: f64) -> Self {
        let steps = (t_end / dt).round().max(1.0) as usize;
        Self {
            t_end,
            dt,
            kappa,
            record_stride: default_stride(steps),
            scheme: Scheme::ExponentialEuler,
        }
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }

    pub fn validate(&self, signals: &SignalSpec) -> Result<()> {
        let bad = |m: String| Err(RegError::InvalidSpec(m));
        if !(self.dt > 0.0) || !(self.t_end > 0.0) || !self.t_end.is_finite() {
            return bad(format!(
                "need t_end > 0 and dt > 0, got t_end = {}, dt = {}",
                self.t_end, self.dt
            ));
        }
        if self.dt > self.t_end {
            return bad(format!("dt = {} exceeds t_end = {}", self.dt, self.t_end));
        }
        let steps = self.steps();
        if (steps as f64 * self.dt - self.t_end).abs() > 1e-9 * self.t_end {
            return bad(format!(
                "t_end = {} is not a multiple of dt = {}",
                self.t_end, self.dt
            ));
        }
        if self.record_stride == 0 {
            return bad("record_stride must be positive".into());
        }
        if !(self.kappa >= 0.0) {
            return bad(format!(
                "feedback gain must be nonnegative, got {}",
                self.kappa
            ));
        }
        let max_omega = signals.frequencies().into_iter().fold(0.0, f64::max);
        if self.dt * max_omega > SAMPLING_LIMIT {
            return bad(format!(
                "dt · max ω = {:.3e} exceeds {SAMPLING_LIMIT}; reduce dt",
                self.dt * max_omega
            ));
        }
        Ok(())
    }
}

/// Smallest stride with at most [`MAX_SAMPLES`] recorded samples.
pub fn default_stride(steps: usize) -> usize {
    steps.div_ceil(MAX_SAMPLES - 2).max(1)
}

/// Recorded samples. Matrices have one row per sample.
#[derive(Clone, Debug)]
pub struct SimulationTrajectory {
    pub times: Vec<f64>,
    pub states: Array2<f64>,
    pub outputs: Array2<f64>,
    pub references: Array2<f64>,
    pub errors: Array2<f64>,
    /// Control before saturation.
    pub controls: Array2<f64>,
    pub saturated: Array2<f64>,
    pub ureg: Array2<f64>,
    pub saturation_active: Vec<bool>,
    pub state_norms: Vec<f64>,
}

impl SimulationTrajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_state(&self) -> Array1<f64> {
        self.states.row(self.len() - 1).to_owned()
    }

    /// CSV export: `t, y_*, yref_*, e_*, u_*, phi_u_*, xnorm, sat_active`.
    pub fn to_csv(&self) -> String {
        let mu = self.outputs.ncols();
        let mut out = String::from("t");
        for prefix in ["y", "yref", "e", "u", "phi_u"] {
            for j in 1..=mu {
                let _ = write!(out, ",{prefix}_{j}");
            }
        }
        out.push_str(",xnorm,sat_active\n");
        for i in 0..self.len() {
            let _ = write!(out, "{:.16e}", self.times[i]);
            for m in [
                &self.outputs,
                &self.references,
                &self.errors,
                &self.controls,
                &self.saturated,
            ] {
                for v in m.row(i) {
                    let _ = write!(out, ",{v:.16e}");
                }
            }
            let _ = writeln!(
                out,
                ",{:.16e},{}",
                self.state_norms[i],
                u8::from(self.saturation_active[i])
            );
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}

struct Loop<'a> {
    model: &'a StateSpaceModel,
    sat: Option<&'a SaturationSpec>,
    coeffs: &'a RegulatorCoefficients,
    signals: &'a SignalSpec,
    kappa: f64,
}

/// Everything evaluated at one `(t, x)`.
struct Forcing {
    y: Array1<f64>,
    yref: Array1<f64>,
    u: Array1<f64>,
    phi_u: Array1<f64>,
    ureg: Array1<f64>,
    active: bool,
    f: Array1<f64>,
}

impl Loop<'_> {
    fn eval(&self, t: f64, x: &Array1<f64>) -> Result<Forcing> {
        let y = self.model.c().dot(x);
        let yref = self.signals.eval_reference(t).mapv(|z| z.re);
        let ureg = self.coeffs.eval_ureg_real(t);
        let u = &ureg - &((&y - &yref) * self.kappa);
        let mut phi_u = u.clone();
        let active = match self.sat {
            Some(sat) => sat.saturate_real_into(phi_u.as_slice_mut().expect("contiguous"))?,
            None => false,
        };
        let w = self.signals.eval_disturbance(t).mapv(|z| z.re);
        let f = self.model.b_c().dot(&phi_u) + self.model.b_d().dot(&w);
        Ok(Forcing {
            y,
            yref,
            u,
            phi_u,
            ureg,
            active,
            f,
        })
    }
}

fn check_inputs(
    model: &StateSpaceModel,
    sat: Option<&SaturationSpec>,
    coeffs: &RegulatorCoefficients,
    signals: &SignalSpec,
    x0: &Array1<f64>,
    cfg: &SimulationConfig,
) -> Result<()> {
    cfg.validate(signals)?;
    signals.validate()?;
    let dims = [
        ("initial state", model.dim_x(), x0.len()),
        ("reference dimension", model.dim_u(), signals.dim_u()),
        ("disturbance dimension", model.dim_d(), signals.dim_d()),
        ("regulator coefficients", model.dim_u(), coeffs.dim()),
        (
            "saturation channels",
            model.dim_u(),
            sat.map_or(model.dim_u(), SaturationSpec::dim),
        ),
    ];
    for (context, expected, got) in dims {
        if expected != got {
            return Err(RegError::DimensionMismatch {
                context,
                expected,
                got,
            });
        }
    }
    if !signals.is_real() || !coeffs.real_data || !sat.is_none_or(SaturationSpec::is_real) {
        return Err(RegError::InvalidSpec(
            "the simulator needs real signals, real regulator data and real saturation centers"
                .into(),
        ));
    }
    if coeffs.kappa != cfg.kappa {
        return Err(RegError::InvalidSpec(format!(
            "regulator coefficients were computed for κ = {} but the simulation uses κ = {}",
            coeffs.kappa, cfg.kappa
        )));
    }
    let same_frequencies = coeffs.frequencies.len() == signals.harmonics.len()
        && coeffs
            .frequencies
            .iter()
            .zip(signals.frequencies())
            .all(|(a, b)| (a - b).abs() <= 1e-12);
    if !same_frequencies {
        return Err(RegError::InvalidSpec(
            "regulator coefficients and signals have different frequencies".into(),
        ));
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(RegError::InvalidSpec("initial state is not finite".into()));
    }
    Ok(())
}

fn run(
    model: &StateSpaceModel,
    sat: Option<&SaturationSpec>,
    coeffs: &RegulatorCoefficients,
    signals: &SignalSpec,
    x0: &Array1<f64>,
    cfg: &SimulationConfig,
) -> Result<SimulationTrajectory> {
    check_inputs(model, sat, coeffs, signals, x0, cfg)?;
    let closed = Loop {
        model,
        sat,
        coeffs,
        signals,
        kappa: cfg.kappa,
    };
    let steps = cfg.steps();
    let dt = cfg.dt;
    let full = Propagator::new(model.a(), dt);
    let half = match cfg.scheme {
        Scheme::ExponentialMidpoint => Some(Propagator::new(model.a(), dt / 2.0)),
        Scheme::ExponentialEuler => None,
    };

    let samples =
        steps / cfg.record_stride + 1 + usize::from(!steps.is_multiple_of(cfg.record_stride));
    let (n, mu) = (model.dim_x(), model.dim_u());
    let mut traj = SimulationTrajectory {
        times: Vec::with_capacity(samples),
        states: Array2::zeros((samples, n)),
        outputs: Array2::zeros((samples, mu)),
        references: Array2::zeros((samples, mu)),
        errors: Array2::zeros((samples, mu)),
        controls: Array2::zeros((samples, mu)),
        saturated: Array2::zeros((samples, mu)),
        ureg: Array2::zeros((samples, mu)),
        saturation_active: Vec::with_capacity(samples),
        state_norms: Vec::with_capacity(samples),
    };
    let record = |traj: &mut SimulationTrajectory, t: f64, x: &Array1<f64>, fc: &Forcing| {
        let row = traj.times.len();
        traj.times.push(t);
        traj.states.row_mut(row).assign(x);
        traj.outputs.row_mut(row).assign(&fc.y);
        traj.references.row_mut(row).assign(&fc.yref);
        traj.errors.row_mut(row).assign(&(&fc.y - &fc.yref));
        traj.controls.row_mut(row).assign(&fc.u);
        traj.saturated.row_mut(row).assign(&fc.phi_u);
        traj.ureg.row_mut(row).assign(&fc.ureg);
        traj.saturation_active.push(fc.active);
        traj.state_norms.push(model.state_norm(x));
    };

    let mut x = x0.clone();
    let mut next = Array1::zeros(n);
    let mut mid = Array1::zeros(n);
    for i in 0..=steps {
        let t = i as f64 * dt;
        let fc = closed.eval(t, &x)?;
        if i % cfg.record_stride == 0 || i == steps {
            record(&mut traj, t, &x, &fc);
        }
        if i == steps {
            break;
        }
        match &half {
            None => full.apply(&x, &fc.f, &mut next),
            Some(half) => {
                half.apply(&x, &fc.f, &mut mid);
                let fm = closed.eval(t + 0.5 * dt, &mid)?;
                full.apply(&x, &fm.f, &mut next);
            }
        }
        if next.iter().any(|v| !v.is_finite()) {
            return Err(RegError::NonFinite {
                step: i + 1,
                time: (i + 1) as f64 * dt,
            });
        }
        std::mem::swap(&mut x, &mut next);
    }
    Ok(traj)
}

pub fn simulate_closed_loop(
    model: &StateSpaceModel,
    sat: &SaturationSpec,
    coeffs: &RegulatorCoefficients,
    signals: &SignalSpec,
    x0: &Array1<f64>,
    cfg: &SimulationConfig,
) -> Result<SimulationTrajectory> {
    run(model, Some(sat), coeffs, signals, x0, cfg)
}

/// The same loop with `φ` replaced by the identity.
pub fn simulate_linear(
    model: &StateSpaceModel,
    coeffs: &RegulatorCoefficients,
    signals: &SignalSpec,
    x0: &Array1<f64>,
    cfg: &SimulationConfig,
) -> Result<SimulationTrajectory> {
    run(model, None, coeffs, signals, x0, cfg)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceReport {
    pub dts: Vec<f64>,
    /// `‖x_final(dt_i) − x_final(dt_{i+1})‖` for successive step sizes.
    pub errors: Vec<f64>,
    /// `log₂(err_i / err_{i+1})` for consecutive errors.
    pub orders: Vec<f64>,
    /// Order from the finest pair of differences; `None` if they vanish.
    pub observed_order: Option<f64>,
}

/// Self-convergence of the final state as `dt` is halved.
pub fn convergence_study(
    model: &StateSpaceModel,
    sat: &SaturationSpec,
    coeffs: &RegulatorCoefficients,
    signals: &SignalSpec,
    x0: &Array1<f64>,
    cfg: &SimulationConfig,
    dt_list: &[f64],
) -> Result<ConvergenceReport> {
    if dt_list.len() < 3 {
        return Err(RegError::InvalidSpec(
            "convergence study needs at least three step sizes".into(),
        ));
    }
    for w in dt_list.windows(2) {
        if (w[0] / w[1] - 2.0).abs() > 1e-12 {
            return Err(RegError::InvalidSpec(
                "step sizes must halve successively".into(),
            ));
        }
    }
    let finals = dt_list
        .iter()
        .map(|&dt| {
            let run_cfg = SimulationConfig {
                dt,
                record_stride: cfg.steps().max(1) * 4,
                ..cfg.clone()
            };
            simulate_closed_loop(model, sat, coeffs, signals, x0, &run_cfg).map(|t| t.final_state())
        })
        .collect::<Result<Vec<_>>>()?;
    // Successive differences avoid the bias of comparing against the finest run.
    let errors: Vec<f64> = finals
        .windows(2)
        .map(|w| crate::linalg::norm(&(&w[0] - &w[1])))
        .collect();
    let orders: Vec<f64> = errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    let observed_order = orders.last().copied().filter(|o| o.is_finite());
    Ok(ConvergenceReport {
        dts: dt_list.to_vec(),
        errors,
        orders,
        observed_order,
    })
}
