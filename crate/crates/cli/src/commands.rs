use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use satreg::matrix_io::write_model;
use satreg::regulator::{
    compute_coefficients, linear_regime_margin, measured_reference_from_disturbance,
};
use satreg::simulator::{simulate_closed_loop, tracking_error_metrics};
use satreg::{RegError, SaturationSpec, SignalSpec, StateSpaceModel, C64};

use crate::config::ExperimentConfig;

pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_GATE: u8 = 3;
pub const EXIT_MARGIN: u8 = 4;

/// Samples and threshold of the `u_reg + κ y_ref ≡ 0` check.
pub const IDENTITY_SAMPLES: usize = 1000;
pub const IDENTITY_TOLERANCE: f64 = 1e-9;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

impl From<RegError> for CliError {
    fn from(e: RegError) -> Self {
        let code = match &e {
            RegError::InvalidSpec(_)
            | RegError::DimensionMismatch { .. }
            | RegError::Parse { .. }
            | RegError::UnsupportedModel(_)
            | RegError::GramNotPositiveDefinite
            | RegError::FeedthroughUnsupported => EXIT_CONFIG,
            RegError::NearSingularResolvent { .. }
            | RegError::FeedbackLoopSingular { .. }
            | RegError::TransmissionZero { .. }
            | RegError::ResolventFailure { .. }
            | RegError::DegenerateBvp { .. } => EXIT_GATE,
            RegError::NonFinite { .. } | RegError::Linalg(_) | RegError::Io(_) => EXIT_FAILURE,
        };
        Self::new(code, e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::new(EXIT_FAILURE, e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Success,
    MarginWarning,
}

impl Status {
    pub fn code(self) -> u8 {
        match self {
            Status::Success => 0,
            Status::MarginWarning => EXIT_MARGIN,
        }
    }
}

pub struct RunOptions {
    pub out: PathBuf,
    pub strict: bool,
    pub export_model: bool,
    /// Prefix for console lines (the sweep point, or empty).
    pub label: String,
}

impl RunOptions {
    fn say(&self, line: &str) {
        if self.label.is_empty() {
            println!("{line}");
        } else {
            println!("[{}] {line}", self.label);
        }
    }

    fn warn(&self, line: &str) {
        if self.label.is_empty() {
            eprintln!("warning: {line}");
        } else {
            eprintln!("[{}] warning: {line}", self.label);
        }
    }

    fn write(&self, name: &str, contents: &str) -> CliResult<PathBuf> {
        fs::create_dir_all(&self.out)?;
        let path = self.out.join(name);
        fs::write(&path, contents)?;
        Ok(path)
    }

    fn write_json<T: Serialize>(&self, name: &str, value: &T) -> CliResult<PathBuf> {
        let mut text = serde_json::to_string_pretty(value)
            .map_err(|e| CliError::new(EXIT_FAILURE, e.to_string()))?;
        text.push('\n');
        self.write(name, &text)
    }
}

/// Models and signals shared by every subcommand.
struct Setup {
    sim_model: StateSpaceModel,
    coefficient_model: StateSpaceModel,
    signals: SignalSpec,
}

fn setup(cfg: &ExperimentConfig, base_dir: &Path, opts: &RunOptions) -> CliResult<Setup> {
    cfg.validate(base_dir)?;
    let (sim_model, coefficient_model) = cfg.model.build(base_dir)?;
    let signals = cfg.signals.to_spec(sim_model.dim_u(), sim_model.dim_d())?;
    if opts.export_model {
        fs::create_dir_all(&opts.out)?;
        write_model(&opts.out.join("model.txt"), &sim_model)?;
        if coefficient_model.dim_x() != sim_model.dim_x() {
            write_model(&opts.out.join("coefficient_model.txt"), &coefficient_model)?;
        }
    }
    Ok(Setup {
        sim_model,
        coefficient_model,
        signals,
    })
}

fn saturation(cfg: &ExperimentConfig) -> CliResult<SaturationSpec> {
    let sat = cfg
        .saturation
        .as_ref()
        .ok_or_else(|| CliError::new(EXIT_CONFIG, "this command needs a [saturation] section"))?;
    Ok(sat.to_spec()?)
}

/// Warns about a nonpositive margin; under `--strict` the run stops here.
fn check_margin(margin: f64, opts: &RunOptions) -> CliResult<Status> {
    if margin > 0.0 {
        return Ok(Status::Success);
    }
    let message = format!(
        "linear-regime margin {margin:.6e} <= 0: u_reg leaves the unsaturated region, tracking is not guaranteed"
    );
    if opts.strict {
        return Err(CliError::new(
            EXIT_MARGIN,
            format!("{message} (aborting, --strict)"),
        ));
    }
    opts.warn(&message);
    Ok(Status::MarginWarning)
}

fn evaluation_points(cfg: &ExperimentConfig, signals: &SignalSpec) -> CliResult<Vec<C64>> {
    let mut points = Vec::new();
    match &cfg.transfer {
        Some(t) => {
            points.extend(t.omegas.iter().map(|&w| C64::new(0.0, w)));
            points.extend(
                t.omegas_pi
                    .iter()
                    .map(|&w| C64::new(0.0, w * std::f64::consts::PI)),
            );
            points.extend(t.lambdas.iter().map(|&[re, im]| C64::new(re, im)));
        }
        None => {
            if signals.has_constant_part() {
                points.push(C64::new(0.0, 0.0));
            }
            points.extend(signals.frequencies().iter().map(|&w| C64::new(0.0, w)));
        }
    }
    if points.is_empty() {
        return Err(CliError::new(
            EXIT_CONFIG,
            "no evaluation points: add a [transfer] section or signal frequencies",
        ));
    }
    Ok(points)
}

pub fn transfer(cfg: &ExperimentConfig, base_dir: &Path, opts: &RunOptions) -> CliResult<Status> {
    let s = setup(cfg, base_dir, opts)?;
    let points = evaluation_points(cfg, &s.signals)?;
    let mut csv = String::from("lambda_re,lambda_im,block,row,col,re,im\n");
    for lambda in points {
        let tv = s
            .coefficient_model
            .closed_loop_transfer(cfg.kappa, lambda)?;
        for (block, m) in [("pc", &tv.p_c), ("pd", &tv.p_d)] {
            for ((i, j), z) in m.indexed_iter() {
                let _ = writeln!(
                    csv,
                    "{:.16e},{:.16e},{block},{},{},{:.16e},{:.16e}",
                    lambda.re,
                    lambda.im,
                    i + 1,
                    j + 1,
                    z.re,
                    z.im
                );
            }
        }
        let pc: Vec<String> = tv
            .p_c
            .iter()
            .map(|z| format!("{:.6e}{:+.6e}i", z.re, z.im))
            .collect();
        opts.say(&format!(
            "λ = {:.6}{:+.6}i: P_c^κ = [{}]",
            lambda.re,
            lambda.im,
            pc.join(", ")
        ));
    }
    let path = opts.write("transfer.csv", &csv)?;
    opts.say(&format!("wrote {}", path.display()));
    Ok(Status::Success)
}

#[derive(Serialize)]
struct RegulateReport {
    kappa: f64,
    coefficient_state_dim: usize,
    frequencies: Vec<f64>,
    linear_regime_margin: f64,
    center_margin: f64,
    max_imaginary_residue: f64,
}

pub fn regulate(cfg: &ExperimentConfig, base_dir: &Path, opts: &RunOptions) -> CliResult<Status> {
    let s = setup(cfg, base_dir, opts)?;
    let sat = saturation(cfg)?;
    let coeffs = compute_coefficients(&s.coefficient_model, cfg.kappa, &s.signals)?;
    let path = opts.write("coefficients.csv", &coeffs.to_csv())?;
    let margin = linear_regime_margin(&coeffs, &sat)?;
    opts.write_json(
        "metrics.json",
        &RegulateReport {
            kappa: cfg.kappa,
            coefficient_state_dim: s.coefficient_model.dim_x(),
            frequencies: coeffs.frequencies.clone(),
            linear_regime_margin: margin,
            center_margin: sat.center_margin(),
            max_imaginary_residue: coeffs.max_imaginary_residue(IDENTITY_SAMPLES),
        },
    )?;
    opts.say(&format!("wrote {}", path.display()));
    opts.say(&format!("linear_regime_margin = {margin:.6e}"));
    check_margin(margin, opts)
}

#[derive(Serialize)]
struct SimulationReport {
    kappa: f64,
    state_dim: usize,
    coefficient_state_dim: usize,
    scheme: String,
    dt: f64,
    t_end: f64,
    record_stride: usize,
    linear_regime_margin: f64,
    window_starts: Vec<f64>,
    window_norms: Vec<f64>,
    first_window: Option<f64>,
    last_window: Option<f64>,
    decay_ratio: Option<f64>,
    sup_state_norm: f64,
    saturation_fraction: f64,
    tail_mean_mismatch: f64,
}

pub fn simulate(cfg: &ExperimentConfig, base_dir: &Path, opts: &RunOptions) -> CliResult<Status> {
    let section = cfg
        .simulation
        .as_ref()
        .ok_or_else(|| CliError::new(EXIT_CONFIG, "simulate needs a [simulation] section"))?;
    let s = setup(cfg, base_dir, opts)?;
    let sat = saturation(cfg)?;
    let sim_cfg = section.to_config(cfg.kappa)?;
    sim_cfg.validate(&s.signals)?;
    let x0 = cfg
        .model
        .initial_state(section.initial_state, &s.sim_model, cfg.kappa, &s.signals)?;

    let coeffs = compute_coefficients(&s.coefficient_model, cfg.kappa, &s.signals)?;
    opts.write("coefficients.csv", &coeffs.to_csv())?;
    let margin = linear_regime_margin(&coeffs, &sat)?;
    opts.say(&format!("linear_regime_margin = {margin:.6e}"));
    let status = check_margin(margin, opts)?;

    let traj = simulate_closed_loop(&s.sim_model, &sat, &coeffs, &s.signals, &x0, &sim_cfg)?;
    let path = opts.write("trajectory.csv", &traj.to_csv())?;
    let m = tracking_error_metrics(&traj)?;
    let decay_ratio = match (m.first_window(), m.last_window()) {
        (Some(first), Some(last)) if first > 0.0 => Some(last / first),
        _ => None,
    };
    let report = SimulationReport {
        kappa: cfg.kappa,
        state_dim: s.sim_model.dim_x(),
        coefficient_state_dim: s.coefficient_model.dim_x(),
        scheme: sim_cfg.scheme.to_string(),
        dt: sim_cfg.dt,
        t_end: sim_cfg.t_end,
        record_stride: sim_cfg.record_stride,
        linear_regime_margin: margin,
        first_window: m.first_window(),
        last_window: m.last_window(),
        decay_ratio,
        window_starts: m.window_starts,
        window_norms: m.window_norms,
        sup_state_norm: m.sup_state_norm,
        saturation_fraction: m.saturation_fraction,
        tail_mean_mismatch: m.tail_mean_mismatch,
    };
    opts.write_json("metrics.json", &report)?;
    opts.say(&format!(
        "wrote {} ({} samples)",
        path.display(),
        traj.len()
    ));
    if let Some(r) = report.decay_ratio {
        opts.say(&format!("error window ratio last/first = {r:.6e}"));
    }
    opts.say(&format!(
        "sup ‖x‖ = {:.6e}, saturated fraction = {:.4}",
        report.sup_state_norm, report.saturation_fraction
    ));
    Ok(status)
}

#[derive(Serialize)]
struct MeasureReport {
    kappa: f64,
    samples: usize,
    identity_gap: f64,
    tolerance: f64,
}

/// `sup_t ‖u_reg(t) + κ y_ref(t)‖` over `samples` points of the slowest period.
pub fn identity_gap(
    model: &StateSpaceModel,
    kappa: f64,
    spec: &SignalSpec,
    samples: usize,
) -> CliResult<f64> {
    let coeffs = compute_coefficients(model, kappa, spec)?;
    let slowest = spec.frequencies().into_iter().fold(f64::INFINITY, f64::min);
    let horizon = if slowest.is_finite() {
        2.0 * std::f64::consts::PI / slowest
    } else {
        1.0
    };
    let mut worst = 0.0f64;
    for i in 0..samples {
        let t = horizon * i as f64 / (samples - 1).max(1) as f64;
        let sum = &coeffs.eval_ureg(t) + &spec.eval_reference(t).mapv(|z| z * kappa);
        worst = sum.iter().map(|z| z.norm()).fold(worst, f64::max);
    }
    Ok(worst)
}

pub fn measure_disturbance(
    cfg: &ExperimentConfig,
    base_dir: &Path,
    opts: &RunOptions,
) -> CliResult<Status> {
    let s = setup(cfg, base_dir, opts)?;
    let measured =
        measured_reference_from_disturbance(&s.coefficient_model, cfg.kappa, &s.signals)?;
    let combined = measured.with_disturbance_of(&s.signals)?;
    let out_cfg = ExperimentConfig {
        signals: cfg.signals.with_values_of(&combined),
        ..cfg.clone()
    };
    let path = opts.write("measured_signals.toml", &out_cfg.to_toml())?;

    // Check what was written, not the in-memory spec.
    let reread = ExperimentConfig::from_toml(&fs::read_to_string(&path)?)
        .map_err(|e| CliError::new(EXIT_FAILURE, format!("written config does not parse: {e}")))?;
    let spec = reread
        .signals
        .to_spec(s.sim_model.dim_u(), s.sim_model.dim_d())?;
    let gap = identity_gap(&s.coefficient_model, cfg.kappa, &spec, IDENTITY_SAMPLES)?;
    opts.write_json(
        "metrics.json",
        &MeasureReport {
            kappa: cfg.kappa,
            samples: IDENTITY_SAMPLES,
            identity_gap: gap,
            tolerance: IDENTITY_TOLERANCE,
        },
    )?;
    opts.say(&format!("wrote {}", path.display()));
    opts.say(&format!(
        "sup ‖u_reg + κ y_ref‖ over {IDENTITY_SAMPLES} samples = {gap:.3e} (tolerance {IDENTITY_TOLERANCE:.0e})"
    ));
    if !(gap <= IDENTITY_TOLERANCE) {
        return Err(CliError::new(
            EXIT_FAILURE,
            format!("measured reference fails the identity check: {gap:.3e}"),
        ));
    }
    Ok(Status::Success)
}
