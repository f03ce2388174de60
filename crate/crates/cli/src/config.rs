//! TOML experiment configuration.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use ndarray::Array1;
use satreg::models::{
    build_heat2d, build_toy, build_wave1d, heat_initial_state, wave_initial_state,
};
use satreg::regulator::solve_regulator_equations;
use satreg::signal::real_vector;
use satreg::{
    Harmonic, HeatModelConfig, RegError, SaturationSpec, Scheme, SignalSpec, SimulationConfig,
    StateSpaceModel, WaveCoefficient, WaveModelConfig,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Error-feedback gain κ ≥ 0.
    pub kappa: f64,
    pub model: ModelConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub saturation: Option<SaturationConfig>,
    #[serde(default, skip_serializing_if = "SignalsConfig::is_empty")]
    pub signals: SignalsConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimulationSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transfer: Option<TransferSection>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ModelConfig {
    /// Unit square, Neumann boundary, two boundary inputs.
    Heat2d {
        /// Cosine modes per axis (state dimension `modes²`).
        modes: usize,
        /// Resolution used for the feedforward coefficients; defaults to `modes`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        coefficient_modes: Option<usize>,
    },
    /// String on `[0, 1]`, actuated and observed at `ξ = 1`.
    Wave1d {
        modes: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        coefficient_modes: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rho: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tension: Option<f64>,
    },
    /// `ẋ = pole·x + u + w`, `y = x`.
    Toy { pole: f64 },
    /// Plain-text matrix file; relative paths are resolved against the config file.
    MatrixFile { path: PathBuf },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SaturationConfig {
    /// One scalar center `r_k` per input channel.
    pub centers: Vec<f64>,
    /// Radii `δ_k > 0`.
    pub radii: Vec<f64>,
}

/// `y_ref(t) = a0 + Σ_k a[k] cos ω_k t + b[k] sin ω_k t`,
/// `w_d(t) = c0 + Σ_k c[k] cos ω_k t + d[k] sin ω_k t`.
///
/// Rows of `a`..`d` are indexed by frequency; omitted rows or vectors are zero.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalsConfig {
    /// Angular frequencies in rad per unit time.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frequencies: Option<Vec<f64>>,
    /// Angular frequencies as multiples of π (alternative to `frequencies`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frequencies_pi: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub a0: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub c0: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub a: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub b: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub c: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub d: Vec<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialState {
    /// The initial profile of the heat or wave experiment.
    Paper,
    #[default]
    Zero,
    /// `x0 = Π v(0)`, the steady state of the linear closed loop.
    Regulator,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    pub t_end: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    /// Record every n-th step; by default at most 20 000 samples are kept.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record_stride: Option<usize>,
    /// `exponential-euler` (default) or `exponential-midpoint`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scheme: Option<String>,
    #[serde(default)]
    pub initial_state: InitialState,
}

fn default_dt() -> f64 {
    1e-3
}

/// Points at which `transfer` evaluates `P_c^κ(λ)` and `P_d^κ(λ)`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransferSection {
    /// `λ = iω`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub omegas: Vec<f64>,
    /// `λ = iπω`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub omegas_pi: Vec<f64>,
    /// Arbitrary `λ = re + i·im` as `[re, im]` pairs.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub lambdas: Vec<[f64; 2]>,
}

impl SignalsConfig {
    pub fn is_empty(&self) -> bool {
        *self == Self::default()
    }

    pub fn angular_frequencies(&self) -> Result<Vec<f64>, RegError> {
        match (&self.frequencies, &self.frequencies_pi) {
            (Some(_), Some(_)) => Err(RegError::InvalidSpec(
                "give either signals.frequencies or signals.frequencies_pi, not both".into(),
            )),
            (Some(f), None) => Ok(f.clone()),
            (None, Some(f)) => Ok(f.iter().map(|m| m * PI).collect()),
            (None, None) => Ok(Vec::new()),
        }
    }

    pub fn to_spec(&self, dim_u: usize, dim_d: usize) -> Result<SignalSpec, RegError> {
        let omegas = self.angular_frequencies()?;
        let vector = |name: &str, v: &[f64], dim: usize| -> Result<Array1<satreg::C64>, RegError> {
            match v.len() {
                0 => Ok(Array1::zeros(dim)),
                n if n == dim => Ok(real_vector(v)),
                n => Err(RegError::InvalidSpec(format!(
                    "signals.{name} has {n} entries, expected {dim}"
                ))),
            }
        };
        let rows = |name: &str,
                    m: &[Vec<f64>],
                    dim: usize|
         -> Result<Vec<Array1<satreg::C64>>, RegError> {
            if m.len() > omegas.len() {
                return Err(RegError::InvalidSpec(format!(
                    "signals.{name} has {} rows but only {} frequencies",
                    m.len(),
                    omegas.len()
                )));
            }
            (0..omegas.len())
                .map(|k| {
                    vector(
                        &format!("{name}[{k}]"),
                        m.get(k).map_or(&[][..], |r| r),
                        dim,
                    )
                })
                .collect()
        };
        let (a, b) = (rows("a", &self.a, dim_u)?, rows("b", &self.b, dim_u)?);
        let (c, d) = (rows("c", &self.c, dim_d)?, rows("d", &self.d, dim_d)?);
        let harmonics = omegas
            .iter()
            .enumerate()
            .map(|(k, &omega)| Harmonic {
                omega,
                a: a[k].clone(),
                b: b[k].clone(),
                c: c[k].clone(),
                d: d[k].clone(),
            })
            .collect();
        SignalSpec::new(
            vector("a0", &self.a0, dim_u)?,
            vector("c0", &self.c0, dim_d)?,
            harmonics,
        )
    }

    /// Real parts of a spec, keeping the frequency notation of `self`.
    pub fn with_values_of(&self, spec: &SignalSpec) -> Self {
        let re = |v: &Array1<satreg::C64>| v.iter().map(|z| z.re).collect::<Vec<f64>>();
        let (frequencies, frequencies_pi) = match (&self.frequencies, &self.frequencies_pi) {
            (None, Some(f)) => (None, Some(f.clone())),
            _ if spec.harmonics.is_empty() => (None, None),
            _ => (Some(spec.frequencies()), None),
        };
        let h = &spec.harmonics;
        Self {
            frequencies,
            frequencies_pi,
            a0: re(&spec.a0),
            c0: re(&spec.c0),
            a: h.iter().map(|h| re(&h.a)).collect(),
            b: h.iter().map(|h| re(&h.b)).collect(),
            c: h.iter().map(|h| re(&h.c)).collect(),
            d: h.iter().map(|h| re(&h.d)).collect(),
        }
    }
}

impl SaturationConfig {
    pub fn to_spec(&self) -> Result<SaturationSpec, RegError> {
        SaturationSpec::scalar(&self.centers, &self.radii)
    }
}

impl SimulationSection {
    pub fn to_config(&self, kappa: f64) -> Result<SimulationConfig, RegError> {
        let mut cfg = SimulationConfig::new(self.t_end, self.dt, kappa);
        if let Some(stride) = self.record_stride {
            cfg.record_stride = stride;
        }
        if let Some(scheme) = &self.scheme {
            cfg = cfg.with_scheme(scheme.parse::<Scheme>()?);
        }
        Ok(cfg)
    }
}

fn check_modes(what: &str, n: usize) -> Result<usize, RegError> {
    if n == 0 {
        return Err(RegError::InvalidSpec(format!(
            "model.{what} must be positive"
        )));
    }
    Ok(n)
}

fn wave_config(modes: usize, rho: Option<f64>, tension: Option<f64>) -> WaveModelConfig {
    WaveModelConfig {
        rho: WaveCoefficient::Constant(rho.unwrap_or(1.0)),
        tension: WaveCoefficient::Constant(tension.unwrap_or(1.0)),
        ..WaveModelConfig::new(modes)
    }
}

impl ModelConfig {
    /// `(simulation model, coefficient model)`.
    pub fn build(&self, base_dir: &Path) -> Result<(StateSpaceModel, StateSpaceModel), RegError> {
        match self {
            ModelConfig::Heat2d {
                modes,
                coefficient_modes,
            } => {
                let sim = HeatModelConfig::new(check_modes("modes", *modes)?)?;
                let coef = HeatModelConfig::new(check_modes(
                    "coefficient_modes",
                    coefficient_modes.unwrap_or(*modes),
                )?)?;
                Ok((build_heat2d(&sim)?, build_heat2d(&coef)?))
            }
            ModelConfig::Wave1d {
                modes,
                coefficient_modes,
                rho,
                tension,
            } => {
                let sim = wave_config(check_modes("modes", *modes)?, *rho, *tension);
                let n = check_modes("coefficient_modes", coefficient_modes.unwrap_or(*modes))?;
                Ok((
                    build_wave1d(&sim)?,
                    build_wave1d(&wave_config(n, *rho, *tension))?,
                ))
            }
            ModelConfig::Toy { pole } => Ok((build_toy(*pole)?, build_toy(*pole)?)),
            ModelConfig::MatrixFile { path } => {
                let model = satreg::matrix_io::read_model(&base_dir.join(path))?;
                Ok((model.clone(), model))
            }
        }
    }

    pub fn initial_state(
        &self,
        choice: InitialState,
        model: &StateSpaceModel,
        kappa: f64,
        signals: &SignalSpec,
    ) -> Result<Array1<f64>, RegError> {
        match (choice, self) {
            (InitialState::Zero, _) => Ok(Array1::zeros(model.dim_x())),
            (InitialState::Regulator, _) => {
                let exo = signals.build_exosystem();
                Ok(solve_regulator_equations(model, kappa, &exo)?.initial_state(&exo))
            }
            (InitialState::Paper, ModelConfig::Heat2d { modes, .. }) => {
                Ok(heat_initial_state(&HeatModelConfig::new(*modes)?))
            }
            (
                InitialState::Paper,
                ModelConfig::Wave1d {
                    modes,
                    rho,
                    tension,
                    ..
                },
            ) => wave_initial_state(&wave_config(*modes, *rho, *tension)),
            (InitialState::Paper, _) => Err(RegError::InvalidSpec(
                "initial_state = \"paper\" needs a heat2d or wave1d model".into(),
            )),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn deserialize_table(table: toml::Table) -> Result<Self, toml::de::Error> {
        table.try_into()
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration is always serializable")
    }

    /// Checks that do not need the model: positivity and referenced files.
    pub fn validate(&self, base_dir: &Path) -> Result<(), RegError> {
        if !(self.kappa >= 0.0) || !self.kappa.is_finite() {
            return Err(RegError::InvalidSpec(format!(
                "kappa must be finite and nonnegative, got {}",
                self.kappa
            )));
        }
        if let ModelConfig::MatrixFile { path } = &self.model {
            let full = base_dir.join(path);
            if !full.is_file() {
                return Err(RegError::InvalidSpec(format!(
                    "model file {} does not exist",
                    full.display()
                )));
            }
        }
        self.signals.angular_frequencies()?;
        Ok(())
    }
}
