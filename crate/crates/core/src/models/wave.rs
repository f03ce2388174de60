//! Wave equation `ρ v_tt = (T v_ξ)_ξ` on `[0, 1]` with boundary force
//! `−T v_ξ(0) = u`, `T v_ξ(1) = w_d` and velocity measurement `y = v_t(0)`.
//!
//! With constant `ρ, T` the state `(ρ v_t, v_ξ)` is rescaled to
//! `p = √ρ v_t`, `s = √T v_ξ`, so the energy is `½‖(p, s)‖²` and the Gram
//! matrix is the identity. `p` is expanded in `ψ_m = c_m cos(mπξ)`
//! (`m = 0..N−1`) and `s` in `χ_m = −√2 sin(mπξ)` (`m = 1..N−1`), with
//! `ψ_m' = mπ χ_m`.

use std::f64::consts::PI;

use ndarray::{Array1, Array2};

use super::cosine_norm;
use crate::error::{RegError, Result};
use crate::state_space::StateSpaceModel;
use crate::C64;

/// Material coefficient: a constant, or a sampled profile (rejected).
#[derive(Clone, Debug, PartialEq)]
pub enum WaveCoefficient {
    Constant(f64),
    Profile(Vec<(f64, f64)>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct WaveModelConfig {
    pub n_modes: usize,
    pub rho: WaveCoefficient,
    pub tension: WaveCoefficient,
}

impl WaveModelConfig {
    pub fn new(n_modes: usize) -> Self {
        Self {
            n_modes,
            rho: WaveCoefficient::Constant(1.0),
            tension: WaveCoefficient::Constant(1.0),
        }
    }

    /// Validated `(N, ρ, T)`.
    fn constants(&self) -> Result<(usize, f64, f64)> {
        if self.n_modes == 0 {
            return Err(RegError::InvalidSpec(
                "wave model needs at least one mode".into(),
            ));
        }
        let value = |name: &str, c: &WaveCoefficient| match c {
            WaveCoefficient::Constant(v) if *v > 0.0 && v.is_finite() => Ok(*v),
            WaveCoefficient::Constant(v) => Err(RegError::InvalidSpec(format!(
                "{name} must be positive, got {v}"
            ))),
            WaveCoefficient::Profile(_) => Err(RegError::UnsupportedModel(format!(
                "variable {name} is not supported; only constant coefficients are"
            ))),
        };
        Ok((
            self.n_modes,
            value("rho", &self.rho)?,
            value("tension", &self.tension)?,
        ))
    }
}

pub fn build_wave1d(cfg: &WaveModelConfig) -> Result<StateSpaceModel> {
    let (n, rho, tension) = cfg.constants()?;
    let speed = (tension / rho).sqrt();
    let dim = 2 * n - 1;
    let mut a = Array2::zeros((dim, dim));
    let mut b_c = Array2::zeros((dim, 1));
    let mut b_d = Array2::zeros((dim, 1));
    for m in 0..n {
        let gain = cosine_norm(m) / rho.sqrt();
        b_c[[m, 0]] = gain;
        b_d[[m, 0]] = if m % 2 == 0 { gain } else { -gain };
        if m > 0 {
            let s = n - 1 + m;
            let freq = m as f64 * PI * speed;
            a[[m, s]] = -freq;
            a[[s, m]] = freq;
        }
    }
    let c = b_c.t().to_owned();
    Ok(StateSpaceModel::new(a, b_c, b_d, c, None)?.with_labels(vec!["u".into()]))
}

/// State for `v(0, ξ) = ½(1 + cos(3πξ) + cos(6ξ))`, `v_t(0, ξ) = 0`.
///
/// The velocity part vanishes; the strain coefficients are
/// `s_m = √T ⟨v₀', χ_m⟩`, evaluated in closed form.
pub fn wave_initial_state(cfg: &WaveModelConfig) -> Result<Array1<f64>> {
    let (n, _, tension) = cfg.constants()?;
    let mut x = Array1::zeros(2 * n - 1);
    let s2 = std::f64::consts::SQRT_2;
    for m in 1..n {
        let mp = m as f64 * PI;
        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        // ∫₀¹ sin(6ξ) sin(mπξ) dξ
        let cross = sign * 6f64.sin() * mp / (36.0 - mp * mp);
        let resonant = if m == 3 { 0.5 } else { 0.0 };
        // v₀' = −(3π/2) sin(3πξ) − 3 sin(6ξ);  ⟨f, χ_m⟩ = −√2 ∫ f sin(mπξ).
        let coeff = s2 * (1.5 * PI * resonant + 3.0 * cross);
        x[n - 1 + m] = tension.sqrt() * coeff;
    }
    Ok(x)
}

/// Closed-loop transfer values of the continuous wave equation with
/// `ρ = T = 1`, from the boundary value problem
/// `−ω²v = v''`, `−v'(0) + iκωv(0) = u`, `v'(1) = w`, `y = iωv(0)`:
///
/// ```text
/// P_c^κ(iω) = i cos ω / (iκ cos ω − sin ω),   P_d^κ(iω) = i / (iκ cos ω − sin ω)
/// ```
pub fn wave_transfer_exact(omega: f64, kappa: f64) -> Result<(C64, C64)> {
    let i = C64::new(0.0, 1.0);
    let denom = i * kappa * omega.cos() - omega.sin();
    if denom.norm() < 1e-12 {
        return Err(RegError::DegenerateBvp { omega });
    }
    Ok((i * omega.cos() / denom, i / denom))
}
