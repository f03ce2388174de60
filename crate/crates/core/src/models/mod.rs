//! Spectral-Galerkin case studies and a scalar test model.

mod heat;
mod toy;
mod wave;

pub use heat::{
    build_heat2d, heat_initial_state, heat_mode_index, heat_modes, heat_transfer_series,
    HeatModelConfig,
};
pub use toy::build_toy;
pub use wave::{
    build_wave1d, wave_initial_state, wave_transfer_exact, WaveCoefficient, WaveModelConfig,
};

use std::f64::consts::PI;

use crate::saturation::SaturationSpec;
use crate::signal::{real_vector, Harmonic, SignalSpec};

pub const HEAT_PAPER_KAPPA: f64 = 3.0;
pub const WAVE_PAPER_KAPPA: f64 = 0.75;

fn harmonic(omega: f64, a: &[f64], b: &[f64], c: &[f64], d: &[f64]) -> Harmonic {
    Harmonic {
        omega,
        a: real_vector(a),
        b: real_vector(b),
        c: real_vector(c),
        d: real_vector(d),
    }
}

/// Heat experiment: `y_ref = (1 + sin πt, 2 + ½cos πt + cos 3πt)`,
/// `w_d = 2 + 3cos 5πt`.
pub fn heat_paper_signals() -> SignalSpec {
    SignalSpec::new(
        real_vector(&[1.0, 2.0]),
        real_vector(&[2.0]),
        vec![
            harmonic(PI, &[0.0, 0.5], &[1.0, 0.0], &[0.0], &[0.0]),
            harmonic(3.0 * PI, &[0.0, 1.0], &[0.0, 0.0], &[0.0], &[0.0]),
            harmonic(5.0 * PI, &[0.0, 0.0], &[0.0, 0.0], &[3.0], &[0.0]),
        ],
    )
    .expect("valid heat signals")
}

/// Saturation bounds for the heat experiment.
///
/// Over one period `u_reg` spans roughly `[−10.8, 1.7] × [−8.9, 14.0]`; these
/// balls contain it with a margin of about 1.5 while still clipping the
/// initial transient.
pub fn heat_paper_saturation() -> SaturationSpec {
    SaturationSpec::scalar(&[-4.5, 2.5], &[8.0, 13.0]).expect("valid heat saturation")
}

/// Saturation bounds for the wave experiment; `u_reg = ½cos 5πt` leaves a
/// margin of ½.
pub fn wave_paper_saturation() -> SaturationSpec {
    SaturationSpec::scalar(&[0.0], &[1.0]).expect("valid wave saturation")
}

/// Wave experiment: `y_ref = sin πt + cos 3πt`, `w_d = ½cos 5πt`.
pub fn wave_paper_signals() -> SignalSpec {
    SignalSpec::new(
        real_vector(&[0.0]),
        real_vector(&[0.0]),
        vec![
            harmonic(PI, &[0.0], &[1.0], &[0.0], &[0.0]),
            harmonic(3.0 * PI, &[1.0], &[0.0], &[0.0], &[0.0]),
            harmonic(5.0 * PI, &[0.0], &[0.0], &[0.5], &[0.0]),
        ],
    )
    .expect("valid wave signals")
}

/// Normalization of the cosine basis `c_m cos(mπξ)` on `[0, 1]`.
pub(crate) fn cosine_norm(m: usize) -> f64 {
    if m == 0 {
        1.0
    } else {
        std::f64::consts::SQRT_2
    }
}
