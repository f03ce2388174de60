//! Feedforward design: the coefficients of
//!
//! ```text
//! u_reg(t) = f_0 + ½ Σ_k [(f_k + g_k) cos(ω_k t) + i (f_k − g_k) sin(ω_k t)]
//! ```
//!
//! from closed-loop transfer values, the regulator equations
//! `Π A_exo = A Π + B_c Γ + B_d E`, `F = C Π`, and the disturbance
//! measurement identities.

use std::fmt::Write as _;

use ndarray::{Array1, Array2};

use crate::error::{RegError, Result};
use crate::linalg;
use crate::saturation::SaturationSpec;
use crate::signal::{Exosystem, Harmonic, SignalSpec};
use crate::state_space::{StateSpaceModel, TransferValue};
use crate::C64;

/// Condition-number gate for inverting `P_c^κ(λ)`.
pub const TRANSMISSION_CONDITION_LIMIT: f64 = 1e12;

const COMMENSURATE_TOLERANCE: f64 = 1e-9;
const PERIOD_SAMPLES: usize = 10_000;
const HORIZON_SAMPLES: usize = 100_000;

#[derive(Clone, Debug, PartialEq)]
pub struct RegulatorCoefficients {
    pub f0: Array1<C64>,
    pub f: Vec<Array1<C64>>,
    pub g: Vec<Array1<C64>>,
    pub frequencies: Vec<f64>,
    pub kappa: f64,
    /// Computed from real model matrices and real signal coefficients, so
    /// `u_reg(t)` is real up to rounding.
    pub real_data: bool,
}

impl RegulatorCoefficients {
    pub fn zero(dim_u: usize, frequencies: &[f64], kappa: f64) -> Self {
        Self {
            f0: Array1::zeros(dim_u),
            f: vec![Array1::zeros(dim_u); frequencies.len()],
            g: vec![Array1::zeros(dim_u); frequencies.len()],
            frequencies: frequencies.to_vec(),
            kappa,
            real_data: true,
        }
    }

    pub fn dim(&self) -> usize {
        self.f0.len()
    }

    /// `u_reg(t)` without discarding imaginary parts.
    pub fn eval_ureg_complex(&self, t: f64) -> Array1<C64> {
        let mut u = self.f0.clone();
        let i = C64::new(0.0, 1.0);
        for ((f, g), &omega) in self.f.iter().zip(&self.g).zip(&self.frequencies) {
            let (s, c) = (omega * t).sin_cos();
            for j in 0..u.len() {
                u[j] += 0.5 * ((f[j] + g[j]) * c + i * (f[j] - g[j]) * s);
            }
        }
        u
    }

    /// `u_reg(t)`; for real data the rounding residue in the imaginary part is
    /// dropped.
    pub fn eval_ureg(&self, t: f64) -> Array1<C64> {
        let mut u = self.eval_ureg_complex(t);
        if self.real_data {
            u.mapv_inplace(|z| C64::new(z.re, 0.0));
        }
        u
    }

    /// Real part of `u_reg(t)`.
    pub fn eval_ureg_real(&self, t: f64) -> Array1<f64> {
        self.eval_ureg_complex(t).mapv(|z| z.re)
    }

    /// Largest `|Im u_reg(t)|` over `samples` points of the slowest period.
    pub fn max_imaginary_residue(&self, samples: usize) -> f64 {
        let horizon = self
            .frequencies
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        let horizon = if horizon.is_finite() {
            2.0 * std::f64::consts::PI / horizon
        } else {
            1.0
        };
        (0..samples)
            .map(|j| {
                let t = horizon * j as f64 / samples.max(1) as f64;
                self.eval_ureg_complex(t)
                    .iter()
                    .map(|z| z.im.abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }

    /// Largest `‖g_k − conj(f_k)‖` and `‖Im f_0‖`.
    pub fn conjugate_defect(&self) -> f64 {
        let f0 = self.f0.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
        self.f
            .iter()
            .zip(&self.g)
            .map(|(f, g)| linalg::norm_c(&(g - &f.mapv(|z| z.conj()))))
            .fold(f0, f64::max)
    }

    /// CSV with one row per frequency (`k = 0` is the constant term, stored as
    /// `f = g = f_0`).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,omega");
        for j in 1..=self.dim() {
            let _ = write!(out, ",re_f_{j},im_f_{j},re_g_{j},im_g_{j}");
        }
        out.push('\n');
        let mut row = |k: usize, omega: f64, f: &Array1<C64>, g: &Array1<C64>| {
            let _ = write!(out, "{k},{omega:.16e}");
            for (a, b) in f.iter().zip(g) {
                let _ = write!(
                    out,
                    ",{:.16e},{:.16e},{:.16e},{:.16e}",
                    a.re, a.im, b.re, b.im
                );
            }
            out.push('\n');
        };
        row(0, 0.0, &self.f0, &self.f0);
        for (k, ((f, g), &omega)) in self
            .f
            .iter()
            .zip(&self.g)
            .zip(&self.frequencies)
            .enumerate()
        {
            row(k + 1, omega, f, g);
        }
        out
    }
}

/// Solution `(Π, Γ)` of the regulator equations in the real exosystem basis.
#[derive(Clone, Debug, PartialEq)]
pub struct RegulatorSolution {
    pub pi: Array2<C64>,
    pub gamma: Array2<C64>,
}

impl RegulatorSolution {
    pub fn gamma_v(&self, exo: &Exosystem, t: f64) -> Array1<C64> {
        self.gamma.dot(&exo.state(t).mapv(|v| C64::new(v, 0.0)))
    }

    pub fn steady_state(&self, exo: &Exosystem, t: f64) -> Array1<C64> {
        self.pi.dot(&exo.state(t).mapv(|v| C64::new(v, 0.0)))
    }

    /// Real part of `Π v₀`.
    pub fn initial_state(&self, exo: &Exosystem) -> Array1<f64> {
        self.steady_state(exo, 0.0).mapv(|z| z.re)
    }
}

fn check_dims(model: &StateSpaceModel, dim_u: usize, dim_d: usize) -> Result<()> {
    if dim_u != model.dim_u() {
        return Err(RegError::DimensionMismatch {
            context: "signal reference dimension vs model inputs",
            expected: model.dim_u(),
            got: dim_u,
        });
    }
    if dim_d != model.dim_d() {
        return Err(RegError::DimensionMismatch {
            context: "signal disturbance dimension vs model disturbances",
            expected: model.dim_d(),
            got: dim_d,
        });
    }
    Ok(())
}

/// Closed-loop transfer at `λ = 0`, with failures reported as resolvent failures.
fn zero_frequency_transfer(
    model: &StateSpaceModel,
    kappa: f64,
) -> Result<(Array2<C64>, TransferValue)> {
    model
        .closed_loop_state_response(kappa, C64::new(0.0, 0.0))
        .map_err(|e| match e {
            RegError::NearSingularResolvent { sigma_min, threshold, .. } => RegError::ResolventFailure {
                reason: format!("0 is (numerically) an eigenvalue of A^κ: σ_min = {sigma_min:.3e} ≤ {threshold:.3e}"),
            },
            other => other,
        })
}

/// `P_c^κ(λ)^{-1} rhs` behind the condition-number gate.
fn invert_pc(tv: &TransferValue, rhs: &Array1<C64>, omega: f64) -> Result<Array1<C64>> {
    let condition = linalg::condition_number(&tv.p_c)?;
    if !(condition < TRANSMISSION_CONDITION_LIMIT) {
        return Err(if omega == 0.0 {
            RegError::ResolventFailure {
                reason: format!("P_c^κ(0) is not invertible (condition number {condition:.3e})"),
            }
        } else {
            RegError::TransmissionZero { omega, condition }
        });
    }
    linalg::solve_dense_vec(&tv.p_c, rhs)
}

/// `P_c^κ(λ)^{-1}((I − κP_c^κ(λ)) y − P_d^κ(λ) w)`.
fn feedforward(
    tv: &TransferValue,
    y: &Array1<C64>,
    w: &Array1<C64>,
    omega: f64,
) -> Result<Array1<C64>> {
    let rhs = y - &tv.p_c.dot(y).mapv(|z| z * tv.kappa) - tv.p_d.dot(w);
    invert_pc(tv, &rhs, omega)
}

pub fn compute_coefficients(
    model: &StateSpaceModel,
    kappa: f64,
    spec: &SignalSpec,
) -> Result<RegulatorCoefficients> {
    spec.validate()?;
    check_dims(model, spec.dim_u(), spec.dim_d())?;
    if !(kappa >= 0.0) || !kappa.is_finite() {
        return Err(RegError::InvalidSpec(format!(
            "feedback gain must be nonnegative, got {kappa}"
        )));
    }
    let mut coeffs = RegulatorCoefficients::zero(model.dim_u(), &spec.frequencies(), kappa);
    coeffs.real_data = spec.is_real();

    if spec.has_constant_part() {
        let (_, tv) = zero_frequency_transfer(model, kappa)?;
        coeffs.f0 = feedforward(&tv, &spec.a0, &spec.c0, 0.0)?;
    }
    let i = C64::new(0.0, 1.0);
    for (k, h) in spec.harmonics.iter().enumerate() {
        let plus = model.closed_loop_transfer(kappa, i * h.omega)?;
        let minus = model.closed_loop_transfer(kappa, -i * h.omega)?;
        let y_plus = &h.a - &h.b.mapv(|z| z * i);
        let w_plus = &h.c - &h.d.mapv(|z| z * i);
        let y_minus = &h.a + &h.b.mapv(|z| z * i);
        let w_minus = &h.c + &h.d.mapv(|z| z * i);
        coeffs.f[k] = feedforward(&plus, &y_plus, &w_plus, h.omega)?;
        coeffs.g[k] = feedforward(&minus, &y_minus, &w_minus, h.omega)?;
    }
    Ok(coeffs)
}

/// Coefficients from open-loop transfer values,
/// `f_k = P_c(iω_k)^{-1}((a_k − i b_k) − P_d(iω_k)(c_k − i d_k))`.
///
/// Requires `±iω_k ∈ ρ(A)` (and `0 ∈ ρ(A)` with a constant part). Agrees with
/// [`compute_coefficients`] for every `κ`.
pub fn compute_coefficients_open_loop(
    model: &StateSpaceModel,
    spec: &SignalSpec,
) -> Result<RegulatorCoefficients> {
    spec.validate()?;
    check_dims(model, spec.dim_u(), spec.dim_d())?;
    let mut coeffs = RegulatorCoefficients::zero(model.dim_u(), &spec.frequencies(), 0.0);
    coeffs.real_data = spec.is_real();
    if spec.has_constant_part() {
        let tv = model.transfer(C64::new(0.0, 0.0))?;
        coeffs.f0 = feedforward(&tv, &spec.a0, &spec.c0, 0.0)?;
    }
    let i = C64::new(0.0, 1.0);
    for (k, h) in spec.harmonics.iter().enumerate() {
        let plus = model.transfer(i * h.omega)?;
        let minus = model.transfer(-i * h.omega)?;
        coeffs.f[k] = feedforward(
            &plus,
            &(&h.a - &h.b.mapv(|z| z * i)),
            &(&h.c - &h.d.mapv(|z| z * i)),
            h.omega,
        )?;
        coeffs.g[k] = feedforward(
            &minus,
            &(&h.a + &h.b.mapv(|z| z * i)),
            &(&h.c + &h.d.mapv(|z| z * i)),
            h.omega,
        )?;
    }
    Ok(coeffs)
}

/// Solves the regulator equations through the eigenbasis of `A_exo`:
///
/// ```text
/// Γφ = P_c^κ(λ)^{-1}((I − κP_c^κ(λ))Fφ − P_d^κ(λ)Eφ)
/// Πφ = (λ − A^κ)^{-1}(B_c(Γφ + κFφ) + B_d Eφ)
/// ```
///
/// and maps the result back to the real exosystem coordinates.
pub fn solve_regulator_equations(
    model: &StateSpaceModel,
    kappa: f64,
    exo: &Exosystem,
) -> Result<RegulatorSolution> {
    check_dims(model, exo.f.nrows(), exo.e.nrows())?;
    let n = model.dim_x();
    let mu = model.dim_u();
    let dim = exo.dim();
    let mut pi_eig = Array2::<C64>::zeros((n, dim));
    let mut gamma_eig = Array2::<C64>::zeros((mu, dim));

    for (col, (lambda, phi)) in exo.eigenbasis().into_iter().enumerate() {
        let (x, tv) = if lambda == C64::new(0.0, 0.0) {
            zero_frequency_transfer(model, kappa)?
        } else {
            model.closed_loop_state_response(kappa, lambda)?
        };
        let f_phi = exo.f.dot(&phi);
        let e_phi = exo.e.dot(&phi);
        let gamma_phi = feedforward(&tv, &f_phi, &e_phi, lambda.im.abs())?;
        let drive = &gamma_phi + &f_phi.mapv(|z| z * kappa);
        let x_c = x.slice(ndarray::s![.., ..mu]);
        let x_d = x.slice(ndarray::s![.., mu..]);
        let pi_phi = x_c.dot(&drive) + x_d.dot(&e_phi);
        pi_eig.column_mut(col).assign(&pi_phi);
        gamma_eig.column_mut(col).assign(&gamma_phi);
    }

    // Per rotation block the eigenvector matrix V is unitary, V⁻¹ = Vᴴ.
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let i = C64::new(0.0, 1.0);
    let to_real = |m: &Array2<C64>| {
        let mut out = m.clone();
        let offset = usize::from(exo.has_constant_block);
        for k in 0..exo.frequencies.len() {
            let c = offset + 2 * k;
            let plus = m.column(c).to_owned();
            let minus = m.column(c + 1).to_owned();
            out.column_mut(c).assign(&(&plus + &minus).mapv(|z| z * h));
            out.column_mut(c + 1)
                .assign(&(&minus - &plus).mapv(|z| z * i * h));
        }
        out
    };
    Ok(RegulatorSolution {
        pi: to_real(&pi_eig),
        gamma: to_real(&gamma_eig),
    })
}

/// `(‖Π A_exo − AΠ − B_cΓ − B_dE‖_F, ‖F − CΠ‖_F)`.
pub fn regulator_residual(
    model: &StateSpaceModel,
    exo: &Exosystem,
    sol: &RegulatorSolution,
) -> Result<(f64, f64)> {
    check_dims(model, exo.f.nrows(), exo.e.nrows())?;
    if sol.pi.dim() != (model.dim_x(), exo.dim()) || sol.gamma.dim() != (model.dim_u(), exo.dim()) {
        return Err(RegError::DimensionMismatch {
            context: "regulator solution shape",
            expected: model.dim_x() * exo.dim(),
            got: sol.pi.len(),
        });
    }
    let c = linalg::to_complex;
    let lhs = sol.pi.dot(&c(&exo.a_exo));
    let rhs =
        c(model.a()).dot(&sol.pi) + c(model.b_c()).dot(&sol.gamma) + c(model.b_d()).dot(&exo.e);
    let dynamic = linalg::frobenius_c(&(lhs - rhs));
    let output = linalg::frobenius_c(&(&exo.f - &c(model.c()).dot(&sol.pi)));
    Ok((dynamic, output))
}

/// Reference that the closed loop would produce under the disturbance alone:
/// `a_0 = P_d^κ(0)c_0`, `a_k ∓ i b_k = P_d^κ(±iω_k)(c_k ∓ i d_k)`.
///
/// The returned spec keeps the frequencies and has a zero disturbance part.
/// Combined with the original disturbance it gives `u_reg + κ y_ref ≡ 0`.
pub fn measured_reference_from_disturbance(
    model: &StateSpaceModel,
    kappa: f64,
    spec: &SignalSpec,
) -> Result<SignalSpec> {
    spec.validate()?;
    check_dims(model, spec.dim_u(), spec.dim_d())?;
    let mu = model.dim_u();
    let md = model.dim_d();
    let is_zero = |v: &Array1<C64>| v.iter().all(|z| z.norm() == 0.0);

    let mut a0 = Array1::zeros(mu);
    if !is_zero(&spec.c0) {
        let (_, tv) = zero_frequency_transfer(model, kappa)?;
        invert_pc(&tv, &Array1::zeros(mu), 0.0)?;
        a0 = tv.p_d.dot(&spec.c0);
    }
    let i = C64::new(0.0, 1.0);
    let mut harmonics = Vec::with_capacity(spec.harmonics.len());
    for h in &spec.harmonics {
        let (mut a, mut b) = (Array1::zeros(mu), Array1::zeros(mu));
        if !is_zero(&h.c) || !is_zero(&h.d) {
            let plus = model.closed_loop_transfer(kappa, i * h.omega)?;
            let minus = model.closed_loop_transfer(kappa, -i * h.omega)?;
            invert_pc(&plus, &Array1::zeros(mu), h.omega)?;
            invert_pc(&minus, &Array1::zeros(mu), h.omega)?;
            let alpha = plus.p_d.dot(&(&h.c - &h.d.mapv(|z| z * i)));
            let beta = minus.p_d.dot(&(&h.c + &h.d.mapv(|z| z * i)));
            a = (&alpha + &beta).mapv(|z| z * 0.5);
            b = (&alpha - &beta).mapv(|z| z * i * 0.5);
            if spec.is_real() {
                a.mapv_inplace(|z| C64::new(z.re, 0.0));
                b.mapv_inplace(|z| C64::new(z.re, 0.0));
            }
        }
        harmonics.push(Harmonic {
            omega: h.omega,
            a,
            b,
            c: Array1::zeros(md),
            d: Array1::zeros(md),
        });
    }
    if spec.is_real() {
        a0.mapv_inplace(|z: C64| C64::new(z.re, 0.0));
    }
    SignalSpec::new(a0, Array1::zeros(md), harmonics)
}

/// Common period of the frequencies if all ratios are rational (within
/// `1e-9`) with moderate denominators.
pub fn common_period(frequencies: &[f64]) -> Option<f64> {
    let base = *frequencies.first()?;
    let mut fracs = Vec::with_capacity(frequencies.len());
    for &w in frequencies {
        fracs.push(rational_approximation(w / base, 10_000)?);
    }
    let lcm_den = fracs.iter().try_fold(1u64, |acc, &(_, q)| {
        let l = acc / gcd(acc, q) * q;
        (l <= 1_000_000).then_some(l)
    })?;
    let numerators: Vec<u64> = fracs.iter().map(|&(p, q)| p * (lcm_den / q)).collect();
    let g = numerators.iter().fold(0u64, |acc, &n| gcd(acc, n));
    if g == 0 {
        return None;
    }
    Some(2.0 * std::f64::consts::PI * lcm_den as f64 / (base * g as f64))
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Continued-fraction approximation `p/q ≈ r` with `q ≤ max_den`.
fn rational_approximation(r: f64, max_den: u64) -> Option<(u64, u64)> {
    if !(r > 0.0) || !r.is_finite() {
        return None;
    }
    let (mut h0, mut h1) = (0u64, 1u64);
    let (mut k0, mut k1) = (1u64, 0u64);
    let mut x = r;
    for _ in 0..64 {
        let a = x.floor();
        if a > 1e12 {
            break;
        }
        let a = a as u64;
        let h2 = a.checked_mul(h1)?.checked_add(h0)?;
        let k2 = a.checked_mul(k1)?.checked_add(k0)?;
        if k2 > max_den {
            break;
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        if (r - h1 as f64 / k1 as f64).abs() <= COMMENSURATE_TOLERANCE * r.max(1.0) {
            return Some((h1, k1));
        }
        let frac = x - a as f64;
        if frac == 0.0 {
            break;
        }
        x = 1.0 / frac;
    }
    None
}

/// Largest `δ` with `u_reg(t) ∈ U_φ^δ` over a dense time sample.
///
/// Commensurate frequencies are sampled over one common period at `10⁴`
/// points. Otherwise `[0, 100/min ω_k]` is sampled at `10⁵` points and a
/// slack of `1e-3 Σ_k (‖f_k‖ + ‖g_k‖)` is subtracted.
pub fn linear_regime_margin(coeffs: &RegulatorCoefficients, sat: &SaturationSpec) -> Result<f64> {
    if coeffs.dim() != sat.dim() {
        return Err(RegError::DimensionMismatch {
            context: "regulator coefficients vs saturation channels",
            expected: sat.dim(),
            got: coeffs.dim(),
        });
    }
    if coeffs.frequencies.is_empty() {
        return Ok(sat.linear_margin_of(coeffs.f0.as_slice().unwrap_or(&coeffs.f0.to_vec())));
    }
    let (horizon, samples, slack) = match common_period(&coeffs.frequencies) {
        Some(period) => (period, PERIOD_SAMPLES, 0.0),
        None => {
            let min_omega = coeffs
                .frequencies
                .iter()
                .cloned()
                .fold(f64::INFINITY, f64::min);
            let slack = 1e-3
                * coeffs
                    .f
                    .iter()
                    .zip(&coeffs.g)
                    .map(|(f, g)| linalg::norm_c(f) + linalg::norm_c(g))
                    .sum::<f64>();
            (100.0 / min_omega, HORIZON_SAMPLES, slack)
        }
    };
    let mut margin = f64::INFINITY;
    for j in 0..samples {
        let t = horizon * j as f64 / samples as f64;
        let u = coeffs.eval_ureg(t);
        margin = margin.min(sat.linear_margin_of(u.as_slice().expect("contiguous")));
    }
    Ok(margin - slack)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::build_toy;
    use crate::signal::real_vector;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn scalar_harmonic(omega: f64, a: f64, b: f64, cc: f64, d: f64) -> Harmonic {
        Harmonic {
            omega,
            a: real_vector(&[a]),
            b: real_vector(&[b]),
            c: real_vector(&[cc]),
            d: real_vector(&[d]),
        }
    }

    fn sine_reference() -> SignalSpec {
        SignalSpec::new(
            real_vector(&[0.0]),
            real_vector(&[0.0]),
            vec![scalar_harmonic(1.0, 0.0, 1.0, 0.0, 0.0)],
        )
        .unwrap()
    }

    #[test]
    fn zero_signals_give_zero_coefficients() {
        let m = build_toy(-1.0).unwrap();
        let spec = SignalSpec::new(
            real_vector(&[0.0]),
            real_vector(&[0.0]),
            vec![scalar_harmonic(2.0, 0.0, 0.0, 0.0, 0.0)],
        )
        .unwrap();
        let k = compute_coefficients(&m, 1.0, &spec).unwrap();
        assert!(k
            .f0
            .iter()
            .chain(k.f[0].iter())
            .chain(k.g[0].iter())
            .all(|z| z.norm() == 0.0));
        assert_eq!(k.eval_ureg_real(0.7)[0], 0.0);
    }

    #[test]
    fn toy_sine_reference() {
        let m = build_toy(-1.0).unwrap();
        let k = compute_coefficients(&m, 0.0, &sine_reference()).unwrap();
        // Phasor oracle: P_c(i) = 1/(1+i), so f₁ = (1+i)(−i) = 1 − i.
        let expected_f = c(1.0, 1.0) * c(0.0, -1.0);
        assert!((k.f[0][0] - expected_f).norm() < 1e-14);
        assert!((k.g[0][0] - expected_f.conj()).norm() < 1e-14);
        for t in [0.0, 0.3, 1.7, 4.0] {
            assert!((k.eval_ureg_real(t)[0] - (t.cos() + t.sin())).abs() < 1e-14);
        }
        assert!((k.eval_ureg_real(0.0)[0] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn toy_sine_steady_state_tracks() {
        // Feed u_reg into ẋ = −x + u and integrate analytically (variation of
        // constants on the trigonometric input): the forced response is
        // x_p(t) = (cos t + sin t + sin t − cos t)/2 = sin t.
        let k = compute_coefficients(&build_toy(-1.0).unwrap(), 0.0, &sine_reference()).unwrap();
        let (f1, g1) = (k.f[0][0], k.g[0][0]);
        // u_reg = α cos t + β sin t.
        let alpha = (0.5 * (f1 + g1)).re;
        let beta = (0.5 * c(0.0, 1.0) * (f1 - g1)).re;
        // Particular solution of ẋ = −x + α cos t + β sin t.
        let p = (alpha - beta) / 2.0;
        let q = (alpha + beta) / 2.0;
        for t in [0.0, 1.0, 2.5] {
            let xp: f64 = p * f64::cos(t) + q * f64::sin(t);
            assert!((xp - t.sin()).abs() < 1e-14);
        }
    }

    #[test]
    fn formula_example_at_quarter_period() {
        let k = RegulatorCoefficients {
            f0: real_vector(&[0.0]),
            f: vec![Array1::from(vec![c(1.0, -1.0)])],
            g: vec![Array1::from(vec![c(1.0, 1.0)])],
            frequencies: vec![1.0],
            kappa: 0.0,
            real_data: true,
        };
        assert!((k.eval_ureg_real(PI / 2.0)[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn constant_disturbance_only() {
        let m = build_toy(-1.0).unwrap();
        let spec = SignalSpec::new(real_vector(&[0.0]), real_vector(&[2.0]), vec![]).unwrap();
        let k = compute_coefficients(&m, 1.5, &spec).unwrap();
        // Scalar oracle: A^κ = −2.5, P_c^κ(0) = P_d^κ(0) = 1/2.5.
        let (pc, pd) = (1.0 / 2.5, 1.0 / 2.5);
        assert!((k.f0[0] - c(-pd * 2.0 / pc, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn regulator_equations_toy_constant() {
        let m = build_toy(-1.0).unwrap();
        let spec = SignalSpec::new(real_vector(&[1.0]), real_vector(&[0.0]), vec![]).unwrap();
        let exo = spec.build_exosystem();
        let sol = solve_regulator_equations(&m, 0.0, &exo).unwrap();
        assert!((sol.gamma[[0, 0]] - 1.0).norm() < 1e-15);
        assert!((sol.pi[[0, 0]] - 1.0).norm() < 1e-15);
        let (r1, r2) = regulator_residual(&m, &exo, &sol).unwrap();
        assert!(r1 < 1e-14 && r2 < 1e-14);
    }

    #[test]
    fn regulator_residual_detects_perturbation() {
        let m = build_toy(-1.0).unwrap();
        let spec = SignalSpec::new(
            real_vector(&[0.5]),
            real_vector(&[1.0]),
            vec![scalar_harmonic(2.0, 1.0, -1.0, 0.3, 0.0)],
        )
        .unwrap();
        let exo = spec.build_exosystem();
        let mut sol = solve_regulator_equations(&m, 1.0, &exo).unwrap();
        let (r1, r2) = regulator_residual(&m, &exo, &sol).unwrap();
        assert!(r1 < 1e-12 && r2 < 1e-12, "{r1} {r2}");
        sol.pi[[0, 1]] += 1.0;
        let (r1, r2) = regulator_residual(&m, &exo, &sol).unwrap();
        assert!(r1 > 0.5 && r2 > 0.5);
    }

    #[test]
    fn zero_exosystem() {
        let m = build_toy(-1.0).unwrap();
        let exo = SignalSpec::zero(1, 1).build_exosystem();
        let sol = solve_regulator_equations(&m, 1.0, &exo).unwrap();
        assert_eq!(sol.pi.len(), 0);
        assert_eq!(regulator_residual(&m, &exo, &sol).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn gamma_v_matches_ureg() {
        let m = build_toy(-2.0).unwrap();
        let spec = SignalSpec::new(
            real_vector(&[0.5]),
            real_vector(&[1.0]),
            vec![
                scalar_harmonic(2.0, 1.0, -1.0, 0.3, 0.2),
                scalar_harmonic(3.1, 0.0, 0.4, 0.0, 1.0),
            ],
        )
        .unwrap();
        let exo = spec.build_exosystem();
        let k = compute_coefficients(&m, 0.7, &spec).unwrap();
        let sol = solve_regulator_equations(&m, 0.7, &exo).unwrap();
        for j in 0..50 {
            let t = 0.1 * j as f64;
            let diff = &sol.gamma_v(&exo, t) - &k.eval_ureg_complex(t);
            assert!(linalg::norm_c(&diff) < 1e-12);
        }
    }

    #[test]
    fn measured_reference_cancels_feedforward() {
        let m = build_toy(-1.0).unwrap();
        let kappa = 1.0;
        let dist = SignalSpec::new(
            real_vector(&[0.0]),
            real_vector(&[1.0]),
            vec![scalar_harmonic(2.0, 0.0, 0.0, 0.5, -0.25)],
        )
        .unwrap();
        let measured = measured_reference_from_disturbance(&m, kappa, &dist).unwrap();
        // Scalar oracle: P_d^κ(0) = 1/(0 + 1 + κ).
        assert!((measured.a0[0] - c(0.5, 0.0)).norm() < 1e-14);
        let combined = measured.with_disturbance_of(&dist).unwrap();
        let k = compute_coefficients(&m, kappa, &combined).unwrap();
        for j in 0..200 {
            let t = 0.05 * j as f64;
            let s = &k.eval_ureg_complex(t) + &combined.eval_reference(t).mapv(|z| z * kappa);
            assert!(linalg::norm_c(&s) < 1e-12);
        }
    }

    #[test]
    fn zero_disturbance_measures_zero_reference() {
        let m = build_toy(-1.0).unwrap();
        let spec = SignalSpec::new(
            real_vector(&[0.0]),
            real_vector(&[0.0]),
            vec![scalar_harmonic(2.0, 1.0, 0.0, 0.0, 0.0)],
        )
        .unwrap();
        let r = measured_reference_from_disturbance(&m, 1.0, &spec).unwrap();
        assert!(r.a0[0].norm() == 0.0 && r.harmonics[0].a[0].norm() == 0.0);
    }

    #[test]
    fn open_loop_shortcut_and_kappa_independence() {
        let m = build_toy(-1.0).unwrap();
        let spec = SignalSpec::new(
            real_vector(&[0.3]),
            real_vector(&[1.0]),
            vec![scalar_harmonic(2.0, 1.0, -1.0, 0.3, 0.2)],
        )
        .unwrap();
        let open = compute_coefficients_open_loop(&m, &spec).unwrap();
        for kappa in [0.5, 3.0] {
            let k = compute_coefficients(&m, kappa, &spec).unwrap();
            assert!((k.f[0][0] - open.f[0][0]).norm() < 1e-12);
            assert!((k.g[0][0] - open.g[0][0]).norm() < 1e-12);
            assert!((k.f0[0] - open.f0[0]).norm() < 1e-12);
        }
    }

    #[test]
    fn transmission_zero_is_gated() {
        // C = 0 makes P_c identically zero.
        let m = StateSpaceModel::new(
            ndarray::array![[-1.0]],
            ndarray::array![[1.0]],
            ndarray::array![[1.0]],
            ndarray::array![[0.0]],
            None,
        )
        .unwrap();
        assert!(matches!(
            compute_coefficients(&m, 1.0, &sine_reference()),
            Err(RegError::TransmissionZero { .. })
        ));
        let constant = SignalSpec::new(real_vector(&[1.0]), real_vector(&[0.0]), vec![]).unwrap();
        assert!(matches!(
            compute_coefficients(&m, 1.0, &constant),
            Err(RegError::ResolventFailure { .. })
        ));
    }

    fn scalar_coeffs(f0: f64, amp: f64, omega: f64) -> RegulatorCoefficients {
        // u_reg = f0 + amp cos(ωt): f = g = amp.
        RegulatorCoefficients {
            f0: real_vector(&[f0]),
            f: vec![real_vector(&[amp])],
            g: vec![real_vector(&[amp])],
            frequencies: vec![omega],
            kappa: 0.0,
            real_data: true,
        }
    }

    #[test]
    fn margin_examples() {
        let sat = SaturationSpec::scalar(&[0.0], &[1.0]).unwrap();
        assert!(
            (linear_regime_margin(&scalar_coeffs(0.0, 0.5, 1.0), &sat).unwrap() - 0.5).abs()
                < 1e-12
        );
        assert!(
            (linear_regime_margin(&scalar_coeffs(0.0, 2.0, 1.0), &sat).unwrap() + 1.0).abs()
                < 1e-12
        );
        let shifted = SaturationSpec::scalar(&[0.25], &[1.0]).unwrap();
        let constant = RegulatorCoefficients {
            frequencies: vec![],
            f: vec![],
            g: vec![],
            ..scalar_coeffs(0.25, 0.0, 1.0)
        };
        assert_eq!(linear_regime_margin(&constant, &shifted).unwrap(), 1.0);
    }

    #[test]
    fn margin_incommensurate_subtracts_slack() {
        let sat = SaturationSpec::scalar(&[0.0], &[2.0]).unwrap();
        let mut k = scalar_coeffs(0.0, 0.5, 1.0);
        k.frequencies.push(std::f64::consts::SQRT_2);
        k.f.push(real_vector(&[0.25]));
        k.g.push(real_vector(&[0.25]));
        assert!(common_period(&k.frequencies).is_none());
        let m = linear_regime_margin(&k, &sat).unwrap();
        // Peak of 0.5cos t + 0.25cos(√2 t) approaches 0.75 from below.
        assert!((2.0 - 0.75 - 1.5e-3 - 1e-9..2.0 - 0.7).contains(&m), "{m}");
    }

    #[test]
    fn periods() {
        assert!((common_period(&[PI, 3.0 * PI, 5.0 * PI]).unwrap() - 2.0).abs() < 1e-12);
        assert!((common_period(&[2.0, 3.0]).unwrap() - 2.0 * PI).abs() < 1e-12);
        assert!((common_period(&[1.5]).unwrap() - 2.0 * PI / 1.5).abs() < 1e-12);
        assert!(common_period(&[1.0, PI]).is_none());
    }

    #[test]
    fn csv_layout() {
        let k = compute_coefficients(&build_toy(-1.0).unwrap(), 0.0, &sine_reference()).unwrap();
        let csv = k.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "k,omega,re_f_1,im_f_1,re_g_1,im_g_1");
        assert_eq!(lines.len(), 3);
        assert!(lines[2].starts_with("1,1.0000000000000000e0,"));
    }
}
