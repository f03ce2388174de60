//! Heat equation on the unit square with Neumann data, controlled and observed
//! on two boundary segments:
//!
//! - `Γ₁ = [0, ½] × {0}` carries `u₁` and the disturbance `w_d`,
//! - `Γ₂ = [½, 1] × {1}` carries `u₂`.
//!
//! The Galerkin basis is the Neumann eigenbasis
//! `φ_mn(ξ) = c_m c_n cos(mπξ₁) cos(nπξ₂)` with `0 ≤ m, n ≤ N−1`.

use std::f64::consts::PI;

use ndarray::{Array1, Array2};

use super::cosine_norm;
use crate::error::{RegError, Result};
use crate::linalg;
use crate::state_space::StateSpaceModel;
use crate::C64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HeatModelConfig {
    pub modes_per_axis: usize,
}

impl HeatModelConfig {
    pub fn new(modes_per_axis: usize) -> Result<Self> {
        if modes_per_axis == 0 {
            return Err(RegError::InvalidSpec(
                "heat model needs at least one mode per axis".into(),
            ));
        }
        Ok(Self { modes_per_axis })
    }
}

/// Mode pairs `(m, n)` in state order: by `m + n`, then by `m`.
pub fn heat_modes(modes_per_axis: usize) -> Vec<(usize, usize)> {
    let mut modes: Vec<(usize, usize)> = (0..modes_per_axis)
        .flat_map(|m| (0..modes_per_axis).map(move |n| (m, n)))
        .collect();
    modes.sort_by_key(|&(m, n)| (m + n, m));
    modes
}

pub fn heat_mode_index(modes_per_axis: usize, m: usize, n: usize) -> Option<usize> {
    heat_modes(modes_per_axis).iter().position(|&p| p == (m, n))
}

fn eigenvalue(m: usize, n: usize) -> f64 {
    -((m * m + n * n) as f64) * PI * PI
}

/// `∫₀^{½} cos(mπs) ds`.
fn half_integral(m: usize) -> f64 {
    if m == 0 {
        0.5
    } else {
        let mp = m as f64 * PI;
        (mp / 2.0).sin() / mp
    }
}

/// Rows of `[B_c | B_d]` for one mode.
fn input_row(m: usize, n: usize) -> [f64; 3] {
    let cc = cosine_norm(m) * cosine_norm(n);
    let gamma1 = cc * half_integral(m);
    // ∫_{½}^{1} cos(mπs) ds = −∫₀^{½} for m ≥ 1; cos(nπ) = (−1)^n.
    let upper = if m == 0 { 0.5 } else { -half_integral(m) };
    let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
    let gamma2 = cc * sign * upper;
    [gamma1, gamma2, gamma1]
}

pub fn build_heat2d(cfg: &HeatModelConfig) -> Result<StateSpaceModel> {
    let modes = heat_modes(cfg.modes_per_axis);
    let n = modes.len();
    let mut a = Array2::zeros((n, n));
    let mut b_c = Array2::zeros((n, 2));
    let mut b_d = Array2::zeros((n, 1));
    for (i, &(m, k)) in modes.iter().enumerate() {
        a[[i, i]] = eigenvalue(m, k);
        let row = input_row(m, k);
        b_c[[i, 0]] = row[0];
        b_c[[i, 1]] = row[1];
        b_d[[i, 0]] = row[2];
    }
    let c = b_c.t().to_owned();
    Ok(StateSpaceModel::new(a, b_c, b_d, c, None)?
        .with_labels(vec!["gamma1".into(), "gamma2".into()]))
}

/// Modal coefficients of `x₀(ξ) = −10 (1 + cos(π(1−ξ₁))) (1 − cos(2πξ₂)/4)`.
///
/// `x₀ = −10 (1 − cos πξ₁)(1 − cos(2πξ₂)/4)` is a product of two cosine
/// polynomials, so only `(0,0), (1,0), (0,2), (1,2)` are nonzero.
pub fn heat_initial_state(cfg: &HeatModelConfig) -> Array1<f64> {
    let s2 = std::f64::consts::SQRT_2;
    // 1 − cos πξ = 1·φ₀ − (1/√2)·φ₁;  1 − cos(2πξ)/4 = 1·φ₀ − (√2/8)·φ₂.
    let x_factor = |m: usize| match m {
        0 => 1.0,
        1 => -1.0 / s2,
        _ => 0.0,
    };
    let y_factor = |n: usize| match n {
        0 => 1.0,
        2 => -s2 / 8.0,
        _ => 0.0,
    };
    heat_modes(cfg.modes_per_axis)
        .iter()
        .map(|&(m, n)| -10.0 * x_factor(m) * y_factor(n))
        .collect()
}

/// `P^κ(λ)` of the `truncation × truncation` modal model, evaluated in
/// `O(truncation²)` without forming the state matrix.
///
/// The diagonal structure gives the open-loop value as a modal sum. For
/// `κ > 0` the closed loop `λ − A + κ B_c B_cᵀ` is inverted with the
/// Sherman–Morrison–Woodbury formula; modes with `λ` on their eigenvalue are
/// regularized by a unit shift that is removed again inside the low-rank
/// correction, so `λ = 0` is admissible whenever `κ > 0`.
///
/// Returns `(P_c^κ(λ), P_d^κ(λ))` as `2×2` and `2×1` matrices.
pub fn heat_transfer_series(
    lambda: C64,
    kappa: f64,
    truncation: usize,
) -> Result<(Array2<C64>, Array2<C64>)> {
    if truncation == 0 {
        return Err(RegError::InvalidSpec("truncation must be positive".into()));
    }
    if !(kappa >= 0.0) {
        return Err(RegError::InvalidSpec(format!(
            "feedback gain must be nonnegative, got {kappa}"
        )));
    }
    let modes = heat_modes(truncation);
    let frob = modes
        .iter()
        .map(|&(m, n)| eigenvalue(m, n).powi(2))
        .sum::<f64>()
        .sqrt();
    let threshold = 1e-10 * (1.0 + frob);

    let mut singular = Vec::new();
    let mut shifted = Vec::with_capacity(modes.len());
    for (i, &(m, n)) in modes.iter().enumerate() {
        let d = lambda - eigenvalue(m, n);
        if d.norm() <= threshold {
            singular.push(i);
            shifted.push(d + 1.0);
        } else {
            shifted.push(d);
        }
    }
    if !singular.is_empty() && kappa == 0.0 {
        return Err(RegError::NearSingularResolvent {
            lambda,
            sigma_min: singular
                .iter()
                .map(|&i| (shifted[i] - 1.0).norm())
                .fold(f64::INFINITY, f64::min),
            threshold,
        });
    }

    // Low-rank factor U = [B_c, e_S] with weights W = diag(κ, κ, −1, …).
    let rank = 2 + singular.len();
    let mut q = Array2::<C64>::zeros((rank, rank));
    let mut r = Array2::<C64>::zeros((rank, 3));
    for (i, &(m, n)) in modes.iter().enumerate() {
        let g = input_row(m, n);
        let inv = shifted[i].inv();
        let mut u = vec![0.0; rank];
        u[0] = g[0];
        u[1] = g[1];
        if let Some(pos) = singular.iter().position(|&s| s == i) {
            u[2 + pos] = 1.0;
        }
        for a in 0..rank {
            if u[a] == 0.0 {
                continue;
            }
            for b in 0..rank {
                q[[a, b]] += inv * (u[a] * u[b]);
            }
            for j in 0..3 {
                r[[a, j]] += inv * (u[a] * g[j]);
            }
        }
    }

    let h = r.slice(ndarray::s![..2, ..]).to_owned();
    let out = if kappa == 0.0 {
        h
    } else {
        let mut k = q.clone();
        for a in 0..rank {
            k[[a, a]] += if a < 2 {
                C64::new(1.0 / kappa, 0.0)
            } else {
                C64::new(-1.0, 0.0)
            };
        }
        let condition = linalg::condition_number(&k)?;
        if !(condition < 1e14) {
            return Err(RegError::ResolventFailure {
                reason: format!(
                    "closed-loop resolvent of the modal series is singular at λ = {lambda}"
                ),
            });
        }
        let correction = q
            .slice(ndarray::s![..2, ..])
            .dot(&linalg::solve_dense(&k, &r)?);
        h - correction
    };
    Ok((
        out.slice(ndarray::s![.., ..2]).to_owned(),
        out.slice(ndarray::s![.., 2..]).to_owned(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn idx(n: usize, m: usize, k: usize) -> usize {
        heat_mode_index(n, m, k).unwrap()
    }

    #[test]
    fn mode_order() {
        let modes = heat_modes(3);
        assert_eq!(modes[..4], [(0, 0), (0, 1), (1, 0), (0, 2)]);
        assert_eq!(modes.len(), 9);
    }

    #[test]
    fn matrices() {
        let cfg = HeatModelConfig::new(4).unwrap();
        let m = build_heat2d(&cfg).unwrap();
        assert_eq!(m.dim_x(), 16);
        assert!((m.a()[[idx(4, 1, 2), idx(4, 1, 2)]] + 5.0 * PI * PI).abs() < 1e-12);
        assert_eq!(m.b_c()[[idx(4, 0, 0), 0]], 0.5);
        assert_eq!(m.c(), &m.b_c().t().to_owned());
        assert_eq!(m.b_d().column(0), m.b_c().column(0));
    }

    #[test]
    fn boundary_integrals_match_quadrature() {
        // Midpoint quadrature of the boundary traces as an independent oracle.
        let q = 20000;
        let s2 = std::f64::consts::SQRT_2;
        for m in 0..6 {
            for n in 0..4 {
                let cm = if m == 0 { 1.0 } else { s2 };
                let cn = if n == 0 { 1.0 } else { s2 };
                let mut g1 = 0.0;
                let mut g2 = 0.0;
                for j in 0..q {
                    let s = (j as f64 + 0.5) / q as f64;
                    let phi_lower = cm * cn * (m as f64 * PI * 0.5 * s).cos();
                    let xi1 = 0.5 + 0.5 * s;
                    let phi_upper = cm * cn * (m as f64 * PI * xi1).cos() * (n as f64 * PI).cos();
                    g1 += phi_lower * 0.5 / q as f64;
                    g2 += phi_upper * 0.5 / q as f64;
                }
                let row = input_row(m, n);
                assert!((row[0] - g1).abs() < 1e-8, "{m},{n}");
                assert!((row[1] - g2).abs() < 1e-8, "{m},{n}");
            }
        }
    }

    #[test]
    fn initial_state_coefficients() {
        let cfg = HeatModelConfig::new(5).unwrap();
        let x0 = heat_initial_state(&cfg);
        let s2 = std::f64::consts::SQRT_2;
        assert!((x0[idx(5, 0, 0)] + 10.0).abs() < 1e-14);
        assert!((x0[idx(5, 1, 0)] - 5.0 * s2).abs() < 1e-14);
        assert!((x0[idx(5, 0, 2)] - 5.0 * s2 / 4.0).abs() < 1e-14);
        assert!((x0[idx(5, 1, 2)] + 1.25).abs() < 1e-14);
        assert_eq!(x0[idx(5, 2, 2)], 0.0);
        assert_eq!(x0.iter().filter(|v| **v != 0.0).count(), 4);
    }

    #[test]
    fn initial_state_matches_quadrature() {
        let cfg = HeatModelConfig::new(3).unwrap();
        let x0 = heat_initial_state(&cfg);
        let q = 400;
        let f = |a: f64, b: f64| {
            -10.0 * (1.0 + (PI * (1.0 - a)).cos()) * (1.0 - (2.0 * PI * b).cos() / 4.0)
        };
        for (i, &(m, n)) in heat_modes(3).iter().enumerate() {
            let mut acc = 0.0;
            for j in 0..q {
                for k in 0..q {
                    let (a, b) = ((j as f64 + 0.5) / q as f64, (k as f64 + 0.5) / q as f64);
                    acc += f(a, b)
                        * cosine_norm(m)
                        * cosine_norm(n)
                        * (m as f64 * PI * a).cos()
                        * (n as f64 * PI * b).cos();
                }
            }
            acc /= (q * q) as f64;
            assert!(
                (acc - x0[i]).abs() < 1e-4,
                "mode {m},{n}: {acc} vs {}",
                x0[i]
            );
        }
    }

    #[test]
    fn series_matches_dense_model() {
        let cfg = HeatModelConfig::new(8).unwrap();
        let model = build_heat2d(&cfg).unwrap();
        for (lambda, kappa) in [
            (C64::new(0.0, PI), 3.0),
            (C64::new(0.0, 0.0), 3.0),
            (C64::new(0.5, -2.0), 0.0),
        ] {
            let dense = model.closed_loop_transfer(kappa, lambda).unwrap();
            let (pc, pd) = heat_transfer_series(lambda, kappa, 8).unwrap();
            assert!(
                linalg::frobenius_c(&(&pc - &dense.p_c)) < 1e-12 * (1.0 + linalg::frobenius_c(&pc))
            );
            assert!(
                linalg::frobenius_c(&(&pd - &dense.p_d)) < 1e-12 * (1.0 + linalg::frobenius_c(&pd))
            );
        }
    }

    #[test]
    fn series_rejects_zero_without_feedback() {
        assert!(matches!(
            heat_transfer_series(C64::new(0.0, 0.0), 0.0, 10),
            Err(RegError::NearSingularResolvent { .. })
        ));
    }

    #[test]
    fn series_real_positive_lambda_is_hermitian_psd() {
        let (pc, _) = heat_transfer_series(C64::new(2.0, 0.0), 0.0, 20).unwrap();
        assert!((pc[[0, 1]] - pc[[1, 0]].conj()).norm() < 1e-14);
        assert!(pc[[0, 0]].re > 0.0 && pc[[1, 1]].re > 0.0);
        let det = pc[[0, 0]] * pc[[1, 1]] - pc[[0, 1]] * pc[[1, 0]];
        assert!(det.re >= -1e-14);
    }
}
