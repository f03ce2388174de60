//! Property checks runnable outside the test harness (used by `satreg verify`).
//!
//! Every check reports the measured quantity next to its threshold so the
//! output is machine-readable.

use std::f64::consts::PI;
use std::fmt;

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{RegError, Result};
use crate::linalg;
use crate::models::{
    build_heat2d, build_toy, build_wave1d, heat_initial_state, heat_mode_index, heat_paper_signals,
    wave_paper_signals, wave_transfer_exact, HeatModelConfig, WaveModelConfig,
};
use crate::regulator::{
    compute_coefficients, measured_reference_from_disturbance, regulator_residual,
    solve_regulator_equations,
};
use crate::saturation::{SaturationChannel, SaturationSpec};
use crate::signal::{real_vector, Harmonic, SignalSpec};
use crate::simulator::{simulate_closed_loop, simulate_linear, Scheme, SimulationConfig};
use crate::state_space::{spectral_abscissa, StateSpaceModel};
use crate::C64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Saturation,
    Signals,
    StateSpace,
    Models,
    Regulator,
    Simulator,
    All,
}

impl Suite {
    pub const EACH: [Suite; 6] = [
        Suite::Saturation,
        Suite::Signals,
        Suite::StateSpace,
        Suite::Models,
        Suite::Regulator,
        Suite::Simulator,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Saturation => "saturation",
            Suite::Signals => "signals",
            Suite::StateSpace => "state-space",
            Suite::Models => "models",
            Suite::Regulator => "regulator",
            Suite::Simulator => "simulator",
            Suite::All => "all",
        }
    }
}

impl std::str::FromStr for Suite {
    type Err = RegError;
    fn from_str(s: &str) -> Result<Self> {
        Suite::EACH
            .iter()
            .chain(std::iter::once(&Suite::All))
            .find(|suite| suite.name() == s)
            .copied()
            .ok_or_else(|| RegError::InvalidSpec(format!("unknown suite '{s}'")))
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    pub suite: Suite,
    pub name: String,
    pub measured: f64,
    pub threshold: f64,
    pub passed: bool,
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}/{} measured={:.6e} threshold={:.6e}",
            if self.passed { "PASS" } else { "FAIL" },
            self.suite,
            self.name,
            self.measured,
            self.threshold
        )
    }
}

/// Deliberate corruptions used to demonstrate that checks can fail.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct FaultInjection {
    /// Adds 1 to `Π[0, 0]` before the regulator residuals are evaluated.
    pub corrupt_pi: bool,
}

struct Collector {
    suite: Suite,
    out: Vec<CheckResult>,
}

impl Collector {
    /// Passes when `measured ≤ threshold`.
    fn at_most(&mut self, name: &str, measured: f64, threshold: f64) {
        self.push(name, measured, threshold, measured <= threshold);
    }

    /// Passes when `measured < threshold`.
    fn below(&mut self, name: &str, measured: f64, threshold: f64) {
        self.push(name, measured, threshold, measured < threshold);
    }

    fn push(&mut self, name: &str, measured: f64, threshold: f64, passed: bool) {
        self.out.push(CheckResult {
            suite: self.suite,
            name: name.to_string(),
            measured,
            threshold,
            passed,
        });
    }
}

pub fn run_suite(suite: Suite, faults: FaultInjection) -> Result<Vec<CheckResult>> {
    if suite == Suite::All {
        let mut all = Vec::new();
        for s in Suite::EACH {
            all.extend(run_suite(s, faults)?);
        }
        return Ok(all);
    }
    let mut c = Collector {
        suite,
        out: Vec::new(),
    };
    match suite {
        Suite::Saturation => saturation_checks(&mut c)?,
        Suite::Signals => signal_checks(&mut c),
        Suite::StateSpace => state_space_checks(&mut c)?,
        Suite::Models => model_checks(&mut c)?,
        Suite::Regulator => regulator_checks(&mut c, faults)?,
        Suite::Simulator => simulator_checks(&mut c)?,
        Suite::All => unreachable!(),
    }
    Ok(c.out)
}

fn random_complex(rng: &mut ChaCha8Rng, dim: usize, scale: f64) -> Vec<C64> {
    (0..dim)
        .map(|_| {
            C64::new(
                rng.random_range(-scale..scale),
                rng.random_range(-scale..scale),
            )
        })
        .collect()
}

fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x * y.conj()).sum()
}

fn sub(a: &[C64], b: &[C64]) -> Vec<C64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn vnorm(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Largest violation of `Re⟨φ(v₂)−φ(v₁), v₂−v₁⟩ ≥ ‖φ(v₂)−φ(v₁)‖²` over
/// random pairs.
pub fn firm_nonexpansiveness_violation(
    sat: &SaturationSpec,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = 3.0
        * sat
            .channels()
            .iter()
            .map(|c| c.radius + c.center_norm())
            .fold(0.0, f64::max);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..samples {
        let v1 = random_complex(&mut rng, sat.dim(), scale);
        let v2 = random_complex(&mut rng, sat.dim(), scale);
        let p1 = sat.saturate(&v1)?;
        let p2 = sat.saturate(&v2)?;
        let dp = sub(&p2, &p1);
        let lhs = inner(&dp, &sub(&v2, &v1)).re;
        worst = worst.max(vnorm(&dp).powi(2) - lhs);
    }
    Ok(worst)
}

/// Largest violation of the dissipation inequality
/// `Re⟨e, φ(u−κe) − u⟩ ≤ −κδ‖e‖²/max{δ₀, ‖u−κe‖}` for a centered channel
/// of radius `δ₀`, sampled with `0 < δ < δ₀` and `‖u‖ ≤ δ₀ − δ`.
pub fn dissipation_violation(dim: usize, radius: f64, samples: usize, seed: u64) -> Result<f64> {
    let sat = SaturationSpec::new(vec![SaturationChannel {
        center: vec![C64::new(0.0, 0.0); dim],
        radius,
    }])?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..samples {
        let delta = rng.random_range(1e-3..radius);
        let mut u = random_complex(&mut rng, dim, radius);
        let nu = vnorm(&u);
        let target = rng.random_range(0.0..=1.0) * (radius - delta);
        if nu > 0.0 {
            u.iter_mut().for_each(|z| *z *= target / nu);
        }
        let scale = rng.random_range(0.01..5.0);
        let e = random_complex(&mut rng, dim, scale);
        let kappa = rng.random_range(0.01..10.0);
        let arg: Vec<C64> = u.iter().zip(&e).map(|(a, b)| a - b * kappa).collect();
        let phi = sat.saturate(&arg)?;
        let lhs = inner(&e, &sub(&phi, &u)).re;
        let rhs = -kappa * delta * vnorm(&e).powi(2) / radius.max(vnorm(&arg));
        worst = worst.max(lhs - rhs);
    }
    Ok(worst)
}

fn saturation_checks(c: &mut Collector) -> Result<()> {
    let unit = SaturationSpec::scalar(&[0.0], &[1.0])?;
    let re = |v: Vec<C64>| v[0].re;
    c.at_most(
        "linear-region",
        (re(unit.saturate(&[C64::new(0.5, 0.0)])?) - 0.5).abs(),
        0.0,
    );
    c.at_most(
        "radial-clamp",
        (re(unit.saturate(&[C64::new(-3.0, 0.0)])?) + 1.0).abs(),
        0.0,
    );
    let shifted = SaturationSpec::scalar(&[1.0], &[2.0])?;
    c.at_most(
        "shifted-center",
        (re(shifted.saturate(&[C64::new(5.0, 0.0)])?) - 3.0).abs(),
        0.0,
    );

    let geometries = [
        ("scalar", SaturationSpec::scalar(&[0.3, -1.0], &[1.0, 0.5])?),
        (
            "vector",
            SaturationSpec::new(vec![
                SaturationChannel {
                    center: vec![C64::new(0.2, -0.1), C64::new(0.0, 0.4)],
                    radius: 1.5,
                },
                SaturationChannel {
                    center: vec![C64::new(0.0, 0.0); 3],
                    radius: 0.7,
                },
            ])?,
        ),
    ];
    for (k, (name, sat)) in geometries.iter().enumerate() {
        let v = firm_nonexpansiveness_violation(sat, 10_000, 11 + k as u64)?;
        c.at_most(&format!("firm-nonexpansive-{name}"), v, 1e-12);
    }
    for (dim, seed) in [(1usize, 21u64), (3, 22)] {
        let v = dissipation_violation(dim, 1.3, 10_000, seed)?;
        c.at_most(&format!("dissipation-dim{dim}"), v, 1e-12);
    }

    let sat = &geometries[1].1;
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut idem: f64 = 0.0;
    let mut lipschitz = f64::NEG_INFINITY;
    for _ in 0..10_000 {
        let a = random_complex(&mut rng, sat.dim(), 4.0);
        let b = random_complex(&mut rng, sat.dim(), 4.0);
        let pa = sat.saturate(&a)?;
        idem = idem.max(vnorm(&sub(&sat.saturate(&pa)?, &pa)));
        lipschitz = lipschitz.max(vnorm(&sub(&pa, &sat.saturate(&b)?)) - vnorm(&sub(&a, &b)));
    }
    c.at_most("idempotent", idem, 1e-12);
    c.at_most("one-lipschitz", lipschitz, 1e-12);
    Ok(())
}

fn signal_checks(c: &mut Collector) {
    let heat = heat_paper_signals();
    let y0 = heat.eval_reference(0.0);
    c.at_most(
        "heat-reference-t0",
        (y0[0] - 1.0).norm().max((y0[1] - 3.5).norm()),
        1e-15,
    );
    c.at_most(
        "heat-disturbance-t0",
        (heat.eval_disturbance(0.0)[0] - 5.0).norm(),
        1e-15,
    );
    c.at_most(
        "wave-disturbance-t0.1",
        wave_paper_signals().eval_disturbance(0.1)[0].norm(),
        1e-15,
    );
    for (name, spec) in [("heat", heat), ("wave", wave_paper_signals())] {
        let exo = spec.build_exosystem();
        let mut worst: f64 = 0.0;
        let mut drift: f64 = 0.0;
        let n0 = linalg::norm(&exo.v0);
        for j in 0..500 {
            let t = 0.013 * j as f64;
            let v = exo.state(t);
            let vc = v.mapv(|x| C64::new(x, 0.0));
            worst = worst
                .max(linalg::norm_c(&(exo.f.dot(&vc) - spec.eval_reference(t))))
                .max(linalg::norm_c(&(exo.e.dot(&vc) - spec.eval_disturbance(t))));
            drift = drift.max((linalg::norm(&v) - n0).abs());
        }
        c.at_most(&format!("exosystem-equivalence-{name}"), worst, 1e-12);
        c.at_most(&format!("exosystem-norm-{name}"), drift, 1e-12);
        let skew = linalg::frobenius(&(&exo.a_exo + &exo.a_exo.t()));
        c.at_most(&format!("exosystem-skew-{name}"), skew, 0.0);
    }
}

fn random_model(rng: &mut ChaCha8Rng, n: usize, mu: usize) -> Result<StateSpaceModel> {
    let mut r = |rows: usize, cols: usize| {
        Array2::from_shape_fn((rows, cols), |_| rng.random_range(-1.0..1.0))
    };
    let mut a = r(n, n);
    for i in 0..n {
        a[[i, i]] -= 2.0;
    }
    let b_c = r(n, mu);
    let b_d = r(n, 1);
    let c = r(mu, n);
    StateSpaceModel::new(a, b_c, b_d, c, None)
}

fn rel(diff: f64, scale: f64) -> f64 {
    diff / scale.max(1e-300)
}

fn state_space_checks(c: &mut Collector) -> Result<()> {
    let toy = build_toy(-1.0)?;
    let p0 = toy.transfer(C64::new(0.0, 0.0))?.p_c[[0, 0]];
    c.at_most("toy-pc0", (p0 - 1.0).norm(), 1e-15);
    let pi = toy.transfer(C64::new(0.0, 1.0))?.p_c[[0, 0]];
    c.at_most("toy-pci", (pi - C64::new(0.5, -0.5)).norm(), 1e-15);

    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let mut resolvent: f64 = 0.0;
    let mut closed: f64 = 0.0;
    let mut conjugate: f64 = 0.0;
    for _ in 0..20 {
        let n = rng.random_range(2..12);
        let model = random_model(&mut rng, n, 2)?;
        let l1 = C64::new(rng.random_range(-0.5..1.0), rng.random_range(-5.0..5.0));
        let l2 = C64::new(rng.random_range(-0.5..1.0), rng.random_range(-5.0..5.0));
        let rhs: Array2<C64> =
            Array2::from_shape_fn((n, 1), |_| C64::new(rng.random_range(-1.0..1.0), 0.0));
        let (x1, _) = linalg::shifted_solve(model.a(), l1, &rhs)?;
        let (x2, _) = linalg::shifted_solve(model.a(), l2, &rhs)?;
        let (x12, _) = linalg::shifted_solve(model.a(), l1, &x2)?;
        let lhs = &x1 - &x2;
        let r = x12.mapv(|z| z * (l2 - l1));
        resolvent = resolvent.max(rel(
            linalg::frobenius_c(&(&lhs - &r)),
            linalg::frobenius_c(&lhs),
        ));

        let kappa = rng.random_range(0.1..3.0);
        let open = model.transfer(l1)?;
        let cl = model.closed_loop_transfer(kappa, l1)?;
        let mut loop_m = open.p_c.mapv(|z| z * kappa);
        for i in 0..2 {
            loop_m[[i, i]] += 1.0;
        }
        closed = closed
            .max(rel(
                linalg::frobenius_c(&(loop_m.dot(&cl.p_c) - &open.p_c)),
                linalg::frobenius_c(&open.p_c),
            ))
            .max(rel(
                linalg::frobenius_c(&(loop_m.dot(&cl.p_d) - &open.p_d)),
                linalg::frobenius_c(&open.p_d),
            ));
        let conj = model.transfer(l1.conj())?;
        conjugate = conjugate.max(
            (&conj.p_c - &open.p_c.mapv(|z| z.conj()))
                .iter()
                .chain((&conj.p_d - &open.p_d.mapv(|z| z.conj())).iter())
                .map(|z| z.norm())
                .fold(0.0, f64::max),
        );
    }
    c.at_most("resolvent-identity", resolvent, 1e-8);
    c.at_most("closed-loop-identity", closed, 1e-8);
    c.at_most("conjugate-symmetry", conjugate, 1e-12);
    c.at_most(
        "toy-passive",
        toy.check_passivity()?.worst_eigenvalue(),
        1e-10,
    );
    Ok(())
}

fn model_checks(c: &mut Collector) -> Result<()> {
    let kappa = 0.75;
    let wave40 = build_wave1d(&WaveModelConfig::new(40))?;
    for k in [1.0, 3.0, 5.0] {
        let omega = k * PI;
        let (exact, _) = wave_transfer_exact(omega, kappa)?;
        let approx = wave40
            .closed_loop_transfer(kappa, C64::new(0.0, omega))?
            .p_c[[0, 0]];
        c.at_most(
            &format!("wave-oracle-{k}pi"),
            (approx - exact).norm() / exact.norm(),
            0.05,
        );
    }
    let resonant = matches!(
        wave40.transfer(C64::new(0.0, 5.0 * PI)),
        Err(RegError::NearSingularResolvent { .. })
    );
    c.at_most(
        "wave-open-loop-resonance-gated",
        if resonant { 0.0 } else { 1.0 },
        0.0,
    );

    let heat = build_heat2d(&HeatModelConfig::new(31)?)?;
    let wave = build_wave1d(&WaveModelConfig::new(30))?;
    c.at_most(
        "heat-passive",
        heat.check_passivity()?.worst_eigenvalue(),
        1e-10,
    );
    c.at_most(
        "wave-passive",
        wave.check_passivity()?.worst_eigenvalue(),
        1e-10,
    );
    c.below(
        "heat-closed-loop-abscissa",
        spectral_abscissa(&heat.closed_loop_generator(3.0))?,
        0.0,
    );
    c.below(
        "wave-closed-loop-abscissa",
        spectral_abscissa(&wave.closed_loop_generator(kappa))?,
        0.0,
    );

    let cfg = HeatModelConfig::new(5)?;
    let x0 = heat_initial_state(&cfg);
    let idx = |m, n| heat_mode_index(5, m, n).expect("mode");
    let defect = (x0[idx(0, 0)] + 10.0)
        .abs()
        .max((x0[idx(1, 0)] - 5.0 * std::f64::consts::SQRT_2).abs())
        .max(x0[idx(2, 2)].abs());
    c.at_most("heat-initial-state", defect, 1e-14);
    Ok(())
}

fn toy_signals() -> SignalSpec {
    SignalSpec::new(
        real_vector(&[0.5]),
        real_vector(&[1.0]),
        vec![
            Harmonic {
                omega: 1.0,
                a: real_vector(&[0.0]),
                b: real_vector(&[1.0]),
                c: real_vector(&[0.2]),
                d: real_vector(&[0.0]),
            },
            Harmonic {
                omega: 2.5,
                a: real_vector(&[0.3]),
                b: real_vector(&[0.0]),
                c: real_vector(&[0.0]),
                d: real_vector(&[-0.4]),
            },
        ],
    )
    .expect("valid toy signals")
}

/// `(model, κ, signals)` used by the regulator consistency checks.
pub fn regulator_cases() -> Result<Vec<(&'static str, StateSpaceModel, f64, SignalSpec)>> {
    Ok(vec![
        ("toy", build_toy(-1.0)?, 1.0, toy_signals()),
        (
            "heat15",
            build_heat2d(&HeatModelConfig::new(15)?)?,
            3.0,
            heat_paper_signals(),
        ),
        (
            "wave20",
            build_wave1d(&WaveModelConfig::new(20))?,
            0.75,
            wave_paper_signals(),
        ),
    ])
}

/// `max_j ‖Γv(t_j) − u_reg(t_j)‖` over `samples` points of `[0, 2π/min ω]`.
pub fn lemma_gap(
    model: &StateSpaceModel,
    kappa: f64,
    spec: &SignalSpec,
    samples: usize,
) -> Result<f64> {
    let exo = spec.build_exosystem();
    let coeffs = compute_coefficients(model, kappa, spec)?;
    let sol = solve_regulator_equations(model, kappa, &exo)?;
    let min_omega = spec.frequencies().into_iter().fold(f64::INFINITY, f64::min);
    let horizon = if min_omega.is_finite() {
        2.0 * PI / min_omega
    } else {
        1.0
    };
    Ok((0..samples)
        .map(|j| {
            let t = horizon * j as f64 / (samples - 1).max(1) as f64;
            linalg::norm_c(&(sol.gamma_v(&exo, t) - coeffs.eval_ureg_complex(t)))
        })
        .fold(0.0, f64::max))
}

/// `sup_j ‖u_reg(t_j) + κ y_ref(t_j)‖` with the reference measured from the
/// disturbance.
pub fn measurement_identity_gap(
    model: &StateSpaceModel,
    kappa: f64,
    disturbance: &SignalSpec,
    samples: usize,
) -> Result<f64> {
    let measured = measured_reference_from_disturbance(model, kappa, disturbance)?;
    let combined = measured.with_disturbance_of(disturbance)?;
    let coeffs = compute_coefficients(model, kappa, &combined)?;
    let min_omega = combined
        .frequencies()
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    let horizon = if min_omega.is_finite() {
        2.0 * PI / min_omega
    } else {
        1.0
    };
    Ok((0..samples)
        .map(|j| {
            let t = horizon * j as f64 / samples as f64;
            let s = coeffs.eval_ureg_complex(t) + combined.eval_reference(t).mapv(|z| z * kappa);
            linalg::norm_c(&s)
        })
        .fold(0.0, f64::max))
}

fn regulator_checks(c: &mut Collector, faults: FaultInjection) -> Result<()> {
    for (name, model, kappa, spec) in regulator_cases()? {
        c.at_most(
            &format!("lemma-gamma-v-{name}"),
            lemma_gap(&model, kappa, &spec, 100)?,
            1e-8,
        );
        let exo = spec.build_exosystem();
        let mut sol = solve_regulator_equations(&model, kappa, &exo)?;
        if faults.corrupt_pi && !sol.pi.is_empty() {
            sol.pi[[0, 0]] += 1.0;
        }
        let (r1, r2) = regulator_residual(&model, &exo, &sol)?;
        let bound = 1e-8 * (1.0 + linalg::frobenius_c(&sol.pi));
        c.at_most(&format!("residual-dynamic-{name}"), r1, bound);
        c.at_most(&format!("residual-output-{name}"), r2, bound);
        let coeffs = compute_coefficients(&model, kappa, &spec)?;
        c.at_most(
            &format!("realness-{name}"),
            coeffs.max_imaginary_residue(1000),
            1e-10,
        );
    }
    let toy = build_toy(-1.0)?;
    let toy_dist = zero_reference(&toy_signals());
    c.at_most(
        "measurement-identity-toy",
        measurement_identity_gap(&toy, 1.0, &toy_dist, 1000)?,
        1e-9,
    );
    let heat = build_heat2d(&HeatModelConfig::new(15)?)?;
    let heat_dist = zero_reference(&heat_paper_signals());
    c.at_most(
        "measurement-identity-heat15",
        measurement_identity_gap(&heat, 3.0, &heat_dist, 1000)?,
        1e-9,
    );
    Ok(())
}

/// Copy of `spec` with the reference part set to zero.
pub fn zero_reference(spec: &SignalSpec) -> SignalSpec {
    SignalSpec {
        a0: Array1::zeros(spec.dim_u()),
        c0: spec.c0.clone(),
        harmonics: spec
            .harmonics
            .iter()
            .map(|h| Harmonic {
                a: Array1::zeros(spec.dim_u()),
                b: Array1::zeros(spec.dim_u()),
                ..h.clone()
            })
            .collect(),
    }
}

fn simulator_checks(c: &mut Collector) -> Result<()> {
    let toy = build_toy(-1.0)?;
    let zero = SignalSpec::zero(1, 1);
    let sat = SaturationSpec::scalar(&[0.0], &[1.0])?;
    let k0 = compute_coefficients(&toy, 1.0, &zero)?;
    let cfg = SimulationConfig::new(2.0, 1e-3, 1.0);
    let traj = simulate_closed_loop(&toy, &sat, &k0, &zero, &Array1::zeros(1), &cfg)?;
    c.at_most(
        "zero-equilibrium",
        traj.states.iter().map(|v| v.abs()).fold(0.0, f64::max),
        0.0,
    );

    // Regulated steady state from x₀ = Π v₀ in the linear regime.
    let spec = toy_signals();
    let kappa = 1.0;
    let coeffs = compute_coefficients(&toy, kappa, &spec)?;
    let exo = spec.build_exosystem();
    let sol = solve_regulator_equations(&toy, kappa, &exo)?;
    let wide = SaturationSpec::scalar(&[0.0], &[10.0])?;
    // Second-order stepping: the first-order scheme alone leaves an O(dt) error.
    let cfg = SimulationConfig::new(10.0, 1e-3, kappa).with_scheme(Scheme::ExponentialMidpoint);
    let traj = simulate_closed_loop(&toy, &wide, &coeffs, &spec, &sol.initial_state(&exo), &cfg)?;
    let sup_e = traj.errors.iter().map(|v| v.abs()).fold(0.0, f64::max);
    c.at_most("steady-state-toy", sup_e, 1e-6);

    let lin = simulate_linear(&toy, &coeffs, &spec, &sol.initial_state(&exo), &cfg)?;
    let inactive = traj.saturation_active.iter().all(|a| !a);
    let diff = (&traj.states - &lin.states)
        .iter()
        .map(|v| v.abs())
        .fold(0.0, f64::max);
    c.at_most(
        "saturation-consistency",
        if inactive { diff } else { f64::INFINITY },
        1e-10,
    );
    Ok(())
}
