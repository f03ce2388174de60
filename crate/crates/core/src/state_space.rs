//! Finite-dimensional realization `ẋ = Ax + B_c u + B_d w`, `y = Cx` of a
//! discretized system node, its transfer functions and passivity test.
//!
//! Feedthrough is fixed to zero: there is no `D` field, and the matrix-file
//! reader rejects a nonzero `D` block.

use ndarray::{concatenate, s, Array1, Array2, Axis};

use crate::error::{RegError, Result};
use crate::linalg;
use crate::C64;

/// Relative agreement required between the two closed-loop routes.
pub const ROUTE_AGREEMENT: f64 = 1e-8;
/// Condition-number gate for `I + κ P_c(λ)`.
pub const FEEDBACK_CONDITION_LIMIT: f64 = 1e12;
/// Passivity tolerance on the largest eigenvalue of the KYP block.
pub const PASSIVITY_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct StateSpaceModel {
    a: Array2<f64>,
    b_c: Array2<f64>,
    b_d: Array2<f64>,
    c: Array2<f64>,
    gram: Option<Array2<f64>>,
    pub labels: Vec<String>,
}

/// Transfer-function value `P^κ(λ) = [P_c^κ(λ), P_d^κ(λ)]`.
#[derive(Clone, Debug)]
pub struct TransferValue {
    pub lambda: C64,
    pub p_c: Array2<C64>,
    pub p_d: Array2<C64>,
    pub kappa: f64,
    /// Smallest singular value of `λ - A^κ` (estimated for large models).
    pub sigma_min: f64,
    pub threshold: f64,
}

impl TransferValue {
    pub fn resolvent_valid(&self) -> bool {
        self.sigma_min > self.threshold
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum PassivityReport {
    Passive { worst_eigenvalue: f64 },
    Violation { worst_eigenvalue: f64 },
}

impl PassivityReport {
    pub fn is_passive(&self) -> bool {
        matches!(self, PassivityReport::Passive { .. })
    }

    pub fn worst_eigenvalue(&self) -> f64 {
        match self {
            PassivityReport::Passive { worst_eigenvalue }
            | PassivityReport::Violation { worst_eigenvalue } => *worst_eigenvalue,
        }
    }
}

fn check(context: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(RegError::DimensionMismatch {
            context,
            expected,
            got,
        });
    }
    Ok(())
}

impl StateSpaceModel {
    pub fn new(
        a: Array2<f64>,
        b_c: Array2<f64>,
        b_d: Array2<f64>,
        c: Array2<f64>,
        gram: Option<Array2<f64>>,
    ) -> Result<Self> {
        let n = a.nrows();
        check("A columns", n, a.ncols())?;
        check("B_c rows", n, b_c.nrows())?;
        check("B_d rows", n, b_d.nrows())?;
        check("C columns", n, c.ncols())?;
        check("C rows (dim U)", b_c.ncols(), c.nrows())?;
        if let Some(m) = &gram {
            check("Gram rows", n, m.nrows())?;
            check("Gram columns", n, m.ncols())?;
            if !linalg::is_positive_definite(m) {
                return Err(RegError::GramNotPositiveDefinite);
            }
        }
        let all_finite = [&a, &b_c, &b_d, &c]
            .iter()
            .all(|m| m.iter().all(|v| v.is_finite()));
        if !all_finite {
            return Err(RegError::InvalidSpec(
                "model matrices contain non-finite entries".into(),
            ));
        }
        let labels = (0..b_c.ncols()).map(|k| format!("u{}", k + 1)).collect();
        Ok(Self {
            a,
            b_c,
            b_d,
            c,
            gram,
            labels,
        })
    }

    /// Like [`new`](Self::new) but with an explicit feedthrough block, which
    /// must be identically zero.
    pub fn with_feedthrough(
        a: Array2<f64>,
        b_c: Array2<f64>,
        b_d: Array2<f64>,
        c: Array2<f64>,
        d: &Array2<f64>,
        gram: Option<Array2<f64>>,
    ) -> Result<Self> {
        if d.iter().any(|&v| v != 0.0) {
            return Err(RegError::FeedthroughUnsupported);
        }
        let model = Self::new(a, b_c, b_d, c, gram)?;
        check("D rows", model.dim_u(), d.nrows())?;
        check("D columns", model.dim_u() + model.dim_d(), d.ncols())?;
        Ok(model)
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Self {
        self.labels = labels;
        self
    }

    pub fn a(&self) -> &Array2<f64> {
        &self.a
    }
    pub fn b_c(&self) -> &Array2<f64> {
        &self.b_c
    }
    pub fn b_d(&self) -> &Array2<f64> {
        &self.b_d
    }
    pub fn c(&self) -> &Array2<f64> {
        &self.c
    }
    pub fn gram(&self) -> Option<&Array2<f64>> {
        self.gram.as_ref()
    }

    pub fn dim_x(&self) -> usize {
        self.a.nrows()
    }
    pub fn dim_u(&self) -> usize {
        self.b_c.ncols()
    }
    pub fn dim_d(&self) -> usize {
        self.b_d.ncols()
    }

    /// Energy norm `‖x‖_M = sqrt(xᵀ M x)` (Euclidean without a Gram matrix).
    pub fn state_norm(&self, x: &Array1<f64>) -> f64 {
        match &self.gram {
            None => linalg::norm(x),
            Some(m) => x.dot(&m.dot(x)).max(0.0).sqrt(),
        }
    }

    fn input_matrix(&self) -> Array2<C64> {
        linalg::to_complex(&concatenate![Axis(1), self.b_c, self.b_d])
    }

    fn split(
        &self,
        lambda: C64,
        kappa: f64,
        p: Array2<C64>,
        sigma_min: f64,
        threshold: f64,
    ) -> TransferValue {
        let mu = self.dim_u();
        TransferValue {
            lambda,
            p_c: p.slice(s![.., ..mu]).to_owned(),
            p_d: p.slice(s![.., mu..]).to_owned(),
            kappa,
            sigma_min,
            threshold,
        }
    }

    fn transfer_of(&self, a: &Array2<f64>, lambda: C64, kappa: f64) -> Result<TransferValue> {
        let (x, sigma_min) = linalg::shifted_solve(a, lambda, &self.input_matrix())?;
        let p = linalg::to_complex(&self.c).dot(&x);
        Ok(self.split(lambda, kappa, p, sigma_min, linalg::resolvent_threshold(a)))
    }

    /// Open-loop `P(λ) = C (λ - A)^{-1} [B_c, B_d]`.
    pub fn transfer(&self, lambda: C64) -> Result<TransferValue> {
        self.transfer_of(&self.a, lambda, 0.0)
    }

    /// `A^κ = A - κ B_c C`.
    pub fn closed_loop_generator(&self, kappa: f64) -> Array2<f64> {
        if kappa == 0.0 {
            return self.a.clone();
        }
        // Fixed summation order keeps A^κ exactly symmetric when A is and C = B_cᵀ.
        let mu = self.dim_u();
        Array2::from_shape_fn(self.a.raw_dim(), |(i, j)| {
            let coupling: f64 = (0..mu).map(|k| self.b_c[[i, k]] * self.c[[k, j]]).sum();
            self.a[[i, j]] - kappa * coupling
        })
    }

    /// `P^κ(λ) = C (λ - A^κ)^{-1} [B_c, B_d]`, computed directly from `A^κ`.
    pub fn closed_loop_transfer(&self, kappa: f64, lambda: C64) -> Result<TransferValue> {
        if !(kappa >= 0.0) {
            return Err(RegError::InvalidSpec(format!(
                "feedback gain must be nonnegative, got {kappa}"
            )));
        }
        self.transfer_of(&self.closed_loop_generator(kappa), lambda, kappa)
    }

    /// `X = (λ − A^κ)^{-1} [B_c, B_d]` together with `P^κ(λ) = C X`.
    pub fn closed_loop_state_response(
        &self,
        kappa: f64,
        lambda: C64,
    ) -> Result<(Array2<C64>, TransferValue)> {
        if !(kappa >= 0.0) {
            return Err(RegError::InvalidSpec(format!(
                "feedback gain must be nonnegative, got {kappa}"
            )));
        }
        let a = self.closed_loop_generator(kappa);
        let (x, sigma_min) = linalg::shifted_solve(&a, lambda, &self.input_matrix())?;
        let p = linalg::to_complex(&self.c).dot(&x);
        let value = self.split(lambda, kappa, p, sigma_min, linalg::resolvent_threshold(&a));
        Ok((x, value))
    }

    /// `P^κ(λ) = (I + κ P_c(λ))^{-1} [P_c(λ), P_d(λ)]` from the open-loop value.
    ///
    /// Requires `λ ∈ ρ(A)`; used to cross-check
    /// [`closed_loop_transfer`](Self::closed_loop_transfer).
    pub fn closed_loop_transfer_via_feedback(
        &self,
        kappa: f64,
        lambda: C64,
    ) -> Result<TransferValue> {
        let open = self.transfer(lambda)?;
        let mu = self.dim_u();
        let mut loop_matrix = open.p_c.mapv(|z| z * kappa);
        for i in 0..mu {
            loop_matrix[[i, i]] += C64::new(1.0, 0.0);
        }
        let condition = linalg::condition_number(&loop_matrix)?;
        if !(condition < FEEDBACK_CONDITION_LIMIT) {
            return Err(RegError::FeedbackLoopSingular { lambda, condition });
        }
        let p = concatenate![Axis(1), open.p_c, open.p_d];
        let closed = linalg::solve_dense(&loop_matrix, &p)?;
        Ok(self.split(lambda, kappa, closed, open.sigma_min, open.threshold))
    }

    /// Finite-dimensional impedance-passivity test.
    ///
    /// `Re⟨Ax + B_c u, x⟩_M ≤ Re⟨u, Cx⟩` for all `(x, u)` is equivalent to
    /// `[[MA + AᵀM, MB_c − Cᵀ], [B_cᵀM − C, 0]] ⪯ 0`.
    pub fn check_passivity(&self) -> Result<PassivityReport> {
        let n = self.dim_x();
        let mu = self.dim_u();
        let m = self.gram.clone().unwrap_or_else(|| Array2::eye(n));
        let ma = m.dot(&self.a);
        let off = m.dot(&self.b_c) - self.c.t();
        let mut block = Array2::<f64>::zeros((n + mu, n + mu));
        block.slice_mut(s![..n, ..n]).assign(&(&ma + &ma.t()));
        block.slice_mut(s![..n, n..]).assign(&off);
        block.slice_mut(s![n.., ..n]).assign(&off.t());
        let eig = linalg::symmetric_eigenvalues(&block)?;
        let worst = eig.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        Ok(if worst <= PASSIVITY_TOLERANCE {
            PassivityReport::Passive {
                worst_eigenvalue: worst,
            }
        } else {
            PassivityReport::Violation {
                worst_eigenvalue: worst,
            }
        })
    }
}

/// Largest real part of the spectrum.
pub fn spectral_abscissa(a: &Array2<f64>) -> Result<f64> {
    if !a.is_square() {
        return Err(RegError::DimensionMismatch {
            context: "spectral_abscissa: square matrix",
            expected: a.nrows(),
            got: a.ncols(),
        });
    }
    if a.is_empty() {
        return Ok(f64::NEG_INFINITY);
    }
    if linalg::is_symmetric(a) {
        let eig = linalg::symmetric_eigenvalues(a)?;
        return Ok(eig.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
    }
    let eig = linalg::eigenvalues(a)?;
    Ok(eig.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max))
}
