//! Reference and disturbance signals and their exosystem realization.
//!
//! ```text
//! y_ref(t) = a_0 + Σ_k a_k cos(ω_k t) + b_k sin(ω_k t)
//! w_d(t)   = c_0 + Σ_k c_k cos(ω_k t) + d_k sin(ω_k t)
//! ```

use ndarray::{Array1, Array2};

use crate::error::{RegError, Result};
use crate::C64;

const FREQUENCY_TOLERANCE: f64 = 1e-12;

/// One frequency `ω_k > 0` with its four coefficient vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct Harmonic {
    pub omega: f64,
    pub a: Array1<C64>,
    pub b: Array1<C64>,
    pub c: Array1<C64>,
    pub d: Array1<C64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SignalSpec {
    pub a0: Array1<C64>,
    pub c0: Array1<C64>,
    pub harmonics: Vec<Harmonic>,
}

fn is_zero(v: &Array1<C64>) -> bool {
    v.iter().all(|z| z.re == 0.0 && z.im == 0.0)
}

fn is_real(v: &Array1<C64>) -> bool {
    v.iter().all(|z| z.im == 0.0)
}

pub fn real_vector(values: &[f64]) -> Array1<C64> {
    values.iter().map(|&v| C64::new(v, 0.0)).collect()
}

impl SignalSpec {
    pub fn new(a0: Array1<C64>, c0: Array1<C64>, harmonics: Vec<Harmonic>) -> Result<Self> {
        let spec = Self { a0, c0, harmonics };
        spec.validate()?;
        Ok(spec)
    }

    /// All-zero signals with the given output and disturbance dimensions.
    pub fn zero(dim_u: usize, dim_d: usize) -> Self {
        Self {
            a0: Array1::zeros(dim_u),
            c0: Array1::zeros(dim_d),
            harmonics: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (mu, md) = (self.dim_u(), self.dim_d());
        for (k, h) in self.harmonics.iter().enumerate() {
            if !(h.omega > 0.0) || !h.omega.is_finite() {
                return Err(RegError::InvalidSpec(format!(
                    "frequency {k} must be positive and finite, got {}",
                    h.omega
                )));
            }
            for (name, v, dim) in [
                ("a", &h.a, mu),
                ("b", &h.b, mu),
                ("c", &h.c, md),
                ("d", &h.d, md),
            ] {
                if v.len() != dim {
                    return Err(RegError::InvalidSpec(format!(
                        "coefficient {name}_{} has length {}, expected {dim}",
                        k + 1,
                        v.len()
                    )));
                }
            }
            for (j, other) in self.harmonics[..k].iter().enumerate() {
                if (other.omega - h.omega).abs() <= FREQUENCY_TOLERANCE {
                    return Err(RegError::InvalidSpec(format!(
                        "frequencies {} and {} coincide ({})",
                        j + 1,
                        k + 1,
                        h.omega
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn dim_u(&self) -> usize {
        self.a0.len()
    }

    pub fn dim_d(&self) -> usize {
        self.c0.len()
    }

    pub fn frequencies(&self) -> Vec<f64> {
        self.harmonics.iter().map(|h| h.omega).collect()
    }

    /// Whether the constant (ω = 0) component is present in either signal.
    pub fn has_constant_part(&self) -> bool {
        !is_zero(&self.a0) || !is_zero(&self.c0)
    }

    pub fn has_disturbance(&self) -> bool {
        !is_zero(&self.c0)
            || self
                .harmonics
                .iter()
                .any(|h| !is_zero(&h.c) || !is_zero(&h.d))
    }

    pub fn is_real(&self) -> bool {
        is_real(&self.a0)
            && is_real(&self.c0)
            && self
                .harmonics
                .iter()
                .all(|h| is_real(&h.a) && is_real(&h.b) && is_real(&h.c) && is_real(&h.d))
    }

    /// Multiplies every coefficient by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        let f = |v: &Array1<C64>| v.mapv(|z| z * s);
        Self {
            a0: f(&self.a0),
            c0: f(&self.c0),
            harmonics: self
                .harmonics
                .iter()
                .map(|h| Harmonic {
                    omega: h.omega,
                    a: f(&h.a),
                    b: f(&h.b),
                    c: f(&h.c),
                    d: f(&h.d),
                })
                .collect(),
        }
    }

    /// Reference part of `self` with the disturbance part of `other`; the two
    /// specs must share their frequency list.
    pub fn with_disturbance_of(&self, other: &SignalSpec) -> Result<Self> {
        let same = self.harmonics.len() == other.harmonics.len()
            && self
                .harmonics
                .iter()
                .zip(&other.harmonics)
                .all(|(a, b)| (a.omega - b.omega).abs() <= FREQUENCY_TOLERANCE);
        if !same {
            return Err(RegError::InvalidSpec(
                "signal specs have different frequency lists".into(),
            ));
        }
        Self::new(
            self.a0.clone(),
            other.c0.clone(),
            self.harmonics
                .iter()
                .zip(&other.harmonics)
                .map(|(r, d)| Harmonic {
                    omega: r.omega,
                    a: r.a.clone(),
                    b: r.b.clone(),
                    c: d.c.clone(),
                    d: d.d.clone(),
                })
                .collect(),
        )
    }

    pub fn eval_reference(&self, t: f64) -> Array1<C64> {
        let mut y = self.a0.clone();
        for h in &self.harmonics {
            let (s, c) = (h.omega * t).sin_cos();
            y.zip_mut_with(&h.a, |acc, a| *acc += a * c);
            y.zip_mut_with(&h.b, |acc, b| *acc += b * s);
        }
        y
    }

    pub fn eval_disturbance(&self, t: f64) -> Array1<C64> {
        let mut w = self.c0.clone();
        for h in &self.harmonics {
            let (s, c) = (h.omega * t).sin_cos();
            w.zip_mut_with(&h.c, |acc, v| *acc += v * c);
            w.zip_mut_with(&h.d, |acc, v| *acc += v * s);
        }
        w
    }

    pub fn build_exosystem(&self) -> Exosystem {
        Exosystem::from_signals(self)
    }
}

/// `v̇ = A_exo v`, `w_d = E v`, `y_ref = F v`, `v(0) = v0`.
///
/// State layout is `(v_0, v_1¹, v_1², …, v_q¹, v_q²)`; the leading `v_0`
/// entry is present only when the signals have a constant part.
#[derive(Clone, Debug)]
pub struct Exosystem {
    pub a_exo: Array2<f64>,
    pub e: Array2<C64>,
    pub f: Array2<C64>,
    pub v0: Array1<f64>,
    pub frequencies: Vec<f64>,
    pub has_constant_block: bool,
}

impl Exosystem {
    fn from_signals(spec: &SignalSpec) -> Self {
        let q = spec.harmonics.len();
        let has_constant_block = spec.has_constant_part();
        let offset = usize::from(has_constant_block);
        let dim = 2 * q + offset;
        let mut a_exo = Array2::zeros((dim, dim));
        let mut e = Array2::zeros((spec.dim_d(), dim));
        let mut f = Array2::zeros((spec.dim_u(), dim));
        let mut v0 = Array1::zeros(dim);
        if has_constant_block {
            e.column_mut(0).assign(&spec.c0);
            f.column_mut(0).assign(&spec.a0);
            v0[0] = 1.0;
        }
        for (k, h) in spec.harmonics.iter().enumerate() {
            let i = offset + 2 * k;
            a_exo[[i, i + 1]] = h.omega;
            a_exo[[i + 1, i]] = -h.omega;
            e.column_mut(i).assign(&h.c);
            e.column_mut(i + 1).assign(&h.d.mapv(|z| -z));
            f.column_mut(i).assign(&h.a);
            f.column_mut(i + 1).assign(&h.b.mapv(|z| -z));
            v0[i] = 1.0;
        }
        Self {
            a_exo,
            e,
            f,
            v0,
            frequencies: spec.frequencies(),
            has_constant_block,
        }
    }

    pub fn dim(&self) -> usize {
        self.v0.len()
    }

    /// `e^{A_exo t} v0 = (1, cos ω_1 t, −sin ω_1 t, …)`, evaluated blockwise.
    pub fn state(&self, t: f64) -> Array1<f64> {
        let offset = usize::from(self.has_constant_block);
        let mut v = Array1::zeros(self.dim());
        if self.has_constant_block {
            v[0] = self.v0[0];
        }
        for (k, &omega) in self.frequencies.iter().enumerate() {
            let i = offset + 2 * k;
            let (s, c) = (omega * t).sin_cos();
            let (x1, x2) = (self.v0[i], self.v0[i + 1]);
            v[i] = c * x1 + s * x2;
            v[i + 1] = -s * x1 + c * x2;
        }
        v
    }

    /// Eigenpairs `(λ, φ)` of `A_exo`: `φ_0 = e_0` for `λ = 0` and
    /// `φ_k^± = 2^{-1/2}(…, 1, ±i, …)` for `λ = ±iω_k`.
    pub fn eigenbasis(&self) -> Vec<(C64, Array1<C64>)> {
        let offset = usize::from(self.has_constant_block);
        let mut out = Vec::with_capacity(self.dim());
        if self.has_constant_block {
            let mut phi = Array1::zeros(self.dim());
            phi[0] = C64::new(1.0, 0.0);
            out.push((C64::new(0.0, 0.0), phi));
        }
        let h = std::f64::consts::FRAC_1_SQRT_2;
        for (k, &omega) in self.frequencies.iter().enumerate() {
            let i = offset + 2 * k;
            for sign in [1.0, -1.0] {
                let mut phi = Array1::zeros(self.dim());
                phi[i] = C64::new(h, 0.0);
                phi[i + 1] = C64::new(0.0, sign * h);
                out.push((C64::new(0.0, sign * omega), phi));
            }
        }
        out
    }
}
