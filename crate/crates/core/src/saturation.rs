//! Channel-wise radial saturation `φ = (φ_1, …, φ_p)`.
//!
//! Each channel `k` clamps its block `u_k ∈ ℂ^{dim_k}` to the closed ball
//! `B(r_k, δ_k)` in the Euclidean norm:
//!
//! ```text
//! φ_k(u) = r_k + δ_k (u - r_k) / max{δ_k, ‖u - r_k‖}
//! ```
//!
//! The `max` form is evaluated literally, so `u = r_k` needs no special case.
//! Inside the ball the input is returned unchanged (bitwise).

use crate::error::{RegError, Result};
use crate::C64;

#[derive(Clone, Debug, PartialEq)]
pub struct SaturationChannel {
    pub center: Vec<C64>,
    pub radius: f64,
}

impl SaturationChannel {
    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn center_norm(&self) -> f64 {
        self.center.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SaturationSpec {
    channels: Vec<SaturationChannel>,
}

impl SaturationSpec {
    pub fn new(channels: Vec<SaturationChannel>) -> Result<Self> {
        for (k, ch) in channels.iter().enumerate() {
            if !(ch.radius > 0.0) || !ch.radius.is_finite() {
                return Err(RegError::InvalidSpec(format!(
                    "saturation channel {k}: radius must be positive, got {}",
                    ch.radius
                )));
            }
            if ch.center.is_empty() {
                return Err(RegError::InvalidSpec(format!(
                    "saturation channel {k}: dimension must be positive"
                )));
            }
        }
        Ok(Self { channels })
    }

    /// Scalar real channels with the given centers and radii.
    pub fn scalar(centers: &[f64], radii: &[f64]) -> Result<Self> {
        if centers.len() != radii.len() {
            return Err(RegError::DimensionMismatch {
                context: "saturation centers vs radii",
                expected: radii.len(),
                got: centers.len(),
            });
        }
        Self::new(
            centers
                .iter()
                .zip(radii)
                .map(|(&r, &d)| SaturationChannel {
                    center: vec![C64::new(r, 0.0)],
                    radius: d,
                })
                .collect(),
        )
    }

    pub fn channels(&self) -> &[SaturationChannel] {
        &self.channels
    }

    /// Total dimension of `U`.
    pub fn dim(&self) -> usize {
        self.channels.iter().map(SaturationChannel::dim).sum()
    }

    pub fn min_radius(&self) -> f64 {
        self.channels
            .iter()
            .map(|c| c.radius)
            .fold(f64::INFINITY, f64::min)
    }

    /// `min_k (δ_k - ‖r_k‖)`; positive iff every center lies strictly inside its ball.
    pub fn center_margin(&self) -> f64 {
        self.channels
            .iter()
            .map(|c| c.radius - c.center_norm())
            .fold(f64::INFINITY, f64::min)
    }

    pub fn centers_inside(&self) -> bool {
        self.center_margin() > 0.0
    }

    pub fn is_real(&self) -> bool {
        self.channels
            .iter()
            .all(|c| c.center.iter().all(|z| z.im == 0.0))
    }

    fn check_dim(&self, got: usize) -> Result<()> {
        if got != self.dim() {
            return Err(RegError::DimensionMismatch {
                context: "saturate: input dimension",
                expected: self.dim(),
                got,
            });
        }
        Ok(())
    }

    pub fn saturate(&self, u: &[C64]) -> Result<Vec<C64>> {
        self.check_dim(u.len())?;
        let mut out = u.to_vec();
        let mut offset = 0;
        for ch in &self.channels {
            let block = &mut out[offset..offset + ch.dim()];
            let dist = block
                .iter()
                .zip(&ch.center)
                .map(|(x, r)| (x - r).norm_sqr())
                .sum::<f64>()
                .sqrt();
            if dist > ch.radius {
                let factor = ch.radius / dist.max(ch.radius);
                for (x, r) in block.iter_mut().zip(&ch.center) {
                    *x = r + (*x - r) * factor;
                }
            }
            offset += ch.dim();
        }
        Ok(out)
    }

    /// Real fast path; bit-identical to [`saturate`](Self::saturate) on real data.
    ///
    /// Centers are taken by their real parts; callers with complex centers
    /// must use the complex path.
    pub fn saturate_real(&self, u: &[f64]) -> Result<Vec<f64>> {
        let mut out = u.to_vec();
        self.saturate_real_into(&mut out)?;
        Ok(out)
    }

    pub(crate) fn saturate_real_into(&self, u: &mut [f64]) -> Result<bool> {
        self.check_dim(u.len())?;
        let mut active = false;
        let mut offset = 0;
        for ch in &self.channels {
            let block = &mut u[offset..offset + ch.dim()];
            // Same operation order as the complex path: |x-r|² = re² + 0.
            let dist = block
                .iter()
                .zip(&ch.center)
                .map(|(x, r)| {
                    let d = x - r.re;
                    d * d + 0.0
                })
                .sum::<f64>()
                .sqrt();
            if dist > ch.radius {
                active = true;
                let factor = ch.radius / dist.max(ch.radius);
                for (x, r) in block.iter_mut().zip(&ch.center) {
                    *x = r.re + (*x - r.re) * factor;
                }
            }
            offset += ch.dim();
        }
        Ok(active)
    }

    /// Whether `u ∈ U_φ^δ`, i.e. `‖u_k - r_k‖ ≤ δ_k - δ` for all channels.
    pub fn in_linear_region(&self, u: &[C64], margin: f64) -> Result<bool> {
        self.check_dim(u.len())?;
        if !(margin >= 0.0) || margin >= self.min_radius() {
            return Err(RegError::InvalidSpec(format!(
                "linear-region margin must satisfy 0 <= δ < min_k δ_k = {}, got {margin}",
                self.min_radius()
            )));
        }
        Ok(self.linear_margin_of(u) >= margin)
    }

    /// `min_k (δ_k - ‖u_k - r_k‖)`: the largest `δ` with `u ∈ U_φ^δ`.
    pub fn linear_margin_of(&self, u: &[C64]) -> f64 {
        let mut offset = 0;
        let mut margin = f64::INFINITY;
        for ch in &self.channels {
            let dist = u[offset..offset + ch.dim()]
                .iter()
                .zip(&ch.center)
                .map(|(x, r)| (x - r).norm_sqr())
                .sum::<f64>()
                .sqrt();
            margin = margin.min(ch.radius - dist);
            offset += ch.dim();
        }
        margin
    }
}
