//! Exact propagation of `ẋ = Ax + f` with `f` frozen over one step:
//! `x⁺ = e^{Ah} x + (∫₀ʰ e^{As} ds) f`.
//!
//! `A` is split into the connected components of its sparsity graph. Scalar
//! and zero-diagonal skew 2×2 components use closed forms; anything else
//! falls back to a dense exponential of the component.

use ndarray::{Array1, Array2};

use crate::linalg;

const SERIES_LIMIT: f64 = 1e-4;

#[derive(Clone, Debug)]
enum Block {
    Scalar {
        index: usize,
        e: f64,
        phi: f64,
    },
    Dense {
        indices: Vec<usize>,
        e: Array2<f64>,
        phi: Array2<f64>,
    },
}

#[derive(Clone, Debug)]
pub(crate) struct Propagator {
    blocks: Vec<Block>,
    dim: usize,
}

/// `h φ₁(a h)` with `φ₁(z) = (e^z − 1)/z`.
fn scalar_integral(a: f64, h: f64) -> f64 {
    let z = a * h;
    if z.abs() < SERIES_LIMIT {
        h * (1.0 + z / 2.0 + z * z / 6.0 + z * z * z / 24.0)
    } else {
        z.exp_m1() / a
    }
}

fn components(a: &Array2<f64>) -> Vec<Vec<usize>> {
    let n = a.nrows();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while parent[r] != r {
            r = parent[r];
        }
        let mut j = i;
        while parent[j] != r {
            let next = parent[j];
            parent[j] = r;
            j = next;
        }
        r
    }
    for i in 0..n {
        for j in 0..n {
            if i != j && a[[i, j]] != 0.0 {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        let r = find(&mut parent, i);
        groups[r].push(i);
    }
    groups.into_iter().filter(|g| !g.is_empty()).collect()
}

impl Propagator {
    pub(crate) fn new(a: &Array2<f64>, h: f64) -> Self {
        let mut blocks = Vec::new();
        for group in components(a) {
            if group.len() == 1 {
                let i = group[0];
                let d = a[[i, i]];
                blocks.push(Block::Scalar {
                    index: i,
                    e: (d * h).exp(),
                    phi: scalar_integral(d, h),
                });
                continue;
            }
            let sub =
                Array2::from_shape_fn((group.len(), group.len()), |(r, c)| a[[group[r], group[c]]]);
            let rotation = group.len() == 2
                && sub[[0, 0]] == 0.0
                && sub[[1, 1]] == 0.0
                && sub[[0, 1]] == -sub[[1, 0]];
            let (e, phi) = if rotation {
                let w = sub[[1, 0]];
                let (s, c) = (w * h).sin_cos();
                // 1 − cos(wh) without cancellation.
                let one_minus_cos = 2.0 * (0.5 * w * h).sin().powi(2);
                (
                    ndarray::array![[c, -s], [s, c]],
                    ndarray::array![[s, -one_minus_cos], [one_minus_cos, s]] / w,
                )
            } else {
                linalg::expm_with_integral(&sub, h)
            };
            blocks.push(Block::Dense {
                indices: group,
                e,
                phi,
            });
        }
        Self {
            blocks,
            dim: a.nrows(),
        }
    }

    /// `out = e^{Ah} x + Φ(h) f`.
    pub(crate) fn apply(&self, x: &Array1<f64>, f: &Array1<f64>, out: &mut Array1<f64>) {
        debug_assert_eq!(x.len(), self.dim);
        for block in &self.blocks {
            match block {
                Block::Scalar { index, e, phi } => out[*index] = e * x[*index] + phi * f[*index],
                Block::Dense { indices, e, phi } => {
                    let xs: Array1<f64> = indices.iter().map(|&i| x[i]).collect();
                    let fs: Array1<f64> = indices.iter().map(|&i| f[i]).collect();
                    let y = e.dot(&xs) + phi.dot(&fs);
                    for (k, &i) in indices.iter().enumerate() {
                        out[i] = y[k];
                    }
                }
            }
        }
    }
}
