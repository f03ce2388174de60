//! Dense kernels shared by the transfer, regulator and simulator modules.

use faer::linalg::solvers::{PartialPivLu, Solve};
use faer::{Mat, Side};
use ndarray::{s, Array1, Array2};

use crate::error::{RegError, Result};
use crate::C64;

/// Above this size the smallest singular value is estimated by inverse power
/// iteration on the LU factors instead of a full SVD.
const EXACT_SVD_LIMIT: usize = 400;
const POWER_ITERATIONS: usize = 60;

pub fn to_complex(a: &Array2<f64>) -> Array2<C64> {
    Array2::from_shape_fn(a.raw_dim(), |ij| C64::new(a[ij], 0.0))
}

fn to_faer<T: Copy>(a: &Array2<T>) -> Mat<T> {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[[i, j]])
}

fn column_to_faer(v: ndarray::ArrayView1<C64>) -> Mat<C64> {
    Mat::from_fn(v.len(), 1, |i, _| v[i])
}

fn from_faer_column(m: &Mat<C64>) -> Array1<C64> {
    (0..m.nrows()).map(|i| m[(i, 0)]).collect()
}

fn failure(what: &str, err: impl std::fmt::Debug) -> RegError {
    RegError::Linalg(format!("{what}: {err:?}"))
}

fn singular_values(m: &Mat<C64>) -> Result<Vec<f64>> {
    m.singular_values()
        .map_err(|e| failure("singular value decomposition", e))
}

pub fn frobenius(a: &Array2<f64>) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn frobenius_c(a: &Array2<C64>) -> f64 {
    a.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

pub fn norm_c(v: &Array1<C64>) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn norm(v: &Array1<f64>) -> f64 {
    v.iter().map(|z| z * z).sum::<f64>().sqrt()
}

/// Singularity threshold for `λ - A`: `1e-10 · (1 + ‖A‖_F)`.
pub fn resolvent_threshold(a: &Array2<f64>) -> f64 {
    1e-10 * (1.0 + frobenius(a))
}

/// Solves `(λI - A) X = rhs` by dense LU with partial pivoting.
///
/// Returns the solution and the (estimated) smallest singular value of
/// `λI - A`. Fails with [`RegError::NearSingularResolvent`] when that value is
/// at or below [`resolvent_threshold`].
pub fn shifted_solve(
    a: &Array2<f64>,
    lambda: C64,
    rhs: &Array2<C64>,
) -> Result<(Array2<C64>, f64)> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(RegError::DimensionMismatch {
            context: "shifted_solve: square A",
            expected: n,
            got: a.ncols(),
        });
    }
    if rhs.nrows() != n {
        return Err(RegError::DimensionMismatch {
            context: "shifted_solve: right-hand side rows",
            expected: n,
            got: rhs.nrows(),
        });
    }
    let threshold = resolvent_threshold(a);
    let singular = |sigma_min: f64| RegError::NearSingularResolvent {
        lambda,
        sigma_min,
        threshold,
    };
    if n == 0 {
        return Ok((Array2::zeros((0, rhs.ncols())), f64::INFINITY));
    }

    let shifted = Mat::from_fn(n, n, |i, j| {
        let v = C64::new(-a[[i, j]], 0.0);
        if i == j {
            v + lambda
        } else {
            v
        }
    });

    let sigma_min = if n <= EXACT_SVD_LIMIT {
        singular_values(&shifted)?
            .last()
            .copied()
            .unwrap_or(f64::INFINITY)
    } else {
        f64::NAN
    };
    if sigma_min <= threshold {
        return Err(singular(sigma_min));
    }

    let lu = shifted.partial_piv_lu();
    let sigma_min = if sigma_min.is_nan() {
        let estimate = inverse_power_sigma_min(&lu, n);
        if estimate <= threshold {
            return Err(singular(estimate));
        }
        estimate
    } else {
        sigma_min
    };

    let x = lu.solve(&to_faer(rhs));
    let mut out = Array2::zeros(rhs.raw_dim());
    for j in 0..rhs.ncols() {
        for i in 0..n {
            let z = x[(i, j)];
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(singular(0.0));
            }
            out[[i, j]] = z;
        }
    }
    Ok((out, sigma_min))
}

/// `1/‖M^{-1}‖₂` estimated by power iteration on `M^{-H} M^{-1}`.
///
/// Near-singular matrices have a dominant singular value of `M^{-1}` that is
/// well separated, which is where the estimate matters.
fn inverse_power_sigma_min(lu: &PartialPivLu<C64>, n: usize) -> f64 {
    // Deterministic, non-symmetric start vector.
    let mut x: Array1<C64> = (0..n)
        .map(|i| C64::new(1.0 + 0.37 * ((i * 7919) % 101) as f64 / 101.0, 0.0))
        .collect();
    let nx = norm_c(&x);
    x.mapv_inplace(|z| z / nx);
    let mut estimate = 0.0f64;
    for _ in 0..POWER_ITERATIONS {
        let y = from_faer_column(&lu.solve(&column_to_faer(x.view())));
        let ny = norm_c(&y);
        if !ny.is_finite() {
            return 0.0;
        }
        let z = from_faer_column(&lu.solve_adjoint(&column_to_faer(y.view())));
        let nz = norm_c(&z);
        if !nz.is_finite() {
            return 0.0;
        }
        if nz == 0.0 {
            return f64::INFINITY;
        }
        x = z.mapv(|v| v / nz);
        let converged = (ny - estimate).abs() <= 1e-8 * ny;
        estimate = ny;
        if converged {
            break;
        }
    }
    1.0 / estimate
}

/// Ratio of largest to smallest singular value (`inf` for exactly singular).
pub fn condition_number(m: &Array2<C64>) -> Result<f64> {
    if m.is_empty() {
        return Ok(1.0);
    }
    let sv = singular_values(&to_faer(m))?;
    let max = sv.iter().cloned().fold(0.0f64, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(if min == 0.0 { f64::INFINITY } else { max / min })
}

/// Solves `M X = rhs` for a small square complex matrix.
pub fn solve_dense(m: &Array2<C64>, rhs: &Array2<C64>) -> Result<Array2<C64>> {
    if m.is_empty() {
        return Ok(Array2::zeros((0, rhs.ncols())));
    }
    let x = to_faer(m).partial_piv_lu().solve(&to_faer(rhs));
    Ok(Array2::from_shape_fn(rhs.raw_dim(), |(i, j)| x[(i, j)]))
}

pub fn solve_dense_vec(m: &Array2<C64>, rhs: &Array1<C64>) -> Result<Array1<C64>> {
    if m.is_empty() {
        return Ok(Array1::zeros(0));
    }
    let x = to_faer(m)
        .partial_piv_lu()
        .solve(&column_to_faer(rhs.view()));
    Ok(from_faer_column(&x))
}

pub fn eigenvalues(a: &Array2<f64>) -> Result<Array1<C64>> {
    if a.is_empty() {
        return Ok(Array1::zeros(0));
    }
    let eig = to_faer(a)
        .eigenvalues()
        .map_err(|e| failure("eigenvalues", e))?;
    Ok(Array1::from(eig))
}

pub fn is_symmetric(a: &Array2<f64>) -> bool {
    a.is_square() && (0..a.nrows()).all(|i| (0..i).all(|j| a[[i, j]] == a[[j, i]]))
}

/// Eigenvalues of a real symmetric matrix in ascending order.
pub fn symmetric_eigenvalues(a: &Array2<f64>) -> Result<Array1<f64>> {
    if a.is_empty() {
        return Ok(Array1::zeros(0));
    }
    let eig = to_faer(a)
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| failure("symmetric eigenvalues", e))?;
    Ok(Array1::from(eig))
}

pub fn is_positive_definite(m: &Array2<f64>) -> bool {
    is_symmetric(m) && (m.is_empty() || to_faer(m).llt(Side::Lower).is_ok())
}

/// Matrix exponential by scaling and squaring with a truncated Taylor series.
///
/// Used only for the small dense blocks of the time-stepping propagator.
pub fn expm(a: &Array2<f64>) -> Array2<f64> {
    let n = a.nrows();
    let norm1 = (0..n)
        .map(|j| a.column(j).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let mut squarings = 0;
    let mut scale = 1.0;
    while norm1 * scale > 0.25 {
        scale *= 0.5;
        squarings += 1;
    }
    let scaled = a * scale;
    let mut term = Array2::<f64>::eye(n);
    let mut sum = Array2::<f64>::eye(n);
    for k in 1..=18 {
        term = term.dot(&scaled) / k as f64;
        sum += &term;
    }
    for _ in 0..squarings {
        sum = sum.dot(&sum);
    }
    sum
}

/// `(e^{A h}, ∫₀ʰ e^{A s} ds)` via the exponential of the augmented matrix
/// `[[A h, I h], [0, 0]]`.
pub fn expm_with_integral(a: &Array2<f64>, h: f64) -> (Array2<f64>, Array2<f64>) {
    let n = a.nrows();
    let mut aug = Array2::<f64>::zeros((2 * n, 2 * n));
    aug.slice_mut(s![..n, ..n]).assign(&(a * h));
    for i in 0..n {
        aug[[i, n + i]] = h;
    }
    let e = expm(&aug);
    (
        e.slice(s![..n, ..n]).to_owned(),
        e.slice(s![..n, n..]).to_owned(),
    )
}
