//! Dense least-squares solvers with explicit rank control.
//!
//! Everything here reduces to the singular value decomposition: a solve
//! first compresses tall systems with a QR factorization (the SVD then runs
//! on the small triangular factor, whose singular values equal those of the
//! original matrix), then filters singular values either by truncation
//! (minimum-norm pseudoinverse solution) or by Tikhonov damping.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Outcome of a rank-revealing least-squares solve.
#[derive(Debug, Clone)]
pub struct Lstsq {
    /// Minimum-norm solution of `min ‖A x − b‖₂`.
    pub solution: DVector<f64>,
    /// Number of singular values above the cutoff.
    pub effective_rank: usize,
    /// Largest singular value of `A`.
    pub sigma_max: f64,
}

/// Compressed form of an `m × n` system (`m ≥ n`): the `n × n` triangular
/// factor and the rotated right-hand side, sharing the singular spectrum of
/// the original matrix.
fn compress(a: &DMatrix<f64>, b: &DVector<f64>) -> (DMatrix<f64>, DVector<f64>) {
    let n = a.ncols();
    if a.nrows() > 2 * n {
        let qr = a.clone().qr();
        let mut rotated = b.clone();
        qr.q_tr_mul(&mut rotated);
        (qr.r(), DVector::from(rotated.rows(0, n).into_owned()))
    } else {
        (a.clone(), b.clone())
    }
}

/// Minimum-norm least squares via truncated SVD.
///
/// Singular values at or below `rcond · σ_max` are discarded; the returned
/// solution ignores the corresponding directions. `rcond` is therefore the
/// knob separating "solve exactly" (`rcond ≈ machine epsilon`) from
/// "regularize by spectral cutoff" (larger `rcond`).
///
/// Errors with [`Error::SingularSystem`] when no singular value survives the
/// cutoff, and with [`Error::InvalidInput`] for under-determined systems.
pub fn lstsq(a: &DMatrix<f64>, b: &DVector<f64>, rcond: f64) -> Result<Lstsq> {
    check_shape(a, b)?;
    let (c, d) = compress(a, b);
    svd_filtered_solve(&c, &d, |sigma, sigma_max| {
        if sigma > rcond * sigma_max {
            Some(1.0 / sigma)
        } else {
            None
        }
    })
}

/// Least squares with Tikhonov damping `λ`: solves
/// `min ‖A x − b‖² + λ‖x‖²` through the SVD filter `σ/(σ² + λ)`.
///
/// Used as the fallback when a variable-projection design matrix is rank
/// deficient; never errors on rank (every direction is damped, none is
/// dropped).
pub fn ridge(a: &DMatrix<f64>, b: &DVector<f64>, lambda: f64) -> Result<Lstsq> {
    check_shape(a, b)?;
    let (c, d) = compress(a, b);
    svd_filtered_solve(&c, &d, |sigma, _| {
        if sigma > 0.0 {
            Some(sigma / (sigma * sigma + lambda))
        } else {
            None
        }
    })
}

/// Minimum-norm least squares through the Gram matrix `AᵀA`.
///
/// One large matrix-matrix product plus an `n × n` SVD; much faster than
/// factorizing `A` itself when `m ≫ n`, at the price of squaring the
/// condition number. Appropriate for well-conditioned design matrices in
/// inner training loops. The cutoff is applied to the singular values of
/// `A` (i.e. to `√σ(AᵀA)`).
pub fn lstsq_gram(a: &DMatrix<f64>, b: &DVector<f64>, rcond: f64) -> Result<Lstsq> {
    check_shape(a, b)?;
    let gram = a.transpose() * a;
    let atb = a.transpose() * b;
    let svd = gram
        .svd(true, true)
        ;
    let u = svd.u.as_ref().expect("SVD with vectors requested");
    let v_t = svd.v_t.as_ref().expect("SVD with vectors requested");
    let sigma_max = svd.singular_values.max().sqrt();
    let cutoff = rcond * sigma_max;
    let mut filtered = DVector::zeros(svd.singular_values.len());
    let mut rank = 0;
    let coeffs = u.transpose() * &atb;
    for (i, &sg) in svd.singular_values.iter().enumerate() {
        let sigma = sg.sqrt();
        if sigma > cutoff {
            filtered[i] = coeffs[i] / sg;
            rank += 1;
        }
    }
    if rank == 0 {
        return Err(Error::SingularSystem {
            effective_rank: 0,
            cols: a.ncols(),
        });
    }
    Ok(Lstsq {
        solution: v_t.transpose() * filtered,
        effective_rank: rank,
        sigma_max,
    })
}

fn check_shape(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<()> {
    if a.nrows() < a.ncols() {
        return Err(Error::InvalidInput(format!(
            "least squares needs rows >= columns, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if a.nrows() != b.len() {
        return Err(Error::InvalidInput(format!(
            "matrix has {} rows but right-hand side has {} entries",
            a.nrows(),
            b.len()
        )));
    }
    Ok(())
}

/// Shared SVD solve: `x = V f(Σ) Uᵀ b` with a per-singular-value filter
/// returning the reciprocal weight (or `None` to drop the direction).
fn svd_filtered_solve(
    c: &DMatrix<f64>,
    d: &DVector<f64>,
    filter: impl Fn(f64, f64) -> Option<f64>,
) -> Result<Lstsq> {
    let svd = c.clone().svd(true, true);
    let u = svd.u.as_ref().expect("SVD with vectors requested");
    let v_t = svd.v_t.as_ref().expect("SVD with vectors requested");
    let sigma_max = svd.singular_values.max();
    let coeffs = u.transpose() * d;
    let mut filtered = DVector::zeros(svd.singular_values.len());
    let mut rank = 0;
    for (i, &sigma) in svd.singular_values.iter().enumerate() {
        if let Some(w) = filter(sigma, sigma_max) {
            filtered[i] = coeffs[i] * w;
            rank += 1;
        }
    }
    if rank == 0 {
        return Err(Error::SingularSystem {
            effective_rank: 0,
            cols: c.ncols(),
        });
    }
    Ok(Lstsq {
        solution: v_t.transpose() * filtered,
        effective_rank: rank,
        sigma_max,
    })
}
