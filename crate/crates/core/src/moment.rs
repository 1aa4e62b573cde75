//! Ensembled moment estimators: OLS, principal Hessian directions and the
//! iterative Hessian transformation, each averaged over the kernel ensemble.
//!
//! All candidates take standardized predictors `z` (`n × p`) and the raw Gram
//! matrix; column `i` of the Gram matrix is the ensemble member `κ(·, Y_i)`.

use nalgebra::DMatrix;

use crate::error::{Result, SdrError};
use crate::kernels::center_columns;
use crate::metrics::symmetrize;

/// Largest IHT power used when none is requested.
pub const MAX_DEFAULT_IHT_POWER: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomentMethod {
    Ols,
    Phd,
    /// `r` is the highest Hessian power applied to the covariance vector.
    Iht { r: usize },
}

/// `min(p − 1, 10)`, at least 1.
pub fn default_iht_power(p: usize) -> usize {
    p.saturating_sub(1).clamp(1, MAX_DEFAULT_IHT_POWER)
}

fn check_shapes(z: &DMatrix<f64>, gram: &DMatrix<f64>) -> Result<()> {
    if gram.nrows() != z.nrows() || !gram.is_square() {
        return Err(SdrError::ShapeMismatch(format!(
            "predictors have {} rows but the Gram matrix is {}x{}",
            z.nrows(),
            gram.nrows(),
            gram.ncols()
        )));
    }
    Ok(())
}

/// Columns `Ĉ(Y_i) = E_n[Z κ_c(Y, Y_i)]`, as a `p × n` matrix.
fn covariance_vectors(z: &DMatrix<f64>, kc: &DMatrix<f64>) -> DMatrix<f64> {
    z.transpose() * kc / z.nrows() as f64
}

/// `Ĥ(Y_i) = E_n[Z Zᵀ κ_c(Y, Y_i)]`.
fn hessian_member(z: &DMatrix<f64>, kc_col: nalgebra::DVectorView<'_, f64>) -> DMatrix<f64> {
    let mut weighted = z.clone();
    for (r, mut row) in weighted.row_iter_mut().enumerate() {
        row *= kc_col[r];
    }
    symmetrize(&(z.transpose() * weighted / z.nrows() as f64))
}

/// `M̂ = E_n[Ĉ(Y) Ĉ(Y)ᵀ]`.
pub fn fols_candidate(z: &DMatrix<f64>, gram: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_shapes(z, gram)?;
    let c = covariance_vectors(z, &center_columns(gram));
    Ok(symmetrize(&(&c * c.transpose() / gram.ncols() as f64)))
}

/// `M̂ = E_n[Ĥ(Y)]`; symmetric but generally indefinite.
pub fn fphd_candidate(z: &DMatrix<f64>, gram: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_shapes(z, gram)?;
    let kc = center_columns(gram);
    let n = gram.ncols() as f64;
    // E_n over members commutes with the inner sum, so average κ_c across
    // members first: (1/n) Σ_i Ĥ_i = (1/n²) Σ_j z_j z_jᵀ Σ_i κ_c[j, i]
    let row_means: Vec<f64> = kc.row_iter().map(|r| r.sum() / n).collect();
    let mut weighted = z.clone();
    for (r, mut row) in weighted.row_iter_mut().enumerate() {
        row *= row_means[r];
    }
    Ok(symmetrize(&(z.transpose() * weighted / z.nrows() as f64)))
}

/// `M̂ = E_n[Ŵ(Y) Ŵ(Y)ᵀ]` with `Ŵ = (Ĉ, ĤĈ, …, Ĥ^r Ĉ)`. `r = 0` reduces to
/// [`fols_candidate`].
pub fn fiht_candidate(z: &DMatrix<f64>, gram: &DMatrix<f64>, r: usize) -> Result<DMatrix<f64>> {
    check_shapes(z, gram)?;
    let kc = center_columns(gram);
    let c = covariance_vectors(z, &kc);
    let p = z.ncols();
    let n = gram.ncols();
    let mut total = DMatrix::zeros(p, p);
    for i in 0..n {
        let mut v = c.column(i).into_owned();
        total += &v * v.transpose();
        if r == 0 {
            continue;
        }
        let h = hessian_member(z, kc.column(i));
        for _ in 0..r {
            v = &h * v;
            total += &v * v.transpose();
        }
    }
    Ok(symmetrize(&(total / n as f64)))
}

/// Dispatch to the candidate matrix of `method`.
pub fn moment_candidate(z: &DMatrix<f64>, gram: &DMatrix<f64>, method: MomentMethod) -> Result<DMatrix<f64>> {
    match method {
        MomentMethod::Ols => fols_candidate(z, gram),
        MomentMethod::Phd => fphd_candidate(z, gram),
        MomentMethod::Iht { r } => fiht_candidate(z, gram, r),
    }
}
