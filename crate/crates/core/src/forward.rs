//! Forward-regression ensembles: outer product of gradients (FOPG, rFOPG)
//! and minimum average variance estimation (FMAVE, rFMAVE).
//!
//! Every kernel column `κ(·, Y_k)` is smoothed by local linear regression on
//! the marginally standardized predictors. One weighted normal system per
//! center `j` is solved against all `n` columns at once.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rayon::prelude::*;

use crate::error::{Result, SdrError};
use crate::linalg::{orthonormalize, standardize_marginal, top_eigenvectors, PredictorMatrix};
use crate::metrics::symmetrize;

/// `c₀` of the bandwidth rule.
pub const BANDWIDTH_CONSTANT: f64 = 2.34;
/// Ridge added to weighted normal matrices, relative to their trace.
pub const LOCAL_RIDGE: f64 = 1e-8;
pub const DEFAULT_MAX_ITER: usize = 10;
/// Kernel weights below this fraction of the center's own weight do not
/// count as support.
const SUPPORT_TOL: f64 = 1e-12;

/// `h_t`: `h₀ = c₀ n^{-1/(p₀+6)}` with `p₀ = max(p, 3)`, then
/// `h_t = max(r_n h_{t-1}, c₀ n^{-1/(d0+4)})` with `r_n = n^{-1/(2(p₀+6))}`.
pub fn bandwidth_schedule(n: usize, p: usize, d0: usize, t: usize) -> f64 {
    let nf = n as f64;
    let p0 = p.max(3) as f64;
    let floor = BANDWIDTH_CONSTANT * nf.powf(-1.0 / (d0 as f64 + 4.0));
    let rate = nf.powf(-1.0 / (2.0 * (p0 + 6.0)));
    let mut h = BANDWIDTH_CONSTANT * nf.powf(-1.0 / (p0 + 6.0));
    for _ in 0..t {
        h = (rate * h).max(floor);
    }
    h
}

/// Bandwidth used at every smoothing iteration along with the projection.
#[derive(Debug, Clone)]
pub struct SmoothingState {
    pub h: f64,
    /// `p × m`; the identity before any direction has been estimated.
    pub b_current: DMatrix<f64>,
    pub iteration: usize,
}

/// Normalized Gaussian weights `w_i ∝ exp(-‖bᵀ(z_i - z_j)‖² / 2h²)` around
/// center `j`. If fewer than `min_support` points carry non-negligible
/// weight, uniform weights over the `min_support` nearest points are used
/// instead.
pub fn local_weights(z: &DMatrix<f64>, b: &DMatrix<f64>, h: f64, j: usize) -> Result<DVector<f64>> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(SdrError::InvalidArgument(format!("bandwidth must be positive, got {h}")));
    }
    if b.nrows() != z.ncols() {
        return Err(SdrError::DimMismatch {
            left: z.ncols(),
            right: b.nrows(),
        });
    }
    if j >= z.nrows() {
        return Err(SdrError::InvalidArgument(format!("center {j} out of range")));
    }
    Ok(projected_weights(&(z * b), h, j, 1))
}

fn projected_weights(u: &DMatrix<f64>, h: f64, j: usize, min_support: usize) -> DVector<f64> {
    let n = u.nrows();
    let uj = u.row(j);
    let sq: Vec<f64> = (0..n).map(|i| (u.row(i) - uj).norm_squared()).collect();
    // the center has distance 0, so the unnormalized maximum is exactly 1
    let mut w = DVector::from_iterator(n, sq.iter().map(|d| (-d / (2.0 * h * h)).exp()));
    let support = w.iter().filter(|&&v| v > SUPPORT_TOL).count();
    if support < min_support.min(n) {
        let k = min_support.min(n);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| sq[a].total_cmp(&sq[b]).then(a.cmp(&b)));
        w.fill(0.0);
        for &i in &order[..k] {
            w[i] = 1.0;
        }
    }
    let total = w.sum();
    w / total
}

/// Local linear fits at every center. Row `j` of `intercepts` holds
/// `a_{j1}, …, a_{jn}`; `slopes[j]` is `q × n` with column `k` the slope of
/// kernel column `k` (`q = p` for OPG, `q = d0` for MAVE).
#[derive(Debug, Clone)]
pub struct LocalFit {
    pub intercepts: DMatrix<f64>,
    pub slopes: Vec<DMatrix<f64>>,
    /// Centers whose normal matrix stayed singular; their slopes are zero.
    pub skipped: Vec<usize>,
}

/// Weighted least squares of every kernel column on `(1, Δ_j)` where row `i`
/// of `Δ_j` is `(z_i - z_j)ᵀ b`. `ridge` is relative to the normal matrix
/// trace.
fn local_ls(
    z: &DMatrix<f64>,
    b: Option<&DMatrix<f64>>,
    gram: &DMatrix<f64>,
    weights: &[DVector<f64>],
    ridge: f64,
) -> Result<LocalFit> {
    let n = z.nrows();
    if gram.nrows() != n || gram.ncols() != n {
        return Err(SdrError::ShapeMismatch(format!(
            "predictors have {n} rows but the Gram matrix is {}x{}",
            gram.nrows(),
            gram.ncols()
        )));
    }
    if weights.len() != n {
        return Err(SdrError::ShapeMismatch(format!("{} weight vectors for {n} centers", weights.len())));
    }
    let u = match b {
        Some(b) => z * b,
        None => z.clone(),
    };
    let q = u.ncols();
    let solved: Vec<Option<DMatrix<f64>>> = (0..n)
        .into_par_iter()
        .map(|j| {
            // design (1, Δ_j) and its weighted transpose
            let uj = u.row(j);
            let mut design = DMatrix::from_element(n, q + 1, 1.0);
            for i in 0..n {
                for c in 0..q {
                    design[(i, c + 1)] = u[(i, c)] - uj[c];
                }
            }
            let mut dtw = design.transpose();
            for (i, mut col) in dtw.column_iter_mut().enumerate() {
                col *= weights[j][i];
            }
            let normal = &dtw * &design;
            solve_normal(normal, &dtw * gram, ridge)
        })
        .collect();
    let mut intercepts = DMatrix::zeros(n, n);
    let mut slopes = Vec::with_capacity(n);
    let mut skipped = Vec::new();
    for (j, sol) in solved.into_iter().enumerate() {
        match sol {
            Some(a) => {
                intercepts.set_row(j, &a.row(0));
                slopes.push(a.rows(1, q).into_owned());
            }
            None => {
                skipped.push(j);
                slopes.push(DMatrix::zeros(q, n));
            }
        }
    }
    if skipped.len() == n {
        return Err(SdrError::SingularLocalFit(skipped[0]));
    }
    if !skipped.is_empty() {
        log::warn!("{} of {n} local fits were singular and skipped", skipped.len());
    }
    Ok(LocalFit {
        intercepts,
        slopes,
        skipped,
    })
}

fn solve_normal(mut normal: DMatrix<f64>, rhs: DMatrix<f64>, ridge: f64) -> Option<DMatrix<f64>> {
    normal = symmetrize(&normal);
    let shift = ridge * normal.trace();
    for d in 0..normal.nrows() {
        normal[(d, d)] += shift;
    }
    let chol: Cholesky<f64, Dyn> = Cholesky::new(normal)?;
    let sol = chol.solve(&rhs);
    sol.iter().all(|v| v.is_finite()).then_some(sol)
}

/// Local linear OPG fits on the full standardized predictors with the
/// given per-center weights.
pub fn opg_local_ls(z: &DMatrix<f64>, gram: &DMatrix<f64>, weights: &[DVector<f64>], ridge: f64) -> Result<LocalFit> {
    local_ls(z, None, gram, weights, ridge)
}

/// `Λ̂ = n⁻² Σ_j S_j S_jᵀ`.
pub fn gradient_outer_product(fit: &LocalFit) -> DMatrix<f64> {
    let n = fit.slopes.len();
    let q = fit.slopes.first().map_or(0, |s| s.nrows());
    let mut total = DMatrix::zeros(q, q);
    for s in &fit.slopes {
        total += s * s.transpose();
    }
    symmetrize(&(total / (n * n) as f64))
}

fn all_weights(u: &DMatrix<f64>, h: f64, min_support: usize) -> Vec<DVector<f64>> {
    (0..u.nrows())
        .into_par_iter()
        .map(|j| projected_weights(u, h, j, min_support))
        .collect()
}

/// Result of a forward-regression fit.
#[derive(Debug, Clone)]
pub struct ForwardFit {
    /// `p × d0` basis on the original predictor scale, orthonormal.
    pub basis: DMatrix<f64>,
    /// Basis in standardized coordinates before the back-transform.
    pub standardized_basis: DMatrix<f64>,
    /// Spectrum of the last gradient outer product matrix (the initializing
    /// one for MAVE).
    pub eigenvalues: Vec<f64>,
    /// Bandwidth used at each iteration.
    pub bandwidths: Vec<f64>,
    pub skipped_centers: usize,
}

fn check_dims(x: &PredictorMatrix, gram: &DMatrix<f64>, d0: usize, max_iter: usize) -> Result<()> {
    let (n, p) = (x.n(), x.p());
    if n < p + 2 {
        return Err(SdrError::InvalidArgument(format!("need n >= p + 2, got n = {n}, p = {p}")));
    }
    if d0 == 0 || d0 > p {
        return Err(SdrError::InvalidArgument(format!("d0 must lie in [1, {p}], got {d0}")));
    }
    if max_iter == 0 {
        return Err(SdrError::InvalidArgument("max_iter must be at least 1".into()));
    }
    if gram.nrows() != n || gram.ncols() != n {
        return Err(SdrError::ShapeMismatch(format!(
            "{n} observations but the Gram matrix is {}x{}",
            gram.nrows(),
            gram.ncols()
        )));
    }
    Ok(())
}

/// Map a standardized-scale basis back to the predictor scale: `D⁻¹ v`,
/// re-orthonormalized.
fn back_transform(v: &DMatrix<f64>, sds: &DVector<f64>) -> Result<DMatrix<f64>> {
    let mut b = v.clone();
    for (r, mut row) in b.row_iter_mut().enumerate() {
        row /= sds[r];
    }
    orthonormalize(&b)
}

/// OPG on standardized predictors. `refine = false` is the single-pass
/// FOPG; otherwise `max_iter` rounds with kernel weights projected through
/// the previous estimate.
fn opg_standardized(
    z: &DMatrix<f64>,
    gram: &DMatrix<f64>,
    d0: usize,
    refine: bool,
    max_iter: usize,
) -> Result<(DMatrix<f64>, Vec<f64>, Vec<f64>, usize)> {
    let (n, p) = z.shape();
    let rounds = if refine { max_iter } else { 1 };
    let mut state = SmoothingState {
        h: bandwidth_schedule(n, p, d0, 0),
        b_current: DMatrix::identity(p, p),
        iteration: 0,
    };
    let mut bandwidths = Vec::with_capacity(rounds);
    let mut result = None;
    for t in 0..rounds {
        let w = all_weights(&(z * &state.b_current), state.h, p + 2);
        let fit = opg_local_ls(z, gram, &w, LOCAL_RIDGE)?;
        let est = top_eigenvectors(&gradient_outer_product(&fit), d0)?;
        bandwidths.push(state.h);
        state = SmoothingState {
            h: bandwidth_schedule(n, p, d0, t + 1),
            b_current: est.basis.clone(),
            iteration: t + 1,
        };
        result = Some((est.basis, est.eigenvalues, fit.skipped.len()));
    }
    let (basis, eigenvalues, skipped) = result.expect("at least one round");
    Ok((basis, eigenvalues, bandwidths, skipped))
}

/// FOPG (`refine = false`) or rFOPG on the raw predictors.
pub fn fopg_fit(x: &PredictorMatrix, gram: &DMatrix<f64>, d0: usize, refine: bool, max_iter: usize) -> Result<ForwardFit> {
    check_dims(x, gram, d0, max_iter)?;
    let (z, sds) = standardize_marginal(x)?;
    let (v, eigenvalues, bandwidths, skipped_centers) = opg_standardized(&z, gram, d0, refine, max_iter)?;
    Ok(ForwardFit {
        basis: back_transform(&v, &sds)?,
        standardized_basis: v,
        eigenvalues,
        bandwidths,
        skipped_centers,
    })
}

/// MAVE step 2: local fits on `(1, Δ_j b)` giving `a_{jk}` and `c_{jk} ∈ R^{d0}`.
pub fn mave_local_step(
    z: &DMatrix<f64>,
    gram: &DMatrix<f64>,
    weights: &[DVector<f64>],
    b: &DMatrix<f64>,
    ridge: f64,
) -> Result<LocalFit> {
    local_ls(z, Some(b), gram, weights, ridge)
}

/// MAVE step 3: the least squares `B` given intercepts and loadings, from
/// `[Σ_j (C_j C_jᵀ) ⊗ (Δ_jᵀ W_j Δ_j)] vec(B) = Σ_j vec(Δ_jᵀ W_j R_j C_jᵀ)`
/// with column-stacking `vec` and `R_j[i, k] = κ_ik - a_jk`. Not
/// orthonormalized.
pub fn mave_basis_step(
    z: &DMatrix<f64>,
    gram: &DMatrix<f64>,
    weights: &[DVector<f64>],
    fit: &LocalFit,
    ridge: f64,
) -> Result<DMatrix<f64>> {
    let (n, p) = z.shape();
    let d = fit.slopes.first().map_or(0, |c| c.nrows());
    let pd = p * d;
    let parts: Vec<(DMatrix<f64>, DVector<f64>)> = (0..n)
        .into_par_iter()
        .map(|j| {
            let zj = z.row(j);
            let mut delta = z.clone();
            for mut row in delta.row_iter_mut() {
                row -= zj;
            }
            // Δ_jᵀ W_j
            let mut dtw = delta.transpose();
            for (i, mut col) in dtw.column_iter_mut().enumerate() {
                col *= weights[j][i];
            }
            let dwd = &dtw * &delta;
            let c = &fit.slopes[j];
            let cct = c * c.transpose();
            let a = fit.intercepts.row(j);
            // Δ_jᵀ W_j R_j = Δ_jᵀ W_j K − (Δ_jᵀ W_j 1) a_jᵀ
            let wsum: DVector<f64> = dtw.column_sum();
            let dwr = &dtw * gram - &wsum * a;
            let rhs = dwr * c.transpose();
            let mut lhs = DMatrix::zeros(pd, pd);
            for r in 0..d {
                for s in 0..d {
                    let f = cct[(r, s)];
                    if f != 0.0 {
                        lhs.view_mut((r * p, s * p), (p, p)).copy_from(&(&dwd * f));
                    }
                }
            }
            (lhs, DVector::from_column_slice(rhs.as_slice()))
        })
        .collect();
    let mut lhs = DMatrix::zeros(pd, pd);
    let mut rhs = DVector::zeros(pd);
    for (l, r) in parts {
        lhs += l;
        rhs += r;
    }
    let lhs = symmetrize(&(lhs / (n * n) as f64));
    let rhs = rhs / (n * n) as f64;
    let sol = solve_normal(lhs.clone(), DMatrix::from_column_slice(pd, 1, rhs.as_slice()), ridge)
        .or_else(|| {
            log::warn!("MAVE normal system singular; retrying with ridge {LOCAL_RIDGE}");
            solve_normal(lhs, DMatrix::from_column_slice(pd, 1, rhs.as_slice()), ridge.max(LOCAL_RIDGE))
        })
        .ok_or(SdrError::SingularMaveSystem)?;
    Ok(DMatrix::from_column_slice(p, d, sol.as_slice()))
}

/// `n⁻² Σ_k Σ_j Σ_i w_ij [κ_ik − a_jk − c_jkᵀ bᵀ (z_i − z_j)]²`.
pub fn mave_objective(
    z: &DMatrix<f64>,
    gram: &DMatrix<f64>,
    weights: &[DVector<f64>],
    b: &DMatrix<f64>,
    fit: &LocalFit,
) -> f64 {
    let n = z.nrows();
    let u = z * b;
    let terms: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|j| {
            let uj = u.row(j);
            let mut proj = u.clone();
            for mut row in proj.row_iter_mut() {
                row -= uj;
            }
            // fitted[i, k] = a_jk + (u_i − u_j)ᵀ c_jk
            let fitted = &proj * &fit.slopes[j];
            let mut s = 0.0;
            for k in 0..n {
                let a = fit.intercepts[(j, k)];
                for i in 0..n {
                    let r = gram[(i, k)] - a - fitted[(i, k)];
                    s += weights[j][i] * r * r;
                }
            }
            s
        })
        .collect();
    terms.iter().sum::<f64>() / (n * n) as f64
}

/// Objective values along `steps` MAVE alternations at a fixed bandwidth and
/// fixed weights, without ridge. Entries alternate: after the local step,
/// after the basis step, and after orthonormalizing (loadings compensated).
pub fn mave_objective_trace(
    z: &DMatrix<f64>,
    gram: &DMatrix<f64>,
    b0: &DMatrix<f64>,
    h: f64,
    refine: bool,
    steps: usize,
) -> Result<Vec<f64>> {
    let (_, p) = z.shape();
    let d = b0.ncols();
    let u = if refine { z * b0 } else { z.clone() };
    let weights = all_weights(&u, h, if refine { d + 2 } else { p + 2 });
    let mut b = b0.clone();
    let mut out = Vec::new();
    for _ in 0..steps {
        let mut fit = mave_local_step(z, gram, &weights, &b, 0.0)?;
        out.push(mave_objective(z, gram, &weights, &b, &fit));
        let b_new = mave_basis_step(z, gram, &weights, &fit, 0.0)?;
        out.push(mave_objective(z, gram, &weights, &b_new, &fit));
        let qr = b_new.qr();
        let r = qr.r();
        for c in fit.slopes.iter_mut() {
            *c = &r * &*c;
        }
        b = qr.q();
        out.push(mave_objective(z, gram, &weights, &b, &fit));
    }
    Ok(out)
}

/// FMAVE (`refine = false`, weights on the full standardized predictors) or
/// rFMAVE (weights projected through the current estimate), initialized by
/// single-pass FOPG.
pub fn fmave_fit(x: &PredictorMatrix, gram: &DMatrix<f64>, d0: usize, refine: bool, max_iter: usize) -> Result<ForwardFit> {
    check_dims(x, gram, d0, max_iter)?;
    let (z, sds) = standardize_marginal(x)?;
    let (n, p) = z.shape();
    let (mut b, eigenvalues, _, mut skipped) = opg_standardized(&z, gram, d0, false, 1)?;
    let mut bandwidths = Vec::with_capacity(max_iter);
    for t in 0..max_iter {
        let h = bandwidth_schedule(n, p, d0, t);
        let weights = if refine {
            all_weights(&(&z * &b), h, d0 + 2)
        } else {
            all_weights(&z, h, p + 2)
        };
        let fit = mave_local_step(&z, gram, &weights, &b, LOCAL_RIDGE)?;
        skipped = skipped.max(fit.skipped.len());
        let b_new = mave_basis_step(&z, gram, &weights, &fit, 0.0)?;
        b = orthonormalize(&b_new)?;
        bandwidths.push(h);
    }
    Ok(ForwardFit {
        basis: back_transform(&b, &sds)?,
        standardized_basis: b,
        eigenvalues,
        bandwidths,
        skipped_centers: skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn bandwidth_examples() {
        assert_abs_diff_eq!(bandwidth_schedule(200, 10, 1, 0), 1.680, epsilon = 5e-4);
        assert_abs_diff_eq!(bandwidth_schedule(200, 2, 1, 0), 2.34 * 200f64.powf(-1.0 / 9.0), epsilon = 1e-14);
        let floor = 2.34 * 200f64.powf(-1.0 / 5.0);
        let mut prev = f64::INFINITY;
        for t in 0..30 {
            let h = bandwidth_schedule(200, 10, 1, t);
            assert!(h <= prev && h >= floor - 1e-15);
            prev = h;
        }
        assert_abs_diff_eq!(prev, floor, epsilon = 1e-14);
    }

    #[test]
    fn weight_examples() {
        let z = DMatrix::from_element(4, 2, 0.3);
        let w = local_weights(&z, &DMatrix::identity(2, 2), 0.5, 1).unwrap();
        assert_abs_diff_eq!(w, DVector::from_element(4, 0.25), epsilon = 1e-15);

        let z = DMatrix::from_column_slice(2, 1, &[0.0, 0.7]);
        let w = local_weights(&z, &DMatrix::identity(1, 1), 0.7, 0).unwrap();
        let k1 = (-0.5f64).exp();
        assert_abs_diff_eq!(w[0], 1.0 / (1.0 + k1), epsilon = 1e-15);
        assert_abs_diff_eq!(w[1], k1 / (1.0 + k1), epsilon = 1e-15);

        assert!(local_weights(&z, &DMatrix::identity(1, 1), 0.0, 0).is_err());
    }

    #[test]
    fn knn_fallback_when_support_collapses() {
        let z = DMatrix::from_column_slice(5, 1, &[0.0, 100.0, 101.0, 103.0, 200.0]);
        let w = projected_weights(&z, 0.01, 1, 3);
        assert_abs_diff_eq!(w, DVector::from_column_slice(&[0.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 0.0]));
    }

    #[test]
    fn constant_column_has_zero_slopes() {
        let z = DMatrix::from_fn(8, 2, |i, j| ((i * 3 + j * 5) % 7) as f64 / 7.0);
        let g = DMatrix::from_element(8, 8, 0.4);
        let w = all_weights(&z, 1.0, 4);
        let fit = opg_local_ls(&z, &g, &w, 0.0).unwrap();
        for s in &fit.slopes {
            assert!(s.amax() < 1e-12);
        }
        assert_abs_diff_eq!(fit.intercepts, g, epsilon = 1e-12);
    }
}
