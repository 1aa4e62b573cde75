//! Ensembled inverse regression: SIR, SAVE and directional regression.
//!
//! For every ensemble member `κ(·, Y_i)` the kernel values are sliced and
//! the slice moments of the standardized predictors feed the classical
//! candidate matrix; the Fréchet candidate is the average over members.

use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::error::{Result, SdrError};
use crate::metrics::symmetrize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SliceScheme {
    /// Equal-width intervals over `[min, max]` of the kernel column.
    #[default]
    EqualWidth,
    /// Slices holding (nearly) equal numbers of observations.
    EqualFrequency,
}

impl SliceScheme {
    pub fn name(self) -> &'static str {
        match self {
            SliceScheme::EqualWidth => "equal-width",
            SliceScheme::EqualFrequency => "equal-frequency",
        }
    }
}

impl FromStr for SliceScheme {
    type Err = SdrError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "equal-width" | "width" => Ok(SliceScheme::EqualWidth),
            "equal-frequency" | "frequency" => Ok(SliceScheme::EqualFrequency),
            _ => Err(SdrError::InvalidArgument(format!("unknown slice scheme {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SliceSpec {
    pub s: usize,
    pub scheme: SliceScheme,
}

impl SliceSpec {
    pub fn new(s: usize, scheme: SliceScheme) -> Result<Self> {
        if s < 2 {
            return Err(SdrError::InvalidArgument(format!("need at least 2 slices, got {s}")));
        }
        Ok(Self { s, scheme })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InverseMethod {
    Sir,
    Save,
    Dr,
}

impl InverseMethod {
    /// `⌊n/2p⌋` for SIR and SAVE, `⌊n/50⌋` for DR; never below 2.
    pub fn auto_slices(self, n: usize, p: usize) -> usize {
        let s = match self {
            InverseMethod::Sir | InverseMethod::Save => n / (2 * p.max(1)),
            InverseMethod::Dr => n / 50,
        };
        s.max(2)
    }
}

/// Assign each kernel value to one of `s` equal-width slices of
/// `[min, max]`; intervals are half-open except the last.
pub fn slice_kernel_column(col: &[f64], s: usize) -> Result<Vec<usize>> {
    slice_column(col, SliceSpec::new(s, SliceScheme::EqualWidth)?)
}

pub fn slice_column(col: &[f64], spec: SliceSpec) -> Result<Vec<usize>> {
    let (min, max) = col
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if col.is_empty() || !(max > min) {
        return Err(SdrError::DegenerateColumn);
    }
    let s = spec.s;
    Ok(match spec.scheme {
        SliceScheme::EqualWidth => {
            let range = max - min;
            col.iter()
                .map(|&v| (((v - min) * s as f64 / range).floor() as usize).min(s - 1))
                .collect()
        }
        SliceScheme::EqualFrequency => {
            let n = col.len();
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| col[a].total_cmp(&col[b]));
            let mut out = vec![0; n];
            for (rank, &j) in order.iter().enumerate() {
                out[j] = rank * s / n;
            }
            out
        }
    })
}

/// Slice proportions `A_ℓ`, first-moment sums `B_ℓ` and second-moment sums
/// `C_ℓ`, each normalized by `n`.
#[derive(Debug, Clone)]
pub struct SliceMoments {
    pub proportions: Vec<f64>,
    /// `s × p`; row `ℓ` is `n⁻¹ Σ_{j∈ℓ} z_j`.
    pub sums: DMatrix<f64>,
    /// `n⁻¹ Σ_{j∈ℓ} z_j z_jᵀ` per slice.
    pub second: Vec<DMatrix<f64>>,
}

impl SliceMoments {
    pub fn s(&self) -> usize {
        self.proportions.len()
    }

    pub fn is_empty_slice(&self, l: usize) -> bool {
        self.proportions[l] == 0.0
    }

    /// `Ê_ℓ(Z)`, `None` for an empty slice.
    pub fn cond_mean(&self, l: usize) -> Option<DVector<f64>> {
        (!self.is_empty_slice(l)).then(|| self.sums.row(l).transpose() / self.proportions[l])
    }

    /// `Ê_ℓ(Z Zᵀ)`.
    pub fn cond_second(&self, l: usize) -> Option<DMatrix<f64>> {
        (!self.is_empty_slice(l)).then(|| &self.second[l] / self.proportions[l])
    }

    /// `V̂_ℓ(Z) = Ê_ℓ(ZZᵀ) − Ê_ℓ(Z) Ê_ℓ(Zᵀ)`.
    pub fn cond_var(&self, l: usize) -> Option<DMatrix<f64>> {
        let m = self.cond_mean(l)?;
        Some(symmetrize(&(self.cond_second(l)? - &m * m.transpose())))
    }

    fn occupied(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.s()).filter(|&l| !self.is_empty_slice(l))
    }
}

pub fn slice_moments(z: &DMatrix<f64>, assignment: &[usize], s: usize) -> Result<SliceMoments> {
    let (n, p) = z.shape();
    if assignment.len() != n {
        return Err(SdrError::ShapeMismatch(format!(
            "{} slice labels for {n} observations",
            assignment.len()
        )));
    }
    if let Some(&bad) = assignment.iter().find(|&&a| a >= s) {
        return Err(SdrError::InvalidArgument(format!("slice label {bad} out of range for {s} slices")));
    }
    let mut counts = vec![0usize; s];
    let mut sums = DMatrix::zeros(s, p);
    let mut second = vec![DMatrix::zeros(p, p); s];
    for (j, &l) in assignment.iter().enumerate() {
        let zj = z.row(j);
        counts[l] += 1;
        let mut row = sums.row_mut(l);
        row += zj;
        second[l] += zj.transpose() * zj;
    }
    let nf = n as f64;
    Ok(SliceMoments {
        proportions: counts.iter().map(|&c| c as f64 / nf).collect(),
        sums: sums / nf,
        second: second.into_iter().map(|m| m / nf).collect(),
    })
}

/// `s⁻¹ Σ_ℓ A_ℓ Ê_ℓ(Z) Ê_ℓ(Zᵀ)`.
pub fn sir_member(m: &SliceMoments) -> DMatrix<f64> {
    let p = m.sums.ncols();
    let mut out = DMatrix::zeros(p, p);
    for l in m.occupied() {
        let e = m.cond_mean(l).unwrap();
        out += &e * e.transpose() * m.proportions[l];
    }
    out / m.s() as f64
}

/// `s⁻¹ Σ_ℓ A_ℓ [I − V̂_ℓ(Z)]²`.
pub fn save_member(m: &SliceMoments) -> DMatrix<f64> {
    let p = m.sums.ncols();
    let eye = DMatrix::<f64>::identity(p, p);
    let mut out = DMatrix::zeros(p, p);
    for l in m.occupied() {
        let d = &eye - m.cond_var(l).unwrap();
        out += &d * &d * m.proportions[l];
    }
    symmetrize(&(out / m.s() as f64))
}

/// Directional regression member
/// `2 Σ A_ℓ Ê_ℓ(ZZᵀ)² + 2 (Σ A_ℓ Ê_ℓ Ê_ℓᵀ)² + 2 tr(Σ A_ℓ Ê_ℓ Ê_ℓᵀ) Σ A_ℓ Ê_ℓ Ê_ℓᵀ − 2I`,
/// with slice proportions as the expectation weights.
pub fn dr_member(m: &SliceMoments) -> DMatrix<f64> {
    let p = m.sums.ncols();
    let mut squared_second = DMatrix::zeros(p, p);
    let mut mean_outer = DMatrix::zeros(p, p);
    for l in m.occupied() {
        let a = m.proportions[l];
        let e2 = m.cond_second(l).unwrap();
        squared_second += &e2 * &e2 * a;
        let e = m.cond_mean(l).unwrap();
        mean_outer += &e * e.transpose() * a;
    }
    let tr = mean_outer.trace();
    let out = squared_second * 2.0 + &mean_outer * &mean_outer * 2.0 + &mean_outer * (2.0 * tr)
        - DMatrix::<f64>::identity(p, p) * 2.0;
    symmetrize(&out)
}

/// Averaged candidate plus the members that had to be skipped.
#[derive(Debug, Clone)]
pub struct InverseCandidate {
    pub matrix: DMatrix<f64>,
    pub skipped: Vec<usize>,
}

/// Average the per-member candidates over the kernel ensemble. Constant
/// kernel columns are skipped; more than half skipped is an error.
pub fn inverse_candidate(
    z: &DMatrix<f64>,
    gram: &DMatrix<f64>,
    method: InverseMethod,
    spec: SliceSpec,
) -> Result<InverseCandidate> {
    let (n, p) = z.shape();
    if gram.nrows() != n || !gram.is_square() {
        return Err(SdrError::ShapeMismatch(format!(
            "predictors have {n} rows but the Gram matrix is {}x{}",
            gram.nrows(),
            gram.ncols()
        )));
    }
    let member = match method {
        InverseMethod::Sir => sir_member,
        InverseMethod::Save => save_member,
        InverseMethod::Dr => dr_member,
    };
    let mut total = DMatrix::zeros(p, p);
    let mut skipped = Vec::new();
    for i in 0..gram.ncols() {
        let col: Vec<f64> = gram.column(i).iter().copied().collect();
        match slice_column(&col, spec) {
            Ok(assignment) => {
                let moments = slice_moments(z, &assignment, spec.s)?;
                total += member(&moments);
            }
            Err(SdrError::DegenerateColumn) => skipped.push(i),
            Err(e) => return Err(e),
        }
    }
    let members = gram.ncols();
    if skipped.len() == members {
        return Err(SdrError::DegenerateColumn);
    }
    if 2 * skipped.len() > members {
        return Err(SdrError::TooManyDegenerate {
            skipped: skipped.len(),
            total: members,
        });
    }
    if !skipped.is_empty() {
        log::warn!("{} of {members} ensemble members have constant kernel columns and were skipped", skipped.len());
    }
    // average over all members; a skipped member contributes zero
    Ok(InverseCandidate {
        matrix: symmetrize(&(total / members as f64)),
        skipped,
    })
}

pub fn fsir_candidate(z: &DMatrix<f64>, gram: &DMatrix<f64>, s: usize) -> Result<DMatrix<f64>> {
    inverse_candidate(z, gram, InverseMethod::Sir, SliceSpec::new(s, SliceScheme::EqualWidth)?).map(|c| c.matrix)
}

pub fn fsave_candidate(z: &DMatrix<f64>, gram: &DMatrix<f64>, s: usize) -> Result<DMatrix<f64>> {
    inverse_candidate(z, gram, InverseMethod::Save, SliceSpec::new(s, SliceScheme::EqualWidth)?).map(|c| c.matrix)
}

pub fn fdr_candidate(z: &DMatrix<f64>, gram: &DMatrix<f64>, s: usize) -> Result<DMatrix<f64>> {
    inverse_candidate(z, gram, InverseMethod::Dr, SliceSpec::new(s, SliceScheme::EqualWidth)?).map(|c| c.matrix)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use crate::linalg::{standardize_full, PredictorMatrix, Ridge};

    fn standardized(n: usize, p: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = DMatrix::from_fn(n, p, |_, _| rng.random::<f64>());
        standardize_full(&PredictorMatrix::new(x).unwrap(), Ridge::Disabled).unwrap().z
    }

    #[test]
    fn slicing_examples() {
        assert_eq!(slice_kernel_column(&[0., 1.], 2).unwrap(), vec![0, 1]);
        assert_eq!(slice_kernel_column(&[0., 0.49, 0.51, 1.], 2).unwrap(), vec![0, 0, 1, 1]);
        let grid: Vec<f64> = (0..10).map(|k| k as f64 / 9.0).collect();
        let a = slice_kernel_column(&grid, 5).unwrap();
        for l in 0..5 {
            assert_eq!(a.iter().filter(|&&x| x == l).count(), 2);
        }
        assert!(matches!(slice_kernel_column(&[0.3, 0.3], 2), Err(SdrError::DegenerateColumn)));
        assert!(slice_kernel_column(&[0., 1.], 1).is_err());
    }

    #[test]
    fn equal_frequency_balances_counts() {
        let col = [0.9, 0.1, 0.5, 0.7, 0.3, 0.2];
        let a = slice_column(&col, SliceSpec::new(3, SliceScheme::EqualFrequency).unwrap()).unwrap();
        assert_eq!(a, vec![2, 0, 1, 2, 1, 0]);
    }

    #[test]
    fn single_slice_moments_of_standardized_data() {
        let z = standardized(50, 3, 1);
        let m = slice_moments(&z, &vec![0; 50], 1).unwrap();
        assert_abs_diff_eq!(m.cond_mean(0).unwrap().amax(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(m.cond_var(0).unwrap(), DMatrix::identity(3, 3), epsilon = 1e-8);
    }

    #[test]
    fn two_point_slices() {
        let z = DMatrix::from_column_slice(2, 1, &[-1., 1.]);
        let m = slice_moments(&z, &[0, 1], 2).unwrap();
        assert_eq!(m.cond_mean(0).unwrap()[0], -1.0);
        assert_eq!(m.cond_mean(1).unwrap()[0], 1.0);
        assert_eq!(m.proportions, vec![0.5, 0.5]);
    }

    #[test]
    fn empty_slices_are_flagged() {
        let z = DMatrix::from_column_slice(3, 1, &[-1., 0., 1.]);
        let m = slice_moments(&z, &[0, 0, 2], 3).unwrap();
        assert!(m.is_empty_slice(1));
        assert!(m.cond_mean(1).is_none());
        assert!(sir_member(&m).iter().all(|v| v.is_finite()));
    }

    #[test]
    fn save_vanishes_for_identity_variance() {
        let z = standardized(40, 2, 2);
        let m = slice_moments(&z, &vec![0; 40], 1).unwrap();
        assert_abs_diff_eq!(save_member(&m).amax(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn weighted_slice_means_sum_to_zero() {
        let z = standardized(60, 4, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a: Vec<usize> = (0..60).map(|_| rng.random_range(0..5)).collect();
        let m = slice_moments(&z, &a, 5).unwrap();
        let total: DVector<f64> = (0..5)
            .filter_map(|l| m.cond_mean(l).map(|e| e * m.proportions[l]))
            .fold(DVector::zeros(4), |acc, v| acc + v);
        assert_abs_diff_eq!(total.amax(), 0.0, epsilon = 1e-10);
        assert_abs_diff_eq!(m.proportions.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn degenerate_members() {
        let z = standardized(6, 2, 4);
        let g = DMatrix::from_element(6, 6, 1.0);
        assert!(matches!(fsir_candidate(&z, &g, 2), Err(SdrError::DegenerateColumn)));
        assert!(matches!(fdr_candidate(&z, &g, 2), Err(SdrError::DegenerateColumn)));

        // four of six columns constant
        let mut g = DMatrix::from_element(6, 6, 0.5);
        for j in 0..6 {
            g[(j, 0)] = j as f64 / 5.0;
            g[(j, 1)] = 1.0 - j as f64 / 5.0;
        }
        assert!(matches!(
            fsir_candidate(&z, &g, 2),
            Err(SdrError::TooManyDegenerate { skipped: 4, total: 6 })
        ));
        // two of six constant is tolerated
        for c in 2..4 {
            for j in 0..6 {
                g[(j, c)] = (j * c % 5) as f64;
            }
        }
        let cand = inverse_candidate(&z, &g, InverseMethod::Sir, SliceSpec::new(2, SliceScheme::EqualWidth).unwrap()).unwrap();
        assert_eq!(cand.skipped, vec![4, 5]);
    }

    #[test]
    fn auto_slice_counts() {
        assert_eq!(InverseMethod::Sir.auto_slices(200, 10), 10);
        assert_eq!(InverseMethod::Save.auto_slices(200, 10), 10);
        assert_eq!(InverseMethod::Dr.auto_slices(200, 10), 4);
        assert_eq!(InverseMethod::Dr.auto_slices(60, 10), 2);
        assert_eq!(InverseMethod::Sir.auto_slices(20, 30), 2);
    }
}
