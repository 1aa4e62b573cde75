//! Shared numerical primitives: predictor standardization, symmetric
//! eigendecomposition helpers and subspace distances.
//!
//! Every variance uses divisor `n`, matching the empirical mean `E_n`.

use std::str::FromStr;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Result, SdrError};
use crate::metrics::{check_symmetric, symmetrize};

/// Euclidean predictors, one row per observation.
#[derive(Debug, Clone)]
pub struct PredictorMatrix {
    x: DMatrix<f64>,
    names: Option<Vec<String>>,
}

impl PredictorMatrix {
    pub fn new(x: DMatrix<f64>) -> Result<Self> {
        if x.nrows() < 2 {
            return Err(SdrError::InvalidArgument(format!(
                "need at least two observations, got {}",
                x.nrows()
            )));
        }
        if x.ncols() == 0 {
            return Err(SdrError::Empty("predictor columns"));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(SdrError::NonFinite("predictors"));
        }
        Ok(Self { x, names: None })
    }

    pub fn with_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.p() {
            return Err(SdrError::DimMismatch {
                left: names.len(),
                right: self.p(),
            });
        }
        self.names = Some(names);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn names(&self) -> Option<&[String]> {
        self.names.as_deref()
    }
}

/// Estimated basis of a central subspace with the spectrum it came from.
#[derive(Debug, Clone)]
pub struct SubspaceEstimate {
    /// `p × d0`, orthonormal columns.
    pub basis: DMatrix<f64>,
    /// Full spectrum in ranking order.
    pub eigenvalues: Vec<f64>,
    pub estimator: String,
}

/// Regularization added to covariance eigenvalues before inversion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Ridge {
    /// `1e-10 · trace / p`
    Default,
    Value(f64),
    Disabled,
}

impl Ridge {
    fn resolve(self, m: &DMatrix<f64>) -> f64 {
        match self {
            Ridge::Default => 1e-10 * m.trace() / m.nrows() as f64,
            Ridge::Value(v) => v,
            Ridge::Disabled => 0.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FullStandardization {
    pub z: DMatrix<f64>,
    pub mean: DVector<f64>,
    pub sigma_inv_sqrt: DMatrix<f64>,
}

pub fn column_means(x: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_iterator(x.ncols(), x.column_iter().map(|c| c.mean()))
}

fn centered(x: &DMatrix<f64>, mean: &DVector<f64>) -> DMatrix<f64> {
    let mut c = x.clone();
    for (j, mut col) in c.column_iter_mut().enumerate() {
        col.add_scalar_mut(-mean[j]);
    }
    c
}

/// Sample covariance with divisor `n`.
pub fn covariance(x: &DMatrix<f64>) -> DMatrix<f64> {
    let c = centered(x, &column_means(x));
    symmetrize(&(c.transpose() * &c / x.nrows() as f64))
}

/// `Z_i = Σ̂^{-1/2}(X_i − μ̂)`.
pub fn standardize_full(x: &PredictorMatrix, ridge: Ridge) -> Result<FullStandardization> {
    let mean = column_means(x.matrix());
    let c = centered(x.matrix(), &mean);
    let cov = symmetrize(&(c.transpose() * &c / x.n() as f64));
    if cov.diagonal().iter().any(|v| *v <= 0.0) {
        return Err(SdrError::SingularCovariance { min_eigenvalue: 0.0 });
    }
    if ridge == Ridge::Disabled {
        let eig = SymmetricEigen::new(cov.clone());
        let (min, max) = (eig.eigenvalues.min(), eig.eigenvalues.max());
        if min <= 1e-12 * max {
            return Err(SdrError::SingularCovariance { min_eigenvalue: min });
        }
    }
    let sigma_inv_sqrt = inv_sqrt_psd(&cov, ridge.resolve(&cov))?;
    let z = c * &sigma_inv_sqrt;
    Ok(FullStandardization {
        z,
        mean,
        sigma_inv_sqrt,
    })
}

/// Per-column centering and scaling to unit standard deviation.
pub fn standardize_marginal(x: &PredictorMatrix) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let n = x.n() as f64;
    let mean = column_means(x.matrix());
    let mut z = centered(x.matrix(), &mean);
    let mut sds = DVector::zeros(x.p());
    for (j, mut col) in z.column_iter_mut().enumerate() {
        let sd = (col.norm_squared() / n).sqrt();
        if sd <= 0.0 {
            return Err(SdrError::ZeroVariance(j));
        }
        col /= sd;
        sds[j] = sd;
    }
    Ok((z, sds))
}

/// Inverse square root with each eigenvalue `λ` mapped to `(λ + ridge)^{-1/2}`.
pub fn inv_sqrt_psd(m: &DMatrix<f64>, ridge: f64) -> Result<DMatrix<f64>> {
    check_symmetric(m)?;
    let eig = SymmetricEigen::new(symmetrize(m));
    if let Some(bad) = eig.eigenvalues.iter().find(|l| **l + ridge <= 0.0) {
        return Err(SdrError::NotPositiveDefinite {
            min_eigenvalue: *bad,
            floor: -ridge,
        });
    }
    Ok(crate::metrics::spectral_map(&eig, |l| 1.0 / (l + ridge).sqrt()))
}

/// How eigenvalues are ordered when picking leading eigenvectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ranking {
    Largest,
    /// Largest absolute value, for symmetric indefinite candidates.
    Magnitude,
}

impl FromStr for Ranking {
    type Err = SdrError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "largest" | "signed" => Ok(Ranking::Largest),
            "magnitude" | "abs" => Ok(Ranking::Magnitude),
            _ => Err(SdrError::InvalidArgument(format!("unknown eigenvalue ranking {s:?}"))),
        }
    }
}

/// Eigenpairs of a symmetric matrix sorted by `ranking`, eigenvectors in
/// columns with the sign convention of [`fix_signs`].
pub fn sorted_eigen(m: &DMatrix<f64>, ranking: Ranking) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(symmetrize(m));
    let p = m.nrows();
    let key = |l: f64| match ranking {
        Ranking::Largest => l,
        Ranking::Magnitude => l.abs(),
    };
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| key(eig.eigenvalues[b]).total_cmp(&key(eig.eigenvalues[a])));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(p, p);
    for (k, &i) in order.iter().enumerate() {
        vectors.set_column(k, &eig.eigenvectors.column(i));
    }
    fix_signs(&mut vectors);
    (values, vectors)
}

/// Leading `d0` eigenvectors of a symmetric matrix; the full spectrum is kept
/// for scree output.
pub fn top_eigenvectors(m: &DMatrix<f64>, d0: usize) -> Result<SubspaceEstimate> {
    top_eigenvectors_ranked(m, d0, Ranking::Largest)
}

pub fn top_eigenvectors_ranked(m: &DMatrix<f64>, d0: usize, ranking: Ranking) -> Result<SubspaceEstimate> {
    if !m.is_square() {
        return Err(SdrError::ShapeMismatch("candidate matrix must be square".into()));
    }
    if d0 == 0 || d0 > m.nrows() {
        return Err(SdrError::InvalidArgument(format!(
            "d0 must lie in [1, {}], got {d0}",
            m.nrows()
        )));
    }
    let (eigenvalues, vectors) = sorted_eigen(m, ranking);
    Ok(SubspaceEstimate {
        basis: vectors.columns(0, d0).into_owned(),
        eigenvalues,
        estimator: String::new(),
    })
}

/// Make the largest-magnitude entry of every column positive; near ties
/// resolve to the lowest index.
pub fn fix_signs(b: &mut DMatrix<f64>) {
    for mut col in b.column_iter_mut() {
        // ties within rounding go to the first such entry
        let max = col.amax();
        let best = col.iter().position(|v| v.abs() >= max * (1.0 - 1e-10)).unwrap_or(0);
        if col[best] < 0.0 {
            col.neg_mut();
        }
    }
}

/// Orthonormal basis of the column space of `b` (thin QR), sign-normalized.
pub fn orthonormalize(b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let q = orthonormal_columns(b)?;
    let mut q = q;
    fix_signs(&mut q);
    Ok(q)
}

fn orthonormal_columns(b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if b.ncols() == 0 || b.ncols() > b.nrows() {
        return Err(SdrError::RankDeficient);
    }
    if b.iter().any(|v| !v.is_finite()) {
        return Err(SdrError::NonFinite("basis"));
    }
    let qr = b.clone().qr();
    let r = qr.r();
    let diag_max = r.diagonal().amax();
    if diag_max == 0.0 || r.diagonal().iter().any(|v| v.abs() <= 1e-12 * diag_max) {
        return Err(SdrError::RankDeficient);
    }
    Ok(qr.q())
}

/// Orthogonal projector onto the column space of `b`.
pub fn projection_matrix(b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let q = orthonormal_columns(b)?;
    Ok(&q * q.transpose())
}

/// `‖P_{b1} − P_{b2}‖_F`.
pub fn projection_distance(b1: &DMatrix<f64>, b2: &DMatrix<f64>) -> Result<f64> {
    if b1.nrows() != b2.nrows() {
        return Err(SdrError::DimMismatch {
            left: b1.nrows(),
            right: b2.nrows(),
        });
    }
    Ok((projection_matrix(b1)? - projection_matrix(b2)?).norm())
}

/// Uniformly distributed `d`-dimensional subspace of `R^p`, as an
/// orthonormalized standard normal matrix.
pub fn random_subspace<R: rand::Rng + ?Sized>(p: usize, d: usize, rng: &mut R) -> DMatrix<f64> {
    loop {
        let g = DMatrix::from_fn(p, d, |_, _| StandardNormal.sample(rng));
        if let Ok(q) = orthonormal_columns(&g) {
            return q;
        }
    }
}

/// Monte Carlo mean distance between two independent uniformly random
/// `d0`-dimensional subspaces of `R^p`; the error a guess would make.
pub fn benchmark_distance(p: usize, d0: usize, reps: usize, seed: u64) -> Result<f64> {
    if reps == 0 {
        return Err(SdrError::InvalidArgument("reps must be at least 1".into()));
    }
    if d0 == 0 || d0 > p {
        return Err(SdrError::InvalidArgument(format!("d0 must lie in [1, {p}]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut total = 0.0;
    for _ in 0..reps {
        let a = random_subspace(p, d0, &mut rng);
        let b = random_subspace(p, d0, &mut rng);
        total += projection_distance(&a, &b)?;
    }
    Ok(total / reps as f64)
}
