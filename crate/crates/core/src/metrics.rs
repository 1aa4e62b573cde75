//! Response spaces and their distances.
//!
//! Three kinds of metric-space responses are supported: univariate
//! distributions observed through equal-size samples (2-Wasserstein),
//! symmetric positive definite matrices (Frobenius or log-Euclidean), and
//! points on a unit sphere (geodesic distance).

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;

use crate::error::{Result, SdrError};

/// Relative tolerance used to accept a matrix as symmetric.
pub const SYMMETRY_TOL: f64 = 1e-10;
/// Eigenvalues below this fraction of the largest one count as zero.
pub const SPD_EIGEN_FLOOR: f64 = 1e-12;
/// Tolerance on the norm of a [`UnitVector`].
pub const UNIT_TOL: f64 = 1e-10;

/// Univariate distribution represented by its sorted sample (order statistics).
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalDistribution {
    samples: Vec<f64>,
}

impl EmpiricalDistribution {
    pub fn new(mut samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(SdrError::Empty("distribution samples"));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(SdrError::NonFinite("distribution samples"));
        }
        samples.sort_by(f64::total_cmp);
        Ok(Self { samples })
    }

    /// Order statistics, ascending.
    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Symmetric positive definite matrix, validated on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdMatrix {
    entries: DMatrix<f64>,
}

impl SpdMatrix {
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        if !entries.is_square() {
            return Err(SdrError::ShapeMismatch(format!(
                "SPD matrix must be square, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        if entries.is_empty() {
            return Err(SdrError::Empty("SPD matrix"));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(SdrError::NonFinite("SPD matrix"));
        }
        check_symmetric(&entries)?;
        let entries = symmetrize(&entries);
        let eig = SymmetricEigen::new(entries.clone());
        check_spectrum(&eig.eigenvalues)?;
        Ok(Self { entries })
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }
}

/// Point on the unit sphere of some ambient dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitVector {
    coords: DVector<f64>,
}

impl UnitVector {
    /// Accepts `coords` only if its norm is within [`UNIT_TOL`] of one.
    pub fn new(coords: DVector<f64>) -> Result<Self> {
        Self::normalized(coords, UNIT_TOL)
    }

    /// Rescales `coords` to unit length when its norm is within `tol` of one.
    pub fn normalized(coords: DVector<f64>, tol: f64) -> Result<Self> {
        if coords.is_empty() {
            return Err(SdrError::Empty("unit vector"));
        }
        if coords.iter().any(|v| !v.is_finite()) {
            return Err(SdrError::NonFinite("unit vector"));
        }
        let norm = coords.norm();
        if (norm - 1.0).abs() > tol {
            return Err(SdrError::NotUnit { norm });
        }
        Ok(Self {
            coords: coords / norm,
        })
    }

    pub fn coords(&self) -> &DVector<f64> {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MetricKind {
    Wasserstein2,
    SpdFrobenius,
    SpdLogEuclidean,
    SphereGeodesic,
}

impl MetricKind {
    pub fn name(self) -> &'static str {
        match self {
            MetricKind::Wasserstein2 => "wasserstein2",
            MetricKind::SpdFrobenius => "spd-frobenius",
            MetricKind::SpdLogEuclidean => "spd-log-euclidean",
            MetricKind::SphereGeodesic => "sphere-geodesic",
        }
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MetricKind {
    type Err = SdrError;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.to_ascii_lowercase().replace('_', "-");
        [
            MetricKind::Wasserstein2,
            MetricKind::SpdFrobenius,
            MetricKind::SpdLogEuclidean,
            MetricKind::SphereGeodesic,
        ]
        .into_iter()
        .find(|k| k.name() == key)
        .ok_or_else(|| SdrError::InvalidArgument(format!("unknown metric {s:?}")))
    }
}

/// A homogeneous collection of responses.
#[derive(Debug, Clone)]
pub enum ResponseSet {
    Distributions(Vec<EmpiricalDistribution>),
    Spd(Vec<SpdMatrix>),
    Sphere(Vec<UnitVector>),
}

impl ResponseSet {
    pub fn len(&self) -> usize {
        match self {
            ResponseSet::Distributions(v) => v.len(),
            ResponseSet::Spd(v) => v.len(),
            ResponseSet::Sphere(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn space_name(&self) -> &'static str {
        match self {
            ResponseSet::Distributions(_) => "distribution",
            ResponseSet::Spd(_) => "spd",
            ResponseSet::Sphere(_) => "sphere",
        }
    }

    pub fn supports(&self, kind: MetricKind) -> bool {
        matches!(
            (self, kind),
            (ResponseSet::Distributions(_), MetricKind::Wasserstein2)
                | (ResponseSet::Spd(_), MetricKind::SpdFrobenius)
                | (ResponseSet::Spd(_), MetricKind::SpdLogEuclidean)
                | (ResponseSet::Sphere(_), MetricKind::SphereGeodesic)
        )
    }

    /// The metric used when none is requested explicitly.
    pub fn default_metric(&self) -> MetricKind {
        match self {
            ResponseSet::Distributions(_) => MetricKind::Wasserstein2,
            ResponseSet::Spd(_) => MetricKind::SpdFrobenius,
            ResponseSet::Sphere(_) => MetricKind::SphereGeodesic,
        }
    }
}

/// 2-Wasserstein distance between two empirical measures with equal sample
/// sizes, computed from matched order statistics.
pub fn wasserstein2(a: &EmpiricalDistribution, b: &EmpiricalDistribution) -> Result<f64> {
    if a.len() != b.len() {
        return Err(SdrError::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let sq: f64 = a
        .samples
        .iter()
        .zip(&b.samples)
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    let d = (sq / a.len() as f64).sqrt();
    if !d.is_finite() {
        return Err(SdrError::NonFinite("wasserstein distance"));
    }
    Ok(d)
}

pub fn spd_frobenius(a: &SpdMatrix, b: &SpdMatrix) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(SdrError::DimMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    Ok((&a.entries - &b.entries).norm())
}

/// Principal logarithm of an SPD matrix via its symmetric eigendecomposition.
pub fn matrix_log(a: &SpdMatrix) -> Result<DMatrix<f64>> {
    let eig = SymmetricEigen::new(a.entries.clone());
    check_spectrum(&eig.eigenvalues)?;
    Ok(spectral_map(&eig, f64::ln))
}

/// Exponential of a symmetric matrix via its symmetric eigendecomposition.
pub fn matrix_exp(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_symmetric(m)?;
    let eig = SymmetricEigen::new(symmetrize(m));
    Ok(spectral_map(&eig, f64::exp))
}

pub fn spd_log_euclidean(a: &SpdMatrix, b: &SpdMatrix) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(SdrError::DimMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    Ok((matrix_log(a)? - matrix_log(b)?).norm())
}

/// Great-circle distance `arccos(aᵀb)`, with the inner product clamped to
/// `[-1, 1]`.
pub fn sphere_geodesic(a: &UnitVector, b: &UnitVector) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(SdrError::DimMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    Ok(clamped_acos(a.coords.dot(&b.coords)))
}

pub(crate) fn clamped_acos(c: f64) -> f64 {
    c.clamp(-1.0, 1.0).acos()
}

/// All pairwise distances `D[i][j] = d(Y_i, Y_j)`.
///
/// Entries are computed independently (rows in parallel), so the result does
/// not depend on scheduling.
pub fn pairwise_distances(ys: &ResponseSet, kind: MetricKind) -> Result<DMatrix<f64>> {
    if !ys.supports(kind) {
        return Err(SdrError::IncompatibleMetric(ys.space_name(), kind.name()));
    }
    match ys {
        ResponseSet::Distributions(v) => fill_pairwise(v, wasserstein2),
        ResponseSet::Spd(v) => match kind {
            MetricKind::SpdFrobenius => fill_pairwise(v, spd_frobenius),
            _ => {
                // logs once per response instead of once per pair
                let logs = v
                    .iter()
                    .enumerate()
                    .map(|(i, a)| {
                        matrix_log(a).map_err(|e| SdrError::Pair {
                            i,
                            j: i,
                            source: Box::new(e),
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                for (i, w) in v.windows(2).enumerate() {
                    if w[0].dim() != w[1].dim() {
                        return Err(SdrError::Pair {
                            i,
                            j: i + 1,
                            source: Box::new(SdrError::DimMismatch {
                                left: w[0].dim(),
                                right: w[1].dim(),
                            }),
                        });
                    }
                }
                fill_pairwise(&logs, |a, b| Ok((a - b).norm()))
            }
        },
        ResponseSet::Sphere(v) => fill_pairwise(v, sphere_geodesic),
    }
}

fn fill_pairwise<T, F>(items: &[T], dist: F) -> Result<DMatrix<f64>>
where
    T: Sync,
    F: Fn(&T, &T) -> Result<f64> + Sync,
{
    let n = items.len();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            ((i + 1)..n)
                .map(|j| {
                    dist(&items[i], &items[j]).map_err(|e| SdrError::Pair {
                        i,
                        j,
                        source: Box::new(e),
                    })
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let mut d = DMatrix::zeros(n, n);
    for (i, row) in rows.iter().enumerate() {
        for (off, &v) in row.iter().enumerate() {
            let j = i + 1 + off;
            d[(i, j)] = v;
            d[(j, i)] = v;
        }
    }
    Ok(d)
}

pub(crate) fn check_symmetric(m: &DMatrix<f64>) -> Result<()> {
    if !m.is_square() {
        return Err(SdrError::ShapeMismatch(format!(
            "expected a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let scale = m.amax().max(1.0);
    let asymmetry = (m - m.transpose()).amax();
    if asymmetry > SYMMETRY_TOL * scale {
        return Err(SdrError::NotSymmetric { asymmetry });
    }
    Ok(())
}

pub(crate) fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

fn check_spectrum(eigenvalues: &DVector<f64>) -> Result<()> {
    let max = eigenvalues.max();
    let min = eigenvalues.min();
    let floor = SPD_EIGEN_FLOOR * max.max(0.0);
    if max <= 0.0 || min <= floor {
        return Err(SdrError::NotPositiveDefinite {
            min_eigenvalue: min,
            floor,
        });
    }
    Ok(())
}

/// `V f(Λ) Vᵀ` for a symmetric eigendecomposition.
pub(crate) fn spectral_map(eig: &SymmetricEigen<f64, nalgebra::Dyn>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let v = &eig.eigenvectors;
    let mapped = DVector::from_iterator(eig.eigenvalues.len(), eig.eigenvalues.iter().map(|&l| f(l)));
    let out = v * DMatrix::from_diagonal(&mapped) * v.transpose();
    symmetrize(&out)
}
