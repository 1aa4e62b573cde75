//! Radial kernels on response distances and the ensemble Gram matrix.
//!
//! Column `i` of the Gram matrix holds the ensemble member `κ(·, Y_i)`
//! evaluated at every response.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Result, SdrError};
use crate::metrics::MetricKind;

/// Smallest Gram eigenvalue still accepted as positive semidefinite.
pub const PSD_TOL: f64 = -1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelFamily {
    /// `exp(-γ d²)`
    Gaussian,
    /// `exp(-γ d)`
    Laplacian,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gamma {
    /// Median heuristic on the observed distances.
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    pub family: KernelFamily,
    pub gamma: Gamma,
}

impl KernelSpec {
    pub fn gaussian() -> Self {
        Self {
            family: KernelFamily::Gaussian,
            gamma: Gamma::Auto,
        }
    }

    pub fn laplacian() -> Self {
        Self {
            family: KernelFamily::Laplacian,
            gamma: Gamma::Auto,
        }
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = Gamma::Fixed(gamma);
        self
    }

    pub fn validate(&self) -> Result<()> {
        match self.gamma {
            Gamma::Fixed(g) if !(g.is_finite() && g > 0.0) => {
                Err(SdrError::InvalidKernel(format!("gamma must be positive, got {g}")))
            }
            _ => Ok(()),
        }
    }
}

impl FromStr for KernelFamily {
    type Err = SdrError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" => Ok(KernelFamily::Gaussian),
            "laplacian" => Ok(KernelFamily::Laplacian),
            other => Err(SdrError::InvalidKernel(format!("unknown kernel family {other:?}"))),
        }
    }
}

impl fmt::Display for KernelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            KernelFamily::Gaussian => "gaussian",
            KernelFamily::Laplacian => "laplacian",
        })
    }
}

impl FromStr for Gamma {
    type Err = SdrError;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(Gamma::Auto);
        }
        let g: f64 = s
            .parse()
            .map_err(|_| SdrError::InvalidKernel(format!("gamma must be 'auto' or a number, got {s:?}")))?;
        let spec = KernelSpec {
            family: KernelFamily::Gaussian,
            gamma: Gamma::Fixed(g),
        };
        spec.validate()?;
        Ok(Gamma::Fixed(g))
    }
}

/// Whether `family` is a proven universal (hence positive definite) kernel
/// over the given metric. The Gaussian kernel of the geodesic distance on a
/// sphere is not positive definite.
pub fn is_universal(kind: MetricKind, family: KernelFamily) -> bool {
    !matches!((kind, family), (MetricKind::SphereGeodesic, KernelFamily::Gaussian))
}

/// Ensemble Gram matrix `κ(Y_j, Y_k)`.
#[derive(Debug, Clone)]
pub struct KernelGram {
    pub entries: DMatrix<f64>,
    pub spec: KernelSpec,
    pub gamma_used: f64,
}

impl KernelGram {
    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        SymmetricEigen::new(self.entries.clone()).eigenvalues.min()
    }

    pub fn is_psd(&self) -> bool {
        self.min_eigenvalue() >= PSD_TOL
    }
}

/// Resolve the bandwidth. With [`Gamma::Auto`], `med` is the median of the
/// strictly positive off-diagonal distances and the result is `1/(2 med²)`
/// for the Gaussian family and `1/med` for the Laplacian one.
pub fn select_gamma(d: &DMatrix<f64>, spec: &KernelSpec) -> Result<f64> {
    spec.validate()?;
    if let Gamma::Fixed(g) = spec.gamma {
        return Ok(g);
    }
    let med = median_positive_offdiag(d).ok_or(SdrError::DegenerateDistances)?;
    Ok(match spec.family {
        KernelFamily::Gaussian => 1.0 / (2.0 * med * med),
        KernelFamily::Laplacian => 1.0 / med,
    })
}

fn median_positive_offdiag(d: &DMatrix<f64>) -> Option<f64> {
    let n = d.nrows();
    // the off-diagonal multiset is two copies of the upper triangle, so the
    // median of the triangle is the median of the whole
    let mut vals: Vec<f64> = (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
        .map(|(i, j)| d[(i, j)])
        .filter(|v| *v > 0.0)
        .collect();
    if vals.is_empty() {
        return None;
    }
    vals.sort_by(f64::total_cmp);
    let m = vals.len();
    Some(if m % 2 == 1 {
        vals[m / 2]
    } else {
        0.5 * (vals[m / 2 - 1] + vals[m / 2])
    })
}

pub fn gram(d: &DMatrix<f64>, spec: &KernelSpec) -> Result<KernelGram> {
    if !d.is_square() {
        return Err(SdrError::ShapeMismatch("distance matrix must be square".into()));
    }
    let gamma = select_gamma(d, spec)?;
    let mut entries = match spec.family {
        KernelFamily::Gaussian => d.map(|v| (-gamma * v * v).exp()),
        KernelFamily::Laplacian => d.map(|v| (-gamma * v).exp()),
    };
    entries.fill_diagonal(1.0);
    Ok(KernelGram {
        entries,
        spec: *spec,
        gamma_used: gamma,
    })
}

/// Subtract each column's mean, giving `κ_c(Y_j, Y_i) = κ(Y_j, Y_i) - E_n κ(Y, Y_i)`.
pub fn center_columns(g: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = g.clone();
    for mut col in out.column_iter_mut() {
        let mean = col.mean();
        col.add_scalar_mut(-mean);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::E;

    fn const_offdiag(n: usize, v: f64) -> DMatrix<f64> {
        DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { v })
    }

    #[test]
    fn gamma_selection() {
        let d = const_offdiag(4, 2.0);
        assert_eq!(select_gamma(&d, &KernelSpec::gaussian().with_gamma(0.5)).unwrap(), 0.5);
        assert_abs_diff_eq!(select_gamma(&d, &KernelSpec::gaussian()).unwrap(), 0.125);

        let d = DMatrix::from_row_slice(3, 3, &[0., 1., 2., 1., 0., 3., 2., 3., 0.]);
        assert_abs_diff_eq!(select_gamma(&d, &KernelSpec::laplacian()).unwrap(), 0.5);

        assert!(matches!(
            select_gamma(&DMatrix::zeros(3, 3), &KernelSpec::gaussian()),
            Err(SdrError::DegenerateDistances)
        ));
        assert!(select_gamma(&d, &KernelSpec::gaussian().with_gamma(-1.0)).is_err());
    }

    #[test]
    fn median_skips_zero_distances() {
        // duplicates contribute zeros that are ignored
        let d = DMatrix::from_row_slice(3, 3, &[0., 0., 4., 0., 0., 4., 4., 4., 0.]);
        assert_abs_diff_eq!(select_gamma(&d, &KernelSpec::laplacian()).unwrap(), 0.25);
    }

    #[test]
    fn gram_entries() {
        let d = const_offdiag(3, 1.0);
        let g = gram(&d, &KernelSpec::gaussian().with_gamma(1.0)).unwrap();
        assert_eq!(g.entries[(1, 1)], 1.0);
        assert_abs_diff_eq!(g.entries[(0, 1)], (-1f64).exp());
        assert_abs_diff_eq!(g.entries[(0, 1)], 0.367879, epsilon = 1e-6);

        let d = const_offdiag(2, 0.5);
        let g = gram(&d, &KernelSpec::laplacian().with_gamma(2.0)).unwrap();
        assert_abs_diff_eq!(g.entries[(1, 0)], 1.0 / E);
        assert!(g.is_psd());
    }

    #[test]
    fn centering_examples() {
        let c = center_columns(&DMatrix::from_element(3, 2, 0.7));
        assert_abs_diff_eq!(c.amax(), 0.0);

        let c = center_columns(&DMatrix::from_column_slice(2, 1, &[0., 1.]));
        assert_eq!(c.as_slice(), &[-0.5, 0.5]);

        let e = (-1f64).exp();
        let g = DMatrix::from_row_slice(3, 3, &[1., e, e, e, 1., e, e, e, 1.]);
        let c = center_columns(&g);
        let mean = (1.0 + 2.0 * e) / 3.0;
        assert_abs_diff_eq!(c[(0, 0)], 1.0 - mean, epsilon = 1e-15);
        assert_abs_diff_eq!(c[(1, 0)], e - mean, epsilon = 1e-15);
        assert_abs_diff_eq!(c[(2, 0)], e - mean, epsilon = 1e-15);
    }

    #[test]
    fn universality_table() {
        assert!(!is_universal(MetricKind::SphereGeodesic, KernelFamily::Gaussian));
        assert!(is_universal(MetricKind::SphereGeodesic, KernelFamily::Laplacian));
        assert!(is_universal(MetricKind::Wasserstein2, KernelFamily::Gaussian));
        assert!(is_universal(MetricKind::SpdLogEuclidean, KernelFamily::Laplacian));
    }

    #[test]
    fn parse_specs() {
        assert_eq!("Gaussian".parse::<KernelFamily>().unwrap(), KernelFamily::Gaussian);
        assert_eq!("auto".parse::<Gamma>().unwrap(), Gamma::Auto);
        assert_eq!("0.25".parse::<Gamma>().unwrap(), Gamma::Fixed(0.25));
        assert!("0".parse::<Gamma>().is_err());
        assert!("cauchy".parse::<KernelFamily>().is_err());
    }
}
