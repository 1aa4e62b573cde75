//! Estimator dispatch: response distances, ensemble Gram matrix, candidate
//! matrix and basis, collected into a [`FitReport`].

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::error::{Result, SdrError, StageExt};
use crate::forward::{fmave_fit, fopg_fit, DEFAULT_MAX_ITER};
use crate::inverse::{inverse_candidate, InverseMethod, SliceScheme, SliceSpec};
use crate::kernels::{gram, is_universal, KernelFamily, KernelGram, KernelSpec};
use crate::linalg::{
    orthonormalize, projection_distance, standardize_full, top_eigenvectors_ranked, PredictorMatrix, Ranking, Ridge,
};
use crate::metrics::{pairwise_distances, MetricKind, ResponseSet};
use crate::moment::{default_iht_power, moment_candidate, MomentMethod};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Fols,
    Fphd,
    Fiht,
    Fsir,
    Fsave,
    Fdr,
    Fopg,
    Rfopg,
    Fmave,
    Rfmave,
}

impl Method {
    pub const ALL: [Method; 10] = [
        Method::Rfopg,
        Method::Rfmave,
        Method::Fols,
        Method::Fphd,
        Method::Fiht,
        Method::Fsir,
        Method::Fsave,
        Method::Fdr,
        Method::Fopg,
        Method::Fmave,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Fols => "fols",
            Method::Fphd => "fphd",
            Method::Fiht => "fiht",
            Method::Fsir => "fsir",
            Method::Fsave => "fsave",
            Method::Fdr => "fdr",
            Method::Fopg => "fopg",
            Method::Rfopg => "rfopg",
            Method::Fmave => "fmave",
            Method::Rfmave => "rfmave",
        }
    }

    /// Column label as printed in result tables.
    pub fn label(self) -> &'static str {
        match self {
            Method::Fols => "FOLS",
            Method::Fphd => "FPHD",
            Method::Fiht => "FIHT",
            Method::Fsir => "FSIR",
            Method::Fsave => "FSAVE",
            Method::Fdr => "FDR",
            Method::Fopg => "FOPG",
            Method::Rfopg => "rFOPG",
            Method::Fmave => "FMAVE",
            Method::Rfmave => "rFMAVE",
        }
    }

    fn inverse(self) -> Option<InverseMethod> {
        match self {
            Method::Fsir => Some(InverseMethod::Sir),
            Method::Fsave => Some(InverseMethod::Save),
            Method::Fdr => Some(InverseMethod::Dr),
            _ => None,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = SdrError;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.to_ascii_lowercase();
        Method::ALL
            .into_iter()
            .find(|m| m.name() == key)
            .ok_or_else(|| SdrError::InvalidArgument(format!("unknown method {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SliceCount {
    /// `⌊n/2p⌋` for FSIR and FSAVE, `⌊n/50⌋` for FDR, at least 2.
    #[default]
    Auto,
    Fixed(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub method: Method,
    pub d0: usize,
    pub kernel: KernelSpec,
    /// Defaults to the natural metric of the response space.
    pub metric: Option<MetricKind>,
    pub slices: SliceCount,
    pub scheme: SliceScheme,
    /// Hessian power for FIHT; defaults to `min(p − 1, 10)`.
    pub iht_power: Option<usize>,
    /// Eigenvalue order for the indefinite FPHD candidate.
    pub phd_ranking: Ranking,
    pub max_iter: usize,
    pub ridge: Ridge,
    /// Warn when the Gram matrix has a negative eigenvalue below tolerance.
    pub check_psd: bool,
    /// Permit kernel and metric pairs that are not positive definite.
    pub allow_indefinite: bool,
}

impl FitOptions {
    pub fn new(method: Method, d0: usize) -> Self {
        Self {
            method,
            d0,
            kernel: KernelSpec::gaussian(),
            metric: None,
            slices: SliceCount::Auto,
            scheme: SliceScheme::EqualWidth,
            iht_power: None,
            phd_ranking: Ranking::Largest,
            max_iter: DEFAULT_MAX_ITER,
            ridge: Ridge::Default,
            check_psd: true,
            allow_indefinite: false,
        }
    }

    pub fn with_kernel(mut self, kernel: KernelSpec) -> Self {
        self.kernel = kernel;
        self
    }
}

/// Every tuning value a fit actually used.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyperparameters {
    pub metric: MetricKind,
    pub kernel: KernelFamily,
    pub gamma: f64,
    pub bandwidths: Vec<f64>,
    pub slices: Option<usize>,
    pub slice_scheme: Option<SliceScheme>,
    pub iht_power: Option<usize>,
    pub max_iter: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct FitReport {
    pub method: Method,
    pub d0: usize,
    pub hyper: Hyperparameters,
    /// Full candidate spectrum in ranking order (by magnitude for FPHD).
    pub eigenvalues: Vec<f64>,
    /// `p × d0`, orthonormal, on the original predictor scale.
    pub basis: DMatrix<f64>,
    /// `X B̂`, `n × d0`.
    pub sufficient_predictors: DMatrix<f64>,
    /// Distance to a supplied true basis.
    pub error: Option<f64>,
    pub warnings: Vec<String>,
}

impl FitReport {
    pub fn compare_truth(&mut self, b0: &DMatrix<f64>) -> Result<f64> {
        let e = projection_distance(&self.basis, b0)?;
        self.error = Some(e);
        Ok(e)
    }
}

/// Distances and Gram matrix for the responses, with kernel policy checks.
/// Returns the Gram matrix, the metric used and any warnings.
pub fn ensemble_gram(ys: &ResponseSet, opts: &FitOptions) -> Result<(KernelGram, MetricKind, Vec<String>)> {
    let metric = opts.metric.unwrap_or_else(|| ys.default_metric());
    if !is_universal(metric, opts.kernel.family) && !opts.allow_indefinite {
        return Err(SdrError::InvalidKernel(format!(
            "the {} kernel of the {} distance is not positive definite; choose the laplacian kernel or allow indefinite kernels",
            opts.kernel.family,
            metric.name()
        )));
    }
    let d = pairwise_distances(ys, metric).stage("distances")?;
    let g = gram(&d, &opts.kernel).stage("kernel")?;
    let mut warnings = Vec::new();
    if opts.check_psd {
        let min = g.min_eigenvalue();
        if min < crate::kernels::PSD_TOL {
            let msg = format!("Gram matrix is not positive semidefinite (smallest eigenvalue {min:.3e})");
            log::warn!("{msg}");
            warnings.push(msg);
        }
    }
    Ok((g, metric, warnings))
}

/// Fit `opts.method` to predictors `x` and responses `ys`.
pub fn fit(x: &PredictorMatrix, ys: &ResponseSet, opts: &FitOptions) -> Result<FitReport> {
    if ys.len() != x.n() {
        return Err(SdrError::LengthMismatch {
            left: x.n(),
            right: ys.len(),
        })
        .stage("input");
    }
    let (g, metric, warnings) = ensemble_gram(ys, opts)?;
    let mut report = fit_with_gram(x, &g, metric, opts)?;
    report.warnings.splice(0..0, warnings);
    Ok(report)
}

fn check_d0(d0: usize, p: usize) -> Result<()> {
    if d0 == 0 || d0 > p {
        return Err(SdrError::InvalidArgument(format!("d0 must lie in [1, {p}], got {d0}")));
    }
    Ok(())
}

/// Fit from a precomputed ensemble Gram matrix.
pub fn fit_with_gram(x: &PredictorMatrix, g: &KernelGram, metric: MetricKind, opts: &FitOptions) -> Result<FitReport> {
    let (n, p) = (x.n(), x.p());
    check_d0(opts.d0, p).stage("options")?;
    if g.n() != n {
        return Err(SdrError::LengthMismatch { left: n, right: g.n() }).stage("input");
    }
    let mut hyper = Hyperparameters {
        metric,
        kernel: opts.kernel.family,
        gamma: g.gamma_used,
        bandwidths: Vec::new(),
        slices: None,
        slice_scheme: None,
        iht_power: None,
        max_iter: None,
    };
    let mut warnings = Vec::new();
    let (basis, eigenvalues) = match opts.method {
        Method::Fopg | Method::Rfopg | Method::Fmave | Method::Rfmave => {
            let refine = matches!(opts.method, Method::Rfopg | Method::Rfmave);
            let out = if matches!(opts.method, Method::Fopg | Method::Rfopg) {
                fopg_fit(x, &g.entries, opts.d0, refine, opts.max_iter)
            } else {
                fmave_fit(x, &g.entries, opts.d0, refine, opts.max_iter)
            }
            .stage("forward regression")?;
            hyper.bandwidths = out.bandwidths;
            hyper.max_iter = (opts.method != Method::Fopg).then_some(opts.max_iter);
            if out.skipped_centers > 0 {
                warnings.push(format!("{} singular local fits skipped", out.skipped_centers));
            }
            (out.basis, out.eigenvalues)
        }
        _ => {
            let (m, ranking) = candidate_matrix(x, g, opts, &mut hyper, &mut warnings)?;
            let std = standardize_full(x, opts.ridge).stage("standardize")?;
            let est = top_eigenvectors_ranked(&m, opts.d0, ranking).stage("eigen")?;
            let u = &std.sigma_inv_sqrt * est.basis;
            (orthonormalize(&u).stage("back-transform")?, est.eigenvalues)
        }
    };
    let sufficient_predictors = x.matrix() * &basis;
    Ok(FitReport {
        method: opts.method,
        d0: opts.d0,
        hyper,
        eigenvalues,
        basis,
        sufficient_predictors,
        error: None,
        warnings,
    })
}

fn candidate_matrix(
    x: &PredictorMatrix,
    g: &KernelGram,
    opts: &FitOptions,
    hyper: &mut Hyperparameters,
    warnings: &mut Vec<String>,
) -> Result<(DMatrix<f64>, Ranking)> {
    let (n, p) = (x.n(), x.p());
    let z = standardize_full(x, opts.ridge).stage("standardize")?.z;
    if let Some(inv) = opts.method.inverse() {
        let s = match opts.slices {
            SliceCount::Auto => inv.auto_slices(n, p),
            SliceCount::Fixed(s) => s,
        };
        let spec = SliceSpec::new(s, opts.scheme).stage("options")?;
        hyper.slices = Some(s);
        hyper.slice_scheme = Some(opts.scheme);
        let cand = inverse_candidate(&z, &g.entries, inv, spec).stage("candidate")?;
        if !cand.skipped.is_empty() {
            warnings.push(format!("{} constant kernel columns skipped", cand.skipped.len()));
        }
        return Ok((cand.matrix, Ranking::Largest));
    }
    let (method, ranking) = match opts.method {
        Method::Fols => (MomentMethod::Ols, Ranking::Largest),
        Method::Fphd => (MomentMethod::Phd, opts.phd_ranking),
        _ => {
            let r = opts.iht_power.unwrap_or_else(|| default_iht_power(p));
            hyper.iht_power = Some(r);
            (MomentMethod::Iht { r }, Ranking::Largest)
        }
    };
    Ok((moment_candidate(&z, &g.entries, method).stage("candidate")?, ranking))
}

/// Full candidate spectrum without extracting a basis.
pub fn scree(x: &PredictorMatrix, ys: &ResponseSet, opts: &FitOptions) -> Result<(Vec<f64>, Hyperparameters)> {
    let report = fit(x, ys, &FitOptions { d0: 1, ..*opts })?;
    Ok((report.eigenvalues, report.hyper))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::{generate, ModelId, SimConfig};

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
            assert_eq!(m.label().parse::<Method>().unwrap(), m);
        }
        assert!("wire".parse::<Method>().is_err());
    }

    #[test]
    fn sphere_with_gaussian_kernel_is_refused() {
        let d = generate(&SimConfig::new(ModelId::III1, 20, 3, 1)).unwrap();
        let opts = FitOptions::new(Method::Fols, 1);
        let err = fit(&d.x, &d.ys, &opts).unwrap_err();
        assert!(matches!(err, SdrError::InvalidKernel(_)));
        let opts = FitOptions {
            allow_indefinite: true,
            ..opts
        };
        assert!(fit(&d.x, &d.ys, &opts).is_ok());
    }

    #[test]
    fn report_shapes_and_hyperparameters() {
        let d = generate(&SimConfig { m: 20, ..SimConfig::new(ModelId::I2, 60, 5, 2) }).unwrap();
        for m in Method::ALL {
            let opts = FitOptions {
                max_iter: 2,
                ..FitOptions::new(m, 2)
            };
            let r = fit(&d.x, &d.ys, &opts).unwrap();
            assert_eq!(r.basis.shape(), (5, 2));
            assert_eq!(r.sufficient_predictors.shape(), (60, 2));
            assert_eq!(r.eigenvalues.len(), 5);
            let gram = r.basis.transpose() * &r.basis;
            assert!((gram - DMatrix::<f64>::identity(2, 2)).amax() < 1e-10);
            assert!(r.hyper.gamma > 0.0);
            match m {
                Method::Fsir | Method::Fsave => assert_eq!(r.hyper.slices, Some(6)),
                Method::Fdr => assert_eq!(r.hyper.slices, Some(2)),
                Method::Fiht => assert_eq!(r.hyper.iht_power, Some(4)),
                Method::Fopg => assert_eq!(r.hyper.bandwidths.len(), 1),
                Method::Rfopg | Method::Fmave | Method::Rfmave => assert_eq!(r.hyper.bandwidths.len(), 2),
                _ => {}
            }
        }
    }

    #[test]
    fn bad_d0_is_a_stage_error() {
        let d = generate(&SimConfig { m: 5, ..SimConfig::new(ModelId::I1, 20, 4, 3) }).unwrap();
        let err = fit(&d.x, &d.ys, &FitOptions::new(Method::Fols, 5)).unwrap_err();
        assert!(matches!(err.root(), SdrError::InvalidArgument(_)));
    }
}
