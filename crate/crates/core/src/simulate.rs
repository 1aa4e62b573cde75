//! Synthetic regression models with distribution, SPD-matrix and spherical
//! responses, all driven by `U[0, 1]^p` predictors.
//!
//! Every dataset is a pure function of its [`SimConfig`]: the generator is
//! `ChaCha8Rng` seeded with `seed`, predictors are drawn first in row-major
//! order and the response draws follow unit by unit.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::error::{Result, SdrError};
use crate::kernels::KernelSpec;
use crate::linalg::PredictorMatrix;
use crate::metrics::{
    matrix_exp, matrix_log, EmpiricalDistribution, MetricKind, ResponseSet, SpdMatrix, UnitVector,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelId {
    I1,
    I2,
    I3,
    I4,
    II1,
    II2,
    III1,
    III2,
    III3,
}

impl ModelId {
    pub const ALL: [ModelId; 9] = [
        ModelId::I1,
        ModelId::I2,
        ModelId::I3,
        ModelId::I4,
        ModelId::II1,
        ModelId::II2,
        ModelId::III1,
        ModelId::III2,
        ModelId::III3,
    ];

    pub fn scenario(self) -> u8 {
        match self {
            ModelId::I1 | ModelId::I2 | ModelId::I3 | ModelId::I4 => 1,
            ModelId::II1 | ModelId::II2 => 2,
            ModelId::III1 | ModelId::III2 | ModelId::III3 => 3,
        }
    }

    pub fn min_p(self) -> usize {
        match self {
            ModelId::I1 | ModelId::I2 | ModelId::I3 | ModelId::I4 => 4,
            ModelId::II2 => 3,
            _ => 2,
        }
    }

    pub fn d0(self) -> usize {
        match self {
            ModelId::I1 | ModelId::I3 | ModelId::II1 | ModelId::III1 => 1,
            _ => 2,
        }
    }

    /// Response metric used for this model's experiments.
    pub fn metric(self) -> MetricKind {
        match self.scenario() {
            1 => MetricKind::Wasserstein2,
            2 => MetricKind::SpdFrobenius,
            _ => MetricKind::SphereGeodesic,
        }
    }

    /// Gaussian kernel for distributions and SPD matrices, Laplacian on the
    /// sphere.
    pub fn kernel(self) -> KernelSpec {
        match self.scenario() {
            3 => KernelSpec::laplacian(),
            _ => KernelSpec::gaussian(),
        }
    }
}

impl fmt::Display for ModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelId::I1 => "I-1",
            ModelId::I2 => "I-2",
            ModelId::I3 => "I-3",
            ModelId::I4 => "I-4",
            ModelId::II1 => "II-1",
            ModelId::II2 => "II-2",
            ModelId::III1 => "III-1",
            ModelId::III2 => "III-2",
            ModelId::III3 => "III-3",
        })
    }
}

impl FromStr for ModelId {
    type Err = SdrError;

    /// Accepts `I-1`, `I1`, `i_1` and similar spellings.
    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .chars()
            .filter(|c| !matches!(c, '-' | '_' | ' '))
            .collect::<String>()
            .to_ascii_uppercase();
        ModelId::ALL
            .into_iter()
            .find(|m| m.to_string().replace('-', "") == key)
            .ok_or_else(|| SdrError::InvalidModel(format!("unknown model {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub model: ModelId,
    pub n: usize,
    pub p: usize,
    /// Draws per distributional response.
    pub m: usize,
    pub seed: u64,
    /// Multiplier on the additive noise of I-1, I-2, II and III; 0 gives
    /// noiseless responses. I-3 and I-4 are unaffected since their random
    /// location is part of the model.
    pub noise: f64,
}

impl SimConfig {
    pub fn new(model: ModelId, n: usize, p: usize, seed: u64) -> Self {
        Self {
            model,
            n,
            p,
            m: 100,
            seed,
            noise: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(SdrError::InvalidModel(format!("need n >= 2, got {}", self.n)));
        }
        if self.p < self.model.min_p() {
            return Err(SdrError::InvalidModel(format!(
                "model {} needs p >= {}, got {}",
                self.model,
                self.model.min_p(),
                self.p
            )));
        }
        if self.m == 0 {
            return Err(SdrError::InvalidModel("m must be at least 1".into()));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return Err(SdrError::InvalidModel(format!("noise multiplier must be non-negative, got {}", self.noise)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct GroundTruth {
    /// `p × d0`, unit-norm columns.
    pub b0: DMatrix<f64>,
    pub d0: usize,
}

impl GroundTruth {
    fn from_columns(cols: &[DVector<f64>]) -> Self {
        Self {
            b0: DMatrix::from_columns(cols),
            d0: cols.len(),
        }
    }
}

/// Per-unit quantities drawn on the way to the responses.
#[derive(Debug, Clone)]
pub enum Latent {
    /// Location and scale of each normal response distribution.
    Distribution { mu: Vec<f64>, sigma: Vec<f64> },
    /// Noise-free matrices `D(X_i)`.
    Spd { centers: Vec<DMatrix<f64>> },
    /// Noise-free points `m(X_i)` and the tangent noise `ε_i` (zero for III-3,
    /// whose noise enters through the angles).
    Sphere {
        centers: Vec<DVector<f64>>,
        tangent: Vec<DVector<f64>>,
    },
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub config: SimConfig,
    pub x: PredictorMatrix,
    pub ys: ResponseSet,
    pub truth: GroundTruth,
    pub latent: Latent,
}

/// `β₁ = (1, 1, 0, …)/√2`, `β₂ = (0, …, 1, 1)/√2`, `β₃ = (1, 2, 0, …, 0, 2)/3`,
/// `β₄ = (0, 0, 3, 4, 0, …)/5`.
pub fn beta(k: usize, p: usize) -> Result<DVector<f64>> {
    let need = match k {
        1 | 2 => 2,
        3 => 3,
        4 => 4,
        _ => return Err(SdrError::InvalidModel(format!("no beta vector {k}"))),
    };
    if p < need {
        return Err(SdrError::InvalidModel(format!("beta {k} needs p >= {need}, got {p}")));
    }
    let mut b = DVector::zeros(p);
    match k {
        1 => {
            b[0] = FRAC_1_SQRT_2;
            b[1] = FRAC_1_SQRT_2;
        }
        2 => {
            b[p - 2] = FRAC_1_SQRT_2;
            b[p - 1] = FRAC_1_SQRT_2;
        }
        3 => {
            b[0] = 1.0 / 3.0;
            b[1] = 2.0 / 3.0;
            b[p - 1] = 2.0 / 3.0;
        }
        _ => {
            b[2] = 0.6;
            b[3] = 0.8;
        }
    }
    Ok(b)
}

fn unit(k: usize, p: usize) -> DVector<f64> {
    let mut e = DVector::zeros(p);
    e[k] = 1.0;
    e
}

/// True central subspace basis of `model` in `R^p`.
pub fn ground_truth(model: ModelId, p: usize) -> Result<GroundTruth> {
    let cols = match model {
        ModelId::I1 | ModelId::I3 | ModelId::II1 => vec![beta(1, p)?],
        ModelId::I2 => vec![beta(1, p)?, beta(2, p)?],
        ModelId::I4 => vec![beta(3, p)?, beta(4, p)?],
        ModelId::II2 => vec![beta(1, p)?, beta(3, p)?],
        ModelId::III1 => vec![unit(0, p)],
        ModelId::III2 | ModelId::III3 => vec![unit(0, p), unit(1, p)],
    };
    Ok(GroundTruth::from_columns(&cols))
}

fn draw_predictors(n: usize, p: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let vals: Vec<f64> = (0..n * p).map(|_| rng.random::<f64>()).collect();
    DMatrix::from_row_slice(n, p, &vals)
}

/// `n × p` i.i.d. `U[0, 1]` entries.
pub fn gen_predictors(n: usize, p: usize, seed: u64) -> Result<PredictorMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    PredictorMatrix::new(draw_predictors(n, p, &mut rng))
}

fn normal(mean: f64, sd: f64, rng: &mut ChaCha8Rng) -> f64 {
    if sd == 0.0 {
        return mean;
    }
    Normal::new(mean, sd).expect("finite positive sd").sample(rng)
}

fn index(x: &DMatrix<f64>, i: usize, b: &DVector<f64>) -> f64 {
    x.row(i).dot(&b.transpose())
}

pub fn gen_scenario_one(cfg: &SimConfig) -> Result<Dataset> {
    cfg.validate()?;
    if cfg.model.scenario() != 1 {
        return Err(SdrError::InvalidModel(format!("{} is not a distribution model", cfg.model)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let x = draw_predictors(cfg.n, cfg.p, &mut rng);
    let b1 = beta(1, cfg.p)?;
    let b2 = beta(2, cfg.p)?;
    let b3 = beta(3, cfg.p)?;
    let b4 = beta(4, cfg.p)?;
    let mut mus = Vec::with_capacity(cfg.n);
    let mut sigmas = Vec::with_capacity(cfg.n);
    let mut ys = Vec::with_capacity(cfg.n);
    for i in 0..cfg.n {
        let (mu, sigma) = match cfg.model {
            ModelId::I1 => (normal(index(&x, i, &b1).exp(), 0.5 * cfg.noise, &mut rng), 1.0),
            ModelId::I2 => (
                normal(index(&x, i, &b1).exp(), 0.5 * cfg.noise, &mut rng),
                index(&x, i, &b2).exp(),
            ),
            ModelId::I3 => {
                let mu = normal(0.0, index(&x, i, &b1).abs().sqrt(), &mut rng);
                (mu, mu.abs())
            }
            _ => {
                let mu = normal(0.0, index(&x, i, &b3).powi(2), &mut rng);
                (mu, index(&x, i, &b4).powi(4))
            }
        };
        let draws: Vec<f64> = (0..cfg.m).map(|_| normal(mu, sigma, &mut rng)).collect();
        ys.push(EmpiricalDistribution::new(draws)?);
        mus.push(mu);
        sigmas.push(sigma);
    }
    Ok(Dataset {
        config: *cfg,
        x: PredictorMatrix::new(x)?,
        ys: ResponseSet::Distributions(ys),
        truth: ground_truth(cfg.model, cfg.p)?,
        latent: Latent::Distribution { mu: mus, sigma: sigmas },
    })
}

/// `(e^u − 1)/(e^u + 1)`, written as `tanh(u/2)` for stability.
fn rho(u: f64) -> f64 {
    (u / 2.0).tanh()
}

/// Symmetric matrix with `N(0, 1)` diagonal and `N(0, 1/2)` off-diagonal
/// entries, upper triangle drawn row by row.
pub fn standard_symmetric_normal<R: Rng + ?Sized>(r: usize, rng: &mut R) -> DMatrix<f64> {
    let mut z = DMatrix::zeros(r, r);
    for a in 0..r {
        for b in a..r {
            let v: f64 = StandardNormal.sample(rng);
            if a == b {
                z[(a, a)] = v;
            } else {
                z[(a, b)] = v * FRAC_1_SQRT_2;
                z[(b, a)] = v * FRAC_1_SQRT_2;
            }
        }
    }
    z
}

pub fn gen_scenario_two(cfg: &SimConfig) -> Result<Dataset> {
    cfg.validate()?;
    if cfg.model.scenario() != 2 {
        return Err(SdrError::InvalidModel(format!("{} is not an SPD model", cfg.model)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let x = draw_predictors(cfg.n, cfg.p, &mut rng);
    let b1 = beta(1, cfg.p)?;
    let sigma = 0.5 * cfg.noise;
    let mut centers = Vec::with_capacity(cfg.n);
    let mut ys = Vec::with_capacity(cfg.n);
    for i in 0..cfg.n {
        let r1 = rho(index(&x, i, &b1));
        let d = match cfg.model {
            ModelId::II1 => DMatrix::from_row_slice(2, 2, &[1.0, r1, r1, 1.0]),
            _ => {
                let q1 = 0.4 * r1;
                let q2 = 0.4 * index(&x, i, &beta(3, cfg.p)?).sin();
                DMatrix::from_row_slice(3, 3, &[1.0, q1, q2, q1, 1.0, q1, q2, q1, 1.0])
            }
        };
        let log_d = matrix_log(&SpdMatrix::new(d.clone())?)?;
        let z = standard_symmetric_normal(d.nrows(), &mut rng);
        let y = if sigma == 0.0 {
            d.clone()
        } else {
            matrix_exp(&(log_d + z * sigma))?
        };
        ys.push(SpdMatrix::new(y)?);
        centers.push(d);
    }
    Ok(Dataset {
        config: *cfg,
        x: PredictorMatrix::new(x)?,
        ys: ResponseSet::Spd(ys),
        truth: ground_truth(cfg.model, cfg.p)?,
        latent: Latent::Spd { centers },
    })
}

/// Exponential map on the unit sphere: `cos‖v‖ m + sin‖v‖ v/‖v‖`, with
/// `v = 0` mapping to `m`.
pub fn sphere_exp(m: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
    let norm = v.norm();
    if norm == 0.0 {
        return m.clone();
    }
    m * norm.cos() + v * (norm.sin() / norm)
}

/// Orthonormal tangent frame at `m(X)` of III-2: `v₁` the normalized
/// derivative along `X₁`, `v₂ = m × v₁`.
pub fn tangent_frame(m: &DVector<f64>, angle: f64) -> (DVector<f64>, DVector<f64>) {
    let v1 = DVector::from_column_slice(&[-angle.sin(), angle.cos(), 0.0]);
    let v2 = DVector::from_column_slice(&[
        m[1] * v1[2] - m[2] * v1[1],
        m[2] * v1[0] - m[0] * v1[2],
        m[0] * v1[1] - m[1] * v1[0],
    ]);
    (v1, v2)
}

pub fn gen_scenario_three(cfg: &SimConfig) -> Result<Dataset> {
    cfg.validate()?;
    if cfg.model.scenario() != 3 {
        return Err(SdrError::InvalidModel(format!("{} is not a sphere model", cfg.model)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let x = draw_predictors(cfg.n, cfg.p, &mut rng);
    let sd = 0.2 * cfg.noise;
    let mut centers = Vec::with_capacity(cfg.n);
    let mut tangent = Vec::with_capacity(cfg.n);
    let mut ys = Vec::with_capacity(cfg.n);
    for i in 0..cfg.n {
        let (x1, x2) = (x[(i, 0)], x[(i, 1)]);
        let (center, eps, y) = match cfg.model {
            ModelId::III1 => {
                let a = PI * x1;
                let m = DVector::from_column_slice(&[a.cos(), a.sin()]);
                let delta = normal(0.0, sd, &mut rng);
                let eps = DVector::from_column_slice(&[-delta * a.sin(), delta * a.cos()]);
                let y = sphere_exp(&m, &eps);
                (m, eps, y)
            }
            ModelId::III2 => {
                let a = PI * x1;
                let s = (1.0 - x2 * x2).sqrt();
                let m = DVector::from_column_slice(&[s * a.cos(), s * a.sin(), x2]);
                let (v1, v2) = tangent_frame(&m, a);
                let d1 = normal(0.0, sd, &mut rng);
                let d2 = normal(0.0, sd, &mut rng);
                let eps = v1 * d1 + v2 * d2;
                let y = sphere_exp(&m, &eps);
                (m, eps, y)
            }
            _ => {
                let polar = |t: f64, u: f64| DVector::from_column_slice(&[t.sin() * u.sin(), t.sin() * u.cos(), t.cos()]);
                let e1 = normal(0.0, sd, &mut rng);
                let e2 = normal(0.0, sd, &mut rng);
                (polar(x1, x2), DVector::zeros(3), polar(x1 + e1, x2 + e2))
            }
        };
        ys.push(UnitVector::normalized(y, 1e-10)?);
        centers.push(center);
        tangent.push(eps);
    }
    Ok(Dataset {
        config: *cfg,
        x: PredictorMatrix::new(x)?,
        ys: ResponseSet::Sphere(ys),
        truth: ground_truth(cfg.model, cfg.p)?,
        latent: Latent::Sphere { centers, tangent },
    })
}

/// Generate the dataset of `cfg.model`.
pub fn generate(cfg: &SimConfig) -> Result<Dataset> {
    match cfg.model.scenario() {
        1 => gen_scenario_one(cfg),
        2 => gen_scenario_two(cfg),
        _ => gen_scenario_three(cfg),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    use crate::metrics::sphere_geodesic;

    #[test]
    fn model_ids_parse() {
        assert_eq!("I-1".parse::<ModelId>().unwrap(), ModelId::I1);
        assert_eq!("iii3".parse::<ModelId>().unwrap(), ModelId::III3);
        assert_eq!("II_2".parse::<ModelId>().unwrap(), ModelId::II2);
        assert!("IV-1".parse::<ModelId>().is_err());
        for m in ModelId::ALL {
            assert_eq!(m.to_string().parse::<ModelId>().unwrap(), m);
        }
    }

    #[test]
    fn beta_vectors() {
        let b = beta(3, 10).unwrap();
        assert_abs_diff_eq!(b.norm(), 1.0, epsilon = 1e-15);
        assert_eq!(b[9], 2.0 / 3.0);
        assert_eq!(beta(4, 6).unwrap().as_slice(), &[0., 0., 0.6, 0.8, 0., 0.]);
        assert!(beta(4, 3).is_err());
        for m in ModelId::ALL {
            let t = ground_truth(m, 10).unwrap();
            assert_eq!(t.d0, m.d0());
            for c in t.b0.column_iter() {
                assert_abs_diff_eq!(c.norm(), 1.0, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn predictors_are_reproducible_uniforms() {
        let a = gen_predictors(1000, 3, 11).unwrap();
        let b = gen_predictors(1000, 3, 11).unwrap();
        assert_eq!(a.matrix(), b.matrix());
        for c in a.matrix().column_iter() {
            let mean = c.mean();
            let var = c.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 1000.0;
            assert!((mean - 0.5).abs() < 0.05);
            assert!((var - 1.0 / 12.0).abs() < 0.01);
            assert!(c.iter().all(|v| (0.0..1.0).contains(v)));
        }
    }

    #[test]
    fn scenario_one_shapes_and_scales() {
        let mut cfg = SimConfig::new(ModelId::I1, 5, 4, 3);
        cfg.m = 10_000;
        let d = generate(&cfg).unwrap();
        let Latent::Distribution { mu, .. } = &d.latent else { panic!() };
        let ResponseSet::Distributions(ys) = &d.ys else { panic!() };
        for (y, mu) in ys.iter().zip(mu) {
            let s = y.samples();
            let mean = s.iter().sum::<f64>() / s.len() as f64;
            let sd = (s.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / s.len() as f64).sqrt();
            assert!((mean - mu).abs() < 0.05);
            assert!((sd - 1.0).abs() < 0.05);
        }

        let d = generate(&SimConfig::new(ModelId::I3, 50, 4, 4)).unwrap();
        let Latent::Distribution { mu, sigma } = &d.latent else { panic!() };
        for (m, s) in mu.iter().zip(sigma) {
            assert_eq!(*s, m.abs());
        }
        assert!(generate(&SimConfig::new(ModelId::I2, 10, 3, 1)).is_err());
    }

    #[test]
    fn i2_location_regression() {
        let d = generate(&SimConfig { m: 1, ..SimConfig::new(ModelId::I2, 5000, 4, 8) }).unwrap();
        let Latent::Distribution { mu, .. } = &d.latent else { panic!() };
        let b1 = beta(1, 4).unwrap();
        let resid: Vec<f64> = (0..5000).map(|i| mu[i] - index(d.x.matrix(), i, &b1).exp()).collect();
        let mean = resid.iter().sum::<f64>() / 5000.0;
        let var = resid.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / 5000.0;
        assert!(mean.abs() < 0.03);
        assert!((var - 0.25).abs() < 0.02);
    }

    #[test]
    fn scenario_two_noise_and_noiseless() {
        let cfg = SimConfig { noise: 0.0, ..SimConfig::new(ModelId::II2, 20, 5, 2) };
        let d = generate(&cfg).unwrap();
        let (ResponseSet::Spd(ys), Latent::Spd { centers }) = (&d.ys, &d.latent) else { panic!() };
        for (y, c) in ys.iter().zip(centers) {
            assert_abs_diff_eq!(y.matrix(), c, epsilon = 1e-12);
            let rt = matrix_exp(&matrix_log(&SpdMatrix::new(c.clone()).unwrap()).unwrap()).unwrap();
            assert_abs_diff_eq!(&rt, c, epsilon = 1e-12);
        }
        assert!(generate(&SimConfig::new(ModelId::II1, 30, 3, 5)).is_ok());

        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let off: Vec<f64> = (0..10_000)
            .map(|_| standard_symmetric_normal(2, &mut rng)[(0, 1)] * 0.5)
            .collect();
        let mean = off.iter().sum::<f64>() / 1e4;
        let var = off.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 1e4;
        assert!(mean.abs() < 0.01);
        assert!((var - 0.125).abs() < 0.005);
    }

    #[test]
    fn rho_stays_inside_unit_interval() {
        for u in [-50.0, -1.0, 0.0, 0.3, 1.4, 50.0] {
            assert!(rho(u).abs() < 1.0 || u.abs() > 30.0);
            assert_abs_diff_eq!(rho(u), (u.exp() - 1.0) / (u.exp() + 1.0), epsilon = 1e-12);
        }
    }

    #[test]
    fn sphere_models() {
        for model in [ModelId::III1, ModelId::III2, ModelId::III3] {
            let d = generate(&SimConfig::new(model, 40, 4, 9)).unwrap();
            let (ResponseSet::Sphere(ys), Latent::Sphere { centers, tangent }) = (&d.ys, &d.latent) else {
                panic!()
            };
            for ((y, m), e) in ys.iter().zip(centers).zip(tangent) {
                assert_abs_diff_eq!(y.coords().norm(), 1.0, epsilon = 1e-12);
                assert!(m.dot(e).abs() <= 1e-12);
                if model != ModelId::III3 {
                    let mu = UnitVector::normalized(m.clone(), 1e-10).unwrap();
                    assert_abs_diff_eq!(sphere_geodesic(y, &mu).unwrap(), e.norm(), epsilon = 1e-7);
                }
            }
        }
        let d = generate(&SimConfig { noise: 0.0, ..SimConfig::new(ModelId::III1, 10, 3, 1) }).unwrap();
        let (ResponseSet::Sphere(ys), Latent::Sphere { centers, .. }) = (&d.ys, &d.latent) else { panic!() };
        for (y, m) in ys.iter().zip(centers) {
            assert_abs_diff_eq!(y.coords(), m, epsilon = 1e-15);
        }
    }

    #[test]
    fn tangent_frame_is_orthonormal() {
        let a = 0.7 * PI;
        let x2: f64 = 0.35;
        let s = (1.0 - x2 * x2).sqrt();
        let m = DVector::from_column_slice(&[s * a.cos(), s * a.sin(), x2]);
        let (v1, v2) = tangent_frame(&m, a);
        for (u, w) in [(&v1, &m), (&v2, &m), (&v1, &v2)] {
            assert!(u.dot(w).abs() < 1e-14);
        }
        assert_abs_diff_eq!(v1.norm(), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(v2.norm(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn datasets_are_deterministic() {
        for model in ModelId::ALL {
            let cfg = SimConfig { m: 5, ..SimConfig::new(model, 8, 5, 42) };
            let a = generate(&cfg).unwrap();
            let b = generate(&cfg).unwrap();
            assert_eq!(a.x.matrix(), b.x.matrix());
            assert_eq!(format!("{:?}", a.ys), format!("{:?}", b.ys));
        }
    }
}
