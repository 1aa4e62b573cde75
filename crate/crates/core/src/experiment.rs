//! Repeated simulation experiments and the result-table grids.
//!
//! Repetition `r` of an experiment seeded with `seed` uses dataset seed
//! `seed + r`, so every method in a row sees the same datasets. Repetitions
//! run in parallel and are collected in index order.

use rayon::prelude::*;

use crate::error::{Result, SdrError};
use crate::fit::{ensemble_gram, fit_with_gram, FitOptions, Method};
use crate::linalg::{benchmark_distance, projection_distance};
use crate::simulate::{generate, ModelId, SimConfig};

/// Mean and sample standard deviation of per-rep estimation errors.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSummary {
    pub model: ModelId,
    pub p: usize,
    pub n: usize,
    pub method: Method,
    /// Error of each successful rep, in rep order.
    pub errors: Vec<f64>,
    /// Reps whose fit failed; excluded from the statistics.
    pub failures: usize,
}

impl ExperimentSummary {
    pub fn mean(&self) -> f64 {
        if self.errors.is_empty() {
            return f64::NAN;
        }
        self.errors.iter().sum::<f64>() / self.errors.len() as f64
    }

    /// Sample standard deviation (divisor `reps − 1`); zero for one rep.
    pub fn sd(&self) -> f64 {
        let k = self.errors.len();
        if k < 2 {
            return if k == 1 { 0.0 } else { f64::NAN };
        }
        let m = self.mean();
        (self.errors.iter().map(|e| (e - m).powi(2)).sum::<f64>() / (k - 1) as f64).sqrt()
    }
}

/// Options for `method` on `model`: the model's kernel and structural
/// dimension, everything else at its default.
pub fn model_options(model: ModelId, method: Method) -> FitOptions {
    FitOptions {
        metric: Some(model.metric()),
        ..FitOptions::new(method, model.d0()).with_kernel(model.kernel())
    }
}

/// Run every method on `reps` datasets of `cfg`, with `base` options (only
/// the method replaced) or the model defaults of [`model_options`].
pub fn run_row(cfg: &SimConfig, methods: &[Method], reps: usize, base: Option<&FitOptions>) -> Result<Vec<ExperimentSummary>> {
    if reps == 0 {
        return Err(SdrError::InvalidArgument("reps must be at least 1".into()));
    }
    cfg.validate()?;
    let per_rep: Vec<Vec<Option<f64>>> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let rep_cfg = SimConfig {
                seed: cfg.seed.wrapping_add(r as u64),
                ..*cfg
            };
            let Ok(data) = generate(&rep_cfg) else {
                return vec![None; methods.len()];
            };
            let opts_for = |m: Method| match base {
                Some(b) => FitOptions { method: m, ..*b },
                None => model_options(cfg.model, m),
            };
            let Ok((g, metric, _)) = ensemble_gram(&data.ys, &opts_for(methods.first().copied().unwrap_or(Method::Fols)))
            else {
                return vec![None; methods.len()];
            };
            methods
                .iter()
                .map(|&m| {
                    fit_with_gram(&data.x, &g, metric, &opts_for(m))
                        .and_then(|rep| projection_distance(&rep.basis, &data.truth.b0))
                        .map_err(|e| log::warn!("{} {} rep {r}: {e}", cfg.model, m))
                        .ok()
                })
                .collect()
        })
        .collect();
    Ok(methods
        .iter()
        .enumerate()
        .map(|(k, &method)| {
            let errors: Vec<f64> = per_rep.iter().filter_map(|row| row[k]).collect();
            ExperimentSummary {
                model: cfg.model,
                p: cfg.p,
                n: cfg.n,
                method,
                failures: reps - errors.len(),
                errors,
            }
        })
        .collect())
}

/// Single-method experiment.
pub fn run_experiment(cfg: &SimConfig, opts: &FitOptions, reps: usize) -> Result<ExperimentSummary> {
    let mut rows = run_row(cfg, &[opts.method], reps, Some(opts))?;
    Ok(rows.remove(0))
}

/// Methods compared in the result tables, in column order.
pub const TABLE_METHODS: [Method; 8] = [
    Method::Rfopg,
    Method::Rfmave,
    Method::Fols,
    Method::Fphd,
    Method::Fiht,
    Method::Fsir,
    Method::Fsave,
    Method::Fdr,
];

/// `(model, p, n)` cells of result table 1, 2 or 3.
pub fn table_grid(table: u8) -> Result<Vec<(ModelId, usize, usize)>> {
    let rows: Vec<(ModelId, &[(usize, usize)])> = match table {
        1 => vec![
            (ModelId::I1, &[(10, 200), (20, 200), (30, 400)]),
            (ModelId::I2, &[(10, 200), (20, 200), (30, 400)]),
            (ModelId::I3, &[(10, 200), (20, 300), (30, 400)]),
            (ModelId::I4, &[(10, 200), (20, 300), (30, 400)]),
        ],
        2 | 3 => {
            let models: &[ModelId] = if table == 2 {
                &[ModelId::II1, ModelId::II2]
            } else {
                &[ModelId::III1, ModelId::III2, ModelId::III3]
            };
            models
                .iter()
                .map(|&m| (m, &[(10, 100), (10, 200), (20, 100), (20, 200)][..]))
                .collect()
        }
        _ => return Err(SdrError::InvalidArgument(format!("no table {table}; expected 1, 2 or 3"))),
    };
    Ok(rows
        .into_iter()
        .flat_map(|(m, cells)| cells.iter().map(move |&(p, n)| (m, p, n)))
        .collect())
}

/// Benchmark distance between random subspaces for each `(p, d0)` of a table.
pub fn table_benchmarks(table: u8, pairs: usize, seed: u64) -> Result<Vec<(usize, usize, f64)>> {
    let ps: &[usize] = match table {
        1 => &[10, 20, 30],
        2 | 3 => &[10, 20],
        _ => return Err(SdrError::InvalidArgument(format!("no table {table}; expected 1, 2 or 3"))),
    };
    let mut out = Vec::new();
    for d0 in [1, 2] {
        for &p in ps {
            out.push((p, d0, benchmark_distance(p, d0, pairs, seed)?));
        }
    }
    Ok(out)
}

/// Which cells of a table to run.
#[derive(Debug, Clone, Default)]
pub struct TableFilter {
    pub models: Option<Vec<ModelId>>,
    pub methods: Option<Vec<Method>>,
    pub max_p: Option<usize>,
    pub max_n: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct TableResult {
    pub table: u8,
    pub reps: usize,
    pub seed: u64,
    pub m: usize,
    pub cells: Vec<ExperimentSummary>,
    pub benchmarks: Vec<(usize, usize, f64)>,
}

pub fn reproduce_table(table: u8, reps: usize, seed: u64, m: usize, filter: &TableFilter, benchmark_pairs: usize) -> Result<TableResult> {
    let methods: Vec<Method> = filter.methods.clone().unwrap_or_else(|| TABLE_METHODS.to_vec());
    let mut cells = Vec::new();
    for (model, p, n) in table_grid(table)? {
        if filter.models.as_ref().is_some_and(|ms| !ms.contains(&model))
            || filter.max_p.is_some_and(|mp| p > mp)
            || filter.max_n.is_some_and(|mn| n > mn)
        {
            continue;
        }
        let cfg = SimConfig {
            m,
            ..SimConfig::new(model, n, p, seed)
        };
        cells.extend(run_row(&cfg, &methods, reps, None)?);
    }
    let benchmarks = table_benchmarks(table, benchmark_pairs, seed)?
        .into_iter()
        .filter(|(p, _, _)| filter.max_p.is_none_or(|mp| *p <= mp))
        .collect();
    Ok(TableResult {
        table,
        reps,
        seed,
        m,
        cells,
        benchmarks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fit::fit;

    #[test]
    fn summary_statistics() {
        let s = ExperimentSummary {
            model: ModelId::I1,
            p: 10,
            n: 200,
            method: Method::Fols,
            errors: vec![1.0, 2.0, 3.0],
            failures: 0,
        };
        assert_eq!(s.mean(), 2.0);
        assert_eq!(s.sd(), 1.0);
    }

    #[test]
    fn one_rep_reproduces_a_single_fit() {
        let cfg = SimConfig {
            m: 20,
            ..SimConfig::new(ModelId::I1, 60, 4, 17)
        };
        let opts = model_options(ModelId::I1, Method::Fsir);
        let s = run_experiment(&cfg, &opts, 1).unwrap();
        let d = generate(&cfg).unwrap();
        let mut r = fit(&d.x, &d.ys, &opts).unwrap();
        assert_eq!(s.errors, vec![r.compare_truth(&d.truth.b0).unwrap()]);
        assert_eq!(s.sd(), 0.0);
    }

    #[test]
    fn grids_match_table_layouts() {
        assert_eq!(table_grid(1).unwrap().len(), 12);
        assert!(table_grid(1).unwrap().contains(&(ModelId::I3, 20, 300)));
        assert_eq!(table_grid(2).unwrap().len(), 8);
        assert_eq!(table_grid(3).unwrap().len(), 12);
        assert!(table_grid(4).is_err());
    }
}
