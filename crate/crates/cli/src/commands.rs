//! Subcommand implementations. Each resolves its settings (command line
//! first, then the config file, then defaults), runs the library and writes
//! CSV outputs with `# key=value` metadata.

use std::fs;
use std::path::{Path, PathBuf};

use fsdr_core::experiment::{reproduce_table, run_row, TableFilter, TableResult};
use fsdr_core::fit::{fit, scree, FitReport, Hyperparameters, SliceCount};
use fsdr_core::kernels::{Gamma, KernelFamily};
use fsdr_core::simulate::generate;
use fsdr_core::{FitOptions, KernelSpec, Method, MetricKind, ModelId, PredictorMatrix, SimConfig};
use nalgebra::DMatrix;

use crate::args::{BenchArgs, EstimatorArgs, FitArgs, ReproduceArgs, SimulateArgs};
use crate::config::RunConfig;
use crate::error::{CliError, CliResult, CoreExt};
use crate::io::{fmt_sig, numbered, read_responses, read_table, write_records, write_responses, write_table, ResponseKind};

type Meta = Vec<(String, String)>;

fn parse<T: std::str::FromStr<Err = fsdr_core::SdrError>>(what: &str, s: &str) -> CliResult<T> {
    s.parse().map_err(|e: fsdr_core::SdrError| CliError::config(format!("{what}: {}", e.root())))
}

fn parse_list<T: std::str::FromStr<Err = fsdr_core::SdrError>>(what: &str, s: &str) -> CliResult<Vec<T>> {
    s.split(',').filter(|t| !t.trim().is_empty()).map(|t| parse(what, t.trim())).collect()
}

fn create_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::Output {
        path: dir.display().to_string(),
        source: e,
    })
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| CliError::Output {
        path: path.display().to_string(),
        source: e,
    })
}

/// Estimator options from the command line over the config file.
pub fn resolve_options(a: &EstimatorArgs, cfg: &RunConfig) -> CliResult<FitOptions> {
    let method: Method = match a.method.as_deref().or(cfg.cli.method.as_deref()) {
        Some(m) => parse("method", m)?,
        None => return Err(CliError::config("no method given; pass --method")),
    };
    let d0 = a
        .d0
        .or(cfg.cli.d0)
        .ok_or_else(|| CliError::config("no structural dimension given; pass --d0"))?;
    let mut opts = FitOptions::new(method, d0);
    if let Some(f) = a.kernel.as_deref().or(cfg.kernels.family.as_deref()) {
        opts.kernel.family = parse::<KernelFamily>("kernel", f)?;
    }
    let gamma = a.gamma.clone().or_else(|| cfg.kernels.gamma.as_ref().map(|g| g.as_arg()));
    if let Some(g) = gamma {
        opts.kernel.gamma = parse::<Gamma>("gamma", &g)?;
    }
    if let Some(m) = a.metric.as_deref().or(cfg.kernels.metric.as_deref()) {
        opts.metric = Some(parse::<MetricKind>("metric", m)?);
    }
    opts.allow_indefinite = a.allow_indefinite || cfg.kernels.allow_indefinite.unwrap_or(false);
    let slices = a.slices.clone().or_else(|| cfg.inverse_ensemble.slices.as_ref().map(|s| s.as_arg()));
    if let Some(s) = slices {
        opts.slices = if s.eq_ignore_ascii_case("auto") {
            SliceCount::Auto
        } else {
            SliceCount::Fixed(
                s.parse()
                    .map_err(|_| CliError::config(format!("slices must be 'auto' or an integer, got {s:?}")))?,
            )
        };
    }
    if let Some(s) = a.scheme.as_deref().or(cfg.inverse_ensemble.scheme.as_deref()) {
        opts.scheme = parse("scheme", s)?;
    }
    opts.iht_power = a.iht_r.or(cfg.moment_ensemble.iht_r);
    if let Some(r) = a.phd_ranking.as_deref().or(cfg.moment_ensemble.phd_ranking.as_deref()) {
        opts.phd_ranking = parse("phd ranking", r)?;
    }
    if let Some(t) = a.max_iter.or(cfg.forward_ensemble.max_iter) {
        opts.max_iter = t;
    }
    if opts.iht_power == Some(0) || opts.max_iter == 0 {
        return Err(CliError::config("--iht-r and --max-iter must be at least 1"));
    }
    opts.kernel.validate().at("options")?;
    Ok(opts)
}

fn hyper_meta(h: &Hyperparameters, kernel: &KernelSpec, seed: Option<u64>) -> Meta {
    let join = |v: &[f64]| v.iter().map(|x| fmt_sig(*x)).collect::<Vec<_>>().join(";");
    let opt = |v: Option<String>| v.unwrap_or_else(|| "none".into());
    vec![
        ("metric".into(), h.metric.to_string()),
        ("kernel".into(), h.kernel.to_string()),
        (
            "gamma".into(),
            format!(
                "{}{}",
                fmt_sig(h.gamma),
                if kernel.gamma == Gamma::Auto { " (median heuristic)" } else { "" }
            ),
        ),
        ("h_schedule".into(), if h.bandwidths.is_empty() { "none".into() } else { join(&h.bandwidths) }),
        ("slices".into(), opt(h.slices.map(|s| s.to_string()))),
        ("slice_scheme".into(), opt(h.slice_scheme.map(|s| s.name().to_string()))),
        ("iht_r".into(), opt(h.iht_power.map(|r| r.to_string()))),
        ("max_iter".into(), opt(h.max_iter.map(|t| t.to_string()))),
        ("seed".into(), opt(seed.map(|s| s.to_string()))),
    ]
}

struct Loaded {
    x: PredictorMatrix,
    ys: fsdr_core::ResponseSet,
    seed: Option<u64>,
    paths: (PathBuf, PathBuf),
}

fn load_data(a: &FitArgs, cfg: &RunConfig) -> CliResult<Loaded> {
    let xp = a
        .predictors
        .clone()
        .or_else(|| cfg.cli.predictors.clone())
        .ok_or_else(|| CliError::config("no predictor file given; pass --predictors"))?;
    let yp = a
        .responses
        .clone()
        .or_else(|| cfg.cli.responses.clone())
        .ok_or_else(|| CliError::config("no response file given; pass --responses"))?;
    let kind = match a.kind.as_deref().or(cfg.cli.kind.as_deref()) {
        Some(k) => Some(k.parse::<ResponseKind>()?),
        None => None,
    };
    let xt = read_table(&xp, "read predictors")?;
    let (ys, yt) = read_responses(&yp, kind)?;
    if ys.len() != xt.rows.nrows() {
        return Err(CliError::data(
            "input",
            format!("{} predictor rows but {} responses", xt.rows.nrows(), ys.len()),
        ));
    }
    let seed = a
        .seed
        .or(cfg.cli.seed)
        .or_else(|| xt.meta("seed").or(yt.meta("seed")).and_then(|s| s.parse().ok()));
    let x = PredictorMatrix::new(xt.rows)
        .and_then(|x| x.with_names(xt.header))
        .at("read predictors")?;
    Ok(Loaded {
        x,
        ys,
        seed,
        paths: (xp, yp),
    })
}

pub fn cmd_fit(a: &FitArgs, cfg: &RunConfig) -> CliResult<FitReport> {
    let opts = resolve_options(&a.est, cfg)?;
    let data = load_data(a, cfg)?;
    let truth = match a.truth.clone().or_else(|| cfg.cli.truth.clone()) {
        Some(path) => Some(read_table(&path, "read truth")?.rows),
        None => None,
    };
    let mut report = fit(&data.x, &data.ys, &opts).at("fit")?;
    if let Some(b0) = &truth {
        if b0.nrows() != data.x.p() {
            return Err(CliError::data(
                "read truth",
                format!("truth has {} rows for {} predictors", b0.nrows(), data.x.p()),
            ));
        }
        report.compare_truth(b0).at("compare truth")?;
    }
    for w in &report.warnings {
        log::warn!("{w}");
    }

    let out = a.out.clone().or_else(|| cfg.cli.out.clone()).unwrap_or_else(|| PathBuf::from("fsdr-output"));
    create_dir(&out)?;
    let mut meta: Meta = vec![
        ("method".into(), opts.method.name().into()),
        ("d0".into(), opts.d0.to_string()),
    ];
    meta.extend(hyper_meta(&report.hyper, &opts.kernel, data.seed));
    let d = report.d0;
    let p = data.x.p();
    let basis_header = numbered("b", d);
    write_table(&out.join("basis.csv"), &meta, &basis_header, &report.basis)?;
    let eig = DMatrix::from_iterator(p, 1, report.eigenvalues.iter().copied());
    write_table(&out.join("eigenvalues.csv"), &meta, &["eigenvalue".to_string()], &eig)?;
    write_table(
        &out.join("sufficient_predictors.csv"),
        &meta,
        &numbered("sp", d),
        &report.sufficient_predictors,
    )?;

    let mut manifest = String::from("command=fit\n");
    manifest.push_str(&format!("predictors={}\n", data.paths.0.display()));
    manifest.push_str(&format!("responses={}\n", data.paths.1.display()));
    manifest.push_str(&format!("response_kind={}\n", ResponseKind::of(&data.ys)));
    manifest.push_str(&format!("n={}\np={p}\n", data.x.n()));
    for (k, v) in &meta {
        manifest.push_str(&format!("{k}={v}\n"));
    }
    manifest.push_str(&format!("phd_ranking={:?}\n", opts.phd_ranking).to_lowercase());
    manifest.push_str(&format!("ridge={:?}\n", opts.ridge).to_lowercase());
    manifest.push_str(&format!("allow_indefinite={}\n", opts.allow_indefinite));
    if let Some(e) = report.error {
        manifest.push_str(&format!("projection_distance={}\n", fmt_sig(e)));
    }
    for w in &report.warnings {
        manifest.push_str(&format!("warning={w}\n"));
    }
    write_text(&out.join("manifest.txt"), &manifest)?;

    println!("{} d0={} gamma={}", opts.method.label(), d, fmt_sig(report.hyper.gamma));
    println!(
        "eigenvalues: {}",
        report.eigenvalues.iter().map(|v| fmt_sig(*v)).collect::<Vec<_>>().join(" ")
    );
    if let Some(e) = report.error {
        println!("projection_distance={}", fmt_sig(e));
    }
    println!("wrote {}", out.display());
    Ok(report)
}

pub fn cmd_scree(a: &FitArgs, cfg: &RunConfig) -> CliResult<Vec<f64>> {
    let mut est = a.est.clone();
    est.d0 = est.d0.or(cfg.cli.d0).or(Some(1));
    let opts = resolve_options(&est, cfg)?;
    let data = load_data(a, cfg)?;
    let (eigs, hyper) = scree(&data.x, &data.ys, &opts).at("fit")?;
    let mut meta: Meta = vec![("method".into(), opts.method.name().into())];
    meta.extend(hyper_meta(&hyper, &opts.kernel, data.seed));
    let out = a.out.clone().or_else(|| cfg.cli.out.clone()).unwrap_or_else(|| PathBuf::from("scree.csv"));
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    let records: Vec<Vec<String>> = eigs
        .iter()
        .enumerate()
        .map(|(k, v)| vec![(k + 1).to_string(), fmt_sig(*v)])
        .collect();
    write_records(&out, &meta, &["component".into(), "eigenvalue".into()], &records)?;
    for r in &records {
        println!("{} {}", r[0], r[1]);
    }
    Ok(eigs)
}

fn sim_config(model: Option<&str>, n: Option<usize>, p: Option<usize>, m: Option<usize>, noise: Option<f64>, seed: u64, cfg: &RunConfig) -> CliResult<SimConfig> {
    let model: ModelId = match model.or(cfg.simulate.model.as_deref()) {
        Some(s) => parse("model", s)?,
        None => return Err(CliError::config("no model given; pass --model")),
    };
    let n = n.or(cfg.simulate.n).ok_or_else(|| CliError::config("no sample size given; pass --n"))?;
    let p = p.or(cfg.simulate.p).ok_or_else(|| CliError::config("no dimension given; pass --p"))?;
    let mut sc = SimConfig::new(model, n, p, seed);
    if let Some(m) = m.or(cfg.simulate.m) {
        sc.m = m;
    }
    if let Some(s) = noise.or(cfg.simulate.noise) {
        sc.noise = s;
    }
    sc.validate().at("options")?;
    Ok(sc)
}

fn sim_meta(sc: &SimConfig) -> Meta {
    vec![
        ("model".into(), sc.model.to_string()),
        ("n".into(), sc.n.to_string()),
        ("p".into(), sc.p.to_string()),
        ("m".into(), sc.m.to_string()),
        ("noise".into(), fmt_sig(sc.noise)),
        ("seed".into(), sc.seed.to_string()),
    ]
}

pub fn cmd_simulate(a: &SimulateArgs, cfg: &RunConfig) -> CliResult<()> {
    let seed = a.seed.or(cfg.cli.seed).unwrap_or(0);
    let sc = sim_config(a.model.as_deref(), a.n, a.p, a.m, a.noise, seed, cfg)?;
    let data = generate(&sc).at("simulate")?;
    let out = a.out.clone().or_else(|| cfg.cli.out.clone()).unwrap_or_else(|| PathBuf::from("fsdr-data"));
    create_dir(&out)?;
    let meta = sim_meta(&sc);
    write_table(&out.join("predictors.csv"), &meta, &numbered("x", sc.p), data.x.matrix())?;
    write_responses(&out.join("responses.csv"), &meta, &data.ys)?;
    let mut tmeta = meta.clone();
    tmeta.push(("d0".into(), data.truth.d0.to_string()));
    write_table(&out.join("truth.csv"), &tmeta, &numbered("b", data.truth.d0), &data.truth.b0)?;
    let mut manifest = String::from("command=simulate\n");
    for (k, v) in &tmeta {
        manifest.push_str(&format!("{k}={v}\n"));
    }
    manifest.push_str(&format!("response_kind={}\n", ResponseKind::of(&data.ys)));
    manifest.push_str(&format!("default_metric={}\n", sc.model.metric()));
    manifest.push_str(&format!("default_kernel={}\n", sc.model.kernel().family));
    write_text(&out.join("manifest.txt"), &manifest)?;
    println!("wrote {} ({} observations of model {})", out.display(), sc.n, sc.model);
    Ok(())
}

pub fn cmd_bench(a: &BenchArgs, cfg: &RunConfig) -> CliResult<()> {
    let seed = a.seed.or(cfg.cli.seed).unwrap_or(0);
    let sc = sim_config(a.model.as_deref(), a.n, a.p, a.m, a.noise, seed, cfg)?;
    let methods: Vec<Method> = match a.method.as_deref().or(cfg.cli.method.as_deref()) {
        Some(s) => parse_list("method", s)?,
        None => fsdr_core::experiment::TABLE_METHODS.to_vec(),
    };
    if methods.is_empty() {
        return Err(CliError::config("empty method list"));
    }
    let reps = a.reps.or(cfg.simulate.reps).unwrap_or(20);
    let rows = run_row(&sc, &methods, reps, None).at("bench")?;
    let mut meta = sim_meta(&sc);
    meta.push(("reps".into(), reps.to_string()));
    let kernel = sc.model.kernel();
    meta.push(("metric".into(), sc.model.metric().to_string()));
    meta.push(("kernel".into(), format!("{} (median heuristic)", kernel.family)));
    meta.push(("slices".into(), "auto".into()));
    meta.push(("h_schedule".into(), "default".into()));
    let header: Vec<String> = ["method", "mean", "sd", "failures"]
        .into_iter()
        .map(String::from)
        .chain((0..reps).map(|r| format!("rep{}", r + 1)))
        .collect();
    let records: Vec<Vec<String>> = rows
        .iter()
        .map(|s| {
            let mut rec = vec![s.method.label().to_string(), fmt_sig(s.mean()), fmt_sig(s.sd()), s.failures.to_string()];
            rec.extend(s.errors.iter().map(|e| fmt_sig(*e)));
            rec
        })
        .collect();
    let out = a.out.clone().or_else(|| cfg.cli.out.clone()).unwrap_or_else(|| PathBuf::from("bench.csv"));
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    write_records(&out, &meta, &header, &records)?;
    for s in &rows {
        println!("{:<7} {} ({}) failures={}", s.method.label(), fmt_sig(s.mean()), fmt_sig(s.sd()), s.failures);
    }
    Ok(())
}

/// Wide table: one row per `(model, p, n)` and a `mean (sd)` cell per
/// method, then one benchmark row per `(p, d0)`.
pub fn table_records(res: &TableResult, methods: &[Method]) -> (Vec<String>, Vec<Vec<String>>) {
    let mut header: Vec<String> = vec!["model".into(), "p".into(), "n".into()];
    header.extend(methods.iter().map(|m| m.label().to_string()));
    let mut records = Vec::new();
    let mut keys: Vec<(ModelId, usize, usize)> = Vec::new();
    for c in &res.cells {
        if !keys.contains(&(c.model, c.p, c.n)) {
            keys.push((c.model, c.p, c.n));
        }
    }
    for (model, p, n) in keys {
        let mut rec = vec![model.to_string(), p.to_string(), n.to_string()];
        for &m in methods {
            let cell = res
                .cells
                .iter()
                .find(|c| c.model == model && c.p == p && c.n == n && c.method == m);
            rec.push(match cell {
                Some(c) if c.errors.is_empty() => "failed".into(),
                Some(c) => {
                    let mut s = format!("{} ({})", fmt_sig(c.mean()), fmt_sig(c.sd()));
                    if c.failures > 0 {
                        s.push_str(&format!(" [{} failed]", c.failures));
                    }
                    s
                }
                None => String::new(),
            });
        }
        records.push(rec);
    }
    for &(p, d0, b) in &res.benchmarks {
        records.push(vec!["benchmark".into(), p.to_string(), format!("d0={d0}"), fmt_sig(b)]);
    }
    (header, records)
}

pub fn cmd_reproduce(a: &ReproduceArgs, cfg: &RunConfig) -> CliResult<()> {
    let seed = a.seed.or(cfg.cli.seed).unwrap_or(0);
    let reps = a.reps.or(cfg.simulate.reps).unwrap_or(20);
    let m = a.m.or(cfg.simulate.m).unwrap_or(100);
    let filter = TableFilter {
        models: a.models.as_deref().map(|s| parse_list("model", s)).transpose()?,
        methods: a.methods.as_deref().map(|s| parse_list("method", s)).transpose()?,
        max_p: a.max_p,
        max_n: a.max_n,
    };
    let methods = filter
        .methods
        .clone()
        .unwrap_or_else(|| fsdr_core::experiment::TABLE_METHODS.to_vec());
    let res = reproduce_table(a.table, reps, seed, m, &filter, a.benchmark_pairs).map_err(|e| {
        if e.is_config_error() {
            CliError::from_core(e, "options")
        } else {
            CliError::from_core(e, "reproduce")
        }
    })?;
    let (header, records) = table_records(&res, &methods);
    let meta: Meta = vec![
        ("table".into(), a.table.to_string()),
        ("reps".into(), reps.to_string()),
        ("seed".into(), seed.to_string()),
        ("m".into(), m.to_string()),
        ("gamma".into(), "median heuristic".into()),
        ("h_schedule".into(), "default".into()),
        ("slices".into(), "auto".into()),
        ("benchmark_pairs".into(), a.benchmark_pairs.to_string()),
    ];
    let out = a.out.clone().or_else(|| cfg.cli.out.clone()).unwrap_or_else(|| PathBuf::from(format!("table{}.csv", a.table)));
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    write_records(&out, &meta, &header, &records)?;
    println!("{}", header.join("\t"));
    for r in &records {
        println!("{}", r.join("\t"));
    }
    Ok(())
}
