//! The group-size sweep: generate data over an ambient group, restrict it to
//! each subgroup by coset blocking, train, measure norms and evaluate the
//! general-pooling bound for every `(group, m, trial)` cell.

use std::fmt::Write as _;
use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;
use thiserror::Error;

use crate::bounds::{self, BoundInputs};
use crate::config::{ConfigError, RawConfig};
use crate::data::{gen_synthetic, Dataset, SyntheticTaskSpec};
use crate::group::{parse_group, GroupRef, Subgroup};
use crate::models::{ModelSpec, Pooling, SharingBasis};
use crate::plot::{Line, Scatter};
use crate::seed;
use crate::stats;
use crate::training::{self, Optimizer, TrainConfig};

pub const HEADER: &str = "group,m,trial,seed,train_err,test_err,gen_gap,M1,M2,b_x,bound_complexity,bound_total";
/// The shipped group-size sweep (`configs/fig2a.conf`).
pub const DEFAULT_CONFIG: &str = include_str!("../../../configs/fig2a.conf");

pub const COLUMNS: [&str; 12] = [
    "group",
    "m",
    "trial",
    "seed",
    "train_err",
    "test_err",
    "gen_gap",
    "M1",
    "M2",
    "b_x",
    "bound_complexity",
    "bound_total",
];

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("results csv: {0}")]
    Csv(String),
    #[error("results csv is missing column {0:?}")]
    MissingColumn(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("thread pool: {0}")]
    Pool(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VariantKind {
    Spatial,
    Frequency,
    WeightShare,
}

impl std::str::FromStr for VariantKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "spatial" => Ok(VariantKind::Spatial),
            "frequency" => Ok(VariantKind::Frequency),
            "weightshare" => Ok(VariantKind::WeightShare),
            _ => Err(format!("unknown variant {s:?} (spatial, frequency, weightshare)")),
        }
    }
}

/// `[model]` section.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSettings {
    pub variant: VariantKind,
    pub pooling: Pooling,
    /// Target hidden width `c1 |G|`; `c1 = max(1, hidden_width / |G|)`.
    pub hidden_width: usize,
}

impl ModelSettings {
    pub const KEYS: [&'static str; 3] = ["model.variant", "model.pooling", "model.hidden_width"];

    pub fn from_raw(raw: &RawConfig) -> Result<Self, ConfigError> {
        let s = ModelSettings {
            variant: raw.get_or("model.variant", VariantKind::Spatial)?,
            pooling: raw.get_or("model.pooling", Pooling::Average)?,
            hidden_width: raw.get_or("model.hidden_width", 64)?,
        };
        if s.hidden_width == 0 {
            return Err(ConfigError::Invalid("model.hidden_width must be >= 1".into()));
        }
        Ok(s)
    }

    pub fn build(&self, group: &GroupRef, c0: usize) -> Result<ModelSpec, crate::models::ModelError> {
        let c1 = (self.hidden_width / group.order()).max(1);
        match self.variant {
            VariantKind::Spatial => ModelSpec::spatial(group.clone(), self.pooling, c0, c1),
            VariantKind::Frequency => ModelSpec::frequency(group.clone(), self.pooling, c0, c1),
            VariantKind::WeightShare => {
                ModelSpec::weight_share(group.clone(), SharingBasis::circulant(group), self.pooling, c0, c1)
            }
        }
    }
}

/// `[train]` section; the seed is filled in per run.
pub fn train_settings(raw: &RawConfig) -> Result<TrainConfig, ConfigError> {
    let d = TrainConfig::default();
    let optimizer = match raw.get_or("train.optimizer", "adam".to_string())?.as_str() {
        "adam" => Optimizer::ADAM,
        "sgd" => Optimizer::Sgd,
        other => return Err(ConfigError::Invalid(format!("train.optimizer: unknown {other:?}"))),
    };
    let m1: Option<f64> = raw.get("train.constraint_m1")?;
    let m2: Option<f64> = raw.get("train.constraint_m2")?;
    let constraint = match (m1, m2) {
        (Some(a), Some(b)) => Some((a, b)),
        (None, None) => None,
        _ => {
            return Err(ConfigError::Invalid(
                "train.constraint_m1 and train.constraint_m2 go together".into(),
            ))
        }
    };
    let cfg = TrainConfig {
        steps: raw.get_or("train.steps", d.steps)?,
        step_size: raw.get_or("train.step_size", d.step_size)?,
        batch: raw.get_or("train.batch", d.batch)?,
        seed: 0,
        constraint,
        optimizer,
        loss: raw.get_or("train.loss", d.loss)?,
    };
    if cfg.steps == 0 || !(cfg.step_size > 0.0) {
        return Err(ConfigError::Invalid("train.steps and train.step_size must be positive".into()));
    }
    Ok(cfg)
}

pub const TRAIN_KEYS: [&str; 7] = [
    "train.steps",
    "train.step_size",
    "train.batch",
    "train.optimizer",
    "train.loss",
    "train.constraint_m1",
    "train.constraint_m2",
];

/// Synthetic-data settings from `[data]`, without group, sizes and seed.
#[derive(Debug, Clone, PartialEq)]
pub struct DataSettings {
    pub channels: usize,
    pub templates_per_class: usize,
    pub noise_sigma: f64,
    pub m_test: usize,
    pub augment: bool,
}

impl DataSettings {
    fn from_raw(raw: &RawConfig) -> Result<Self, ConfigError> {
        Ok(DataSettings {
            channels: raw.get_or("data.channels", 8)?,
            templates_per_class: raw.get_or("data.templates_per_class", 2)?,
            noise_sigma: raw.get_or("data.noise_sigma", 1.0)?,
            m_test: raw.get_or("data.m_test", 1000)?,
            augment: raw.get_or("data.augment", true)?,
        })
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub groups: Vec<GroupRef>,
    pub m_values: Vec<usize>,
    pub trials: usize,
    pub master_seed: u64,
    pub delta: f64,
    /// Group the data lives on; every entry of `groups` must embed in it.
    pub ambient: GroupRef,
    pub data: DataSettings,
    pub model: ModelSettings,
    pub train: TrainConfig,
}

impl ExperimentConfig {
    pub fn keys() -> Vec<&'static str> {
        let mut k = vec![
            "experiment.groups",
            "experiment.m_values",
            "experiment.trials",
            "experiment.master_seed",
            "experiment.delta",
            "data.ambient",
            "data.channels",
            "data.templates_per_class",
            "data.noise_sigma",
            "data.m_test",
            "data.augment",
        ];
        k.extend(ModelSettings::KEYS);
        k.extend(TRAIN_KEYS);
        k
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let raw: RawConfig = text.parse()?;
        raw.check_keys(&Self::keys())?;
        let group_specs: Vec<String> = raw
            .get_list("experiment.groups")?
            .ok_or_else(|| ConfigError::Missing("experiment.groups".into()))?;
        let groups = group_specs
            .iter()
            .map(|s| parse_group(s).map_err(|e| ConfigError::Invalid(format!("experiment.groups: {e}"))))
            .collect::<Result<Vec<_>, _>>()?;
        let m_values: Vec<usize> = raw
            .get_list("experiment.m_values")?
            .ok_or_else(|| ConfigError::Missing("experiment.m_values".into()))?;
        if groups.is_empty() || m_values.is_empty() || m_values.contains(&0) {
            return Err(ConfigError::Invalid(
                "experiment.groups and experiment.m_values must be nonempty (m >= 1)".into(),
            ));
        }
        let ambient = match raw.get::<String>("data.ambient")? {
            Some(s) => parse_group(&s).map_err(|e| ConfigError::Invalid(format!("data.ambient: {e}")))?,
            None => groups.iter().max_by_key(|g| g.order()).cloned().expect("nonempty"),
        };
        for g in &groups {
            Subgroup::embed(g.clone(), ambient.clone()).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        }
        let trials = raw.get_or("experiment.trials", 1usize)?;
        if trials == 0 {
            return Err(ConfigError::Invalid("experiment.trials must be >= 1".into()));
        }
        let delta = raw.get_or("experiment.delta", 0.05)?;
        if !(delta > 0.0 && delta < 1.0) {
            return Err(ConfigError::Invalid("experiment.delta must lie in (0, 1)".into()));
        }
        Ok(ExperimentConfig {
            groups,
            m_values,
            trials,
            master_seed: raw.get_or("experiment.master_seed", 0)?,
            delta,
            ambient,
            data: DataSettings::from_raw(&raw)?,
            model: ModelSettings::from_raw(&raw)?,
            train: train_settings(&raw)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellMetrics {
    pub train_err: f64,
    pub test_err: f64,
    pub gen_gap: f64,
    pub m1: f64,
    pub m2: f64,
    pub b_x: f64,
    pub bound_complexity: f64,
    pub bound_total: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub group: String,
    pub m: usize,
    pub trial: usize,
    pub seed: u64,
    pub outcome: Result<CellMetrics, String>,
}

pub fn cell_seed(master: u64, group_idx: usize, m_idx: usize, trial: usize) -> u64 {
    seed::split(master, &[group_idx as u64, m_idx as u64, trial as u64])
}

/// Data for one cell, already restricted to the cell's group.
pub fn cell_data(cfg: &ExperimentConfig, group: &GroupRef, m: usize, cell_seed: u64) -> Result<(Dataset, Dataset), String> {
    let task = SyntheticTaskSpec {
        group: cfg.ambient.clone(),
        c0: cfg.data.channels,
        templates_per_class: cfg.data.templates_per_class,
        noise_sigma: cfg.data.noise_sigma,
        m_train: m,
        m_test: cfg.data.m_test,
        seed: seed::split(cell_seed, &[0]),
        augment: cfg.data.augment,
    };
    let (train, test) = gen_synthetic(&task).map_err(|e| e.to_string())?;
    let sub = Subgroup::embed(group.clone(), cfg.ambient.clone()).map_err(|e| e.to_string())?;
    Ok((
        train.restrict(&sub).map_err(|e| e.to_string())?,
        test.restrict(&sub).map_err(|e| e.to_string())?,
    ))
}

fn run_cell_inner(cfg: &ExperimentConfig, group: &GroupRef, m: usize, cell_seed: u64) -> Result<CellMetrics, String> {
    let (train, test) = cell_data(cfg, group, m, cell_seed)?;
    let spec = cfg.model.build(group, train.channels()).map_err(|e| e.to_string())?;
    let tcfg = TrainConfig {
        seed: seed::split(cell_seed, &[1]),
        ..cfg.train.clone()
    };
    let out = training::train(&spec, &train, &tcfg).map_err(|e| e.to_string())?;
    let train_err = training::error_rate(&spec, &out.params, &train).map_err(|e| e.to_string())?;
    let test_err = training::error_rate(&spec, &out.params, &test).map_err(|e| e.to_string())?;
    let inp = bounds::measure_inputs(&spec, &out.params, &train, cfg.delta).map_err(|e| e.to_string())?;
    let report = bounds::bound_general_pooling(&inp).map_err(|e| e.to_string())?;
    Ok(CellMetrics {
        train_err,
        test_err,
        gen_gap: test_err - train_err,
        m1: inp.m1,
        m2: inp.m2,
        b_x: inp.b_x,
        bound_complexity: report.complexity_term,
        bound_total: report.total,
    })
}

pub fn run_cell(cfg: &ExperimentConfig, group_idx: usize, m_idx: usize, trial: usize) -> CellResult {
    let group = &cfg.groups[group_idx];
    let m = cfg.m_values[m_idx];
    let s = cell_seed(cfg.master_seed, group_idx, m_idx, trial);
    log::debug!("cell {} m={m} trial={trial} seed={s}", group.spec_string());
    let outcome = run_cell_inner(cfg, group, m, s);
    if let Err(e) = &outcome {
        log::error!("cell {} m={m} trial={trial} failed: {e}", group.spec_string());
    }
    CellResult {
        group: group.spec_string(),
        m,
        trial,
        seed: s,
        outcome,
    }
}

/// All cells in `(group, m, trial)` order, computed on up to `jobs` threads.
pub fn run(cfg: &ExperimentConfig, jobs: usize) -> Result<Vec<CellResult>, ExperimentError> {
    let cells: Vec<(usize, usize, usize)> = (0..cfg.groups.len())
        .flat_map(|g| (0..cfg.m_values.len()).flat_map(move |m| (0..cfg.trials).map(move |t| (g, m, t))))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| ExperimentError::Pool(e.to_string()))?;
    let cfg = Arc::new(cfg.clone());
    Ok(pool.install(|| cells.par_iter().map(|&(g, m, t)| run_cell(&cfg, g, m, t)).collect()))
}

/// Writes the results table. An `error` column is appended only when some
/// cell failed. `timestamp` adds a leading `# generated_at=` comment.
pub fn write_results<W: Write>(mut out: W, rows: &[CellResult], timestamp: Option<u64>) -> std::io::Result<()> {
    if let Some(t) = timestamp {
        writeln!(out, "# generated_at={t}")?;
    }
    let any_err = rows.iter().any(|r| r.outcome.is_err());
    if any_err {
        writeln!(out, "{HEADER},error")?;
    } else {
        writeln!(out, "{HEADER}")?;
    }
    for r in rows {
        let mut line = format!("{},{},{},{}", r.group, r.m, r.trial, r.seed);
        match &r.outcome {
            Ok(c) => {
                for v in [
                    c.train_err,
                    c.test_err,
                    c.gen_gap,
                    c.m1,
                    c.m2,
                    c.b_x,
                    c.bound_complexity,
                    c.bound_total,
                ] {
                    write!(line, ",{v}").unwrap();
                }
                if any_err {
                    line.push(',');
                }
            }
            Err(e) => {
                line.push_str(",,,,,,,,,");
                line.push_str(&e.replace([',', '\n', '\r'], ";"));
            }
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

/// One parsed results row (failed rows are skipped by [`read_results`]).
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub group: String,
    pub m: usize,
    pub trial: usize,
    pub metrics: CellMetrics,
}

pub fn read_results(text: &str) -> Result<Vec<ResultRow>, ExperimentError> {
    let mut lines = text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty());
    let header: Vec<&str> = lines
        .next()
        .ok_or_else(|| ExperimentError::Csv("empty file".into()))?
        .split(',')
        .collect();
    let mut idx = [0usize; 12];
    for (slot, name) in idx.iter_mut().zip(COLUMNS) {
        *slot = header
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| ExperimentError::MissingColumn(name.to_string()))?;
    }
    let err_col = header.iter().position(|h| h.trim() == "error");
    let mut rows = Vec::new();
    for (n, line) in lines.enumerate() {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != header.len() {
            return Err(ExperimentError::Csv(format!("data row {} has {} fields", n + 1, f.len())));
        }
        if err_col.is_some_and(|c| !f[c].is_empty()) {
            continue;
        }
        let num = |i: usize| {
            f[idx[i]]
                .parse::<f64>()
                .map_err(|e| ExperimentError::Csv(format!("data row {}: {}: {e}", n + 1, COLUMNS[i])))
        };
        let int = |i: usize| {
            f[idx[i]]
                .parse::<usize>()
                .map_err(|e| ExperimentError::Csv(format!("data row {}: {}: {e}", n + 1, COLUMNS[i])))
        };
        rows.push(ResultRow {
            group: f[idx[0]].to_string(),
            m: int(1)?,
            trial: int(2)?,
            metrics: CellMetrics {
                train_err: num(4)?,
                test_err: num(5)?,
                gen_gap: num(6)?,
                m1: num(7)?,
                m2: num(8)?,
                b_x: num(9)?,
                bound_complexity: num(10)?,
                bound_total: num(11)?,
            },
        });
    }
    Ok(rows)
}

pub fn successful(rows: &[CellResult]) -> Vec<ResultRow> {
    rows.iter()
        .filter_map(|r| {
            r.outcome.as_ref().ok().map(|c| ResultRow {
                group: r.group.clone(),
                m: r.m,
                trial: r.trial,
                metrics: *c,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub spearman: Option<f64>,
    /// Log-log slope of the measured complexity term against `m`.
    pub measured_slope: Option<f64>,
    /// Same slope with the bound recomputed at the mean measured norms.
    pub fixed_norm_slope: Option<f64>,
    /// `(group, mean complexity term, mean gap)` in first-appearance order.
    pub by_group: Vec<(String, f64, f64)>,
}

pub fn summarize(rows: &[ResultRow]) -> Summary {
    let gaps: Vec<f64> = rows.iter().map(|r| r.metrics.gen_gap).collect();
    let cx: Vec<f64> = rows.iter().map(|r| r.metrics.bound_complexity).collect();
    let ms: Vec<f64> = rows.iter().map(|r| r.m as f64).collect();
    let mut by_group: Vec<(String, f64, f64, usize)> = Vec::new();
    for r in rows {
        match by_group.iter_mut().find(|g| g.0 == r.group) {
            Some(g) => {
                g.1 += r.metrics.bound_complexity;
                g.2 += r.metrics.gen_gap;
                g.3 += 1;
            }
            None => by_group.push((r.group.clone(), r.metrics.bound_complexity, r.metrics.gen_gap, 1)),
        }
    }
    let fixed_norm_slope = if rows.is_empty() {
        None
    } else {
        let n = rows.len() as f64;
        let (m1, m2, bx) = rows.iter().fold((0.0, 0.0, 0.0), |a, r| {
            (a.0 + r.metrics.m1 / n, a.1 + r.metrics.m2 / n, a.2 + r.metrics.b_x / n)
        });
        let fixed: Vec<f64> = ms
            .iter()
            .map(|&m| bounds::bound_general_pooling(&BoundInputs::new(m1, m2, bx, m as usize, 0.05, 1)).map_or(f64::NAN, |r| r.complexity_term))
            .collect();
        stats::loglog_slope(&ms, &fixed)
    };
    Summary {
        spearman: stats::spearman(&gaps, &cx),
        measured_slope: stats::loglog_slope(&ms, &cx),
        fixed_norm_slope,
        by_group: by_group
            .into_iter()
            .map(|(g, c, gap, k)| (g, c / k as f64, gap / k as f64))
            .collect(),
    }
}

fn series(rows: &[ResultRow]) -> (Vec<String>, Vec<usize>) {
    let mut names: Vec<String> = Vec::new();
    let ids = rows
        .iter()
        .map(|r| match names.iter().position(|n| *n == r.group) {
            Some(i) => i,
            None => {
                names.push(r.group.clone());
                names.len() - 1
            }
        })
        .collect();
    (names, ids)
}

/// Generalization gap against the complexity term.
pub fn scatter_plot(rows: &[ResultRow]) -> Scatter {
    let (names, ids) = series(rows);
    let rho = stats::spearman(
        &rows.iter().map(|r| r.metrics.gen_gap).collect::<Vec<_>>(),
        &rows.iter().map(|r| r.metrics.bound_complexity).collect::<Vec<_>>(),
    );
    Scatter {
        title: match rho {
            Some(r) => format!("generalization gap vs bound (Spearman {r:.3})"),
            None => "generalization gap vs bound".into(),
        },
        x_label: "bound complexity term".into(),
        y_label: "test error - train error".into(),
        points: rows
            .iter()
            .zip(ids)
            .map(|(r, k)| (r.metrics.bound_complexity, r.metrics.gen_gap, k))
            .collect(),
        series_names: names,
        line: None,
    }
}

/// `log10` complexity term against `log10 m`, with the least-squares line.
pub fn scaling_plot(rows: &[ResultRow]) -> Scatter {
    let (names, ids) = series(rows);
    let pts: Vec<(f64, f64, usize)> = rows
        .iter()
        .zip(ids)
        .filter(|(r, _)| r.metrics.bound_complexity > 0.0)
        .map(|(r, k)| ((r.m as f64).log10(), r.metrics.bound_complexity.log10(), k))
        .collect();
    let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let line = stats::ols(&xs, &ys).map(|(slope, intercept)| Line {
        slope,
        intercept,
        label: format!("fitted slope {slope:.3}"),
    });
    Scatter {
        title: "bound vs number of samples".into(),
        x_label: "log10 m".into(),
        y_label: "log10 bound complexity term".into(),
        points: pts,
        series_names: names,
        line,
    }
}
