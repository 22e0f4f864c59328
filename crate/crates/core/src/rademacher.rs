//! Monte-Carlo empirical Rademacher complexity of the norm-ball hypothesis
//! class, and the constant-filter lower-bound witness.
//!
//! `estimate_rc` maximizes `(1/m) sum_i eps_i h(x_i)` by projected gradient
//! ascent, so every reported value is a lower estimate of the true
//! empirical complexity.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use thiserror::Error;

use crate::data::{DataError, Dataset};
use crate::group::{GroupRef, GroupSignal};
use crate::models::{self, ModelError, ModelSpec, Params, Pooling, Variant};
use crate::seed;
use crate::training::project_in_place;

/// Constant in `E|sum eps_i v_i| >= c (sum |v_i|^2)^{1/2}`.
pub const KHINTCHINE_C: f64 = std::f64::consts::FRAC_1_SQRT_2;
pub const DEFAULT_N_MC: usize = 64;

#[derive(Debug, Error)]
pub enum RademacherError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("witness requires {0}")]
    Precondition(String),
}

/// Projected-ascent settings for the inner supremum.
///
/// Each step moves `u` and the filters along their normalized gradient
/// blocks by `step_size` times the block radius, then projects.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub restarts: usize,
    pub steps: usize,
    pub step_size: f64,
    pub decay_every: usize,
    pub decay: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            restarts: 8,
            steps: 300,
            step_size: 0.05,
            decay_every: 100,
            decay: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RademacherEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_mc: usize,
    pub sup_solver_restarts: usize,
    pub witness_value: Option<f64>,
    /// Per-sample suprema, ordered by sample index.
    pub samples: Vec<f64>,
}

/// `(mean, standard error)` with the `n - 1` variance.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Rademacher signs for sample `idx`; shared by every configuration that
/// uses the same seed.
pub fn signs(seed_: u64, idx: u64, m: usize) -> Vec<f64> {
    let mut rng = seed::rng(seed_, &[idx, 0]);
    (0..m).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect()
}

fn objective(spec: &ModelSpec, p: &Params, xs: &[GroupSignal], eps: &[f64], grad: Option<&mut Params>) -> Result<f64, ModelError> {
    let m = xs.len() as f64;
    let mut total = 0.0;
    match grad {
        Some(g) => {
            g.u.iter_mut().for_each(|v| *v = 0.0);
            g.filters.iter_mut().for_each(|v| *v = 0.0);
            for (x, &e) in xs.iter().zip(eps) {
                total += e * models::accumulate_score_gradient(spec, p, x, e / m, g)?;
            }
        }
        None => {
            for (x, &e) in xs.iter().zip(eps) {
                total += e * models::forward(spec, p, x)?;
            }
        }
    }
    Ok(total / m)
}

fn boundary_init(spec: &ModelSpec, m1: f64, m2: f64, seed_: u64, idx: u64, restart: u64) -> Params {
    let mut rng = seed::rng(seed_, &[idx, 1, restart]);
    let mut p = Params::random(spec, &mut rng);
    let (a, b) = p.norms(spec);
    if a > 0.0 {
        p.u.iter_mut().for_each(|v| *v *= m1 / a);
    }
    if b > 0.0 {
        p.filters.iter_mut().for_each(|v| *v *= m2 / b);
    }
    p
}

/// Best objective found for one sign vector, clamped at 0.
pub fn sup_for_signs(
    spec: &ModelSpec,
    m1: f64,
    m2: f64,
    xs: &[GroupSignal],
    eps: &[f64],
    cfg: &SolverConfig,
    seed_: u64,
    idx: u64,
) -> Result<f64, ModelError> {
    if m1 == 0.0 || m2 == 0.0 {
        return Ok(0.0);
    }
    let scale = spec.filter_norm_scale();
    let mut best: f64 = 0.0;
    let mut g = Params::zeros(spec);
    for r in 0..cfg.restarts {
        let mut p = boundary_init(spec, m1, m2, seed_, idx, r as u64);
        let mut eta = cfg.step_size;
        for step in 0..cfg.steps {
            if step > 0 && cfg.decay_every > 0 && step % cfg.decay_every == 0 {
                eta *= cfg.decay;
            }
            let val = objective(spec, &p, xs, eps, Some(&mut g))?;
            best = best.max(val);
            let gu = models::l2(&g.u);
            let gw = models::l2(&g.filters) * scale;
            if gu > 0.0 {
                let s = eta * m1 / gu;
                p.u.iter_mut().zip(&g.u).for_each(|(a, b)| *a += s * b);
            }
            if gw > 0.0 {
                // the spatial-equivalent step for frequency coefficients
                let s = eta * m2 * scale / gw;
                p.filters.iter_mut().zip(&g.filters).for_each(|(a, b)| *a += s * b);
            }
            p.symmetrize(spec);
            project_in_place(spec, &mut p, m1, m2);
        }
        best = best.max(objective(spec, &p, xs, eps, None)?);
    }
    Ok(best)
}

/// Monte-Carlo estimate over `n_mc` sign vectors, run in parallel and
/// merged in sample order.
pub fn estimate_rc(
    spec: &ModelSpec,
    m1: f64,
    m2: f64,
    data: &Dataset,
    n_mc: usize,
    cfg: &SolverConfig,
    seed_: u64,
) -> Result<RademacherEstimate, RademacherError> {
    if n_mc == 0 {
        return Err(RademacherError::Config("n_mc must be >= 1".into()));
    }
    if cfg.restarts == 0 || cfg.steps == 0 || !(cfg.step_size > 0.0) {
        return Err(RademacherError::Config("solver needs restarts, steps and step_size > 0".into()));
    }
    if !(m1 >= 0.0 && m2 >= 0.0) {
        return Err(RademacherError::Config("radii must be >= 0".into()));
    }
    let xs = data.inputs();
    let samples = (0..n_mc as u64)
        .into_par_iter()
        .map(|idx| {
            let eps = signs(seed_, idx, xs.len());
            sup_for_signs(spec, m1, m2, xs, &eps, cfg, seed_, idx)
        })
        .collect::<Result<Vec<f64>, _>>()?;
    let (mean, std_error) = mean_se(&samples);
    Ok(RademacherEstimate {
        mean,
        std_error,
        n_mc,
        sup_solver_restarts: cfg.restarts,
        witness_value: None,
        samples,
    })
}

/// Witness statistics on a positive-orthant dataset.
///
/// With `t_i` the per-channel sums of `x_i` and `V = sum_i eps_i t_i`:
/// `unnormalized` is `(M1 M2 / m) E|V|`, the family value when the
/// constant-filter norm is not charged its `sqrt(|G|)` factor. `certified`
/// is `(M1 M2 / (m sqrt|G|)) E max(|V+|, |V-|)`, attained by one hidden unit
/// with nonnegative constant filters inside the norm ball, so it is a true
/// lower bound on the empirical complexity.
#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub unnormalized: f64,
    pub unnormalized_se: f64,
    pub certified: f64,
    pub certified_se: f64,
    /// `KHINTCHINE_C * sqrt(sum |t_i|^2) * M1 M2 / m`
    pub khintchine_floor: f64,
    pub n_mc: usize,
}

/// Per-channel sums `t_i(k) = 1^T x_i(k)`.
pub fn channel_sums(x: &GroupSignal) -> Vec<f64> {
    (0..x.channels()).map(|k| x.channel(k).iter().sum()).collect()
}

pub fn check_positive_orthant(data: &Dataset) -> Result<(), RademacherError> {
    let b = data.b_x();
    for (i, x) in data.inputs().iter().enumerate() {
        if x.values().iter().any(|&v| v < 0.0) {
            return Err(RademacherError::Precondition(format!("nonnegative entries (sample {i})")));
        }
        if (x.norm() - b).abs() > 1e-9 * b.max(1.0) {
            return Err(RademacherError::Precondition(format!(
                "every |x_i| = b_x (sample {i} has {}, b_x = {b})",
                x.norm()
            )));
        }
    }
    Ok(())
}

pub fn lower_bound_witness(
    data: &Dataset,
    m1: f64,
    m2: f64,
    n_mc: usize,
    seed_: u64,
) -> Result<Witness, RademacherError> {
    if n_mc == 0 {
        return Err(RademacherError::Config("n_mc must be >= 1".into()));
    }
    check_positive_orthant(data)?;
    let ts: Vec<Vec<f64>> = data.inputs().iter().map(channel_sums).collect();
    let m = ts.len();
    let c0 = data.channels();
    let root_g = (data.group().order() as f64).sqrt();
    let scale = m1 * m2 / m as f64;
    let mut plain = Vec::with_capacity(n_mc);
    let mut cert = Vec::with_capacity(n_mc);
    for idx in 0..n_mc as u64 {
        let eps = signs(seed_, idx, m);
        let mut v = vec![0.0; c0];
        for (t, e) in ts.iter().zip(&eps) {
            v.iter_mut().zip(t).for_each(|(a, b)| *a += e * b);
        }
        let pos = v.iter().map(|a| a.max(0.0).powi(2)).sum::<f64>().sqrt();
        let neg = v.iter().map(|a| a.min(0.0).powi(2)).sum::<f64>().sqrt();
        plain.push(scale * models::l2(&v));
        cert.push(scale / root_g * pos.max(neg));
    }
    let (unnormalized, unnormalized_se) = mean_se(&plain);
    let (certified, certified_se) = mean_se(&cert);
    let sq: f64 = ts.iter().flatten().map(|v| v * v).sum();
    Ok(Witness {
        unnormalized,
        unnormalized_se,
        certified,
        certified_se,
        khintchine_floor: KHINTCHINE_C * sq.sqrt() * scale,
        n_mc,
    })
}

/// Model shape the witness family lives in.
pub fn witness_supported(spec: &ModelSpec) -> Result<(), RademacherError> {
    if spec.pooling() != Pooling::Average || !matches!(spec.variant(), Variant::Spatial | Variant::Frequency(_)) {
        return Err(RademacherError::Precondition(
            "average pooling with a group-convolution first layer".into(),
        ));
    }
    Ok(())
}

/// Entrywise-nonnegative signals rescaled to norm exactly `b_x`, labels
/// alternating `+1, -1`.
pub fn make_positive_orthant_dataset(
    group: GroupRef,
    c0: usize,
    m: usize,
    b_x: f64,
    seed_: u64,
) -> Result<Dataset, RademacherError> {
    if m == 0 || c0 == 0 {
        return Err(RademacherError::Config("m and c0 must be >= 1".into()));
    }
    if !(b_x > 0.0 && b_x.is_finite()) {
        return Err(RademacherError::Config("b_x must be positive".into()));
    }
    let mut rng = seed::rng(seed_, &[]);
    let dim = group.order() * c0;
    let mut inputs = Vec::with_capacity(m);
    for _ in 0..m {
        let mut v: Vec<f64> = (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal).abs()).collect();
        let n = models::l2(&v);
        v.iter_mut().for_each(|a| *a *= b_x / n);
        inputs.push(GroupSignal::from_channels(group.clone(), c0, v).map_err(DataError::from)?);
    }
    let labels = (0..m).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
    Ok(Dataset::new(group, c0, inputs, labels)?)
}
