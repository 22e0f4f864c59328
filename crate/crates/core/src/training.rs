//! Losses, exact gradients, norm-ball projection and first-order training.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use thiserror::Error;

use crate::data::Dataset;
use crate::group::GroupSignal;
use crate::models::{self, ModelError, ModelSpec, Params};
use crate::seed;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("training diverged at step {step}: loss = {loss}")]
    Diverged { step: usize, loss: f64 },
    #[error("invalid training config: {0}")]
    Config(String),
    #[error("label {0} is not -1 or +1")]
    Label(f64),
}

/// 1-Lipschitz margin losses on labels `y in {-1, +1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    /// `max(0, 1 - y s)`
    Hinge,
    /// `ln(1 + exp(-y s))`
    Logistic,
}

impl LossKind {
    pub fn value(self, s: f64, y: f64) -> f64 {
        let margin = y * s;
        match self {
            LossKind::Hinge => (1.0 - margin).max(0.0),
            LossKind::Logistic => {
                if margin > 0.0 {
                    (-margin).exp().ln_1p()
                } else {
                    -margin + margin.exp().ln_1p()
                }
            }
        }
    }

    /// `d loss / d s`; the hinge kink at `y s = 1` takes 0.
    pub fn derivative(self, s: f64, y: f64) -> f64 {
        let margin = y * s;
        match self {
            LossKind::Hinge => {
                if margin < 1.0 {
                    -y
                } else {
                    0.0
                }
            }
            LossKind::Logistic => {
                // -y * sigmoid(-margin), evaluated without overflow
                if margin > 0.0 {
                    let e = (-margin).exp();
                    -y * e / (1.0 + e)
                } else {
                    -y / (1.0 + margin.exp())
                }
            }
        }
    }
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LossKind::Hinge => "hinge",
            LossKind::Logistic => "logistic",
        })
    }
}

impl FromStr for LossKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "hinge" => Ok(LossKind::Hinge),
            "logistic" => Ok(LossKind::Logistic),
            _ => Err(format!("unknown loss {s:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Optimizer {
    Sgd,
    Adam { beta1: f64, beta2: f64, eps: f64 },
}

impl Optimizer {
    pub const ADAM: Optimizer = Optimizer::Adam {
        beta1: 0.9,
        beta2: 0.999,
        eps: 1e-8,
    };
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub steps: usize,
    pub step_size: f64,
    /// Minibatch size; 0 means full batch.
    pub batch: usize,
    pub seed: u64,
    /// Optional `(M1, M2)` radii enforced after every step.
    pub constraint: Option<(f64, f64)>,
    pub optimizer: Optimizer,
    pub loss: LossKind,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            steps: 300,
            step_size: 1e-2,
            batch: 0,
            seed: 0,
            constraint: None,
            optimizer: Optimizer::ADAM,
            loss: LossKind::Logistic,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<(), TrainError> {
        if self.steps == 0 {
            return Err(TrainError::Config("steps must be >= 1".into()));
        }
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return Err(TrainError::Config("step_size must be positive".into()));
        }
        if let Some((a, b)) = self.constraint {
            if !(a > 0.0 && b > 0.0) {
                return Err(TrainError::Config("constraint radii must be positive".into()));
            }
        }
        Ok(())
    }
}

/// Loss value and its exact subgradient with respect to all parameters.
pub fn grad(
    spec: &ModelSpec,
    p: &Params,
    x: &GroupSignal,
    y: f64,
    loss: LossKind,
) -> Result<(f64, Params), TrainError> {
    let mut g = Params::zeros(spec);
    let value = accumulate_loss_grad(spec, p, x, y, loss, 1.0, &mut g)?;
    Ok((value, g))
}

fn accumulate_loss_grad(
    spec: &ModelSpec,
    p: &Params,
    x: &GroupSignal,
    y: f64,
    loss: LossKind,
    weight: f64,
    g: &mut Params,
) -> Result<f64, TrainError> {
    if y != 1.0 && y != -1.0 {
        return Err(TrainError::Label(y));
    }
    let trace = models::forward_trace(spec, p, x)?;
    let s = trace.output;
    let dl = loss.derivative(s, y);
    if dl != 0.0 {
        models::backward(spec, p, x, &trace, weight * dl, g);
    }
    Ok(loss.value(s, y))
}

/// Radial projection onto `{|u| <= m1, M2(filters) <= m2}`.
///
/// `M2` is measured like [`Params::norms`], so frequency coefficients are
/// constrained through their spatial-equivalent norm.
pub fn project_norm_ball(spec: &ModelSpec, p: &Params, m1: f64, m2: f64) -> Params {
    let mut q = p.clone();
    project_in_place(spec, &mut q, m1, m2);
    q
}

pub fn project_in_place(spec: &ModelSpec, p: &mut Params, m1: f64, m2: f64) {
    let nu = p.u_norm();
    if nu > m1 {
        let s = m1 / nu;
        p.u.iter_mut().for_each(|v| *v *= s);
    }
    let nw = p.raw_filter_norm() * spec.filter_norm_scale();
    if nw > m2 {
        let s = m2 / nw;
        p.filters.iter_mut().for_each(|v| *v *= s);
    }
}

/// Mean loss over a dataset.
pub fn empirical_loss(spec: &ModelSpec, p: &Params, data: &Dataset, loss: LossKind) -> Result<f64, TrainError> {
    let mut total = 0.0;
    for (x, &y) in data.inputs().iter().zip(data.labels()) {
        total += loss.value(models::forward(spec, p, x)?, y);
    }
    Ok(total / data.len() as f64)
}

/// Fraction of samples with `sign(h(x)) != y` (a zero score counts as an error).
pub fn error_rate(spec: &ModelSpec, p: &Params, data: &Dataset) -> Result<f64, TrainError> {
    let mut wrong = 0usize;
    for (x, &y) in data.inputs().iter().zip(data.labels()) {
        if y * models::forward(spec, p, x)? <= 0.0 {
            wrong += 1;
        }
    }
    Ok(wrong as f64 / data.len() as f64)
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: Params,
    /// `(step, mean loss over the batch used at that step)`, steps from 1.
    pub history: Vec<(usize, f64)>,
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

/// Trains from a seeded Gaussian initialization.
pub fn train(spec: &ModelSpec, data: &Dataset, cfg: &TrainConfig) -> Result<TrainOutcome, TrainError> {
    let mut init_rng = seed::rng(cfg.seed, &[0]);
    let init = Params::random(spec, &mut init_rng);
    train_from(spec, data, cfg, init)
}

pub fn train_from(
    spec: &ModelSpec,
    data: &Dataset,
    cfg: &TrainConfig,
    init: Params,
) -> Result<TrainOutcome, TrainError> {
    cfg.validate()?;
    init.check(spec)?;
    let mut p = init;
    if let Some((m1, m2)) = cfg.constraint {
        project_in_place(spec, &mut p, m1, m2);
    }
    let m = data.len();
    let batch = if cfg.batch == 0 || cfg.batch > m { m } else { cfg.batch };
    let mut order: Vec<usize> = (0..m).collect();
    let mut shuffle_rng = seed::rng(cfg.seed, &[1]);
    let mut cursor = m;
    let nparams = p.u.len() + p.filters.len();
    let mut adam = Adam {
        m: vec![0.0; nparams],
        v: vec![0.0; nparams],
        t: 0,
    };
    let mut g = Params::zeros(spec);
    let mut history = Vec::with_capacity(cfg.steps);
    for step in 1..=cfg.steps {
        g.u.iter_mut().for_each(|v| *v = 0.0);
        g.filters.iter_mut().for_each(|v| *v = 0.0);
        let idx: &[usize] = if batch == m {
            &order
        } else {
            if cursor + batch > m {
                order.shuffle(&mut shuffle_rng);
                cursor = 0;
            }
            cursor += batch;
            &order[cursor - batch..cursor]
        };
        let w = 1.0 / idx.len() as f64;
        let mut loss = 0.0;
        for &i in idx {
            loss += accumulate_loss_grad(spec, &p, &data.inputs()[i], data.labels()[i], cfg.loss, w, &mut g)?;
        }
        loss *= w;
        if !loss.is_finite() {
            return Err(TrainError::Diverged { step, loss });
        }
        history.push((step, loss));
        apply_update(&mut p, &g, cfg, &mut adam);
        p.symmetrize(spec);
        if let Some((m1, m2)) = cfg.constraint {
            project_in_place(spec, &mut p, m1, m2);
            debug_assert!({
                let (a, b) = p.norms(spec);
                a <= m1 * (1.0 + 1e-12) && b <= m2 * (1.0 + 1e-12)
            });
        }
        if p.u.iter().chain(&p.filters).any(|v| !v.is_finite()) {
            return Err(TrainError::Diverged { step, loss: f64::NAN });
        }
    }
    Ok(TrainOutcome { params: p, history })
}

fn apply_update(p: &mut Params, g: &Params, cfg: &TrainConfig, adam: &mut Adam) {
    let lr = cfg.step_size;
    let params = p.u.iter_mut().chain(p.filters.iter_mut());
    let grads = g.u.iter().chain(&g.filters);
    match cfg.optimizer {
        Optimizer::Sgd => {
            for (w, &d) in params.zip(grads) {
                *w -= lr * d;
            }
        }
        Optimizer::Adam { beta1, beta2, eps } => {
            adam.t += 1;
            let c1 = 1.0 - beta1.powi(adam.t);
            let c2 = 1.0 - beta2.powi(adam.t);
            for (((w, &d), m), v) in params.zip(grads).zip(adam.m.iter_mut()).zip(adam.v.iter_mut()) {
                *m = beta1 * *m + (1.0 - beta1) * d;
                *v = beta2 * *v + (1.0 - beta2) * d * d;
                *w -= lr * (*m / c1) / ((*v / c2).sqrt() + eps);
            }
        }
    }
}
