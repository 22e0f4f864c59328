//! One-hidden-layer invariant networks `h(x) = u^T P(sigma(W x))` over a
//! finite group, in four parametrizations:
//!
//! * `Spatial` - group convolution filters `w_(j,c)` of length `|G|`;
//! * `Frequency` - per-character coefficients `lambda_(j,c)` (abelian only),
//!   applied as `F^* diag(lambda) F`;
//! * `WeightShare` - `sum_k w_(j,c)(k) B_k` for a fixed [`SharingBasis`];
//! * `Local` - one length-`n'` filter per `(j, c)` applied to every patch.
//!
//! Parameters are flat vectors. Filter `(j, c)` occupies the slot
//! `(j * c0 + c) * filter_len`. Frequency coefficients are stored as
//! interleaved `(re, im)` pairs, so their `filter_len` is `2 |G|`.

mod basis;
pub mod format;
mod patches;
mod pooling;

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::group::{GroupError, GroupRef, GroupSignal};
use crate::spectral::{FourierBasis, SpectralError};

pub use basis::SharingBasis;
pub use patches::Patches;
pub use pooling::{argmax, Pooling, ScalarMap};

/// Largest tolerated imaginary residue after the inverse transform.
pub const IMAGINARY_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error("invalid patches: {0}")]
    Patches(String),
    #[error("{what}: expected {expected}, found {found}")]
    Shape {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("non-finite {0}")]
    NonFinite(&'static str),
    #[error("frequency model produced imaginary residue {0:e} (coefficients not hermitian)")]
    ImaginaryResidue(f64),
    #[error("sharing basis order {basis} does not match group order {group}")]
    BasisOrder { basis: usize, group: usize },
    #[error("model format: {0}")]
    Format(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Activation {
    #[default]
    Relu,
}

impl Activation {
    #[inline]
    pub fn apply(self, t: f64) -> f64 {
        t.max(0.0)
    }

    /// Subgradient 0 at the kink.
    #[inline]
    pub fn derivative(self, t: f64) -> f64 {
        if t > 0.0 {
            1.0
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone)]
pub enum Variant {
    Spatial,
    Frequency(Arc<FourierBasis>),
    WeightShare(Arc<SharingBasis>),
    Local(Arc<Patches>),
}

impl Variant {
    pub fn name(&self) -> &'static str {
        match self {
            Variant::Spatial => "spatial",
            Variant::Frequency(_) => "frequency",
            Variant::WeightShare(_) => "weightshare",
            Variant::Local(_) => "local",
        }
    }
}

#[derive(Debug, Clone)]
pub struct ModelSpec {
    group: GroupRef,
    variant: Variant,
    pooling: Pooling,
    activation: Activation,
    c0: usize,
    c1: usize,
}

impl ModelSpec {
    pub fn new(
        group: GroupRef,
        variant: Variant,
        pooling: Pooling,
        c0: usize,
        c1: usize,
    ) -> Result<Self, ModelError> {
        for (what, v) in [("input channels", c0), ("hidden channels", c1)] {
            if v == 0 {
                return Err(ModelError::Shape {
                    what,
                    expected: 1,
                    found: 0,
                });
            }
        }
        let n = group.order();
        match &variant {
            Variant::Spatial => {}
            Variant::Frequency(b) => {
                if b.group().kind() != group.kind() {
                    return Err(GroupError::GroupMismatch {
                        expected: group.spec_string(),
                        found: b.group().spec_string(),
                    }
                    .into());
                }
            }
            Variant::WeightShare(b) => {
                if b.order() != n {
                    return Err(ModelError::BasisOrder {
                        basis: b.order(),
                        group: n,
                    });
                }
            }
            Variant::Local(p) => {
                if p.order() != n {
                    return Err(ModelError::Patches(format!(
                        "patches cover {} positions, group has {n}",
                        p.order()
                    )));
                }
            }
        }
        Ok(ModelSpec {
            group,
            variant,
            pooling,
            activation: Activation::Relu,
            c0,
            c1,
        })
    }

    pub fn spatial(group: GroupRef, pooling: Pooling, c0: usize, c1: usize) -> Result<Self, ModelError> {
        Self::new(group, Variant::Spatial, pooling, c0, c1)
    }

    /// Frequency-parametrized model; fails on non-abelian groups.
    pub fn frequency(group: GroupRef, pooling: Pooling, c0: usize, c1: usize) -> Result<Self, ModelError> {
        let basis = Arc::new(FourierBasis::new(group.clone())?);
        Self::new(group, Variant::Frequency(basis), pooling, c0, c1)
    }

    pub fn weight_share(
        group: GroupRef,
        basis: SharingBasis,
        pooling: Pooling,
        c0: usize,
        c1: usize,
    ) -> Result<Self, ModelError> {
        Self::new(group, Variant::WeightShare(Arc::new(basis)), pooling, c0, c1)
    }

    pub fn local(
        group: GroupRef,
        patches: Patches,
        pooling: Pooling,
        c0: usize,
        c1: usize,
    ) -> Result<Self, ModelError> {
        Self::new(group, Variant::Local(Arc::new(patches)), pooling, c0, c1)
    }

    /// Same architecture with a different group-parametrization.
    pub fn with_variant(&self, variant: Variant) -> Result<Self, ModelError> {
        Self::new(self.group.clone(), variant, self.pooling, self.c0, self.c1)
    }

    pub fn with_pooling(&self, pooling: Pooling) -> Self {
        ModelSpec {
            pooling,
            ..self.clone()
        }
    }

    pub fn group(&self) -> &GroupRef {
        &self.group
    }

    pub fn variant(&self) -> &Variant {
        &self.variant
    }

    pub fn pooling(&self) -> Pooling {
        self.pooling
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn c0(&self) -> usize {
        self.c0
    }

    pub fn c1(&self) -> usize {
        self.c1
    }

    /// Number of stored reals per `(j, c)` filter.
    pub fn filter_len(&self) -> usize {
        let n = self.group.order();
        match &self.variant {
            Variant::Spatial | Variant::WeightShare(_) => n,
            Variant::Frequency(_) => 2 * n,
            Variant::Local(p) => p.width(),
        }
    }

    pub fn num_filter_params(&self) -> usize {
        self.c0 * self.c1 * self.filter_len()
    }

    /// Factor turning the raw filter norm into the spatial-equivalent norm.
    ///
    /// Frequency coefficients satisfy `|lambda| = sqrt(|G|) |w|`, so their
    /// raw norm is divided by `sqrt(|G|)`; all other variants use 1.
    pub fn filter_norm_scale(&self) -> f64 {
        match self.variant {
            Variant::Frequency(_) => 1.0 / (self.group.order() as f64).sqrt(),
            _ => 1.0,
        }
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} on {} (c0={}, c1={}, pooling={})",
            self.variant.name(),
            self.group.spec_string(),
            self.c0,
            self.c1,
            self.pooling
        )
    }
}

/// Learnable parameters: last layer `u` and flat filter coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    pub u: Vec<f64>,
    pub filters: Vec<f64>,
}

impl Params {
    pub fn zeros(spec: &ModelSpec) -> Self {
        Params {
            u: vec![0.0; spec.c1],
            filters: vec![0.0; spec.num_filter_params()],
        }
    }

    /// Gaussian initialization: `u ~ N(0, 1/c1)`, spatial taps
    /// `~ N(0, 1/(c0 len))`. Frequency filters are the transforms of
    /// random spatial filters, so they start hermitian.
    pub fn random<R: Rng + ?Sized>(spec: &ModelSpec, rng: &mut R) -> Self {
        let u = (0..spec.c1)
            .map(|_| rng.sample::<f64, _>(StandardNormal) / (spec.c1 as f64).sqrt())
            .collect();
        let filters = match &spec.variant {
            Variant::Frequency(basis) => {
                let n = spec.group.order();
                let scale = 1.0 / ((spec.c0 * n) as f64).sqrt();
                let mut out = Vec::with_capacity(spec.num_filter_params());
                for _ in 0..spec.c0 * spec.c1 {
                    let w: Vec<f64> = (0..n)
                        .map(|_| rng.sample::<f64, _>(StandardNormal) * scale)
                        .collect();
                    let lam = basis.diagonalize_circulant(&w).expect("length matches");
                    out.extend(lam.iter().flat_map(|c| [c.re, c.im]));
                }
                out
            }
            _ => {
                let scale = 1.0 / ((spec.c0 * spec.filter_len()) as f64).sqrt();
                (0..spec.num_filter_params())
                    .map(|_| rng.sample::<f64, _>(StandardNormal) * scale)
                    .collect()
            }
        };
        Params { u, filters }
    }

    pub fn check(&self, spec: &ModelSpec) -> Result<(), ModelError> {
        if self.u.len() != spec.c1 {
            return Err(ModelError::Shape {
                what: "last-layer weights",
                expected: spec.c1,
                found: self.u.len(),
            });
        }
        if self.filters.len() != spec.num_filter_params() {
            return Err(ModelError::Shape {
                what: "filter coefficients",
                expected: spec.num_filter_params(),
                found: self.filters.len(),
            });
        }
        if self.u.iter().chain(&self.filters).any(|v| !v.is_finite()) {
            return Err(ModelError::NonFinite("parameter"));
        }
        Ok(())
    }

    pub fn filter(&self, spec: &ModelSpec, j: usize, c: usize) -> &[f64] {
        let len = spec.filter_len();
        let at = (j * spec.c0 + c) * len;
        &self.filters[at..at + len]
    }

    pub fn u_norm(&self) -> f64 {
        l2(&self.u)
    }

    /// Euclidean norm of the stored filter coefficients.
    pub fn raw_filter_norm(&self) -> f64 {
        l2(&self.filters)
    }

    /// `(M1, M2)`: `|u|` and the spatial-equivalent filter norm.
    pub fn norms(&self, spec: &ModelSpec) -> (f64, f64) {
        (self.u_norm(), self.raw_filter_norm() * spec.filter_norm_scale())
    }

    /// `self += alpha * other`
    pub fn axpy(&mut self, alpha: f64, other: &Params) {
        for (a, b) in self.u.iter_mut().zip(&other.u) {
            *a += alpha * b;
        }
        for (a, b) in self.filters.iter_mut().zip(&other.filters) {
            *a += alpha * b;
        }
    }

    pub fn scale(&mut self, alpha: f64) {
        self.u.iter_mut().for_each(|v| *v *= alpha);
        self.filters.iter_mut().for_each(|v| *v *= alpha);
    }

    /// Restores conjugate symmetry of frequency coefficients after an update.
    pub fn symmetrize(&mut self, spec: &ModelSpec) {
        if let Variant::Frequency(basis) = &spec.variant {
            let n = spec.group.order();
            for chunk in self.filters.chunks_mut(2 * n) {
                let mut c: Vec<Complex64> = chunk
                    .chunks(2)
                    .map(|p| Complex64::new(p[0], p[1]))
                    .collect();
                basis.hermitian_part(&mut c);
                for (dst, v) in chunk.chunks_mut(2).zip(c) {
                    dst[0] = v.re;
                    dst[1] = v.im;
                }
            }
        }
    }
}

pub fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Converts spatial-model parameters to a matching frequency model.
pub fn spatial_to_frequency(
    spatial: &ModelSpec,
    params: &Params,
    frequency: &ModelSpec,
) -> Result<Params, ModelError> {
    params.check(spatial)?;
    let Variant::Frequency(basis) = frequency.variant() else {
        return Err(ModelError::Format("target spec is not a frequency model".into()));
    };
    let mut filters = Vec::with_capacity(frequency.num_filter_params());
    for chunk in params.filters.chunks(spatial.filter_len()) {
        let lam = basis.diagonalize_circulant(chunk)?;
        filters.extend(lam.iter().flat_map(|c| [c.re, c.im]));
    }
    Ok(Params {
        u: params.u.clone(),
        filters,
    })
}

/// Intermediate values of one forward pass.
#[derive(Debug, Clone)]
pub struct Trace {
    /// Pre-activations, `c1 x |G|` row-major.
    pub pre: Vec<f64>,
    /// Pooled features, length `c1`.
    pub pooled: Vec<f64>,
    pub output: f64,
    /// Per-channel transforms of the input (frequency variant only).
    x_hat: Option<Vec<Complex64>>,
}

fn check_input(spec: &ModelSpec, x: &GroupSignal) -> Result<(), ModelError> {
    x.check_group(&spec.group)?;
    if x.channels() != spec.c0 {
        return Err(ModelError::Shape {
            what: "input channels",
            expected: spec.c0,
            found: x.channels(),
        });
    }
    if x.values().iter().any(|v| !v.is_finite()) {
        return Err(ModelError::NonFinite("input"));
    }
    Ok(())
}

/// `h(x)` for any variant.
pub fn forward(spec: &ModelSpec, p: &Params, x: &GroupSignal) -> Result<f64, ModelError> {
    forward_trace(spec, p, x).map(|t| t.output)
}

pub fn forward_trace(spec: &ModelSpec, p: &Params, x: &GroupSignal) -> Result<Trace, ModelError> {
    p.check(spec)?;
    check_input(spec, x)?;
    Ok(run(spec, p, x)?)
}

fn run(spec: &ModelSpec, p: &Params, x: &GroupSignal) -> Result<Trace, ModelError> {
    let n = spec.group.order();
    let (c0, c1) = (spec.c0, spec.c1);
    let mut pre = vec![0.0; c1 * n];
    let mut x_hat = None;
    match &spec.variant {
        Variant::Spatial => {
            for j in 0..c1 {
                let zj = &mut pre[j * n..(j + 1) * n];
                for c in 0..c0 {
                    spec.group.convolve_into(p.filter(spec, j, c), x.channel(c), zj);
                }
            }
        }
        Variant::WeightShare(basis) => {
            for j in 0..c1 {
                let zj = &mut pre[j * n..(j + 1) * n];
                for c in 0..c0 {
                    let mat = basis.combine(p.filter(spec, j, c));
                    let xc = x.channel(c);
                    for (g, z) in zj.iter_mut().enumerate() {
                        *z += mat[g * n..(g + 1) * n]
                            .iter()
                            .zip(xc)
                            .map(|(a, b)| a * b)
                            .sum::<f64>();
                    }
                }
            }
        }
        Variant::Local(patches) => {
            for j in 0..c1 {
                let zj = &mut pre[j * n..(j + 1) * n];
                for c in 0..c0 {
                    let w = p.filter(spec, j, c);
                    let xc = x.channel(c);
                    for (z, set) in zj.iter_mut().zip(patches.sets()) {
                        *z += set.iter().zip(w).map(|(&i, wt)| wt * xc[i]).sum::<f64>();
                    }
                }
            }
        }
        Variant::Frequency(basis) => {
            let xh: Vec<Complex64> = (0..c0)
                .flat_map(|c| basis.fourier_real_unchecked(x.channel(c)))
                .collect();
            for j in 0..c1 {
                let mut zh = vec![Complex64::new(0.0, 0.0); n];
                for c in 0..c0 {
                    let lam = p.filter(spec, j, c);
                    for (k, z) in zh.iter_mut().enumerate() {
                        *z += Complex64::new(lam[2 * k], lam[2 * k + 1]) * xh[c * n + k];
                    }
                }
                let spatial = basis.inverse_unchecked(&zh);
                for (dst, v) in pre[j * n..(j + 1) * n].iter_mut().zip(spatial) {
                    if v.im.abs() > IMAGINARY_TOL {
                        return Err(ModelError::ImaginaryResidue(v.im.abs()));
                    }
                    *dst = v.re;
                }
            }
            x_hat = Some(xh);
        }
    }
    let act = spec.activation;
    let pooled: Vec<f64> = pre
        .chunks(n)
        .map(|zj| {
            let a: Vec<f64> = zj.iter().map(|&t| act.apply(t)).collect();
            spec.pooling.pool(&a)
        })
        .collect();
    let output = pooled.iter().zip(&p.u).map(|(a, b)| a * b).sum();
    Ok(Trace {
        pre,
        pooled,
        output,
        x_hat,
    })
}

/// Exact (sub)gradient of `h(x)` with respect to all parameters.
pub fn score_gradient(spec: &ModelSpec, p: &Params, x: &GroupSignal) -> Result<(f64, Params), ModelError> {
    let mut grad = Params::zeros(spec);
    let s = accumulate_score_gradient(spec, p, x, 1.0, &mut grad)?;
    Ok((s, grad))
}

/// Adds `weight * d h(x) / d params` into `grad` and returns `h(x)`.
pub fn accumulate_score_gradient(
    spec: &ModelSpec,
    p: &Params,
    x: &GroupSignal,
    weight: f64,
    grad: &mut Params,
) -> Result<f64, ModelError> {
    let trace = forward_trace(spec, p, x)?;
    backward(spec, p, x, &trace, weight, grad);
    Ok(trace.output)
}

pub(crate) fn backward(
    spec: &ModelSpec,
    p: &Params,
    x: &GroupSignal,
    trace: &Trace,
    weight: f64,
    grad: &mut Params,
) {
    let n = spec.group.order();
    let (c0, c1) = (spec.c0, spec.c1);
    let act = spec.activation;
    for (gu, &a) in grad.u.iter_mut().zip(&trace.pooled) {
        *gu += weight * a;
    }
    let len = spec.filter_len();
    let mut activ = vec![0.0; n];
    let mut dpool = vec![0.0; n];
    let mut delta = vec![0.0; n];
    for j in 0..c1 {
        let coef = weight * p.u[j];
        if coef == 0.0 {
            continue;
        }
        let zj = &trace.pre[j * n..(j + 1) * n];
        for (a, &z) in activ.iter_mut().zip(zj) {
            *a = act.apply(z);
        }
        spec.pooling.backward(&activ, &mut dpool);
        let mut any = false;
        for g in 0..n {
            delta[g] = coef * dpool[g] * act.derivative(zj[g]);
            any |= delta[g] != 0.0;
        }
        if !any {
            continue;
        }
        for c in 0..c0 {
            let gw = &mut grad.filters[(j * c0 + c) * len..(j * c0 + c + 1) * len];
            let xc = x.channel(c);
            match &spec.variant {
                Variant::Spatial => {
                    // d z(g) / d w(d) = x(g d)
                    for (g, &dg) in delta.iter().enumerate() {
                        if dg == 0.0 {
                            continue;
                        }
                        for (d, gwd) in gw.iter_mut().enumerate() {
                            *gwd += dg * xc[spec.group.mul(g, d)];
                        }
                    }
                }
                Variant::WeightShare(basis) => {
                    for (k, gwk) in gw.iter_mut().enumerate() {
                        let bk = basis.matrix(k);
                        let mut acc = 0.0;
                        for (g, &dg) in delta.iter().enumerate() {
                            if dg == 0.0 {
                                continue;
                            }
                            acc += dg
                                * bk[g * n..(g + 1) * n]
                                    .iter()
                                    .zip(xc)
                                    .map(|(a, b)| a * b)
                                    .sum::<f64>();
                        }
                        *gwk += acc;
                    }
                }
                Variant::Local(patches) => {
                    for (set, &dl) in patches.sets().iter().zip(&delta) {
                        if dl == 0.0 {
                            continue;
                        }
                        for (gwt, &i) in gw.iter_mut().zip(set) {
                            *gwt += dl * xc[i];
                        }
                    }
                }
                Variant::Frequency(basis) => {
                    let xh = trace.x_hat.as_ref().expect("frequency trace keeps x_hat");
                    let dh = basis.fourier_real_unchecked(&delta);
                    for k in 0..n {
                        let q = dh[k].conj() * xh[c * n + k];
                        gw[2 * k] += q.re;
                        gw[2 * k + 1] -= q.im;
                    }
                }
            }
        }
    }
}
