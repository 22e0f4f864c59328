//! Norm-based generalization bounds evaluated from measured quantities.

use std::fmt;

use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::data::Dataset;
use crate::group::{FiniteGroup, GroupSignal};
use crate::models::{ModelSpec, Params, SharingBasis, Variant};
use crate::seed;

/// Largest `|G|^m` enumerated by [`MmaxMode::Exact`].
pub const EXACT_BUDGET: f64 = 1e6;
pub const POWER_MAX_ITERS: usize = 1000;
pub const POWER_TOL: f64 = 1e-8;

#[derive(Debug, Error, PartialEq)]
pub enum BoundError {
    #[error("delta must lie in (0, 1), got {0}")]
    Delta(f64),
    #[error("{name} must be finite and >= 0, got {value}")]
    Negative { name: &'static str, value: f64 },
    #[error("sample size m must be >= 1")]
    ZeroSamples,
    #[error("locality bound needs O_phi")]
    MissingOverlap,
    #[error("O_phi = {o_phi} outside 1..={order}")]
    Overlap { o_phi: usize, order: usize },
    #[error("band limit B = {band} outside 1..={order}")]
    BandLimit { band: usize, order: usize },
    #[error("exact M^max would enumerate {assignments:.3e} assignments (budget {EXACT_BUDGET:e}); use sampled mode, e.g. sampled(k = {suggested_k})")]
    ExactBudget { assignments: f64, suggested_k: usize },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("inputs disagree on group or channel count")]
    Inputs,
    #[error("sampled mode needs k >= 1")]
    ZeroSamplesK,
}

/// Measured quantities entering the bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundInputs {
    pub m1: f64,
    pub m2: f64,
    pub b_x: f64,
    pub m: usize,
    pub delta: f64,
    pub group_order: usize,
    pub o_phi: Option<usize>,
    pub band_limit: Option<usize>,
}

impl BoundInputs {
    pub fn new(m1: f64, m2: f64, b_x: f64, m: usize, delta: f64, group_order: usize) -> Self {
        BoundInputs {
            m1,
            m2,
            b_x,
            m,
            delta,
            group_order,
            o_phi: None,
            band_limit: None,
        }
    }

    pub fn validate(&self) -> Result<(), BoundError> {
        for (name, value) in [("M1", self.m1), ("M2", self.m2), ("b_x", self.b_x)] {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(BoundError::Negative { name, value });
            }
        }
        if self.m == 0 {
            return Err(BoundError::ZeroSamples);
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(BoundError::Delta(self.delta));
        }
        if let Some(o) = self.o_phi {
            if o == 0 || o > self.group_order {
                return Err(BoundError::Overlap {
                    o_phi: o,
                    order: self.group_order,
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundKind {
    GeneralPooling,
    MaxPooling,
    Locality,
    BandLimitedFloor,
}

impl fmt::Display for BoundKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BoundKind::GeneralPooling => "general_pooling",
            BoundKind::MaxPooling => "max_pooling",
            BoundKind::Locality => "locality",
            BoundKind::BandLimitedFloor => "bandlimited_floor",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundReport {
    pub complexity_term: f64,
    pub confidence_term: f64,
    pub total: f64,
    pub kind: BoundKind,
    /// `M^max_{2,X}` for the max-pooling bound.
    pub mmax: Option<f64>,
    /// Set when `M^max` came from sampling, so the bound may be optimistic.
    pub lower_estimate: bool,
}

impl BoundReport {
    fn new(kind: BoundKind, complexity: f64, confidence: f64) -> Self {
        BoundReport {
            complexity_term: complexity,
            confidence_term: confidence,
            total: complexity + confidence,
            kind,
            mmax: None,
            lower_estimate: false,
        }
    }
}

/// `4 sqrt(2 ln(4 / delta) / m)`
pub fn confidence_term(m: usize, delta: f64) -> f64 {
    4.0 * (2.0 * (4.0 / delta).ln() / m as f64).sqrt()
}

/// `2 b_x M1 M2 / sqrt(m)` plus the confidence term.
pub fn bound_general_pooling(inp: &BoundInputs) -> Result<BoundReport, BoundError> {
    inp.validate()?;
    Ok(BoundReport::new(
        BoundKind::GeneralPooling,
        general_complexity(inp),
        confidence_term(inp.m, inp.delta),
    ))
}

fn general_complexity(inp: &BoundInputs) -> f64 {
    2.0 * inp.b_x * inp.m1 * inp.m2 / (inp.m as f64).sqrt()
}

/// Locality bound: the general complexity term times `sqrt(O_phi / |G|)`.
pub fn bound_locality(inp: &BoundInputs) -> Result<BoundReport, BoundError> {
    inp.validate()?;
    let o = inp.o_phi.ok_or(BoundError::MissingOverlap)?;
    let factor = (o as f64 / inp.group_order as f64).sqrt();
    Ok(BoundReport::new(
        BoundKind::Locality,
        factor * general_complexity(inp),
        confidence_term(inp.m, inp.delta),
    ))
}

/// Smallest spatial support compatible with `band` nonzero frequencies.
pub fn min_support(order: usize, band: usize) -> usize {
    order.div_ceil(band)
}

/// Locality bound at the support floor forced by a band limit.
pub fn bound_bandlimited_floor(inp: &BoundInputs) -> Result<BoundReport, BoundError> {
    let band = inp.band_limit.ok_or(BoundError::BandLimit {
        band: 0,
        order: inp.group_order,
    })?;
    if band == 0 || band > inp.group_order {
        return Err(BoundError::BandLimit {
            band,
            order: inp.group_order,
        });
    }
    let floor = BoundInputs {
        o_phi: Some(min_support(inp.group_order, band)),
        ..*inp
    };
    let mut r = bound_locality(&floor)?;
    r.kind = BoundKind::BandLimitedFloor;
    Ok(r)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MmaxMode {
    Exact,
    /// `k` uniformly random assignments plus the identity assignment.
    Sampled { k: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mmax {
    pub value: f64,
    pub assignments: u64,
    pub lower_estimate: bool,
}

/// Top eigenvalue of a symmetric PSD `n x n` matrix by power iteration.
///
/// The start vector is all-ones with a small deterministic perturbation, so
/// it is never orthogonal to the top eigenvector for the sign patterns that
/// make plain all-ones fail (e.g. `[[1, -1], [-1, 1]]`).
pub fn top_eigenvalue_psd(a: &[f64], n: usize) -> f64 {
    assert_eq!(a.len(), n * n);
    if n == 0 {
        return 0.0;
    }
    if n == 1 {
        return a[0].max(0.0);
    }
    let mut v: Vec<f64> = (0..n)
        .map(|i| 1.0 + 0.1 * ((i as f64 + 1.0) * 0.618_033_988_749_894_9).fract())
        .collect();
    normalize(&mut v);
    let mut w = vec![0.0; n];
    let mut lambda = 0.0;
    for _ in 0..POWER_MAX_ITERS {
        for (i, wi) in w.iter_mut().enumerate() {
            *wi = a[i * n..(i + 1) * n].iter().zip(&v).map(|(x, y)| x * y).sum();
        }
        let next: f64 = w.iter().zip(&v).map(|(x, y)| x * y).sum();
        let norm = normalize(&mut w);
        if norm == 0.0 {
            return 0.0;
        }
        std::mem::swap(&mut v, &mut w);
        let done = (next - lambda).abs() <= POWER_TOL * next.abs();
        lambda = next;
        if done {
            break;
        }
    }
    lambda.max(0.0)
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n
}

/// `<x_i, Pi_g x_j>` for all `i, j, g`, laid out `(i * m + j) * |G| + g`.
fn translate_products(group: &FiniteGroup, xs: &[GroupSignal]) -> Vec<f64> {
    let n = group.order();
    let m = xs.len();
    let mut out = vec![0.0; m * m * n];
    for (i, xi) in xs.iter().enumerate() {
        for (j, xj) in xs.iter().enumerate() {
            for g in 0..n {
                let t = group.act(g, xj).expect("inputs checked");
                out[(i * m + j) * n + g] = xi.values().iter().zip(t.values()).map(|(a, b)| a * b).sum();
            }
        }
    }
    out
}

fn gram_top(group: &FiniteGroup, prods: &[f64], m: usize, l: &[usize], gram: &mut [f64]) -> f64 {
    let n = group.order();
    for i in 0..m {
        let li = group.inv(l[i]);
        for j in 0..m {
            // <Pi_a x_i, Pi_b x_j> = <x_i, Pi_{a^-1 b} x_j>
            gram[i * m + j] = prods[(i * m + j) * n + group.mul(li, l[j])];
        }
    }
    top_eigenvalue_psd(gram, m)
}

/// `M^max_{2,X}`: max over translate assignments of `||X_l^T X_l||_2`.
pub fn mmax(xs: &[GroupSignal], mode: MmaxMode) -> Result<Mmax, BoundError> {
    let first = xs.first().ok_or(BoundError::EmptyDataset)?;
    let group = first.group().clone();
    if xs
        .iter()
        .any(|x| x.channels() != first.channels() || x.check_group(&group).is_err())
    {
        return Err(BoundError::Inputs);
    }
    let n = group.order();
    let m = xs.len();
    let prods = translate_products(&group, xs);
    match mode {
        MmaxMode::Exact => {
            let count = (n as f64).powi(m as i32);
            if count > EXACT_BUDGET {
                return Err(BoundError::ExactBudget {
                    assignments: count,
                    suggested_k: 10_000,
                });
            }
            let total = count as u64;
            let value = (0..total)
                .into_par_iter()
                .map_init(
                    || (vec![0usize; m], vec![0.0; m * m]),
                    |(l, gram), idx| {
                        let mut r = idx;
                        for slot in l.iter_mut() {
                            *slot = (r % n as u64) as usize;
                            r /= n as u64;
                        }
                        gram_top(&group, &prods, m, l, gram)
                    },
                )
                .reduce(|| 0.0, f64::max);
            Ok(Mmax {
                value,
                assignments: total,
                lower_estimate: false,
            })
        }
        MmaxMode::Sampled { k, seed } => {
            if k == 0 {
                return Err(BoundError::ZeroSamplesK);
            }
            let mut rng = seed::rng(seed, &[]);
            let mut gram = vec![0.0; m * m];
            let mut l = vec![0usize; m];
            let mut value = gram_top(&group, &prods, m, &l, &mut gram);
            for _ in 0..k {
                l.iter_mut().for_each(|s| *s = rng.random_range(0..n));
                value = value.max(gram_top(&group, &prods, m, &l, &mut gram));
            }
            Ok(Mmax {
                value,
                assignments: k as u64 + 1,
                lower_estimate: true,
            })
        }
    }
}

/// `g(X)` from `M^max`, `b_x` and `|G|`.
pub fn maxpool_g(mmax: f64, b_x: f64, order: usize) -> f64 {
    let a = 8.0 * (order as f64).ln() * mmax;
    (a + b_x * b_x + (a * b_x * b_x).sqrt()).sqrt()
}

/// Max-pooling bound from a precomputed `M^max`.
pub fn bound_maxpool_from(inp: &BoundInputs, mm: &Mmax) -> Result<BoundReport, BoundError> {
    inp.validate()?;
    let g = maxpool_g(mm.value, inp.b_x, inp.group_order);
    let mut r = BoundReport::new(
        BoundKind::MaxPooling,
        2.0 * inp.m1 * inp.m2 * g / (inp.m as f64).sqrt(),
        confidence_term(inp.m, inp.delta),
    );
    r.mmax = Some(mm.value);
    r.lower_estimate = mm.lower_estimate;
    Ok(r)
}

pub fn bound_maxpool(inp: &BoundInputs, xs: &[GroupSignal], mode: MmaxMode) -> Result<BoundReport, BoundError> {
    inp.validate()?;
    bound_maxpool_from(inp, &mmax(xs, mode)?)
}

/// `||w||_B`: max over rows `l` of the Frobenius norm of the stacked
/// row-combinations `sum_k w_{(j,c)}(k) b_{k,l}` over all `(j, c)`.
pub fn weight_share_norm(basis: &SharingBasis, coeffs: &[f64]) -> f64 {
    let n = basis.order();
    assert_eq!(coeffs.len() % n, 0, "coefficients must come in blocks of |G|");
    let mut best: f64 = 0.0;
    let mut row = vec![0.0; n];
    for l in 0..n {
        let mut sq = 0.0;
        for w in coeffs.chunks(n) {
            row.iter_mut().for_each(|v| *v = 0.0);
            for (k, &wk) in w.iter().enumerate() {
                if wk != 0.0 {
                    for (r, b) in row.iter_mut().zip(basis.row(k, l)) {
                        *r += wk * b;
                    }
                }
            }
            sq += row.iter().map(|v| v * v).sum::<f64>();
        }
        best = best.max(sq.sqrt());
    }
    best
}

/// `(M1, M2, b_x, m)` for a trained model, with `O_phi` filled in for local
/// models. Weight-sharing models report `||w||_B` as `M2`; frequency models
/// report the spatial-equivalent filter norm.
pub fn measure_inputs(
    spec: &ModelSpec,
    p: &Params,
    data: &Dataset,
    delta: f64,
) -> Result<BoundInputs, BoundError> {
    if data.is_empty() {
        return Err(BoundError::EmptyDataset);
    }
    let (m1, mut m2) = p.norms(spec);
    let mut o_phi = None;
    match spec.variant() {
        Variant::WeightShare(basis) => m2 = weight_share_norm(basis, &p.filters),
        Variant::Local(patches) => o_phi = Some(patches.overlap()),
        _ => {}
    }
    let inp = BoundInputs {
        o_phi,
        ..BoundInputs::new(m1, m2, data.b_x(), data.len(), delta, spec.group().order())
    };
    inp.validate()?;
    Ok(inp)
}

/// The bound matching a model's pooling and variant: locality for local
/// filters, max pooling (sampled `M^max` beyond the exact budget) for max,
/// the general bound otherwise.
pub fn bound_for_model(
    spec: &ModelSpec,
    p: &Params,
    data: &Dataset,
    delta: f64,
    max_samples: usize,
    seed: u64,
) -> Result<BoundReport, BoundError> {
    let inp = measure_inputs(spec, p, data, delta)?;
    if inp.o_phi.is_some() {
        return bound_locality(&inp);
    }
    if spec.pooling() == crate::models::Pooling::Max {
        let count = (inp.group_order as f64).powi(inp.m.min(i32::MAX as usize) as i32);
        let mode = if count <= EXACT_BUDGET {
            MmaxMode::Exact
        } else {
            MmaxMode::Sampled { k: max_samples, seed }
        };
        return bound_maxpool(&inp, data.inputs(), mode);
    }
    bound_general_pooling(&inp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::parse_group;
    use crate::models::{spatial_to_frequency, Patches, Pooling};
    use rand_distr::StandardNormal;

    fn base() -> BoundInputs {
        BoundInputs::new(2.0, 3.0, 1.0, 100, 0.05, 8)
    }

    #[test]
    fn general_pooling_arithmetic() {
        let r = bound_general_pooling(&base()).unwrap();
        let conf = 4.0 * (2.0 * (80.0f64).ln() / 100.0).sqrt();
        assert!((r.complexity_term - 1.2).abs() < 1e-15);
        assert!((r.confidence_term - conf).abs() < 1e-15);
        // recomputed offline: 1.2 + 4 * sqrt(2 ln 80 / 100)
        assert!((r.confidence_term - 1.184_165_749_840_638_6).abs() < 1e-12);
        assert!((r.total - 2.384_165_749_840_639).abs() < 1e-9);
        assert_eq!(r.total, r.complexity_term + r.confidence_term);
        let z = bound_general_pooling(&BoundInputs { m2: 0.0, ..base() }).unwrap();
        assert_eq!(z.complexity_term, 0.0);
        let q = bound_general_pooling(&BoundInputs { m: 400, ..base() }).unwrap();
        assert_eq!(q.complexity_term * 2.0, r.complexity_term);
    }

    #[test]
    fn invalid_inputs() {
        for d in [0.0, 1.0, -0.1, f64::NAN] {
            assert!(matches!(
                bound_general_pooling(&BoundInputs { delta: d, ..base() }),
                Err(BoundError::Delta(_))
            ));
        }
        assert!(bound_general_pooling(&BoundInputs { m: 0, ..base() }).is_err());
        assert!(bound_general_pooling(&BoundInputs { m1: -1.0, ..base() }).is_err());
        assert_eq!(bound_locality(&base()), Err(BoundError::MissingOverlap));
        assert!(bound_locality(&BoundInputs { o_phi: Some(9), ..base() }).is_err());
        assert!(bound_bandlimited_floor(&BoundInputs { band_limit: Some(0), ..base() }).is_err());
        assert!(bound_bandlimited_floor(&BoundInputs { band_limit: Some(9), ..base() }).is_err());
    }

    #[test]
    fn locality_cases() {
        let unit = BoundInputs::new(1.0, 1.0, 1.0, 64, 0.05, 8);
        let r = bound_locality(&BoundInputs { o_phi: Some(3), ..unit }).unwrap();
        assert!((r.complexity_term - 2.0 * (3.0f64 / 8.0).sqrt() / 8.0).abs() < 1e-15);
        assert!((r.complexity_term - 0.1531).abs() < 1e-4);
        let full = bound_locality(&BoundInputs { o_phi: Some(8), ..unit }).unwrap();
        let gen = bound_general_pooling(&unit).unwrap();
        assert_eq!(full.complexity_term, gen.complexity_term);
        let one = bound_locality(&BoundInputs { o_phi: Some(1), ..unit }).unwrap();
        assert!((one.complexity_term - gen.complexity_term / 8f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn bandlimited_floor_cases() {
        let inp = BoundInputs::new(1.0, 1.0, 1.0, 100, 0.05, 16);
        let r = bound_bandlimited_floor(&BoundInputs { band_limit: Some(4), ..inp }).unwrap();
        assert!((r.complexity_term - 0.1).abs() < 1e-15);
        assert_eq!(min_support(16, 16), 1);
        assert_eq!(min_support(16, 1), 16);
        assert_eq!(min_support(16, 3), 6);
        let b1 = bound_bandlimited_floor(&BoundInputs { band_limit: Some(1), ..inp }).unwrap();
        assert_eq!(b1.complexity_term, bound_general_pooling(&inp).unwrap().complexity_term);
        assert_eq!(b1.kind, BoundKind::BandLimitedFloor);
    }

    #[test]
    fn power_iteration_against_closed_forms() {
        // [[a, b], [b, c]] has top eigenvalue (a + c)/2 + sqrt(((a - c)/2)^2 + b^2)
        for &(a, b, c) in &[(2.0, 1.0, 2.0), (1.0, -1.0, 1.0), (5.0, 0.0, 1.0), (1.0, 0.3, 4.0)] {
            let want = (a + c) / 2.0 + (((a - c) / 2.0f64).powi(2) + b * b).sqrt();
            let got = top_eigenvalue_psd(&[a, b, b, c], 2);
            assert!((got - want).abs() < 1e-7 * want, "{got} vs {want}");
        }
        assert_eq!(top_eigenvalue_psd(&[0.0; 9], 3), 0.0);
    }

    fn signals(order: &str, c0: usize, m: usize, seed_: u64) -> Vec<GroupSignal> {
        let g = parse_group(order).unwrap();
        let mut rng = seed::rng(seed_, &[]);
        (0..m)
            .map(|_| {
                let v = (0..g.order() * c0).map(|_| rng.sample(StandardNormal)).collect();
                GroupSignal::from_channels(g.clone(), c0, v).unwrap()
            })
            .collect()
    }

    #[test]
    fn mmax_single_sample_is_squared_norm() {
        let xs = signals("c8", 2, 1, 4);
        let mm = mmax(&xs, MmaxMode::Exact).unwrap();
        let b = xs[0].norm();
        assert!((mm.value - b * b).abs() < 1e-12 * b * b);
        let inp = BoundInputs::new(1.5, 0.5, b, 1, 0.1, 8);
        let r = bound_maxpool(&inp, &xs, MmaxMode::Exact).unwrap();
        let a = 8.0 * 8f64.ln() * b * b;
        let g = (a + b * b + (a * b * b).sqrt()).sqrt();
        assert!((r.complexity_term - 2.0 * 1.5 * 0.5 * g).abs() < 1e-12);
    }

    #[test]
    fn mmax_orthogonal_columns() {
        let g = parse_group("c4").unwrap();
        let e = |i: usize| {
            let mut v = vec![0.0; 4];
            v[i] = 3.0;
            GroupSignal::from_channels(g.clone(), 1, v).unwrap()
        };
        let xs = [e(0), e(2)];
        let mut gram = vec![0.0; 4];
        let prods = translate_products(&g, &xs);
        assert!((gram_top(&g, &prods, 2, &[0, 0], &mut gram) - 9.0).abs() < 1e-12);
        // some assignment aligns them, giving 2 b^2
        assert!((mmax(&xs, MmaxMode::Exact).unwrap().value - 18.0).abs() < 1e-9);
    }

    #[test]
    fn sampled_vs_exact_on_c4() {
        let xs = signals("c4", 2, 4, 8);
        let exact = mmax(&xs, MmaxMode::Exact).unwrap();
        assert_eq!(exact.assignments, 256);
        // brute-force oracle through explicit translates
        let g = xs[0].group().clone();
        let mut oracle: f64 = 0.0;
        for idx in 0..256usize {
            let l = [idx % 4, (idx / 4) % 4, (idx / 16) % 4, idx / 64];
            let cols: Vec<GroupSignal> = (0..4).map(|i| g.act(l[i], &xs[i]).unwrap()).collect();
            let mut gram = vec![0.0; 16];
            for i in 0..4 {
                for j in 0..4 {
                    gram[i * 4 + j] = cols[i].values().iter().zip(cols[j].values()).map(|(a, b)| a * b).sum();
                }
            }
            oracle = oracle.max(top_eigenvalue_psd(&gram, 4));
        }
        assert!((exact.value - oracle).abs() < 1e-9 * oracle);
        let sampled = mmax(&xs, MmaxMode::Sampled { k: 1000, seed: 1 }).unwrap();
        assert!(sampled.lower_estimate);
        assert!(sampled.value <= exact.value * (1.0 + 1e-12));
        assert!((exact.value - sampled.value) / exact.value < 0.05);
    }

    #[test]
    fn exact_budget_rejected() {
        let xs = signals("c8", 1, 7, 1);
        assert!(matches!(mmax(&xs, MmaxMode::Exact), Err(BoundError::ExactBudget { .. })));
        assert!(mmax(&xs, MmaxMode::Sampled { k: 0, seed: 0 }).is_err());
    }

    #[test]
    fn weight_share_norm_reductions() {
        let g = parse_group("d3").unwrap();
        let mut rng = seed::rng(12, &[]);
        let w: Vec<f64> = (0..6 * 6).map(|_| rng.sample(StandardNormal)).collect();
        let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
        let circ = SharingBasis::circulant(&g);
        assert!((weight_share_norm(&circ, &w) - norm).abs() < 1e-12);
        let ortho = SharingBasis::random_orthonormal_rows(6, &mut rng);
        assert!((weight_share_norm(&ortho, &w) - norm).abs() < 1e-12);
    }

    #[test]
    fn repeated_row_exceeds_euclidean_norm() {
        // B_0 = B_1 = I, B_2 = 0: row l combination is (w0 + w1) e_l
        let n = 3;
        let mut data = vec![0.0; n * n * n];
        for k in 0..2 {
            for i in 0..n {
                data[(k * n + i) * n + i] = 1.0;
            }
        }
        let basis = SharingBasis::from_dense(n, data).unwrap();
        let w = [1.0, 1.0, 0.0];
        assert!((weight_share_norm(&basis, &w) - 2.0).abs() < 1e-15);
        assert!(weight_share_norm(&basis, &w) > 2f64.sqrt());
    }

    #[test]
    fn monotone_under_perturbation() {
        let bump = 1.1;
        let cases = [
            BoundInputs::new(0.7, 1.3, 2.0, 50, 0.1, 8),
            BoundInputs {
                o_phi: Some(3),
                ..BoundInputs::new(2.0, 0.4, 0.5, 10, 0.01, 8)
            },
            BoundInputs {
                band_limit: Some(3),
                ..BoundInputs::new(1.0, 1.0, 1.0, 200, 0.5, 16)
            },
        ];
        let evals: [fn(&BoundInputs) -> f64; 4] = [
            |i| bound_general_pooling(i).unwrap().total,
            |i| bound_locality(&BoundInputs { o_phi: Some(i.o_phi.unwrap_or(2)), ..*i }).unwrap().total,
            |i| bound_bandlimited_floor(&BoundInputs { band_limit: Some(i.band_limit.unwrap_or(4)), ..*i }).unwrap().total,
            |i| {
                let mm = Mmax { value: 2.5, assignments: 1, lower_estimate: false };
                bound_maxpool_from(i, &mm).unwrap().total
            },
        ];
        for inp in cases {
            for f in evals {
                let v = f(&inp);
                assert!(f(&BoundInputs { m1: inp.m1 * bump, ..inp }) >= v);
                assert!(f(&BoundInputs { m2: inp.m2 * bump, ..inp }) >= v);
                assert!(f(&BoundInputs { b_x: inp.b_x * bump, ..inp }) >= v);
                assert!(f(&BoundInputs { m: inp.m + 7, ..inp }) <= v);
            }
        }
        // g(X) grows with M^max
        assert!(maxpool_g(3.0, 1.0, 8) > maxpool_g(2.0, 1.0, 8));
    }

    fn toy_data(group: &str, c0: usize, m: usize) -> Dataset {
        let xs = signals(group, c0, m, 31);
        let labels = (0..m).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        Dataset::new(xs[0].group().clone(), c0, xs, labels).unwrap()
    }

    #[test]
    fn measure_fixture_and_zero_params() {
        let data = toy_data("c4", 1, 5);
        let spec = ModelSpec::spatial(data.group().clone(), Pooling::Average, 1, 2).unwrap();
        let p = Params {
            u: vec![3.0, 4.0],
            filters: vec![2.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        };
        let inp = measure_inputs(&spec, &p, &data, 0.05).unwrap();
        assert_eq!((inp.m1, inp.m2, inp.m, inp.group_order), (5.0, 2.0, 5, 4));
        assert_eq!(inp.b_x, data.b_x());
        let z = measure_inputs(&spec, &Params::zeros(&spec), &data, 0.05).unwrap();
        assert_eq!((z.m1, z.m2), (0.0, 0.0));
        let patches = Patches::contiguous(data.group(), 2).unwrap();
        let local = ModelSpec::local(data.group().clone(), patches, Pooling::Average, 1, 2).unwrap();
        let lp = Params::zeros(&local);
        assert_eq!(measure_inputs(&local, &lp, &data, 0.05).unwrap().o_phi, Some(2));
    }

    #[test]
    fn frequency_parametrization_gives_no_gain() {
        let data = toy_data("c8", 2, 12);
        let g = data.group().clone();
        let spatial = ModelSpec::spatial(g.clone(), Pooling::Average, 2, 3).unwrap();
        let freq = ModelSpec::frequency(g, Pooling::Average, 2, 3).unwrap();
        let mut rng = seed::rng(6, &[]);
        let p = Params::random(&spatial, &mut rng);
        let q = spatial_to_frequency(&spatial, &p, &freq).unwrap();
        let a = bound_general_pooling(&measure_inputs(&spatial, &p, &data, 0.05).unwrap()).unwrap();
        let b = bound_general_pooling(&measure_inputs(&freq, &q, &data, 0.05).unwrap()).unwrap();
        assert!((a.total - b.total).abs() < 1e-10);
        // raw spectral norm carries the sqrt(|G|) factor
        assert!((q.raw_filter_norm() / 8f64.sqrt() - p.raw_filter_norm()).abs() < 1e-12);
    }

    #[test]
    fn weight_share_model_reports_basis_norm() {
        let data = toy_data("c4", 1, 3);
        let n = 4;
        let mut dense = vec![0.0; n * n * n];
        for k in 0..2 {
            for i in 0..n {
                dense[(k * n + i) * n + i] = 1.0;
            }
        }
        let basis = SharingBasis::from_dense(n, dense).unwrap();
        let spec = ModelSpec::weight_share(data.group().clone(), basis, Pooling::Average, 1, 1).unwrap();
        let p = Params {
            u: vec![1.0],
            filters: vec![1.0, 1.0, 0.0, 0.0],
        };
        let inp = measure_inputs(&spec, &p, &data, 0.05).unwrap();
        assert!((inp.m2 - 2.0).abs() < 1e-15);
    }
}
