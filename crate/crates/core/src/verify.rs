//! Self-check suites behind `equibound verify`.
//!
//! Each check returns a short detail string on success, or the first
//! counterexample it found.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::bounds::{self, BoundInputs, MmaxMode};
use crate::data::Dataset;
use crate::group::{parse_group, FiniteGroup, GroupRef, GroupSignal, Subgroup};
use crate::models::{self, ModelSpec, Params, Patches, Pooling, SharingBasis};
use crate::rademacher::{self, SolverConfig};
use crate::seed;
use crate::spectral::{circulant_from_filter, FourierBasis, DEFAULT_SUPPORT_TOL};
use crate::training::{self, LossKind, TrainConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scope {
    Group,
    Spectral,
    Models,
    Training,
    Bounds,
    Rademacher,
    All,
}

impl Scope {
    pub const NAMES: [&'static str; 7] = ["group", "spectral", "models", "training", "bounds", "rademacher", "all"];
}

impl FromStr for Scope {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "group" => Scope::Group,
            "spectral" => Scope::Spectral,
            "models" => Scope::Models,
            "training" => Scope::Training,
            "bounds" => Scope::Bounds,
            "rademacher" => Scope::Rademacher,
            "all" => Scope::All,
            _ => return Err(format!("unknown scope {s:?}; expected one of {}", Scope::NAMES.join(", "))),
        })
    }
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let i = [
            Scope::Group,
            Scope::Spectral,
            Scope::Models,
            Scope::Training,
            Scope::Bounds,
            Scope::Rademacher,
            Scope::All,
        ]
        .iter()
        .position(|s| s == self)
        .unwrap();
        f.write_str(Scope::NAMES[i])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub outcome: Result<String, String>,
}

impl CheckResult {
    pub fn passed(&self) -> bool {
        self.outcome.is_ok()
    }
}

type Check = fn(u64) -> Result<String, String>;

const GROUPS: [&str; 8] = ["c1", "c2", "c4", "c8", "c16", "d2", "d4", "d8"];
const ABELIAN: [&str; 9] = ["c1", "c2", "c8", "c16", "c2xc4", "c4xc4", "c64", "c8xc8", "c4xc16"];

fn groups(list: &[&str]) -> Vec<GroupRef> {
    list.iter().map(|s| parse_group(s).expect("built-in spec")).collect()
}

fn gaussian(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

fn signal(g: &GroupRef, c: usize, rng: &mut impl Rng) -> GroupSignal {
    GroupSignal::from_channels(g.clone(), c, gaussian(rng, g.order() * c)).expect("finite")
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn group_axioms(_: u64) -> Result<String, String> {
    let specs = ["c1", "c2", "c3", "c8", "c16", "d1", "d2", "d3", "d4", "d8", "c2xc4", "c4xc4", "d2xc3"];
    for s in specs {
        let g: FiniteGroup = s.parse().map_err(|e| format!("{s}: {e}"))?;
        g.check_axioms().map_err(|e| format!("{s}: {e}"))?;
    }
    Ok(format!("{} groups", specs.len()))
}

fn group_action(seed_: u64) -> Result<String, String> {
    let mut rng = seed::rng(seed_, &[1]);
    for g in groups(&GROUPS) {
        let n = g.order();
        for _ in 0..10 {
            let (a, b) = (rng.random_range(0..n), rng.random_range(0..n));
            let x = signal(&g, 2, &mut rng);
            let lhs = g.act(a, &g.act(b, &x).unwrap()).unwrap();
            let rhs = g.act(g.mul(a, b), &x).unwrap();
            ensure(lhs == rhs, || format!("{}: act({a}, act({b}, x)) != act({a}{b}, x)", g.spec_string()))?;
        }
    }
    Ok("homomorphism on 8 groups".into())
}

fn group_conv_equivariance(seed_: u64) -> Result<String, String> {
    let mut rng = seed::rng(seed_, &[2]);
    for g in groups(&GROUPS) {
        let n = g.order();
        for _ in 0..100 {
            let w = gaussian(&mut rng, n);
            let x = gaussian(&mut rng, n);
            let a = rng.random_range(0..n);
            let perm = g.regular_perm(a).unwrap();
            let mut gx = vec![0.0; n];
            for h in 0..n {
                gx[perm[h]] = x[h];
            }
            let lhs = g.convolve(&w, &gx).unwrap();
            let y = g.convolve(&w, &x).unwrap();
            for h in 0..n {
                ensure(lhs[perm[h]].to_bits() == y[h].to_bits(), || {
                    format!("{}: convolution not equivariant at g = {a}, h = {h}", g.spec_string())
                })?;
            }
        }
    }
    Ok("bit-exact on 8 groups".into())
}

fn group_restriction(seed_: u64) -> Result<String, String> {
    let mut rng = seed::rng(seed_, &[3]);
    let ambient = parse_group("c8").unwrap();
    for s in ["c1", "c2", "c4", "c8"] {
        let sub = Subgroup::embed(parse_group(s).unwrap(), ambient.clone()).map_err(|e| e.to_string())?;
        let x = signal(&ambient, 2, &mut rng);
        for h in 0..sub.sub.order() {
            let lhs = sub.restrict(&ambient.act(sub.embed[h], &x).unwrap()).unwrap();
            let rhs = sub.sub.act(h, &sub.restrict(&x).unwrap()).unwrap();
            ensure(lhs == rhs, || format!("{s} < c8: restriction does not commute with h = {h}"))?;
        }
    }
    Ok("c1, c2, c4, c8 inside c8".into())
}

fn spectral_unitarity(_: u64) -> Result<String, String> {
    for g in groups(&ABELIAN) {
        let b = FourierBasis::new(g.clone()).map_err(|e| e.to_string())?;
        let n = g.order();
        for i in 0..n {
            for j in 0..n {
                let dot: num_complex::Complex64 = (0..n).map(|p| b.entry(i, p) * b.entry(j, p).conj()).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                ensure((dot.re - want).abs() < 1e-10 && dot.im.abs() < 1e-10, || {
                    format!("{}: <F_{i}, F_{j}> = {dot}", g.spec_string())
                })?;
            }
        }
    }
    Ok(format!("{} abelian groups", ABELIAN.len()))
}

fn spectral_parseval_and_circulant(seed_: u64) -> Result<String, String> {
    let mut rng = seed::rng(seed_, &[4]);
    for g in groups(&ABELIAN) {
        let b = FourierBasis::new(g.clone()).map_err(|e| e.to_string())?;
        let n = g.order();
        for _ in 0..100 {
            let w = gaussian(&mut rng, n);
            let wn2: f64 = w.iter().map(|v| v * v).sum();
            let xh = b.fourier_real(&w).unwrap();
            let e2: f64 = xh.iter().map(|c| c.norm_sqr()).sum();
            ensure((e2 - wn2).abs() < 1e-10 * wn2.max(1.0), || format!("{}: Parseval {e2} vs {wn2}", g.spec_string()))?;
            let lam = b.diagonalize_circulant(&w).unwrap();
            let l2: f64 = lam.iter().map(|c| c.norm_sqr()).sum();
            ensure((l2 - n as f64 * wn2).abs() < 1e-10 * (n as f64 * wn2).max(1.0), || {
                format!("{}: eigenvalue energy {l2} vs |G| |w|^2 = {}", g.spec_string(), n as f64 * wn2)
            })?;
            let rec: Vec<f64> = b.reconstruct(&lam).unwrap().iter().map(|c| c.re).collect();
            let dense = circulant_from_filter(&g, &w).unwrap();
            let err = rec.iter().zip(&dense).map(|(a, c)| (a - c).powi(2)).sum::<f64>().sqrt();
            ensure(err < 1e-10, || format!("{}: |F* D F - W|_F = {err:e}", g.spec_string()))?;
        }
    }
    Ok("Parseval, eigenvalue energy, reconstruction".into())
}

fn spectral_uncertainty(seed_: u64) -> Result<String, String> {
    let mut rng = seed::rng(seed_, &[5]);
    let mut count = 0;
    for g in groups(&["c8", "c16", "c4xc4"]) {
        let b = FourierBasis::new(g.clone()).unwrap();
        let n = g.order();
        for t in 0..167 {
            // sparse random filters probe small supports
            let k = 1 + t % n;
            let mut w = vec![0.0; n];
            for _ in 0..k {
                w[rng.random_range(0..n)] = rng.sample(StandardNormal);
            }
            if w.iter().all(|&v| v == 0.0) {
                w[0] = 1.0;
            }
            let r = b.uncertainty_check(&w, DEFAULT_SUPPORT_TOL).unwrap();
            ensure(r.holds, || format!("{}: support {} x {} < {n}", g.spec_string(), r.spatial, r.spectral))?;
            count += 1;
        }
        let mut delta = vec![0.0; n];
        delta[0] = 1.0;
        let r = b.uncertainty_check(&delta, DEFAULT_SUPPORT_TOL).unwrap();
        ensure(r.product == n, || format!("{}: delta filter product {}", g.spec_string(), r.product))?;
        let r = b.uncertainty_check(&vec![1.0; n], DEFAULT_SUPPORT_TOL).unwrap();
        ensure(r.product == n, || format!("{}: constant filter product {}", g.spec_string(), r.product))?;
    }
    Ok(format!("{count} filters, equality at delta and constant"))
}

fn invariance_specs(g: &GroupRef) -> Vec<ModelSpec> {
    let mut out = Vec::new();
    for pooling in Pooling::catalog() {
        out.push(ModelSpec::spatial(g.clone(), pooling, 2, 3).unwrap());
        out.push(ModelSpec::weight_share(g.clone(), SharingBasis::circulant(g), pooling, 2, 3).unwrap());
        if g.is_abelian() {
            out.push(ModelSpec::frequency(g.clone(), pooling, 2, 3).unwrap());
        }
    }
    out
}

fn models_invariance(seed_: u64) -> Result<String, String> {
    let mut rng = seed::rng(seed_, &[6]);
    let mut worst: f64 = 0.0;
    for g in groups(&GROUPS) {
        let specs = invariance_specs(&g);
        for _ in 0..100 {
            for spec in &specs {
                let p = Params::random(&spec, &mut rng);
                let x = signal(&g, 2, &mut rng);
                let a = rng.random_range(0..g.order());
                let f0 = models::forward(spec, &p, &x).map_err(|e| e.to_string())?;
                let f1 = models::forward(spec, &p, &g.act(a, &x).unwrap()).map_err(|e| e.to_string())?;
                worst = worst.max((f0 - f1).abs());
                ensure((f0 - f1).abs() < 1e-10, || format!("{spec}: g = {a} changes output by {:e}", (f0 - f1).abs()))?;
            }
        }
    }
    Ok(format!("max deviation {worst:.1e}"))
}

fn models_variants_agree(seed_: u64) -> Result<String, String> {
    let mut rng = seed::rng(seed_, &[7]);
    for g in groups(&["c4", "c8", "c2xc4"]) {
        let spatial = ModelSpec::spatial(g.clone(), Pooling::Average, 2, 3).unwrap();
        let freq = ModelSpec::frequency(g.clone(), Pooling::Average, 2, 3).unwrap();
        let ws = ModelSpec::weight_share(g.clone(), SharingBasis::circulant(&g), Pooling::Average, 2, 3).unwrap();
        let p = Params::random(&spatial, &mut rng);
        let q = models::spatial_to_frequency(&spatial, &p, &freq).unwrap();
        let x = signal(&g, 2, &mut rng);
        let a = models::forward(&spatial, &p, &x).unwrap();
        let b = models::forward(&freq, &q, &x).unwrap();
        let c = models::forward(&ws, &p, &x).unwrap();
        ensure((a - b).abs() < 1e-10 && (a - c).abs() < 1e-10, || {
            format!("{}: spatial {a}, frequency {b}, weight-share {c}", g.spec_string())
        })?;
    }
    Ok("spatial = frequency = circulant weight sharing".into())
}

fn training_gradients(seed_: u64) -> Result<String, String> {
    let mut rng = seed::rng(seed_, &[8]);
    let c4 = parse_group("c4").unwrap();
    let d3 = parse_group("d3").unwrap();
    let specs = [
        ModelSpec::spatial(d3.clone(), Pooling::Average, 2, 3).unwrap(),
        ModelSpec::frequency(c4.clone(), Pooling::Max, 2, 3).unwrap(),
        ModelSpec::weight_share(d3.clone(), SharingBasis::random_orthonormal_rows(6, &mut rng), Pooling::Average, 2, 3)
            .unwrap(),
        ModelSpec::local(c4.clone(), Patches::contiguous(&c4, 2).unwrap(), Pooling::Max, 2, 3).unwrap(),
    ];
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for spec in &specs {
        for loss in [LossKind::Hinge, LossKind::Logistic].into_iter().flat_map(|l| [l; 25]) {
            let y = if count % 2 == 0 { 1.0 } else { -1.0 };
            count += 1;
            let p = Params::random(spec, &mut rng);
            let x = signal(spec.group(), 2, &mut rng);
            let (_, g) = training::grad(spec, &p, &x, y, loss).map_err(|e| e.to_string())?;
            let mut d = Params::random(spec, &mut rng);
            d.symmetrize(spec);
            let eval = |t: f64| {
                let mut q = p.clone();
                q.axpy(t, &d);
                loss.value(models::forward(spec, &q, &x).unwrap(), y)
            };
            let fd = (eval(h) - eval(-h)) / (2.0 * h);
            let an: f64 = g.u.iter().zip(&d.u).chain(g.filters.iter().zip(&d.filters)).map(|(a, b)| a * b).sum();
            let rel = (fd - an).abs() / an.abs().max(1e-8);
            let rel = if an.abs() < 1e-8 { (fd - an).abs() } else { rel };
            worst = worst.max(rel);
            ensure(rel < 1e-5, || format!("{spec} {loss}: directional derivative {an} vs finite difference {fd}"))?;
        }
    }
    Ok(format!("{count} points, worst relative error {worst:.1e}"))
}

fn training_projection(_: u64) -> Result<String, String> {
    let g = parse_group("c4").unwrap();
    let spec = ModelSpec::spatial(g, Pooling::Average, 1, 2).unwrap();
    let p = Params {
        u: vec![6.0, 8.0],
        filters: vec![1.0; 8],
    };
    let q = training::project_norm_ball(&spec, &p, 5.0, 1.0);
    ensure(q.u_norm() == 5.0, || format!("|u| = {} after projection to 5", q.u_norm()))?;
    ensure((q.raw_filter_norm() - 1.0).abs() < 1e-15, || "filter norm off".into())?;
    ensure(training::project_norm_ball(&spec, &q, 5.0, 1.0) == q, || "projection not idempotent".into())?;
    Ok("radial, exact, idempotent".into())
}

fn training_toy(seed_: u64) -> Result<String, String> {
    let g = parse_group("c2").unwrap();
    let x = |a: f64, b: f64| GroupSignal::from_channels(g.clone(), 1, vec![a, b]).unwrap();
    let data = Dataset::new(g.clone(), 1, vec![x(1.0, 0.5), x(-1.0, -0.5)], vec![1.0, -1.0]).unwrap();
    let spec = ModelSpec::spatial(g.clone(), Pooling::Average, 1, 4).unwrap();
    let cfg = TrainConfig {
        steps: 500,
        step_size: 0.05,
        loss: LossKind::Hinge,
        seed: seed_,
        ..TrainConfig::default()
    };
    let a = training::train(&spec, &data, &cfg).map_err(|e| e.to_string())?;
    let b = training::train(&spec, &data, &cfg).map_err(|e| e.to_string())?;
    ensure(a.params == b.params, || "training is not deterministic".into())?;
    let loss = training::empirical_loss(&spec, &a.params, &data, LossKind::Hinge).map_err(|e| e.to_string())?;
    ensure(loss < 0.01, || format!("final hinge loss {loss}"))?;
    Ok(format!("final hinge loss {loss:.2e}"))
}

fn bounds_arithmetic(_: u64) -> Result<String, String> {
    let r = bounds::bound_general_pooling(&BoundInputs::new(2.0, 3.0, 1.0, 100, 0.05, 8)).map_err(|e| e.to_string())?;
    let want = 1.2 + 4.0 * (2.0 * 80f64.ln() / 100.0).sqrt();
    ensure((r.total - want).abs() < 1e-9, || format!("total {} vs {want}", r.total))?;
    let q = bounds::bound_general_pooling(&BoundInputs::new(2.0, 3.0, 1.0, 400, 0.05, 8)).unwrap();
    ensure(2.0 * q.complexity_term == r.complexity_term, || "m -> 4m does not halve".into())?;
    Ok(format!("total = {:.6}", r.total))
}

fn bounds_maxpool(seed_: u64) -> Result<String, String> {
    let mut rng = seed::rng(seed_, &[9]);
    let g = parse_group("c4").unwrap();
    let one = [signal(&g, 2, &mut rng)];
    let mm = bounds::mmax(&one, MmaxMode::Exact).map_err(|e| e.to_string())?;
    let b2 = one[0].norm().powi(2);
    ensure((mm.value - b2).abs() <= 1e-12 * b2, || format!("m = 1: M^max {} vs b_x^2 {b2}", mm.value))?;
    let xs: Vec<GroupSignal> = (0..4).map(|_| signal(&g, 2, &mut rng)).collect();
    let exact = bounds::mmax(&xs, MmaxMode::Exact).unwrap();
    let sampled = bounds::mmax(&xs, MmaxMode::Sampled { k: 1000, seed: seed_ }).unwrap();
    let gap = (exact.value - sampled.value) / exact.value;
    ensure(sampled.value <= exact.value * (1.0 + 1e-12) && gap < 0.05, || {
        format!("sampled {} vs exact {}", sampled.value, exact.value)
    })?;
    Ok(format!("sampled/exact gap {gap:.1e}"))
}

fn bounds_weight_share(seed_: u64) -> Result<String, String> {
    let mut rng = seed::rng(seed_, &[10]);
    let g = parse_group("d4").unwrap();
    let w = gaussian(&mut rng, 8 * 6);
    let norm = models::l2(&w);
    for (name, basis) in [
        ("circulant", SharingBasis::circulant(&g)),
        ("orthonormal rows", SharingBasis::random_orthonormal_rows(8, &mut rng)),
    ] {
        let b = bounds::weight_share_norm(&basis, &w);
        ensure((b - norm).abs() < 1e-12, || format!("{name}: |w|_B = {b}, |w| = {norm}"))?;
    }
    let n = 3;
    let mut data = vec![0.0; n * n * n];
    for k in 0..2 {
        for i in 0..n {
            data[(k * n + i) * n + i] = 1.0;
        }
    }
    let repeated = SharingBasis::from_dense(n, data).expect("finite");
    let b = bounds::weight_share_norm(&repeated, &[1.0, 1.0, 0.0]);
    ensure(b > 2f64.sqrt(), || format!("repeated rows: |w|_B = {b} not above sqrt 2"))?;
    Ok("|w|_B = |w| for circulant and orthonormal rows, larger for repeated rows".into())
}

fn bounds_locality(_: u64) -> Result<String, String> {
    for n in [4usize, 8, 16] {
        let g = parse_group(&format!("c{n}")).unwrap();
        for w in 1..=n {
            let o = Patches::contiguous(&g, w).map_err(|e| e.to_string())?.overlap();
            ensure(o == w, || format!("c{n}, width {w}: O_phi = {o}"))?;
            let base = BoundInputs::new(1.5, 0.7, 2.0, 64, 0.05, n);
            let general = bounds::bound_general_pooling(&base).unwrap().complexity_term;
            let local = bounds::bound_locality(&BoundInputs { o_phi: Some(o), ..base }).map_err(|e| e.to_string())?;
            let want = (w as f64 / n as f64).sqrt() * general;
            ensure(local.complexity_term == want, || {
                format!("c{n}, width {w}: locality term {} vs {want}", local.complexity_term)
            })?;
        }
    }
    Ok("O_phi = width and sqrt(width/|G|) scaling on c4, c8, c16".into())
}

fn rademacher_zero_ball(seed_: u64) -> Result<String, String> {
    let g = parse_group("c4").unwrap();
    let d = rademacher::make_positive_orthant_dataset(g.clone(), 2, 8, 1.0, seed_).map_err(|e| e.to_string())?;
    let spec = ModelSpec::spatial(g, Pooling::Average, 2, 2).unwrap();
    let est = rademacher::estimate_rc(&spec, 0.0, 1.0, &d, 4, &SolverConfig::default(), seed_).map_err(|e| e.to_string())?;
    ensure(est.mean == 0.0, || format!("M1 = 0 gives {}", est.mean))?;
    Ok("M1 = 0 gives exactly 0".into())
}

fn rademacher_sandwich(seed_: u64) -> Result<String, String> {
    let g = parse_group("c4").unwrap();
    let d = rademacher::make_positive_orthant_dataset(g.clone(), 2, 16, 1.0, seed_).map_err(|e| e.to_string())?;
    let spec = ModelSpec::spatial(g, Pooling::Average, 2, 4).unwrap();
    let cfg = SolverConfig {
        restarts: 2,
        steps: 100,
        decay_every: 40,
        ..SolverConfig::default()
    };
    let est = rademacher::estimate_rc(&spec, 1.0, 1.0, &d, 16, &cfg, seed_).map_err(|e| e.to_string())?;
    let w = rademacher::lower_bound_witness(&d, 1.0, 1.0, 64, seed_).map_err(|e| e.to_string())?;
    let upper = d.b_x() / 4.0;
    ensure(est.mean <= upper + 3.0 * est.std_error, || format!("estimate {} above {upper}", est.mean))?;
    ensure(w.certified <= est.mean + 2.0 * (est.std_error + w.certified_se), || {
        format!("witness {} above estimate {}", w.certified, est.mean)
    })?;
    ensure(w.unnormalized >= w.khintchine_floor - 3.0 * w.unnormalized_se, || {
        format!("Khintchine: {} below {}", w.unnormalized, w.khintchine_floor)
    })?;
    Ok(format!("{:.4} <= {:.4} <= {upper:.4}", w.certified, est.mean))
}

fn checks(scope: Scope) -> Vec<(&'static str, Check)> {
    let group: Vec<(&'static str, Check)> = vec![
        ("group.axioms", group_axioms),
        ("group.action", group_action),
        ("group.convolution_equivariance", group_conv_equivariance),
        ("group.subgroup_restriction", group_restriction),
    ];
    let spectral: Vec<(&'static str, Check)> = vec![
        ("spectral.unitarity", spectral_unitarity),
        ("spectral.parseval_circulant", spectral_parseval_and_circulant),
        ("spectral.uncertainty", spectral_uncertainty),
    ];
    let models: Vec<(&'static str, Check)> = vec![
        ("models.invariance", models_invariance),
        ("models.variants_agree", models_variants_agree),
    ];
    let training: Vec<(&'static str, Check)> = vec![
        ("training.gradients", training_gradients),
        ("training.projection", training_projection),
        ("training.toy_convergence", training_toy),
    ];
    let bounds: Vec<(&'static str, Check)> = vec![
        ("bounds.arithmetic", bounds_arithmetic),
        ("bounds.locality", bounds_locality),
        ("bounds.maxpool", bounds_maxpool),
        ("bounds.weight_share", bounds_weight_share),
    ];
    let rademacher: Vec<(&'static str, Check)> = vec![
        ("rademacher.zero_ball", rademacher_zero_ball),
        ("rademacher.sandwich", rademacher_sandwich),
    ];
    match scope {
        Scope::Group => group,
        Scope::Spectral => spectral,
        Scope::Models => models,
        Scope::Training => training,
        Scope::Bounds => bounds,
        Scope::Rademacher => rademacher,
        Scope::All => [group, spectral, models, training, bounds, rademacher].concat(),
    }
}

pub fn run(scope: Scope, seed_: u64) -> Vec<CheckResult> {
    checks(scope)
        .into_iter()
        .map(|(name, f)| {
            log::info!("running {name}");
            CheckResult {
                name: name.to_string(),
                outcome: f(seed_),
            }
        })
        .collect()
}

/// Parses a whitespace-separated square Cayley table and checks the group
/// axioms.
pub fn check_table_text(text: &str) -> CheckResult {
    let outcome = (|| {
        let entries = text
            .split_whitespace()
            .map(|t| t.parse::<usize>().map_err(|e| format!("bad entry {t:?}: {e}")))
            .collect::<Result<Vec<_>, _>>()?;
        let n = (entries.len() as f64).sqrt().round() as usize;
        if n * n != entries.len() || n == 0 {
            return Err(format!("{} entries do not form a square table", entries.len()));
        }
        FiniteGroup::from_table(n, entries).map_err(|e| e.to_string())?;
        Ok(format!("valid group of order {n}"))
    })();
    CheckResult {
        name: "group.table".into(),
        outcome,
    }
}

pub fn render_table(results: &[CheckResult]) -> String {
    let width = results.iter().map(|r| r.name.len()).max().unwrap_or(5).max(5);
    let mut s = format!("{:<width$}  {:<6}  detail\n", "check", "status");
    for r in results {
        let (status, detail) = match &r.outcome {
            Ok(d) => ("PASS", d.as_str()),
            Err(e) => ("FAIL", e.as_str()),
        };
        s.push_str(&format!("{:<width$}  {:<6}  {detail}\n", r.name, status));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fast_scopes_pass() {
        for scope in [Scope::Group, Scope::Spectral, Scope::Bounds] {
            let r = run(scope, 1);
            assert!(r.iter().all(CheckResult::passed), "{}", render_table(&r));
        }
    }

    #[test]
    fn faulty_table_names_the_triple() {
        let n = 6;
        let mut t: Vec<usize> = (0..n * n).map(|i| (i / n + i % n) % n).collect();
        // swap an intercalate: keeps the table latin, breaks associativity
        t[n + 1] = 5;
        t[n + 4] = 2;
        t[4 * n + 1] = 2;
        t[4 * n + 4] = 5;
        let text: String = t.chunks(n).map(|r| r.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ") + "\n").collect();
        let r = check_table_text(&text);
        let msg = r.outcome.unwrap_err();
        assert!(msg.contains("associativity fails for ("), "{msg}");
        assert!(check_table_text("0 1\n1 0\n").passed());
        assert!(!check_table_text("0 1 1").passed());
    }

    #[test]
    fn scope_names_round_trip() {
        for name in Scope::NAMES {
            assert_eq!(name.parse::<Scope>().unwrap().to_string(), name);
        }
        assert!("nope".parse::<Scope>().is_err());
    }
}
