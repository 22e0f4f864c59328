use num_complex::Complex64;
use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;

use equibound::bounds::{self, BoundInputs, Mmax};
use equibound::data::{gen_synthetic, Dataset, SyntheticTaskSpec};
use equibound::group::{parse_group, FiniteGroup, GroupRef, GroupSignal};
use equibound::models::{self, ModelSpec, Params, Patches, Pooling, SharingBasis};
use equibound::rademacher::{self, SolverConfig};
use equibound::seed;
use equibound::spectral::{circulant_from_filter, FourierBasis, DEFAULT_SUPPORT_TOL};
use equibound::training::{self, LossKind, TrainConfig};

const GROUPS: [&str; 8] = ["c1", "c2", "c4", "c8", "c16", "d2", "d4", "d8"];
const ABELIAN: [&str; 8] = ["c1", "c3", "c8", "c16", "c2xc4", "c4xc4", "c64", "c8xc8"];

fn gaussian(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

fn signal(g: &GroupRef, c: usize, rng: &mut impl Rng) -> GroupSignal {
    GroupSignal::from_channels(g.clone(), c, gaussian(rng, g.order() * c)).unwrap()
}

fn group_strategy(list: &'static [&'static str]) -> impl Strategy<Value = GroupRef> {
    prop::sample::select(list).prop_map(|s| parse_group(s).unwrap())
}

#[test]
fn axioms_hold_for_every_small_group() {
    for n in 1..=64 {
        FiniteGroup::cyclic(n).unwrap().check_axioms().unwrap();
    }
    for n in 1..=32 {
        FiniteGroup::dihedral(n).unwrap().check_axioms().unwrap();
    }
    for spec in ["c2xc2", "c2xc4", "c4xc4", "c8xc8", "d2xc3", "d4xc2", "c3xd3", "d4xd2"] {
        let g: FiniteGroup = spec.parse().unwrap();
        assert!(g.order() <= 64);
        g.check_axioms().unwrap();
    }
}

#[test]
fn regular_perm_is_a_homomorphism_on_all_pairs() {
    for spec in ["c8", "c16", "d4", "d8", "c2xc4", "d2xc2"] {
        let g = parse_group(spec).unwrap();
        let n = g.order();
        for a in 0..n {
            let pa = g.regular_perm(a).unwrap();
            for b in 0..n {
                let pb = g.regular_perm(b).unwrap();
                let pab = g.regular_perm(g.mul(a, b)).unwrap();
                assert!((0..n).all(|h| pab[h] == pa[pb[h]]), "{spec}: ({a}, {b})");
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn regular_perm_homomorphism_large(g in group_strategy(&["c64", "d32", "c8xc8"]), s in any::<u64>()) {
        let mut rng = seed::rng(s, &[]);
        let n = g.order();
        let (a, b) = (rng.random_range(0..n), rng.random_range(0..n));
        let (pa, pb) = (g.regular_perm(a).unwrap(), g.regular_perm(b).unwrap());
        let pab = g.regular_perm(g.mul(a, b)).unwrap();
        prop_assert!((0..n).all(|h| pab[h] == pa[pb[h]]));
    }

    #[test]
    fn act_preserves_norm_bits(g in group_strategy(&GROUPS), c in 1usize..4, s in any::<u64>()) {
        let mut rng = seed::rng(s, &[]);
        let x = signal(&g, c, &mut rng);
        let a = rng.random_range(0..g.order());
        let y = g.act(a, &x).unwrap();
        prop_assert_eq!(y.norm().to_bits(), x.norm().to_bits());
        for k in 0..c {
            let mut u = x.channel(k).to_vec();
            let mut v = y.channel(k).to_vec();
            u.sort_by(f64::total_cmp);
            v.sort_by(f64::total_cmp);
            prop_assert_eq!(u, v);
        }
    }

    #[test]
    fn convolution_is_equivariant_bit_for_bit(g in group_strategy(&GROUPS), s in any::<u64>()) {
        let mut rng = seed::rng(s, &[]);
        let n = g.order();
        let w = gaussian(&mut rng, n);
        let x = signal(&g, 1, &mut rng);
        let a = rng.random_range(0..n);
        let lhs = g.convolve(&w, g.act(a, &x).unwrap().values()).unwrap();
        let y = GroupSignal::from_channels(g.clone(), 1, g.convolve(&w, x.values()).unwrap()).unwrap();
        let rhs = g.act(a, &y).unwrap();
        prop_assert!(lhs.iter().zip(rhs.values()).all(|(p, q)| p.to_bits() == q.to_bits()));
    }

    #[test]
    fn fourier_round_trip_and_parseval(g in group_strategy(&ABELIAN), s in any::<u64>()) {
        let mut rng = seed::rng(s, &[]);
        let b = FourierBasis::new(g.clone()).unwrap();
        let n = g.order();
        let x: Vec<Complex64> = (0..n).map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))).collect();
        let xh = b.fourier(&x).unwrap();
        let e0: f64 = x.iter().map(|c| c.norm_sqr()).sum();
        let e1: f64 = xh.iter().map(|c| c.norm_sqr()).sum();
        prop_assert!((e0 - e1).abs() <= 1e-12 * e0.max(1.0));
        let back = b.inverse(&xh).unwrap();
        let err = x.iter().zip(&back).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max);
        prop_assert!(err < 1e-12, "round trip error {err}");
    }

    #[test]
    fn convolution_theorem(g in group_strategy(&ABELIAN), s in any::<u64>()) {
        let mut rng = seed::rng(s, &[]);
        let b = FourierBasis::new(g.clone()).unwrap();
        let n = g.order();
        let w = gaussian(&mut rng, n);
        let x = gaussian(&mut rng, n);
        let lhs = b.fourier_real(&g.convolve(&w, &x).unwrap()).unwrap();
        let lam = b.diagonalize_circulant(&w).unwrap();
        let xh = b.fourier_real(&x).unwrap();
        for k in 0..n {
            prop_assert!((lhs[k] - lam[k] * xh[k]).norm() < 1e-10);
        }
    }

    #[test]
    fn circulant_reconstructs(g in group_strategy(&ABELIAN), s in any::<u64>()) {
        let mut rng = seed::rng(s, &[]);
        let b = FourierBasis::new(g.clone()).unwrap();
        let w = gaussian(&mut rng, g.order());
        let rec = b.reconstruct(&b.diagonalize_circulant(&w).unwrap()).unwrap();
        let dense = circulant_from_filter(&g, &w).unwrap();
        let err = rec.iter().zip(&dense).map(|(p, q)| (p - q).norm_sqr()).sum::<f64>().sqrt();
        prop_assert!(err < 1e-10);
    }

    #[test]
    fn uncertainty_holds(g in group_strategy(&["c8", "c16", "c4xc4", "c2xc4", "c64"]), s in any::<u64>(), k in 1usize..64) {
        let mut rng = seed::rng(s, &[]);
        let n = g.order();
        let mut w = vec![0.0; n];
        for _ in 0..k.min(n) {
            w[rng.random_range(0..n)] = rng.sample(StandardNormal);
        }
        if w.iter().all(|&v| v == 0.0) {
            w[0] = 1.0;
        }
        let r = FourierBasis::new(g).unwrap().uncertainty_check(&w, DEFAULT_SUPPORT_TOL).unwrap();
        prop_assert!(r.holds && r.product >= n);
    }
}

fn equivariant_specs(g: &GroupRef, c0: usize) -> Vec<ModelSpec> {
    let mut out = Vec::new();
    for pooling in Pooling::catalog() {
        out.push(ModelSpec::spatial(g.clone(), pooling, c0, 2).unwrap());
        out.push(ModelSpec::weight_share(g.clone(), SharingBasis::circulant(g), pooling, c0, 2).unwrap());
        if g.is_abelian() {
            out.push(ModelSpec::frequency(g.clone(), pooling, c0, 2).unwrap());
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn equivariant_models_are_invariant(g in group_strategy(&GROUPS), s in any::<u64>()) {
        let mut rng = seed::rng(s, &[]);
        for spec in equivariant_specs(&g, 2) {
            let p = Params::random(&spec, &mut rng);
            let x = signal(&g, 2, &mut rng);
            let a = rng.random_range(0..g.order());
            let f0 = models::forward(&spec, &p, &x).unwrap();
            let f1 = models::forward(&spec, &p, &g.act(a, &x).unwrap()).unwrap();
            prop_assert!((f0 - f1).abs() < 1e-12 * (1.0 + f0.abs()), "{spec}: {f0} vs {f1}");
        }
    }

    #[test]
    fn forward_is_positively_homogeneous(g in group_strategy(&["c4", "d3", "c2xc2"]), s in any::<u64>(), lam in 0.0f64..10.0) {
        let mut rng = seed::rng(s, &[]);
        let mut specs = equivariant_specs(&g, 2);
        specs.push(ModelSpec::weight_share(g.clone(), SharingBasis::random_orthonormal_rows(g.order(), &mut rng), Pooling::Max, 2, 2).unwrap());
        if let Ok(p) = Patches::contiguous(&g, 2) {
            specs.push(ModelSpec::local(g.clone(), p, Pooling::Average, 2, 2).unwrap());
        }
        for spec in specs {
            let p = Params::random(&spec, &mut rng);
            let x = signal(&g, 2, &mut rng);
            let f = models::forward(&spec, &p, &x).unwrap();
            let fl = models::forward(&spec, &p, &x.scaled(lam)).unwrap();
            prop_assert!((fl - lam * f).abs() <= 1e-12 * (1.0 + lam * f.abs()), "{spec}");
        }
    }

    #[test]
    fn max_and_relu_commute(z in prop::collection::vec(-10.0f64..10.0, 1..20)) {
        let relu: Vec<f64> = z.iter().map(|v| v.max(0.0)).collect();
        let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert_eq!(Pooling::Max.pool(&relu), m.max(0.0));
    }

    #[test]
    fn spatial_and_frequency_agree(g in group_strategy(&["c4", "c8", "c2xc4", "c3"]), s in any::<u64>()) {
        let mut rng = seed::rng(s, &[]);
        let spatial = ModelSpec::spatial(g.clone(), Pooling::Average, 2, 3).unwrap();
        let freq = ModelSpec::frequency(g.clone(), Pooling::Average, 2, 3).unwrap();
        let p = Params::random(&spatial, &mut rng);
        let q = models::spatial_to_frequency(&spatial, &p, &freq).unwrap();
        let x = signal(&g, 2, &mut rng);
        let a = models::forward(&spatial, &p, &x).unwrap();
        let b = models::forward(&freq, &q, &x).unwrap();
        prop_assert!((a - b).abs() < 1e-10);
        // no gain in the frequency domain once the norm is converted
        let d = Dataset::new(g.clone(), 2, vec![x.clone()], vec![1.0]).unwrap();
        let bs = bounds::bound_general_pooling(&bounds::measure_inputs(&spatial, &p, &d, 0.05).unwrap()).unwrap();
        let bf = bounds::bound_general_pooling(&bounds::measure_inputs(&freq, &q, &d, 0.05).unwrap()).unwrap();
        prop_assert!((bs.total - bf.total).abs() < 1e-10);
    }

    #[test]
    fn projection_keeps_iterates_in_ball(s in any::<u64>(), m1 in 0.1f64..3.0, m2 in 0.1f64..3.0) {
        let g = parse_group("c4").unwrap();
        let spec = ModelSpec::spatial(g.clone(), Pooling::Average, 2, 2).unwrap();
        let task = SyntheticTaskSpec {
            group: g, c0: 2, templates_per_class: 1, noise_sigma: 0.5,
            m_train: 16, m_test: 1, seed: s, augment: true,
        };
        let (train, _) = gen_synthetic(&task).unwrap();
        let cfg = TrainConfig { steps: 20, step_size: 0.1, seed: s, constraint: Some((m1, m2)), ..TrainConfig::default() };
        let out = training::train(&spec, &train, &cfg).unwrap();
        let (a, b) = out.params.norms(&spec);
        prop_assert!(a <= m1 * (1.0 + 1e-12) && b <= m2 * (1.0 + 1e-12));
        prop_assert_eq!(training::train(&spec, &train, &cfg).unwrap().params, out.params);
    }

    #[test]
    fn invariant_model_loss_is_transform_invariant(s in any::<u64>(), a in 0usize..8) {
        let g = parse_group("d4").unwrap();
        let spec = ModelSpec::spatial(g.clone(), Pooling::Average, 2, 2).unwrap();
        let task = SyntheticTaskSpec {
            group: g.clone(), c0: 2, templates_per_class: 2, noise_sigma: 1.0,
            m_train: 12, m_test: 1, seed: s, augment: true,
        };
        let (train, _) = gen_synthetic(&task).unwrap();
        let moved = train.map_inputs(|x| g.act(a, x)).unwrap();
        let p = Params::random(&spec, &mut seed::rng(s, &[9]));
        for loss in [LossKind::Hinge, LossKind::Logistic] {
            let l0 = training::empirical_loss(&spec, &p, &train, loss).unwrap();
            let l1 = training::empirical_loss(&spec, &p, &moved, loss).unwrap();
            prop_assert!((l0 - l1).abs() <= 1e-12 * (1.0 + l0.abs()));
        }
        let direct = train.inputs().iter().map(|x| x.norm()).fold(0.0, f64::max);
        prop_assert_eq!(train.b_x(), direct);
    }

    #[test]
    fn bounds_are_monotone(
        m1 in 0.01f64..10.0, m2 in 0.01f64..10.0, bx in 0.01f64..10.0,
        m in 1usize..5000, delta in 0.001f64..0.9, o in 1usize..8, mm in 0.0f64..5.0,
    ) {
        let base = BoundInputs { o_phi: Some(o), ..BoundInputs::new(m1, m2, bx, m, delta, 8) };
        let evals: [fn(&BoundInputs, f64) -> f64; 3] = [
            |i, _| bounds::bound_general_pooling(i).unwrap().total,
            |i, _| bounds::bound_locality(i).unwrap().total,
            |i, mm| bounds::bound_maxpool_from(i, &Mmax { value: mm * i.b_x * i.b_x, assignments: 1, lower_estimate: false }).unwrap().total,
        ];
        for f in evals {
            let v = f(&base, mm);
            let bigger = [
                BoundInputs { m1: m1 * 1.5, ..base },
                BoundInputs { m2: m2 * 1.5, ..base },
                BoundInputs { b_x: bx * 1.5, ..base },
            ];
            for inp in bigger {
                prop_assert!(f(&inp, mm) >= v);
            }
            let more = BoundInputs { m: m + 1, ..base };
            prop_assert!(f(&more, mm) <= v);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn rademacher_estimate_grows_with_radii(s in any::<u64>()) {
        let g = parse_group("c4").unwrap();
        let d = rademacher::make_positive_orthant_dataset(g.clone(), 2, 8, 1.0, s).unwrap();
        let spec = ModelSpec::spatial(g, Pooling::Average, 2, 2).unwrap();
        let cfg = SolverConfig { restarts: 2, steps: 60, decay_every: 20, ..SolverConfig::default() };
        let small = rademacher::estimate_rc(&spec, 0.5, 1.0, &d, 6, &cfg, s).unwrap();
        let wide_u = rademacher::estimate_rc(&spec, 1.0, 1.0, &d, 6, &cfg, s).unwrap();
        let wide_w = rademacher::estimate_rc(&spec, 0.5, 2.0, &d, 6, &cfg, s).unwrap();
        prop_assert!(wide_u.mean >= small.mean);
        prop_assert!(wide_w.mean >= small.mean);
    }

    #[test]
    fn khintchine_floor_holds(s in any::<u64>(), m in 4usize..64) {
        let g = parse_group("c4").unwrap();
        let d = rademacher::make_positive_orthant_dataset(g, 2, m, 1.0, s).unwrap();
        let w = rademacher::lower_bound_witness(&d, 1.0, 1.0, 64, s).unwrap();
        prop_assert!(w.unnormalized >= w.khintchine_floor - 3.0 * w.unnormalized_se);
    }
}

#[test]
fn random_orthonormal_sharing_breaks_invariance() {
    let g = parse_group("c4").unwrap();
    let mut rng = seed::rng(21, &[]);
    let spec = ModelSpec::weight_share(g.clone(), SharingBasis::random_orthonormal_rows(4, &mut rng), Pooling::Average, 1, 2).unwrap();
    let p = Params::random(&spec, &mut rng);
    let x = signal(&g, 1, &mut rng);
    let f0 = models::forward(&spec, &p, &x).unwrap();
    let worst = (1..4)
        .map(|a| (models::forward(&spec, &p, &g.act(a, &x).unwrap()).unwrap() - f0).abs())
        .fold(0.0, f64::max);
    assert!(worst > 1e-6, "expected a shift that changes the output, max change {worst}");
}
