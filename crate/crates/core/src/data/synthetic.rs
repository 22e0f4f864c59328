use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use super::{DataError, Dataset};
use crate::group::{GroupError, GroupRef, GroupSignal};
use crate::seed;

const STREAM_TEMPLATES: u64 = 0;
const STREAM_TRAIN: u64 = 1;
const STREAM_TEST: u64 = 2;

/// Template-based binary task over a group.
///
/// Each class owns `templates_per_class` Gaussian templates with unit
/// variance entries. A sample picks a template of its class, adds
/// `N(0, noise_sigma^2)` noise per entry and, when `augment` is set, applies a
/// uniformly random group element. Labels alternate `+1, -1`, so classes are
/// balanced.
#[derive(Debug, Clone)]
pub struct SyntheticTaskSpec {
    pub group: GroupRef,
    pub c0: usize,
    pub templates_per_class: usize,
    pub noise_sigma: f64,
    pub m_train: usize,
    pub m_test: usize,
    pub seed: u64,
    pub augment: bool,
}

impl SyntheticTaskSpec {
    fn validate(&self) -> Result<(), DataError> {
        if self.templates_per_class == 0 {
            return Err(DataError::Spec("templates_per_class must be >= 1".into()));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(DataError::Spec("noise_sigma must be finite and >= 0".into()));
        }
        if self.m_train == 0 || self.m_test == 0 {
            return Err(DataError::Spec("m_train and m_test must be >= 1".into()));
        }
        if self.c0 == 0 {
            return Err(DataError::Spec("c0 must be >= 1".into()));
        }
        Ok(())
    }

    /// Templates indexed `[class][t]`, class 0 labelled `+1`.
    fn templates(&self) -> Vec<Vec<Vec<f64>>> {
        let mut rng = seed::rng(self.seed, &[STREAM_TEMPLATES]);
        let dim = self.group.order() * self.c0;
        (0..2)
            .map(|_| {
                (0..self.templates_per_class)
                    .map(|_| (0..dim).map(|_| rng.sample(StandardNormal)).collect())
                    .collect()
            })
            .collect()
    }
}

/// One drawn sample with the group element that was applied to it.
#[derive(Debug, Clone)]
pub struct Sample {
    pub x: GroupSignal,
    pub label: f64,
    pub transform: usize,
}

fn draw(spec: &SyntheticTaskSpec, stream: u64, m: usize) -> Result<Vec<Sample>, DataError> {
    let templates = spec.templates();
    let mut rng = seed::rng(spec.seed, &[stream]);
    let noise = Normal::new(0.0, spec.noise_sigma).map_err(|e| DataError::Spec(e.to_string()))?;
    let n = spec.group.order();
    (0..m)
        .map(|i| {
            let class = i % 2;
            let t = rng.random_range(0..spec.templates_per_class);
            let values: Vec<f64> = templates[class][t]
                .iter()
                .map(|&v| v + noise.sample(&mut rng))
                .collect();
            let g = if spec.augment { rng.random_range(0..n) } else { 0 };
            let base = GroupSignal::from_channels(spec.group.clone(), spec.c0, values)?;
            Ok(Sample {
                x: spec.group.act(g, &base)?,
                label: if class == 0 { 1.0 } else { -1.0 },
                transform: g,
            })
        })
        .collect()
}

/// Raw samples of the training (`test = false`) or test split, with the
/// applied transforms.
pub fn sample_split(spec: &SyntheticTaskSpec, test: bool) -> Result<Vec<Sample>, DataError> {
    spec.validate()?;
    if test {
        draw(spec, STREAM_TEST, spec.m_test)
    } else {
        draw(spec, STREAM_TRAIN, spec.m_train)
    }
}

/// Generates `(train, test)` from independent seed streams that share the
/// class templates.
pub fn gen_synthetic(spec: &SyntheticTaskSpec) -> Result<(Dataset, Dataset), DataError> {
    let build = |samples: Vec<Sample>| {
        let (inputs, labels) = samples.into_iter().map(|s| (s.x, s.label)).unzip();
        Dataset::new(spec.group.clone(), spec.c0, inputs, labels)
    };
    Ok((build(sample_split(spec, false)?)?, build(sample_split(spec, true)?)?))
}

/// Fixed random linear map from a raw feature vector to a group signal.
///
/// The projection does not make raw-space transformations act as group
/// shifts; it only gives external data the right shape.
#[derive(Debug, Clone)]
pub struct Lift {
    group: GroupRef,
    c0: usize,
    dim: usize,
    /// `(|G| c0) x dim`, row-major, entries `N(0, 1/dim)`.
    matrix: Vec<f64>,
}

impl Lift {
    pub fn new(group: GroupRef, c0: usize, dim: usize, seed: u64) -> Self {
        let rows = group.order() * c0;
        let mut rng = seed::rng(seed, &[]);
        let scale = 1.0 / (dim.max(1) as f64).sqrt();
        let matrix = (0..rows * dim)
            .map(|_| rng.sample::<f64, _>(StandardNormal) * scale)
            .collect();
        Lift {
            group,
            c0,
            dim,
            matrix,
        }
    }

    pub fn apply(&self, raw: &[f64]) -> Result<GroupSignal, GroupError> {
        if raw.len() != self.dim {
            return Err(GroupError::ShapeMismatch {
                expected: self.dim,
                found: raw.len(),
            });
        }
        let values = self
            .matrix
            .chunks(self.dim)
            .map(|row| row.iter().zip(raw).map(|(a, b)| a * b).sum())
            .collect();
        GroupSignal::from_channels(self.group.clone(), self.c0, values)
    }
}

pub fn lift_to_group(raw: &[f64], group: GroupRef, c0: usize, seed: u64) -> Result<GroupSignal, GroupError> {
    Lift::new(group, c0, raw.len(), seed).apply(raw)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::parse_group;

    fn task(augment: bool, noise: f64) -> SyntheticTaskSpec {
        SyntheticTaskSpec {
            group: parse_group("c4").unwrap(),
            c0: 2,
            templates_per_class: 1,
            noise_sigma: noise,
            m_train: 40,
            m_test: 10,
            seed: 17,
            augment,
        }
    }

    #[test]
    fn noiseless_unaugmented_has_two_points() {
        let (train, _) = gen_synthetic(&task(false, 0.0)).unwrap();
        let mut distinct: Vec<&[f64]> = Vec::new();
        for x in train.inputs() {
            if !distinct.contains(&x.values()) {
                distinct.push(x.values());
            }
        }
        assert_eq!(distinct.len(), 2);
    }

    #[test]
    fn shapes_and_balance() {
        let mut t = task(true, 0.3);
        t.m_train = 3;
        let (train, test) = gen_synthetic(&t).unwrap();
        assert_eq!(train.len(), 3);
        assert_eq!(test.len(), 10);
        for x in train.inputs() {
            assert_eq!((x.group().order(), x.channels()), (4, 2));
        }
        assert_eq!(test.labels().iter().sum::<f64>(), 0.0);
    }

    #[test]
    fn zero_sizes_rejected() {
        let mut t = task(true, 0.1);
        t.m_train = 0;
        assert!(gen_synthetic(&t).is_err());
        let mut t = task(true, 0.1);
        t.templates_per_class = 0;
        assert!(gen_synthetic(&t).is_err());
    }

    #[test]
    fn seeded_generation_is_reproducible() {
        let a = gen_synthetic(&task(true, 0.5)).unwrap();
        let b = gen_synthetic(&task(true, 0.5)).unwrap();
        assert_eq!(a, b);
        let mut other = task(true, 0.5);
        other.seed += 1;
        assert_ne!(gen_synthetic(&other).unwrap().0, a.0);
    }

    #[test]
    fn lift_is_linear_and_fixed() {
        let g = parse_group("c4").unwrap();
        let lift = Lift::new(g.clone(), 3, 5, 99);
        let a = [0.1, -0.4, 2.0, 0.0, 1.5];
        let b = [1.0, 0.3, -0.7, 0.25, 0.0];
        let sum: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
        let la = lift.apply(&a).unwrap();
        let lb = lift.apply(&b).unwrap();
        let ls = lift.apply(&sum).unwrap();
        for i in 0..12 {
            assert!((ls.values()[i] - la.values()[i] - lb.values()[i]).abs() < 1e-12);
        }
        assert!(lift.apply(&[0.0; 5]).unwrap().values().iter().all(|&v| v == 0.0));
        assert_eq!(lift_to_group(&a, g.clone(), 3, 99).unwrap(), la);
        assert!(lift.apply(&[0.0; 4]).is_err());
    }
}
