use crate::group::{FiniteGroup, GroupKind};

use super::ModelError;

/// One index subset `S_l` per group position, all of equal width.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Patches {
    order: usize,
    width: usize,
    sets: Vec<Vec<usize>>,
    overlap: usize,
}

impl Patches {
    pub fn new(order: usize, sets: Vec<Vec<usize>>) -> Result<Self, ModelError> {
        if sets.len() != order {
            return Err(ModelError::Patches(format!(
                "expected {order} patches, found {}",
                sets.len()
            )));
        }
        let width = sets.first().map_or(0, Vec::len);
        if width == 0 || sets.iter().any(|s| s.len() != width) {
            return Err(ModelError::Patches("patches must share one nonzero width".into()));
        }
        let mut counts = vec![0usize; order];
        for s in &sets {
            for &i in s {
                if i >= order {
                    return Err(ModelError::Patches(format!("index {i} out of range")));
                }
                counts[i] += 1;
            }
        }
        let overlap = counts.into_iter().max().unwrap_or(0);
        Ok(Patches {
            order,
            width,
            sets,
            overlap,
        })
    }

    /// `S_l = {l, l+1, ..., l+width-1} mod |G|` on a cyclic group.
    pub fn contiguous(group: &FiniteGroup, width: usize) -> Result<Self, ModelError> {
        if !matches!(group.kind(), GroupKind::Cyclic(_)) {
            return Err(ModelError::Patches(format!(
                "contiguous patches need a cyclic group, got {}",
                group.spec_string()
            )));
        }
        let n = group.order();
        if width == 0 || width > n {
            return Err(ModelError::Patches(format!(
                "patch width {width} outside 1..={n}"
            )));
        }
        let sets = (0..n)
            .map(|l| (0..width).map(|t| (l + t) % n).collect())
            .collect();
        Self::new(n, sets)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn sets(&self) -> &[Vec<usize>] {
        &self.sets
    }

    /// `O_Phi`: largest number of patches containing any single coordinate.
    pub fn overlap(&self) -> usize {
        self.overlap
    }

    /// `sqrt(O_Phi / |G|)`.
    pub fn locality_factor(&self) -> f64 {
        (self.overlap as f64 / self.order as f64).sqrt()
    }
}
