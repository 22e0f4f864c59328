//! Labelled datasets of group signals, synthetic G-invariant tasks, CSV
//! dumps and raw IDX ingestion.

mod csv;
pub mod idx;
mod synthetic;

use thiserror::Error;

use crate::group::{GroupError, GroupRef, GroupSignal, Subgroup};

pub use self::csv::{read_csv, write_csv};
pub use idx::{load_idx_pair, IdxImages};
pub use synthetic::{gen_synthetic, lift_to_group, sample_split, Lift, SyntheticTaskSpec};

#[derive(Debug, Error)]
pub enum DataError {
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error("dataset is empty")]
    Empty,
    #[error("{inputs} inputs but {labels} labels")]
    LengthMismatch { inputs: usize, labels: usize },
    #[error("label {0} at row {1} is not -1 or +1")]
    BadLabel(f64, usize),
    #[error("input {0} has {1} channels, dataset has {2}")]
    Channels(usize, usize, usize),
    #[error("invalid synthetic task: {0}")]
    Spec(String),
    #[error("csv line {line}: {msg}")]
    Csv { line: usize, msg: String },
    #[error("idx format: {0}")]
    IdxFormat(String),
    #[error("idx payload truncated: expected {expected} bytes, found {found}")]
    IdxTruncated { expected: usize, found: usize },
    #[error("idx images/labels count mismatch: {images} images, {labels} labels")]
    IdxPairing { images: usize, labels: usize },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Inputs with `+-1` labels and the cached bound `b_x = max_i |x_i|`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    group: GroupRef,
    channels: usize,
    inputs: Vec<GroupSignal>,
    labels: Vec<f64>,
    b_x: f64,
}

impl Dataset {
    pub fn new(
        group: GroupRef,
        channels: usize,
        inputs: Vec<GroupSignal>,
        labels: Vec<f64>,
    ) -> Result<Self, DataError> {
        if inputs.is_empty() {
            return Err(DataError::Empty);
        }
        if inputs.len() != labels.len() {
            return Err(DataError::LengthMismatch {
                inputs: inputs.len(),
                labels: labels.len(),
            });
        }
        for (i, (x, &y)) in inputs.iter().zip(&labels).enumerate() {
            x.check_group(&group)?;
            if x.channels() != channels {
                return Err(DataError::Channels(i, x.channels(), channels));
            }
            if y != 1.0 && y != -1.0 {
                return Err(DataError::BadLabel(y, i));
            }
        }
        let mut d = Dataset {
            group,
            channels,
            inputs,
            labels,
            b_x: 0.0,
        };
        d.refresh();
        Ok(d)
    }

    fn refresh(&mut self) {
        self.b_x = self.inputs.iter().map(GroupSignal::norm).fold(0.0, f64::max);
    }

    pub fn group(&self) -> &GroupRef {
        &self.group
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn inputs(&self) -> &[GroupSignal] {
        &self.inputs
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn b_x(&self) -> f64 {
        self.b_x
    }

    pub fn push(&mut self, x: GroupSignal, y: f64) -> Result<(), DataError> {
        x.check_group(&self.group)?;
        if x.channels() != self.channels {
            return Err(DataError::Channels(self.len(), x.channels(), self.channels));
        }
        if y != 1.0 && y != -1.0 {
            return Err(DataError::BadLabel(y, self.len()));
        }
        self.inputs.push(x);
        self.labels.push(y);
        self.refresh();
        Ok(())
    }

    /// Applies `f` to every input, keeping labels.
    pub fn map_inputs<F>(&self, f: F) -> Result<Dataset, DataError>
    where
        F: FnMut(&GroupSignal) -> Result<GroupSignal, GroupError>,
    {
        let inputs = self.inputs.iter().map(f).collect::<Result<Vec<_>, _>>()?;
        let group = inputs[0].group().clone();
        let channels = inputs[0].channels();
        Dataset::new(group, channels, inputs, self.labels.clone())
    }

    /// First `m` samples.
    pub fn truncated(&self, m: usize) -> Result<Dataset, DataError> {
        Dataset::new(
            self.group.clone(),
            self.channels,
            self.inputs[..m.min(self.len())].to_vec(),
            self.labels[..m.min(self.len())].to_vec(),
        )
    }

    /// Coset-blocked view over a subgroup.
    pub fn restrict(&self, sub: &Subgroup) -> Result<Dataset, DataError> {
        self.map_inputs(|x| sub.restrict(x))
    }
}
