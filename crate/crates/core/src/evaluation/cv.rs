use serde::{Deserialize, Serialize};

use crate::agents::PerceptState;
use crate::error::{ensure_dim, Error, Result};
use crate::learners::{LearnerConfig, OnlineLinearModel};
use crate::rng::{self, Purpose};

/// Row indices of one cross-validation split, each list sorted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Stratified k-fold split.
///
/// Each class is shuffled and dealt round-robin over the folds; the dealing
/// position carries over from one class to the next so total fold sizes also
/// differ by at most one.
pub fn stratified_kfold<S: AsRef<str>>(labels: &[S], k: usize, seed: u64) -> Result<Vec<Fold>> {
    if k < 2 {
        return Err(Error::Config(format!("k must be at least 2, got {k}")));
    }
    let mut classes: Vec<&str> = labels.iter().map(AsRef::as_ref).collect();
    classes.sort_unstable();
    classes.dedup();
    let mut tests: Vec<Vec<usize>> = vec![Vec::new(); k];
    let mut next = 0;
    for (ci, class) in classes.iter().enumerate() {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i].as_ref() == *class).collect();
        if members.len() < k {
            return Err(Error::ClassTooSmall {
                class: (*class).to_owned(),
                count: members.len(),
                k,
            });
        }
        let order = rng::permutation(members.len(), seed, Purpose::Folds, ci as u32);
        members = order.into_iter().map(|o| members[o]).collect();
        for i in members {
            tests[next].push(i);
            next = (next + 1) % k;
        }
    }
    let n = labels.len();
    Ok(tests
        .into_iter()
        .map(|mut test| {
            test.sort_unstable();
            let mut in_test = vec![false; n];
            for &i in &test {
                in_test[i] = true;
            }
            Fold {
                train: (0..n).filter(|&i| !in_test[i]).collect(),
                test,
            }
        })
        .collect())
}

pub fn accuracy<A: AsRef<str>, B: AsRef<str>>(truth: &[A], predicted: &[B]) -> Result<f64> {
    ensure_dim(truth.len(), predicted.len())?;
    if truth.is_empty() {
        return Err(Error::Data("accuracy of an empty sample".into()));
    }
    let hits = truth
        .iter()
        .zip(predicted)
        .filter(|(t, p)| t.as_ref() == p.as_ref())
        .count();
    Ok(hits as f64 / truth.len() as f64)
}

/// `counts[i][j]` = rows of true class `i` predicted as class `j`.
pub fn confusion<A: AsRef<str>, B: AsRef<str>>(classes: &[String], truth: &[A], predicted: &[B]) -> Vec<Vec<u64>> {
    let mut counts = vec![vec![0u64; classes.len()]; classes.len()];
    let index = |label: &str| classes.iter().position(|c| c == label);
    for (t, p) in truth.iter().zip(predicted) {
        if let (Some(i), Some(j)) = (index(t.as_ref()), index(p.as_ref())) {
            counts[i][j] += 1;
        }
    }
    counts
}

/// A learner used on its own: min-max normalization from the training rows,
/// then `epochs` shuffled passes of `partial_fit`.
///
/// Epoch `e` visits the rows in the order of shuffle stream `e`, so a
/// one-epoch baseline sees exactly the sequence an agent system trained with
/// the same seed sees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearBaseline {
    percept: PerceptState,
    model: OnlineLinearModel,
    epochs: u32,
}

impl LinearBaseline {
    pub fn fit<S: AsRef<str>>(
        config: LearnerConfig,
        features: &[Vec<f64>],
        labels: &[S],
        epochs: u32,
        seed: u64,
    ) -> Result<Self> {
        if features.is_empty() {
            return Err(Error::Data("cannot fit on an empty dataset".into()));
        }
        ensure_dim(features.len(), labels.len())?;
        if epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        let p = features[0].len();
        let mut percept = PerceptState::new(p);
        for row in features {
            percept.observe(row)?;
        }
        percept.freeze();
        let normalized = features
            .iter()
            .map(|r| percept.normalize(r))
            .collect::<Result<Vec<_>>>()?;
        let mut classes: Vec<&str> = labels.iter().map(AsRef::as_ref).collect();
        classes.sort_unstable();
        classes.dedup();
        let mut model = OnlineLinearModel::new(config, p, &classes)?;
        for epoch in 0..epochs {
            for i in rng::permutation(features.len(), seed, Purpose::Shuffle, epoch) {
                model.partial_fit(&normalized[i], labels[i].as_ref())?;
            }
        }
        Ok(LinearBaseline { percept, model, epochs })
    }

    pub fn from_parts(percept: PerceptState, model: OnlineLinearModel, epochs: u32) -> Result<Self> {
        ensure_dim(percept.dim(), model.dim())?;
        Ok(LinearBaseline { percept, model, epochs })
    }

    pub fn percept(&self) -> &PerceptState {
        &self.percept
    }

    pub fn model(&self) -> &OnlineLinearModel {
        &self.model
    }

    pub fn epochs(&self) -> u32 {
        self.epochs
    }

    pub fn predict(&self, raw: &[f64]) -> Result<String> {
        let x = self.percept.normalize(raw)?;
        self.model.predict(&x).map(str::to_owned)
    }
}
