//! The explore/exploit lifecycle of the agent population.
//!
//! One exploration cycle runs: percept update and normalization, activation,
//! proposals, Head selection, feedback to every activated agent, then
//! resolution of the non-cooperative situations (NCS) among the activated
//! agents. When nothing is activated the cycle is an incompetence NCS and a
//! new agent is created around the point.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::agents::{head_select, ContextAgent, FeedbackOutcome, PerceptState, Proposal, SystemParams};
use crate::error::{ensure_dim, ensure_finite, Error, Result};
use crate::geometry::{Hypercube, Retraction};
use crate::learners::{LearnerConfig, OnlineLinearModel};
use crate::rng::{self, Purpose};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemState {
    params: SystemParams,
    learner: LearnerConfig,
    percept: PerceptState,
    /// Sorted by id; ids are assigned in creation order.
    agents: Vec<ContextAgent>,
    next_id: u64,
    cycle: u64,
}

/// What happened during one exploration cycle.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CycleReport {
    /// The system's answer before learning from the point, if it had one.
    pub prediction: Option<String>,
    pub incompetence: u32,
    pub competition: u32,
    pub conflict: u32,
    pub created: Option<u64>,
    pub removed: Vec<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum PairResolution {
    Absorbed,
    Pushed,
    Destroyed,
}

impl SystemState {
    pub fn new(params: SystemParams, learner: LearnerConfig, dim: usize) -> Result<Self> {
        params.validate()?;
        if dim == 0 {
            return Err(Error::Config("dimension must be at least 1".into()));
        }
        Ok(SystemState {
            params,
            learner,
            percept: PerceptState::new(dim),
            agents: Vec::new(),
            next_id: 0,
            cycle: 0,
        })
    }

    /// Reassemble a state from persisted parts.
    pub fn from_parts(
        params: SystemParams,
        learner: LearnerConfig,
        percept: PerceptState,
        mut agents: Vec<ContextAgent>,
        cycle: u64,
    ) -> Result<Self> {
        params.validate()?;
        agents.sort_by_key(|a| a.id);
        if agents.windows(2).any(|w| w[0].id == w[1].id) {
            return Err(Error::Data("duplicate agent id".into()));
        }
        for a in &agents {
            ensure_dim(percept.dim(), a.zone.dim())?;
            ensure_dim(percept.dim(), a.model.dim())?;
        }
        let next_id = agents.last().map_or(0, |a| a.id + 1);
        Ok(SystemState {
            params,
            learner,
            percept,
            agents,
            next_id,
            cycle,
        })
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    pub fn learner(&self) -> &LearnerConfig {
        &self.learner
    }

    pub fn percept(&self) -> &PerceptState {
        &self.percept
    }

    pub fn set_percept(&mut self, percept: PerceptState) -> Result<()> {
        ensure_dim(self.dim(), percept.dim())?;
        self.percept = percept;
        Ok(())
    }

    pub fn agents(&self) -> &[ContextAgent] {
        &self.agents
    }

    pub fn agent(&self, id: u64) -> Option<&ContextAgent> {
        self.position(id).map(|i| &self.agents[i])
    }

    pub fn cycle(&self) -> u64 {
        self.cycle
    }

    pub fn dim(&self) -> usize {
        self.percept.dim()
    }

    /// Insert an agent with the given zone and model, bypassing exploration.
    pub fn seed_agent(&mut self, zone: Hypercube, model: OnlineLinearModel) -> Result<u64> {
        ensure_dim(self.dim(), zone.dim())?;
        let id = self.next_id;
        self.agents.push(ContextAgent::new(id, zone, model)?);
        self.next_id += 1;
        Ok(id)
    }

    fn position(&self, id: u64) -> Option<usize> {
        self.agents.binary_search_by_key(&id, |a| a.id).ok()
    }

    fn score_of(&self, idx: usize) -> f64 {
        self.agents[idx].score(&self.params)
    }

    fn activated(&self, x: &[f64]) -> Vec<usize> {
        // dimensions were checked by the caller
        self.agents
            .iter()
            .enumerate()
            .filter(|(_, a)| a.zone.contains(x).unwrap_or(false))
            .map(|(i, _)| i)
            .collect()
    }

    /// Label chosen for an already-normalized point, without mutation.
    fn decide(&self, x: &[f64]) -> Result<String> {
        if self.agents.is_empty() {
            return Err(Error::NoAgents);
        }
        let active = self.activated(x);
        if !active.is_empty() {
            let proposals = active
                .iter()
                .map(|&i| {
                    let a = &self.agents[i];
                    Ok(Proposal {
                        agent_id: a.id,
                        label: a.model.predict(x)?,
                        score: self.score_of(i),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            return head_select(&proposals).map(str::to_owned);
        }
        let mut nearest = 0;
        let mut nearest_dist = f64::INFINITY;
        for (i, a) in self.agents.iter().enumerate() {
            let d = a.zone.distance_to_point(x)?;
            // agents are in id order, so equal distance and score keep the lower id
            if d < nearest_dist || (d == nearest_dist && self.score_of(i) > self.score_of(nearest)) {
                nearest = i;
                nearest_dist = d;
            }
        }
        self.agents[nearest].model.predict(x).map(str::to_owned)
    }

    /// Classify a raw point. Never mutates the state.
    pub fn exploit(&self, raw: &[f64]) -> Result<String> {
        ensure_dim(self.dim(), raw.len())?;
        if self.agents.is_empty() {
            return Err(Error::NoAgents);
        }
        let x = self.percept.normalize(raw)?;
        self.decide(&x)
    }

    /// One learning cycle on a labelled raw observation.
    pub fn explore(&mut self, raw: &[f64], label: &str) -> Result<CycleReport> {
        ensure_dim(self.dim(), raw.len())?;
        ensure_finite(raw)?;
        self.percept.observe(raw)?;
        let x = self.percept.normalize(raw)?;
        let mut report = CycleReport::default();

        let active = self.activated(&x);
        if active.is_empty() {
            report.prediction = self.decide(&x).ok();
            self.resolve_incompetence(&x, label, &mut report)?;
        } else {
            let mut proposed: BTreeMap<u64, String> = BTreeMap::new();
            let mut proposals = Vec::with_capacity(active.len());
            for &i in &active {
                let a = &self.agents[i];
                proposed.insert(a.id, a.model.predict(&x)?.to_owned());
            }
            for &i in &active {
                let id = self.agents[i].id;
                proposals.push(Proposal {
                    agent_id: id,
                    label: proposed[&id].as_str(),
                    score: self.score_of(i),
                });
            }
            report.prediction = Some(head_select(&proposals)?.to_owned());

            for (&id, guess) in &proposed {
                let idx = self.position(id).expect("activated agent exists");
                let params = self.params;
                if self.agents[idx].apply_feedback(&x, label, guess, &params)? == FeedbackOutcome::Destroyed {
                    self.agents.remove(idx);
                    report.removed.push(id);
                }
            }

            self.resolve_activated(&proposed, &mut report)?;

            // every wrong proposer may have excluded the point
            if self.activated(&x).is_empty() {
                self.resolve_incompetence(&x, label, &mut report)?;
                // an activated agent that absorbed the newcomer may overlap again
                self.resolve_activated(&proposed, &mut report)?;
            }
        }
        self.cycle += 1;
        Ok(report)
    }

    /// Create an agent around `x` and settle its overlaps with existing agents.
    fn resolve_incompetence(&mut self, x: &[f64], label: &str, report: &mut CycleReport) -> Result<()> {
        let zone = Hypercube::around(x, self.params.r)?;
        let mut model = OnlineLinearModel::new(self.learner, self.dim(), &[label])?;
        model.partial_fit(x, label)?;
        let new_id = self.seed_agent(zone, model)?;
        report.incompetence += 1;
        report.created = Some(new_id);

        let others: Vec<u64> = self.agents.iter().map(|a| a.id).filter(|&id| id != new_id).collect();
        for other in others {
            let (Some(n), Some(o)) = (self.position(new_id), self.position(other)) else {
                continue;
            };
            if self.agents[n].zone.intersection_volume(&self.agents[o].zone)? <= 0.0 {
                continue;
            }
            let same = self.agents[n].model.predict(x)? == self.agents[o].model.predict(x)?;
            self.resolve_pair(new_id, other, same, report)?;
            if self.position(new_id).is_none() {
                break;
            }
        }
        Ok(())
    }

    /// Pairwise competition/conflict resolution among this cycle's activated
    /// agents, in ascending id order, repeated until no pair overlaps.
    fn resolve_activated(&mut self, proposed: &BTreeMap<u64, String>, report: &mut CycleReport) -> Result<()> {
        let ids: Vec<u64> = proposed.keys().copied().collect();
        loop {
            let mut grew = false;
            for (k, &a) in ids.iter().enumerate() {
                for &b in &ids[k + 1..] {
                    let (Some(ia), Some(ib)) = (self.position(a), self.position(b)) else {
                        continue;
                    };
                    if self.agents[ia].zone.intersection_volume(&self.agents[ib].zone)? <= 0.0 {
                        continue;
                    }
                    let same = proposed[&a] == proposed[&b];
                    if self.resolve_pair(a, b, same, report)? == PairResolution::Absorbed {
                        grew = true;
                    }
                }
            }
            // only absorption can re-create overlaps with already separated pairs
            if !grew {
                return Ok(());
            }
        }
    }

    fn resolve_pair(&mut self, a: u64, b: u64, same_class: bool, report: &mut CycleReport) -> Result<PairResolution> {
        let ia = self.position(a).expect("agent exists");
        let ib = self.position(b).expect("agent exists");
        let (sa, sb) = (self.score_of(ia), self.score_of(ib));
        let (win, lose) = if sa > sb || (sa == sb && a < b) {
            (ia, ib)
        } else {
            (ib, ia)
        };

        if same_class {
            report.competition += 1;
            if let Some(threshold) = self.params.overlap {
                if self.agents[win].zone.overlap_index(&self.agents[lose].zone)? > threshold {
                    let merged = self.agents[win].zone.bounding_union(&self.agents[lose].zone)?;
                    self.agents[win].zone = merged;
                    let gone = self.agents.remove(lose);
                    report.removed.push(gone.id);
                    return Ok(PairResolution::Absorbed);
                }
            }
        } else {
            report.conflict += 1;
        }

        match self.agents[lose].zone.pushed_by(&self.agents[win].zone)? {
            Retraction::Retracted(zone) => {
                self.agents[lose].zone = zone;
                Ok(PairResolution::Pushed)
            }
            Retraction::Destroyed => {
                let gone = self.agents.remove(lose);
                report.removed.push(gone.id);
                Ok(PairResolution::Destroyed)
            }
        }
    }

    /// Batch training: extrema pre-pass (unless the percept is already frozen),
    /// then one exploration cycle per observation in seeded shuffled order.
    pub fn fit<S: AsRef<str>>(&mut self, features: &[Vec<f64>], labels: &[S], seed: u64) -> Result<TrainingLog> {
        if features.is_empty() {
            return Err(Error::Data("cannot fit on an empty dataset".into()));
        }
        ensure_dim(features.len(), labels.len())?;
        for row in features {
            ensure_dim(self.dim(), row.len())?;
            ensure_finite(row)?;
        }
        if !self.percept.is_frozen() {
            let mut percept = PerceptState::new(self.dim());
            for row in features {
                percept.observe(row)?;
            }
            percept.freeze();
            self.percept = percept;
        }
        let order = rng::permutation(features.len(), seed, Purpose::Shuffle, 0);
        let mut log = TrainingLog::default();
        let mut totals = CycleRecord::default();
        let mut correct = 0u64;
        for (step, &i) in order.iter().enumerate() {
            let label = labels[i].as_ref();
            let report = self.explore(&features[i], label)?;
            if report.prediction.as_deref() == Some(label) {
                correct += 1;
            }
            totals.ncs_incompetence += u64::from(report.incompetence);
            totals.ncs_competition += u64::from(report.competition);
            totals.ncs_conflict += u64::from(report.conflict);
            log.records.push(CycleRecord {
                cycle: self.cycle,
                n_agents: self.agents.len(),
                running_accuracy: correct as f64 / (step + 1) as f64,
                ..totals
            });
        }
        Ok(log)
    }
}

/// Per-cycle training trace. NCS counts are cumulative; the running accuracy
/// scores the system's answer before it learned from each point.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CycleRecord {
    pub cycle: u64,
    pub n_agents: usize,
    pub ncs_incompetence: u64,
    pub ncs_competition: u64,
    pub ncs_conflict: u64,
    pub running_accuracy: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingLog {
    pub records: Vec<CycleRecord>,
}

impl TrainingLog {
    pub fn last(&self) -> Option<&CycleRecord> {
        self.records.last()
    }

    /// One JSON object per line.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        for r in &self.records {
            serde_json::to_writer(&mut out, r)?;
            out.write_all(b"\n").map_err(|e| Error::io("<training log>", e))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::LearnerConfig;

    const PA: LearnerConfig = LearnerConfig::Pa1 { c: 1.0 };

    fn cube(lower: &[f64], upper: &[f64]) -> Hypercube {
        Hypercube::new(lower.to_vec(), upper.to_vec()).unwrap()
    }

    fn unit_state(params: SystemParams) -> SystemState {
        let mut s = SystemState::new(params, PA, 2).unwrap();
        s.set_percept(PerceptState::with_extrema(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap())
            .unwrap();
        s
    }

    fn trained_model(label: &str, x: &[f64]) -> OnlineLinearModel {
        let mut m = OnlineLinearModel::new(PA, x.len(), &[label]).unwrap();
        m.partial_fit(x, label).unwrap();
        m
    }

    #[test]
    fn first_point_creates_one_agent() {
        let params = SystemParams {
            r: 0.1,
            ..Default::default()
        };
        let mut s = SystemState::new(params, PA, 2).unwrap();
        let report = s.explore(&[3.0, 4.0], "A").unwrap();
        assert_eq!(report.incompetence, 1);
        assert_eq!(report.prediction, None);
        assert_eq!(s.agents().len(), 1);
        // a single observation normalizes to the center on every axis
        assert_eq!(s.agents()[0].zone, cube(&[0.4, 0.4], &[0.6, 0.6]));
        assert!((s.agents()[0].zone.volume() - 0.04).abs() < 1e-12);
        assert_eq!(s.cycle(), 1);
    }

    #[test]
    fn new_zone_is_not_clipped() {
        let mut s = unit_state(SystemParams {
            r: 0.2,
            ..Default::default()
        });
        s.explore(&[0.0, 1.0], "A").unwrap();
        assert_eq!(s.agents()[0].zone, cube(&[-0.2, 0.8], &[0.2, 1.2]));
    }

    #[test]
    fn correct_activation_grows_and_rewards() {
        let params = SystemParams {
            r: 0.1,
            alpha: 0.1,
            ..Default::default()
        };
        let mut s = unit_state(params);
        s.explore(&[0.5, 0.5], "A").unwrap();
        let v0 = s.agents()[0].zone.volume();
        let report = s.explore(&[0.52, 0.5], "A").unwrap();
        assert_eq!(report.prediction.as_deref(), Some("A"));
        assert_eq!(report.incompetence, 0);
        assert!((s.agents()[0].zone.volume() / v0 - 1.1).abs() < 1e-12);
        assert_eq!(s.agents()[0].confidence, 1.0);
    }

    #[test]
    fn competition_above_threshold_absorbs() {
        let params = SystemParams {
            overlap: Some(0.5),
            alpha: 0.0,
            ..Default::default()
        };
        let mut s = unit_state(params);
        let a = s
            .seed_agent(cube(&[0.0, 0.0], &[1.0, 1.0]), trained_model("A", &[0.5, 0.5]))
            .unwrap();
        let b = s
            .seed_agent(cube(&[0.4, 0.0], &[1.4, 1.0]), trained_model("A", &[0.5, 0.5]))
            .unwrap();
        assert!(
            s.agent(a)
                .unwrap()
                .zone
                .overlap_index(&s.agent(b).unwrap().zone)
                .unwrap()
                > 0.5
        );
        let report = s.explore(&[0.5, 0.5], "A").unwrap();
        assert_eq!(report.competition, 1);
        assert_eq!(s.agents().len(), 1);
        // equal scores: the lower id wins and takes the hull
        assert_eq!(s.agents()[0].id, a);
        assert_eq!(s.agents()[0].zone, cube(&[0.0, 0.0], &[1.4, 1.0]));
    }

    #[test]
    fn competition_below_threshold_pushes() {
        let params = SystemParams {
            overlap: Some(0.5),
            alpha: 0.0,
            ..Default::default()
        };
        let mut s = unit_state(params);
        s.seed_agent(cube(&[0.0, 0.0], &[1.0, 1.0]), trained_model("A", &[0.5, 0.5]))
            .unwrap();
        s.seed_agent(cube(&[0.7, 0.0], &[1.7, 1.0]), trained_model("A", &[0.8, 0.5]))
            .unwrap();
        let report = s.explore(&[0.8, 0.5], "A").unwrap();
        assert_eq!(report.competition, 1);
        assert_eq!(s.agents().len(), 2);
        assert_eq!(s.agents()[1].zone, cube(&[1.0, 0.0], &[1.7, 1.0]));
    }

    #[test]
    fn conflict_higher_score_pushes() {
        let params = SystemParams {
            alpha: 0.0,
            ..Default::default()
        };
        let mut s = unit_state(params);
        s.seed_agent(cube(&[0.0, 0.0], &[0.6, 1.0]), trained_model("A", &[0.5, 0.5]))
            .unwrap();
        s.seed_agent(cube(&[0.4, 0.0], &[1.0, 1.0]), trained_model("B", &[0.5, 0.5]))
            .unwrap();
        let report = s.explore(&[0.5, 0.5], "A").unwrap();
        assert_eq!(report.conflict, 1);
        let (winner, loser) = (&s.agents()[0], &s.agents()[1]);
        assert!(winner.confidence > loser.confidence);
        assert_eq!(winner.zone.intersection_volume(&loser.zone).unwrap(), 0.0);
        assert_eq!(loser.zone, cube(&[0.6, 0.0], &[1.0, 1.0]));
    }

    #[test]
    fn conflict_destroys_contained_loser() {
        let params = SystemParams {
            alpha: 0.0,
            ..Default::default()
        };
        let mut s = unit_state(params);
        s.seed_agent(cube(&[0.0, 0.0], &[1.0, 1.0]), trained_model("A", &[0.5, 0.5]))
            .unwrap();
        s.seed_agent(cube(&[0.4, 0.4], &[0.6, 0.6]), trained_model("B", &[0.5, 0.5]))
            .unwrap();
        let report = s.explore(&[0.5, 0.5], "A").unwrap();
        assert_eq!(report.removed, vec![1]);
        assert_eq!(s.agents().len(), 1);
    }

    #[test]
    fn incompetence_new_agent_resolves_overlap() {
        let params = SystemParams {
            r: 0.2,
            alpha: 0.0,
            ..Default::default()
        };
        let mut s = unit_state(params);
        let old = s
            .seed_agent(cube(&[0.0, 0.0], &[0.5, 1.0]), trained_model("B", &[0.2, 0.5]))
            .unwrap();
        // give the old agent a track record so it wins
        s.explore(&[0.2, 0.5], "B").unwrap();
        let report = s.explore(&[0.6, 0.5], "A").unwrap();
        assert_eq!(report.incompetence, 1);
        assert_eq!(report.conflict, 1);
        let new = report.created.unwrap();
        let old_zone = &s.agent(old).unwrap().zone;
        let new_zone = &s.agent(new).unwrap().zone;
        assert_eq!(old_zone.intersection_volume(new_zone).unwrap(), 0.0);
        assert!(new_zone.contains(&[0.6, 0.5]).unwrap());
    }

    #[test]
    fn exclusion_of_every_proposer_creates_agent() {
        let params = SystemParams {
            exclusion: true,
            ..Default::default()
        };
        let mut s = unit_state(params);
        s.seed_agent(cube(&[0.0, 0.0], &[1.0, 1.0]), trained_model("A", &[0.5, 0.5]))
            .unwrap();
        let report = s.explore(&[0.3, 0.3], "B").unwrap();
        assert_eq!(report.incompetence, 1);
        assert!(s.agents().iter().any(|a| a.zone.contains(&[0.3, 0.3]).unwrap()));
    }

    #[test]
    fn exploit_uses_nearest_agent_outside_coverage() {
        let mut s = unit_state(SystemParams::default());
        assert!(matches!(s.exploit(&[0.5, 0.5]), Err(Error::NoAgents)));
        s.seed_agent(cube(&[0.0, 0.0], &[0.2, 0.2]), trained_model("A", &[0.1, 0.1]))
            .unwrap();
        s.seed_agent(cube(&[0.8, 0.8], &[1.0, 1.0]), trained_model("B", &[0.9, 0.9]))
            .unwrap();
        assert_eq!(s.exploit(&[0.1, 0.1]).unwrap(), "A");
        assert_eq!(s.exploit(&[0.7, 0.6]).unwrap(), "B");
        assert_eq!(s.exploit(&[0.3, 0.25]).unwrap(), "A");
        // equidistant: equal scores fall back to the lower id
        assert_eq!(s.exploit(&[0.5, 0.5]).unwrap(), "A");
    }

    #[test]
    fn exploit_is_pure() {
        let mut s = unit_state(SystemParams::default());
        s.explore(&[0.5, 0.5], "A").unwrap();
        let before = serde_json::to_string(&s).unwrap();
        let a = s.exploit(&[0.9, 0.1]).unwrap();
        let b = s.exploit(&[0.9, 0.1]).unwrap();
        assert_eq!(a, b);
        assert_eq!(serde_json::to_string(&s).unwrap(), before);
    }

    #[test]
    fn non_finite_input_leaves_state_unchanged() {
        let mut s = unit_state(SystemParams::default());
        s.explore(&[0.5, 0.5], "A").unwrap();
        let before = s.clone();
        assert!(s.explore(&[f64::NAN, 0.5], "A").is_err());
        assert_eq!(s, before);
    }

    #[test]
    fn fit_single_point() {
        let mut s = SystemState::new(SystemParams::default(), PA, 2).unwrap();
        let log = s.fit(&[vec![1.0, 2.0]], &["A"], 1).unwrap();
        assert_eq!(s.agents().len(), 1);
        assert_eq!(log.records.len(), 1);
        assert_eq!(log.last().unwrap().ncs_incompetence, 1);
        let empty: Vec<Vec<f64>> = Vec::new();
        assert!(s.fit::<&str>(&empty, &[], 1).is_err());
    }

    #[test]
    fn training_log_is_line_delimited() {
        let mut s = SystemState::new(SystemParams::default(), PA, 1).unwrap();
        let log = s.fit(&[vec![0.0], vec![1.0], vec![0.5]], &["a", "b", "a"], 3).unwrap();
        let mut buf = Vec::new();
        log.write_jsonl(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 3);
        let first: CycleRecord = serde_json::from_str(text.lines().next().unwrap()).unwrap();
        assert_eq!(first.cycle, 1);
    }
}
