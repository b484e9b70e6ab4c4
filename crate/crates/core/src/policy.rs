//! Policies the simulator can run, and their JSON document form.

use serde::{Deserialize, Serialize};

use crate::action::Action;
use crate::error::PolicyError;
use crate::mdp::Mdp;
use crate::nonuniform::{NonUniformModel, NonUniformParams, NonUniformState};
use crate::solver::{PolicyTable, ThresholdSummary};
use crate::uniform::{UniformModel, UniformParams, UniformState};

/// What a policy sees at the start of a slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Observation {
    Uniform(UniformState),
    NonUniform(NonUniformState),
}

impl Observation {
    pub fn has_arrival(&self) -> bool {
        match self {
            Observation::Uniform(s) => s.has_arrival(),
            Observation::NonUniform(s) => s.has_arrival(),
        }
    }

    pub fn is_idle(&self) -> bool {
        match self {
            Observation::Uniform(s) => s.is_idle(),
            Observation::NonUniform(s) => s.is_idle(),
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Observation::Uniform(_) => "uniform",
            Observation::NonUniform(_) => "non-uniform",
        }
    }
}

/// A solver policy bound to the model it was computed on.
#[derive(Debug, Clone)]
pub struct Tabular<M> {
    model: M,
    table: PolicyTable,
}

impl<M: Mdp> Tabular<M> {
    pub fn new(model: M, table: PolicyTable) -> Result<Self, PolicyError> {
        table.validate(&model)?;
        Ok(Tabular { model, table })
    }

    pub fn model(&self) -> &M {
        &self.model
    }

    pub fn table(&self) -> &PolicyTable {
        &self.table
    }
}

#[derive(Debug, Clone)]
pub enum PolicyKind {
    TabularUniform(Tabular<UniformModel>),
    TabularNonUniform(Tabular<NonUniformModel>),
    Threshold { taus: ThresholdSummary, d: u32 },
    AlwaysSkip,
    AlwaysSwitch,
}

impl PolicyKind {
    pub fn name(&self) -> &'static str {
        match self {
            PolicyKind::TabularUniform(_) => "uniform",
            PolicyKind::TabularNonUniform(_) => "nonuniform",
            PolicyKind::Threshold { .. } => "threshold",
            PolicyKind::AlwaysSkip => "always_skip",
            PolicyKind::AlwaysSwitch => "always_switch",
        }
    }

    /// Action for `obs`. Never switches without an arrival.
    ///
    /// Tabular policies clamp the AoI to their model's `delta_max`. The
    /// threshold policy reads the epoch slots off a uniform observation as
    /// `i = delta - d - u + 1`, `j = delta - d + 1`.
    pub fn decide(&self, obs: &Observation) -> Result<Action, PolicyError> {
        if !obs.has_arrival() {
            return match (self, obs) {
                (PolicyKind::TabularUniform(_), Observation::NonUniform(_))
                | (PolicyKind::Threshold { .. }, Observation::NonUniform(_))
                | (PolicyKind::TabularNonUniform(_), Observation::Uniform(_)) => {
                    Err(self.mismatch(obs))
                }
                _ => Ok(Action::Skip),
            };
        }
        match (self, obs) {
            (PolicyKind::AlwaysSwitch, _) => Ok(Action::Switch),
            (PolicyKind::AlwaysSkip, o) => Ok(switch_if(o.is_idle())),
            (PolicyKind::Threshold { taus, d }, Observation::Uniform(s)) => {
                if s.is_idle() {
                    return Ok(Action::Switch);
                }
                if s.u >= *d || s.delta < d + s.u {
                    return Err(PolicyError::InvalidObservation(format!("{s:?} with d = {d}")));
                }
                let j = s.delta + 1 - d;
                Ok(switch_if(taus.accepts(j - s.u, j)))
            }
            (PolicyKind::TabularUniform(t), Observation::Uniform(s)) => {
                let clamped = UniformState {
                    delta: s.delta.min(t.model.params().delta_max),
                    ..*s
                };
                t.table.lookup(&t.model, &clamped).ok_or_else(|| {
                    PolicyError::InvalidObservation(format!("{s:?} is outside the policy's model"))
                })
            }
            (PolicyKind::TabularNonUniform(t), Observation::NonUniform(s)) => {
                let clamped = NonUniformState {
                    delta: s.delta.min(t.model.params().delta_max),
                    ..*s
                };
                t.table.lookup(&t.model, &clamped).ok_or_else(|| {
                    PolicyError::InvalidObservation(format!("{s:?} is outside the policy's model"))
                })
            }
            _ => Err(self.mismatch(obs)),
        }
    }

    fn mismatch(&self, obs: &Observation) -> PolicyError {
        PolicyError::ObservationMismatch {
            kind: self.name(),
            observation: obs.name(),
        }
    }
}

fn switch_if(cond: bool) -> Action {
    if cond {
        Action::Switch
    } else {
        Action::Skip
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Entry<S> {
    pub state: S,
    pub action: Action,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThresholdParams {
    pub d: u32,
    pub taus: Vec<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct NoParams {}

/// Serialized policy: `{"kind": ..., "params": {...}, "entries": [{"state": ..., "action": 0|1}]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PolicyDocument {
    Uniform {
        params: UniformParams,
        entries: Vec<Entry<UniformState>>,
    },
    Nonuniform {
        params: NonUniformParams,
        entries: Vec<Entry<NonUniformState>>,
    },
    Threshold {
        params: ThresholdParams,
        #[serde(default)]
        entries: Vec<Entry<UniformState>>,
    },
    AlwaysSkip {
        #[serde(default)]
        params: NoParams,
        #[serde(default)]
        entries: Vec<Entry<UniformState>>,
    },
    AlwaysSwitch {
        #[serde(default)]
        params: NoParams,
        #[serde(default)]
        entries: Vec<Entry<UniformState>>,
    },
}

fn entries_of<M: Mdp>(t: &Tabular<M>) -> Vec<Entry<M::State>> {
    t.model
        .states()
        .iter()
        .zip(t.table.actions())
        .map(|(&state, &action)| Entry { state, action })
        .collect()
}

fn table_from<M: Mdp>(model: &M, entries: &[Entry<M::State>]) -> Result<PolicyTable, PolicyError> {
    let n = model.num_states();
    let mut actions = vec![None; n];
    for e in entries {
        let i = model.index_of(&e.state).ok_or_else(|| {
            PolicyError::InvalidObservation(format!("entry state {:?} is outside the model", e.state))
        })?;
        actions[i] = Some(e.action);
    }
    let filled = actions.iter().flatten().count();
    if filled != n {
        return Err(PolicyError::TableSize { expected: n, got: filled });
    }
    Ok(PolicyTable::new(actions.into_iter().flatten().collect()))
}

impl From<&PolicyKind> for PolicyDocument {
    fn from(kind: &PolicyKind) -> Self {
        match kind {
            PolicyKind::TabularUniform(t) => PolicyDocument::Uniform {
                params: *t.model.params(),
                entries: entries_of(t),
            },
            PolicyKind::TabularNonUniform(t) => PolicyDocument::Nonuniform {
                params: t.model.params().clone(),
                entries: entries_of(t),
            },
            PolicyKind::Threshold { taus, d } => PolicyDocument::Threshold {
                params: ThresholdParams { d: *d, taus: taus.taus().to_vec() },
                entries: Vec::new(),
            },
            PolicyKind::AlwaysSkip => PolicyDocument::AlwaysSkip {
                params: NoParams {},
                entries: Vec::new(),
            },
            PolicyKind::AlwaysSwitch => PolicyDocument::AlwaysSwitch {
                params: NoParams {},
                entries: Vec::new(),
            },
        }
    }
}

impl TryFrom<PolicyDocument> for PolicyKind {
    type Error = PolicyError;

    fn try_from(doc: PolicyDocument) -> Result<Self, PolicyError> {
        Ok(match doc {
            PolicyDocument::Uniform { params, entries } => {
                let model = UniformModel::new(params)?;
                let table = table_from(&model, &entries)?;
                PolicyKind::TabularUniform(Tabular::new(model, table)?)
            }
            PolicyDocument::Nonuniform { params, entries } => {
                let model = NonUniformModel::new(params)?;
                let table = table_from(&model, &entries)?;
                PolicyKind::TabularNonUniform(Tabular::new(model, table)?)
            }
            PolicyDocument::Threshold { params, .. } => PolicyKind::Threshold {
                taus: ThresholdSummary::new(params.taus)?,
                d: params.d,
            },
            PolicyDocument::AlwaysSkip { .. } => PolicyKind::AlwaysSkip,
            PolicyDocument::AlwaysSwitch { .. } => PolicyKind::AlwaysSwitch,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uobs(delta: u32, u: u32, a: u8) -> Observation {
        Observation::Uniform(UniformState::new(delta, u, a))
    }

    #[test]
    fn baselines() {
        assert_eq!(PolicyKind::AlwaysSkip.decide(&uobs(15, 0, 1)), Ok(Action::Switch));
        assert_eq!(PolicyKind::AlwaysSkip.decide(&uobs(15, 3, 1)), Ok(Action::Skip));
        assert_eq!(PolicyKind::AlwaysSwitch.decide(&uobs(15, 3, 1)), Ok(Action::Switch));
        assert_eq!(PolicyKind::AlwaysSwitch.decide(&uobs(15, 3, 0)), Ok(Action::Skip));
        let nu = Observation::NonUniform(NonUniformState::new(9, 2, 8, 5));
        assert_eq!(PolicyKind::AlwaysSwitch.decide(&nu), Ok(Action::Switch));
    }

    #[test]
    fn threshold_rule() {
        let d = 10;
        let policy = PolicyKind::Threshold {
            taus: ThresholdSummary::new(vec![9, 8, 7, 6]).unwrap(),
            d,
        };
        // i = 2, j = 8: delta = j + d - 1, u = j - i
        assert_eq!(policy.decide(&uobs(17, 6, 1)), Ok(Action::Switch));
        assert_eq!(policy.decide(&uobs(18, 7, 1)), Ok(Action::Skip));
        assert_eq!(policy.decide(&uobs(40, 0, 1)), Ok(Action::Switch));
        assert!(policy
            .decide(&Observation::NonUniform(NonUniformState::new(9, 2, 8, 5)))
            .is_err());
    }

    #[test]
    fn tabular_clamps_aoi() {
        let model = UniformModel::new(UniformParams::new(3, 0.3, 10).unwrap()).unwrap();
        let table = PolicyTable::from_fn(&model, |s| switch_if(s.delta >= 10));
        let policy = PolicyKind::TabularUniform(Tabular::new(model, table).unwrap());
        assert_eq!(policy.decide(&uobs(9, 1, 1)), Ok(Action::Skip));
        assert_eq!(policy.decide(&uobs(500, 1, 1)), Ok(Action::Switch));
        assert!(matches!(
            policy.decide(&Observation::NonUniform(NonUniformState::new(9, 2, 8, 5))),
            Err(PolicyError::ObservationMismatch { .. })
        ));
    }

    #[test]
    fn document_round_trip() {
        let model = UniformModel::new(UniformParams::new(3, 0.3, 10).unwrap()).unwrap();
        let table = PolicyTable::from_fn(&model, |s| switch_if(s.u < 2));
        let policy = PolicyKind::TabularUniform(Tabular::new(model, table.clone()).unwrap());
        let doc = PolicyDocument::from(&policy);
        let json = serde_json::to_string(&doc).unwrap();
        assert!(json.starts_with(r#"{"kind":"uniform","params":{"#));
        let back: PolicyDocument = serde_json::from_str(&json).unwrap();
        match PolicyKind::try_from(back).unwrap() {
            PolicyKind::TabularUniform(t) => assert_eq!(t.table(), &table),
            other => panic!("unexpected {other:?}"),
        }

        let skip: PolicyDocument = serde_json::from_str(r#"{"kind":"always_skip"}"#).unwrap();
        assert!(matches!(PolicyKind::try_from(skip), Ok(PolicyKind::AlwaysSkip)));
        let bad: PolicyDocument = serde_json::from_str(
            r#"{"kind":"threshold","params":{"d":10,"taus":[8,9]}}"#,
        )
        .unwrap();
        assert!(PolicyKind::try_from(bad).is_err());
    }

    #[test]
    fn incomplete_table_is_rejected() {
        let params = UniformParams::new(3, 0.3, 10).unwrap();
        let doc = PolicyDocument::Uniform {
            params,
            entries: vec![Entry { state: UniformState::new(3, 0, 0), action: Action::Skip }],
        };
        assert!(matches!(
            PolicyKind::try_from(doc),
            Err(PolicyError::TableSize { got: 1, .. })
        ));
    }
}
